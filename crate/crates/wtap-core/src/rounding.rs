//! Rounding fractional piece solutions into integral covers, and the full
//! approximation pipeline that ties the LP engine, the decomposition and the
//! per-piece rounding together.
//!
//! Each piece is rounded twice — once by shifting in-link mass upward and
//! solving the resulting up/cross instance exactly, once by solving every
//! subtree hanging off the piece's center exactly — and the cheaper outcome
//! is kept. Both methods carry explicit cost budgets that are enforced at
//! runtime: a violated budget is reported as a `PropertyFailure` rather than
//! silently degrading the guarantee.

use std::collections::{BTreeMap, BTreeSet};
use std::time::Instant;

use num_traits::{Signed, Zero};

use crate::bundle::{bundle_constraint, bundle_opt, edge_set_opt, is_gamma_bundle};
use crate::decompose::{decompose, find_beta_center, Piece};
use crate::error::{Error, Result};
use crate::exact::{solve_up_cross_exact, ExactOutcome};
use crate::instance::{
    AlgorithmParams, EdgeId, FractionalSolution, LinkClass, LinkId, NodeId, WtapInstance,
};
use crate::lp::{solve_with_separation, LinearConstraint, LpModel, LpStatus};
use crate::oddcut::OddCutOracle;
use crate::rational::{rat, Rat};

/// Which of the two per-piece rounding methods produced the kept cover.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RoundingMethod {
    /// In-link mass shifted onto up replacements, then an exact up/cross solve.
    CrossHeavy,
    /// Exact solve of every subtree hanging off the piece center.
    Bundle,
}

/// Result of rounding one piece: the chosen links, the accounted cost (the
/// sum of the per-subproblem optima, an upper bound on the union's cost), the
/// winning method and the averaged budget both methods are measured against.
#[derive(Debug, Clone)]
pub struct RoundingOutcome {
    pub links: BTreeSet<LinkId>,
    pub cost: Rat,
    pub method: RoundingMethod,
    pub certificate: Rat,
}

/// Round by replacing in-links that are not up-links with the two up
/// replacements through their top node, then solving the resulting up/cross
/// support exactly. For an odd-cut feasible `x` the exact optimum is bounded
/// by twice the in-mass plus the cross-mass; the bound is enforced.
pub fn round_cross_heavy(
    inst: &WtapInstance,
    x: &FractionalSolution,
    params: &AlgorithmParams,
) -> Result<ExactOutcome> {
    if inst.root().is_none() {
        return Err(Error::State(
            "rounding requires the piece rooted at its center".into(),
        ));
    }
    let mut y = FractionalSolution::new();
    for (l, v) in x.iter() {
        let link = inst.link(l);
        if link.is_self_loop() {
            continue;
        }
        match inst.classify_link(l)? {
            LinkClass::Up | LinkClass::Cross => y.add(l, v.clone()),
            LinkClass::InNotUp => {
                let top = inst.lca(link.u, link.v)?;
                for end in [link.u, link.v] {
                    let shadow = inst.link_between(top, end).ok_or_else(|| {
                        Error::State(format!(
                            "piece is not shadow-complete: no link between {top} and {end}"
                        ))
                    })?;
                    if shadow.cost > link.cost {
                        return Err(Error::State(format!(
                            "piece is not shadow-complete: link between {top} and {end} \
                             costs {} above {}",
                            shadow.cost, link.cost
                        )));
                    }
                    y.add(shadow.id, v.clone());
                }
            }
        }
    }
    let out = solve_up_cross_exact(inst, Some(&y.support()), params.separation_round_limit)?;
    let (x_in, x_cr) = inst.split_solution(x)?;
    let budget = rat(2) * inst.total_cost(&x_in) + inst.total_cost(&x_cr);
    if out.value > budget {
        return Err(Error::PropertyFailure(format!(
            "up-shifted rounding cost {} exceeds its budget {budget}",
            out.value
        )));
    }
    Ok(out)
}

/// Round by solving, for every component hanging off the piece's root, the
/// subtree consisting of the component plus the root exactly. `solve_edges`
/// supplies the exact optimum of covering a given tree-edge set; the caller
/// decides the solving context (the piece itself, or the full instance when
/// the chosen links may come from anywhere). The summed cost is bounded by
/// the in-mass plus twice the cross-mass plus the number of piece nodes that
/// arose from contracting heavily covered regions; the bound is enforced.
pub fn round_bundle(
    inst: &WtapInstance,
    x: &FractionalSolution,
    heavy_nodes: &BTreeSet<NodeId>,
    solve_edges: &mut dyn FnMut(&BTreeSet<EdgeId>) -> Result<ExactOutcome>,
) -> Result<ExactOutcome> {
    let center = inst.root().ok_or_else(|| {
        Error::State("rounding requires the piece rooted at its center".into())
    })?;
    let mut links = BTreeSet::new();
    let mut total = Rat::zero();
    for comp in inst.components_without_node(center) {
        let mut side = comp;
        side.insert(center);
        let sub = inst.restrict(&side)?;
        let edges: BTreeSet<EdgeId> = sub.edges().iter().map(|e| e.id).collect();
        let out = solve_edges(&edges)?;
        total += &out.value;
        links.extend(out.links.iter().copied());
    }
    let (x_in, x_cr) = inst.split_solution(x)?;
    let contracted = inst
        .nodes()
        .iter()
        .filter(|n| heavy_nodes.contains(n))
        .count();
    let budget = inst.total_cost(&x_in)
        + rat(2) * inst.total_cost(&x_cr)
        + rat(contracted as i64);
    if total > budget {
        return Err(Error::PropertyFailure(format!(
            "per-subtree rounding cost {total} exceeds its budget {budget}"
        )));
    }
    Ok(ExactOutcome {
        value: total,
        links,
    })
}

/// Round one piece with both methods, rooted at its center, and keep the
/// cheaper cover (ties go to the up-shifted method). The kept cost is also
/// checked against the average of the two budgets,
/// 3/2 (in-mass + cross-mass) + 1/2 (contracted nodes), which is what the
/// aggregate guarantee charges the piece.
pub fn round_pair(
    piece: &Piece,
    heavy_nodes: &BTreeSet<NodeId>,
    solve_edges: &mut dyn FnMut(&BTreeSet<EdgeId>) -> Result<ExactOutcome>,
    params: &AlgorithmParams,
) -> Result<RoundingOutcome> {
    let center = find_beta_center(&piece.instance, &piece.solution, params)?;
    let rooted = piece.instance.with_root(center)?;
    let shifted = round_cross_heavy(&rooted, &piece.solution, params)?;
    let per_subtree = round_bundle(&rooted, &piece.solution, heavy_nodes, solve_edges)?;
    let (x_in, x_cr) = rooted.split_solution(&piece.solution)?;
    let mass = rooted.total_cost(&x_in) + rooted.total_cost(&x_cr);
    let contracted = rooted
        .nodes()
        .iter()
        .filter(|n| heavy_nodes.contains(n))
        .count();
    let certificate = rat(3) / rat(2) * mass + rat(contracted as i64) / rat(2);
    let (links, cost, method) = if per_subtree.value < shifted.value {
        (per_subtree.links, per_subtree.value, RoundingMethod::Bundle)
    } else {
        (shifted.links, shifted.value, RoundingMethod::CrossHeavy)
    };
    if cost > certificate {
        return Err(Error::PropertyFailure(format!(
            "piece rounding cost {cost} exceeds the averaged budget {certificate}"
        )));
    }
    Ok(RoundingOutcome {
        links,
        cost,
        method,
        certificate,
    })
}

/// Exact optimum for covering a subtree's edge set, solved over the full
/// working instance: through the bundle machinery when the set forms few
/// enough paths, otherwise by contracting directly.
fn solve_subtree(
    work: &WtapInstance,
    edges: &BTreeSet<EdgeId>,
    params: &AlgorithmParams,
) -> Result<ExactOutcome> {
    if is_gamma_bundle(work, edges, params.gamma)? {
        bundle_opt(work, work, edges, params)
    } else {
        edge_set_opt(work, edges, None, params)
    }
}

/// Per-piece entry of an approximation report (all costs in the input scale).
#[derive(Debug, Clone)]
pub struct PairReport {
    pub nodes: usize,
    pub method: RoundingMethod,
    pub cost: Rat,
    pub certificate: Rat,
}

/// Outcome of the full pipeline. Costs are in the input's cost scale.
#[derive(Debug, Clone)]
pub struct ApproxReport {
    /// Final value of the cut relaxation with all lazily added rows.
    pub lp_value: Rat,
    /// Cost of the returned cover on the input instance.
    pub output_cost: Rat,
    /// The returned cover, in input link ids.
    pub output_links: BTreeSet<LinkId>,
    /// output_cost / lp_value, when the relaxation value is positive.
    pub ratio_vs_lp: Option<Rat>,
    /// Cost spent covering heavily covered edges up front.
    pub heavy_cost: Rat,
    /// Cost spent on the links covering the split edges.
    pub split_cost: Rat,
    pub per_pair: Vec<PairReport>,
    /// Odd-cut rows added across all LP solves.
    pub cuts_added: usize,
    /// Subtree rows found violated and added before a restart.
    pub bundles_added: usize,
    pub restarts: usize,
    pub timings_ms: BTreeMap<String, u128>,
}

/// The full approximation pipeline: normalize costs, close the link set
/// under sub-paths, solve the cut relaxation with lazy odd-cut separation,
/// decompose around heavily covered edges and thin splits, plan one exact
/// subtree row per piece component (restarting the LP when a planned row
/// cuts the current point), round every piece both ways, and assemble the
/// union translated back to input links.
pub fn wtap_approx(inst: &WtapInstance, params: &AlgorithmParams) -> Result<ApproxReport> {
    let t_total = Instant::now();
    for e in inst.edges() {
        if inst.cover(e.id).is_empty() {
            return Err(Error::Infeasible(format!(
                "tree edge {} has no covering link",
                e.id
            )));
        }
    }
    let (norm, scale) = inst.normalize_costs();
    for l in norm.links() {
        if !l.is_self_loop() && l.cost > params.max_cost {
            return Err(Error::InvalidArgument(format!(
                "link {} has normalized cost {} above the declared bound {}",
                l.id, l.cost, params.max_cost
            )));
        }
    }
    let work = norm.shadow_complete()?;
    let base_model = LpModel::covering_model(&work);

    let mut bundle_rows: Vec<LinearConstraint> = Vec::new();
    let mut cuts_added = 0usize;
    let mut bundles_added = 0usize;
    let mut restarts = 0usize;
    let mut timings: BTreeMap<String, u128> = BTreeMap::new();

    loop {
        let t = Instant::now();
        let mut model = base_model.clone();
        model.constraints.extend(bundle_rows.iter().cloned());
        let mut odd = OddCutOracle { inst: &work };
        let (lp_out, added) =
            solve_with_separation(&model, &mut [&mut odd], params.separation_round_limit)?;
        cuts_added += added.len();
        *timings.entry("lp".into()).or_default() += t.elapsed().as_millis();
        if lp_out.status == LpStatus::Infeasible {
            return Err(Error::Infeasible("cut relaxation is infeasible".into()));
        }
        let x = lp_out.solution;

        let t = Instant::now();
        let dec = decompose(&work, &x, params)?;
        *timings.entry("decompose".into()).or_default() += t.elapsed().as_millis();

        // Plan one exact subtree row per piece component around its center
        // and check each against the current LP point.
        let t = Instant::now();
        let mut cache: BTreeMap<BTreeSet<EdgeId>, ExactOutcome> = BTreeMap::new();
        let mut violated: Vec<LinearConstraint> = Vec::new();
        for piece in &dec.pieces {
            let center = find_beta_center(&piece.instance, &piece.solution, params)?;
            for comp in piece.instance.components_without_node(center) {
                let mut side = comp;
                side.insert(center);
                let sub = piece.instance.restrict(&side)?;
                let edges: BTreeSet<EdgeId> = sub.edges().iter().map(|e| e.id).collect();
                if cache.contains_key(&edges) {
                    continue;
                }
                let outcome = solve_subtree(&work, &edges, params)?;
                let row = bundle_constraint(&work, &edges, &outcome.value);
                if row.violation(&x).is_positive() {
                    violated.push(row);
                }
                cache.insert(edges, outcome);
            }
        }
        *timings.entry("plan".into()).or_default() += t.elapsed().as_millis();
        if !violated.is_empty() {
            bundles_added += violated.len();
            bundle_rows.extend(violated);
            restarts += 1;
            if restarts > params.restart_limit {
                return Err(Error::ResourceLimit(format!(
                    "subtree rows kept cutting the LP point after {} restarts",
                    params.restart_limit
                )));
            }
            continue;
        }

        // Every planned row holds at x, so the per-subtree budgets are safe:
        // round each piece and keep the union.
        let t = Instant::now();
        let mut chosen: BTreeSet<LinkId> = dec.heavy_links.iter().copied().collect();
        chosen.extend(dec.split_links.iter().copied());
        let mut per_pair = Vec::new();
        for piece in &dec.pieces {
            let mut solver = |edges: &BTreeSet<EdgeId>| -> Result<ExactOutcome> {
                if let Some(hit) = cache.get(edges) {
                    return Ok(hit.clone());
                }
                solve_subtree(&work, edges, params)
            };
            let rounded = round_pair(piece, &dec.heavy_nodes, &mut solver, params)?;
            chosen.extend(rounded.links.iter().copied());
            per_pair.push(PairReport {
                nodes: piece.instance.nodes().len(),
                method: rounded.method,
                cost: &rounded.cost * &scale,
                certificate: &rounded.certificate * &scale,
            });
        }
        *timings.entry("round".into()).or_default() += t.elapsed().as_millis();

        // Swap every added or repriced link for the input link it shadows,
        // then check the cover on the input instance.
        let mut output_links: BTreeSet<LinkId> = BTreeSet::new();
        for &l in &chosen {
            let link = work.link(l);
            output_links.insert(link.origin.unwrap_or(link.id));
        }
        if !inst.is_feasible(&output_links) {
            return Err(Error::PropertyFailure(
                "assembled cover leaves a tree edge uncovered".into(),
            ));
        }
        let output_cost = inst.link_set_cost(&output_links);
        let lp_value = &lp_out.objective * &scale;
        let ratio_vs_lp = if lp_value.is_zero() {
            None
        } else {
            Some(&output_cost / &lp_value)
        };
        timings.insert("total".into(), t_total.elapsed().as_millis());
        return Ok(ApproxReport {
            lp_value,
            output_cost,
            output_links,
            ratio_vs_lp,
            heavy_cost: &dec.heavy_cost * &scale,
            split_cost: &dec.split_cost * &scale,
            per_pair,
            cuts_added,
            bundles_added,
            restarts,
            timings_ms: timings,
        });
    }
}
