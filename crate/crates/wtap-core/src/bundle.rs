//! Bundles: tree-edge sets forming few paths, and their cost rows.
//!
//! A bundle is measured against the *base* tree the pipeline started from,
//! not the current quotient: contraction can make two edges share a node
//! without being adjacent originally, and only the base-tree path count
//! keeps the exact sub-solve tractable. For a bundle B with optimum value
//! OPT(B), every feasible cover satisfies the bundle row
//! `sum over links touching B of cost_l * x_l >= OPT(B)`, because the
//! touching links of any cover still cover B after contracting everything
//! else.

use std::collections::{BTreeMap, BTreeSet};

use crate::error::{Error, Result};
use crate::exact::{solve_few_leaf, ExactOutcome};
use crate::instance::{AlgorithmParams, EdgeId, NodeId, WtapInstance};
use crate::lp::{ConstraintTag, LinearConstraint};
use crate::rational::Rat;

/// Number of maximal paths the edge set forms in the base tree, splitting at
/// every node of degree three or more. This can overestimate the minimum
/// path partition but never underestimates it, so gates stay safe.
pub fn path_segments(base: &WtapInstance, edges: &BTreeSet<EdgeId>) -> Result<usize> {
    let mut deg: BTreeMap<NodeId, usize> = BTreeMap::new();
    let mut adj: BTreeMap<NodeId, Vec<(NodeId, EdgeId)>> = BTreeMap::new();
    for &e in edges {
        if !base.has_edge(e) {
            return Err(Error::InvalidArgument(format!(
                "edge {e} does not exist in the base tree"
            )));
        }
        let te = base.edge(e);
        *deg.entry(te.u).or_default() += 1;
        *deg.entry(te.v).or_default() += 1;
        adj.entry(te.u).or_default().push((te.v, e));
        adj.entry(te.v).or_default().push((te.u, e));
    }
    let mut used: BTreeSet<EdgeId> = BTreeSet::new();
    let mut count = 0usize;
    // Every forest component has a node of degree != 2, so walks started at
    // such nodes reach every edge.
    for (&start, &d) in &deg {
        if d == 2 {
            continue;
        }
        for &(first, e) in &adj[&start] {
            if !used.insert(e) {
                continue;
            }
            count += 1;
            let mut cur = first;
            while deg[&cur] == 2 {
                let &(next, e2) = adj[&cur]
                    .iter()
                    .find(|&&(_, e2)| !used.contains(&e2))
                    .expect("degree-2 node on a walk has one unused edge");
                used.insert(e2);
                cur = next;
            }
        }
    }
    Ok(count)
}

/// Whether the edge set forms at most `gamma` paths in the base tree.
pub fn is_gamma_bundle(
    base: &WtapInstance,
    edges: &BTreeSet<EdgeId>,
    gamma: u64,
) -> Result<bool> {
    Ok(path_segments(base, edges)? as u64 <= gamma)
}

/// The bundle row for B at optimum `opt`: links covering at least one edge
/// of B appear with their cost as coefficient.
pub fn bundle_constraint(
    inst: &WtapInstance,
    bundle: &BTreeSet<EdgeId>,
    opt: &Rat,
) -> LinearConstraint {
    let mut coeffs = BTreeMap::new();
    for l in inst.links() {
        if inst.link_path(l.id).iter().any(|e| bundle.contains(e)) {
            coeffs.insert(l.id, l.cost.clone());
        }
    }
    LinearConstraint::new(coeffs, opt.clone(), ConstraintTag::Bundle)
}

/// Exact optimum of the sub-problem "cover exactly these edges": contracts
/// everything outside the set and solves the quotient. `max_leaves` gates
/// the quotient's leaf count; pass the quotient's own leaf count to disable
/// gating. Link ids are stable, so the returned set lives in `inst` as well.
pub fn edge_set_opt(
    inst: &WtapInstance,
    edges: &BTreeSet<EdgeId>,
    max_leaves: Option<usize>,
    params: &AlgorithmParams,
) -> Result<ExactOutcome> {
    if edges.is_empty() {
        return Err(Error::InvalidArgument("empty edge set".into()));
    }
    for &e in edges {
        if !inst.has_edge(e) {
            return Err(Error::InvalidArgument(format!(
                "edge {e} does not exist in the working instance"
            )));
        }
    }
    let complement: BTreeSet<EdgeId> = inst
        .edges()
        .iter()
        .map(|e| e.id)
        .filter(|e| !edges.contains(e))
        .collect();
    let (contracted, _) = inst.contract(&complement)?;
    let gate = max_leaves.unwrap_or_else(|| contracted.leaf_count());
    solve_few_leaf(
        &contracted,
        gate,
        params.separation_round_limit,
        params.ilp_node_limit,
    )
}

/// Exact optimum over a bundle: like `edge_set_opt`, but gated on the edge
/// set forming at most `gamma` paths in the base tree, which bounds the
/// quotient's leaves by twice the path count.
pub fn bundle_opt(
    inst: &WtapInstance,
    base: &WtapInstance,
    bundle: &BTreeSet<EdgeId>,
    params: &AlgorithmParams,
) -> Result<ExactOutcome> {
    if bundle.is_empty() {
        return Err(Error::InvalidArgument("empty bundle".into()));
    }
    let segments = path_segments(base, bundle)?;
    if segments as u64 > params.gamma {
        return Err(Error::InvalidArgument(format!(
            "edge set forms {segments} paths, above the bundle limit {}",
            params.gamma
        )));
    }
    edge_set_opt(inst, bundle, Some(2 * segments), params)
}
