//! Acceptance gate: one check per core guarantee. Every check prints a
//! single `[PASS]`/`[FAIL]` line (visible with `--nocapture`) and then
//! asserts. All inequalities are evaluated in exact rational arithmetic with
//! zero slack; the corpus sizes and search limits below are the only
//! tolerances.

use std::collections::BTreeSet;

use num_traits::{One, Signed, ToPrimitive, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use wtap_core::bundle::{bundle_constraint, edge_set_opt};
use wtap_core::decompose::{decompose, find_beta_center, verify_decomposition, Piece};
use wtap_core::exact::{
    binet_certificate, brute_force_wtap, solve_up_cross_exact, verify_binet_certificate,
};
use wtap_core::generate::{generate, CostModel, GeneratorConfig, LinkStyle, TreeShape};
use wtap_core::instance::{
    AlgorithmParams, EdgeId, FractionalSolution, LinkId, NodeId, WtapInstance,
};
use wtap_core::lp::{
    check_certificate, solve_lp, solve_with_separation, LinearConstraint, LpModel, LpOutcome,
    LpStatus,
};
use wtap_core::oddcut::{brute_force_separate, separate_odd_cut, OddCutOracle};
use wtap_core::oracle;
use wtap_core::rational::{rat, ratio, Rat};
use wtap_core::rounding::{round_bundle, round_cross_heavy, round_pair, wtap_approx};

const UP_CROSS_RUNS: usize = 300; // instances for the up/cross integrality check
const BINET_RUNS: usize = 200; // instances for the incidence certificate check
const SEPARATION_RUNS: usize = 500; // (instance, point) pairs for oracle agreement
const SHIFT_ROUND_RUNS: usize = 60; // corpus for the up-shift rounding bound
const SUBTREE_ROUND_RUNS: usize = 40; // corpus for the per-subtree rounding bound
const END_TO_END_RUNS: usize = 200; // full pipeline runs compared against enumeration
const CERTIFICATE_RUNS: usize = 120; // instances for the LP certificate sweep
const MIN_CERTIFICATES: usize = 150; // optimal outcomes the sweep must actually check
const ROUND_LIMIT: usize = 500; // cutting-plane rounds per solve
const FIXED_POINT_ROUNDS: usize = 60; // restarts allowed while adding subtree rows

fn report(name: &str, passed: bool, details: &str) {
    println!(
        "[{}] {:<46} {}",
        if passed { "PASS" } else { "FAIL" },
        name,
        details
    );
    assert!(passed, "{name}: {details}");
}

fn preview(bad: &[String]) -> &[String] {
    &bad[..bad.len().min(3)]
}

fn approx(r: &Rat) -> f64 {
    r.to_f64().unwrap_or(f64::NAN)
}

/// Pipeline parameters used throughout: eps = 1/2, costs bounded by 3.
fn desk_params() -> AlgorithmParams {
    AlgorithmParams::new(ratio(1, 2), rat(3)).unwrap()
}

/// Covering relaxation plus lazy odd cuts; returns the model with every
/// added row so the outcome can be replayed against it.
fn solve_odd_cut_lp(inst: &WtapInstance, extra: &[LinearConstraint]) -> (LpModel, LpOutcome) {
    let mut model = LpModel::covering_model(inst);
    model.constraints.extend(extra.iter().cloned());
    let mut oracle = OddCutOracle { inst };
    let (out, added) = solve_with_separation(&model, &mut [&mut oracle], ROUND_LIMIT).unwrap();
    model.constraints.extend(added);
    (model, out)
}

/// Re-solve the relaxation, lazily adding one row per subtree around the
/// current mass center whenever that subtree's exact optimum is not yet paid
/// for by the point. Returns the closed instance, the converged point, and
/// the final center.
fn converge_subtree_rows(
    inst: &WtapInstance,
    params: &AlgorithmParams,
) -> (WtapInstance, FractionalSolution, NodeId) {
    let work = inst.shadow_complete().unwrap();
    let mut extra: Vec<LinearConstraint> = Vec::new();
    for _ in 0..FIXED_POINT_ROUNDS {
        let (_, lp) = solve_odd_cut_lp(&work, &extra);
        let x = lp.solution;
        let center = find_beta_center(&work, &x, params).unwrap();
        let mut fresh = 0;
        for comp in work.components_without_node(center) {
            let mut side = comp;
            side.insert(center);
            let sub = work.restrict(&side).unwrap();
            let edges: BTreeSet<EdgeId> = sub.edges().iter().map(|e| e.id).collect();
            if edges.is_empty() {
                continue;
            }
            let opt = edge_set_opt(&work, &edges, None, params).unwrap();
            let row = bundle_constraint(&work, &edges, &opt.value);
            if row.violation(&x).is_positive() {
                extra.push(row);
                fresh += 1;
            }
        }
        if fresh == 0 {
            return (work, x, center);
        }
    }
    panic!("subtree rows kept appearing after {FIXED_POINT_ROUNDS} rounds");
}

/// On rooted instances whose links all run upward or across, the cutting
/// plane solve must terminate integral and agree with plain enumeration.
#[test]
fn c01_up_cross_exact_matches_enumeration_and_lp() {
    let mut bad = Vec::new();
    for seed in 0..UP_CROSS_RUNS as u64 {
        let n = 4 + (seed % 17) as u32; // sizes 4..=20
        let mut cfg = GeneratorConfig::new(n, 11_000 + seed);
        cfg.style = LinkStyle::UpCross;
        cfg.costs = CostModel::UniformInt { max: 3 };
        cfg.links = n as usize;
        cfg.root = Some(0);
        let inst = generate(&cfg).unwrap();
        let brute = brute_force_wtap(&inst).expect("feasible by construction");
        let exact = match solve_up_cross_exact(&inst, None, ROUND_LIMIT) {
            Ok(o) => o,
            Err(e) => {
                bad.push(format!("seed {seed}: {e}"));
                continue;
            }
        };
        let (_, lp) = solve_odd_cut_lp(&inst, &[]);
        if exact.value != brute.value || lp.objective != brute.value {
            bad.push(format!(
                "seed {seed}: exact {} vs enumeration {} vs relaxation {}",
                exact.value, brute.value, lp.objective
            ));
        }
    }
    report(
        "up/cross exact = enumeration = odd-cut LP",
        bad.is_empty(),
        &format!(
            "{} instances (n <= 20, integer costs <= 3); {} mismatches {:?}",
            UP_CROSS_RUNS,
            bad.len(),
            preview(&bad)
        ),
    );
}

/// The bidirected incidence factorization behind that integrality must
/// reconstruct and satisfy its column-degree condition on every instance.
#[test]
fn c02_bidirected_incidence_certificates_verify() {
    let mut bad = Vec::new();
    for seed in 0..BINET_RUNS as u64 {
        let n = 3 + (seed % 13) as u32; // sizes 3..=15
        let mut cfg = GeneratorConfig::new(n, 22_000 + seed);
        cfg.style = LinkStyle::UpCross;
        cfg.links = n as usize;
        cfg.root = Some(0);
        let inst = generate(&cfg).unwrap();
        if let Err(e) = binet_certificate(&inst).and_then(|c| verify_binet_certificate(&c)) {
            bad.push(format!("seed {seed}: {e}"));
        }
    }
    report(
        "bidirected incidence certificates verify",
        bad.is_empty(),
        &format!(
            "{} rooted up/cross instances (n <= 15); {} failures {:?}",
            BINET_RUNS,
            bad.len(),
            preview(&bad)
        ),
    );
}

/// The tree-flow separation route and the exhaustive subset scan must agree
/// on whether a violated odd cut exists and on the violation it achieves.
#[test]
fn c03_separation_routes_agree() {
    let choices = [ratio(1, 4), ratio(1, 3), ratio(1, 2), ratio(2, 3), rat(1)];
    let mut bad = Vec::new();
    let mut found = 0usize;
    for seed in 0..SEPARATION_RUNS as u64 {
        let n = 3 + (seed % 10) as u32; // sizes 3..=12
        let mut cfg = GeneratorConfig::new(n, 33_000 + seed);
        cfg.costs = CostModel::UniformRatio { max: 2, denom: 3 };
        cfg.links = n as usize;
        cfg.root = Some(0);
        cfg.style = if seed % 4 == 0 {
            LinkStyle::Random
        } else {
            LinkStyle::LeafToLeaf
        };
        let inst = generate(&cfg).unwrap();
        // Half the points are covering-LP optima (where violated odd cuts
        // naturally live); the rest are random positive points rescaled so
        // the least covered edge sits exactly at coverage one.
        let x = if seed % 2 == 0 {
            solve_lp(&LpModel::covering_model(&inst)).unwrap().solution
        } else {
            let mut rng = ChaCha8Rng::seed_from_u64(44_000 + seed);
            let mut x = FractionalSolution::new();
            for l in inst.links() {
                x.set(l.id, choices[rng.gen_range(0..choices.len())].clone());
            }
            let min_cov = inst
                .edges()
                .iter()
                .map(|e| inst.coverage(&x, e.id))
                .min()
                .unwrap();
            let entries: Vec<(LinkId, Rat)> =
                x.iter().map(|(l, v)| (l, v / &min_cov)).collect();
            FractionalSolution::from_entries(entries)
        };
        let flow = separate_odd_cut(&inst, &x).unwrap();
        let scan = brute_force_separate(&inst, &x).unwrap();
        match (&flow, &scan) {
            (Some(row), Some((_, _, violation))) => {
                found += 1;
                if &row.violation(&x) != violation {
                    bad.push(format!(
                        "seed {seed}: violation {} vs {}",
                        row.violation(&x),
                        violation
                    ));
                }
            }
            (None, None) => {}
            _ => bad.push(format!(
                "seed {seed}: existence {} vs {}",
                flow.is_some(),
                scan.is_some()
            )),
        }
    }
    report(
        "flow separation agrees with the subset scan",
        bad.is_empty() && found > 0,
        &format!(
            "{} covered points (n <= 12), {} violated cuts found; {} disagreements {:?}",
            SEPARATION_RUNS,
            found,
            bad.len(),
            preview(&bad)
        ),
    );
}

/// Frozen witness: the 3-leaf star with unit cross-links has covering value
/// 3/2, and one round of odd cuts closes the gap to the integer optimum 2.
#[test]
fn c04_three_leaf_star_hits_the_frozen_values() {
    let inst = WtapInstance::new(
        vec![(0, 1), (0, 2), (0, 3)],
        vec![(1, 2, rat(1)), (1, 3, rat(1)), (2, 3, rat(1))],
        Some(0),
    )
    .unwrap();
    let model = LpModel::covering_model(&inst);
    let bare = solve_lp(&model).unwrap();
    let bare_scan = oracle::vertex_enumeration_lp(&model).unwrap();
    let (cut_model, cut) = solve_odd_cut_lp(&inst, &[]);
    let cut_scan = oracle::vertex_enumeration_lp(&cut_model).unwrap();
    let brute = brute_force_wtap(&inst).unwrap();
    let ok = bare.objective == ratio(3, 2)
        && bare_scan.0 == ratio(3, 2)
        && cut.objective == rat(2)
        && cut_scan.0 == rat(2)
        && brute.value == rat(2)
        && cut.solution.is_integral();
    report(
        "3-leaf star: covering 3/2, odd cuts close to 2",
        ok,
        &format!(
            "covering {} (vertex scan {}), with odd cuts {} (vertex scan {}), enumeration {}",
            bare.objective, bare_scan.0, cut.objective, cut_scan.0, brute.value
        ),
    );
}

/// Shifting non-up in-links onto their two top shadows and solving the
/// up/cross support exactly costs at most twice the in-mass plus the
/// cross-mass, for every odd-cut feasible point in the corpus.
#[test]
fn c05_up_shift_rounding_meets_its_budget() {
    let params = desk_params();
    let mut bad = Vec::new();
    for seed in 0..SHIFT_ROUND_RUNS as u64 {
        let n = 4 + (seed % 9) as u32; // sizes 4..=12
        let mut cfg = GeneratorConfig::new(n, 55_000 + seed);
        cfg.style = match seed % 3 {
            0 => LinkStyle::Random,
            1 => LinkStyle::UpCross,
            _ => LinkStyle::LeafToLeaf,
        };
        cfg.costs = CostModel::UniformInt { max: 3 };
        cfg.links = n as usize;
        cfg.root = Some(0);
        let inst = generate(&cfg).unwrap().shadow_complete().unwrap();
        let (_, lp) = solve_odd_cut_lp(&inst, &[]);
        let x = lp.solution;
        let out = match round_cross_heavy(&inst, &x, &params) {
            Ok(o) => o,
            Err(e) => {
                bad.push(format!("seed {seed}: {e}"));
                continue;
            }
        };
        let (x_in, x_cr) = inst.split_solution(&x).unwrap();
        let budget = rat(2) * inst.total_cost(&x_in) + inst.total_cost(&x_cr);
        if out.value > budget || !inst.is_feasible(&out.links) {
            bad.push(format!(
                "seed {seed}: cost {} exceeds budget {}",
                out.value, budget
            ));
        }
    }
    report(
        "up-shift rounding <= 2*in-mass + cross-mass",
        bad.is_empty(),
        &format!(
            "{} odd-cut feasible points (n <= 12); {} violations {:?}",
            SHIFT_ROUND_RUNS,
            bad.len(),
            preview(&bad)
        ),
    );
}

/// Once the point pays for every subtree around the center, solving those
/// subtrees exactly costs at most the in-mass plus twice the cross-mass.
#[test]
fn c06_subtree_rounding_meets_its_budget() {
    let params = desk_params();
    let empty = BTreeSet::new();
    let mut bad = Vec::new();
    for seed in 0..SUBTREE_ROUND_RUNS as u64 {
        let n = 4 + (seed % 7) as u32; // sizes 4..=10
        let mut cfg = GeneratorConfig::new(n, 66_000 + seed);
        cfg.costs = CostModel::UniformInt { max: 3 };
        cfg.links = n as usize;
        cfg.root = Some(0);
        let inst = generate(&cfg).unwrap();
        let (norm, _) = inst.normalize_costs();
        let (work, x, center) = converge_subtree_rows(&norm, &params);
        let rooted = work.with_root(center).unwrap();
        let mut solver =
            |edges: &BTreeSet<EdgeId>| edge_set_opt(&work, edges, None, &params);
        let out = match round_bundle(&rooted, &x, &empty, &mut solver) {
            Ok(o) => o,
            Err(e) => {
                bad.push(format!("seed {seed}: {e}"));
                continue;
            }
        };
        let (x_in, x_cr) = rooted.split_solution(&x).unwrap();
        let budget = rooted.total_cost(&x_in) + rat(2) * rooted.total_cost(&x_cr);
        if out.value > budget || !work.is_feasible(&out.links) {
            bad.push(format!(
                "seed {seed}: cost {} exceeds budget {}",
                out.value, budget
            ));
        }
    }
    report(
        "subtree rounding <= in-mass + 2*cross-mass",
        bad.is_empty(),
        &format!(
            "{} converged points (n <= 10); {} violations {:?}",
            SUBTREE_ROUND_RUNS,
            bad.len(),
            preview(&bad)
        ),
    );
}

/// The cheaper of the two roundings is within 3/2 of the piece's mass
/// (plus half a unit per contracted node, zero in this corpus).
#[test]
fn c07_paired_rounding_meets_the_averaged_certificate() {
    let params = desk_params();
    let empty = BTreeSet::new();
    let mut bad = Vec::new();
    for seed in 0..SUBTREE_ROUND_RUNS as u64 {
        let n = 4 + (seed % 7) as u32; // sizes 4..=10
        let mut cfg = GeneratorConfig::new(n, 77_000 + seed);
        cfg.costs = CostModel::UniformInt { max: 3 };
        cfg.links = n as usize;
        cfg.root = Some(0);
        let inst = generate(&cfg).unwrap();
        let (norm, _) = inst.normalize_costs();
        let (work, x, _) = converge_subtree_rows(&norm, &params);
        let piece = Piece {
            instance: work.clone(),
            solution: x.clone(),
        };
        let mut solver =
            |edges: &BTreeSet<EdgeId>| edge_set_opt(&work, edges, None, &params);
        let out = match round_pair(&piece, &empty, &mut solver, &params) {
            Ok(o) => o,
            Err(e) => {
                bad.push(format!("seed {seed}: {e}"));
                continue;
            }
        };
        let center = find_beta_center(&work, &x, &params).unwrap();
        let rooted = work.with_root(center).unwrap();
        let (x_in, x_cr) = rooted.split_solution(&x).unwrap();
        let certificate = ratio(3, 2) * (rooted.total_cost(&x_in) + rooted.total_cost(&x_cr));
        if out.cost > certificate || !work.is_feasible(&out.links) {
            bad.push(format!(
                "seed {seed}: cost {} exceeds certificate {}",
                out.cost, certificate
            ));
        }
    }
    report(
        "paired rounding <= 3/2 of the piece mass",
        bad.is_empty(),
        &format!(
            "{} converged points (n <= 10); {} violations {:?}",
            SUBTREE_ROUND_RUNS,
            bad.len(),
            preview(&bad)
        ),
    );
}

/// A chain of three stars with one over-covered leaf edge forces one heavy
/// contraction and two splits at eps = 1; the decomposition audit must pass
/// all five properties, including the sharp split accounting.
#[test]
fn c08_forced_decomposition_passes_the_audit() {
    let mut edges = vec![(0u32, 1u32), (1, 2)];
    let mut links: Vec<(u32, u32, Rat)> = vec![(0, 1, rat(1)), (1, 2, rat(1))];
    let mut next = 3u32;
    for (center, count) in [(0u32, 4), (1, 5), (2, 4)] {
        for _ in 0..count {
            edges.push((center, next));
            links.push((center, next, rat(1)));
            next += 1;
        }
    }
    // Two extra parallel links on the middle star's first leaf edge push its
    // coverage to 2, the heavy threshold at eps = 1.
    links.push((1, 7, rat(1)));
    links.push((1, 7, rat(1)));
    let extra_a = LinkId((links.len() - 2) as u32);
    let extra_b = LinkId((links.len() - 1) as u32);
    let inst = WtapInstance::new(edges, links, Some(0)).unwrap();

    let mut x = FractionalSolution::new();
    for l in inst.links() {
        x.set(l.id, rat(1));
    }
    x.set(extra_a, ratio(1, 2));
    x.set(extra_b, ratio(1, 2));

    let params = AlgorithmParams::new(rat(1), rat(1)).unwrap();
    let dec = decompose(&inst, &x, &params).unwrap();
    let checks = verify_decomposition(&inst, &x, &dec, &params).unwrap();
    for c in checks.iter().filter(|c| !c.passed) {
        println!("    audit failure {} - {}", c.name, c.details);
    }
    let all_ok = checks.iter().all(|c| c.passed);
    let forced = dec.split_edges.len() >= 2 && !dec.heavy_edges.is_empty() && dec.pieces.len() >= 3;
    report(
        "forced decomposition passes the audit",
        all_ok && forced,
        &format!(
            "{} splits, {} heavy edges, {} pieces; {}/{} properties hold",
            dec.split_edges.len(),
            dec.heavy_edges.len(),
            dec.pieces.len(),
            checks.iter().filter(|c| c.passed).count(),
            checks.len()
        ),
    );
}

/// Full pipeline against plain enumeration: the output must cover the tree
/// (checked twice, once by coverage and once by bridge search) and never
/// cost more than twice the optimum.
#[test]
fn c09_end_to_end_feasible_and_within_twice_optimum() {
    let params = desk_params();
    let mut bad = Vec::new();
    let mut ratios: Vec<Rat> = Vec::new();
    for seed in 0..END_TO_END_RUNS as u64 {
        let n = 4 + (seed % 15) as u32; // sizes 4..=18
        let mut cfg = GeneratorConfig::new(n, 99_000 + seed);
        cfg.links = n as usize;
        cfg.shape = match seed % 4 {
            0 => TreeShape::Random,
            1 => TreeShape::Path,
            2 => TreeShape::Star,
            _ => TreeShape::Caterpillar,
        };
        cfg.style = match seed % 3 {
            0 => LinkStyle::Random,
            1 => LinkStyle::UpCross,
            _ => LinkStyle::LeafToLeaf,
        };
        cfg.costs = match seed % 3 {
            0 => CostModel::Unit,
            1 => CostModel::UniformInt { max: 3 },
            _ => CostModel::UniformRatio { max: 3, denom: 4 },
        };
        cfg.root = Some(0);
        let inst = generate(&cfg).unwrap();
        let run = match wtap_approx(&inst, &params) {
            Ok(r) => r,
            Err(e) => {
                bad.push(format!("seed {seed}: {e}"));
                continue;
            }
        };
        let opt = brute_force_wtap(&inst).expect("feasible by construction");
        let feasible = inst.is_feasible(&run.output_links)
            && oracle::two_edge_connected_with(&inst, &run.output_links);
        let quality = &run.output_cost / &opt.value;
        if !feasible || quality > rat(2) || run.output_cost < opt.value {
            bad.push(format!(
                "seed {seed}: cost {} vs optimum {}, feasible {}",
                run.output_cost, opt.value, feasible
            ));
        }
        ratios.push(quality);
    }
    ratios.sort();
    let stats = if ratios.is_empty() {
        "no completed runs".to_string()
    } else {
        let mean = ratios.iter().fold(Rat::zero(), |a, b| a + b) / rat(ratios.len() as i64);
        let exact = ratios.iter().filter(|r| **r == Rat::one()).count();
        format!(
            "ratio min {:.4} mean {:.4} max {:.4}; {} of {} at the optimum",
            approx(ratios.first().unwrap()),
            approx(&mean),
            approx(ratios.last().unwrap()),
            exact,
            ratios.len()
        )
    };
    report(
        "end to end: feasible and cost <= 2*optimum",
        bad.is_empty() && ratios.len() == END_TO_END_RUNS,
        &format!(
            "{} runs (n <= 18, costs <= 3, eps = 1/2); {}; {} failures {:?}",
            END_TO_END_RUNS,
            stats,
            bad.len(),
            preview(&bad)
        ),
    );
}

/// Every optimal LP outcome must carry an exact primal/dual certificate:
/// feasibility on both sides, equal objectives, complementary slackness.
#[test]
fn c10_optimal_lp_outcomes_pass_the_dual_certificate() {
    let mut bad = Vec::new();
    let mut checked = 0usize;
    for seed in 0..CERTIFICATE_RUNS as u64 {
        let n = 3 + (seed % 12) as u32; // sizes 3..=14
        let mut cfg = GeneratorConfig::new(n, 123_000 + seed);
        cfg.costs = CostModel::UniformRatio { max: 3, denom: 3 };
        cfg.links = n as usize;
        cfg.root = Some(0);
        cfg.ensure_feasible = seed % 5 != 0; // keep a few infeasible models in the mix
        let inst = generate(&cfg).unwrap();
        let model = LpModel::covering_model(&inst);
        match solve_lp(&model) {
            Ok(out) if out.status == LpStatus::Optimal => {
                checked += 1;
                if let Err(e) = check_certificate(&model, &out) {
                    bad.push(format!("seed {seed} covering: {e}"));
                }
            }
            Ok(_) => {}
            Err(e) => bad.push(format!("seed {seed} covering: {e}")),
        }
        let (cut_model, out) = solve_odd_cut_lp(&inst, &[]);
        if out.status == LpStatus::Optimal {
            checked += 1;
            if let Err(e) = check_certificate(&cut_model, &out) {
                bad.push(format!("seed {seed} with cuts: {e}"));
            }
        }
    }
    report(
        "optimal LP outcomes pass the dual certificate",
        bad.is_empty() && checked >= MIN_CERTIFICATES,
        &format!(
            "{} certificates replayed across {} instances; {} failures {:?}",
            checked,
            CERTIFICATE_RUNS,
            bad.len(),
            preview(&bad)
        ),
    );
}
