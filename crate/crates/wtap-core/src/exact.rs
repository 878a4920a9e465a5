//! Exact solvers at reference scale.
//!
//! `brute_force_wtap` is a self-contained branching enumerator used to audit
//! everything else; it shares no code with the LP machinery. `solve_few_leaf`
//! runs branch-and-bound with odd-cut separation, gated on the leaf count.
//! `solve_up_cross_exact` exploits that on instances whose links are all up
//! or cross, the odd-cut relaxation already has integral optima — certified
//! independently by `binet_certificate`.

use std::collections::{BTreeMap, BTreeSet};

use num_traits::Zero;

use crate::error::{Error, Result};
use crate::instance::{LinkClass, LinkId, NodeId, WtapInstance};
use crate::lp::{solve_with_separation, LpModel, LpStatus};
use crate::oddcut::OddCutOracle;
use crate::rational::Rat;

/// An exact optimum: the value and one minimizing link set.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExactOutcome {
    pub value: Rat,
    pub links: BTreeSet<LinkId>,
}

/// Exhaustive optimum by branching on an uncovered edge and trying each of
/// its candidate links in (cost, id) order, excluding already-tried ones in
/// each subtree so no cover is visited twice. Prunes on a lower bound of
/// current cost plus the most expensive forced edge. Returns None when some
/// edge cannot be covered at all. Exponential; meant for small instances and
/// independent of the LP-based solvers.
pub fn brute_force_wtap(inst: &WtapInstance) -> Option<ExactOutcome> {
    let m = inst.edges().len();
    // Candidates per edge position, each sorted cheap-first.
    let mut candidates: Vec<Vec<LinkId>> = Vec::with_capacity(m);
    for e in inst.edges() {
        let mut c: Vec<LinkId> = inst.cover(e.id).to_vec();
        if c.is_empty() {
            return None;
        }
        c.sort_by(|a, b| (&inst.link(*a).cost, *a).cmp(&(&inst.link(*b).cost, *b)));
        candidates.push(c);
    }
    let link_pos: BTreeMap<LinkId, usize> = inst
        .links()
        .iter()
        .enumerate()
        .map(|(i, l)| (l.id, i))
        .collect();

    struct Search<'a> {
        inst: &'a WtapInstance,
        candidates: &'a [Vec<LinkId>],
        link_pos: &'a BTreeMap<LinkId, usize>,
        covered: Vec<usize>,
        forbidden: Vec<bool>,
        chosen: Vec<LinkId>,
        cost: Rat,
        best: Option<(Rat, BTreeSet<LinkId>)>,
    }

    impl Search<'_> {
        fn edge_positions(&self, l: LinkId) -> Vec<usize> {
            self.inst
                .link_path(l)
                .iter()
                .map(|e| self.inst.edge_position(*e))
                .collect()
        }

        fn recurse(&mut self) {
            // Lower bound: every uncovered edge forces at least its cheapest
            // allowed candidate; one link may serve many edges, so only the
            // largest such minimum may be added.
            let mut branch_edge: Option<(usize, usize)> = None; // (allowed count, pos)
            let mut forced = Rat::zero();
            for pos in 0..self.covered.len() {
                if self.covered[pos] > 0 {
                    continue;
                }
                let mut allowed = 0usize;
                let mut cheapest: Option<&Rat> = None;
                for l in &self.candidates[pos] {
                    if !self.forbidden[self.link_pos[l]] {
                        allowed += 1;
                        if cheapest.is_none() {
                            cheapest = Some(&self.inst.link(*l).cost);
                        }
                    }
                }
                let Some(c) = cheapest else {
                    return; // this edge can no longer be covered
                };
                if *c > forced {
                    forced = c.clone();
                }
                if branch_edge.is_none_or(|(k, p)| (allowed, pos) < (k, p)) {
                    branch_edge = Some((allowed, pos));
                }
            }
            let Some((_, pos)) = branch_edge else {
                // Everything covered: strict improvement keeps determinism.
                if self
                    .best
                    .as_ref()
                    .is_none_or(|(b, _)| self.cost < *b)
                {
                    self.best = Some((self.cost.clone(), self.chosen.iter().copied().collect()));
                }
                return;
            };
            if let Some((b, _)) = &self.best {
                if &self.cost + &forced >= *b {
                    return;
                }
            }
            let options: Vec<LinkId> = self.candidates[pos]
                .iter()
                .copied()
                .filter(|l| !self.forbidden[self.link_pos[l]])
                .collect();
            let mut tried = Vec::new();
            for l in options {
                let lp = self.link_pos[&l];
                let add = self.inst.link(l).cost.clone();
                if self
                    .best
                    .as_ref()
                    .is_none_or(|(b, _)| &self.cost + &add < *b)
                {
                    for ep in self.edge_positions(l) {
                        self.covered[ep] += 1;
                    }
                    self.chosen.push(l);
                    self.cost += &add;
                    self.recurse();
                    self.cost -= &add;
                    self.chosen.pop();
                    for ep in self.edge_positions(l) {
                        self.covered[ep] -= 1;
                    }
                }
                // Covers without l are explored under the later candidates.
                self.forbidden[lp] = true;
                tried.push(lp);
            }
            for lp in tried {
                self.forbidden[lp] = false;
            }
        }
    }

    let mut search = Search {
        inst,
        candidates: &candidates,
        link_pos: &link_pos,
        covered: vec![0; m],
        forbidden: vec![false; inst.links().len()],
        chosen: Vec::new(),
        cost: Rat::zero(),
        best: None,
    };
    search.recurse();
    search
        .best
        .map(|(value, links)| ExactOutcome { value, links })
}

/// Exact solve gated on the number of tree leaves: branch-and-bound with
/// odd-cut separation, falling back to plain enumeration if the node budget
/// runs out.
pub fn solve_few_leaf(
    inst: &WtapInstance,
    max_leaves: usize,
    round_limit: usize,
    node_limit: usize,
) -> Result<ExactOutcome> {
    let leaves = inst.leaf_count();
    if leaves > max_leaves {
        return Err(Error::InvalidArgument(format!(
            "instance has {leaves} leaves, above the exact-solve gate of {max_leaves}"
        )));
    }
    let model = LpModel::covering_model(inst);
    let mut oracle = OddCutOracle { inst };
    let out = match crate::lp::solve_ilp(&model, &mut [&mut oracle], round_limit, node_limit) {
        Ok(out) => out,
        Err(Error::ResourceLimit(_)) => {
            return brute_force_wtap(inst)
                .map(Ok)
                .unwrap_or_else(|| Err(Error::Infeasible("some edge has no covering link".into())));
        }
        Err(e) => return Err(e),
    };
    let links = out.solution.support();
    if inst.link_set_cost(&links) != out.objective || !inst.is_feasible(&links) {
        return Err(Error::PropertyFailure(
            "integral optimum does not describe a minimum cover".into(),
        ));
    }
    Ok(ExactOutcome {
        value: out.objective,
        links,
    })
}

/// Exact solve for instances whose links all classify as up or cross: the
/// odd-cut relaxation is solved by cutting planes and its basic optimum must
/// already be integral. With `restrict_to`, only the listed links may be
/// used (ids are preserved). Requires a rooted instance.
pub fn solve_up_cross_exact(
    inst: &WtapInstance,
    restrict_to: Option<&BTreeSet<LinkId>>,
    round_limit: usize,
) -> Result<ExactOutcome> {
    let restricted;
    let sub: &WtapInstance = match restrict_to {
        Some(keep) => {
            restricted = inst.restrict_links(keep)?;
            &restricted
        }
        None => inst,
    };
    for l in sub.links() {
        if !l.is_self_loop() && sub.classify_link(l.id)? == LinkClass::InNotUp {
            return Err(Error::InvalidArgument(format!(
                "link {} is neither an up- nor a cross-link",
                l.id
            )));
        }
    }
    let model = LpModel::covering_model(sub);
    let mut oracle = OddCutOracle { inst: sub };
    let (out, _) = solve_with_separation(&model, &mut [&mut oracle], round_limit)?;
    if out.status == LpStatus::Infeasible {
        return Err(Error::Infeasible("some edge has no covering link".into()));
    }
    if !out.solution.is_integral() {
        return Err(Error::PropertyFailure(
            "odd-cut relaxation has a fractional vertex on an up/cross instance".into(),
        ));
    }
    let links = out.solution.support();
    if sub.link_set_cost(&links) != out.objective || !sub.is_feasible(&links) {
        return Err(Error::PropertyFailure(
            "integral optimum does not describe a minimum cover".into(),
        ));
    }
    Ok(ExactOutcome {
        value: out.objective,
        links,
    })
}

/// Witness that the covering matrix of an up/cross instance factors as
/// R^{-1} S with [S R] the incidence matrix of a bidirected graph:
/// R is the tree's incidence matrix directed away from the root with the
/// root row removed (a basis), A the edge-by-link covering matrix, and S
/// has one column per link — up-links telescope to a directed-edge column,
/// cross-links to a two-head column, self-loops to a zero column.
#[derive(Debug, Clone)]
pub struct BinetCertificate {
    pub node_order: Vec<NodeId>,
    pub link_order: Vec<LinkId>,
    pub r: Vec<Vec<i64>>,
    pub a: Vec<Vec<i64>>,
    pub s: Vec<Vec<i64>>,
}

pub fn binet_certificate(inst: &WtapInstance) -> Result<BinetCertificate> {
    let root = inst
        .root()
        .ok_or_else(|| Error::State("certificate requires a rooted instance".into()))?;
    let node_order: Vec<NodeId> = inst
        .nodes()
        .iter()
        .copied()
        .filter(|&n| n != root)
        .collect();
    let row: BTreeMap<NodeId, usize> = node_order
        .iter()
        .enumerate()
        .map(|(i, &n)| (n, i))
        .collect();
    let n1 = node_order.len();
    let link_order: Vec<LinkId> = inst.links().iter().map(|l| l.id).collect();

    let mut r = vec![vec![0i64; inst.edges().len()]; n1];
    for (j, e) in inst.edges().iter().enumerate() {
        // Away from the root: the deeper endpoint is the head.
        let (head, tail) = if inst.depth_of(e.u)? > inst.depth_of(e.v)? {
            (e.u, e.v)
        } else {
            (e.v, e.u)
        };
        r[row[&head]][j] = 1;
        if tail != root {
            r[row[&tail]][j] = -1;
        }
    }

    let mut a = vec![vec![0i64; link_order.len()]; inst.edges().len()];
    for (j, &lid) in link_order.iter().enumerate() {
        for e in inst.link_path(lid) {
            a[inst.edge_position(*e)][j] = 1;
        }
    }

    let mut s = vec![vec![0i64; link_order.len()]; n1];
    for (j, &lid) in link_order.iter().enumerate() {
        let l = inst.link(lid);
        if l.is_self_loop() {
            continue;
        }
        match inst.classify_link(lid)? {
            LinkClass::Up => {
                let w = inst.lca(l.u, l.v)?;
                let descendant = if w == l.u { l.v } else { l.u };
                s[row[&descendant]][j] = 1;
                if w != root {
                    s[row[&w]][j] = -1;
                }
            }
            LinkClass::Cross => {
                s[row[&l.u]][j] = 1;
                s[row[&l.v]][j] = 1;
            }
            LinkClass::InNotUp => {
                return Err(Error::InvalidArgument(format!(
                    "link {lid} is neither an up- nor a cross-link"
                )));
            }
        }
    }

    Ok(BinetCertificate {
        node_order,
        link_order,
        r,
        a,
        s,
    })
}

/// Check the three certificate conditions: R·A = S, every column of R and of
/// S is a legal bidirected incidence column (absolute entries summing to at
/// most 2), and R is invertible.
pub fn verify_binet_certificate(c: &BinetCertificate) -> Result<()> {
    let n = c.r.len();
    if c.r.iter().any(|row| row.len() != n) {
        return Err(Error::PropertyFailure("R is not square".into()));
    }
    let m = c.link_order.len();
    if c.a.len() != n || c.s.len() != n || c.s.iter().chain(c.a.iter()).any(|r| r.len() != m) {
        return Err(Error::PropertyFailure("certificate dimensions disagree".into()));
    }
    for j in 0..m {
        for i in 0..n {
            let mut acc = 0i64;
            for (k, a_row) in c.a.iter().enumerate() {
                acc += c.r[i][k] * a_row[j];
            }
            if acc != c.s[i][j] {
                return Err(Error::PropertyFailure(format!(
                    "R·A and S differ at row {i}, column {j}"
                )));
            }
        }
    }
    for j in 0..m {
        let total: i64 = (0..n).map(|i| c.s[i][j].abs()).sum();
        if total > 2 {
            return Err(Error::PropertyFailure(format!(
                "column {j} of S is not a bidirected incidence column"
            )));
        }
    }
    for j in 0..n {
        let total: i64 = (0..n).map(|i| c.r[i][j].abs()).sum();
        if total > 2 {
            return Err(Error::PropertyFailure(format!(
                "column {j} of R is not a bidirected incidence column"
            )));
        }
    }
    if !det_nonzero(c.r.clone()) {
        return Err(Error::PropertyFailure("R is singular".into()));
    }
    Ok(())
}

/// Fraction-free (Bareiss) elimination; every intermediate value is a minor
/// of the input, so for incidence-like matrices i64 never overflows.
fn det_nonzero(mut m: Vec<Vec<i64>>) -> bool {
    let n = m.len();
    let mut prev = 1i64;
    for k in 0..n {
        let Some(p) = (k..n).find(|&i| m[i][k] != 0) else {
            return false;
        };
        m.swap(p, k);
        for i in (k + 1)..n {
            for j in (k + 1)..n {
                m[i][j] = (m[i][j] * m[k][k] - m[i][k] * m[k][j]) / prev;
            }
            m[i][k] = 0;
        }
        prev = m[k][k];
    }
    true
}
