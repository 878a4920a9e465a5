//! Odd-cut constraints and their separation.
//!
//! For a node set S whose tree boundary has odd size, every integral cover
//! x satisfies `sum_l ceil(|P_l ∩ delta(S)| / 2) x_l >= (|delta(S)| + 1) / 2`:
//! each chosen link repairs boundary edges in pairs along its path, and an
//! odd boundary needs one extra half step. At a fractional point that covers
//! every edge, the violated sets are exactly the odd cuts of value below one
//! in the slack graph (tree edges weighted by coverage minus one, links by
//! their value), which a Gomory-Hu tree over that graph finds exactly.

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use num_traits::{One, Signed, Zero};

use crate::error::{Error, Result};
use crate::instance::{EdgeId, FractionalSolution, LinkId, NodeId, WtapInstance};
use crate::lp::{ConstraintTag, LinearConstraint, SeparationOracle};
use crate::rational::{rat, Rat};

/// A node set with an odd tree boundary. Disconnected member sets are fine.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OddVertexSet {
    members: BTreeSet<NodeId>,
    boundary: BTreeSet<EdgeId>,
}

impl OddVertexSet {
    pub fn new(inst: &WtapInstance, members: BTreeSet<NodeId>) -> Result<Self> {
        if members.is_empty() || members.len() >= inst.node_count() {
            return Err(Error::InvalidArgument(
                "odd vertex set must be a proper nonempty subset".into(),
            ));
        }
        for n in &members {
            if !inst.node_set().contains(n) {
                return Err(Error::InvalidArgument(format!("unknown node {n}")));
            }
        }
        let boundary: BTreeSet<EdgeId> = inst
            .edges()
            .iter()
            .filter(|e| members.contains(&e.u) != members.contains(&e.v))
            .map(|e| e.id)
            .collect();
        if boundary.len() % 2 == 0 {
            return Err(Error::InvalidArgument(format!(
                "tree boundary has even size {}",
                boundary.len()
            )));
        }
        Ok(Self { members, boundary })
    }

    pub fn members(&self) -> &BTreeSet<NodeId> {
        &self.members
    }

    pub fn boundary(&self) -> &BTreeSet<EdgeId> {
        &self.boundary
    }
}

/// The odd-cut row for S: multiplicity `ceil(|P_l ∩ boundary| / 2)` per link,
/// right-hand side `(|boundary| + 1) / 2`. For S spanning one side of a
/// single tree edge this degenerates to that edge's covering row.
pub fn make_constraint(inst: &WtapInstance, s: &OddVertexSet) -> LinearConstraint {
    let mut coeffs = BTreeMap::new();
    for l in inst.links() {
        if l.is_self_loop() {
            continue;
        }
        let crossings = inst
            .link_path(l.id)
            .iter()
            .filter(|e| s.boundary.contains(e))
            .count();
        if crossings > 0 {
            coeffs.insert(l.id, rat(((crossings + 1) / 2) as i64));
        }
    }
    let rhs = rat(((s.boundary.len() + 1) / 2) as i64);
    LinearConstraint::new(coeffs, rhs, ConstraintTag::OddCut)
}

/// The auxiliary graph in which odd-cut violation becomes a minimum odd cut
/// question: tree edges carry their coverage slack, links their value, and
/// the terminals are the odd-degree tree nodes.
#[derive(Debug, Clone)]
pub struct SlackGraph {
    pub nodes: Vec<NodeId>,
    pub tree_edges: Vec<(EdgeId, NodeId, NodeId, Rat)>,
    pub link_edges: Vec<(LinkId, NodeId, NodeId, Rat)>,
    pub terminals: BTreeSet<NodeId>,
}

/// Requires x to satisfy every covering row (slack weights must be >= 0).
pub fn build_slack_graph(inst: &WtapInstance, x: &FractionalSolution) -> Result<SlackGraph> {
    let mut tree_edges = Vec::with_capacity(inst.edges().len());
    for e in inst.edges() {
        let slack = inst.coverage(x, e.id) - Rat::one();
        if slack.is_negative() {
            return Err(Error::State(format!(
                "edge {} is not fully covered; separate covering rows first",
                e.id
            )));
        }
        tree_edges.push((e.id, e.u, e.v, slack));
    }
    let link_edges = inst
        .links()
        .iter()
        .filter(|l| !l.is_self_loop())
        .map(|l| (l.id, l.u, l.v, x.get(l.id)))
        .collect();
    let terminals = inst
        .nodes()
        .iter()
        .copied()
        .filter(|&n| inst.tree_degree(n) % 2 == 1)
        .collect();
    Ok(SlackGraph {
        nodes: inst.nodes().to_vec(),
        tree_edges,
        link_edges,
        terminals,
    })
}

/// Exact Edmonds-Karp max flow on a dense symmetric capacity matrix.
/// Returns the flow value and the s-side of a minimum cut.
fn max_flow_min_cut(cap: &[Vec<Rat>], s: usize, t: usize) -> (Rat, Vec<bool>) {
    let n = cap.len();
    let mut res: Vec<Vec<Rat>> = cap.to_vec();
    let mut value = Rat::zero();
    loop {
        // BFS for a shortest augmenting path.
        let mut pred = vec![usize::MAX; n];
        pred[s] = s;
        let mut queue = VecDeque::from([s]);
        while let Some(u) = queue.pop_front() {
            for v in 0..n {
                if pred[v] == usize::MAX && res[u][v].is_positive() {
                    pred[v] = u;
                    queue.push_back(v);
                }
            }
        }
        if pred[t] == usize::MAX {
            let side = (0..n).map(|v| pred[v] != usize::MAX).collect();
            return (value, side);
        }
        let mut bottleneck: Option<Rat> = None;
        let mut v = t;
        while v != s {
            let u = pred[v];
            if bottleneck.as_ref().map_or(true, |b| res[u][v] < *b) {
                bottleneck = Some(res[u][v].clone());
            }
            v = u;
        }
        let f = bottleneck.unwrap();
        let mut v = t;
        while v != s {
            let u = pred[v];
            res[u][v] = &res[u][v] - &f;
            res[v][u] = &res[v][u] + &f;
            v = u;
        }
        value += f;
    }
}

/// Gomory-Hu tree by the classic contraction scheme: n - 1 exact max-flow
/// computations, splitting one multi-node super-group per step and
/// re-attaching neighbor components by the side their contraction landed on.
/// Removing any returned tree edge induces a cut of exactly its weight.
fn gomory_hu(n: usize, cap: &[Vec<Rat>]) -> Vec<(usize, usize, Rat)> {
    if n <= 1 {
        return Vec::new();
    }
    let mut groups: Vec<Vec<usize>> = vec![(0..n).collect()];
    let mut tree: Vec<(usize, usize, Rat)> = Vec::new();
    loop {
        let Some(gi) = groups.iter().position(|g| g.len() >= 2) else {
            break;
        };
        let g = groups[gi].clone();
        let (s, t) = (g[0], g[1]);
        // Components of the group tree after removing gi, via BFS.
        let mut comp_of: BTreeMap<usize, usize> = BTreeMap::new();
        let mut ncomps = 0usize;
        for start in 0..groups.len() {
            if start == gi || comp_of.contains_key(&start) {
                continue;
            }
            let comp = ncomps;
            ncomps += 1;
            comp_of.insert(start, comp);
            let mut queue = VecDeque::from([start]);
            while let Some(a) = queue.pop_front() {
                for &(x, y, _) in &tree {
                    for (p, q) in [(x, y), (y, x)] {
                        if p == a && q != gi && !comp_of.contains_key(&q) {
                            comp_of.insert(q, comp);
                            queue.push_back(q);
                        }
                    }
                }
            }
        }
        // Contracted graph: |g| real nodes then one blob per component.
        let k = g.len() + ncomps;
        let mut node_of = vec![usize::MAX; n]; // original node -> contracted index
        for (i, &v) in g.iter().enumerate() {
            node_of[v] = i;
        }
        for (grp, &comp) in &comp_of {
            for &v in &groups[*grp] {
                node_of[v] = g.len() + comp;
            }
        }
        let mut ccap = vec![vec![Rat::zero(); k]; k];
        for u in 0..n {
            for v in (u + 1)..n {
                if cap[u][v].is_zero() {
                    continue;
                }
                let (a, b) = (node_of[u], node_of[v]);
                if a != b {
                    ccap[a][b] = &ccap[a][b] + &cap[u][v];
                    ccap[b][a] = ccap[a][b].clone();
                }
            }
        }
        let (value, side) = max_flow_min_cut(&ccap, node_of[s], node_of[t]);
        let g_s: Vec<usize> = g.iter().copied().filter(|&v| side[node_of[v]]).collect();
        let g_t: Vec<usize> = g.iter().copied().filter(|&v| !side[node_of[v]]).collect();
        let new_index = groups.len();
        groups[gi] = g_s;
        groups.push(g_t);
        // Re-attach edges formerly incident to gi by blob side.
        for e in tree.iter_mut() {
            for end in [0usize, 1] {
                let (a, b) = (e.0, e.1);
                let (this, other) = if end == 0 { (a, b) } else { (b, a) };
                if this == gi {
                    let blob = g.len() + comp_of[&other];
                    if !side[blob] {
                        if end == 0 {
                            e.0 = new_index;
                        } else {
                            e.1 = new_index;
                        }
                    }
                }
            }
        }
        tree.push((gi, new_index, value));
    }
    // All groups are singletons now; translate group indices to nodes.
    tree.into_iter()
        .map(|(a, b, w)| (groups[a][0], groups[b][0], w))
        .collect()
}

/// Minimum odd cut of the slack graph: smallest total weight of edges leaving
/// a node set containing an odd number of terminals. Ties are broken by the
/// smaller tree boundary, then by the lexicographically smaller member set;
/// the returned side is the one containing the smallest node. Returns None
/// when no odd set exists (fewer than two terminals).
pub fn min_odd_cut(h: &SlackGraph) -> Option<(BTreeSet<NodeId>, Rat)> {
    let n = h.nodes.len();
    if h.terminals.is_empty() || n < 2 {
        return None;
    }
    let idx: BTreeMap<NodeId, usize> = h.nodes.iter().enumerate().map(|(i, &v)| (v, i)).collect();
    let mut cap = vec![vec![Rat::zero(); n]; n];
    let weighted = h
        .tree_edges
        .iter()
        .map(|(_, u, v, w)| (*u, *v, w.clone()))
        .chain(h.link_edges.iter().map(|(_, u, v, w)| (*u, *v, w.clone())));
    for (u, v, w) in weighted {
        let (a, b) = (idx[&u], idx[&v]);
        if a != b {
            cap[a][b] = &cap[a][b] + &w;
            cap[b][a] = cap[a][b].clone();
        }
    }
    let gh = gomory_hu(n, &cap);
    let min_node = *h.nodes.iter().min().expect("nonempty");
    let mut best: Option<(Rat, usize, BTreeSet<NodeId>)> = None;
    for (skip, (a, _, w)) in gh.iter().enumerate() {
        // Fundamental cut: the side of `a` after removing edge `skip`.
        let mut side_idx = BTreeSet::from([*a]);
        let mut queue = VecDeque::from([*a]);
        while let Some(u) = queue.pop_front() {
            for (j, &(p, q, _)) in gh.iter().enumerate() {
                if j == skip {
                    continue;
                }
                for (x, y) in [(p, q), (q, p)] {
                    if x == u && side_idx.insert(y) {
                        queue.push_back(y);
                    }
                }
            }
        }
        let odd = h
            .terminals
            .iter()
            .filter(|t| side_idx.contains(&idx[t]))
            .count()
            % 2
            == 1;
        if !odd {
            continue;
        }
        // Canonical side: the one containing the smallest node.
        let inside: BTreeSet<NodeId> = side_idx.iter().map(|&i| h.nodes[i]).collect();
        let members: BTreeSet<NodeId> = if inside.contains(&min_node) {
            inside
        } else {
            h.nodes.iter().filter(|v| !inside.contains(v)).copied().collect()
        };
        let tree_boundary = h
            .tree_edges
            .iter()
            .filter(|(_, u, v, _)| members.contains(u) != members.contains(v))
            .count();
        let key = (w.clone(), tree_boundary, members);
        let better = match &best {
            None => true,
            Some((bw, bb, bm)) => (&key.0, key.1, &key.2) < (bw, *bb, bm),
        };
        if better {
            best = Some(key);
        }
    }
    best.map(|(w, _, m)| (m, w))
}

/// One full separation call at x. Violated covering rows are reported first
/// (smallest edge id); otherwise the minimum odd cut decides: value < 1
/// yields the corresponding odd-cut row, whose violation is exactly
/// `(1 - value) / 2`.
pub fn separate_odd_cut(
    inst: &WtapInstance,
    x: &FractionalSolution,
) -> Result<Option<LinearConstraint>> {
    for e in inst.edges() {
        if inst.coverage(x, e.id) < Rat::one() {
            return Ok(Some(LinearConstraint::new(
                inst.cover(e.id).iter().map(|&l| (l, Rat::one())).collect(),
                Rat::one(),
                ConstraintTag::Covering(e.id),
            )));
        }
    }
    let h = build_slack_graph(inst, x)?;
    let Some((members, value)) = min_odd_cut(&h) else {
        return Ok(None);
    };
    if value >= Rat::one() {
        return Ok(None);
    }
    let s = OddVertexSet::new(inst, members)?;
    let row = make_constraint(inst, &s);
    let violation = row.violation(x);
    let expected = (Rat::one() - &value) / rat(2);
    if violation != expected {
        return Err(Error::Internal(format!(
            "cut value {value} and row violation {violation} disagree"
        )));
    }
    Ok(Some(row))
}

/// Exhaustive most-violated odd-cut search over all node subsets (guarded to
/// 20 nodes). Ties go to the smaller tree boundary, then the smaller member
/// set; each complement pair is represented by the side with the smallest
/// node. Works at any x >= 0, covered or not.
pub fn brute_force_separate(
    inst: &WtapInstance,
    x: &FractionalSolution,
) -> Result<Option<(OddVertexSet, LinearConstraint, Rat)>> {
    let n = inst.node_count();
    if n > 20 {
        return Err(Error::ResourceLimit(format!(
            "exhaustive separation limited to 20 nodes, got {n}"
        )));
    }
    let nodes = inst.nodes();
    let mut best: Option<(Rat, usize, BTreeSet<NodeId>, LinearConstraint)> = None;
    if n < 2 {
        return Ok(None);
    }
    for mask in 0u64..(1 << (n - 1)) {
        let mask = (mask << 1) | 1; // smallest node always inside
        if mask == (1 << n) - 1 {
            continue;
        }
        let members: BTreeSet<NodeId> = nodes
            .iter()
            .enumerate()
            .filter(|(i, _)| mask >> i & 1 == 1)
            .map(|(_, &v)| v)
            .collect();
        let Ok(s) = OddVertexSet::new(inst, members) else {
            continue; // even boundary
        };
        let row = make_constraint(inst, &s);
        let violation = row.violation(x);
        if !violation.is_positive() {
            continue;
        }
        let key = (violation, s.boundary().len(), s.members().clone());
        let better = match &best {
            None => true,
            Some((bv, bb, bm, _)) => {
                key.0 > *bv || (key.0 == *bv && (key.1, &key.2) < (*bb, bm))
            }
        };
        if better {
            best = Some((key.0, key.1, key.2, row));
        }
    }
    Ok(best.map(|(v, _, members, row)| {
        let s = OddVertexSet::new(inst, members).expect("validated above");
        (s, row, v)
    }))
}

/// Separation oracle wrapper for the cutting-plane loop.
pub struct OddCutOracle<'a> {
    pub inst: &'a WtapInstance,
}

impl SeparationOracle for OddCutOracle<'_> {
    fn name(&self) -> &str {
        "odd-cut"
    }

    fn separate(&mut self, x: &FractionalSolution) -> Result<Option<LinearConstraint>> {
        separate_odd_cut(self.inst, x)
    }
}
