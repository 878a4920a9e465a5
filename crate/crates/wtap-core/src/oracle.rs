//! Independent cross-checking routines. Everything here recomputes answers
//! from first principles (exhaustive scans, textbook graph algorithms) and
//! deliberately shares no code with the solvers it is used to check.

use std::collections::{BTreeMap, BTreeSet};

use num_traits::Zero;

use crate::instance::{LinkId, NodeId, WtapInstance};
use crate::lp::LpModel;
use crate::rational::Rat;

/// Edge indices on the u-v path, found by plain DFS over a raw edge list.
pub fn dfs_tree_path(edges: &[(u32, u32)], u: u32, v: u32) -> BTreeSet<u32> {
    let mut adj: BTreeMap<u32, Vec<(u32, u32)>> = BTreeMap::new();
    for (i, &(a, b)) in edges.iter().enumerate() {
        adj.entry(a).or_default().push((b, i as u32));
        adj.entry(b).or_default().push((a, i as u32));
    }
    // DFS with explicit stack, remembering the edge stack to the current node.
    let mut stack = vec![(u, u32::MAX, Vec::new())];
    let mut seen = BTreeSet::new();
    while let Some((n, in_edge, trail)) = stack.pop() {
        if !seen.insert(n) {
            continue;
        }
        let mut trail = trail;
        if in_edge != u32::MAX {
            trail.push(in_edge);
        }
        if n == v {
            return trail.into_iter().collect();
        }
        for &(m, e) in adj.get(&n).into_iter().flatten() {
            if !seen.contains(&m) {
                stack.push((m, e, trail.clone()));
            }
        }
    }
    BTreeSet::new()
}

/// Naive lca: walk both nodes to the root and compare ancestor chains.
pub fn naive_lca(edges: &[(u32, u32)], root: u32, u: u32, v: u32) -> u32 {
    let mut adj: BTreeMap<u32, Vec<u32>> = BTreeMap::new();
    for &(a, b) in edges {
        adj.entry(a).or_default().push(b);
        adj.entry(b).or_default().push(a);
    }
    let mut parent: BTreeMap<u32, u32> = BTreeMap::new();
    let mut stack = vec![root];
    let mut seen = BTreeSet::from([root]);
    while let Some(n) = stack.pop() {
        for &m in adj.get(&n).into_iter().flatten() {
            if seen.insert(m) {
                parent.insert(m, n);
                stack.push(m);
            }
        }
    }
    let chain = |mut n: u32| {
        let mut out = vec![n];
        while let Some(&p) = parent.get(&n) {
            out.push(p);
            n = p;
        }
        out
    };
    let anc_u: BTreeSet<u32> = chain(u).into_iter().collect();
    for a in chain(v) {
        if anc_u.contains(&a) {
            return a;
        }
    }
    root
}

/// 2-edge-connectivity of the tree plus the chosen links, by bridge finding
/// (iterative low-link DFS over the multigraph; parallels handled by edge id).
pub fn two_edge_connected_with(inst: &WtapInstance, chosen: &BTreeSet<LinkId>) -> bool {
    let nodes: Vec<NodeId> = inst.nodes().to_vec();
    let idx: BTreeMap<NodeId, usize> = nodes.iter().enumerate().map(|(i, &n)| (n, i)).collect();
    let mut edges: Vec<(usize, usize)> = inst
        .edges()
        .iter()
        .map(|e| (idx[&e.u], idx[&e.v]))
        .collect();
    for &l in chosen {
        let link = inst.link(l);
        if !link.is_self_loop() {
            edges.push((idx[&link.u], idx[&link.v]));
        }
    }
    let n = nodes.len();
    if n <= 1 {
        return true;
    }
    let mut adj: Vec<Vec<(usize, usize)>> = vec![Vec::new(); n];
    for (i, &(a, b)) in edges.iter().enumerate() {
        adj[a].push((b, i));
        adj[b].push((a, i));
    }
    let mut disc = vec![usize::MAX; n];
    let mut low = vec![usize::MAX; n];
    let mut timer = 1;
    // Iterative DFS from node 0; frames are (node, incoming edge id, cursor).
    let mut stack: Vec<(usize, usize, usize)> = vec![(0, usize::MAX, 0)];
    disc[0] = 0;
    low[0] = 0;
    while let Some(frame) = stack.last().copied() {
        let (node, in_edge, cursor) = frame;
        if cursor < adj[node].len() {
            stack.last_mut().unwrap().2 += 1;
            let (next, eid) = adj[node][cursor];
            if eid == in_edge || next == node {
                continue;
            }
            if disc[next] == usize::MAX {
                disc[next] = timer;
                low[next] = timer;
                timer += 1;
                stack.push((next, eid, 0));
            } else if disc[next] < low[node] {
                low[node] = disc[next];
            }
        } else {
            stack.pop();
            if let Some(&(parent, _, _)) = stack.last() {
                if low[node] < low[parent] {
                    low[parent] = low[node];
                }
                if low[node] > disc[parent] {
                    return false; // bridge found
                }
            }
        }
    }
    disc.iter().all(|&d| d != usize::MAX)
}

/// Exhaustive minimum-cost cover over all link subsets. Guarded to at most
/// 22 non-redundant links; intended for desk-scale cross checks only.
pub fn exhaustive_min_cover(inst: &WtapInstance) -> Option<(Rat, BTreeSet<LinkId>)> {
    let links: Vec<LinkId> = inst
        .links()
        .iter()
        .filter(|l| !l.is_self_loop())
        .map(|l| l.id)
        .collect();
    assert!(links.len() <= 22, "exhaustive cover scan limited to 22 links");
    assert!(inst.edges().len() <= 64);
    let full: u64 = if inst.edges().is_empty() {
        0
    } else {
        (1u64 << inst.edges().len()) - 1
    };
    let edge_bit: BTreeMap<_, _> = inst
        .edges()
        .iter()
        .enumerate()
        .map(|(i, e)| (e.id, 1u64 << i))
        .collect();
    let masks: Vec<u64> = links
        .iter()
        .map(|&l| inst.link_path(l).iter().map(|e| edge_bit[e]).sum())
        .collect();
    let mut best: Option<(Rat, BTreeSet<LinkId>)> = None;
    for pick in 0u64..(1 << links.len()) {
        let mut covered = 0u64;
        for (i, m) in masks.iter().enumerate() {
            if pick >> i & 1 == 1 {
                covered |= m;
            }
        }
        if covered != full {
            continue;
        }
        let set: BTreeSet<LinkId> = links
            .iter()
            .enumerate()
            .filter(|(i, _)| pick >> i & 1 == 1)
            .map(|(_, &l)| l)
            .collect();
        let cost = inst.link_set_cost(&set);
        if best.as_ref().is_none_or(|(c, _)| cost < *c) {
            best = Some((cost, set));
        }
    }
    best
}

/// Exhaustive minimum odd cut: over all node subsets containing the smallest
/// node with an odd number of terminals, sum the weights of crossing edges.
/// `edges` are undirected weighted (self-loops ignored by the caller).
pub fn exhaustive_min_odd_cut(
    nodes: &[NodeId],
    edges: &[(NodeId, NodeId, Rat)],
    terminals: &BTreeSet<NodeId>,
) -> Option<(Rat, BTreeSet<NodeId>)> {
    let n = nodes.len();
    assert!(n <= 22, "exhaustive odd cut scan limited to 22 nodes");
    let idx: BTreeMap<NodeId, usize> = nodes.iter().enumerate().map(|(i, &v)| (v, i)).collect();
    let mut best: Option<(Rat, BTreeSet<NodeId>)> = None;
    // Fix node 0 inside S: each {S, complement} pair is visited once, and the
    // returned side is the one containing the smallest node.
    for mask in 0u64..(1 << (n - 1)) {
        let mask = (mask << 1) | 1;
        if mask == (1 << n) - 1 {
            continue; // S = V is not a cut
        }
        let odd = terminals
            .iter()
            .filter(|t| mask >> idx[t] & 1 == 1)
            .count()
            % 2
            == 1;
        if !odd {
            continue;
        }
        let mut value = Rat::zero();
        for (u, v, w) in edges {
            if (mask >> idx[u] & 1) != (mask >> idx[v] & 1) {
                value += w;
            }
        }
        let better = match &best {
            None => true,
            Some((b, _)) => value < *b,
        };
        if better {
            let set = nodes
                .iter()
                .filter(|v| mask >> idx[v] & 1 == 1)
                .copied()
                .collect();
            best = Some((value, set));
        }
    }
    best
}

/// Minimum of the objective over all vertices of `{x : Ax >= b, x >= 0}`,
/// by enumerating square subsystems and solving them exactly. Returns the
/// optimal value and one optimal vertex, or None when infeasible. Intended
/// for tiny models only.
pub fn vertex_enumeration_lp(model: &LpModel) -> Option<(Rat, Vec<Rat>)> {
    let n = model.vars.len();
    let m = model.constraints.len();
    assert!(n <= 6 && m <= 24, "vertex enumeration limited to tiny models");
    // Row list: m model rows followed by n nonnegativity rows.
    let row = |i: usize, j: usize| -> Rat {
        if i < m {
            model.constraints[i]
                .coeffs
                .get(&model.vars[j])
                .cloned()
                .unwrap_or_else(Rat::zero)
        } else if i - m == j {
            Rat::from_integer(1.into())
        } else {
            Rat::zero()
        }
    };
    let rhs = |i: usize| -> Rat {
        if i < m {
            model.constraints[i].rhs.clone()
        } else {
            Rat::zero()
        }
    };
    let total = m + n;
    let mut best: Option<(Rat, Vec<Rat>)> = None;
    let mut pick = vec![0usize; n];
    fn combos(total: usize, k: usize, start: usize, pick: &mut Vec<usize>, at: usize, f: &mut impl FnMut(&[usize])) {
        if at == k {
            f(pick);
            return;
        }
        for i in start..total {
            pick[at] = i;
            combos(total, k, i + 1, pick, at + 1, f);
        }
    }
    let objective = |x: &[Rat]| -> Rat {
        model
            .vars
            .iter()
            .enumerate()
            .map(|(j, v)| model.objective.get(v).cloned().unwrap_or_else(Rat::zero) * &x[j])
            .fold(Rat::zero(), |a, b| a + b)
    };
    let feasible = |x: &[Rat]| -> bool {
        x.iter().all(|v| *v >= Rat::zero())
            && (0..m).all(|i| {
                (0..n)
                    .map(|j| row(i, j) * &x[j])
                    .fold(Rat::zero(), |a, b| a + b)
                    >= rhs(i)
            })
    };
    combos(total, n, 0, &mut pick, 0, &mut |sel: &[usize]| {
        let mat: Vec<Vec<Rat>> = sel.iter().map(|&i| (0..n).map(|j| row(i, j)).collect()).collect();
        let b: Vec<Rat> = sel.iter().map(|&i| rhs(i)).collect();
        if let Some(x) = solve_square(mat, b) {
            if feasible(&x) {
                let val = objective(&x);
                if best.as_ref().is_none_or(|(c, _)| val < *c) {
                    best = Some((val, x));
                }
            }
        }
    });
    best
}

/// Exact Gaussian elimination for a square system; None when singular.
pub fn solve_square(mut a: Vec<Vec<Rat>>, mut b: Vec<Rat>) -> Option<Vec<Rat>> {
    let n = b.len();
    for col in 0..n {
        let pivot = (col..n).find(|&r| !a[r][col].is_zero())?;
        a.swap(col, pivot);
        b.swap(col, pivot);
        let p = a[col][col].clone();
        for j in col..n {
            a[col][j] = &a[col][j] / &p;
        }
        b[col] = &b[col] / &p;
        for r in 0..n {
            if r != col && !a[r][col].is_zero() {
                let f = a[r][col].clone();
                for j in col..n {
                    a[r][j] = &a[r][j] - &f * &a[col][j];
                }
                b[r] = &b[r] - &f * &b[col];
            }
        }
    }
    Some(b)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::rat;

    #[test]
    fn square_solver_and_singularity() {
        let a = vec![vec![rat(2), rat(1)], vec![rat(1), rat(3)]];
        let b = vec![rat(5), rat(10)];
        let x = solve_square(a, b).unwrap();
        assert_eq!(x, vec![rat(1), rat(3)]);
        let sing = vec![vec![rat(1), rat(2)], vec![rat(2), rat(4)]];
        assert!(solve_square(sing, vec![rat(1), rat(1)]).is_none());
    }

    #[test]
    fn bridge_oracle_on_cycle_and_path() {
        let cycle = WtapInstance::new(
            vec![(0, 1), (1, 2)],
            vec![(0, 2, rat(1))],
            None,
        )
        .unwrap();
        assert!(two_edge_connected_with(&cycle, &BTreeSet::from([LinkId(0)])));
        assert!(!two_edge_connected_with(&cycle, &BTreeSet::new()));
    }
}
