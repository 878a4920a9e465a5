//! Exact rational linear programming: a dense two-phase simplex with Bland's
//! rule, cutting-plane solving against separation oracles, and best-first
//! branch-and-bound for the integer variants. All constraints are of the
//! form `a . x >= b` over nonnegative variables; minimization throughout.
//!
//! Every optimal outcome is re-checked against an independently evaluated
//! certificate (primal feasibility, dual feasibility, equal objectives,
//! complementary slackness) before it is returned.

use std::cmp::Reverse;
use std::collections::{BTreeMap, BinaryHeap};

use num_traits::{One, Signed, Zero};

use crate::error::{Error, Result};
use crate::instance::{EdgeId, FractionalSolution, LinkId, WtapInstance};
use crate::rational::Rat;

/// Provenance of a constraint row.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ConstraintTag {
    Covering(EdgeId),
    OddCut,
    Bundle,
    Branching,
}

/// One `a . x >= rhs` row over link variables.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearConstraint {
    pub coeffs: BTreeMap<LinkId, Rat>,
    pub rhs: Rat,
    pub tag: ConstraintTag,
}

impl LinearConstraint {
    pub fn new(coeffs: BTreeMap<LinkId, Rat>, rhs: Rat, tag: ConstraintTag) -> Self {
        Self { coeffs, rhs, tag }
    }

    pub fn evaluate(&self, x: &FractionalSolution) -> Rat {
        self.coeffs
            .iter()
            .map(|(l, c)| c * x.get(*l))
            .fold(Rat::zero(), |a, b| a + b)
    }

    /// Positive when the row is violated at `x`.
    pub fn violation(&self, x: &FractionalSolution) -> Rat {
        &self.rhs - self.evaluate(x)
    }

    pub fn is_satisfied_by(&self, x: &FractionalSolution) -> bool {
        self.evaluate(x) >= self.rhs
    }
}

/// A minimization model over an explicit, ordered variable list.
#[derive(Debug, Clone)]
pub struct LpModel {
    pub vars: Vec<LinkId>,
    pub objective: BTreeMap<LinkId, Rat>,
    pub constraints: Vec<LinearConstraint>,
}

impl LpModel {
    /// The cut relaxation of an instance: one covering row per tree edge,
    /// variables for every non-self-loop link, objective = link costs.
    /// The model is feasible exactly when every tree edge is coverable.
    pub fn covering_model(inst: &WtapInstance) -> Self {
        let vars: Vec<LinkId> = inst
            .links()
            .iter()
            .filter(|l| !l.is_self_loop())
            .map(|l| l.id)
            .collect();
        let objective = vars.iter().map(|&l| (l, inst.link(l).cost.clone())).collect();
        let constraints = inst
            .edges()
            .iter()
            .map(|e| {
                LinearConstraint::new(
                    inst.cover(e.id).iter().map(|&l| (l, Rat::one())).collect(),
                    Rat::one(),
                    ConstraintTag::Covering(e.id),
                )
            })
            .collect();
        Self {
            vars,
            objective,
            constraints,
        }
    }

    /// Same objective and rows, restricted to a variable subset. Rows keep
    /// only coefficients of surviving variables.
    pub fn restricted_to(&self, keep: &std::collections::BTreeSet<LinkId>) -> Self {
        Self {
            vars: self.vars.iter().copied().filter(|v| keep.contains(v)).collect(),
            objective: self
                .objective
                .iter()
                .filter(|(v, _)| keep.contains(v))
                .map(|(v, c)| (*v, c.clone()))
                .collect(),
            constraints: self
                .constraints
                .iter()
                .map(|c| LinearConstraint {
                    coeffs: c
                        .coeffs
                        .iter()
                        .filter(|(v, _)| keep.contains(v))
                        .map(|(v, q)| (*v, q.clone()))
                        .collect(),
                    rhs: c.rhs.clone(),
                    tag: c.tag.clone(),
                })
                .collect(),
        }
    }

    pub fn objective_value(&self, x: &FractionalSolution) -> Rat {
        self.objective
            .iter()
            .map(|(l, c)| c * x.get(*l))
            .fold(Rat::zero(), |a, b| a + b)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LpStatus {
    Optimal,
    Infeasible,
}

/// Result of one simplex run. `duals` is aligned with the model's rows; the
/// basis identifier lists the final basic columns (structural columns first,
/// then one surplus column per row) and pins down the vertex deterministically.
#[derive(Debug, Clone)]
pub struct LpOutcome {
    pub status: LpStatus,
    pub solution: FractionalSolution,
    pub objective: Rat,
    pub duals: Vec<Rat>,
    pub basis: Vec<usize>,
}

impl LpOutcome {
    fn infeasible() -> Self {
        Self {
            status: LpStatus::Infeasible,
            solution: FractionalSolution::new(),
            objective: Rat::zero(),
            duals: Vec::new(),
            basis: Vec::new(),
        }
    }
}

/// Exact primal/dual certificate check for an Optimal outcome.
pub fn check_certificate(model: &LpModel, out: &LpOutcome) -> Result<()> {
    let x = &out.solution;
    for (l, v) in x.iter() {
        if v.is_negative() {
            return Err(Error::Internal(format!("negative primal value on {l}")));
        }
        if !model.vars.contains(&l) {
            return Err(Error::Internal(format!("primal value on foreign var {l}")));
        }
    }
    if out.duals.len() != model.constraints.len() {
        return Err(Error::Internal("dual vector length mismatch".into()));
    }
    let mut dual_obj = Rat::zero();
    for (c, y) in model.constraints.iter().zip(&out.duals) {
        let slack = c.evaluate(x) - &c.rhs;
        if slack.is_negative() {
            return Err(Error::Internal(format!(
                "primal infeasibility on row {:?}",
                c.tag
            )));
        }
        if y.is_negative() {
            return Err(Error::Internal("negative dual value".into()));
        }
        if !y.is_zero() && !slack.is_zero() {
            return Err(Error::Internal("complementary slackness (rows)".into()));
        }
        dual_obj += y * &c.rhs;
    }
    if dual_obj != out.objective {
        return Err(Error::Internal("strong duality mismatch".into()));
    }
    for &v in &model.vars {
        let mut reduced = model.objective.get(&v).cloned().unwrap_or_else(Rat::zero);
        for (c, y) in model.constraints.iter().zip(&out.duals) {
            if let Some(a) = c.coeffs.get(&v) {
                reduced -= a * y;
            }
        }
        if reduced.is_negative() {
            return Err(Error::Internal(format!("dual infeasibility at {v}")));
        }
        if !x.get(v).is_zero() && !reduced.is_zero() {
            return Err(Error::Internal("complementary slackness (columns)".into()));
        }
    }
    let primal_obj = model.objective_value(x);
    if primal_obj != out.objective {
        return Err(Error::Internal("objective mismatch".into()));
    }
    Ok(())
}

/// Dense exact simplex tableau. Columns: structural vars, then one surplus
/// column per row, then artificials. Rows with nonpositive rhs are stored
/// negated so the initial basis is feasible.
struct Tableau {
    rows: Vec<Vec<Rat>>, // each row: ncols coefficients then rhs
    basis: Vec<usize>,
    nstruct: usize,
    nsurplus: usize,
    nart: usize,
    banned: Vec<bool>, // columns barred from entering (artificials after phase 1)
}

impl Tableau {
    fn ncols(&self) -> usize {
        self.nstruct + self.nsurplus + self.nart
    }

    fn build(model: &LpModel) -> Self {
        let n = model.vars.len();
        let m = model.constraints.len();
        let var_index: BTreeMap<LinkId, usize> =
            model.vars.iter().enumerate().map(|(i, &v)| (v, i)).collect();
        let mut art_cols = Vec::new();
        for (i, c) in model.constraints.iter().enumerate() {
            if c.rhs.is_positive() {
                art_cols.push(i);
            }
        }
        let nart = art_cols.len();
        let ncols = n + m + nart;
        let mut rows = Vec::with_capacity(m);
        let mut basis = Vec::with_capacity(m);
        let mut art_at = 0usize;
        for (i, c) in model.constraints.iter().enumerate() {
            let mut row = vec![Rat::zero(); ncols + 1];
            let keep_sign = c.rhs.is_positive();
            for (v, a) in &c.coeffs {
                if let Some(&j) = var_index.get(v) {
                    row[j] = if keep_sign { a.clone() } else { -a.clone() };
                }
            }
            row[n + i] = if keep_sign {
                -Rat::one()
            } else {
                Rat::one()
            };
            row[ncols] = if keep_sign {
                c.rhs.clone()
            } else {
                -c.rhs.clone()
            };
            if keep_sign {
                let col = n + m + art_at;
                art_at += 1;
                row[col] = Rat::one();
                basis.push(col);
            } else {
                basis.push(n + i);
            }
            rows.push(row);
        }
        Self {
            rows,
            basis,
            nstruct: n,
            nsurplus: m,
            nart,
            banned: vec![false; ncols],
        }
    }

    fn pivot(&mut self, row: usize, col: usize) {
        let ncols = self.ncols();
        let p = self.rows[row][col].clone();
        for j in 0..=ncols {
            self.rows[row][j] = &self.rows[row][j] / &p;
        }
        for r in 0..self.rows.len() {
            if r != row && !self.rows[r][col].is_zero() {
                let f = self.rows[r][col].clone();
                for j in 0..=ncols {
                    let delta = &f * &self.rows[row][j];
                    self.rows[r][j] = &self.rows[r][j] - delta;
                }
            }
        }
        self.basis[row] = col;
    }

    /// Reduced costs for the given column cost vector.
    fn reduced_costs(&self, costs: &[Rat]) -> Vec<Rat> {
        let ncols = self.ncols();
        let mut red = costs.to_vec();
        for (r, row) in self.rows.iter().enumerate() {
            let cb = &costs[self.basis[r]];
            if cb.is_zero() {
                continue;
            }
            for j in 0..ncols {
                if !row[j].is_zero() {
                    let delta = cb * &row[j];
                    red[j] = &red[j] - delta;
                }
            }
        }
        red
    }

    /// Bland's rule loop for the given costs; returns Err on unboundedness.
    fn optimize(&mut self, costs: &[Rat]) -> Result<()> {
        let ncols = self.ncols();
        loop {
            let red = self.reduced_costs(costs);
            let entering = (0..ncols).find(|&j| {
                !self.banned[j] && red[j].is_negative() && !self.basis.contains(&j)
            });
            let Some(col) = entering else {
                return Ok(());
            };
            // Ratio test; ties resolved by the smallest basic variable index.
            let ncol = self.ncols();
            let mut leave: Option<(Rat, usize, usize)> = None; // ratio, basis var, row
            for (r, row) in self.rows.iter().enumerate() {
                if row[col].is_positive() {
                    let ratio = &row[ncol] / &row[col];
                    let key = (ratio, self.basis[r], r);
                    if leave.as_ref().is_none_or(|best| (&key.0, key.1) < (&best.0, best.1)) {
                        leave = Some(key);
                    }
                }
            }
            let Some((_, _, row)) = leave else {
                return Err(Error::Internal(
                    "LP unbounded below; model violates cost assumptions".into(),
                ));
            };
            self.pivot(row, col);
        }
    }

    fn rhs(&self, r: usize) -> &Rat {
        &self.rows[r][self.ncols()]
    }
}

/// Solve a model exactly. The outcome is deterministic for identical input.
pub fn solve_lp(model: &LpModel) -> Result<LpOutcome> {
    for c in &model.constraints {
        for v in c.coeffs.keys() {
            if !model.vars.contains(v) {
                return Err(Error::InvalidArgument(format!(
                    "row references unknown variable {v}"
                )));
            }
        }
    }
    let mut tab = Tableau::build(model);
    let ncols = tab.ncols();
    let art_base = tab.nstruct + tab.nsurplus;

    // Phase 1: drive artificials to zero.
    if tab.nart > 0 {
        let mut costs = vec![Rat::zero(); ncols];
        for c in costs.iter_mut().take(ncols).skip(art_base) {
            *c = Rat::one();
        }
        tab.optimize(&costs)?;
        let infeasibility: Rat = (0..tab.rows.len())
            .filter(|&r| tab.basis[r] >= art_base)
            .map(|r| tab.rhs(r).clone())
            .fold(Rat::zero(), |a, b| a + b);
        if infeasibility.is_positive() {
            return Ok(LpOutcome::infeasible());
        }
        // Pivot remaining artificials out where the row allows it.
        for r in 0..tab.rows.len() {
            if tab.basis[r] >= art_base {
                let col = (0..art_base)
                    .find(|&j| !tab.rows[r][j].is_zero() && !tab.basis.contains(&j));
                if let Some(col) = col {
                    tab.pivot(r, col);
                }
                // Otherwise the row is vacuous; the artificial stays basic at
                // zero and its row can never change (all non-art entries 0).
            }
        }
        for b in tab.banned.iter_mut().take(ncols).skip(art_base) {
            *b = true;
        }
    }

    // Phase 2: the real objective.
    let mut costs = vec![Rat::zero(); ncols];
    for (j, v) in model.vars.iter().enumerate() {
        costs[j] = model.objective.get(v).cloned().unwrap_or_else(Rat::zero);
    }
    tab.optimize(&costs)?;

    let mut solution = FractionalSolution::new();
    for (r, &b) in tab.basis.iter().enumerate() {
        if b < tab.nstruct {
            solution.set(model.vars[b], tab.rhs(r).clone());
        }
    }
    let objective = model.objective_value(&solution);
    // Duals: reduced costs of the surplus columns, one per row.
    let red = tab.reduced_costs(&costs);
    let duals: Vec<Rat> = (0..tab.nsurplus)
        .map(|i| red[tab.nstruct + i].clone())
        .collect();
    let mut basis = tab.basis.clone();
    basis.sort_unstable();
    let out = LpOutcome {
        status: LpStatus::Optimal,
        solution,
        objective,
        duals,
        basis,
    };
    check_certificate(model, &out)?;
    Ok(out)
}

/// A generator of violated rows; returns at most one violated constraint per
/// call and `None` when `x` satisfies the whole family the oracle speaks for.
/// Oracles must produce rows valid for every integral cover so that cuts can
/// be shared across branch-and-bound nodes.
pub trait SeparationOracle {
    fn name(&self) -> &str;
    fn separate(&mut self, x: &FractionalSolution) -> Result<Option<LinearConstraint>>;
}

/// Covering restoration: returns the violated covering row with the smallest
/// edge id, if any.
pub struct CoveringOracle<'a> {
    pub inst: &'a WtapInstance,
}

impl SeparationOracle for CoveringOracle<'_> {
    fn name(&self) -> &str {
        "covering"
    }

    fn separate(&mut self, x: &FractionalSolution) -> Result<Option<LinearConstraint>> {
        for e in self.inst.edges() {
            if self.inst.coverage(x, e.id) < Rat::one() {
                return Ok(Some(LinearConstraint::new(
                    self.inst.cover(e.id).iter().map(|&l| (l, Rat::one())).collect(),
                    Rat::one(),
                    ConstraintTag::Covering(e.id),
                )));
            }
        }
        Ok(None)
    }
}

/// Pre-collected rows checked lazily (used for bundle rows added on restart).
pub struct PoolOracle {
    pub name: String,
    pub rows: Vec<LinearConstraint>,
}

impl SeparationOracle for PoolOracle {
    fn name(&self) -> &str {
        &self.name
    }

    fn separate(&mut self, x: &FractionalSolution) -> Result<Option<LinearConstraint>> {
        for row in &self.rows {
            if row.violation(x).is_positive() {
                return Ok(Some(row.clone()));
            }
        }
        Ok(None)
    }
}

/// Cutting-plane loop: solve, ask the oracles in order, add the first
/// violated row, repeat. Returns the final outcome plus every row added.
pub fn solve_with_separation(
    model: &LpModel,
    oracles: &mut [&mut dyn SeparationOracle],
    round_limit: usize,
) -> Result<(LpOutcome, Vec<LinearConstraint>)> {
    let mut work = model.clone();
    let mut added = Vec::new();
    for _ in 0..=round_limit {
        let out = solve_lp(&work)?;
        if out.status == LpStatus::Infeasible {
            return Ok((out, added));
        }
        let mut cut = None;
        for oracle in oracles.iter_mut() {
            if let Some(row) = oracle.separate(&out.solution)? {
                if !row.violation(&out.solution).is_positive() {
                    return Err(Error::Internal(format!(
                        "oracle '{}' returned a non-violated row",
                        oracle.name()
                    )));
                }
                cut = Some(row);
                break;
            }
        }
        match cut {
            Some(row) => {
                work.constraints.push(row.clone());
                added.push(row);
            }
            None => return Ok((out, added)),
        }
    }
    Err(Error::ResourceLimit(format!(
        "separation did not converge within {round_limit} rounds"
    )))
}

/// Integral solve outcome.
#[derive(Debug, Clone)]
pub struct IlpOutcome {
    pub solution: FractionalSolution,
    pub objective: Rat,
    pub nodes: usize,
    pub cuts: Vec<LinearConstraint>,
}

/// Best-first branch-and-bound over nonnegative integer variables, with
/// cutting planes separated at every node. Branches on the most fractional
/// variable (ties by variable index); node order is by LP bound with
/// insertion sequence as tie-break, so outcomes are deterministic.
pub fn solve_ilp(
    model: &LpModel,
    oracles: &mut [&mut dyn SeparationOracle],
    round_limit: usize,
    node_limit: usize,
) -> Result<IlpOutcome> {
    let mut cut_pool: Vec<LinearConstraint> = Vec::new();
    let mut incumbent: Option<(Rat, FractionalSolution)> = None;
    let mut heap: BinaryHeap<Reverse<(Rat, u64)>> = BinaryHeap::new();
    let mut node_rows: BTreeMap<u64, Vec<LinearConstraint>> = BTreeMap::new();
    let mut seq = 0u64;
    heap.push(Reverse((Rat::zero(), seq)));
    node_rows.insert(seq, Vec::new());
    let mut explored = 0usize;

    while let Some(Reverse((bound, id))) = heap.pop() {
        let rows = node_rows.remove(&id).unwrap();
        if let Some((best, _)) = &incumbent {
            if &bound >= best {
                continue;
            }
        }
        explored += 1;
        if explored > node_limit {
            return Err(Error::ResourceLimit(format!(
                "branch-and-bound exceeded {node_limit} nodes"
            )));
        }
        let mut work = model.clone();
        work.constraints.extend(cut_pool.iter().cloned());
        work.constraints.extend(rows.iter().cloned());
        let (out, added) = solve_with_separation(&work, oracles, round_limit)?;
        // Globally valid cuts (everything an oracle emits) join the pool.
        cut_pool.extend(added);
        if out.status == LpStatus::Infeasible {
            continue;
        }
        if let Some((best, _)) = &incumbent {
            if &out.objective >= best {
                continue;
            }
        }
        if out.solution.is_integral() {
            incumbent = Some((out.objective, out.solution));
            continue;
        }
        // Most fractional variable, ties by position in the variable list.
        let half = Rat::new(1.into(), 2.into());
        let mut branch: Option<(Rat, usize, LinkId, Rat)> = None;
        for (pos, &v) in model.vars.iter().enumerate() {
            let val = out.solution.get(v);
            if val.is_integer() {
                continue;
            }
            let dist = (val.fract() - &half).abs();
            if branch.as_ref().is_none_or(|(d, p, _, _)| (&dist, pos) < (d, *p)) {
                branch = Some((dist, pos, v, val));
            }
        }
        let (_, _, var, val) = branch.ok_or_else(|| {
            Error::Internal("fractional solution without fractional variable".into())
        })?;
        let floor = val.floor();
        for (coef, rhs) in [
            (-Rat::one(), -floor.clone()),          // x <= floor
            (Rat::one(), floor + Rat::one()),        // x >= floor + 1
        ] {
            let mut child = rows.clone();
            child.push(LinearConstraint::new(
                BTreeMap::from([(var, coef)]),
                rhs,
                ConstraintTag::Branching,
            ));
            seq += 1;
            node_rows.insert(seq, child);
            heap.push(Reverse((out.objective.clone(), seq)));
        }
    }

    match incumbent {
        Some((objective, solution)) => Ok(IlpOutcome {
            solution,
            objective,
            nodes: explored,
            cuts: cut_pool,
        }),
        None => Err(Error::Infeasible("no integral solution".into())),
    }
}
