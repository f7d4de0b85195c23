//! Dense two-phase tableau simplex with Bland's rule.
//!
//! The solver maximizes. Free variables are split into positive and negative
//! parts, rows with negative right-hand sides are negated, and artificial
//! columns are added only where no slack can serve as the starting basis.
//! Artificial columns stay in the tableau through phase II so the final
//! duals can be read off the reduced-cost row.

use crate::error::{Error, Result};
use crate::linalg::Matrix;

/// Largest row or column count accepted for a dense solve.
pub const MAX_DIM: usize = 10_000;
/// Largest dense tableau, in cells.
pub const MAX_CELLS: usize = 40_000_000;

const RC_TOL: f64 = 1e-10;
const PIVOT_TOL: f64 = 1e-9;
const FEAS_TOL: f64 = 1e-9;
const MIN_PIVOT: f64 = 1e-11;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Relation {
    Le,
    Eq,
    Ge,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VarKind {
    Free,
    NonNeg,
}

#[derive(Debug, Clone)]
struct Row {
    coeffs: Vec<(usize, f64)>,
    rel: Relation,
    rhs: f64,
}

/// Incremental description of `max cᵀx` over linear rows.
#[derive(Debug, Clone, Default)]
pub struct LpBuilder {
    kinds: Vec<VarKind>,
    cost: Vec<f64>,
    rows: Vec<Row>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LpSolution {
    pub x: Vec<f64>,
    pub value: f64,
    /// One multiplier per row: `>= 0` for `Le`, `<= 0` for `Ge`, free for `Eq`,
    /// with `c = Σ duals_i a_i` on free columns.
    pub duals: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum LpOutcome {
    Optimal(LpSolution),
    /// `point` is feasible and `point + s * ray` stays feasible for all `s >= 0`
    /// while the objective grows without bound.
    Unbounded { point: Vec<f64>, ray: Vec<f64> },
    /// Phase-I multipliers: a nonzero combination of the rows that proves
    /// no feasible point exists.
    Infeasible { farkas: Vec<f64> },
}

impl LpOutcome {
    pub fn optimal(self) -> Option<LpSolution> {
        match self {
            LpOutcome::Optimal(s) => Some(s),
            _ => None,
        }
    }
}

impl LpBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn num_vars(&self) -> usize {
        self.kinds.len()
    }

    pub fn num_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn add_var(&mut self, kind: VarKind, cost: f64) -> usize {
        self.kinds.push(kind);
        self.cost.push(cost);
        self.kinds.len() - 1
    }

    pub fn add_vars(&mut self, count: usize, kind: VarKind) -> Vec<usize> {
        (0..count).map(|_| self.add_var(kind, 0.0)).collect()
    }

    pub fn set_cost(&mut self, var: usize, cost: f64) {
        self.cost[var] = cost;
    }

    pub fn add_row(&mut self, coeffs: impl IntoIterator<Item = (usize, f64)>, rel: Relation, rhs: f64) -> usize {
        let coeffs: Vec<(usize, f64)> = coeffs.into_iter().filter(|(_, v)| *v != 0.0).collect();
        debug_assert!(coeffs.iter().all(|(j, _)| *j < self.kinds.len()));
        self.rows.push(Row { coeffs, rel, rhs });
        self.rows.len() - 1
    }

    pub fn solve(&self) -> Result<LpOutcome> {
        if !self.cost.iter().all(|c| c.is_finite())
            || !self.rows.iter().all(|r| r.rhs.is_finite() && r.coeffs.iter().all(|(_, v)| v.is_finite()))
        {
            return Err(Error::Invalid("linear program has non-finite data".into()));
        }
        if self.rows.len() > MAX_DIM || self.kinds.len() > MAX_DIM {
            return Err(Error::Capability(format!(
                "linear program with {} rows and {} columns exceeds the dense limit of {MAX_DIM}",
                self.rows.len(),
                self.kinds.len()
            )));
        }
        Tableau::build(self)?.run(self)
    }
}

/// `max cᵀx` subject to `M x <= e` with free `x`.
#[derive(Debug, Clone, PartialEq)]
pub struct LpProblem {
    pub objective: Vec<f64>,
    pub constraints: Matrix,
    pub rhs: Vec<f64>,
}

impl LpProblem {
    pub fn new(objective: Vec<f64>, constraints: Matrix, rhs: Vec<f64>) -> Result<Self> {
        if constraints.cols() != objective.len() || constraints.rows() != rhs.len() {
            return Err(Error::Shape(format!(
                "objective {} / constraints {}x{} / rhs {}",
                objective.len(),
                constraints.rows(),
                constraints.cols(),
                rhs.len()
            )));
        }
        Ok(Self { objective, constraints, rhs })
    }

    fn builder(&self) -> LpBuilder {
        let mut lp = LpBuilder::new();
        for c in &self.objective {
            lp.add_var(VarKind::Free, *c);
        }
        for (i, e) in self.rhs.iter().enumerate() {
            lp.add_row(self.constraints.row(i).iter().copied().enumerate(), Relation::Le, *e);
        }
        lp
    }
}

/// Solves an [`LpProblem`].
pub fn lp_solve(problem: &LpProblem) -> Result<LpOutcome> {
    problem.builder().solve()
}

/// Finds `q >= 0` with `M q = rhs` and `q_i = 0` for every pinned index.
///
/// Phase I runs under Bland's rule, then `Σ q` is minimized; the result is
/// the basic solution reached first, which favours low column indices.
pub fn lp_feasible_nonneg(m: &Matrix, rhs: &[f64], pinned: &[usize]) -> Result<Option<Vec<f64>>> {
    if m.rows() != rhs.len() {
        return Err(Error::Shape(format!("{} rows vs rhs of length {}", m.rows(), rhs.len())));
    }
    let free_cols: Vec<usize> = (0..m.cols()).filter(|j| !pinned.contains(j)).collect();
    let mut lp = LpBuilder::new();
    for _ in &free_cols {
        lp.add_var(VarKind::NonNeg, -1.0);
    }
    for (i, b) in rhs.iter().enumerate() {
        lp.add_row(free_cols.iter().enumerate().map(|(k, &j)| (k, m.get(i, j))), Relation::Eq, *b);
    }
    match lp.solve()? {
        LpOutcome::Optimal(sol) => {
            let mut q = vec![0.0; m.cols()];
            for (k, &j) in free_cols.iter().enumerate() {
                q[j] = sol.x[k].max(0.0);
            }
            Ok(Some(q))
        }
        LpOutcome::Infeasible { .. } => Ok(None),
        LpOutcome::Unbounded { .. } => Err(Error::Conditioning("minimizing a nonnegative sum diverged".into())),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum ColKind {
    Pos(usize),
    Neg(usize),
    Slack,
    Artificial,
}

struct Tableau {
    m: usize,
    width: usize,
    /// `m` rows of `width + 1` entries, the last being the right-hand side.
    a: Vec<f64>,
    /// Reduced costs `z_j - c_j`, last entry the objective value.
    obj: Vec<f64>,
    basis: Vec<usize>,
    cols: Vec<ColKind>,
    flip: Vec<f64>,
    /// Column holding `e_i` in the initial tableau for each row.
    unit_col: Vec<usize>,
    cost_scale: f64,
}

impl Tableau {
    fn build(lp: &LpBuilder) -> Result<Self> {
        let mut cols = Vec::new();
        let mut pos_of = Vec::with_capacity(lp.kinds.len());
        for (j, kind) in lp.kinds.iter().enumerate() {
            pos_of.push(cols.len());
            cols.push(ColKind::Pos(j));
            if *kind == VarKind::Free {
                cols.push(ColKind::Neg(j));
            }
        }
        let m = lp.rows.len();
        let mut flip = Vec::with_capacity(m);
        let mut slack_of = vec![None; m];
        for (i, row) in lp.rows.iter().enumerate() {
            let f = if row.rhs < 0.0 || (row.rhs == 0.0 && row.rel == Relation::Ge) { -1.0 } else { 1.0 };
            flip.push(f);
            if row.rel != Relation::Eq {
                slack_of[i] = Some(cols.len());
                cols.push(ColKind::Slack);
            }
        }
        let mut unit_col = vec![0; m];
        let mut needs_art = vec![false; m];
        for (i, row) in lp.rows.iter().enumerate() {
            let slack_sign = match row.rel {
                Relation::Le => flip[i],
                Relation::Ge => -flip[i],
                Relation::Eq => 0.0,
            };
            if slack_sign > 0.0 {
                unit_col[i] = slack_of[i].expect("inequality rows have slacks");
            } else {
                needs_art[i] = true;
            }
        }
        for i in 0..m {
            if needs_art[i] {
                unit_col[i] = cols.len();
                cols.push(ColKind::Artificial);
            }
        }
        let width = cols.len();
        if m.saturating_mul(width + 1) > MAX_CELLS {
            return Err(Error::Capability(format!(
                "dense tableau of {m} x {} cells exceeds {MAX_CELLS}",
                width + 1
            )));
        }
        let stride = width + 1;
        let mut a = vec![0.0; m * stride];
        for (i, row) in lp.rows.iter().enumerate() {
            let r = &mut a[i * stride..(i + 1) * stride];
            for &(j, v) in &row.coeffs {
                r[pos_of[j]] += flip[i] * v;
                if lp.kinds[j] == VarKind::Free {
                    r[pos_of[j] + 1] -= flip[i] * v;
                }
            }
            if let Some(s) = slack_of[i] {
                r[s] = match row.rel {
                    Relation::Le => flip[i],
                    _ => -flip[i],
                };
            }
            if needs_art[i] {
                r[unit_col[i]] = 1.0;
            }
            r[width] = flip[i] * row.rhs;
        }
        let cost_scale = lp.cost.iter().fold(0.0f64, |s, c| s.max(c.abs()));
        let cost_scale = if cost_scale > 0.0 { cost_scale } else { 1.0 };
        Ok(Self {
            m,
            width,
            a,
            obj: vec![0.0; stride],
            basis: unit_col.clone(),
            cols,
            flip,
            unit_col,
            cost_scale,
        })
    }

    #[inline]
    fn entry(&self, i: usize, j: usize) -> f64 {
        self.a[i * (self.width + 1) + j]
    }

    fn rhs(&self, i: usize) -> f64 {
        self.entry(i, self.width)
    }

    fn reprice(&mut self, cost: &[f64]) {
        let stride = self.width + 1;
        for j in 0..stride {
            let mut z = 0.0;
            for i in 0..self.m {
                let cb = cost[self.basis[i]];
                if cb != 0.0 {
                    z += cb * self.a[i * stride + j];
                }
            }
            self.obj[j] = if j < self.width { z - cost[j] } else { z };
        }
    }

    fn pivot(&mut self, r: usize, c: usize) {
        let stride = self.width + 1;
        let p = self.a[r * stride + c];
        for j in 0..stride {
            self.a[r * stride + j] /= p;
        }
        self.a[r * stride + c] = 1.0;
        let pivot_row: Vec<f64> = self.a[r * stride..(r + 1) * stride].to_vec();
        for i in 0..self.m {
            if i == r {
                continue;
            }
            let f = self.a[i * stride + c];
            if f != 0.0 {
                let row = &mut self.a[i * stride..(i + 1) * stride];
                for (x, pr) in row.iter_mut().zip(&pivot_row) {
                    *x -= f * pr;
                }
                row[c] = 0.0;
            }
        }
        let f = self.obj[c];
        if f != 0.0 {
            for (x, pr) in self.obj.iter_mut().zip(&pivot_row) {
                *x -= f * pr;
            }
            self.obj[c] = 0.0;
        }
        self.basis[r] = c;
    }

    /// Runs simplex iterations. Returns `Some(column)` if that column proves unboundedness.
    fn iterate(&mut self, allowed: &[bool]) -> Result<Option<usize>> {
        let cap = 50 * (self.m + self.width) + 1000;
        for _ in 0..cap {
            let Some(enter) = (0..self.width).find(|&j| allowed[j] && self.obj[j] < -RC_TOL) else {
                return Ok(None);
            };
            let mut leave: Option<(usize, f64)> = None;
            for i in 0..self.m {
                let aij = self.entry(i, enter);
                if aij > PIVOT_TOL {
                    let ratio = self.rhs(i).max(0.0) / aij;
                    leave = match leave {
                        None => Some((i, ratio)),
                        Some((bi, br)) => {
                            let tie = (ratio - br).abs() <= 1e-12 * (1.0 + br.abs());
                            if ratio < br && !tie || tie && self.basis[i] < self.basis[bi] {
                                Some((i, ratio))
                            } else {
                                Some((bi, br))
                            }
                        }
                    };
                }
            }
            let Some((r, _)) = leave else {
                return Ok(Some(enter));
            };
            if self.entry(r, enter).abs() < MIN_PIVOT {
                return Err(Error::Conditioning(format!("pivot {:e} below {MIN_PIVOT:e}", self.entry(r, enter))));
            }
            self.pivot(r, enter);
        }
        Err(Error::Conditioning("simplex iteration limit reached".into()))
    }

    fn row_duals(&self, cost: &[f64]) -> Vec<f64> {
        (0..self.m)
            .map(|i| {
                let j = self.unit_col[i];
                self.flip[i] * (self.obj[j] + cost[j])
            })
            .collect()
    }

    fn primal(&self, lp: &LpBuilder) -> Vec<f64> {
        let mut std = vec![0.0; self.width];
        for i in 0..self.m {
            std[self.basis[i]] = self.rhs(i);
        }
        self.to_original(lp, &std)
    }

    fn to_original(&self, lp: &LpBuilder, std: &[f64]) -> Vec<f64> {
        let mut x = vec![0.0; lp.kinds.len()];
        for (j, kind) in self.cols.iter().enumerate() {
            match kind {
                ColKind::Pos(v) => x[*v] += std[j],
                ColKind::Neg(v) => x[*v] -= std[j],
                _ => {}
            }
        }
        x
    }

    fn run(mut self, lp: &LpBuilder) -> Result<LpOutcome> {
        let is_art: Vec<bool> = self.cols.iter().map(|c| *c == ColKind::Artificial).collect();
        let rhs_scale = 1.0 + (0..self.m).fold(0.0f64, |s, i| s.max(self.rhs(i).abs()));
        if is_art.iter().any(|a| *a) {
            let phase1: Vec<f64> = is_art.iter().map(|&a| if a { -1.0 } else { 0.0 }).collect();
            self.reprice(&phase1);
            let allowed: Vec<bool> = is_art.iter().map(|a| !a).collect();
            if self.iterate(&allowed)?.is_some() {
                return Err(Error::Conditioning("phase I reported an unbounded ray".into()));
            }
            if self.obj[self.width] < -FEAS_TOL * rhs_scale {
                return Ok(LpOutcome::Infeasible { farkas: self.row_duals(&phase1) });
            }
            for i in 0..self.m {
                if is_art[self.basis[i]] {
                    if let Some(j) = (0..self.width).find(|&j| !is_art[j] && self.entry(i, j).abs() > PIVOT_TOL) {
                        self.pivot(i, j);
                    }
                }
            }
        }
        let mut phase2 = vec![0.0; self.width];
        for (j, kind) in self.cols.iter().enumerate() {
            match kind {
                ColKind::Pos(v) => phase2[j] = lp.cost[*v] / self.cost_scale,
                ColKind::Neg(v) => phase2[j] = -lp.cost[*v] / self.cost_scale,
                _ => {}
            }
        }
        self.reprice(&phase2);
        let allowed: Vec<bool> = is_art.iter().map(|a| !a).collect();
        if let Some(enter) = self.iterate(&allowed)? {
            let mut dir = vec![0.0; self.width];
            dir[enter] = 1.0;
            for i in 0..self.m {
                dir[self.basis[i]] -= self.entry(i, enter);
            }
            return Ok(LpOutcome::Unbounded { point: self.primal(lp), ray: self.to_original(lp, &dir) });
        }
        let x = self.primal(lp);
        self.check_residual(lp, &x, rhs_scale)?;
        let value = lp.cost.iter().zip(&x).map(|(c, v)| c * v).sum();
        let duals = self.row_duals(&phase2).into_iter().map(|y| y * self.cost_scale).collect();
        Ok(LpOutcome::Optimal(LpSolution { x, value, duals }))
    }

    fn check_residual(&self, lp: &LpBuilder, x: &[f64], rhs_scale: f64) -> Result<()> {
        let xs = 1.0 + x.iter().fold(0.0f64, |s, v| s.max(v.abs()));
        for (i, row) in lp.rows.iter().enumerate() {
            let ax: f64 = row.coeffs.iter().map(|(j, v)| v * x[*j]).sum();
            let viol = match row.rel {
                Relation::Le => ax - row.rhs,
                Relation::Ge => row.rhs - ax,
                Relation::Eq => (ax - row.rhs).abs(),
            };
            if viol > 1e-7 * rhs_scale * xs {
                return Err(Error::Conditioning(format!("row {i} violated by {viol:e} after solve")));
            }
        }
        for (j, kind) in lp.kinds.iter().enumerate() {
            if *kind == VarKind::NonNeg && x[j] < -1e-7 * xs {
                return Err(Error::Conditioning(format!("variable {j} negative ({:e}) after solve", x[j])));
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn problem(c: Vec<f64>, rows: &[Vec<f64>], e: Vec<f64>) -> LpProblem {
        LpProblem::new(c, Matrix::from_rows(rows).unwrap(), e).unwrap()
    }

    #[test]
    fn bounded_interval() {
        let p = problem(vec![1.0], &[vec![1.0], vec![-1.0]], vec![1.0, 0.0]);
        let sol = lp_solve(&p).unwrap().optimal().unwrap();
        assert_eq!(sol.x, vec![1.0]);
        assert_eq!(sol.value, 1.0);
        assert_eq!(sol.duals, vec![1.0, 0.0]);
    }

    #[test]
    fn unbounded_half_line() {
        let p = problem(vec![1.0], &[vec![-1.0]], vec![0.0]);
        match lp_solve(&p).unwrap() {
            LpOutcome::Unbounded { point, ray } => {
                assert!(point[0] >= 0.0);
                assert!(ray[0] > 0.0);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn simplex_triangle() {
        // Vertices (0,0), (1,0), (0,1): objective values 0, 1, 1.
        let p = problem(
            vec![1.0, 1.0],
            &[vec![1.0, 1.0], vec![-1.0, 0.0], vec![0.0, -1.0]],
            vec![1.0, 0.0, 0.0],
        );
        let sol = lp_solve(&p).unwrap().optimal().unwrap();
        assert!((sol.value - 1.0).abs() < 1e-12);
        let mt = p.constraints.tr_mul_vec(&sol.duals);
        assert!(mt.iter().zip(&p.objective).all(|(a, b)| (a - b).abs() < 1e-12));
        assert!(sol.duals.iter().all(|y| *y >= -1e-12));
    }

    #[test]
    fn infeasible_with_farkas_certificate() {
        // x <= -1 and -x <= 0.
        let p = problem(vec![1.0], &[vec![1.0], vec![-1.0]], vec![-1.0, 0.0]);
        match lp_solve(&p).unwrap() {
            LpOutcome::Infeasible { farkas } => {
                assert!(farkas.iter().all(|y| *y >= -1e-12));
                let mt = p.constraints.tr_mul_vec(&farkas);
                assert!(mt[0].abs() < 1e-12);
                let ey: f64 = p.rhs.iter().zip(&farkas).map(|(a, b)| a * b).sum();
                assert!(ey < 0.0);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn feasible_nonneg_cases() {
        let id = Matrix::identity(3);
        assert_eq!(lp_feasible_nonneg(&id, &[1.0, 0.0, 2.5], &[]).unwrap(), Some(vec![1.0, 0.0, 2.5]));
        assert_eq!(lp_feasible_nonneg(&id, &[1.0, -0.5, 2.5], &[]).unwrap(), None);
        let row = Matrix::from_rows(&[vec![1.0, 1.0]]).unwrap();
        assert_eq!(lp_feasible_nonneg(&row, &[2.0], &[]).unwrap(), Some(vec![2.0, 0.0]));
        assert_eq!(lp_feasible_nonneg(&row, &[2.0], &[0]).unwrap(), Some(vec![0.0, 2.0]));
        assert_eq!(lp_feasible_nonneg(&row, &[2.0], &[0, 1]).unwrap(), None);
    }

    #[test]
    fn equality_and_ge_duals() {
        // max x + 2y, x + y = 1, y >= 0.25, x >= 0 (free vars).
        let mut lp = LpBuilder::new();
        let x = lp.add_var(VarKind::Free, 1.0);
        let y = lp.add_var(VarKind::Free, 2.0);
        lp.add_row([(x, 1.0), (y, 1.0)], Relation::Eq, 1.0);
        lp.add_row([(y, 1.0)], Relation::Ge, 0.25);
        lp.add_row([(x, 1.0)], Relation::Ge, 0.0);
        let sol = lp.solve().unwrap().optimal().unwrap();
        assert!((sol.value - 2.0).abs() < 1e-12);
        assert!((sol.x[y] - 1.0).abs() < 1e-12);
        // stationarity: c = Σ y_i a_i
        let gx = sol.duals[0] + sol.duals[2];
        let gy = sol.duals[0] + sol.duals[1];
        assert!((gx - 1.0).abs() < 1e-12 && (gy - 2.0).abs() < 1e-12);
        assert!(sol.duals[1] <= 1e-12 && sol.duals[2] <= 1e-12);
    }

    #[test]
    fn degenerate_problem_terminates() {
        // Classic cycling example under Dantzig's rule (Beale).
        let p = problem(
            vec![0.75, -150.0, 0.02, -6.0],
            &[
                vec![0.25, -60.0, -0.04, 9.0],
                vec![0.5, -90.0, -0.02, 3.0],
                vec![0.0, 0.0, 1.0, 0.0],
                vec![-1.0, 0.0, 0.0, 0.0],
                vec![0.0, -1.0, 0.0, 0.0],
                vec![0.0, 0.0, -1.0, 0.0],
                vec![0.0, 0.0, 0.0, -1.0],
            ],
            vec![0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0],
        );
        let sol = lp_solve(&p).unwrap().optimal().unwrap();
        assert!((sol.value - 0.05).abs() < 1e-9, "{}", sol.value);
    }

    #[test]
    fn oversized_is_capability_error() {
        let mut lp = LpBuilder::new();
        let v = lp.add_var(VarKind::Free, 1.0);
        for _ in 0..=MAX_DIM {
            lp.add_row([(v, 1.0)], Relation::Le, 1.0);
        }
        assert!(matches!(lp.solve(), Err(Error::Capability(_))));
    }
}
