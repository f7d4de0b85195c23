//! Solvers for the discrete control problem: conditional gradient with
//! adjoint gradients, a monolithic LP for polyhedral maps, and exhaustive
//! enumeration over a finite alphabet.

use std::fmt;

use crate::adjoint::adjoint_for;
use crate::dynamics::{control_points, simulate, ControlField};
use crate::error::{Error, Result};
use crate::grid::{BoundaryData, Field, GridPoint, GridSpec};
use crate::inclusion::InclusionMap;
use crate::lp::{LpBuilder, LpOutcome, Relation, VarKind, MAX_DIM};
use crate::objective::{objective_value, Objective};

/// Largest number of assignments [`brute_force`] will enumerate.
pub const MAX_ENUMERATION: u64 = 10_000_000;

/// Map, cost and boundary data on one grid.
#[derive(Debug, Clone, PartialEq)]
pub struct Problem {
    pub map: InclusionMap,
    pub objective: Objective,
    pub boundary: BoundaryData,
}

impl Problem {
    pub fn new(map: InclusionMap, objective: Objective, boundary: BoundaryData) -> Result<Self> {
        let spec = *boundary.spec();
        if map.dim() != spec.dim() {
            return Err(Error::Shape(format!("map dimension {} vs grid state dimension {}", map.dim(), spec.dim())));
        }
        objective.check_grid(&spec)?;
        Ok(Self { map, objective, boundary })
    }

    pub fn spec(&self) -> &GridSpec {
        self.boundary.spec()
    }

    pub fn simulate(&self, w: &ControlField) -> Result<Field> {
        Ok(simulate(&self.map, &self.boundary, w)?.state)
    }

    pub fn cost(&self, u: &Field) -> Result<f64> {
        objective_value(&self.objective, u)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveResult {
    pub control: ControlField,
    pub state: Field,
    pub adjoint: Option<Field>,
    /// Per-node row multipliers of a polyhedral solve.
    pub multiplier: Option<Field>,
    pub objective: f64,
    pub iterations: usize,
    /// Conditional-gradient gap (zero for exact solvers).
    pub gap: f64,
    pub warnings: Vec<String>,
}

impl fmt::Display for SolveResult {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "objective {:.16e}", self.objective)?;
        writeln!(f, "iterations {}", self.iterations)?;
        write!(f, "gap {:.16e}", self.gap)?;
        for w in &self.warnings {
            write!(f, "\nwarning {w}")?;
        }
        Ok(())
    }
}

/// State, adjoint and cost gradient with respect to the controls.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradient {
    pub state: Field,
    pub adjoint: Field,
    /// `-δσh Bᵀ u*` at every control node.
    pub control: ControlField,
}

fn control_matrix(map: &InclusionMap) -> Result<&crate::linalg::Matrix> {
    match map {
        InclusionMap::LinearControl { b, .. } => Ok(b),
        _ => Err(Error::Capability("adjoint gradients need a linear-control map".into())),
    }
}

/// First-order change of the cost under `w -> w + εφ` is `ε Σ ⟨grad, φ⟩`.
pub fn adjoint_gradient(problem: &Problem, w: &ControlField) -> Result<Gradient> {
    let b = control_matrix(&problem.map)?;
    let state = problem.simulate(w)?;
    let adjoint = adjoint_for(&problem.map, &problem.objective, &state)?;
    let spec = *problem.spec();
    let scale = -spec.cell_volume();
    let control = ControlField::from_fn(&spec, w.dim(), |p| {
        b.tr_mul_vec(adjoint.get(p)).iter().map(|x| scale * x).collect()
    });
    Ok(Gradient { state, adjoint, control })
}

/// Conditional gradient with step `2/(k+2)`, starting from the canonical
/// point of `U`. The linear oracle picks, node by node, the control
/// maximizing `⟨B w, u*⟩`.
pub fn solve_frank_wolfe(problem: &Problem, max_iters: usize, gap_tol: f64) -> Result<SolveResult> {
    let InclusionMap::LinearControl { b, set, .. } = &problem.map else {
        return Err(Error::Capability("conditional gradient needs a linear-control map".into()));
    };
    let spec = *problem.spec();
    let r = set.dim();
    let start = set
        .support(&vec![0.0; r])?
        .maximizer
        .ok_or_else(|| Error::Invalid("control set has no canonical point".into()))?;
    let mut w = ControlField::constant(&spec, &start);
    let mut warnings = Vec::new();
    let mut k = 0;
    loop {
        let grad = adjoint_gradient(problem, &w)?;
        let mut vertex = ControlField::zeros(&spec, r);
        let mut gap = 0.0;
        for p in control_points(&spec) {
            let dir = b.tr_mul_vec(grad.adjoint.get(p));
            let what = set
                .support(&dir)?
                .maximizer
                .ok_or_else(|| Error::Unbounded(format!("control set unbounded in the oracle direction at {p}")))?;
            let g = grad.control.get(p);
            gap += (0..r).map(|j| g[j] * (w.get(p)[j] - what[j])).sum::<f64>();
            vertex.get_mut(p).copy_from_slice(&what);
        }
        if gap <= gap_tol || k >= max_iters {
            if gap > gap_tol {
                warnings.push(format!("stopped after {k} iterations with gap {gap:.6e} above {gap_tol:.6e}"));
            }
            let objective = problem.cost(&grad.state)?;
            return Ok(SolveResult {
                control: w,
                state: grad.state,
                adjoint: Some(grad.adjoint),
                multiplier: None,
                objective,
                iterations: k,
                gap,
                warnings,
            });
        }
        let step = 2.0 / (k as f64 + 2.0);
        for p in control_points(&spec) {
            let target = vertex.get(p).to_vec();
            for (x, t) in w.get_mut(p).iter_mut().zip(target) {
                *x += step * (t - *x);
            }
        }
        k += 1;
    }
}

/// A component of the state at one node: an LP variable or a known value.
#[derive(Clone, Copy)]
enum Slot {
    Var(usize),
    Known(f64),
}

struct StateVars {
    spec: GridSpec,
    first: usize,
}

impl StateVars {
    fn slot(&self, b: &BoundaryData, p: GridPoint, k: usize) -> Slot {
        match b.value_at(p) {
            Some(v) => Slot::Known(v[k]),
            None => {
                let s = &self.spec;
                let node = ((p.it - 1) * (s.ny() - 2) + (p.iy - 1)) * (s.nx() - 2) + (p.ix - 1);
                Slot::Var(self.first + node * s.dim() + k)
            }
        }
    }
}

/// Accumulates `Σ coeff * slot` into variable terms and a constant.
fn push(terms: &mut Vec<(usize, f64)>, constant: &mut f64, slot: Slot, coeff: f64) {
    match slot {
        Slot::Var(j) => terms.push((j, coeff)),
        Slot::Known(v) => *constant += coeff * v,
    }
}

/// Solves the polyhedral problem as one LP over the interior state.
///
/// The returned multiplier field holds, at each interior node with `t < T`,
/// the row duals divided by `δσh`; the adjoint is `-Bᵀ q`.
pub fn solve_polyhedral_lp(problem: &Problem) -> Result<SolveResult> {
    let InclusionMap::Polyhedral { a, b: bm, d } = &problem.map else {
        return Err(Error::Capability("the monolithic LP needs a polyhedral map".into()));
    };
    if matches!(problem.objective, Objective::Quadratic { .. }) {
        return Err(Error::Capability("the monolithic LP needs a linear or piecewise-affine cost".into()));
    }
    let spec = *problem.spec();
    let bd = &problem.boundary;
    let n = spec.dim();
    let s = d.len();
    let interior = spec.num_interior_spatial();
    let levels = spec.nt() - 1;
    let state_vars = interior * levels * n;
    let epi_vars = if problem.objective.is_smooth() { 0 } else { interior * levels };
    let rows = interior * levels * s
        + match &problem.objective {
            Objective::PolyhedralMax(p) => interior * levels * p.len(),
            _ => 0,
        };
    if state_vars + epi_vars > MAX_DIM || rows > MAX_DIM {
        return Err(Error::Capability(format!(
            "polyhedral LP with {} variables and {rows} rows exceeds the dense limit of {MAX_DIM}",
            state_vars + epi_vars
        )));
    }
    let mut lp = LpBuilder::new();
    let first = lp.num_vars();
    lp.add_vars(state_vars, VarKind::Free);
    let vars = StateVars { spec, first };
    let w = spec.cell_volume();
    let (h, dx2, dy2) = (spec.dt(), spec.dx() * spec.dx(), spec.dy() * spec.dy());

    let mut dyn_rows = Vec::with_capacity(interior * levels * s);
    for p in control_points(&spec) {
        let later = GridPoint::new(p.ix, p.iy, p.it + 1);
        let nb = [
            GridPoint::new(p.ix - 1, p.iy, p.it),
            GridPoint::new(p.ix + 1, p.iy, p.it),
            GridPoint::new(p.ix, p.iy - 1, p.it),
            GridPoint::new(p.ix, p.iy + 1, p.it),
        ];
        for i in 0..s {
            let mut terms = Vec::new();
            let mut constant = 0.0;
            for k in 0..n {
                // A u - B v with v = (u(t+h) - u)/h - Δu.
                let ak = a.get(i, k);
                let bk = bm.get(i, k);
                let center = ak + bk / h - bk * (2.0 / dx2 + 2.0 / dy2);
                push(&mut terms, &mut constant, vars.slot(bd, p, k), center);
                push(&mut terms, &mut constant, vars.slot(bd, later, k), -bk / h);
                for (j, q) in nb.iter().enumerate() {
                    let coef = if j < 2 { bk / dx2 } else { bk / dy2 };
                    push(&mut terms, &mut constant, vars.slot(bd, *q, k), coef);
                }
            }
            dyn_rows.push(lp.add_row(terms, Relation::Le, d[i] - constant));
        }
    }

    match &problem.objective {
        Objective::Linear(_) => {
            for p in spec.interior_points(1..spec.nt()) {
                let c = problem.objective.gradient_at(p, &vec![0.0; n]);
                for k in 0..n {
                    if let Slot::Var(j) = vars.slot(bd, p, k) {
                        lp.set_cost(j, -w * c[k]);
                    }
                }
            }
        }
        Objective::PolyhedralMax(pieces) => {
            for p in spec.interior_points(1..spec.nt()) {
                let tau = lp.add_var(VarKind::Free, -w);
                for pc in pieces {
                    let terms = (0..n).filter_map(|k| match vars.slot(bd, p, k) {
                        Slot::Var(j) => Some((j, pc.slope[k])),
                        Slot::Known(_) => None,
                    });
                    lp.add_row(terms.chain([(tau, -1.0)]), Relation::Le, -pc.offset);
                }
            }
        }
        Objective::Quadratic { .. } => unreachable!(),
    }

    let sol = match lp.solve()? {
        LpOutcome::Optimal(sol) => sol,
        LpOutcome::Infeasible { .. } => {
            return Err(Error::Infeasible("no state satisfies the polyhedral constraints with this boundary data".into()))
        }
        LpOutcome::Unbounded { .. } => return Err(Error::Unbounded("the cost is unbounded below".into())),
    };

    let mut state = Field::state_zeros(&spec);
    for p in spec.points() {
        for k in 0..n {
            state.get_mut(p)[k] = match vars.slot(bd, p, k) {
                Slot::Var(j) => sol.x[j],
                Slot::Known(v) => v,
            };
        }
    }
    let control = ControlField::from_fn(&spec, n, |p| state.parabolic_residual(p));
    let mut q = Field::zeros(&spec, s);
    for (row, p) in dyn_rows.chunks(s).zip(control_points(&spec)) {
        for (i, r) in row.iter().enumerate() {
            q.get_mut(p)[i] = sol.duals[*r].max(0.0) / w;
        }
    }
    let mut adjoint = Field::state_zeros(&spec);
    for p in control_points(&spec) {
        let bq = bm.tr_mul_vec(q.get(p));
        for (x, v) in adjoint.get_mut(p).iter_mut().zip(bq) {
            *x = -v;
        }
    }
    let objective = problem.cost(&state)?;
    Ok(SolveResult {
        control,
        state,
        adjoint: Some(adjoint),
        multiplier: Some(q),
        objective,
        iterations: 1,
        gap: 0.0,
        warnings: Vec::new(),
    })
}

/// Exact minimizer over controls drawn node by node from `alphabet`.
///
/// Assignments are visited in odometer order (earliest node fastest); a
/// later assignment replaces the incumbent only on strict improvement.
/// Assignments that leave the admissible set are skipped.
pub fn brute_force(problem: &Problem, alphabet: &[Vec<f64>]) -> Result<SolveResult> {
    let spec = *problem.spec();
    if spec.nx() > 4 || spec.ny() > 4 || spec.nt() > 4 {
        return Err(Error::Capability(format!(
            "enumeration is limited to 4x4x4 grids, got {}x{}x{}",
            spec.nx(),
            spec.ny(),
            spec.nt()
        )));
    }
    let r = problem.map.control_dim();
    if alphabet.is_empty() || alphabet.iter().any(|a| a.len() != r) {
        return Err(Error::Shape(format!("alphabet must be nonempty with entries of length {r}")));
    }
    let nodes: Vec<GridPoint> = control_points(&spec).collect();
    let total = (alphabet.len() as u64).checked_pow(nodes.len() as u32).filter(|t| *t <= MAX_ENUMERATION);
    let Some(total) = total else {
        return Err(Error::Capability(format!(
            "{} symbols over {} nodes exceeds {MAX_ENUMERATION} assignments",
            alphabet.len(),
            nodes.len()
        )));
    };
    let mut digits = vec![0usize; nodes.len()];
    let mut best: Option<(f64, ControlField, Field)> = None;
    let mut w = ControlField::zeros(&spec, r);
    for _ in 0..total {
        for (p, dgt) in nodes.iter().zip(&digits) {
            w.get_mut(*p).copy_from_slice(&alphabet[*dgt]);
        }
        match problem.simulate(&w) {
            Ok(u) => {
                let j = problem.cost(&u)?;
                if best.as_ref().map_or(true, |(bj, _, _)| j < *bj) {
                    best = Some((j, w.clone(), u));
                }
            }
            Err(Error::ControlInfeasible { .. }) => {}
            Err(e) => return Err(e),
        }
        for dgt in digits.iter_mut() {
            *dgt += 1;
            if *dgt < alphabet.len() {
                break;
            }
            *dgt = 0;
        }
    }
    let Some((objective, control, state)) = best else {
        return Err(Error::Infeasible("no assignment over the alphabet is admissible".into()));
    };
    Ok(SolveResult {
        control,
        state,
        adjoint: None,
        multiplier: None,
        objective,
        iterations: total as usize,
        gap: 0.0,
        warnings: Vec::new(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::ConvexSet;
    use crate::linalg::Matrix;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn bang_bang(spec: &GridSpec) -> Problem {
        let map = InclusionMap::linear_control(Matrix::scalar(0.0), Matrix::scalar(1.0), ConvexSet::cube(1, -1.0, 1.0).unwrap())
            .unwrap();
        Problem::new(map, Objective::linear(vec![1.0]), BoundaryData::zero(spec)).unwrap()
    }

    #[test]
    fn zero_cost_stops_immediately() {
        let spec = GridSpec::unit_square(5, 0.01, 0.05, 1).unwrap();
        let mut p = bang_bang(&spec);
        p.objective = Objective::zero(1);
        let res = solve_frank_wolfe(&p, 50, 1e-12).unwrap();
        assert_eq!(res.iterations, 0);
        assert_eq!(res.gap, 0.0);
        assert_eq!(res.objective, 0.0);
        let g = adjoint_gradient(&p, &res.control).unwrap();
        assert!(g.control.field().max_abs() == 0.0);
    }

    #[test]
    fn gradient_matches_central_differences() {
        let spec = GridSpec::unit_square(5, 0.01, 0.04, 1).unwrap();
        let map = InclusionMap::linear_control(Matrix::scalar(0.8), Matrix::scalar(1.5), ConvexSet::cube(1, -1.0, 1.0).unwrap())
            .unwrap();
        let g = Objective::quadratic(Matrix::scalar(1.0), vec![1.0]).unwrap();
        let b = BoundaryData::from_fn(&spec, |x, y, t| vec![0.3 + x * y - t]);
        let p = Problem::new(map, g, b).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let w = ControlField::from_fn(&spec, 1, |_| vec![rng.gen_range(-0.5..0.5)]);
        let grad = adjoint_gradient(&p, &w).unwrap();
        let eps = 1e-5;
        for q in control_points(&spec) {
            let mut wp = w.clone();
            wp.get_mut(q)[0] += eps;
            let mut wm = w.clone();
            wm.get_mut(q)[0] -= eps;
            let fd = (p.cost(&p.simulate(&wp).unwrap()).unwrap() - p.cost(&p.simulate(&wm).unwrap()).unwrap()) / (2.0 * eps);
            let an = grad.control.get(q)[0];
            assert!((fd - an).abs() <= 1e-5 * an.abs().max(1e-300), "{q}: {fd} vs {an}");
        }
    }

    #[test]
    fn single_node_enumeration_picks_lower_bound() {
        let spec = GridSpec::new(1.0, 1.0, 0.1, 0.5, 0.5, 0.05, 1).unwrap();
        let p = bang_bang(&spec);
        let res = brute_force(&p, &[vec![-1.0], vec![0.0], vec![1.0]]).unwrap();
        assert!(res.control.points().all(|q| res.control.get(q) == [-1.0]));
        let fw = solve_frank_wolfe(&p, 100, 1e-12).unwrap();
        assert!((fw.objective - res.objective).abs() < 1e-12);
    }

    #[test]
    fn enumeration_edge_cases() {
        let spec = GridSpec::new(1.0, 1.0, 0.1, 0.5, 0.5, 0.05, 1).unwrap();
        let mut p = bang_bang(&spec);
        p.objective = Objective::zero(1);
        let res = brute_force(&p, &[vec![-1.0], vec![0.0], vec![1.0]]).unwrap();
        assert_eq!(res.objective, 0.0);
        assert!(res.control.points().all(|q| res.control.get(q) == [-1.0]));
        let only = brute_force(&p, &[vec![0.0]]).unwrap();
        assert_eq!(only.iterations, 1);
        let big = GridSpec::unit_square(5, 0.01, 0.02, 1).unwrap();
        assert!(matches!(brute_force(&bang_bang(&big), &[vec![0.0]]), Err(Error::Capability(_))));
    }

    fn abs_velocity() -> InclusionMap {
        // |v| <= 1 written as A u - B v <= d with A = 0, B = (1, -1).
        InclusionMap::polyhedral(Matrix::zeros(2, 1), Matrix::from_rows(&[vec![1.0], vec![-1.0]]).unwrap(), vec![1.0, 1.0])
            .unwrap()
    }

    #[test]
    fn polyhedral_lp_matches_enumeration() {
        let spec = GridSpec::new(1.0, 1.0, 0.1, 0.5, 0.5, 0.05, 1).unwrap();
        let p = Problem::new(abs_velocity(), Objective::linear(vec![1.0]), BoundaryData::zero(&spec)).unwrap();
        let lp = solve_polyhedral_lp(&p).unwrap();
        let bf = brute_force(&p, &[vec![-1.0], vec![0.0], vec![1.0]]).unwrap();
        assert!((lp.objective - bf.objective).abs() < 1e-9);
        assert!(lp.control.points().all(|q| (lp.control.get(q)[0] + 1.0).abs() < 1e-9));
    }

    #[test]
    fn polyhedral_zero_cost_and_infeasible_data() {
        let spec = GridSpec::new(1.0, 1.0, 0.1, 0.5, 0.5, 0.05, 1).unwrap();
        let p = Problem::new(abs_velocity(), Objective::zero(1), BoundaryData::zero(&spec)).unwrap();
        assert_eq!(solve_polyhedral_lp(&p).unwrap().objective, 0.0);
        // v >= u together with v <= 1 fails once u starts at 10.
        let f = InclusionMap::polyhedral(
            Matrix::from_rows(&[vec![1.0], vec![0.0]]).unwrap(),
            Matrix::from_rows(&[vec![1.0], vec![-1.0]]).unwrap(),
            vec![0.0, 1.0],
        )
        .unwrap();
        let b = BoundaryData::constant(&spec, &[10.0]);
        let p = Problem::new(f, Objective::zero(1), b).unwrap();
        assert!(matches!(solve_polyhedral_lp(&p), Err(Error::Infeasible(_))));
    }
}
