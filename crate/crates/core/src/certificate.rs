//! Optimality certificates for a candidate state: adjoint conditions,
//! pointwise maximum principle, the polyhedral multiplier system, and an
//! empirical comparison against random admissible controls.

use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::adjoint::adjoint_residual_unchecked;
use crate::dynamics::{check_feasible, control_points, march, ControlField};
use crate::error::{Error, Result};
use crate::geometry::polytope_support;
use crate::grid::{Field, GridPoint, GridSpec};
use crate::inclusion::InclusionMap;
use crate::linalg::{dot, max_abs, max_abs_diff, Matrix};
use crate::optimizer::Problem;

/// Seed used by [`sufficiency_sampling`] unless the caller picks one.
pub const DEFAULT_SEED: u64 = 0x5eed_0001;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerances {
    pub inclusion: f64,
    pub boundary: f64,
    pub argmax: f64,
    pub complementarity: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self { inclusion: 1e-8, boundary: 1e-12, argmax: 1e-8, complementarity: 1e-8 }
    }
}

impl Tolerances {
    /// Every tolerance set to `tol`.
    pub fn uniform(tol: f64) -> Self {
        Self { inclusion: tol, boundary: tol, argmax: tol, complementarity: tol }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("inclusion", self.inclusion),
            ("boundary", self.boundary),
            ("argmax", self.argmax),
            ("complementarity", self.complementarity),
        ] {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::Invalid(format!("{name} tolerance must be positive and finite, got {v}")));
            }
        }
        Ok(())
    }
}

/// Candidate optimum with its adjoint and, for polyhedral maps, the row multipliers.
#[derive(Debug, Clone, PartialEq)]
pub struct Certificate {
    pub utilde: Field,
    pub ustar: Field,
    pub q: Option<Field>,
    pub lambda: f64,
    pub tolerances: Tolerances,
}

impl Certificate {
    pub fn new(utilde: Field, ustar: Field, q: Option<Field>, lambda: f64, tolerances: Tolerances) -> Result<Self> {
        if !utilde.same_shape(&ustar) {
            return Err(Error::Shape("state and adjoint fields differ in shape".into()));
        }
        if let Some(q) = &q {
            if q.spec() != utilde.spec() {
                return Err(Error::Shape("multiplier field lives on a different grid".into()));
            }
        }
        if lambda != 0.0 && lambda != 1.0 {
            return Err(Error::Invalid(format!("lambda must be 0 or 1, got {lambda}")));
        }
        tolerances.validate()?;
        Ok(Self { utilde, ustar, q, lambda, tolerances })
    }

    pub fn spec(&self) -> &GridSpec {
        self.utilde.spec()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Condition {
    pub name: String,
    pub max_violation: f64,
    pub worst_point: Option<GridPoint>,
    pub tol: f64,
    pub pass: bool,
}

impl Condition {
    fn new(name: &str, max_violation: f64, worst_point: Option<GridPoint>, tol: f64) -> Self {
        let pass = max_violation <= tol;
        Self { name: name.into(), max_violation, worst_point, tol, pass }
    }

    /// `name,max_violation,worst_point,pass` with the point as `ix:iy:it`.
    pub fn record(&self) -> String {
        let pt = self.worst_point.map_or_else(|| "-".into(), |p| format!("{}:{}:{}", p.ix, p.iy, p.it));
        format!("{},{:.16e},{},{}", self.name, self.max_violation, pt, if self.pass { "pass" } else { "fail" })
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct VerifyReport {
    pub conditions: Vec<Condition>,
    pub notes: Vec<String>,
    pub pass: bool,
}

impl VerifyReport {
    fn from_conditions(conditions: Vec<Condition>, notes: Vec<String>) -> Self {
        let pass = conditions.iter().all(|c| c.pass);
        Self { conditions, notes, pass }
    }

    /// Appends another report; the verdict becomes the conjunction.
    pub fn merge(mut self, other: VerifyReport) -> Self {
        self.conditions.extend(other.conditions);
        self.notes.extend(other.notes);
        self.pass = self.conditions.iter().all(|c| c.pass);
        self
    }

    pub fn condition(&self, name: &str) -> Option<&Condition> {
        self.conditions.iter().find(|c| c.name == name)
    }

    /// Machine-readable form, one condition per line.
    pub fn records(&self) -> String {
        let mut out = String::from("name,max_violation,worst_point,pass\n");
        for c in &self.conditions {
            out.push_str(&c.record());
            out.push('\n');
        }
        out
    }
}

impl fmt::Display for VerifyReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for c in &self.conditions {
            let pt = c.worst_point.map_or_else(|| "-".into(), |p| p.to_string());
            writeln!(
                f,
                "{:<24} {} max {:.16e} (tol {:.1e}) at {pt}",
                c.name,
                if c.pass { "PASS" } else { "FAIL" },
                c.max_violation,
                c.tol
            )?;
        }
        for n in &self.notes {
            writeln!(f, "note: {n}")?;
        }
        write!(f, "overall {}", if self.pass { "PASS" } else { "FAIL" })
    }
}

fn track(max: &mut f64, worst: &mut Option<GridPoint>, v: f64, p: GridPoint) {
    if v > *max || (v.is_nan() && !max.is_nan()) {
        *max = v;
        *worst = Some(p);
    }
}

fn check_shapes(problem: &Problem, cert: &Certificate) -> Result<()> {
    if cert.spec() != problem.spec() || cert.utilde.dim() != problem.map.dim() {
        return Err(Error::Shape("certificate fields do not match the problem grid".into()));
    }
    Ok(())
}

/// Boundary zeros of the adjoint, the argmax condition along the candidate,
/// and the adjoint inclusion with `cert.lambda`.
pub fn check_conditions_i_iii(problem: &Problem, cert: &Certificate) -> Result<VerifyReport> {
    check_shapes(problem, cert)?;
    let tol = cert.tolerances;
    let feas = check_feasible(&problem.map, &problem.boundary, &cert.utilde, tol.inclusion.max(1e-9))?;
    if !feas.pass {
        return Err(Error::Precondition(format!("candidate state is not admissible:\n{feas}")));
    }
    let rep = adjoint_residual_unchecked(&problem.map, &cert.ustar, &cert.utilde, &problem.objective, cert.lambda)?;
    let mut notes = Vec::new();
    if rep.empty_points > 0 {
        notes.push(format!("locally adjoint set empty at {} nodes", rep.empty_points));
    }
    Ok(VerifyReport::from_conditions(
        vec![
            Condition::new("adjoint_inclusion", rep.max_residual, rep.worst_point, tol.inclusion),
            Condition::new("adjoint_boundary", rep.boundary_max, rep.boundary_worst, tol.boundary),
            Condition::new("argmax", rep.argmax_gap_max, rep.argmax_worst, tol.argmax),
        ],
        notes,
    ))
}

/// Control reproducing the candidate state: `B w = v - A ũ` solved by least squares.
pub fn recover_control(a: &Matrix, b: &Matrix, utilde: &Field) -> Result<ControlField> {
    let spec = *utilde.spec();
    let mut w = ControlField::zeros(&spec, b.cols());
    for p in control_points(&spec) {
        let v = utilde.parabolic_residual(p);
        let au = a.mul_vec(utilde.get(p));
        let rhs: Vec<f64> = v.iter().zip(&au).map(|(x, y)| x - y).collect();
        let sol = b
            .solve_least_squares(&rhs)
            .ok_or_else(|| Error::Invalid("control matrix is not injective; supply the control".into()))?;
        let scale = 1.0 + max_abs(&rhs);
        if max_abs_diff(&b.mul_vec(&sol), &rhs) > 1e-8 * scale {
            return Err(Error::Invalid(format!("no control reproduces the candidate state at {p}")));
        }
        w.get_mut(p).copy_from_slice(&sol);
    }
    Ok(w)
}

/// Gap `max_{w ∈ U} ⟨B w, u*⟩ - ⟨B w̃, u*⟩` at every control node. The
/// control is recovered from the state when not given.
pub fn check_maximum_principle(
    map: &InclusionMap,
    cert: &Certificate,
    control: Option<&ControlField>,
) -> Result<VerifyReport> {
    let InclusionMap::LinearControl { a, b, set } = map else {
        return Err(Error::Capability("the maximum principle check needs a linear-control map".into()));
    };
    let recovered;
    let w = match control {
        Some(w) => w,
        None => {
            recovered = recover_control(a, b, &cert.utilde)?;
            &recovered
        }
    };
    if w.spec() != cert.spec() || w.dim() != set.dim() {
        return Err(Error::Shape("control field does not match the certificate".into()));
    }
    let (mut max, mut worst) = (0.0, None);
    for p in control_points(cert.spec()) {
        let dir = b.tr_mul_vec(cert.ustar.get(p));
        let top = set.support_value(&dir)?.finite().unwrap_or(f64::INFINITY);
        let gap = (top - dot(w.get(p), &dir)).max(0.0);
        track(&mut max, &mut worst, gap, p);
    }
    Ok(VerifyReport::from_conditions(
        vec![Condition::new("maximum_principle", max, worst, cert.tolerances.argmax)],
        Vec::new(),
    ))
}

/// `-Bᵀ(Δ_h q + (q(t) - q(t-h))/h) - Aᵀ q` at interior `p` with `t >= h`.
pub fn multiplier_subgradient(a: &Matrix, b: &Matrix, q: &Field, p: GridPoint) -> Vec<f64> {
    let spec = q.spec();
    let h = spec.dt();
    let earlier = GridPoint::new(p.ix, p.iy, p.it - 1);
    let s = q.dim();
    let inner: Vec<f64> =
        (0..s).map(|i| q.laplacian_unchecked(p, i) + (q.get(p)[i] - q.get(earlier)[i]) / h).collect();
    let bt = b.tr_mul_vec(&inner);
    let at = a.tr_mul_vec(q.get(p));
    bt.iter().zip(&at).map(|(x, y)| -x - y).collect()
}

/// Polyhedral multiplier system: sign of `q`, the Euler-Lagrange inclusion
/// in `q`, complementarity against the row slack, zeros of `Bᵀq` on the
/// adjoint faces, and `u* = -Bᵀq`.
pub fn check_polyhedral(problem: &Problem, cert: &Certificate) -> Result<VerifyReport> {
    check_shapes(problem, cert)?;
    let InclusionMap::Polyhedral { a, b, d } = &problem.map else {
        return Err(Error::Capability("the multiplier system needs a polyhedral map".into()));
    };
    let q = cert.q.as_ref().ok_or_else(|| Error::Invalid("certificate carries no multiplier field".into()))?;
    if q.dim() != d.len() {
        return Err(Error::Shape(format!("multiplier dimension {} vs {} rows", q.dim(), d.len())));
    }
    let spec = *cert.spec();
    let tol = cert.tolerances;
    let g = &problem.objective;

    let (mut neg, mut neg_at) = (0.0, None);
    for p in spec.points() {
        track(&mut neg, &mut neg_at, -q.get(p).iter().copied().fold(0.0, f64::min), p);
    }

    let (mut incl, mut incl_at) = (0.0, None);
    for p in spec.interior_points(1..spec.nt()) {
        let s = multiplier_subgradient(a, b, q, p);
        let r = if cert.lambda == 0.0 { max_abs(&s) } else { g.subdiff_distance(p, cert.utilde.get(p), &s)? };
        track(&mut incl, &mut incl_at, r, p);
    }

    let (mut comp, mut comp_at) = (0.0, None);
    for p in control_points(&spec) {
        let u = cert.utilde.get(p);
        let v = cert.utilde.parabolic_residual(p);
        let au = a.mul_vec(u);
        let bv = b.mul_vec(&v);
        let c: f64 = (0..d.len()).map(|i| (au[i] - bv[i] - d[i]) * q.get(p)[i]).sum();
        track(&mut comp, &mut comp_at, c.abs(), p);
    }

    let last = spec.nt() - 1;
    let (mut bnd, mut bnd_at) = (0.0, None);
    let (mut cons, mut cons_at) = (0.0, None);
    for p in spec.points() {
        let bq = b.tr_mul_vec(q.get(p));
        if p.it == last || spec.on_spatial_face(p) {
            track(&mut bnd, &mut bnd_at, max_abs(&bq), p);
        }
        let diff: Vec<f64> = cert.ustar.get(p).iter().zip(&bq).map(|(x, y)| x + y).collect();
        track(&mut cons, &mut cons_at, max_abs(&diff), p);
    }

    Ok(VerifyReport::from_conditions(
        vec![
            Condition::new("multiplier_sign", neg, neg_at, tol.inclusion),
            Condition::new("multiplier_inclusion", incl, incl_at, tol.inclusion),
            Condition::new("complementarity", comp, comp_at, tol.complementarity),
            Condition::new("multiplier_boundary", bnd, bnd_at, tol.boundary),
            Condition::new("adjoint_consistency", cons, cons_at, tol.boundary),
        ],
        Vec::new(),
    ))
}

/// Runs the checks that apply to the map variant.
pub fn verify(problem: &Problem, cert: &Certificate, control: Option<&ControlField>) -> Result<VerifyReport> {
    let base = check_conditions_i_iii(problem, cert)?;
    match &problem.map {
        InclusionMap::LinearControl { .. } => Ok(base.merge(check_maximum_principle(&problem.map, cert, control)?)),
        InclusionMap::Polyhedral { .. } if cert.q.is_some() => Ok(base.merge(check_polyhedral(problem, cert)?)),
        _ => Ok(base),
    }
}

/// A random member of `{v : A u - B v <= d}`: a random convex combination
/// of two support points in random directions.
fn random_velocity(a: &Matrix, b: &Matrix, d: &[f64], u: &[f64], rng: &mut ChaCha8Rng) -> Result<Option<Vec<f64>>> {
    let n = b.cols();
    let c = b.scaled(-1.0);
    let au = a.mul_vec(u);
    let e: Vec<f64> = d.iter().zip(&au).map(|(di, x)| di - x).collect();
    let pick = |rng: &mut ChaCha8Rng| -> Result<Option<Vec<f64>>> {
        let dir: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let sup = match polytope_support(&c, &e, &dir)? {
            Some(s) => s,
            None => return Ok(None),
        };
        match sup.maximizer {
            Some(v) => Ok(Some(v)),
            None => Ok(polytope_support(&c, &e, &vec![0.0; n])?.and_then(|s| s.maximizer)),
        }
    };
    let (Some(v1), Some(v2)) = (pick(rng)?, pick(rng)?) else {
        return Ok(None);
    };
    let l: f64 = rng.gen_range(0.0..1.0);
    Ok(Some(v1.iter().zip(&v2).map(|(x, y)| l * x + (1.0 - l) * y).collect()))
}

/// Compares the candidate cost with `num_samples` random admissible
/// trajectories; the condition value is the largest shortfall
/// `J[ũ] - J[u]` (positive means a sample beat the candidate).
pub fn sufficiency_sampling(
    problem: &Problem,
    cert: &Certificate,
    num_samples: usize,
    seed: u64,
    tol: f64,
) -> Result<VerifyReport> {
    check_shapes(problem, cert)?;
    let spec = *problem.spec();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let reference = problem.cost(&cert.utilde)?;
    let mut shortfall = f64::NEG_INFINITY;
    let mut dead_ends = 0;
    for _ in 0..num_samples {
        let state = match &problem.map {
            InclusionMap::LinearControl { set, .. } => {
                let mut w = ControlField::zeros(&spec, set.dim());
                for p in control_points(&spec) {
                    let x = set.sample(&mut rng)?;
                    w.get_mut(p).copy_from_slice(&x);
                }
                Some(problem.simulate(&w)?)
            }
            InclusionMap::Constant { set } => {
                let mut w = ControlField::zeros(&spec, set.dim());
                for p in control_points(&spec) {
                    let x = set.sample(&mut rng)?;
                    w.get_mut(p).copy_from_slice(&x);
                }
                Some(problem.simulate(&w)?)
            }
            InclusionMap::Polyhedral { a, b, d } => {
                let res = march(&problem.boundary, |p, u| {
                    random_velocity(a, b, d, u, &mut rng)?
                        .ok_or_else(|| Error::ControlInfeasible { point: p, reason: "empty velocity set".into() })
                });
                match res {
                    Ok(u) => Some(u),
                    Err(Error::ControlInfeasible { .. }) => None,
                    Err(e) => return Err(e),
                }
            }
        };
        match state {
            Some(u) => shortfall = shortfall.max(reference - problem.cost(&u)?),
            None => dead_ends += 1,
        }
    }
    let mut notes = vec![format!("seed {seed}, {num_samples} samples, reference cost {reference:.16e}")];
    if dead_ends > 0 {
        notes.push(format!("{dead_ends} samples reached an empty velocity set and were discarded"));
    }
    if shortfall == f64::NEG_INFINITY {
        shortfall = 0.0;
    }
    Ok(VerifyReport::from_conditions(vec![Condition::new("sufficiency", shortfall.max(0.0), None, tol)], notes))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::adjoint::adjoint_solve_linear;
    use crate::geometry::ConvexSet;
    use crate::grid::BoundaryData;
    use crate::objective::Objective;
    use crate::optimizer::{solve_frank_wolfe, solve_polyhedral_lp};

    fn bang_bang(points: usize, dt: f64) -> Problem {
        let spec = GridSpec::unit_square(points, dt, 1.0, 1).unwrap();
        let map = InclusionMap::linear_control(Matrix::scalar(0.0), Matrix::scalar(1.0), ConvexSet::cube(1, -1.0, 1.0).unwrap())
            .unwrap();
        Problem::new(map, Objective::linear(vec![1.0]), BoundaryData::zero(&spec)).unwrap()
    }

    fn bang_bang_certificate(p: &Problem) -> (Certificate, ControlField) {
        let spec = *p.spec();
        let ones = Field::from_fn(&spec, 1, |_, _, _| vec![1.0]);
        let ustar = adjoint_solve_linear(&Matrix::scalar(0.0), &ones).unwrap();
        let w = ControlField::from_fn(&spec, 1, |q| vec![if ustar.get(q)[0] >= 0.0 { 1.0 } else { -1.0 }]);
        let utilde = p.simulate(&w).unwrap();
        (Certificate::new(utilde, ustar, None, 1.0, Tolerances::default()).unwrap(), w)
    }

    #[test]
    fn zero_problem_passes_with_zero_violations() {
        let mut p = bang_bang(4, 0.02);
        p.objective = Objective::zero(1);
        let spec = *p.spec();
        let cert = Certificate::new(Field::state_zeros(&spec), Field::state_zeros(&spec), None, 1.0, Tolerances::default())
            .unwrap();
        let rep = verify(&p, &cert, None).unwrap();
        assert!(rep.pass, "{rep}");
        assert!(rep.conditions.iter().all(|c| c.max_violation == 0.0));
        let s = sufficiency_sampling(&p, &cert, 10, DEFAULT_SEED, 1e-8).unwrap();
        assert_eq!(s.conditions[0].max_violation, 0.0);
    }

    #[test]
    fn bang_bang_certificate_passes_and_beats_samples() {
        let p = bang_bang(6, 0.01);
        let (cert, w) = bang_bang_certificate(&p);
        let rep = verify(&p, &cert, Some(&w)).unwrap();
        assert!(rep.pass, "{rep}");
        let rec = verify(&p, &cert, None).unwrap();
        assert!(rec.pass && rec.condition("maximum_principle").unwrap().max_violation < 1e-15);
        let s = sufficiency_sampling(&p, &cert, 30, DEFAULT_SEED, 1e-8).unwrap();
        assert!(s.pass, "{s}");
    }

    #[test]
    fn terminal_perturbation_is_reported() {
        let p = bang_bang(5, 0.01);
        let (mut cert, _) = bang_bang_certificate(&p);
        let spec = *p.spec();
        let at = GridPoint::new(2, 2, spec.nt() - 1);
        cert.ustar.get_mut(at)[0] = spec.dt();
        let rep = check_conditions_i_iii(&p, &cert).unwrap();
        let c = rep.condition("adjoint_boundary").unwrap();
        assert!(!c.pass);
        assert_eq!(c.max_violation, spec.dt());
        assert_eq!(c.worst_point, Some(at));
    }

    #[test]
    fn idle_control_fails_and_loses_to_samples() {
        let p = bang_bang(5, 0.01);
        let (mut cert, _) = bang_bang_certificate(&p);
        let spec = *p.spec();
        let idle = ControlField::zeros(&spec, 1);
        cert.utilde = p.simulate(&idle).unwrap();
        let mp = check_maximum_principle(&p.map, &cert, Some(&idle)).unwrap();
        assert!(!mp.pass);
        let worst = mp.conditions[0].worst_point.unwrap();
        assert!((mp.conditions[0].max_violation - cert.ustar.get(worst)[0].abs()).abs() < 1e-15);
        assert!(!check_conditions_i_iii(&p, &cert).unwrap().pass);
        let s = sufficiency_sampling(&p, &cert, 20, DEFAULT_SEED, 1e-8).unwrap();
        assert!(!s.pass);
    }

    #[test]
    fn polyhedral_duals_round_trip() {
        let spec = GridSpec::new(1.0, 1.0, 0.1, 0.5, 0.5, 0.05, 1).unwrap();
        let map = InclusionMap::polyhedral(Matrix::zeros(2, 1), Matrix::from_rows(&[vec![1.0], vec![-1.0]]).unwrap(), vec![1.0, 1.0])
            .unwrap();
        let p = Problem::new(map, Objective::linear(vec![1.0]), BoundaryData::zero(&spec)).unwrap();
        let sol = solve_polyhedral_lp(&p).unwrap();
        let cert =
            Certificate::new(sol.state, sol.adjoint.unwrap(), sol.multiplier, 1.0, Tolerances::uniform(1e-6)).unwrap();
        let rep = check_polyhedral(&p, &cert).unwrap();
        assert!(rep.pass, "{rep}");
        let s = sufficiency_sampling(&p, &cert, 50, DEFAULT_SEED, 1e-6).unwrap();
        assert!(s.pass, "{s}");

        let mut bad = cert.clone();
        let at = GridPoint::new(1, 1, 0);
        bad.q.as_mut().unwrap().get_mut(at)[0] = -0.5;
        let rep = check_polyhedral(&p, &bad).unwrap();
        let c = rep.condition("multiplier_sign").unwrap();
        assert!(!c.pass && c.worst_point == Some(at));
    }

    #[test]
    fn zero_multiplier_passes_for_zero_cost() {
        let spec = GridSpec::new(1.0, 1.0, 0.1, 0.5, 0.5, 0.05, 1).unwrap();
        let map = InclusionMap::polyhedral(Matrix::zeros(2, 1), Matrix::from_rows(&[vec![1.0], vec![-1.0]]).unwrap(), vec![1.0, 1.0])
            .unwrap();
        let p = Problem::new(map, Objective::zero(1), BoundaryData::zero(&spec)).unwrap();
        let w = ControlField::constant(&spec, &[0.5]);
        let u = p.simulate(&w).unwrap();
        let cert = Certificate::new(u, Field::state_zeros(&spec), Some(Field::zeros(&spec, 2)), 1.0, Tolerances::default())
            .unwrap();
        assert!(check_polyhedral(&p, &cert).unwrap().pass);
    }

    #[test]
    fn frank_wolfe_output_certifies() {
        let p = bang_bang(5, 0.01);
        let res = solve_frank_wolfe(&p, 50, 1e-12).unwrap();
        let cert = Certificate::new(res.state, res.adjoint.unwrap(), None, 1.0, Tolerances::default()).unwrap();
        let rep = verify(&p, &cert, Some(&res.control)).unwrap();
        assert!(rep.pass, "{rep}");
        assert!(rep.records().lines().count() == 5);
    }
}
