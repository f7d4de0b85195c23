//! Backward adjoint recursion, its residual against the adjoint inclusion,
//! and the discrete summation-by-parts identities behind sufficiency.

use std::fmt;

use crate::error::{Error, Face, Result};
use crate::grid::{Field, GridPoint, GridSpec};
use crate::inclusion::{InclusionMap, LamResult, ACTIVE_TOL};
use crate::linalg::{dot, Matrix};
use crate::lp::{LpBuilder, LpOutcome, Relation, VarKind};
use crate::objective::Objective;

/// Admissible size of the adjoint on its zero faces.
pub const ADJOINT_BOUNDARY_TOL: f64 = 1e-9;

/// Difference between the two sides of the rearranged adjoint stencil:
///
/// `(1/δ²)[u*(x±δ) + θ² u*(y±σ) - (δ²/h) u*(t-h)] - (2/δ² + 2/σ² - 1/h) u*`
/// against `A1 u* + A2 u* + B u*(t-h)`. Largest over components.
pub fn stencil_identity_check(ustar: &Field, p: GridPoint) -> Result<f64> {
    let spec = *ustar.spec();
    if !spec.contains(p) || spec.on_spatial_face(p) || p.it == 0 {
        return Err(Error::Index { op: "adjoint stencil", point: p });
    }
    let (d2, s2, h) = (spec.dx() * spec.dx(), spec.dy() * spec.dy(), spec.dt());
    let t2 = spec.theta() * spec.theta();
    let at = |dx: isize, dy: isize, dt: isize, k: usize| {
        let q = GridPoint::new(
            (p.ix as isize + dx) as usize,
            (p.iy as isize + dy) as usize,
            (p.it as isize + dt) as usize,
        );
        ustar.get(q)[k]
    };
    let earlier = GridPoint::new(p.ix, p.iy, p.it - 1);
    let mut worst = 0.0f64;
    for k in 0..ustar.dim() {
        let lhs = (at(-1, 0, 0, k) + at(1, 0, 0, k) + t2 * at(0, 1, 0, k) + t2 * at(0, -1, 0, k)
            - d2 / h * at(0, 0, -1, k))
            / d2
            - (2.0 / d2 + 2.0 / s2 - 1.0 / h) * at(0, 0, 0, k);
        let rhs = ustar.laplacian_unchecked(p, k) + ustar.b_unchecked(earlier, k);
        worst = worst.max((lhs - rhs).abs());
    }
    Ok(worst)
}

/// Pointwise gradient of `g` at the spatially interior nodes of `utilde`,
/// zero elsewhere.
pub fn objective_gradient_field(g: &Objective, utilde: &Field) -> Result<Field> {
    let spec = *utilde.spec();
    g.check_grid(&spec)?;
    let mut out = Field::state_zeros(&spec);
    for p in spec.interior_points(0..spec.nt()) {
        out.get_mut(p).copy_from_slice(&g.gradient_at(p, utilde.get(p)));
    }
    Ok(out)
}

/// Backward sweep `u*(t-h) = u*(t) + h (Δ_h u*(t) + Aᵀ u*(t) - g'(t))` from
/// `u*(T) = 0`, with `u*` held at zero on every spatial face.
pub fn adjoint_solve_linear(a: &Matrix, gprime: &Field) -> Result<Field> {
    let spec = *gprime.spec();
    let n = gprime.dim();
    if a.rows() != n || a.cols() != n {
        return Err(Error::Shape(format!("A is {}x{} for state dimension {n}", a.rows(), a.cols())));
    }
    let h = spec.dt();
    let mut ustar = Field::zeros(&spec, n);
    for it in (1..spec.nt()).rev() {
        for p in spec.interior_at(it) {
            let at = a.tr_mul_vec(ustar.get(p));
            let gp = gprime.get(p);
            let prev: Vec<f64> = (0..n)
                .map(|k| ustar.get(p)[k] + h * (ustar.laplacian_unchecked(p, k) + at[k] - gp[k]))
                .collect();
            ustar.get_mut(GridPoint::new(p.ix, p.iy, it - 1)).copy_from_slice(&prev);
        }
    }
    Ok(ustar)
}

/// Adjoint of a linear-control or constant problem at the state `utilde`.
pub fn adjoint_for(map: &InclusionMap, g: &Objective, utilde: &Field) -> Result<Field> {
    let a = match map {
        InclusionMap::LinearControl { a, .. } => a.clone(),
        InclusionMap::Constant { .. } => Matrix::zeros(map.dim(), map.dim()),
        InclusionMap::Polyhedral { .. } => {
            return Err(Error::Capability("the explicit adjoint sweep needs a linear-control or constant map".into()))
        }
    };
    adjoint_solve_linear(&a, &objective_gradient_field(g, utilde)?)
}

/// Largest `|u*|` on each zero face (`t = T` and the four spatial faces).
pub fn adjoint_boundary_violation(ustar: &Field) -> Vec<(Face, f64, GridPoint)> {
    let spec = *ustar.spec();
    let mut out: Vec<(Face, f64, GridPoint)> = Vec::new();
    for p in spec.points() {
        let mut faces = Vec::new();
        if p.it + 1 == spec.nt() {
            faces.push(Face::Time);
        }
        if p.iy == 0 {
            faces.push(Face::Y0);
        }
        if p.iy + 1 == spec.ny() {
            faces.push(Face::YS);
        }
        if p.ix == 0 {
            faces.push(Face::X0);
        }
        if p.ix + 1 == spec.nx() {
            faces.push(Face::XL);
        }
        let v = crate::linalg::max_abs(ustar.get(p));
        for face in faces {
            match out.iter_mut().find(|(f, _, _)| *f == face) {
                Some(entry) if v > entry.1 => {
                    entry.1 = v;
                    entry.2 = p;
                }
                Some(_) => {}
                None => out.push((face, v, p)),
            }
        }
    }
    out
}

/// Result of checking the adjoint inclusion at every interior node with `t >= h`.
#[derive(Debug, Clone, PartialEq)]
pub struct AdjointReport {
    pub max_residual: f64,
    pub worst_point: Option<GridPoint>,
    pub boundary_max: f64,
    pub boundary_worst: Option<GridPoint>,
    pub argmax_gap_max: f64,
    pub argmax_worst: Option<GridPoint>,
    /// Nodes where the locally adjoint value was empty.
    pub empty_points: usize,
    pub lambda: f64,
}

impl AdjointReport {
    fn record(max: &mut f64, worst: &mut Option<GridPoint>, v: f64, p: GridPoint) {
        if v > *max || (v.is_nan() && !max.is_nan()) {
            *max = v;
            *worst = Some(p);
        }
    }

    pub fn passes(&self, residual_tol: f64, boundary_tol: f64, argmax_tol: f64) -> bool {
        self.max_residual <= residual_tol && self.boundary_max <= boundary_tol && self.argmax_gap_max <= argmax_tol
    }
}

impl fmt::Display for AdjointReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let pt = |p: Option<GridPoint>| p.map_or_else(|| "-".to_string(), |p| p.to_string());
        writeln!(f, "max_residual {:.16e}", self.max_residual)?;
        writeln!(f, "worst_point {}", pt(self.worst_point))?;
        writeln!(f, "boundary_max {:.16e}", self.boundary_max)?;
        writeln!(f, "argmax_gap_max {:.16e}", self.argmax_gap_max)?;
        writeln!(f, "empty_lam_points {}", self.empty_points)?;
        write!(f, "lambda {}", self.lambda)
    }
}

fn check_pair(ustar: &Field, utilde: &Field, map: &InclusionMap) -> Result<GridSpec> {
    if ustar.spec() != utilde.spec() || ustar.dim() != utilde.dim() {
        return Err(Error::Shape("adjoint and state fields differ in shape".into()));
    }
    if ustar.dim() != map.dim() {
        return Err(Error::Shape(format!("field dimension {} vs map dimension {}", ustar.dim(), map.dim())));
    }
    Ok(*ustar.spec())
}

/// `-A1 u* - A2 u* - B u*(t-h)` at `p`.
pub(crate) fn adjoint_lhs(ustar: &Field, p: GridPoint) -> Vec<f64> {
    let earlier = GridPoint::new(p.ix, p.iy, p.it - 1);
    (0..ustar.dim()).map(|k| -ustar.laplacian_unchecked(p, k) - ustar.b_unchecked(earlier, k)).collect()
}

/// Checks `-A1 u* - A2 u* - B u*(t-h) ∈ F*(u*; (ũ, B ũ - Δ_h ũ)) - λ ∂g(ũ)`
/// at every spatially interior node with `h <= t <= T`. At `t = T` no
/// dynamics constraint acts, so the inclusion reduces to `-λ ∂g`.
///
/// Fails with a boundary error when `u*` is not zero on its five faces.
pub fn adjoint_residual(
    map: &InclusionMap,
    ustar: &Field,
    utilde: &Field,
    g: &Objective,
    lambda: f64,
) -> Result<AdjointReport> {
    let report = adjoint_residual_unchecked(map, ustar, utilde, g, lambda)?;
    if report.boundary_max > ADJOINT_BOUNDARY_TOL {
        let faces: Vec<Face> = adjoint_boundary_violation(ustar)
            .into_iter()
            .filter(|(_, v, _)| *v > ADJOINT_BOUNDARY_TOL)
            .map(|(f, _, _)| f)
            .collect();
        return Err(Error::Boundary { faces, max_violation: report.boundary_max });
    }
    Ok(report)
}

/// As [`adjoint_residual`] but reports boundary violations instead of failing.
pub fn adjoint_residual_unchecked(
    map: &InclusionMap,
    ustar: &Field,
    utilde: &Field,
    g: &Objective,
    lambda: f64,
) -> Result<AdjointReport> {
    let spec = check_pair(ustar, utilde, map)?;
    g.check_grid(&spec)?;
    if lambda != 0.0 && lambda != 1.0 {
        return Err(Error::Invalid(format!("lambda must be 0 or 1, got {lambda}")));
    }
    let mut rep = AdjointReport {
        max_residual: 0.0,
        worst_point: None,
        boundary_max: 0.0,
        boundary_worst: None,
        argmax_gap_max: 0.0,
        argmax_worst: None,
        empty_points: 0,
        lambda,
    };
    for (_, v, p) in adjoint_boundary_violation(ustar) {
        AdjointReport::record(&mut rep.boundary_max, &mut rep.boundary_worst, v, p);
    }
    let last = spec.nt() - 1;
    for p in spec.interior_points(1..spec.nt()) {
        let r = adjoint_lhs(ustar, p);
        let u = utilde.get(p);
        let us = ustar.get(p);
        let residual = if p.it == last {
            let neg_r: Vec<f64> = r.iter().map(|x| -x).collect();
            subgradient_residual(g, p, u, &neg_r, lambda)?
        } else {
            let v = utilde.parabolic_residual(p);
            let gap = map.argmax_gap(u, &v, us)?;
            let gap_val = gap.finite().unwrap_or(f64::INFINITY);
            AdjointReport::record(&mut rep.argmax_gap_max, &mut rep.argmax_worst, gap_val.max(0.0), p);
            match map.lam(us, u, &v)? {
                LamResult::Empty => {
                    rep.empty_points += 1;
                    f64::INFINITY
                }
                LamResult::Point(fstar) => {
                    let target: Vec<f64> = fstar.iter().zip(&r).map(|(f, ri)| f - ri).collect();
                    subgradient_residual(g, p, u, &target, lambda)?
                }
                LamResult::AffineSet { .. } => polyhedral_residual(map, g, p, u, &v, us, &r, lambda)?,
            }
        };
        AdjointReport::record(&mut rep.max_residual, &mut rep.worst_point, residual, p);
    }
    Ok(rep)
}

/// `min over s ∈ ∂g(u) of ‖target - λ s‖∞`.
fn subgradient_residual(g: &Objective, p: GridPoint, u: &[f64], target: &[f64], lambda: f64) -> Result<f64> {
    if lambda == 0.0 {
        Ok(crate::linalg::max_abs(target))
    } else {
        g.subdiff_distance(p, u, target)
    }
}

/// `min ‖r + Aᵀq + λ s‖∞` over complementary `q >= 0` with `Bᵀq = -u*` and `s ∈ ∂g(ũ)`.
#[allow(clippy::too_many_arguments)]
fn polyhedral_residual(
    map: &InclusionMap,
    g: &Objective,
    p: GridPoint,
    u: &[f64],
    v: &[f64],
    ustar: &[f64],
    r: &[f64],
    lambda: f64,
) -> Result<f64> {
    let InclusionMap::Polyhedral { a, b, d } = map else {
        unreachable!("affine-set LAM only arises for polyhedral maps");
    };
    let n = u.len();
    let au = a.mul_vec(u);
    let bv = b.mul_vec(v);
    let mut lp = LpBuilder::new();
    let q: Vec<Option<usize>> = (0..d.len())
        .map(|i| (d[i] - au[i] + bv[i] <= ACTIVE_TOL).then(|| lp.add_var(VarKind::NonNeg, 0.0)))
        .collect();
    let gens = if lambda == 0.0 { Vec::new() } else { g.subgradient_generators(p, u) };
    let weights = lp.add_vars(gens.len(), VarKind::NonNeg);
    if !weights.is_empty() {
        lp.add_row(weights.iter().map(|&w| (w, 1.0)), Relation::Eq, 1.0);
    }
    let t = lp.add_var(VarKind::NonNeg, -1.0);
    for k in 0..n {
        let terms = q.iter().enumerate().filter_map(|(i, qi)| qi.map(|qi| (qi, b.get(i, k))));
        lp.add_row(terms, Relation::Eq, -ustar[k]);
    }
    for k in 0..n {
        let mut terms: Vec<(usize, f64)> =
            q.iter().enumerate().filter_map(|(i, qi)| qi.map(|qi| (qi, a.get(i, k)))).collect();
        terms.extend(weights.iter().zip(&gens).map(|(&w, s)| (w, s[k])));
        lp.add_row(terms.iter().copied().chain([(t, -1.0)]), Relation::Le, -r[k]);
        lp.add_row(terms.iter().map(|(j, c)| (*j, -c)).chain([(t, -1.0)]), Relation::Le, r[k]);
    }
    match lp.solve()? {
        LpOutcome::Optimal(sol) => Ok(sol.x[t].max(0.0)),
        LpOutcome::Infeasible { .. } => Ok(f64::INFINITY),
        LpOutcome::Unbounded { .. } => Err(Error::Conditioning("residual program unbounded".into())),
    }
}

/// The three summation-by-parts sums for `z = u - ũ` and `u*`:
///
/// - time: `δσh Σ_p [Σ_{k<K} ⟨B z(t_k), u*(t_k)⟩ + Σ_{k>=1} ⟨z(t_k), B u*(t_{k-1})⟩]`
/// - x: `δσh Σ ⟨A1 u*, z⟩ - ⟨A1 z, u*⟩`
/// - y: `δσh Σ ⟨A2 u*, z⟩ - ⟨A2 z, u*⟩`
///
/// All three vanish when `z` is zero on the five state faces and `u*` on its
/// five adjoint faces.
pub fn sbp_terms(u: &Field, utilde: &Field, ustar: &Field) -> Result<[f64; 3]> {
    if !u.same_shape(utilde) || !u.same_shape(ustar) {
        return Err(Error::Shape("summation-by-parts fields differ in shape".into()));
    }
    let spec = *u.spec();
    let z = Field::from_values(
        &spec,
        u.dim(),
        u.values().iter().zip(utilde.values()).map(|(a, b)| a - b).collect(),
    )?;
    let w = spec.cell_volume();
    let n = u.dim();
    let mut j = [0.0f64; 3];
    for iy in 0..spec.ny() {
        for ix in 0..spec.nx() {
            for it in 0..spec.nt() {
                let p = GridPoint::new(ix, iy, it);
                let zp = z.get(p);
                let sp = ustar.get(p);
                if it + 1 < spec.nt() {
                    let bz: Vec<f64> = (0..n).map(|k| z.b_unchecked(p, k)).collect();
                    j[0] += w * dot(&bz, sp);
                }
                if it >= 1 {
                    let earlier = GridPoint::new(ix, iy, it - 1);
                    let bs: Vec<f64> = (0..n).map(|k| ustar.b_unchecked(earlier, k)).collect();
                    j[0] += w * dot(zp, &bs);
                }
                if ix > 0 && ix + 1 < spec.nx() {
                    j[1] += w * (0..n).map(|k| ustar.a1_unchecked(p, k) * zp[k] - z.a1_unchecked(p, k) * sp[k]).sum::<f64>();
                }
                if iy > 0 && iy + 1 < spec.ny() {
                    j[2] += w * (0..n).map(|k| ustar.a2_unchecked(p, k) * zp[k] - z.a2_unchecked(p, k) * sp[k]).sum::<f64>();
                }
            }
        }
    }
    Ok(j)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::{simulate, ControlField};
    use crate::geometry::ConvexSet;
    use crate::grid::BoundaryData;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_field(spec: &GridSpec, rng: &mut ChaCha8Rng) -> Field {
        Field::from_fn(spec, spec.dim(), |_, _, _| (0..spec.dim()).map(|_| rng.gen_range(-1.0..1.0)).collect())
    }

    #[test]
    fn stencil_identity_on_random_and_special_fields() {
        let spec = GridSpec::new(1.0, 2.0, 0.5, 0.25, 0.5, 0.125, 2).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let f = random_field(&spec, &mut rng);
        for p in spec.interior_points(1..spec.nt()) {
            assert!(stencil_identity_check(&f, p).unwrap() <= 1e-12 * (1.0 + f.max_abs()) * 100.0);
        }
        let zero = Field::zeros(&spec, 2);
        assert_eq!(stencil_identity_check(&zero, GridPoint::new(1, 1, 1)).unwrap(), 0.0);
        let mut bump = Field::zeros(&spec, 2);
        bump.get_mut(GridPoint::new(2, 1, 2))[0] = 1.0;
        for p in spec.interior_points(1..spec.nt()) {
            assert!(stencil_identity_check(&bump, p).unwrap() <= 1e-13 * 64.0);
        }
        assert!(stencil_identity_check(&zero, GridPoint::new(1, 1, 0)).is_err());
    }

    #[test]
    fn backward_sweep_examples() {
        let spec = GridSpec::unit_square(5, 0.01, 0.05, 1).unwrap();
        let zero = adjoint_solve_linear(&Matrix::scalar(0.0), &Field::zeros(&spec, 1)).unwrap();
        assert_eq!(zero.max_abs(), 0.0);
        let ones = Field::from_fn(&spec, 1, |_, _, _| vec![1.0]);
        let us = adjoint_solve_linear(&Matrix::scalar(0.0), &ones).unwrap();
        let last = spec.nt() - 1;
        for p in spec.interior_at(last - 1) {
            assert_eq!(us.get(p)[0], -spec.dt());
        }
        for p in spec.interior_at(last) {
            assert_eq!(us.get(p)[0], 0.0);
        }
    }

    #[test]
    fn linear_adjoint_satisfies_inclusion() {
        let spec = GridSpec::unit_square(6, 0.005, 0.1, 1).unwrap();
        let map = InclusionMap::linear_control(Matrix::scalar(0.5), Matrix::scalar(1.0), ConvexSet::cube(1, -1.0, 1.0).unwrap())
            .unwrap();
        let b = BoundaryData::from_fn(&spec, |x, y, _| vec![x * (1.0 - y)]);
        let g = Objective::linear(vec![1.0]);
        let us = adjoint_for(&map, &g, &Field::zeros(&spec, 1)).unwrap();
        let w = ControlField::from_fn(&spec, 1, |p| vec![if us.get(p)[0] >= 0.0 { 1.0 } else { -1.0 }]);
        let ut = simulate(&map, &b, &w).unwrap().state;
        let rep = adjoint_residual(&map, &us, &ut, &g, 1.0).unwrap();
        assert!(rep.max_residual <= 1e-9, "{rep}");
    }

    #[test]
    fn boundary_violation_is_an_error() {
        let spec = GridSpec::unit_square(4, 0.01, 0.03, 1).unwrap();
        let map = InclusionMap::constant(ConvexSet::singleton(vec![0.0]).unwrap()).unwrap();
        let mut us = Field::zeros(&spec, 1);
        us.get_mut(GridPoint::new(0, 1, 1))[0] = 0.5;
        us.get_mut(GridPoint::new(1, 1, spec.nt() - 1))[0] = 0.25;
        match adjoint_residual(&map, &us, &Field::zeros(&spec, 1), &Objective::zero(1), 1.0) {
            Err(Error::Boundary { faces, max_violation }) => {
                assert_eq!(max_violation, 0.5);
                assert!(faces.contains(&Face::X0) && faces.contains(&Face::Time));
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn zero_problem_has_zero_residual() {
        let spec = GridSpec::unit_square(4, 0.01, 0.03, 1).unwrap();
        let map = InclusionMap::constant(ConvexSet::singleton(vec![0.0]).unwrap()).unwrap();
        let z = Field::zeros(&spec, 1);
        let rep = adjoint_residual(&map, &z, &z, &Objective::zero(1), 1.0).unwrap();
        assert_eq!(rep.max_residual, 0.0);
        assert_eq!(rep.argmax_gap_max, 0.0);
    }

    #[test]
    fn a1_is_self_adjoint_for_x_face_zero_fields() {
        let spec = GridSpec::new(1.0, 1.0, 0.2, 0.2, 0.25, 0.1, 1).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let mut u = random_field(&spec, &mut rng);
        let mut v = random_field(&spec, &mut rng);
        for p in spec.points().filter(|p| p.ix == 0 || p.ix + 1 == spec.nx()) {
            u.get_mut(p)[0] = 0.0;
            v.get_mut(p)[0] = 0.0;
        }
        let mut lhs = 0.0;
        let mut rhs = 0.0;
        for p in spec.points().filter(|p| p.ix > 0 && p.ix + 1 < spec.nx()) {
            lhs += u.a1_unchecked(p, 0) * v.get(p)[0];
            rhs += u.get(p)[0] * v.a1_unchecked(p, 0);
        }
        assert!((lhs - rhs).abs() < 1e-10);
    }

    #[test]
    fn summation_by_parts_vanishes() {
        let spec = GridSpec::new(1.0, 1.0, 0.3, 0.2, 0.25, 0.1, 2).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let b = random_field(&spec, &mut rng);
        let mut u = random_field(&spec, &mut rng);
        let mut ut = random_field(&spec, &mut rng);
        let mut us = random_field(&spec, &mut rng);
        for p in spec.points() {
            if p.it == 0 || spec.on_spatial_face(p) {
                u.get_mut(p).copy_from_slice(b.get(p));
                ut.get_mut(p).copy_from_slice(b.get(p));
            }
            if p.it + 1 == spec.nt() || spec.on_spatial_face(p) {
                us.get_mut(p).iter_mut().for_each(|x| *x = 0.0);
            }
        }
        for j in sbp_terms(&u, &ut, &us).unwrap() {
            assert!(j.abs() < 1e-9, "{j}");
        }
    }
}
