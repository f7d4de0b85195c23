//! Convex set-valued right-hand sides `F(u)` and the one-step transform used
//! to march the scheme in `x`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{polytope_support, ConvexSet, ExtReal};
use crate::linalg::{dot, Matrix};
use crate::lp::{lp_feasible_nonneg, LpBuilder, LpOutcome, Relation, VarKind};

/// Tolerance for membership and argmax tests.
pub const MEMBER_TOL: f64 = 1e-9;
/// Slack above which a polyhedral row counts as inactive.
pub const ACTIVE_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "variant", rename_all = "snake_case", deny_unknown_fields)]
pub enum InclusionMap {
    /// `F(u) = A u + B U`.
    LinearControl { a: Matrix, b: Matrix, set: ConvexSet },
    /// `F(u) = {v : A u - B v <= d}`.
    Polyhedral { a: Matrix, b: Matrix, d: Vec<f64> },
    /// `F(u) = U`.
    Constant { set: ConvexSet },
}

/// Pointwise locally adjoint value at a graph point.
#[derive(Debug, Clone, PartialEq)]
pub enum LamResult {
    Empty,
    Point(Vec<f64>),
    /// One representative and the row multiplier producing it.
    AffineSet { ustar: Vec<f64>, q: Vec<f64> },
}

impl LamResult {
    pub fn representative(&self) -> Option<&[f64]> {
        match self {
            LamResult::Empty => None,
            LamResult::Point(u) => Some(u),
            LamResult::AffineSet { ustar, .. } => Some(ustar),
        }
    }
}

impl InclusionMap {
    pub fn linear_control(a: Matrix, b: Matrix, set: ConvexSet) -> Result<Self> {
        let m = InclusionMap::LinearControl { a, b, set };
        m.validate()?;
        Ok(m)
    }

    pub fn polyhedral(a: Matrix, b: Matrix, d: Vec<f64>) -> Result<Self> {
        let m = InclusionMap::Polyhedral { a, b, d };
        m.validate()?;
        Ok(m)
    }

    pub fn constant(set: ConvexSet) -> Result<Self> {
        let m = InclusionMap::Constant { set };
        m.validate()?;
        Ok(m)
    }

    /// Builds the polyhedral map from a constraint written on the state as
    /// `P (u_t - Δu) - R u <= d`, i.e. `F(u) = {v : -R u + P v <= d}`.
    pub fn from_state_constraint(p: Matrix, r: Matrix, d: Vec<f64>) -> Result<Self> {
        Self::polyhedral(r.scaled(-1.0), p.scaled(-1.0), d)
    }

    /// Checks dimensions, set invariants and (polyhedral) that `F(0)` is nonempty.
    pub fn validate(&self) -> Result<()> {
        match self {
            InclusionMap::LinearControl { a, b, set } => {
                set.validate()?;
                let n = a.rows();
                if n == 0 || a.cols() != n || b.rows() != n || b.cols() != set.dim() {
                    return Err(Error::Shape(format!(
                        "linear control map needs A n x n, B n x r, U in R^r; got A {}x{}, B {}x{}, r = {}",
                        a.rows(),
                        a.cols(),
                        b.rows(),
                        b.cols(),
                        set.dim()
                    )));
                }
            }
            InclusionMap::Polyhedral { a, b, d } => {
                let n = a.cols();
                if n == 0 || b.cols() != n || a.rows() != d.len() || b.rows() != d.len() {
                    return Err(Error::Shape(format!(
                        "polyhedral map needs A, B s x n and d in R^s; got A {}x{}, B {}x{}, d {}",
                        a.rows(),
                        a.cols(),
                        b.rows(),
                        b.cols(),
                        d.len()
                    )));
                }
                if !d.iter().all(|x| x.is_finite()) {
                    return Err(Error::Invalid("polyhedral rhs must be finite".into()));
                }
                if self.hamiltonian(&vec![0.0; n], &vec![0.0; n])? == ExtReal::PosInf {
                    return Err(Error::Invalid("polyhedral map has F(0) empty".into()));
                }
            }
            InclusionMap::Constant { set } => set.validate()?,
        }
        Ok(())
    }

    /// State dimension `n`.
    pub fn dim(&self) -> usize {
        match self {
            InclusionMap::LinearControl { a, .. } => a.rows(),
            InclusionMap::Polyhedral { a, .. } => a.cols(),
            InclusionMap::Constant { set } => set.dim(),
        }
    }

    /// Dimension of the per-point decision: the control for linear-control
    /// maps, the velocity itself otherwise.
    pub fn control_dim(&self) -> usize {
        match self {
            InclusionMap::LinearControl { set, .. } => set.dim(),
            _ => self.dim(),
        }
    }

    fn check(&self, v: &[f64], what: &str) -> Result<()> {
        if v.len() != self.dim() {
            return Err(Error::Shape(format!("{what} of length {} for state dimension {}", v.len(), self.dim())));
        }
        if !v.iter().all(|x| x.is_finite()) {
            return Err(Error::Invalid(format!("{what} must be finite")));
        }
        Ok(())
    }

    /// `d - A u` for the polyhedral variant, so that `F(u) = {v : -B v <= d - A u}`.
    fn shifted_rhs(a: &Matrix, d: &[f64], u: &[f64]) -> Vec<f64> {
        a.mul_vec(u).iter().zip(d).map(|(au, di)| di - au).collect()
    }

    /// `∞`-norm distance from `v` to `F(u)`; for polyhedral maps the largest
    /// constraint violation.
    pub fn distance(&self, u: &[f64], v: &[f64]) -> Result<f64> {
        self.check(u, "state")?;
        self.check(v, "velocity")?;
        match self {
            InclusionMap::LinearControl { a, b, set } => {
                let target: Vec<f64> = v.iter().zip(a.mul_vec(u)).map(|(vi, au)| vi - au).collect();
                set.distance_inf_image(b, &target)
            }
            InclusionMap::Polyhedral { a, b, d } => {
                let au = a.mul_vec(u);
                let bv = b.mul_vec(v);
                Ok((0..d.len()).fold(0.0f64, |m, i| m.max(au[i] - bv[i] - d[i])))
            }
            InclusionMap::Constant { set } => set.distance_inf(v),
        }
    }

    pub fn member(&self, u: &[f64], v: &[f64]) -> Result<bool> {
        Ok(self.distance(u, v)? <= MEMBER_TOL)
    }

    /// `sup {⟨v, v*⟩ : v ∈ F(u)}`, `+∞` when unbounded or when `F(u)` is empty.
    pub fn hamiltonian(&self, u: &[f64], vstar: &[f64]) -> Result<ExtReal> {
        self.check(u, "state")?;
        self.check(vstar, "adjoint direction")?;
        match self {
            InclusionMap::LinearControl { a, b, set } => {
                Ok(set.support_value(&b.tr_mul_vec(vstar))?.shift(dot(&a.mul_vec(u), vstar)))
            }
            InclusionMap::Constant { set } => set.support_value(vstar),
            InclusionMap::Polyhedral { a, b, d } => {
                let rhs = Self::shifted_rhs(a, d, u);
                let mut lp = LpBuilder::new();
                let v: Vec<usize> = vstar.iter().map(|c| lp.add_var(VarKind::Free, *c)).collect();
                for (i, r) in rhs.iter().enumerate() {
                    lp.add_row(v.iter().enumerate().map(|(k, &vk)| (vk, -b.get(i, k))), Relation::Le, *r);
                }
                Ok(match lp.solve()? {
                    LpOutcome::Optimal(sol) => ExtReal::Finite(sol.value),
                    LpOutcome::Unbounded { .. } | LpOutcome::Infeasible { .. } => ExtReal::PosInf,
                })
            }
        }
    }

    /// A deterministic maximizer of `⟨v, v*⟩` over `F(u)`.
    pub fn argmax_select(&self, u: &[f64], vstar: &[f64]) -> Result<Vec<f64>> {
        self.check(u, "state")?;
        self.check(vstar, "adjoint direction")?;
        match self {
            InclusionMap::LinearControl { a, b, .. } => {
                let w = self.argmax_control(vstar)?;
                Ok(a.mul_vec(u).iter().zip(b.mul_vec(&w)).map(|(x, y)| x + y).collect())
            }
            InclusionMap::Constant { set } => set
                .support(vstar)?
                .maximizer
                .ok_or_else(|| Error::Unbounded("Hamiltonian is +inf, no maximizer".into())),
            InclusionMap::Polyhedral { a, b, d } => {
                let rhs = Self::shifted_rhs(a, d, u);
                match polytope_support(&b.scaled(-1.0), &rhs, vstar)? {
                    None => Err(Error::Infeasible("F(u) is empty".into())),
                    Some(s) => s.maximizer.ok_or_else(|| Error::Unbounded("Hamiltonian is +inf, no maximizer".into())),
                }
            }
        }
    }

    /// For linear-control maps, the control `w ∈ U` maximizing `⟨B w, v*⟩`.
    pub fn argmax_control(&self, vstar: &[f64]) -> Result<Vec<f64>> {
        match self {
            InclusionMap::LinearControl { b, set, .. } => {
                self.check(vstar, "adjoint direction")?;
                set.support(&b.tr_mul_vec(vstar))?
                    .maximizer
                    .ok_or_else(|| Error::Unbounded("Hamiltonian is +inf, no maximizer".into()))
            }
            _ => Err(Error::Capability("argmax over controls needs a linear-control map".into())),
        }
    }

    /// `H(u, v*) - ⟨v, v*⟩`, nonnegative for `v ∈ F(u)`.
    pub fn argmax_gap(&self, u: &[f64], v: &[f64], vstar: &[f64]) -> Result<ExtReal> {
        Ok(self.hamiltonian(u, vstar)?.shift(-dot(v, vstar)))
    }

    /// Locally adjoint value at `(u, v)` in direction `v*`.
    ///
    /// Empty unless `v` attains the Hamiltonian. Linear-control maps give
    /// `A^T v*`, constant maps `0`, polyhedral maps `-A^T q` for a
    /// complementary `q >= 0` with `B^T q = -v*`.
    pub fn lam(&self, vstar: &[f64], u: &[f64], v: &[f64]) -> Result<LamResult> {
        let dist = self.distance(u, v)?;
        if dist > MEMBER_TOL {
            return Err(Error::Precondition(format!("v is not in F(u) (distance {dist:e})")));
        }
        let h = self.hamiltonian(u, vstar)?;
        let Some(h) = h.finite() else {
            return Ok(LamResult::Empty);
        };
        if h - dot(v, vstar) > MEMBER_TOL * (1.0 + h.abs()) {
            return Ok(LamResult::Empty);
        }
        match self {
            InclusionMap::LinearControl { a, .. } => Ok(LamResult::Point(a.tr_mul_vec(vstar))),
            InclusionMap::Constant { .. } => Ok(LamResult::Point(vec![0.0; self.dim()])),
            InclusionMap::Polyhedral { a, b, d } => {
                let au = a.mul_vec(u);
                let bv = b.mul_vec(v);
                let pinned: Vec<usize> = (0..d.len()).filter(|&i| d[i] - au[i] + bv[i] > ACTIVE_TOL).collect();
                let rhs: Vec<f64> = vstar.iter().map(|x| -x).collect();
                match lp_feasible_nonneg(&b.transpose(), &rhs, &pinned)? {
                    Some(q) => {
                        let ustar = a.tr_mul_vec(&q).iter().map(|x| -x).collect();
                        Ok(LamResult::AffineSet { ustar, q })
                    }
                    None => Ok(LamResult::Empty),
                }
            }
        }
    }
}

/// The five stencil neighbours entering one step of the transform:
/// `west = u(x-δ)`, `south = u(y-σ)`, `center = u`, `north = u(y+σ)`,
/// `later = u(t+h)`.
#[derive(Debug, Clone, PartialEq)]
pub struct StencilArgs {
    pub west: Vec<f64>,
    pub south: Vec<f64>,
    pub center: Vec<f64>,
    pub north: Vec<f64>,
    pub later: Vec<f64>,
}

impl StencilArgs {
    pub fn zeros(n: usize) -> Self {
        Self { west: vec![0.0; n], south: vec![0.0; n], center: vec![0.0; n], north: vec![0.0; n], later: vec![0.0; n] }
    }

    fn parts(&self) -> [&Vec<f64>; 5] {
        [&self.west, &self.south, &self.center, &self.north, &self.later]
    }
}

/// Multipliers conjugate to [`StencilArgs`].
#[derive(Debug, Clone, PartialEq)]
pub struct StencilMultipliers {
    pub west: Vec<f64>,
    pub south: Vec<f64>,
    pub center: Vec<f64>,
    pub north: Vec<f64>,
    pub later: Vec<f64>,
    /// Locally adjoint value of the base map the center multiplier came from.
    pub base: LamResult,
}

impl StencilMultipliers {
    /// `Σ ⟨multiplier, args⟩` over the five blocks.
    pub fn pair(&self, args: &StencilArgs) -> f64 {
        let m = [&self.west, &self.south, &self.center, &self.north, &self.later];
        m.iter().zip(args.parts()).map(|(a, b)| dot(a, b)).sum()
    }
}

/// Solves the discrete inclusion for `u(x+δ)`:
/// `G = -west - θ² south + c₀ center - θ² north + (δ²/h) later - δ² F(center)`
/// with `c₀ = 2 + 2θ² - δ²/h`.
#[derive(Debug, Clone, PartialEq)]
pub struct GTransform {
    base: InclusionMap,
    dx: f64,
    dy: f64,
    dt: f64,
}

impl GTransform {
    pub fn new(base: InclusionMap, dx: f64, dy: f64, dt: f64) -> Result<Self> {
        if !(dx > 0.0 && dy > 0.0 && dt > 0.0) || !(dx.is_finite() && dy.is_finite() && dt.is_finite()) {
            return Err(Error::Invalid(format!("steps must be positive and finite: {dx}, {dy}, {dt}")));
        }
        Ok(Self { base, dx, dy, dt })
    }

    pub fn base(&self) -> &InclusionMap {
        &self.base
    }

    pub fn theta(&self) -> f64 {
        self.dx / self.dy
    }

    pub fn c0(&self) -> f64 {
        let t = self.theta();
        2.0 + 2.0 * t * t - self.dx * self.dx / self.dt
    }

    /// `2/δ² + 2/σ² - 1/h`.
    pub fn center_weight(&self) -> f64 {
        2.0 / (self.dx * self.dx) + 2.0 / (self.dy * self.dy) - 1.0 / self.dt
    }

    fn check(&self, args: &StencilArgs) -> Result<()> {
        let n = self.base.dim();
        if args.parts().iter().any(|p| p.len() != n) {
            return Err(Error::Shape(format!("stencil arguments must all have length {n}")));
        }
        Ok(())
    }

    /// The affine part, i.e. the value of `G` for `v = 0`.
    pub fn affine(&self, args: &StencilArgs) -> Vec<f64> {
        let t2 = self.theta() * self.theta();
        let c0 = self.c0();
        let r = self.dx * self.dx / self.dt;
        (0..args.center.len())
            .map(|k| -args.west[k] - t2 * args.south[k] + c0 * args.center[k] - t2 * args.north[k] + r * args.later[k])
            .collect()
    }

    /// The element of `G(args)` generated by `v ∈ F(center)`.
    pub fn g_forward(&self, args: &StencilArgs, v: &[f64]) -> Result<Vec<f64>> {
        self.check(args)?;
        let dist = self.base.distance(&args.center, v)?;
        if dist > MEMBER_TOL {
            return Err(Error::Precondition(format!("v is not in F(u) (distance {dist:e})")));
        }
        let d2 = self.dx * self.dx;
        Ok(self.affine(args).iter().zip(v).map(|(a, vi)| a - d2 * vi).collect())
    }

    /// `H_G(args, v*) = ⟨affine, v*⟩ + δ² H_F(center, -v*)`.
    pub fn g_hamiltonian(&self, args: &StencilArgs, vstar: &[f64]) -> Result<ExtReal> {
        self.check(args)?;
        let neg: Vec<f64> = vstar.iter().map(|x| -x).collect();
        let h = self.base.hamiltonian(&args.center, &neg)?;
        Ok(h.scale(self.dx * self.dx).shift(dot(&self.affine(args), vstar)))
    }

    /// A maximizer of `⟨g, v*⟩` over `G(args)`.
    pub fn g_argmax_select(&self, args: &StencilArgs, vstar: &[f64]) -> Result<Vec<f64>> {
        self.check(args)?;
        let neg: Vec<f64> = vstar.iter().map(|x| -x).collect();
        let v = self.base.argmax_select(&args.center, &neg)?;
        self.g_forward(args, &v)
    }

    /// Velocity `v ∈ F(center)` that produces the element `g` of `G(args)`.
    pub fn base_velocity(&self, args: &StencilArgs, g: &[f64]) -> Vec<f64> {
        let d2 = self.dx * self.dx;
        self.affine(args).iter().zip(g).map(|(a, gi)| (a - gi) / d2).collect()
    }

    /// Multipliers of the transform at the graph point `(args, g)` in
    /// direction `v*`, derived from the base map's locally adjoint value at
    /// `(center, base_velocity)` in direction `-v*`. Returns `None` when that
    /// value is empty.
    pub fn g_lam_from_f(&self, vstar: &[f64], args: &StencilArgs, g: &[f64]) -> Result<Option<StencilMultipliers>> {
        self.check(args)?;
        let vf = self.base_velocity(args, g);
        let gap = self.base.argmax_gap(&args.center, &vf, &vstar.iter().map(|x| -x).collect::<Vec<_>>())?;
        match gap.finite() {
            Some(gap) if gap <= MEMBER_TOL * (1.0 + dot(&vf, vstar).abs()) => {}
            _ => {
                return Err(Error::Precondition(
                    "transformed velocity does not attain the base Hamiltonian".into(),
                ))
            }
        }
        let neg: Vec<f64> = vstar.iter().map(|x| -x).collect();
        let base = self.base.lam(&neg, &args.center, &vf)?;
        let Some(fstar) = base.representative() else {
            return Ok(None);
        };
        let t2 = self.theta() * self.theta();
        let d2 = self.dx * self.dx;
        let k = self.center_weight();
        let center = fstar.iter().zip(vstar).map(|(f, v)| d2 * (f + k * v)).collect();
        let lateral: Vec<f64> = vstar.iter().map(|v| -t2 * v).collect();
        Ok(Some(StencilMultipliers {
            west: vstar.iter().map(|v| -v).collect(),
            south: lateral.clone(),
            center,
            north: lateral,
            later: vstar.iter().map(|v| d2 / self.dt * v).collect(),
            base,
        }))
    }
}
