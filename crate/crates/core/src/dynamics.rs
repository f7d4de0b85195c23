//! Explicit time marching of the discrete inclusion and feasibility checks.

use std::io::{Read, Write};

use crate::error::{Error, Result};
use crate::geometry::ConvexSet;
use crate::grid::{apply_boundary_level, BoundaryData, Field, GridPoint, GridSpec};
use crate::inclusion::{InclusionMap, MEMBER_TOL};

/// `1 - h (2/δ² + 2/σ²)`; the explicit step is stable when nonnegative.
pub fn cfl_margin(spec: &GridSpec) -> f64 {
    1.0 - spec.dt() * (2.0 / (spec.dx() * spec.dx()) + 2.0 / (spec.dy() * spec.dy()))
}

/// Per-point decisions on spatially interior nodes for every level but the last.
///
/// For linear-control maps the entries are controls `w ∈ U`; for the other
/// variants they are the velocities `v ∈ F(u)` directly. Entries on spatial
/// faces and at `t = T` are carried but never read.
#[derive(Debug, Clone, PartialEq)]
pub struct ControlField {
    field: Field,
}

impl ControlField {
    pub fn zeros(spec: &GridSpec, dim: usize) -> Self {
        Self { field: Field::zeros(spec, dim) }
    }

    pub fn constant(spec: &GridSpec, value: &[f64]) -> Self {
        Self::from_fn(spec, value.len(), |_| value.to_vec())
    }

    pub fn from_fn(spec: &GridSpec, dim: usize, mut f: impl FnMut(GridPoint) -> Vec<f64>) -> Self {
        let mut out = Self::zeros(spec, dim);
        for p in control_points(spec) {
            let v = f(p);
            assert_eq!(v.len(), dim, "control dimension");
            out.field.get_mut(p).copy_from_slice(&v);
        }
        out
    }

    pub fn from_field(field: Field) -> Self {
        Self { field }
    }

    pub fn spec(&self) -> &GridSpec {
        self.field.spec()
    }

    pub fn dim(&self) -> usize {
        self.field.dim()
    }

    pub fn get(&self, p: GridPoint) -> &[f64] {
        self.field.get(p)
    }

    pub fn get_mut(&mut self, p: GridPoint) -> &mut [f64] {
        self.field.get_mut(p)
    }

    pub fn field(&self) -> &Field {
        &self.field
    }

    /// Nodes that carry a decision, in lexicographic `(t, y, x)` order.
    pub fn points(&self) -> impl Iterator<Item = GridPoint> + '_ {
        control_points(self.field.spec())
    }

    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        self.field.write_csv_with_prefix(writer, "w")
    }

    pub fn read_csv<R: Read>(reader: R, spec: &GridSpec, dim: usize) -> Result<Self> {
        Ok(Self { field: Field::read_csv(reader, spec, dim)? })
    }
}

pub(crate) fn control_points(spec: &GridSpec) -> impl Iterator<Item = GridPoint> + '_ {
    spec.interior_points(0..spec.nt() - 1)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Simulation {
    pub state: Field,
    pub cfl_margin: f64,
    pub warnings: Vec<String>,
}

fn check_grid(map: &InclusionMap, b: &BoundaryData, spec: &GridSpec) -> Result<()> {
    if b.spec() != spec {
        return Err(Error::Shape("boundary data and control live on different grids".into()));
    }
    if spec.dim() != map.dim() {
        return Err(Error::Shape(format!("grid state dimension {} vs map dimension {}", spec.dim(), map.dim())));
    }
    Ok(())
}

/// Marches `u(t+h) = u + h (Δ_h u + v)` with `v` chosen per interior node by
/// `select(p, u(p))`; faces are overwritten by `b` at every level.
pub(crate) fn march(
    b: &BoundaryData,
    mut select: impl FnMut(GridPoint, &[f64]) -> Result<Vec<f64>>,
) -> Result<Field> {
    let spec = *b.spec();
    let n = spec.dim();
    let h = spec.dt();
    let mut u = Field::state_zeros(&spec);
    apply_boundary_level(&mut u, b, 0);
    for it in 0..spec.nt() - 1 {
        for p in spec.interior_at(it) {
            let v = select(p, u.get(p))?;
            let next: Vec<f64> = (0..n).map(|k| u.get(p)[k] + h * (u.laplacian_unchecked(p, k) + v[k])).collect();
            u.get_mut(GridPoint::new(p.ix, p.iy, it + 1)).copy_from_slice(&next);
        }
        apply_boundary_level(&mut u, b, it + 1);
    }
    Ok(u)
}

/// Forward simulation of the scheme driven by `w`.
pub fn simulate(map: &InclusionMap, b: &BoundaryData, w: &ControlField) -> Result<Simulation> {
    let spec = *w.spec();
    check_grid(map, b, &spec)?;
    if w.dim() != map.control_dim() {
        return Err(Error::Shape(format!("control dimension {} vs map control dimension {}", w.dim(), map.control_dim())));
    }
    let margin = cfl_margin(&spec);
    let mut warnings = Vec::new();
    if margin < 0.0 {
        warnings.push(format!("CFL margin {margin:.6e} < 0: explicit step is unstable"));
    }
    let state = match map {
        InclusionMap::LinearControl { a, b: bm, set } => march(b, |p, u| {
            let wp = w.get(p);
            control_in_set(set, wp, p)?;
            let au = a.mul_vec(u);
            Ok(au.iter().zip(bm.mul_vec(wp)).map(|(x, y)| x + y).collect())
        })?,
        InclusionMap::Constant { set } => march(b, |p, _| {
            control_in_set(set, w.get(p), p)?;
            Ok(w.get(p).to_vec())
        })?,
        InclusionMap::Polyhedral { .. } => march(b, |p, u| {
            let v = w.get(p);
            let dist = map.distance(u, v)?;
            if dist > MEMBER_TOL {
                return Err(Error::ControlInfeasible {
                    point: p,
                    reason: format!("velocity violates A u - B v <= d by {dist:.3e}"),
                });
            }
            Ok(v.to_vec())
        })?,
    };
    Ok(Simulation { state, cfl_margin: margin, warnings })
}

fn control_in_set(set: &ConvexSet, w: &[f64], p: GridPoint) -> Result<()> {
    let dist = set.distance_inf(w)?;
    if dist > MEMBER_TOL {
        return Err(Error::ControlInfeasible { point: p, reason: format!("control lies {dist:.3e} outside U") });
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
pub struct FeasibilityReport {
    pub boundary_max: f64,
    pub boundary_worst: Option<GridPoint>,
    pub inclusion_max: f64,
    pub inclusion_worst: Option<GridPoint>,
    pub tol: f64,
    pub pass: bool,
}

impl std::fmt::Display for FeasibilityReport {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let pt = |p: Option<GridPoint>| p.map_or_else(|| "-".to_string(), |p| p.to_string());
        writeln!(f, "boundary_max {:.16e} at {}", self.boundary_max, pt(self.boundary_worst))?;
        writeln!(f, "inclusion_max {:.16e} at {}", self.inclusion_max, pt(self.inclusion_worst))?;
        write!(f, "feasible {}", if self.pass { "pass" } else { "fail" })
    }
}

/// Measures how far `u` is from satisfying the boundary data and the
/// inclusion `B u - Δ_h u ∈ F(u)` at interior nodes with `t < T`.
pub fn check_feasible(map: &InclusionMap, b: &BoundaryData, u: &Field, tol: f64) -> Result<FeasibilityReport> {
    let spec = *u.spec();
    check_grid(map, b, &spec)?;
    if u.dim() != spec.dim() {
        return Err(Error::Shape("state field dimension differs from the grid".into()));
    }
    let mut boundary_max = 0.0f64;
    let mut boundary_worst = None;
    for p in spec.points() {
        if let Some(v) = b.value_at(p) {
            let e = crate::linalg::max_abs_diff(u.get(p), v);
            if e > boundary_max {
                boundary_max = e;
                boundary_worst = Some(p);
            }
        }
    }
    let mut inclusion_max = 0.0f64;
    let mut inclusion_worst = None;
    for p in control_points(&spec) {
        let v = u.parabolic_residual(p);
        let e = map.distance(u.get(p), &v)?;
        if e > inclusion_max {
            inclusion_max = e;
            inclusion_worst = Some(p);
        }
    }
    Ok(FeasibilityReport {
        boundary_max,
        boundary_worst,
        inclusion_max,
        inclusion_worst,
        tol,
        pass: boundary_max <= tol && inclusion_max <= tol,
    })
}
