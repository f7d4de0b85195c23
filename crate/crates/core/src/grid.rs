//! Uniform space-time grids, grid functions and the three-point difference
//! operators.
//!
//! Storage is t-major, then y, then x, then component, so a whole time slice
//! is contiguous. Every field stores its boundary points explicitly; the
//! operators never extrapolate.

use std::fmt;
use std::io::{Read, Write};

use crate::error::{Error, Face, Result};

const COUNT_REL_TOL: f64 = 1e-9;
const EDGE_TOL: f64 = 1e-12;

/// Geometry of the grid on `[0, L] x [0, S] x [0, T]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    length_x: f64,
    length_y: f64,
    horizon: f64,
    dx: f64,
    dy: f64,
    dt: f64,
    dim: usize,
    nx: usize,
    ny: usize,
    nt: usize,
}

fn point_count(axis: &str, extent: f64, step: f64) -> Result<usize> {
    if !(extent.is_finite() && extent > 0.0) {
        return Err(Error::Grid(format!("{axis}: extent must be positive, got {extent}")));
    }
    if !(step.is_finite() && step > 0.0) {
        return Err(Error::Grid(format!("{axis}: step must be positive, got {step}")));
    }
    let cells = (extent / step).round();
    if ((cells * step - extent) / extent).abs() > COUNT_REL_TOL {
        return Err(Error::Grid(format!(
            "{axis}: step {step} does not divide extent {extent}"
        )));
    }
    let points = cells as usize + 1;
    if points < 3 {
        return Err(Error::Grid(format!("{axis}: need at least 3 points, got {points}")));
    }
    Ok(points)
}

impl GridSpec {
    /// Builds a grid from extents and steps; each step must divide its extent.
    pub fn new(
        length_x: f64,
        length_y: f64,
        horizon: f64,
        dx: f64,
        dy: f64,
        dt: f64,
        dim: usize,
    ) -> Result<Self> {
        if dim == 0 {
            return Err(Error::Grid("state dimension must be positive".into()));
        }
        let nx = point_count("x", length_x, dx)?;
        let ny = point_count("y", length_y, dy)?;
        let nt = point_count("t", horizon, dt)?;
        Ok(Self { length_x, length_y, horizon, dx, dy, dt, dim, nx, ny, nt })
    }

    /// Unit square with `nx x ny` spatial points and the given time step and horizon.
    pub fn unit_square(points: usize, dt: f64, horizon: f64, dim: usize) -> Result<Self> {
        let step = 1.0 / (points.max(2) - 1) as f64;
        Self::new(1.0, 1.0, horizon, step, step, dt, dim)
    }

    pub fn length_x(&self) -> f64 {
        self.length_x
    }
    pub fn length_y(&self) -> f64 {
        self.length_y
    }
    pub fn horizon(&self) -> f64 {
        self.horizon
    }
    /// x step δ.
    pub fn dx(&self) -> f64 {
        self.dx
    }
    /// y step σ.
    pub fn dy(&self) -> f64 {
        self.dy
    }
    /// time step h.
    pub fn dt(&self) -> f64 {
        self.dt
    }
    pub fn dim(&self) -> usize {
        self.dim
    }
    pub fn nx(&self) -> usize {
        self.nx
    }
    pub fn ny(&self) -> usize {
        self.ny
    }
    pub fn nt(&self) -> usize {
        self.nt
    }
    /// Ratio δ/σ.
    pub fn theta(&self) -> f64 {
        self.dx / self.dy
    }
    /// Cell volume δσh used by the Riemann sum.
    pub fn cell_volume(&self) -> f64 {
        self.dx * self.dy * self.dt
    }
    pub fn num_points(&self) -> usize {
        self.nx * self.ny * self.nt
    }
    /// Number of spatial points strictly inside the rectangle.
    pub fn num_interior_spatial(&self) -> usize {
        (self.nx - 2) * (self.ny - 2)
    }

    pub fn coords(&self, p: GridPoint) -> (f64, f64, f64) {
        (p.ix as f64 * self.dx, p.iy as f64 * self.dy, p.it as f64 * self.dt)
    }

    pub fn contains(&self, p: GridPoint) -> bool {
        p.ix < self.nx && p.iy < self.ny && p.it < self.nt
    }

    /// True for points on the spatial faces `x = 0, L` or `y = 0, S`.
    pub fn on_spatial_face(&self, p: GridPoint) -> bool {
        p.ix == 0 || p.iy == 0 || p.ix + 1 == self.nx || p.iy + 1 == self.ny
    }

    /// Spatially interior points of one time level, in lexicographic (y, x) order.
    pub fn interior_at(&self, it: usize) -> impl Iterator<Item = GridPoint> + '_ {
        (1..self.ny - 1).flat_map(move |iy| (1..self.nx - 1).map(move |ix| GridPoint { ix, iy, it }))
    }

    /// Spatially interior points over the given time levels, lexicographic (t, y, x).
    pub fn interior_points(
        &self,
        levels: std::ops::Range<usize>,
    ) -> impl Iterator<Item = GridPoint> + '_ {
        levels.flat_map(move |it| self.interior_at(it))
    }

    /// All grid points in lexicographic (t, y, x) order.
    pub fn points(&self) -> impl Iterator<Item = GridPoint> + '_ {
        (0..self.nt).flat_map(move |it| {
            (0..self.ny).flat_map(move |iy| (0..self.nx).map(move |ix| GridPoint { ix, iy, it }))
        })
    }

    fn linear(&self, p: GridPoint) -> usize {
        (p.it * self.ny + p.iy) * self.nx + p.ix
    }
}

/// Integer coordinates of a grid node.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct GridPoint {
    pub ix: usize,
    pub iy: usize,
    pub it: usize,
}

impl GridPoint {
    pub fn new(ix: usize, iy: usize, it: usize) -> Self {
        Self { ix, iy, it }
    }
}

impl fmt::Display for GridPoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(ix={}, iy={}, it={})", self.ix, self.iy, self.it)
    }
}

/// A vector-valued grid function over the closed grid.
#[derive(Debug, Clone, PartialEq)]
pub struct Field {
    spec: GridSpec,
    dim: usize,
    values: Vec<f64>,
}

impl Field {
    pub fn zeros(spec: &GridSpec, dim: usize) -> Self {
        Self { spec: *spec, dim, values: vec![0.0; spec.num_points() * dim] }
    }

    /// Zero field with the state dimension of `spec`.
    pub fn state_zeros(spec: &GridSpec) -> Self {
        Self::zeros(spec, spec.dim())
    }

    /// Samples `f(x, y, t)` at every node.
    pub fn from_fn(spec: &GridSpec, dim: usize, mut f: impl FnMut(f64, f64, f64) -> Vec<f64>) -> Self {
        let mut field = Self::zeros(spec, dim);
        for p in spec.points() {
            let (x, y, t) = spec.coords(p);
            let v = f(x, y, t);
            assert_eq!(v.len(), dim, "sample dimension");
            field.get_mut(p).copy_from_slice(&v);
        }
        field
    }

    pub fn from_values(spec: &GridSpec, dim: usize, values: Vec<f64>) -> Result<Self> {
        if values.len() != spec.num_points() * dim {
            return Err(Error::Shape(format!(
                "expected {} values, got {}",
                spec.num_points() * dim,
                values.len()
            )));
        }
        if let Some(bad) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::Invalid(format!("non-finite value at flat index {bad}")));
        }
        Ok(Self { spec: *spec, dim, values })
    }

    pub fn spec(&self) -> &GridSpec {
        &self.spec
    }
    pub fn dim(&self) -> usize {
        self.dim
    }
    pub fn values(&self) -> &[f64] {
        &self.values
    }
    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    fn offset(&self, p: GridPoint) -> usize {
        debug_assert!(self.spec.contains(p), "{p} outside grid");
        self.spec.linear(p) * self.dim
    }

    pub fn get(&self, p: GridPoint) -> &[f64] {
        let o = self.offset(p);
        &self.values[o..o + self.dim]
    }

    pub fn get_mut(&mut self, p: GridPoint) -> &mut [f64] {
        let o = self.offset(p);
        &mut self.values[o..o + self.dim]
    }

    #[inline]
    fn at(&self, ix: usize, iy: usize, it: usize, k: usize) -> f64 {
        self.values[((it * self.spec.ny + iy) * self.spec.nx + ix) * self.dim + k]
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn same_shape(&self, other: &Field) -> bool {
        self.spec == other.spec && self.dim == other.dim
    }

    fn check_x(&self, op: &'static str, p: GridPoint) -> Result<()> {
        if !self.spec.contains(p) || p.ix == 0 || p.ix + 1 >= self.spec.nx {
            return Err(Error::Index { op, point: p });
        }
        Ok(())
    }

    fn check_y(&self, op: &'static str, p: GridPoint) -> Result<()> {
        if !self.spec.contains(p) || p.iy == 0 || p.iy + 1 >= self.spec.ny {
            return Err(Error::Index { op, point: p });
        }
        Ok(())
    }

    /// Second difference in x: `(f(x+δ) - 2f(x) + f(x-δ)) / δ²`.
    pub fn a1_apply(&self, p: GridPoint) -> Result<Vec<f64>> {
        self.check_x("A1", p)?;
        Ok((0..self.dim).map(|k| self.a1_unchecked(p, k)).collect())
    }

    /// Second difference in y: `(f(y+σ) - 2f(y) + f(y-σ)) / σ²`.
    pub fn a2_apply(&self, p: GridPoint) -> Result<Vec<f64>> {
        self.check_y("A2", p)?;
        Ok((0..self.dim).map(|k| self.a2_unchecked(p, k)).collect())
    }

    /// Forward difference in time: `(f(t+h) - f(t)) / h`.
    pub fn b_apply(&self, p: GridPoint) -> Result<Vec<f64>> {
        if !self.spec.contains(p) || p.it + 1 >= self.spec.nt {
            return Err(Error::Index { op: "B", point: p });
        }
        Ok((0..self.dim).map(|k| self.b_unchecked(p, k)).collect())
    }

    /// Five-point Laplacian `A1 + A2`.
    pub fn laplacian5(&self, p: GridPoint) -> Result<Vec<f64>> {
        self.check_x("laplacian", p)?;
        self.check_y("laplacian", p)?;
        Ok((0..self.dim).map(|k| self.laplacian_unchecked(p, k)).collect())
    }

    #[inline]
    pub(crate) fn a1_unchecked(&self, p: GridPoint, k: usize) -> f64 {
        let (ix, iy, it) = (p.ix, p.iy, p.it);
        (self.at(ix + 1, iy, it, k) - 2.0 * self.at(ix, iy, it, k) + self.at(ix - 1, iy, it, k))
            / (self.spec.dx * self.spec.dx)
    }

    #[inline]
    pub(crate) fn a2_unchecked(&self, p: GridPoint, k: usize) -> f64 {
        let (ix, iy, it) = (p.ix, p.iy, p.it);
        (self.at(ix, iy + 1, it, k) - 2.0 * self.at(ix, iy, it, k) + self.at(ix, iy - 1, it, k))
            / (self.spec.dy * self.spec.dy)
    }

    #[inline]
    pub(crate) fn b_unchecked(&self, p: GridPoint, k: usize) -> f64 {
        (self.at(p.ix, p.iy, p.it + 1, k) - self.at(p.ix, p.iy, p.it, k)) / self.spec.dt
    }

    #[inline]
    pub(crate) fn laplacian_unchecked(&self, p: GridPoint, k: usize) -> f64 {
        self.a1_unchecked(p, k) + self.a2_unchecked(p, k)
    }

    /// `B f - A1 f - A2 f` at an interior point with `t <= T - h`.
    pub(crate) fn parabolic_residual(&self, p: GridPoint) -> Vec<f64> {
        (0..self.dim)
            .map(|k| self.b_unchecked(p, k) - self.laplacian_unchecked(p, k))
            .collect()
    }

    /// Writes the field as CSV with header `x,y,t,<prefix>_1,...`.
    pub fn write_csv_with_prefix<W: Write>(&self, writer: W, prefix: &str) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        let mut header = vec!["x".to_string(), "y".to_string(), "t".to_string()];
        header.extend((1..=self.dim).map(|k| format!("{prefix}_{k}")));
        w.write_record(&header)?;
        for p in self.spec.points() {
            let (x, y, t) = self.spec.coords(p);
            let mut rec = vec![fmt_f64(x), fmt_f64(y), fmt_f64(t)];
            rec.extend(self.get(p).iter().map(|v| fmt_f64(*v)));
            w.write_record(&rec)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        self.write_csv_with_prefix(writer, "u")
    }

    /// Reads a field written by [`Field::write_csv`]; coordinates must match `spec`.
    pub fn read_csv<R: Read>(reader: R, spec: &GridSpec, dim: usize) -> Result<Self> {
        let mut rdr = csv::Reader::from_reader(reader);
        let width = rdr.headers()?.len();
        if width != 3 + dim {
            return Err(Error::Shape(format!("expected {} columns, header has {width}", 3 + dim)));
        }
        let mut field = Self::zeros(spec, dim);
        let mut points = spec.points();
        for (row, rec) in rdr.records().enumerate() {
            let rec = rec?;
            let p = points.next().ok_or_else(|| {
                Error::Shape(format!("more rows than the {} grid points", spec.num_points()))
            })?;
            let parsed = rec
                .iter()
                .map(|s| s.trim().parse::<f64>())
                .collect::<std::result::Result<Vec<_>, _>>()
                .map_err(|e| Error::Parse(format!("row {}: {e}", row + 2)))?;
            if parsed.len() != width {
                return Err(Error::Shape(format!("row {} has {} columns", row + 2, parsed.len())));
            }
            let (x, y, t) = spec.coords(p);
            let scale = 1.0 + x.abs().max(y.abs()).max(t.abs());
            if (parsed[0] - x).abs() > 1e-9 * scale
                || (parsed[1] - y).abs() > 1e-9 * scale
                || (parsed[2] - t).abs() > 1e-9 * scale
            {
                return Err(Error::Shape(format!(
                    "row {} has coordinates ({}, {}, {}), expected grid point {p}",
                    row + 2,
                    parsed[0],
                    parsed[1],
                    parsed[2]
                )));
            }
            field.get_mut(p).copy_from_slice(&parsed[3..]);
        }
        if points.next().is_some() {
            return Err(Error::Shape(format!("fewer rows than the {} grid points", spec.num_points())));
        }
        Ok(field)
    }
}

/// 17 significant digits.
pub(crate) fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

/// Prescribed values on the five faces `t = 0`, `y = 0`, `y = S`, `x = 0`, `x = L`.
///
/// Corner and edge nodes take the `t = 0` value first, then the y-faces,
/// then the x-faces. Samples shared by two faces must agree to 1e-12.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundaryData {
    spec: GridSpec,
    /// `(iy, ix)` on `t = 0`.
    alpha: Vec<f64>,
    /// `(it, ix)` on `y = 0`.
    beta0: Vec<f64>,
    /// `(it, ix)` on `y = S`.
    beta_s: Vec<f64>,
    /// `(it, iy)` on `x = 0`.
    gamma0: Vec<f64>,
    /// `(it, iy)` on `x = L`.
    gamma_l: Vec<f64>,
}

impl BoundaryData {
    /// Validates face sizes and edge compatibility.
    pub fn new(
        spec: &GridSpec,
        alpha: Vec<f64>,
        beta0: Vec<f64>,
        beta_s: Vec<f64>,
        gamma0: Vec<f64>,
        gamma_l: Vec<f64>,
    ) -> Result<Self> {
        let n = spec.dim;
        let expect = [
            ("alpha", alpha.len(), spec.nx * spec.ny * n),
            ("beta0", beta0.len(), spec.nx * spec.nt * n),
            ("betaS", beta_s.len(), spec.nx * spec.nt * n),
            ("gamma0", gamma0.len(), spec.ny * spec.nt * n),
            ("gammaL", gamma_l.len(), spec.ny * spec.nt * n),
        ];
        for (name, got, want) in expect {
            if got != want {
                return Err(Error::Shape(format!("{name}: expected {want} samples, got {got}")));
            }
        }
        let data = Self { spec: *spec, alpha, beta0, beta_s, gamma0, gamma_l };
        data.check_edges()?;
        Ok(data)
    }

    pub fn zero(spec: &GridSpec) -> Self {
        Self::constant(spec, &vec![0.0; spec.dim])
    }

    pub fn constant(spec: &GridSpec, value: &[f64]) -> Self {
        assert_eq!(value.len(), spec.dim);
        Self::from_fn(spec, |_, _, _| value.to_vec())
    }

    /// Samples one function on all faces, which makes the data compatible by construction.
    pub fn from_fn(spec: &GridSpec, f: impl Fn(f64, f64, f64) -> Vec<f64>) -> Self {
        let mut faces = FaceSamples::new(spec);
        faces.fill(spec, |face, p| {
            let _ = face;
            let (x, y, t) = spec.coords(p);
            f(x, y, t)
        });
        let FaceSamples { alpha, beta0, beta_s, gamma0, gamma_l } = faces;
        Self { spec: *spec, alpha, beta0, beta_s, gamma0, gamma_l }
    }

    /// Builds each face from its own function; fails if they disagree on shared edges.
    pub fn from_face_fns(
        spec: &GridSpec,
        mut face_fn: impl FnMut(Face, f64, f64, f64) -> Vec<f64>,
    ) -> Result<Self> {
        let mut faces = FaceSamples::new(spec);
        faces.fill(spec, |face, p| {
            let (x, y, t) = spec.coords(p);
            face_fn(face, x, y, t)
        });
        let FaceSamples { alpha, beta0, beta_s, gamma0, gamma_l } = faces;
        Self::new(spec, alpha, beta0, beta_s, gamma0, gamma_l)
    }

    pub fn spec(&self) -> &GridSpec {
        &self.spec
    }

    fn face_slice(&self, face: Face, p: GridPoint) -> &[f64] {
        let s = &self.spec;
        let n = s.dim;
        let (buf, idx) = match face {
            Face::Time => (&self.alpha, p.iy * s.nx + p.ix),
            Face::Y0 => (&self.beta0, p.it * s.nx + p.ix),
            Face::YS => (&self.beta_s, p.it * s.nx + p.ix),
            Face::X0 => (&self.gamma0, p.it * s.ny + p.iy),
            Face::XL => (&self.gamma_l, p.it * s.ny + p.iy),
        };
        &buf[idx * n..(idx + 1) * n]
    }

    /// Faces containing `p`, in precedence order.
    pub fn faces_of(&self, p: GridPoint) -> Vec<Face> {
        faces_of(&self.spec, p)
    }

    /// Prescribed value at `p`, or `None` for points not on any face.
    pub fn value_at(&self, p: GridPoint) -> Option<&[f64]> {
        self.faces_of(p).first().map(|f| self.face_slice(*f, p))
    }

    fn check_edges(&self) -> Result<()> {
        for p in self.spec.points() {
            let faces = self.faces_of(p);
            if faces.len() < 2 {
                continue;
            }
            let first = self.face_slice(faces[0], p);
            for other in &faces[1..] {
                let v = self.face_slice(*other, p);
                let gap = first.iter().zip(v).fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
                if gap > EDGE_TOL {
                    return Err(Error::Invalid(format!(
                        "boundary faces {} and {other} disagree by {gap:e} at {p}",
                        faces[0]
                    )));
                }
            }
        }
        Ok(())
    }
}

pub(crate) fn faces_of(spec: &GridSpec, p: GridPoint) -> Vec<Face> {
    let mut faces = Vec::new();
    if p.it == 0 {
        faces.push(Face::Time);
    }
    if p.iy == 0 {
        faces.push(Face::Y0);
    }
    if p.iy + 1 == spec.ny {
        faces.push(Face::YS);
    }
    if p.ix == 0 {
        faces.push(Face::X0);
    }
    if p.ix + 1 == spec.nx {
        faces.push(Face::XL);
    }
    faces
}

struct FaceSamples {
    alpha: Vec<f64>,
    beta0: Vec<f64>,
    beta_s: Vec<f64>,
    gamma0: Vec<f64>,
    gamma_l: Vec<f64>,
}

impl FaceSamples {
    fn new(spec: &GridSpec) -> Self {
        let n = spec.dim;
        Self {
            alpha: vec![0.0; spec.nx * spec.ny * n],
            beta0: vec![0.0; spec.nx * spec.nt * n],
            beta_s: vec![0.0; spec.nx * spec.nt * n],
            gamma0: vec![0.0; spec.ny * spec.nt * n],
            gamma_l: vec![0.0; spec.ny * spec.nt * n],
        }
    }

    fn fill(&mut self, spec: &GridSpec, mut sample: impl FnMut(Face, GridPoint) -> Vec<f64>) {
        let n = spec.dim;
        let put = |buf: &mut Vec<f64>, idx: usize, v: Vec<f64>| {
            assert_eq!(v.len(), n, "boundary sample dimension");
            buf[idx * n..(idx + 1) * n].copy_from_slice(&v);
        };
        for iy in 0..spec.ny {
            for ix in 0..spec.nx {
                let p = GridPoint::new(ix, iy, 0);
                put(&mut self.alpha, iy * spec.nx + ix, sample(Face::Time, p));
            }
        }
        for it in 0..spec.nt {
            for ix in 0..spec.nx {
                put(&mut self.beta0, it * spec.nx + ix, sample(Face::Y0, GridPoint::new(ix, 0, it)));
                let top = GridPoint::new(ix, spec.ny - 1, it);
                put(&mut self.beta_s, it * spec.nx + ix, sample(Face::YS, top));
            }
            for iy in 0..spec.ny {
                put(&mut self.gamma0, it * spec.ny + iy, sample(Face::X0, GridPoint::new(0, iy, it)));
                let right = GridPoint::new(spec.nx - 1, iy, it);
                put(&mut self.gamma_l, it * spec.ny + iy, sample(Face::XL, right));
            }
        }
    }
}

/// Returns `f` with all five faces overwritten by `b`; the interior is untouched.
pub fn apply_boundary(f: &Field, b: &BoundaryData) -> Result<Field> {
    let mut out = f.clone();
    apply_boundary_in_place(&mut out, b)?;
    Ok(out)
}

pub(crate) fn apply_boundary_in_place(f: &mut Field, b: &BoundaryData) -> Result<()> {
    if f.spec != b.spec || f.dim != b.spec.dim {
        return Err(Error::Shape("field and boundary data live on different grids".into()));
    }
    let spec = f.spec;
    for p in spec.points() {
        if let Some(v) = b.value_at(p) {
            f.get_mut(p).copy_from_slice(v);
        }
    }
    Ok(())
}

/// Writes the prescribed values of one time level into `f`.
pub(crate) fn apply_boundary_level(f: &mut Field, b: &BoundaryData, it: usize) {
    let spec = f.spec;
    for iy in 0..spec.ny {
        for ix in 0..spec.nx {
            let p = GridPoint::new(ix, iy, it);
            if let Some(v) = b.value_at(p) {
                f.get_mut(p).copy_from_slice(v);
            }
        }
    }
}
