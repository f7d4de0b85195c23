//! Closed convex control sets and their support functions.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{dot, max_abs, Matrix};
use crate::lp::{LpBuilder, LpOutcome, Relation, VarKind};

/// A real number or `+∞`, kept out of float arithmetic.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ExtReal {
    Finite(f64),
    PosInf,
}

impl ExtReal {
    pub fn finite(self) -> Option<f64> {
        match self {
            ExtReal::Finite(v) => Some(v),
            ExtReal::PosInf => None,
        }
    }

    pub fn is_finite(self) -> bool {
        matches!(self, ExtReal::Finite(_))
    }

    /// `self + other`, infinite if either side is.
    pub fn add(self, other: ExtReal) -> ExtReal {
        match (self, other) {
            (ExtReal::Finite(a), ExtReal::Finite(b)) => ExtReal::Finite(a + b),
            _ => ExtReal::PosInf,
        }
    }

    pub fn shift(self, by: f64) -> ExtReal {
        self.add(ExtReal::Finite(by))
    }

    pub fn scale(self, s: f64) -> ExtReal {
        debug_assert!(s > 0.0);
        match self {
            ExtReal::Finite(a) => ExtReal::Finite(a * s),
            ExtReal::PosInf => ExtReal::PosInf,
        }
    }
}

impl std::fmt::Display for ExtReal {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ExtReal::Finite(v) => write!(f, "{v:.16e}"),
            ExtReal::PosInf => f.write_str("+inf"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Support {
    pub value: ExtReal,
    /// Present whenever `value` is finite.
    pub maximizer: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ConvexSet {
    Box { lower: Vec<f64>, upper: Vec<f64> },
    /// `{w : C w <= e}`.
    Polytope { c: Matrix, e: Vec<f64> },
    Singleton { point: Vec<f64> },
    /// Convex hull of the listed points.
    FiniteSet { points: Vec<Vec<f64>> },
}

impl ConvexSet {
    pub fn new_box(lower: Vec<f64>, upper: Vec<f64>) -> Result<Self> {
        let s = ConvexSet::Box { lower, upper };
        s.validate()?;
        Ok(s)
    }

    /// `[lo, hi]^dim`.
    pub fn cube(dim: usize, lo: f64, hi: f64) -> Result<Self> {
        Self::new_box(vec![lo; dim], vec![hi; dim])
    }

    pub fn polytope(c: Matrix, e: Vec<f64>) -> Result<Self> {
        let s = ConvexSet::Polytope { c, e };
        s.validate()?;
        Ok(s)
    }

    pub fn singleton(point: Vec<f64>) -> Result<Self> {
        let s = ConvexSet::Singleton { point };
        s.validate()?;
        Ok(s)
    }

    pub fn finite_set(points: Vec<Vec<f64>>) -> Result<Self> {
        let s = ConvexSet::FiniteSet { points };
        s.validate()?;
        Ok(s)
    }

    /// Checks the variant invariants; deserialized sets must pass through here.
    pub fn validate(&self) -> Result<()> {
        let finite = |v: &[f64]| v.iter().all(|x| x.is_finite());
        match self {
            ConvexSet::Box { lower, upper } => {
                if lower.len() != upper.len() || lower.is_empty() {
                    return Err(Error::Shape(format!("box bounds of length {} and {}", lower.len(), upper.len())));
                }
                if !finite(lower) || !finite(upper) {
                    return Err(Error::Invalid("box bounds must be finite".into()));
                }
                if let Some(i) = (0..lower.len()).find(|&i| lower[i] > upper[i]) {
                    return Err(Error::Invalid(format!("box lower[{i}] = {} exceeds upper = {}", lower[i], upper[i])));
                }
            }
            ConvexSet::Polytope { c, e } => {
                if c.rows() != e.len() || c.cols() == 0 {
                    return Err(Error::Shape(format!("polytope {}x{} with rhs {}", c.rows(), c.cols(), e.len())));
                }
                if !finite(e) {
                    return Err(Error::Invalid("polytope rhs must be finite".into()));
                }
                if polytope_point(c, e, &vec![0.0; c.cols()])?.is_none() {
                    return Err(Error::Invalid("polytope is empty".into()));
                }
            }
            ConvexSet::Singleton { point } => {
                if point.is_empty() || !finite(point) {
                    return Err(Error::Invalid("singleton point must be a finite nonempty vector".into()));
                }
            }
            ConvexSet::FiniteSet { points } => {
                let Some(first) = points.first() else {
                    return Err(Error::Invalid("finite set is empty".into()));
                };
                if first.is_empty() || points.iter().any(|p| p.len() != first.len()) {
                    return Err(Error::Shape("finite set points differ in length".into()));
                }
                if !points.iter().all(|p| finite(p)) {
                    return Err(Error::Invalid("finite set points must be finite".into()));
                }
                for i in 0..points.len() {
                    for j in 0..i {
                        if crate::linalg::max_abs_diff(&points[i], &points[j]) <= 1e-12 {
                            return Err(Error::Invalid(format!("finite set points {j} and {i} coincide")));
                        }
                    }
                }
            }
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        match self {
            ConvexSet::Box { lower, .. } => lower.len(),
            ConvexSet::Polytope { c, .. } => c.cols(),
            ConvexSet::Singleton { point } => point.len(),
            ConvexSet::FiniteSet { points } => points[0].len(),
        }
    }

    fn check_dim(&self, v: &[f64], what: &str) -> Result<()> {
        if v.len() != self.dim() {
            return Err(Error::Shape(format!("{what} of length {} for a set in dimension {}", v.len(), self.dim())));
        }
        if !v.iter().all(|x| x.is_finite()) {
            return Err(Error::Invalid(format!("{what} must be finite")));
        }
        Ok(())
    }

    /// `sup ⟨w, direction⟩` over the set with a deterministic maximizer.
    ///
    /// Ties: box components go to the upper bound, polytopes return the
    /// lexicographically largest optimal vertex, finite sets the lowest index.
    /// The zero direction selects the box midpoint, the lexicographically
    /// smallest polytope vertex or the first listed point.
    pub fn support(&self, direction: &[f64]) -> Result<Support> {
        self.check_dim(direction, "direction")?;
        let zero = direction.iter().all(|v| *v == 0.0);
        let (value, w) = match self {
            ConvexSet::Box { lower, upper } => {
                let w: Vec<f64> = if zero {
                    lower.iter().zip(upper).map(|(l, u)| 0.5 * (l + u)).collect()
                } else {
                    direction
                        .iter()
                        .zip(lower.iter().zip(upper))
                        .map(|(d, (l, u))| if *d < 0.0 { *l } else { *u })
                        .collect()
                };
                (dot(&w, direction), w)
            }
            ConvexSet::Singleton { point } => (dot(point, direction), point.clone()),
            ConvexSet::FiniteSet { points } => {
                let mut best = 0;
                let mut best_val = dot(&points[0], direction);
                for (i, p) in points.iter().enumerate().skip(1) {
                    let v = dot(p, direction);
                    if v > best_val {
                        best = i;
                        best_val = v;
                    }
                }
                (best_val, points[best].clone())
            }
            ConvexSet::Polytope { c, e } => {
                return match polytope_support(c, e, direction)? {
                    Some(s) => Ok(s),
                    None => Err(Error::Invalid("support of an empty polytope".into())),
                };
            }
        };
        Ok(Support { value: ExtReal::Finite(value), maximizer: Some(w) })
    }

    /// Support value only, skipping the tie-breaking work.
    pub fn support_value(&self, direction: &[f64]) -> Result<ExtReal> {
        self.check_dim(direction, "direction")?;
        match self {
            ConvexSet::Box { lower, upper } => Ok(ExtReal::Finite(
                direction
                    .iter()
                    .zip(lower.iter().zip(upper))
                    .map(|(d, (l, u))| if *d < 0.0 { d * l } else { d * u })
                    .sum(),
            )),
            ConvexSet::Polytope { c, e } => match polytope_max(c, e, direction)? {
                PolyMax::Optimal(v, _) => Ok(ExtReal::Finite(v)),
                PolyMax::Unbounded => Ok(ExtReal::PosInf),
                PolyMax::Empty => Err(Error::Invalid("support of an empty polytope".into())),
            },
            _ => self.support(direction).map(|s| s.value),
        }
    }

    /// Euclidean projection; boxes and singletons only.
    pub fn project(&self, point: &[f64]) -> Result<Vec<f64>> {
        self.check_dim(point, "point")?;
        match self {
            ConvexSet::Box { lower, upper } => {
                Ok(point.iter().zip(lower.iter().zip(upper)).map(|(p, (l, u))| p.clamp(*l, *u)).collect())
            }
            ConvexSet::Singleton { point: s } => Ok(s.clone()),
            _ => Err(Error::Capability("projection onto polytopes and finite sets".into())),
        }
    }

    /// `∞`-norm distance from `point` to the set.
    pub fn distance_inf(&self, point: &[f64]) -> Result<f64> {
        self.check_dim(point, "point")?;
        match self {
            ConvexSet::Box { .. } | ConvexSet::Singleton { .. } => {
                let p = self.project(point)?;
                Ok(crate::linalg::max_abs_diff(&p, point))
            }
            _ => self.distance_inf_image(&Matrix::identity(self.dim()), point),
        }
    }

    /// `min over w in the set of ‖B w − target‖∞`.
    pub fn distance_inf_image(&self, b: &Matrix, target: &[f64]) -> Result<f64> {
        if b.cols() != self.dim() || b.rows() != target.len() {
            return Err(Error::Shape(format!(
                "image matrix {}x{} for a set in dimension {} and target of length {}",
                b.rows(),
                b.cols(),
                self.dim(),
                target.len()
            )));
        }
        if b.is_identity() && matches!(self, ConvexSet::Box { .. } | ConvexSet::Singleton { .. }) {
            return self.distance_inf(target);
        }
        let mut lp = LpBuilder::new();
        let w = self.append_member_vars(&mut lp)?;
        let s = lp.add_var(VarKind::NonNeg, -1.0);
        for i in 0..b.rows() {
            let row: Vec<(usize, f64)> = w.iter().enumerate().map(|(j, &wj)| (wj, b.get(i, j))).collect();
            lp.add_row(row.iter().copied().chain([(s, -1.0)]), Relation::Le, target[i]);
            lp.add_row(row.iter().map(|(j, v)| (*j, -v)).chain([(s, -1.0)]), Relation::Le, -target[i]);
        }
        match lp.solve()? {
            LpOutcome::Optimal(sol) => Ok(sol.x[s].max(0.0)),
            _ => Err(Error::Conditioning("distance program did not reach an optimum".into())),
        }
    }

    pub fn contains(&self, point: &[f64], tol: f64) -> Result<bool> {
        Ok(self.distance_inf(point)? <= tol)
    }

    /// Adds fresh variables constrained to lie in the set and returns their indices.
    pub fn append_member_vars(&self, lp: &mut LpBuilder) -> Result<Vec<usize>> {
        let r = self.dim();
        match self {
            ConvexSet::Box { lower, upper } => {
                let w = lp.add_vars(r, VarKind::Free);
                for k in 0..r {
                    lp.add_row([(w[k], 1.0)], Relation::Le, upper[k]);
                    lp.add_row([(w[k], 1.0)], Relation::Ge, lower[k]);
                }
                Ok(w)
            }
            ConvexSet::Singleton { point } => {
                let w = lp.add_vars(r, VarKind::Free);
                for k in 0..r {
                    lp.add_row([(w[k], 1.0)], Relation::Eq, point[k]);
                }
                Ok(w)
            }
            ConvexSet::Polytope { c, e } => {
                let w = lp.add_vars(r, VarKind::Free);
                for i in 0..c.rows() {
                    lp.add_row(w.iter().enumerate().map(|(k, &wk)| (wk, c.get(i, k))), Relation::Le, e[i]);
                }
                Ok(w)
            }
            ConvexSet::FiniteSet { points } => {
                let w = lp.add_vars(r, VarKind::Free);
                let lam = lp.add_vars(points.len(), VarKind::NonNeg);
                lp.add_row(lam.iter().map(|&l| (l, 1.0)), Relation::Eq, 1.0);
                for k in 0..r {
                    let terms = lam.iter().zip(points).map(|(&l, p)| (l, p[k]));
                    lp.add_row(terms.chain([(w[k], -1.0)]), Relation::Eq, 0.0);
                }
                Ok(w)
            }
        }
    }

    /// Whether the set is bounded, so every direction has a finite support.
    pub fn is_bounded(&self) -> Result<bool> {
        match self {
            ConvexSet::Polytope { c, .. } => {
                for k in 0..c.cols() {
                    for s in [1.0, -1.0] {
                        let mut d = vec![0.0; c.cols()];
                        d[k] = s;
                        if !self.support_value(&d)?.is_finite() {
                            return Ok(false);
                        }
                    }
                }
                Ok(true)
            }
            _ => Ok(true),
        }
    }

    /// Points whose convex hull is the set (bounded sets) used for dual-cone
    /// tests: box corners, polytope vertices (enumerated), finite-set points.
    /// Returns `None` when the enumeration would exceed `limit` points or the
    /// polytope is unbounded.
    pub fn generators(&self, limit: usize) -> Result<Option<Vec<Vec<f64>>>> {
        match self {
            ConvexSet::Singleton { point } => Ok(Some(vec![point.clone()])),
            ConvexSet::FiniteSet { points } => Ok(Some(points.clone())),
            ConvexSet::Box { lower, upper } => {
                let free: Vec<usize> = (0..lower.len()).filter(|&k| lower[k] < upper[k]).collect();
                if free.len() >= usize::BITS as usize - 1 || (1usize << free.len()) > limit {
                    return Ok(None);
                }
                let mut out = Vec::with_capacity(1 << free.len());
                for mask in 0..(1usize << free.len()) {
                    let mut p = lower.clone();
                    for (b, &k) in free.iter().enumerate() {
                        if mask >> b & 1 == 1 {
                            p[k] = upper[k];
                        }
                    }
                    out.push(p);
                }
                Ok(Some(out))
            }
            ConvexSet::Polytope { c, e } => {
                if !self.is_bounded()? {
                    return Ok(None);
                }
                Ok(enumerate_vertices(c, e, limit))
            }
        }
    }

    /// A random member: uniform on boxes, a random convex combination of
    /// generators otherwise.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<Vec<f64>> {
        match self {
            ConvexSet::Box { lower, upper } => Ok(lower
                .iter()
                .zip(upper)
                .map(|(l, u)| if l < u { rng.gen_range(*l..=*u) } else { *l })
                .collect()),
            ConvexSet::Singleton { point } => Ok(point.clone()),
            _ => {
                let gens = match self.generators(4096)? {
                    Some(g) => g,
                    None => {
                        let mut g = Vec::new();
                        for _ in 0..2 * self.dim() + 2 {
                            let d: Vec<f64> = (0..self.dim()).map(|_| rng.gen_range(-1.0..1.0)).collect();
                            if let Some(w) = self.support(&d)?.maximizer {
                                g.push(w);
                            }
                        }
                        g
                    }
                };
                let weights: Vec<f64> = gens.iter().map(|_| -rng.gen_range(1e-12f64..1.0).ln()).collect();
                let total: f64 = weights.iter().sum();
                let mut w = vec![0.0; self.dim()];
                for (g, wt) in gens.iter().zip(&weights) {
                    for (o, x) in w.iter_mut().zip(g) {
                        *o += wt / total * x;
                    }
                }
                Ok(w)
            }
        }
    }
}

enum PolyMax {
    Optimal(f64, Vec<f64>),
    Unbounded,
    Empty,
}

fn polytope_lp(c: &Matrix, e: &[f64], objective: &[f64]) -> (LpBuilder, Vec<usize>) {
    let mut lp = LpBuilder::new();
    let w: Vec<usize> = objective.iter().map(|o| lp.add_var(VarKind::Free, *o)).collect();
    for i in 0..c.rows() {
        lp.add_row(w.iter().enumerate().map(|(k, &wk)| (wk, c.get(i, k))), Relation::Le, e[i]);
    }
    (lp, w)
}

fn polytope_max(c: &Matrix, e: &[f64], objective: &[f64]) -> Result<PolyMax> {
    let (lp, _) = polytope_lp(c, e, objective);
    Ok(match lp.solve()? {
        LpOutcome::Optimal(sol) => PolyMax::Optimal(sol.value, sol.x),
        LpOutcome::Unbounded { .. } => PolyMax::Unbounded,
        LpOutcome::Infeasible { .. } => PolyMax::Empty,
    })
}

/// Some point of `{w : C w <= e}`, or `None` when empty.
fn polytope_point(c: &Matrix, e: &[f64], objective: &[f64]) -> Result<Option<Vec<f64>>> {
    let (lp, _) = polytope_lp(c, e, objective);
    Ok(match lp.solve()? {
        LpOutcome::Optimal(sol) => Some(sol.x),
        LpOutcome::Unbounded { point, .. } => Some(point),
        LpOutcome::Infeasible { .. } => None,
    })
}

/// Support of `{w : C w <= e}` in `direction`; `None` for an empty polytope.
pub(crate) fn polytope_support(c: &Matrix, e: &[f64], direction: &[f64]) -> Result<Option<Support>> {
    let r = c.cols();
    let zero = direction.iter().all(|v| *v == 0.0);
    let value = if zero {
        if polytope_point(c, e, direction)?.is_none() {
            return Ok(None);
        }
        0.0
    } else {
        match polytope_max(c, e, direction)? {
            PolyMax::Optimal(v, _) => v,
            PolyMax::Unbounded => return Ok(Some(Support { value: ExtReal::PosInf, maximizer: None })),
            PolyMax::Empty => return Ok(None),
        }
    };
    // Lexicographic refinement over the optimal face: maximize each
    // coordinate in turn (minimize for the zero direction).
    let sign = if zero { -1.0 } else { 1.0 };
    let mut fixed: Vec<f64> = Vec::with_capacity(r);
    let mut best: Option<Vec<f64>> = None;
    for k in 0..r {
        let mut obj = vec![0.0; r];
        obj[k] = sign;
        let (mut lp, w) = polytope_lp(c, e, &obj);
        if !zero {
            lp.add_row(w.iter().zip(direction).map(|(&wk, d)| (wk, *d)), Relation::Ge, value);
        }
        for (j, f) in fixed.iter().enumerate() {
            lp.add_row([(w[j], sign)], Relation::Ge, *f);
        }
        match lp.solve()? {
            LpOutcome::Optimal(sol) => {
                fixed.push(sol.value);
                best = Some(sol.x);
            }
            LpOutcome::Unbounded { point, .. } => {
                best = Some(point);
                break;
            }
            LpOutcome::Infeasible { .. } => break,
        }
    }
    let w = match best {
        Some(w) => w,
        None => match polytope_max(c, e, direction)? {
            PolyMax::Optimal(_, x) => x,
            _ => return Err(Error::Conditioning("lexicographic refinement lost feasibility".into())),
        },
    };
    let value = if zero { 0.0 } else { dot(&w, direction).max(value) };
    Ok(Some(Support { value: ExtReal::Finite(value), maximizer: Some(w) }))
}

/// Vertices of a bounded polytope by checking every `r`-subset of active rows.
fn enumerate_vertices(c: &Matrix, e: &[f64], limit: usize) -> Option<Vec<Vec<f64>>> {
    let r = c.cols();
    let s = c.rows();
    let mut out: Vec<Vec<f64>> = Vec::new();
    let mut idx: Vec<usize> = (0..r).collect();
    if r > s {
        return None;
    }
    let mut combos = 0usize;
    loop {
        combos += 1;
        if combos > 200_000 {
            return None;
        }
        let sub = Matrix::from_rows(&idx.iter().map(|&i| c.row(i).to_vec()).collect::<Vec<_>>()).ok()?;
        let rhs: Vec<f64> = idx.iter().map(|&i| e[i]).collect();
        if let Some(x) = crate::linalg::solve_dense(&sub, &rhs) {
            let scale = 1.0 + max_abs(&x);
            let feasible = (0..s).all(|i| dot(c.row(i), &x) <= e[i] + 1e-9 * scale);
            if feasible && !out.iter().any(|p| crate::linalg::max_abs_diff(p, &x) <= 1e-9 * scale) {
                out.push(x);
                if out.len() > limit {
                    return None;
                }
            }
        }
        // next combination
        let mut i = r;
        loop {
            if i == 0 {
                return Some(out);
            }
            i -= 1;
            if idx[i] < s - r + i {
                idx[i] += 1;
                for j in i + 1..r {
                    idx[j] = idx[j - 1] + 1;
                }
                break;
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn triangle() -> ConvexSet {
        ConvexSet::polytope(
            Matrix::from_rows(&[vec![1.0, 1.0], vec![-1.0, 0.0], vec![0.0, -1.0]]).unwrap(),
            vec![1.0, 0.0, 0.0],
        )
        .unwrap()
    }

    #[test]
    fn box_support_uses_sign_with_ties_up() {
        let b = ConvexSet::cube(3, -1.0, 1.0).unwrap();
        let s = b.support(&[2.0, -0.5, 0.0]).unwrap();
        assert_eq!(s.value, ExtReal::Finite(2.5));
        assert_eq!(s.maximizer.unwrap(), vec![1.0, -1.0, 1.0]);
    }

    #[test]
    fn zero_direction_picks_canonical_points() {
        let b = ConvexSet::new_box(vec![0.0, -2.0], vec![1.0, 2.0]).unwrap();
        let s = b.support(&[0.0, 0.0]).unwrap();
        assert_eq!(s.value, ExtReal::Finite(0.0));
        assert_eq!(s.maximizer.unwrap(), vec![0.5, 0.0]);
        let t = triangle().support(&[0.0, 0.0]).unwrap();
        assert_eq!(t.maximizer.unwrap(), vec![0.0, 0.0]);
        let f = ConvexSet::finite_set(vec![vec![3.0], vec![1.0]]).unwrap();
        assert_eq!(f.support(&[0.0]).unwrap().maximizer.unwrap(), vec![3.0]);
    }

    #[test]
    fn singleton_support() {
        let s = ConvexSet::singleton(vec![1.0, -2.0]).unwrap();
        assert_eq!(s.support(&[3.0, 1.0]).unwrap().value, ExtReal::Finite(1.0));
    }

    #[test]
    fn triangle_tie_goes_to_lexicographic_max_vertex() {
        // Vertices (0,0), (1,0), (0,1) give values 0, 1, 1.
        let s = triangle().support(&[1.0, 1.0]).unwrap();
        assert_eq!(s.value, ExtReal::Finite(1.0));
        assert_eq!(s.maximizer.unwrap(), vec![1.0, 0.0]);
        let s = triangle().support(&[-1.0, 0.0]).unwrap();
        assert_eq!(s.value, ExtReal::Finite(0.0));
        assert_eq!(s.maximizer.unwrap(), vec![0.0, 1.0]);
    }

    #[test]
    fn unbounded_polytope_support() {
        let half = ConvexSet::polytope(Matrix::from_rows(&[vec![-1.0]]).unwrap(), vec![0.0]).unwrap();
        assert_eq!(half.support(&[1.0]).unwrap().value, ExtReal::PosInf);
        assert_eq!(half.support(&[-1.0]).unwrap().value, ExtReal::Finite(0.0));
        assert!(!half.is_bounded().unwrap());
    }

    #[test]
    fn invalid_sets_rejected() {
        assert!(ConvexSet::new_box(vec![1.0], vec![0.0]).is_err());
        assert!(ConvexSet::polytope(Matrix::from_rows(&[vec![1.0], vec![-1.0]]).unwrap(), vec![0.0, -1.0]).is_err());
        assert!(ConvexSet::finite_set(vec![vec![1.0], vec![1.0 + 1e-13]]).is_err());
        assert!(ConvexSet::finite_set(vec![]).is_err());
    }

    #[test]
    fn projection_cases() {
        let b = ConvexSet::cube(1, -1.0, 1.0).unwrap();
        assert_eq!(b.project(&[3.0]).unwrap(), vec![1.0]);
        assert_eq!(b.project(&[0.25]).unwrap(), vec![0.25]);
        let s = ConvexSet::singleton(vec![2.0]).unwrap();
        assert_eq!(s.project(&[-7.0]).unwrap(), vec![2.0]);
        assert!(matches!(triangle().project(&[0.0, 0.0]), Err(Error::Capability(_))));
    }

    #[test]
    fn distances() {
        assert!((triangle().distance_inf(&[1.0, 1.0]).unwrap() - 0.5).abs() < 1e-12);
        assert!(triangle().contains(&[0.2, 0.2], 1e-12).unwrap());
        let f = ConvexSet::finite_set(vec![vec![0.0, 0.0], vec![2.0, 0.0]]).unwrap();
        assert!((f.distance_inf(&[1.0, 0.5]).unwrap() - 0.5).abs() < 1e-12);
        let b = ConvexSet::cube(1, -1.0, 1.0).unwrap();
        let img = Matrix::from_rows(&[vec![2.0], vec![1.0]]).unwrap();
        // B w = (2w, w) against (2, 0): best w balances |2w-2| and |w|.
        assert!((b.distance_inf_image(&img, &[2.0, 0.0]).unwrap() - 2.0 / 3.0).abs() < 1e-9);
    }

    #[test]
    fn generator_enumeration() {
        let mut v = triangle().generators(100).unwrap().unwrap();
        v.sort_by(|a, b| a.partial_cmp(b).unwrap());
        assert_eq!(v, vec![vec![0.0, 0.0], vec![0.0, 1.0], vec![1.0, 0.0]]);
        assert_eq!(ConvexSet::cube(3, 0.0, 1.0).unwrap().generators(100).unwrap().unwrap().len(), 8);
    }

    fn sets() -> Vec<ConvexSet> {
        vec![
            ConvexSet::new_box(vec![-1.0, 0.0, 2.0], vec![1.0, 0.5, 3.0]).unwrap(),
            ConvexSet::polytope(
                Matrix::from_rows(&[
                    vec![1.0, 1.0, 0.0],
                    vec![-1.0, 0.0, 0.0],
                    vec![0.0, -1.0, 0.0],
                    vec![0.0, 0.0, 1.0],
                    vec![0.0, 0.0, -1.0],
                    vec![1.0, -2.0, 0.5],
                ])
                .unwrap(),
                vec![1.0, 0.0, 0.0, 1.0, 1.0, 0.7],
            )
            .unwrap(),
            ConvexSet::singleton(vec![0.3, -1.0, 2.0]).unwrap(),
            ConvexSet::finite_set(vec![vec![0.0, 0.0, 0.0], vec![1.0, 2.0, -1.0], vec![-0.5, 0.25, 3.0]]).unwrap(),
        ]
    }

    fn vec3() -> impl Strategy<Value = Vec<f64>> {
        proptest::collection::vec(-5.0f64..5.0, 3)
    }

    proptest! {
        #[test]
        fn support_homogeneous_and_subadditive(a in vec3(), b in vec3(), s in 0.01f64..10.0) {
            for set in sets() {
                let h = |d: &[f64]| set.support(d).unwrap().value.finite().unwrap();
                let sa: Vec<f64> = a.iter().map(|x| s * x).collect();
                let tol = 1e-10 * (1.0 + h(&a).abs() * s);
                prop_assert!((h(&sa) - s * h(&a)).abs() <= tol);
                let ab: Vec<f64> = a.iter().zip(&b).map(|(x, y)| x + y).collect();
                prop_assert!(h(&ab) <= h(&a) + h(&b) + 1e-10 * (1.0 + h(&a).abs() + h(&b).abs()));
            }
        }

        #[test]
        fn maximizer_is_member_and_attains(a in vec3()) {
            for set in sets() {
                let s = set.support(&a).unwrap();
                let w = s.maximizer.unwrap();
                let v = s.value.finite().unwrap();
                prop_assert!(set.distance_inf(&w).unwrap() <= 1e-9);
                prop_assert!((dot(&w, &a) - v).abs() <= 1e-9 * (1.0 + v.abs()));
                prop_assert_eq!(set.support_value(&a).unwrap().finite().map(|x| (x - v).abs() < 1e-9), Some(true));
            }
        }

        #[test]
        fn support_at_zero_is_zero(_x in 0u8..1) {
            for set in sets() {
                let s = set.support(&[0.0; 3]).unwrap();
                prop_assert_eq!(s.value, ExtReal::Finite(0.0));
                prop_assert!(set.distance_inf(&s.maximizer.unwrap()).unwrap() <= 1e-9);
            }
        }

        #[test]
        fn lp_value_dominates_feasible_points(a in vec3(), seed in 0u64..1000) {
            use rand::SeedableRng;
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            for set in sets() {
                let v = set.support(&a).unwrap().value.finite().unwrap();
                let w = set.sample(&mut rng).unwrap();
                prop_assert!(dot(&w, &a) <= v + 1e-9 * (1.0 + v.abs()));
            }
        }

        #[test]
        fn projection_idempotent_nonexpansive(p in vec3(), q in vec3()) {
            let b = &sets()[0];
            let pp = b.project(&p).unwrap();
            prop_assert_eq!(b.project(&pp).unwrap(), pp.clone());
            let pq = b.project(&q).unwrap();
            let d = |x: &[f64], y: &[f64]| x.iter().zip(y).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
            prop_assert!(d(&pp, &pq) <= d(&p, &q) + 1e-12);
        }
    }
}
