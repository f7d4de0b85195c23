//! Convex integrands `g(u, x, y, t)` and the Riemann-sum cost.

use crate::error::{Error, Result};
use crate::grid::{Field, GridPoint, GridSpec};
use crate::linalg::{dot, max_abs_diff, Matrix};
use crate::lp::{LpBuilder, LpOutcome, Relation, VarKind};

/// Pieces within this (relative) distance of the maximum count as active.
pub const ACTIVE_PIECE_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub enum Coefficients {
    Uniform(Vec<f64>),
    /// One vector per grid node.
    PerPoint(Field),
}

#[derive(Debug, Clone, PartialEq)]
pub struct AffinePiece {
    pub slope: Vec<f64>,
    pub offset: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Objective {
    /// `⟨c(x, y, t), u⟩`.
    Linear(Coefficients),
    /// `½ uᵀ Q u + ⟨c, u⟩` with `Q` symmetric positive semidefinite.
    Quadratic { q: Matrix, c: Vec<f64> },
    /// `maxᵢ ⟨aᵢ, u⟩ + bᵢ`.
    PolyhedralMax(Vec<AffinePiece>),
}

impl Objective {
    pub fn zero(n: usize) -> Self {
        Objective::Linear(Coefficients::Uniform(vec![0.0; n]))
    }

    pub fn linear(c: Vec<f64>) -> Self {
        Objective::Linear(Coefficients::Uniform(c))
    }

    pub fn linear_per_point(c: Field) -> Self {
        Objective::Linear(Coefficients::PerPoint(c))
    }

    pub fn quadratic(q: Matrix, c: Vec<f64>) -> Result<Self> {
        if q.rows() != c.len() || q.cols() != c.len() {
            return Err(Error::Shape(format!("Q is {}x{} but c has length {}", q.rows(), q.cols(), c.len())));
        }
        if !q.is_psd(1e-10) {
            return Err(Error::Invalid("Q must be symmetric positive semidefinite".into()));
        }
        Ok(Objective::Quadratic { q, c })
    }

    pub fn polyhedral_max(pieces: Vec<AffinePiece>) -> Result<Self> {
        let Some(first) = pieces.first() else {
            return Err(Error::Invalid("piecewise-affine objective needs at least one piece".into()));
        };
        if pieces.iter().any(|p| p.slope.len() != first.slope.len()) {
            return Err(Error::Shape("affine pieces differ in dimension".into()));
        }
        Ok(Objective::PolyhedralMax(pieces))
    }

    pub fn dim(&self) -> usize {
        match self {
            Objective::Linear(Coefficients::Uniform(c)) => c.len(),
            Objective::Linear(Coefficients::PerPoint(f)) => f.dim(),
            Objective::Quadratic { c, .. } => c.len(),
            Objective::PolyhedralMax(p) => p[0].slope.len(),
        }
    }

    /// Checks that the objective fits a grid with state dimension `spec.dim()`.
    pub fn check_grid(&self, spec: &GridSpec) -> Result<()> {
        if self.dim() != spec.dim() {
            return Err(Error::Shape(format!("objective dimension {} vs state dimension {}", self.dim(), spec.dim())));
        }
        if let Objective::Linear(Coefficients::PerPoint(f)) = self {
            if f.spec() != spec {
                return Err(Error::Shape("per-point cost table lives on a different grid".into()));
            }
        }
        Ok(())
    }

    fn coeffs(&self, p: GridPoint) -> &[f64] {
        match self {
            Objective::Linear(Coefficients::Uniform(c)) => c,
            Objective::Linear(Coefficients::PerPoint(f)) => f.get(p),
            _ => unreachable!("coefficients of a non-linear objective"),
        }
    }

    pub fn is_smooth(&self) -> bool {
        !matches!(self, Objective::PolyhedralMax(_))
    }

    pub fn value_at(&self, p: GridPoint, u: &[f64]) -> f64 {
        match self {
            Objective::Linear(_) => dot(self.coeffs(p), u),
            Objective::Quadratic { q, c } => 0.5 * dot(u, &q.mul_vec(u)) + dot(c, u),
            Objective::PolyhedralMax(pieces) => {
                pieces.iter().map(|pc| dot(&pc.slope, u) + pc.offset).fold(f64::NEG_INFINITY, f64::max)
            }
        }
    }

    fn active_pieces<'a>(pieces: &'a [AffinePiece], u: &[f64]) -> Vec<&'a AffinePiece> {
        let vals: Vec<f64> = pieces.iter().map(|pc| dot(&pc.slope, u) + pc.offset).collect();
        let top = vals.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let tol = ACTIVE_PIECE_TOL * (1.0 + top.abs());
        pieces.iter().zip(&vals).filter(|(_, v)| **v >= top - tol).map(|(pc, _)| pc).collect()
    }

    /// Gradient, or for piecewise-affine costs the slope of the first active piece.
    pub fn gradient_at(&self, p: GridPoint, u: &[f64]) -> Vec<f64> {
        match self {
            Objective::Linear(_) => self.coeffs(p).to_vec(),
            Objective::Quadratic { q, c } => q.mul_vec(u).iter().zip(c).map(|(a, b)| a + b).collect(),
            Objective::PolyhedralMax(pieces) => Self::active_pieces(pieces, u)[0].slope.clone(),
        }
    }

    /// Slopes spanning `∂g(u)` (one for smooth costs).
    pub fn subgradient_generators(&self, p: GridPoint, u: &[f64]) -> Vec<Vec<f64>> {
        match self {
            Objective::PolyhedralMax(pieces) => {
                Self::active_pieces(pieces, u).into_iter().map(|pc| pc.slope.clone()).collect()
            }
            _ => vec![self.gradient_at(p, u)],
        }
    }

    /// `∞`-norm distance from `s` to `∂g(u)`.
    pub fn subdiff_distance(&self, p: GridPoint, u: &[f64], s: &[f64]) -> Result<f64> {
        let gens = self.subgradient_generators(p, u);
        if gens.len() == 1 {
            return Ok(max_abs_diff(&gens[0], s));
        }
        let mut lp = LpBuilder::new();
        let weights = lp.add_vars(gens.len(), VarKind::NonNeg);
        let t = lp.add_var(VarKind::NonNeg, -1.0);
        lp.add_row(weights.iter().map(|&w| (w, 1.0)), Relation::Eq, 1.0);
        for k in 0..s.len() {
            let terms: Vec<(usize, f64)> = weights.iter().zip(&gens).map(|(&w, g)| (w, g[k])).collect();
            lp.add_row(terms.iter().copied().chain([(t, -1.0)]), Relation::Le, s[k]);
            lp.add_row(terms.iter().map(|(w, v)| (*w, -v)).chain([(t, -1.0)]), Relation::Le, -s[k]);
        }
        match lp.solve()? {
            LpOutcome::Optimal(sol) => Ok(sol.x[t].max(0.0)),
            _ => Err(Error::Conditioning("subdifferential distance program failed".into())),
        }
    }
}

/// True for nodes entering the cost: all nodes except the spatial corners
/// `(0, 0)` and `(L, S)` at every time level.
pub fn in_cost_sum(spec: &GridSpec, p: GridPoint) -> bool {
    !((p.ix == 0 && p.iy == 0) || (p.ix + 1 == spec.nx() && p.iy + 1 == spec.ny()))
}

/// `Σ δσh g(u(p), p)` over the nodes selected by [`in_cost_sum`], in
/// lexicographic `(t, y, x)` order.
pub fn objective_value(g: &Objective, u: &Field) -> Result<f64> {
    let spec = *u.spec();
    g.check_grid(&spec)?;
    let w = spec.cell_volume();
    Ok(spec.points().filter(|p| in_cost_sum(&spec, *p)).map(|p| w * g.value_at(p, u.get(p))).sum())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cube_count_and_value() {
        let spec = GridSpec::new(1.0, 1.0, 1.0, 0.5, 0.5, 0.5, 1).unwrap();
        let n = spec.points().filter(|p| in_cost_sum(&spec, *p)).count();
        // 27 nodes, minus the two corner columns over 3 levels.
        assert_eq!(n, 27 - 2 * 3);
        let u = Field::from_fn(&spec, 1, |_, _, _| vec![1.0]);
        assert_eq!(objective_value(&Objective::linear(vec![1.0]), &u).unwrap(), 0.125 * 21.0);
        assert_eq!(objective_value(&Objective::zero(1), &u).unwrap(), 0.0);
    }

    #[test]
    fn linear_cost_is_homogeneous() {
        let spec = GridSpec::unit_square(4, 0.1, 0.3, 1).unwrap();
        let u = Field::from_fn(&spec, 1, |x, y, t| vec![x - 2.0 * y + t * t]);
        let u3 = Field::from_fn(&spec, 1, |x, y, t| vec![3.0 * (x - 2.0 * y + t * t)]);
        let g = Objective::linear(vec![0.7]);
        let a = objective_value(&g, &u).unwrap();
        assert!((objective_value(&g, &u3).unwrap() - 3.0 * a).abs() < 1e-14);
    }

    #[test]
    fn quadratic_requires_psd() {
        assert!(Objective::quadratic(Matrix::scalar(-1.0), vec![0.0]).is_err());
        let g = Objective::quadratic(Matrix::scalar(2.0), vec![1.0]).unwrap();
        let p = GridPoint::new(0, 0, 0);
        assert_eq!(g.value_at(p, &[3.0]), 12.0);
        assert_eq!(g.gradient_at(p, &[3.0]), vec![7.0]);
    }

    #[test]
    fn max_of_pieces_subdifferential() {
        let g = Objective::polyhedral_max(vec![
            AffinePiece { slope: vec![1.0], offset: 0.0 },
            AffinePiece { slope: vec![-1.0], offset: 0.0 },
        ])
        .unwrap();
        let p = GridPoint::new(0, 0, 0);
        assert_eq!(g.value_at(p, &[-2.0]), 2.0);
        assert_eq!(g.subdiff_distance(p, &[0.0], &[0.3]).unwrap(), 0.0);
        assert!((g.subdiff_distance(p, &[0.0], &[1.5]).unwrap() - 0.5).abs() < 1e-12);
        assert!((g.subdiff_distance(p, &[1.0], &[0.3]).unwrap() - 0.7).abs() < 1e-12);
    }
}
