//! Compare the adjoint gradient with a central difference in one control entry.

use parabolic_dfi::prelude::*;

fn main() -> Result<()> {
    let spec = GridSpec::unit_square(5, 0.02, 0.1, 1)?;
    let map = InclusionMap::linear_control(Matrix::scalar(0.8), Matrix::scalar(1.5), ConvexSet::cube(1, -1.0, 1.0)?)?;
    let objective = Objective::quadratic(Matrix::scalar(1.0), vec![0.2])?;
    let boundary = BoundaryData::from_fn(&spec, |x, y, t| vec![0.3 + x * y - t]);
    let problem = Problem::new(map, objective, boundary)?;

    let w = ControlField::from_fn(&spec, 1, |p| vec![0.1 * (p.ix + p.iy) as f64 - 0.2 * p.it as f64]);
    let grad = adjoint_gradient(&problem, &w)?;
    let eps = 1e-6;
    for p in [GridPoint::new(1, 1, 0), GridPoint::new(2, 3, 2), GridPoint::new(3, 2, 3)] {
        let mut plus = w.clone();
        plus.get_mut(p)[0] += eps;
        let mut minus = w.clone();
        minus.get_mut(p)[0] -= eps;
        let fd = (problem.cost(&problem.simulate(&plus)?)? - problem.cost(&problem.simulate(&minus)?)?) / (2.0 * eps);
        println!("{p}  adjoint {:+.10e}  central {:+.10e}", grad.control.get(p)[0], fd);
    }
    Ok(())
}
