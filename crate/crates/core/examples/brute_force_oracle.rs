//! Exhaustive search over {-1, 0, 1} on a 3x3x3 grid, compared with Frank-Wolfe.

use parabolic_dfi::prelude::*;

fn main() -> Result<()> {
    let spec = GridSpec::unit_square(3, 0.05, 0.1, 1)?;
    let map = InclusionMap::linear_control(Matrix::scalar(0.5), Matrix::scalar(1.0), ConvexSet::cube(1, -1.0, 1.0)?)?;
    let problem = Problem::new(map, Objective::linear(vec![1.0]), BoundaryData::constant(&spec, &[0.2]))?;
    let alphabet = vec![vec![-1.0], vec![0.0], vec![1.0]];
    let oracle = brute_force(&problem, &alphabet)?;
    let fw = solve_frank_wolfe(&problem, 100, 1e-12)?;
    println!("enumeration: {:.16e} after {} assignments", oracle.objective, oracle.iterations);
    println!("frank-wolfe: {:.16e} after {} iterations", fw.objective, fw.iterations);
    println!("difference {:.3e}", (oracle.objective - fw.objective).abs());
    Ok(())
}
