//! March the scheme with a constant source and watch the center heat up.

use parabolic_dfi::prelude::*;

fn main() -> Result<()> {
    let spec = GridSpec::unit_square(11, 0.002, 0.2, 1)?;
    println!("grid {}x{}x{}  cfl margin {:.4}", spec.nx(), spec.ny(), spec.nt(), cfl_margin(&spec));
    let map = InclusionMap::linear_control(Matrix::scalar(0.0), Matrix::scalar(1.0), ConvexSet::cube(1, -1.0, 1.0)?)?;
    let w = ControlField::constant(&spec, &[1.0]);
    let sim = simulate(&map, &BoundaryData::zero(&spec), &w)?;
    for it in (0..spec.nt()).step_by(20) {
        println!("t = {:.3}  u(0.5, 0.5) = {:.6}", it as f64 * spec.dt(), sim.state.get(GridPoint::new(5, 5, it))[0]);
    }
    let report = check_feasible(&map, &BoundaryData::zero(&spec), &sim.state, 1e-12)?;
    println!("{report}");
    Ok(())
}
