//! Render a time slice of a simulated state as an SVG heatmap.

use parabolic_dfi::cli::{read_slice, render_svg};
use parabolic_dfi::prelude::*;

fn main() -> Result<()> {
    let spec = GridSpec::unit_square(21, 0.0005, 0.05, 1)?;
    let map = InclusionMap::linear_control(Matrix::scalar(0.0), Matrix::scalar(1.0), ConvexSet::cube(1, -1.0, 1.0)?)?;
    let w = ControlField::from_fn(&spec, 1, |p| vec![if p.ix < 10 { 1.0 } else { -1.0 }]);
    let sim = simulate(&map, &BoundaryData::zero(&spec), &w)?;
    let mut csv = Vec::new();
    sim.state.write_csv(&mut csv)?;
    let slice = read_slice(std::str::from_utf8(&csv).expect("utf8"), spec.nt() - 1, 0)?;
    let path = std::env::temp_dir().join("pdfi_heatmap.svg");
    std::fs::write(&path, render_svg(&slice))?;
    println!("wrote {}", path.display());
    Ok(())
}
