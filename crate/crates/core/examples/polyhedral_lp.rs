//! Solve a state-constrained problem as one LP and check the multiplier certificate.

use parabolic_dfi::objective::AffinePiece;
use parabolic_dfi::prelude::*;

fn main() -> Result<()> {
    let spec = GridSpec::unit_square(4, 0.02, 0.1, 1)?;
    // F(u) = { v : u <= v <= 1 }.
    let map = InclusionMap::polyhedral(
        Matrix::from_rows(&[vec![0.0], vec![1.0]])?,
        Matrix::from_rows(&[vec![-1.0], vec![1.0]])?,
        vec![1.0, 0.0],
    )?;
    let objective = Objective::polyhedral_max(vec![
        AffinePiece { slope: vec![1.0], offset: -0.1 },
        AffinePiece { slope: vec![-1.0], offset: 0.1 },
    ])?;
    let problem = Problem::new(map, objective, BoundaryData::constant(&spec, &[0.3]))?;
    let sol = solve_polyhedral_lp(&problem)?;
    println!("{sol}");

    let cert = Certificate::new(
        sol.state.clone(),
        sol.adjoint.clone().expect("adjoint"),
        sol.multiplier.clone(),
        1.0,
        Tolerances::uniform(1e-8),
    )?;
    let report = verify(&problem, &cert, None)?;
    println!("{report}");
    print!("{}", report.records());
    Ok(())
}
