//! Verify a certificate, then try random admissible controls against it.

use parabolic_dfi::prelude::*;

fn main() -> Result<()> {
    let spec = GridSpec::unit_square(5, 0.02, 0.1, 1)?;
    let map = InclusionMap::linear_control(Matrix::scalar(0.0), Matrix::scalar(1.0), ConvexSet::cube(1, -1.0, 1.0)?)?;
    let problem = Problem::new(map, Objective::linear(vec![1.0]), BoundaryData::zero(&spec))?;
    let sol = solve_frank_wolfe(&problem, 100, 1e-12)?;
    let cert = Certificate::new(sol.state.clone(), sol.adjoint.clone().expect("adjoint"), None, 1.0, Tolerances::default())?;
    println!("{}", verify(&problem, &cert, Some(&sol.control))?);
    println!("{}", sufficiency_sampling(&problem, &cert, 200, DEFAULT_SEED, 1e-9)?);

    // A wrong candidate: the zero control. Its own adjoint fails the argmax test.
    let u0 = problem.simulate(&ControlField::zeros(&spec, 1))?;
    let ustar0 = adjoint_for(&problem.map, &problem.objective, &u0)?;
    let bad = Certificate::new(u0, ustar0, None, 1.0, Tolerances::default())?;
    let report = verify(&problem, &bad, None)?;
    println!("zero control certified: {}", report.pass);
    Ok(())
}
