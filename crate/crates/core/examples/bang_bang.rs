//! Minimize the integral of u with |w| <= 1: the optimal control is w = -1 wherever the adjoint is nonzero.

use parabolic_dfi::prelude::*;

fn main() -> Result<()> {
    let spec = GridSpec::unit_square(11, 0.002, 1.0, 1)?;
    let map = InclusionMap::linear_control(Matrix::scalar(0.0), Matrix::scalar(1.0), ConvexSet::cube(1, -1.0, 1.0)?)?;
    let problem = Problem::new(map, Objective::linear(vec![1.0]), BoundaryData::zero(&spec))?;
    let sol = solve_frank_wolfe(&problem, 100, 1e-10)?;
    println!("{sol}");
    let minus = sol.control.points().filter(|&p| sol.control.get(p)[0] == -1.0).count();
    println!("{minus} of {} control nodes at -1", sol.control.points().count());

    let ustar = sol.adjoint.clone().expect("linear-control solve returns the adjoint");
    let cert = Certificate::new(sol.state.clone(), ustar, None, 1.0, Tolerances::default())?;
    println!("{}", verify(&problem, &cert, Some(&sol.control))?);
    Ok(())
}
