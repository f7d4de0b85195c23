//! Hamiltonian, argmax and locally adjoint values of a polyhedral right-hand side,
//! plus the transformed stencil map for the same base map.

use parabolic_dfi::inclusion::StencilArgs;
use parabolic_dfi::prelude::*;

fn main() -> Result<()> {
    // F(u) = { v : -1 - u <= v <= 1 }.
    let map = InclusionMap::polyhedral(
        Matrix::from_rows(&[vec![0.0], vec![-1.0]])?,
        Matrix::from_rows(&[vec![-1.0], vec![1.0]])?,
        vec![1.0, 1.0],
    )?;
    let u = [0.5];
    for vstar in [[1.0], [-1.0], [0.0]] {
        let h = map.hamiltonian(&u, &vstar)?;
        let v = map.argmax_select(&u, &vstar)?;
        println!("v* = {:>4}  H = {:?}  argmax {:?}  LAM {:?}", vstar[0], h, v, map.lam(&vstar, &u, &v)?);
    }

    let g = GTransform::new(map, 0.25, 0.25, 0.01)?;
    let mut args = StencilArgs::zeros(1);
    args.center = vec![0.5];
    args.later = vec![0.3];
    println!("affine part {:?}", g.affine(&args));
    println!("G-Hamiltonian at v* = 1: {:?}", g.g_hamiltonian(&args, &[1.0])?);
    Ok(())
}
