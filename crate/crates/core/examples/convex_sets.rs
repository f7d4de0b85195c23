//! Support functions of the three kinds of convex set.

use parabolic_dfi::prelude::*;

fn main() -> Result<()> {
    let square = ConvexSet::cube(2, -1.0, 1.0)?;
    // Triangle x >= 0, y >= 0, x + y <= 1.
    let triangle = ConvexSet::polytope(Matrix::from_rows(&[vec![-1.0, 0.0], vec![0.0, -1.0], vec![1.0, 1.0]])?, vec![0.0, 0.0, 1.0])?;
    let points = ConvexSet::finite_set(vec![vec![0.0, 2.0], vec![1.0, -1.0], vec![-3.0, 0.5]])?;
    let halfplane = ConvexSet::polytope(Matrix::from_rows(&[vec![1.0, 0.0]])?, vec![0.0])?;

    for dir in [[1.0, 0.0], [1.0, 1.0], [-1.0, 0.5]] {
        println!("direction {dir:?}");
        for (name, set) in [("square", &square), ("triangle", &triangle), ("points", &points), ("halfplane", &halfplane)] {
            let s = set.support(&dir)?;
            println!("  {name:<9} value {:?}  maximizer {:?}", s.value, s.maximizer);
        }
    }
    println!("distance of (2, 2) to the triangle: {}", triangle.distance_inf(&[2.0, 2.0])?);
    Ok(())
}
