//! Fine-scale pressure solve on a Gaussian field under a left-to-right
//! pressure drop: effective permeability and local mass balance.
//!
//! cargo run --release --example fine_pressure_solve -- [cells]

use mrcmflow::elliptic::{solve_cell_centered, DomainBoundary};
use mrcmflow::fields::{generate_gaussian, GaussianFieldSpec};
use mrcmflow::grid::{conservation_residual, CellField, Side, StructuredGrid2D};

fn main() -> mrcmflow::Result<()> {
    let n = std::env::args().nth(1).map(|a| a.parse().expect("integer argument")).unwrap_or(64);
    let grid = StructuredGrid2D::new(n, n, 1.0, 1.0)?;
    let k = generate_gaussian(grid, &GaussianFieldSpec::new(2.5, 3))?;
    let q = CellField::zeros(grid);
    let bc = DomainBoundary::pressure_drop(grid);

    let start = std::time::Instant::now();
    let sol = solve_cell_centered(&k, &q, &bc.to_spec(), None)?;
    let elapsed = start.elapsed().as_secs_f64();

    let rate = |side: Side| -> f64 {
        grid.boundary_faces(side).iter().map(|&f| sol.u.values[f] * grid.face_length(f)).sum()
    };
    let (inflow, outflow) = (rate(Side::West), rate(Side::East));
    println!("{n}x{n} cells solved in {elapsed:.3} s");
    println!("pressure range [{:.4}, {:.4}]", sol.p.min(), sol.p.max());
    println!("flow in {inflow:.6e}, flow out {outflow:.6e}");
    // Unit pressure drop over a unit square: the rate is the effective permeability.
    let geo = (k.values.iter().map(|v| v.ln()).sum::<f64>() / k.len() as f64).exp();
    println!("effective permeability {outflow:.4e} (geometric mean {geo:.4e})");
    println!("largest scaled |div u - q| {:.2e}", conservation_residual(&sol.u, &q));
    Ok(())
}
