//! Water injected into a one-dimensional channel at unit velocity: the upwind
//! front against the analytic shock speed.
//!
//! cargo run --release --example buckley_leverett_transport -- [cells] [M]

use mrcmflow::grid::{CellField, FaceField, StructuredGrid2D};
use mrcmflow::transport::{advance, cfl_timestep, FluidModel};

fn main() -> mrcmflow::Result<()> {
    let mut args = std::env::args().skip(1);
    let n: usize = args.next().map(|a| a.parse().expect("cell count")).unwrap_or(400);
    let m: f64 = args.next().map(|a| a.parse().expect("viscosity ratio")).unwrap_or(1.0);

    let grid = StructuredGrid2D::new(n, 1, 1.0, 1.0 / n as f64)?;
    let model = FluidModel::new(m)?;
    let u = FaceField::from_velocity(grid, |_, _| (1.0, 0.0));
    let dt = cfl_timestep(&u, &model, 0.9, 1.0);

    // Shock saturation from the tangent construction f(s*) = s* f'(s*).
    let (mut lo, mut hi) = (1e-6, 1.0);
    for _ in 0..100 {
        let mid = 0.5 * (lo + hi);
        if model.fractional_flow(mid) > mid * model.fractional_flow_derivative(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    let s_star = 0.5 * (lo + hi);
    let speed = model.fractional_flow(s_star) / s_star;
    println!("shock saturation {s_star:.4}, shock speed {speed:.4}");

    let mut s = CellField::zeros(grid);
    let mut t = 0.0;
    println!("{:>8} {:>10} {:>10} {:>12}", "time", "front", "analytic", "water in");
    let mut injected = 0.0;
    for _ in 0..5 {
        let steps = (0.15 / speed / dt).round() as usize;
        injected += advance(&mut s, &u, dt, steps, &model, 1.0)?.water_in;
        t += steps as f64 * dt;
        let front = s.values.iter().position(|&v| v < 0.5 * s_star).unwrap_or(n);
        println!("{t:>8.4} {:>10.4} {:>10.4} {injected:>12.4e}", (front as f64) / n as f64, speed * t);
    }
    Ok(())
}
