//! Basis reuse under a growing conductivity drift: the basis is built for a
//! water front at x = 0.2 and reused while the front advances in small moves.
//!
//! cargo run --release --example mpm_perturbation_step

use mrcmflow::elliptic::{solve_cell_centered, DomainBoundary};
use mrcmflow::fields::{generate_gaussian, GaussianFieldSpec};
use mrcmflow::grid::{CellField, DomainDecomposition, StructuredGrid2D};
use mrcmflow::metrics::relative_flux_error;
use mrcmflow::mpm::{EpsilonNorm, PerturbationState};
use mrcmflow::mrcm::{mrcm_solve, MrcmConfig};
use mrcmflow::transport::FluidModel;

fn main() -> mrcmflow::Result<()> {
    let grid = StructuredGrid2D::new(64, 64, 1.0, 1.0)?;
    let dd = DomainDecomposition::new(grid, 4, 4)?;
    let k = generate_gaussian(grid, &GaussianFieldSpec::new(2.5, 1))?;
    let fluid = FluidModel::new(40.0)?;
    let q = CellField::zeros(grid);
    let bc = DomainBoundary::pressure_drop(grid);
    let config = MrcmConfig::default();

    let front_at = |x0: f64| CellField::from_fn(grid, move |x, _| 0.5 * (1.0 - ((x - x0) / 0.02).tanh()));
    let built = fluid.conductivity(&front_at(0.2), &k);
    let (sol, basis) = mrcm_solve(&built, &dd, &config, &q, &bc)?;
    println!("initial build: {} homogeneous, {} particular local solves", sol.counts.homogeneous, sol.counts.particular);
    let state = PerturbationState::new(basis, &sol, 0.05, EpsilonNorm::Relative);

    println!("{:>6} {:>10} {:>8} {:>12} {:>12}", "front", "epsilon", "rebuild", "reuse err", "rebuild err");
    for step in 1..=10 {
        let front = 0.2 + 0.002 * step as f64;
        let kappa = fluid.conductivity(&front_at(front), &k);
        let fine = solve_cell_centered(&kappa, &q, &bc.to_spec(), None)?;
        let reused = state.update(&kappa, &q, &bc)?;
        let (fresh, _) = mrcm_solve(&kappa, &dd, &config, &q, &bc)?;
        println!(
            "{front:>6.4} {:>10.4} {:>8} {:>12.4e} {:>12.4e}",
            state.epsilon(&kappa),
            if state.needs_update(&kappa) { "yes" } else { "no" },
            relative_flux_error(&reused.fine.u, &fine.u),
            relative_flux_error(&fresh.fine.u, &fine.u)
        );
    }
    Ok(())
}
