//! Waterflood of a Gaussian slab up to breakthrough with a fine reference,
//! MRCM rebuilt every step and MPM-2P, each with one and two interface
//! segments per subdomain side.
//!
//! cargo run --release --example gaussian_slab_run -- [cells] [C_n] [seed]

use mrcmflow::elliptic::DomainBoundary;
use mrcmflow::fields::{generate_gaussian, GaussianFieldSpec};
use mrcmflow::grid::{DomainDecomposition, StructuredGrid2D};
use mrcmflow::mrcm::{MrcmConfig, SpaceKind};
use mrcmflow::simulation::{run_ensemble, Candidate, Method, PressureStep, Problem, SplittingConfig};
use mrcmflow::transport::FluidModel;

fn main() -> mrcmflow::Result<()> {
    let args: Vec<usize> = std::env::args().skip(1).map(|a| a.parse().expect("integer argument")).collect();
    let n = args.first().copied().unwrap_or(64);
    let c_n = args.get(1).copied().unwrap_or(1);
    let seed = args.get(2).copied().unwrap_or(1) as u64;

    let grid = StructuredGrid2D::new(n, n, 1.0, 1.0)?;
    let k = generate_gaussian(grid, &GaussianFieldSpec::new(2.5, seed))?;
    println!("contrast {:.3e}", k.max() / k.min());
    let problem = Problem::waterflood(k, FluidModel::new(40.0)?, DomainBoundary::pressure_drop(grid));
    let dd = DomainDecomposition::new(grid, 4, 4)?;
    let half = MrcmConfig::with_space(SpaceKind::Constant { parts: 2 });
    let candidates = [
        Candidate::fine(),
        Candidate::multiscale("mrcm H", Method::MrcmEveryStep, dd.clone(), MrcmConfig::default()),
        Candidate::multiscale("mrcm H/2", Method::MrcmEveryStep, dd.clone(), half),
        Candidate::multiscale("mpm H", Method::Mpm2p { eta: 0.01 }, dd.clone(), MrcmConfig::default()),
        Candidate::multiscale("mpm H/2", Method::Mpm2p { eta: 0.01 }, dd, half),
    ];
    let config = SplittingConfig { pressure: PressureStep::Substeps(c_n), ..Default::default() };
    let start = std::time::Instant::now();
    let records = run_ensemble(&problem, &candidates, &config)?;
    let last = records[0].steps.last().expect("at least one step");
    println!(
        "breakthrough at step {} (PVI {:.4}) after {:.1} s",
        last.step,
        last.pvi,
        start.elapsed().as_secs_f64()
    );
    println!("{:<10} {:>9} {:>11} {:>11} {:>11} {:>8}", "method", "rebuilds", "flux err", "sat err", "max flux", "RCR %");
    for r in &records[1..] {
        let end = r.steps.last().expect("at least one step");
        let worst = r.steps.iter().map(|s| s.flux_err).fold(0.0, f64::max);
        println!(
            "{:<10} {:>9} {:>11.4e} {:>11.4e} {:>11.4e} {:>8.2}",
            r.label,
            r.rebuilds(),
            end.flux_err,
            end.sat_err,
            worst,
            r.cost_model()?.rcr()
        );
    }
    Ok(())
}
