//! One multiscale solve on a Gaussian field for a range of interface spaces,
//! compared with the fine solution.
//!
//! cargo run --release --example mrcm_interface_solve -- [cells] [subdomains per side]

use mrcmflow::elliptic::{solve_cell_centered, DomainBoundary};
use mrcmflow::fields::{generate_gaussian, GaussianFieldSpec};
use mrcmflow::grid::{conservation_residual, CellField, DomainDecomposition, StructuredGrid2D};
use mrcmflow::metrics::{relative_cell_l2, relative_flux_error};
use mrcmflow::mrcm::{mrcm_solve, weak_continuity, AlphaMode, MrcmConfig, SpaceKind};

fn main() -> mrcmflow::Result<()> {
    let args: Vec<usize> = std::env::args().skip(1).map(|a| a.parse().expect("integer argument")).collect();
    let n = args.first().copied().unwrap_or(64);
    let s = args.get(1).copied().unwrap_or(4);

    let grid = StructuredGrid2D::new(n, n, 1.0, 1.0)?;
    let dd = DomainDecomposition::new(grid, s, s)?;
    let k = generate_gaussian(grid, &GaussianFieldSpec::new(2.5, 1))?;
    let q = CellField::zeros(grid);
    let bc = DomainBoundary::pressure_drop(grid);
    let fine = solve_cell_centered(&k, &q, &bc.to_spec(), None)?;

    let spaces = [
        ("constant H", SpaceKind::Constant { parts: 1 }),
        ("constant H/2", SpaceKind::Constant { parts: 2 }),
        ("constant H/4", SpaceKind::Constant { parts: 4 }),
        ("linear", SpaceKind::Linear),
        ("H = h", SpaceKind::Segments { edges: 1 }),
    ];
    println!(
        "{:<14} {:<9} {:>6} {:>10} {:>10} {:>10} {:>10}",
        "space", "alpha", "dofs", "flux err", "p err", "weak u", "div err"
    );
    for (name, kind) in spaces {
        for (alpha_name, alpha) in [("uniform", AlphaMode::default()), ("adaptive", AlphaMode::adaptive())] {
            let config = MrcmConfig { alpha, ..MrcmConfig::with_space(kind) };
            let (sol, basis) = mrcm_solve(&k, &dd, &config, &q, &bc)?;
            let (weak_u, _) = weak_continuity(&dd, basis.space(), &sol.local);
            println!(
                "{name:<14} {alpha_name:<9} {:>6} {:>10.3e} {:>10.3e} {:>10.1e} {:>10.1e}",
                basis.space().num_dofs(),
                relative_flux_error(&sol.fine.u, &fine.u),
                relative_cell_l2(&sol.fine.p, &fine.p),
                weak_u,
                conservation_residual(&sol.fine.u, &q)
            );
        }
    }
    Ok(())
}
