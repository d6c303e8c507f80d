//! Multiscale Robin coupled method.
//!
//! Each subdomain solves local problems with Robin conditions on the skeleton.
//! Interface unknowns (a flux `U_H` and a pressure `P_H` per interface function)
//! are found from a small global system that imposes weak continuity of flux
//! and pressure, after which a conservative fine velocity is recovered by
//! downscaling.

mod basis;
mod downscale;
mod robin;
mod space;

pub use basis::{BasisSet, InterfaceSolution, SubdomainBasis};
pub use downscale::{
    downscale, gather_pressure, repair_compatibility, skeleton_flux, DownscaleReport, FineSolution, REPAIR_WARNING,
};
pub use robin::{compute_beta, percentile, AlphaMode, RobinParameter};
pub use space::{InterfaceFunction, InterfaceSpace, SpaceKind};

use std::ops::AddAssign;

use crate::elliptic::{DomainBoundary, LocalSolution};
use crate::error::Result;
use crate::grid::{CellField, DomainDecomposition};

/// Number of local solves of each type.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct SolveCounts {
    pub homogeneous: usize,
    pub particular: usize,
    pub downscale: usize,
}

impl AddAssign for SolveCounts {
    fn add_assign(&mut self, o: Self) {
        self.homogeneous += o.homogeneous;
        self.particular += o.particular;
        self.downscale += o.downscale;
    }
}

/// Interface spaces and Robin parameter choice.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MrcmConfig {
    pub flux_space: SpaceKind,
    pub pressure_space: SpaceKind,
    pub alpha: AlphaMode,
}

impl Default for MrcmConfig {
    fn default() -> Self {
        Self {
            flux_space: SpaceKind::Constant { parts: 1 },
            pressure_space: SpaceKind::Constant { parts: 1 },
            alpha: AlphaMode::default(),
        }
    }
}

impl MrcmConfig {
    pub fn with_space(kind: SpaceKind) -> Self {
        Self {
            flux_space: kind,
            pressure_space: kind,
            ..Self::default()
        }
    }

    /// Build spaces, Robin parameter and basis for a conductivity.
    pub fn build_basis(&self, kappa: &CellField, dd: &DomainDecomposition, boundary: &DomainBoundary) -> Result<BasisSet> {
        let space = InterfaceSpace::new(dd, self.flux_space, self.pressure_space)?;
        let robin = compute_beta(kappa, dd, self.alpha);
        BasisSet::build(kappa, dd, space, robin, boundary)
    }
}

#[derive(Clone, Debug)]
pub struct MrcmSolution {
    pub coefficients: InterfaceSolution,
    /// Reconstructed local solutions (one-sided on the skeleton).
    pub local: Vec<LocalSolution>,
    /// Conservative fine solution after downscaling.
    pub fine: FineSolution,
    pub report: DownscaleReport,
    pub counts: SolveCounts,
}

/// Particular solves, interface solve, reconstruction and downscaling with an
/// existing basis. `kappa` is the conductivity used for downscaling.
pub fn solve_with_basis(
    basis: &BasisSet,
    kappa: &CellField,
    q: &CellField,
    boundary: &DomainBoundary,
) -> Result<MrcmSolution> {
    let dd = basis.decomposition();
    let particular = basis.particular(q, boundary)?;
    let coefficients = basis.solve_interface(&particular)?;
    let local = basis.reconstruct(&coefficients, &particular);
    let ubar = skeleton_flux(dd, &local, boundary);
    let reference = gather_pressure(dd, &local);
    let (fine, report) = downscale(dd, &ubar, kappa, q, boundary, &reference)?;
    let n = dd.num_subdomains();
    Ok(MrcmSolution {
        coefficients,
        local,
        fine,
        report,
        counts: SolveCounts {
            homogeneous: 0,
            particular: n,
            downscale: n,
        },
    })
}

/// Full solve from scratch; also returns the basis for reuse.
pub fn mrcm_solve(
    kappa: &CellField,
    dd: &DomainDecomposition,
    config: &MrcmConfig,
    q: &CellField,
    boundary: &DomainBoundary,
) -> Result<(MrcmSolution, BasisSet)> {
    let basis = config.build_basis(kappa, dd, boundary)?;
    let mut sol = solve_with_basis(&basis, kappa, q, boundary)?;
    sol.counts.homogeneous = basis.num_homogeneous();
    Ok((sol, basis))
}

/// Largest weak-continuity residuals over all test functions:
/// flux jumps tested with `P_H` and pressure jumps tested with `U_H`, each
/// relative to the integral of the absolute one-sided values.
pub fn weak_continuity(dd: &DomainDecomposition, space: &InterfaceSpace, local: &[LocalSolution]) -> (f64, f64) {
    let mut flux_worst: f64 = 0.0;
    let mut pressure_worst: f64 = 0.0;
    for (i, iface) in dd.interfaces.iter().enumerate() {
        let minus = &local[iface.minus];
        let plus = &local[iface.plus];
        let (ms, ps) = (iface.minus_side(), iface.plus_side());
        // Traces in the interface normal direction.
        let um = minus.outward_flux(ms);
        let up: Vec<f64> = plus.outward_flux(ps).iter().map(|v| -v).collect();
        let pm = &minus.face_pressure[ms.index()];
        let pp = &plus.face_pressure[ps.index()];
        let test = |fs: &[usize], all: &[InterfaceFunction], a: &[f64], b: &[f64]| -> f64 {
            let mut worst: f64 = 0.0;
            for &k in fs {
                let f = &all[k].values;
                let jump: f64 = (0..f.len()).map(|e| (b[e] - a[e]) * f[e]).sum();
                let size: f64 = (0..f.len()).map(|e| (a[e].abs() + b[e].abs()) * f[e].abs()).sum();
                if size > 0.0 {
                    worst = worst.max(jump.abs() / size);
                }
            }
            worst
        };
        flux_worst = flux_worst.max(test(&space.pressure_on[i], &space.pressure, &um, &up));
        pressure_worst = pressure_worst.max(test(&space.flux_on[i], &space.flux, pm, pp));
    }
    (flux_worst, pressure_worst)
}
