//! Reuse of a stored basis for a perturbed conductivity.
//!
//! With the basis built for `kappa_m` and its pressure `p_m`, the pressure for
//! a new conductivity `kappa_n` is written as `p_m + dp`. Only the zeroth-order
//! correction is kept: it solves a problem with conductivity `kappa_m` whose
//! data absorb the flux `F = -kappa_n grad p_m`, so only particular local
//! problems and an interface solve with the stored factorization are needed.

use crate::elliptic::{darcy_velocity, DomainBoundary, LocalSolution, PhysicalCondition};
use crate::error::{Error, Result};
use crate::grid::{divergence, CellField, Side};
use crate::mrcm::{downscale, gather_pressure, skeleton_flux, BasisSet, MrcmSolution, SolveCounts};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum EpsilonNorm {
    /// `|kn - km|_2 / |km|_2`.
    #[default]
    Relative,
    /// `|kn - km|_2`.
    Absolute,
}

/// Area-weighted discrete L2 drift between two conductivities.
pub fn epsilon(kappa_n: &CellField, kappa_m: &CellField, norm: EpsilonNorm) -> f64 {
    let area = kappa_n.grid.cell_area();
    let diff: f64 = kappa_n
        .values
        .iter()
        .zip(&kappa_m.values)
        .map(|(a, b)| (a - b).powi(2) * area)
        .sum::<f64>()
        .sqrt();
    match norm {
        EpsilonNorm::Absolute => diff,
        EpsilonNorm::Relative => {
            let base = kappa_m.values.iter().map(|v| v * v * area).sum::<f64>().sqrt();
            diff / base
        }
    }
}

/// Stored basis and the pressure it produced.
#[derive(Debug)]
pub struct PerturbationState {
    pub basis: BasisSet,
    /// Local solutions of the solve that built the basis (`p_m` and its face pressures).
    pub reference: Vec<LocalSolution>,
    pub eta: f64,
    pub norm: EpsilonNorm,
}

impl PerturbationState {
    pub fn new(basis: BasisSet, solution: &MrcmSolution, eta: f64, norm: EpsilonNorm) -> Self {
        Self {
            basis,
            reference: solution.local.clone(),
            eta,
            norm,
        }
    }

    pub fn kappa_m(&self) -> &CellField {
        self.basis.kappa()
    }

    pub fn epsilon(&self, kappa_n: &CellField) -> f64 {
        epsilon(kappa_n, self.kappa_m(), self.norm)
    }

    /// Rebuild rule: strictly greater than the tolerance.
    pub fn needs_update(&self, kappa_n: &CellField) -> bool {
        self.epsilon(kappa_n) > self.eta
    }

    pub fn update(&self, kappa_n: &CellField, q: &CellField, boundary: &DomainBoundary) -> Result<MrcmSolution> {
        mpm_pressure_update(self, kappa_n, q, boundary)
    }
}

/// One reuse step: returns the conservative velocity for `kappa_n` and the
/// local solutions `p_m + dp`, `F + u_hat`.
pub fn mpm_pressure_update(
    state: &PerturbationState,
    kappa_n: &CellField,
    q: &CellField,
    boundary: &DomainBoundary,
) -> Result<MrcmSolution> {
    let basis = &state.basis;
    let dd = basis.decomposition();
    let grid = dd.grid;
    if kappa_n.grid != grid {
        return Err(Error::BasisMismatch("conductivity grid differs from the basis grid".into()));
    }
    if let Some(c) = kappa_n.values.iter().position(|k| !(*k > 0.0) || !k.is_finite()) {
        return Err(Error::Config(format!("conductivity must be positive, cell {c} has {}", kappa_n.values[c])));
    }

    // F per subdomain from the stored cell and face pressures.
    let flux: Vec<_> = dd
        .subdomains
        .iter()
        .zip(&state.reference)
        .map(|(sub, r)| darcy_velocity(&kappa_n.restrict(&sub.block), &r.p, &r.face_pressure))
        .collect();

    let mut q_mod = q.clone();
    let mut bc_mod = boundary.clone();
    for (sub, (f, r)) in dd.subdomains.iter().zip(flux.iter().zip(&state.reference)) {
        let div = divergence(f);
        for (lc, &c) in sub.block.cells(&grid).iter().enumerate() {
            q_mod.values[c] -= div.values[lc];
        }
        for side in Side::ALL {
            if sub.interface(side).is_some() {
                continue;
            }
            let out: Vec<f64> = f
                .grid
                .boundary_faces(side)
                .into_iter()
                .map(|lf| side.outward_sign() * f.values[lf])
                .collect();
            let offset = if side.is_vertical() { sub.block.j0 } else { sub.block.i0 };
            let conds = &mut bc_mod.sides[side.index()];
            for k in 0..out.len() {
                conds[offset + k] = match conds[offset + k] {
                    PhysicalCondition::Pressure(g) => PhysicalCondition::Pressure(g - r.face_pressure[side.index()][k]),
                    PhysicalCondition::Flux(z) => PhysicalCondition::Flux(z - out[k]),
                };
            }
        }
    }

    let particular = basis.particular(&q_mod, &bc_mod)?;
    let coefficients = basis.solve_interface(&particular)?;
    let hat = basis.reconstruct(&coefficients, &particular);

    let local: Vec<LocalSolution> = hat
        .into_iter()
        .zip(flux)
        .zip(&state.reference)
        .map(|((mut s, f), r)| {
            for (a, b) in s.u.values.iter_mut().zip(&f.values) {
                *a += b;
            }
            for (a, b) in s.p.values.iter_mut().zip(&r.p.values) {
                *a += b;
            }
            for (fa, fb) in s.face_pressure.iter_mut().zip(&r.face_pressure) {
                for (a, b) in fa.iter_mut().zip(fb) {
                    *a += b;
                }
            }
            s
        })
        .collect();

    let ubar = skeleton_flux(dd, &local, boundary);
    let reference_p = gather_pressure(dd, &local);
    let (fine, report) = downscale(dd, &ubar, kappa_n, q, boundary, &reference_p)?;
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
