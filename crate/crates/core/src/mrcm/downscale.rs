//! Conservative fine velocity from skeleton fluxes.
//!
//! Skeleton fluxes are first made compatible with the sources of every
//! subdomain: each subdomain gets a potential `theta_i`, interface fluxes are
//! corrected by `theta_minus - theta_plus` and fluxes on prescribed-pressure
//! faces by `theta_i` outward. The potentials solve a small weighted graph
//! Laplacian. Local Neumann problems then produce the fine velocity.

use faer::linalg::solvers::Solve;
use faer::Mat;
use rayon::prelude::*;

use crate::elliptic::{DomainBoundary, FaceKind, LocalOperator, LocalSolution, PhysicalCondition};
use crate::error::Result;
use crate::grid::{CellField, DomainDecomposition, FaceField, Side};

/// Relative repair above which the interface solution is considered poor.
pub const REPAIR_WARNING: f64 = 0.1;

#[derive(Clone, Debug, PartialEq)]
pub struct FineSolution {
    pub p: CellField,
    pub u: FaceField,
}

#[derive(Clone, Debug, PartialEq)]
pub struct DownscaleReport {
    /// Integrated source minus outflow of each subdomain before repair.
    pub residuals: Vec<f64>,
    /// Largest velocity correction applied to any face.
    pub max_repair: f64,
    /// `max_repair` over the largest skeleton or boundary velocity.
    pub relative_repair: f64,
}

impl DownscaleReport {
    pub fn warning(&self) -> bool {
        self.relative_repair > REPAIR_WARNING
    }
}

/// Skeleton and boundary velocities from one-sided local solutions: the mean
/// of the two traces on interfaces, the local trace on prescribed-pressure
/// faces and the data on prescribed-flux faces. Other faces are zero.
pub fn skeleton_flux(dd: &DomainDecomposition, local: &[LocalSolution], boundary: &DomainBoundary) -> FaceField {
    let grid = &dd.grid;
    let mut u = FaceField::zeros(*grid);
    for sub in &dd.subdomains {
        let sol = &local[sub.id];
        for side in Side::ALL {
            let faces = sub.block.side_faces(grid, side);
            let lfaces = sol.u.grid.boundary_faces(side);
            match sub.interface(side) {
                Some(_) => {
                    for (&f, &lf) in faces.iter().zip(&lfaces) {
                        u.values[f] += 0.5 * sol.u.values[lf];
                    }
                }
                None => {
                    let data = boundary.block_side(&sub.block, side);
                    for ((&f, &lf), c) in faces.iter().zip(&lfaces).zip(data) {
                        u.values[f] = match *c {
                            PhysicalCondition::Flux(z) => side.outward_sign() * z,
                            PhysicalCondition::Pressure(_) => sol.u.values[lf],
                        };
                    }
                }
            }
        }
    }
    u
}

/// Per-subdomain mean of a cell field.
fn subdomain_means(dd: &DomainDecomposition, p: &CellField) -> Vec<f64> {
    dd.subdomains
        .iter()
        .map(|s| {
            let v = p.restrict(&s.block);
            v.iter().sum::<f64>() / v.len() as f64
        })
        .collect()
}

/// Repair `ubar` in place so every subdomain is compatible with `q`.
pub fn repair_compatibility(
    dd: &DomainDecomposition,
    ubar: &mut FaceField,
    q: &CellField,
    boundary: &DomainBoundary,
) -> DownscaleReport {
    let grid = &dd.grid;
    let n = dd.num_subdomains();
    let area = grid.cell_area();
    let residuals: Vec<f64> = dd
        .subdomains
        .iter()
        .map(|sub| {
            let source: f64 = q.restrict(&sub.block).iter().sum::<f64>() * area;
            let outflow: f64 = Side::ALL
                .iter()
                .flat_map(|&side| {
                    sub.block
                        .side_faces(grid, side)
                        .into_iter()
                        .map(move |f| (side, f))
                })
                .map(|(side, f)| side.outward_sign() * ubar.values[f] * grid.face_length(f))
                .sum();
            source - outflow
        })
        .collect();

    let mut ground = vec![0.0; n];
    for sub in &dd.subdomains {
        for side in Side::ALL {
            if sub.interface(side).is_some() {
                continue;
            }
            let len = if side.is_vertical() { grid.hy() } else { grid.hx() };
            for c in boundary.block_side(&sub.block, side) {
                if matches!(c, PhysicalCondition::Pressure(_)) {
                    ground[sub.id] += len;
                }
            }
        }
    }
    let mut lap = Mat::<f64>::zeros(n, n);
    for iface in &dd.interfaces {
        let (a, b, w) = (iface.minus, iface.plus, iface.length());
        lap[(a, a)] += w;
        lap[(b, b)] += w;
        lap[(a, b)] -= w;
        lap[(b, a)] -= w;
    }
    for s in 0..n {
        lap[(s, s)] += ground[s];
    }
    let mut rhs = residuals.clone();
    if ground.iter().all(|g| *g == 0.0) {
        let mean = rhs.iter().sum::<f64>() / n as f64;
        rhs.iter_mut().for_each(|r| *r -= mean);
        for c in 0..n {
            lap[(0, c)] = 0.0;
        }
        lap[(0, 0)] = 1.0;
        rhs[0] = 0.0;
    }
    let b = Mat::<f64>::from_fn(n, 1, |i, _| rhs[i]);
    let x = lap.partial_piv_lu().solve(&b);
    let theta: Vec<f64> = (0..n).map(|i| x[(i, 0)]).collect();

    let scale = ubar.max_abs();
    let mut max_repair: f64 = 0.0;
    for iface in &dd.interfaces {
        let d = theta[iface.minus] - theta[iface.plus];
        max_repair = max_repair.max(d.abs());
        for &f in &iface.faces {
            ubar.values[f] += d;
        }
    }
    for sub in &dd.subdomains {
        if ground[sub.id] == 0.0 {
            continue;
        }
        max_repair = max_repair.max(theta[sub.id].abs());
        for side in Side::ALL {
            if sub.interface(side).is_some() {
                continue;
            }
            let faces = sub.block.side_faces(grid, side);
            for (&f, c) in faces.iter().zip(boundary.block_side(&sub.block, side)) {
                if matches!(c, PhysicalCondition::Pressure(_)) {
                    ubar.values[f] += side.outward_sign() * theta[sub.id];
                }
            }
        }
    }
    DownscaleReport {
        residuals,
        max_repair,
        relative_repair: if scale > 0.0 { max_repair / scale } else { max_repair },
    }
}

/// Repair `ubar`, then solve the local Neumann problems with conductivity
/// `kappa`. Each subdomain's pressure is shifted to the mean of `reference_p`.
pub fn downscale(
    dd: &DomainDecomposition,
    ubar: &FaceField,
    kappa: &CellField,
    q: &CellField,
    boundary: &DomainBoundary,
    reference_p: &CellField,
) -> Result<(FineSolution, DownscaleReport)> {
    let grid = dd.grid;
    let mut ubar = ubar.clone();
    let report = repair_compatibility(dd, &mut ubar, q, boundary);
    let means = subdomain_means(dd, reference_p);
    let locals = dd
        .subdomains
        .par_iter()
        .map(|sub| -> Result<LocalSolution> {
            let lg = sub.block.local_grid(&grid);
            let kinds = Side::ALL.map(|side| vec![FaceKind::Flux; sub.block.side_len(side)]);
            let values = Side::ALL.map(|side| {
                sub.block
                    .side_faces(&grid, side)
                    .into_iter()
                    .map(|f| side.outward_sign() * ubar.values[f])
                    .collect()
            });
            let op = LocalOperator::new(lg, &kappa.restrict(&sub.block), kinds, Some(0))?;
            let mut sol = op.solve(&q.restrict(&sub.block), &values)?;
            let mean = sol.p.values.iter().sum::<f64>() / sol.p.len() as f64;
            let shift = means[sub.id] - mean;
            sol.p.values.iter_mut().for_each(|p| *p += shift);
            Ok(sol)
        })
        .collect::<Result<Vec<_>>>()?;

    let mut p = CellField::zeros(grid);
    let mut u = FaceField::zeros(grid);
    for (sub, sol) in dd.subdomains.iter().zip(&locals) {
        for (lc, &c) in sub.block.cells(&grid).iter().enumerate() {
            p.values[c] = sol.p.values[lc];
        }
        for (lf, v) in sol.u.values.iter().enumerate() {
            u.values[sub.block.global_face(&grid, lf)] = *v;
        }
    }
    Ok((FineSolution { p, u }, report))
}

/// Scatter per-subdomain cell values into one global field.
pub fn gather_pressure(dd: &DomainDecomposition, local: &[LocalSolution]) -> CellField {
    let mut p = CellField::zeros(dd.grid);
    for (sub, sol) in dd.subdomains.iter().zip(local) {
        for (lc, &c) in sub.block.cells(&dd.grid).iter().enumerate() {
            p.values[c] = sol.p.values[lc];
        }
    }
    p
}
