//! Multiscale basis functions and the interface system.

use faer::linalg::solvers::{PartialPivLu, Solve};
use faer::Mat;
use rayon::prelude::*;

use super::robin::RobinParameter;
use super::space::InterfaceSpace;
use crate::elliptic::{DomainBoundary, FaceKind, LocalOperator, LocalSolution, PhysicalCondition};
use crate::error::{Error, Result};
use crate::grid::{CellField, DomainDecomposition, Side};

/// Pivot ratio below which the interface matrix is declared singular.
const SINGULAR_PIVOT_RATIO: f64 = 1e-13;

/// Homogeneous solutions of one subdomain and its factorized local operator.
#[derive(Clone, Debug)]
pub struct SubdomainBasis {
    pub operator: LocalOperator,
    /// Interface unknown driving each entry of `solutions`.
    pub dofs: Vec<usize>,
    pub solutions: Vec<LocalSolution>,
}

/// Interface coefficients `U_l` and `P_l`.
#[derive(Clone, Debug, PartialEq)]
pub struct InterfaceSolution {
    pub flux: Vec<f64>,
    pub pressure: Vec<f64>,
}

impl InterfaceSolution {
    fn from_vec(v: &[f64], nu: usize) -> Self {
        Self {
            flux: v[..nu].to_vec(),
            pressure: v[nu..].to_vec(),
        }
    }

    pub fn get(&self, dof: usize) -> f64 {
        let nu = self.flux.len();
        if dof < nu {
            self.flux[dof]
        } else {
            self.pressure[dof - nu]
        }
    }
}

/// Everything computed once per conductivity snapshot and reused afterwards.
#[derive(Debug)]
pub struct BasisSet {
    dd: DomainDecomposition,
    space: InterfaceSpace,
    robin: RobinParameter,
    kappa: CellField,
    /// Pressure (true) / flux (false) pattern of the physical boundary.
    pressure_faces: [Vec<bool>; 4],
    local: Vec<SubdomainBasis>,
    matrix: Mat<f64>,
    lu: Option<PartialPivLu<f64>>,
}

fn pressure_pattern(boundary: &DomainBoundary) -> [Vec<bool>; 4] {
    boundary
        .sides
        .clone()
        .map(|v| v.iter().map(|c| matches!(c, PhysicalCondition::Pressure(_))).collect())
}

/// Face kinds of the local problem on subdomain `s`.
fn local_kinds(dd: &DomainDecomposition, robin: &RobinParameter, boundary: &DomainBoundary, s: usize) -> [Vec<FaceKind>; 4] {
    let sub = &dd.subdomains[s];
    Side::ALL.map(|side| match sub.interface(side) {
        Some(i) => {
            let iface = &dd.interfaces[i];
            let minus = iface.minus == s;
            (0..iface.num_edges())
                .map(|k| FaceKind::Robin { beta: robin.beta(iface.skeleton_offset + k, minus) })
                .collect()
        }
        None => boundary
            .block_side(&sub.block, side)
            .iter()
            .map(|c| match c {
                PhysicalCondition::Pressure(_) => FaceKind::Pressure,
                PhysicalCondition::Flux(_) => FaceKind::Flux,
            })
            .collect(),
    })
}

fn zero_values(kinds: &[Vec<FaceKind>; 4]) -> [Vec<f64>; 4] {
    kinds.clone().map(|v| vec![0.0; v.len()])
}

impl BasisSet {
    /// Factorize every local operator, solve all homogeneous problems and
    /// assemble and factorize the interface matrix.
    pub fn build(
        kappa: &CellField,
        dd: &DomainDecomposition,
        space: InterfaceSpace,
        robin: RobinParameter,
        boundary: &DomainBoundary,
    ) -> Result<Self> {
        if kappa.grid != dd.grid || boundary.grid != dd.grid {
            return Err(Error::Config("conductivity, boundary and decomposition use different grids".into()));
        }
        let nu = space.num_flux();
        let local = (0..dd.num_subdomains())
            .into_par_iter()
            .map(|s| -> Result<SubdomainBasis> {
                let sub = &dd.subdomains[s];
                let lg = sub.block.local_grid(&dd.grid);
                let kinds = local_kinds(dd, &robin, boundary, s);
                let anchor = kinds.iter().flatten().all(|k| *k == FaceKind::Flux).then_some(0);
                let operator = LocalOperator::new(lg, &kappa.restrict(&sub.block), kinds, anchor)?;
                let zero_q = vec![0.0; lg.num_cells()];
                let mut dofs = Vec::new();
                let mut solutions = Vec::new();
                for side in Side::ALL {
                    let Some(i) = sub.interface(side) else { continue };
                    let iface = &dd.interfaces[i];
                    let sigma = iface.normal_sign(s);
                    let minus = iface.minus == s;
                    for dof in space.dofs_on(i) {
                        let (f, is_flux) = space.function(dof);
                        let mut values = zero_values(operator.kinds());
                        for (k, v) in values[side.index()].iter_mut().enumerate() {
                            let e = iface.skeleton_offset + k;
                            *v = if is_flux { -robin.beta(e, minus) * f.values[k] * sigma } else { f.values[k] };
                        }
                        solutions.push(operator.solve(&zero_q, &values)?);
                        dofs.push(dof);
                    }
                }
                debug_assert!(dofs.iter().all(|&d| d < nu + space.num_pressure()));
                Ok(SubdomainBasis { operator, dofs, solutions })
            })
            .collect::<Result<Vec<_>>>()?;

        let mut set = Self {
            dd: dd.clone(),
            space,
            robin,
            kappa: kappa.clone(),
            pressure_faces: pressure_pattern(boundary),
            local,
            matrix: Mat::zeros(0, 0),
            lu: None,
        };
        set.matrix = set.assemble_matrix();
        set.lu = set.factorize()?;
        Ok(set)
    }

    pub fn decomposition(&self) -> &DomainDecomposition {
        &self.dd
    }

    pub fn space(&self) -> &InterfaceSpace {
        &self.space
    }

    pub fn robin(&self) -> &RobinParameter {
        &self.robin
    }

    /// The conductivity snapshot the basis was built from.
    pub fn kappa(&self) -> &CellField {
        &self.kappa
    }

    pub fn local(&self) -> &[SubdomainBasis] {
        &self.local
    }

    pub fn interface_matrix(&self) -> &Mat<f64> {
        &self.matrix
    }

    /// Total homogeneous solutions computed (`N̂`).
    pub fn num_homogeneous(&self) -> usize {
        self.local.iter().map(|l| l.solutions.len()).sum()
    }

    /// Add the contribution of one local solution with coefficient `w` to
    /// the interface equations, tested against all functions on the interfaces of `s`.
    fn test_traces(&self, s: usize, sol: &LocalSolution, w: f64, mut add: impl FnMut(usize, f64)) {
        let nu = self.space.num_flux();
        let sub = &self.dd.subdomains[s];
        for side in Side::ALL {
            let Some(i) = sub.interface(side) else { continue };
            let iface = &self.dd.interfaces[i];
            let sigma = iface.normal_sign(s);
            let minus = iface.minus == s;
            let len = iface.face_length;
            let trace = sol.outward_flux(side);
            for &k in &self.space.pressure_on[i] {
                let psi = &self.space.pressure[k].values;
                let v: f64 = trace.iter().zip(psi).map(|(t, p)| t * p).sum();
                add(nu + k, w * v * len);
            }
            for &k in &self.space.flux_on[i] {
                let phi = &self.space.flux[k].values;
                let v: f64 = (0..trace.len())
                    .map(|e| self.robin.beta(iface.skeleton_offset + e, minus) * trace[e] * phi[e])
                    .sum();
                add(k, w * v * sigma * len);
            }
        }
    }

    /// Rows: flux test functions (Robin-weighted flux condition) then pressure
    /// test functions (flux balance). Columns: `[U; P]`.
    fn assemble_matrix(&self) -> Mat<f64> {
        let n = self.space.num_dofs();
        let mut a = Mat::<f64>::zeros(n, n);
        for (s, basis) in self.local.iter().enumerate() {
            for (&col, sol) in basis.dofs.iter().zip(&basis.solutions) {
                self.test_traces(s, sol, 1.0, |row, v| a[(row, col)] += v);
            }
        }
        // -sum_i beta_i U_H phi (n.n_i)^2 on both sides of every interface.
        for (i, iface) in self.dd.interfaces.iter().enumerate() {
            for &l in &self.space.flux_on[i] {
                for &k in &self.space.flux_on[i] {
                    let (pl, pk) = (&self.space.flux[l].values, &self.space.flux[k].values);
                    let v: f64 = (0..iface.num_edges())
                        .map(|e| {
                            let g = iface.skeleton_offset + e;
                            (self.robin.beta_minus[g] + self.robin.beta_plus[g]) * pl[e] * pk[e]
                        })
                        .sum();
                    a[(k, l)] -= v * iface.face_length;
                }
            }
        }
        a
    }

    fn factorize(&self) -> Result<Option<PartialPivLu<f64>>> {
        let n = self.matrix.nrows();
        if n == 0 {
            return Ok(None);
        }
        let lu = self.matrix.partial_piv_lu();
        let u = lu.U();
        let diag: Vec<f64> = (0..n).map(|i| u[(i, i)].abs()).collect();
        let max = diag.iter().cloned().fold(0.0, f64::max);
        let min = diag.iter().cloned().fold(f64::INFINITY, f64::min);
        let ratio = if max > 0.0 { min / max } else { 0.0 };
        if !(ratio > SINGULAR_PIVOT_RATIO) {
            let near_null = match self.matrix.svd() {
                Ok(svd) => {
                    let v = svd.V();
                    (0..n).map(|i| v[(i, n - 1)]).collect()
                }
                Err(_) => Vec::new(),
            };
            return Err(Error::SingularInterface { pivot_ratio: ratio, near_null });
        }
        Ok(Some(lu))
    }

    fn check_boundary(&self, boundary: &DomainBoundary) -> Result<()> {
        if boundary.grid != self.dd.grid || pressure_pattern(boundary) != self.pressure_faces {
            return Err(Error::BasisMismatch("physical boundary condition types differ".into()));
        }
        Ok(())
    }

    /// One particular solve per subdomain: physical data, zero Robin data.
    pub fn particular(&self, q: &CellField, boundary: &DomainBoundary) -> Result<Vec<LocalSolution>> {
        self.check_boundary(boundary)?;
        if q.grid != self.dd.grid {
            return Err(Error::BasisMismatch("source grid differs".into()));
        }
        (0..self.dd.num_subdomains())
            .into_par_iter()
            .map(|s| {
                let sub = &self.dd.subdomains[s];
                let op = &self.local[s].operator;
                let mut values = zero_values(op.kinds());
                for side in Side::ALL {
                    if sub.interface(side).is_none() {
                        let data = boundary.block_side(&sub.block, side);
                        for (v, c) in values[side.index()].iter_mut().zip(data) {
                            *v = match *c {
                                PhysicalCondition::Pressure(g) => g,
                                PhysicalCondition::Flux(z) => z,
                            };
                        }
                    }
                }
                op.solve(&q.restrict(&sub.block), &values)
            })
            .collect()
    }

    /// Interface system right-hand side from the particular solutions.
    pub fn interface_rhs(&self, particular: &[LocalSolution]) -> Vec<f64> {
        let mut b = vec![0.0; self.space.num_dofs()];
        for (s, sol) in particular.iter().enumerate() {
            self.test_traces(s, sol, -1.0, |row, v| b[row] += v);
        }
        b
    }

    pub fn solve_interface(&self, particular: &[LocalSolution]) -> Result<InterfaceSolution> {
        let nu = self.space.num_flux();
        let Some(lu) = &self.lu else {
            return Ok(InterfaceSolution { flux: Vec::new(), pressure: Vec::new() });
        };
        let b = self.interface_rhs(particular);
        let rhs = Mat::<f64>::from_fn(b.len(), 1, |i, _| b[i]);
        let x = lu.solve(&rhs);
        let v: Vec<f64> = (0..b.len()).map(|i| x[(i, 0)]).collect();
        if v.iter().any(|x| !x.is_finite()) {
            return Err(Error::Singular("interface solve produced non-finite coefficients".into()));
        }
        Ok(InterfaceSolution::from_vec(&v, nu))
    }

    /// Relative residual `|A x - b|_inf / (|A|_inf |x|_inf + |b|_inf)`.
    pub fn interface_residual(&self, coeffs: &InterfaceSolution, particular: &[LocalSolution]) -> f64 {
        let b = self.interface_rhs(particular);
        let n = b.len();
        let x: Vec<f64> = (0..n).map(|i| coeffs.get(i)).collect();
        let mut worst: f64 = 0.0;
        let mut anorm: f64 = 0.0;
        for r in 0..n {
            let mut ax = 0.0;
            let mut row = 0.0;
            for c in 0..n {
                ax += self.matrix[(r, c)] * x[c];
                row += self.matrix[(r, c)].abs();
            }
            worst = worst.max((ax - b[r]).abs());
            anorm = anorm.max(row);
        }
        let xn = x.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let bn = b.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let scale = anorm * xn + bn;
        if scale > 0.0 {
            worst / scale
        } else {
            0.0
        }
    }

    /// Local solutions `particular + sum_l c_l basis_l` for every subdomain.
    pub fn reconstruct(&self, coeffs: &InterfaceSolution, particular: &[LocalSolution]) -> Vec<LocalSolution> {
        particular
            .par_iter()
            .zip(&self.local)
            .map(|(part, basis)| {
                let mut sol = part.clone();
                for (&dof, h) in basis.dofs.iter().zip(&basis.solutions) {
                    let c = coeffs.get(dof);
                    if c != 0.0 {
                        sol.add_scaled(c, h);
                    }
                }
                sol
            })
            .collect()
    }
}
