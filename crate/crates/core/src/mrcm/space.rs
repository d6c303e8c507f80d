//! Low-dimensional flux and pressure spaces on the skeleton.

use crate::error::{Error, Result};
use crate::grid::DomainDecomposition;

/// Shape of the functions spanning one interface space.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SpaceKind {
    /// Piecewise constants on `parts` equal segments of every interface.
    Constant { parts: usize },
    /// Piecewise constants on segments of `edges` fine edges (`edges = 1` is H̄ = h).
    Segments { edges: usize },
    /// Constant plus a zero-mean linear function per interface.
    Linear,
}

impl SpaceKind {
    fn functions(self, n: usize) -> Result<Vec<Vec<f64>>> {
        let segments = |len: usize| -> Vec<Vec<f64>> {
            (0..n / len)
                .map(|s| (0..n).map(|e| if e / len == s { 1.0 } else { 0.0 }).collect())
                .collect()
        };
        match self {
            SpaceKind::Constant { parts } => {
                if parts == 0 || n % parts != 0 {
                    return Err(Error::Config(format!("an interface of {n} edges cannot be split into {parts} parts")));
                }
                Ok(segments(n / parts))
            }
            SpaceKind::Segments { edges } => {
                if edges == 0 || n % edges != 0 {
                    return Err(Error::Config(format!("segments of {edges} edges do not tile an interface of {n} edges")));
                }
                Ok(segments(edges))
            }
            SpaceKind::Linear => {
                let xi = (0..n).map(|e| 2.0 * (e as f64 + 0.5) / n as f64 - 1.0).collect();
                Ok(vec![vec![1.0; n], xi])
            }
        }
    }
}

/// One basis function: values on the fine edges of a single interface.
#[derive(Clone, Debug, PartialEq)]
pub struct InterfaceFunction {
    pub interface: usize,
    pub values: Vec<f64>,
}

/// Flux space `U_H` and pressure space `P_H`. Unknowns are numbered with all
/// flux functions first, then all pressure functions, each grouped by interface.
#[derive(Clone, Debug, PartialEq)]
pub struct InterfaceSpace {
    pub flux_kind: SpaceKind,
    pub pressure_kind: SpaceKind,
    pub flux: Vec<InterfaceFunction>,
    pub pressure: Vec<InterfaceFunction>,
    /// Indices into `flux` / `pressure` for each interface.
    pub flux_on: Vec<Vec<usize>>,
    pub pressure_on: Vec<Vec<usize>>,
}

impl InterfaceSpace {
    pub fn new(dd: &DomainDecomposition, flux_kind: SpaceKind, pressure_kind: SpaceKind) -> Result<Self> {
        let build = |kind: SpaceKind| -> Result<(Vec<InterfaceFunction>, Vec<Vec<usize>>)> {
            let mut all = Vec::new();
            let mut on = Vec::with_capacity(dd.num_interfaces());
            for iface in &dd.interfaces {
                let fs = kind.functions(iface.num_edges())?;
                on.push((all.len()..all.len() + fs.len()).collect());
                all.extend(fs.into_iter().map(|values| InterfaceFunction { interface: iface.id, values }));
            }
            Ok((all, on))
        };
        let (flux, flux_on) = build(flux_kind)?;
        let (pressure, pressure_on) = build(pressure_kind)?;
        Ok(Self { flux_kind, pressure_kind, flux, pressure, flux_on, pressure_on })
    }

    /// Same kind for flux and pressure.
    pub fn uniform(dd: &DomainDecomposition, kind: SpaceKind) -> Result<Self> {
        Self::new(dd, kind, kind)
    }

    /// `N_U`.
    pub fn num_flux(&self) -> usize {
        self.flux.len()
    }

    /// `N_P`.
    pub fn num_pressure(&self) -> usize {
        self.pressure.len()
    }

    pub fn num_dofs(&self) -> usize {
        self.num_flux() + self.num_pressure()
    }

    /// Global unknown indices of the functions living on interface `i`.
    pub fn dofs_on(&self, i: usize) -> impl Iterator<Item = usize> + '_ {
        let nu = self.num_flux();
        self.flux_on[i].iter().copied().chain(self.pressure_on[i].iter().map(move |k| nu + k))
    }

    /// The function behind a global unknown and whether it is a flux function.
    pub fn function(&self, dof: usize) -> (&InterfaceFunction, bool) {
        let nu = self.num_flux();
        if dof < nu {
            (&self.flux[dof], true)
        } else {
            (&self.pressure[dof - nu], false)
        }
    }

    /// Evaluate `sum_l c_l phi_l` on the skeleton edges from flux coefficients.
    pub fn flux_on_skeleton(&self, dd: &DomainDecomposition, coeffs: &[f64]) -> Vec<f64> {
        combine(dd, &self.flux, coeffs)
    }

    pub fn pressure_on_skeleton(&self, dd: &DomainDecomposition, coeffs: &[f64]) -> Vec<f64> {
        combine(dd, &self.pressure, coeffs)
    }
}

fn combine(dd: &DomainDecomposition, fs: &[InterfaceFunction], coeffs: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; dd.num_skeleton_edges()];
    for (f, c) in fs.iter().zip(coeffs) {
        let off = dd.interfaces[f.interface].skeleton_offset;
        for (e, v) in f.values.iter().enumerate() {
            out[off + e] += c * v;
        }
    }
    out
}
