//! Saturation transport: quadratic relative permeabilities and an explicit
//! first-order upwind scheme.

use std::sync::atomic::{AtomicUsize, Ordering};

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::grid::{CellField, FaceField};

static CLAMPED: AtomicUsize = AtomicUsize::new(0);

/// Number of saturation values clamped into `[0, 1]` by the mobility functions.
pub fn clamped_evaluations() -> usize {
    CLAMPED.load(Ordering::Relaxed)
}

fn clamp(s: f64) -> f64 {
    if (0.0..=1.0).contains(&s) {
        s
    } else {
        CLAMPED.fetch_add(1, Ordering::Relaxed);
        s.clamp(0.0, 1.0)
    }
}

/// Oil/water pair with `mu_o = 1`, `mu_w = 1/M`, `k_rw = s^2`, `k_ro = (1-s)^2`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FluidModel {
    /// `mu_o / mu_w`.
    pub viscosity_ratio: f64,
}

impl FluidModel {
    pub fn new(viscosity_ratio: f64) -> Result<Self> {
        if !(viscosity_ratio > 0.0) || !viscosity_ratio.is_finite() {
            return Err(Error::Config(format!("viscosity ratio must be positive, got {viscosity_ratio}")));
        }
        Ok(Self { viscosity_ratio })
    }

    pub fn total_mobility(&self, s: f64) -> f64 {
        let s = clamp(s);
        self.viscosity_ratio * s * s + (1.0 - s) * (1.0 - s)
    }

    pub fn fractional_flow(&self, s: f64) -> f64 {
        let s = clamp(s);
        let w = self.viscosity_ratio * s * s;
        w / (w + (1.0 - s) * (1.0 - s))
    }

    pub fn fractional_flow_derivative(&self, s: f64) -> f64 {
        let s = clamp(s);
        let m = self.viscosity_ratio;
        let d = m * s * s + (1.0 - s) * (1.0 - s);
        2.0 * m * s * (1.0 - s) / (d * d)
    }

    /// `max f'` over `[0, 1]` sampled every `1e-3`.
    pub fn max_derivative(&self) -> f64 {
        (0..=1000)
            .map(|k| self.fractional_flow_derivative(k as f64 * 1e-3))
            .fold(0.0, f64::max)
    }

    /// `kappa = lambda(s) K`, cell by cell.
    pub fn conductivity(&self, s: &CellField, permeability: &CellField) -> CellField {
        CellField {
            grid: s.grid,
            values: s
                .values
                .iter()
                .zip(&permeability.values)
                .map(|(&s, &k)| self.total_mobility(s) * k)
                .collect(),
        }
    }
}

/// Outflow rate (flux integrated over face lengths) of every cell.
fn cell_outflow(u: &FaceField) -> Vec<f64> {
    let g = u.grid;
    let (hx, hy) = (g.hx(), g.hy());
    (0..g.num_cells())
        .map(|c| {
            let [w, e, s, n] = g.cell_faces(c);
            ((-u.values[w]).max(0.0) + u.values[e].max(0.0)) * hy + ((-u.values[s]).max(0.0) + u.values[n].max(0.0)) * hx
        })
        .collect()
}

/// Largest stable explicit step times `safety`; `cap` when nothing flows.
pub fn cfl_timestep(u: &FaceField, model: &FluidModel, safety: f64, cap: f64) -> f64 {
    let area = u.grid.cell_area();
    let fmax = model.max_derivative();
    let worst = cell_outflow(u).into_iter().fold(0.0, f64::max);
    if worst > 0.0 {
        (safety * area / (worst * fmax)).min(cap)
    } else {
        cap
    }
}

/// Boundary water and total volumes exchanged during one step.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct StepBalance {
    pub water_in: f64,
    pub water_out: f64,
    pub total_in: f64,
}

/// One explicit upwind step. Inflow boundary faces carry `f(s_bar)`.
pub fn upwind_step(s: &CellField, u: &FaceField, dt: f64, model: &FluidModel, s_bar: f64) -> Result<(CellField, StepBalance)> {
    let g = u.grid;
    let f_in = model.fractional_flow(s_bar);
    let mut balance = StepBalance::default();
    // Water flux through each face, in the face orientation.
    let water: Vec<f64> = (0..g.num_faces())
        .map(|f| {
            let v = u.values[f] * g.face_length(f);
            match g.face_cells(f) {
                (Some(a), Some(b)) => v * model.fractional_flow(s.values[if v >= 0.0 { a } else { b }]),
                (None, Some(b)) => {
                    if v > 0.0 {
                        balance.water_in += dt * v * f_in;
                        balance.total_in += dt * v;
                        v * f_in
                    } else {
                        let w = v * model.fractional_flow(s.values[b]);
                        balance.water_out -= dt * w;
                        w
                    }
                }
                (Some(a), None) => {
                    if v < 0.0 {
                        balance.water_in -= dt * v * f_in;
                        balance.total_in -= dt * v;
                        v * f_in
                    } else {
                        let w = v * model.fractional_flow(s.values[a]);
                        balance.water_out += dt * w;
                        w
                    }
                }
                (None, None) => unreachable!(),
            }
        })
        .collect();
    let scale = dt / g.cell_area();
    let values: Vec<f64> = (0..g.num_cells())
        .into_par_iter()
        .with_min_len(1024)
        .map(|c| {
            let [w, e, so, n] = g.cell_faces(c);
            s.values[c] - scale * ((water[e] - water[w]) + (water[n] - water[so]))
        })
        .collect();
    if let Some(c) = values.iter().position(|v| !(*v >= -1e-12 && *v <= 1.0 + 1e-12)) {
        return Err(Error::Cfl { cell: c, value: values[c] });
    }
    let values = values.into_iter().map(|v| v.clamp(0.0, 1.0)).collect();
    Ok((CellField { grid: g, values }, balance))
}

/// `steps` substeps of `dt`; returns the accumulated balance.
pub fn advance(s: &mut CellField, u: &FaceField, dt: f64, steps: usize, model: &FluidModel, s_bar: f64) -> Result<StepBalance> {
    let mut total = StepBalance::default();
    for _ in 0..steps {
        let (next, b) = upwind_step(s, u, dt, model, s_bar)?;
        *s = next;
        total.water_in += b.water_in;
        total.water_out += b.water_out;
        total.total_in += b.total_in;
    }
    Ok(total)
}
