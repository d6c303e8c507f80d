//! Robin coupling parameter `beta_i = alpha * H / kappa_i` on the skeleton.

use crate::grid::{CellField, DomainDecomposition};

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum AlphaMode {
    Uniform(f64),
    /// Small `alpha` on high-conductivity edges, large on low ones, 1 otherwise.
    Adaptive {
        alpha_min: f64,
        alpha_max: f64,
        percentile_lo: f64,
        percentile_hi: f64,
    },
}

impl Default for AlphaMode {
    fn default() -> Self {
        AlphaMode::Uniform(1.0)
    }
}

impl AlphaMode {
    pub fn adaptive() -> Self {
        AlphaMode::Adaptive {
            alpha_min: 1e-2,
            alpha_max: 1e2,
            percentile_lo: 10.0,
            percentile_hi: 90.0,
        }
    }
}

/// Values per skeleton edge, on each side of the interface.
#[derive(Clone, Debug, PartialEq)]
pub struct RobinParameter {
    pub mode: AlphaMode,
    pub alpha: Vec<f64>,
    /// On the west/south (minus) side.
    pub beta_minus: Vec<f64>,
    /// On the east/north (plus) side.
    pub beta_plus: Vec<f64>,
}

impl RobinParameter {
    pub fn beta(&self, edge: usize, minus: bool) -> f64 {
        if minus {
            self.beta_minus[edge]
        } else {
            self.beta_plus[edge]
        }
    }
}

/// Linear-interpolation percentile of unsorted data, `pct` in `[0, 100]`.
pub fn percentile(data: &[f64], pct: f64) -> f64 {
    let mut v = data.to_vec();
    v.sort_by(f64::total_cmp);
    let pos = (pct / 100.0).clamp(0.0, 1.0) * (v.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    v[lo] + (pos - lo as f64) * (v[hi] - v[lo])
}

pub fn compute_beta(kappa: &CellField, dd: &DomainDecomposition, mode: AlphaMode) -> RobinParameter {
    let ne = dd.num_skeleton_edges();
    let grid = &dd.grid;
    let mut k_minus = vec![0.0; ne];
    let mut k_plus = vec![0.0; ne];
    let mut big_h = vec![0.0; ne];
    for iface in &dd.interfaces {
        for (k, &f) in iface.faces.iter().enumerate() {
            let (a, b) = grid.face_cells(f);
            let e = iface.skeleton_offset + k;
            k_minus[e] = kappa.values[a.expect("skeleton face has two cells")];
            k_plus[e] = kappa.values[b.expect("skeleton face has two cells")];
            big_h[e] = iface.length();
        }
    }
    let alpha = match mode {
        AlphaMode::Uniform(a) => vec![a; ne],
        AlphaMode::Adaptive { alpha_min, alpha_max, percentile_lo, percentile_hi } => {
            let face_k: Vec<f64> = k_minus
                .iter()
                .zip(&k_plus)
                .map(|(a, b)| 2.0 * a * b / (a + b))
                .collect();
            if face_k.is_empty() {
                Vec::new()
            } else {
                let lo = percentile(&face_k, percentile_lo);
                let hi = percentile(&face_k, percentile_hi);
                face_k
                    .iter()
                    .map(|&k| {
                        if k > hi {
                            alpha_min
                        } else if k < lo {
                            alpha_max
                        } else {
                            1.0
                        }
                    })
                    .collect()
            }
        }
    };
    let beta = |k: &[f64]| -> Vec<f64> { (0..ne).map(|e| alpha[e] * big_h[e] / k[e]).collect() };
    RobinParameter {
        mode,
        beta_minus: beta(&k_minus),
        beta_plus: beta(&k_plus),
        alpha,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::StructuredGrid2D;

    fn dd() -> DomainDecomposition {
        DomainDecomposition::new(StructuredGrid2D::new(16, 16, 1.0, 1.0).unwrap(), 4, 4).unwrap()
    }

    #[test]
    fn uniform_unit_conductivity() {
        let d = dd();
        let r = compute_beta(&CellField::constant(d.grid, 1.0), &d, AlphaMode::Uniform(1.0));
        assert!(r.beta_minus.iter().chain(&r.beta_plus).all(|b| (b - 0.25).abs() < 1e-15));
    }

    #[test]
    fn doubling_kappa_halves_beta() {
        let d = dd();
        let k = CellField::from_fn(d.grid, |x, y| 1.0 + x + y * y);
        let k2 = CellField { grid: d.grid, values: k.values.iter().map(|v| 2.0 * v).collect() };
        let a = compute_beta(&k, &d, AlphaMode::Uniform(3.0));
        let b = compute_beta(&k2, &d, AlphaMode::Uniform(3.0));
        for (x, y) in a.beta_minus.iter().zip(&b.beta_minus) {
            assert!((x - 2.0 * y).abs() < 1e-14 * x);
        }
    }

    #[test]
    fn one_sided_conductivity() {
        let d = dd();
        let k = CellField::from_fn(d.grid, |x, _| if x < 0.25 { 1.0 } else { 4.0 });
        let r = compute_beta(&k, &d, AlphaMode::Uniform(1.0));
        let iface = &d.interfaces[0];
        assert_eq!(iface.minus, 0);
        assert_eq!(iface.plus, 1);
        let e = iface.skeleton_offset;
        assert!((r.beta_minus[e] - 0.25).abs() < 1e-15);
        assert!((r.beta_plus[e] - 0.0625).abs() < 1e-15);
    }

    #[test]
    fn adaptive_classifies_three_bands() {
        // One channel row (1e3) and one barrier row (1e-3) in a unit background.
        let d = dd();
        let h = d.grid.hy();
        let k = CellField::from_fn(d.grid, |_, y| match (y / h) as usize {
            13 => 1e3,
            2 => 1e-3,
            _ => 1.0,
        });
        let r = compute_beta(&k, &d, AlphaMode::adaptive());
        let mut seen = [0; 3];
        for iface in &d.interfaces {
            for (n, &f) in iface.faces.iter().enumerate() {
                let e = iface.skeleton_offset + n;
                let (a, b) = d.grid.face_cells(f);
                let (ka, kb) = (k.values[a.unwrap()], k.values[b.unwrap()]);
                let face_k = 2.0 * ka * kb / (ka + kb);
                let (expected, slot) = if face_k > 10.0 {
                    (1e-2, 0)
                } else if face_k < 0.1 {
                    (1e2, 1)
                } else {
                    (1.0, 2)
                };
                assert_eq!(r.alpha[e], expected, "edge {e}");
                seen[slot] += 1;
            }
        }
        assert!(seen.iter().all(|&n| n > 0));
    }

    #[test]
    fn percentile_interpolates() {
        let v = [4.0, 1.0, 3.0, 2.0, 5.0];
        assert_eq!(percentile(&v, 0.0), 1.0);
        assert_eq!(percentile(&v, 50.0), 3.0);
        assert_eq!(percentile(&v, 100.0), 5.0);
        assert!((percentile(&v, 10.0) - 1.4).abs() < 1e-15);
    }
}
