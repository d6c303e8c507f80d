//! Error norms, pore volumes injected and breakthrough detection.

use crate::grid::{CellField, FaceField, Side};

/// `|u - u_ref|_2 / |u_ref|_2` over faces, weighted by face length.
/// NaN when the reference is zero and `u` is not.
pub fn relative_flux_error(u: &FaceField, u_ref: &FaceField) -> f64 {
    let g = u.grid;
    let (mut num, mut den) = (0.0, 0.0);
    for f in 0..g.num_faces() {
        let w = g.face_length(f);
        num += w * (u.values[f] - u_ref.values[f]).powi(2);
        den += w * u_ref.values[f].powi(2);
    }
    ratio(num.sqrt(), den.sqrt())
}

/// `|s - s_ref|_1 / |s_ref|_1` over cells.
pub fn relative_sat_error(s: &CellField, s_ref: &CellField) -> f64 {
    let num: f64 = s.values.iter().zip(&s_ref.values).map(|(a, b)| (a - b).abs()).sum();
    let den: f64 = s_ref.values.iter().map(|v| v.abs()).sum();
    ratio(num, den)
}

/// Relative L2 difference of two cell fields.
pub fn relative_cell_l2(a: &CellField, b: &CellField) -> f64 {
    let num: f64 = a.values.iter().zip(&b.values).map(|(x, y)| (x - y).powi(2)).sum();
    let den: f64 = b.values.iter().map(|v| v * v).sum();
    ratio(num.sqrt(), den.sqrt())
}

fn ratio(num: f64, den: f64) -> f64 {
    if den > 0.0 {
        num / den
    } else if num == 0.0 {
        0.0
    } else {
        f64::NAN
    }
}

/// Injected water volume over pore volume (porosity one).
pub fn pvi(injected_volume: f64, lx: f64, ly: f64) -> f64 {
    injected_volume / (lx * ly)
}

/// Whether any cell adjacent to the outlet side has saturation above `threshold`.
pub fn outlet_reached(s: &CellField, outlet: Side, threshold: f64) -> bool {
    let block = s.grid.whole_block();
    (0..block.side_len(outlet)).any(|k| s.values[block.side_cell(outlet, k)] > threshold)
}

/// First index in a saturation history at which the outlet is reached.
pub fn detect_breakthrough<'a>(history: impl IntoIterator<Item = &'a CellField>, outlet: Side, threshold: f64) -> Option<usize> {
    history.into_iter().position(|s| outlet_reached(s, outlet, threshold))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::StructuredGrid2D;

    #[test]
    fn flux_error_examples() {
        let g = StructuredGrid2D::new(3, 2, 1.0, 1.0).unwrap();
        let u = FaceField::from_velocity(g, |x, y| (1.0 + x, y - 0.3));
        assert_eq!(relative_flux_error(&u, &u), 0.0);
        let scaled = FaceField { grid: g, values: u.values.iter().map(|v| 1.1 * v).collect() };
        assert!((relative_flux_error(&scaled, &u) - 0.1).abs() < 1e-14);
        let zero = FaceField::zeros(g);
        assert_eq!(relative_flux_error(&zero, &zero), 0.0);
        assert!(relative_flux_error(&u, &zero).is_nan());
    }

    #[test]
    fn saturation_error_examples() {
        let g = StructuredGrid2D::new(2, 2, 1.0, 1.0).unwrap();
        let s = CellField::from_values(g, vec![0.2, 0.4, 0.0, 1.0]).unwrap();
        let t = CellField::from_values(g, vec![0.2, 0.2, 0.0, 1.0]).unwrap();
        assert!((relative_sat_error(&t, &s) - 0.2 / 1.6).abs() < 1e-15);
    }

    #[test]
    fn pvi_and_breakthrough() {
        assert!((pvi(0.1, 1.0, 1.0) - 0.1).abs() < 1e-15);
        let g = StructuredGrid2D::new(4, 2, 1.0, 1.0).unwrap();
        let dry = CellField::zeros(g);
        let mut wet = dry.clone();
        wet.values[g.cell(3, 1)] = 0.06;
        assert_eq!(detect_breakthrough([&dry, &dry], Side::East, 0.05), None);
        assert_eq!(detect_breakthrough([&dry, &wet, &wet], Side::East, 0.05), Some(1));
        let mut west = dry.clone();
        west.values[g.cell(0, 0)] = 1.0;
        assert!(!outlet_reached(&west, Side::East, 0.05));
    }
}
