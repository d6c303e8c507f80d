use mrcmflow::grid::{CellField, FaceField, StructuredGrid2D};
use mrcmflow::transport::{cfl_timestep, upwind_step, FluidModel};
use proptest::prelude::*;

/// Discretely divergence-free velocity from nodal stream function values.
fn stream_velocity(g: StructuredGrid2D, psi: &[f64]) -> FaceField {
    let node = |i: usize, j: usize| psi[j * (g.nx + 1) + i];
    let mut u = FaceField::zeros(g);
    for j in 0..g.ny {
        for i in 0..=g.nx {
            u.values[g.vface(i, j)] = (node(i, j + 1) - node(i, j)) / g.hy();
        }
    }
    for j in 0..=g.ny {
        for i in 0..g.nx {
            u.values[g.hface(i, j)] = -(node(i + 1, j) - node(i, j)) / g.hx();
        }
    }
    u
}

fn case() -> impl Strategy<Value = (usize, usize, Vec<f64>, Vec<f64>, f64, f64)> {
    (2usize..9, 2usize..9).prop_flat_map(|(nx, ny)| {
        (
            Just(nx),
            Just(ny),
            prop::collection::vec(-1.0f64..1.0, (nx + 1) * (ny + 1)),
            prop::collection::vec(0.0f64..1.0, nx * ny),
            0.1f64..50.0,
            0.0f64..1.0,
        )
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn upwind_respects_bounds_and_balance((nx, ny, psi, s0, m, s_bar) in case()) {
        let g = StructuredGrid2D::new(nx, ny, 1.0, 0.7).unwrap();
        let model = FluidModel::new(m).unwrap();
        let u = stream_velocity(g, &psi);
        let dt = cfl_timestep(&u, &model, 0.9, 1.0);
        let mut s = CellField::from_values(g, s0).unwrap();
        let lo = s.min().min(s_bar);
        let hi = s.max().max(s_bar);
        let area = g.cell_area();
        for _ in 0..100 {
            let (next, b) = upwind_step(&s, &u, dt, &model, s_bar).unwrap();
            let before: f64 = s.values.iter().sum::<f64>() * area;
            let after: f64 = next.values.iter().sum::<f64>() * area;
            let scale = before.max(b.water_in + b.water_out).max(1e-300);
            prop_assert!((after - before - (b.water_in - b.water_out)).abs() <= 1e-12 * scale);
            prop_assert!(next.values.iter().all(|&v| v >= lo - 1e-13 && v <= hi + 1e-13));
            s = next;
        }
    }
}

#[test]
fn monotone_fractional_flow() {
    for m in [0.1, 1.0, 4.0, 40.0, 1e3] {
        let model = FluidModel::new(m).unwrap();
        let f: Vec<f64> = (0..=1000).map(|k| model.fractional_flow(k as f64 * 1e-3)).collect();
        assert!(f.windows(2).all(|w| w[0] <= w[1]));
        assert!(f.iter().all(|v| (0.0..=1.0).contains(v)));
    }
}

/// Plain 1D upwind on `n` cells of a unit slab with unit velocity.
fn upwind_1d(n: usize, dt: f64, steps: usize, model: &FluidModel) -> Vec<f64> {
    let h = 1.0 / n as f64;
    let mut s = vec![0.0; n];
    for _ in 0..steps {
        let flux: Vec<f64> = (0..=n).map(|k| if k == 0 { 1.0 } else { model.fractional_flow(s[k - 1]) }).collect();
        for i in 0..n {
            s[i] -= dt / h * (flux[i + 1] - flux[i]);
        }
    }
    s
}

fn front(s: &[f64]) -> usize {
    s.iter().position(|&v| v < 0.25).unwrap_or(s.len())
}

#[test]
fn buckley_leverett_front() {
    let model = FluidModel::new(1.0).unwrap();
    let g = StructuredGrid2D::new(200, 1, 1.0, 0.1).unwrap();
    let u = FaceField::from_velocity(g, |_, _| (1.0, 0.0));
    let dt = cfl_timestep(&u, &model, 0.9, 1.0);
    let steps = (0.5 / dt).round() as usize;
    let mut s = CellField::zeros(g);
    for _ in 0..steps {
        s = upwind_step(&s, &u, dt, &model, 1.0).unwrap().0;
    }
    let oracle = upwind_1d(200, dt, steps, &model);
    assert!(front(&s.values).abs_diff(front(&oracle)) <= 1);

    // Shock at speed f(s*)/s* with s* = 1/sqrt(2) for equal viscosities.
    let star = 0.5f64.sqrt();
    let x = model.fractional_flow(star) / star * steps as f64 * dt;
    let cells = (front(&s.values) as f64 - x * 200.0).abs();
    assert!(cells < 8.0, "front off by {cells} cells");
}
