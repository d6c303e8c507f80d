use mrcmflow::elliptic::{solve_cell_centered, DomainBoundary, PhysicalCondition};
use mrcmflow::fields::{GaussianFieldSpec, GaussianSampler};
use mrcmflow::grid::{conservation_residual, CellField, DomainDecomposition, FaceField, Side, StructuredGrid2D};
use mrcmflow::metrics::{relative_cell_l2, relative_flux_error};
use mrcmflow::mrcm::{
    compute_beta, downscale, gather_pressure, mrcm_solve, solve_with_basis, weak_continuity, AlphaMode, InterfaceSpace,
    MrcmConfig, SpaceKind,
};
use nalgebra::{DMatrix, DVector};

fn unit(n: usize) -> StructuredGrid2D {
    StructuredGrid2D::new(n, n, 1.0, 1.0).unwrap()
}

fn wavy_kappa(g: StructuredGrid2D) -> CellField {
    CellField::from_fn(g, |x, y| (1.5 * (5.0 * x).sin() + 2.0 * (3.0 * y + x).cos()).exp())
}

fn wavy_source(g: StructuredGrid2D) -> CellField {
    CellField::from_fn(g, |x, y| (7.0 * x).cos() * (4.0 * y).sin())
}

fn gaussian(n: usize, seed: u64) -> CellField {
    GaussianSampler::new(unit(n)).unwrap().generate(&GaussianFieldSpec::new(2.5, seed)).unwrap()
}

/// The Robin-coupled local problems and the interface conditions assembled
/// as one linear system: cell pressures of every subdomain, then `U`, then `P`.
fn monolithic(
    kappa: &CellField,
    dd: &DomainDecomposition,
    space: &InterfaceSpace,
    alpha: AlphaMode,
    q: &CellField,
    bc: &DomainBoundary,
) -> (Vec<f64>, Vec<f64>) {
    let g = dd.grid;
    let robin = compute_beta(kappa, dd, alpha);
    let nc = g.num_cells();
    let nu = space.num_flux();
    let n = nc + space.num_dofs();
    let mut a = DMatrix::<f64>::zeros(n, n);
    let mut b = DVector::<f64>::zeros(n);
    let (hx, hy) = (g.hx(), g.hy());

    for sub in &dd.subdomains {
        let blk = sub.block;
        for j in 0..blk.ny {
            for i in 0..blk.nx {
                let c = blk.global_cell(&g, i, j);
                b[c] += q.values[c] * g.cell_area();
                let neighbours = [
                    (Side::West, i > 0, (i.wrapping_sub(1), j), j),
                    (Side::East, i + 1 < blk.nx, (i + 1, j), j),
                    (Side::South, j > 0, (i, j.wrapping_sub(1)), i),
                    (Side::North, j + 1 < blk.ny, (i, j + 1), i),
                ];
                for (side, inside, (ni, nj), k) in neighbours {
                    let (len, dist) = if side.is_vertical() { (hy, hx) } else { (hx, hy) };
                    if inside {
                        let nb = blk.global_cell(&g, ni, nj);
                        let (k1, k2) = (kappa.values[c], kappa.values[nb]);
                        let t = len / dist * 2.0 * k1 * k2 / (k1 + k2);
                        a[(c, c)] += t;
                        a[(c, nb)] -= t;
                        continue;
                    }
                    let t = kappa.values[c] / (0.5 * dist);
                    match sub.interface(side) {
                        Some(ii) => {
                            let iface = &dd.interfaces[ii];
                            let e = iface.skeleton_offset + k;
                            let minus = iface.minus == sub.id;
                            let sigma = if minus { 1.0 } else { -1.0 };
                            let beta = robin.beta(e, minus);
                            let coef = t / (1.0 + beta * t);
                            a[(c, c)] += coef * len;
                            for &l in &space.flux_on[ii] {
                                a[(c, nc + l)] += coef * len * beta * sigma * space.flux[l].values[k];
                            }
                            for &m in &space.pressure_on[ii] {
                                a[(c, nc + nu + m)] -= coef * len * space.pressure[m].values[k];
                            }
                            // Interface equations: trace = coef (p_c - r).
                            for &tk in &space.pressure_on[ii] {
                                let psi = space.pressure[tk].values[k];
                                let row = nc + nu + tk;
                                a[(row, c)] += coef * psi * len;
                                for &l in &space.flux_on[ii] {
                                    a[(row, nc + l)] += coef * beta * sigma * space.flux[l].values[k] * psi * len;
                                }
                                for &m in &space.pressure_on[ii] {
                                    a[(row, nc + nu + m)] -= coef * space.pressure[m].values[k] * psi * len;
                                }
                            }
                            for &tk in &space.flux_on[ii] {
                                let phi = space.flux[tk].values[k];
                                let row = nc + tk;
                                let w = beta * phi * sigma * len;
                                a[(row, c)] += w * coef;
                                for &l in &space.flux_on[ii] {
                                    let fl = space.flux[l].values[k];
                                    a[(row, nc + l)] += w * (coef * beta * sigma * fl - fl * sigma);
                                }
                                for &m in &space.pressure_on[ii] {
                                    a[(row, nc + nu + m)] -= w * coef * space.pressure[m].values[k];
                                }
                            }
                        }
                        None => match bc.block_side(&blk, side)[k] {
                            PhysicalCondition::Pressure(gv) => {
                                a[(c, c)] += t * len;
                                b[c] += t * len * gv;
                            }
                            PhysicalCondition::Flux(z) => b[c] -= z * len,
                        },
                    }
                }
            }
        }
    }
    let x = a.lu().solve(&b).expect("monolithic system is nonsingular");
    (x.as_slice()[..nc].to_vec(), x.as_slice()[nc..].to_vec())
}

#[test]
fn reconstruction_matches_monolithic_oracle() {
    let g = unit(8);
    let dd = DomainDecomposition::new(g, 2, 2).unwrap();
    let kappa = wavy_kappa(g);
    let q = wavy_source(g);
    let bc = DomainBoundary::pressure_drop(g);
    for (kind, alpha) in [
        (SpaceKind::Constant { parts: 1 }, AlphaMode::Uniform(1.0)),
        (SpaceKind::Linear, AlphaMode::Uniform(0.3)),
        (SpaceKind::Constant { parts: 2 }, AlphaMode::adaptive()),
    ] {
        let config = MrcmConfig { flux_space: kind, pressure_space: kind, alpha };
        let (sol, basis) = mrcm_solve(&kappa, &dd, &config, &q, &bc).unwrap();
        let (p_ref, c_ref) = monolithic(&kappa, &dd, basis.space(), alpha, &q, &bc);
        let p = gather_pressure(&dd, &sol.local);
        let scale = p_ref.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        for (x, y) in p.values.iter().zip(&p_ref) {
            assert!((x - y).abs() < 1e-10 * scale, "{kind:?}: {x} vs {y}");
        }
        let cscale = c_ref.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        for (d, y) in c_ref.iter().enumerate() {
            assert!((sol.coefficients.get(d) - y).abs() < 1e-10 * cscale);
        }
    }
}

#[test]
fn single_subdomain_equals_fine_solver() {
    let g = StructuredGrid2D::new(12, 9, 1.2, 0.9).unwrap();
    let dd = DomainDecomposition::new(g, 1, 1).unwrap();
    let kappa = wavy_kappa(g);
    let q = wavy_source(g);
    let bc = DomainBoundary::unit_inflow(g);
    let (sol, basis) = mrcm_solve(&kappa, &dd, &MrcmConfig::default(), &q, &bc).unwrap();
    assert_eq!(basis.num_homogeneous(), 0);
    assert_eq!(sol.counts.particular, 1);
    let fine = solve_cell_centered(&kappa, &q, &bc.to_spec(), None).unwrap();
    assert!(relative_cell_l2(&sol.fine.p, &fine.p) < 1e-10);
    assert!(relative_flux_error(&sol.fine.u, &fine.u) < 1e-10);
}

#[test]
fn fine_interface_space_reproduces_fine_solution() {
    for (nx, ny, sx, sy, lx, ly) in [(16, 16, 4, 4, 1.0, 1.0), (30, 10, 3, 2, 3.0, 0.5), (12, 12, 2, 3, 1.0, 1.0)] {
        let g = StructuredGrid2D::new(nx, ny, lx, ly).unwrap();
        let dd = DomainDecomposition::new(g, sx, sy).unwrap();
        let kappa = wavy_kappa(g);
        let q = wavy_source(g);
        for bc in [DomainBoundary::pressure_drop(g), DomainBoundary::finger(g), DomainBoundary::unit_inflow(g)] {
            let config = MrcmConfig::with_space(SpaceKind::Segments { edges: 1 });
            let (sol, _) = mrcm_solve(&kappa, &dd, &config, &q, &bc).unwrap();
            let fine = solve_cell_centered(&kappa, &q, &bc.to_spec(), None).unwrap();
            assert!(relative_flux_error(&sol.fine.u, &fine.u) < 1e-8);
            assert!(relative_cell_l2(&sol.fine.p, &fine.p) < 1e-8);
            assert!(sol.report.max_repair <= 1e-9 * sol.fine.u.max_abs());
        }
    }
}

#[test]
fn zero_data_gives_zero_solution() {
    let g = unit(8);
    let dd = DomainDecomposition::new(g, 2, 2).unwrap();
    let bc = DomainBoundary::pressure_drop(g).homogeneous();
    let (sol, _) = mrcm_solve(&wavy_kappa(g), &dd, &MrcmConfig::default(), &CellField::zeros(g), &bc).unwrap();
    assert!(sol.coefficients.flux.iter().chain(&sol.coefficients.pressure).all(|c| *c == 0.0));
    assert!(sol.fine.u.values.iter().all(|v| *v == 0.0));
}

#[test]
fn uniform_flow_is_exact() {
    // Vertical interfaces only need constants; horizontal ones carry a linear pressure.
    let g = unit(16);
    let bc = DomainBoundary::pressure_drop(g);
    for (sx, sy, kind) in [(4, 1, SpaceKind::Constant { parts: 1 }), (4, 4, SpaceKind::Linear)] {
        let dd = DomainDecomposition::new(g, sx, sy).unwrap();
        let config = MrcmConfig::with_space(kind);
        let (sol, _) = mrcm_solve(&CellField::constant(g, 1.0), &dd, &config, &CellField::zeros(g), &bc).unwrap();
        for f in 0..g.num_faces() {
            let exact = if f < g.num_vertical_faces() { 1.0 } else { 0.0 };
            assert!((sol.fine.u.values[f] - exact).abs() < 1e-8, "{sx}x{sy}");
        }
        for s in &sol.local {
            for side in [Side::East, Side::West] {
                for v in s.outward_flux(side) {
                    assert!((v.abs() - 1.0).abs() < 1e-8);
                }
            }
        }
    }
}

#[test]
fn constant_pressure_space_cannot_carry_a_linear_drop_along_interfaces() {
    let g = unit(16);
    let dd = DomainDecomposition::new(g, 4, 4).unwrap();
    let bc = DomainBoundary::pressure_drop(g);
    let (sol, _) = mrcm_solve(&CellField::constant(g, 1.0), &dd, &MrcmConfig::default(), &CellField::zeros(g), &bc).unwrap();
    let exact = FaceField::from_velocity(g, |_, _| (1.0, 0.0));
    let err = relative_flux_error(&sol.fine.u, &exact);
    assert!(err > 1e-6 && err < 0.5, "{err}");
}

#[test]
fn linear_in_the_data() {
    let g = unit(8);
    let dd = DomainDecomposition::new(g, 2, 2).unwrap();
    let kappa = wavy_kappa(g);
    let q = wavy_source(g);
    let bc = DomainBoundary::unit_inflow(g);
    let q2 = CellField { grid: g, values: q.values.iter().map(|v| 2.0 * v).collect() };
    let bc2 = DomainBoundary {
        grid: g,
        sides: bc.sides.clone().map(|v| {
            v.into_iter()
                .map(|c| match c {
                    PhysicalCondition::Pressure(x) => PhysicalCondition::Pressure(2.0 * x),
                    PhysicalCondition::Flux(x) => PhysicalCondition::Flux(2.0 * x),
                })
                .collect()
        }),
    };
    let (a, basis) = mrcm_solve(&kappa, &dd, &MrcmConfig::default(), &q, &bc).unwrap();
    let b = solve_with_basis(&basis, &kappa, &q2, &bc2).unwrap();
    let scale = a.fine.u.max_abs();
    for (x, y) in a.fine.u.values.iter().zip(&b.fine.u.values) {
        assert!((2.0 * x - y).abs() < 1e-10 * scale);
    }
    for (x, y) in a.local.iter().zip(&b.local) {
        for (u, v) in x.p.values.iter().zip(&y.p.values) {
            assert!((2.0 * u - v).abs() < 1e-10 * (1.0 + u.abs()));
        }
    }
}

#[test]
fn weak_continuity_and_interface_residual() {
    let g = unit(12);
    let dd = DomainDecomposition::new(g, 2, 2).unwrap();
    let kappa = wavy_kappa(g);
    let q = CellField::from_fn(g, |x, y| ((13.0 * x * y).sin() * 1e3).fract());
    let bc = DomainBoundary::pressure_drop(g);
    for kind in [SpaceKind::Constant { parts: 1 }, SpaceKind::Linear, SpaceKind::Constant { parts: 3 }] {
        let (sol, basis) = mrcm_solve(&kappa, &dd, &MrcmConfig::with_space(kind), &q, &bc).unwrap();
        let (flux, pressure) = weak_continuity(&dd, basis.space(), &sol.local);
        assert!(flux < 1e-9, "{kind:?} flux jump {flux}");
        assert!(pressure < 1e-9, "{kind:?} pressure jump {pressure}");
        let particular = basis.particular(&q, &bc).unwrap();
        assert!(basis.interface_residual(&sol.coefficients, &particular) < 1e-10);
    }
}

#[test]
fn basis_counts() {
    let g = unit(64);
    let dd = DomainDecomposition::new(g, 4, 4).unwrap();
    let bc = DomainBoundary::pressure_drop(g);
    let kappa = CellField::constant(g, 1.0);
    let one = MrcmConfig::default().build_basis(&kappa, &dd, &bc).unwrap();
    assert_eq!(one.num_homogeneous(), 96);
    assert_eq!(one.interface_matrix().nrows(), 48);
    let two = MrcmConfig::with_space(SpaceKind::Constant { parts: 2 }).build_basis(&kappa, &dd, &bc).unwrap();
    assert_eq!(two.num_homogeneous(), 192);
    // An interior subdomain has four interfaces, each with one flux and one pressure function.
    assert_eq!(one.local()[5].solutions.len(), 8);
}

#[test]
fn interface_matrix_is_reused_and_reproducible() {
    let g = unit(16);
    let dd = DomainDecomposition::new(g, 4, 4).unwrap();
    let kappa = wavy_kappa(g);
    let bc = DomainBoundary::pressure_drop(g);
    let config = MrcmConfig::default();
    let (_, basis) = mrcm_solve(&kappa, &dd, &config, &CellField::zeros(g), &bc).unwrap();
    let bytes = |m: &faer::Mat<f64>| -> Vec<u64> {
        (0..m.ncols()).flat_map(|c| (0..m.nrows()).map(move |r| m[(r, c)].to_bits())).collect()
    };
    let before = bytes(basis.interface_matrix());
    let sol = solve_with_basis(&basis, &kappa, &wavy_source(g), &bc).unwrap();
    assert_eq!(sol.counts.homogeneous, 0);
    assert_eq!(bytes(basis.interface_matrix()), before);
    let again = config.build_basis(&kappa, &dd, &bc).unwrap();
    assert_eq!(bytes(again.interface_matrix()), before);
}

#[test]
fn downscaling_exact_skeleton_fluxes_recovers_fine_velocity() {
    let g = unit(16);
    let dd = DomainDecomposition::new(g, 4, 4).unwrap();
    let kappa = wavy_kappa(g);
    let q = wavy_source(g);
    let bc = DomainBoundary::pressure_drop(g);
    let fine = solve_cell_centered(&kappa, &q, &bc.to_spec(), None).unwrap();
    let (down, report) = downscale(&dd, &fine.u, &kappa, &q, &bc, &fine.p).unwrap();
    assert!(report.max_repair < 1e-12);
    let scale = fine.u.max_abs();
    for (a, b) in down.u.values.iter().zip(&fine.u.values) {
        assert!((a - b).abs() < 1e-9 * scale);
    }
}

#[test]
fn downscaling_repairs_inconsistent_fluxes() {
    let g = unit(16);
    let dd = DomainDecomposition::new(g, 4, 4).unwrap();
    let kappa = wavy_kappa(g);
    let q = wavy_source(g);
    let bc = DomainBoundary::pressure_drop(g);
    let mut ubar = FaceField::from_velocity(g, |x, y| (1.0 + 0.3 * y, 0.2 * x));
    for f in g.boundary_faces(Side::South).into_iter().chain(g.boundary_faces(Side::North)) {
        ubar.values[f] = 0.0;
    }
    let (down, report) = downscale(&dd, &ubar, &kappa, &q, &bc, &CellField::zeros(g)).unwrap();
    assert!(report.max_repair > 0.0);
    assert!(conservation_residual(&down.u, &q) < 1e-10);
    for f in g.boundary_faces(Side::South) {
        assert_eq!(down.u.values[f], 0.0);
    }
}

#[test]
fn gaussian_slab_error_and_conservation() {
    let g = unit(64);
    let dd = DomainDecomposition::new(g, 4, 4).unwrap();
    let kappa = gaussian(64, 1);
    let q = CellField::zeros(g);
    let bc = DomainBoundary::pressure_drop(g);
    let fine = solve_cell_centered(&kappa, &q, &bc.to_spec(), None).unwrap();
    let (sol, _) = mrcm_solve(&kappa, &dd, &MrcmConfig::default(), &q, &bc).unwrap();
    let err = relative_flux_error(&sol.fine.u, &fine.u);
    assert!((1e-2..=1.0).contains(&err), "flux error {err}");
    assert!(conservation_residual(&sol.fine.u, &q) < 1e-10);
    assert!(!sol.report.warning());
}

#[test]
fn richer_spaces_do_not_increase_error() {
    let g = unit(64);
    let dd = DomainDecomposition::new(g, 4, 4).unwrap();
    let q = CellField::zeros(g);
    let bc = DomainBoundary::pressure_drop(g);
    let sampler = GaussianSampler::new(g).unwrap();
    for seed in [1, 2, 3] {
        let kappa = sampler.generate(&GaussianFieldSpec::new(2.5, seed)).unwrap();
        let fine = solve_cell_centered(&kappa, &q, &bc.to_spec(), None).unwrap();
        let errors: Vec<f64> = [SpaceKind::Constant { parts: 1 }, SpaceKind::Constant { parts: 2 }, SpaceKind::Segments { edges: 1 }]
            .into_iter()
            .map(|k| {
                let (sol, _) = mrcm_solve(&kappa, &dd, &MrcmConfig::with_space(k), &q, &bc).unwrap();
                relative_flux_error(&sol.fine.u, &fine.u)
            })
            .collect();
        assert!(errors[1] <= 1.05 * errors[0], "seed {seed}: {errors:?}");
        assert!(errors[2] <= 1.05 * errors[1], "seed {seed}: {errors:?}");
    }
}

#[test]
fn pure_flux_problem_with_pressure_space_constant_is_singular() {
    let g = unit(8);
    let dd = DomainDecomposition::new(g, 2, 2).unwrap();
    let bc = DomainBoundary::uniform(g, [PhysicalCondition::Flux(0.0); 4]);
    let err = MrcmConfig::default().build_basis(&CellField::constant(g, 1.0), &dd, &bc).unwrap_err();
    match err {
        mrcmflow::Error::SingularInterface { near_null, .. } => {
            assert_eq!(near_null.len(), 8);
            // The null direction is a common shift of all interface pressures.
            let p = &near_null[4..];
            assert!(p.iter().all(|v| (v - p[0]).abs() < 1e-6 && v.abs() > 0.1));
        }
        other => panic!("expected a singular interface matrix, got {other}"),
    }
}
