//! Cell-centered two-point-flux pressure solver.
//!
//! Used for the global fine-scale reference and for every local subdomain
//! problem (Robin, Dirichlet and Neumann variants). A boundary face carries
//! exactly one condition:
//!
//! * `Pressure(g)`: the face pressure is `g`.
//! * `Flux(z)`: the outward normal velocity is `z`.
//! * `Robin { beta, rhs }`: `-beta * u.n + p_face = rhs` with `u.n` outward.
//!
//! The face pressure is eliminated through the half-cell conductance
//! `t = kappa / (h / 2)`, which keeps the cell system symmetric positive definite.

use crate::error::{Error, Result};
use crate::grid::{CellBlock, CellField, FaceField, Side, StructuredGrid2D};
use crate::linalg::{conjugate_gradient, BandedCholesky, FivePointMatrix};

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum BoundaryCondition {
    Pressure(f64),
    Flux(f64),
    Robin { beta: f64, rhs: f64 },
}

impl BoundaryCondition {
    pub fn kind(&self) -> FaceKind {
        match *self {
            BoundaryCondition::Pressure(_) => FaceKind::Pressure,
            BoundaryCondition::Flux(_) => FaceKind::Flux,
            BoundaryCondition::Robin { beta, .. } => FaceKind::Robin { beta },
        }
    }

    pub fn value(&self) -> f64 {
        match *self {
            BoundaryCondition::Pressure(g) => g,
            BoundaryCondition::Flux(z) => z,
            BoundaryCondition::Robin { rhs, .. } => rhs,
        }
    }
}

/// The operator-relevant part of a boundary condition.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum FaceKind {
    Pressure,
    Flux,
    Robin { beta: f64 },
}

/// One condition per boundary face, stored per side in increasing coordinate order.
#[derive(Clone, Debug, PartialEq)]
pub struct BoundarySpec {
    pub sides: [Vec<BoundaryCondition>; 4],
}

impl BoundarySpec {
    pub fn uniform(grid: &StructuredGrid2D, f: impl Fn(Side) -> BoundaryCondition) -> Self {
        let sides = Side::ALL.map(|s| {
            let n = if s.is_vertical() { grid.ny } else { grid.nx };
            vec![f(s); n]
        });
        Self { sides }
    }

    pub fn side(&self, side: Side) -> &[BoundaryCondition] {
        &self.sides[side.index()]
    }

    pub fn side_mut(&mut self, side: Side) -> &mut Vec<BoundaryCondition> {
        &mut self.sides[side.index()]
    }

    pub fn kinds(&self) -> [Vec<FaceKind>; 4] {
        self.sides.clone().map(|v| v.iter().map(BoundaryCondition::kind).collect())
    }

    pub fn values(&self) -> [Vec<f64>; 4] {
        self.sides.clone().map(|v| v.iter().map(BoundaryCondition::value).collect())
    }
}

/// Physical boundary data on the outer domain: pressure `g` on part of the
/// boundary and outward normal flux `z` on the rest.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum PhysicalCondition {
    Pressure(f64),
    Flux(f64),
}

impl From<PhysicalCondition> for BoundaryCondition {
    fn from(c: PhysicalCondition) -> Self {
        match c {
            PhysicalCondition::Pressure(g) => BoundaryCondition::Pressure(g),
            PhysicalCondition::Flux(z) => BoundaryCondition::Flux(z),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct DomainBoundary {
    pub grid: StructuredGrid2D,
    pub sides: [Vec<PhysicalCondition>; 4],
}

impl DomainBoundary {
    /// Same condition along each whole side, given in `[west, east, south, north]` order.
    pub fn uniform(grid: StructuredGrid2D, conditions: [PhysicalCondition; 4]) -> Self {
        let sides = Side::ALL.map(|s| {
            let n = if s.is_vertical() { grid.ny } else { grid.nx };
            vec![conditions[s.index()]; n]
        });
        Self { grid, sides }
    }

    pub fn side(&self, side: Side) -> &[PhysicalCondition] {
        &self.sides[side.index()]
    }

    /// `p = 1` on the west, `p = 0` on the east, no flow elsewhere.
    pub fn pressure_drop(grid: StructuredGrid2D) -> Self {
        use PhysicalCondition::*;
        Self::uniform(grid, [Pressure(1.0), Pressure(0.0), Flux(0.0), Flux(0.0)])
    }

    /// Unit inflow velocity on the west, `p = 0` on the east, no flow elsewhere.
    pub fn unit_inflow(grid: StructuredGrid2D) -> Self {
        use PhysicalCondition::*;
        Self::uniform(grid, [Flux(-1.0), Pressure(0.0), Flux(0.0), Flux(0.0)])
    }

    /// `p = 0` on the west, `p = -1e4` on the east, no flow elsewhere.
    pub fn finger(grid: StructuredGrid2D) -> Self {
        use PhysicalCondition::*;
        Self::uniform(grid, [Pressure(0.0), Pressure(-1e4), Flux(0.0), Flux(0.0)])
    }

    /// Conditions on the physical faces of a block lying on `side`.
    pub fn block_side(&self, block: &CellBlock, side: Side) -> &[PhysicalCondition] {
        let all = self.side(side);
        if side.is_vertical() {
            &all[block.j0..block.j0 + block.ny]
        } else {
            &all[block.i0..block.i0 + block.nx]
        }
    }

    pub fn to_spec(&self) -> BoundarySpec {
        BoundarySpec {
            sides: self.sides.clone().map(|v| v.into_iter().map(Into::into).collect()),
        }
    }

    /// Same conditions with all data set to zero.
    pub fn homogeneous(&self) -> Self {
        let sides = self.sides.clone().map(|v| {
            v.into_iter()
                .map(|c| match c {
                    PhysicalCondition::Pressure(_) => PhysicalCondition::Pressure(0.0),
                    PhysicalCondition::Flux(_) => PhysicalCondition::Flux(0.0),
                })
                .collect()
        });
        Self { grid: self.grid, sides }
    }

    pub fn has_pressure_faces(&self) -> bool {
        self.sides
            .iter()
            .flatten()
            .any(|c| matches!(c, PhysicalCondition::Pressure(_)))
    }
}

/// Pressure and velocity on a (sub)grid.
#[derive(Clone, Debug, PartialEq)]
pub struct LocalSolution {
    pub p: CellField,
    /// Normal velocities in global orientation on every face of the local grid.
    pub u: FaceField,
    /// Face pressures on each boundary side.
    pub face_pressure: [Vec<f64>; 4],
}

impl LocalSolution {
    /// Outward normal velocities along one boundary side.
    pub fn outward_flux(&self, side: Side) -> Vec<f64> {
        let g = self.p.grid;
        g.boundary_faces(side)
            .into_iter()
            .map(|f| side.outward_sign() * self.u.values[f])
            .collect()
    }

    pub fn zeros(grid: StructuredGrid2D) -> Self {
        Self {
            p: CellField::zeros(grid),
            u: FaceField::zeros(grid),
            face_pressure: Side::ALL.map(|s| vec![0.0; if s.is_vertical() { grid.ny } else { grid.nx }]),
        }
    }

    /// `self += w * other`.
    pub fn add_scaled(&mut self, w: f64, other: &LocalSolution) {
        axpy(&mut self.p.values, w, &other.p.values);
        axpy(&mut self.u.values, w, &other.u.values);
        for (a, b) in self.face_pressure.iter_mut().zip(&other.face_pressure) {
            axpy(a, w, b);
        }
    }
}

fn axpy(y: &mut [f64], a: f64, x: &[f64]) {
    for (y, x) in y.iter_mut().zip(x) {
        *y += a * x;
    }
}

fn harmonic(a: f64, b: f64) -> f64 {
    2.0 * a * b / (a + b)
}

/// Integrated face conductances: `|face| / distance * harmonic(kappa)` inside,
/// `kappa * |face| / (h / 2)` on the boundary.
pub fn transmissibility(kappa: &CellField) -> FaceField {
    let g = kappa.grid;
    let (hx, hy) = (g.hx(), g.hy());
    let mut t = FaceField::zeros(g);
    for f in 0..g.num_faces() {
        let vertical = f < g.num_vertical_faces();
        let (len, dist) = if vertical { (hy, hx) } else { (hx, hy) };
        t.values[f] = match g.face_cells(f) {
            (Some(a), Some(b)) => len / dist * harmonic(kappa.values[a], kappa.values[b]),
            (Some(a), None) | (None, Some(a)) => kappa.values[a] * len / (0.5 * dist),
            (None, None) => unreachable!(),
        };
    }
    t
}

#[derive(Clone, Debug)]
enum Factor {
    Direct(BandedCholesky),
    Iterative(FivePointMatrix),
}

/// An assembled and factorized local operator. The same factorization serves
/// any number of right-hand sides with the same conductivity and face kinds.
#[derive(Clone, Debug)]
pub struct LocalOperator {
    grid: StructuredGrid2D,
    kappa: Vec<f64>,
    kinds: [Vec<FaceKind>; 4],
    anchor: Option<usize>,
    factor: Factor,
}

impl LocalOperator {
    /// `anchor` pins that cell's pressure to zero (needed for pure-flux problems).
    pub fn new(grid: StructuredGrid2D, kappa: &[f64], kinds: [Vec<FaceKind>; 4], anchor: Option<usize>) -> Result<Self> {
        assert_eq!(kappa.len(), grid.num_cells());
        for s in Side::ALL {
            let n = if s.is_vertical() { grid.ny } else { grid.nx };
            if kinds[s.index()].len() != n {
                return Err(Error::Config(format!("{s:?} boundary has {} conditions, expected {n}", kinds[s.index()].len())));
            }
        }
        if let Some(c) = kappa.iter().position(|k| !(*k > 0.0) || !k.is_finite()) {
            return Err(Error::Config(format!("conductivity must be positive, cell {c} has {}", kappa[c])));
        }
        let determined = kinds.iter().flatten().any(|k| !matches!(k, FaceKind::Flux));
        if !determined && anchor.is_none() {
            return Err(Error::Singular("pure flux boundary problem without a pressure anchor".into()));
        }
        for k in kinds.iter().flatten() {
            if let FaceKind::Robin { beta } = k {
                if !(*beta > 0.0) {
                    return Err(Error::Config(format!("Robin parameter must be positive, got {beta}")));
                }
            }
        }

        let (nx, ny) = (grid.nx, grid.ny);
        let (hx, hy) = (grid.hx(), grid.hy());
        let mut a = FivePointMatrix::zeros(nx, ny);
        for j in 0..ny {
            for i in 0..nx {
                let c = j * nx + i;
                if i + 1 < nx {
                    let t = hy / hx * harmonic(kappa[c], kappa[c + 1]);
                    a.diag[c] += t;
                    a.diag[c + 1] += t;
                    a.east[c] = -t;
                }
                if j + 1 < ny {
                    let t = hx / hy * harmonic(kappa[c], kappa[c + nx]);
                    a.diag[c] += t;
                    a.diag[c + nx] += t;
                    a.north[c] = -t;
                }
            }
        }
        let block = grid.whole_block();
        for side in Side::ALL {
            let (len, dist) = if side.is_vertical() { (hy, hx) } else { (hx, hy) };
            for (k, kind) in kinds[side.index()].iter().enumerate() {
                let c = block.side_cell(side, k);
                let t = kappa[c] / (0.5 * dist);
                a.diag[c] += len * boundary_coefficient(*kind, t);
            }
        }
        if let Some(c) = anchor {
            a.pin(c);
        }
        let factor = match BandedCholesky::factor(&a) {
            Ok(f) => Factor::Direct(f),
            Err(_) => Factor::Iterative(a),
        };
        Ok(Self {
            grid,
            kappa: kappa.to_vec(),
            kinds,
            anchor,
            factor,
        })
    }

    pub fn grid(&self) -> &StructuredGrid2D {
        &self.grid
    }

    pub fn kinds(&self) -> &[Vec<FaceKind>; 4] {
        &self.kinds
    }

    pub fn kappa(&self) -> &[f64] {
        &self.kappa
    }

    /// Solve with cell sources `q` (per unit area) and boundary values matching the kinds.
    pub fn solve(&self, q: &[f64], values: &[Vec<f64>; 4]) -> Result<LocalSolution> {
        let grid = self.grid;
        let (nx, ny) = (grid.nx, grid.ny);
        let (hx, hy) = (grid.hx(), grid.hy());
        let area = grid.cell_area();
        let block = grid.whole_block();

        let mut rhs: Vec<f64> = q.iter().map(|q| q * area).collect();
        for side in Side::ALL {
            let (len, dist) = if side.is_vertical() { (hy, hx) } else { (hx, hy) };
            for (k, (kind, &v)) in self.kinds[side.index()].iter().zip(&values[side.index()]).enumerate() {
                let c = block.side_cell(side, k);
                let t = self.kappa[c] / (0.5 * dist);
                rhs[c] += match *kind {
                    FaceKind::Flux => -v * len,
                    other => len * boundary_coefficient(other, t) * v,
                };
            }
        }
        if let Some(c) = self.anchor {
            rhs[c] = 0.0;
        }
        let p = match &self.factor {
            Factor::Direct(f) => f.solve(&rhs),
            Factor::Iterative(a) => conjugate_gradient(a, &rhs, 1e-12)?,
        };

        let mut u = FaceField::zeros(grid);
        for j in 0..ny {
            for i in 0..nx {
                let c = j * nx + i;
                if i + 1 < nx {
                    let t = harmonic(self.kappa[c], self.kappa[c + 1]) / hx;
                    u.values[grid.vface(i + 1, j)] = t * (p[c] - p[c + 1]);
                }
                if j + 1 < ny {
                    let t = harmonic(self.kappa[c], self.kappa[c + nx]) / hy;
                    u.values[grid.hface(i, j + 1)] = t * (p[c] - p[c + nx]);
                }
            }
        }
        let mut face_pressure = Side::ALL.map(|s| vec![0.0; if s.is_vertical() { ny } else { nx }]);
        for side in Side::ALL {
            let dist = if side.is_vertical() { hx } else { hy };
            let faces = grid.boundary_faces(side);
            for (k, (kind, &v)) in self.kinds[side.index()].iter().zip(&values[side.index()]).enumerate() {
                let c = block.side_cell(side, k);
                let t = self.kappa[c] / (0.5 * dist);
                let (out, pf) = boundary_trace(*kind, v, t, p[c]);
                u.values[faces[k]] = side.outward_sign() * out;
                face_pressure[side.index()][k] = pf;
            }
        }
        Ok(LocalSolution {
            p: CellField { grid, values: p },
            u,
            face_pressure,
        })
    }
}

/// Effective per-unit-length conductance of a boundary face with half-cell conductance `t`.
fn boundary_coefficient(kind: FaceKind, t: f64) -> f64 {
    match kind {
        FaceKind::Pressure => t,
        FaceKind::Flux => 0.0,
        FaceKind::Robin { beta } => t / (1.0 + beta * t),
    }
}

/// Outward velocity and face pressure given the adjacent cell pressure.
fn boundary_trace(kind: FaceKind, value: f64, t: f64, pc: f64) -> (f64, f64) {
    match kind {
        FaceKind::Pressure => (t * (pc - value), value),
        FaceKind::Flux => (value, pc - value / t),
        FaceKind::Robin { beta } => {
            let bt = beta * t;
            (t * (pc - value) / (1.0 + bt), (value + bt * pc) / (1.0 + bt))
        }
    }
}

/// Assemble, factorize and solve in one go.
pub fn solve_cell_centered(
    kappa: &CellField,
    q: &CellField,
    bc: &BoundarySpec,
    anchor: Option<usize>,
) -> Result<LocalSolution> {
    let op = LocalOperator::new(kappa.grid, &kappa.values, bc.kinds(), anchor)?;
    op.solve(&q.values, &bc.values())
}

/// The discrete Darcy velocity `-kappa grad p` implied by cell pressures and
/// boundary face pressures, in global orientation.
pub fn darcy_velocity(kappa: &[f64], p: &CellField, face_pressure: &[Vec<f64>; 4]) -> FaceField {
    let grid = p.grid;
    let (nx, ny) = (grid.nx, grid.ny);
    let (hx, hy) = (grid.hx(), grid.hy());
    let p = &p.values;
    let mut u = FaceField::zeros(grid);
    for j in 0..ny {
        for i in 0..nx {
            let c = j * nx + i;
            if i + 1 < nx {
                u.values[grid.vface(i + 1, j)] = harmonic(kappa[c], kappa[c + 1]) / hx * (p[c] - p[c + 1]);
            }
            if j + 1 < ny {
                u.values[grid.hface(i, j + 1)] = harmonic(kappa[c], kappa[c + nx]) / hy * (p[c] - p[c + nx]);
            }
        }
    }
    let block = grid.whole_block();
    for side in Side::ALL {
        let dist = if side.is_vertical() { hx } else { hy };
        for (k, f) in grid.boundary_faces(side).into_iter().enumerate() {
            let c = block.side_cell(side, k);
            let t = kappa[c] / (0.5 * dist);
            u.values[f] = side.outward_sign() * t * (p[c] - face_pressure[side.index()][k]);
        }
    }
    u
}
