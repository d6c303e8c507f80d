//! Uniform cell-centered grids, face/cell fields and the non-overlapping
//! rectangular domain decomposition.
//!
//! Cells are numbered row-major with row 0 at the bottom. Faces come in two
//! families: vertical faces (normal +x), numbered `j * (nx + 1) + i`, followed
//! by horizontal faces (normal +y), numbered `nv + j * nx + i`. Every face
//! value is a normal velocity in that fixed global orientation.

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Side {
    West,
    East,
    South,
    North,
}

impl Side {
    pub const ALL: [Side; 4] = [Side::West, Side::East, Side::South, Side::North];

    /// +1 when the outward normal of this side points along the global
    /// face orientation, -1 otherwise.
    pub fn outward_sign(self) -> f64 {
        match self {
            Side::West | Side::South => -1.0,
            Side::East | Side::North => 1.0,
        }
    }

    pub fn index(self) -> usize {
        match self {
            Side::West => 0,
            Side::East => 1,
            Side::South => 2,
            Side::North => 3,
        }
    }

    pub fn is_vertical(self) -> bool {
        matches!(self, Side::West | Side::East)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FaceOrientation {
    /// Normal along +x.
    Vertical,
    /// Normal along +y.
    Horizontal,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StructuredGrid2D {
    pub nx: usize,
    pub ny: usize,
    pub lx: f64,
    pub ly: f64,
}

impl StructuredGrid2D {
    pub fn new(nx: usize, ny: usize, lx: f64, ly: f64) -> Result<Self> {
        if nx == 0 || ny == 0 {
            return Err(Error::Config(format!("grid needs at least one cell per direction, got {nx}x{ny}")));
        }
        if !(lx > 0.0 && ly > 0.0 && lx.is_finite() && ly.is_finite()) {
            return Err(Error::Config(format!("grid lengths must be positive, got {lx} x {ly}")));
        }
        Ok(Self { nx, ny, lx, ly })
    }

    pub fn hx(&self) -> f64 {
        self.lx / self.nx as f64
    }

    pub fn hy(&self) -> f64 {
        self.ly / self.ny as f64
    }

    pub fn cell_area(&self) -> f64 {
        self.hx() * self.hy()
    }

    pub fn num_cells(&self) -> usize {
        self.nx * self.ny
    }

    pub fn num_vertical_faces(&self) -> usize {
        (self.nx + 1) * self.ny
    }

    pub fn num_faces(&self) -> usize {
        self.num_vertical_faces() + self.nx * (self.ny + 1)
    }

    #[inline]
    pub fn cell(&self, i: usize, j: usize) -> usize {
        j * self.nx + i
    }

    #[inline]
    pub fn cell_coords(&self, c: usize) -> (usize, usize) {
        (c % self.nx, c / self.nx)
    }

    pub fn cell_center(&self, c: usize) -> (f64, f64) {
        let (i, j) = self.cell_coords(c);
        ((i as f64 + 0.5) * self.hx(), (j as f64 + 0.5) * self.hy())
    }

    /// Vertical face on the west edge of column `i` (`i == nx` is the east boundary).
    #[inline]
    pub fn vface(&self, i: usize, j: usize) -> usize {
        j * (self.nx + 1) + i
    }

    /// Horizontal face on the south edge of row `j` (`j == ny` is the north boundary).
    #[inline]
    pub fn hface(&self, i: usize, j: usize) -> usize {
        self.num_vertical_faces() + j * self.nx + i
    }

    pub fn face_orientation(&self, f: usize) -> FaceOrientation {
        if f < self.num_vertical_faces() {
            FaceOrientation::Vertical
        } else {
            FaceOrientation::Horizontal
        }
    }

    pub fn face_length(&self, f: usize) -> f64 {
        match self.face_orientation(f) {
            FaceOrientation::Vertical => self.hy(),
            FaceOrientation::Horizontal => self.hx(),
        }
    }

    /// Cells on the negative and positive side of a face (`None` outside the grid).
    pub fn face_cells(&self, f: usize) -> (Option<usize>, Option<usize>) {
        let nv = self.num_vertical_faces();
        if f < nv {
            let (i, j) = (f % (self.nx + 1), f / (self.nx + 1));
            let minus = (i > 0).then(|| self.cell(i - 1, j));
            let plus = (i < self.nx).then(|| self.cell(i, j));
            (minus, plus)
        } else {
            let g = f - nv;
            let (i, j) = (g % self.nx, g / self.nx);
            let minus = (j > 0).then(|| self.cell(i, j - 1));
            let plus = (j < self.ny).then(|| self.cell(i, j));
            (minus, plus)
        }
    }

    /// Faces of a cell in `[west, east, south, north]` order.
    #[inline]
    pub fn cell_faces(&self, c: usize) -> [usize; 4] {
        let (i, j) = self.cell_coords(c);
        [self.vface(i, j), self.vface(i + 1, j), self.hface(i, j), self.hface(i, j + 1)]
    }

    pub fn is_boundary_face(&self, f: usize) -> bool {
        let (a, b) = self.face_cells(f);
        a.is_none() || b.is_none()
    }

    /// Boundary faces on one side of the domain, in increasing coordinate order.
    pub fn boundary_faces(&self, side: Side) -> Vec<usize> {
        self.whole_block().side_faces(self, side)
    }

    pub fn whole_block(&self) -> CellBlock {
        CellBlock {
            i0: 0,
            j0: 0,
            nx: self.nx,
            ny: self.ny,
        }
    }
}

/// A rectangle of whole cells `[i0, i0 + nx) x [j0, j0 + ny)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct CellBlock {
    pub i0: usize,
    pub j0: usize,
    pub nx: usize,
    pub ny: usize,
}

impl CellBlock {
    pub fn num_cells(&self) -> usize {
        self.nx * self.ny
    }

    /// Grid of the same spacing restricted to this block.
    pub fn local_grid(&self, grid: &StructuredGrid2D) -> StructuredGrid2D {
        StructuredGrid2D {
            nx: self.nx,
            ny: self.ny,
            lx: grid.hx() * self.nx as f64,
            ly: grid.hy() * self.ny as f64,
        }
    }

    /// Global index of local cell `(i, j)`.
    #[inline]
    pub fn global_cell(&self, grid: &StructuredGrid2D, i: usize, j: usize) -> usize {
        grid.cell(self.i0 + i, self.j0 + j)
    }

    /// Global cell indices in local row-major order.
    pub fn cells(&self, grid: &StructuredGrid2D) -> Vec<usize> {
        let mut out = Vec::with_capacity(self.num_cells());
        for j in 0..self.ny {
            for i in 0..self.nx {
                out.push(self.global_cell(grid, i, j));
            }
        }
        out
    }

    pub fn side_len(&self, side: Side) -> usize {
        if side.is_vertical() {
            self.ny
        } else {
            self.nx
        }
    }

    /// Global faces along one side of the block, in increasing coordinate order.
    pub fn side_faces(&self, grid: &StructuredGrid2D, side: Side) -> Vec<usize> {
        match side {
            Side::West => (0..self.ny).map(|j| grid.vface(self.i0, self.j0 + j)).collect(),
            Side::East => (0..self.ny).map(|j| grid.vface(self.i0 + self.nx, self.j0 + j)).collect(),
            Side::South => (0..self.nx).map(|i| grid.hface(self.i0 + i, self.j0)).collect(),
            Side::North => (0..self.nx).map(|i| grid.hface(self.i0 + i, self.j0 + self.ny)).collect(),
        }
    }

    /// Global index of a face of the block's local grid.
    pub fn global_face(&self, grid: &StructuredGrid2D, local_face: usize) -> usize {
        let nv = (self.nx + 1) * self.ny;
        if local_face < nv {
            let (i, j) = (local_face % (self.nx + 1), local_face / (self.nx + 1));
            grid.vface(self.i0 + i, self.j0 + j)
        } else {
            let f = local_face - nv;
            grid.hface(self.i0 + f % self.nx, self.j0 + f / self.nx)
        }
    }

    /// Local cell adjacent to position `k` along `side`.
    pub fn side_cell(&self, side: Side, k: usize) -> usize {
        let (i, j) = match side {
            Side::West => (0, k),
            Side::East => (self.nx - 1, k),
            Side::South => (k, 0),
            Side::North => (k, self.ny - 1),
        };
        j * self.nx + i
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct CellField {
    pub grid: StructuredGrid2D,
    pub values: Vec<f64>,
}

impl CellField {
    pub fn zeros(grid: StructuredGrid2D) -> Self {
        Self::constant(grid, 0.0)
    }

    pub fn constant(grid: StructuredGrid2D, value: f64) -> Self {
        Self {
            grid,
            values: vec![value; grid.num_cells()],
        }
    }

    pub fn from_fn(grid: StructuredGrid2D, f: impl Fn(f64, f64) -> f64) -> Self {
        let values = (0..grid.num_cells())
            .map(|c| {
                let (x, y) = grid.cell_center(c);
                f(x, y)
            })
            .collect();
        Self { grid, values }
    }

    pub fn from_values(grid: StructuredGrid2D, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.num_cells() {
            return Err(Error::Config(format!(
                "cell field has {} values, grid has {} cells",
                values.len(),
                grid.num_cells()
            )));
        }
        if let Some(c) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::Config(format!("non-finite value in cell {c}")));
        }
        Ok(Self { grid, values })
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    /// Area-weighted integral over the domain.
    pub fn integral(&self) -> f64 {
        self.values.iter().sum::<f64>() * self.grid.cell_area()
    }

    pub fn restrict(&self, block: &CellBlock) -> Vec<f64> {
        block.cells(&self.grid).into_iter().map(|c| self.values[c]).collect()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct FaceField {
    pub grid: StructuredGrid2D,
    pub values: Vec<f64>,
}

impl FaceField {
    pub fn zeros(grid: StructuredGrid2D) -> Self {
        Self {
            grid,
            values: vec![0.0; grid.num_faces()],
        }
    }

    /// Field from a velocity function sampled at face midpoints.
    pub fn from_velocity(grid: StructuredGrid2D, f: impl Fn(f64, f64) -> (f64, f64)) -> Self {
        let (hx, hy) = (grid.hx(), grid.hy());
        let mut out = Self::zeros(grid);
        for j in 0..grid.ny {
            for i in 0..=grid.nx {
                out.values[grid.vface(i, j)] = f(i as f64 * hx, (j as f64 + 0.5) * hy).0;
            }
        }
        for j in 0..=grid.ny {
            for i in 0..grid.nx {
                out.values[grid.hface(i, j)] = f((i as f64 + 0.5) * hx, j as f64 * hy).1;
            }
        }
        out
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Net outflow through the domain boundary, integrated over face lengths.
    pub fn boundary_outflow(&self) -> f64 {
        Side::ALL
            .iter()
            .map(|&side| {
                let len = if side.is_vertical() { self.grid.hy() } else { self.grid.hx() };
                self.grid
                    .boundary_faces(side)
                    .into_iter()
                    .map(|f| side.outward_sign() * self.values[f] * len)
                    .sum::<f64>()
            })
            .sum()
    }
}

/// Discrete divergence: (outflow - inflow) / cell area, per cell.
pub fn divergence(u: &FaceField) -> CellField {
    let grid = u.grid;
    let (hx, hy) = (grid.hx(), grid.hy());
    let area = grid.cell_area();
    let values = (0..grid.num_cells())
        .map(|c| {
            let [w, e, s, n] = grid.cell_faces(c);
            ((u.values[e] - u.values[w]) * hy + (u.values[n] - u.values[s]) * hx) / area
        })
        .collect();
    CellField { grid, values }
}

/// Scale used by conservation checks: the larger of the source magnitude and
/// the divergence magnitude a flux of size `max|u|` can produce on one cell.
pub fn conservation_scale(u: &FaceField, q: &CellField) -> f64 {
    let h = u.grid.hx().min(u.grid.hy());
    let qmax = q.values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    qmax.max(u.max_abs() / h).max(f64::MIN_POSITIVE)
}

/// Largest cell-wise `|div u - q|` relative to [`conservation_scale`].
pub fn conservation_residual(u: &FaceField, q: &CellField) -> f64 {
    let div = divergence(u);
    let worst = div
        .values
        .iter()
        .zip(&q.values)
        .fold(0.0f64, |m, (d, s)| m.max((d - s).abs()));
    worst / conservation_scale(u, q)
}

#[derive(Clone, Debug)]
pub struct Subdomain {
    pub id: usize,
    /// Position in the subdomain lattice.
    pub sx: usize,
    pub sy: usize,
    pub block: CellBlock,
    /// Interface on each side (indexed by [`Side::index`]), `None` on the domain boundary.
    pub neighbors: [Option<usize>; 4],
}

impl Subdomain {
    pub fn interface(&self, side: Side) -> Option<usize> {
        self.neighbors[side.index()]
    }
}

#[derive(Clone, Debug)]
pub struct Interface {
    pub id: usize,
    pub orientation: FaceOrientation,
    /// Subdomain on the west/south side; its outward normal equals the interface normal.
    pub minus: usize,
    /// Subdomain on the east/north side.
    pub plus: usize,
    /// Fine faces in increasing coordinate order.
    pub faces: Vec<usize>,
    /// Offset of this interface's first face in the skeleton edge numbering.
    pub skeleton_offset: usize,
    pub face_length: f64,
}

impl Interface {
    pub fn num_edges(&self) -> usize {
        self.faces.len()
    }

    pub fn length(&self) -> f64 {
        self.face_length * self.faces.len() as f64
    }

    /// The side of the interface as seen from the minus subdomain.
    pub fn minus_side(&self) -> Side {
        match self.orientation {
            FaceOrientation::Vertical => Side::East,
            FaceOrientation::Horizontal => Side::North,
        }
    }

    pub fn plus_side(&self) -> Side {
        match self.orientation {
            FaceOrientation::Vertical => Side::West,
            FaceOrientation::Horizontal => Side::South,
        }
    }

    /// `ň · ň^i` for subdomain `sub`: +1 on the minus side, -1 on the plus side.
    pub fn normal_sign(&self, sub: usize) -> f64 {
        if sub == self.minus {
            1.0
        } else {
            debug_assert_eq!(sub, self.plus);
            -1.0
        }
    }
}

#[derive(Clone, Debug)]
pub struct DomainDecomposition {
    pub grid: StructuredGrid2D,
    pub nsx: usize,
    pub nsy: usize,
    pub subdomains: Vec<Subdomain>,
    pub interfaces: Vec<Interface>,
    /// Skeleton edge index of every fine face (`None` off the skeleton).
    face_to_skeleton: Vec<Option<usize>>,
    num_skeleton_edges: usize,
}

impl DomainDecomposition {
    pub fn new(grid: StructuredGrid2D, nsx: usize, nsy: usize) -> Result<Self> {
        if nsx == 0 || nsy == 0 {
            return Err(Error::Config("subdomain counts must be positive".into()));
        }
        if grid.nx % nsx != 0 || grid.ny % nsy != 0 {
            return Err(Error::Config(format!(
                "{}x{} cells cannot be split evenly into {nsx}x{nsy} subdomains",
                grid.nx, grid.ny
            )));
        }
        let (bx, by) = (grid.nx / nsx, grid.ny / nsy);
        let sub_id = |sx: usize, sy: usize| sy * nsx + sx;

        let mut interfaces = Vec::new();
        let mut face_to_skeleton = vec![None; grid.num_faces()];
        let mut offset = 0;
        let mut push = |orientation, minus, plus, faces: Vec<usize>, face_length| {
            let id = interfaces.len();
            for (k, &f) in faces.iter().enumerate() {
                face_to_skeleton[f] = Some(offset + k);
            }
            let n = faces.len();
            interfaces.push(Interface {
                id,
                orientation,
                minus,
                plus,
                faces,
                skeleton_offset: offset,
                face_length,
            });
            offset += n;
            id
        };

        let mut neighbors = vec![[None; 4]; nsx * nsy];
        for sy in 0..nsy {
            for sx in 0..nsx {
                let me = sub_id(sx, sy);
                let block = CellBlock { i0: sx * bx, j0: sy * by, nx: bx, ny: by };
                if sx + 1 < nsx {
                    let other = sub_id(sx + 1, sy);
                    let faces = block.side_faces(&grid, Side::East);
                    let id = push(FaceOrientation::Vertical, me, other, faces, grid.hy());
                    neighbors[me][Side::East.index()] = Some(id);
                    neighbors[other][Side::West.index()] = Some(id);
                }
                if sy + 1 < nsy {
                    let other = sub_id(sx, sy + 1);
                    let faces = block.side_faces(&grid, Side::North);
                    let id = push(FaceOrientation::Horizontal, me, other, faces, grid.hx());
                    neighbors[me][Side::North.index()] = Some(id);
                    neighbors[other][Side::South.index()] = Some(id);
                }
            }
        }

        let subdomains = (0..nsy)
            .flat_map(|sy| (0..nsx).map(move |sx| (sx, sy)))
            .map(|(sx, sy)| {
                let id = sub_id(sx, sy);
                Subdomain {
                    id,
                    sx,
                    sy,
                    block: CellBlock { i0: sx * bx, j0: sy * by, nx: bx, ny: by },
                    neighbors: neighbors[id],
                }
            })
            .collect();

        Ok(Self {
            grid,
            nsx,
            nsy,
            subdomains,
            interfaces,
            face_to_skeleton,
            num_skeleton_edges: offset,
        })
    }

    pub fn num_subdomains(&self) -> usize {
        self.subdomains.len()
    }

    pub fn num_interfaces(&self) -> usize {
        self.interfaces.len()
    }

    pub fn num_skeleton_edges(&self) -> usize {
        self.num_skeleton_edges
    }

    pub fn skeleton_index(&self, face: usize) -> Option<usize> {
        self.face_to_skeleton[face]
    }

    /// Skeleton faces in skeleton-edge order.
    pub fn skeleton_faces(&self) -> Vec<usize> {
        self.interfaces.iter().flat_map(|i| i.faces.iter().copied()).collect()
    }

    /// Subdomain size along each axis (the coarse scale H).
    pub fn subdomain_size(&self) -> (f64, f64) {
        let b = self.subdomains[0].block;
        (b.nx as f64 * self.grid.hx(), b.ny as f64 * self.grid.hy())
    }

    /// Faces of `sub` lying on the physical boundary, with their side.
    pub fn physical_boundary_faces(&self, sub: usize) -> Vec<(Side, usize)> {
        let s = &self.subdomains[sub];
        Side::ALL
            .iter()
            .filter(|&&side| s.interface(side).is_none())
            .flat_map(|&side| s.block.side_faces(&self.grid, side).into_iter().map(move |f| (side, f)))
            .collect()
    }

    /// Which subdomain owns a cell.
    pub fn subdomain_of_cell(&self, c: usize) -> usize {
        let (i, j) = self.grid.cell_coords(c);
        let b = self.subdomains[0].block;
        (j / b.ny) * self.nsx + i / b.nx
    }
}

#[cfg(test)]
mod tests {
    use std::collections::HashSet;

    use super::*;

    #[test]
    fn grid_counts() {
        let g = StructuredGrid2D::new(64, 64, 1.0, 1.0).unwrap();
        assert_eq!(g.hx(), 1.0 / 64.0);
        assert_eq!(g.hy(), 1.0 / 64.0);
        let g = StructuredGrid2D::new(1, 1, 1.0, 1.0).unwrap();
        assert_eq!(g.num_cells(), 1);
        assert_eq!(g.num_faces(), 4);
        let g = StructuredGrid2D::new(200, 200, 1.0, 1.0).unwrap();
        assert_eq!(g.num_faces(), 201 * 200 + 200 * 201);
        assert_eq!(g.num_faces(), 80400);
    }

    #[test]
    fn bad_grids_rejected() {
        assert!(matches!(StructuredGrid2D::new(0, 4, 1.0, 1.0), Err(Error::Config(_))));
        assert!(matches!(StructuredGrid2D::new(4, 4, -1.0, 1.0), Err(Error::Config(_))));
        assert!(matches!(StructuredGrid2D::new(4, 4, 1.0, 0.0), Err(Error::Config(_))));
    }

    #[test]
    fn interior_faces_have_two_cells() {
        let g = StructuredGrid2D::new(5, 3, 1.0, 1.0).unwrap();
        let mut boundary = 0;
        for f in 0..g.num_faces() {
            match g.face_cells(f) {
                (Some(a), Some(b)) => assert_ne!(a, b),
                (None, Some(_)) | (Some(_), None) => boundary += 1,
                (None, None) => panic!("orphan face {f}"),
            }
        }
        assert_eq!(boundary, 2 * (5 + 3));
        for c in 0..g.num_cells() {
            let [w, e, s, n] = g.cell_faces(c);
            assert_eq!(g.face_cells(w).1, Some(c));
            assert_eq!(g.face_cells(e).0, Some(c));
            assert_eq!(g.face_cells(s).1, Some(c));
            assert_eq!(g.face_cells(n).0, Some(c));
        }
    }

    #[test]
    fn decomposition_counts() {
        let g = StructuredGrid2D::new(64, 64, 1.0, 1.0).unwrap();
        let dd = DomainDecomposition::new(g, 4, 4).unwrap();
        assert_eq!(dd.num_subdomains(), 16);
        assert_eq!(dd.num_interfaces(), 24);
        assert!(dd.subdomains.iter().all(|s| s.block.nx == 16 && s.block.ny == 16));

        let dd = DomainDecomposition::new(g, 1, 1).unwrap();
        assert_eq!(dd.num_subdomains(), 1);
        assert_eq!(dd.num_interfaces(), 0);
        assert_eq!(dd.num_skeleton_edges(), 0);

        let g = StructuredGrid2D::new(200, 200, 1.0, 1.0).unwrap();
        let dd = DomainDecomposition::new(g, 10, 10).unwrap();
        assert_eq!(dd.num_subdomains(), 100);
        assert_eq!(dd.num_interfaces(), 180);
        assert!(dd.subdomains.iter().all(|s| s.block.nx == 20 && s.block.ny == 20));
    }

    #[test]
    fn indivisible_partition_rejected() {
        let g = StructuredGrid2D::new(10, 10, 1.0, 1.0).unwrap();
        assert!(matches!(DomainDecomposition::new(g, 3, 2), Err(Error::Config(_))));
    }

    #[test]
    fn decomposition_tiles_grid_and_skeleton() {
        let g = StructuredGrid2D::new(12, 6, 2.0, 1.0).unwrap();
        let dd = DomainDecomposition::new(g, 3, 2).unwrap();
        assert_eq!(dd.num_interfaces(), 2 * 2 + 3);

        let mut seen = vec![0; g.num_cells()];
        for s in &dd.subdomains {
            for c in s.block.cells(&g) {
                seen[c] += 1;
                assert_eq!(dd.subdomain_of_cell(c), s.id);
            }
        }
        assert!(seen.iter().all(|&n| n == 1));

        // Subdomain boundary faces = skeleton faces (each once) + physical boundary faces.
        let mut all_boundary = HashSet::new();
        for s in &dd.subdomains {
            for side in Side::ALL {
                all_boundary.extend(s.block.side_faces(&g, side));
            }
        }
        let skeleton = dd.skeleton_faces();
        let skeleton_set: HashSet<_> = skeleton.iter().copied().collect();
        assert_eq!(skeleton.len(), skeleton_set.len());
        let mut physical = HashSet::new();
        for s in 0..dd.num_subdomains() {
            for (_, f) in dd.physical_boundary_faces(s) {
                assert!(physical.insert(f));
            }
        }
        assert!(skeleton_set.is_disjoint(&physical));
        let union: HashSet<_> = skeleton_set.union(&physical).copied().collect();
        assert_eq!(union, all_boundary);
        for (k, &f) in skeleton.iter().enumerate() {
            assert_eq!(dd.skeleton_index(f), Some(k));
        }
    }

    #[test]
    fn divergence_of_constant_and_linear_fields() {
        let g = StructuredGrid2D::new(8, 5, 2.0, 1.0).unwrap();
        let u = FaceField::from_velocity(g, |_, _| (0.7, -1.3));
        assert!(divergence(&u).values.iter().all(|d| d.abs() < 1e-12));
        let u = FaceField::from_velocity(g, |x, _| (x, 0.0));
        assert!(divergence(&u).values.iter().all(|d| (d - 1.0).abs() < 1e-12));
    }

    #[test]
    fn discrete_divergence_theorem() {
        let g = StructuredGrid2D::new(7, 9, 1.5, 0.8).unwrap();
        let u = FaceField::from_velocity(g, |x, y| ((3.0 * x * y).sin() + x * x, (x - 2.0 * y).cos()));
        let total = divergence(&u).integral();
        let outflow = u.boundary_outflow();
        assert!((total - outflow).abs() <= 1e-12 * outflow.abs().max(1.0));
    }
}
