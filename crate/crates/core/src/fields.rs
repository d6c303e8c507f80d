//! Gaussian log-permeability generation and on-disk field formats.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use faer::{Col, Mat, Side as FaerSide};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::grid::{CellField, StructuredGrid2D};

/// Largest generated field handled by the dense covariance factorization.
pub const MAX_GAUSSIAN_CELLS: usize = 1 << 16;

/// How the Gaussian sample is scaled before exponentiation.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Normalisation {
    /// Rescale so every cell has this pointwise standard deviation.
    Std(f64),
    /// Use the covariance `|x - y|^(-1/2)` as is.
    Raw,
}

impl Default for Normalisation {
    fn default() -> Self {
        Normalisation::Std(0.4)
    }
}

/// `K(x) = mean_coeff * exp(delta * xi(x))`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GaussianFieldSpec {
    pub delta: f64,
    pub mean_coeff: f64,
    pub seed: u64,
    pub normalisation: Normalisation,
}

impl GaussianFieldSpec {
    pub fn new(delta: f64, seed: u64) -> Self {
        Self {
            delta,
            mean_coeff: 0.8,
            seed,
            normalisation: Normalisation::default(),
        }
    }

    fn validate(&self) -> Result<()> {
        if !(self.delta > 0.0) || !self.delta.is_finite() {
            return Err(Error::Config(format!("delta must be positive, got {}", self.delta)));
        }
        if !(self.mean_coeff > 0.0) || !self.mean_coeff.is_finite() {
            return Err(Error::Config(format!("mean_coeff must be positive, got {}", self.mean_coeff)));
        }
        if let Normalisation::Std(s) = self.normalisation {
            if !(s > 0.0) {
                return Err(Error::Config(format!("normalisation std must be positive, got {s}")));
            }
        }
        Ok(())
    }
}

/// Covariance factor for one grid; draws any number of samples.
pub struct GaussianSampler {
    grid: StructuredGrid2D,
    factor: Mat<f64>,
    pointwise_var: f64,
}

impl GaussianSampler {
    pub fn new(grid: StructuredGrid2D) -> Result<Self> {
        let n = grid.num_cells();
        if n > MAX_GAUSSIAN_CELLS {
            return Err(Error::Capacity(format!(
                "{n} cells exceed the dense Gaussian generator limit of {MAX_GAUSSIAN_CELLS}"
            )));
        }
        let hmin = grid.hx().min(grid.hy());
        let diag = (0.5 * hmin).powf(-0.5);
        let centers: Vec<(f64, f64)> = (0..n).map(|c| grid.cell_center(c)).collect();
        let mut cov = Mat::<f64>::from_fn(n, n, |i, j| {
            if i == j {
                diag
            } else {
                let (xi, yi) = centers[i];
                let (xj, yj) = centers[j];
                (xi - xj).hypot(yi - yj).powf(-0.5)
            }
        });
        let jitter = 1e-8 * diag;
        for i in 0..n {
            cov[(i, i)] += jitter;
        }
        let llt = cov
            .llt(FaerSide::Lower)
            .map_err(|e| Error::Generation(format!("covariance not positive definite: {e:?}")))?;
        Ok(Self {
            grid,
            factor: llt.L().to_owned(),
            pointwise_var: diag + jitter,
        })
    }

    pub fn grid(&self) -> &StructuredGrid2D {
        &self.grid
    }

    /// The unscaled zero-mean sample `xi` for a seed.
    pub fn sample_xi(&self, seed: u64) -> Vec<f64> {
        let n = self.grid.num_cells();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let z = Col::<f64>::from_fn(n, |_| StandardNormal.sample(&mut rng));
        let x = &self.factor * &z;
        (0..n).map(|i| x[i]).collect()
    }

    pub fn generate(&self, spec: &GaussianFieldSpec) -> Result<CellField> {
        spec.validate()?;
        let xi = self.sample_xi(spec.seed);
        let scale = match spec.normalisation {
            Normalisation::Std(s) => s / self.pointwise_var.sqrt(),
            Normalisation::Raw => 1.0,
        };
        let values = xi.iter().map(|x| spec.mean_coeff * (spec.delta * scale * x).exp()).collect();
        let field = CellField::from_values(self.grid, values)?;
        if field.values.iter().any(|k| !(*k > 0.0) || !k.is_finite()) {
            return Err(Error::Generation("permeability overflowed; reduce delta".into()));
        }
        Ok(field)
    }
}

pub fn generate_gaussian(grid: StructuredGrid2D, spec: &GaussianFieldSpec) -> Result<CellField> {
    spec.validate()?;
    GaussianSampler::new(grid)?.generate(spec)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FieldFormat {
    PlainMatrix,
    Vtk,
}

impl FieldFormat {
    /// `.vtk` files are VTK, everything else plain-matrix.
    pub fn from_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some("vtk") => FieldFormat::Vtk,
            _ => FieldFormat::PlainMatrix,
        }
    }
}

pub fn format_cell_field(field: &CellField, format: FieldFormat, name: &str) -> String {
    let g = field.grid;
    let mut out = String::new();
    match format {
        FieldFormat::PlainMatrix => {
            writeln!(out, "{} {}", g.nx, g.ny).unwrap();
            for row in field.values.chunks(g.nx) {
                let line: Vec<String> = row.iter().map(|v| format!("{v:.16e}")).collect();
                writeln!(out, "{}", line.join(" ")).unwrap();
            }
        }
        FieldFormat::Vtk => {
            writeln!(out, "# vtk DataFile Version 3.0").unwrap();
            writeln!(out, "{name}").unwrap();
            writeln!(out, "ASCII").unwrap();
            writeln!(out, "DATASET STRUCTURED_POINTS").unwrap();
            writeln!(out, "DIMENSIONS {} {} 1", g.nx + 1, g.ny + 1).unwrap();
            writeln!(out, "ORIGIN 0 0 0").unwrap();
            writeln!(out, "SPACING {:.16e} {:.16e} 1", g.hx(), g.hy()).unwrap();
            writeln!(out, "CELL_DATA {}", g.num_cells()).unwrap();
            writeln!(out, "SCALARS {name} double 1").unwrap();
            writeln!(out, "LOOKUP_TABLE default").unwrap();
            for v in &field.values {
                writeln!(out, "{v:.16e}").unwrap();
            }
        }
    }
    out
}

pub fn save_cell_field(path: &Path, field: &CellField, format: FieldFormat, name: &str) -> Result<()> {
    fs::write(path, format_cell_field(field, format, name)).map_err(|e| Error::io(path, e))
}

/// Parse a cell field in either format and check it against `grid`.
pub fn parse_cell_field(text: &str, grid: StructuredGrid2D) -> std::result::Result<CellField, String> {
    let values = if text.trim_start().starts_with("# vtk") {
        parse_vtk(text, &grid)?
    } else {
        parse_plain(text, &grid)?
    };
    CellField::from_values(grid, values).map_err(|e| e.to_string())
}

fn parse_number(tok: &str) -> std::result::Result<f64, String> {
    let v: f64 = tok.parse().map_err(|_| format!("cannot parse {tok:?} as a number"))?;
    if !v.is_finite() {
        return Err(format!("non-finite value {tok:?}"));
    }
    Ok(v)
}

fn parse_plain(text: &str, grid: &StructuredGrid2D) -> std::result::Result<Vec<f64>, String> {
    let mut lines = text.lines().filter(|l| !l.trim().is_empty());
    let header = lines.next().ok_or("empty file")?;
    let dims: Vec<&str> = header.split_whitespace().collect();
    let [nx, ny] = dims[..] else {
        return Err(format!("header {header:?} is not \"nx ny\""));
    };
    let nx: usize = nx.parse().map_err(|_| format!("bad nx {nx:?}"))?;
    let ny: usize = ny.parse().map_err(|_| format!("bad ny {ny:?}"))?;
    if (nx, ny) != (grid.nx, grid.ny) {
        return Err(format!("file is {nx}x{ny}, grid is {}x{}", grid.nx, grid.ny));
    }
    let mut values = Vec::with_capacity(nx * ny);
    for (r, line) in lines.enumerate() {
        let row: Vec<f64> = line.split_whitespace().map(parse_number).collect::<std::result::Result<_, _>>()?;
        if row.len() != nx {
            return Err(format!("row {} has {} values, expected {nx}", r + 1, row.len()));
        }
        values.extend(row);
    }
    if values.len() != nx * ny {
        return Err(format!("found {} rows, expected {ny}", values.len() / nx.max(1)));
    }
    Ok(values)
}

fn parse_vtk(text: &str, grid: &StructuredGrid2D) -> std::result::Result<Vec<f64>, String> {
    let mut lines = text.lines();
    let mut dims = None;
    for line in lines.by_ref() {
        let mut tok = line.split_whitespace();
        match tok.next() {
            Some("DIMENSIONS") => {
                let d: Vec<usize> = tok.filter_map(|t| t.parse().ok()).collect();
                dims = Some(d);
            }
            Some("LOOKUP_TABLE") => break,
            _ => {}
        }
    }
    let d = dims.ok_or("missing DIMENSIONS")?;
    if d.len() < 2 || (d[0], d[1]) != (grid.nx + 1, grid.ny + 1) {
        return Err(format!("DIMENSIONS {d:?} do not match a {}x{} grid", grid.nx, grid.ny));
    }
    let values: Vec<f64> = lines
        .flat_map(str::split_whitespace)
        .map(parse_number)
        .collect::<std::result::Result<_, _>>()?;
    if values.len() != grid.num_cells() {
        return Err(format!("{} cell values, expected {}", values.len(), grid.num_cells()));
    }
    Ok(values)
}

/// Load a strictly positive permeability field.
pub fn load_field(path: &Path, grid: StructuredGrid2D) -> Result<CellField> {
    let bad = |reason: String| Error::FieldFile { path: path.to_path_buf(), reason };
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let field = parse_cell_field(&text, grid).map_err(bad)?;
    if let Some(c) = field.values.iter().position(|k| *k <= 0.0) {
        return Err(bad(format!("non-positive permeability {} in cell {c}", field.values[c])));
    }
    Ok(field)
}
