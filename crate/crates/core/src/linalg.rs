//! Sparse direct and iterative solvers for five-point cell systems.

use crate::error::{Error, Result};

/// Symmetric five-point operator on an `nx x ny` block of cells, stored as
/// the diagonal plus the (symmetric) couplings to the east and north neighbours.
#[derive(Clone, Debug)]
pub struct FivePointMatrix {
    pub nx: usize,
    pub ny: usize,
    pub diag: Vec<f64>,
    /// `east[c]` couples cell `c` with `c + 1` (unused in the last column).
    pub east: Vec<f64>,
    /// `north[c]` couples cell `c` with `c + nx` (unused in the last row).
    pub north: Vec<f64>,
}

impl FivePointMatrix {
    pub fn zeros(nx: usize, ny: usize) -> Self {
        let n = nx * ny;
        Self {
            nx,
            ny,
            diag: vec![0.0; n],
            east: vec![0.0; n],
            north: vec![0.0; n],
        }
    }

    pub fn n(&self) -> usize {
        self.nx * self.ny
    }

    pub fn apply(&self, x: &[f64], y: &mut [f64]) {
        let (nx, ny) = (self.nx, self.ny);
        for c in 0..self.n() {
            y[c] = self.diag[c] * x[c];
        }
        for j in 0..ny {
            for i in 0..nx {
                let c = j * nx + i;
                if i + 1 < nx {
                    y[c] += self.east[c] * x[c + 1];
                    y[c + 1] += self.east[c] * x[c];
                }
                if j + 1 < ny {
                    y[c] += self.north[c] * x[c + nx];
                    y[c + nx] += self.north[c] * x[c];
                }
            }
        }
    }

    /// Replace the equation of cell `c` by `x_c = rhs_c`, dropping its couplings
    /// symmetrically. Only exact for a pinned value of zero.
    pub fn pin(&mut self, c: usize) {
        let (nx, ny) = (self.nx, self.ny);
        let (i, j) = (c % nx, c / nx);
        self.diag[c] = 1.0;
        if i + 1 < nx {
            self.east[c] = 0.0;
        }
        if i > 0 {
            self.east[c - 1] = 0.0;
        }
        if j + 1 < ny {
            self.north[c] = 0.0;
        }
        if j > 0 {
            self.north[c - nx] = 0.0;
        }
    }
}

/// Banded Cholesky factor `A = L L^T` of a [`FivePointMatrix`], ordered along
/// the shorter block dimension so the half bandwidth is `min(nx, ny)`.
#[derive(Clone, Debug)]
pub struct BandedCholesky {
    n: usize,
    bw: usize,
    /// Row `r` stores `L[r][r - bw ..= r]`.
    band: Vec<f64>,
    /// Band position of each cell.
    perm: Vec<usize>,
}

impl BandedCholesky {
    pub fn factor(a: &FivePointMatrix) -> Result<Self> {
        let (nx, ny) = (a.nx, a.ny);
        let n = a.n();
        let row_major = nx <= ny;
        let bw = if row_major { nx } else { ny };
        let perm: Vec<usize> = (0..n)
            .map(|c| if row_major { c } else { (c % nx) * ny + c / nx })
            .collect();
        let w = bw + 1;
        let mut band = vec![0.0; n * w];
        let at = |r: usize, col: usize| r * w + (col + bw - r);
        for c in 0..n {
            let r = perm[c];
            band[at(r, r)] = a.diag[c];
            let (i, j) = (c % nx, c / nx);
            if i + 1 < nx && a.east[c] != 0.0 {
                let (p, q) = ordered(r, perm[c + 1]);
                band[at(q, p)] = a.east[c];
            }
            if j + 1 < ny && a.north[c] != 0.0 {
                let (p, q) = ordered(r, perm[c + nx]);
                band[at(q, p)] = a.north[c];
            }
        }
        for r in 0..n {
            let lo = r.saturating_sub(bw);
            for col in lo..=r {
                let klo = lo.max(col.saturating_sub(bw));
                let mut s = band[at(r, col)];
                for k in klo..col {
                    s -= band[at(r, k)] * band[at(col, k)];
                }
                if col == r {
                    if !(s > 0.0) || !s.is_finite() {
                        return Err(Error::Singular(format!("non-positive pivot {s:e} at row {r}")));
                    }
                    band[at(r, r)] = s.sqrt();
                } else {
                    band[at(r, col)] = s / band[at(col, col)];
                }
            }
        }
        Ok(Self { n, bw, band, perm })
    }

    pub fn solve(&self, rhs: &[f64]) -> Vec<f64> {
        let (n, bw, w) = (self.n, self.bw, self.bw + 1);
        let at = |r: usize, col: usize| r * w + (col + bw - r);
        let mut y = vec![0.0; n];
        for (c, &v) in rhs.iter().enumerate() {
            y[self.perm[c]] = v;
        }
        for r in 0..n {
            let lo = r.saturating_sub(bw);
            let mut s = y[r];
            for k in lo..r {
                s -= self.band[at(r, k)] * y[k];
            }
            y[r] = s / self.band[at(r, r)];
        }
        for r in (0..n).rev() {
            let hi = (r + bw).min(n - 1);
            let mut s = y[r];
            for k in r + 1..=hi {
                s -= self.band[at(k, r)] * y[k];
            }
            y[r] = s / self.band[at(r, r)];
        }
        self.perm.iter().map(|&p| y[p]).collect()
    }
}

fn ordered(a: usize, b: usize) -> (usize, usize) {
    if a < b {
        (a, b)
    } else {
        (b, a)
    }
}

/// Jacobi-preconditioned conjugate gradients to a relative residual of `tol`.
pub fn conjugate_gradient(a: &FivePointMatrix, rhs: &[f64], tol: f64) -> Result<Vec<f64>> {
    let n = a.n();
    let norm = |v: &[f64]| v.iter().map(|x| x * x).sum::<f64>().sqrt();
    let bnorm = norm(rhs);
    let mut x = vec![0.0; n];
    if bnorm == 0.0 {
        return Ok(x);
    }
    let inv_diag: Vec<f64> = a.diag.iter().map(|d| if *d != 0.0 { 1.0 / d } else { 1.0 }).collect();
    let mut r = rhs.to_vec();
    let mut z: Vec<f64> = r.iter().zip(&inv_diag).map(|(r, d)| r * d).collect();
    let mut p = z.clone();
    let mut ap = vec![0.0; n];
    let mut rz: f64 = r.iter().zip(&z).map(|(a, b)| a * b).sum();
    let max_iter = 10 * n + 100;
    for _ in 0..max_iter {
        a.apply(&p, &mut ap);
        let pap: f64 = p.iter().zip(&ap).map(|(a, b)| a * b).sum();
        if pap <= 0.0 {
            break;
        }
        let alpha = rz / pap;
        for k in 0..n {
            x[k] += alpha * p[k];
            r[k] -= alpha * ap[k];
        }
        if norm(&r) <= tol * bnorm {
            return Ok(x);
        }
        for k in 0..n {
            z[k] = r[k] * inv_diag[k];
        }
        let rz_new: f64 = r.iter().zip(&z).map(|(a, b)| a * b).sum();
        let beta = rz_new / rz;
        rz = rz_new;
        for k in 0..n {
            p[k] = z[k] + beta * p[k];
        }
    }
    Err(Error::NotConverged {
        iterations: max_iter,
        residual: norm(&r) / bnorm,
    })
}
