use std::io::{Read, Write};

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::Point;

const MAGIC: &[u8; 8] = b"OPKERNEL";
const VERSION: u32 = 1;

/// Sampled kernel `K(x_i, y_j)` together with the grids and integration weights.
#[derive(Debug, Clone, PartialEq)]
pub struct OperatorKernel {
    pub row_grid: Vec<Point>,
    pub col_grid: Vec<Point>,
    pub values: DMatrix<Complex64>,
    pub row_weights: Vec<f64>,
    pub col_weights: Vec<f64>,
}

impl OperatorKernel {
    pub fn new(
        row_grid: Vec<Point>,
        col_grid: Vec<Point>,
        values: DMatrix<Complex64>,
        row_weights: Vec<f64>,
        col_weights: Vec<f64>,
    ) -> Result<Self> {
        if values.nrows() != row_grid.len() || values.ncols() != col_grid.len() {
            return Err(Error::domain(
                "values",
                format!(
                    "shape {}x{} does not match grids {}x{}",
                    values.nrows(),
                    values.ncols(),
                    row_grid.len(),
                    col_grid.len()
                ),
            ));
        }
        if row_weights.len() != row_grid.len() || col_weights.len() != col_grid.len() {
            return Err(Error::domain("weights", "length does not match grid"));
        }
        if row_weights.iter().chain(&col_weights).any(|&w| !(w > 0.0) || !w.is_finite()) {
            return Err(Error::domain("weights", "must be positive and finite"));
        }
        Ok(Self { row_grid, col_grid, values, row_weights, col_weights })
    }

    /// Square kernel on a single grid.
    pub fn square(grid: Vec<Point>, values: DMatrix<Complex64>, weights: Vec<f64>) -> Result<Self> {
        Self::new(grid.clone(), grid, values, weights.clone(), weights)
    }

    pub fn shape(&self) -> (usize, usize) {
        self.values.shape()
    }

    /// `diag(√w_row) · K · diag(√w_col)`, whose spectral norm is the L² operator norm.
    pub fn scaled_matrix(&self) -> DMatrix<Complex64> {
        let mut m = self.values.clone();
        for (i, &wr) in self.row_weights.iter().enumerate() {
            let a = wr.sqrt();
            for (j, &wc) in self.col_weights.iter().enumerate() {
                m[(i, j)] *= a * wc.sqrt();
            }
        }
        m
    }

    /// Kernel of the composition `self ∘ other`; the shared grid must coincide.
    pub fn compose(&self, other: &OperatorKernel) -> Result<OperatorKernel> {
        if self.col_grid != other.row_grid || self.col_weights != other.row_weights {
            return Err(Error::Internal("composition grid mismatch".into()));
        }
        let mut left = self.values.clone();
        for (j, &w) in self.col_weights.iter().enumerate() {
            left.column_mut(j).scale_mut(w);
        }
        Ok(OperatorKernel {
            row_grid: self.row_grid.clone(),
            col_grid: other.col_grid.clone(),
            values: left * &other.values,
            row_weights: self.row_weights.clone(),
            col_weights: other.col_weights.clone(),
        })
    }

    /// Multiplies the kernel by `f(x) g(y)`.
    pub fn weighted<F: Fn(&Point) -> f64, G: Fn(&Point) -> f64>(&self, f: F, g: G) -> OperatorKernel {
        let mut out = self.clone();
        let fr: Vec<f64> = self.row_grid.iter().map(&f).collect();
        let gc: Vec<f64> = self.col_grid.iter().map(&g).collect();
        for i in 0..fr.len() {
            for j in 0..gc.len() {
                out.values[(i, j)] *= fr[i] * gc[j];
            }
        }
        out
    }

    pub fn conj(&self) -> OperatorKernel {
        let mut out = self.clone();
        out.values = self.values.map(|z| z.conj());
        out
    }

    pub fn transpose(&self) -> OperatorKernel {
        OperatorKernel {
            row_grid: self.col_grid.clone(),
            col_grid: self.row_grid.clone(),
            values: self.values.transpose(),
            row_weights: self.col_weights.clone(),
            col_weights: self.row_weights.clone(),
        }
    }

    pub fn scale(&self, c: Complex64) -> OperatorKernel {
        let mut out = self.clone();
        out.values *= c;
        out
    }

    /// Entrywise `self − other` on identical grids.
    pub fn sub(&self, other: &OperatorKernel) -> Result<OperatorKernel> {
        self.same_grids(other)?;
        let mut out = self.clone();
        out.values -= &other.values;
        Ok(out)
    }

    pub fn add(&self, other: &OperatorKernel) -> Result<OperatorKernel> {
        self.same_grids(other)?;
        let mut out = self.clone();
        out.values += &other.values;
        Ok(out)
    }

    fn same_grids(&self, other: &OperatorKernel) -> Result<()> {
        if self.row_grid != other.row_grid || self.col_grid != other.col_grid {
            return Err(Error::Internal("kernels live on different grids".into()));
        }
        Ok(())
    }

    /// Largest entrywise modulus.
    pub fn sup(&self) -> f64 {
        self.values.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// Binary form: magic, version, dimensions, both grids with weights, then
    /// the values row-major as `(re, im)` pairs; all little-endian.
    pub fn write_binary<W: Write>(&self, mut out: W) -> Result<()> {
        let io = |e: std::io::Error| Error::Numerical(format!("kernel export failed: {e}"));
        out.write_all(MAGIC).map_err(io)?;
        out.write_all(&VERSION.to_le_bytes()).map_err(io)?;
        let (n, m) = self.shape();
        out.write_all(&(n as u64).to_le_bytes()).map_err(io)?;
        out.write_all(&(m as u64).to_le_bytes()).map_err(io)?;
        let mut buf = Vec::with_capacity(8 * (4 * (n + m) + 2 * n * m));
        for (p, w) in self.row_grid.iter().zip(&self.row_weights).chain(self.col_grid.iter().zip(&self.col_weights)) {
            for v in [p[0], p[1], p[2], *w] {
                buf.extend_from_slice(&v.to_le_bytes());
            }
        }
        for i in 0..n {
            for j in 0..m {
                let z = self.values[(i, j)];
                buf.extend_from_slice(&z.re.to_le_bytes());
                buf.extend_from_slice(&z.im.to_le_bytes());
            }
        }
        out.write_all(&buf).map_err(io)
    }

    pub fn read_binary<R: Read>(mut input: R) -> Result<Self> {
        let bad = |what: &str| Error::Config(format!("malformed kernel file: {what}"));
        let mut magic = [0u8; 8];
        input.read_exact(&mut magic).map_err(|_| bad("truncated header"))?;
        if &magic != MAGIC {
            return Err(bad("bad magic"));
        }
        let mut b4 = [0u8; 4];
        input.read_exact(&mut b4).map_err(|_| bad("truncated header"))?;
        if u32::from_le_bytes(b4) != VERSION {
            return Err(bad("unsupported version"));
        }
        let mut b8 = [0u8; 8];
        input.read_exact(&mut b8).map_err(|_| bad("truncated header"))?;
        let n = u64::from_le_bytes(b8) as usize;
        input.read_exact(&mut b8).map_err(|_| bad("truncated header"))?;
        let m = u64::from_le_bytes(b8) as usize;
        let mut next = || -> Result<f64> {
            input.read_exact(&mut b8).map_err(|_| bad("truncated body"))?;
            Ok(f64::from_le_bytes(b8))
        };
        let mut grid = |count: usize| -> Result<(Vec<Point>, Vec<f64>)> {
            let mut pts = Vec::with_capacity(count);
            let mut ws = Vec::with_capacity(count);
            for _ in 0..count {
                pts.push([next()?, next()?, next()?]);
                ws.push(next()?);
            }
            Ok((pts, ws))
        };
        let (rows, rw) = grid(n)?;
        let (cols, cw) = grid(m)?;
        let mut values = DMatrix::zeros(n, m);
        for i in 0..n {
            for j in 0..m {
                let re = next()?;
                let im = next()?;
                values[(i, j)] = Complex64::new(re, im);
            }
        }
        Self::new(rows, cols, values, rw, cw)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> OperatorKernel {
        let rows = vec![[0.0, 0.0, 0.0], [1.0, 2.0, 3.0]];
        let cols = vec![[0.5, 0.0, 0.0], [0.0, -1.0, 0.0], [2.0, 2.0, 2.0]];
        let values = DMatrix::from_fn(2, 3, |i, j| Complex64::new(i as f64 + 0.5, j as f64 - 1.25));
        OperatorKernel::new(rows, cols, values, vec![0.5, 2.0], vec![1.0, 0.25, 3.0]).unwrap()
    }

    #[test]
    fn shape_mismatch_rejected() {
        let r = OperatorKernel::new(vec![[0.0; 3]], vec![[0.0; 3]], DMatrix::zeros(2, 1), vec![1.0], vec![1.0]);
        assert!(r.is_err());
    }

    #[test]
    fn binary_round_trip() {
        let k = sample();
        let mut buf = Vec::new();
        k.write_binary(&mut buf).unwrap();
        assert_eq!(&buf[..8], MAGIC);
        let back = OperatorKernel::read_binary(buf.as_slice()).unwrap();
        assert_eq!(k, back);
        assert!(OperatorKernel::read_binary(&buf[..20]).is_err());
    }

    #[test]
    fn composition_uses_inner_weights_once() {
        let k = sample();
        let kt = k.transpose();
        let c = k.compose(&kt).unwrap();
        let mut expected = Complex64::new(0.0, 0.0);
        for j in 0..3 {
            expected += k.values[(0, j)] * k.col_weights[j] * k.values[(1, j)];
        }
        assert!((c.values[(0, 1)] - expected).norm() < 1e-14);
        assert!(matches!(k.compose(&k), Err(Error::Internal(_))));
    }

    #[test]
    fn scaled_matrix_entries() {
        let k = sample();
        let s = k.scaled_matrix();
        let e = k.values[(1, 2)] * (2.0f64 * 3.0).sqrt();
        assert!((s[(1, 2)] - e).norm() < 1e-14);
    }
}
