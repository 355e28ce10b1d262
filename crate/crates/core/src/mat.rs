//! Dense complex matrices in row-major layout, with the block-assembly
//! helpers the integrated representations need and the JSON wire format
//! consumed by the CLI (`{"rows":r,"cols":c,"data":[[re,im],...]}`).

use crate::error::{Error, Result};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "MatrixJson", into = "MatrixJson")]
pub struct CMatrix {
    rows: usize,
    cols: usize,
    data: Vec<Complex64>,
}

#[derive(Serialize, Deserialize)]
struct MatrixJson {
    rows: usize,
    cols: usize,
    data: Vec<[f64; 2]>,
}

impl TryFrom<MatrixJson> for CMatrix {
    type Error = Error;

    fn try_from(j: MatrixJson) -> Result<Self> {
        if j.rows * j.cols != j.data.len() {
            return Err(Error::Shape(format!(
                "matrix data has {} entries, expected {}x{}",
                j.data.len(),
                j.rows,
                j.cols
            )));
        }
        let data = j
            .data
            .iter()
            .map(|&[re, im]| Complex64::new(re, im))
            .collect();
        Ok(CMatrix {
            rows: j.rows,
            cols: j.cols,
            data,
        })
    }
}

impl From<CMatrix> for MatrixJson {
    fn from(m: CMatrix) -> Self {
        MatrixJson {
            rows: m.rows,
            cols: m.cols,
            data: m.data.iter().map(|z| [z.re, z.im]).collect(),
        }
    }
}

impl CMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        CMatrix {
            rows,
            cols,
            data: vec![Complex64::new(0.0, 0.0); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = CMatrix::zeros(n, n);
        for i in 0..n {
            m.set(i, i, Complex64::new(1.0, 0.0));
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> Complex64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        CMatrix { rows, cols, data }
    }

    pub fn from_rows(rows: &[Vec<Complex64>]) -> Result<Self> {
        let r = rows.len();
        let c = rows.first().map_or(0, |row| row.len());
        if rows.iter().any(|row| row.len() != c) {
            return Err(Error::Shape("ragged row lengths".into()));
        }
        Ok(CMatrix {
            rows: r,
            cols: c,
            data: rows.concat(),
        })
    }

    /// Convenience constructor from real entries.
    pub fn from_real_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let lifted: Vec<Vec<Complex64>> = rows
            .iter()
            .map(|row| row.iter().map(|&x| Complex64::new(x, 0.0)).collect())
            .collect();
        CMatrix::from_rows(&lifted)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> Complex64 {
        self.data[i * self.cols + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: Complex64) {
        self.data[i * self.cols + j] = v;
    }

    pub fn entries(&self) -> &[Complex64] {
        &self.data
    }

    pub fn is_finite(&self) -> bool {
        self.data
            .iter()
            .all(|z| z.re.is_finite() && z.im.is_finite())
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn max_abs_diff(&self, other: &CMatrix) -> f64 {
        assert_eq!(
            (self.rows, self.cols),
            (other.rows, other.cols),
            "shape mismatch"
        );
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    pub fn add(&self, other: &CMatrix) -> CMatrix {
        assert_eq!(
            (self.rows, self.cols),
            (other.rows, other.cols),
            "shape mismatch"
        );
        let data = self
            .data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| a + b)
            .collect();
        CMatrix {
            rows: self.rows,
            cols: self.cols,
            data,
        }
    }

    pub fn sub(&self, other: &CMatrix) -> CMatrix {
        assert_eq!(
            (self.rows, self.cols),
            (other.rows, other.cols),
            "shape mismatch"
        );
        let data = self
            .data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| a - b)
            .collect();
        CMatrix {
            rows: self.rows,
            cols: self.cols,
            data,
        }
    }

    pub fn scale(&self, c: Complex64) -> CMatrix {
        let data = self.data.iter().map(|a| a * c).collect();
        CMatrix {
            rows: self.rows,
            cols: self.cols,
            data,
        }
    }

    pub fn mul(&self, other: &CMatrix) -> CMatrix {
        assert_eq!(self.cols, other.rows, "inner dimensions differ");
        let mut out = CMatrix::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self.data[i * self.cols + k];
                if a.re == 0.0 && a.im == 0.0 {
                    continue;
                }
                let dst = &mut out.data[i * other.cols..(i + 1) * other.cols];
                let src = &other.data[k * other.cols..(k + 1) * other.cols];
                for (d, s) in dst.iter_mut().zip(src) {
                    *d += a * s;
                }
            }
        }
        out
    }

    /// Conjugate transpose.
    pub fn adjoint(&self) -> CMatrix {
        CMatrix::from_fn(self.cols, self.rows, |i, j| self.get(j, i).conj())
    }

    pub fn matvec(&self, x: &[Complex64]) -> Vec<Complex64> {
        assert_eq!(self.cols, x.len(), "vector length mismatch");
        if self.cols == 0 {
            return vec![Complex64::new(0.0, 0.0); self.rows];
        }
        self.data
            .chunks_exact(self.cols)
            .map(|row| row.iter().zip(x).map(|(a, b)| a * b).sum())
            .collect()
    }

    /// Leading principal `m x m` compression.
    pub fn leading_principal(&self, m: usize) -> CMatrix {
        assert!(m <= self.rows.min(self.cols));
        CMatrix::from_fn(m, m, |i, j| self.get(i, j))
    }

    /// Assembles a block matrix from an `br x bc` grid of equally sized blocks.
    pub fn from_blocks(br: usize, bc: usize, block: impl Fn(usize, usize) -> CMatrix) -> CMatrix {
        if br == 0 || bc == 0 {
            return CMatrix::zeros(0, 0);
        }
        let probe = block(0, 0);
        let (h, w) = (probe.rows, probe.cols);
        let mut out = CMatrix::zeros(br * h, bc * w);
        for bi in 0..br {
            for bj in 0..bc {
                let b = if (bi, bj) == (0, 0) {
                    probe.clone()
                } else {
                    block(bi, bj)
                };
                assert_eq!((b.rows, b.cols), (h, w), "blocks must share dimensions");
                for i in 0..h {
                    for j in 0..w {
                        out.set(bi * h + i, bj * w + j, b.get(i, j));
                    }
                }
            }
        }
        out
    }

    /// Copies the `(bi, bj)` block out of a grid of `h x w` blocks.
    pub fn block(&self, bi: usize, bj: usize, h: usize, w: usize) -> CMatrix {
        CMatrix::from_fn(h, w, |i, j| self.get(bi * h + i, bj * w + j))
    }

    /// Block-diagonal matrix with `copies` copies of `self`.
    pub fn block_diag_copies(&self, copies: usize) -> CMatrix {
        let zero = CMatrix::zeros(self.rows, self.cols);
        CMatrix::from_blocks(copies, copies, |i, j| {
            if i == j {
                self.clone()
            } else {
                zero.clone()
            }
        })
    }

    /// True when the matrix has exactly one unit-modulus entry in every row
    /// and every column and zeros elsewhere (a Lamperti isometry of `l^p_n`).
    pub fn is_monomial(&self, tol: f64) -> bool {
        if !self.is_square() {
            return false;
        }
        let n = self.rows;
        let mut col_used = vec![false; n];
        for i in 0..n {
            let mut hit = None;
            for j in 0..n {
                let a = self.get(i, j).norm();
                if a > tol {
                    if (a - 1.0).abs() > tol || hit.is_some() {
                        return false;
                    }
                    hit = Some(j);
                }
            }
            match hit {
                Some(j) if !col_used[j] => col_used[j] = true,
                _ => return false,
            }
        }
        true
    }

    /// `Some(c)` when the matrix equals `c * I` within `tol`.
    pub fn as_scalar_multiple_of_identity(&self, tol: f64) -> Option<Complex64> {
        if !self.is_square() || self.rows == 0 {
            return None;
        }
        let c = self.get(0, 0);
        for i in 0..self.rows {
            for j in 0..self.cols {
                let want = if i == j { c } else { Complex64::new(0.0, 0.0) };
                if (self.get(i, j) - want).norm() > tol {
                    return None;
                }
            }
        }
        Some(c)
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::to_value(self.clone()).expect("matrix serializes")
    }

    pub fn from_json(v: &serde_json::Value) -> Result<CMatrix> {
        serde_json::from_value(v.clone())
            .map_err(|e| Error::Shape(format!("invalid matrix JSON: {e}")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn multiply_and_adjoint() {
        let a = CMatrix::from_rows(&[
            vec![c(1.0, 1.0), c(0.0, 0.0)],
            vec![c(2.0, 0.0), c(0.0, -1.0)],
        ])
        .unwrap();
        let b = CMatrix::identity(2);
        assert_eq!(a.mul(&b), a);
        let ah = a.adjoint();
        assert_eq!(ah.get(0, 0), c(1.0, -1.0));
        assert_eq!(ah.get(0, 1), c(2.0, 0.0));
        assert_eq!(ah.get(1, 1), c(0.0, 1.0));
    }

    #[test]
    fn block_roundtrip() {
        let blocks = [
            CMatrix::from_real_rows(&[vec![1.0, 2.0], vec![3.0, 4.0]]).unwrap(),
            CMatrix::from_real_rows(&[vec![5.0, 6.0], vec![7.0, 8.0]]).unwrap(),
        ];
        let m = CMatrix::from_blocks(1, 2, |_, j| blocks[j].clone());
        assert_eq!(m.rows(), 2);
        assert_eq!(m.cols(), 4);
        assert_eq!(m.block(0, 1, 2, 2), blocks[1]);
    }

    #[test]
    fn monomial_detection() {
        let swap = CMatrix::from_real_rows(&[vec![0.0, 1.0], vec![1.0, 0.0]]).unwrap();
        assert!(swap.is_monomial(1e-12));
        let phase = CMatrix::from_rows(&[
            vec![c(0.0, 1.0), c(0.0, 0.0)],
            vec![c(0.0, 0.0), c(1.0, 0.0)],
        ])
        .unwrap();
        assert!(phase.is_monomial(1e-12));
        let not = CMatrix::from_real_rows(&[vec![1.0, 1.0], vec![0.0, 1.0]]).unwrap();
        assert!(!not.is_monomial(1e-12));
        let scaled = CMatrix::from_real_rows(&[vec![2.0, 0.0], vec![0.0, 2.0]]).unwrap();
        assert!(!scaled.is_monomial(1e-12));
        assert_eq!(
            scaled.as_scalar_multiple_of_identity(1e-12),
            Some(c(2.0, 0.0))
        );
    }

    #[test]
    fn json_roundtrip_and_validation() {
        let m = CMatrix::from_rows(&[vec![c(1.0, -2.0), c(0.5, 0.0)]]).unwrap();
        let v = m.to_json();
        assert_eq!(v["rows"], 1);
        assert_eq!(v["cols"], 2);
        assert_eq!(v["data"][0][1], -2.0);
        let back = CMatrix::from_json(&v).unwrap();
        assert_eq!(back, m);

        let bad = serde_json::json!({"rows": 2, "cols": 2, "data": [[1.0, 0.0]]});
        assert!(CMatrix::from_json(&bad).is_err());
    }
}
