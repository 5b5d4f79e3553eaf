use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Dense row-major matrix of `f64`. Vectors are `1 x n`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tensor {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Tensor {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Tensor { rows, cols, data: vec![0.0; rows * cols] }
    }

    pub fn filled(rows: usize, cols: usize, value: f64) -> Self {
        Tensor { rows, cols, data: vec![value; rows * cols] }
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::shape(
                "tensor",
                format!("buffer of {} values cannot be shaped {rows}x{cols}", data.len()),
            ));
        }
        Ok(Tensor { rows, cols, data })
    }

    pub fn row_vector(data: Vec<f64>) -> Self {
        Tensor { rows: 1, cols: data.len(), data }
    }

    pub fn identity(n: usize) -> Self {
        let mut t = Tensor::zeros(n, n);
        for i in 0..n {
            t.data[i * n + i] = 1.0;
        }
        t
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        let c = self.cols;
        &mut self.data[i * c..(i + 1) * c]
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.data[r * self.cols + c]
    }

    pub fn set(&mut self, r: usize, c: usize, v: f64) {
        self.data[r * self.cols + c] = v;
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|x| x.is_finite())
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Tensor {
        Tensor { rows: self.rows, cols: self.cols, data: self.data.iter().map(|&x| f(x)).collect() }
    }

    pub fn zip_map(&self, other: &Tensor, f: impl Fn(f64, f64) -> f64) -> Tensor {
        assert_eq!(self.shape(), other.shape(), "zip_map shape mismatch");
        let data = self.data.iter().zip(&other.data).map(|(&a, &b)| f(a, b)).collect();
        Tensor { rows: self.rows, cols: self.cols, data }
    }

    pub fn add_assign(&mut self, other: &Tensor) {
        assert_eq!(self.shape(), other.shape(), "add_assign shape mismatch");
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a += b;
        }
    }

    pub fn sum(&self) -> f64 {
        self.data.iter().sum()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, x| m.max(x.abs()))
    }
}

/// `out = alpha * a · bᵀ + beta * out` with `a: m×k`, `b: n×k`.
pub(crate) fn gemm_nt(alpha: f64, a: &Tensor, b: &Tensor, beta: f64, out: &mut Tensor) {
    let (m, k) = a.shape();
    let n = b.rows;
    assert_eq!(b.cols, k, "gemm_nt inner dimension");
    assert_eq!(out.shape(), (m, n), "gemm_nt output shape");
    // SAFETY: slices are sized m*k, n*k and m*n and strides describe them exactly.
    unsafe {
        matrixmultiply::dgemm(
            m,
            k,
            n,
            alpha,
            a.data.as_ptr(),
            k as isize,
            1,
            b.data.as_ptr(),
            1,
            k as isize,
            beta,
            out.data.as_mut_ptr(),
            n as isize,
            1,
        );
    }
}

/// `out = alpha * a · b + beta * out` with `a: m×k`, `b: k×n`.
pub(crate) fn gemm_nn(alpha: f64, a: &Tensor, b: &Tensor, beta: f64, out: &mut Tensor) {
    let (m, k) = a.shape();
    let n = b.cols;
    assert_eq!(b.rows, k, "gemm_nn inner dimension");
    assert_eq!(out.shape(), (m, n), "gemm_nn output shape");
    // SAFETY: as above.
    unsafe {
        matrixmultiply::dgemm(
            m,
            k,
            n,
            alpha,
            a.data.as_ptr(),
            k as isize,
            1,
            b.data.as_ptr(),
            n as isize,
            1,
            beta,
            out.data.as_mut_ptr(),
            n as isize,
            1,
        );
    }
}

/// `out = alpha * aᵀ · b + beta * out` with `a: k×m`, `b: k×n`.
pub(crate) fn gemm_tn(alpha: f64, a: &Tensor, b: &Tensor, beta: f64, out: &mut Tensor) {
    let (k, m) = a.shape();
    let n = b.cols;
    assert_eq!(b.rows, k, "gemm_tn inner dimension");
    assert_eq!(out.shape(), (m, n), "gemm_tn output shape");
    // SAFETY: as above.
    unsafe {
        matrixmultiply::dgemm(
            m,
            k,
            n,
            alpha,
            a.data.as_ptr(),
            1,
            m as isize,
            b.data.as_ptr(),
            n as isize,
            1,
            beta,
            out.data.as_mut_ptr(),
            n as isize,
            1,
        );
    }
}
