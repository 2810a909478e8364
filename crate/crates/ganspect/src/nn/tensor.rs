use crate::error::{Error, Result};

/// Dense row-major array of f64 values.
#[derive(Clone, Debug, PartialEq)]
pub struct Tensor {
    shape: Vec<usize>,
    data: Vec<f64>,
}

impl Tensor {
    pub fn zeros(shape: &[usize]) -> Tensor {
        let n = shape.iter().product();
        Tensor {
            shape: shape.to_vec(),
            data: vec![0.0; n],
        }
    }

    pub fn from_vec(shape: &[usize], data: Vec<f64>) -> Result<Tensor> {
        let n: usize = shape.iter().product();
        if n != data.len() {
            return Err(Error::Argument(format!(
                "shape {:?} implies {} values, got {}",
                shape,
                n,
                data.len()
            )));
        }
        Ok(Tensor {
            shape: shape.to_vec(),
            data,
        })
    }

    pub fn scalar(v: f64) -> Tensor {
        Tensor {
            shape: vec![1],
            data: vec![v],
        }
    }

    /// Column vector [n x 1] from a slice.
    pub fn column(values: &[f64]) -> Tensor {
        Tensor {
            shape: vec![values.len(), 1],
            data: values.to_vec(),
        }
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn is_scalar(&self) -> bool {
        self.data.len() == 1
    }

    /// The single value of a scalar tensor.
    pub fn item(&self) -> f64 {
        debug_assert!(self.is_scalar());
        self.data[0]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }

    /// Number of rows of a 2-d tensor (a 1-d tensor is one row).
    pub fn rows(&self) -> usize {
        match self.shape.len() {
            0 | 1 => 1,
            _ => self.shape[0],
        }
    }

    /// Number of columns of a 1-d or 2-d tensor.
    pub fn cols(&self) -> usize {
        match self.shape.len() {
            0 => 1,
            1 => self.shape[0],
            _ => self.shape[1],
        }
    }

    pub fn get2(&self, row: usize, col: usize) -> f64 {
        self.data[row * self.cols() + col]
    }

    pub fn row(&self, r: usize) -> &[f64] {
        let c = self.cols();
        &self.data[r * c..(r + 1) * c]
    }

    pub fn row_mut(&mut self, r: usize) -> &mut [f64] {
        let c = self.cols();
        &mut self.data[r * c..(r + 1) * c]
    }

    pub fn all_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    pub fn add_assign(&mut self, other: &Tensor) {
        debug_assert_eq!(self.shape, other.shape);
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a += b;
        }
    }

    /// self += scale * other
    pub fn add_scaled(&mut self, scale: f64, other: &Tensor) {
        debug_assert_eq!(self.shape, other.shape);
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a += scale * b;
        }
    }

    pub fn fill(&mut self, v: f64) {
        self.data.iter_mut().for_each(|x| *x = v);
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Tensor {
        Tensor {
            shape: self.shape.clone(),
            data: self.data.iter().map(|&v| f(v)).collect(),
        }
    }
}

/// dst += s * src, over equal-length slices.
#[inline]
pub(crate) fn axpy(dst: &mut [f64], s: f64, src: &[f64]) {
    debug_assert_eq!(dst.len(), src.len());
    for (d, &x) in dst.iter_mut().zip(src) {
        *d += s * x;
    }
}

/// Dot product with four accumulators so the loop vectorizes.
#[inline]
pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    let mut acc = [0.0f64; 4];
    let chunks = a.len() / 4;
    for i in 0..chunks {
        let j = i * 4;
        acc[0] += a[j] * b[j];
        acc[1] += a[j + 1] * b[j + 1];
        acc[2] += a[j + 2] * b[j + 2];
        acc[3] += a[j + 3] * b[j + 3];
    }
    let mut tail = 0.0;
    for j in chunks * 4..a.len() {
        tail += a[j] * b[j];
    }
    (acc[0] + acc[1]) + (acc[2] + acc[3]) + tail
}

/// c[m x n] += a[m x k] * b[k x n], all row-major slices. Blocks of four
/// output rows share one streaming pass over b.
pub(crate) fn mm_into(c: &mut [f64], a: &[f64], m: usize, k: usize, b: &[f64], n: usize) {
    debug_assert_eq!(a.len(), m * k);
    debug_assert_eq!(b.len(), k * n);
    debug_assert_eq!(c.len(), m * n);
    let blocks = m / 4;
    for blk in 0..blocks {
        let i = blk * 4;
        let (r0, rest) = c[i * n..(i + 4) * n].split_at_mut(n);
        let (r1, rest) = rest.split_at_mut(n);
        let (r2, r3) = rest.split_at_mut(n);
        let a0 = &a[i * k..(i + 1) * k];
        let a1 = &a[(i + 1) * k..(i + 2) * k];
        let a2 = &a[(i + 2) * k..(i + 3) * k];
        let a3 = &a[(i + 3) * k..(i + 4) * k];
        for kk in 0..k {
            let brow = &b[kk * n..(kk + 1) * n];
            let (s0, s1, s2, s3) = (a0[kk], a1[kk], a2[kk], a3[kk]);
            for j in 0..n {
                let bj = brow[j];
                r0[j] += s0 * bj;
                r1[j] += s1 * bj;
                r2[j] += s2 * bj;
                r3[j] += s3 * bj;
            }
        }
    }
    for i in blocks * 4..m {
        let crow = &mut c[i * n..(i + 1) * n];
        let arow = &a[i * k..(i + 1) * k];
        for (kk, &aik) in arow.iter().enumerate() {
            axpy(crow, aik, &b[kk * n..(kk + 1) * n]);
        }
    }
}

/// c[m x n] += a[m x j] * b[n x j]^T (rows of a dotted with rows of b).
pub(crate) fn mm_nt_into(c: &mut [f64], a: &[f64], m: usize, j: usize, b: &[f64], n: usize) {
    debug_assert_eq!(a.len(), m * j);
    debug_assert_eq!(b.len(), n * j);
    debug_assert_eq!(c.len(), m * n);
    for i in 0..m {
        let arow = &a[i * j..(i + 1) * j];
        let crow = &mut c[i * n..(i + 1) * n];
        for (idx, cv) in crow.iter_mut().enumerate() {
            *cv += dot(arow, &b[idx * j..(idx + 1) * j]);
        }
    }
}

/// c[m x n] += a[rows x m]^T * u[rows x n].
pub(crate) fn mm_tn_into(c: &mut [f64], a: &[f64], rows: usize, m: usize, u: &[f64], n: usize) {
    debug_assert_eq!(a.len(), rows * m);
    debug_assert_eq!(u.len(), rows * n);
    debug_assert_eq!(c.len(), m * n);
    for i in 0..rows {
        let arow = &a[i * m..(i + 1) * m];
        let urow = &u[i * n..(i + 1) * n];
        for (mm, &v) in arow.iter().enumerate() {
            if v != 0.0 {
                axpy(&mut c[mm * n..(mm + 1) * n], v, urow);
            }
        }
    }
}

/// C = A[m x k] * B[k x n].
pub(crate) fn matmul(a: &Tensor, b: &Tensor) -> Tensor {
    let (m, k) = (a.rows(), a.cols());
    let (kb, n) = (b.rows(), b.cols());
    debug_assert_eq!(k, kb, "matmul inner dims {k} vs {kb}");
    let mut c = Tensor::zeros(&[m, n]);
    mm_into(c.as_mut_slice(), a.as_slice(), m, k, b.as_slice(), n);
    c
}

/// C = A[m x j] * B[n x j]^T  -> [m x n] (rows of A dotted with rows of B).
pub(crate) fn matmul_nt(a: &Tensor, b: &Tensor) -> Tensor {
    let (m, j) = (a.rows(), a.cols());
    let (n, jb) = (b.rows(), b.cols());
    debug_assert_eq!(j, jb);
    let mut c = Tensor::zeros(&[m, n]);
    mm_nt_into(c.as_mut_slice(), a.as_slice(), m, j, b.as_slice(), n);
    c
}

/// C = A[i x m]^T * U[i x n] -> [m x n].
pub(crate) fn matmul_tn(a: &Tensor, u: &Tensor) -> Tensor {
    let (rows, m) = (a.rows(), a.cols());
    let (rows_u, n) = (u.rows(), u.cols());
    debug_assert_eq!(rows, rows_u);
    let mut c = Tensor::zeros(&[m, n]);
    mm_tn_into(c.as_mut_slice(), a.as_slice(), rows, m, u.as_slice(), n);
    c
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn from_vec_checks_size() {
        assert!(Tensor::from_vec(&[2, 2], vec![1.0; 3]).is_err());
        assert!(Tensor::from_vec(&[2, 2], vec![1.0; 4]).is_ok());
    }

    #[test]
    fn matmul_hand_example() {
        let a = Tensor::from_vec(&[2, 2], vec![1.0, 2.0, 3.0, 4.0]).unwrap();
        let x = Tensor::from_vec(&[2, 1], vec![1.0, 1.0]).unwrap();
        // Row-major [ [1,2], [3,4] ] * [1,1]^T = [3, 7]
        let y = matmul(&a, &x);
        assert_eq!(y.as_slice(), &[3.0, 7.0]);
    }

    #[test]
    fn matmul_transpose_variants_agree() {
        let mut rng = crate::rng::Rng::new(11);
        let a = Tensor::from_vec(&[3, 4], (0..12).map(|_| rng.normal()).collect()).unwrap();
        let b = Tensor::from_vec(&[4, 5], (0..20).map(|_| rng.normal()).collect()).unwrap();
        let c = matmul(&a, &b);

        // matmul_nt(a, b^T) == a * b
        let mut bt = Tensor::zeros(&[5, 4]);
        for r in 0..4 {
            for col in 0..5 {
                bt.row_mut(col)[r] = b.get2(r, col);
            }
        }
        let c2 = matmul_nt(&a, &bt);
        for (x, y) in c.as_slice().iter().zip(c2.as_slice()) {
            assert!((x - y).abs() < 1e-12);
        }

        // matmul_tn(a^T stored as a, ...) : (a^T)^T * b via transposing a first
        let mut at = Tensor::zeros(&[4, 3]);
        for r in 0..3 {
            for col in 0..4 {
                at.row_mut(col)[r] = a.get2(r, col);
            }
        }
        let c3 = matmul_tn(&at, &b);
        for (x, y) in c.as_slice().iter().zip(c3.as_slice()) {
            assert!((x - y).abs() < 1e-12);
        }
    }
}
