//! Dense symmetric storage and a packed lower-triangular Cholesky factor.

/// Row-major `n x n` symmetric matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct SymmetricMatrix {
    n: usize,
    data: Vec<f64>,
}

impl SymmetricMatrix {
    /// Builds the matrix from its upper triangle; the lower triangle is a mirror copy.
    pub fn from_fn(n: usize, mut entry: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = vec![0.0; n * n];
        for i in 0..n {
            for j in i..n {
                let v = entry(i, j);
                data[i * n + j] = v;
                data[j * n + i] = v;
            }
        }
        Self { n, data }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.n..(i + 1) * self.n]
    }

    pub fn trace(&self) -> f64 {
        (0..self.n).map(|i| self.get(i, i)).sum()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }
}

/// Lower-triangular factor `L` with `M = L L^T`, rows packed contiguously.
#[derive(Debug, Clone, PartialEq)]
pub struct CholeskyFactor {
    n: usize,
    data: Vec<f64>,
}

#[inline]
fn row_start(i: usize) -> usize {
    i * (i + 1) / 2
}

/// Dot product with four independent accumulators so the loop vectorises.
#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len().min(b.len());
    let (a, b) = (&a[..n], &b[..n]);
    let mut acc = [0.0f64; 4];
    let chunks = n / 4;
    for c in 0..chunks {
        let i = 4 * c;
        acc[0] += a[i] * b[i];
        acc[1] += a[i + 1] * b[i + 1];
        acc[2] += a[i + 2] * b[i + 2];
        acc[3] += a[i + 3] * b[i + 3];
    }
    let mut tail = 0.0;
    for i in 4 * chunks..n {
        tail += a[i] * b[i];
    }
    (acc[0] + acc[1]) + (acc[2] + acc[3]) + tail
}

impl CholeskyFactor {
    /// Factorises `m + shift * I`. On a non-positive pivot returns its index.
    pub fn factor(m: &SymmetricMatrix, shift: f64) -> Result<Self, usize> {
        let n = m.dim();
        let mut data = vec![0.0; row_start(n)];
        for i in 0..n {
            let (done, rest) = data.split_at_mut(row_start(i));
            let row_i = &mut rest[..=i];
            let source = m.row(i);
            for j in 0..i {
                let row_j = &done[row_start(j)..row_start(j) + j + 1];
                let s = source[j] - dot(&row_i[..j], &row_j[..j]);
                row_i[j] = s / row_j[j];
            }
            let pivot = source[i] + shift - dot(&row_i[..i], &row_i[..i]);
            if pivot.is_nan() || pivot <= 0.0 || !pivot.is_finite() {
                return Err(i);
            }
            row_i[i] = pivot.sqrt();
        }
        Ok(Self { n, data })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[row_start(i)..row_start(i) + i + 1]
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        if j > i {
            0.0
        } else {
            self.data[row_start(i) + j]
        }
    }

    /// `out = L z`.
    pub fn apply(&self, z: &[f64], out: &mut [f64]) {
        assert_eq!(z.len(), self.n);
        assert_eq!(out.len(), self.n);
        for (i, o) in out.iter_mut().enumerate() {
            *o = dot(self.row(i), &z[..=i]);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn reconstructs_matrix() {
        let m = SymmetricMatrix::from_fn(7, |i, j| {
            let (i, j) = (i as f64 + 1.0, j as f64 + 1.0);
            i.min(j) + if i == j { 0.5 } else { 0.0 }
        });
        let l = CholeskyFactor::factor(&m, 0.0).unwrap();
        for i in 0..7 {
            for j in 0..7 {
                let s: f64 = (0..7).map(|k| l.get(i, k) * l.get(j, k)).sum();
                assert_relative_eq!(s, m.get(i, j), max_relative = 1e-13);
            }
        }
    }

    #[test]
    fn rejects_indefinite() {
        let m = SymmetricMatrix::from_fn(2, |i, j| if i == j { 1.0 } else { 2.0 });
        assert_eq!(CholeskyFactor::factor(&m, 0.0), Err(1));
    }

    #[test]
    fn shift_rescues_singular() {
        let m = SymmetricMatrix::from_fn(3, |_, _| 1.0);
        assert!(CholeskyFactor::factor(&m, 0.0).is_err());
        assert!(CholeskyFactor::factor(&m, 1e-10).is_ok());
    }

    #[test]
    fn dot_handles_tails() {
        let a: Vec<f64> = (0..11).map(|i| i as f64).collect();
        assert_eq!(dot(&a, &a), (0..11).map(|i| (i * i) as f64).sum::<f64>());
    }
}
