use nalgebra::DMatrix;
use num_bigint::BigInt;
use num_traits::{One, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use super::GlzPolynomial;

/// Square integer matrix, row-major.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct IntMatrix {
    n: usize,
    data: Vec<i64>,
}

impl IntMatrix {
    pub fn from_rows(rows: &[Vec<i64>]) -> Self {
        let n = rows.len();
        assert!(rows.iter().all(|r| r.len() == n), "matrix must be square");
        IntMatrix {
            n,
            data: rows.iter().flatten().copied().collect(),
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut data = vec![0; n * n];
        for i in 0..n {
            data[i * n + i] = 1;
        }
        IntMatrix { n, data }
    }

    /// Companion matrix of `P`: ones on the subdiagonal and the last column
    /// holding the negated coefficients of the monic `(-1)^m P`, so that
    /// `det(M − λ I) = P(λ)` and `det M = P(0)`.
    pub fn companion(p: &GlzPolynomial) -> Self {
        let m = p.degree();
        let sign = if m.is_multiple_of(2) { 1 } else { -1 };
        let mut data = vec![0; m * m];
        for i in 1..m {
            data[i * m + (i - 1)] = 1;
        }
        for i in 0..m {
            data[i * m + (m - 1)] = -sign * p.coefficients()[i];
        }
        IntMatrix { n: m, data }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> i64 {
        self.data[i * self.n + j]
    }

    pub fn rows(&self) -> Vec<Vec<i64>> {
        self.data.chunks(self.n).map(|c| c.to_vec()).collect()
    }

    pub fn trace(&self) -> i64 {
        (0..self.n).map(|i| self.get(i, i)).sum()
    }

    pub fn checked_mul(&self, other: &IntMatrix) -> Option<IntMatrix> {
        assert_eq!(self.n, other.n);
        let n = self.n;
        let mut data = vec![0i64; n * n];
        for i in 0..n {
            for j in 0..n {
                let mut acc: i128 = 0;
                for k in 0..n {
                    acc = acc.checked_add(self.get(i, k) as i128 * other.get(k, j) as i128)?;
                }
                data[i * n + j] = i64::try_from(acc).ok()?;
            }
        }
        Some(IntMatrix { n, data })
    }

    /// `self^k` for `k ≥ 0`; `None` on overflow.
    pub fn checked_pow(&self, k: u32) -> Option<IntMatrix> {
        let mut result = IntMatrix::identity(self.n);
        let mut base = self.clone();
        let mut e = k;
        while e > 0 {
            if e & 1 == 1 {
                result = result.checked_mul(&base)?;
            }
            e >>= 1;
            if e > 0 {
                base = base.checked_mul(&base)?;
            }
        }
        Some(result)
    }

    /// Exact determinant (fraction-free elimination).
    pub fn det(&self) -> BigInt {
        bareiss_det(
            self.data
                .chunks(self.n)
                .map(|r| r.iter().map(|&x| BigInt::from(x)).collect())
                .collect(),
        )
    }

    /// Inverse of a unimodular matrix, via the adjugate. `None` if `|det| ≠ 1`.
    pub fn unimodular_inverse(&self) -> Option<IntMatrix> {
        let det = self.det();
        let d = det.to_i64()?;
        if d.abs() != 1 {
            return None;
        }
        let n = self.n;
        let mut data = vec![0i64; n * n];
        for i in 0..n {
            for j in 0..n {
                let minor = self.minor(j, i);
                let cof = minor.det().to_i64()?;
                let sign = if (i + j) % 2 == 0 { 1 } else { -1 };
                data[i * n + j] = sign * cof * d;
            }
        }
        Some(IntMatrix { n, data })
    }

    fn minor(&self, row: usize, col: usize) -> IntMatrix {
        let n = self.n;
        if n == 1 {
            return IntMatrix {
                n: 0,
                data: Vec::new(),
            };
        }
        let mut data = Vec::with_capacity((n - 1) * (n - 1));
        for i in (0..n).filter(|&i| i != row) {
            for j in (0..n).filter(|&j| j != col) {
                data.push(self.get(i, j));
            }
        }
        IntMatrix { n: n - 1, data }
    }

    /// Coefficients of `det(M − λ I)` (constant-first), by Faddeev–LeVerrier.
    pub fn char_poly(&self) -> Vec<i64> {
        let n = self.n;
        // Monic det(λI − M) = λ^n + c_{n-1} λ^{n-1} + ... + c_0.
        let mut c = vec![BigInt::zero(); n + 1];
        c[n] = BigInt::one();
        let m: Vec<Vec<BigInt>> = self
            .data
            .chunks(n)
            .map(|r| r.iter().map(|&x| BigInt::from(x)).collect())
            .collect();
        let mut mk = vec![vec![BigInt::zero(); n]; n];
        for k in 1..=n {
            // mk = M (mk_prev + c_{n-k+1} I)
            let mut prev = mk.clone();
            for (i, row) in prev.iter_mut().enumerate() {
                row[i] += &c[n - k + 1];
            }
            for i in 0..n {
                for j in 0..n {
                    mk[i][j] = (0..n).map(|l| &m[i][l] * &prev[l][j]).sum();
                }
            }
            let tr: BigInt = (0..n).map(|i| mk[i][i].clone()).sum();
            c[n - k] = -tr / BigInt::from(k);
        }
        let sign = if n.is_multiple_of(2) { 1 } else { -1 };
        c.iter()
            .map(|x| sign * x.to_i64().expect("characteristic polynomial fits in i64"))
            .collect()
    }

    pub fn is_identity(&self) -> bool {
        *self == IntMatrix::identity(self.n)
    }

    /// `max |M_ij − δ_ij|`.
    pub fn distance_from_identity(&self) -> i64 {
        (0..self.n)
            .flat_map(|i| (0..self.n).map(move |j| (i, j)))
            .map(|(i, j)| (self.get(i, j) - i64::from(i == j)).abs())
            .max()
            .unwrap_or(0)
    }

    pub fn to_f64(&self) -> DMatrix<f64> {
        DMatrix::from_fn(self.n, self.n, |i, j| self.get(i, j) as f64)
    }

    /// Matrix-vector product on integer coordinates.
    pub fn apply(&self, z: &[i64]) -> Vec<i64> {
        (0..self.n)
            .map(|i| (0..self.n).map(|j| self.get(i, j) * z[j]).sum())
            .collect()
    }
}

pub(crate) fn bareiss_det(mut a: Vec<Vec<BigInt>>) -> BigInt {
    let n = a.len();
    if n == 0 {
        return BigInt::one();
    }
    let mut sign = BigInt::one();
    let mut prev = BigInt::one();
    for k in 0..n - 1 {
        if a[k][k].is_zero() {
            match (k + 1..n).find(|&r| !a[r][k].is_zero()) {
                Some(r) => {
                    a.swap(k, r);
                    sign = -sign;
                }
                None => return BigInt::zero(),
            }
        }
        for i in k + 1..n {
            for j in k + 1..n {
                let v = &a[i][j] * &a[k][k] - &a[i][k] * &a[k][j];
                a[i][j] = v / &prev;
            }
        }
        prev = a[k][k].clone();
    }
    sign * a[n - 1][n - 1].clone()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::polynomial::{compose_for_dimension, cubic_family, quadratic_family};

    /// det(M − x I) at integer x by cofactor expansion.
    fn cofactor_det(rows: &[Vec<i64>]) -> i64 {
        let n = rows.len();
        if n == 1 {
            return rows[0][0];
        }
        (0..n)
            .map(|j| {
                let sub: Vec<Vec<i64>> = rows[1..]
                    .iter()
                    .map(|r| r.iter().enumerate().filter(|&(c, _)| c != j).map(|(_, &v)| v).collect())
                    .collect();
                let s = if j % 2 == 0 { 1 } else { -1 };
                s * rows[0][j] * cofactor_det(&sub)
            })
            .sum()
    }

    #[test]
    fn quadratic_companion() {
        let c = IntMatrix::companion(&quadratic_family(-3).unwrap());
        assert_eq!(c.rows(), vec![vec![0, -1], vec![1, 3]]);
        assert_eq!(c.det(), BigInt::from(1));
        assert_eq!(c.trace(), 3);
    }

    #[test]
    fn cubic_companion_det_and_charpoly() {
        let p = cubic_family(5, 6).unwrap();
        let c = IntMatrix::companion(&p);
        assert_eq!(cofactor_det(&c.rows()), 1);
        assert_eq!(c.char_poly(), p.coefficients());
        // Oracle: det(M - xI) = P(x) at several integers.
        for x in -3..=4 {
            let shifted: Vec<Vec<i64>> = c
                .rows()
                .iter()
                .enumerate()
                .map(|(i, r)| r.iter().enumerate().map(|(j, &v)| v - if i == j { x } else { 0 }).collect())
                .collect();
            assert_eq!(BigInt::from(cofactor_det(&shifted)), p.eval_int(x));
        }
    }

    #[test]
    fn unimodular_inverse_roundtrip() {
        let c = IntMatrix::companion(&compose_for_dimension(5).unwrap());
        let inv = c.unimodular_inverse().unwrap();
        assert!(c.checked_mul(&inv).unwrap().is_identity());
        assert!(IntMatrix::from_rows(&[vec![2, 0], vec![0, 1]]).unimodular_inverse().is_none());
    }

    #[test]
    fn powers_move_away_from_identity() {
        let c = IntMatrix::companion(&quadratic_family(-3).unwrap());
        for k in 1..=10 {
            assert!(c.checked_pow(k).unwrap().distance_from_identity() >= 1);
        }
        assert!(c.checked_pow(0).unwrap().is_identity());
    }
}
