//! Small dense matrix routines over Z, Q and the exact rings.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

use crate::exactring::RingValue;

pub type IntMatrix = Vec<Vec<i64>>;

/// Fraction-free (Bareiss) determinant of a square integer matrix.
pub fn det_int(m: &[Vec<i64>]) -> BigInt {
    let n = m.len();
    if n == 0 {
        return BigInt::one();
    }
    let mut a: Vec<Vec<BigInt>> = m.iter().map(|r| r.iter().map(|&x| BigInt::from(x)).collect()).collect();
    let mut sign = BigInt::one();
    let mut prev = BigInt::one();
    for k in 0..n - 1 {
        if a[k][k].is_zero() {
            match (k + 1..n).find(|&i| !a[i][k].is_zero()) {
                Some(i) => {
                    a.swap(k, i);
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
    sign * &a[n - 1][n - 1]
}

/// Every principal minor is nonnegative.
pub fn is_psd_int(m: &[Vec<i64>]) -> bool {
    let n = m.len();
    for mask in 1u32..(1 << n) {
        let idx: Vec<usize> = (0..n).filter(|&i| mask >> i & 1 == 1).collect();
        let sub: Vec<Vec<i64>> = idx.iter().map(|&i| idx.iter().map(|&j| m[i][j]).collect()).collect();
        if det_int(&sub).is_negative() {
            return false;
        }
    }
    true
}

pub fn mat_mul_int(a: &[Vec<i64>], b: &[Vec<i64>]) -> IntMatrix {
    let (n, k, m) = (a.len(), b.len(), b.first().map_or(0, |r| r.len()));
    let mut out = vec![vec![0i64; m]; n];
    for i in 0..n {
        for l in 0..k {
            let x = a[i][l];
            if x == 0 {
                continue;
            }
            for j in 0..m {
                out[i][j] += x * b[l][j];
            }
        }
    }
    out
}

pub fn transpose<T: Clone>(a: &[Vec<T>]) -> Vec<Vec<T>> {
    if a.is_empty() {
        return Vec::new();
    }
    (0..a[0].len()).map(|j| a.iter().map(|r| r[j].clone()).collect()).collect()
}

/// Adjugate of a square integer matrix, so that `adj(D) * D = det(D) * I`.
pub fn adjugate_int(m: &[Vec<i64>]) -> IntMatrix {
    let n = m.len();
    if n == 1 {
        return vec![vec![1]];
    }
    let mut adj = vec![vec![0i64; n]; n];
    for i in 0..n {
        for j in 0..n {
            let minor: Vec<Vec<i64>> =
                (0..n).filter(|&r| r != i).map(|r| (0..n).filter(|&c| c != j).map(|c| m[r][c]).collect()).collect();
            let d: i64 = det_int(&minor).try_into().expect("minor fits in i64");
            adj[j][i] = if (i + j) % 2 == 0 { d } else { -d };
        }
    }
    adj
}

pub fn identity_int(n: usize) -> IntMatrix {
    (0..n).map(|i| (0..n).map(|j| i64::from(i == j)).collect()).collect()
}

pub fn rational_matrix(m: &[Vec<i64>]) -> Vec<Vec<BigRational>> {
    m.iter().map(|r| r.iter().map(|&x| BigRational::from_integer(x.into())).collect()).collect()
}

pub fn mat_mul_q(a: &[Vec<BigRational>], b: &[Vec<BigRational>]) -> Vec<Vec<BigRational>> {
    let (n, k, m) = (a.len(), b.len(), b.first().map_or(0, |r| r.len()));
    let mut out = vec![vec![BigRational::zero(); m]; n];
    for i in 0..n {
        for l in 0..k {
            if a[i][l].is_zero() {
                continue;
            }
            for j in 0..m {
                out[i][j] += &a[i][l] * &b[l][j];
            }
        }
    }
    out
}

pub fn det_q(m: &[Vec<BigRational>]) -> BigRational {
    let n = m.len();
    let mut a = m.to_vec();
    let mut det = BigRational::one();
    for k in 0..n {
        let Some(piv) = (k..n).find(|&i| !a[i][k].is_zero()) else {
            return BigRational::zero();
        };
        if piv != k {
            a.swap(piv, k);
            det = -det;
        }
        det *= &a[k][k];
        for i in k + 1..n {
            let f = &a[i][k] / &a[k][k];
            if f.is_zero() {
                continue;
            }
            for j in k..n {
                let v = &f * &a[k][j];
                a[i][j] -= v;
            }
        }
    }
    det
}

/// Solves `a x = b` over a field by Gauss–Jordan elimination; `None` when `a`
/// is singular.
pub fn solve_ring(a: &[Vec<RingValue>], b: &[RingValue]) -> Option<Vec<RingValue>> {
    let n = a.len();
    let mut aug: Vec<Vec<RingValue>> =
        a.iter().zip(b).map(|(row, rhs)| row.iter().cloned().chain(std::iter::once(rhs.clone())).collect()).collect();
    for col in 0..n {
        let piv = (col..n).find(|&r| !aug[r][col].is_zero())?;
        aug.swap(col, piv);
        let inv = aug[col][col].inverse()?;
        for j in col..=n {
            aug[col][j] = &aug[col][j] * &inv;
        }
        for r in 0..n {
            if r == col || aug[r][col].is_zero() {
                continue;
            }
            let f = aug[r][col].clone();
            for j in col..=n {
                let v = &f * &aug[col][j];
                aug[r][j] = &aug[r][j] - &v;
            }
        }
    }
    Some(aug.into_iter().map(|mut r| r.pop().expect("augmented column")).collect())
}
