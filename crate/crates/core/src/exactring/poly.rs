//! Dense univariate polynomial helpers over Q, Z and F_p.
//!
//! Coefficient vectors are stored low-to-high and kept trimmed (no trailing
//! zeros) by the functions that return them, except where noted.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};

pub(crate) fn trim_q(v: &mut Vec<BigRational>) {
    while v.last().is_some_and(|c| c.is_zero()) {
        v.pop();
    }
}

pub(crate) fn trim_p(v: &mut Vec<u64>) {
    while v.last() == Some(&0) {
        v.pop();
    }
}

pub(crate) fn trim_z(v: &mut Vec<BigInt>) {
    while v.last().is_some_and(|c| c.is_zero()) {
        v.pop();
    }
}

/// Product of two integer polynomials.
pub(crate) fn mul_z(a: &[BigInt], b: &[BigInt]) -> Vec<BigInt> {
    if a.is_empty() || b.is_empty() {
        return Vec::new();
    }
    let mut out = vec![BigInt::zero(); a.len() + b.len() - 1];
    for (i, x) in a.iter().enumerate() {
        if x.is_zero() {
            continue;
        }
        for (j, y) in b.iter().enumerate() {
            out[i + j] += x * y;
        }
    }
    trim_z(&mut out);
    out
}

/// Exact quotient `a / b` for monic `b`; `None` if the remainder is nonzero.
pub(crate) fn exact_div_monic_z(a: &[BigInt], b: &[BigInt]) -> Option<Vec<BigInt>> {
    let db = b.len().checked_sub(1)?;
    debug_assert!(b[db].is_one());
    let mut rem: Vec<BigInt> = a.to_vec();
    trim_z(&mut rem);
    if rem.len() < b.len() {
        return if rem.is_empty() { Some(Vec::new()) } else { None };
    }
    let mut quot = vec![BigInt::zero(); rem.len() - db];
    for i in (0..quot.len()).rev() {
        let c = rem[i + db].clone();
        if c.is_zero() {
            continue;
        }
        for (j, bj) in b.iter().enumerate() {
            rem[i + j] -= &c * bj;
        }
        quot[i] = c;
    }
    trim_z(&mut rem);
    if rem.is_empty() {
        trim_z(&mut quot);
        Some(quot)
    } else {
        None
    }
}

/// Remainder of `a` modulo a monic integer polynomial, over Q.
pub(crate) fn rem_monic_q(a: &[BigRational], m: &[BigInt]) -> Vec<BigRational> {
    let dm = m.len() - 1;
    let mut rem: Vec<BigRational> = a.to_vec();
    trim_q(&mut rem);
    while rem.len() > dm {
        let top = rem.len() - 1;
        let c = rem[top].clone();
        if !c.is_zero() {
            for (j, mj) in m.iter().enumerate() {
                if mj.is_zero() {
                    continue;
                }
                rem[top - dm + j] -= &c * BigRational::from_integer(mj.clone());
            }
        }
        rem.pop();
        trim_q(&mut rem);
    }
    rem
}

pub(crate) fn mul_q(a: &[BigRational], b: &[BigRational]) -> Vec<BigRational> {
    if a.is_empty() || b.is_empty() {
        return Vec::new();
    }
    let mut out = vec![BigRational::zero(); a.len() + b.len() - 1];
    for (i, x) in a.iter().enumerate() {
        if x.is_zero() {
            continue;
        }
        for (j, y) in b.iter().enumerate() {
            if y.is_zero() {
                continue;
            }
            out[i + j] += x * y;
        }
    }
    trim_q(&mut out);
    out
}

pub(crate) fn sub_q(a: &[BigRational], b: &[BigRational]) -> Vec<BigRational> {
    let n = a.len().max(b.len());
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        let x = a.get(i).cloned().unwrap_or_else(BigRational::zero);
        let y = b.get(i).cloned().unwrap_or_else(BigRational::zero);
        out.push(x - y);
    }
    trim_q(&mut out);
    out
}

/// Polynomial division over Q with nonzero divisor.
pub(crate) fn divrem_q(a: &[BigRational], b: &[BigRational]) -> (Vec<BigRational>, Vec<BigRational>) {
    let db = b.len() - 1;
    let lead = b[db].clone();
    let mut rem = a.to_vec();
    trim_q(&mut rem);
    if rem.len() < b.len() {
        return (Vec::new(), rem);
    }
    let mut quot = vec![BigRational::zero(); rem.len() - db];
    for i in (0..quot.len()).rev() {
        let c = &rem[i + db] / &lead;
        if c.is_zero() {
            continue;
        }
        for (j, bj) in b.iter().enumerate() {
            rem[i + j] -= &c * bj;
        }
        quot[i] = c;
    }
    trim_q(&mut rem);
    trim_q(&mut quot);
    (quot, rem)
}

/// Inverse of `a` modulo `m` over Q, if gcd(a, m) = 1.
pub(crate) fn inverse_mod_q(a: &[BigRational], m: &[BigRational]) -> Option<Vec<BigRational>> {
    let mut a = a.to_vec();
    trim_q(&mut a);
    if a.is_empty() {
        return None;
    }
    // Invariant: s * a ≡ r (mod m).
    let (mut r0, mut r1) = (m.to_vec(), a);
    let (mut s0, mut s1): (Vec<BigRational>, Vec<BigRational>) = (Vec::new(), vec![BigRational::one()]);
    while !r1.is_empty() {
        let (q, r) = divrem_q(&r0, &r1);
        let s = sub_q(&s0, &mul_q(&q, &s1));
        r0 = std::mem::replace(&mut r1, r);
        s0 = std::mem::replace(&mut s1, s);
    }
    if r0.len() != 1 {
        return None;
    }
    let c = r0[0].clone();
    let inv: Vec<BigRational> = s0.iter().map(|x| x / &c).collect();
    let (_, rem) = divrem_q(&inv, m);
    Some(rem)
}

pub(crate) fn inv_mod_p(a: u64, p: u64) -> Option<u64> {
    let a = a % p;
    if a == 0 {
        return None;
    }
    let (mut t, mut new_t) = (0i128, 1i128);
    let (mut r, mut new_r) = (p as i128, a as i128);
    while new_r != 0 {
        let q = r / new_r;
        (t, new_t) = (new_t, t - q * new_t);
        (r, new_r) = (new_r, r - q * new_r);
    }
    if r != 1 {
        return None;
    }
    Some(t.rem_euclid(p as i128) as u64)
}

pub(crate) fn mul_p(a: &[u64], b: &[u64], p: u64) -> Vec<u64> {
    if a.is_empty() || b.is_empty() {
        return Vec::new();
    }
    let mut out = vec![0u64; a.len() + b.len() - 1];
    for (i, &x) in a.iter().enumerate() {
        if x == 0 {
            continue;
        }
        for (j, &y) in b.iter().enumerate() {
            out[i + j] = ((out[i + j] as u128 + x as u128 * y as u128) % p as u128) as u64;
        }
    }
    trim_p(&mut out);
    out
}

fn sub_p(a: &[u64], b: &[u64], p: u64) -> Vec<u64> {
    let n = a.len().max(b.len());
    let mut out: Vec<u64> = (0..n)
        .map(|i| {
            let x = a.get(i).copied().unwrap_or(0);
            let y = b.get(i).copied().unwrap_or(0);
            (x + p - y) % p
        })
        .collect();
    trim_p(&mut out);
    out
}

/// Polynomial division over F_p with nonzero divisor.
pub(crate) fn divrem_p(a: &[u64], b: &[u64], p: u64) -> (Vec<u64>, Vec<u64>) {
    let db = b.len() - 1;
    let lead_inv = inv_mod_p(b[db], p).expect("nonzero leading coefficient");
    let mut rem = a.to_vec();
    trim_p(&mut rem);
    if rem.len() < b.len() {
        return (Vec::new(), rem);
    }
    let mut quot = vec![0u64; rem.len() - db];
    for i in (0..quot.len()).rev() {
        let c = (rem[i + db] as u128 * lead_inv as u128 % p as u128) as u64;
        if c == 0 {
            continue;
        }
        for (j, &bj) in b.iter().enumerate() {
            let sub = (c as u128 * bj as u128 % p as u128) as u64;
            rem[i + j] = (rem[i + j] + p - sub) % p;
        }
        quot[i] = c;
    }
    trim_p(&mut rem);
    trim_p(&mut quot);
    (quot, rem)
}

pub(crate) fn inverse_mod_p_poly(a: &[u64], m: &[u64], p: u64) -> Option<Vec<u64>> {
    let mut a = a.to_vec();
    trim_p(&mut a);
    if a.is_empty() {
        return None;
    }
    let (mut r0, mut r1) = (m.to_vec(), a);
    let (mut s0, mut s1): (Vec<u64>, Vec<u64>) = (Vec::new(), vec![1]);
    while !r1.is_empty() {
        let (q, r) = divrem_p(&r0, &r1, p);
        let s = sub_p(&s0, &mul_p(&q, &s1, p), p);
        r0 = std::mem::replace(&mut r1, r);
        s0 = std::mem::replace(&mut s1, s);
    }
    if r0.len() != 1 {
        return None;
    }
    let c = inv_mod_p(r0[0], p)?;
    let inv: Vec<u64> = s0.iter().map(|&x| (x as u128 * c as u128 % p as u128) as u64).collect();
    Some(divrem_p(&inv, m, p).1)
}

/// True when the monic polynomial `m` has no monic factor of degree
/// `1..=deg/2` over F_p. Exhaustive search; only meant for small `p^deg`.
pub(crate) fn is_irreducible_p(m: &[u64], p: u64) -> bool {
    let n = m.len() - 1;
    if n == 0 {
        return false;
    }
    for d in 1..=n / 2 {
        let count = p.pow(d as u32);
        for idx in 0..count {
            let mut cand = Vec::with_capacity(d + 1);
            let mut x = idx;
            for _ in 0..d {
                cand.push(x % p);
                x /= p;
            }
            cand.push(1);
            if divrem_p(m, &cand, p).1.is_empty() {
                return false;
            }
        }
    }
    true
}
