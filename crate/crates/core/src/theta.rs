//! The polynomials P_j and Q^{(g)}_{k1,k2}, the bracket [F, G], and the
//! Böcherer–Nagaoka theta operator on q-expansions.
//!
//! The bracket uses the eigenrelation ∂_q q_N^n = (n/N) q_N^n, so applying
//! the differential operator to F(q_1)G(q_2) and restricting to the diagonal
//! becomes Σ_{n1+n2=n} Q(n1/N, n2/N) a_F(n1) a_G(n2).

use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};
use thiserror::Error;

use crate::exactring::poly::{divrem_q, mul_q, sub_q, trim_q};
use crate::exactring::{RingDescriptor, RingError, RingValue};
use crate::qexp::{qexp_scale, reduce_mod_p, FourierIndex, QExpError, QExpansion};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ThetaError {
    #[error("weights must satisfy 2k >= g (g = {g}, k1 = {k1}, k2 = {k2})")]
    Context { g: usize, k1: i64, k2: i64 },
    #[error("hypothesis violated: {0}")]
    Hypothesis(String),
    #[error("H is not congruent to 1 mod {p}: coefficient at {index}")]
    NotCongruentToOne { p: u64, index: String },
    #[error(transparent)]
    QExp(#[from] QExpError),
    #[error(transparent)]
    Ring(#[from] RingError),
}

pub type ThetaResult<T> = Result<T, ThetaError>;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PQContext {
    g: usize,
    k1: i64,
    k2: i64,
}

impl PQContext {
    pub fn new(g: usize, k1: i64, k2: i64) -> ThetaResult<Self> {
        let g2 = g as i64;
        if g == 0 || 2 * k1 < g2 || 2 * k2 < g2 {
            return Err(ThetaError::Context { g, k1, k2 });
        }
        Ok(Self { g, k1, k2 })
    }

    pub fn g(&self) -> usize {
        self.g
    }
    pub fn k1(&self) -> i64 {
        self.k1
    }
    pub fn k2(&self) -> i64 {
        self.k2
    }

    /// The constant (−1)^j j! (g−j)! C(2k2−j, g−j) C(2k1−g+j, j) multiplying P_j.
    pub fn weight_of(&self, j: usize) -> BigInt {
        let g = self.g;
        let sign = if j % 2 == 0 { BigInt::one() } else { -BigInt::one() };
        sign * factorial(j)
            * factorial(g - j)
            * binomial(2 * self.k2 - j as i64, (g - j) as i64)
            * binomial(2 * self.k1 - g as i64 + j as i64, j as i64)
    }
}

pub fn factorial(n: usize) -> BigInt {
    (1..=n).fold(BigInt::one(), |acc, i| acc * BigInt::from(i))
}

/// C(a, b) by the falling factorial, for any integer a; zero when b < 0.
pub fn binomial(a: i64, b: i64) -> BigInt {
    if b < 0 {
        return BigInt::zero();
    }
    let mut num = BigInt::one();
    for i in 0..b {
        num *= BigInt::from(a - i);
    }
    num / factorial(b as usize)
}

/// Coefficients [P_0, …, P_g] of det(R + xS), by fraction-free elimination
/// over Q[x].
pub fn p_polys(r: &[Vec<BigRational>], s: &[Vec<BigRational>]) -> Vec<BigRational> {
    let g = r.len();
    let mut a: Vec<Vec<Vec<BigRational>>> = (0..g)
        .map(|i| {
            (0..g)
                .map(|j| {
                    let mut e = vec![r[i][j].clone(), s[i][j].clone()];
                    trim_q(&mut e);
                    e
                })
                .collect()
        })
        .collect();
    let mut out = vec![BigRational::zero(); g + 1];
    let mut negate = false;
    let mut prev = vec![BigRational::one()];
    for k in 0..g {
        if a[k][k].is_empty() {
            match (k + 1..g).find(|&i| !a[i][k].is_empty()) {
                Some(i) => {
                    a.swap(k, i);
                    negate = !negate;
                }
                None => return out,
            }
        }
        for i in k + 1..g {
            for j in k + 1..g {
                let num = sub_q(&mul_q(&a[i][j], &a[k][k]), &mul_q(&a[i][k], &a[k][j]));
                let (q, rem) = divrem_q(&num, &prev);
                debug_assert!(rem.is_empty(), "Bareiss division is exact");
                a[i][j] = q;
            }
        }
        prev = a[k][k].clone();
    }
    for (i, c) in a[g - 1][g - 1].iter().enumerate() {
        out[i] = if negate { -c.clone() } else { c.clone() };
    }
    out
}

/// Q^{(g)}_{k1,k2}(R, S).
pub fn q_eval(ctx: &PQContext, r: &[Vec<BigRational>], s: &[Vec<BigRational>]) -> BigRational {
    let p = p_polys(r, s);
    p.iter()
        .enumerate()
        .map(|(j, pj)| BigRational::from_integer(ctx.weight_of(j)) * pj)
        .fold(BigRational::zero(), |acc, t| acc + t)
}

fn doubled_rational(n: &FourierIndex) -> Vec<Vec<BigRational>> {
    n.doubled().iter().map(|r| r.iter().map(|&x| BigRational::from_integer(x.into())).collect()).collect()
}

/// [F, G] with Σ_{n1+n2=n} Q(n1/N, n2/N) a_F(n1) a_G(n2); weight k1 + k2 + 2.
pub fn bracket(f: &QExpansion, h: &QExpansion, ctx: &PQContext) -> ThetaResult<QExpansion> {
    bracket_terms(f, h, ctx, None)
}

/// The bracket restricted to the P_j parts with j in `only` (all when `None`).
pub fn bracket_terms(
    f: &QExpansion,
    h: &QExpansion,
    ctx: &PQContext,
    only: Option<&[usize]>,
) -> ThetaResult<QExpansion> {
    if f.g() != ctx.g || h.g() != ctx.g {
        return Err(
            QExpError::Mismatch(format!("context degree {} vs series degree {}/{}", ctx.g, f.g(), h.g())).into()
        );
    }
    if f.level() != h.level() || f.ring() != h.ring() {
        return Err(QExpError::Mismatch("level or ring differs".into()).into());
    }
    for (w, k, name) in [(f.weight(), ctx.k1, "F"), (h.weight(), ctx.k2, "G")] {
        if w.is_some_and(|w| w != k) {
            return Err(
                QExpError::Mismatch(format!("{name} has weight {}, context expects {k}", w.unwrap_or(0))).into()
            );
        }
    }
    let ring = f.ring().clone();
    let tau = f.tau().min(h.tau());
    let weights: Vec<BigInt> = (0..=ctx.g)
        .map(|j| if only.is_none_or(|js| js.contains(&j)) { ctx.weight_of(j) } else { BigInt::zero() })
        .collect();
    // Q is homogeneous of degree g, so Q(n1/N, n2/N) = Q(2n1, 2n2) / (2N)^g.
    let mut acc: BTreeMap<FourierIndex, RingValue> = BTreeMap::new();
    for (n1, a) in f.coeffs() {
        let d1 = doubled_rational(n1);
        for (n2, b) in h.coeffs() {
            if n1.trace() + n2.trace() > tau {
                continue;
            }
            let p = p_polys(&d1, &doubled_rational(n2));
            let qv: BigRational = p.iter().zip(&weights).map(|(pj, w)| pj * BigRational::from_integer(w.clone())).sum();
            if qv.is_zero() {
                continue;
            }
            let term = &ring.from_rational(&qv)? * &(a * b);
            let n = n1.add(n2);
            let cur = acc.remove(&n).unwrap_or_else(|| ring.zero());
            acc.insert(n, &cur + &term);
        }
    }
    let scale = BigRational::new(BigInt::one(), (BigInt::from(2) * BigInt::from(f.level())).pow(ctx.g as u32));
    let scale = ring.from_rational(&scale)?;
    let mut out = QExpansion::new(ctx.g, f.level(), Some(ctx.k1 + ctx.k2 + 2), ring, tau);
    for (n, c) in acc {
        out.set(n, &c * &scale);
    }
    Ok(out)
}

fn check_theta_prime(g: usize, p: u64) -> ThetaResult<()> {
    if (p as usize) * 2 <= g * (g + 1) {
        return Err(ThetaError::Hypothesis(format!("need p > g(g+1)/2, got p = {p}, g = {g}")));
    }
    Ok(())
}

/// θ_BN f = N^{−g} Σ det(n) a(n) q_N^n over a field of characteristic p.
pub fn theta_bn_direct(f: &QExpansion, p: u64) -> ThetaResult<QExpansion> {
    if f.ring().characteristic() != p {
        return Err(ThetaError::Hypothesis(format!("expansion lives in {}, not characteristic {p}", f.ring())));
    }
    check_theta_prime(f.g(), p)?;
    if f.level() % p == 0 {
        return Err(ThetaError::Hypothesis(format!("level {} is not invertible mod {p}", f.level())));
    }
    let ring = f.ring().clone();
    let ng = BigRational::from_integer(BigInt::from(f.level()).pow(f.g() as u32));
    let out = f.map_coeffs(ring.clone(), |n, c| Ok(&ring.from_rational(&(n.det() / &ng))? * c))?;
    Ok(out.with_weight(f.weight().map(|k| k + p as i64 + 1)))
}

/// (−1)^g/(g+1)! · g! · C(2p−2, g), the factor in front of det(R) in the
/// normalised bracket; it is ≡ 1 mod p.
pub fn normalization_constant(g: usize, p: u64) -> BigRational {
    let sign = if g % 2 == 0 { BigInt::one() } else { -BigInt::one() };
    BigRational::new(sign * factorial(g) * binomial(2 * p as i64 - 2, g as i64), factorial(g + 1))
}

/// Reduction mod p of ((−1)^g/(g+1)!) [F, H] with k2 = p − 1, for H ≡ 1 mod p.
pub fn theta_bn_via_bracket(f: &QExpansion, h: &QExpansion, g: usize, p: u64) -> ThetaResult<QExpansion> {
    check_theta_prime(g, p)?;
    if *f.ring() != RingDescriptor::Rational || *h.ring() != RingDescriptor::Rational {
        return Err(ThetaError::Hypothesis("bracket route takes rational expansions".into()));
    }
    let hbar = reduce_mod_p(h, p, None)?;
    for (n, c) in hbar.coeffs() {
        let expected_one = n.trace() == 0;
        if (expected_one && !c.is_one()) || (!expected_one && !c.is_zero()) {
            return Err(ThetaError::NotCongruentToOne { p, index: n.to_string() });
        }
    }
    if hbar.coefficient(&FourierIndex::zero(g)).is_zero() {
        return Err(ThetaError::NotCongruentToOne { p, index: FourierIndex::zero(g).to_string() });
    }
    let k1 = f.weight().ok_or_else(|| ThetaError::Hypothesis("F needs a weight".into()))?;
    let ctx = PQContext::new(g, k1, p as i64 - 1)?;
    let raw = bracket(f, &h.clone().with_weight(Some(p as i64 - 1)), &ctx)?;
    let sign = if g % 2 == 0 { 1 } else { -1 };
    let c = RingValue::Rational(BigRational::new(BigInt::from(sign), factorial(g + 1)));
    Ok(reduce_mod_p(&qexp_scale(&c, &raw)?, p, None)?)
}
