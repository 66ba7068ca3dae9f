//! Exact coefficient rings and the reduction maps between them.
//!
//! Four kinds of ring are supported:
//!
//! * `Rational` – the field Q, also standing in for the local ring Z_(p)
//!   (p-integrality is checked when a value is reduced modulo p);
//! * `PrimeField(p)`;
//! * `CyclotomicRational(M)` – the field Q[x]/Φ_M(x), i.e. Q(ζ_M);
//! * `PrimeFieldExt { p, modulus }` – F_p[x]/(modulus) for an irreducible
//!   monic modulus.
//!
//! Every value is kept in canonical form (lowest-terms rationals, residues in
//! `[0, p)`, residue polynomials of degree below the modulus), so derived
//! equality is mathematical equality.

pub(crate) mod poly;

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;
use std::sync::{Arc, Mutex, OnceLock};

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use thiserror::Error;

pub(crate) use poly::inv_mod_p;
use poly::{exact_div_monic_z, mul_z};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RingError {
    #[error("descriptor mismatch: {0} vs {1}")]
    DescriptorMismatch(RingDescriptor, RingDescriptor),
    #[error("{0} is not prime")]
    NotPrime(u64),
    #[error("cyclotomic order must be at least 1")]
    BadOrder,
    #[error("modulus must be monic of degree >= 1")]
    NotMonic,
    #[error("modulus is reducible over F_{0}")]
    Reducible(u64),
    #[error("value is not p-integral for p = {0}")]
    NonPIntegral(u64),
    #[error("zeta image is not a root of the cyclotomic polynomial of order {0}")]
    NotARoot(u64),
    #[error("{0}")]
    Unsupported(String),
    #[error("parse error: {0}")]
    Parse(String),
}

pub type RingResult<T> = Result<T, RingError>;

pub fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    let mut d = 2u64;
    while d * d <= n {
        if n % d == 0 {
            return false;
        }
        d += 1;
    }
    true
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum RingDescriptor {
    Rational,
    PrimeField(u64),
    CyclotomicRational(u64),
    /// `modulus` is monic, coefficients low-to-high.
    PrimeFieldExt {
        p: u64,
        modulus: Vec<u64>,
    },
}

impl RingDescriptor {
    pub fn validate(&self) -> RingResult<()> {
        match self {
            RingDescriptor::Rational => Ok(()),
            RingDescriptor::PrimeField(p) => {
                if is_prime(*p) {
                    Ok(())
                } else {
                    Err(RingError::NotPrime(*p))
                }
            }
            RingDescriptor::CyclotomicRational(m) => {
                if *m >= 1 {
                    Ok(())
                } else {
                    Err(RingError::BadOrder)
                }
            }
            RingDescriptor::PrimeFieldExt { p, modulus } => {
                if !is_prime(*p) {
                    return Err(RingError::NotPrime(*p));
                }
                if modulus.len() < 2 || *modulus.last().unwrap() != 1 || modulus.iter().any(|&c| c >= *p) {
                    return Err(RingError::NotMonic);
                }
                if !poly::is_irreducible_p(modulus, *p) {
                    return Err(RingError::Reducible(*p));
                }
                Ok(())
            }
        }
    }

    /// Characteristic of the ring (0 for the characteristic-zero rings).
    pub fn characteristic(&self) -> u64 {
        match self {
            RingDescriptor::Rational | RingDescriptor::CyclotomicRational(_) => 0,
            RingDescriptor::PrimeField(p) | RingDescriptor::PrimeFieldExt { p, .. } => *p,
        }
    }

    pub fn zero(&self) -> RingValue {
        self.from_int(0)
    }

    pub fn one(&self) -> RingValue {
        self.from_int(1)
    }

    pub fn from_int(&self, n: i64) -> RingValue {
        self.from_bigint(&BigInt::from(n))
    }

    pub fn from_bigint(&self, n: &BigInt) -> RingValue {
        match self {
            RingDescriptor::Rational => RingValue::Rational(BigRational::from_integer(n.clone())),
            RingDescriptor::PrimeField(p) => RingValue::Mod { p: *p, r: mod_bigint(n, *p) },
            RingDescriptor::CyclotomicRational(m) => {
                let ctx = cyclotomic_context(*m);
                let mut coeffs = vec![BigRational::from_integer(n.clone())];
                poly::trim_q(&mut coeffs);
                RingValue::Cyclotomic { ctx, coeffs }
            }
            RingDescriptor::PrimeFieldExt { p, modulus } => {
                let ctx = ext_context(*p, modulus);
                let mut coeffs = vec![mod_bigint(n, *p)];
                poly::trim_p(&mut coeffs);
                RingValue::Ext { ctx, coeffs }
            }
        }
    }

    /// Image of a rational number; for positive characteristic the value must
    /// be p-integral.
    pub fn from_rational(&self, q: &BigRational) -> RingResult<RingValue> {
        match self {
            RingDescriptor::Rational => Ok(RingValue::Rational(q.clone())),
            RingDescriptor::CyclotomicRational(_) => {
                let mut v = self.zero();
                if let RingValue::Cyclotomic { coeffs, .. } = &mut v {
                    *coeffs = vec![q.clone()];
                    poly::trim_q(coeffs);
                }
                Ok(v)
            }
            RingDescriptor::PrimeField(_) | RingDescriptor::PrimeFieldExt { .. } => {
                let p = self.characteristic();
                let r = reduce_rational(q, p)?;
                Ok(self.from_int(r as i64))
            }
        }
    }

    /// The generator `x` of a polynomial quotient ring.
    pub fn generator(&self) -> RingResult<RingValue> {
        match self {
            RingDescriptor::CyclotomicRational(m) => {
                let ctx = cyclotomic_context(*m);
                let coeffs = poly::rem_monic_q(&[BigRational::zero(), BigRational::one()], &ctx.phi);
                Ok(RingValue::Cyclotomic { ctx, coeffs })
            }
            RingDescriptor::PrimeFieldExt { p, modulus } => {
                let ctx = ext_context(*p, modulus);
                let coeffs = poly::divrem_p(&[0, 1], &ctx.modulus, *p).1;
                Ok(RingValue::Ext { ctx, coeffs })
            }
            _ => Err(RingError::Unsupported(format!("{self} has no polynomial generator"))),
        }
    }

    /// Exhaustive list of elements; only for finite rings of modest size.
    pub fn elements(&self) -> RingResult<Vec<RingValue>> {
        match self {
            RingDescriptor::PrimeField(p) => Ok((0..*p).map(|r| RingValue::Mod { p: *p, r }).collect()),
            RingDescriptor::PrimeFieldExt { p, modulus } => {
                let ctx = ext_context(*p, modulus);
                let d = modulus.len() - 1;
                let total = p
                    .checked_pow(d as u32)
                    .filter(|&t| t <= 1 << 20)
                    .ok_or_else(|| RingError::Unsupported("extension field too large to enumerate".into()))?;
                Ok((0..total)
                    .map(|mut idx| {
                        let mut coeffs = Vec::with_capacity(d);
                        for _ in 0..d {
                            coeffs.push(idx % p);
                            idx /= p;
                        }
                        poly::trim_p(&mut coeffs);
                        RingValue::Ext { ctx: ctx.clone(), coeffs }
                    })
                    .collect())
            }
            _ => Err(RingError::Unsupported(format!("{self} is infinite"))),
        }
    }
}

impl fmt::Display for RingDescriptor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RingDescriptor::Rational => write!(f, "rational"),
            RingDescriptor::PrimeField(p) => write!(f, "prime:{p}"),
            RingDescriptor::CyclotomicRational(m) => write!(f, "cyclotomic:{m}"),
            RingDescriptor::PrimeFieldExt { p, modulus } => {
                let parts: Vec<String> = modulus.iter().map(|c| c.to_string()).collect();
                write!(f, "ext:{p}:{}", parts.join(","))
            }
        }
    }
}

impl FromStr for RingDescriptor {
    type Err = RingError;

    fn from_str(s: &str) -> RingResult<Self> {
        let bad = || RingError::Parse(format!("bad ring descriptor `{s}`"));
        let parts: Vec<&str> = s.trim().split(':').collect();
        let desc = match parts.as_slice() {
            ["rational"] => RingDescriptor::Rational,
            ["prime", p] => RingDescriptor::PrimeField(p.parse().map_err(|_| bad())?),
            ["cyclotomic", m] => RingDescriptor::CyclotomicRational(m.parse().map_err(|_| bad())?),
            ["ext", p, coeffs] => RingDescriptor::PrimeFieldExt {
                p: p.parse().map_err(|_| bad())?,
                modulus: coeffs
                    .split(',')
                    .map(|c| c.trim().parse::<u64>())
                    .collect::<Result<_, _>>()
                    .map_err(|_| bad())?,
            },
            _ => return Err(bad()),
        };
        desc.validate()?;
        Ok(desc)
    }
}

#[derive(Debug, PartialEq, Eq, Hash)]
pub struct CyclotomicContext {
    pub order: u64,
    pub phi: Vec<BigInt>,
}

#[derive(Debug, PartialEq, Eq, Hash)]
pub struct ExtContext {
    pub p: u64,
    pub modulus: Vec<u64>,
}

fn cyclotomic_context(m: u64) -> Arc<CyclotomicContext> {
    static CACHE: OnceLock<Mutex<HashMap<u64, Arc<CyclotomicContext>>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    let mut guard = cache.lock().expect("cyclotomic cache poisoned");
    guard.entry(m).or_insert_with(|| Arc::new(CyclotomicContext { order: m, phi: cyclotomic_poly(m) })).clone()
}

fn ext_context(p: u64, modulus: &[u64]) -> Arc<ExtContext> {
    static CACHE: OnceLock<Mutex<HashMap<(u64, Vec<u64>), Arc<ExtContext>>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    let mut guard = cache.lock().expect("extension cache poisoned");
    guard.entry((p, modulus.to_vec())).or_insert_with(|| Arc::new(ExtContext { p, modulus: modulus.to_vec() })).clone()
}

/// The cyclotomic polynomial Φ_M, from x^M − 1 = ∏_{d | M} Φ_d by exact
/// division. Coefficients low-to-high.
pub fn cyclotomic_poly(m: u64) -> Vec<BigInt> {
    assert!(m >= 1, "cyclotomic order must be positive");
    static MEMO: OnceLock<Mutex<HashMap<u64, Vec<BigInt>>>> = OnceLock::new();
    let memo = MEMO.get_or_init(|| Mutex::new(HashMap::new()));
    if let Some(hit) = memo.lock().expect("memo poisoned").get(&m) {
        return hit.clone();
    }
    let mut num = vec![BigInt::zero(); m as usize + 1];
    num[0] = BigInt::from(-1);
    num[m as usize] = BigInt::one();
    let mut den = vec![BigInt::one()];
    for d in 1..m {
        if m % d == 0 {
            den = mul_z(&den, &cyclotomic_poly(d));
        }
    }
    let phi = exact_div_monic_z(&num, &den).expect("x^M - 1 is divisible by its proper cyclotomic factors");
    memo.lock().expect("memo poisoned").insert(m, phi.clone());
    phi
}

pub fn euler_phi(mut n: u64) -> u64 {
    let mut result = n;
    let mut d = 2;
    while d * d <= n {
        if n % d == 0 {
            while n % d == 0 {
                n /= d;
            }
            result -= result / d;
        }
        d += 1;
    }
    if n > 1 {
        result -= result / n;
    }
    result
}

fn mod_bigint(n: &BigInt, p: u64) -> u64 {
    n.mod_floor(&BigInt::from(p)).to_u64().expect("residue fits in u64")
}

/// Reduce a rational number modulo p; fails if p divides the denominator.
pub fn reduce_rational(q: &BigRational, p: u64) -> RingResult<u64> {
    let den = mod_bigint(q.denom(), p);
    let inv = inv_mod_p(den, p).ok_or(RingError::NonPIntegral(p))?;
    let num = mod_bigint(q.numer(), p);
    Ok((num as u128 * inv as u128 % p as u128) as u64)
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum RingValue {
    Rational(BigRational),
    Mod { p: u64, r: u64 },
    Cyclotomic { ctx: Arc<CyclotomicContext>, coeffs: Vec<BigRational> },
    Ext { ctx: Arc<ExtContext>, coeffs: Vec<u64> },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ArithOp {
    Add,
    Sub,
    Mul,
}

/// Checked ring operation on two values of the same ring.
pub fn ring_arith(a: &RingValue, b: &RingValue, op: ArithOp) -> RingResult<RingValue> {
    match op {
        ArithOp::Add => a.try_add(b),
        ArithOp::Sub => a.try_sub(b),
        ArithOp::Mul => a.try_mul(b),
    }
}

/// Multiplicative inverse, or `None` when the value is not a unit.
pub fn ring_inverse(a: &RingValue) -> Option<RingValue> {
    a.inverse()
}

impl RingValue {
    pub fn rational(n: i64, d: i64) -> RingValue {
        RingValue::Rational(BigRational::new(BigInt::from(n), BigInt::from(d)))
    }

    /// Σ coeffs[i] ζ_m^i in Q(ζ_m); `coeffs` may be longer than φ(m).
    pub fn cyclotomic(m: u64, coeffs: &[BigRational]) -> RingValue {
        let ctx = cyclotomic_context(m);
        let coeffs = poly::rem_monic_q(coeffs, &ctx.phi);
        RingValue::Cyclotomic { ctx, coeffs }
    }

    pub fn descriptor(&self) -> RingDescriptor {
        match self {
            RingValue::Rational(_) => RingDescriptor::Rational,
            RingValue::Mod { p, .. } => RingDescriptor::PrimeField(*p),
            RingValue::Cyclotomic { ctx, .. } => RingDescriptor::CyclotomicRational(ctx.order),
            RingValue::Ext { ctx, .. } => RingDescriptor::PrimeFieldExt { p: ctx.p, modulus: ctx.modulus.clone() },
        }
    }

    fn same_ring(&self, other: &RingValue) -> bool {
        match (self, other) {
            (RingValue::Rational(_), RingValue::Rational(_)) => true,
            (RingValue::Mod { p, .. }, RingValue::Mod { p: q, .. }) => p == q,
            (RingValue::Cyclotomic { ctx: a, .. }, RingValue::Cyclotomic { ctx: b, .. }) => a.order == b.order,
            (RingValue::Ext { ctx: a, .. }, RingValue::Ext { ctx: b, .. }) => a == b,
            _ => false,
        }
    }

    fn mismatch(&self, other: &RingValue) -> RingError {
        RingError::DescriptorMismatch(self.descriptor(), other.descriptor())
    }

    pub fn is_zero(&self) -> bool {
        match self {
            RingValue::Rational(q) => q.is_zero(),
            RingValue::Mod { r, .. } => *r == 0,
            RingValue::Cyclotomic { coeffs, .. } => coeffs.is_empty(),
            RingValue::Ext { coeffs, .. } => coeffs.is_empty(),
        }
    }

    pub fn is_one(&self) -> bool {
        *self == self.descriptor().one()
    }

    pub fn try_add(&self, other: &RingValue) -> RingResult<RingValue> {
        self.zip(other, |a, b| a + b, |a, b, p| (a + b) % p)
    }

    pub fn try_sub(&self, other: &RingValue) -> RingResult<RingValue> {
        self.zip(other, |a, b| a - b, |a, b, p| (a + p - b) % p)
    }

    fn zip(
        &self,
        other: &RingValue,
        fq: impl Fn(&BigRational, &BigRational) -> BigRational,
        fp: impl Fn(u64, u64, u64) -> u64,
    ) -> RingResult<RingValue> {
        if !self.same_ring(other) {
            return Err(self.mismatch(other));
        }
        Ok(match (self, other) {
            (RingValue::Rational(a), RingValue::Rational(b)) => RingValue::Rational(fq(a, b)),
            (RingValue::Mod { p, r: a }, RingValue::Mod { r: b, .. }) => RingValue::Mod { p: *p, r: fp(*a, *b, *p) },
            (RingValue::Cyclotomic { ctx, coeffs: a }, RingValue::Cyclotomic { coeffs: b, .. }) => {
                let zero = BigRational::zero();
                let n = a.len().max(b.len());
                let mut coeffs: Vec<BigRational> =
                    (0..n).map(|i| fq(a.get(i).unwrap_or(&zero), b.get(i).unwrap_or(&zero))).collect();
                poly::trim_q(&mut coeffs);
                RingValue::Cyclotomic { ctx: ctx.clone(), coeffs }
            }
            (RingValue::Ext { ctx, coeffs: a }, RingValue::Ext { coeffs: b, .. }) => {
                let n = a.len().max(b.len());
                let mut coeffs: Vec<u64> =
                    (0..n).map(|i| fp(a.get(i).copied().unwrap_or(0), b.get(i).copied().unwrap_or(0), ctx.p)).collect();
                poly::trim_p(&mut coeffs);
                RingValue::Ext { ctx: ctx.clone(), coeffs }
            }
            _ => unreachable!(),
        })
    }

    pub fn try_mul(&self, other: &RingValue) -> RingResult<RingValue> {
        if !self.same_ring(other) {
            return Err(self.mismatch(other));
        }
        Ok(match (self, other) {
            (RingValue::Rational(a), RingValue::Rational(b)) => RingValue::Rational(a * b),
            (RingValue::Mod { p, r: a }, RingValue::Mod { r: b, .. }) => {
                RingValue::Mod { p: *p, r: (*a as u128 * *b as u128 % *p as u128) as u64 }
            }
            (RingValue::Cyclotomic { ctx, coeffs: a }, RingValue::Cyclotomic { coeffs: b, .. }) => {
                let prod = poly::mul_q(a, b);
                RingValue::Cyclotomic { ctx: ctx.clone(), coeffs: poly::rem_monic_q(&prod, &ctx.phi) }
            }
            (RingValue::Ext { ctx, coeffs: a }, RingValue::Ext { coeffs: b, .. }) => {
                let prod = poly::mul_p(a, b, ctx.p);
                RingValue::Ext { ctx: ctx.clone(), coeffs: poly::divrem_p(&prod, &ctx.modulus, ctx.p).1 }
            }
            _ => unreachable!(),
        })
    }

    pub fn neg(&self) -> RingValue {
        self.descriptor().zero().try_sub(self).expect("same ring")
    }

    pub fn inverse(&self) -> Option<RingValue> {
        if self.is_zero() {
            return None;
        }
        match self {
            RingValue::Rational(q) => Some(RingValue::Rational(q.recip())),
            RingValue::Mod { p, r } => inv_mod_p(*r, *p).map(|r| RingValue::Mod { p: *p, r }),
            RingValue::Cyclotomic { ctx, coeffs } => {
                let m: Vec<BigRational> = ctx.phi.iter().map(|c| BigRational::from_integer(c.clone())).collect();
                poly::inverse_mod_q(coeffs, &m).map(|coeffs| RingValue::Cyclotomic { ctx: ctx.clone(), coeffs })
            }
            RingValue::Ext { ctx, coeffs } => poly::inverse_mod_p_poly(coeffs, &ctx.modulus, ctx.p)
                .map(|coeffs| RingValue::Ext { ctx: ctx.clone(), coeffs }),
        }
    }

    /// Integer power; negative exponents require a unit.
    pub fn pow(&self, e: i64) -> Option<RingValue> {
        let base = if e < 0 { self.inverse()? } else { self.clone() };
        let mut e = e.unsigned_abs();
        let mut acc = self.descriptor().one();
        let mut sq = base;
        while e > 0 {
            if e & 1 == 1 {
                acc = &acc * &sq;
            }
            sq = &sq * &sq;
            e >>= 1;
        }
        Some(acc)
    }

    pub fn scale_int(&self, n: i64) -> RingValue {
        self * &self.descriptor().from_int(n)
    }

    /// The rational value of a characteristic-zero element lying in Q.
    pub fn as_rational(&self) -> Option<BigRational> {
        match self {
            RingValue::Rational(q) => Some(q.clone()),
            RingValue::Cyclotomic { coeffs, .. } => match coeffs.len() {
                0 => Some(BigRational::zero()),
                1 => Some(coeffs[0].clone()),
                _ => None,
            },
            _ => None,
        }
    }

    /// Canonical integer lift in `[0, p)` of a prime-field element.
    pub fn residue(&self) -> Option<u64> {
        match self {
            RingValue::Mod { r, .. } => Some(*r),
            _ => None,
        }
    }

    /// Textual encoding used by the q-expansion file format.
    pub fn encode(&self) -> String {
        match self {
            RingValue::Rational(q) => encode_rational(q),
            RingValue::Mod { p, r } => format!("{r} mod {p}"),
            RingValue::Cyclotomic { ctx, coeffs } => {
                let deg = ctx.phi.len() - 1;
                let zero = BigRational::zero();
                (0..deg).map(|i| encode_rational(coeffs.get(i).unwrap_or(&zero))).collect::<Vec<_>>().join(",")
            }
            RingValue::Ext { ctx, coeffs } => {
                let deg = ctx.modulus.len() - 1;
                let body: Vec<String> = (0..deg).map(|i| coeffs.get(i).copied().unwrap_or(0).to_string()).collect();
                format!("{} mod {}", body.join(","), ctx.p)
            }
        }
    }

    /// Inverse of [`RingValue::encode`] for a known ring.
    pub fn parse(desc: &RingDescriptor, s: &str) -> RingResult<RingValue> {
        let s = s.trim();
        let bad = || RingError::Parse(format!("cannot parse `{s}` as an element of {desc}"));
        match desc {
            RingDescriptor::Rational => Ok(RingValue::Rational(parse_rational(s).ok_or_else(bad)?)),
            RingDescriptor::PrimeField(p) => {
                let (r, q) = s.split_once(" mod ").ok_or_else(bad)?;
                let q: u64 = q.trim().parse().map_err(|_| bad())?;
                let r: u64 = r.trim().parse().map_err(|_| bad())?;
                if q != *p || r >= *p {
                    return Err(bad());
                }
                Ok(RingValue::Mod { p: *p, r })
            }
            RingDescriptor::CyclotomicRational(m) => {
                let ctx = cyclotomic_context(*m);
                let coeffs: Vec<BigRational> =
                    s.split(',').map(|c| parse_rational(c.trim())).collect::<Option<_>>().ok_or_else(bad)?;
                if coeffs.len() != ctx.phi.len() - 1 {
                    return Err(bad());
                }
                let coeffs = poly::rem_monic_q(&coeffs, &ctx.phi);
                Ok(RingValue::Cyclotomic { ctx, coeffs })
            }
            RingDescriptor::PrimeFieldExt { p, modulus } => {
                let (body, q) = s.rsplit_once(" mod ").ok_or_else(bad)?;
                if q.trim().parse::<u64>().map_err(|_| bad())? != *p {
                    return Err(bad());
                }
                let mut coeffs: Vec<u64> =
                    body.split(',').map(|c| c.trim().parse::<u64>()).collect::<Result<_, _>>().map_err(|_| bad())?;
                if coeffs.len() != modulus.len() - 1 || coeffs.iter().any(|&c| c >= *p) {
                    return Err(bad());
                }
                poly::trim_p(&mut coeffs);
                Ok(RingValue::Ext { ctx: ext_context(*p, modulus), coeffs })
            }
        }
    }
}

fn encode_rational(q: &BigRational) -> String {
    format!("{}/{}", q.numer(), q.denom())
}

/// Parses `a/b` (and, leniently, a bare integer `a`).
pub fn parse_rational(s: &str) -> Option<BigRational> {
    let (n, d) = match s.split_once('/') {
        Some((n, d)) => (n.trim(), d.trim()),
        None => (s.trim(), "1"),
    };
    let n: BigInt = n.parse().ok()?;
    let d: BigInt = d.parse().ok()?;
    if !d.is_positive() {
        return None;
    }
    Some(BigRational::new(n, d))
}

/// Ring homomorphism from Q or Q(ζ_M) to a field of characteristic p.
///
/// Rational inputs go to F_p. Cyclotomic inputs need `zeta_image`, a root of
/// Φ_M in the target field (F_p or an extension of it), and land in that
/// field. Fails with `NonPIntegral` if a denominator is divisible by p.
pub fn reduce_to_prime_field(a: &RingValue, p: u64, zeta_image: Option<&RingValue>) -> RingResult<RingValue> {
    if !is_prime(p) {
        return Err(RingError::NotPrime(p));
    }
    match a {
        RingValue::Rational(q) => Ok(RingValue::Mod { p, r: reduce_rational(q, p)? }),
        RingValue::Cyclotomic { ctx, coeffs } => {
            let zeta =
                zeta_image.ok_or_else(|| RingError::Unsupported("cyclotomic reduction needs a zeta image".into()))?;
            let target = zeta.descriptor();
            if target.characteristic() != p {
                return Err(RingError::Unsupported(format!("zeta image lives in {target}, not characteristic {p}")));
            }
            let mut phi_at = target.zero();
            for c in ctx.phi.iter().rev() {
                phi_at = &(&phi_at * zeta) + &target.from_bigint(c);
            }
            if !phi_at.is_zero() {
                return Err(RingError::NotARoot(ctx.order));
            }
            let mut acc = target.zero();
            for c in coeffs.iter().rev() {
                acc = &(&acc * zeta) + &target.from_rational(c)?;
            }
            Ok(acc)
        }
        other => Err(RingError::Unsupported(format!("cannot reduce an element of {}", other.descriptor()))),
    }
}

impl fmt::Display for RingValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.encode())
    }
}

// Operator sugar for internal use; panics on mismatched rings. Library entry
// points validate descriptors before reaching these.
macro_rules! binop {
    ($tr:ident, $method:ident, $checked:ident) => {
        impl std::ops::$tr<&RingValue> for &RingValue {
            type Output = RingValue;
            fn $method(self, rhs: &RingValue) -> RingValue {
                self.$checked(rhs).unwrap_or_else(|e| panic!("{e}"))
            }
        }
    };
}
binop!(Add, add, try_add);
binop!(Sub, sub, try_sub);
binop!(Mul, mul, try_mul);

impl std::ops::Neg for &RingValue {
    type Output = RingValue;
    fn neg(self) -> RingValue {
        RingValue::neg(self)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn q(n: i64, d: i64) -> RingValue {
        RingValue::rational(n, d)
    }

    fn zi(ints: &[i64]) -> Vec<BigInt> {
        ints.iter().map(|&i| BigInt::from(i)).collect()
    }

    #[test]
    fn rational_add() {
        assert_eq!(ring_arith(&q(1, 2), &q(1, 3), ArithOp::Add).unwrap(), q(5, 6));
    }

    #[test]
    fn prime_field_mul() {
        let f5 = RingDescriptor::PrimeField(5);
        assert_eq!(&f5.from_int(3) * &f5.from_int(4), f5.from_int(2));
    }

    #[test]
    fn cyclotomic_square_of_generator() {
        let c4 = RingDescriptor::CyclotomicRational(4);
        let x = c4.generator().unwrap();
        assert_eq!(&x * &x, c4.from_int(-1));
    }

    #[test]
    fn inverses() {
        assert!(q(0, 1).inverse().is_none());
        let f7 = RingDescriptor::PrimeField(7);
        assert_eq!(f7.from_int(3).inverse().unwrap(), f7.from_int(5));
        let c4 = RingDescriptor::CyclotomicRational(4);
        let x = c4.generator().unwrap();
        assert_eq!(x.inverse().unwrap(), x.neg());
    }

    #[test]
    fn mismatch_is_an_error() {
        let a = RingDescriptor::PrimeField(5).one();
        let b = RingDescriptor::PrimeField(7).one();
        assert!(matches!(a.try_add(&b), Err(RingError::DescriptorMismatch(..))));
        assert!(q(1, 1).try_mul(&a).is_err());
    }

    #[test]
    fn small_cyclotomic_polynomials() {
        assert_eq!(cyclotomic_poly(1), zi(&[-1, 1]));
        assert_eq!(cyclotomic_poly(2), zi(&[1, 1]));
        assert_eq!(cyclotomic_poly(6), zi(&[1, -1, 1]));
        assert_eq!(cyclotomic_poly(4), zi(&[1, 0, 1]));
    }

    #[test]
    fn cyclotomic_degree_and_product() {
        for m in 1..=40u64 {
            let phi = cyclotomic_poly(m);
            assert_eq!(phi.len() as u64 - 1, euler_phi(m), "degree of Phi_{m}");
            let mut prod = vec![BigInt::one()];
            for d in 1..=m {
                if m % d == 0 {
                    prod = mul_z(&prod, &cyclotomic_poly(d));
                }
            }
            let mut expect = vec![BigInt::zero(); m as usize + 1];
            expect[0] = BigInt::from(-1);
            expect[m as usize] = BigInt::one();
            assert_eq!(prod, expect, "product of Phi_d over d | {m}");
        }
    }

    #[test]
    fn reduction_examples() {
        assert_eq!(reduce_to_prime_field(&q(3, 4), 5, None).unwrap(), RingValue::Mod { p: 5, r: 2 });
        assert_eq!(reduce_to_prime_field(&q(1, 5), 5, None), Err(RingError::NonPIntegral(5)));
        let x = RingDescriptor::CyclotomicRational(4).generator().unwrap();
        let two = RingDescriptor::PrimeField(5).from_int(2);
        assert_eq!(reduce_to_prime_field(&x, 5, Some(&two)).unwrap(), two);
        let one = RingDescriptor::PrimeField(5).one();
        assert_eq!(reduce_to_prime_field(&x, 5, Some(&one)), Err(RingError::NotARoot(4)));
    }

    #[test]
    fn extension_validation() {
        assert!(RingDescriptor::PrimeFieldExt { p: 7, modulus: vec![1, 0, 1] }.validate().is_ok());
        // x^2 + 1 = (x + 2)(x + 3) over F_5
        assert_eq!(
            RingDescriptor::PrimeFieldExt { p: 5, modulus: vec![1, 0, 1] }.validate(),
            Err(RingError::Reducible(5))
        );
        assert_eq!(RingDescriptor::PrimeField(9).validate(), Err(RingError::NotPrime(9)));
    }

    fn random_value(desc: &RingDescriptor, rng: &mut ChaCha8Rng) -> RingValue {
        match desc {
            RingDescriptor::Rational => q(rng.gen_range(-20..=20), rng.gen_range(1..=9)),
            RingDescriptor::PrimeField(p) => desc.from_int(rng.gen_range(0..*p as i64)),
            RingDescriptor::CyclotomicRational(_) => {
                let x = desc.generator().unwrap();
                let mut acc = desc.zero();
                for _ in 0..4 {
                    let c = desc
                        .from_rational(&BigRational::new(rng.gen_range(-5..=5).into(), rng.gen_range(1..=4).into()))
                        .unwrap();
                    acc = &(&acc * &x) + &c;
                }
                acc
            }
            RingDescriptor::PrimeFieldExt { p, .. } => {
                let x = desc.generator().unwrap();
                let a = desc.from_int(rng.gen_range(0..*p as i64));
                let b = desc.from_int(rng.gen_range(0..*p as i64));
                &(&a * &x) + &b
            }
        }
    }

    #[test]
    fn ring_axioms_on_random_triples() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let rings = [
            RingDescriptor::Rational,
            RingDescriptor::PrimeField(7),
            RingDescriptor::CyclotomicRational(5),
            RingDescriptor::CyclotomicRational(12),
            RingDescriptor::PrimeFieldExt { p: 7, modulus: vec![1, 0, 1] },
        ];
        for desc in &rings {
            for _ in 0..500 {
                let (a, b, c) =
                    (random_value(desc, &mut rng), random_value(desc, &mut rng), random_value(desc, &mut rng));
                assert_eq!(&(&a * &b) * &c, &a * &(&b * &c));
                assert_eq!(&(&a + &b) + &c, &a + &(&b + &c));
                assert_eq!(&a * &(&b + &c), &(&a * &b) + &(&a * &c));
                assert_eq!(&a * &b, &b * &a);
                assert_eq!(&a + &b, &b + &a);
                if let Some(inv) = a.inverse() {
                    assert!((&a * &inv).is_one());
                } else {
                    assert!(a.is_zero(), "{desc}: nonzero element without inverse");
                }
            }
        }
    }

    #[test]
    fn reduction_is_a_homomorphism() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let p = 7;
        for _ in 0..200 {
            let a = q(rng.gen_range(-50..=50), rng.gen_range(1..=6));
            let b = q(rng.gen_range(-50..=50), rng.gen_range(1..=6));
            let ra = reduce_to_prime_field(&a, p, None).unwrap();
            let rb = reduce_to_prime_field(&b, p, None).unwrap();
            assert_eq!(reduce_to_prime_field(&(&a + &b), p, None).unwrap(), &ra + &rb);
            assert_eq!(reduce_to_prime_field(&(&a * &b), p, None).unwrap(), &ra * &rb);
        }
        // Q(zeta_3) -> F_7 with zeta = 2 (2^2 + 2 + 1 = 7)
        let c3 = RingDescriptor::CyclotomicRational(3);
        let z = RingDescriptor::PrimeField(7).from_int(2);
        for _ in 0..200 {
            let a = random_value(&c3, &mut rng);
            let b = random_value(&c3, &mut rng);
            let (Ok(ra), Ok(rb)) = (reduce_to_prime_field(&a, p, Some(&z)), reduce_to_prime_field(&b, p, Some(&z)))
            else {
                continue;
            };
            assert_eq!(reduce_to_prime_field(&(&a * &b), p, Some(&z)).unwrap(), &ra * &rb);
            assert_eq!(reduce_to_prime_field(&(&a + &b), p, Some(&z)).unwrap(), &ra + &rb);
        }
    }

    #[test]
    fn encodings_round_trip() {
        let cases = [
            (RingDescriptor::Rational, "-3/4"),
            (RingDescriptor::PrimeField(7), "5 mod 7"),
            (RingDescriptor::CyclotomicRational(4), "1/2,-1/1"),
            (RingDescriptor::PrimeFieldExt { p: 7, modulus: vec![1, 0, 1] }, "3,6 mod 7"),
        ];
        for (desc, text) in cases {
            let v = RingValue::parse(&desc, text).unwrap();
            assert_eq!(v.encode(), text);
            assert_eq!(desc.to_string().parse::<RingDescriptor>().unwrap(), desc);
        }
        assert_eq!(RingValue::parse(&RingDescriptor::Rational, "6").unwrap().encode(), "6/1");
        assert!(RingValue::parse(&RingDescriptor::PrimeField(7), "9 mod 7").is_err());
    }
}
