//! Trace-truncated formal Fourier expansions Σ a(n) q_N^n of degree-g Siegel
//! modular forms.
//!
//! Indices n run over half-integral symmetric positive semidefinite matrices
//! and are stored doubled (2n, integral with even diagonal). An expansion
//! with trace bound τ knows a(n) exactly for Tr(n) ≤ τ and nothing beyond.

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fmt;

use num_bigint::BigInt;
use num_integer::Roots;
use num_rational::BigRational;
use num_traits::{One, Zero};
use thiserror::Error;

use crate::exactring::{reduce_to_prime_field, RingDescriptor, RingError, RingValue};
use crate::linalg::{det_int, is_psd_int};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum QExpError {
    #[error("index matrix is not square")]
    NotSquare,
    #[error("index matrix is not symmetric")]
    NotSymmetric,
    #[error("doubled index has an odd diagonal entry")]
    OddDiagonal,
    #[error("index matrix is not positive semidefinite")]
    NotPSD,
    #[error("expansions do not match: {0}")]
    Mismatch(String),
    #[error("coefficient at index {index} is not {p}-integral")]
    NonPIntegral { index: String, p: u64 },
    #[error("Eisenstein series needs an even weight >= 4 (got {0})")]
    BadWeight(i64),
    #[error(transparent)]
    Ring(#[from] RingError),
    #[error("parse error: {0}")]
    Parse(String),
}

pub type QExpResult<T> = Result<T, QExpError>;

/// A Fourier index n, stored as the doubled matrix 2n.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct FourierIndex {
    doubled: Vec<Vec<i64>>,
}

/// Checks symmetry, even diagonal and positive semidefiniteness of `doubled`.
pub fn index_validate(doubled: Vec<Vec<i64>>) -> QExpResult<FourierIndex> {
    let g = doubled.len();
    if doubled.iter().any(|r| r.len() != g) {
        return Err(QExpError::NotSquare);
    }
    for i in 0..g {
        for j in 0..i {
            if doubled[i][j] != doubled[j][i] {
                return Err(QExpError::NotSymmetric);
            }
        }
        if doubled[i][i] % 2 != 0 {
            return Err(QExpError::OddDiagonal);
        }
    }
    if !is_psd_int(&doubled) {
        return Err(QExpError::NotPSD);
    }
    Ok(FourierIndex { doubled })
}

impl FourierIndex {
    pub fn zero(g: usize) -> Self {
        Self { doubled: vec![vec![0; g]; g] }
    }

    /// The g=1 index q^m.
    pub fn scalar(m: i64) -> Self {
        Self { doubled: vec![vec![2 * m]] }
    }

    /// Builds an index from the upper triangle of the doubled matrix, row-major.
    pub fn from_upper(g: usize, upper: &[i64]) -> QExpResult<Self> {
        if upper.len() != g * (g + 1) / 2 {
            return Err(QExpError::Parse(format!("expected {} upper-triangle entries", g * (g + 1) / 2)));
        }
        let mut m = vec![vec![0i64; g]; g];
        let mut it = upper.iter();
        for i in 0..g {
            for j in i..g {
                let v = *it.next().expect("length checked");
                m[i][j] = v;
                m[j][i] = v;
            }
        }
        index_validate(m)
    }

    pub fn g(&self) -> usize {
        self.doubled.len()
    }

    pub fn doubled(&self) -> &[Vec<i64>] {
        &self.doubled
    }

    pub fn upper(&self) -> Vec<i64> {
        let g = self.g();
        (0..g).flat_map(|i| (i..g).map(move |j| (i, j))).map(|(i, j)| self.doubled[i][j]).collect()
    }

    /// Tr(n).
    pub fn trace(&self) -> i64 {
        (0..self.g()).map(|i| self.doubled[i][i]).sum::<i64>() / 2
    }

    pub fn det_doubled(&self) -> BigInt {
        det_int(&self.doubled)
    }

    /// det(n) = det(2n) / 2^g.
    pub fn det(&self) -> BigRational {
        BigRational::new(self.det_doubled(), BigInt::one() << self.g())
    }

    /// n as a rational matrix.
    pub fn half(&self) -> Vec<Vec<BigRational>> {
        let two = BigInt::from(2);
        self.doubled.iter().map(|r| r.iter().map(|&x| BigRational::new(x.into(), two.clone())).collect()).collect()
    }

    pub fn add(&self, other: &Self) -> Self {
        let doubled = self
            .doubled
            .iter()
            .zip(&other.doubled)
            .map(|(a, b)| a.iter().zip(b).map(|(x, y)| x + y).collect())
            .collect();
        Self { doubled }
    }

    /// Subtraction, if the difference is again an index.
    pub fn checked_sub(&self, other: &Self) -> Option<Self> {
        let doubled = self
            .doubled
            .iter()
            .zip(&other.doubled)
            .map(|(a, b)| a.iter().zip(b).map(|(x, y)| x - y).collect())
            .collect();
        index_validate(doubled).ok()
    }
}

impl Ord for FourierIndex {
    fn cmp(&self, other: &Self) -> Ordering {
        self.trace().cmp(&other.trace()).then_with(|| self.upper().cmp(&other.upper()))
    }
}

impl PartialOrd for FourierIndex {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for FourierIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let rows: Vec<String> =
            self.doubled.iter().map(|r| r.iter().map(i64::to_string).collect::<Vec<_>>().join(",")).collect();
        write!(f, "2n=[{}]", rows.join(";"))
    }
}

/// Every index of degree g with Tr(n) ≤ τ, in index order.
pub fn indices_up_to(g: usize, tau: i64) -> Vec<FourierIndex> {
    fn diagonals(g: usize, left: i64, cur: &mut Vec<i64>, out: &mut Vec<Vec<i64>>) {
        if cur.len() == g {
            out.push(cur.clone());
            return;
        }
        for t in 0..=left {
            cur.push(t);
            diagonals(g, left - t, cur, out);
            cur.pop();
        }
    }
    fn off_diagonals(m: &mut Vec<Vec<i64>>, pairs: &[(usize, usize)], k: usize, out: &mut Vec<FourierIndex>) {
        if k == pairs.len() {
            if is_psd_int(m) {
                out.push(FourierIndex { doubled: m.clone() });
            }
            return;
        }
        let (i, j) = pairs[k];
        let bound = (m[i][i] * m[j][j]).sqrt();
        for s in -bound..=bound {
            m[i][j] = s;
            m[j][i] = s;
            off_diagonals(m, pairs, k + 1, out);
        }
        m[i][j] = 0;
        m[j][i] = 0;
    }
    if tau < 0 {
        return Vec::new();
    }
    let mut diags = Vec::new();
    diagonals(g, tau, &mut Vec::new(), &mut diags);
    let pairs: Vec<(usize, usize)> = (0..g).flat_map(|i| (i + 1..g).map(move |j| (i, j))).collect();
    let mut out = Vec::new();
    for d in diags {
        let mut m = vec![vec![0i64; g]; g];
        for i in 0..g {
            m[i][i] = 2 * d[i];
        }
        off_diagonals(&mut m, &pairs, 0, &mut out);
    }
    out.sort();
    out
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct QExpansion {
    g: usize,
    level: u64,
    weight: Option<i64>,
    ring: RingDescriptor,
    tau: i64,
    coeffs: BTreeMap<FourierIndex, RingValue>,
}

impl QExpansion {
    pub fn new(g: usize, level: u64, weight: Option<i64>, ring: RingDescriptor, tau: i64) -> Self {
        Self { g, level, weight, ring, tau, coeffs: BTreeMap::new() }
    }

    /// g=1 expansion from a list a(0), a(1), …, truncated at τ.
    pub fn from_g1_coeffs(level: u64, weight: Option<i64>, tau: i64, coeffs: &[RingValue]) -> Self {
        let ring = coeffs.first().map(|c| c.descriptor()).unwrap_or(RingDescriptor::Rational);
        let mut f = Self::new(1, level, weight, ring, tau);
        for (m, c) in coeffs.iter().enumerate() {
            f.set(FourierIndex::scalar(m as i64), c.clone());
        }
        f
    }

    pub fn g(&self) -> usize {
        self.g
    }
    pub fn level(&self) -> u64 {
        self.level
    }
    pub fn weight(&self) -> Option<i64> {
        self.weight
    }
    pub fn ring(&self) -> &RingDescriptor {
        &self.ring
    }
    pub fn tau(&self) -> i64 {
        self.tau
    }
    pub fn coeffs(&self) -> &BTreeMap<FourierIndex, RingValue> {
        &self.coeffs
    }

    pub fn with_weight(mut self, weight: Option<i64>) -> Self {
        self.weight = weight;
        self
    }

    /// Stores a(n) = c; zero values and indices beyond the trace bound are dropped.
    pub fn set(&mut self, n: FourierIndex, c: RingValue) {
        assert_eq!(n.g(), self.g, "index degree mismatch");
        if n.trace() > self.tau || c.is_zero() {
            self.coeffs.remove(&n);
        } else {
            self.coeffs.insert(n, c);
        }
    }

    pub fn coefficient(&self, n: &FourierIndex) -> RingValue {
        self.coeffs.get(n).cloned().unwrap_or_else(|| self.ring.zero())
    }

    /// a(m) for a g=1 expansion.
    pub fn g1_coefficient(&self, m: i64) -> RingValue {
        self.coefficient(&FourierIndex::scalar(m))
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn truncate(&self, tau: i64) -> Self {
        let tau = tau.min(self.tau);
        let coeffs =
            self.coeffs.iter().filter(|(n, _)| n.trace() <= tau).map(|(n, c)| (n.clone(), c.clone())).collect();
        Self { tau, coeffs, ring: self.ring.clone(), ..*self }
    }

    /// Applies `f` to every stored coefficient, moving to `ring`.
    pub fn map_coeffs<F>(&self, ring: RingDescriptor, mut f: F) -> QExpResult<Self>
    where
        F: FnMut(&FourierIndex, &RingValue) -> QExpResult<RingValue>,
    {
        let mut out = Self::new(self.g, self.level, self.weight, ring, self.tau);
        for (n, c) in &self.coeffs {
            let v = f(n, c)?;
            out.set(n.clone(), v);
        }
        Ok(out)
    }

    fn check(&self, other: &Self) -> QExpResult<()> {
        if self.g != other.g {
            return Err(QExpError::Mismatch(format!("degree {} vs {}", self.g, other.g)));
        }
        if self.level != other.level {
            return Err(QExpError::Mismatch(format!("level {} vs {}", self.level, other.level)));
        }
        if self.ring != other.ring {
            return Err(QExpError::Mismatch(format!("ring {} vs {}", self.ring, other.ring)));
        }
        Ok(())
    }
}

/// a·f + b·h on the common trace range.
pub fn qexp_linear(a: &RingValue, f: &QExpansion, b: &RingValue, h: &QExpansion) -> QExpResult<QExpansion> {
    f.check(h)?;
    if a.descriptor() != f.ring || b.descriptor() != f.ring {
        return Err(QExpError::Mismatch("scalar ring differs from expansion ring".into()));
    }
    let weight = if f.weight == h.weight { f.weight } else { None };
    let tau = f.tau.min(h.tau);
    let mut out = QExpansion::new(f.g, f.level, weight, f.ring.clone(), tau);
    for (n, c) in &f.coeffs {
        if n.trace() <= tau {
            out.coeffs.insert(n.clone(), a * c);
        }
    }
    for (n, c) in &h.coeffs {
        if n.trace() > tau {
            continue;
        }
        let v = &out.coefficient(n) + &(b * c);
        out.set(n.clone(), v);
    }
    out.coeffs.retain(|_, c| !c.is_zero());
    Ok(out)
}

pub fn qexp_add(f: &QExpansion, h: &QExpansion) -> QExpResult<QExpansion> {
    qexp_linear(&f.ring.one(), f, &f.ring.one(), h)
}

pub fn qexp_sub(f: &QExpansion, h: &QExpansion) -> QExpResult<QExpansion> {
    qexp_linear(&f.ring.one(), f, &f.ring.from_int(-1), h)
}

pub fn qexp_scale(c: &RingValue, f: &QExpansion) -> QExpResult<QExpansion> {
    let zero = QExpansion::new(f.g, f.level, f.weight, f.ring.clone(), f.tau);
    qexp_linear(c, f, &f.ring.zero(), &zero)
}

/// Cauchy product; trace is additive on indices, so τ_out = min(τ_f, τ_h).
pub fn qexp_mul(f: &QExpansion, h: &QExpansion) -> QExpResult<QExpansion> {
    f.check(h)?;
    let weight = match (f.weight, h.weight) {
        (Some(a), Some(b)) => Some(a + b),
        _ => None,
    };
    let tau = f.tau.min(h.tau);
    let mut acc: BTreeMap<FourierIndex, RingValue> = BTreeMap::new();
    for (n1, a) in &f.coeffs {
        let t1 = n1.trace();
        if t1 > tau {
            continue;
        }
        for (n2, b) in &h.coeffs {
            if t1 + n2.trace() > tau {
                continue;
            }
            let term = a * b;
            let n = n1.add(n2);
            match acc.get_mut(&n) {
                Some(v) => *v = &*v + &term,
                None => {
                    acc.insert(n, term);
                }
            }
        }
    }
    acc.retain(|_, c| !c.is_zero());
    Ok(QExpansion { g: f.g, level: f.level, weight, ring: f.ring.clone(), tau, coeffs: acc })
}

/// Bernoulli numbers B_0, …, B_n from Σ_{j=0}^{m} C(m+1, j) B_j = 0.
pub fn bernoulli_numbers(n: usize) -> Vec<BigRational> {
    let mut b: Vec<BigRational> = vec![BigRational::one()];
    for m in 1..=n {
        let mut binom = BigInt::one();
        let mut s = BigRational::zero();
        for (j, bj) in b.iter().enumerate() {
            s += BigRational::from_integer(binom.clone()) * bj;
            binom = binom * BigInt::from(m + 1 - j) / BigInt::from(j + 1);
        }
        b.push(-s / BigRational::from_integer(BigInt::from(m + 1)));
    }
    b
}

fn divisor_power_sum(n: u64, e: u32) -> BigInt {
    let mut s = BigInt::zero();
    let mut d = 1u64;
    while d * d <= n {
        if n % d == 0 {
            s += BigInt::from(d).pow(e);
            let other = n / d;
            if other != d {
                s += BigInt::from(other).pow(e);
            }
        }
        d += 1;
    }
    s
}

/// E_k = 1 − (2k/B_k) Σ σ_{k−1}(n) q^n, level 1, up to q^τ.
pub fn eisenstein(k: i64, tau: i64) -> QExpResult<QExpansion> {
    if k < 4 || k % 2 != 0 {
        return Err(QExpError::BadWeight(k));
    }
    let bk = bernoulli_numbers(k as usize).pop().expect("nonempty");
    let factor = -BigRational::from_integer(BigInt::from(2 * k)) / bk;
    let mut f = QExpansion::new(1, 1, Some(k), RingDescriptor::Rational, tau);
    f.set(FourierIndex::scalar(0), RingDescriptor::Rational.one());
    for n in 1..=tau {
        let c = &factor * BigRational::from_integer(divisor_power_sum(n as u64, (k - 1) as u32));
        f.set(FourierIndex::scalar(n), RingValue::Rational(c));
    }
    Ok(f)
}

/// Δ = q ∏_{n≥1} (1 − q^n)^24, level 1, up to q^τ.
pub fn delta(tau: i64) -> QExpansion {
    let len = tau.max(0) as usize;
    // Product truncated below q^{τ}, then shifted by one.
    let mut prod = vec![BigInt::zero(); len];
    if len > 0 {
        prod[0] = BigInt::one();
    }
    for n in 1..len {
        for _ in 0..24 {
            for i in (n..len).rev() {
                let v = prod[i - n].clone();
                prod[i] -= v;
            }
        }
    }
    let mut f = QExpansion::new(1, 1, Some(12), RingDescriptor::Rational, tau);
    for (i, c) in prod.into_iter().enumerate() {
        f.set(FourierIndex::scalar(i as i64 + 1), RingValue::Rational(BigRational::from_integer(c)));
    }
    f
}

/// Coefficientwise reduction to characteristic p. Cyclotomic coefficients
/// need `zeta_image`; prime-field inputs of characteristic p pass through.
pub fn reduce_mod_p(f: &QExpansion, p: u64, zeta_image: Option<&RingValue>) -> QExpResult<QExpansion> {
    if f.ring == RingDescriptor::PrimeField(p) {
        return Ok(f.clone());
    }
    let target = match (&f.ring, zeta_image) {
        (RingDescriptor::CyclotomicRational(_), Some(z)) => z.descriptor(),
        _ => RingDescriptor::PrimeField(p),
    };
    f.map_coeffs(target, |n, c| {
        reduce_to_prime_field(c, p, zeta_image).map_err(|e| match e {
            RingError::NonPIntegral(p) => QExpError::NonPIntegral { index: n.to_string(), p },
            other => other.into(),
        })
    })
}

/// Σ a_n q_N^n ↦ Σ a_n q^n: same coefficient table, level 1.
pub fn reindex_level(f: &QExpansion) -> QExpansion {
    QExpansion { level: 1, ..f.clone() }
}

/// Serialises to the line-oriented `SIEGELQEXP v1` format.
pub fn to_text(f: &QExpansion) -> String {
    let k = f.weight.map_or_else(|| "none".to_string(), |k| k.to_string());
    let mut out = format!("SIEGELQEXP v1 g={} N={} k={} ring={} tau={}\n", f.g, f.level, k, f.ring, f.tau);
    for (n, c) in &f.coeffs {
        let idx: Vec<String> = n.upper().iter().map(i64::to_string).collect();
        out.push_str(&format!("{}:{}\n", idx.join(" "), c.encode()));
    }
    out
}

pub fn from_text(text: &str) -> QExpResult<QExpansion> {
    let mut lines = text.lines().filter(|l| !l.trim().is_empty());
    let header = lines.next().ok_or_else(|| QExpError::Parse("empty input".into()))?;
    let mut words = header.split_whitespace();
    if words.next() != Some("SIEGELQEXP") || words.next() != Some("v1") {
        return Err(QExpError::Parse("missing `SIEGELQEXP v1` header".into()));
    }
    let mut fields: BTreeMap<&str, &str> = BTreeMap::new();
    for w in words {
        let (k, v) = w.split_once('=').ok_or_else(|| QExpError::Parse(format!("bad header field `{w}`")))?;
        fields.insert(k, v);
    }
    let get = |k: &str| fields.get(k).copied().ok_or_else(|| QExpError::Parse(format!("header lacks `{k}`")));
    let num = |k: &str| -> QExpResult<i64> { get(k)?.parse().map_err(|_| QExpError::Parse(format!("bad `{k}`"))) };
    let g = num("g")?;
    let level = num("N")?;
    let tau = num("tau")?;
    if g < 1 || level < 1 || tau < 0 {
        return Err(QExpError::Parse("g and N must be positive, tau nonnegative".into()));
    }
    let weight = match get("k")? {
        "none" => None,
        k => Some(k.parse().map_err(|_| QExpError::Parse("bad `k`".into()))?),
    };
    let ring: RingDescriptor = get("ring")?.parse()?;
    let mut f = QExpansion::new(g as usize, level as u64, weight, ring.clone(), tau);
    for line in lines {
        let (idx, coeff) = line.split_once(':').ok_or_else(|| QExpError::Parse(format!("bad term line `{line}`")))?;
        let upper: Vec<i64> = idx
            .split_whitespace()
            .map(str::parse)
            .collect::<Result<_, _>>()
            .map_err(|_| QExpError::Parse(format!("bad index `{idx}`")))?;
        let n = FourierIndex::from_upper(g as usize, &upper)?;
        if n.trace() > tau {
            return Err(QExpError::Parse(format!("index {n} exceeds the trace bound")));
        }
        f.set(n, RingValue::parse(&ring, coeff)?);
    }
    Ok(f)
}

/// A random sparse expansion with small integer coefficients, for tests and
/// self-checks of formal identities.
pub fn random_expansion<R: rand::Rng>(
    rng: &mut R,
    g: usize,
    ring: &RingDescriptor,
    tau: i64,
    density: f64,
    weight: Option<i64>,
) -> QExpansion {
    let mut f = QExpansion::new(g, 1, weight, ring.clone(), tau);
    for n in indices_up_to(g, tau) {
        if rng.gen_bool(density) {
            f.set(n, ring.from_int(rng.gen_range(-9..=9)));
        }
    }
    f
}

impl fmt::Display for QExpansion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&to_text(self))
    }
}
