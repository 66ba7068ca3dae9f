//! Satake bookkeeping for GSp_2g: the unitriangular change of basis between
//! the Hecke basis c_λ and irreducible characters χ_λ of the dual group, dual
//! characters through the Weyl character formula, and a replay of the
//! argument showing that a twist by η^m moves the Satake parameter by
//! η∨(ℓ^m).
//!
//! Half-integral powers of ℓ are kept as a formal variable v with v² = ℓ, so
//! ℓ^{⟨ρ, λ⟩} is stored as v^{⟨2ρ, λ⟩}. A square root of ℓ is substituted
//! only at evaluation time.

use std::collections::BTreeMap;
use std::fmt;
use std::marker::PhantomData;

use rand::Rng;
use thiserror::Error;

use crate::exactring::{RingDescriptor, RingError, RingValue};
use crate::rootdatum::{
    build_root_datum, dominance_compare, dominant_lower_set, eta_exponent, is_dominant, parse_coords, weyl_group,
    Cocharacter, RootDatum, RootDatumError,
};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SatakeError {
    #[error("no table row for {0}")]
    Missing(Cocharacter),
    #[error("table is not unitriangular: {0}")]
    NotUnitriangular(String),
    #[error("{0} is not dominant")]
    NotDominant(Cocharacter),
    #[error("weight computation is limited to g <= {max_g} and |coordinates| <= {max_coord}")]
    Guard { max_g: usize, max_coord: i64 },
    #[error("precondition failed: {0}")]
    Precondition(String),
    #[error("mismatched data: {0}")]
    Mismatch(String),
    #[error("parse error: {0}")]
    Parse(String),
    #[error(transparent)]
    RootDatum(#[from] RootDatumError),
    #[error(transparent)]
    Ring(#[from] RingError),
}

pub type SatakeResult<T> = Result<T, SatakeError>;

pub const WEIGHTS_MAX_G: usize = 2;
pub const WEIGHTS_MAX_COORD: i64 = 6;

/// A Laurent polynomial in v, keyed by exponent.
pub type Laurent = BTreeMap<i64, RingValue>;

fn laurent_add_term(p: &mut Laurent, e: i64, c: &RingValue) {
    if c.is_zero() {
        return;
    }
    let next = match p.get(&e) {
        Some(old) => old + c,
        None => c.clone(),
    };
    if next.is_zero() {
        p.remove(&e);
    } else {
        p.insert(e, next);
    }
}

fn laurent_eval(p: &Laurent, v: &RingValue, ring: &RingDescriptor) -> SatakeResult<RingValue> {
    let mut acc = ring.zero();
    for (&e, c) in p {
        let ve = v.pow(e).ok_or_else(|| SatakeError::Precondition("v is not invertible".into()))?;
        acc = &acc + &(c * &ve);
    }
    Ok(acc)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct HeckeBasis;
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CharacterBasis;

/// Finite combination Σ_μ a_μ(v)·b_μ over a basis indexed by dominant
/// cocharacters, with Laurent coefficients in v.
#[derive(Debug, PartialEq)]
pub struct VCombination<B> {
    g: usize,
    ring: RingDescriptor,
    terms: BTreeMap<Cocharacter, Laurent>,
    _basis: PhantomData<B>,
}

/// Element of H_ℓ ⊗ Z[v^{±1}] in the basis c_λ.
pub type HeckeElement = VCombination<HeckeBasis>;
/// Element of the representation ring of the dual group, basis χ_λ.
pub type RepRingElement = VCombination<CharacterBasis>;

impl<B> Clone for VCombination<B> {
    fn clone(&self) -> Self {
        Self { g: self.g, ring: self.ring.clone(), terms: self.terms.clone(), _basis: PhantomData }
    }
}

impl<B> VCombination<B> {
    pub fn zero(g: usize, ring: &RingDescriptor) -> Self {
        Self { g, ring: ring.clone(), terms: BTreeMap::new(), _basis: PhantomData }
    }

    pub fn g(&self) -> usize {
        self.g
    }

    pub fn ring(&self) -> &RingDescriptor {
        &self.ring
    }

    pub fn terms(&self) -> &BTreeMap<Cocharacter, Laurent> {
        &self.terms
    }

    pub fn coefficient(&self, mu: &Cocharacter) -> Option<&Laurent> {
        self.terms.get(mu)
    }

    pub fn add_term(&mut self, mu: &Cocharacter, v_exp: i64, c: &RingValue) {
        let entry = self.terms.entry(mu.clone()).or_default();
        laurent_add_term(entry, v_exp, c);
        if entry.is_empty() {
            self.terms.remove(mu);
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        let mut out = self.clone();
        for (mu, p) in &other.terms {
            for (&e, c) in p {
                out.add_term(mu, e, c);
            }
        }
        out
    }

    /// Multiplies by c·v^e.
    pub fn scale(&self, v_exp: i64, c: &RingValue) -> Self {
        let mut out = Self::zero(self.g, &self.ring);
        for (mu, p) in &self.terms {
            for (&e, a) in p {
                out.add_term(mu, e + v_exp, &(a * c));
            }
        }
        out
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    /// Σ_μ a_μ(v_image)·f(μ).
    fn evaluate_with(
        &self,
        v: &RingValue,
        mut f: impl FnMut(&Cocharacter) -> SatakeResult<RingValue>,
    ) -> SatakeResult<RingValue> {
        let mut acc = self.ring.zero();
        for (mu, p) in &self.terms {
            let a = laurent_eval(p, v, &self.ring)?;
            acc = &acc + &(&a * &f(mu)?);
        }
        Ok(acc)
    }
}

impl HeckeElement {
    /// Applies the eigensystem: c_μ ↦ Ψ(c_μ), v ↦ `v`.
    pub fn evaluate(&self, psi: &Eigensystem, v: &RingValue) -> SatakeResult<RingValue> {
        self.evaluate_with(v, |mu| psi.value(mu).cloned().ok_or_else(|| SatakeError::Missing(mu.clone())))
    }
}

impl RepRingElement {
    /// Evaluates every χ_μ at the torus point `t`.
    pub fn evaluate(&self, t: &DualTorusPoint, v: &RingValue) -> SatakeResult<RingValue> {
        self.evaluate_with(v, |mu| char_eval(mu, t))
    }
}

impl<B: BasisName> fmt::Display for VCombination<B> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        let mut first = true;
        for (mu, p) in &self.terms {
            for (e, c) in p {
                if !first {
                    write!(f, " + ")?;
                }
                first = false;
                write!(f, "{c}*v^{e}*{}[{mu}]", B::NAME)?;
            }
        }
        Ok(())
    }
}

pub trait BasisName {
    const NAME: &'static str;
}

impl BasisName for HeckeBasis {
    const NAME: &'static str = "c";
}

impl BasisName for CharacterBasis {
    const NAME: &'static str = "chi";
}

/// Unitriangular coefficients b_λ(μ) (or d_λ(μ)) on a dominance lower set.
#[derive(Debug, Clone, PartialEq)]
pub struct SatakeCoefficients {
    pub g: usize,
    pub ell: u64,
    pub ring: RingDescriptor,
    pub table: BTreeMap<Cocharacter, BTreeMap<Cocharacter, RingValue>>,
}

impl SatakeCoefficients {
    /// The identity table on the lower set of every λ in `lams`.
    pub fn identity(g: usize, ell: u64, ring: &RingDescriptor, lams: &[Cocharacter]) -> SatakeResult<Self> {
        let rd = build_root_datum(g)?;
        let mut table = BTreeMap::new();
        for lam in lams {
            for mu in dominant_lower_set(&rd, lam)? {
                table.entry(mu.clone()).or_insert_with(|| BTreeMap::from([(mu, ring.one())]));
            }
        }
        Ok(Self { g, ell, ring: ring.clone(), table })
    }

    /// Uniformly random off-diagonal entries on the lower set of `top`.
    pub fn random<R: Rng>(
        rng: &mut R,
        g: usize,
        ell: u64,
        ring: &RingDescriptor,
        top: &Cocharacter,
    ) -> SatakeResult<Self> {
        let rd = build_root_datum(g)?;
        let elements = ring.elements()?;
        let mut table = BTreeMap::new();
        for mu in dominant_lower_set(&rd, top)? {
            let mut row = BTreeMap::new();
            for nu in dominant_lower_set(&rd, &mu)? {
                let val = if nu == mu { ring.one() } else { elements[rng.gen_range(0..elements.len())].clone() };
                if !val.is_zero() {
                    row.insert(nu, val);
                }
            }
            table.insert(mu, row);
        }
        Ok(Self { g, ell, ring: ring.clone(), table })
    }

    pub fn entry(&self, lam: &Cocharacter, mu: &Cocharacter) -> SatakeResult<RingValue> {
        let row = self.table.get(lam).ok_or_else(|| SatakeError::Missing(lam.clone()))?;
        Ok(row.get(mu).cloned().unwrap_or_else(|| self.ring.zero()))
    }

    pub fn row(&self, lam: &Cocharacter) -> SatakeResult<&BTreeMap<Cocharacter, RingValue>> {
        self.table.get(lam).ok_or_else(|| SatakeError::Missing(lam.clone()))
    }

    /// Checks dominance, support, unit diagonal and lower-set closure.
    pub fn validate(&self) -> SatakeResult<()> {
        let rd = build_root_datum(self.g)?;
        for (lam, row) in &self.table {
            if lam.g() != self.g {
                return Err(SatakeError::Mismatch(format!("{lam} has degree {}", lam.g())));
            }
            if !is_dominant(lam) {
                return Err(SatakeError::NotDominant(lam.clone()));
            }
            for (mu, val) in row {
                if mu.g() != self.g || !is_dominant(mu) {
                    return Err(SatakeError::NotDominant(mu.clone()));
                }
                if dominance_compare(lam, mu)?.is_none() {
                    return Err(SatakeError::NotUnitriangular(format!("entry {mu} is not below {lam}")));
                }
                if val.descriptor() != self.ring {
                    return Err(SatakeError::Mismatch(format!("entry ({lam}, {mu}) lies in {}", val.descriptor())));
                }
            }
            if !row.get(lam).is_some_and(|v| v.is_one()) {
                return Err(SatakeError::NotUnitriangular(format!("diagonal entry at {lam} is not 1")));
            }
            for mu in dominant_lower_set(&rd, lam)? {
                if !self.table.contains_key(&mu) {
                    return Err(SatakeError::Missing(mu));
                }
            }
        }
        Ok(())
    }

    /// One line `lam ; mu ; value` per nonzero entry.
    pub fn to_text(&self) -> String {
        let mut out = format!("# g={} ell={} ring={}\n", self.g, self.ell, self.ring);
        for (lam, row) in &self.table {
            for (mu, val) in row {
                out.push_str(&format!("{} ; {} ; {}\n", join_coords(lam), join_coords(mu), val.encode()));
            }
        }
        out
    }

    /// Parses the keyed text format; diagonal entries may be omitted.
    pub fn from_text(g: usize, ell: u64, ring: &RingDescriptor, text: &str) -> SatakeResult<Self> {
        let mut table: BTreeMap<Cocharacter, BTreeMap<Cocharacter, RingValue>> = BTreeMap::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let bad = |what: &str| SatakeError::Parse(format!("line {}: {what}", lineno + 1));
            let parts: Vec<&str> = line.split(';').map(str::trim).collect();
            let [lam, mu, val] = parts.as_slice() else {
                return Err(bad("expected `lam ; mu ; value`"));
            };
            let lam = Cocharacter::from_coeffs(&parse_coords(lam).ok_or_else(|| bad("bad λ"))?)?;
            let mu = Cocharacter::from_coeffs(&parse_coords(mu).ok_or_else(|| bad("bad μ"))?)?;
            // Plain integers are accepted alongside the full ring encoding.
            let val = match val.parse::<i64>() {
                Ok(n) => ring.from_int(n),
                Err(_) => RingValue::parse(ring, val)?,
            };
            table.entry(lam.clone()).or_default().insert(mu, val);
        }
        let rd = build_root_datum(g)?;
        let lams: Vec<Cocharacter> = table.keys().cloned().collect();
        for lam in &lams {
            if !is_dominant(lam) {
                return Err(SatakeError::NotDominant(lam.clone()));
            }
            for mu in dominant_lower_set(&rd, lam)? {
                let row = table.entry(mu.clone()).or_default();
                row.entry(mu).or_insert_with(|| ring.one());
            }
        }
        let out = Self { g, ell, ring: ring.clone(), table };
        out.validate()?;
        Ok(out)
    }
}

fn join_coords(c: &Cocharacter) -> String {
    c.coeffs().iter().map(|a| a.to_string()).collect::<Vec<_>>().join(",")
}

/// Hecke eigenvalues Ψ(c_λ) on a dominance lower set.
#[derive(Debug, Clone, PartialEq)]
pub struct Eigensystem {
    pub g: usize,
    pub ell: u64,
    pub ring: RingDescriptor,
    pub values: BTreeMap<Cocharacter, RingValue>,
}

impl Eigensystem {
    pub fn p(&self) -> u64 {
        self.ring.characteristic()
    }

    pub fn value(&self, lam: &Cocharacter) -> Option<&RingValue> {
        self.values.get(lam)
    }

    pub fn random<R: Rng>(
        rng: &mut R,
        g: usize,
        ell: u64,
        ring: &RingDescriptor,
        top: &Cocharacter,
    ) -> SatakeResult<Self> {
        let rd = build_root_datum(g)?;
        let elements = ring.elements()?;
        let values = dominant_lower_set(&rd, top)?
            .into_iter()
            .map(|mu| (mu, elements[rng.gen_range(0..elements.len())].clone()))
            .collect();
        Ok(Self { g, ell, ring: ring.clone(), values })
    }
}

/// A point (v_1, …, v_{g+1}) of the dual torus; f_j evaluates to v_j.
#[derive(Debug, Clone, PartialEq)]
pub struct DualTorusPoint {
    pub g: usize,
    pub coords: Vec<RingValue>,
}

impl DualTorusPoint {
    pub fn new(coords: Vec<RingValue>) -> SatakeResult<Self> {
        if coords.len() < 2 {
            return Err(SatakeError::Mismatch("a torus point needs at least two coordinates".into()));
        }
        if coords.iter().any(|c| c.inverse().is_none()) {
            return Err(SatakeError::Precondition("torus coordinates must be invertible".into()));
        }
        Ok(Self { g: coords.len() - 1, coords })
    }

    /// η∨(a) = (1, …, 1, a).
    pub fn eta_dual(g: usize, a: &RingValue) -> SatakeResult<Self> {
        let one = a.descriptor().one();
        let mut coords = vec![one; g];
        coords.push(a.clone());
        Self::new(coords)
    }

    pub fn mul(&self, other: &Self) -> Self {
        assert_eq!(self.g, other.g, "degree mismatch");
        Self { g: self.g, coords: self.coords.iter().zip(&other.coords).map(|(a, b)| a * b).collect() }
    }

    /// μ(t) = ∏ v_j^{μ_j}.
    pub fn monomial(&self, mu: &Cocharacter) -> RingValue {
        let mut acc = self.coords[0].descriptor().one();
        for (v, &e) in self.coords.iter().zip(mu.coeffs()) {
            acc = &acc * &v.pow(e).expect("torus coordinates are invertible");
        }
        acc
    }

    /// The point t' with f_j(t') = (w f_j)(t).
    pub fn weyl_act(&self, w: &crate::rootdatum::WeylElement) -> Self {
        let coords = (1..=self.g + 1).map(|j| self.monomial(&w.act_cochar(&Cocharacter::basis(self.g, j)))).collect();
        Self { g: self.g, coords }
    }

    pub fn random<R: Rng>(rng: &mut R, g: usize, ring: &RingDescriptor) -> SatakeResult<Self> {
        let units: Vec<RingValue> = ring.elements()?.into_iter().filter(|x| !x.is_zero()).collect();
        Self::new((0..=g).map(|_| units[rng.gen_range(0..units.len())].clone()).collect())
    }
}

/// S_ℓ(c_λ) = Σ_{μ≤λ} b_λ(μ)·v^{⟨2ρ,μ⟩}·χ_μ.
pub fn satake_image(lam: &Cocharacter, b: &SatakeCoefficients) -> SatakeResult<RepRingElement> {
    let rd = build_root_datum(b.g)?;
    let mut out = RepRingElement::zero(b.g, &b.ring);
    for (mu, val) in b.row(lam)? {
        out.add_term(mu, rd.rho2_pairing(mu), val);
    }
    Ok(out)
}

/// S_ℓ^{-1}(χ_λ) = v^{−⟨2ρ,λ⟩}·Σ_{μ≤λ} d_λ(μ)·c_μ.
pub fn satake_inverse_chi(lam: &Cocharacter, d: &SatakeCoefficients) -> SatakeResult<HeckeElement> {
    let rd = build_root_datum(d.g)?;
    let shift = -rd.rho2_pairing(lam);
    let mut out = HeckeElement::zero(d.g, &d.ring);
    for (mu, val) in d.row(lam)? {
        out.add_term(mu, shift, val);
    }
    Ok(out)
}

/// The table d with Σ_μ d_λ(μ)·b_μ(ν) = [ν = λ] for every λ.
///
/// The v-powers in the two expansions cancel row by row, so d is the inverse
/// of b as a plain unitriangular matrix.
pub fn invert_coefficients(b: &SatakeCoefficients) -> SatakeResult<SatakeCoefficients> {
    b.validate()?;
    let rd = build_root_datum(b.g)?;
    let mut table = BTreeMap::new();
    for lam in b.table.keys() {
        // Decreasing ⟨2ρ, ·⟩, so every μ > ν is settled before ν.
        let lower = dominant_lower_set(&rd, lam)?;
        let mut row: BTreeMap<Cocharacter, RingValue> = BTreeMap::new();
        row.insert(lam.clone(), b.ring.one());
        for nu in lower.iter().skip_while(|nu| *nu == lam) {
            let mut acc = b.ring.zero();
            for (mu, d_mu) in &row {
                if let Some(b_mu_nu) = b.row(mu)?.get(nu) {
                    acc = &acc - &(d_mu * b_mu_nu);
                }
            }
            if !acc.is_zero() {
                row.insert(nu.clone(), acc);
            }
        }
        table.insert(lam.clone(), row);
    }
    Ok(SatakeCoefficients { g: b.g, ell: b.ell, ring: b.ring.clone(), table })
}

/// Ψ'(c_λ) = ℓ^{m·eta_exponent(λ)}·Ψ(c_λ).
pub fn twist_eigensystem(psi: &Eigensystem, m: i64) -> SatakeResult<Eigensystem> {
    let ell = psi.ring.from_int(psi.ell as i64);
    let mut values = BTreeMap::new();
    for (lam, val) in &psi.values {
        let factor = ell
            .pow(m * eta_exponent(lam))
            .ok_or_else(|| SatakeError::Precondition(format!("ℓ = {} is not invertible in {}", psi.ell, psi.ring)))?;
        values.insert(lam.clone(), &factor * val);
    }
    Ok(Eigensystem { g: psi.g, ell: psi.ell, ring: psi.ring.clone(), values })
}

type Alternant = BTreeMap<Vec<i64>, i64>;

fn alternant(group: &[crate::rootdatum::WeylElement], y: &Cocharacter) -> Alternant {
    let mut out = Alternant::new();
    for w in group {
        let e = w.act_cochar(y).coeffs().to_vec();
        *out.entry(e).or_insert(0) += w.sign();
    }
    out.retain(|_, c| *c != 0);
    out
}

/// Exact division of Laurent polynomials, leading terms taken in lex order.
fn laurent_divide(num: &Alternant, den: &Alternant) -> Option<Alternant> {
    let (lead_e, &lead_c) = den.last_key_value()?;
    let mut rem = num.clone();
    let mut quot = Alternant::new();
    while let Some((e, &c)) = rem.last_key_value() {
        if c % lead_c != 0 {
            return None;
        }
        let qe: Vec<i64> = e.iter().zip(lead_e).map(|(a, b)| a - b).collect();
        let qc = c / lead_c;
        for (de, dc) in den {
            let key: Vec<i64> = qe.iter().zip(de).map(|(a, b)| a + b).collect();
            let slot = rem.entry(key.clone()).or_insert(0);
            *slot -= qc * dc;
            if *slot == 0 {
                rem.remove(&key);
            }
        }
        *quot.entry(qe).or_insert(0) += qc;
        if quot.len() > 100_000 {
            return None;
        }
    }
    Some(quot)
}

/// Weight multiplicities of the irreducible representation V_λ of the dual
/// group, by dividing alternants in the doubled lattice.
pub fn weights_of_irrep(lam: &Cocharacter) -> SatakeResult<BTreeMap<Cocharacter, i64>> {
    let g = lam.g();
    if g > WEIGHTS_MAX_G || lam.coeffs().iter().any(|a| a.abs() > WEIGHTS_MAX_COORD) {
        return Err(SatakeError::Guard { max_g: WEIGHTS_MAX_G, max_coord: WEIGHTS_MAX_COORD });
    }
    if !is_dominant(lam) {
        return Err(SatakeError::NotDominant(lam.clone()));
    }
    let rd = build_root_datum(g)?;
    let group = weyl_group(&rd)?;
    let num = alternant(&group, &lam.scale(2).add(&rd.rho2_hat));
    let den = alternant(&group, &rd.rho2_hat);
    let quot = laurent_divide(&num, &den)
        .ok_or_else(|| SatakeError::Precondition(format!("alternant division failed for {lam}")))?;
    let mut out = BTreeMap::new();
    for (e, c) in quot {
        if e.iter().any(|a| a % 2 != 0) {
            return Err(SatakeError::Precondition(format!("odd exponent in the character of {lam}")));
        }
        let half: Vec<i64> = e.iter().map(|a| a / 2).collect();
        out.insert(Cocharacter::new(g, half)?, c);
    }
    Ok(out)
}

/// χ_λ(t) = Σ_μ mult(μ)·μ(t).
pub fn char_eval(lam: &Cocharacter, t: &DualTorusPoint) -> SatakeResult<RingValue> {
    if lam.g() != t.g {
        return Err(SatakeError::Mismatch(format!("{lam} against a torus point of degree {}", t.g)));
    }
    let ring = t.coords[0].descriptor();
    let mut acc = ring.zero();
    for (mu, mult) in weights_of_irrep(lam)? {
        acc = &acc + &t.monomial(&mu).scale_int(mult);
    }
    Ok(acc)
}

/// The f_{g+1}-coordinate shared by all weights of V_λ.
pub fn central_exponent(lam: &Cocharacter) -> SatakeResult<i64> {
    let weights = weights_of_irrep(lam)?;
    let g = lam.g();
    let mut last = weights.keys().map(|mu| mu.coeffs()[g]);
    let c = last.next().ok_or_else(|| SatakeError::Precondition(format!("{lam} has no weights")))?;
    if last.any(|x| x != c) {
        return Err(SatakeError::Precondition(format!("weights of {lam} do not share a central component")));
    }
    Ok(c)
}

/// The scalar by which η∨(a) acts on V_λ.
pub fn central_character(lam: &Cocharacter, a: &RingValue) -> SatakeResult<RingValue> {
    let c = central_exponent(lam)?;
    a.pow(c).ok_or_else(|| SatakeError::Precondition(format!("{a} is not invertible")))
}

/// A chain written as ℓ^{outer}·v^{shift}·Σ_μ d_λ(μ)·ℓ^{inner(μ)}·Ψ(c_μ).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SymbolicChain {
    pub outer: i64,
    pub shift: i64,
    pub terms: Vec<(Cocharacter, i64)>,
}

impl fmt::Display for SymbolicChain {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "l^{} * v^{} * (", self.outer, self.shift)?;
        for (i, (mu, e)) in self.terms.iter().enumerate() {
            if i > 0 {
                write!(f, " + ")?;
            }
            write!(f, "d({mu}) * l^{e} * Psi(c[{mu}])")?;
        }
        write!(f, ")")
    }
}

#[derive(Debug, Clone)]
pub struct MainTheoremReport {
    pub holds: bool,
    pub left: RingValue,
    pub right: RingValue,
    pub left_chain: SymbolicChain,
    pub right_chain: SymbolicChain,
    pub transcript: String,
}

impl MainTheoremReport {
    /// Whether the two chains differ as expressions before evaluation.
    pub fn symbolically_distinct(&self) -> bool {
        self.left_chain != self.right_chain
    }
}

/// Evaluates χ_λ of the twisted Satake parameter in two ways: through the
/// twisted eigensystem applied to S^{-1}(χ_λ), and through the central
/// character of η∨(ℓ^m) times the untwisted evaluation.
pub fn main_theorem_verify(
    lam: &Cocharacter,
    d: &SatakeCoefficients,
    psi: &Eigensystem,
    m: i64,
    v_image: &RingValue,
) -> SatakeResult<MainTheoremReport> {
    let ring = &d.ring;
    let p = ring.characteristic();
    if p == 2 || p == 0 {
        return Err(SatakeError::Precondition(format!("need a field of odd characteristic, got {ring}")));
    }
    if psi.ring != *ring || v_image.descriptor() != *ring {
        return Err(SatakeError::Mismatch("coefficients, eigensystem and v must share one field".into()));
    }
    if psi.ell != d.ell || psi.g != d.g {
        return Err(SatakeError::Mismatch("eigensystem and table disagree on g or ℓ".into()));
    }
    if m < 0 {
        return Err(SatakeError::Precondition("m must be nonnegative".into()));
    }
    let ell = ring.from_int(d.ell as i64);
    if d.ell % p == 0 || ell.is_zero() {
        return Err(SatakeError::Precondition(format!("ℓ = {} must differ from p = {p}", d.ell)));
    }
    if &(v_image * v_image) != &ell {
        return Err(SatakeError::Precondition(format!("v = {v_image} does not square to ℓ = {}", d.ell)));
    }
    d.validate()?;
    let rd: RootDatum = build_root_datum(d.g)?;
    let shift = -rd.rho2_pairing(lam);
    let h = satake_inverse_chi(lam, d)?;

    let twisted = twist_eigensystem(psi, m)?;
    let left = h.evaluate(&twisted, v_image)?;

    let ell_m = ell.pow(m).expect("nonnegative power");
    let central = central_character(lam, &ell_m)?;
    let right = &central * &h.evaluate(psi, v_image)?;

    let row = d.row(lam)?;
    let left_chain =
        SymbolicChain { outer: 0, shift, terms: row.keys().map(|mu| (mu.clone(), m * eta_exponent(mu))).collect() };
    let right_chain = SymbolicChain {
        outer: m * central_exponent(lam)?,
        shift,
        terms: row.keys().map(|mu| (mu.clone(), 0)).collect(),
    };
    let holds = left == right;
    let transcript = format!(
        "lambda={lam} m={m} ell={} field={ring} v={v_image}\n  left:  {left_chain} = {left}\n  right: {right_chain} = {right}\n  {}",
        d.ell,
        if holds { "equal" } else { "DIFFERENT" }
    );
    Ok(MainTheoremReport { holds, left, right, left_chain, right_chain, transcript })
}

/// A square root of ℓ in a finite field, by search.
pub fn sqrt_in_field(ring: &RingDescriptor, ell: u64) -> SatakeResult<Option<RingValue>> {
    let target = ring.from_int(ell as i64);
    Ok(ring.elements()?.into_iter().find(|x| &(x * x) == &target))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rootdatum::{dominant_ball, dominant_conjugate};
    use num_rational::BigRational;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn co(c: &[i64]) -> Cocharacter {
        Cocharacter::from_coeffs(c).unwrap()
    }

    fn f7() -> RingDescriptor {
        RingDescriptor::PrimeField(7)
    }

    fn f49() -> RingDescriptor {
        "ext:7:1,0,1".parse().unwrap()
    }

    #[test]
    fn image_of_identity_table_is_single_term() {
        let lam = co(&[2, 1, 2]);
        let b = SatakeCoefficients::identity(2, 3, &f7(), &[lam.clone()]).unwrap();
        let s = satake_image(&lam, &b).unwrap();
        assert_eq!(s.terms().len(), 1);
        // 2ρ = 4e1 + 2e2 − 3e3.
        assert_eq!(s.coefficient(&lam).unwrap(), &BTreeMap::from([(4, f7().one())]));
        let h = satake_inverse_chi(&lam, &b).unwrap();
        assert_eq!(h.coefficient(&lam).unwrap(), &BTreeMap::from([(-4, f7().one())]));
        assert_eq!(h.terms().len(), 1);
    }

    #[test]
    fn image_with_one_lower_entry() {
        // (1,1) has no dominant weight below it; (2,2) has (1,2).
        let rd = build_root_datum(1).unwrap();
        assert_eq!(dominant_lower_set(&rd, &co(&[1, 1])).unwrap(), vec![co(&[1, 1])]);
        let lam = co(&[2, 2]);
        let mu = co(&[1, 2]);
        let beta = f7().from_int(5);
        let mut b = SatakeCoefficients::identity(1, 2, &f7(), &[lam.clone()]).unwrap();
        b.table.get_mut(&lam).unwrap().insert(mu.clone(), beta.clone());
        let s = satake_image(&lam, &b).unwrap();
        assert_eq!(s.coefficient(&lam).unwrap(), &BTreeMap::from([(2, f7().one())]));
        assert_eq!(s.coefficient(&mu).unwrap(), &BTreeMap::from([(0, beta.clone())]));

        let d = invert_coefficients(&b).unwrap();
        assert_eq!(d.entry(&lam, &mu).unwrap(), -&beta);
        let h = satake_inverse_chi(&lam, &d).unwrap();
        assert_eq!(h.coefficient(&mu).unwrap(), &BTreeMap::from([(-2, -&beta)]));
    }

    #[test]
    fn non_dominant_entries_are_rejected() {
        let lam = co(&[1, 1]);
        let mut b = SatakeCoefficients::identity(1, 2, &f7(), &[lam.clone()]).unwrap();
        b.table.get_mut(&lam).unwrap().insert(co(&[0, 1]), f7().one());
        assert!(matches!(b.validate(), Err(SatakeError::NotDominant(_))));
        let mut b = SatakeCoefficients::identity(1, 2, &f7(), &[lam.clone()]).unwrap();
        b.table.get_mut(&lam).unwrap().insert(lam.clone(), f7().from_int(2));
        assert!(matches!(invert_coefficients(&b), Err(SatakeError::NotUnitriangular(_))));
        assert!(matches!(satake_image(&co(&[3, 3]), &b), Err(SatakeError::Missing(_))));
    }

    fn random_top(rng: &mut ChaCha8Rng, g: usize) -> Cocharacter {
        let rd = build_root_datum(g).unwrap();
        let pool: Vec<Cocharacter> = dominant_ball(g, 3)
            .into_iter()
            .filter(|l| (2..=8).contains(&dominant_lower_set(&rd, l).unwrap().len()))
            .collect();
        pool[rng.gen_range(0..pool.len())].clone()
    }

    #[test]
    fn inversion_is_an_involution_and_inverts_the_image() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for trial in 0..50 {
            let g = 1 + trial % 2;
            let top = random_top(&mut rng, g);
            let b = SatakeCoefficients::random(&mut rng, g, 2, &f7(), &top).unwrap();
            let d = invert_coefficients(&b).unwrap();
            assert_eq!(invert_coefficients(&d).unwrap(), b);

            // v^{−⟨2ρ,λ⟩}·Σ_μ d_λ(μ)·S(c_μ) = χ_λ in the representation ring.
            let rd = build_root_datum(g).unwrap();
            let mut acc = RepRingElement::zero(g, &f7());
            for (mu, d_mu) in d.row(&top).unwrap() {
                acc = acc.add(&satake_image(mu, &b).unwrap().scale(-rd.rho2_pairing(&top), d_mu));
            }
            let mut expect = RepRingElement::zero(g, &f7());
            expect.add_term(&top, 0, &f7().one());
            assert_eq!(acc, expect);
        }
    }

    #[test]
    fn table_text_round_trip() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let b = SatakeCoefficients::random(&mut rng, 2, 3, &f49(), &co(&[2, 1, 2])).unwrap();
        let back = SatakeCoefficients::from_text(2, 3, &f49(), &b.to_text()).unwrap();
        assert_eq!(back, b);
        assert!(SatakeCoefficients::from_text(1, 2, &f7(), "1,1 ; 0").is_err());
    }

    #[test]
    fn twist_examples() {
        let lam = co(&[1, 1]);
        let psi = Eigensystem { g: 1, ell: 2, ring: f7(), values: BTreeMap::from([(lam.clone(), f7().one())]) };
        assert_eq!(twist_eigensystem(&psi, 0).unwrap(), psi);
        assert_eq!(twist_eigensystem(&psi, 1).unwrap().values[&lam], f7().from_int(2));

        let lam = co(&[1, 1, 2]);
        let psi = Eigensystem { g: 2, ell: 3, ring: f7(), values: BTreeMap::from([(lam.clone(), f7().one())]) };
        assert_eq!(twist_eigensystem(&psi, 2).unwrap().values[&lam], f7().from_int(4));
    }

    #[test]
    fn twists_compose() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for g in 1..=2 {
            let psi = Eigensystem::random(&mut rng, g, 3, &f49(), &co(&vec![2; g + 1])).unwrap();
            for m1 in 0..3 {
                for m2 in 0..3 {
                    let twice = twist_eigensystem(&twist_eigensystem(&psi, m1).unwrap(), m2).unwrap();
                    assert_eq!(twice, twist_eigensystem(&psi, m1 + m2).unwrap());
                }
            }
        }
    }

    #[test]
    fn weights_small_cases() {
        assert_eq!(weights_of_irrep(&co(&[0, 0])).unwrap(), BTreeMap::from([(co(&[0, 0]), 1)]));
        assert_eq!(weights_of_irrep(&co(&[1, 1])).unwrap(), BTreeMap::from([(co(&[1, 1]), 1), (co(&[0, 1]), 1)]));
        // Spin representation of GSpin_5: four weights.
        let w = weights_of_irrep(&co(&[1, 1, 1])).unwrap();
        assert_eq!(w.values().sum::<i64>(), 4);
        // The standard 5-dimensional representation of SO_5 has the zero weight.
        let w = weights_of_irrep(&co(&[1, 0, 0])).unwrap();
        assert_eq!(w.values().sum::<i64>(), 5);
        assert_eq!(w[&co(&[0, 0, 0])], 1);
        assert!(matches!(weights_of_irrep(&co(&[9, 0, 0])), Err(SatakeError::Guard { .. })));
        assert!(matches!(weights_of_irrep(&co(&[0, 1])), Err(SatakeError::NotDominant(_))));
    }

    #[test]
    fn weight_properties_on_ball() {
        for g in 1..=2 {
            let rd = build_root_datum(g).unwrap();
            for lam in dominant_ball(g, 2) {
                let w = weights_of_irrep(&lam).unwrap();
                assert_eq!(w[&lam], 1);
                // Weyl dimension formula over the dual root system.
                let two_lam_rho = lam.scale(2).add(&rd.rho2_hat);
                let mut num = BigRational::from_integer(1.into());
                for a in &rd.positive_roots {
                    num *= BigRational::new(
                        crate::rootdatum::pair(a, &two_lam_rho).unwrap().into(),
                        rd.rho2_hat_pairing(a).into(),
                    );
                }
                assert_eq!(num, BigRational::from_integer(w.values().sum::<i64>().into()), "{lam}");
                for (mu, &mult) in &w {
                    assert!(mult > 0);
                    assert_eq!(eta_exponent(mu), eta_exponent(&lam));
                    let dom = dominant_conjugate(&rd, mu);
                    assert!(dominance_compare(&lam, &dom).unwrap().is_some(), "{dom} !<= {lam}");
                    assert_eq!(w.get(&dom), Some(&mult));
                }
            }
        }
    }

    #[test]
    fn characters_are_central_and_weyl_invariant() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let ring = f49();
        for g in 1..=2 {
            let rd = build_root_datum(g).unwrap();
            let group = weyl_group(&rd).unwrap();
            assert_eq!(
                char_eval(&co(&vec![0; g + 1]), &DualTorusPoint::random(&mut rng, g, &ring).unwrap()).unwrap(),
                ring.one()
            );
            for lam in dominant_ball(g, 2) {
                let t = DualTorusPoint::random(&mut rng, g, &ring).unwrap();
                let a = DualTorusPoint::random(&mut rng, 1, &ring).unwrap().coords[0].clone();
                let base = char_eval(&lam, &t).unwrap();
                let moved = char_eval(&lam, &DualTorusPoint::eta_dual(g, &a).unwrap().mul(&t)).unwrap();
                assert_eq!(moved, &a.pow(eta_exponent(&lam)).unwrap() * &base);
                for w in &group {
                    assert_eq!(char_eval(&lam, &t.weyl_act(w)).unwrap(), base);
                }
            }
        }
    }

    #[test]
    fn square_roots_of_ell() {
        assert_eq!(sqrt_in_field(&f7(), 2).unwrap().map(|v| &v * &v), Some(f7().from_int(2)));
        assert_eq!(sqrt_in_field(&f7(), 3).unwrap(), None);
        let v = sqrt_in_field(&f49(), 3).unwrap().unwrap();
        assert_eq!(&v * &v, f49().from_int(3));
    }

    fn replay(g: usize, ell: u64, m: i64, lam: &Cocharacter, rng: &mut ChaCha8Rng) -> MainTheoremReport {
        let ring = f49();
        let v = sqrt_in_field(&ring, ell).unwrap().unwrap();
        let b = SatakeCoefficients::random(rng, g, ell, &ring, lam).unwrap();
        let d = invert_coefficients(&b).unwrap();
        let psi = Eigensystem::random(rng, g, ell, &ring, lam).unwrap();
        main_theorem_verify(lam, &d, &psi, m, &v).unwrap()
    }

    #[test]
    fn main_theorem_spin_cases() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for _ in 0..100 {
            let r = replay(1, 2, 1, &co(&[1, 1]), &mut rng);
            assert!(r.holds, "{}", r.transcript);
            assert!(r.symbolically_distinct());
        }
        for m in [1, 2] {
            for _ in 0..50 {
                let r = replay(2, 3, m, &co(&[1, 1, 1]), &mut rng);
                assert!(r.holds, "{}", r.transcript);
                assert!(r.symbolically_distinct());
            }
        }
        let r = replay(2, 3, 0, &co(&[1, 1, 1]), &mut rng);
        assert!(r.holds && !r.symbolically_distinct());
    }

    #[test]
    fn main_theorem_on_nontrivial_lower_sets() {
        let mut rng = ChaCha8Rng::seed_from_u64(22);
        for trial in 0..60 {
            let g = 1 + trial % 2;
            let lam = random_top(&mut rng, g);
            let ell = [2, 3][trial % 2];
            let m = (trial % 3) as i64;
            let r = replay(g, ell, m, &lam, &mut rng);
            assert!(r.holds, "{}", r.transcript);
            assert_eq!(r.symbolically_distinct(), m * eta_exponent(&lam) != 0);
        }
    }

    #[test]
    fn a_wrong_twist_is_detected() {
        // Twisting by one extra power of ℓ breaks the identity on most inputs.
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        let ring = f49();
        let v = sqrt_in_field(&ring, 3).unwrap().unwrap();
        let lam = co(&[2, 1, 2]);
        let mut caught = 0;
        for _ in 0..40 {
            let d = invert_coefficients(&SatakeCoefficients::random(&mut rng, 2, 3, &ring, &lam).unwrap()).unwrap();
            let psi = Eigensystem::random(&mut rng, 2, 3, &ring, &lam).unwrap();
            let r = main_theorem_verify(&lam, &d, &psi, 1, &v).unwrap();
            let h = satake_inverse_chi(&lam, &d).unwrap();
            let wrong = h.evaluate(&twist_eigensystem(&psi, 2).unwrap(), &v).unwrap();
            if wrong != r.right {
                caught += 1;
            }
        }
        assert!(caught >= 30, "only {caught} of 40 mutants caught");
    }

    #[test]
    fn verifier_preconditions() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let lam = co(&[1, 1]);
        let d = SatakeCoefficients::identity(1, 2, &f7(), &[lam.clone()]).unwrap();
        let psi = Eigensystem::random(&mut rng, 1, 2, &f7(), &lam).unwrap();
        assert!(matches!(main_theorem_verify(&lam, &d, &psi, 1, &f7().from_int(2)), Err(SatakeError::Precondition(_))));
        let d7 = SatakeCoefficients { ell: 7, ..d.clone() };
        let psi7 = Eigensystem { ell: 7, ..psi.clone() };
        assert!(matches!(main_theorem_verify(&lam, &d7, &psi7, 1, &f7().zero()), Err(SatakeError::Precondition(_))));
        assert!(main_theorem_verify(&lam, &d, &psi, 1, &f7().from_int(3)).unwrap().holds);
    }
}
