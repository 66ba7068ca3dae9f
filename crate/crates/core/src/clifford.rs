//! The Clifford algebra C(R) on generators c_1, …, c_{2g+1} with c_i² = 1 and
//! c_i c_j = −c_j c_i, its parity automorphism, and the GSpin_{2g+1}
//! membership test.
//!
//! A monomial is a subset S of {1, …, 2g+1}, stored as a bitmask (bit i−1 for
//! c_i) and read as the ordered product of its generators. The relations give
//! a basis of 2^{2g+1} monomials.

use std::collections::BTreeMap;
use std::fmt;

use thiserror::Error;

use crate::exactring::{parse_rational, RingDescriptor, RingError, RingValue};
use crate::linalg::solve_ring;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CliffordError {
    #[error("operands live in different algebras")]
    Mismatch,
    #[error("dense operations are limited to g <= {MAX_DENSE_G} (got {0})")]
    SizeGuard(usize),
    #[error("element is not invertible")]
    NotInvertible,
    #[error("monomial mask {0:#b} out of range for g = {1}")]
    MaskOutOfRange(u32, usize),
    #[error(transparent)]
    Ring(#[from] RingError),
    #[error("parse error: {0}")]
    Parse(String),
}

pub type CliffordResult<T> = Result<T, CliffordError>;

pub const MAX_DENSE_G: usize = 2;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CliffordElement {
    g: usize,
    ring: RingDescriptor,
    terms: BTreeMap<u32, RingValue>,
}

/// Sign of e_S · e_T: (−1)^{#{(s, t) ∈ S × T : s > t}}.
fn monomial_sign(s: u32, t: u32) -> i64 {
    let mut inversions = 0u32;
    let mut rest = t;
    while rest != 0 {
        let bit = rest.trailing_zeros();
        rest &= rest - 1;
        let above = if bit >= 31 { 0 } else { s & !((1u32 << (bit + 1)) - 1) };
        inversions += above.count_ones();
    }
    if inversions % 2 == 0 {
        1
    } else {
        -1
    }
}

impl CliffordElement {
    pub fn zero(g: usize, ring: RingDescriptor) -> Self {
        Self { g, ring, terms: BTreeMap::new() }
    }

    pub fn scalar(g: usize, c: RingValue) -> Self {
        Self::monomial(g, 0, c).expect("empty monomial is always in range")
    }

    pub fn one(g: usize, ring: RingDescriptor) -> Self {
        let one = ring.one();
        Self::scalar(g, one)
    }

    pub fn monomial(g: usize, mask: u32, c: RingValue) -> CliffordResult<Self> {
        let mut out = Self::zero(g, c.descriptor());
        if mask >> Self::generator_count_of(g) != 0 {
            return Err(CliffordError::MaskOutOfRange(mask, g));
        }
        if !c.is_zero() {
            out.terms.insert(mask, c);
        }
        Ok(out)
    }

    /// The generator c_i, 1 ≤ i ≤ 2g+1.
    pub fn generator(g: usize, i: usize, ring: &RingDescriptor) -> CliffordResult<Self> {
        if i == 0 || i > Self::generator_count_of(g) as usize {
            return Err(CliffordError::MaskOutOfRange(0, g));
        }
        Self::monomial(g, 1 << (i - 1), ring.one())
    }

    /// Σ coeffs[i] c_{i+1}, an element of the vector span M.
    pub fn vector(g: usize, coeffs: &[RingValue]) -> CliffordResult<Self> {
        let ring = coeffs.first().map(|c| c.descriptor()).unwrap_or(RingDescriptor::Rational);
        let mut out = Self::zero(g, ring);
        for (i, c) in coeffs.iter().enumerate() {
            out = out.add(&Self::monomial(g, 1 << i, c.clone())?)?;
        }
        Ok(out)
    }

    fn generator_count_of(g: usize) -> u32 {
        2 * g as u32 + 1
    }

    pub fn generator_count(&self) -> u32 {
        Self::generator_count_of(self.g)
    }

    pub fn basis_size(&self) -> usize {
        1usize << self.generator_count()
    }

    pub fn g(&self) -> usize {
        self.g
    }

    pub fn ring(&self) -> &RingDescriptor {
        &self.ring
    }

    pub fn terms(&self) -> &BTreeMap<u32, RingValue> {
        &self.terms
    }

    pub fn coefficient(&self, mask: u32) -> RingValue {
        self.terms.get(&mask).cloned().unwrap_or_else(|| self.ring.zero())
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn is_even(&self) -> bool {
        self.terms.keys().all(|m| m.count_ones() % 2 == 0)
    }

    /// Lies in the span M of the generators.
    pub fn is_vector(&self) -> bool {
        self.terms.keys().all(|m| m.count_ones() == 1)
    }

    fn check(&self, other: &Self) -> CliffordResult<()> {
        if self.g != other.g || self.ring != other.ring {
            return Err(CliffordError::Mismatch);
        }
        Ok(())
    }

    fn accumulate(terms: &mut BTreeMap<u32, RingValue>, mask: u32, c: RingValue) {
        match terms.get_mut(&mask) {
            Some(v) => {
                *v = &*v + &c;
                if v.is_zero() {
                    terms.remove(&mask);
                }
            }
            None => {
                if !c.is_zero() {
                    terms.insert(mask, c);
                }
            }
        }
    }

    pub fn add(&self, other: &Self) -> CliffordResult<Self> {
        self.check(other)?;
        let mut terms = self.terms.clone();
        for (&m, c) in &other.terms {
            Self::accumulate(&mut terms, m, c.clone());
        }
        Ok(Self { g: self.g, ring: self.ring.clone(), terms })
    }

    pub fn sub(&self, other: &Self) -> CliffordResult<Self> {
        self.add(&other.scale(&self.ring.from_int(-1)))
    }

    pub fn scale(&self, c: &RingValue) -> Self {
        let mut terms = BTreeMap::new();
        for (&m, v) in &self.terms {
            Self::accumulate(&mut terms, m, v * c);
        }
        Self { g: self.g, ring: self.ring.clone(), terms }
    }

    pub fn mul(&self, other: &Self) -> CliffordResult<Self> {
        cliff_mul(self, other)
    }
}

/// Product in C(R): e_S · e_T = (−1)^{inv(S,T)} e_{S Δ T}, extended bilinearly.
pub fn cliff_mul(x: &CliffordElement, y: &CliffordElement) -> CliffordResult<CliffordElement> {
    x.check(y)?;
    let mut terms = BTreeMap::new();
    for (&s, a) in &x.terms {
        for (&t, b) in &y.terms {
            let prod = a * b;
            let c = if monomial_sign(s, t) < 0 { -&prod } else { prod };
            CliffordElement::accumulate(&mut terms, s ^ t, c);
        }
    }
    Ok(CliffordElement { g: x.g, ring: x.ring.clone(), terms })
}

/// γ: fixes even monomials and negates odd ones.
pub fn parity_automorphism(x: &CliffordElement) -> CliffordElement {
    let terms = x.terms.iter().map(|(&m, c)| (m, if m.count_ones() % 2 == 1 { -c } else { c.clone() })).collect();
    CliffordElement { g: x.g, ring: x.ring.clone(), terms }
}

/// Two-sided inverse by solving the left-multiplication system L_x y = 1.
pub fn cliff_inverse(x: &CliffordElement) -> CliffordResult<Option<CliffordElement>> {
    if x.g > MAX_DENSE_G {
        return Err(CliffordError::SizeGuard(x.g));
    }
    if x.is_zero() {
        return Ok(None);
    }
    let dim = x.basis_size();
    let zero = x.ring.zero();
    // Column t of L_x is x · e_t.
    let mut mat = vec![vec![zero.clone(); dim]; dim];
    for t in 0..dim as u32 {
        for (&s, a) in &x.terms {
            let c = if monomial_sign(s, t) < 0 { -a } else { a.clone() };
            mat[(s ^ t) as usize][t as usize] = c;
        }
    }
    let mut rhs = vec![zero; dim];
    rhs[0] = x.ring.one();
    let Some(sol) = solve_ring(&mat, &rhs) else {
        return Ok(None);
    };
    let mut terms = BTreeMap::new();
    for (m, c) in sol.into_iter().enumerate() {
        if !c.is_zero() {
            terms.insert(m as u32, c);
        }
    }
    Ok(Some(CliffordElement { g: x.g, ring: x.ring.clone(), terms }))
}

/// γ(x) · m · x⁻¹.
pub fn twisted_conjugate(x: &CliffordElement, m: &CliffordElement) -> CliffordResult<CliffordElement> {
    x.check(m)?;
    let inv = cliff_inverse(x)?.ok_or(CliffordError::NotInvertible)?;
    cliff_mul(&cliff_mul(&parity_automorphism(x), m)?, &inv)
}

/// Membership in GSpin_{2g+1}(R): x is even, invertible, and its twisted
/// conjugation maps every generator into M. By linearity the generators
/// suffice.
pub fn is_gspin(x: &CliffordElement) -> CliffordResult<bool> {
    if x.g > MAX_DENSE_G {
        return Err(CliffordError::SizeGuard(x.g));
    }
    if x.is_zero() || !x.is_even() {
        return Ok(false);
    }
    let Some(inv) = cliff_inverse(x)? else {
        return Ok(false);
    };
    let gx = parity_automorphism(x);
    for i in 1..=x.generator_count() as usize {
        let c = CliffordElement::generator(x.g, i, &x.ring)?;
        if !cliff_mul(&cliff_mul(&gx, &c)?, &inv)?.is_vector() {
            return Ok(false);
        }
    }
    Ok(true)
}

impl fmt::Display for CliffordElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        let mut keys: Vec<u32> = self.terms.keys().copied().collect();
        keys.sort_by_key(|m| (m.count_ones(), m.reverse_bits()));
        let parts: Vec<String> = keys
            .iter()
            .map(|&m| {
                let c = self.terms[&m].encode();
                if m == 0 {
                    c
                } else {
                    let gens: String = (0..32).filter(|b| m >> b & 1 == 1).map(|b| format!("c{}", b + 1)).collect();
                    format!("{c}*{gens}")
                }
            })
            .collect();
        write!(f, "{}", parts.join(" + "))
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Token {
    Num(String),
    Gen(usize),
    Plus,
    Minus,
    Star,
    Open,
    Close,
}

fn tokenize(s: &str) -> CliffordResult<Vec<Token>> {
    let chars: Vec<char> = s.chars().collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let ch = chars[i];
        match ch {
            ' ' | '\t' => i += 1,
            '+' => {
                out.push(Token::Plus);
                i += 1;
            }
            '-' => {
                out.push(Token::Minus);
                i += 1;
            }
            '*' => {
                out.push(Token::Star);
                i += 1;
            }
            '(' => {
                out.push(Token::Open);
                i += 1;
            }
            ')' => {
                out.push(Token::Close);
                i += 1;
            }
            'c' => {
                let start = i + 1;
                i = start;
                while i < chars.len() && chars[i].is_ascii_digit() {
                    i += 1;
                }
                let idx: usize = chars[start..i]
                    .iter()
                    .collect::<String>()
                    .parse()
                    .map_err(|_| CliffordError::Parse(format!("bad generator at position {start}")))?;
                out.push(Token::Gen(idx));
            }
            d if d.is_ascii_digit() => {
                let start = i;
                while i < chars.len() && (chars[i].is_ascii_digit() || chars[i] == '/') {
                    i += 1;
                }
                out.push(Token::Num(chars[start..i].iter().collect()));
            }
            other => return Err(CliffordError::Parse(format!("unexpected character `{other}`"))),
        }
    }
    Ok(out)
}

struct Parser<'a> {
    tokens: &'a [Token],
    pos: usize,
    g: usize,
    ring: &'a RingDescriptor,
}

impl Parser<'_> {
    fn peek(&self) -> Option<&Token> {
        self.tokens.get(self.pos)
    }

    fn expr(&mut self) -> CliffordResult<CliffordElement> {
        let mut acc = self.term()?;
        while let Some(tok) = self.peek() {
            match tok {
                Token::Plus => {
                    self.pos += 1;
                    acc = acc.add(&self.term()?)?;
                }
                Token::Minus => {
                    self.pos += 1;
                    acc = acc.sub(&self.term()?)?;
                }
                _ => break,
            }
        }
        Ok(acc)
    }

    fn term(&mut self) -> CliffordResult<CliffordElement> {
        let mut acc = self.factor()?;
        while self.peek() == Some(&Token::Star) {
            self.pos += 1;
            acc = cliff_mul(&acc, &self.factor()?)?;
        }
        Ok(acc)
    }

    fn factor(&mut self) -> CliffordResult<CliffordElement> {
        match self.peek().cloned() {
            Some(Token::Minus) => {
                self.pos += 1;
                Ok(self.factor()?.scale(&self.ring.from_int(-1)))
            }
            Some(Token::Num(text)) => {
                self.pos += 1;
                let q = parse_rational(&text).ok_or_else(|| CliffordError::Parse(format!("bad scalar `{text}`")))?;
                Ok(CliffordElement::scalar(self.g, self.ring.from_rational(&q)?))
            }
            Some(Token::Gen(i)) => {
                self.pos += 1;
                CliffordElement::generator(self.g, i, self.ring)
                    .map_err(|_| CliffordError::Parse(format!("generator c{i} out of range for g = {}", self.g)))
            }
            Some(Token::Open) => {
                self.pos += 1;
                let inner = self.expr()?;
                if self.peek() != Some(&Token::Close) {
                    return Err(CliffordError::Parse("missing `)`".into()));
                }
                self.pos += 1;
                Ok(inner)
            }
            other => Err(CliffordError::Parse(format!("unexpected token {other:?}"))),
        }
    }
}

/// Evaluates an expression over generators `c1..c(2g+1)`, rational scalars,
/// `+ - *` and parentheses.
pub fn parse_expression(g: usize, ring: &RingDescriptor, text: &str) -> CliffordResult<CliffordElement> {
    let tokens = tokenize(text)?;
    let mut parser = Parser { tokens: &tokens, pos: 0, g, ring };
    let out = parser.expr()?;
    if parser.pos != tokens.len() {
        return Err(CliffordError::Parse(format!("trailing input at token {}", parser.pos)));
    }
    Ok(out)
}

/// m², which is a scalar for m in M; returns that scalar.
pub fn quadratic_form(m: &CliffordElement) -> CliffordResult<Option<RingValue>> {
    let sq = cliff_mul(m, m)?;
    if sq.terms.keys().any(|&k| k != 0) {
        return Ok(None);
    }
    Ok(Some(sq.coefficient(0)))
}

/// A random sparse element with small integer coefficients.
pub fn random_element<R: rand::Rng>(rng: &mut R, g: usize, ring: &RingDescriptor) -> CliffordElement {
    let dim = 1u32 << (2 * g + 1);
    let mut x = CliffordElement::zero(g, ring.clone());
    for _ in 0..rng.gen_range(1..6) {
        let c = ring.from_int(rng.gen_range(-4..=4));
        x = x.add(&CliffordElement::monomial(g, rng.gen_range(0..dim), c).unwrap()).unwrap();
    }
    x
}

/// A random anisotropic vector of M with small integer coordinates.
pub fn random_vector<R: rand::Rng>(rng: &mut R, g: usize, ring: &RingDescriptor) -> CliffordElement {
    loop {
        let coeffs: Vec<RingValue> = (0..2 * g + 1).map(|_| ring.from_int(rng.gen_range(-3..=3))).collect();
        let v = CliffordElement::vector(g, &coeffs).unwrap();
        if quadratic_form(&v).unwrap().is_some_and(|q| !q.is_zero()) {
            return v;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    const Q: RingDescriptor = RingDescriptor::Rational;

    fn ev(g: usize, s: &str) -> CliffordElement {
        parse_expression(g, &Q, s).unwrap()
    }

    #[test]
    fn generator_relations() {
        assert_eq!(ev(1, "c1*c1"), ev(1, "1"));
        assert_eq!(ev(1, "c2*c1"), ev(1, "-(c1*c2)"));
        assert_eq!(ev(1, "(c1*c2)*(c2*c3)"), ev(1, "c1*c3"));
    }

    #[test]
    fn sign_rule_matches_brute_force_reordering() {
        // Bubble-sort the concatenated generator word, counting swaps.
        for s in 0u32..32 {
            for t in 0u32..32 {
                let mut word: Vec<u32> = (0..5).filter(|b| s >> b & 1 == 1).collect();
                word.extend((0..5).filter(|b| t >> b & 1 == 1));
                let mut swaps = 0;
                for i in 0..word.len() {
                    for j in 0..word.len() - 1 - i {
                        if word[j] > word[j + 1] {
                            word.swap(j, j + 1);
                            swaps += 1;
                        }
                    }
                }
                assert_eq!(monomial_sign(s, t), if swaps % 2 == 0 { 1 } else { -1 }, "{s:b} {t:b}");
            }
        }
    }

    #[test]
    fn parity_examples() {
        assert_eq!(parity_automorphism(&ev(1, "c1")), ev(1, "-c1"));
        assert_eq!(parity_automorphism(&ev(1, "c1*c2")), ev(1, "c1*c2"));
        assert_eq!(parity_automorphism(&ev(1, "1 + c1 + c1*c2")), ev(1, "1 - c1 + c1*c2"));
    }

    #[test]
    fn inverse_examples() {
        assert_eq!(cliff_inverse(&ev(1, "c1*c2")).unwrap(), Some(ev(1, "-(c1*c2)")));
        assert_eq!(cliff_inverse(&ev(1, "1 + c1*c2")).unwrap(), Some(ev(1, "1/2 - 1/2*c1*c2")));
        assert_eq!(cliff_inverse(&CliffordElement::zero(1, Q)).unwrap(), None);
        // 1 + c1 squares to 2 + 2c1 and is a zero divisor: (1 + c1)(1 − c1) = 0.
        assert_eq!(cliff_inverse(&ev(1, "1 + c1")).unwrap(), None);
        assert!(matches!(cliff_inverse(&CliffordElement::one(3, Q)), Err(CliffordError::SizeGuard(3))));
    }

    #[test]
    fn twisted_conjugate_examples() {
        assert_eq!(twisted_conjugate(&ev(1, "c1*c2"), &ev(1, "c1")).unwrap(), ev(1, "-c1"));
        assert_eq!(twisted_conjugate(&ev(1, "c1*c2"), &ev(1, "c3")).unwrap(), ev(1, "c3"));
        assert_eq!(twisted_conjugate(&ev(1, "1"), &ev(1, "c1")).unwrap(), ev(1, "c1"));
        assert_eq!(twisted_conjugate(&ev(1, "1 + c1"), &ev(1, "c1")), Err(CliffordError::NotInvertible));
    }

    #[test]
    fn gspin_examples() {
        assert!(is_gspin(&ev(1, "c1*c2")).unwrap());
        assert!(!is_gspin(&ev(1, "c1")).unwrap());
        assert!(is_gspin(&ev(1, "(3*c1 + 4*c2)*(c1 + 2*c3)")).unwrap());
        // even and invertible, but conjugation leaves M
        assert!(!is_gspin(&ev(2, "2 + c1*c2*c3*c4")).unwrap());
    }

    #[test]
    fn basis_closes_under_multiplication() {
        for g in 1..=2 {
            let n = 1u32 << (2 * g + 1);
            assert_eq!(CliffordElement::one(g, Q).basis_size(), n as usize);
            for s in 0..n {
                for t in 0..n {
                    let a = CliffordElement::monomial(g, s, Q.one()).unwrap();
                    let b = CliffordElement::monomial(g, t, Q.one()).unwrap();
                    let prod = cliff_mul(&a, &b).unwrap();
                    assert_eq!(prod.terms().len(), 1);
                    assert!(prod.terms().keys().all(|&m| m < n));
                }
            }
        }
    }

    #[test]
    fn associativity_and_parity_homomorphism() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for ring in [Q, RingDescriptor::PrimeField(7)] {
            for _ in 0..200 {
                let g = rng.gen_range(1..=2);
                let (x, y, z) = (
                    random_element(&mut rng, g, &ring),
                    random_element(&mut rng, g, &ring),
                    random_element(&mut rng, g, &ring),
                );
                let xy = cliff_mul(&x, &y).unwrap();
                assert_eq!(cliff_mul(&xy, &z).unwrap(), cliff_mul(&x, &cliff_mul(&y, &z).unwrap()).unwrap());
                assert_eq!(
                    parity_automorphism(&xy),
                    cliff_mul(&parity_automorphism(&x), &parity_automorphism(&y)).unwrap()
                );
                assert_eq!(parity_automorphism(&parity_automorphism(&x)), x);
            }
        }
    }

    #[test]
    fn inverse_is_two_sided() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..40 {
            let x = random_element(&mut rng, 2, &Q);
            if let Some(inv) = cliff_inverse(&x).unwrap() {
                assert!(cliff_mul(&x, &inv).unwrap() == CliffordElement::one(2, Q));
                assert!(cliff_mul(&inv, &x).unwrap() == CliffordElement::one(2, Q));
            }
        }
    }

    #[test]
    fn two_vector_products_are_gspin_and_preserve_the_form() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for g in 1..=2 {
            let mut members = Vec::new();
            for _ in 0..50 {
                let x = cliff_mul(&random_vector(&mut rng, g, &Q), &random_vector(&mut rng, g, &Q)).unwrap();
                assert!(is_gspin(&x).unwrap());
                let m = random_vector(&mut rng, g, &Q);
                let image = twisted_conjugate(&x, &m).unwrap();
                assert!(image.is_vector());
                assert_eq!(quadratic_form(&image).unwrap(), quadratic_form(&m).unwrap());
                members.push(x);
            }
            for pair in members.chunks(2) {
                assert!(is_gspin(&cliff_mul(&pair[0], &pair[1]).unwrap()).unwrap());
            }
        }
    }

    #[test]
    fn parser_errors() {
        assert!(parse_expression(1, &Q, "c4").is_err());
        assert!(parse_expression(1, &Q, "(c1").is_err());
        assert!(parse_expression(1, &Q, "c1 c2").is_err());
        assert!(parse_expression(1, &Q, "c1 ^ 2").is_err());
        assert_eq!(ev(1, "2*c3*c1").to_string(), "-2/1*c1c3");
    }
}
