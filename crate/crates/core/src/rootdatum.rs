//! Root datum of GSp_2g.
//!
//! Characters are written in the basis e_1..e_{g+1} of X and cocharacters in
//! the dual basis f_1..f_{g+1} of X∨, with ⟨e_i, f_j⟩ = δ_ij. The torus
//! element t(u_1, …, u_{g+1}) is diag(u_1, …, u_g; u_{g+1}/u_1, …, u_{g+1}/u_g),
//! so the similitude character is η = e_{g+1}.
//!
//! The half-sums ρ and ρ̂ are stored doubled (`rho2`, `rho2_hat`) so that
//! everything stays integral; downstream half-powers ℓ^{⟨ρ,μ⟩} become powers
//! v^{⟨2ρ,μ⟩} of a formal square root v of ℓ.

use std::collections::{BTreeSet, HashMap, VecDeque};
use std::fmt;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::Zero;
use thiserror::Error;

use crate::linalg::{identity_int, mat_mul_int, IntMatrix};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RootDatumError {
    #[error("degree must be at least 1")]
    ZeroDegree,
    #[error("expected {expected} coordinates, got {got}")]
    BadLength { expected: usize, got: usize },
    #[error("degree mismatch: {0} vs {1}")]
    DegreeMismatch(usize, usize),
    #[error("{0} is not dominant")]
    NotDominant(Cocharacter),
    #[error("Weyl group enumeration is limited to g <= {max} (got {g})")]
    SizeGuard { g: usize, max: usize },
    #[error("matrix is not a symplectic similitude")]
    NotSimilitude,
}

pub type RootDatumResult<T> = Result<T, RootDatumError>;

macro_rules! lattice_vector {
    ($name:ident, $basis:literal) => {
        #[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
        pub struct $name {
            g: usize,
            coeffs: Vec<i64>,
        }

        impl $name {
            pub fn new(g: usize, coeffs: Vec<i64>) -> RootDatumResult<Self> {
                if g == 0 {
                    return Err(RootDatumError::ZeroDegree);
                }
                if coeffs.len() != g + 1 {
                    return Err(RootDatumError::BadLength { expected: g + 1, got: coeffs.len() });
                }
                Ok(Self { g, coeffs })
            }

            /// Builds from a coordinate list of length g+1.
            pub fn from_coeffs(coeffs: &[i64]) -> RootDatumResult<Self> {
                Self::new(coeffs.len().saturating_sub(1), coeffs.to_vec())
            }

            pub fn zero(g: usize) -> Self {
                Self { g, coeffs: vec![0; g + 1] }
            }

            /// The j-th basis vector, 1-based as in the usual notation.
            pub fn basis(g: usize, j: usize) -> Self {
                let mut v = Self::zero(g);
                v.coeffs[j - 1] = 1;
                v
            }

            pub fn g(&self) -> usize {
                self.g
            }

            pub fn coeffs(&self) -> &[i64] {
                &self.coeffs
            }

            pub fn add(&self, other: &Self) -> Self {
                assert_eq!(self.g, other.g, "degree mismatch");
                Self { g: self.g, coeffs: self.coeffs.iter().zip(&other.coeffs).map(|(a, b)| a + b).collect() }
            }

            pub fn sub(&self, other: &Self) -> Self {
                self.add(&other.scale(-1))
            }

            pub fn scale(&self, k: i64) -> Self {
                Self { g: self.g, coeffs: self.coeffs.iter().map(|a| a * k).collect() }
            }

            fn apply(&self, m: &IntMatrix) -> Self {
                let coeffs = m.iter().map(|row| row.iter().zip(&self.coeffs).map(|(a, b)| a * b).sum()).collect();
                Self { g: self.g, coeffs }
            }
        }

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                let mut first = true;
                for (j, &a) in self.coeffs.iter().enumerate() {
                    if a == 0 {
                        continue;
                    }
                    let sign = if a < 0 {
                        "-"
                    } else if first {
                        ""
                    } else {
                        "+"
                    };
                    let mag = a.abs();
                    if mag == 1 {
                        write!(f, "{sign}{}{}", $basis, j + 1)?;
                    } else {
                        write!(f, "{sign}{mag}{}{}", $basis, j + 1)?;
                    }
                    first = false;
                }
                if first {
                    write!(f, "0")?;
                }
                Ok(())
            }
        }
    };
}

lattice_vector!(Character, "e");
lattice_vector!(Cocharacter, "f");

/// The pairing ⟨x, y⟩ between X and X∨.
pub fn pair(x: &Character, y: &Cocharacter) -> RootDatumResult<i64> {
    if x.g != y.g {
        return Err(RootDatumError::DegreeMismatch(x.g, y.g));
    }
    Ok(x.coeffs.iter().zip(&y.coeffs).map(|(a, b)| a * b).sum())
}

fn pair_unchecked(x: &Character, y: &Cocharacter) -> i64 {
    x.coeffs.iter().zip(&y.coeffs).map(|(a, b)| a * b).sum()
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RootDatum {
    pub g: usize,
    pub simple_roots: Vec<Character>,
    pub simple_coroots: Vec<Cocharacter>,
    pub positive_roots: Vec<Character>,
    pub positive_coroots: Vec<Cocharacter>,
    /// 2ρ, the sum of the positive roots.
    pub rho2: Character,
    /// 2ρ̂, the sum of the positive coroots.
    pub rho2_hat: Cocharacter,
}

pub fn build_root_datum(g: usize) -> RootDatumResult<RootDatum> {
    if g == 0 {
        return Err(RootDatumError::ZeroDegree);
    }
    let mut simple_roots = Vec::with_capacity(g);
    let mut simple_coroots = Vec::with_capacity(g);
    for j in 1..g {
        simple_roots.push(Character::basis(g, j).sub(&Character::basis(g, j + 1)));
        simple_coroots.push(Cocharacter::basis(g, j).sub(&Cocharacter::basis(g, j + 1)));
    }
    simple_roots.push(Character::basis(g, g).scale(2).sub(&Character::basis(g, g + 1)));
    simple_coroots.push(Cocharacter::basis(g, g));

    // Close each simple set under the simple reflections, then keep the
    // roots with nonnegative coordinates in the simple basis.
    let reflect_char = |x: &Character, j: usize| x.sub(&simple_roots[j].scale(pair_unchecked(x, &simple_coroots[j])));
    let reflect_cochar =
        |y: &Cocharacter, j: usize| y.sub(&simple_coroots[j].scale(pair_unchecked(&simple_roots[j], y)));

    let roots = closure(&simple_roots, |x, j| reflect_char(x, j), g);
    let coroots = closure(&simple_coroots, |y, j| reflect_cochar(y, j), g);

    let positive_roots: Vec<Character> =
        roots.into_iter().filter(|x| root_coordinates(x).is_some_and(|c| c.iter().all(|&n| n >= 0))).collect();
    let positive_coroots: Vec<Cocharacter> =
        coroots.into_iter().filter(|y| coroot_coordinates(y).is_some_and(|c| c.iter().all(|&n| n >= 0))).collect();

    let rho2 = positive_roots.iter().fold(Character::zero(g), |acc, x| acc.add(x));
    let rho2_hat = positive_coroots.iter().fold(Cocharacter::zero(g), |acc, y| acc.add(y));
    Ok(RootDatum { g, simple_roots, simple_coroots, positive_roots, positive_coroots, rho2, rho2_hat })
}

fn closure<T: Clone + Ord>(seeds: &[T], reflect: impl Fn(&T, usize) -> T, g: usize) -> Vec<T> {
    let mut seen: BTreeSet<T> = seeds.iter().cloned().collect();
    let mut queue: VecDeque<T> = seeds.iter().cloned().collect();
    while let Some(x) = queue.pop_front() {
        for j in 0..g {
            let y = reflect(&x, j);
            if seen.insert(y.clone()) {
                queue.push_back(y);
            }
        }
    }
    seen.into_iter().collect()
}

/// Coordinates of a character in the simple-root basis, if it lies in their span.
pub fn root_coordinates(x: &Character) -> Option<Vec<i64>> {
    let g = x.g;
    let a = &x.coeffs;
    let mut c = vec![0i64; g];
    c[g - 1] = -a[g];
    if g >= 2 {
        c[0] = a[0];
        for j in 1..g - 1 {
            c[j] = a[j] + c[j - 1];
        }
        let prev = c[g - 2];
        (a[g - 1] == 2 * c[g - 1] - prev).then_some(c)
    } else {
        (a[0] == 2 * c[0]).then_some(c)
    }
}

/// Coordinates of a cocharacter in the simple-coroot basis: partial sums of
/// the first g coordinates, provided the f_{g+1} coordinate vanishes.
pub fn coroot_coordinates(y: &Cocharacter) -> Option<Vec<i64>> {
    if y.coeffs[y.g] != 0 {
        return None;
    }
    let mut acc = 0;
    Some(
        y.coeffs[..y.g]
            .iter()
            .map(|a| {
                acc += a;
                acc
            })
            .collect(),
    )
}

/// 2a_1 ≥ 2a_2 ≥ … ≥ 2a_g ≥ a_{g+1}.
pub fn is_dominant(lam: &Cocharacter) -> bool {
    let a = &lam.coeffs;
    let g = lam.g;
    a[..g].windows(2).all(|w| w[0] >= w[1]) && 2 * a[g - 1] >= a[g]
}

/// Witness `n` with λ − μ = Σ n_j α_j∨, n_j ≥ 0, when μ ≤ λ.
pub fn dominance_compare(lam: &Cocharacter, mu: &Cocharacter) -> RootDatumResult<Option<Vec<i64>>> {
    if lam.g != mu.g {
        return Err(RootDatumError::DegreeMismatch(lam.g, mu.g));
    }
    for x in [lam, mu] {
        if !is_dominant(x) {
            return Err(RootDatumError::NotDominant(x.clone()));
        }
    }
    Ok(coroot_coordinates(&lam.sub(mu)).filter(|n| n.iter().all(|&k| k >= 0)))
}

/// η(λ(ℓ)) = ℓ^{eta_exponent(λ)}.
pub fn eta_exponent(lam: &Cocharacter) -> i64 {
    lam.coeffs[lam.g]
}

/// det(λ(ℓ)) = ℓ^{det_exponent(λ)} = ℓ^{g·a_{g+1}}.
pub fn det_exponent(lam: &Cocharacter) -> i64 {
    lam.g as i64 * eta_exponent(lam)
}

fn rational_pow(base: i64, e: i64) -> BigRational {
    let b = BigRational::from_integer(BigInt::from(base));
    if e >= 0 {
        num_traits::pow(b, e as usize)
    } else {
        num_traits::pow(b.recip(), (-e) as usize)
    }
}

/// λ(ℓ) as a 2g×2g diagonal matrix.
pub fn cochar_matrix(lam: &Cocharacter, ell: i64) -> Vec<Vec<BigRational>> {
    let g = lam.g;
    let a = &lam.coeffs;
    let mut m = vec![vec![BigRational::zero(); 2 * g]; 2 * g];
    for j in 0..g {
        m[j][j] = rational_pow(ell, a[j]);
        m[g + j][g + j] = rational_pow(ell, a[g] - a[j]);
    }
    m
}

/// The standard symplectic form J = [[0, I], [−I, 0]].
pub fn symplectic_form(g: usize) -> IntMatrix {
    let mut j = vec![vec![0i64; 2 * g]; 2 * g];
    for i in 0..g {
        j[i][g + i] = 1;
        j[g + i][i] = -1;
    }
    j
}

/// η(M) for M with M J Mᵀ = η J.
pub fn similitude_factor(m: &[Vec<BigRational>]) -> RootDatumResult<BigRational> {
    let n = m.len();
    if n == 0 || n % 2 != 0 || m.iter().any(|r| r.len() != n) {
        return Err(RootDatumError::NotSimilitude);
    }
    let g = n / 2;
    let j = crate::linalg::rational_matrix(&symplectic_form(g));
    let mjmt = crate::linalg::mat_mul_q(&crate::linalg::mat_mul_q(m, &j), &crate::linalg::transpose(m));
    let eta = mjmt[0][g].clone();
    for r in 0..n {
        for c in 0..n {
            if mjmt[r][c] != &eta * &j[r][c] {
                return Err(RootDatumError::NotSimilitude);
            }
        }
    }
    if eta.is_zero() {
        return Err(RootDatumError::NotSimilitude);
    }
    Ok(eta)
}

/// An element of the Weyl group, recorded by its action on both lattices.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WeylElement {
    /// Acts on cocharacter coordinates (column vectors).
    pub on_cochar: IntMatrix,
    /// Acts on character coordinates; the inverse transpose of `on_cochar`.
    pub on_char: IntMatrix,
    /// Length of a reduced word in the simple reflections.
    pub length: usize,
}

impl WeylElement {
    pub fn sign(&self) -> i64 {
        if self.length % 2 == 0 {
            1
        } else {
            -1
        }
    }

    pub fn act_cochar(&self, y: &Cocharacter) -> Cocharacter {
        y.apply(&self.on_cochar)
    }

    pub fn act_char(&self, x: &Character) -> Character {
        x.apply(&self.on_char)
    }
}

pub const WEYL_MAX_G: usize = 4;

fn reflection_matrices(rd: &RootDatum, j: usize) -> (IntMatrix, IntMatrix) {
    let n = rd.g + 1;
    let (alpha, coalpha) = (&rd.simple_roots[j].coeffs, &rd.simple_coroots[j].coeffs);
    let mut on_cochar = identity_int(n);
    let mut on_char = identity_int(n);
    for r in 0..n {
        for c in 0..n {
            on_cochar[r][c] -= coalpha[r] * alpha[c];
            on_char[r][c] -= alpha[r] * coalpha[c];
        }
    }
    (on_cochar, on_char)
}

/// All elements of W, generated breadth-first from the simple reflections.
pub fn weyl_group(rd: &RootDatum) -> RootDatumResult<Vec<WeylElement>> {
    if rd.g > WEYL_MAX_G {
        return Err(RootDatumError::SizeGuard { g: rd.g, max: WEYL_MAX_G });
    }
    let gens: Vec<(IntMatrix, IntMatrix)> = (0..rd.g).map(|j| reflection_matrices(rd, j)).collect();
    let id = identity_int(rd.g + 1);
    let mut seen: HashMap<IntMatrix, usize> = HashMap::new();
    let mut out = vec![WeylElement { on_cochar: id.clone(), on_char: id.clone(), length: 0 }];
    seen.insert(id, 0);
    let mut head = 0;
    while head < out.len() {
        let w = out[head].clone();
        head += 1;
        for (sc, sx) in &gens {
            let on_cochar = mat_mul_int(sc, &w.on_cochar);
            if seen.contains_key(&on_cochar) {
                continue;
            }
            seen.insert(on_cochar.clone(), out.len());
            let on_char = mat_mul_int(sx, &w.on_char);
            out.push(WeylElement { on_cochar, on_char, length: w.length + 1 });
        }
    }
    Ok(out)
}

/// The dominant element of the Weyl orbit of `y`.
pub fn dominant_conjugate(rd: &RootDatum, y: &Cocharacter) -> Cocharacter {
    let mut y = y.clone();
    loop {
        let Some(j) = (0..rd.g).find(|&j| pair_unchecked(&rd.simple_roots[j], &y) < 0) else {
            return y;
        };
        y = y.sub(&rd.simple_coroots[j].scale(pair_unchecked(&rd.simple_roots[j], &y)));
    }
}

/// Dominant cocharacter naming the double coset of
/// diag(ℓ^{x_1}, …, ℓ^{x_g}; ℓ^{r−x_1}, …, ℓ^{r−x_g}).
///
/// Each exponent is replaced by max(x_j, r − x_j) and the list is sorted in
/// descending order; ties need no further breaking because equal exponents
/// give the same matrix.
pub fn dominant_representative(exponents: &[i64], r: i64) -> Cocharacter {
    let mut a: Vec<i64> = exponents.iter().map(|&x| x.max(r - x)).collect();
    a.sort_unstable_by(|x, y| y.cmp(x));
    a.push(r);
    Cocharacter { g: exponents.len(), coeffs: a }
}

/// Every dominant μ with μ ≤ λ, sorted by decreasing ⟨2ρ, μ⟩.
pub fn dominant_lower_set(rd: &RootDatum, lam: &Cocharacter) -> RootDatumResult<Vec<Cocharacter>> {
    if !is_dominant(lam) {
        return Err(RootDatumError::NotDominant(lam.clone()));
    }
    // ⟨2ρ, α_j∨⟩ = 2 and ⟨2ρ, μ⟩ ≥ 0 for dominant μ bound Σ n_j by ⟨2ρ, λ⟩ / 2.
    let height = pair_unchecked(&rd.rho2, lam);
    let budget = (height / 2).max(0);
    let mut out = Vec::new();
    let mut n = vec![0i64; rd.g];
    enumerate_bounded(&mut n, 0, budget, &mut |n| {
        let mut mu = lam.clone();
        for (j, &k) in n.iter().enumerate() {
            mu = mu.sub(&rd.simple_coroots[j].scale(k));
        }
        if is_dominant(&mu) {
            out.push(mu);
        }
    });
    out.sort_by(|a, b| pair_unchecked(&rd.rho2, b).cmp(&pair_unchecked(&rd.rho2, a)).then_with(|| b.cmp(a)));
    Ok(out)
}

fn enumerate_bounded(n: &mut Vec<i64>, pos: usize, budget: i64, visit: &mut impl FnMut(&[i64])) {
    if pos == n.len() {
        visit(n);
        return;
    }
    for k in 0..=budget {
        n[pos] = k;
        enumerate_bounded(n, pos + 1, budget - k, visit);
    }
    n[pos] = 0;
}

/// All dominant cocharacters with every coordinate in [−bound, bound].
pub fn dominant_ball(g: usize, bound: i64) -> Vec<Cocharacter> {
    let mut out = Vec::new();
    let mut cur = vec![0i64; g + 1];
    fn rec(cur: &mut Vec<i64>, pos: usize, bound: i64, g: usize, out: &mut Vec<Cocharacter>) {
        if pos == cur.len() {
            let c = Cocharacter { g, coeffs: cur.clone() };
            if is_dominant(&c) {
                out.push(c);
            }
            return;
        }
        for v in -bound..=bound {
            cur[pos] = v;
            rec(cur, pos + 1, bound, g, out);
        }
    }
    rec(&mut cur, 0, bound, g, &mut out);
    out
}

impl RootDatum {
    /// ⟨2ρ, μ⟩.
    pub fn rho2_pairing(&self, mu: &Cocharacter) -> i64 {
        pair_unchecked(&self.rho2, mu)
    }

    /// ⟨λ, 2ρ̂⟩ for a character λ.
    pub fn rho2_hat_pairing(&self, x: &Character) -> i64 {
        pair_unchecked(x, &self.rho2_hat)
    }
}

impl fmt::Display for RootDatum {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let join = |v: Vec<String>| v.join(", ");
        writeln!(f, "g = {}", self.g)?;
        writeln!(f, "simple roots: {}", join(self.simple_roots.iter().map(|x| x.to_string()).collect()))?;
        writeln!(f, "simple coroots: {}", join(self.simple_coroots.iter().map(|x| x.to_string()).collect()))?;
        writeln!(f, "positive roots: {}", join(self.positive_roots.iter().map(|x| x.to_string()).collect()))?;
        writeln!(f, "positive coroots: {}", join(self.positive_coroots.iter().map(|x| x.to_string()).collect()))?;
        writeln!(f, "2rho: {}", self.rho2)?;
        write!(f, "2rho_hat: {}", self.rho2_hat)
    }
}

/// Parses a comma-separated coordinate list such as `1,1,2`.
pub fn parse_coords(s: &str) -> Option<Vec<i64>> {
    s.split(',').map(|t| t.trim().parse().ok()).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{det_q, rational_matrix};
    use num_traits::One;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn co(c: &[i64]) -> Cocharacter {
        Cocharacter::from_coeffs(c).unwrap()
    }

    fn ch(c: &[i64]) -> Character {
        Character::from_coeffs(c).unwrap()
    }

    #[test]
    fn degree_one_datum() {
        let rd = build_root_datum(1).unwrap();
        assert_eq!(rd.simple_roots, vec![ch(&[2, -1])]);
        assert_eq!(rd.simple_coroots, vec![co(&[1, 0])]);
        assert_eq!(rd.positive_roots, vec![ch(&[2, -1])]);
        assert_eq!(rd.rho2, ch(&[2, -1]));
    }

    #[test]
    fn degree_two_coroots() {
        let rd = build_root_datum(2).unwrap();
        assert_eq!(rd.simple_coroots, vec![co(&[1, -1, 0]), co(&[0, 1, 0])]);
        let got: BTreeSet<_> = rd.positive_coroots.iter().cloned().collect();
        let want: BTreeSet<_> = [co(&[1, -1, 0]), co(&[0, 1, 0]), co(&[1, 0, 0]), co(&[1, 1, 0])].into_iter().collect();
        assert_eq!(got, want);
        assert_eq!(rd.rho2_hat, co(&[3, 1, 0]));
    }

    #[test]
    fn positive_root_counts() {
        for g in 1..=5 {
            let rd = build_root_datum(g).unwrap();
            assert_eq!(rd.positive_roots.len(), g * g);
            assert_eq!(rd.positive_coroots.len(), g * g);
        }
    }

    #[test]
    fn pairing_examples() {
        assert_eq!(pair(&Character::basis(1, 1), &Cocharacter::basis(1, 1)), Ok(1));
        let rd = build_root_datum(2).unwrap();
        assert_eq!(pair(&rd.simple_roots[1], &rd.simple_coroots[1]), Ok(2));
        assert_eq!(pair(&Character::basis(2, 3), &Cocharacter::basis(2, 1)), Ok(0));
        assert!(pair(&Character::basis(1, 1), &Cocharacter::basis(2, 1)).is_err());
    }

    #[test]
    fn dominance_examples() {
        assert!(is_dominant(&co(&[1, 1, 1])));
        assert!(!is_dominant(&co(&[0, 0, 1])));
        assert!(is_dominant(&co(&[1, 2])));
        assert_eq!(dominance_compare(&co(&[2, 2]), &co(&[1, 2])).unwrap(), Some(vec![1]));
        assert_eq!(dominance_compare(&co(&[1, 1, 1]), &co(&[1, 1, 1])).unwrap(), Some(vec![0, 0]));
        assert_eq!(dominance_compare(&co(&[1, 1, 1]), &co(&[1, 1, 0])).unwrap(), None);
        assert!(matches!(dominance_compare(&co(&[0, 0, 1]), &co(&[1, 1, 1])), Err(RootDatumError::NotDominant(_))));
    }

    #[test]
    fn eta_examples() {
        let rd = build_root_datum(2).unwrap();
        for b in &rd.positive_coroots {
            assert_eq!(eta_exponent(b), 0);
        }
        assert_eq!(eta_exponent(&co(&[1, 1, 1])), 1);
        assert_eq!(det_exponent(&co(&[1, 1, 1])), 2);
        assert_eq!(eta_exponent(&co(&[1, 1, 2])), 2);
        assert_eq!(det_exponent(&co(&[1, 1, 2])), 4);
    }

    #[test]
    fn cocharacter_matrices() {
        let m = cochar_matrix(&co(&[1, 1]), 2);
        assert_eq!(m, rational_matrix(&[vec![2, 0], vec![0, 1]]));
        assert_eq!(similitude_factor(&m).unwrap(), BigRational::from_integer(2.into()));
        let m = cochar_matrix(&co(&[0, 0, 1]), 3);
        let diag: Vec<_> = (0..4).map(|i| m[i][i].clone()).collect();
        assert_eq!(diag, rational_matrix(&[vec![1, 1, 3, 3]])[0]);
        assert_eq!(similitude_factor(&m).unwrap(), BigRational::from_integer(3.into()));
        let j = rational_matrix(&symplectic_form(2));
        assert_eq!(similitude_factor(&j).unwrap(), BigRational::one());
        let bad = rational_matrix(&[vec![1, 1], vec![0, 1]]);
        assert!(similitude_factor(&bad).is_ok()); // SL_2 = Sp_2
        let bad = rational_matrix(&[vec![1, 0, 0, 0], vec![0, 2, 0, 0], vec![0, 0, 1, 0], vec![0, 0, 0, 1]]);
        assert_eq!(similitude_factor(&bad), Err(RootDatumError::NotSimilitude));
    }

    #[test]
    fn cochar_matrix_similitude_and_det() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..100 {
            let g = rng.gen_range(1..=3);
            let lam = Cocharacter::new(g, (0..=g).map(|_| rng.gen_range(-3..=3)).collect()).unwrap();
            let ell = [2, 3, 5][rng.gen_range(0..3)];
            let m = cochar_matrix(&lam, ell);
            assert_eq!(similitude_factor(&m).unwrap(), rational_pow(ell, eta_exponent(&lam)));
            assert_eq!(det_q(&m), rational_pow(ell, det_exponent(&lam)));
        }
    }

    #[test]
    fn weyl_group_orders_and_invariance() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for (g, order) in [(1, 2), (2, 8), (3, 48), (4, 384)] {
            let rd = build_root_datum(g).unwrap();
            let w = weyl_group(&rd).unwrap();
            assert_eq!(w.len(), order);
            for _ in 0..50 {
                let x = Character::new(g, (0..=g).map(|_| rng.gen_range(-4..=4)).collect()).unwrap();
                let y = Cocharacter::new(g, (0..=g).map(|_| rng.gen_range(-4..=4)).collect()).unwrap();
                let e = &w[rng.gen_range(0..w.len())];
                assert_eq!(pair(&e.act_char(&x), &e.act_cochar(&y)), pair(&x, &y));
            }
        }
        assert!(matches!(weyl_group(&build_root_datum(5).unwrap()), Err(RootDatumError::SizeGuard { .. })));
    }

    #[test]
    fn dominance_is_a_partial_order() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for g in 1..=3 {
            let ball = dominant_ball(g, 2);
            for _ in 0..200 {
                let a = &ball[rng.gen_range(0..ball.len())];
                let b = &ball[rng.gen_range(0..ball.len())];
                let c = &ball[rng.gen_range(0..ball.len())];
                let le = |x: &Cocharacter, y: &Cocharacter| dominance_compare(y, x).unwrap().is_some();
                assert!(le(a, a));
                if le(a, b) && le(b, a) {
                    assert_eq!(a, b);
                }
                if le(a, b) && le(b, c) {
                    assert!(le(a, c));
                }
            }
        }
    }

    #[test]
    fn lower_sets() {
        let rd = build_root_datum(1).unwrap();
        assert_eq!(dominant_lower_set(&rd, &co(&[1, 1])).unwrap(), vec![co(&[1, 1])]);
        assert_eq!(dominant_lower_set(&rd, &co(&[2, 2])).unwrap(), vec![co(&[2, 2]), co(&[1, 2])]);
        let rd = build_root_datum(2).unwrap();
        assert_eq!(dominant_lower_set(&rd, &co(&[1, 1, 1])).unwrap(), vec![co(&[1, 1, 1])]);
        let ls = dominant_lower_set(&rd, &co(&[2, 2, 2])).unwrap();
        for mu in &ls {
            assert!(dominance_compare(&co(&[2, 2, 2]), mu).unwrap().is_some());
            assert_eq!(eta_exponent(mu), 2);
        }
        assert!(ls.len() > 1);
    }

    #[test]
    fn dominant_representatives() {
        assert_eq!(dominant_representative(&[0, 0], 1), co(&[1, 1, 1]));
        assert_eq!(dominant_representative(&[0, 1], 2), co(&[2, 1, 2]));
        assert_eq!(dominant_representative(&[2, 0], 2), co(&[2, 2, 2]));
        let rd = build_root_datum(2).unwrap();
        assert_eq!(dominant_conjugate(&rd, &co(&[0, 0, 1])), co(&[1, 1, 1]));
    }

    #[test]
    fn doubled_rho_pairing_parity() {
        let rd = build_root_datum(2).unwrap();
        // ⟨2ρ, μ⟩ = 4a_1 + 2a_2 − 3a_3 is even exactly when a_3 is even.
        for mu in dominant_ball(2, 2) {
            let v = rd.rho2_pairing(&mu);
            assert_eq!(v % 2 == 0, eta_exponent(&mu) % 2 == 0);
        }
    }
}
