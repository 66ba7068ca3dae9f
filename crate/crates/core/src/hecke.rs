//! Hecke operators on q-expansions through explicit right-coset
//! representatives M = [[η D^{-T}, B], [0, D]] of double cosets K λ(ℓ) K,
//! K = GSp_2g(Z_ℓ), and the commutation of Hecke operators with θ_BN.
//!
//! Representatives are enumerated as (D, X = B D^{-1}) with D in Hermite normal
//! form and X symmetric modulo integral matrices, filtered by elementary
//! divisors, then checked pairwise for distinct right cosets. Inside its coset
//! each D is then Lagrange-reduced, which keeps the input precision needed
//! per output index small.

use std::collections::BTreeMap;
use std::fmt;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::Zero;
use thiserror::Error;

use crate::exactring::poly::{inv_mod_p, rem_monic_q};
use crate::exactring::{cyclotomic_poly, reduce_rational, RingDescriptor, RingError, RingValue};
use crate::linalg::{adjugate_int, is_psd_int, mat_mul_int, transpose, IntMatrix};
use crate::qexp::{index_validate, FourierIndex, QExpError, QExpansion};
use crate::rootdatum::{eta_exponent, is_dominant, Cocharacter, RootDatumError};
use crate::theta::{theta_bn_direct, ThetaError};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum HeckeError {
    #[error("coset enumeration is limited to g <= {MAX_G} and r <= {MAX_R} (got g = {g}, r = {r})")]
    SizeGuard { g: usize, r: i64 },
    #[error("{0} does not give an integral matrix λ(ℓ)")]
    NotIntegral(Cocharacter),
    #[error("{0} is not a prime")]
    NotPrime(u64),
    #[error("input precision {have} is too small; need trace bound {need}")]
    Precision { need: i64, have: i64 },
    #[error("coefficient at {0} did not collapse to the base ring")]
    CoefficientNotRational(String),
    #[error("phase exponent is not integral at {0}")]
    PhaseNotIntegral(String),
    #[error("unsupported input: {0}")]
    Unsupported(String),
    #[error("hypothesis violated: {0}")]
    Hypothesis(String),
    #[error("input expansion is zero on the usable range")]
    ZeroInput,
    #[error("unknown Hecke operator `{0}`")]
    UnknownOperator(String),
    #[error(transparent)]
    RootDatum(#[from] RootDatumError),
    #[error(transparent)]
    QExp(#[from] QExpError),
    #[error(transparent)]
    Ring(#[from] RingError),
    #[error(transparent)]
    Theta(#[from] ThetaError),
}

pub type HeckeResult<T> = Result<T, HeckeError>;

pub const MAX_G: usize = 2;
pub const MAX_R: i64 = 2;

fn ipow(b: i64, e: u32) -> i64 {
    b.checked_pow(e).expect("power fits in i64")
}

fn rpow(b: i64, e: i64) -> BigRational {
    let base = BigRational::from_integer(BigInt::from(b));
    if e >= 0 {
        num_traits::pow(base, e as usize)
    } else {
        num_traits::pow(base.recip(), (-e) as usize)
    }
}

/// A right-coset representative [[η D^{-T}, B], [0, D]] with η = ℓ^r.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CosetRep {
    g: usize,
    ell: u64,
    r: u32,
    d: IntMatrix,
    b: IntMatrix,
}

impl CosetRep {
    pub fn new(ell: u64, r: u32, d: IntMatrix, b: IntMatrix) -> HeckeResult<Self> {
        let g = d.len();
        let rep = Self { g, ell, r, d, b };
        let eta = rep.eta();
        let adj = adjugate_int(&rep.d);
        let det = rep.det_d();
        if det <= 0 || adj.iter().flatten().any(|&x| (eta * x) % det != 0) {
            return Err(HeckeError::Unsupported("η D^{-1} is not integral".into()));
        }
        let x = mat_mul_int(&rep.b, &adj);
        if x != transpose(&x) {
            return Err(HeckeError::Unsupported("B D^{-1} is not symmetric".into()));
        }
        Ok(rep)
    }

    pub fn g(&self) -> usize {
        self.g
    }
    pub fn ell(&self) -> u64 {
        self.ell
    }
    pub fn r(&self) -> u32 {
        self.r
    }
    pub fn d(&self) -> &IntMatrix {
        &self.d
    }
    pub fn b(&self) -> &IntMatrix {
        &self.b
    }

    pub fn eta(&self) -> i64 {
        ipow(self.ell as i64, self.r)
    }

    pub fn det_d(&self) -> i64 {
        crate::linalg::det_int(&self.d).try_into().expect("small determinant")
    }

    /// A = η D^{-T}.
    pub fn a_block(&self) -> IntMatrix {
        let det = self.det_d();
        let eta = self.eta();
        transpose(&adjugate_int(&self.d)).iter().map(|r| r.iter().map(|&x| eta * x / det).collect()).collect()
    }

    /// The full 2g×2g matrix.
    pub fn matrix(&self) -> IntMatrix {
        let g = self.g;
        let a = self.a_block();
        let mut m = vec![vec![0i64; 2 * g]; 2 * g];
        for i in 0..g {
            for j in 0..g {
                m[i][j] = a[i][j];
                m[i][g + j] = self.b[i][j];
                m[g + i][g + j] = self.d[i][j];
            }
        }
        m
    }

    /// X = B D^{-1}.
    pub fn x_matrix(&self) -> Vec<Vec<BigRational>> {
        let det = BigInt::from(self.det_d());
        mat_mul_int(&self.b, &adjugate_int(&self.d))
            .iter()
            .map(|r| r.iter().map(|&x| BigRational::new(x.into(), det.clone())).collect())
            .collect()
    }

    /// Smallest c ≥ 1 with c η I − DᵀD positive semidefinite, so that every
    /// preimage of n′ has Tr(n) ≤ c Tr(n′).
    pub fn precision_factor(&self) -> i64 {
        let dtd = mat_mul_int(&transpose(&self.d), &self.d);
        let eta = self.eta();
        let mut c = 1;
        loop {
            let m: IntMatrix = (0..self.g)
                .map(|i| (0..self.g).map(|j| if i == j { c * eta } else { 0 } - dtd[i][j]).collect())
                .collect();
            if is_psd_int(&m) {
                return c;
            }
            c += 1;
        }
    }

    /// η^{kg − g(g+1)/2} det(D)^{−k}.
    pub fn prefactor(&self, k: i64) -> BigRational {
        let g = self.g as i64;
        rpow(self.eta(), k * g - g * (g + 1) / 2) * rpow(self.det_d(), -k)
    }
}

impl fmt::Display for CosetRep {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let rows: Vec<String> =
            self.matrix().iter().map(|r| r.iter().map(i64::to_string).collect::<Vec<_>>().join(" ")).collect();
        write!(f, "{}", rows.join(" ; "))
    }
}

/// Valuations of the elementary divisors of an integer matrix at ℓ, computed
/// by Smith reduction over Z/ℓ^cap; valuations ≥ cap are reported as cap.
pub fn elementary_divisor_valuations(m: &IntMatrix, ell: u64, cap: u32) -> Vec<u32> {
    let modulus = (ell as i128).pow(cap);
    let n = m.len();
    let cols = m.first().map_or(0, |r| r.len());
    let mut a: Vec<Vec<i128>> =
        m.iter().map(|r| r.iter().map(|&x| (x as i128).rem_euclid(modulus)).collect()).collect();
    let val = |x: i128| -> u32 {
        if x == 0 {
            return cap;
        }
        let mut v = 0;
        let mut x = x;
        while x % ell as i128 == 0 && v < cap {
            x /= ell as i128;
            v += 1;
        }
        v
    };
    let mut out = Vec::new();
    for k in 0..n.min(cols) {
        let mut best = (cap, k, k);
        for i in k..n {
            for j in k..cols {
                let v = val(a[i][j]);
                if v < best.0 {
                    best = (v, i, j);
                }
            }
        }
        let (v, bi, bj) = best;
        if v == cap {
            out.extend(std::iter::repeat_n(cap, n.min(cols) - k));
            break;
        }
        a.swap(k, bi);
        for row in a.iter_mut() {
            row.swap(k, bj);
        }
        let scale = (ell as i128).pow(v);
        let unit = a[k][k] / scale;
        let unit_inv = inv_mod_p(unit.rem_euclid(modulus) as u64, modulus as u64).expect("unit") as i128;
        for i in k + 1..n {
            let f = (a[i][k] / scale % modulus) * unit_inv % modulus;
            if f == 0 {
                continue;
            }
            for j in k..cols {
                a[i][j] = (a[i][j] - f * a[k][j]).rem_euclid(modulus);
            }
        }
        for j in k + 1..cols {
            let f = (a[k][j] / scale % modulus) * unit_inv % modulus;
            if f == 0 {
                continue;
            }
            for row in a.iter_mut() {
                row[j] = (row[j] - f * row[k]).rem_euclid(modulus);
            }
        }
        out.push(v);
    }
    out.sort_unstable();
    out
}

/// Upper triangular D with diagonal ℓ^{e_i}, above-diagonal entries reduced
/// modulo the diagonal entry of their column, and ℓ^r D^{-1} integral.
fn hermite_forms(g: usize, ell: i64, r: u32) -> Vec<IntMatrix> {
    let eta = ipow(ell, r);
    let mut diags: Vec<Vec<i64>> = vec![vec![]];
    for _ in 0..g {
        diags =
            diags.into_iter().flat_map(|d| (0..=r).map(move |e| [d.clone(), vec![ipow(ell, e)]].concat())).collect();
    }
    let mut out = Vec::new();
    for diag in diags {
        let slots: Vec<(usize, usize)> = (0..g).flat_map(|i| (i + 1..g).map(move |j| (i, j))).collect();
        let total: usize = slots.iter().map(|&(_, j)| diag[j] as usize).product();
        for mut code in 0..total {
            let mut d = vec![vec![0i64; g]; g];
            for i in 0..g {
                d[i][i] = diag[i];
            }
            for &(i, j) in &slots {
                d[i][j] = (code % diag[j] as usize) as i64;
                code /= diag[j] as usize;
            }
            let det: i64 = diag.iter().product();
            if adjugate_int(&d).iter().flatten().all(|&x| (eta * x) % det == 0) {
                out.push(d);
            }
        }
    }
    out
}

/// Lagrange reduction of the rows of D by a determinant-one U; returns
/// (U D, U^{-T} B). Only rank 2 is reduced; rank 1 is already reduced.
fn reduce_rows(d: &IntMatrix, b: &IntMatrix) -> (IntMatrix, IntMatrix) {
    if d.len() != 2 {
        return (d.clone(), b.clone());
    }
    let dot = |x: &[i64], y: &[i64]| x.iter().zip(y).map(|(a, b)| a * b).sum::<i64>();
    let (mut r1, mut r2) = (d[0].clone(), d[1].clone());
    let (mut u1, mut u2) = (vec![1i64, 0], vec![0i64, 1]);
    loop {
        if dot(&r2, &r2) < dot(&r1, &r1) {
            let neg2: Vec<i64> = r2.iter().map(|x| -x).collect();
            let negu2: Vec<i64> = u2.iter().map(|x| -x).collect();
            (r1, r2) = (neg2, r1);
            (u1, u2) = (negu2, u1);
        }
        let n1 = dot(&r1, &r1);
        let num = dot(&r1, &r2);
        // nearest integer to num / n1
        let mu = (2 * num + n1).div_euclid(2 * n1);
        if mu == 0 {
            break;
        }
        for i in 0..2 {
            r2[i] -= mu * r1[i];
            u2[i] -= mu * u1[i];
        }
        if dot(&r2, &r2) >= dot(&r1, &r1) {
            break;
        }
    }
    let u = vec![u1, u2];
    // det U = 1, so U^{-T} = adj(U)^T.
    let u_inv_t = transpose(&adjugate_int(&u));
    (vec![r1, r2], mat_mul_int(&u_inv_t, b))
}

/// M′ M^{-1} ∈ GSp_2g(Z_ℓ) for two matrices of the same similitude η:
/// M^{-1} = J Mᵀ J^{-1} / η, so the test is integrality of M′ J Mᵀ Jᵀ / η.
pub fn same_right_coset(m1: &IntMatrix, m2: &IntMatrix, eta: i64) -> bool {
    let n = m1.len();
    let g = n / 2;
    // (J Mᵀ Jᵀ)_{ij}: J e_j = ... computed through index bookkeeping.
    let j_of = |i: usize, k: usize| -> i64 {
        if k == i + g && i < g {
            1
        } else if i >= g && k + g == i {
            -1
        } else {
            0
        }
    };
    let m2t = transpose(m2);
    let mut jm = vec![vec![0i64; n]; n];
    for i in 0..n {
        for k in 0..n {
            let jik = j_of(i, k);
            if jik != 0 {
                for c in 0..n {
                    jm[i][c] += jik * m2t[k][c];
                }
            }
        }
    }
    let mut jmjt = vec![vec![0i64; n]; n];
    for i in 0..n {
        for c in 0..n {
            for k in 0..n {
                let jck = j_of(c, k);
                if jck != 0 {
                    jmjt[i][c] += jm[i][k] * jck;
                }
            }
        }
    }
    mat_mul_int(m1, &jmjt).iter().flatten().all(|&x| x % eta == 0)
}

fn check_ell(ell: u64) -> HeckeResult<()> {
    if !crate::exactring::is_prime(ell) {
        return Err(HeckeError::NotPrime(ell));
    }
    Ok(())
}

/// Every right coset K M with M = [[η D^{-T}, B], [0, D]] integral and
/// η = ℓ^r, without filtering by double coset.
pub fn all_upper_cosets(g: usize, ell: u64, r: u32) -> HeckeResult<Vec<CosetRep>> {
    check_ell(ell)?;
    if g == 0 || g > MAX_G || r as i64 > MAX_R {
        return Err(HeckeError::SizeGuard { g, r: r as i64 });
    }
    let l = ell as i64;
    let eta = ipow(l, r);
    let slots: Vec<(usize, usize)> = (0..g).flat_map(|i| (i..g).map(move |j| (i, j))).collect();
    let mut out = Vec::new();
    for d in hermite_forms(g, l, r) {
        let total = (eta as usize).pow(slots.len() as u32);
        for mut code in 0..total {
            // X = K / η with K symmetric, entries in [0, η).
            let mut kmat = vec![vec![0i64; g]; g];
            for &(i, j) in &slots {
                let v = (code % eta as usize) as i64;
                code /= eta as usize;
                kmat[i][j] = v;
                kmat[j][i] = v;
            }
            let kd = mat_mul_int(&kmat, &d);
            if kd.iter().flatten().any(|&x| x % eta != 0) {
                continue;
            }
            let b: IntMatrix = kd.iter().map(|r| r.iter().map(|&x| x / eta).collect()).collect();
            let (d2, b2) = reduce_rows(&d, &b);
            out.push(CosetRep::new(ell, r, d2, b2)?);
        }
    }
    Ok(out)
}

/// Right-coset representatives of K λ(ℓ) K.
pub fn coset_reps(g: usize, ell: u64, lam: &Cocharacter) -> HeckeResult<Vec<CosetRep>> {
    if lam.g() != g {
        return Err(RootDatumError::DegreeMismatch(lam.g(), g).into());
    }
    if !is_dominant(lam) {
        return Err(RootDatumError::NotDominant(lam.clone()).into());
    }
    let r = eta_exponent(lam);
    if g > MAX_G || !(0..=MAX_R).contains(&r) {
        return Err(HeckeError::SizeGuard { g, r });
    }
    let a = lam.coeffs();
    if a[..g].iter().any(|&x| x < 0 || x > r) {
        return Err(HeckeError::NotIntegral(lam.clone()));
    }
    let mut target: Vec<u32> = a[..g].iter().flat_map(|&x| [x as u32, (r - x) as u32]).collect();
    target.sort_unstable();
    let cap = r as u32 + 1;
    let eta = ipow(ell as i64, r as u32);
    let mut reps: Vec<CosetRep> = Vec::new();
    let mut matrices: Vec<IntMatrix> = Vec::new();
    for rep in all_upper_cosets(g, ell, r as u32)? {
        let m = rep.matrix();
        if elementary_divisor_valuations(&m, ell, cap) != target {
            continue;
        }
        if matrices.iter().any(|prev| same_right_coset(&m, prev, eta)) {
            continue;
        }
        matrices.push(m);
        reps.push(rep);
    }
    Ok(reps)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum HeckeName {
    /// T(ℓ), λ = (1, …, 1; 1).
    T,
    /// T_i(ℓ²), λ = (2^{g−i}, 1^i; 2).
    Ti(usize),
    /// T(ℓ²) = Σ_i T_i(ℓ²).
    TSquare,
    Generic,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HeckeOperator {
    g: usize,
    ell: u64,
    name: HeckeName,
    lambda: Cocharacter,
    reps: Vec<CosetRep>,
}

impl HeckeOperator {
    pub fn t(g: usize, ell: u64) -> HeckeResult<Self> {
        let lambda = Cocharacter::new(g, vec![1; g + 1])?;
        let reps = coset_reps(g, ell, &lambda)?;
        Ok(Self { g, ell, name: HeckeName::T, lambda, reps })
    }

    pub fn t_i(g: usize, i: usize, ell: u64) -> HeckeResult<Self> {
        if i > g {
            return Err(HeckeError::UnknownOperator(format!("T_{i} at g = {g}")));
        }
        let mut coeffs = vec![2; g - i];
        coeffs.extend(vec![1; i]);
        coeffs.push(2);
        let lambda = Cocharacter::new(g, coeffs)?;
        let reps = coset_reps(g, ell, &lambda)?;
        Ok(Self { g, ell, name: HeckeName::Ti(i), lambda, reps })
    }

    /// Σ_{i=0}^{g} T_i(ℓ²); `lambda` records (2, …, 2; 2).
    pub fn t_square(g: usize, ell: u64) -> HeckeResult<Self> {
        let mut reps = Vec::new();
        for i in 0..=g {
            reps.extend(Self::t_i(g, i, ell)?.reps);
        }
        let lambda = Cocharacter::new(g, vec![2; g + 1])?;
        Ok(Self { g, ell, name: HeckeName::TSquare, lambda, reps })
    }

    pub fn generic(g: usize, ell: u64, lambda: Cocharacter) -> HeckeResult<Self> {
        let reps = coset_reps(g, ell, &lambda)?;
        Ok(Self { g, ell, name: HeckeName::Generic, lambda, reps })
    }

    /// Parses `T`, `T(ell)`, `T_i`, `T_i(ell^2)`, `T(ell^2)` or `lam:a1,…,ag,r`.
    pub fn parse(g: usize, ell: u64, text: &str) -> HeckeResult<Self> {
        let s: String = text.chars().filter(|c| !c.is_whitespace()).collect();
        let unknown = || HeckeError::UnknownOperator(text.to_string());
        let ell_s = ell.to_string();
        if let Some(rest) = s.strip_prefix("lam:") {
            let coeffs = crate::rootdatum::parse_coords(rest).ok_or_else(unknown)?;
            return Self::generic(g, ell, Cocharacter::new(g, coeffs)?);
        }
        let square_args = ["(ell^2)".to_string(), format!("({ell_s}^2)"), format!("({})", ell * ell)];
        if s == "T" || s == "T(ell)" || s == format!("T({ell_s})") {
            return Self::t(g, ell);
        }
        if square_args.iter().any(|a| s == format!("T{a}")) {
            return Self::t_square(g, ell);
        }
        if let Some(rest) = s.strip_prefix("T_") {
            let (idx, tail) = rest.split_at(rest.find('(').unwrap_or(rest.len()));
            if !tail.is_empty() && !square_args.iter().any(|a| a == tail) {
                return Err(unknown());
            }
            let i: usize = idx.parse().map_err(|_| unknown())?;
            return Self::t_i(g, i, ell);
        }
        Err(unknown())
    }

    pub fn g(&self) -> usize {
        self.g
    }
    pub fn ell(&self) -> u64 {
        self.ell
    }
    pub fn name(&self) -> &HeckeName {
        &self.name
    }
    pub fn lambda(&self) -> &Cocharacter {
        &self.lambda
    }
    pub fn reps(&self) -> &[CosetRep] {
        &self.reps
    }

    /// η exponent r shared by every representative.
    pub fn eta_exponent(&self) -> i64 {
        eta_exponent(&self.lambda)
    }

    /// Input trace bound needed per unit of output trace bound.
    pub fn precision_factor(&self) -> i64 {
        self.reps.iter().map(CosetRep::precision_factor).max().unwrap_or(1)
    }
}

impl fmt::Display for HeckeOperator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.name {
            HeckeName::T => write!(f, "T({})", self.ell),
            HeckeName::Ti(i) => write!(f, "T_{i}({}^2)", self.ell),
            HeckeName::TSquare => write!(f, "T({}^2)", self.ell),
            HeckeName::Generic => write!(f, "K {}({}) K", self.lambda, self.ell),
        }
    }
}

/// The rational lift of a rational or prime-field expansion (residues in [0, p)).
fn lift(f: &QExpansion) -> HeckeResult<BTreeMap<FourierIndex, BigRational>> {
    let mut out = BTreeMap::new();
    for (n, c) in f.coeffs() {
        let q = match c {
            RingValue::Rational(q) => q.clone(),
            RingValue::Mod { r, .. } => BigRational::from_integer(BigInt::from(*r)),
            other => return Err(HeckeError::Unsupported(format!("coefficients in {}", other.descriptor()))),
        };
        out.insert(n.clone(), q);
    }
    Ok(out)
}

struct Prepared {
    adj: Vec<Vec<i128>>,
    det: i128,
    eta: i128,
    x_num: Vec<Vec<i128>>,
    pref: BigRational,
}

impl Prepared {
    fn new(rep: &CosetRep, k: i64) -> Self {
        let adj = adjugate_int(&rep.d);
        let x_num = mat_mul_int(&rep.b, &adj);
        let to128 = |m: &IntMatrix| m.iter().map(|r| r.iter().map(|&x| x as i128).collect()).collect();
        Self {
            adj: to128(&adj),
            det: rep.det_d() as i128,
            eta: rep.eta() as i128,
            x_num: to128(&x_num),
            pref: rep.prefactor(k),
        }
    }

    /// 2n′ = η D^{-1} (2n) D^{-T}, when that is a valid doubled index.
    fn image(&self, doubled: &[Vec<i64>]) -> Option<FourierIndex> {
        let g = doubled.len();
        let mut tmp = vec![vec![0i128; g]; g];
        for i in 0..g {
            for j in 0..g {
                tmp[i][j] = (0..g).map(|l| self.adj[i][l] * doubled[l][j] as i128).sum();
            }
        }
        let den = self.det * self.det;
        let mut out = vec![vec![0i64; g]; g];
        for i in 0..g {
            for j in 0..g {
                let v: i128 = self.eta * (0..g).map(|l| tmp[i][l] * self.adj[j][l]).sum::<i128>();
                if v % den != 0 {
                    return None;
                }
                out[i][j] = (v / den) as i64;
            }
        }
        index_validate(out).ok()
    }

    /// ℓ^{rg} Tr(n B D^{-1}) modulo `order`.
    fn phase(&self, doubled: &[Vec<i64>], det_m: i128, order: i128) -> Option<u64> {
        let g = doubled.len();
        let s: i128 = (0..g)
            .flat_map(|i| (0..g).map(move |j| (i, j)))
            .map(|(i, j)| doubled[i][j] as i128 * self.x_num[j][i])
            .sum();
        let num = det_m * s;
        let den = 2 * self.det;
        if num % den != 0 {
            return None;
        }
        Some((num / den).rem_euclid(order) as u64)
    }
}

type PhaseTable = BTreeMap<FourierIndex, BTreeMap<u64, BigRational>>;

fn accumulate(
    rep: &CosetRep,
    k: i64,
    f: &BTreeMap<FourierIndex, BigRational>,
    tau_out: i64,
    order: u64,
    acc: &mut PhaseTable,
) -> HeckeResult<()> {
    let prep = Prepared::new(rep, k);
    let det_m = (rep.eta() as i128).pow(rep.g as u32);
    for (n, a) in f {
        let Some(n2) = prep.image(n.doubled()) else {
            continue;
        };
        if n2.trace() > tau_out {
            continue;
        }
        let t =
            prep.phase(n.doubled(), det_m, order as i128).ok_or_else(|| HeckeError::PhaseNotIntegral(n.to_string()))?;
        let slot = acc.entry(n2).or_default().entry(t).or_insert_with(BigRational::zero);
        *slot += &prep.pref * a;
    }
    Ok(())
}

fn check_precision(factor: i64, f: &QExpansion, tau_out: i64) -> HeckeResult<()> {
    let need = factor * tau_out;
    if f.tau() < need {
        return Err(HeckeError::Precision { need, have: f.tau() });
    }
    Ok(())
}

fn check_level(ell: u64, f: &QExpansion) -> HeckeResult<()> {
    if f.level() % ell == 0 {
        return Err(HeckeError::Hypothesis(format!("ℓ ∤ pN fails: ℓ = {ell} divides the level {}", f.level())));
    }
    if f.ring().characteristic() == ell {
        return Err(HeckeError::Hypothesis(format!("ℓ ∤ pN fails: ℓ = p = {ell}")));
    }
    Ok(())
}

fn phase_order(rep: &CosetRep, level: u64) -> u64 {
    level * (rep.eta() as u64).pow(rep.g as u32)
}

/// M|_k f for a single representative, with coefficients in Q(ζ) for ζ of
/// order N ℓ^{rg}. Prime-field inputs are lifted to Z first.
pub fn slash_block_upper(rep: &CosetRep, k: i64, f: &QExpansion, tau_out: i64) -> HeckeResult<QExpansion> {
    if rep.g != f.g() {
        return Err(QExpError::Mismatch(format!("degree {} vs {}", rep.g, f.g())).into());
    }
    check_level(rep.ell, f)?;
    check_precision(rep.precision_factor(), f, tau_out)?;
    let order = phase_order(rep, f.level());
    let mut acc = PhaseTable::new();
    accumulate(rep, k, &lift(f)?, tau_out, order, &mut acc)?;
    let mut out = QExpansion::new(f.g(), f.level(), Some(k), RingDescriptor::CyclotomicRational(order), tau_out);
    for (n, phases) in acc {
        let mut dense = vec![BigRational::zero(); order as usize];
        for (t, c) in phases {
            dense[t as usize] += c;
        }
        out.set(n, RingValue::cyclotomic(order, &dense));
    }
    Ok(out)
}

/// Σ over representatives of M_i|_k f. The phase sums must collapse to the
/// base ring; prime-field inputs go through lift, apply, reduce.
pub fn hecke_apply(op: &HeckeOperator, k: i64, f: &QExpansion, tau_out: i64) -> HeckeResult<QExpansion> {
    if op.g != f.g() {
        return Err(QExpError::Mismatch(format!("operator degree {} vs series degree {}", op.g, f.g())).into());
    }
    check_level(op.ell, f)?;
    check_precision(op.precision_factor(), f, tau_out)?;
    let lifted = lift(f)?;
    let order = f.level() * (ipow(op.ell as i64, op.eta_exponent() as u32) as u64).pow(op.g as u32);
    let mut acc = PhaseTable::new();
    for rep in &op.reps {
        accumulate(rep, k, &lifted, tau_out, order, &mut acc)?;
    }
    let phi = cyclotomic_poly(order);
    let ring = f.ring().clone();
    let mut out = QExpansion::new(f.g(), f.level(), Some(k), ring.clone(), tau_out);
    for (n, phases) in acc {
        let mut dense = vec![BigRational::zero(); order as usize];
        for (t, c) in phases {
            dense[t as usize] += c;
        }
        let rem = rem_monic_q(&dense, &phi);
        if rem.len() > 1 {
            return Err(HeckeError::CoefficientNotRational(n.to_string()));
        }
        let q = rem.into_iter().next().unwrap_or_else(BigRational::zero);
        let v = match &ring {
            RingDescriptor::PrimeField(p) => RingValue::Mod { p: *p, r: reduce_rational(&q, *p)? },
            _ => RingValue::Rational(q),
        };
        out.set(n, v);
    }
    Ok(out)
}

/// The eigenvalue of `op` on `f` at the precision `f` supports, or `None`
/// when the coefficient ratios disagree.
pub fn eigenvalue_of(op: &HeckeOperator, k: i64, f: &QExpansion) -> HeckeResult<Option<RingValue>> {
    let tau_out = f.tau() / op.precision_factor();
    let usable: Vec<(&FourierIndex, &RingValue)> = f.coeffs().iter().filter(|(n, _)| n.trace() <= tau_out).collect();
    let Some((_, first)) = usable.first() else {
        return Err(HeckeError::ZeroInput);
    };
    let tf = hecke_apply(op, k, f, tau_out)?;
    let (n0, _) = usable[0];
    let lambda = &tf.coefficient(n0) * &first.inverse().ok_or(HeckeError::ZeroInput)?;
    for n in crate::qexp::indices_up_to(f.g(), tau_out) {
        if tf.coefficient(&n) != &lambda * &f.coefficient(&n) {
            return Ok(None);
        }
    }
    Ok(Some(lambda))
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CommutationReport {
    pub holds: bool,
    /// ℓ^{g r} = det λ(ℓ).
    pub factor: RingValue,
    pub tau: i64,
    pub first_difference: Option<FourierIndex>,
    pub lhs: QExpansion,
    pub rhs: QExpansion,
}

/// Compares T(θ_BN f) with det(λ(ℓ)) θ_BN(T f) on the common precision.
pub fn commutation_check(f: &QExpansion, k: i64, op: &HeckeOperator) -> HeckeResult<CommutationReport> {
    let p = match f.ring() {
        RingDescriptor::PrimeField(p) => *p,
        other => return Err(HeckeError::Unsupported(format!("commutation check needs a prime field, got {other}"))),
    };
    if op.ell == p || f.level() % op.ell == 0 {
        return Err(HeckeError::Hypothesis(format!("ℓ ∤ pN fails for ℓ = {}, p = {p}, N = {}", op.ell, f.level())));
    }
    let tau = f.tau() / op.precision_factor();
    let theta_f = theta_bn_direct(f, p)?;
    let lhs = hecke_apply(op, k + p as i64 + 1, &theta_f, tau)?;
    let tf = hecke_apply(op, k, f, tau)?;
    let r = op.eta_exponent();
    let factor = f.ring().from_bigint(&BigInt::from(op.ell).pow((op.g as i64 * r) as u32));
    let theta_tf = theta_bn_direct(&tf, p)?;
    let rhs = crate::qexp::qexp_scale(&factor, &theta_tf)?;
    let first_difference =
        crate::qexp::indices_up_to(f.g(), tau).into_iter().find(|n| lhs.coefficient(n) != rhs.coefficient(n));
    Ok(CommutationReport { holds: first_difference.is_none(), factor, tau, first_difference, lhs, rhs })
}

/// Lagrangian subspaces of F_ℓ^{2g}: ordered isotropic bases divided by |GL_g(F_ℓ)|.
pub fn lagrangian_count(g: usize, ell: u64) -> u64 {
    let n = 2 * g;
    let vectors: Vec<Vec<u64>> = (0..ell.pow(n as u32))
        .map(|mut c| {
            (0..n)
                .map(|_| {
                    let d = c % ell;
                    c /= ell;
                    d
                })
                .collect()
        })
        .collect();
    let omega = |x: &[u64], y: &[u64]| -> u64 {
        (0..g).map(|i| (x[i] * y[g + i] + ell * ell - x[g + i] * y[i] % ell) % ell).sum::<u64>() % ell
    };
    let gl: u64 = (0..g as u32).map(|i| ell.pow(g as u32) - ell.pow(i)).product();
    match g {
        1 => (vectors.len() as u64 - 1) / gl,
        2 => {
            let mut bases = 0u64;
            for x in vectors.iter().skip(1) {
                for y in vectors.iter().skip(1) {
                    if omega(x, y) != 0 {
                        continue;
                    }
                    let parallel = (1..ell).any(|c| x.iter().zip(y).all(|(a, b)| (c * a) % ell == *b));
                    if !parallel {
                        bases += 1;
                    }
                }
            }
            bases / gl
        }
        _ => unreachable!(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{det_int, rational_matrix};
    use crate::qexp::{delta, eisenstein, qexp_add, random_expansion};
    use crate::rootdatum::similitude_factor;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn q(n: i64) -> RingValue {
        RingValue::rational(n, 1)
    }

    #[test]
    fn classical_t3_cosets() {
        let op = HeckeOperator::t(1, 3).unwrap();
        let mut got: Vec<IntMatrix> = op.reps().iter().map(CosetRep::matrix).collect();
        got.sort();
        let mut expected = vec![vec![vec![3, 0], vec![0, 1]]];
        expected.extend((0..3).map(|b| vec![vec![1, b], vec![0, 3]]));
        expected.sort();
        assert_eq!(got, expected);
    }

    #[test]
    fn t_ell_counts_match_lagrangian_oracle() {
        for (g, ell) in [(1, 2), (1, 3), (1, 5), (2, 2), (2, 3)] {
            let op = HeckeOperator::t(g, ell).unwrap();
            assert_eq!(op.reps().len() as u64, lagrangian_count(g, ell), "g={g} ell={ell}");
        }
        assert_eq!(lagrangian_count(2, 2), 15);
        assert_eq!(lagrangian_count(2, 3), 40);
    }

    #[test]
    fn representatives_are_similitudes_in_distinct_cosets() {
        for g in 1..=2 {
            for ell in [2u64, 3] {
                for op in [HeckeOperator::t(g, ell).unwrap(), HeckeOperator::t_square(g, ell).unwrap()] {
                    let r = op.eta_exponent();
                    for rep in op.reps() {
                        let m = rational_matrix(&rep.matrix());
                        assert_eq!(
                            similitude_factor(&m).unwrap(),
                            BigRational::from_integer(BigInt::from(ell).pow(r as u32))
                        );
                        let x = rep.x_matrix();
                        assert_eq!(x, transpose(&x));
                        assert!(rep.precision_factor() <= ipow(ell as i64, r as u32), "{rep}");
                    }
                    let ms: Vec<IntMatrix> = op.reps().iter().map(CosetRep::matrix).collect();
                    let eta = ipow(ell as i64, r as u32);
                    for i in 0..ms.len() {
                        for j in 0..i {
                            assert!(!same_right_coset(&ms[i], &ms[j], eta));
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn coset_oracle_recognises_left_multiples() {
        // k M with k = [[U^{-T}, S U], [0, U]] ∈ GSp_4(Z) lies in the same right coset.
        let op = HeckeOperator::t(2, 3).unwrap();
        let u = vec![vec![2, 1], vec![1, 1]];
        let u_inv_t = transpose(&adjugate_int(&u));
        let s = vec![vec![1, -2], vec![-2, 5]];
        let su = mat_mul_int(&s, &u);
        let mut k = vec![vec![0i64; 4]; 4];
        for i in 0..2 {
            for j in 0..2 {
                k[i][j] = u_inv_t[i][j];
                k[i][2 + j] = su[i][j];
                k[2 + i][2 + j] = u[i][j];
            }
        }
        assert_eq!(similitude_factor(&rational_matrix(&k)).unwrap(), BigRational::from_integer(BigInt::from(1)));
        for rep in op.reps() {
            let m = rep.matrix();
            assert!(same_right_coset(&mat_mul_int(&k, &m), &m, 3));
        }
    }

    #[test]
    fn square_operators_partition_all_cosets() {
        for g in 1..=2 {
            for ell in [2u64, 3] {
                let all = all_upper_cosets(g, ell, 2).unwrap().len();
                let parts: Vec<usize> = (0..=g).map(|i| HeckeOperator::t_i(g, i, ell).unwrap().reps().len()).collect();
                assert_eq!(parts.iter().sum::<usize>(), all, "g={g} ell={ell} parts={parts:?}");
                assert_eq!(parts[g], 1, "scalar double coset");
                assert_eq!(all_upper_cosets(g, ell, 1).unwrap().len(), HeckeOperator::t(g, ell).unwrap().reps().len());
            }
        }
        // g=1, T_0(ℓ²): primitive [[a, b], [0, d]] with ad = ℓ², 0 ≤ b < d.
        for ell in [2i64, 3, 5] {
            let mut primitive = 0;
            for (a, d) in [(1, ell * ell), (ell, ell), (ell * ell, 1)] {
                for b in 0..d {
                    if num_integer::gcd(num_integer::gcd(a, b), d) == 1 {
                        primitive += 1;
                    }
                }
            }
            assert_eq!(HeckeOperator::t_i(1, 0, ell as u64).unwrap().reps().len(), primitive);
            assert_eq!(primitive as i64, ell * ell + ell);
        }
    }

    #[test]
    fn elementary_divisors_match_minor_gcds() {
        fn minors_oracle(m: &IntMatrix, ell: u64, cap: u32) -> Vec<u32> {
            let n = m.len();
            let subsets = |k: usize| -> Vec<Vec<usize>> {
                (0u32..1 << n)
                    .filter(|s| s.count_ones() as usize == k)
                    .map(|s| (0..n).filter(|i| s >> i & 1 == 1).collect())
                    .collect()
            };
            let val = |x: &BigInt| -> u32 {
                if x.is_zero() {
                    return u32::MAX;
                }
                let mut v = 0;
                let mut x = x.clone();
                while (&x % BigInt::from(ell)).is_zero() {
                    x /= BigInt::from(ell);
                    v += 1;
                }
                v
            };
            let mut prev = 0u32;
            let mut out = Vec::new();
            for k in 1..=n {
                let mut best = u32::MAX;
                for rows in subsets(k) {
                    for cols in subsets(k) {
                        let sub: IntMatrix = rows.iter().map(|&i| cols.iter().map(|&j| m[i][j]).collect()).collect();
                        best = best.min(val(&det_int(&sub)));
                    }
                }
                if best == u32::MAX {
                    out.extend(std::iter::repeat_n(cap, n - k + 1));
                    break;
                }
                out.push((best - prev).min(cap));
                prev = best;
            }
            out.sort_unstable();
            out
        }
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..300 {
            let n = rng.gen_range(1..=4);
            let ell = [2u64, 3][rng.gen_range(0..2)];
            let m: IntMatrix = (0..n)
                .map(|_| (0..n).map(|_| rng.gen_range(-9..=9) * [1, 1, ell as i64][rng.gen_range(0..3)]).collect())
                .collect();
            assert_eq!(elementary_divisor_valuations(&m, ell, 6), minors_oracle(&m, ell, 6), "{m:?}");
        }
    }

    #[test]
    fn slash_examples() {
        let k = 6;
        let f = QExpansion::from_g1_coeffs(1, Some(k), 8, &(0..=8).map(|m| q(m * m + 1)).collect::<Vec<_>>());
        let rep = CosetRep::new(2, 1, vec![vec![2]], vec![vec![1]]).unwrap();
        let s = slash_block_upper(&rep, k, &f, 4).unwrap();
        assert_eq!(s.ring(), &RingDescriptor::CyclotomicRational(2));
        for m in 0..=4 {
            let expected = BigRational::new(BigInt::from(4 * m * m + 1), BigInt::from(2));
            assert_eq!(s.g1_coefficient(m), RingValue::cyclotomic(2, &[expected]));
        }
        let rep = CosetRep::new(2, 1, vec![vec![1]], vec![vec![0]]).unwrap();
        let s = slash_block_upper(&rep, k, &f, 8).unwrap();
        for m in 0..=8 {
            let expected = if m % 2 == 0 { (m * m / 4 + 1) * 32 } else { 0 };
            assert_eq!(s.g1_coefficient(m), RingValue::cyclotomic(2, &[BigRational::from_integer(expected.into())]));
        }
        let id = CosetRep::new(5, 0, vec![vec![1, 0], vec![0, 1]], vec![vec![0, 0], vec![0, 0]]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let h = random_expansion(&mut rng, 2, &RingDescriptor::Rational, 3, 0.5, None);
        let s = slash_block_upper(&id, 3, &h, 3).unwrap();
        for (n, c) in h.coeffs() {
            assert_eq!(s.coefficient(n).as_rational(), c.as_rational());
        }
        assert_eq!(s.coeffs().len(), h.coeffs().len());
    }

    #[test]
    fn slash_precision_guard() {
        let rep = CosetRep::new(2, 1, vec![vec![2]], vec![vec![0]]).unwrap();
        let f = delta(5);
        assert!(matches!(slash_block_upper(&rep, 12, &f, 3), Err(HeckeError::Precision { need: 6, have: 5 })));
    }

    #[test]
    fn ramanujan_eigenvalues() {
        let d = delta(15);
        let t2 = HeckeOperator::t(1, 2).unwrap();
        let t3 = HeckeOperator::t(1, 3).unwrap();
        let out = hecke_apply(&t2, 12, &d, 7).unwrap();
        assert_eq!(out, crate::qexp::qexp_scale(&q(-24), &d.truncate(7)).unwrap());
        assert_eq!(eigenvalue_of(&t2, 12, &d).unwrap(), Some(q(-24)));
        assert_eq!(eigenvalue_of(&t3, 12, &d).unwrap(), Some(q(252)));
        let zero = QExpansion::new(1, 1, Some(12), RingDescriptor::Rational, 8);
        assert!(hecke_apply(&t2, 12, &zero, 4).unwrap().is_zero());
        assert_eq!(eigenvalue_of(&t2, 12, &zero), Err(HeckeError::ZeroInput));
        let mixed = qexp_add(&eisenstein(4, 15).unwrap(), &d).unwrap();
        assert_eq!(eigenvalue_of(&t2, 12, &mixed).unwrap(), None);
        assert_eq!(eigenvalue_of(&t2, 4, &eisenstein(4, 15).unwrap()).unwrap(), Some(q(9)));
        // q^3 has no image below q^6 under T(2).
        let mut cube = QExpansion::new(1, 1, Some(12), RingDescriptor::Rational, 10);
        cube.set(FourierIndex::scalar(3), q(1));
        assert_eq!(eigenvalue_of(&t2, 12, &cube).unwrap(), Some(q(0)));
    }

    #[test]
    fn square_operators_on_delta() {
        let d = delta(24);
        let t4 = HeckeOperator::t_square(1, 2).unwrap();
        assert_eq!(eigenvalue_of(&t4, 12, &d).unwrap(), Some(q(-1472)));
        assert_eq!(eigenvalue_of(&HeckeOperator::t_i(1, 0, 2).unwrap(), 12, &d).unwrap(), Some(q(-1472 - 1024)));
        assert_eq!(eigenvalue_of(&HeckeOperator::t_i(1, 1, 2).unwrap(), 12, &d).unwrap(), Some(q(1024)));
    }

    #[test]
    fn classical_formula_on_random_series() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        for ell in [2u64, 3, 5] {
            let op = HeckeOperator::t(1, ell).unwrap();
            for _ in 0..5 {
                let k = rng.gen_range(2..14);
                let f = random_expansion(&mut rng, 1, &RingDescriptor::Rational, 20, 0.7, Some(k));
                let tau = 20 / ell as i64;
                let tf = hecke_apply(&op, k, &f, tau).unwrap();
                for m in 0..=tau {
                    let mut expected = f.g1_coefficient(ell as i64 * m).as_rational().unwrap();
                    if m % ell as i64 == 0 {
                        expected += rpow(ell as i64, k - 1) * f.g1_coefficient(m / ell as i64).as_rational().unwrap();
                    }
                    assert_eq!(tf.g1_coefficient(m), RingValue::Rational(expected));
                }
            }
        }
    }

    #[test]
    fn hecke_operators_commute_on_delta() {
        let d = delta(30);
        let t2 = HeckeOperator::t(1, 2).unwrap();
        let t3 = HeckeOperator::t(1, 3).unwrap();
        let a = hecke_apply(&t2, 12, &hecke_apply(&t3, 12, &d, 10).unwrap(), 5).unwrap();
        let b = hecke_apply(&t3, 12, &hecke_apply(&t2, 12, &d, 15).unwrap(), 5).unwrap();
        assert_eq!(a, b);
        assert_eq!(a, crate::qexp::qexp_scale(&q(-24 * 252), &d.truncate(5)).unwrap());
    }

    #[test]
    fn commutation_with_theta() {
        let f5 = RingDescriptor::PrimeField(5);
        let d5 = crate::qexp::reduce_mod_p(&delta(16), 5, None).unwrap();
        let report = commutation_check(&d5, 12, &HeckeOperator::t(1, 2).unwrap()).unwrap();
        assert!(report.holds);
        assert_eq!(report.factor, f5.from_int(2));

        let mut rng = ChaCha8Rng::seed_from_u64(31);
        let f7 = RingDescriptor::PrimeField(7);
        for (g, ell, tau, factor) in [(1usize, 3u64, 12, 3), (2, 2, 4, 4)] {
            let op = HeckeOperator::t(g, ell).unwrap();
            for _ in 0..3 {
                let f = random_expansion(&mut rng, g, &f7, tau, 0.5, Some(4));
                let report = commutation_check(&f, 4, &op).unwrap();
                assert!(report.holds, "first difference at {:?}", report.first_difference);
                assert_eq!(report.factor, f7.from_int(factor));
            }
        }
    }

    #[test]
    fn wrong_factor_is_detected() {
        // Dropping the det(λ(ℓ)) factor must break the identity on a generic series.
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let f7 = RingDescriptor::PrimeField(7);
        let f = random_expansion(&mut rng, 1, &f7, 12, 0.8, Some(4));
        let report = commutation_check(&f, 4, &HeckeOperator::t(1, 3).unwrap()).unwrap();
        let unscaled =
            theta_bn_direct(&hecke_apply(&HeckeOperator::t(1, 3).unwrap(), 4, &f, report.tau).unwrap(), 7).unwrap();
        assert_ne!(report.lhs, unscaled);
    }

    #[test]
    fn hypothesis_errors() {
        let f5 = crate::qexp::reduce_mod_p(&delta(10), 5, None).unwrap();
        assert!(matches!(commutation_check(&f5, 12, &HeckeOperator::t(1, 5).unwrap()), Err(HeckeError::Hypothesis(_))));
        assert!(matches!(hecke_apply(&HeckeOperator::t(1, 5).unwrap(), 12, &f5, 2), Err(HeckeError::Hypothesis(_))));
        assert!(matches!(HeckeOperator::t(3, 2), Err(HeckeError::SizeGuard { .. })));
        assert!(matches!(HeckeOperator::t(1, 4), Err(HeckeError::NotPrime(4))));
        let lam = Cocharacter::new(1, vec![3, 0]).unwrap();
        assert!(matches!(HeckeOperator::generic(1, 2, lam), Err(HeckeError::NotIntegral(_))));
    }

    #[test]
    fn operator_parsing() {
        assert_eq!(HeckeOperator::parse(1, 3, "T(3)").unwrap().name(), &HeckeName::T);
        assert_eq!(HeckeOperator::parse(1, 3, "T(ell)").unwrap().name(), &HeckeName::T);
        assert_eq!(HeckeOperator::parse(2, 2, "T_1(ell^2)").unwrap().name(), &HeckeName::Ti(1));
        assert_eq!(HeckeOperator::parse(2, 2, "T(4)").unwrap().name(), &HeckeName::TSquare);
        assert_eq!(HeckeOperator::parse(1, 2, "lam:2,2").unwrap().reps().len(), 6);
        assert!(HeckeOperator::parse(1, 2, "U(2)").is_err());
        assert_eq!(HeckeOperator::t(2, 2).unwrap().to_string(), "T(2)");
    }
}
