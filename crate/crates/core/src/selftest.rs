//! The acceptance checks, runnable from the library, the test suite and the
//! command line. Each check prints as `CHECK <name> PASS|FAIL <detail>`.

use std::fmt;
use std::time::{Duration, Instant};

use num_rational::BigRational;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::clifford::{
    cliff_mul, is_gspin, parity_automorphism, quadratic_form, random_element, random_vector, twisted_conjugate,
    CliffordElement,
};
use crate::exactring::{reduce_rational, RingDescriptor, RingValue};
use crate::hecke::{commutation_check, eigenvalue_of, lagrangian_count, same_right_coset, HeckeOperator};
use crate::qexp::{delta, eisenstein, qexp_scale, random_expansion, reduce_mod_p};
use crate::rootdatum::{build_root_datum, dominance_compare, dominant_ball, eta_exponent, is_dominant, Cocharacter};
use crate::satake::{
    char_eval, invert_coefficients, main_theorem_verify, satake_inverse_chi, sqrt_in_field, weights_of_irrep,
    DualTorusPoint, Eigensystem, SatakeCoefficients,
};
use crate::theta::{bracket, normalization_constant, q_eval, theta_bn_direct, theta_bn_via_bracket, PQContext};

#[derive(Debug, Clone, Copy)]
pub struct SelftestConfig {
    pub seed: u64,
    /// Fewer random instances for the slow checks.
    pub quick: bool,
}

impl Default for SelftestConfig {
    fn default() -> Self {
        Self { seed: 20240617, quick: false }
    }
}

#[derive(Debug, Clone)]
pub struct CheckResult {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
    pub elapsed: Duration,
    pub budget: Duration,
}

impl fmt::Display for CheckResult {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let verdict = if self.passed { "PASS" } else { "FAIL" };
        write!(
            f,
            "CHECK {} {verdict} {} ({:.2}s of {}s)",
            self.name,
            self.detail,
            self.elapsed.as_secs_f64(),
            self.budget.as_secs()
        )
    }
}

type CheckFn = fn(&SelftestConfig, &mut ChaCha8Rng) -> Result<String, String>;

pub struct Check {
    pub name: &'static str,
    pub budget_secs: u64,
    run: CheckFn,
}

pub fn checks() -> Vec<Check> {
    vec![
        Check { name: "eta-on-coroots", budget_secs: 1, run: eta_on_coroots },
        Check { name: "dominance-eta", budget_secs: 1, run: dominance_eta },
        Check { name: "clifford", budget_secs: 5, run: clifford_suite },
        Check { name: "rankin-cohen", budget_secs: 1, run: rankin_cohen },
        Check { name: "bracket-e4-e6", budget_secs: 1, run: bracket_e4_e6 },
        Check { name: "theta-routes", budget_secs: 10, run: theta_routes },
        Check { name: "eisenstein-mod-p", budget_secs: 5, run: eisenstein_mod_p },
        Check { name: "coset-counts", budget_secs: 60, run: coset_counts },
        Check { name: "hecke-delta", budget_secs: 5, run: hecke_delta },
        Check { name: "commutation", budget_secs: 60, run: commutation },
        Check { name: "satake-framework", budget_secs: 1, run: satake_framework },
        Check { name: "main-theorem", budget_secs: 30, run: main_theorem },
        Check { name: "dual-characters", budget_secs: 30, run: dual_characters },
    ]
}

/// Runs one check with its own generator, seeded from the config and the name.
pub fn run_check(check: &Check, cfg: &SelftestConfig) -> CheckResult {
    let salt = check.name.bytes().fold(0u64, |h, b| h.wrapping_mul(131).wrapping_add(b as u64));
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ salt);
    let start = Instant::now();
    let outcome = (check.run)(cfg, &mut rng);
    let elapsed = start.elapsed();
    let budget = Duration::from_secs(check.budget_secs);
    let (mut passed, mut detail) = match outcome {
        Ok(d) => (true, d),
        Err(d) => (false, d),
    };
    if elapsed > budget {
        passed = false;
        detail = format!("{detail}; over time budget");
    }
    CheckResult { name: check.name, passed, detail, elapsed, budget }
}

pub fn run_all(cfg: &SelftestConfig) -> Vec<CheckResult> {
    checks().iter().map(|c| run_check(c, cfg)).collect()
}

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn err<E: fmt::Display>(e: E) -> String {
    e.to_string()
}

fn eta_on_coroots(_: &SelftestConfig, _: &mut ChaCha8Rng) -> Result<String, String> {
    let mut count = 0;
    for g in 1..=4 {
        let rd = build_root_datum(g).map_err(err)?;
        for c in &rd.positive_coroots {
            ensure(eta_exponent(c) == 0, || format!("coroot {c} at g={g} has eta exponent {}", eta_exponent(c)))?;
            count += 1;
        }
    }
    Ok(format!("{count} positive coroots for g=1..4"))
}

fn dominance_eta(_: &SelftestConfig, rng: &mut ChaCha8Rng) -> Result<String, String> {
    for g in 1..=3 {
        let rd = build_root_datum(g).map_err(err)?;
        let pool = dominant_ball(g, 3);
        let mut found = 0;
        while found < 200 {
            let lam = &pool[rng.gen_range(0..pool.len())];
            let n: Vec<i64> = (0..g).map(|_| rng.gen_range(0..=3)).collect();
            let mut mu = lam.clone();
            for (j, &k) in n.iter().enumerate() {
                mu = mu.sub(&rd.simple_coroots[j].scale(k));
            }
            if !is_dominant(&mu) {
                continue;
            }
            found += 1;
            let witness = dominance_compare(lam, &mu).map_err(err)?;
            ensure(witness.as_deref() == Some(&n[..]), || {
                format!("witness for {mu} <= {lam} is {witness:?}, expected {n:?}")
            })?;
            ensure(eta_exponent(lam) == eta_exponent(&mu), || format!("eta differs on {lam} and {mu}"))?;
        }
    }
    Ok("200 pairs for each g=1,2,3".into())
}

fn clifford_suite(_: &SelftestConfig, rng: &mut ChaCha8Rng) -> Result<String, String> {
    let q = RingDescriptor::Rational;
    for g in 1..=2 {
        let n = 1u32 << (2 * g + 1);
        for s in 0..n {
            for t in 0..n {
                let a = CliffordElement::monomial(g, s, q.one()).map_err(err)?;
                let b = CliffordElement::monomial(g, t, q.one()).map_err(err)?;
                let prod = cliff_mul(&a, &b).map_err(err)?;
                ensure(prod.terms().len() == 1 && prod.terms().keys().all(|&m| m < n), || {
                    format!("basis product {s}*{t} leaves the basis at g={g}")
                })?;
            }
        }
    }
    for _ in 0..200 {
        let g = rng.gen_range(1..=2);
        let (x, y, z) = (random_element(rng, g, &q), random_element(rng, g, &q), random_element(rng, g, &q));
        let xy = cliff_mul(&x, &y).map_err(err)?;
        let lhs = cliff_mul(&xy, &z).map_err(err)?;
        let rhs = cliff_mul(&x, &cliff_mul(&y, &z).map_err(err)?).map_err(err)?;
        ensure(lhs == rhs, || format!("associativity fails on {x}, {y}, {z}"))?;
        let gxy = cliff_mul(&parity_automorphism(&x), &parity_automorphism(&y)).map_err(err)?;
        ensure(parity_automorphism(&xy) == gxy, || format!("γ is not multiplicative on {x}, {y}"))?;
        ensure(parity_automorphism(&parity_automorphism(&x)) == x, || format!("γ² ≠ 1 on {x}"))?;
    }
    for g in 1..=2 {
        for _ in 0..50 {
            let x = cliff_mul(&random_vector(rng, g, &q), &random_vector(rng, g, &q)).map_err(err)?;
            ensure(is_gspin(&x).map_err(err)?, || format!("{x} is not in GSpin"))?;
            let m = random_vector(rng, g, &q);
            let image = twisted_conjugate(&x, &m).map_err(err)?;
            ensure(image.is_vector(), || format!("{x} does not preserve M"))?;
            ensure(quadratic_form(&image).map_err(err)? == quadratic_form(&m).map_err(err)?, || {
                format!("{x} changes the quadratic form")
            })?;
        }
    }
    Ok("closure of 2^{2g+1} basis, 200 triples, 50 two-vector products per g".into())
}

fn rankin_cohen(_: &SelftestConfig, rng: &mut ChaCha8Rng) -> Result<String, String> {
    for (k1, k2) in [(4, 6), (4, 4), (6, 6)] {
        let ctx = PQContext::new(1, k1, k2).map_err(err)?;
        for _ in 0..100 {
            let r = BigRational::new(rng.gen_range(-50..=50).into(), rng.gen_range(1..=9).into());
            let s = BigRational::new(rng.gen_range(-50..=50).into(), rng.gen_range(1..=9).into());
            let got = q_eval(&ctx, &[vec![r.clone()]], &[vec![s.clone()]]);
            let want =
                BigRational::from_integer((2 * k2).into()) * &r - BigRational::from_integer((2 * k1).into()) * &s;
            ensure(got == want, || format!("Q({r}, {s}) = {got}, expected {want} at ({k1},{k2})"))?;
        }
    }
    Ok("100 random pairs for each weight pair".into())
}

fn bracket_e4_e6(_: &SelftestConfig, _: &mut ChaCha8Rng) -> Result<String, String> {
    let tau = 10;
    let e4 = eisenstein(4, tau).map_err(err)?;
    let e6 = eisenstein(6, tau).map_err(err)?;
    // q¹ coefficient of 2k2·θ(E4)·E6 − 2k1·E4·θ(E6).
    let a4 = e4.g1_coefficient(1).as_rational().ok_or("E4 is not rational")?;
    let a6 = e6.g1_coefficient(1).as_rational().ok_or("E6 is not rational")?;
    let c = BigRational::from_integer(12.into()) * a4 - BigRational::from_integer(8.into()) * a6;
    ensure(c == BigRational::from_integer(6912.into()), || format!("q¹ constant is {c}"))?;
    let b = bracket(&e4, &e6, &PQContext::new(1, 4, 6).map_err(err)?).map_err(err)?;
    let expected = qexp_scale(&RingValue::Rational(c.clone()), &delta(tau)).map_err(err)?;
    ensure(b.coeffs() == expected.coeffs(), || "[E4, E6] differs from 6912·Δ".into())?;
    Ok(format!("[E4, E6] = {c}·Δ to q^{tau}"))
}

fn theta_routes(_: &SelftestConfig, _: &mut ChaCha8Rng) -> Result<String, String> {
    let tau = 15;
    let forms =
        [("Delta", delta(tau)), ("E4", eisenstein(4, tau).map_err(err)?), ("E6", eisenstein(6, tau).map_err(err)?)];
    for p in [5u64, 7, 11] {
        let h = eisenstein(p as i64 - 1, tau).map_err(err)?;
        for (name, f) in &forms {
            let via = theta_bn_via_bracket(f, &h, 1, p).map_err(err)?;
            let direct = theta_bn_direct(&reduce_mod_p(f, p, None).map_err(err)?, p).map_err(err)?;
            ensure(via == direct, || format!("routes differ for {name} at p={p}"))?;
        }
        for g in 1..=3 {
            let c = reduce_rational(&normalization_constant(g, p), p).map_err(err)?;
            ensure(c == 1, || format!("normalization constant is {c} mod {p} at g={g}"))?;
        }
    }
    Ok("Delta, E4, E6 at p=5,7,11 to q^15; normalization ≡ 1 for g=1..3".into())
}

fn eisenstein_mod_p(_: &SelftestConfig, _: &mut ChaCha8Rng) -> Result<String, String> {
    for p in [5u64, 7, 11, 13] {
        let e = eisenstein(p as i64 - 1, 20).map_err(err)?;
        for m in 1..=20 {
            let c = e.g1_coefficient(m).as_rational().ok_or("non-rational coefficient")?;
            let r = reduce_rational(&c, p).map_err(err)?;
            ensure(r == 0, || format!("a_{m}(E_{}) ≡ {r} mod {p}", p - 1))?;
        }
    }
    Ok("E_{p-1} ≡ 1 to q^20 for p=5,7,11,13".into())
}

fn coset_counts(_: &SelftestConfig, _: &mut ChaCha8Rng) -> Result<String, String> {
    let mut parts = Vec::new();
    for (g, ell) in [(1usize, 2u64), (1, 3), (1, 5), (2, 2), (2, 3)] {
        let op = HeckeOperator::t(g, ell).map_err(err)?;
        let reps = op.reps();
        let formula = if g == 1 { ell + 1 } else { (ell + 1) * (ell * ell + 1) };
        ensure(reps.len() as u64 == formula, || format!("g={g} ℓ={ell}: {} cosets, expected {formula}", reps.len()))?;
        if g == 2 {
            let oracle = lagrangian_count(g, ell);
            ensure(oracle == formula, || format!("Lagrangian oracle gives {oracle} at ℓ={ell}"))?;
        }
        for (i, a) in reps.iter().enumerate() {
            for b in &reps[i + 1..] {
                ensure(!same_right_coset(&a.matrix(), &b.matrix(), a.eta()), || format!("{a} and {b} share a coset"))?;
            }
        }
        parts.push(format!("g={g} ℓ={ell}: {}", reps.len()));
    }
    Ok(parts.join(", "))
}

fn hecke_delta(_: &SelftestConfig, _: &mut ChaCha8Rng) -> Result<String, String> {
    let d = delta(15);
    let mut parts = Vec::new();
    for (ell, want) in [(2u64, -24i64), (3, 252)] {
        let got = eigenvalue_of(&HeckeOperator::t(1, ell).map_err(err)?, 12, &d).map_err(err)?;
        ensure(got == Some(RingValue::rational(want, 1)), || format!("T({ell}) on Δ gives {got:?}"))?;
        parts.push(format!("T({ell})Δ = {want}Δ"));
    }
    Ok(parts.join(", "))
}

fn commutation(cfg: &SelftestConfig, rng: &mut ChaCha8Rng) -> Result<String, String> {
    let per_config = if cfg.quick { 5 } else { 50 };
    let tau_out = 6;
    for g in 1..=2usize {
        for ell in [2u64, 3] {
            let op = HeckeOperator::t(g, ell).map_err(err)?;
            for p in [5u64, 7] {
                let ring = RingDescriptor::PrimeField(p);
                let density = if g == 1 { 0.8 } else { 0.3 };
                for _ in 0..per_config {
                    let k = 2 * rng.gen_range(2..=5);
                    let f = random_expansion(rng, g, &ring, ell as i64 * tau_out, density, Some(k));
                    let report = commutation_check(&f, k, &op).map_err(err)?;
                    ensure(report.tau >= tau_out, || format!("output precision {} < {tau_out}", report.tau))?;
                    ensure(report.holds, || {
                        format!("g={g} ℓ={ell} p={p} k={k}: first difference at {:?}", report.first_difference)
                    })?;
                }
            }
        }
    }
    // θ_BN(Δ mod 7) is a T(2) eigenform with eigenvalue 2·(−24).
    let theta_delta = theta_bn_direct(&reduce_mod_p(&delta(20), 7, None).map_err(err)?, 7).map_err(err)?;
    let ev = eigenvalue_of(&HeckeOperator::t(1, 2).map_err(err)?, 12 + 7 + 1, &theta_delta).map_err(err)?;
    let want = RingDescriptor::PrimeField(7).from_int(2 * -24);
    ensure(ev.as_ref() == Some(&want), || format!("T(2) eigenvalue of θ(Δ) mod 7 is {ev:?}"))?;
    Ok(format!("{per_config} series per (g, ℓ, p), τ_out={tau_out}; θ(Δ) mod 7 has T(2) eigenvalue {want}"))
}

fn satake_framework(_: &SelftestConfig, rng: &mut ChaCha8Rng) -> Result<String, String> {
    let f7 = RingDescriptor::PrimeField(7);
    let mut tables = 0;
    while tables < 50 {
        let g = 1 + tables % 2;
        let rd = build_root_datum(g).map_err(err)?;
        let pool = dominant_ball(g, 3);
        let top = &pool[rng.gen_range(0..pool.len())];
        let size = crate::rootdatum::dominant_lower_set(&rd, top).map_err(err)?.len();
        if !(2..=8).contains(&size) {
            continue;
        }
        let b = SatakeCoefficients::random(rng, g, 2, &f7, top).map_err(err)?;
        let back = invert_coefficients(&invert_coefficients(&b).map_err(err)?).map_err(err)?;
        ensure(back == b, || format!("inversion is not an involution on the table below {top}"))?;
        tables += 1;
    }
    for g in 1..=2 {
        let rd = build_root_datum(g).map_err(err)?;
        for lam in dominant_ball(g, 2) {
            let id = SatakeCoefficients::identity(g, 3, &f7, std::slice::from_ref(&lam)).map_err(err)?;
            let h = satake_inverse_chi(&lam, &id).map_err(err)?;
            let single = h.terms().len() == 1
                && h.coefficient(&lam)
                    .is_some_and(|p| p.len() == 1 && p.get(&-rd.rho2_pairing(&lam)).is_some_and(|c| c.is_one()));
            ensure(single, || format!("identity table gives {h} for {lam}"))?;
        }
    }
    Ok("50 involutions; identity table gives v^{-<2ρ,λ>}c_λ".into())
}

fn main_theorem(cfg: &SelftestConfig, rng: &mut ChaCha8Rng) -> Result<String, String> {
    let per_case = if cfg.quick { 20 } else { 100 };
    let ring: RingDescriptor = "ext:7:1,0,1".parse().map_err(err)?;
    let mut total = 0;
    for g in 1..=2usize {
        let mut ms = vec![0i64, 1, 2, g as i64];
        ms.sort_unstable();
        ms.dedup();
        let pool = dominant_ball(g, 2);
        let twisting: Vec<&Cocharacter> = pool.iter().filter(|l| eta_exponent(l) != 0).collect();
        for &m in &ms {
            for i in 0..per_case {
                let ell = [2u64, 3][i % 2];
                let v = sqrt_in_field(&ring, ell).map_err(err)?.ok_or("no square root of ℓ in F_49")?;
                let lam = if m == 0 {
                    &pool[rng.gen_range(0..pool.len())]
                } else {
                    twisting[rng.gen_range(0..twisting.len())]
                };
                let b = SatakeCoefficients::random(rng, g, ell, &ring, lam).map_err(err)?;
                let d = invert_coefficients(&b).map_err(err)?;
                let psi = Eigensystem::random(rng, g, ell, &ring, lam).map_err(err)?;
                let report = main_theorem_verify(lam, &d, &psi, m, &v).map_err(err)?;
                ensure(report.holds, || report.transcript.clone())?;
                ensure(report.symbolically_distinct() == (m != 0), || {
                    format!("non-vacuity fails: {}", report.transcript)
                })?;
                total += 1;
            }
        }
    }
    Ok(format!("{total} instances over F_49, chains distinct whenever m > 0"))
}

fn dual_characters(_: &SelftestConfig, rng: &mut ChaCha8Rng) -> Result<String, String> {
    let ring: RingDescriptor = "ext:7:1,0,1".parse().map_err(err)?;
    let mut count = 0;
    for g in 1..=2 {
        for lam in dominant_ball(g, 2) {
            let w = weights_of_irrep(&lam).map_err(err)?;
            ensure(w.get(&lam) == Some(&1), || format!("highest weight of {lam} has multiplicity {:?}", w.get(&lam)))?;
            ensure(w.keys().all(|mu| eta_exponent(mu) == eta_exponent(&lam)), || {
                format!("η-component varies for {lam}")
            })?;
            let t = DualTorusPoint::random(rng, g, &ring).map_err(err)?;
            let a = DualTorusPoint::random(rng, 1, &ring).map_err(err)?.coords[0].clone();
            let shifted = DualTorusPoint::eta_dual(g, &a).map_err(err)?.mul(&t);
            let lhs = char_eval(&lam, &shifted).map_err(err)?;
            let rhs = &a.pow(eta_exponent(&lam)).ok_or("a is not invertible")? * &char_eval(&lam, &t).map_err(err)?;
            ensure(lhs == rhs, || format!("χ_{lam}(η∨(a)t) ≠ a^η χ_{lam}(t)"))?;
            count += 1;
        }
    }
    Ok(format!("{count} dominant λ with |λ| <= 2"))
}
