use std::fs;
use std::io::{self, Read, Write};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use siegel_core::clifford::parse_expression;
use siegel_core::exactring::{is_prime, RingDescriptor, RingValue};
use siegel_core::hecke::{commutation_check, coset_reps, hecke_apply, HeckeOperator};
use siegel_core::qexp::{self, from_text, to_text, QExpansion};
use siegel_core::rootdatum::{build_root_datum, dominance_compare, parse_coords, Cocharacter};
use siegel_core::satake::{invert_coefficients, main_theorem_verify, sqrt_in_field, Eigensystem, SatakeCoefficients};
use siegel_core::selftest::{run_all, SelftestConfig};
use siegel_core::theta::{bracket, theta_bn_direct, theta_bn_via_bracket, PQContext};

#[derive(Parser)]
#[command(name = "siegel", version, about = "Exact computations with Siegel modular forms")]
struct Cli {
    /// Seed for every random choice; SIEGEL_SEED takes precedence.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Print the root datum of GSp_2g.
    Rootdatum {
        #[arg(long)]
        g: usize,
    },
    /// Decide whether mu <= lam and print the coroot witness.
    Dominance {
        #[arg(long)]
        g: usize,
        #[arg(long)]
        lam: String,
        #[arg(long)]
        mu: String,
    },
    /// Evaluate an expression in the Clifford algebra of rank 2g+1.
    CliffordEval {
        #[arg(long)]
        g: usize,
        #[arg(long, default_value = "rational")]
        ring: String,
        #[arg(long)]
        expr: String,
    },
    /// q-expansion arithmetic on SIEGELQEXP files.
    Qexp {
        #[command(subcommand)]
        op: QexpOp,
    },
    /// Theta operators.
    Theta {
        #[command(subcommand)]
        op: ThetaOp,
    },
    /// The bracket [F, H] for weights k1, k2.
    Bracket {
        #[arg(long)]
        k1: i64,
        #[arg(long)]
        k2: i64,
        f: String,
        h: String,
        #[command(flatten)]
        out: Output,
    },
    /// Right-coset representatives of K lambda(ell) K.
    Cosets {
        #[arg(long)]
        g: usize,
        #[arg(long)]
        ell: u64,
        /// Dominant cocharacter a1,..,a(g+1); defaults to the one of T(ell).
        #[arg(long)]
        lam: Option<String>,
    },
    /// Apply a Hecke operator to a q-expansion.
    HeckeApply {
        #[command(flatten)]
        hecke: HeckeArgs,
        /// Output precision; defaults to the largest the input supports.
        #[arg(long)]
        tau_out: Option<i64>,
        input: String,
        #[command(flatten)]
        out: Output,
    },
    /// Compare T(theta f) with det(lambda(ell)) theta(T f).
    CommuteCheck {
        #[command(flatten)]
        hecke: HeckeArgs,
        input: String,
    },
    /// Replay the twisting identity on random Satake data.
    SatakeVerify {
        #[arg(long)]
        g: usize,
        #[arg(long)]
        ell: u64,
        #[arg(long)]
        p: u64,
        #[arg(long)]
        m: i64,
        #[arg(long)]
        lam: String,
        #[arg(long, default_value_t = 10)]
        trials: usize,
        /// Table of b coefficients, lines `lam ; mu ; value`.
        #[arg(long)]
        table: Option<String>,
    },
    /// Run the acceptance checks.
    Selftest {
        #[arg(long)]
        quick: bool,
    },
}

#[derive(Subcommand)]
enum QexpOp {
    Mul {
        a: String,
        b: String,
        #[command(flatten)]
        out: Output,
    },
    Add {
        a: String,
        b: String,
        #[command(flatten)]
        out: Output,
    },
    /// Reduce a rational or cyclotomic expansion mod p.
    Reduce {
        #[arg(long)]
        p: u64,
        /// Image of the root of unity, for cyclotomic coefficients.
        #[arg(long)]
        zeta: Option<u64>,
        input: String,
        #[command(flatten)]
        out: Output,
    },
    Eisenstein {
        #[arg(long)]
        k: i64,
        #[arg(long)]
        tau: i64,
        #[command(flatten)]
        out: Output,
    },
    Delta {
        #[arg(long)]
        tau: i64,
        #[command(flatten)]
        out: Output,
    },
}

#[derive(Subcommand)]
enum ThetaOp {
    /// The theta operator mod p.
    Bn {
        #[arg(long)]
        p: u64,
        /// Compute through the bracket with a series H ≡ 1 mod p.
        #[arg(long, requires = "h")]
        via_bracket: bool,
        #[arg(long = "H", id = "h")]
        h: Option<String>,
        input: String,
        #[command(flatten)]
        out: Output,
    },
}

#[derive(Args)]
struct HeckeArgs {
    /// T, T(ell), T_i, T(ell^2), or lam:a1,..,r.
    #[arg(long, default_value = "T")]
    op: String,
    #[arg(long)]
    ell: u64,
    #[arg(long)]
    k: i64,
    /// The prime of the coefficient field, checked against ell.
    #[arg(long)]
    p: Option<u64>,
}

#[derive(Args)]
struct Output {
    /// Write to this file instead of standard output.
    #[arg(long, short)]
    out: Option<String>,
}

type CliResult = Result<String, String>;

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let seed = match std::env::var("SIEGEL_SEED") {
        Ok(s) => match s.trim().parse() {
            Ok(v) => v,
            Err(_) => {
                eprintln!("error: SIEGEL_SEED must be an unsigned integer");
                return ExitCode::from(2);
            }
        },
        Err(_) => cli.seed,
    };
    match run(cli.command, seed) {
        Ok(text) => {
            let mut stdout = io::stdout().lock();
            let _ = stdout.write_all(text.as_bytes());
            ExitCode::SUCCESS
        }
        Err(msg) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
    }
}

fn err<E: std::fmt::Display>(e: E) -> String {
    e.to_string()
}

fn read_input(path: &str) -> Result<String, String> {
    if path == "-" {
        let mut s = String::new();
        io::stdin().read_to_string(&mut s).map_err(err)?;
        Ok(s)
    } else {
        fs::read_to_string(path).map_err(|e| format!("{path}: {e}"))
    }
}

fn read_series(path: &str) -> Result<QExpansion, String> {
    from_text(&read_input(path)?).map_err(|e| format!("{path}: {e}"))
}

fn emit(f: &QExpansion, out: &Output) -> CliResult {
    let text = to_text(f);
    match &out.out {
        Some(path) => {
            fs::write(path, &text).map_err(|e| format!("{path}: {e}"))?;
            Ok(String::new())
        }
        None => Ok(text),
    }
}

fn cochar(g: usize, s: &str) -> Result<Cocharacter, String> {
    let coords = parse_coords(s).ok_or_else(|| format!("bad coordinate list `{s}`"))?;
    Cocharacter::new(g, coords).map_err(err)
}

fn run(command: Command, seed: u64) -> CliResult {
    match command {
        Command::Rootdatum { g } => Ok(format!("{}\n", build_root_datum(g).map_err(err)?)),
        Command::Dominance { g, lam, mu } => {
            let (lam, mu) = (cochar(g, &lam)?, cochar(g, &mu)?);
            Ok(match dominance_compare(&lam, &mu).map_err(err)? {
                Some(n) => format!("witness {}\n", n.iter().map(|k| k.to_string()).collect::<Vec<_>>().join(",")),
                None => "incomparable\n".into(),
            })
        }
        Command::CliffordEval { g, ring, expr } => {
            let ring: RingDescriptor = ring.parse().map_err(err)?;
            Ok(format!("{}\n", parse_expression(g, &ring, &expr).map_err(err)?))
        }
        Command::Qexp { op } => run_qexp(op),
        Command::Theta { op: ThetaOp::Bn { p, via_bracket, h, input, out } } => {
            let f = read_series(&input)?;
            let theta = if via_bracket {
                let h = read_series(h.as_deref().expect("clap enforces --H"))?;
                theta_bn_via_bracket(&f, &h, f.g(), p).map_err(err)?
            } else {
                let fp =
                    if f.ring().characteristic() == p { f } else { qexp::reduce_mod_p(&f, p, None).map_err(err)? };
                warn_theta_hypotheses(&fp, p);
                theta_bn_direct(&fp, p).map_err(err)?
            };
            emit(&theta, &out)
        }
        Command::Bracket { k1, k2, f, h, out } => {
            let (f, h) = (read_series(&f)?, read_series(&h)?);
            let ctx = PQContext::new(f.g(), k1, k2).map_err(err)?;
            emit(&bracket(&f, &h, &ctx).map_err(err)?, &out)
        }
        Command::Cosets { g, ell, lam } => {
            let reps = match lam {
                Some(lam) => coset_reps(g, ell, &cochar(g, &lam)?).map_err(err)?,
                None => HeckeOperator::t(g, ell).map_err(err)?.reps().to_vec(),
            };
            let mut s = String::new();
            for rep in &reps {
                s.push_str(&format!("{rep}\n"));
            }
            s.push_str(&format!("# {} cosets\n", reps.len()));
            Ok(s)
        }
        Command::HeckeApply { hecke, tau_out, input, out } => {
            let f = read_series(&input)?;
            let op = hecke_operator(&hecke, &f)?;
            let tau_out = tau_out.unwrap_or(f.tau() / op.precision_factor());
            emit(&hecke_apply(&op, hecke.k, &f, tau_out).map_err(err)?, &out)
        }
        Command::CommuteCheck { hecke, input } => {
            let f = read_series(&input)?;
            let op = hecke_operator(&hecke, &f)?;
            let report = commutation_check(&f, hecke.k, &op).map_err(err)?;
            if report.holds {
                Ok(format!("PASS {op} factor={} tau={}\n", report.factor, report.tau))
            } else {
                let n = report.first_difference.expect("a failing report names an index");
                Err(format!(
                    "FAIL {op}: first difference at {n}: {} vs {}",
                    report.lhs.coefficient(&n),
                    report.rhs.coefficient(&n)
                ))
            }
        }
        Command::SatakeVerify { g, ell, p, m, lam, trials, table } => {
            satake_verify(g, ell, p, m, &lam, trials, table, seed)
        }
        Command::Selftest { quick } => {
            let results = run_all(&SelftestConfig { seed, quick });
            let mut s = String::new();
            for r in &results {
                s.push_str(&format!("{r}\n"));
            }
            if results.iter().all(|r| r.passed) {
                Ok(s)
            } else {
                print!("{s}");
                Err("some checks failed".into())
            }
        }
    }
}

fn run_qexp(op: QexpOp) -> CliResult {
    match op {
        QexpOp::Mul { a, b, out } => emit(&qexp::qexp_mul(&read_series(&a)?, &read_series(&b)?).map_err(err)?, &out),
        QexpOp::Add { a, b, out } => emit(&qexp::qexp_add(&read_series(&a)?, &read_series(&b)?).map_err(err)?, &out),
        QexpOp::Reduce { p, zeta, input, out } => {
            let f = read_series(&input)?;
            let zeta = zeta.map(|z| RingDescriptor::PrimeField(p).from_int(z as i64));
            emit(&qexp::reduce_mod_p(&f, p, zeta.as_ref()).map_err(err)?, &out)
        }
        QexpOp::Eisenstein { k, tau, out } => emit(&qexp::eisenstein(k, tau).map_err(err)?, &out),
        QexpOp::Delta { tau, out } => emit(&qexp::delta(tau), &out),
    }
}

fn warn_theta_hypotheses(f: &QExpansion, p: u64) {
    let g = f.g();
    if g <= 1 {
        eprintln!("warning: the theta operator statement assumes g > 1; at g = 1 this is the formal formula only");
    }
    if let Some(k) = f.weight() {
        if k <= g as i64 + 1 {
            eprintln!("warning: the theta operator statement assumes k > g + 1, got k = {k}");
        }
    }
    if 2 * p as usize <= g * (g + 1) {
        eprintln!("warning: need p > g(g+1)/2, got p = {p}");
    }
}

fn hecke_operator(args: &HeckeArgs, f: &QExpansion) -> Result<HeckeOperator, String> {
    let char_p = f.ring().characteristic();
    let p = args.p.unwrap_or(char_p);
    if char_p != 0 && p != char_p {
        return Err(format!("--p {p} does not match the coefficient ring {}", f.ring()));
    }
    if args.ell == p || f.level() % args.ell == 0 {
        return Err(format!("hypothesis ℓ ∤ pN fails: ℓ = {}, p = {p}, N = {}", args.ell, f.level()));
    }
    HeckeOperator::parse(f.g(), args.ell, &args.op).map_err(err)
}

/// F_p when ℓ is a square mod p, otherwise F_p[x]/(x² − c) for a non-residue c.
fn field_with_sqrt(p: u64, ell: u64) -> Result<(RingDescriptor, RingValue), String> {
    let fp = RingDescriptor::PrimeField(p);
    if let Some(v) = sqrt_in_field(&fp, ell).map_err(err)? {
        return Ok((fp, v));
    }
    let c = (2..p).find(|&c| sqrt_in_field(&fp, c).ok().flatten().is_none()).ok_or("no non-residue")?;
    let ring: RingDescriptor = format!("ext:{p}:{},0,1", p - c).parse().map_err(err)?;
    let v = sqrt_in_field(&ring, ell).map_err(err)?.ok_or("ℓ has no square root in F_p²")?;
    Ok((ring, v))
}

#[allow(clippy::too_many_arguments)]
fn satake_verify(
    g: usize,
    ell: u64,
    p: u64,
    m: i64,
    lam: &str,
    trials: usize,
    table: Option<String>,
    seed: u64,
) -> CliResult {
    if !is_prime(p) || p == 2 {
        return Err(format!("p = {p} must be an odd prime"));
    }
    if !is_prime(ell) || ell == p {
        return Err(format!("ℓ = {ell} must be a prime different from p = {p}"));
    }
    let lam = cochar(g, lam)?;
    let (ring, v) = field_with_sqrt(p, ell)?;
    let fixed = match table {
        Some(path) => Some(SatakeCoefficients::from_text(g, ell, &ring, &read_input(&path)?).map_err(err)?),
        None => None,
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = String::new();
    let mut passed = 0;
    for trial in 0..trials {
        let b = match &fixed {
            Some(b) => b.clone(),
            None => SatakeCoefficients::random(&mut rng, g, ell, &ring, &lam).map_err(err)?,
        };
        let d = invert_coefficients(&b).map_err(err)?;
        let psi = Eigensystem::random(&mut rng, g, ell, &ring, &lam).map_err(err)?;
        let report = main_theorem_verify(&lam, &d, &psi, m, &v).map_err(err)?;
        out.push_str(&format!("trial {trial}: {}\n", report.transcript));
        if report.holds {
            passed += 1;
        }
    }
    out.push_str(&format!("summary: {passed}/{trials} trials agree over {ring}\n"));
    if passed == trials {
        Ok(out)
    } else {
        print!("{out}");
        Err("the two chains disagree on some trial".into())
    }
}
