//! `fjwb`: certificates for Z^n ⋊_A Z and the numerical building blocks
//! behind them.
//!
//! Exit codes: 0 pass, 1 usage or unsupported input, 2 lemma refutation,
//! 3 resource cap, 4 a check that did not pass.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use num_bigint::BigInt;
use num_rational::BigRational;
use serde::{Deserialize, Serialize};

use fjwb_core::certifier::{analyze, pipeline, verify, CertError, CertRequest, Certificate, Mode};
use fjwb_core::controlled::Matrix;
use fjwb_core::flowspace::{
    d_fs, dfol_check, lemma510_search, line_cover, FlowSpaceParams, GeneralizedGeodesic, Lemma510Spec, Translations,
};
use fjwb_core::group::primes::factor_u64;
use fjwb_core::group::{matrix_order_mod_capped, FiniteQuotientDesc, GeneratingSet, GroupElement, IntMatrix};
use fjwb_core::hyperelementary::{
    check_lemma_hyp_elm, enumerate_subgroups, find_lemma_prime_power, is_hyperelementary, FiniteQuotient,
};
use fjwb_core::json::parse_rational;
use fjwb_core::transfer::{
    augmentation_check, psi_morphism, reflection_data, self_torsion, subdivided_interval, support_word_bound,
    transfer, trivial_action_data, Interval,
};

#[derive(Parser)]
#[command(name = "fjwb", version, about = "Exact certificates for groups Z^n ⋊_A Z")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the full pipeline and emit a certificate.
    Certify(CertifyArgs),
    /// Re-run every check recorded in a certificate.
    Verify {
        cert: PathBuf,
    },
    /// Indices i_k, their product K and the root-of-unity test.
    Analyze {
        #[arg(long)]
        matrix: String,
        /// Largest k for which i_k is computed.
        #[arg(long = "L", default_value_t = 5)]
        window: u64,
    },
    /// Subgroups of (Z/s)^n ⋊ Z/r and the two lemmas about them.
    Hyperelem(HyperelemArgs),
    /// Geodesic flow space on R^n and the covers built from it.
    #[command(subcommand)]
    Flow(FlowCommand),
    /// Transfer of a subdivided interval over G = Z and its self-torsion.
    Torsion(TorsionArgs),
}

#[derive(Args)]
struct CertifyArgs {
    /// Matrix file: {"n":..,"rows":..}, a nested array, or whitespace rows.
    /// An inline nested array is accepted too.
    #[arg(long)]
    matrix: String,
    /// Slopes up to L are handled by conjugation; the primes are chosen above it.
    #[arg(long = "L")]
    window: u64,
    /// Rational such as 1/2 or 0.5.
    #[arg(long)]
    eps: String,
    /// Generating set file; defaults to e_1, …, e_n, t.
    #[arg(long)]
    gens: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = ModeArg::Sampling)]
    mode: ModeArg,
    #[arg(long, default_value_t = 100)]
    samples: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Largest subgroup closed explicitly.
    #[arg(long)]
    subgroup_cap: Option<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Exhaustive,
    Sampling,
}

#[derive(Args)]
struct HyperelemArgs {
    /// Product of two distinct primes.
    #[arg(long)]
    s: u64,
    #[arg(long, default_value = "[[2,1],[1,1]]")]
    matrix: String,
    #[arg(long)]
    exhaustive: bool,
    #[arg(long, default_value_t = 1_000_000)]
    cap: u64,
}

#[derive(Subcommand)]
enum FlowCommand {
    /// d_FS between two lines or constants in R^n.
    DFs(PairArgs),
    /// Whether some φ_t c with |t| ≤ α lies within ε of c′.
    Dfol {
        #[command(flatten)]
        pair: PairArgs,
        #[arg(long)]
        alpha: f64,
        #[arg(long)]
        eps: f64,
    },
    /// Search for (T, R) contracting Z^n acting on R^n.
    Lemma510 {
        #[arg(long, default_value_t = 2)]
        n: usize,
        #[arg(long, default_value_t = 0.1)]
        eps: f64,
        #[arg(long, default_value_t = 1000)]
        samples: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Z-invariant cover of the line by intervals of half-width R + 1.
    LineCover {
        #[arg(long)]
        r: String,
        #[arg(long, default_value_t = 1000)]
        samples: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

#[derive(Args)]
struct PairArgs {
    /// Comma separated coordinates.
    #[arg(long, allow_hyphen_values = true)]
    x: String,
    /// Direction of the first geodesic; omitted means constant.
    #[arg(long, allow_hyphen_values = true)]
    dir: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    y: String,
    #[arg(long, allow_hyphen_values = true)]
    dir2: Option<String>,
    #[arg(long, default_value_t = 1e-6)]
    tolerance: f64,
}

#[derive(Args)]
struct TorsionArgs {
    /// Number of edges of the subdivided interval.
    #[arg(long, default_value_t = 3)]
    l: usize,
    /// Rank of the coefficient module.
    #[arg(long, default_value_t = 2)]
    rank: usize,
    /// ψ = t·P + t⁻¹·(1 − P) with P projecting onto the first `proj` axes.
    #[arg(long, default_value_t = 1)]
    proj: usize,
    /// Let t act on the interval by the flip x ↦ 1 − x.
    #[arg(long)]
    flip: bool,
}

#[derive(Debug)]
struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn usage(message: impl Into<String>) -> Self {
        Failure { code: 1, message: message.into() }
    }
}

impl From<CertError> for Failure {
    fn from(e: CertError) -> Self {
        Failure { code: e.exit_code(), message: e.to_string() }
    }
}

fn read_input(arg: &str) -> Result<String, Failure> {
    let path = Path::new(arg);
    if path.exists() {
        return fs::read_to_string(path).map_err(|e| Failure::usage(format!("{arg}: {e}")));
    }
    if arg.trim_start().starts_with(['[', '{']) {
        return Ok(arg.to_string());
    }
    Err(Failure::usage(format!("{arg}: no such file")))
}

#[derive(Deserialize)]
struct NestedRows(#[serde(with = "fjwb_core::json::mat_bigint_str")] Vec<Vec<BigInt>>);

fn parse_matrix(arg: &str) -> Result<IntMatrix, Failure> {
    let text = read_input(arg)?;
    let trimmed = text.trim_start();
    let parsed = if trimmed.starts_with('{') {
        serde_json::from_str::<IntMatrix>(&text).map_err(|e| e.to_string())
    } else if trimmed.starts_with('[') {
        serde_json::from_str::<NestedRows>(&text)
            .map_err(|e| e.to_string())
            .and_then(|r| IntMatrix::from_rows(r.0).map_err(|e| e.to_string()))
    } else {
        IntMatrix::parse_text(&text).map_err(|e| e.to_string())
    };
    parsed.map_err(|e| Failure::usage(format!("matrix: {e}")))
}

#[derive(Deserialize)]
#[serde(untagged)]
enum GensInput {
    Set(GeneratingSet),
    List(Vec<GroupElement>),
}

fn parse_gens(path: &Path) -> Result<GeneratingSet, Failure> {
    let text = fs::read_to_string(path).map_err(|e| Failure::usage(format!("{}: {e}", path.display())))?;
    match serde_json::from_str::<GensInput>(&text) {
        Ok(GensInput::Set(s)) => Ok(s),
        Ok(GensInput::List(elements)) => Ok(GeneratingSet { elements }),
        Err(e) => Err(Failure::usage(format!("generating set: {e}"))),
    }
}

fn parse_point(s: &str) -> Result<Vec<f64>, Failure> {
    s.split(',')
        .map(|t| t.trim().parse::<f64>().map_err(|_| Failure::usage(format!("not a number: {t:?}"))))
        .collect()
}

fn geodesic(x: &str, dir: Option<&str>) -> Result<GeneralizedGeodesic, Failure> {
    let x = parse_point(x)?;
    match dir {
        None => Ok(GeneralizedGeodesic::constant(x)),
        Some(d) => GeneralizedGeodesic::line(x, parse_point(d)?).map_err(|e| Failure::usage(e.to_string())),
    }
}

fn rational(s: &str, what: &str) -> Result<BigRational, Failure> {
    parse_rational(s).ok_or_else(|| Failure::usage(format!("{what}: not a rational: {s:?}")))
}

fn print_json<T: Serialize>(value: &T) {
    emit(&serde_json::to_string_pretty(value).expect("reports serialize"));
}

/// Writes to stdout; a closed pipe (`| head`) is not an error.
fn emit(text: &str) {
    let mut out = std::io::stdout().lock();
    if let Err(e) = writeln!(out, "{text}") {
        if e.kind() != std::io::ErrorKind::BrokenPipe {
            eprintln!("error: {e}");
        }
    }
}

fn certify(args: CertifyArgs) -> Result<u8, Failure> {
    let matrix = parse_matrix(&args.matrix)?;
    let eps = rational(&args.eps, "eps")?;
    let gens = match &args.gens {
        Some(p) => parse_gens(p)?,
        None => CertRequest::standard_gens(matrix.dim()),
    };
    let mut req = CertRequest::new(matrix, args.window, eps, gens);
    req.mode = match args.mode {
        ModeArg::Exhaustive => Mode::Exhaustive,
        ModeArg::Sampling => Mode::Sampling,
    };
    req.samples = args.samples;
    req.seed = args.seed;
    if let Some(cap) = args.subgroup_cap {
        req.caps.subgroup_elements = cap;
    }
    let cert = pipeline(&req)?;
    let json = serde_json::to_string_pretty(&cert).expect("certificate serializes");
    match &args.out {
        Some(p) => fs::write(p, json).map_err(|e| Failure::usage(format!("{}: {e}", p.display())))?,
        None => emit(&json),
    }
    let failed = cert.subgroups.iter().filter(|s| !s.passed).count();
    eprintln!("{:?}: {} subgroups, {failed} failed", cert.status, cert.subgroups.len());
    Ok(cert.status.exit_code())
}

fn verify_cmd(path: &Path) -> Result<u8, Failure> {
    let text = fs::read_to_string(path).map_err(|e| Failure::usage(format!("{}: {e}", path.display())))?;
    let cert: Certificate = serde_json::from_str(&text).map_err(|e| Failure::usage(format!("certificate: {e}")))?;
    let report = verify(&cert)?;
    print_json(&report);
    Ok(if report.ok { 0 } else { 4 })
}

#[derive(Serialize)]
struct HyperelemReport {
    s: u64,
    p1: u64,
    p2: u64,
    r: u64,
    order: u64,
    subgroups: usize,
    hyperelementary: usize,
    not_hyperelementary: usize,
    lemma_q: [usize; 2],
    lemma_falsified: usize,
    cyclic_with_lattice_part: usize,
    prime_power_witnesses: usize,
    prime_power_falsified: usize,
}

fn hyperelem(args: HyperelemArgs) -> Result<u8, Failure> {
    let factors = factor_u64(args.s);
    let (p1, p2) = match factors.as_slice() {
        [(p1, 1), (p2, 1)] => (*p1, *p2),
        _ => return Err(Failure::usage("s must be a product of two distinct primes")),
    };
    if !args.exhaustive {
        return Err(Failure::usage("only --exhaustive is supported; `certify` samples"));
    }
    let a = parse_matrix(&args.matrix)?;
    let order = matrix_order_mod_capped(&a, args.s, 10_000_000).map_err(CertError::from)?;
    let r = args.s * order;
    let desc = FiniteQuotientDesc::new(&a, args.s, r).map_err(CertError::from)?;
    let fq = FiniteQuotient::new(&desc).map_err(CertError::from)?;
    let subs = enumerate_subgroups(&fq, args.cap).map_err(CertError::from)?;
    let mut rep = HyperelemReport {
        s: args.s,
        p1,
        p2,
        r,
        order: fq.size(),
        subgroups: subs.len(),
        hyperelementary: 0,
        not_hyperelementary: 0,
        lemma_q: [0, 0],
        lemma_falsified: 0,
        cyclic_with_lattice_part: 0,
        prime_power_witnesses: 0,
        prime_power_falsified: 0,
    };
    for h in &subs {
        if is_hyperelementary(&fq, h).is_none() {
            rep.not_hyperelementary += 1;
            continue;
        }
        rep.hyperelementary += 1;
        match check_lemma_hyp_elm(&fq, h, p1, p2) {
            Ok(o) => rep.lemma_q[usize::from(o.q == p2)] += 1,
            Err(_) => rep.lemma_falsified += 1,
        }
        let factors = factor_u64(h.order());
        let cyclic = h.elements.iter().any(|&x| fq.order_of(x, &factors) == h.order());
        let lattice = h.elements.iter().filter(|&&x| fq.decode(x).k == 0).count();
        if cyclic && lattice > 1 {
            rep.cyclic_with_lattice_part += 1;
            match find_lemma_prime_power(&fq, h) {
                Ok(_) => rep.prime_power_witnesses += 1,
                Err(_) => rep.prime_power_falsified += 1,
            }
        }
    }
    print_json(&rep);
    Ok(if rep.lemma_falsified + rep.prime_power_falsified > 0 { 2 } else { 0 })
}

fn flow(cmd: FlowCommand) -> Result<u8, Failure> {
    match cmd {
        FlowCommand::DFs(p) => {
            let c = geodesic(&p.x, p.dir.as_deref())?;
            let c2 = geodesic(&p.y, p.dir2.as_deref())?;
            print_json(&d_fs(&c, &c2, &FlowSpaceParams { tolerance: p.tolerance }));
            Ok(0)
        }
        FlowCommand::Dfol { pair, alpha, eps } => {
            let c = geodesic(&pair.x, pair.dir.as_deref())?;
            let c2 = geodesic(&pair.y, pair.dir2.as_deref())?;
            let res = dfol_check(&c, &c2, alpha, eps, &FlowSpaceParams { tolerance: pair.tolerance })
                .map_err(|e| Failure::usage(e.to_string()))?;
            print_json(&res);
            Ok(0)
        }
        FlowCommand::Lemma510 { n, eps, samples, seed } => {
            let mut spec = Lemma510Spec::new(Translations::standard(n), eps);
            spec.samples = samples;
            spec.seed = seed;
            match lemma510_search(&spec) {
                Ok(rep) => {
                    print_json(&rep);
                    Ok(0)
                }
                Err(e) => {
                    eprintln!("error: {e}");
                    Ok(4)
                }
            }
        }
        FlowCommand::LineCover { r, samples, seed } => {
            let rep = line_cover(rational(&r, "r")?, samples, seed).map_err(|e| Failure::usage(e.to_string()))?;
            let ok = rep.invariant && rep.long && rep.trivial_isotropy;
            print_json(&rep);
            Ok(if ok { 0 } else { 4 })
        }
    }
}

#[derive(Serialize)]
struct TorsionReport {
    l: usize,
    rank: usize,
    proj: usize,
    flip: bool,
    augmentation: bool,
    residuals: fjwb_core::transfer::PackResiduals,
    method: fjwb_core::transfer::ContractionMethod,
    #[serde(with = "fjwb_core::json::rational_str")]
    delta0: BigRational,
    word_bound: fjwb_core::transfer::WordBound,
}

fn torsion(args: TorsionArgs) -> Result<u8, Failure> {
    let err = |e: fjwb_core::transfer::TransferError| Failure { code: 4, message: e.to_string() };
    if args.l == 0 || args.rank == 0 || args.proj > args.rank {
        return Err(Failure::usage("need l ≥ 1, rank ≥ 1 and proj ≤ rank"));
    }
    let p = Matrix::from_fn(args.rank, args.rank, |i, j| BigInt::from(u8::from(i == j && i < args.proj)));
    let q = Matrix::identity(args.rank).sub(&p);
    let t = vec![1i64, -1];
    let (psi, psi_inv) = (vec![p.clone(), q.clone()], vec![q, p]);
    let psi_m = psi_morphism(&t, &psi);
    let (c, data) = if args.flip {
        reflection_data(args.l, t.clone(), psi, psi_inv).map_err(err)?
    } else {
        let c = subdivided_interval(args.l).map_err(err)?;
        let data = trivial_action_data(&c, t.clone(), psi, psi_inv);
        (c, data)
    };
    let pack = transfer(&psi_m, &data, &c).map_err(err)?;
    let augmentation = augmentation_check(&pack, &psi_m).map_err(err)?;
    let residuals = pack.residuals().map_err(err)?;
    let tau = self_torsion(&pack).map_err(err)?;
    let delta0 = BigRational::new(1.into(), BigInt::from(args.l));
    let word_bound =
        support_word_bound(&tau, &t, &delta0, &Interval { flip: args.flip }, 64).map_err(err)?;
    let ok = augmentation && residuals.validated();
    print_json(&TorsionReport {
        l: args.l,
        rank: args.rank,
        proj: args.proj,
        flip: args.flip,
        augmentation,
        residuals,
        method: tau.method,
        delta0,
        word_bound,
    });
    Ok(if ok { 0 } else { 4 })
}

fn run(cli: Cli) -> Result<u8, Failure> {
    match cli.command {
        Command::Certify(args) => certify(args),
        Command::Verify { cert } => verify_cmd(&cert),
        Command::Analyze { matrix, window } => {
            let a = parse_matrix(&matrix)?;
            print_json(&analyze(&a, window));
            Ok(0)
        }
        Command::Hyperelem(args) => hyperelem(args),
        Command::Flow(cmd) => flow(cmd),
        Command::Torsion(args) => torsion(args),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
