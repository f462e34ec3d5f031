//! End-to-end certification for Z^n ⋊_A Z: number-theoretic setup, case
//! classification of hyper-elementary subgroups, the two contracting
//! constructions, and a certificate that `verify` can replay on its own.

mod classify;
mod coset;
mod prop_z;
mod prop_zn;

use std::collections::BTreeMap;
use std::time::Instant;

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{Signed, ToPrimitive, Zero};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::group::primes::dirichlet_primes;
use crate::group::{
    has_root_of_unity_eigenvalue, index_ik, matrix_order_mod_capped, FiniteElement, FiniteQuotientDesc,
    GeneratingSet, GroupElement, GroupError, IntMatrix, Lattice, Semidirect, Slope, Subgroup,
};
use crate::hyperelementary::{
    check_lemma_hyp_elm_shape, enumerate_hyperelementary, sample_hyperelementary, verify_witness_shape,
    FiniteQuotient, HyperError, HyperWitness, LemmaOutcome, QuotientShape, SampleConfig,
};
use crate::simplicial::InducedComplex;

pub use classify::{
    barh_conjugator, classify_preimage, conjugates_into, power_mod, verify_case, BarHClause, CaseTag,
    ClassifyContext, ConjugatorMethod,
};
pub use coset::{check_coset_map, CosetCheck, CosetMap, CosetSampling};
pub use prop_z::{build_line_map, line_distance_bound, max_abs_k, min_passing_l, LineMap, LineReport};
pub use prop_zn::{
    build_nerve_map, invariance_spot_check, pair_check, search_nerve_map, search_schedule, Ambient, Attempt,
    CoverParams, NerveMap, NerveReport, NerveVertex, PairCheck,
};

pub const SCHEMA: &str = "fjwb-certificate/1";

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum CertError {
    #[error("A has a root of unity as an eigenvalue")]
    EigenvalueRootOfUnity,
    #[error("prime search exhausted: {0}")]
    PrimeSearchExhausted(String),
    #[error("cap exceeded: {0}")]
    CapExceeded(String),
    #[error("lemma falsified: {0}")]
    LemmaFalsified(String),
    #[error("classification failed: {0}")]
    ClassificationFailed(String),
    #[error("hypothesis violated: {0:?}")]
    HypothesisViolated(BarHClause),
    #[error("no cover parameters met ε for q = {q}; best worst pair {worst}")]
    ContractionFailed { q: u64, worst: String },
    #[error("invalid request: {0}")]
    InvalidRequest(String),
    #[error(transparent)]
    Group(#[from] GroupError),
}

impl CertError {
    /// 1 usage or unsupported input, 2 refutation, 3 resource cap, 4 a check
    /// that did not pass.
    pub fn exit_code(&self) -> u8 {
        match self {
            CertError::InvalidRequest(_) | CertError::EigenvalueRootOfUnity | CertError::Group(_) => 1,
            CertError::LemmaFalsified(_) | CertError::ClassificationFailed(_) => 2,
            CertError::CapExceeded(_) | CertError::PrimeSearchExhausted(_) => 3,
            CertError::HypothesisViolated(_) | CertError::ContractionFailed { .. } => 4,
        }
    }
}

impl Status {
    pub fn exit_code(self) -> u8 {
        match self {
            Status::Passed => 0,
            Status::Failed => 4,
        }
    }
}

impl From<HyperError> for CertError {
    fn from(e: HyperError) -> Self {
        match e {
            HyperError::LemmaFalsified(m) => CertError::LemmaFalsified(m),
            HyperError::CapExceeded(c) => CertError::CapExceeded(format!("subgroup cap {c}")),
            HyperError::Group(GroupError::OrderCapExceeded(s)) => CertError::CapExceeded(format!("order of A mod {s}")),
            HyperError::Group(g) => CertError::Group(g),
            other => CertError::InvalidRequest(other.to_string()),
        }
    }
}

/// S ∪ S⁻¹ without repeats, in a fixed order.
pub fn symmetric(grp: &Semidirect, gens: &GeneratingSet) -> Result<Vec<GroupElement>, GroupError> {
    let mut out: Vec<GroupElement> = Vec::new();
    for s in &gens.elements {
        for x in [s.clone(), grp.inv(s)?] {
            if !out.contains(&x) {
                out.push(x);
            }
        }
    }
    Ok(out)
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MatrixAnalysis {
    pub matrix: IntMatrix,
    #[serde(with = "crate::json::bigint_str")]
    pub det: BigInt,
    pub root_of_unity: bool,
    /// i_k = [Z^n : (I − A^k)Z^n] for k = 1..=L, zero when infinite.
    #[serde(with = "crate::json::vec_bigint_str")]
    pub indices: Vec<BigInt>,
    /// K = i_1 ⋯ i_L.
    #[serde(with = "crate::json::bigint_str")]
    pub k_product: BigInt,
}

pub fn analyze(a: &IntMatrix, window: u64) -> MatrixAnalysis {
    let indices: Vec<BigInt> = (1..=window).map(|k| index_ik(a, k)).collect();
    MatrixAnalysis {
        matrix: a.clone(),
        det: a.det(),
        root_of_unity: has_root_of_unity_eigenvalue(a),
        k_product: indices.iter().product(),
        indices,
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    Exhaustive,
    Sampling,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Caps {
    pub prime_candidates: u64,
    pub matrix_order: u64,
    /// Largest r = s·|A_s|. Preimage slopes divide r and are powered exactly,
    /// so this bounds the size of every A^d the checks touch.
    pub r: u64,
    /// Largest |F| enumerated in exhaustive mode, and largest sampled
    /// subgroup closed explicitly.
    pub subgroup_elements: u64,
    pub sample_attempts: usize,
    #[serde(with = "crate::json::rational_str")]
    pub cover_r_max: BigRational,
}

impl Default for Caps {
    fn default() -> Self {
        Caps {
            prime_candidates: 1_000_000,
            matrix_order: 10_000_000,
            r: 100_000,
            subgroup_elements: 20_000,
            sample_attempts: 20_000,
            cover_r_max: BigRational::from_integer(64.into()),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CertRequest {
    pub matrix: IntMatrix,
    #[serde(rename = "L")]
    pub window: u64,
    #[serde(with = "crate::json::rational_str")]
    pub eps: BigRational,
    pub gens: GeneratingSet,
    pub mode: Mode,
    pub samples: usize,
    pub seed: u64,
    #[serde(with = "crate::json::rational_str")]
    pub rho: BigRational,
    pub caps: Caps,
}

impl CertRequest {
    pub fn new(matrix: IntMatrix, window: u64, eps: BigRational, gens: GeneratingSet) -> Self {
        CertRequest {
            matrix,
            window,
            eps,
            gens,
            mode: Mode::Sampling,
            samples: 100,
            seed: 0,
            rho: BigRational::new(9.into(), 10.into()),
            caps: Caps::default(),
        }
    }

    /// e_1, …, e_n and t.
    pub fn standard_gens(n: usize) -> GeneratingSet {
        let mut elements: Vec<GroupElement> = (0..n)
            .map(|i| GroupElement::lattice((0..n).map(|j| BigInt::from(u8::from(i == j))).collect()))
            .collect();
        elements.push(GroupElement::new(vec![BigInt::zero(); n], 1));
        GeneratingSet { elements }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Setup {
    #[serde(with = "crate::json::vec_bigint_str")]
    pub indices: Vec<BigInt>,
    #[serde(with = "crate::json::bigint_str")]
    pub k_product: BigInt,
    pub primes: [u64; 2],
    pub s: u64,
    pub order_a_s: u64,
    pub r: u64,
}

pub fn setup(req: &CertRequest) -> Result<Setup, CertError> {
    let analysis = analyze(&req.matrix, req.window);
    if analysis.root_of_unity {
        return Err(CertError::EigenvalueRootOfUnity);
    }
    if analysis.indices.iter().any(|i| i.is_zero()) {
        return Err(CertError::EigenvalueRootOfUnity);
    }
    let k = analysis.k_product.to_biguint().expect("indices are nonnegative");
    let primes = dirichlet_primes(&k, &BigUint::from(req.window), 2, req.caps.prime_candidates).map_err(|e| match e {
        GroupError::SearchBudgetExceeded(n) => CertError::PrimeSearchExhausted(format!("{n} candidates")),
        other => CertError::Group(other),
    })?;
    let p: Vec<u64> = primes
        .iter()
        .map(|p| p.to_u64().ok_or_else(|| CertError::CapExceeded(format!("prime {p} exceeds 64 bits"))))
        .collect::<Result<_, _>>()?;
    let s = p[0].checked_mul(p[1]).ok_or_else(|| CertError::CapExceeded("s exceeds 64 bits".into()))?;
    let order = matrix_order_mod_capped(&req.matrix, s, req.caps.matrix_order).map_err(|e| match e {
        GroupError::OrderCapExceeded(_) => CertError::CapExceeded(format!("order of A mod {s}")),
        other => CertError::Group(other),
    })?;
    let r = s.checked_mul(order).ok_or_else(|| CertError::CapExceeded("r exceeds 64 bits".into()))?;
    if r > req.caps.r {
        return Err(CertError::CapExceeded(format!("r = {r} exceeds cap {}", req.caps.r)));
    }
    Ok(Setup { indices: analysis.indices, k_product: analysis.k_product, primes: [p[0], p[1]], s, order_a_s: order, r })
}

/// Which contracting construction a subgroup is sent to.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ConstructionId {
    /// Line map for Z^n ⋊ lZ.
    Line { l: u64 },
    /// Nerve map for (qZ)^n ⋊ Z.
    Nerve { q: u64 },
}

impl ConstructionId {
    fn of(tag: &CaseTag) -> Self {
        match tag {
            CaseTag::SubgroupOfZnSemidirectqZ { q } => ConstructionId::Line { l: *q },
            CaseTag::LatticeSemidirectDirect { l } => ConstructionId::Line { l: *l },
            CaseTag::ConjugateIntoLatticeSemidirect { q, .. } => ConstructionId::Nerve { q: *q },
        }
    }

    fn hbar(&self, n: usize) -> Subgroup {
        let zero = vec![BigInt::zero(); n];
        match self {
            ConstructionId::Line { l } => {
                Subgroup { lattice: Lattice::full(n), slope: Some(Slope { u: zero, d: *l as i64 }) }
            }
            ConstructionId::Nerve { q } => {
                Subgroup { lattice: Lattice::scaled(n, &BigInt::from(*q)), slope: Some(Slope { u: zero, d: 1 }) }
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ConstructionReport {
    Line(LineReport),
    Nerve {
        #[serde(flatten)]
        report: NerveReport,
        /// Parameter search history; not replayed by `verify`.
        attempts: Vec<Attempt>,
    },
    Failed {
        error: String,
    },
}

impl ConstructionReport {
    pub fn passed(&self) -> bool {
        match self {
            ConstructionReport::Line(r) => r.passed,
            ConstructionReport::Nerve { report, .. } => report.passed,
            ConstructionReport::Failed { .. } => false,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SubgroupRecord {
    pub gens: Vec<FiniteElement>,
    pub order: u64,
    pub witness: HyperWitness,
    /// Normal form of π⁻¹(H).
    pub preimage: Subgroup,
    pub lemma: LemmaOutcome,
    pub case: CaseTag,
    pub construction: ConstructionId,
    pub coset_check: CosetCheck,
    pub passed: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Status {
    Passed,
    Failed,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Timings {
    pub setup_ms: u128,
    pub subgroups_ms: u128,
    pub constructions_ms: u128,
    pub coset_checks_ms: u128,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Certificate {
    pub schema: String,
    pub request: CertRequest,
    pub status: Status,
    pub setup: Setup,
    /// ⌈2·max|k_s|/ε⌉.
    #[serde(with = "crate::json::bigint_str")]
    pub l_min: BigInt,
    pub subgroups: Vec<SubgroupRecord>,
    pub constructions: BTreeMap<String, ConstructionReport>,
    pub coset_sampling: CosetSampling,
    pub notes: Vec<String>,
    pub timings: Timings,
}

const NOTES: [&str; 2] = [
    "line construction: t^k acts on the line by translation by k/l",
    "nerve construction: dimension bound grows with R, which grows as eps shrinks",
];

fn construction_key(id: &ConstructionId) -> String {
    match id {
        ConstructionId::Line { l } => format!("line:{l}"),
        ConstructionId::Nerve { q } => format!("nerve:{q}"),
    }
}

struct Classified {
    gens: Vec<FiniteElement>,
    order: u64,
    witness: HyperWitness,
    preimage: Subgroup,
    lemma: LemmaOutcome,
    case: CaseTag,
}

fn classify_one(
    fq: &FiniteQuotient,
    ctx: &ClassifyContext,
    setup: &Setup,
    gens: Vec<FiniteElement>,
    witness: HyperWitness,
) -> Result<Classified, CertError> {
    let shape = QuotientShape::from_gens(fq, &gens);
    verify_witness_shape(fq, &gens, &witness).map_err(|e| CertError::ClassificationFailed(e.to_string()))?;
    let lemma = check_lemma_hyp_elm_shape(fq, &shape, setup.primes[0], setup.primes[1])?;
    let case = classify_preimage(ctx, &shape.preimage, &lemma)?;
    Ok(Classified { order: shape.order(fq), gens, witness, preimage: shape.preimage, lemma, case })
}

enum Built<'a> {
    Line(LineMap),
    Nerve(NerveMap<'a>),
}

fn coset_seed(seed: u64, index: usize) -> u64 {
    seed.wrapping_mul(0x9e37_79b9_7f4a_7c15).wrapping_add(index as u64)
}

fn run_coset_check(
    grp: &Semidirect,
    built: &Built,
    id: &ConstructionId,
    c: &Classified,
    req: &CertRequest,
    sampling: &CosetSampling,
    seed: u64,
) -> Result<CosetCheck, CertError> {
    let n = grp.dim();
    let hbar = id.hbar(n);
    let conjugator = c.case.conjugator(n);
    match built {
        Built::Line(m) => {
            let f = m.clone();
            let map = CosetMap {
                induced: InducedComplex::new(grp, hbar, m.clone()),
                fmap: move |g: &GroupElement| f.eval(g),
                conjugator,
            };
            check_coset_map(&map, &c.preimage, &req.gens, &req.eps, sampling, seed)
        }
        Built::Nerve(m) => {
            let f = m.clone();
            let map = CosetMap {
                induced: InducedComplex::new(grp, hbar, m.clone()),
                fmap: move |g: &GroupElement| f.eval(g),
                conjugator,
            };
            check_coset_map(&map, &c.preimage, &req.gens, &req.eps, sampling, seed)
        }
    }
}

/// Either searches the cover parameters or replays the recorded ones.
fn build<'a>(
    grp: &'a Semidirect,
    id: &ConstructionId,
    req: &CertRequest,
    recorded: Option<&ConstructionReport>,
) -> (Option<Built<'a>>, ConstructionReport) {
    let seed = req.seed;
    let out = match id {
        ConstructionId::Line { l } => build_line_map(grp, &BigInt::from(*l), &req.gens, &req.eps, 200, seed)
            .map(|(m, r)| (Built::Line(m), ConstructionReport::Line(r))),
        ConstructionId::Nerve { q } => match recorded {
            Some(ConstructionReport::Nerve { report, attempts }) => {
                build_nerve_map(grp, *q, &req.gens, &req.eps, report.params.clone(), seed)
                    .map(|(m, r)| (Built::Nerve(m), ConstructionReport::Nerve { report: r, attempts: attempts.clone() }))
            }
            _ => search_nerve_map(grp, *q, &req.gens, &req.eps, &req.rho, &req.caps.cover_r_max, seed)
                .map(|(m, r, attempts)| (Built::Nerve(m), ConstructionReport::Nerve { report: r, attempts })),
        },
    };
    match out {
        Ok((b, r)) => (Some(b), r),
        Err(e) => (None, ConstructionReport::Failed { error: e.to_string() }),
    }
}

fn validate(req: &CertRequest) -> Result<Semidirect, CertError> {
    if !req.eps.is_positive() {
        return Err(CertError::InvalidRequest("eps must be positive".into()));
    }
    if req.window < 1 {
        return Err(CertError::InvalidRequest("L must be at least 1".into()));
    }
    if req.gens.elements.is_empty() {
        return Err(CertError::InvalidRequest("generating set is empty".into()));
    }
    let grp = Semidirect::new(req.matrix.clone())?;
    if req.gens.elements.iter().any(|g| g.v.len() != grp.dim()) {
        return Err(CertError::InvalidRequest("generator dimension does not match A".into()));
    }
    Ok(grp)
}

/// Everything after subgroup selection; shared by `pipeline` and `verify`.
fn assemble(
    req: &CertRequest,
    grp: &Semidirect,
    setup: Setup,
    classified: Vec<Classified>,
    recorded: Option<&BTreeMap<String, ConstructionReport>>,
    mut timings: Timings,
) -> Certificate {
    let sampling = CosetSampling::default();
    let l_min = min_passing_l(max_abs_k(&req.gens), &req.eps);
    let t = Instant::now();
    let mut ids: Vec<ConstructionId> = classified.iter().map(|c| ConstructionId::of(&c.case)).collect();
    ids.sort();
    ids.dedup();
    let built: Vec<(ConstructionId, Option<Built>, ConstructionReport)> = ids
        .par_iter()
        .map(|id| {
            let prev = recorded.and_then(|r| r.get(&construction_key(id)));
            let (b, r) = build(grp, id, req, prev);
            (id.clone(), b, r)
        })
        .collect();
    timings.constructions_ms = t.elapsed().as_millis();
    let t = Instant::now();
    let subgroups: Vec<SubgroupRecord> = classified
        .into_par_iter()
        .enumerate()
        .map(|(i, c)| {
            let id = ConstructionId::of(&c.case);
            let (_, b, report) = built.iter().find(|(x, _, _)| *x == id).expect("built every id");
            let coset_check = match b {
                Some(b) => run_coset_check(grp, b, &id, &c, req, &sampling, coset_seed(req.seed, i)).unwrap_or(
                    CosetCheck {
                        descent_samples: 0,
                        descent_ok: false,
                        equivariance_samples: 0,
                        max_defect: BigRational::zero(),
                        passed: false,
                    },
                ),
                None => CosetCheck {
                    descent_samples: 0,
                    descent_ok: false,
                    equivariance_samples: 0,
                    max_defect: BigRational::zero(),
                    passed: false,
                },
            };
            let passed = coset_check.passed && report.passed() && verify_case(grp, &c.preimage, &c.case);
            SubgroupRecord {
                gens: c.gens,
                order: c.order,
                witness: c.witness,
                preimage: c.preimage,
                lemma: c.lemma,
                case: c.case,
                construction: id,
                coset_check,
                passed,
            }
        })
        .collect();
    timings.coset_checks_ms = t.elapsed().as_millis();
    let constructions: BTreeMap<String, ConstructionReport> =
        built.into_iter().map(|(id, _, r)| (construction_key(&id), r)).collect();
    let all_passed = !subgroups.is_empty() && subgroups.iter().all(|s| s.passed);
    Certificate {
        schema: SCHEMA.into(),
        request: req.clone(),
        status: if all_passed { Status::Passed } else { Status::Failed },
        setup,
        l_min,
        subgroups,
        constructions,
        coset_sampling: sampling,
        notes: NOTES.iter().map(|s| s.to_string()).collect(),
        timings,
    }
}

/// F = (Z/s)^n ⋊ Z/r; a group too large to index is a resource limit.
fn quotient(req: &CertRequest, setup: &Setup) -> Result<FiniteQuotient, CertError> {
    FiniteQuotientDesc::new(&req.matrix, setup.s, setup.r)
        .and_then(|d| FiniteQuotient::new(&d))
        .map_err(|e| CertError::CapExceeded(format!("finite quotient: {e}")))
}

pub fn pipeline(req: &CertRequest) -> Result<Certificate, CertError> {
    let grp = validate(req)?;
    let mut timings = Timings::default();
    let t = Instant::now();
    let setup = setup(req)?;
    timings.setup_ms = t.elapsed().as_millis();
    let t = Instant::now();
    let fq = quotient(req, &setup)?;
    let found: Vec<(Vec<FiniteElement>, HyperWitness)> = match req.mode {
        Mode::Exhaustive => enumerate_hyperelementary(&fq, req.caps.subgroup_elements)?
            .into_iter()
            .map(|h| (h.subgroup.gens.iter().map(|&c| fq.decode(c)).collect(), h.witness))
            .collect(),
        Mode::Sampling => {
            let cfg = SampleConfig {
                samples: req.samples,
                seed: req.seed,
                max_gens: 3,
                enumeration_cap: req.caps.subgroup_elements,
                attempt_cap: req.caps.sample_attempts,
            };
            sample_hyperelementary(&fq, &cfg)?.into_iter().map(|s| (s.gens, s.witness)).collect()
        }
    };
    let ctx = ClassifyContext { grp: &grp, window: req.window, l_min: min_passing_l(max_abs_k(&req.gens), &req.eps) };
    let classified: Vec<Classified> = found
        .into_par_iter()
        .map(|(gens, w)| classify_one(&fq, &ctx, &setup, gens, w))
        .collect::<Result<_, _>>()?;
    timings.subgroups_ms = t.elapsed().as_millis();
    Ok(assemble(req, &grp, setup, classified, None, timings))
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct VerifyReport {
    pub ok: bool,
    pub status: Status,
    pub subgroups: usize,
    pub mismatches: Vec<String>,
}

/// Replays every check from the certificate alone: the number theory, each
/// subgroup's witness, lemma outcome, case and coset checks, and each
/// construction at its recorded parameters.
pub fn verify(cert: &Certificate) -> Result<VerifyReport, CertError> {
    let mut mismatches = Vec::new();
    if cert.schema != SCHEMA {
        mismatches.push(format!("unknown schema {}", cert.schema));
    }
    let req = &cert.request;
    let grp = validate(req)?;
    let setup = setup(req)?;
    if setup != cert.setup {
        mismatches.push("number-theoretic setup differs".into());
    }
    let fq = quotient(req, &setup)?;
    let ctx = ClassifyContext { grp: &grp, window: req.window, l_min: min_passing_l(max_abs_k(&req.gens), &req.eps) };
    let classified: Vec<Result<Classified, CertError>> = cert
        .subgroups
        .par_iter()
        .map(|s| classify_one(&fq, &ctx, &setup, s.gens.clone(), s.witness.clone()))
        .collect();
    let mut ok_classified = Vec::new();
    for (i, c) in classified.into_iter().enumerate() {
        match c {
            Ok(c) => ok_classified.push(c),
            Err(e) => mismatches.push(format!("subgroup {i}: {e}")),
        }
    }
    if mismatches.is_empty() {
        let replay = assemble(req, &grp, setup, ok_classified, Some(&cert.constructions), Timings::default());
        if replay.l_min != cert.l_min {
            mismatches.push("l_min differs".into());
        }
        for (i, (a, b)) in replay.subgroups.iter().zip(&cert.subgroups).enumerate() {
            if a != b {
                mismatches.push(format!("subgroup {i}: replayed record differs"));
            }
        }
        for (k, v) in &replay.constructions {
            if cert.constructions.get(k) != Some(v) {
                mismatches.push(format!("construction {k}: replayed report differs"));
            }
        }
        if replay.constructions.len() != cert.constructions.len() {
            mismatches.push("construction list differs".into());
        }
        if replay.status != cert.status {
            mismatches.push("status differs".into());
        }
    }
    Ok(VerifyReport {
        ok: mismatches.is_empty() && cert.status == Status::Passed,
        status: cert.status,
        subgroups: cert.subgroups.len(),
        mismatches,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cat() -> IntMatrix {
        IntMatrix::from_i64(&[&[2, 1], &[1, 1]]).unwrap()
    }

    fn half() -> BigRational {
        BigRational::new(1.into(), 2.into())
    }

    #[test]
    fn setup_for_the_cat_map() {
        let req = CertRequest::new(cat(), 2, half(), CertRequest::standard_gens(2));
        let s = setup(&req).unwrap();
        assert_eq!(s.indices, vec![BigInt::from(1), BigInt::from(5)]);
        assert_eq!(s.k_product, BigInt::from(5));
        assert_eq!(s.primes, [11, 31]);
        assert_eq!(s.s, 341);
        // A has order 5 mod 11 and 15 mod 31 (oracle: direct powering)
        assert_eq!(s.order_a_s, 15);
        assert_eq!(s.r, 341 * 15);
    }

    #[test]
    fn unipotent_is_rejected() {
        let a = IntMatrix::from_i64(&[&[1, 1], &[0, 1]]).unwrap();
        let req = CertRequest::new(a, 2, half(), CertRequest::standard_gens(2));
        assert_eq!(pipeline(&req).unwrap_err(), CertError::EigenvalueRootOfUnity);
    }

    #[test]
    fn bad_requests() {
        let mut req = CertRequest::new(cat(), 2, half(), CertRequest::standard_gens(2));
        req.eps = BigRational::zero();
        assert!(matches!(pipeline(&req), Err(CertError::InvalidRequest(_))));
        let mut req = CertRequest::new(cat(), 0, half(), CertRequest::standard_gens(2));
        assert!(matches!(pipeline(&req.clone()), Err(CertError::InvalidRequest(_))));
        req.window = 2;
        req.gens.elements.clear();
        assert!(matches!(pipeline(&req), Err(CertError::InvalidRequest(_))));
    }

    #[test]
    fn exhaustive_mode_respects_the_cap() {
        let mut req = CertRequest::new(cat(), 2, half(), CertRequest::standard_gens(2));
        req.mode = Mode::Exhaustive;
        assert!(matches!(pipeline(&req), Err(CertError::CapExceeded(_))));
    }

    #[test]
    fn small_sampling_run_verifies_and_detects_tampering() {
        let mut req = CertRequest::new(cat(), 2, half(), CertRequest::standard_gens(2));
        req.samples = 12;
        let cert = pipeline(&req).unwrap();
        assert_eq!(cert.status, Status::Passed, "{:#?}", cert.constructions);
        assert_eq!(cert.subgroups.len(), 12);
        let json = serde_json::to_string(&cert).unwrap();
        let back: Certificate = serde_json::from_str(&json).unwrap();
        assert_eq!(back, cert);
        let report = verify(&back).unwrap();
        assert!(report.ok, "{report:?}");

        let mut bad = cert.clone();
        bad.setup.primes = [11, 41];
        assert!(!verify(&bad).unwrap().ok);
        let mut bad = cert.clone();
        bad.subgroups[0].coset_check.max_defect = BigRational::zero();
        bad.subgroups[0].coset_check.equivariance_samples += 1;
        assert!(!verify(&bad).unwrap().ok);
        let mut bad = cert;
        bad.subgroups[0].witness.quotient_order += 1;
        assert!(!verify(&bad).unwrap().ok);
    }

    #[test]
    fn symmetric_closes_under_inverse() {
        let grp = Semidirect::new(cat()).unwrap();
        let s = symmetric(&grp, &CertRequest::standard_gens(2)).unwrap();
        assert_eq!(s.len(), 6);
        for x in &s {
            assert!(s.contains(&grp.inv(x).unwrap()));
        }
    }
}
