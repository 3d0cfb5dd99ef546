//! Experiment configuration, machine-readable reports, and the statistics
//! shared by every experiment command.
//!
//! One 64-bit seed fully determines a run: per-subsystem randomness is
//! forked from it by domain-tagged reseeding, so repeated runs with the same
//! config produce byte-identical reports (modulo the wall-clock field).

use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use serde::Serialize;
use sha2::{Digest, Sha256};
use statrs::distribution::{ChiSquared, ContinuousCDF};
use thiserror::Error;

use crate::batchkeys::{self, Backend, BasisSpec, PprfSeed};
use crate::bits::Bits;
use crate::compile::{
    self, compile_v1_run, compile_v2_run, fs_transform_run, fs_verify, CompiledVerifier, FsRun,
};
use crate::delegate::{
    self, batch_run, parallel_repeat, semi_succinct_run, DelegateConfig, DelegateProver,
    ParityCheck, StabilizerCheckInstance,
};
use crate::extract::{
    self, all_two_to_one_distribution, extracted_distribution, verifier_output_distribution,
    MaliciousProver,
};
use crate::mproto::{self, GoodPolicy, HonestProver, ProtocolParams};
use crate::qsim::{OutcomeDistribution, PauliKind, PureState, RegisterLayout};
use crate::tol;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("config: {0}")]
    Config(String),
    #[error("support mismatch: distribution has {want} outcomes, counts {got}")]
    SupportMismatch { got: usize, want: usize },
    #[error("counts must be nonnegative and not all zero")]
    BadCounts,
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Protocol(#[from] mproto::ProtocolError),
    #[error(transparent)]
    Extract(#[from] extract::ExtractError),
    #[error(transparent)]
    Delegate(#[from] delegate::DelegateError),
    #[error(transparent)]
    Compile(#[from] compile::CompileError),
    #[error(transparent)]
    Keys(#[from] batchkeys::BatchKeyError),
    #[error(transparent)]
    Sim(#[from] crate::qsim::SimError),
}

pub type Result<T> = std::result::Result<T, HarnessError>;

// ----------------------------------------------------------------------
// statistics
// ----------------------------------------------------------------------

/// Total-variation distance (1/2)Σ|p−q| between same-support distributions.
pub fn tv_distance(d0: &OutcomeDistribution, d1: &OutcomeDistribution) -> Result<f64> {
    if d0.bit_len() != d1.bit_len() {
        return Err(HarnessError::SupportMismatch {
            got: 1 << d1.bit_len(),
            want: 1 << d0.bit_len(),
        });
    }
    Ok(d0.tv_distance(d1))
}

/// Pearson chi-square p-value of observed counts against an expected
/// distribution, with (support − 1) degrees of freedom.
pub fn chi_square(expected: &OutcomeDistribution, counts: &[u64]) -> Result<f64> {
    let support = 1usize << expected.bit_len();
    if counts.len() != support {
        return Err(HarnessError::SupportMismatch { got: counts.len(), want: support });
    }
    let total: u64 = counts.iter().sum();
    if total == 0 {
        return Err(HarnessError::BadCounts);
    }
    let mut stat = 0.0f64;
    for (i, &c) in counts.iter().enumerate() {
        let e = expected.probs()[i] * total as f64;
        if e > 0.0 {
            stat += (c as f64 - e).powi(2) / e;
        } else if c > 0 {
            return Ok(0.0); // observed mass where none is expected
        }
    }
    let dof = (support - 1) as f64;
    let chi = ChiSquared::new(dof).expect("dof >= 1");
    Ok(1.0 - chi.cdf(stat))
}

/// Fork a domain-tagged 32-byte seed from the master run seed.
pub fn fork_seed(master: u64, tag: &str) -> [u8; 32] {
    let mut h = Sha256::new();
    h.update(master.to_le_bytes());
    h.update(tag.as_bytes());
    h.finalize().into()
}

pub fn fork_rng(master: u64, tag: &str) -> ChaCha20Rng {
    ChaCha20Rng::from_seed(fork_seed(master, tag))
}

// ----------------------------------------------------------------------
// config and report
// ----------------------------------------------------------------------

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CommandKind {
    Protocol,
    ExtractCheck,
    Delegate,
    Batch,
    Compile,
    Fs,
    Prf,
}

impl CommandKind {
    pub fn name(&self) -> &'static str {
        match self {
            CommandKind::Protocol => "protocol",
            CommandKind::ExtractCheck => "extract-check",
            CommandKind::Delegate => "delegate",
            CommandKind::Batch => "batch",
            CommandKind::Compile => "compile",
            CommandKind::Fs => "fs",
            CommandKind::Prf => "prf",
        }
    }
}

#[derive(Clone, Debug)]
pub struct ExperimentConfig {
    pub command: CommandKind,
    pub n: u32,
    pub ell: usize,
    pub seed: u64,
    pub trials: usize,
    pub backend: Backend,
    pub tolerance: Option<f64>,
    /// delegate: instance file contents (already read) and repetition count
    pub instance_text: Option<String>,
    pub reps: usize,
    /// compile: protocol version and whether to apply the hash-chain
    /// transform
    pub version: u8,
    pub fs: bool,
    /// batch: number of parallel instances
    pub batch_size: usize,
    /// protocol: persist the first session transcript here
    pub transcript_path: Option<std::path::PathBuf>,
}

impl ExperimentConfig {
    pub fn new(command: CommandKind) -> ExperimentConfig {
        ExperimentConfig {
            command,
            n: 2,
            ell: 1,
            seed: 1,
            trials: 20,
            backend: Backend::Trivial,
            tolerance: None,
            instance_text: None,
            reps: 4,
            version: 2,
            fs: false,
            batch_size: 2,
            transcript_path: None,
        }
    }

    fn exact_tol(&self) -> f64 {
        self.tolerance.unwrap_or(tol::EXACT)
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct CheckLine {
    pub name: String,
    pub value: f64,
    pub bound: f64,
    pub pass: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct Report {
    pub command: String,
    pub n: u32,
    pub ell: usize,
    pub seed: u64,
    pub trials: usize,
    pub backend: String,
    pub checks: Vec<CheckLine>,
    pub pass: bool,
    pub details: serde_json::Value,
    pub library_version: String,
    pub wall_clock_ms: u128,
}

impl Report {
    fn new(config: &ExperimentConfig) -> Report {
        Report {
            command: config.command.name().to_string(),
            n: config.n,
            ell: config.ell,
            seed: config.seed,
            trials: config.trials,
            backend: match config.backend {
                Backend::Trivial => "trivial".to_string(),
                Backend::Compressed => "compressed".to_string(),
            },
            checks: Vec::new(),
            pass: true,
            details: serde_json::Value::Null,
            library_version: env!("CARGO_PKG_VERSION").to_string(),
            wall_clock_ms: 0,
        }
    }

    fn push(&mut self, name: impl Into<String>, value: f64, bound: f64, pass: bool) {
        self.checks.push(CheckLine { name: name.into(), value, bound, pass });
        self.pass &= pass;
    }

    /// Value must stay at or below the bound.
    fn push_max(&mut self, name: impl Into<String>, value: f64, bound: f64) {
        self.push(name, value, bound, value <= bound);
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

// ----------------------------------------------------------------------
// command dispatch
// ----------------------------------------------------------------------

pub fn run_command(config: &ExperimentConfig) -> Result<Report> {
    if !(1..=4).contains(&config.ell) {
        return Err(HarnessError::Config(format!(
            "claw-free width {} out of range 1..=4",
            config.ell
        )));
    }
    if config.n == 0 {
        return Err(HarnessError::Config("protocol width must be at least 1".into()));
    }
    ProtocolParams::new(config.n, config.ell).check_commit_budget(1)?;
    let start = Instant::now();
    let mut report = Report::new(config);
    match config.command {
        CommandKind::Protocol => protocol_suite(config, &mut report)?,
        CommandKind::ExtractCheck => extract_suite(config, &mut report)?,
        CommandKind::Delegate => delegate_suite(config, &mut report)?,
        CommandKind::Batch => batch_suite(config, &mut report)?,
        CommandKind::Compile => compile_suite(config, &mut report)?,
        CommandKind::Fs => fs_suite(config, &mut report)?,
        CommandKind::Prf => prf_suite(config, &mut report)?,
    }
    report.wall_clock_ms = start.elapsed().as_millis();
    Ok(report)
}

fn random_sigma(n: u32, rng: &mut ChaCha20Rng) -> PureState {
    let layout = RegisterLayout::new([("w", n as usize)]).expect("small layout");
    let amps = crate::qsim::random_state_vector(1 << n, rng);
    PureState::from_amplitudes(layout, amps).expect("normalized")
}

fn protocol_suite(config: &ExperimentConfig, report: &mut Report) -> Result<()> {
    let params = ProtocolParams {
        n: config.n,
        ell: config.ell,
        backend: config.backend,
        good_policy: GoodPolicy::All,
    };
    params.check_commit_budget(0)?;
    let mut rng = fork_rng(config.seed, "protocol");

    // test-round completeness over sampled sessions
    let mut accepts = 0usize;
    for t in 0..config.trials {
        let basis = BasisSpec::TruthTable((0..config.n).map(|i| (i + t as u32) % 2 == 1).collect());
        let sigma = random_sigma(config.n, &mut rng);
        let mut prover = HonestProver::new(sigma);
        let (pk, _sk) = mproto::mp_gen(&params, &basis, &mut rng)?;
        let y = {
            use mproto::SessionProver;
            prover.commit(&pk, &mut rng)?
        };
        let z = {
            use mproto::SessionProver;
            prover.open(false, &mut rng)?
        };
        if mproto::mp_test(&pk, &y, &z)? == mproto::Verdict::Accept {
            accepts += 1;
        }
    }
    report.push(
        "test-round-completeness",
        accepts as f64 / config.trials as f64,
        1.0,
        accepts == config.trials,
    );

    // measurement-round completeness: exact output distribution vs direct
    // measurement, all h, a few random states
    let mut max_tv: f64 = 0.0;
    for h in Bits::all(config.n as usize) {
        let basis = BasisSpec::from_bits(&h);
        for t in 0..3usize {
            let sigma = random_sigma(config.n, &mut rng);
            let want = sigma.measure_bases("w", &h)?;
            let prover = MaliciousProver::honest(sigma);
            let d = verifier_output_distribution(
                &params,
                &basis,
                &prover,
                config.seed ^ t as u64,
            )?;
            max_tv = max_tv.max(d.tv_distance(&want));
        }
    }
    report.push_max("measurement-round-tv", max_tv, config.exact_tol());

    // transcript determinism and optional persistence
    let basis = BasisSpec::constant(false, config.n);
    let run = |seed: u64| -> Result<Vec<u8>> {
        let mut prover = HonestProver::new(PureState::alloc(
            RegisterLayout::new([("w", config.n as usize)]).expect("layout"),
        ));
        Ok(mproto::run_seeded_session(&params, &basis, &mut prover, seed)?.to_bytes())
    };
    let t1 = run(config.seed)?;
    let t2 = run(config.seed)?;
    report.push(
        "transcript-determinism",
        (t1 == t2) as u8 as f64,
        1.0,
        t1 == t2,
    );
    if let Some(path) = &config.transcript_path {
        std::fs::write(path, &t1)?;
    }
    Ok(())
}

fn extract_suite(config: &ExperimentConfig, report: &mut Report) -> Result<()> {
    let params = ProtocolParams {
        n: config.n,
        ell: config.ell,
        backend: config.backend,
        good_policy: GoodPolicy::All,
    };
    let mut rng = fork_rng(config.seed, "extract");
    let h = Bits::new(u32::MAX, config.n as usize); // all-Hadamard split

    // extraction identity over random attacks
    let mut max_dev: f64 = 0.0;
    let mut detail_rows = Vec::new();
    for t in 0..config.trials {
        let prover = MaliciousProver::random(config.n, config.ell, 1, &mut rng);
        let (set, psi) = extract::samp(&params, &prover, &mut rng)?;
        for (u, v, lhs, rhs) in extract::verify_extracted_claim_all(&set, &psi, &h)? {
            max_dev = max_dev.max((lhs - rhs).abs());
            if t == 0 {
                detail_rows.push(serde_json::json!({
                    "u": u.to_string(),
                    "v": v.to_string(),
                    "lhs": lhs,
                    "rhs": rhs,
                }));
            }
        }
    }
    report.push_max("extracted-state-identity", max_dev, config.exact_tol());

    // honest-prover distribution collapse
    let mut max_out_vs_two: f64 = 0.0;
    let mut max_two_vs_ext: f64 = 0.0;
    for t in 0..3u64 {
        let sigma = random_sigma(config.n, &mut rng);
        let prover = MaliciousProver::honest(sigma);
        let basis = BasisSpec::from_bits(&h);
        let d_out = verifier_output_distribution(&params, &basis, &prover, t)?;
        let d_two = all_two_to_one_distribution(&params, &h, &prover, t)?;
        let d_ext = extracted_distribution(&params, &h, &prover, t)?;
        max_out_vs_two = max_out_vs_two.max(d_out.tv_distance(&d_two));
        max_two_vs_ext = max_two_vs_ext.max(d_two.tv_distance(&d_ext));
    }
    report.push_max("tv-output-vs-two-to-one", max_out_vs_two, config.exact_tol());
    report.push_max("tv-two-to-one-vs-extracted", max_two_vs_ext, config.exact_tol());
    report.details = serde_json::json!({ "first_trial_outcomes": detail_rows });
    Ok(())
}

fn default_instance() -> StabilizerCheckInstance {
    StabilizerCheckInstance::new(
        "default",
        2,
        vec![
            ParityCheck { kind: PauliKind::Z, support: Bits::parse("10"), parity: false },
            ParityCheck { kind: PauliKind::X, support: Bits::parse("01"), parity: false },
        ],
    )
    .expect("default instance is well-formed")
}

fn delegate_cfg(config: &ExperimentConfig) -> DelegateConfig {
    DelegateConfig { ell: config.ell, backend: config.backend, good_policy: GoodPolicy::All }
}

fn delegate_suite(config: &ExperimentConfig, report: &mut Report) -> Result<()> {
    let inst = match &config.instance_text {
        Some(text) => StabilizerCheckInstance::from_text(text)?,
        None => default_instance(),
    };
    let cfg = delegate_cfg(config);
    let mut rng = fork_rng(config.seed, "delegate");

    // honest single repetitions
    let mut accepts = 0usize;
    for _ in 0..config.trials {
        let mut coins = [0u8; 32];
        rng.fill(&mut coins);
        let (a, _) = semi_succinct_run(&inst, &DelegateProver::Honest, &cfg, &coins, &mut rng)?;
        accepts += a as usize;
    }
    report.push(
        "honest-single-acceptance",
        accepts as f64 / config.trials as f64,
        1.0,
        accepts == config.trials,
    );

    // honest parallel repetitions
    let provers: Vec<DelegateProver> =
        (0..config.reps).map(|_| DelegateProver::Honest).collect();
    let mut all = true;
    for _ in 0..config.trials.min(50) {
        all &= parallel_repeat(config.reps, &inst, &provers, &cfg, &mut rng)?;
    }
    report.push("honest-parallel-acceptance", all as u8 as f64, 1.0, all);

    // test-only cheater sits at one half per repetition
    let cheat_trials = 4000usize.max(config.trials);
    let mut cheat_accepts = 0usize;
    for _ in 0..cheat_trials {
        let mut coins = [0u8; 32];
        rng.fill(&mut coins);
        let (a, _) =
            semi_succinct_run(&inst, &DelegateProver::TestOnly, &cfg, &coins, &mut rng)?;
        cheat_accepts += a as usize;
    }
    let freq = cheat_accepts as f64 / cheat_trials as f64;
    let bound = 4.0 * (0.25f64 / cheat_trials as f64).sqrt();
    report.push(
        "test-only-cheater-acceptance",
        freq,
        0.5 + bound,
        (freq - 0.5).abs() <= bound,
    );
    Ok(())
}

fn batch_suite(config: &ExperimentConfig, report: &mut Report) -> Result<()> {
    let cfg = delegate_cfg(config);
    let mut rng = fork_rng(config.seed, "batch");
    let instances: Vec<StabilizerCheckInstance> =
        (0..config.batch_size).map(|_| default_instance()).collect();
    let provers: Vec<DelegateProver> =
        (0..config.batch_size).map(|_| DelegateProver::Honest).collect();
    let mut all = true;
    let mut verifier_bytes = 0usize;
    for _ in 0..config.trials {
        let (a, vb) = batch_run(&instances, &provers, &cfg, &mut rng)?;
        all &= a;
        verifier_bytes = vb;
    }
    report.push("honest-batch-acceptance", all as u8 as f64, 1.0, all);
    report.details = serde_json::json!({ "verifier_bytes": verifier_bytes });
    Ok(())
}

fn compile_suite(config: &ExperimentConfig, report: &mut Report) -> Result<()> {
    let inst = default_instance();
    let cfg = delegate_cfg(config);
    let mut rng = fork_rng(config.seed, "compile");
    let (run, want_rounds) = match config.version {
        1 => (compile_v1_run(&inst, &DelegateProver::Honest, &cfg, &mut rng)?, 12usize),
        2 => (compile_v2_run(&inst, &DelegateProver::Honest, &cfg, &mut rng)?, 8usize),
        v => return Err(HarnessError::Config(format!("unsupported version {v}"))),
    };
    report.push(
        "honest-compiled-acceptance",
        run.transcript.accepted as u8 as f64,
        1.0,
        run.transcript.accepted,
    );
    report.push(
        "round-count",
        run.transcript.round_count() as f64,
        want_rounds as f64,
        run.transcript.round_count() == want_rounds,
    );
    // per-round size accounting
    let sizes: Vec<serde_json::Value> = run
        .transcript
        .rounds
        .iter()
        .enumerate()
        .map(|(i, r)| {
            serde_json::json!({
                "round": i + 1,
                "role": match r.role {
                    compile::Role::Verifier => "verifier",
                    compile::Role::Prover => "prover",
                },
                "bytes": r.byte_len(),
            })
        })
        .collect();
    report.details = serde_json::json!({ "round_sizes": sizes });

    if config.fs {
        let fs_run = fs_transform_run(&inst, &DelegateProver::Honest, &cfg, &mut rng)?;
        report.push(
            "fs-honest-acceptance",
            fs_run.accepted as u8 as f64,
            1.0,
            fs_run.accepted,
        );
    }
    Ok(())
}

fn fs_suite(config: &ExperimentConfig, report: &mut Report) -> Result<()> {
    let inst = default_instance();
    let cfg = delegate_cfg(config);
    let mut rng = fork_rng(config.seed, "fs");
    let run = fs_transform_run(&inst, &DelegateProver::Honest, &cfg, &mut rng)?;
    report.push("fs-honest-acceptance", run.accepted as u8 as f64, 1.0, run.accepted);

    // random tamperings must all be rejected
    let mut rejected = 0usize;
    let tamper_trials = config.trials.max(100);
    for _ in 0..tamper_trials {
        let mut tampered = clone_fs_run(&run);
        let msg = rng.gen_range(0..tampered.prover_messages.len());
        let payload = &mut tampered.prover_messages[msg];
        let byte = rng.gen_range(0..payload.len());
        let bit = rng.gen_range(0..8);
        payload[byte] ^= 1 << bit;
        if !fs_verify(&inst, &tampered).unwrap_or(false) {
            rejected += 1;
        }
    }
    report.push(
        "fs-tamper-rejections",
        rejected as f64,
        tamper_trials as f64,
        rejected == tamper_trials,
    );
    Ok(())
}

fn clone_fs_run(run: &FsRun) -> FsRun {
    FsRun {
        instance_label: run.instance_label.clone(),
        first_message: run.first_message.clone(),
        prover_messages: run.prover_messages.clone(),
        verifier: CompiledVerifier {
            cfg: run.verifier.cfg.clone(),
            coins: run.verifier.coins,
            hash: run.verifier.hash.clone(),
            fhe_sk: run.verifier.fhe_sk.clone(),
        },
        accepted: run.accepted,
    }
}

fn prf_suite(config: &ExperimentConfig, report: &mut Report) -> Result<()> {
    // GGM correctness, exhaustive at width ≤ 8
    let mut worst_missing = 0usize;
    let mut punctured_errors = true;
    for width in 1..=8usize {
        let seed = PprfSeed::new(fork_seed(config.seed, &format!("prf-{width}")), width);
        let point = Bits::new((config.seed as u32) & ((1u32 << width) - 1), width);
        let key = batchkeys::prf_puncture(&seed, &point)?;
        punctured_errors &= batchkeys::prf_punc_eval(&key, &point).is_err();
        let mut missing = 0usize;
        for x in Bits::all(width) {
            if x == point {
                continue;
            }
            if batchkeys::prf_punc_eval(&key, &x)? != batchkeys::prf_eval(&seed, &x)? {
                missing += 1;
            }
        }
        worst_missing = worst_missing.max(missing);
    }
    report.push("ggm-puncturing-agreement", worst_missing as f64, 0.0, worst_missing == 0);
    report.push(
        "ggm-punctured-point-errors",
        punctured_errors as u8 as f64,
        1.0,
        punctured_errors,
    );
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tv_distance_checks_support() {
        let a = OutcomeDistribution::point(1, &Bits::parse("0"));
        let b = OutcomeDistribution::point(2, &Bits::parse("00"));
        assert!(tv_distance(&a, &b).is_err());
        assert_eq!(tv_distance(&a, &a).unwrap(), 0.0);
    }

    #[test]
    fn chi_square_fair_coin() {
        let expected = OutcomeDistribution::new(1, vec![0.5, 0.5]);
        let p = chi_square(&expected, &[5000, 5000]).unwrap();
        assert!(p > 0.99, "perfectly fair counts should have p ≈ 1, got {p}");
        let p_skew = chi_square(&expected, &[9000, 1000]).unwrap();
        assert!(p_skew < 1e-6, "grossly skewed counts should have tiny p, got {p_skew}");
    }

    #[test]
    fn chi_square_rejects_support_mismatch() {
        let expected = OutcomeDistribution::new(1, vec![0.5, 0.5]);
        assert!(chi_square(&expected, &[1, 2, 3]).is_err());
        assert!(chi_square(&expected, &[0, 0]).is_err());
    }

    #[test]
    fn reports_are_reproducible_modulo_wall_clock() {
        let mut config = ExperimentConfig::new(CommandKind::Prf);
        config.seed = 42;
        let mut r1 = run_command(&config).unwrap();
        let mut r2 = run_command(&config).unwrap();
        r1.wall_clock_ms = 0;
        r2.wall_clock_ms = 0;
        assert_eq!(r1.to_json(), r2.to_json());
        assert!(r1.pass);
    }

    #[test]
    fn out_of_range_widths_fail_fast() {
        let mut config = ExperimentConfig::new(CommandKind::ExtractCheck);
        config.ell = 5;
        assert!(matches!(run_command(&config), Err(HarnessError::Config(_))));
        config.ell = 1;
        config.n = 0;
        assert!(matches!(run_command(&config), Err(HarnessError::Config(_))));
        config.n = 12; // commit simulation would exceed the qubit cap
        assert!(run_command(&config).is_err());
    }

    #[test]
    fn protocol_command_passes_at_small_sizes() {
        let mut config = ExperimentConfig::new(CommandKind::Protocol);
        config.n = 2;
        config.ell = 1;
        config.seed = 7;
        config.trials = 5;
        let report = run_command(&config).unwrap();
        assert!(report.pass, "{}", report.to_json());
    }

    #[test]
    fn extract_command_passes_at_small_sizes() {
        let mut config = ExperimentConfig::new(CommandKind::ExtractCheck);
        config.n = 1;
        config.ell = 1;
        config.seed = 7;
        config.trials = 2;
        let report = run_command(&config).unwrap();
        assert!(report.pass, "{}", report.to_json());
    }

    #[test]
    fn compile_and_fs_commands_pass() {
        for version in [1u8, 2] {
            let mut config = ExperimentConfig::new(CommandKind::Compile);
            config.version = version;
            config.seed = 9;
            let report = run_command(&config).unwrap();
            assert!(report.pass, "{}", report.to_json());
        }
        let mut config = ExperimentConfig::new(CommandKind::Fs);
        config.seed = 9;
        config.trials = 20;
        let report = run_command(&config).unwrap();
        assert!(report.pass, "{}", report.to_json());
    }
}
