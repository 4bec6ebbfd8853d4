//! Batch entry point: a TOML scenario config plus flags in, a deterministic
//! report out.
//!
//! Reports start with `# key: value` metadata lines followed by CSV rows in
//! a fixed column order per subcommand. Every rational in a config is a
//! `"p/q"` string.

use std::fs;
use std::path::PathBuf;
use std::sync::Arc;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Deserialize;
use thiserror::Error;

use crate::exact::{format_rational, parse_rational, pow2_neg, rat, GenericReal, Rational};
use crate::hypotheses::{
    behaviors_on, default_rationals, halting_presentation, oracle_halting_presentation, sauer_bound,
    some_subset_shattered, stump_presentation, third_first, trace_matrix, HypothesisError,
    StumpPresentation,
};
use crate::learners::{alpha, erm_anytime, erm_behavior_count, erm_realizable, LearnError, TotalErm};
use crate::machines::{enumerate_halting, jump_bit, oracle_programs, OracleTape, Program};
use crate::pac::{
    bad_sample_fn_demo, extract_halting_prefix, extract_jump_bits, pac_validate, PacError,
    PiecewiseUniform, SampleFunction, StumpLearner, StumpSetting, TrialRow, VerdictRule,
};
use crate::spaces::{discrete_naturals, IdealId, LabeledExample, PointDescription};
use crate::weihrauch::{
    check_reduction, constant_stream, lim_transducer, lim_with_witness, stage_builder,
    StrongReduction, Transducer, WeihrauchError,
};

pub const ARTIFACT_VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Parser)]
#[command(name = "compac", version, about = "Computable PAC learning experiments")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    #[command(flatten)]
    pub flags: Flags,
}

#[derive(Debug, Clone, Default, Args)]
pub struct Flags {
    /// TOML scenario file.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Report path; stdout when absent.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, global = true)]
    pub trials: Option<u64>,
    #[arg(long, global = true)]
    pub budget_programs: Option<u64>,
    #[arg(long, global = true)]
    pub budget_steps: Option<u64>,
    #[arg(long, global = true)]
    pub n: Option<u64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ClassName {
    Stump,
    Halting,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ErmMode {
    Realizable,
    Anytime,
    Behavior,
}

#[derive(Debug, Clone, Subcommand)]
pub enum Command {
    /// Shattering scan and VC lower bound.
    Vc {
        #[arg(long, value_enum)]
        class: Option<ClassName>,
    },
    /// ERM against a brute-force scan on generated stump samples.
    Erm {
        #[arg(long, value_enum)]
        mode: Option<ErmMode>,
    },
    /// Coarsening inequality of the threshold learner.
    Stump,
    /// Monte Carlo PAC validation of `A_step`.
    PacValidate,
    /// Halting bits read off a proper learner for the halting class.
    HaltingExtract,
    /// Jump bits read off a proper learner for the oracle halting class.
    JumpExtract,
    /// Halting bits read off the sample function of the coarsened learner.
    BadSampleFn,
    /// Staged ERM reduced to a limit with a witness.
    ReduceCheck,
    /// Instruction listing of a program code.
    Program { code: u64 },
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Vc { .. } => "vc",
            Command::Erm { .. } => "erm",
            Command::Stump => "stump",
            Command::PacValidate => "pac-validate",
            Command::HaltingExtract => "halting-extract",
            Command::JumpExtract => "jump-extract",
            Command::BadSampleFn => "bad-sample-fn",
            Command::ReduceCheck => "reduce-check",
            Command::Program { .. } => "program",
        }
    }
}

/// Scenario file schema. Unknown keys are rejected; flags override keys.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    pub trials: Option<u64>,
    pub budget_programs: Option<u64>,
    pub budget_steps: Option<u64>,
    pub n: Option<u64>,
    pub class: Option<ClassName>,
    pub mode: Option<ErmMode>,
    /// Feature pool size for `vc`.
    pub pool: Option<u64>,
    pub d_max: Option<u64>,
    /// Number of generated samples for `erm`.
    pub samples: Option<u64>,
    pub sample_size: Option<u64>,
    pub ideal_budget: Option<u64>,
    pub epsilon: Option<String>,
    pub delta: Option<String>,
    pub m: Option<u64>,
    pub cutoff: Option<String>,
    /// `"default"` or `"third-first"`.
    pub enumeration: Option<String>,
    /// `"three-sigma"` or `"binomial"`.
    pub verdict: Option<String>,
    /// `"closed-form:<d>"` or `"constant:<n>"`.
    pub sample_function: Option<String>,
    pub oracle_codes: Option<u64>,
    /// Finite-support oracles as `[cell, value]` lists.
    pub oracles: Option<Vec<Vec<[u64; 2]>>>,
    pub stages: Option<u64>,
    pub density_bound: Option<String>,
    pub expect_vc: Option<u64>,
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config: {0}")]
    Config(String),
    #[error("io: {0}")]
    Io(String),
    #[error("run: {0}")]
    Run(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) | CliError::Io(_) => 1,
            CliError::Run(_) => 2,
        }
    }

    /// One-line JSON error record.
    pub fn record(&self) -> String {
        let kind = match self {
            CliError::Config(_) => "config",
            CliError::Io(_) => "io",
            CliError::Run(_) => "run",
        };
        serde_json::json!({ "error": kind, "message": self.to_string() }).to_string()
    }
}

macro_rules! run_err {
    ($($t:ty),*) => {$(
        impl From<$t> for CliError {
            fn from(e: $t) -> Self {
                CliError::Run(e.to_string())
            }
        }
    )*};
}
run_err!(PacError, LearnError, HypothesisError, WeihrauchError);

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RunReport {
    pub command: String,
    pub meta: Vec<(String, String)>,
    pub columns: Vec<String>,
    pub rows: Vec<String>,
    pub pass: bool,
}

impl RunReport {
    fn new(command: &str, columns: &str) -> Self {
        Self {
            command: command.to_string(),
            meta: Vec::new(),
            columns: columns.split(',').map(str::to_string).collect(),
            rows: Vec::new(),
            pass: true,
        }
    }

    fn meta(&mut self, key: &str, value: impl ToString) {
        self.meta.push((key.to_string(), value.to_string()));
    }

    pub fn render(&self) -> String {
        let mut s = format!("# artifact_version: {ARTIFACT_VERSION}\n# command: {}\n", self.command);
        for (k, v) in &self.meta {
            s += &format!("# {k}: {v}\n");
        }
        s += &format!("# pass: {}\n", self.pass);
        s += &self.columns.join(",");
        s.push('\n');
        for r in &self.rows {
            s += r;
            s.push('\n');
        }
        s
    }

    pub fn exit_code(&self) -> i32 {
        if self.pass {
            0
        } else {
            2
        }
    }
}

/// Config merged with flags.
#[derive(Debug, Clone)]
pub struct Settings {
    cfg: ScenarioConfig,
    pub out: Option<PathBuf>,
}

impl Settings {
    pub fn load(flags: &Flags) -> Result<Self, CliError> {
        let mut cfg = match &flags.config {
            Some(path) => {
                let text = fs::read_to_string(path)
                    .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
                toml::from_str::<ScenarioConfig>(&text).map_err(|e| CliError::Config(e.to_string()))?
            }
            None => ScenarioConfig::default(),
        };
        macro_rules! over {
            ($($f:ident),*) => {$( if flags.$f.is_some() { cfg.$f = flags.$f.clone(); } )*};
        }
        over!(seed, trials, budget_programs, budget_steps, n);
        let out = flags.out.clone().or_else(|| cfg.out.clone());
        let s = Self { cfg, out };
        s.validate()?;
        Ok(s)
    }

    pub fn from_config(cfg: ScenarioConfig) -> Result<Self, CliError> {
        let s = Self { out: cfg.out.clone(), cfg };
        s.validate()?;
        Ok(s)
    }

    fn validate(&self) -> Result<(), CliError> {
        for (key, v) in [
            ("epsilon", &self.cfg.epsilon),
            ("delta", &self.cfg.delta),
            ("cutoff", &self.cfg.cutoff),
            ("density_bound", &self.cfg.density_bound),
        ] {
            if let Some(s) = v {
                parse_rational(s).ok_or_else(|| CliError::Config(format!("{key} = {s:?} is not an exact \"p/q\" rational")))?;
            }
        }
        for (key, v) in [("epsilon", &self.cfg.epsilon), ("delta", &self.cfg.delta)] {
            if let Some(s) = v {
                let q = parse_rational(s).expect("validated");
                if q <= rat(0, 1) || q >= rat(1, 1) {
                    return Err(CliError::Config(format!("{key} = {s:?} is not in (0, 1)")));
                }
            }
        }
        if let Some(e) = &self.cfg.enumeration {
            if e != "default" && e != "third-first" {
                return Err(CliError::Config(format!("enumeration = {e:?}")));
            }
        }
        self.verdict_rule()?;
        self.sample_function()?;
        Ok(())
    }

    fn rational(&self, v: &Option<String>, default: Rational) -> Rational {
        v.as_deref().map_or(default, |s| parse_rational(s).expect("validated"))
    }

    pub fn seed(&self) -> u64 {
        self.cfg.seed.unwrap_or(0)
    }

    fn epsilon(&self, default: Rational) -> Rational {
        self.rational(&self.cfg.epsilon, default)
    }

    fn delta(&self, default: Rational) -> Rational {
        self.rational(&self.cfg.delta, default)
    }

    fn verdict_rule(&self) -> Result<VerdictRule, CliError> {
        match self.cfg.verdict.as_deref() {
            None | Some("three-sigma") => Ok(VerdictRule::ThreeSigma),
            Some("binomial") => Ok(VerdictRule::ExactBinomial99),
            Some(v) => Err(CliError::Config(format!("verdict = {v:?}"))),
        }
    }

    fn sample_function(&self) -> Result<SampleFunction, CliError> {
        let spec = self.cfg.sample_function.as_deref().unwrap_or("closed-form:1");
        let bad = || CliError::Config(format!("sample_function = {spec:?}"));
        let (kind, arg) = spec.split_once(':').ok_or_else(bad)?;
        let arg: u64 = arg.parse().map_err(|_| bad())?;
        match kind {
            "closed-form" => Ok(SampleFunction::closed_form(arg)),
            "constant" => Ok(SampleFunction::constant(arg)),
            _ => Err(bad()),
        }
    }

    fn enumeration(&self, n: usize) -> Vec<Rational> {
        match self.cfg.enumeration.as_deref() {
            Some("third-first") => third_first(default_rationals(n)),
            _ => default_rationals(n),
        }
    }
}

/// Runs a subcommand; the report's `pass` decides exit 0 or 2.
pub fn run(command: &Command, s: &Settings) -> Result<RunReport, CliError> {
    match command {
        Command::Vc { class } => run_vc(class.or(s.cfg.class).unwrap_or(ClassName::Stump), s),
        Command::Erm { mode } => run_erm(mode.or(s.cfg.mode).unwrap_or(ErmMode::Realizable), s),
        Command::Stump => run_stump(s),
        Command::PacValidate => run_pac(s),
        Command::HaltingExtract => run_halting_extract(s),
        Command::JumpExtract => run_jump_extract(s),
        Command::BadSampleFn => run_bad_sample(s),
        Command::ReduceCheck => run_reduce_check(s),
        Command::Program { code } => {
            let mut r = RunReport::new("program", "line,instruction");
            r.meta("code", code);
            for line in Program::decode(*code).listing().lines().filter(|l| !l.starts_with(';')) {
                if let Some((i, instr)) = line.split_once(": ") {
                    r.rows.push(format!("{},{instr}", i.trim()));
                }
            }
            Ok(r)
        }
    }
}

/// Parses arguments, runs, writes the report and returns the exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    let outcome = Settings::load(&cli.flags).and_then(|s| {
        let report = run(&cli.command, &s)?;
        let text = report.render();
        match &s.out {
            Some(path) => fs::write(path, &text).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?,
            None => print!("{text}"),
        }
        Ok(report)
    });
    match outcome {
        Ok(r) => r.exit_code(),
        Err(e) => {
            eprintln!("{}", e.record());
            e.exit_code()
        }
    }
}

/// `n` generic features `(2j + 1)/(2n) + (√2 - 1)·2^-20` in `(0, 1)`.
pub fn stump_vc_pool(n: u64) -> Vec<GenericReal> {
    (0..n as i64).map(|j| GenericReal::new(rat(2 * j + 1, 2 * n as i64), 20)).collect()
}

fn run_vc(class: ClassName, s: &Settings) -> Result<RunReport, CliError> {
    let pool_len = s.cfg.pool.unwrap_or(64);
    let d_max = s.cfg.d_max.unwrap_or(2) as usize;
    let mut r = RunReport::new("vc", "d,some_subset_shattered");
    let rows = match class {
        ClassName::Stump => {
            let budget = s.cfg.ideal_budget.unwrap_or(4096);
            let h = stump_presentation(default_rationals(budget as usize))?;
            let pool: Vec<_> = stump_vc_pool(pool_len).iter().map(GenericReal::stream).collect();
            r.meta("class", "stump");
            r.meta("ideal_budget", budget);
            trace_matrix(&h, &pool, budget, 64)?
        }
        ClassName::Halting => {
            let (p_max, s_max) = (s.cfg.budget_programs.unwrap_or(256), s.cfg.budget_steps.unwrap_or(10_000));
            let en = enumerate_halting(p_max, s_max);
            let h = halting_presentation(&en);
            let pool: Vec<u64> = (0..pool_len).collect();
            r.meta("class", "halting");
            r.meta("budget_programs", p_max);
            r.meta("budget_steps", s_max);
            r.meta("budget_relative", true);
            trace_matrix(&h, &pool, en.len() as u64, 1)?
        }
    };
    r.meta("pool", pool_len);
    let mut vc = 0;
    for d in 1..=d_max {
        let hit = some_subset_shattered(&rows, pool_len as usize, d);
        if hit && vc + 1 == d {
            vc = d;
        }
        r.rows.push(format!("{d},{}", hit as u8));
    }
    let expect = s.cfg.expect_vc.unwrap_or(1) as usize;
    r.meta("vc_lower_bound", vc);
    r.meta("expected_vc", expect);
    r.pass = vc == expect;
    Ok(r)
}

/// Ideal budget of the generated stump scenarios.
pub const ERM_BUDGET: u64 = 1024;

/// A generated stump sample with features kept as exact generic points.
#[derive(Debug, Clone)]
pub struct StumpCase {
    pub points: Vec<GenericReal>,
    pub labels: Vec<bool>,
}

impl StumpCase {
    pub fn sample(&self) -> Vec<LabeledExample<crate::exact::RealStream>> {
        self.points
            .iter()
            .zip(&self.labels)
            .map(|(g, &y)| LabeledExample::new(g.stream(), y))
            .collect()
    }

    /// Mistakes of `[x > q]`, decided by exact comparison of the generic points.
    pub fn mistakes(&self, q: &Rational) -> usize {
        self.points
            .iter()
            .zip(&self.labels)
            .filter(|(g, &y)| (g.cmp_rational(q) == std::cmp::Ordering::Greater) != y)
            .count()
    }

    /// Least index of minimal mistakes among `cutoffs`.
    pub fn brute_force(&self, cutoffs: &[Rational]) -> (u64, usize) {
        let mut best = (0u64, usize::MAX);
        for (i, q) in cutoffs.iter().enumerate() {
            let m = self.mistakes(q);
            if m < best.1 {
                best = (i as u64, m);
            }
        }
        best
    }

    pub fn distinct_points(&self) -> u64 {
        let mut v: Vec<&Rational> = self.points.iter().map(|g| &g.base).collect();
        v.sort();
        v.dedup();
        v.len() as u64
    }
}

/// Features on the grid `j/16` plus a generic offset at `2^-12`. Realizable
/// cases label by a target among the first 64 cutoffs; otherwise labels are
/// coin flips.
pub fn stump_cases(count: u64, max_size: u64, seed: u64, realizable: bool, cutoffs: &[Rational]) -> Vec<StumpCase> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            let size = rng.random_range(1..=max_size) as usize;
            let target = &cutoffs[rng.random_range(0..64.min(cutoffs.len()))];
            let points: Vec<GenericReal> =
                (0..size).map(|_| GenericReal::new(rat(rng.random_range(-16..32), 16), 12)).collect();
            let labels = points
                .iter()
                .map(|g| {
                    if realizable {
                        g.cmp_rational(target) == std::cmp::Ordering::Greater
                    } else {
                        rng.random_bool(0.5)
                    }
                })
                .collect();
            StumpCase { points, labels }
        })
        .collect()
}

fn run_erm(mode: ErmMode, s: &Settings) -> Result<RunReport, CliError> {
    let count = s.cfg.samples.unwrap_or(200);
    let size = s.cfg.sample_size.unwrap_or(64);
    // every grid cutoff j/16 has height at most 32
    let budget = s.cfg.ideal_budget.unwrap_or(ERM_BUDGET);
    let cutoffs = default_rationals(budget as usize);
    let h = stump_presentation(cutoffs.clone())?;
    let realizable = mode != ErmMode::Behavior;
    let cases = stump_cases(count, size, s.seed(), realizable, &cutoffs);
    let mut r = RunReport::new("erm", "sample_id,size,brute_index,brute_mistakes,erm_index,extra,pass");
    r.meta("mode", format!("{mode:?}").to_lowercase());
    r.meta("seed", s.seed());
    r.meta("samples", count);
    r.meta("ideal_budget", budget);
    for (i, case) in cases.iter().enumerate() {
        let sample = case.sample();
        let (brute, brute_mistakes) = case.brute_force(&cutoffs);
        let (got, extra, ok) = match mode {
            ErmMode::Realizable => {
                let out = erm_realizable(&h, &sample, budget, 64)?;
                (out.ideal, String::new(), out.ideal == brute && brute_mistakes == 0)
            }
            ErmMode::Anytime => {
                let stages = (2 * (brute + 1) + 32) as u32;
                let out = erm_anytime(&h, &sample, stages, 64)?;
                let at = out.stabilized_at;
                let last = out.last().unwrap_or(0);
                (last, at.map_or("NA".into(), |a| a.to_string()), at.is_some() && last == brute)
            }
            ErmMode::Behavior => {
                let want = case.distinct_points() + 1;
                let out = erm_behavior_count(&h, &sample, |_| want, budget, 64)?;
                (out.ideal, want.to_string(), out.ideal == brute)
            }
        };
        r.pass &= ok;
        r.rows.push(format!("{i},{},{brute},{brute_mistakes},{got},{extra},{}", sample.len(), ok as u8));
    }
    if mode == ErmMode::Behavior {
        let u_max = s.cfg.n.unwrap_or(12);
        let mut sauer_ok = true;
        for u in 0..=u_max {
            let features: Vec<_> = (0..u as i64).map(|j| GenericReal::new(rat(j, 16), 12).stream()).collect();
            let b = behaviors_on(&h, &features, budget, 64)?.len() as u128;
            sauer_ok &= b == sauer_bound(1, u);
        }
        r.meta("sauer_identity_up_to", u_max);
        r.meta("sauer_identity", sauer_ok);
        r.pass &= sauer_ok;
    }
    Ok(r)
}

fn run_stump(s: &Settings) -> Result<RunReport, CliError> {
    let c = s.rational(&s.cfg.cutoff, rat(1, 3));
    let n = s.cfg.n.unwrap_or(20) as u32;
    let mut r = RunReport::new("stump", "k,alpha,bound,pass");
    r.meta("cutoff", format_rational(&c));
    for k in 1..=n {
        let a = alpha(&c, k);
        let bound = &c - pow2_neg(k + 2);
        let ok = a <= bound && a <= c;
        r.pass &= ok;
        r.rows.push(format!("{k},{},{},{}", format_rational(&a), format_rational(&bound), ok as u8));
    }
    Ok(r)
}

/// Density bound `M` with a dense block below the cutoff: density `M` on
/// `[0, 1/(2M))` and the remaining half spread over `[1/(2M), 1)`.
pub fn dense_left(m_bound: &Rational, cutoff: Rational) -> Result<PiecewiseUniform, PacError> {
    let one = rat(1, 1);
    let split = &one / (m_bound * rat(2, 1));
    let rest = rat(1, 2) / (&one - &split);
    PiecewiseUniform::new(
        vec![(rat(0, 1), split.clone(), m_bound.clone()), (split, one, rest)],
        cutoff,
        m_bound.clone(),
    )
}

fn run_pac(s: &Settings) -> Result<RunReport, CliError> {
    let eps = s.epsilon(rat(1, 10));
    let delta = s.delta(rat(1, 10));
    let m_bound = s.rational(&s.cfg.density_bound, rat(4, 1));
    let cutoff = s.rational(&s.cfg.cutoff, rat(1, 3));
    let m = s.cfg.m.unwrap_or(1000);
    let trials = s.cfg.trials.unwrap_or(500);
    let rule = s.verdict_rule()?;
    let setting = StumpSetting {
        distribution: dense_left(&m_bound, cutoff.clone())?,
        learner: StumpLearner::AStep { enumeration: s.enumeration(4096), cap: 64 },
        cap: 64,
    };
    let report = pac_validate(&setting, &eps, &delta, m, trials, s.seed(), rule);
    let mut r = RunReport::new("pac-validate", TrialRow::HEADER);
    r.meta("seed", s.seed());
    r.meta("density_bound", format_rational(&m_bound));
    r.meta("cutoff", format_rational(&cutoff));
    r.meta("trials", trials);
    r.meta("verdict_rule", format!("{rule:?}"));
    r.meta("failures", report.failures);
    r.meta("learner_errors", report.learner_errors);
    r.meta("failure_rate", format_rational(&report.failure_rate));
    r.rows = report.rows.iter().map(TrialRow::csv).collect();
    r.pass = report.verdict;
    Ok(r)
}

fn run_halting_extract(s: &Settings) -> Result<RunReport, CliError> {
    let (p_max, s_max) = (s.cfg.budget_programs.unwrap_or(256), s.cfg.budget_steps.unwrap_or(10_000));
    let n = s.cfg.n.unwrap_or(32);
    let (eps, delta) = (s.epsilon(rat(1, 2)), s.delta(rat(1, 2)));
    let m = s.sample_function()?;
    let en = enumerate_halting(p_max, s_max);
    let h = halting_presentation(&en);
    let learner = TotalErm { class: &h, ideal_budget: u64::MAX, cap: 1 };
    let bits = extract_halting_prefix(&learner, &h, &m, n, &eps, &delta)?;
    let table = en.table(n);
    let mut r = RunReport::new("halting-extract", "program,bit,table,pass");
    r.meta("budget_programs", p_max);
    r.meta("budget_steps", s_max);
    r.meta("budget_relative", true);
    r.meta("sample_function", m.label());
    r.meta("copies", m.eval(&eps, &delta)?);
    for (k, (b, t)) in bits.iter().zip(&table).enumerate() {
        r.pass &= b == t;
        r.rows.push(format!("{k},{},{},{}", *b as u8, *t as u8, (b == t) as u8));
    }
    Ok(r)
}

pub fn default_oracles() -> Vec<OracleTape> {
    vec![
        OracleTape::empty(),
        OracleTape::from_pairs([(0, 1), (1, 3)]),
        OracleTape::from_pairs([(0, 2), (2, 5)]),
    ]
}

/// Programs `0..n` followed by the curated oracle-consulting programs.
pub fn jump_programs(n: u64) -> Vec<u64> {
    let mut v: Vec<u64> = (0..n).collect();
    v.extend(oracle_programs().into_iter().filter(|&e| e >= n));
    v
}

fn run_jump_extract(s: &Settings) -> Result<RunReport, CliError> {
    let n = s.cfg.n.unwrap_or(16);
    let s_max = s.cfg.budget_steps.unwrap_or(500);
    let codes = s.cfg.oracle_codes.unwrap_or(256);
    let (eps, delta) = (s.epsilon(rat(1, 2)), s.delta(rat(1, 2)));
    let m = s.sample_function()?;
    let oracles = match &s.cfg.oracles {
        Some(list) => list.iter().map(|o| OracleTape::from_pairs(o.iter().map(|&[c, v]| (c, v)))).collect(),
        None => default_oracles(),
    };
    let programs = jump_programs(n);
    let h = oracle_halting_presentation(&programs, codes, s_max);
    let learner = TotalErm { class: &h, ideal_budget: u64::MAX, cap: 64 };
    let mut r = RunReport::new("jump-extract", "oracle,program,bit,expected,pass");
    r.meta("budget_steps", s_max);
    r.meta("oracle_codes", codes);
    r.meta("budget_relative", true);
    r.meta("sample_function", m.label());
    for (oi, z) in oracles.iter().enumerate() {
        let bits = extract_jump_bits(&learner, &h, &m, z, &programs, &eps, &delta)?;
        for (&e, &b) in programs.iter().zip(&bits) {
            let want = jump_bit(z, e, s_max);
            r.pass &= b == want;
            r.rows.push(format!("{oi},{e},{},{},{}", b as u8, want as u8, (b == want) as u8));
        }
    }
    Ok(r)
}

fn run_bad_sample(s: &Settings) -> Result<RunReport, CliError> {
    let (p_max, s_max) = (s.cfg.budget_programs.unwrap_or(256), s.cfg.budget_steps.unwrap_or(10_000));
    let n = s.cfg.n.unwrap_or(16);
    let delta = s.delta(rat(1, 10));
    let m_bound = s.rational(&s.cfg.density_bound, rat(4, 1));
    let en = Arc::new(enumerate_halting(p_max, s_max));
    let rep = bad_sample_fn_demo(n, &delta, en.clone(), m_bound, s.seed())?;
    let table = en.table(n);
    let mut r = RunReport::new("bad-sample-fn", "program,bit,table,m_k,pass");
    r.meta("budget_programs", p_max);
    r.meta("budget_steps", s_max);
    r.meta("budget_relative", true);
    r.meta("control_third_first", rep.control_third_first);
    r.meta("control_default", rep.control_default);
    r.meta("control_samples", rep.control_samples);
    for (k, (b, t)) in rep.bits.iter().zip(&table).enumerate() {
        r.pass &= b == t;
        r.rows.push(format!("{k},{},{},{},{}", *b as u8, *t as u8, rep.m_values[k], (b == t) as u8));
    }
    r.pass &= rep.control_third_first == 0;
    Ok(r)
}

/// Outcome of the staged-ERM-versus-limit scenario.
#[derive(Debug, Clone)]
pub struct StagedScenario {
    pub stages: Vec<u64>,
    pub witness: Option<usize>,
    pub target: u64,
    pub honest: crate::weihrauch::ReductionReport,
    pub corrupted: crate::weihrauch::ReductionReport,
    pub witness_check: Result<(), WeihrauchError>,
}

impl StagedScenario {
    pub fn pass(&self) -> bool {
        self.witness.is_some()
            && self.witness_check.is_ok()
            && self.honest.agree
            && self.honest.compared > 0
            && !self.corrupted.agree
    }
}

/// `K` emits the staged ERM outputs of a fixed sample, `G` is the limit with
/// the stabilization index as witness, `H` the identity; the target emits
/// the realizable ERM id. The control corrupts `H` from position 1 on.
pub fn staged_scenario(case: &StumpCase, h: &StumpPresentation, stages: u32) -> Result<StagedScenario, CliError> {
    let sample = case.sample();
    let target = erm_realizable(h, &sample, h.cutoffs().len() as u64, 64)?.ideal;
    let staged = erm_anytime(h, &sample, stages, 64)?;
    let witness = staged.stabilized_at;
    let n = witness.unwrap_or(stages as usize);
    let points: Vec<PointDescription> =
        staged.stages.iter().map(|&c| PointDescription::constant(IdealId::new(c))).collect();
    let witness_check = match witness {
        Some(w) => lim_with_witness(&discrete_naturals(), &points, move |_| w, 8, points.len()).map(|_| ()),
        None => Err(WeihrauchError::WitnessOutOfRange { index: n, len: points.len() }),
    };
    let k = stage_builder(staged.stages.clone());
    let g = lim_transducer(move |_| n);
    let f = constant_stream(target);
    let inputs: Vec<Vec<u64>> = (0..=stages as usize).map(|l| vec![0; l]).collect();
    let honest = check_reduction(&f, &g, &StrongReduction { pre: k.clone(), post: Transducer::identity() }, &inputs, stages as usize);
    let corrupt = Transducer::map("corrupt", |i, v| if i >= 1 { v + 1 } else { v });
    let corrupted = check_reduction(&f, &g, &StrongReduction { pre: k, post: corrupt }, &inputs, stages as usize);
    Ok(StagedScenario { stages: staged.stages, witness, target, honest, corrupted, witness_check })
}

fn run_reduce_check(s: &Settings) -> Result<RunReport, CliError> {
    let stages = s.cfg.stages.unwrap_or(96) as u32;
    let size = s.cfg.sample_size.unwrap_or(16);
    let cutoffs = default_rationals(s.cfg.ideal_budget.unwrap_or(ERM_BUDGET) as usize);
    let h = stump_presentation(cutoffs.clone())?;
    let case = stump_cases(1, size, s.seed(), true, &cutoffs).remove(0);
    let sc = staged_scenario(&case, &h, stages)?;
    let mut r = RunReport::new("reduce-check", "scenario,agree,compared,divergence_input,divergence_position,expected,got");
    r.meta("seed", s.seed());
    r.meta("stages", stages);
    r.meta("target", sc.target);
    r.meta("witness", sc.witness.map_or("NA".into(), |w| w.to_string()));
    r.meta("witness_check", sc.witness_check.as_ref().map_or_else(|e| e.to_string(), |_| "ok".into()));
    for (name, rep) in [("honest", &sc.honest), ("corrupted", &sc.corrupted)] {
        let d = rep.first_divergence.as_ref();
        let f = |g: &dyn Fn(&crate::weihrauch::Divergence) -> u64| d.map_or("NA".into(), |d| g(d).to_string());
        r.rows.push(format!(
            "{name},{},{},{},{},{},{}",
            rep.agree as u8,
            rep.compared,
            f(&|d| d.input as u64),
            f(&|d| d.position as u64),
            f(&|d| d.expected),
            f(&|d| d.got)
        ));
    }
    r.pass = sc.pass();
    Ok(r)
}
