//! Command-line experiment runner.
//!
//! A run is described by an [`ExperimentConfig`], assembled from an optional
//! JSON file and then overridden field by field by command-line flags. All
//! randomness is drawn from one `ChaCha8` generator seeded by `seed`, in a
//! fixed order: coin system first, then potentials.
//!
//! Exit codes: 0 pass, 1 theorem-check failure, 2 input error.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use clap::{Parser, ValueEnum};
use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::coin::{
    grover_coin_system, hadamard_partition_coin_system, identity_coin_system, random_coin_system, CoinSystem,
    COIN_TOL,
};
use crate::error::{Error, Result};
use crate::fock::{verify_car, SubsetIndex, MAX_N};
use crate::linalg::StateVector;
use crate::magnetic::{eigenbasis_check, involution_check, MagneticPotential};
use crate::spectra::{
    unitary_eigen_unchecked, verify_approximate_spectrum_theorem, verify_point_spectrum_theorem,
    verify_spectral_stability_for, walk_point_spectrum_with_tol, SpectrumReport, SPECTRUM_TOL,
};
use crate::walk::{evolution_operator, intertwining_check, position_distribution, step, WalkState};

pub const EXIT_PASS: i32 = 0;
pub const EXIT_FAIL: i32 = 1;
pub const EXIT_INPUT: i32 = 2;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Task {
    Simulate,
    Spectrum,
    VerifyPoint,
    VerifyAev,
    VerifyStability,
    VerifyAll,
}

impl Task {
    fn name(self) -> &'static str {
        match self {
            Task::Simulate => "simulate",
            Task::Spectrum => "spectrum",
            Task::VerifyPoint => "verify-point",
            Task::VerifyAev => "verify-aev",
            Task::VerifyStability => "verify-stability",
            Task::VerifyAll => "verify-all",
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Json,
    Csv,
}

/// Fully resolved experiment description. Every field has a default so a
/// config file may specify any subset.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub n: usize,
    /// `grover`, `hadamard-partition`, `random`, `random:<d>` or `identity`.
    pub coin: String,
    /// Path to a coin-system JSON file; takes precedence over `coin`.
    pub coin_file: Option<PathBuf>,
    /// `null`, `random`, or comma-separated phases.
    pub nu: String,
    pub samples: usize,
    pub seed: u64,
    pub task: Task,
    pub steps: u64,
    /// `vertex:<mask>[:<coin>]`, `uniform:<mask>` or `eigen:<mask>[:<k>]`.
    pub initial: String,
    pub out: Option<PathBuf>,
    pub format: Format,
    pub tol_spectrum: f64,
    pub tol_construct: f64,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            n: 1,
            coin: "grover".into(),
            coin_file: None,
            nu: "null".into(),
            samples: 5,
            seed: 0,
            task: Task::VerifyAll,
            steps: 10,
            initial: "vertex:0".into(),
            out: None,
            format: Format::Json,
            tol_spectrum: SPECTRUM_TOL,
            tol_construct: COIN_TOL,
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "magwalk", version, about = "Magnetic quantum walks on the hypercube")]
pub struct Args {
    /// JSON config file; flags given on the command line override its fields.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Hypercube has dimension n+1.
    #[arg(long)]
    pub n: Option<usize>,
    /// grover | hadamard-partition | random[:d] | identity
    #[arg(long)]
    pub coin: Option<String>,
    /// Coin system JSON file.
    #[arg(long)]
    pub coin_file: Option<PathBuf>,
    /// null | random | comma-separated phases in [-pi, pi]
    #[arg(long, allow_hyphen_values = true)]
    pub nu: Option<String>,
    /// Random potentials drawn for stability checks.
    #[arg(long)]
    pub samples: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, value_enum)]
    pub task: Option<Task>,
    #[arg(long)]
    pub steps: Option<u64>,
    /// vertex:<mask>[:<coin>] | uniform:<mask> | eigen:<mask>[:<k>]
    #[arg(long)]
    pub initial: Option<String>,
    /// Output file; stdout when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub format: Option<Format>,
    #[arg(long)]
    pub tol_spectrum: Option<f64>,
    #[arg(long)]
    pub tol_construct: Option<f64>,
}

fn field_error(field: &str, err: impl std::fmt::Display) -> Error {
    Error::InvalidArgument(format!("{field}: {err}"))
}

impl Args {
    pub fn into_config(self) -> Result<ExperimentConfig> {
        let mut cfg = match &self.config {
            Some(path) => {
                let text = fs::read_to_string(path).map_err(|e| field_error("config", format!("{}: {e}", path.display())))?;
                serde_json::from_str(&text).map_err(|e| field_error("config", e))?
            }
            None => ExperimentConfig::default(),
        };
        macro_rules! over {
            ($($f:ident),*) => { $( if let Some(v) = self.$f { cfg.$f = v; } )* };
        }
        over!(n, coin, nu, samples, seed, task, steps, initial, format, tol_spectrum, tol_construct);
        if self.coin_file.is_some() {
            cfg.coin_file = self.coin_file;
        }
        if self.out.is_some() {
            cfg.out = self.out;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n > MAX_N {
            return Err(field_error("n", format!("{} exceeds the supported maximum {MAX_N}", self.n)));
        }
        for (name, tol) in [("tol-spectrum", self.tol_spectrum), ("tol-construct", self.tol_construct)] {
            if !(tol.is_finite() && tol > 0.0) {
                return Err(field_error(name, format!("must be a positive finite number, got {tol}")));
            }
        }
        if matches!(self.task, Task::VerifyStability | Task::VerifyAll) && self.samples < 2 {
            return Err(field_error("samples", format!("stability checks need at least 2, got {}", self.samples)));
        }
        if self.format == Format::Csv && !matches!(self.task, Task::Simulate | Task::Spectrum) {
            return Err(field_error(
                "format",
                format!("csv is only available for simulate and spectrum, not {}", self.task.name()),
            ));
        }
        Ok(())
    }
}

enum PotentialSpec {
    Null,
    Random,
    Explicit(Vec<f64>),
}

fn parse_potential(text: &str) -> Result<PotentialSpec> {
    match text.trim() {
        "null" | "0" => Ok(PotentialSpec::Null),
        "random" => Ok(PotentialSpec::Random),
        list => list
            .split(',')
            .map(|p| p.trim().parse::<f64>().map_err(|e| field_error("nu", format!("{p:?}: {e}"))))
            .collect::<Result<Vec<_>>>()
            .map(PotentialSpec::Explicit),
    }
}

fn parse_mask(text: &str, n: usize) -> Result<SubsetIndex> {
    let bits = if let Some(b) = text.strip_prefix("0b") {
        u32::from_str_radix(b, 2)
    } else if let Some(h) = text.strip_prefix("0x") {
        u32::from_str_radix(h, 16)
    } else {
        text.parse::<u32>()
    }
    .map_err(|e| field_error("initial", format!("bad vertex mask {text:?}: {e}")))?;
    let sigma = SubsetIndex::new(bits);
    if !sigma.is_within(n) {
        return Err(field_error("initial", format!("vertex mask {bits} has bits beyond mode {n}")));
    }
    Ok(sigma)
}

fn parse_index(text: Option<&str>, what: &str) -> Result<usize> {
    text.map_or(Ok(0), |t| t.parse().map_err(|e| field_error("initial", format!("bad {what} {t:?}: {e}"))))
}

/// The inputs of a run after all randomness has been drawn.
pub struct Experiment {
    pub config: ExperimentConfig,
    pub coin: CoinSystem,
    pub coin_label: String,
    pub nu: MagneticPotential,
    rng: ChaCha8Rng,
}

impl Experiment {
    pub fn build(config: ExperimentConfig) -> Result<Self> {
        config.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        let n = config.n;
        let (coin, coin_label) = match &config.coin_file {
            Some(path) => {
                let text =
                    fs::read_to_string(path).map_err(|e| field_error("coin-file", format!("{}: {e}", path.display())))?;
                let cs = CoinSystem::from_json(&text).map_err(|e| field_error("coin-file", e))?;
                if cs.n() != n {
                    return Err(field_error("coin-file", format!("coin system has n={}, run has n={n}", cs.n())));
                }
                (cs, format!("file:{}", path.display()))
            }
            None => (build_coin(&config.coin, n, &mut rng)?, config.coin.clone()),
        };
        let nu = match parse_potential(&config.nu)? {
            PotentialSpec::Null => MagneticPotential::null(n),
            PotentialSpec::Random => MagneticPotential::random(n, &mut rng),
            PotentialSpec::Explicit(p) => {
                if p.len() != n + 1 {
                    return Err(field_error("nu", format!("expected {} phases, got {}", n + 1, p.len())));
                }
                MagneticPotential::new(p).map_err(|e| field_error("nu", e))?
            }
        };
        Ok(Experiment {
            config,
            coin,
            coin_label,
            nu,
            rng,
        })
    }

    fn header(&self) -> Value {
        json!({
            "tool": "magwalk",
            "version": env!("CARGO_PKG_VERSION"),
            "task": self.config.task.name(),
            "n": self.config.n,
            "d": self.coin.d(),
            "coin": self.coin_label,
            "nu": self.nu.phases(),
            "seed": self.config.seed,
            "samples": self.config.samples,
            "tol_spectrum": self.config.tol_spectrum,
            "tol_construct": self.config.tol_construct,
        })
    }

    fn initial_state(&self) -> Result<WalkState> {
        let n = self.config.n;
        let d = self.coin.d();
        let parts: Vec<&str> = self.config.initial.split(':').collect();
        let bad = || field_error("initial", format!("unrecognized state descriptor {:?}", self.config.initial));
        let state = match parts.as_slice() {
            ["vertex", mask, rest @ ..] if rest.len() <= 1 => {
                let j = parse_index(rest.first().copied(), "coin index")?;
                WalkState::vertex(n, d, parse_mask(mask, n)?, j)
            }
            ["uniform", mask] => WalkState::uniform_coin_vertex(n, d, parse_mask(mask, n)?),
            ["eigen", mask, rest @ ..] if rest.len() <= 1 => {
                let sigma = parse_mask(mask, n)?;
                let k = parse_index(rest.first().copied(), "eigenvector index")?;
                if k >= d {
                    return Err(field_error("initial", format!("eigenvector index {k} out of range for d={d}")));
                }
                let u = crate::coin::algebraic_sum(&self.coin, sigma)?;
                let eig = unitary_eigen_unchecked(&u, true)?;
                let mut order: Vec<usize> = (0..d).collect();
                order.sort_by(|&a, &b| {
                    crate::spectra::principal_arg(eig.values[a]).total_cmp(&crate::spectra::principal_arg(eig.values[b]))
                });
                let vectors = eig.vectors.expect("vectors requested");
                let col = order[k];
                let coin = StateVector((0..d).map(|r| vectors[(r, col)]).collect()).normalized()?;
                WalkState::magnetic_eigenstate(sigma, &self.nu, &coin)
            }
            _ => return Err(bad()),
        };
        state.map_err(|e| field_error("initial", e))
    }
}

fn build_coin(spec: &str, n: usize, rng: &mut ChaCha8Rng) -> Result<CoinSystem> {
    let mut parts = spec.splitn(2, ':');
    let name = parts.next().unwrap_or_default();
    let param = parts.next();
    let cs = match (name, param) {
        ("grover", None) => grover_coin_system(n),
        ("hadamard-partition", None) => hadamard_partition_coin_system(n),
        ("identity", None) => {
            if n != 0 {
                return Err(field_error("coin", "identity coin requires n=0"));
            }
            identity_coin_system(1)
        }
        ("random", d) => {
            let d = match d {
                Some(t) => t.parse().map_err(|e| field_error("coin", format!("bad dimension {t:?}: {e}")))?,
                None => n + 1,
            };
            random_coin_system(n, d, rng.next_u64())
        }
        _ => return Err(field_error("coin", format!("unknown coin {spec:?}"))),
    };
    cs.map_err(|e| field_error("coin", e))
}

/// Result of one run: a rendered report and the verdict.
pub struct Outcome {
    pub passed: bool,
    pub body: String,
}

pub fn run(config: ExperimentConfig) -> Result<Outcome> {
    let mut exp = Experiment::build(config)?;
    match exp.config.task {
        Task::Simulate => simulate(&exp),
        Task::Spectrum => spectrum(&exp),
        Task::VerifyPoint => {
            let check = verify_point_spectrum_theorem(&exp.nu, &exp.coin, exp.config.tol_spectrum)?;
            report(&exp, check.passed, json!({ "point_spectrum": check }))
        }
        Task::VerifyAev => {
            let check = verify_approximate_spectrum_theorem(&exp.nu, &exp.coin, exp.config.tol_spectrum)?;
            report(&exp, check.passed, json!({ "approximate_spectrum": check }))
        }
        Task::VerifyStability => {
            let check = stability(&mut exp)?;
            report(&exp, check.passed, json!({ "stability": check }))
        }
        Task::VerifyAll => verify_all(&mut exp),
    }
}

fn report(exp: &Experiment, passed: bool, body: Value) -> Result<Outcome> {
    let mut doc = json!({ "header": exp.header(), "passed": passed });
    if let (Value::Object(dst), Value::Object(src)) = (&mut doc, body) {
        dst.extend(src);
    }
    Ok(Outcome {
        passed,
        body: serde_json::to_string_pretty(&doc)? + "\n",
    })
}

fn stability(exp: &mut Experiment) -> Result<crate::spectra::StabilityReport> {
    let n = exp.config.n;
    let mut potentials = vec![MagneticPotential::null(n)];
    potentials.extend((0..exp.config.samples).map(|_| MagneticPotential::random(n, &mut exp.rng)));
    verify_spectral_stability_for(&exp.coin, &potentials, exp.config.tol_spectrum)
}

fn simulate(exp: &Experiment) -> Result<Outcome> {
    let op = evolution_operator(&exp.nu, &exp.coin)?;
    let mut state = exp.initial_state()?;
    let mut rows = vec![position_distribution(&state).probabilities];
    for _ in 0..exp.config.steps {
        state = step(&op, &state)?;
        rows.push(position_distribution(&state).probabilities);
    }
    let max_norm_drift = rows.iter().map(|p| (p.iter().sum::<f64>() - 1.0).abs()).fold(0.0, f64::max);
    let passed = max_norm_drift <= exp.config.tol_construct;
    match exp.config.format {
        Format::Csv => {
            let mut body = String::from("t,sigma_bitmask,probability\n");
            for (t, probs) in rows.iter().enumerate() {
                for (sigma, p) in probs.iter().enumerate() {
                    writeln!(body, "{t},{sigma},{p:e}").expect("string write");
                }
            }
            Ok(Outcome { passed, body })
        }
        Format::Json => {
            let final_state: Vec<[f64; 2]> = state.vector.iter().map(|z| [z.re, z.im]).collect();
            report(
                exp,
                passed,
                json!({
                    "initial": exp.config.initial,
                    "steps": exp.config.steps,
                    "max_norm_drift": max_norm_drift,
                    "distributions": rows,
                    "final_state": final_state,
                }),
            )
        }
    }
}

fn spectrum(exp: &Experiment) -> Result<Outcome> {
    let spec: SpectrumReport = walk_point_spectrum_with_tol(&exp.nu, &exp.coin, exp.config.tol_spectrum)?;
    let passed = spec.max_modulus_defect() <= exp.config.tol_spectrum;
    match exp.config.format {
        Format::Csv => {
            let mut body = String::from("re,im,arg,mult\n");
            for e in &spec.eigenvalues {
                writeln!(body, "{:e},{:e},{:e},{}", e.value.re, e.value.im, e.arg(), e.multiplicity).expect("string write");
            }
            Ok(Outcome { passed, body })
        }
        Format::Json => report(exp, passed, json!({ "spectrum": spec })),
    }
}

fn verify_all(exp: &mut Experiment) -> Result<Outcome> {
    let tol = exp.config.tol_construct;
    let car = verify_car(exp.config.n)?;
    let coin = exp.coin.validate();
    let involution = involution_check(&exp.nu)?;
    let eigenbasis = eigenbasis_check(&exp.nu)?;
    let op = evolution_operator(&exp.nu, &exp.coin)?;
    let unitarity = op.unitarity_residual();
    let intertwining = intertwining_check(&op)?;
    let point = verify_point_spectrum_theorem(&exp.nu, &exp.coin, exp.config.tol_spectrum)?;
    let aev = verify_approximate_spectrum_theorem(&exp.nu, &exp.coin, exp.config.tol_spectrum)?;
    let stab = stability(exp)?;

    let checks = [
        ("car", car.passes(tol)),
        ("coin", coin.passed),
        ("involution", involution.passes(tol)),
        ("eigenbasis", eigenbasis.passes(tol)),
        ("walk_unitarity", unitarity <= tol),
        ("intertwining", intertwining.passes(tol)),
        ("point_spectrum", point.passed),
        ("approximate_spectrum", aev.passed),
        ("stability", stab.passed),
    ];
    let passed = checks.iter().all(|(_, ok)| *ok);
    let summary: serde_json::Map<String, Value> = checks.iter().map(|(k, ok)| (k.to_string(), Value::Bool(*ok))).collect();
    report(
        exp,
        passed,
        json!({
            "summary": summary,
            "car": car,
            "coin": coin,
            "involution": involution,
            "eigenbasis": eigenbasis,
            "walk_unitarity_residual": unitarity,
            "intertwining": intertwining,
            "point_spectrum": point,
            "approximate_spectrum": aev,
            "stability": stab,
        }),
    )
}

/// Writes `body` to a sibling temporary file and renames it into place.
pub fn write_atomically(path: &Path, body: &str) -> Result<()> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    let name = path
        .file_name()
        .ok_or_else(|| field_error("out", format!("{} is not a file path", path.display())))?;
    let mut tmp_name = OsString::from(".");
    tmp_name.push(name);
    tmp_name.push(format!(".{}.tmp", std::process::id()));
    let tmp = dir.join(tmp_name);
    let result = fs::File::create(&tmp)
        .and_then(|mut f| {
            f.write_all(body.as_bytes())?;
            f.sync_all()
        })
        .and_then(|_| fs::rename(&tmp, path));
    if result.is_err() {
        let _ = fs::remove_file(&tmp);
    }
    result.map_err(|e| field_error("out", format!("{}: {e}", path.display())))
}

fn exit_code_for(err: &Error) -> i32 {
    match err {
        Error::Numerical(_) => EXIT_FAIL,
        _ => EXIT_INPUT,
    }
}

/// Parses arguments, runs the experiment and returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let args = match Args::try_parse_from(args) {
        Ok(a) => a,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_INPUT } else { EXIT_PASS };
            let _ = e.print();
            return code;
        }
    };
    let outcome = args.into_config().and_then(|cfg| {
        let out = cfg.out.clone();
        run(cfg).map(|o| (o, out))
    });
    match outcome {
        Ok((o, out)) => {
            let written = match out {
                Some(path) => write_atomically(&path, &o.body),
                None => std::io::stdout().write_all(o.body.as_bytes()).map_err(Error::from),
            };
            if let Err(e) = written {
                eprintln!("error: {e}");
                return EXIT_INPUT;
            }
            if o.passed {
                EXIT_PASS
            } else {
                eprintln!("check failed; see report");
                EXIT_FAIL
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            exit_code_for(&e)
        }
    }
}
