//! Command-line front end: text formats for signals and results, the
//! key=value config file, and the `estimate`, `bench`, `demo-vm` and
//! `version` subcommands.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::fmt::Write as _;
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use clap::{Args, Parser, Subcommand, ValueEnum};
use num_complex::Complex64;

use crate::bench::{aggregate, mode_name, run_trials, ExperimentConfig, GenConfig, Preset, SweepPoint, TrialRecord, DEFAULT_AMP_STD};
use crate::circular::{solve_concentration, unwrap_vm, vm_pdf, VmParam};
use crate::engine::{run, EngineConfig, EstimationResult, Heuristic, Mode};
use crate::error::{Result, ValseError};
use crate::freq::{MeasurementSet, PosteriorShape};

pub const BENCH_HEADER: &str =
    "sweep_var,value,n_trials,success_rate,nmse_db,freq_rmse,crlb_freq_rmse,crlb_nmse_db,mean_runtime_ms,mode";
pub const TRIAL_HEADER: &str =
    "sweep_var,value,seed,k,k_hat,success,nmse,freq_sq_errors,crlb_freq_var,crlb_nmse,iters,converged,runtime_ms";
pub const DEMO_HEADER: &str = "theta,wrapped_vm_pdf,mvm_pdf";

fn parse_err<T>(line: usize, msg: impl Into<String>) -> Result<T> {
    Err(ValseError::Parse { line, msg: msg.into() })
}

fn field<T: FromStr>(tok: Option<&str>, line: usize, name: &str) -> Result<T> {
    let tok = match tok {
        Some(t) => t,
        None => return parse_err(line, format!("missing field '{name}'")),
    };
    tok.parse()
        .or_else(|_| parse_err(line, format!("field '{name}': cannot parse '{tok}'")))
}

/// Non-blank, non-comment lines with their 1-based line numbers.
fn content_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'))
}

/// Signal file: header `N M`, then `M` lines `index re im`.
pub fn parse_signal(text: &str) -> Result<MeasurementSet> {
    let mut lines = content_lines(text);
    let Some((hl, header)) = lines.next() else {
        return parse_err(1, "empty signal file");
    };
    let mut tok = header.split_whitespace();
    let n: usize = field(tok.next(), hl, "N")?;
    let m: usize = field(tok.next(), hl, "M")?;
    if tok.next().is_some() {
        return parse_err(hl, "header must be 'N M'");
    }
    if m > n {
        return Err(ValseError::Validation(format!("M = {m} exceeds N = {n}")));
    }
    let mut rows: Vec<(usize, Complex64)> = Vec::with_capacity(m);
    let mut last = hl;
    for (ln, line) in lines {
        last = ln;
        let mut tok = line.split_whitespace();
        let idx: usize = field(tok.next(), ln, "index")?;
        let re: f64 = field(tok.next(), ln, "re")?;
        let im: f64 = field(tok.next(), ln, "im")?;
        if tok.next().is_some() {
            return parse_err(ln, "expected 'index re im'");
        }
        rows.push((idx, Complex64::new(re, im)));
    }
    if rows.len() != m {
        return parse_err(last, format!("expected {m} samples, found {}", rows.len()));
    }
    rows.sort_by_key(|r| r.0);
    let (indices, y): (Vec<usize>, Vec<Complex64>) = rows.into_iter().unzip();
    MeasurementSet::new(indices, n, y)
}

pub fn format_signal(mset: &MeasurementSet) -> String {
    let mut out = format!("{} {}\n", mset.signal_len(), mset.len());
    for (i, v) in mset.indices().iter().zip(mset.samples()) {
        let _ = writeln!(out, "{i} {} {}", v.re, v.im);
    }
    out
}

/// Parsed form of the result document written by `estimate`.
#[derive(Debug, Clone, PartialEq)]
pub struct ResultDoc {
    pub k_hat: usize,
    pub iterations: usize,
    pub converged: bool,
    pub nu: f64,
    pub rho: f64,
    pub tau: f64,
    pub components: Vec<ComponentDoc>,
    pub x_hat: Vec<Complex64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ComponentDoc {
    pub theta: f64,
    pub amp_abs: f64,
    pub amp_arg: f64,
    pub posterior: PosteriorDoc,
}

#[derive(Debug, Clone, PartialEq)]
pub enum PosteriorDoc {
    VonMises { kappa: f64, mu: f64 },
    /// `(weight, kappa, mu)` per mixture component.
    Mixture(Vec<(f64, f64, f64)>),
    Point,
}

pub fn format_result(res: &EstimationResult) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "k_hat: {}", res.k_hat);
    let _ = writeln!(out, "iterations: {}", res.iters);
    let _ = writeln!(out, "converged: {}", res.converged);
    let _ = writeln!(out, "nu: {}", res.beta.nu);
    let _ = writeln!(out, "rho: {}", res.beta.rho);
    let _ = writeln!(out, "tau: {}", res.beta.tau);
    for ((theta, amp), post) in res.freqs.iter().zip(&res.amps).zip(&res.posteriors) {
        out.push_str("[component]\n");
        let _ = writeln!(out, "theta: {theta}");
        let _ = writeln!(out, "amp_abs: {}", amp.norm());
        let _ = writeln!(out, "amp_arg: {}", amp.arg());
        match post.shape() {
            PosteriorShape::Single(p) => {
                let _ = writeln!(out, "posterior: von_mises\nkappa: {}\nmu: {}", p.kappa(), p.mu());
            }
            PosteriorShape::Mixture(mix) => {
                out.push_str("posterior: mixture\n");
                for (w, p) in mix.components() {
                    let _ = writeln!(out, "mixture: {w} {} {}", p.kappa(), p.mu());
                }
            }
            PosteriorShape::Point(_) => out.push_str("posterior: point\n"),
        }
    }
    out.push_str("[x_hat]\n");
    for (n, v) in res.x_hat.iter().enumerate() {
        let _ = writeln!(out, "{n} {} {}", v.re, v.im);
    }
    out
}

fn key_value(line: &str, ln: usize) -> Result<(&str, &str)> {
    match line.split_once(':') {
        Some((k, v)) => Ok((k.trim(), v.trim())),
        None => parse_err(ln, "expected 'key: value'"),
    }
}

/// Key/value lines and mixture rows of one `[component]` block.
type Block<'a> = (HashMap<&'a str, (usize, &'a str)>, Vec<(f64, f64, f64)>);

pub fn parse_result(text: &str) -> Result<ResultDoc> {
    let mut head: HashMap<&str, (usize, &str)> = HashMap::new();
    let mut components: Vec<ComponentDoc> = Vec::new();
    let mut x_hat = Vec::new();
    let mut section = "";
    let mut current: Option<Block> = None;

    let finish = |c: Option<Block>, out: &mut Vec<ComponentDoc>| -> Result<()> {
        let Some((kv, mix)) = c else { return Ok(()) };
        let get = |k: &str| -> Result<f64> {
            match kv.get(k) {
                Some(&(ln, v)) => field(Some(v), ln, k),
                None => parse_err(0, format!("component without '{k}'")),
            }
        };
        let posterior = match kv.get("posterior").map(|p| p.1) {
            Some("von_mises") => PosteriorDoc::VonMises { kappa: get("kappa")?, mu: get("mu")? },
            Some("mixture") => PosteriorDoc::Mixture(mix),
            Some("point") => PosteriorDoc::Point,
            other => return parse_err(0, format!("unknown posterior {other:?}")),
        };
        out.push(ComponentDoc {
            theta: get("theta")?,
            amp_abs: get("amp_abs")?,
            amp_arg: get("amp_arg")?,
            posterior,
        });
        Ok(())
    };

    for (ln, line) in content_lines(text) {
        match line {
            "[component]" => {
                finish(current.take(), &mut components)?;
                current = Some((HashMap::new(), Vec::new()));
                section = "component";
                continue;
            }
            "[x_hat]" => {
                finish(current.take(), &mut components)?;
                section = "x_hat";
                continue;
            }
            _ => {}
        }
        match section {
            "" => {
                let (k, v) = key_value(line, ln)?;
                head.insert(k, (ln, v));
            }
            "component" => {
                let (k, v) = key_value(line, ln)?;
                let (kv, mix) = current.as_mut().expect("inside a component");
                if k == "mixture" {
                    let mut t = v.split_whitespace();
                    mix.push((field(t.next(), ln, "weight")?, field(t.next(), ln, "kappa")?, field(t.next(), ln, "mu")?));
                } else {
                    kv.insert(k, (ln, v));
                }
            }
            _ => {
                let mut t = line.split_whitespace();
                let n: usize = field(t.next(), ln, "index")?;
                if n != x_hat.len() {
                    return parse_err(ln, format!("expected sample {}, found {n}", x_hat.len()));
                }
                x_hat.push(Complex64::new(field(t.next(), ln, "re")?, field(t.next(), ln, "im")?));
            }
        }
    }
    finish(current.take(), &mut components)?;

    fn head_field<T: FromStr>(head: &HashMap<&str, (usize, &str)>, k: &str) -> Result<T> {
        match head.get(k) {
            Some(&(ln, v)) => field(Some(v), ln, k),
            None => parse_err(0, format!("missing '{k}'")),
        }
    }
    let doc = ResultDoc {
        k_hat: head_field(&head, "k_hat")?,
        iterations: head_field(&head, "iterations")?,
        converged: head_field(&head, "converged")?,
        nu: head_field(&head, "nu")?,
        rho: head_field(&head, "rho")?,
        tau: head_field(&head, "tau")?,
        components,
        x_hat,
    };
    if doc.components.len() != doc.k_hat {
        return Err(ValseError::Validation(format!(
            "k_hat = {} but {} component blocks",
            doc.k_hat,
            doc.components.len()
        )));
    }
    Ok(doc)
}

/// Flat `key = value` settings; keys use underscores (dashes are accepted).
#[derive(Debug, Clone, Default)]
pub struct ConfigFile {
    values: HashMap<String, String>,
}

const KNOWN_KEYS: &[&str] = &[
    "seed", "trials", "mode", "heuristic", "d", "out", "threads", "preset", "trial_out", "no_timing",
    "max_iters", "rel_tol", "sweep", "values", "n", "m", "k", "snr_db", "separation_bins",
    "exact_separation", "amp_std", "kappa", "mu", "points",
];

impl ConfigFile {
    pub fn parse(text: &str) -> Result<Self> {
        let mut values = HashMap::new();
        for (ln, line) in content_lines(text) {
            let Some((k, v)) = line.split_once('=') else {
                return parse_err(ln, "expected 'key = value'");
            };
            let key = k.trim().replace('-', "_");
            if !KNOWN_KEYS.contains(&key.as_str()) {
                return parse_err(ln, format!("unknown key '{}'", k.trim()));
            }
            values.insert(key, v.trim().to_string());
        }
        Ok(Self { values })
    }

    pub fn load(path: Option<&Path>) -> Result<Self> {
        match path {
            Some(p) => Self::parse(&fs::read_to_string(p)?),
            None => Ok(Self::default()),
        }
    }

    fn get<T: FromStr>(&self, key: &str) -> Result<Option<T>> {
        match self.values.get(key) {
            None => Ok(None),
            Some(v) => v
                .parse()
                .map(Some)
                .map_err(|_| ValseError::Validation(format!("config key '{key}': cannot parse '{v}'"))),
        }
    }

    /// Flag value if given, else the file's, else `None`.
    fn pick<T: FromStr>(&self, flag: Option<T>, key: &str) -> Result<Option<T>> {
        match flag {
            Some(v) => Ok(Some(v)),
            None => self.get(key),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModeArg {
    Full,
    Point,
}

impl FromStr for ModeArg {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        <Self as ValueEnum>::from_str(s, true)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum HeuristicArg {
    H1,
    H2,
}

impl FromStr for HeuristicArg {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        <Self as ValueEnum>::from_str(s, true)
    }
}

#[derive(Debug, Parser)]
#[command(name = "valse", about = "Variational line spectral estimation", disable_version_flag = true)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
#[allow(clippy::large_enum_variant)]
pub enum Command {
    /// Estimate the spectral lines of one signal file.
    Estimate(EstimateArgs),
    /// Monte-Carlo benchmark over a parameter sweep.
    Bench(BenchArgs),
    /// Compare a wrapped von Mises pdf with its mixture approximation.
    DemoVm(DemoArgs),
    /// Print the version.
    Version,
}

#[derive(Debug, Clone, Args)]
pub struct EngineArgs {
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub mode: Option<ModeArg>,
    #[arg(long, value_enum)]
    pub heuristic: Option<HeuristicArg>,
    /// Mixture size for heuristic h1.
    #[arg(long)]
    pub d: Option<usize>,
    #[arg(long)]
    pub max_iters: Option<usize>,
    #[arg(long)]
    pub rel_tol: Option<f64>,
}

impl EngineArgs {
    fn engine_config(&self, file: &ConfigFile) -> Result<EngineConfig> {
        let mut cfg = EngineConfig::default();
        if let Some(m) = file.pick(self.mode, "mode")? {
            cfg.mode = match m {
                ModeArg::Full => Mode::Full,
                ModeArg::Point => Mode::Point,
            };
        }
        if let Some(h) = file.pick(self.heuristic, "heuristic")? {
            cfg.heuristic = match h {
                HeuristicArg::H1 => Heuristic::H1,
                HeuristicArg::H2 => Heuristic::H2,
            };
        }
        if let Some(d) = file.pick(self.d, "d")? {
            cfg.d = d;
        }
        if let Some(v) = file.pick(self.max_iters, "max_iters")? {
            cfg.max_iters = v;
        }
        if let Some(v) = file.pick(self.rel_tol, "rel_tol")? {
            cfg.rel_tol = v;
        }
        Ok(cfg)
    }
}

#[derive(Debug, Clone, Args)]
pub struct EstimateArgs {
    /// Signal file: header `N M`, then `M` lines `index re im`.
    pub input: PathBuf,
    /// Result document path (standard output if omitted).
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[command(flatten)]
    pub engine: EngineArgs,
}

#[derive(Debug, Clone, Args)]
pub struct BenchArgs {
    /// fig5, fig6, fig7 or scaling; otherwise a custom sweep.
    #[arg(long)]
    pub preset: Option<String>,
    /// Custom sweep variable: snr_db, m or separation_bins.
    #[arg(long)]
    pub sweep: Option<String>,
    /// Comma-separated sweep values.
    #[arg(long, allow_hyphen_values = true)]
    pub values: Option<String>,
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub m: Option<usize>,
    #[arg(long)]
    pub k: Option<usize>,
    #[arg(long, allow_hyphen_values = true)]
    pub snr_db: Option<f64>,
    /// Frequency separation in units of 2 pi / N.
    #[arg(long)]
    pub separation_bins: Option<f64>,
    #[arg(long)]
    pub exact_separation: bool,
    #[arg(long)]
    pub amp_std: Option<f64>,
    #[arg(long)]
    pub trials: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub threads: Option<usize>,
    /// Aggregate CSV path (standard output if omitted).
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Optional per-trial CSV.
    #[arg(long)]
    pub trial_out: Option<PathBuf>,
    /// Leave runtimes out so repeated runs give identical files.
    #[arg(long)]
    pub no_timing: bool,
    #[command(flatten)]
    pub engine: EngineArgs,
}

#[derive(Debug, Clone, Args)]
pub struct DemoArgs {
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Harmonic order of the wrapped density.
    #[arg(long)]
    pub m: Option<i64>,
    #[arg(long)]
    pub kappa: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub mu: Option<f64>,
    /// Grid points on [-pi, pi].
    #[arg(long)]
    pub points: Option<usize>,
    /// CSV path (standard output if omitted).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

fn emit(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(p) => fs::write(p, text)?,
        None => std::io::stdout().write_all(text.as_bytes())?,
    }
    Ok(())
}

pub fn cmd_estimate(args: &EstimateArgs) -> Result<()> {
    let file = ConfigFile::load(args.engine.config.as_deref())?;
    let cfg = args.engine.engine_config(&file)?;
    let mset = parse_signal(&fs::read_to_string(&args.input)?)?;
    let res = run(&mset, &cfg)?;
    let out: Option<PathBuf> = file.pick(args.out.clone(), "out")?;
    emit(out.as_deref(), &format_result(&res))
}

fn parse_list(text: &str) -> Result<Vec<f64>> {
    let vals: Vec<f64> = text
        .split(',')
        .map(|t| t.trim().parse().map_err(|_| ValseError::Validation(format!("bad sweep value '{t}'"))))
        .collect::<Result<_>>()?;
    if vals.is_empty() {
        return Err(ValseError::Validation("empty sweep".into()));
    }
    Ok(vals)
}

fn custom_sweep(args: &BenchArgs, file: &ConfigFile) -> Result<Vec<SweepPoint>> {
    let sweep: String = file
        .pick(args.sweep.clone(), "sweep")?
        .ok_or_else(|| ValseError::Validation("give --preset or --sweep with --values".into()))?;
    let values = parse_list(
        &file
            .pick(args.values.clone(), "values")?
            .ok_or_else(|| ValseError::Validation("--sweep needs --values".into()))?,
    )?;
    let n = file.pick(args.n, "n")?.unwrap_or(21);
    let m = file.pick(args.m, "m")?.unwrap_or(n);
    let k = file.pick(args.k, "k")?.unwrap_or(5);
    let snr = file.pick(args.snr_db, "snr_db")?.unwrap_or(15.0);
    let bins = file.pick(args.separation_bins, "separation_bins")?.unwrap_or(1.0);
    let exact = args.exact_separation || file.get("exact_separation")?.unwrap_or(false);
    let amp_std = file.pick(args.amp_std, "amp_std")?.unwrap_or(DEFAULT_AMP_STD);
    let var: &'static str = match sweep.as_str() {
        "snr_db" => "snr_db",
        "m" => "m",
        "separation_bins" => "separation_bins",
        other => return Err(ValseError::Validation(format!("unknown sweep variable '{other}'"))),
    };
    values
        .into_iter()
        .map(|v| {
            let mut g = GenConfig {
                exact_separation: exact,
                amp_std,
                ..GenConfig::new(n, m, k, bins * 2.0 * PI / n as f64, snr)
            };
            match var {
                "snr_db" => g.snr_db = v,
                "m" => {
                    if v < 1.0 || v.fract() != 0.0 {
                        return Err(ValseError::Validation(format!("M must be a positive integer, got {v}")));
                    }
                    g.m = v as usize;
                }
                _ => g.delta_omega = v * 2.0 * PI / n as f64,
            }
            g.validate()?;
            Ok(SweepPoint { var, value: v, gen: g })
        })
        .collect()
}

fn trial_rows(out: &mut String, point: &SweepPoint, records: &[TrialRecord], timing: bool) {
    for r in records {
        let errs = r
            .freq_sq_errors
            .as_ref()
            .map(|e| e.iter().map(|v| v.to_string()).collect::<Vec<_>>().join(";"))
            .unwrap_or_default();
        let runtime = if timing { (r.runtime.as_secs_f64() * 1e3).to_string() } else { "NaN".into() };
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{},{},{},{}",
            point.var, point.value, r.seed, r.k, r.k_hat, r.success, r.nmse, errs, r.crlb_freq_var, r.crlb_nmse, r.iters, r.converged, runtime
        );
    }
}

pub fn cmd_bench(args: &BenchArgs) -> Result<()> {
    let file = ConfigFile::load(args.engine.config.as_deref())?;
    let engine = args.engine.engine_config(&file)?;
    let points = match file.pick(args.preset.clone(), "preset")? {
        Some(name) => {
            let mut pts = Preset::parse(&name)?.points();
            if let Some(s) = file.pick(args.amp_std, "amp_std")? {
                for p in &mut pts {
                    p.gen.amp_std = s;
                }
            }
            pts
        }
        None => custom_sweep(args, &file)?,
    };
    let trials = file.pick(args.trials, "trials")?.unwrap_or(100);
    let seed = file.pick(args.seed, "seed")?.unwrap_or(0);
    let threads = file.pick(args.threads, "threads")?;
    let timing = !(args.no_timing || file.get("no_timing")?.unwrap_or(false));
    let trial_out: Option<PathBuf> = file.pick(args.trial_out.clone(), "trial_out")?;

    let mut csv = format!("{BENCH_HEADER}\n");
    let mut per_trial = format!("{TRIAL_HEADER}\n");
    for point in &points {
        let cfg = ExperimentConfig {
            gen: point.gen,
            engine: engine.clone(),
            trials,
            base_seed: seed,
            threads,
        };
        let records = run_trials(&cfg)?;
        let a = aggregate(&records);
        let runtime = if timing { a.mean_runtime_ms.to_string() } else { "NaN".into() };
        let _ = writeln!(
            csv,
            "{},{},{},{},{},{},{},{},{},{}",
            point.var,
            point.value,
            a.n_trials,
            a.success_rate,
            a.nmse_db,
            a.freq_rmse,
            a.crlb_freq_rmse,
            a.crlb_nmse_db,
            runtime,
            mode_name(engine.mode)
        );
        trial_rows(&mut per_trial, point, &records, timing);
        log::info!("{} = {}: success rate {}", point.var, point.value, a.success_rate);
    }
    if let Some(p) = trial_out {
        fs::write(p, per_trial)?;
    }
    let out: Option<PathBuf> = file.pick(args.out.clone(), "out")?;
    emit(out.as_deref(), &csv)
}

/// Grid of `(theta, wrapped pdf, mixture pdf)` and the mixture concentration.
pub fn demo_vm_table(m: i64, kappa: f64, mu: f64, points: usize) -> Result<(Vec<[f64; 3]>, f64)> {
    if points < 2 {
        return Err(ValseError::Validation("need at least 2 grid points".into()));
    }
    let param = VmParam::from_polar(kappa, mu);
    let mix = unwrap_vm(m, &param)?;
    let kappa_tilde = solve_concentration(m, kappa)?;
    let rows = (0..points)
        .map(|i| {
            let t = -PI + 2.0 * PI * i as f64 / (points - 1) as f64;
            [t, vm_pdf(m as f64 * t, &param), mix.pdf(t)]
        })
        .collect();
    Ok((rows, kappa_tilde))
}

pub fn cmd_demo_vm(args: &DemoArgs) -> Result<()> {
    let file = ConfigFile::load(args.config.as_deref())?;
    let m = file.pick(args.m, "m")?.unwrap_or(3);
    let kappa = file.pick(args.kappa, "kappa")?.unwrap_or(10.0);
    let mu = file.pick(args.mu, "mu")?.unwrap_or(0.0);
    let points = file.pick(args.points, "points")?.unwrap_or(721);
    let (rows, kappa_tilde) = demo_vm_table(m, kappa, mu, points)?;
    let mut csv = format!("{DEMO_HEADER}\n");
    for r in rows {
        let _ = writeln!(csv, "{},{},{}", r[0], r[1], r[2]);
    }
    eprintln!("kappa_tilde: {kappa_tilde}");
    let out: Option<PathBuf> = file.pick(args.out.clone(), "out")?;
    emit(out.as_deref(), &csv)
}

pub fn execute(cli: &Cli) -> Result<()> {
    match &cli.command {
        Command::Estimate(a) => cmd_estimate(a),
        Command::Bench(a) => cmd_bench(a),
        Command::DemoVm(a) => cmd_demo_vm(a),
        Command::Version => {
            println!("valse {}", env!("CARGO_PKG_VERSION"));
            Ok(())
        }
    }
}
