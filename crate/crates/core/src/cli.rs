//! Command-line driver. Settings resolve as flags, then `--set` overrides,
//! then the `--config` file, then built-in defaults; the output directory
//! falls back to `$TWOTUBES_OUT` and then `out`.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde_json::json;

use crate::analyze::{terrace_report, AnalysisOptions, TheoryRef};
use crate::error::{ConfigError, Error, Result, WaveError};
use crate::exec::Exec;
use crate::hetero::{
    find_ipm_heteroclinic, find_terrace, find_tfe_heteroclinic, hugoniot_locus, speed_samples, IpmOptions,
    TerraceOptions, TfeOptions,
};
use crate::io::{self, Metadata, TerraceRecord, WaveRecord};
use crate::model::{apply_override, parse_config, validate_config, Model, ModelParams, RawConfig};
use crate::pde::simulate;
use crate::tw::{rankine_hugoniot_speed, Branch, Side};

pub const OUT_ENV: &str = "TWOTUBES_OUT";

#[derive(Debug, Parser)]
#[command(name = "twotubes", version, about = "Gravity-driven mixing in two coupled porous tubes")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,

    /// Output directory [default: $TWOTUBES_OUT, else "out"].
    #[arg(long, global = true, value_name = "DIR")]
    pub out: Option<PathBuf>,

    /// TOML configuration file with flat keys.
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,

    /// Override a configuration key; repeatable.
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    pub set: Vec<String>,

    /// Run all kernels on one thread.
    #[arg(long, global = true)]
    pub sequential: bool,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Integrate the PDE and write snapshots, a series and metadata.
    Simulate,
    /// Compute one traveling wave and write its profile.
    Tw(TwArgs),
    /// Hugoniot loci on both sides and both branches.
    Hugoniot(LocusArgs),
    /// Terrace of two waves joining (-1,-1) to (1,1).
    Terrace(ModelArgs),
    /// Speed of a jump between two states.
    Rh(RhArgs),
    /// Extract the terrace from an existing run directory.
    Analyze(AnalyzeArgs),
}

#[derive(Debug, Clone, Args)]
pub struct ModelArgs {
    /// tfe or ipm.
    #[arg(long)]
    pub model: Option<Model>,
    /// Tube spacing (IPM only).
    #[arg(long)]
    pub l: Option<f64>,
}

#[derive(Debug, Args)]
pub struct TwArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    /// Wave speed, nonzero.
    #[arg(long, allow_negative_numbers = true)]
    pub v: f64,
    /// Sign branch: neg (r <= 0) or pos (r >= 0).
    #[arg(long, default_value = "neg")]
    pub branch: Branch,
    /// Half width of the profile window [default: 25/|v|].
    #[arg(long)]
    pub half_width: Option<f64>,
    /// Sampling step of TFE profiles.
    #[arg(long, default_value_t = 0.1)]
    pub dxi: f64,
    /// Skip the TFE shooting cross-check.
    #[arg(long)]
    pub no_shoot: bool,
}

#[derive(Debug, Args)]
pub struct LocusArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    /// Largest |v| sampled.
    #[arg(long, default_value_t = 0.5)]
    pub v_max: f64,
    /// Samples per side.
    #[arg(long, default_value_t = 20)]
    pub samples: usize,
}

#[derive(Debug, Args)]
pub struct RhArgs {
    /// Left state `c1,c2`.
    #[arg(long, allow_hyphen_values = true)]
    pub left: String,
    /// Right state `c1,c2`.
    #[arg(long, allow_hyphen_values = true)]
    pub right: String,
}

#[derive(Debug, Args)]
pub struct AnalyzeArgs {
    /// Run directory written by `simulate`.
    pub run: PathBuf,
    /// Compare against this model's terrace [default: the run's model].
    #[arg(long)]
    pub model: Option<Model>,
    /// Spacing for the IPM reference [default: the run's l].
    #[arg(long)]
    pub l: Option<f64>,
}

/// Parse `args`, run, and report errors as JSON on stderr. Returns the exit
/// status.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let argv: Vec<OsString> = args.into_iter().map(Into::into).collect();
    let cli = match Cli::try_parse_from(&argv) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = if code == 0 { write!(stdout, "{e}") } else { write!(stderr, "{e}") };
            return code;
        }
    };
    let argv: Vec<String> = argv.iter().map(|s| s.to_string_lossy().into_owned()).collect();
    match execute(&cli, argv, stdout) {
        Ok(()) => 0,
        Err(e) => {
            let payload = json!({ "error": { "kind": e.kind(), "message": e.to_string(), "exit_code": e.exit_code() } });
            let _ = writeln!(stderr, "{payload}");
            e.exit_code()
        }
    }
}

fn raw_config(cli: &Cli) -> Result<RawConfig> {
    let mut raw = match &cli.config {
        Some(p) => {
            let text = std::fs::read_to_string(p)
                .map_err(|e| ConfigError::Parse(format!("cannot read {}: {e}", p.display())))?;
            parse_config(&text)?
        }
        None => RawConfig::new(),
    };
    for s in &cli.set {
        apply_override(&mut raw, s)?;
    }
    Ok(raw)
}

fn default_out() -> PathBuf {
    std::env::var_os(OUT_ENV).map(PathBuf::from).unwrap_or_else(|| PathBuf::from("out"))
}

/// `--out`, then the configured `output_dir`, then the environment.
fn out_dir(cli: &Cli) -> Result<PathBuf> {
    if let Some(o) = &cli.out {
        return Ok(o.clone());
    }
    match raw_config(cli)?.get("output_dir") {
        Some(toml::Value::String(s)) => Ok(PathBuf::from(s)),
        Some(other) => Err(ConfigError::Invalid(vec![format!("output_dir must be a string, got {other}")]).into()),
        None => Ok(default_out()),
    }
}

/// Model and spacing from flags, falling back to the configuration.
fn model_params(cli: &Cli, args: &ModelArgs) -> Result<ModelParams> {
    let raw = raw_config(cli)?;
    let model = match args.model {
        Some(m) => m,
        None => match raw.get("model") {
            Some(toml::Value::String(s)) => s.parse().map_err(|e: String| ConfigError::Invalid(vec![e]))?,
            Some(other) => return Err(ConfigError::Invalid(vec![format!("model must be a string, got {other}")]).into()),
            None => Model::Tfe,
        },
    };
    let l = match args.l {
        Some(l) => Some(l),
        None => match raw.get("l") {
            Some(v) => Some(
                v.as_float()
                    .or_else(|| v.as_integer().map(|i| i as f64))
                    .ok_or_else(|| ConfigError::Invalid(vec![format!("l must be a number, got {v}")]))?,
            ),
            None => None,
        },
    };
    match model {
        Model::Tfe => Ok(ModelParams::tfe()),
        Model::Ipm => match l {
            Some(l) if l > 0.0 && l.is_finite() => Ok(ModelParams::ipm(l)),
            Some(l) => Err(ConfigError::Invalid(vec![format!("l must be positive for IPM, got {l}")]).into()),
            None => Err(ConfigError::Invalid(vec!["l is required for IPM".into()]).into()),
        },
    }
}

fn parse_state(s: &str) -> Result<[f64; 2]> {
    let parts: Vec<&str> = s.split(',').collect();
    let bad = || Error::from(ConfigError::Invalid(vec![format!("state '{s}' is not c1,c2")]));
    if parts.len() != 2 {
        return Err(bad());
    }
    let c1: f64 = parts[0].trim().parse().map_err(|_| bad())?;
    let c2: f64 = parts[1].trim().parse().map_err(|_| bad())?;
    Ok([c1, c2])
}

fn num_tag(x: f64) -> String {
    format!("{x}")
}

fn file_names(paths: &[PathBuf]) -> Vec<String> {
    paths.iter().map(|p| p.file_name().unwrap().to_string_lossy().into_owned()).collect()
}

fn write_meta(path: &Path, argv: Vec<String>, parameters: serde_json::Value, files: &[PathBuf]) -> Result<()> {
    let mut meta = Metadata::new(argv);
    meta.parameters = parameters;
    meta.files = file_names(files);
    io::write_json(path, &meta)
}

pub fn execute(cli: &Cli, argv: Vec<String>, stdout: &mut dyn Write) -> Result<()> {
    let exec = if cli.sequential { Exec::Sequential } else { Exec::Parallel };
    match &cli.command {
        Command::Simulate => {
            let mut raw = raw_config(cli)?;
            let out = out_dir(cli)?;
            raw.insert("output_dir".into(), toml::Value::String(out.to_string_lossy().into_owned()));
            let config = validate_config(&raw)?;
            let traj = simulate(&config, exec)?;
            let dir = PathBuf::from(&config.control.output_dir);
            io::write_run(&dir, &traj, Metadata::new(argv))?;
            writeln!(
                stdout,
                "wrote {} snapshots to {} ({} steps, c in [{:.6}, {:.6}])",
                traj.snapshots.len(),
                dir.display(),
                traj.stats.steps,
                traj.stats.c_min,
                traj.stats.c_max
            )?;
        }
        Command::Tw(a) => {
            let params = model_params(cli, &a.model)?;
            let sol = match params.model {
                Model::Tfe => find_tfe_heteroclinic(
                    a.v,
                    a.branch,
                    &TfeOptions { half_width: a.half_width, dxi: a.dxi, shoot: !a.no_shoot, ..Default::default() },
                )?,
                Model::Ipm => find_ipm_heteroclinic(
                    a.v,
                    params.l,
                    a.branch,
                    None,
                    &IpmOptions { half_width: a.half_width, ..Default::default() },
                )?,
            };
            let out = out_dir(cli)?;
            let stem = match params.model {
                Model::Tfe => format!("tw_tfe_{}_v{}", a.branch.slug(), num_tag(a.v)),
                Model::Ipm => format!("tw_ipm_l{}_{}_v{}", num_tag(params.l), a.branch.slug(), num_tag(a.v)),
            };
            let csv = out.join(format!("{stem}.csv"));
            let rec = out.join(format!("{stem}.json"));
            io::write_profile(&csv, &sol)?;
            io::write_json(&rec, &WaveRecord::new(&sol))?;
            write_meta(
                &out.join(format!("{stem}.meta.json")),
                argv,
                json!({ "model": params.model, "l": params.l, "v": a.v, "branch": a.branch.tag() }),
                &[csv, rec],
            )?;
            let [c1, c2] = sol.intermediate();
            writeln!(
                stdout,
                "v={} branch={} left={:?} right={:?} intermediate=[{c1},{c2}] rh_defect={:e}",
                a.v,
                a.branch.tag(),
                sol.endpoints.left,
                sol.endpoints.right,
                sol.rh_defect()
            )?;
        }
        Command::Hugoniot(a) => {
            let params = model_params(cli, &a.model)?;
            if !(a.v_max > 0.0) || a.samples == 0 {
                return Err(ConfigError::Invalid(vec!["v_max must be positive and samples nonzero".into()]).into());
            }
            let jobs: Vec<(Side, Branch)> = [Side::FromMinus, Side::ToPlus]
                .into_iter()
                .flat_map(|s| Branch::ALL.into_iter().map(move |b| (s, b)))
                .collect();
            let loci = exec.map(&jobs, |&(side, branch)| {
                hugoniot_locus(params.model, params.l, side, branch, &speed_samples(side, a.v_max, a.samples))
            });
            let out = out_dir(cli)?;
            let prefix = match params.model {
                Model::Tfe => "locus_tfe".to_string(),
                Model::Ipm => format!("locus_ipm_l{}", num_tag(params.l)),
            };
            let mut files = Vec::new();
            for locus in loci {
                let locus = locus?;
                let p = out.join(format!("{prefix}_{}_{}.csv", locus.side.tag(), locus.branch.slug()));
                io::write_locus(&p, &locus)?;
                writeln!(
                    stdout,
                    "{} {} {}: {} samples, {} gaps",
                    p.display(),
                    locus.side.tag(),
                    locus.branch.tag(),
                    locus.samples.len(),
                    locus.n_gaps()
                )?;
                files.push(p);
            }
            write_meta(
                &out.join(format!("{prefix}.meta.json")),
                argv,
                json!({ "model": params.model, "l": params.l, "v_max": a.v_max, "samples": a.samples }),
                &files,
            )?;
        }
        Command::Terrace(a) => {
            let params = model_params(cli, a)?;
            let t = find_terrace(params.model, params.l, &TerraceOptions::default())?;
            let out = out_dir(cli)?;
            let stem = match t.model {
                Model::Tfe => "terrace_tfe".to_string(),
                Model::Ipm => format!("terrace_ipm_l{}", num_tag(t.l)),
            };
            let p = out.join(format!("{stem}.json"));
            io::write_json(&p, &TerraceRecord::new(&t))?;
            write_meta(&out.join(format!("{stem}.meta.json")), argv, json!({ "model": params.model, "l": params.l }), &[p])?;
            writeln!(stdout, "v1={:?} v2={:?} sigma1=[{:?},{:?}]", t.v1, t.v2, t.sigma1[0], t.sigma1[1])?;
        }
        Command::Rh(a) => {
            let (left, right) = (parse_state(&a.left)?, parse_state(&a.right)?);
            let v = rankine_hugoniot_speed(left, right)
                .ok_or_else(|| WaveError::Invalid("c1 + c2 does not jump; speed undefined".into()))?;
            writeln!(stdout, "{v:?}")?;
        }
        Command::Analyze(a) => {
            let data = io::read_run(&a.run)?;
            let run_params = data.config.as_ref().map(|c| c.params);
            let model = a.model.or(run_params.map(|p| p.model)).unwrap_or(Model::Tfe);
            let theory = match model {
                Model::Tfe => TheoryRef::tfe(),
                Model::Ipm => {
                    let l = a
                        .l
                        .or(run_params.filter(|p| p.model == Model::Ipm).map(|p| p.l))
                        .ok_or_else(|| ConfigError::Invalid(vec!["l is required for an IPM reference".into()]))?;
                    io::theory_from_terrace(&find_terrace(Model::Ipm, l, &TerraceOptions::default())?)
                }
            };
            let report = terrace_report(&data.snapshots, &data.series, &theory, &AnalysisOptions::default(), exec)?;
            let out = cli.out.clone().unwrap_or_else(|| a.run.clone());
            let p = out.join("report.json");
            io::write_json(&p, &report)?;
            write_meta(&out.join("report.meta.json"), argv, json!({ "run": a.run, "model": model }), &[p])?;
            writeln!(stdout, "{}", report.summary_line())?;
        }
    }
    Ok(())
}
