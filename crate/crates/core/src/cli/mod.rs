//! Command line front end.
//!
//! Exit codes: 0 success, 2 usage or input error, 3 the fit did not
//! converge, 4 a computed invariant failed.

pub mod config;
pub mod verify;

use std::fmt::Write as _;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;

use crate::edengine::{run_pipeline, Boundary, PipelineConfig, PipelineReport, EIGEN_FLOOR};
use crate::error::Error;
use crate::gibbs::GibbsEnsemble;
use crate::intdist::{fit_free_spectrum, FitConfig};
use crate::spectra::{spectrum_to_mode_energies, EntanglementSpectrum, ModeEnergies};
use crate::wick::{report, two_mode_levels, violation_two_mode_as_printed, violation_two_mode_closed, WickMethod};

pub use config::ModelSettings;
pub use verify::{run_suite, Suite, SuiteOutcome};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_NOT_CONVERGED: i32 = 3;
pub const EXIT_INVARIANT: i32 = 4;

/// Slack allowed on the reduced-state invariants checked by `ed run`.
const INVARIANT_TOL: f64 = 1e-10;

#[derive(Debug, Parser)]
#[command(name = "wickdist", version, about = "Wick violation and interaction distance of fermionic entanglement spectra")]
pub struct Cli {
    #[command(subcommand)]
    command: Command,
    /// `key = value` model file; command line flags take precedence.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Write results here instead of standard output.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Number of simplex starts.
    #[arg(long, global = true)]
    restarts: Option<usize>,
    /// Simplex convergence tolerance.
    #[arg(long, global = true)]
    tol: Option<f64>,
    /// Use the two-mode formula without the e^{E12} factor.
    #[arg(long, global = true)]
    as_printed: bool,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Occupations and violation of a two-mode Gibbs state.
    TwoMode {
        #[arg(long, allow_hyphen_values = true)]
        e1: f64,
        #[arg(long, allow_hyphen_values = true)]
        e2: f64,
        #[arg(long, allow_hyphen_values = true)]
        e12: f64,
    },
    /// Pairwise violations of a labeled spectrum file.
    Wick {
        spectrum: PathBuf,
        #[arg(long, value_enum, default_value_t = WickMethod::Exact)]
        method: WickMethod,
    },
    /// Interaction distance of a spectrum file.
    Intdist {
        spectrum: PathBuf,
        /// Number of modes; defaults to log2 of the number of levels.
        #[arg(long)]
        modes: Option<usize>,
    },
    /// Exact diagonalization of the t–V chain.
    Ed {
        #[command(subcommand)]
        command: EdCommand,
    },
    /// Built-in self-checks, one summary line per suite.
    Verify {
        #[arg(long, value_enum, value_delimiter = ',', default_values_t = [Suite::Bound, Suite::Consistency, Suite::FreeChain])]
        suites: Vec<Suite>,
    },
}

#[derive(Debug, Subcommand)]
enum EdCommand {
    /// One model: manifest followed by the entanglement spectrum.
    Run(ModelArgs),
    /// Sweep the interaction and write one CSV row per value.
    Scan {
        #[command(flatten)]
        model: ModelArgs,
        /// `start:stop:step`, inclusive of `stop`.
        #[arg(long, allow_hyphen_values = true)]
        v_range: String,
    },
}

#[derive(Debug, Args)]
struct ModelArgs {
    #[arg(long = "L")]
    length: Option<usize>,
    #[arg(long = "M")]
    filling: Option<usize>,
    #[arg(long = "t", allow_hyphen_values = true)]
    hopping: Option<f64>,
    #[arg(long = "V", allow_hyphen_values = true)]
    interaction: Option<f64>,
    #[arg(long = "mu", allow_hyphen_values = true)]
    chemical_potential: Option<f64>,
    #[arg(long, value_enum)]
    boundary: Option<Boundary>,
    #[arg(long)]
    cut: Option<usize>,
}

#[derive(Debug, thiserror::Error)]
enum CliError {
    #[error(transparent)]
    Lib(#[from] Error),
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("{0}")]
    Usage(String),
}

impl CliError {
    fn code(&self) -> i32 {
        match self {
            CliError::Lib(Error::NotHermitian(_) | Error::AmbiguousLabel { .. } | Error::LabelCollision { .. }) => {
                EXIT_INVARIANT
            }
            _ => EXIT_USAGE,
        }
    }
}

type CliResult<T> = std::result::Result<T, CliError>;

/// Text to emit and the exit code it comes with.
struct Output {
    text: String,
    code: i32,
}

impl Output {
    fn ok(text: String) -> Self {
        Self { text, code: EXIT_OK }
    }
}

fn read_file(path: &Path) -> CliResult<String> {
    std::fs::read_to_string(path).map_err(|source| CliError::Io {
        path: path.display().to_string(),
        source,
    })
}

fn read_spectrum(path: &Path) -> CliResult<EntanglementSpectrum> {
    let s = EntanglementSpectrum::parse(&read_file(path)?)?;
    if s.is_empty() {
        return Err(CliError::Usage(format!("{}: no levels", path.display())));
    }
    Ok(s.normalize())
}

impl Cli {
    fn settings(&self, model: Option<&ModelArgs>) -> CliResult<ModelSettings> {
        let file = match &self.config {
            Some(p) => ModelSettings::parse(&read_file(p)?)?,
            None => ModelSettings::default(),
        };
        let flags = ModelSettings {
            seed: self.seed,
            restarts: self.restarts,
            tol: self.tol,
            ..model.map(ModelArgs::settings).unwrap_or_default()
        };
        Ok(file.overridden_by(&flags))
    }

    fn fit_config(settings: &ModelSettings) -> FitConfig {
        let d = FitConfig::default();
        FitConfig {
            restarts: settings.restarts.unwrap_or(d.restarts),
            tol: settings.tol.unwrap_or(d.tol),
            seed: settings.seed.unwrap_or(d.seed),
            ..d
        }
    }

    fn execute(&self) -> CliResult<Output> {
        match &self.command {
            Command::TwoMode { e1, e2, e12 } => two_mode(*e1, *e2, *e12, self.as_printed),
            Command::Wick { spectrum, method } => wick(&read_spectrum(spectrum)?, *method),
            Command::Intdist { spectrum, modes } => {
                let fit = Self::fit_config(&self.settings(None)?);
                intdist(&read_spectrum(spectrum)?, *modes, &fit)
            }
            Command::Ed { command } => match command {
                EdCommand::Run(model) => ed_run(&self.settings(Some(model))?),
                EdCommand::Scan { model, v_range } => ed_scan(&self.settings(Some(model))?, v_range),
            },
            Command::Verify { suites } => {
                let settings = self.settings(None)?;
                verify(suites, settings.seed.unwrap_or(0), &Self::fit_config(&settings), self.as_printed)
            }
        }
    }
}

impl ModelArgs {
    fn settings(&self) -> ModelSettings {
        ModelSettings {
            length: self.length,
            filling: self.filling,
            hopping: self.hopping,
            interaction: self.interaction,
            chemical_potential: self.chemical_potential,
            boundary: self.boundary,
            cut: self.cut,
            ..Default::default()
        }
    }
}

fn two_mode(e1: f64, e2: f64, e12: f64, as_printed: bool) -> CliResult<Output> {
    let m = ModeEnergies::free(vec![e1, e2])?.with_pair(0, 1, e12)?;
    let g = GibbsEnsemble::new(&m)?;
    let (l1, l2, l12) = two_mode_levels(&m)?;
    let closed = violation_two_mode_closed(l1, l2, l12)?;
    let printed = violation_two_mode_as_printed(l1, l2, l12)?;
    let mut out = String::new();
    writeln!(out, "E1={l1:.11e}").unwrap();
    writeln!(out, "E2={l2:.11e}").unwrap();
    writeln!(out, "E12={l12:.11e}").unwrap();
    writeln!(out, "Z={:.11e}", g.partition_function()).unwrap();
    writeln!(out, "n1={:.11e}", g.occupation(0)?).unwrap();
    writeln!(out, "n2={:.11e}", g.occupation(1)?).unwrap();
    writeln!(out, "n12={:.11e}", g.pair_occupation(0, 1)?).unwrap();
    writeln!(out, "W={:.11e}", if as_printed { printed } else { closed }).unwrap();
    writeln!(out, "W_closed={closed:.11e}").unwrap();
    writeln!(out, "W_as_printed={printed:.11e}").unwrap();
    Ok(Output::ok(out))
}

fn wick(s: &EntanglementSpectrum, method: WickMethod) -> CliResult<Output> {
    if !s.is_labeled() || !s.is_complete() {
        return Err(CliError::Usage(
            "violations need a complete labeled spectrum (one `bits,energy` line per pattern)".into(),
        ));
    }
    let r = report(&spectrum_to_mode_energies(s)?, method)?;
    let mut out = format!("# method={}\n# n_modes={}\n# w_max={:.16e}\ni,j,w\n", r.method, r.n_modes, r.w_max);
    for ((i, j), w) in &r.pairwise {
        writeln!(out, "{i},{j},{w:.16e}").unwrap();
    }
    Ok(Output::ok(out))
}

fn modes_for(s: &EntanglementSpectrum, modes: Option<usize>) -> CliResult<usize> {
    if let Some(n) = modes.or_else(|| s.n_modes()) {
        return Ok(n);
    }
    let len = s.len();
    if len.is_power_of_two() {
        Ok(len.trailing_zeros() as usize)
    } else {
        Err(CliError::Usage(format!("{len} levels is not a power of two; pass --modes")))
    }
}

fn intdist(s: &EntanglementSpectrum, modes: Option<usize>, fit: &FitConfig) -> CliResult<Output> {
    let n = modes_for(s, modes)?;
    let r = fit_free_spectrum(s, n, fit)?;
    let eps: Vec<String> = r.eps_star.iter().map(|e| format!("{e:.16e}")).collect();
    let mut out = String::new();
    writeln!(out, "modes={n}").unwrap();
    writeln!(out, "d_f={:.16e}", r.d_f).unwrap();
    writeln!(out, "e0_star={:.16e}", r.e0_star).unwrap();
    writeln!(out, "eps_star={}", eps.join(",")).unwrap();
    writeln!(out, "objective_evals={}", r.objective_evals).unwrap();
    writeln!(out, "restarts_used={}", r.restarts_used).unwrap();
    writeln!(out, "converged={}", r.converged).unwrap();
    Ok(Output {
        text: out,
        code: if r.converged { EXIT_OK } else { EXIT_NOT_CONVERGED },
    })
}

/// Invariants of the reduced state that must hold for any ground state.
fn invariant_failures(r: &PipelineReport) -> Vec<String> {
    let mut bad = Vec::new();
    if (r.reduced.trace() - 1.0).abs() > INVARIANT_TOL {
        bad.push(format!("trace {:.3e}", r.reduced.trace()));
    }
    if r.number_residual > INVARIANT_TOL {
        bad.push(format!("number residual {:.3e}", r.number_residual));
    }
    if r.anomalous_max > INVARIANT_TOL {
        bad.push(format!("anomalous correlator {:.3e}", r.anomalous_max));
    }
    if r.orbitals.occupations.iter().any(|&v| !(-INVARIANT_TOL..=1.0 + INVARIANT_TOL).contains(&v)) {
        bad.push("occupation outside [0, 1]".into());
    }
    let total: f64 = r.orbitals.occupations.iter().sum();
    if (total - r.reduced.particle_number()).abs() > INVARIANT_TOL {
        bad.push(format!("sum of occupations {total:.12e}"));
    }
    bad
}

fn ed_run(settings: &ModelSettings) -> CliResult<Output> {
    let (model, cut) = settings.model()?;
    let fit = Cli::fit_config(settings);
    let cfg = PipelineConfig {
        fit: fit.clone(),
        ..PipelineConfig::new(cut)
    };
    let r = run_pipeline(&model, &cfg)?;
    let bad = invariant_failures(&r);

    let mut m = String::new();
    let mut kv = |k: &str, v: String| writeln!(m, "# {k}={v}").unwrap();
    kv("version", env!("CARGO_PKG_VERSION").into());
    kv("L", model.length.to_string());
    kv("M", model.filling.to_string());
    kv("t", format!("{:.16e}", model.hopping));
    kv("V", format!("{:.16e}", model.interaction));
    kv("mu", format!("{:.16e}", model.chemical_potential));
    kv("boundary", model.boundary.to_string());
    kv("cut", cut.to_string());
    kv("seed", fit.seed.to_string());
    kv("restarts", fit.restarts.to_string());
    kv("tol", format!("{:e}", fit.tol));
    kv("eigen_floor", format!("{EIGEN_FLOOR:e}"));
    kv("ground_energy", format!("{:.16e}", r.ground_energy));
    kv("gap", format!("{:.16e}", r.gap));
    kv("gap_warning", r.gap_warning.to_string());
    kv("w_max", format!("{:.16e}", r.direct.w_max));
    kv("d_f", format!("{:.16e}", r.fit.d_f));
    kv("bound_slack", format!("{:.16e}", r.bound.slack));
    kv("bound_ok", r.bound.holds.to_string());
    kv("fit_converged", r.fit.converged.to_string());
    kv("labeling_ok", r.labeling_ok().to_string());
    if let Err(e) = &r.labeled {
        kv("labeling_error", e.to_string());
    }
    if let (Some(w), Some(p)) = (r.labeled_w_max, r.max_pair_energy) {
        kv("labeled_w_max", format!("{w:.16e}"));
        kv("max_pair_energy", format!("{p:.16e}"));
    }
    kv("fitted_basis_w_max", format!("{:.16e}", r.fitted_basis_w_max));
    kv("full_wick_residual", format!("{:.16e}", r.full_wick_residual));
    kv("number_residual", format!("{:.16e}", r.number_residual));
    kv("anomalous_max", format!("{:.16e}", r.anomalous_max));
    kv("clamped_levels", r.clamped_levels().to_string());
    let occ: Vec<String> = r.orbitals.occupations.iter().map(|v| format!("{v:.16e}")).collect();
    kv("occupations", occ.join(","));
    kv("invariants_ok", bad.is_empty().to_string());
    for b in &bad {
        log::error!("invariant failed: {b}");
    }

    let spectrum = r.labeled.as_ref().unwrap_or(&r.spectrum);
    m.push_str(&spectrum.to_text());
    let code = if !bad.is_empty() {
        EXIT_INVARIANT
    } else if !r.fit.converged {
        EXIT_NOT_CONVERGED
    } else {
        EXIT_OK
    };
    Ok(Output { text: m, code })
}

/// Inclusive `start:stop:step` grid. Values are `start + k step` so that
/// repeated runs produce identical rows.
fn parse_range(spec: &str) -> CliResult<Vec<f64>> {
    let bad = || CliError::Usage(format!("expected start:stop:step with step > 0, got '{spec}'"));
    let parts: Vec<f64> = spec
        .split(':')
        .map(|p| p.trim().parse::<f64>())
        .collect::<std::result::Result<_, _>>()
        .map_err(|_| bad())?;
    let [start, stop, step] = parts[..] else {
        return Err(bad());
    };
    if !(step > 0.0) || !start.is_finite() || !stop.is_finite() || stop < start {
        return Err(bad());
    }
    // Allow stop to be hit despite rounding in (stop - start) / step.
    let count = ((stop - start) / step + 1e-9).floor() as usize + 1;
    if count > 100_000 {
        return Err(CliError::Usage(format!("range '{spec}' has {count} points")));
    }
    Ok((0..count).map(|k| start + k as f64 * step).collect())
}

fn ed_scan(settings: &ModelSettings, v_range: &str) -> CliResult<Output> {
    let values = parse_range(v_range)?;
    let (model, cut) = settings.model()?;
    let cfg = PipelineConfig {
        fit: Cli::fit_config(settings),
        ..PipelineConfig::new(cut)
    };
    let rows: Vec<[String; 7]> = values
        .par_iter()
        .map(|&v| {
            let f = |x: f64| format!("{x:.16e}");
            let model = crate::edengine::LatticeModel {
                interaction: v,
                ..model
            };
            match run_pipeline(&model, &cfg) {
                Ok(r) => [
                    f(v),
                    f(r.direct.w_max),
                    f(r.fit.d_f),
                    f(r.bound.slack),
                    r.bound.holds.to_string(),
                    r.gap_warning.to_string(),
                    r.labeling_ok().to_string(),
                ],
                Err(e) => {
                    log::error!("V={v}: {e}");
                    let nan = "NaN".to_string();
                    [f(v), nan.clone(), nan.clone(), nan, "false".into(), "false".into(), "false".into()]
                }
            }
        })
        .collect();

    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(Vec::new());
    let write_err = |e: csv::Error| CliError::Usage(e.to_string());
    w.write_record(["V", "w_max", "d_f", "bound_slack", "bound_ok", "gap_warning", "labeling_ok"])
        .map_err(write_err)?;
    for row in &rows {
        w.write_record(row).map_err(write_err)?;
    }
    let bytes = w.into_inner().map_err(|e| CliError::Usage(e.to_string()))?;
    Ok(Output::ok(String::from_utf8(bytes).expect("ascii output")))
}

fn verify(suites: &[Suite], seed: u64, fit: &FitConfig, as_printed: bool) -> CliResult<Output> {
    let mut suites = suites.to_vec();
    suites.sort();
    suites.dedup();
    let mut out = String::new();
    let mut all = true;
    for s in suites {
        let o = run_suite(s, seed, fit, as_printed)?;
        all &= o.passed();
        writeln!(out, "{o}").unwrap();
    }
    Ok(Output {
        text: out,
        code: if all { EXIT_OK } else { EXIT_INVARIANT },
    })
}

/// Parses `args` (including the program name), runs the command and writes
/// its output to `stdout` or to `--out`. Returns the process exit code.
pub fn run<I, T>(args: I, stdout: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    let (text, code) = match cli.execute() {
        Ok(o) => (o.text, o.code),
        Err(e) => {
            eprintln!("error: {e}");
            return e.code();
        }
    };
    let written = match &cli.out {
        Some(path) => std::fs::write(path, &text).map_err(|source| CliError::Io {
            path: path.display().to_string(),
            source,
        }),
        None => stdout.write_all(text.as_bytes()).map_err(|source| CliError::Io {
            path: "<stdout>".into(),
            source,
        }),
    };
    if let Err(e) = written {
        eprintln!("error: {e}");
        return EXIT_USAGE;
    }
    code
}

pub fn main() -> i32 {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    run(std::env::args_os(), &mut std::io::stdout().lock())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run_capture(args: &[&str]) -> (i32, String) {
        let mut buf = Vec::new();
        let code = run(std::iter::once("wickdist").chain(args.iter().copied()), &mut buf);
        (code, String::from_utf8(buf).unwrap())
    }

    #[test]
    fn two_mode_worked_example() {
        let (code, out) = run_capture(&["two-mode", "--e1", "1", "--e2", "2", "--e12", "0.5"]);
        assert_eq!(code, 0);
        let w: f64 = out.lines().find_map(|l| l.strip_prefix("W=")).unwrap().parse().unwrap();
        assert!((w - verify::WORKED_W).abs() <= verify::WORKED_TOL, "{out}");
        assert!(out.contains("E12=3.50000000000e0"));
    }

    #[test]
    fn range_parsing() {
        assert_eq!(parse_range("0:1:0.25").unwrap(), vec![0.0, 0.25, 0.5, 0.75, 1.0]);
        assert_eq!(parse_range("-1:-1:0.5").unwrap(), vec![-1.0]);
        assert_eq!(parse_range("0:0.3:0.1").unwrap().len(), 4);
        for bad in ["0:1:0", "0:1:-1", "1:0:0.5", "0:1", "a:1:1", "0:inf:1"] {
            assert!(parse_range(bad).is_err(), "{bad}");
        }
    }

    #[test]
    fn usage_errors() {
        assert_eq!(run_capture(&["two-mode", "--e1", "1"]).0, EXIT_USAGE);
        assert_eq!(run_capture(&["ed", "scan", "--v-range", "0:1:-0.5"]).0, EXIT_USAGE);
        assert_eq!(run_capture(&["intdist", "/nonexistent/spectrum.txt"]).0, EXIT_USAGE);
        assert_eq!(run_capture(&["ed", "run", "--L", "4", "--cut", "4"]).0, EXIT_USAGE);
        assert_eq!(run_capture(&["--help"]).0, EXIT_OK);
    }

    #[test]
    fn ed_run_free_chain() {
        let (code, out) = run_capture(&["ed", "run", "--L", "6", "--V", "0"]);
        assert_eq!(code, 0, "{out}");
        assert!(out.contains("# labeling_ok=true"));
        assert!(out.contains("# invariants_ok=true"));
        let levels = out.lines().filter(|l| !l.starts_with('#')).count();
        assert_eq!(levels, 8);
    }

    #[test]
    fn scan_rows_in_order() {
        let (code, out) = run_capture(&["ed", "scan", "--L", "4", "--v-range", "0:1:0.5"]);
        assert_eq!(code, 0);
        let lines: Vec<&str> = out.lines().collect();
        assert_eq!(lines[0], "V,w_max,d_f,bound_slack,bound_ok,gap_warning,labeling_ok");
        assert_eq!(lines.len(), 4);
        assert!(lines[3].starts_with("1.0000000000000000e0,"));
        assert!(!out.contains('\r'));
    }
}
