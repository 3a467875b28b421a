//! Command-line front end.
//!
//! Every command computes its outputs in memory first and only then creates
//! the output directory, so a failing run leaves no files behind.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::json;

use crate::config::{preset, OutputFormat, RunConfig, ScanRun};
use crate::dynamics::{observables, Trajectory};
use crate::effective::{
    first_order_detunings, rabi_frequency, rwa_validity_report, second_order_coeffs,
    solve_resonance, target_detuning, effective_coupling, transfer_time,
};
use crate::error::{Error, Result};
use crate::hamiltonian::dicke_state;
use crate::protocol::run_protocol;
use crate::scan::{resonance_scan, scan_duration, uniform_grid, Execution, PeakReport, ScanCurve};
use crate::space::HilbertSpace;
use crate::validation::run_validation;

#[derive(Debug, Parser)]
#[command(name = "dicke-stark", version, about = "Dicke-Stark model simulator")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Sweep the qubit frequency and locate resonance peaks.
    Scan(CommonArgs),
    /// Run a pulse protocol under the full Hamiltonian.
    Protocol(CommonArgs),
    /// Effective couplings, detunings and selectivity at a working point.
    Effective(CommonArgs),
    /// Invariant and oracle-equivalence checks.
    Validate(CommonArgs),
}

#[derive(Debug, Args)]
pub struct CommonArgs {
    #[arg(long, value_name = "PATH", conflicts_with = "preset")]
    pub config: Option<PathBuf>,
    #[arg(long, value_name = "NAME")]
    pub preset: Option<String>,
    #[arg(long, value_name = "DIR", default_value = "out")]
    pub out: PathBuf,
    #[arg(long, value_enum)]
    pub format: Option<FormatArg>,
    /// Print the resolved configuration as TOML and exit.
    #[arg(long)]
    pub print_config: bool,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum FormatArg {
    Csv,
    Json,
}

impl From<FormatArg> for OutputFormat {
    fn from(f: FormatArg) -> Self {
        match f {
            FormatArg::Csv => OutputFormat::Csv,
            FormatArg::Json => OutputFormat::Json,
        }
    }
}

/// Files produced by a command, written only once everything succeeded.
#[derive(Debug, Default)]
pub struct Outputs {
    pub files: Vec<(String, Vec<u8>)>,
    pub messages: Vec<String>,
    pub success: bool,
}

impl Outputs {
    fn add(&mut self, name: impl Into<String>, bytes: Vec<u8>) {
        self.files.push((name.into(), bytes));
    }

    fn add_json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<()> {
        let mut bytes = serde_json::to_vec_pretty(value)?;
        bytes.push(b'\n');
        self.add(name, bytes);
        Ok(())
    }

    pub fn write(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir)?;
        for (name, bytes) in &self.files {
            fs::write(dir.join(name), bytes)?;
        }
        Ok(())
    }
}

pub fn load_config(args: &CommonArgs, allow_empty: bool) -> Result<RunConfig> {
    let mut cfg = match (&args.config, &args.preset) {
        (Some(path), None) => RunConfig::from_toml(&fs::read_to_string(path)?)?,
        (None, Some(name)) => preset(name)?,
        (None, None) if allow_empty => RunConfig::from_toml("")?,
        (None, None) => return Err(Error::Config("give --config PATH or --preset NAME".into())),
        (Some(_), Some(_)) => {
            return Err(Error::Config("--config and --preset are mutually exclusive".into()))
        }
    };
    if let Some(f) = args.format {
        cfg.format = Some(f.into());
    }
    Ok(cfg)
}

/// Parses, executes and writes outputs. Returns the process exit code.
pub fn run(cli: Cli) -> Result<i32> {
    let (args, outputs) = match &cli.command {
        Command::Scan(a) => (a, with_config(a, false, cmd_scan)?),
        Command::Protocol(a) => (a, with_config(a, false, cmd_protocol)?),
        Command::Effective(a) => (a, with_config(a, false, cmd_effective)?),
        Command::Validate(a) => (a, with_config(a, true, cmd_validate)?),
    };
    let Some(outputs) = outputs else { return Ok(0) };
    outputs.write(&args.out)?;
    let mut stdout = std::io::stdout().lock();
    for m in &outputs.messages {
        // a closed pipe is not an error for the run
        if writeln!(stdout, "{m}").is_err() {
            break;
        }
    }
    Ok(if outputs.success { 0 } else { 1 })
}

fn with_config(
    args: &CommonArgs,
    allow_empty: bool,
    cmd: fn(&RunConfig) -> Result<Outputs>,
) -> Result<Option<Outputs>> {
    let cfg = load_config(args, allow_empty)?;
    if args.print_config {
        print!("{}", cfg.to_toml()?);
        return Ok(None);
    }
    cmd(&cfg).map(Some)
}

fn format_of(cfg: &RunConfig) -> OutputFormat {
    cfg.format.unwrap_or_default()
}

#[derive(Debug, Serialize)]
struct CurvePeaks {
    curve: String,
    #[serde(flatten)]
    report: PeakReport,
}

/// One curve of a scan, with its predicted peak location.
pub struct ScanResult {
    pub run: ScanRun,
    pub curve: ScanCurve,
    pub predicted: Option<f64>,
    pub reports: Vec<PeakReport>,
}

/// Evaluates every run of the `[scan]` section.
pub fn execute_scan(cfg: &RunConfig, execution: Execution) -> Result<Vec<ScanResult>> {
    let model = cfg.model()?;
    let scan = cfg
        .scan
        .as_ref()
        .ok_or_else(|| Error::Config("missing [scan] section".into()))?;
    if scan.runs.is_empty() {
        return Err(Error::Config("scan: no runs given".into()));
    }
    let grid = uniform_grid(scan.window[0], scan.window[1], scan.points)?;
    let mut results = Vec::with_capacity(scan.runs.len());
    for run in &scan.runs {
        let params = model.params(run.initial.n)?;
        let space = HilbertSpace::symmetric(params.n_qubits, params.n_max)?;
        let psi0 = dicke_state(&space, run.initial.k, run.initial.n)?;
        let rule = run.duration_rule.unwrap_or(scan.duration_rule);
        let duration = scan_duration(rule, run.reference.as_ref(), &params)?;
        let curve = resonance_scan(&psi0, &grid, duration, &params, &space, execution)?;
        let predicted = match &run.reference {
            Some(t) => Some(params.with_omega_q(solve_resonance(t, &params)?).detuning_ratio()),
            None => None,
        };
        let reports = curve
            .peaks(run.initial.k as f64, scan.min_height)
            .iter()
            .map(|p| PeakReport::new(p, predicted))
            .collect();
        results.push(ScanResult {
            run: *run,
            curve,
            predicted,
            reports,
        });
    }
    Ok(results)
}

pub fn cmd_scan(cfg: &RunConfig) -> Result<Outputs> {
    let results = execute_scan(cfg, Execution::default())?;
    let single = results.len() == 1;
    let mut out = Outputs {
        success: true,
        ..Default::default()
    };
    let mut peaks = Vec::new();
    for r in &results {
        let label = r.run.label();
        let stem = if single { "scan".to_string() } else { format!("scan_{label}") };
        match format_of(cfg) {
            OutputFormat::Csv => {
                let mut buf = Vec::new();
                r.curve.write_csv(&mut buf)?;
                out.add(format!("{stem}.csv"), buf);
            }
            OutputFormat::Json => out.add_json(
                &format!("{stem}.json"),
                &json!({ "duration": r.curve.duration, "points": r.curve.points }),
            )?,
        }
        for report in &r.reports {
            out.messages.push(format!(
                "{label}: peak at {:.6} (height {:.4}){}",
                report.location,
                report.height,
                report
                    .predicted_location
                    .map(|p| format!(", predicted {p:.6}"))
                    .unwrap_or_default()
            ));
            peaks.push(CurvePeaks {
                curve: label.clone(),
                report: *report,
            });
        }
        if r.reports.is_empty() {
            out.messages.push(format!("{label}: no peak found"));
        }
    }
    out.add_json("peaks.json", &peaks)?;
    Ok(out)
}

fn trajectory_bytes(traj: &Trajectory, lambda: f64, format: OutputFormat) -> Result<Vec<u8>> {
    match format {
        OutputFormat::Csv => {
            let mut buf = Vec::new();
            traj.write_csv(&mut buf, Some(lambda))?;
            Ok(buf)
        }
        OutputFormat::Json => {
            let rows: Vec<_> = traj
                .times
                .iter()
                .zip(&traj.observables)
                .map(|(t, o)| {
                    json!({
                        "t": t,
                        "lambda_t": lambda * t,
                        "nq": o.nq,
                        "nph": o.nph,
                        "populations": o.populations(),
                    })
                })
                .collect();
            Ok(serde_json::to_vec_pretty(&rows)?)
        }
    }
}

pub fn cmd_protocol(cfg: &RunConfig) -> Result<Outputs> {
    let model = cfg.model()?;
    let section = cfg
        .protocol
        .as_ref()
        .ok_or_else(|| Error::Config("missing [protocol] section".into()))?;
    let spec = section.spec(model)?;
    let params = spec.params()?;
    let protocol = spec.compile()?;
    let space = HilbertSpace::symmetric(params.n_qubits, params.n_max)?;
    let result = run_protocol(&protocol, &params, &space, section.samples)?;

    let format = format_of(cfg);
    let ext = match format {
        OutputFormat::Csv => "csv",
        OutputFormat::Json => "json",
    };
    let mut out = Outputs {
        success: true,
        ..Default::default()
    };
    let mut steps = Vec::new();
    for (i, step) in result.steps.iter().enumerate() {
        out.add(
            format!("step{}.{ext}", i + 1),
            trajectory_bytes(&step.trajectory, params.lambda, format)?,
        );
        let b = step.boundary();
        let ((k, n), p) = b.dominant_cell();
        steps.push(json!({
            "label": step.label,
            "omega_q": step.omega_q,
            "ratio": params.with_omega_q(step.omega_q).detuning_ratio(),
            "t_start": step.t_start,
            "duration": step.duration,
            "nq": b.nq,
            "nph": b.nph,
            "dominant_cell": { "k": k, "n": n },
            "dominant_population": p,
        }));
        out.messages.push(format!(
            "step {} {}: dominant (k={k}, n={n}) population {p:.4}",
            i + 1,
            step.label
        ));
    }
    let fin = observables(&result.final_state);
    out.add_json(
        "summary.json",
        &json!({
            "fidelity": result.fidelity,
            "phase_optimized_fidelity": result.phase_optimized_fidelity,
            "target_population": result.target_population,
            "total_duration": protocol.total_duration(),
            "n_max": params.n_max,
            "target": protocol.target,
            "final": { "nq": fin.nq, "nph": fin.nph, "populations": fin.populations() },
            "steps": steps,
        }),
    )?;
    out.add("protocol.toml", spec.to_toml()?.into_bytes());
    out.messages.push(format!(
        "fidelity {:.6} (phase-optimized {:.6})",
        result.fidelity, result.phase_optimized_fidelity
    ));
    Ok(out)
}

pub fn cmd_effective(cfg: &RunConfig) -> Result<Outputs> {
    let model = cfg.model()?;
    let section = cfg.effective.unwrap_or(crate::config::EffectiveSection {
        cell: crate::protocol::Cell::new(0, 0),
        target: None,
    });
    let mut params = model.params(section.cell.n)?;
    let mut target_json = serde_json::Value::Null;
    if let Some(target) = section.target {
        let omega_q = solve_resonance(&target, &params)?;
        params = params.with_omega_q(omega_q);
        let space = HilbertSpace::symmetric(params.n_qubits, params.n_max)?;
        let coupling = effective_coupling(&target, &params)?;
        let report = rwa_validity_report(&target, &params, &space)?;
        target_json = json!({
            "label": target.label(),
            "omega_q": omega_q,
            "ratio": params.detuning_ratio(),
            "coupling": coupling,
            "detuning": target_detuning(&target, &params)?,
            "transfer_time": transfer_time(coupling)?,
            "selective": report.is_selective(),
            "min_competing_ratio": report.min_competing_ratio(),
            "rwa": report,
        });
    }
    let (k, n) = (section.cell.k, section.cell.n);
    let rabi = if k < params.n_qubits { Some(rabi_frequency(n, k, &params)?) } else { None };
    let value = json!({
        "params": params,
        "cell": section.cell,
        "rabi_frequency": rabi,
        "first_order": first_order_detunings(n, k, &params),
        "second_order": second_order_coeffs(n, k, &params)?,
        "target": target_json,
    });
    let mut out = Outputs {
        success: true,
        ..Default::default()
    };
    out.add_json("effective.json", &value)?;
    out.messages.push(serde_json::to_string_pretty(&value)?);
    Ok(out)
}

pub fn cmd_validate(cfg: &RunConfig) -> Result<Outputs> {
    let v = cfg.validate.unwrap_or_default();
    let report = run_validation(v.draws, v.seed, cfg.model.as_ref(), cfg.protocol.as_ref())?;
    let mut out = Outputs {
        success: report.passed,
        ..Default::default()
    };
    for c in &report.checks {
        out.messages.push(format!(
            "{} {}: worst {:e} (threshold {:e}, {} cases)",
            if c.passed { "PASS" } else { "FAIL" },
            c.name,
            c.worst,
            c.threshold,
            c.cases
        ));
    }
    out.add_json("validate.json", &report)?;
    Ok(out)
}
