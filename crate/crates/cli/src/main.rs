use std::f64::consts::TAU;
use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use serde_json::{json, Value};

use isochron::acw::{
    acw_first_integral, acw_multiplier, acw_numeric_check, acw_orbit, write_orbit_csv, AcwState,
};
use isochron::autonomous::{bouncing_limit_audit, minimal_period, write_bouncing_csv};
use isochron::descriptor::{ForcingSpec, OutputFormat, PotentialSpec, RunConfig};
use isochron::dynamics::{find_periodic_solution, resonance_run, Verdict};
use isochron::error::Error as CoreError;
use isochron::export::{fmt_f64, json_f64};
use isochron::forcing::ForcingTerm;
use isochron::integrate::{IntegratorConfig, State};
use isochron::phi::{
    default_r_grid, phi_scan, pinney_fourier_constants, resonance_verdict, DEFAULT_R_MAX,
    DEFAULT_R_POINTS, DEFAULT_THETA_POINTS, DEFAULT_VERDICT_THRESHOLD,
};
use isochron::potentials::Potential;

/// Resonance analysis for periodically forced isochronous oscillators.
#[derive(Parser)]
#[command(name = "isochron", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Scan |Φ_p| over the cylinder and certify the resonance condition
    /// (exit 0 certified, 2 not certified).
    PhiScan(Common),
    /// Long forced run with windowed growth diagnostics
    /// (exit 0 growing, 2 bounded, 3 inconclusive).
    ResonanceRun(Common),
    /// Iterate the explicit period map of ẍ + x = R(t)/x³.
    Acw(Common),
    /// Measure the minimal period of a free orbit (exit 2 if it misses 2π/N).
    PeriodAudit(Common),
    /// Newton shooting for a 2π-periodic forced solution (exit 2 if not converged).
    PeriodicFind(Common),
    /// Large-action limits of the orbit and ∂x/∂I, plus the potential audit.
    LimitsAudit(Common),
    /// Fourier constants c₀, d₊, d₋ of the Pinney variational solution.
    FourierConstants(Common),
}

#[derive(Args, Clone, Default)]
struct Common {
    /// JSON run configuration; flags override its fields.
    #[arg(long)]
    config: Option<PathBuf>,
    /// pinney | harmonic:N | asymmetric:ALPHA,BETA | JSON descriptor
    #[arg(long)]
    potential: Option<String>,
    /// Shorthand such as 'sin', 'cos2t', '0.2+0.5*cos+0.5*sin', or a JSON descriptor
    #[arg(long)]
    forcing: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    eps: Option<f64>,
    #[arg(long)]
    periods: Option<usize>,
    #[arg(long)]
    theta_points: Option<usize>,
    #[arg(long)]
    r_points: Option<usize>,
    #[arg(long)]
    r_max: Option<f64>,
    /// Certification threshold for min |Φ_p|.
    #[arg(long)]
    threshold: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    x0: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    v0: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    y0: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    c: Option<f64>,
    #[arg(long)]
    steps: Option<usize>,
    /// Orbit amplitude.
    #[arg(long)]
    r: Option<f64>,
    /// Actions for the limits audit (comma separated).
    #[arg(long = "I", value_delimiter = ',')]
    actions: Option<Vec<f64>>,
    #[arg(long)]
    delta: Option<f64>,
    #[arg(long)]
    samples: Option<usize>,
    #[arg(long)]
    rel_tol: Option<f64>,
    #[arg(long)]
    abs_tol: Option<f64>,
    /// Directory receiving `<command>.csv` and `<command>.json`.
    #[arg(long)]
    out: Option<String>,
    /// Format written to stdout when --out is absent.
    #[arg(long, value_parser = parse_format)]
    format: Option<OutputFormat>,
    /// Accepted for scripting; every command is deterministic.
    #[arg(long)]
    seedless: bool,
}

fn parse_format(s: &str) -> std::result::Result<OutputFormat, String> {
    match s {
        "csv" => Ok(OutputFormat::Csv),
        "json" => Ok(OutputFormat::Json),
        _ => Err(format!("unknown format `{s}` (expected csv or json)")),
    }
}

impl Common {
    fn resolve(&self) -> Result<RunConfig> {
        let base = match &self.config {
            Some(path) => {
                let text = fs::read_to_string(path)
                    .with_context(|| format!("reading {}", path.display()))?;
                RunConfig::from_json(&text).with_context(|| format!("config {}", path.display()))?
            }
            None => RunConfig::default(),
        };
        let flags = RunConfig {
            potential: self.potential.clone().map(PotentialSpec::Shorthand),
            forcing: self.forcing.clone().map(ForcingSpec::Shorthand),
            eps: self.eps,
            periods: self.periods,
            theta_points: self.theta_points,
            r_points: self.r_points,
            r_max: self.r_max,
            threshold: self.threshold,
            x0: self.x0,
            v0: self.v0,
            y0: self.y0,
            c: self.c,
            steps: self.steps,
            r: self.r,
            actions: self.actions.clone(),
            delta: self.delta,
            samples: self.samples,
            rel_tol: self.rel_tol,
            abs_tol: self.abs_tol,
            out: self.out.clone(),
            format: self.format,
        };
        let cfg = base.overlay(flags);
        cfg.validate()?;
        Ok(cfg)
    }
}

struct Run {
    cfg: RunConfig,
}

impl Run {
    fn potential(&self) -> Result<Potential> {
        match &self.cfg.potential {
            Some(p) => Ok(p.build()?),
            None => bail!("missing --potential"),
        }
    }

    fn forcing(&self) -> Result<ForcingTerm> {
        match &self.cfg.forcing {
            Some(f) => Ok(f.build()?),
            None => bail!("missing --forcing"),
        }
    }

    fn integrator(&self) -> IntegratorConfig {
        let mut ic = IntegratorConfig::default();
        if let Some(r) = self.cfg.rel_tol {
            ic.rel_tol = r;
        }
        if let Some(a) = self.cfg.abs_tol {
            ic.abs_tol = a;
        }
        ic
    }

    /// Writes the table and summary to `--out`, or one of them to stdout.
    fn emit<F>(&self, name: &str, table: F, summary: Value) -> Result<()>
    where
        F: Fn(&mut dyn Write) -> io::Result<()>,
    {
        let stdout = io::stdout();
        match &self.cfg.out {
            Some(dir) => {
                fs::create_dir_all(dir).with_context(|| format!("creating {dir}"))?;
                let csv_path = PathBuf::from(dir).join(format!("{name}.csv"));
                let mut w = BufWriter::new(
                    File::create(&csv_path).with_context(|| csv_path.display().to_string())?,
                );
                table(&mut w)?;
                w.flush()?;
                let json_path = PathBuf::from(dir).join(format!("{name}.json"));
                fs::write(&json_path, serde_json::to_string_pretty(&summary)? + "\n")
                    .with_context(|| json_path.display().to_string())?;
                writeln!(stdout.lock(), "{}", serde_json::to_string_pretty(&summary)?)?;
            }
            None => match self.cfg.format.unwrap_or_default() {
                OutputFormat::Csv => {
                    let mut w = BufWriter::new(stdout.lock());
                    table(&mut w)?;
                    w.flush()?;
                }
                OutputFormat::Json => {
                    writeln!(stdout.lock(), "{}", serde_json::to_string_pretty(&summary)?)?
                }
            },
        }
        Ok(())
    }
}

fn phi_scan_cmd(run: &Run) -> Result<u8> {
    let pot = run.potential()?;
    let f = run.forcing()?;
    let theta = run.cfg.theta_points.unwrap_or(DEFAULT_THETA_POINTS);
    let grid = default_r_grid(
        run.cfg.r_max.unwrap_or(DEFAULT_R_MAX),
        run.cfg.r_points.unwrap_or(DEFAULT_R_POINTS),
    )?;
    let field = phi_scan(&pot, &f, theta, &grid, &run.integrator())?;
    let verdict = resonance_verdict(
        &field,
        run.cfg.threshold.unwrap_or(DEFAULT_VERDICT_THRESHOLD),
    );
    let mut summary = verdict.to_json();
    summary["potential"] = json!(pot.name());
    summary["theta_points"] = json!(theta);
    summary["r_points"] = json!(grid.len());
    summary["r_max"] = json_f64(grid[grid.len() - 1]);
    run.emit("phi-scan", |w| field.write_csv(w), summary)?;
    Ok(if verdict.certified_resonant { 0 } else { 2 })
}

fn resonance_run_cmd(run: &Run) -> Result<u8> {
    let pot = run.potential()?;
    let f = run.forcing()?;
    let eps = run.cfg.eps.unwrap_or(0.05);
    let s0 = State::new(run.cfg.x0.unwrap_or(0.0), run.cfg.v0.unwrap_or(0.0));
    let periods = run.cfg.periods.unwrap_or(200);
    let diag = match resonance_run(&pot, &f, eps, s0, periods, &run.integrator()) {
        Ok(d) => d,
        Err(CoreError::RunAborted { reason, partial }) => {
            let mut summary = partial.to_json();
            summary["aborted"] = json!(reason);
            run.emit("resonance-run", |w| partial.write_csv(w), summary)?;
            bail!("resonance run aborted: {reason}");
        }
        Err(e) => return Err(e.into()),
    };
    run.emit("resonance-run", |w| diag.write_csv(w), diag.to_json())?;
    Ok(match diag.verdict {
        Verdict::Growing => 0,
        Verdict::Bounded => 2,
        Verdict::Inconclusive => 3,
    })
}

fn acw_cmd(run: &Run) -> Result<u8> {
    let c = run.cfg.c.ok_or_else(|| anyhow!("missing --c"))?;
    let s0 = AcwState::new(run.cfg.x0.unwrap_or(1.0), run.cfg.y0.unwrap_or(0.0))?;
    let steps = run.cfg.steps.unwrap_or(10);
    let orbit = acw_orbit(c, s0, steps)?;
    let check = acw_numeric_check(c, s0, &run.integrator())?;
    let last = orbit[orbit.len() - 1];
    let summary = json!({
        "c": json_f64(c),
        "steps": steps,
        "multiplier": json_f64(acw_multiplier(c, s0)?),
        "first_integral": json_f64(acw_first_integral(s0)),
        "last_x": json_f64(last.x),
        "last_y": json_f64(last.y),
        "numeric_check_max_err": json_f64(check.max_err),
    });
    run.emit("acw", |w| write_orbit_csv(&orbit, w), summary)?;
    Ok(0)
}

fn period_audit_cmd(run: &Run) -> Result<u8> {
    let pot = run.potential()?;
    let r = run.cfg.r.unwrap_or(1.0);
    let period = minimal_period(&pot, r, &run.integrator())?;
    let expected = pot.isochrony().map(|n| TAU / n as f64);
    let deviation = expected.map(|e| period - e);
    let ok = deviation.is_none_or(|d| d.abs() <= 1e-6);
    let summary = json!({
        "potential": pot.name(),
        "r": json_f64(r),
        "period": json_f64(period),
        "expected": expected.map_or(Value::Null, json_f64),
        "deviation": deviation.map_or(Value::Null, json_f64),
    });
    run.emit(
        "period-audit",
        |w| {
            writeln!(w, "r,period,deviation")?;
            writeln!(
                w,
                "{},{},{}",
                fmt_f64(r),
                fmt_f64(period),
                fmt_f64(deviation.unwrap_or(f64::NAN))
            )
        },
        summary,
    )?;
    Ok(if ok { 0 } else { 2 })
}

fn periodic_find_cmd(run: &Run) -> Result<u8> {
    let pot = run.potential()?;
    let f = run.forcing()?;
    let eps = run.cfg.eps.unwrap_or(0.05);
    let seed = State::new(run.cfg.x0.unwrap_or(0.0), run.cfg.v0.unwrap_or(0.0));
    let res = find_periodic_solution(&pot, &f, eps, seed, &run.integrator())?;
    let mut summary = res.to_json();
    summary["potential"] = json!(pot.name());
    summary["eps"] = json_f64(eps);
    run.emit(
        "periodic-find",
        |w| {
            writeln!(w, "x,v,residual,converged,iterations,singular_jacobian")?;
            writeln!(
                w,
                "{},{},{},{},{},{}",
                fmt_f64(res.state.x),
                fmt_f64(res.state.v),
                fmt_f64(res.residual),
                res.converged,
                res.iterations,
                res.singular_jacobian
            )
        },
        summary,
    )?;
    Ok(if res.converged { 0 } else { 2 })
}

fn limits_audit_cmd(run: &Run) -> Result<u8> {
    let pot = run.potential()?;
    let actions = run
        .cfg
        .actions
        .clone()
        .unwrap_or_else(|| vec![1e2, 1e3, 1e4]);
    let delta = run.cfg.delta.unwrap_or(0.1);
    let samples = run.cfg.samples.unwrap_or(401);
    let records = bouncing_limit_audit(&pot, &actions, delta, samples, &run.integrator())?;
    let appendix = if pot.domain_left().is_finite() {
        let grid = [0.5, 1.0, 2.0, 10.0, 100.0];
        let a = pot.appendix_audit(&grid)?;
        json!({
            "x": a.x.iter().map(|v| json_f64(*v)).collect::<Vec<_>>(),
            "iso_residuals": a.iso_residuals.iter().map(|v| json_f64(*v)).collect::<Vec<_>>(),
            "slope_defects": a.slope_defects.iter().map(|v| json_f64(*v)).collect::<Vec<_>>(),
            "slope_limit": json_f64(a.slope_limit),
        })
    } else {
        Value::Null
    };
    let summary = json!({
        "potential": pot.name(),
        "delta": json_f64(delta),
        "records": records.iter().map(|r| json!({
            "I": json_f64(r.action),
            "r": json_f64(r.amplitude),
            "sup_x_defect": json_f64(r.sup_x_defect),
            "sup_dxdI_defect": json_f64(r.sup_dxdi_defect),
            "dxdI_at_0": json_f64(r.dxdi_at_0),
        })).collect::<Vec<_>>(),
        "appendix": appendix,
    });
    run.emit("limits-audit", |w| write_bouncing_csv(&records, w), summary)?;
    Ok(0)
}

fn fourier_constants_cmd(run: &Run) -> Result<u8> {
    let grid = match run.cfg.r {
        Some(r) => vec![r],
        None => {
            let mut grid = default_r_grid(
                run.cfg.r_max.unwrap_or(DEFAULT_R_MAX),
                run.cfg.r_points.unwrap_or(20),
            )?;
            grid.push(f64::INFINITY);
            grid
        }
    };
    let rows = grid
        .iter()
        .map(|&r| Ok((r, pinney_fourier_constants(r)?)))
        .collect::<Result<Vec<_>>>()?;
    let r_out = |r: f64| if r.is_infinite() { -1.0 } else { r };
    let summary = json!({
        "rows": rows.iter().map(|(r, fc)| json!({
            "r": json_f64(r_out(*r)),
            "c0": json_f64(fc.c0),
            "d_plus": json_f64(fc.d_plus),
            "d_minus": json_f64(fc.d_minus),
        })).collect::<Vec<_>>(),
    });
    run.emit(
        "fourier-constants",
        |w| {
            writeln!(w, "r,c0,d_plus,d_minus")?;
            for (r, fc) in &rows {
                writeln!(
                    w,
                    "{},{},{},{}",
                    fmt_f64(r_out(*r)),
                    fmt_f64(fc.c0),
                    fmt_f64(fc.d_plus),
                    fmt_f64(fc.d_minus)
                )?;
            }
            Ok(())
        },
        summary,
    )?;
    Ok(0)
}

fn dispatch(cli: Cli) -> Result<u8> {
    let (common, handler): (&Common, fn(&Run) -> Result<u8>) = match &cli.command {
        Command::PhiScan(c) => (c, phi_scan_cmd),
        Command::ResonanceRun(c) => (c, resonance_run_cmd),
        Command::Acw(c) => (c, acw_cmd),
        Command::PeriodAudit(c) => (c, period_audit_cmd),
        Command::PeriodicFind(c) => (c, periodic_find_cmd),
        Command::LimitsAudit(c) => (c, limits_audit_cmd),
        Command::FourierConstants(c) => (c, fourier_constants_cmd),
    };
    let run = Run {
        cfg: common.resolve()?,
    };
    handler(&run)
}

fn main() -> ExitCode {
    // usage errors exit 1 so that 2 and 3 keep their scientific meaning
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    match dispatch(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
