//! `dispersive`: runs the scenario catalog from flags and/or a TOML config file.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use dispersive_core::scenarios::{self, Method, ModelKind, ScenarioConfig, ScenarioKind, ScenarioReport};
use dispersive_core::Error;

const EXIT_CONFIG: u8 = 1;
const EXIT_RUNTIME: u8 = 2;
const EXIT_CHECK: u8 = 3;

#[derive(Parser, Debug)]
#[command(
    name = "dispersive",
    version,
    about = "Structure-preserving solvers for dispersive shallow water models"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run a scenario and write CSV outputs.
    Run(RunArgs),
    /// Print the fully resolved configuration of a scenario as TOML.
    Config(RunArgs),
}

/// Flags override the corresponding keys of `--config`.
#[derive(Args, Debug, Default)]
struct RunArgs {
    /// TOML configuration file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// soliton, manufactured, manufactured_reflecting, lake_at_rest, reflecting_bump, traveling_wave or dingemans.
    #[arg(long)]
    scenario: Option<String>,
    /// bbm_bbm or svaerd_kalisch (default bbm_bbm).
    #[arg(long)]
    model: Option<String>,
    #[arg(long)]
    variant: Option<String>,
    /// Svärd–Kalisch parameter set, set1 to set5.
    #[arg(long)]
    parameter_set: Option<String>,
    /// Order of accuracy of the SBP operators.
    #[arg(long)]
    order: Option<usize>,
    /// Number of grid nodes.
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    t_end: Option<f64>,
    /// rk4 or dp5.
    #[arg(long)]
    method: Option<String>,
    /// Fixed time step (adaptive when absent).
    #[arg(long)]
    dt: Option<f64>,
    #[arg(long)]
    abs_tol: Option<f64>,
    #[arg(long)]
    rel_tol: Option<f64>,
    #[arg(long)]
    relaxation: bool,
    /// Non-split nonlinear terms (Svärd–Kalisch).
    #[arg(long)]
    naive: bool,
    /// periodic or reflecting.
    #[arg(long)]
    boundary: Option<String>,
    /// Wavenumber of the traveling wave.
    #[arg(long)]
    wavenumber: Option<f64>,
    /// Gauge positions, comma separated.
    #[arg(long, value_delimiter = ',')]
    gauges: Option<Vec<f64>>,
    #[arg(long)]
    experimental_data: Option<PathBuf>,
    /// Also write the final state.
    #[arg(long)]
    snapshot: bool,
    /// Run a convergence study instead of a single simulation.
    #[arg(long)]
    eoc: bool,
    /// Orders of the convergence study, comma separated.
    #[arg(long, value_delimiter = ',')]
    orders: Option<Vec<usize>>,
    /// Resolutions of the convergence study, comma separated.
    #[arg(long, value_delimiter = ',')]
    eoc_n: Option<Vec<usize>>,
    /// Output directory (overridden by DISPERSIVE_OUTPUT_DIR).
    #[arg(long)]
    output_dir: Option<PathBuf>,
    /// Evaluate the scenario thresholds; exit 3 if any fails.
    #[arg(long)]
    check: bool,
}

fn parse_method(s: &str) -> Result<Method, Error> {
    match s {
        "rk4" => Ok(Method::Rk4),
        "dp5" => Ok(Method::Dp5),
        _ => Err(Error::Config(format!("invalid method '{s}', expected rk4 or dp5"))),
    }
}

fn parse_boundary(s: &str) -> Result<scenarios::Boundary, Error> {
    match s {
        "periodic" => Ok(scenarios::Boundary::Periodic),
        "reflecting" => Ok(scenarios::Boundary::Reflecting),
        _ => Err(Error::Config(format!(
            "invalid boundary '{s}', expected periodic or reflecting"
        ))),
    }
}

/// Merges the config file (if any) with the flags.
fn build_config(args: &RunArgs) -> Result<ScenarioConfig, Error> {
    let mut cfg = match &args.config {
        Some(path) => ScenarioConfig::from_file(path)?,
        None => {
            let scenario = args
                .scenario
                .as_deref()
                .ok_or_else(|| Error::Config("either --config or --scenario is required".into()))?;
            let model = args.model.as_deref().map_or(Ok(ModelKind::BbmBbm), ModelKind::parse)?;
            ScenarioConfig::new(ScenarioKind::parse(scenario)?, model)
        }
    };
    if let Some(s) = &args.scenario {
        cfg.scenario = ScenarioKind::parse(s)?;
    }
    if let Some(m) = &args.model {
        cfg.model = ModelKind::parse(m)?;
    }
    macro_rules! set {
        ($($field:ident),*) => {$(
            if let Some(v) = &args.$field {
                cfg.$field = Some(v.clone());
            }
        )*};
    }
    set!(
        variant,
        parameter_set,
        order,
        n,
        t_end,
        dt,
        abs_tol,
        rel_tol,
        wavenumber,
        experimental_data,
        output_dir,
        orders,
        eoc_n
    );
    if let Some(m) = &args.method {
        cfg.method = Some(parse_method(m)?);
    }
    if let Some(b) = &args.boundary {
        cfg.boundary = Some(parse_boundary(b)?);
    }
    if let Some(g) = &args.gauges {
        cfg.gauges = g.clone();
    }
    cfg.relaxation |= args.relaxation;
    cfg.naive |= args.naive;
    cfg.eoc |= args.eoc;
    if args.snapshot {
        cfg.snapshot = Some(true);
    }
    Ok(cfg)
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Config(_) | Error::Ingest { .. } => EXIT_CONFIG,
        _ => EXIT_RUNTIME,
    }
}

fn print_summary(report: &ScenarioReport) {
    for table in &report.eoc {
        println!("order {}:", table.order);
        println!(
            "  {:>6} {:>12} {:>12} {:>7} {:>7}",
            "N", "err eta", "err v", "eoc", "eoc"
        );
        for (i, r) in table.rows.iter().enumerate() {
            let (a, b) = table.eoc(i).map_or((String::new(), String::new()), |(a, b)| {
                (format!("{a:.2}"), format!("{b:.2}"))
            });
            println!("  {:>6} {:>12.4e} {:>12.4e} {a:>7} {b:>7}", r.n, r.error_eta, r.error_v);
        }
    }
    if let Some(run) = &report.run {
        println!(
            "t = {}, steps = {} accepted, {} rejected, {} rhs evaluations",
            run.snapshot.t, run.stats.accepted, run.stats.rejected, run.stats.rhs_evals
        );
        println!("mass drift {:.3e}", run.mass_drift());
        println!("energy drift {:.3e}", run.energy_drift());
        if run.invariants[0].invariants.modified_entropy.is_some() {
            println!("modified entropy drift {:.3e}", run.conserved_drift());
        }
        if let Some((a, b)) = run.error {
            println!("L2 error eta {a:.4e}, v {b:.4e}");
        }
        if let Some(p) = run.phase {
            println!(
                "phase speed measured {:.6}, model {:.6}, Euler {:.6}; amplitude ratio {:.6}",
                p.measured_speed, p.model_speed, p.euler_speed, p.amplitude_ratio
            );
        }
    }
}

fn run(args: &RunArgs) -> Result<u8, (u8, Error)> {
    let cfg = build_config(args).map_err(|e| (EXIT_CONFIG, e))?;
    let spec = cfg.resolve().map_err(|e| (EXIT_CONFIG, e))?;
    let report = scenarios::run(&spec).map_err(|e| (exit_code(&e), e))?;
    let dir = cfg
        .effective_output_dir()
        .unwrap_or_else(|| PathBuf::from("output").join(spec.scenario.name()));
    let written = scenarios::write_outputs(&report, &dir).map_err(|e| (EXIT_RUNTIME, e))?;
    print_summary(&report);
    for path in written {
        println!("wrote {}", path.display());
    }
    if args.check {
        let checks = scenarios::checks(&report);
        let mut failed = false;
        for c in &checks {
            println!(
                "{} {}: {:.6e} ({})",
                if c.pass { "PASS" } else { "FAIL" },
                c.name,
                c.value,
                c.condition
            );
            failed |= !c.pass;
        }
        if failed {
            eprintln!(
                "error: {} of {} checks failed",
                checks.iter().filter(|c| !c.pass).count(),
                checks.len()
            );
            return Ok(EXIT_CHECK);
        }
    }
    Ok(0)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_CONFIG } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let outcome = match &cli.command {
        Command::Run(args) => run(args),
        Command::Config(args) => build_config(args)
            .and_then(|cfg| cfg.resolved())
            .map(|cfg| {
                print!("{}", cfg.to_toml_string());
                0
            })
            .map_err(|e| (EXIT_CONFIG, e)),
    };
    match outcome {
        Ok(code) => ExitCode::from(code),
        Err((code, e)) => {
            eprintln!("error: {e}");
            ExitCode::from(code)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flags_override_config_values() {
        let args = RunArgs {
            scenario: Some("dingemans".into()),
            model: Some("svaerd_kalisch".into()),
            order: Some(6),
            gauges: Some(vec![1.0, 2.0]),
            relaxation: true,
            ..Default::default()
        };
        let cfg = build_config(&args).unwrap();
        assert_eq!(cfg.scenario, ScenarioKind::Dingemans);
        assert_eq!(cfg.model, ModelKind::SvaerdKalisch);
        assert_eq!(cfg.order, Some(6));
        assert_eq!(cfg.gauges, vec![1.0, 2.0]);
        assert!(cfg.relaxation);
    }

    #[test]
    fn scenario_or_config_is_required() {
        assert!(matches!(build_config(&RunArgs::default()), Err(Error::Config(_))));
        let bad = RunArgs {
            scenario: Some("tsunami".into()),
            ..Default::default()
        };
        assert!(matches!(build_config(&bad), Err(Error::Config(_))));
    }

    #[test]
    fn cli_definition_is_consistent() {
        use clap::CommandFactory;
        Cli::command().debug_assert();
    }
}
