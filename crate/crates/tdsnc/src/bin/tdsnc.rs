use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand};

use tdsnc::curve::GridSpec;
use tdsnc::report::{curve_tables, run, write_outputs, Mode};
use tdsnc::scenario::{load_scenario, Scenario, ScenarioError, SimulationSpec};

const EXIT_USAGE: u8 = 1;
const EXIT_DOMINANCE: u8 = 4;

#[derive(Parser)]
#[command(name = "tdsnc", version, about = "Time-domain stochastic network calculus: bounds and simulation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Bounds only.
    Analyze(Common),
    /// Empirical CCDFs only.
    Simulate {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        sim: SimArgs,
    },
    /// Bounds, empirical CCDFs and dominance verdicts.
    Verify {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        sim: SimArgs,
    },
    /// Tabulate every declared model curve and bounding function.
    Curves(Common),
}

#[derive(Args)]
struct Common {
    scenario: PathBuf,
    /// Output directory.
    #[arg(long, env = "TDSNC_OUT_DIR", default_value = "tdsnc-out")]
    out: PathBuf,
    #[arg(long)]
    grid_step: Option<f64>,
    #[arg(long)]
    horizon: Option<f64>,
}

#[derive(Args)]
struct SimArgs {
    #[arg(long)]
    packets: Option<usize>,
    #[arg(long)]
    replications: Option<u64>,
    #[arg(long)]
    seed: Option<u64>,
}

fn load(c: &Common) -> Result<Scenario, ScenarioError> {
    let mut sc = load_scenario(&c.scenario)?;
    if c.grid_step.is_some() || c.horizon.is_some() {
        let step = c.grid_step.unwrap_or(sc.grid.step());
        let horizon = c.horizon.unwrap_or(sc.grid.horizon());
        sc.grid = GridSpec::new(step, horizon).map_err(|e| ScenarioError::Invalid(format!("grid: {e}")))?;
    }
    Ok(sc)
}

fn apply_sim(sc: &mut Scenario, a: &SimArgs) -> Result<(), ScenarioError> {
    let sim = match (sc.simulation, a.packets, a.replications, a.seed) {
        (Some(s), ..) => s,
        (None, Some(packets), Some(replications), Some(seed)) => SimulationSpec { packets, replications, seed },
        (None, ..) if a.packets.is_some() || a.replications.is_some() || a.seed.is_some() => {
            return Err(ScenarioError::Invalid(
                "without a simulation section, --packets, --replications and --seed are all required".into(),
            ))
        }
        (None, ..) => return Ok(()),
    };
    sc.simulation = Some(SimulationSpec {
        packets: a.packets.unwrap_or(sim.packets),
        replications: a.replications.unwrap_or(sim.replications),
        seed: a.seed.unwrap_or(sim.seed),
    });
    Ok(())
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> ScenarioError + '_ {
    move |source| ScenarioError::Io { path: path.display().to_string(), source }
}

fn execute(cmd: Command) -> Result<u8, ScenarioError> {
    let (common, mode, sim) = match cmd {
        Command::Curves(c) => {
            let sc = load(&c)?;
            sc.validate()?;
            let tables = curve_tables(&sc)?;
            std::fs::create_dir_all(&c.out).map_err(io_err(&c.out))?;
            for (name, csv) in tables {
                let p = c.out.join(format!("curve_{name}"));
                std::fs::write(&p, csv).map_err(io_err(&p))?;
            }
            return Ok(0);
        }
        Command::Analyze(c) => (c, Mode::Analyze, None),
        Command::Simulate { common, sim } => (common, Mode::Simulate, Some(sim)),
        Command::Verify { common, sim } => (common, Mode::Verify, Some(sim)),
    };
    let mut sc = load(&common)?;
    if let Some(a) = &sim {
        apply_sim(&mut sc, a)?;
    }
    let report = run(&sc, mode)?;
    write_outputs(&report, &common.out).map_err(io_err(&common.out))?;
    for item in &report.items {
        let status = match &item.verdict {
            Some(v) if v.pass => "pass".to_string(),
            Some(v) => format!("FAIL ({} of {} points)", v.violations, v.checked),
            None => "done".to_string(),
        };
        println!("{:<14} {:<20} {status}", item.property.name(), item.subject);
    }
    Ok(if report.pass == Some(false) { EXIT_DOMINANCE } else { 0 })
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => EXIT_USAGE,
            };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match execute(cli.command) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            if let ScenarioError::Stability { report, .. } = &e {
                eprintln!("{report:#?}");
            }
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
