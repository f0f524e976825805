use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use flockns::diagnostics::{compatibility_residual, l1_embedding_constant};
use flockns::driver::run;
use flockns::io::config::{parse_config, ConfigError, SimConfig};
use flockns::io::initial::Scenario;
use flockns::io::output::{dump_snapshot, write_picard_report, write_timeseries};
use flockns::picard::{coupled_reference, limit_discrepancy, picard_study, PicardProblem};
use flockns::verify::run_checks;
use flockns::Error;

#[derive(Parser)]
#[command(name = "flockns", version, about = "Kinetic flocking coupled to compressible Navier-Stokes")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Coupled simulation up to t_end.
    Run(Common),
    /// Picard iteration study on [0, t0].
    Picard(Common),
    /// Invariant suite on small grids.
    Verify(Common),
    /// Validate initial data, kernel and weights of a configuration.
    CheckData(Common),
}

#[derive(Args)]
struct Common {
    #[arg(long)]
    config: PathBuf,
    #[arg(long, default_value = ".")]
    out: PathBuf,
    /// Write a snapshot every N steps.
    #[arg(long, value_name = "N")]
    snapshots: Option<usize>,
    #[arg(long)]
    quiet: bool,
}

struct Failure {
    code: u8,
    message: String,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure {
            code: e.exit_code() as u8,
            message: e.to_string(),
        }
    }
}

impl From<ConfigError> for Failure {
    fn from(e: ConfigError) -> Self {
        Error::from(e).into()
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Error::from(e).into()
    }
}

fn load(common: &Common) -> Result<SimConfig, Failure> {
    let text = fs::read_to_string(&common.config)?;
    Ok(parse_config(&text)?)
}

fn with_threads<T: Send>(cfg: &SimConfig, f: impl FnOnce() -> T + Send) -> Result<T, Failure> {
    match cfg.threads {
        None => Ok(f()),
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| Failure {
                    code: 4,
                    message: format!("cannot start thread pool: {e}"),
                })?;
            Ok(pool.install(f))
        }
    }
}

fn say(common: &Common, msg: impl AsRef<str>) {
    if !common.quiet {
        println!("{}", msg.as_ref());
    }
}

fn cmd_run(common: &Common) -> Result<(), Failure> {
    let cfg = load(common)?;
    let t_end = cfg.t_end.ok_or(ConfigError::MissingKey("t_end".into()))?;
    fs::create_dir_all(&common.out)?;
    let traj = with_threads(&cfg, || -> flockns::Result<_> {
        let scenario = Scenario::from_config(&cfg)?;
        run(&scenario.run_setup(&cfg, t_end, common.snapshots))
    })??;
    write_timeseries(&traj.records, &common.out.join("timeseries.csv"))?;
    for s in &traj.snapshots {
        dump_snapshot(s, &common.out.join(format!("snapshot_{:06}.bin", s.step)))?;
    }
    dump_snapshot(&traj.final_state, &common.out.join("final.bin"))?;
    if let Some(fail) = traj.failure {
        return Err(Failure {
            code: fail.exit_code as u8,
            message: fail.to_string(),
        });
    }
    let last = traj.records.last().expect("initial record");
    say(
        common,
        format!(
            "t = {:.6e} after {} steps; energy residual {:.3e}; blowup monitor {:.6e}",
            last.t, traj.final_state.step, last.energy_residual, last.blowup_monitor
        ),
    );
    Ok(())
}

fn cmd_picard(common: &Common) -> Result<(), Failure> {
    let cfg = load(common)?;
    let t0 = cfg.t0.ok_or(ConfigError::MissingKey("t0".into()))?;
    fs::create_dir_all(&common.out)?;
    let (study, gap) = with_threads(&cfg, || -> flockns::Result<_> {
        let scenario = Scenario::from_config(&cfg)?;
        let problem = PicardProblem::new(&scenario.state, &scenario.model, t0)?;
        let study = picard_study(&problem, &scenario.weights, cfg.picard_max_iter, cfg.picard_tol)?;
        let reference = coupled_reference(&problem, &scenario.model)?;
        let gap = limit_discrepancy(&study.last, &reference)?;
        Ok((study, gap))
    })??;
    write_picard_report(&study, &common.out.join("picard.csv"))?;
    for row in &study.report.rows {
        let ratio = row.ratio.map_or(String::from("-"), |r| format!("{r:.4e}"));
        say(common, format!("n = {:2}  sup F = {:.4e}  ratio = {ratio}", row.n, row.sup_f));
    }
    say(
        common,
        format!(
            "stop: {:?}; fitted rate {:?}; non-contracting: {}; gap to coupled run (rel L1) f {:.3e} rho {:.3e} u {:.3e}",
            study.stop, study.report.fitted_rate, study.report.non_contracting, gap.f, gap.rho, gap.u
        ),
    );
    Ok(())
}

fn cmd_verify(common: &Common) -> Result<(), Failure> {
    let cfg = load(common)?;
    let checks = with_threads(&cfg, || run_checks(&cfg))??;
    let failed = checks.iter().filter(|c| !c.passed).count();
    for c in &checks {
        say(common, c.to_string());
    }
    if failed > 0 {
        return Err(Failure {
            code: 3,
            message: format!("{failed} of {} checks failed", checks.len()),
        });
    }
    Ok(())
}

fn cmd_check_data(common: &Common) -> Result<(), Failure> {
    let cfg = load(common)?;
    let scenario = Scenario::from_config(&cfg)?;
    let s = &scenario.state;
    let rep = compatibility_residual(&s.kin, &s.fluid, &scenario.model.params)?;
    say(common, format!("kernel: {} (normalisation ok)", cfg.kernel.name()));
    say(
        common,
        format!(
            "weights: alpha = {}, beta = {}, L1 embedding constant {:.6e}",
            cfg.alpha,
            cfg.beta,
            l1_embedding_constant(s.kin.grid(), &scenario.weights)
        ),
    );
    say(
        common,
        format!(
            "compatibility residual: weighted L2 {:.6e}, max over vacuum {:.6e}",
            rep.weighted_l2, rep.vacuum_max
        ),
    );
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Run(c) => cmd_run(c),
        Command::Picard(c) => cmd_picard(c),
        Command::Verify(c) => cmd_verify(c),
        Command::CheckData(c) => cmd_check_data(c),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
