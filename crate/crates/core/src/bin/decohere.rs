use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use decohere::harness::{self, parse_time, Format, RunConfig, RunLog};
use decohere::infotheory::{crlb_envelope, solve_xi, Criterion, XiTable};
use decohere::protocol::{Protocol, ReplayBackend};
use decohere::{DecayLaw, Error, ReadoutModel, Result};

#[derive(Parser)]
#[command(name = "decohere", version, about = "Adaptive Bayesian estimation of qubit decoherence times")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a replica batch and write uncertainty curves.
    Run {
        #[arg(long, conflicts_with = "config", required_unless_present = "config")]
        preset: Option<String>,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        replicas: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
        /// Output file; stdout if omitted.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = OutFormat::Csv)]
        format: OutFormat,
        /// Also write replica 0 of the first strategy as a replayable log.
        #[arg(long)]
        log: Option<PathBuf>,
    },
    /// Optimal probing ratio tau/T for a decay exponent.
    Xi {
        #[arg(long)]
        beta: f64,
        #[arg(long, value_enum)]
        criterion: CriterionArg,
    },
    /// Cramér-Rao envelope over a range of total probing times (CSV: input,value).
    Crlb {
        #[arg(long)]
        beta: f64,
        #[arg(long, default_value = "2.5us")]
        t_chi: String,
        /// p0,p1,R for photon-count readout; single-shot if omitted.
        #[arg(long)]
        readout: Option<String>,
        /// Range `t1..t2`, e.g. `1ms..1s`.
        #[arg(long)]
        times: String,
        #[arg(long, default_value_t = 20)]
        points: usize,
        #[arg(long, value_enum, default_value_t = CriterionArg::Sens)]
        criterion: CriterionArg,
    },
    /// Update + select latency versus particle count.
    Bench {
        #[arg(long, value_delimiter = ',', default_values_t = [50, 100, 200, 400, 800, 1600])]
        particles: Vec<usize>,
        #[arg(long, default_value_t = 2000)]
        repetitions: usize,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = OutFormat::Csv)]
        format: OutFormat,
    },
    /// Re-run a logged replica against its recorded outcomes.
    Replay {
        #[arg(long)]
        log: PathBuf,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum OutFormat {
    Csv,
    Json,
}

impl From<OutFormat> for Format {
    fn from(f: OutFormat) -> Self {
        match f {
            OutFormat::Csv => Format::Csv,
            OutFormat::Json => Format::Json,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum CriterionArg {
    Var,
    Sens,
}

impl From<CriterionArg> for Criterion {
    fn from(c: CriterionArg) -> Self {
        match c {
            CriterionArg::Var => Criterion::Variance,
            CriterionArg::Sens => Criterion::Sensitivity,
        }
    }
}

fn main() -> ExitCode {
    match execute(Cli::parse().command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(match e {
                Error::Config(_) | Error::Parse { .. } => 2,
                Error::DegeneratePosterior { .. } => 3,
                _ => 1,
            })
        }
    }
}

fn execute(command: Command) -> Result<()> {
    match command {
        Command::Run {
            preset,
            config,
            replicas,
            seed,
            out,
            format,
            log,
        } => {
            let mut cfg = match (preset, config) {
                (Some(name), _) => RunConfig::preset(&name)?,
                (None, Some(path)) => RunConfig::load(path)?,
                (None, None) => unreachable!("clap requires one of --preset/--config"),
            };
            if let Some(r) = replicas {
                cfg.run.replicas = r;
            }
            if let Some(s) = seed {
                cfg.run.seed = s;
            }
            cfg.validate()?;
            if let Some(path) = log {
                let strategy = cfg.protocol.strategies[0];
                let records = decohere::protocol::run_protocol(
                    &cfg.protocol_config(strategy),
                    &cfg.truth()?,
                    &cfg.xi_table()?,
                    cfg.run.seed,
                    0,
                )?;
                RunLog {
                    config: cfg.clone(),
                    strategy,
                    seed: cfg.run.seed,
                    replica: 0,
                    records,
                }
                .save(path)?;
            }
            let summaries = harness::run_all(&cfg)?;
            for s in &summaries {
                if s.metadata.replicas_excluded > 0 {
                    eprintln!(
                        "warning: {}: {} replica(s) excluded after posterior collapse",
                        s.strategy, s.metadata.replicas_excluded
                    );
                }
            }
            match out {
                Some(path) => harness::emit_summaries(&summaries, path, format.into()),
                None => {
                    print!(
                        "{}",
                        match Format::from(format) {
                            Format::Csv => harness::emit::curves_csv(&summaries),
                            Format::Json => harness::emit::curves_json(&summaries),
                        }
                    );
                    Ok(())
                }
            }
        }
        Command::Xi { beta, criterion } => {
            let xi = solve_xi(beta, criterion.into())?;
            println!("{xi}");
            Ok(())
        }
        Command::Crlb {
            beta,
            t_chi,
            readout,
            times,
            points,
            criterion,
        } => {
            let law = DecayLaw::new(parse_time(&t_chi)?, beta).map_err(|e| Error::Config(e.to_string()))?;
            let readout = readout.map(|r| parse_readout(&r)).transpose()?;
            let (lo, hi) = times
                .split_once("..")
                .ok_or_else(|| Error::Config(format!("--times must look like t1..t2, got `{times}`")))?;
            let (lo, hi) = (parse_time(lo)?, parse_time(hi)?);
            if !(lo > 0.0 && hi >= lo) {
                return Err(Error::Config(format!("invalid time range {lo}..{hi}")));
            }
            println!("input,value");
            for t in harness::batch::log_grid(lo, hi, points) {
                println!("{t:e},{:e}", crlb_envelope(t, &law, readout.as_ref(), criterion.into()));
            }
            Ok(())
        }
        Command::Bench {
            particles,
            repetitions,
            out,
            format,
        } => {
            let report = harness::latency_bench(&particles, repetitions)?;
            if let Some(path) = out {
                harness::emit_bench(&report, path, format.into())?;
            }
            for p in &report.points {
                println!(
                    "K={:5}  median {:9.3} us  mean {:9.3} us  reference {:9.3} us",
                    p.particles,
                    p.median_s * 1e6,
                    p.mean_s * 1e6,
                    report.reference(p.particles) * 1e6
                );
            }
            println!(
                "fit: {:.4} us/particle + {:.3} us, R^2 = {:.4} (reference {} us/particle)",
                report.slope_s_per_particle * 1e6,
                report.intercept_s * 1e6,
                report.r_squared,
                report.reference_us_per_particle
            );
            Ok(())
        }
        Command::Replay { log } => {
            let log = RunLog::load(log)?;
            let table: XiTable = log.config.xi_table()?;
            let protocol = Protocol::new(log.config.protocol_config(log.strategy), &table)?;
            let mut backend = ReplayBackend::from_records(&log.records);
            let records = protocol.run(&mut backend, log.seed, log.replica)?;
            let matches = records == log.records;
            let last = records.last();
            println!(
                "epochs={} estimate_s={:e} std_s={:e} identical={matches}",
                records.len(),
                last.map_or(f64::NAN, |r| r.estimate),
                last.map_or(f64::NAN, |r| r.estimate_std)
            );
            if matches {
                Ok(())
            } else {
                Err(Error::InvalidParameter("replayed trajectory differs from the log".into()))
            }
        }
    }
}

fn parse_readout(text: &str) -> Result<ReadoutModel> {
    let parts: Vec<&str> = text.split(',').map(str::trim).collect();
    let bad = || Error::Config(format!("--readout must be p0,p1,R, got `{text}`"));
    let [p0, p1, r] = parts.as_slice() else {
        return Err(bad());
    };
    let p0: f64 = p0.parse().map_err(|_| bad())?;
    let p1: f64 = p1.parse().map_err(|_| bad())?;
    let r: f64 = r.parse().map_err(|_| bad())?;
    ReadoutModel::new(p0, p1, r as u64).map_err(|e| Error::Config(e.to_string()))
}
