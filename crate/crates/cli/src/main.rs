use std::fs::File;
use std::io::{BufReader, BufWriter};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use buoyquad_core::energy::{lifetime_minutes, size_balloon, BalloonSpec, BatteryModel};
use buoyquad_core::sim::faultscan::fault_scan_reader;
use buoyquad_core::sim::metrics::headline;
use buoyquad_core::sim::montecarlo::Sweep;
use buoyquad_core::sim::trace::write_trace;
use buoyquad_core::{run_montecarlo, run_scenario, Error, MonteCarloSpec, Scenario};

#[derive(Parser)]
#[command(
    name = "buoyquad",
    version,
    about = "Balloon-supported quadrotor simulator"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Switch {
    On,
    Off,
}

#[derive(Subcommand)]
enum Command {
    /// Run one scenario and write its trace.
    Simulate {
        scenario: PathBuf,
        #[arg(short, long)]
        output: PathBuf,
    },
    /// Seeded Monte Carlo campaign over a scenario.
    Mc {
        scenario: PathBuf,
        #[arg(long)]
        runs: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(short, long)]
        output: PathBuf,
        /// Linear sweep of one config key across the runs, `key=lo:hi`.
        #[arg(long)]
        sweep: Option<Sweep>,
    },
    /// Replay the fault detector over a logged trace.
    Faultscan {
        trace: PathBuf,
        /// Scenario file supplying the detector and model parameters.
        #[arg(long)]
        config: PathBuf,
    },
    /// Battery lifetime at a motor duty cycle.
    Lifetime {
        #[arg(long)]
        duty: f64,
        #[arg(long, value_enum)]
        heading: Switch,
        /// Use the conventional quadrotor draw instead of the balloon platform.
        #[arg(long)]
        quad: bool,
    },
    /// Smallest helium balloon that lifts a payload.
    SizeBalloon {
        #[arg(long)]
        payload_g: f64,
        /// Ignore the envelope's own mass.
        #[arg(long)]
        massless_envelope: bool,
    },
}

fn run(command: Command) -> Result<(), Error> {
    match command {
        Command::Simulate { scenario, output } => {
            let s = Scenario::load(&scenario)?;
            let result = run_scenario(&s)?;
            write_trace(&result.records, BufWriter::new(File::create(&output)?))?;
            let m = headline(&s, &result);
            match m.value {
                Some(v) => println!("{}: {v} ({})", s.kind, m.detail),
                None => println!("{}: {}", s.kind, m.detail),
            }
            println!(
                "{} records written to {}",
                result.records.len(),
                output.display()
            );
        }
        Command::Mc {
            scenario,
            runs,
            seed,
            output,
            sweep,
        } => {
            let spec = MonteCarloSpec {
                base: Scenario::load(&scenario)?,
                runs,
                seed,
                sweep,
            };
            let summary = run_montecarlo(&spec)?;
            summary.write_csv(BufWriter::new(File::create(&output)?))?;
            let n = summary.metrics().len();
            println!("{n}/{runs} runs produced a metric");
            for p in [0.5, 0.9] {
                if let Some(q) = summary.quantile(p) {
                    println!("p{:.0}: {q}", p * 100.0);
                }
            }
        }
        Command::Faultscan { trace, config } => {
            let s = Scenario::load(&config)?;
            let detections = fault_scan_reader(BufReader::new(File::open(&trace)?), &s)?;
            if detections.is_empty() {
                println!("no detections");
            }
            for d in detections {
                println!("{},{}", d.t, d.rotor);
            }
        }
        Command::Lifetime {
            duty,
            heading,
            quad,
        } => {
            let battery = if quad {
                BatteryModel::quad_baseline()
            } else {
                BatteryModel::fitted()
            };
            let minutes = lifetime_minutes(duty, matches!(heading, Switch::On), &battery, 4)?;
            println!("{minutes:.2} min");
        }
        Command::SizeBalloon {
            payload_g,
            massless_envelope,
        } => {
            let payload = payload_g / 1000.0;
            let spec = if massless_envelope {
                BalloonSpec::massless(payload)
            } else {
                BalloonSpec::standard(payload)
            };
            let size = size_balloon(&spec)?;
            println!(
                "volume {:.2} L, diameter {:.3} m",
                size.volume_l, size.diameter_m
            );
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
