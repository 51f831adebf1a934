use std::path::PathBuf;
use std::process::ExitCode;
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::Arc;

use clap::{Parser, Subcommand};
use vdtp_cli::commands::{
    load_spec, named_config, ranks_text, run_analyze, run_fetch, run_serve, run_sim,
};
use vdtp_cli::CliError;
use vdtp_stats::Scope;

/// Vehicular Data Transfer Protocol tools.
#[derive(Debug, Parser)]
#[command(name = "vdtp", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run an experiment matrix in the vehicular channel simulator.
    RunSim {
        /// JSON scenario; the built-in 900-trial matrix when omitted.
        #[arg(long)]
        scenario: Option<PathBuf>,
        /// Result CSV to write; metadata goes next to it.
        #[arg(long)]
        out: PathBuf,
        /// Overrides the scenario's master seed.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Serve files from a directory over UDP until interrupted.
    Serve {
        #[arg(long, default_value = "0.0.0.0:6970")]
        bind: String,
        #[arg(long)]
        root: PathBuf,
        #[arg(long, default_value = "EXPERTS")]
        config: String,
    },
    /// Download one file from a serving peer.
    Fetch {
        /// host:port of the owner.
        peer: String,
        /// Name of the file relative to the owner's root.
        file: String,
        #[arg(long, default_value = "EXPERTS")]
        config: String,
        /// Where to write the file; defaults to its base name.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Summarize a result set and rank the configurations.
    Analyze {
        /// Result CSV written by run-sim.
        results: PathBuf,
        #[arg(long, default_value = "combined")]
        scope: Scope,
        /// Directory for the report files; defaults to the results' directory.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::RunSim {
            scenario,
            out,
            seed,
        } => {
            let spec = load_spec(scenario.as_deref(), seed)?;
            let summary = run_sim(&spec, &out)?;
            println!(
                "{} trials in {:.2} s wall, results in {}",
                summary.trials,
                summary.wall_seconds,
                out.display()
            );
        }
        Command::Serve { bind, root, config } => {
            let cfg = named_config(&config)?;
            let shutdown = Arc::new(AtomicBool::new(false));
            let flag = shutdown.clone();
            ctrlc::set_handler(move || flag.store(true, Ordering::Relaxed))
                .map_err(|e| CliError::Usage(format!("cannot install signal handler: {e}")))?;
            let stats = run_serve(&bind, &root, cfg, &shutdown, |addr| {
                println!("listening on {addr}");
                let _ = std::io::Write::flush(&mut std::io::stdout());
            })?;
            log::info!(
                "shut down after {} datagrams, {} transfers",
                stats.datagrams_received,
                stats.transfers_opened
            );
        }
        Command::Fetch {
            peer,
            file,
            config,
            out,
        } => {
            let cfg = named_config(&config)?;
            let out = out.unwrap_or_else(|| {
                PathBuf::from(
                    std::path::Path::new(&file)
                        .file_name()
                        .map(|n| n.to_os_string())
                        .unwrap_or_else(|| "download.bin".into()),
                )
            });
            let report = run_fetch(&peer, &file, cfg, &out)?;
            println!(
                "goodput_kbs={:.3} lost_packets={}",
                report.goodput_kbs().unwrap_or(0.0),
                report.lost_packets
            );
        }
        Command::Analyze {
            results,
            scope,
            out,
        } => {
            let out_dir = out.unwrap_or_else(|| {
                results
                    .parent()
                    .map(PathBuf::from)
                    .unwrap_or_else(|| PathBuf::from("."))
            });
            let a = run_analyze(&results, scope, &out_dir)?;
            println!("{}", a.summary_text);
            println!("{}", a.lost_text);
            print!("{}", ranks_text(&a.ranks));
            for p in &a.written {
                log::info!("wrote {}", p.display());
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("VDTP_LOG", "warn")).init();
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
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("vdtp: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
