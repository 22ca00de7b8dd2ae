use std::fs;
use std::io::{self, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use lnsim::simnet::{build_network, demo_transcript, run_scenario, ScenarioConfig};
use lnsim::{format_btc, ChannelId};

#[derive(Parser)]
#[command(name = "lnsim", version, about = "Deterministic payment-channel network simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build and run a scenario, then print its metrics.
    Run {
        scenario: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = Format::Csv)]
        format: Format,
    },
    /// Build a scenario's network and print its size and channel graph.
    Stats {
        scenario: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run a scenario and print one channel's event log.
    Trace {
        scenario: PathBuf,
        channel: String,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Walk through a 2 BTC payment on a 10/10 BTC channel and close it.
    Demo {
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Csv,
    Lines,
}

fn load(path: &PathBuf, seed: Option<u64>) -> Result<ScenarioConfig, String> {
    let mut cfg = ScenarioConfig::load(path).map_err(|e| e.to_string())?;
    if let Some(s) = seed {
        cfg.seed = s;
    }
    Ok(cfg)
}

fn emit(out: Option<&PathBuf>, text: &str) -> Result<(), String> {
    match out {
        Some(p) => fs::write(p, text).map_err(|e| format!("cannot write {}: {e}", p.display())),
        None => match io::stdout().write_all(text.as_bytes()) {
            Err(e) if e.kind() != io::ErrorKind::BrokenPipe => Err(e.to_string()),
            _ => Ok(()),
        },
    }
}

fn execute(cmd: Command) -> Result<(), String> {
    match cmd {
        Command::Run {
            scenario,
            seed,
            out,
            format,
        } => {
            let cfg = load(&scenario, seed)?;
            let mut world = build_network(&cfg).map_err(|e| e.to_string())?;
            let m = run_scenario(&mut world, &cfg);
            let text = match format {
                Format::Csv => m.to_csv(),
                Format::Lines => m.to_lines(),
            };
            emit(out.as_ref(), &text)
        }
        Command::Stats { scenario, seed, out } => {
            let cfg = load(&scenario, seed)?;
            let world = build_network(&cfg).map_err(|e| e.to_string())?;
            let g = world.network.graph();
            let active = world.nodes().iter().filter(|n| world.is_active(n)).count();
            let cap = g.total_capacity_msat();
            let mut text = format!(
                "{} nodes, {} channels\ncapacity {} msat ({} BTC)\nactive nodes {}\n",
                g.node_count(),
                g.edge_count(),
                cap,
                format_btc(cap),
                active
            );
            text.push_str("channel_id,node_a,node_b,asset,capacity_msat,base_fee_msat,ppm\n");
            text.push_str(&g.export());
            emit(out.as_ref(), &text)
        }
        Command::Trace {
            scenario,
            channel,
            seed,
            out,
        } => {
            let cfg = load(&scenario, seed)?;
            let mut world = build_network(&cfg).map_err(|e| e.to_string())?;
            let id = ChannelId::new(channel.as_str());
            if world.network.channel(&id).is_none() {
                return Err(format!("unknown channel: {channel}"));
            }
            run_scenario(&mut world, &cfg);
            let mut text = String::new();
            for e in world.network.channel(&id).expect("checked").trace() {
                text.push_str(&e.to_string());
                text.push('\n');
            }
            emit(out.as_ref(), &text)
        }
        Command::Demo { out } => emit(out.as_ref(), &demo_transcript()),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("lnsim: {e}");
            ExitCode::from(2)
        }
    }
}
