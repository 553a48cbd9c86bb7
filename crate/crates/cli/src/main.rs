//! `wnc`: run MAC and PHY scenarios and the figure presets.
//!
//! Exit status is 0 on success, 2 for configuration errors and 3 for
//! failures while running.

mod config;
mod output;
mod presets;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;
use wnc::phy::{score, search_optimal_labeling, Constellation, Objective};

use config::{CliError, Sources};
use output::Artifact;
use presets::{Kind, MacRow, PhyRow, Preset, PRESETS};

#[derive(Parser)]
#[command(name = "wnc", version, about = "Two-way relay network coding simulators")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the MAC simulator once, or a MAC preset.
    MacSim(Common),
    /// Run a PHY SNR sweep, or a PHY preset.
    PhySim(Common),
    /// Exhaustively search a relay labeling and print it.
    SearchLabeling(SearchArgs),
    /// List presets, or run the one named by --preset.
    Presets(Common),
}

#[derive(Args, Clone)]
struct Common {
    /// Scenario file (TOML).
    #[arg(long)]
    config: Option<PathBuf>,
    /// Seed; presets use this and the following reps-1 seeds.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long, default_value = "out")]
    out: PathBuf,
    #[arg(long)]
    preset: Option<String>,
    /// Override a scenario key, e.g. `--set nc.queue_size=8`.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
    /// Seeds per sweep point for MAC presets.
    #[arg(long, default_value_t = 10)]
    reps: u64,
}

impl Common {
    fn sources(&self) -> Sources {
        Sources { config: self.config.clone(), seed: self.seed, set: self.set.clone() }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum ObjectiveArg {
    SinkLeximax,
    GlobalMinFirst,
}

#[derive(Args)]
struct SearchArgs {
    /// Constellation order.
    #[arg(long, short = 'm')]
    order: usize,
    /// Bits known to sink A and to sink B, e.g. `1,2`.
    #[arg(long, value_parser = parse_split)]
    split: (usize, usize),
    #[arg(long, value_enum, default_value_t = ObjectiveArg::SinkLeximax)]
    objective: ObjectiveArg,
}

fn parse_split(s: &str) -> Result<(usize, usize), String> {
    let (a, b) = s.split_once(',').ok_or("expected two counts such as `1,2`")?;
    let n = |x: &str| x.trim().parse::<usize>().map_err(|e| format!("`{x}`: {e}"));
    Ok((n(a)?, n(b)?))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::MacSim(c) => mac_sim(&c),
        Command::PhySim(c) => phy_sim(&c),
        Command::SearchLabeling(a) => search_labeling(&a),
        Command::Presets(c) => match &c.preset {
            None => {
                for p in PRESETS {
                    println!("{:<20} {}", p.name, p.about);
                }
                Ok(())
            }
            Some(name) => presets::find(name).and_then(|p| run_preset(p, &c)),
        },
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("wnc: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn wrote(path: &std::path::Path) {
    eprintln!("wrote {}", path.display());
}

fn preset_for(c: &Common, kind: Kind) -> Result<Option<&'static Preset>, CliError> {
    let Some(name) = &c.preset else { return Ok(None) };
    let p = presets::find(name)?;
    if p.kind != kind {
        return Err(CliError::Config(format!("preset `{name}` belongs to the other simulator")));
    }
    Ok(Some(p))
}

fn mac_sim(c: &Common) -> Result<(), CliError> {
    if let Some(p) = preset_for(c, Kind::Mac)? {
        return run_preset(p, c);
    }
    let sc = c.sources().resolve(&[], &[])?;
    let rows = presets::run_mac(std::slice::from_ref(&sc))?;
    let art =
        Artifact { out: &c.out, name: "mac_sim", command: "mac-sim", preset: None, scenario: &sc, keys: MacRow::KEYS };
    wrote(&art.write(&rows, json!(null))?);
    Ok(())
}

fn phy_sim(c: &Common) -> Result<(), CliError> {
    if let Some(p) = preset_for(c, Kind::Phy)? {
        return run_preset(p, c);
    }
    let sc = c.sources().resolve(&[], &[])?;
    let rows = presets::run_phy(std::slice::from_ref(&sc.phy), sc.sim.seed)?;
    let art =
        Artifact { out: &c.out, name: "phy_sim", command: "phy-sim", preset: None, scenario: &sc, keys: PhyRow::KEYS };
    wrote(&art.write(&rows, json!(null))?);
    Ok(())
}

fn run_preset(p: &Preset, c: &Common) -> Result<(), CliError> {
    let src = c.sources();
    let sc = src.resolve(p.base, &[])?;
    let command = match p.kind {
        Kind::Mac => "mac-sim",
        Kind::Phy => "phy-sim",
    };
    let art = |keys| Artifact { out: &c.out, name: p.name, command, preset: Some(p.name), scenario: &sc, keys };
    let path = match p.name {
        "fig_throughput" | "fig_asym" => {
            let scenarios = presets::mac_points(p, &src, c.reps)?;
            let rows = presets::run_mac(&scenarios)?;
            art(MacRow::KEYS).write(&rows, json!({ "reps": c.reps }))?
        }
        "fig_phy_throughput" => {
            let rows = presets::run_phy(&presets::phy_curves(&sc.phy), sc.sim.seed)?;
            art(PhyRow::KEYS).write(&rows, json!(null))?
        }
        "fig_constellation" => {
            let (rows, evms) = presets::run_constellation(&sc.phy, sc.sim.seed)?;
            let evm: serde_json::Map<_, _> = evms.into_iter().map(|(t, e)| (t, json!(e))).collect();
            art(&["traffic"]).write(&rows, json!({ "snr_db": presets::CONSTELLATION_SNR_DB, "evm": evm }))?
        }
        other => return Err(CliError::Config(format!("preset `{other}` has no runner"))),
    };
    wrote(&path);
    Ok(())
}

fn search_labeling(a: &SearchArgs) -> Result<(), CliError> {
    let objective = match a.objective {
        ObjectiveArg::SinkLeximax => Objective::SinkLeximax,
        ObjectiveArg::GlobalMinFirst => Objective::GlobalMinFirst,
    };
    let split = a.split;
    let r = search_optimal_labeling(a.order, split, objective)?;
    let bits = a.order.trailing_zeros() as usize;
    println!("order {} split ({}, {}) objective {:?}", a.order, split.0, split.1, objective);
    println!("{:<6} {:>5} {:>9}", "word", "point", "angle");
    for word in 0..a.order {
        let k = r.constellation.point_of()[word];
        let angle = 360.0 * k as f64 / a.order as f64;
        println!("{:<6} {:>5} {:>9.1}", format!("{word:0bits$b}"), k, angle);
    }
    let gray = score(&Constellation::gray(a.order)?, split)?;
    println!("{:<28} {:>9} {:>9}", "", "search", "gray");
    for (name, x, g) in [
        ("sink A min distance", r.score.sink_a, gray.sink_a),
        ("sink B min distance", r.score.sink_b, gray.sink_b),
        ("mean subset min distance", r.score.mean_subset_min, gray.mean_subset_min),
        ("mean bitwise min distance", r.score.mean_bitwise_min, gray.mean_bitwise_min),
    ] {
        println!("{name:<28} {x:>9.4} {g:>9.4}");
    }
    println!("labelings examined: {}", r.examined);
    Ok(())
}
