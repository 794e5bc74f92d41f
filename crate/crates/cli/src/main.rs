//! `kingpeps solve` finds low-energy states of an instance; `kingpeps gen`
//! writes random king's-graph instances.

use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use serde_json::json;

use kingpeps::gen::{king_ising, Distribution};
use kingpeps::instance_io::{parse_ising, parse_potts, write_ising, write_solution};
use kingpeps::{
    low_energy_spectrum, unpack_droplets, ClusterTopology, ContractionParams, DropletMode, DropletParams,
    LatticeTransform, PottsHamiltonian, SearchParams, Solution,
};

#[derive(Parser)]
#[command(name = "kingpeps", version, about = "Tensor-network search for low-energy states on king's graphs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve an instance and write the low-energy spectrum as JSON.
    Solve(SolveArgs),
    /// Write a random Ising instance on a clustered king's graph.
    Gen(GenArgs),
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Ising,
    Potts,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Precision {
    F32,
    F64,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Mode {
    Spin,
    Potts,
}

#[derive(Args)]
struct SolveArgs {
    /// Instance file.
    instance: PathBuf,
    #[arg(long, value_enum, default_value = "ising")]
    format: Format,
    /// Cluster grid rows, columns and spins per cluster (Ising input only).
    #[arg(long, num_args = 3, value_names = ["M", "N", "T"])]
    topology: Option<Vec<usize>>,
    #[arg(long, default_value_t = 2.0)]
    beta: f64,
    #[arg(long, default_value_t = 16)]
    bond_dim: usize,
    #[arg(long, default_value_t = 1)]
    num_sweeps: usize,
    #[arg(long, default_value_t = 256)]
    max_states: usize,
    #[arg(long, default_value_t = 1e-4)]
    cut_off_prob: f64,
    /// Record droplets up to this energy above their carrier.
    #[arg(long)]
    energy_cutoff: Option<f64>,
    #[arg(long, default_value_t = 0)]
    hamming_cutoff: usize,
    /// Distance used between droplets. Defaults to spin for Ising input.
    #[arg(long, value_enum)]
    droplet_mode: Option<Mode>,
    /// Nesting depth of droplets re-anchored from merged branches.
    #[arg(long, default_value_t = 2)]
    droplet_depth: usize,
    /// Add every droplet as a state of its own in the output.
    #[arg(long)]
    unpack: bool,
    /// `all`, or a comma-separated list of transform names or codes 0-7.
    #[arg(long, default_value = "all")]
    transforms: String,
    /// JSON output path.
    #[arg(long, short)]
    output: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "f64")]
    precision: Precision,
    /// Fail if the best energies of the transforms differ by more than 1e-6
    /// relative.
    #[arg(long)]
    check_transforms: bool,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum CouplingDist {
    Uniform,
    PlusMinusOne,
}

#[derive(Args)]
struct GenArgs {
    /// Cluster grid rows and columns.
    #[arg(long, num_args = 2, value_names = ["M", "N"], required = true)]
    dims: Vec<usize>,
    /// Spins per cluster.
    #[arg(long, short = 't', default_value_t = 1)]
    cluster_size: usize,
    #[arg(long, value_enum, default_value = "uniform")]
    distribution: CouplingDist,
    /// Bounds of the uniform distribution.
    #[arg(long, default_value_t = -1.0, allow_hyphen_values = true)]
    low: f64,
    #[arg(long, default_value_t = 1.0, allow_hyphen_values = true)]
    high: f64,
    /// Also draw local fields from the coupling distribution.
    #[arg(long)]
    fields: bool,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output path; standard output if absent.
    #[arg(long, short)]
    output: Option<PathBuf>,
}

fn parse_transforms(list: &str) -> anyhow::Result<Vec<LatticeTransform>> {
    if list == "all" {
        return Ok(LatticeTransform::ALL.to_vec());
    }
    let mut out = Vec::new();
    for tok in list.split(',').map(str::trim) {
        let tr = match tok.parse::<u8>() {
            Ok(code) => LatticeTransform::from_code(code)?,
            Err(_) => *LatticeTransform::ALL
                .iter()
                .find(|t| t.name() == tok)
                .ok_or_else(|| anyhow!("unknown transform '{tok}'"))?,
        };
        if !out.contains(&tr) {
            out.push(tr);
        }
    }
    if out.is_empty() {
        bail!("no transforms selected");
    }
    Ok(out)
}

fn load(args: &SolveArgs) -> anyhow::Result<PottsHamiltonian> {
    let file = File::open(&args.instance).with_context(|| format!("cannot open {}", args.instance.display()))?;
    let reader = BufReader::new(file);
    let h = match args.format {
        Format::Potts => {
            if args.topology.is_some() {
                bail!("--topology applies to Ising input only");
            }
            parse_potts(reader)?
        }
        Format::Ising => {
            let Some(topo) = &args.topology else {
                bail!("Ising input needs a cluster layout; pass --topology M N T (e.g. --topology 16 16 1)");
            };
            let graph = parse_ising(reader)?;
            let topo = ClusterTopology::new(topo[0], topo[1], topo[2]);
            log::info!("{} spins, {} couplings", graph.num_spins(), graph.num_couplings());
            PottsHamiltonian::cluster(&graph, topo)?
        }
    };
    Ok(h)
}

fn solve(args: SolveArgs) -> anyhow::Result<()> {
    let contraction = ContractionParams::new(args.bond_dim, args.num_sweeps, args.beta)?;
    let search = SearchParams::new(args.max_states, args.cut_off_prob)?;
    let transforms = parse_transforms(&args.transforms)?;
    let h = load(&args)?;
    let mode = match args.droplet_mode {
        Some(Mode::Potts) => DropletMode::Potts,
        Some(Mode::Spin) => DropletMode::Spin,
        None if args.format == Format::Ising => DropletMode::Spin,
        None => DropletMode::Potts,
    };
    let droplets = args
        .energy_cutoff
        .map(|e| -> anyhow::Result<DropletParams> {
            let mut dp = DropletParams::new(e, args.hamming_cutoff, mode)?;
            dp.max_depth = args.droplet_depth;
            Ok(dp)
        })
        .transpose()?;
    log::info!("{}x{} grid, {} transforms", h.rows(), h.cols(), transforms.len());

    let run = |tr: LatticeTransform| {
        let sol = match args.precision {
            Precision::F64 => low_energy_spectrum::<f64>(&h, tr, &contraction, &search, droplets.as_ref()),
            Precision::F32 => low_energy_spectrum::<f32>(&h, tr, &contraction, &search, droplets.as_ref()),
        }?;
        if let Some(e) = sol.best_energy() {
            log::info!("{}: best energy {e}", tr.name());
        }
        Ok::<_, kingpeps::Error>(sol)
    };
    let solutions = transforms.par_iter().map(|&tr| run(tr)).collect::<Result<Vec<_>, _>>()?;
    let mut sol = Solution::combine(solutions);
    sol.truncate(args.max_states);
    if args.unpack {
        sol = unpack_droplets(&sol);
    }
    let best = sol.best_energy().ok_or_else(|| anyhow!("search returned no states"))?;

    if let Some(path) = &args.output {
        let parameters = json!({
            "format": match args.format { Format::Ising => "ising", Format::Potts => "potts" },
            "topology": args.topology,
            "beta": args.beta,
            "bond_dim": args.bond_dim,
            "num_sweeps": args.num_sweeps,
            "max_states": args.max_states,
            "cut_off_prob": args.cut_off_prob,
            "energy_cutoff": args.energy_cutoff,
            "hamming_cutoff": args.hamming_cutoff,
            "droplet_mode": match mode { DropletMode::Spin => "spin", DropletMode::Potts => "potts" },
            "droplet_depth": args.droplet_depth,
            "unpack": args.unpack,
            "transforms": transforms.iter().map(|t| t.name()).collect::<Vec<_>>(),
            "precision": match args.precision { Precision::F32 => "f32", Precision::F64 => "f64" },
        });
        let file = File::create(path).with_context(|| format!("cannot create {}", path.display()))?;
        let mut out = BufWriter::new(file);
        write_solution(&sol, &parameters, &mut out)?;
        out.flush()?;
    }
    println!("{best}");

    if args.check_transforms {
        let spread: Vec<String> = sol
            .transform_energies
            .iter()
            .filter(|(_, e)| (e - best).abs() > 1e-6 * best.abs().max(1.0))
            .map(|(t, e)| format!("{}: {e}", t.name()))
            .collect();
        if !spread.is_empty() {
            return Err(kingpeps::Error::Numeric(format!(
                "transforms disagree with best energy {best}: {}",
                spread.join(", ")
            ))
            .into());
        }
    }
    Ok(())
}

fn generate(args: GenArgs) -> anyhow::Result<()> {
    let dist = match args.distribution {
        CouplingDist::Uniform => {
            if args.low.is_nan() || args.high.is_nan() || args.low > args.high {
                bail!("--low must not exceed --high");
            }
            Distribution::Uniform { low: args.low, high: args.high }
        }
        CouplingDist::PlusMinusOne => Distribution::PlusMinusOne,
    };
    if args.dims.contains(&0) || args.cluster_size == 0 {
        bail!("grid dimensions and cluster size must be positive");
    }
    let topo = ClusterTopology::new(args.dims[0], args.dims[1], args.cluster_size);
    let g = king_ising(topo, dist, args.fields.then_some(dist), args.seed);
    match &args.output {
        Some(path) => {
            let file = File::create(path).with_context(|| format!("cannot create {}", path.display()))?;
            let mut out = BufWriter::new(file);
            write_ising(&g, &mut out)?;
            out.flush()?;
        }
        None => write_ising(&g, std::io::stdout().lock())?,
    }
    Ok(())
}

fn exit_code(err: &anyhow::Error) -> u8 {
    match err.downcast_ref::<kingpeps::Error>() {
        Some(e) if e.is_numeric() => 2,
        _ => 1,
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    let result = match cli.command {
        Command::Solve(args) => solve(args),
        Command::Gen(args) => generate(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
