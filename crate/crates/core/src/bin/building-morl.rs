use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use clap::{Args, Parser, Subcommand};

use building_morl::context::{builtin_climate_params, synthesize, AssetLibrary, ContextSampler, TrainMode, HOURS_PER_YEAR};
use building_morl::env::EnvConfig;
use building_morl::harness::{compare_modes, export_front_plot_data, run_experiment, ContextEntry, ExperimentSpec};
use building_morl::metrics::{evaluate_front, pareto_filter, reference_point, EuConfig};
use building_morl::morl::{evaluate_policy, Checkpoint, EnvFactory, EvalProtocol, Trainer, TrainerConfig};
use building_morl::{Error, Result};

#[derive(Parser)]
#[command(name = "building-morl", version, about = "Multi-objective building control: simulate, train, evaluate")]
struct Cli {
    /// Directory with layouts/*.json and climates/*.csv; defaults to the built-in assets.
    #[arg(long, global = true)]
    assets: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Asset checks and generation.
    #[command(subcommand)]
    Assets(AssetsCmd),
    /// Train a policy buffer and write a checkpoint and its front.
    Train(TrainArgs),
    /// Evaluate a checkpoint's front policies in a list of contexts.
    Evaluate(EvaluateArgs),
    #[command(subcommand)]
    Experiment(ExperimentCmd),
    #[command(subcommand)]
    Export(ExportCmd),
}

#[derive(Subcommand)]
enum AssetsCmd {
    /// Load every layout and climate and check integrator stability.
    Validate {
        #[arg(long, default_value_t = 300.0)]
        substep: f64,
    },
    /// Write the synthetic climate profiles as CSV files.
    Generate {
        #[arg(long)]
        out_dir: PathBuf,
    },
}

#[derive(Args)]
struct TrainArgs {
    #[arg(long, default_value = "two_zone")]
    layout: String,
    #[arg(long, default_value = "Warm_Marine")]
    climate: String,
    #[arg(long, default_value = "static")]
    mode: TrainMode,
    /// Seeded training envelope; the bounds midpoint when absent.
    #[arg(long)]
    u_wall_seed: Option<u64>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// TrainerConfig JSON.
    #[arg(long)]
    config: Option<PathBuf>,
    /// EnvConfig JSON.
    #[arg(long)]
    env: Option<PathBuf>,
    /// Continue from a checkpoint with additional extension rounds.
    #[arg(long)]
    resume: Option<PathBuf>,
    #[arg(long, default_value = "out")]
    out_dir: PathBuf,
}

#[derive(Args)]
struct EvaluateArgs {
    #[arg(long)]
    checkpoint: PathBuf,
    /// JSON list of contexts ({label, climate_id, u_wall | u_wall_seed}).
    #[arg(long)]
    contexts: PathBuf,
    #[arg(long)]
    env: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value = "out")]
    out_dir: PathBuf,
}

#[derive(Subcommand)]
enum ExperimentCmd {
    /// Multi-run training and evaluation; writes a report table and fronts.
    Run {
        spec: PathBuf,
        /// Overrides the spec's master seed.
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        mode: Option<TrainMode>,
        #[arg(long, default_value = "out")]
        out_dir: PathBuf,
    },
    /// Paired table for two specs sharing their eval contexts.
    Compare {
        first: PathBuf,
        second: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, default_value = "out")]
        out_dir: PathBuf,
    },
}

#[derive(Subcommand)]
enum ExportCmd {
    /// Long-format CSV (mode,context,policy_id,g_*) from a fronts directory.
    FrontData {
        #[arg(long, default_value = "out/fronts")]
        fronts: PathBuf,
        #[arg(long, default_value_t = 0)]
        run: usize,
        #[arg(long, value_delimiter = ',', default_value = "thermal,cost")]
        objectives: Vec<String>,
        #[arg(long, default_value = "out/front_data.csv")]
        out: PathBuf,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let record = serde_json::json!({ "error": { "kind": e.kind(), "message": e.to_string() } });
            eprintln!("{record}");
            ExitCode::FAILURE
        }
    }
}

fn library(assets: Option<&Path>) -> Result<Arc<AssetLibrary>> {
    Ok(Arc::new(match assets {
        Some(dir) => AssetLibrary::from_dir(dir)?,
        None => AssetLibrary::builtin(),
    }))
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).map_err(|e| Error::Io {
        path: path.into(),
        source: e,
    })?;
    serde_json::from_str(&text).map_err(|e| Error::Json {
        path: path.into(),
        source: e,
    })
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent).map_err(|e| Error::Io {
            path: parent.into(),
            source: e,
        })?;
    }
    fs::write(path, text).map_err(|e| Error::Io {
        path: path.into(),
        source: e,
    })
}

fn run(cli: Cli) -> Result<()> {
    let assets = cli.assets.as_deref();
    match cli.command {
        Command::Assets(AssetsCmd::Validate { substep }) => {
            for line in library(assets)?.validate(substep)? {
                println!("{line}");
            }
            println!("ok");
        }
        Command::Assets(AssetsCmd::Generate { out_dir }) => {
            for (id, params) in builtin_climate_params() {
                let path = out_dir.join(format!("{id}.csv"));
                write_text(&path, &synthesize(id, &params, HOURS_PER_YEAR).to_csv_string())?;
                println!("{}", path.display());
            }
        }
        Command::Train(a) => train(assets, a)?,
        Command::Evaluate(a) => evaluate(assets, a)?,
        Command::Experiment(ExperimentCmd::Run { spec, seed, mode, out_dir }) => {
            let mut spec = ExperimentSpec::load(&spec)?;
            if let Some(s) = seed {
                spec.master_seed = s;
            }
            if let Some(m) = mode {
                spec.mode = m;
            }
            let res = run_experiment(&library(assets)?, &spec, Some(&out_dir))?;
            print!("{}", res.table.render());
        }
        Command::Experiment(ExperimentCmd::Compare { first, second, seed, out_dir }) => {
            let mut a = ExperimentSpec::load(&first)?;
            let mut b = ExperimentSpec::load(&second)?;
            if let Some(s) = seed {
                a.master_seed = s;
                b.master_seed = s;
            }
            let res = compare_modes(&library(assets)?, &a, &b, Some(&out_dir))?;
            print!("{}", res.table.render());
        }
        Command::Export(ExportCmd::FrontData { fronts, run, objectives, out }) => {
            let n = export_front_plot_data(&fronts, run, &objectives, &out)?;
            println!("{n} rows -> {}", out.display());
        }
    }
    Ok(())
}

fn env_config(path: Option<&Path>) -> Result<EnvConfig> {
    path.map_or_else(|| Ok(EnvConfig::default()), EnvConfig::load)
}

fn train(assets: Option<&Path>, a: TrainArgs) -> Result<()> {
    let lib = library(assets)?;
    let factory = EnvFactory::new(lib, env_config(a.env.as_deref())?)?;
    let trainer = match &a.resume {
        Some(path) => {
            let mut t = Trainer::resume(factory, Checkpoint::load(path)?)?;
            let rounds = t.config().extension_rounds;
            t.extend(rounds)?;
            t
        }
        None => {
            let mut config: TrainerConfig = match &a.config {
                Some(p) => read_json(p)?,
                None => TrainerConfig::default(),
            };
            config.seed = a.seed;
            let entry = ContextEntry {
                climate_id: Some(a.climate.clone()),
                u_wall_seed: a.u_wall_seed,
                ..Default::default()
            };
            let (_, base) = entry.resolve(&a.layout, &a.climate)?;
            let sampler = ContextSampler::new(a.mode, base, a.seed);
            let mut t = Trainer::new(factory, config, sampler)?;
            t.pareto_initialization()?;
            let rounds = t.config().extension_rounds;
            t.extend(rounds)?;
            t
        }
    };
    let cp = trainer.checkpoint();
    fs::create_dir_all(&a.out_dir).map_err(|e| Error::Io {
        path: a.out_dir.clone(),
        source: e,
    })?;
    cp.save(&a.out_dir.join("checkpoint.json"))?;
    let front = trainer.buffer().front()?;
    let mut csv = Vec::new();
    front.write_csv(&mut csv).map_err(|e| Error::Io {
        path: a.out_dir.join("front.csv"),
        source: e,
    })?;
    write_text(&a.out_dir.join("front.csv"), &String::from_utf8_lossy(&csv))?;
    for issue in trainer.issues() {
        eprintln!("warning: {}: {}", issue.stage, issue.message);
    }
    println!(
        "buffer {} policies, front {} -> {}",
        trainer.buffer().len(),
        front.len(),
        a.out_dir.display()
    );
    Ok(())
}

fn evaluate(assets: Option<&Path>, a: EvaluateArgs) -> Result<()> {
    let lib = library(assets)?;
    let cp = Checkpoint::load(&a.checkpoint)?;
    let factory = EnvFactory::new(lib, env_config(a.env.as_deref())?)?;
    let entries: Vec<ContextEntry> = read_json(&a.contexts)?;
    let base = cp
        .buffer
        .protocol
        .contexts
        .first()
        .cloned()
        .ok_or_else(|| Error::Config("checkpoint protocol has no contexts".into()))?;
    let front = cp.buffer.front()?;
    let policies: Vec<_> = front
        .policy_ids
        .iter()
        .map(|id| cp.buffer.get(*id).expect("front ids come from the buffer").policy.clone())
        .collect();
    let mut fronts = Vec::new();
    for e in &entries {
        let (label, ctx) = e.resolve(&base.layout_id, &base.climate_id)?;
        let protocol = EvalProtocol {
            contexts: vec![ctx],
            seeds: vec![a.seed],
            episodes: 1,
        };
        let returns = policies
            .iter()
            .map(|p| evaluate_policy(&factory, &cp.buffer.normalizer, p, &protocol))
            .collect::<Result<Vec<_>>>()?;
        let ids: Vec<u64> = policies.iter().map(|p| p.id).collect();
        fronts.push((label, pareto_filter(&returns, &ids)?));
    }
    let reference = reference_point(fronts.iter().flat_map(|(_, f)| &f.points), 0.01)
        .ok_or_else(|| Error::Validation("no policies to evaluate".into()))?;
    let mut reports = serde_json::Map::new();
    for (label, f) in &fronts {
        let mut csv = Vec::new();
        f.write_csv(&mut csv).expect("writing to memory cannot fail");
        write_text(&a.out_dir.join("eval").join(format!("{label}.csv")), &String::from_utf8_lossy(&csv))?;
        let r = evaluate_front(f, &reference, &EuConfig::default())?;
        println!("{label}: HV {:.6e}  EU {:.6}  SP {:.6}  |front| {}", r.hv, r.eu, r.sp, r.front_size);
        reports.insert(label.clone(), serde_json::to_value(r).expect("report serializes"));
    }
    write_text(
        &a.out_dir.join("eval").join("metrics.json"),
        &serde_json::to_string_pretty(&reports).expect("report serializes"),
    )?;
    Ok(())
}
