use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use lod_nls::experiments::{
    convergence_study, decay_study, energy_study, run_single, with_threads, write_manifest, ExperimentConfig,
    LayerSpec, TauRule,
};
use lod_nls::lod::{BasisCache, Layers};
use lod_nls::{Error, Result};

#[derive(Parser)]
#[command(name = "lodnls", version, about = "LOD solver for the nonlinear Schrödinger equation with wave operator")]
#[command(arg_required_else_help = true)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// One simulation; writes energy.csv.
    Run(Common),
    /// Error table over coarse sizes; writes report.csv, plot.gp, manifest.json.
    Converge(Common),
    /// Energy drift for each layer count.
    Energy(Common),
    /// Distance of localized from ideal Ritz projections per layer count.
    Decay(Common),
    /// Inspect or clear the basis cache.
    Cache {
        #[command(subcommand)]
        action: CacheAction,
        #[arg(long, global = true)]
        cache_dir: Option<PathBuf>,
    },
}

#[derive(Subcommand, Clone, Copy)]
enum CacheAction {
    Inspect,
    Clear,
}

#[derive(Args)]
struct Common {
    /// TOML experiment file; flags override its values.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    example: Option<u32>,
    /// Coarse cells per side (1/H), comma separated.
    #[arg(long = "H", value_delimiter = ',')]
    coarse: Vec<usize>,
    /// Fine cells per side (1/h).
    #[arg(long = "h")]
    fine: Option<usize>,
    #[arg(long)]
    tau: Option<f64>,
    #[arg(long, value_enum)]
    tau_rule: Option<TauRuleArg>,
    #[arg(long = "T")]
    final_time: Option<f64>,
    /// Layer counts, `sat` or `auto`, comma separated.
    #[arg(long = "ell", value_delimiter = ',')]
    layers: Vec<String>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    threads: Option<usize>,
    /// Fixed-point tolerance.
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long)]
    no_cache: bool,
    /// Evaluate the example 4 potential in coordinates centered at (1/2, 1/2).
    #[arg(long)]
    center_domain: bool,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(clap::ValueEnum, Clone, Copy)]
enum TauRuleArg {
    Fixed,
    CoarseSquared,
}

impl Common {
    fn config(&self) -> Result<ExperimentConfig> {
        let mut cfg = match (&self.config, self.example) {
            (Some(path), _) => ExperimentConfig::load(path)?,
            (None, Some(id)) => ExperimentConfig::for_example(id),
            (None, None) => return Err(Error::Config("either --example or --config is required".into())),
        };
        if let Some(id) = self.example {
            cfg.problem.example = id;
        }
        let d = &mut cfg.discretization;
        if !self.coarse.is_empty() {
            d.coarse = self.coarse.clone();
        }
        if let Some(h) = self.fine {
            d.fine = h;
        }
        if let Some(t) = self.tau {
            d.tau = t;
        }
        if let Some(r) = self.tau_rule {
            d.tau_rule = match r {
                TauRuleArg::Fixed => TauRule::Fixed,
                TauRuleArg::CoarseSquared => TauRule::CoarseSquared,
            };
        }
        if !self.layers.is_empty() {
            d.layers = self.layers.iter().map(|s| s.parse()).collect::<Result<_>>()?;
        }
        if let Some(t) = self.final_time {
            cfg.problem.final_time = Some(t);
        }
        if let Some(s) = self.seed {
            cfg.problem.seed = s;
        }
        if self.center_domain {
            cfg.problem.center_domain = true;
        }
        if let Some(t) = self.threads {
            cfg.solver.threads = Some(t);
        }
        if let Some(t) = self.tol {
            cfg.solver.tol = t;
        }
        if self.no_cache {
            cfg.output.use_cache = false;
        }
        if let Some(o) = &self.out {
            cfg.output.dir = o.clone();
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

fn first_coarse(cfg: &ExperimentConfig) -> usize {
    cfg.discretization.coarse[0]
}

fn concrete_layers(cfg: &ExperimentConfig, coarse: usize) -> Vec<Layers> {
    cfg.discretization.layers.iter().map(|l| l.resolve(coarse)).collect()
}

fn cmd_run(c: &Common) -> Result<()> {
    let cfg = c.config()?;
    let coarse = first_coarse(&cfg);
    let layers = cfg.discretization.layers[0].resolve(coarse);
    let dir = cfg.output.dir.clone();
    let out = with_threads(cfg.solver.threads, || run_single(&cfg, coarse, layers, Some(&dir)))??;
    let summary = serde_json::json!({
        "n_coarse": coarse,
        "ell": layers.to_string(),
        "tau": cfg.tau_for(coarse),
        "steps": out.summary.levels - 1,
        "energy_initial": out.summary.energy.first().map(|r| r.energy),
        "energy_final": out.summary.energy.last().map(|r| r.energy),
        "max_relative_drift": out.drift,
        "final_errors": out.final_errors,
        "iterations_max": out.summary.iterations.max(),
        "iterations_mean": out.summary.iterations.mean(),
        "max_modulus": out.summary.max_modulus,
        "basis_cache_hit": out.cache_hit,
        "runtime_s": out.runtime_s,
    });
    write_manifest(&dir, &cfg, "run", summary.clone(), &["energy.csv"])?;
    println!("{}", serde_json::to_string_pretty(&summary)?);
    Ok(())
}

fn cmd_converge(c: &Common) -> Result<()> {
    let cfg = c.config()?;
    let report = with_threads(cfg.solver.threads, || convergence_study(&cfg))??;
    report.write_outputs(&cfg.output.dir, &cfg)?;
    print!("{}", report.to_csv_string());
    Ok(())
}

fn cmd_energy(c: &Common) -> Result<()> {
    let mut cfg = c.config()?;
    if c.layers.is_empty() {
        cfg.discretization.layers = (2..=8)
            .map(|l| LayerSpec::Given(Layers::Fixed(l)))
            .chain([LayerSpec::Given(Layers::Saturated)])
            .collect();
    }
    let coarse = first_coarse(&cfg);
    let layers = concrete_layers(&cfg, coarse);
    let dir = cfg.output.dir.clone();
    let rows = with_threads(cfg.solver.threads, || energy_study(&cfg, coarse, &layers, Some(&dir)))??;
    write_manifest(&dir, &cfg, "energy", serde_json::to_value(&rows)?, &["energy_study.csv"])?;
    println!("ell,max_drift,E0");
    for r in &rows {
        println!("{},{:.5e},{:.5e}", r.layers, r.max_drift, r.initial_energy);
    }
    Ok(())
}

fn cmd_decay(c: &Common) -> Result<()> {
    let cfg = c.config()?;
    let coarse = first_coarse(&cfg);
    let counts: Vec<usize> = if c.layers.is_empty() {
        (1..=8).collect()
    } else {
        concrete_layers(&cfg, coarse)
            .into_iter()
            .map(|l| match l {
                Layers::Fixed(n) => Ok(n),
                Layers::Saturated => Err(Error::InvalidArgument("decay needs finite layer counts".into())),
            })
            .collect::<Result<_>>()?
    };
    let dir = cfg.output.dir.clone();
    let rows = with_threads(cfg.solver.threads, || decay_study(&cfg, coarse, &counts, Some(&dir)))??;
    let details: Vec<_> = rows
        .iter()
        .map(|r| serde_json::json!({"ell": r.layers, "error_l2": r.error_l2, "error_energy": r.error_energy}))
        .collect();
    write_manifest(&dir, &cfg, "decay", details.into(), &["decay.csv"])?;
    println!("ell,error_L2,error_energy");
    for r in &rows {
        println!("{},{:.5e},{:.5e}", r.layers, r.error_l2, r.error_energy);
    }
    Ok(())
}

/// Reference trajectories stored next to the bases.
fn reference_dirs(dir: &std::path::Path) -> Result<Vec<PathBuf>> {
    if !dir.exists() {
        return Ok(Vec::new());
    }
    let mut out: Vec<PathBuf> = std::fs::read_dir(dir)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.is_dir() && p.file_name().is_some_and(|n| n.to_string_lossy().starts_with("reference-")))
        .collect();
    out.sort();
    Ok(out)
}

fn cmd_cache(action: CacheAction, dir: Option<PathBuf>) -> Result<()> {
    let cache = BasisCache::new(dir.unwrap_or_else(|| PathBuf::from("out/cache")));
    let references = reference_dirs(cache.dir())?;
    match action {
        CacheAction::Inspect => {
            let entries = cache.entries()?;
            let list: Vec<_> = entries
                .iter()
                .map(|e| {
                    serde_json::json!({
                        "path": e.path,
                        "bytes": e.bytes,
                        "n_coarse": e.coarse_side,
                        "factor": e.factor,
                        "ell": e.layers,
                    })
                })
                .collect();
            let report = serde_json::json!({"dir": cache.dir(), "entries": list, "references": references});
            println!("{}", serde_json::to_string_pretty(&report)?);
        }
        CacheAction::Clear => {
            let n = cache.clear()?;
            for r in &references {
                std::fs::remove_dir_all(r)?;
            }
            println!("{}", serde_json::json!({"dir": cache.dir(), "removed": n, "references_removed": references.len()}));
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Run(c) => cmd_run(c),
        Command::Converge(c) => cmd_converge(c),
        Command::Energy(c) => cmd_energy(c),
        Command::Decay(c) => cmd_decay(c),
        Command::Cache { action, cache_dir } => cmd_cache(*action, cache_dir.clone()),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{}", serde_json::json!({"kind": e.kind(), "message": e.to_string()}));
            ExitCode::FAILURE
        }
    }
}
