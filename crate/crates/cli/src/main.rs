use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use pass_structure::error::{Error, Result};
use pass_structure::pipeline::{self, PipelineConfig};
use pass_structure::synthetic::{self, DefenseTemplate, ScenarioSpec};
use pass_structure::Archetype;

#[derive(Parser)]
#[command(name = "passtruct", version, about = "Structural pass analysis from event and tracking data")]
struct Cli {
    /// More log output (repeatable).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// JSON config file; flags override its values.
    #[arg(long, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Worker threads.
    #[arg(long, value_name = "N")]
    jobs: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Extract passes from a match directory (or a directory of them) into a pass store.
    Ingest {
        input: PathBuf,
        #[arg(short, long)]
        out: PathBuf,
        #[arg(long)]
        include_goal_kicks: bool,
        #[command(flatten)]
        common: Common,
    },
    /// Compute metrics, fit the archetype model and write all tables.
    Analyze {
        store: PathBuf,
        #[arg(short, long)]
        out: PathBuf,
        #[arg(long)]
        sigma: Option<f64>,
        /// Outcome window in seconds.
        #[arg(long)]
        window: Option<f64>,
        #[arg(long)]
        k: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
        /// Independent k-means starts; the lowest-inertia fit is kept.
        #[arg(long)]
        restarts: Option<usize>,
        /// Heatmap grid as NXxNY (length bins x width bins).
        #[arg(long, value_name = "NXxNY", value_parser = parse_grid)]
        grid: Option<(usize, usize)>,
        #[command(flatten)]
        common: Common,
    },
    /// Score a pass store with a frozen model.json.
    Score {
        store: PathBuf,
        #[arg(long)]
        model: PathBuf,
        #[arg(short, long)]
        out: PathBuf,
        #[arg(long)]
        sigma: Option<f64>,
        #[command(flatten)]
        common: Common,
    },
    /// Generate synthetic matches with ground truth.
    Synth {
        #[arg(short, long)]
        out: PathBuf,
        /// Scenario JSON; flags override its values.
        #[arg(long, value_name = "PATH")]
        scenario: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        matches: Option<usize>,
        #[arg(long)]
        passes_per_match: Option<usize>,
        #[arg(long)]
        noise_sd: Option<f64>,
        #[arg(long, value_parser = parse_template)]
        template: Option<DefenseTemplate>,
        /// Intent shares as circulatory,destabilising,line_breaking,space_expanding.
        #[arg(long, value_name = "C,D,L,S", value_parser = parse_mix)]
        mix: Option<[f64; 4]>,
        #[arg(long)]
        sigma: Option<f64>,
    },
}

fn parse_grid(s: &str) -> std::result::Result<(usize, usize), String> {
    let (a, b) = s
        .split_once(['x', 'X'])
        .ok_or_else(|| format!("expected NXxNY, got {s:?}"))?;
    let nx = a.trim().parse().map_err(|e| format!("bad NX: {e}"))?;
    let ny = b.trim().parse().map_err(|e| format!("bad NY: {e}"))?;
    Ok((nx, ny))
}

fn parse_template(s: &str) -> std::result::Result<DefenseTemplate, String> {
    serde_json::from_value(serde_json::Value::String(s.into()))
        .map_err(|_| "expected flat_back_four, two_lines_4_4, compact_block or stretched_block".into())
}

fn parse_mix(s: &str) -> std::result::Result<[f64; 4], String> {
    let v: Vec<f64> = s
        .split(',')
        .map(|x| x.trim().parse::<f64>().map_err(|e| e.to_string()))
        .collect::<std::result::Result<_, _>>()?;
    v.try_into().map_err(|_| "expected four comma-separated shares".into())
}

fn load_config(path: Option<&Path>) -> Result<PipelineConfig> {
    path.map_or_else(|| Ok(PipelineConfig::default()), PipelineConfig::load)
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Ingest {
            input,
            out,
            include_goal_kicks,
            common,
        } => {
            let mut cfg = load_config(common.config.as_deref())?;
            cfg.ingest.include_goal_kicks |= include_goal_kicks;
            let totals = pipeline::with_jobs(common.jobs, || pipeline::run_ingest(&input, &out, &cfg.ingest))??;
            println!(
                "ingested {} matches: {} of {} pass events kept",
                totals.matches, totals.passes, totals.pass_events
            );
            for (reason, n) in &totals.dropped {
                println!("  dropped {reason}: {n}");
            }
        }
        Command::Analyze {
            store,
            out,
            sigma,
            window,
            k,
            seed,
            restarts,
            grid,
            common,
        } => {
            let mut cfg = load_config(common.config.as_deref())?.analysis;
            if let Some(s) = sigma {
                cfg.density.sigma = s;
            }
            if let Some(w) = window {
                cfg.outcomes.window_s = w;
            }
            if let Some(k) = k {
                cfg.kmeans.k = k;
            }
            if let Some(s) = seed {
                cfg.kmeans.seed = s;
            }
            if let Some(r) = restarts {
                cfg.kmeans.restarts = r;
            }
            if let Some((nx, ny)) = grid {
                cfg.grid.nx = nx;
                cfg.grid.ny = ny;
            }
            cfg.validate()?;
            let summary = pipeline::with_jobs(common.jobs, || pipeline::run_analyze(&store, &out, &cfg))??;
            println!("analyzed {} passes", summary.n_passes);
            for a in Archetype::ALL {
                let n = summary.counts.get(&a).copied().unwrap_or(0);
                println!("  {:<16} {n}", a.name());
            }
        }
        Command::Score {
            store,
            model,
            out,
            sigma,
            common,
        } => {
            // The config file only matters for its sigma, which must agree with the model.
            let sigma = match (sigma, common.config.as_deref()) {
                (Some(s), _) => Some(s),
                (None, Some(p)) => Some(PipelineConfig::load(p)?.analysis.density.sigma),
                (None, None) => None,
            };
            let n = pipeline::with_jobs(common.jobs, || pipeline::run_score(&store, &model, &out, sigma))??;
            println!("scored {n} passes");
        }
        Command::Synth {
            out,
            scenario,
            seed,
            matches,
            passes_per_match,
            noise_sd,
            template,
            mix,
            sigma,
        } => {
            let mut spec: ScenarioSpec = match &scenario {
                Some(p) => {
                    let text = std::fs::read_to_string(p).map_err(|e| match e.kind() {
                        std::io::ErrorKind::NotFound => Error::MissingFile(p.clone()),
                        _ => Error::io(p, e),
                    })?;
                    serde_json::from_str(&text).map_err(|e| Error::InvalidInput {
                        path: p.clone(),
                        message: e.to_string(),
                    })?
                }
                None => ScenarioSpec::default(),
            };
            if let Some(s) = seed {
                spec.seed = s;
            }
            if let Some(m) = matches {
                spec.n_matches = m;
            }
            if let Some(p) = passes_per_match {
                spec.passes_per_match = p;
            }
            if let Some(s) = noise_sd {
                spec.noise_sd = s;
            }
            if let Some(t) = template {
                spec.defense_template = t;
            }
            if let Some(s) = sigma {
                spec.sigma = s;
            }
            if let Some(m) = mix {
                spec.pass_mix = Archetype::ALL.into_iter().zip(m).collect();
            }
            let summary = synthetic::generate(&spec, &out)?;
            println!(
                "generated {} matches with {} open-play passes in {}",
                summary.matches,
                summary.open_play_passes,
                out.display()
            );
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            if e.is_input_error() {
                ExitCode::from(2)
            } else {
                ExitCode::FAILURE
            }
        }
    }
}

