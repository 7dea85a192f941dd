//! Command-line definitions and subcommand implementations.

use std::fs;
use std::io::{BufWriter, Write};
use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};
use datasetlens_core::config::ProbabilityUnit;
use datasetlens_core::dataset::{load_dataset, validate, write_canonical, LoadOptions};
use datasetlens_core::insight::{render_html, AnalysisContext, SectionKind};
use datasetlens_core::{MetricError, RunConfig};
use serde_json::Value;

use crate::config::{self, FlagOverrides};
use crate::server::{self, AppState, MemoCache};

#[derive(Debug, Parser)]
#[command(name = "datasetlens", version, about = "Audit annotated image datasets for representation bias")]
pub struct Cli {
    /// Repeat for more log output.
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    pub verbose: u8,

    #[command(subcommand)]
    pub command: Command,
}

/// Inputs shared by every subcommand. Nested settings use `--set
/// params.object.duplicate_iou=0.9` or `DATASETLENS_PARAMS__OBJECT__DUPLICATE_IOU`.
#[derive(Clone, Debug, Default, Args)]
pub struct InputArgs {
    /// TOML or JSON file holding any RunConfig fields.
    #[arg(long, env = "DATASETLENS_CONFIG")]
    pub config: Option<PathBuf>,
    #[arg(long, env = "DATASETLENS_DATASET")]
    pub dataset: Option<PathBuf>,
    /// `canonical` or `coco`.
    #[arg(long, env = "DATASETLENS_FORMAT")]
    pub format: Option<String>,
    /// Separate COCO captions file.
    #[arg(long, env = "DATASETLENS_CAPTIONS")]
    pub captions: Option<PathBuf>,
    /// Feature files; repeat or separate with commas.
    #[arg(long, env = "DATASETLENS_FEATURES", value_delimiter = ',')]
    pub features: Vec<PathBuf>,
    #[arg(long, env = "DATASETLENS_COUNTRY_TABLE")]
    pub country_table: Option<PathBuf>,
    /// Tag vocabulary, one tag per line.
    #[arg(long, env = "DATASETLENS_VOCABULARY")]
    pub vocabulary: Option<PathBuf>,
    /// Synonym CSV (`term,syn1;syn2`).
    #[arg(long, env = "DATASETLENS_SYNONYMS")]
    pub synonyms: Option<PathBuf>,
    #[arg(long, env = "DATASETLENS_SEED")]
    pub seed: Option<u64>,
    /// Override any config key, e.g. `params.insight.min_support=5`.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    pub sets: Vec<String>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Load a dataset and write it in canonical form.
    Ingest {
        #[command(flatten)]
        input: InputArgs,
        #[arg(long)]
        out: PathBuf,
    },
    /// Report out-of-bounds boxes, zero-area boxes and duplicate IDs.
    Validate {
        #[command(flatten)]
        input: InputArgs,
        #[arg(long)]
        json: bool,
        /// Exit nonzero when violations are found.
        #[arg(long)]
        strict: bool,
    },
    /// Compute every available metric and write report.json and report.html.
    Analyze {
        #[command(flatten)]
        input: InputArgs,
        #[arg(long, env = "DATASETLENS_OUT")]
        out: Option<PathBuf>,
        #[arg(long)]
        no_html: bool,
    },
    /// Rank pairwise queries for a target category and outcome.
    Recommend {
        #[command(flatten)]
        input: InputArgs,
        #[arg(long)]
        target: String,
        /// e.g. `size:XS,S,M`, `scene:water_ice_snow`, `cooccurs:kite`, `gender:female`.
        #[arg(long)]
        outcome: String,
        #[arg(long)]
        min_support: Option<u64>,
        /// `per_image` or `per_instance`.
        #[arg(long)]
        unit: Option<String>,
        #[arg(long)]
        json: bool,
    },
    /// Scene-group commonness against appearance-diversity gain for a target.
    Tradeoff {
        #[command(flatten)]
        input: InputArgs,
        #[arg(long)]
        target: String,
        /// `centroid_distance` or `leave_group_out`.
        #[arg(long)]
        gain_mode: Option<String>,
        #[arg(long)]
        json: bool,
    },
    /// Serve the read-only HTTP API.
    Serve {
        #[command(flatten)]
        input: InputArgs,
        #[arg(long, default_value = "127.0.0.1", env = "DATASETLENS_HOST")]
        host: String,
        #[arg(long, default_value_t = 8080, env = "DATASETLENS_PORT")]
        port: u16,
        /// Memoized responses kept; 0 disables the cache.
        #[arg(long, default_value_t = 256, env = "DATASETLENS_CACHE_ENTRIES")]
        cache_entries: usize,
    },
}

fn run_config(input: &InputArgs, out_dir: Option<PathBuf>, extra_sets: Vec<String>) -> Result<RunConfig> {
    let mut sets = input.sets.clone();
    sets.extend(extra_sets);
    let flags = FlagOverrides {
        dataset: input.dataset.clone(),
        format: input.format.clone(),
        captions: input.captions.clone(),
        features: input.features.clone(),
        country_table: input.country_table.clone(),
        vocabulary: input.vocabulary.clone(),
        synonyms: input.synonyms.clone(),
        seed: input.seed,
        out_dir,
        sets,
    };
    config::build(input.config.as_deref(), &flags, std::env::vars())
}

fn context(cfg: RunConfig) -> Result<AnalysisContext> {
    let started = std::time::Instant::now();
    let ctx = AnalysisContext::load(cfg)?;
    log::info!(
        "loaded {} images and {} instances in {:.2?}",
        ctx.dataset().images().len(),
        ctx.dataset().instances().len(),
        started.elapsed()
    );
    for w in &ctx.inputs().warnings {
        eprintln!("warning: {w}");
    }
    Ok(ctx)
}

fn print_json(v: &impl serde::Serialize) -> Result<()> {
    let mut out = std::io::stdout().lock();
    serde_json::to_writer_pretty(&mut out, v)?;
    writeln!(out)?;
    Ok(())
}

fn ingest(input: &InputArgs, out: &Path) -> Result<ExitCode> {
    let cfg = run_config(input, None, Vec::new())?;
    let path = cfg.dataset.clone().context("--dataset is required")?;
    let options = LoadOptions {
        gender_label_map: cfg.gender_label_map.clone(),
        captions_path: cfg.captions.clone(),
        ..LoadOptions::default()
    };
    let ds = load_dataset(&path, cfg.format, &options)?;
    let file = fs::File::create(out).with_context(|| format!("creating {}", out.display()))?;
    let mut w = BufWriter::new(file);
    write_canonical(&ds, &mut w)?;
    w.flush()?;
    println!(
        "wrote {} images, {} instances, {} categories to {}",
        ds.images().len(),
        ds.instances().len(),
        ds.categories().len(),
        out.display()
    );
    if !ds.duplicates().is_empty() {
        println!("dropped {} records with repeated IDs", ds.duplicates().len());
    }
    Ok(ExitCode::SUCCESS)
}

fn validate_cmd(input: &InputArgs, json: bool, strict: bool) -> Result<ExitCode> {
    let ctx = context(run_config(input, None, Vec::new())?)?;
    let violations = validate(ctx.dataset());
    if json {
        print_json(&violations)?;
    } else if violations.is_empty() {
        println!("no violations");
    } else {
        for v in &violations {
            println!("{}\t{}\t{}", v.kind.as_str(), v.record_id, v.message);
        }
        println!("{} violations", violations.len());
    }
    Ok(if strict && !violations.is_empty() {
        ExitCode::from(2)
    } else {
        ExitCode::SUCCESS
    })
}

fn analyze(input: &InputArgs, out: Option<PathBuf>, no_html: bool) -> Result<ExitCode> {
    let cfg = run_config(input, out, Vec::new())?;
    let out_dir = cfg.out_dir.clone();
    let ctx = context(cfg)?;
    let report = ctx.generate_report()?;
    fs::create_dir_all(&out_dir).with_context(|| format!("creating {}", out_dir.display()))?;
    let json_path = out_dir.join("report.json");
    fs::write(&json_path, report.to_json() + "\n").with_context(|| format!("writing {}", json_path.display()))?;
    println!("wrote {}", json_path.display());
    if !no_html {
        let html_path = out_dir.join("report.html");
        fs::write(&html_path, render_html(&report)).with_context(|| format!("writing {}", html_path.display()))?;
        println!("wrote {}", html_path.display());
    }
    for kind in SectionKind::ALL {
        let s = report.sections.get(kind);
        let status = serde_json::to_value(s.status)?;
        let missing: Vec<&str> = s.missing.iter().map(|a| a.as_str()).collect();
        if missing.is_empty() {
            println!("{:8} {}", kind.as_str(), status.as_str().unwrap_or(""));
        } else {
            println!("{:8} {} (missing: {})", kind.as_str(), status.as_str().unwrap_or(""), missing.join(", "));
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn recommend(
    input: &InputArgs,
    target: &str,
    outcome: &str,
    min_support: Option<u64>,
    unit: Option<&str>,
    json: bool,
) -> Result<ExitCode> {
    let unit = unit
        .map(|u| serde_json::from_value::<ProbabilityUnit>(Value::String(u.into())))
        .transpose()
        .context("--unit must be per_image or per_instance")?;
    let ctx = context(run_config(input, None, Vec::new())?)?;
    let ranking = match ctx.recommend(target, outcome, min_support, unit) {
        Ok(r) => r,
        Err(MetricError::NoCandidates(s)) => {
            println!("no candidates: no term co-occurs with {target} in at least {s} images");
            return Ok(ExitCode::SUCCESS);
        }
        Err(e) => return Err(e.into()),
    };
    if json {
        print_json(&ranking)?;
        return Ok(ExitCode::SUCCESS);
    }
    println!(
        "target {} | outcome {} | base rate {} over {} | min support {}",
        ranking.target,
        ranking.outcome,
        ranking.base_probability.map_or_else(|| "n/a".into(), |p| format!("{p:.3}")),
        ranking.base_support,
        ranking.min_support
    );
    println!("{:>4}  {:<28} {:<14} {:>11} {:>8}  queries", "rank", "term", "kind", "probability", "support");
    for (i, r) in ranking.recommendations.iter().enumerate() {
        let kind = serde_json::to_value(r.term_kind)?;
        let mut queries = r.expanded_queries.iter().take(3).cloned().collect::<Vec<_>>().join("; ");
        if r.expanded_queries.len() > 3 {
            queries.push_str(&format!("; +{} more", r.expanded_queries.len() - 3));
        }
        println!(
            "{:>4}  {:<28} {:<14} {:>11.4} {:>8}  {}",
            i + 1,
            r.term,
            kind.as_str().unwrap_or(""),
            r.probability,
            r.support,
            queries
        );
    }
    Ok(ExitCode::SUCCESS)
}

fn tradeoff(input: &InputArgs, target: &str, gain_mode: Option<&str>, json: bool) -> Result<ExitCode> {
    let sets = gain_mode
        .map(|g| vec![format!("params.insight.gain_mode={g}")])
        .unwrap_or_default();
    let ctx = context(run_config(input, None, sets)?)?;
    let t = ctx.tradeoff(target)?;
    if json {
        print_json(&t)?;
        return Ok(ExitCode::SUCCESS);
    }
    println!("target {} | {} embedded instances", t.target, t.n_instances);
    println!("{:<26} {:>11} {:>14} {:>6}", "scene group", "commonness", "diversity gain", "n");
    for p in &t.points {
        let mark = if p.efficient { "  <- most efficient" } else { "" };
        println!("{:<26} {:>11.4} {:>14.4} {:>6}{mark}", p.scene_group, p.commonness, p.diversity_gain, p.n);
    }
    Ok(ExitCode::SUCCESS)
}

async fn serve(input: &InputArgs, host: &str, port: u16, cache_entries: usize) -> Result<ExitCode> {
    let ctx = context(run_config(input, None, Vec::new())?)?;
    let addr: SocketAddr = format!("{host}:{port}").parse().with_context(|| format!("bad address {host}:{port}"))?;
    let state = Arc::new(AppState {
        ctx,
        cache: MemoCache::new(cache_entries),
    });
    server::serve(state, addr).await?;
    Ok(ExitCode::SUCCESS)
}

pub fn run(cli: Cli) -> Result<ExitCode> {
    match &cli.command {
        Command::Ingest { input, out } => ingest(input, out),
        Command::Validate { input, json, strict } => validate_cmd(input, *json, *strict),
        Command::Analyze { input, out, no_html } => analyze(input, out.clone(), *no_html),
        Command::Recommend {
            input,
            target,
            outcome,
            min_support,
            unit,
            json,
        } => recommend(input, target, outcome, *min_support, unit.as_deref(), *json),
        Command::Tradeoff {
            input,
            target,
            gain_mode,
            json,
        } => tradeoff(input, target, gain_mode.as_deref(), *json),
        Command::Serve {
            input,
            host,
            port,
            cache_entries,
        } => {
            let rt = tokio::runtime::Runtime::new()?;
            rt.block_on(serve(input, host, *port, *cache_entries))
        }
    }
}
