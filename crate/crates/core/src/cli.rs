//! `kgbench` command line: build, validate, train, eval, presets.
//!
//! Exit codes: 0 success, 1 contract error or validation violations,
//! 2 usage error.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use log::info;

use crate::error::{Error, Result};
use crate::eval::{evaluate, EvalConfig, Protocol, Sides};
use crate::io::{
    load_dataset, read_checkpoint, read_json, read_triples_tsv, report_json, write_checkpoint, write_json,
    write_report, DatasetLayout,
};
use crate::models::ModelKind;
use crate::ontology::{check_domain_range, check_taxonomy, SchemaFile};
use crate::sampler::{build_benchmark, write_benchmark, BuildConfig};
use crate::training::{all_presets, preset, train_with, DatasetTag, TrainConfig, TrainConfigFile};

#[derive(Debug, Parser)]
#[command(name = "kgbench", version, about = "Knowledge-graph benchmark construction, training and evaluation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Sample a benchmark from a full triple file and write its splits.
    Build {
        /// Full KG as head<TAB>relation<TAB>tail lines.
        #[arg(long)]
        full: PathBuf,
        /// JSON sampling configuration.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Check a dataset against an ontology schema.
    Validate {
        #[arg(long)]
        schema: PathBuf,
        #[arg(long)]
        data: PathBuf,
        /// Write the report here instead of standard output.
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Train a model and write a checkpoint.
    Train {
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        model: String,
        /// Start from the published hyperparameters for this dataset.
        #[arg(long, value_parser = ["openbg-img", "openbg500", "openbg500-l"])]
        preset: Option<String>,
        /// JSON overrides on top of the preset or model defaults.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        /// Per-epoch mean loss as CSV.
        #[arg(long)]
        loss_out: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, env = "KGBENCH_WORKERS")]
        workers: Option<usize>,
    },
    /// Rank test triples with a checkpoint.
    Eval {
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        ckpt: PathBuf,
        #[arg(long, value_enum, default_value_t = ProtocolArg::Filtered)]
        protocol: ProtocolArg,
        #[arg(long, value_enum, default_value_t = SidesArg::Both)]
        sides: SidesArg,
        /// Restrict to test triples of this relation label.
        #[arg(long)]
        relation: Option<String>,
        #[arg(long, value_delimiter = ',', default_values_t = [1u32, 3, 10])]
        hits: Vec<u32>,
        /// Write the report here instead of standard output.
        #[arg(long)]
        report: Option<PathBuf>,
        #[arg(long, env = "KGBENCH_WORKERS")]
        workers: Option<usize>,
    },
    /// List the published hyperparameter presets.
    Presets,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum ProtocolArg {
    Raw,
    Filtered,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum SidesArg {
    Tail,
    Both,
}

/// Parses `args` (including the program name) and runs the subcommand.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match dispatch(cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            1
        }
    }
}

fn dispatch(cmd: Command) -> Result<i32> {
    match cmd {
        Command::Build { full, config, out, seed } => {
            let mut cfg: BuildConfig = match config {
                Some(p) => read_json(p)?,
                None => BuildConfig::default(),
            };
            if let Some(s) = seed {
                cfg.seed = s;
            }
            let raw = read_triples_tsv(&full)?;
            let b = build_benchmark(&raw, &cfg)?;
            fs::create_dir_all(&out).map_err(|e| Error::io(&out, e))?;
            write_benchmark(&out, &b)?;
            let s = b.dataset.stats();
            info!(
                "wrote {}: {} entities, {} relations, {}/{}/{} triples",
                out.display(),
                s.num_entities,
                s.num_relations,
                s.num_train,
                s.num_dev,
                s.num_test
            );
            if !b.audit.passed() {
                eprintln!("split audit failed; see audit.json");
                return Ok(1);
            }
            Ok(0)
        }
        Command::Validate { schema, data, report } => {
            let file: SchemaFile = read_json(schema)?;
            let d = load_dataset(&data, &DatasetLayout::default())?;
            let resolved = file.resolve(&d)?;
            let mut r = check_taxonomy(&resolved.schema);
            r.merge(check_domain_range(&d, &resolved.schema)?);
            match report {
                Some(p) => write_json(p, &r)?,
                None => println!("{}", serde_json::to_string_pretty(&r).expect("serialisable")),
            }
            for v in &r.violations {
                eprintln!("{:?}: {}", v.rule, v.message);
            }
            Ok(if r.conforms() { 0 } else { 1 })
        }
        Command::Train {
            data,
            model,
            preset: dataset,
            config,
            out,
            loss_out,
            seed,
            workers,
        } => {
            let model: ModelKind = model.parse()?;
            let mut cfg = match dataset {
                Some(tag) => preset(model, tag.parse::<DatasetTag>()?)?,
                None => TrainConfig::defaults_for(model),
            };
            if let Some(p) = config {
                let file: TrainConfigFile = read_json(p)?;
                cfg.apply(&file)?;
            }
            if let Some(s) = seed {
                cfg.seed = s;
            }
            cfg.validate()?;
            let d = load_dataset(&data, &DatasetLayout::default())?;
            let outcome = with_workers(workers, || {
                train_with(&d, &cfg, |epoch, loss| info!("epoch {epoch}: loss {loss:.6}"))
            })??;
            write_checkpoint(&outcome.params, &out)?;
            if let Some(p) = loss_out {
                write_loss_csv(&p, &outcome.epoch_losses)?;
            }
            Ok(0)
        }
        Command::Eval {
            data,
            ckpt,
            protocol,
            sides,
            relation,
            hits,
            report,
            workers,
        } => {
            let d = load_dataset(&data, &DatasetLayout::default())?;
            let params = read_checkpoint(&ckpt)?;
            let mut cfg = EvalConfig::default().with_hits_at(hits)?;
            cfg.protocol = match protocol {
                ProtocolArg::Raw => Protocol::Raw,
                ProtocolArg::Filtered => Protocol::Filtered,
            };
            cfg.sides = match sides {
                SidesArg::Tail => Sides::TailOnly,
                SidesArg::Both => Sides::HeadAndTail,
            };
            if let Some(label) = relation {
                cfg.relation = Some(
                    d.vocabulary()
                        .relation_id(&label)
                        .ok_or(Error::UnknownLabel(label))?,
                );
            }
            let r = with_workers(workers, || evaluate(&d, &params, &cfg))??;
            match report {
                Some(p) => write_report(&r, p)?,
                None => println!(
                    "{}",
                    serde_json::to_string_pretty(&report_json(&r)?).expect("serialisable")
                ),
            }
            Ok(0)
        }
        Command::Presets => {
            print!("{}", presets_table());
            Ok(0)
        }
    }
}

fn with_workers<R: Send>(workers: Option<usize>, f: impl FnOnce() -> R + Send) -> Result<R> {
    match workers {
        None => Ok(f()),
        Some(0) => Err(Error::InvalidConfig("--workers must be at least 1".into())),
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| Error::InvalidConfig(format!("thread pool: {e}")))?;
            Ok(pool.install(f))
        }
    }
}

fn write_loss_csv(path: &Path, losses: &[f64]) -> Result<()> {
    let mut s = String::from("epoch,loss\n");
    for (i, l) in losses.iter().enumerate() {
        let _ = writeln!(s, "{i},{l}");
    }
    fs::write(path, s).map_err(|e| Error::io(path, e))
}

/// Tab-separated listing of every (dataset, model) preset.
pub fn presets_table() -> String {
    let mut s = String::from("dataset\tmodel\tbatching\tepochs\tlr\tdim\toptimizer\tloss\n");
    for (dataset, c) in all_presets() {
        let batching = match c.batching {
            crate::training::Batching::NumBatches(n) => format!("{n} batches"),
            crate::training::Batching::BatchSize(b) => format!("batch size {b}"),
        };
        let _ = writeln!(
            s,
            "{dataset}\t{}\t{batching}\t{}\t{}\t{}\t{:?}\t{}",
            c.model,
            c.epochs,
            c.learning_rate,
            c.entity_dim,
            c.optimizer,
            c.loss.tag()
        );
    }
    s
}
