//! Command-line entry point.
//!
//! Exit codes: 0 success, 1 usage error, 2 data error, 3 numeric failure.

use clap::{Parser, Subcommand, ValueEnum};
use scanlab::error::ModelError;
use scanlab::eval::{
    evaluate_checkpoint, run_experiment, sweep_csv, AggregateReport, ExperimentPlan, PlanScheme,
};
use scanlab::linking::{
    build_deductive, build_inductive, build_replacement_test, inventory_from_toml,
    inventory_to_toml, scan_inventory, subsample_per_variant, AugmentationBundle, Level, Scheme,
};
use scanlab::manifest::RunManifest;
use scanlab::model::{save_checkpoint, ModelConfig};
use scanlab::sqlgen::{adv_config, derive_dataset, geo_config, read_corpus, variant_sampler};
use scanlab::token::{read_samples, write_samples, Sample};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "scanlab", about = "Compositional datasets, semantic links, and a small attention seq2seq", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum SchemeArg {
    Il,
    Dl,
}

#[derive(Clone, Copy, ValueEnum)]
enum LevelArg {
    Standard,
    Difficult,
    Challenging,
}

#[derive(Clone, Copy, ValueEnum)]
enum DatasetArg {
    Geo,
    Adv,
}

impl From<LevelArg> for Level {
    fn from(l: LevelArg) -> Level {
        match l {
            LevelArg::Standard => Level::Standard,
            LevelArg::Difficult => Level::Difficult,
            LevelArg::Challenging => Level::Challenging,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Regenerate the full command corpus from the grammar.
    GenScan {
        out: PathBuf,
    },
    /// Derive a source/target dataset and concept inventory from an
    /// annotated query corpus.
    DeriveSql {
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long, value_enum)]
        dataset: DatasetArg,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        inventory_out: PathBuf,
        /// Cap co-hyponym variants per primitive (seeded subsample).
        #[arg(long)]
        variants_per_primitive: Option<usize>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Build an augmented training set and its replacement test set.
    Augment {
        #[arg(long)]
        base: PathBuf,
        #[arg(long, value_enum)]
        scheme: SchemeArg,
        #[arg(long, value_enum, default_value = "standard")]
        level: LevelArg,
        #[arg(long, default_value_t = 1)]
        primitives: usize,
        #[arg(long, default_value_t = 4)]
        variants: usize,
        /// Concept inventory TOML; overrides --primitives/--variants.
        #[arg(long)]
        inventory: Option<PathBuf>,
        /// Keep at most this many training samples per variant.
        #[arg(long)]
        samples_per_variant: Option<usize>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out_train: PathBuf,
        #[arg(long)]
        out_test: PathBuf,
    },
    /// Build only the replacement test set for an inventory.
    TestSet {
        #[arg(long)]
        base: PathBuf,
        #[arg(long, default_value_t = 1)]
        primitives: usize,
        #[arg(long, default_value_t = 4)]
        variants: usize,
        #[arg(long)]
        inventory: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Train a model on a TSV dataset and save a checkpoint.
    Train {
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        checkpoint: PathBuf,
        /// Model configuration TOML; defaults to the desk-scale setup.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        /// Optional per-epoch metrics CSV.
        #[arg(long)]
        metrics: Option<PathBuf>,
    },
    /// Evaluate a checkpoint on a TSV dataset with greedy decoding.
    Eval {
        #[arg(long)]
        checkpoint: PathBuf,
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        max_len: Option<usize>,
        /// Optional JSON report path.
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Run a multi-seed experiment from a plan.
    Run {
        #[arg(long)]
        plan: PathBuf,
        #[arg(long)]
        train: PathBuf,
        #[arg(long)]
        eval: PathBuf,
        #[arg(long)]
        report: PathBuf,
    },
    /// Run a grid of plans and consolidate the reports into one CSV.
    Sweep {
        #[arg(long, required = true, num_args = 1..)]
        plan: Vec<PathBuf>,
        #[arg(long)]
        train: PathBuf,
        #[arg(long)]
        eval: PathBuf,
        #[arg(long)]
        out_dir: PathBuf,
        /// Number of plans to run concurrently.
        #[arg(long, default_value_t = 1)]
        jobs: usize,
    },
}

enum AppError {
    Usage(String),
    Data(String),
    Numeric(String),
}

impl AppError {
    fn code(&self) -> u8 {
        match self {
            AppError::Usage(_) => 1,
            AppError::Data(_) => 2,
            AppError::Numeric(_) => 3,
        }
    }
    fn message(&self) -> &str {
        match self {
            AppError::Usage(m) | AppError::Data(m) | AppError::Numeric(m) => m,
        }
    }
}

fn data_err(e: impl std::fmt::Display) -> AppError {
    AppError::Data(e.to_string())
}

fn model_err(e: ModelError) -> AppError {
    match e {
        ModelError::NonFiniteLoss { .. } => AppError::Numeric(e.to_string()),
        ModelError::InvalidConfig(_) => AppError::Usage(e.to_string()),
        other => AppError::Data(other.to_string()),
    }
}

fn progress(msg: &str) {
    eprintln!("{msg}");
}

fn load_inventory(
    inventory: &Option<PathBuf>,
    primitives: usize,
    variants: usize,
) -> Result<Vec<scanlab::linking::ConceptEntry>, AppError> {
    match inventory {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(data_err)?;
            inventory_from_toml(&text).map_err(data_err)
        }
        None => {
            if !(1..=4).contains(&primitives) {
                return Err(AppError::Usage(format!(
                    "--primitives must be 1..=4, got {primitives}"
                )));
            }
            if variants == 0 {
                return Err(AppError::Usage("--variants must be positive".into()));
            }
            Ok(scan_inventory(primitives, variants))
        }
    }
}

fn write_bundle(
    bundle: &AugmentationBundle,
    out_train: &Path,
    out_test: &Path,
    command: &str,
    seed: u64,
    base: &Path,
) -> Result<(), AppError> {
    write_samples(out_train, &bundle.train).map_err(data_err)?;
    write_samples(out_test, &bundle.test).map_err(data_err)?;
    let config = toml::to_string_pretty(&bundle.meta).map_err(data_err)?;
    let mut manifest = RunManifest::new(command, vec![seed], config);
    manifest.add_input(base).map_err(data_err)?;
    manifest.add_output(out_train).map_err(data_err)?;
    manifest.add_output(out_test).map_err(data_err)?;
    manifest.write_beside(out_train).map_err(data_err)?;
    progress(&format!(
        "wrote {} train and {} test samples",
        bundle.train.len(),
        bundle.test.len()
    ));
    Ok(())
}

fn run_command(cmd: Command) -> Result<(), AppError> {
    match cmd {
        Command::GenScan { out } => {
            let samples = scanlab::scan::enumerate_commands();
            write_samples(&out, &samples).map_err(data_err)?;
            let mut manifest = RunManifest::new("gen-scan", vec![], String::new());
            manifest.add_output(&out).map_err(data_err)?;
            manifest.write_beside(&out).map_err(data_err)?;
            progress(&format!("wrote {} command pairs to {}", samples.len(), out.display()));
            Ok(())
        }
        Command::DeriveSql {
            corpus,
            dataset,
            out,
            inventory_out,
            variants_per_primitive,
            seed,
        } => {
            let records = read_corpus(&corpus).map_err(data_err)?;
            let cfg = match dataset {
                DatasetArg::Geo => geo_config(),
                DatasetArg::Adv => adv_config(),
            };
            let (samples, mut inventory) = derive_dataset(&records, &cfg).map_err(data_err)?;
            if let Some(k) = variants_per_primitive {
                inventory = variant_sampler(&inventory, k, seed);
            }
            write_samples(&out, &samples).map_err(data_err)?;
            std::fs::write(&inventory_out, inventory_to_toml(&inventory)).map_err(data_err)?;
            let mut manifest = RunManifest::new("derive-sql", vec![seed], String::new());
            manifest.add_input(&corpus).map_err(data_err)?;
            manifest.add_output(&out).map_err(data_err)?;
            manifest.add_output(&inventory_out).map_err(data_err)?;
            manifest.write_beside(&out).map_err(data_err)?;
            progress(&format!(
                "derived {} samples, {} concepts",
                samples.len(),
                inventory.len()
            ));
            Ok(())
        }
        Command::Augment {
            base,
            scheme,
            level,
            primitives,
            variants,
            inventory,
            samples_per_variant,
            seed,
            out_train,
            out_test,
        } => {
            let base_set = read_samples(&base).map_err(data_err)?;
            let inv = load_inventory(&inventory, primitives, variants)?;
            let mut bundle = match scheme {
                SchemeArg::Il => build_inductive(&base_set, &inv, level.into()),
                SchemeArg::Dl => build_deductive(&base_set, &inv, level.into()),
            }
            .map_err(data_err)?;
            if let Some(k) = samples_per_variant {
                bundle.train =
                    subsample_per_variant(&bundle.train, &inv, k, seed).map_err(data_err)?;
            }
            let name = match bundle.meta.scheme {
                Scheme::Il => "augment-il",
                Scheme::Dl => "augment-dl",
            };
            write_bundle(&bundle, &out_train, &out_test, name, seed, &base)
        }
        Command::TestSet {
            base,
            primitives,
            variants,
            inventory,
            out,
        } => {
            let base_set = read_samples(&base).map_err(data_err)?;
            let inv = load_inventory(&inventory, primitives, variants)?;
            let test = build_replacement_test(&base_set, &inv);
            write_samples(&out, &test).map_err(data_err)?;
            let mut manifest = RunManifest::new("test-set", vec![], String::new());
            manifest.add_input(&base).map_err(data_err)?;
            manifest.add_output(&out).map_err(data_err)?;
            manifest.write_beside(&out).map_err(data_err)?;
            progress(&format!("wrote {} replacement-test samples", test.len()));
            Ok(())
        }
        Command::Train {
            data,
            checkpoint,
            config,
            seed,
            metrics,
        } => {
            let set = read_samples(&data).map_err(data_err)?;
            if set.is_empty() {
                return Err(AppError::Data("training set is empty".into()));
            }
            let mut cfg = match &config {
                Some(path) => {
                    let text = std::fs::read_to_string(path).map_err(data_err)?;
                    toml::from_str::<ModelConfig>(&text)
                        .map_err(|e| AppError::Usage(e.to_string()))?
                }
                None => ModelConfig::desk_default(),
            };
            if let Some(s) = seed {
                cfg.seed = s;
            }
            cfg.validate().map_err(model_err)?;
            let mut trainer =
                scanlab::model::Trainer::<f32>::new(cfg.clone(), &set).map_err(model_err)?;
            let mut rows = String::from("epoch,seed,loss,token_acc,seq_acc\n");
            let history = trainer
                .fit(&set, |r| {
                    progress(&format!(
                        "epoch {:>3} loss {:.4} token_acc {:.4}",
                        r.epoch, r.loss, r.token_acc
                    ));
                })
                .map_err(model_err)?;
            for r in &history {
                rows.push_str(&format!(
                    "{},{},{:.6},{:.4},{:.4}\n",
                    r.epoch, r.seed, r.loss, r.token_acc, r.seq_acc
                ));
            }
            if let Some(path) = &metrics {
                std::fs::write(path, &rows).map_err(data_err)?;
            }
            save_checkpoint(&checkpoint, &cfg, &trainer.params, &trainer.src_vocab, &trainer.tgt_vocab)
                .map_err(model_err)?;
            let config_text = toml::to_string_pretty(&cfg).map_err(data_err)?;
            let mut manifest = RunManifest::new("train", vec![cfg.seed], config_text);
            manifest.add_input(&data).map_err(data_err)?;
            manifest.add_output(&checkpoint).map_err(data_err)?;
            manifest.write_beside(&checkpoint).map_err(data_err)?;
            progress(&format!("saved checkpoint to {}", checkpoint.display()));
            Ok(())
        }
        Command::Eval {
            checkpoint,
            data,
            max_len,
            report,
        } => {
            let set = read_samples(&data).map_err(data_err)?;
            let result = evaluate_checkpoint::<f32>(&checkpoint, &set, max_len).map_err(model_err)?;
            let json = serde_json::to_string_pretty(&result).map_err(data_err)?;
            println!("{json}");
            if let Some(path) = &report {
                std::fs::write(path, json + "\n").map_err(data_err)?;
            }
            Ok(())
        }
        Command::Run {
            plan,
            train: train_path,
            eval: eval_path,
            report,
        } => {
            let rep = run_plan(&plan, &train_path, &eval_path)?;
            let json = serde_json::to_string_pretty(&rep).map_err(data_err)?;
            std::fs::write(&report, json + "\n").map_err(data_err)?;
            let config_text = toml::to_string_pretty(&rep.plan).map_err(data_err)?;
            let mut manifest = RunManifest::new("run", rep.plan.seeds.clone(), config_text);
            manifest.add_input(&train_path).map_err(data_err)?;
            manifest.add_input(&eval_path).map_err(data_err)?;
            manifest.add_output(&report).map_err(data_err)?;
            manifest.write_beside(&report).map_err(data_err)?;
            progress(&format!(
                "token_acc {:.4}±{:.4} seq_acc {:.4}±{:.4}",
                rep.token_acc_mean, rep.token_acc_std, rep.seq_acc_mean, rep.seq_acc_std
            ));
            Ok(())
        }
        Command::Sweep {
            plan,
            train: train_path,
            eval: eval_path,
            out_dir,
            jobs,
        } => {
            std::fs::create_dir_all(&out_dir).map_err(data_err)?;
            let jobs = jobs.max(1);
            let mut results: Vec<Result<AggregateReport, AppError>> = Vec::new();
            for chunk in plan.chunks(jobs) {
                let chunk_results = std::thread::scope(|scope| {
                    let handles: Vec<_> = chunk
                        .iter()
                        .map(|path| {
                            let (t, e) = (&train_path, &eval_path);
                            scope.spawn(move || {
                                progress(&format!("plan {}", path.display()));
                                run_plan(path, t, e)
                            })
                        })
                        .collect();
                    handles
                        .into_iter()
                        .map(|h| h.join().expect("plan worker panicked"))
                        .collect::<Vec<_>>()
                });
                results.extend(chunk_results);
            }
            let mut reports = Vec::new();
            let mut failures = Vec::new();
            for (path, result) in plan.iter().zip(results) {
                match result {
                    Ok(rep) => {
                        let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or("plan");
                        let out = out_dir.join(format!("{stem}.report.json"));
                        let json = serde_json::to_string_pretty(&rep).map_err(data_err)?;
                        std::fs::write(&out, json + "\n").map_err(data_err)?;
                        reports.push(rep);
                    }
                    Err(e) => failures.push(format!("{}: {}", path.display(), e.message())),
                }
            }
            if !failures.is_empty() {
                std::fs::write(out_dir.join("failed_plans.txt"), failures.join("\n") + "\n")
                    .map_err(data_err)?;
            }
            let csv_path = out_dir.join("sweep.csv");
            std::fs::write(&csv_path, sweep_csv(&reports)).map_err(data_err)?;
            let mut manifest = RunManifest::new("sweep", vec![], String::new());
            manifest.add_input(&train_path).map_err(data_err)?;
            manifest.add_input(&eval_path).map_err(data_err)?;
            manifest.add_output(&csv_path).map_err(data_err)?;
            manifest.write_beside(&csv_path).map_err(data_err)?;
            progress(&format!("wrote {}", csv_path.display()));
            if !failures.is_empty() {
                return Err(AppError::Data(format!(
                    "{} plan(s) failed; see failed_plans.txt",
                    failures.len()
                )));
            }
            Ok(())
        }
    }
}

fn run_plan(
    plan_path: &Path,
    train_path: &Path,
    eval_path: &Path,
) -> Result<AggregateReport, AppError> {
    let text = std::fs::read_to_string(plan_path).map_err(data_err)?;
    let plan: ExperimentPlan =
        toml::from_str(&text).map_err(|e| AppError::Usage(e.to_string()))?;
    plan.model.validate().map_err(model_err)?;
    let train_set: Vec<Sample> = read_samples(train_path).map_err(data_err)?;
    let eval_set: Vec<Sample> = read_samples(eval_path).map_err(data_err)?;
    if train_set.is_empty() || eval_set.is_empty() {
        return Err(AppError::Data("empty train or eval set".into()));
    }
    let _ = PlanScheme::None; // keeps the variant set referenced for plans
    run_experiment(&plan, &train_set, &eval_set, progress).map_err(model_err)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // clap prints help/version on stdout with a zero exit.
            if e.use_stderr() {
                eprintln!("{e}");
                return ExitCode::from(1);
            }
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
    };
    match run_command(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", e.message());
            ExitCode::from(e.code())
        }
    }
}
