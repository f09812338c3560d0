use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use seedlabel::cage::TrainConfig;
use seedlabel::config::FileConfig;
use seedlabel::data::{self, RngSeed};
use seedlabel::pipeline::{self, GridConfig, LabelConfig, SelectConfig, SyntheticSpec};
use seedlabel::select::{ObjectiveKind, DEFAULT_EPSILON};
use seedlabel::similarity::{self, Kernel};
use seedlabel::Error;

#[derive(Parser)]
#[command(
    name = "seedlabel",
    version,
    about = "Label a feature pool from a small, well-chosen set of expert exemplars"
)]
struct Cli {
    /// Key-value (TOML) configuration; flags override it.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a two-class Gaussian pool with ground truth.
    GenSynth {
        #[arg(long, default_value_t = 200)]
        n_per_class: usize,
        #[arg(long, default_value_t = 16)]
        dim: usize,
        /// Distance between the class means.
        #[arg(long, default_value_t = 6.0)]
        separation: f64,
        /// Noise standard deviation.
        #[arg(long, default_value_t = 1.0)]
        noise: f64,
        #[command(flatten)]
        knobs: Knobs,
    },
    /// Validate a feature file and cache its similarity matrix.
    Ingest {
        #[arg(long)]
        features: PathBuf,
        #[command(flatten)]
        knobs: Knobs,
    },
    /// Pick exemplars for annotation and write an annotation template.
    Select {
        #[arg(long)]
        features: PathBuf,
        /// Similarity cache written by `ingest`.
        #[arg(long)]
        similarity: Option<PathBuf>,
        #[command(flatten)]
        knobs: Knobs,
    },
    /// Train the label model from a filled template and label the pool.
    Label {
        #[arg(long)]
        features: PathBuf,
        /// Selection manifest written by `select`.
        #[arg(long)]
        selection: PathBuf,
        /// Filled `id,label` annotation template.
        #[arg(long)]
        labels: PathBuf,
        #[command(flatten)]
        knobs: Knobs,
    },
    /// Label a pool with a model written by `label`.
    Predict {
        #[arg(long)]
        features: PathBuf,
        /// Output directory of a previous `label` run.
        #[arg(long)]
        model: PathBuf,
        #[command(flatten)]
        knobs: Knobs,
    },
    /// Score predictions against ground truth.
    Evaluate {
        #[arg(long)]
        predictions: PathBuf,
        #[arg(long)]
        truth: PathBuf,
        #[command(flatten)]
        knobs: Knobs,
    },
    /// Accuracy over objectives x budgets x seeds.
    Grid {
        /// Comma-separated objectives.
        #[arg(long, value_delimiter = ',', default_value = "fl,logdet,random")]
        objectives: Vec<ObjectiveKind>,
        /// Comma-separated budgets.
        #[arg(long, value_delimiter = ',', default_value = "10,20,30,40")]
        budgets: Vec<usize>,
        #[arg(long, default_value_t = 5)]
        repeats: usize,
        /// Use this pool instead of synthetic data (requires --truth).
        #[arg(long, requires = "truth")]
        features: Option<PathBuf>,
        #[arg(long, requires = "features")]
        truth: Option<PathBuf>,
        #[arg(long, default_value_t = 200)]
        n_per_class: usize,
        #[arg(long, default_value_t = 16)]
        dim: usize,
        #[arg(long, default_value_t = 6.0)]
        separation: f64,
        #[arg(long, default_value_t = 1.0)]
        noise: f64,
        #[command(flatten)]
        knobs: Knobs,
    },
}

#[derive(Args, Default)]
struct Knobs {
    #[arg(long)]
    objective: Option<ObjectiveKind>,
    #[arg(long)]
    budget: Option<usize>,
    #[arg(long)]
    kernel: Option<Kernel>,
    /// Log-determinant diagonal regularizer.
    #[arg(long)]
    epsilon: Option<f64>,
    /// Raw similarity below which a labeling function abstains.
    #[arg(long, allow_hyphen_values = true)]
    abstain_threshold: Option<f64>,
    /// Quality guess shared by every labeling function.
    #[arg(long)]
    qc: Option<f64>,
    #[arg(long)]
    lr: Option<f64>,
    #[arg(long)]
    epochs: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
}

/// Flags merged over the config file over the defaults.
struct Settings {
    objective: ObjectiveKind,
    budget: Option<usize>,
    kernel: Kernel,
    epsilon: f64,
    threshold: f64,
    train: TrainConfig,
    seed: RngSeed,
    out: Option<PathBuf>,
}

impl Settings {
    fn resolve(knobs: Knobs, file: &FileConfig) -> Settings {
        let defaults = TrainConfig::default();
        let seed = RngSeed(knobs.seed.or(file.seed).unwrap_or(0));
        Settings {
            objective: knobs
                .objective
                .or(file.objective)
                .unwrap_or(ObjectiveKind::FacilityLocation),
            budget: knobs.budget.or(file.budget),
            kernel: knobs.kernel.or(file.kernel).unwrap_or_default(),
            epsilon: knobs.epsilon.or(file.epsilon).unwrap_or(DEFAULT_EPSILON),
            threshold: knobs
                .abstain_threshold
                .or(file.abstain_threshold)
                .unwrap_or(seedlabel::lf::NEVER_ABSTAIN),
            train: TrainConfig {
                learning_rate: knobs.lr.or(file.lr).unwrap_or(defaults.learning_rate),
                epochs: knobs.epochs.or(file.epochs).unwrap_or(defaults.epochs),
                qc_default: knobs.qc.or(file.qc).unwrap_or(defaults.qc_default),
                seed,
            },
            seed,
            out: knobs.out.or_else(|| file.out.clone()),
        }
    }

    fn out(&self) -> Result<&Path, Failure> {
        self.out
            .as_deref()
            .ok_or_else(|| Failure::Usage("--out is required (flag or config key `out`)".into()))
    }

    fn label_config(&self) -> LabelConfig {
        LabelConfig {
            kernel: self.kernel,
            abstain_threshold: self.threshold,
            train: self.train,
        }
    }
}

enum Failure {
    Usage(String),
    Run(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Run(e)
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Run(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn run(cli: Cli) -> Result<(), Failure> {
    let file = match &cli.config {
        Some(path) => FileConfig::load(path)?,
        None => FileConfig::default(),
    };
    match cli.command {
        Command::GenSynth {
            n_per_class,
            dim,
            separation,
            noise,
            knobs,
        } => {
            let s = Settings::resolve(knobs, &file);
            let spec = SyntheticSpec {
                n_per_class,
                dim,
                separation,
                noise,
                seed: s.seed,
            };
            let (f, t) = pipeline::run_gen_synthetic(&spec, s.out()?)?;
            println!("wrote {} and {}", f.display(), t.display());
        }
        Command::Ingest { features, knobs } => {
            let s = Settings::resolve(knobs, &file);
            let fm = data::load_features(&features)?;
            let sim = similarity::build_similarity_matrix(&fm, s.kernel)?;
            let out = s.out()?;
            std::fs::create_dir_all(out).map_err(|e| Error::Io {
                context: out.display().to_string(),
                source: e,
            })?;
            let path = out.join(pipeline::SIMILARITY_FILE);
            sim.save_cache(&path)?;
            println!("n={} d={} kernel={} -> {}", fm.n(), fm.d(), s.kernel, path.display());
        }
        Command::Select {
            features,
            similarity,
            knobs,
        } => {
            let s = Settings::resolve(knobs, &file);
            let budget = s
                .budget
                .ok_or_else(|| Failure::Usage("--budget is required (flag or config key `budget`)".into()))?;
            let cfg = SelectConfig {
                objective: s.objective,
                budget,
                kernel: s.kernel,
                epsilon: s.epsilon,
                seed: s.seed,
            };
            let m = pipeline::run_select(&features, similarity.as_deref(), &cfg, s.out()?)?;
            println!(
                "selected {} of {} ({}); objective {}",
                m.ids.len(),
                m.pool_size,
                m.objective,
                m.objective_trace.last().copied().unwrap_or(0.0)
            );
        }
        Command::Label {
            features,
            selection,
            labels,
            knobs,
        } => {
            let s = Settings::resolve(knobs, &file);
            let outcome = pipeline::run_label(&features, &selection, &labels, &s.label_config(), s.out()?)?;
            println!(
                "labeled {} instances with {} labeling functions over {} classes",
                outcome.predictions.ids.len(),
                outcome.lf_matrix.b(),
                outcome.label_names.len()
            );
        }
        Command::Predict { features, model, knobs } => {
            let s = Settings::resolve(knobs, &file);
            let preds = pipeline::run_predict(&features, &model, s.out()?)?;
            println!("predicted {} instances", preds.ids.len());
        }
        Command::Evaluate {
            predictions,
            truth,
            knobs,
        } => {
            let s = Settings::resolve(knobs, &file);
            let report_path = match &s.out {
                Some(dir) => {
                    std::fs::create_dir_all(dir).map_err(|e| Error::Io {
                        context: dir.display().to_string(),
                        source: e,
                    })?;
                    Some(dir.join("eval.json"))
                }
                None => None,
            };
            let r = pipeline::run_evaluate(&predictions, &truth, report_path.as_deref())?;
            println!("accuracy {} over {} instances", r.accuracy, r.m_eval);
        }
        Command::Grid {
            objectives,
            budgets,
            repeats,
            features,
            truth,
            n_per_class,
            dim,
            separation,
            noise,
            knobs,
        } => {
            let s = Settings::resolve(knobs, &file);
            let cfg = GridConfig {
                objectives,
                budgets,
                repeats,
                seed: s.seed,
                kernel: s.kernel,
                epsilon: s.epsilon,
                label: s.label_config(),
            };
            let result = match (features, truth) {
                (Some(fp), Some(tp)) => {
                    let fm = data::load_features(&fp)?;
                    let truth = data::read_label_rows(&tp)?;
                    pipeline::run_experiment_grid(&cfg, |_| Ok((fm.clone(), truth.clone())))?
                }
                _ => pipeline::run_experiment_grid(&cfg, |seed| {
                    pipeline::gen_synthetic(&SyntheticSpec {
                        n_per_class,
                        dim,
                        separation,
                        noise,
                        seed,
                    })
                })?,
            };
            pipeline::write_grid(&result, &cfg, s.out()?)?;
            for cell in &result.cells {
                println!(
                    "{:>7} b={:<4} median accuracy {:.4}",
                    cell.objective, cell.budget, cell.median_accuracy
                );
            }
        }
    }
    Ok(())
}
