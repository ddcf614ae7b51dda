//! `idcs` command line interface.
//!
//! Exit codes: 0 success, 1 runtime failure (I/O, numerical, infeasible
//! data), 2 usage or configuration error.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use idcs::data::{load_csv, Schema};
use idcs::explain::{lime_explain, shap_permutation, Method};
use idcs::harness::{
    self, parse_model_name, run_performance_bench, run_stability_experiment, ExperimentConfig,
};
use idcs::models::{
    self, BoostParams, CostBinding, Family, ForestParams, HyperParams, LogitParams, ModelSpec,
    NetParams, Penalty,
};
use idcs::{rng, Error};

#[derive(Parser)]
#[command(name = "idcs", version, about = "Instance-dependent cost-sensitive credit scoring")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct DataArgs {
    /// CSV data file.
    #[arg(long)]
    data: PathBuf,
    /// TOML schema naming the label, amount and categorical columns.
    #[arg(long)]
    schema: PathBuf,
}

#[derive(Args)]
struct ConfigArgs {
    /// Experiment configuration file (TOML); defaults apply when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Dotted-path overrides, e.g. `--override stability.iterations=5`.
    #[arg(long = "override", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
}

#[derive(Subcommand)]
enum Command {
    /// Check that a dataset loads and satisfies the input invariants.
    Validate {
        #[command(flatten)]
        data: DataArgs,
    },
    /// Nested cross-validation performance benchmark on one dataset.
    Bench {
        #[command(flatten)]
        data: DataArgs,
        #[command(flatten)]
        config: ConfigArgs,
        /// Dataset name used in reports and output file names.
        #[arg(long)]
        name: String,
        /// Output directory.
        #[arg(long)]
        out: PathBuf,
    },
    /// Explanation stability experiment for one model on one dataset.
    Stability {
        #[command(flatten)]
        data: DataArgs,
        #[command(flatten)]
        config: ConfigArgs,
        #[arg(long)]
        name: String,
        /// Model to study, e.g. `cslogit`.
        #[arg(long)]
        model: String,
        #[arg(long)]
        out: PathBuf,
        /// Reuse completed per-rate checkpoints from a previous run.
        #[arg(long)]
        resume: bool,
    },
    /// Train a model with default hyperparameters and explain instances.
    Explain {
        #[command(flatten)]
        data: DataArgs,
        #[arg(long)]
        model: String,
        /// Explanation method.
        #[arg(long, default_value = "shap")]
        method: String,
        /// Comma-separated row indices to explain.
        #[arg(long, default_value = "0")]
        instances: String,
        /// Master seed.
        #[arg(long, default_value_t = 42)]
        seed: u64,
        /// Output JSON file.
        #[arg(long)]
        out: PathBuf,
    },
    /// Combine benchmark JSON outputs into a cross-dataset ranking report.
    Report {
        /// Two or more `bench_<name>.json` files.
        #[arg(long, required = true, num_args = 2..)]
        bench: Vec<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
}

fn default_hyper(family: Family) -> HyperParams {
    match family {
        Family::Logit => {
            HyperParams::Logit(LogitParams { penalty: Penalty::L2, c: 1e-2, ..Default::default() })
        }
        Family::Boost => HyperParams::Boost(BoostParams {
            learning_rate: 0.3,
            min_child_weight: 0.0,
            max_depth: 3,
            colsample_bytree: 1.0,
            gamma: 0.0,
            ..Default::default()
        }),
        Family::Forest => HyperParams::Forest(ForestParams::default()),
        Family::Net => HyperParams::Net(NetParams {
            hidden: 64,
            learning_rate: 0.005,
            ..Default::default()
        }),
    }
}

fn run(cli: Cli) -> idcs::Result<()> {
    match cli.command {
        Command::Validate { data } => {
            let schema = Schema::from_file(&data.schema)?;
            let ds = load_csv(&data.data, &schema)?;
            ds.validate()?;
            let summary = ds.summary();
            println!("{}", serde_json::to_string_pretty(&summary).unwrap());
            Ok(())
        }
        Command::Bench { data, config, name, out } => {
            let cfg = load_config(&config)?;
            let schema = Schema::from_file(&data.schema)?;
            let ds = load_csv(&data.data, &schema)?;
            std::fs::create_dir_all(&out)?;
            let report = run_performance_bench(&name, &ds, &cfg)?;
            let csv_path = out.join(format!("bench_{name}.csv"));
            harness::write_bench_csv(&report, &csv_path)?;
            let json_path = out.join(format!("bench_{name}.json"));
            std::fs::write(&json_path, serde_json::to_string_pretty(&report).unwrap())?;
            let manifest = out.join(format!("manifest_bench_{name}.json"));
            harness::write_manifest(&cfg, &[&csv_path, &json_path], &manifest)?;
            println!("wrote {}", csv_path.display());
            Ok(())
        }
        Command::Stability { data, config, name, model, out, resume } => {
            let cfg = load_config(&config)?;
            parse_model_name(&model)?;
            let schema = Schema::from_file(&data.schema)?;
            let ds = load_csv(&data.data, &schema)?;
            std::fs::create_dir_all(&out)?;
            let ckpt = out.join("checkpoints");
            if !resume && ckpt.exists() {
                std::fs::remove_dir_all(&ckpt)?;
            }
            let report = run_stability_experiment(&name, &ds, &model, &cfg, Some(&ckpt))?;
            let sum_path = out.join(format!("stability_{name}_{model}.csv"));
            harness::write_stability_csv(&report, &sum_path)?;
            let inst_path = out.join(format!("stability_{name}_{model}_instances.csv"));
            harness::write_instance_csv(&report, &inst_path)?;
            let manifest = out.join(format!("manifest_stability_{name}_{model}.json"));
            harness::write_manifest(&cfg, &[&sum_path, &inst_path], &manifest)?;
            println!("wrote {}", sum_path.display());
            Ok(())
        }
        Command::Explain { data, model, method, instances, seed, out } => {
            let method = match method.as_str() {
                "shap" => Method::Shap,
                "lime" => Method::Lime,
                other => return Err(Error::Config(format!("unknown method '{other}'"))),
            };
            let idx: Vec<usize> = instances
                .split(',')
                .map(|t| {
                    t.trim()
                        .parse::<usize>()
                        .map_err(|_| Error::Config(format!("bad instance index '{t}'")))
                })
                .collect::<idcs::Result<_>>()?;
            let (family, loss) = parse_model_name(&model)?;
            let schema = Schema::from_file(&data.schema)?;
            let ds = load_csv(&data.data, &schema)?;
            let p = harness::prepare(&ds, &[], idcs::costs::DEFAULT_LGD, None)?;
            for &i in &idx {
                if i >= p.train.n_rows() {
                    return Err(Error::Config(format!("instance {i} out of range")));
                }
            }
            let spec = ModelSpec { loss, hyper: default_hyper(family), seed };
            let binding = CostBinding { set: &p.train_costs, pi1: p.params.pi1 };
            let trained = models::fit(&spec, p.train.matrix(), &p.train.y, Some(binding))?;

            let mut results = Vec::new();
            match method {
                Method::Shap => {
                    let shap_cfg = idcs::explain::ShapConfig {
                        seed: rng::derive(seed, &["explain"]),
                        ..Default::default()
                    };
                    let bg_rows: Vec<usize> =
                        (0..p.train.n_rows().min(shap_cfg.background_size)).collect();
                    let background =
                        p.train.matrix().select(ndarray::Axis(0), &bg_rows);
                    for &i in &idx {
                        results.push(shap_permutation(
                            &trained,
                            background.view(),
                            p.train.matrix().row(i),
                            i,
                            &shap_cfg,
                        )?);
                    }
                }
                Method::Lime => {
                    let summary = idcs::data::TrainSummary::fit(&p.train);
                    let lime_cfg = idcs::explain::LimeConfig {
                        seed: rng::derive(seed, &["explain"]),
                        ..Default::default()
                    };
                    for &i in &idx {
                        results.push(lime_explain(
                            &trained,
                            &summary,
                            p.train.matrix().row(i),
                            i,
                            &lime_cfg,
                        )?);
                    }
                }
            }
            std::fs::write(&out, serde_json::to_string_pretty(&results).unwrap())?;
            println!("wrote {}", out.display());
            Ok(())
        }
        Command::Report { bench, out } => {
            let mut reports = Vec::new();
            for path in &bench {
                let text = std::fs::read_to_string(path)?;
                let r: idcs::harness::BenchReport = serde_json::from_str(&text)
                    .map_err(|e| Error::Validation(format!("{}: {e}", path.display())))?;
                reports.push(r);
            }
            std::fs::create_dir_all(&out)?;
            let rank_path = out.join("ranks.csv");
            harness::write_rank_csv(&reports, &rank_path)?;
            println!("wrote {}", rank_path.display());
            Ok(())
        }
    }
}

fn load_config(args: &ConfigArgs) -> idcs::Result<ExperimentConfig> {
    let cfg = ExperimentConfig::load(args.config.as_deref(), &args.overrides)?;
    cfg.validate()?;
    Ok(cfg)
}

fn exit_code_for(e: &Error) -> u8 {
    match e {
        Error::Config(_) | Error::Schema(_) => 2,
        _ => 1,
    }
}

fn main() -> ExitCode {
    env_logger::init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code_for(&e))
        }
    }
}
