//! Command-line surface of the meshqoe toolkit.
//!
//! Exit status: 0 on success, 1 on usage/validation errors, 2 when an
//! allocation budget is infeasible.

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use clap::{Parser, Subcommand, ValueEnum};

use meshqoe::allocator::{
    exhaustive_oracle, solve_bb, solve_equal, solve_greedy_ordered, AllocationInstance,
    AllocationResult, GreedyOrder, Method,
};
use meshqoe::bench::{
    default_bench_model, run_bench, run_bench_parallel, write_report_csv, write_runs_csv,
    BenchConfig, BenchReport,
};
use meshqoe::dataset::{
    builtin_lod_table_with_si, generate_synthetic, load_dataset, save_dataset, DatasetFormat,
    LodLevel,
};
use meshqoe::features::{frame_si, spatial_information, FeatureVector, GrayImage};
use meshqoe::forest::{train_forest, train_forest_parallel, Forest, TrainConfig};
use meshqoe::geometry::{chamfer, hausdorff, rmse_points, PointSet};
use meshqoe::stats::{evaluate, evaluate_parallel, EvalProtocol, EvalReport, ModelKind};
use meshqoe::Error;

#[derive(Parser)]
#[command(
    name = "meshqoe",
    about = "QoE prediction and budgeted LoD selection for dynamic 3D meshes",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ModelArg {
    Forest,
    Linear,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum GreedyOrderArg {
    /// Visit meshes in instance order.
    Instance,
    /// Visit meshes by decreasing QoE gain per face.
    Efficiency,
}

#[derive(Parser)]
struct ForestArgs {
    /// Number of trees in the ensemble.
    #[arg(long, default_value_t = 100)]
    trees: usize,
    /// Features drawn as split candidates per node (1..=5).
    #[arg(long, default_value_t = 2)]
    mtry: usize,
    /// Train each tree on the full dataset instead of a bootstrap sample.
    #[arg(long)]
    no_bootstrap: bool,
    #[arg(long, default_value_t = 1)]
    min_samples_leaf: usize,
    /// Depth cap; omit to grow trees fully.
    #[arg(long)]
    max_depth: Option<usize>,
}

impl ForestArgs {
    fn config(&self, seed: u64) -> TrainConfig {
        TrainConfig {
            n_trees: self.trees,
            m_try: self.mtry,
            bootstrap: !self.no_bootstrap,
            min_samples_leaf: self.min_samples_leaf,
            max_depth: self.max_depth,
            seed,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Spatial information of grayscale frames (binary PGM, `P5`).
    ///
    /// SI is the population standard deviation of a frame's interior Sobel
    /// magnitudes; the reported value is the maximum over frames unless
    /// --per-frame is given.
    Si {
        /// PGM frame files.
        #[arg(required = true)]
        frames: Vec<PathBuf>,
        /// Print one SI value per frame instead of the maximum.
        #[arg(long)]
        per_frame: bool,
    },
    /// Generate a synthetic-MOS dataset CSV over the built-in meshes.
    GenData {
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 0.2)]
        noise_sigma: f64,
        /// Viewing distances in meters.
        #[arg(long, value_delimiter = ',', default_values_t = vec![4.0, 8.0, 12.0, 16.0, 20.0])]
        distances: Vec<f64>,
    },
    /// Train a forest on a dataset CSV and write the model JSON.
    Train {
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[command(flatten)]
        forest: ForestArgs,
        /// Train trees across threads (same model as serial).
        #[arg(long)]
        parallel: bool,
    },
    /// Repeated-holdout evaluation of a model on a dataset CSV.
    Eval {
        #[arg(long)]
        data: PathBuf,
        #[arg(long, value_enum, default_value = "forest")]
        model: ModelArg,
        #[arg(long, default_value_t = 10)]
        runs: usize,
        #[arg(long, default_value_t = 0.8)]
        split: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[command(flatten)]
        forest: ForestArgs,
        /// Also write the report as JSON.
        #[arg(long)]
        json: Option<PathBuf>,
        /// Evaluate runs across threads (same report as serial).
        #[arg(long)]
        parallel: bool,
    },
    /// Predict the MOS of one feature vector with a trained model.
    Predict {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        faces: u64,
        /// Viewing distance in meters.
        #[arg(long)]
        distance: f64,
        /// LoD index 0..=8 (0 = original).
        #[arg(long)]
        lod_index: u8,
        #[arg(long)]
        si_geo: f64,
        #[arg(long)]
        si_col: f64,
    },
    /// Solve an allocation instance JSON and print the result JSON.
    Allocate {
        #[arg(long)]
        instance: PathBuf,
        #[arg(long, default_value = "bb")]
        method: String,
        /// Also write the result JSON to a file.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Mesh visiting order for the greedy method.
        #[arg(long, value_enum, default_value = "instance")]
        greedy_order: GreedyOrderArg,
    },
    /// Benchmark solvers over budgets on the built-in meshes.
    Bench {
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 10)]
        runs: usize,
        /// Budget sweep `start:end:step` (inclusive).
        #[arg(long, default_value = "25000:300000:25000")]
        budgets: String,
        /// Comma-separated subset of bb,greedy,equal.
        #[arg(long, default_value = "bb,greedy,equal")]
        methods: String,
        /// Trained model JSON; defaults to a forest fitted on the noise-free
        /// synthetic dataset.
        #[arg(long)]
        model: Option<PathBuf>,
        /// Write the aggregated CSV here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Also write the full report as JSON.
        #[arg(long)]
        json: Option<PathBuf>,
        /// Also write the per-run trace CSV.
        #[arg(long)]
        dump_runs: Option<PathBuf>,
        /// Execute runs across threads (same report as serial).
        #[arg(long)]
        parallel: bool,
    },
    /// Hausdorff, RMSE and Chamfer distances between two XYZ point sets.
    Metrics {
        /// Whitespace-separated `x y z` text file.
        a: PathBuf,
        b: PathBuf,
    },
}

/// Parses and runs; returns the process exit status.
pub fn cli_main<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = match e.kind() {
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            return code;
        }
    };
    match run(cli.command) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                Error::Infeasible { .. } => 2,
                _ => 1,
            }
        }
    }
}

fn run(command: Command) -> Result<(), Error> {
    match command {
        Command::Si { frames, per_frame } => {
            let mut images = Vec::with_capacity(frames.len());
            for path in &frames {
                let file = fs::File::open(path)?;
                images.push(GrayImage::from_pgm(file));
            }
            let images: Result<Vec<GrayImage>, Error> = images.into_iter().collect();
            let images = images?;
            if per_frame {
                for (path, img) in frames.iter().zip(&images) {
                    println!("{} {:.6}", path.display(), frame_si(img)?);
                }
            } else {
                println!("{:.6}", spatial_information(&images)?);
            }
            Ok(())
        }
        Command::GenData {
            out,
            seed,
            noise_sigma,
            distances,
        } => {
            let meshes = builtin_lod_table_with_si();
            let dataset = generate_synthetic(&meshes, &distances, seed, noise_sigma)?;
            save_dataset(&dataset, &out, DatasetFormat::Csv)?;
            eprintln!("wrote {} records to {}", dataset.len(), out.display());
            Ok(())
        }
        Command::Train {
            data,
            out,
            seed,
            forest,
            parallel,
        } => {
            let dataset = load_dataset(&data, DatasetFormat::Csv)?;
            let samples = meshqoe::features::dataset_samples(&dataset);
            let config = forest.config(seed);
            let model = if parallel {
                train_forest_parallel(&samples, &config)?
            } else {
                train_forest(&samples, &config)?
            };
            model.save(&out)?;
            eprintln!(
                "trained {} trees on {} samples -> {}",
                model.n_trees(),
                samples.len(),
                out.display()
            );
            print_importances(&model);
            Ok(())
        }
        Command::Eval {
            data,
            model,
            runs,
            split,
            seed,
            forest,
            json,
            parallel,
        } => {
            let dataset = load_dataset(&data, DatasetFormat::Csv)?;
            let kind = match model {
                ModelArg::Forest => ModelKind::Forest,
                ModelArg::Linear => ModelKind::Linear,
            };
            let protocol = EvalProtocol {
                n_runs: runs,
                split,
                seed,
                eval_on_train: false,
            };
            let config = forest.config(seed);
            let report = if parallel {
                evaluate_parallel(&dataset, kind, &config, &protocol)?
            } else {
                evaluate(&dataset, kind, &config, &protocol)?
            };
            print_eval_table(&report);
            if let Some(path) = json {
                fs::write(&path, serde_json::to_string_pretty(&report)?)?;
            }
            Ok(())
        }
        Command::Predict {
            model,
            faces,
            distance,
            lod_index,
            si_geo,
            si_col,
        } => {
            let forest = Forest::load(&model)?;
            let lod = LodLevel::new(lod_index)?;
            let x = FeatureVector {
                faces,
                distance_m: distance,
                lod_fraction: lod.fraction_removed(),
                si_geo,
                si_col,
            };
            println!("{}", forest.predict(&x));
            Ok(())
        }
        Command::Allocate {
            instance,
            method,
            out,
            greedy_order,
        } => {
            let text = fs::read_to_string(&instance)?;
            let instance: AllocationInstance = serde_json::from_str(&text)?;
            instance.validate()?;
            let method = Method::from_str(&method)?;
            let result: AllocationResult = match method {
                Method::Bb => solve_bb(&instance)?,
                Method::Greedy => {
                    let order = match greedy_order {
                        GreedyOrderArg::Instance => GreedyOrder::InstanceOrder,
                        GreedyOrderArg::Efficiency => GreedyOrder::Efficiency,
                    };
                    solve_greedy_ordered(&instance, order)?
                }
                Method::Equal => solve_equal(&instance)?,
                Method::Exhaustive => exhaustive_oracle(&instance)?,
            };
            let json = serde_json::to_string_pretty(&result)?;
            println!("{json}");
            if let Some(path) = out {
                fs::write(&path, &json)?;
            }
            Ok(())
        }
        Command::Bench {
            seed,
            runs,
            budgets,
            methods,
            model,
            out,
            json,
            dump_runs,
            parallel,
        } => {
            let budgets = parse_budgets(&budgets)?;
            let methods = methods
                .split(',')
                .map(|m| Method::from_str(m.trim()))
                .collect::<Result<Vec<_>, _>>()?;
            let config = BenchConfig {
                budgets,
                n_runs: runs,
                seed,
                methods,
                ..BenchConfig::default()
            };
            let (meshes, forest) = match model {
                Some(path) => (builtin_lod_table_with_si(), Forest::load(&path)?),
                None => default_bench_model(seed)?,
            };
            let report = if parallel {
                run_bench_parallel(&meshes, &forest, &config)?
            } else {
                run_bench(&meshes, &forest, &config)?
            };
            emit_bench(
                &report,
                out.as_deref(),
                json.as_deref(),
                dump_runs.as_deref(),
            )
        }
        Command::Metrics { a, b } => {
            let a = PointSet::load_xyz(&a)?;
            let b = PointSet::load_xyz(&b)?;
            let doc = serde_json::json!({
                "hausdorff": hausdorff(&a, &b)?,
                "rmse": rmse_points(&a, &b)?,
                "chamfer": chamfer(&a, &b)?,
            });
            println!("{}", serde_json::to_string_pretty(&doc)?);
            Ok(())
        }
    }
}

fn parse_budgets(spec: &str) -> Result<Vec<u64>, Error> {
    let parts: Vec<&str> = spec.split(':').collect();
    let err =
        || Error::invalid_argument(format!("bad budget sweep `{spec}` (want start:end:step)"));
    if parts.len() != 3 {
        return Err(err());
    }
    let start: u64 = parts[0].parse().map_err(|_| err())?;
    let end: u64 = parts[1].parse().map_err(|_| err())?;
    let step: u64 = parts[2].parse().map_err(|_| err())?;
    if step == 0 || start == 0 || end < start {
        return Err(err());
    }
    Ok((start..=end).step_by(step as usize).collect())
}

fn print_importances(model: &Forest) {
    eprintln!(
        "feature importances{}:",
        if model.importances.degenerate {
            " (degenerate)"
        } else {
            ""
        }
    );
    for (name, value) in FeatureVector::NAMES.iter().zip(model.importances.values) {
        eprintln!("  {name:<9} {value:.3}");
    }
}

fn print_eval_table(report: &EvalReport) {
    println!("run     rmse    plcc   srocc   krocc");
    for (i, m) in report.per_run.iter().enumerate() {
        println!(
            "{:<5} {:>6.3} {:>7.3} {:>7.3} {:>7.3}",
            i, m.rmse, m.plcc, m.srocc, m.krocc
        );
    }
    println!(
        "mean  {:>6.3} {:>7.3} {:>7.3} {:>7.3}   ({} runs)",
        report.rmse, report.plcc, report.srocc, report.krocc, report.n_runs
    );
}

fn emit_bench(
    report: &BenchReport,
    out: Option<&Path>,
    json: Option<&Path>,
    dump_runs: Option<&Path>,
) -> Result<(), Error> {
    match out {
        Some(path) => {
            let file = fs::File::create(path)?;
            write_report_csv(report, file)?;
        }
        None => {
            write_report_csv(report, std::io::stdout().lock())?;
        }
    }
    if let Some(path) = json {
        fs::write(path, serde_json::to_string_pretty(report)?)?;
    }
    if let Some(path) = dump_runs {
        let file = fs::File::create(path)?;
        write_runs_csv(report, file)?;
    }
    Ok(())
}
