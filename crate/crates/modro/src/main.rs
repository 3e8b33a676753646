//! `modro`: seeded, reproducible experiment CLI emitting CSV/JSON reports.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use modro_core::certificates::{
    encoder_robust_upper, generalization_upper, minimax_lower, w_encoder_upper, BoundInputs,
    BoundReport,
};
use modro_core::dro::{train, Objective, OptConfig, Optimizer};
use modro_core::models::{
    EarlyFusionModel, FusionModel, LateFusionModel, LinearModel, MlpModel, ResidualModel,
    ScalarModel,
};
use modro_core::synthetic::{gen_simulation, SimConfig};
use serde::Deserialize;

use modro::experiments::{
    chi2_csv, coverage_csv, estimated_budget, lecam_csv, run_chi2_study, run_coverage,
    run_encoder_bound, run_lecam, run_table1, table1_cells_csv, table1_rows_csv, Chi2StudyConfig,
    CoverageConfig, EncoderBoundConfig, LeCamConfig, Table1Config,
};
use modro::{bench, formats, model_io, report};

#[derive(Parser)]
#[command(name = "modro", version, about = "Modality-aware DRO experiment runner")]
struct Cli {
    /// Worker threads for seed-parallel experiments.
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// JSON config file; its sections override the matching flags.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ObjectiveArg {
    Erm,
    Dro,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum FusionArg {
    Late,
    Early,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ModelArg {
    Mlp,
    Linear,
    /// Linear skip plus a bounded tanh correction.
    Residual,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum BenchMode {
    Ols,
    Sgd,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum TheoremArg {
    #[value(name = "1")]
    One,
    #[value(name = "2")]
    Two,
    #[value(name = "3")]
    Three,
    #[value(name = "w-encoder")]
    WEncoder,
}

#[derive(Subcommand)]
enum Command {
    /// Generate the simulation dataset and its manifest.
    Simulate {
        #[arg(long, default_value_t = 5000)]
        n: usize,
        #[arg(long, default_value_t = 0.0)]
        shift: f64,
        #[arg(long, default_value_t = 0.7)]
        w: f64,
        #[arg(long, default_value_t = 0.05)]
        sigma_eps: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        manifest_out: PathBuf,
    },
    /// Train an ERM or χ²-DRO fusion model on a CSV dataset.
    Train {
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long, value_enum)]
        objective: ObjectiveArg,
        #[arg(long, default_value_t = 0.5)]
        rho: f64,
        /// Interpret --rho as the total budget B instead of per-modality.
        #[arg(long)]
        radius_is_total: bool,
        #[arg(long, value_enum, default_value = "late")]
        fusion: FusionArg,
        #[arg(long, value_enum, default_value = "mlp")]
        model: ModelArg,
        #[arg(long, default_value_t = 64)]
        hidden: usize,
        #[arg(long, default_value_t = 100)]
        epochs: usize,
        #[arg(long, default_value_t = 128)]
        batch: usize,
        #[arg(long, default_value_t = 0.005)]
        lr: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        model_out: PathBuf,
        #[arg(long)]
        trace_out: PathBuf,
    },
    /// Evaluate a bound certificate from a JSON input file.
    Certify {
        #[arg(long, value_enum)]
        theorem: TheoremArg,
        #[arg(long)]
        json: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Closed-form divergence study over correlated Gaussian pairs.
    Chi2Study {
        #[arg(long, value_delimiter = ',', default_values_t = [-0.6, -0.3, 0.0, 0.3, 0.6])]
        correlations: Vec<f64>,
        #[arg(long, default_value_t = 200)]
        trials: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// ERM vs χ²-DRO across radii on the simulation study.
    Table1 {
        #[arg(long, value_delimiter = ',', default_values_t = [0.1, 0.5, 1.2, 2.0])]
        rhos: Vec<f64>,
        /// Number of seeds (0..seeds).
        #[arg(long, default_value_t = 30)]
        seeds: usize,
        #[arg(long, default_value_t = 5000)]
        n_train: usize,
        #[arg(long, default_value_t = 5000)]
        n_test: usize,
        #[arg(long, default_value_t = 100)]
        epochs: usize,
        #[arg(long, default_value_t = 128)]
        batch: usize,
        #[arg(long, default_value_t = 0.005)]
        lr: f64,
        #[arg(long, default_value_t = 64)]
        hidden: usize,
        #[arg(long, default_value_t = 1.5)]
        shift: f64,
        #[arg(long)]
        radius_is_total: bool,
        #[arg(long)]
        out_dir: PathBuf,
    },
    /// Le Cam minimax probe over a sample-size grid.
    Lecam {
        #[arg(long, default_value_t = 1.0)]
        l_bound: f64,
        #[arg(long, default_value_t = 10.0)]
        m_param: f64,
        #[arg(long, value_delimiter = ',', default_values_t = [100usize, 1000])]
        ns: Vec<usize>,
        #[arg(long, default_value_t = 5000)]
        trials: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out_dir: PathBuf,
    },
    /// Concentration coverage grid for the generalization certificate.
    Coverage {
        #[arg(long, value_delimiter = ',', default_values_t = [100usize, 1000])]
        ns: Vec<usize>,
        #[arg(long, value_delimiter = ',', default_values_t = [1.0, 2.0, 3.0])]
        ts: Vec<f64>,
        #[arg(long, default_value_t = 2000)]
        trials: usize,
        #[arg(long, default_value_t = 1.0)]
        budget: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out_dir: PathBuf,
    },
    /// Encoder perturbation experiments for both robust upper bounds.
    EncoderBound {
        #[arg(long, default_value_t = 2000)]
        n: usize,
        #[arg(long, default_value_t = 0.1)]
        scale: f64,
        #[arg(long, default_value_t = 0)]
        modality: usize,
        #[arg(long, default_value_t = 0.5)]
        budget: f64,
        #[arg(long, default_value_t = 2.0)]
        t: f64,
        #[arg(long, default_value_t = 50)]
        trials: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out_dir: PathBuf,
    },
    /// Wall-clock fusion benchmarks (OLS or per-epoch SGD).
    Bench {
        #[arg(long, value_enum)]
        mode: BenchMode,
        /// Inline JSON grid: [{"n":..,"k":..,"d":..}, ...].
        #[arg(long)]
        grid: String,
        #[arg(long)]
        parallel: bool,
        #[arg(long, default_value_t = 5)]
        reps: usize,
        #[arg(long, default_value_t = 1)]
        warmup: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
}

/// Optional config file; each present section replaces the matching
/// subcommand's flag-derived configuration.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields, default)]
struct FileConfig {
    threads: Option<usize>,
    table1: Option<Table1Section>,
    chi2_study: Option<Chi2Section>,
    coverage: Option<CoverageConfig>,
    lecam: Option<LeCamConfig>,
    encoder_bound: Option<EncoderBoundConfig>,
    bench: Option<bench::BenchConfig>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields, default)]
struct Table1Section {
    rhos: Option<Vec<f64>>,
    seeds: Option<usize>,
    config: Option<Table1Config>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields, default)]
struct Chi2Section {
    correlations: Option<Vec<f64>>,
    config: Option<Chi2StudyConfig>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields, default)]
struct CertifyInputs {
    radius_b: f64,
    n: usize,
    t: f64,
    m_loss: f64,
    c_const: f64,
    l_loss: f64,
    l_g: f64,
    delta_mean: f64,
    delta_var: f64,
    l_delta: f64,
    /// Theorem-3 inputs.
    l_bound: f64,
    m_param: f64,
}

impl Default for CertifyInputs {
    fn default() -> Self {
        CertifyInputs {
            radius_b: 0.0,
            n: 1,
            t: 1.0,
            m_loss: 0.0,
            c_const: 1.0,
            l_loss: 0.0,
            l_g: 0.0,
            delta_mean: 0.0,
            delta_var: 0.0,
            l_delta: 0.0,
            l_bound: 1.0,
            m_param: 3.0,
        }
    }
}

fn bound_report_json(report: &BoundReport) -> serde_json::Value {
    serde_json::json!({
        "theorem": report.theorem,
        "bound": report.bound,
        "breakdown": report
            .breakdown
            .iter()
            .map(|(name, value)| serde_json::json!({"term": name, "value": value}))
            .collect::<Vec<_>>(),
        "caveats": report.caveats,
        "inputs": {
            "radius_b": report.inputs.radius_b,
            "n": report.inputs.n,
            "t": report.inputs.t,
            "m_loss": report.inputs.m_loss,
            "c_const": report.inputs.c_const,
            "l_loss": report.inputs.l_loss,
            "l_g": report.inputs.l_g,
            "delta_mean": report.inputs.delta_mean,
            "delta_var": report.inputs.delta_var,
            "l_delta": report.inputs.l_delta,
        },
    })
}

fn write_text(path: &Path, text: &str) -> anyhow::Result<()> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            std::fs::create_dir_all(parent)?;
        }
    }
    std::fs::write(path, text)?;
    Ok(())
}

fn write_json(path: &Path, value: &serde_json::Value) -> anyhow::Result<()> {
    write_text(path, &format!("{}\n", serde_json::to_string_pretty(value)?))
}

fn load_file_config(path: &Option<PathBuf>) -> anyhow::Result<FileConfig> {
    match path {
        None => Ok(FileConfig::default()),
        Some(p) => {
            let text = std::fs::read_to_string(p)?;
            let cfg: FileConfig = serde_json::from_str(&text)
                .map_err(|e| anyhow::anyhow!("config schema error in {}: {e}", p.display()))?;
            Ok(cfg)
        }
    }
}

fn bench_rows_csv(rows: &[bench::BenchRow], cfg: &bench::BenchConfig) -> anyhow::Result<String> {
    let mut writer = csv::WriterBuilder::new().from_writer(Vec::new());
    writer.write_record([
        "mode",
        "n",
        "k",
        "d",
        "total_dim",
        "median_secs",
        "mad_secs",
        "flops_est",
    ])?;
    for r in rows {
        writer.write_record([
            r.mode.clone(),
            r.n.to_string(),
            r.k.to_string(),
            r.d.to_string(),
            r.total_dim.to_string(),
            formats::format_float(r.median_secs),
            formats::format_float(r.mad_secs),
            formats::format_float(r.flops_est),
        ])?;
    }
    let body = String::from_utf8(writer.into_inner()?)?;
    Ok(format!(
        "# modro bench\n# prng: {}\n# config: {}\n# workers: {}\n{body}",
        modro_core::rng::PRNG_NAME,
        serde_json::to_string(cfg)?,
        bench::available_workers(),
    ))
}

fn run() -> anyhow::Result<ExitCode> {
    let cli = Cli::parse();
    let file_cfg = load_file_config(&cli.config)?;
    let threads = file_cfg.threads.or(cli.threads);

    match cli.command {
        Command::Simulate {
            n,
            shift,
            w,
            sigma_eps,
            seed,
            out,
            manifest_out,
        } => {
            let mut cfg = SimConfig::new(n, shift, seed);
            cfg.w = w;
            cfg.sigma_eps = sigma_eps;
            let ds = gen_simulation(&cfg)?;
            if let Some(parent) = out.parent() {
                if !parent.as_os_str().is_empty() {
                    std::fs::create_dir_all(parent)?;
                }
            }
            formats::write_dataset(&ds, "y", &out)?;
            formats::write_manifest(&formats::DatasetManifest::for_dataset(&ds, "y"), &manifest_out)?;
            println!("wrote {} rows to {}", ds.n_samples(), out.display());
            Ok(ExitCode::SUCCESS)
        }
        Command::Train {
            data,
            manifest,
            objective,
            rho,
            radius_is_total,
            fusion,
            model,
            hidden,
            epochs,
            batch,
            lr,
            seed,
            model_out,
            trace_out,
        } => {
            let manifest = formats::read_manifest(&manifest)?;
            let ds = formats::load_dataset(&manifest, &data)?;
            let init = match (fusion, model) {
                (FusionArg::Late, ModelArg::Mlp) => FusionModel::Late(LateFusionModel {
                    encoders: ds
                        .dims()
                        .iter()
                        .enumerate()
                        .map(|(k, &d)| {
                            ScalarModel::Mlp(MlpModel::new_2layer(
                                d,
                                hidden,
                                seed.wrapping_add(1 + k as u64),
                            ))
                        })
                        .collect(),
                    head: ScalarModel::Linear(LinearModel {
                        weights: vec![1.0 / ds.n_modalities() as f64; ds.n_modalities()],
                        bias: 0.0,
                    }),
                }),
                (FusionArg::Late, ModelArg::Linear) => FusionModel::Late(LateFusionModel {
                    encoders: ds
                        .dims()
                        .iter()
                        .map(|&d| ScalarModel::Linear(LinearModel::zeros(d)))
                        .collect(),
                    head: ScalarModel::Linear(LinearModel {
                        weights: vec![1.0 / ds.n_modalities() as f64; ds.n_modalities()],
                        bias: 0.0,
                    }),
                }),
                (FusionArg::Early, ModelArg::Mlp) => FusionModel::Early(EarlyFusionModel {
                    model: ScalarModel::Mlp(MlpModel::new_2layer(ds.total_dim(), hidden, seed)),
                }),
                (FusionArg::Early, ModelArg::Linear) => FusionModel::Early(EarlyFusionModel {
                    model: ScalarModel::Linear(LinearModel::zeros(ds.total_dim())),
                }),
                (FusionArg::Late, ModelArg::Residual) => FusionModel::Late(LateFusionModel {
                    encoders: ds
                        .dims()
                        .iter()
                        .enumerate()
                        .map(|(k, &d)| {
                            ScalarModel::Residual(ResidualModel::new_2layer(
                                d,
                                hidden,
                                seed.wrapping_add(1 + k as u64),
                            ))
                        })
                        .collect(),
                    head: ScalarModel::Linear(LinearModel {
                        weights: vec![1.0 / ds.n_modalities() as f64; ds.n_modalities()],
                        bias: 0.0,
                    }),
                }),
                (FusionArg::Early, ModelArg::Residual) => FusionModel::Early(EarlyFusionModel {
                    model: ScalarModel::Residual(ResidualModel::new_2layer(
                        ds.total_dim(),
                        hidden,
                        seed,
                    )),
                }),
            };
            let objective = match objective {
                ObjectiveArg::Erm => Objective::Erm,
                ObjectiveArg::Dro => {
                    let budget = if radius_is_total {
                        rho
                    } else {
                        estimated_budget(&ds, rho)?
                    };
                    println!("dro budget B = {budget:.6}");
                    Objective::Chi2Dro { budget }
                }
            };
            let opt = OptConfig {
                optimizer: Optimizer::Adam,
                learning_rate: lr,
                epochs,
                batch_size: batch,
                seed,
                sd_epsilon: 1e-8,
            };
            let result = train(&init, &ds, objective, &opt)?;
            model_io::save_model(&result.model, &model_out)?;
            let mut trace_csv = String::from("epoch,objective\n");
            for (epoch, value) in result.trace.iter().enumerate() {
                trace_csv.push_str(&format!("{epoch},{}\n", formats::format_float(*value)));
            }
            write_text(&trace_out, &trace_csv)?;
            println!(
                "trained {} epochs; final objective {:.6}",
                result.trace.len(),
                result.trace.last().copied().unwrap_or(f64::NAN)
            );
            Ok(ExitCode::SUCCESS)
        }
        Command::Certify { theorem, json, out } => {
            let text = std::fs::read_to_string(&json)?;
            let inputs: CertifyInputs = serde_json::from_str(&text)
                .map_err(|e| anyhow::anyhow!("inputs schema error in {}: {e}", json.display()))?;
            let bound_inputs = BoundInputs {
                radius_b: inputs.radius_b,
                n: inputs.n,
                t: inputs.t,
                m_loss: inputs.m_loss,
                c_const: inputs.c_const,
                l_loss: inputs.l_loss,
                l_g: inputs.l_g,
                delta_mean: inputs.delta_mean,
                delta_var: inputs.delta_var,
                l_delta: inputs.l_delta,
            };
            let report = match theorem {
                TheoremArg::One => generalization_upper(&bound_inputs)?,
                TheoremArg::Two => encoder_robust_upper(&bound_inputs)?,
                TheoremArg::Three => minimax_lower(inputs.l_bound, inputs.n, inputs.m_param)?,
                TheoremArg::WEncoder => w_encoder_upper(&bound_inputs)?,
            };
            write_json(&out, &bound_report_json(&report))?;
            println!("{}: bound = {:.9}", report.theorem, report.bound);
            Ok(ExitCode::SUCCESS)
        }
        Command::Chi2Study {
            correlations,
            trials,
            seed,
            out,
        } => {
            let section = file_cfg.chi2_study.unwrap_or_default();
            let correlations = section.correlations.unwrap_or(correlations);
            let cfg = section.config.unwrap_or(Chi2StudyConfig {
                trials,
                seed,
                ..Chi2StudyConfig::default()
            });
            let rows = run_chi2_study(&correlations, &cfg)?;
            write_text(&out, &chi2_csv(&rows, &correlations, &cfg)?)?;
            println!("wrote {} rows to {}", rows.len(), out.display());
            Ok(ExitCode::SUCCESS)
        }
        Command::Table1 {
            rhos,
            seeds,
            n_train,
            n_test,
            epochs,
            batch,
            lr,
            hidden,
            shift,
            radius_is_total,
            out_dir,
        } => {
            let section = file_cfg.table1.unwrap_or_default();
            let rhos = section.rhos.unwrap_or(rhos);
            let n_seeds = section.seeds.unwrap_or(seeds);
            let mut cfg = section.config.unwrap_or(Table1Config {
                n_train,
                n_test,
                epochs,
                batch_size: batch,
                learning_rate: lr,
                hidden,
                shift_test: shift,
                radius_is_total,
                ..Table1Config::default()
            });
            if let Some(t) = threads {
                cfg.threads = t;
            }
            let seed_list: Vec<u64> = (0..n_seeds as u64).collect();
            let (rows, cells) = run_table1(&rhos, &seed_list, &cfg)?;
            std::fs::create_dir_all(&out_dir)?;
            let rows_csv = table1_rows_csv(&rows, &seed_list, &cfg)?;
            write_text(&out_dir.join("table1.csv"), &rows_csv)?;
            write_text(
                &out_dir.join("table1_cells.csv"),
                &table1_cells_csv(&cells, &seed_list, &cfg)?,
            )?;
            write_text(&out_dir.join("table1.md"), &report::render_markdown(&rows_csv)?)?;
            let mut ordering_ok = true;
            for row in &rows {
                println!(
                    "rho={:<4} whole: erm {:.3}±{:.3} dro {:.3}±{:.3} | minor: erm {:.3}±{:.3} dro {:.3}±{:.3} ({} seeds)",
                    row.rho,
                    row.whole_mse_erm,
                    row.whole_mse_erm_se,
                    row.whole_mse_dro,
                    row.whole_mse_dro_se,
                    row.minor_mse_erm,
                    row.minor_mse_erm_se,
                    row.minor_mse_dro,
                    row.minor_mse_dro_se,
                    row.n_seeds,
                );
                if !(row.whole_mse_dro < row.whole_mse_erm
                    && row.minor_mse_dro < row.minor_mse_erm)
                {
                    ordering_ok = false;
                }
            }
            if cfg.shift_test > 0.0 && !ordering_ok {
                eprintln!("ordering violated: DRO should beat ERM on both columns at every rho");
                return Ok(ExitCode::FAILURE);
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Lecam {
            l_bound,
            m_param,
            ns,
            trials,
            seed,
            out_dir,
        } => {
            let cfg = file_cfg.lecam.unwrap_or(LeCamConfig {
                l_bound,
                m_param,
                ns,
                trials,
                seed,
            });
            let rows = run_lecam(&cfg)?;
            std::fs::create_dir_all(&out_dir)?;
            write_text(&out_dir.join("lecam.csv"), &lecam_csv(&rows, &cfg)?)?;
            write_json(&out_dir.join("lecam.json"), &serde_json::to_value(&rows)?)?;
            let all_passed = rows.iter().all(|r| r.passed);
            for row in &rows {
                println!(
                    "n={}: sup plug-in error {:.6} vs lower bound {:.6} → {}",
                    row.n,
                    row.sup_error,
                    row.lower_bound,
                    if row.passed { "ok" } else { "VIOLATED" }
                );
            }
            Ok(if all_passed {
                ExitCode::SUCCESS
            } else {
                ExitCode::FAILURE
            })
        }
        Command::Coverage {
            ns,
            ts,
            trials,
            budget,
            seed,
            out_dir,
        } => {
            let cfg = file_cfg.coverage.unwrap_or(CoverageConfig {
                ns,
                ts,
                trials,
                budget,
                seed,
            });
            let rows = run_coverage(&cfg)?;
            std::fs::create_dir_all(&out_dir)?;
            write_text(&out_dir.join("coverage.csv"), &coverage_csv(&rows, &cfg)?)?;
            write_json(&out_dir.join("coverage.json"), &serde_json::to_value(&rows)?)?;
            let all_passed = rows.iter().all(|r| r.passed);
            for row in &rows {
                println!(
                    "n={}, t={}: freq {:.4} ≤ threshold {:.4} → {}",
                    row.n,
                    row.t,
                    row.violation_frequency,
                    row.threshold,
                    if row.passed { "ok" } else { "VIOLATED" }
                );
            }
            Ok(if all_passed {
                ExitCode::SUCCESS
            } else {
                ExitCode::FAILURE
            })
        }
        Command::EncoderBound {
            n,
            scale,
            modality,
            budget,
            t,
            trials,
            seed,
            out_dir,
        } => {
            let cfg = file_cfg.encoder_bound.unwrap_or(EncoderBoundConfig {
                n,
                scale,
                modality,
                budget,
                t,
                trials,
                seed,
            });
            let outcome = run_encoder_bound(&cfg)?;
            std::fs::create_dir_all(&out_dir)?;
            write_json(
                &out_dir.join("encoder_bound.json"),
                &serde_json::to_value(&outcome)?,
            )?;
            let mut csv_text = String::from(
                "# modro encoder-bound\nkind,trial,gap,bound\n",
            );
            for (i, trial) in outcome.chi2.trials.iter().enumerate() {
                csv_text.push_str(&format!(
                    "chi2,{i},{},{}\n",
                    formats::format_float(trial.gap),
                    formats::format_float(trial.bound)
                ));
            }
            for (i, trial) in outcome.transport.trials.iter().enumerate() {
                csv_text.push_str(&format!(
                    "transport,{i},{},{}\n",
                    formats::format_float(trial.gap),
                    formats::format_float(trial.bound)
                ));
            }
            write_text(&out_dir.join("encoder_bound.csv"), &csv_text)?;
            println!(
                "chi2: {}/{} violations; transport: {}/{} violations",
                outcome.chi2.violations,
                outcome.chi2.trials.len(),
                outcome.transport.violations,
                outcome.transport.trials.len(),
            );
            Ok(if outcome.chi2.passed && outcome.transport.passed {
                ExitCode::SUCCESS
            } else {
                ExitCode::FAILURE
            })
        }
        Command::Bench {
            mode,
            grid,
            parallel,
            reps,
            warmup,
            seed,
            out,
        } => {
            let cfg = match file_cfg.bench {
                Some(cfg) => cfg,
                None => {
                    let grid: Vec<bench::GridPoint> = serde_json::from_str(&grid)
                        .map_err(|e| anyhow::anyhow!("grid schema error: {e}"))?;
                    bench::BenchConfig {
                        grid,
                        reps,
                        warmup,
                        parallel,
                        seed,
                    }
                }
            };
            let rows = match mode {
                BenchMode::Ols => bench::bench_ols(&cfg)?,
                BenchMode::Sgd => bench::bench_sgd_epoch(&cfg)?,
            };
            write_text(&out, &bench_rows_csv(&rows, &cfg)?)?;
            for row in &rows {
                println!(
                    "{:<14} N={:<7} K={:<3} d={:<4} D={:<5} median {:.6}s (mad {:.6}s)",
                    row.mode, row.n, row.k, row.d, row.total_dim, row.median_secs, row.mad_secs
                );
            }
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn main() -> ExitCode {
    match run() {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cli_parses_the_documented_invocations() {
        Cli::try_parse_from([
            "modro", "simulate", "--n", "100", "--shift", "1.5", "--seed", "3", "--out",
            "d.csv", "--manifest-out", "m.json",
        ])
        .unwrap();
        Cli::try_parse_from([
            "modro",
            "train",
            "--data",
            "d.csv",
            "--manifest",
            "m.json",
            "--objective",
            "dro",
            "--rho",
            "0.5",
            "--fusion",
            "late",
            "--model",
            "mlp",
            "--epochs",
            "100",
            "--batch",
            "128",
            "--lr",
            "0.005",
            "--seed",
            "1",
            "--model-out",
            "model.json",
            "--trace-out",
            "trace.csv",
        ])
        .unwrap();
        Cli::try_parse_from([
            "modro",
            "table1",
            "--rhos",
            "0.1,0.5,1.2,2.0",
            "--seeds",
            "30",
            "--out-dir",
            "out",
        ])
        .unwrap();
        Cli::try_parse_from([
            "modro",
            "certify",
            "--theorem",
            "w-encoder",
            "--json",
            "in.json",
            "--out",
            "report.json",
        ])
        .unwrap();
        Cli::try_parse_from([
            "modro", "bench", "--mode", "ols", "--grid", "[]", "--parallel", "--reps", "5",
            "--out", "bench.csv",
        ])
        .unwrap();
    }

    #[test]
    fn file_config_rejects_unknown_fields_with_a_path() {
        let err = serde_json::from_str::<FileConfig>("{\"tabel1\": {}}").unwrap_err();
        assert!(err.to_string().contains("tabel1"), "{err}");
        let err =
            serde_json::from_str::<FileConfig>("{\"table1\": {\"config\": {\"epocs\": 3}}}")
                .unwrap_err();
        assert!(err.to_string().contains("epocs"), "{err}");
    }
}
