//! `manipulab` command-line interface.
//!
//! Exit codes: 0 on success, 2 on configuration or usage errors, 3 on
//! numerical failures.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use manipulab::demo::generate_demos;
use manipulab::{
    learn_lambda, separate_null_component, ConstraintModel, JointState,
    ManipError, SerialChain, SimOutcome,
};
use manipulab_cli::config::ExperimentConfig;
use manipulab_cli::experiments::{rmse_eval, table1};
use manipulab_cli::io::{
    config_hash, read_dataset, read_model, write_csv, write_dataset, write_model,
    ModelDiagnostics,
};
use manipulab_cli::plot::{emit_plot, Panel, Series};
use manipulab_cli::scenarios::{run_compare, scenario_by_name};

#[derive(Parser)]
#[command(name = "manipulab", about = "Constraint learning and singularity-avoidance experiments", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a demonstration dataset.
    Gen {
        /// JSON config file; flags below override it.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        constraint: Option<String>,
        #[arg(long)]
        chain: Option<String>,
        #[arg(long)]
        trajectories: Option<usize>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Learn a constraint model from a dataset.
    Learn {
        #[arg(long)]
        dataset: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, default_value_t = 3)]
        k_max: usize,
    },
    /// Evaluate the manipulability index error of a learnt model.
    EvalNmie {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        dataset: PathBuf,
        #[arg(long)]
        constraint: Option<String>,
    },
    /// Controller-equivalence RMSE between true and learnt gradients.
    EvalRmse {
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long, default_value_t = 20)]
        trials: usize,
        #[arg(long, default_value_t = 100)]
        steps: usize,
        /// Gradient scheme for both controllers: central or forward.
        #[arg(long, default_value = "central")]
        grad_scheme: String,
        #[arg(long, default_value_t = 1.0)]
        alpha: f64,
        #[arg(long, default_value_t = 1e-6)]
        grad_step: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run a singular-start comparison scenario.
    Compare {
        #[arg(long)]
        scenario: String,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Constraint-learning accuracy table over repeated trials.
    Table1 {
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long, default_value_t = 50)]
        trials: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Emit the comparison figures for both scenarios.
    Figures {
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn exit_code_for(e: &ManipError) -> u8 {
    match e {
        ManipError::InvalidConfig(_)
        | ManipError::InvalidChain(_)
        | ManipError::InvalidConstraint(_)
        | ManipError::EmptyInput(_) => 2,
        _ => 3,
    }
}

fn out_dir(explicit: Option<PathBuf>, cfg: &ExperimentConfig) -> PathBuf {
    explicit.unwrap_or_else(|| cfg.resolved_output_dir())
}

fn trajectory_csv(out: &SimOutcome, chain: &SerialChain, path: &Path) -> manipulab::Result<()> {
    let dof = chain.dof();
    let mut header = vec!["step".to_string()];
    header.extend((1..=dof).map(|i| format!("q_{i}")));
    header.extend(["r_x".to_string(), "r_y".to_string(), "v".to_string()]);
    let mut rows = Vec::new();
    for (i, (q, v)) in out.trajectory.states.iter().zip(out.manip_trace.iter()).enumerate() {
        let mut row = vec![i.to_string()];
        row.extend(q.angles().iter().map(|x| format!("{x:.16e}")));
        let pose = chain.forward_kinematics(q)?;
        row.push(format!("{:.16e}", pose.coords().x));
        row.push(format!("{:.16e}", pose.coords().y));
        row.push(format!("{v:.16e}"));
        rows.push(row);
    }
    write_csv(path, &header.join(","), &rows)
}

fn compare_command(scenario: &str, seed: u64, dir: &Path) -> manipulab::Result<()> {
    let spec = scenario_by_name(scenario)?;
    let chain = SerialChain::preset("planar3")?;
    let outcome = run_compare(&spec, seed)?;

    std::fs::create_dir_all(dir)
        .map_err(|e| ManipError::InvalidConfig(format!("{}: {e}", dir.display())))?;
    let runs = [
        ("zero", &outcome.zero),
        ("manip_gradient", &outcome.manip),
        ("point_attractor", &outcome.attractor),
    ];
    for (name, run) in &runs {
        trajectory_csv(run, &chain, &dir.join(format!("{scenario}_{name}.csv")))?;
    }

    // Manipulability traces side by side (runs may stop early).
    let longest = runs.iter().map(|(_, r)| r.manip_trace.len()).max().unwrap_or(0);
    let mut rows = Vec::with_capacity(longest);
    for i in 0..longest {
        let mut row = vec![i.to_string()];
        for (_, r) in &runs {
            row.push(r.manip_trace.get(i).map(|v| format!("{v:.16e}")).unwrap_or_default());
        }
        rows.push(row);
    }
    write_csv(
        &dir.join(format!("{scenario}_vtrace.csv")),
        "step,v_zero,v_manip_gradient,v_point_attractor",
        &rows,
    )?;

    let path_panel = Panel {
        title: format!("{scenario}: end-effector path"),
        x_label: "x [m]".into(),
        y_label: "y [m]".into(),
        series: runs
            .iter()
            .map(|(name, r)| {
                let points = r
                    .trajectory
                    .states
                    .iter()
                    .filter_map(|q| chain.forward_kinematics(q).ok())
                    .map(|p| (p.coords().x, p.coords().y))
                    .collect();
                Series { label: name.to_string(), points }
            })
            .collect(),
    };
    let v_panel = Panel {
        title: format!("{scenario}: manipulability"),
        x_label: "step".into(),
        y_label: "v".into(),
        series: runs
            .iter()
            .map(|(name, r)| Series {
                label: name.to_string(),
                points: r.manip_trace.iter().enumerate().map(|(i, v)| (i as f64, *v)).collect(),
            })
            .collect(),
    };
    emit_plot(&[path_panel, v_panel], &dir.join(format!("{scenario}.svg")))?;

    for (name, r) in &runs {
        println!(
            "{scenario} {name:>16}: {:?} after {} states, v range [{:.3e}, {:.3e}]",
            r.status,
            r.trajectory.states.len(),
            r.manip_trace.iter().cloned().fold(f64::INFINITY, f64::min),
            r.manip_trace.iter().cloned().fold(f64::NEG_INFINITY, f64::max),
        );
    }
    Ok(())
}

fn run(cli: Cli) -> manipulab::Result<()> {
    match cli.command {
        Command::Gen { config, seed, constraint, chain, trajectories, out } => {
            let mut cfg = match config {
                Some(path) => ExperimentConfig::from_file(&path)?,
                None => ExperimentConfig::default(),
            };
            if let Some(s) = seed {
                cfg.seed = s;
            }
            if let Some(c) = constraint {
                cfg.constraint = c;
            }
            if let Some(c) = chain {
                cfg.chain = c;
            }
            if let Some(n) = trajectories {
                cfg.n_trajectories = n;
            }
            let dir = out_dir(out, &cfg);
            let mut set = generate_demos(&cfg.demo_config())?;
            if cfg.downsample_to > 0 {
                set.trajectories = set
                    .trajectories
                    .iter()
                    .map(|t| manipulab::demo::downsample(t, cfg.downsample_to))
                    .collect::<manipulab::Result<_>>()?;
                set.config.points_per_traj = cfg.downsample_to;
            }
            let path = dir.join("dataset.csv");
            write_dataset(&set, &path)?;
            println!(
                "wrote {} trajectories ({} points) to {}",
                set.trajectories.len(),
                set.n_points(),
                path.display()
            );
        }
        Command::Learn { dataset, out, k_max } => {
            let set = read_dataset(&dataset)?;
            let sep_cfg = manipulab::SeparationConfig::default();
            let lam_cfg = manipulab::LambdaConfig::default();
            let sep = separate_null_component(&set, &sep_cfg)?;
            let est = learn_lambda(&set, &sep, k_max, &lam_cfg)?;
            let diag = ModelDiagnostics {
                k: est.k,
                objective: est.objective_value,
                reference: est.reference,
                config_hash: config_hash(&sep_cfg, &lam_cfg),
                chain: set.config.chain_name.clone(),
            };
            let path = out.unwrap_or_else(|| PathBuf::from("model.txt"));
            write_model(&est, &diag, &path)?;
            println!(
                "learnt k={} constraint (objective {:.3e} / reference {:.3e}) -> {}",
                est.k,
                est.objective_value,
                est.reference,
                path.display()
            );
        }
        Command::EvalNmie { model, dataset, constraint } => {
            let (learned, diag) = read_model(&model)?;
            let set = read_dataset(&dataset)?;
            let truth_id = constraint.unwrap_or_else(|| set.config.constraint_id.clone());
            let truth = ConstraintModel::preset(&truth_id)?;
            let chain = SerialChain::preset(&set.config.chain_name)?;
            let states: Vec<JointState> = set.states().cloned().collect();
            let report = manipulab::eval_report(&truth, &learned, &chain, &states)?;
            println!("{report}");
            println!("model k = {}, training objective = {:.3e}", diag.k, diag.objective);
        }
        Command::EvalRmse { seed, trials, steps, grad_scheme, alpha, grad_step, out } => {
            let scheme = match grad_scheme.as_str() {
                "central" => manipulab::GradScheme::Central,
                "forward" => manipulab::GradScheme::Forward,
                other => {
                    return Err(ManipError::InvalidConfig(format!(
                        "unknown gradient scheme '{other}'"
                    )))
                }
            };
            let setup = manipulab::RmseSetup {
                steps,
                grad_step,
                alpha,
                scheme,
                ..Default::default()
            };
            let report = rmse_eval(seed, trials, &setup)?;
            println!(
                "rmse mean = {:.6e}, sd = {:.6e} over {} trials ({} excluded)",
                report.summary.mean,
                report.summary.sd,
                report.summary.n,
                report.excluded
            );
            if let Some(dir) = out {
                let rows: Vec<Vec<String>> = report
                    .values
                    .iter()
                    .enumerate()
                    .map(|(i, v)| vec![i.to_string(), format!("{v:.16e}")])
                    .collect();
                write_csv(&dir.join("rmse_trials.csv"), "trial,rmse", &rows)?;
            }
        }
        Command::Compare { scenario, seed, out } => {
            let dir = out.unwrap_or_else(|| ExperimentConfig::default().resolved_output_dir());
            compare_command(&scenario, seed, &dir)?;
        }
        Command::Table1 { seed, trials, out } => {
            let sep_cfg = manipulab::SeparationConfig::default();
            let lam_cfg = manipulab::LambdaConfig::default();
            let rows = table1(seed, trials, &sep_cfg, &lam_cfg)?;
            let dir = out.unwrap_or_else(|| ExperimentConfig::default().resolved_output_dir());
            let csv_rows: Vec<Vec<String>> = rows
                .iter()
                .map(|r| {
                    vec![
                        r.constraint.clone(),
                        format!("{:.16e}", r.summary.mean),
                        format!("{:.16e}", r.summary.sd),
                    ]
                })
                .collect();
            write_csv(&dir.join("table1.csv"), "constraint,nmie_mean,nmie_sd", &csv_rows)?;
            for r in &rows {
                println!(
                    "{:>16}: nmie = {:.3e} +/- {:.3e} over {} trials (ranks {:?}..)",
                    r.constraint,
                    r.summary.mean,
                    r.summary.sd,
                    r.summary.n,
                    &r.ranks[..r.ranks.len().min(5)]
                );
            }
        }
        Command::Figures { seed, out } => {
            let dir = out.unwrap_or_else(|| ExperimentConfig::default().resolved_output_dir());
            compare_command("compare1", seed, &dir)?;
            compare_command("compare2", seed, &dir)?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code_for(&e))
        }
    }
}
