//! Dataset and model persistence: plain-text formats with exact numeric
//! round trips and atomic writes.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use nalgebra::{DMatrix, DVector};

use manipulab::demo::{DemoConfig, DemonstrationSet};
use manipulab::sim::{Trajectory, TrajectoryMeta};
use manipulab::{ConstraintModel, JointState, LambdaEstimate, ManipError, Result};

const MODEL_VERSION: u32 = 1;

/// 17 significant digits print exactly round-trippable f64 values.
fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

fn io_err(path: &Path, e: std::io::Error) -> ManipError {
    ManipError::InvalidConfig(format!("{}: {e}", path.display()))
}

/// Writes via a temporary file in the same directory plus rename, so readers
/// never observe a partial file.
pub fn write_atomic(path: &Path, contents: &str) -> Result<()> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    std::fs::create_dir_all(dir).map_err(|e| io_err(dir, e))?;
    let mut tmp = PathBuf::from(dir);
    let stamp = std::time::SystemTime::now()
        .duration_since(std::time::UNIX_EPOCH)
        .map(|d| d.as_nanos())
        .unwrap_or(0);
    tmp.push(format!(
        ".{}.{}.{stamp}.tmp",
        path.file_name().and_then(|n| n.to_str()).unwrap_or("out"),
        std::process::id()
    ));
    std::fs::write(&tmp, contents).map_err(|e| io_err(&tmp, e))?;
    std::fs::rename(&tmp, path).map_err(|e| io_err(path, e))
}

fn dataset_header(dof: usize) -> String {
    let mut cols = vec!["traj_id".to_string(), "step".to_string()];
    cols.extend((1..=dof).map(|i| format!("q_{i}")));
    cols.extend((1..=dof).map(|i| format!("u_{i}")));
    cols.push("dt".into());
    cols.join(",")
}

/// Sidecar path holding the generation metadata for a dataset.
pub fn sidecar_path(dataset: &Path) -> PathBuf {
    let mut p = dataset.as_os_str().to_owned();
    p.push(".meta");
    PathBuf::from(p)
}

/// Writes one row per recorded (state, action) pair plus a key-value
/// metadata sidecar.
pub fn write_dataset(set: &DemonstrationSet, path: &Path) -> Result<()> {
    let dof = set
        .trajectories
        .first()
        .and_then(|t| t.states.first())
        .map(|s| s.dof())
        .ok_or_else(|| ManipError::EmptyInput("dataset with no points".into()))?;

    let mut out = String::new();
    out.push_str(&dataset_header(dof));
    out.push('\n');
    for (tid, traj) in set.trajectories.iter().enumerate() {
        for (step, (q, u)) in traj.states.iter().zip(traj.actions.iter()).enumerate() {
            write!(out, "{tid},{step}").expect("string write");
            for v in q.angles().iter() {
                out.push(',');
                out.push_str(&fmt_f64(*v));
            }
            for v in u.iter() {
                out.push(',');
                out.push_str(&fmt_f64(*v));
            }
            out.push(',');
            out.push_str(&fmt_f64(traj.dt));
            out.push('\n');
        }
    }
    write_atomic(path, &out)?;

    let cfg = &set.config;
    let join = |it: &[f64]| it.iter().map(|v| fmt_f64(*v)).collect::<Vec<_>>().join(",");
    let ranges = |it: &[(f64, f64)]| {
        it.iter()
            .map(|(a, b)| format!("{}..{}", fmt_f64(*a), fmt_f64(*b)))
            .collect::<Vec<_>>()
            .join(",")
    };
    let meta = format!(
        "constraint = {}\nchain = {}\nseed = {}\npsi_star_deg = {}\nn_trajectories = {}\n\
         points_per_traj = {}\ndt = {}\nalpha = {}\nstart_ranges_deg = {}\ntarget_ranges = {}\n\
         ik_neutral_deg = {}\nik_max_iters = {}\nik_damping = {}\nik_tolerance = {}\nmax_rejections = {}\n",
        cfg.constraint_id,
        cfg.chain_name,
        cfg.seed,
        join(&cfg.psi_star_deg),
        cfg.n_trajectories,
        cfg.points_per_traj,
        fmt_f64(cfg.dt),
        fmt_f64(cfg.alpha),
        ranges(&cfg.start_ranges_deg),
        ranges(&cfg.target_ranges),
        join(&cfg.ik_neutral_deg),
        cfg.ik_max_iters,
        fmt_f64(cfg.ik_damping),
        fmt_f64(cfg.ik_tolerance),
        cfg.max_rejections,
    );
    write_atomic(&sidecar_path(path), &meta)
}

fn parse_kv(text: &str, path: &Path) -> Result<std::collections::BTreeMap<String, String>> {
    let mut map = std::collections::BTreeMap::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let Some((k, v)) = line.split_once('=') else {
            return Err(ManipError::InvalidConfig(format!(
                "{}:{}: expected 'key = value'",
                path.display(),
                lineno + 1
            )));
        };
        map.insert(k.trim().to_string(), v.trim().to_string());
    }
    Ok(map)
}

fn meta_field<'a>(
    map: &'a std::collections::BTreeMap<String, String>,
    key: &str,
    path: &Path,
) -> Result<&'a str> {
    map.get(key).map(|s| s.as_str()).ok_or_else(|| {
        ManipError::InvalidConfig(format!("{}: missing field '{key}'", path.display()))
    })
}

fn parse_num<T: std::str::FromStr>(s: &str, what: &str, path: &Path, lineno: usize) -> Result<T> {
    s.parse().map_err(|_| {
        ManipError::InvalidConfig(format!(
            "{}:{}: cannot parse {what} from '{s}'",
            path.display(),
            lineno
        ))
    })
}

fn parse_list(s: &str, what: &str, path: &Path) -> Result<Vec<f64>> {
    s.split(',')
        .map(|p| {
            p.trim()
                .parse()
                .map_err(|_| ManipError::InvalidConfig(format!("{}: bad {what} entry '{p}'", path.display())))
        })
        .collect()
}

fn parse_ranges(s: &str, what: &str, path: &Path) -> Result<Vec<(f64, f64)>> {
    s.split(',')
        .map(|p| {
            let (a, b) = p.split_once("..").ok_or_else(|| {
                ManipError::InvalidConfig(format!("{}: bad {what} range '{p}'", path.display()))
            })?;
            Ok((
                parse_num::<f64>(a.trim(), what, path, 0)?,
                parse_num::<f64>(b.trim(), what, path, 0)?,
            ))
        })
        .collect()
}

/// Reads a dataset CSV and its metadata sidecar back into a
/// [`DemonstrationSet`]; parsed numbers are bit-exact.
pub fn read_dataset(path: &Path) -> Result<DemonstrationSet> {
    let text = std::fs::read_to_string(path).map_err(|e| io_err(path, e))?;
    let mut lines = text.lines().enumerate();
    let Some((_, header)) = lines.next() else {
        return Err(ManipError::EmptyInput(format!("{}: empty dataset file", path.display())));
    };

    let meta_path = sidecar_path(path);
    let meta_text = std::fs::read_to_string(&meta_path).map_err(|e| io_err(&meta_path, e))?;
    let meta = parse_kv(&meta_text, &meta_path)?;

    let psi_star_deg = parse_list(meta_field(&meta, "psi_star_deg", &meta_path)?, "psi_star_deg", &meta_path)?;
    let dof = psi_star_deg.len();
    let expected_header = dataset_header(dof);
    if header != expected_header {
        return Err(ManipError::InvalidConfig(format!(
            "{}: header mismatch, expected '{expected_header}'",
            path.display()
        )));
    }

    let config = DemoConfig {
        chain_name: meta_field(&meta, "chain", &meta_path)?.to_string(),
        constraint_id: meta_field(&meta, "constraint", &meta_path)?.to_string(),
        n_trajectories: parse_num(meta_field(&meta, "n_trajectories", &meta_path)?, "n_trajectories", &meta_path, 0)?,
        points_per_traj: parse_num(meta_field(&meta, "points_per_traj", &meta_path)?, "points_per_traj", &meta_path, 0)?,
        start_ranges_deg: parse_ranges(meta_field(&meta, "start_ranges_deg", &meta_path)?, "start_ranges_deg", &meta_path)?,
        target_ranges: parse_ranges(meta_field(&meta, "target_ranges", &meta_path)?, "target_ranges", &meta_path)?,
        psi_star_deg,
        seed: parse_num(meta_field(&meta, "seed", &meta_path)?, "seed", &meta_path, 0)?,
        dt: parse_num(meta_field(&meta, "dt", &meta_path)?, "dt", &meta_path, 0)?,
        alpha: parse_num(meta_field(&meta, "alpha", &meta_path)?, "alpha", &meta_path, 0)?,
        ik_neutral_deg: parse_list(meta_field(&meta, "ik_neutral_deg", &meta_path)?, "ik_neutral_deg", &meta_path)?,
        ik_max_iters: parse_num(meta_field(&meta, "ik_max_iters", &meta_path)?, "ik_max_iters", &meta_path, 0)?,
        ik_damping: parse_num(meta_field(&meta, "ik_damping", &meta_path)?, "ik_damping", &meta_path, 0)?,
        ik_tolerance: parse_num(meta_field(&meta, "ik_tolerance", &meta_path)?, "ik_tolerance", &meta_path, 0)?,
        max_rejections: parse_num(meta_field(&meta, "max_rejections", &meta_path)?, "max_rejections", &meta_path, 0)?,
    };

    let mut trajectories: Vec<Trajectory> = Vec::new();
    let mut n_rows = 0usize;
    for (lineno, line) in lines {
        if line.trim().is_empty() {
            continue;
        }
        n_rows += 1;
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 2 + 2 * dof + 1 {
            return Err(ManipError::InvalidConfig(format!(
                "{}:{}: expected {} fields, found {}",
                path.display(),
                lineno + 1,
                2 + 2 * dof + 1,
                fields.len()
            )));
        }
        let traj_id: usize = parse_num(fields[0], "traj_id", path, lineno + 1)?;
        let _step: usize = parse_num(fields[1], "step", path, lineno + 1)?;
        let mut q = DVector::zeros(dof);
        let mut u = DVector::zeros(dof);
        for i in 0..dof {
            q[i] = parse_num(fields[2 + i], "joint angle", path, lineno + 1)?;
            u[i] = parse_num(fields[2 + dof + i], "joint velocity", path, lineno + 1)?;
        }
        let dt: f64 = parse_num(fields[2 + 2 * dof], "dt", path, lineno + 1)?;

        if traj_id == trajectories.len() {
            trajectories.push(Trajectory {
                states: Vec::new(),
                actions: Vec::new(),
                dt,
                meta: TrajectoryMeta::new(
                    &config.constraint_id,
                    &config.chain_name,
                    "point_attractor",
                    config.seed ^ traj_id as u64,
                ),
            });
        } else if traj_id >= trajectories.len() {
            return Err(ManipError::InvalidConfig(format!(
                "{}:{}: trajectory ids must be contiguous",
                path.display(),
                lineno + 1
            )));
        }
        let traj = &mut trajectories[traj_id];
        traj.states.push(JointState::new(q)?);
        traj.actions.push(u);
    }
    if n_rows == 0 {
        return Err(ManipError::EmptyInput(format!("{}: dataset has a header but no rows", path.display())));
    }
    Ok(DemonstrationSet { trajectories, config })
}

/// Diagnostics stored alongside a learnt model.
#[derive(Clone, Debug, PartialEq)]
pub struct ModelDiagnostics {
    pub k: usize,
    pub objective: f64,
    pub reference: f64,
    pub config_hash: u64,
    pub chain: String,
}

/// FNV-1a over the learner configuration's debug rendering.
pub fn config_hash(sep: &manipulab::SeparationConfig, lam: &manipulab::LambdaConfig) -> u64 {
    let text = format!("{sep:?}|{lam:?}");
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in text.bytes() {
        h ^= b as u64;
        h = h.wrapping_mul(0x100_0000_01b3);
    }
    h
}

/// Writes a learnt constraint with its diagnostics as key-value text with
/// row-major matrix lines.
pub fn write_model(est: &LambdaEstimate, diag: &ModelDiagnostics, path: &Path) -> Result<()> {
    let mut out = String::new();
    writeln!(out, "manipulab_model_version = {MODEL_VERSION}").expect("string write");
    writeln!(out, "chain = {}", diag.chain).expect("string write");
    writeln!(out, "feature = jacobian").expect("string write");
    writeln!(out, "k = {}", est.k).expect("string write");
    writeln!(out, "objective = {}", fmt_f64(est.objective_value)).expect("string write");
    writeln!(out, "reference = {}", fmt_f64(est.reference)).expect("string write");
    writeln!(out, "config_hash = {:016x}", diag.config_hash).expect("string write");
    for r in 0..est.rows.nrows() {
        let row: Vec<String> = (0..est.rows.ncols()).map(|c| fmt_f64(est.rows[(r, c)])).collect();
        writeln!(out, "row = {}", row.join(" ")).expect("string write");
    }
    write_atomic(path, &out)
}

/// Reads a model file back into a constraint and its diagnostics.
pub fn read_model(path: &Path) -> Result<(ConstraintModel, ModelDiagnostics)> {
    let text = std::fs::read_to_string(path).map_err(|e| io_err(path, e))?;
    if text.trim().is_empty() {
        return Err(ManipError::EmptyInput(format!("{}: empty model file", path.display())));
    }
    let mut rows: Vec<Vec<f64>> = Vec::new();
    let mut map = std::collections::BTreeMap::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let Some((k, v)) = line.split_once('=') else {
            return Err(ManipError::InvalidConfig(format!(
                "{}:{}: expected 'key = value'",
                path.display(),
                lineno + 1
            )));
        };
        let (k, v) = (k.trim(), v.trim());
        if k == "row" {
            let vals: Vec<f64> = v
                .split_whitespace()
                .map(|p| parse_num(p, "row entry", path, lineno + 1))
                .collect::<Result<_>>()?;
            rows.push(vals);
        } else {
            map.insert(k.to_string(), v.to_string());
        }
    }

    let version: u32 = parse_num(
        meta_field(&map, "manipulab_model_version", path)?,
        "version",
        path,
        0,
    )?;
    if version != MODEL_VERSION {
        return Err(ManipError::InvalidConfig(format!(
            "{}: model version {version} unsupported (expected {MODEL_VERSION})",
            path.display()
        )));
    }
    let k: usize = parse_num(meta_field(&map, "k", path)?, "k", path, 0)?;
    if rows.len() != k {
        return Err(ManipError::InvalidConfig(format!(
            "{}: expected {k} rows, found {}",
            path.display(),
            rows.len()
        )));
    }
    let ncols = rows.first().map(|r| r.len()).unwrap_or(0);
    if rows.iter().any(|r| r.len() != ncols) {
        return Err(ManipError::InvalidConfig(format!("{}: ragged row lines", path.display())));
    }
    let flat: Vec<f64> = rows.iter().flatten().copied().collect();
    let lambda = DMatrix::from_row_slice(k, ncols, &flat);
    let model = ConstraintModel::new(lambda)?;
    let diag = ModelDiagnostics {
        k,
        objective: parse_num(meta_field(&map, "objective", path)?, "objective", path, 0)?,
        reference: parse_num(meta_field(&map, "reference", path)?, "reference", path, 0)?,
        config_hash: u64::from_str_radix(meta_field(&map, "config_hash", path)?, 16).map_err(|_| {
            ManipError::InvalidConfig(format!("{}: bad config_hash", path.display()))
        })?,
        chain: meta_field(&map, "chain", path)?.to_string(),
    };
    Ok((model, diag))
}

/// Writes a generic CSV table atomically.
pub fn write_csv(path: &Path, header: &str, rows: &[Vec<String>]) -> Result<()> {
    let mut out = String::from(header);
    out.push('\n');
    for row in rows {
        out.push_str(&row.join(","));
        out.push('\n');
    }
    write_atomic(path, &out)
}
