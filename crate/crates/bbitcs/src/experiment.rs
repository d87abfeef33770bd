//! Reproducible Monte-Carlo experiment harness.
//!
//! A configuration spans a grid over sparsity `s`, signal strength `f`,
//! the noise parameter and the bit depth, each cell replicated a fixed
//! number of times. Rows come out in grid-major order (`s`, then `f`,
//! then noise parameter, then `b`, then replicate) and every replicate
//! owns a stream seeded by `mix_seed(base, grid_index, replicate)`, so a
//! rerun of the same configuration is byte-identical regardless of how
//! the work is scheduled.

use crate::channels::{apply_bin_flips, fmt_real, NoiseModel};
use crate::quantizer::{channel_constants, lloyd_max_design, DEFAULT_MAX_ITER, DEFAULT_TOL};
use crate::recovery::{
    l2_error, marginal_statistic, recover_direction, simulate_measurements, Ensemble,
};
use crate::scale::{bin_counts, bin_intervals, combine_direction_scale, scale_mle_noiseless, scale_mle_noisy};
use crate::signals::{design_dimensions, sample_signal, SignalClass};
use crate::stat::rng::{mix_seed, RandomStream};
use serde::{Deserialize, Serialize};
use std::path::Path;

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct ExperimentConfig {
    /// One of `sparse`, `fused`, `group`, `lowrank`.
    pub class: String,
    /// Ambient dimension for vector classes.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
    /// Number of groups for the group class.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub groups: Option<usize>,
    /// Matrix dimensions for the low-rank class.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rows: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cols: Option<usize>,
    pub bit_depths: Vec<u32>,
    /// One of `additive`, `flip-random`, `flip-adversarial`.
    pub noise: String,
    /// Sigma grid for additive noise, flip-probability grid otherwise.
    pub noise_params: Vec<f64>,
    pub signal_strengths: Vec<f64>,
    pub sparsities: Vec<usize>,
    pub replicates: usize,
    pub seed: u64,
    /// Run the plug-in scale MLE per replicate (needs `b >= 2`).
    #[serde(default)]
    pub estimate_scale: bool,
    /// Default CSV destination; a `--out` flag takes precedence.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ResultRow {
    pub class: String,
    pub b: u32,
    pub noise: String,
    pub noise_param: f64,
    pub s: usize,
    pub f: f64,
    pub m: usize,
    pub replicate: usize,
    pub seed: u64,
    pub error_direction: f64,
    pub error_combined: Option<f64>,
    pub psi_hat: Option<f64>,
    pub sigma_hat: Option<f64>,
}

#[derive(Debug)]
pub enum ExperimentError {
    InvalidConfig(String),
    Io { path: String, source: std::io::Error },
    Parse(String),
    Runtime(String),
}

impl std::fmt::Display for ExperimentError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ExperimentError::InvalidConfig(msg) => write!(f, "invalid config: {msg}"),
            ExperimentError::Io { path, source } => write!(f, "{path}: {source}"),
            ExperimentError::Parse(msg) => write!(f, "parse error: {msg}"),
            ExperimentError::Runtime(msg) => write!(f, "{msg}"),
        }
    }
}

impl std::error::Error for ExperimentError {}

impl ExperimentConfig {
    pub fn from_json_file(path: &Path) -> Result<Self, ExperimentError> {
        let text = std::fs::read_to_string(path).map_err(|source| ExperimentError::Io {
            path: path.display().to_string(),
            source,
        })?;
        let config: ExperimentConfig =
            serde_json::from_str(&text).map_err(|e| ExperimentError::Parse(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<(), ExperimentError> {
        let bad = |msg: String| Err(ExperimentError::InvalidConfig(msg));
        if self.bit_depths.is_empty()
            || self.noise_params.is_empty()
            || self.signal_strengths.is_empty()
            || self.sparsities.is_empty()
        {
            return bad("all grids must be nonempty".into());
        }
        if self.replicates == 0 {
            return bad("replicate count must be at least 1".into());
        }
        if self.bit_depths.iter().any(|&b| b < 1) {
            return bad("bit depths must be at least 1".into());
        }
        self.noise_model(self.noise_params[0])?;
        for &s in &self.sparsities {
            self.class_for(s)?;
        }
        Ok(())
    }

    /// The signal class at sparsity/rank `s`.
    pub fn class_for(&self, s: usize) -> Result<SignalClass, ExperimentError> {
        let need = |field: &str, v: Option<usize>| {
            v.ok_or_else(|| {
                ExperimentError::InvalidConfig(format!("class '{}' needs '{field}'", self.class))
            })
        };
        let class = match self.class.as_str() {
            "sparse" => SignalClass::sparse(s, need("n", self.n)?),
            "fused" => SignalClass::fused_sparse(s, need("n", self.n)?),
            "group" => {
                SignalClass::contiguous_groups(need("n", self.n)?, need("groups", self.groups)?, s)
            }
            "lowrank" => SignalClass::low_rank(need("rows", self.rows)?, need("cols", self.cols)?, s),
            other => {
                return Err(ExperimentError::InvalidConfig(format!(
                    "unknown class '{other}' (expected sparse, fused, group or lowrank)"
                )))
            }
        };
        class.map_err(|e| ExperimentError::InvalidConfig(e.to_string()))
    }

    pub fn noise_model(&self, parameter: f64) -> Result<NoiseModel, ExperimentError> {
        let model = match self.noise.as_str() {
            "additive" => NoiseModel::AdditiveGaussian { sigma: parameter },
            "flip-random" => NoiseModel::RandomBinFlip { p: parameter },
            "flip-adversarial" => NoiseModel::AdversarialBinFlip { p: parameter },
            other => {
                return Err(ExperimentError::InvalidConfig(format!(
                    "unknown noise '{other}' (expected additive, flip-random or flip-adversarial)"
                )))
            }
        };
        model
            .validate()
            .map_err(|e| ExperimentError::InvalidConfig(e.to_string()))?;
        Ok(model)
    }

    pub fn grid_size(&self) -> usize {
        self.sparsities.len()
            * self.signal_strengths.len()
            * self.noise_params.len()
            * self.bit_depths.len()
    }
}

/// Reference constant `lambda_1` for the design formulas: the one-bit
/// clean value `2/pi` scaled by the channel (`(2/pi)/sqrt(1+sigma^2)`
/// under additive noise, `(2/pi)(1-2p)` under either flip mechanism).
pub fn lambda_reference(model: &NoiseModel) -> f64 {
    let one_bit = lloyd_max_design(1, 1.0, DEFAULT_TOL, DEFAULT_MAX_ITER).expect("b = 1 designs");
    channel_constants(&one_bit, model).lambda
}

/// Runs the full grid; one row per (cell, replicate).
///
/// Flip grid points past the one-bit breakdown (`lambda_ref <= 0`) have
/// no usable design size; their rows carry `m = 0` and NaN errors so the
/// run can continue.
pub fn run_experiment(config: &ExperimentConfig) -> Result<Vec<ResultRow>, ExperimentError> {
    config.validate()?;
    let mut rows = Vec::with_capacity(config.grid_size() * config.replicates);
    let mut grid_index = 0u64;
    for &s in &config.sparsities {
        let class = config.class_for(s)?;
        for &f in &config.signal_strengths {
            for &noise_param in &config.noise_params {
                let model = config.noise_model(noise_param)?;
                for &b in &config.bit_depths {
                    run_cell(
                        config,
                        &class,
                        s,
                        f,
                        noise_param,
                        &model,
                        b,
                        grid_index,
                        &mut rows,
                    )?;
                    grid_index += 1;
                }
            }
        }
    }
    Ok(rows)
}

#[allow(clippy::too_many_arguments)]
fn run_cell(
    config: &ExperimentConfig,
    class: &SignalClass,
    s: usize,
    f: f64,
    noise_param: f64,
    model: &NoiseModel,
    b: u32,
    grid_index: u64,
    rows: &mut Vec<ResultRow>,
) -> Result<(), ExperimentError> {
    let lambda_ref = lambda_reference(model);
    let base_row = |replicate: usize, seed: u64| ResultRow {
        class: config.class.clone(),
        b,
        noise: config.noise.clone(),
        noise_param,
        s,
        f,
        m: 0,
        replicate,
        seed,
        error_direction: f64::NAN,
        error_combined: None,
        psi_hat: None,
        sigma_hat: None,
    };
    if lambda_ref <= 0.0 {
        // Past the one-bit breakdown: flag the cell and keep going.
        for replicate in 0..config.replicates {
            let seed = mix_seed(config.seed, grid_index, replicate as u64);
            rows.push(base_row(replicate, seed));
        }
        return Ok(());
    }
    let (m, _beta) = design_dimensions(class, f, lambda_ref)
        .map_err(|e| ExperimentError::Runtime(e.to_string()))?;
    let quantizer = lloyd_max_design(b, 1.0, DEFAULT_TOL, DEFAULT_MAX_ITER)
        .map_err(|e| ExperimentError::Runtime(e.to_string()))?;
    let run_err = |e: &dyn std::fmt::Display| ExperimentError::Runtime(e.to_string());
    for replicate in 0..config.replicates {
        let seed = mix_seed(config.seed, grid_index, replicate as u64);
        let mut stream = RandomStream::new(seed);
        let signal =
            sample_signal(class, f, m, lambda_ref, &mut stream).map_err(|e| run_err(&e))?;
        let sigma = match model {
            NoiseModel::AdditiveGaussian { sigma } => *sigma,
            _ => 0.0,
        };
        let mut set = simulate_measurements(&signal, m, sigma, &quantizer, Ensemble::Isotropic, &mut stream)
            .map_err(|e| run_err(&e))?;
        if model.is_flip() {
            let flipped = apply_bin_flips(set.observations(), &quantizer, model, &mut stream)
                .map_err(|e| run_err(&e))?;
            set = set.with_observations(flipped).map_err(|e| run_err(&e))?;
        }
        let eta = marginal_statistic(&set);
        let estimate = recover_direction(&eta, class).map_err(|e| run_err(&e))?;
        let direction = signal.direction();
        let error_direction = l2_error(estimate.values(), &direction).map_err(|e| run_err(&e))?;

        let mut row = base_row(replicate, seed);
        row.m = m;
        row.error_direction = error_direction;
        if config.estimate_scale && b >= 2 {
            let counts = bin_counts(set.observations(), &quantizer).map_err(|e| run_err(&e))?;
            let init_sigma = match scale_mle_noiseless(&counts, &quantizer) {
                Ok(noiseless) => noiseless.psi_hat.max(1e-3),
                Err(_) => 1.0,
            };
            let intervals = bin_intervals(set.observations(), &quantizer).map_err(|e| run_err(&e))?;
            let z = set.design().matvec(estimate.values());
            let joint = scale_mle_noisy(&z, &intervals, init_sigma).map_err(|e| run_err(&e))?;
            let combined = combine_direction_scale(estimate.values(), joint.psi_hat);
            row.error_combined = Some(l2_error(&combined, signal.values()).map_err(|e| run_err(&e))?);
            row.psi_hat = Some(joint.psi_hat);
            row.sigma_hat = joint.sigma_hat;
        }
        rows.push(row);
    }
    Ok(())
}

pub const CSV_HEADER: &str = "class,b,noise,noise_param,s,f,m,replicate,seed,error_direction,error_combined,psi_hat,sigma_hat";

fn fmt_opt(v: Option<f64>) -> String {
    v.map_or(String::new(), fmt_real)
}

impl ResultRow {
    pub fn to_csv_line(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{},{},{},{},{},{}",
            self.class,
            self.b,
            self.noise,
            fmt_real(self.noise_param),
            self.s,
            fmt_real(self.f),
            self.m,
            self.replicate,
            self.seed,
            fmt_real(self.error_direction),
            fmt_opt(self.error_combined),
            fmt_opt(self.psi_hat),
            fmt_opt(self.sigma_hat),
        )
    }

    pub fn parse_csv_line(line: &str) -> Result<Self, ExperimentError> {
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 13 {
            return Err(ExperimentError::Parse(format!(
                "expected 13 fields, got {} in '{line}'",
                fields.len()
            )));
        }
        let real = |s: &str| -> Result<f64, ExperimentError> {
            if s == "nan" {
                return Ok(f64::NAN);
            }
            s.parse::<f64>()
                .map_err(|e| ExperimentError::Parse(format!("bad real '{s}': {e}")))
        };
        let opt_real = |s: &str| -> Result<Option<f64>, ExperimentError> {
            if s.is_empty() {
                Ok(None)
            } else {
                real(s).map(Some)
            }
        };
        let int = |s: &str| -> Result<u64, ExperimentError> {
            s.parse::<u64>()
                .map_err(|e| ExperimentError::Parse(format!("bad integer '{s}': {e}")))
        };
        Ok(ResultRow {
            class: fields[0].to_string(),
            b: int(fields[1])? as u32,
            noise: fields[2].to_string(),
            noise_param: real(fields[3])?,
            s: int(fields[4])? as usize,
            f: real(fields[5])?,
            m: int(fields[6])? as usize,
            replicate: int(fields[7])? as usize,
            seed: int(fields[8])?,
            error_direction: real(fields[9])?,
            error_combined: opt_real(fields[10])?,
            psi_hat: opt_real(fields[11])?,
            sigma_hat: opt_real(fields[12])?,
        })
    }
}

pub fn rows_to_csv(rows: &[ResultRow]) -> String {
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for row in rows {
        out.push_str(&row.to_csv_line());
        out.push('\n');
    }
    out
}

pub fn parse_csv(text: &str) -> Result<Vec<ResultRow>, ExperimentError> {
    let mut lines = text.lines();
    match lines.next() {
        Some(header) if header == CSV_HEADER => {}
        other => {
            return Err(ExperimentError::Parse(format!(
                "bad header: {other:?}"
            )))
        }
    }
    lines
        .filter(|l| !l.trim().is_empty())
        .map(ResultRow::parse_csv_line)
        .collect()
}

pub fn emit_csv(rows: &[ResultRow], path: &Path) -> Result<(), ExperimentError> {
    std::fs::write(path, rows_to_csv(rows)).map_err(|source| ExperimentError::Io {
        path: path.display().to_string(),
        source,
    })
}

/// Per-cell mean and standard deviation of the direction error.
#[derive(Debug, Clone, PartialEq)]
pub struct SummaryRow {
    pub class: String,
    pub b: u32,
    pub noise: String,
    pub noise_param: f64,
    pub s: usize,
    pub f: f64,
    pub m: usize,
    pub replicates: usize,
    pub mean_error: f64,
    pub sd_error: f64,
}

/// Aggregates rows cell by cell, preserving first-appearance order.
pub fn summarize(rows: &[ResultRow]) -> Vec<SummaryRow> {
    let mut order: Vec<(String, u32, String, u64, usize, u64)> = Vec::new();
    let mut buckets: std::collections::HashMap<(String, u32, String, u64, usize, u64), Vec<f64>> =
        std::collections::HashMap::new();
    let mut meta: std::collections::HashMap<(String, u32, String, u64, usize, u64), usize> =
        std::collections::HashMap::new();
    for row in rows {
        let key = (
            row.class.clone(),
            row.b,
            row.noise.clone(),
            row.noise_param.to_bits(),
            row.s,
            row.f.to_bits(),
        );
        if !buckets.contains_key(&key) {
            order.push(key.clone());
            meta.insert(key.clone(), row.m);
        }
        buckets.entry(key).or_default().push(row.error_direction);
    }
    order
        .into_iter()
        .map(|key| {
            let errors = &buckets[&key];
            let count = errors.len();
            let mean = errors.iter().sum::<f64>() / count as f64;
            let var = if count > 1 {
                errors.iter().map(|e| (e - mean) * (e - mean)).sum::<f64>() / (count - 1) as f64
            } else {
                0.0
            };
            SummaryRow {
                class: key.0.clone(),
                b: key.1,
                noise: key.2.clone(),
                noise_param: f64::from_bits(key.3),
                s: key.4,
                f: f64::from_bits(key.5),
                m: meta[&key],
                replicates: count,
                mean_error: mean,
                sd_error: var.sqrt(),
            }
        })
        .collect()
}

pub fn summary_to_csv(rows: &[SummaryRow]) -> String {
    let mut out =
        String::from("class,b,noise,noise_param,s,f,m,replicates,mean_error,sd_error\n");
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{}\n",
            r.class,
            r.b,
            r.noise,
            fmt_real(r.noise_param),
            r.s,
            fmt_real(r.f),
            r.m,
            r.replicates,
            fmt_real(r.mean_error),
            fmt_real(r.sd_error),
        ));
    }
    out
}
