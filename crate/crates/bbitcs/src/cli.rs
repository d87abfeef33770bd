//! Command-line harness.
//!
//! Subcommands: `lloyd-max`, `tradeoff`, `breakdown`, `simulate`,
//! `scale-sim`. Exit status is 0 on success, 2 on a usage error and 1 on
//! a runtime failure. All numeric output uses `.` as the decimal
//! separator regardless of locale.

use crate::channels::{
    breakdown_table, breakdown_table_csv, breakdown_table_text, tradeoff_table,
    tradeoff_table_csv, tradeoff_table_text, NoiseModel,
};
use crate::experiment::{
    emit_csv, rows_to_csv, run_experiment, summarize, summary_to_csv, ExperimentConfig,
};
use crate::quantizer::{
    channel_constants, distortion, lloyd_max_design, DEFAULT_MAX_ITER, DEFAULT_TOL,
};
use std::path::{Path, PathBuf};

const USAGE: &str = "bbitcs - linear recovery from b-bit quantized measurements

USAGE:
  bbitcs lloyd-max --bits B --std S [--tol T] [--max-iter N]
  bbitcs tradeoff --bits B1,B2,... (--sigma S | --flip-random P | --flip-adversarial P) [--csv PATH]
  bbitcs breakdown --bits B1,B2,... [--csv PATH]
  bbitcs simulate (--config FILE.json | inline flags) [--out PATH] [--summary PATH]
  bbitcs scale-sim [inline flags] [--out PATH] [--summary PATH]

SIMULATE / SCALE-SIM FLAGS (override config file values):
  --class sparse|fused|group|lowrank   --n N --groups L --rows R --cols C
  --bits LIST          bit depths, e.g. 1,2
  --sigma LIST         additive noise grid
  --flip-random LIST   random bin-flip probability grid
  --flip-adversarial LIST
  --f LIST             signal strength grid
  --s LIST             sparsity / rank grid
  --replicates N       replicates per grid cell (default 20)
  --seed N             base seed (default 0)
  --estimate-scale     also run the plug-in scale MLE (simulate only;
                       scale-sim implies it)
";

pub fn run_from_env() -> i32 {
    let args: Vec<String> = std::env::args().skip(1).collect();
    run(&args)
}

pub fn run(args: &[String]) -> i32 {
    match dispatch(args) {
        Ok(()) => 0,
        Err(CliError::Usage(msg)) => {
            eprintln!("error: {msg}");
            eprintln!();
            eprintln!("{USAGE}");
            2
        }
        Err(CliError::Runtime(msg)) => {
            eprintln!("error: {msg}");
            1
        }
    }
}

enum CliError {
    Usage(String),
    Runtime(String),
}

fn runtime(e: impl std::fmt::Display) -> CliError {
    CliError::Runtime(e.to_string())
}

fn dispatch(args: &[String]) -> Result<(), CliError> {
    let Some(command) = args.first() else {
        return Err(CliError::Usage("missing subcommand".into()));
    };
    let rest = &args[1..];
    match command.as_str() {
        "lloyd-max" => cmd_lloyd_max(rest),
        "tradeoff" => cmd_tradeoff(rest),
        "breakdown" => cmd_breakdown(rest),
        "simulate" => cmd_simulate(rest, false),
        "scale-sim" => cmd_simulate(rest, true),
        "--help" | "-h" | "help" => {
            println!("{USAGE}");
            Ok(())
        }
        other => Err(CliError::Usage(format!("unknown subcommand '{other}'"))),
    }
}

/// Minimal flag parser: every flag is `--name value` except booleans.
struct Flags {
    pairs: Vec<(String, Option<String>)>,
}

const BOOLEAN_FLAGS: &[&str] = &["estimate-scale"];

impl Flags {
    fn parse(args: &[String]) -> Result<Self, CliError> {
        let mut pairs = Vec::new();
        let mut i = 0;
        while i < args.len() {
            let arg = &args[i];
            let Some(name) = arg.strip_prefix("--") else {
                return Err(CliError::Usage(format!("unexpected argument '{arg}'")));
            };
            if BOOLEAN_FLAGS.contains(&name) {
                pairs.push((name.to_string(), None));
                i += 1;
                continue;
            }
            let Some(value) = args.get(i + 1) else {
                return Err(CliError::Usage(format!("flag '--{name}' needs a value")));
            };
            pairs.push((name.to_string(), Some(value.clone())));
            i += 2;
        }
        Ok(Flags { pairs })
    }

    fn get(&self, name: &str) -> Option<&str> {
        self.pairs
            .iter()
            .rev()
            .find(|(n, _)| n == name)
            .and_then(|(_, v)| v.as_deref())
    }

    fn has(&self, name: &str) -> bool {
        self.pairs.iter().any(|(n, _)| n == name)
    }

    fn expect_known(&self, known: &[&str]) -> Result<(), CliError> {
        for (name, _) in &self.pairs {
            if !known.contains(&name.as_str()) {
                return Err(CliError::Usage(format!("unknown flag '--{name}'")));
            }
        }
        Ok(())
    }
}

fn parse_number<T: std::str::FromStr>(flags: &Flags, name: &str) -> Result<Option<T>, CliError>
where
    T::Err: std::fmt::Display,
{
    match flags.get(name) {
        None => Ok(None),
        Some(text) => text
            .parse::<T>()
            .map(Some)
            .map_err(|e| CliError::Usage(format!("bad value for '--{name}': {e}"))),
    }
}

fn parse_list<T: std::str::FromStr>(flags: &Flags, name: &str) -> Result<Option<Vec<T>>, CliError>
where
    T::Err: std::fmt::Display,
{
    match flags.get(name) {
        None => Ok(None),
        Some(text) => text
            .split(',')
            .map(|tok| {
                tok.trim()
                    .parse::<T>()
                    .map_err(|e| CliError::Usage(format!("bad value '{tok}' in '--{name}': {e}")))
            })
            .collect::<Result<Vec<T>, CliError>>()
            .map(Some),
    }
}

fn cmd_lloyd_max(args: &[String]) -> Result<(), CliError> {
    let flags = Flags::parse(args)?;
    flags.expect_known(&["bits", "std", "tol", "max-iter"])?;
    let bits: u32 = parse_number(&flags, "bits")?
        .ok_or_else(|| CliError::Usage("lloyd-max needs '--bits'".into()))?;
    let std: f64 = parse_number(&flags, "std")?
        .ok_or_else(|| CliError::Usage("lloyd-max needs '--std'".into()))?;
    let tol: f64 = parse_number(&flags, "tol")?.unwrap_or(DEFAULT_TOL);
    let max_iter: usize = parse_number(&flags, "max-iter")?.unwrap_or(DEFAULT_MAX_ITER);
    let q = lloyd_max_design(bits, std, tol, max_iter).map_err(runtime)?;
    println!("quantizer: {}", q.serialize());
    println!("thresholds: {:?}", q.thresholds());
    println!("levels:     {:?}", q.levels());
    println!("distortion(std={std}): {:.6}", distortion(&q, std));
    let constants = channel_constants(&q, &NoiseModel::AdditiveGaussian { sigma: 0.0 });
    println!(
        "clean-channel constants: lambda = {:.6}, Psi = {:.6}, Omega = {:.6}",
        constants.lambda, constants.psi, constants.omega
    );
    Ok(())
}

fn noise_from_flags(flags: &Flags) -> Result<Option<NoiseModel>, CliError> {
    let mut found = None;
    if let Some(sigma) = parse_number::<f64>(flags, "sigma")? {
        found = Some(NoiseModel::AdditiveGaussian { sigma });
    }
    if let Some(p) = parse_number::<f64>(flags, "flip-random")? {
        if found.is_some() {
            return Err(CliError::Usage("choose exactly one noise model".into()));
        }
        found = Some(NoiseModel::RandomBinFlip { p });
    }
    if let Some(p) = parse_number::<f64>(flags, "flip-adversarial")? {
        if found.is_some() {
            return Err(CliError::Usage("choose exactly one noise model".into()));
        }
        found = Some(NoiseModel::AdversarialBinFlip { p });
    }
    Ok(found)
}

fn cmd_tradeoff(args: &[String]) -> Result<(), CliError> {
    let flags = Flags::parse(args)?;
    flags.expect_known(&["bits", "sigma", "flip-random", "flip-adversarial", "csv"])?;
    let bits: Vec<u32> = parse_list(&flags, "bits")?
        .ok_or_else(|| CliError::Usage("tradeoff needs '--bits'".into()))?;
    let model = noise_from_flags(&flags)?
        .ok_or_else(|| CliError::Usage("tradeoff needs a noise model".into()))?;
    model.validate().map_err(runtime)?;
    let rows = tradeoff_table(&bits, &model).map_err(runtime)?;
    print!("{}", tradeoff_table_text(&rows, &model));
    if let Some(path) = flags.get("csv") {
        write_text(Path::new(path), &tradeoff_table_csv(&rows, &model))?;
    }
    Ok(())
}

fn cmd_breakdown(args: &[String]) -> Result<(), CliError> {
    let flags = Flags::parse(args)?;
    flags.expect_known(&["bits", "csv"])?;
    let bits: Vec<u32> = parse_list(&flags, "bits")?
        .ok_or_else(|| CliError::Usage("breakdown needs '--bits'".into()))?;
    let table = breakdown_table(&bits).map_err(runtime)?;
    print!("{}", breakdown_table_text(&table));
    if let Some(path) = flags.get("csv") {
        write_text(Path::new(path), &breakdown_table_csv(&table))?;
    }
    Ok(())
}

fn cmd_simulate(args: &[String], scale_sim: bool) -> Result<(), CliError> {
    let flags = Flags::parse(args)?;
    flags.expect_known(&[
        "config",
        "class",
        "n",
        "groups",
        "rows",
        "cols",
        "bits",
        "sigma",
        "flip-random",
        "flip-adversarial",
        "f",
        "s",
        "replicates",
        "seed",
        "estimate-scale",
        "out",
        "summary",
    ])?;

    let mut config = match flags.get("config") {
        Some(path) => ExperimentConfig::from_json_file(Path::new(path)).map_err(runtime)?,
        None => ExperimentConfig {
            class: "sparse".into(),
            n: Some(500),
            groups: None,
            rows: None,
            cols: None,
            bit_depths: if scale_sim { vec![2] } else { vec![1, 2] },
            noise: "additive".into(),
            noise_params: if scale_sim {
                vec![0.0, 1.0, 2.0]
            } else {
                vec![0.0]
            },
            signal_strengths: vec![0.5, 1.0, 1.5, 2.0, 2.5, 3.0, 3.5, 4.0],
            sparsities: vec![10],
            replicates: 20,
            seed: 0,
            estimate_scale: scale_sim,
            output: None,
        },
    };

    // Inline flags override file values.
    if let Some(class) = flags.get("class") {
        config.class = class.to_string();
    }
    if let Some(n) = parse_number(&flags, "n")? {
        config.n = Some(n);
    }
    if let Some(groups) = parse_number(&flags, "groups")? {
        config.groups = Some(groups);
    }
    if let Some(rows) = parse_number(&flags, "rows")? {
        config.rows = Some(rows);
    }
    if let Some(cols) = parse_number(&flags, "cols")? {
        config.cols = Some(cols);
    }
    if let Some(bits) = parse_list(&flags, "bits")? {
        config.bit_depths = bits;
    }
    if let Some(sigmas) = parse_list(&flags, "sigma")? {
        config.noise = "additive".into();
        config.noise_params = sigmas;
    }
    if let Some(ps) = parse_list(&flags, "flip-random")? {
        config.noise = "flip-random".into();
        config.noise_params = ps;
    }
    if let Some(ps) = parse_list(&flags, "flip-adversarial")? {
        config.noise = "flip-adversarial".into();
        config.noise_params = ps;
    }
    if let Some(f) = parse_list(&flags, "f")? {
        config.signal_strengths = f;
    }
    if let Some(s) = parse_list(&flags, "s")? {
        config.sparsities = s;
    }
    if let Some(replicates) = parse_number(&flags, "replicates")? {
        config.replicates = replicates;
    }
    if let Some(seed) = parse_number(&flags, "seed")? {
        config.seed = seed;
    }
    if flags.has("estimate-scale") || scale_sim {
        config.estimate_scale = true;
    }

    config.validate().map_err(runtime)?;
    let rows = run_experiment(&config).map_err(runtime)?;
    let destination = flags
        .get("out")
        .map(str::to_string)
        .or_else(|| config.output.clone());
    match destination {
        Some(path) => {
            emit_csv(&rows, &PathBuf::from(&path)).map_err(runtime)?;
            eprintln!("wrote {} rows to {path}", rows.len());
        }
        None => print!("{}", rows_to_csv(&rows)),
    }
    if let Some(path) = flags.get("summary") {
        write_text(Path::new(path), &summary_to_csv(&summarize(&rows)))?;
        eprintln!("wrote summary to {path}");
    }
    Ok(())
}

fn write_text(path: &Path, text: &str) -> Result<(), CliError> {
    std::fs::write(path, text)
        .map_err(|e| CliError::Runtime(format!("{}: {e}", path.display())))
}
