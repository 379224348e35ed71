//! Experiment descriptions: CLI flags layered over `key = value` config
//! files, with the CLI taking precedence.

use crate::error::{HarnessError, Result};
use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OutputFormat {
    Csv,
    Json,
}

#[derive(Debug, Clone)]
pub struct ExperimentSpec {
    pub system: String,
    pub method: String,
    pub h: f64,
    pub h_list: Vec<f64>,
    pub t_final: f64,
    pub q0: Option<Vec<f64>>,
    pub p0: Option<Vec<f64>>,
    pub tol: Option<f64>,
    pub out: Option<PathBuf>,
    pub format: OutputFormat,
    pub seed: u64,
}

impl Default for ExperimentSpec {
    fn default() -> Self {
        ExperimentSpec {
            system: "pendulum".to_string(),
            method: "svi-mid-trap".to_string(),
            h: 0.1,
            h_list: vec![0.2, 0.1, 0.05, 0.025],
            t_final: 2.0,
            q0: None,
            p0: None,
            tol: None,
            out: None,
            format: OutputFormat::Csv,
            seed: 0,
        }
    }
}

impl ExperimentSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.h > 0.0) {
            return Err(HarnessError::invalid(format!(
                "h must be positive, got {}",
                self.h
            )));
        }
        if self.t_final < self.h {
            return Err(HarnessError::invalid(format!(
                "T = {} must be at least one step h = {}",
                self.t_final, self.h
            )));
        }
        if self.h_list.iter().any(|&h| h <= 0.0) {
            return Err(HarnessError::invalid("h-list entries must be positive"));
        }
        Ok(())
    }
}

fn parse_f64(key: &str, value: &str) -> Result<f64> {
    value
        .trim()
        .parse::<f64>()
        .map_err(|_| HarnessError::invalid(format!("`{key}` expects a real, got `{value}`")))
}

fn parse_f64_list(key: &str, value: &str) -> Result<Vec<f64>> {
    value.split(',').map(|tok| parse_f64(key, tok)).collect()
}

/// Read a `key = value` config file. Blank lines and `#` comments allowed.
pub fn read_config(path: &Path) -> Result<BTreeMap<String, String>> {
    let text = std::fs::read_to_string(path)?;
    let mut map = BTreeMap::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            return Err(HarnessError::invalid(format!(
                "{}:{}: expected `key = value`, got `{raw}`",
                path.display(),
                lineno + 1
            )));
        };
        map.insert(key.trim().to_string(), value.trim().to_string());
    }
    Ok(map)
}

/// Apply one setting by flag/config key.
pub fn apply_setting(spec: &mut ExperimentSpec, key: &str, value: &str) -> Result<()> {
    match key {
        "system" => spec.system = value.to_string(),
        "method" => spec.method = value.to_string(),
        "h" => spec.h = parse_f64(key, value)?,
        "h-list" => spec.h_list = parse_f64_list(key, value)?,
        "T" => spec.t_final = parse_f64(key, value)?,
        "q0" => spec.q0 = Some(parse_f64_list(key, value)?),
        "p0" => spec.p0 = Some(parse_f64_list(key, value)?),
        "tol" => spec.tol = Some(parse_f64(key, value)?),
        "out" => spec.out = Some(PathBuf::from(value)),
        "format" => {
            spec.format = match value {
                "csv" => OutputFormat::Csv,
                "json" => OutputFormat::Json,
                other => {
                    return Err(HarnessError::invalid(format!(
                        "`format` is csv or json, got `{other}`"
                    )))
                }
            }
        }
        "seed" => {
            spec.seed = value.trim().parse::<u64>().map_err(|_| {
                HarnessError::invalid(format!("`seed` expects an integer, got `{value}`"))
            })?
        }
        other => return Err(HarnessError::invalid(format!("unknown key `{other}`"))),
    }
    Ok(())
}

/// Build a spec from CLI arguments (after the subcommand). `--config <path>`
/// is read first so that explicit flags override the file.
pub fn spec_from_args(args: &[String]) -> Result<ExperimentSpec> {
    spec_from_args_with(ExperimentSpec::default(), args)
}

/// `spec_from_args` starting from subcommand-specific defaults.
pub fn spec_from_args_with(base: ExperimentSpec, args: &[String]) -> Result<ExperimentSpec> {
    let mut flags: Vec<(String, String)> = Vec::new();
    let mut config_path: Option<PathBuf> = None;
    let mut iter = args.iter().peekable();
    while let Some(arg) = iter.next() {
        let Some(name) = arg.strip_prefix("--") else {
            return Err(HarnessError::invalid(format!(
                "unexpected argument `{arg}`"
            )));
        };
        let (key, value) = match name.split_once('=') {
            Some((k, v)) => (k.to_string(), v.to_string()),
            None => {
                let value = iter.next().ok_or_else(|| {
                    HarnessError::invalid(format!("flag `--{name}` needs a value"))
                })?;
                (name.to_string(), value.clone())
            }
        };
        if key == "config" {
            config_path = Some(PathBuf::from(value));
        } else {
            flags.push((key, value));
        }
    }
    let mut spec = base;
    if let Some(path) = config_path {
        for (key, value) in read_config(&path)? {
            apply_setting(&mut spec, &key, &value)?;
        }
    }
    for (key, value) in &flags {
        apply_setting(&mut spec, key, value)?;
    }
    spec.validate()?;
    Ok(spec)
}
