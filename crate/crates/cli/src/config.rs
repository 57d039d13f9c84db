//! `key=value` experiment configuration.

use std::collections::BTreeMap;
use std::path::PathBuf;

/// Configuration errors; the command-line tool maps these to exit code 2.
#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("line {line}: {msg}")]
    Syntax { line: usize, msg: String },
    #[error("unknown key `{0}`")]
    UnknownKey(String),
    #[error("key `{key}`: {msg}")]
    Value { key: String, msg: String },
    #[error("invalid configuration: {0}")]
    Invalid(String),
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
}

/// Parameters of an encode/recover/bench run. Defaults reproduce the two-dimensional desk-scale study.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub seed: u64,
    pub dimension: usize,
    pub omega: Vec<f64>,
    /// Rows of the basis matrix `V`; its columns are rescaled to unit norm on use.
    pub basis_rows: Vec<Vec<f64>>,
    pub t1: f64,
    pub t2_list: Vec<f64>,
    pub sigma_list: Vec<f64>,
    pub lambda: f64,
    pub h: f64,
    pub band_width: f64,
    pub diff_order: usize,
    pub trials: usize,
    pub domain_min: Vec<f64>,
    pub domain_max: Vec<f64>,
    pub oversample_diag: usize,
    pub oversample_q: usize,
    pub out_dir: PathBuf,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            seed: 20240611,
            dimension: 2,
            omega: vec![1.0, 1.0],
            basis_rows: vec![vec![0.97, 0.32], vec![0.25, 0.95]],
            t1: 0.02,
            t2_list: vec![0.005, 0.01, 0.04, 0.08],
            sigma_list: vec![0.04, 0.053, 0.067, 0.08],
            lambda: 0.3,
            h: 0.19,
            band_width: 0.32,
            diff_order: 1,
            trials: 25,
            domain_min: vec![-5.0, -5.0],
            domain_max: vec![5.0, 5.0],
            oversample_diag: 8,
            oversample_q: 8,
            out_dir: PathBuf::from("out"),
        }
    }
}

fn parse_f64(key: &str, s: &str) -> Result<f64, ConfigError> {
    s.trim().parse().map_err(|_| ConfigError::Value {
        key: key.into(),
        msg: format!("`{}` is not a number", s.trim()),
    })
}

fn parse_usize(key: &str, s: &str) -> Result<usize, ConfigError> {
    s.trim().parse().map_err(|_| ConfigError::Value {
        key: key.into(),
        msg: format!("`{}` is not a non-negative integer", s.trim()),
    })
}

fn parse_list(key: &str, s: &str) -> Result<Vec<f64>, ConfigError> {
    s.split(',').map(|p| parse_f64(key, p)).collect()
}

impl ExperimentConfig {
    /// Parses `key=value` lines over the defaults. `#` starts a comment; vectors are comma-separated.
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let mut entries: BTreeMap<String, String> = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap().trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or_else(|| ConfigError::Syntax {
                line: i + 1,
                msg: "expected key=value".into(),
            })?;
            let k = k.trim().to_string();
            if entries.insert(k.clone(), v.trim().to_string()).is_some() {
                return Err(ConfigError::Syntax {
                    line: i + 1,
                    msg: format!("duplicate key `{k}`"),
                });
            }
        }
        let mut cfg = Self::default();
        if let Some(v) = entries.get("dimension") {
            cfg.dimension = parse_usize("dimension", v)?;
        }
        let dim = cfg.dimension;
        let mut rows: BTreeMap<usize, Vec<f64>> = BTreeMap::new();
        let mut scalar_domain = (None, None);
        for (k, v) in &entries {
            match k.as_str() {
                "dimension" => {}
                "seed" => {
                    cfg.seed = v.parse().map_err(|_| ConfigError::Value {
                        key: k.clone(),
                        msg: format!("`{v}` is not an unsigned integer"),
                    })?
                }
                "omega" => cfg.omega = parse_list(k, v)?,
                "t1" => cfg.t1 = parse_f64(k, v)?,
                "t2_list" => cfg.t2_list = parse_list(k, v)?,
                "sigma_list" => cfg.sigma_list = parse_list(k, v)?,
                "lambda" => cfg.lambda = parse_f64(k, v)?,
                "h" => cfg.h = parse_f64(k, v)?,
                "band_width" => cfg.band_width = parse_f64(k, v)?,
                "diff_order" => cfg.diff_order = parse_usize(k, v)?,
                "trials" => cfg.trials = parse_usize(k, v)?,
                "domain_min" => {
                    let l = parse_list(k, v)?;
                    scalar_domain.0 = Some(l);
                }
                "domain_max" => {
                    let l = parse_list(k, v)?;
                    scalar_domain.1 = Some(l);
                }
                "oversample_diag" => cfg.oversample_diag = parse_usize(k, v)?,
                "oversample_q" => cfg.oversample_q = parse_usize(k, v)?,
                "out_dir" => cfg.out_dir = PathBuf::from(v),
                other => {
                    let idx = other
                        .strip_prefix("basis_row_")
                        .and_then(|s| s.parse::<usize>().ok())
                        .filter(|&i| i >= 1 && i <= dim)
                        .ok_or_else(|| ConfigError::UnknownKey(other.to_string()))?;
                    rows.insert(idx, parse_list(k, v)?);
                }
            }
        }
        let broadcast = |l: Vec<f64>| if l.len() == 1 { vec![l[0]; dim] } else { l };
        if let Some(l) = scalar_domain.0 {
            cfg.domain_min = broadcast(l);
        } else if dim != 2 {
            cfg.domain_min = vec![-5.0; dim];
        }
        if let Some(l) = scalar_domain.1 {
            cfg.domain_max = broadcast(l);
        } else if dim != 2 {
            cfg.domain_max = vec![5.0; dim];
        }
        if !rows.is_empty() {
            if rows.len() != dim {
                return Err(ConfigError::Invalid(format!(
                    "{} basis rows given for dimension {dim}",
                    rows.len()
                )));
            }
            cfg.basis_rows = rows.into_values().collect();
        } else if dim != 2 {
            cfg.basis_rows = (0..dim)
                .map(|i| (0..dim).map(|j| if i == j { 1.0 } else { 0.0 }).collect())
                .collect();
        }
        if !entries.contains_key("omega") && dim != 2 {
            cfg.omega = vec![1.0; dim];
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_file(path: &std::path::Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::parse(&text)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let d = self.dimension;
        let bad = |m: String| Err(ConfigError::Invalid(m));
        if d < 1 {
            return bad("dimension must be at least 1".into());
        }
        if self.omega.len() != d {
            return bad(format!(
                "omega has {} entries for dimension {d}",
                self.omega.len()
            ));
        }
        if self.basis_rows.len() != d || self.basis_rows.iter().any(|r| r.len() != d) {
            return bad(format!("basis must be {d}x{d}"));
        }
        if self.domain_min.len() != d || self.domain_max.len() != d {
            return bad("domain bounds must have one entry per dimension".into());
        }
        let positive = |name: &str, v: f64| -> Result<(), ConfigError> {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(ConfigError::Invalid(format!(
                    "{name} must be positive, got {v}"
                )))
            }
        };
        for &w in &self.omega {
            positive("omega", w)?;
        }
        positive("t1", self.t1)?;
        positive("lambda", self.lambda)?;
        positive("band_width", self.band_width)?;
        positive("h", self.h)?;
        if self.t2_list.is_empty() || self.sigma_list.is_empty() {
            return bad("t2_list and sigma_list must be non-empty".into());
        }
        for &t in &self.t2_list {
            positive("t2_list entry", t)?;
        }
        if self
            .sigma_list
            .iter()
            .any(|&s| !(s >= 0.0 && s.is_finite()))
        {
            return bad("sigma_list entries must be non-negative".into());
        }
        if !(self.h < 2.0 * self.lambda / 3.0) {
            return bad(format!("h = {} must be below 2*lambda/3", self.h));
        }
        if self.diff_order < 1 {
            return bad("diff_order must be at least 1".into());
        }
        if self.trials < 1 || self.oversample_diag < 1 || self.oversample_q < 1 {
            return bad("trials and oversampling factors must be positive".into());
        }
        if self
            .domain_min
            .iter()
            .zip(&self.domain_max)
            .any(|(a, b)| !(a < b))
        {
            return bad("domain_min must be below domain_max".into());
        }
        if self.domain_min[0] > 0.0 || self.domain_max[0] < 0.0 {
            return bad("domain must contain x_1 = 0".into());
        }
        let nyq = std::f64::consts::PI;
        if self.t1 >= nyq / self.omega[0] {
            return bad("t1 violates the Nyquist condition".into());
        }
        for &t in &self.t2_list {
            for w in &self.omega[1..] {
                if t >= nyq / w {
                    return bad(format!("t2 = {t} violates the Nyquist condition"));
                }
            }
            let r = self.band_width / t;
            if d > 1 && ((r - r.round()).abs() > 1e-9 * r.max(1.0) || r.round() < 1.0) {
                return bad(format!("band_width / t2 = {r} is not an integer"));
            }
        }
        Ok(())
    }
}
