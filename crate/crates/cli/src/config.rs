//! Flat `key=value` run configuration shared by every subcommand.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use echoaug::pipeline::Family;
use echoaug::repaint::RepaintConfig;

pub const CONFIG_ECHO: &str = "run_config.txt";

const KEYS: [&str; 11] = [
    "seed",
    "model",
    "train_steps",
    "steps",
    "jump",
    "resamples",
    "family",
    "variants",
    "workers",
    "toy_mean",
    "toy_variance",
];

/// Invalid configuration; reported as a usage error.
#[derive(Debug)]
pub struct ConfigError(pub String);

impl std::fmt::Display for ConfigError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for ConfigError {}

/// Values given on the command line; each overrides the config file.
#[derive(Debug, Default, Clone, clap::Args)]
pub struct Overrides {
    /// Flat key=value configuration file
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Master seed for every random stream
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Serialized denoiser (ONNX); the analytic toy denoiser is used when absent
    #[arg(long, global = true)]
    pub model: Option<PathBuf>,
    /// Diffusion steps the denoiser was trained with
    #[arg(long = "train-steps", global = true)]
    pub train_steps: Option<usize>,
    /// Inference steps after respacing
    #[arg(long, global = true)]
    pub steps: Option<usize>,
    /// RePaint jump length
    #[arg(long, global = true)]
    pub jump: Option<usize>,
    /// RePaint resamples per jump point
    #[arg(long, global = true)]
    pub resamples: Option<usize>,
    /// Upper bound on parallel workers
    #[arg(long, global = true)]
    pub workers: Option<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub seed: u64,
    pub model: Option<PathBuf>,
    pub train_steps: usize,
    pub repaint: RepaintConfig,
    pub family: Family,
    pub variants: usize,
    pub workers: usize,
    /// Mean of the toy denoiser's data distribution, model domain.
    pub toy_mean: f64,
    pub toy_variance: f64,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            seed: 0,
            model: None,
            train_steps: echoaug::diffusion::DEFAULT_TRAIN_STEPS,
            repaint: RepaintConfig::default(),
            family: Family::Combination,
            variants: 5,
            workers: 1,
            toy_mean: 0.0,
            toy_variance: 0.25,
        }
    }
}

fn parse<T: FromStr>(key: &str, raw: &str) -> Result<T, ConfigError> {
    raw.trim()
        .parse()
        .map_err(|_| ConfigError(format!("invalid value for `{key}`: {raw}")))
}

pub fn read_file(path: &Path) -> Result<BTreeMap<String, String>, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|e| ConfigError(format!("{}: {e}", path.display())))?;
    let mut out = BTreeMap::new();
    for (n, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| ConfigError(format!("{}:{}: expected key=value", path.display(), n + 1)))?;
        let k = k.trim();
        if !KEYS.contains(&k) {
            return Err(ConfigError(format!("{}:{}: unknown key `{k}`", path.display(), n + 1)));
        }
        out.insert(k.to_string(), v.trim().to_string());
    }
    Ok(out)
}

impl RunConfig {
    /// Defaults, then the config file, then command-line flags.
    pub fn resolve(
        flags: &Overrides,
        family: Option<Family>,
        variants: Option<usize>,
    ) -> Result<Self, ConfigError> {
        let mut c = RunConfig::default();
        if let Some(path) = &flags.config {
            for (k, v) in read_file(path)? {
                c.set(&k, &v)?;
            }
        }
        if let Some(v) = flags.seed {
            c.seed = v;
        }
        if let Some(v) = &flags.model {
            c.model = Some(v.clone());
        }
        if let Some(v) = flags.train_steps {
            c.train_steps = v;
        }
        if let Some(v) = flags.steps {
            c.repaint.inference_steps = v;
        }
        if let Some(v) = flags.jump {
            c.repaint.jump_length = v;
        }
        if let Some(v) = flags.resamples {
            c.repaint.resamples = v;
        }
        if let Some(v) = flags.workers {
            c.workers = v;
        }
        if let Some(v) = family {
            c.family = v;
        }
        if let Some(v) = variants {
            c.variants = v;
        }
        c.validate()?;
        Ok(c)
    }

    fn set(&mut self, key: &str, raw: &str) -> Result<(), ConfigError> {
        match key {
            "seed" => self.seed = parse(key, raw)?,
            "model" => self.model = (!raw.is_empty()).then(|| PathBuf::from(raw)),
            "train_steps" => self.train_steps = parse(key, raw)?,
            "steps" => self.repaint.inference_steps = parse(key, raw)?,
            "jump" => self.repaint.jump_length = parse(key, raw)?,
            "resamples" => self.repaint.resamples = parse(key, raw)?,
            "family" => {
                self.family = Family::parse(raw).ok_or_else(|| ConfigError(format!("unknown family `{raw}`")))?
            }
            "variants" => self.variants = parse(key, raw)?,
            "workers" => self.workers = parse(key, raw)?,
            "toy_mean" => self.toy_mean = parse(key, raw)?,
            "toy_variance" => self.toy_variance = parse(key, raw)?,
            _ => return Err(ConfigError(format!("unknown key `{key}`"))),
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.train_steps < 2 {
            return Err(ConfigError("train_steps must be at least 2".into()));
        }
        self.repaint
            .validate(self.train_steps)
            .map_err(|e| ConfigError(e.to_string()))?;
        if self.workers == 0 {
            return Err(ConfigError("workers must be at least 1".into()));
        }
        if !(self.toy_mean.is_finite() && (-1.0..=1.0).contains(&self.toy_mean)) {
            return Err(ConfigError("toy_mean must lie in [-1, 1]".into()));
        }
        if !(self.toy_variance.is_finite() && self.toy_variance > 0.0) {
            return Err(ConfigError("toy_variance must be > 0".into()));
        }
        Ok(())
    }

    pub fn render(&self) -> String {
        let mut s = String::new();
        let model = self.model.as_ref().map(|p| p.display().to_string()).unwrap_or_default();
        let _ = writeln!(s, "seed={}", self.seed);
        let _ = writeln!(s, "model={model}");
        let _ = writeln!(s, "train_steps={}", self.train_steps);
        let _ = writeln!(s, "steps={}", self.repaint.inference_steps);
        let _ = writeln!(s, "jump={}", self.repaint.jump_length);
        let _ = writeln!(s, "resamples={}", self.repaint.resamples);
        let _ = writeln!(s, "family={}", self.family.name());
        let _ = writeln!(s, "variants={}", self.variants);
        let _ = writeln!(s, "workers={}", self.workers);
        let _ = writeln!(s, "toy_mean={}", self.toy_mean);
        let _ = writeln!(s, "toy_variance={}", self.toy_variance);
        s
    }

    /// Writes the effective configuration next to a run's outputs.
    pub fn echo(&self, dir: &Path) -> std::io::Result<()> {
        std::fs::create_dir_all(dir)?;
        std::fs::write(dir.join(CONFIG_ECHO), self.render())
    }
}
