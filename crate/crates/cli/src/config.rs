//! `key = value` run configuration with command-line overrides.

use std::fmt::Write as _;
use std::path::PathBuf;

use helmholtz::bihm::Objective;
use helmholtz::data_io::Binarization;
use helmholtz::trainer::TrainConfig;

use crate::CliError;

/// Every key a config file may contain, in the order the resolved file lists them.
pub const KEYS: &[&str] = &[
    "layers",
    "objective",
    "alpha",
    "particles",
    "epochs",
    "lr",
    "l1",
    "batch_size",
    "seed",
    "eval_particles",
    "eval_every",
    "binarization",
    "subset",
    "data_dir",
    "out",
];

#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub layers: Vec<usize>,
    /// Objective family; a `chernoff-approx` objective takes its weight from `alpha`.
    pub objective: Objective,
    pub alpha: f64,
    pub particles: usize,
    pub epochs: usize,
    pub lr: f64,
    pub l1: f64,
    pub batch_size: usize,
    pub seed: u64,
    pub eval_particles: usize,
    pub eval_every: usize,
    pub binarization: Binarization,
    pub subset: Option<usize>,
    pub data_dir: PathBuf,
    pub out: PathBuf,
}

impl Default for RunConfig {
    fn default() -> Self {
        let t = TrainConfig::new(vec![784, 300, 10], Objective::ChernoffApprox(0.2), 1);
        Self {
            layers: t.layer_sizes,
            objective: t.objective,
            alpha: 0.2,
            particles: t.particles,
            epochs: t.epochs,
            lr: t.learning_rate,
            l1: t.l1,
            batch_size: t.batch_size,
            seed: t.seed,
            eval_particles: t.eval_particles,
            eval_every: t.eval_every,
            binarization: Binarization::default(),
            subset: None,
            data_dir: PathBuf::from("data/mnist"),
            out: PathBuf::from("runs/latest"),
        }
    }
}

fn parse<T: std::str::FromStr>(key: &str, value: &str) -> Result<T, CliError> {
    value
        .trim()
        .parse()
        .map_err(|_| CliError::Config(format!("`{key}`: cannot parse `{value}`")))
}

pub fn parse_layers(value: &str) -> Result<Vec<usize>, CliError> {
    value.split(',').map(|v| parse("layers", v)).collect()
}

impl RunConfig {
    /// Applies one `key = value` setting.
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), CliError> {
        let value = value.trim();
        match key {
            "layers" => self.layers = parse_layers(value)?,
            "objective" => {
                self.objective = value
                    .parse()
                    .map_err(|e| CliError::Config(format!("`objective`: {e}")))?;
                if let Objective::ChernoffApprox(a) = self.objective {
                    if value.contains(':') {
                        self.alpha = a;
                    }
                }
            }
            "alpha" => self.alpha = parse(key, value)?,
            "particles" => self.particles = parse(key, value)?,
            "epochs" => self.epochs = parse(key, value)?,
            "lr" => self.lr = parse(key, value)?,
            "l1" => self.l1 = parse(key, value)?,
            "batch_size" => self.batch_size = parse(key, value)?,
            "seed" => self.seed = parse(key, value)?,
            "eval_particles" => self.eval_particles = parse(key, value)?,
            "eval_every" => self.eval_every = parse(key, value)?,
            "binarization" => {
                self.binarization = value
                    .parse()
                    .map_err(|e| CliError::Config(format!("`binarization`: {e}")))?
            }
            "subset" => {
                self.subset = match value {
                    "" | "none" => None,
                    v => Some(parse(key, v)?),
                }
            }
            "data_dir" => self.data_dir = PathBuf::from(value),
            "out" => self.out = PathBuf::from(value),
            _ => return Err(CliError::Config(format!("unknown key `{key}`"))),
        }
        Ok(())
    }

    /// Parses a config file body; `#` starts a comment, blank lines are ignored.
    pub fn apply_text(&mut self, text: &str) -> Result<(), CliError> {
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| CliError::Config(format!("line {}: expected `key = value`", i + 1)))?;
            self.set(k.trim(), v)?;
        }
        Ok(())
    }

    /// The objective with `alpha` applied.
    pub fn resolved_objective(&self) -> Objective {
        match self.objective {
            Objective::ChernoffApprox(_) => Objective::ChernoffApprox(self.alpha),
            o => o,
        }
    }

    pub fn train_config(&self) -> Result<TrainConfig, CliError> {
        let mut t = TrainConfig::new(self.layers.clone(), self.resolved_objective(), self.seed);
        t.learning_rate = self.lr;
        t.l1 = self.l1;
        t.particles = self.particles;
        t.epochs = self.epochs;
        t.batch_size = self.batch_size;
        t.eval_particles = self.eval_particles;
        t.eval_every = self.eval_every;
        t.validate().map_err(|e| CliError::Config(e.to_string()))?;
        Ok(t)
    }

    /// Canonical text form; feeding it back through [`Self::apply_text`] reproduces `self`.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let layers = self.layers.iter().map(|v| v.to_string()).collect::<Vec<_>>().join(",");
        let objective = match self.objective {
            Objective::ChernoffApprox(_) => "chernoff-approx".to_string(),
            o => o.to_string(),
        };
        let subset = self.subset.map(|v| v.to_string()).unwrap_or_else(|| "none".into());
        let values = [
            layers,
            objective,
            self.alpha.to_string(),
            self.particles.to_string(),
            self.epochs.to_string(),
            self.lr.to_string(),
            self.l1.to_string(),
            self.batch_size.to_string(),
            self.seed.to_string(),
            self.eval_particles.to_string(),
            self.eval_every.to_string(),
            self.binarization.to_string(),
            subset,
            self.data_dir.display().to_string(),
            self.out.display().to_string(),
        ];
        for (k, v) in KEYS.iter().zip(values) {
            writeln!(s, "{k} = {v}").expect("writing to a String");
        }
        s
    }
}
