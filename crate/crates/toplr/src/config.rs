//! `key = value` experiment configuration files and bundled presets.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use toplr_core::experiments::{ExperimentDesign, KSpec, Theorem, Tolerances};

use crate::{CliError, CliResult};

/// Keys accepted in configuration files and as flag overrides.
pub const KEYS: &[&str] = &[
    "family",
    "gamma0",
    "u",
    "n",
    "k",
    "epsilon",
    "rate",
    "theorem",
    "replications",
    "seed",
    "alpha",
    "u_grid",
    "tol_mean",
    "tol_variance",
    "tol_ks",
    "tol_shift",
    "workers",
    "out",
    "raw_csv",
];

const PRESETS: &[(&str, &str)] = &[
    ("theorem1-weibull", include_str!("../presets/theorem1-weibull.cfg")),
    ("theorem2-log-weibull", include_str!("../presets/theorem2-log-weibull.cfg")),
    ("lemma3-weibull", include_str!("../presets/lemma3-weibull.cfg")),
    ("size-power-weibull", include_str!("../presets/size-power-weibull.cfg")),
];

pub fn preset_names() -> impl Iterator<Item = &'static str> {
    PRESETS.iter().map(|p| p.0)
}

pub fn preset(name: &str) -> CliResult<&'static str> {
    let name = name.strip_suffix(".cfg").unwrap_or(name);
    PRESETS.iter().find(|p| p.0 == name).map(|p| p.1).ok_or_else(|| {
        let known: Vec<_> = preset_names().collect();
        CliError::Input(format!("unknown preset `{name}`; known: {}", known.join(", ")))
    })
}

/// Raw key/value pairs, validated against [`KEYS`].
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RawConfig(BTreeMap<String, String>);

impl RawConfig {
    pub fn parse(text: &str) -> CliResult<Self> {
        let mut map = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let lineno = i + 1;
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| CliError::Input(format!("line {lineno}: expected `key = value`")))?;
            let (key, value) = (key.trim(), value.trim());
            check_key(key).map_err(|e| CliError::Input(format!("line {lineno}: {e}")))?;
            if value.is_empty() {
                return Err(CliError::Input(format!("line {lineno}: empty value for `{key}`")));
            }
            if map.insert(key.to_string(), value.to_string()).is_some() {
                return Err(CliError::Input(format!("line {lineno}: duplicate key `{key}`")));
            }
        }
        Ok(RawConfig(map))
    }

    pub fn read(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        Self::parse(&text).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
    }

    /// Set `key`, replacing any value from the file.
    pub fn set(&mut self, key: &str, value: impl ToString) -> CliResult<()> {
        check_key(key).map_err(CliError::Input)?;
        self.0.insert(key.to_string(), value.to_string());
        Ok(())
    }

    pub fn remove(&mut self, key: &str) {
        self.0.remove(key);
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.0.get(key).map(String::as_str)
    }

    fn num<T: std::str::FromStr>(&self, key: &str) -> CliResult<Option<T>> {
        self.get(key)
            .map(|v| {
                v.parse()
                    .map_err(|_| CliError::Input(format!("`{key}`: cannot parse `{v}`")))
            })
            .transpose()
    }

    fn require<T: std::str::FromStr>(&self, key: &str) -> CliResult<T> {
        self.num(key)?
            .ok_or_else(|| CliError::Input(format!("missing required key `{key}`")))
    }

    fn list(&self, key: &str) -> CliResult<Option<Vec<f64>>> {
        self.get(key)
            .map(|v| {
                v.split(',')
                    .map(|s| {
                        s.trim()
                            .parse()
                            .map_err(|_| CliError::Input(format!("`{key}`: cannot parse `{s}`")))
                    })
                    .collect()
            })
            .transpose()
    }
}

fn check_key(key: &str) -> Result<(), String> {
    if KEYS.contains(&key) {
        Ok(())
    } else {
        Err(format!("unknown key `{key}`"))
    }
}

/// A validated experiment run.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentSettings {
    pub design: ExperimentDesign,
    pub u_grid: Option<Vec<f64>>,
    pub workers: Option<usize>,
    pub out: Option<PathBuf>,
    pub raw_csv: Option<PathBuf>,
}

/// Build the design. `theorem` defaults to `t1`, `u` to 1. With `epsilon`,
/// `rate` picks `log` (`k = (ln(n/k))^ε`) or `power` (`k = n^ε`); the default
/// is `log` for `t1` and `power` otherwise.
pub fn settings(raw: &RawConfig) -> CliResult<ExperimentSettings> {
    let theorem = match raw.get("theorem") {
        None => Theorem::T1,
        Some(s) => Theorem::parse(s)
            .ok_or_else(|| CliError::Input(format!("`theorem`: expected t1, t2 or l3, got `{s}`")))?,
    };
    let family: String = raw.require("family")?;
    let gamma0: f64 = raw.require("gamma0")?;
    let n: u64 = raw.require("n")?;
    let u: f64 = raw.num("u")?.unwrap_or(1.0);
    let k = match (raw.num::<u64>("k")?, raw.num::<f64>("epsilon")?) {
        (Some(_), Some(_)) => return Err(CliError::Input("give either `k` or `epsilon`, not both".into())),
        (None, None) => return Err(CliError::Input("one of `k` or `epsilon` is required".into())),
        (Some(k), None) => KSpec::Fixed(k),
        (None, Some(eps)) => match raw.get("rate") {
            Some("log") => KSpec::LogRate(eps),
            Some("power") => KSpec::PowerRate(eps),
            None if theorem == Theorem::T1 => KSpec::LogRate(eps),
            None => KSpec::PowerRate(eps),
            Some(other) => {
                return Err(CliError::Input(format!("`rate`: expected log or power, got `{other}`")));
            }
        },
    };
    let mut design = ExperimentDesign::new(&family, gamma0, u, n, k, theorem);
    if let Some(r) = raw.num("replications")? {
        design.replications = r;
    }
    if let Some(s) = raw.num("seed")? {
        design.seed = s;
    }
    if let Some(a) = raw.list("alpha")? {
        design.alphas = a;
    }
    let defaults = Tolerances::defaults(theorem);
    design.tolerances = Tolerances {
        mean: raw.num("tol_mean")?.or(defaults.mean),
        variance: raw.num("tol_variance")?.or(defaults.variance),
        ks: raw.num("tol_ks")?.or(defaults.ks),
        shift: raw.num("tol_shift")?.or(defaults.shift),
    };
    design.validate()?;
    let workers: Option<usize> = raw.num("workers")?;
    if workers == Some(0) {
        return Err(CliError::Input("`workers` must be positive".into()));
    }
    Ok(ExperimentSettings {
        design,
        u_grid: raw.list("u_grid")?,
        workers,
        out: raw.get("out").map(PathBuf::from),
        raw_csv: raw.get("raw_csv").map(PathBuf::from),
    })
}
