//! Pipeline configuration: a flat `key = value` file with paths resolved
//! relative to the config file's directory.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use crate::{fnv64, CliError, CliResult};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KAbsorbPolicy {
    /// max(10, ceil(2% of the smaller side))
    Auto,
    Fixed(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RwcMethodChoice {
    /// Exact solve for small transient sets, Monte Carlo otherwise.
    Auto,
    Exact,
    MonteCarlo,
}

#[derive(Debug, Clone)]
pub struct Config {
    // input paths
    pub events: Option<PathBuf>,
    pub keywords: Option<PathBuf>,
    pub periods: Option<PathBuf>,
    pub gazetteer: Option<PathBuf>,
    pub stoplist: Option<PathBuf>,
    pub country_langs: Option<PathBuf>,
    pub domains: Option<PathBuf>,
    pub status: Option<PathBuf>,
    pub labels: Option<PathBuf>,
    pub exclusions: Option<PathBuf>,
    pub shorteners: Option<PathBuf>,
    // thresholds
    pub reference_lang: String,
    pub min_users: u64,
    pub min_frac: f64,
    pub stance_threshold: u32,
    pub prune_rt: u64,
    pub prune_co: u64,
    pub dominance: f64,
    pub k_absorb: KAbsorbPolicy,
    pub n_walks: u64,
    pub rwc_method: RwcMethodChoice,
    pub sample_n: usize,
    pub sample_top: usize,
    pub sample_exclude_top: usize,
    pub min_lowcred_imports: u64,
    pub seed: u64,
    pub svg: bool,
    // raw key=value pairs in canonical order, for the digest
    canonical: BTreeMap<String, String>,
}

impl Default for Config {
    fn default() -> Self {
        Config {
            events: None,
            keywords: None,
            periods: None,
            gazetteer: None,
            stoplist: None,
            country_langs: None,
            domains: None,
            status: None,
            labels: None,
            exclusions: None,
            shorteners: None,
            reference_lang: "en".to_string(),
            min_users: 2000,
            min_frac: 0.01,
            stance_threshold: 10,
            prune_rt: 1,
            prune_co: 2,
            dominance: 0.9,
            k_absorb: KAbsorbPolicy::Auto,
            n_walks: 100_000,
            rwc_method: RwcMethodChoice::Auto,
            sample_n: 20,
            sample_top: 10,
            sample_exclude_top: 50,
            min_lowcred_imports: 10,
            seed: 42,
            svg: true,
            canonical: BTreeMap::new(),
        }
    }
}

impl Config {
    pub fn load(path: &Path) -> CliResult<Config> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read config {}: {e}", path.display())))?;
        let base = path.parent().unwrap_or(Path::new("."));
        Config::parse(&text, base)
    }

    pub fn parse(text: &str, base: &Path) -> CliResult<Config> {
        let mut cfg = Config::default();
        for (no, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                CliError::Config(format!("config line {}: expected key = value", no + 1))
            })?;
            let (key, value) = (key.trim(), value.trim());
            cfg.set(key, value, base)
                .map_err(|msg| CliError::Config(format!("config line {}: {msg}", no + 1)))?;
            cfg.canonical.insert(key.to_string(), value.to_string());
        }
        cfg.validate()?;
        Ok(cfg)
    }

    fn set(&mut self, key: &str, value: &str, base: &Path) -> Result<(), String> {
        let path = |v: &str| -> Option<PathBuf> { Some(base.join(v)) };
        let parse_num = |v: &str, what: &str| -> Result<f64, String> {
            v.parse().map_err(|_| format!("bad {what}: {v:?}"))
        };
        match key {
            "events" => self.events = path(value),
            "keywords" => self.keywords = path(value),
            "periods" => self.periods = path(value),
            "gazetteer" => self.gazetteer = path(value),
            "stoplist" => self.stoplist = path(value),
            "country_langs" => self.country_langs = path(value),
            "domains" => self.domains = path(value),
            "status" => self.status = path(value),
            "labels" => self.labels = path(value),
            "exclusions" => self.exclusions = path(value),
            "shorteners" => self.shorteners = path(value),
            "reference_lang" => self.reference_lang = value.to_lowercase(),
            "min_users" => self.min_users = parse_num(value, key)? as u64,
            "min_frac" => self.min_frac = parse_num(value, key)?,
            "stance_threshold" => self.stance_threshold = parse_num(value, key)? as u32,
            "prune_rt" => self.prune_rt = parse_num(value, key)? as u64,
            "prune_co" => self.prune_co = parse_num(value, key)? as u64,
            "dominance" => self.dominance = parse_num(value, key)?,
            "k_absorb" => {
                self.k_absorb = if value == "auto" {
                    KAbsorbPolicy::Auto
                } else {
                    KAbsorbPolicy::Fixed(parse_num(value, key)? as usize)
                }
            }
            "n_walks" => self.n_walks = parse_num(value, key)? as u64,
            "rwc_method" => {
                self.rwc_method = match value {
                    "auto" => RwcMethodChoice::Auto,
                    "exact" => RwcMethodChoice::Exact,
                    "montecarlo" => RwcMethodChoice::MonteCarlo,
                    other => return Err(format!("bad rwc_method: {other:?}")),
                }
            }
            "sample_n" => self.sample_n = parse_num(value, key)? as usize,
            "sample_top" => self.sample_top = parse_num(value, key)? as usize,
            "sample_exclude_top" => self.sample_exclude_top = parse_num(value, key)? as usize,
            "min_lowcred_imports" => self.min_lowcred_imports = parse_num(value, key)? as u64,
            "seed" => self.seed = parse_num(value, key)? as u64,
            "svg" => {
                self.svg = match value {
                    "true" => true,
                    "false" => false,
                    other => return Err(format!("bad svg flag: {other:?}")),
                }
            }
            other => return Err(format!("unknown key {other:?}")),
        }
        Ok(())
    }

    fn validate(&self) -> CliResult<()> {
        let bad = |msg: String| Err(CliError::Config(msg));
        if !(0.0..=1.0).contains(&self.min_frac) {
            return bad(format!(
                "min_frac must be within [0, 1], got {}",
                self.min_frac
            ));
        }
        if !(self.dominance > 0.0 && self.dominance <= 1.0) {
            return bad(format!(
                "dominance must be within (0, 1], got {}",
                self.dominance
            ));
        }
        if self.prune_rt < 1 || self.prune_co < 1 {
            return bad("prune thresholds must be at least 1".to_string());
        }
        if self.n_walks == 0 {
            return bad("n_walks must be at least 1".to_string());
        }
        if let KAbsorbPolicy::Fixed(0) = self.k_absorb {
            return bad("k_absorb must be at least 1".to_string());
        }
        if self.sample_n == 0 {
            return bad("sample_n must be at least 1".to_string());
        }
        Ok(())
    }

    /// Overrides the root seed (from `--seed`), keeping the digest honest.
    pub fn override_seed(&mut self, seed: u64) {
        self.seed = seed;
        self.canonical.insert("seed".to_string(), seed.to_string());
    }

    /// Digest of the effective configuration; stamped into every artifact.
    pub fn digest(&self) -> String {
        let canonical: String = self
            .canonical
            .iter()
            .map(|(k, v)| format!("{k}={v}\n"))
            .collect();
        format!("{:016x}", fnv64(canonical.as_bytes()))
    }

    pub fn require<'a>(&self, field: &'a Option<PathBuf>, key: &str) -> CliResult<&'a Path> {
        field
            .as_deref()
            .ok_or_else(|| CliError::Config(format!("config is missing the `{key}` path")))
    }
}
