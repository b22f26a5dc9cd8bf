//! Run configuration: a flat `section.key = value` text format chosen so
//! any language can parse it with string splitting alone.
//!
//! Grammar, one entry per line:
//!
//! ```text
//! file       = { line }
//! line       = blank | comment | entry
//! comment    = "#" anything
//! entry      = section "." key " = " value
//! ```
//!
//! Unknown keys are rejected. Every run record embeds the fully resolved
//! configuration for provenance.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::noise::{Mode, NoiseProfile, SveMode};
use crate::spectral::SelectionSource;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Generator {
    Circles,
    Csv,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DataConfig {
    pub generator: Generator,
    pub n: usize,
    pub radius_inner: f64,
    pub radius_outer: f64,
    pub noise_sd: f64,
    pub csv_path: Option<PathBuf>,
    pub csv_labels: bool,
    /// Divide all points by the smallest row norm before building the graph.
    pub rescale: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GraphConfig {
    /// Distance threshold; when absent it defaults to
    /// 0.6 * (radius_outer - radius_inner) for the circles generator.
    pub d_min: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SpectralConfig {
    pub k: usize,
    /// Safety factor of the eigenvalue-selection threshold.
    pub threshold_margin: f64,
    /// Which eigenvalue set picks the k lowest pairs in quantum mode.
    pub selection: SelectionSource,
    /// Hand unit-normalized embedding rows to the clustering stage.
    pub normalize_rows: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ClusterConfig {
    pub max_iters: usize,
    pub tol: f64,
    pub restarts: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SweepConfig {
    pub repetitions: usize,
    pub sweep: Vec<usize>,
    pub output_dir: Option<PathBuf>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CostConfig {
    pub c_qram: f64,
    pub c1: f64,
    pub c2: f64,
    pub c3: f64,
    pub c4: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunConfig {
    pub data: DataConfig,
    pub graph: GraphConfig,
    pub spectral: SpectralConfig,
    pub cluster: ClusterConfig,
    pub noise: NoiseProfile,
    pub run: SweepConfig,
    pub cost: CostConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            data: DataConfig {
                generator: Generator::Circles,
                n: 600,
                radius_inner: 1.0,
                radius_outer: 2.0,
                noise_sd: 0.05,
                csv_path: None,
                csv_labels: false,
                rescale: true,
            },
            graph: GraphConfig { d_min: None },
            spectral: SpectralConfig {
                k: 2,
                threshold_margin: 1.1,
                selection: SelectionSource::Exact,
                normalize_rows: true,
            },
            cluster: ClusterConfig { max_iters: 100, tol: 1e-4, restarts: 10 },
            noise: NoiseProfile::quantum(42),
            run: SweepConfig {
                repetitions: 10,
                sweep: vec![300, 400, 500, 600, 700, 800, 900, 1000],
                output_dir: None,
            },
            cost: CostConfig { c_qram: 1.0, c1: 1.0, c2: 1.0, c3: 1.0, c4: 1.0 },
        }
    }
}

impl RunConfig {
    /// Effective distance threshold for this configuration.
    pub fn d_min(&self) -> Result<f64> {
        match (self.graph.d_min, self.data.generator) {
            (Some(v), _) => Ok(v),
            (None, Generator::Circles) => {
                Ok(0.6 * (self.data.radius_outer - self.data.radius_inner))
            }
            (None, Generator::Csv) => {
                Err(Error::config("graph.d_min is required for CSV datasets"))
            }
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.noise.validate()?;
        if self.run.repetitions == 0 {
            return Err(Error::config("run.repetitions must be >= 1"));
        }
        if self.run.sweep.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::config("run.sweep values must be strictly ascending"));
        }
        if self.spectral.k == 0 {
            return Err(Error::config("spectral.k must be >= 1"));
        }
        if !(self.spectral.threshold_margin > 1.0) {
            return Err(Error::config("spectral.threshold_margin must be > 1"));
        }
        if self.cluster.max_iters == 0 || self.cluster.restarts == 0 {
            return Err(Error::config("cluster.max_iters and cluster.restarts must be >= 1"));
        }
        if !(self.cluster.tol > 0.0) {
            return Err(Error::config("cluster.tol must be > 0"));
        }
        if self.data.generator == Generator::Csv {
            match &self.data.csv_path {
                None => return Err(Error::config("data.csv_path is required for the csv generator")),
                Some(p) if !p.exists() => {
                    return Err(Error::config(format!("data.csv_path {} does not exist", p.display())))
                }
                _ => {}
            }
        }
        let _ = self.d_min()?;
        Ok(())
    }

    /// Parse the flat key=value format.
    pub fn parse(text: &str) -> Result<RunConfig> {
        let mut cfg = RunConfig::default();
        let mut sweep_set = false;
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::config(format!("line {}: expected key = value", lineno + 1)))?;
            let key = key.trim();
            let value = value.trim();
            let err = |msg: &str| Error::config(format!("line {}: {key}: {msg}", lineno + 1));
            let parse_f64 =
                |v: &str| v.parse::<f64>().map_err(|_| err("expected a real number"));
            let parse_usize =
                |v: &str| v.parse::<usize>().map_err(|_| err("expected a nonnegative integer"));
            let parse_bool = |v: &str| match v {
                "true" => Ok(true),
                "false" => Ok(false),
                _ => Err(err("expected true or false")),
            };
            match key {
                "data.generator" => {
                    cfg.data.generator = match value {
                        "circles" => Generator::Circles,
                        "csv" => Generator::Csv,
                        _ => return Err(err("expected circles or csv")),
                    }
                }
                "data.n" => cfg.data.n = parse_usize(value)?,
                "data.radius_inner" => cfg.data.radius_inner = parse_f64(value)?,
                "data.radius_outer" => cfg.data.radius_outer = parse_f64(value)?,
                "data.noise_sd" => cfg.data.noise_sd = parse_f64(value)?,
                "data.csv_path" => cfg.data.csv_path = Some(PathBuf::from(value)),
                "data.csv_labels" => cfg.data.csv_labels = parse_bool(value)?,
                "data.rescale" => cfg.data.rescale = parse_bool(value)?,
                "graph.d_min" => cfg.graph.d_min = Some(parse_f64(value)?),
                "spectral.k" => cfg.spectral.k = parse_usize(value)?,
                "spectral.threshold_margin" => cfg.spectral.threshold_margin = parse_f64(value)?,
                "spectral.selection" => {
                    cfg.spectral.selection = match value {
                        "exact" => SelectionSource::Exact,
                        "noisy" => SelectionSource::Noisy,
                        _ => return Err(err("expected exact or noisy")),
                    }
                }
                "spectral.normalize_rows" => cfg.spectral.normalize_rows = parse_bool(value)?,
                "cluster.max_iters" => cfg.cluster.max_iters = parse_usize(value)?,
                "cluster.tol" => cfg.cluster.tol = parse_f64(value)?,
                "cluster.restarts" => cfg.cluster.restarts = parse_usize(value)?,
                "noise.mode" => {
                    cfg.noise = match value {
                        "classical" => NoiseProfile::classical(cfg.noise.seed),
                        "quantum" => NoiseProfile {
                            mode: Mode::Quantum,
                            seed: cfg.noise.seed,
                            ..NoiseProfile::quantum(cfg.noise.seed)
                        },
                        _ => return Err(err("expected classical or quantum")),
                    }
                }
                "noise.eps_dist" => cfg.noise.eps_dist = parse_f64(value)?,
                "noise.eps_b" => cfg.noise.eps_b = parse_f64(value)?,
                "noise.eps_lambda" => cfg.noise.eps_lambda = parse_f64(value)?,
                "noise.norm_rel_err" => cfg.noise.norm_rel_err = parse_f64(value)?,
                "noise.delta" => cfg.noise.delta = parse_f64(value)?,
                "noise.seed" => {
                    cfg.noise.seed =
                        value.parse::<u64>().map_err(|_| err("expected a 64-bit integer"))?
                }
                "noise.sve_mode" => {
                    cfg.noise.sve_mode = match value {
                        "absolute" => SveMode::Absolute,
                        "relative" => SveMode::Relative,
                        _ => return Err(err("expected absolute or relative")),
                    }
                }
                "run.repetitions" => cfg.run.repetitions = parse_usize(value)?,
                "run.sweep" => {
                    let vals: std::result::Result<Vec<usize>, _> =
                        value.split(',').map(|v| v.trim().parse::<usize>()).collect();
                    cfg.run.sweep = vals.map_err(|_| err("expected comma-separated integers"))?;
                    sweep_set = true;
                }
                "run.output_dir" => cfg.run.output_dir = Some(PathBuf::from(value)),
                "cost.c_qram" => cfg.cost.c_qram = parse_f64(value)?,
                "cost.c1" => cfg.cost.c1 = parse_f64(value)?,
                "cost.c2" => cfg.cost.c2 = parse_f64(value)?,
                "cost.c3" => cfg.cost.c3 = parse_f64(value)?,
                _ => return Err(Error::config(format!("line {}: unknown key {key}", lineno + 1))),
            }
            if key == "cost.c4" {
                cfg.cost.c4 = parse_f64(value)?;
            }
        }
        let _ = sweep_set;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<RunConfig> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::config(format!("cannot read {}: {e}", path.display())))?;
        RunConfig::parse(&text)
    }

    /// Serialize every resolved key back to the flat format; parsing the
    /// result reproduces this configuration.
    pub fn to_flat(&self) -> String {
        let mut map: BTreeMap<&str, String> = BTreeMap::new();
        map.insert(
            "data.generator",
            match self.data.generator {
                Generator::Circles => "circles".into(),
                Generator::Csv => "csv".into(),
            },
        );
        map.insert("data.n", self.data.n.to_string());
        map.insert("data.radius_inner", self.data.radius_inner.to_string());
        map.insert("data.radius_outer", self.data.radius_outer.to_string());
        map.insert("data.noise_sd", self.data.noise_sd.to_string());
        if let Some(p) = &self.data.csv_path {
            map.insert("data.csv_path", p.display().to_string());
        }
        map.insert("data.csv_labels", self.data.csv_labels.to_string());
        map.insert("data.rescale", self.data.rescale.to_string());
        if let Some(d) = self.graph.d_min {
            map.insert("graph.d_min", d.to_string());
        }
        map.insert("spectral.k", self.spectral.k.to_string());
        map.insert("spectral.threshold_margin", self.spectral.threshold_margin.to_string());
        map.insert(
            "spectral.selection",
            match self.spectral.selection {
                SelectionSource::Exact => "exact".into(),
                SelectionSource::Noisy => "noisy".into(),
            },
        );
        map.insert("spectral.normalize_rows", self.spectral.normalize_rows.to_string());
        map.insert("cluster.max_iters", self.cluster.max_iters.to_string());
        map.insert("cluster.tol", self.cluster.tol.to_string());
        map.insert("cluster.restarts", self.cluster.restarts.to_string());
        map.insert(
            "noise.mode",
            match self.noise.mode {
                Mode::Classical => "classical".into(),
                Mode::Quantum => "quantum".into(),
            },
        );
        map.insert("noise.eps_dist", self.noise.eps_dist.to_string());
        map.insert("noise.eps_b", self.noise.eps_b.to_string());
        map.insert("noise.eps_lambda", self.noise.eps_lambda.to_string());
        map.insert("noise.norm_rel_err", self.noise.norm_rel_err.to_string());
        map.insert("noise.delta", self.noise.delta.to_string());
        map.insert("noise.seed", self.noise.seed.to_string());
        map.insert(
            "noise.sve_mode",
            match self.noise.sve_mode {
                SveMode::Absolute => "absolute".into(),
                SveMode::Relative => "relative".into(),
            },
        );
        map.insert("run.repetitions", self.run.repetitions.to_string());
        map.insert(
            "run.sweep",
            self.run.sweep.iter().map(|v| v.to_string()).collect::<Vec<_>>().join(","),
        );
        if let Some(p) = &self.run.output_dir {
            map.insert("run.output_dir", p.display().to_string());
        }
        map.insert("cost.c_qram", self.cost.c_qram.to_string());
        map.insert("cost.c1", self.cost.c1.to_string());
        map.insert("cost.c2", self.cost.c2.to_string());
        map.insert("cost.c3", self.cost.c3.to_string());
        map.insert("cost.c4", self.cost.c4.to_string());
        let mut out = String::new();
        for (key, value) in map {
            out.push_str(key);
            out.push_str(" = ");
            out.push_str(&value);
            out.push('\n');
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_validate() {
        RunConfig::default().validate().unwrap();
    }

    #[test]
    fn parse_minimal_and_round_trip() {
        let text = "\
# comment line
noise.mode = quantum
noise.seed = 7
data.n = 300
spectral.k = 2
run.sweep = 300, 400, 500
";
        let cfg = RunConfig::parse(text).unwrap();
        assert_eq!(cfg.noise.seed, 7);
        assert_eq!(cfg.data.n, 300);
        assert_eq!(cfg.run.sweep, vec![300, 400, 500]);
        let flat = cfg.to_flat();
        let reparsed = RunConfig::parse(&flat).unwrap();
        assert_eq!(serde_json::to_string(&cfg).unwrap(), serde_json::to_string(&reparsed).unwrap());
    }

    #[test]
    fn noise_profile_round_trips_verbatim() {
        let text = "\
noise.mode = quantum
noise.eps_dist = 0.25
noise.eps_b = 0.05
noise.eps_lambda = 0.4
noise.norm_rel_err = 0.02
noise.delta = 0.33
noise.seed = 99
noise.sve_mode = absolute
";
        let cfg = RunConfig::parse(text).unwrap();
        let reparsed = RunConfig::parse(&cfg.to_flat()).unwrap();
        assert_eq!(cfg.noise, reparsed.noise);
        assert_eq!(cfg.noise.eps_dist, 0.25);
        assert_eq!(cfg.noise.sve_mode, SveMode::Absolute);
    }

    #[test]
    fn rejects_unknown_keys_and_bad_values() {
        assert!(RunConfig::parse("bogus.key = 1\n").is_err());
        assert!(RunConfig::parse("data.n = not-a-number\n").is_err());
        assert!(RunConfig::parse("run.sweep = 500, 400\n").is_err());
        assert!(RunConfig::parse("noise.mode = sideways\n").is_err());
    }

    #[test]
    fn classical_mode_zeroes_noise() {
        let cfg = RunConfig::parse("noise.mode = classical\n").unwrap();
        assert_eq!(cfg.noise.eps_dist, 0.0);
        assert_eq!(cfg.noise.delta, 0.0);
    }

    #[test]
    fn csv_generator_requires_existing_path() {
        assert!(RunConfig::parse("data.generator = csv\n").is_err());
        assert!(RunConfig::parse("data.generator = csv\ndata.csv_path = /nonexistent.csv\ngraph.d_min = 1\n")
            .is_err());
    }

    #[test]
    fn default_d_min_follows_radii() {
        let cfg = RunConfig::default();
        assert!((cfg.d_min().unwrap() - 0.6).abs() < 1e-12);
        let cfg2 = RunConfig::parse("graph.d_min = 0.8\n").unwrap();
        assert!((cfg2.d_min().unwrap() - 0.8).abs() < 1e-12);
    }
}
