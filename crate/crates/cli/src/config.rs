//! Run configuration: built-in defaults, overridden by flags, overridden by a TOML file.

use std::path::PathBuf;

use seqdim::basis::BasisConfig;
use seqdim::sdp::Tolerances;
use seqdim::Scenario;
use serde::{Deserialize, Serialize};

pub const DEFAULT_SEED: u64 = 1;
pub const DEFAULT_SAMPLES: usize = 2000;
pub const DEFAULT_HUNT_BUDGET: usize = 500;

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub command: Option<String>,
    pub scenario: Option<Scenario>,
    pub scenarios: Option<Vec<Scenario>>,
    pub dims: Option<Vec<usize>>,
    pub m_list: Option<Vec<usize>>,
    pub l_list: Option<Vec<usize>>,
    pub d: Option<usize>,
    pub d_sample: Option<usize>,
    pub d_test: Option<usize>,
    pub k: Option<usize>,
    pub seed: Option<u64>,
    pub n_samples: Option<usize>,
    pub n_max: Option<usize>,
    pub feasibility: Option<f64>,
    pub gap: Option<f64>,
    pub max_iterations: Option<usize>,
    pub drop_threshold: Option<f64>,
    pub stop_window: Option<usize>,
    pub with_oracle: Option<bool>,
    pub cache_dir: Option<PathBuf>,
    pub out_dir: Option<PathBuf>,
    pub threads: Option<usize>,
    pub behavior: Option<PathBuf>,
    pub witness: Option<PathBuf>,
}

macro_rules! overlay_fields {
    ($base:ident, $top:ident, $($f:ident),*) => {
        RunConfig { $($f: $top.$f.or($base.$f)),* }
    };
}

impl RunConfig {
    /// Fields set in `top` win over those in `self`.
    pub fn overlay(self, top: RunConfig) -> RunConfig {
        let base = self;
        overlay_fields!(
            base,
            top,
            command,
            scenario,
            scenarios,
            dims,
            m_list,
            l_list,
            d,
            d_sample,
            d_test,
            k,
            seed,
            n_samples,
            n_max,
            feasibility,
            gap,
            max_iterations,
            drop_threshold,
            stop_window,
            with_oracle,
            cache_dir,
            out_dir,
            threads,
            behavior,
            witness
        )
    }

    pub fn from_toml(text: &str) -> Result<Self, String> {
        toml::from_str(text).map_err(|e| e.to_string())
    }

    pub fn to_toml(&self) -> Result<String, String> {
        toml::to_string(self).map_err(|e| e.to_string())
    }

    pub fn seed(&self) -> u64 {
        self.seed.unwrap_or(DEFAULT_SEED)
    }

    pub fn level(&self) -> usize {
        self.k.unwrap_or(1)
    }

    pub fn cache_dir(&self) -> PathBuf {
        self.cache_dir
            .clone()
            .unwrap_or_else(|| PathBuf::from("seqdim-cache"))
    }

    pub fn out_dir(&self) -> PathBuf {
        self.out_dir
            .clone()
            .unwrap_or_else(|| PathBuf::from("seqdim-out"))
    }

    pub fn tolerances(&self) -> Tolerances {
        let mut t = Tolerances::default();
        if let Some(v) = self.feasibility {
            t.feasibility = v;
        }
        if let Some(v) = self.gap {
            t.gap = v;
        }
        if let Some(v) = self.max_iterations {
            t.max_iterations = v;
        }
        t
    }

    pub fn basis_config(&self) -> BasisConfig {
        let mut c = BasisConfig::default();
        if let Some(v) = self.drop_threshold {
            c.drop_threshold = v;
        }
        if let Some(v) = self.stop_window {
            c.stop_window = v;
        }
        c
    }

    /// Rejects values no command can use, naming the offending field.
    pub fn validate(&self) -> Result<(), String> {
        let positive = |name: &str, v: Option<usize>| match v {
            Some(0) => Err(format!("`{name}` must be at least 1")),
            _ => Ok(()),
        };
        positive("d", self.d)?;
        positive("d_sample", self.d_sample)?;
        positive("d_test", self.d_test)?;
        positive("k", self.k)?;
        positive("n_samples", self.n_samples)?;
        positive("n_max", self.n_max)?;
        positive("max_iterations", self.max_iterations)?;
        positive("stop_window", self.stop_window)?;
        positive("threads", self.threads)?;
        for (name, v) in [
            ("feasibility", self.feasibility),
            ("gap", self.gap),
            ("drop_threshold", self.drop_threshold),
        ] {
            if let Some(v) = v {
                if !(v > 0.0 && v < 1.0) {
                    return Err(format!("`{name}` must lie in (0, 1), got {v}"));
                }
            }
        }
        if let Some(dims) = &self.dims {
            if dims.is_empty() || dims.contains(&0) {
                return Err("`dims` must be a non-empty list of positive integers".into());
            }
        }
        Ok(())
    }
}
