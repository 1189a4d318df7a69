//! Run configuration: a TOML document with validated sections.
//!
//! Unknown keys are rejected with a nearest-match suggestion, and every
//! physical parameter is checked against the preconditions of the module it
//! feeds at parse time, so a config that parses will run.

use crate::dynamics::{SDEConfig, Scheme, VortexState};
use crate::error::{CoreError, Result};
use crate::kernel::{EvalPath, KernelMode, KernelSpec};
use crate::mc::{EnsembleSpec, InitialLaw};
use crate::spectral::NoiseFamily;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use std::path::Path;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VorticesSection {
    pub positions: Vec<[f64; 2]>,
    pub intensities: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KernelSection {
    pub mode: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub delta: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub eval: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub k_max: Option<u32>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub eta: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tolerance: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub grid_size: Option<u32>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub interp_order: Option<u32>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseSection {
    /// Directory written by `gen-noise`; mutually exclusive with the sampler
    /// keys below.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub file: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub d: Option<u32>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gamma: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub count: Option<usize>,
    pub amplitude: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunSection {
    pub scheme: String,
    pub dt: f64,
    pub t_final: f64,
    #[serde(default)]
    pub stop_delta: f64,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnsembleSection {
    pub trajectories: usize,
    pub ic: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub margin: Option<f64>,
    #[serde(default)]
    pub epsilon_ladder: Vec<f64>,
    #[serde(default = "default_stride")]
    pub seed_stride: u64,
}

fn default_stride() -> u64 {
    1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HypoSection {
    pub n: usize,
    #[serde(default = "default_depth")]
    pub depth: u32,
    pub grid: usize,
    pub delta: f64,
    #[serde(default = "default_tol")]
    pub tol: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub degree: Option<u32>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fields_m: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub trials: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub epsilon: Option<f64>,
}

fn default_depth() -> u32 {
    3
}

fn default_tol() -> f64 {
    1e-9
}

/// The parsed and validated configuration document.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct ConfigDocument {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub vortices: Option<VorticesSection>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub kernel: Option<KernelSection>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub noise: Option<NoiseSection>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub run: Option<RunSection>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ensemble: Option<EnsembleSection>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub hypo: Option<HypoSection>,
}

const SCHEMA: &[(&str, &[&str])] = &[
    ("vortices", &["positions", "intensities"]),
    (
        "kernel",
        &["mode", "delta", "eval", "k_max", "eta", "tolerance", "grid_size", "interp_order"],
    ),
    ("noise", &["file", "d", "gamma", "count", "amplitude", "seed"]),
    ("run", &["scheme", "dt", "t_final", "stop_delta", "seed"]),
    (
        "ensemble",
        &["trajectories", "ic", "margin", "epsilon_ladder", "seed_stride"],
    ),
    (
        "hypo",
        &["n", "depth", "grid", "delta", "tol", "degree", "fields_m", "trials", "epsilon"],
    ),
];

fn levenshtein(a: &str, b: &str) -> usize {
    let a: Vec<char> = a.chars().collect();
    let b: Vec<char> = b.chars().collect();
    let mut prev: Vec<usize> = (0..=b.len()).collect();
    let mut cur = vec![0usize; b.len() + 1];
    for (i, &ca) in a.iter().enumerate() {
        cur[0] = i + 1;
        for (j, &cb) in b.iter().enumerate() {
            let cost = if ca == cb { 0 } else { 1 };
            cur[j + 1] = (prev[j] + cost).min(prev[j + 1] + 1).min(cur[j] + 1);
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    prev[b.len()]
}

fn suggest(key: &str, candidates: &[&str]) -> String {
    let best = candidates
        .iter()
        .map(|c| (levenshtein(key, c), *c))
        .min_by_key(|&(d, _)| d);
    match best {
        Some((d, c)) if d <= 3 => format!("unknown key (did you mean `{c}`?)"),
        _ => format!("unknown key (expected one of {})", candidates.join(", ")),
    }
}

fn check_keys(value: &toml::Value) -> Result<()> {
    let top = value
        .as_table()
        .ok_or_else(|| CoreError::Format("config root must be a table".into()))?;
    let sections: Vec<&str> = SCHEMA.iter().map(|&(s, _)| s).collect();
    for (name, entry) in top {
        let Some(&(_, keys)) = SCHEMA.iter().find(|&&(s, _)| s == name) else {
            return Err(CoreError::Config {
                key: name.clone(),
                reason: suggest(name, &sections),
            });
        };
        let table = entry.as_table().ok_or_else(|| CoreError::Config {
            key: name.clone(),
            reason: "section must be a table".into(),
        })?;
        for key in table.keys() {
            if !keys.contains(&key.as_str()) {
                return Err(CoreError::Config {
                    key: format!("{name}.{key}"),
                    reason: suggest(key, keys),
                });
            }
        }
    }
    Ok(())
}

/// Parse and validate a configuration from TOML text.
pub fn parse_config_str(text: &str) -> Result<ConfigDocument> {
    let value: toml::Value = text
        .parse()
        .map_err(|e| CoreError::Format(format!("TOML syntax: {e}")))?;
    check_keys(&value)?;
    let doc: ConfigDocument = value
        .try_into()
        .map_err(|e| CoreError::Format(format!("config structure: {e}")))?;
    doc.validate()?;
    Ok(doc)
}

/// Parse and validate a configuration file.
pub fn parse_config(path: &Path) -> Result<ConfigDocument> {
    let text = std::fs::read_to_string(path)?;
    parse_config_str(&text)
}

impl ConfigDocument {
    pub fn to_toml_string(&self) -> String {
        toml::to_string_pretty(self).expect("config serializes")
    }

    fn validate(&self) -> Result<()> {
        if let Some(v) = &self.vortices {
            if v.positions.is_empty() {
                return Err(CoreError::Config {
                    key: "vortices.positions".into(),
                    reason: "need at least one vortex".into(),
                });
            }
            if v.positions.len() != v.intensities.len() {
                return Err(CoreError::Config {
                    key: "vortices.intensities".into(),
                    reason: format!(
                        "{} intensities for {} positions",
                        v.intensities.len(),
                        v.positions.len()
                    ),
                });
            }
        }
        if let Some(k) = &self.kernel {
            match k.mode.as_str() {
                "exact" | "planar" => {}
                "regularized" => {
                    let delta = k.delta.ok_or_else(|| CoreError::Config {
                        key: "kernel.delta".into(),
                        reason: "required in regularized mode".into(),
                    })?;
                    if !(delta > 0.0 && delta < PI / 4.0) {
                        return Err(CoreError::Config {
                            key: "kernel.delta".into(),
                            reason: format!("must lie in (0, pi/4), got {delta}"),
                        });
                    }
                }
                other => {
                    return Err(CoreError::Config {
                        key: "kernel.mode".into(),
                        reason: format!(
                            "unknown mode `{other}` (expected exact, regularized or planar)"
                        ),
                    })
                }
            }
            if let Some(eval) = &k.eval {
                match eval.as_str() {
                    "reference-series" => {}
                    "grid-interp" => {
                        if let Some(g) = k.grid_size {
                            if !g.is_power_of_two() {
                                return Err(CoreError::Config {
                                    key: "kernel.grid_size".into(),
                                    reason: format!("must be a power of two, got {g}"),
                                });
                            }
                        }
                    }
                    other => {
                        return Err(CoreError::Config {
                            key: "kernel.eval".into(),
                            reason: format!(
                                "unknown path `{other}` (expected reference-series or grid-interp)"
                            ),
                        })
                    }
                }
            }
            if let Some(t) = k.tolerance {
                if !(t > 0.0) {
                    return Err(CoreError::Config {
                        key: "kernel.tolerance".into(),
                        reason: "must be positive".into(),
                    });
                }
            }
        }
        if let Some(n) = &self.noise {
            let sampler = n.d.is_some() || n.count.is_some() || n.seed.is_some();
            if n.file.is_some() && sampler {
                return Err(CoreError::Config {
                    key: "noise.file".into(),
                    reason: "give either a file or sampler keys (d, count, seed), not both".into(),
                });
            }
            if n.file.is_none() && !(n.d.is_some() && n.count.is_some() && n.seed.is_some()) {
                return Err(CoreError::Config {
                    key: "noise".into(),
                    reason: "sampler needs d, count and seed".into(),
                });
            }
            if n.amplitude < 0.0 {
                return Err(CoreError::Config {
                    key: "noise.amplitude".into(),
                    reason: "must be >= 0".into(),
                });
            }
        }
        if let Some(r) = &self.run {
            if Scheme::parse(&r.scheme).is_none() {
                return Err(CoreError::Config {
                    key: "run.scheme".into(),
                    reason: format!(
                        "unknown scheme `{}` (expected rk4-deterministic, euler-heun-strat \
                         or euler-maruyama-ito-corrected)",
                        r.scheme
                    ),
                });
            }
            if !(r.dt > 0.0) {
                return Err(CoreError::Config {
                    key: "run.dt".into(),
                    reason: "must be positive".into(),
                });
            }
            if r.t_final < 0.0 || (r.t_final > 0.0 && r.dt > r.t_final) {
                return Err(CoreError::Config {
                    key: "run.dt".into(),
                    reason: format!("dt = {} incompatible with t_final = {}", r.dt, r.t_final),
                });
            }
            if r.stop_delta < 0.0 {
                return Err(CoreError::Config {
                    key: "run.stop_delta".into(),
                    reason: "must be >= 0".into(),
                });
            }
            if let Some(v) = &self.vortices {
                if v.positions.len() >= 2 && r.stop_delta > 0.0 {
                    let state = VortexState::new(v.positions.clone(), v.intensities.clone())
                        .map_err(|e| CoreError::Config {
                            key: "vortices.positions".into(),
                            reason: e.to_string(),
                        })?;
                    let (d, _) = state.min_pair_distance().expect("n >= 2");
                    if r.stop_delta >= d {
                        return Err(CoreError::Config {
                            key: "run.stop_delta".into(),
                            reason: format!(
                                "stop_delta = {} not below the minimal initial distance {d}",
                                r.stop_delta
                            ),
                        });
                    }
                }
            }
        }
        if let Some(e) = &self.ensemble {
            if e.trajectories == 0 {
                return Err(CoreError::Config {
                    key: "ensemble.trajectories".into(),
                    reason: "must be >= 1".into(),
                });
            }
            match e.ic.as_str() {
                "fixed" => {}
                "uniform-off-diagonal" => {
                    let margin = e.margin.ok_or_else(|| CoreError::Config {
                        key: "ensemble.margin".into(),
                        reason: "required for uniform-off-diagonal sampling".into(),
                    })?;
                    if let Some(&eps) = e.epsilon_ladder.first() {
                        if margin <= eps {
                            return Err(CoreError::Config {
                                key: "ensemble.margin".into(),
                                reason: format!(
                                    "margin {margin} must exceed the largest epsilon {eps}"
                                ),
                            });
                        }
                    }
                }
                other => {
                    return Err(CoreError::Config {
                        key: "ensemble.ic".into(),
                        reason: format!(
                            "unknown law `{other}` (expected fixed or uniform-off-diagonal)"
                        ),
                    })
                }
            }
            for w in e.epsilon_ladder.windows(2) {
                if w[1] >= w[0] {
                    return Err(CoreError::Config {
                        key: "ensemble.epsilon_ladder".into(),
                        reason: "must be strictly decreasing".into(),
                    });
                }
            }
            if e.seed_stride == 0 {
                return Err(CoreError::Config {
                    key: "ensemble.seed_stride".into(),
                    reason: "must be nonzero".into(),
                });
            }
        }
        if let Some(h) = &self.hypo {
            if h.n == 0 {
                return Err(CoreError::Config {
                    key: "hypo.n".into(),
                    reason: "must be >= 1".into(),
                });
            }
            if h.grid == 0 {
                return Err(CoreError::Config {
                    key: "hypo.grid".into(),
                    reason: "must be >= 1".into(),
                });
            }
            if !(h.delta > 0.0) {
                return Err(CoreError::Config {
                    key: "hypo.delta".into(),
                    reason: "must be positive".into(),
                });
            }
            if let Some(m) = h.fields_m {
                if m <= 2 * h.n {
                    return Err(CoreError::Config {
                        key: "hypo.fields_m".into(),
                        reason: format!("need M > 2n = {}", 2 * h.n),
                    });
                }
            }
        }
        Ok(())
    }

    fn section<'a, T>(opt: &'a Option<T>, name: &str) -> Result<&'a T> {
        opt.as_ref().ok_or_else(|| CoreError::Config {
            key: name.into(),
            reason: "section required by this subcommand".into(),
        })
    }

    pub fn kernel_spec(&self) -> Result<KernelSpec> {
        let k = Self::section(&self.kernel, "kernel")?;
        let mode = match k.mode.as_str() {
            "exact" => KernelMode::Exact,
            "planar" => KernelMode::Planar,
            "regularized" => KernelMode::Regularized {
                delta: k.delta.expect("validated"),
            },
            _ => unreachable!("validated"),
        };
        let eval = match k.eval.as_deref() {
            None | Some("reference-series") => EvalPath::ReferenceSeries {
                k_max: k.k_max.unwrap_or(8),
                eta: k.eta.unwrap_or(1.0),
                tolerance: k.tolerance.unwrap_or(1e-10),
            },
            Some("grid-interp") => EvalPath::GridInterp {
                grid_size: k.grid_size.unwrap_or(512),
                order: k.interp_order.unwrap_or(6),
                tolerance: k.tolerance.unwrap_or(1e-6),
            },
            _ => unreachable!("validated"),
        };
        Ok(KernelSpec { mode, eval })
    }

    /// Build the noise family; `base_dir` anchors a relative `noise.file`.
    pub fn noise_family(&self, base_dir: &Path) -> Result<Option<NoiseFamily>> {
        let Some(n) = &self.noise else { return Ok(None) };
        if let Some(file) = &n.file {
            let dir = base_dir.join(file);
            let family = crate::output::read_noise_dir(&dir)?;
            return Ok(Some(family.with_amplitude(n.amplitude)?));
        }
        Ok(Some(NoiseFamily::sample(
            n.d.expect("validated"),
            n.gamma.unwrap_or(0.0),
            n.count.expect("validated"),
            n.amplitude,
            n.seed.expect("validated"),
        )?))
    }

    pub fn initial_state(&self) -> Result<VortexState> {
        let v = Self::section(&self.vortices, "vortices")?;
        VortexState::new(v.positions.clone(), v.intensities.clone())
    }

    pub fn sde_config(&self, base_dir: &Path) -> Result<SDEConfig> {
        let r = Self::section(&self.run, "run")?;
        Ok(SDEConfig {
            scheme: Scheme::parse(&r.scheme).expect("validated"),
            dt: r.dt,
            t_final: r.t_final,
            kernel: self.kernel_spec()?,
            noise: self.noise_family(base_dir)?,
            stop_delta: r.stop_delta,
            seed: r.seed,
        })
    }

    pub fn ensemble_spec(&self, base_dir: &Path) -> Result<EnsembleSpec> {
        let e = Self::section(&self.ensemble, "ensemble")?;
        let config = self.sde_config(base_dir)?;
        let law = match e.ic.as_str() {
            "fixed" => InitialLaw::Fixed(self.initial_state()?),
            "uniform-off-diagonal" => {
                let v = Self::section(&self.vortices, "vortices")?;
                InitialLaw::UniformOffDiagonal {
                    margin: e.margin.expect("validated"),
                    intensities: v.intensities.clone(),
                }
            }
            _ => unreachable!("validated"),
        };
        let base_seed = Self::section(&self.run, "run")?.seed;
        Ok(EnsembleSpec {
            config,
            trajectories: e.trajectories,
            law,
            epsilon_ladder: e.epsilon_ladder.clone(),
            base_seed,
            seed_stride: e.seed_stride,
        })
    }
}
