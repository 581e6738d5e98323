//! Experiment configuration: a JSON document overlaid by command-line flags.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use clap::Args;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use thermoform::{HolderData, LiftMode, MapSystem, Potential};

use crate::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum MapSpec {
    Doubling,
    MannevillePomeau { alpha: f64 },
    Perturbed { degree: usize, amplitude: f64 },
    Tabulated { lift: Vec<f64> },
}

impl MapSpec {
    pub fn build(&self) -> Result<MapSystem<f64>, CliError> {
        Ok(match self {
            MapSpec::Doubling => MapSystem::doubling(),
            MapSpec::MannevillePomeau { alpha } => MapSystem::manneville_pomeau(*alpha)?,
            MapSpec::Perturbed { degree, amplitude } => MapSystem::perturbed(*degree, *amplitude)?,
            MapSpec::Tabulated { lift } => MapSystem::tabulated(lift.clone())?,
        })
    }
}

fn parse_parts(s: &str) -> (String, Vec<String>) {
    let mut it = s.split(':').map(str::trim);
    let head = it.next().unwrap_or_default().to_ascii_lowercase();
    (head, it.map(str::to_string).collect())
}

fn num<N: FromStr>(field: &str, parts: &[String], i: usize) -> Result<N, String> {
    parts
        .get(i)
        .ok_or_else(|| format!("{field}: missing argument {}", i + 1))?
        .parse()
        .map_err(|_| format!("{field}: argument {} is not a number", i + 1))
}

impl FromStr for MapSpec {
    type Err = String;

    /// `doubling`, `mp:ALPHA`, `perturbed:DEGREE:AMPLITUDE`.
    fn from_str(s: &str) -> Result<Self, String> {
        let (head, parts) = parse_parts(s);
        match head.as_str() {
            "doubling" => Ok(MapSpec::Doubling),
            "mp" | "manneville_pomeau" => Ok(MapSpec::MannevillePomeau {
                alpha: num("map", &parts, 0)?,
            }),
            "perturbed" => Ok(MapSpec::Perturbed {
                degree: num("map", &parts, 0)?,
                amplitude: num("map", &parts, 1)?,
            }),
            _ => Err(format!(
                "map: unknown kind `{head}` (tabulated maps need a config file)"
            )),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum PotentialSpec {
    Zero,
    Constant {
        c: f64,
    },
    Geometric {
        t: f64,
    },
    DistanceToZero {
        scale: f64,
        exponent: f64,
    },
    Cosine {
        amplitude: f64,
    },
    Tabulated {
        values: Vec<f64>,
        holder_constant: f64,
        holder_exponent: f64,
    },
}

impl PotentialSpec {
    pub fn build(&self) -> Result<Potential<f64>, CliError> {
        Ok(match self {
            PotentialSpec::Zero => Potential::Zero,
            PotentialSpec::Constant { c } => Potential::Constant(*c),
            PotentialSpec::Geometric { t } => Potential::Geometric { t: *t },
            PotentialSpec::DistanceToZero { scale, exponent } => Potential::DistanceToZero {
                scale: *scale,
                exponent: *exponent,
            },
            PotentialSpec::Cosine { amplitude } => Potential::Cosine { amplitude: *amplitude },
            PotentialSpec::Tabulated {
                values,
                holder_constant,
                holder_exponent,
            } => {
                if values.len() < 2 {
                    return Err(CliError::validation(
                        "potential",
                        "tabulated potential needs at least 2 samples",
                    ));
                }
                if !(*holder_exponent > 0.0 && *holder_exponent <= 1.0) || !(*holder_constant >= 0.0) {
                    return Err(CliError::validation(
                        "potential",
                        "holder_exponent must lie in (0, 1] and holder_constant be >= 0",
                    ));
                }
                Potential::Tabulated {
                    values: values.clone(),
                    holder: HolderData::new(*holder_constant, *holder_exponent),
                }
            }
        })
    }
}

impl FromStr for PotentialSpec {
    type Err = String;

    /// `zero`, `constant:C`, `geometric:T`, `distance:SCALE:EXPONENT`, `cosine:A`.
    fn from_str(s: &str) -> Result<Self, String> {
        let (head, parts) = parse_parts(s);
        match head.as_str() {
            "zero" => Ok(PotentialSpec::Zero),
            "constant" => Ok(PotentialSpec::Constant {
                c: num("potential", &parts, 0)?,
            }),
            "geometric" => Ok(PotentialSpec::Geometric {
                t: num("potential", &parts, 0)?,
            }),
            "distance" | "distance_to_zero" => Ok(PotentialSpec::DistanceToZero {
                scale: num("potential", &parts, 0)?,
                exponent: num("potential", &parts, 1)?,
            }),
            "cosine" => Ok(PotentialSpec::Cosine {
                amplitude: num("potential", &parts, 0)?,
            }),
            _ => Err(format!(
                "potential: unknown kind `{head}` (tabulated potentials need a config file)"
            )),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum LiftSpec {
    Projection,
    FiberAveraged,
}

/// Every setting is optional here; [`Settings::resolve`] applies defaults.
#[derive(Debug, Clone, Default, Serialize, Deserialize, Args)]
#[serde(default, deny_unknown_fields)]
pub struct Settings {
    /// Map: doubling | mp:ALPHA | perturbed:DEGREE:AMPLITUDE
    #[arg(long)]
    pub map: Option<MapSpec>,
    /// Potential: zero | constant:C | geometric:T | distance:SCALE:EXP | cosine:A
    #[arg(long)]
    pub potential: Option<PotentialSpec>,
    /// Comma-separated thresholds sigma in (0, 1)
    #[arg(long, value_delimiter = ',')]
    pub sigma: Option<Vec<f64>>,
    /// Comma-separated scales eps > 0
    #[arg(long, value_delimiter = ',')]
    pub eps: Option<Vec<f64>>,
    /// Largest orbit length for pressure estimates
    #[arg(long)]
    pub n_max: Option<usize>,
    /// Transfer-operator grid size
    #[arg(long)]
    pub grid_size: Option<usize>,
    /// Natural-extension metric base a > 1
    #[arg(long)]
    pub a: Option<f64>,
    /// Natural-extension truncation depth K
    #[arg(long)]
    pub depth: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Number of random samples (segments, Bowen pairs, attractor points)
    #[arg(long)]
    pub samples: Option<usize>,
    /// Longest sampled segment in Bowen and attractor checks
    #[arg(long)]
    pub bowen_n: Option<usize>,
    /// Segments glued per plan
    #[arg(long)]
    pub segments: Option<usize>,
    /// Number of gluing plans
    #[arg(long)]
    pub plans: Option<usize>,
    /// Shortest sampled segment length
    #[arg(long)]
    pub min_len: Option<usize>,
    /// Longest sampled segment length
    #[arg(long)]
    pub max_len: Option<usize>,
    /// Segment length floor for gluing
    #[arg(long)]
    pub k0: Option<usize>,
    /// Power-iteration tolerance
    #[arg(long)]
    pub tol: Option<f64>,
    #[arg(long)]
    pub max_iters: Option<usize>,
    /// How base potentials are lifted to the extension
    #[arg(long, value_enum)]
    pub lift: Option<LiftSpec>,
    /// Solenoid fiber contraction
    #[arg(long)]
    pub lambda_s: Option<f64>,
    /// Solenoid tube radius
    #[arg(long)]
    pub radius: Option<f64>,
    /// Solenoid potential A cos(2 pi theta) + B u: coefficient A
    #[arg(long)]
    pub torus_a: Option<f64>,
    /// Solenoid potential coefficient B
    #[arg(long)]
    pub torus_b: Option<f64>,
    /// CSV output path; stdout when absent
    #[arg(long)]
    pub output: Option<PathBuf>,
    /// JSON output path for plans and reports
    #[arg(long)]
    pub json: Option<PathBuf>,
    /// CSV path for a solenoid point cloud
    #[arg(long)]
    pub cloud: Option<PathBuf>,
    /// Worker threads (0 = all cores)
    #[arg(long, env = "THERMO_WORKERS")]
    pub workers: Option<usize>,
}

macro_rules! overlay {
    ($base:expr, $over:expr, $($f:ident),* $(,)?) => {
        Settings { $($f: $over.$f.or($base.$f)),* }
    };
}

impl Settings {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::validation("config", format!("cannot read {}: {e}", path.display())))?;
        serde_json::from_str(&text).map_err(|e| CliError::validation("config", e.to_string()))
    }

    /// Fields set in `over` win.
    pub fn overlay(self, over: Settings) -> Settings {
        overlay!(
            self, over, map, potential, sigma, eps, n_max, grid_size, a, depth, seed, samples, bowen_n, segments,
            plans, min_len, max_len, k0, tol, max_iters, lift, lambda_s, radius, torus_a, torus_b, output, json, cloud,
            workers,
        )
    }

    pub fn resolve(self, command: &str) -> Result<Resolved, CliError> {
        let r = Resolved {
            command: command.to_string(),
            map: self.map.unwrap_or(MapSpec::Doubling),
            potential: self.potential.unwrap_or(PotentialSpec::Zero),
            sigma: self.sigma.unwrap_or_else(|| vec![0.9]),
            eps: self.eps.unwrap_or_else(|| vec![1.0 / 32.0]),
            n_max: self.n_max.unwrap_or(12),
            grid_size: self.grid_size.unwrap_or(1024),
            a: self.a.unwrap_or(2.0),
            depth: self.depth.unwrap_or(24),
            seed: self.seed.unwrap_or(0),
            samples: self.samples.unwrap_or(1000),
            bowen_n: self.bowen_n.unwrap_or(20),
            segments: self.segments.unwrap_or(3),
            plans: self.plans.unwrap_or(10),
            min_len: self.min_len.unwrap_or(5),
            max_len: self.max_len.unwrap_or(20),
            k0: self.k0.unwrap_or(1),
            tol: self.tol.unwrap_or(1e-12),
            max_iters: self.max_iters.unwrap_or(10_000),
            lift: self.lift.unwrap_or(LiftSpec::Projection),
            lambda_s: self.lambda_s.unwrap_or(0.25),
            radius: self.radius.unwrap_or(0.5),
            torus_a: self.torus_a.unwrap_or(0.3),
            torus_b: self.torus_b.unwrap_or(1.0),
            output: self.output,
            json: self.json,
            cloud: self.cloud,
            workers: self.workers.unwrap_or(0),
        };
        r.validate()?;
        Ok(r)
    }
}

/// Fully specified run. Paths and the worker count do not affect results and
/// are excluded from the hash.
#[derive(Debug, Clone, Serialize)]
pub struct Resolved {
    pub command: String,
    pub map: MapSpec,
    pub potential: PotentialSpec,
    pub sigma: Vec<f64>,
    pub eps: Vec<f64>,
    pub n_max: usize,
    pub grid_size: usize,
    pub a: f64,
    pub depth: usize,
    pub seed: u64,
    pub samples: usize,
    pub bowen_n: usize,
    pub segments: usize,
    pub plans: usize,
    pub min_len: usize,
    pub max_len: usize,
    pub k0: usize,
    pub tol: f64,
    pub max_iters: usize,
    pub lift: LiftSpec,
    pub lambda_s: f64,
    pub radius: f64,
    pub torus_a: f64,
    pub torus_b: f64,
    #[serde(skip)]
    pub output: Option<PathBuf>,
    #[serde(skip)]
    pub json: Option<PathBuf>,
    #[serde(skip)]
    pub cloud: Option<PathBuf>,
    #[serde(skip)]
    pub workers: usize,
}

impl Resolved {
    fn validate(&self) -> Result<(), CliError> {
        let bad = |f: &str, r: &dyn std::fmt::Display| CliError::validation(f, r);
        if self.sigma.is_empty() {
            return Err(bad("sigma", &"at least one value required"));
        }
        if let Some(s) = self.sigma.iter().find(|s| !(**s > 0.0 && **s < 1.0)) {
            return Err(bad("sigma", &format!("{s} is outside (0, 1)")));
        }
        if self.eps.is_empty() {
            return Err(bad("eps", &"at least one value required"));
        }
        if let Some(e) = self.eps.iter().find(|e| !(**e > 0.0 && e.is_finite())) {
            return Err(bad("eps", &format!("{e} must be positive and finite")));
        }
        if self.n_max < 4 {
            return Err(bad("n_max", &"must be at least 4"));
        }
        if !(self.a > 1.0 && self.a.is_finite()) {
            return Err(bad("a", &"must be finite and > 1"));
        }
        if self.samples == 0 {
            return Err(bad("samples", &"must be positive"));
        }
        if self.bowen_n == 0 {
            return Err(bad("bowen_n", &"must be positive"));
        }
        if self.segments == 0 {
            return Err(bad("segments", &"must be positive"));
        }
        if self.min_len == 0 || self.min_len > self.max_len {
            return Err(bad("min_len", &"need 1 <= min_len <= max_len"));
        }
        if !(self.tol > 0.0) {
            return Err(bad("tol", &"must be positive"));
        }
        Ok(())
    }

    pub fn lift_mode(&self) -> LiftMode<f64> {
        match self.lift {
            LiftSpec::Projection => LiftMode::Projection,
            LiftSpec::FiberAveraged => LiftMode::FiberAveraged { a: self.a },
        }
    }

    /// SHA-256 of the canonical JSON of the result-affecting settings.
    pub fn hash(&self) -> String {
        let text = serde_json::to_string(self).expect("config serializes");
        hex::encode(Sha256::digest(text.as_bytes()))
    }
}

impl fmt::Display for MapSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MapSpec::Doubling => write!(f, "doubling"),
            MapSpec::MannevillePomeau { alpha } => write!(f, "mp:{alpha}"),
            MapSpec::Perturbed { degree, amplitude } => write!(f, "perturbed:{degree}:{amplitude}"),
            MapSpec::Tabulated { lift } => write!(f, "tabulated({})", lift.len()),
        }
    }
}
