//! Scenario configuration: a strict JSON file plus command-line overrides.

use std::path::{Path, PathBuf};

use clap::{Args, ValueEnum};
use lrlattice_core::{Complex64, DecayProfile, Field, HarmonicParameters, LatticeGeometry, QuadratureSpec, Site};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    Kernel,
    Cone,
    Bounds,
    State,
    Converge,
    FockVerify,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Kernel => "kernel",
            Command::Cone => "cone",
            Command::Bounds => "bounds",
            Command::State => "state",
            Command::Converge => "converge",
            Command::FockVerify => "fock-verify",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    Csv,
    #[default]
    Json,
}

/// One entry `f(site) = re + i im` of a label.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LabelEntry {
    pub site: Vec<i64>,
    pub value: [f64; 2],
}

/// Every configurable key; `None` means "not given".
#[derive(Debug, Clone, Default, PartialEq, Args)]
pub struct RawScenario {
    #[arg(skip)]
    pub command: Option<Command>,
    /// Lattice dimension.
    #[arg(long)]
    pub d: Option<usize>,
    #[arg(long)]
    pub omega: Option<f64>,
    /// Couplings, one per axis (comma separated).
    #[arg(long, value_delimiter = ',', num_args = 1..)]
    pub lambda: Option<Vec<f64>>,
    /// Polynomial exponent of the decay profile.
    #[arg(long)]
    pub epsilon: Option<f64>,
    /// Time grid (comma separated).
    #[arg(long, value_delimiter = ',', num_args = 1.., allow_negative_numbers = true)]
    pub t: Option<Vec<f64>>,
    /// Kernel window or lattice window radius.
    #[arg(long)]
    pub window: Option<u32>,
    /// Largest |x| reported (kernel) or scanned (cone).
    #[arg(long)]
    pub x_max: Option<u32>,
    /// Torus half side for the `state` command.
    #[arg(long)]
    pub torus_half_side: Option<u32>,
    /// Front threshold for the cone velocity fit.
    #[arg(long)]
    pub threshold: Option<f64>,
    #[arg(long, value_delimiter = ',', num_args = 1..)]
    pub mu: Option<Vec<f64>>,
    /// Decay rates of the profile (comma separated).
    #[arg(long, value_delimiter = ',', num_args = 1..)]
    pub a: Option<Vec<f64>>,
    #[arg(skip)]
    pub f: Option<Vec<LabelEntry>>,
    #[arg(skip)]
    pub g: Option<Vec<LabelEntry>>,
    #[arg(skip)]
    pub g2: Option<Vec<LabelEntry>>,
    /// Perturbation family file (JSON).
    #[arg(long)]
    pub perturbation: Option<PathBuf>,
    #[arg(skip)]
    pub cosine_z: Option<[f64; 2]>,
    /// First and last box exponent `n`, boxes `L = 2^n`.
    #[arg(long, value_delimiter = ',', num_args = 1..)]
    pub box_exponents: Option<Vec<u32>>,
    /// Fock cutoffs (comma separated).
    #[arg(long, value_delimiter = ',', num_args = 1..)]
    pub cutoffs: Option<Vec<usize>>,
    /// Step counts of the continuity scan (comma separated).
    #[arg(long, value_delimiter = ',', num_args = 1..)]
    pub steps: Option<Vec<u32>>,
    /// Random test points per decay rate.
    #[arg(long)]
    pub samples: Option<usize>,
    /// Seed for random test points.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Tolerance of the command's asserted inequality.
    #[arg(long)]
    pub tolerance: Option<f64>,
    /// Also compare 2- and 3-site chains (fock-verify).
    #[arg(long)]
    pub volume_check: Option<bool>,
    #[arg(long)]
    pub quad_points: Option<u32>,
    #[arg(long)]
    pub quad_tolerance: Option<f64>,
    /// Report path; standard output when absent.
    #[arg(long)]
    pub output: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub format: Option<OutputFormat>,
}

fn take<T: DeserializeOwned>(key: &str, value: Value, slot: &mut Option<T>, errors: &mut Vec<String>) {
    match serde_json::from_value(value) {
        Ok(v) => *slot = Some(v),
        Err(e) => errors.push(format!("key `{key}`: {e}")),
    }
}

impl RawScenario {
    /// Reads a JSON object, reporting every unknown or ill-typed key.
    pub fn from_json(text: &str) -> Result<Self, Vec<String>> {
        let map: Map<String, Value> = match serde_json::from_str(text) {
            Ok(Value::Object(map)) => map,
            Ok(_) => return Err(vec!["config must be a JSON object".into()]),
            Err(e) => return Err(vec![format!("config is not valid JSON: {e}")]),
        };
        let mut raw = RawScenario::default();
        let mut errors = Vec::new();
        for (key, value) in map {
            let e = &mut errors;
            match key.as_str() {
                "command" => take(&key, value, &mut raw.command, e),
                "d" => take(&key, value, &mut raw.d, e),
                "omega" => take(&key, value, &mut raw.omega, e),
                "lambda" => take(&key, value, &mut raw.lambda, e),
                "epsilon" => take(&key, value, &mut raw.epsilon, e),
                "t" => take(&key, value, &mut raw.t, e),
                "window" => take(&key, value, &mut raw.window, e),
                "x_max" => take(&key, value, &mut raw.x_max, e),
                "torus_half_side" => take(&key, value, &mut raw.torus_half_side, e),
                "threshold" => take(&key, value, &mut raw.threshold, e),
                "mu" => take(&key, value, &mut raw.mu, e),
                "a" => take(&key, value, &mut raw.a, e),
                "f" => take(&key, value, &mut raw.f, e),
                "g" => take(&key, value, &mut raw.g, e),
                "g2" => take(&key, value, &mut raw.g2, e),
                "perturbation" => take(&key, value, &mut raw.perturbation, e),
                "cosine_z" => take(&key, value, &mut raw.cosine_z, e),
                "box_exponents" => take(&key, value, &mut raw.box_exponents, e),
                "cutoffs" => take(&key, value, &mut raw.cutoffs, e),
                "steps" => take(&key, value, &mut raw.steps, e),
                "samples" => take(&key, value, &mut raw.samples, e),
                "seed" => take(&key, value, &mut raw.seed, e),
                "tolerance" => take(&key, value, &mut raw.tolerance, e),
                "volume_check" => take(&key, value, &mut raw.volume_check, e),
                "quad_points" => take(&key, value, &mut raw.quad_points, e),
                "quad_tolerance" => take(&key, value, &mut raw.quad_tolerance, e),
                "output" => take(&key, value, &mut raw.output, e),
                "format" => take(&key, value, &mut raw.format, e),
                _ => e.push(format!("unknown key `{key}`")),
            }
        }
        if errors.is_empty() {
            Ok(raw)
        } else {
            Err(errors)
        }
    }

    /// Fields set in `over` replace those in `self`.
    pub fn overridden_by(self, over: RawScenario) -> RawScenario {
        macro_rules! pick {
            ($($field:ident),*) => {
                RawScenario { $($field: over.$field.or(self.$field)),* }
            };
        }
        pick!(
            command, d, omega, lambda, epsilon, t, window, x_max, torus_half_side, threshold, mu, a, f, g,
            g2, perturbation, cosine_z, box_exponents, cutoffs, steps, samples, seed, tolerance,
            volume_check, quad_points, quad_tolerance, output, format
        )
    }
}

/// A fully validated scenario.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub command: Command,
    pub params: HarmonicParameters,
    pub geometry: LatticeGeometry,
    pub epsilon: f64,
    pub t: Vec<f64>,
    pub window: u32,
    pub x_max: u32,
    pub threshold: f64,
    pub mu: Vec<f64>,
    pub a: Vec<f64>,
    pub f: Vec<LabelEntry>,
    pub g: Vec<LabelEntry>,
    pub g2: Vec<LabelEntry>,
    pub perturbation: Option<PathBuf>,
    pub cosine_z: [f64; 2],
    pub box_exponents: (u32, u32),
    pub cutoffs: Vec<usize>,
    pub steps: Vec<u32>,
    pub samples: usize,
    pub seed: u64,
    pub tolerance: Option<f64>,
    pub volume_check: bool,
    pub quad: QuadratureSpec,
    pub output: Option<PathBuf>,
    pub format: OutputFormat,
}

fn entry(site: &[i64], re: f64, im: f64) -> LabelEntry {
    LabelEntry {
        site: site.to_vec(),
        value: [re, im],
    }
}

fn default_t(command: Command) -> Vec<f64> {
    match command {
        Command::Kernel => vec![0.0, 1.0],
        Command::Cone => (1..=20).map(f64::from).collect(),
        Command::Bounds => (0..9).map(|k| 0.25 * f64::from(k)).collect(),
        Command::State => vec![0.0, 0.5, 1.0, 2.0, 4.0],
        Command::Converge => vec![0.25, 0.5],
        Command::FockVerify => vec![0.5, 1.0],
    }
}

fn axis_site(d: usize, x: i64) -> Vec<i64> {
    let mut s = vec![0; d];
    s[0] = x;
    s
}

impl Scenario {
    /// Validates `raw`, naming every problem found.
    pub fn from_raw(raw: RawScenario) -> Result<Self, Vec<String>> {
        let mut errors = Vec::new();
        let mut missing = |name: &str| errors.push(format!("missing required key `{name}`"));
        if raw.command.is_none() {
            missing("command");
        }
        if raw.d.is_none() {
            missing("d");
        }
        if raw.omega.is_none() {
            missing("omega");
        }
        if raw.lambda.is_none() {
            missing("lambda");
        }
        let (Some(command), Some(d), Some(omega), Some(lambda)) = (raw.command, raw.d, raw.omega, raw.lambda)
        else {
            return Err(errors);
        };

        let params = match HarmonicParameters::new(omega, lambda.clone()) {
            Ok(p) => Some(p),
            Err(e) => {
                errors.push(format!("model: {e}"));
                None
            }
        };
        if lambda.len() != d {
            errors.push(format!("`lambda` has {} entries but d = {d}", lambda.len()));
        }
        let t = raw.t.unwrap_or_else(|| default_t(command));
        if t.is_empty() || t.iter().any(|v| !v.is_finite()) {
            errors.push("`t` must be a non-empty list of finite times".into());
        }
        let mu = raw.mu.unwrap_or_else(|| vec![0.5, 1.0, 2.0]);
        if mu.is_empty() || mu.iter().any(|m| !(*m > 0.0 && m.is_finite())) {
            errors.push("`mu` must be a non-empty list of positive rates".into());
        }
        let a = raw.a.unwrap_or_else(|| match command {
            Command::Bounds => vec![0.0, 0.5, 2.0],
            _ => vec![1.0],
        });
        if a.is_empty() || a.iter().any(|v| !(*v >= 0.0 && v.is_finite())) {
            errors.push("`a` must be a non-empty list of non-negative rates".into());
        }
        let epsilon = raw.epsilon.unwrap_or(1.0);
        if let Err(e) = DecayProfile::new(d.max(1), epsilon, 0.0) {
            errors.push(format!("profile: {e}"));
        }
        let window = raw.window.unwrap_or(match command {
            Command::Bounds => 40,
            _ => 32,
        });
        let x_max = raw.x_max.unwrap_or(match command {
            Command::Cone => 60,
            _ => window,
        });
        if command == Command::Kernel && x_max > window {
            errors.push(format!("`x_max` = {x_max} exceeds the kernel window {window}"));
        }
        let threshold = raw.threshold.unwrap_or(0.1);
        if !(threshold > 0.0 && threshold < 2.0) {
            errors.push("`threshold` must lie in (0, 2)".into());
        }
        let cutoffs = raw.cutoffs.unwrap_or_else(|| vec![20, 40, 60]);
        if cutoffs.is_empty() || cutoffs.windows(2).any(|w| w[0] >= w[1]) {
            errors.push("`cutoffs` must be a non-empty increasing list".into());
        }
        let steps = raw.steps.unwrap_or_else(|| vec![16, 32, 64, 128, 256]);
        if steps.is_empty() || steps.contains(&0) {
            errors.push("`steps` must be a non-empty list of positive counts".into());
        }
        let box_exponents = match raw.box_exponents.as_deref() {
            None => (2, 6),
            Some(&[lo, hi]) if lo <= hi && hi < 20 => (lo, hi),
            Some(_) => {
                errors.push("`box_exponents` must be [first, last] with first <= last < 20".into());
                (2, 6)
            }
        };
        if let Some(tol) = raw.tolerance {
            if !(tol > 0.0) {
                errors.push("`tolerance` must be positive".into());
            }
        }
        let quad_default = QuadratureSpec::default();
        let quad = QuadratureSpec {
            points_per_axis: raw.quad_points.unwrap_or(quad_default.points_per_axis),
            refinement_tolerance: raw.quad_tolerance.unwrap_or(quad_default.refinement_tolerance),
            ..quad_default
        };
        if let Err(e) = quad.validate() {
            errors.push(format!("quadrature: {e}"));
        }
        if let Some(path) = &raw.output {
            let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
            if !dir.is_dir() {
                errors.push(format!("output directory `{}` does not exist", dir.display()));
            }
        }
        if let Some(path) = &raw.perturbation {
            if !path.is_file() {
                errors.push(format!("perturbation file `{}` not found", path.display()));
            }
        }

        let geometry = match command {
            Command::State => LatticeGeometry::torus(d.max(1), raw.torus_half_side.unwrap_or(64)),
            Command::FockVerify => {
                if d != 1 {
                    errors.push("fock-verify needs d = 1".into());
                }
                LatticeGeometry::torus(1, 1)
            }
            Command::Converge => {
                let needed = 1u32 << (box_exponents.1 + 1);
                LatticeGeometry::infinite(d.max(1), window.max(needed))
            }
            _ => LatticeGeometry::infinite(d.max(1), window.max(x_max).max(1)),
        };
        let geometry = match geometry {
            Ok(g) => Some(g),
            Err(e) => {
                errors.push(format!("geometry: {e}"));
                None
            }
        };

        let dd = d.max(1);
        let (f, g, g2) = match command {
            Command::FockVerify => (
                vec![entry(&[0], 0.3, 0.0)],
                {
                    // (0.1i, 0.2 + 0.1i) scaled to l2 norm 0.3.
                    let k = 1.5f64.sqrt();
                    vec![entry(&[0], 0.0, 0.1 * k), entry(&[1], 0.2 * k, 0.1 * k)]
                },
                Vec::new(),
            ),
            _ => (
                vec![entry(&axis_site(dd, 0), 0.3, 0.1), entry(&axis_site(dd, 1), 0.0, -0.2)],
                vec![entry(&axis_site(dd, 0), -0.1, 0.2), entry(&axis_site(dd, 2), 0.15, 0.0)],
                vec![entry(&axis_site(dd, 1), 0.2, 0.0), entry(&axis_site(dd, -1), 0.0, 0.1)],
            ),
        };
        let f = raw.f.unwrap_or(f);
        let g = raw.g.unwrap_or(g);
        let g2 = raw.g2.unwrap_or(g2);
        if let Some(geometry) = geometry {
            for (name, label) in [("f", &f), ("g", &g), ("g2", &g2)] {
                if let Err(e) = build_label(geometry, label) {
                    errors.push(format!("label `{name}`: {e}"));
                }
            }
        }

        match (params, geometry) {
            (Some(params), Some(geometry)) if errors.is_empty() => Ok(Scenario {
                command,
                params,
                geometry,
                epsilon,
                t,
                window,
                x_max,
                threshold,
                mu,
                a,
                f,
                g,
                g2,
                perturbation: raw.perturbation,
                cosine_z: raw.cosine_z.unwrap_or([0.2, 0.0]),
                box_exponents,
                cutoffs,
                steps,
                samples: raw.samples.unwrap_or(34),
                seed: raw.seed.unwrap_or(0),
                tolerance: raw.tolerance.or((command == Command::Converge).then_some(1e-6)),
                volume_check: raw.volume_check.unwrap_or(false),
                quad,
                output: raw.output,
                format: raw.format.unwrap_or_default(),
            }),
            _ => Err(errors),
        }
    }

    pub fn dim(&self) -> usize {
        self.params.dim()
    }

    pub fn label(&self, entries: &[LabelEntry]) -> lrlattice_core::Result<Field> {
        build_label(self.geometry, entries)
    }
}

pub fn build_label(geometry: LatticeGeometry, entries: &[LabelEntry]) -> lrlattice_core::Result<Field> {
    Field::from_entries(
        geometry,
        entries
            .iter()
            .map(|e| (Site::new(e.site.clone()), Complex64::new(e.value[0], e.value[1]))),
    )
}

/// Merges `config` (if any) with `overrides` and validates the result.
pub fn parse_scenario(overrides: RawScenario, config: Option<&Path>) -> Result<Scenario, Vec<String>> {
    let file = match config {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| vec![format!("cannot read `{}`: {e}", path.display())])?;
            RawScenario::from_json(&text)?
        }
        None => RawScenario::default(),
    };
    Scenario::from_raw(file.overridden_by(overrides))
}
