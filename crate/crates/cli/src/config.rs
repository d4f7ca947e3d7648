//! Run configuration: a sectioned TOML file resolved against defaults and
//! command-line overrides. Every rejection names the key and, when the key came
//! from the file, its line.

use std::fmt;
use std::ops::Range;

use serde::{Deserialize, Serialize};
use toml::Spanned;

use twosphere::{BoundaryCondition, IntegratorOptions, SeriesTruncation, SwimmerScenario};

#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError {
    pub key: Option<String>,
    pub line: Option<usize>,
    pub message: String,
}

impl ConfigError {
    fn at(key: &str, line: Option<usize>, message: impl Into<String>) -> Self {
        Self {
            key: Some(key.to_string()),
            line,
            message: message.into(),
        }
    }
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match (&self.key, self.line) {
            (Some(k), Some(l)) => {
                write!(f, "config error at line {l}, key `{k}`: {}", self.message)
            }
            (Some(k), None) => write!(f, "config error, key `{k}`: {}", self.message),
            (None, Some(l)) => write!(f, "config error at line {l}: {}", self.message),
            (None, None) => write!(f, "config error: {}", self.message),
        }
    }
}

impl std::error::Error for ConfigError {}

type Sf = Option<Spanned<f64>>;

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    scenario: Option<RawScenario>,
    integrator: Option<RawIntegrator>,
    truncation: Option<RawTruncation>,
    drag: Option<RawDrag>,
    sweep: Option<RawSweep>,
    output: Option<RawOutput>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawScenario {
    mode: Option<Spanned<String>>,
    bc: Option<Spanned<String>>,
    beta: Sf,
    h0: Sf,
    s0: Sf,
    m: Sf,
    f_p: Sf,
    lambda: Sf,
    f_ext: Sf,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawIntegrator {
    rtol: Sf,
    atol: Sf,
    max_steps: Option<Spanned<i64>>,
    t_max: Sf,
    h_floor: Sf,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawTruncation {
    n_max: Option<Spanned<i64>>,
    tail_tol: Sf,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawDrag {
    h_min: Sf,
    h_max: Sf,
    points: Option<Spanned<i64>>,
    spacing: Option<Spanned<String>>,
    lambda: Sf,
}

type Axis = Option<Spanned<Vec<f64>>>;

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSweep {
    kind: Option<Spanned<String>>,
    lambda: Axis,
    beta: Axis,
    h0: Axis,
    s0: Axis,
    f_p: Axis,
    m: Axis,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawOutput {
    dir: Option<Spanned<String>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ModeKind {
    Active,
    Passive,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Spacing {
    Log,
    Linear,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum SweepKind {
    /// Drag coefficients at the initial gap of each grid point.
    Drag,
    /// A full trajectory per grid point.
    Dynamics,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScenarioConfig {
    pub mode: ModeKind,
    /// Slip length; 0 is no-slip.
    pub beta: f64,
    pub h0: f64,
    pub s0: f64,
    pub m: f64,
    pub f_p: f64,
    pub lambda: f64,
    pub f_ext: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IntegratorConfig {
    pub rtol: f64,
    pub atol: f64,
    pub max_steps: u64,
    pub t_max: f64,
    /// Contact threshold; the boundary condition's default when absent.
    pub h_floor: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TruncationConfig {
    pub n_max: u64,
    pub tail_tol: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DragConfig {
    pub h_min: f64,
    pub h_max: f64,
    pub points: u64,
    pub spacing: Spacing,
    pub lambda: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepConfig {
    pub kind: SweepKind,
    pub lambda: Option<Vec<f64>>,
    pub beta: Option<Vec<f64>>,
    pub h0: Option<Vec<f64>>,
    pub s0: Option<Vec<f64>>,
    pub f_p: Option<Vec<f64>>,
    pub m: Option<Vec<f64>>,
}

/// Fully resolved configuration. Its TOML rendering is echoed into reports and
/// hashed; the output directory is left out so moving results keeps the hash.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunConfig {
    pub scenario: ScenarioConfig,
    pub integrator: IntegratorConfig,
    pub truncation: TruncationConfig,
    pub drag: DragConfig,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepConfig>,
    #[serde(skip)]
    pub output_dir: String,
}

/// Command-line values that take precedence over the file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub tol: Option<f64>,
    pub n_max: Option<u64>,
    pub out: Option<String>,
}

/// Maps byte offsets to 1-based line numbers.
struct Lines<'a>(&'a str);

impl Lines<'_> {
    fn of(&self, span: Range<usize>) -> usize {
        let end = span.start.min(self.0.len());
        self.0.as_bytes()[..end]
            .iter()
            .filter(|&&b| b == b'\n')
            .count()
            + 1
    }
}

struct Resolver<'a> {
    lines: Lines<'a>,
}

impl Resolver<'_> {
    fn float(&self, key: &str, v: &Sf, default: f64, check: Check) -> Result<f64, ConfigError> {
        match v {
            None => Ok(default),
            Some(s) => {
                let line = Some(self.lines.of(s.span()));
                check.apply(key, *s.get_ref(), line)
            }
        }
    }

    fn count(
        &self,
        key: &str,
        v: &Option<Spanned<i64>>,
        default: u64,
        min: i64,
    ) -> Result<u64, ConfigError> {
        match v {
            None => Ok(default),
            Some(s) if *s.get_ref() >= min => Ok(*s.get_ref() as u64),
            Some(s) => Err(ConfigError::at(
                key,
                Some(self.lines.of(s.span())),
                format!("must be an integer >= {min}, got {}", s.get_ref()),
            )),
        }
    }

    fn choice<T: Copy>(
        &self,
        key: &str,
        v: &Option<Spanned<String>>,
        default: T,
        options: &[(&str, T)],
    ) -> Result<T, ConfigError> {
        let Some(s) = v else { return Ok(default) };
        options
            .iter()
            .find(|(name, _)| name.eq_ignore_ascii_case(s.get_ref()))
            .map(|(_, t)| *t)
            .ok_or_else(|| {
                let names: Vec<_> = options.iter().map(|(n, _)| format!("\"{n}\"")).collect();
                ConfigError::at(
                    key,
                    Some(self.lines.of(s.span())),
                    format!(
                        "unknown value \"{}\", expected one of {}",
                        s.get_ref(),
                        names.join(", ")
                    ),
                )
            })
    }

    fn axis(&self, key: &str, v: &Axis, check: Check) -> Result<Option<Vec<f64>>, ConfigError> {
        let Some(s) = v else { return Ok(None) };
        let line = Some(self.lines.of(s.span()));
        if s.get_ref().is_empty() {
            return Err(ConfigError::at(key, line, "sweep axis is empty"));
        }
        s.get_ref()
            .iter()
            .map(|&x| check.apply(key, x, line))
            .collect::<Result<Vec<_>, _>>()
            .map(Some)
    }
}

#[derive(Debug, Clone, Copy)]
enum Check {
    Positive,
    NonNegative,
}

impl Check {
    fn apply(self, key: &str, v: f64, line: Option<usize>) -> Result<f64, ConfigError> {
        let ok = v.is_finite()
            && match self {
                Check::Positive => v > 0.0,
                Check::NonNegative => v >= 0.0,
            };
        if ok {
            Ok(v)
        } else {
            let want = match self {
                Check::Positive => "finite and > 0",
                Check::NonNegative => "finite and >= 0",
            };
            Err(ConfigError::at(
                key,
                line,
                format!("must be {want}, got {v}"),
            ))
        }
    }
}

impl RunConfig {
    /// Resolves `source` (TOML text, possibly empty) against defaults and `overrides`.
    pub fn parse(source: &str, overrides: &Overrides) -> Result<Self, ConfigError> {
        let raw: RawConfig = toml::from_str(source).map_err(|err| ConfigError {
            key: None,
            line: err.span().map(|s| Lines(source).of(s)),
            message: err.message().to_string(),
        })?;
        let r = Resolver {
            lines: Lines(source),
        };
        use Check::*;

        let sc = raw.scenario.unwrap_or_default();
        let mode = r.choice(
            "scenario.mode",
            &sc.mode,
            ModeKind::Active,
            &[("active", ModeKind::Active), ("passive", ModeKind::Passive)],
        )?;
        let beta = r.float("scenario.beta", &sc.beta, 0.0, NonNegative)?;
        let navier = r.choice(
            "scenario.bc",
            &sc.bc,
            beta > 0.0,
            &[("noslip", false), ("navier", true)],
        )?;
        let beta_line = sc.beta.as_ref().map(|s| r.lines.of(s.span()));
        if navier && beta == 0.0 {
            let line = beta_line.or(sc.bc.as_ref().map(|b| r.lines.of(b.span())));
            return Err(ConfigError::at(
                "scenario.beta",
                line,
                "must be > 0 when bc = \"navier\"",
            ));
        }
        if !navier && beta != 0.0 {
            return Err(ConfigError::at(
                "scenario.beta",
                beta_line,
                "must be 0 when bc = \"noslip\"",
            ));
        }
        let scenario = ScenarioConfig {
            mode,
            beta,
            h0: r.float("scenario.h0", &sc.h0, 0.5, Positive)?,
            s0: r.float("scenario.s0", &sc.s0, 0.0, NonNegative)?,
            m: r.float("scenario.m", &sc.m, 0.0, NonNegative)?,
            f_p: r.float("scenario.f_p", &sc.f_p, 1.0, NonNegative)?,
            lambda: r.float("scenario.lambda", &sc.lambda, 1.0, Positive)?,
            f_ext: r.float("scenario.f_ext", &sc.f_ext, 1.0, Positive)?,
        };
        check_bc("scenario.beta", scenario.beta, beta_line)?;

        let ig = raw.integrator.unwrap_or_default();
        let defaults = IntegratorOptions::default();
        let mut integrator = IntegratorConfig {
            rtol: r.float("integrator.rtol", &ig.rtol, defaults.rtol, Positive)?,
            atol: r.float("integrator.atol", &ig.atol, defaults.atol, Positive)?,
            max_steps: r.count(
                "integrator.max_steps",
                &ig.max_steps,
                defaults.max_steps as u64,
                1,
            )?,
            t_max: r.float("integrator.t_max", &ig.t_max, 200.0, Positive)?,
            h_floor: match &ig.h_floor {
                None => None,
                Some(_) => Some(r.float("integrator.h_floor", &ig.h_floor, 0.0, Positive)?),
            },
        };
        if let Some(tol) = overrides.tol {
            let tol = Positive.apply("--tol", tol, None)?;
            let o = IntegratorOptions::with_tol(tol);
            integrator.rtol = o.rtol;
            integrator.atol = o.atol;
        }
        if let Some(floor) = integrator.h_floor {
            if floor >= scenario.h0 {
                let line = ig.h_floor.as_ref().map(|s| r.lines.of(s.span()));
                return Err(ConfigError::at(
                    "integrator.h_floor",
                    line,
                    format!("must be below scenario.h0 = {}", scenario.h0),
                ));
            }
        }

        let tr = raw.truncation.unwrap_or_default();
        let td = SeriesTruncation::default();
        let mut truncation = TruncationConfig {
            n_max: r.count("truncation.n_max", &tr.n_max, td.n_max as u64, 1)?,
            tail_tol: r.float("truncation.tail_tol", &tr.tail_tol, td.tail_tol, Positive)?,
        };
        if let Some(n) = overrides.n_max {
            if n == 0 {
                return Err(ConfigError::at("--nmax", None, "must be >= 1"));
            }
            truncation.n_max = n;
        }

        let dr = raw.drag.unwrap_or_default();
        let drag = DragConfig {
            h_min: r.float("drag.h_min", &dr.h_min, 1e-4, Positive)?,
            h_max: r.float("drag.h_max", &dr.h_max, 100.0, Positive)?,
            points: r.count("drag.points", &dr.points, 61, 2)?,
            spacing: r.choice(
                "drag.spacing",
                &dr.spacing,
                Spacing::Log,
                &[("log", Spacing::Log), ("linear", Spacing::Linear)],
            )?,
            lambda: r.float("drag.lambda", &dr.lambda, scenario.lambda, Positive)?,
        };
        if drag.h_min >= drag.h_max {
            let line = dr
                .h_min
                .as_ref()
                .or(dr.h_max.as_ref())
                .map(|s| r.lines.of(s.span()));
            return Err(ConfigError::at(
                "drag.h_min",
                line,
                "must be below drag.h_max",
            ));
        }

        let sweep = match raw.sweep {
            None => None,
            Some(sw) => {
                let cfg = SweepConfig {
                    kind: r.choice(
                        "sweep.kind",
                        &sw.kind,
                        SweepKind::Dynamics,
                        &[("drag", SweepKind::Drag), ("dynamics", SweepKind::Dynamics)],
                    )?,
                    lambda: r.axis("sweep.lambda", &sw.lambda, Positive)?,
                    beta: r.axis("sweep.beta", &sw.beta, NonNegative)?,
                    h0: r.axis("sweep.h0", &sw.h0, Positive)?,
                    s0: r.axis("sweep.s0", &sw.s0, NonNegative)?,
                    f_p: r.axis("sweep.f_p", &sw.f_p, Positive)?,
                    m: r.axis("sweep.m", &sw.m, NonNegative)?,
                };
                if let Some(betas) = &cfg.beta {
                    let line = sw.beta.as_ref().map(|s| r.lines.of(s.span()));
                    for &b in betas {
                        check_bc("sweep.beta", b, line)?;
                    }
                }
                Some(cfg)
            }
        };

        let output_dir = match overrides.out.clone() {
            Some(d) => d,
            None => raw
                .output
                .and_then(|o| o.dir)
                .map(|d| d.into_inner())
                .unwrap_or_else(|| ".".into()),
        };

        Ok(Self {
            scenario,
            integrator,
            truncation,
            drag,
            sweep,
            output_dir,
        })
    }

    /// Canonical TOML rendering of the resolved values.
    pub fn canonical(&self) -> String {
        toml::to_string(self).expect("resolved config serializes")
    }

    pub fn series_truncation(&self) -> SeriesTruncation {
        SeriesTruncation::new(self.truncation.n_max as usize, self.truncation.tail_tol)
            .expect("validated at resolution")
    }

    pub fn integrator_options(&self) -> IntegratorOptions {
        IntegratorOptions {
            rtol: self.integrator.rtol,
            atol: self.integrator.atol,
            max_steps: self.integrator.max_steps as usize,
        }
    }

    pub fn boundary(&self) -> BoundaryCondition {
        BoundaryCondition::navier(self.scenario.beta).expect("validated at resolution")
    }

    pub fn swimmer_scenario(&self) -> SwimmerScenario {
        self.scenario.build()
    }

    pub fn h_floor(&self) -> f64 {
        self.integrator
            .h_floor
            .unwrap_or_else(|| self.swimmer_scenario().default_h_floor())
    }
}

impl ScenarioConfig {
    pub fn build(&self) -> SwimmerScenario {
        let bc = BoundaryCondition::navier(self.beta).expect("validated at resolution");
        let sc = match self.mode {
            ModeKind::Active => SwimmerScenario::active(self.h0, self.m, self.f_p, self.lambda, bc),
            ModeKind::Passive => SwimmerScenario::passive(self.h0, self.m, self.f_ext, bc),
        };
        sc.with_speed(self.s0)
    }
}

fn check_bc(key: &str, beta: f64, line: Option<usize>) -> Result<(), ConfigError> {
    BoundaryCondition::navier(beta)
        .map(|_| ())
        .map_err(|e| ConfigError::at(key, line, e.to_string()))
}
