use std::fmt;
use std::time::Duration;

use twosphere::{Provenance, Termination};

use crate::config::RunConfig;
use crate::output::{num, sha256_hex};

/// Summary of one simulation. Renders as TOML: report keys first, then the
/// resolved configuration whose hash is recorded.
#[derive(Debug, Clone)]
pub struct RunReport {
    pub termination: Termination,
    pub fit: Option<(f64, f64)>,
    pub min_h: f64,
    pub provenance: Provenance,
    pub steps: usize,
    pub wall_time: Duration,
    pub config_text: String,
    pub output_dir: String,
}

impl RunReport {
    pub fn config_hash(&self) -> String {
        sha256_hex(&self.config_text)
    }

    pub fn new(config: &RunConfig, termination: Termination) -> Self {
        Self {
            termination,
            fit: None,
            min_h: f64::NAN,
            provenance: Provenance::ExactSeries,
            steps: 0,
            wall_time: Duration::ZERO,
            config_text: config.canonical(),
            output_dir: config.output_dir.clone(),
        }
    }
}

impl fmt::Display for RunReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "# twosphere run report")?;
        writeln!(f, "version = \"{}\"", env!("CARGO_PKG_VERSION"))?;
        writeln!(f, "config_hash = \"sha256:{}\"", self.config_hash())?;
        writeln!(f, "termination = \"{}\"", self.termination.label())?;
        if let Some(t) = self.termination.collision_time() {
            writeln!(f, "t_coll = {}", num(t))?;
        }
        if let Some((c1, c2)) = self.fit {
            writeln!(f, "# h(t) > c1 exp(-c2 t) on the whole trajectory")?;
            writeln!(f, "fit_c1 = {}", num(c1))?;
            writeln!(f, "fit_c2 = {}", num(c2))?;
        }
        writeln!(f, "min_h = {}", num(self.min_h))?;
        writeln!(f, "provenance = \"{}\"", self.provenance.as_str())?;
        writeln!(f, "steps = {}", self.steps)?;
        writeln!(f, "wall_time_s = {:.6}", self.wall_time.as_secs_f64())?;
        writeln!(
            f,
            "output_dir = {}",
            toml::Value::String(self.output_dir.clone())
        )?;
        writeln!(f)?;
        writeln!(f, "# resolved config")?;
        write!(f, "{}", self.config_text)
    }
}
