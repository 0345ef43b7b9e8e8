//! Scenario files: one TOML document per run.
//!
//! ```toml
//! scenario = "thermal_sound"
//!
//! [grid]
//! x_min = -20.0
//! x_max = 20.0
//! n_x = 512
//! p_max = 1.0
//! n_p = 8
//!
//! [physics]
//! m = 1.0
//! gamma = 0.01
//! kt = 1.0
//! potential = { kind = "free" }
//!
//! [run]
//! dt = 0.1
//! t_end = 12.0
//! ```
//!
//! Unknown keys are rejected. Errors carry the line they refer to when one
//! can be found.

use phasewave::fokkerplanck::ThermalParams;
use phasewave::{Grid1D, ParticleParams, Potential};
use serde::Deserialize;
use std::fmt;
use std::path::PathBuf;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScenarioKind {
    ActionWave,
    GlauberLiouville,
    TdseVsLiouville,
    QuarticCorrection,
    FokkerPlanckVsLangevin,
    ThermalSound,
    Smoluchowski,
    ModifiedHj,
    VariationalChecks,
}

impl ScenarioKind {
    pub fn name(&self) -> &'static str {
        match self {
            ScenarioKind::ActionWave => "action_wave",
            ScenarioKind::GlauberLiouville => "glauber_liouville",
            ScenarioKind::TdseVsLiouville => "tdse_vs_liouville",
            ScenarioKind::QuarticCorrection => "quartic_correction",
            ScenarioKind::FokkerPlanckVsLangevin => "fokker_planck_vs_langevin",
            ScenarioKind::ThermalSound => "thermal_sound",
            ScenarioKind::Smoluchowski => "smoluchowski",
            ScenarioKind::ModifiedHj => "modified_hj",
            ScenarioKind::VariationalChecks => "variational_checks",
        }
    }

    /// Scenarios whose grid is fixed by `σ` and `dx` rather than by `p_max`.
    fn derives_p_max(&self) -> bool {
        matches!(self, ScenarioKind::TdseVsLiouville | ScenarioKind::QuarticCorrection)
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSection {
    pub x_min: f64,
    pub x_max: f64,
    pub n_x: usize,
    /// Required except for wave-function scenarios, where it is derived.
    pub p_max: Option<f64>,
    pub n_p: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum PotentialSection {
    Free,
    Uniform { g: f64 },
    Harmonic { omega: f64 },
    Quartic { c2: f64, #[serde(default)] c3: f64, c4: f64 },
    Box { width: f64 },
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PhysicsSection {
    pub m: f64,
    #[serde(default = "one")]
    pub sigma: f64,
    pub potential: PotentialSection,
    #[serde(default)]
    pub gamma: f64,
    #[serde(default)]
    pub kt: f64,
}

fn one() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunSection {
    pub dt: f64,
    pub t_end: f64,
    /// Steps between written snapshots; 0 writes the final state only.
    #[serde(default)]
    pub output_every: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub n_traj: usize,
}

/// Initial-state knobs; each scenario supplies its own defaults.
#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitialSection {
    pub x0: Option<f64>,
    pub p0: Option<f64>,
    pub width: Option<f64>,
    pub p_width: Option<f64>,
    pub amplitude: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    pub dir: Option<PathBuf>,
    #[serde(default)]
    pub plot: bool,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub scenario: ScenarioKind,
    pub grid: GridSection,
    pub physics: PhysicsSection,
    pub run: RunSection,
    #[serde(default)]
    pub initial: InitialSection,
    #[serde(default)]
    pub output: OutputSection,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError {
    pub line: Option<usize>,
    pub message: String,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.line {
            Some(l) => write!(f, "line {l}: {}", self.message),
            None => write!(f, "{}", self.message),
        }
    }
}

impl std::error::Error for ConfigError {}

/// 1-based line of `key` inside `[section]` (or of the header itself when
/// `key` is empty).
fn locate(src: &str, section: &str, key: &str) -> Option<usize> {
    let mut current = String::new();
    for (i, raw) in src.lines().enumerate() {
        let line = raw.trim();
        if let Some(h) = line.strip_prefix('[').and_then(|l| l.strip_suffix(']')) {
            current = h.trim().to_string();
            if key.is_empty() && current == section {
                return Some(i + 1);
            }
            continue;
        }
        if current == section && !key.is_empty() {
            let name = line.split('=').next().unwrap_or("").trim();
            if name == key {
                return Some(i + 1);
            }
        }
    }
    None
}

fn toml_line(src: &str, e: &toml::de::Error) -> Option<usize> {
    e.span().map(|s| src[..s.start.min(src.len())].matches('\n').count() + 1)
}

impl ScenarioConfig {
    /// Parses and validates a scenario file.
    pub fn parse(src: &str) -> Result<Self, ConfigError> {
        let cfg: ScenarioConfig = toml::from_str(src).map_err(|e| ConfigError {
            line: toml_line(src, &e),
            message: e.message().to_string(),
        })?;
        cfg.validate().map_err(|(section, key, message)| ConfigError {
            line: locate(src, section, key).or_else(|| locate(src, section, "")),
            message,
        })?;
        Ok(cfg)
    }

    /// Checks everything that does not need a run; errors name the offending
    /// section and key.
    pub fn validate(&self) -> Result<(), (&'static str, &'static str, String)> {
        let bad = |s: &'static str, k: &'static str, m: String| Err((s, k, m));
        if self.scenario.derives_p_max() {
            if self.grid.p_max.is_some() {
                return bad("grid", "p_max", format!("{} derives p_max from sigma and dx; remove it", self.scenario.name()));
            }
        } else if self.grid.p_max.is_none() {
            return bad("grid", "", "missing field `p_max`".into());
        }
        self.grid().map_err(|e| ("grid", "", e.to_string()))?;
        self.particle().map_err(|e| ("physics", "m", e.to_string()))?;
        self.thermal().map_err(|e| ("physics", "gamma", e.to_string()))?;
        self.potential().map_err(|e| ("physics", "potential", e.to_string()))?;
        let r = &self.run;
        if !(r.dt > 0.0 && r.dt.is_finite()) {
            return bad("run", "dt", format!("dt must be positive, got {}", r.dt));
        }
        if !(r.t_end > 0.0 && r.t_end.is_finite()) {
            return bad("run", "t_end", format!("t_end must be positive, got {}", r.t_end));
        }
        let harmonic = matches!(self.physics.potential, PotentialSection::Harmonic { .. });
        match self.scenario {
            ScenarioKind::GlauberLiouville if !harmonic => {
                bad("physics", "potential", "glauber_liouville needs a harmonic potential".into())
            }
            ScenarioKind::QuarticCorrection if !matches!(self.physics.potential, PotentialSection::Quartic { .. }) => {
                bad("physics", "potential", "quartic_correction needs a quartic potential".into())
            }
            ScenarioKind::FokkerPlanckVsLangevin if r.n_traj == 0 => {
                bad("run", "n_traj", "fokker_planck_vs_langevin needs n_traj > 0".into())
            }
            ScenarioKind::FokkerPlanckVsLangevin | ScenarioKind::ThermalSound | ScenarioKind::Smoluchowski
                if !(self.physics.gamma > 0.0 && self.physics.kt > 0.0) =>
            {
                bad("physics", "gamma", format!("{} needs gamma > 0 and kt > 0", self.scenario.name()))
            }
            ScenarioKind::ModifiedHj if self.physics.kt != 0.0 => {
                bad("physics", "kt", "modified_hj holds at zero temperature; set kt = 0".into())
            }
            _ => Ok(()),
        }
    }

    pub fn grid(&self) -> phasewave::Result<Grid1D> {
        let g = &self.grid;
        match g.p_max {
            Some(p) => Grid1D::new(g.x_min, g.x_max, g.n_x, p, g.n_p),
            None => Grid1D::for_wave_functions(g.x_min, g.x_max, g.n_x, g.n_p, self.physics.sigma, 1),
        }
    }

    pub fn particle(&self) -> phasewave::Result<ParticleParams> {
        ParticleParams::new(self.physics.m, self.physics.sigma)
    }

    pub fn thermal(&self) -> phasewave::Result<ThermalParams> {
        ThermalParams::new(self.physics.gamma, self.physics.kt)
    }

    pub fn potential(&self) -> phasewave::Result<Potential> {
        Ok(match self.physics.potential {
            PotentialSection::Free => Potential::Free,
            PotentialSection::Uniform { g } => Potential::Uniform { g },
            PotentialSection::Harmonic { omega } => Potential::harmonic(omega, self.physics.m)?,
            PotentialSection::Quartic { c2, c3, c4 } => Potential::Quartic { c2, c3, c4 },
            PotentialSection::Box { width } => Potential::boxed(width)?,
        })
    }

    /// Number of steps of size `dt` that reach `t_end`.
    pub fn steps(&self) -> usize {
        (self.run.t_end / self.run.dt).round().max(1.0) as usize
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const GOOD: &str = r#"
scenario = "smoluchowski"

[grid]
x_min = -6.0
x_max = 6.0
n_x = 128
p_max = 1.0
n_p = 8

[physics]
m = 1.0
gamma = 4.0
kt = 0.8
potential = { kind = "harmonic", omega = 1.0 }

[run]
dt = 0.001
t_end = 1.0
"#;

    #[test]
    fn parses_a_complete_file() {
        let cfg = ScenarioConfig::parse(GOOD).unwrap();
        assert_eq!(cfg.scenario, ScenarioKind::Smoluchowski);
        assert_eq!(cfg.physics.sigma, 1.0);
        assert_eq!(cfg.steps(), 1000);
        assert!(!cfg.output.plot);
    }

    #[test]
    fn missing_mass_names_the_physics_table() {
        let src = GOOD.replace("m = 1.0\n", "");
        let e = ScenarioConfig::parse(&src).unwrap_err();
        assert!(e.message.contains("`m`"), "{e}");
        assert_eq!(e.line, Some(11));
    }

    #[test]
    fn unknown_key_is_rejected_at_its_line() {
        let src = GOOD.replace("n_p = 8", "n_p = 8\ncolour = 3");
        let e = ScenarioConfig::parse(&src).unwrap_err();
        assert!(e.message.contains("colour"), "{e}");
        assert_eq!(e.line, Some(10));
    }

    #[test]
    fn semantic_errors_point_at_the_key() {
        let e = ScenarioConfig::parse(&GOOD.replace("dt = 0.001", "dt = -1.0")).unwrap_err();
        assert_eq!(e.line, Some(18));
        let e = ScenarioConfig::parse(&GOOD.replace("n_x = 128", "n_x = 100")).unwrap_err();
        assert_eq!(e.line, Some(4));
        let e = ScenarioConfig::parse(&GOOD.replace("kt = 0.8", "kt = 0.0")).unwrap_err();
        assert_eq!(e.line, Some(13));
    }

    #[test]
    fn unknown_potential_kind_fails() {
        let e = ScenarioConfig::parse(&GOOD.replace("\"harmonic\"", "\"sextic\"")).unwrap_err();
        assert!(e.line.is_some());
    }
}
