//! Run configuration and its flat key-value (INI-style) file format.
//!
//! The format is deliberately minimal: `[section]` headers, `key = value`
//! lines, `#` comments, C-locale numerals. Floats are written in Rust's
//! shortest round-trip form so save/load is lossless.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use crate::coalescence::MergeRule;
use crate::error::{SimError, SimResult};
use crate::model::SpeciesComponent;
use crate::vec2::Vec2;

/// How the particle system is initialized.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Mode {
    /// Single species: chi, mu, total mass, bumps.
    #[default]
    Pks,
    /// Multiple species with per-species diffusivity and mass.
    Mpks,
    /// Explicit particle list with a direct particle-level mu_tilde.
    RawParticles,
}

/// Radial profile used by the bump samplers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum BumpProfile {
    /// Density proportional to `exp(-1/(1-(r/a)^2))` on `r < a`.
    #[default]
    Mollifier,
    /// Uniform on the support.
    Uniform,
}

/// One elliptical bump of the initial condition. A disc is the special
/// case of equal semi-axes.
#[derive(Debug, Clone, PartialEq)]
pub struct BumpSpec {
    pub center: Vec2,
    /// Semi-axes before rotation.
    pub semi_axes: Vec2,
    /// Rotation angle of the first axis, radians.
    pub angle: f64,
    pub mass: f64,
    pub species: u32,
}

/// Explicit particle for raw mode.
#[derive(Debug, Clone, PartialEq)]
pub struct RawParticleSpec {
    pub position: Vec2,
    pub mass: f64,
    pub species: u32,
}

/// Full description of one simulation run.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub mode: Mode,
    pub chi: f64,
    /// Per-species macroscopic diffusivity and total mass. One entry in
    /// PKS mode; unused in raw mode.
    pub species: Vec<SpeciesComponent>,
    /// Particle-level diffusion scale for raw mode.
    pub mu_tilde: Option<f64>,
    /// Initial particle count (PKS/MPKS modes).
    pub n0: usize,
    pub domain_center: Vec2,
    pub domain_half_width: f64,
    /// Grid nodes per axis.
    pub nx: usize,
    pub dt: f64,
    pub t_end: f64,
    /// Cluster separation threshold.
    pub eta: f64,
    /// Cluster collision probability floor.
    pub p_floor: f64,
    pub seed: u64,
    pub output_dir: PathBuf,
    pub merge_rule: MergeRule,
    /// Snapshot every this many macro steps; 0 disables snapshots.
    pub snapshot_stride: usize,
    /// Record the time series every this many macro steps.
    pub record_stride: usize,
    pub profile: BumpProfile,
    pub bumps: Vec<BumpSpec>,
    pub raw_particles: Vec<RawParticleSpec>,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            mode: Mode::Pks,
            chi: 1.0,
            species: Vec::new(),
            mu_tilde: None,
            n0: 0,
            domain_center: Vec2::ZERO,
            domain_half_width: 1.0,
            nx: 65,
            dt: 1e-3,
            t_end: 1e-2,
            eta: crate::clustering::DEFAULT_ETA,
            p_floor: crate::clustering::DEFAULT_COLLISION_PROBABILITY,
            seed: 0,
            output_dir: PathBuf::from("out"),
            merge_rule: MergeRule::MomentHitsZero,
            snapshot_stride: 0,
            record_stride: 1,
            profile: BumpProfile::Mollifier,
            bumps: Vec::new(),
            raw_particles: Vec::new(),
        }
    }
}

impl RunConfig {
    pub fn validate(&self) -> SimResult<()> {
        let cfg = |msg: String| Err(SimError::config(msg));
        if !(self.chi >= 0.0 && self.chi.is_finite()) {
            return cfg(format!("chi must be nonnegative, got {}", self.chi));
        }
        if !(self.dt > 0.0) {
            return cfg(format!("dt must be positive, got {}", self.dt));
        }
        if !(self.t_end >= 0.0) {
            return cfg(format!("t_end must be nonnegative, got {}", self.t_end));
        }
        if !(self.eta > 0.0 && self.eta < 1.0) {
            return cfg(format!("eta must lie in (0,1), got {}", self.eta));
        }
        if !(self.p_floor > 0.0 && self.p_floor < 1.0) {
            return cfg(format!("p must lie in (0,1), got {}", self.p_floor));
        }
        if !(self.domain_half_width > 0.0) {
            return cfg(format!(
                "domain half width must be positive, got {}",
                self.domain_half_width
            ));
        }
        if self.nx < 3 {
            return cfg(format!("grid needs at least 3 nodes per axis, got {}", self.nx));
        }
        if self.record_stride == 0 {
            return cfg("record_stride must be at least 1".into());
        }
        match self.mode {
            Mode::RawParticles => {
                if self.raw_particles.is_empty() {
                    return cfg("raw-particles mode needs at least one particle".into());
                }
                let Some(mu_tilde) = self.mu_tilde else {
                    return cfg("raw-particles mode needs mu_tilde".into());
                };
                if !(mu_tilde > 0.0) {
                    return cfg(format!("mu_tilde must be positive, got {mu_tilde}"));
                }
                for (k, p) in self.raw_particles.iter().enumerate() {
                    if !(p.mass > 0.0) {
                        return cfg(format!("particle {}: mass must be positive", k + 1));
                    }
                }
            }
            Mode::Pks | Mode::Mpks => {
                if self.n0 == 0 {
                    return cfg("n0 must be at least 1".into());
                }
                if self.species.is_empty() {
                    return cfg("at least one species is required".into());
                }
                if self.mode == Mode::Pks && self.species.len() != 1 {
                    return cfg(format!(
                        "pks mode takes exactly one species, got {}",
                        self.species.len()
                    ));
                }
                for (k, s) in self.species.iter().enumerate() {
                    if !(s.total_mass > 0.0 && s.diffusivity > 0.0) {
                        return cfg(format!(
                            "species {}: mass and diffusivity must be positive",
                            k + 1
                        ));
                    }
                }
                let bump_mass: f64 = self.bumps.iter().map(|b| b.mass).sum();
                let total: f64 = self.species.iter().map(|s| s.total_mass).sum();
                if self.bumps.is_empty() {
                    return cfg("pks/mpks mode needs at least one bump".into());
                }
                if (bump_mass - total).abs() > 1e-9 * total.max(1.0) {
                    return cfg(format!(
                        "bump masses sum to {bump_mass} but species masses sum to {total}"
                    ));
                }
                for (k, b) in self.bumps.iter().enumerate() {
                    if !(b.mass > 0.0 && b.semi_axes.x > 0.0 && b.semi_axes.y > 0.0) {
                        return cfg(format!(
                            "bump {}: mass and semi-axes must be positive",
                            k + 1
                        ));
                    }
                    if b.species as usize >= self.species.len() {
                        return cfg(format!(
                            "bump {}: species {} out of range",
                            k + 1,
                            b.species
                        ));
                    }
                }
            }
        }
        Ok(())
    }

    /// Serialize to the INI-style text format.
    pub fn to_ini_string(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "[run]");
        let _ = writeln!(
            s,
            "mode = {}",
            match self.mode {
                Mode::Pks => "pks",
                Mode::Mpks => "mpks",
                Mode::RawParticles => "raw-particles",
            }
        );
        let _ = writeln!(s, "chi = {:?}", self.chi);
        if let Some(mu_tilde) = self.mu_tilde {
            let _ = writeln!(s, "mu_tilde = {mu_tilde:?}");
        }
        let _ = writeln!(s, "n0 = {}", self.n0);
        let _ = writeln!(s, "dt = {:?}", self.dt);
        let _ = writeln!(s, "t_end = {:?}", self.t_end);
        let _ = writeln!(s, "seed = {}", self.seed);
        let _ = writeln!(s, "output_dir = {}", self.output_dir.display());
        let _ = writeln!(
            s,
            "merge_rule = {}",
            match self.merge_rule {
                MergeRule::MomentHitsZero => "moment-hits-zero",
                MergeRule::AnyDecrease => "any-decrease",
            }
        );
        let _ = writeln!(s, "snapshot_stride = {}", self.snapshot_stride);
        let _ = writeln!(s, "record_stride = {}", self.record_stride);
        let _ = writeln!(
            s,
            "profile = {}",
            match self.profile {
                BumpProfile::Mollifier => "mollifier",
                BumpProfile::Uniform => "uniform",
            }
        );
        let _ = writeln!(s, "\n[domain]");
        let _ = writeln!(s, "center_x = {:?}", self.domain_center.x);
        let _ = writeln!(s, "center_y = {:?}", self.domain_center.y);
        let _ = writeln!(s, "half_width = {:?}", self.domain_half_width);
        let _ = writeln!(s, "nx = {}", self.nx);
        let _ = writeln!(s, "\n[cluster]");
        let _ = writeln!(s, "eta = {:?}", self.eta);
        let _ = writeln!(s, "p = {:?}", self.p_floor);
        for (k, sp) in self.species.iter().enumerate() {
            let _ = writeln!(s, "\n[species {}]", k + 1);
            let _ = writeln!(s, "mu = {:?}", sp.diffusivity);
            let _ = writeln!(s, "mass = {:?}", sp.total_mass);
        }
        for (k, b) in self.bumps.iter().enumerate() {
            let _ = writeln!(s, "\n[bump {}]", k + 1);
            let _ = writeln!(s, "center_x = {:?}", b.center.x);
            let _ = writeln!(s, "center_y = {:?}", b.center.y);
            let _ = writeln!(s, "axis_a = {:?}", b.semi_axes.x);
            let _ = writeln!(s, "axis_b = {:?}", b.semi_axes.y);
            let _ = writeln!(s, "angle = {:?}", b.angle);
            let _ = writeln!(s, "mass = {:?}", b.mass);
            let _ = writeln!(s, "species = {}", b.species + 1);
        }
        for (k, p) in self.raw_particles.iter().enumerate() {
            let _ = writeln!(s, "\n[particle {}]", k + 1);
            let _ = writeln!(s, "x = {:?}", p.position.x);
            let _ = writeln!(s, "y = {:?}", p.position.y);
            let _ = writeln!(s, "mass = {:?}", p.mass);
            let _ = writeln!(s, "species = {}", p.species + 1);
        }
        s
    }

    /// Parse the INI-style text format.
    pub fn from_ini_str(text: &str) -> SimResult<RunConfig> {
        let mut sections: Vec<(String, BTreeMap<String, String>)> = Vec::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            if let Some(name) = line.strip_prefix('[').and_then(|s| s.strip_suffix(']')) {
                sections.push((name.trim().to_string(), BTreeMap::new()));
            } else if let Some((key, value)) = line.split_once('=') {
                let Some((_, map)) = sections.last_mut() else {
                    return Err(SimError::config(format!(
                        "line {}: key before any [section]",
                        lineno + 1
                    )));
                };
                map.insert(key.trim().to_string(), value.trim().to_string());
            } else {
                return Err(SimError::config(format!(
                    "line {}: expected `key = value` or `[section]`, got {line:?}",
                    lineno + 1
                )));
            }
        }

        let mut config = RunConfig::default();
        let get = |map: &BTreeMap<String, String>, section: &str, key: &str| -> SimResult<String> {
            map.get(key).cloned().ok_or_else(|| {
                SimError::config(format!("[{section}] is missing key {key:?}"))
            })
        };
        fn num<T: std::str::FromStr>(section: &str, key: &str, v: &str) -> SimResult<T> {
            v.parse().map_err(|_| {
                SimError::config(format!("[{section}] {key} = {v:?}: not a valid value"))
            })
        }

        let mut species: Vec<(usize, SpeciesComponent)> = Vec::new();
        let mut bumps: Vec<(usize, BumpSpec)> = Vec::new();
        let mut particles: Vec<(usize, RawParticleSpec)> = Vec::new();
        for (name, map) in &sections {
            match name.split_whitespace().collect::<Vec<_>>().as_slice() {
                ["run"] => {
                    config.mode = match get(map, name, "mode")?.as_str() {
                        "pks" => Mode::Pks,
                        "mpks" => Mode::Mpks,
                        "raw-particles" => Mode::RawParticles,
                        other => {
                            return Err(SimError::config(format!("unknown mode {other:?}")))
                        }
                    };
                    config.chi = num(name, "chi", &get(map, name, "chi")?)?;
                    if let Some(v) = map.get("mu_tilde") {
                        config.mu_tilde = Some(num(name, "mu_tilde", v)?);
                    }
                    config.n0 = num(name, "n0", &get(map, name, "n0")?)?;
                    config.dt = num(name, "dt", &get(map, name, "dt")?)?;
                    config.t_end = num(name, "t_end", &get(map, name, "t_end")?)?;
                    config.seed = num(name, "seed", &get(map, name, "seed")?)?;
                    config.output_dir = PathBuf::from(get(map, name, "output_dir")?);
                    config.merge_rule = match get(map, name, "merge_rule")?.as_str() {
                        "moment-hits-zero" => MergeRule::MomentHitsZero,
                        "any-decrease" => MergeRule::AnyDecrease,
                        other => {
                            return Err(SimError::config(format!(
                                "unknown merge rule {other:?}"
                            )))
                        }
                    };
                    config.snapshot_stride =
                        num(name, "snapshot_stride", &get(map, name, "snapshot_stride")?)?;
                    config.record_stride =
                        num(name, "record_stride", &get(map, name, "record_stride")?)?;
                    config.profile = match get(map, name, "profile")?.as_str() {
                        "mollifier" => BumpProfile::Mollifier,
                        "uniform" => BumpProfile::Uniform,
                        other => {
                            return Err(SimError::config(format!(
                                "unknown bump profile {other:?}"
                            )))
                        }
                    };
                }
                ["domain"] => {
                    config.domain_center = Vec2::new(
                        num(name, "center_x", &get(map, name, "center_x")?)?,
                        num(name, "center_y", &get(map, name, "center_y")?)?,
                    );
                    config.domain_half_width =
                        num(name, "half_width", &get(map, name, "half_width")?)?;
                    config.nx = num(name, "nx", &get(map, name, "nx")?)?;
                }
                ["cluster"] => {
                    config.eta = num(name, "eta", &get(map, name, "eta")?)?;
                    config.p_floor = num(name, "p", &get(map, name, "p")?)?;
                }
                ["species", k] => {
                    let k: usize = num(name, "index", k)?;
                    species.push((
                        k,
                        SpeciesComponent {
                            diffusivity: num(name, "mu", &get(map, name, "mu")?)?,
                            total_mass: num(name, "mass", &get(map, name, "mass")?)?,
                        },
                    ));
                }
                ["bump", k] => {
                    let k: usize = num(name, "index", k)?;
                    let species_1based: usize =
                        num(name, "species", &get(map, name, "species")?)?;
                    if species_1based == 0 {
                        return Err(SimError::config(format!(
                            "[{name}]: species indices are 1-based"
                        )));
                    }
                    bumps.push((
                        k,
                        BumpSpec {
                            center: Vec2::new(
                                num(name, "center_x", &get(map, name, "center_x")?)?,
                                num(name, "center_y", &get(map, name, "center_y")?)?,
                            ),
                            semi_axes: Vec2::new(
                                num(name, "axis_a", &get(map, name, "axis_a")?)?,
                                num(name, "axis_b", &get(map, name, "axis_b")?)?,
                            ),
                            angle: num(name, "angle", &get(map, name, "angle")?)?,
                            mass: num(name, "mass", &get(map, name, "mass")?)?,
                            species: (species_1based - 1) as u32,
                        },
                    ));
                }
                ["particle", k] => {
                    let k: usize = num(name, "index", k)?;
                    let species_1based: usize =
                        num(name, "species", &get(map, name, "species")?)?;
                    if species_1based == 0 {
                        return Err(SimError::config(format!(
                            "[{name}]: species indices are 1-based"
                        )));
                    }
                    particles.push((
                        k,
                        RawParticleSpec {
                            position: Vec2::new(
                                num(name, "x", &get(map, name, "x")?)?,
                                num(name, "y", &get(map, name, "y")?)?,
                            ),
                            mass: num(name, "mass", &get(map, name, "mass")?)?,
                            species: (species_1based - 1) as u32,
                        },
                    ));
                }
                _ => {
                    return Err(SimError::config(format!("unknown section [{name}]")));
                }
            }
        }
        species.sort_by_key(|&(k, _)| k);
        bumps.sort_by_key(|&(k, _)| k);
        particles.sort_by_key(|&(k, _)| k);
        config.species = species.into_iter().map(|(_, s)| s).collect();
        config.bumps = bumps.into_iter().map(|(_, b)| b).collect();
        config.raw_particles = particles.into_iter().map(|(_, p)| p).collect();
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: &Path) -> SimResult<RunConfig> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| SimError::io(path.display().to_string(), e))?;
        Self::from_ini_str(&text)
    }

    pub fn save(&self, path: &Path) -> SimResult<()> {
        std::fs::write(path, self.to_ini_string())
            .map_err(|e| SimError::io(path.display().to_string(), e))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn sample_config() -> RunConfig {
        RunConfig {
            mode: Mode::Mpks,
            chi: 4.0,
            species: vec![
                SpeciesComponent {
                    diffusivity: 17.5,
                    total_mass: 4.0,
                },
                SpeciesComponent {
                    diffusivity: 35.0 / 12.0,
                    total_mass: 24.0,
                },
            ],
            mu_tilde: None,
            n0: 1000,
            domain_center: Vec2::new(0.1, -0.25),
            domain_half_width: 1.5,
            nx: 161,
            dt: 5e-4,
            t_end: 0.03,
            eta: 0.1,
            p_floor: 0.01,
            seed: 12345,
            output_dir: PathBuf::from("out/mpks"),
            merge_rule: MergeRule::AnyDecrease,
            snapshot_stride: 10,
            record_stride: 2,
            profile: BumpProfile::Mollifier,
            bumps: vec![
                BumpSpec {
                    center: Vec2::new(0.0, 0.3),
                    semi_axes: Vec2::new(0.35, 0.35),
                    angle: 0.0,
                    mass: 4.0,
                    species: 0,
                },
                BumpSpec {
                    center: Vec2::new(0.0, -0.3),
                    semi_axes: Vec2::new(0.35, 0.2),
                    angle: PI / 6.0,
                    mass: 24.0,
                    species: 1,
                },
            ],
            raw_particles: Vec::new(),
        }
    }

    #[test]
    fn round_trips_losslessly() {
        let config = sample_config();
        let text = config.to_ini_string();
        let back = RunConfig::from_ini_str(&text).unwrap();
        assert_eq!(config, back);
    }

    #[test]
    fn raw_mode_round_trips() {
        let config = RunConfig {
            mode: Mode::RawParticles,
            mu_tilde: Some(10.0),
            chi: 10.0,
            raw_particles: vec![
                RawParticleSpec {
                    position: Vec2::new(0.0, 0.1),
                    mass: 20.0,
                    species: 0,
                },
                RawParticleSpec {
                    position: Vec2::new(0.0, -0.1),
                    mass: 100.0,
                    species: 0,
                },
            ],
            n0: 0,
            ..RunConfig::default()
        };
        let back = RunConfig::from_ini_str(&config.to_ini_string()).unwrap();
        assert_eq!(config, back);
    }

    #[test]
    fn comments_and_blank_lines_are_ignored() {
        let config = sample_config();
        let mut text = String::from("# header comment\n\n");
        text.push_str(&config.to_ini_string());
        text.push_str("\n# trailing\n");
        let back = RunConfig::from_ini_str(&text).unwrap();
        assert_eq!(config, back);
    }

    #[test]
    fn validation_rejects_bad_values() {
        let mut c = sample_config();
        c.eta = 1.5;
        assert!(c.validate().is_err());
        let mut c = sample_config();
        c.p_floor = 0.0;
        assert!(c.validate().is_err());
        let mut c = sample_config();
        c.dt = 0.0;
        assert!(c.validate().is_err());
        let mut c = sample_config();
        c.bumps[0].mass = 3.0; // breaks bump/species mass consistency
        assert!(c.validate().is_err());
        let mut c = sample_config();
        c.bumps[0].species = 5;
        assert!(c.validate().is_err());
        let mut c = sample_config();
        c.mode = Mode::Pks; // two species in pks mode
        assert!(c.validate().is_err());
    }

    #[test]
    fn parser_reports_unknown_sections_and_keys() {
        assert!(RunConfig::from_ini_str("[weird]\nx = 1\n").is_err());
        assert!(RunConfig::from_ini_str("x = 1\n").is_err());
        assert!(RunConfig::from_ini_str("[run]\nmode = pks\n").is_err());
    }

    #[test]
    fn save_and_load() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.ini");
        let config = sample_config();
        config.save(&path).unwrap();
        assert_eq!(RunConfig::load(&path).unwrap(), config);
    }
}
