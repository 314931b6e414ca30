//! Run configuration: TOML text, presets, overrides and resolution to solver inputs.

use std::path::PathBuf;

use dynamo_core::profiles::{
    solar_alpha, solar_initial_field, solar_rotation, ScalarFn, SolarGeometry, TimeField, VectorFn, SOLAR_ROTATION,
};
use dynamo_core::stepper::{Diffusivity, PhysicsConfig};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
#[error("{0}")]
pub struct ConfigError(pub String);

type Result<T> = std::result::Result<T, ConfigError>;

fn err<T>(msg: impl Into<String>) -> Result<T> {
    Err(ConfigError(msg.into()))
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    preset: Option<String>,
    #[serde(default)]
    geometry: RawGeometry,
    #[serde(default)]
    physics: RawPhysics,
    #[serde(default)]
    profiles: RawProfiles,
    #[serde(default)]
    resolution: RawResolution,
    #[serde(default)]
    time: RawTime,
    #[serde(default)]
    output: RawOutput,
    #[serde(default)]
    limits: RawLimits,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawGeometry {
    radii: Option<[f64; 3]>,
    tachocline: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawPhysics {
    beta: Option<[f64; 3]>,
    r_alpha: Option<f64>,
    r_m: Option<f64>,
    sigma: Option<f64>,
    rotation: Option<[f64; 3]>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawProfiles {
    alpha: Option<String>,
    velocity: Option<String>,
    initial: Option<String>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawResolution {
    max_degree: Option<usize>,
    radial_degree: Option<usize>,
    n_theta: Option<usize>,
    n_phi: Option<usize>,
    load_points: Option<usize>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawTime {
    tau: Option<f64>,
    steps: Option<u64>,
    final_time: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawOutput {
    directory: Option<PathBuf>,
    energy_every: Option<u64>,
    butterfly_every: Option<u64>,
    slice_every: Option<u64>,
    snapshot_every: Option<u64>,
    slice_resolution: Option<[usize; 2]>,
    butterfly_points: Option<usize>,
    slice_phi: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawLimits {
    divergence_threshold: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Geometry {
    pub radii: [f64; 3],
    pub tachocline: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Physics {
    pub beta: [f64; 3],
    pub r_alpha: f64,
    pub r_m: f64,
    pub sigma: f64,
    pub rotation: [f64; 3],
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum AlphaProfile {
    Solar,
    None,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum VelocityProfile {
    SolarRotation,
    None,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum InitialField {
    SolarDipole,
    Zero,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Profiles {
    pub alpha: AlphaProfile,
    pub velocity: VelocityProfile,
    pub initial: InitialField,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Resolution {
    pub max_degree: usize,
    pub radial_degree: usize,
    pub n_theta: usize,
    pub n_phi: usize,
    pub load_points: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Time {
    pub tau: f64,
    pub steps: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Output {
    pub directory: PathBuf,
    pub energy_every: u64,
    pub butterfly_every: u64,
    pub slice_every: u64,
    pub snapshot_every: u64,
    pub slice_resolution: [usize; 2],
    pub butterfly_points: usize,
    pub slice_phi: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Limits {
    pub divergence_threshold: f64,
}

/// Fully resolved configuration; also the content of the manifest.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunConfig {
    pub preset: Option<String>,
    pub geometry: Geometry,
    pub physics: Physics,
    pub profiles: Profiles,
    pub resolution: Resolution,
    pub time: Time,
    pub output: Output,
    pub limits: Limits,
}

pub const PRESETS: &[&str] = &["solar_interface"];

/// The solar interface dynamo at desk scale.
fn solar_interface() -> RawConfig {
    let n = 20;
    RawConfig {
        preset: Some("solar_interface".into()),
        geometry: RawGeometry {
            radii: Some([1.5, 2.5, 7.5]),
            tachocline: Some(1.875),
        },
        physics: RawPhysics {
            beta: Some([1.0, 1.0, 150.0]),
            r_alpha: Some(30.0),
            r_m: Some(100.0),
            sigma: Some(1.0),
            rotation: Some(SOLAR_ROTATION),
        },
        profiles: RawProfiles {
            alpha: Some("solar".into()),
            velocity: Some("solar_rotation".into()),
            initial: Some("solar_dipole".into()),
        },
        resolution: RawResolution {
            max_degree: Some(13),
            radial_degree: Some(n),
            n_theta: Some(40),
            n_phi: Some(40),
            load_points: Some(n + 2),
        },
        time: RawTime {
            tau: Some(1.0 / 16000.0),
            steps: Some(1600),
            final_time: None,
        },
        ..Default::default()
    }
}

fn preset(name: &str) -> Result<RawConfig> {
    match name {
        "solar_interface" => Ok(solar_interface()),
        _ => err(format!("preset: unknown preset '{name}' (known: {})", PRESETS.join(", "))),
    }
}

/// Parses a `--set` value as a TOML value, falling back to a bare string.
fn parse_value(text: &str) -> toml::Value {
    match format!("v = {text}").parse::<toml::Table>() {
        Ok(mut t) => t.remove("v").expect("key present"),
        Err(_) => toml::Value::String(text.to_string()),
    }
}

/// Applies `section.key=value` overrides to a parsed document.
fn apply_overrides(doc: &mut toml::Table, overrides: &[String]) -> Result<()> {
    for o in overrides {
        let Some((path, value)) = o.split_once('=') else {
            return err(format!("override '{o}' is not of the form key=value"));
        };
        let keys: Vec<&str> = path.trim().split('.').collect();
        if keys.iter().any(|k| k.is_empty()) {
            return err(format!("override '{o}' has an empty key"));
        }
        let mut table = &mut *doc;
        for k in &keys[..keys.len() - 1] {
            let entry = table
                .entry(k.to_string())
                .or_insert_with(|| toml::Value::Table(toml::Table::new()));
            table = match entry {
                toml::Value::Table(t) => t,
                _ => return err(format!("override '{o}': '{k}' is not a section")),
            };
        }
        table.insert(keys[keys.len() - 1].to_string(), parse_value(value.trim()));
    }
    Ok(())
}

/// `explicit` wins over `fallback`.
fn merge(explicit: RawConfig, fallback: RawConfig) -> RawConfig {
    macro_rules! pick {
        ($($sec:ident . $($f:ident),+);+) => {
            RawConfig {
                preset: explicit.preset.or(fallback.preset),
                $($sec: {
                    let (e, f) = (explicit.$sec, fallback.$sec);
                    { let mut out = f; $(out.$f = e.$f.or(out.$f);)+ out }
                },)+
            }
        };
    }
    pick!(
        geometry.radii, tachocline;
        physics.beta, r_alpha, r_m, sigma, rotation;
        profiles.alpha, velocity, initial;
        resolution.max_degree, radial_degree, n_theta, n_phi, load_points;
        time.tau, steps, final_time;
        output.directory, energy_every, butterfly_every, slice_every, snapshot_every, slice_resolution,
            butterfly_points, slice_phi;
        limits.divergence_threshold
    )
}

fn required<T>(v: Option<T>, key: &str) -> Result<T> {
    v.ok_or_else(|| ConfigError(format!("{key}: missing (set it or choose a preset)")))
}

/// Parses configuration text with overrides and resolves every default.
pub fn parse_config(text: &str, overrides: &[String]) -> Result<RunConfig> {
    let mut doc: toml::Table = text.parse().map_err(|e: toml::de::Error| ConfigError(format!("syntax error: {e}")))?;
    apply_overrides(&mut doc, overrides)?;
    if doc.is_empty() {
        return err("empty configuration: choose a preset or give the full physics");
    }
    let raw: RawConfig = toml::Value::Table(doc)
        .try_into()
        .map_err(|e: toml::de::Error| ConfigError(format!("invalid configuration: {}", e.message())))?;
    let raw = match raw.preset.clone() {
        Some(name) => merge(raw, preset(&name)?),
        None => raw,
    };
    resolve(raw)
}

fn resolve(raw: RawConfig) -> Result<RunConfig> {
    let radii = required(raw.geometry.radii, "geometry.radii")?;
    let [r1, r2, r3] = radii;
    if !(r1 > 0.0 && r1 < r2 && r2 < r3) {
        return err(format!("geometry.radii: need 0 < r1 < r2 < r3, got {radii:?}"));
    }
    let tachocline = required(raw.geometry.tachocline, "geometry.tachocline")?;
    if !(tachocline > r1 && tachocline < r2) {
        return err(format!("geometry.tachocline: {tachocline} is not inside ({r1}, {r2})"));
    }
    let p = raw.physics;
    let physics = Physics {
        beta: required(p.beta, "physics.beta")?,
        r_alpha: required(p.r_alpha, "physics.r_alpha")?,
        r_m: required(p.r_m, "physics.r_m")?,
        sigma: required(p.sigma, "physics.sigma")?,
        rotation: p.rotation.unwrap_or(SOLAR_ROTATION),
    };
    if physics.beta.iter().any(|b| !(*b > 0.0 && b.is_finite())) {
        return err(format!("physics.beta: every zone needs a positive value, got {:?}", physics.beta));
    }
    if !(physics.sigma >= 0.0 && physics.sigma.is_finite()) {
        return err(format!("physics.sigma: must be non-negative, got {}", physics.sigma));
    }
    if !physics.r_alpha.is_finite() || !physics.r_m.is_finite() {
        return err("physics.r_alpha, physics.r_m: must be finite");
    }
    let pr = raw.profiles;
    let profiles = Profiles {
        alpha: match required(pr.alpha, "profiles.alpha")?.as_str() {
            "solar" => AlphaProfile::Solar,
            "none" => AlphaProfile::None,
            o => return err(format!("profiles.alpha: unknown profile '{o}' (known: solar, none)")),
        },
        velocity: match required(pr.velocity, "profiles.velocity")?.as_str() {
            "solar_rotation" => VelocityProfile::SolarRotation,
            "none" => VelocityProfile::None,
            o => return err(format!("profiles.velocity: unknown profile '{o}' (known: solar_rotation, none)")),
        },
        initial: match required(pr.initial, "profiles.initial")?.as_str() {
            "solar_dipole" => InitialField::SolarDipole,
            "zero" => InitialField::Zero,
            o => return err(format!("profiles.initial: unknown profile '{o}' (known: solar_dipole, zero)")),
        },
    };
    let r = raw.resolution;
    let radial_degree = required(r.radial_degree, "resolution.radial_degree")?;
    let resolution = Resolution {
        max_degree: required(r.max_degree, "resolution.max_degree")?,
        radial_degree,
        n_theta: required(r.n_theta, "resolution.n_theta")?,
        n_phi: required(r.n_phi, "resolution.n_phi")?,
        load_points: r.load_points.unwrap_or(radial_degree + 2),
    };
    if resolution.max_degree == 0 {
        return err("resolution.max_degree: must be at least 1");
    }
    if radial_degree < 2 {
        return err("resolution.radial_degree: must be at least 2");
    }
    if resolution.load_points == 0 {
        return err("resolution.load_points: must be at least 1");
    }
    let tau = required(raw.time.tau, "time.tau")?;
    if !(tau > 0.0 && tau.is_finite()) {
        return err(format!("time.tau: must be positive, got {tau}"));
    }
    let steps = match (raw.time.steps, raw.time.final_time) {
        (Some(_), Some(_)) if raw.preset.is_none() => return err("time: set only one of steps and final_time"),
        (_, Some(t)) => {
            if !(t >= 0.0 && t.is_finite()) {
                return err(format!("time.final_time: must be non-negative, got {t}"));
            }
            (t / tau).round() as u64
        }
        (Some(s), None) => s,
        (None, None) => return err("time.steps: missing (set steps or final_time)"),
    };
    let o = raw.output;
    let every = 100;
    let output = Output {
        directory: o.directory.unwrap_or_else(|| PathBuf::from("run")),
        energy_every: o.energy_every.unwrap_or(every),
        butterfly_every: o.butterfly_every.unwrap_or(every),
        slice_every: o.slice_every.unwrap_or(every),
        snapshot_every: o.snapshot_every.unwrap_or(every),
        slice_resolution: o.slice_resolution.unwrap_or([200, 200]),
        butterfly_points: o.butterfly_points.unwrap_or(200),
        slice_phi: o.slice_phi.unwrap_or(0.0),
    };
    for (k, v) in [
        ("output.energy_every", output.energy_every),
        ("output.butterfly_every", output.butterfly_every),
        ("output.slice_every", output.slice_every),
        ("output.snapshot_every", output.snapshot_every),
    ] {
        if v == 0 {
            return err(format!("{k}: must be at least 1"));
        }
    }
    if output.slice_resolution.contains(&0) || output.butterfly_points == 0 {
        return err("output.slice_resolution, output.butterfly_points: must be positive");
    }
    if !(0.0..2.0 * std::f64::consts::PI).contains(&output.slice_phi) {
        return err(format!("output.slice_phi: must lie in [0, 2 pi), got {}", output.slice_phi));
    }
    let limits = Limits {
        divergence_threshold: raw.limits.divergence_threshold.unwrap_or(1e12),
    };
    if !(limits.divergence_threshold > 0.0) {
        return err("limits.divergence_threshold: must be positive");
    }
    Ok(RunConfig {
        preset: raw.preset,
        geometry: Geometry { radii, tachocline },
        physics,
        profiles,
        resolution,
        time: Time { tau, steps },
        output,
        limits,
    })
}

impl RunConfig {
    pub fn solar_geometry(&self) -> SolarGeometry {
        SolarGeometry::new(self.geometry.radii, self.geometry.tachocline)
    }

    pub fn physics_config(&self) -> PhysicsConfig {
        let g = self.solar_geometry();
        let res = &self.resolution;
        PhysicsConfig {
            radii: self.geometry.radii,
            diffusivity: Diffusivity::Zones(self.physics.beta),
            r_alpha: self.physics.r_alpha,
            r_m: self.physics.r_m,
            sigma: self.physics.sigma,
            tau: self.time.tau,
            final_time: self.time.steps as f64 * self.time.tau,
            max_degree: res.max_degree,
            radial_degree: res.radial_degree,
            n_theta: res.n_theta,
            n_phi: res.n_phi,
            load_points: res.load_points,
            alpha_profile: match self.profiles.alpha {
                AlphaProfile::Solar => solar_alpha(g),
                AlphaProfile::None => TimeField::<ScalarFn>::zero(),
            },
            velocity: match self.profiles.velocity {
                VelocityProfile::SolarRotation => solar_rotation(g, self.physics.rotation),
                VelocityProfile::None => TimeField::<VectorFn>::zero(),
            },
            divergence_threshold: self.limits.divergence_threshold,
        }
    }

    /// Initial field `(B_r, B_theta, B_phi)` at `(r, theta, phi)`.
    pub fn initial_field(&self) -> Box<dyn Fn(f64, f64, f64) -> [f64; 3] + Send + Sync> {
        match self.profiles.initial {
            InitialField::SolarDipole => Box::new(solar_initial_field(self.geometry.radii[1])),
            InitialField::Zero => Box::new(|_, _, _| [0.0; 3]),
        }
    }

    /// Manifest text: the resolved configuration as TOML.
    pub fn manifest(&self) -> String {
        toml::to_string(self).expect("configuration serializes")
    }
}
