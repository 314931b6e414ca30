//! Semi-implicit time stepping.
//!
//! Each step solves, for every `(l, m)`,
//! `alpha (b^n - b^{n-1}) + curl(beta_bar curl b^n) = curl f2` weakly, where
//! `alpha = 1 / tau`, `beta_bar` is the zone maximum of `beta`, and
//! `f2 = (beta_bar - beta) curl b + R_alpha f b / (1 + sigma |b|^2) + R_m u x b`
//! is evaluated from the previous state on the physical grid.

use std::sync::Arc;

use log::debug;
use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{DynamoError, Result};
use crate::profiles::{ScalarFn, TimeField, VectorFn};
use crate::radial::{solve_mode, ComponentSamples, FactoredModeSystem, ModeRhs, RadialBasis, RadialQuadrature};
use crate::solenoidal::SolenoidalState;
use crate::sph::{build_grid, lm_index, lm_pairs};
use crate::vsh::{ComponentCoefficients, VectorSamples, VectorTransform};

/// Magnetic diffusivity.
#[derive(Clone)]
pub enum Diffusivity {
    /// Constant in each zone.
    Zones([f64; 3]),
    /// `beta(r, theta)` with the zone maxima supplied alongside.
    Variable {
        f: Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>,
        zone_max: [f64; 3],
    },
}

impl std::fmt::Debug for Diffusivity {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Self::Zones(b) => f.debug_tuple("Zones").field(b).finish(),
            Self::Variable { zone_max, .. } => f.debug_struct("Variable").field("zone_max", zone_max).finish(),
        }
    }
}

impl Diffusivity {
    pub fn beta_bar(&self) -> [f64; 3] {
        match self {
            Self::Zones(b) => *b,
            Self::Variable { zone_max, .. } => *zone_max,
        }
    }
}

#[derive(Debug, Clone)]
pub struct PhysicsConfig {
    pub radii: [f64; 3],
    pub diffusivity: Diffusivity,
    pub r_alpha: f64,
    pub r_m: f64,
    pub sigma: f64,
    pub tau: f64,
    pub final_time: f64,
    pub max_degree: usize,
    pub radial_degree: usize,
    pub n_theta: usize,
    pub n_phi: usize,
    /// Gauss points per element where the explicit terms are evaluated.
    pub load_points: usize,
    pub alpha_profile: TimeField<ScalarFn>,
    pub velocity: TimeField<VectorFn>,
    pub divergence_threshold: f64,
}

impl PhysicsConfig {
    pub fn validate(&self) -> Result<()> {
        let [r1, r2, r3] = self.radii;
        let bad = |msg: String| Err(DynamoError::Config(msg));
        if !(r1 > 0.0 && r1 < r2 && r2 < r3) {
            return bad(format!("radii must satisfy 0 < r1 < r2 < r3, got {:?}", self.radii));
        }
        if self.diffusivity.beta_bar().iter().any(|b| !(*b > 0.0)) {
            return bad("diffusivity must be positive in every zone".into());
        }
        if !(self.tau > 0.0) {
            return bad(format!("time step must be positive, got {}", self.tau));
        }
        if !(self.final_time >= 0.0) {
            return bad(format!("final time must be non-negative, got {}", self.final_time));
        }
        if !(self.sigma >= 0.0) {
            return bad(format!("quenching coefficient must be non-negative, got {}", self.sigma));
        }
        if self.max_degree == 0 {
            return bad("angular truncation must be at least 1".into());
        }
        if self.radial_degree < 2 {
            return bad("radial degree must be at least 2".into());
        }
        if self.load_points == 0 {
            return bad("load quadrature needs at least one point".into());
        }
        if !self.r_alpha.is_finite() || !self.r_m.is_finite() {
            return bad("dimensionless numbers must be finite".into());
        }
        Ok(())
    }

    /// Number of steps to reach the final time.
    pub fn steps(&self) -> u64 {
        (self.final_time / self.tau).round() as u64
    }
}

/// Exact for time-independent inputs; 3-point Gauss in time otherwise.
pub fn time_average<T, F>(h: F, t0: f64, t1: f64, steady: bool) -> T
where
    F: Fn(f64) -> T,
    T: std::ops::Add<Output = T> + std::ops::Mul<f64, Output = T>,
{
    if steady {
        return h(t0);
    }
    let mid = 0.5 * (t0 + t1);
    let half = 0.5 * (t1 - t0);
    let off = half * (0.6f64).sqrt();
    h(mid - off) * (5.0 / 18.0) + h(mid) * (8.0 / 18.0) + h(mid + off) * (5.0 / 18.0)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RhsParams {
    pub r_alpha: f64,
    pub r_m: f64,
    pub sigma: f64,
}

/// Explicit force from the previous field, pointwise on one radial shell.
/// The diffusivity correction is skipped when `curl_b` or `beta` is absent.
pub fn nonlinear_rhs(
    b: &VectorSamples,
    curl_b: Option<&VectorSamples>,
    alpha: &[f64],
    u: &VectorSamples,
    beta: Option<&[f64]>,
    beta_bar: f64,
    p: RhsParams,
) -> VectorSamples {
    let n = b.len();
    let mut out = VectorSamples::zeros(n);
    for k in 0..n {
        let (br, bt, bp) = (b.r[k], b.theta[k], b.phi[k]);
        let quench = p.r_alpha * alpha[k] / (1.0 + p.sigma * (br * br + bt * bt + bp * bp));
        let (ur, ut, up) = (u.r[k], u.theta[k], u.phi[k]);
        out.r[k] = quench * br + p.r_m * (ut * bp - up * bt);
        out.theta[k] = quench * bt + p.r_m * (up * br - ur * bp);
        out.phi[k] = quench * bp + p.r_m * (ur * bt - ut * br);
        if let (Some(c), Some(beta)) = (curl_b, beta) {
            let d = beta_bar - beta[k];
            out.r[k] += d * c.r[k];
            out.theta[k] += d * c.theta[k];
            out.phi[k] += d * c.phi[k];
        }
    }
    out
}

/// Forcing sampled on one shell of the physical grid.
struct ShellForcing {
    alpha: Vec<f64>,
    velocity: VectorSamples,
    beta: Option<Vec<f64>>,
}

/// Everything that stays fixed over a run: transforms, quadrature, factored
/// systems and, for steady inputs, the sampled forcing.
pub struct StepWorkspace {
    pub config: PhysicsConfig,
    pub basis: RadialBasis,
    pub transform: VectorTransform,
    pub quad: RadialQuadrature,
    pub systems: Vec<FactoredModeSystem>,
    steady_forcing: Option<Vec<ShellForcing>>,
}

impl StepWorkspace {
    pub fn new(config: &PhysicsConfig) -> Result<Self> {
        config.validate()?;
        let basis = RadialBasis::new(config.radial_degree, config.radii)?;
        let grid = build_grid(config.n_theta, config.n_phi, config.max_degree)?;
        let transform = VectorTransform::new(&grid, config.max_degree)?;
        let quad = RadialQuadrature::gauss(&basis, config.load_points);
        let alpha = 1.0 / config.tau;
        let beta_bar = config.diffusivity.beta_bar();
        let systems = (1..=config.max_degree)
            .into_par_iter()
            .map(|l| FactoredModeSystem::assemble(&basis, l, alpha, beta_bar))
            .collect::<Result<Vec<_>>>()?;
        let mut ws = Self {
            config: config.clone(),
            basis,
            transform,
            quad,
            systems,
            steady_forcing: None,
        };
        if let Diffusivity::Variable { f, zone_max } = &config.diffusivity {
            let grid = &ws.transform.grid;
            for (q, &r) in ws.quad.radii.iter().enumerate() {
                let cap = zone_max[ws.quad.element_of_node(q)];
                for &theta in &grid.theta_nodes {
                    let b = f(r, theta);
                    if !(b > 0.0) || b > cap {
                        return Err(DynamoError::Config(format!(
                            "diffusivity {b} at r={r}, theta={theta} is outside (0, {cap}]"
                        )));
                    }
                }
            }
        }
        if config.alpha_profile.steady && config.velocity.steady {
            let forcing = (0..ws.quad.len()).map(|q| ws.shell_forcing(q, 0.0, 0.0)).collect();
            ws.steady_forcing = Some(forcing);
        }
        debug!(
            "workspace: M={} N={} grid {}x{} radial nodes {}",
            config.max_degree,
            config.radial_degree,
            config.n_theta,
            config.n_phi,
            ws.quad.len()
        );
        Ok(ws)
    }

    fn shell_forcing(&self, q: usize, t0: f64, t1: f64) -> ShellForcing {
        let grid = &self.transform.grid;
        let r = self.quad.radii[q];
        let n = grid.len();
        let mut alpha = vec![0.0; n];
        let mut velocity = VectorSamples::zeros(n);
        let fa = &self.config.alpha_profile;
        let fu = &self.config.velocity;
        for i in 0..grid.n_theta {
            let theta = grid.theta_nodes[i];
            for j in 0..grid.n_phi {
                let phi = grid.phi_nodes[j];
                let k = i * grid.n_phi + j;
                alpha[k] = time_average(|t| (fa.f)(r, theta, phi, t), t0, t1, fa.steady);
                let u = time_average(|t| Vec3((fu.f)(r, theta, phi, t)), t0, t1, fu.steady).0;
                velocity.r[k] = u[0];
                velocity.theta[k] = u[1];
                velocity.phi[k] = u[2];
            }
        }
        let beta = match &self.config.diffusivity {
            Diffusivity::Zones(_) => None,
            Diffusivity::Variable { f, .. } => Some(
                (0..n)
                    .map(|k| f(r, grid.theta_nodes[k / grid.n_phi]))
                    .collect(),
            ),
        };
        ShellForcing { alpha, velocity, beta }
    }

    /// One step from `prev`; `step_index` is the number of the step being taken
    /// and only labels errors.
    pub fn step(&self, prev: &SolenoidalState, step_index: u64) -> Result<SolenoidalState> {
        let cfg = &self.config;
        if prev.max_degree != cfg.max_degree || prev.basis != self.basis {
            return Err(DynamoError::Resolution(format!(
                "state (M={}, N={}) does not match workspace (M={}, N={})",
                prev.max_degree, prev.basis.n, cfg.max_degree, self.basis.n
            )));
        }
        let (t0, t1) = (prev.time, prev.time + cfg.tau);
        let need_curl = matches!(cfg.diffusivity, Diffusivity::Variable { .. });
        let (field, curl) = prev.sample_components(&self.quad, need_curl);
        let beta_bar = cfg.diffusivity.beta_bar();
        let params = RhsParams {
            r_alpha: cfg.r_alpha,
            r_m: cfg.r_m,
            sigma: cfg.sigma,
        };
        let shells: Vec<ComponentCoefficients<Complex64>> = (0..self.quad.len())
            .into_par_iter()
            .map(|q| {
                let b = self.transform.synthesis(&field[q])?;
                let cb = if need_curl {
                    Some(self.transform.synthesis(&curl[q])?)
                } else {
                    None
                };
                let owned;
                let forcing = match &self.steady_forcing {
                    Some(all) => &all[q],
                    None => {
                        owned = self.shell_forcing(q, t0, t1);
                        &owned
                    }
                };
                let f2 = nonlinear_rhs(
                    &b,
                    cb.as_ref(),
                    &forcing.alpha,
                    &forcing.velocity,
                    forcing.beta.as_deref(),
                    beta_bar[self.quad.element_of_node(q)],
                    params,
                );
                self.transform.analysis(&f2)
            })
            .collect::<Result<_>>()?;

        let modes: Vec<(usize, usize)> = lm_pairs(cfg.max_degree).filter(|&(l, _)| l > 0).collect();
        let solved = modes
            .par_iter()
            .map(|&(l, m)| {
                let k = lm_index(l, m);
                let samples = ComponentSamples {
                    t: shells.iter().map(|s| s.t[k]).collect(),
                    s: shells.iter().map(|s| s.s[k]).collect(),
                    r: shells.iter().map(|s| s.r[k]).collect(),
                };
                let rhs = ModeRhs {
                    previous_toroidal: Some(&prev.t[k]),
                    previous_poloidal: Some(&prev.a[k]),
                    f2: Some(&samples),
                    ..Default::default()
                };
                solve_mode(&self.systems[l - 1], &self.quad, &rhs)
            })
            .collect::<Result<Vec<_>>>()?;

        let mut next = SolenoidalState::zeros(cfg.max_degree, &self.basis);
        next.time = t1;
        for (&(l, m), (t, a)) in modes.iter().zip(solved) {
            let k = lm_index(l, m);
            let magnitude = t.coeffs.iter().chain(&a.coeffs).map(|z| z.norm()).fold(0.0, f64::max);
            let finite = t.coeffs.iter().chain(&a.coeffs).all(|z| z.re.is_finite() && z.im.is_finite());
            if !finite || magnitude > cfg.divergence_threshold {
                return Err(DynamoError::Divergence {
                    step: step_index,
                    degree: l,
                    order: m,
                    magnitude: if finite { magnitude } else { f64::INFINITY },
                });
            }
            next.t[k] = t;
            next.a[k] = a;
        }
        Ok(next)
    }
}

#[derive(Clone, Copy)]
struct Vec3([f64; 3]);

impl std::ops::Add for Vec3 {
    type Output = Self;
    fn add(self, o: Self) -> Self {
        Vec3([self.0[0] + o.0[0], self.0[1] + o.0[1], self.0[2] + o.0[2]])
    }
}

impl std::ops::Mul<f64> for Vec3 {
    type Output = Self;
    fn mul(self, s: f64) -> Self {
        Vec3(self.0.map(|v| v * s))
    }
}

/// Receives the state after every step (and the initial state of a fresh run).
pub trait DiagnosticsSink {
    fn record(&mut self, step: u64, state: &SolenoidalState) -> Result<()>;
}

impl<F: FnMut(u64, &SolenoidalState) -> Result<()>> DiagnosticsSink for F {
    fn record(&mut self, step: u64, state: &SolenoidalState) -> Result<()> {
        self(step, state)
    }
}

/// Advances `initial` by `steps` steps, numbering them from `start_step + 1`.
/// The sink sees the initial state only when `start_step == 0`.
pub fn run(
    workspace: &StepWorkspace,
    initial: &SolenoidalState,
    start_step: u64,
    steps: u64,
    sink: &mut dyn DiagnosticsSink,
) -> Result<SolenoidalState> {
    if start_step == 0 {
        sink.record(0, initial)?;
    }
    let mut state = initial.clone();
    for n in start_step + 1..=start_step + steps {
        state = workspace.step(&state, n)?;
        sink.record(n, &state)?;
    }
    Ok(state)
}
