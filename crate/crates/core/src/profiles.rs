//! Built-in forcing profiles and initial field of the solar interface dynamo.

use std::f64::consts::PI;
use std::sync::Arc;

/// Scalar field `f(r, theta, phi, t)`.
pub type ScalarFn = Arc<dyn Fn(f64, f64, f64, f64) -> f64 + Send + Sync>;
/// Vector field `u(r, theta, phi, t)` in `(e_r, e_theta, e_phi)` components.
pub type VectorFn = Arc<dyn Fn(f64, f64, f64, f64) -> [f64; 3] + Send + Sync>;

/// A prescribed input together with a flag saying it does not depend on time.
#[derive(Clone)]
pub struct TimeField<F> {
    pub f: F,
    pub steady: bool,
}

impl<F> std::fmt::Debug for TimeField<F> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("TimeField").field("steady", &self.steady).finish_non_exhaustive()
    }
}

impl TimeField<ScalarFn> {
    pub fn zero() -> Self {
        Self {
            f: Arc::new(|_, _, _, _| 0.0),
            steady: true,
        }
    }
}

impl TimeField<VectorFn> {
    pub fn zero() -> Self {
        Self {
            f: Arc::new(|_, _, _, _| [0.0; 3]),
            steady: true,
        }
    }
}

/// Parameters of the built-in solar interface profiles.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolarGeometry {
    pub r1: f64,
    pub r2: f64,
    pub tachocline: f64,
}

impl SolarGeometry {
    pub fn new(radii: [f64; 3], tachocline: f64) -> Self {
        Self {
            r1: radii[0],
            r2: radii[1],
            tachocline,
        }
    }
}

/// `sin^2(theta) cos(theta) sin(pi (r - r_t) / (r2 - r_t))` on `(r_t, r2)`, zero elsewhere.
pub fn solar_alpha(g: SolarGeometry) -> TimeField<ScalarFn> {
    TimeField {
        f: Arc::new(move |r, theta, _, _| {
            if r <= g.tachocline || r >= g.r2 {
                return 0.0;
            }
            let s = theta.sin();
            s * s * theta.cos() * (PI * (r - g.tachocline) / (g.r2 - g.tachocline)).sin()
        }),
        steady: true,
    }
}

/// Coefficients of `1`, `cos^2(theta)` and `cos^4(theta)` in the solar rotation rate.
pub const SOLAR_ROTATION: [f64; 3] = [1.0, -0.1642, -0.1591];

/// Angular velocity `c0 + c1 cos^2(theta) + c2 cos^4(theta)`.
pub fn rotation_rate(theta: f64, c: [f64; 3]) -> f64 {
    let c2 = theta.cos().powi(2);
    c[0] + c[1] * c2 + c[2] * c2 * c2
}

/// Azimuthal flow `Omega(theta) r sin(theta) sin(pi (r - r1) / (r_t - r1))` on `(r1, r_t)`.
pub fn solar_rotation(g: SolarGeometry, rate: [f64; 3]) -> TimeField<VectorFn> {
    TimeField {
        f: Arc::new(move |r, theta, _, _| {
            if r <= g.r1 || r >= g.tachocline {
                return [0.0; 3];
            }
            let shape = (PI * (r - g.r1) / (g.tachocline - g.r1)).sin();
            [0.0, 0.0, rotation_rate(theta, rate) * r * theta.sin() * shape]
        }),
        steady: true,
    }
}

/// Dipole-like initial field, nonzero only for `r < r2`.
pub fn solar_initial_field(r2: f64) -> impl Fn(f64, f64, f64) -> [f64; 3] + Send + Sync {
    move |r, theta, _| {
        if r >= r2 {
            return [0.0; 3];
        }
        let (s, c) = theta.sin_cos();
        let d = r - r2;
        let q = r2 * r2;
        [
            2.0 * c * r * d * d / q,
            -s * (3.0 * r * d * d + 2.0 * r * r * d) / q,
            3.0 * c * s * r * r * d * d / q,
        ]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn geom() -> SolarGeometry {
        SolarGeometry::new([1.5, 2.5, 7.5], 1.875)
    }

    #[test]
    fn alpha_vanishes_at_support_ends() {
        let f = solar_alpha(geom()).f;
        for theta in [0.3, 1.0, 2.0] {
            assert_eq!(f(1.875, theta, 0.0, 0.0), 0.0);
            assert!(f(2.5, theta, 0.0, 0.0).abs() < 1e-15);
            assert_eq!(f(1.0, theta, 0.0, 0.0), 0.0);
            assert_eq!(f(5.0, theta, 0.0, 0.0), 0.0);
        }
        assert!(f(2.2, 1.0, 0.0, 0.0) > 0.0);
    }

    #[test]
    fn rotation_profile() {
        assert!((rotation_rate(PI / 2.0, SOLAR_ROTATION) - 1.0).abs() < 1e-15);
        assert!((rotation_rate(0.0, SOLAR_ROTATION) - 0.6767).abs() < 1e-15);
        let u = solar_rotation(geom(), SOLAR_ROTATION).f;
        assert_eq!(u(1.2, 1.0, 0.0, 0.0), [0.0; 3]);
        assert_eq!(u(2.0, 1.0, 0.0, 0.0), [0.0; 3]);
        assert!(u(1.7, 1.0, 0.0, 0.0)[2] > 0.0);
    }

    #[test]
    fn initial_field_support() {
        let b = solar_initial_field(2.5);
        for theta in [0.1, 1.2, 3.0] {
            assert_eq!(b(2.5, theta, 0.0)[0], 0.0);
            assert_eq!(b(4.0, theta, 0.0), [0.0; 3]);
        }
    }
}
