//! Normalized associated Legendre functions, scalar spherical harmonics,
//! Gauss-Legendre x uniform angular grids and the scalar transforms.
//!
//! The Condon-Shortley phase is included in `P_l^m`, and negative orders follow
//! `Y_l^{-m} = (-1)^m conj(Y_l^m)`. Coefficients are stored for `m >= 0` only;
//! all fields handled here are real so the negative orders are implied.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{DynamoError, Result};
use crate::quadrature::gauss_legendre;

/// Flat index of `(l, m)` with `0 <= m <= l` in triangular storage.
#[inline]
pub fn lm_index(l: usize, m: usize) -> usize {
    l * (l + 1) / 2 + m
}

/// Number of `(l, m)` pairs with `m >= 0` up to degree `max_degree`.
#[inline]
pub fn lm_count(max_degree: usize) -> usize {
    (max_degree + 1) * (max_degree + 2) / 2
}

/// Iterator over `(l, m)` pairs, `m >= 0`, in storage order.
pub fn lm_pairs(max_degree: usize) -> impl Iterator<Item = (usize, usize)> {
    (0..=max_degree).flat_map(|l| (0..=l).map(move |m| (l, m)))
}

/// Normalized Legendre values and the two angular derivatives needed by the
/// vector harmonics, all evaluated at a single colatitude.
///
/// `p[(l,m)]` is `sqrt((2l+1)/(4 pi) (l-m)!/(l+m)!) P_l^m(cos theta)`,
/// `dtheta` its derivative in theta and `m_over_sin` is `m p / sin(theta)`.
/// The last two use recurrences that stay finite at the poles.
#[derive(Debug, Clone)]
pub struct LegendreTable {
    pub max_degree: usize,
    pub p: Vec<f64>,
    pub dtheta: Vec<f64>,
    pub m_over_sin: Vec<f64>,
}

impl LegendreTable {
    pub fn new(max_degree: usize, theta: f64) -> Self {
        let p = normalized_legendre_all(max_degree, theta.cos(), theta.sin());
        let mut dtheta = vec![0.0; p.len()];
        let mut m_over_sin = vec![0.0; p.len()];
        let at = |l: usize, m: usize| if m > l { 0.0 } else { p[lm_index(l, m)] };
        for (l, m) in lm_pairs(max_degree) {
            let (lf, mf) = (l as f64, m as f64);
            let up = ((lf - mf) * (lf + mf + 1.0)).sqrt() * at(l, m + 1);
            let down = if m == 0 {
                // P_l^{-1} = -P_l^1 in this normalization
                -(lf * (lf + 1.0)).sqrt() * at(l, 1)
            } else {
                ((lf + mf) * (lf - mf + 1.0)).sqrt() * at(l, m - 1)
            };
            dtheta[lm_index(l, m)] = 0.5 * (up - down);
            if m >= 1 {
                let scale = ((2.0 * lf + 1.0) / (2.0 * lf - 1.0)).sqrt();
                let a = ((lf - mf) * (lf - mf - 1.0)).max(0.0).sqrt() * at(l - 1, m + 1);
                let b = ((lf + mf) * (lf + mf - 1.0)).sqrt() * at(l - 1, m - 1);
                m_over_sin[lm_index(l, m)] = -0.5 * scale * (a + b);
            }
        }
        Self {
            max_degree,
            p,
            dtheta,
            m_over_sin,
        }
    }
}

/// All normalized `P_l^m(x)` for `0 <= m <= l <= max_degree`, with
/// `s = sqrt(1 - x^2)` supplied by the caller.
fn normalized_legendre_all(max_degree: usize, x: f64, s: f64) -> Vec<f64> {
    let mut p = vec![0.0; lm_count(max_degree)];
    p[0] = 0.5 / PI.sqrt();
    for m in 0..=max_degree {
        let mf = m as f64;
        if m >= 1 {
            let prev = p[lm_index(m - 1, m - 1)];
            p[lm_index(m, m)] = -((2.0 * mf + 1.0) / (2.0 * mf)).sqrt() * s * prev;
        }
        if m < max_degree {
            p[lm_index(m + 1, m)] = (2.0 * mf + 3.0).sqrt() * x * p[lm_index(m, m)];
        }
        for l in (m + 2)..=max_degree {
            let lf = l as f64;
            let a = ((4.0 * lf * lf - 1.0) / (lf * lf - mf * mf)).sqrt();
            let b = (((lf - 1.0) * (lf - 1.0) - mf * mf) / (4.0 * (lf - 1.0) * (lf - 1.0) - 1.0)).sqrt();
            p[lm_index(l, m)] = a * (x * p[lm_index(l - 1, m)] - b * p[lm_index(l - 2, m)]);
        }
    }
    p
}

/// Fully normalized associated Legendre function with Condon-Shortley phase.
pub fn assoc_legendre_normalized(l: usize, m: usize, x: f64) -> Result<f64> {
    if m > l {
        return Err(DynamoError::Argument(format!("order {m} exceeds degree {l}")));
    }
    if !(-1.0..=1.0).contains(&x) {
        return Err(DynamoError::Argument(format!("argument {x} outside [-1, 1]")));
    }
    let p = normalized_legendre_all(l, x, (1.0 - x * x).max(0.0).sqrt());
    Ok(p[lm_index(l, m)])
}

/// Complex spherical harmonic `Y_l^m(theta, phi)` for signed order `m`.
pub fn ylm(l: usize, m: i64, theta: f64, phi: f64) -> Result<Complex64> {
    let am = m.unsigned_abs() as usize;
    if am > l {
        return Err(DynamoError::Argument(format!("order {m} exceeds degree {l}")));
    }
    let p = normalized_legendre_all(l, theta.cos(), theta.sin())[lm_index(l, am)];
    let y = Complex64::from_polar(p, am as f64 * phi);
    Ok(if m >= 0 { y } else { signed_conj(am, y) })
}

/// `(-1)^m conj(z)`, the map from order `m` to order `-m`.
#[inline]
pub fn signed_conj(m: usize, z: Complex64) -> Complex64 {
    if m.is_multiple_of(2) {
        z.conj()
    } else {
        -z.conj()
    }
}

/// Gauss-Legendre (in cos theta) by uniform-longitude quadrature grid.
#[derive(Debug, Clone)]
pub struct AngularGrid {
    pub n_theta: usize,
    pub n_phi: usize,
    /// Colatitudes in increasing order.
    pub theta_nodes: Vec<f64>,
    /// Gauss weights in `cos(theta)`; they sum to 2.
    pub theta_weights: Vec<f64>,
    pub phi_nodes: Vec<f64>,
}

impl AngularGrid {
    pub fn new(n_theta: usize, n_phi: usize) -> Result<Self> {
        if n_theta == 0 || n_phi == 0 {
            return Err(DynamoError::Resolution("grid must have at least one node per direction".into()));
        }
        let (x, w) = gauss_legendre(n_theta);
        // x increasing means theta decreasing; flip to increasing colatitude
        let theta_nodes = x.iter().rev().map(|x| x.acos()).collect();
        let theta_weights = w.into_iter().rev().collect();
        let phi_nodes = (0..n_phi).map(|j| 2.0 * PI * j as f64 / n_phi as f64).collect();
        Ok(Self {
            n_theta,
            n_phi,
            theta_nodes,
            theta_weights,
            phi_nodes,
        })
    }

    /// Largest degree this grid resolves exactly in the transforms.
    pub fn max_resolved_degree(&self) -> usize {
        (self.n_theta - 1).min((self.n_phi - 1) / 2)
    }

    pub fn check_degree(&self, max_degree: usize) -> Result<()> {
        if self.n_theta < max_degree + 1 || self.n_phi < 2 * max_degree + 1 {
            return Err(DynamoError::Resolution(format!(
                "{}x{} grid cannot resolve degree {max_degree} (needs n_theta >= {}, n_phi >= {})",
                self.n_theta,
                self.n_phi,
                max_degree + 1,
                2 * max_degree + 1
            )));
        }
        Ok(())
    }

    /// Quadrature weight of node `(i, j)` on the unit sphere.
    #[inline]
    pub fn weight(&self, i: usize) -> f64 {
        self.theta_weights[i] * 2.0 * PI / self.n_phi as f64
    }

    pub fn len(&self) -> usize {
        self.n_theta * self.n_phi
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Builds a grid and checks it resolves `max_degree`.
pub fn build_grid(n_theta: usize, n_phi: usize, max_degree: usize) -> Result<AngularGrid> {
    let grid = AngularGrid::new(n_theta, n_phi)?;
    grid.check_degree(max_degree)?;
    Ok(grid)
}

/// Spherical-harmonic coefficients of a real scalar field (orders `m >= 0`).
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarCoefficients {
    pub max_degree: usize,
    pub c: Vec<Complex64>,
}

impl ScalarCoefficients {
    pub fn zeros(max_degree: usize) -> Self {
        Self {
            max_degree,
            c: vec![Complex64::new(0.0, 0.0); lm_count(max_degree)],
        }
    }

    /// Coefficient for signed order `m`, using Hermitian symmetry for `m < 0`.
    pub fn get(&self, l: usize, m: i64) -> Complex64 {
        let am = m.unsigned_abs() as usize;
        let z = self.c[lm_index(l, am)];
        if m >= 0 {
            z
        } else {
            signed_conj(am, z)
        }
    }

    pub fn set(&mut self, l: usize, m: usize, value: Complex64) {
        self.c[lm_index(l, m)] = value;
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.c
            .iter()
            .zip(&other.c)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }
}

/// Discrete Fourier coefficients `(2 pi / n) sum_j f_j e^{-i m phi_j}` for `m = 0..=max_order`.
pub(crate) fn ring_forward(values: &[f64], twiddle: &Twiddle, out: &mut [Complex64]) {
    let n = values.len();
    let scale = 2.0 * PI / n as f64;
    for (m, slot) in out.iter_mut().enumerate() {
        let mut acc = Complex64::new(0.0, 0.0);
        for (j, &v) in values.iter().enumerate() {
            let k = (m * j) % n;
            acc += Complex64::new(v * twiddle.cos[k], -v * twiddle.sin[k]);
        }
        *slot = acc * scale;
    }
}

/// Real ring values `Re g_0 + 2 Re sum_{m>=1} g_m e^{i m phi_j}`.
pub(crate) fn ring_inverse(modes: &[Complex64], twiddle: &Twiddle, out: &mut [f64]) {
    let n = out.len();
    for (j, slot) in out.iter_mut().enumerate() {
        let mut acc = modes[0].re;
        for (m, g) in modes.iter().enumerate().skip(1) {
            let k = (m * j) % n;
            acc += 2.0 * (g.re * twiddle.cos[k] - g.im * twiddle.sin[k]);
        }
        *slot = acc;
    }
}

/// Cosine and sine of `2 pi k / n` for `k = 0..n`.
#[derive(Debug, Clone)]
pub(crate) struct Twiddle {
    pub cos: Vec<f64>,
    pub sin: Vec<f64>,
}

impl Twiddle {
    pub fn new(n: usize) -> Self {
        let (sin, cos) = (0..n)
            .map(|k| (2.0 * PI * k as f64 / n as f64).sin_cos())
            .unzip();
        Self { cos, sin }
    }
}

/// Precomputed scalar transform for a grid and truncation degree.
#[derive(Debug, Clone)]
pub struct ScalarTransform {
    pub grid: AngularGrid,
    pub max_degree: usize,
    tables: Vec<LegendreTable>,
    twiddle: Twiddle,
}

impl ScalarTransform {
    pub fn new(grid: &AngularGrid, max_degree: usize) -> Result<Self> {
        grid.check_degree(max_degree)?;
        let tables = grid
            .theta_nodes
            .iter()
            .map(|&t| LegendreTable::new(max_degree, t))
            .collect();
        Ok(Self {
            grid: grid.clone(),
            max_degree,
            tables,
            twiddle: Twiddle::new(grid.n_phi),
        })
    }

    /// `c_lm = integral over the sphere of f conj(Y_l^m)` by grid quadrature.
    pub fn analysis(&self, values: &[f64]) -> Result<ScalarCoefficients> {
        let (nt, np) = (self.grid.n_theta, self.grid.n_phi);
        if values.len() != nt * np {
            return Err(DynamoError::SizeMismatch {
                expected: nt * np,
                actual: values.len(),
            });
        }
        let mm = self.max_degree;
        let mut out = ScalarCoefficients::zeros(mm);
        let mut modes = vec![Complex64::new(0.0, 0.0); mm + 1];
        for i in 0..nt {
            ring_forward(&values[i * np..(i + 1) * np], &self.twiddle, &mut modes);
            let w = self.grid.theta_weights[i];
            let table = &self.tables[i];
            for (l, m) in lm_pairs(mm) {
                let k = lm_index(l, m);
                out.c[k] += modes[m] * (w * table.p[k]);
            }
        }
        Ok(out)
    }

    /// Grid samples of the real field with the given coefficients.
    pub fn synthesis(&self, coeffs: &ScalarCoefficients) -> Result<Vec<f64>> {
        if coeffs.max_degree > self.max_degree {
            return Err(DynamoError::Resolution(format!(
                "coefficients of degree {} exceed transform degree {}",
                coeffs.max_degree, self.max_degree
            )));
        }
        let (nt, np) = (self.grid.n_theta, self.grid.n_phi);
        let mut out = vec![0.0; nt * np];
        let mut modes = vec![Complex64::new(0.0, 0.0); coeffs.max_degree + 1];
        for i in 0..nt {
            modes.iter_mut().for_each(|g| *g = Complex64::new(0.0, 0.0));
            let table = &self.tables[i];
            for (l, m) in lm_pairs(coeffs.max_degree) {
                let k = lm_index(l, m);
                modes[m] += coeffs.c[k] * table.p[k];
            }
            ring_inverse(&modes, &self.twiddle, &mut out[i * np..(i + 1) * np]);
        }
        Ok(out)
    }
}

/// Forward scalar transform of grid samples.
pub fn scalar_analysis(values: &[f64], grid: &AngularGrid, max_degree: usize) -> Result<ScalarCoefficients> {
    ScalarTransform::new(grid, max_degree)?.analysis(values)
}

/// Inverse scalar transform onto the grid.
pub fn scalar_synthesis(coeffs: &ScalarCoefficients, grid: &AngularGrid) -> Result<Vec<f64>> {
    ScalarTransform::new(grid, coeffs.max_degree)?.synthesis(coeffs)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn low_degree_closed_forms() {
        let y00 = assoc_legendre_normalized(0, 0, 0.37).unwrap();
        assert!((y00 - 0.282_094_791_773_878_14).abs() < 1e-15);
        for &x in &[-1.0, -0.3, 0.0, 0.8, 1.0] {
            let p10 = assoc_legendre_normalized(1, 0, x).unwrap();
            assert!((p10 - (3.0 / (4.0 * PI)).sqrt() * x).abs() < 1e-15);
        }
    }

    #[test]
    fn extended_precision_reference() {
        // mpmath, 40 digits: sqrt(21/(4 pi) 5!/15!) * P_10^5(0.3), Condon-Shortley
        let expected = -0.114_826_713_395_658_56;
        let got = assoc_legendre_normalized(10, 5, 0.3).unwrap();
        assert!((got - expected).abs() < 1e-14, "{got}");
    }

    #[test]
    fn rodrigues_cross_check() {
        // f64 Rodrigues form: P_l^m = (-1)^m (1-x^2)^{m/2} d^m/dx^m P_l
        fn factorial(n: usize) -> f64 {
            (1..=n).map(|k| k as f64).product()
        }
        let (l, m, x) = (10usize, 5usize, 0.3f64);
        let d = crate::quadrature::legendre_derivatives(l, m, x);
        let raw = if m % 2 == 0 { 1.0 } else { -1.0 } * (1.0 - x * x).powf(m as f64 / 2.0) * d[m][l];
        let norm = ((2 * l + 1) as f64 / (4.0 * PI) * factorial(l - m) / factorial(l + m)).sqrt();
        let got = assoc_legendre_normalized(l, m, x).unwrap();
        assert!((got - norm * raw).abs() < 1e-12);
    }

    #[test]
    fn no_overflow_at_high_degree() {
        for &x in &[-0.99, 0.0, 0.5, 0.999] {
            for m in [0usize, 50, 150, 200] {
                let v = assoc_legendre_normalized(200, m, x).unwrap();
                assert!(v.is_finite());
                assert!(v.abs() < 10.0);
            }
        }
    }

    #[test]
    fn order_violation() {
        assert!(assoc_legendre_normalized(2, 3, 0.1).is_err());
        assert!(assoc_legendre_normalized(2, 1, 1.5).is_err());
        assert!(ylm(1, -2, 0.3, 0.1).is_err());
    }

    #[test]
    fn ylm_condon_shortley() {
        let y = ylm(1, 1, PI / 2.0, 0.0).unwrap();
        assert!((y.re + (3.0 / (8.0 * PI)).sqrt()).abs() < 1e-15);
        assert!(y.im.abs() < 1e-15);
        let y = ylm(0, 0, 1.1, 2.3).unwrap();
        assert!((y.re - 0.5 / PI.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn negative_order_relation() {
        let (t, p) = (0.7, 1.9);
        for l in 0..5usize {
            for m in 1..=l as i64 {
                let plus = ylm(l, m, t, p).unwrap();
                let minus = ylm(l, -m, t, p).unwrap();
                let sign = if m % 2 == 0 { 1.0 } else { -1.0 };
                assert!((minus - plus.conj() * sign).norm() < 1e-15);
            }
        }
    }

    #[test]
    fn pole_safe_derivatives_match_finite_differences() {
        let h = 1e-6;
        for &t in &[0.3, 1.2, 2.9] {
            let tab = LegendreTable::new(8, t);
            let plus = LegendreTable::new(8, t + h);
            let minus = LegendreTable::new(8, t - h);
            for (l, m) in lm_pairs(8) {
                let k = lm_index(l, m);
                let fd = (plus.p[k] - minus.p[k]) / (2.0 * h);
                assert!((tab.dtheta[k] - fd).abs() < 1e-7, "dtheta l={l} m={m}");
                let direct = m as f64 * tab.p[k] / t.sin();
                assert!((tab.m_over_sin[k] - direct).abs() < 1e-12, "m/sin l={l} m={m}");
            }
        }
        // finite at the poles
        let pole = LegendreTable::new(6, 0.0);
        assert!(pole.m_over_sin.iter().all(|v| v.is_finite()));
        assert!(pole.dtheta.iter().all(|v| v.is_finite()));
    }

    #[test]
    fn grid_integrates_constant() {
        let g = AngularGrid::new(7, 13).unwrap();
        let s: f64 = (0..g.n_theta).map(|i| g.weight(i) * g.n_phi as f64).sum();
        assert!((s - 4.0 * PI).abs() / (4.0 * PI) < 1e-12);
        for (j, &p) in g.phi_nodes.iter().enumerate() {
            assert_eq!(p, 2.0 * PI * j as f64 / 13.0);
        }
    }

    #[test]
    fn undersized_grid_rejected() {
        assert!(matches!(build_grid(2, 4, 3), Err(DynamoError::Resolution(_))));
        assert!(build_grid(40, 40, 19).is_ok());
    }

    #[test]
    fn y00_norm_on_small_grid() {
        let g = build_grid(4, 8, 0).unwrap();
        let mut s = 0.0;
        for i in 0..g.n_theta {
            for j in 0..g.n_phi {
                let y = ylm(0, 0, g.theta_nodes[i], g.phi_nodes[j]).unwrap();
                s += g.weight(i) * y.norm_sqr();
            }
        }
        assert!((s - 1.0).abs() < 1e-14);
    }

    #[test]
    fn constant_field_analysis() {
        let g = build_grid(12, 24, 10).unwrap();
        let c = scalar_analysis(&vec![1.0; g.len()], &g, 10).unwrap();
        assert!((c.c[0].re - (4.0 * PI).sqrt()).abs() < 1e-12);
        assert!(c.c.iter().skip(1).all(|z| z.norm() < 1e-12));
    }

    #[test]
    fn real_part_of_y32() {
        let g = build_grid(8, 16, 5).unwrap();
        let mut v = vec![0.0; g.len()];
        for i in 0..g.n_theta {
            for j in 0..g.n_phi {
                v[i * g.n_phi + j] = ylm(3, 2, g.theta_nodes[i], g.phi_nodes[j]).unwrap().re;
            }
        }
        let c = scalar_analysis(&v, &g, 5).unwrap();
        assert!((c.get(3, 2) - Complex64::new(0.5, 0.0)).norm() < 1e-12);
        assert!((c.get(3, -2) - Complex64::new(0.5, 0.0)).norm() < 1e-12);
        for (l, m) in lm_pairs(5) {
            if (l, m) != (3, 2) {
                assert!(c.c[lm_index(l, m)].norm() < 1e-12);
            }
        }
    }
}
