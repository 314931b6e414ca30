use num_complex::Complex64;

use crate::error::{DynamoError, Result};
use crate::quadrature::{gauss_lobatto, legendre_derivatives};
use crate::radial::profile::RadialProfile;

/// Legendre-Gauss-Lobatto rule with `n + 1` nodes on `[-1, 1]`.
pub fn lgl_quadrature(n: usize) -> Result<(Vec<f64>, Vec<f64>)> {
    if n < 2 {
        return Err(DynamoError::Argument(format!("LGL rule needs N >= 2, got {n}")));
    }
    Ok(gauss_lobatto(n))
}

/// Continuous piecewise-polynomial space of degree `n` on `[0, r1] u [r1, r2] u [r2, r3]`.
///
/// Global ordering: the `n - 1` bubbles `L_{k-1} - L_{k+1}` of element 0, then of
/// elements 1 and 2, then the four hat functions centred at `0, r1, r2, r3`.
#[derive(Debug, Clone, PartialEq)]
pub struct RadialBasis {
    pub n: usize,
    pub radii: [f64; 3],
}

impl RadialBasis {
    pub fn new(n: usize, radii: [f64; 3]) -> Result<Self> {
        if n < 2 {
            return Err(DynamoError::Argument(format!("radial degree must be >= 2, got {n}")));
        }
        if !(radii[0] > 0.0 && radii[0] < radii[1] && radii[1] < radii[2]) {
            return Err(DynamoError::Argument(format!("radii must satisfy 0 < r1 < r2 < r3, got {radii:?}")));
        }
        Ok(Self { n, radii })
    }

    pub fn size(&self) -> usize {
        3 * self.n + 1
    }

    pub fn element_bounds(&self, e: usize) -> (f64, f64) {
        match e {
            0 => (0.0, self.radii[0]),
            1 => (self.radii[0], self.radii[1]),
            _ => (self.radii[1], self.radii[2]),
        }
    }

    pub fn bubble_index(&self, e: usize, k: usize) -> usize {
        e * (self.n - 1) + (k - 1)
    }

    /// Index of the hat function centred at vertex `v` (0 is the origin).
    pub fn vertex_index(&self, v: usize) -> usize {
        3 * (self.n - 1) + v
    }

    /// Global indices of the functions supported on element `e`, in the order
    /// used by [`RadialBasis::local_values`]: bubbles, then left and right hats.
    pub fn local_indices(&self, e: usize) -> Vec<usize> {
        let mut idx: Vec<usize> = (1..self.n).map(|k| self.bubble_index(e, k)).collect();
        idx.push(self.vertex_index(e));
        idx.push(self.vertex_index(e + 1));
        idx
    }

    pub fn to_local(&self, e: usize, r: f64) -> f64 {
        let (a, b) = self.element_bounds(e);
        2.0 * (r - a) / (b - a) - 1.0
    }

    pub fn to_radius(&self, e: usize, x: f64) -> f64 {
        let (a, b) = self.element_bounds(e);
        a + 0.5 * (x + 1.0) * (b - a)
    }

    /// `out[d][j]` is the `d`-th radial derivative of local function `j` of
    /// element `e` at local coordinate `x`.
    pub fn local_values(&self, e: usize, x: f64, order: usize) -> Vec<Vec<f64>> {
        let n = self.n;
        let (a, b) = self.element_bounds(e);
        let jac = 2.0 / (b - a);
        let leg = legendre_derivatives(n, order, x);
        let mut out = vec![vec![0.0; n + 1]; order + 1];
        for (d, row) in out.iter_mut().enumerate() {
            let s = jac.powi(d as i32);
            for k in 1..n {
                row[k - 1] = s * (leg[d][k - 1] - leg[d][k + 1]);
            }
            let (left, right) = match d {
                0 => (0.5 * (1.0 - x), 0.5 * (1.0 + x)),
                1 => (-0.5, 0.5),
                _ => (0.0, 0.0),
            };
            row[n - 1] = s * left;
            row[n] = s * right;
        }
        out
    }

    /// Per-element Legendre coefficients of the function with the given basis coefficients.
    pub fn legendre_coefficients(&self, coeffs: &[Complex64]) -> [Vec<Complex64>; 3] {
        let n = self.n;
        let zero = Complex64::new(0.0, 0.0);
        let mut out: [Vec<Complex64>; 3] = Default::default();
        for (e, dst) in out.iter_mut().enumerate() {
            *dst = vec![zero; n + 1];
            for k in 1..n {
                let c = coeffs[self.bubble_index(e, k)];
                dst[k - 1] += c;
                dst[k + 1] -= c;
            }
            let (l, r) = (coeffs[self.vertex_index(e)], coeffs[self.vertex_index(e + 1)]);
            dst[0] += (l + r) * 0.5;
            dst[1] += (r - l) * 0.5;
        }
        out
    }

    /// Element-local LGL nodes mapped to radius, per element.
    pub fn lgl_radii(&self) -> [Vec<f64>; 3] {
        let (x, _) = gauss_lobatto(self.n);
        let mut out: [Vec<f64>; 3] = Default::default();
        for (e, dst) in out.iter_mut().enumerate() {
            *dst = x.iter().map(|&x| self.to_radius(e, x)).collect();
        }
        out
    }

    /// Basis coefficients of the function taking the given values at each
    /// element's LGL nodes. Shared interface values must agree; the inner
    /// element's value is used.
    pub fn interpolate_nodal(&self, values: &[Vec<Complex64>; 3]) -> Result<RadialFunction> {
        let n = self.n;
        let (x, w) = gauss_lobatto(n);
        let zero = Complex64::new(0.0, 0.0);
        let mut coeffs = vec![zero; self.size()];
        for (e, v) in values.iter().enumerate() {
            if v.len() != n + 1 {
                return Err(DynamoError::SizeMismatch {
                    expected: n + 1,
                    actual: v.len(),
                });
            }
            if e == 0 {
                coeffs[self.vertex_index(0)] = v[0];
            }
            coeffs[self.vertex_index(e + 1)] = v[n];
            let left = coeffs[self.vertex_index(e)];
            let right = v[n];
            // Legendre coefficients of the part vanishing at both ends
            let mut a = vec![zero; n + 1];
            for (i, &xi) in x.iter().enumerate() {
                let q = v[i] - left * (0.5 * (1.0 - xi)) - right * (0.5 * (1.0 + xi));
                let leg = &legendre_derivatives(n, 0, xi)[0];
                for (j, aj) in a.iter_mut().enumerate() {
                    *aj += q * (w[i] * leg[j]);
                }
            }
            for (j, aj) in a.iter_mut().enumerate() {
                let gamma = if j < n { 2.0 / (2 * j + 1) as f64 } else { 2.0 / n as f64 };
                *aj /= gamma;
            }
            // a_j = b_{j+1} - b_{j-1}
            let mut bub = vec![zero; n + 1];
            for j in 0..n - 1 {
                bub[j + 1] = a[j] + if j >= 1 { bub[j - 1] } else { zero };
            }
            for k in 1..n {
                coeffs[self.bubble_index(e, k)] = bub[k];
            }
        }
        Ok(RadialFunction { coeffs })
    }

    /// Interpolant of `f` at the LGL nodes of every element.
    pub fn interpolate<F: Fn(f64) -> Complex64>(&self, f: F) -> RadialFunction {
        let nodes = self.lgl_radii();
        let values = [0, 1, 2].map(|e| nodes[e].iter().map(|&r| f(r)).collect::<Vec<_>>());
        self.interpolate_nodal(&values).expect("node counts match by construction")
    }
}

/// Element of the radial space as coefficients in the global basis.
#[derive(Debug, Clone, PartialEq)]
pub struct RadialFunction {
    pub coeffs: Vec<Complex64>,
}

impl RadialFunction {
    pub fn zeros(basis: &RadialBasis) -> Self {
        Self {
            coeffs: vec![Complex64::new(0.0, 0.0); basis.size()],
        }
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(|z| *z == Complex64::new(0.0, 0.0))
    }

    /// `d`-th derivative at `r`, evaluated in element `e` (one-sided at its ends).
    pub fn eval_in(&self, basis: &RadialBasis, e: usize, r: f64, order: usize) -> Complex64 {
        let x = basis.to_local(e, r);
        let vals = basis.local_values(e, x, order);
        basis
            .local_indices(e)
            .iter()
            .zip(&vals[order])
            .map(|(&g, &v)| self.coeffs[g] * v)
            .sum()
    }

    pub fn eval(&self, basis: &RadialBasis, r: f64) -> Result<Complex64> {
        let e = element_of(basis, r)?;
        Ok(self.eval_in(basis, e, r, 0))
    }

    pub fn eval_derivative(&self, basis: &RadialBasis, r: f64, order: usize) -> Result<Complex64> {
        let e = element_of(basis, r)?;
        Ok(self.eval_in(basis, e, r, order))
    }

    pub fn to_profile(&self, basis: &RadialBasis) -> RadialProfile {
        RadialProfile::from_legendre(basis.radii, basis.legendre_coefficients(&self.coeffs))
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.coeffs
            .iter()
            .zip(&other.coeffs)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }
}

fn element_of(basis: &RadialBasis, r: f64) -> Result<usize> {
    let [r1, r2, r3] = basis.radii;
    if !(0.0..=r3).contains(&r) {
        return Err(DynamoError::RadiusOutOfDomain { radius: r, outer: r3 });
    }
    Ok(if r <= r1 {
        0
    } else if r <= r2 {
        1
    } else {
        2
    })
}

fn d_pm(l: usize, f: &RadialFunction, basis: &RadialBasis, radii: &[f64], sign: f64) -> Result<Vec<Complex64>> {
    radii
        .iter()
        .map(|&r| {
            if r == 0.0 {
                return Err(DynamoError::SingularOrigin);
            }
            let e = element_of(basis, r)?;
            Ok(f.eval_in(basis, e, r, 1) + f.eval_in(basis, e, r, 0) * (sign * l as f64 / r))
        })
        .collect()
}

/// `f' + l f / r` at the given radii.
pub fn dplus(l: usize, f: &RadialFunction, basis: &RadialBasis, radii: &[f64]) -> Result<Vec<Complex64>> {
    d_pm(l, f, basis, radii, 1.0)
}

/// `f' - l f / r` at the given radii.
pub fn dminus(l: usize, f: &RadialFunction, basis: &RadialBasis, radii: &[f64]) -> Result<Vec<Complex64>> {
    d_pm(l, f, basis, radii, -1.0)
}
