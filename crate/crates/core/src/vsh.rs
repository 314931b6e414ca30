//! Vector spherical harmonics, vector transforms and the curl/divergence
//! identities in component form.
//!
//! With `Y = Y_l^m` and `grad_S` the surface gradient,
//!
//! ```text
//! T = (i m / sin(theta)) Y e_theta - d_theta Y e_phi
//! V = (l + 1) Y e_r - grad_S Y
//! W = l Y e_r + grad_S Y
//! ```
//!
//! A field is stored either as `(t, s, r)`, the coefficients of `T`, `grad_S Y`
//! and `Y e_r`, or as `(t, v, w)`.

use std::ops::{Add, Mul, Sub};

use num_complex::Complex64;

use crate::error::{DynamoError, Result};
use crate::radial::RadialProfile;
use crate::sph::{lm_count, lm_index, lm_pairs, ring_forward, ring_inverse, signed_conj, AngularGrid, LegendreTable, Twiddle};

const I: Complex64 = Complex64::new(0.0, 1.0);

/// Values usable as per-mode coefficients: complex numbers at one radius or
/// radial profiles.
pub trait Coefficient: Clone + Add<Output = Self> + Sub<Output = Self> + Mul<f64, Output = Self> {}

impl<T: Clone + Add<Output = T> + Sub<Output = T> + Mul<f64, Output = T>> Coefficient for T {}

/// Coefficients of `T_l^m`, `grad_S Y_l^m` and `Y_l^m e_r` for `m >= 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct ComponentCoefficients<R> {
    pub max_degree: usize,
    pub t: Vec<R>,
    pub s: Vec<R>,
    pub r: Vec<R>,
}

impl<R: Clone> ComponentCoefficients<R> {
    pub fn filled(max_degree: usize, zero: R) -> Self {
        let n = lm_count(max_degree);
        Self {
            max_degree,
            t: vec![zero.clone(); n],
            s: vec![zero.clone(); n],
            r: vec![zero; n],
        }
    }
}

impl ComponentCoefficients<Complex64> {
    pub fn zeros(max_degree: usize) -> Self {
        Self::filled(max_degree, Complex64::new(0.0, 0.0))
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        [(&self.t, &other.t), (&self.s, &other.s), (&self.r, &other.r)]
            .iter()
            .flat_map(|(a, b)| a.iter().zip(b.iter()).map(|(x, y)| (x - y).norm()))
            .fold(0.0, f64::max)
    }

    pub fn max_abs(&self) -> f64 {
        self.t.iter().chain(&self.s).chain(&self.r).map(|z| z.norm()).fold(0.0, f64::max)
    }
}

/// Coefficients of `V_l^m` and `W_l^m`; `w` at `l = 0` is always zero.
#[derive(Debug, Clone, PartialEq)]
pub struct VWCoefficients<R> {
    pub max_degree: usize,
    pub v: Vec<R>,
    pub w: Vec<R>,
}

/// `(v, w) -> (a, b)` with `a` the `Y e_r` and `b` the `grad_S Y` coefficient.
pub fn vw_to_components<R: Coefficient>(l: usize, v: R, w: R) -> (R, R) {
    let lf = l as f64;
    (v.clone() * (lf + 1.0) + w.clone() * lf, w - v)
}

/// Inverse of [`vw_to_components`].
pub fn components_to_vw<R: Coefficient>(l: usize, a: R, b: R) -> (R, R) {
    let lf = l as f64;
    let d = 2.0 * lf + 1.0;
    ((a.clone() - b.clone() * lf) * (1.0 / d), (a + b * (lf + 1.0)) * (1.0 / d))
}

impl<R: Coefficient> ComponentCoefficients<R> {
    pub fn to_vw(&self) -> VWCoefficients<R> {
        let (mut v, mut w) = (Vec::with_capacity(self.r.len()), Vec::with_capacity(self.r.len()));
        for (l, m) in lm_pairs(self.max_degree) {
            let k = lm_index(l, m);
            let (vk, wk) = components_to_vw(l, self.r[k].clone(), self.s[k].clone());
            v.push(vk);
            w.push(if l == 0 { wk.clone() - wk } else { wk });
        }
        VWCoefficients {
            max_degree: self.max_degree,
            v,
            w,
        }
    }

    pub fn from_vw(t: Vec<R>, vw: &VWCoefficients<R>) -> Self {
        let (mut s, mut r) = (Vec::with_capacity(t.len()), Vec::with_capacity(t.len()));
        for (l, m) in lm_pairs(vw.max_degree) {
            let k = lm_index(l, m);
            let (a, b) = vw_to_components(l, vw.v[k].clone(), vw.w[k].clone());
            r.push(a);
            s.push(b);
        }
        Self {
            max_degree: vw.max_degree,
            t,
            s,
            r,
        }
    }
}

/// `T`, `V` and `W` at one point, as `(e_r, e_theta, e_phi)` components.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VshTriple {
    pub t: [Complex64; 3],
    pub v: [Complex64; 3],
    pub w: [Complex64; 3],
}

/// Evaluates the three vector harmonics. For `l = 0`, `T` and `W` are returned as zero.
pub fn vsh_eval(l: usize, m: i64, theta: f64, phi: f64) -> Result<VshTriple> {
    let am = m.unsigned_abs() as usize;
    if am > l {
        return Err(DynamoError::Argument(format!("order {m} exceeds degree {l}")));
    }
    let tab = LegendreTable::new(l, theta);
    let k = lm_index(l, am);
    let e = Complex64::from_polar(1.0, am as f64 * phi);
    let y = e * tab.p[k];
    let dy = e * tab.dtheta[k];
    let my = I * e * tab.m_over_sin[k];
    let lf = l as f64;
    let zero = Complex64::new(0.0, 0.0);
    let (t, grad) = if l == 0 {
        ([zero; 3], [zero; 3])
    } else {
        ([zero, my, -dy], [zero, dy, my])
    };
    let v = [y * (lf + 1.0), -grad[1], -grad[2]];
    let w = if l == 0 {
        [zero; 3]
    } else {
        [y * lf, grad[1], grad[2]]
    };
    let fix = |a: [Complex64; 3]| if m >= 0 { a } else { a.map(|z| signed_conj(am, z)) };
    Ok(VshTriple {
        t: fix(t),
        v: fix(v),
        w: fix(w),
    })
}

/// Squared norms over the unit sphere, computed by grid quadrature.
#[derive(Debug, Clone)]
pub struct VshNorms {
    pub y: Vec<f64>,
    /// Shared by `T` and `grad_S Y`.
    pub tangential: Vec<f64>,
    pub v: Vec<f64>,
    pub w: Vec<f64>,
}

impl VshNorms {
    fn compute(grid: &AngularGrid, tables: &[LegendreTable], max_degree: usize) -> Result<Self> {
        let n = lm_count(max_degree);
        let (mut y, mut tangential) = (vec![0.0; n], vec![0.0; n]);
        for (i, tab) in tables.iter().enumerate() {
            let w = grid.weight(i) * grid.n_phi as f64;
            for k in 0..n {
                y[k] += w * tab.p[k] * tab.p[k];
                tangential[k] += w * (tab.dtheta[k].powi(2) + tab.m_over_sin[k].powi(2));
            }
        }
        let (mut v, mut wn) = (vec![0.0; n], vec![0.0; n]);
        for (l, m) in lm_pairs(max_degree) {
            let k = lm_index(l, m);
            let lf = l as f64;
            v[k] = (lf + 1.0).powi(2) * y[k] + tangential[k];
            wn[k] = lf * lf * y[k] + tangential[k];
            // |V|^2 + |W|^2 = (2l+1)^2 |Y|^2 on any exact rule
            let check = (2.0 * lf + 1.0).powi(2);
            if l > 0 && ((v[k] + wn[k]) - check).abs() > 1e-10 * check {
                return Err(DynamoError::Resolution(format!(
                    "vector harmonic norms inconsistent at l={l}, m={m}: grid too coarse"
                )));
            }
        }
        Ok(Self {
            y,
            tangential,
            v,
            w: wn,
        })
    }
}

/// Grid samples of a vector field at one radius in `(e_r, e_theta, e_phi)`,
/// each array laid out as `i * n_phi + j`.
#[derive(Debug, Clone, PartialEq)]
pub struct VectorSamples {
    pub r: Vec<f64>,
    pub theta: Vec<f64>,
    pub phi: Vec<f64>,
}

impl VectorSamples {
    pub fn zeros(n: usize) -> Self {
        Self {
            r: vec![0.0; n],
            theta: vec![0.0; n],
            phi: vec![0.0; n],
        }
    }

    pub fn len(&self) -> usize {
        self.r.len()
    }

    pub fn is_empty(&self) -> bool {
        self.r.is_empty()
    }

    pub fn magnitude(&self, k: usize) -> f64 {
        (self.r[k].powi(2) + self.theta[k].powi(2) + self.phi[k].powi(2)).sqrt()
    }
}

/// Precomputed vector transform for one grid and truncation.
#[derive(Debug, Clone)]
pub struct VectorTransform {
    pub grid: AngularGrid,
    pub max_degree: usize,
    pub norms: VshNorms,
    tables: Vec<LegendreTable>,
    twiddle: Twiddle,
}

impl VectorTransform {
    pub fn new(grid: &AngularGrid, max_degree: usize) -> Result<Self> {
        grid.check_degree(max_degree)?;
        let tables: Vec<_> = grid.theta_nodes.iter().map(|&t| LegendreTable::new(max_degree, t)).collect();
        let norms = VshNorms::compute(grid, &tables, max_degree)?;
        Ok(Self {
            grid: grid.clone(),
            max_degree,
            norms,
            tables,
            twiddle: Twiddle::new(grid.n_phi),
        })
    }

    fn check_samples(&self, f: &VectorSamples) -> Result<()> {
        let n = self.grid.len();
        for a in [&f.r, &f.theta, &f.phi] {
            if a.len() != n {
                return Err(DynamoError::SizeMismatch {
                    expected: n,
                    actual: a.len(),
                });
            }
        }
        Ok(())
    }

    /// Unnormalized projections `(<F, T>, <F, grad_S Y>, <F, Y e_r>)`.
    fn projections(&self, field: &VectorSamples) -> Result<[Vec<Complex64>; 3]> {
        self.check_samples(field)?;
        let (nt, np, mm) = (self.grid.n_theta, self.grid.n_phi, self.max_degree);
        let n = lm_count(mm);
        let zero = Complex64::new(0.0, 0.0);
        let (mut pt, mut ps, mut pr) = (vec![zero; n], vec![zero; n], vec![zero; n]);
        let mut fr = vec![zero; mm + 1];
        let mut fth = vec![zero; mm + 1];
        let mut fph = vec![zero; mm + 1];
        for i in 0..nt {
            let ring = i * np..(i + 1) * np;
            ring_forward(&field.r[ring.clone()], &self.twiddle, &mut fr);
            ring_forward(&field.theta[ring.clone()], &self.twiddle, &mut fth);
            ring_forward(&field.phi[ring], &self.twiddle, &mut fph);
            let w = self.grid.theta_weights[i];
            let tab = &self.tables[i];
            for (l, m) in lm_pairs(mm) {
                let k = lm_index(l, m);
                let (p, d, q) = (tab.p[k] * w, tab.dtheta[k] * w, tab.m_over_sin[k] * w);
                pr[k] += fr[m] * p;
                ps[k] += fth[m] * d - I * fph[m] * q;
                pt[k] += -I * fth[m] * q - fph[m] * d;
            }
        }
        Ok([pt, ps, pr])
    }

    /// `(t, s, r)` coefficients of a sampled field.
    pub fn analysis(&self, field: &VectorSamples) -> Result<ComponentCoefficients<Complex64>> {
        let [mut t, mut s, mut r] = self.projections(field)?;
        for (l, m) in lm_pairs(self.max_degree) {
            let k = lm_index(l, m);
            r[k] /= self.norms.y[k];
            if l == 0 {
                t[k] = Complex64::new(0.0, 0.0);
                s[k] = Complex64::new(0.0, 0.0);
            } else {
                t[k] /= self.norms.tangential[k];
                s[k] /= self.norms.tangential[k];
            }
        }
        Ok(ComponentCoefficients {
            max_degree: self.max_degree,
            t,
            s,
            r,
        })
    }

    /// `T` coefficients and `(V, W)` coefficients of a sampled field, each
    /// projected against its own harmonic.
    pub fn analysis_vw(&self, field: &VectorSamples) -> Result<(Vec<Complex64>, VWCoefficients<Complex64>)> {
        let [mut t, ps, pr] = self.projections(field)?;
        let n = lm_count(self.max_degree);
        let zero = Complex64::new(0.0, 0.0);
        let (mut v, mut w) = (vec![zero; n], vec![zero; n]);
        for (l, m) in lm_pairs(self.max_degree) {
            let k = lm_index(l, m);
            let lf = l as f64;
            v[k] = (pr[k] * (lf + 1.0) - ps[k]) / self.norms.v[k];
            if l == 0 {
                t[k] = zero;
            } else {
                t[k] /= self.norms.tangential[k];
                w[k] = (pr[k] * lf + ps[k]) / self.norms.w[k];
            }
        }
        Ok((
            t,
            VWCoefficients {
                max_degree: self.max_degree,
                v,
                w,
            },
        ))
    }

    /// Grid samples of the real field with the given coefficients.
    pub fn synthesis(&self, coeffs: &ComponentCoefficients<Complex64>) -> Result<VectorSamples> {
        if coeffs.max_degree > self.max_degree {
            return Err(DynamoError::Resolution(format!(
                "coefficients of degree {} exceed transform degree {}",
                coeffs.max_degree, self.max_degree
            )));
        }
        let (nt, np, mm) = (self.grid.n_theta, self.grid.n_phi, coeffs.max_degree);
        let zero = Complex64::new(0.0, 0.0);
        let mut out = VectorSamples::zeros(nt * np);
        let mut gr = vec![zero; mm + 1];
        let mut gth = vec![zero; mm + 1];
        let mut gph = vec![zero; mm + 1];
        for i in 0..nt {
            gr.iter_mut().chain(gth.iter_mut()).chain(gph.iter_mut()).for_each(|g| *g = zero);
            let tab = &self.tables[i];
            for (l, m) in lm_pairs(mm) {
                let k = lm_index(l, m);
                let (p, d, q) = (tab.p[k], tab.dtheta[k], tab.m_over_sin[k]);
                let (t, s) = (coeffs.t[k], coeffs.s[k]);
                gr[m] += coeffs.r[k] * p;
                gth[m] += I * t * q + s * d;
                gph[m] += -t * d + I * s * q;
            }
            let ring = i * np..(i + 1) * np;
            ring_inverse(&gr, &self.twiddle, &mut out.r[ring.clone()]);
            ring_inverse(&gth, &self.twiddle, &mut out.theta[ring.clone()]);
            ring_inverse(&gph, &self.twiddle, &mut out.phi[ring]);
        }
        Ok(out)
    }
}

/// Forward vector transform of samples at one radius.
pub fn vector_analysis(field: &VectorSamples, grid: &AngularGrid, max_degree: usize) -> Result<ComponentCoefficients<Complex64>> {
    VectorTransform::new(grid, max_degree)?.analysis(field)
}

/// Curl in component form:
/// `r <- l(l+1) t / r`, `s <- (r t)' / r`, `t <- r_comp / r - (r s)' / r`.
pub fn curl_components(x: &ComponentCoefficients<RadialProfile>) -> ComponentCoefficients<RadialProfile> {
    let n = x.t.len();
    let (mut t, mut s, mut r) = (Vec::with_capacity(n), Vec::with_capacity(n), Vec::with_capacity(n));
    for (l, m) in lm_pairs(x.max_degree) {
        let k = lm_index(l, m);
        let zero = RadialProfile::zero(x.t[k].radii());
        if l == 0 {
            t.push(zero.clone());
            s.push(zero.clone());
            r.push(zero);
            continue;
        }
        let ll = (l * (l + 1)) as f64;
        r.push(x.t[k].clone().mul_pow(-1) * ll);
        s.push(x.t[k].clone().mul_pow(1).derivative().mul_pow(-1));
        t.push(x.r[k].clone().mul_pow(-1) - x.s[k].clone().mul_pow(1).derivative().mul_pow(-1));
    }
    ComponentCoefficients {
        max_degree: x.max_degree,
        t,
        s,
        r,
    }
}

/// Divergence per `(l, m)`: `(r^2 r_comp)' / r^2 - l(l+1) s / r`.
pub fn divergence_coefficients(x: &ComponentCoefficients<RadialProfile>) -> Vec<RadialProfile> {
    lm_pairs(x.max_degree)
        .map(|(l, m)| {
            let k = lm_index(l, m);
            let ll = (l * (l + 1)) as f64;
            x.r[k].clone().mul_pow(2).derivative().mul_pow(-2) - x.s[k].clone().mul_pow(-1) * ll
        })
        .collect()
}

/// Curl through the `V`/`W` identities:
/// `curl(f T) = l(l+1) f / r Y e_r + (r f)' / r grad_S Y`,
/// `curl(f V) = (f' + (l+2) f / r) T`, `curl(f W) = -(f' - (l-1) f / r) T`.
pub fn curl_vw(
    t: &[RadialProfile],
    vw: &VWCoefficients<RadialProfile>,
) -> (Vec<RadialProfile>, VWCoefficients<RadialProfile>) {
    let mut out_t = Vec::with_capacity(t.len());
    let mut out_v = Vec::with_capacity(t.len());
    let mut out_w = Vec::with_capacity(t.len());
    for (l, m) in lm_pairs(vw.max_degree) {
        let k = lm_index(l, m);
        let zero = RadialProfile::zero(t[k].radii());
        if l == 0 {
            out_t.push(zero.clone());
            out_v.push(zero.clone());
            out_w.push(zero);
            continue;
        }
        let lf = l as f64;
        let dplus = vw.v[k].derivative() + vw.v[k].clone().mul_pow(-1) * (lf + 2.0);
        let dminus = vw.w[k].derivative() - vw.w[k].clone().mul_pow(-1) * (lf - 1.0);
        out_t.push(dplus - dminus);
        let a = t[k].clone().mul_pow(-1) * (lf * (lf + 1.0));
        let b = t[k].clone().mul_pow(1).derivative().mul_pow(-1);
        let (v, w) = components_to_vw(l, a, b);
        out_v.push(v);
        out_w.push(w);
    }
    (
        out_t,
        VWCoefficients {
            max_degree: vw.max_degree,
            v: out_v,
            w: out_w,
        },
    )
}
