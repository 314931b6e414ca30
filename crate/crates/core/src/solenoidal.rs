//! Divergence-free fields stored as toroidal scalars `t` and poloidal
//! potentials `A`: `b = sum t T + curl(A T)`.

use num_complex::Complex64;

use crate::error::{DynamoError, Result};
use crate::radial::{l_operator, RadialBasis, RadialFunction, RadialProfile, RadialQuadrature};
use crate::sph::{lm_count, lm_index, lm_pairs};
use crate::vsh::{ComponentCoefficients, VectorSamples, VectorTransform};

#[derive(Debug, Clone, PartialEq)]
pub struct SolenoidalState {
    pub max_degree: usize,
    pub basis: RadialBasis,
    /// Toroidal scalars, indexed by [`lm_index`]; the `l = 0` entry stays zero.
    pub t: Vec<RadialFunction>,
    /// Poloidal potentials, same layout.
    pub a: Vec<RadialFunction>,
    pub time: f64,
}

impl SolenoidalState {
    pub fn zeros(max_degree: usize, basis: &RadialBasis) -> Self {
        let zero = RadialFunction::zeros(basis);
        let n = lm_count(max_degree);
        Self {
            max_degree,
            basis: basis.clone(),
            t: vec![zero.clone(); n],
            a: vec![zero; n],
            time: 0.0,
        }
    }

    pub fn max_abs_coefficient(&self) -> f64 {
        self.t
            .iter()
            .chain(&self.a)
            .flat_map(|f| f.coeffs.iter())
            .map(|z| z.norm())
            .fold(0.0, f64::max)
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.t
            .iter()
            .zip(&other.t)
            .chain(self.a.iter().zip(&other.a))
            .map(|(x, y)| x.max_abs_diff(y))
            .fold(0.0, f64::max)
    }

    /// Same field with truncation raised to `max_degree`; new modes are zero.
    pub fn padded(&self, max_degree: usize) -> Result<Self> {
        if max_degree < self.max_degree {
            return Err(DynamoError::Resolution(format!(
                "cannot pad degree {} down to {max_degree}",
                self.max_degree
            )));
        }
        let mut out = Self::zeros(max_degree, &self.basis);
        out.time = self.time;
        for (l, m) in lm_pairs(self.max_degree) {
            let k = lm_index(l, m);
            out.t[k] = self.t[k].clone();
            out.a[k] = self.a[k].clone();
        }
        Ok(out)
    }

    /// Rotates the field by `phi0` about the polar axis.
    pub fn rotated(&self, phi0: f64) -> Self {
        let mut out = self.clone();
        for (l, m) in lm_pairs(self.max_degree) {
            let k = lm_index(l, m);
            let z = Complex64::from_polar(1.0, -(m as f64) * phi0);
            for f in [&mut out.t[k], &mut out.a[k]] {
                f.coeffs.iter_mut().for_each(|c| *c *= z);
            }
        }
        out
    }

    /// Exact component form: `t_comp = t`, `s_comp = (r A)' / r`, `r_comp = l(l+1) A / r`.
    pub fn to_components(&self) -> ComponentCoefficients<RadialProfile> {
        let n = lm_count(self.max_degree);
        let (mut t, mut s, mut r) = (Vec::with_capacity(n), Vec::with_capacity(n), Vec::with_capacity(n));
        for (l, m) in lm_pairs(self.max_degree) {
            let k = lm_index(l, m);
            let ll = (l * (l + 1)) as f64;
            let a = self.a[k].to_profile(&self.basis);
            t.push(self.t[k].to_profile(&self.basis));
            s.push(a.clone().mul_pow(1).derivative().mul_pow(-1));
            r.push(a.mul_pow(-1) * ll);
        }
        ComponentCoefficients {
            max_degree: self.max_degree,
            t,
            s,
            r,
        }
    }

    /// Components of the field and of its curl at every node of `nodes`, one
    /// entry per node. At `r = 0` the quotients `A / r` and `t / r` take their
    /// limits `A'(0)` and `t'(0)` when the numerator vanishes there.
    pub fn sample_components(
        &self,
        nodes: &RadialQuadrature,
        with_curl: bool,
    ) -> (Vec<ComponentCoefficients<Complex64>>, Vec<ComponentCoefficients<Complex64>>) {
        let nq = nodes.len();
        let mm = self.max_degree;
        let mut field = vec![ComponentCoefficients::zeros(mm); nq];
        let mut curl = if with_curl {
            vec![ComponentCoefficients::zeros(mm); nq]
        } else {
            Vec::new()
        };
        for (l, m) in lm_pairs(mm) {
            if l == 0 {
                continue;
            }
            let k = lm_index(l, m);
            let ll = (l * (l + 1)) as f64;
            let a0 = nodes.sample(&self.a[k], 0);
            let a1 = nodes.sample(&self.a[k], 1);
            let t0 = nodes.sample(&self.t[k], 0);
            let a2 = if with_curl { nodes.sample(&self.a[k], 2) } else { Vec::new() };
            let t1 = if with_curl { nodes.sample(&self.t[k], 1) } else { Vec::new() };
            for q in 0..nq {
                let r = nodes.radii[q];
                let a_over_r = if r > 0.0 { a0[q] / r } else { a1[q] };
                field[q].t[k] = t0[q];
                field[q].s[k] = a_over_r + a1[q];
                field[q].r[k] = a_over_r * ll;
                if with_curl {
                    let t_over_r = if r > 0.0 { t0[q] / r } else { t1[q] };
                    curl[q].r[k] = t_over_r * ll;
                    curl[q].s[k] = t1[q] + t_over_r;
                    curl[q].t[k] = if r > 0.0 {
                        Complex64::new(
                            l_operator(l, r, a0[q].re, a1[q].re, a2[q].re),
                            l_operator(l, r, a0[q].im, a1[q].im, a2[q].im),
                        )
                    } else {
                        Complex64::new(0.0, 0.0)
                    };
                }
            }
        }
        (field, curl)
    }

    /// Physical samples on the angular grid at each radius.
    pub fn synthesize(&self, transform: &VectorTransform, radii: &[f64]) -> Result<Vec<VectorSamples>> {
        self.synthesize_at(transform, &RadialQuadrature::at_radii(&self.basis, radii)?)
    }

    /// Physical samples on the angular grid at each node of `nodes`.
    pub fn synthesize_at(&self, transform: &VectorTransform, nodes: &RadialQuadrature) -> Result<Vec<VectorSamples>> {
        let (field, _) = self.sample_components(nodes, false);
        field.iter().map(|c| transform.synthesis(c)).collect()
    }
}

/// Solenoidal state from component profiles: `t = t_comp`,
/// `A = r r_comp / (l(l+1))`, each interpolated at the LGL nodes. The
/// tangential part `s_comp` is not used and `l = 0` is dropped.
pub fn project_solenoidal(x: &ComponentCoefficients<RadialProfile>, basis: &RadialBasis) -> Result<SolenoidalState> {
    let mut out = SolenoidalState::zeros(x.max_degree, basis);
    let nodes = basis.lgl_radii();
    for (l, m) in lm_pairs(x.max_degree) {
        if l == 0 {
            continue;
        }
        let k = lm_index(l, m);
        let ll = (l * (l + 1)) as f64;
        let ra = x.r[k].clone().mul_pow(1) * (1.0 / ll);
        let mut tv: [Vec<Complex64>; 3] = Default::default();
        let mut av: [Vec<Complex64>; 3] = Default::default();
        for e in 0..3 {
            tv[e] = nodes[e].iter().map(|&r| x.t[k].eval_in(e, r)).collect::<Result<_>>()?;
            av[e] = nodes[e].iter().map(|&r| ra.eval_in(e, r)).collect::<Result<_>>()?;
        }
        out.t[k] = basis.interpolate_nodal(&tv)?;
        out.a[k] = basis.interpolate_nodal(&av)?;
    }
    Ok(out)
}

/// Solenoidal state from a physical field `f(r, theta, phi) -> (B_r, B_theta, B_phi)`:
/// vector analysis at every LGL radius, then the same reconstruction as
/// [`project_solenoidal`].
pub fn project_field<F>(f: F, basis: &RadialBasis, transform: &VectorTransform) -> Result<SolenoidalState>
where
    F: Fn(f64, f64, f64) -> [f64; 3],
{
    let grid = &transform.grid;
    let mm = transform.max_degree;
    let mut out = SolenoidalState::zeros(mm, basis);
    let nodes = basis.lgl_radii();
    let n = lm_count(mm);
    let zero = Complex64::new(0.0, 0.0);
    let mut tv: Vec<[Vec<Complex64>; 3]> = vec![Default::default(); n];
    let mut av: Vec<[Vec<Complex64>; 3]> = vec![Default::default(); n];
    for e in 0..3 {
        for &r in &nodes[e] {
            let mut samples = VectorSamples::zeros(grid.len());
            for i in 0..grid.n_theta {
                for j in 0..grid.n_phi {
                    let b = f(r, grid.theta_nodes[i], grid.phi_nodes[j]);
                    let q = i * grid.n_phi + j;
                    samples.r[q] = b[0];
                    samples.theta[q] = b[1];
                    samples.phi[q] = b[2];
                }
            }
            let c = transform.analysis(&samples)?;
            for (l, m) in lm_pairs(mm) {
                let k = lm_index(l, m);
                let ll = (l * (l + 1)) as f64;
                tv[k][e].push(c.t[k]);
                av[k][e].push(if l == 0 { zero } else { c.r[k] * (r / ll) });
            }
        }
    }
    for (l, m) in lm_pairs(mm) {
        if l == 0 {
            continue;
        }
        let k = lm_index(l, m);
        out.t[k] = basis.interpolate_nodal(&tv[k])?;
        out.a[k] = basis.interpolate_nodal(&av[k])?;
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sph::build_grid;
    use crate::vsh::divergence_coefficients;

    const RADII: [f64; 3] = [1.5, 2.5, 7.5];

    fn c(x: f64) -> Complex64 {
        Complex64::new(x, 0.0)
    }

    #[test]
    fn single_toroidal_mode() {
        let basis = RadialBasis::new(6, RADII).unwrap();
        let mut s = SolenoidalState::zeros(3, &basis);
        s.t[lm_index(1, 0)] = basis.interpolate(|_| c(1.0));
        let x = s.to_components();
        assert!((x.t[lm_index(1, 0)].eval(2.0).unwrap() - c(1.0)).norm() < 1e-14);
        assert!(x.s.iter().chain(&x.r).all(|p| p.is_zero()));
    }

    #[test]
    fn linear_potential() {
        let basis = RadialBasis::new(6, RADII).unwrap();
        let mut s = SolenoidalState::zeros(2, &basis);
        s.a[lm_index(1, 0)] = basis.interpolate(c);
        let x = s.to_components();
        let k = lm_index(1, 0);
        for r in [0.5, 3.0, 7.0] {
            assert!((x.r[k].eval(r).unwrap() - c(2.0)).norm() < 1e-12);
            assert!((x.s[k].eval(r).unwrap() - c(2.0)).norm() < 1e-12);
        }
    }

    #[test]
    fn coefficient_divergence_vanishes() {
        let basis = RadialBasis::new(5, RADII).unwrap();
        let mut s = SolenoidalState::zeros(3, &basis);
        for (l, m) in lm_pairs(3).filter(|p| p.0 > 0) {
            let k = lm_index(l, m);
            s.a[k] = basis.interpolate(|r| Complex64::new(r * r * (0.3 * r + l as f64).sin(), m as f64 * r));
            s.a[k].coeffs[basis.vertex_index(0)] = c(0.0);
        }
        for d in divergence_coefficients(&s.to_components()) {
            for r in [0.2, 1.5, 2.0, 5.0, 7.5] {
                assert!(d.eval(r).unwrap().norm() < 1e-11);
            }
        }
    }

    #[test]
    fn projection_is_left_inverse() {
        let basis = RadialBasis::new(7, RADII).unwrap();
        let mut s = SolenoidalState::zeros(3, &basis);
        for (l, m) in lm_pairs(3).filter(|p| p.0 > 0) {
            let k = lm_index(l, m);
            s.t[k] = basis.interpolate(|r| Complex64::new((r + m as f64).cos(), 0.1 * r));
            s.a[k] = basis.interpolate(|r| Complex64::new(r * (r * 0.4).exp(), -(r * r)));
        }
        let back = project_solenoidal(&s.to_components(), &basis).unwrap();
        assert!(back.max_abs_diff(&s) < 1e-13 * s.max_abs_coefficient());
        let again = project_solenoidal(&back.to_components(), &basis).unwrap();
        assert!(again.max_abs_diff(&back) < 1e-13 * s.max_abs_coefficient());
    }

    #[test]
    fn synthesize_single_mode_and_domain() {
        let basis = RadialBasis::new(4, RADII).unwrap();
        let grid = build_grid(6, 12, 3).unwrap();
        let tr = VectorTransform::new(&grid, 3).unwrap();
        let mut s = SolenoidalState::zeros(3, &basis);
        let out = s.synthesize(&tr, &[1.0, 7.5]).unwrap();
        assert!(out.iter().all(|f| f.r.iter().chain(&f.theta).chain(&f.phi).all(|v| *v == 0.0)));
        s.t[lm_index(1, 0)] = basis.interpolate(|_| c(1.0));
        let out = s.synthesize(&tr, &[0.0, 3.3]).unwrap();
        for f in &out {
            for i in 0..grid.n_theta {
                let h = crate::vsh::vsh_eval(1, 0, grid.theta_nodes[i], 0.0).unwrap();
                assert!((f.phi[i * grid.n_phi] - h.t[2].re).abs() < 1e-13);
            }
        }
        assert!(matches!(s.synthesize(&tr, &[8.0]), Err(DynamoError::RadiusOutOfDomain { .. })));
    }
}
