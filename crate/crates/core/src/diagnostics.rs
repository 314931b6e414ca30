//! Observables of a state and their plain-text output.

use std::f64::consts::PI;
use std::io::Write;

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::Result;
use crate::quadrature::gauss_lobatto;
use crate::radial::RadialQuadrature;
use crate::solenoidal::SolenoidalState;
use crate::sph::{lm_index, lm_pairs, LegendreTable, ScalarCoefficients, ScalarTransform};
use crate::vsh::{ComponentCoefficients, VectorTransform};

/// `integral over the shell of |B|^2` from the radial coefficients, using
/// orthogonality of the vector harmonics. Exact up to rounding.
pub fn magnetic_energy(state: &SolenoidalState) -> f64 {
    let quad = RadialQuadrature::gauss(&state.basis, state.basis.n + 2);
    let mut total = 0.0;
    for (l, m) in lm_pairs(state.max_degree) {
        if l == 0 {
            continue;
        }
        let k = lm_index(l, m);
        let ll = (l * (l + 1)) as f64;
        let t = quad.sample(&state.t[k], 0);
        let a = quad.sample(&state.a[k], 0);
        let da = quad.sample(&state.a[k], 1);
        let mult = if m == 0 { 1.0 } else { 2.0 };
        let mut e = 0.0;
        for q in 0..quad.len() {
            let r = quad.radii[q];
            // r s = (rA)', r r_comp = l(l+1) A
            let rs = a[q] + da[q] * r;
            e += quad.weights[q] * (ll * t[q].norm_sqr() * r * r + ll * rs.norm_sqr() + ll * ll * a[q].norm_sqr());
        }
        total += mult * e;
    }
    total
}

/// The same energy by synthesizing the field and integrating on the grid.
pub fn grid_energy(state: &SolenoidalState, transform: &VectorTransform) -> Result<f64> {
    let quad = RadialQuadrature::gauss(&state.basis, state.basis.n + 2);
    let shells = state.synthesize(transform, &quad.radii)?;
    let grid = &transform.grid;
    let mut total = 0.0;
    for (q, b) in shells.iter().enumerate() {
        let r = quad.radii[q];
        let mut s = 0.0;
        for i in 0..grid.n_theta {
            let w = grid.weight(i);
            for j in 0..grid.n_phi {
                let k = i * grid.n_phi + j;
                s += w * (b.r[k].powi(2) + b.theta[k].powi(2) + b.phi[k].powi(2));
            }
        }
        total += quad.weights[q] * r * r * s;
    }
    Ok(total)
}

/// Maximum of `|div B|` and of `|B|` over a physical grid.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DivergenceCheck {
    pub max_divergence: f64,
    pub max_field: f64,
}

impl DivergenceCheck {
    pub fn relative(&self) -> f64 {
        if self.max_field > 0.0 {
            self.max_divergence / self.max_field
        } else {
            self.max_divergence
        }
    }
}

/// Barycentric differentiation matrix on the given nodes.
fn differentiation_matrix(x: &[f64]) -> Vec<Vec<f64>> {
    let n = x.len();
    let w: Vec<f64> = (0..n)
        .map(|j| 1.0 / (0..n).filter(|&k| k != j).map(|k| x[j] - x[k]).product::<f64>())
        .collect();
    let mut d = vec![vec![0.0; n]; n];
    for i in 0..n {
        let mut diag = 0.0;
        for j in 0..n {
            if i != j {
                d[i][j] = (w[j] / w[i]) / (x[i] - x[j]);
                diag -= d[i][j];
            }
        }
        d[i][i] = diag;
    }
    d
}

/// Divergence of the synthesized field.
///
/// The field is synthesized on the angular grid at `N + 2` Lobatto radii per
/// element and analysed back; `r^2 B_r` and `r B_tangential` are then fitted by
/// degree `N + 1` polynomials per element, differentiated, and the divergence
/// is synthesized on the grid at every radius except the origin.
pub fn divergence_residual(state: &SolenoidalState, transform: &VectorTransform) -> Result<DivergenceCheck> {
    let basis = &state.basis;
    let (x, _) = gauss_lobatto(basis.n + 1);
    let d = differentiation_matrix(&x);
    let scalar = ScalarTransform::new(&transform.grid, state.max_degree)?;
    let mm = state.max_degree;
    let per_element: Vec<Result<DivergenceCheck>> = (0..3)
        .into_par_iter()
        .map(|e| {
            let (a, b) = basis.element_bounds(e);
            let jac = 2.0 / (b - a);
            let radii: Vec<f64> = x.iter().map(|&xi| basis.to_radius(e, xi)).collect();
            let shells = state.synthesize_at(transform, &RadialQuadrature::in_element(basis, e, &radii)?)?;
            let mut max_field = 0.0f64;
            let comps: Vec<ComponentCoefficients<Complex64>> = shells
                .iter()
                .map(|s| {
                    for k in 0..s.len() {
                        max_field = max_field.max(s.magnitude(k));
                    }
                    transform.analysis(s)
                })
                .collect::<Result<_>>()?;
            let mut max_div = 0.0f64;
            for (i, &r) in radii.iter().enumerate() {
                if r == 0.0 {
                    continue;
                }
                let mut div = ScalarCoefficients::zeros(mm);
                for (l, m) in lm_pairs(mm) {
                    let k = lm_index(l, m);
                    let ll = (l * (l + 1)) as f64;
                    let mut deriv = Complex64::new(0.0, 0.0);
                    for (j, &rj) in radii.iter().enumerate() {
                        deriv += comps[j].r[k] * (rj * rj * d[i][j] * jac);
                    }
                    div.c[k] = (deriv - comps[i].s[k] * (ll * r)) / (r * r);
                }
                let samples = scalar.synthesis(&div)?;
                max_div = samples.iter().fold(max_div, |acc, v| acc.max(v.abs()));
            }
            Ok(DivergenceCheck {
                max_divergence: max_div,
                max_field,
            })
        })
        .collect();
    let mut out = DivergenceCheck {
        max_divergence: 0.0,
        max_field: 0.0,
    };
    for c in per_element {
        let c = c?;
        out.max_divergence = out.max_divergence.max(c.max_divergence);
        out.max_field = out.max_field.max(c.max_field);
    }
    Ok(out)
}

/// `B_phi` at one point from the component coefficients at its radius.
fn azimuthal_at(c: &ComponentCoefficients<Complex64>, tab: &LegendreTable, phi: f64) -> f64 {
    let i = Complex64::new(0.0, 1.0);
    let mut acc = 0.0;
    for (l, m) in lm_pairs(c.max_degree) {
        let k = lm_index(l, m);
        let g = -c.t[k] * tab.dtheta[k] + i * c.s[k] * tab.m_over_sin[k];
        let z = (g * Complex64::from_polar(1.0, m as f64 * phi)).re;
        acc += if m == 0 { z } else { 2.0 * z };
    }
    acc
}

/// Cell-centred samples of `(0, extent)` with `n` cells.
pub fn cell_centres(extent: f64, n: usize) -> Vec<f64> {
    (0..n).map(|i| (i as f64 + 0.5) * extent / n as f64).collect()
}

/// `B_phi` over a meridional plane.
#[derive(Debug, Clone, PartialEq)]
pub struct MeridionalSlice {
    pub phi: f64,
    pub radii: Vec<f64>,
    pub thetas: Vec<f64>,
    /// `values[i][j]` at `radii[i]`, `thetas[j]`.
    pub values: Vec<Vec<f64>>,
}

/// `B_phi` on the given colatitudes at radius `r` and longitude `phi`.
pub fn azimuthal_profile(state: &SolenoidalState, r: f64, phi: f64, thetas: &[f64]) -> Result<Vec<f64>> {
    let nodes = RadialQuadrature::at_radii(&state.basis, &[r])?;
    let (comps, _) = state.sample_components(&nodes, false);
    Ok(thetas
        .iter()
        .map(|&t| azimuthal_at(&comps[0], &LegendreTable::new(state.max_degree, t), phi))
        .collect())
}

/// `B_phi` on a cell-centred `n_r` x `n_theta` raster of the plane `phi = phi0`.
pub fn meridional_slice(state: &SolenoidalState, phi0: f64, n_r: usize, n_theta: usize) -> Result<MeridionalSlice> {
    let radii = cell_centres(state.basis.radii[2], n_r);
    let thetas = cell_centres(PI, n_theta);
    let nodes = RadialQuadrature::at_radii(&state.basis, &radii)?;
    let (comps, _) = state.sample_components(&nodes, false);
    let tables: Vec<LegendreTable> = thetas.iter().map(|&t| LegendreTable::new(state.max_degree, t)).collect();
    let values = comps
        .par_iter()
        .map(|c| tables.iter().map(|tab| azimuthal_at(c, tab, phi0)).collect())
        .collect();
    Ok(MeridionalSlice {
        phi: phi0,
        radii,
        thetas,
        values,
    })
}

/// `B_phi(theta)` at the tachocline radius on cell-centred colatitudes.
pub fn butterfly_record(state: &SolenoidalState, r_t: f64, phi0: f64, n_theta: usize) -> Result<Vec<f64>> {
    azimuthal_profile(state, r_t, phi0, &cell_centres(PI, n_theta))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiagnosticsRecord {
    pub step: u64,
    pub time: f64,
    pub energy: f64,
    pub divergence_residual: f64,
    pub max_field: f64,
}

impl DiagnosticsRecord {
    pub fn compute(step: u64, state: &SolenoidalState, transform: &VectorTransform) -> Result<Self> {
        let check = divergence_residual(state, transform)?;
        Ok(Self {
            step,
            time: state.time,
            energy: magnetic_energy(state),
            divergence_residual: check.max_divergence,
            max_field: check.max_field,
        })
    }
}

pub const ENERGY_HEADER: &str = "step\ttime\tenergy\tdiv_residual\tmax_b";

pub fn write_energy_row<W: Write>(out: &mut W, r: &DiagnosticsRecord) -> std::io::Result<()> {
    writeln!(
        out,
        "{}\t{:.17e}\t{:.17e}\t{:.17e}\t{:.17e}",
        r.step, r.time, r.energy, r.divergence_residual, r.max_field
    )
}

/// Header of the butterfly table: step, time, then one column per colatitude.
pub fn butterfly_header(thetas: &[f64]) -> String {
    let mut s = String::from("step\ttime");
    for t in thetas {
        s.push_str(&format!("\t{t:.17e}"));
    }
    s
}

pub fn write_butterfly_row<W: Write>(out: &mut W, step: u64, time: f64, values: &[f64]) -> std::io::Result<()> {
    write!(out, "{step}\t{time:.17e}")?;
    for v in values {
        write!(out, "\t{v:.17e}")?;
    }
    writeln!(out)
}

/// Long-format slice table: one `r theta b_phi` row per raster point.
pub fn write_slice<W: Write>(out: &mut W, slice: &MeridionalSlice) -> std::io::Result<()> {
    writeln!(out, "# phi\t{:.17e}", slice.phi)?;
    writeln!(out, "r\ttheta\tb_phi")?;
    for (i, r) in slice.radii.iter().enumerate() {
        for (j, t) in slice.thetas.iter().enumerate() {
            writeln!(out, "{r:.17e}\t{t:.17e}\t{:.17e}", slice.values[i][j])?;
        }
    }
    Ok(())
}
