use nalgebra::{DMatrix, DVector, Dyn, LU};
use num_complex::Complex64;

use crate::error::{DynamoError, Result};
use crate::quadrature::gauss_legendre;
use crate::radial::basis::{RadialBasis, RadialFunction};

/// Extra Gauss points per element, beyond the degree, used when assembling
/// matrices. Poloidal integrands carry `1/r` factors on the outer elements, so
/// the rule must resolve a rational function rather than a polynomial.
pub const ASSEMBLY_EXTRA_POINTS: usize = 16;

/// Radial nodes with quadrature weights and tabulated basis values. Built
/// either as a Gauss rule on each element or at arbitrary sample radii.
#[derive(Debug, Clone)]
pub struct RadialQuadrature {
    pub basis: RadialBasis,
    pub radii: Vec<f64>,
    /// Weights in `dr`; zero for plain sample points.
    pub weights: Vec<f64>,
    elements: Vec<usize>,
    /// `tables[q][d][j]`: `d`-th derivative of local function `j` at node `q`.
    tables: Vec<Vec<Vec<f64>>>,
}

impl RadialQuadrature {
    pub fn gauss(basis: &RadialBasis, points_per_element: usize) -> Self {
        let (x, w) = gauss_legendre(points_per_element);
        let cap = 3 * points_per_element;
        let mut out = Self {
            basis: basis.clone(),
            radii: Vec::with_capacity(cap),
            weights: Vec::with_capacity(cap),
            elements: Vec::with_capacity(cap),
            tables: Vec::with_capacity(cap),
        };
        for e in 0..3 {
            let (a, b) = basis.element_bounds(e);
            for (xi, wi) in x.iter().zip(&w) {
                out.radii.push(basis.to_radius(e, *xi));
                out.weights.push(wi * 0.5 * (b - a));
                out.elements.push(e);
                out.tables.push(basis.local_values(e, *xi, 2));
            }
        }
        out
    }

    /// Sample points without weights. Interface radii use the inner element.
    /// Sample points in element `e`, evaluated with that element's polynomials
    /// even at its end points.
    pub fn in_element(basis: &RadialBasis, e: usize, radii: &[f64]) -> Result<Self> {
        let (a, b) = basis.element_bounds(e);
        let mut out = Self {
            basis: basis.clone(),
            radii: radii.to_vec(),
            weights: vec![0.0; radii.len()],
            elements: vec![e; radii.len()],
            tables: Vec::with_capacity(radii.len()),
        };
        for &r in radii {
            if !(a..=b).contains(&r) {
                return Err(DynamoError::Argument(format!("radius {r} outside element [{a}, {b}]")));
            }
            out.tables.push(basis.local_values(e, basis.to_local(e, r), 2));
        }
        Ok(out)
    }

    pub fn at_radii(basis: &RadialBasis, radii: &[f64]) -> Result<Self> {
        let r3 = basis.radii[2];
        let mut out = Self {
            basis: basis.clone(),
            radii: radii.to_vec(),
            weights: vec![0.0; radii.len()],
            elements: Vec::with_capacity(radii.len()),
            tables: Vec::with_capacity(radii.len()),
        };
        for &r in radii {
            if !(0.0..=r3).contains(&r) {
                return Err(DynamoError::RadiusOutOfDomain { radius: r, outer: r3 });
            }
            let e = if r <= basis.radii[0] {
                0
            } else if r <= basis.radii[1] {
                1
            } else {
                2
            };
            out.elements.push(e);
            out.tables.push(basis.local_values(e, basis.to_local(e, r), 2));
        }
        Ok(out)
    }

    pub fn len(&self) -> usize {
        self.radii.len()
    }

    pub fn is_empty(&self) -> bool {
        self.radii.is_empty()
    }

    pub fn element_of_node(&self, q: usize) -> usize {
        self.elements[q]
    }

    /// `order`-th derivative of `f` at the nodes, `order <= 2`.
    pub fn sample(&self, f: &RadialFunction, order: usize) -> Vec<Complex64> {
        let locals: Vec<Vec<usize>> = (0..3).map(|e| self.basis.local_indices(e)).collect();
        (0..self.len())
            .map(|q| {
                let idx = &locals[self.elements[q]];
                idx.iter().zip(&self.tables[q][order]).map(|(&g, &v)| f.coeffs[g] * v).sum()
            })
            .collect()
    }

    pub(crate) fn for_each_node<F: FnMut(usize, f64, f64, &[usize], &[Vec<f64>])>(&self, mut f: F) {
        let locals: Vec<Vec<usize>> = (0..3).map(|e| self.basis.local_indices(e)).collect();
        for q in 0..self.len() {
            let e = self.elements[q];
            f(q, self.radii[q], self.weights[q], &locals[e], &self.tables[q]);
        }
    }
}

/// A vector field's `(t, s, r)` components for one `(l, m)`, sampled at quadrature nodes.
#[derive(Debug, Clone, PartialEq)]
pub struct ComponentSamples {
    pub t: Vec<Complex64>,
    pub s: Vec<Complex64>,
    pub r: Vec<Complex64>,
}

impl ComponentSamples {
    pub fn zeros(n: usize) -> Self {
        let z = vec![Complex64::new(0.0, 0.0); n];
        Self {
            t: z.clone(),
            s: z.clone(),
            r: z,
        }
    }
}

/// `l(l+1) f / r^2 - 2 f' / r - f''` from value and derivatives.
#[inline]
pub fn l_operator(l: usize, r: f64, f: f64, df: f64, d2f: f64) -> f64 {
    let ll = (l * (l + 1)) as f64;
    ll * f / (r * r) - 2.0 * df / r - d2f
}

#[derive(Debug, Clone)]
pub struct FactoredMatrix {
    pub matrix: DMatrix<f64>,
    lu: LU<f64, Dyn, Dyn>,
}

impl FactoredMatrix {
    fn new(matrix: DMatrix<f64>, l: usize) -> Result<Self> {
        let lu = matrix.clone().lu();
        let diag = lu.u().diagonal();
        let max = diag.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let min = diag.iter().fold(f64::INFINITY, |m, v| m.min(v.abs()));
        if !(max > 0.0) || min <= 1e-14 * max {
            return Err(DynamoError::SingularSystem { degree: l });
        }
        Ok(Self { matrix, lu })
    }

    fn solve(&self, rhs: &[Complex64]) -> Vec<Complex64> {
        let re = DVector::from_iterator(rhs.len(), rhs.iter().map(|z| z.re));
        let im = DVector::from_iterator(rhs.len(), rhs.iter().map(|z| z.im));
        let xr = self.lu.solve(&re).expect("factor checked at construction");
        let xi = self.lu.solve(&im).expect("factor checked at construction");
        xr.iter().zip(xi.iter()).map(|(&a, &b)| Complex64::new(a, b)).collect()
    }
}

/// Toroidal system: `alpha (t, phi)_{r^2} + sum_i beta_i [ (t', phi')_{r^2} + l(l+1) (t, phi) ]`
/// plus the point terms `r1 (b1 - b2) t phi |_{r1} + r2 (b2 - b3) t phi |_{r2} + r3 b3 t phi |_{r3}`.
#[derive(Debug, Clone)]
pub struct ToroidalSystem {
    pub l: usize,
    pub mass: DMatrix<f64>,
    pub factored: FactoredMatrix,
}

/// Poloidal system on the `C^1` subspace with `A(0) = 0`:
/// `alpha [ l(l+1) (A, psi) + ((rA)', (r psi)') ] + sum_i beta_i (L A, L psi)_{r^2}`.
/// The origin hat is pinned to zero and two multipliers enforce continuity of `A'`
/// at `r1` and `r2`.
#[derive(Debug, Clone)]
pub struct PoloidalSystem {
    pub l: usize,
    pub mass: DMatrix<f64>,
    pub factored: FactoredMatrix,
}

fn check_inputs(l: usize, alpha: f64, beta_bar: [f64; 3]) -> Result<()> {
    if l == 0 {
        return Err(DynamoError::Argument("mode systems need degree l >= 1".into()));
    }
    if !(alpha > 0.0) || beta_bar.iter().any(|b| !(*b > 0.0)) {
        return Err(DynamoError::Argument(format!(
            "need alpha > 0 and positive zone coefficients, got {alpha}, {beta_bar:?}"
        )));
    }
    Ok(())
}

/// Assembles and factors the toroidal system for degree `l`.
pub fn assemble_toroidal(basis: &RadialBasis, l: usize, alpha: f64, beta_bar: [f64; 3]) -> Result<ToroidalSystem> {
    check_inputs(l, alpha, beta_bar)?;
    let size = basis.size();
    let ll = (l * (l + 1)) as f64;
    let quad = RadialQuadrature::gauss(basis, basis.n + ASSEMBLY_EXTRA_POINTS);
    let mut mass = DMatrix::zeros(size, size);
    let mut stiff = DMatrix::zeros(size, size);
    quad.for_each_node(|q, r, w, idx, tab| {
        let beta = beta_bar[quad.element_of_node(q)];
        for (a, &ga) in idx.iter().enumerate() {
            for (b, &gb) in idx.iter().enumerate() {
                let (va, vb) = (tab[0][a], tab[0][b]);
                mass[(ga, gb)] += w * r * r * va * vb;
                stiff[(ga, gb)] += w * beta * (r * r * tab[1][a] * tab[1][b] + ll * va * vb);
            }
        }
    });
    let [r1, r2, r3] = basis.radii;
    let [b1, b2, b3] = beta_bar;
    stiff[(basis.vertex_index(1), basis.vertex_index(1))] += r1 * (b1 - b2);
    stiff[(basis.vertex_index(2), basis.vertex_index(2))] += r2 * (b2 - b3);
    stiff[(basis.vertex_index(3), basis.vertex_index(3))] += r3 * b3;
    let matrix = &mass * alpha + stiff;
    Ok(ToroidalSystem {
        l,
        mass,
        factored: FactoredMatrix::new(matrix, l)?,
    })
}

/// Jump of the first derivative across `r_v` for every basis function: left minus right.
fn derivative_jump_row(basis: &RadialBasis, v: usize) -> Vec<f64> {
    let mut row = vec![0.0; basis.size()];
    let left = basis.local_values(v - 1, 1.0, 1);
    for (j, &g) in basis.local_indices(v - 1).iter().enumerate() {
        row[g] += left[1][j];
    }
    let right = basis.local_values(v, -1.0, 1);
    for (j, &g) in basis.local_indices(v).iter().enumerate() {
        row[g] -= right[1][j];
    }
    row
}

/// Assembles and factors the constrained poloidal system for degree `l`.
pub fn assemble_poloidal(basis: &RadialBasis, l: usize, alpha: f64, beta_bar: [f64; 3]) -> Result<PoloidalSystem> {
    check_inputs(l, alpha, beta_bar)?;
    let size = basis.size();
    let origin = basis.vertex_index(0);
    let ll = (l * (l + 1)) as f64;
    let quad = RadialQuadrature::gauss(basis, basis.n + ASSEMBLY_EXTRA_POINTS);
    let mut mass = DMatrix::zeros(size, size);
    let mut stiff = DMatrix::zeros(size, size);
    quad.for_each_node(|q, r, w, idx, tab| {
        let beta = beta_bar[quad.element_of_node(q)];
        let lpsi: Vec<f64> = (0..idx.len())
            .map(|a| l_operator(l, r, tab[0][a], tab[1][a], tab[2][a]))
            .collect();
        for (a, &ga) in idx.iter().enumerate() {
            if ga == origin {
                continue;
            }
            let da = tab[0][a] + r * tab[1][a];
            for (b, &gb) in idx.iter().enumerate() {
                if gb == origin {
                    continue;
                }
                let db = tab[0][b] + r * tab[1][b];
                mass[(ga, gb)] += w * (ll * tab[0][a] * tab[0][b] + da * db);
                stiff[(ga, gb)] += w * beta * r * r * lpsi[a] * lpsi[b];
            }
        }
    });
    let mut matrix = DMatrix::zeros(size + 2, size + 2);
    matrix.view_mut((0, 0), (size, size)).copy_from(&(&mass * alpha + stiff));
    matrix[(origin, origin)] = 1.0;
    for v in 1..=2 {
        let row = derivative_jump_row(basis, v);
        for (k, &c) in row.iter().enumerate() {
            if k != origin {
                matrix[(size + v - 1, k)] = c;
                matrix[(k, size + v - 1)] = c;
            }
        }
    }
    Ok(PoloidalSystem {
        l,
        mass,
        factored: FactoredMatrix::new(matrix, l)?,
    })
}

/// Both factored systems for one degree. Independent of the order `m` and of time.
#[derive(Debug, Clone)]
pub struct FactoredModeSystem {
    pub l: usize,
    pub alpha: f64,
    pub beta_bar: [f64; 3],
    pub basis: RadialBasis,
    pub toroidal: ToroidalSystem,
    pub poloidal: PoloidalSystem,
}

/// Right-hand side data for one `(l, m)`.
///
/// The load is `alpha M x_prev + (f1, c) + (f2, curl c) + jump terms` over
/// toroidal tests `c = phi T` and poloidal tests `c = curl(psi T)`, with the
/// common factor `l(l+1)` removed. Jump data enter as
/// `r1^2 g1 phi(r1) - r2^2 g2 phi(r2)` (toroidal) and
/// `r1^2 g1 psi'(r1) - r2^2 g2 psi'(r2)` (poloidal).
#[derive(Debug, Clone, Default)]
pub struct ModeRhs<'a> {
    pub previous_toroidal: Option<&'a RadialFunction>,
    pub previous_poloidal: Option<&'a RadialFunction>,
    pub f1: Option<&'a ComponentSamples>,
    pub f2: Option<&'a ComponentSamples>,
    pub toroidal_jumps: [Complex64; 2],
    pub poloidal_jumps: [Complex64; 2],
}

impl FactoredModeSystem {
    pub fn assemble(basis: &RadialBasis, l: usize, alpha: f64, beta_bar: [f64; 3]) -> Result<Self> {
        Ok(Self {
            l,
            alpha,
            beta_bar,
            basis: basis.clone(),
            toroidal: assemble_toroidal(basis, l, alpha, beta_bar)?,
            poloidal: assemble_poloidal(basis, l, alpha, beta_bar)?,
        })
    }

    fn check_samples(&self, quad: &RadialQuadrature, s: &ComponentSamples) -> Result<()> {
        for v in [&s.t, &s.s, &s.r] {
            if v.len() != quad.len() {
                return Err(DynamoError::SizeMismatch {
                    expected: quad.len(),
                    actual: v.len(),
                });
            }
        }
        Ok(())
    }

    fn check_function(&self, f: &RadialFunction) -> Result<()> {
        if f.coeffs.len() != self.basis.size() {
            return Err(DynamoError::SizeMismatch {
                expected: self.basis.size(),
                actual: f.coeffs.len(),
            });
        }
        Ok(())
    }

    pub fn toroidal_load(&self, quad: &RadialQuadrature, rhs: &ModeRhs) -> Result<Vec<Complex64>> {
        let zero = Complex64::new(0.0, 0.0);
        let mut load = vec![zero; self.basis.size()];
        if let Some(prev) = rhs.previous_toroidal {
            self.check_function(prev)?;
            mat_vec_add(&self.toroidal.mass, &prev.coeffs, self.alpha, &mut load);
        }
        if let Some(f1) = rhs.f1 {
            self.check_samples(quad, f1)?;
        }
        if let Some(f2) = rhs.f2 {
            self.check_samples(quad, f2)?;
        }
        quad.for_each_node(|q, r, w, idx, tab| {
            for (a, &g) in idx.iter().enumerate() {
                let phi = tab[0][a];
                let mut acc = zero;
                if let Some(f1) = rhs.f1 {
                    acc += f1.t[q] * (r * r * phi);
                }
                if let Some(f2) = rhs.f2 {
                    acc += f2.r[q] * (r * phi) + f2.s[q] * (r * (phi + r * tab[1][a]));
                }
                load[g] += acc * w;
            }
        });
        let [r1, r2, _] = self.basis.radii;
        load[self.basis.vertex_index(1)] += rhs.toroidal_jumps[0] * (r1 * r1);
        load[self.basis.vertex_index(2)] -= rhs.toroidal_jumps[1] * (r2 * r2);
        Ok(load)
    }

    pub fn poloidal_load(&self, quad: &RadialQuadrature, rhs: &ModeRhs) -> Result<Vec<Complex64>> {
        let zero = Complex64::new(0.0, 0.0);
        let l = self.l;
        let mut load = vec![zero; self.basis.size()];
        if let Some(prev) = rhs.previous_poloidal {
            self.check_function(prev)?;
            mat_vec_add(&self.poloidal.mass, &prev.coeffs, self.alpha, &mut load);
        }
        if let Some(f1) = rhs.f1 {
            self.check_samples(quad, f1)?;
        }
        if let Some(f2) = rhs.f2 {
            self.check_samples(quad, f2)?;
        }
        quad.for_each_node(|q, r, w, idx, tab| {
            for (a, &g) in idx.iter().enumerate() {
                let mut acc = zero;
                if let Some(f1) = rhs.f1 {
                    let psi = tab[0][a];
                    acc += f1.r[q] * (r * psi) + f1.s[q] * (r * (psi + r * tab[1][a]));
                }
                if let Some(f2) = rhs.f2 {
                    let lpsi = l_operator(l, r, tab[0][a], tab[1][a], tab[2][a]);
                    acc += f2.t[q] * (r * r * lpsi);
                }
                load[g] += acc * w;
            }
        });
        for (v, sign) in [(1usize, 1.0), (2, -1.0)] {
            let g = rhs.poloidal_jumps[v - 1];
            if g == zero {
                continue;
            }
            let rv = self.basis.radii[v - 1];
            let slope = average_derivative_row(&self.basis, v);
            for (k, d) in slope.iter().enumerate() {
                load[k] += g * (sign * rv * rv * d);
            }
        }
        load[self.basis.vertex_index(0)] = zero;
        Ok(load)
    }

    pub fn solve_toroidal(&self, load: &[Complex64]) -> Result<RadialFunction> {
        if load.len() != self.basis.size() {
            return Err(DynamoError::SizeMismatch {
                expected: self.basis.size(),
                actual: load.len(),
            });
        }
        Ok(RadialFunction {
            coeffs: self.toroidal.factored.solve(load),
        })
    }

    pub fn solve_poloidal(&self, load: &[Complex64]) -> Result<RadialFunction> {
        let size = self.basis.size();
        if load.len() != size {
            return Err(DynamoError::SizeMismatch {
                expected: size,
                actual: load.len(),
            });
        }
        let mut full = load.to_vec();
        full.extend([Complex64::new(0.0, 0.0); 2]);
        let mut z = self.poloidal.factored.solve(&full);
        z.truncate(size);
        Ok(RadialFunction { coeffs: z })
    }
}

/// Mean of the one-sided derivatives at `r_v` for every basis function.
fn average_derivative_row(basis: &RadialBasis, v: usize) -> Vec<f64> {
    let mut row = vec![0.0; basis.size()];
    let left = basis.local_values(v - 1, 1.0, 1);
    for (j, &g) in basis.local_indices(v - 1).iter().enumerate() {
        row[g] += 0.5 * left[1][j];
    }
    let right = basis.local_values(v, -1.0, 1);
    for (j, &g) in basis.local_indices(v).iter().enumerate() {
        row[g] += 0.5 * right[1][j];
    }
    row
}

fn mat_vec_add(m: &DMatrix<f64>, x: &[Complex64], scale: f64, out: &mut [Complex64]) {
    for (i, o) in out.iter_mut().enumerate() {
        let mut acc = Complex64::new(0.0, 0.0);
        for (j, xj) in x.iter().enumerate() {
            acc += xj * m[(i, j)];
        }
        *o += acc * scale;
    }
}

/// Solves both radial systems of one `(l, m)` with an already factored system.
pub fn solve_mode(
    system: &FactoredModeSystem,
    quad: &RadialQuadrature,
    rhs: &ModeRhs,
) -> Result<(RadialFunction, RadialFunction)> {
    if quad.basis != system.basis {
        return Err(DynamoError::Argument("quadrature built for a different radial basis".into()));
    }
    let t = system.solve_toroidal(&system.toroidal_load(quad, rhs)?)?;
    let a = system.solve_poloidal(&system.poloidal_load(quad, rhs)?)?;
    Ok((t, a))
}

#[cfg(test)]
mod tests {
    use super::*;

    const RADII: [f64; 3] = [1.5, 2.5, 7.5];
    const BETA: [f64; 3] = [1.0, 1.0, 150.0];

    #[test]
    fn toroidal_point_terms_match_natural_form() {
        let basis = RadialBasis::new(6, RADII).unwrap();
        let beta = [1.0, 3.0, 40.0];
        let (l, alpha) = (2usize, 7.0);
        let sys = assemble_toroidal(&basis, l, alpha, beta).unwrap();
        let quad = RadialQuadrature::gauss(&basis, 30);
        let ll = (l * (l + 1)) as f64;
        let size = basis.size();
        let mut natural = DMatrix::<f64>::zeros(size, size);
        quad.for_each_node(|q, r, w, idx, tab| {
            let b = beta[quad.element_of_node(q)];
            for (a, &ga) in idx.iter().enumerate() {
                for (c, &gc) in idx.iter().enumerate() {
                    let da = tab[0][a] + r * tab[1][a];
                    let dc = tab[0][c] + r * tab[1][c];
                    natural[(ga, gc)] +=
                        w * (alpha * r * r * tab[0][a] * tab[0][c] + b * (ll * tab[0][a] * tab[0][c] + da * dc));
                }
            }
        });
        let diff = (&natural - &sys.factored.matrix).abs().max();
        assert!(diff < 1e-10 * natural.abs().max(), "{diff}");
    }

    #[test]
    fn assembly_rule_is_converged() {
        let basis = RadialBasis::new(10, RADII).unwrap();
        let sys = assemble_poloidal(&basis, 3, 16000.0, BETA).unwrap();
        // same matrix with a much finer rule
        let size = basis.size();
        let origin = basis.vertex_index(0);
        let quad = RadialQuadrature::gauss(&basis, 80);
        let mut fine = DMatrix::<f64>::zeros(size, size);
        quad.for_each_node(|q, r, w, idx, tab| {
            let b = BETA[quad.element_of_node(q)];
            for (a, &ga) in idx.iter().enumerate() {
                for (c, &gc) in idx.iter().enumerate() {
                    if ga == origin || gc == origin {
                        continue;
                    }
                    let la = l_operator(3, r, tab[0][a], tab[1][a], tab[2][a]);
                    let lc = l_operator(3, r, tab[0][c], tab[1][c], tab[2][c]);
                    let da = tab[0][a] + r * tab[1][a];
                    let dc = tab[0][c] + r * tab[1][c];
                    fine[(ga, gc)] += w * (16000.0 * (12.0 * tab[0][a] * tab[0][c] + da * dc) + b * r * r * la * lc);
                }
            }
        });
        let coarse = sys.factored.matrix.view((0, 0), (size, size)).into_owned();
        let mut diff = 0.0f64;
        for i in 0..size {
            for j in 0..size {
                if i != origin && j != origin {
                    diff = diff.max((coarse[(i, j)] - fine[(i, j)]).abs());
                }
            }
        }
        assert!(diff < 1e-13 * fine.abs().max(), "{diff}");
    }

    #[test]
    fn zero_rhs_gives_zero() {
        let basis = RadialBasis::new(8, RADII).unwrap();
        let quad = RadialQuadrature::gauss(&basis, 11);
        let sys = FactoredModeSystem::assemble(&basis, 2, 100.0, BETA).unwrap();
        let (t, a) = solve_mode(&sys, &quad, &ModeRhs::default()).unwrap();
        assert!(t.is_zero() && a.is_zero());
    }

    #[test]
    fn rejects_bad_parameters() {
        let basis = RadialBasis::new(4, RADII).unwrap();
        assert!(assemble_toroidal(&basis, 0, 1.0, BETA).is_err());
        assert!(assemble_poloidal(&basis, 1, 0.0, BETA).is_err());
        assert!(assemble_toroidal(&basis, 1, 1.0, [1.0, -1.0, 1.0]).is_err());
    }
}
