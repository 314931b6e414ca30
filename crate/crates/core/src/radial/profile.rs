use std::ops::{Add, Mul, Neg, Sub};

use num_complex::Complex64;

use crate::error::{DynamoError, Result};
use crate::quadrature::{legendre_series_derivative, legendre_series_eval};

/// One element's piece: a sum of `r^p q_p(x)` with `q_p` a Legendre series in
/// the element's local coordinate.
#[derive(Debug, Clone, PartialEq, Default)]
struct Piece {
    terms: Vec<(i32, Vec<Complex64>)>,
}

impl Piece {
    fn insert(&mut self, power: i32, coeffs: &[Complex64], scale: Complex64) {
        let pos = match self.terms.binary_search_by_key(&power, |t| t.0) {
            Ok(i) => i,
            Err(i) => {
                self.terms.insert(i, (power, Vec::new()));
                i
            }
        };
        let dst = &mut self.terms[pos].1;
        if dst.len() < coeffs.len() {
            dst.resize(coeffs.len(), Complex64::new(0.0, 0.0));
        }
        for (d, c) in dst.iter_mut().zip(coeffs) {
            *d += c * scale;
        }
    }

    fn prune(&mut self) {
        self.terms.retain(|(_, c)| c.iter().any(|z| *z != Complex64::new(0.0, 0.0)));
    }
}

/// Exact piecewise representation of expressions built from radial functions
/// by sums, scalar multiples, powers of `r` and differentiation.
///
/// Each of the three elements carries its own expression, so one-sided values
/// at the interfaces are available. Elements are `[0, r1]`, `[r1, r2]`, `[r2, r3]`.
#[derive(Debug, Clone, PartialEq)]
pub struct RadialProfile {
    edges: [f64; 4],
    pieces: [Piece; 3],
}

impl RadialProfile {
    pub fn zero(radii: [f64; 3]) -> Self {
        Self {
            edges: [0.0, radii[0], radii[1], radii[2]],
            pieces: Default::default(),
        }
    }

    /// `c r^power` on the whole interval.
    pub fn monomial(radii: [f64; 3], power: i32, c: Complex64) -> Self {
        let mut out = Self::zero(radii);
        for piece in &mut out.pieces {
            piece.insert(power, &[c], Complex64::new(1.0, 0.0));
        }
        out.prune();
        out
    }

    /// Profile from per-element Legendre coefficients (power zero).
    pub fn from_legendre(radii: [f64; 3], per_element: [Vec<Complex64>; 3]) -> Self {
        let mut out = Self::zero(radii);
        for (piece, coeffs) in out.pieces.iter_mut().zip(per_element.iter()) {
            piece.insert(0, coeffs, Complex64::new(1.0, 0.0));
        }
        out.prune();
        out
    }

    pub fn radii(&self) -> [f64; 3] {
        [self.edges[1], self.edges[2], self.edges[3]]
    }

    pub fn is_zero(&self) -> bool {
        self.pieces.iter().all(|p| p.terms.is_empty())
    }

    fn prune(&mut self) {
        self.pieces.iter_mut().for_each(Piece::prune);
    }

    /// Multiply by `r^k`.
    pub fn mul_pow(mut self, k: i32) -> Self {
        for piece in &mut self.pieces {
            piece.terms.iter_mut().for_each(|t| t.0 += k);
        }
        self
    }

    pub fn scale(mut self, c: Complex64) -> Self {
        for piece in &mut self.pieces {
            for (_, coeffs) in &mut piece.terms {
                coeffs.iter_mut().for_each(|z| *z *= c);
            }
        }
        self.prune();
        self
    }

    /// Exact radial derivative.
    pub fn derivative(&self) -> Self {
        let mut out = Self::zero(self.radii());
        for e in 0..3 {
            let jac = 2.0 / (self.edges[e + 1] - self.edges[e]);
            let dst = &mut out.pieces[e];
            for (p, q) in &self.pieces[e].terms {
                if *p != 0 {
                    dst.insert(p - 1, q, Complex64::new(*p as f64, 0.0));
                }
                let dq = legendre_series_derivative(q);
                dst.insert(*p, &dq, Complex64::new(jac, 0.0));
            }
        }
        out.prune();
        out
    }

    /// Element containing `r`; interfaces belong to the inner element.
    pub fn element_of(&self, r: f64) -> Result<usize> {
        if !(0.0..=self.edges[3]).contains(&r) {
            return Err(DynamoError::RadiusOutOfDomain {
                radius: r,
                outer: self.edges[3],
            });
        }
        Ok(if r <= self.edges[1] {
            0
        } else if r <= self.edges[2] {
            1
        } else {
            2
        })
    }

    pub fn eval(&self, r: f64) -> Result<Complex64> {
        let e = self.element_of(r)?;
        self.eval_in(e, r)
    }

    /// Value of element `e`'s expression at `r`, which may be an endpoint of `e`.
    pub fn eval_in(&self, e: usize, r: f64) -> Result<Complex64> {
        let (a, b) = (self.edges[e], self.edges[e + 1]);
        if e > 2 || r < a - 1e-14 * b || r > b * (1.0 + 1e-14) {
            return Err(DynamoError::RadiusOutOfDomain {
                radius: r,
                outer: self.edges[3],
            });
        }
        let x = (2.0 * (r - a) / (b - a) - 1.0).clamp(-1.0, 1.0);
        let mut acc = Complex64::new(0.0, 0.0);
        for (p, q) in &self.pieces[e].terms {
            let v = legendre_series_eval(q, x);
            if *p < 0 && r == 0.0 {
                if v != Complex64::new(0.0, 0.0) {
                    return Err(DynamoError::SingularOrigin);
                }
                continue;
            }
            acc += v * r.powi(*p);
        }
        Ok(acc)
    }

    fn combine(mut self, other: &Self, sign: f64) -> Self {
        debug_assert_eq!(self.edges, other.edges, "profiles on different meshes");
        for (dst, src) in self.pieces.iter_mut().zip(&other.pieces) {
            for (p, q) in &src.terms {
                dst.insert(*p, q, Complex64::new(sign, 0.0));
            }
        }
        self.prune();
        self
    }
}

impl Add for RadialProfile {
    type Output = Self;
    fn add(self, rhs: Self) -> Self {
        self.combine(&rhs, 1.0)
    }
}

impl Sub for RadialProfile {
    type Output = Self;
    fn sub(self, rhs: Self) -> Self {
        self.combine(&rhs, -1.0)
    }
}

impl Neg for RadialProfile {
    type Output = Self;
    fn neg(self) -> Self {
        self.scale(Complex64::new(-1.0, 0.0))
    }
}

impl Mul<f64> for RadialProfile {
    type Output = Self;
    fn mul(self, rhs: f64) -> Self {
        self.scale(Complex64::new(rhs, 0.0))
    }
}

impl Mul<Complex64> for RadialProfile {
    type Output = Self;
    fn mul(self, rhs: Complex64) -> Self {
        self.scale(rhs)
    }
}
