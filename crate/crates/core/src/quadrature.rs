//! One-dimensional Legendre polynomials and Gauss-type quadrature rules on [-1, 1].

use std::f64::consts::PI;

/// Values of the Legendre polynomials `L_0..=L_n` and their first `order`
/// derivatives at `x`. Entry `[d][k]` holds the `d`-th derivative of `L_k`.
pub fn legendre_derivatives(n: usize, order: usize, x: f64) -> Vec<Vec<f64>> {
    let mut out = vec![vec![0.0; n + 1]; order + 1];
    out[0][0] = 1.0;
    if n >= 1 {
        out[0][1] = x;
    }
    for k in 1..n {
        let kf = k as f64;
        out[0][k + 1] = ((2.0 * kf + 1.0) * x * out[0][k] - kf * out[0][k - 1]) / (kf + 1.0);
    }
    // L^{(d)}_{k+1} = L^{(d)}_{k-1} + (2k+1) L^{(d-1)}_k
    for d in 1..=order {
        for k in 0..n {
            let lower = if k >= 1 { out[d][k - 1] } else { 0.0 };
            out[d][k + 1] = lower + (2.0 * k as f64 + 1.0) * out[d - 1][k];
        }
    }
    out
}

/// Legendre polynomial `L_n(x)` and its derivative.
pub fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let table = legendre_derivatives(n, 1, x);
    (table[0][n], table[1][n])
}

/// Gauss-Legendre rule with `n` points, exact for polynomials of degree `2n - 1`.
/// Nodes are returned in increasing order.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1, "Gauss-Legendre rule needs at least one point");
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        // Chebyshev-like initial guess for the i-th largest root
        let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        for _ in 0..100 {
            let (p, dp) = legendre_with_derivative(n, x);
            let dx = p / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, dp) = legendre_with_derivative(n, x);
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    if n % 2 == 1 {
        nodes[n / 2] = 0.0;
    }
    (nodes, weights)
}

/// Legendre-Gauss-Lobatto rule with `n + 1` points (the endpoints and the
/// roots of `L_n'`), exact for polynomials of degree `2n - 1`.
pub fn gauss_lobatto(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1, "Lobatto rule needs n >= 1");
    let np = n + 1;
    let mut nodes = vec![0.0; np];
    let mut weights = vec![0.0; np];
    let nf = n as f64;
    let w_end = 2.0 / (nf * (nf + 1.0));
    nodes[0] = -1.0;
    nodes[n] = 1.0;
    weights[0] = w_end;
    weights[n] = w_end;
    for i in 1..np.div_ceil(2) {
        if i >= n {
            break;
        }
        // interior roots of L_n' ; Newton on q(x) = L_n'(x) with q' from the ODE
        let mut x = -(PI * i as f64 / nf).cos();
        for _ in 0..100 {
            let t = legendre_derivatives(n, 2, x);
            let dx = t[1][n] / t[2][n];
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (p, _) = legendre_with_derivative(n, x);
        let w = 2.0 / (nf * (nf + 1.0) * p * p);
        nodes[i] = x;
        nodes[n - i] = -x;
        weights[i] = w;
        weights[n - i] = w;
    }
    if n.is_multiple_of(2) {
        nodes[n / 2] = 0.0;
        let (p, _) = legendre_with_derivative(n, 0.0);
        weights[n / 2] = 2.0 / (nf * (nf + 1.0) * p * p);
    }
    (nodes, weights)
}

/// Legendre coefficients of the derivative of a Legendre series on [-1, 1].
pub fn legendre_series_derivative<T>(coeffs: &[T]) -> Vec<T>
where
    T: Copy + Default + std::ops::Add<Output = T> + std::ops::Mul<f64, Output = T>,
{
    let n = coeffs.len();
    if n <= 1 {
        return vec![T::default(); 1];
    }
    let mut out = vec![T::default(); n - 1];
    // c'_{k-1} = (2k-1) * sum_{j >= k, j-k even} c_j, accumulated from the top
    let mut acc_even = T::default();
    let mut acc_odd = T::default();
    for j in (1..n).rev() {
        if (n - 1 - j).is_multiple_of(2) {
            acc_even = acc_even + coeffs[j];
            out[j - 1] = acc_even * (2.0 * (j - 1) as f64 + 1.0);
        } else {
            acc_odd = acc_odd + coeffs[j];
            out[j - 1] = acc_odd * (2.0 * (j - 1) as f64 + 1.0);
        }
    }
    out
}

/// Evaluates a Legendre series at `x`.
pub fn legendre_series_eval<T>(coeffs: &[T], x: f64) -> T
where
    T: Copy + Default + std::ops::Add<Output = T> + std::ops::Mul<f64, Output = T>,
{
    let vals = legendre_derivatives(coeffs.len().saturating_sub(1), 0, x);
    coeffs
        .iter()
        .zip(&vals[0])
        .fold(T::default(), |acc, (&c, &l)| acc + c * l)
}
