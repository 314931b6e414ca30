//! Projection of the initial field and the diagnostics computed from a state.

use std::f64::consts::PI;

use dynamo_core::diagnostics::{
    butterfly_record, divergence_residual, grid_energy, magnetic_energy, meridional_slice, write_slice,
};
use dynamo_core::profiles::solar_initial_field;
use dynamo_core::radial::{RadialBasis, RadialProfile};
use dynamo_core::snapshot::{read_snapshot, write_snapshot};
use dynamo_core::solenoidal::{project_field, project_solenoidal, SolenoidalState};
use dynamo_core::sph::{build_grid, lm_index, lm_pairs};
use dynamo_core::vsh::{vsh_eval, ComponentCoefficients, VectorTransform};
use num_complex::Complex64;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const RADII: [f64; 3] = [1.5, 2.5, 7.5];

fn transform(max_degree: usize) -> VectorTransform {
    let n = 2 * max_degree + 2;
    VectorTransform::new(&build_grid(n, n, max_degree).unwrap(), max_degree).unwrap()
}

fn random_state(max_degree: usize, n: usize, seed: u64, keep: impl Fn(usize, usize, bool) -> bool) -> SolenoidalState {
    let basis = RadialBasis::new(n, RADII).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut s = SolenoidalState::zeros(max_degree, &basis);
    let origin = basis.vertex_index(0);
    for (l, m) in lm_pairs(max_degree) {
        if l == 0 {
            continue;
        }
        let k = lm_index(l, m);
        for (toroidal, f) in [(true, &mut s.t[k]), (false, &mut s.a[k])] {
            if !keep(l, m, toroidal) {
                continue;
            }
            for (j, c) in f.coeffs.iter_mut().enumerate() {
                if j == origin {
                    continue;
                }
                let im = if m == 0 { 0.0 } else { rng.gen_range(-1.0..1.0) };
                *c = Complex64::new(rng.gen_range(-1.0..1.0), im);
            }
        }
    }
    s
}

/// `(B_r, B_theta, B_phi)` at one point straight from the harmonics.
fn eval_point(x: &ComponentCoefficients<RadialProfile>, r: f64, theta: f64, phi: f64) -> [f64; 3] {
    let mut out = [0.0; 3];
    for (l, m) in lm_pairs(x.max_degree) {
        let k = lm_index(l, m);
        let h = vsh_eval(l, m as i64, theta, phi).unwrap();
        let lf = l as f64;
        let (t, s, rc) = (x.t[k].eval(r).unwrap(), x.s[k].eval(r).unwrap(), x.r[k].eval(r).unwrap());
        let mult = if m == 0 { 1.0 } else { 2.0 };
        for c in 0..3 {
            let y_er = (h.v[c] + h.w[c]) / (2.0 * lf + 1.0);
            let grad = h.w[c] - y_er * lf;
            out[c] += mult * (t * h.t[c] + s * grad + rc * y_er).re;
        }
    }
    out
}

#[test]
fn initial_field_projects_onto_two_modes() {
    let mm = 6;
    let basis = RadialBasis::new(12, RADII).unwrap();
    let s = project_field(solar_initial_field(2.5), &basis, &transform(mm)).unwrap();
    let (k_a, k_t) = (lm_index(1, 0), lm_index(2, 0));
    let max = s.max_abs_coefficient();
    for (l, m) in lm_pairs(mm) {
        let k = lm_index(l, m);
        if k != k_t {
            assert!(s.t[k].coeffs.iter().all(|c| c.norm() < 1e-10 * max), "t({l},{m})");
        }
        if k != k_a {
            assert!(s.a[k].coeffs.iter().all(|c| c.norm() < 1e-10 * max), "A({l},{m})");
        }
    }
    let shape = |r: f64| if r < 2.5 { r * r * (r - 2.5).powi(2) / 6.25 } else { 0.0 };
    for r in [0.2, 1.0, 1.7, 2.2, 2.5, 3.0, 7.0] {
        let a = s.a[k_a].eval(&basis, r).unwrap();
        let t = s.t[k_t].eval(&basis, r).unwrap();
        assert!((a.re - (4.0 * PI / 3.0).sqrt() * shape(r)).abs() < 1e-12, "A at {r}");
        assert!((t.re - (4.0 * PI / 5.0).sqrt() * shape(r)).abs() < 1e-12, "t at {r}");
        assert!(a.im.abs() < 1e-14 && t.im.abs() < 1e-14);
    }
}

#[test]
fn projected_initial_field_is_divergence_free_on_the_grid() {
    let mm = 6;
    let tr = transform(mm);
    let basis = RadialBasis::new(12, RADII).unwrap();
    let s = project_field(solar_initial_field(2.5), &basis, &tr).unwrap();
    assert!(divergence_residual(&s, &tr).unwrap().relative() < 1e-9);
}

#[test]
fn initial_field_reconstructs_the_prescribed_formula() {
    let mm = 4;
    let basis = RadialBasis::new(12, RADII).unwrap();
    let s = project_field(solar_initial_field(2.5), &basis, &transform(mm)).unwrap();
    let b0 = solar_initial_field(2.5);
    let x = s.to_components();
    for (r, th, ph) in [(0.7, 0.4, 1.0), (1.9, 2.0, 4.0), (2.4, 1.2, 0.1), (5.0, 0.8, 2.0)] {
        let got = eval_point(&x, r, th, ph);
        let want = b0(r, th, ph);
        for c in 0..3 {
            assert!((got[c] - want[c]).abs() < 1e-11, "{r} {th} {c}: {got:?} vs {want:?}");
        }
    }
}

#[test]
fn zero_state_diagnostics_vanish() {
    let basis = RadialBasis::new(6, RADII).unwrap();
    let s = SolenoidalState::zeros(3, &basis);
    assert_eq!(magnetic_energy(&s), 0.0);
    let slice = meridional_slice(&s, 0.3, 5, 7).unwrap();
    assert!(slice.values.iter().flatten().all(|v| *v == 0.0));
    assert!(butterfly_record(&s, 1.875, 0.0, 9).unwrap().iter().all(|v| *v == 0.0));
}

#[test]
fn single_toroidal_mode_energy_factorizes() {
    let basis = RadialBasis::new(8, RADII).unwrap();
    let mut s = SolenoidalState::zeros(2, &basis);
    s.t[lm_index(1, 0)] = basis.interpolate(|r| Complex64::new(r * r, 0.0));
    let want = 2.0 * 7.5f64.powi(7) / 7.0;
    assert!((magnetic_energy(&s) - want).abs() < 1e-10 * want);
    let g = grid_energy(&s, &transform(2)).unwrap();
    assert!((g - want).abs() < 1e-10 * want);
}

#[test]
fn slice_matches_pointwise_evaluation() {
    let s = random_state(4, 6, 5, |_, _, _| true);
    let x = s.to_components();
    let slice = meridional_slice(&s, 1.1, 7, 9).unwrap();
    for (i, &r) in slice.radii.iter().enumerate() {
        for (j, &th) in slice.thetas.iter().enumerate() {
            let want = eval_point(&x, r, th, 1.1)[2];
            assert!((slice.values[i][j] - want).abs() < 1e-12 * (1.0 + want.abs()));
        }
    }
}

#[test]
fn axisymmetric_slice_is_independent_of_longitude() {
    let s = random_state(4, 6, 6, |_, m, _| m == 0);
    let a = meridional_slice(&s, 0.0, 6, 8).unwrap();
    let b = meridional_slice(&s, 2.5, 6, 8).unwrap();
    for (ra, rb) in a.values.iter().zip(&b.values) {
        for (x, y) in ra.iter().zip(rb) {
            assert!((x - y).abs() < 1e-12 * (1.0 + x.abs()));
        }
    }
}

#[test]
fn butterfly_matches_slice_row() {
    let s = random_state(4, 6, 7, |_, _, _| true);
    let slice = meridional_slice(&s, 0.0, 10, 12).unwrap();
    let row = 3;
    let b = butterfly_record(&s, slice.radii[row], 0.0, 12).unwrap();
    for (x, y) in b.iter().zip(&slice.values[row]) {
        assert!((x - y).abs() < 1e-12 * (1.0 + y.abs()));
    }
}

#[test]
fn equator_antisymmetric_state_gives_antisymmetric_butterfly() {
    let s = random_state(5, 6, 8, |l, m, toroidal| ((l + m) % 2 == 0) == toroidal);
    let b = butterfly_record(&s, 1.875, 0.7, 16).unwrap();
    let scale = b.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    assert!(scale > 0.0);
    for j in 0..8 {
        assert!((b[j] + b[15 - j]).abs() < 1e-12 * scale);
    }
}

#[test]
fn snapshot_pads_to_larger_degree() {
    let s = random_state(8, 5, 9, |_, _, _| true);
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("snapshot_8.bin");
    write_snapshot(&path, &s, 8).unwrap();
    let snap = read_snapshot(&path, Some(12)).unwrap();
    assert_eq!(snap.step, 8);
    let p = snap.state;
    assert_eq!(p.max_degree, 12);
    for (l, m) in lm_pairs(12) {
        let k = lm_index(l, m);
        if l <= 8 {
            assert_eq!(p.t[k], s.t[k]);
            assert_eq!(p.a[k], s.a[k]);
        } else {
            assert!(p.t[k].is_zero() && p.a[k].is_zero());
        }
    }
    assert_eq!(magnetic_energy(&p), magnetic_energy(&s));
}

#[test]
fn slice_output_is_deterministic() {
    let s = random_state(3, 5, 10, |_, _, _| true);
    let render = || {
        let mut buf = Vec::new();
        write_slice(&mut buf, &meridional_slice(&s, 0.0, 8, 8).unwrap()).unwrap();
        buf
    };
    assert_eq!(render(), render());
}

#[test]
fn projection_of_components_matches_field_projection() {
    let basis = RadialBasis::new(10, RADII).unwrap();
    let tr = transform(4);
    let from_field = project_field(solar_initial_field(2.5), &basis, &tr).unwrap();
    let again = project_solenoidal(&from_field.to_components(), &basis).unwrap();
    assert!(again.max_abs_diff(&from_field) < 1e-12);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn energy_routes_agree(seed in any::<u64>(), mm in 1usize..6, n in 3usize..9) {
        let s = random_state(mm, n, seed, |_, _, _| true);
        let e = magnetic_energy(&s);
        let g = grid_energy(&s, &transform(mm)).unwrap();
        prop_assert!((e - g).abs() < 1e-9 * e);
    }

    #[test]
    fn energy_is_invariant_under_rotation(seed in any::<u64>(), phi0 in 0.0f64..(2.0 * PI)) {
        let s = random_state(4, 5, seed, |_, _, _| true);
        let e = magnetic_energy(&s);
        prop_assert!((magnetic_energy(&s.rotated(phi0)) - e).abs() < 1e-12 * e);
    }

    #[test]
    fn random_solenoidal_states_are_divergence_free(seed in any::<u64>()) {
        let s = random_state(4, 6, seed, |_, _, _| true);
        prop_assert!(divergence_residual(&s, &transform(4)).unwrap().relative() < 1e-9);
    }
}
