use affine_trace::constants::{hls_constant, kappa};
use affine_trace::inequalities::{hls_bubble, ExtremalParams};
use affine_trace::oracle::*;
use affine_trace::sampling::{make_grid, sample};
use affine_trace::spectral::{duality_pairing, sobolev_norm};

#[test]
fn double_integral_is_hermitian_and_matches_the_spectral_pairing() {
    let grid = make_grid::<f64>(2, 4.0, 32).unwrap();
    let f = sample(|x: &[f64]| (-3.0 * (x[0] * x[0] + x[1] * x[1])).exp(), &grid).unwrap();
    let g = sample(|x: &[f64]| (-2.0 * ((x[0] - 0.5).powi(2) + x[1] * x[1])).exp(), &grid).unwrap();
    let alpha = 0.5;
    let fg = double_integral(&f, &g, alpha).unwrap();
    let gf = double_integral(&g, &f, alpha).unwrap();
    assert!((fg - gf.conj()).norm() < 1e-12 * fg.norm());
    let spectral = duality_pairing(&f, &g, alpha).unwrap() * kappa(2, alpha).unwrap();
    assert!((fg - spectral).norm() < 2e-2 * fg.norm(), "{fg} vs {spectral}");
    let self_pair = double_integral(&f, &f, alpha).unwrap().re / kappa(2, alpha).unwrap();
    let norm = sobolev_norm(&f, -alpha).unwrap().powi(2);
    assert!((self_pair - norm).abs() < 2e-2 * norm);
}

#[test]
fn hls_energy_of_the_bubble_reaches_the_constant() {
    for (d, alpha) in [(2, 0.5), (2, 0.75)] {
        let f = hls_bubble(&ExtremalParams::identity(), d, alpha);
        let e = hls_energy(f, &[0.0; 3][..d], d, alpha, HlsOracle::default()).unwrap();
        let r = 2.0 * d as f64 / (d as f64 + 2.0 * alpha);
        let ratio = e.pairing / e.lr_integral.powf(2.0 / r) / hls_constant(d, alpha).unwrap();
        assert!((ratio - 1.0).abs() < 2e-3, "d {d}, alpha {alpha}: {ratio}");
    }
}

#[test]
fn hls_energy_rejects_bad_input() {
    let f = |_: &[f64]| 1.0;
    assert!(hls_energy(f, &[0.0], 1, 0.25, HlsOracle::default()).is_err());
    assert!(hls_energy(f, &[0.0, 0.0], 2, 1.0, HlsOracle::default()).is_err());
    assert!(hls_energy(f, &[0.0, 0.0, 0.0], 2, 0.5, HlsOracle::default()).is_err());
}

#[test]
fn reference_gamma_agrees_with_known_values() {
    assert!((gamma_reference(0.5).unwrap() - std::f64::consts::PI.sqrt()).abs() < 1e-14);
    assert!((gamma_reference(5.0).unwrap() - 24.0).abs() < 1e-12);
    assert!((ln_gamma_reference(10.0).unwrap() - 362880f64.ln()).abs() < 1e-12);
}
