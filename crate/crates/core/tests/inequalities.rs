use affine_trace::constants::{derive_params, frac_sobolev_constant};
use affine_trace::inequalities::*;
use affine_trace::sampling::sample;
use proptest::prelude::*;

fn small() -> Resolution {
    Resolution { grid: 64, tnodes: 32, sphere_nodes: 256, ..Resolution::default() }
}

fn gaussian(res: &Resolution, d: usize, shift: f64) -> affine_trace::Field {
    let grid = res.make_grid(d).unwrap();
    sample(move |x: &[f64]| (-std::f64::consts::PI * ((x[0] - shift).powi(2) + 0.5 * x[1] * x[1])).exp(), &grid).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 8, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn poisson_quotient_is_scale_invariant(c in prop_oneof![-40.0f64..-0.05, 0.05f64..40.0]) {
        let prm = derive_params(3, 0.5).unwrap();
        let res = small();
        let g = gaussian(&res, 2, 0.0);
        let q = trace_quotient_poisson(&g, &prm, &res).unwrap().quotient;
        let qc = trace_quotient_poisson(&g.scaled(c), &prm, &res).unwrap().quotient;
        prop_assert!(((qc - q) / q).abs() < 1e-8, "{qc} vs {q}");
    }

    #[test]
    fn fracsob_quotient_is_scale_invariant(c in 0.01f64..100.0) {
        let grid = small().make_grid(2).unwrap();
        let f = sample(|x: &[f64]| (-(x[0] * x[0] + 2.0 * x[1] * x[1])).exp(), &grid).unwrap();
        let q = frac_sobolev_quotient_of(&f, 0.5).unwrap().quotient;
        let qc = frac_sobolev_quotient_of(&f.scaled(c), 0.5).unwrap().quotient;
        prop_assert!(((qc - q) / q).abs() < 1e-10);
    }
}

#[test]
fn poisson_quotient_is_translation_invariant() {
    let prm = derive_params(3, 0.5).unwrap();
    let res = small();
    let a = trace_quotient_poisson(&gaussian(&res, 2, 0.0), &prm, &res).unwrap();
    let b = trace_quotient_poisson(&gaussian(&res, 2, 1.5), &prm, &res).unwrap();
    assert!((a.quotient - b.quotient).abs() < 1e-6 * a.quotient, "{} vs {}", a.quotient, b.quotient);
    assert!(a.margin > 0.0);
}

#[test]
fn haddad_quotient_ignores_amplitude_and_scale() {
    let prm = derive_params(3, 0.5).unwrap();
    let res = Resolution::default();
    let rule = res.sphere_rule(2).unwrap();
    let quotient = |ep: &ExtremalParams<f64>| {
        haddad_quotient(&power_family_stack(&prm, ep, prm.p_prime, prm.q, &res).unwrap(), &prm, &rule).unwrap().ratio()
    };
    let base = quotient(&ExtremalParams::identity());
    let mut ep = ExtremalParams::identity();
    ep.c = -3.0;
    assert!((quotient(&ep) - base).abs() < 1e-12);
    // The narrower member is less resolved on the same grid.
    ep.gamma = 1.3;
    ep.b[0][0] = 1.3;
    ep.b[1][1] = 1.3;
    assert!((quotient(&ep) - base).abs() < 5e-3);
}

#[test]
fn radial_fracsob_reaches_the_constant_in_three_dimensions() {
    for alpha in [0.5, 0.9] {
        let rep = frac_sobolev_radial(1.0, 1.0, 3, alpha).unwrap();
        assert!((rep.ratio() - 1.0).abs() < 1e-5, "alpha {alpha}: {}", rep.ratio());
        assert!(rep.tail_budget < 1e-4);
        assert_eq!(rep.reference, frac_sobolev_constant(3, alpha).unwrap());
    }
}

#[test]
fn radial_fracsob_rejects_bad_input() {
    assert!(frac_sobolev_radial(1.0, 0.0, 2, 0.5).is_err());
    assert!(frac_sobolev_radial(1.0, 1.0, 2, 1.0).is_err());
    assert!(frac_sobolev_radial(0.0, 1.0, 2, 0.5).is_err());
}

#[test]
fn cutoff_is_a_smooth_step() {
    assert_eq!(cutoff(0.0), 1.0);
    assert_eq!(cutoff(0.5), 1.0);
    assert_eq!(cutoff(1.0), 0.0);
    assert!((cutoff(0.75) - 0.5).abs() < 1e-15);
    let mut last = 1.0;
    for k in 0..=100 {
        let v = cutoff(0.5 + 0.005 * k as f64);
        assert!(v <= last);
        last = v;
    }
}

#[test]
fn corpus_is_seeded() {
    let grid = small().make_grid(2).unwrap();
    let a = corpus(&grid, 0.5, 7).unwrap();
    let b = corpus(&grid, 0.5, 7).unwrap();
    let c = corpus(&grid, 0.5, 8).unwrap();
    assert_eq!(a.len(), 6);
    assert_eq!(a, b);
    assert_eq!(a[..5], c[..5]);
    assert_ne!(a[5], c[5]);
}

#[test]
fn csv_row_has_header_columns() {
    let prm = derive_params(3, 0.5).unwrap();
    let res = small();
    let rep = trace_quotient_poisson(&gaussian(&res, 2, 0.0), &prm, &res).unwrap();
    assert_eq!(rep.csv_row().split(',').count(), CSV_HEADER.split(',').count());
}
