use affine_trace::constants::derive_params;
use affine_trace::inequalities::Resolution;
use affine_trace::search::*;

fn quick(kind: QuotientKind, family: FamilyKind, seed: u64) -> SearchResult {
    let prm = derive_params(3, 0.5).unwrap();
    let mut spec = SearchSpec::new(kind, family, &prm, 60, seed);
    let res = Resolution { grid: 32, tnodes: 24, sphere_nodes: 128, ..Resolution::default() };
    spec.resolution = res;
    spec.refine = Resolution { grid: 64, tnodes: 32, ..res };
    optimize_quotient(&spec, &prm).unwrap()
}

#[test]
fn search_is_reproducible_for_a_seed() {
    let a = quick(QuotientKind::Poisson, FamilyKind::Gaussian, 3);
    let b = quick(QuotientKind::Poisson, FamilyKind::Gaussian, 3);
    assert_eq!(a, b);
    assert!(a.trace.len() <= 60);
    assert!(a.margin() > 0.0);
    assert!(a.refined.check.starts_with("search-poisson-gaussian"));
}

#[test]
fn best_so_far_never_exceeds_the_reported_best() {
    let r = quick(QuotientKind::Poisson, FamilyKind::BandLimitedSeeded, 11);
    let last = r.trace.last().unwrap().best_so_far;
    assert_eq!(last, r.best_quotient);
    for e in &r.trace {
        assert!(e.best_so_far <= r.best_quotient);
        let bounds = FamilyKind::BandLimitedSeeded.bounds();
        for (x, (lo, hi)) in e.params.iter().zip(&bounds) {
            assert!(x >= lo && x <= hi);
        }
    }
}

#[test]
fn sharpness_report_keeps_the_best_per_kind() {
    let a = quick(QuotientKind::Poisson, FamilyKind::Gaussian, 1);
    let b = quick(QuotientKind::Poisson, FamilyKind::Bubble, 1);
    let report = sharpness_report(&[a.clone(), b.clone()]);
    assert_eq!(report.entries.len(), 1);
    let best = a.refined.quotient.max(b.refined.quotient);
    assert_eq!(report.entries[0].best_quotient, best);
    assert!(report.alarms.is_empty());
}

#[test]
fn spec_validation() {
    let prm = derive_params(3, 0.5).unwrap();
    let mut spec = SearchSpec::new(QuotientKind::Haddad, FamilyKind::HaddadExtremal, &prm, 300, 7);
    assert!(spec.validate().is_ok());
    assert_eq!(spec.restarts, 5);
    spec.budget = 10;
    assert!(spec.validate().is_err());
    spec.budget = 300;
    spec.init.pop();
    assert!(spec.validate().is_err());
}
