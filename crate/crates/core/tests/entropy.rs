use liblab_core::entropy::{chi_orb, fisher_info, i_star, verify_identity};
use liblab_core::loewner::{evolve, CharacteristicField};
use liblab_core::measures::{CircleMeasure, TraceParams};
use liblab_core::transforms::{hardy_norm_diag, HerglotzField};

const N: usize = 4096;

#[test]
fn minus_chi_decreases_along_the_flow() {
    let p = TraceParams::half();
    let mu = CircleMeasure::raised_cosine(N).unwrap();
    let mut last = f64::INFINITY;
    for t in [0.0, 0.5, 1.0, 2.0, 4.0, 8.0] {
        let m = evolve(&mu, &p, t).unwrap().measure;
        let v = -chi_orb(&m, &p, true).unwrap();
        assert!(v <= last + 1e-9, "t={t}: {v} > {last}");
        last = v;
    }
    assert!(last < 1e-3);
}

#[test]
fn chi_dissipates_at_half_the_fisher_rate() {
    let p = TraceParams::half();
    let mu = CircleMeasure::raised_cosine(N).unwrap();
    let (t, h) = (0.5, 1e-2);
    let chi = |s: f64| chi_orb(&evolve(&mu, &p, s).unwrap().measure, &p, true).unwrap();
    let rate = -(chi(t + h) - chi(t - h)) / (2.0 * h);
    let phi = fisher_info(&evolve(&mu, &p, t).unwrap().measure, &p).unwrap();
    assert!((rate + 0.5 * phi).abs() < 0.05 * 0.5 * phi, "{rate} vs {}", -0.5 * phi);
}

#[test]
fn free_pair_has_zero_entropy_and_information() {
    let p = TraceParams::half();
    let r = verify_identity(&CircleMeasure::haar_half(N).unwrap(), &p, 10.0, 1e-8, 1e-6).unwrap();
    assert!(r.i_star.abs() < 1e-6 && r.chi_orb.abs() < 1e-6);
    assert_eq!(r.holds, Some(true));
}

#[test]
fn identity_for_the_raised_cosine() {
    let p = TraceParams::half();
    let r = verify_identity(&CircleMeasure::raised_cosine(N).unwrap(), &p, 20.0, 1e-7, 2e-3).unwrap();
    assert!((r.chi_orb + 0.125).abs() < 1e-5, "{}", r.chi_orb);
    assert!(r.gap.unwrap() < 2e-3);
    assert_eq!(r.holds, Some(true));
}

#[test]
fn equal_projections_are_infinitely_far_from_free() {
    let p = TraceParams::half();
    let r = verify_identity(&CircleMeasure::delta_zero(&p, N).unwrap(), &p, 10.0, 1e-6, 1e-3).unwrap();
    assert!(r.both_infinite);
    assert_eq!(r.i_star, f64::INFINITY);
    assert_eq!(r.chi_orb, f64::NEG_INFINITY);
}

#[test]
fn general_traces_report_without_a_verdict() {
    let p = TraceParams::new(0.5, 0.6).unwrap();
    let free = CircleMeasure::free_projections(&p, N).unwrap();
    assert!(chi_orb(&free, &p, true).unwrap().abs() < 1e-6);
    let free = CircleMeasure::free_projections(&p, 1024).unwrap();
    let is = i_star(&free, &p, 1.0, 1e-6).unwrap();
    assert!(is.value.abs() < 1e-4, "{}", is.value);
}

#[test]
fn hardy_norms_stabilize_for_general_traces() {
    let p = TraceParams::new(0.5, 0.6).unwrap();
    let mu = CircleMeasure::bump(&p, 0.2, 0.8, 1024).unwrap();
    let l0 = HerglotzField::new(mu, p);
    let field = CharacteristicField::new(&l0, 1.0).unwrap();
    let s = hardy_norm_diag(&field, 1024).unwrap();
    assert_eq!(s.len(), 3);
    let (a, b) = (s[1].norm, s[2].norm);
    assert!((a - b).abs() < 0.01 * b, "{s:?}");
}
