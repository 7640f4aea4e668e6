use std::sync::Arc;

use nalgebra::DMatrix;
use proptest::prelude::*;
use quadcusp::approx::ApproxFunction;
use quadcusp::catalog;
use quadcusp::conepoints::{enumerate_isotropic, enumerate_isotropic_range};
use quadcusp::dioph::predicted_dimension;
use quadcusp::excursion::{sl_depth_identity, SlSlope};
use quadcusp::forms::{find_isotropic_seed, suspend_form, RatSymForm};
use quadcusp::frame::witt_frame;
use quadcusp::rational::{self, rat, ratio, Rat};
use quadcusp::sampling::stream_rng;
use quadcusp::symspace::{distance, random_isometry, random_unimodular};
use quadcusp::ubiquity::{divergence_classifier, PowerDimension, Verdict};
use num_integer::Integer;
use num_traits::Zero;

fn small_form(s: usize) -> impl Strategy<Value = RatSymForm> {
    prop::collection::vec(-4i64..=4, s * s).prop_filter_map("degenerate", move |e| {
        let rows: Vec<Vec<i64>> = (0..s).map(|i| (0..s).map(|j| e[i.min(j) * s + i.max(j)]).collect()).collect();
        RatSymForm::from_i64(&rows).ok().filter(|f| f.is_nondegenerate())
    })
}

fn invertible(s: usize) -> impl Strategy<Value = Vec<Vec<i64>>> {
    prop::collection::vec(-3i64..=3, s * s).prop_filter_map("singular", move |e| {
        let rows: Vec<Vec<i64>> = e.chunks(s).map(|r| r.to_vec()).collect();
        (!rational::det(&rational::from_i64(&rows)).is_zero()).then_some(rows)
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn signature_is_a_congruence_invariant((f, b) in (2usize..=5).prop_flat_map(|s| (small_form(s), invertible(s)))) {
        let g = f.congruent(&rational::from_i64(&b)).unwrap();
        prop_assert_eq!(g.signature(), f.signature());
    }

    #[test]
    fn witt_frames_are_exact((pos, neg, scale) in (1usize..=3, 1usize..=2, prop::collection::vec(1i64..=3, 5))) {
        let diag: Vec<Rat> = (0..pos).map(|i| rat(scale[i])).chain((0..neg).map(|i| -rat(scale[pos + i]))).collect();
        let l = RatSymForm::diagonal(&diag);
        if let Some(v0) = find_isotropic_seed(&l, 12).unwrap() {
            prop_assert!(l.eval_int(v0.coords()).unwrap().is_zero());
            prop_assert_eq!(v0.coords().iter().fold(0i64, |g, &c| g.gcd(&c)), 1);
            let frame = witt_frame(&l, &v0).unwrap();
            match frame.basis_exact() {
                Some(pi) => prop_assert_eq!(&l.congruent(pi).unwrap(), frame.normal_form()),
                None => prop_assert!(frame.congruence_residual() < 1e-10),
            }
        }
    }

    #[test]
    fn suspension_detects_the_quadric(f in (1usize..=3).prop_flat_map(small_form), x in prop::collection::vec((-5i64..=5, 1i64..=4), 3)) {
        let n = f.dim();
        let l = suspend_form(&f).unwrap();
        let mut y: Vec<Rat> = x[..n].iter().map(|&(p, q)| ratio(p, q)).collect();
        let qx = f.eval(&y).unwrap();
        y.push(rat(1));
        prop_assert_eq!(l.eval(&y).unwrap(), rat(1) - qx);
    }

    #[test]
    fn distance_is_isometry_invariant(seed in any::<u64>(), s in 2usize..=5) {
        let mut rng = stream_rng(seed, 0);
        let q1 = random_unimodular(s, 0.7, &mut rng);
        let q2 = random_unimodular(s, 0.7, &mut rng);
        let b = random_isometry(&DMatrix::identity(s, s), 0.5, &mut rng);
        let d = distance(&q1, &q2).unwrap();
        let e = distance(&q1.act(&b).unwrap(), &q2.act(&b).unwrap()).unwrap();
        prop_assert!((d - e).abs() < 1e-9 * (1.0 + d));
    }

    #[test]
    fn sl_identity_holds(x in prop::collection::vec(-2.0f64..2.0, 1..=4), p in prop::collection::vec(-30i64..=30, 4), q in -30i64..=30, t in -5.0f64..5.0) {
        let p = &p[..x.len()];
        prop_assume!(q != 0 || p.iter().any(|&v| v != 0));
        for slope in [SlSlope::One, SlSlope::N] {
            let id = sl_depth_identity(&x, p, q, t, slope).unwrap();
            prop_assert!((id.closed_form - id.matrix_form).abs() < 1e-9 * (1.0 + id.closed_form.abs()));
        }
    }

    #[test]
    fn verdict_depends_only_on_exponents(a in 3i64..=8, s_num in 1i64..=12, c1 in 0.01f64..100.0, c2 in 0.01f64..100.0) {
        let alpha = ratio(a, 2);
        let s = PowerDimension { s: ratio(s_num, 6) };
        let psi = ApproxFunction::power_full(1.0, alpha.clone(), 0.0).unwrap().to_weight_side().unwrap();
        let psi_scaled = ApproxFunction::power_full(c1, alpha.clone(), 0.0).unwrap().to_weight_side().unwrap();
        let rho = ApproxFunction::exp(1.0, rat(1)).unwrap();
        let rho_scaled = ApproxFunction::exp(c2, rat(1)).unwrap();
        let t = 2.0 * std::f64::consts::SQRT_2 * 2f64.ln();
        let base = divergence_classifier(&s, &psi, &rho, 1, t);
        let scaled = divergence_classifier(&s, &psi_scaled, &rho_scaled, 1, t);
        match (base, scaled) {
            (Ok(b), Ok(c)) => prop_assert_eq!(b.verdict, c.verdict),
            (Err(_), Err(_)) => {}
            _ => prop_assert!(false, "rescaling changed applicability"),
        }
        prop_assert_eq!(predicted_dimension(&ApproxFunction::power_full(c1, alpha.clone(), 0.0).unwrap(), 2).unwrap(),
            predicted_dimension(&ApproxFunction::power_full(1.0, alpha, 0.0).unwrap(), 2).unwrap());
    }

    #[test]
    fn larger_psi_keeps_infinite_measure(a1 in 1i64..=8, a2 in 1i64..=8, s_num in 1i64..=12) {
        // Smaller alpha means a larger approximation function eventually.
        let (small, large) = (a1.max(a2), a1.min(a2));
        let s = PowerDimension { s: ratio(s_num, 12) };
        let rho = ApproxFunction::exp(1.0, rat(1)).unwrap();
        let t = 1.0;
        let verdict = |a: i64| divergence_classifier(&s, &ApproxFunction::power(ratio(a, 4)).unwrap().to_weight_side().unwrap(), &rho, 1, t);
        if let Ok(c) = verdict(small) {
            if c.verdict == Verdict::MeasureInfinite {
                prop_assert_eq!(verdict(large).unwrap().verdict, Verdict::MeasureInfinite);
            }
        }
    }
}

fn normalized_images(points: &[Vec<i64>], perm: &[usize], signs: &[i64]) -> Vec<Vec<i64>> {
    let mut out: Vec<Vec<i64>> = points
        .iter()
        .map(|p| {
            let mut v: Vec<i64> = perm.iter().zip(signs).map(|(&k, &s)| s * p[k]).collect();
            v.push(p[p.len() - 1]);
            v
        })
        .collect();
    out.sort();
    out
}

#[test]
fn sphere_enumeration_is_closed_under_symmetries() {
    let l = catalog::sphere();
    let mut pts: Vec<Vec<i64>> = enumerate_isotropic(&l, 60, None).unwrap().iter().map(|v| v.coords().to_vec()).collect();
    pts.sort();
    for perm in [[0, 1, 2], [1, 0, 2], [2, 0, 1], [0, 2, 1]] {
        for signs in [[1, 1, 1], [-1, 1, 1], [1, -1, -1], [-1, -1, -1]] {
            assert_eq!(normalized_images(&pts, &perm, &signs), pts);
        }
    }
}

#[test]
fn enumeration_partitions_and_prefixes() {
    for l in [catalog::circle(), catalog::sphere()] {
        let full = enumerate_isotropic(&l, 90, None).unwrap();
        let mut parts = Vec::new();
        for (lo, hi) in [(1, 17), (18, 40), (41, 41), (42, 90)] {
            parts.extend(enumerate_isotropic_range(&l, lo, hi, None).unwrap());
        }
        assert_eq!(parts, full);
        let prefix = enumerate_isotropic(&l, 45, None).unwrap();
        assert_eq!(&full[..prefix.len()], &prefix[..]);
        assert!(full[prefix.len()..].iter().all(|v| v.last() > 45));
        for v in &full {
            assert!(l.eval_int(v.coords()).unwrap().is_zero());
        }
    }
}

#[test]
fn indefinite_enumeration_matches_pool_prefix() {
    let l = suspend_form(&RatSymForm::diagonal(&[rat(1), rat(-1)])).unwrap();
    let v0 = find_isotropic_seed(&l, 3).unwrap().unwrap();
    let frame = Arc::new(witt_frame(&l, &v0).unwrap());
    let region = quadcusp::ConeRegion::cap(frame, vec![1.0, 0.0, 1.0], 0.3).unwrap();
    let small = enumerate_isotropic(&l, 20, Some(&region)).unwrap();
    let large = enumerate_isotropic(&l, 40, Some(&region)).unwrap();
    assert_eq!(&large[..small.len()], &small[..]);
    assert!(small.iter().all(|v| l.eval_int(v.coords()).unwrap().is_zero()));
}
