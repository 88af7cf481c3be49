use nlpkit::globalization::Filter;
use nlpkit::model::{corpus_get, corpus_names, Model};
use nlpkit::reformulation::{make_l1_relaxed, to_equality_form};
use nlpkit::subproblem::{fraction_to_boundary, push_into_interior, update_barrier_parameter, BarrierSchedule, BarrierState};
use proptest::prelude::*;

fn pairs() -> impl Strategy<Value = Vec<(f64, f64)>> {
    prop::collection::vec((0.0..10.0f64, -10.0..10.0f64), 1..60)
}

fn no_entry_dominates(f: &Filter) -> bool {
    let e = f.entries();
    (0..e.len()).all(|i| (0..e.len()).all(|j| i == j || !(e[i].0 <= e[j].0 && e[i].1 <= e[j].1)))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn filter_entries_stay_nondominated(seq in pairs(), queries in pairs()) {
        let mut f = Filter::new(0.99, 1e-5, 8.0);
        for (eta, phi) in seq {
            let before: Vec<bool> = queries.iter().map(|q| f.is_acceptable(q.0, q.1)).collect();
            f.add(eta, phi);
            prop_assert!(no_entry_dominates(&f));
            prop_assert!(f.entries().iter().all(|e| e.0 <= f.eta_max()));
            // A new entry only shrinks the acceptable region.
            for (q, was) in queries.iter().zip(before) {
                prop_assert!(was || !f.is_acceptable(q.0, q.1));
            }
            if eta <= f.eta_max() {
                prop_assert!(!f.is_acceptable(eta, phi));
            }
        }
    }

    #[test]
    fn fewer_entries_never_reject_more(seq in pairs(), keep in prop::collection::vec(any::<bool>(), 60), queries in pairs()) {
        let mut full = Filter::new(0.99, 1e-5, 8.0);
        for (eta, phi) in &seq {
            full.add(*eta, *phi);
        }
        let mut sub = Filter::new(0.99, 1e-5, 8.0);
        for (e, k) in full.entries().iter().zip(&keep) {
            if *k {
                sub.add(e.0, e.1);
            }
        }
        prop_assert!(sub.entries().iter().all(|e| full.entries().contains(e)));
        for (eta, phi) in queries {
            prop_assert!(!full.is_acceptable(eta, phi) || sub.is_acceptable(eta, phi));
        }
    }

    #[test]
    fn fraction_to_boundary_holds_exactly(
        s in prop::collection::vec(1e-8..1e3f64, 1..8),
        ds in prop::collection::vec(-1e4..1e4f64, 8),
        tau in 0.9..0.999_999f64,
    ) {
        let ds = &ds[..s.len()];
        let alpha = fraction_to_boundary(&s, ds, tau);
        prop_assert!(alpha > 0.0 && alpha <= 1.0);
        for (s, d) in s.iter().zip(ds) {
            prop_assert!(s + alpha * d >= (1.0 - tau) * s);
        }
        // Maximal up to rounding: a slightly longer step breaks some component.
        if alpha < 1.0 {
            let longer = alpha * (1.0 + 1e-9);
            prop_assert!(s.iter().zip(ds).any(|(s, d)| s + longer * d < (1.0 - tau) * s));
        }
    }

    #[test]
    fn interior_push_is_strict(
        x in prop::collection::vec(-20.0..20.0f64, 4),
        l in prop::collection::vec(-10.0..5.0f64, 4),
        w in prop::collection::vec(1e-6..10.0f64, 4),
        free in prop::collection::vec(0u8..4, 4),
    ) {
        let lower: Vec<f64> = l.iter().zip(&free).map(|(l, f)| if f & 1 == 1 { f64::NEG_INFINITY } else { *l }).collect();
        let upper: Vec<f64> = l.iter().zip(&w).zip(&free).map(|((l, w), f)| if f & 2 == 2 { f64::INFINITY } else { l + w }).collect();
        let mut y = x.clone();
        push_into_interior(&mut y, &lower, &upper, 1e-2);
        for i in 0..4 {
            prop_assert!(y[i] > lower[i] && y[i] < upper[i]);
            if x[i] > lower[i] + 0.5 * (upper[i] - lower[i]).min(1e300) && x[i] < upper[i] - 1e-2 * upper[i].abs().max(1.0) {
                prop_assert_eq!(y[i], x[i]);
            }
        }
    }

    #[test]
    fn barrier_parameter_decreases_to_floor(mu in 1e-12..10.0f64, err in 0.0..100.0f64, eps in 1e-10..1e-4f64) {
        let schedule = BarrierSchedule::default();
        let b = update_barrier_parameter(BarrierState::new(mu, schedule.tau_min), err, eps, &schedule);
        prop_assert!(b.mu <= mu);
        prop_assert!(b.mu >= (eps / 10.0).min(mu));
        if err > schedule.kappa_epsilon * mu {
            prop_assert_eq!(b.mu, mu);
        }
        prop_assert!(b.tau >= schedule.tau_min && b.tau < 1.0);
    }
}

#[test]
fn elastic_constraints_add_the_elastics() {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
    for name in corpus_names() {
        let eq = std::sync::Arc::new(to_equality_form(corpus_get(name).unwrap()).unwrap());
        let n = eq.num_variables();
        let m = eq.num_constraints();
        let relaxed = make_l1_relaxed(eq.clone(), 1.0);
        for _ in 0..5 {
            let x: Vec<f64> = (0..n).map(|_| rng.gen_range(-2.0..2.0)).collect();
            let up: Vec<f64> = (0..m).map(|_| rng.gen_range(0.0..3.0)).collect();
            let um: Vec<f64> = (0..m).map(|_| rng.gen_range(0.0..3.0)).collect();
            let mut v = x.clone();
            v.extend(&up);
            v.extend(&um);
            let c = eq.constraints(&x);
            let ce = relaxed.constraints(&v);
            for j in 0..m {
                let expected = c[j] - up[j] + um[j];
                assert!((ce[j] - expected).abs() <= 1e-14 * (c[j].abs() + up[j] + um[j]), "{name}");
            }
            let expected = eq.objective(&x) + up.iter().sum::<f64>() + um.iter().sum::<f64>();
            assert!((relaxed.objective(&v) - expected).abs() <= 1e-12 * expected.abs().max(1.0));
            // At the elastic start the relaxed constraints vanish.
            let start = relaxed.elastic_point(&x);
            assert!(relaxed.constraints(&start).iter().all(|v| v.abs() <= 1e-12 * c.iter().fold(1.0f64, |a, b| a.max(b.abs()))));
        }
    }
}
