use nlpkit::model::{check_derivatives, corpus_get, corpus_names, evaluate, Model};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_point(model: &dyn Model, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let (l, u) = model.variable_bounds();
    (0..model.num_variables())
        .map(|i| rng.gen_range(-2.0..2.0f64).clamp(l[i], u[i]))
        .collect()
}

#[test]
fn derivatives_match_finite_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    for name in corpus_names() {
        let m = corpus_get(name).unwrap();
        let mut points = vec![m.initial_point()];
        points.extend((0..10).map(|_| random_point(m.as_ref(), &mut rng)));
        for x in points {
            let r = check_derivatives(m.as_ref(), &x, 1e-6).unwrap();
            assert!(r.passes(), "{name} at {x:?}: {r:?}");
        }
    }
}

#[test]
fn booth_derivatives_are_exact() {
    let m = corpus_get("booth").unwrap();
    let r = check_derivatives(m.as_ref(), &[0.0, 0.0], 1e-6).unwrap();
    assert!(r.max_error() <= 1e-8);
}

#[test]
fn evaluation_is_bitwise_repeatable() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for name in corpus_names() {
        let m = corpus_get(name).unwrap();
        let x = random_point(m.as_ref(), &mut rng);
        let y: Vec<f64> = (0..m.num_constraints()).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let a = evaluate(m.as_ref(), &x, 0.7, &y, true);
        let b = evaluate(m.as_ref(), &x, 0.7, &y, true);
        assert_eq!(a.f.to_bits(), b.f.to_bits());
        assert_eq!(a.c, b.c);
        assert_eq!(a.grad_f, b.grad_f);
        assert_eq!(a.jac_c, b.jac_c);
        let h = a.hessian.unwrap();
        assert_eq!(Some(h.clone()), b.hessian);
        assert!(h.is_symmetric(), "{name}");
    }
}
