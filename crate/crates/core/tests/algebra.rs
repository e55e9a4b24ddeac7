use num_complex::Complex64;
use proptest::prelude::*;
use shellquad::algebra::{
    eval_component, h_eval, lsz_state, phi_map, sequence_product, CutoffProfile, EnergyMultiplier, LegFunction,
    Monomial, Polynomial, ProductTerm, TestFunctionSequence,
};

const D: usize = 4;
const DIM: usize = D - 1;

fn leg() -> impl Strategy<Value = LegFunction> {
    (
        prop::collection::vec(-1.0..1.0f64, DIM),
        0.3..1.5f64,
        prop::collection::vec((prop::collection::vec(0u32..3, DIM), -2.0..2.0f64), 1..3),
        prop::option::of(0.5..2.0f64),
    )
        .prop_map(|(center, sigma, monomials, beta_g)| {
            let poly = Polynomial { terms: monomials.into_iter().map(|(e, c)| Monomial(e, c)).collect() };
            let mut f = LegFunction::gaussian(center, sigma).with_poly(poly);
            if let Some(beta_g) = beta_g {
                f = f.with_emult(EnergyMultiplier { beta_g });
            }
            f
        })
}

fn coeff() -> impl Strategy<Value = Complex64> {
    (-2.0..2.0f64, -2.0..2.0f64).prop_map(|(re, im)| Complex64::new(re, im))
}

/// Sequences with components of at most two legs.
fn sequence() -> impl Strategy<Value = TestFunctionSequence> {
    (coeff(), prop::collection::vec((coeff(), prop::collection::vec(leg(), 1..3)), 0..3)).prop_map(|(scalar, terms)| {
        let mut seq = TestFunctionSequence::scalar(D, scalar);
        for (c, legs) in terms {
            seq.push_term(ProductTerm { coeff: c, legs }).unwrap();
        }
        seq
    })
}

/// Energies and momenta for up to six legs.
fn point() -> impl Strategy<Value = (Vec<f64>, Vec<Vec<f64>>)> {
    (prop::collection::vec(-1.0..3.0f64, 6), prop::collection::vec(prop::collection::vec(-1.5..1.5f64, DIM), 6))
}

fn eval(seq: &TestFunctionSequence, n: usize, (energies, momenta): &(Vec<f64>, Vec<Vec<f64>>)) -> Complex64 {
    eval_component(seq, n, &energies[..n], &momenta[..n]).unwrap()
}

fn close(a: Complex64, b: Complex64) -> bool {
    (a - b).norm() <= 1e-12 * (1.0 + a.norm().max(b.norm()))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn phi_is_multiplicative(a in sequence(), b in sequence(), beta in 0.2..3.0f64, x in point()) {
        let cut = CutoffProfile::uniform(beta).unwrap();
        let lhs = phi_map(&sequence_product(&a, &b).unwrap(), &cut);
        let rhs = sequence_product(&phi_map(&a, &cut), &phi_map(&b, &cut)).unwrap();
        for n in 0..=4 {
            prop_assert!(close(eval(&lhs, n, &x), eval(&rhs, n, &x)), "component {n}");
        }
    }

    #[test]
    fn product_is_associative(a in sequence(), b in sequence(), c in sequence(), x in point()) {
        let left = sequence_product(&sequence_product(&a, &b).unwrap(), &c).unwrap();
        let right = sequence_product(&a, &sequence_product(&b, &c).unwrap()).unwrap();
        for n in 0..=6 {
            prop_assert!(close(eval(&left, n, &x), eval(&right, n, &x)), "component {n}");
        }
    }

    #[test]
    fn unit_is_two_sided_identity(a in sequence(), x in point()) {
        let unit = TestFunctionSequence::unit(D);
        for n in 0..=2 {
            let v = eval(&a, n, &x);
            prop_assert_eq!(eval(&sequence_product(&a, &unit).unwrap(), n, &x), v);
            prop_assert_eq!(eval(&sequence_product(&unit, &a).unwrap(), n, &x), v);
        }
    }

    #[test]
    fn phi_of_unit_is_unit(beta in 0.1..5.0f64, x in point()) {
        let unit = TestFunctionSequence::unit(D);
        let mapped = phi_map(&unit, &CutoffProfile::uniform(beta).unwrap());
        prop_assert_eq!(&mapped, &unit);
        prop_assert_eq!(eval(&mapped, 0, &x), Complex64::new(1.0, 0.0));
    }

    #[test]
    fn phi_twice_squares_the_cutoff(a in sequence(), beta in 0.2..3.0f64, x in point()) {
        let cut = CutoffProfile::uniform(beta).unwrap();
        let twice = phi_map(&phi_map(&a, &cut), &cut);
        for n in 0..=2 {
            let factor: f64 = x.0[..n].iter().map(|e| h_eval(e / beta).powi(2)).product();
            prop_assert!(close(eval(&twice, n, &x), eval(&a, n, &x) * factor));
        }
    }

    #[test]
    fn phi_vanishes_at_nonpositive_energy(a in sequence(), x in point(), leg in 0usize..2) {
        let mapped = phi_map(&a, &CutoffProfile::default());
        let mut x = x;
        x.0[leg] = -x.0[leg].abs();
        prop_assert_eq!(eval(&mapped, 2, &x), Complex64::new(0.0, 0.0));
    }

    #[test]
    fn evaluation_is_linear(a in sequence(), b in sequence(), s in coeff(), x in point()) {
        let combo = a.scaled(s).add(&b).unwrap();
        for n in 0..=2 {
            prop_assert!(close(eval(&combo, n, &x), eval(&a, n, &x) * s + eval(&b, n, &x)));
        }
    }

    #[test]
    fn sequences_round_trip_through_json(a in sequence()) {
        let text = serde_json::to_string(&a).unwrap();
        let back: TestFunctionSequence = serde_json::from_str(&text).unwrap();
        prop_assert_eq!(back, a);
    }

    #[test]
    fn lsz_states_on_the_shell(f in leg(), mass in 0.0..2.0f64, t in -10.0..10.0f64, p in prop::collection::vec(-1.5..1.5f64, DIM), beta in 0.5..2.0f64) {
        let state = lsz_state(D, f.clone(), mass, t).unwrap();
        let w = (mass * mass + p.iter().map(|x| x * x).sum::<f64>()).sqrt();
        prop_assume!(w > 1e-3);
        let on = eval(&state, 1, &(vec![w], vec![p.clone()]));
        let plain = f.eval(w, &p);
        prop_assert!(close(on, plain * Complex64::from_polar(2.0 * w, w * t)));
        prop_assert!((on.norm() - 2.0 * w * plain.norm()).abs() <= 1e-12 * (1.0 + on.norm()));
        prop_assert_eq!(eval(&state, 1, &(vec![-w], vec![p.clone()])).norm(), 0.0);
        let cut = phi_map(&state, &CutoffProfile::uniform(beta).unwrap());
        prop_assert!(close(eval(&cut, 1, &(vec![w], vec![p])), on * h_eval(w / beta)));
    }
}

/// Central differences of order 1 to 4 with fourth-order stencils where
/// available.
fn derivatives(f: impl Fn(f64) -> f64, x: f64, h: f64) -> [f64; 4] {
    let (m2, m1, z, p1, p2) = (f(x - 2.0 * h), f(x - h), f(x), f(x + h), f(x + 2.0 * h));
    [
        (m2 - 8.0 * m1 + 8.0 * p1 - p2) / (12.0 * h),
        (-m2 + 16.0 * m1 - 30.0 * z + 16.0 * p1 - p2) / (12.0 * h * h),
        (p2 - 2.0 * p1 + 2.0 * m1 - m2) / (2.0 * h.powi(3)),
        (p2 - 4.0 * p1 + 6.0 * z - 4.0 * m1 + m2) / h.powi(4),
    ]
}

#[test]
fn h_is_flat_near_zero() {
    for e in [1e-2, 1e-3] {
        for (order, value) in derivatives(h_eval, e, e / 10.0).iter().enumerate() {
            assert!(value.abs() < 1e-15, "order {} at {e}: {value}", order + 1);
        }
    }
    for e in [0.0, -1e-300, -0.5, -1e6, f64::NEG_INFINITY] {
        assert_eq!(h_eval(e), 0.0);
    }
}

#[test]
fn h_is_increasing_and_bounded() {
    let mut prev = 0.0;
    for i in 1..2000 {
        let v = h_eval(i as f64 * 0.01);
        assert!(v > prev && v < 1.0);
        prev = v;
    }
}
