use num_complex::Complex64;
use proptest::prelude::*;
use qsoc::clifford::{brownian_increment, martingale_coefficient};
use qsoc::sampling::{random_element, stream_rng};
use qsoc::{CliffordAlgebra, CliffordElement};

const TOL: f64 = 1e-11;

fn close(a: &CliffordElement, b: &CliffordElement) -> bool {
    a.max_abs_diff(b) <= TOL * (1.0 + a.norm().max(b.norm()))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn product_is_associative_and_star_reverses(n in 1usize..=5, seed in any::<u64>()) {
        let alg = CliffordAlgebra::new(n, 0.0, 1.0).unwrap();
        let mut rng = stream_rng(seed, 0);
        let [a, b, c] = [0, 1, 2].map(|_| random_element(&alg, n, false, &mut rng));
        prop_assert!(close(&(&(&a * &b) * &c), &(&a * &(&b * &c))));
        prop_assert!(close(&(&a * &b).star(), &(&b.star() * &a.star())));
        prop_assert!(close(&a.star().star(), &a));
        prop_assert!(close(&(&a * &b).parity(), &(&a.parity() * &b.parity())));
    }

    #[test]
    fn generators_anticommute(n in 1usize..=6) {
        let alg = CliffordAlgebra::new(n, 0.0, 1.0).unwrap();
        let one = CliffordElement::identity(&alg);
        for i in 1..=n {
            for j in 1..=n {
                let ei = CliffordElement::generator(&alg, i).unwrap();
                let ej = CliffordElement::generator(&alg, j).unwrap();
                let anti = &(&ei * &ej) + &(&ej * &ei);
                let expected = if i == j { &one * 2.0 } else { CliffordElement::zero(&alg) };
                prop_assert_eq!(anti, expected);
            }
        }
    }

    #[test]
    fn trace_state_is_tracial_and_positive(n in 1usize..=5, seed in any::<u64>()) {
        let alg = CliffordAlgebra::new(n, 0.0, 1.0).unwrap();
        let mut rng = stream_rng(seed, 1);
        let a = random_element(&alg, n, false, &mut rng);
        let b = random_element(&alg, n, false, &mut rng);
        let ab = (&a * &b).state_m();
        let ba = (&b * &a).state_m();
        prop_assert!((ab - ba).norm() <= TOL * (1.0 + ab.norm()));
        let via_product = (&a.star() * &b).state_m();
        let inner = a.inner(&b).unwrap();
        prop_assert!((via_product - inner).norm() <= TOL * (1.0 + inner.norm()));
        let pos = (&a.star() * &a).state_m();
        prop_assert!(pos.re >= 0.0 && pos.im.abs() <= TOL * (1.0 + pos.re));
        prop_assert!((pos.re - a.norm_sqr()).abs() <= TOL * (1.0 + pos.re));
    }

    #[test]
    fn conditional_expectation_is_a_bimodule_projection(n in 1usize..=5, k in 0usize..=5, j in 0usize..=5, seed in any::<u64>()) {
        let (k, j) = (k.min(n), j.min(n));
        let alg = CliffordAlgebra::new(n, 0.0, 1.0).unwrap();
        let mut rng = stream_rng(seed, 2);
        let x = random_element(&alg, n, false, &mut rng);
        let a = random_element(&alg, k, false, &mut rng);
        let c = random_element(&alg, k, false, &mut rng);
        let ek = x.conditional_expectation(k).unwrap();
        prop_assert!(ek.is_supported_in(k));
        prop_assert_eq!(ek.conditional_expectation(k).unwrap(), ek.clone());
        let tower = ek.conditional_expectation(j).unwrap();
        prop_assert_eq!(tower, x.conditional_expectation(j.min(k)).unwrap());
        let lhs = (&(&a * &x) * &c).conditional_expectation(k).unwrap();
        prop_assert!(close(&lhs, &(&(&a * &ek) * &c)));
        let rest = &x - &ek;
        prop_assert!(ek.real_inner(&rest).abs() <= TOL * (1.0 + x.norm_sqr()));
    }

    #[test]
    fn martingale_representation_and_isometry(n in 1usize..=6, k in 0usize..6, t_end in 0.1f64..5.0, seed in any::<u64>()) {
        let k = k % n;
        let alg = CliffordAlgebra::new(n, 0.0, t_end).unwrap();
        let mut rng = stream_rng(seed, 3);
        let f = random_element(&alg, k + 1, false, &mut rng);
        let y = martingale_coefficient(&f, k).unwrap();
        prop_assert!(y.is_supported_in(k));
        let dw = brownian_increment(&alg, k + 1).unwrap();
        let ydw = &y * &dw;
        prop_assert!(close(&(&f.conditional_expectation(k).unwrap() + &ydw), &f));
        prop_assert!(ydw.conditional_expectation(k).unwrap().norm() == 0.0);
        let dt = alg.dt();
        prop_assert!((ydw.norm_sqr() - dt * y.norm_sqr()).abs() <= TOL * (1.0 + ydw.norm_sqr()));
        let square = &dw * &dw;
        prop_assert!(close(&square, &CliffordElement::scalar(&alg, Complex64::new(dt, 0.0))));
    }
}

#[test]
fn martingale_coefficient_rejects_bad_levels() {
    let alg = CliffordAlgebra::new(3, 0.0, 1.0).unwrap();
    let mut rng = stream_rng(5, 0);
    let f = random_element(&alg, 3, false, &mut rng);
    assert!(martingale_coefficient(&f, 1).is_err());
    assert!(martingale_coefficient(&f, 3).is_err());
    assert!(martingale_coefficient(&f, 2).is_ok());
}
