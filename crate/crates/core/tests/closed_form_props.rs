use proptest::prelude::*;

use snnss::closed_form::{build_mcf, decay_rates, e_coeffs, epsilon_m, InitialStats};
use snnss::rates::{classify, DEFAULT_TOLERANCE};
use snnss::{Configuration, Graph, ModelLabel, ModelParams, NamedGraph, RateTable};

fn model() -> impl Strategy<Value = ModelParams> {
    prop_oneof![
        (0.0f64..2.0, 0.01f64..2.0, 0.01f64..2.0)
            .prop_map(|(d, h1, h2)| ModelParams::NoisyVoter { d, h1, h2 }),
        (0.01f64..3.0).prop_map(|a| ModelParams::Degenerate { a, b: 0.0 }),
        (0.01f64..3.0).prop_map(|b| ModelParams::Degenerate { a: 0.0, b }),
        (0.05f64..2.0, 0.0f64..3.0).prop_map(|(h, a)| ModelParams::ThresholdNoisy { h, a }),
        (0.05f64..1.0, 0.2f64..2.0).prop_map(|(h, extra)| {
            let a = h + extra;
            ModelParams::GeneralizedThreshold { h, a, b: h * a / (a - h) }
        }),
    ]
}

proptest! {
    #[test]
    fn threshold_decay_rates_are_real_positive_and_distinct(h in 1e-3f64..10.0, frac in -1.0f64..5.0) {
        let a = frac * h;
        let r = decay_rates(&ModelParams::ThresholdNoisy { h, a }).unwrap();
        let a2 = r.alpha2.unwrap();
        prop_assert!(r.alpha1 > a2 && a2 > 0.0);
        prop_assert!((r.alpha1 + a2 - (8.0 * h + a)).abs() < 1e-9 * (8.0 * h + a.abs()));
        prop_assert!((r.alpha1 * a2 - 12.0 * h * h).abs() < 1e-9 * r.alpha1 * a2);
    }

    #[test]
    fn closed_form_starts_at_the_initial_state(
        params in model(),
        bits in prop::collection::vec(any::<bool>(), 10),
    ) {
        let g = Graph::cycle(10).unwrap();
        let r = RateTable::from_params(2, &params).unwrap();
        let c = Configuration::from_bits(bits);
        let init = InitialStats::from_configuration(&g, &r, &c).unwrap();
        let m = build_mcf(&params, 10, &init).unwrap();
        prop_assert!((m.evaluate(0.0) - c.coverage() as f64).abs() < 1e-9);
        prop_assert!((m.derivative(0.0) - init.g1).abs() < 1e-8 * init.g1.abs().max(1.0));
        // second derivative from the closure relation
        let (a1, a0, b) = e_coeffs(&params, 10);
        let h = 1e-4;
        let second = (m.derivative(h) - m.derivative(-h)) / (2.0 * h);
        let expected = a1 * init.g1 + a0 * c.coverage() as f64 + b;
        prop_assert!((second - expected).abs() < 1e-5 * expected.abs().max(1.0));
    }

    #[test]
    fn constructed_tables_classify_back(params in model()) {
        let r = RateTable::from_params(2, &params).unwrap();
        let class = classify(&r, DEFAULT_TOLERANCE);
        prop_assert!(class.contains(params.label()), "{:?} -> {:?}", params, class.labels());
        let back = RateTable::from_params(2, class.get(params.label()).unwrap()).unwrap();
        for (u, v) in back.birth().iter().chain(back.death()).zip(r.birth().iter().chain(r.death())) {
            prop_assert!((u - v).abs() < 1e-9 * r.max_rate().max(1.0));
        }
    }

    #[test]
    fn classification_is_scale_invariant(params in model(), factor in 1e-3f64..1e3) {
        let r = RateTable::from_params(2, &params).unwrap();
        let a = classify(&r, DEFAULT_TOLERANCE).labels();
        let b = classify(&r.scaled(factor).unwrap(), DEFAULT_TOLERANCE).labels();
        prop_assert_eq!(a, b);
    }

    #[test]
    fn noisy_voter_margin_equals_its_decay_rate(d in 0.0f64..5.0, h1 in 0.0f64..3.0, h2 in 0.0f64..3.0) {
        // ε = λ0 + μs + s d and M = s d
        let r = RateTable::noisy_voter(2, d, h1, h2).unwrap();
        let margin = epsilon_m(&r);
        prop_assert!((margin - (h1 + h2)).abs() < 1e-12);
    }
}

#[test]
fn heawood_threshold_model_is_classified() {
    let g = Graph::named(NamedGraph::Heawood);
    let r = RateTable::threshold_noisy(g.degree(), 3, 1.0, 0.5).unwrap();
    assert!(classify(&r, DEFAULT_TOLERANCE).contains(ModelLabel::C3));
}
