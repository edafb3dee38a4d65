mod common;

use common::*;
use cvqkd_core::*;
use proptest::prelude::*;

fn coarse() -> OptimizerSettings {
    OptimizerSettings {
        grid: 16,
        min_step: 1e-3,
    }
}

fn scenarios() -> impl Strategy<Value = Scenario> {
    prop_oneof![
        Just(Scenario::Selection),
        Just(Scenario::Multiplexed),
        Just(Scenario::FullMimo),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn optimum_is_feasible_deterministic_and_beats_equal_split(
        seed in any::<u64>(),
        scenario in scenarios(),
        total in 2.5f64..12.0,
        cap in prop::option::of(1.5f64..8.0),
        xi in 0.0f64..0.02,
    ) {
        let mut r = rng(seed);
        let h = random_channel(&mut r);
        let noise = NoiseModel::iid(xi);
        let budget = PowerBudget::new(total, cap, PowerConvention::Variance).unwrap();
        let first = optimize_power(&h, &noise, 0.95, &budget, scenario, &coarse()).unwrap();
        let again = optimize_power(&h, &noise, 0.95, &budget, scenario, &coarse()).unwrap();
        prop_assert_eq!(first, again);

        prop_assert!(first.v_a1 >= 1.0 && first.v_a2 >= 1.0);
        prop_assert!(first.v_a1 + first.v_a2 <= total + 1e-9);
        if let Some(c) = cap {
            prop_assert!(first.v_a1 <= c + 1e-9 && first.v_a2 <= c + 1e-9);
        }

        let v_eq = budget.equal_allocation().unwrap();
        let (eq_rate, _) = scenario_rate(&h, &noise, 0.95, v_eq, v_eq, scenario).unwrap();
        prop_assert!(first.skr >= eq_rate);
        prop_assert!(first.skr >= 0.0);
    }

    #[test]
    fn siso_optimum_beats_the_grid_ends(
        gain in 0.05f64..1.0,
        xi in 0.0f64..0.02,
        v_max in 1.5f64..20.0,
    ) {
        let g = Complex64::new(gain, 0.0);
        let (v, best) = optimize_siso(g, xi, 0.95, v_max, &coarse()).unwrap();
        prop_assert!((1.0..=v_max).contains(&v));
        for probe in [1.0, 0.5 * (1.0 + v_max), v_max] {
            prop_assert!(best.skr >= skr_siso(g, probe, xi, 0.95).unwrap().skr - 1e-12);
        }
    }

    #[test]
    fn boundary_radius_is_tight(phase in 0.0f64..std::f64::consts::TAU, t in 0.01f64..1.0) {
        let h = paper_channel(t).unwrap();
        let noise = NoiseModel::iid(0.001);
        let r = admissible_radius(&h, 4.7, 4.7, &noise, phase).unwrap();
        let dir = Complex64::from_polar(1.0, phase);
        let inside = noise.with_correlation(dir * r * (1.0 - 1e-6));
        let outside = noise.with_correlation(dir * r * (1.0 + 1e-6));
        prop_assert!(check_noise(&h, 4.7, 4.7, &inside).unwrap().is_admissible());
        prop_assert!(!check_noise(&h, 4.7, 4.7, &outside).unwrap().is_admissible());
    }
}

#[test]
fn full_mimo_rate_falls_with_loss() {
    let noise = NoiseModel::iid(0.001);
    let budget = PowerBudget::paper();
    let mut last = f64::INFINITY;
    for loss in loss_grid(0.0, 20.0, 2.0).unwrap() {
        let h = paper_channel(db_to_transmissivity(loss)).unwrap();
        let opt = optimize_power(&h, &noise, 0.95, &budget, Scenario::FullMimo, &coarse()).unwrap();
        assert!(opt.skr <= last + 1e-12, "rate rose at {loss} dB");
        last = opt.skr;
    }
}

#[test]
fn sweep_points_are_ordered_and_nonnegative() {
    let params = SweepParams {
        settings: coarse(),
        boundary_phases: 4,
        ..SweepParams::default()
    };
    let pts = sweep_loss(0.0, 24.0, 6.0, &params).unwrap();
    let losses: Vec<f64> = pts.iter().map(|p| p.loss_db).collect();
    assert_eq!(losses, vec![0.0, 6.0, 12.0, 18.0, 24.0]);
    for p in &pts {
        for k in [p.skr_a, p.skr_b, p.skr_c, p.skr_d, p.skr_e] {
            assert!(k >= 0.0 && k.is_finite());
        }
    }
    for w in pts.windows(2) {
        assert!(w[1].skr_d <= w[0].skr_d + 1e-12);
        assert!(w[1].skr_c <= w[0].skr_c + 1e-12);
    }
}

#[test]
fn empty_budget_is_rejected() {
    let budget = PowerBudget::new(1.5, None, PowerConvention::Variance).unwrap();
    let h = paper_channel(0.5).unwrap();
    let err = optimize_power(
        &h,
        &NoiseModel::iid(0.001),
        0.95,
        &budget,
        Scenario::FullMimo,
        &coarse(),
    );
    assert_eq!(err, Err(Error::EmptyFeasibleSet));
}

#[test]
fn conventions_translate_power_and_variance() {
    assert_eq!(PowerConvention::Variance.variance(4.7), 4.7);
    assert_eq!(PowerConvention::VarianceMinusOne.variance(3.7), 4.7);
    for c in [PowerConvention::Variance, PowerConvention::VarianceMinusOne] {
        assert_eq!(c.to_string().parse::<PowerConvention>().unwrap(), c);
        assert!((c.power(c.variance(2.5)) - 2.5).abs() < 1e-15);
    }
}
