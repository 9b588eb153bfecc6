use building_morl::context::{AssetLibrary, UWallBounds};
use building_morl::env::{reward_cost, reward_thermal, scalarize, PreferenceVector};
use building_morl::metrics::{
    dominates, expected_utility, hypervolume, pareto_filter, sparsity, EuConfig,
};
use building_morl::thermal::{BuildingModel, HeatInputs, ModelParams, ThermalState};
use proptest::prelude::*;
use rand::SeedableRng;

fn front2(max_len: usize) -> impl Strategy<Value = Vec<Vec<f64>>> {
    prop::collection::vec(prop::collection::vec(0.0..10.0f64, 2), 1..=max_len)
}

fn front3(max_len: usize) -> impl Strategy<Value = Vec<Vec<f64>>> {
    prop::collection::vec(prop::collection::vec(0.0..10.0f64, 3), 1..=max_len)
}

fn ids(n: usize) -> Vec<u64> {
    (0..n as u64).collect()
}

fn simplex2() -> impl Strategy<Value = PreferenceVector> {
    (0.0..=1.0f64).prop_map(|a| PreferenceVector::new(vec![a, 1.0 - a]).unwrap())
}

/// Fully coupled three-zone model with the given conductances to outdoors.
fn three_zone(c: [f64; 3], r: [f64; 3], outdoor: [Option<f64>; 3]) -> ModelParams {
    ModelParams {
        zone_names: vec!["a".into(), "b".into(), "c".into()],
        capacitance: c.to_vec(),
        resistance: vec![
            vec![None, Some(r[0]), Some(r[1])],
            vec![Some(r[0]), None, Some(r[2])],
            vec![Some(r[1]), Some(r[2]), None],
        ],
        outdoor_resistance: outdoor.to_vec(),
        ground_resistance: vec![None; 3],
        max_power: vec![1e4; 3],
    }
}

fn model_strategy() -> impl Strategy<Value = BuildingModel> {
    (
        prop::array::uniform3(1e5..1e7f64),
        prop::array::uniform3(0.005..0.5f64),
        prop::array::uniform3(0.01..1.0f64),
    )
        .prop_map(|(c, r, ro)| {
            BuildingModel::new(three_zone(c, r, [Some(ro[0]), Some(ro[1]), Some(ro[2])])).unwrap()
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn hv_monotone_under_insertion(p in front2(12), q in prop::collection::vec(0.0..10.0f64, 2)) {
        let r = [-1.0, -1.0];
        let before = hypervolume(&p, &r).unwrap();
        let mut grown = p.clone();
        grown.push(q);
        prop_assert!(hypervolume(&grown, &r).unwrap() >= before - 1e-12);
    }

    #[test]
    fn hv_translation_invariant(p in front3(8), shift in prop::collection::vec(-50.0..50.0f64, 3)) {
        let r = vec![-1.0; 3];
        let moved: Vec<Vec<f64>> = p.iter().map(|x| x.iter().zip(&shift).map(|(a, s)| a + s).collect()).collect();
        let r_moved: Vec<f64> = r.iter().zip(&shift).map(|(a, s)| a + s).collect();
        let a = hypervolume(&p, &r).unwrap();
        let b = hypervolume(&moved, &r_moved).unwrap();
        prop_assert!((a - b).abs() <= 1e-9 * a.max(1.0));
    }

    #[test]
    fn hv_ignores_dominated_points(p in front3(10)) {
        let r = vec![-1.0; 3];
        let f = pareto_filter(&p, &ids(p.len())).unwrap();
        let a = hypervolume(&p, &r).unwrap();
        let b = hypervolume(&f.points, &r).unwrap();
        prop_assert!((a - b).abs() <= 1e-9 * a.max(1.0));
    }

    #[test]
    fn eu_bounded_and_monotone(p in front2(10), q in prop::collection::vec(0.0..10.0f64, 2)) {
        let cfg = EuConfig::default();
        let eu = expected_utility(&p, &cfg).unwrap();
        let lo = p.iter().map(|x| x[0].min(x[1])).fold(f64::NEG_INFINITY, f64::max);
        let hi = p.iter().map(|x| x[0].max(x[1])).fold(f64::NEG_INFINITY, f64::max);
        prop_assert!(eu >= lo - 1e-12 && eu <= hi + 1e-12);
        let mut grown = p.clone();
        grown.push(q);
        prop_assert!(expected_utility(&grown, &cfg).unwrap() >= eu - 1e-12);
    }

    #[test]
    fn sp_scales_quadratically(p in front3(10), s in 0.1..10.0f64) {
        let scaled: Vec<Vec<f64>> = p.iter().map(|x| x.iter().map(|v| v * s).collect()).collect();
        let a = sparsity(&p) * s * s;
        let b = sparsity(&scaled);
        prop_assert!((a - b).abs() <= 1e-9 * a.max(1e-9));
    }

    #[test]
    fn filter_idempotent_and_complete(p in front3(15)) {
        let f = pareto_filter(&p, &ids(p.len())).unwrap();
        let g = pareto_filter(&f.points, &f.policy_ids).unwrap();
        prop_assert_eq!(&f, &g);
        for a in &f.points {
            for b in &f.points {
                prop_assert!(!dominates(a, b).unwrap());
            }
        }
        for x in &p {
            prop_assert!(f.points.iter().any(|y| y == x || dominates(y, x).unwrap()));
        }
    }

    #[test]
    fn scalarization_respects_dominance(a in prop::collection::vec(-10.0..10.0f64, 2), d in prop::collection::vec(0.0..5.0f64, 2), w in simplex2()) {
        let b: Vec<f64> = a.iter().zip(&d).map(|(x, y)| x - y).collect();
        prop_assert!(scalarize(&w, &a).unwrap() >= scalarize(&w, &b).unwrap());
    }

    #[test]
    fn thermal_reward_forms_agree(temps in prop::collection::vec(0.0..40.0f64, 1..8), sp in 18.0..26.0f64) {
        let m = temps.len() as f64;
        let setpoints = vec![sp; temps.len()];
        let e1: f64 = temps.iter().map(|t| (t - sp).abs()).sum();
        let expected = (20.0 * m - e1) / 20.0;
        prop_assert!((reward_thermal(&temps, &setpoints) - expected).abs() <= 1e-12);
    }

    #[test]
    fn cost_reward_monotone_in_power(p in prop::collection::vec(-5.0..5.0f64, 2), bump in 0.0..3.0f64, price in 0.0..1.0f64) {
        let larger = vec![p[0].abs() + bump, p[1]];
        prop_assert!(reward_cost(&larger, price, 0.05) <= reward_cost(&p, price, 0.05));
    }

    #[test]
    fn closed_model_balances_energy(
        c in prop::array::uniform3(1e5..1e7f64),
        r in prop::array::uniform3(0.005..0.5f64),
        t0 in prop::array::uniform3(0.0..40.0f64),
        q in prop::array::uniform3(-500.0..500.0f64),
    ) {
        let m = BuildingModel::closed(three_zone(c, r, [None; 3])).unwrap();
        let dt = 0.5 * m.max_stable_dt();
        let mut inputs = HeatInputs::passive(3, 0.0, 0.0);
        inputs.controlled = q.to_vec();
        let s0 = ThermalState::new(t0.to_vec());
        let s1 = m.step(&s0, &inputs, dt).unwrap();
        let energy = |s: &ThermalState| s.zone_temps.iter().zip(&c).map(|(t, ci)| t * ci).sum::<f64>();
        let injected: f64 = q.iter().sum::<f64>() * dt;
        let delta = energy(&s1) - energy(&s0);
        prop_assert!((delta - injected).abs() <= 1e-9 * energy(&s0).abs().max(injected.abs()).max(1.0));
    }

    #[test]
    fn step_preserves_ordering(m in model_strategy(), t in prop::array::uniform3(0.0..30.0f64), bump in prop::array::uniform3(0.0..5.0f64), te in -10.0..40.0f64) {
        let dt = m.max_stable_dt();
        let inputs = HeatInputs::passive(3, te, te);
        let lo = ThermalState::new(t.to_vec());
        let hi = ThermalState::new(t.iter().zip(&bump).map(|(a, b)| a + b).collect());
        let a = m.step(&lo, &inputs, dt).unwrap();
        let b = m.step(&hi, &inputs, dt).unwrap();
        for (x, y) in a.zone_temps.iter().zip(&b.zone_temps) {
            prop_assert!(x <= y);
        }
    }

    #[test]
    fn step_is_affine(m in model_strategy(), t1 in prop::array::uniform3(0.0..30.0f64), t2 in prop::array::uniform3(0.0..30.0f64), a in 0.0..1.0f64, te in -10.0..40.0f64) {
        let dt = 0.5 * m.max_stable_dt();
        let inputs = HeatInputs::passive(3, te, te);
        let mix: Vec<f64> = t1.iter().zip(&t2).map(|(x, y)| a * x + (1.0 - a) * y).collect();
        let s1 = m.step(&ThermalState::new(t1.to_vec()), &inputs, dt).unwrap();
        let s2 = m.step(&ThermalState::new(t2.to_vec()), &inputs, dt).unwrap();
        let sm = m.step(&ThermalState::new(mix), &inputs, dt).unwrap();
        for k in 0..3 {
            let expect = a * s1.zone_temps[k] + (1.0 - a) * s2.zone_temps[k];
            prop_assert!((sm.zone_temps[k] - expect).abs() <= 1e-9);
        }
    }

    #[test]
    fn sampled_envelopes_build_valid_models(seed in any::<u64>()) {
        let lib = AssetLibrary::builtin();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let u = UWallBounds::default().sample(&mut rng);
        for layout in ["two_zone", "small_office"] {
            let m = lib.build_model(layout, &u).unwrap();
            prop_assert!(m.max_stable_dt() > 300.0);
            prop_assert!(m.capacitance().iter().all(|c| *c > 0.0));
        }
    }
}
