use proptest::prelude::*;

use inrush::environment::{encode, reward};
use inrush::flux_data::{fit_sine, fitted_flux, sample_scenario, FittedFluxCurve};
use inrush::harness::RunConfig;
use inrush::jiles_atherton::{loop_energy, trace_field_path, JaModel, JaParameters, LimbState, MU0};
use inrush::rl::{argmax, ppo_clip, DqnHyperparameters, ReplayBuffer, Transition};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn settled_cycle(model: &JaModel, amplitude: f64, resolution: f64) -> Vec<LimbState> {
    let warm = trace_field_path(model, LimbState::demagnetized(), &[amplitude, -amplitude, amplitude], resolution).unwrap();
    trace_field_path(model, *warm.last().unwrap(), &[-amplitude, amplitude], resolution).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn magnetization_stays_bounded(path in prop::collection::vec(-20_000.0f64..20_000.0, 1..8)) {
        let p = JaParameters::default();
        let trace = trace_field_path(&JaModel::new(p), LimbState::demagnetized(), &path, 5.0).unwrap();
        for s in trace {
            prop_assert!(s.m.abs() <= p.m_s);
            prop_assert_eq!(s.b, MU0 * (s.h + s.m));
        }
    }

    #[test]
    fn closed_cycles_dissipate(amplitude in 20.0f64..5_000.0) {
        let cycle = settled_cycle(&JaModel::new(JaParameters::default()), amplitude, 1.0);
        prop_assert!(loop_energy(&cycle) >= 0.0);
    }

    #[test]
    fn clip_is_one_of_three_branches(p in 0.0f64..3.0, eps in 0.01f64..0.5) {
        let c = ppo_clip(p, eps);
        if p < 1.0 - eps {
            prop_assert_eq!(c, 1.0 - eps);
        } else if p > 1.0 + eps {
            prop_assert_eq!(c, 1.0 + eps);
        } else {
            prop_assert_eq!(c, p);
        }
    }

    #[test]
    fn clipped_surrogate_never_exceeds_unclipped(p in 0.0f64..3.0, a in -5.0f64..5.0, eps in 0.01f64..0.5) {
        let s = (p * a).min(ppo_clip(p, eps) * a);
        prop_assert!(s <= p * a);
        if a > 0.0 {
            prop_assert!(s <= (1.0 + eps) * a + 1e-12);
        }
    }

    #[test]
    fn epsilon_schedules_are_non_increasing(
        fraction in 0.05f64..0.6,
        eps_final in 1e-4f64..0.1,
        total in 1_000usize..80_000,
        exponential in any::<bool>(),
    ) {
        let mut hp = if exponential { DqnHyperparameters::exponential() } else { DqnHyperparameters::linear() };
        hp.exploration_fraction = fraction;
        hp.epsilon_final = eps_final;
        hp.total_iterations = total;
        prop_assert_eq!(hp.epsilon(0), 1.0);
        let mut prev = f64::INFINITY;
        for t in (0..=total).step_by((total / 500).max(1)) {
            let e = hp.epsilon(t);
            prop_assert!(e <= prev);
            prev = e;
        }
        let end = (fraction * total as f64).ceil() as usize;
        prop_assert!((hp.epsilon(end) - eps_final).abs() < 1e-9);
        prop_assert_eq!(hp.epsilon(total), eps_final);
    }

    #[test]
    fn argmax_is_shift_invariant(values in prop::collection::vec(-10.0f64..10.0, 2..40), shift in -100.0f64..100.0) {
        let shifted: Vec<f64> = values.iter().map(|v| v + shift).collect();
        let i = argmax(&values);
        let j = argmax(&shifted);
        prop_assert!(i == j || (values[i] - values[j]).abs() < 1e-12);
    }

    #[test]
    fn best_reward_is_lowest_peak(peaks in prop::collection::vec(0.0f64..3.0, 1..360)) {
        let rewards: Vec<f64> = peaks.iter().map(|&i| reward(i)).collect();
        let lowest = peaks.iter().cloned().fold(f64::INFINITY, f64::min);
        prop_assert_eq!(peaks[argmax(&rewards)], lowest);
    }

    #[test]
    fn reward_is_monotone_on_each_branch(a in 0.0f64..3.0, b in 0.0f64..3.0) {
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        if (lo <= 1.0) == (hi <= 1.0) {
            prop_assert!(reward(hi) <= reward(lo));
        }
        prop_assert!(reward(lo.min(1.0)) >= 0.0);
    }

    #[test]
    fn replay_never_exceeds_capacity(capacity in 1usize..64, pushes in 0usize..300) {
        let mut buf = ReplayBuffer::new(capacity);
        for i in 0..pushes {
            buf.push(Transition {
                state: vec![i as f64],
                action: i % 360,
                reward: 0.0,
                next_state: vec![0.0],
                done: true,
            });
            prop_assert!(buf.len() <= capacity);
        }
        prop_assert_eq!(buf.len(), pushes.min(capacity));
    }

    #[test]
    fn features_stay_in_range(theta in 0.0f64..360.0, f in prop::array::uniform3(-0.19f64..0.19)) {
        let x = encode(theta, f, 0.1639);
        prop_assert!(x.iter().all(|v| v.abs() <= 1.2));
        prop_assert_eq!(x, encode(theta, f, 0.1639));
    }

    #[test]
    fn noiseless_fit_recovers_the_curve(amplitude in 0.01f64..0.2, phase in -3.1f64..3.1) {
        let c = FittedFluxCurve::new(amplitude, phase, 0.0, 50.0).unwrap();
        let pts: Vec<(f64, f64)> = (0..24).map(|i| {
            let deg = i as f64 * 15.0;
            (deg, fitted_flux(deg, &c))
        }).collect();
        let fit = fit_sine(&pts, 50.0).unwrap();
        prop_assert!((fit.amplitude - amplitude).abs() < 1e-6);
        let dphase = (fit.phase - phase + std::f64::consts::PI).rem_euclid(2.0 * std::f64::consts::PI) - std::f64::consts::PI;
        prop_assert!(dphase.abs() < 1e-6);
    }

    #[test]
    fn sampled_fluxes_stay_in_band(theta in -720.0f64..720.0, seed in any::<u64>()) {
        let curves = FittedFluxCurve::measured_set(50.0);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let s = sample_scenario(theta, &curves, &mut rng);
        for j in 0..3 {
            prop_assert!((s.fluxes[j] - fitted_flux(theta, &curves[j])).abs() <= curves[j].tolerance + 1e-15);
        }
        let whole = theta.round();
        prop_assert_eq!(fitted_flux(whole + 360.0, &curves[0]), fitted_flux(whole, &curves[0]));
    }

    #[test]
    fn run_config_round_trips(seed in any::<u64>(), scenarios in 1usize..500, iters in 1usize..100_000) {
        let mut cfg = RunConfig::default();
        cfg.seed = seed;
        cfg.evaluation.scenarios = scenarios;
        cfg.rl = cfg.rl.with_iterations(iters);
        let back = RunConfig::parse(&cfg.to_toml()).unwrap();
        prop_assert_eq!(back, cfg);
    }
}

#[test]
fn halving_the_substep_barely_moves_the_major_loop() {
    let p = JaParameters::default();
    let coarse = settled_cycle(&JaModel::new(p), 2_000.0, 4.0);
    let fine = settled_cycle(&JaModel::new(p).with_max_substep(JaModel::DEFAULT_MAX_SUBSTEP / 2.0), 2_000.0, 4.0);
    assert_eq!(coarse.len(), fine.len());
    let worst = coarse.iter().zip(&fine).map(|(a, b)| (a.m - b.m).abs()).fold(0.0, f64::max);
    assert!(worst < 1e-3 * p.m_s, "{worst}");
}

#[test]
fn fully_reversible_material_has_a_thin_loop() {
    let base = JaParameters::default();
    let reversible = JaParameters { c: 1.0, k: 500.0, ..base };
    let thin = loop_energy(&settled_cycle(&JaModel::new(reversible), 2_000.0, 1.0));
    let normal = loop_energy(&settled_cycle(&JaModel::new(base), 2_000.0, 1.0));
    assert!(thin.abs() < 0.01 * normal, "{thin} vs {normal}");
}
