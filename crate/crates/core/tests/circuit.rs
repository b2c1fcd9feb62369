use inrush::circuit::*;

fn short_cfg() -> CircuitConfig {
    let mut cfg = CircuitConfig::default();
    cfg.simulation.ringdown = 0.05;
    cfg.simulation.energization = 0.06;
    cfg
}

fn rms(v: &[f64]) -> f64 {
    (v.iter().map(|x| x * x).sum::<f64>() / v.len() as f64).sqrt()
}

#[test]
fn steady_flux_matches_faraday_integral_of_winding_voltage() {
    let cfg = CircuitConfig::default();
    let ss = steady_state(&cfg).unwrap();
    let phi_nom = nominal_peak_flux(&cfg);
    for k in 0..3 {
        let phi = integrate_flux(&ss.last_cycle.voltage[k], cfg.simulation.dt, cfg.n_turns);
        let hi = phi.iter().cloned().fold(f64::MIN, f64::max);
        let lo = phi.iter().cloned().fold(f64::MAX, f64::min);
        let amplitude = 0.5 * (hi - lo);
        assert!((amplitude - phi_nom).abs() < 0.02 * phi_nom, "leg {k}: {amplitude} vs {phi_nom}");
        assert!((ss.flux_peak[k] - phi_nom).abs() < 0.02 * phi_nom);
    }
}

#[test]
fn steady_current_rms_converges_in_dt() {
    let cfg = CircuitConfig::default();
    let a = steady_state(&cfg).unwrap();
    let b = steady_state(&cfg.with_dt(cfg.simulation.dt / 2.0)).unwrap();
    let ra = rms(&a.last_cycle.current[0]);
    let rb = rms(&b.last_cycle.current[0]);
    assert!((ra - rb).abs() < 0.01 * rb, "{ra} vs {rb}");
}

#[test]
fn energization_trace_converges_at_second_order() {
    let mut cfg = CircuitConfig::default();
    cfg.simulation.energization = 0.04;
    let phi_nom = nominal_peak_flux(&cfg);
    let remanent = [0.3 * phi_nom, -0.2 * phi_nom, -0.1 * phi_nom];
    let trace = |dt: f64| {
        let r = simulate_energization(&cfg.with_dt(dt), remanent, 75.0).unwrap();
        r.waveform
    };
    let dt = 20e-6;
    let coarse = trace(dt);
    let mid = trace(dt / 2.0);
    let fine = trace(dt / 4.0);
    let err = |w: &Waveform, stride: usize| {
        let mut e = 0.0f64;
        for (i, _) in coarse.t.iter().enumerate() {
            for k in 0..3 {
                e = e.max((w.current[k][i * stride] - fine.current[k][i * 4]).abs());
            }
        }
        e
    };
    let e1 = err(&coarse, 1);
    let e2 = err(&mid, 2);
    assert!(e1 / e2 >= 1.8, "{e1} / {e2} = {}", e1 / e2);
}

#[test]
fn remanence_map_is_periodic_and_balanced() {
    let cfg = short_cfg();
    let d = Deenergizer::new(&cfg).unwrap();
    let phi_nom = nominal_peak_flux(&cfg);
    let r0 = d.open(0.0).unwrap().fluxes;
    let r360 = d.open(360.0).unwrap().fluxes;
    assert_eq!(r0, r360);
    for theta in [0.0, 45.0, 97.0, 181.0, 270.0, 333.0] {
        let r = d.open(theta).unwrap();
        let sum: f64 = r.fluxes.iter().sum();
        assert!(sum.abs() < 0.05 * phi_nom, "θ = {theta}: {sum}");
        assert!(r.fluxes.iter().all(|f| f.abs() <= 1.1 * phi_nom));
        assert!(r.clearing_delay.iter().all(|&c| c > 0.0 && c < 2.0 / cfg.f));
    }
}

#[test]
fn open_pole_carries_exactly_zero_current() {
    let cfg = short_cfg();
    let solver = Solver::new(&cfg).unwrap();
    let ss = steady_state(&cfg).unwrap();
    let src = SourceVoltages::rated(&cfg, 0.0);
    let mut st = ss.state.clone();
    st = solver
        .step_with_poles(&st, src.at(st.t + solver.dt()), [false, true, true])
        .unwrap();
    for n in 0..2000 {
        let poles = if n < 500 { [false, true, true] } else { [false; 3] };
        st = solver.step_with_poles(&st, src.at(st.t + solver.dt()), poles).unwrap();
        for k in 0..3 {
            if !poles[k] {
                assert_eq!(st.source_current[k], 0.0);
            }
        }
    }
}

#[test]
fn energization_peak_bounds_and_symmetry() {
    let cfg = short_cfg();
    let ss = steady_state(&cfg).unwrap();
    let e = Energizer::new(&cfg).unwrap();
    let phi_nom = nominal_peak_flux(&cfg);
    let remanent = [0.2 * phi_nom, -0.25 * phi_nom, 0.05 * phi_nom];
    let a = e.peak(remanent, 40.0).unwrap();
    let b = e.peak(remanent, 400.0).unwrap();
    let c = e.peak(remanent, -320.0).unwrap();
    assert_eq!(a.to_bits(), b.to_bits());
    assert_eq!(a.to_bits(), c.to_bits());
    assert!(a >= ss.magnetizing_peak_pu(&cfg));
    assert!(e.peak([0.0; 3], 0.0).unwrap() >= ss.magnetizing_peak_pu(&cfg));
}

#[test]
fn flux_is_continuous_across_closing() {
    let cfg = short_cfg();
    let phi_nom = nominal_peak_flux(&cfg);
    let remanent = [0.3 * phi_nom, -0.1 * phi_nom, -0.2 * phi_nom];
    let r = simulate_energization(&cfg, remanent, 200.0).unwrap();
    let v_max = cfg.v_primary * 2f64.sqrt() * 1.2;
    let bound = v_max * cfg.simulation.dt / cfg.n_turns as f64;
    for k in 0..3 {
        assert!((r.waveform.flux[k][0] - remanent[k]).abs() < 1e-12);
        assert!((r.waveform.flux[k][1] - remanent[k]).abs() < bound);
    }
}

#[test]
fn simulations_are_deterministic() {
    let cfg = short_cfg();
    let phi_nom = nominal_peak_flux(&cfg);
    let remanent = [0.1 * phi_nom, 0.1 * phi_nom, -0.2 * phi_nom];
    let a = simulate_energization(&cfg, remanent, 17.0).unwrap();
    let b = simulate_energization(&cfg, remanent, 17.0).unwrap();
    assert_eq!(a.waveform, b.waveform);
    assert_eq!(a.i_max_pu.to_bits(), b.i_max_pu.to_bits());
}

#[test]
fn out_of_range_remanence_is_rejected() {
    let cfg = short_cfg();
    let phi_nom = nominal_peak_flux(&cfg);
    let err = simulate_energization(&cfg, [1.2 * phi_nom, -0.6 * phi_nom, -0.6 * phi_nom], 0.0).unwrap_err();
    assert!(matches!(err, CircuitError::RemanenceOutOfRange { .. }));
    assert!(matches!(
        simulate_energization(&cfg, [0.0; 3], f64::NAN).unwrap_err(),
        CircuitError::InvalidAngle(_)
    ));
}

#[test]
fn prospective_fluxes_follow_the_winding_phases() {
    let cfg = CircuitConfig::default();
    let phi_nom = nominal_peak_flux(&cfg);
    for theta in [0.0f64, 33.0, 147.0, 290.0] {
        let p = prospective_fluxes(&cfg, theta);
        let expect = [
            (theta - 60.0).to_radians().sin(),
            (theta + 60.0).to_radians().sin(),
            (theta + 180.0).to_radians().sin(),
        ];
        for j in 0..3 {
            assert!((p[j] - phi_nom * expect[j]).abs() < 1e-12);
        }
    }
}
