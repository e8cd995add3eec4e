use ll_lab::dynamics::*;
use ll_lab::energetics::cs_invariants;
use ll_lab::fields::{magnetization_from_wavefield, EpsParam, Magnetization};
use ll_lab::solitons::*;
use ll_lab::spectral::{sech, ComplexField, Grid, WaveField};
use num_complex::Complex64;

fn wave_gap(a: &WaveField, b: &WaveField) -> f64 {
    a.sub(b).unwrap().l2_norm()
}

fn mag_gap(a: &Magnetization, b: &Magnetization) -> f64 {
    a.sub(b).unwrap().l2_norm()
}

#[test]
fn ll_traveling_wave_propagates() {
    let p = SolitonParams::case_ii(1.0, 1.0, 0.0, 1.0).unwrap();
    let grid = Grid::with_half_width(1024, p.required_half_width() + 1.0).unwrap();
    let a = AnisotropyParams::uniform(1.0).unwrap();
    let m0 = ll_traveling_wave(&p, 0.0, &grid).unwrap();
    let bound = ll_stability_bound(&grid, &a);
    let cfg = IntegratorConfig::new(0.9 * bound, 0.5).with_stride(1000);
    let traj = evolve_ll(&m0, &a, &cfg).unwrap();
    let exact = ll_traveling_wave(&p, 0.5, &grid).unwrap();
    let err = mag_gap(traj.final_state(), &exact);
    assert!(err < 1e-5);
    assert!(traj.max_energy_drift() < 1e-3);
}

#[test]
fn ll_case_i_soliton_is_stationary() {
    let grid = Grid::with_half_width(1024, 50.0).unwrap();
    let a = AnisotropyParams::uniform(1.0).unwrap();
    let m0 = ll_soliton_case_i(1.0, 1.0, &grid).unwrap();
    let cfg = IntegratorConfig::new(0.9 * ll_stability_bound(&grid, &a), 0.2);
    let traj = evolve_ll(&m0, &a, &cfg).unwrap();
    let err = mag_gap(traj.final_state(), &m0);
    assert!(err < 1e-6);
}

#[test]
fn nls_eps_reproduces_upsilon() {
    for eps in [0.1, 0.01] {
        let eps = EpsParam::new(eps).unwrap();
        let grid = Grid::with_half_width(512, 40.0).unwrap();
        let psi0 = upsilon_eps(0.0, 1.0, eps, 0.0, &grid).unwrap();
        let cfg = IntegratorConfig::new(2e-3, 1.0).with_stride(100);
        let traj = evolve_nls_eps(&psi0, eps, &cfg).unwrap();
        let exact = upsilon_eps(0.0, 1.0, eps, 1.0, &grid).unwrap();
        let err = wave_gap(traj.final_state(), &exact);
        assert!(err < 1e-5);
        assert!(traj.max_energy_drift() < 1e-6);
    }
}

#[test]
fn cs_reproduces_bright_soliton() {
    let p = CsSolitonParams::new(0.0, 1.0).unwrap();
    let grid = Grid::with_half_width(512, 40.0).unwrap();
    let psi0 = cs_bright_soliton(p, 0.0, &grid).unwrap();
    let cfg = IntegratorConfig::new(2e-3, 1.0).with_stride(100);
    let traj = evolve_cs(&psi0, &cfg).unwrap();
    let exact = cs_bright_soliton(p, 1.0, &grid).unwrap();
    let err = wave_gap(traj.final_state(), &exact);
    assert!(err < 1e-6);
    assert!(traj.max_mass_drift().unwrap() < 1e-8);
    assert!(traj.max_energy_drift() < 1e-6);
    let (mass, energy) = cs_invariants(&psi0);
    assert!((mass - 8.0).abs() < 1e-6 && (energy + 4.0).abs() < 1e-6);
}

#[test]
fn moving_cs_soliton() {
    let p = CsSolitonParams::new(1.0, 1.0).unwrap();
    let grid = Grid::with_half_width(512, p.required_half_width() + 2.0).unwrap();
    let psi0 = cs_bright_soliton(p, 0.0, &grid).unwrap();
    let cfg = IntegratorConfig::new(2e-3, 1.0);
    let traj = evolve_cs(&psi0, &cfg).unwrap();
    let exact = cs_bright_soliton(p, 1.0, &grid).unwrap();
    assert!(wave_gap(traj.final_state(), &exact) < 1e-6);
}

#[test]
fn nls_eps_matches_ll_through_the_mapping() {
    let eps = EpsParam::new(0.1).unwrap();
    let grid = Grid::with_half_width(256, 20.0).unwrap();
    let psi0 = ComplexField::from_fn(&grid, |x| {
        Complex64::new(1.2 * (-x * x / 4.0).exp(), 0.4 * x * (-x * x / 3.0).exp())
    });
    let a = AnisotropyParams::from_eps(eps);
    let m0 = magnetization_from_wavefield(&psi0, eps, 0.0).unwrap();
    let t_end = 0.3;
    let dt = 0.25 * ll_stability_bound(&grid, &a);
    let ll = evolve_ll(&m0, &a, &IntegratorConfig::new(dt, t_end)).unwrap();
    let nls = evolve_nls_eps(&psi0, eps, &IntegratorConfig::new(dt, t_end)).unwrap();
    let mapped = magnetization_from_wavefield(nls.final_state(), eps, t_end).unwrap();
    let gap = mag_gap(ll.final_state(), &mapped);
    assert!(gap < 1e-8);
}

#[test]
fn cs_time_reversal() {
    let grid = Grid::with_half_width(256, 20.0).unwrap();
    let psi0 = ComplexField::from_fn(&grid, |x| Complex64::new(1.5 * sech(x), 0.5 * (-x * x).exp()));
    let cfg = IntegratorConfig::new(1e-3, 0.5).with_max_energy_drift(None);
    let fwd = evolve_cs(&psi0, &cfg).unwrap();
    let back0 = fwd.final_state().map(|z| z.conj());
    let back = evolve_cs(&back0, &cfg).unwrap();
    let gap = wave_gap(&back.final_state().map(|z| z.conj()), &psi0);
    assert!(gap < 1e-9);
}

fn order_estimate(errors: &[f64]) -> Vec<f64> {
    errors.windows(2).map(|w| (w[0] / w[1]).log2()).collect()
}

#[test]
fn integrators_are_fourth_order() {
    let eps = EpsParam::new(0.1).unwrap();
    // coarse enough that the explicit schemes are stable at the largest step
    let grid = Grid::with_half_width(64, 15.0).unwrap();
    let psi0 = ComplexField::from_fn(&grid, |x| Complex64::new(1.5 * sech(x), 0.3 * sech(x) * x.tanh()));
    let t_end = 0.4;
    let dts = [0.02, 0.01, 0.005, 0.0025];
    let reference = |scheme: Scheme, f: &dyn Fn(IntegratorConfig) -> WaveField| {
        let r = f(IntegratorConfig::new(dts[3] / 8.0, t_end)
            .with_scheme(scheme)
            .with_max_energy_drift(None));
        let errs: Vec<f64> = dts
            .iter()
            .map(|&dt| {
                wave_gap(
                    &f(IntegratorConfig::new(dt, t_end)
                        .with_scheme(scheme)
                        .with_max_energy_drift(None)),
                    &r,
                )
            })
            .collect();
        errs
    };
    for scheme in [Scheme::Ifrk4, Scheme::Rk4] {
        let errs = reference(scheme, &|cfg| {
            evolve_nls_eps(&psi0, eps, &cfg).unwrap().final_state().clone()
        });
        let orders = order_estimate(&errs);
        assert!(
            orders.iter().all(|q| (3.7..4.3).contains(q)),
            "nls {scheme:?} {errs:?}"
        );
        let errs = reference(scheme, &|cfg| {
            evolve_cs(&psi0, &cfg).unwrap().final_state().clone()
        });
        let orders = order_estimate(&errs);
        assert!(
            orders.iter().all(|q| (3.7..4.3).contains(q)),
            "cs {scheme:?} {errs:?}"
        );
    }

    let a = AnisotropyParams::from_eps(eps);
    let m0 = magnetization_from_wavefield(&psi0, eps, 0.0).unwrap();
    let run = |dt: f64| {
        evolve_ll(&m0, &a, &IntegratorConfig::new(dt, t_end))
            .unwrap()
            .final_state()
            .clone()
    };
    let r = run(dts[3] / 8.0);
    let errs: Vec<f64> = dts.iter().map(|&dt| mag_gap(&run(dt), &r)).collect();
    let orders = order_estimate(&errs);
    assert!(orders.iter().all(|q| (3.7..4.3).contains(q)), "ll {errs:?}");
}

#[test]
fn second_order_form_on_exact_waves() {
    for (c, omega, e) in [(0.5, 1.0, 0.5), (0.0, 1.0, 0.1), (1.0, 1.0, 0.2)] {
        let eps = EpsParam::new(e).unwrap();
        let p = scaled_soliton_params(c, omega, eps).unwrap();
        let grid = Grid::with_half_width(1024, p.required_half_width() + 2.0).unwrap();
        for t in [0.0, 0.3] {
            let m = ll_traveling_wave(&p, t, &grid).unwrap();
            let (_, dtt) = traveling_wave_time_derivatives(&p, t, &grid).unwrap();
            let r = second_order_residual(&m, &dtt, eps).unwrap();
            assert!(r < 1e-8, "c={c} eps={e} t={t}: {r:.3e}");
            // A wrong time derivative is detected.
            let off = second_order_residual(&m, &dtt.scale(1.01), eps).unwrap();
            assert!(off > 1e-4);
        }
    }
}

#[test]
fn second_order_form_along_a_trajectory() {
    let eps = EpsParam::new(0.5).unwrap();
    let p = scaled_soliton_params(0.5, 1.0, eps).unwrap();
    let grid = Grid::with_half_width(512, p.required_half_width() + 2.0).unwrap();
    let a = AnisotropyParams::from_eps(eps);
    let m0 = ll_traveling_wave(&p, 0.0, &grid).unwrap();
    let mut residuals = Vec::new();
    for stride in [8, 4] {
        let cfg = IntegratorConfig::new(2.5e-4, 0.01).with_stride(stride);
        let traj = evolve_ll(&m0, &a, &cfg).unwrap();
        residuals.push(f_eps_residual(&traj, eps, 2).unwrap());
        assert!(f_eps_residual(&traj, eps, 0).is_err());
        assert!(f_eps_residual(&traj, eps, traj.states.len() - 1).is_err());
    }
    // centred differences: halving the spacing quarters the residual
    let ratio = residuals[0] / residuals[1];
    assert!(residuals[1] < 1e-3, "{residuals:?}");
    assert!((3.0..5.0).contains(&ratio), "{residuals:?}");
}

#[test]
fn ll_rejects_integrating_factor_scheme() {
    let grid = Grid::with_half_width(64, 10.0).unwrap();
    let a = AnisotropyParams::uniform(1.0).unwrap();
    let cfg = IntegratorConfig::new(1e-3, 0.01).with_scheme(Scheme::Ifrk4);
    assert!(matches!(
        evolve_ll(&Magnetization::e2(&grid), &a, &cfg),
        Err(ll_lab::Error::InvalidConfig(_))
    ));
}

#[test]
fn validity_breach_aborts_with_report() {
    let eps = EpsParam::new(0.1).unwrap();
    let grid = Grid::with_half_width(512, 20.0).unwrap();
    // far above the soliton amplitude for this width, so it focuses
    let psi0 = ComplexField::from_fn(&grid, |x| Complex64::new(2.8 * sech(0.5 * x), 0.0));
    let cfg = IntegratorConfig::new(2e-4, 1.0).with_max_energy_drift(None);
    match evolve_nls_eps(&psi0, eps, &cfg) {
        Err(ll_lab::Error::Aborted(report)) => {
            assert_eq!(report.equation, "nlse");
            assert!(matches!(
                report.reason,
                ll_lab::AbortReason::ValidityBreach { .. }
            ));
            assert!(report.t > 0.0 && report.t < 1.0);
        }
        Ok(_) => panic!("expected a validity abort"),
        Err(e) => panic!("expected a validity abort, got {e}"),
    }
    // initial data already past the cap is rejected up front
    let big = psi0.scale(Complex64::new(1.2, 0.0));
    assert!(matches!(
        evolve_nls_eps(&big, eps, &cfg),
        Err(ll_lab::Error::Validity { .. })
    ));
}

#[test]
fn energy_drift_aborts_with_report() {
    let grid = Grid::with_half_width(256, 20.0).unwrap();
    let psi0 = ComplexField::from_fn(&grid, |x| Complex64::new(2.0 * sech(x), 0.0));
    let cfg = IntegratorConfig::new(0.5, 2.0).with_max_energy_drift(Some(1e-12));
    match evolve_cs(&psi0, &cfg) {
        Err(ll_lab::Error::Aborted(report)) => {
            assert!(matches!(report.reason, ll_lab::AbortReason::EnergyDrift { .. }));
            assert_eq!(report.step, 0);
        }
        Ok(_) => panic!("expected an energy abort"),
        Err(e) => panic!("expected an energy abort, got {e}"),
    }
}
