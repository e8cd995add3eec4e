//! Acceptance run: one PASS/FAIL line per criterion, non-zero exit if any fails.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::Instant;

use ll_lab::dynamics::*;
use ll_lab::energetics::*;
use ll_lab::experiments::*;
use ll_lab::fields::{
    magnetization_from_wavefield, renormalize, scaled_energy_identity_residual, wavefield_from_magnetization,
    EpsParam, Magnetization, VectorField,
};
use ll_lab::solitons::*;
use ll_lab::spectral::{sech, ComplexField, Grid, WaveField};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn profiles() -> Vec<SolitonParams> {
    let mut v = Vec::new();
    for lambda in [0.5, 1.0, 4.0] {
        for d in [1.0, -1.0] {
            v.push(SolitonParams::case_i(lambda, d).unwrap());
        }
    }
    // omega < 0 and omega >= 0 branches, both signs of c and delta
    for (l, c, w, d) in [
        (1.0, 1.0, 0.0, 1.0),
        (1.0, 0.0, -0.5, 1.0),
        (2.0, 0.0, 1.0, -1.0),
        (1.0, 0.5, -0.3, 1.0),
        (2.0, 1.5, 0.5, 1.0),
        (0.5, -0.8, 0.2, -1.0),
        (3.0, 2.0, -1.0, -1.0),
    ] {
        v.push(SolitonParams::case_ii(l, c, w, d).unwrap());
    }
    v
}

fn profile_grid(p: &SolitonParams) -> Grid {
    Grid::with_half_width(2048, p.required_half_width()).unwrap()
}

fn soliton_exactness() -> Outcome {
    let mut worst: f64 = 0.0;
    for p in profiles() {
        let m = ll_traveling_wave(&p, 0.0, &profile_grid(&p)).unwrap();
        let (r1, r2) = tw_residual(&m, &p).unwrap();
        worst = worst.max(r1).max(r2);
    }
    let g = Grid::with_half_width(2048, 40.0).unwrap();
    let mut constants: f64 = 0.0;
    for d in [1.0, -1.0] {
        let m = Magnetization::constant(&g, [0.0, d, 0.0]);
        for p in [
            SolitonParams::case_i(1.0, d).unwrap(),
            SolitonParams::case_ii(1.0, 1.0, 0.0, d).unwrap(),
        ] {
            let (r1, r2) = tw_residual(&m, &p).unwrap();
            constants = constants.max(r1).max(r2);
        }
    }
    check(
        worst < 1e-8 && constants == 0.0,
        format!(
            "max residual {worst:.2e} < 1e-8 over {} profiles, constants {constants:e}",
            profiles().len()
        ),
    )
}

fn profile_identities() -> Outcome {
    let (mut worst, mut at_zero): (f64, f64) = (0.0, 0.0);
    for p in profiles() {
        let m = ll_traveling_wave(&p, 0.0, &profile_grid(&p)).unwrap();
        let ids = profile_identity_residuals(&m, &p).unwrap();
        worst = worst.max(ids.gradient).max(ids.momentum).max(ids.v2_derivative);
        if let Some(r) = ids.v2_at_zero {
            at_zero = at_zero.max(r);
        }
    }
    check(
        worst < 1e-8 && at_zero < 1e-10,
        format!("first integrals {worst:.2e} < 1e-8, m2(0) {at_zero:.2e} < 1e-10"),
    )
}

fn traveling_wave_propagation() -> Outcome {
    let r = run_traveling_wave_suite(&StudyConfig::default()).unwrap();
    let p = r.params;
    let wanted = SolitonParams::case_ii(1.0, 1.0, 0.0, 1.0).unwrap();
    check(
        p == wanted && r.t_end == 0.5 && r.deviation < 1e-5 && r.energy_drift < 1e-3,
        format!(
            "L2 deviation {:.2e} < 1e-5, energy drift {:.2e} < 1e-3",
            r.deviation, r.energy_drift
        ),
    )
}

fn nls_eps_oracle() -> Outcome {
    let grid = Grid::with_half_width(512, 40.0).unwrap();
    let (mut err, mut drift): (f64, f64) = (0.0, 0.0);
    for e in [0.1, 0.01] {
        let eps = EpsParam::new(e).unwrap();
        let psi0 = upsilon_eps(0.0, 1.0, eps, 0.0, &grid).unwrap();
        let traj = evolve_nls_eps(&psi0, eps, &IntegratorConfig::new(2e-3, 1.0).with_stride(100)).unwrap();
        let exact = upsilon_eps(0.0, 1.0, eps, 1.0, &grid).unwrap();
        err = err.max(traj.final_state().sub(&exact).unwrap().l2_norm());
        drift = drift.max(traj.max_energy_drift());
    }
    check(
        err < 1e-5 && drift < 1e-6,
        format!("L2 error {err:.2e} < 1e-5, energy drift {drift:.2e} < 1e-6"),
    )
}

/// Composite Simpson rule on [-a, a].
fn simpson(f: impl Fn(f64) -> f64, a: f64, n: usize) -> f64 {
    let h = 2.0 * a / n as f64;
    let mut s = f(-a) + f(a);
    for j in 1..n {
        let w = if j % 2 == 1 { 4.0 } else { 2.0 };
        s += w * f(-a + j as f64 * h);
    }
    s * h / 3.0
}

fn cs_oracle() -> Outcome {
    let p = CsSolitonParams::new(0.0, 1.0).unwrap();
    let grid = Grid::with_half_width(512, 40.0).unwrap();
    let psi0 = cs_bright_soliton(p, 0.0, &grid).unwrap();
    let traj = evolve_cs(&psi0, &IntegratorConfig::new(2e-3, 1.0).with_stride(100)).unwrap();
    let closed = ComplexField::from_fn(&grid, |x| Complex64::from_polar(2.0 * sech(x), 1.0));
    let err = traj.final_state().sub(&closed).unwrap().l2_norm();
    let mass_drift = traj.max_mass_drift().unwrap();
    let energy_drift = traj.max_energy_drift();
    // pointwise closed-form integrands, independent of the spectral derivative
    let q_mass = simpson(|x| 4.0 * sech(x).powi(2), 40.0, 400_000);
    let q_energy = simpson(
        |x| 0.5 * 4.0 * (sech(x) * x.tanh()).powi(2) - 0.25 * 16.0 * sech(x).powi(4),
        40.0,
        400_000,
    );
    let (mass, energy) = cs_invariants(&psi0);
    let inv = (mass - 8.0).abs().max((energy + 4.0).abs());
    let oracle = (q_mass - 8.0).abs().max((q_energy + 4.0).abs());
    check(
        err < 1e-6 && mass_drift < 1e-8 && energy_drift < 1e-6 && inv < 1e-6 && oracle < 1e-6,
        format!(
            "L2 error {err:.2e} < 1e-6, M2 drift {mass_drift:.2e} < 1e-8, E_CS drift {energy_drift:.2e} < 1e-6, \
             (M2, E_CS) = ({mass:.9}, {energy:.9}) quadrature ({q_mass:.9}, {q_energy:.9})"
        ),
    )
}

/// Smooth localized field with random bumps and a random phase profile.
fn random_field(rng: &mut ChaCha8Rng, grid: &Grid, cap: f64) -> WaveField {
    let bumps: Vec<(f64, f64, f64, f64, f64)> = (0..rng.random_range(1..4))
        .map(|_| {
            (
                rng.random_range(-5.0..5.0),
                rng.random_range(0.8..3.0),
                rng.random_range(-2.0..2.0),
                rng.random_range(-2.0..2.0),
                rng.random_range(-1.5..1.5),
            )
        })
        .collect();
    let f = ComplexField::from_fn(grid, |x| {
        bumps
            .iter()
            .map(|&(x0, w, re, im, k)| {
                Complex64::new(re, im) * Complex64::from_polar((-((x - x0) / w).powi(2)).exp(), k * x)
            })
            .sum()
    });
    let peak = f.linf_norm();
    f.scale(Complex64::new(cap * rng.random_range(0.2..1.0) / peak, 0.0))
}

fn consistency_identity() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(20);
    let grid = Grid::with_half_width(256, 20.0).unwrap();
    let mut worst: f64 = 0.0;
    for _ in 0..50 {
        let e = rng.random_range(0.01..0.5);
        let eps = EpsParam::new(e).unwrap();
        let psi = random_field(&mut rng, &grid, 0.85 / f64::sqrt(e));
        worst = worst.max(consistency_residual(&psi, eps).unwrap());
    }
    check(
        worst < 1e-10,
        format!("max modulus residual {worst:.2e} < 1e-10 over 50 fields"),
    )
}

fn energy_hierarchy() -> Outcome {
    let grid = Grid::with_half_width(512, 25.0).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut fields = vec![ComplexField::from_fn(&grid, |x| {
        Complex64::new(1.3 * sech(x), 0.5 * (-(x - 1.0).powi(2)).exp())
            * Complex64::from_polar(1.0, 0.7 * x.tanh())
    })];
    for _ in 0..3 {
        fields.push(random_field(&mut rng, &grid, 2.0));
    }
    let (mut identity, mut bounds_ok, mut variation): (f64, bool, f64) = (0.0, true, 1.0);
    for psi in &fields {
        let mut ratios = vec![Vec::new(); 5];
        for e in [0.1, 0.01, 0.001] {
            let eps = EpsParam::new(e).unwrap();
            let a = AnisotropyParams::from_eps(eps);
            let m = magnetization_from_wavefield(psi, eps, 0.0).unwrap();
            let dtm = ll_rhs(&m, &a).unwrap();
            let dtpsi = nls_eps_rhs(psi, eps).unwrap();
            let base = nls_energy_eps(psi, eps).unwrap();
            identity = identity.max((landau_lifshitz_energy(&m, &a).unwrap() - base).abs() / base);
            for l in 2..=5 {
                let rhs = frak_e_k(psi, &dtpsi, eps, l).unwrap();
                identity = identity.max((e * e_ll_k(&m, &dtm, l, &a).unwrap() - rhs).abs() / rhs);
            }
            for l in 1..=5 {
                let chk = norm_equivalence_check(psi, &dtpsi, eps, l).unwrap();
                bounds_ok &= chk.lower_bound_holds;
                ratios[l - 1].push(chk.ratio);
            }
        }
        for r in &ratios {
            let hi = r.iter().cloned().fold(0.0, f64::max);
            let lo = r.iter().cloned().fold(f64::INFINITY, f64::min);
            variation = variation.max(hi / lo);
        }
    }
    check(
        identity < 1e-10 && bounds_ok && variation < 2.0,
        format!(
            "scaling identities {identity:.2e} < 1e-10, lower bounds {}, ratio variation {variation:.3} < 2",
            if bounds_ok { "hold" } else { "violated" }
        ),
    )
}

fn convergence_rate() -> Outcome {
    let base = StudyConfig::default();
    let sech2 = InitialData::Sech {
        amplitude: 2.0,
        width: 1.0,
        velocity: 0.0,
    };
    assert_eq!(base.initial_data, sech2);
    assert_eq!((base.k, base.integrator.t_end), (3, 0.5));
    assert_eq!(base.eps_list, vec![0.1, 0.05, 0.025, 0.0125]);
    let r = run_convergence_study(&base).unwrap();
    let fine_grid = run_convergence_study(&StudyConfig {
        grid: GridSpec {
            n: 2 * base.grid.n,
            ..base.grid
        },
        ..base.clone()
    })
    .unwrap();
    let mut icfg = base.integrator;
    icfg.dt /= 2.0;
    let fine_dt = run_convergence_study(&StudyConfig {
        integrator: icfg,
        ..base.clone()
    })
    .unwrap();
    let s = r.fitted_slope;
    let spread = (fine_grid.fitted_slope - s)
        .abs()
        .max((fine_dt.fitted_slope - s).abs());
    check(
        (0.85..=1.15).contains(&s) && spread <= 0.02,
        format!(
            "slope {s:.4} in [0.85, 1.15], refined n {:.4}, refined dt {:.4}, spread {spread:.1e} <= 0.02",
            fine_grid.fitted_slope, fine_dt.fitted_slope
        ),
    )
}

fn soliton_constant() -> Outcome {
    let mut parts = Vec::new();
    let mut ok = true;
    for (c, omega) in [(0.0, 1.0), (1.0, 1.0)] {
        let r = run_soliton_convergence(&StudyConfig {
            eps_list: vec![1e-2, 1e-3, 1e-4],
            k: 3,
            soliton: CsSolitonParams::new(c, omega).unwrap(),
            ..StudyConfig::default()
        })
        .unwrap();
        let row = &r.rows[1];
        let w = row.limit_constant.unwrap();
        let dev = (row.error_over_eps - w).abs() / w;
        let monotone = r.monotone.unwrap();
        ok &= dev < 0.05 && monotone;
        parts.push(format!(
            "(c={c}, w={omega}) error/eps {:.4} vs |W|_H3 {w:.4}, deviation {dev:.1e}, monotone {monotone}",
            row.error_over_eps
        ));
    }
    check(ok, parts.join("; "))
}

fn order_estimates(errors: &[f64]) -> Vec<f64> {
    errors.windows(2).map(|w| (w[0] / w[1]).log2()).collect()
}

fn structural_properties() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let grid = Grid::with_half_width(256, 20.0).unwrap();

    // tangency and gauge invariance on random sphere fields
    let (mut tangency, mut gauge): (f64, f64) = (0.0, 0.0);
    for _ in 0..20 {
        let psi = random_field(&mut rng, &grid, 2.0);
        let m = renormalize(&Magnetization::from_vector(VectorField::from_fn(&grid, |x| {
            let j = grid.node_index(x);
            let z = psi.values()[j];
            [z.re, 1.0, z.im]
        })))
        .unwrap();
        let a = AnisotropyParams::new(rng.random_range(0.0..10.0), rng.random_range(0.0..10.0)).unwrap();
        let dm = ll_rhs(&m, &a).unwrap();
        let scale = dm.linf_norm().max(1.0);
        tangency = tangency.max(m.dot(&dm).unwrap().iter().fold(0.0_f64, |w, d| w.max(d.abs())) / scale);
        let h = effective_field(&m, &a).unwrap();
        let c = rng.random_range(-5.0..5.0);
        let shifted = precession_rhs(&m, &h.add_scaled(&m, c).unwrap()).unwrap();
        gauge = gauge.max(shifted.sub(&dm).unwrap().linf_norm() / scale);
    }

    // mapping round trip
    let mut roundtrip: f64 = 0.0;
    for _ in 0..20 {
        let e = rng.random_range(0.01..0.9);
        let eps = EpsParam::new(e).unwrap();
        let psi = random_field(&mut rng, &grid, 0.85 / f64::sqrt(e));
        let t = rng.random_range(-2.0..2.0);
        let m = magnetization_from_wavefield(&psi, eps, t).unwrap();
        let back = wavefield_from_magnetization(&m, eps, t).unwrap();
        roundtrip = roundtrip.max(back.sub(&psi).unwrap().linf_norm() / psi.linf_norm());
    }

    // pointwise energy identity on independently built soliton pairs
    let mut energy_pair: f64 = 0.0;
    for (c, omega, e) in [
        (0.0, 1.0, 0.1),
        (0.0, 1.0, 0.01),
        (1.0, 1.0, 0.1),
        (0.5, 1.0, 0.01),
    ] {
        let eps = EpsParam::new(e).unwrap();
        let p = scaled_soliton_params(c, omega, eps).unwrap();
        let cs = CsSolitonParams::new(c, omega).unwrap();
        let t = 0.3;
        let half = p.required_half_width().max(cs.required_half_width()) + c * t + 2.0;
        let g = Grid::with_half_width(1024, half).unwrap();
        let m = ll_traveling_wave(&p, t, &g).unwrap();
        let psi = upsilon_eps(c, omega, eps, t, &g).unwrap();
        energy_pair = energy_pair.max(scaled_energy_identity_residual(&m, &psi, eps).unwrap());
    }

    // fourth-order self-convergence of every integrator
    let eps = EpsParam::new(0.1).unwrap();
    let coarse = Grid::with_half_width(64, 15.0).unwrap();
    let psi0 = ComplexField::from_fn(&coarse, |x| {
        Complex64::new(1.5 * sech(x), 0.3 * sech(x) * x.tanh())
    });
    let t_end = 0.4;
    let dts = [0.02, 0.01, 0.005, 0.0025];
    let cfg = |dt: f64, s: Scheme| {
        IntegratorConfig::new(dt, t_end)
            .with_scheme(s)
            .with_max_energy_drift(None)
    };
    let self_convergence = |run: &dyn Fn(f64) -> Vec<f64>| {
        let r = run(dts[3] / 8.0);
        let errs: Vec<f64> = dts
            .iter()
            .map(|&dt| {
                let v = run(dt);
                v.iter().zip(&r).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt()
            })
            .collect();
        order_estimates(&errs)
    };
    let flatten = |f: &WaveField| f.values().iter().flat_map(|z| [z.re, z.im]).collect::<Vec<f64>>();
    let mut orders = Vec::new();
    for s in [Scheme::Ifrk4, Scheme::Rk4] {
        orders.push((
            format!("nlse/{s:?}"),
            self_convergence(&|dt| flatten(evolve_nls_eps(&psi0, eps, &cfg(dt, s)).unwrap().final_state())),
        ));
        orders.push((
            format!("cs/{s:?}"),
            self_convergence(&|dt| flatten(evolve_cs(&psi0, &cfg(dt, s)).unwrap().final_state())),
        ));
    }
    let a = AnisotropyParams::from_eps(eps);
    let m0 = magnetization_from_wavefield(&psi0, eps, 0.0).unwrap();
    orders.push((
        "ll/Rk4".into(),
        self_convergence(&|dt| {
            let m = evolve_ll(&m0, &a, &cfg(dt, Scheme::Rk4))
                .unwrap()
                .final_state()
                .clone();
            m.into_vector().into_comps().concat()
        }),
    ));
    let fourth = orders
        .iter()
        .all(|(_, q)| q.iter().all(|q| (3.7..4.3).contains(q)));
    let lowest = orders
        .iter()
        .flat_map(|(_, q)| q.iter().cloned())
        .fold(f64::INFINITY, f64::min);

    check(
        tangency < 1e-12 && gauge < 1e-12 && roundtrip < 1e-12 && energy_pair < 1e-8 && fourth,
        format!(
            "tangency {tangency:.1e}, gauge {gauge:.1e}, round trip {roundtrip:.1e} < 1e-12, \
             energy identity {energy_pair:.1e} < 1e-8, lowest order {lowest:.2} over {} integrators",
            orders.len()
        ),
    )
}

fn main() {
    let criteria: [Criterion; 10] = [
        ("soliton exactness", soliton_exactness),
        ("profile identities", profile_identities),
        ("traveling-wave propagation", traveling_wave_propagation),
        ("NLS_eps exact-solution oracle", nls_eps_oracle),
        ("cubic Schrodinger oracle", cs_oracle),
        ("consistency identity", consistency_identity),
        ("energy-hierarchy identities", energy_hierarchy),
        ("O(eps) convergence rate", convergence_rate),
        ("soliton rate and constant", soliton_constant),
        ("structural properties", structural_properties),
    ];
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|e| {
            let msg = e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            Err(format!("panicked: {msg}"))
        });
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("criterion {} {name}: PASS ({detail}) [{secs:.1}s]", i + 1),
            Err(detail) => {
                failed += 1;
                println!("criterion {} {name}: FAIL ({detail}) [{secs:.1}s]", i + 1);
            }
        }
    }
    println!(
        "acceptance: {}/{} criteria passed",
        criteria.len() - failed,
        criteria.len()
    );
    if failed > 0 {
        std::process::exit(1);
    }
}
