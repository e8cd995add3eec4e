//! Time integration of the Landau-Lifshitz equation, its Schrodinger-type
//! reformulation NLS_eps and the cubic Schrodinger equation, together with
//! the consistency remainder and the second-order residual diagnostic.
//!
//! Sign convention. With `lambda1 = J2 - J1`, `lambda3 = J2 - J3`, the
//! Landau-Lifshitz flow implemented here is
//!
//! ```text
//! d_t m = -m x (m'' - lambda1 m1 e1 - lambda3 m3 e3)
//! ```
//!
//! which is the choice under which the traveling-wave profiles of
//! [`crate::solitons`] propagate exactly and under which
//! `Psi_eps = eps^{-1/2}(m1 + i m3) e^{it/eps}` obeys the focusing NLS_eps
//! equation below. The linear frequency around `e2` is `kappa^2 + lambda`.
//!
//! NLS_eps, with `m2 = (1 - eps|psi|^2)^{1/2}`:
//!
//! ```text
//! d_t psi = i [ m2 psi'' + |psi|^2 psi / (1 + m2) + eps (<psi, psi'> / m2)' psi ]
//! ```
//!
//! Cubic Schrodinger: `d_t psi = i psi'' + (i/2)|psi|^2 psi`.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::energetics::{cs_invariants, landau_lifshitz_energy, nls_energy_eps};
use crate::error::{AbortReason, AbortReport, Error, Result};
use crate::fields::{
    check_validity, cross3, m2_and_defect, renormalize, EpsParam, Magnetization, TangentField, VectorField,
    DEFAULT_VALIDITY_SIGMA,
};
use crate::spectral::{ComplexField, Grid, RealField, WaveField};

/// Largest `|z|` on the imaginary axis for which classical RK4 is stable,
/// rounded down.
pub const RK4_STABILITY_RADIUS: f64 = 2.8;

/// Default abort threshold on the relative drift of the conserved energy.
pub const DEFAULT_MAX_ENERGY_DRIFT: f64 = 1e-3;

/// Anisotropy constants `lambda1, lambda3 >= 0`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnisotropyParams {
    pub lambda1: f64,
    pub lambda3: f64,
}

impl AnisotropyParams {
    pub fn new(lambda1: f64, lambda3: f64) -> Result<Self> {
        if lambda1 >= 0.0 && lambda3 >= 0.0 && lambda1.is_finite() && lambda3.is_finite() {
            Ok(Self { lambda1, lambda3 })
        } else {
            Err(Error::InvalidConfig(format!(
                "anisotropy constants must be non-negative, got ({lambda1}, {lambda3})"
            )))
        }
    }

    pub fn uniform(lambda: f64) -> Result<Self> {
        Self::new(lambda, lambda)
    }

    /// `lambda1 = lambda3 = 1 / eps`.
    pub fn from_eps(eps: EpsParam) -> Self {
        Self {
            lambda1: eps.lambda(),
            lambda3: eps.lambda(),
        }
    }

    pub fn max(&self) -> f64 {
        self.lambda1.max(self.lambda3)
    }
}

/// `h = m'' - lambda1 m1 e1 - lambda3 m3 e3`.
pub fn effective_field(m: &Magnetization, a: &AnisotropyParams) -> Result<VectorField> {
    let lap = m.derivative(2)?;
    let [mut h1, h2, mut h3] = lap.into_comps();
    for (h, v) in h1.iter_mut().zip(m.m1()) {
        *h -= a.lambda1 * v;
    }
    for (h, v) in h3.iter_mut().zip(m.m3()) {
        *h -= a.lambda3 * v;
    }
    VectorField::new(m.grid().clone(), h1, h2, h3)
}

/// `-m x h`.
pub fn precession_rhs(m: &Magnetization, h: &VectorField) -> Result<TangentField> {
    m.zip_pointwise(h, |a, b| {
        let c = cross3(a, b);
        [-c[0], -c[1], -c[2]]
    })
}

/// Right-hand side of the Landau-Lifshitz equation.
pub fn ll_rhs(m: &Magnetization, a: &AnisotropyParams) -> Result<TangentField> {
    precession_rhs(m, &effective_field(m, a)?)
}

// ---------------------------------------------------------------------------
// Schrodinger right-hand sides

/// `i [ (m2 - 1) psi'' + |psi|^2 psi / (1 + m2) + eps (<psi, psi'>/m2)' psi ]`,
/// the part of NLS_eps left after removing `i psi''`. Also returns `psi''`.
fn nls_eps_split(psi: &[Complex64], grid: &Grid, eps: f64) -> (Vec<Complex64>, Vec<Complex64>) {
    let f = ComplexField::from_parts(grid, psi.to_vec());
    let (d1, d2) = f.first_two_derivatives();
    let n = grid.n();
    let mut m2 = Vec::with_capacity(n);
    let mut defect = Vec::with_capacity(n);
    let mut g = Vec::with_capacity(n);
    for (&p, dp) in psi.iter().zip(d1.values()) {
        let (a, b) = m2_and_defect(p, eps);
        m2.push(a);
        defect.push(b);
        g.push(Complex64::new((p * dp.conj()).re / a, 0.0));
    }
    let dg = ComplexField::from_parts(grid, g)
        .derivative(1)
        .expect("order 1 is in range");
    let i = Complex64::new(0.0, 1.0);
    let out = (0..n)
        .map(|j| {
            let p = psi[j];
            i * (-defect[j] * d2.values()[j] + p * (p.norm_sqr() / (1.0 + m2[j]) + eps * dg.values()[j].re))
        })
        .collect();
    (out, d2.into_values())
}

fn cs_nonlinear(psi: &[Complex64]) -> Vec<Complex64> {
    psi.iter()
        .map(|&p| Complex64::new(0.0, 0.5 * p.norm_sqr()) * p)
        .collect()
}

/// `d_t psi` from NLS_eps. Requires `eps^{1/2} max|psi|` within the default
/// validity cap.
pub fn nls_eps_rhs(psi: &WaveField, eps: EpsParam) -> Result<WaveField> {
    check_validity(psi, eps, DEFAULT_VALIDITY_SIGMA)?;
    let (nl, d2) = nls_eps_split(psi.values(), psi.grid(), eps.value());
    let i = Complex64::new(0.0, 1.0);
    Ok(ComplexField::from_parts(
        psi.grid(),
        nl.iter().zip(&d2).map(|(a, b)| a + i * b).collect(),
    ))
}

/// `d_t psi = i psi'' + (i/2)|psi|^2 psi`.
pub fn cs_rhs(psi: &WaveField) -> WaveField {
    let d2 = psi.derivative(2).expect("order 2 is in range");
    let i = Complex64::new(0.0, 1.0);
    ComplexField::from_parts(
        psi.grid(),
        d2.values()
            .iter()
            .zip(cs_nonlinear(psi.values()))
            .map(|(a, b)| i * a + b)
            .collect(),
    )
}

/// `R_eps = |psi|^2 psi'' / (1 + m2) - |psi|^4 psi / (2 (1 + m2)^2) - (<psi, psi'>/m2)' psi`.
pub fn remainder_r_eps(psi: &WaveField, eps: EpsParam) -> Result<WaveField> {
    check_validity(psi, eps, DEFAULT_VALIDITY_SIGMA)?;
    let grid = psi.grid();
    let (d1, d2) = psi.first_two_derivatives();
    let n = grid.n();
    let mut g = Vec::with_capacity(n);
    let mut m2 = Vec::with_capacity(n);
    for j in 0..n {
        let p = psi.values()[j];
        let a = m2_and_defect(p, eps.value()).0;
        m2.push(a);
        g.push(Complex64::new((p * d1.values()[j].conj()).re / a, 0.0));
    }
    let dg = ComplexField::from_parts(grid, g).derivative(1)?;
    Ok(ComplexField::from_parts(
        grid,
        (0..n)
            .map(|j| {
                let p = psi.values()[j];
                let r2 = p.norm_sqr();
                let one_m2 = 1.0 + m2[j];
                r2 / one_m2 * d2.values()[j] - p * (r2 * r2 / (2.0 * one_m2 * one_m2)) - p * dg.values()[j].re
            })
            .collect(),
    ))
}

/// Max modulus of `i d_t psi + psi'' + |psi|^2 psi / 2 - eps R_eps` with
/// `d_t psi` taken from [`nls_eps_rhs`].
pub fn consistency_residual(psi: &WaveField, eps: EpsParam) -> Result<f64> {
    let dt = nls_eps_rhs(psi, eps)?;
    let r = remainder_r_eps(psi, eps)?;
    let d2 = psi.derivative(2)?;
    let i = Complex64::new(0.0, 1.0);
    Ok((0..psi.grid().n())
        .map(|j| {
            let p = psi.values()[j];
            (i * dt.values()[j] + d2.values()[j] + 0.5 * p.norm_sqr() * p - eps.value() * r.values()[j])
                .norm()
        })
        .fold(0.0, f64::max))
}

// ---------------------------------------------------------------------------
// Integrator configuration and trajectories

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scheme {
    /// Integrating-factor (Lawson) RK4 with the factor `e^{i t d_xx}`.
    Ifrk4,
    /// Classical explicit RK4.
    Rk4,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Equation {
    #[serde(rename = "ll")]
    Ll,
    #[serde(rename = "nlse")]
    NlsEps,
    #[serde(rename = "cs")]
    Cs,
}

impl Equation {
    pub fn name(self) -> &'static str {
        match self {
            Equation::Ll => "ll",
            Equation::NlsEps => "nlse",
            Equation::Cs => "cs",
        }
    }

    fn default_scheme(self) -> Scheme {
        match self {
            Equation::Ll => Scheme::Rk4,
            _ => Scheme::Ifrk4,
        }
    }
}

/// Fixed-step integration settings.
///
/// The step actually taken is `t_end / ceil(t_end / dt)`, so the run lands
/// exactly on `t_end` with a step no larger than `dt`. Missing fields take
/// the values of [`IntegratorConfig::default`] (`dt = 1e-3`, `t_end = 0.5`).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct IntegratorConfig {
    pub dt: f64,
    pub t_end: f64,
    /// `None` picks RK4 for LL and IFRK4 for the Schrodinger equations.
    pub scheme: Option<Scheme>,
    pub snapshot_stride: usize,
    pub validity_sigma: f64,
    /// Abort when the relative energy drift exceeds this; `None` never aborts.
    pub max_energy_drift: Option<f64>,
}

impl Default for IntegratorConfig {
    fn default() -> Self {
        Self::new(1e-3, 0.5)
    }
}

impl IntegratorConfig {
    pub fn new(dt: f64, t_end: f64) -> Self {
        Self {
            dt,
            t_end,
            scheme: None,
            snapshot_stride: 1,
            validity_sigma: DEFAULT_VALIDITY_SIGMA,
            max_energy_drift: Some(DEFAULT_MAX_ENERGY_DRIFT),
        }
    }

    pub fn with_scheme(mut self, scheme: Scheme) -> Self {
        self.scheme = Some(scheme);
        self
    }

    pub fn with_stride(mut self, stride: usize) -> Self {
        self.snapshot_stride = stride;
        self
    }

    pub fn with_sigma(mut self, sigma: f64) -> Self {
        self.validity_sigma = sigma;
        self
    }

    pub fn with_max_energy_drift(mut self, limit: Option<f64>) -> Self {
        self.max_energy_drift = limit;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidConfig(m));
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return bad(format!("dt = {} must be positive", self.dt));
        }
        if !(self.t_end > 0.0 && self.t_end.is_finite()) {
            return bad(format!("t_end = {} must be positive", self.t_end));
        }
        if self.snapshot_stride == 0 {
            return bad("snapshot_stride must be at least 1".into());
        }
        if !(self.validity_sigma > 0.0 && self.validity_sigma < 1.0) {
            return bad(format!(
                "validity_sigma = {} must lie in (0, 1)",
                self.validity_sigma
            ));
        }
        if let Some(l) = self.max_energy_drift {
            if !(l > 0.0) {
                return bad(format!("max_energy_drift = {l} must be positive"));
            }
        }
        Ok(())
    }

    pub fn steps(&self) -> usize {
        ((self.t_end / self.dt) - 1e-9).ceil().max(1.0) as usize
    }

    pub fn effective_dt(&self) -> f64 {
        self.t_end / self.steps() as f64
    }

    pub fn scheme_for(&self, eq: Equation) -> Scheme {
        self.scheme.unwrap_or(eq.default_scheme())
    }
}

/// Per-step record. Fields that do not apply to an equation are `None`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StepDiagnostics {
    pub step: usize,
    pub t: f64,
    /// `E_LL`, the NLS_eps energy, or `E_CS`.
    pub energy: f64,
    pub energy_drift: f64,
    /// `M2` for the cubic Schrodinger equation.
    pub mass: Option<f64>,
    pub mass_drift: Option<f64>,
    /// Max `| |m| - 1 |` before renormalization (LL).
    pub norm_defect: Option<f64>,
    /// `eps^{1/2} max|psi|` (NLS_eps).
    pub validity_margin: Option<f64>,
}

/// Stored states of a run plus per-step diagnostics.
#[derive(Clone, Debug)]
pub struct Trajectory<S> {
    pub equation: Equation,
    pub scheme: Scheme,
    pub dt: f64,
    pub stability_bound: f64,
    pub times: Vec<f64>,
    pub states: Vec<S>,
    pub diagnostics: Vec<StepDiagnostics>,
}

impl<S> Trajectory<S> {
    pub fn final_state(&self) -> &S {
        self.states.last().expect("a trajectory stores its initial state")
    }

    pub fn final_time(&self) -> f64 {
        *self.times.last().expect("a trajectory stores its initial time")
    }

    pub fn max_energy_drift(&self) -> f64 {
        self.diagnostics
            .iter()
            .map(|d| d.energy_drift)
            .fold(0.0, f64::max)
    }

    pub fn max_mass_drift(&self) -> Option<f64> {
        self.diagnostics
            .iter()
            .map(|d| d.mass_drift)
            .try_fold(0.0, |acc: f64, v| v.map(|v| acc.max(v)))
    }

    pub fn max_norm_defect(&self) -> Option<f64> {
        self.diagnostics
            .iter()
            .map(|d| d.norm_defect)
            .try_fold(0.0, |acc: f64, v| v.map(|v| acc.max(v)))
    }
}

/// `|e - e0| / |e0|`, or `|e - e0|` when `e0 = 0`.
pub fn relative_drift(e: f64, e0: f64) -> f64 {
    if e0 != 0.0 {
        (e - e0).abs() / e0.abs()
    } else {
        (e - e0).abs()
    }
}

// ---------------------------------------------------------------------------
// Stability bounds

/// Explicit RK4 bound for LL: the linearization about `e2` has frequencies
/// `kappa^2 + lambda`.
pub fn ll_stability_bound(grid: &Grid, a: &AnisotropyParams) -> f64 {
    RK4_STABILITY_RADIUS / (grid.max_wavenumber().powi(2) + a.max())
}

/// Step bound for NLS_eps. Under IFRK4 the explicit part still carries the
/// variable-coefficient term `(m2 - 1) psi''`, whose frozen-coefficient
/// eigenvalues are `+-kappa^2 (1 - m2) / m2^{1/2}`, plus the cubic term of
/// size `max|psi|^2`.
pub fn nls_eps_stability_bound(psi: &WaveField, eps: EpsParam, scheme: Scheme) -> f64 {
    let amp2 = psi.linf_norm().powi(2);
    let (m2, defect) = m2_and_defect(Complex64::new(psi.linf_norm(), 0.0), eps.value());
    let k2 = psi.grid().max_wavenumber().powi(2);
    let mut rate = k2 * defect / m2.sqrt() + amp2;
    if scheme == Scheme::Rk4 {
        rate += k2;
    }
    if rate > 0.0 {
        RK4_STABILITY_RADIUS / rate
    } else {
        f64::INFINITY
    }
}

pub fn cs_stability_bound(psi: &WaveField, scheme: Scheme) -> f64 {
    let mut rate = 0.5 * psi.linf_norm().powi(2);
    if scheme == Scheme::Rk4 {
        rate += psi.grid().max_wavenumber().powi(2);
    }
    if rate > 0.0 {
        RK4_STABILITY_RADIUS / rate
    } else {
        f64::INFINITY
    }
}

fn check_step(dt: f64, bound: f64) -> Result<()> {
    if dt <= bound {
        Ok(())
    } else {
        Err(Error::UnstableTimeStep { dt, bound })
    }
}

// ---------------------------------------------------------------------------
// Landau-Lifshitz

fn rk4_combine(m: &VectorField, k: [&VectorField; 4], dt: f64) -> VectorField {
    let n = m.grid().n();
    let mut comps: [Vec<f64>; 3] = Default::default();
    for (i, out) in comps.iter_mut().enumerate() {
        *out = (0..n)
            .map(|j| {
                m.comp(i)[j]
                    + dt / 6.0
                        * (k[0].comp(i)[j] + 2.0 * k[1].comp(i)[j] + 2.0 * k[2].comp(i)[j] + k[3].comp(i)[j])
            })
            .collect();
    }
    VectorField::from_comps(m.grid(), comps)
}

fn abort(eq: Equation, reason: AbortReason, t: f64, step: usize, dt: f64, bound: f64) -> Error {
    Error::Aborted(Box::new(AbortReport {
        equation: eq.name().to_string(),
        reason,
        t,
        step,
        dt,
        stability_bound: bound,
    }))
}

fn should_store(step: usize, steps: usize, stride: usize) -> bool {
    step.is_multiple_of(stride) || step == steps
}

/// Integrates LL with classical RK4 and per-step projection onto the sphere.
pub fn evolve_ll(
    m0: &Magnetization,
    a: &AnisotropyParams,
    cfg: &IntegratorConfig,
) -> Result<Trajectory<Magnetization>> {
    cfg.validate()?;
    let eq = Equation::Ll;
    let scheme = cfg.scheme_for(eq);
    if scheme != Scheme::Rk4 {
        return Err(Error::InvalidConfig(
            "the Landau-Lifshitz integrator supports only rk4".into(),
        ));
    }
    let steps = cfg.steps();
    let dt = cfg.effective_dt();
    let bound = ll_stability_bound(m0.grid(), a);
    check_step(dt, bound)?;

    let e0 = landau_lifshitz_energy(m0, a)?;
    let mut traj = Trajectory {
        equation: eq,
        scheme,
        dt,
        stability_bound: bound,
        times: vec![0.0],
        states: vec![m0.clone()],
        diagnostics: vec![StepDiagnostics {
            step: 0,
            t: 0.0,
            energy: e0,
            energy_drift: 0.0,
            mass: None,
            mass_drift: None,
            norm_defect: Some(0.0),
            validity_margin: None,
        }],
    };
    let mut m = m0.clone();
    for step in 1..=steps {
        let t_prev = (step - 1) as f64 * dt;
        let k1 = ll_rhs(&m, a)?;
        let s2 = Magnetization::from_vector(m.add_scaled(&k1, 0.5 * dt)?);
        let k2 = ll_rhs(&s2, a)?;
        let s3 = Magnetization::from_vector(m.add_scaled(&k2, 0.5 * dt)?);
        let k3 = ll_rhs(&s3, a)?;
        let s4 = Magnetization::from_vector(m.add_scaled(&k3, dt)?);
        let k4 = ll_rhs(&s4, a)?;
        let pre = Magnetization::from_vector(rk4_combine(&m, [&k1, &k2, &k3, &k4], dt));
        if pre.comps().iter().flatten().any(|v| !v.is_finite()) {
            return Err(abort(eq, AbortReason::NonFinite, t_prev, step - 1, dt, bound));
        }
        let norm_defect = pre
            .norm_sqr_pointwise()
            .iter()
            .map(|s| (s.sqrt() - 1.0).abs())
            .fold(0.0, f64::max);
        m = match renormalize(&pre) {
            Ok(m) => m,
            Err(Error::NormCollapse { index, norm }) => {
                return Err(abort(
                    eq,
                    AbortReason::NormCollapse { index, norm },
                    t_prev,
                    step - 1,
                    dt,
                    bound,
                ))
            }
            Err(e) => return Err(e),
        };
        let t = step as f64 * dt;
        let energy = landau_lifshitz_energy(&m, a)?;
        let drift = relative_drift(energy, e0);
        if let Some(limit) = cfg.max_energy_drift {
            if !(drift <= limit) {
                return Err(abort(
                    eq,
                    AbortReason::EnergyDrift { drift, limit },
                    t_prev,
                    step - 1,
                    dt,
                    bound,
                ));
            }
        }
        traj.diagnostics.push(StepDiagnostics {
            step,
            t,
            energy,
            energy_drift: drift,
            mass: None,
            mass_drift: None,
            norm_defect: Some(norm_defect),
            validity_margin: None,
        });
        if should_store(step, steps, cfg.snapshot_stride) {
            traj.times.push(t);
            traj.states.push(m.clone());
        }
    }
    Ok(traj)
}

// ---------------------------------------------------------------------------
// Schrodinger-type equations

/// Multipliers `e^{-i kappa^2 dt/2}` and `e^{-i kappa^2 dt}` of the linear
/// flow `d_t psi = i psi''` in Fourier space.
struct IntegratingFactor {
    grid: Grid,
    half: Vec<Complex64>,
    full: Vec<Complex64>,
}

impl IntegratingFactor {
    fn new(grid: &Grid, dt: f64) -> Self {
        let k2: Vec<f64> = grid.wavenumbers().iter().map(|k| k * k).collect();
        Self {
            grid: grid.clone(),
            half: k2
                .iter()
                .map(|&q| Complex64::from_polar(1.0, -0.5 * q * dt))
                .collect(),
            full: k2.iter().map(|&q| Complex64::from_polar(1.0, -q * dt)).collect(),
        }
    }

    fn apply(&self, u: &[Complex64], full: bool) -> Vec<Complex64> {
        let mult = if full { &self.full } else { &self.half };
        let mut spec = self.grid.forward(u);
        spec.iter_mut().zip(mult).for_each(|(z, m)| *z *= m);
        self.grid.inverse_in_place(&mut spec);
        spec
    }
}

fn axpy(u: &[Complex64], k: &[Complex64], s: f64) -> Vec<Complex64> {
    u.iter().zip(k).map(|(a, b)| a + b * s).collect()
}

/// One step of either scheme for `d_t u = i u'' + N(u)`.
fn schrodinger_step(
    u: &[Complex64],
    dt: f64,
    scheme: Scheme,
    factor: &IntegratingFactor,
    nonlinear: &dyn Fn(&[Complex64]) -> Vec<Complex64>,
) -> Vec<Complex64> {
    match scheme {
        Scheme::Ifrk4 => {
            let k1 = nonlinear(u);
            let u2 = factor.apply(&axpy(u, &k1, 0.5 * dt), false);
            let k2 = nonlinear(&u2);
            let eu = factor.apply(u, false);
            let u3 = axpy(&eu, &k2, 0.5 * dt);
            let k3 = nonlinear(&u3);
            let e2u = factor.apply(u, true);
            let u4 = axpy(&e2u, &factor.apply(&k3, false), dt);
            let k4 = nonlinear(&u4);
            let e2k1 = factor.apply(&k1, true);
            let k23: Vec<Complex64> = k2.iter().zip(&k3).map(|(a, b)| a + b).collect();
            let ek23 = factor.apply(&k23, false);
            (0..u.len())
                .map(|j| e2u[j] + dt / 6.0 * (e2k1[j] + 2.0 * ek23[j] + k4[j]))
                .collect()
        }
        Scheme::Rk4 => {
            let grid = &factor.grid;
            let i = Complex64::new(0.0, 1.0);
            let full = |v: &[Complex64]| -> Vec<Complex64> {
                let d2 = ComplexField::from_parts(grid, v.to_vec())
                    .derivative(2)
                    .expect("order 2 is in range");
                d2.values()
                    .iter()
                    .zip(nonlinear(v))
                    .map(|(a, b)| i * a + b)
                    .collect()
            };
            let k1 = full(u);
            let k2 = full(&axpy(u, &k1, 0.5 * dt));
            let k3 = full(&axpy(u, &k2, 0.5 * dt));
            let k4 = full(&axpy(u, &k3, dt));
            (0..u.len())
                .map(|j| u[j] + dt / 6.0 * (k1[j] + 2.0 * k2[j] + 2.0 * k3[j] + k4[j]))
                .collect()
        }
    }
}

/// Integrates NLS_eps. Stops with a structured report when the validity
/// margin exceeds `cfg.validity_sigma` or the energy drift exceeds
/// `cfg.max_energy_drift`.
pub fn evolve_nls_eps(
    psi0: &WaveField,
    eps: EpsParam,
    cfg: &IntegratorConfig,
) -> Result<Trajectory<WaveField>> {
    cfg.validate()?;
    let eq = Equation::NlsEps;
    let scheme = cfg.scheme_for(eq);
    let margin0 = check_validity(psi0, eps, cfg.validity_sigma)?;
    let steps = cfg.steps();
    let dt = cfg.effective_dt();
    let bound = nls_eps_stability_bound(psi0, eps, scheme);
    check_step(dt, bound)?;
    let grid = psi0.grid().clone();
    let e = eps.value();
    let nonlinear = |v: &[Complex64]| nls_eps_split(v, &grid, e).0;
    let factor = IntegratingFactor::new(&grid, dt);

    let e0 = nls_energy_eps(psi0, eps)?;
    let mut traj = Trajectory {
        equation: eq,
        scheme,
        dt,
        stability_bound: bound,
        times: vec![0.0],
        states: vec![psi0.clone()],
        diagnostics: vec![StepDiagnostics {
            step: 0,
            t: 0.0,
            energy: e0,
            energy_drift: 0.0,
            mass: None,
            mass_drift: None,
            norm_defect: None,
            validity_margin: Some(margin0),
        }],
    };
    let mut u = psi0.values().to_vec();
    for step in 1..=steps {
        let t_prev = (step - 1) as f64 * dt;
        let next = schrodinger_step(&u, dt, scheme, &factor, &nonlinear);
        if next.iter().any(|z| !(z.re.is_finite() && z.im.is_finite())) {
            return Err(abort(eq, AbortReason::NonFinite, t_prev, step - 1, dt, bound));
        }
        let field = ComplexField::from_parts(&grid, next);
        let margin = match check_validity(&field, eps, cfg.validity_sigma) {
            Ok(m) => m,
            Err(Error::Validity { margin, bound: sigma }) => {
                return Err(abort(
                    eq,
                    AbortReason::ValidityBreach { margin, sigma },
                    t_prev,
                    step - 1,
                    dt,
                    bound,
                ))
            }
            Err(e) => return Err(e),
        };
        let energy = nls_energy_eps(&field, eps)?;
        let drift = relative_drift(energy, e0);
        if let Some(limit) = cfg.max_energy_drift {
            if !(drift <= limit) {
                return Err(abort(
                    eq,
                    AbortReason::EnergyDrift { drift, limit },
                    t_prev,
                    step - 1,
                    dt,
                    bound,
                ));
            }
        }
        let t = step as f64 * dt;
        traj.diagnostics.push(StepDiagnostics {
            step,
            t,
            energy,
            energy_drift: drift,
            mass: None,
            mass_drift: None,
            norm_defect: None,
            validity_margin: Some(margin),
        });
        if should_store(step, steps, cfg.snapshot_stride) {
            traj.times.push(t);
            traj.states.push(field.clone());
        }
        u = field.into_values();
    }
    Ok(traj)
}

/// Integrates the cubic Schrodinger equation.
pub fn evolve_cs(psi0: &WaveField, cfg: &IntegratorConfig) -> Result<Trajectory<WaveField>> {
    cfg.validate()?;
    let eq = Equation::Cs;
    let scheme = cfg.scheme_for(eq);
    let steps = cfg.steps();
    let dt = cfg.effective_dt();
    let bound = cs_stability_bound(psi0, scheme);
    check_step(dt, bound)?;
    let grid = psi0.grid().clone();
    let nonlinear = |v: &[Complex64]| cs_nonlinear(v);
    let factor = IntegratingFactor::new(&grid, dt);

    let (mass0, e0) = cs_invariants(psi0);
    let mut traj = Trajectory {
        equation: eq,
        scheme,
        dt,
        stability_bound: bound,
        times: vec![0.0],
        states: vec![psi0.clone()],
        diagnostics: vec![StepDiagnostics {
            step: 0,
            t: 0.0,
            energy: e0,
            energy_drift: 0.0,
            mass: Some(mass0),
            mass_drift: Some(0.0),
            norm_defect: None,
            validity_margin: None,
        }],
    };
    let mut u = psi0.values().to_vec();
    for step in 1..=steps {
        let t_prev = (step - 1) as f64 * dt;
        let next = schrodinger_step(&u, dt, scheme, &factor, &nonlinear);
        if next.iter().any(|z| !(z.re.is_finite() && z.im.is_finite())) {
            return Err(abort(eq, AbortReason::NonFinite, t_prev, step - 1, dt, bound));
        }
        let field = ComplexField::from_parts(&grid, next);
        let (mass, energy) = cs_invariants(&field);
        let drift = relative_drift(energy, e0);
        if let Some(limit) = cfg.max_energy_drift {
            if !(drift <= limit) {
                return Err(abort(
                    eq,
                    AbortReason::EnergyDrift { drift, limit },
                    t_prev,
                    step - 1,
                    dt,
                    bound,
                ));
            }
        }
        let t = step as f64 * dt;
        traj.diagnostics.push(StepDiagnostics {
            step,
            t,
            energy,
            energy_drift: drift,
            mass: Some(mass),
            mass_drift: Some(relative_drift(mass, mass0)),
            norm_defect: None,
            validity_margin: None,
        });
        if should_store(step, steps, cfg.snapshot_stride) {
            traj.times.push(t);
            traj.states.push(field.clone());
        }
        u = field.into_values();
    }
    Ok(traj)
}

// ---------------------------------------------------------------------------
// Second-order form of LL with lambda1 = lambda3 = 1/eps

/// `F_eps(m)` in one space dimension:
///
/// ```text
/// (|m'|^2 m')' - 2 (|m'|^2 m)''
///   - (1/eps) [ (m1^2 + 3 m3^2) m1'' e1 + (3 m1^2 + m3^2) m3'' e3 - 2 m1 m3 (m1'' e3 + m3'' e1)
///               + (m1^2 + m3^2) m2'' e2 - |m'|^2 (m1 e1 + m3 e3) + (m1^2 + m3^2)' m' ]
///   + (1/eps^2) (m1^2 + m3^2) (m1 e1 + m3 e3)
/// ```
pub fn f_eps(m: &Magnetization, eps: EpsParam) -> Result<VectorField> {
    let e = eps.value();
    let grid = m.grid();
    let n = grid.n();
    let d1 = m.derivative(1)?;
    let d2 = m.derivative(2)?;
    let grad2: Vec<f64> = d1.norm_sqr_pointwise();
    let mut flux: [Vec<f64>; 3] = Default::default();
    let mut weighted: [Vec<f64>; 3] = Default::default();
    for i in 0..3 {
        flux[i] = (0..n).map(|j| grad2[j] * d1.comp(i)[j]).collect();
        weighted[i] = (0..n).map(|j| grad2[j] * m.comp(i)[j]).collect();
    }
    let flux_d = VectorField::from_comps(grid, flux).derivative(1)?;
    let weighted_dd = VectorField::from_comps(grid, weighted).derivative(2)?;
    let rho: Vec<f64> = (0..n).map(|j| m.m1()[j].powi(2) + m.m3()[j].powi(2)).collect();
    let rho_d = RealField::from_parts(grid, rho.clone()).derivative(1)?;
    let mut out: [Vec<f64>; 3] = [vec![0.0; n], vec![0.0; n], vec![0.0; n]];
    for j in 0..n {
        let (m1, m3) = (m.m1()[j], m.m3()[j]);
        let (a1, a2, a3) = (d2.comp(0)[j], d2.comp(1)[j], d2.comp(2)[j]);
        let r = rho[j];
        let dr = rho_d.values()[j];
        let bracket = [
            (m1 * m1 + 3.0 * m3 * m3) * a1 - 2.0 * m1 * m3 * a3 - grad2[j] * m1 + dr * d1.comp(0)[j],
            r * a2 + dr * d1.comp(1)[j],
            (3.0 * m1 * m1 + m3 * m3) * a3 - 2.0 * m1 * m3 * a1 - grad2[j] * m3 + dr * d1.comp(2)[j],
        ];
        let zero_order = [r * m1, 0.0, r * m3];
        for i in 0..3 {
            out[i][j] =
                flux_d.comp(i)[j] - 2.0 * weighted_dd.comp(i)[j] - bracket[i] / e + zero_order[i] / (e * e);
        }
    }
    Ok(VectorField::from_comps(grid, out))
}

/// L2 norm of `d_tt m + m'''' - (2/eps)(m1'' e1 + m3'' e3) + (1/eps^2)(m1 e1 + m3 e3) - F_eps(m)`
/// for a supplied `d_tt m`.
pub fn second_order_residual(m: &Magnetization, dtt: &TangentField, eps: EpsParam) -> Result<f64> {
    m.grid().check_same(dtt.grid())?;
    let e = eps.value();
    let d2 = m.derivative(2)?;
    let d4 = m.derivative(4)?;
    let f = f_eps(m, eps)?;
    let n = m.grid().n();
    let mut sum = 0.0;
    for i in 0..3 {
        let anis = if i == 1 { 0.0 } else { 1.0 };
        for j in 0..n {
            let r = dtt.comp(i)[j] + d4.comp(i)[j] - anis * 2.0 / e * d2.comp(i)[j]
                + anis * m.comp(i)[j] / (e * e)
                - f.comp(i)[j];
            sum += r * r;
        }
    }
    Ok((m.grid().spacing() * sum).sqrt())
}

/// [`second_order_residual`] at a stored state, with `d_tt m` from centred
/// differences of the neighbouring stored states (uniform spacing required).
pub fn f_eps_residual(traj: &Trajectory<Magnetization>, eps: EpsParam, t_index: usize) -> Result<f64> {
    let len = traj.states.len();
    if t_index == 0 || t_index + 1 >= len {
        return Err(Error::TrajectoryIndex {
            index: t_index,
            reason: format!("needs a stored neighbour on each side (trajectory has {len} states)"),
        });
    }
    let (t0, t1, t2) = (
        traj.times[t_index - 1],
        traj.times[t_index],
        traj.times[t_index + 1],
    );
    let tau = t1 - t0;
    if ((t2 - t1) - tau).abs() > 1e-9 * tau.abs().max(1.0) {
        return Err(Error::TrajectoryIndex {
            index: t_index,
            reason: "stored times around the index are not uniformly spaced".into(),
        });
    }
    let (a, b, c) = (
        &traj.states[t_index - 1],
        &traj.states[t_index],
        &traj.states[t_index + 1],
    );
    let dtt = a.add(c)?.add_scaled(b, -2.0)?.scale(1.0 / (tau * tau));
    second_order_residual(b, &dtt, eps)
}
