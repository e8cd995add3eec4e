//! Closed-form solitons: bright solitons of the cubic Schrodinger equation,
//! the two traveling-wave families of the Landau-Lifshitz equation with
//! `lambda1 = lambda3 = lambda`, the scaled family `Upsilon_eps` and its
//! first-order correction `W`, plus residual checks of the profile ODEs.
//!
//! Every closed form is written in terms of `e = exp(-rate |x|)` so that
//! nothing overflows at the box edges.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fields::{EpsParam, Magnetization, TangentField};
use crate::spectral::{sech, ComplexField, Grid, WaveField};

/// Decay lengths kept inside half the box.
pub const DECAY_LENGTHS: f64 = 40.0;

/// Rejects grids whose half-width is below `required`.
pub fn check_box(grid: &Grid, required: f64) -> Result<()> {
    // Small slack so that the documented "half-width = 40 / rate" grids pass.
    if grid.half_width() >= required * (1.0 - 1e-12) {
        Ok(())
    } else {
        Err(Error::BoxTooSmall {
            required,
            actual: grid.half_width(),
        })
    }
}

/// `sign` with `sign(0) = 0`.
pub fn sign0(v: f64) -> f64 {
    if v > 0.0 {
        1.0
    } else if v < 0.0 {
        -1.0
    } else {
        0.0
    }
}

// ---------------------------------------------------------------------------
// Cubic Schrodinger bright solitons

/// Speed `c` and angular velocity `omega` of a bright soliton, `4 omega > c^2`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "CsSolitonRaw", into = "CsSolitonRaw")]
pub struct CsSolitonParams {
    c: f64,
    omega: f64,
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct CsSolitonRaw {
    #[serde(default)]
    c: f64,
    omega: f64,
}

impl TryFrom<CsSolitonRaw> for CsSolitonParams {
    type Error = Error;
    fn try_from(r: CsSolitonRaw) -> Result<Self> {
        Self::new(r.c, r.omega)
    }
}

impl From<CsSolitonParams> for CsSolitonRaw {
    fn from(p: CsSolitonParams) -> Self {
        Self {
            c: p.c,
            omega: p.omega,
        }
    }
}

impl CsSolitonParams {
    pub fn new(c: f64, omega: f64) -> Result<Self> {
        if c.is_finite() && omega.is_finite() && 4.0 * omega > c * c {
            Ok(Self { c, omega })
        } else {
            Err(Error::Inadmissible(format!(
                "bright soliton needs 4 omega > c^2, got c = {c}, omega = {omega}"
            )))
        }
    }

    pub fn c(&self) -> f64 {
        self.c
    }

    pub fn omega(&self) -> f64 {
        self.omega
    }

    /// `alpha = (omega - c^2/4)^{1/2}`, the spatial decay rate.
    pub fn alpha(&self) -> f64 {
        (self.omega - 0.25 * self.c * self.c).sqrt()
    }

    pub fn required_half_width(&self) -> f64 {
        DECAY_LENGTHS / self.alpha()
    }

    /// Value of the soliton at `(x, t)`.
    pub fn eval(&self, x: f64, t: f64) -> Complex64 {
        let a = self.alpha();
        let y = x - self.c * t;
        let phase = 0.5 * self.c * y + self.omega * t;
        Complex64::from_polar(2.0 * a * sech(a * y), phase)
    }
}

/// `Psi_{c,omega}(x, t) = (4w - c^2)^{1/2} e^{ic(x-ct)/2} sech((4w - c^2)^{1/2}(x-ct)/2) e^{iwt}`.
pub fn cs_bright_soliton(p: CsSolitonParams, t: f64, grid: &Grid) -> Result<WaveField> {
    check_box(grid, p.required_half_width() + (p.c * t).abs())?;
    Ok(ComplexField::from_fn(grid, |x| p.eval(x, t)))
}

// ---------------------------------------------------------------------------
// Landau-Lifshitz traveling waves

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SolitonCase {
    /// `c = omega = 0`: domain wall with `m2 = delta tanh(lambda^{1/2} x)`.
    I,
    /// Localized traveling waves with `m2 -> delta` at both ends.
    II,
}

/// Parameters `(lambda, c, omega, delta)` of a traveling-wave profile.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "SolitonRaw", into = "SolitonRaw")]
pub struct SolitonParams {
    case: SolitonCase,
    lambda: f64,
    c: f64,
    omega: f64,
    delta: f64,
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SolitonRaw {
    case: SolitonCase,
    lambda: f64,
    #[serde(default)]
    c: f64,
    #[serde(default)]
    omega: f64,
    delta: f64,
}

impl TryFrom<SolitonRaw> for SolitonParams {
    type Error = Error;
    fn try_from(r: SolitonRaw) -> Result<Self> {
        Self::new(r.case, r.lambda, r.c, r.omega, r.delta)
    }
}

impl From<SolitonParams> for SolitonRaw {
    fn from(p: SolitonParams) -> Self {
        Self {
            case: p.case,
            lambda: p.lambda,
            c: p.c,
            omega: p.omega,
            delta: p.delta,
        }
    }
}

impl SolitonParams {
    pub fn new(case: SolitonCase, lambda: f64, c: f64, omega: f64, delta: f64) -> Result<Self> {
        if !(lambda > 0.0 && lambda.is_finite()) {
            return Err(Error::Inadmissible(format!("lambda = {lambda} must be positive")));
        }
        if delta != 1.0 && delta != -1.0 {
            return Err(Error::Inadmissible(format!("delta = {delta} must be +1 or -1")));
        }
        if !(c.is_finite() && omega.is_finite()) {
            return Err(Error::Inadmissible("c and omega must be finite".into()));
        }
        match case {
            SolitonCase::I => {
                if c != 0.0 || omega != 0.0 {
                    return Err(Error::Inadmissible(format!(
                        "case (i) requires c = omega = 0, got c = {c}, omega = {omega}"
                    )));
                }
            }
            SolitonCase::II => admissible_case_ii(lambda, c, omega, delta)?,
        }
        Ok(Self {
            case,
            lambda,
            c,
            omega,
            delta,
        })
    }

    pub fn case_i(lambda: f64, delta: f64) -> Result<Self> {
        Self::new(SolitonCase::I, lambda, 0.0, 0.0, delta)
    }

    pub fn case_ii(lambda: f64, c: f64, omega: f64, delta: f64) -> Result<Self> {
        Self::new(SolitonCase::II, lambda, c, omega, delta)
    }

    pub fn case(&self) -> SolitonCase {
        self.case
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn c(&self) -> f64 {
        self.c
    }

    pub fn omega(&self) -> f64 {
        self.omega
    }

    /// Limit of `m2` at `+infinity`.
    pub fn delta(&self) -> f64 {
        self.delta
    }

    /// Same profile with a different anisotropy in the parameter record; used
    /// to drive a solver with a deliberately wrong equation.
    pub fn with_lambda_unchecked(mut self, lambda: f64) -> Self {
        self.lambda = lambda;
        self
    }

    fn s(&self) -> f64 {
        (self.lambda * self.c * self.c + self.omega * self.omega).sqrt()
    }

    /// `beta = (lambda + delta omega - c^2/4)^{1/2}`.
    fn beta(&self) -> f64 {
        (self.lambda + self.delta * self.omega - 0.25 * self.c * self.c).sqrt()
    }

    /// Slowest exponential decay rate of `m1 + i m3`.
    pub fn decay_rate(&self) -> f64 {
        match self.case {
            SolitonCase::I => self.lambda.sqrt(),
            SolitonCase::II => self.beta(),
        }
    }

    pub fn required_half_width(&self) -> f64 {
        DECAY_LENGTHS / self.decay_rate()
    }

    /// Extremal value `m2(0)` predicted from `(lambda, c, omega, delta)`;
    /// `None` for the domain wall, where it is 0 by construction.
    pub fn v2_at_zero(&self) -> Option<f64> {
        match self.case {
            SolitonCase::I => None,
            SolitonCase::II => {
                let d = self.delta;
                Some((d * self.s() - self.omega - self.lambda * d) / self.lambda)
            }
        }
    }

    /// Profile `(V1 + i V3, V2)` at `x`.
    pub fn profile_at(&self, x: f64) -> (Complex64, f64) {
        match self.case {
            SolitonCase::I => {
                let r = self.lambda.sqrt();
                (Complex64::new(sech(r * x), 0.0), self.delta * (r * x).tanh())
            }
            SolitonCase::II => {
                let (lambda, c, omega, d) = (self.lambda, self.c, self.omega, self.delta);
                let s = self.s();
                let beta = self.beta();
                let k = 4.0 * beta * beta;
                let amp_re = (2.0 * s + c * c - 2.0 * d * omega).max(0.0).sqrt();
                let amp_im = (2.0 * s - c * c + 2.0 * d * omega).max(0.0).sqrt();
                let e = (-beta * x.abs()).exp();
                let e2 = e * e;
                // Denominator times 2 e^2 / (stuff) written without cosh.
                let den = 2.0 * e2 * (2.0 * lambda + d * omega) + s * (1.0 + e2 * e2);
                let ch = e * (1.0 + e2) / den;
                let sh = sign0(x) * e * (1.0 - e2) / den;
                let bracket = Complex64::new(amp_re * ch, sign0(c) * d * amp_im * sh);
                let v = Complex64::from_polar(k.sqrt(), 0.5 * c * d * x) * bracket;
                let v2 = d * (1.0 - 2.0 * e2 * k / den);
                (v, v2)
            }
        }
    }
}

fn admissible_case_ii(lambda: f64, c: f64, omega: f64, delta: f64) -> Result<()> {
    let wd = omega * delta;
    let bound = 4.0 * (lambda + wd);
    let first = 0.0 < -wd && -wd < lambda && c * c < bound;
    let second = wd >= 0.0 && 0.0 < c * c && c * c < bound;
    if first || second {
        return Ok(());
    }
    let why = if wd < 0.0 {
        if -wd >= lambda {
            format!("-omega delta = {} must be below lambda = {lambda}", -wd)
        } else {
            format!("c^2 = {} must be below 4 (lambda + omega delta) = {bound}", c * c)
        }
    } else if c == 0.0 {
        "omega delta >= 0 requires c != 0".to_string()
    } else {
        format!("c^2 = {} must be below 4 (lambda + omega delta) = {bound}", c * c)
    };
    Err(Error::Inadmissible(why))
}

fn sample_profile(p: &SolitonParams, shift: f64, rotation: f64, grid: &Grid) -> Result<Magnetization> {
    check_box(grid, p.required_half_width() + shift.abs())?;
    let rot = Complex64::from_polar(1.0, rotation);
    Ok(Magnetization::from_fn(grid, |x| {
        let (v, v2) = p.profile_at(x - shift);
        let v = v * rot;
        [v.re, v2, v.im]
    }))
}

/// Domain wall `m1 + i m3 = sech(lambda^{1/2} x)`, `m2 = delta tanh(lambda^{1/2} x)`.
pub fn ll_soliton_case_i(lambda: f64, delta: f64, grid: &Grid) -> Result<Magnetization> {
    let p = SolitonParams::case_i(lambda, delta)?;
    sample_profile(&p, 0.0, 0.0, grid)
}

/// Localized profile of the second family, sampled at `t = 0`.
pub fn ll_soliton_case_ii(p: &SolitonParams, grid: &Grid) -> Result<Magnetization> {
    if p.case != SolitonCase::II {
        return Err(Error::Inadmissible("expected case (ii) parameters".into()));
    }
    sample_profile(p, 0.0, 0.0, grid)
}

/// Continuous phase of `m1 + i m3` for a moving profile (`c != 0`), with
/// `phi(0) = 0`.
pub fn ll_soliton_phase(p: &SolitonParams, x: f64) -> Result<f64> {
    if p.case != SolitonCase::II || p.c == 0.0 {
        return Err(Error::Inadmissible(
            "phase lift is defined for case (ii) with c != 0".into(),
        ));
    }
    let (c, omega, d) = (p.c, p.omega, p.delta);
    let s = p.s();
    let num = 2.0 * s - c * c + 2.0 * d * omega;
    let den = 2.0 * s + c * c - 2.0 * d * omega;
    let ratio = (num.max(0.0) / den).sqrt();
    Ok(0.5 * c * d * x + sign0(c) * d * (ratio * (p.beta() * x).tanh()).atan())
}

/// `m1 + i m3 = V(x - ct) e^{i omega t}`, `m2 = V2(x - ct)`.
pub fn ll_traveling_wave(p: &SolitonParams, t: f64, grid: &Grid) -> Result<Magnetization> {
    sample_profile(p, p.c * t, p.omega * t, grid)
}

/// First and second time derivatives of the traveling wave at time `t`,
/// built from spatial derivatives of the sampled profile:
/// `d_t = -c d_x + omega J` and `d_tt = c^2 d_xx - 2 c omega J d_x - omega^2 J^2`,
/// where `J` rotates `(m1, m3)` by a quarter turn.
pub fn traveling_wave_time_derivatives(
    p: &SolitonParams,
    t: f64,
    grid: &Grid,
) -> Result<(TangentField, TangentField)> {
    let m = ll_traveling_wave(p, t, grid)?;
    let d1 = m.derivative(1)?;
    let d2 = m.derivative(2)?;
    let (c, w) = (p.c, p.omega);
    let rot = |v: [f64; 3]| [-v[2], 0.0, v[0]];
    let n = grid.n();
    let mut dt = [vec![0.0; n], vec![0.0; n], vec![0.0; n]];
    let mut dtt = [vec![0.0; n], vec![0.0; n], vec![0.0; n]];
    for j in 0..n {
        let (mj, a, b) = (m.at(j), d1.at(j), d2.at(j));
        let jm = rot(mj);
        let jjm = rot(jm);
        let ja = rot(a);
        for i in 0..3 {
            dt[i][j] = -c * a[i] + w * jm[i];
            dtt[i][j] = c * c * b[i] - 2.0 * c * w * ja[i] + w * w * jjm[i];
        }
    }
    Ok((
        TangentField::new(grid.clone(), dt[0].clone(), dt[1].clone(), dt[2].clone())?,
        TangentField::new(grid.clone(), dtt[0].clone(), dtt[1].clone(), dtt[2].clone())?,
    ))
}

// ---------------------------------------------------------------------------
// Scaled family and its limit

/// Parameters `(lambda, c, omega, delta) = (1/eps, c, omega - 1/eps, 1)`.
pub fn scaled_soliton_params(c: f64, omega: f64, eps: EpsParam) -> Result<SolitonParams> {
    check_upsilon_params(c, omega, eps)?;
    SolitonParams::case_ii(eps.lambda(), c, omega - eps.lambda(), 1.0)
}

fn check_upsilon_params(c: f64, omega: f64, eps: EpsParam) -> Result<()> {
    CsSolitonParams::new(c, omega)?;
    if c < 0.0 {
        return Err(Error::Inadmissible(format!("c = {c} must be non-negative")));
    }
    if !(omega > 0.0 && eps.value() < 1.0 / omega) {
        return Err(Error::Inadmissible(format!(
            "need omega > 0 and eps < 1/omega, got omega = {omega}, eps = {}",
            eps.value()
        )));
    }
    Ok(())
}

/// `eps^{-1/2} V(x)` for the scaled profile, written directly in `eps`.
fn upsilon_profile(c: f64, omega: f64, eps: f64, x: f64) -> Complex64 {
    let alpha = (omega - 0.25 * c * c).sqrt();
    let a = (c * c - 2.0 * omega) * eps;
    let q = a + omega * omega * eps * eps;
    let s = (1.0 + q).sqrt();
    let amp_re = (2.0 * s + 2.0 + a).sqrt();
    // 2s - 2 - a without cancellation.
    let amp_im = ((2.0 * omega * omega * eps * eps - a * q / (s + 1.0)) / (s + 1.0))
        .max(0.0)
        .sqrt();
    let e = (-alpha * x.abs()).exp();
    let e2 = e * e;
    let den = 2.0 * e2 * (1.0 + omega * eps) + s * (1.0 + e2 * e2);
    let ch = e * (1.0 + e2) / den;
    let sh = sign0(x) * e * (1.0 - e2) / den;
    Complex64::from_polar(2.0 * alpha, 0.5 * c * x) * Complex64::new(amp_re * ch, sign0(c) * amp_im * sh)
}

/// `Upsilon_eps(x, t) = eps^{-1/2} V(x - ct) e^{i omega t}` for the scaled
/// profile.
pub fn upsilon_eps(c: f64, omega: f64, eps: EpsParam, t: f64, grid: &Grid) -> Result<WaveField> {
    check_upsilon_params(c, omega, eps)?;
    let alpha = (omega - 0.25 * c * c).sqrt();
    check_box(grid, DECAY_LENGTHS / alpha + (c * t).abs())?;
    let rot = Complex64::from_polar(1.0, omega * t);
    Ok(ComplexField::from_fn(grid, |x| {
        rot * upsilon_profile(c, omega, eps.value(), x - c * t)
    }))
}

/// Coefficient `W` of `eps` in `Upsilon_eps = Psi_{c,omega} + eps W + O(eps^2)`.
pub fn first_order_correction(c: f64, omega: f64, grid: &Grid) -> Result<WaveField> {
    let p = CsSolitonParams::new(c, omega)?;
    let alpha = p.alpha();
    check_box(grid, p.required_half_width())?;
    Ok(ComplexField::from_fn(grid, |x| {
        let sh = sech(alpha * x);
        let th = (alpha * x).tanh();
        let bracket = Complex64::new(
            (4.0 * alpha * alpha - c * c) * sh - 8.0 * alpha * alpha * sh * sh * sh,
            4.0 * c * alpha * sh * th,
        );
        Complex64::from_polar(0.25 * alpha, 0.5 * c * x) * bracket
    }))
}

// ---------------------------------------------------------------------------
// Residual checks

/// L2 norms of the two equations of the profile system
///
/// ```text
/// -v'' + ic(v2 v' - v2' v) - (|v'|^2 + |v2'|^2 + lambda |v|^2) v + lambda v + omega v2 v = 0
/// -v2'' + c <iv, v'> - (|v'|^2 + |v2'|^2 + lambda |v|^2) v2 - omega |v|^2 = 0
/// ```
///
/// with `v = m1 + i m3`, evaluated spectrally on the sampled profile.
pub fn tw_residual(profile: &Magnetization, p: &SolitonParams) -> Result<(f64, f64)> {
    let d1 = profile.derivative(1)?;
    let d2 = profile.derivative(2)?;
    let (lambda, c, omega) = (p.lambda, p.c, p.omega);
    let i = Complex64::new(0.0, 1.0);
    let (mut r1, mut r2) = (0.0, 0.0);
    for j in 0..profile.grid().n() {
        let m = profile.at(j);
        let a = d1.at(j);
        let b = d2.at(j);
        let v = Complex64::new(m[0], m[2]);
        let dv = Complex64::new(a[0], a[2]);
        let ddv = Complex64::new(b[0], b[2]);
        let (v2, dv2, ddv2) = (m[1], a[1], b[1]);
        let coef = dv.norm_sqr() + dv2 * dv2 + lambda * v.norm_sqr();
        let e1 = -ddv + i * c * (v2 * dv - dv2 * v) - coef * v + lambda * v + omega * v2 * v;
        let e2 = -ddv2 + c * (i * v * dv.conj()).re - coef * v2 - omega * v.norm_sqr();
        r1 += e1.norm_sqr();
        r2 += e2 * e2;
    }
    let h = profile.grid().spacing();
    Ok(((h * r1).sqrt(), (h * r2).sqrt()))
}

/// Max pointwise residuals of the first integrals satisfied by the profiles.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct IdentityResiduals {
    /// `|v'|^2 = lambda (1 - v2^2) - 2 omega (v2 - delta)`.
    pub gradient: f64,
    /// `<iv, v'> = c (delta - v2)`.
    pub momentum: f64,
    /// `(v2')^2 = (v2 - delta)^2 (lambda (v2 + delta)^2 + 2 omega (v2 + delta) - c^2)`.
    pub v2_derivative: f64,
    /// `|m2(0) - v2_at_zero|` for the second family (needs a node at `x = 0`).
    pub v2_at_zero: Option<f64>,
}

pub fn profile_identity_residuals(profile: &Magnetization, p: &SolitonParams) -> Result<IdentityResiduals> {
    let d1 = profile.derivative(1)?;
    let (lambda, c, omega, d) = (p.lambda, p.c, p.omega, p.delta);
    let mut out = IdentityResiduals {
        gradient: 0.0,
        momentum: 0.0,
        v2_derivative: 0.0,
        v2_at_zero: None,
    };
    for j in 0..profile.grid().n() {
        let m = profile.at(j);
        let a = d1.at(j);
        let v = Complex64::new(m[0], m[2]);
        let dv = Complex64::new(a[0], a[2]);
        let v2 = m[1];
        let grad_sq = a[0] * a[0] + a[1] * a[1] + a[2] * a[2];
        let g = grad_sq - (lambda * (1.0 - v2 * v2) - 2.0 * omega * (v2 - d));
        let mom = (Complex64::new(0.0, 1.0) * v * dv.conj()).re - c * (d - v2);
        let sum = v2 + d;
        let q = (v2 - d).powi(2) * (lambda * sum * sum + 2.0 * omega * sum - c * c);
        let dv2 = a[1] * a[1] - q;
        out.gradient = out.gradient.max(g.abs());
        out.momentum = out.momentum.max(mom.abs());
        out.v2_derivative = out.v2_derivative.max(dv2.abs());
    }
    if let Some(expected) = p.v2_at_zero() {
        let j0 = profile.grid().n() / 2;
        out.v2_at_zero = Some((profile.m2()[j0] - expected).abs());
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::check_sphere_constraint;

    #[test]
    fn cs_soliton_point_values() {
        let p = CsSolitonParams::new(0.0, 1.0).unwrap();
        assert_eq!(p.eval(0.0, 0.0), Complex64::new(2.0, 0.0));
        let p = CsSolitonParams::new(1.0, 1.0).unwrap();
        assert!((p.eval(0.0, 0.0) - Complex64::new(3f64.sqrt(), 0.0)).norm() < 1e-15);
        assert!(CsSolitonParams::new(2.0, 1.0).is_err());
        assert!(CsSolitonParams::new(3.0, 1.0).is_err());
    }

    #[test]
    fn cs_soliton_box_check() {
        let p = CsSolitonParams::new(0.0, 1.0).unwrap();
        let g = Grid::with_half_width(256, 30.0).unwrap();
        assert!(matches!(
            cs_bright_soliton(p, 0.0, &g),
            Err(Error::BoxTooSmall { .. })
        ));
        let g = Grid::with_half_width(512, 40.0).unwrap();
        let psi = cs_bright_soliton(p, 0.0, &g).unwrap();
        assert_eq!(psi.values()[256], Complex64::new(2.0, 0.0));
    }

    #[test]
    fn case_i_point_values() {
        let p = SolitonParams::case_i(1.0, 1.0).unwrap();
        assert_eq!(p.profile_at(0.0), (Complex64::new(1.0, 0.0), 0.0));
        let p = SolitonParams::case_i(4.0, -1.0).unwrap();
        let (v, v2) = p.profile_at(1.0);
        assert!((v.re - 0.265802).abs() < 1e-6);
        assert!((v2 + 0.964028).abs() < 1e-6);
        let (v, v2) = p.profile_at(1e3);
        assert_eq!(v.norm(), 0.0);
        assert_eq!(v2, -1.0);
    }

    #[test]
    fn admissibility() {
        assert!(SolitonParams::case_ii(1.0, 1.0, 0.0, 1.0).is_ok());
        assert!(SolitonParams::case_ii(1.0, 0.0, -0.5, 1.0).is_ok());
        assert!(SolitonParams::case_ii(1.0, 0.0, 0.5, 1.0).is_err());
        assert!(SolitonParams::case_ii(1.0, 0.0, -1.0, 1.0).is_err());
        assert!(SolitonParams::case_ii(1.0, 2.0, 0.0, 1.0).is_err());
        assert!(SolitonParams::case_ii(1.0, 1.0, 0.0, 0.5).is_err());
        assert!(SolitonParams::case_i(1.0, 1.0).unwrap().v2_at_zero().is_none());
        assert!(SolitonParams::new(SolitonCase::I, 1.0, 1.0, 0.0, 1.0).is_err());
    }

    #[test]
    fn valv20_example() {
        let p = SolitonParams::case_ii(1.0, 1.0, 0.0, 1.0).unwrap();
        assert_eq!(p.v2_at_zero(), Some(0.0));
        let (v, v2) = p.profile_at(0.0);
        assert!(v2.abs() < 1e-15);
        assert!((v.norm() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn sign_of_zero_is_unobservable() {
        // c = 0 in the first branch: the sinh coefficient vanishes.
        for (w, d) in [(-0.5, 1.0), (0.5, -1.0), (-0.9, 1.0)] {
            let p = SolitonParams::case_ii(1.0, 0.0, w, d).unwrap();
            let s = p.s();
            assert_eq!(2.0 * s - 0.0 + 2.0 * d * w, 0.0);
            for x in [-3.0, -0.1, 0.7, 5.0] {
                assert_eq!(p.profile_at(x).0.im, 0.0);
            }
        }
    }

    #[test]
    fn sphere_constraint_on_profiles() {
        for p in [
            SolitonParams::case_ii(1.0, 1.0, 0.0, 1.0).unwrap(),
            SolitonParams::case_ii(2.0, 0.5, 1.0, -1.0).unwrap(),
            SolitonParams::case_ii(1.0, 0.3, -0.4, 1.0).unwrap(),
        ] {
            let g = Grid::with_half_width(512, p.required_half_width()).unwrap();
            let m = ll_soliton_case_ii(&p, &g).unwrap();
            assert!(check_sphere_constraint(&m) < 1e-12);
        }
    }

    #[test]
    fn phase_lift_reproduces_profile() {
        let p = SolitonParams::case_ii(1.0, 1.2, 0.3, -1.0).unwrap();
        assert_eq!(ll_soliton_phase(&p, 0.0).unwrap(), 0.0);
        for x in [-4.0, -1.0, 0.5, 2.0, 7.0] {
            let (v, _) = p.profile_at(x);
            let lifted = Complex64::from_polar(v.norm(), ll_soliton_phase(&p, x).unwrap());
            assert!((lifted - v).norm() < 1e-12);
        }
        let p0 = SolitonParams::case_ii(1.0, 0.0, -0.5, 1.0).unwrap();
        assert!(ll_soliton_phase(&p0, 1.0).is_err());
    }

    #[test]
    fn w_at_origin() {
        let g = Grid::with_half_width(256, 40.0).unwrap();
        let w = first_order_correction(0.0, 1.0, &g).unwrap();
        assert!((w.values()[128] - Complex64::new(-1.0, 0.0)).norm() < 1e-15);
        assert!(w.values().iter().all(|z| z.im == 0.0));
        assert!(first_order_correction(3.0, 1.0, &g).is_err());
    }

    #[test]
    fn upsilon_at_origin() {
        let g = Grid::with_half_width(256, 40.0).unwrap();
        let eps = EpsParam::new(0.01).unwrap();
        let u = upsilon_eps(0.0, 1.0, eps, 0.0, &g).unwrap();
        let v = u.values()[128];
        assert_eq!(v.im, 0.0);
        assert!((v.re - 2.0).abs() < 0.02);
        assert!((v.re - 3.96f64.sqrt()).abs() < 1e-14);
        assert!(upsilon_eps(0.0, 1.0, EpsParam::new(0.5).unwrap(), 0.0, &g).is_ok());
        assert!(upsilon_eps(0.0, 2.0, EpsParam::new(0.5).unwrap(), 0.0, &g).is_err());
        assert!(upsilon_eps(-1.0, 1.0, eps, 0.0, &g).is_err());
    }
}
