//! Energy and norm functionals: the Landau-Lifshitz energy and its order-`l`
//! hierarchy, the NLS_eps energy and hierarchy, the cubic Schrodinger
//! invariants, and the composite initial-data size `K_eps`.
//!
//! Time derivatives are always supplied by the equations' right-hand sides,
//! never by differencing a trajectory.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::dynamics::{ll_rhs, nls_eps_rhs, AnisotropyParams};
use crate::error::{Error, Result};
use crate::fields::{
    check_validity, dot3, m2_and_defect, magnetization_from_wavefield, EpsParam, Magnetization, TangentField,
};
use crate::spectral::{ComplexField, RealField, WaveField};

pub const MIN_HIERARCHY_ORDER: usize = 2;
pub const MAX_HIERARCHY_ORDER: usize = 8;
pub const MIN_K: usize = 3;
pub const MAX_K: usize = 6;

fn check_hierarchy_order(order: usize) -> Result<()> {
    if (MIN_HIERARCHY_ORDER..=MAX_HIERARCHY_ORDER).contains(&order) {
        Ok(())
    } else {
        Err(Error::OrderOutOfRange {
            order,
            min: MIN_HIERARCHY_ORDER,
            max: MAX_HIERARCHY_ORDER,
        })
    }
}

fn real_hsq(values: Vec<f64>, field_grid: &crate::spectral::Grid, s: usize) -> Result<f64> {
    Ok(RealField::from_parts(field_grid, values)
        .sobolev_norm(s, true)?
        .powi(2))
}

fn complex_hsq(f: &ComplexField, s: usize) -> Result<f64> {
    Ok(f.sobolev_norm(s, true)?.powi(2))
}

/// `E_LL = (1/2) int |m'|^2 + lambda1 m1^2 + lambda3 m3^2`, by quadrature.
pub fn landau_lifshitz_energy(m: &Magnetization, a: &AnisotropyParams) -> Result<f64> {
    let d = m.derivative(1)?;
    let h = m.grid().spacing();
    let sum: f64 = (0..m.grid().n())
        .map(|j| dot3(d.at(j), d.at(j)) + a.lambda1 * m.m1()[j].powi(2) + a.lambda3 * m.m3()[j].powi(2))
        .sum();
    Ok(0.5 * h * sum)
}

/// Order-`l` Landau-Lifshitz energy, all norms in `H^{l-2}` (homogeneous):
///
/// ```text
/// (1/2) ( |d_t m|^2 + |m''|^2 + (lambda1 + lambda3)(|m1'|^2 + |m3'|^2)
///         + lambda1 lambda3 (|m1|^2 + |m3|^2) )
/// ```
pub fn e_ll_k(m: &Magnetization, dtm: &TangentField, order: usize, a: &AnisotropyParams) -> Result<f64> {
    check_hierarchy_order(order)?;
    m.grid().check_same(dtm.grid())?;
    let s = order - 2;
    let dt_sq = dtm.sobolev_norm(s, true)?.powi(2);
    let lap_sq = m.derivative(2)?.sobolev_norm(s, true)?.powi(2);
    let grid = m.grid();
    let grad_sq = real_hsq(m.m1().to_vec(), grid, s + 1)? + real_hsq(m.m3().to_vec(), grid, s + 1)?;
    let zero_sq = real_hsq(m.m1().to_vec(), grid, s)? + real_hsq(m.m3().to_vec(), grid, s)?;
    Ok(0.5 * (dt_sq + lap_sq + (a.lambda1 + a.lambda3) * grad_sq + a.lambda1 * a.lambda3 * zero_sq))
}

/// `(1/2) int |psi|^2 + eps |psi'|^2 + eps^2 <psi, psi'>^2 / (1 - eps |psi|^2)`.
///
/// Needs `eps |psi|^2 < 1` everywhere.
pub fn nls_energy_eps(psi: &WaveField, eps: EpsParam) -> Result<f64> {
    let margin = eps.sqrt() * psi.linf_norm();
    if !(margin < 1.0) {
        return Err(Error::Validity { margin, bound: 1.0 });
    }
    let e = eps.value();
    let d = psi.derivative(1)?;
    let h = psi.grid().spacing();
    let sum: f64 = psi
        .values()
        .iter()
        .zip(d.values())
        .map(|(&p, &dp)| {
            let inner = (p * dp.conj()).re;
            p.norm_sqr() + e * dp.norm_sqr() + e * e * inner * inner / (1.0 - e * p.norm_sqr())
        })
        .sum();
    Ok(0.5 * h * sum)
}

/// The six squared norms making up the order-`l` NLS_eps energy, each in
/// `H^{l-2}` (homogeneous). The energy is half their sum.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct HierarchyTerms {
    /// `|psi|^2`
    pub mass: f64,
    /// `|eps d_t psi - i psi|^2`
    pub phase_time: f64,
    /// `eps^2 |psi''|^2`
    pub curvature: f64,
    /// `eps |d_t m2|^2`, with `d_t m2 = eps (<i psi, psi'>)'`
    pub m2_time: f64,
    /// `eps |m2''|^2`
    pub m2_curvature: f64,
    /// `2 eps |psi'|^2`
    pub gradient: f64,
}

impl HierarchyTerms {
    pub fn total(&self) -> f64 {
        0.5 * (self.mass
            + self.phase_time
            + self.curvature
            + self.m2_time
            + self.m2_curvature
            + self.gradient)
    }
}

pub fn frak_e_k_terms(
    psi: &WaveField,
    dtpsi: &WaveField,
    eps: EpsParam,
    order: usize,
) -> Result<HierarchyTerms> {
    check_hierarchy_order(order)?;
    check_validity(psi, eps, 1.0 - f64::EPSILON)?;
    let grid = psi.grid();
    grid.check_same(dtpsi.grid())?;
    let e = eps.value();
    let s = order - 2;
    let i = Complex64::new(0.0, 1.0);
    let (d1, d2) = psi.first_two_derivatives();

    let phase = ComplexField::from_parts(
        grid,
        dtpsi
            .values()
            .iter()
            .zip(psi.values())
            .map(|(&dt, &p)| e * dt - i * p)
            .collect(),
    );
    let flux: Vec<f64> = psi
        .values()
        .iter()
        .zip(d1.values())
        .map(|(&p, &dp)| (i * p * dp.conj()).re)
        .collect();
    let dt_m2 = RealField::from_parts(grid, flux).derivative(1)?;
    let m2: Vec<f64> = psi.values().iter().map(|&p| m2_and_defect(p, e).0).collect();
    let m2_dd = RealField::from_parts(grid, m2).derivative(2)?;

    Ok(HierarchyTerms {
        mass: complex_hsq(psi, s)?,
        phase_time: complex_hsq(&phase, s)?,
        curvature: e * e * complex_hsq(&d2, s)?,
        m2_time: e * e * e * real_hsq(dt_m2.into_values(), grid, s)?,
        m2_curvature: e * real_hsq(m2_dd.into_values(), grid, s)?,
        gradient: 2.0 * e * complex_hsq(&d1, s)?,
    })
}

/// Order-`l` NLS_eps energy, half the sum of [`HierarchyTerms`].
pub fn frak_e_k(psi: &WaveField, dtpsi: &WaveField, eps: EpsParam, order: usize) -> Result<f64> {
    Ok(frak_e_k_terms(psi, dtpsi, eps, order)?.total())
}

/// Two-sided comparison between an NLS_eps energy and the plain norm it
/// controls.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NormEquivalence {
    pub order: usize,
    /// Order 1: `(1/2)(|psi|^2 + eps|psi'|^2)` in L2.
    /// Order `l >= 2`: `(1/2)(|psi|^2 + eps|psi'|^2 + eps^2|psi''|^2)` in `H^{l-2}`.
    pub lower_combo: f64,
    pub energy: f64,
    /// `energy / lower_combo`; 1 when both vanish.
    pub ratio: f64,
    pub lower_bound_holds: bool,
}

/// Evaluates the energy against its lower comparison norm. Order 1 compares
/// the base energy [`nls_energy_eps`]; orders `2..=8` compare [`frak_e_k`].
pub fn norm_equivalence_check(
    psi: &WaveField,
    dtpsi: &WaveField,
    eps: EpsParam,
    order: usize,
) -> Result<NormEquivalence> {
    let e = eps.value();
    let (lower_combo, energy) = if order == 1 {
        let grad = psi.derivative(1)?.l2_norm().powi(2);
        (
            0.5 * (psi.l2_norm().powi(2) + e * grad),
            nls_energy_eps(psi, eps)?,
        )
    } else {
        let t = frak_e_k_terms(psi, dtpsi, eps, order)?;
        (0.5 * (t.mass + 0.5 * t.gradient + t.curvature), t.total())
    };
    let ratio = if lower_combo > 0.0 {
        energy / lower_combo
    } else if energy == 0.0 {
        1.0
    } else {
        f64::INFINITY
    };
    // The lower bound is a sub-sum of the energy's terms; allow only
    // summation rounding.
    let lower_bound_holds = lower_combo <= energy * (1.0 + 1e-12);
    Ok(NormEquivalence {
        order,
        lower_combo,
        energy,
        ratio,
        lower_bound_holds,
    })
}

/// `(M2, E_CS) = (int |psi|^2, (1/2) int |psi'|^2 - (1/4) int |psi|^4)`.
pub fn cs_invariants(psi: &WaveField) -> (f64, f64) {
    let d = psi.derivative(1).expect("order 1 is in range");
    let h = psi.grid().spacing();
    let mut mass = 0.0;
    let mut energy = 0.0;
    for (p, dp) in psi.values().iter().zip(d.values()) {
        let r = p.norm_sqr();
        mass += r;
        energy += 0.5 * dp.norm_sqr() - 0.25 * r * r;
    }
    (h * mass, h * energy)
}

/// Size of the initial data and the horizon it guarantees.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct KEpsReport {
    pub k: usize,
    pub a_const: f64,
    /// `|psi0|_{H^k} + |psi_eps0|_{H^k} + eps^{1/2}|psi_eps0|_{Hdot^{k+1}} + eps|psi_eps0|_{Hdot^{k+2}}`
    pub k_eps_0: f64,
    /// `A eps^{1/2} K`
    pub condition_lhs: f64,
    pub condition_holds: bool,
    /// `1 / (A K^2)`; `None` when `K = 0`.
    pub t_eps_lower: Option<f64>,
}

pub fn k_eps_0(
    psi0: &WaveField,
    psi_eps0: &WaveField,
    eps: EpsParam,
    k: usize,
    a_const: f64,
) -> Result<KEpsReport> {
    if !(MIN_K..=MAX_K).contains(&k) {
        return Err(Error::OrderOutOfRange {
            order: k,
            min: MIN_K,
            max: MAX_K,
        });
    }
    if !(a_const > 0.0 && a_const.is_finite()) {
        return Err(Error::InvalidConfig(format!("A = {a_const} must be positive")));
    }
    psi0.grid().check_same(psi_eps0.grid())?;
    let kk = psi0.sobolev_norm(k, false)?
        + psi_eps0.sobolev_norm(k, false)?
        + eps.sqrt() * psi_eps0.sobolev_norm(k + 1, true)?
        + eps.value() * psi_eps0.sobolev_norm(k + 2, true)?;
    let condition_lhs = a_const * eps.sqrt() * kk;
    Ok(KEpsReport {
        k,
        a_const,
        k_eps_0: kk,
        condition_lhs,
        condition_holds: condition_lhs <= 1.0,
        t_eps_lower: (kk > 0.0).then(|| 1.0 / (a_const * kk * kk)),
    })
}

/// All energies of a wave field and of the magnetization it maps to at `t = 0`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnergyReport {
    pub eps: f64,
    pub orders: Vec<usize>,
    pub e_ll: f64,
    pub e_ll_k: Vec<f64>,
    pub frak_e: f64,
    pub frak_e_k: Vec<f64>,
    pub m2_mass: f64,
    pub e_cs: f64,
}

/// Builds an [`EnergyReport`] with `lambda1 = lambda3 = 1/eps` and time
/// derivatives from the right-hand sides.
pub fn energy_report(psi: &WaveField, eps: EpsParam, orders: &[usize]) -> Result<EnergyReport> {
    let a = AnisotropyParams::from_eps(eps);
    let m = magnetization_from_wavefield(psi, eps, 0.0)?;
    let dtm = ll_rhs(&m, &a)?;
    let dtpsi = nls_eps_rhs(psi, eps)?;
    let mut e_ll_k_vals = Vec::with_capacity(orders.len());
    let mut frak = Vec::with_capacity(orders.len());
    for &l in orders {
        e_ll_k_vals.push(e_ll_k(&m, &dtm, l, &a)?);
        frak.push(frak_e_k(psi, &dtpsi, eps, l)?);
    }
    let (m2_mass, e_cs) = cs_invariants(psi);
    Ok(EnergyReport {
        eps: eps.value(),
        orders: orders.to_vec(),
        e_ll: landau_lifshitz_energy(&m, &a)?,
        e_ll_k: e_ll_k_vals,
        frak_e: nls_energy_eps(psi, eps)?,
        frak_e_k: frak,
        m2_mass,
        e_cs,
    })
}
