//! Magnetizations on the unit sphere, complex wavefields, and the change of
//! variables `Psi_eps = eps^{-1/2} (m1 + i m3) e^{it/eps}` between them.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::spectral::{ComplexField, Grid, RealField, WaveField};

/// Default cap on `eps^{1/2} max|psi|` accepted by the mapping and the solvers.
pub const DEFAULT_VALIDITY_SIGMA: f64 = 0.9;

/// Anisotropy scaling `eps`, with `lambda1 = lambda3 = 1/eps`.
#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct EpsParam(f64);

impl EpsParam {
    pub fn new(eps: f64) -> Result<Self> {
        if eps > 0.0 && eps < 1.0 {
            Ok(Self(eps))
        } else {
            Err(Error::InvalidEps(eps))
        }
    }

    pub fn value(self) -> f64 {
        self.0
    }

    pub fn sqrt(self) -> f64 {
        self.0.sqrt()
    }

    /// `lambda = 1 / eps`.
    pub fn lambda(self) -> f64 {
        1.0 / self.0
    }
}

impl TryFrom<f64> for EpsParam {
    type Error = Error;
    fn try_from(v: f64) -> Result<Self> {
        Self::new(v)
    }
}

impl From<EpsParam> for f64 {
    fn from(e: EpsParam) -> f64 {
        e.0
    }
}

/// Three real components on a grid.
#[derive(Clone, Debug, PartialEq)]
pub struct VectorField {
    grid: Grid,
    comps: [Vec<f64>; 3],
}

/// Time derivatives and other tangent vectors along a magnetization.
pub type TangentField = VectorField;

impl VectorField {
    pub fn new(grid: Grid, m1: Vec<f64>, m2: Vec<f64>, m3: Vec<f64>) -> Result<Self> {
        for (i, c) in [&m1, &m2, &m3].iter().enumerate() {
            if c.len() != grid.n() {
                return Err(Error::InvalidGrid(format!(
                    "component {} has {} samples but grid has {} nodes",
                    i + 1,
                    c.len(),
                    grid.n()
                )));
            }
        }
        Ok(Self {
            grid,
            comps: [m1, m2, m3],
        })
    }

    pub fn zeros(grid: &Grid) -> Self {
        let n = grid.n();
        Self {
            grid: grid.clone(),
            comps: [vec![0.0; n], vec![0.0; n], vec![0.0; n]],
        }
    }

    pub fn from_fn(grid: &Grid, f: impl Fn(f64) -> [f64; 3]) -> Self {
        let n = grid.n();
        let mut comps = [vec![0.0; n], vec![0.0; n], vec![0.0; n]];
        for (j, &x) in grid.nodes().iter().enumerate() {
            let v = f(x);
            for (c, vi) in comps.iter_mut().zip(v) {
                c[j] = vi;
            }
        }
        Self {
            grid: grid.clone(),
            comps,
        }
    }

    pub(crate) fn from_comps(grid: &Grid, comps: [Vec<f64>; 3]) -> Self {
        Self {
            grid: grid.clone(),
            comps,
        }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    /// Component `i` in `0..3` (so `comp(1)` is `m2`).
    pub fn comp(&self, i: usize) -> &[f64] {
        &self.comps[i]
    }

    pub fn comps(&self) -> &[Vec<f64>; 3] {
        &self.comps
    }

    pub fn into_comps(self) -> [Vec<f64>; 3] {
        self.comps
    }

    pub fn at(&self, j: usize) -> [f64; 3] {
        [self.comps[0][j], self.comps[1][j], self.comps[2][j]]
    }

    pub fn component_field(&self, i: usize) -> RealField {
        RealField::new(self.grid.clone(), self.comps[i].clone()).expect("length checked")
    }

    /// Componentwise `D^order`, with the edge-step treatment of
    /// [`RealField::derivative`] for components that plateau at different
    /// values on the two edges.
    pub fn derivative(&self, order: usize) -> Result<Self> {
        let mut out: [Vec<f64>; 3] = Default::default();
        for (i, slot) in out.iter_mut().enumerate() {
            *slot = self.component_field(i).derivative(order)?.into_values();
        }
        Ok(Self::from_comps(&self.grid, out))
    }

    pub fn map_pointwise(&self, f: impl Fn([f64; 3]) -> [f64; 3]) -> Self {
        let n = self.grid.n();
        let mut comps = [vec![0.0; n], vec![0.0; n], vec![0.0; n]];
        for j in 0..n {
            let v = f(self.at(j));
            for (c, vi) in comps.iter_mut().zip(v) {
                c[j] = vi;
            }
        }
        Self::from_comps(&self.grid, comps)
    }

    pub fn zip_pointwise(&self, other: &Self, f: impl Fn([f64; 3], [f64; 3]) -> [f64; 3]) -> Result<Self> {
        self.grid.check_same(&other.grid)?;
        let n = self.grid.n();
        let mut comps = [vec![0.0; n], vec![0.0; n], vec![0.0; n]];
        for j in 0..n {
            let v = f(self.at(j), other.at(j));
            for (c, vi) in comps.iter_mut().zip(v) {
                c[j] = vi;
            }
        }
        Ok(Self::from_comps(&self.grid, comps))
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.zip_pointwise(other, |a, b| [a[0] + b[0], a[1] + b[1], a[2] + b[2]])
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.zip_pointwise(other, |a, b| [a[0] - b[0], a[1] - b[1], a[2] - b[2]])
    }

    pub fn scale(&self, s: f64) -> Self {
        self.map_pointwise(|a| [s * a[0], s * a[1], s * a[2]])
    }

    /// `self + s * other`.
    pub fn add_scaled(&self, other: &Self, s: f64) -> Result<Self> {
        self.zip_pointwise(other, |a, b| [a[0] + s * b[0], a[1] + s * b[1], a[2] + s * b[2]])
    }

    /// Pointwise dot product.
    pub fn dot(&self, other: &Self) -> Result<Vec<f64>> {
        self.grid.check_same(&other.grid)?;
        Ok((0..self.grid.n())
            .map(|j| dot3(self.at(j), other.at(j)))
            .collect())
    }

    /// Pointwise cross product.
    pub fn cross(&self, other: &Self) -> Result<Self> {
        self.zip_pointwise(other, cross3)
    }

    /// Pointwise squared Euclidean norm.
    pub fn norm_sqr_pointwise(&self) -> Vec<f64> {
        (0..self.grid.n()).map(|j| dot3(self.at(j), self.at(j))).collect()
    }

    /// `(int |v|^2)^{1/2}` by quadrature.
    pub fn l2_norm(&self) -> f64 {
        let h = self.grid.spacing();
        (h * self.comps.iter().flatten().map(|v| v * v).sum::<f64>()).sqrt()
    }

    pub fn linf_norm(&self) -> f64 {
        (0..self.grid.n())
            .map(|j| dot3(self.at(j), self.at(j)).sqrt())
            .fold(0.0, f64::max)
    }

    /// Sobolev norm of the vector field, summing the component norms in
    /// quadrature. Only meaningful when every component has a periodic
    /// extension.
    pub fn sobolev_norm(&self, s: usize, homogeneous: bool) -> Result<f64> {
        let mut sq = 0.0;
        for i in 0..3 {
            sq += self.component_field(i).sobolev_norm(s, homogeneous)?.powi(2);
        }
        Ok(sq.sqrt())
    }
}

pub(crate) fn dot3(a: [f64; 3], b: [f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

pub(crate) fn cross3(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

/// Sphere-valued magnetization `m = (m1, m2, m3)`.
///
/// The unit-norm invariant is not enforced on construction (integrators
/// produce slightly off-sphere intermediates); use
/// [`check_sphere_constraint`] and [`renormalize`].
#[derive(Clone, Debug, PartialEq)]
pub struct Magnetization(VectorField);

impl std::ops::Deref for Magnetization {
    type Target = VectorField;
    fn deref(&self) -> &VectorField {
        &self.0
    }
}

impl Magnetization {
    pub fn new(grid: Grid, m1: Vec<f64>, m2: Vec<f64>, m3: Vec<f64>) -> Result<Self> {
        VectorField::new(grid, m1, m2, m3).map(Self)
    }

    pub fn from_vector(v: VectorField) -> Self {
        Self(v)
    }

    pub fn from_fn(grid: &Grid, f: impl Fn(f64) -> [f64; 3]) -> Self {
        Self(VectorField::from_fn(grid, f))
    }

    /// Spatially constant field.
    pub fn constant(grid: &Grid, v: [f64; 3]) -> Self {
        Self::from_fn(grid, |_| v)
    }

    /// `e2 = (0, 1, 0)` everywhere.
    pub fn e2(grid: &Grid) -> Self {
        Self::constant(grid, [0.0, 1.0, 0.0])
    }

    pub fn as_vector(&self) -> &VectorField {
        &self.0
    }

    pub fn into_vector(self) -> VectorField {
        self.0
    }

    pub fn m1(&self) -> &[f64] {
        self.0.comp(0)
    }

    pub fn m2(&self) -> &[f64] {
        self.0.comp(1)
    }

    pub fn m3(&self) -> &[f64] {
        self.0.comp(2)
    }

    /// `m1 + i m3`.
    pub fn m_check(&self) -> ComplexField {
        ComplexField::from_fn_indexed(self.grid(), |j| Complex64::new(self.m1()[j], self.m3()[j]))
    }

    /// Builds `m` from `m1 + i m3` and `m2`.
    pub fn from_check(m_check: &ComplexField, m2: Vec<f64>) -> Result<Self> {
        let m1 = m_check.values().iter().map(|z| z.re).collect();
        let m3 = m_check.values().iter().map(|z| z.im).collect();
        Self::new(m_check.grid().clone(), m1, m2, m3)
    }
}

/// Max `|m . m - 1|` over nodes.
pub fn check_sphere_constraint(m: &Magnetization) -> f64 {
    m.norm_sqr_pointwise()
        .into_iter()
        .map(|s| (s - 1.0).abs())
        .fold(0.0, f64::max)
}

/// Projects every node back onto the unit sphere.
pub fn renormalize(m: &Magnetization) -> Result<Magnetization> {
    let norms = m.norm_sqr_pointwise();
    for (index, s) in norms.iter().enumerate() {
        let norm = s.sqrt();
        // `!(norm >= 0.5)` also catches NaN.
        if !(norm >= 0.5) {
            return Err(Error::NormCollapse { index, norm });
        }
    }
    Ok(Magnetization(m.map_pointwise(|v| {
        let r = dot3(v, v).sqrt();
        [v[0] / r, v[1] / r, v[2] / r]
    })))
}

/// `eps^{1/2} max|psi|`, the quantity the validity condition bounds.
pub fn validity_margin(psi: &WaveField, eps: EpsParam) -> f64 {
    eps.sqrt() * psi.linf_norm()
}

pub(crate) fn check_validity(psi: &WaveField, eps: EpsParam, sigma: f64) -> Result<f64> {
    let margin = validity_margin(psi, eps);
    // Written so that NaN fails the check.
    if margin <= sigma {
        Ok(margin)
    } else {
        Err(Error::Validity { margin, bound: sigma })
    }
}

/// `m2 = (1 - eps |psi|^2)^{1/2}` and `1 - m2`, the latter computed without
/// cancellation as `eps |psi|^2 / (1 + m2)`.
pub(crate) fn m2_and_defect(psi: Complex64, eps: f64) -> (f64, f64) {
    let a = eps * psi.norm_sqr();
    let m2 = (1.0 - a).sqrt();
    (m2, a / (1.0 + m2))
}

/// `e^{i theta}`.
pub(crate) fn unit_phase(theta: f64) -> Complex64 {
    Complex64::from_polar(1.0, theta)
}

/// `m = (eps^{1/2} Re(e^{-it/eps} psi), (1 - eps|psi|^2)^{1/2}, eps^{1/2} Im(e^{-it/eps} psi))`,
/// with the default validity cap [`DEFAULT_VALIDITY_SIGMA`].
pub fn magnetization_from_wavefield(psi: &WaveField, eps: EpsParam, t: f64) -> Result<Magnetization> {
    magnetization_from_wavefield_with_sigma(psi, eps, t, DEFAULT_VALIDITY_SIGMA)
}

pub fn magnetization_from_wavefield_with_sigma(
    psi: &WaveField,
    eps: EpsParam,
    t: f64,
    sigma: f64,
) -> Result<Magnetization> {
    check_validity(psi, eps, sigma)?;
    let rot = unit_phase(-t / eps.value()) * eps.sqrt();
    let n = psi.grid().n();
    let (mut m1, mut m2, mut m3) = (
        Vec::with_capacity(n),
        Vec::with_capacity(n),
        Vec::with_capacity(n),
    );
    for &z in psi.values() {
        let w = rot * z;
        m1.push(w.re);
        m2.push(m2_and_defect(z, eps.value()).0);
        m3.push(w.im);
    }
    Magnetization::new(psi.grid().clone(), m1, m2, m3)
}

/// `Psi_eps = eps^{-1/2} (m1 + i m3) e^{it/eps}`; requires `m2 > 0`.
pub fn wavefield_from_magnetization(m: &Magnetization, eps: EpsParam, t: f64) -> Result<WaveField> {
    if let Some((index, &value)) = m.m2().iter().enumerate().find(|(_, &v)| !(v > 0.0)) {
        return Err(Error::NonPositiveM2 { index, value });
    }
    let rot = unit_phase(t / eps.value()) / eps.sqrt();
    Ok(m.m_check().scale(rot))
}

/// Max pointwise gap between `|m'|^2 + (m1^2 + m3^2)/eps` and
/// `|psi|^2 + eps|psi'|^2 + eps^2 <psi, psi'>^2 / (1 - eps|psi|^2)`.
pub fn scaled_energy_identity_residual(m: &Magnetization, psi: &WaveField, eps: EpsParam) -> Result<f64> {
    m.grid().check_same(psi.grid())?;
    let e = eps.value();
    let dm = m.derivative(1)?;
    let dpsi = psi.derivative(1)?;
    let mut worst: f64 = 0.0;
    for j in 0..m.grid().n() {
        let mj = m.at(j);
        let lhs = dot3(dm.at(j), dm.at(j)) + (mj[0] * mj[0] + mj[2] * mj[2]) / e;
        let p = psi.values()[j];
        let dp = dpsi.values()[j];
        let inner = (p * dp.conj()).re;
        let rhs = p.norm_sqr() + e * dp.norm_sqr() + e * e * inner * inner / (1.0 - e * p.norm_sqr());
        worst = worst.max((lhs - rhs).abs());
    }
    Ok(worst)
}
