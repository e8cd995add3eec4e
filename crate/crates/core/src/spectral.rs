//! Uniform periodic grids, Fourier differentiation, quadrature and Sobolev norms.
//!
//! Every field in the crate lives on a [`Grid`]: `n` equispaced nodes
//! `x_j = -L/2 + j L / n` on a periodic box of length `L`. Wavenumbers are
//! stored in the natural FFT order (`0, 1, ..., n/2 - 1, -n/2, ..., -1`
//! times `2 pi / L`), so `wavenumbers()[n / 2]` is the Nyquist mode.
//!
//! Conventions fixed here and relied upon everywhere else:
//! - quadrature is the uniform rule `h * sum_j f(x_j)`;
//! - `D^k` multiplies Fourier coefficients by `(i kappa)^k`; for odd `k` the
//!   Nyquist coefficient is zeroed so that real fields stay real;
//! - `|f|_{H^s dot}^2 = (L / n^2) sum_p |kappa_p|^{2s} |F_p|^2` with `F` the
//!   unnormalized DFT, and `|f|_{H^s}^2` sums the homogeneous norms of orders
//!   `0..=s`.

use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};

/// Highest derivative / Sobolev order supported by the kernels.
pub const MAX_ORDER: usize = 8;

struct GridInner {
    n: usize,
    length: f64,
    spacing: f64,
    nodes: Vec<f64>,
    wavenumbers: Vec<f64>,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

/// Uniform periodic 1-D grid. Cloning is cheap (shared, immutable).
#[derive(Clone)]
pub struct Grid {
    inner: Arc<GridInner>,
}

impl fmt::Debug for Grid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Grid")
            .field("n", &self.n())
            .field("length", &self.length())
            .finish()
    }
}

impl PartialEq for Grid {
    fn eq(&self, other: &Self) -> bool {
        Arc::ptr_eq(&self.inner, &other.inner) || (self.n() == other.n() && self.length() == other.length())
    }
}

/// Builds a grid of `n` points on a box of length `length`.
pub fn make_grid(n: usize, length: f64) -> Result<Grid> {
    Grid::new(n, length)
}

impl Grid {
    pub fn new(n: usize, length: f64) -> Result<Self> {
        if !n.is_multiple_of(2) {
            return Err(Error::InvalidGrid(format!("n = {n} must be even")));
        }
        if n < 8 {
            return Err(Error::InvalidGrid(format!("n = {n} must be at least 8")));
        }
        if !(length.is_finite() && length > 0.0) {
            return Err(Error::InvalidGrid(format!(
                "length = {length} must be positive and finite"
            )));
        }
        let spacing = length / n as f64;
        let nodes = (0..n)
            .map(|j| -0.5 * length + j as f64 * length / n as f64)
            .collect();
        let base = 2.0 * std::f64::consts::PI / length;
        let wavenumbers = (0..n)
            .map(|p| {
                let signed = if p < n / 2 { p as i64 } else { p as i64 - n as i64 };
                base * signed as f64
            })
            .collect();
        let mut planner = FftPlanner::new();
        let forward = planner.plan_fft_forward(n);
        let inverse = planner.plan_fft_inverse(n);
        Ok(Self {
            inner: Arc::new(GridInner {
                n,
                length,
                spacing,
                nodes,
                wavenumbers,
                forward,
                inverse,
            }),
        })
    }

    /// Grid on `[-half_width, half_width)`.
    pub fn with_half_width(n: usize, half_width: f64) -> Result<Self> {
        Self::new(n, 2.0 * half_width)
    }

    pub fn n(&self) -> usize {
        self.inner.n
    }

    pub fn length(&self) -> f64 {
        self.inner.length
    }

    pub fn half_width(&self) -> f64 {
        0.5 * self.inner.length
    }

    pub fn spacing(&self) -> f64 {
        self.inner.spacing
    }

    pub fn nodes(&self) -> &[f64] {
        &self.inner.nodes
    }

    /// Wavenumbers in FFT order.
    pub fn wavenumbers(&self) -> &[f64] {
        &self.inner.wavenumbers
    }

    pub fn nyquist_index(&self) -> usize {
        self.inner.n / 2
    }

    /// Largest resolved `|kappa|`, i.e. `pi / h`.
    pub fn max_wavenumber(&self) -> f64 {
        std::f64::consts::PI / self.inner.spacing
    }

    /// Index of the node closest to `x`.
    pub fn node_index(&self, x: f64) -> usize {
        let j = ((x + self.half_width()) / self.spacing()).round();
        (j.max(0.0) as usize).min(self.n() - 1)
    }

    /// Unnormalized forward DFT.
    pub fn forward(&self, values: &[Complex64]) -> Vec<Complex64> {
        let mut buf = values.to_vec();
        self.inner.forward.process(&mut buf);
        buf
    }

    /// Inverse DFT including the `1/n` normalization.
    pub fn inverse(&self, spectrum: &[Complex64]) -> Vec<Complex64> {
        let mut buf = spectrum.to_vec();
        self.inner.inverse.process(&mut buf);
        let scale = 1.0 / self.inner.n as f64;
        buf.iter_mut().for_each(|z| *z *= scale);
        buf
    }

    pub(crate) fn inverse_in_place(&self, spectrum: &mut [Complex64]) {
        self.inner.inverse.process(spectrum);
        let scale = 1.0 / self.inner.n as f64;
        spectrum.iter_mut().for_each(|z| *z *= scale);
    }

    /// Fourier multiplier of `D^order` at index `p`.
    pub fn derivative_symbol(&self, p: usize, order: usize) -> Complex64 {
        if order == 0 {
            return Complex64::new(1.0, 0.0);
        }
        if order % 2 == 1 && p == self.nyquist_index() {
            return Complex64::new(0.0, 0.0);
        }
        Complex64::new(0.0, self.inner.wavenumbers[p]).powu(order as u32)
    }

    /// Applies `D^order` to a spectrum in place.
    pub(crate) fn apply_symbol(&self, spectrum: &mut [Complex64], order: usize) {
        if order == 0 {
            return;
        }
        for (p, z) in spectrum.iter_mut().enumerate() {
            *z *= self.derivative_symbol(p, order);
        }
    }

    pub(crate) fn check_same(&self, other: &Grid) -> Result<()> {
        if self == other {
            Ok(())
        } else {
            Err(Error::GridMismatch {
                left_n: self.n(),
                left_len: self.length(),
                right_n: other.n(),
                right_len: other.length(),
            })
        }
    }

    /// Sum of `|kappa_p|^{2 sigma}` weights for the (homogeneous or full)
    /// Sobolev norm of order `s`.
    fn sobolev_weight(&self, p: usize, s: usize, homogeneous: bool) -> f64 {
        let k2 = self.inner.wavenumbers[p].powi(2);
        if homogeneous {
            k2.powi(s as i32)
        } else {
            (0..=s).map(|sigma| k2.powi(sigma as i32)).sum()
        }
    }

    /// Squared Sobolev norm from an unnormalized spectrum.
    pub(crate) fn sobolev_norm_sq_from_spectrum(
        &self,
        spectrum: &[Complex64],
        s: usize,
        homogeneous: bool,
    ) -> f64 {
        let n = self.n() as f64;
        let sum: f64 = spectrum
            .iter()
            .enumerate()
            .map(|(p, z)| self.sobolev_weight(p, s, homogeneous) * z.norm_sqr())
            .sum();
        self.length() / (n * n) * sum
    }
}

fn check_order(order: usize) -> Result<()> {
    if order > MAX_ORDER {
        Err(Error::OrderOutOfRange {
            order,
            min: 0,
            max: MAX_ORDER,
        })
    } else {
        Ok(())
    }
}

/// Complex samples on a grid.
#[derive(Clone, Debug, PartialEq)]
pub struct ComplexField {
    grid: Grid,
    values: Vec<Complex64>,
}

/// Complex wavefield (`Psi`, `Psi_eps`, `Upsilon_eps`, `W`).
pub type WaveField = ComplexField;

impl ComplexField {
    pub fn new(grid: Grid, values: Vec<Complex64>) -> Result<Self> {
        if values.len() != grid.n() {
            return Err(Error::InvalidGrid(format!(
                "field has {} samples but grid has {} nodes",
                values.len(),
                grid.n()
            )));
        }
        Ok(Self { grid, values })
    }

    pub fn zeros(grid: &Grid) -> Self {
        Self {
            values: vec![Complex64::new(0.0, 0.0); grid.n()],
            grid: grid.clone(),
        }
    }

    pub fn from_fn(grid: &Grid, f: impl Fn(f64) -> Complex64) -> Self {
        Self {
            values: grid.nodes().iter().map(|&x| f(x)).collect(),
            grid: grid.clone(),
        }
    }

    pub fn from_fn_indexed(grid: &Grid, f: impl Fn(usize) -> Complex64) -> Self {
        Self {
            values: (0..grid.n()).map(f).collect(),
            grid: grid.clone(),
        }
    }

    pub(crate) fn from_parts(grid: &Grid, values: Vec<Complex64>) -> Self {
        debug_assert_eq!(values.len(), grid.n());
        Self {
            grid: grid.clone(),
            values,
        }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [Complex64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<Complex64> {
        self.values
    }

    pub fn map(&self, f: impl Fn(Complex64) -> Complex64) -> Self {
        Self::from_parts(&self.grid, self.values.iter().map(|&z| f(z)).collect())
    }

    pub fn scale(&self, a: Complex64) -> Self {
        self.map(|z| a * z)
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, |a, b| a - b)
    }

    pub fn zip_with(&self, other: &Self, f: impl Fn(Complex64, Complex64) -> Complex64) -> Result<Self> {
        self.grid.check_same(&other.grid)?;
        Ok(Self::from_parts(
            &self.grid,
            self.values
                .iter()
                .zip(&other.values)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        ))
    }

    /// Unnormalized DFT of the samples.
    pub fn spectrum(&self) -> Vec<Complex64> {
        self.grid.forward(&self.values)
    }

    pub fn derivative(&self, order: usize) -> Result<Self> {
        check_order(order)?;
        if order == 0 {
            return Ok(self.clone());
        }
        if self.values.iter().all(|&v| v == self.values[0]) {
            return Ok(Self::zeros(&self.grid));
        }
        let mut spec = self.spectrum();
        self.grid.apply_symbol(&mut spec, order);
        self.grid.inverse_in_place(&mut spec);
        Ok(Self::from_parts(&self.grid, spec))
    }

    /// `(f', f'')` with a single forward transform.
    pub fn first_two_derivatives(&self) -> (Self, Self) {
        let spec = self.spectrum();
        let mut d1 = spec.clone();
        let mut d2 = spec;
        self.grid.apply_symbol(&mut d1, 1);
        self.grid.apply_symbol(&mut d2, 2);
        self.grid.inverse_in_place(&mut d1);
        self.grid.inverse_in_place(&mut d2);
        (Self::from_parts(&self.grid, d1), Self::from_parts(&self.grid, d2))
    }

    pub fn sobolev_norm(&self, s: usize, homogeneous: bool) -> Result<f64> {
        check_order(s)?;
        Ok(self
            .grid
            .sobolev_norm_sq_from_spectrum(&self.spectrum(), s, homogeneous)
            .sqrt())
    }

    /// Quadrature L2 norm `(h sum |f_j|^2)^(1/2)`.
    pub fn l2_norm(&self) -> f64 {
        (self.grid.spacing() * self.values.iter().map(|z| z.norm_sqr()).sum::<f64>()).sqrt()
    }

    pub fn linf_norm(&self) -> f64 {
        self.values.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// Quadrature integral of `g(f_j)`.
    pub fn integrate(&self, g: impl Fn(Complex64) -> f64) -> f64 {
        self.grid.spacing() * self.values.iter().map(|&z| g(z)).sum::<f64>()
    }

    pub fn real_part(&self) -> RealField {
        RealField::from_parts(&self.grid, self.values.iter().map(|z| z.re).collect())
    }

    pub fn imag_part(&self) -> RealField {
        RealField::from_parts(&self.grid, self.values.iter().map(|z| z.im).collect())
    }
}

/// Real samples on a grid.
#[derive(Clone, Debug, PartialEq)]
pub struct RealField {
    grid: Grid,
    values: Vec<f64>,
}

impl RealField {
    pub fn new(grid: Grid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.n() {
            return Err(Error::InvalidGrid(format!(
                "field has {} samples but grid has {} nodes",
                values.len(),
                grid.n()
            )));
        }
        Ok(Self { grid, values })
    }

    pub fn from_fn(grid: &Grid, f: impl Fn(f64) -> f64) -> Self {
        Self {
            values: grid.nodes().iter().map(|&x| f(x)).collect(),
            grid: grid.clone(),
        }
    }

    pub(crate) fn from_parts(grid: &Grid, values: Vec<f64>) -> Self {
        debug_assert_eq!(values.len(), grid.n());
        Self {
            grid: grid.clone(),
            values,
        }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn to_complex(&self) -> ComplexField {
        ComplexField::from_parts(
            &self.grid,
            self.values.iter().map(|&v| Complex64::new(v, 0.0)).collect(),
        )
    }

    /// `D^order` of a real field.
    ///
    /// Fields that plateau at two different constants at the box edges (a
    /// domain-wall `m2 = tanh`, say) have no smooth periodic extension. For
    /// those the jump is carried by an analytic `tanh` step of width `L/40`
    /// centred in the box; only the periodic remainder goes through the FFT.
    /// Resolving that step needs `n >= 512`.
    pub fn derivative(&self, order: usize) -> Result<Self> {
        check_order(order)?;
        if order == 0 {
            return Ok(self.clone());
        }
        if self.values.iter().all(|&v| v == self.values[0]) {
            return Ok(Self::from_parts(&self.grid, vec![0.0; self.grid.n()]));
        }
        let step = EdgeStep::detect(self);
        let mut work: Vec<Complex64> = match &step {
            Some(s) => self
                .grid
                .nodes()
                .iter()
                .zip(&self.values)
                .map(|(&x, &v)| Complex64::new(v - s.eval(x, 0), 0.0))
                .collect(),
            None => self.values.iter().map(|&v| Complex64::new(v, 0.0)).collect(),
        };
        let mut spec = self.grid.forward(&work);
        self.grid.apply_symbol(&mut spec, order);
        self.grid.inverse_in_place(&mut spec);
        work = spec;
        let values = match &step {
            Some(s) => self
                .grid
                .nodes()
                .iter()
                .zip(&work)
                .map(|(&x, z)| z.re + s.eval(x, order))
                .collect(),
            None => work.iter().map(|z| z.re).collect(),
        };
        Ok(Self::from_parts(&self.grid, values))
    }

    pub fn l2_norm(&self) -> f64 {
        (self.grid.spacing() * self.values.iter().map(|v| v * v).sum::<f64>()).sqrt()
    }

    pub fn linf_norm(&self) -> f64 {
        self.values.iter().map(|v| v.abs()).fold(0.0, f64::max)
    }

    /// Homogeneous or full Sobolev norm. Only meaningful for fields with a
    /// periodic extension (decaying fields, derivatives of domain walls).
    pub fn sobolev_norm(&self, s: usize, homogeneous: bool) -> Result<f64> {
        self.to_complex().sobolev_norm(s, homogeneous)
    }
}

/// `(J/2) tanh(x / w)` background used to differentiate edge-to-edge jumps.
struct EdgeStep {
    half_jump: f64,
    width: f64,
}

impl EdgeStep {
    fn detect(f: &RealField) -> Option<Self> {
        let v = &f.values;
        let n = v.len();
        let jump = v[n - 1] - v[0];
        let scale = f.linf_norm().max(1.0);
        let flat = (v[1] - v[0]).abs() <= 1e-12 * scale && (v[n - 1] - v[n - 2]).abs() <= 1e-12 * scale;
        if flat && jump.abs() > 1e-9 * scale {
            Some(Self {
                half_jump: 0.5 * jump,
                width: f.grid.length() / 40.0,
            })
        } else {
            None
        }
    }

    /// `order`-th derivative of the step at `x`, via the recursion
    /// `d/dx P(T) = P'(T) (1 - T^2) / w` on polynomials in `T = tanh(x / w)`.
    fn eval(&self, x: f64, order: usize) -> f64 {
        let t = (x / self.width).tanh();
        let poly = tanh_derivative_poly(order);
        let value = poly.iter().rev().fold(0.0, |acc, &c| acc * t + c);
        self.half_jump * value / self.width.powi(order as i32)
    }
}

/// Coefficients (ascending powers of `T`) of `d^k/dy^k tanh(y)` as a polynomial in `T = tanh(y)`.
fn tanh_derivative_poly(k: usize) -> Vec<f64> {
    let mut poly = vec![0.0, 1.0];
    for _ in 0..k {
        // P'(T)
        let dp: Vec<f64> = poly
            .iter()
            .enumerate()
            .skip(1)
            .map(|(i, &c)| i as f64 * c)
            .collect();
        // P'(T) * (1 - T^2)
        let mut next = vec![0.0; dp.len() + 2];
        for (i, &c) in dp.iter().enumerate() {
            next[i] += c;
            next[i + 2] -= c;
        }
        poly = next;
    }
    poly
}

/// `D^order f`, with Fourier multiplier `(i kappa)^order`.
pub fn spectral_derivative(f: &ComplexField, order: usize) -> Result<ComplexField> {
    f.derivative(order)
}

/// Homogeneous (`s` only) or full (`0..=s`) discrete Sobolev norm.
pub fn sobolev_norm(f: &ComplexField, s: usize, homogeneous: bool) -> Result<f64> {
    f.sobolev_norm(s, homogeneous)
}

pub fn linf_norm(f: &ComplexField) -> f64 {
    f.linf_norm()
}

/// `int Re(f conj(g))` by uniform quadrature.
pub fn l2_inner(f: &ComplexField, g: &ComplexField) -> Result<f64> {
    f.grid.check_same(&g.grid)?;
    Ok(f.grid.spacing()
        * f.values
            .iter()
            .zip(&g.values)
            .map(|(a, b)| (a * b.conj()).re)
            .sum::<f64>())
}

/// Numerically safe `1 / cosh(z)`.
pub fn sech(z: f64) -> f64 {
    let e = (-z.abs()).exp();
    2.0 * e / (1.0 + e * e)
}
