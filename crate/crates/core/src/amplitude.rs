//! Truncated torus amplitude `A_N = exp(1/2 int W dr) exp(S + i <q, theta> / h)`.

use std::f64::consts::TAU;
use std::sync::Arc;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::classical::TorusSpec;
use crate::correction::{re_h1_tw, HarmonicTable, K2_VALUES};
use crate::profiles::{Band, ModelParams};
use crate::specfun::quadrature::{gauss_legendre, QuadratureRule};
use crate::{Error, Result};

/// Sign of the Fourier exponent `S`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ExponentSign {
    /// `s_k = +c_k / <omega, k>`.
    #[default]
    #[serde(rename = "paper")]
    Series,
    /// `s_k = -c_k / <omega, k>`, from integrating the transport equation.
    Derived,
}

impl ExponentSign {
    pub fn factor(self) -> f64 {
        match self {
            ExponentSign::Series => 1.0,
            ExponentSign::Derived => -1.0,
        }
    }
}

/// How the radial prefactor `exp(1/2 int W dr)` is obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PrefactorKind {
    /// `sqrt|U - E|` for the `+` band; the `-` band always integrates.
    #[default]
    AnalyticSqrt,
    /// Gauss–Legendre integral of `W` from `r_-`.
    Quadrature,
}

const PREFACTOR_ORDER: usize = 64;

fn u_minus_e(params: &ModelParams, torus: &TorusSpec, r: f64) -> Result<f64> {
    let d = params.potential_at(r).0 - torus.energy;
    if d.abs() < 1e-12 {
        return Err(Error::domain(format!("U - E vanishes at r = {r}")));
    }
    Ok(d)
}

/// `W^+ = U' / (U - E)`, `W^- = W^+ + 2 M M' / (U - E)^2`.
pub fn w_function(params: &ModelParams, torus: &TorusSpec, r: f64, band: Band) -> Result<f64> {
    let d = u_minus_e(params, torus, r)?;
    let du = params.potential_at(r).1;
    let w = du / d;
    Ok(match band {
        Band::Plus => w,
        Band::Minus => {
            let (m, dm) = params.mass_at(r);
            w + 2.0 * m * dm / (d * d)
        }
    })
}

fn check_radius(torus: &TorusSpec, r: f64) -> Result<()> {
    let tol = 1e-9 * torus.width();
    if r < torus.r_minus - tol || r > torus.r_plus + tol {
        return Err(Error::domain(format!("r = {r} outside [{}, {}]", torus.r_minus, torus.r_plus)));
    }
    Ok(())
}

/// `sqrt|U(r_-) - E| exp(1/2 int_{r_-}^r W dr)`; the constant matches the closed
/// form of the `+` band.
pub fn prefactor_by_quadrature(
    params: &ModelParams,
    torus: &TorusSpec,
    r: f64,
    band: Band,
    rule: &QuadratureRule,
) -> Result<f64> {
    check_radius(torus, r)?;
    let base = u_minus_e(params, torus, torus.r_minus)?.abs().sqrt();
    let mut failure = None;
    let integral = rule.integrate(torus.r_minus, r, |x| match w_function(params, torus, x, band) {
        Ok(w) => w,
        Err(e) => {
            failure.get_or_insert(e);
            0.0
        }
    });
    if let Some(e) = failure {
        return Err(e);
    }
    Ok(base * (0.5 * integral).exp())
}

/// Radial prefactor `exp(1/2 int W^+- dr)` at `r in [r_-, r_+]`.
pub fn w_prefactor(params: &ModelParams, torus: &TorusSpec, r: f64, band: Band) -> Result<f64> {
    check_radius(torus, r)?;
    match band {
        Band::Plus => Ok(u_minus_e(params, torus, r)?.abs().sqrt()),
        Band::Minus => prefactor_by_quadrature(params, torus, r, band, &gauss_legendre(PREFACTOR_ORDER)?),
    }
}

/// Options for [`build_amplitude`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AmplitudeOptions {
    /// Action defect `(q1, q2)`.
    pub q: (f64, f64),
    pub band: Band,
    pub prefactor: PrefactorKind,
    pub sign: ExponentSign,
    /// Small-denominator threshold.
    pub eps: f64,
}

impl AmplitudeOptions {
    pub fn new(band: Band, eps: f64) -> Self {
        AmplitudeOptions {
            q: (0.0, 0.0),
            band,
            prefactor: PrefactorKind::AnalyticSqrt,
            sign: ExponentSign::Series,
            eps,
        }
    }
}

/// One exponent term `s e^{i (k1 theta1 + k2 theta2)}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExponentTerm {
    pub k1: i64,
    pub k2: i64,
    pub s: Complex64,
}

/// `A_N` on a fixed torus.
#[derive(Debug, Clone)]
pub struct AmplitudeModel {
    pub table: HarmonicTable,
    pub q: (f64, f64),
    pub h: f64,
    pub band: Band,
    pub prefactor_kind: PrefactorKind,
    pub sign: ExponentSign,
    pub terms: Vec<ExponentTerm>,
    /// Overall constant multiplying `A`; 1 unless rescaled.
    pub normalization: f64,
    params: ModelParams,
    torus: Arc<TorusSpec>,
    rule: Arc<QuadratureRule>,
    /// Largest `|k1|` per `k2` slot, for the evaluation recurrences.
    reach: [i64; 3],
    /// Terms by slot, indexed by `k1 + reach`.
    dense: [Vec<Complex64>; 3],
}

/// Assembles the exponent series from the harmonic table; `k = (0, 0)` is
/// always excluded.
pub fn build_amplitude(
    params: &ModelParams,
    torus: &TorusSpec,
    table: &HarmonicTable,
    options: AmplitudeOptions,
) -> Result<AmplitudeModel> {
    let floor = table.presence_floor();
    let mut terms = Vec::new();
    for ((k1, k2), c) in table.active() {
        if (k1, k2) == (0, 0) || c.norm() <= floor {
            continue;
        }
        let w = table.omega_dot(k1, k2);
        if w.abs() < options.eps {
            return Err(Error::SmallDenominator { k1, k2, value: w, eps: options.eps });
        }
        terms.push(ExponentTerm { k1, k2, s: options.sign.factor() * c / w });
    }
    let mut reach = [0i64; 3];
    for t in &terms {
        let slot = K2_VALUES.iter().position(|&k| k == t.k2).unwrap_or(1);
        reach[slot] = reach[slot].max(t.k1.abs());
    }
    let mut dense: [Vec<Complex64>; 3] =
        std::array::from_fn(|slot| vec![Complex64::new(0.0, 0.0); 2 * reach[slot] as usize + 1]);
    for t in &terms {
        let slot = K2_VALUES.iter().position(|&k| k == t.k2).unwrap_or(1);
        dense[slot][(t.k1 + reach[slot]) as usize] = t.s;
    }
    Ok(AmplitudeModel {
        table: table.clone(),
        q: options.q,
        h: params.h,
        band: options.band,
        prefactor_kind: options.prefactor,
        sign: options.sign,
        terms,
        normalization: 1.0,
        params: params.clone(),
        torus: Arc::new(torus.clone()),
        rule: Arc::new(gauss_legendre(PREFACTOR_ORDER)?),
        reach,
        dense,
    })
}

/// `sum_k1 a_k1 z^k1` for `k1 in [-reach, reach]` with `|z| = 1`.
fn laurent(coeffs: &[Complex64], reach: i64, z: Complex64) -> Complex64 {
    if coeffs.is_empty() {
        return Complex64::new(0.0, 0.0);
    }
    // Horner in z from the top, then divide by z^reach.
    let mut acc = Complex64::new(0.0, 0.0);
    for c in coeffs.iter().rev() {
        acc = acc * z + c;
    }
    acc * z.conj().powi(reach as i32)
}

/// Same sum with each term weighted by `k1`.
fn laurent_weighted(coeffs: &[Complex64], reach: i64, z: Complex64) -> Complex64 {
    let mut acc = Complex64::new(0.0, 0.0);
    for (i, c) in coeffs.iter().enumerate().rev() {
        acc = acc * z + c * (i as i64 - reach) as f64;
    }
    acc * z.conj().powi(reach as i32)
}

impl AmplitudeModel {
    pub fn torus(&self) -> &TorusSpec {
        &self.torus
    }

    pub fn params(&self) -> &ModelParams {
        &self.params
    }

    /// Radial prefactor at `r`.
    pub fn prefactor(&self, r: f64) -> Result<f64> {
        match (self.prefactor_kind, self.band) {
            (PrefactorKind::AnalyticSqrt, Band::Plus) => w_prefactor(&self.params, &self.torus, r, Band::Plus),
            _ => prefactor_by_quadrature(&self.params, &self.torus, r, self.band, &self.rule),
        }
    }

    /// Exponent `S(theta1, theta2)`.
    pub fn exponent(&self, theta1: f64, theta2: f64) -> Complex64 {
        let z = Complex64::from_polar(1.0, theta1);
        let mut sum = Complex64::new(0.0, 0.0);
        for (slot, &k2) in K2_VALUES.iter().enumerate() {
            let inner = laurent(&self.dense[slot], self.reach[slot], z);
            sum += inner * Complex64::from_polar(1.0, k2 as f64 * theta2);
        }
        sum
    }

    /// `<omega, d/dtheta> S`, term by term.
    pub fn exponent_derivative(&self, theta1: f64, theta2: f64) -> Complex64 {
        let z = Complex64::from_polar(1.0, theta1);
        let (w1, w2) = self.table.omega;
        let mut sum = Complex64::new(0.0, 0.0);
        for (slot, &k2) in K2_VALUES.iter().enumerate() {
            let plain = laurent(&self.dense[slot], self.reach[slot], z);
            let weighted = laurent_weighted(&self.dense[slot], self.reach[slot], z);
            let phase = Complex64::from_polar(1.0, k2 as f64 * theta2);
            sum += Complex64::i() * (w1 * weighted + w2 * k2 as f64 * plain) * phase;
        }
        sum
    }

    /// `A` at a known torus radius `r = R(theta1)`.
    pub fn eval_at(&self, r: f64, theta1: f64, theta2: f64) -> Result<Complex64> {
        let pref = self.prefactor(r)?;
        let defect = (self.q.0 * theta1 + self.q.1 * theta2) / self.h;
        Ok(self.normalization * pref * (self.exponent(theta1, theta2) + Complex64::new(0.0, defect)).exp())
    }
}

/// `A(theta1, theta2)`.
pub fn eval_amplitude(model: &AmplitudeModel, theta1: f64, theta2: f64) -> Result<Complex64> {
    let r = model.torus.point(theta1).r;
    model.eval_at(r, theta1, theta2)
}

/// Grid size of the transport check.
pub const RESIDUAL_GRID: usize = 64;

/// `sup |<omega, d S> - i sigma (f - c_00)|` over the residual grid, with
/// `sigma = +1` for the printed exponent sign and `-1` otherwise.
pub fn transport_residual_against<F>(model: &AmplitudeModel, mut reference: F) -> Result<f64>
where
    F: FnMut(f64, f64) -> Result<f64>,
{
    let sigma = model.sign.factor();
    let c00 = model.table.coeff(0, 0).re;
    let mut sup = 0.0_f64;
    for i in 0..RESIDUAL_GRID {
        let th1 = TAU * i as f64 / RESIDUAL_GRID as f64;
        for j in 0..RESIDUAL_GRID {
            let th2 = TAU * j as f64 / RESIDUAL_GRID as f64;
            let target = Complex64::new(0.0, sigma * (reference(th1, th2)? - c00));
            sup = sup.max((model.exponent_derivative(th1, th2) - target).norm());
        }
    }
    Ok(sup)
}

/// Transport residual against `Re H1,TW` on the model's torus.
pub fn transport_residual(model: &AmplitudeModel) -> Result<f64> {
    let lambda = model.table.lambda;
    let (params, torus) = (model.params.clone(), model.torus.clone());
    transport_residual_against(model, |a, b| re_h1_tw(&params, &torus, a, b, lambda))
}
