//! Subprincipal symbol on the torus, the spectral correction `lambda` and the
//! harmonic table of `Re H1,TW`.
//!
//! On the torus the warping term only carries `e^{+-3 i theta2}`:
//! `Re H1,TW(theta1, theta2) = f_-3(theta1) e^{-3i theta2} + f_0(theta1) + f_3(theta1) e^{3i theta2}`,
//! so each `f_j` is sampled in `theta1` and transformed once.

use std::f64::consts::TAU;

use log::warn;
use num_complex::Complex64;

use crate::classical::TorusSpec;
use crate::profiles::{Band, MassRegime, ModelParams};
use crate::specfun::fourier::dft;
use crate::{Error, Result};

/// `theta2` harmonics present in `Re H1,TW`.
pub const K2_VALUES: [i64; 3] = [-3, 0, 3];

/// Denominators smaller than this are treated as a vanishing `U - E (+ M)`.
const DENOMINATOR_FLOOR: f64 = 1e-12;

/// Polar pieces of the symbol at one torus point.
#[derive(Debug, Clone, Copy)]
struct Local {
    r: f64,
    p_r: f64,
    r_phi: f64,
    /// `psi = (2 p_phi / omega1) Q(theta1)`, so `phi = theta2 + psi`.
    psi: f64,
}

fn local(torus: &TorusSpec, theta1: f64) -> Local {
    let pt = torus.point(theta1);
    Local {
        r: pt.r,
        p_r: pt.p_r,
        r_phi: torus.r_phi(pt.r),
        psi: 2.0 * torus.p_phi / torus.omega1 * pt.q,
    }
}

/// `theta2`-independent part `f_0` of `Re H1,TW`.
fn f0_at(params: &ModelParams, energy: f64, lambda: f64, l: &Local) -> Result<f64> {
    let (u, du) = params.potential_at(l.r);
    let value = match &params.mass {
        MassRegime::SmallMass { tilde_m } => {
            let den = u - energy;
            if den.abs() < DENOMINATOR_FLOOR {
                return Err(Error::domain(format!("U - E vanishes at r = {}", l.r)));
            }
            params.b - l.r_phi * du / den + tilde_m * tilde_m + 2.0 * (u - energy) * lambda
        }
        MassRegime::RadialMass(profile) => {
            let (m, dm) = profile.eval_unchecked(l.r);
            let den = u - energy + m;
            if den.abs() < DENOMINATOR_FLOOR {
                return Err(Error::domain(format!("U - E + M vanishes at r = {}", l.r)));
            }
            params.b - l.r_phi * (du + dm) / den + 2.0 * (u - energy) * lambda
        }
    };
    Ok(value)
}

/// `(p_r + i R_phi)^3 = a - i b` with `a = p_r (p_r^2 - 3 R^2)`, `b = R (R^2 - 3 p_r^2)`.
#[inline]
fn warp_ab(l: &Local) -> (f64, f64) {
    let (p, r) = (l.p_r, l.r_phi);
    (p * (p * p - 3.0 * r * r), r * (r * r - 3.0 * p * p))
}

/// Coefficient `f_3(theta1)` of `e^{3 i theta2}`; `f_-3` is its conjugate.
fn f3_at(gamma: f64, l: &Local) -> Complex64 {
    let (a, b) = warp_ab(l);
    -gamma * Complex64::new(a, -b) * Complex64::from_polar(1.0, 3.0 * l.psi)
}

/// `Re H1,TW` at angles `(theta1, theta2)` of the torus.
pub fn re_h1_tw(params: &ModelParams, torus: &TorusSpec, theta1: f64, theta2: f64, lambda: f64) -> Result<f64> {
    let l = local(torus, theta1);
    let f0 = f0_at(params, torus.energy, lambda, &l)?;
    let (a, b) = warp_ab(&l);
    let phi = theta2 + l.psi;
    let (s3, c3) = (3.0 * phi).sin_cos();
    Ok(f0 - 2.0 * params.gamma * (a * c3 + b * s3))
}

fn theta_grid(n: usize) -> impl Iterator<Item = f64> {
    (0..n).map(move |j| TAU * j as f64 / n as f64)
}

/// Samples used for the `theta1` averages in [`solve_lambda`].
pub const LAMBDA_SAMPLES: usize = 2048;

/// `lambda` from the vanishing torus average of `Re H1,TW`.
///
/// The `theta2` average removes the warping harmonics, leaving
/// `lambda = -<f_0>|_{lambda=0} / (2 <U - E>)` with `theta1` averages.
pub fn solve_lambda(params: &ModelParams, torus: &TorusSpec) -> Result<f64> {
    let n = LAMBDA_SAMPLES;
    let (mut f0_sum, mut d_sum) = (0.0, 0.0);
    for theta in theta_grid(n) {
        let l = local(torus, theta);
        f0_sum += f0_at(params, torus.energy, 0.0, &l)?;
        d_sum += params.potential_at(l.r).0 - torus.energy;
    }
    let (f0_mean, d_mean) = (f0_sum / n as f64, d_sum / n as f64);
    if d_mean.abs() < 1e-12 {
        return Err(Error::DegenerateDenominator("mean of U - E over the torus"));
    }
    Ok(-f0_mean / (2.0 * d_mean))
}

/// `lambda` from the full two-dimensional average of `Re H1,TW`, warping included.
pub fn lambda_by_quadrature(params: &ModelParams, torus: &TorusSpec, n1: usize, n2: usize) -> Result<f64> {
    let (mut h_sum, mut d_sum) = (0.0, 0.0);
    for theta1 in theta_grid(n1) {
        let r = torus.point(theta1).r;
        let d = params.potential_at(r).0 - torus.energy;
        for theta2 in theta_grid(n2) {
            h_sum += re_h1_tw(params, torus, theta1, theta2, 0.0)?;
            d_sum += d;
        }
    }
    let count = (n1 * n2) as f64;
    let d_mean = d_sum / count;
    if d_mean.abs() < 1e-12 {
        return Err(Error::DegenerateDenominator("mean of U - E over the torus"));
    }
    Ok(-(h_sum / count) / (2.0 * d_mean))
}

/// `|lambda(gamma) - lambda(0)|`: the warped `lambda` is taken from the full
/// torus average, the unwarped one from the `f_0` route.
pub fn verify_lambda_invariance(params: &ModelParams, torus: &TorusSpec) -> Result<f64> {
    let warped = lambda_by_quadrature(params, torus, 1024, 16)?;
    let plain = solve_lambda(&params.with_gamma(0.0), torus)?;
    Ok((warped - plain).abs())
}

/// Fourier coefficients `c_{k1,k2}` of `Re H1,TW` for `k2 in {-3, 0, 3}`.
#[derive(Debug, Clone, PartialEq)]
pub struct HarmonicTable {
    pub lambda: f64,
    /// Truncation order `N`: coefficients with `|k1| <= N` are active.
    pub order: usize,
    /// Number of `theta1` samples behind the transform.
    pub samples: usize,
    pub omega: (f64, f64),
    /// `min |k1 omega1 + k2 omega2|` over active nonzero coefficients.
    pub resonance_margin: f64,
    /// `max |c_{k1,k2}|` at `k1 = samples / 2`.
    pub alias_level: f64,
    /// Full transforms in FFT order, one per entry of [`K2_VALUES`].
    spectra: [Vec<Complex64>; 3],
}

fn k2_slot(k2: i64) -> Option<usize> {
    K2_VALUES.iter().position(|&k| k == k2)
}

impl HarmonicTable {
    /// Builds a table from explicit coefficients; entries with `|k1| > order`
    /// are rejected.
    pub fn from_coefficients(
        lambda: f64,
        order: usize,
        omega: (f64, f64),
        entries: &[((i64, i64), Complex64)],
    ) -> Result<HarmonicTable> {
        let samples = (8 * order.max(1)).next_power_of_two();
        let mut spectra = [vec![Complex64::new(0.0, 0.0); samples], vec![Complex64::new(0.0, 0.0); samples], vec![
            Complex64::new(0.0, 0.0);
            samples
        ]];
        for &((k1, k2), c) in entries {
            let slot = k2_slot(k2).ok_or_else(|| Error::domain(format!("k2 = {k2} is not a warping harmonic")))?;
            if k1.unsigned_abs() as usize > order {
                return Err(Error::domain(format!("|k1| = {} exceeds N = {order}", k1.abs())));
            }
            spectra[slot][k1.rem_euclid(samples as i64) as usize] = c;
        }
        let mut table =
            HarmonicTable { lambda, order, samples, omega, resonance_margin: f64::INFINITY, alias_level: 0.0, spectra };
        table.resonance_margin = table.margin();
        Ok(table)
    }

    /// `c_{k1,k2}` for `|k1| <= N`; zero outside the active set.
    pub fn coeff(&self, k1: i64, k2: i64) -> Complex64 {
        if k1.unsigned_abs() as usize > self.order {
            return Complex64::new(0.0, 0.0);
        }
        self.raw(k1, k2)
    }

    /// Coefficient as computed, ignoring the truncation order.
    pub fn raw(&self, k1: i64, k2: i64) -> Complex64 {
        match k2_slot(k2) {
            Some(slot) if (k1.unsigned_abs() as usize) < self.samples / 2 => {
                self.spectra[slot][k1.rem_euclid(self.samples as i64) as usize]
            }
            _ => Complex64::new(0.0, 0.0),
        }
    }

    /// Active coefficients `((k1, k2), c)`, `(0, 0)` included.
    pub fn active(&self) -> impl Iterator<Item = ((i64, i64), Complex64)> + '_ {
        let n = self.order as i64;
        K2_VALUES.iter().flat_map(move |&k2| (-n..=n).map(move |k1| ((k1, k2), self.coeff(k1, k2))))
    }

    /// Diagnostic tail `((k1, k2), c)` for `N < |k1| <= 2N`.
    pub fn tail(&self) -> Vec<((i64, i64), Complex64)> {
        let n = self.order as i64;
        let mut out = Vec::new();
        for &k2 in &K2_VALUES {
            for k1 in (n + 1)..=(2 * n) {
                out.push(((k1, k2), self.raw(k1, k2)));
                out.push(((-k1, k2), self.raw(-k1, k2)));
            }
        }
        out
    }

    /// `sum |c_k|` over every computed coefficient with `|k1| > N`.
    pub fn tail_bound(&self) -> f64 {
        let half = (self.samples / 2) as i64;
        let n = self.order as i64;
        let mut sum = 0.0;
        for &k2 in &K2_VALUES {
            for k1 in (n + 1)..half {
                sum += self.raw(k1, k2).norm() + self.raw(-k1, k2).norm();
            }
        }
        sum
    }

    /// Same transform, different truncation order.
    pub fn with_order(&self, order: usize) -> Result<HarmonicTable> {
        if 8 * order > self.samples {
            return Err(Error::Length { len: self.samples, reason: "samples must be >= 8 N" });
        }
        let mut t = HarmonicTable { order, ..self.clone() };
        t.resonance_margin = t.margin();
        Ok(t)
    }

    /// Magnitude above which a coefficient counts as present.
    pub(crate) fn presence_floor(&self) -> f64 {
        let scale = self.active().fold(0.0_f64, |a, (_, c)| a.max(c.norm()));
        1e-15 * scale
    }

    fn margin(&self) -> f64 {
        let floor = self.presence_floor();
        let mut margin = f64::INFINITY;
        for ((k1, k2), c) in self.active() {
            if (k1, k2) == (0, 0) || c.norm() <= floor {
                continue;
            }
            margin = margin.min(self.omega_dot(k1, k2).abs());
        }
        margin
    }

    /// `<omega, k> = k1 omega1 + k2 omega2`.
    #[inline]
    pub fn omega_dot(&self, k1: i64, k2: i64) -> f64 {
        k1 as f64 * self.omega.0 + k2 as f64 * self.omega.1
    }
}

/// Builds the harmonic table at `lambda` with truncation `n` from `samples`
/// points in `theta1`.
pub fn harmonics(
    params: &ModelParams,
    torus: &TorusSpec,
    lambda: f64,
    n: usize,
    samples: usize,
) -> Result<HarmonicTable> {
    if !samples.is_power_of_two() || samples < 8 * n.max(1) {
        return Err(Error::Length { len: samples, reason: "samples must be a power of two >= 8 N" });
    }
    let mut f0 = Vec::with_capacity(samples);
    let mut f3 = Vec::with_capacity(samples);
    for theta in theta_grid(samples) {
        let l = local(torus, theta);
        f0.push(Complex64::new(f0_at(params, torus.energy, lambda, &l)?, 0.0));
        f3.push(f3_at(params.gamma, &l));
    }
    let fm3: Vec<Complex64> = f3.iter().map(|c| c.conj()).collect();
    let spectra = [
        dft(&fm3)?.as_fft_order().to_vec(),
        dft(&f0)?.as_fft_order().to_vec(),
        dft(&f3)?.as_fft_order().to_vec(),
    ];
    let nyquist = samples / 2;
    let alias_level = spectra.iter().fold(0.0_f64, |a, s| a.max(s[nyquist].norm()));
    if alias_level > 1e-12 {
        warn!("harmonic aliasing: |c| = {alias_level:e} at k1 = {nyquist}");
    }
    let mut table = HarmonicTable {
        lambda,
        order: n,
        samples,
        omega: (torus.omega1, torus.omega2),
        resonance_margin: f64::INFINITY,
        alias_level,
        spectra,
    };
    table.resonance_margin = table.margin();
    Ok(table)
}

/// Outcome of a small-denominator scan.
#[derive(Debug, Clone, PartialEq)]
pub struct ResonanceReport {
    pub eps: f64,
    /// `(k1, k2, <omega, k>)` for every flagged harmonic.
    pub hits: Vec<(i64, i64, f64)>,
    pub margin: f64,
}

impl ResonanceReport {
    pub fn passed(&self) -> bool {
        self.hits.is_empty()
    }
}

/// Flags active nonzero harmonics with `|<omega, k>| < eps`.
pub fn resonance_check(table: &HarmonicTable, eps: f64) -> ResonanceReport {
    let floor = table.presence_floor();
    let hits = table
        .active()
        .filter(|&((k1, k2), c)| (k1, k2) != (0, 0) && c.norm() > floor)
        .map(|((k1, k2), _)| (k1, k2, table.omega_dot(k1, k2)))
        .filter(|&(_, _, w)| w.abs() < eps)
        .collect();
    ResonanceReport { eps, hits, margin: table.resonance_margin }
}

/// Default small-denominator threshold `1e-6 max(omega1, |omega2|)`.
pub fn default_eps(omega: (f64, f64)) -> f64 {
    1e-6 * omega.0.abs().max(omega.1.abs())
}

/// Kinetic momentum `p + A(x)` with `A = (B x2 / 2, -B x1 / 2)`.
#[inline]
pub fn kinetic_momentum(p: [f64; 2], x: [f64; 2], b: f64) -> [f64; 2] {
    [p[0] + 0.5 * b * x[1], p[1] - 0.5 * b * x[0]]
}

fn radius(x: [f64; 2]) -> Result<f64> {
    let r = x[0].hypot(x[1]);
    if r > 0.0 {
        Ok(r)
    } else {
        Err(Error::domain("profiles are undefined at the origin"))
    }
}

/// Exact band energy of the warped matrix symbol.
pub fn tw_exact_band(p: [f64; 2], x: [f64; 2], params: &ModelParams, mu: f64, band: Band) -> Result<f64> {
    let r = radius(x)?;
    let (u, _) = params.potential_at(r);
    let (m, _) = params.mass_at(r);
    let [k1, k2] = kinetic_momentum(p, x, params.b);
    let k_sq = k1 * k1 + k2 * k2;
    let radicand = m * m + k_sq + 2.0 * mu * (k1 * k1 * k1 - 3.0 * k1 * k2 * k2) + mu * mu * k_sq * k_sq;
    if radicand < 0.0 {
        return Err(Error::domain(format!("negative radicand {radicand:e}")));
    }
    Ok(u + band.sign() * radicand.sqrt())
}

/// The warped 2x2 matrix symbol, row-major.
pub fn matrix_symbol(p: [f64; 2], x: [f64; 2], params: &ModelParams, mu: f64) -> Result<[[Complex64; 2]; 2]> {
    let r = radius(x)?;
    let (u, _) = params.potential_at(r);
    let (m, _) = params.mass_at(r);
    let [k1, k2] = kinetic_momentum(p, x, params.b);
    let plus = Complex64::new(k1, k2);
    let minus = plus.conj();
    Ok([
        [Complex64::new(u + m, 0.0), minus + mu * plus * plus],
        [plus + mu * minus * minus, Complex64::new(u - m, 0.0)],
    ])
}

/// Eigenvalues of a 2x2 hermitian matrix, ascending.
pub fn hermitian_eigenvalues(m: &[[Complex64; 2]; 2]) -> (f64, f64) {
    let (a, d) = (m[0][0].re, m[1][1].re);
    let mean = 0.5 * (a + d);
    let half = 0.5 * (a - d);
    let rad = (half * half + m[0][1].norm_sqr()).sqrt();
    (mean - rad, mean + rad)
}
