//! Classical radial motion on the zero set of the principal symbol.
//!
//! With `R_phi = p_phi / r - B r / 2` the reduced radial Hamiltonian is
//! `H0 = p_r^2 + U_eff(r)` where
//! `U_eff(r) = R_phi^2 + M(r)^2 - (U(r) - E)^2` (the mass term is dropped in
//! the small-mass regime). The orbit is parametrized by
//! `r(s) = r_- + (r_+ - r_-) sin^2 s`, `s in [0, pi)`, which maps the square-root
//! turning-point singularities to a smooth, `pi`-periodic problem: the time
//! density `dt/ds` is smooth and even, so it is expanded in a cosine series and
//! integrated exactly. Angle `theta1 = 2 pi t / T` then follows from the series
//! and is inverted by Newton iteration.

use std::f64::consts::{PI, TAU};
use std::sync::Arc;

use log::warn;

use crate::profiles::ModelParams;
use crate::specfun::quadrature::{gauss_legendre, QuadratureRule};
use crate::specfun::roots::{bisect, brent};
use crate::{Error, Result};

/// Samples in the uniform `theta1` tables.
pub const DEFAULT_TABLE_SAMPLES: usize = 1024;
/// Gauss–Legendre order for the radial action.
pub const ACTION_QUADRATURE_ORDER: usize = 256;
/// Gauss–Legendre order for phase integrals between arbitrary radii.
const PHASE_QUADRATURE_ORDER: usize = 48;
/// Orbits narrower than this are rejected.
pub const DEGENERATE_WIDTH: f64 = 1e-6;

/// Relative size of the last quarter of the orbit series at convergence.
const SERIES_TOLERANCE: f64 = 1e-12;

const SCAN_R_MIN: f64 = 1e-6;
const SCAN_R_MAX: f64 = 1e4;
const SCAN_SAMPLES: usize = 20_000;

/// `U_eff(r)` without the domain check.
#[inline]
pub(crate) fn u_eff_unchecked(params: &ModelParams, energy: f64, p_phi: f64, r: f64) -> f64 {
    let r_phi = p_phi / r - 0.5 * params.b * r;
    let (u, _) = params.potential_at(r);
    let (m2, _) = params.mass_sq_in_ueff(r);
    r_phi * r_phi + m2 - (u - energy) * (u - energy)
}

/// Effective radial potential; `r` must be positive.
pub fn u_eff(params: &ModelParams, energy: f64, p_phi: f64, r: f64) -> Result<f64> {
    if !(r > 0.0) {
        return Err(Error::domain(format!("U_eff evaluated at r = {r}")));
    }
    Ok(u_eff_unchecked(params, energy, p_phi, r))
}

/// Turning radii `(r_-, r_+)` bounding the classically allowed annulus.
///
/// Scans a logarithmic grid for sign changes of `U_eff`; among the bounded
/// negative intervals the one containing the deepest sample is selected.
pub fn turning_points(params: &ModelParams, energy: f64, p_phi: f64) -> Result<(f64, f64)> {
    let ratio = (SCAN_R_MAX / SCAN_R_MIN).ln() / (SCAN_SAMPLES - 1) as f64;
    let radius = |i: usize| SCAN_R_MIN * (ratio * i as f64).exp();
    let values: Vec<f64> =
        (0..SCAN_SAMPLES).map(|i| u_eff_unchecked(params, energy, p_phi, radius(i))).collect();

    // Bounded runs of negative samples: (first, last) indices.
    let mut best: Option<(usize, usize, f64)> = None;
    let mut i = 0;
    while i < SCAN_SAMPLES {
        if values[i] < 0.0 {
            let start = i;
            let mut depth = values[i];
            while i < SCAN_SAMPLES && values[i] < 0.0 {
                depth = depth.min(values[i]);
                i += 1;
            }
            let end = i - 1;
            let bounded = start > 0 && end + 1 < SCAN_SAMPLES;
            if bounded && best.map_or(true, |(_, _, d)| depth < d) {
                best = Some((start, end, depth));
            }
        } else {
            i += 1;
        }
    }
    let (start, end, _) = best.ok_or(Error::NoBoundRegion { energy, p_phi })?;
    let f = |r: f64| u_eff_unchecked(params, energy, p_phi, r);
    let r_minus = bisect(f, radius(start - 1), radius(start))?;
    let r_plus = bisect(f, radius(end), radius(end + 1))?;
    if r_plus - r_minus < DEGENERATE_WIDTH {
        return Err(Error::DegenerateTorus { width: r_plus - r_minus });
    }
    Ok((r_minus, r_plus))
}

fn action_between(
    params: &ModelParams,
    energy: f64,
    p_phi: f64,
    r_minus: f64,
    r_plus: f64,
    rule: &QuadratureRule,
    s1: f64,
    s2: f64,
) -> f64 {
    let width = r_plus - r_minus;
    rule.integrate(s1, s2, |s| {
        let (sn, cs) = s.sin_cos();
        let r = r_minus + width * sn * sn;
        let v = -u_eff_unchecked(params, energy, p_phi, r);
        v.max(0.0).sqrt() * width * (2.0 * sn * cs).abs()
    })
}

/// Radial action `I1 = (1/pi) int_{r_-}^{r_+} sqrt(-U_eff) dr`.
pub fn radial_action(params: &ModelParams, energy: f64, p_phi: f64) -> Result<f64> {
    radial_action_with(params, energy, p_phi, &gauss_legendre(ACTION_QUADRATURE_ORDER)?)
}

/// [`radial_action`] with an explicit rule on the quarter period.
pub fn radial_action_with(params: &ModelParams, energy: f64, p_phi: f64, rule: &QuadratureRule) -> Result<f64> {
    let (r_minus, r_plus) = turning_points(params, energy, p_phi)?;
    Ok(action_between(params, energy, p_phi, r_minus, r_plus, rule, 0.0, PI / 2.0) / PI)
}

/// Resolution knobs of the classical stage.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ClassicalOptions {
    /// Gauss–Legendre order of the radial action.
    pub action_order: usize,
    /// Samples in the uniform trajectory tables (at least 1024).
    pub table_samples: usize,
}

impl Default for ClassicalOptions {
    fn default() -> Self {
        ClassicalOptions { action_order: ACTION_QUADRATURE_ORDER, table_samples: DEFAULT_TABLE_SAMPLES }
    }
}

/// Cosine series `c_0 + sum_{m>=1} c_m cos(2 m s)` on the `pi`-periodic orbit parameter.
#[derive(Debug, Clone, PartialEq)]
struct CosineSeries {
    coeffs: Vec<f64>,
}

impl CosineSeries {
    /// Fits the series to an even `pi`-periodic function sampled at the
    /// midpoints `s_j = (j + 1/2) pi / n`.
    fn fit(samples: &[f64]) -> Self {
        let n = samples.len();
        let nodes: Vec<f64> = (0..n).map(|j| (j as f64 + 0.5) * PI / n as f64).collect();
        let mut coeffs = Vec::with_capacity(n / 2);
        for m in 0..n / 2 {
            let mut acc = 0.0;
            for (s, v) in nodes.iter().zip(samples) {
                acc += v * (2.0 * m as f64 * s).cos();
            }
            coeffs.push(acc * if m == 0 { 1.0 } else { 2.0 } / n as f64);
        }
        CosineSeries { coeffs }
    }

    fn tail_ratio(&self) -> f64 {
        let n = self.coeffs.len();
        let tail = self.coeffs[3 * n / 4..].iter().fold(0.0_f64, |a, c| a.max(c.abs()));
        tail / self.coeffs[0].abs().max(f64::MIN_POSITIVE)
    }

    fn trim(&mut self, rel: f64) {
        let scale = self.coeffs.iter().fold(0.0_f64, |a, c| a.max(c.abs()));
        while self.coeffs.len() > 2 && self.coeffs.last().is_some_and(|c| c.abs() < rel * scale) {
            self.coeffs.pop();
        }
    }

    fn value(&self, s: f64) -> f64 {
        let cos2 = (2.0 * s).cos();
        let mut sum = self.coeffs[0];
        let (mut c_prev, mut c_cur) = (1.0, cos2);
        for &c in &self.coeffs[1..] {
            sum += c * c_cur;
            let c_next = 2.0 * cos2 * c_cur - c_prev;
            c_prev = c_cur;
            c_cur = c_next;
        }
        sum
    }

    /// `sum_{m>=1} c_m sin(2 m s) / (2 m)`: the periodic part of the antiderivative.
    fn periodic_integral(&self, s: f64) -> f64 {
        let (sin2, cos2) = (2.0 * s).sin_cos();
        let (mut s_prev, mut s_cur) = (0.0, sin2);
        let mut sum = 0.0;
        for (m, &c) in self.coeffs.iter().enumerate().skip(1) {
            sum += c * s_cur / (2.0 * m as f64);
            let s_next = 2.0 * cos2 * s_cur - s_prev;
            s_prev = s_cur;
            s_cur = s_next;
        }
        sum
    }
}

/// One sample of the orbit in angle variables.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OrbitPoint {
    pub theta1: f64,
    pub r: f64,
    pub p_r: f64,
    /// Zero-mean primitive `Q(theta1) = int_0^theta1 (1/R^2 - Omega)`.
    pub q: f64,
}

/// Orbit samples on the uniform grid `theta1_j = 2 pi j / n`.
#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryTable {
    pub theta1: Vec<f64>,
    pub r: Vec<f64>,
    pub p_r: Vec<f64>,
    pub q: Vec<f64>,
}

/// How `quantize` picks the energy of the torus.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QuantizeMode {
    /// Bohr–Sommerfeld torus; action defect zero.
    Exact,
    /// Shifts `E` by at most `h^2` to maximize the resonance margin over
    /// harmonics `|k1| <= harmonics`, `k2 in {-3, 0, 3}`; records `q1`.
    NearestNonresonant { harmonics: usize },
}

/// A quantized (or nearby) invariant torus with its action-angle data.
#[derive(Debug, Clone)]
pub struct TorusSpec {
    pub params: ModelParams,
    pub energy: f64,
    pub p_phi: f64,
    /// Quantum numbers `(nu1, nu2)`.
    pub nu: (u32, i32),
    pub r_minus: f64,
    pub r_plus: f64,
    /// Radial period `T`.
    pub period: f64,
    pub omega1: f64,
    pub omega2: f64,
    /// Mean of `1/R^2` over `theta1`.
    pub omega_mean: f64,
    /// Radial action `I1` of this torus.
    pub action: f64,
    /// Action defect `(q1, q2)`.
    pub defect: (f64, f64),
    pub tables: TrajectoryTable,
    time_density: CosineSeries,
    q_density: CosineSeries,
    phase_rule: Arc<QuadratureRule>,
}

impl TorusSpec {
    /// Builds the torus through `(energy, p_phi)`.
    pub fn build(params: &ModelParams, energy: f64, p_phi: f64, nu: (u32, i32)) -> Result<TorusSpec> {
        Self::build_with(params, energy, p_phi, nu, &ClassicalOptions::default())
    }

    pub fn build_with(
        params: &ModelParams,
        energy: f64,
        p_phi: f64,
        nu: (u32, i32),
        options: &ClassicalOptions,
    ) -> Result<TorusSpec> {
        let table_samples = options.table_samples;
        if table_samples < DEFAULT_TABLE_SAMPLES {
            return Err(Error::Length { len: table_samples, reason: "trajectory tables need >= 1024 samples" });
        }
        let (r_minus, r_plus) = turning_points(params, energy, p_phi)?;
        let width = r_plus - r_minus;

        let mut n = 128;
        let (time_density, inv_r2_density) = loop {
            let nodes = (0..n).map(|j| (j as f64 + 0.5) * PI / n as f64);
            let mut dt = Vec::with_capacity(n);
            let mut dq = Vec::with_capacity(n);
            for s in nodes {
                let (sn, cs) = s.sin_cos();
                let r = r_minus + width * sn * sn;
                let v = (-u_eff_unchecked(params, energy, p_phi, r)).max(f64::MIN_POSITIVE);
                let f = width * (2.0 * sn * cs).abs() / (2.0 * v.sqrt());
                dt.push(f);
                dq.push(f / (r * r));
            }
            let t = CosineSeries::fit(&dt);
            let q = CosineSeries::fit(&dq);
            if (t.tail_ratio() < SERIES_TOLERANCE && q.tail_ratio() < SERIES_TOLERANCE) || n >= 8192 {
                if n >= 8192 {
                    warn!("orbit time series not converged: tail ratio {:e}", t.tail_ratio());
                }
                break (t, q);
            }
            n *= 2;
        };
        let mut time_density = time_density;
        let a0 = time_density.coeffs[0];
        let omega_mean = inv_r2_density.coeffs[0] / a0;
        // Q density: (1/r^2 - Omega) dt/ds; its zero mode vanishes by construction.
        let mut q_density = CosineSeries {
            coeffs: inv_r2_density
                .coeffs
                .iter()
                .zip(&time_density.coeffs)
                .map(|(g, a)| g - omega_mean * a)
                .collect(),
        };
        q_density.coeffs[0] = 0.0;
        // Sampling noise near the turning points sits around 1e-14 relative.
        time_density.trim(0.1 * SERIES_TOLERANCE);
        q_density.trim(0.1 * SERIES_TOLERANCE);

        let period = PI * a0;
        let omega1 = TAU / period;
        let omega2 = -params.b + 2.0 * p_phi * omega_mean;

        let rule = gauss_legendre(options.action_order)?;
        let action = action_between(params, energy, p_phi, r_minus, r_plus, &rule, 0.0, PI / 2.0) / PI;

        let h = params.h;
        let defect = (h * (nu.0 as f64 + 0.5) - action, h * nu.1 as f64 - p_phi);

        let mut torus = TorusSpec {
            params: params.clone(),
            energy,
            p_phi,
            nu,
            r_minus,
            r_plus,
            period,
            omega1,
            omega2,
            omega_mean,
            action,
            defect,
            tables: TrajectoryTable { theta1: vec![], r: vec![], p_r: vec![], q: vec![] },
            time_density,
            q_density,
            phase_rule: Arc::new(gauss_legendre(PHASE_QUADRATURE_ORDER)?),
        };
        torus.tables = torus.sample(table_samples);
        Ok(torus)
    }

    /// Number of retained terms in the time and `Q` series.
    pub fn series_lengths(&self) -> (usize, usize) {
        (self.time_density.coeffs.len(), self.q_density.coeffs.len())
    }

    pub fn width(&self) -> f64 {
        self.r_plus - self.r_minus
    }

    /// `R_phi = p_phi / r - B r / 2`.
    #[inline]
    pub fn r_phi(&self, r: f64) -> f64 {
        self.p_phi / r - 0.5 * self.params.b * r
    }

    #[inline]
    pub fn u_eff(&self, r: f64) -> f64 {
        u_eff_unchecked(&self.params, self.energy, self.p_phi, r)
    }

    /// Orbit parameter `s -> r`.
    #[inline]
    pub fn radius_at_s(&self, s: f64) -> f64 {
        let sn = s.sin();
        self.r_minus + self.width() * sn * sn
    }

    /// Inverse of `radius_at_s` on `[0, pi/2]`.
    pub fn s_of_r(&self, r: f64) -> f64 {
        let x = ((r - self.r_minus) / self.width()).clamp(0.0, 1.0);
        x.sqrt().asin()
    }

    /// `theta1(s)`, increasing, with `theta1(s + pi) = theta1(s) + 2 pi`.
    pub fn theta1_of_s(&self, s: f64) -> f64 {
        let a0 = self.time_density.coeffs[0];
        self.omega1 * (a0 * s + self.time_density.periodic_integral(s))
    }

    fn dtheta1_ds(&self, s: f64) -> f64 {
        self.omega1 * self.time_density.value(s)
    }

    /// Solves `theta1(s) = theta` for `theta in [0, 2 pi)`.
    pub fn s_of_theta1(&self, theta: f64) -> f64 {
        let theta = theta.rem_euclid(TAU);
        let (mut lo, mut hi) = (0.0, PI);
        let mut s = 0.5 * theta;
        for _ in 0..60 {
            let f = self.theta1_of_s(s) - theta;
            if f > 0.0 {
                hi = s;
            } else {
                lo = s;
            }
            let step = f / self.dtheta1_ds(s);
            let mut next = s - step;
            if !(next > lo && next < hi) {
                next = 0.5 * (lo + hi);
            }
            if (next - s).abs() < 1e-15 {
                return next;
            }
            s = next;
        }
        s
    }

    /// Radial momentum at orbit parameter `s`, smooth through the turning points.
    #[inline]
    fn p_r_at_s(&self, s: f64) -> f64 {
        self.width() * (2.0 * s).sin() / (2.0 * self.time_density.value(s))
    }

    fn q_at_s(&self, s: f64) -> f64 {
        self.omega1 * self.q_density.periodic_integral(s)
    }

    /// Full orbit sample at angle `theta1`.
    pub fn point(&self, theta1: f64) -> OrbitPoint {
        let s = self.s_of_theta1(theta1);
        OrbitPoint { theta1, r: self.radius_at_s(s), p_r: self.p_r_at_s(s), q: self.q_at_s(s) }
    }

    /// `(R(theta1), P(theta1))`.
    pub fn trajectory(&self, theta1: f64) -> (f64, f64) {
        let p = self.point(theta1);
        (p.r, p.p_r)
    }

    /// `Q(theta1)`.
    pub fn q_of_theta1(&self, theta1: f64) -> f64 {
        self.point(theta1).q
    }

    /// `theta1` on the outgoing branch (`p_r >= 0`) at radius `r`.
    pub fn theta1_of_r(&self, r: f64) -> f64 {
        self.theta1_of_s(self.s_of_r(r))
    }

    /// `Q` at the outgoing-branch point over `r`; the incoming branch has `-Q`.
    pub fn q_of_r(&self, r: f64) -> f64 {
        self.q_at_s(self.s_of_r(r))
    }

    /// Uniform `theta1` samples over one period.
    pub fn sample(&self, n: usize) -> TrajectoryTable {
        let mut table = TrajectoryTable {
            theta1: Vec::with_capacity(n),
            r: Vec::with_capacity(n),
            p_r: Vec::with_capacity(n),
            q: Vec::with_capacity(n),
        };
        for j in 0..n {
            let p = self.point(TAU * j as f64 / n as f64);
            table.theta1.push(p.theta1);
            table.r.push(p.r);
            table.p_r.push(p.p_r);
            table.q.push(p.q);
        }
        table
    }

    /// Time from the inner turning point to `r` along the outgoing branch.
    pub fn time_to(&self, r: f64) -> f64 {
        self.theta1_of_r(r) / self.omega1
    }

    /// `Phi(r1, r2) = int_{r1}^{r2} sqrt(-U_eff) dr` for `r_- <= r1 <= r2 <= r_+`.
    pub fn phase(&self, r1: f64, r2: f64) -> Result<f64> {
        let tol = 1e-12 * self.width();
        if r1 < self.r_minus - tol || r2 > self.r_plus + tol || r1 > r2 + tol {
            return Err(Error::domain(format!(
                "phase integral over [{r1}, {r2}] outside [{}, {}]",
                self.r_minus, self.r_plus
            )));
        }
        if r2 <= r1 {
            return Ok(0.0);
        }
        let (s1, s2) = (self.s_of_r(r1), self.s_of_r(r2));
        Ok(action_between(
            &self.params,
            self.energy,
            self.p_phi,
            self.r_minus,
            self.r_plus,
            &self.phase_rule,
            s1,
            s2,
        ))
    }

    pub fn phase_in(&self, r: f64) -> Result<f64> {
        self.phase(self.r_minus, r)
    }

    pub fn phase_out(&self, r: f64) -> Result<f64> {
        self.phase(r, self.r_plus)
    }

    /// `beta_in = Phi(r_-, r_+) = pi I1`.
    pub fn beta_in(&self) -> f64 {
        PI * self.action
    }
}

fn bracket_root<F: FnMut(f64) -> f64>(mut f: F, guess: f64) -> Result<(f64, f64)> {
    let f0 = f(guess);
    if f0 == 0.0 {
        return Ok((guess, guess));
    }
    let base = 0.02 * guess.abs().max(0.05);
    let mut step = base;
    for _ in 0..60 {
        for cand in [guess + step, guess - step] {
            if f(cand).signum() != f0.signum() {
                let (a, b) = if cand > guess { (guess, cand) } else { (cand, guess) };
                return Ok((a, b));
            }
        }
        step *= 1.5;
    }
    Err(Error::NoConvergence { what: "bracketing the quantized energy", iterations: 60 })
}

/// Quantizes `I1 = h (nu1 + 1/2)` at fixed `p_phi = h nu2`.
pub fn quantize(
    params: &ModelParams,
    nu1: u32,
    nu2: i32,
    energy_guess: f64,
    mode: QuantizeMode,
) -> Result<TorusSpec> {
    quantize_with(params, nu1, nu2, energy_guess, mode, &ClassicalOptions::default())
}

/// [`quantize`] with explicit resolution options.
pub fn quantize_with(
    params: &ModelParams,
    nu1: u32,
    nu2: i32,
    energy_guess: f64,
    mode: QuantizeMode,
    options: &ClassicalOptions,
) -> Result<TorusSpec> {
    params.validate()?;
    let rule = gauss_legendre(options.action_order)?;
    let h = params.h;
    let p_phi = h * nu2 as f64;
    let target = h * (nu1 as f64 + 0.5);
    let action = |e: f64| match radial_action_with(params, e, p_phi, &rule) {
        Ok(v) => Ok(v),
        Err(Error::NoBoundRegion { .. } | Error::DegenerateTorus { .. }) => Ok(0.0),
        Err(e) => Err(e),
    };
    let (a, b) = bracket_root(|e| action(e).map(|v| v - target).unwrap_or(f64::NAN), energy_guess)?;
    let energy = if a == b { a } else { brent(|e| action(e).map(|v| v - target), a, b, 1e-13, 200)? };
    let exact = TorusSpec::build_with(params, energy, p_phi, (nu1, nu2), options)?;
    match mode {
        QuantizeMode::Exact => Ok(exact),
        QuantizeMode::NearestNonresonant { harmonics } => {
            let reach = h * h;
            let mut best = (resonance_margin(exact.omega1, exact.omega2, harmonics), energy);
            for i in -10..=10 {
                let e = energy + reach * i as f64 / 10.0;
                if i == 0 {
                    continue;
                }
                if let Ok(t) = TorusSpec::build_with(params, e, p_phi, (nu1, nu2), options) {
                    let m = resonance_margin(t.omega1, t.omega2, harmonics);
                    if m > best.0 {
                        best = (m, e);
                    }
                }
            }
            if best.1 == energy {
                return Ok(exact);
            }
            let torus = TorusSpec::build_with(params, best.1, p_phi, (nu1, nu2), options)?;
            if torus.defect.0.abs() > h {
                warn!("action defect q1 = {:e} exceeds h", torus.defect.0);
            }
            Ok(torus)
        }
    }
}

/// `min |k1 omega1 + k2 omega2|` over `|k1| <= n`, `k2 in {-3, 0, 3}`, `k != 0`.
pub fn resonance_margin(omega1: f64, omega2: f64, n: usize) -> f64 {
    let mut margin = f64::INFINITY;
    for k2 in [-3i64, 0, 3] {
        for k1 in -(n as i64)..=(n as i64) {
            if k1 == 0 && k2 == 0 {
                continue;
            }
            margin = margin.min((k1 as f64 * omega1 + k2 as f64 * omega2).abs());
        }
    }
    margin
}

/// Action defect of the torus through `energy` (same `p_phi`) relative to the
/// Bohr–Sommerfeld values of `torus.nu`.
pub fn action_defect(torus: &TorusSpec, params: &ModelParams, energy: f64) -> Result<(f64, f64)> {
    let action = radial_action(params, energy, torus.p_phi)?;
    let h = params.h;
    let q = (h * (torus.nu.0 as f64 + 0.5) - action, h * torus.nu.1 as f64 - torus.p_phi);
    if q.0.abs() > h || q.1.abs() > h {
        warn!("action defect ({:e}, {:e}) exceeds h = {h}", q.0, q.1);
    }
    Ok(q)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::profiles::{MassRegime, RadialProfile};

    fn landau() -> ModelParams {
        ModelParams {
            potential: RadialProfile::Constant { value: 0.0 },
            ..ModelParams::example()
        }
    }

    #[test]
    fn u_eff_free_case() {
        let p = landau();
        let (e, pphi, r) = (0.935, 1.2872445, 2.0);
        let expect = (pphi / r - p.b * r / 2.0).powi(2) + 0.49 - e * e;
        assert!((u_eff(&p, e, pphi, r).unwrap() - expect).abs() < 1e-15);
        assert!(u_eff(&p, e, pphi, 0.0).is_err());
    }

    #[test]
    fn landau_turning_points_match_quadratic() {
        let p = landau();
        let (e, pphi) = (0.935, 1.2872445);
        let (rm, rp) = turning_points(&p, e, pphi).unwrap();
        let kappa = (e * e - 0.49_f64).sqrt();
        let disc = (kappa * kappa + 2.0 * p.b * pphi).sqrt();
        let (em, ep) = ((-kappa + disc) / p.b, (kappa + disc) / p.b);
        assert!((rm - em).abs() < 1e-10 && (rp - ep).abs() < 1e-10, "{rm} {rp} vs {em} {ep}");
        assert!((rm - 1.391).abs() < 1e-3 && (rp - 4.213).abs() < 1e-3);
    }

    #[test]
    fn below_the_well_has_no_region() {
        let p = landau();
        assert!(matches!(turning_points(&p, 0.5, 1.2872445), Err(Error::NoBoundRegion { .. })));
    }

    #[test]
    fn small_mass_drops_mass_term() {
        let p = ModelParams { mass: MassRegime::SmallMass { tilde_m: 2.0 }, ..landau() };
        let v = u_eff(&p, 0.935, 1.0, 2.0).unwrap();
        let expect = (1.0 / 2.0 - p.b).powi(2) - 0.935 * 0.935;
        assert!((v - expect).abs() < 1e-15);
    }

    #[test]
    fn zero_angular_momentum() {
        // A shallow well keeps U_eff positive at the origin, so p_phi = 0 still binds.
        let p = ModelParams {
            potential: RadialProfile::GaussianWell { depth: 0.5, width: 1.0 },
            ..ModelParams::example()
        };
        let t = TorusSpec::build(&p, -1.0, 0.0, (0, 0)).unwrap();
        assert!(t.r_minus > 0.0 && t.omega2 == -p.b);
        let q = quantize(&p, 2, 0, -1.0, QuantizeMode::Exact).unwrap();
        assert_eq!(q.p_phi, 0.0);
        assert!((q.action - p.h * 2.5).abs() < 1e-10);
    }

    #[test]
    fn example_torus_tables() {
        let p = ModelParams::example();
        let t = TorusSpec::build(&p, 0.935, 15.0 * p.h, (16, 15)).unwrap();
        // Energy conservation on the stored samples.
        for (r, pr) in t.tables.r.iter().zip(&t.tables.p_r) {
            assert!((pr * pr + t.u_eff(*r)).abs() < 1e-8);
        }
        // R(0) = r_-, R(pi) = r_+, Q(0) = Q(2 pi) = 0.
        let (r0, p0) = t.trajectory(0.0);
        let (rpi, ppi) = t.trajectory(PI);
        assert!((r0 - t.r_minus).abs() < 1e-12 && p0.abs() < 1e-12);
        assert!((rpi - t.r_plus).abs() < 1e-10 && ppi.abs() < 1e-8);
        assert!(t.q_of_theta1(0.0).abs() < 1e-14);
        assert!(t.q_of_theta1(TAU - 1e-14).abs() < 1e-10);
        // Zero mean of 1/R^2 - Omega on the table.
        let mean: f64 = t.tables.r.iter().map(|r| 1.0 / (r * r) - t.omega_mean).sum::<f64>()
            / t.tables.r.len() as f64;
        assert!(mean.abs() < 1e-10);
    }

    #[test]
    fn even_odd_symmetry() {
        let p = ModelParams::example();
        let t = TorusSpec::build(&p, 0.94, 15.0 * p.h, (16, 15)).unwrap();
        for th in [0.3, 1.1, 2.5, 3.0] {
            let (r1, p1) = t.trajectory(th);
            let (r2, p2) = t.trajectory(-th);
            assert!((r1 - r2).abs() < 1e-12);
            assert!((p1 + p2).abs() < 1e-12);
            assert!((t.q_of_theta1(th) + t.q_of_theta1(-th)).abs() < 1e-12);
        }
    }

    #[test]
    fn phase_additivity() {
        let p = ModelParams::example();
        let t = TorusSpec::build(&p, 0.94, 15.0 * p.h, (16, 15)).unwrap();
        let mid = 0.3 * t.r_minus + 0.7 * t.r_plus;
        let total = t.phase(t.r_minus, t.r_plus).unwrap();
        let split = t.phase(t.r_minus, mid).unwrap() + t.phase(mid, t.r_plus).unwrap();
        assert!((total - split).abs() < 1e-10);
        assert_eq!(t.phase(mid, mid).unwrap(), 0.0);
        assert!((t.beta_in() - total).abs() < 1e-10);
        assert!(t.phase(t.r_minus - 0.1, mid).is_err());
    }
}
