//! Canonical-operator field near the torus projection.
//!
//! Each region (`in`: issued from `r_-`, `out`: issued from `r_+`) is the
//! uniform Airy representation
//! `sqrt(2 pi omega1) e^{i theta_g} |U_eff|^{-1/4} [sigma1 A_ev z^{1/4} Ai(-z) + sigma2 A_odd z^{-1/4} Ai'(-z)]`
//! with `z = (3 Phi / 2h)^{2/3}`, computed branchwise from the two inverse
//! images `Theta^+-` of a point `(r, phi)`.

use std::f64::consts::{FRAC_PI_4, PI, TAU};

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::amplitude::AmplitudeModel;
use crate::classical::TorusSpec;
use crate::profiles::{Band, ModelParams};
use crate::specfun::airy::airy;
use crate::{Error, Result};

/// Below this phase a point counts as sitting on its region's caustic.
const CAUSTIC_PHASE: f64 = 1e-12;
/// Offset toward the interior used to evaluate at a caustic.
const CAUSTIC_OFFSET: f64 = 1e-8;

/// Inverse images `(Theta1^+, Theta1^-)` of radius `r`: `Theta1^+ in [0, pi]`
/// on the outgoing branch and `Theta1^- = 2 pi - Theta1^+` (reduced mod `2 pi`).
pub fn branch_inverse(torus: &TorusSpec, r: f64) -> Result<(f64, f64)> {
    let tol = 1e-12 * torus.width();
    if r < torus.r_minus - tol || r > torus.r_plus + tol {
        return Err(Error::domain(format!("r = {r} outside [{}, {}]", torus.r_minus, torus.r_plus)));
    }
    let plus = torus.theta1_of_r(r);
    Ok((plus, (TAU - plus).rem_euclid(TAU)))
}

/// Unit eigenvector of the unwarped symbol for eigenvalue `U +- sqrt(M^2 + |p|^2)`.
pub fn chi0(band: Band, p: [f64; 2], m: f64) -> Result<[Complex64; 2]> {
    let root = (m * m + p[0] * p[0] + p[1] * p[1]).sqrt();
    let s = band.sign();
    let norm_sq = 2.0 * (root * root - s * m * root);
    if root == 0.0 || !(norm_sq > 1e-300) {
        return Err(Error::MultiplicityDegeneracy(format!(
            "chi0 undefined for p = ({}, {}), M = {m}, band {s:+}",
            p[0], p[1]
        )));
    }
    let scale = 1.0 / norm_sq.sqrt();
    Ok([Complex64::new(p[0], -p[1]) * scale, Complex64::new((-m + s * root) * scale, 0.0)])
}

/// Field region.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Region {
    In,
    Out,
}

/// The four phase constants of the two region representations.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SigmaSet {
    pub in1: Complex64,
    pub in2: Complex64,
    pub out1: Complex64,
    pub out2: Complex64,
}

impl SigmaSet {
    /// All four equal to `e^{i pi/4}`.
    pub fn uniform() -> Self {
        let e = Complex64::from_polar(1.0, FRAC_PI_4);
        SigmaSet { in1: e, in2: e, out1: e, out2: e }
    }

    /// `sigma1^in = sigma2^out = e^{i pi/4}`, `sigma1^out = sigma2^in = e^{-i pi/4}`:
    /// the assignment under which both regions reduce to the same WKB sum.
    pub fn matched() -> Self {
        let (p, m) = (Complex64::from_polar(1.0, FRAC_PI_4), Complex64::from_polar(1.0, -FRAC_PI_4));
        SigmaSet { in1: p, in2: m, out1: m, out2: p }
    }

    fn pair(&self, region: Region) -> (Complex64, Complex64) {
        match region {
            Region::In => (self.in1, self.in2),
            Region::Out => (self.out1, self.out2),
        }
    }

    pub fn validate(&self) -> Result<()> {
        for s in [self.in1, self.in2, self.out1, self.out2] {
            if (s.norm() - 1.0).abs() > 1e-12 {
                return Err(Error::config(None, format!("sigma constants must be unit complex numbers, got {s}")));
            }
        }
        Ok(())
    }
}

impl Default for SigmaSet {
    fn default() -> Self {
        SigmaSet::matched()
    }
}

/// How the two region fields are glued.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Blend {
    /// `in` below `r_c`, `out` from `r_c` on.
    HardSwitch { r_c: f64 },
    /// Smooth partition of unity over `[r_c - width, r_c + width]`.
    Smooth { r_c: f64, width: f64 },
}

/// Cartesian sampling window; both ends inclusive.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    pub nx: usize,
    pub ny: usize,
    pub x: (f64, f64),
    pub y: (f64, f64),
}

impl GridSpec {
    /// Square window `[-extent, extent]^2`.
    pub fn square(n: usize, extent: f64) -> Self {
        GridSpec { nx: n, ny: n, x: (-extent, extent), y: (-extent, extent) }
    }

    #[inline]
    pub fn x_at(&self, i: usize) -> f64 {
        node(self.x, i, self.nx)
    }

    #[inline]
    pub fn y_at(&self, j: usize) -> f64 {
        node(self.y, j, self.ny)
    }
}

#[inline]
fn node((lo, hi): (f64, f64), i: usize, n: usize) -> f64 {
    if n < 2 {
        return lo;
    }
    lo + (hi - lo) * (i as f64) / ((n - 1) as f64)
}

#[derive(Debug, Clone, PartialEq)]
pub struct FieldConfig {
    pub grid: GridSpec,
    /// Caustic margin: `in` is valid up to `r_+ - delta`, `out` from `r_- + delta`.
    pub delta: f64,
    pub blend: Blend,
    pub sigma: SigmaSet,
    /// Phase origin `(r0, phi0)`.
    pub origin: (f64, f64),
    /// Carried for the pipeline; the field itself takes `gamma` from the amplitude.
    pub warping: bool,
}

impl FieldConfig {
    /// Defaults for `torus`: `delta = 0.05 w`, smooth blend at the midpoint with
    /// half-width `0.1 w`, origin `(r_-, 0)`, window `1.1 r_+`.
    pub fn for_torus(torus: &TorusSpec, n: usize) -> Self {
        let w = torus.width();
        FieldConfig {
            grid: GridSpec::square(n, 1.1 * torus.r_plus),
            delta: 0.05 * w,
            blend: Blend::Smooth { r_c: 0.5 * (torus.r_minus + torus.r_plus), width: 0.1 * w },
            sigma: SigmaSet::default(),
            origin: (torus.r_minus, 0.0),
            warping: true,
        }
    }

    pub fn validate(&self, torus: &TorusSpec) -> Result<()> {
        self.sigma.validate()?;
        let w = torus.width();
        if !(self.delta > 0.0 && self.delta < 0.5 * w) {
            return Err(Error::config(None, format!("delta = {} must lie in (0, {})", self.delta, 0.5 * w)));
        }
        let (lo, hi) = match self.blend {
            Blend::HardSwitch { r_c } => (r_c, r_c),
            Blend::Smooth { r_c, width } => {
                if !(width > 0.0) {
                    return Err(Error::config(None, "blend width must be positive"));
                }
                (r_c - width, r_c + width)
            }
        };
        if lo < torus.r_minus + self.delta || hi > torus.r_plus - self.delta {
            return Err(Error::config(None, "blend zone must lie inside the region overlap"));
        }
        if self.origin.0 < torus.r_minus || self.origin.0 > torus.r_plus {
            return Err(Error::config(None, "phase origin r0 must lie on [r_-, r_+]"));
        }
        if self.grid.nx == 0 || self.grid.ny == 0 {
            return Err(Error::config(None, "grid must have at least one node per axis"));
        }
        Ok(())
    }

    /// Weight of the `out` representation at `r`.
    pub fn out_weight(&self, r: f64) -> f64 {
        match self.blend {
            Blend::HardSwitch { r_c } => {
                if r < r_c {
                    0.0
                } else {
                    1.0
                }
            }
            Blend::Smooth { r_c, width } => smooth_step((r - (r_c - width)) / (2.0 * width)),
        }
    }

    fn admits(&self, torus: &TorusSpec, r: f64, region: Region) -> bool {
        match region {
            Region::In => r <= torus.r_plus - self.delta,
            Region::Out => r >= torus.r_minus + self.delta,
        }
    }
}

/// `C^infinity` step: 0 for `t <= 0`, 1 for `t >= 1`.
pub fn smooth_step(t: f64) -> f64 {
    if t <= 0.0 {
        return 0.0;
    }
    if t >= 1.0 {
        return 1.0;
    }
    let a = (-1.0 / t).exp();
    let b = (-1.0 / (1.0 - t)).exp();
    a / (a + b)
}

/// Global unit factor `e^{(i/h)(Phi(r0, r_+) - p_phi phi0)}`.
pub fn gauge_phase(torus: &TorusSpec, origin: (f64, f64)) -> Result<Complex64> {
    let h = torus.params.h;
    let phase = (torus.phase(origin.0, torus.r_plus)? - torus.p_phi * origin.1) / h;
    Ok(Complex64::from_polar(1.0, phase))
}

/// Airy factors `(z^{1/4} Ai(-z), z^{-1/4} Ai'(-z))` with `z^{3/2} = 3 Phi / 2h`.
fn airy_factors(phi: f64, h: f64) -> (f64, f64) {
    let zeta = 1.5 * phi / h;
    let z = zeta.powf(2.0 / 3.0);
    let v = airy(-z);
    let q = zeta.powf(1.0 / 6.0);
    (q * v.ai, v.ai_prime / q)
}

/// Region value before the global gauge, for an amplitude that is either the
/// scalar `A` or one spinor component of `chi0 A`.
struct RegionEval<'a> {
    torus: &'a TorusSpec,
    amp: &'a AmplitudeModel,
    cfg: &'a FieldConfig,
}

/// Branch data at one radius.
struct Branches {
    r: f64,
    theta: [f64; 2],
    theta2_shift: [f64; 2],
    p_r: f64,
}

impl RegionEval<'_> {
    fn branches(&self, r: f64) -> Result<Branches> {
        let (tp, tm) = branch_inverse(self.torus, r)?;
        let q = self.torus.q_of_r(r);
        let k = 2.0 * self.torus.p_phi / self.torus.omega1;
        let p_r = (-self.torus.u_eff(r)).max(0.0).sqrt();
        Ok(Branches { r, theta: [tp, tm], theta2_shift: [k * q, -k * q], p_r })
    }

    /// Radius at which the region formula is evaluated and its phase integral.
    fn evaluation_point(&self, r: f64, region: Region) -> Result<(f64, f64)> {
        let t = self.torus;
        let phase = |x: f64| match region {
            Region::In => t.phase(t.r_minus, x),
            Region::Out => t.phase(x, t.r_plus),
        };
        let mut x = r.clamp(t.r_minus, t.r_plus);
        let mut p = phase(x)?;
        if p < CAUSTIC_PHASE {
            let offset = CAUSTIC_OFFSET * t.width();
            x = match region {
                Region::In => t.r_minus + offset,
                Region::Out => t.r_plus - offset,
            };
            p = phase(x)?;
        }
        Ok((x, p))
    }

    /// `(A_+, A_-)` at `(r, phi)`.
    fn branch_amplitudes(&self, b: &Branches, phi: f64) -> Result<[Complex64; 2]> {
        let mut out = [Complex64::new(0.0, 0.0); 2];
        for i in 0..2 {
            out[i] = self.amp.eval_at(b.r, b.theta[i], phi - b.theta2_shift[i])?;
        }
        Ok(out)
    }

    /// Region prefactor `sqrt(2 pi omega1) e^{(i/h)(p_phi phi - beta)} |U_eff|^{-1/4}` and
    /// the two Airy weights.
    fn kernel(&self, r: f64, phi: f64, region: Region, phase_integral: f64) -> (Complex64, Complex64, Complex64) {
        let t = self.torus;
        let h = t.params.h;
        let beta = match region {
            Region::In => t.beta_in(),
            Region::Out => 0.0,
        };
        let u = t.u_eff(r).abs();
        let scale = (TAU * t.omega1).sqrt() / u.powf(0.25);
        let pre = Complex64::from_polar(scale, (t.p_phi * phi - beta) / h);
        let (s1, s2) = self.cfg.sigma.pair(region);
        let (f_ai, f_aip) = airy_factors(phase_integral, h);
        (pre, s1 * f_ai, s2 * f_aip)
    }

    fn scalar(&self, r: f64, phi: f64, region: Region) -> Result<Complex64> {
        let (x, p) = self.evaluation_point(r, region)?;
        let b = self.branches(x)?;
        let [ap, am] = self.branch_amplitudes(&b, phi)?;
        let (pre, w_ev, w_odd) = self.kernel(x, phi, region, p);
        Ok(pre * (w_ev * 0.5 * (ap + am) + w_odd * 0.5 * (ap - am)))
    }

    fn spinor(&self, params: &ModelParams, r: f64, phi: f64, region: Region) -> Result<[Complex64; 2]> {
        let (x, p) = self.evaluation_point(r, region)?;
        let b = self.branches(x)?;
        let amps = self.branch_amplitudes(&b, phi)?;
        let (pre, w_ev, w_odd) = self.kernel(x, phi, region, p);
        let m = params.mass_at(x).0;
        let r_phi = self.torus.r_phi(x);
        let (sn, cs) = phi.sin_cos();
        let mut vec = [[Complex64::new(0.0, 0.0); 2]; 2];
        for (i, sign) in [1.0, -1.0].into_iter().enumerate() {
            let pr = sign * b.p_r;
            let k = [pr * cs - r_phi * sn, pr * sn + r_phi * cs];
            let chi = chi0(self.amp.band, k, m)?;
            vec[i] = [chi[0] * amps[i], chi[1] * amps[i]];
        }
        let mut out = [Complex64::new(0.0, 0.0); 2];
        for c in 0..2 {
            let ev = 0.5 * (vec[0][c] + vec[1][c]);
            let odd = 0.5 * (vec[0][c] - vec[1][c]);
            out[c] = pre * (w_ev * ev + w_odd * odd);
        }
        Ok(out)
    }
}

/// Scalar canonical-operator value of one region at `(r, phi)`.
pub fn eval_scalar_field(
    torus: &TorusSpec,
    amp: &AmplitudeModel,
    cfg: &FieldConfig,
    r: f64,
    phi: f64,
    region: Region,
) -> Result<Complex64> {
    if !cfg.admits(torus, r, region) {
        return Err(Error::domain(format!("r = {r} outside the {region:?} region")));
    }
    let g = gauge_phase(torus, cfg.origin)?;
    Ok(g * RegionEval { torus, amp, cfg }.scalar(r, phi, region)?)
}

/// Spinor field of one region at polar `(r, phi)`, `sqrt(r)` included, before the gauge.
fn region_spinor(
    params: &ModelParams,
    eval: &RegionEval,
    r: f64,
    phi: f64,
    region: Region,
) -> Result<[Complex64; 2]> {
    let v = eval.spinor(params, r, phi, region)?;
    let s = r.sqrt();
    Ok([v[0] * s, v[1] * s])
}

/// Blended spinor at `(r, phi)` without the global gauge factor.
fn blended(params: &ModelParams, eval: &RegionEval, r: f64, phi: f64) -> Result<[Complex64; 2]> {
    let t = eval.torus;
    if r < t.r_minus || r > t.r_plus {
        return Ok([Complex64::new(0.0, 0.0); 2]);
    }
    let w = eval.cfg.out_weight(r);
    let zero = [Complex64::new(0.0, 0.0); 2];
    let a = if w < 1.0 { region_spinor(params, eval, r, phi, Region::In)? } else { zero };
    let b = if w > 0.0 { region_spinor(params, eval, r, phi, Region::Out)? } else { zero };
    Ok([a[0] * (1.0 - w) + b[0] * w, a[1] * (1.0 - w) + b[1] * w])
}

/// `Psi~ = sqrt(r) K[chi0 A]` at Cartesian `(x1, x2)`; zero outside `[r_-, r_+]`.
pub fn eval_spinor_field(
    params: &ModelParams,
    torus: &TorusSpec,
    amp: &AmplitudeModel,
    cfg: &FieldConfig,
    x1: f64,
    x2: f64,
) -> Result<[Complex64; 2]> {
    let eval = RegionEval { torus, amp, cfg };
    let (r, phi) = (x1.hypot(x2), x2.atan2(x1));
    let g = gauge_phase(torus, cfg.origin)?;
    let v = blended(params, &eval, r, phi)?;
    Ok([g * v[0], g * v[1]])
}

/// Spinor of a single region at polar `(r, phi)`, gauge included.
pub fn eval_region_spinor(
    params: &ModelParams,
    torus: &TorusSpec,
    amp: &AmplitudeModel,
    cfg: &FieldConfig,
    r: f64,
    phi: f64,
    region: Region,
) -> Result<[Complex64; 2]> {
    if !cfg.admits(torus, r, region) {
        return Err(Error::domain(format!("r = {r} outside the {region:?} region")));
    }
    let g = gauge_phase(torus, cfg.origin)?;
    let v = region_spinor(params, &RegionEval { torus, amp, cfg }, r, phi, region)?;
    Ok([g * v[0], g * v[1]])
}

/// Sampled spinor field; rows run in `y`, row 0 at `y_min`.
#[derive(Debug, Clone, PartialEq)]
pub struct SpinorGrid {
    pub nx: usize,
    pub ny: usize,
    pub x: (f64, f64),
    pub y: (f64, f64),
    pub psi1: Vec<Complex64>,
    pub psi2: Vec<Complex64>,
    pub density: Vec<f64>,
    /// Nodes inside `[r_-, r_+]`.
    pub coverage: Vec<bool>,
    /// `max |Psi_in - Psi_out| / max |Psi|` on the circle `r = r_c`.
    pub seam_jump: f64,
}

impl SpinorGrid {
    #[inline]
    pub fn index(&self, i: usize, j: usize) -> usize {
        j * self.nx + i
    }

    pub fn max_density(&self) -> f64 {
        self.density.iter().cloned().fold(0.0, f64::max)
    }
}

const SEAM_SAMPLES: usize = 64;

fn seam_jump(params: &ModelParams, eval: &RegionEval) -> Result<f64> {
    let r_c = match eval.cfg.blend {
        Blend::HardSwitch { r_c } | Blend::Smooth { r_c, .. } => r_c,
    };
    let (mut jump, mut scale) = (0.0_f64, 0.0_f64);
    for k in 0..SEAM_SAMPLES {
        let phi = TAU * k as f64 / SEAM_SAMPLES as f64 - PI;
        let a = region_spinor(params, eval, r_c, phi, Region::In)?;
        let b = region_spinor(params, eval, r_c, phi, Region::Out)?;
        let d = ((a[0] - b[0]).norm_sqr() + (a[1] - b[1]).norm_sqr()).sqrt();
        jump = jump.max(d);
        scale = scale.max((a[0].norm_sqr() + a[1].norm_sqr()).sqrt());
    }
    Ok(if scale > 0.0 { jump / scale } else { 0.0 })
}

/// Samples the blended spinor on `cfg.grid` in parallel.
pub fn density_grid(
    params: &ModelParams,
    torus: &TorusSpec,
    amp: &AmplitudeModel,
    cfg: &FieldConfig,
) -> Result<SpinorGrid> {
    cfg.validate(torus)?;
    let eval = RegionEval { torus, amp, cfg };
    let g = cfg.grid;
    let values: Vec<Result<([Complex64; 2], bool)>> = (0..g.nx * g.ny)
        .into_par_iter()
        .map(|idx| {
            let (i, j) = (idx % g.nx, idx / g.nx);
            let (x1, x2) = (g.x_at(i), g.y_at(j));
            let r = x1.hypot(x2);
            let inside = r >= torus.r_minus && r <= torus.r_plus;
            Ok((blended(params, &eval, r, x2.atan2(x1))?, inside))
        })
        .collect();
    let gauge = gauge_phase(torus, cfg.origin)?;
    let n = g.nx * g.ny;
    let (mut psi1, mut psi2) = (Vec::with_capacity(n), Vec::with_capacity(n));
    let (mut density, mut coverage) = (Vec::with_capacity(n), Vec::with_capacity(n));
    for v in values {
        let (s, inside) = v?;
        // Density before the gauge factor, so it does not depend on the origin.
        density.push(s[0].norm_sqr() + s[1].norm_sqr());
        psi1.push(gauge * s[0]);
        psi2.push(gauge * s[1]);
        coverage.push(inside);
    }
    Ok(SpinorGrid {
        nx: g.nx,
        ny: g.ny,
        x: g.x,
        y: g.y,
        psi1,
        psi2,
        density,
        coverage,
        seam_jump: seam_jump(params, &eval)?,
    })
}

/// `max |Psi_in - Psi_out| / max |Psi|` over the overlap annulus
/// `[r_- + delta, r_+ - delta]`, sampled on an `nr x nphi` polar grid.
pub fn overlap_discrepancy(
    params: &ModelParams,
    torus: &TorusSpec,
    amp: &AmplitudeModel,
    cfg: &FieldConfig,
    nr: usize,
    nphi: usize,
) -> Result<f64> {
    let eval = RegionEval { torus, amp, cfg };
    let (lo, hi) = (torus.r_minus + cfg.delta, torus.r_plus - cfg.delta);
    let rows: Vec<Result<(f64, f64)>> = (0..nr)
        .into_par_iter()
        .map(|i| {
            let r = node((lo, hi), i, nr);
            let (mut jump, mut scale) = (0.0_f64, 0.0_f64);
            for k in 0..nphi {
                let phi = TAU * k as f64 / nphi as f64;
                let a = region_spinor(params, &eval, r, phi, Region::In)?;
                let b = region_spinor(params, &eval, r, phi, Region::Out)?;
                let d = ((a[0] - b[0]).norm_sqr() + (a[1] - b[1]).norm_sqr()).sqrt();
                jump = jump.max(d);
                scale = scale.max((a[0].norm_sqr() + a[1].norm_sqr()).sqrt());
                scale = scale.max((b[0].norm_sqr() + b[1].norm_sqr()).sqrt());
            }
            Ok((jump, scale))
        })
        .collect();
    let (mut jump, mut scale) = (0.0_f64, 0.0_f64);
    for row in rows {
        let (j, s) = row?;
        jump = jump.max(j);
        scale = scale.max(s);
    }
    Ok(if scale > 0.0 { jump / scale } else { 0.0 })
}
