//! Radial potential and mass profiles, and conversion of physical inputs to
//! the dimensionless model.

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Elementary charge (C).
pub const ELEMENTARY_CHARGE: f64 = 1.602_176_634e-19;
/// Vacuum permittivity (F/m), at the precision the reference example uses.
pub const VACUUM_PERMITTIVITY: f64 = 8.85e-12;
/// Reduced Planck constant (J s).
pub const HBAR: f64 = 1.054_571_817e-34;

/// Physical description of the problem in SI-ish units (eV, nm, T).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PhysicalParams {
    /// Energy scale `E0` in eV.
    #[serde(rename = "E0")]
    pub e0: f64,
    /// Length scale in nm.
    pub l: f64,
    /// Magnetic flux density in tesla.
    #[serde(rename = "B_field")]
    pub b_field: f64,
    /// Proton number of the impurity.
    #[serde(rename = "Z")]
    pub z: u32,
    /// Hopping energy in eV.
    pub t: f64,
    /// Fermi velocity in m/s.
    #[serde(rename = "v_F")]
    pub v_f: f64,
    /// Carbon–carbon bond length in nm.
    #[serde(rename = "a_CC")]
    pub a_cc: f64,
}

impl Default for PhysicalParams {
    fn default() -> Self {
        PhysicalParams { e0: 0.85, l: 55.0, b_field: 7.0, z: 29, t: 3.0, v_f: 0.97e6, a_cc: 0.142 }
    }
}

impl PhysicalParams {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("E0", self.e0), ("l", self.l), ("t", self.t), ("v_F", self.v_f)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::config(None, format!("{name} must be positive, got {v}")));
            }
        }
        Ok(())
    }
}

/// Radial profile `f(r)` with an analytic derivative.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum RadialProfile {
    /// `-strength / r`.
    Coulomb { strength: f64 },
    Constant { value: f64 },
    /// `sum_i coefficients[i] r^i`.
    Polynomial { coefficients: Vec<f64> },
    /// `-depth exp(-(r / width)^2)`.
    GaussianWell { depth: f64, width: f64 },
}

impl RadialProfile {
    /// Returns `(f(r), f'(r))`; `r` must be positive.
    pub fn eval(&self, r: f64) -> Result<(f64, f64)> {
        if !(r > 0.0) || !r.is_finite() {
            return Err(Error::domain(format!("radial profile evaluated at r = {r}")));
        }
        Ok(self.eval_unchecked(r))
    }

    /// [`RadialProfile::eval`] without the domain check, for hot loops over
    /// radii already known to be positive.
    #[inline]
    pub fn eval_unchecked(&self, r: f64) -> (f64, f64) {
        match self {
            RadialProfile::Coulomb { strength } => (-strength / r, strength / (r * r)),
            RadialProfile::Constant { value } => (*value, 0.0),
            RadialProfile::Polynomial { coefficients } => {
                let mut v = 0.0;
                let mut d = 0.0;
                for &c in coefficients.iter().rev() {
                    d = d * r + v;
                    v = v * r + c;
                }
                (v, d)
            }
            RadialProfile::GaussianWell { depth, width } => {
                let e = (-(r / width).powi(2)).exp();
                (-depth * e, 2.0 * depth * r / (width * width) * e)
            }
        }
    }

    /// True when the derivative vanishes identically.
    pub fn is_constant(&self) -> bool {
        match self {
            RadialProfile::Constant { .. } => true,
            RadialProfile::Polynomial { coefficients } => coefficients.iter().skip(1).all(|&c| c == 0.0),
            RadialProfile::Coulomb { strength } => *strength == 0.0,
            RadialProfile::GaussianWell { depth, .. } => *depth == 0.0,
        }
    }
}

/// Which scalar band the asymptotics are built for.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Band {
    #[serde(rename = "+")]
    Plus,
    #[serde(rename = "-")]
    Minus,
}

impl Band {
    pub fn sign(self) -> f64 {
        match self {
            Band::Plus => 1.0,
            Band::Minus => -1.0,
        }
    }

    pub fn parse(s: &str) -> Option<Band> {
        match s.trim() {
            "+" | "plus" => Some(Band::Plus),
            "-" | "minus" => Some(Band::Minus),
            _ => None,
        }
    }
}

/// How the mass enters the scalar problem.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MassRegime {
    /// `M = sqrt(h) * tilde_m`; drops out of the effective potential.
    SmallMass { tilde_m: f64 },
    /// Radially symmetric mass profile `M(r)`.
    RadialMass(RadialProfile),
}

/// Dimensionless problem definition.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelParams {
    /// Semiclassical parameter.
    pub h: f64,
    /// Magnetic parameter.
    pub b: f64,
    /// Warping strength; `mu = h * gamma`.
    pub gamma: f64,
    pub potential: RadialProfile,
    pub mass: MassRegime,
    pub band: Band,
}

impl ModelParams {
    /// Parameters of the copper-impurity example: Coulomb well, constant
    /// mass 0.7, 7 T field.
    pub fn example() -> Self {
        ModelParams {
            h: 0.085_816_3,
            b: 0.439_353,
            gamma: 0.550_271,
            potential: RadialProfile::Coulomb { strength: 0.893_663 },
            mass: MassRegime::RadialMass(RadialProfile::Constant { value: 0.7 }),
            band: Band::Plus,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.h > 0.0 && self.h.is_finite()) {
            return Err(Error::config(None, format!("h must be positive, got {}", self.h)));
        }
        if !self.b.is_finite() || !self.gamma.is_finite() {
            return Err(Error::config(None, "B and gamma must be finite"));
        }
        Ok(())
    }

    pub fn with_gamma(&self, gamma: f64) -> Self {
        ModelParams { gamma, ..self.clone() }
    }

    /// `mu = h gamma`, the warping coefficient of the matrix symbol.
    pub fn mu(&self) -> f64 {
        self.h * self.gamma
    }

    /// Potential `(U, U')` at `r > 0`.
    #[inline]
    pub fn potential_at(&self, r: f64) -> (f64, f64) {
        self.potential.eval_unchecked(r)
    }

    /// Physical mass `(M, M')` entering the matrix symbol.
    #[inline]
    pub fn mass_at(&self, r: f64) -> (f64, f64) {
        match &self.mass {
            MassRegime::SmallMass { tilde_m } => (self.h.sqrt() * tilde_m, 0.0),
            MassRegime::RadialMass(p) => p.eval_unchecked(r),
        }
    }

    /// Mass contribution `(M^2, d M^2/dr)` to the effective potential; zero in
    /// the small-mass regime.
    #[inline]
    pub fn mass_sq_in_ueff(&self, r: f64) -> (f64, f64) {
        match &self.mass {
            MassRegime::SmallMass { .. } => (0.0, 0.0),
            MassRegime::RadialMass(p) => {
                let (m, dm) = p.eval_unchecked(r);
                (m * m, 2.0 * m * dm)
            }
        }
    }
}

/// Dimensionless quantities derived from [`PhysicalParams`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Dimensionless {
    /// Coulomb strength `A` of `U = -A/r`.
    pub coulomb_strength: f64,
    pub b: f64,
    pub gamma: f64,
    /// Echo of the semiclassical parameter, which is an input.
    pub h: f64,
}

/// Converts physical inputs to `A`, `B`, `gamma`; `h` is an explicit input.
pub fn derive_dimensionless(phys: &PhysicalParams, h: f64) -> Result<Dimensionless> {
    phys.validate()?;
    if !(h > 0.0) {
        return Err(Error::config(None, format!("h must be positive, got {h}")));
    }
    let length_m = phys.l * 1e-9;
    let coulomb_constant = 1.0 / (4.0 * std::f64::consts::PI * VACUUM_PERMITTIVITY);
    // Potential energy in eV of a charge Z e at distance l, over E0 in eV.
    let coulomb_strength = coulomb_constant * phys.z as f64 * ELEMENTARY_CHARGE / length_m / phys.e0;
    // B = e v_F B l / E0 with E0 in joules; the charge cancels against eV.
    let b = phys.v_f * phys.b_field * length_m / phys.e0;
    let gamma = phys.e0 / (6.0 * phys.t * h);
    Ok(Dimensionless { coulomb_strength, b, gamma, h })
}
