//! Run configuration, subcommands and output files of the `warpspec` tool.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use log::info;
use serde::{Deserialize, Serialize};

use crate::amplitude::{
    build_amplitude, transport_residual, AmplitudeModel, AmplitudeOptions, ExponentSign, PrefactorKind,
};
use crate::classical::{quantize_with, radial_action_with, turning_points, ClassicalOptions, QuantizeMode, TorusSpec};
use crate::correction::{
    default_eps, harmonics, hermitian_eigenvalues, kinetic_momentum, matrix_symbol, resonance_check, solve_lambda,
    tw_exact_band, verify_lambda_invariance, HarmonicTable,
};
use crate::field::{chi0, density_grid, overlap_discrepancy, Blend, FieldConfig, GridSpec, SigmaSet, SpinorGrid};
use crate::profiles::{derive_dimensionless, Band, MassRegime, ModelParams, PhysicalParams, RadialProfile};
use crate::specfun::airy::{AI_PRIME_ZERO, AI_ZERO};
use crate::specfun::{airy, dft, gauss_legendre};
use crate::{Complex64, Error, Result, VERSION};

/// Example values used when neither an explicit value nor `derive` is given.
const DEFAULT_B: f64 = 0.439_353;
const DEFAULT_GAMMA: f64 = 0.550_271;
const DEFAULT_COULOMB: f64 = 0.893_663;

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub physical: PhysicalParams,
    pub model: ModelSection,
    pub torus: TorusSection,
    pub numerics: NumericsSection,
    pub field: FieldSection,
    pub spectrum: SpectrumSection,
    pub output: OutputSection,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SmallMass {
    pub tilde_m: f64,
}

/// `{ tilde_m = .. }` for the small-mass regime, or a radial profile table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum MassSpec {
    Small(SmallMass),
    Radial(RadialProfile),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelSection {
    pub h: f64,
    #[serde(rename = "B", skip_serializing_if = "Option::is_none")]
    pub b: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gamma: Option<f64>,
    /// Take `A`, `B`, `gamma` from `[physical]` where not given explicitly.
    pub derive: bool,
    pub band: Band,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub potential: Option<RadialProfile>,
    pub mass: MassSpec,
}

impl Default for ModelSection {
    fn default() -> Self {
        ModelSection {
            h: 0.085_816_3,
            b: None,
            gamma: None,
            derive: false,
            band: Band::Plus,
            potential: None,
            mass: MassSpec::Radial(RadialProfile::Constant { value: 0.7 }),
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum QuantizeKind {
    #[default]
    Exact,
    NearestNonresonant,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TorusSection {
    pub nu1: i64,
    pub nu2: i64,
    #[serde(rename = "E_guess")]
    pub e_guess: f64,
    pub quantize_mode: QuantizeKind,
}

impl Default for TorusSection {
    fn default() -> Self {
        TorusSection { nu1: 16, nu2: 15, e_guess: 0.935, quantize_mode: QuantizeKind::Exact }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EpsKeyword {
    Auto,
}

/// Small-denominator threshold: `"auto"` or a positive number.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum EpsSpec {
    Value(f64),
    Keyword(EpsKeyword),
}

impl Default for EpsSpec {
    fn default() -> Self {
        EpsSpec::Keyword(EpsKeyword::Auto)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NumericsSection {
    /// Truncation order `N`.
    pub harmonics: usize,
    /// `theta1` samples of the harmonic transform (power of two, `>= 8 N`).
    pub samples: usize,
    pub table_samples: usize,
    /// Gauss–Legendre order of the radial action.
    pub quadrature_order: usize,
    pub eps_resonance: EpsSpec,
    pub exponent_sign: ExponentSign,
    pub prefactor: PrefactorKind,
}

impl Default for NumericsSection {
    fn default() -> Self {
        NumericsSection {
            harmonics: 70,
            samples: 1024,
            table_samples: 1024,
            quadrature_order: 256,
            eps_resonance: EpsSpec::default(),
            exponent_sign: ExponentSign::Series,
            prefactor: PrefactorKind::AnalyticSqrt,
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BlendKind {
    #[default]
    Smooth,
    Hard,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SigmaPreset {
    #[default]
    Matched,
    Uniform,
}

/// Geometry options are resolved against the torus when left out.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FieldSection {
    pub nx: usize,
    pub ny: usize,
    /// Half-width of the square window; default `1.1 r_+`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub extent: Option<f64>,
    /// Default `0.05 (r_+ - r_-)`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub delta: Option<f64>,
    pub blend: BlendKind,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub blend_center: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub blend_width: Option<f64>,
    pub sigma: SigmaPreset,
    /// Phase overrides in units of `pi`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sigma_in1: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sigma_in2: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sigma_out1: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sigma_out2: Option<f64>,
    pub warping: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub r0: Option<f64>,
    pub phi0: f64,
}

impl Default for FieldSection {
    fn default() -> Self {
        FieldSection {
            nx: 256,
            ny: 256,
            extent: None,
            delta: None,
            blend: BlendKind::Smooth,
            blend_center: None,
            blend_width: None,
            sigma: SigmaPreset::Matched,
            sigma_in1: None,
            sigma_in2: None,
            sigma_out1: None,
            sigma_out2: None,
            warping: true,
            r0: None,
            phi0: 0.0,
        }
    }
}

/// A quantum number or an inclusive range `"a:b"`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum RangeSpec {
    One(i64),
    Text(String),
}

impl RangeSpec {
    pub fn bounds(&self) -> Result<(i64, i64)> {
        match self {
            RangeSpec::One(v) => Ok((*v, *v)),
            RangeSpec::Text(s) => parse_range(s),
        }
    }
}

/// Parses `"a"` or `"a:b"` with `a <= b`.
pub fn parse_range(s: &str) -> Result<(i64, i64)> {
    let bad = || Error::config(None, format!("invalid range {s:?}, expected A or A:B"));
    let (a, b) = match s.split_once(':') {
        Some((a, b)) => (a.trim().parse().map_err(|_| bad())?, b.trim().parse().map_err(|_| bad())?),
        None => {
            let v = s.trim().parse().map_err(|_| bad())?;
            (v, v)
        }
    };
    if a > b {
        return Err(Error::config(None, format!("empty range {s:?}")));
    }
    Ok((a, b))
}

/// Ranges swept by `spectrum`; default to the `[torus]` quantum numbers.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SpectrumSection {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub nu1: Option<RangeSpec>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub nu2: Option<RangeSpec>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Formats {
    Csv,
    Pgm,
    #[default]
    Both,
}

impl Formats {
    pub fn parse(s: &str) -> Option<Formats> {
        match s {
            "csv" => Some(Formats::Csv),
            "pgm" => Some(Formats::Pgm),
            "both" => Some(Formats::Both),
            _ => None,
        }
    }

    fn csv(self) -> bool {
        self != Formats::Pgm
    }

    fn pgm(self) -> bool {
        self != Formats::Csv
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputSection {
    pub directory: PathBuf,
    pub formats: Formats,
    /// Overwrite existing files.
    pub force: bool,
}

impl Default for OutputSection {
    fn default() -> Self {
        OutputSection { directory: PathBuf::from("warpspec-out"), formats: Formats::Both, force: false }
    }
}

fn line_of_offset(text: &str, offset: usize) -> usize {
    text[..offset.min(text.len())].matches('\n').count() + 1
}

/// Line of `key = ...` inside `[section]`, if present.
fn line_of_key(text: &str, section: &str, key: &str) -> Option<usize> {
    let mut current = String::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if let Some(name) = line.strip_prefix('[').and_then(|l| l.strip_suffix(']')) {
            current = name.trim().to_string();
            continue;
        }
        if current == section {
            if let Some((k, _)) = line.split_once('=') {
                if k.trim() == key {
                    return Some(i + 1);
                }
            }
        }
    }
    None
}

/// Parses and validates a TOML run configuration; missing keys take defaults.
pub fn parse_config(text: &str) -> Result<RunConfig> {
    let cfg: RunConfig = toml::from_str(text).map_err(|e| {
        let line = e.span().map(|s| line_of_offset(text, s.start));
        Error::config(line, e.message().trim().to_string())
    })?;
    cfg.validate_with(|section, key| line_of_key(text, section, key))?;
    Ok(cfg)
}

pub fn load_config(path: &Path) -> Result<RunConfig> {
    let text = fs::read_to_string(path).map_err(|e| Error::config(None, format!("{}: {e}", path.display())))?;
    parse_config(&text)
}

fn positive(v: f64) -> bool {
    v > 0.0 && v.is_finite()
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        self.validate_with(|_, _| None)
    }

    fn validate_with(&self, line: impl Fn(&str, &str) -> Option<usize>) -> Result<()> {
        let err = |section: &str, key: &str, msg: String| Err(Error::config(line(section, key), msg));
        let t = &self.torus;
        if t.nu1 < 0 || t.nu1 > u32::MAX as i64 {
            return err("torus", "nu1", format!("nu1 = {} out of range (nu1 >= 0)", t.nu1));
        }
        if i32::try_from(t.nu2).is_err() {
            return err("torus", "nu2", format!("nu2 = {} out of range", t.nu2));
        }
        if !t.e_guess.is_finite() {
            return err("torus", "E_guess", "E_guess must be finite".into());
        }
        let m = &self.model;
        if !positive(m.h) {
            return err("model", "h", format!("h = {} must be positive", m.h));
        }
        for (key, v) in [("B", m.b), ("gamma", m.gamma)] {
            if v.is_some_and(|v| !v.is_finite()) {
                return err("model", key, format!("{key} must be finite"));
            }
        }
        if m.derive {
            if let Err(Error::Config { message, .. }) = self.physical.validate() {
                return Err(Error::config(None, format!("[physical] {message}")));
            }
        }
        let n = &self.numerics;
        if n.harmonics == 0 {
            return err("numerics", "harmonics", "harmonics must be at least 1".into());
        }
        if !n.samples.is_power_of_two() || n.samples < 8 * n.harmonics {
            return err(
                "numerics",
                "samples",
                format!("samples = {} must be a power of two >= 8 * harmonics = {}", n.samples, 8 * n.harmonics),
            );
        }
        if n.table_samples < 1024 {
            return err("numerics", "table_samples", format!("table_samples = {} must be >= 1024", n.table_samples));
        }
        if n.quadrature_order < 2 || n.quadrature_order > 4096 {
            return err("numerics", "quadrature_order", "quadrature_order must be in 2..=4096".into());
        }
        if let EpsSpec::Value(v) = n.eps_resonance {
            if !positive(v) {
                return err("numerics", "eps_resonance", format!("eps_resonance = {v} must be positive"));
            }
        }
        let f = &self.field;
        if f.nx < 2 || f.ny < 2 {
            return err("field", "nx", "grid needs at least 2 nodes per axis".into());
        }
        for (key, v) in [("extent", f.extent), ("delta", f.delta), ("blend_width", f.blend_width)] {
            if v.is_some_and(|v| !positive(v)) {
                return err("field", key, format!("{key} must be positive"));
            }
        }
        for (key, v) in [
            ("sigma_in1", f.sigma_in1),
            ("sigma_in2", f.sigma_in2),
            ("sigma_out1", f.sigma_out1),
            ("sigma_out2", f.sigma_out2),
            ("blend_center", f.blend_center),
            ("r0", f.r0),
            ("phi0", Some(f.phi0)),
        ] {
            if v.is_some_and(|v| !v.is_finite()) {
                return err("field", key, format!("{key} must be finite"));
            }
        }
        for (key, r) in [("nu1", &self.spectrum.nu1), ("nu2", &self.spectrum.nu2)] {
            if let Some(r) = r {
                let (lo, hi) = r.bounds().map_err(|e| match e {
                    Error::Config { message, .. } => Error::config(line("spectrum", key), message),
                    other => other,
                })?;
                if key == "nu1" && (lo < 0 || hi > u32::MAX as i64) {
                    return err("spectrum", key, format!("nu1 range {lo}:{hi} out of range (nu1 >= 0)"));
                }
                if key == "nu2" && (i32::try_from(lo).is_err() || i32::try_from(hi).is_err()) {
                    return err("spectrum", key, format!("nu2 range {lo}:{hi} out of range"));
                }
            }
        }
        Ok(())
    }

    fn derived(&self) -> Result<Option<crate::profiles::Dimensionless>> {
        if self.model.derive {
            derive_dimensionless(&self.physical, self.model.h).map(Some)
        } else {
            Ok(None)
        }
    }

    /// Dimensionless model: explicit values, else derived ones when
    /// `derive = true`, else the example values.
    pub fn model_params(&self) -> Result<ModelParams> {
        let d = self.derived()?;
        let m = &self.model;
        let params = ModelParams {
            h: m.h,
            b: m.b.or(d.map(|d| d.b)).unwrap_or(DEFAULT_B),
            gamma: m.gamma.or(d.map(|d| d.gamma)).unwrap_or(DEFAULT_GAMMA),
            potential: m.potential.clone().unwrap_or(RadialProfile::Coulomb {
                strength: d.map(|d| d.coulomb_strength).unwrap_or(DEFAULT_COULOMB),
            }),
            mass: match &m.mass {
                MassSpec::Small(s) => MassRegime::SmallMass { tilde_m: s.tilde_m },
                MassSpec::Radial(p) => MassRegime::RadialMass(p.clone()),
            },
            band: m.band,
        };
        params.validate()?;
        Ok(params)
    }

    pub fn classical_options(&self) -> ClassicalOptions {
        ClassicalOptions { action_order: self.numerics.quadrature_order, table_samples: self.numerics.table_samples }
    }

    pub fn quantize_mode(&self) -> QuantizeMode {
        match self.torus.quantize_mode {
            QuantizeKind::Exact => QuantizeMode::Exact,
            QuantizeKind::NearestNonresonant => QuantizeMode::NearestNonresonant { harmonics: self.numerics.harmonics },
        }
    }

    pub fn nu(&self) -> (u32, i32) {
        (self.torus.nu1 as u32, self.torus.nu2 as i32)
    }

    pub fn eps_for(&self, omega: (f64, f64)) -> f64 {
        match self.numerics.eps_resonance {
            EpsSpec::Value(v) => v,
            EpsSpec::Keyword(EpsKeyword::Auto) => default_eps(omega),
        }
    }

    pub fn quantize(&self, params: &ModelParams) -> Result<TorusSpec> {
        let (nu1, nu2) = self.nu();
        quantize_with(params, nu1, nu2, self.torus.e_guess, self.quantize_mode(), &self.classical_options())
    }

    pub fn sigma_set(&self) -> SigmaSet {
        let f = &self.field;
        let mut s = match f.sigma {
            SigmaPreset::Matched => SigmaSet::matched(),
            SigmaPreset::Uniform => SigmaSet::uniform(),
        };
        let phase = |v: f64| Complex64::from_polar(1.0, v * std::f64::consts::PI);
        if let Some(v) = f.sigma_in1 {
            s.in1 = phase(v);
        }
        if let Some(v) = f.sigma_in2 {
            s.in2 = phase(v);
        }
        if let Some(v) = f.sigma_out1 {
            s.out1 = phase(v);
        }
        if let Some(v) = f.sigma_out2 {
            s.out2 = phase(v);
        }
        s
    }

    /// Field options with torus-dependent defaults filled in.
    pub fn field_config(&self, torus: &TorusSpec) -> FieldConfig {
        let f = &self.field;
        let base = FieldConfig::for_torus(torus, f.nx);
        let extent = f.extent.unwrap_or(base.grid.x.1);
        let (r_c, width) = match base.blend {
            Blend::Smooth { r_c, width } => (r_c, width),
            Blend::HardSwitch { r_c } => (r_c, 0.1 * torus.width()),
        };
        let r_c = f.blend_center.unwrap_or(r_c);
        let blend = match f.blend {
            BlendKind::Smooth => Blend::Smooth { r_c, width: f.blend_width.unwrap_or(width) },
            BlendKind::Hard => Blend::HardSwitch { r_c },
        };
        FieldConfig {
            grid: GridSpec { nx: f.nx, ny: f.ny, x: (-extent, extent), y: (-extent, extent) },
            delta: f.delta.unwrap_or(base.delta),
            blend,
            sigma: self.sigma_set(),
            origin: (f.r0.unwrap_or(base.origin.0), f.phi0),
            warping: f.warping,
        }
    }

    /// Copy with every applied default written out explicitly.
    pub fn resolved(&self, torus: Option<&TorusSpec>) -> Result<RunConfig> {
        let params = self.model_params()?;
        let mut out = self.clone();
        out.model.b = Some(params.b);
        out.model.gamma = Some(params.gamma);
        out.model.potential = Some(params.potential.clone());
        out.spectrum.nu1.get_or_insert(RangeSpec::One(self.torus.nu1));
        out.spectrum.nu2.get_or_insert(RangeSpec::One(self.torus.nu2));
        if let Some(t) = torus {
            out.numerics.eps_resonance = EpsSpec::Value(self.eps_for((t.omega1, t.omega2)));
            let fc = self.field_config(t);
            out.field.extent = Some(fc.grid.x.1);
            out.field.delta = Some(fc.delta);
            match fc.blend {
                Blend::Smooth { r_c, width } => {
                    out.field.blend_center = Some(r_c);
                    out.field.blend_width = Some(width);
                }
                Blend::HardSwitch { r_c } => out.field.blend_center = Some(r_c),
            }
            out.field.r0 = Some(fc.origin.0);
            let arg = |c: Complex64| c.arg() / std::f64::consts::PI;
            out.field.sigma_in1 = Some(arg(fc.sigma.in1));
            out.field.sigma_in2 = Some(arg(fc.sigma.in2));
            out.field.sigma_out1 = Some(arg(fc.sigma.out1));
            out.field.sigma_out2 = Some(arg(fc.sigma.out2));
        }
        Ok(out)
    }
}

/// Command-line overrides applied on top of the file.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Overrides {
    pub output: Option<PathBuf>,
    pub band: Option<Band>,
    pub warping: Option<bool>,
    pub harmonics: Option<usize>,
    pub grid: Option<(usize, usize)>,
    pub formats: Option<Formats>,
    pub nu1: Option<String>,
    pub nu2: Option<String>,
    pub force: bool,
}

impl Overrides {
    pub fn apply(&self, cfg: &mut RunConfig) -> Result<()> {
        if let Some(dir) = &self.output {
            cfg.output.directory = dir.clone();
        }
        if let Some(b) = self.band {
            cfg.model.band = b;
        }
        if let Some(w) = self.warping {
            cfg.field.warping = w;
        }
        if let Some(n) = self.harmonics {
            cfg.numerics.harmonics = n;
            // Keep the transform large enough for the new order.
            cfg.numerics.samples = cfg.numerics.samples.max((8 * n).next_power_of_two());
        }
        if let Some((nx, ny)) = self.grid {
            cfg.field.nx = nx;
            cfg.field.ny = ny;
        }
        if let Some(f) = self.formats {
            cfg.output.formats = f;
        }
        if let Some(s) = &self.nu1 {
            cfg.spectrum.nu1 = Some(RangeSpec::Text(s.clone()));
        }
        if let Some(s) = &self.nu2 {
            cfg.spectrum.nu2 = Some(RangeSpec::Text(s.clone()));
        }
        cfg.output.force |= self.force;
        cfg.validate()
    }
}

/// Quantized torus, correction and amplitude for one configuration.
#[derive(Debug, Clone)]
pub struct Pipeline {
    pub params: ModelParams,
    pub torus: TorusSpec,
    pub lambda: f64,
    pub table: HarmonicTable,
    pub amplitude: AmplitudeModel,
    pub eps: f64,
}

/// Runs quantize, lambda, harmonics and the amplitude. With `warping = false`
/// the correction and amplitude are built at `gamma = 0`.
pub fn build_pipeline(cfg: &RunConfig, warping: bool) -> Result<Pipeline> {
    let params = cfg.model_params()?;
    let torus = cfg.quantize(&params)?;
    let amp_params = if warping { params.clone() } else { params.with_gamma(0.0) };
    let lambda = solve_lambda(&amp_params, &torus)?;
    let table = harmonics(&amp_params, &torus, lambda, cfg.numerics.harmonics, cfg.numerics.samples)?;
    let eps = cfg.eps_for((torus.omega1, torus.omega2));
    let report = resonance_check(&table, eps);
    if !report.passed() {
        return Err(Error::Resonance { count: report.hits.len(), eps });
    }
    let options = AmplitudeOptions {
        q: torus.defect,
        band: params.band,
        prefactor: cfg.numerics.prefactor,
        sign: cfg.numerics.exponent_sign,
        eps,
    };
    let amplitude = build_amplitude(&amp_params, &torus, &table, options)?;
    Ok(Pipeline { params, torus, lambda, table, amplitude, eps })
}

/// One row of the spectrum table.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SpectrumRow {
    pub nu1: u32,
    pub nu2: i32,
    #[serde(rename = "E_nu")]
    pub e_nu: f64,
    pub lambda: f64,
    #[serde(rename = "E_script")]
    pub e_script: f64,
    pub omega1: f64,
    pub omega2: f64,
    pub r_minus: f64,
    pub r_plus: f64,
    pub resonance_margin: f64,
}

impl SpectrumRow {
    pub fn new(params: &ModelParams, torus: &TorusSpec, lambda: f64, margin: f64) -> SpectrumRow {
        SpectrumRow {
            nu1: torus.nu.0,
            nu2: torus.nu.1,
            e_nu: torus.energy,
            lambda,
            e_script: torus.energy + params.h * lambda,
            omega1: torus.omega1,
            omega2: torus.omega2,
            r_minus: torus.r_minus,
            r_plus: torus.r_plus,
            resonance_margin: margin,
        }
    }
}

pub const SPECTRUM_HEADER: &str = "nu1,nu2,E_nu,lambda,E_script,omega1,omega2,r_minus,r_plus,resonance_margin";

/// CSV with 17 significant digits per float.
pub fn spectrum_csv(rows: &[SpectrumRow]) -> String {
    let mut s = String::from(SPECTRUM_HEADER);
    s.push('\n');
    for r in rows {
        let _ = writeln!(
            s,
            "{},{},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e}",
            r.nu1, r.nu2, r.e_nu, r.lambda, r.e_script, r.omega1, r.omega2, r.r_minus, r.r_plus, r.resonance_margin
        );
    }
    s
}

/// ASCII grid: three header lines, then `ny` rows of `nx` values, `y` increasing.
pub fn format_grid(nx: usize, ny: usize, x: (f64, f64), y: (f64, f64), values: &[f64]) -> String {
    let mut s = String::with_capacity(24 * nx * ny + 128);
    s.push_str("# warpspec-grid v1\n");
    let _ = writeln!(s, "# nx={nx} ny={ny}");
    let _ = writeln!(s, "# x={:.16e},{:.16e} y={:.16e},{:.16e}", x.0, x.1, y.0, y.1);
    for row in values.chunks(nx).take(ny) {
        for (i, v) in row.iter().enumerate() {
            if i > 0 {
                s.push(' ');
            }
            let _ = write!(s, "{v:.16e}");
        }
        s.push('\n');
    }
    s
}

/// Parsed grid file.
#[derive(Debug, Clone, PartialEq)]
pub struct GridFile {
    pub nx: usize,
    pub ny: usize,
    pub x: (f64, f64),
    pub y: (f64, f64),
    pub values: Vec<f64>,
}

pub fn parse_grid(text: &str) -> Result<GridFile> {
    let bad = |m: &str| Error::Io(format!("malformed grid file: {m}"));
    let mut lines = text.lines();
    if lines.next() != Some("# warpspec-grid v1") {
        return Err(bad("missing magic line"));
    }
    let dims = lines.next().ok_or_else(|| bad("missing dimensions"))?;
    let mut nx = None;
    let mut ny = None;
    for tok in dims.trim_start_matches('#').split_whitespace() {
        match tok.split_once('=') {
            Some(("nx", v)) => nx = v.parse().ok(),
            Some(("ny", v)) => ny = v.parse().ok(),
            _ => {}
        }
    }
    let (nx, ny): (usize, usize) = (nx.ok_or_else(|| bad("nx"))?, ny.ok_or_else(|| bad("ny"))?);
    let window = lines.next().ok_or_else(|| bad("missing window"))?;
    let mut x = None;
    let mut y = None;
    for tok in window.trim_start_matches('#').split_whitespace() {
        let pair = |v: &str| -> Option<(f64, f64)> {
            let (a, b) = v.split_once(',')?;
            Some((a.parse().ok()?, b.parse().ok()?))
        };
        match tok.split_once('=') {
            Some(("x", v)) => x = pair(v),
            Some(("y", v)) => y = pair(v),
            _ => {}
        }
    }
    let mut values = Vec::with_capacity(nx * ny);
    for line in lines {
        for tok in line.split_whitespace() {
            values.push(tok.parse::<f64>().map_err(|_| bad("bad value"))?);
        }
    }
    if values.len() != nx * ny {
        return Err(bad("value count does not match nx * ny"));
    }
    Ok(GridFile { nx, ny, x: x.ok_or_else(|| bad("x"))?, y: y.ok_or_else(|| bad("y"))?, values })
}

/// 16-bit binary PGM of `values` (rows `y` increasing), top row at `y_max`,
/// linear map `[0, max] -> [0, 65535]`.
pub fn pgm_bytes(nx: usize, ny: usize, values: &[f64]) -> Vec<u8> {
    let max = values.iter().cloned().fold(0.0, f64::max);
    let mut out = format!("P5\n{nx} {ny}\n65535\n").into_bytes();
    out.reserve(2 * nx * ny);
    for j in (0..ny).rev() {
        for &v in &values[j * nx..(j + 1) * nx] {
            let level = if max > 0.0 { (v.max(0.0) / max * 65535.0).round() as u16 } else { 0 };
            out.extend_from_slice(&level.to_be_bytes());
        }
    }
    out
}

/// Files written by one run; removed again unless the run completes.
struct OutputSet {
    dir: PathBuf,
    force: bool,
    created: Vec<PathBuf>,
    made_dir: bool,
    done: bool,
}

impl OutputSet {
    fn open(dir: &Path, force: bool) -> Result<OutputSet> {
        let made_dir = !dir.exists();
        fs::create_dir_all(dir)?;
        Ok(OutputSet { dir: dir.to_path_buf(), force, created: Vec::new(), made_dir, done: false })
    }

    fn write(&mut self, name: &str, bytes: &[u8]) -> Result<()> {
        let path = self.dir.join(name);
        if path.exists() && !self.force {
            return Err(Error::Io(format!("{} exists; pass --force to overwrite", path.display())));
        }
        fs::write(&path, bytes).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
        self.created.push(path);
        Ok(())
    }

    fn finish(mut self) -> Vec<PathBuf> {
        self.done = true;
        std::mem::take(&mut self.created)
    }
}

impl Drop for OutputSet {
    fn drop(&mut self) {
        if self.done {
            return;
        }
        for p in &self.created {
            let _ = fs::remove_file(p);
        }
        if self.made_dir {
            let _ = fs::remove_dir(&self.dir);
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Torus,
    Spectrum,
    Field,
    Verify,
    Selftest,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Torus => "torus",
            Command::Spectrum => "spectrum",
            Command::Field => "field",
            Command::Verify => "verify",
            Command::Selftest => "selftest",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub command: Command,
    /// Human-readable report, printed by the CLI.
    pub report: String,
    pub files: Vec<PathBuf>,
    pub passed: bool,
}

impl Outcome {
    pub fn exit_code(&self) -> i32 {
        if self.passed {
            0
        } else {
            4
        }
    }
}

pub fn run(command: Command, cfg: &RunConfig) -> Result<Outcome> {
    match command {
        Command::Torus => cmd_torus(cfg),
        Command::Spectrum => cmd_spectrum(cfg),
        Command::Field => cmd_field(cfg),
        Command::Verify => cmd_verify(cfg),
        Command::Selftest => cmd_selftest(),
    }
}

fn manifest(command: Command, cfg: &RunConfig, torus: Option<&TorusSpec>, results: toml::Table) -> Result<String> {
    let resolved = cfg.resolved(torus)?;
    let mut doc = toml::Table::new();
    doc.insert("version".into(), toml::Value::String(VERSION.into()));
    doc.insert("command".into(), toml::Value::String(command.name().into()));
    let config = toml::Table::try_from(&resolved).map_err(|e| Error::Io(format!("manifest: {e}")))?;
    doc.insert("config".into(), toml::Value::Table(config));
    doc.insert("results".into(), toml::Value::Table(results));
    toml::to_string(&doc).map_err(|e| Error::Io(format!("manifest: {e}")))
}

fn results_of(pairs: &[(&str, f64)]) -> toml::Table {
    pairs.iter().map(|&(k, v)| (k.to_string(), toml::Value::Float(v))).collect()
}

fn torus_report(params: &ModelParams, t: &TorusSpec, lambda: f64, margin: f64) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "nu              = ({}, {})", t.nu.0, t.nu.1);
    let _ = writeln!(s, "E_nu            = {:.16e}", t.energy);
    let _ = writeln!(s, "p_phi           = {:.16e}", t.p_phi);
    let _ = writeln!(s, "r_minus         = {:.16e}", t.r_minus);
    let _ = writeln!(s, "r_plus          = {:.16e}", t.r_plus);
    let _ = writeln!(s, "period          = {:.16e}", t.period);
    let _ = writeln!(s, "omega1          = {:.16e}", t.omega1);
    let _ = writeln!(s, "omega2          = {:.16e}", t.omega2);
    let _ = writeln!(s, "action I1       = {:.16e}", t.action);
    let _ = writeln!(s, "defect          = ({:e}, {:e})", t.defect.0, t.defect.1);
    let _ = writeln!(s, "lambda          = {:.16e}", lambda);
    let _ = writeln!(s, "E_script        = {:.16e}", t.energy + params.h * lambda);
    let _ = writeln!(s, "resonance gap   = {:.16e}", margin);
    s
}

pub fn cmd_torus(cfg: &RunConfig) -> Result<Outcome> {
    let params = cfg.model_params()?;
    let torus = cfg.quantize(&params)?;
    let lambda = solve_lambda(&params, &torus)?;
    let margin = crate::classical::resonance_margin(torus.omega1, torus.omega2, cfg.numerics.harmonics);
    let report = torus_report(&params, &torus, lambda, margin);
    let mut out = OutputSet::open(&cfg.output.directory, cfg.output.force)?;
    out.write("torus.txt", report.as_bytes())?;
    if cfg.output.formats.csv() {
        let table = torus.sample(cfg.numerics.table_samples);
        let mut csv = String::from("theta1,r,p_r,q\n");
        for i in 0..table.theta1.len() {
            let _ = writeln!(
                csv,
                "{:.16e},{:.16e},{:.16e},{:.16e}",
                table.theta1[i], table.r[i], table.p_r[i], table.q[i]
            );
        }
        out.write("trajectory.csv", csv.as_bytes())?;
    }
    let results = results_of(&[
        ("E_nu", torus.energy),
        ("lambda", lambda),
        ("E_script", torus.energy + params.h * lambda),
        ("omega1", torus.omega1),
        ("omega2", torus.omega2),
        ("r_minus", torus.r_minus),
        ("r_plus", torus.r_plus),
        ("period", torus.period),
        ("action", torus.action),
        ("resonance_margin", margin),
    ]);
    out.write("manifest.toml", manifest(Command::Torus, cfg, Some(&torus), results)?.as_bytes())?;
    Ok(Outcome { command: Command::Torus, report, files: out.finish(), passed: true })
}

/// Spectrum rows over the configured ranges, `nu2` outer. Each quantization
/// is seeded with the previous energy of the same `nu2`.
pub fn spectrum_rows(cfg: &RunConfig) -> Result<Vec<SpectrumRow>> {
    let params = cfg.model_params()?;
    let (a1, b1) = cfg.spectrum.nu1.clone().unwrap_or(RangeSpec::One(cfg.torus.nu1)).bounds()?;
    let (a2, b2) = cfg.spectrum.nu2.clone().unwrap_or(RangeSpec::One(cfg.torus.nu2)).bounds()?;
    let options = cfg.classical_options();
    let mut rows = Vec::new();
    for nu2 in a2..=b2 {
        let mut guess = cfg.torus.e_guess;
        for nu1 in a1..=b1 {
            let torus = quantize_with(&params, nu1 as u32, nu2 as i32, guess, cfg.quantize_mode(), &options)
                .map_err(|e| context(e, &format!("quantizing nu = ({nu1}, {nu2})")))?;
            let lambda = solve_lambda(&params, &torus)?;
            let margin = crate::classical::resonance_margin(torus.omega1, torus.omega2, cfg.numerics.harmonics);
            info!("nu = ({nu1}, {nu2}): E = {:.12}", torus.energy);
            guess = torus.energy;
            rows.push(SpectrumRow::new(&params, &torus, lambda, margin));
        }
    }
    Ok(rows)
}

fn context(e: Error, what: &str) -> Error {
    match e {
        Error::Domain(m) => Error::Domain(format!("{what}: {m}")),
        Error::Verification(m) => Error::Verification(format!("{what}: {m}")),
        Error::Io(m) => Error::Io(format!("{what}: {m}")),
        Error::MultiplicityDegeneracy(m) => Error::MultiplicityDegeneracy(format!("{what}: {m}")),
        other => {
            log::error!("{what}");
            other
        }
    }
}

pub fn cmd_spectrum(cfg: &RunConfig) -> Result<Outcome> {
    let rows = spectrum_rows(cfg)?;
    let csv = spectrum_csv(&rows);
    let mut out = OutputSet::open(&cfg.output.directory, cfg.output.force)?;
    out.write("spectrum.csv", csv.as_bytes())?;
    let mut results = toml::Table::new();
    results.insert("rows".into(), toml::Value::Integer(rows.len() as i64));
    out.write("manifest.toml", manifest(Command::Spectrum, cfg, None, results)?.as_bytes())?;
    Ok(Outcome { command: Command::Spectrum, report: csv, files: out.finish(), passed: true })
}

/// Grid of the configured field on the configured torus.
pub fn field_grid(cfg: &RunConfig) -> Result<(Pipeline, FieldConfig, SpinorGrid)> {
    let pipe = build_pipeline(cfg, cfg.field.warping)?;
    let fc = cfg.field_config(&pipe.torus);
    let grid = density_grid(&pipe.params, &pipe.torus, &pipe.amplitude, &fc)?;
    Ok((pipe, fc, grid))
}

pub fn cmd_field(cfg: &RunConfig) -> Result<Outcome> {
    let (pipe, _, grid) = field_grid(cfg)?;
    let mut out = OutputSet::open(&cfg.output.directory, cfg.output.force)?;
    let formats = cfg.output.formats;
    if formats.csv() {
        let parts: [(&str, Vec<f64>); 5] = [
            ("psi1_re", grid.psi1.iter().map(|c| c.re).collect()),
            ("psi1_im", grid.psi1.iter().map(|c| c.im).collect()),
            ("psi2_re", grid.psi2.iter().map(|c| c.re).collect()),
            ("psi2_im", grid.psi2.iter().map(|c| c.im).collect()),
            ("density", grid.density.clone()),
        ];
        for (name, values) in &parts {
            out.write(&format!("{name}.grid"), format_grid(grid.nx, grid.ny, grid.x, grid.y, values).as_bytes())?;
        }
    }
    if formats.pgm() {
        out.write("density.pgm", &pgm_bytes(grid.nx, grid.ny, &grid.density))?;
    }
    let mut report = String::new();
    let _ = writeln!(report, "grid            = {} x {}", grid.nx, grid.ny);
    let _ = writeln!(report, "warping         = {}", if cfg.field.warping { "on" } else { "off" });
    let _ = writeln!(report, "E_nu            = {:.16e}", pipe.torus.energy);
    let _ = writeln!(report, "max density     = {:.16e}", grid.max_density());
    let _ = writeln!(report, "seam jump       = {:.6e}", grid.seam_jump);
    let covered = grid.coverage.iter().filter(|&&c| c).count();
    let _ = writeln!(report, "nodes in annulus = {covered}");
    let results = results_of(&[
        ("E_nu", pipe.torus.energy),
        ("lambda", pipe.lambda),
        ("max_density", grid.max_density()),
        ("seam_jump", grid.seam_jump),
        ("tail_bound", pipe.table.tail_bound()),
    ]);
    out.write("manifest.toml", manifest(Command::Field, cfg, Some(&pipe.torus), results)?.as_bytes())?;
    Ok(Outcome { command: Command::Field, report, files: out.finish(), passed: true })
}

/// One verification line.
#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: &'static str,
    pub value: f64,
    pub limit: f64,
    pub passed: bool,
}

impl Check {
    fn at_most(name: &'static str, value: f64, limit: f64) -> Check {
        Check { name, value, limit, passed: value <= limit }
    }

    fn at_least(name: &'static str, value: f64, limit: f64) -> Check {
        Check { name, value, limit, passed: value >= limit }
    }
}

/// Fixed phase-space points for the pointwise symbol checks.
fn probe_points() -> Vec<([f64; 2], [f64; 2])> {
    let mut pts = Vec::new();
    for i in 0..5 {
        for j in 0..4 {
            let a = 0.4 + 0.9 * i as f64;
            let b = 0.3 + 1.7 * j as f64;
            pts.push(([a.cos() * 0.8, (1.3 * b).sin()], [a * 0.7 + 0.2, (b - 2.0) * 0.6]));
        }
    }
    pts
}

/// `max ||L chi0 - H0 chi0||` at `mu = 0` and `max |tw_exact_band - eigenvalue|`
/// at the configured `mu`, over [`probe_points`].
pub fn symbol_residuals(params: &ModelParams) -> Result<(f64, f64)> {
    let (mut eig, mut band) = (0.0_f64, 0.0_f64);
    for (p, x) in probe_points() {
        let r = x[0].hypot(x[1]);
        let k = kinetic_momentum(p, x, params.b);
        let (u, _) = params.potential_at(r);
        let (m, _) = params.mass_at(r);
        let l0 = matrix_symbol(p, x, params, 0.0)?;
        for b in [Band::Plus, Band::Minus] {
            let v = chi0(b, k, m)?;
            let h0 = u + b.sign() * (m * m + k[0] * k[0] + k[1] * k[1]).sqrt();
            for row in 0..2 {
                let lv = l0[row][0] * v[0] + l0[row][1] * v[1];
                eig = eig.max((lv - h0 * v[row]).norm());
            }
        }
        let mu = params.mu();
        let (lo, hi) = hermitian_eigenvalues(&matrix_symbol(p, x, params, mu)?);
        band = band.max((tw_exact_band(p, x, params, mu, Band::Plus)? - hi).abs());
        band = band.max((tw_exact_band(p, x, params, mu, Band::Minus)? - lo).abs());
    }
    Ok((eig, band))
}

/// Invariant suite on the configured torus.
pub fn verification_checks(cfg: &RunConfig) -> Result<(Pipeline, Vec<Check>)> {
    let pipe = build_pipeline(cfg, true)?;
    let (params, torus) = (&pipe.params, &pipe.torus);
    let h = params.h;
    let mut checks = Vec::new();
    let rule = gauss_legendre(cfg.numerics.quadrature_order)?;
    let action = radial_action_with(params, torus.energy, torus.p_phi, &rule)?;
    checks.push(Check::at_most("quantization I1 = h (nu1 + 1/2)", (action - h * (torus.nu.0 as f64 + 0.5)).abs(), 1e-10));
    let row = SpectrumRow::new(params, torus, pipe.lambda, pipe.table.resonance_margin);
    checks.push(Check::at_most("E_script = E_nu + h lambda", (row.e_script - (row.e_nu + h * row.lambda)).abs(), 1e-14));
    checks.push(Check::at_most("lambda invariance in gamma", verify_lambda_invariance(params, torus)?, 1e-10));
    checks.push(Check::at_least("resonance margin >= eps", pipe.table.resonance_margin, pipe.eps));
    checks.push(Check::at_most(
        "transport residual <= tail bound",
        transport_residual(&pipe.amplitude)?,
        pipe.table.tail_bound(),
    ));
    let fc = cfg.field_config(torus);
    fc.validate(torus)?;
    checks.push(Check::at_most(
        "in/out overlap discrepancy <= 10 h",
        overlap_discrepancy(params, torus, &pipe.amplitude, &fc, 64, 64)?,
        10.0 * h,
    ));
    let (eig, band) = symbol_residuals(params)?;
    checks.push(Check::at_most("chi0 eigenvector residual", eig, 1e-12));
    checks.push(Check::at_most("exact band vs 2x2 eigenvalues", band, 1e-12));
    Ok((pipe, checks))
}

fn check_report(checks: &[Check]) -> String {
    let mut s = String::new();
    for c in checks {
        let _ = writeln!(
            s,
            "{} {:<40} {:.6e} (limit {:.6e})",
            if c.passed { "PASS" } else { "FAIL" },
            c.name,
            c.value,
            c.limit
        );
    }
    s
}

pub fn cmd_verify(cfg: &RunConfig) -> Result<Outcome> {
    let (pipe, checks) = verification_checks(cfg)?;
    let report = check_report(&checks);
    let passed = checks.iter().all(|c| c.passed);
    let mut out = OutputSet::open(&cfg.output.directory, cfg.output.force)?;
    out.write("verify.txt", report.as_bytes())?;
    let mut results = toml::Table::new();
    for c in &checks {
        results.insert(c.name.to_string(), toml::Value::Float(c.value));
    }
    results.insert("passed".into(), toml::Value::Boolean(passed));
    out.write("manifest.toml", manifest(Command::Verify, cfg, Some(&pipe.torus), results)?.as_bytes())?;
    Ok(Outcome { command: Command::Verify, report, files: out.finish(), passed })
}

/// Default-configuration smoke suite; writes nothing.
pub fn selftest_checks() -> Result<Vec<Check>> {
    let mut checks = Vec::new();
    let a = airy(0.0);
    checks.push(Check::at_most("Ai(0)", (a.ai - AI_ZERO).abs(), 1e-10));
    checks.push(Check::at_most("Ai'(0)", (a.ai_prime - AI_PRIME_ZERO).abs(), 1e-10));
    let rule = gauss_legendre(16)?;
    checks.push(Check::at_most("Gauss-Legendre x^7", (rule.integrate(0.0, 1.0, |x| x.powi(7)) - 0.125).abs(), 1e-14));
    let samples: Vec<Complex64> =
        (0..32).map(|j| Complex64::from_polar(1.0, 3.0 * std::f64::consts::TAU * j as f64 / 32.0)).collect();
    let spec = dft(&samples)?;
    checks.push(Check::at_most("DFT single harmonic", (spec.get(3) - 1.0).norm() + spec.get(2).norm(), 1e-13));

    let landau = ModelParams { potential: RadialProfile::Constant { value: 0.0 }, ..ModelParams::example() };
    let (e, p_phi) = (0.935, 1.287_244_5);
    let kappa = (e * e - 0.49_f64).sqrt();
    let disc = (kappa * kappa + 2.0 * landau.b * p_phi).sqrt();
    let (rm, rp) = turning_points(&landau, e, p_phi)?;
    let err = (rm - (disc - kappa) / landau.b).abs().max((rp - (disc + kappa) / landau.b).abs());
    checks.push(Check::at_most("free turning points", err, 1e-10));

    let params = ModelParams::example();
    let (eig, band) = symbol_residuals(&params)?;
    checks.push(Check::at_most("chi0 eigenvector residual", eig, 1e-12));
    checks.push(Check::at_most("exact band vs 2x2 eigenvalues", band, 1e-12));

    let cfg = RunConfig::default();
    let torus = cfg.quantize(&params)?;
    let target = params.h * (torus.nu.0 as f64 + 0.5);
    checks.push(Check::at_most("example quantization", (torus.action - target).abs(), 1e-10));
    checks.push(Check::at_most("example lambda invariance", verify_lambda_invariance(&params, &torus)?, 1e-10));
    Ok(checks)
}

pub fn cmd_selftest() -> Result<Outcome> {
    let checks = selftest_checks()?;
    Ok(Outcome {
        command: Command::Selftest,
        report: check_report(&checks),
        files: Vec::new(),
        passed: checks.iter().all(|c| c.passed),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_config_is_example() {
        let cfg = parse_config("").unwrap();
        assert_eq!(cfg, RunConfig::default());
        let p = cfg.model_params().unwrap();
        assert_eq!(p, ModelParams::example());
        assert_eq!(cfg.nu(), (16, 15));
        assert_eq!(cfg.torus.e_guess, 0.935);
    }

    #[test]
    fn gamma_zero_keeps_field_warping() {
        let cfg = parse_config("[model]\ngamma = 0\n").unwrap();
        assert_eq!(cfg.model_params().unwrap().gamma, 0.0);
        assert!(cfg.field.warping);
    }

    #[test]
    fn negative_nu1_is_range_error() {
        let err = parse_config("# header\n[torus]\nnu1 = -1\n").unwrap_err();
        assert!(matches!(err, Error::Config { line: Some(3), .. }), "{err}");
        assert_eq!(err.exit_code(), 2);
    }

    #[test]
    fn unknown_key_reports_line() {
        let err = parse_config("[model]\nh = 0.1\ngama = 0.5\n").unwrap_err();
        match err {
            Error::Config { line, message } => {
                assert_eq!(line, Some(3));
                assert!(message.contains("gama"), "{message}");
            }
            other => panic!("{other}"),
        }
        assert!(matches!(parse_config("[modle]\n").unwrap_err(), Error::Config { line: Some(1), .. }));
    }

    #[test]
    fn syntax_error_reports_line() {
        let err = parse_config("[torus]\nnu1 = 16\nnu2 = = 3\n").unwrap_err();
        assert!(matches!(err, Error::Config { line: Some(3), .. }), "{err}");
    }

    #[test]
    fn profiles_and_mass_specs() {
        let cfg = parse_config(
            "[model]\npotential = { kind = \"gaussian_well\", depth = 0.5, width = 1.0 }\nmass = { tilde_m = 0.3 }\n",
        )
        .unwrap();
        let p = cfg.model_params().unwrap();
        assert_eq!(p.potential, RadialProfile::GaussianWell { depth: 0.5, width: 1.0 });
        assert_eq!(p.mass, MassRegime::SmallMass { tilde_m: 0.3 });
        let cfg = parse_config("[model.mass]\nkind = \"polynomial\"\ncoefficients = [0.7, 0.01]\n").unwrap();
        assert!(matches!(cfg.model_params().unwrap().mass, MassRegime::RadialMass(RadialProfile::Polynomial { .. })));
        assert!(parse_config("[model]\nmass = { tilde_m = 0.3, extra = 1 }\n").is_err());
    }

    #[test]
    fn derive_from_physical() {
        let cfg = parse_config("[model]\nderive = true\n[physical]\nZ = 0\n").unwrap();
        let p = cfg.model_params().unwrap();
        assert_eq!(p.potential, RadialProfile::Coulomb { strength: 0.0 });
        assert!((p.b - DEFAULT_B).abs() < 1e-5);
    }

    #[test]
    fn eps_and_ranges() {
        let cfg = parse_config("[numerics]\neps_resonance = 1e-4\n[spectrum]\nnu1 = \"10:12\"\nnu2 = 15\n").unwrap();
        assert_eq!(cfg.eps_for((1.0, 0.5)), 1e-4);
        assert_eq!(cfg.spectrum.nu1.unwrap().bounds().unwrap(), (10, 12));
        assert!(parse_config("[numerics]\neps_resonance = \"often\"\n").is_err());
        assert!(matches!(
            parse_config("[spectrum]\nnu1 = \"-2:3\"\n").unwrap_err(),
            Error::Config { line: Some(2), .. }
        ));
        assert!(parse_range("5:3").is_err());
        assert_eq!(parse_range(" 7 ").unwrap(), (7, 7));
    }

    #[test]
    fn samples_must_cover_order() {
        assert!(parse_config("[numerics]\nharmonics = 200\n").is_err());
        assert!(parse_config("[numerics]\nharmonics = 200\nsamples = 2048\n").is_ok());
        assert!(parse_config("[numerics]\nsamples = 1000\n").is_err());
    }

    #[test]
    fn grid_round_trip() {
        let values: Vec<f64> = (0..6).map(|i| i as f64 * 0.1 - 0.25).collect();
        let text = format_grid(3, 2, (-1.0, 1.0), (-2.0, 2.0), &values);
        assert!(text.starts_with("# warpspec-grid v1\n# nx=3 ny=2\n"));
        let g = parse_grid(&text).unwrap();
        assert_eq!((g.nx, g.ny, g.x, g.y), (3, 2, (-1.0, 1.0), (-2.0, 2.0)));
        assert_eq!(g.values, values);
        assert_eq!(text.lines().nth(3).unwrap().split(' ').count(), 3);
    }

    #[test]
    fn pgm_layout() {
        let bytes = pgm_bytes(2, 2, &[0.0, 1.0, 2.0, 4.0]);
        let header = b"P5\n2 2\n65535\n";
        assert_eq!(&bytes[..header.len()], header);
        let px: Vec<u16> = bytes[header.len()..].chunks(2).map(|c| u16::from_be_bytes([c[0], c[1]])).collect();
        // Top row is the last grid row.
        assert_eq!(px, vec![32768, 65535, 0, 16384]);
    }

    #[test]
    fn spectrum_csv_format() {
        let row = SpectrumRow {
            nu1: 1,
            nu2: -2,
            e_nu: 0.5,
            lambda: 0.25,
            e_script: 0.5 + 0.1 * 0.25,
            omega1: 1.0,
            omega2: 0.5,
            r_minus: 0.1,
            r_plus: 2.0,
            resonance_margin: 0.3,
        };
        let csv = spectrum_csv(&[row]);
        let mut lines = csv.lines();
        assert_eq!(lines.next(), Some(SPECTRUM_HEADER));
        let fields: Vec<&str> = lines.next().unwrap().split(',').collect();
        assert_eq!(fields.len(), 10);
        assert_eq!(fields[2], "5.0000000000000000e-1");
        assert_eq!(fields[2].parse::<f64>().unwrap(), 0.5);
    }

    #[test]
    fn overrides_apply() {
        let mut cfg = RunConfig::default();
        let o = Overrides {
            band: Some(Band::Minus),
            warping: Some(false),
            harmonics: Some(200),
            grid: Some((32, 16)),
            formats: Some(Formats::Pgm),
            nu1: Some("3:4".into()),
            ..Default::default()
        };
        o.apply(&mut cfg).unwrap();
        assert_eq!(cfg.model.band, Band::Minus);
        assert!(!cfg.field.warping);
        assert_eq!((cfg.numerics.harmonics, cfg.numerics.samples), (200, 2048));
        assert_eq!((cfg.field.nx, cfg.field.ny), (32, 16));
        let bad = Overrides { nu1: Some("x".into()), ..Default::default() };
        assert!(bad.apply(&mut RunConfig::default()).is_err());
    }

    #[test]
    fn resolved_config_is_explicit_and_reparses() {
        let cfg = RunConfig::default();
        let params = cfg.model_params().unwrap();
        let torus = cfg.quantize(&params).unwrap();
        let r = cfg.resolved(Some(&torus)).unwrap();
        assert!(r.model.b.is_some() && r.field.delta.is_some() && r.field.sigma_out2.is_some());
        assert!(matches!(r.numerics.eps_resonance, EpsSpec::Value(_)));
        let text = toml::to_string(&r).unwrap();
        let back = parse_config(&text).unwrap();
        assert_eq!(back, r);
        assert_eq!(back.model_params().unwrap(), params);
        let fc = back.field_config(&torus);
        assert_eq!(fc, cfg.field_config(&torus));
    }

    #[test]
    fn failed_run_removes_outputs() {
        let dir = tempfile::tempdir().unwrap();
        let target = dir.path().join("out");
        {
            let mut set = OutputSet::open(&target, false).unwrap();
            set.write("a.txt", b"x").unwrap();
            assert!(target.join("a.txt").exists());
        }
        assert!(!target.exists());
        let mut set = OutputSet::open(&target, false).unwrap();
        set.write("a.txt", b"x").unwrap();
        set.finish();
        assert!(target.join("a.txt").exists());
        let mut again = OutputSet::open(&target, false).unwrap();
        assert!(again.write("a.txt", b"y").is_err());
        drop(again);
        assert!(target.join("a.txt").exists(), "pre-existing files are kept");
    }

    #[test]
    fn selftest_passes() {
        let checks = selftest_checks().unwrap();
        for c in &checks {
            assert!(c.passed, "{} = {:e} > {:e}", c.name, c.value, c.limit);
        }
    }
}
