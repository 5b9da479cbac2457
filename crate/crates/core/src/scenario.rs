//! Scenario files: plain `[section]` / `key = value` text describing one run.
//!
//! ```text
//! [pump]
//! wavelength_nm = 532
//!
//! [poling]
//! period_um = solve
//! design_temperature_C = 50
//!
//! [dc_crystal]
//! length_mm = 5
//! temperature_offset_C = -1.5
//!
//! [slab]
//! material = fused_silica
//! thickness_mm = 6
//! after_optimize = on
//! ```
//!
//! Element sections (`[slab]`, `[prism_compressor]`, `[phase_correction]`)
//! may repeat and are applied in file order.

use std::path::{Path, PathBuf};

use crate::delayscan::{DelayKernel, DEFAULT_TAU_HALF_SPAN_FS, DEFAULT_TAU_STEP_FS};
use crate::dispersion::{Knob, DEFAULT_SCAN_POINTS};
use crate::kv::{self, KvError, Section};
use crate::materials::MaterialLibrary;
use crate::spdc::{
    UpconversionAmplitude, DEFAULT_OMEGA_HALF_SPAN, DEFAULT_OMEGA_POINTS, DEFAULT_QUADRATURE_TOLERANCE,
    DEFAULT_RADIAL_INTERVALS, MAX_PUPIL_ANGLE,
};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub struct ScenarioError {
    pub line: Option<usize>,
    pub message: String,
}

impl std::fmt::Display for ScenarioError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self.line {
            Some(line) => write!(f, "line {line}: {}", self.message),
            None => f.write_str(&self.message),
        }
    }
}

impl From<KvError> for ScenarioError {
    fn from(e: KvError) -> Self {
        Self {
            line: Some(e.line),
            message: e.message,
        }
    }
}

fn err(line: usize, message: impl Into<String>) -> ScenarioError {
    ScenarioError {
        line: Some(line),
        message: message.into(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PeriodSetting {
    /// Solve for degenerate axial phasematching at this temperature, °C.
    Solve {
        design_temperature_c: f64,
    },
    Value(f64),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TemperatureSetting {
    Absolute(f64),
    /// Relative to the crystal's axial degenerate phasematching temperature.
    Offset(f64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct CrystalConfig {
    pub material: String,
    pub length_mm: f64,
    pub temperature: TemperatureSetting,
    pub line: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PathSelect {
    Both,
    Signal,
    Idler,
}

#[derive(Debug, Clone, PartialEq)]
pub enum ElementConfig {
    Slab {
        material: String,
        thickness_mm: f64,
        temperature_c: f64,
    },
    PrismCompressor {
        glass: String,
        apex_separation_mm: f64,
        insertion_mm: f64,
        design_wavelength_nm: f64,
    },
    PhaseCorrection {
        coefficients: Vec<f64>,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct PlacedElement {
    pub element: ElementConfig,
    pub path: PathSelect,
    pub after_optimize: bool,
    pub line: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SourceConfig {
    Spdc {
        amplitude: UpconversionAmplitude,
    },
    /// `|S|²` Gaussian of standard deviation `sigma_rad_per_fs`.
    Gaussian {
        sigma_rad_per_fs: f64,
    },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PupilConfig {
    pub theta_max_deg: f64,
    pub inner_gap: bool,
    pub mirror_gap_mm: f64,
    pub focal_length_mm: f64,
}

impl Default for PupilConfig {
    fn default() -> Self {
        Self {
            theta_max_deg: 2.0,
            inner_gap: false,
            mirror_gap_mm: 1.5,
            focal_length_mm: 75.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridConfig {
    pub omega_points: usize,
    pub omega_half_span: f64,
    pub radial_intervals: usize,
    pub tolerance: f64,
    /// Refinement ladder depth; 0 disables it.
    pub refine_levels: usize,
}

impl Default for GridConfig {
    fn default() -> Self {
        Self {
            omega_points: DEFAULT_OMEGA_POINTS,
            omega_half_span: DEFAULT_OMEGA_HALF_SPAN,
            radial_intervals: DEFAULT_RADIAL_INTERVALS,
            tolerance: DEFAULT_QUADRATURE_TOLERANCE,
            refine_levels: 0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DelayConfig {
    pub kernel: DelayKernel,
    pub half_span_fs: f64,
    pub step_fs: f64,
    /// Also trace with the signal-delay kernel and report the width ratio.
    pub compare_signal_delay: bool,
}

impl Default for DelayConfig {
    fn default() -> Self {
        Self {
            kernel: DelayKernel::SignalDelay,
            half_span_fs: DEFAULT_TAU_HALF_SPAN_FS,
            step_fs: DEFAULT_TAU_STEP_FS,
            compare_signal_delay: false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OptimizeConfig {
    pub knob: Knob,
    pub bracket: (f64, f64),
    pub scan_points: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub name: String,
    pub materials_file: Option<PathBuf>,
    pub pump_wavelength_nm: f64,
    pub poling: PeriodSetting,
    pub dc_crystal: Option<CrystalConfig>,
    pub uc_crystal: Option<CrystalConfig>,
    pub pupil: PupilConfig,
    pub source: SourceConfig,
    pub include_crystal_halves: bool,
    pub elements: Vec<PlacedElement>,
    pub optimize: Option<OptimizeConfig>,
    pub delay: DelayConfig,
    pub grid: GridConfig,
    pub output_dir: Option<PathBuf>,
}

fn single<'a>(sections: &'a [Section], name: &str) -> Result<Option<&'a Section>, ScenarioError> {
    let mut found = sections.iter().filter(|s| s.name == name);
    let first = found.next();
    if let Some(dup) = found.next() {
        return Err(err(dup.line, format!("section [{name}] given twice")));
    }
    Ok(first)
}

fn parse_path(s: &Section) -> Result<PathSelect, ScenarioError> {
    match s.get("path") {
        None => Ok(PathSelect::Both),
        Some(e) => match e.value.as_str() {
            "both" => Ok(PathSelect::Both),
            "signal" => Ok(PathSelect::Signal),
            "idler" => Ok(PathSelect::Idler),
            other => Err(err(
                e.line,
                format!("path must be both, signal or idler, got `{other}`"),
            )),
        },
    }
}

fn parse_flag(s: &Section, key: &str, default: bool) -> Result<bool, ScenarioError> {
    Ok(match s.get(key) {
        None => default,
        Some(e) => e.parse_bool()?,
    })
}

fn parse_crystal(s: &Section) -> Result<CrystalConfig, ScenarioError> {
    s.reject_unknown(&["material", "length_mm", "temperature_C", "temperature_offset_C"])?;
    let temperature = match (s.get("temperature_C"), s.get("temperature_offset_C")) {
        (Some(a), None) => TemperatureSetting::Absolute(a.parse()?),
        (None, Some(o)) => TemperatureSetting::Offset(o.parse()?),
        (None, None) => TemperatureSetting::Offset(-1.5),
        (Some(_), Some(o)) => {
            return Err(err(
                o.line,
                "give either temperature_C or temperature_offset_C, not both",
            ));
        }
    };
    Ok(CrystalConfig {
        material: s.get("material").map_or("mgo_ln".to_string(), |e| e.value.clone()),
        length_mm: s.require("length_mm")?.parse()?,
        temperature,
        line: s.line,
    })
}

impl Scenario {
    pub fn load(path: &Path) -> Result<Self, ScenarioError> {
        let text = std::fs::read_to_string(path).map_err(|e| ScenarioError {
            line: None,
            message: format!("{}: {e}", path.display()),
        })?;
        let name = path.file_stem().and_then(|s| s.to_str()).unwrap_or("scenario");
        let mut scn = Self::parse(&text, name)?;
        if let Some(m) = &scn.materials_file {
            if m.is_relative() {
                if let Some(dir) = path.parent() {
                    scn.materials_file = Some(dir.join(m));
                }
            }
        }
        Ok(scn)
    }

    /// Parses and checks everything that can be checked without materials.
    pub fn parse(text: &str, default_name: &str) -> Result<Self, ScenarioError> {
        let sections = kv::parse(text)?;
        const KNOWN: &[&str] = &[
            "materials",
            "pump",
            "poling",
            "dc_crystal",
            "uc_crystal",
            "pupil",
            "source",
            "chain",
            "slab",
            "prism_compressor",
            "phase_correction",
            "optimize",
            "delay",
            "grid",
            "output",
        ];
        for s in &sections {
            if !KNOWN.contains(&s.name.as_str()) {
                return Err(err(s.line, format!("unknown section [{}]", s.name)));
            }
        }

        let materials_file = match single(&sections, "materials")? {
            Some(s) => {
                s.reject_unknown(&["file"])?;
                Some(PathBuf::from(&s.require("file")?.value))
            }
            None => None,
        };

        let pump = single(&sections, "pump")?.ok_or_else(|| ScenarioError {
            line: None,
            message: "missing [pump] section".into(),
        })?;
        pump.reject_unknown(&["wavelength_nm", "power_W"])?;
        let pump_wavelength_nm: f64 = pump.require("wavelength_nm")?.parse()?;

        let poling = match single(&sections, "poling")? {
            None => PeriodSetting::Solve {
                design_temperature_c: 50.0,
            },
            Some(s) => {
                s.reject_unknown(&["period_um", "design_temperature_C"])?;
                let design: f64 = s.parse_or("design_temperature_C", 50.0)?;
                match s.get("period_um") {
                    None => PeriodSetting::Solve {
                        design_temperature_c: design,
                    },
                    Some(e) if e.value == "solve" => PeriodSetting::Solve {
                        design_temperature_c: design,
                    },
                    Some(e) => PeriodSetting::Value(e.parse()?),
                }
            }
        };

        let source = match single(&sections, "source")? {
            None => SourceConfig::Spdc {
                amplitude: UpconversionAmplitude::Direct,
            },
            Some(s) => {
                s.reject_unknown(&["kind", "upconversion_phase", "sigma_rad_per_fs"])?;
                let kind = s.get("kind").map_or("spdc", |e| e.value.as_str());
                match kind {
                    "spdc" => {
                        let amplitude = match s.get("upconversion_phase") {
                            None => UpconversionAmplitude::Direct,
                            Some(e) => match e.value.as_str() {
                                "direct" => UpconversionAmplitude::Direct,
                                "conjugated" => UpconversionAmplitude::Conjugated,
                                other => {
                                    return Err(err(
                                        e.line,
                                        format!("upconversion_phase must be direct or conjugated, got `{other}`"),
                                    ))
                                }
                            },
                        };
                        SourceConfig::Spdc { amplitude }
                    }
                    "gaussian" => SourceConfig::Gaussian {
                        sigma_rad_per_fs: s.require("sigma_rad_per_fs")?.parse()?,
                    },
                    other => {
                        return Err(err(
                            s.line,
                            format!("source kind must be spdc or gaussian, got `{other}`"),
                        ))
                    }
                }
            }
        };

        let dc_crystal = single(&sections, "dc_crystal")?.map(parse_crystal).transpose()?;
        let uc_crystal = single(&sections, "uc_crystal")?.map(parse_crystal).transpose()?;

        let mut pupil = PupilConfig::default();
        if let Some(s) = single(&sections, "pupil")? {
            s.reject_unknown(&["theta_max_deg", "inner_gap", "mirror_gap_mm", "focal_length_mm"])?;
            pupil.theta_max_deg = s.parse_or("theta_max_deg", pupil.theta_max_deg)?;
            pupil.inner_gap = parse_flag(s, "inner_gap", pupil.inner_gap)?;
            pupil.mirror_gap_mm = s.parse_or("mirror_gap_mm", pupil.mirror_gap_mm)?;
            pupil.focal_length_mm = s.parse_or("focal_length_mm", pupil.focal_length_mm)?;
        }

        let include_crystal_halves = match single(&sections, "chain")? {
            None => true,
            Some(s) => {
                s.reject_unknown(&["include_crystal_halves"])?;
                parse_flag(s, "include_crystal_halves", true)?
            }
        };

        let mut elements = Vec::new();
        for s in &sections {
            let element = match s.name.as_str() {
                "slab" => {
                    s.reject_unknown(&["material", "thickness_mm", "temperature_C", "path", "after_optimize"])?;
                    ElementConfig::Slab {
                        material: s.require("material")?.value.clone(),
                        thickness_mm: s.require("thickness_mm")?.parse()?,
                        temperature_c: s.parse_or("temperature_C", 20.0)?,
                    }
                }
                "prism_compressor" => {
                    s.reject_unknown(&[
                        "glass",
                        "apex_separation_mm",
                        "insertion_mm",
                        "design_wavelength_nm",
                        "path",
                        "after_optimize",
                    ])?;
                    ElementConfig::PrismCompressor {
                        glass: s.get("glass").map_or("sf14".to_string(), |e| e.value.clone()),
                        apex_separation_mm: s.require("apex_separation_mm")?.parse()?,
                        insertion_mm: s.require("insertion_mm")?.parse()?,
                        design_wavelength_nm: s.parse_or("design_wavelength_nm", 2.0 * pump_wavelength_nm)?,
                    }
                }
                "phase_correction" => {
                    s.reject_unknown(&["coefficients", "path", "after_optimize"])?;
                    ElementConfig::PhaseCorrection {
                        coefficients: s.require("coefficients")?.parse_list()?,
                    }
                }
                _ => continue,
            };
            elements.push(PlacedElement {
                element,
                path: parse_path(s)?,
                after_optimize: parse_flag(s, "after_optimize", false)?,
                line: s.line,
            });
        }

        let optimize = match single(&sections, "optimize")? {
            None => None,
            Some(s) => {
                s.reject_unknown(&["knob", "bracket", "scan_points"])?;
                let knob_entry = s.require("knob")?;
                let knob: Knob = knob_entry.value.parse().map_err(|m: String| err(knob_entry.line, m))?;
                let b = match s.get("bracket") {
                    Some(e) => {
                        let v = e.parse_list()?;
                        if v.len() != 2 {
                            return Err(err(e.line, "bracket needs `lo, hi`"));
                        }
                        (v[0], v[1])
                    }
                    None => match knob {
                        Knob::CorrectionGddFs2 => (-200.0, 200.0),
                        Knob::InsertionMm => (2.0, 12.0),
                    },
                };
                Some(OptimizeConfig {
                    knob,
                    bracket: b,
                    scan_points: s.parse_or("scan_points", DEFAULT_SCAN_POINTS)?,
                })
            }
        };

        let mut delay = DelayConfig::default();
        if let Some(s) = single(&sections, "delay")? {
            s.reject_unknown(&["kernel", "half_span_fs", "step_fs", "compare_signal_delay"])?;
            if let Some(e) = s.get("kernel") {
                delay.kernel = match e.value.as_str() {
                    "signal_delay" => DelayKernel::SignalDelay,
                    "v_mask" => DelayKernel::VMask,
                    other => {
                        return Err(err(
                            e.line,
                            format!("kernel must be signal_delay or v_mask, got `{other}`"),
                        ))
                    }
                };
            }
            delay.half_span_fs = s.parse_or("half_span_fs", delay.half_span_fs)?;
            delay.step_fs = s.parse_or("step_fs", delay.step_fs)?;
            delay.compare_signal_delay = parse_flag(s, "compare_signal_delay", false)?;
        }

        let mut grid = GridConfig::default();
        if let Some(s) = single(&sections, "grid")? {
            s.reject_unknown(&[
                "omega_points",
                "omega_half_span_rad_per_fs",
                "radial_intervals",
                "tolerance",
                "refine_levels",
            ])?;
            grid.omega_points = s.parse_or("omega_points", grid.omega_points)?;
            grid.omega_half_span = s.parse_or("omega_half_span_rad_per_fs", grid.omega_half_span)?;
            grid.radial_intervals = s.parse_or("radial_intervals", grid.radial_intervals)?;
            grid.tolerance = s.parse_or("tolerance", grid.tolerance)?;
            grid.refine_levels = s.parse_or("refine_levels", grid.refine_levels)?;
        }

        let mut name = default_name.to_string();
        let mut output_dir = None;
        if let Some(s) = single(&sections, "output")? {
            s.reject_unknown(&["name", "dir"])?;
            if let Some(e) = s.get("name") {
                name = e.value.clone();
            }
            output_dir = s.get("dir").map(|e| PathBuf::from(&e.value));
        }

        let scn = Scenario {
            name,
            materials_file,
            pump_wavelength_nm,
            poling,
            dc_crystal,
            uc_crystal,
            pupil,
            source,
            include_crystal_halves,
            elements,
            optimize,
            delay,
            grid,
            output_dir,
        };
        scn.validate(&sections)?;
        Ok(scn)
    }

    fn validate(&self, sections: &[Section]) -> Result<(), ScenarioError> {
        let line_of = |name: &str| sections.iter().find(|s| s.name == name).map(|s| s.line);
        let fail = |section: &str, message: String| ScenarioError {
            line: line_of(section),
            message,
        };
        if !(self.pump_wavelength_nm > 0.0) {
            return Err(fail(
                "pump",
                format!("wavelength_nm must be positive, got {}", self.pump_wavelength_nm),
            ));
        }
        if let PeriodSetting::Value(p) = self.poling {
            if !(p > 0.0) {
                return Err(fail("poling", format!("period_um must be positive, got {p}")));
            }
        }
        if matches!(self.source, SourceConfig::Spdc { .. }) {
            for (name, c) in [("dc_crystal", &self.dc_crystal), ("uc_crystal", &self.uc_crystal)] {
                let c = c.as_ref().ok_or_else(|| ScenarioError {
                    line: None,
                    message: format!("spdc source needs a [{name}] section"),
                })?;
                if !(c.length_mm > 0.0) {
                    return Err(err(
                        c.line,
                        format!("[{name}] length_mm must be positive, got {}", c.length_mm),
                    ));
                }
            }
        }
        if let SourceConfig::Gaussian { sigma_rad_per_fs } = self.source {
            if !(sigma_rad_per_fs > 0.0) {
                return Err(fail(
                    "source",
                    format!("sigma_rad_per_fs must be positive, got {sigma_rad_per_fs}"),
                ));
            }
        }
        let theta = self.pupil.theta_max_deg.to_radians();
        if !(theta > 0.0 && theta <= MAX_PUPIL_ANGLE) {
            return Err(fail(
                "pupil",
                format!("theta_max_deg must be in (0, {:.3}]", MAX_PUPIL_ANGLE.to_degrees()),
            ));
        }
        if self.pupil.inner_gap && !(self.pupil.mirror_gap_mm >= 0.0 && self.pupil.focal_length_mm > 0.0) {
            return Err(fail(
                "pupil",
                "mirror_gap_mm must be >= 0 and focal_length_mm > 0".into(),
            ));
        }
        for e in &self.elements {
            let bad = match &e.element {
                ElementConfig::Slab { thickness_mm, .. } => (!(*thickness_mm >= 0.0)).then_some("thickness_mm"),
                ElementConfig::PrismCompressor {
                    apex_separation_mm,
                    insertion_mm,
                    design_wavelength_nm,
                    ..
                } => {
                    if !(*apex_separation_mm >= 0.0) {
                        Some("apex_separation_mm")
                    } else if !(*insertion_mm >= 0.0) {
                        Some("insertion_mm")
                    } else if !(*design_wavelength_nm > 0.0) {
                        Some("design_wavelength_nm")
                    } else {
                        None
                    }
                }
                ElementConfig::PhaseCorrection { coefficients } => coefficients.is_empty().then_some("coefficients"),
            };
            if let Some(key) = bad {
                return Err(err(e.line, format!("{key} must be non-negative")));
            }
            if e.after_optimize && self.optimize.is_none() {
                return Err(err(e.line, "after_optimize needs an [optimize] section"));
            }
        }
        if let Some(o) = &self.optimize {
            if !(o.bracket.0 < o.bracket.1) || o.scan_points < 3 {
                return Err(fail("optimize", "bracket needs lo < hi and scan_points >= 3".into()));
            }
            if o.knob == Knob::InsertionMm
                && !self
                    .elements
                    .iter()
                    .any(|e| !e.after_optimize && matches!(e.element, ElementConfig::PrismCompressor { .. }))
            {
                return Err(fail("optimize", "insertion_mm knob needs a [prism_compressor]".into()));
            }
        }
        if !(self.delay.half_span_fs > 0.0 && self.delay.step_fs > 0.0) {
            return Err(fail("delay", "half_span_fs and step_fs must be positive".into()));
        }
        let g = &self.grid;
        if g.omega_points < 16
            || !(g.omega_half_span > 0.0)
            || g.radial_intervals < 2
            || !g.radial_intervals.is_multiple_of(2)
            || !(g.tolerance > 0.0)
        {
            return Err(fail(
                "grid",
                "need omega_points >= 16, positive span and tolerance, even radial_intervals >= 2".into(),
            ));
        }
        Ok(())
    }

    /// Names of all referenced materials, checked against `lib`.
    pub fn check_materials<T: crate::scalar::Real>(&self, lib: &MaterialLibrary<T>) -> Result<(), ScenarioError> {
        let mut refs: Vec<(&str, usize)> = Vec::new();
        for c in [&self.dc_crystal, &self.uc_crystal].into_iter().flatten() {
            refs.push((&c.material, c.line));
        }
        for e in &self.elements {
            match &e.element {
                ElementConfig::Slab { material, .. } => refs.push((material, e.line)),
                ElementConfig::PrismCompressor { glass, .. } => refs.push((glass, e.line)),
                ElementConfig::PhaseCorrection { .. } => {}
            }
        }
        for (name, line) in refs {
            if lib.get(name).is_err() {
                return Err(err(line, format!("unknown material `{name}`")));
            }
        }
        Ok(())
    }

    /// Scales the frequency sample count and radial panel count by `factor`.
    pub fn with_grid_scale(mut self, factor: f64) -> Result<Self, ScenarioError> {
        if !(factor > 0.0 && factor.is_finite()) {
            return Err(ScenarioError {
                line: None,
                message: format!("grid scale must be positive, got {factor}"),
            });
        }
        self.grid.omega_points = ((self.grid.omega_points as f64 * factor).round() as usize).max(16);
        let radial = ((self.grid.radial_intervals as f64 * factor).round() as usize).max(2);
        self.grid.radial_intervals = radial + radial % 2;
        Ok(self)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const BASE: &str = "[pump]\nwavelength_nm = 532\n[dc_crystal]\nlength_mm = 5\n[uc_crystal]\nlength_mm = 5\n";

    #[test]
    fn minimal_scenario_takes_defaults() {
        let s = Scenario::parse(BASE, "x").unwrap();
        assert_eq!(s.name, "x");
        assert_eq!(
            s.poling,
            PeriodSetting::Solve {
                design_temperature_c: 50.0
            }
        );
        assert_eq!(s.dc_crystal.unwrap().temperature, TemperatureSetting::Offset(-1.5));
        assert!(s.include_crystal_halves);
        assert!(!s.pupil.inner_gap);
        assert_eq!(s.grid.omega_points, 2048);
        assert_eq!(s.delay.kernel, DelayKernel::SignalDelay);
    }

    #[test]
    fn zero_length_crystal_cites_its_section() {
        let text = BASE.replace("[uc_crystal]\nlength_mm = 5", "[uc_crystal]\nlength_mm = 0");
        let e = Scenario::parse(&text, "x").unwrap_err();
        assert_eq!(e.line, Some(5));
        assert!(e.message.contains("length_mm"));
    }

    #[test]
    fn parse_errors_carry_line_numbers() {
        let text = format!("{BASE}[slab]\nmaterial = sf10\nthickness_mm = five\n");
        let e = Scenario::parse(&text, "x").unwrap_err();
        assert_eq!(e.line, Some(9));
        let e = Scenario::parse(&format!("{BASE}[bogus]\n"), "x").unwrap_err();
        assert_eq!(e.line, Some(7));
        let e = Scenario::parse(&format!("{BASE}[delay]\nkernel = wobble\n"), "x").unwrap_err();
        assert_eq!(e.line, Some(8));
    }

    #[test]
    fn elements_keep_file_order_and_paths() {
        let text = format!(
            "{BASE}[optimize]\nknob = correction_gdd_fs2\n[slab]\nmaterial = fused_silica\nthickness_mm = 6\npath = signal\nafter_optimize = on\n[phase_correction]\ncoefficients = 10, 20\n"
        );
        let s = Scenario::parse(&text, "x").unwrap();
        assert_eq!(s.elements.len(), 2);
        assert_eq!(s.elements[0].path, PathSelect::Signal);
        assert!(s.elements[0].after_optimize);
        assert_eq!(
            s.elements[1].element,
            ElementConfig::PhaseCorrection {
                coefficients: vec![10.0, 20.0]
            }
        );
        assert_eq!(s.optimize.unwrap().bracket, (-200.0, 200.0));
    }

    #[test]
    fn after_optimize_without_optimizer_is_rejected() {
        let text = format!("{BASE}[slab]\nmaterial = fused_silica\nthickness_mm = 6\nafter_optimize = on\n");
        assert!(Scenario::parse(&text, "x").is_err());
    }

    #[test]
    fn unknown_material_is_reported_with_line() {
        let text = format!("{BASE}[slab]\nmaterial = unobtainium\nthickness_mm = 1\n");
        let s = Scenario::parse(&text, "x").unwrap();
        let e = s.check_materials(&MaterialLibrary::<f64>::bundled()).unwrap_err();
        assert_eq!(e.line, Some(7));
    }

    #[test]
    fn gaussian_source_needs_no_crystals() {
        let s = Scenario::parse(
            "[pump]\nwavelength_nm = 532\n[source]\nkind = gaussian\nsigma_rad_per_fs = 0.05\n",
            "g",
        )
        .unwrap();
        assert_eq!(s.source, SourceConfig::Gaussian { sigma_rad_per_fs: 0.05 });
        assert!(Scenario::parse("[pump]\nwavelength_nm = 532\n", "g").is_err());
    }

    #[test]
    fn grid_scale_keeps_radial_count_even() {
        let s = Scenario::parse(BASE, "x").unwrap().with_grid_scale(0.3).unwrap();
        assert_eq!(s.grid.omega_points, 614);
        assert_eq!(s.grid.radial_intervals % 2, 0);
        assert!(Scenario::parse(BASE, "x").unwrap().with_grid_scale(0.0).is_err());
    }

    #[test]
    fn duplicate_singleton_section_is_rejected() {
        let e = Scenario::parse(&format!("{BASE}[pump]\nwavelength_nm = 600\n"), "x").unwrap_err();
        assert_eq!(e.line, Some(7));
    }
}
