//! Runs a [`Scenario`] end to end and writes its artifacts.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use crate::delayscan::{metrics, trace, DelayKernel, TauSpec, TraceMetrics, UpconversionTrace};
use crate::dispersion::{
    local_maximum_certificate, optimize_dispersion, Element, OptimizationResult, OptimizeSpec, SystemChains,
};
use crate::error::Error;
use crate::grid::UniformGrid;
use crate::materials::MaterialLibrary;
use crate::phasematch::{solve_phasematch_temperature, solve_poling_period, CrystalSpec};
use crate::scalar::{lit, to_f64, wavelength_nm_to_omega, Real};
use crate::scenario::{
    CrystalConfig, ElementConfig, PathSelect, PeriodSetting, Scenario, ScenarioError, SourceConfig, TemperatureSetting,
};
use crate::spdc::{
    compute_envelope, gaussian_spectrum, quadrature_refine, ConvergenceReport, PairEnvelope, PairSource, PupilSpec,
    QuadratureSpec, SpectralAmplitude,
};

/// Window over which the peak-to-mean flatness figure is taken, fs.
pub const FLATNESS_WINDOW_FS: f64 = 80.0;

pub const BUNDLED_SCENARIOS: &[(&str, &str)] = &[
    ("fig3a", include_str!("../scenarios/fig3a.scn")),
    ("fig3b_99", include_str!("../scenarios/fig3b_99.scn")),
    ("fig3b_198", include_str!("../scenarios/fig3b_198.scn")),
    ("fig3c_513", include_str!("../scenarios/fig3c_513.scn")),
    ("fig3d_3790", include_str!("../scenarios/fig3d_3790.scn")),
    ("fig2b_detuned", include_str!("../scenarios/fig2b_detuned.scn")),
    ("gauss_vmask", include_str!("../scenarios/gauss_vmask.scn")),
];

pub fn bundled_scenario(name: &str) -> Option<Scenario> {
    let name = name.strip_suffix(".scn").unwrap_or(name);
    BUNDLED_SCENARIOS
        .iter()
        .find(|(n, _)| *n == name)
        .map(|(n, text)| Scenario::parse(text, n).expect("bundled scenario parses"))
}

/// Crystal settings actually used in a run.
#[derive(Debug, Clone, PartialEq)]
pub struct CrystalReport<T> {
    pub poling_period_um: T,
    pub phasematch_temperature_c: T,
    pub temperature_c: T,
}

#[derive(Debug, Clone)]
pub struct RunOutput<T> {
    pub name: String,
    pub pump_omega: T,
    pub crystals: Option<(CrystalReport<T>, CrystalReport<T>)>,
    pub envelope: PairEnvelope<T>,
    pub chains: SystemChains<T>,
    pub spectrum: SpectralAmplitude<T>,
    pub trace: UpconversionTrace<T>,
    pub metrics: TraceMetrics<T>,
    /// Signal-delay trace of the same spectrum, when asked for.
    pub reference: Option<(UpconversionTrace<T>, TraceMetrics<T>)>,
    pub optimization: Option<OptimizationResult<T>>,
    pub local_maximum: Option<bool>,
    /// Chain GDD at the degenerate frequency, including post-optimization elements.
    pub system_gdd_fs2: T,
    pub convergence: Option<ConvergenceReport>,
}

impl<T: Real> RunOutput<T> {
    pub fn peak_to_mean(&self) -> T {
        self.trace.peak_to_mean(lit(FLATNESS_WINDOW_FS))
    }

    pub fn width_ratio(&self) -> Option<T> {
        let (_, reference) = self.reference.as_ref()?;
        Some(self.metrics.fwhm_fs? / reference.fwhm_fs?)
    }
}

fn build_crystal<T: Real>(
    cfg: &CrystalConfig,
    lib: &MaterialLibrary<T>,
    poling: PeriodSetting,
    pump_omega: T,
) -> Result<(CrystalSpec<T>, CrystalReport<T>), Error> {
    let material = lib.get(&cfg.material)?;
    let template = CrystalSpec::new(material, lit(cfg.length_mm), lit(7.0), lit(50.0))?;
    let period = match poling {
        PeriodSetting::Value(p) => lit(p),
        PeriodSetting::Solve { design_temperature_c } => {
            solve_poling_period(&template, pump_omega, lit(design_temperature_c))?
        }
    };
    let crystal = template.with_poling_period(period);
    let t_pm = solve_phasematch_temperature(&crystal, pump_omega)?;
    let temperature = match cfg.temperature {
        TemperatureSetting::Absolute(t) => lit(t),
        TemperatureSetting::Offset(d) => t_pm + lit(d),
    };
    let crystal = crystal.with_temperature(temperature);
    crystal.validate()?;
    Ok((
        crystal,
        CrystalReport {
            poling_period_um: period,
            phasematch_temperature_c: t_pm,
            temperature_c: temperature,
        },
    ))
}

fn build_element<T: Real>(cfg: &ElementConfig, lib: &MaterialLibrary<T>, pump_omega: T) -> Result<Element<T>, Error> {
    Ok(match cfg {
        ElementConfig::Slab {
            material,
            thickness_mm,
            temperature_c,
        } => Element::slab(lib.get(material)?, lit(*thickness_mm), lit(*temperature_c)),
        ElementConfig::PrismCompressor {
            glass,
            apex_separation_mm,
            insertion_mm,
            design_wavelength_nm,
        } => Element::PrismCompressor {
            glass: lib.get(glass)?,
            apex_separation_mm: lit(*apex_separation_mm),
            insertion_mm: lit(*insertion_mm),
            design_omega: wavelength_nm_to_omega(lit(*design_wavelength_nm)),
        },
        ElementConfig::PhaseCorrection { coefficients } => Element::PhaseCorrection {
            center_omega: pump_omega / lit(2.0),
            coefficients: coefficients.iter().map(|c| lit(*c)).collect(),
        },
    })
}

fn place<T: Real>(chains: &mut SystemChains<T>, element: Element<T>, path: PathSelect) {
    match path {
        PathSelect::Both => chains.push_both(element),
        PathSelect::Signal => chains.signal.push(element),
        PathSelect::Idler => chains.idler.push(element),
    }
}

/// Materials named by the scenario's `[materials] file`, else the bundled set.
pub fn load_library<T: Real>(scn: &Scenario) -> Result<MaterialLibrary<T>, Error> {
    let lib = match &scn.materials_file {
        Some(path) => MaterialLibrary::load(path)?,
        None => MaterialLibrary::bundled(),
    };
    scn.check_materials(&lib)?;
    Ok(lib)
}

pub fn run<T: Real>(scn: &Scenario) -> Result<RunOutput<T>, Error> {
    let lib = load_library::<T>(scn)?;
    let pump_omega: T = wavelength_nm_to_omega(lit(scn.pump_wavelength_nm));
    let center = pump_omega / lit(2.0);
    let grid = UniformGrid::centered(center, lit(scn.grid.omega_half_span), scn.grid.omega_points).map_err(|e| {
        ScenarioError {
            line: None,
            message: format!("[grid] {e}"),
        }
    })?;
    let quad = QuadratureSpec {
        radial_intervals: scn.grid.radial_intervals,
        tolerance: scn.grid.tolerance,
    };

    let pre: Vec<Element<T>> = scn
        .elements
        .iter()
        .map(|e| build_element(&e.element, &lib, pump_omega))
        .collect::<Result<_, _>>()?;

    let (envelope, crystals, source, halves) = match scn.source {
        SourceConfig::Gaussian { sigma_rad_per_fs } => {
            let s = gaussian_spectrum(&grid, pump_omega, lit(sigma_rad_per_fs));
            let env = PairEnvelope {
                grid,
                pump_omega,
                values: s.values,
                refinement_change: 0.0,
                radial_intervals: 0,
            };
            (env, None, None, None)
        }
        SourceConfig::Spdc { amplitude } => {
            let dc_cfg = scn.dc_crystal.as_ref().expect("validated");
            let uc_cfg = scn.uc_crystal.as_ref().expect("validated");
            let (dc, dc_report) = build_crystal(dc_cfg, &lib, scn.poling, pump_omega)?;
            let (uc, uc_report) = build_crystal(uc_cfg, &lib, scn.poling, pump_omega)?;
            let gap = scn
                .pupil
                .inner_gap
                .then(|| (lit(scn.pupil.mirror_gap_mm), lit(scn.pupil.focal_length_mm)));
            let pupil = PupilSpec::cone_with_gap(lit::<T>(scn.pupil.theta_max_deg).to_radians(), gap)?;
            let source = PairSource {
                downconversion: dc.clone(),
                upconversion: uc.clone(),
                pupil,
                pump_omega,
                amplitude,
            };
            let env = compute_envelope(&source, &grid, &quad)?;
            let halves = scn.include_crystal_halves.then(|| {
                (
                    Element::slab(dc.material.clone(), dc.length_mm / lit(2.0), dc.temperature_c),
                    Element::slab(uc.material.clone(), uc.length_mm / lit(2.0), uc.temperature_c),
                )
            });
            (env, Some((dc_report, uc_report)), Some(source), halves)
        }
    };

    let mut base = SystemChains::default();
    if let Some((first, _)) = &halves {
        base.push_both(first.clone());
    }
    for (cfg, element) in scn.elements.iter().zip(&pre) {
        if !cfg.after_optimize {
            place(&mut base, element.clone(), cfg.path);
        }
    }
    if let Some((_, second)) = &halves {
        base.push_both(second.clone());
    }
    base.signal.validate()?;
    base.idler.validate()?;

    let (mut chains, optimization, local_maximum) = match &scn.optimize {
        None => (base.clone(), None, None),
        Some(o) => {
            let spec = OptimizeSpec {
                knob: o.knob,
                bracket: (lit(o.bracket.0), lit(o.bracket.1)),
                scan_points: o.scan_points,
            };
            let res = optimize_dispersion(&envelope, &base, &spec)?;
            let cert = local_maximum_certificate(&envelope, &base, &res)?;
            (res.chains.clone(), Some(res), Some(cert))
        }
    };
    for (cfg, element) in scn.elements.iter().zip(&pre) {
        if cfg.after_optimize {
            place(&mut chains, element.clone(), cfg.path);
        }
    }

    let (ps, pi) = chains.phases(&grid)?;
    let spectrum = envelope.with_phases(&ps, &pi)?;
    let tau = TauSpec::Window {
        half_span_fs: lit(scn.delay.half_span_fs),
        step_fs: lit(scn.delay.step_fs),
    };
    let tr = trace(&spectrum, scn.delay.kernel, &tau)?;
    let m = metrics(&tr)?;
    let reference = if scn.delay.compare_signal_delay && scn.delay.kernel != DelayKernel::SignalDelay {
        let t = trace(&spectrum, DelayKernel::SignalDelay, &tau)?;
        let mm = metrics(&t)?;
        Some((t, mm))
    } else {
        None
    };
    let system_gdd_fs2 = chains.residual_gdd(center)?;

    let convergence = match (&source, scn.grid.refine_levels) {
        (Some(src), levels) if levels > 0 => Some(quadrature_refine(src, &grid, &quad, levels, |g| {
            chains.phases(g).map_err(|e| match e {
                crate::dispersion::DispersionError::Spectrum(s) => s,
                crate::dispersion::DispersionError::Material(m) => m.into(),
                other => crate::spdc::SpdcError::Grid(other.to_string()),
            })
        })?),
        _ => None,
    };

    Ok(RunOutput {
        name: scn.name.clone(),
        pump_omega,
        crystals,
        envelope,
        chains,
        spectrum,
        trace: tr,
        metrics: m,
        reference,
        optimization,
        local_maximum,
        system_gdd_fs2,
        convergence,
    })
}

/// Which artifacts [`write_artifacts`] emits.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Artifacts {
    pub spectrum: bool,
    pub trace: bool,
    pub optimize: bool,
    pub log: bool,
}

impl Artifacts {
    pub const ALL: Artifacts = Artifacts {
        spectrum: true,
        trace: true,
        optimize: true,
        log: true,
    };
}

fn create(path: &Path) -> Result<std::io::BufWriter<fs::File>, Error> {
    fs::File::create(path)
        .map(std::io::BufWriter::new)
        .map_err(|e| Error::io(path, e))
}

fn write_text(path: &Path, text: &str) -> Result<(), Error> {
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

pub fn metrics_block<T: Real>(out: &RunOutput<T>) -> String {
    let mut s = out.metrics.to_key_values();
    let _ = writeln!(s, "kernel={}", out.trace.kernel.name());
    let _ = writeln!(s, "rate_at_zero_delay={:.9e}", to_f64(out.trace.rate_at_zero()));
    let _ = writeln!(s, "peak_to_mean_80fs={:.6}", to_f64(out.peak_to_mean()));
    match out.spectrum.bandwidth_nm() {
        Some(bw) => {
            let _ = writeln!(s, "bandwidth_nm={:.3}", to_f64(bw));
        }
        None => s.push_str("bandwidth_nm=undefined\n"),
    }
    let _ = writeln!(s, "system_gdd_fs2={:.3}", to_f64(out.system_gdd_fs2));
    if let Some((_, r)) = &out.reference {
        let w = r
            .fwhm_fs
            .map_or("undefined".to_string(), |w| format!("{:.4}", to_f64(w)));
        let _ = writeln!(s, "reference_fwhm_fs={w}");
        let ratio = out
            .width_ratio()
            .map_or("undefined".to_string(), |x| format!("{:.4}", to_f64(x)));
        let _ = writeln!(s, "width_ratio={ratio}");
    }
    s
}

fn log_text<T: Real>(out: &RunOutput<T>) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "scenario {}", out.name);
    let _ = writeln!(s, "pump_omega_rad_per_fs {:.9}", to_f64(out.pump_omega));
    if let Some((dc, uc)) = &out.crystals {
        for (label, c) in [("dc_crystal", dc), ("uc_crystal", uc)] {
            let _ = writeln!(
                s,
                "{label} poling_period_um {:.6} phasematch_temperature_C {:.4} temperature_C {:.4}",
                to_f64(c.poling_period_um),
                to_f64(c.phasematch_temperature_c),
                to_f64(c.temperature_c)
            );
        }
        let _ = writeln!(
            s,
            "radial quadrature {} intervals, nested change {:.3e}",
            out.envelope.radial_intervals, out.envelope.refinement_change
        );
    }
    let _ = writeln!(s, "omega grid {} points", out.envelope.grid.len());
    let _ = writeln!(
        s,
        "tau grid {} points, step {:.6} fs",
        out.trace.tau.len(),
        to_f64(out.trace.tau.step())
    );
    if let Some(o) = &out.optimization {
        let _ = writeln!(
            s,
            "optimized {} = {:.4}, residual gdd {:.3} fs^2, edge solution {}, local maximum {}",
            o.knob.name(),
            to_f64(o.optimal_value),
            to_f64(o.residual_gdd_fs2),
            o.edge_solution,
            out.local_maximum.unwrap_or(false)
        );
    }
    s
}

pub fn convergence_block(report: &ConvergenceReport) -> String {
    let mut s = String::new();
    for (label, steps) in [("radial", &report.radial), ("omega", &report.omega)] {
        for step in steps {
            let change = step.max_relative_change.map_or("-".to_string(), |c| format!("{c:.3e}"));
            let _ = writeln!(s, "{label} points={} max_relative_change={change}", step.points);
        }
    }
    if let Some(order) = report.observed_radial_order() {
        let _ = writeln!(s, "observed_radial_order={order:.3}");
    }
    s
}

/// Writes the selected artifacts to `dir`, returning the written paths.
pub fn write_artifacts<T: Real>(out: &RunOutput<T>, dir: &Path, which: Artifacts) -> Result<Vec<PathBuf>, Error> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut written = Vec::new();
    let name = &out.name;
    if which.spectrum {
        let p = dir.join(format!("{name}_spectrum.csv"));
        out.spectrum.write_csv(create(&p)?).map_err(|e| Error::io(&p, e))?;
        written.push(p);
    }
    if which.trace {
        let p = dir.join(format!("{name}_trace.csv"));
        out.trace.write_csv(create(&p)?).map_err(|e| Error::io(&p, e))?;
        written.push(p);
        let p = dir.join(format!("{name}_metrics.txt"));
        write_text(&p, &metrics_block(out))?;
        written.push(p);
    }
    if which.optimize {
        if let Some(o) = &out.optimization {
            let p = dir.join(format!("{name}_optimize.txt"));
            let mut text = o.to_key_values();
            let _ = writeln!(text, "local_maximum={}", out.local_maximum.unwrap_or(false));
            write_text(&p, &text)?;
            written.push(p);
            let p = dir.join(format!("{name}_scan.csv"));
            o.write_scan_csv(create(&p)?).map_err(|e| Error::io(&p, e))?;
            written.push(p);
        }
    }
    if let Some(c) = &out.convergence {
        let p = dir.join(format!("{name}_convergence.txt"));
        write_text(&p, &convergence_block(c))?;
        written.push(p);
    }
    if which.log {
        let p = dir.join(format!("{name}.log"));
        write_text(&p, &log_text(out))?;
        written.push(p);
    }
    Ok(written)
}

/// Loads, runs and writes every artifact of a scenario file.
pub fn run_scenario(path: &Path, out_dir: Option<&Path>, grid_scale: Option<f64>) -> Result<RunOutput<f64>, Error> {
    let mut scn = Scenario::load(path)?;
    if let Some(f) = grid_scale {
        scn = scn.with_grid_scale(f)?;
    }
    let out = run::<f64>(&scn)?;
    let dir = out_dir
        .map(Path::to_path_buf)
        .or_else(|| scn.output_dir.clone())
        .unwrap_or_else(|| PathBuf::from("."));
    write_artifacts(&out, &dir, Artifacts::ALL)?;
    Ok(out)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Fig3Row {
    pub case: String,
    pub fwhm_fs: Option<f64>,
    pub peak_rate: f64,
    pub rate_at_zero_delay: f64,
    pub peak_tau_fs: f64,
    pub secondary_maxima_fs: (Option<f64>, Option<f64>),
    pub peak_to_mean_80fs: f64,
    pub system_gdd_fs2: f64,
    pub width_ratio: Option<f64>,
    pub quadrature_change: Option<f64>,
    pub violations: Vec<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Fig3Summary {
    pub rows: Vec<Fig3Row>,
    /// Violations spanning several cases.
    pub ladder_violations: Vec<String>,
}

impl Fig3Summary {
    pub fn all_ok(&self) -> bool {
        self.ladder_violations.is_empty() && self.rows.iter().all(|r| r.violations.is_empty())
    }

    pub fn to_csv(&self) -> String {
        let opt = |x: Option<f64>, digits: usize| x.map_or("undefined".to_string(), |v| format!("{v:.digits$}"));
        let mut s = String::from(
            "case,fwhm_fs,peak_rate,rate_at_zero_delay,peak_tau_fs,secondary_max_minus_fs,secondary_max_plus_fs,peak_to_mean_80fs,system_gdd_fs2,width_ratio,quadrature_change,status\n",
        );
        for r in &self.rows {
            let status = if r.violations.is_empty() {
                "ok".to_string()
            } else {
                format!("VIOLATION: {}", r.violations.join("; "))
            };
            let _ = writeln!(
                s,
                "{},{},{:.6e},{:.6e},{:.2},{},{},{:.4},{:.2},{},{},{}",
                r.case,
                opt(r.fwhm_fs, 3),
                r.peak_rate,
                r.rate_at_zero_delay,
                r.peak_tau_fs,
                opt(r.secondary_maxima_fs.0, 2),
                opt(r.secondary_maxima_fs.1, 2),
                r.peak_to_mean_80fs,
                r.system_gdd_fs2,
                opt(r.width_ratio, 4),
                r.quadrature_change.map_or("-".to_string(), |c| format!("{c:.2e}")),
                status
            );
        }
        for v in &self.ladder_violations {
            let _ = writeln!(s, "# VIOLATION: {v}");
        }
        s
    }
}

fn within(x: f64, target: f64, rel: f64) -> bool {
    (x / target - 1.0).abs() <= rel
}

fn case_checks(case: &str, out: &RunOutput<f64>) -> Vec<String> {
    let mut v = Vec::new();
    let m = &out.metrics;
    let width = |target: f64, v: &mut Vec<String>| match m.fwhm_fs {
        Some(w) if within(w, target, 0.10) => {}
        Some(w) => v.push(format!("fwhm {w:.2} fs outside {target} fs +-10%")),
        None => v.push("fwhm undefined".into()),
    };
    match case {
        "fig3a" => {
            width(25.0, &mut v);
            match m.nearest_secondary_maxima() {
                (Some(l), Some(r)) if within(-l, 42.0, 0.10) && within(r, 42.0, 0.10) => {}
                other => v.push(format!("secondary maxima {other:?} not at +-42 fs +-10%")),
            }
            if let Some(o) = &out.optimization {
                let g = o.residual_gdd_fs2;
                if !(10.0..=50.0).contains(&g) {
                    v.push(format!("residual gdd {g:.1} fs^2 outside [10, 50]"));
                }
                if o.edge_solution {
                    v.push("optimum on bracket edge".into());
                }
            }
            if out.local_maximum == Some(false) {
                v.push("local maximum certificate failed".into());
            }
        }
        "fig3b_99" => width(26.0, &mut v),
        "fig3b_198" => width(30.9, &mut v),
        "fig3d_3790" => {
            let f = out.peak_to_mean();
            if !(f < 1.5) {
                v.push(format!("peak/mean {f:.2} over +-80 fs not below 1.5"));
            }
        }
        "gauss_vmask" => match out.width_ratio() {
            Some(r) if within(r, 1.7, 0.05) => {}
            other => v.push(format!("width ratio {other:?} not 1.7 +-5%")),
        },
        _ => {}
    }
    if let Some(c) = &out.convergence {
        if !(c.final_radial_change() < 1e-3 && c.final_omega_change() < 1e-3) {
            v.push(format!(
                "refinement change radial {:.2e} omega {:.2e} not below 1e-3",
                c.final_radial_change(),
                c.final_omega_change()
            ));
        }
    }
    v
}

pub const FIG3_LADDER: &[&str] = &["fig3a", "fig3b_99", "fig3b_198", "fig3c_513", "fig3d_3790"];

/// Runs the dispersion ladder plus the V-mask comparison, writing every
/// case's artifacts and `fig3_summary.csv` to `out_dir`.
pub fn reproduce_fig3(
    out_dir: Option<&Path>,
    grid_scale: Option<f64>,
    refine_levels: usize,
) -> Result<Fig3Summary, Error> {
    let mut rows = Vec::new();
    for case in FIG3_LADDER.iter().chain(std::iter::once(&"gauss_vmask")) {
        let wrap = |e: Error| Error::Case {
            case: case.to_string(),
            source: Box::new(e),
        };
        let mut scn = bundled_scenario(case).expect("bundled");
        if let Some(f) = grid_scale {
            scn = scn.with_grid_scale(f).map_err(|e| wrap(e.into()))?;
        }
        if matches!(scn.source, SourceConfig::Spdc { .. }) {
            scn.grid.refine_levels = refine_levels;
        }
        let out = run::<f64>(&scn).map_err(wrap)?;
        if let Some(dir) = out_dir {
            write_artifacts(&out, dir, Artifacts::ALL).map_err(wrap)?;
        }
        rows.push(Fig3Row {
            case: case.to_string(),
            fwhm_fs: out.metrics.fwhm_fs,
            peak_rate: out.metrics.peak_rate,
            rate_at_zero_delay: out.trace.rate_at_zero(),
            peak_tau_fs: out.metrics.peak_tau_fs,
            secondary_maxima_fs: out.metrics.nearest_secondary_maxima(),
            peak_to_mean_80fs: out.peak_to_mean(),
            system_gdd_fs2: out.system_gdd_fs2,
            width_ratio: out.width_ratio(),
            quadrature_change: out
                .convergence
                .as_ref()
                .map(|c| c.final_radial_change().max(c.final_omega_change())),
            violations: case_checks(case, &out),
        });
    }

    let mut ladder_violations = Vec::new();
    let ladder = &rows[..FIG3_LADDER.len()];
    for pair in ladder.windows(2) {
        if !(pair[1].rate_at_zero_delay < pair[0].rate_at_zero_delay) {
            ladder_violations.push(format!(
                "R(0) does not decrease from {} to {}",
                pair[0].case, pair[1].case
            ));
        }
        let w0 = pair[0].fwhm_fs.unwrap_or(f64::INFINITY);
        let w1 = pair[1].fwhm_fs.unwrap_or(f64::INFINITY);
        if w1 < w0 {
            ladder_violations.push(format!("width shrinks from {} to {}", pair[0].case, pair[1].case));
        }
    }
    let summary = Fig3Summary {
        rows,
        ladder_violations,
    };
    if let Some(dir) = out_dir {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let p = dir.join("fig3_summary.csv");
        write_text(&p, &summary.to_csv())?;
    }
    Ok(summary)
}
