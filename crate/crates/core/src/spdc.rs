//! Spectral amplitude of the pairs that upconvert.
//!
//! For every signal frequency the amplitude is a transverse-wavevector
//! integral of the product of the two crystals' phasematching functions,
//! restricted by the pupil. Because the mismatch depends on `k⊥` only
//! through its magnitude, the 2-D integral reduces to `2π∫k dk`. Signal
//! and idler spectral phases do not depend on `k⊥` and multiply the
//! result afterwards, so the transverse integral (the [`PairEnvelope`]) is
//! computed once per geometry and reused for every dispersion setting.

use std::io::Write;

use num_complex::Complex;
use rayon::prelude::*;

use crate::grid::UniformGrid;
use crate::materials::{MaterialError, SpectralPhase};
use crate::phasematch::{k_perp_from_external_angle, phasematch_factor, CrystalSpec, PhaseMatchError};
use crate::quadrature::simpson_nested;
use crate::scalar::{lit, omega_to_wavelength_nm, to_f64, Real};

/// Largest external half-angle a pupil may have, rad.
pub const MAX_PUPIL_ANGLE: f64 = 0.1;
/// Relative disagreement allowed between successive radial refinements.
pub const DEFAULT_QUADRATURE_TOLERANCE: f64 = 1e-3;
pub const DEFAULT_RADIAL_INTERVALS: usize = 256;
pub const DEFAULT_OMEGA_POINTS: usize = 2048;
/// Half-width of the default signal-frequency grid around `ω_p/2`, rad/fs.
pub const DEFAULT_OMEGA_HALF_SPAN: f64 = 0.55;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SpdcError {
    #[error(transparent)]
    PhaseMatch(#[from] PhaseMatchError),
    #[error(transparent)]
    Material(#[from] MaterialError),
    #[error("invalid pupil: {0}")]
    Pupil(String),
    #[error("invalid spectral grid: {0}")]
    Grid(String),
    #[error(
        "radial quadrature not converged with {radial_intervals} intervals: refinement changed S by {achieved:.3e} of peak (tolerance {tolerance:.1e})"
    )]
    Convergence {
        radial_intervals: usize,
        achieved: f64,
        tolerance: f64,
    },
}

/// Annular acceptance cone, external half-angles in rad.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PupilSpec<T> {
    pub theta_min_ext: T,
    pub theta_max_ext: T,
}

impl<T: Real> PupilSpec<T> {
    pub fn new(theta_min_ext: T, theta_max_ext: T) -> Result<Self, SpdcError> {
        if !(theta_min_ext >= T::zero() && theta_min_ext < theta_max_ext && theta_max_ext <= lit(MAX_PUPIL_ANGLE)) {
            return Err(SpdcError::Pupil(format!(
                "need 0 <= theta_min < theta_max <= {MAX_PUPIL_ANGLE} rad, got [{}, {}]",
                to_f64(theta_min_ext),
                to_f64(theta_max_ext)
            )));
        }
        Ok(Self {
            theta_min_ext,
            theta_max_ext,
        })
    }

    /// Cone of half-angle `theta_max_ext`, optionally with the central
    /// strip lost in a gap of `gap_mm` between the delay mirrors after a
    /// collimating lens of focal length `focal_mm`.
    pub fn cone_with_gap(theta_max_ext: T, gap_mm: Option<(T, T)>) -> Result<Self, SpdcError> {
        let inner = match gap_mm {
            Some((gap, focal)) => (gap / lit(2.0)) / focal,
            None => T::zero(),
        };
        Self::new(inner, theta_max_ext)
    }

    /// Transverse wavevectors accepted for both photons of a pair.
    pub fn k_perp_range(&self, omega_s: T, omega_i: T) -> Option<(T, T)> {
        let lo = k_perp_from_external_angle(omega_s, self.theta_min_ext)
            .max(k_perp_from_external_angle(omega_i, self.theta_min_ext));
        let hi = k_perp_from_external_angle(omega_s, self.theta_max_ext)
            .min(k_perp_from_external_angle(omega_i, self.theta_max_ext));
        (hi > lo).then_some((lo, hi))
    }
}

/// How the upconversion crystal's phasematching function enters the pair
/// amplitude.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum UpconversionAmplitude {
    /// `Φ_DC(β₁)·Φ_UC(β₂) = sinc β₁ sinc β₂ e^{i(β₁−β₂)}`; real for identical crystals.
    #[default]
    Direct,
    /// `Φ_DC(β₁)·Φ_UC*(β₂) = sinc β₁ sinc β₂ e^{i(β₁+β₂)}`, i.e. `e^{iΔk_z L}` for identical crystals.
    Conjugated,
}

/// Downconversion and upconversion crystals, pupil and pump.
#[derive(Debug, Clone, PartialEq)]
pub struct PairSource<T> {
    pub downconversion: CrystalSpec<T>,
    pub upconversion: CrystalSpec<T>,
    pub pupil: PupilSpec<T>,
    pub pump_omega: T,
    pub amplitude: UpconversionAmplitude,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureSpec {
    /// Simpson panels of the coarse estimate; the returned value uses twice as many.
    pub radial_intervals: usize,
    pub tolerance: f64,
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        Self {
            radial_intervals: DEFAULT_RADIAL_INTERVALS,
            tolerance: DEFAULT_QUADRATURE_TOLERANCE,
        }
    }
}

/// Default signal grid: 2048 samples over `ω_p/2 ± 0.55 rad/fs`.
pub fn default_grid<T: Real>(pump_omega: T) -> UniformGrid<T> {
    UniformGrid::centered(
        pump_omega / lit(2.0),
        lit(DEFAULT_OMEGA_HALF_SPAN),
        DEFAULT_OMEGA_POINTS,
    )
    .expect("default grid is valid")
}

/// Transverse integral of the pair amplitude, before spectral phases.
#[derive(Debug, Clone, PartialEq)]
pub struct PairEnvelope<T> {
    pub grid: UniformGrid<T>,
    pub pump_omega: T,
    pub values: Vec<Complex<T>>,
    /// Max change between the two nested radial estimates, relative to peak.
    pub refinement_change: f64,
    pub radial_intervals: usize,
}

/// Complex `S(ω_s)` on a uniform grid centred on `ω_p/2`.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralAmplitude<T> {
    pub grid: UniformGrid<T>,
    pub pump_omega: T,
    pub values: Vec<Complex<T>>,
}

fn check_grid<T: Real>(grid: &UniformGrid<T>, pump_omega: T) -> Result<(), SpdcError> {
    let center = pump_omega / lit(2.0);
    if !grid.is_symmetric_about(center) {
        return Err(SpdcError::Grid(format!(
            "grid [{}, {}] is not centred on the degenerate frequency {}",
            to_f64(grid.start()),
            to_f64(grid.end()),
            to_f64(center)
        )));
    }
    if !(grid.start() > T::zero()) {
        return Err(SpdcError::Grid("grid reaches non-positive frequencies".into()));
    }
    Ok(())
}

/// Integrand samples and their spacing.
type RadialSamples<T> = (Vec<Complex<T>>, T);

impl<T: Real> PairSource<T> {
    /// Radial integrand `2π·k·Φ_DC·Φ_UC` on `2n + 1` nodes for one signal
    /// frequency, plus the node spacing.
    fn radial_samples(&self, omega_s: T, intervals: usize) -> Result<Option<RadialSamples<T>>, SpdcError> {
        let omega_i = self.pump_omega - omega_s;
        let Some((lo, hi)) = self.pupil.k_perp_range(omega_s, omega_i) else {
            return Ok(None);
        };
        let dc = self.downconversion.pair_wavenumbers(omega_s, self.pump_omega)?;
        let uc = self.upconversion.pair_wavenumbers(omega_s, self.pump_omega)?;
        let len_dc = self.downconversion.length_mm;
        let len_uc = self.upconversion.length_mm;
        let h = (hi - lo) / lit(intervals as f64);
        let two_pi = T::TAU();
        let values = (0..=intervals)
            .map(|j| {
                let k = lo + h * lit(j as f64);
                let generated = phasematch_factor(dc.delta_kz(k), len_dc).conj();
                let detected = phasematch_factor(uc.delta_kz(k), len_uc);
                let detected = match self.amplitude {
                    UpconversionAmplitude::Direct => detected,
                    UpconversionAmplitude::Conjugated => detected.conj(),
                };
                generated * detected * (two_pi * k)
            })
            .collect();
        Ok(Some((values, h)))
    }

    /// Integrand magnitude without the `2πk` measure, for diagnostics.
    pub fn phasematch_product(&self, omega_s: T, k_perp: T) -> Result<Complex<T>, SpdcError> {
        let dc = self.downconversion.pair_wavenumbers(omega_s, self.pump_omega)?;
        let uc = self.upconversion.pair_wavenumbers(omega_s, self.pump_omega)?;
        let generated = phasematch_factor(dc.delta_kz(k_perp), self.downconversion.length_mm).conj();
        let detected = phasematch_factor(uc.delta_kz(k_perp), self.upconversion.length_mm);
        Ok(match self.amplitude {
            UpconversionAmplitude::Direct => generated * detected,
            UpconversionAmplitude::Conjugated => generated * detected.conj(),
        })
    }
}

fn envelope_unchecked<T: Real>(
    source: &PairSource<T>,
    grid: &UniformGrid<T>,
    radial_intervals: usize,
) -> Result<PairEnvelope<T>, SpdcError> {
    check_grid(grid, source.pump_omega)?;
    source.downconversion.validate()?;
    source.upconversion.validate()?;
    if radial_intervals < 2 || !radial_intervals.is_multiple_of(2) {
        return Err(SpdcError::Grid(format!(
            "radial_intervals must be even and >= 2, got {radial_intervals}"
        )));
    }
    let pairs: Vec<(Complex<T>, Complex<T>)> = (0..grid.len())
        .into_par_iter()
        .map(|i| {
            Ok(match source.radial_samples(grid.at(i), 2 * radial_intervals)? {
                None => (Complex::new(T::zero(), T::zero()), Complex::new(T::zero(), T::zero())),
                Some((samples, h)) => simpson_nested(&samples, h),
            })
        })
        .collect::<Result<_, SpdcError>>()?;
    let peak = pairs.iter().map(|(f, _)| to_f64(f.norm())).fold(0.0, f64::max);
    let change = pairs.iter().map(|(f, c)| to_f64((*f - *c).norm())).fold(0.0, f64::max);
    Ok(PairEnvelope {
        grid: *grid,
        pump_omega: source.pump_omega,
        values: pairs.into_iter().map(|(f, _)| f).collect(),
        refinement_change: if peak > 0.0 { change / peak } else { 0.0 },
        radial_intervals,
    })
}

/// Transverse integral for every grid frequency; fails when halving the
/// radial resolution moves any sample by more than `quad.tolerance` of peak.
pub fn compute_envelope<T: Real>(
    source: &PairSource<T>,
    grid: &UniformGrid<T>,
    quad: &QuadratureSpec,
) -> Result<PairEnvelope<T>, SpdcError> {
    let env = envelope_unchecked(source, grid, quad.radial_intervals)?;
    if !(env.refinement_change <= quad.tolerance) {
        return Err(SpdcError::Convergence {
            radial_intervals: quad.radial_intervals,
            achieved: env.refinement_change,
            tolerance: quad.tolerance,
        });
    }
    Ok(env)
}

impl<T: Real> PairEnvelope<T> {
    /// Multiplies in `e^{i[φ_s(ω_s) + φ_i(ω_p − ω_s)]}`. Both phases live on
    /// the envelope grid; the grid's mirror symmetry puts `ω_p − ω_j` on
    /// sample `N − 1 − j`.
    pub fn with_phases(
        &self,
        signal: &SpectralPhase<T>,
        idler: &SpectralPhase<T>,
    ) -> Result<SpectralAmplitude<T>, SpdcError> {
        if signal.omega != self.grid || idler.omega != self.grid {
            return Err(SpdcError::Grid(
                "spectral phase grid differs from the amplitude grid".into(),
            ));
        }
        let n = self.grid.len();
        let values = self
            .values
            .iter()
            .enumerate()
            .map(|(j, v)| *v * Complex::from_polar(T::one(), signal.phase[j] + idler.phase[n - 1 - j]))
            .collect();
        Ok(SpectralAmplitude {
            grid: self.grid,
            pump_omega: self.pump_omega,
            values,
        })
    }

    pub fn without_phase(&self) -> SpectralAmplitude<T> {
        SpectralAmplitude {
            grid: self.grid,
            pump_omega: self.pump_omega,
            values: self.values.clone(),
        }
    }
}

/// `S(ω_s)` including signal and idler spectral phases.
pub fn compute_spectral_amplitude<T: Real>(
    source: &PairSource<T>,
    grid: &UniformGrid<T>,
    quad: &QuadratureSpec,
    signal_phase: &SpectralPhase<T>,
    idler_phase: &SpectralPhase<T>,
) -> Result<SpectralAmplitude<T>, SpdcError> {
    compute_envelope(source, grid, quad)?.with_phases(signal_phase, idler_phase)
}

/// Test spectrum `S = exp(−(ω − ω₀)²/(4σ²))`, so `|S|²` is a Gaussian of
/// standard deviation `sigma`.
pub fn gaussian_spectrum<T: Real>(grid: &UniformGrid<T>, pump_omega: T, sigma: T) -> SpectralAmplitude<T> {
    let center = pump_omega / lit(2.0);
    let values = grid
        .iter()
        .map(|w| {
            let d = w - center;
            Complex::new((-(d * d) / (lit::<T>(4.0) * sigma * sigma)).exp(), T::zero())
        })
        .collect();
    SpectralAmplitude {
        grid: *grid,
        pump_omega,
        values,
    }
}

impl<T: Real> SpectralAmplitude<T> {
    pub fn degenerate_omega(&self) -> T {
        self.pump_omega / lit(2.0)
    }

    pub fn power(&self) -> Vec<T> {
        self.values.iter().map(|v| v.norm_sqr()).collect()
    }

    pub fn peak_magnitude(&self) -> T {
        self.values.iter().map(|v| v.norm()).fold(T::zero(), T::max)
    }

    /// Larger of the two edge magnitudes relative to the peak.
    pub fn edge_ratio(&self) -> T {
        let peak = self.peak_magnitude();
        if peak == T::zero() {
            return T::zero();
        }
        let n = self.values.len();
        self.values[0].norm().max(self.values[n - 1].norm()) / peak
    }

    /// Width (rad/fs) of the frequency span where `|S|` exceeds `1e-3` of peak.
    pub fn occupied_band(&self) -> T {
        let peak = self.peak_magnitude();
        let thresh = peak * lit(1e-3);
        let idx: Vec<usize> = (0..self.values.len())
            .filter(|&i| self.values[i].norm() > thresh)
            .collect();
        match (idx.first(), idx.last()) {
            (Some(&a), Some(&b)) => self.grid.step() * lit((b - a + 1) as f64),
            _ => T::zero(),
        }
    }

    pub fn validate(&self) -> Result<(), SpdcError> {
        check_grid(&self.grid, self.pump_omega)?;
        if self.values.len() != self.grid.len() {
            return Err(SpdcError::Grid("value count differs from grid length".into()));
        }
        if !self.values.iter().all(|v| v.re.is_finite() && v.im.is_finite()) {
            return Err(SpdcError::Grid("non-finite spectral amplitude".into()));
        }
        if self.edge_ratio() >= lit(1e-3) {
            return Err(SpdcError::Grid(format!(
                "spectrum not contained in grid: edge magnitude {:.3e} of peak",
                to_f64(self.edge_ratio())
            )));
        }
        Ok(())
    }

    /// FWHM of `|S|²` expressed in vacuum wavelength (nm). Crossings are
    /// interpolated linearly in frequency. `None` when the half-maximum is
    /// not crossed on both sides of the peak.
    pub fn bandwidth_nm(&self) -> Option<T> {
        let p = self.power();
        let (lo, hi) = half_max_crossings(&p)?;
        let at = |x: T| self.grid.start() + self.grid.step() * x;
        Some((omega_to_wavelength_nm(at(lo)) - omega_to_wavelength_nm(at(hi))).abs())
    }

    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "omega_rad_per_fs,wavelength_nm,re_S,im_S,abs2_S")?;
        for (w, v) in self.grid.iter().zip(&self.values) {
            writeln!(
                out,
                "{},{},{},{},{}",
                to_f64(w),
                to_f64(omega_to_wavelength_nm(w)),
                to_f64(v.re),
                to_f64(v.im),
                to_f64(v.norm_sqr())
            )?;
        }
        Ok(())
    }
}

/// Fractional sample positions where `y` falls to half its maximum on each
/// side of the global peak.
pub(crate) fn half_max_crossings<T: Real>(y: &[T]) -> Option<(T, T)> {
    let (imax, &peak) = y
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.partial_cmp(b.1).unwrap_or(std::cmp::Ordering::Equal))?;
    if !(peak > T::zero()) {
        return None;
    }
    let half = peak / lit(2.0);
    let mut l = imax;
    while l > 0 && y[l] > half {
        l -= 1;
    }
    if y[l] > half {
        return None;
    }
    let mut r = imax;
    while r + 1 < y.len() && y[r] > half {
        r += 1;
    }
    if y[r] > half {
        return None;
    }
    // linear interpolation on the bracketing samples
    let left = lit::<T>(l as f64) + (half - y[l]) / (y[l + 1] - y[l]);
    let right = lit::<T>((r - 1) as f64) + (y[r - 1] - half) / (y[r - 1] - y[r]);
    Some((left, right))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RefinementStep {
    pub points: usize,
    /// Max change from the previous level, relative to the peak; `None` on the first level.
    pub max_relative_change: Option<f64>,
}

/// Refinement ladder for the radial quadrature and the frequency grid.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceReport {
    pub radial: Vec<RefinementStep>,
    /// Frequency-grid ladder, measured on the delay-domain amplitude
    /// `Σ S(ω) e^{−iωτ} Δω` over ±150 fs (S itself is sampled exactly per node).
    pub omega: Vec<RefinementStep>,
}

impl ConvergenceReport {
    pub fn final_radial_change(&self) -> f64 {
        self.radial
            .last()
            .and_then(|s| s.max_relative_change)
            .unwrap_or(f64::NAN)
    }

    pub fn final_omega_change(&self) -> f64 {
        self.omega
            .last()
            .and_then(|s| s.max_relative_change)
            .unwrap_or(f64::NAN)
    }

    /// `log₂` of the ratio of the last two radial changes.
    pub fn observed_radial_order(&self) -> Option<f64> {
        let c: Vec<f64> = self.radial.iter().filter_map(|s| s.max_relative_change).collect();
        if c.len() < 2 {
            return None;
        }
        let (a, b) = (c[c.len() - 2], c[c.len() - 1]);
        (a > 0.0 && b > 0.0).then(|| (a / b).log2())
    }

    pub fn converged(&self, tolerance: f64) -> bool {
        self.final_radial_change() < tolerance && self.final_omega_change() < tolerance
    }
}

fn max_rel_change<T: Real>(new: &[Complex<T>], old: &[Complex<T>], stride: usize) -> f64 {
    let peak = new.iter().map(|v| to_f64(v.norm())).fold(0.0, f64::max);
    let diff = old
        .iter()
        .enumerate()
        .map(|(i, o)| to_f64((new[i * stride] - *o).norm()))
        .fold(0.0, f64::max);
    if peak > 0.0 {
        diff / peak
    } else {
        0.0
    }
}

fn delay_amplitude<T: Real>(s: &SpectralAmplitude<T>, taus: &[T]) -> Vec<Complex<T>> {
    taus.par_iter()
        .map(|&tau| {
            let mut acc = Complex::new(T::zero(), T::zero());
            for (w, v) in s.grid.iter().zip(&s.values) {
                acc = acc + *v * Complex::from_polar(T::one(), -w * tau);
            }
            acc * s.grid.step()
        })
        .collect()
}

/// Doubles the radial panel count and, separately, the frequency sampling
/// `levels` times, reporting the change per doubling. `phases` supplies the
/// signal/idler spectral phase for any grid.
pub fn quadrature_refine<T: Real>(
    source: &PairSource<T>,
    grid: &UniformGrid<T>,
    quad: &QuadratureSpec,
    levels: usize,
    phases: impl Fn(&UniformGrid<T>) -> Result<(SpectralPhase<T>, SpectralPhase<T>), SpdcError>,
) -> Result<ConvergenceReport, SpdcError> {
    let levels = levels.max(2);
    let mut radial = Vec::with_capacity(levels);
    let mut prev: Option<Vec<Complex<T>>> = None;
    for l in 0..levels {
        let n = quad.radial_intervals << l;
        let env = envelope_unchecked(source, grid, n)?;
        let change = prev.as_ref().map(|p| max_rel_change(&env.values, p, 1));
        radial.push(RefinementStep {
            points: 2 * n + 1,
            max_relative_change: change,
        });
        prev = Some(env.values);
    }

    let taus: Vec<T> = (-150..=150).map(|t| lit(t as f64)).collect();
    let mut omega = Vec::with_capacity(levels);
    let mut prev: Option<Vec<Complex<T>>> = None;
    for l in 0..levels {
        let g = grid.refined(1 << l);
        let env = envelope_unchecked(source, &g, quad.radial_intervals)?;
        let (ps, pi) = phases(&g)?;
        let s = env.with_phases(&ps, &pi)?;
        let a = delay_amplitude(&s, &taus);
        let change = prev.as_ref().map(|p| max_rel_change(&a, p, 1));
        omega.push(RefinementStep {
            points: g.len(),
            max_relative_change: change,
        });
        prev = Some(a);
    }
    Ok(ConvergenceReport { radial, omega })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::materials::MaterialLibrary;
    use crate::phasematch::solve_poling_period;
    use crate::scalar::wavelength_nm_to_omega;

    fn source(inner_gap: bool) -> PairSource<f64> {
        let ln = MaterialLibrary::bundled().get("mgo_ln").unwrap();
        let wp = wavelength_nm_to_omega(532.0);
        let template = CrystalSpec::new(ln, 5.0, 7.0, 50.0).unwrap();
        let period = solve_poling_period(&template, wp, 50.0).unwrap();
        let crystal = template.with_poling_period(period).with_temperature(48.5);
        let gap = inner_gap.then_some((1.5, 75.0));
        PairSource {
            downconversion: crystal.clone(),
            upconversion: crystal,
            pupil: PupilSpec::cone_with_gap(2.0_f64.to_radians(), gap).unwrap(),
            pump_omega: wp,
            amplitude: UpconversionAmplitude::Direct,
        }
    }

    #[test]
    fn pupil_validation() {
        assert!(PupilSpec::new(0.0, 0.05).is_ok());
        assert!(PupilSpec::new(0.05, 0.05).is_err());
        assert!(PupilSpec::new(-0.01, 0.05).is_err());
        assert!(PupilSpec::new(0.0, 0.2).is_err());
        let p = PupilSpec::cone_with_gap(0.0349_f64, Some((1.5, 75.0))).unwrap();
        assert!((p.theta_min_ext - 0.01).abs() < 1e-15);
    }

    #[test]
    fn pupil_range_is_symmetric_in_signal_and_idler() {
        let p = PupilSpec::new(0.01_f64, 0.03).unwrap();
        assert_eq!(p.k_perp_range(1.6, 1.9), p.k_perp_range(1.9, 1.6));
        // limited by the lower frequency on the outside, the higher on the inside
        let (lo, hi) = p.k_perp_range(1.6, 1.9).unwrap();
        assert!((lo - k_perp_from_external_angle(1.9, 0.01)).abs() < 1e-15);
        assert!((hi - k_perp_from_external_angle(1.6, 0.03)).abs() < 1e-15);
    }

    #[test]
    fn envelope_is_mirror_symmetric() {
        let s = source(false);
        let grid = UniformGrid::centered(s.pump_omega / 2.0, 0.55, 512).unwrap();
        let env = compute_envelope(&s, &grid, &QuadratureSpec::default()).unwrap();
        let n = grid.len();
        let peak = env.values.iter().map(|v| v.norm()).fold(0.0, f64::max);
        for j in 0..n / 2 {
            let a = env.values[j].norm();
            let b = env.values[n - 1 - j].norm();
            assert!((a - b).abs() <= 1e-9 * peak, "{j}: {a} vs {b}");
        }
    }

    #[test]
    fn pure_phases_leave_magnitude_untouched() {
        let s = source(false);
        let grid = UniformGrid::centered(s.pump_omega / 2.0, 0.55, 256).unwrap();
        let env = compute_envelope(&s, &grid, &QuadratureSpec::default()).unwrap();
        let w0 = grid.center();
        let ps = SpectralPhase::from_fn(grid, |w| 300.0 * (w - w0).powi(2) + 40.0 * (w - w0).powi(3) + 5.0);
        let pi = SpectralPhase::from_fn(grid, |w| (7.0 * w).sin() * 20.0);
        let plain = env.without_phase();
        let phased = env.with_phases(&ps, &pi).unwrap();
        for (a, b) in plain.values.iter().zip(&phased.values) {
            assert!((a.norm() - b.norm()).abs() <= 1e-12 * a.norm().max(1e-300));
        }
    }

    #[test]
    fn radial_reduction_matches_cartesian_brute_force() {
        let s = source(false);
        let w0 = s.pump_omega / 2.0;
        let grid = UniformGrid::centered(w0, 0.2, 5).unwrap();
        let env = compute_envelope(&s, &grid, &QuadratureSpec::default()).unwrap();
        let m = 1200;
        for (i, ws) in grid.iter().enumerate() {
            let wi = s.pump_omega - ws;
            let (lo, hi) = s.pupil.k_perp_range(ws, wi).unwrap();
            let h = hi / m as f64;
            let mut acc = Complex::new(0.0, 0.0);
            for a in 0..m {
                for b in 0..m {
                    let k = h * ((a as f64 + 0.5).powi(2) + (b as f64 + 0.5).powi(2)).sqrt();
                    if k >= lo && k <= hi {
                        acc += s.phasematch_product(ws, k).unwrap();
                    }
                }
            }
            let brute = acc * (4.0 * h * h);
            let rel = (brute - env.values[i]).norm() / env.values[i].norm();
            assert!(rel < 5e-3, "omega {ws}: {rel}");
        }
    }

    #[test]
    fn integrand_peaks_at_unity_on_phasematched_ring() {
        let s = source(false);
        let w0 = s.pump_omega / 2.0;
        let wn = s.downconversion.pair_wavenumbers(w0, s.pump_omega).unwrap();
        // operating point is below the axial phasematching temperature, so a ring exists
        let axial = wn.delta_kz(0.0);
        assert!(axial < 0.0);
        let (mut a, mut b) = (0.0, 1.0);
        for _ in 0..200 {
            let m = 0.5 * (a + b);
            if wn.delta_kz(m) < 0.0 {
                a = m
            } else {
                b = m
            }
        }
        let ring = 0.5 * (a + b);
        let z = s.phasematch_product(w0, ring).unwrap();
        assert!((z.norm() - 1.0).abs() < 1e-12);
        for k in [0.0, 0.5 * ring, 1.5 * ring] {
            assert!(s.phasematch_product(w0, k).unwrap().norm() < 1.0);
        }
    }

    #[test]
    fn coarse_radial_grid_is_rejected() {
        let s = source(false);
        let grid = default_grid(s.pump_omega);
        let err = compute_envelope(
            &s,
            &grid,
            &QuadratureSpec {
                radial_intervals: 16,
                tolerance: 1e-3,
            },
        )
        .unwrap_err();
        assert!(matches!(err, SpdcError::Convergence { .. }), "{err}");
    }

    #[test]
    fn off_center_grid_is_rejected() {
        let s = source(false);
        let grid = UniformGrid::centered(s.pump_omega / 2.0 + 0.01, 0.5, 64).unwrap();
        assert!(matches!(
            compute_envelope(&s, &grid, &QuadratureSpec::default()),
            Err(SpdcError::Grid(_))
        ));
    }

    #[test]
    fn phase_grid_mismatch_is_rejected() {
        let s = source(false);
        let grid = UniformGrid::centered(s.pump_omega / 2.0, 0.5, 64).unwrap();
        let env = compute_envelope(&s, &grid, &QuadratureSpec::default()).unwrap();
        let other = UniformGrid::centered(s.pump_omega / 2.0, 0.5, 65).unwrap();
        let p = SpectralPhase::zeros(other);
        assert!(env.with_phases(&p, &p).is_err());
    }

    #[test]
    fn gaussian_bandwidth_in_wavelength() {
        let wp = wavelength_nm_to_omega(532.0);
        let grid = UniformGrid::centered(wp / 2.0, 0.55, 4001).unwrap();
        let sigma = 0.02;
        let s = gaussian_spectrum(&grid, wp, sigma);
        let fwhm_omega = 2.0 * (2.0 * 2f64.ln()).sqrt() * sigma;
        let lo = omega_to_wavelength_nm(wp / 2.0 + fwhm_omega / 2.0);
        let hi = omega_to_wavelength_nm(wp / 2.0 - fwhm_omega / 2.0);
        let bw = s.bandwidth_nm().unwrap();
        assert!((bw - (hi - lo)).abs() < 0.05, "{bw} vs {}", hi - lo);
        assert!(s.validate().is_ok());
    }

    #[test]
    fn csv_dump_columns() {
        let wp = 3.54;
        let grid = UniformGrid::centered(wp / 2.0, 0.5, 5).unwrap();
        let s = gaussian_spectrum(&grid, wp, 0.05);
        let mut buf = Vec::new();
        s.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next().unwrap(), "omega_rad_per_fs,wavelength_nm,re_S,im_S,abs2_S");
        assert_eq!(lines.count(), 5);
    }
}
