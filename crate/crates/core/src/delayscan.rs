//! Upconversion rate versus signal/idler delay.

use std::io::Write;

use num_complex::Complex;
use rayon::prelude::*;
use rustfft::FftPlanner;

use crate::grid::UniformGrid;
use crate::scalar::{lit, to_f64, Real};
use crate::spdc::{half_max_crossings, SpdcError, SpectralAmplitude};

pub const DEFAULT_TAU_HALF_SPAN_FS: f64 = 150.0;
pub const DEFAULT_TAU_STEP_FS: f64 = 0.1;
/// Largest delay step a trace may have, fs.
pub const MAX_TAU_STEP_FS: f64 = 0.5;
/// Extrema below this fraction of the peak are round-off and ignored.
pub const EXTREMUM_FLOOR: f64 = 1e-12;
/// Minimum zero-padding factor of the transform.
pub const MIN_PADDING: usize = 8;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum DelayScanError {
    #[error(transparent)]
    Spectrum(#[from] SpdcError),
    #[error(
        "delay step {step_fs} fs undersamples a spectrum {band_rad_per_fs:.4} rad/fs wide (need <= {limit_fs:.4} fs)"
    )]
    Sampling {
        step_fs: f64,
        band_rad_per_fs: f64,
        limit_fs: f64,
    },
    #[error("invalid delay grid: {0}")]
    Tau(String),
}

/// How the delay enters the pair amplitude.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum DelayKernel {
    /// `e^{−iω_s τ}`: the signal photon is delayed by τ.
    #[default]
    SignalDelay,
    /// `e^{−i|ω_s − ω_p/2|τ}`: a V-shaped spectral phase mask.
    VMask,
}

impl DelayKernel {
    pub fn name(&self) -> &'static str {
        match self {
            DelayKernel::SignalDelay => "signal_delay",
            DelayKernel::VMask => "v_mask",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TauSpec<T> {
    /// Symmetric window `±half_span_fs` sampled no coarser than `step_fs`.
    Window { half_span_fs: T, step_fs: T },
    /// One full period `2π/Δω` of the discrete transform.
    FullPeriod { step_fs: T },
}

impl<T: Real> Default for TauSpec<T> {
    fn default() -> Self {
        TauSpec::Window {
            half_span_fs: lit(DEFAULT_TAU_HALF_SPAN_FS),
            step_fs: lit(DEFAULT_TAU_STEP_FS),
        }
    }
}

impl<T: Real> TauSpec<T> {
    pub fn step_fs(&self) -> T {
        match *self {
            TauSpec::Window { step_fs, .. } | TauSpec::FullPeriod { step_fs } => step_fs,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct UpconversionTrace<T> {
    pub tau: UniformGrid<T>,
    pub rate: Vec<T>,
    pub kernel: DelayKernel,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TraceMetrics<T> {
    pub peak_rate: T,
    pub peak_tau_fs: T,
    /// `None` when the half maximum is not crossed on both sides.
    pub fwhm_fs: Option<T>,
    pub secondary_maxima_fs: Vec<T>,
    pub minima_fs: Vec<T>,
    pub integral: T,
}

/// Odd transform length: at least `MIN_PADDING·N`, fine enough for `step`.
fn transform_len<T: Real>(n: usize, d_omega: T, step: T) -> usize {
    let needed = to_f64(T::TAU() / (d_omega * step)).ceil() as usize;
    let m = needed.max(MIN_PADDING * n);
    m | 1
}

fn delay_grid<T: Real>(spec: &TauSpec<T>, m: usize, d_tau: T) -> Result<(UniformGrid<T>, usize), DelayScanError> {
    let half = (m - 1) / 2;
    let k = match *spec {
        TauSpec::FullPeriod { .. } => half,
        TauSpec::Window { half_span_fs, .. } => {
            if !(half_span_fs > T::zero()) {
                return Err(DelayScanError::Tau(format!(
                    "half span must be positive, got {}",
                    to_f64(half_span_fs)
                )));
            }
            let k = to_f64(half_span_fs / d_tau).floor() as usize;
            if k > half {
                return Err(DelayScanError::Tau(format!(
                    "half span {} fs exceeds the transform period",
                    to_f64(half_span_fs)
                )));
            }
            k
        }
    };
    let grid =
        UniformGrid::new(-d_tau * lit(k as f64), d_tau, 2 * k + 1).map_err(|e| DelayScanError::Tau(e.to_string()))?;
    Ok((grid, k))
}

fn check_sampling<T: Real>(s: &SpectralAmplitude<T>, step: T) -> Result<(), DelayScanError> {
    if !(step > T::zero()) || step > lit(MAX_TAU_STEP_FS) {
        return Err(DelayScanError::Tau(format!(
            "step must be in (0, {MAX_TAU_STEP_FS}] fs, got {}",
            to_f64(step)
        )));
    }
    let band = to_f64(s.occupied_band());
    let limit = if band > 0.0 { 1.0 / (10.0 * band) } else { f64::INFINITY };
    if to_f64(step) > limit {
        return Err(DelayScanError::Sampling {
            step_fs: to_f64(step),
            band_rad_per_fs: band,
            limit_fs: limit,
        });
    }
    Ok(())
}

/// `R(τ) = |Σ S(ω)·K(ω, τ)·Δω|²`. The signal-delay kernel uses a
/// zero-padded FFT; the V-mask kernel is summed directly.
pub fn trace<T: Real>(
    s: &SpectralAmplitude<T>,
    kernel: DelayKernel,
    tau: &TauSpec<T>,
) -> Result<UpconversionTrace<T>, DelayScanError> {
    s.validate()?;
    let step = tau.step_fs();
    check_sampling(s, step)?;
    let n = s.grid.len();
    let d_omega = s.grid.step();
    let m = transform_len(n, d_omega, step);
    let d_tau = T::TAU() / (d_omega * lit(m as f64));
    let (grid, k) = delay_grid(tau, m, d_tau)?;
    match kernel {
        DelayKernel::VMask => Ok(trace_direct(s, kernel, &grid)),
        DelayKernel::SignalDelay => {
            let mut buf = vec![Complex::new(T::zero(), T::zero()); m];
            buf[..n].copy_from_slice(&s.values);
            FftPlanner::new().plan_fft_forward(m).process(&mut buf);
            let scale = d_omega * d_omega;
            let rate = (0..grid.len())
                .map(|i| {
                    let idx = (i + m - k) % m;
                    buf[idx].norm_sqr() * scale
                })
                .collect();
            Ok(UpconversionTrace {
                tau: grid,
                rate,
                kernel,
            })
        }
    }
}

/// Brute-force evaluation of the delay sum on an arbitrary delay grid.
pub fn trace_direct<T: Real>(
    s: &SpectralAmplitude<T>,
    kernel: DelayKernel,
    tau: &UniformGrid<T>,
) -> UpconversionTrace<T> {
    let center = s.degenerate_omega();
    let freqs: Vec<T> = s
        .grid
        .iter()
        .map(|w| match kernel {
            DelayKernel::SignalDelay => w,
            DelayKernel::VMask => (w - center).abs(),
        })
        .collect();
    let d_omega = s.grid.step();
    let taus = tau.to_vec();
    let rate = taus
        .par_iter()
        .map(|&t| {
            let mut acc = Complex::new(T::zero(), T::zero());
            for (v, &w) in s.values.iter().zip(&freqs) {
                acc = acc + *v * Complex::from_polar(T::one(), -w * t);
            }
            (acc * d_omega).norm_sqr()
        })
        .collect();
    UpconversionTrace {
        tau: *tau,
        rate,
        kernel,
    }
}

impl<T: Real> UpconversionTrace<T> {
    pub fn validate(&self) -> Result<(), DelayScanError> {
        if self.rate.len() != self.tau.len() {
            return Err(DelayScanError::Tau("rate length differs from delay grid".into()));
        }
        if !self.tau.is_symmetric_about(T::zero()) {
            return Err(DelayScanError::Tau("delay grid not symmetric about zero".into()));
        }
        if self.tau.step() > lit(MAX_TAU_STEP_FS) {
            return Err(DelayScanError::Tau(format!(
                "delay step {} fs too coarse",
                to_f64(self.tau.step())
            )));
        }
        if !self.rate.iter().all(|r| r.is_finite() && *r >= T::zero()) {
            return Err(DelayScanError::Tau("rate must be finite and nonnegative".into()));
        }
        Ok(())
    }

    pub fn rate_at_zero(&self) -> T {
        self.rate[self.tau.len() / 2]
    }

    /// Mean of the rate over `|τ| ≤ half_window`.
    pub fn mean_rate(&self, half_window: T) -> T {
        let (sum, count) = self
            .tau
            .iter()
            .zip(&self.rate)
            .filter(|(t, _)| t.abs() <= half_window)
            .fold((T::zero(), 0usize), |(s, c), (_, r)| (s + *r, c + 1));
        if count == 0 {
            T::zero()
        } else {
            sum / lit(count as f64)
        }
    }

    /// Largest rate over `|τ| ≤ half_window` divided by the mean there.
    pub fn peak_to_mean(&self, half_window: T) -> T {
        let peak = self
            .tau
            .iter()
            .zip(&self.rate)
            .filter(|(t, _)| t.abs() <= half_window)
            .map(|(_, r)| *r)
            .fold(T::zero(), T::max);
        peak / self.mean_rate(half_window)
    }

    /// Largest `|R(τ) − R(−τ)|` relative to the peak.
    pub fn asymmetry(&self) -> T {
        let n = self.rate.len();
        let peak = self.rate.iter().copied().fold(T::zero(), T::max);
        let worst = (0..n / 2)
            .map(|i| (self.rate[i] - self.rate[n - 1 - i]).abs())
            .fold(T::zero(), T::max);
        if peak > T::zero() {
            worst / peak
        } else {
            T::zero()
        }
    }

    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "tau_fs,rate_arb")?;
        for (t, r) in self.tau.iter().zip(&self.rate) {
            writeln!(out, "{},{}", to_f64(t), to_f64(*r))?;
        }
        Ok(())
    }
}

/// Peak, FWHM, extrema and integral of a trace.
pub fn metrics<T: Real>(trace: &UpconversionTrace<T>) -> Result<TraceMetrics<T>, DelayScanError> {
    trace.validate()?;
    let r = &trace.rate;
    let n = r.len();
    let at = |x: T| trace.tau.start() + trace.tau.step() * x;
    let (imax, peak) = r.iter().enumerate().fold(
        (0, T::zero()),
        |(bi, bv), (i, &v)| if v > bv { (i, v) } else { (bi, bv) },
    );
    let fwhm = half_max_crossings(r).map(|(lo, hi)| at(hi) - at(lo));

    let mut maxima = Vec::new();
    let mut minima = Vec::new();
    let floor = peak * lit(EXTREMUM_FLOOR);
    for i in 1..n.saturating_sub(1) {
        if r[i] < floor {
            continue;
        }
        let before = r[i] - r[i - 1];
        let after = r[i + 1] - r[i];
        if before > T::zero() && after <= T::zero() {
            maxima.push(i);
        } else if before < T::zero() && after >= T::zero() {
            minima.push(i);
        }
    }
    // main lobe: between the minima enclosing the peak
    let lobe_lo = minima.iter().rev().find(|&&i| i < imax).copied().unwrap_or(0);
    let lobe_hi = minima.iter().find(|&&i| i > imax).copied().unwrap_or(n - 1);
    let secondary = maxima
        .into_iter()
        .filter(|&i| i < lobe_lo || i > lobe_hi)
        .map(|i| trace.tau.at(i))
        .collect();

    let integral = if n < 2 {
        T::zero()
    } else {
        let inner: T = r[1..n - 1].iter().copied().fold(T::zero(), |a, b| a + b);
        (inner + (r[0] + r[n - 1]) / lit(2.0)) * trace.tau.step()
    };
    Ok(TraceMetrics {
        peak_rate: peak,
        peak_tau_fs: trace.tau.at(imax),
        fwhm_fs: fwhm,
        secondary_maxima_fs: secondary,
        minima_fs: minima.into_iter().map(|i| trace.tau.at(i)).collect(),
        integral,
    })
}

impl<T: Real> TraceMetrics<T> {
    /// Secondary maxima closest to the peak on the negative and positive side.
    pub fn nearest_secondary_maxima(&self) -> (Option<T>, Option<T>) {
        let left = self
            .secondary_maxima_fs
            .iter()
            .copied()
            .filter(|&t| t < self.peak_tau_fs)
            .fold(None, |acc: Option<T>, t| Some(acc.map_or(t, |a| a.max(t))));
        let right = self
            .secondary_maxima_fs
            .iter()
            .copied()
            .filter(|&t| t > self.peak_tau_fs)
            .fold(None, |acc: Option<T>, t| Some(acc.map_or(t, |a| a.min(t))));
        (left, right)
    }

    pub fn to_key_values(&self) -> String {
        let list = |v: &[T]| {
            v.iter()
                .map(|x| format!("{:.3}", to_f64(*x)))
                .collect::<Vec<_>>()
                .join(",")
        };
        let fwhm = self
            .fwhm_fs
            .map_or("undefined".to_string(), |w| format!("{:.4}", to_f64(w)));
        format!(
            "fwhm_fs={}\npeak_rate={:.9e}\npeak_tau_fs={:.3}\nsecondary_maxima_fs={}\nminima_fs={}\nintegral={:.9e}\n",
            fwhm,
            to_f64(self.peak_rate),
            to_f64(self.peak_tau_fs),
            list(&self.secondary_maxima_fs),
            list(&self.minima_fs),
            to_f64(self.integral)
        )
    }
}

/// Relative gap between `Σ R δτ` and `2πΔω Σ|F|²`, where `F = S` for the
/// signal-delay kernel and `F` pairs mirror bins `S(ω₀ ± δ)` for the
/// V-mask. Exact only for full-period traces.
pub fn parseval_check<T: Real>(s: &SpectralAmplitude<T>, trace: &UpconversionTrace<T>) -> f64 {
    let d_omega = to_f64(s.grid.step());
    let energy: f64 = match trace.kernel {
        DelayKernel::SignalDelay => s.values.iter().map(|v| to_f64(v.norm_sqr())).sum(),
        DelayKernel::VMask => {
            let n = s.values.len();
            let mut e = 0.0;
            for j in 0..n / 2 {
                e += to_f64((s.values[j] + s.values[n - 1 - j]).norm_sqr());
            }
            if n % 2 == 1 {
                e += to_f64(s.values[n / 2].norm_sqr());
            }
            e
        }
    };
    let reference = std::f64::consts::TAU * d_omega * energy;
    let sum: f64 = trace.rate.iter().map(|r| to_f64(*r)).sum::<f64>() * to_f64(trace.tau.step());
    (sum - reference).abs() / reference
}
