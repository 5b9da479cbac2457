//! Wavevector bookkeeping and quasi-phasematching for type-0 interaction in
//! a periodically poled crystal.
//!
//! The pump is axial; the idler of every pair carries `ω_p − ω_s` and the
//! opposite transverse wavevector of its signal. Transverse components are
//! conserved across crystal faces, so an external angle θ maps to
//! `k⊥ = (ω/c)·sin θ` everywhere.

use std::sync::Arc;

use num_complex::Complex;

use crate::materials::{MaterialError, MaterialModel};
use crate::scalar::{lit, sinc, speed_of_light, to_f64, Real};

/// Bracket searched by [`solve_poling_period`], µm.
pub const POLING_BRACKET_UM: (f64, f64) = (3.0, 40.0);
/// Bracket searched by [`solve_phasematch_temperature`], °C.
pub const TEMPERATURE_BRACKET_C: (f64, f64) = (20.0, 200.0);
/// Residual target for the root finders, rad/µm.
pub const ROOT_TOLERANCE: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum PhaseMatchError {
    #[error(transparent)]
    Material(#[from] MaterialError),
    #[error("evanescent mode: k_perp {k_perp} rad/um exceeds k {k} rad/um at omega {omega} rad/fs")]
    Evanescent { omega: f64, k_perp: f64, k: f64 },
    #[error("invalid crystal: {0}")]
    InvalidCrystal(String),
    #[error("no sign change of delta_kz over [{lo}, {hi}] {unit}: delta_kz = {f_lo:.6e} .. {f_hi:.6e} rad/um")]
    NoBracket {
        unit: &'static str,
        lo: f64,
        hi: f64,
        f_lo: f64,
        f_hi: f64,
    },
}

/// Nonlinear crystal: length, poling period, temperature and medium.
#[derive(Debug, Clone, PartialEq)]
pub struct CrystalSpec<T> {
    pub length_mm: T,
    pub poling_period_um: T,
    pub temperature_c: T,
    pub material: Arc<MaterialModel<T>>,
}

impl<T: Real> CrystalSpec<T> {
    pub fn new(
        material: Arc<MaterialModel<T>>,
        length_mm: T,
        poling_period_um: T,
        temperature_c: T,
    ) -> Result<Self, PhaseMatchError> {
        let c = Self {
            length_mm,
            poling_period_um,
            temperature_c,
            material,
        };
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<(), PhaseMatchError> {
        if !(self.length_mm > T::zero()) {
            return Err(PhaseMatchError::InvalidCrystal(format!(
                "length_mm must be positive, got {}",
                to_f64(self.length_mm)
            )));
        }
        if !(self.poling_period_um > T::zero()) {
            return Err(PhaseMatchError::InvalidCrystal(format!(
                "poling_period_um must be positive, got {}",
                to_f64(self.poling_period_um)
            )));
        }
        Ok(())
    }

    /// Grating wavenumber `2π/Λ`, rad/µm.
    pub fn grating_wavenumber(&self) -> T {
        T::TAU() / self.poling_period_um
    }

    pub fn length_um(&self) -> T {
        self.length_mm * lit(1000.0)
    }

    pub fn with_temperature(&self, temperature_c: T) -> Self {
        Self {
            temperature_c,
            ..self.clone()
        }
    }

    pub fn with_poling_period(&self, poling_period_um: T) -> Self {
        Self {
            poling_period_um,
            ..self.clone()
        }
    }

    /// Axial wavenumbers of one (signal, idler) frequency pair.
    pub fn pair_wavenumbers(&self, omega_s: T, pump_omega: T) -> Result<PairWavenumbers<T>, PhaseMatchError> {
        let t = self.temperature_c;
        Ok(PairWavenumbers {
            pump: self.material.wavenumber(pump_omega, t)?,
            signal: self.material.wavenumber(omega_s, t)?,
            idler: self.material.wavenumber(pump_omega - omega_s, t)?,
            grating: self.grating_wavenumber(),
        })
    }
}

/// Propagating plane-wave component.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TransverseMode<T> {
    pub omega: T,
    pub k_perp: T,
    pub azimuth: T,
}

/// Wavenumbers entering the longitudinal mismatch for one frequency pair.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PairWavenumbers<T> {
    pub pump: T,
    pub signal: T,
    pub idler: T,
    pub grating: T,
}

impl<T: Real> PairWavenumbers<T> {
    /// `Δk_z` for signal at `+k⊥`, idler at `−k⊥`. The caller guarantees
    /// `k⊥` is below both wavenumbers.
    #[inline]
    pub fn delta_kz(&self, k_perp: T) -> T {
        let kp2 = k_perp * k_perp;
        let ks = (self.signal * self.signal - kp2).sqrt();
        let ki = (self.idler * self.idler - kp2).sqrt();
        self.pump - ks - ki - self.grating
    }
}

/// External angle (rad) to the conserved transverse wavevector, rad/µm.
#[inline]
pub fn k_perp_from_external_angle<T: Real>(omega: T, theta_ext: T) -> T {
    omega / speed_of_light::<T>() * theta_ext.sin()
}

/// Longitudinal wavevector inside the crystal, `sqrt((nω/c)² − k⊥²)`.
pub fn kz<T: Real>(mode: &TransverseMode<T>, crystal: &CrystalSpec<T>) -> Result<T, PhaseMatchError> {
    let k = crystal.material.wavenumber(mode.omega, crystal.temperature_c)?;
    if !(mode.k_perp >= T::zero()) || mode.k_perp >= k {
        return Err(PhaseMatchError::Evanescent {
            omega: to_f64(mode.omega),
            k_perp: to_f64(mode.k_perp),
            k: to_f64(k),
        });
    }
    if mode.k_perp == T::zero() {
        return Ok(k);
    }
    Ok((k * k - mode.k_perp * mode.k_perp).sqrt())
}

/// `Δk_z = k_pz − k_sz − k_iz − k_g` with the idler at `ω_p − ω_s`, `−k⊥`.
pub fn delta_kz<T: Real>(omega_s: T, k_perp: T, crystal: &CrystalSpec<T>, pump_omega: T) -> Result<T, PhaseMatchError> {
    let omega_i = pump_omega - omega_s;
    let pump = TransverseMode {
        omega: pump_omega,
        k_perp: T::zero(),
        azimuth: T::zero(),
    };
    let signal = TransverseMode {
        omega: omega_s,
        k_perp,
        azimuth: T::zero(),
    };
    let idler = TransverseMode {
        omega: omega_i,
        k_perp,
        azimuth: T::PI(),
    };
    Ok(kz(&pump, crystal)? - kz(&signal, crystal)? - kz(&idler, crystal)? - crystal.grating_wavenumber())
}

/// `sinc(β)·e^{−iβ}` with `β = Δk_z·L/2`.
pub fn phasematch_factor<T: Real>(delta_kz: T, length_mm: T) -> Complex<T> {
    let beta = delta_kz * length_mm * lit(500.0);
    let s = sinc(beta);
    Complex::new(s * beta.cos(), -s * beta.sin())
}

fn bisect<T: Real>(
    f: impl Fn(T) -> Result<T, PhaseMatchError>,
    (lo, hi): (T, T),
    unit: &'static str,
) -> Result<T, PhaseMatchError> {
    let (mut a, mut b) = (lo, hi);
    let (mut fa, fb) = (f(a)?, f(b)?);
    if fa == T::zero() {
        return Ok(a);
    }
    if fb == T::zero() {
        return Ok(b);
    }
    if fa.signum() == fb.signum() {
        return Err(PhaseMatchError::NoBracket {
            unit,
            lo: to_f64(lo),
            hi: to_f64(hi),
            f_lo: to_f64(fa),
            f_hi: to_f64(fb),
        });
    }
    let tol = lit::<T>(ROOT_TOLERANCE);
    let mut best = (a, fa.abs());
    for _ in 0..200 {
        let mid = (a + b) / lit(2.0);
        if mid <= a || mid >= b {
            break;
        }
        let fm = f(mid)?;
        if fm.abs() < best.1 {
            best = (mid, fm.abs());
        }
        if fm == T::zero() || fm.abs() < tol * lit(1e-3) {
            return Ok(mid);
        }
        if fm.signum() == fa.signum() {
            a = mid;
            fa = fm;
        } else {
            b = mid;
        }
    }
    Ok(best.0)
}

fn degenerate_axial_mismatch<T: Real>(crystal: &CrystalSpec<T>, pump_omega: T) -> Result<T, PhaseMatchError> {
    let w = crystal.pair_wavenumbers(pump_omega / lit(2.0), pump_omega)?;
    Ok(w.delta_kz(T::zero()))
}

/// Poling period (µm) that phasematches degenerate, axial pairs at
/// `temperature_c`, found by bisection over [`POLING_BRACKET_UM`].
pub fn solve_poling_period<T: Real>(
    template: &CrystalSpec<T>,
    pump_omega: T,
    temperature_c: T,
) -> Result<T, PhaseMatchError> {
    let base = template.with_temperature(temperature_c);
    bisect(
        |period| degenerate_axial_mismatch(&base.with_poling_period(period), pump_omega),
        (lit(POLING_BRACKET_UM.0), lit(POLING_BRACKET_UM.1)),
        "um",
    )
}

/// Crystal temperature (°C) at which degenerate, axial pairs are
/// phasematched for the crystal's poling period.
pub fn solve_phasematch_temperature<T: Real>(crystal: &CrystalSpec<T>, pump_omega: T) -> Result<T, PhaseMatchError> {
    bisect(
        |t| degenerate_axial_mismatch(&crystal.with_temperature(t), pump_omega),
        (lit(TEMPERATURE_BRACKET_C.0), lit(TEMPERATURE_BRACKET_C.1)),
        "degC",
    )
}
