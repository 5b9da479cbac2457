//! System spectral phase from an ordered element chain, and the search
//! for the dispersion setting that maximizes the zero-delay rate.

use std::sync::Arc;

use num_complex::Complex;
use rayon::prelude::*;

use crate::grid::UniformGrid;
use crate::materials::{MaterialError, MaterialModel, SpectralPhase};
use crate::scalar::{lit, omega_to_wavelength_nm, speed_of_light, to_f64, Real};
use crate::spdc::{PairEnvelope, SpdcError};

/// Step of the central difference used for chain GDD, rad/fs.
pub const GDD_STEP: f64 = 1e-4;
pub const DEFAULT_SCAN_POINTS: usize = 41;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum DispersionError {
    #[error(transparent)]
    Material(#[from] MaterialError),
    #[error(transparent)]
    Spectrum(#[from] SpdcError),
    #[error("invalid element: {0}")]
    InvalidElement(String),
    #[error("invalid optimization: {0}")]
    Optimize(String),
}

#[derive(Debug, Clone, PartialEq)]
pub enum Element<T> {
    Slab {
        material: Arc<MaterialModel<T>>,
        thickness_mm: T,
        temperature_c: T,
    },
    /// Four Brewster prisms cut for minimum deviation at `design_omega`.
    /// The phase is taken relative to the vacuum path, which only adds a
    /// group delay.
    PrismCompressor {
        glass: Arc<MaterialModel<T>>,
        apex_separation_mm: T,
        /// Glass traversed beyond the apex, per prism.
        insertion_mm: T,
        design_omega: T,
    },
    /// `Σ cₖ (ω − ω₀)ᵏ / k!` with `coefficients = [c₂, c₃, …]` in fs², fs³, …
    PhaseCorrection { center_omega: T, coefficients: Vec<T> },
}

impl<T: Real> Element<T> {
    pub fn slab(material: Arc<MaterialModel<T>>, thickness_mm: T, temperature_c: T) -> Self {
        Element::Slab {
            material,
            thickness_mm,
            temperature_c,
        }
    }

    pub fn gdd_correction(center_omega: T, gdd_fs2: T) -> Self {
        Element::PhaseCorrection {
            center_omega,
            coefficients: vec![gdd_fs2],
        }
    }

    pub fn validate(&self) -> Result<(), DispersionError> {
        let bad = |what: &str, v: T| {
            Err(DispersionError::InvalidElement(format!(
                "{what} must be non-negative, got {}",
                to_f64(v)
            )))
        };
        match self {
            Element::Slab { thickness_mm, .. } if !(*thickness_mm >= T::zero()) => bad("thickness_mm", *thickness_mm),
            Element::PrismCompressor {
                apex_separation_mm,
                insertion_mm,
                design_omega,
                ..
            } => {
                if !(*apex_separation_mm >= T::zero()) {
                    return bad("apex_separation_mm", *apex_separation_mm);
                }
                if !(*insertion_mm >= T::zero()) {
                    return bad("insertion_mm", *insertion_mm);
                }
                if !(*design_omega > T::zero()) {
                    return bad("design_omega", *design_omega);
                }
                Ok(())
            }
            Element::PhaseCorrection { coefficients, .. } if !coefficients.iter().all(|c| c.is_finite()) => Err(
                DispersionError::InvalidElement("phase correction coefficients must be finite".into()),
            ),
            _ => Ok(()),
        }
    }

    pub fn phase_at(&self, omega: T) -> Result<T, DispersionError> {
        match self {
            Element::Slab {
                material,
                thickness_mm,
                temperature_c,
            } => Ok(material.wavenumber(omega, *temperature_c)? * *thickness_mm * lit(1000.0)),
            Element::PrismCompressor {
                glass,
                apex_separation_mm,
                insertion_mm,
                design_omega,
            } => {
                let n0 = index(glass, *design_omega)?;
                let n = index(glass, omega)?;
                let dtheta = prism_exit_angle(n, n0) - prism_exit_angle(n0, n0);
                let k0 = omega / speed_of_light::<T>();
                let l_um = *apex_separation_mm * lit(1000.0);
                let ins_um = *insertion_mm * lit(1000.0);
                Ok(lit::<T>(2.0) * k0 * l_um * (dtheta.cos() - T::one()) + lit::<T>(4.0) * k0 * n * ins_um)
            }
            Element::PhaseCorrection {
                center_omega,
                coefficients,
            } => {
                let d = omega - *center_omega;
                let mut term = d;
                let mut fact = T::one();
                let mut acc = T::zero();
                for (k, c) in coefficients.iter().enumerate() {
                    term = term * d;
                    fact = fact * lit((k + 2) as f64);
                    acc = acc + *c * term / fact;
                }
                Ok(acc)
            }
        }
    }
}

fn index<T: Real>(glass: &MaterialModel<T>, omega: T) -> Result<T, MaterialError> {
    crate::materials::refractive_index(glass, omega_to_wavelength_nm(omega), lit(20.0))
}

/// Exit angle from a prism cut for Brewster incidence and minimum
/// deviation at index `n0`, for a ray of index `n` entering at the
/// Brewster angle of `n0`.
fn prism_exit_angle<T: Real>(n: T, n0: T) -> T {
    let theta1 = n0.atan();
    let apex = lit::<T>(2.0) * (theta1.sin() / n0).asin();
    let theta2 = (theta1.sin() / n).asin();
    (n * (apex - theta2).sin()).asin()
}

/// Ordered dispersive elements traversed by one photon.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ElementChain<T> {
    pub elements: Vec<Element<T>>,
}

impl<T: Real> ElementChain<T> {
    pub fn new(elements: Vec<Element<T>>) -> Result<Self, DispersionError> {
        let chain = Self { elements };
        chain.validate()?;
        Ok(chain)
    }

    pub fn validate(&self) -> Result<(), DispersionError> {
        self.elements.iter().try_for_each(Element::validate)
    }

    pub fn push(&mut self, element: Element<T>) {
        self.elements.push(element);
    }

    pub fn phase_at(&self, omega: T) -> Result<T, DispersionError> {
        self.elements
            .iter()
            .try_fold(T::zero(), |acc, e| Ok(acc + e.phase_at(omega)?))
    }

    /// Chain `φ″` at `omega` in fs², by a central difference.
    pub fn gdd_at(&self, omega: T) -> Result<T, DispersionError> {
        let h = lit::<T>(GDD_STEP);
        let lo = self.phase_at(omega - h)?;
        let mid = self.phase_at(omega)?;
        let hi = self.phase_at(omega + h)?;
        Ok((hi - mid - mid + lo) / (h * h))
    }

    /// Sets the insertion of every prism compressor.
    pub fn set_insertion(&mut self, insertion: T) {
        for e in &mut self.elements {
            if let Element::PrismCompressor { insertion_mm, .. } = e {
                *insertion_mm = insertion;
            }
        }
    }

    pub fn has_compressor(&self) -> bool {
        self.elements
            .iter()
            .any(|e| matches!(e, Element::PrismCompressor { .. }))
    }
}

/// Sum of element phases sampled on `grid`.
pub fn chain_phase<T: Real>(
    chain: &ElementChain<T>,
    grid: &UniformGrid<T>,
) -> Result<SpectralPhase<T>, DispersionError> {
    chain.validate()?;
    let phase = grid.iter().map(|w| chain.phase_at(w)).collect::<Result<Vec<_>, _>>()?;
    Ok(SpectralPhase { omega: *grid, phase })
}

/// Signal and idler chains.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct SystemChains<T> {
    pub signal: ElementChain<T>,
    pub idler: ElementChain<T>,
}

impl<T: Real> SystemChains<T> {
    pub fn shared(chain: ElementChain<T>) -> Self {
        Self {
            signal: chain.clone(),
            idler: chain,
        }
    }

    pub fn phases(&self, grid: &UniformGrid<T>) -> Result<(SpectralPhase<T>, SpectralPhase<T>), DispersionError> {
        Ok((chain_phase(&self.signal, grid)?, chain_phase(&self.idler, grid)?))
    }

    pub fn push_both(&mut self, element: Element<T>) {
        self.signal.push(element.clone());
        self.idler.push(element);
    }

    /// Mean of the signal and idler chain GDD at `omega`.
    pub fn residual_gdd(&self, omega: T) -> Result<T, DispersionError> {
        Ok((self.signal.gdd_at(omega)? + self.idler.gdd_at(omega)?) / lit(2.0))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Knob {
    /// Glass insertion per prism of every compressor, mm.
    InsertionMm,
    /// Extra quadratic phase on both photons, fs².
    CorrectionGddFs2,
}

impl Knob {
    pub fn name(&self) -> &'static str {
        match self {
            Knob::InsertionMm => "insertion_mm",
            Knob::CorrectionGddFs2 => "correction_gdd_fs2",
        }
    }

    pub fn tolerance(&self) -> f64 {
        match self {
            Knob::InsertionMm => 0.01,
            Knob::CorrectionGddFs2 => 0.5,
        }
    }
}

impl std::str::FromStr for Knob {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "insertion_mm" => Ok(Knob::InsertionMm),
            "correction_gdd_fs2" => Ok(Knob::CorrectionGddFs2),
            other => Err(format!(
                "unknown knob `{other}` (expected insertion_mm or correction_gdd_fs2)"
            )),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OptimizeSpec<T> {
    pub knob: Knob,
    pub bracket: (T, T),
    pub scan_points: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OptimizationResult<T> {
    pub knob: Knob,
    pub optimal_value: T,
    pub residual_gdd_fs2: T,
    pub peak_rate: T,
    /// Scan maximum on the bracket boundary; no refinement was done.
    pub edge_solution: bool,
    pub scan_record: Vec<(T, T)>,
    /// Chains with the optimal knob value applied.
    pub chains: SystemChains<T>,
}

/// Zero-delay rate `|Σ S Δω|²` as a function of one knob.
pub struct Objective<'a, T> {
    pub envelope: &'a PairEnvelope<T>,
    pub base: &'a SystemChains<T>,
    pub knob: Knob,
}

impl<T: Real> Objective<'_, T> {
    pub fn chains_at(&self, value: T) -> SystemChains<T> {
        let mut chains = self.base.clone();
        match self.knob {
            Knob::InsertionMm => {
                chains.signal.set_insertion(value);
                chains.idler.set_insertion(value);
            }
            Knob::CorrectionGddFs2 => {
                chains.push_both(Element::gdd_correction(self.envelope.pump_omega / lit(2.0), value));
            }
        }
        chains
    }

    pub fn rate_at_zero_delay(&self, value: T) -> Result<T, DispersionError> {
        let chains = self.chains_at(value);
        chains.signal.validate()?;
        chains.idler.validate()?;
        let (ps, pi) = chains.phases(&self.envelope.grid)?;
        let s = self.envelope.with_phases(&ps, &pi)?;
        let sum = s.values.iter().fold(Complex::new(T::zero(), T::zero()), |a, b| a + *b);
        Ok((sum * s.grid.step()).norm_sqr())
    }
}

/// Uniform scan of the bracket, then golden-section refinement around the
/// best scan point down to the knob tolerance.
pub fn optimize_dispersion<T: Real>(
    envelope: &PairEnvelope<T>,
    base: &SystemChains<T>,
    spec: &OptimizeSpec<T>,
) -> Result<OptimizationResult<T>, DispersionError> {
    let (lo, hi) = spec.bracket;
    if !(lo < hi) || spec.scan_points < 3 {
        return Err(DispersionError::Optimize(format!(
            "need lo < hi and >= 3 scan points, got [{}, {}] with {}",
            to_f64(lo),
            to_f64(hi),
            spec.scan_points
        )));
    }
    if spec.knob == Knob::InsertionMm && !(base.signal.has_compressor() || base.idler.has_compressor()) {
        return Err(DispersionError::Optimize(
            "insertion knob needs a prism compressor in the chain".into(),
        ));
    }
    let objective = Objective {
        envelope,
        base,
        knob: spec.knob,
    };
    let step = (hi - lo) / lit((spec.scan_points - 1) as f64);
    let xs: Vec<T> = (0..spec.scan_points).map(|i| lo + step * lit(i as f64)).collect();
    let rates = xs
        .par_iter()
        .map(|&x| objective.rate_at_zero_delay(x))
        .collect::<Result<Vec<T>, _>>()?;
    let scan_record: Vec<(T, T)> = xs.iter().copied().zip(rates.iter().copied()).collect();
    let best = (0..rates.len()).fold(0, |b, i| if rates[i] > rates[b] { i } else { b });

    let edge = best == 0 || best == rates.len() - 1;
    let (x_opt, r_opt) = if edge {
        (xs[best], rates[best])
    } else {
        golden_section(&objective, xs[best - 1], xs[best + 1], lit(spec.knob.tolerance()))?
    };
    let chains = objective.chains_at(x_opt);
    let residual = chains.residual_gdd(envelope.pump_omega / lit(2.0))?;
    Ok(OptimizationResult {
        knob: spec.knob,
        optimal_value: x_opt,
        residual_gdd_fs2: residual,
        peak_rate: r_opt,
        edge_solution: edge,
        scan_record,
        chains,
    })
}

fn golden_section<T: Real>(
    objective: &Objective<'_, T>,
    mut a: T,
    mut b: T,
    tol: T,
) -> Result<(T, T), DispersionError> {
    let inv_phi = (lit::<T>(5.0).sqrt() - T::one()) / lit(2.0);
    let mut c = b - (b - a) * inv_phi;
    let mut d = a + (b - a) * inv_phi;
    let mut fc = objective.rate_at_zero_delay(c)?;
    let mut fd = objective.rate_at_zero_delay(d)?;
    while (b - a) > tol {
        if fc > fd {
            b = d;
            d = c;
            fd = fc;
            c = b - (b - a) * inv_phi;
            fc = objective.rate_at_zero_delay(c)?;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + (b - a) * inv_phi;
            fd = objective.rate_at_zero_delay(d)?;
        }
    }
    let x = (a + b) / lit(2.0);
    Ok((x, objective.rate_at_zero_delay(x)?))
}

/// True when moving the knob by `±5` tolerance units lowers the rate.
pub fn local_maximum_certificate<T: Real>(
    envelope: &PairEnvelope<T>,
    base: &SystemChains<T>,
    result: &OptimizationResult<T>,
) -> Result<bool, DispersionError> {
    let objective = Objective {
        envelope,
        base,
        knob: result.knob,
    };
    let delta = lit::<T>(5.0 * result.knob.tolerance());
    let left = objective.rate_at_zero_delay(result.optimal_value - delta)?;
    let right = objective.rate_at_zero_delay(result.optimal_value + delta)?;
    Ok(left < result.peak_rate && right < result.peak_rate)
}

impl<T: Real> OptimizationResult<T> {
    pub fn to_key_values(&self) -> String {
        format!(
            "knob={}\noptimal_value={:.4}\nresidual_gdd_fs2={:.3}\npeak_rate={:.9e}\nedge_solution={}\n",
            self.knob.name(),
            to_f64(self.optimal_value),
            to_f64(self.residual_gdd_fs2),
            to_f64(self.peak_rate),
            self.edge_solution
        )
    }

    pub fn write_scan_csv<W: std::io::Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "knob_value,rate_at_zero_delay")?;
        for (x, r) in &self.scan_record {
            writeln!(out, "{},{}", to_f64(*x), to_f64(*r))?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::materials::{group_delay_dispersion, spectral_phase_of_slab, MaterialLibrary};
    use crate::scalar::wavelength_nm_to_omega;
    use crate::spdc::gaussian_spectrum;

    fn lib() -> MaterialLibrary<f64> {
        MaterialLibrary::bundled()
    }

    fn w0() -> f64 {
        wavelength_nm_to_omega(1064.0)
    }

    fn compressor(insertion: f64) -> Element<f64> {
        Element::PrismCompressor {
            glass: lib().get("sf14").unwrap(),
            apex_separation_mm: 352.0,
            insertion_mm: insertion,
            design_omega: w0(),
        }
    }

    #[test]
    fn empty_chain_is_zero() {
        let grid = UniformGrid::centered(w0(), 0.3, 33).unwrap();
        let p = chain_phase(&ElementChain::default(), &grid).unwrap();
        assert!(p.phase.iter().all(|&x| x == 0.0));
    }

    #[test]
    fn slab_element_matches_material_phase() {
        let fs = lib().get("fused_silica").unwrap();
        let grid = UniformGrid::centered(w0(), 0.3, 33).unwrap();
        let chain = ElementChain::new(vec![
            Element::slab(fs.clone(), 3.0, 20.0),
            Element::slab(fs.clone(), 2.0, 20.0),
        ])
        .unwrap();
        let p = chain_phase(&chain, &grid).unwrap();
        let a = spectral_phase_of_slab(&fs, 3.0, &grid, 20.0).unwrap();
        let b = spectral_phase_of_slab(&fs, 2.0, &grid, 20.0).unwrap();
        let sum = a.add(&b).unwrap();
        for (x, y) in p.phase.iter().zip(&sum.phase) {
            assert!((x - y).abs() <= 1e-12 * y.abs());
        }
    }

    #[test]
    fn element_order_does_not_matter() {
        let fs = lib().get("fused_silica").unwrap();
        let a = vec![
            Element::slab(fs, 6.0, 20.0),
            compressor(4.0),
            Element::gdd_correction(w0(), 50.0),
        ];
        let mut b = a.clone();
        b.reverse();
        let ca = ElementChain::new(a).unwrap();
        let cb = ElementChain::new(b).unwrap();
        for w in [1.6, 1.77, 1.9] {
            let (x, y) = (ca.phase_at(w).unwrap(), cb.phase_at(w).unwrap());
            assert!((x - y).abs() <= 1e-12 * x.abs());
        }
    }

    #[test]
    fn compressor_gdd_matches_angular_dispersion_closed_form() {
        // φ″ = −2 (ω/c) l (dθ/dω)², with dθ/dn = 2 at Brewster and minimum deviation
        let glass = lib().get("sf14").unwrap();
        let w = w0();
        let (_, dn, _) = glass.omega_derivatives(w, 20.0).unwrap();
        let l_um = 352_000.0;
        let expect = -2.0 * w / crate::scalar::SPEED_OF_LIGHT_UM_PER_FS * l_um * (2.0 * dn).powi(2);
        let chain = ElementChain::new(vec![compressor(0.0)]).unwrap();
        let got = chain.gdd_at(w).unwrap();
        assert!(got < 0.0);
        assert!((got / expect - 1.0).abs() < 1e-3, "{got} vs {expect}");
    }

    #[test]
    fn insertion_adds_four_prisms_of_glass() {
        let glass = lib().get("sf14").unwrap();
        let w = w0();
        let g0 = ElementChain::new(vec![compressor(0.0)]).unwrap().gdd_at(w).unwrap();
        let g5 = ElementChain::new(vec![compressor(5.0)]).unwrap().gdd_at(w).unwrap();
        let glass_gdd = group_delay_dispersion(&glass, 20.0, 1064.0, 20.0).unwrap();
        assert!(((g5 - g0) - glass_gdd).abs() < 0.01 * glass_gdd);
    }

    #[test]
    fn negative_lengths_are_rejected() {
        let fs = lib().get("fused_silica").unwrap();
        assert!(ElementChain::new(vec![Element::slab(fs, -1.0, 20.0)]).is_err());
        assert!(ElementChain::new(vec![compressor(-0.5)]).is_err());
    }

    #[test]
    fn correction_polynomial_derivatives() {
        let e = ElementChain::new(vec![Element::PhaseCorrection {
            center_omega: 1.77_f64,
            coefficients: vec![120.0, 900.0],
        }])
        .unwrap();
        assert!((e.gdd_at(1.77).unwrap() - 120.0).abs() < 1e-3);
        let d: f64 = 0.1;
        let expect = 120.0 * d * d / 2.0 + 900.0 * d.powi(3) / 6.0;
        assert!((e.phase_at(1.77 + d).unwrap() - expect).abs() < 1e-12);
    }

    fn synthetic_envelope() -> PairEnvelope<f64> {
        let wp = 2.0 * w0();
        let grid = UniformGrid::centered(w0(), 0.55, 512).unwrap();
        let s = gaussian_spectrum(&grid, wp, 0.08);
        PairEnvelope {
            grid,
            pump_omega: wp,
            values: s.values,
            refinement_change: 0.0,
            radial_intervals: 0,
        }
    }

    #[test]
    fn quadratic_system_phase_is_cancelled() {
        let env = synthetic_envelope();
        let base = SystemChains::shared(ElementChain::new(vec![Element::gdd_correction(w0(), 137.0)]).unwrap());
        let spec = OptimizeSpec {
            knob: Knob::CorrectionGddFs2,
            bracket: (-400.0, 200.0),
            scan_points: DEFAULT_SCAN_POINTS,
        };
        let res = optimize_dispersion(&env, &base, &spec).unwrap();
        assert!(!res.edge_solution);
        assert!(res.residual_gdd_fs2.abs() < 0.5, "{}", res.residual_gdd_fs2);
        assert!(local_maximum_certificate(&env, &base, &res).unwrap());
        let again = optimize_dispersion(&env, &base, &spec).unwrap();
        assert_eq!(res.scan_record, again.scan_record);
    }

    #[test]
    fn insertion_knob_finds_compensating_glass() {
        let env = synthetic_envelope();
        let ln = lib().get("mgo_ln").unwrap();
        let base =
            SystemChains::shared(ElementChain::new(vec![Element::slab(ln, 5.0, 48.5), compressor(5.0)]).unwrap());
        let spec = OptimizeSpec {
            knob: Knob::InsertionMm,
            bracket: (3.0, 10.0),
            scan_points: DEFAULT_SCAN_POINTS,
        };
        let res = optimize_dispersion(&env, &base, &spec).unwrap();
        assert!(!res.edge_solution);
        assert!(res.scan_record.iter().all(|&(_, r)| r <= res.peak_rate));
        assert!(res.optimal_value > 5.0 && res.optimal_value < 10.0);
        assert!(local_maximum_certificate(&env, &base, &res).unwrap());
    }

    #[test]
    fn edge_solution_is_flagged() {
        let env = synthetic_envelope();
        let base = SystemChains::shared(ElementChain::new(vec![Element::gdd_correction(w0(), 500.0)]).unwrap());
        let spec = OptimizeSpec {
            knob: Knob::CorrectionGddFs2,
            bracket: (-200.0, 200.0),
            scan_points: 21,
        };
        let res = optimize_dispersion(&env, &base, &spec).unwrap();
        assert!(res.edge_solution);
        assert_eq!(res.optimal_value, -200.0);
    }

    #[test]
    fn report_formats() {
        let env = synthetic_envelope();
        let base = SystemChains::default();
        let spec = OptimizeSpec {
            knob: Knob::CorrectionGddFs2,
            bracket: (-50.0, 50.0),
            scan_points: 5,
        };
        let res = optimize_dispersion(&env, &base, &spec).unwrap();
        let kv = res.to_key_values();
        for key in [
            "knob=correction_gdd_fs2",
            "optimal_value=",
            "residual_gdd_fs2=",
            "peak_rate=",
        ] {
            assert!(kv.contains(key), "{kv}");
        }
        let mut buf = Vec::new();
        res.write_scan_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("knob_value,rate_at_zero_delay\n"));
        assert_eq!(text.lines().count(), 6);
    }
}
