//! Refractive-index models and the spectral phase they impose.
//!
//! Every medium is described by a closed-form dispersion formula in the
//! squared index `ε(u) = n²` with `u = λ²` (λ in µm). Derivatives with
//! respect to wavelength are analytic, which keeps group-delay dispersion
//! free of step-size choices.

use std::collections::BTreeMap;
use std::path::Path;
use std::sync::Arc;

use crate::grid::UniformGrid;
use crate::kv;
use crate::scalar::{lit, omega_to_wavelength_nm, speed_of_light, to_f64, Real};

const BUNDLED_MATERIALS: &str = include_str!("../data/materials.txt");

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum MaterialError {
    #[error("{material}: wavelength {wavelength_nm:.3} nm outside valid range [{min}, {max}] nm")]
    OutOfRange {
        material: String,
        wavelength_nm: f64,
        min: f64,
        max: f64,
    },
    #[error("unknown material `{0}`")]
    UnknownMaterial(String),
    #[error("materials data: {0}")]
    Data(#[from] kv::KvError),
    #[error("materials data line {line}: unknown formula_id `{id}`")]
    UnknownFormula { id: String, line: usize },
    #[error("{0}")]
    InvalidArgument(String),
    #[error("cannot read materials file: {0}")]
    Io(String),
}

/// Closed-form dispersion formula.
#[derive(Debug, Clone, PartialEq)]
pub enum DispersionFormula<T> {
    /// Three-term Sellmeier, `n² = 1 + Σ Bᵢ λ² / (λ² − Cᵢ)`.
    Sellmeier { b: [T; 3], c: [T; 3] },
    /// Temperature-dependent extraordinary index of MgO-doped lithium niobate.
    MgoLnExtraordinary { a: [T; 6], b: [T; 4], t0: T, t1: T },
}

impl<T: Real> DispersionFormula<T> {
    pub fn formula_id(&self) -> &'static str {
        match self {
            Self::Sellmeier { .. } => "sellmeier3",
            Self::MgoLnExtraordinary { .. } => "mgo_ln_extraordinary",
        }
    }

    pub fn is_temperature_dependent(&self) -> bool {
        matches!(self, Self::MgoLnExtraordinary { .. })
    }

    /// `(ε, dε/du, d²ε/du²)` at `u = λ²` (µm²).
    fn epsilon(&self, u: T, temperature_c: T) -> (T, T, T) {
        let two = lit::<T>(2.0);
        match self {
            Self::Sellmeier { b, c } => {
                let mut eps = T::one();
                let mut d1 = T::zero();
                let mut d2 = T::zero();
                for (&bi, &ci) in b.iter().zip(c) {
                    let den = u - ci;
                    eps = eps + bi * u / den;
                    d1 = d1 - bi * ci / (den * den);
                    d2 = d2 + two * bi * ci / (den * den * den);
                }
                (eps, d1, d2)
            }
            Self::MgoLnExtraordinary { a, b, t0, t1 } => {
                let f = (temperature_c - *t0) * (temperature_c + *t1);
                let uv_pole = a[2] + b[2] * f;
                let uv_num = a[1] + b[1] * f;
                let ir_num = a[3] + b[3] * f;
                let d_uv = u - uv_pole * uv_pole;
                let d_ir = u - a[4] * a[4];
                let eps = a[0] + b[0] * f + uv_num / d_uv + ir_num / d_ir - a[5] * u;
                let d1 = -uv_num / (d_uv * d_uv) - ir_num / (d_ir * d_ir) - a[5];
                let d2 = two * uv_num / (d_uv * d_uv * d_uv) + two * ir_num / (d_ir * d_ir * d_ir);
                (eps, d1, d2)
            }
        }
    }
}

/// Dispersion model for one named optical medium.
#[derive(Debug, Clone, PartialEq)]
pub struct MaterialModel<T> {
    pub name: String,
    pub formula: DispersionFormula<T>,
    /// Valid wavelength interval, nm.
    pub valid_range_nm: (T, T),
}

/// Index and its first two wavelength derivatives (λ in µm).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IndexDerivatives<T> {
    pub n: T,
    pub dn_dlambda: T,
    pub d2n_dlambda2: T,
}

impl<T: Real> MaterialModel<T> {
    pub fn new(name: impl Into<String>, formula: DispersionFormula<T>, valid_range_nm: (T, T)) -> Self {
        Self {
            name: name.into(),
            formula,
            valid_range_nm,
        }
    }

    pub fn check_wavelength(&self, wavelength_nm: T) -> Result<(), MaterialError> {
        let (lo, hi) = self.valid_range_nm;
        if !(wavelength_nm >= lo && wavelength_nm <= hi) {
            return Err(MaterialError::OutOfRange {
                material: self.name.clone(),
                wavelength_nm: to_f64(wavelength_nm),
                min: to_f64(lo),
                max: to_f64(hi),
            });
        }
        Ok(())
    }

    pub fn index_derivatives(&self, wavelength_nm: T, temperature_c: T) -> Result<IndexDerivatives<T>, MaterialError> {
        self.check_wavelength(wavelength_nm)?;
        let two = lit::<T>(2.0);
        let lambda = wavelength_nm / lit(1000.0);
        let (eps, eps_u, eps_uu) = self.formula.epsilon(lambda * lambda, temperature_c);
        let n = eps.sqrt();
        let eps_l = two * lambda * eps_u;
        let eps_ll = two * eps_u + lit::<T>(4.0) * lambda * lambda * eps_uu;
        let dn = eps_l / (two * n);
        let d2n = (eps_ll - two * dn * dn) / (two * n);
        Ok(IndexDerivatives {
            n,
            dn_dlambda: dn,
            d2n_dlambda2: d2n,
        })
    }

    /// Wavenumber `n(ω)·ω/c` in rad/µm.
    pub fn wavenumber(&self, omega: T, temperature_c: T) -> Result<T, MaterialError> {
        let n = refractive_index(self, omega_to_wavelength_nm(omega), temperature_c)?;
        Ok(n * omega / speed_of_light::<T>())
    }

    /// `(n, dn/dω, d²n/dω²)` at `omega` (rad/fs).
    pub fn omega_derivatives(&self, omega: T, temperature_c: T) -> Result<(T, T, T), MaterialError> {
        let wl = omega_to_wavelength_nm(omega);
        let d = self.index_derivatives(wl, temperature_c)?;
        let lambda = wl / lit(1000.0);
        let ratio = lambda / omega;
        let dn_dw = -d.dn_dlambda * ratio;
        let d2n_dw2 = d.d2n_dlambda2 * ratio * ratio + d.dn_dlambda * lit::<T>(2.0) * lambda / (omega * omega);
        Ok((d.n, dn_dw, d2n_dw2))
    }
}

/// Phase index at `wavelength_nm`. Glass formulas ignore `temperature_c`.
pub fn refractive_index<T: Real>(
    material: &MaterialModel<T>,
    wavelength_nm: T,
    temperature_c: T,
) -> Result<T, MaterialError> {
    material.check_wavelength(wavelength_nm)?;
    let lambda = wavelength_nm / lit(1000.0);
    let (eps, _, _) = material.formula.epsilon(lambda * lambda, temperature_c);
    Ok(eps.sqrt())
}

/// Phase sampled on a uniform angular-frequency grid (rad/fs).
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralPhase<T> {
    pub omega: UniformGrid<T>,
    pub phase: Vec<T>,
}

impl<T: Real> SpectralPhase<T> {
    pub fn zeros(omega: UniformGrid<T>) -> Self {
        Self {
            omega,
            phase: vec![T::zero(); omega.len()],
        }
    }

    pub fn from_fn(omega: UniformGrid<T>, f: impl Fn(T) -> T) -> Self {
        let phase = omega.iter().map(f).collect();
        Self { omega, phase }
    }

    pub fn is_finite(&self) -> bool {
        self.phase.iter().all(|p| p.is_finite())
    }

    /// Sample-wise sum; both phases must share the same grid.
    pub fn add(&self, other: &Self) -> Result<Self, MaterialError> {
        if self.omega != other.omega {
            return Err(MaterialError::InvalidArgument(
                "spectral phases live on different grids".into(),
            ));
        }
        let phase = self.phase.iter().zip(&other.phase).map(|(&a, &b)| a + b).collect();
        Ok(Self {
            omega: self.omega,
            phase,
        })
    }
}

/// Phase `n(ω)·ω·d/c` accumulated through a slab of thickness `thickness_mm`.
pub fn spectral_phase_of_slab<T: Real>(
    material: &MaterialModel<T>,
    thickness_mm: T,
    grid: &UniformGrid<T>,
    temperature_c: T,
) -> Result<SpectralPhase<T>, MaterialError> {
    if !(thickness_mm >= T::zero()) {
        return Err(MaterialError::InvalidArgument(format!(
            "slab thickness must be non-negative, got {} mm",
            to_f64(thickness_mm)
        )));
    }
    // wavelength is monotone in omega, so checking the ends covers the grid
    material.check_wavelength(omega_to_wavelength_nm(grid.start()))?;
    material.check_wavelength(omega_to_wavelength_nm(grid.end()))?;
    let d_um = thickness_mm * lit(1000.0);
    let phase = grid
        .iter()
        .map(|w| material.wavenumber(w, temperature_c).map(|k| k * d_um))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(SpectralPhase { omega: *grid, phase })
}

/// Slab group-delay dispersion `d²φ/dω²` in fs² at `wavelength_nm`.
pub fn group_delay_dispersion<T: Real>(
    material: &MaterialModel<T>,
    thickness_mm: T,
    wavelength_nm: T,
    temperature_c: T,
) -> Result<T, MaterialError> {
    let omega = crate::scalar::wavelength_nm_to_omega(wavelength_nm);
    let (_, dn, d2n) = material.omega_derivatives(omega, temperature_c)?;
    let d_um = thickness_mm * lit(1000.0);
    Ok(d_um / speed_of_light::<T>() * (lit::<T>(2.0) * dn + omega * d2n))
}

/// Derivatives `φ⁽¹⁾ … φ⁽ᵐᵃˣ⁾` of a sampled phase at `center_omega`
/// (fs, fs², fs³, fs⁴), from a local least-squares polynomial fit.
pub fn taylor_dispersion<T: Real>(
    phase: &SpectralPhase<T>,
    center_omega: T,
    max_order: usize,
) -> Result<Vec<T>, MaterialError> {
    if max_order == 0 || max_order > 4 {
        return Err(MaterialError::InvalidArgument(format!(
            "taylor_dispersion supports orders 1..=4, got {max_order}"
        )));
    }
    let degree = max_order + 2;
    let grid = phase.omega;
    let half_window = lit::<T>(0.03).max(grid.step() * lit((degree + 2) as f64));
    let lo = center_omega - half_window;
    let hi = center_omega + half_window;
    if lo < grid.start() || hi > grid.end() {
        return Err(MaterialError::InvalidArgument(format!(
            "expansion center {} rad/fs too close to the grid edge [{}, {}]",
            to_f64(center_omega),
            to_f64(grid.start()),
            to_f64(grid.end())
        )));
    }
    let first = ((lo - grid.start()) / grid.step()).ceil().to_usize().unwrap_or(0);
    let last = ((hi - grid.start()) / grid.step())
        .floor()
        .to_usize()
        .unwrap_or(0)
        .min(grid.len() - 1);

    // Remove the chord through the window ends; it only shifts the first
    // derivative and keeps the fitted values O(1).
    let (x0, y0) = (grid.at(first), phase.phase[first]);
    let (x1, y1) = (grid.at(last), phase.phase[last]);
    let chord_slope = (y1 - y0) / (x1 - x0);

    let m = degree + 1;
    let mut ata = vec![vec![0.0_f64; m]; m];
    let mut aty = vec![0.0_f64; m];
    let w = to_f64(half_window);
    let c = to_f64(center_omega);
    for i in first..=last {
        let omega = to_f64(grid.at(i));
        let x = (omega - c) / w;
        let y = to_f64(phase.phase[i]) - (to_f64(y0) + to_f64(chord_slope) * (omega - to_f64(x0)));
        let mut pw = vec![1.0_f64; m];
        for k in 1..m {
            pw[k] = pw[k - 1] * x;
        }
        for r in 0..m {
            aty[r] += pw[r] * y;
            for s in 0..m {
                ata[r][s] += pw[r] * pw[s];
            }
        }
    }
    let coeffs = solve_dense(ata, aty)
        .ok_or_else(|| MaterialError::InvalidArgument("singular fit in taylor_dispersion".into()))?;
    let mut out = Vec::with_capacity(max_order);
    let mut factorial = 1.0;
    for (k, c) in coeffs.iter().enumerate().take(max_order + 1).skip(1) {
        factorial *= k as f64;
        let mut d = c * factorial / w.powi(k as i32);
        if k == 1 {
            d += to_f64(chord_slope);
        }
        out.push(lit(d));
    }
    Ok(out)
}

/// Gaussian elimination with partial pivoting for a small dense system.
#[allow(clippy::needless_range_loop)]
fn solve_dense(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Option<Vec<f64>> {
    let n = b.len();
    for col in 0..n {
        let pivot = (col..n).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))?;
        if a[pivot][col].abs() < 1e-300 {
            return None;
        }
        a.swap(col, pivot);
        b.swap(col, pivot);
        for row in col + 1..n {
            let f = a[row][col] / a[col][col];
            for k in col..n {
                a[row][k] -= f * a[col][k];
            }
            b[row] -= f * b[col];
        }
    }
    let mut x = vec![0.0; n];
    for row in (0..n).rev() {
        let s: f64 = (row + 1..n).map(|k| a[row][k] * x[k]).sum();
        x[row] = (b[row] - s) / a[row][row];
    }
    Some(x)
}

/// Named collection of material models.
#[derive(Debug, Clone)]
pub struct MaterialLibrary<T> {
    materials: BTreeMap<String, Arc<MaterialModel<T>>>,
}

impl<T: Real> MaterialLibrary<T> {
    /// The data file shipped with the crate.
    pub fn bundled() -> Self {
        Self::from_text(BUNDLED_MATERIALS).expect("bundled materials data is valid")
    }

    pub fn load(path: &Path) -> Result<Self, MaterialError> {
        let text = std::fs::read_to_string(path).map_err(|e| MaterialError::Io(format!("{}: {e}", path.display())))?;
        Self::from_text(&text)
    }

    pub fn from_text(text: &str) -> Result<Self, MaterialError> {
        let mut materials = BTreeMap::new();
        for section in kv::parse(text)? {
            if section.name != "material" {
                return Err(kv::KvError::new(section.line, format!("unexpected section [{}]", section.name)).into());
            }
            section.reject_unknown(&[
                "name",
                "formula_id",
                "coefficients",
                "valid_range_nm",
                "temperature_terms",
            ])?;
            let name = section.require("name")?.value.clone();
            let id = section.require("formula_id")?;
            let coeffs = section.require("coefficients")?.parse_list()?;
            let range_entry = section.require("valid_range_nm")?;
            let range = range_entry.parse_list()?;
            if range.len() != 2 || !(range[0] > 0.0 && range[0] < range[1]) {
                return Err(kv::KvError::new(range_entry.line, "valid_range_nm needs `min, max`").into());
            }
            let temps = section
                .get("temperature_terms")
                .map(|e| e.parse_list().map(|v| (v, e.line)))
                .transpose()?;
            let bad_count = |what: &str, want: usize, line: usize| -> MaterialError {
                kv::KvError::new(line, format!("{name}: {what} needs {want} values")).into()
            };
            let formula = match id.value.as_str() {
                "sellmeier3" => {
                    if coeffs.len() != 6 {
                        return Err(bad_count("coefficients", 6, id.line));
                    }
                    if temps.is_some() {
                        return Err(kv::KvError::new(
                            id.line,
                            format!("{name}: sellmeier3 takes no temperature_terms"),
                        )
                        .into());
                    }
                    DispersionFormula::Sellmeier {
                        b: [lit(coeffs[0]), lit(coeffs[2]), lit(coeffs[4])],
                        c: [lit(coeffs[1]), lit(coeffs[3]), lit(coeffs[5])],
                    }
                }
                "mgo_ln_extraordinary" => {
                    if coeffs.len() != 6 {
                        return Err(bad_count("coefficients", 6, id.line));
                    }
                    let (t, line) = temps
                        .ok_or_else(|| kv::KvError::new(id.line, format!("{name}: temperature_terms required")))?;
                    if t.len() != 6 {
                        return Err(bad_count("temperature_terms", 6, line));
                    }
                    DispersionFormula::MgoLnExtraordinary {
                        a: std::array::from_fn(|i| lit(coeffs[i])),
                        b: std::array::from_fn(|i| lit(t[i])),
                        t0: lit(t[4]),
                        t1: lit(t[5]),
                    }
                }
                other => {
                    return Err(MaterialError::UnknownFormula {
                        id: other.to_string(),
                        line: id.line,
                    })
                }
            };
            let model = MaterialModel::new(name.clone(), formula, (lit(range[0]), lit(range[1])));
            materials.insert(name, Arc::new(model));
        }
        Ok(Self { materials })
    }

    pub fn get(&self, name: &str) -> Result<Arc<MaterialModel<T>>, MaterialError> {
        self.materials
            .get(name)
            .cloned()
            .ok_or_else(|| MaterialError::UnknownMaterial(name.to_string()))
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.materials.keys().map(String::as_str)
    }
}
