use std::path::PathBuf;

use crate::delayscan::DelayScanError;
use crate::dispersion::DispersionError;
use crate::materials::MaterialError;
use crate::phasematch::PhaseMatchError;
use crate::scenario::ScenarioError;
use crate::spdc::SpdcError;

pub const EXIT_IO: i32 = 1;
pub const EXIT_VALIDATION: i32 = 2;
pub const EXIT_CONVERGENCE: i32 = 3;
pub const EXIT_SOLVER: i32 = 4;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("scenario: {0}")]
    Scenario(#[from] ScenarioError),
    #[error("materials: {0}")]
    Material(#[from] MaterialError),
    #[error("phasematch: {0}")]
    PhaseMatch(#[from] PhaseMatchError),
    #[error("spdc-core: {0}")]
    Spectrum(#[from] SpdcError),
    #[error("delayscan: {0}")]
    DelayScan(#[from] DelayScanError),
    #[error("dispersion-opt: {0}")]
    Dispersion(#[from] DispersionError),
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("case {case}: {source}")]
    Case {
        case: String,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Io { .. } => EXIT_IO,
            Error::Case { source, .. } => source.exit_code(),
            Error::Scenario(_) | Error::Material(_) => EXIT_VALIDATION,
            Error::PhaseMatch(e) => phasematch_code(e),
            Error::Spectrum(e) => spdc_code(e),
            Error::DelayScan(DelayScanError::Spectrum(e)) => spdc_code(e),
            Error::DelayScan(_) => EXIT_VALIDATION,
            Error::Dispersion(DispersionError::Spectrum(e)) => spdc_code(e),
            Error::Dispersion(_) => EXIT_VALIDATION,
        }
    }
}

fn phasematch_code(e: &PhaseMatchError) -> i32 {
    match e {
        PhaseMatchError::NoBracket { .. } => EXIT_SOLVER,
        _ => EXIT_VALIDATION,
    }
}

fn spdc_code(e: &SpdcError) -> i32 {
    match e {
        SpdcError::Convergence { .. } => EXIT_CONVERGENCE,
        SpdcError::PhaseMatch(p) => phasematch_code(p),
        _ => EXIT_VALIDATION,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exit_codes_follow_error_class() {
        let conv = SpdcError::Convergence {
            radial_intervals: 8,
            achieved: 0.1,
            tolerance: 1e-3,
        };
        assert_eq!(Error::from(conv.clone()).exit_code(), EXIT_CONVERGENCE);
        assert_eq!(
            Error::from(DelayScanError::Spectrum(conv)).exit_code(),
            EXIT_CONVERGENCE
        );
        let nb = PhaseMatchError::NoBracket {
            unit: "um",
            lo: 3.0,
            hi: 40.0,
            f_lo: 1.0,
            f_hi: 2.0,
        };
        assert_eq!(Error::from(SpdcError::PhaseMatch(nb.clone())).exit_code(), EXIT_SOLVER);
        assert_eq!(Error::from(nb).exit_code(), EXIT_SOLVER);
        let scn = ScenarioError {
            line: Some(3),
            message: "bad".into(),
        };
        assert_eq!(Error::from(scn).exit_code(), EXIT_VALIDATION);
        let io = Error::io("x", std::io::Error::other("boom"));
        assert_eq!(io.exit_code(), EXIT_IO);
        let case = Error::Case {
            case: "fig3a".into(),
            source: Box::new(io),
        };
        assert_eq!(case.exit_code(), EXIT_IO);
        assert!(case.to_string().starts_with("case fig3a: x: boom"));
    }
}
