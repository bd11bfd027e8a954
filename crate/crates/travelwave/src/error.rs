use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("constitutive law: {0}")]
    Constitutive(String),
    #[error("profile construction: {0}")]
    Profile(String),
    #[error("enthalpy argument {h:.6e} outside the admissible interval ({lo:.6e}, {hi:.6e})")]
    Domain { h: f64, lo: f64, hi: f64 },
    #[error("vacuum guard at node (x={ix}, y={iy}): enthalpy argument {h:.6e}")]
    Vacuum { ix: usize, iy: usize, h: f64 },
    #[error("degenerate geometry: min J = {0:.3e}")]
    Geometry(f64),
    #[error("constraint violated: {0}")]
    Constraint(String),
    #[error("grid: {0}")]
    Grid(String),
    #[error("linear solve: {0}")]
    Singular(String),
    #[error("io: {0}")]
    Io(String),
    #[error("checksum mismatch: stored {stored:08x}, computed {computed:08x}")]
    Checksum { stored: u32, computed: u32 },
    #[error("format: {0}")]
    Format(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
