use alloc::string::String;

/// Every failure the core crate can report.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("alpha = {alpha} outside the admissible range |alpha| <= {alpha_max}")]
    Domain { alpha: f64, alpha_max: f64 },

    #[error("{0}")]
    Usage(String),

    #[error("basis lost orthogonality at degree {degree} (norm {norm:e})")]
    NumericalDegeneracy { degree: usize, norm: f64 },

    #[error("D-tilde is singular (|det| = {det:e}, scale {scale:e})")]
    DegenerateState { det: f64, scale: f64 },

    #[error("tilde transform is degenerate (det = {det:e})")]
    DegenerateTransform { det: f64 },

    #[error("non-physical state: {0}")]
    State(String),

    #[error("entropy Hessian is not positive definite (min eigenvalue {min_eig:e})")]
    NonConvexEntropy { min_eig: f64 },

    #[error("state is off the equilibrium manifold (|Q| = {residual:e})")]
    OffEquilibrium { residual: f64 },

    #[error("invalid certification parameter a = {a} (a_max = {a_max})")]
    CertificationParameter { a: f64, a_max: f64 },

    #[error("radiation block lost hyperbolicity (imaginary part {imag:e})")]
    Hyperbolicity { imag: f64 },

    #[error("CFL violation: dt * speed / dx = {courant}")]
    Cfl { courant: f64 },

    #[error("Newton iteration failed in cell {cell} after {halvings} step halvings")]
    NewtonFailure { cell: usize, halvings: usize },

    #[error("positivity watchdog tripped in cell {cell} at t = {t}: {what}")]
    Positivity { cell: usize, t: f64, what: String },

    #[error("initial layer does not decay in cell {cell} (rate {rate})")]
    LayerFailure { cell: usize, rate: f64 },

    #[error("grid mismatch: {0} vs {1} cells")]
    GridMismatch(usize, usize),
}

pub type Result<T> = core::result::Result<T, Error>;
