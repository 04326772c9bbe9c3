use alloc::string::String;
use core::fmt;

/// Errors raised by mesh validation, generators and solvers.
#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// An edge with fewer or more than two incident faces.
    OpenSurface { edge: (usize, usize), faces: usize },
    /// Adjacent faces disagree on orientation across an edge.
    InconsistentOrientation { edge: (usize, usize) },
    /// A face with area below the degeneracy threshold.
    DegenerateFace { face: usize },
    /// Face references a vertex index that does not exist.
    InvalidIndex { face: usize },
    /// Ambient dimension must be 3 or 4 (and consistent within a file).
    AmbientDim(usize),
    /// Generator parameters cannot produce a valid closed mesh.
    InvalidSpec(String),
    /// Resolution too low to form a valid closed mesh.
    ResolutionTooLow(String),
    /// Operation requires a specific genus.
    GenusMismatch { expected: usize, got: usize },
    /// An inversion center is too close to the surface.
    SingularInversion,
    /// A cotangent weight exceeded the quality threshold.
    MeshQuality { face: usize },
    /// A single vertex atom carries more than half the tracefree energy.
    AtomicConcentration,
    /// Empty-ball search exceeded its radius cap.
    EmptyBallSearchFailed,
    /// Iterative linear solve did not reach the requested residual.
    LinearSolveFailure { residual: f64 },
    /// Newton iteration stagnated.
    NewtonStagnation { iterations: usize, residual: f64 },
    /// Missing beta value for a genus in the threshold table.
    MissingBeta { genus: usize },
    /// Period matrix is numerically singular.
    IllConditionedPeriods,
    /// Uniformization residual too large for downstream use.
    UniformizationResidual(f64),
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::OpenSurface { edge, faces } => write!(
                f,
                "open surface: edge ({}, {}) has {} incident faces, expected 2",
                edge.0, edge.1, faces
            ),
            Error::InconsistentOrientation { edge } => write!(
                f,
                "inconsistent orientation across edge ({}, {})",
                edge.0, edge.1
            ),
            Error::DegenerateFace { face } => write!(f, "degenerate face {face}"),
            Error::InvalidIndex { face } => write!(f, "face {face} references invalid vertex"),
            Error::AmbientDim(d) => write!(f, "ambient dimension must be 3 or 4, got {d}"),
            Error::InvalidSpec(msg) => write!(f, "invalid surface spec: {msg}"),
            Error::ResolutionTooLow(msg) => write!(f, "resolution too low: {msg}"),
            Error::GenusMismatch { expected, got } => {
                write!(f, "genus mismatch: expected {expected}, got {got}")
            }
            Error::SingularInversion => write!(f, "singular inversion: center too close to surface"),
            Error::MeshQuality { face } => {
                write!(f, "mesh quality: cotangent weight blow-up at face {face}")
            }
            Error::AtomicConcentration => {
                write!(f, "resolution insufficient for E/2 split: single-vertex atom exceeds E/2")
            }
            Error::EmptyBallSearchFailed => write!(f, "empty-ball search exceeded radius cap"),
            Error::LinearSolveFailure { residual } => {
                write!(f, "linear solve failure, residual {residual:e}")
            }
            Error::NewtonStagnation { iterations, residual } => write!(
                f,
                "Newton stagnation after {iterations} iterations, residual {residual:e}"
            ),
            Error::MissingBeta { genus } => write!(f, "missing beta entry for genus {genus}"),
            Error::IllConditionedPeriods => write!(f, "ill-conditioned period matrix"),
            Error::UniformizationResidual(r) => {
                write!(f, "uniformization residual too large: {r:e}")
            }
        }
    }
}

#[cfg(any(test, feature = "std"))]
impl std::error::Error for Error {}
