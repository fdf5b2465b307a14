use thiserror::Error;

/// Malformed textual input. Distinct from [`MathError`] so callers can
/// distinguish bad syntax from a sound mathematical refusal.
#[derive(Error, Debug, Clone, PartialEq, Eq)]
pub enum ParseError {
    #[error("invalid dyadic literal {0:?}, expected \"m\" or \"m/2^e\"")]
    Dyadic(String),
    #[error("invalid map serialization at line {line}: {msg}")]
    PlMap { line: usize, msg: String },
}

/// A mathematical refusal: the requested object does not exist or the
/// input lies outside the operation's domain.
#[derive(Error, Debug, Clone)]
pub enum MathError {
    #[error("node list does not define an orientation-preserving 1-periodic homeomorphism: {0}")]
    NotHomeomorphism(String),
    #[error("segment slope {dy}/{dx} is not a power of 2")]
    SlopeNotPowerOfTwo { dx: String, dy: String },
    #[error("residue mismatch at position {index}: theta({x}) = {rx} but theta({y}) = {ry}")]
    ThetaMismatch {
        index: usize,
        x: String,
        y: String,
        rx: u64,
        ry: u64,
    },
    #[error("not a member of the level-{n} group: segment [{a},{b}) has count {count} but slope log2 {slope}")]
    NotOmega {
        n: u32,
        a: String,
        b: String,
        count: String,
        slope: i64,
    },
    #[error("parameter out of range: {0}")]
    OutOfRange(String),
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("interval image straddles an integer, degree undefined")]
    DegreeStraddles,
    #[error("vector is not a member of the lattice")]
    LatticeNonMember,
    #[error("construction budget exceeded: {0}")]
    BudgetExceeded(String),
}
