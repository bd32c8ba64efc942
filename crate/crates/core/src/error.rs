use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// The free-node block of the force-density matrix is singular (the
    /// candidate describes a mechanism).
    #[error("singular force-density equilibrium (condition estimate {condition:.3e})")]
    SingularEquilibrium { condition: f64 },

    /// The reduced stiffness matrix is not positive definite.
    #[error("singular stiffness matrix (condition estimate {condition:.3e})")]
    SingularStiffness { condition: f64 },

    #[error("total structural volume is zero")]
    ZeroVolume,

    #[error("front has {found} usable points, at least 3 are required")]
    TooFewPoints { found: usize },

    #[error("weighted-sum start point is infeasible: {0}")]
    StartInfeasible(String),

    #[error("invalid structure: {0}")]
    InvalidStructure(String),

    #[error("invalid configuration: {0}")]
    Config(String),
}

impl Error {
    /// True for the errors that mark an optimization candidate as infeasible.
    pub fn is_infeasible(&self) -> bool {
        matches!(
            self,
            Error::SingularEquilibrium { .. } | Error::SingularStiffness { .. } | Error::ZeroVolume
        )
    }
}
