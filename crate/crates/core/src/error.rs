use alloc::string::String;
use core::fmt;

/// Which standing topology assumption a rejected edge set violates.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TopologyViolation {
    /// A node label outside `1..=N+1`, or an edge pointing into a label that is not a follower.
    NodeOutOfRange {
        from: usize,
        to: usize,
    },
    SelfLoop {
        node: usize,
    },
    /// The leader (node N+1) must not receive information from anyone.
    LeaderHasIncoming {
        from: usize,
    },
    /// The follower subgraph must be undirected: `(i, j)` present without `(j, i)`.
    AsymmetricFollowerEdge {
        from: usize,
        to: usize,
    },
    /// No directed path from the leader reaches these followers (spanning-tree assumption).
    LeaderUnreachable {
        followers: alloc::vec::Vec<usize>,
    },
    NoFollowers,
}

impl fmt::Display for TopologyViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::NodeOutOfRange { from, to } => {
                write!(f, "edge ({from}, {to}) references a node outside the graph")
            }
            Self::SelfLoop { node } => write!(f, "self-loop on node {node}"),
            Self::LeaderHasIncoming { from } => {
                write!(f, "leader node has an incoming edge from node {from}")
            }
            Self::AsymmetricFollowerEdge { from, to } => write!(
                f,
                "follower subgraph must be undirected: edge ({from}, {to}) has no reverse ({to}, {from})"
            ),
            Self::LeaderUnreachable { followers } => write!(
                f,
                "graph has no spanning tree rooted at the leader: followers {followers:?} are unreachable"
            ),
            Self::NoFollowers => write!(f, "graph must contain at least one follower"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("invalid topology: {0}")]
    InvalidTopology(TopologyViolation),

    #[error("H matrix is not positive definite (min eigenvalue {min_eigenvalue:e})")]
    NotPositiveDefinite { min_eigenvalue: f64 },

    #[error("dimension mismatch for {what}: expected {expected}, got {got}")]
    DimensionMismatch {
        what: &'static str,
        expected: usize,
        got: usize,
    },

    #[error("index {index} out of range (len {len})")]
    IndexOutOfRange { index: usize, len: usize },

    #[error("invalid gain: {0}")]
    InvalidGain(String),

    #[error("inertia matrix is singular or indefinite at q2 = {q2} (det {det:e})")]
    SingularInertia { q2: f64, det: f64 },

    #[error("non-finite derivative at t = {t}, component {component}")]
    NonFiniteDerivative { t: f64, component: usize },

    #[error("non-finite state at t = {t}, component {component} ({name})")]
    NonFiniteState {
        t: f64,
        component: usize,
        name: String,
    },

    #[error("insufficient samples: {0}")]
    InsufficientSamples(String),

    #[error("invalid model: {0}")]
    InvalidModel(String),

    #[error("invalid scenario: {0}")]
    InvalidScenario(String),
}

pub type Result<T, E = Error> = core::result::Result<T, E>;
