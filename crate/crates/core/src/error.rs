use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("invalid number `{0}`")]
    Number(String),
    #[error("probability {0} outside [0, 1]")]
    OutOfRange(String),
    #[error("invalid event name `{0}`")]
    EventName(String),
    #[error("empty conjunction")]
    EmptyConjunction,
    #[error("duplicate atom `{0}` in conjunction")]
    DuplicateAtom(String),
    #[error("unknown event `{0}`")]
    UnknownEvent(String),
    #[error("event `{0}` is not covered by the world's domain")]
    DomainMismatch(String),
    #[error("lower bound exceeds upper bound in {0}")]
    EmptyInterval(String),
    #[error("two constraints share the pair {0}")]
    DuplicateConstraint(String),

    #[error("constraint {0} is not between two distinct basic events")]
    NotBasic(String),
    #[error("the knowledge base is not connected")]
    NotConnected,
    #[error("the constraint graph contains a cycle through `{0}` and `{1}`")]
    Cycle(String, String),
    #[error("missing reverse constraint ({0}|{1})")]
    MissingReverse(String, String),
    #[error("constraint {0} has lower bound 0")]
    ZeroLowerBound(String),

    #[error("query premise and conclusion share `{0}`")]
    Overlap(String),
    #[error("the paths from premise to conclusion share no basic event")]
    NoCommonNode,
    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("{events} events exceed the world cap of {cap}")]
    WorldCap { events: usize, cap: usize },
    #[error("malformed linear program: {0}")]
    MalformedLp(String),

    #[error("line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },
}
