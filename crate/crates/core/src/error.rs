use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },

    #[error("line {line}: nonterminal `{name}` is used but never defined")]
    UndeclaredNonterminal { name: String, line: usize },

    #[error("start symbol `{0}` is not a declared nonterminal")]
    UndeclaredStart(String),

    #[error("symbol `{0}` is not declared in the grammar")]
    UndeclaredSymbol(String),

    #[error("grammar has no productions")]
    NoProductions,

    #[error("language contains epsilon")]
    EpsilonInLanguage,

    #[error("empty language: the start symbol derives no terminal string")]
    EmptyLanguage,

    #[error("character {0:?} is not in the terminal alphabet")]
    UnknownTerminal(char),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("start symbol does not span the input")]
    Unreachable,

    #[error("internal consistency error: {0}")]
    Inconsistent(String),

    #[error("oracle enumeration bound too small: need words up to length {needed}, have {have}")]
    OracleBound { needed: usize, have: usize },
}

pub type Result<T> = std::result::Result<T, Error>;
