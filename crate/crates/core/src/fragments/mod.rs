//! The boolean fragment: recognition, translation of specifications to
//! deterministic finite state transducers, composition and closure,
//! equivalence checking, and elimination of a single `delay`.

mod delay_elim;
mod dfst;
mod equiv;
mod machines;
mod translate;
mod val;

pub use delay_elim::delay_eliminate;
pub use dfst::{closure, compose_parallel, run_dfst, Dfst};
pub use equiv::{dfst_equivalent, Equivalence};
pub use machines::{equation_dfst, BoolEquation, BoolOp};
pub use translate::{is_bool_fragment, to_dfst, BoolSpec};
pub use val::{
    beta_times, decode_alpha, decode_beta, encode_alpha, encode_beta, encode_beta_at, format_letter, BetaWord,
    EncodingError, Letter, Val,
};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum FragmentError {
    #[error("not in the boolean fragment: {0}")]
    NotBoolFragment(String),
    #[error("output `{0}` is produced by both transducers")]
    OutputNameClash(String),
    #[error("no unique consistent assignment for fed-back streams in state {state} on letter {letter} ({candidates} candidates)")]
    NoConsistentAssignment { state: String, letter: String, candidates: usize },
    #[error("letter {position} ({letter}) is not accepted in state {state}")]
    LetterNotInAlphabet { position: usize, state: String, letter: String },
    #[error("transducers differ in their alphabets")]
    AlphabetMismatch,
    #[error("expected exactly one delay, found {0}")]
    NotSingleDelay(usize),
    #[error("{0}")]
    AlphabetTooLarge(String),
    #[error("line {line}: {message}")]
    Format { line: usize, message: String },
}
