use crate::tabular::Var;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("empty dataset")]
    EmptyDataset,
    #[error("missing field {0}")]
    MissingField(Var),
    #[error("empty stratum")]
    EmptyStratum,
    #[error("variable {0} is not in the table")]
    UnknownVariable(Var),
    #[error("variable {0} appears more than once")]
    DuplicateVariable(Var),
    #[error("positivity violation: no mass at A={treatment}, C={confounder}")]
    Positivity { treatment: u8, confounder: u8 },
    #[error("degenerate labels: training data contains a single class")]
    DegenerateLabels,
    #[error("degenerate features: no predictor varies across the training rows")]
    DegenerateFeatures,
    #[error("singular adjustment at C={confounder}, Y={outcome} (1 - eps - delta = {determinant})")]
    SingularAdjustment {
        confounder: u8,
        outcome: u8,
        determinant: f64,
    },
    #[error("unestimable error rate: no rows with {given}={value}, C={confounder}, Y={outcome}")]
    UnestimableErrorRate { given: Var, value: u8, confounder: u8, outcome: u8 },
    #[error("unidentified at this joint")]
    Unidentified,
    #[error("all {0} imputation replicates failed")]
    AllReplicatesFailed(usize),
    #[error("text index {index} out of range for vocabulary of size {vocab_size}")]
    TextIndexOutOfRange { index: u32, vocab_size: usize },
    #[error("text indices must be strictly increasing")]
    UnsortedText,
    #[error("vocabulary size mismatch: expected {expected}, found {found}")]
    VocabMismatch { expected: usize, found: usize },
    #[error("invalid parameter: {0}")]
    InvalidParameter(&'static str),
}
