use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("duplicate individual id `{0}`")]
    DuplicateId(String),

    #[error("individual `{child}` references unknown parent `{parent}`")]
    MissingParent { child: String, parent: String },

    #[error("individual `{0}` has exactly one parent; give both or neither")]
    SingleParent(String),

    #[error("{role} `{parent}` of `{child}` has the wrong sex")]
    SexMismatch {
        child: String,
        parent: String,
        role: &'static str,
    },

    #[error("pedigree contains a cycle through `{0}`")]
    Cycle(String),

    #[error("meiosis order: {0}")]
    MeiosisOrder(String),

    #[error("{n} meioses exceeds the exhaustive-check cap of {cap}")]
    TooManyMeioses { n: usize, cap: usize },

    #[error("bit width mismatch: expected {expected}, got {got}")]
    WidthMismatch { expected: usize, got: usize },

    #[error("pedigree has no individuals of interest")]
    NoInterest,

    #[error("invalid partition: {0}")]
    InvalidPartition(String),

    #[error("invalid isometry: {0}")]
    InvalidIsometry(String),

    #[error("isometry `{0}` does not preserve the emission partition")]
    GeneratorViolatesEmission(String),

    #[error("partition violates the Markov property: {x1} and {x2} disagree on block {target}")]
    NotMarkov { x1: String, x2: String, target: String },

    #[error("unknown allele `{0}`")]
    UnknownAllele(String),

    #[error("allele frequencies: {0}")]
    Frequencies(String),

    #[error("genotype data: {0}")]
    Genotype(String),

    #[error("recombination fraction {0} outside [0, 0.5]")]
    Theta(f64),

    #[error("negative genetic distance {0}")]
    NegativeDistance(f64),

    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("refinement did not converge within {0} passes")]
    NoConvergence(usize),
}
