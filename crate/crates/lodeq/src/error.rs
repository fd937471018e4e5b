//! Crate-wide error type with machine-readable codes.

use thiserror::Error;

/// Byte/line/column location of a parse failure.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SourceSpan {
    pub begin: usize,
    pub end: usize,
    pub line: usize,
    pub column: usize,
}

impl SourceSpan {
    pub fn new(begin: usize, end: usize, line: usize, column: usize) -> Self {
        debug_assert!(begin <= end);
        SourceSpan {
            begin,
            end,
            line,
            column,
        }
    }
}

impl std::fmt::Display for SourceSpan {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}:{}", self.line, self.column)
    }
}

/// Stable identifiers for every failure mode, used by the CLI reports.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorCode {
    Syntax,
    UnknownIdentifier,
    ArityMismatch,
    NonRationalExponent,
    MissingField,
    DuplicateField,
    OrderTooLow,
    CoefficientCount,
    BadInterval,
    Unevaluable,
    SingularEvaluation,
    OutOfInterval,
    DerivativeOrderExceeded,
    VanishingTt,
    VanishingX1,
    IntervalMismatch,
    InverseConstruction,
    StepSizeUnderflow,
    SingularCoefficient,
    NonIntegrableSingularity,
    SubintervalCollapse,
    WronskianVanishes,
    SingularGaugeMatrix,
    Unsupported,
    Io,
    Usage,
}

impl ErrorCode {
    pub fn as_str(&self) -> &'static str {
        use ErrorCode::*;
        match self {
            Syntax => "E_SYNTAX",
            UnknownIdentifier => "E_UNKNOWN_IDENTIFIER",
            ArityMismatch => "E_ARITY_MISMATCH",
            NonRationalExponent => "E_NON_RATIONAL_EXPONENT",
            MissingField => "E_MISSING_FIELD",
            DuplicateField => "E_DUPLICATE_FIELD",
            OrderTooLow => "E_ORDER_TOO_LOW",
            CoefficientCount => "E_COEFFICIENT_COUNT",
            BadInterval => "E_BAD_INTERVAL",
            Unevaluable => "E_UNEVALUABLE",
            SingularEvaluation => "E_SINGULAR_EVALUATION",
            OutOfInterval => "E_OUT_OF_INTERVAL",
            DerivativeOrderExceeded => "E_DERIVATIVE_ORDER_EXCEEDED",
            VanishingTt => "E_VANISHING_TT",
            VanishingX1 => "E_VANISHING_X1",
            IntervalMismatch => "E_INTERVAL_MISMATCH",
            InverseConstruction => "E_INVERSE_CONSTRUCTION",
            StepSizeUnderflow => "E_STEP_SIZE_UNDERFLOW",
            SingularCoefficient => "E_SINGULAR_COEFFICIENT",
            NonIntegrableSingularity => "E_NON_INTEGRABLE_SINGULARITY",
            SubintervalCollapse => "E_SUBINTERVAL_COLLAPSE",
            WronskianVanishes => "E_WRONSKIAN_VANISHES",
            SingularGaugeMatrix => "E_SINGULAR_GAUGE_MATRIX",
            Unsupported => "E_UNSUPPORTED",
            Io => "E_IO",
            Usage => "E_USAGE",
        }
    }
}

impl std::fmt::Display for ErrorCode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Error)]
pub struct Error {
    pub code: ErrorCode,
    pub message: String,
    pub span: Option<SourceSpan>,
}

impl Error {
    pub fn new(code: ErrorCode, message: impl Into<String>) -> Self {
        Error {
            code,
            message: message.into(),
            span: None,
        }
    }

    pub fn with_span(code: ErrorCode, message: impl Into<String>, span: SourceSpan) -> Self {
        Error {
            code,
            message: message.into(),
            span: Some(span),
        }
    }
}

impl std::fmt::Display for Error {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self.span {
            Some(span) => write!(f, "{} at {}: {}", self.code, span, self.message),
            None => write!(f, "{}: {}", self.code, self.message),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
