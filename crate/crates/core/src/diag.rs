//! Diagnostics collected by the validators.
//!
//! Validation never stops at the first problem: every check appends to a
//! [`Diagnostics`] list, and the caller decides whether the result is fatal.
//! Each entry names the condition that failed and the object it failed on.

use std::fmt;

/// Machine-readable reason for a diagnostic.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum DiagCode {
    // Manifold structure.
    UnknownPiece,
    DuplicateId,
    BoundaryCountMismatch,
    Disconnected,
    EmptyManifold,
    ClosedPieceWithEdges,
    // Ordinariness.
    HalfSlope,
    FiberingExceptional,
    FiberingAssumed,
    // Link structure.
    UnknownKnot,
    KnotOutsidePiece,
    SingularWithoutSlope,
    SlopeOnRegular,
    BadIndexForKind,
    CabledPairInBase,
    // Link-to-decomposition conditions.
    MissingIndexZero,
    MissingIndexTwo,
    SeparatingTorusSideWithoutKnot,
    SingularFiberMultisetMismatch,
    CountIdentityViolated,
    // Consequence inequalities; must never fire on accepted pairs.
    TotalEndKnotsTooFew,
    BoundaryPlusEndKnotsTooFew,
    SingularExceedsEndKnots,
    NoIndexOneKnot,
    IndexOneKnotsTooFew,
    SingularTooFewClosed,
    SingularTooFewDisk,
    // Certificate verification.
    BlockShapeInvalid,
    BlockKnotCountWrong,
    BlockSlopesWrong,
    SigmaNotBijective,
    SigmaFlankingNotSingular,
    SigmaOrientationMismatch,
    GraphNotLyapunov,
    GraphBettiMismatch,
    BoundaryArithmeticWrong,
    GluingInvalid,
    ProjectionInvalid,
    BlockOrderInvalid,
    CableClassInvalid,
    // Torus sets.
    TorusSetInvalid,
    // Histories.
    HistoryStepInvalid,
}

impl fmt::Display for DiagCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self:?}")
    }
}

/// Severity of a diagnostic: errors make the verdict negative, warnings do not.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Severity {
    Error,
    Warning,
}

/// One validation finding.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Diagnostic {
    pub severity: Severity,
    pub code: DiagCode,
    /// Id of the piece, knot, torus, or block the finding refers to.
    pub subject: String,
    pub message: String,
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let tag = match self.severity {
            Severity::Error => "error",
            Severity::Warning => "warning",
        };
        write!(f, "{tag}[{}] {}: {}", self.code, self.subject, self.message)
    }
}

/// Accumulated findings of one validation pass.
#[derive(Clone, Debug, Default)]
pub struct Diagnostics {
    pub items: Vec<Diagnostic>,
}

impl Diagnostics {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn error(&mut self, code: DiagCode, subject: impl Into<String>, message: impl Into<String>) {
        self.items.push(Diagnostic {
            severity: Severity::Error,
            code,
            subject: subject.into(),
            message: message.into(),
        });
    }

    pub fn warning(&mut self, code: DiagCode, subject: impl Into<String>, message: impl Into<String>) {
        self.items.push(Diagnostic {
            severity: Severity::Warning,
            code,
            subject: subject.into(),
            message: message.into(),
        });
    }

    /// True when no error-severity finding is present (warnings allowed).
    pub fn is_clean(&self) -> bool {
        self.items.iter().all(|d| d.severity != Severity::Error)
    }

    pub fn has_code(&self, code: &DiagCode) -> bool {
        self.items.iter().any(|d| &d.code == code)
    }

    pub fn errors(&self) -> impl Iterator<Item = &Diagnostic> {
        self.items.iter().filter(|d| d.severity == Severity::Error)
    }

    pub fn merge(&mut self, other: Diagnostics) {
        self.items.extend(other.items);
    }
}

impl fmt::Display for Diagnostics {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for d in &self.items {
            writeln!(f, "{d}")?;
        }
        Ok(())
    }
}
