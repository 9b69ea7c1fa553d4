//! The safety-property annotation language: syntax, tag registry, and the
//! set algebra used by the auditor.

pub mod algebra;
pub mod ast;
pub mod lint;
pub mod parser;
pub mod registry;
pub mod tagset;

pub use algebra::{coarse, coarse_all, expand_compound, implies, normalize, unconditional, AlgebraError};
pub use ast::{AriExpr, SpArg, SpExpr, SpTerm, Usage, ValRange};
pub use lint::{lint_sp, LintDiagnostic, LintKind, LintSeverity};
pub use parser::{parse_sp, parse_sp_list, SyntaxError};
pub use registry::{Category, Registry, TagDef};
pub use tagset::{Tag, TagSet};
