//! Expression language for user-defined paths.
//!
//! Paths are written as scalar formulas over the runtime variables `x`, `y`
//! (implicit level sets) or `w` (parametric coordinates) and named
//! parameters. Parameters are substituted when a path is compiled; the
//! remaining tree is evaluated in hyper-dual arithmetic to obtain exact first
//! and second derivatives.

mod ast;
mod compile;
mod dual;
mod eval;
mod parser;

pub use ast::{BinaryOp, Expr, ExprKind, Span, UnaryOp};
pub use compile::{
    compile_implicit_path, compile_parametric_path, parse_path_file, CompiledImplicit, CompiledParametric,
    PathSource,
};
pub use dual::Dual2;
pub use eval::eval_second_order;
pub use parser::{parse_expression, SymbolTable};

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ExprError {
    #[error("syntax error at byte {pos}: {message}")]
    Syntax { pos: usize, message: String },
    #[error("undeclared identifier '{name}' at byte {pos}")]
    UndeclaredIdentifier { name: String, pos: usize },
    #[error("exponent at byte {pos} must be a nonnegative integer literal")]
    NonIntegerExponent { pos: usize },
    #[error("symbol '{name}' has no binding")]
    Unbound { name: String },
    #[error("'{name}' is a parameter, derivatives are only taken along variables")]
    NotAVariable { name: String },
    #[error("domain error in `{node}` (bytes {span}): {message}")]
    Domain { message: String, span: Span, node: String },
    #[error("expected {expected} coordinate expressions, got {got}")]
    Arity { expected: &'static str, got: usize },
    #[error("path file line {line}: {message}")]
    PathFile { line: usize, message: String },
}
