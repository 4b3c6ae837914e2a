//! Recursive-descent parser for the path expression language.
//!
//! Grammar, lowest precedence first:
//!
//! ```text
//! expr    := term (('+' | '-') term)*
//! term    := unary (('*' | '/') unary)*
//! unary   := ('-' | '+') unary | power
//! power   := primary ('^' UINT)*
//! primary := NUMBER | IDENT | FUNC '(' expr ')' | '(' expr ')'
//! ```
//!
//! Binary operators are left-associative, so `x^2^3` is `(x^2)^3` and
//! `-x^2` is `-(x^2)`.

use super::ast::{BinaryOp, Expr, ExprKind, Span, UnaryOp};
use super::ExprError;

/// Names an expression may reference, split by role.
#[derive(Debug, Clone, Default)]
pub struct SymbolTable {
    pub variables: Vec<String>,
    pub parameters: Vec<String>,
}

impl SymbolTable {
    pub fn new<V, P>(variables: V, parameters: P) -> Self
    where
        V: IntoIterator,
        V::Item: Into<String>,
        P: IntoIterator,
        P::Item: Into<String>,
    {
        Self {
            variables: variables.into_iter().map(Into::into).collect(),
            parameters: parameters.into_iter().map(Into::into).collect(),
        }
    }

    pub fn is_variable(&self, name: &str) -> bool {
        self.variables.iter().any(|v| v == name)
    }

    pub fn is_parameter(&self, name: &str) -> bool {
        self.parameters.iter().any(|p| p == name)
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(f64),
    Ident(String),
    Plus,
    Minus,
    Star,
    Slash,
    Caret,
    LParen,
    RParen,
    End,
}

impl Tok {
    fn describe(&self) -> String {
        match self {
            Tok::Num(v) => format!("number {v}"),
            Tok::Ident(s) => format!("identifier '{s}'"),
            Tok::Plus => "'+'".into(),
            Tok::Minus => "'-'".into(),
            Tok::Star => "'*'".into(),
            Tok::Slash => "'/'".into(),
            Tok::Caret => "'^'".into(),
            Tok::LParen => "'('".into(),
            Tok::RParen => "')'".into(),
            Tok::End => "end of input".into(),
        }
    }
}

#[derive(Debug, Clone)]
struct Token {
    tok: Tok,
    span: Span,
    /// Raw source slice, kept for exponent validation.
    text: String,
}

fn tokenize(src: &str) -> Result<Vec<Token>, ExprError> {
    let bytes = src.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i];
        if c.is_ascii_whitespace() {
            i += 1;
            continue;
        }
        let start = i;
        let simple = match c {
            b'+' => Some(Tok::Plus),
            b'-' => Some(Tok::Minus),
            b'*' => Some(Tok::Star),
            b'/' => Some(Tok::Slash),
            b'^' => Some(Tok::Caret),
            b'(' => Some(Tok::LParen),
            b')' => Some(Tok::RParen),
            _ => None,
        };
        if let Some(tok) = simple {
            i += 1;
            out.push(Token { tok, span: Span::new(start, i), text: src[start..i].to_string() });
            continue;
        }
        if c.is_ascii_digit() || c == b'.' {
            while i < bytes.len() && (bytes[i].is_ascii_digit() || bytes[i] == b'.') {
                i += 1;
            }
            if i < bytes.len() && (bytes[i] == b'e' || bytes[i] == b'E') {
                let mut j = i + 1;
                if j < bytes.len() && (bytes[j] == b'+' || bytes[j] == b'-') {
                    j += 1;
                }
                if j < bytes.len() && bytes[j].is_ascii_digit() {
                    while j < bytes.len() && bytes[j].is_ascii_digit() {
                        j += 1;
                    }
                    i = j;
                }
            }
            let text = &src[start..i];
            let value: f64 = text.parse().map_err(|_| ExprError::Syntax {
                pos: start,
                message: format!("malformed number '{text}'"),
            })?;
            out.push(Token { tok: Tok::Num(value), span: Span::new(start, i), text: text.to_string() });
            continue;
        }
        if c.is_ascii_alphabetic() || c == b'_' {
            while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_') {
                i += 1;
            }
            let text = &src[start..i];
            out.push(Token {
                tok: Tok::Ident(text.to_string()),
                span: Span::new(start, i),
                text: text.to_string(),
            });
            continue;
        }
        let ch = src[start..].chars().next().unwrap_or('?');
        return Err(ExprError::Syntax { pos: start, message: format!("unexpected character '{ch}'") });
    }
    out.push(Token { tok: Tok::End, span: Span::new(src.len(), src.len()), text: String::new() });
    Ok(out)
}

struct Parser<'a> {
    tokens: Vec<Token>,
    pos: usize,
    symbols: &'a SymbolTable,
}

impl<'a> Parser<'a> {
    fn peek(&self) -> &Token {
        &self.tokens[self.pos]
    }

    fn bump(&mut self) -> Token {
        let t = self.tokens[self.pos].clone();
        if self.pos + 1 < self.tokens.len() {
            self.pos += 1;
        }
        t
    }

    fn expect(&mut self, want: Tok) -> Result<Token, ExprError> {
        let t = self.peek().clone();
        if t.tok == want {
            Ok(self.bump())
        } else {
            Err(ExprError::Syntax {
                pos: t.span.start,
                message: format!("expected {}, found {}", want.describe(), t.tok.describe()),
            })
        }
    }

    fn expr(&mut self) -> Result<Expr, ExprError> {
        let mut lhs = self.term()?;
        loop {
            let op = match self.peek().tok {
                Tok::Plus => BinaryOp::Add,
                Tok::Minus => BinaryOp::Sub,
                _ => return Ok(lhs),
            };
            self.bump();
            let rhs = self.term()?;
            let span = lhs.span.join(rhs.span);
            lhs = Expr::new(ExprKind::Binary(op, Box::new(lhs), Box::new(rhs)), span);
        }
    }

    fn term(&mut self) -> Result<Expr, ExprError> {
        let mut lhs = self.unary()?;
        loop {
            let op = match self.peek().tok {
                Tok::Star => BinaryOp::Mul,
                Tok::Slash => BinaryOp::Div,
                _ => return Ok(lhs),
            };
            self.bump();
            let rhs = self.unary()?;
            let span = lhs.span.join(rhs.span);
            lhs = Expr::new(ExprKind::Binary(op, Box::new(lhs), Box::new(rhs)), span);
        }
    }

    fn unary(&mut self) -> Result<Expr, ExprError> {
        match self.peek().tok {
            Tok::Minus => {
                let t = self.bump();
                let arg = self.unary()?;
                let span = t.span.join(arg.span);
                Ok(Expr::new(ExprKind::Unary(UnaryOp::Neg, Box::new(arg)), span))
            }
            Tok::Plus => {
                self.bump();
                self.unary()
            }
            _ => self.power(),
        }
    }

    fn power(&mut self) -> Result<Expr, ExprError> {
        let mut base = self.primary()?;
        while self.peek().tok == Tok::Caret {
            self.bump();
            let t = self.bump();
            let exponent = match t.tok {
                Tok::Num(_) if t.text.bytes().all(|b| b.is_ascii_digit()) => {
                    t.text.parse::<u32>().map_err(|_| ExprError::NonIntegerExponent { pos: t.span.start })?
                }
                Tok::End => {
                    return Err(ExprError::Syntax {
                        pos: t.span.start,
                        message: "expected exponent, found end of input".into(),
                    })
                }
                _ => return Err(ExprError::NonIntegerExponent { pos: t.span.start }),
            };
            let span = base.span.join(t.span);
            base = Expr::new(ExprKind::Pow(Box::new(base), exponent), span);
        }
        Ok(base)
    }

    fn primary(&mut self) -> Result<Expr, ExprError> {
        let t = self.bump();
        match t.tok {
            Tok::Num(v) => Ok(Expr::new(ExprKind::Const(v), t.span)),
            Tok::LParen => {
                let inner = self.expr()?;
                let close = self.expect(Tok::RParen)?;
                Ok(Expr::new(inner.kind, t.span.join(close.span)))
            }
            Tok::Ident(name) => {
                if let Some(op) = UnaryOp::from_function_name(&name) {
                    if !self.symbols.is_variable(&name) && !self.symbols.is_parameter(&name) {
                        self.expect(Tok::LParen)?;
                        let arg = self.expr()?;
                        let close = self.expect(Tok::RParen)?;
                        return Ok(Expr::new(ExprKind::Unary(op, Box::new(arg)), t.span.join(close.span)));
                    }
                }
                if self.symbols.is_variable(&name) {
                    Ok(Expr::new(ExprKind::Var(name), t.span))
                } else if self.symbols.is_parameter(&name) {
                    Ok(Expr::new(ExprKind::Param(name), t.span))
                } else if name == "pi" {
                    Ok(Expr::new(ExprKind::Const(std::f64::consts::PI), t.span))
                } else {
                    Err(ExprError::UndeclaredIdentifier { name, pos: t.span.start })
                }
            }
            other => Err(ExprError::Syntax {
                pos: t.span.start,
                message: format!("expected a number, identifier or '(', found {}", other.describe()),
            }),
        }
    }
}

/// Parses `src` against the declared symbols.
///
/// Function names (`sin`, `cos`, `tan`, `exp`, `ln`, `sqrt`) and the constant
/// `pi` are built in unless shadowed by a declared symbol.
pub fn parse_expression(src: &str, symbols: &SymbolTable) -> Result<Expr, ExprError> {
    if src.trim().is_empty() {
        return Err(ExprError::Syntax { pos: 0, message: "empty expression".into() });
    }
    let tokens = tokenize(src)?;
    let mut p = Parser { tokens, pos: 0, symbols };
    let e = p.expr()?;
    let t = p.peek();
    if t.tok != Tok::End {
        return Err(ExprError::Syntax {
            pos: t.span.start,
            message: format!("unexpected {} after expression", t.tok.describe()),
        });
    }
    Ok(e)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn syms() -> SymbolTable {
        SymbolTable::new(["x", "y"], ["r"])
    }

    #[test]
    fn circle_precedence() {
        let e = parse_expression("x^2 + y^2 - r^2", &syms()).unwrap();
        let want = Expr::binary(
            BinaryOp::Sub,
            Expr::binary(BinaryOp::Add, Expr::pow(Expr::var("x"), 2), Expr::pow(Expr::var("y"), 2)),
            Expr::pow(Expr::param("r"), 2),
        );
        assert_eq!(e, want);
    }

    #[test]
    fn single_variable() {
        let e = parse_expression("x", &SymbolTable::new(["x"], Vec::<String>::new())).unwrap();
        assert_eq!(e, Expr::var("x"));
    }

    #[test]
    fn unary_minus_after_binary() {
        let e = parse_expression("2*x + -3", &syms()).unwrap();
        let want = Expr::binary(
            BinaryOp::Add,
            Expr::binary(BinaryOp::Mul, Expr::constant(2.0), Expr::var("x")),
            Expr::unary(UnaryOp::Neg, Expr::constant(3.0)),
        );
        assert_eq!(e, want);
    }

    #[test]
    fn power_binds_tighter_than_negation() {
        let e = parse_expression("-x^2", &syms()).unwrap();
        assert_eq!(e, Expr::unary(UnaryOp::Neg, Expr::pow(Expr::var("x"), 2)));
        let e = parse_expression("x^2^3", &syms()).unwrap();
        assert_eq!(e, Expr::pow(Expr::pow(Expr::var("x"), 2), 3));
    }

    #[test]
    fn left_associative_subtraction_and_division() {
        let e = parse_expression("x - y - r", &syms()).unwrap();
        assert_eq!(
            e,
            Expr::binary(
                BinaryOp::Sub,
                Expr::binary(BinaryOp::Sub, Expr::var("x"), Expr::var("y")),
                Expr::param("r")
            )
        );
        let e = parse_expression("x / y * r", &syms()).unwrap();
        assert_eq!(
            e,
            Expr::binary(
                BinaryOp::Mul,
                Expr::binary(BinaryOp::Div, Expr::var("x"), Expr::var("y")),
                Expr::param("r")
            )
        );
    }

    #[test]
    fn functions_and_pi() {
        let e = parse_expression("sin(x) + ln(pi)", &syms()).unwrap();
        assert_eq!(
            e,
            Expr::binary(
                BinaryOp::Add,
                Expr::unary(UnaryOp::Sin, Expr::var("x")),
                Expr::unary(UnaryOp::Ln, Expr::constant(std::f64::consts::PI))
            )
        );
    }

    #[test]
    fn scientific_literals() {
        let e = parse_expression("1.5e-3*x", &syms()).unwrap();
        assert_eq!(e, Expr::binary(BinaryOp::Mul, Expr::constant(1.5e-3), Expr::var("x")));
    }

    #[test]
    fn error_positions() {
        match parse_expression("x + * y", &syms()) {
            Err(ExprError::Syntax { pos, .. }) => assert_eq!(pos, 4),
            other => panic!("{other:?}"),
        }
        match parse_expression("x + q", &syms()) {
            Err(ExprError::UndeclaredIdentifier { name, pos }) => {
                assert_eq!(name, "q");
                assert_eq!(pos, 4);
            }
            other => panic!("{other:?}"),
        }
        match parse_expression("(x + y", &syms()) {
            Err(ExprError::Syntax { pos, .. }) => assert_eq!(pos, 6),
            other => panic!("{other:?}"),
        }
        assert!(matches!(parse_expression("x y", &syms()), Err(ExprError::Syntax { pos: 2, .. })));
        assert!(matches!(parse_expression("x $ y", &syms()), Err(ExprError::Syntax { pos: 2, .. })));
        assert!(matches!(parse_expression("   ", &syms()), Err(ExprError::Syntax { .. })));
    }

    #[test]
    fn exponent_must_be_nonnegative_integer_literal() {
        for src in ["x^2.5", "x^y", "x^-1", "x^(2)", "x^1e2"] {
            assert!(
                matches!(parse_expression(src, &syms()), Err(ExprError::NonIntegerExponent { pos: 2 })),
                "{src}"
            );
        }
        assert!(parse_expression("x^0", &syms()).is_ok());
    }

    #[test]
    fn canonical_text() {
        let cases = [
            ("x^2 + y^2 - r^2", "x^2 + y^2 - r^2"),
            ("(x + y) * r", "(x + y) * r"),
            ("x - (y - r)", "x - (y - r)"),
            ("(-x)^2", "(-x)^2"),
            ("-(x^2)", "-x^2"),
            ("2*x + -3", "2 * x + -3"),
            ("sin((x))", "sin(x)"),
        ];
        for (src, want) in cases {
            let e = parse_expression(src, &syms()).unwrap();
            assert_eq!(e.to_string(), want);
            assert_eq!(parse_expression(&e.to_string(), &syms()).unwrap(), e);
        }
    }
}
