use std::fmt;

/// Byte range in the source text a node was parsed from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Span {
    pub start: usize,
    pub end: usize,
}

impl Span {
    pub fn new(start: usize, end: usize) -> Self {
        Self { start, end }
    }

    pub fn join(self, other: Span) -> Span {
        Span::new(self.start.min(other.start), self.end.max(other.end))
    }
}

impl fmt::Display for Span {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}..{}", self.start, self.end)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum UnaryOp {
    Neg,
    Sin,
    Cos,
    Tan,
    Exp,
    Ln,
    Sqrt,
}

impl UnaryOp {
    /// Function name as written in source, `None` for negation.
    pub fn function_name(self) -> Option<&'static str> {
        match self {
            UnaryOp::Neg => None,
            UnaryOp::Sin => Some("sin"),
            UnaryOp::Cos => Some("cos"),
            UnaryOp::Tan => Some("tan"),
            UnaryOp::Exp => Some("exp"),
            UnaryOp::Ln => Some("ln"),
            UnaryOp::Sqrt => Some("sqrt"),
        }
    }

    pub fn from_function_name(name: &str) -> Option<Self> {
        Some(match name {
            "sin" => UnaryOp::Sin,
            "cos" => UnaryOp::Cos,
            "tan" => UnaryOp::Tan,
            "exp" => UnaryOp::Exp,
            "ln" => UnaryOp::Ln,
            "sqrt" => UnaryOp::Sqrt,
            _ => return None,
        })
    }

    pub const FUNCTIONS: [UnaryOp; 6] = [
        UnaryOp::Sin,
        UnaryOp::Cos,
        UnaryOp::Tan,
        UnaryOp::Exp,
        UnaryOp::Ln,
        UnaryOp::Sqrt,
    ];
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinaryOp {
    Add,
    Sub,
    Mul,
    Div,
}

impl BinaryOp {
    fn symbol(self) -> char {
        match self {
            BinaryOp::Add => '+',
            BinaryOp::Sub => '-',
            BinaryOp::Mul => '*',
            BinaryOp::Div => '/',
        }
    }

    fn precedence(self) -> u8 {
        match self {
            BinaryOp::Add | BinaryOp::Sub => 1,
            BinaryOp::Mul | BinaryOp::Div => 2,
        }
    }
}

#[derive(Debug, Clone)]
pub enum ExprKind {
    Const(f64),
    /// Runtime variable (x, y, z or w).
    Var(String),
    /// Named parameter, bound once when a path is compiled.
    Param(String),
    Unary(UnaryOp, Box<Expr>),
    Binary(BinaryOp, Box<Expr>, Box<Expr>),
    /// Integer power with a nonnegative constant exponent.
    Pow(Box<Expr>, u32),
}

/// Expression tree node. Equality compares structure only; spans are ignored.
#[derive(Debug, Clone)]
pub struct Expr {
    pub kind: ExprKind,
    pub span: Span,
}

impl PartialEq for Expr {
    fn eq(&self, other: &Self) -> bool {
        use ExprKind::*;
        match (&self.kind, &other.kind) {
            (Const(a), Const(b)) => a.to_bits() == b.to_bits(),
            (Var(a), Var(b)) | (Param(a), Param(b)) => a == b,
            (Unary(oa, a), Unary(ob, b)) => oa == ob && a == b,
            (Binary(oa, la, ra), Binary(ob, lb, rb)) => oa == ob && la == lb && ra == rb,
            (Pow(a, na), Pow(b, nb)) => na == nb && a == b,
            _ => false,
        }
    }
}

impl Expr {
    pub fn new(kind: ExprKind, span: Span) -> Self {
        Self { kind, span }
    }

    pub fn constant(v: f64) -> Self {
        Self::new(ExprKind::Const(v), Span::default())
    }

    pub fn var(name: &str) -> Self {
        Self::new(ExprKind::Var(name.to_string()), Span::default())
    }

    pub fn param(name: &str) -> Self {
        Self::new(ExprKind::Param(name.to_string()), Span::default())
    }

    pub fn unary(op: UnaryOp, arg: Expr) -> Self {
        Self::new(ExprKind::Unary(op, Box::new(arg)), Span::default())
    }

    pub fn binary(op: BinaryOp, lhs: Expr, rhs: Expr) -> Self {
        Self::new(ExprKind::Binary(op, Box::new(lhs), Box::new(rhs)), Span::default())
    }

    pub fn pow(base: Expr, exponent: u32) -> Self {
        Self::new(ExprKind::Pow(Box::new(base), exponent), Span::default())
    }

    pub fn depth(&self) -> usize {
        match &self.kind {
            ExprKind::Const(_) | ExprKind::Var(_) | ExprKind::Param(_) => 1,
            ExprKind::Unary(_, a) | ExprKind::Pow(a, _) => 1 + a.depth(),
            ExprKind::Binary(_, l, r) => 1 + l.depth().max(r.depth()),
        }
    }

    /// Calls `f` on every variable and parameter name in the tree.
    pub fn visit_symbols<'a>(&'a self, f: &mut impl FnMut(&'a str, bool, Span)) {
        match &self.kind {
            ExprKind::Const(_) => {}
            ExprKind::Var(n) => f(n, true, self.span),
            ExprKind::Param(n) => f(n, false, self.span),
            ExprKind::Unary(_, a) | ExprKind::Pow(a, _) => a.visit_symbols(f),
            ExprKind::Binary(_, l, r) => {
                l.visit_symbols(f);
                r.visit_symbols(f);
            }
        }
    }

    /// Replaces every parameter for which `lookup` yields a value by a constant.
    pub fn bind_params(&self, lookup: &impl Fn(&str) -> Option<f64>) -> Expr {
        let kind = match &self.kind {
            ExprKind::Param(n) => match lookup(n) {
                Some(v) => ExprKind::Const(v),
                None => ExprKind::Param(n.clone()),
            },
            ExprKind::Const(_) | ExprKind::Var(_) => self.kind.clone(),
            ExprKind::Unary(op, a) => ExprKind::Unary(*op, Box::new(a.bind_params(lookup))),
            ExprKind::Binary(op, l, r) => ExprKind::Binary(
                *op,
                Box::new(l.bind_params(lookup)),
                Box::new(r.bind_params(lookup)),
            ),
            ExprKind::Pow(a, n) => ExprKind::Pow(Box::new(a.bind_params(lookup)), *n),
        };
        Expr::new(kind, self.span)
    }

    fn precedence(&self) -> u8 {
        match &self.kind {
            ExprKind::Binary(op, _, _) => op.precedence(),
            ExprKind::Unary(UnaryOp::Neg, _) => 3,
            ExprKind::Const(v) if v.is_sign_negative() => 3,
            ExprKind::Pow(_, _) => 4,
            _ => 5,
        }
    }

    fn fmt_child(&self, f: &mut fmt::Formatter<'_>, min_prec: u8) -> fmt::Result {
        if self.precedence() < min_prec {
            write!(f, "({self})")
        } else {
            write!(f, "{self}")
        }
    }
}

/// Canonical text: minimal parentheses, binary operators spaced, re-parses to
/// an equivalent tree.
impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.kind {
            ExprKind::Const(v) => {
                if v.is_sign_negative() {
                    write!(f, "-{}", -v)
                } else {
                    write!(f, "{v}")
                }
            }
            ExprKind::Var(n) | ExprKind::Param(n) => f.write_str(n),
            ExprKind::Unary(UnaryOp::Neg, a) => {
                f.write_str("-")?;
                a.fmt_child(f, 3)
            }
            ExprKind::Unary(op, a) => write!(f, "{}({a})", op.function_name().unwrap_or("?")),
            ExprKind::Binary(op, l, r) => {
                let p = op.precedence();
                l.fmt_child(f, p)?;
                write!(f, " {} ", op.symbol())?;
                r.fmt_child(f, p + 1)
            }
            ExprKind::Pow(a, n) => {
                a.fmt_child(f, 4)?;
                write!(f, "^{n}")
            }
        }
    }
}
