use std::collections::HashMap;

use super::ast::{BinaryOp, Expr, ExprKind, UnaryOp};
use super::dual::Dual2;
use super::ExprError;

impl Expr {
    /// Evaluates the tree in hyper-dual arithmetic. `leaf` maps variable and
    /// parameter names to seeded values.
    pub fn eval_dual(&self, leaf: &impl Fn(&ExprKind) -> Option<Dual2>) -> Result<Dual2, ExprError> {
        let out = match &self.kind {
            ExprKind::Const(v) => Dual2::constant(*v),
            ExprKind::Var(n) | ExprKind::Param(n) => {
                leaf(&self.kind).ok_or_else(|| ExprError::Unbound { name: n.clone() })?
            }
            ExprKind::Unary(op, a) => {
                let a = a.eval_dual(leaf)?;
                match op {
                    UnaryOp::Neg => -a,
                    UnaryOp::Sin => a.sin(),
                    UnaryOp::Cos => a.cos(),
                    UnaryOp::Tan => a.tan(),
                    UnaryOp::Exp => a.exp(),
                    UnaryOp::Ln => {
                        if a.value <= 0.0 {
                            return Err(self.domain(format!("ln of nonpositive value {}", a.value)));
                        }
                        a.ln()
                    }
                    UnaryOp::Sqrt => {
                        if a.value < 0.0 {
                            return Err(self.domain(format!("sqrt of negative value {}", a.value)));
                        }
                        if a.value == 0.0 && a.has_derivatives() {
                            return Err(self.domain("sqrt is not differentiable at 0".into()));
                        }
                        if a.value == 0.0 {
                            Dual2::constant(0.0)
                        } else {
                            a.sqrt()
                        }
                    }
                }
            }
            ExprKind::Binary(op, l, r) => {
                let l = l.eval_dual(leaf)?;
                let r = r.eval_dual(leaf)?;
                match op {
                    BinaryOp::Add => l + r,
                    BinaryOp::Sub => l - r,
                    BinaryOp::Mul => l * r,
                    BinaryOp::Div => {
                        if r.value == 0.0 {
                            return Err(self.domain("division by zero".into()));
                        }
                        l / r
                    }
                }
            }
            ExprKind::Pow(a, n) => a.eval_dual(leaf)?.powi(*n),
        };
        if !(out.value.is_finite() && out.d1.is_finite() && out.d2.is_finite() && out.d12.is_finite()) {
            return Err(self.domain("non-finite result".into()));
        }
        Ok(out)
    }

    fn domain(&self, message: String) -> ExprError {
        ExprError::Domain { message, span: self.span, node: self.to_string() }
    }
}

/// Evaluates `ast` with all symbols bound, returning the value, the partials
/// along `dir_a` and `dir_b`, and the mixed partial ∂²/∂dir_a∂dir_b (the pure
/// second derivative when both directions coincide).
pub fn eval_second_order(
    ast: &Expr,
    bindings: &HashMap<String, f64>,
    dir_a: &str,
    dir_b: &str,
) -> Result<Dual2, ExprError> {
    let mut bad_dir = None;
    ast.visit_symbols(&mut |name, is_var, _| {
        if !is_var && (name == dir_a || name == dir_b) {
            bad_dir = Some(name.to_string());
        }
    });
    if let Some(name) = bad_dir {
        return Err(ExprError::NotAVariable { name });
    }
    ast.eval_dual(&|k| match k {
        ExprKind::Var(n) => bindings.get(n).map(|&v| Dual2::variable(v, n == dir_a, n == dir_b)),
        ExprKind::Param(n) => bindings.get(n).map(|&v| Dual2::constant(v)),
        _ => None,
    })
}

#[cfg(test)]
mod tests {
    use super::super::parser::{parse_expression, SymbolTable};
    use super::*;

    fn bind(pairs: &[(&str, f64)]) -> HashMap<String, f64> {
        pairs.iter().map(|(k, v)| (k.to_string(), *v)).collect()
    }

    #[test]
    fn circle_level_set_at_345() {
        let syms = SymbolTable::new(["x", "y"], ["r"]);
        let ast = parse_expression("x^2 + y^2 - r^2", &syms).unwrap();
        let b = bind(&[("x", 3.0), ("y", 4.0), ("r", 5.0)]);
        let d = eval_second_order(&ast, &b, "x", "x").unwrap();
        assert_eq!((d.value, d.d1, d.d12), (0.0, 6.0, 2.0));
    }

    #[test]
    fn bilinear_mixed_partial() {
        let syms = SymbolTable::new(["x", "y"], Vec::<String>::new());
        let ast = parse_expression("x*y", &syms).unwrap();
        let d = eval_second_order(&ast, &bind(&[("x", 2.0), ("y", 7.0)]), "x", "y").unwrap();
        assert_eq!(d, Dual2::new(14.0, 7.0, 2.0, 1.0));
    }

    #[test]
    fn domain_errors_carry_location() {
        let syms = SymbolTable::new(["x"], Vec::<String>::new());
        let b = bind(&[("x", -1.0)]);
        for (src, span_start) in [("1 + ln(x)", 4), ("2 * sqrt(x)", 4), ("3 / (x + 1)", 0)] {
            let ast = parse_expression(src, &syms).unwrap();
            match eval_second_order(&ast, &b, "x", "x") {
                Err(ExprError::Domain { span, .. }) => assert_eq!(span.start, span_start, "{src}"),
                other => panic!("{src}: {other:?}"),
            }
        }
    }

    #[test]
    fn sqrt_at_zero_value_only() {
        let syms = SymbolTable::new(["x"], ["c"]);
        let ast = parse_expression("sqrt(c) + x", &syms).unwrap();
        let d = eval_second_order(&ast, &bind(&[("x", 1.0), ("c", 0.0)]), "x", "x").unwrap();
        assert_eq!(d.value, 1.0);
        let ast = parse_expression("sqrt(x)", &syms).unwrap();
        assert!(eval_second_order(&ast, &bind(&[("x", 0.0)]), "x", "x").is_err());
    }

    #[test]
    fn unbound_and_parameter_directions_rejected() {
        let syms = SymbolTable::new(["x", "y"], ["r"]);
        let ast = parse_expression("x + y + r", &syms).unwrap();
        assert!(matches!(
            eval_second_order(&ast, &bind(&[("x", 1.0), ("r", 1.0)]), "x", "x"),
            Err(ExprError::Unbound { .. })
        ));
        assert!(matches!(
            eval_second_order(&ast, &bind(&[("x", 1.0), ("y", 1.0), ("r", 1.0)]), "r", "x"),
            Err(ExprError::NotAVariable { .. })
        ));
    }
}
