use std::collections::BTreeMap;

use nalgebra::{Matrix2, Vector2};

use super::ast::{Expr, ExprKind};
use super::dual::Dual2;
use super::parser::{parse_expression, SymbolTable};
use super::ExprError;
use crate::paths::{ImplicitEval, ImplicitPathSpec, ParametricEval, ParametricPathSpec};

/// Implicit level set φ(x, y) compiled from source.
#[derive(Debug, Clone)]
pub struct CompiledImplicit {
    source: String,
    params: BTreeMap<String, f64>,
    phi: Expr,
}

impl CompiledImplicit {
    pub fn source(&self) -> &str {
        &self.source
    }

    pub fn params(&self) -> &BTreeMap<String, f64> {
        &self.params
    }

    pub fn value(&self, p: Vector2<f64>) -> Result<f64, ExprError> {
        Ok(self.pass(p, false, false, false, false)?.value)
    }

    /// Value, gradient and Hessian from three hyper-dual passes: (x,x), (y,y)
    /// and (x,y). The off-diagonal entry is computed once and mirrored.
    pub fn eval(&self, p: Vector2<f64>) -> Result<ImplicitEval, ExprError> {
        let xx = self.pass(p, true, true, false, false)?;
        let yy = self.pass(p, false, false, true, true)?;
        let xy = self.pass(p, true, false, false, true)?;
        Ok(ImplicitEval {
            phi: xx.value,
            grad: Vector2::new(xx.d1, yy.d1),
            hess: Matrix2::new(xx.d12, xy.d12, xy.d12, yy.d12),
        })
    }

    fn pass(&self, p: Vector2<f64>, xa: bool, xb: bool, ya: bool, yb: bool) -> Result<Dual2, ExprError> {
        self.phi.eval_dual(&|k| match k {
            ExprKind::Var(n) if n == "x" => Some(Dual2::variable(p.x, xa, xb)),
            ExprKind::Var(n) if n == "y" => Some(Dual2::variable(p.y, ya, yb)),
            _ => None,
        })
    }
}

/// Parametric path f(w) with 2 or 3 coordinates compiled from source.
#[derive(Debug, Clone)]
pub struct CompiledParametric {
    sources: Vec<String>,
    params: BTreeMap<String, f64>,
    coords: Vec<Expr>,
}

impl CompiledParametric {
    pub fn sources(&self) -> &[String] {
        &self.sources
    }

    pub fn params(&self) -> &BTreeMap<String, f64> {
        &self.params
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    pub fn eval(&self, w: f64) -> Result<ParametricEval, ExprError> {
        let mut out = ParametricEval::default();
        let seed = Dual2::variable(w, true, true);
        for (i, c) in self.coords.iter().enumerate() {
            let d = c.eval_dual(&|k| match k {
                ExprKind::Var(_) => Some(seed),
                _ => None,
            })?;
            out.f[i] = d.value;
            out.fd[i] = d.d1;
            out.fdd[i] = d.d12;
        }
        Ok(out)
    }
}

fn compile_one(src: &str, variables: &[&str], params: &BTreeMap<String, f64>) -> Result<Expr, ExprError> {
    let symbols = SymbolTable::new(variables.iter().copied(), params.keys().cloned());
    let ast = parse_expression(src, &symbols)?;
    Ok(ast.bind_params(&|name| params.get(name).copied()))
}

/// Compiles φ(x, y) with parameters substituted as constants.
pub fn compile_implicit_path(phi_src: &str, params: &BTreeMap<String, f64>) -> Result<ImplicitPathSpec, ExprError> {
    let phi = compile_one(phi_src, &["x", "y"], params)?;
    Ok(ImplicitPathSpec::Compiled(CompiledImplicit {
        source: phi_src.to_string(),
        params: params.clone(),
        phi,
    }))
}

/// Compiles one expression in `w` per coordinate (2 or 3 of them).
pub fn compile_parametric_path<S: AsRef<str>>(
    f_srcs: &[S],
    params: &BTreeMap<String, f64>,
) -> Result<ParametricPathSpec, ExprError> {
    if !(2..=3).contains(&f_srcs.len()) {
        return Err(ExprError::Arity { expected: "2 or 3", got: f_srcs.len() });
    }
    let coords = f_srcs
        .iter()
        .map(|s| compile_one(s.as_ref(), &["w"], params))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(ParametricPathSpec::Compiled(CompiledParametric {
        sources: f_srcs.iter().map(|s| s.as_ref().to_string()).collect(),
        params: params.clone(),
        coords,
    }))
}

/// Uncompiled contents of a path file.
#[derive(Debug, Clone, PartialEq)]
pub enum PathSource {
    Implicit { phi: String, params: BTreeMap<String, f64> },
    Parametric { coords: Vec<String>, params: BTreeMap<String, f64> },
}

impl PathSource {
    pub fn compile(&self) -> Result<crate::paths::Trajectory, ExprError> {
        use crate::paths::Trajectory;
        match self {
            PathSource::Implicit { phi, params } => compile_implicit_path(phi, params).map(Trajectory::Implicit),
            PathSource::Parametric { coords, params } => {
                compile_parametric_path(coords, params).map(Trajectory::Parametric)
            }
        }
    }
}

/// Reads the line-oriented path file format:
///
/// ```text
/// # comment
/// params: r=100, zl=40 zh=60
/// x = r*cos(w)
/// y = r*sin(w)
/// z = 0.5*(zh + zl + (zl - zh)*sin(w))
/// ```
///
/// A file holds either one `phi = ...` line (implicit, variables `x`, `y`) or
/// `x = ...`, `y = ...` and optionally `z = ...` lines (parametric, variable
/// `w`). `params:` lines may appear anywhere and accumulate.
pub fn parse_path_file(text: &str) -> Result<PathSource, ExprError> {
    let mut params = BTreeMap::new();
    let mut phi: Option<String> = None;
    let mut coords: [Option<String>; 3] = Default::default();
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let err = |message: String| ExprError::PathFile { line: line_no, message };
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        if let Some(rest) = line.strip_prefix("params:") {
            for item in rest.split(|c: char| c == ',' || c.is_whitespace()).filter(|s| !s.is_empty()) {
                let (name, value) = item
                    .split_once('=')
                    .ok_or_else(|| err(format!("expected name=value, found '{item}'")))?;
                let name = name.trim();
                if name.is_empty() || !name.chars().all(|c| c.is_ascii_alphanumeric() || c == '_') {
                    return Err(err(format!("invalid parameter name '{name}'")));
                }
                if ["x", "y", "z", "w"].contains(&name) {
                    return Err(err(format!("'{name}' is reserved for a variable")));
                }
                let v: f64 = value.trim().parse().map_err(|_| err(format!("invalid number '{value}'")))?;
                if params.insert(name.to_string(), v).is_some() {
                    return Err(err(format!("parameter '{name}' defined twice")));
                }
            }
            continue;
        }
        let (lhs, rhs) = line
            .split_once('=')
            .ok_or_else(|| err("expected 'phi = ...' or '<x|y|z> = ...'".to_string()))?;
        let slot = match lhs.trim() {
            "phi" => &mut phi,
            "x" => &mut coords[0],
            "y" => &mut coords[1],
            "z" => &mut coords[2],
            other => return Err(err(format!("unknown target '{other}'"))),
        };
        if slot.is_some() {
            return Err(err(format!("'{}' defined twice", lhs.trim())));
        }
        *slot = Some(rhs.trim().to_string());
    }
    let any_coord = coords.iter().any(Option::is_some);
    match (phi, any_coord) {
        (Some(_), true) => Err(ExprError::PathFile {
            line: 0,
            message: "a path file is either implicit (phi) or parametric (x, y[, z]), not both".into(),
        }),
        (Some(phi), false) => Ok(PathSource::Implicit { phi, params }),
        (None, true) => {
            let [x, y, z] = coords;
            match (x, y) {
                (Some(x), Some(y)) => {
                    let mut c = vec![x, y];
                    c.extend(z);
                    Ok(PathSource::Parametric { coords: c, params })
                }
                _ => Err(ExprError::PathFile { line: 0, message: "parametric paths need both x and y".into() }),
            }
        }
        (None, false) => Err(ExprError::PathFile { line: 0, message: "no path expression found".into() }),
    }
}
