//! Scalar functions of position given as expression strings, e.g. `"x1 + 0.5"` or
//! `"sin(pi*x)*sin(pi*y)"`. Coordinates are bound as `x1, x2, x3` with aliases `x, y, z`.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::geometry::Point;

#[derive(Clone)]
pub struct CoordExpr {
    source: String,
    expr: meval::Expr,
}

impl CoordExpr {
    pub fn parse(source: &str) -> Result<Self> {
        let expr = meval::Expr::from_str(source)
            .map_err(|e| Error::Expression(format!("{source:?}: {e}")))?;
        let parsed = CoordExpr { source: source.to_string(), expr };
        // Surface unknown identifiers at parse time instead of on first use.
        parsed.try_eval(&[0.1, 0.2, 0.3])?;
        Ok(parsed)
    }

    pub fn source(&self) -> &str {
        &self.source
    }

    fn try_eval(&self, p: &Point) -> Result<f64> {
        let mut ctx = meval::Context::new();
        ctx.var("x1", p[0]).var("x2", p[1]).var("x3", p[2]);
        ctx.var("x", p[0]).var("y", p[1]).var("z", p[2]);
        self.expr
            .eval_with_context(ctx)
            .map_err(|e| Error::Expression(format!("{:?}: {e}", self.source)))
    }

    pub fn eval(&self, p: &Point) -> f64 {
        self.try_eval(p).expect("expression validated at parse time")
    }
}

impl fmt::Debug for CoordExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "CoordExpr({:?})", self.source)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn evaluates_coordinates_and_constants() {
        let e = CoordExpr::parse("x1 + 1/2").unwrap();
        assert_eq!(e.eval(&[0.25, 0.0, 0.0]), 0.75);
        let s = CoordExpr::parse("sin(pi*x)*sin(pi*y)").unwrap();
        assert!((s.eval(&[0.5, 0.5, 0.0]) - 1.0).abs() < 1e-15);
        assert_eq!(CoordExpr::parse("x3").unwrap().eval(&[0.0, 0.0, 2.0]), 2.0);
    }

    #[test]
    fn rejects_unknown_names() {
        assert!(CoordExpr::parse("w + 1").is_err());
        assert!(CoordExpr::parse("x +").is_err());
    }
}
