use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Generation cost `a·P² + b·P + c` of one unit over its feasible interval
/// `[p_min, p_max]` (watts). Cost units are left abstract.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CostFunction {
    pub a: f64,
    pub b: f64,
    #[serde(default)]
    pub c: f64,
    pub p_min: f64,
    pub p_max: f64,
}

impl CostFunction {
    pub fn new(a: f64, b: f64, c: f64, p_min: f64, p_max: f64) -> Result<Self> {
        let cost = Self {
            a,
            b,
            c,
            p_min,
            p_max,
        };
        cost.validate("cost")?;
        Ok(cost)
    }

    /// Quadratic cost with the interval `[0, ∞)`.
    pub fn quadratic(a: f64, b: f64, c: f64) -> Result<Self> {
        Self::new(a, b, c, 0.0, f64::INFINITY)
    }

    pub fn with_bounds(self, p_min: f64, p_max: f64) -> Result<Self> {
        Self::new(self.a, self.b, self.c, p_min, p_max)
    }

    /// Checks convexity and the interval, naming `field` in the error.
    pub fn validate(&self, field: &str) -> Result<()> {
        if !(self.a.is_finite() && self.b.is_finite() && self.c.is_finite()) {
            return Err(Error::validation(field, "coefficients must be finite"));
        }
        if self.a < 0.0 || (self.a == 0.0 && self.b <= 0.0) {
            return Err(Error::validation(
                format!("{field}.a"),
                "cost must be strictly convex (a > 0) or increasing affine (a = 0, b > 0)",
            ));
        }
        if self.p_min.is_nan() || self.p_min < 0.0 {
            return Err(Error::validation(format!("{field}.p_min"), "must be >= 0"));
        }
        if self.p_max.is_nan() || self.p_min > self.p_max {
            return Err(Error::validation(
                format!("{field}.p_max"),
                "must be >= p_min",
            ));
        }
        Ok(())
    }

    pub fn is_quadratic(&self) -> bool {
        self.a > 0.0
    }

    pub fn cost(&self, p: f64) -> f64 {
        (self.a * p + self.b) * p + self.c
    }

    /// Incremental cost `C'(P)`.
    pub fn marginal(&self, p: f64) -> f64 {
        2.0 * self.a * p + self.b
    }

    /// Output at which the incremental cost equals `lambda`.
    ///
    /// Only meaningful for quadratic costs; affine costs are handled by the
    /// solver as a step in `lambda`.
    pub fn output_at(&self, lambda: f64, bounded: bool) -> f64 {
        let p = (lambda - self.b) / (2.0 * self.a);
        if bounded {
            p.clamp(self.p_min, self.p_max)
        } else {
            p
        }
    }

    pub fn scaled(&self, k: f64) -> Self {
        Self {
            a: self.a * k,
            b: self.b * k,
            c: self.c * k,
            ..*self
        }
    }
}

/// Total cost of a dispatch vector.
pub fn total_cost(costs: &[CostFunction], powers: &[f64]) -> f64 {
    costs.iter().zip(powers).map(|(c, &p)| c.cost(p)).sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_concave_and_flat() {
        assert!(CostFunction::quadratic(-0.1, 0.0, 0.0).is_err());
        assert!(CostFunction::quadratic(0.0, 0.0, 1.0).is_err());
        assert!(CostFunction::quadratic(0.0, 0.5, 0.0).is_ok());
    }

    #[test]
    fn rejects_bad_interval() {
        assert!(CostFunction::new(0.1, 0.0, 0.0, 10.0, 5.0).is_err());
        assert!(CostFunction::new(0.1, 0.0, 0.0, -1.0, 5.0).is_err());
    }

    #[test]
    fn marginal_inverts() {
        let c = CostFunction::quadratic(0.1, 0.01, 0.0).unwrap();
        let p = 123.4;
        assert!((c.output_at(c.marginal(p), false) - p).abs() < 1e-12);
    }
}
