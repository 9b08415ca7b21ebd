use crate::error::{Error, Result};
use crate::exponent::{ExponentField, Region};
use crate::expr::{Expr, Var, Vars};

/// Default cap on |t|^p before a range error is raised.
pub const POWER_CAP: f64 = 1e300;

/// |t|^p, guarded in log space: p ln|t| above ln(cap) is a range error.
#[inline]
pub(crate) fn pow_abs(t: f64, p: f64, cap: f64) -> Result<f64> {
    let a = t.abs();
    if a == 0.0 {
        return Ok(0.0);
    }
    let v = a.powf(p);
    if p * a.ln() > cap.ln() || !v.is_finite() {
        return Err(Error::Range {
            base: t,
            exponent: p,
            cap,
        });
    }
    Ok(v)
}

/// |t|^(p-2) t.
#[inline]
pub(crate) fn signed_pow(t: f64, p: f64, cap: f64) -> Result<f64> {
    if t == 0.0 {
        return Ok(0.0);
    }
    Ok(pow_abs(t, p - 1.0, cap)?.copysign(t))
}

#[derive(Debug, Clone, PartialEq)]
pub enum Rule {
    /// |t|^(a(x)-2) t with primitive |t|^a(x) / a(x), a = growth exponent.
    Power,
    /// Closed-form rule and primitive in `x`, `y`, `t`.
    Custom { f: Expr, primitive: Expr },
}

/// A nonlinearity f(x, t) with its primitive and hypothesis constants:
/// growth exponent and constants C1, C2, Ambrosetti–Rabinowitz constant
/// theta with threshold M, and an oddness flag.
#[derive(Debug, Clone)]
pub struct NonlinearitySpec {
    rule: Rule,
    growth: ExponentField,
    pub c1: f64,
    pub c2: f64,
    pub theta: f64,
    pub threshold: f64,
    pub odd: bool,
}

/// A rule evaluated at a fixed point: cached exponent for power rules.
#[derive(Debug, Clone, Copy)]
pub(crate) enum Local {
    Power(f64),
    Custom([f64; 2]),
}

impl NonlinearitySpec {
    /// f(x, t) = |t|^(a(x)-2) t, F = |t|^a(x) / a(x), odd, theta = a-,
    /// C1 = 0, C2 = 1, M = 1.
    pub fn power(alpha: ExponentField) -> Result<NonlinearitySpec> {
        let (a_minus, _) = alpha.extrema()?;
        if a_minus <= 1.0 {
            return Err(Error::InvalidArgument(format!(
                "power exponent minimum {a_minus} must exceed 1"
            )));
        }
        Ok(NonlinearitySpec {
            rule: Rule::Power,
            growth: alpha,
            c1: 0.0,
            c2: 1.0,
            theta: a_minus,
            threshold: 1.0,
            odd: true,
        })
    }

    /// Custom rule. Requires F(x, 0) = 0 at every mesh node.
    pub fn custom(f: &str, primitive: &str, growth: ExponentField) -> Result<NonlinearitySpec> {
        let vars = [Var::X, Var::Y, Var::T];
        let f = Expr::parse(f, &vars)?;
        let primitive = Expr::parse(primitive, &vars)?;
        for &p in growth.mesh().nodes() {
            let v = primitive.eval(Vars::with_t(p, 0.0));
            if v != 0.0 {
                return Err(Error::InvalidArgument(format!(
                    "primitive must vanish at t = 0, got {v} at ({}, {})",
                    p[0], p[1]
                )));
            }
        }
        Ok(NonlinearitySpec {
            rule: Rule::Custom { f, primitive },
            growth,
            c1: 0.0,
            c2: 1.0,
            theta: 1.0,
            threshold: 1.0,
            odd: false,
        })
    }

    pub fn with_growth_constants(mut self, c1: f64, c2: f64) -> Self {
        self.c1 = c1;
        self.c2 = c2;
        self
    }

    pub fn with_ar(mut self, theta: f64, threshold: f64) -> Self {
        self.theta = theta;
        self.threshold = threshold;
        self
    }

    pub fn with_odd(mut self, odd: bool) -> Self {
        self.odd = odd;
        self
    }

    pub fn rule(&self) -> &Rule {
        &self.rule
    }

    pub fn is_power(&self) -> bool {
        matches!(self.rule, Rule::Power)
    }

    pub fn growth(&self) -> &ExponentField {
        &self.growth
    }

    pub fn growth_extrema(&self, region: Region) -> Result<(f64, f64)> {
        self.growth.extrema_on(region)
    }

    pub(crate) fn local(&self, point: [f64; 2]) -> Local {
        match self.rule {
            Rule::Power => Local::Power(self.growth.eval(point)),
            Rule::Custom { .. } => Local::Custom(point),
        }
    }

    pub(crate) fn value_local(&self, loc: Local, t: f64, cap: f64) -> Result<f64> {
        match (loc, &self.rule) {
            (Local::Power(a), _) => signed_pow(t, a, cap),
            (Local::Custom(p), Rule::Custom { f, .. }) => guard(f.eval(Vars::with_t(p, t)), t, cap),
            _ => unreachable!("local rule kind matches spec rule"),
        }
    }

    pub(crate) fn primitive_local(&self, loc: Local, t: f64, cap: f64) -> Result<f64> {
        match (loc, &self.rule) {
            (Local::Power(a), _) => Ok(pow_abs(t, a, cap)? / a),
            (Local::Custom(p), Rule::Custom { primitive, .. }) => {
                guard(primitive.eval(Vars::with_t(p, t)), t, cap)
            }
            _ => unreachable!("local rule kind matches spec rule"),
        }
    }

    /// d f / d t, regularised near t = 0 for sublinear powers.
    pub(crate) fn derivative_local(&self, loc: Local, t: f64, cap: f64) -> Result<f64> {
        match loc {
            Local::Power(a) => {
                let tt = if a < 2.0 { t.abs().max(1e-8) } else { t };
                Ok((a - 1.0) * pow_abs(tt, a - 2.0, cap)?)
            }
            Local::Custom(_) => {
                let h = 1e-6 * t.abs().max(1.0);
                let fp = self.value_local(loc, t + h, cap)?;
                let fm = self.value_local(loc, t - h, cap)?;
                Ok((fp - fm) / (2.0 * h))
            }
        }
    }

    pub fn f(&self, point: [f64; 2], t: f64) -> Result<f64> {
        self.value_local(self.local(point), t, POWER_CAP)
    }

    pub fn primitive(&self, point: [f64; 2], t: f64) -> Result<f64> {
        self.primitive_local(self.local(point), t, POWER_CAP)
    }
}

fn guard(v: f64, t: f64, cap: f64) -> Result<f64> {
    if v.is_finite() && v.abs() <= cap {
        Ok(v)
    } else {
        Err(Error::Range {
            base: t,
            exponent: f64::NAN,
            cap,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::Mesh;
    use std::sync::Arc;

    fn unit() -> Arc<Mesh> {
        Arc::new(Mesh::interval(0.0, 1.0, 4).unwrap())
    }

    #[test]
    fn power_examples() {
        let s = NonlinearitySpec::power(ExponentField::constant(4.0, unit()).unwrap()).unwrap();
        assert_eq!(s.f([0.3, 0.0], 2.0).unwrap(), 8.0);
        assert!((s.primitive([0.3, 0.0], 2.0).unwrap() - 4.0).abs() < 1e-14);
        assert_eq!(s.f([0.3, 0.0], 0.0).unwrap(), 0.0);
        assert_eq!(s.primitive([0.3, 0.0], 0.0).unwrap(), 0.0);
        assert!(s.odd);
        assert_eq!((s.theta, s.c1, s.c2), (4.0, 0.0, 1.0));

        let s = NonlinearitySpec::power(ExponentField::parse("3 + x", unit()).unwrap()).unwrap();
        let f = s.f([0.5, 0.0], -2.0).unwrap();
        let big_f = s.primitive([0.5, 0.0], -2.0).unwrap();
        assert!((f + 2f64.powf(2.5)).abs() < 1e-12);
        assert!((big_f - 2f64.powf(3.5) / 3.5).abs() < 1e-12);
        assert!((f - -5.656854).abs() < 1e-6 && (big_f - 3.232488).abs() < 1e-6);
        assert_eq!(s.theta, 3.0);
    }

    #[test]
    fn custom_requires_vanishing_primitive() {
        let a = ExponentField::constant(2.0, unit()).unwrap();
        assert!(NonlinearitySpec::custom("1", "t + 1", a.clone()).is_err());
        let s = NonlinearitySpec::custom("1", "t", a).unwrap();
        assert_eq!(s.f([0.0, 0.0], 5.0).unwrap(), 1.0);
        assert_eq!(s.primitive([0.0, 0.0], 5.0).unwrap(), 5.0);
    }

    #[test]
    fn overflow_is_a_range_error() {
        assert!(matches!(pow_abs(1e200, 2.0, POWER_CAP), Err(Error::Range { .. })));
        assert!((pow_abs(-3.0, 2.0, POWER_CAP).unwrap() - 9.0).abs() < 1e-13);
        assert!((signed_pow(-2.0, 3.0, POWER_CAP).unwrap() + 4.0).abs() < 1e-14);
        assert_eq!(signed_pow(0.0, 1.5, POWER_CAP).unwrap(), 0.0);
    }

    #[test]
    fn derivative_matches_difference() {
        let s = NonlinearitySpec::power(ExponentField::constant(3.5, unit()).unwrap()).unwrap();
        let loc = s.local([0.2, 0.0]);
        let t = -1.3;
        let h = 1e-6;
        let fd = (s.value_local(loc, t + h, POWER_CAP).unwrap()
            - s.value_local(loc, t - h, POWER_CAP).unwrap())
            / (2.0 * h);
        let d = s.derivative_local(loc, t, POWER_CAP).unwrap();
        assert!((fd - d).abs() < 1e-7);
    }
}
