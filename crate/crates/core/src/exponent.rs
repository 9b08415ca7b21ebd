//! Variable exponents p(x) in C+(closure of Omega), sampled over a mesh.
//!
//! Extrema are taken over the union of nodal samples and degree-5 interior
//! and boundary quadrature points; this approximates the true sup/inf and
//! tightens under refinement.

use std::cmp::Ordering;
use std::fmt;
use std::sync::Arc;

use serde::{Serialize, Serializer};

use crate::error::{Error, Result};
use crate::expr::Expr;
use crate::mesh::{same_mesh, Mesh, QuadPoint};
use crate::quadrature::MAX_ORDER;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Region {
    /// The closed domain, boundary samples included.
    Interior,
    Boundary,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Combine {
    Max,
    Min,
}

/// A critical exponent value; `Infinite` compares above every finite value.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub enum Critical {
    Finite(f64),
    Infinite,
}

impl Critical {
    pub fn is_infinite(self) -> bool {
        matches!(self, Critical::Infinite)
    }

    pub fn finite(self) -> Option<f64> {
        match self {
            Critical::Finite(v) => Some(v),
            Critical::Infinite => None,
        }
    }

    fn minus(self, q: f64) -> Critical {
        match self {
            Critical::Finite(v) => Critical::Finite(v - q),
            Critical::Infinite => Critical::Infinite,
        }
    }

    fn min(self, other: Critical) -> Critical {
        match self.partial_cmp(&other) {
            Some(Ordering::Greater) => other,
            _ => self,
        }
    }
}

impl fmt::Display for Critical {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Critical::Finite(v) => write!(f, "{v}"),
            Critical::Infinite => f.write_str("inf"),
        }
    }
}

impl Serialize for Critical {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            Critical::Finite(v) => s.serialize_f64(*v),
            Critical::Infinite => s.serialize_str("inf"),
        }
    }
}

#[derive(Debug)]
struct SamplePoints {
    points: Vec<[f64; 2]>,
    on_boundary: Vec<bool>,
}

impl SamplePoints {
    fn build(mesh: &Mesh) -> Result<SamplePoints> {
        let mut points = mesh.nodes().to_vec();
        let mut on_boundary = vec![false; points.len()];
        for &b in mesh.boundary_nodes() {
            on_boundary[b] = true;
        }
        for qp in mesh.interior_quadrature(MAX_ORDER)? {
            points.push(qp.point);
            on_boundary.push(false);
        }
        for qp in mesh.boundary_quadrature(MAX_ORDER)? {
            points.push(qp.point);
            on_boundary.push(true);
        }
        Ok(SamplePoints {
            points,
            on_boundary,
        })
    }

    fn in_region(&self, i: usize, region: Region) -> bool {
        region == Region::Interior || self.on_boundary[i]
    }
}

/// A continuous exponent p(x) > 1 given by an expression in `x`, `y`.
#[derive(Debug, Clone)]
pub struct ExponentField {
    expr: Expr,
    mesh: Arc<Mesh>,
    samples: Arc<SamplePoints>,
    values: Vec<f64>,
}

impl ExponentField {
    /// Samples `expr` over `mesh`, rejecting values <= 1 or non-finite.
    pub fn new(expr: Expr, mesh: Arc<Mesh>) -> Result<ExponentField> {
        let samples = Arc::new(SamplePoints::build(&mesh)?);
        Self::with_samples(expr, mesh, samples)
    }

    fn with_samples(
        expr: Expr,
        mesh: Arc<Mesh>,
        samples: Arc<SamplePoints>,
    ) -> Result<ExponentField> {
        let values: Vec<f64> = samples.points.iter().map(|&p| expr.eval_at(p)).collect();
        let field = ExponentField {
            expr,
            mesh,
            samples,
            values,
        };
        field.validate()?;
        Ok(field)
    }

    pub fn parse(source: &str, mesh: Arc<Mesh>) -> Result<ExponentField> {
        Self::new(Expr::spatial(source)?, mesh)
    }

    pub fn constant(value: f64, mesh: Arc<Mesh>) -> Result<ExponentField> {
        Self::new(Expr::constant(value), mesh)
    }

    fn validate(&self) -> Result<()> {
        for (&p, &v) in self.samples.points.iter().zip(&self.values) {
            if !v.is_finite() {
                return Err(Error::NonFiniteExponent { point: p, value: v });
            }
            if v <= 1.0 {
                return Err(Error::NotInCPlus { point: p, value: v });
            }
        }
        Ok(())
    }

    pub fn expr(&self) -> &Expr {
        &self.expr
    }

    pub fn mesh(&self) -> &Arc<Mesh> {
        &self.mesh
    }

    pub fn dim(&self) -> usize {
        self.mesh.dim()
    }

    pub fn eval(&self, point: [f64; 2]) -> f64 {
        self.expr.eval_at(point)
    }

    /// Values at the given quadrature points.
    pub fn sample(&self, points: &[QuadPoint]) -> Vec<f64> {
        points.iter().map(|q| self.eval(q.point)).collect()
    }

    pub fn nodal(&self) -> Vec<f64> {
        self.values[..self.mesh.num_nodes()].to_vec()
    }

    /// (p-, p+) over all samples of the closed domain.
    pub fn extrema(&self) -> Result<(f64, f64)> {
        self.extrema_on(Region::Interior)
    }

    pub fn extrema_on(&self, region: Region) -> Result<(f64, f64)> {
        self.validate()?;
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for (i, &v) in self.values.iter().enumerate() {
            if self.samples.in_region(i, region) {
                lo = lo.min(v);
                hi = hi.max(v);
            }
        }
        Ok((lo, hi))
    }

    /// Pointwise max (p_M) or min (p_m) of two fields on the same mesh.
    pub fn combine(&self, other: &ExponentField, mode: Combine) -> Result<ExponentField> {
        if !same_mesh(&self.mesh, &other.mesh) {
            return Err(Error::MeshMismatch);
        }
        let expr = self.expr.combine(&other.expr, mode == Combine::Max);
        Self::with_samples(expr, self.mesh.clone(), self.samples.clone())
    }

    /// Pointwise conjugate exponent q = p / (p - 1).
    pub fn conjugate(&self) -> Result<ExponentField> {
        let s = self.expr.source();
        let expr = Expr::spatial(&format!("({s}) / (({s}) - 1)"))?;
        Self::with_samples(expr, self.mesh.clone(), self.samples.clone())
    }

    /// Sobolev critical exponent N p / (N - p), infinite where p >= N.
    pub fn sobolev_critical(&self, n: usize) -> Result<CriticalField> {
        self.critical(n, n as f64)
    }

    /// Trace critical exponent (N - 1) p / (N - p), infinite where p >= N.
    pub fn trace_critical(&self, n: usize) -> Result<CriticalField> {
        self.critical(n, n as f64 - 1.0)
    }

    fn critical(&self, n: usize, numerator: f64) -> Result<CriticalField> {
        if !(1..=2).contains(&n) {
            return Err(Error::InvalidArgument(format!(
                "dimension must be 1 or 2, got {n}"
            )));
        }
        let nf = n as f64;
        let values = self
            .values
            .iter()
            .map(|&p| {
                if p >= nf {
                    Critical::Infinite
                } else {
                    Critical::Finite(numerator * p / (nf - p))
                }
            })
            .collect();
        Ok(CriticalField {
            samples: self.samples.clone(),
            values,
        })
    }
}

/// Critical exponent samples aligned with an [`ExponentField`]'s sample set.
#[derive(Debug, Clone)]
pub struct CriticalField {
    samples: Arc<SamplePoints>,
    values: Vec<Critical>,
}

impl CriticalField {
    pub fn values(&self) -> &[Critical] {
        &self.values
    }

    pub fn points(&self) -> &[[f64; 2]] {
        &self.samples.points
    }

    /// Value at the sample nearest to `point`.
    pub fn at(&self, point: [f64; 2]) -> Critical {
        let dist = |p: &[f64; 2]| (p[0] - point[0]).hypot(p[1] - point[1]);
        let (i, _) = self
            .samples
            .points
            .iter()
            .enumerate()
            .min_by(|a, b| dist(a.1).total_cmp(&dist(b.1)))
            .expect("sample set is never empty");
        self.values[i]
    }

    pub fn min(&self) -> Critical {
        self.values
            .iter()
            .copied()
            .fold(Critical::Infinite, Critical::min)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SubcriticalReport {
    pub pass: bool,
    pub region: Region,
    /// min over samples of (critical - q).
    pub margin: Critical,
    pub witness: Option<[f64; 2]>,
}

/// Checks q(x) < p*(x) (interior) or q(x) < p_*(x) (boundary) at every sample.
pub fn check_subcritical(
    q: &ExponentField,
    p: &ExponentField,
    n: usize,
    region: Region,
) -> Result<SubcriticalReport> {
    if !same_mesh(&q.mesh, &p.mesh) {
        return Err(Error::MeshMismatch);
    }
    let crit = match region {
        Region::Interior => p.sobolev_critical(n)?,
        Region::Boundary => p.trace_critical(n)?,
    };
    let mut margin = Critical::Infinite;
    let mut witness = None;
    for (i, (&qv, &c)) in q.values.iter().zip(&crit.values).enumerate() {
        if !q.samples.in_region(i, region) {
            continue;
        }
        let m = c.minus(qv);
        if m < margin || witness.is_none() && m == margin {
            margin = m;
            witness = Some(q.samples.points[i]);
        }
    }
    let pass = match margin {
        Critical::Infinite => true,
        Critical::Finite(v) => v > 0.0,
    };
    Ok(SubcriticalReport {
        pass,
        region,
        margin,
        witness,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit(n: usize) -> Arc<Mesh> {
        Arc::new(Mesh::interval(0.0, 1.0, n).unwrap())
    }

    fn square(n: usize) -> Arc<Mesh> {
        Arc::new(Mesh::rectangle(1.0, 1.0, n, n).unwrap())
    }

    #[test]
    fn extrema_examples() {
        let p = ExponentField::parse("2 + x", unit(8)).unwrap();
        assert_eq!(p.extrema().unwrap(), (2.0, 3.0));
        let p = ExponentField::constant(2.0, unit(8)).unwrap();
        assert_eq!(p.extrema().unwrap(), (2.0, 2.0));

        // dense oversampling oracle at 10^4 points
        let expr = |x: f64| 2.0 + (std::f64::consts::PI * x).sin();
        let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
        for i in 0..=10_000 {
            let v = expr(i as f64 / 10_000.0);
            lo = lo.min(v);
            hi = hi.max(v);
        }
        let p = ExponentField::parse("2 + sin(pi*x)", unit(64)).unwrap();
        let (pm, pp) = p.extrema().unwrap();
        assert!((pm - lo).abs() < 1e-3 && (pp - hi).abs() < 1e-3);
    }

    #[test]
    fn rejects_outside_c_plus() {
        let err = ExponentField::parse("0.9", unit(4)).unwrap_err();
        assert!(matches!(err, Error::NotInCPlus { value, .. } if value == 0.9));
        let err = ExponentField::parse("1 + x", unit(4)).unwrap_err();
        assert_eq!(
            err,
            Error::NotInCPlus {
                point: [0.0, 0.0],
                value: 1.0
            }
        );
        assert!(ExponentField::parse("1/(x-x)", unit(4)).is_err());
    }

    #[test]
    fn combine_examples() {
        let m = unit(10);
        let a = ExponentField::constant(2.0, m.clone()).unwrap();
        let b = ExponentField::constant(3.0, m.clone()).unwrap();
        assert_eq!(a.combine(&b, Combine::Max).unwrap().extrema().unwrap(), (3.0, 3.0));
        assert_eq!(a.combine(&b, Combine::Min).unwrap().extrema().unwrap(), (2.0, 2.0));

        let a = ExponentField::parse("2 + x", m.clone()).unwrap();
        let b = ExponentField::parse("3 - x", m.clone()).unwrap();
        let pm = a.combine(&b, Combine::Max).unwrap();
        assert_eq!(pm.eval([0.5, 0.0]), 2.5);
        for i in 0..=20 {
            let x = i as f64 / 20.0;
            let oracle = if 2.0 + x > 3.0 - x { 2.0 + x } else { 3.0 - x };
            assert_eq!(pm.eval([x, 0.0]), oracle);
        }
        let other = ExponentField::constant(2.0, unit(12)).unwrap();
        assert_eq!(a.combine(&other, Combine::Max).unwrap_err(), Error::MeshMismatch);
    }

    #[test]
    fn critical_exponents() {
        let p = ExponentField::parse("3", unit(4)).unwrap();
        assert_eq!(p.sobolev_critical(1).unwrap().min(), Critical::Infinite);
        assert_eq!(p.trace_critical(1).unwrap().min(), Critical::Infinite);

        let p = ExponentField::constant(1.5, square(2)).unwrap();
        assert!(p.sobolev_critical(2).unwrap().values().iter().all(|&c| c == Critical::Finite(6.0)));
        assert!(p.trace_critical(2).unwrap().values().iter().all(|&c| c == Critical::Finite(3.0)));
        let p = ExponentField::constant(1.8, square(2)).unwrap();
        let c = p.trace_critical(2).unwrap().min().finite().unwrap();
        assert!((c - 9.0).abs() < 1e-12);

        let p = ExponentField::parse("1.25 + 0.5*x", square(4)).unwrap();
        let crit = p.sobolev_critical(2).unwrap();
        assert_eq!(crit.at([0.5, 0.5]), Critical::Finite(6.0));
        assert!((crit.at([0.0, 0.5]).finite().unwrap() - 10.0 / 3.0).abs() < 1e-12);
        assert!(p.sobolev_critical(3).is_err());
    }

    #[test]
    fn subcritical_examples() {
        let m = unit(6);
        let q = ExponentField::constant(4.0, m.clone()).unwrap();
        let p = ExponentField::constant(2.0, m).unwrap();
        let r = check_subcritical(&q, &p, 1, Region::Interior).unwrap();
        assert!(r.pass);
        assert_eq!(r.margin, Critical::Infinite);

        let m = square(3);
        let p = ExponentField::constant(1.5, m.clone()).unwrap();
        let q = ExponentField::constant(6.0, m.clone()).unwrap();
        let r = check_subcritical(&q, &p, 2, Region::Interior).unwrap();
        assert!(!r.pass);
        assert_eq!(r.margin, Critical::Finite(0.0));
        assert!(r.witness.is_some());

        let q = ExponentField::constant(2.9, m).unwrap();
        let r = check_subcritical(&q, &p, 2, Region::Boundary).unwrap();
        assert!(r.pass);
        assert!((r.margin.finite().unwrap() - 0.1).abs() < 1e-12);
    }

    #[test]
    fn critical_ordering_and_json() {
        assert!(Critical::Infinite > Critical::Finite(1e300));
        assert_eq!(serde_json::to_string(&Critical::Infinite).unwrap(), "\"inf\"");
        assert_eq!(serde_json::to_string(&Critical::Finite(0.5)).unwrap(), "0.5");
    }

    #[test]
    fn conjugate_exponent() {
        let p = ExponentField::parse("2 + x", unit(4)).unwrap();
        let q = p.conjugate().unwrap();
        for x in [0.0, 0.3, 1.0] {
            let (pv, qv) = (p.eval([x, 0.0]), q.eval([x, 0.0]));
            assert!((1.0 / pv + 1.0 / qv - 1.0).abs() < 1e-14);
        }
    }
}
