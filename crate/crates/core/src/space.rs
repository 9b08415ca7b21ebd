//! Modulars, Luxemburg norms and Sobolev norms of P1 fields in
//! variable-exponent spaces.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::exponent::{ExponentField, Region};
use crate::mesh::{cell_gradients, same_mesh, DiscreteField, Mesh, QuadPoint};

pub const DEFAULT_ORDER: usize = 3;
pub const NORM_REL_TOL: f64 = 1e-12;
pub const NORM_MAX_ITER: usize = 200;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ModularReport {
    pub value: f64,
    pub p_minus: f64,
    pub p_plus: f64,
    pub order: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct NormReport {
    pub value: f64,
    pub iterations: usize,
    /// |rho(u / value) - 1| at the returned value (0 for the zero field).
    pub residual: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SobolevParts {
    pub lebesgue: f64,
    pub gradient: f64,
    pub sobolev: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NormBundle {
    /// One entry per exponent (one for a Sobolev norm, two for the X norm).
    pub parts: Vec<SobolevParts>,
    pub x_norm: Option<f64>,
    pub iterations: usize,
    pub residual: f64,
}

impl NormBundle {
    pub fn lebesgue(&self) -> f64 {
        self.parts[0].lebesgue
    }

    pub fn gradient(&self) -> f64 {
        self.parts[0].gradient
    }

    pub fn sobolev(&self) -> f64 {
        self.parts[0].sobolev
    }
}

/// Integrand samples for a modular: weight, |value|, exponent.
#[derive(Debug, Clone, Default)]
pub struct PowerSamples {
    weights: Vec<f64>,
    abs: Vec<f64>,
    exps: Vec<f64>,
}

impl PowerSamples {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, weight: f64, value: f64, exponent: f64) {
        self.weights.push(weight);
        self.abs.push(value.abs());
        self.exps.push(exponent);
    }

    /// rho(u / lambda).
    pub fn modular_scaled(&self, lambda: f64) -> f64 {
        let ll = lambda.ln();
        self.weights
            .iter()
            .zip(&self.abs)
            .zip(&self.exps)
            .filter(|((_, &a), _)| a > 0.0)
            .map(|((&w, &a), &p)| w * (p * (a.ln() - ll)).exp())
            .sum()
    }

    pub fn modular(&self) -> f64 {
        self.modular_scaled(1.0)
    }

    fn exponent_range(&self) -> (f64, f64) {
        self.exps
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &p| {
                (lo.min(p), hi.max(p))
            })
    }

    /// Luxemburg norm by bracketed bisection on lambda -> rho(u / lambda) = 1.
    pub fn luxemburg(&self) -> Result<NormReport> {
        let rho = self.modular();
        if rho == 0.0 {
            return Ok(NormReport {
                value: 0.0,
                iterations: 0,
                residual: 0.0,
            });
        }
        let (pm, pp) = self.exponent_range();
        let (a, b) = (rho.powf(1.0 / pp), rho.powf(1.0 / pm));
        let (mut lo, mut hi) = if rho >= 1.0 { (a, b) } else { (b, a) };
        lo *= 1.0 - 1e-9;
        hi *= 1.0 + 1e-9;
        // widen if rounding left the root outside
        while self.modular_scaled(lo) < 1.0 {
            lo *= 0.5;
        }
        while self.modular_scaled(hi) > 1.0 {
            hi *= 2.0;
        }
        let mut iterations = 0;
        while hi - lo > NORM_REL_TOL * hi {
            if iterations == NORM_MAX_ITER {
                return Err(Error::NormNotConverged { iterations, lo, hi });
            }
            let mid = 0.5 * (lo + hi);
            if self.modular_scaled(mid) > 1.0 {
                lo = mid;
            } else {
                hi = mid;
            }
            iterations += 1;
        }
        let value = 0.5 * (lo + hi);
        Ok(NormReport {
            value,
            iterations,
            residual: (self.modular_scaled(value) - 1.0).abs(),
        })
    }
}

/// Quadrature and exponent samples cached for repeated norm evaluation.
#[derive(Debug, Clone)]
pub struct NormContext {
    mesh: std::sync::Arc<Mesh>,
    interior: Vec<QuadPoint>,
    exps: Vec<Vec<f64>>,
}

impl NormContext {
    pub fn new(exponents: &[&ExponentField], order: usize) -> Result<Self> {
        let mesh = exponents[0].mesh().clone();
        if exponents.iter().any(|p| !same_mesh(p.mesh(), &mesh)) {
            return Err(Error::MeshMismatch);
        }
        let interior = mesh.interior_quadrature(order)?;
        let exps = exponents.iter().map(|p| p.sample(&interior)).collect();
        Ok(NormContext {
            mesh,
            interior,
            exps,
        })
    }

    fn sobolev_parts(&self, u: &[f64], k: usize) -> Result<(SobolevParts, usize, f64)> {
        let grads = cell_gradients(&self.mesh, u);
        let mut vals = PowerSamples::new();
        let mut gvals = PowerSamples::new();
        for (qp, &p) in self.interior.iter().zip(&self.exps[k]) {
            let v = crate::mesh::interior_value(&self.mesh, u, qp);
            let g = grads[qp.entity];
            vals.push(qp.weight, v, p);
            gvals.push(qp.weight, g[0].hypot(g[1]), p);
        }
        let a = vals.luxemburg()?;
        let b = gvals.luxemburg()?;
        Ok((
            SobolevParts {
                lebesgue: a.value,
                gradient: b.value,
                sobolev: a.value + b.value,
            },
            a.iterations.max(b.iterations),
            a.residual.max(b.residual),
        ))
    }

    /// Sum of the Sobolev norms over all cached exponents.
    pub fn bundle(&self, u: &[f64]) -> Result<NormBundle> {
        let mut parts = Vec::with_capacity(self.exps.len());
        let (mut iterations, mut residual) = (0, 0.0f64);
        for k in 0..self.exps.len() {
            let (p, it, res) = self.sobolev_parts(u, k)?;
            parts.push(p);
            iterations = iterations.max(it);
            residual = residual.max(res);
        }
        let x_norm = (parts.len() > 1).then(|| parts.iter().map(|p| p.sobolev).sum());
        Ok(NormBundle {
            parts,
            x_norm,
            iterations,
            residual,
        })
    }

    pub fn norm(&self, u: &[f64]) -> Result<f64> {
        let b = self.bundle(u)?;
        Ok(b.x_norm.unwrap_or(b.parts[0].sobolev))
    }
}

fn check_same(u: &DiscreteField, p: &ExponentField) -> Result<()> {
    if same_mesh(u.mesh(), p.mesh()) {
        Ok(())
    } else {
        Err(Error::MeshMismatch)
    }
}

pub fn power_samples(
    u: &DiscreteField,
    p: &ExponentField,
    region: Region,
    order: usize,
) -> Result<PowerSamples> {
    check_same(u, p)?;
    let mesh = u.mesh();
    let mut s = PowerSamples::new();
    match region {
        Region::Interior => {
            for qp in mesh.interior_quadrature(order)? {
                s.push(qp.weight, u.at_interior(&qp), p.eval(qp.point));
            }
        }
        Region::Boundary => {
            for qp in mesh.boundary_quadrature(order)? {
                s.push(qp.weight, u.at_boundary(&qp), p.eval(qp.point));
            }
        }
    }
    Ok(s)
}

/// rho(u) = integral of |u|^p(x) over the interior or the boundary.
pub fn modular(u: &DiscreteField, p: &ExponentField, region: Region) -> Result<ModularReport> {
    modular_with_order(u, p, region, DEFAULT_ORDER)
}

pub fn modular_with_order(
    u: &DiscreteField,
    p: &ExponentField,
    region: Region,
    order: usize,
) -> Result<ModularReport> {
    let (p_minus, p_plus) = p.extrema_on(region)?;
    let value = power_samples(u, p, region, order)?.modular();
    Ok(ModularReport {
        value,
        p_minus,
        p_plus,
        order,
    })
}

pub fn luxemburg_norm(u: &DiscreteField, p: &ExponentField, region: Region) -> Result<NormReport> {
    luxemburg_norm_with_order(u, p, region, DEFAULT_ORDER)
}

pub fn luxemburg_norm_with_order(
    u: &DiscreteField,
    p: &ExponentField,
    region: Region,
    order: usize,
) -> Result<NormReport> {
    power_samples(u, p, region, order)?.luxemburg()
}

/// |u|_p + |grad u|_p.
pub fn sobolev_norm(u: &DiscreteField, p: &ExponentField) -> Result<NormBundle> {
    check_same(u, p)?;
    NormContext::new(&[p], DEFAULT_ORDER)?.bundle(u.values())
}

/// ||u||_{p1} + ||u||_{p2}.
pub fn x_norm(u: &DiscreteField, p1: &ExponentField, p2: &ExponentField) -> Result<NormBundle> {
    check_same(u, p1)?;
    NormContext::new(&[p1, p2], DEFAULT_ORDER)?.bundle(u.values())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HolderReport {
    pub integral: f64,
    pub bound: f64,
    pub slack: f64,
    pub pass: bool,
}

/// |int u v| <= (1/p- + 1/q-) |u|_p |v|_q with q the conjugate exponent.
pub fn holder_bound_check(
    u: &DiscreteField,
    v: &DiscreteField,
    p: &ExponentField,
) -> Result<HolderReport> {
    if !same_mesh(u.mesh(), v.mesh()) {
        return Err(Error::MeshMismatch);
    }
    let (p_minus, _) = p.extrema()?;
    let q = p.conjugate()?;
    let (q_minus, _) = q.extrema()?;
    let integral: f64 = u
        .mesh()
        .interior_quadrature(DEFAULT_ORDER)?
        .iter()
        .map(|qp| qp.weight * u.at_interior(qp) * v.at_interior(qp))
        .sum();
    let nu = luxemburg_norm(u, p, Region::Interior)?.value;
    let nv = luxemburg_norm(v, &q, Region::Interior)?.value;
    let bound = (1.0 / p_minus + 1.0 / q_minus) * nu * nv;
    Ok(HolderReport {
        integral,
        bound,
        slack: bound - integral.abs(),
        pass: integral.abs() <= bound + 1e-12,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::sync::Arc;

    fn unit(n: usize) -> Arc<Mesh> {
        Arc::new(Mesh::interval(0.0, 1.0, n).unwrap())
    }

    #[test]
    fn modular_examples() {
        let m = unit(32);
        let p = ExponentField::parse("2 + x", m.clone()).unwrap();
        let one = DiscreteField::constant(m.clone(), 1.0);
        assert!((modular(&one, &p, Region::Interior).unwrap().value - 1.0).abs() < 1e-14);
        let zero = DiscreteField::zeros(m.clone());
        assert_eq!(modular(&zero, &p, Region::Interior).unwrap().value, 0.0);
        // closed form: int 4 * 2^x dx = 4 / ln 2
        let two = DiscreteField::constant(m.clone(), 2.0);
        let r = modular(&two, &p, Region::Interior).unwrap();
        assert!((r.value - 4.0 / 2f64.ln()).abs() < 1e-8);
        assert_eq!((r.p_minus, r.p_plus), (2.0, 3.0));
        // boundary modular uses counting measure: 2^2 + 2^3
        let r = modular(&two, &p, Region::Boundary).unwrap();
        assert!((r.value - 12.0).abs() < 1e-13);
    }

    #[test]
    fn luxemburg_examples() {
        let m = unit(16);
        let p = ExponentField::parse("2 + x", m.clone()).unwrap();
        let c = DiscreteField::constant(m.clone(), 3.7);
        let n = luxemburg_norm(&c, &p, Region::Interior).unwrap();
        assert!((n.value - 3.7).abs() < 1e-10);
        assert!(n.iterations <= NORM_MAX_ITER);

        let p2 = ExponentField::constant(2.0, m.clone()).unwrap();
        let x = DiscreteField::interpolate(m.clone(), |q| q[0]);
        let n = luxemburg_norm(&x, &p2, Region::Interior).unwrap();
        assert!((n.value - 1.0 / 3f64.sqrt()).abs() < 1e-10);

        let zero = DiscreteField::zeros(m);
        let n = luxemburg_norm(&zero, &p, Region::Interior).unwrap();
        assert_eq!((n.value, n.iterations), (0.0, 0));
    }

    #[test]
    fn sobolev_and_x_norms() {
        let m = unit(16);
        let p2 = ExponentField::constant(2.0, m.clone()).unwrap();
        let p3 = ExponentField::constant(3.0, m.clone()).unwrap();
        let c = DiscreteField::constant(m.clone(), 2.5);
        let b = sobolev_norm(&c, &p2).unwrap();
        assert!((b.lebesgue() - 2.5).abs() < 1e-10 && b.gradient() == 0.0);
        assert!((b.sobolev() - 2.5).abs() < 1e-10);
        let zero = DiscreteField::zeros(m.clone());
        assert_eq!(sobolev_norm(&zero, &p2).unwrap().sobolev(), 0.0);
        assert_eq!(x_norm(&zero, &p2, &p3).unwrap().x_norm, Some(0.0));

        let x = DiscreteField::interpolate(m.clone(), |q| q[0]);
        let b = sobolev_norm(&x, &p2).unwrap();
        let r3 = 1.0 / 3f64.sqrt();
        assert!((b.lebesgue() - r3).abs() < 1e-10);
        assert!((b.gradient() - 1.0).abs() < 1e-10);
        assert!((b.sobolev() - (1.0 + r3)).abs() < 1e-10);

        let xn = x_norm(&x, &p2, &p3).unwrap();
        let expected = (r3 + 1.0) + (0.25f64.powf(1.0 / 3.0) + 1.0);
        assert!((xn.x_norm.unwrap() - expected).abs() < 1e-10);
        let same = x_norm(&x, &p2, &p2).unwrap().x_norm.unwrap();
        assert!((same - 2.0 * b.sobolev()).abs() < 1e-14);
    }

    #[test]
    fn holder_examples() {
        let m = unit(8);
        let p = ExponentField::constant(2.0, m.clone()).unwrap();
        let one = DiscreteField::constant(m.clone(), 1.0);
        let r = holder_bound_check(&one, &one, &p).unwrap();
        assert!(r.pass);
        assert!((r.integral - 1.0).abs() < 1e-12 && (r.bound - 1.0).abs() < 1e-10);
        let zero = DiscreteField::zeros(m);
        let r = holder_bound_check(&zero, &one, &p).unwrap();
        assert!(r.pass && r.integral == 0.0 && r.bound == 0.0);
    }

    #[test]
    fn mismatched_meshes_rejected() {
        let p = ExponentField::constant(2.0, unit(8)).unwrap();
        let u = DiscreteField::constant(unit(9), 1.0);
        assert_eq!(modular(&u, &p, Region::Interior).unwrap_err(), Error::MeshMismatch);
    }
}
