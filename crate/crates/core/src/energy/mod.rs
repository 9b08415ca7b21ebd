//! The energy functional, the operator L = J', the weak-form gradient and
//! its Jacobian, assembled by quadrature on P1 fields.

pub mod conditions;
pub mod nonlinearity;

use std::sync::Arc;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::exponent::{check_subcritical, Combine, ExponentField, Region, SubcriticalReport};
use crate::linalg::{h1_form, BandedCholesky, SymBanded, SymSink};
use crate::mesh::{boundary_value, cell_gradients, interior_value, same_mesh, Mesh, QuadPoint};
use crate::space::DEFAULT_ORDER;

pub use conditions::{check_conditions, ConditionItem, ConditionReport, Sampler, Witness};
pub use nonlinearity::{NonlinearitySpec, Rule, POWER_CAP};

use nonlinearity::{pow_abs, signed_pow, Local};

/// Floor on |t| and |grad u| where sublinear powers make the Hessian singular.
const HESSIAN_FLOOR: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EnergyBreakdown {
    pub j: f64,
    /// -lambda * int F(x, u) dx
    pub interior_potential: f64,
    /// -mu * int G(x, u) dsigma
    pub boundary_potential: f64,
    pub total: f64,
}

#[derive(Debug)]
struct Cache {
    interior: Vec<QuadPoint>,
    boundary: Vec<QuadPoint>,
    p1: Vec<f64>,
    p2: Vec<f64>,
    f_local: Vec<Local>,
    g_local: Vec<Local>,
    h1: SymBanded,
    h1_factor: BandedCholesky,
}

/// Exponents, weights and nonlinearities of the Neumann problem on a mesh.
#[derive(Debug, Clone)]
pub struct ProblemSpec {
    mesh: Arc<Mesh>,
    p1: ExponentField,
    p2: ExponentField,
    lambda: f64,
    mu: f64,
    f: Option<NonlinearitySpec>,
    g: Option<NonlinearitySpec>,
    order: usize,
    power_cap: f64,
    cache: Arc<Cache>,
}

#[derive(Debug, Clone)]
pub struct ProblemBuilder {
    p1: ExponentField,
    p2: ExponentField,
    lambda: f64,
    mu: f64,
    f: Option<NonlinearitySpec>,
    g: Option<NonlinearitySpec>,
    order: usize,
    power_cap: f64,
}

impl ProblemBuilder {
    pub fn interior(mut self, lambda: f64, f: NonlinearitySpec) -> Self {
        self.lambda = lambda;
        self.f = Some(f);
        self
    }

    pub fn boundary(mut self, mu: f64, g: NonlinearitySpec) -> Self {
        self.mu = mu;
        self.g = Some(g);
        self
    }

    pub fn order(mut self, order: usize) -> Self {
        self.order = order;
        self
    }

    pub fn power_cap(mut self, cap: f64) -> Self {
        self.power_cap = cap;
        self
    }

    pub fn build(self) -> Result<ProblemSpec> {
        let mesh = self.p1.mesh().clone();
        let mut meshes = vec![self.p2.mesh()];
        meshes.extend(self.f.iter().map(|s| s.growth().mesh()));
        meshes.extend(self.g.iter().map(|s| s.growth().mesh()));
        if meshes.into_iter().any(|m| !same_mesh(&mesh, m)) {
            return Err(Error::MeshMismatch);
        }
        if !self.lambda.is_finite() || !self.mu.is_finite() {
            return Err(Error::InvalidArgument("lambda and mu must be finite".into()));
        }
        if !(self.power_cap > 1.0) {
            return Err(Error::InvalidArgument(format!(
                "power cap must exceed 1, got {}",
                self.power_cap
            )));
        }
        let interior = mesh.interior_quadrature(self.order)?;
        let boundary = mesh.boundary_quadrature(self.order)?;
        let local = |s: &Option<NonlinearitySpec>, q: &[QuadPoint]| match s {
            Some(s) => q.iter().map(|q| s.local(q.point)).collect(),
            None => Vec::new(),
        };
        let mut h1 = SymBanded::for_mesh(&mesh);
        h1_form(&mesh, &mut h1);
        let cache = Cache {
            p1: self.p1.sample(&interior),
            p2: self.p2.sample(&interior),
            f_local: local(&self.f, &interior),
            g_local: local(&self.g, &boundary),
            h1_factor: h1.cholesky()?,
            h1,
            interior,
            boundary,
        };
        Ok(ProblemSpec {
            mesh,
            p1: self.p1,
            p2: self.p2,
            lambda: self.lambda,
            mu: self.mu,
            f: self.f,
            g: self.g,
            order: self.order,
            power_cap: self.power_cap,
            cache: Arc::new(cache),
        })
    }
}

impl ProblemSpec {
    /// Starts a problem with lambda = mu = 0 and no nonlinearities.
    pub fn builder(p1: ExponentField, p2: ExponentField) -> ProblemBuilder {
        ProblemBuilder {
            p1,
            p2,
            lambda: 0.0,
            mu: 0.0,
            f: None,
            g: None,
            order: DEFAULT_ORDER,
            power_cap: POWER_CAP,
        }
    }

    pub fn mesh(&self) -> &Arc<Mesh> {
        &self.mesh
    }

    pub fn p1(&self) -> &ExponentField {
        &self.p1
    }

    pub fn p2(&self) -> &ExponentField {
        &self.p2
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn mu(&self) -> f64 {
        self.mu
    }

    pub fn f(&self) -> Option<&NonlinearitySpec> {
        self.f.as_ref()
    }

    pub fn g(&self) -> Option<&NonlinearitySpec> {
        self.g.as_ref()
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn power_cap(&self) -> f64 {
        self.power_cap
    }

    /// Same problem with different weights.
    pub fn with_weights(&self, lambda: f64, mu: f64) -> ProblemSpec {
        ProblemSpec {
            lambda,
            mu,
            ..self.clone()
        }
    }

    /// p_M = max(p1, p2).
    pub fn p_max(&self) -> Result<ExponentField> {
        self.p1.combine(&self.p2, Combine::Max)
    }

    /// p_m = min(p1, p2).
    pub fn p_min(&self) -> Result<ExponentField> {
        self.p1.combine(&self.p2, Combine::Min)
    }

    /// alpha < p_M* in the closed domain and beta < p_M,* on the boundary.
    pub fn subcriticality(&self) -> Result<Vec<SubcriticalReport>> {
        let pm = self.p_max()?;
        let n = self.mesh.dim();
        let mut out = Vec::new();
        if let Some(f) = &self.f {
            out.push(check_subcritical(f.growth(), &pm, n, Region::Interior)?);
        }
        if let Some(g) = &self.g {
            out.push(check_subcritical(g.growth(), &pm, n, Region::Boundary)?);
        }
        Ok(out)
    }

    fn check_len(&self, u: &[f64]) -> Result<()> {
        if u.len() != self.mesh.num_nodes() {
            return Err(Error::LengthMismatch {
                expected: self.mesh.num_nodes(),
                got: u.len(),
            });
        }
        Ok(())
    }

    /// J(u) alone.
    pub fn functional_j(&self, u: &[f64]) -> Result<f64> {
        self.check_len(u)?;
        let c = &self.cache;
        let cap = self.power_cap;
        let grads = cell_gradients(&self.mesh, u);
        let mut j = 0.0;
        for (k, qp) in c.interior.iter().enumerate() {
            let g = grads[qp.entity];
            let a = g[0].hypot(g[1]);
            let v = interior_value(&self.mesh, u, qp);
            let (p1, p2) = (c.p1[k], c.p2[k]);
            j += qp.weight
                * ((pow_abs(a, p1, cap)? + pow_abs(v, p1, cap)?) / p1
                    + (pow_abs(a, p2, cap)? + pow_abs(v, p2, cap)?) / p2);
        }
        Ok(j)
    }

    pub fn energy(&self, u: &[f64]) -> Result<EnergyBreakdown> {
        let j = self.functional_j(u)?;
        let c = &self.cache;
        let cap = self.power_cap;
        let mut fi = 0.0;
        if let Some(f) = &self.f {
            for (qp, &loc) in c.interior.iter().zip(&c.f_local) {
                let v = interior_value(&self.mesh, u, qp);
                fi += qp.weight * f.primitive_local(loc, v, cap)?;
            }
        }
        let mut gb = 0.0;
        if let Some(g) = &self.g {
            for (qp, &loc) in c.boundary.iter().zip(&c.g_local) {
                let v = boundary_value(&self.mesh, u, qp);
                gb += qp.weight * g.primitive_local(loc, v, cap)?;
            }
        }
        let interior_potential = -self.lambda * fi;
        let boundary_potential = -self.mu * gb;
        Ok(EnergyBreakdown {
            j,
            interior_potential,
            boundary_potential,
            total: j + interior_potential + boundary_potential,
        })
    }

    /// phi(u).
    pub fn phi(&self, u: &[f64]) -> Result<f64> {
        Ok(self.energy(u)?.total)
    }

    /// Nodal coefficients r with r . v = <L(u), v> for every P1 field v.
    pub fn operator_l(&self, u: &[f64]) -> Result<Vec<f64>> {
        self.check_len(u)?;
        let c = &self.cache;
        let cap = self.power_cap;
        let mesh = &*self.mesh;
        let grads = cell_gradients(mesh, u);
        let mut r = vec![0.0; mesh.num_nodes()];
        for (k, qp) in c.interior.iter().enumerate() {
            let g = grads[qp.entity];
            let a = g[0].hypot(g[1]);
            let v = interior_value(mesh, u, qp);
            let (p1, p2) = (c.p1[k], c.p2[k]);
            let flux = if a == 0.0 {
                0.0
            } else {
                (pow_abs(a, p1 - 1.0, cap)? + pow_abs(a, p2 - 1.0, cap)?) / a
            };
            let zero = signed_pow(v, p1, cap)? + signed_pow(v, p2, cap)?;
            let cell = &mesh.cells()[qp.entity];
            for (l, &node) in mesh.interior_dofs(qp).iter().enumerate() {
                let dphi = cell.grads[l];
                r[node] += qp.weight
                    * (flux * (g[0] * dphi[0] + g[1] * dphi[1]) + zero * qp.shape[l]);
            }
        }
        Ok(r)
    }

    /// Nodal coefficients of phi'(u): L(u) - lambda f(x, u) - mu g(x, u) on the trace.
    pub fn energy_gradient(&self, u: &[f64]) -> Result<Vec<f64>> {
        let mut r = self.operator_l(u)?;
        let c = &self.cache;
        let cap = self.power_cap;
        let mesh = &*self.mesh;
        if let Some(f) = &self.f {
            for (qp, &loc) in c.interior.iter().zip(&c.f_local) {
                let s = self.lambda * qp.weight * f.value_local(loc, interior_value(mesh, u, qp), cap)?;
                for (l, &node) in mesh.interior_dofs(qp).iter().enumerate() {
                    r[node] -= s * qp.shape[l];
                }
            }
        }
        if let Some(g) = &self.g {
            for (qp, &loc) in c.boundary.iter().zip(&c.g_local) {
                let s = self.mu * qp.weight * g.value_local(loc, boundary_value(mesh, u, qp), cap)?;
                for (l, &node) in mesh.boundary_dofs(qp).iter().enumerate() {
                    r[node] -= s * qp.shape[l];
                }
            }
        }
        Ok(r)
    }

    /// Assembles the Jacobian of L at u, plus the second variation of the
    /// potentials when `with_potential` is set (the Hessian of phi).
    pub fn assemble_hessian<S: SymSink>(&self, u: &[f64], with_potential: bool, sink: &mut S) -> Result<()> {
        self.check_len(u)?;
        let c = &self.cache;
        let cap = self.power_cap;
        let mesh = &*self.mesh;
        let grads = cell_gradients(mesh, u);
        for (k, qp) in c.interior.iter().enumerate() {
            let g = grads[qp.entity];
            let a = g[0].hypot(g[1]);
            let v = interior_value(mesh, u, qp);
            let (mut iso, mut aniso, mut zero) = (0.0, 0.0, 0.0);
            for p in [c.p1[k], c.p2[k]] {
                if a > 0.0 || p <= 2.0 {
                    let aa = if p < 2.0 { a.max(HESSIAN_FLOOR) } else { a };
                    let s = if p == 2.0 { 1.0 } else { pow_abs(aa, p - 2.0, cap)? };
                    iso += s;
                    aniso += (p - 2.0) * s;
                }
                let vv = if p < 2.0 { v.abs().max(HESSIAN_FLOOR) } else { v };
                zero += (p - 1.0) * if p == 2.0 { 1.0 } else { pow_abs(vv, p - 2.0, cap)? };
            }
            if with_potential {
                if let Some(f) = &self.f {
                    zero -= self.lambda * f.derivative_local(c.f_local[k], v, cap)?;
                }
            }
            let ghat = if a > 0.0 { [g[0] / a, g[1] / a] } else { [0.0, 0.0] };
            let cell = &mesh.cells()[qp.entity];
            let dofs = mesh.interior_dofs(qp);
            for (i, &ni) in dofs.iter().enumerate() {
                let gi = cell.grads[i];
                let gi_hat = gi[0] * ghat[0] + gi[1] * ghat[1];
                for (j, &nj) in dofs.iter().enumerate() {
                    let gj = cell.grads[j];
                    let gj_hat = gj[0] * ghat[0] + gj[1] * ghat[1];
                    let val = iso * (gi[0] * gj[0] + gi[1] * gj[1])
                        + aniso * gi_hat * gj_hat
                        + zero * qp.shape[i] * qp.shape[j];
                    sink.add(ni, nj, qp.weight * val);
                }
            }
        }
        if with_potential {
            if let Some(g) = &self.g {
                for (qp, &loc) in c.boundary.iter().zip(&c.g_local) {
                    let v = boundary_value(mesh, u, qp);
                    let d = self.mu * g.derivative_local(loc, v, cap)?;
                    let dofs = mesh.boundary_dofs(qp);
                    for (i, &ni) in dofs.iter().enumerate() {
                        for (j, &nj) in dofs.iter().enumerate() {
                            sink.add(ni, nj, -qp.weight * d * qp.shape[i] * qp.shape[j]);
                        }
                    }
                }
            }
        }
        Ok(())
    }

    /// <L(u) - L(v), u - v>.
    pub fn monotonicity_gap(&self, u: &[f64], v: &[f64]) -> Result<f64> {
        let lu = self.operator_l(u)?;
        let lv = self.operator_l(v)?;
        Ok(lu
            .iter()
            .zip(&lv)
            .zip(u.iter().zip(v))
            .map(|((a, b), (x, y))| (a - b) * (x - y))
            .sum())
    }

    /// sqrt(r . K^{-1} r) with K the cached (-Laplace + I) form.
    pub fn residual_norm(&self, r: &[f64]) -> Result<f64> {
        self.check_len(r)?;
        let z = self.cache.h1_factor.solve(r);
        Ok(crate::linalg::dot(r, &z).max(0.0).sqrt())
    }

    /// K^{-1} r.
    pub fn precondition(&self, r: &[f64]) -> Vec<f64> {
        self.cache.h1_factor.solve(r)
    }

    /// u . K v, the discrete H1 inner product.
    pub fn h1_inner(&self, u: &[f64], v: &[f64]) -> f64 {
        crate::linalg::dot(u, &self.cache.h1.matvec(v))
    }

    pub fn h1_norm(&self, u: &[f64]) -> f64 {
        self.h1_inner(u, u).max(0.0).sqrt()
    }
}

/// sqrt(r . K^{-1} r) for the (-Laplace + I) form on `mesh`.
pub fn residual_norm(r: &[f64], mesh: &Mesh) -> Result<f64> {
    if r.len() != mesh.num_nodes() {
        return Err(Error::LengthMismatch {
            expected: mesh.num_nodes(),
            got: r.len(),
        });
    }
    let mut k = SymBanded::for_mesh(mesh);
    h1_form(mesh, &mut k);
    let z = k.cholesky()?.solve(r);
    Ok(crate::linalg::dot(r, &z).max(0.0).sqrt())
}
