//! Interval and rectangle meshes with P1 fields, element and boundary
//! quadrature, outward normals and boundary traces.

use std::fmt::Write as _;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::expr::Expr;
use crate::quadrature;

/// A segment (1D) or triangle (2D). Only the first `dim + 1` entries of
/// `nodes` and `grads` are meaningful.
#[derive(Debug, Clone, PartialEq)]
pub struct Cell {
    pub nodes: [usize; 3],
    pub measure: f64,
    /// Constant gradients of the local hat functions.
    pub grads: [[f64; 2]; 3],
}

/// A boundary point (1D) or boundary edge (2D).
#[derive(Debug, Clone, PartialEq)]
pub struct Facet {
    pub nodes: [usize; 2],
    pub normal: [f64; 2],
    pub measure: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Domain {
    Interval { a: f64, b: f64 },
    Rectangle { lx: f64, ly: f64 },
}

/// Quadrature point. `entity` is a cell id (interior) or facet id
/// (boundary); `shape` holds the local hat-function values at the point.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadPoint {
    pub point: [f64; 2],
    pub weight: f64,
    pub entity: usize,
    pub shape: [f64; 3],
}

#[derive(Debug, Clone, PartialEq)]
pub struct Mesh {
    domain: Domain,
    nodes: Vec<[f64; 2]>,
    cells: Vec<Cell>,
    facets: Vec<Facet>,
    boundary_nodes: Vec<usize>,
}

impl Mesh {
    /// Uniform mesh of [a, b] with `n` segments. Boundary "facets" are the
    /// two endpoints with counting measure.
    pub fn interval(a: f64, b: f64, n: usize) -> Result<Mesh> {
        if !(a < b) || !a.is_finite() || !b.is_finite() {
            return Err(Error::InvalidMesh(format!("need a < b, got a={a}, b={b}")));
        }
        if n < 2 {
            return Err(Error::InvalidMesh(format!("need n >= 2 segments, got {n}")));
        }
        let h = (b - a) / n as f64;
        let nodes: Vec<[f64; 2]> = (0..=n)
            .map(|i| {
                let x = if i == n { b } else { a + i as f64 * h };
                [x, 0.0]
            })
            .collect();
        let cells = (0..n)
            .map(|i| {
                let len = nodes[i + 1][0] - nodes[i][0];
                Cell {
                    nodes: [i, i + 1, i + 1],
                    measure: len,
                    grads: [[-1.0 / len, 0.0], [1.0 / len, 0.0], [0.0, 0.0]],
                }
            })
            .collect();
        let facets = vec![
            Facet {
                nodes: [0, 0],
                normal: [-1.0, 0.0],
                measure: 1.0,
            },
            Facet {
                nodes: [n, n],
                normal: [1.0, 0.0],
                measure: 1.0,
            },
        ];
        Ok(Mesh {
            domain: Domain::Interval { a, b },
            nodes,
            cells,
            facets,
            boundary_nodes: vec![0, n],
        })
    }

    /// Structured triangulation of [0, lx] x [0, ly]; every grid cell is
    /// split along its (i, j) -> (i+1, j+1) diagonal.
    pub fn rectangle(lx: f64, ly: f64, nx: usize, ny: usize) -> Result<Mesh> {
        if !(lx > 0.0 && ly > 0.0) || !lx.is_finite() || !ly.is_finite() {
            return Err(Error::InvalidMesh(format!(
                "need positive lengths, got {lx} x {ly}"
            )));
        }
        if nx < 1 || ny < 1 {
            return Err(Error::InvalidMesh(format!(
                "need nx, ny >= 1, got {nx} x {ny}"
            )));
        }
        let id = |i: usize, j: usize| j * (nx + 1) + i;
        let coord = |i: usize, n: usize, l: f64| if i == n { l } else { l * i as f64 / n as f64 };
        let mut nodes = Vec::with_capacity((nx + 1) * (ny + 1));
        for j in 0..=ny {
            for i in 0..=nx {
                nodes.push([coord(i, nx, lx), coord(j, ny, ly)]);
            }
        }
        let mut cells = Vec::with_capacity(2 * nx * ny);
        for j in 0..ny {
            for i in 0..nx {
                let (n00, n10, n11, n01) = (id(i, j), id(i + 1, j), id(i + 1, j + 1), id(i, j + 1));
                cells.push(triangle(&nodes, [n00, n10, n11])?);
                cells.push(triangle(&nodes, [n00, n11, n01])?);
            }
        }
        // counter-clockwise walk: bottom, right, top, left
        let mut loop_nodes = Vec::new();
        loop_nodes.extend((0..nx).map(|i| id(i, 0)));
        loop_nodes.extend((0..ny).map(|j| id(nx, j)));
        loop_nodes.extend((1..=nx).rev().map(|i| id(i, ny)));
        loop_nodes.extend((1..=ny).rev().map(|j| id(0, j)));
        let facets = (0..loop_nodes.len())
            .map(|k| {
                let a = loop_nodes[k];
                let b = loop_nodes[(k + 1) % loop_nodes.len()];
                let (pa, pb) = (nodes[a], nodes[b]);
                let (dx, dy) = (pb[0] - pa[0], pb[1] - pa[1]);
                let len = dx.hypot(dy);
                Facet {
                    nodes: [a, b],
                    normal: [dy / len, -dx / len],
                    measure: len,
                }
            })
            .collect();
        Ok(Mesh {
            domain: Domain::Rectangle { lx, ly },
            nodes,
            cells,
            facets,
            boundary_nodes: loop_nodes,
        })
    }

    pub fn dim(&self) -> usize {
        match self.domain {
            Domain::Interval { .. } => 1,
            Domain::Rectangle { .. } => 2,
        }
    }

    pub fn domain(&self) -> Domain {
        self.domain
    }

    pub fn num_nodes(&self) -> usize {
        self.nodes.len()
    }

    pub fn nodes(&self) -> &[[f64; 2]] {
        &self.nodes
    }

    pub fn cells(&self) -> &[Cell] {
        &self.cells
    }

    pub fn facets(&self) -> &[Facet] {
        &self.facets
    }

    /// Boundary node ids in facet order, each listed once.
    pub fn boundary_nodes(&self) -> &[usize] {
        &self.boundary_nodes
    }

    /// Number of local nodes per cell.
    pub fn cell_size(&self) -> usize {
        self.dim() + 1
    }

    /// Number of nodes per facet.
    pub fn facet_size(&self) -> usize {
        self.dim()
    }

    pub fn measure(&self) -> f64 {
        self.cells.iter().map(|c| c.measure).sum()
    }

    pub fn boundary_measure(&self) -> f64 {
        self.facets.iter().map(|f| f.measure).sum()
    }

    /// Longest cell edge.
    pub fn h(&self) -> f64 {
        match self.domain {
            Domain::Interval { .. } => self.cells.iter().map(|c| c.measure).fold(0.0, f64::max),
            Domain::Rectangle { lx, ly } => {
                let nx = self.facets.iter().filter(|f| f.normal[1] < -0.5).count();
                let ny = self.facets.iter().filter(|f| f.normal[0] > 0.5).count();
                (lx / nx as f64).hypot(ly / ny as f64)
            }
        }
    }

    pub fn interior_quadrature(&self, order: usize) -> Result<Vec<QuadPoint>> {
        let mut out = Vec::new();
        match self.dim() {
            1 => {
                let rule = quadrature::segment_rule(order)?;
                for (id, cell) in self.cells.iter().enumerate() {
                    let (x0, x1) = (self.nodes[cell.nodes[0]][0], self.nodes[cell.nodes[1]][0]);
                    for &(s, w) in &rule {
                        out.push(QuadPoint {
                            point: [x0 + s * (x1 - x0), 0.0],
                            weight: w * cell.measure,
                            entity: id,
                            shape: [1.0 - s, s, 0.0],
                        });
                    }
                }
            }
            _ => {
                let rule = quadrature::triangle_rule(order)?;
                for (id, cell) in self.cells.iter().enumerate() {
                    let p = cell.nodes.map(|n| self.nodes[n]);
                    for &(b, w) in &rule {
                        out.push(QuadPoint {
                            point: [
                                b[0] * p[0][0] + b[1] * p[1][0] + b[2] * p[2][0],
                                b[0] * p[0][1] + b[1] * p[1][1] + b[2] * p[2][1],
                            ],
                            weight: w * cell.measure,
                            entity: id,
                            shape: b,
                        });
                    }
                }
            }
        }
        Ok(out)
    }

    /// Quadrature over the boundary with respect to the surface measure. In
    /// 1D each endpoint carries weight 1 regardless of `order`.
    pub fn boundary_quadrature(&self, order: usize) -> Result<Vec<QuadPoint>> {
        let rule = quadrature::segment_rule(order)?;
        let mut out = Vec::new();
        for (id, facet) in self.facets.iter().enumerate() {
            if self.dim() == 1 {
                out.push(QuadPoint {
                    point: self.nodes[facet.nodes[0]],
                    weight: facet.measure,
                    entity: id,
                    shape: [1.0, 0.0, 0.0],
                });
                continue;
            }
            let (pa, pb) = (self.nodes[facet.nodes[0]], self.nodes[facet.nodes[1]]);
            for &(s, w) in &rule {
                out.push(QuadPoint {
                    point: [pa[0] + s * (pb[0] - pa[0]), pa[1] + s * (pb[1] - pa[1])],
                    weight: w * facet.measure,
                    entity: id,
                    shape: [1.0 - s, s, 0.0],
                });
            }
        }
        Ok(out)
    }

    /// Global node ids carried by a quadrature point's shape values.
    pub fn interior_dofs(&self, qp: &QuadPoint) -> &[usize] {
        &self.cells[qp.entity].nodes[..self.cell_size()]
    }

    pub fn boundary_dofs(&self, qp: &QuadPoint) -> &[usize] {
        &self.facets[qp.entity].nodes[..self.facet_size()]
    }
}

fn triangle(nodes: &[[f64; 2]], ids: [usize; 3]) -> Result<Cell> {
    let [a, b, c] = ids.map(|i| nodes[i]);
    let det = (b[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (b[1] - a[1]);
    if det <= 0.0 {
        return Err(Error::InvalidMesh("degenerate or clockwise triangle".into()));
    }
    // grad of barycentric lambda_i = rot90(opposite edge) / det
    let grads = [
        [(b[1] - c[1]) / det, (c[0] - b[0]) / det],
        [(c[1] - a[1]) / det, (a[0] - c[0]) / det],
        [(a[1] - b[1]) / det, (b[0] - a[0]) / det],
    ];
    Ok(Cell {
        nodes: ids,
        measure: 0.5 * det,
        grads,
    })
}

/// Nodal values of a piecewise-linear function on a mesh.
#[derive(Debug, Clone)]
pub struct DiscreteField {
    mesh: Arc<Mesh>,
    values: Vec<f64>,
}

impl PartialEq for DiscreteField {
    fn eq(&self, other: &Self) -> bool {
        same_mesh(&self.mesh, &other.mesh) && self.values == other.values
    }
}

pub fn same_mesh(a: &Arc<Mesh>, b: &Arc<Mesh>) -> bool {
    Arc::ptr_eq(a, b) || **a == **b
}

impl DiscreteField {
    pub fn new(mesh: Arc<Mesh>, values: Vec<f64>) -> Result<Self> {
        if values.len() != mesh.num_nodes() {
            return Err(Error::LengthMismatch {
                expected: mesh.num_nodes(),
                got: values.len(),
            });
        }
        Ok(DiscreteField { mesh, values })
    }

    pub fn zeros(mesh: Arc<Mesh>) -> Self {
        let n = mesh.num_nodes();
        DiscreteField {
            mesh,
            values: vec![0.0; n],
        }
    }

    pub fn constant(mesh: Arc<Mesh>, c: f64) -> Self {
        let n = mesh.num_nodes();
        DiscreteField {
            mesh,
            values: vec![c; n],
        }
    }

    pub fn interpolate(mesh: Arc<Mesh>, f: impl Fn([f64; 2]) -> f64) -> Self {
        let values = mesh.nodes().iter().map(|&p| f(p)).collect();
        DiscreteField { mesh, values }
    }

    pub fn from_expr(mesh: Arc<Mesh>, expr: &Expr) -> Self {
        Self::interpolate(mesh, |p| expr.eval_at(p))
    }

    pub fn mesh(&self) -> &Arc<Mesh> {
        &self.mesh
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn with_values(&self, values: Vec<f64>) -> Result<Self> {
        Self::new(self.mesh.clone(), values)
    }

    pub fn scaled(&self, s: f64) -> Self {
        DiscreteField {
            mesh: self.mesh.clone(),
            values: self.values.iter().map(|v| s * v).collect(),
        }
    }

    /// `self + s * other`.
    pub fn axpy(&self, s: f64, other: &DiscreteField) -> Result<Self> {
        if !same_mesh(&self.mesh, &other.mesh) {
            return Err(Error::MeshMismatch);
        }
        Ok(DiscreteField {
            mesh: self.mesh.clone(),
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(a, b)| a + s * b)
                .collect(),
        })
    }

    /// Per-cell constant gradient of the P1 reconstruction.
    pub fn gradient(&self) -> Vec<[f64; 2]> {
        cell_gradients(&self.mesh, &self.values)
    }

    /// Boundary nodal values in facet order.
    pub fn trace(&self) -> Vec<f64> {
        self.mesh
            .boundary_nodes()
            .iter()
            .map(|&i| self.values[i])
            .collect()
    }

    /// Value of the reconstruction at an interior quadrature point.
    pub fn at_interior(&self, qp: &QuadPoint) -> f64 {
        interior_value(&self.mesh, &self.values, qp)
    }

    pub fn at_boundary(&self, qp: &QuadPoint) -> f64 {
        boundary_value(&self.mesh, &self.values, qp)
    }

    /// CSV with header `node_id,x[,y],value`.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        let two_d = self.mesh.dim() == 2;
        out.push_str(if two_d {
            "node_id,x,y,value\n"
        } else {
            "node_id,x,value\n"
        });
        for (i, (p, v)) in self.mesh.nodes().iter().zip(&self.values).enumerate() {
            if two_d {
                let _ = writeln!(out, "{i},{},{},{v}", p[0], p[1]);
            } else {
                let _ = writeln!(out, "{i},{},{v}", p[0]);
            }
        }
        out
    }
}

pub(crate) fn cell_gradients(mesh: &Mesh, u: &[f64]) -> Vec<[f64; 2]> {
    let k = mesh.cell_size();
    mesh.cells()
        .iter()
        .map(|c| {
            let mut g = [0.0; 2];
            for l in 0..k {
                g[0] += u[c.nodes[l]] * c.grads[l][0];
                g[1] += u[c.nodes[l]] * c.grads[l][1];
            }
            g
        })
        .collect()
}

pub(crate) fn interior_value(mesh: &Mesh, u: &[f64], qp: &QuadPoint) -> f64 {
    mesh.interior_dofs(qp)
        .iter()
        .zip(&qp.shape)
        .map(|(&n, s)| s * u[n])
        .sum()
}

pub(crate) fn boundary_value(mesh: &Mesh, u: &[f64], qp: &QuadPoint) -> f64 {
    mesh.boundary_dofs(qp)
        .iter()
        .zip(&qp.shape)
        .map(|(&n, s)| s * u[n])
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn integrate(q: &[QuadPoint], f: impl Fn([f64; 2]) -> f64) -> f64 {
        q.iter().map(|p| p.weight * f(p.point)).sum()
    }

    #[test]
    fn interval_construction() {
        let m = Mesh::interval(0.0, 1.0, 4).unwrap();
        let xs: Vec<f64> = m.nodes().iter().map(|p| p[0]).collect();
        assert_eq!(xs, vec![0.0, 0.25, 0.5, 0.75, 1.0]);
        assert!((m.measure() - 1.0).abs() < 1e-15);
        let m = Mesh::interval(-1.0, 1.0, 10).unwrap();
        assert_eq!(m.facets().len(), 2);
        assert_eq!(m.facets()[0].normal, [-1.0, 0.0]);
        assert_eq!(m.facets()[1].normal, [1.0, 0.0]);
        assert!(Mesh::interval(0.0, 1.0, 1).is_err());
        assert!(Mesh::interval(1.0, 1.0, 4).is_err());
    }

    #[test]
    fn rectangle_construction() {
        let m = Mesh::rectangle(1.0, 1.0, 1, 1).unwrap();
        assert_eq!((m.num_nodes(), m.cells().len()), (4, 2));
        assert!((m.measure() - 1.0).abs() < 1e-15);
        let m = Mesh::rectangle(1.0, 1.0, 2, 2).unwrap();
        assert_eq!(m.cells().len(), 8);
        assert!((m.boundary_measure() - 4.0).abs() < 1e-15);
        let m = Mesh::rectangle(2.0, 1.0, 4, 2).unwrap();
        assert!((m.measure() - 2.0).abs() < 1e-14);
        // summation oracle: sum of facet lengths = perimeter
        let perimeter: f64 = m.facets().iter().map(|f| f.measure).sum();
        assert!((perimeter - 6.0).abs() < 1e-14);
        assert!(Mesh::rectangle(0.0, 1.0, 2, 2).is_err());
        assert!(Mesh::rectangle(1.0, 1.0, 0, 2).is_err());
    }

    #[test]
    fn normals_are_unit_and_outward() {
        let m = Mesh::rectangle(2.0, 1.5, 3, 5).unwrap();
        let centre = [1.0, 0.75];
        for f in m.facets() {
            assert!((f.normal[0].hypot(f.normal[1]) - 1.0).abs() < 1e-12);
            let p = m.nodes()[f.nodes[0]];
            let out = (p[0] - centre[0]) * f.normal[0] + (p[1] - centre[1]) * f.normal[1];
            assert!(out > 0.0);
            assert!(f.measure > 0.0);
        }
        assert!(m.cells().iter().all(|c| c.measure > 0.0));
        assert_eq!(m.boundary_nodes().len(), 2 * (3 + 5));
    }

    #[test]
    fn interior_quadrature_exactness() {
        let m = Mesh::interval(0.0, 1.0, 4).unwrap();
        let q = m.interior_quadrature(1).unwrap();
        assert!((integrate(&q, |_| 1.0) - 1.0).abs() < 1e-15);
        assert!((integrate(&q, |p| p[0]) - 0.5).abs() < 1e-14);
        let q = m.interior_quadrature(3).unwrap();
        assert!((integrate(&q, |p| p[0].powi(3)) - 0.25).abs() < 1e-14);

        let m = Mesh::rectangle(2.0, 1.0, 3, 2).unwrap();
        for order in 1..=5 {
            let q = m.interior_quadrature(order).unwrap();
            assert!(q.iter().all(|p| p.weight > 0.0));
            let mut per_cell = vec![0.0; m.cells().len()];
            for p in &q {
                per_cell[p.entity] += p.weight;
            }
            for (c, w) in m.cells().iter().zip(&per_cell) {
                assert!((c.measure - w).abs() < 1e-14);
            }
            // x^a y^b over [0,2]x[0,1] = 2^(a+1)/(a+1) / (b+1)
            for a in 0..=order {
                let b = order - a;
                let exact = 2f64.powi(a as i32 + 1) / (a as f64 + 1.0) / (b as f64 + 1.0);
                let got = integrate(&q, |p| p[0].powi(a as i32) * p[1].powi(b as i32));
                assert!(((got - exact) / exact).abs() < 1e-12, "order {order} a {a}");
            }
        }
        assert!(m.interior_quadrature(6).is_err());
    }

    #[test]
    fn boundary_quadrature() {
        let m = Mesh::interval(0.0, 1.0, 5).unwrap();
        let u = DiscreteField::interpolate(Arc::new(m.clone()), |p| 2.0 + p[0]);
        let q = m.boundary_quadrature(3).unwrap();
        let s: f64 = q.iter().map(|p| p.weight * u.at_boundary(p)).sum();
        assert_eq!(s, 5.0);

        let m = Mesh::rectangle(1.0, 1.0, 4, 4).unwrap();
        let q = m.boundary_quadrature(3).unwrap();
        assert!((integrate(&q, |_| 1.0) - 4.0).abs() < 1e-14);
        // piecewise line integral oracle: 0.5 + 1 + 0.5 + 0
        assert!((integrate(&q, |p| p[0]) - 2.0).abs() < 1e-14);
    }

    #[test]
    fn gradients_and_traces() {
        let m = Arc::new(Mesh::interval(0.0, 1.0, 6).unwrap());
        let u = DiscreteField::interpolate(m.clone(), |p| p[0]);
        assert!(u.gradient().iter().all(|g| (g[0] - 1.0).abs() < 1e-14));
        assert_eq!(u.trace(), vec![0.0, 1.0]);
        let c = DiscreteField::constant(m, 3.0);
        assert!(c.gradient().iter().all(|g| g[0] == 0.0));
        assert_eq!(c.trace(), vec![3.0, 3.0]);

        let m = Arc::new(Mesh::rectangle(1.0, 2.0, 3, 4).unwrap());
        let u = DiscreteField::interpolate(m.clone(), |p| 2.0 * p[0] + 3.0 * p[1]);
        for g in u.gradient() {
            assert!((g[0] - 2.0).abs() < 1e-14 && (g[1] - 3.0).abs() < 1e-14);
        }
        let m = Arc::new(Mesh::rectangle(1.0, 1.0, 2, 2).unwrap());
        let u = DiscreteField::interpolate(m.clone(), |p| p[0] * p[1]);
        let tr = u.trace();
        let corners: Vec<f64> = [0usize, 2, 8, 6]
            .iter()
            .map(|&c| tr[m.boundary_nodes().iter().position(|&b| b == c).unwrap()])
            .collect();
        assert_eq!(corners, vec![0.0, 0.0, 1.0, 0.0]);
    }

    #[test]
    fn csv_columns() {
        let m = Arc::new(Mesh::interval(0.0, 1.0, 2).unwrap());
        let u = DiscreteField::interpolate(m, |p| 2.0 * p[0]);
        assert_eq!(u.to_csv(), "node_id,x,value\n0,0,0\n1,0.5,1\n2,1,2\n");
        let m = Arc::new(Mesh::rectangle(1.0, 1.0, 1, 1).unwrap());
        let csv = DiscreteField::constant(m, 1.5).to_csv();
        assert!(csv.starts_with("node_id,x,y,value\n0,0,0,1.5\n"));
    }

    #[test]
    fn length_checked() {
        let m = Arc::new(Mesh::interval(0.0, 1.0, 2).unwrap());
        assert!(DiscreteField::new(m, vec![1.0; 4]).is_err());
    }
}
