//! Banded symmetric factorisation for the fixed H1 form and SPD Jacobians,
//! plus a dense LU fallback for indefinite Hessians.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::mesh::Mesh;

/// Receives entries of a symmetric matrix during assembly. Callers emit every
/// ordered pair (i, j); banded storage keeps only the lower triangle.
pub trait SymSink {
    fn add(&mut self, i: usize, j: usize, v: f64);
}

/// Forwards entries to another sink multiplied by a constant.
pub struct Scaled<'a, S: SymSink>(pub &'a mut S, pub f64);

impl<S: SymSink> SymSink for Scaled<'_, S> {
    fn add(&mut self, i: usize, j: usize, v: f64) {
        self.0.add(i, j, self.1 * v);
    }
}

/// Lower band of a symmetric matrix.
#[derive(Debug, Clone)]
pub struct SymBanded {
    n: usize,
    bw: usize,
    data: Vec<f64>,
}

impl SymBanded {
    pub fn zeros(n: usize, bw: usize) -> Self {
        SymBanded {
            n,
            bw,
            data: vec![0.0; n * (bw + 1)],
        }
    }

    pub fn for_mesh(mesh: &Mesh) -> Self {
        Self::zeros(mesh.num_nodes(), bandwidth(mesh))
    }

    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    fn idx(&self, i: usize, j: usize) -> usize {
        debug_assert!(j <= i && i - j <= self.bw);
        i * (self.bw + 1) + (j + self.bw - i)
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let (i, j) = if j > i { (j, i) } else { (i, j) };
        if i - j > self.bw {
            0.0
        } else {
            self.data[self.idx(i, j)]
        }
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.n];
        for i in 0..self.n {
            let lo = i.saturating_sub(self.bw);
            for j in lo..i {
                let a = self.data[self.idx(i, j)];
                y[i] += a * x[j];
                y[j] += a * x[i];
            }
            y[i] += self.data[self.idx(i, i)] * x[i];
        }
        y
    }

    pub fn cholesky(&self) -> Result<BandedCholesky> {
        let (n, bw) = (self.n, self.bw);
        let mut l = self.clone();
        for i in 0..n {
            let lo_i = i.saturating_sub(bw);
            for j in lo_i..=i {
                let lo = lo_i.max(j.saturating_sub(bw));
                let mut s = l.data[l.idx(i, j)];
                for k in lo..j {
                    s -= l.data[l.idx(i, k)] * l.data[l.idx(j, k)];
                }
                if i == j {
                    if !(s > 0.0) || !s.is_finite() {
                        return Err(Error::NotPositiveDefinite { row: i, pivot: s });
                    }
                    let d = s.sqrt();
                    let id = l.idx(i, i);
                    l.data[id] = d;
                } else {
                    let jj = l.data[l.idx(j, j)];
                    let id = l.idx(i, j);
                    l.data[id] = s / jj;
                }
            }
        }
        Ok(BandedCholesky { l })
    }
}

impl SymSink for SymBanded {
    fn add(&mut self, i: usize, j: usize, v: f64) {
        if j <= i {
            let id = self.idx(i, j);
            self.data[id] += v;
        }
    }
}

#[derive(Debug, Clone)]
pub struct BandedCholesky {
    l: SymBanded,
}

impl BandedCholesky {
    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let l = &self.l;
        let (n, bw) = (l.n, l.bw);
        let mut y = b.to_vec();
        for i in 0..n {
            let mut s = y[i];
            for k in i.saturating_sub(bw)..i {
                s -= l.data[l.idx(i, k)] * y[k];
            }
            y[i] = s / l.data[l.idx(i, i)];
        }
        for i in (0..n).rev() {
            let mut s = y[i];
            for k in (i + 1)..n.min(i + bw + 1) {
                s -= l.data[l.idx(k, i)] * y[k];
            }
            y[i] = s / l.data[l.idx(i, i)];
        }
        y
    }
}

/// Dense symmetric (possibly indefinite) matrix.
#[derive(Debug, Clone)]
pub struct Dense(pub DMatrix<f64>);

impl Dense {
    pub fn zeros(n: usize) -> Self {
        Dense(DMatrix::zeros(n, n))
    }

    pub fn solve(self, b: &[f64]) -> Result<Vec<f64>> {
        let rhs = DVector::from_column_slice(b);
        let x = self.0.lu().solve(&rhs).ok_or(Error::Singular)?;
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::Singular);
        }
        Ok(x.as_slice().to_vec())
    }
}

impl SymSink for Dense {
    fn add(&mut self, i: usize, j: usize, v: f64) {
        self.0[(i, j)] += v;
    }
}

/// Half-bandwidth of the node connectivity.
pub fn bandwidth(mesh: &Mesh) -> usize {
    let k = mesh.cell_size();
    mesh.cells()
        .iter()
        .flat_map(|c| {
            let nodes = &c.nodes[..k];
            nodes
                .iter()
                .flat_map(move |&a| nodes.iter().map(move |&b| a.abs_diff(b)))
        })
        .max()
        .unwrap_or(0)
}

/// The discrete (-Laplace + I) form: P1 stiffness plus consistent mass,
/// integrated exactly.
pub fn h1_form<S: SymSink>(mesh: &Mesh, sink: &mut S) {
    let k = mesh.cell_size();
    let mass_scale = 1.0 / ((k * (k + 1)) as f64);
    for c in mesh.cells() {
        for a in 0..k {
            for b in 0..k {
                let stiff = c.grads[a][0] * c.grads[b][0] + c.grads[a][1] * c.grads[b][1];
                let mass = if a == b { 2.0 } else { 1.0 } * mass_scale;
                sink.add(c.nodes[a], c.nodes[b], c.measure * (stiff + mass));
            }
        }
    }
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}
