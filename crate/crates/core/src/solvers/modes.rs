use std::f64::consts::PI;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::mesh::{Domain, Mesh};

/// Nested cosine modes: the constant field first, then interpolated Neumann
/// eigenfunctions of increasing frequency.
#[derive(Debug, Clone)]
pub struct ModeHierarchy {
    mesh: Arc<Mesh>,
    modes: Vec<Vec<f64>>,
    labels: Vec<[usize; 2]>,
}

impl ModeHierarchy {
    /// First `k` modes; `k` may not exceed the number of nodes.
    pub fn new(mesh: Arc<Mesh>, k: usize) -> Result<ModeHierarchy> {
        if k == 0 || k > mesh.num_nodes() {
            return Err(Error::InvalidArgument(format!(
                "mode count must be in 1..={}, got {k}",
                mesh.num_nodes()
            )));
        }
        let labels: Vec<[usize; 2]> = match mesh.domain() {
            Domain::Interval { .. } => (0..k).map(|j| [j, 0]).collect(),
            Domain::Rectangle { lx, ly } => {
                let side = (k as f64).sqrt().ceil() as usize + 1;
                let mut all: Vec<[usize; 2]> = (0..side)
                    .flat_map(|i| (0..side).map(move |j| [i, j]))
                    .collect();
                let eig = |m: &[usize; 2]| (m[0] as f64 / lx).powi(2) + (m[1] as f64 / ly).powi(2);
                all.sort_by(|a, b| eig(a).total_cmp(&eig(b)).then(a.cmp(b)));
                all.truncate(k);
                all
            }
        };
        let modes = labels.iter().map(|&m| sample(&mesh, m)).collect();
        Ok(ModeHierarchy {
            mesh,
            modes,
            labels,
        })
    }

    pub fn mesh(&self) -> &Arc<Mesh> {
        &self.mesh
    }

    pub fn len(&self) -> usize {
        self.modes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.modes.is_empty()
    }

    pub fn mode(&self, j: usize) -> &[f64] {
        &self.modes[j]
    }

    /// Frequency indices of mode `j` (second index is 0 in 1D).
    pub fn label(&self, j: usize) -> [usize; 2] {
        self.labels[j]
    }

    /// The first `k` modes, spanning the finite analogue of Y_k.
    pub fn span(&self, k: usize) -> &[Vec<f64>] {
        &self.modes[..k.min(self.modes.len())]
    }

    /// sum_j c_j mode_j over the leading modes.
    pub fn combine(&self, coeffs: &[f64]) -> Vec<f64> {
        let mut u = vec![0.0; self.mesh.num_nodes()];
        for (c, m) in coeffs.iter().zip(&self.modes) {
            for (a, b) in u.iter_mut().zip(m) {
                *a += c * b;
            }
        }
        u
    }
}

fn sample(mesh: &Mesh, m: [usize; 2]) -> Vec<f64> {
    let (x0, lx, ly) = match mesh.domain() {
        Domain::Interval { a, b } => (a, b - a, 1.0),
        Domain::Rectangle { lx, ly } => (0.0, lx, ly),
    };
    mesh.nodes()
        .iter()
        .map(|p| {
            (m[0] as f64 * PI * (p[0] - x0) / lx).cos() * (m[1] as f64 * PI * p[1] / ly).cos()
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::DMatrix;

    fn rank(modes: &[Vec<f64>]) -> usize {
        let n = modes[0].len();
        let m = DMatrix::from_fn(n, modes.len(), |i, j| modes[j][i]);
        m.svd(false, false)
            .singular_values
            .iter()
            .filter(|&&s| s > 1e-8)
            .count()
    }

    #[test]
    fn first_mode_constant_and_independent() {
        let mesh = Arc::new(Mesh::interval(0.0, 2.0, 16).unwrap());
        let h = ModeHierarchy::new(mesh, 17).unwrap();
        assert!(h.mode(0).iter().all(|&v| v == 1.0));
        assert_eq!(rank(h.span(17)), 17);
        assert_eq!(h.span(3).len(), 3);

        let mesh = Arc::new(Mesh::rectangle(2.0, 1.0, 6, 4).unwrap());
        let h = ModeHierarchy::new(mesh, 10).unwrap();
        assert!(h.mode(0).iter().all(|&v| v == 1.0));
        assert_eq!(h.label(1), [1, 0]);
        assert_eq!(rank(h.span(10)), 10);
    }

    #[test]
    fn rejects_too_many_modes() {
        let mesh = Arc::new(Mesh::interval(0.0, 1.0, 4).unwrap());
        assert!(ModeHierarchy::new(mesh, 6).is_err());
    }
}
