use crate::energy::ProblemSpec;

/// Multiplicative deflation m(u) = prod_i (1 + rho / |u - u_i|_K^2) over
/// known critical points u_i.
#[derive(Debug, Clone)]
pub struct Deflation {
    known: Vec<Vec<f64>>,
    shift: f64,
}

impl Deflation {
    pub fn new(shift: f64) -> Self {
        Deflation {
            known: Vec::new(),
            shift,
        }
    }

    pub fn push(&mut self, u: Vec<f64>) {
        self.known.push(u);
    }

    /// Adds u and -u.
    pub fn push_pair(&mut self, u: &[f64]) {
        self.known.push(u.to_vec());
        self.known.push(u.iter().map(|x| -x).collect());
    }

    pub fn len(&self) -> usize {
        self.known.len()
    }

    pub fn is_empty(&self) -> bool {
        self.known.is_empty()
    }

    fn offsets<'a>(&'a self, u: &'a [f64]) -> impl Iterator<Item = Vec<f64>> + 'a {
        self.known
            .iter()
            .map(move |k| u.iter().zip(k).map(|(a, b)| a - b).collect())
    }

    pub fn factor(&self, prob: &ProblemSpec, u: &[f64]) -> f64 {
        self.offsets(u)
            .map(|e| 1.0 + self.shift / prob.h1_inner(&e, &e))
            .product()
    }

    /// grad(ln m)(u) . delta.
    pub fn log_slope(&self, prob: &ProblemSpec, u: &[f64], delta: &[f64]) -> f64 {
        self.offsets(u)
            .map(|e| {
                let d2 = prob.h1_inner(&e, &e);
                -2.0 * self.shift * prob.h1_inner(&e, delta) / (d2 * d2 + self.shift * d2)
            })
            .sum()
    }
}
