//! Sampling falsifiers for the growth (0), Ambrosetti–Rabinowitz (1),
//! small-o at the origin (2) and oddness (3) hypotheses on f or g.
//!
//! A failing item carries a concrete counterexample. A passing item only
//! means no counterexample was found on the grid.

use serde::Serialize;

use super::nonlinearity::{pow_abs, NonlinearitySpec, POWER_CAP};
use crate::exponent::Region;

const TOL: f64 = 1e-12;

/// Sampling grid: `x_points` spatial samples times t in
/// +-logspace(t_min, t_max, t_count).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Sampler {
    pub x_points: usize,
    pub t_min: f64,
    pub t_max: f64,
    pub t_count: usize,
    /// Largest ratio |f| / |t|^(p_M+ - 1) accepted at the smallest |t|.
    pub small_o_threshold: f64,
}

impl Default for Sampler {
    fn default() -> Self {
        Sampler {
            x_points: 64,
            t_min: 1e-4,
            t_max: 1e3,
            t_count: 57,
            small_o_threshold: 0.1,
        }
    }
}

impl Sampler {
    /// Positive half of the t grid, ascending.
    pub fn magnitudes(&self) -> Vec<f64> {
        let n = self.t_count.max(2);
        let (a, b) = (self.t_min.ln(), self.t_max.ln());
        (0..n)
            .map(|k| (a + (b - a) * k as f64 / (n - 1) as f64).exp())
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Witness {
    pub x: [f64; 2],
    pub t: f64,
}

/// `worst_margin` is signed so that negative values indicate violation.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConditionItem {
    pub name: String,
    pub pass: bool,
    pub worst_margin: f64,
    pub witness_point: Option<Witness>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConditionReport {
    pub region: Region,
    pub pass: bool,
    pub items: Vec<ConditionItem>,
    pub scope: &'static str,
}

impl ConditionReport {
    pub fn item(&self, name: &str) -> Option<&ConditionItem> {
        self.items.iter().find(|i| i.name == name)
    }
}

struct Tracker {
    name: String,
    pass: bool,
    worst: f64,
    witness: Option<Witness>,
}

impl Tracker {
    fn new(name: String) -> Self {
        Tracker {
            name,
            pass: true,
            worst: f64::INFINITY,
            witness: None,
        }
    }

    /// Records a sample. Failing samples take precedence as witnesses;
    /// within the same class the smallest margin wins.
    fn record(&mut self, margin: f64, ok: bool, at: Witness) {
        let better = match (ok, self.pass) {
            (false, true) => true,
            (true, false) => false,
            _ => margin < self.worst,
        };
        if !ok {
            self.pass = false;
        }
        if better {
            self.worst = margin;
            self.witness = Some(at);
        }
    }

    fn finish(self) -> ConditionItem {
        ConditionItem {
            name: self.name,
            pass: self.pass,
            worst_margin: self.worst,
            witness_point: self.witness,
        }
    }
}

/// Samples hypotheses 0..3 of `spec` against the threshold exponent
/// `p_max_plus` (= p_M+). Spatial samples come from mesh nodes, restricted
/// to boundary nodes for `Region::Boundary`.
pub fn check_conditions(
    spec: &NonlinearitySpec,
    p_max_plus: f64,
    sampler: &Sampler,
    region: Region,
) -> ConditionReport {
    let prefix = match region {
        Region::Interior => "f",
        Region::Boundary => "g",
    };
    let mesh = spec.growth().mesh();
    let candidates: Vec<[f64; 2]> = match region {
        Region::Interior => mesh.nodes().to_vec(),
        Region::Boundary => mesh.boundary_nodes().iter().map(|&i| mesh.nodes()[i]).collect(),
    };
    let xs = spread(&candidates, sampler.x_points);
    let mags = sampler.magnitudes();
    let mut ts: Vec<f64> = mags.iter().map(|t| -t).rev().collect();
    ts.extend(&mags);

    let mut growth = Tracker::new(format!("{prefix}0"));
    let mut ar = Tracker::new(format!("{prefix}1"));
    let mut small = Tracker::new(format!("{prefix}2"));
    let mut odd = Tracker::new(format!("{prefix}3"));
    let theta = spec.theta;

    for &x in &xs {
        let alpha = spec.growth().eval(x);
        for &t in &ts {
            let at = Witness { x, t };
            let (f, big_f) = match (spec.f(x, t), spec.primitive(x, t)) {
                (Ok(f), Ok(big_f)) => (f, big_f),
                _ => {
                    growth.record(f64::NEG_INFINITY, false, at);
                    continue;
                }
            };
            let scale = f.abs().max(1.0);
            match pow_abs(t, alpha - 1.0, POWER_CAP) {
                Ok(p) => {
                    let m = (spec.c1 + spec.c2 * p - f.abs()) / scale;
                    growth.record(m, m >= -TOL, at);
                }
                Err(_) => growth.record(f64::NEG_INFINITY, false, at),
            }
            if t.abs() >= spec.threshold {
                let ft = f * t;
                let s = ft.abs().max(1.0);
                let m = (theta * big_f).min(ft - theta * big_f) / s;
                ar.record(m, theta * big_f > 0.0 && ft - theta * big_f >= -TOL * s, at);
            }
            match spec.f(x, -t) {
                Ok(fm) => {
                    let m = -(fm + f).abs() / scale;
                    odd.record(m, m >= -TOL, at);
                }
                Err(_) => odd.record(f64::NEG_INFINITY, false, at),
            }
        }
        for sign in [1.0, -1.0] {
            let ratios: Vec<f64> = mags
                .iter()
                .take(3)
                .map(|&t| {
                    let t = sign * t;
                    spec.f(x, t).map_or(f64::INFINITY, |f| {
                        f.abs() / t.abs().powf(p_max_plus - 1.0)
                    })
                })
                .collect();
            let decreasing = ratios.windows(2).all(|w| w[0] <= w[1] * (1.0 + TOL));
            let m = sampler.small_o_threshold - ratios[0];
            small.record(m, m >= 0.0 && decreasing, Witness { x, t: sign * mags[0] });
        }
    }

    if theta <= p_max_plus {
        let m = theta - p_max_plus;
        if ar.pass || m < ar.worst {
            ar.worst = m;
        }
        ar.pass = false;
    }

    let items: Vec<ConditionItem> = [growth, ar, small, odd].into_iter().map(Tracker::finish).collect();
    ConditionReport {
        region,
        pass: items.iter().all(|i| i.pass),
        items,
        scope: "sampling falsifier: a pass means no counterexample on the grid",
    }
}

fn spread(points: &[[f64; 2]], k: usize) -> Vec<[f64; 2]> {
    if k == 0 || points.is_empty() {
        return Vec::new();
    }
    if points.len() <= k {
        return points.to_vec();
    }
    (0..k)
        .map(|i| points[i * (points.len() - 1) / (k - 1).max(1)])
        .collect()
}
