//! Hypothesis sets of the existence regimes, evaluated on a concrete problem.
//! Every solver mode reports its own set and warns on failure.

use serde::Serialize;

use crate::energy::{check_conditions, ProblemSpec, Sampler};
use crate::error::Result;
use crate::exponent::{Critical, Region};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HypothesisItem {
    pub name: String,
    pub pass: bool,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HypothesisReport {
    pub regime: &'static str,
    pub satisfied: bool,
    pub items: Vec<HypothesisItem>,
}

impl HypothesisReport {
    fn new(regime: &'static str, items: Vec<HypothesisItem>) -> Self {
        HypothesisReport {
            regime,
            satisfied: items.iter().all(|i| i.pass),
            items,
        }
    }

    pub fn warning(&self) -> Option<String> {
        if self.satisfied {
            return None;
        }
        let failed: Vec<&str> = self
            .items
            .iter()
            .filter(|i| !i.pass)
            .map(|i| i.name.as_str())
            .collect();
        Some(format!(
            "{} hypotheses not verified ({}); result is best-effort",
            self.regime,
            failed.join(", ")
        ))
    }
}

fn item(name: impl Into<String>, pass: bool, detail: String) -> HypothesisItem {
    HypothesisItem {
        name: name.into(),
        pass,
        detail,
    }
}

struct Extrema {
    pm_minus: f64,
    pmax_plus: f64,
    alpha: Option<(f64, f64)>,
    beta: Option<(f64, f64)>,
}

fn extrema(prob: &ProblemSpec) -> Result<Extrema> {
    Ok(Extrema {
        pm_minus: prob.p_min()?.extrema()?.0,
        pmax_plus: prob.p_max()?.extrema()?.1,
        alpha: prob.f().map(|f| f.growth_extrema(Region::Interior)).transpose()?,
        beta: prob.g().map(|g| g.growth_extrema(Region::Boundary)).transpose()?,
    })
}

fn subcritical(prob: &ProblemSpec) -> Result<Vec<HypothesisItem>> {
    Ok(prob
        .subcriticality()?
        .into_iter()
        .map(|r| {
            let (name, detail) = match r.region {
                Region::Interior => ("alpha < p_M*", "interior Sobolev critical exponent of p_M"),
                Region::Boundary => ("beta < p_M,*", "trace critical exponent of p_M"),
            };
            let margin = match r.margin {
                Critical::Finite(m) => format!("{m:.6}"),
                Critical::Infinite => "inf".into(),
            };
            item(name, r.pass, format!("{detail}; worst margin {margin}"))
        })
        .collect())
}

/// Sampled conditions `which` (indices 0..=3) for f and g. Terms with zero
/// weight are absent from phi and skipped; a missing record with non-zero
/// weight fails when `required`.
fn conditions(
    prob: &ProblemSpec,
    which: &[usize],
    sampler: &Sampler,
    required: bool,
) -> Result<Vec<HypothesisItem>> {
    let pmax_plus = prob.p_max()?.extrema()?.1;
    let mut out = Vec::new();
    for (spec, weight, region, label) in [
        (prob.f(), prob.lambda(), Region::Interior, "f"),
        (prob.g(), prob.mu(), Region::Boundary, "g"),
    ] {
        if weight == 0.0 {
            continue;
        }
        let Some(spec) = spec else {
            if required {
                out.push(item(label, false, format!("no {label} record")));
            }
            continue;
        };
        let report = check_conditions(spec, pmax_plus, sampler, region);
        for &k in which {
            let c = &report.items[k];
            out.push(item(
                c.name.clone(),
                c.pass,
                format!("sampled worst margin {:.3e}", c.worst_margin),
            ));
        }
    }
    Ok(out)
}

/// alpha+, beta+ < p_m- with growth bounds on f, g.
pub fn coercive(prob: &ProblemSpec, sampler: &Sampler) -> Result<HypothesisReport> {
    let e = extrema(prob)?;
    let mut items = Vec::new();
    if let Some((_, hi)) = e.alpha {
        items.push(item("alpha+ < p_m-", hi < e.pm_minus, format!("alpha+ = {hi}, p_m- = {}", e.pm_minus)));
    }
    if let Some((_, hi)) = e.beta {
        items.push(item("beta+ < p_m-", hi < e.pm_minus, format!("beta+ = {hi}, p_m- = {}", e.pm_minus)));
    }
    items.extend(conditions(prob, &[0], sampler, false)?);
    Ok(HypothesisReport::new("coercive", items))
}

/// Growth, AR and small-o conditions, alpha-, beta- > p_M+, lambda, mu >= 0
/// not both zero.
pub fn mountain_pass(prob: &ProblemSpec, sampler: &Sampler) -> Result<HypothesisReport> {
    let e = extrema(prob)?;
    let (l, m) = (prob.lambda(), prob.mu());
    let mut items = vec![item(
        "lambda, mu >= 0, not both zero",
        l >= 0.0 && m >= 0.0 && l * l + m * m != 0.0,
        format!("lambda = {l}, mu = {m}"),
    )];
    if l != 0.0 {
        items.push(lower_above(e.alpha, "alpha- > p_M+", e.pmax_plus));
    }
    if m != 0.0 {
        items.push(lower_above(e.beta, "beta- > p_M+", e.pmax_plus));
    }
    items.extend(conditions(prob, &[0, 1, 2], sampler, true)?);
    items.extend(subcritical(prob)?);
    Ok(HypothesisReport::new("mountain_pass", items))
}

/// Growth, AR and oddness conditions, max(alpha+, beta+) > p_M+, lambda, mu > 0.
pub fn fountain(prob: &ProblemSpec, sampler: &Sampler) -> Result<HypothesisReport> {
    let e = extrema(prob)?;
    let (l, m) = (prob.lambda(), prob.mu());
    let top = e.alpha.map_or(f64::NEG_INFINITY, |a| a.1).max(e.beta.map_or(f64::NEG_INFINITY, |b| b.1));
    let mut items = vec![
        item("lambda, mu > 0", l > 0.0 && m > 0.0, format!("lambda = {l}, mu = {m}")),
        item(
            "max(alpha+, beta+) > p_M+",
            top > e.pmax_plus,
            format!("max = {top}, p_M+ = {}", e.pmax_plus),
        ),
    ];
    items.extend(conditions(prob, &[0, 1, 3], sampler, true)?);
    items.extend(subcritical(prob)?);
    Ok(HypothesisReport::new("fountain", items))
}

/// Pure powers |t|^(alpha-2) t, |t|^(beta-2) t with alpha- > p_M+,
/// beta+ < p_m-. `high` selects lambda > 0 (high-energy pairs), otherwise
/// mu > 0 (small negative-energy pairs).
pub fn power_pairs(prob: &ProblemSpec, high: bool) -> Result<HypothesisReport> {
    let e = extrema(prob)?;
    let mut items = vec![
        item(
            "f is a pure power",
            prob.f().is_some_and(|f| f.is_power()),
            "f(x, t) = |t|^(alpha-2) t".into(),
        ),
        item(
            "g is a pure power",
            prob.g().is_some_and(|g| g.is_power()),
            "g(x, t) = |t|^(beta-2) t".into(),
        ),
        lower_above(e.alpha, "alpha- > p_M+", e.pmax_plus),
    ];
    items.push(match e.beta {
        Some((_, hi)) => item("beta+ < p_m-", hi < e.pm_minus, format!("beta+ = {hi}, p_m- = {}", e.pm_minus)),
        None => item("beta+ < p_m-", false, "no g record".into()),
    });
    items.push(if high {
        item("lambda > 0", prob.lambda() > 0.0, format!("lambda = {}", prob.lambda()))
    } else {
        item("mu > 0", prob.mu() > 0.0, format!("mu = {}", prob.mu()))
    });
    items.extend(subcritical(prob)?);
    Ok(HypothesisReport::new(
        if high { "power_pairs_high" } else { "power_pairs_low" },
        items,
    ))
}

fn lower_above(range: Option<(f64, f64)>, name: &str, bound: f64) -> HypothesisItem {
    match range {
        Some((lo, _)) => item(name, lo > bound, format!("{lo} vs p_M+ = {bound}")),
        None => item(name, false, "record missing".into()),
    }
}
