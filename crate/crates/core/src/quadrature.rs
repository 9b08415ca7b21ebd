//! Reference quadrature rules on the unit segment and the reference triangle.
//!
//! All rules have strictly positive weights. Triangle rules are symmetric
//! (Strang–Fix / Dunavant) and given in barycentric coordinates with weights
//! normalised to sum to one.

use crate::error::{Error, Result};

pub const MAX_ORDER: usize = 5;

/// Gauss–Legendre rule on [0, 1] exact for polynomials of degree `order`.
/// Returns (abscissa, weight) pairs; weights sum to 1.
pub fn segment_rule(order: usize) -> Result<Vec<(f64, f64)>> {
    check_order(order)?;
    let rule: Vec<(f64, f64)> = match (order + 1).div_ceil(2) {
        1 => vec![(0.0, 2.0)],
        2 => {
            let a = 1.0 / 3f64.sqrt();
            vec![(-a, 1.0), (a, 1.0)]
        }
        _ => {
            let a = (3.0f64 / 5.0).sqrt();
            vec![(-a, 5.0 / 9.0), (0.0, 8.0 / 9.0), (a, 5.0 / 9.0)]
        }
    };
    Ok(rule
        .into_iter()
        .map(|(x, w)| (0.5 * (x + 1.0), 0.5 * w))
        .collect())
}

/// Symmetric triangle rule exact for degree `order`.
/// Returns (barycentric coordinates, weight) with weights summing to 1.
pub fn triangle_rule(order: usize) -> Result<Vec<([f64; 3], f64)>> {
    check_order(order)?;
    let mut rule = Vec::new();
    match order {
        1 => rule.push(([1.0 / 3.0; 3], 1.0)),
        2 => orbit(&mut rule, 1.0 / 6.0, 1.0 / 3.0),
        // degree 3 uses the positive 6-point degree-4 rule
        3 | 4 => {
            orbit(&mut rule, 0.445_948_490_915_965, 0.223_381_589_678_011);
            orbit(&mut rule, 0.091_576_213_509_771, 0.109_951_743_655_322);
        }
        _ => {
            rule.push(([1.0 / 3.0; 3], 0.225));
            orbit(&mut rule, 0.470_142_064_105_115, 0.132_394_152_788_506);
            orbit(&mut rule, 0.101_286_507_323_456, 0.125_939_180_544_827);
        }
    }
    Ok(rule)
}

fn orbit(rule: &mut Vec<([f64; 3], f64)>, a: f64, w: f64) {
    let b = 1.0 - 2.0 * a;
    rule.push(([a, a, b], w));
    rule.push(([a, b, a], w));
    rule.push(([b, a, a], w));
}

fn check_order(order: usize) -> Result<()> {
    if (1..=MAX_ORDER).contains(&order) {
        Ok(())
    } else {
        Err(Error::UnsupportedOrder(order))
    }
}
