//! Radial grids and quadrature shared by the solvers: graded meshes that
//! resolve both the origin singularity and the exponential tail, plus
//! Gauss–Legendre panel integration against the radial measure |S^{d-1}| r^{d-1} dr.

use crate::{Error, Result};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

/// Surface measure |S^{d-1}| of the unit sphere: 2π (d=2) or 4π (d=3).
pub fn surface(d: u8) -> f64 {
    match d {
        2 => 2.0 * PI,
        _ => 4.0 * PI,
    }
}

/// Strictly increasing radii covering [r0, rmax], geometric near the origin
/// and uniform in the tail.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RadialGrid {
    pub radii: Vec<f64>,
}

impl RadialGrid {
    /// Geometric spacing with the given ratio from `r0` until the step reaches
    /// `h_tail`, then uniform steps of `h_tail` up to `rmax`.
    pub fn graded(r0: f64, rmax: f64, ratio: f64, h_tail: f64) -> Result<Self> {
        if !(r0 >= 1e-12 && rmax > r0) {
            return Err(Error::InvalidParams(format!(
                "grid requires 1e-12 <= r0 < rmax, got r0 = {r0}, rmax = {rmax}"
            )));
        }
        if !(ratio > 1.0) || !(h_tail > 0.0) {
            return Err(Error::InvalidParams(format!(
                "grid requires ratio > 1 and h_tail > 0, got {ratio}, {h_tail}"
            )));
        }
        let mut radii = vec![r0];
        let mut r = r0;
        loop {
            let h = (r * (ratio - 1.0)).min(h_tail);
            r += h;
            if r >= rmax {
                radii.push(rmax);
                break;
            }
            radii.push(r);
        }
        Ok(RadialGrid { radii })
    }

    pub fn r0(&self) -> f64 {
        self.radii[0]
    }

    pub fn rmax(&self) -> f64 {
        *self.radii.last().unwrap()
    }

    pub fn len(&self) -> usize {
        self.radii.len()
    }

    pub fn is_empty(&self) -> bool {
        self.radii.is_empty()
    }
}

/// 5-point Gauss–Legendre nodes and weights on [-1, 1].
pub const GL5: [(f64, f64); 5] = [
    (-0.906179845938664, 0.23692688505618908),
    (-0.5384693101056831, 0.47862867049936647),
    (0.0, 0.5688888888888889),
    (0.5384693101056831, 0.47862867049936647),
    (0.906179845938664, 0.23692688505618908),
];

/// 8-point Gauss–Legendre nodes and weights on [-1, 1].
const GL8: [(f64, f64); 8] = [
    (-0.9602898564975363, 0.10122853629037626),
    (-0.7966664774136267, 0.22238103445337448),
    (-0.525532409916329, 0.31370664587788727),
    (-0.18343464249564978, 0.362683783378362),
    (0.18343464249564978, 0.362683783378362),
    (0.525532409916329, 0.31370664587788727),
    (0.7966664774136267, 0.22238103445337448),
    (0.9602898564975363, 0.10122853629037626),
];

/// ∫_a^b f on one panel by 5-point Gauss–Legendre.
pub fn gl5<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> f64 {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    GL5.iter().map(|&(x, w)| w * f(c + h * x)).sum::<f64>() * h
}

/// ∫_a^b f on one panel by 8-point Gauss–Legendre.
pub fn gl8<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> f64 {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    GL8.iter().map(|&(x, w)| w * f(c + h * x)).sum::<f64>() * h
}

/// ∫_a^b f dr over geometric panels of the given ratio, 5-point
/// Gauss–Legendre per panel. Resolves power/log behavior toward r = a.
pub fn integrate_geometric<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, ratio: f64) -> f64 {
    assert!(a > 0.0 && b > a && ratio > 1.0);
    let mut total = 0.0;
    let mut lo = a;
    loop {
        let hi = (lo * ratio).min(b);
        total += gl5(f, lo, hi);
        if hi >= b {
            return total;
        }
        lo = hi;
    }
}
