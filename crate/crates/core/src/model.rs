//! Problem parameters and the spectral scalars of the point interaction:
//! β_α(λ), its root λ_α, the strong/weak regime split, the Sobolev regularity
//! window for the regular component, and the bootstrap exponent ladder.

use crate::{Error, Result};
use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use std::f64::consts::PI;

/// Euler–Mascheroni constant, 20 digits.
pub const EULER_GAMMA: f64 = 0.57721566490153286061;

/// Default slack resolving "L^{3+}" style open-endpoint conventions.
pub const DEFAULT_EPS: f64 = 0.01;

/// Extension parameter of -Δ_α; `Free` is the free Laplacian (α = ∞).
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Alpha {
    Finite(f64),
    Free,
}

impl Alpha {
    pub fn finite(self) -> Option<f64> {
        match self {
            Alpha::Finite(a) => Some(a),
            Alpha::Free => None,
        }
    }
}

impl Serialize for Alpha {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            Alpha::Finite(a) => s.serialize_f64(*a),
            Alpha::Free => s.serialize_str("free"),
        }
    }
}

impl<'de> Deserialize<'de> for Alpha {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Num(f64),
            Str(String),
        }
        match Raw::deserialize(d)? {
            Raw::Num(a) => Ok(Alpha::Finite(a)),
            Raw::Str(s) if s == "free" => Ok(Alpha::Free),
            Raw::Str(s) => Err(D::Error::custom(format!(
                "alpha must be a number or \"free\", got {s:?}"
            ))),
        }
    }
}

/// Problem data for (-Δ_α+λ)u = σ|u|^{p-1}u.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Params {
    /// Space dimension, 2 or 3.
    pub d: u8,
    /// Sign of the nonlinearity: +1 source, -1 absorption.
    pub sigma: f64,
    /// Nonlinearity exponent, p > 1 (and p < 3 when d = 3).
    pub p: f64,
    /// Frequency λ > 0.
    pub lambda: f64,
    /// Extension parameter.
    pub alpha: Alpha,
}

impl Params {
    pub fn new(d: u8, sigma: f64, p: f64, lambda: f64, alpha: Alpha) -> Result<Self> {
        let params = Params { d, sigma, p, lambda, alpha };
        params.validate()?;
        Ok(params)
    }

    pub fn validate(&self) -> Result<()> {
        if self.d != 2 && self.d != 3 {
            return Err(Error::InvalidParams(format!("d = {} not in {{2, 3}}", self.d)));
        }
        if self.sigma != 1.0 && self.sigma != -1.0 {
            return Err(Error::InvalidParams(format!(
                "sigma = {} not in {{-1, +1}}",
                self.sigma
            )));
        }
        if !(self.p > 1.0) || !self.p.is_finite() {
            return Err(Error::InvalidParams(format!("p = {} must be > 1", self.p)));
        }
        if self.d == 3 && self.p >= 3.0 {
            return Err(Error::OutOfRange { d: 3, p: self.p });
        }
        if !(self.lambda > 0.0) || !self.lambda.is_finite() {
            return Err(Error::InvalidParams(format!(
                "lambda = {} must be > 0",
                self.lambda
            )));
        }
        if let Alpha::Finite(a) = self.alpha {
            if !a.is_finite() {
                return Err(Error::InvalidParams(format!("alpha = {a} must be finite")));
            }
        }
        Ok(())
    }
}

/// β_α(λ) = α + γ/2π + (1/2π) ln(√λ/2) (d=2), α + √λ/4π (d=3).
///
/// The relation β_α(λ) q = f(0) pairs the charge with the boundary value of
/// the regular component.
pub fn beta(params: &Params, lambda: f64) -> Result<f64> {
    let alpha = params.alpha.finite().ok_or(Error::BetaUndefinedForFree)?;
    if !(lambda > 0.0) {
        return Err(Error::InvalidParams(format!("lambda = {lambda} must be > 0")));
    }
    Ok(match params.d {
        2 => alpha + EULER_GAMMA / (2.0 * PI) + (lambda.sqrt() / 2.0).ln() / (2.0 * PI),
        _ => alpha + lambda.sqrt() / (4.0 * PI),
    })
}

/// The unique positive root of β_α, or 0 when β_α has no positive root
/// (d = 3 with α ≥ 0, or α free). -λ_α is the bottom of the spectrum of -Δ_α.
pub fn lambda_alpha(params: &Params) -> f64 {
    match (params.d, params.alpha) {
        (2, Alpha::Finite(a)) => 4.0 * (-4.0 * PI * a - 2.0 * EULER_GAMMA).exp(),
        (3, Alpha::Finite(a)) if a < 0.0 => 16.0 * PI * PI * a * a,
        _ => 0.0,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Regime {
    /// f continuous at 0; α determined by β_α(λ)q = f(0).
    Strong,
    /// d = 3, p ∈ [2,3): f itself singular at 0, α undetermined.
    Weak,
    /// d = 3, p ≥ 3: outside the admissible range.
    OutOfRange,
}

pub fn regime_classify(d: u8, p: f64) -> Regime {
    if d == 2 || p < 2.0 {
        Regime::Strong
    } else if p < 3.0 {
        Regime::Weak
    } else {
        Regime::OutOfRange
    }
}

/// Regularity window: the set of s with u ∈ H^s_loc guaranteed by the
/// equivalence theorem. Degenerates to the point s = 2 when f is H².
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RegularityRange {
    pub s_low: f64,
    pub s_high: f64,
    pub low_open: bool,
    pub high_open: bool,
}

impl RegularityRange {
    fn point(s: f64) -> Self {
        RegularityRange { s_low: s, s_high: s, low_open: false, high_open: false }
    }

    fn open(s_low: f64, s_high: f64) -> Self {
        RegularityRange { s_low, s_high, low_open: true, high_open: true }
    }

    pub fn is_point(&self) -> bool {
        self.s_low == self.s_high
    }
}

pub fn sobolev_regularity(d: u8, p: f64) -> Result<RegularityRange> {
    match regime_classify(d, p) {
        Regime::OutOfRange => Err(Error::OutOfRange { d, p }),
        Regime::Weak => Ok(RegularityRange::open(0.5, 3.5 - p)),
        Regime::Strong if d == 3 && p >= 1.5 => Ok(RegularityRange::open(1.5, 3.5 - p)),
        Regime::Strong => Ok(RegularityRange::point(2.0)),
    }
}

/// The descending exponent ladder 1/θ_k = 1/θ₀ + k (p-3)/3 of the regularity
/// bootstrap, returned up to and including its first strictly negative term.
/// K is the index of that term: the number of bootstrap steps needed.
pub fn bootstrap_ladder(p: f64, theta0_inv: f64) -> Result<(Vec<f64>, usize)> {
    if !(p > 1.0 && p < 3.0) {
        return Err(Error::InvalidParams(format!(
            "bootstrap ladder requires p in (1, 3), got {p}"
        )));
    }
    if !(theta0_inv > 0.0 && theta0_inv < 0.5) {
        return Err(Error::InvalidParams(format!(
            "1/theta_0 = {theta0_inv} must lie in (0, 1/2)"
        )));
    }
    let step = (p - 3.0) / 3.0; // strictly negative for p < 3
    let mut seq = Vec::new();
    let mut k = 0usize;
    loop {
        let v = theta0_inv + k as f64 * step;
        seq.push(v);
        if v < 0.0 {
            return Ok((seq, k));
        }
        k += 1;
    }
}

/// Resolve the "L^{3+}" convention: 1/θ₀ = 1/3 - ε.
pub fn theta0_inv_from_eps(eps: f64) -> f64 {
    1.0 / 3.0 - eps
}

/// Invert β_α(λ) q = f(0) for α. A regular solution (q = 0) has no finite α.
pub fn alpha_from_charge(q: f64, f0: f64, lambda: f64, d: u8) -> Result<f64> {
    if q == 0.0 {
        return Err(Error::RegularSolution);
    }
    if !(lambda > 0.0) {
        return Err(Error::InvalidParams(format!("lambda = {lambda} must be > 0")));
    }
    let target = f0 / q; // β_α(λ) must equal this
    Ok(match d {
        2 => target - EULER_GAMMA / (2.0 * PI) - (lambda.sqrt() / 2.0).ln() / (2.0 * PI),
        _ => target - lambda.sqrt() / (4.0 * PI),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params(d: u8, alpha: Alpha) -> Params {
        Params { d, sigma: 1.0, p: 1.5, lambda: 1.0, alpha }
    }

    #[test]
    fn beta_closed_forms() {
        // d=3, α=0, λ=16π²: √λ/4π = 1.
        let b = beta(&params(3, Alpha::Finite(0.0)), 16.0 * PI * PI).unwrap();
        assert!((b - 1.0).abs() <= 1e-14);
        // d=3, α=-1: λ_α = 16π² is the root.
        let b = beta(&params(3, Alpha::Finite(-1.0)), 16.0 * PI * PI).unwrap();
        assert!(b.abs() <= 1e-14);
        // d=2, α=0: root at λ = 4 e^{-2γ}.
        let b = beta(&params(2, Alpha::Finite(0.0)), 4.0 * (-2.0 * EULER_GAMMA).exp()).unwrap();
        assert!(b.abs() <= 1e-14);
    }

    #[test]
    fn beta_rejects_free() {
        assert!(matches!(
            beta(&params(2, Alpha::Free), 1.0),
            Err(Error::BetaUndefinedForFree)
        ));
    }

    #[test]
    fn lambda_alpha_closed_forms() {
        let la = lambda_alpha(&params(2, Alpha::Finite(0.0)));
        assert!((la - 1.26094700674877359).abs() <= 1e-14);
        let la = lambda_alpha(&params(3, Alpha::Finite(-1.0)));
        assert!((la - 16.0 * PI * PI).abs() <= 1e-12);
        assert_eq!(lambda_alpha(&params(3, Alpha::Finite(0.5))), 0.0);
        assert_eq!(lambda_alpha(&params(3, Alpha::Free)), 0.0);
        assert_eq!(lambda_alpha(&params(2, Alpha::Free)), 0.0);
    }

    #[test]
    fn lambda_alpha_is_root_of_beta() {
        for &(d, a) in &[(2u8, -0.3), (2, 0.0), (2, 0.7), (3, -0.2), (3, -1.0)] {
            let pr = params(d, Alpha::Finite(a));
            let la = lambda_alpha(&pr);
            assert!(la > 0.0);
            assert!(beta(&pr, la).unwrap().abs() <= 1e-12, "d={d} a={a}");
        }
    }

    #[test]
    fn lambda_alpha_bisection_crosscheck() {
        // Criterion-style check: the closed form matches a bisection root of β.
        for pr in [params(2, Alpha::Finite(0.0)), params(3, Alpha::Finite(-1.0))] {
            let la = lambda_alpha(&pr);
            let (mut lo, mut hi) = (la / 4.0, la * 4.0);
            assert!(beta(&pr, lo).unwrap() < 0.0 && beta(&pr, hi).unwrap() > 0.0);
            for _ in 0..200 {
                let mid = 0.5 * (lo + hi);
                if beta(&pr, mid).unwrap() < 0.0 {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            assert!((0.5 * (lo + hi) - la).abs() <= 1e-12 * la.max(1.0));
        }
    }

    #[test]
    fn lambda_alpha_monotone_in_alpha() {
        let mut prev = f64::INFINITY;
        for i in 0..50 {
            let a = -2.0 + 0.1 * i as f64;
            let la = lambda_alpha(&params(2, Alpha::Finite(a)));
            assert!(la < prev);
            prev = la;
        }
        let mut prev = f64::INFINITY;
        for i in 0..40 {
            let a = -2.0 + 0.05 * i as f64; // stays below 0
            let la = lambda_alpha(&params(3, Alpha::Finite(a)));
            assert!(la < prev);
            prev = la;
        }
    }

    #[test]
    fn regime_table() {
        assert_eq!(regime_classify(2, 5.0), Regime::Strong);
        assert_eq!(regime_classify(2, 1.01), Regime::Strong);
        assert_eq!(regime_classify(3, 1.9), Regime::Strong);
        assert_eq!(regime_classify(3, 2.0), Regime::Weak);
        assert_eq!(regime_classify(3, 2.5), Regime::Weak);
        assert_eq!(regime_classify(3, 3.0), Regime::OutOfRange);
        assert_eq!(regime_classify(3, 3.5), Regime::OutOfRange);
    }

    #[test]
    fn regularity_ranges() {
        let r = sobolev_regularity(3, 1.8).unwrap();
        assert_eq!((r.s_low, r.s_high), (1.5, 1.7));
        assert!(r.low_open && r.high_open);
        let r = sobolev_regularity(2, 4.0).unwrap();
        assert!(r.is_point() && r.s_low == 2.0);
        let r = sobolev_regularity(3, 2.5).unwrap();
        assert_eq!((r.s_low, r.s_high), (0.5, 1.0));
        let r = sobolev_regularity(3, 1.2).unwrap();
        assert!(r.is_point() && r.s_low == 2.0);
        assert!(sobolev_regularity(3, 3.5).is_err());
    }

    #[test]
    fn ladder_examples() {
        let t0 = theta0_inv_from_eps(0.01);
        let (seq, k) = bootstrap_ladder(2.5, t0).unwrap();
        assert_eq!(k, 2);
        assert_eq!(seq.len(), 3);
        let (_, k) = bootstrap_ladder(2.9, t0).unwrap();
        assert_eq!(k, 10);
        let (_, k) = bootstrap_ladder(1.5, t0).unwrap();
        assert_eq!(k, 1);
    }

    #[test]
    fn ladder_differences_exact() {
        let (seq, _) = bootstrap_ladder(2.7, 0.3).unwrap();
        let step = (2.7 - 3.0) / 3.0;
        for w in seq.windows(2) {
            assert!((w[1] - w[0] - step).abs() <= 1e-15);
        }
        assert!(*seq.last().unwrap() < 0.0);
        assert!(seq[seq.len() - 2] >= 0.0);
    }

    #[test]
    fn ladder_rejects_bad_p() {
        assert!(bootstrap_ladder(3.0, 0.3).is_err());
        assert!(bootstrap_ladder(1.0, 0.3).is_err());
    }

    #[test]
    fn alpha_from_charge_examples() {
        let a = alpha_from_charge(1.0, 1.0, 16.0 * PI * PI, 3).unwrap();
        assert!(a.abs() <= 1e-14);
        let a = alpha_from_charge(2.0, 0.0, 4.0 * (-2.0 * EULER_GAMMA).exp(), 2).unwrap();
        assert!(a.abs() <= 1e-14);
        // Sign symmetry: (-q, -f0) gives the same α.
        let pr = params(3, Alpha::Finite(0.0));
        let f0 = beta(&pr, 1.0).unwrap();
        let a = alpha_from_charge(-1.0, -f0, 1.0, 3).unwrap();
        assert!(a.abs() <= 1e-14);
    }

    #[test]
    fn alpha_from_charge_rejects_regular() {
        assert!(matches!(
            alpha_from_charge(0.0, 1.0, 1.0, 2),
            Err(Error::RegularSolution)
        ));
    }

    #[test]
    fn params_validation() {
        assert!(Params::new(4, 1.0, 2.0, 1.0, Alpha::Free).is_err());
        assert!(Params::new(2, 0.5, 2.0, 1.0, Alpha::Free).is_err());
        assert!(Params::new(2, 1.0, 1.0, 1.0, Alpha::Free).is_err());
        assert!(Params::new(3, 1.0, 3.0, 1.0, Alpha::Free).is_err());
        assert!(Params::new(2, 1.0, 3.0, 0.0, Alpha::Free).is_err());
        assert!(Params::new(2, -1.0, 3.0, 1.0, Alpha::Finite(0.0)).is_ok());
    }

    #[test]
    fn alpha_serde_round_trip() {
        let p = Params::new(2, 1.0, 3.0, 1.0, Alpha::Finite(0.25)).unwrap();
        let s = serde_json::to_string(&p).unwrap();
        assert_eq!(serde_json::from_str::<Params>(&s).unwrap(), p);
        let p = Params::new(3, -1.0, 2.5, 2.0, Alpha::Free).unwrap();
        let s = serde_json::to_string(&p).unwrap();
        assert!(s.contains("\"free\""));
        assert_eq!(serde_json::from_str::<Params>(&s).unwrap(), p);
    }
}
