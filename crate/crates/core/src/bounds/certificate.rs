//! Fejér-kernel localization certificates.
//!
//! With `c_m = F_m(π/(2m+1))` and `p = F_m^ℓ (F_m - c_m)` centered at `x`,
//! `∫ p W > 0` forces every equal-weight quadrature of degree `≥ 2m(ℓ+1)` to
//! place a node where `F_m(· - x) ≥ c_m`. Applying exactness to `F_m^ℓ` then
//! gives `(I/N) c_m^ℓ ≤ ∫ F_m^ℓ(· - x) W`, so every `N` below
//! `I c_m^ℓ / ∫ F_m^ℓ(· - x) W` is infeasible.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::Serialize;

use super::{require_n, r_trig, BoundsError};
use crate::fit::{power_law, LinearFit};
use crate::quad::Tolerance;
use crate::trig::{fejer_at_first_zero_half, fejer_value};
use crate::weight::{Domain, WeightError, WeightSpec, TWO_PI};

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Certificate {
    pub n: usize,
    pub ell: u32,
    pub m: usize,
    pub center: f64,
    /// `m = 0`: the polynomial degree budget admits no localization.
    pub void: bool,
    /// `∫ F_m^ℓ (F_m - c_m) W` around the center.
    pub positivity: f64,
    /// Node counts strictly below this are infeasible (when `positivity > 0`).
    pub threshold: f64,
    /// The weaker closed-form threshold `I (2/π)^{2ℓ} / (3 ∫_{|θ-x| ≤ π/(2m+1)} W)`.
    pub closed_form_threshold: f64,
    pub diagnostic: Option<String>,
}

impl Certificate {
    /// Smallest node count not excluded, if the certificate is valid.
    pub fn lower_bound(&self) -> Option<u64> {
        if self.void || !(self.positivity > 0.0) || !self.threshold.is_finite() {
            None
        } else {
            Some(self.threshold.ceil().max(1.0) as u64)
        }
    }

    pub fn excludes(&self, nodes: usize) -> bool {
        !self.void && self.positivity > 0.0 && (nodes as f64) < self.threshold
    }
}

/// `ℓ = ⌈5 log₂(π² L)⌉`.
pub fn default_ell(l_hat: f64) -> u32 {
    (5.0 * (PI * PI * l_hat).log2()).ceil().max(0.0) as u32
}

fn fejer_breaks(m: usize, center: f64) -> Vec<f64> {
    let q = (2 * m + 1) as f64;
    let mut b: Vec<f64> = (-(2 * m as i64 + 1)..=(2 * m as i64 + 1))
        .map(|j| center + TWO_PI * j as f64 / q)
        .collect();
    b.push(center - PI / q);
    b.push(center + PI / q);
    b.push(center);
    b
}

/// `∫ F_m(θ - x)^r W(θ) dθ` over one period.
fn fejer_power_integral(weight: &WeightSpec, m: usize, r: u32, center: f64) -> Result<f64, WeightError> {
    weight.integrate_product(
        center - PI,
        center + PI,
        |t| fejer_value(m, t - center).powi(r as i32),
        &fejer_breaks(m, center),
        Tolerance::relative(1e-11),
    )
}

/// Localization certificate for degree `n` using the doubling estimate `l_hat`.
pub fn certificate(
    weight: &WeightSpec,
    n: usize,
    l_hat: f64,
    ell_override: Option<u32>,
    center: Option<f64>,
) -> Result<Certificate, BoundsError> {
    require_n(n)?;
    if weight.domain() != Domain::Circle {
        return Err(WeightError::WrongDomain { expected: Domain::Circle }.into());
    }
    if !(l_hat >= 1.0) {
        return Err(BoundsError::InvalidInput("doubling estimate must be at least 1".into()));
    }
    let ell = ell_override.unwrap_or_else(|| default_ell(l_hat));
    let m = n / (2 * (ell as usize + 1));
    let center = match center {
        Some(c) => c,
        None => r_trig(weight, n)?.minimizer,
    };
    if m == 0 {
        return Ok(Certificate {
            n,
            ell,
            m,
            center,
            void: true,
            positivity: 0.0,
            threshold: 0.0,
            closed_form_threshold: 0.0,
            diagnostic: Some(format!(
                "certificate void: n = {n} < 2(ℓ+1) = {} leaves m = 0",
                2 * (ell + 1)
            )),
        });
    }
    let mass = weight.total_mass()?;
    let c = fejer_at_first_zero_half(m);
    let b = fejer_power_integral(weight, m, ell, center)?;
    let a = fejer_power_integral(weight, m, ell + 1, center)?;
    let positivity = a - c * b;
    let threshold = mass * c.powi(ell as i32) / b;
    let q = (2 * m + 1) as f64;
    let arc = weight.integrate_product(center - PI / q, center + PI / q, |_| 1.0, &[center], Tolerance::relative(1e-11))?;
    let closed_form_threshold = mass * (2.0 / PI).powi(2 * ell as i32) / (3.0 * arc);
    let diagnostic = if positivity > 0.0 {
        None
    } else {
        Some(format!(
            "localization polynomial has non-positive weighted integral {positivity:e}; no node is forced near {center}"
        ))
    };
    Ok(Certificate {
        n,
        ell,
        m,
        center,
        void: false,
        positivity,
        threshold,
        closed_form_threshold,
        diagnostic,
    })
}

/// True when `nodes` is certified infeasible for degree `n`.
pub fn certificate_lower_bound(
    weight: &WeightSpec,
    n: usize,
    l_hat: f64,
    nodes: usize,
    ell_override: Option<u32>,
) -> Result<bool, BoundsError> {
    Ok(certificate(weight, n, l_hat, ell_override, None)?.excludes(nodes))
}

/// `ln(I c_m^r / ∫ F_m(· - x)^r W)`.
pub fn fejer_power_log_bound(weight: &WeightSpec, m: usize, r: u32, center: f64) -> Result<f64, BoundsError> {
    if m == 0 || r == 0 {
        return Err(BoundsError::InvalidInput("m and r must be positive".into()));
    }
    let mass = weight.total_mass()?;
    let integral = fejer_power_integral(weight, m, r, center)?;
    Ok(mass.ln() + r as f64 * fejer_at_first_zero_half(m).ln() - integral.ln())
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ScalingPoint {
    pub n: usize,
    /// `max ln(I c_m^r / ∫ F_m^r W_α)` over `2mr ≤ n`.
    pub log_n_hat: f64,
    pub m: usize,
    pub r: u32,
    /// `∫ F_m^ℓ(F_m - c_m) W_α > 0` with `ℓ = ⌊n/(2m)⌋ - 1`, forcing a node near 0.
    pub node_forced: bool,
    /// Parameters with the asymptotic constants, `⌊6^{α/(α+1)} n^{1/(α+1)}/12⌋`
    /// and `⌊min(6^{1/(α+1)}, α/6^{α+1}) n^{α/(α+1)}⌋`.
    pub asymptotic_m: usize,
    pub asymptotic_r: usize,
    /// The asymptotic parameters vanish at this `n`.
    pub asymptotic_degenerate: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ScalingReport {
    pub alpha: f64,
    /// `α/(α+1)`.
    pub predicted_exponent: f64,
    /// Slope of `ln ln N̂` against `ln n`.
    pub fitted_exponent: f64,
    pub fit: LinearFit,
    pub points: Vec<ScalingPoint>,
}

fn best_for_n(weight: &WeightSpec, n: usize) -> Result<(f64, usize, u32), BoundsError> {
    let pairs: Vec<(usize, u32)> = (1..=n / 2)
        .flat_map(|m| (1..=(n / (2 * m)) as u32).map(move |r| (m, r)))
        .collect();
    let values: Vec<f64> = pairs
        .par_iter()
        .map(|&(m, r)| fejer_power_log_bound(weight, m, r, 0.0))
        .collect::<Result<_, _>>()?;
    let mut best = (f64::NEG_INFINITY, 0, 0);
    for (&(m, r), &v) in pairs.iter().zip(&values) {
        if v > best.0 {
            best = (v, m, r);
        }
    }
    Ok(best)
}

/// Growth of the Fejér-power lower bound for `W_α(θ) = exp(-|θ|^{-α})`.
pub fn stretched_exp_scaling(alpha: f64, n_list: &[usize]) -> Result<ScalingReport, BoundsError> {
    if !(alpha > 0.0) {
        return Err(BoundsError::InvalidInput("alpha must be positive".into()));
    }
    if n_list.len() < 4 {
        return Err(BoundsError::InvalidInput("the scaling fit needs at least 4 values of n".into()));
    }
    if n_list.windows(2).any(|w| w[0] >= w[1]) || n_list[0] < 2 {
        return Err(BoundsError::InvalidInput("n values must be increasing and at least 2".into()));
    }
    let weight = WeightSpec::stretched_exponential(alpha)?;
    weight.total_mass()?;
    let e = alpha / (alpha + 1.0);
    let mut points = Vec::with_capacity(n_list.len());
    for &n in n_list {
        let (log_n_hat, m, r) = best_for_n(&weight, n)?;
        let ell = (n / (2 * m)).saturating_sub(1) as u32;
        let c = fejer_at_first_zero_half(m);
        let a = fejer_power_integral(&weight, m, ell + 1, 0.0)?;
        let b = fejer_power_integral(&weight, m, ell, 0.0)?;
        let nf = n as f64;
        let am = (6f64.powf(e) * nf.powf(1.0 / (alpha + 1.0)) / 12.0).floor() as usize;
        let ar = (6f64.powf(1.0 / (alpha + 1.0)).min(alpha / 6f64.powf(alpha + 1.0)) * nf.powf(e)).floor() as usize;
        points.push(ScalingPoint {
            n,
            log_n_hat,
            m,
            r,
            node_forced: a - c * b > 0.0,
            asymptotic_m: am,
            asymptotic_r: ar,
            asymptotic_degenerate: am == 0 || ar == 0,
        });
    }
    let xs: Vec<f64> = points.iter().map(|p| p.n as f64).collect();
    let ys: Vec<f64> = points.iter().map(|p| p.log_n_hat).collect();
    let fit = power_law(&xs, &ys)?;
    Ok(ScalingReport {
        alpha,
        predicted_exponent: e,
        fitted_exponent: fit.slope,
        fit,
        points,
    })
}
