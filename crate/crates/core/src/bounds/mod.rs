//! Node-count bounds for equal-weight quadrature.
//!
//! - [`r_trig`], [`r_interval`]: sharpness functionals (total mass over the
//!   smallest resolution-`1/n` window).
//! - [`kane_sup`]: lower estimate of `sup_p ∫|p'| / ∫pW` over nonnegative
//!   `p ∈ 𝒯_n` and the node bound it implies.
//! - [`general_upper_bound`], [`interval_upper_bound`]: bounds driven by the
//!   essential infimum of the weight off a small exceptional set.
//! - [`certificate_lower_bound`]: Fejér-kernel localization certificate.
//! - [`stretched_exp_scaling`]: growth law of the Fejér-power lower bound for
//!   `exp(-|θ|^{-α})`.

mod certificate;
mod kane;

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::fit::FitError;
use crate::quad::Tolerance;
use crate::trig::{AbsAntiderivative, TrigError, TrigPoly};
use crate::weight::{delta_n, reduce_angle, Domain, Family, WeightError, WeightSpec, TWO_PI};

pub use certificate::{
    certificate, certificate_lower_bound, fejer_power_log_bound, stretched_exp_scaling, Certificate, ScalingPoint,
    ScalingReport,
};
pub use kane::{kane_sup, ChainBound, KaneOptions, KaneReport};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BoundsError {
    #[error(transparent)]
    Weight(#[from] WeightError),
    #[error(transparent)]
    Trig(#[from] TrigError),
    #[error(transparent)]
    Fit(#[from] FitError),
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("precondition violated: {0}")]
    Precondition(String),
}

fn require_n(n: usize) -> Result<(), BoundsError> {
    if n == 0 {
        Err(BoundsError::InvalidInput("n must be at least 1".into()))
    } else {
        Ok(())
    }
}

/// Value of a sharpness functional with the location of the lightest window.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct RFunctional {
    /// `+∞` when some window carries no mass.
    pub value: f64,
    pub log_value: f64,
    pub minimizer: f64,
    /// Mass of the lightest window (may underflow to 0 while `log_value` stays finite).
    pub min_window: f64,
}

const TIE_REL: f64 = 1e-12;

/// Minimizes `f` on `[a, b]` by golden-section search.
pub(crate) fn golden_min<F: FnMut(f64) -> Result<f64, BoundsError>>(
    mut f: F,
    mut a: f64,
    mut b: f64,
    iters: usize,
) -> Result<(f64, f64), BoundsError> {
    let g = 0.5 * (5f64.sqrt() - 1.0);
    let mut c = b - g * (b - a);
    let mut d = a + g * (b - a);
    let mut fc = f(c)?;
    let mut fd = f(d)?;
    for _ in 0..iters {
        if (b - a).abs() <= 1e-13 * a.abs().max(b.abs()).max(1.0) {
            break;
        }
        if fc <= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - g * (b - a);
            fc = f(c)?;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + g * (b - a);
            fd = f(d)?;
        }
    }
    Ok(if fc <= fd { (c, fc) } else { (d, fd) })
}

/// Picks the smallest value among candidates, treating near-equal values as
/// ties resolved toward the smallest abscissa.
fn pick_min(mut cands: Vec<(f64, f64)>) -> (f64, f64) {
    cands.sort_by(|p, q| p.0.total_cmp(&q.0));
    let lowest = cands.iter().map(|c| c.1).fold(f64::INFINITY, f64::min);
    let slack = if lowest.is_finite() { TIE_REL * lowest.abs().max(1.0) } else { 0.0 };
    *cands
        .iter()
        .find(|c| c.1 <= lowest + slack)
        .expect("non-empty candidate list")
}

fn finish(log_mass: f64, best: (f64, f64)) -> RFunctional {
    let (x, log_min) = best;
    let log_value = log_mass - log_min;
    RFunctional {
        value: log_value.exp(),
        log_value,
        minimizer: x,
        min_window: log_min.exp(),
    }
}

/// `R^trig_W(n) = I / inf_x ∫_{x-1/n}^{x+1/n} W`.
pub fn r_trig(weight: &WeightSpec, n: usize) -> Result<RFunctional, BoundsError> {
    require_n(n)?;
    if weight.domain() != Domain::Circle {
        return Err(WeightError::WrongDomain { expected: Domain::Circle }.into());
    }
    let delta = 1.0 / n as f64;
    let log_mass = weight.total_mass()?.ln();
    let cells = 256.max(8 * n);
    let h = TWO_PI / cells as f64;
    let grid: Vec<f64> = (0..cells).map(|i| -PI + h * i as f64).collect();
    let values: Vec<f64> = grid
        .par_iter()
        .map(|&x| weight.log_window_mass(x, delta))
        .collect::<Result<_, _>>()?;
    let mut cands: Vec<(f64, f64)> = grid.iter().copied().zip(values.iter().copied()).collect();
    let (gx, gv) = pick_min(cands.clone());
    if gv == f64::NEG_INFINITY {
        return Ok(finish(log_mass, (gx, gv)));
    }
    for s in weight.singular_points() {
        cands.push((reduce_angle(s), weight.log_window_mass(s, delta)?));
    }
    let refined = golden_min(|x| Ok(weight.log_window_mass(x, delta)?), gx - h, gx + h, 80)?;
    cands.push((reduce_angle(refined.0), refined.1));
    Ok(finish(log_mass, pick_min(cands)))
}

/// Mass of the clipped window `[x - Δ_n(x), x + Δ_n(x)]`.
fn interval_window(weight: &WeightSpec, x: f64, n: usize) -> Result<f64, WeightError> {
    let d = delta_n(x, n);
    weight.integrate(x - d, x + d, 1e-10)
}

fn ln_or_neg_inf(v: f64) -> f64 {
    if v > 0.0 {
        v.ln()
    } else {
        f64::NEG_INFINITY
    }
}

/// `R_w(n) = ∫w / inf_{|x| ≤ 1} ∫_{x-Δ_n(x)}^{x+Δ_n(x)} w`.
pub fn r_interval(weight: &WeightSpec, n: usize) -> Result<RFunctional, BoundsError> {
    require_n(n)?;
    if weight.domain() != Domain::Interval {
        return Err(WeightError::WrongDomain { expected: Domain::Interval }.into());
    }
    let log_mass = weight.total_mass()?.ln();
    let cells = 256.max(8 * n);
    let h = PI / cells as f64;
    let us: Vec<f64> = (0..=cells).map(|i| h * i as f64).collect();
    let values: Vec<f64> = us
        .par_iter()
        .map(|&u| interval_window(weight, u.cos(), n).map(ln_or_neg_inf))
        .collect::<Result<_, _>>()?;
    let mut cands: Vec<(f64, f64)> = us.iter().map(|u| u.cos()).zip(values.iter().copied()).collect();
    let (gx, gv) = pick_min(cands.clone());
    if gv == f64::NEG_INFINITY {
        return Ok(finish(log_mass, (gx, gv)));
    }
    for s in weight.singular_points() {
        cands.push((s, ln_or_neg_inf(interval_window(weight, s, n)?)));
    }
    let u0 = gx.clamp(-1.0, 1.0).acos();
    let refined = golden_min(
        |u| Ok(ln_or_neg_inf(interval_window(weight, u.cos(), n)?)),
        (u0 - h).max(0.0),
        (u0 + h).min(PI),
        80,
    )?;
    cands.push((refined.0.cos(), refined.1));
    Ok(finish(log_mass, pick_min(cands)))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Sandwich {
    pub r_interval: f64,
    pub r_trig: f64,
    /// `R_w(n) ≤ R^trig_W(n)`.
    pub lower_holds: bool,
    /// `R^trig_W(n) ≤ 2 L̂⁴ R_w(n)`.
    pub upper_holds: bool,
    /// Smallest `L` with `R^trig ≤ 2 L⁴ R_w`.
    pub needed_l: f64,
    pub holds: bool,
}

/// Compares `R_w(n)` with `R^trig` of the lifted weight.
pub fn sandwich_check(weight: &WeightSpec, n: usize, l_hat: f64) -> Result<Sandwich, BoundsError> {
    if !(l_hat >= 1.0) {
        return Err(BoundsError::InvalidInput("doubling estimate must be at least 1".into()));
    }
    let rw = r_interval(weight, n)?.value;
    let rt = r_trig(&weight.lift_to_circle()?, n)?.value;
    let lower_holds = rw <= rt * (1.0 + 1e-8);
    let upper_holds = rt <= 2.0 * l_hat.powi(4) * rw;
    Ok(Sandwich {
        r_interval: rw,
        r_trig: rt,
        lower_holds,
        upper_holds,
        needed_l: (rt / (2.0 * rw)).powf(0.25),
        holds: lower_holds && upper_holds,
    })
}

/// `∫|p| W_n / ∫|p| W` with `W_n(x) = n ∫_{x-1/n}^{x+1/n} W`.
pub fn averaged_ratio(weight: &WeightSpec, n: usize, p: &TrigPoly) -> Result<f64, BoundsError> {
    require_n(n)?;
    if weight.domain() != Domain::Circle {
        return Err(WeightError::WrongDomain { expected: Domain::Circle }.into());
    }
    if p.is_zero() {
        return Err(BoundsError::InvalidInput("ratio undefined for the zero polynomial".into()));
    }
    let abs = AbsAntiderivative::new(p, 1e-14);
    let roots = p.roots(1e-14);
    let h = 1.0 / n as f64;
    let nf = n as f64;
    let tol = Tolerance::relative(1e-10);
    // ∫|p| W_n = ∫ W(φ) n ∫_{φ-1/n}^{φ+1/n} |p| dφ
    let mut kinks: Vec<f64> = roots.iter().flat_map(|r| [r - h, r + h]).collect();
    kinks.extend(roots.iter().copied());
    let num = weight.integrate_product(-PI, PI, |phi| nf * abs.between(phi - h, phi + h), &kinks, tol)?;
    let den = weight.integrate_product(-PI, PI, |t| p.eval(t).abs(), &roots, tol)?;
    Ok(num / den)
}

/// Maximal averaged-to-plain ratio over random `p ∈ 𝒯_n` with Gaussian coefficients.
pub fn empirical_mt_constant(weight: &WeightSpec, n: usize, samples: usize, seed: u64) -> Result<f64, BoundsError> {
    use rand::SeedableRng;
    use rand_distr::{Distribution, StandardNormal};
    let ratios: Vec<f64> = (0..samples)
        .into_par_iter()
        .map(|i| {
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(i as u64 + 1);
            let mut draw = || -> f64 { StandardNormal.sample(&mut rng) };
            let cos: Vec<f64> = (0..=n).map(|_| draw()).collect();
            let sin: Vec<f64> = (0..n).map(|_| draw()).collect();
            averaged_ratio(weight, n, &TrigPoly::new(cos, sin)?)
        })
        .collect::<Result<_, _>>()?;
    Ok(ratios.into_iter().fold(0.0, f64::max))
}

fn total_length(d: &[(f64, f64)]) -> Result<f64, BoundsError> {
    let mut s = 0.0;
    for &(a, b) in d {
        if !(a <= b) || !a.is_finite() || !b.is_finite() {
            return Err(BoundsError::InvalidInput(format!("exceptional interval [{a}, {b}] is malformed")));
        }
        s += b - a;
    }
    Ok(s)
}

fn check_eta(eta: f64) -> Result<(), BoundsError> {
    if eta > 0.0 && eta < 1.0 {
        Ok(())
    } else {
        Err(BoundsError::InvalidInput(format!("eta must lie in (0, 1), got {eta}")))
    }
}

/// Essential infimum of a circle weight off `d` (arcs in `[-π, π]` coordinates).
fn circle_essinf(weight: &WeightSpec, lo: f64, hi: f64, d: &[(f64, f64)]) -> f64 {
    let excluded = |x: f64| d.iter().any(|&(a, b)| x > a && x < b);
    match weight.family() {
        Family::StretchedExponential { alpha } => {
            // increasing in |θ|: the infimum sits at the admissible point nearest 0
            let mut nearest = f64::INFINITY;
            if !excluded(0.0) && lo <= 0.0 && hi >= 0.0 {
                nearest = 0.0;
            }
            for &(a, b) in d {
                for e in [a, b] {
                    if e >= lo && e <= hi && !d.iter().any(|&(c, f)| e > c && e < f) {
                        nearest = nearest.min(reduce_angle(e).abs());
                    }
                }
            }
            if nearest == 0.0 {
                0.0
            } else {
                (-nearest.powf(-alpha)).exp()
            }
        }
        _ => weight.sampled_infimum(lo, hi, d, 20_000),
    }
}

/// `⌈(1/η)(I / essinf_{[-π,π]∖D} W) n⌉`; `+∞` when the infimum vanishes.
pub fn general_upper_bound(weight: &WeightSpec, n: usize, d: &[(f64, f64)], eta: f64) -> Result<f64, BoundsError> {
    require_n(n)?;
    check_eta(eta)?;
    if weight.domain() != Domain::Circle {
        return Err(WeightError::WrongDomain { expected: Domain::Circle }.into());
    }
    let allowed = (1.0 - eta).powi(2) * TWO_PI / (2 * n + 1) as f64;
    let len = total_length(d)?;
    if len > allowed * (1.0 + 1e-12) {
        return Err(BoundsError::Precondition(format!(
            "exceptional set has length {len}, the bound allows at most {allowed}"
        )));
    }
    let essinf = circle_essinf(weight, -PI, PI, d);
    let mass = weight.total_mass()?;
    Ok(upper_from(mass, essinf, eta, n as f64))
}

fn upper_from(mass: f64, essinf: f64, eta: f64, scale: f64) -> f64 {
    if !(essinf > 0.0) {
        return f64::INFINITY;
    }
    let v = mass / essinf * scale / eta;
    // guard against 4πn-type values landing just above an integer by rounding noise
    let r = v.round();
    if (v - r).abs() <= 1e-9 * v {
        r
    } else {
        v.ceil()
    }
}

/// `⌈(2/η)(∫w / essinf √(1-t²) w(t)) n⌉` with `∫_D dt/√(1-t²) ≤ (1-η)² π/(2n+1)`.
pub fn interval_upper_bound(weight: &WeightSpec, n: usize, d: &[(f64, f64)], eta: f64) -> Result<f64, BoundsError> {
    require_n(n)?;
    check_eta(eta)?;
    if weight.domain() != Domain::Interval {
        return Err(WeightError::WrongDomain { expected: Domain::Interval }.into());
    }
    let mut arcs = Vec::with_capacity(d.len());
    let mut measure = 0.0;
    for &(a, b) in d {
        if !(a <= b) || a < -1.0 || b > 1.0 {
            return Err(BoundsError::InvalidInput(format!("exceptional interval [{a}, {b}] must lie in [-1, 1]")));
        }
        // arccos is decreasing: [a, b] pulls back to [acos b, acos a]
        let (u, v) = (b.acos(), a.acos());
        measure += v - u;
        arcs.push((u, v));
    }
    let allowed = (1.0 - eta).powi(2) * PI / (2 * n + 1) as f64;
    if measure > allowed * (1.0 + 1e-12) {
        return Err(BoundsError::Precondition(format!(
            "exceptional set has arccos-measure {measure}, the bound allows at most {allowed}"
        )));
    }
    // √(1-t²) w(t) at t = cos θ is the lifted density on [0, π]
    let lifted = weight.lift_to_circle()?;
    let essinf = lifted.sampled_infimum(0.0, PI, &arcs, 20_000);
    let mass = weight.total_mass()?;
    Ok(upper_from(mass, essinf, eta, 2.0 * n as f64))
}

/// One row of a bounds sweep.
///
/// Interval weights report `R_w(n)` and use the lifted circle weight for the node
/// bounds; their certificate bound is halved, since `N^trig_W(n) ≤ 2 N_w(n)`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BoundReport {
    pub n: usize,
    pub r_value: f64,
    pub kane_sup_estimate: f64,
    pub kane_node_bound: u64,
    pub kane_low_confidence: bool,
    pub chain_node_bound: u64,
    /// `None` when the essential infimum off `D` vanishes.
    pub general_upper_bound: Option<f64>,
    pub exceptional_set: Vec<(f64, f64)>,
    pub certificate_lower_bound: Option<u64>,
    pub certificate_ell: Option<u32>,
    pub doubling_estimate: Option<f64>,
    pub minimizer_x: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ReportOptions {
    pub eta: f64,
    /// Exceptional set for the upper bound; defaults to [`default_exceptional_set`].
    pub exceptional_set: Option<Vec<(f64, f64)>>,
    pub ell: Option<u32>,
    /// Doubling constant for the certificate; defaults to the known or estimated one.
    pub l_hat: Option<f64>,
    pub kane: KaneOptions,
}

impl Default for ReportOptions {
    fn default() -> Self {
        Self {
            eta: 0.5,
            exceptional_set: None,
            ell: None,
            l_hat: None,
            kane: KaneOptions::default(),
        }
    }
}

/// The largest admissible exceptional set centered at `center`: an arc of length
/// `(1-η)² 2π/(2n+1)` on the circle (split at `±π`), or an interval of arccos-measure
/// `(1-η)² π/(2n+1)` on `[-1, 1]`.
pub fn default_exceptional_set(domain: Domain, n: usize, eta: f64, center: f64) -> Vec<(f64, f64)> {
    match domain {
        Domain::Circle => {
            let h = 0.5 * (1.0 - eta).powi(2) * TWO_PI / (2 * n + 1) as f64;
            let c = reduce_angle(center);
            let (a, b) = (c - h, c + h);
            if a < -PI {
                vec![(-PI, b), (a + TWO_PI, PI)]
            } else if b > PI {
                vec![(-PI, b - TWO_PI), (a, PI)]
            } else {
                vec![(a, b)]
            }
        }
        Domain::Interval => {
            let h = 0.5 * (1.0 - eta).powi(2) * PI / (2 * n + 1) as f64;
            let theta = center.clamp(-1.0, 1.0).acos();
            let (u, v) = ((theta - h).max(0.0), (theta + h).min(PI));
            vec![(v.cos(), u.cos())]
        }
    }
}

/// All bounds for one `(weight, n)`.
pub fn bound_report(weight: &WeightSpec, n: usize, opts: &ReportOptions) -> Result<BoundReport, BoundsError> {
    require_n(n)?;
    check_eta(opts.eta)?;
    let (r, circle) = match weight.domain() {
        Domain::Circle => (r_trig(weight, n)?, weight.clone()),
        Domain::Interval => (r_interval(weight, n)?, weight.lift_to_circle()?),
    };
    let kane = kane_sup(&circle, n, &opts.kane)?;
    let d = opts
        .exceptional_set
        .clone()
        .unwrap_or_else(|| default_exceptional_set(weight.domain(), n, opts.eta, r.minimizer));
    let upper = match weight.domain() {
        Domain::Circle => general_upper_bound(weight, n, &d, opts.eta)?,
        Domain::Interval => interval_upper_bound(weight, n, &d, opts.eta)?,
    };
    let l_hat = match opts.l_hat {
        Some(l) => Some(l),
        None => circle.known_doubling_constant().or_else(|| {
            let (deltas, centers) = circle.default_doubling_grids();
            circle.estimate_doubling_constant(&deltas, &centers).ok().map(|e| e.l_hat)
        }),
    };
    let mut cert = None;
    if let Some(l) = l_hat.filter(|l| *l >= 1.0) {
        let c = certificate(&circle, n, l, opts.ell, None)?;
        cert = Some((c.lower_bound(), c.ell));
    }
    let halve = weight.domain() == Domain::Interval;
    Ok(BoundReport {
        n,
        r_value: r.value,
        kane_sup_estimate: kane.sup_estimate,
        kane_node_bound: kane.node_bound,
        kane_low_confidence: kane.low_confidence,
        chain_node_bound: kane.chain.node_bound,
        general_upper_bound: upper.is_finite().then_some(upper),
        exceptional_set: d,
        certificate_lower_bound: cert
            .and_then(|c| c.0)
            .map(|b| if halve { b.div_ceil(2) } else { b }),
        certificate_ell: cert.map(|c| c.1),
        doubling_estimate: l_hat,
        minimizer_x: r.minimizer,
    })
}
