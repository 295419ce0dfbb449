//! Multi-start ascent for `sup_{p ∈ 𝒯_n^+} ∫|p'| / ∫ p W`.
//!
//! Nonnegative polynomials are parameterized as `p = |Σ c_k e^{ikθ}|²`. The
//! total variation `∫|p'|` equals `Σ_j s_j (p(t_{j+1}) - p(t_j))` over the
//! sign arcs `[t_j, t_{j+1}]` of `p'`, so its gradient in the real
//! coefficients is a sum of basis values at the arc endpoints; the
//! denominator is linear in the coefficients through the weight moments.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::Serialize;

use super::{averaged_ratio, r_trig, require_n, BoundsError};
use crate::trig::{realize_nonneg, NonnegParam, TrigPoly, WeightMoments};
use crate::weight::{Domain, WeightError, WeightSpec};

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct KaneOptions {
    /// Random starts, in addition to the Fejér-type starts.
    pub restarts: usize,
    pub iters: usize,
    pub seed: u64,
    /// Center of the translated Fejér starts; defaults to the lightest-window location.
    pub center: Option<f64>,
    /// Random polynomials used for the averaged-weight ratio in the chain bound.
    pub chain_samples: usize,
}

impl Default for KaneOptions {
    fn default() -> Self {
        Self {
            restarts: 16,
            iters: 200,
            seed: 0,
            center: None,
            chain_samples: 32,
        }
    }
}

/// Node bound from Bernstein's inequality and the averaged weight:
/// `∫|p'| ≤ n∫p ≤ (R^trig/I) ∫p W_n ≤ (R^trig/I) C ∫p W`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ChainBound {
    pub r_trig: f64,
    /// Largest `∫pW_n / ∫pW` seen (random polynomials and the best ascent polynomial).
    pub mt_constant: f64,
    pub sup_bound: f64,
    pub node_bound: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct KaneReport {
    pub n: usize,
    /// Best ratio found; a lower estimate of the supremum.
    pub sup_estimate: f64,
    /// `⌊(I/2) sup_estimate⌋ + 1`.
    pub node_bound: u64,
    pub low_confidence: bool,
    /// Ratio of the translated Fejér start `F_{⌊n/2⌋}(· - x*)`.
    pub fejer_start_ratio: f64,
    pub center: f64,
    #[serde(skip)]
    pub best: TrigPoly,
    pub chain: ChainBound,
    pub restarts: usize,
    pub iters: usize,
}

pub(crate) fn node_bound(mass: f64, sup: f64) -> u64 {
    let v = 0.5 * mass * sup;
    if v.is_finite() {
        v.floor() as u64 + 1
    } else {
        u64::MAX
    }
}

struct Objective<'a> {
    n: usize,
    moments: &'a WeightMoments,
}

impl Objective<'_> {
    fn poly(&self, x: &[f64]) -> Option<TrigPoly> {
        realize_nonneg(&NonnegParam::from_real(x)).ok()
    }

    fn variation(p: &TrigPoly) -> (f64, Vec<crate::trig::SignArc>) {
        let arcs = p.derivative().sign_arcs(1e-13);
        let v = arcs.iter().map(|a| a.sign * (p.eval(a.hi) - p.eval(a.lo))).sum();
        (v, arcs)
    }

    fn value(&self, x: &[f64]) -> f64 {
        let Some(p) = self.poly(x) else { return f64::NEG_INFINITY };
        let d = self.moments.integrate(&p);
        if !(d > 0.0) {
            return f64::NEG_INFINITY;
        }
        Self::variation(&p).0 / d
    }

    /// Ratio and its gradient in the real parameters `(re c_0, im c_0, ...)`.
    fn value_grad(&self, x: &[f64]) -> Option<(f64, Vec<f64>)> {
        let n = self.n;
        let p = self.poly(x)?;
        let d = self.moments.integrate(&p);
        if !(d > 0.0) {
            return None;
        }
        let (v, arcs) = Self::variation(&p);
        let ratio = v / d;
        // ∂R/∂a_m and ∂R/∂b_m
        let mut ga = vec![0.0; n + 1];
        let mut gb = vec![0.0; n + 1];
        for m in 0..=n {
            let mf = m as f64;
            let (mut dv_a, mut dv_b) = (0.0, 0.0);
            if m > 0 {
                for a in &arcs {
                    let (sh, ch) = (mf * a.hi).sin_cos();
                    let (sl, cl) = (mf * a.lo).sin_cos();
                    dv_a += a.sign * (ch - cl);
                    dv_b += a.sign * (sh - sl);
                }
            }
            let mc = self.moments.cos[m];
            ga[m] = (dv_a * d - v * mc) / (d * d);
            if m > 0 {
                gb[m] = (dv_b * d - v * self.moments.sin[m - 1]) / (d * d);
            }
        }
        // chain rule through the autocorrelations
        let c = NonnegParam::from_real(x).coeffs;
        let len = c.len();
        let z: Vec<Complex64> = (0..=n).map(|m| Complex64::new(ga[m], gb[m])).collect();
        let mut grad = Vec::with_capacity(2 * len);
        for j in 0..len {
            let mut w = c[j] * ga[0];
            for m in 1..=n.min(len - 1) {
                if j + m < len {
                    w += z[m] * c[j + m];
                }
                if j >= m {
                    w += z[m].conj() * c[j - m];
                }
            }
            grad.push(2.0 * w.re);
            grad.push(2.0 * w.im);
        }
        Some((ratio, grad))
    }
}

fn normalize(x: &mut [f64]) -> bool {
    let norm = x.iter().map(|v| v * v).sum::<f64>().sqrt();
    if !(norm > 0.0) || !norm.is_finite() {
        return false;
    }
    x.iter_mut().for_each(|v| *v /= norm);
    true
}

/// Projected gradient ascent on the unit sphere with adaptive steps.
fn ascend(obj: &Objective, mut x: Vec<f64>, iters: usize) -> (f64, Vec<f64>) {
    if !normalize(&mut x) {
        return (f64::NEG_INFINITY, x);
    }
    let Some((mut val, mut grad)) = obj.value_grad(&x) else {
        return (f64::NEG_INFINITY, x);
    };
    let mut step = 0.05;
    for _ in 0..iters {
        let dot: f64 = grad.iter().zip(&x).map(|(g, v)| g * v).sum();
        let mut dir: Vec<f64> = grad.iter().zip(&x).map(|(g, v)| g - dot * v).collect();
        if !normalize(&mut dir) {
            break;
        }
        let mut improved = false;
        for _ in 0..40 {
            let mut trial: Vec<f64> = x.iter().zip(&dir).map(|(v, d)| v + step * d).collect();
            normalize(&mut trial);
            if let Some((tv, tg)) = obj.value_grad(&trial) {
                if tv > val {
                    x = trial;
                    val = tv;
                    grad = tg;
                    step = (step * 1.5).min(1.0);
                    improved = true;
                    break;
                }
            }
            step *= 0.5;
            if step < 1e-12 {
                break;
            }
        }
        if !improved {
            break;
        }
    }
    (val, x)
}

/// Fejér–Riesz parameter of `F_m(θ - x)^r`: the `r`-fold convolution of
/// `(e^{-ikx})_{k=0..2m}`, scaled.
fn fejer_power_param(m: usize, r: usize, x: f64, len: usize) -> Vec<f64> {
    let base: Vec<Complex64> = (0..=2 * m).map(|k| Complex64::from_polar(1.0, -(k as f64) * x)).collect();
    let mut acc = vec![Complex64::new(1.0, 0.0)];
    for _ in 0..r {
        let mut next = vec![Complex64::new(0.0, 0.0); acc.len() + base.len() - 1];
        for (i, a) in acc.iter().enumerate() {
            for (j, b) in base.iter().enumerate() {
                next[i + j] += a * b;
            }
        }
        acc = next;
    }
    acc.resize(len, Complex64::new(0.0, 0.0));
    acc.iter().flat_map(|z| [z.re, z.im]).collect()
}

fn random_param(seed: u64, stream: u64, len: usize) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    (0..2 * len).map(|_| StandardNormal.sample(&mut rng)).collect()
}

/// Multi-start lower estimate of the supremum with the node bounds it gives.
pub fn kane_sup(weight: &WeightSpec, n: usize, opts: &KaneOptions) -> Result<KaneReport, BoundsError> {
    require_n(n)?;
    if opts.iters == 0 {
        return Err(BoundsError::InvalidInput("iters must be at least 1".into()));
    }
    if weight.domain() != Domain::Circle {
        return Err(WeightError::WrongDomain { expected: Domain::Circle }.into());
    }
    let mass = weight.total_mass()?;
    let rt = r_trig(weight, n)?;
    let center = opts.center.unwrap_or(rt.minimizer);
    let moments = WeightMoments::new(weight, n, 1e-13)?;
    let obj = Objective { n, moments: &moments };
    let len = n + 1;

    let mut starts: Vec<Vec<f64>> = vec![fejer_power_param(n / 2, 1, center, len)];
    let mut m_values: Vec<usize> = (1..=n / 4).filter(|m| n / (2 * m) >= 2).collect();
    if m_values.len() > 3 {
        let k = m_values.len();
        m_values = vec![m_values[0], m_values[k / 2], m_values[k - 1]];
    }
    for m in m_values {
        starts.push(fejer_power_param(m, n / (2 * m), center, len));
    }
    let fejer_start_ratio = if n >= 2 { obj.value(&starts[0]) } else { 0.0 };
    for i in 0..opts.restarts {
        starts.push(random_param(opts.seed, i as u64 + 1, len));
    }

    let results: Vec<(f64, Vec<f64>)> = starts.into_par_iter().map(|x0| ascend(&obj, x0, opts.iters)).collect();
    // first maximum by start index keeps the choice deterministic
    let mut best_idx = None;
    for (i, r) in results.iter().enumerate() {
        if r.0.is_finite() && best_idx.is_none_or(|b: usize| r.0 > results[b].0) {
            best_idx = Some(i);
        }
    }
    let (best_poly, sup_estimate) = match best_idx {
        Some(i) => {
            let p = obj.poly(&results[i].1).expect("finite start");
            // re-evaluate the denominator directly: p ≥ 0, so relative accuracy is available
            let d = weight.integrate_product(
                -PI,
                PI,
                |t| p.eval(t),
                &[],
                crate::quad::Tolerance::relative(1e-12),
            )?;
            let v = Objective::variation(&p).0;
            (p, v / d)
        }
        None => (TrigPoly::constant(1.0), 0.0),
    };
    let low_confidence = !(sup_estimate > 1e-12);

    let mut mt = if best_poly.degree() > 0 { averaged_ratio(weight, n, &best_poly)? } else { 1.0 };
    for i in 0..opts.chain_samples {
        let x = random_param(opts.seed ^ 0x9e37_79b9_7f4a_7c15, i as u64 + 1, len);
        if let Ok(p) = realize_nonneg(&NonnegParam::from_real(&x)) {
            mt = mt.max(averaged_ratio(weight, n, &p)?);
        }
    }
    let sup_bound = rt.value * mt / mass;
    Ok(KaneReport {
        n,
        sup_estimate,
        node_bound: node_bound(mass, sup_estimate),
        low_confidence,
        fejer_start_ratio,
        center,
        best: best_poly,
        chain: ChainBound {
            r_trig: rt.value,
            mt_constant: mt,
            sup_bound,
            node_bound: node_bound(mass, sup_bound),
        },
        restarts: opts.restarts,
        iters: opts.iters,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::trig::fejer_kernel;

    #[test]
    fn gradient_matches_finite_differences() {
        let w = WeightSpec::jacobi(0.5, 0.5).unwrap().lift_to_circle().unwrap();
        let n = 5;
        let moments = WeightMoments::new(&w, n, 1e-13).unwrap();
        let obj = Objective { n, moments: &moments };
        let x = random_param(7, 1, n + 1);
        let (_, g) = obj.value_grad(&x).unwrap();
        let h = 1e-6;
        for i in 0..x.len() {
            let mut xp = x.clone();
            let mut xm = x.clone();
            xp[i] += h;
            xm[i] -= h;
            let fd = (obj.value(&xp) - obj.value(&xm)) / (2.0 * h);
            assert!((fd - g[i]).abs() < 1e-5 * (1.0 + g[i].abs()), "{i}: {fd} vs {}", g[i]);
        }
    }

    #[test]
    fn fejer_param_realizes_translated_kernel() {
        let m = 3;
        let x = 0.7;
        let v = fejer_power_param(m, 1, x, 2 * m + 1);
        let p = realize_nonneg(&NonnegParam::from_real(&v)).unwrap();
        let f = fejer_kernel(m);
        let q = (2 * m + 1) as f64;
        for t in [-2.0, 0.1, 0.7, 2.5] {
            assert!((p.eval(t) / (q * q) - f.eval(t - x)).abs() < 1e-12);
        }
    }
}
