//! Real trigonometric polynomials `a_0 + Σ a_k cos kθ + b_k sin kθ`.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::quad::{self, Tolerance};
use crate::weight::{Domain, WeightError, WeightSpec, TWO_PI};

/// Largest degree produced by [`TrigPoly::multiply`] and [`TrigPoly::power`].
pub const DEGREE_CAP: usize = 4096;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TrigError {
    #[error("degree {degree} exceeds the cap {cap}")]
    DegreeCap { degree: usize, cap: usize },
    #[error("{nodes} equispaced nodes cannot integrate degree {degree} exactly")]
    TooFewNodes { nodes: usize, degree: usize },
    #[error("coefficients must be finite")]
    NonFinite,
    #[error("all Fejér-Riesz coefficients are zero")]
    ZeroParam,
    #[error("malformed coefficient document: {0}")]
    Parse(String),
}

/// A real trigonometric polynomial in canonical (trimmed) form.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "CoeffDoc", into = "CoeffDoc")]
pub struct TrigPoly {
    cos: Vec<f64>,
    sin: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct CoeffDoc {
    cos: Vec<f64>,
    #[serde(default)]
    sin: Vec<f64>,
}

impl TryFrom<CoeffDoc> for TrigPoly {
    type Error = TrigError;
    fn try_from(d: CoeffDoc) -> Result<Self, TrigError> {
        TrigPoly::new(d.cos, d.sin)
    }
}

impl From<TrigPoly> for CoeffDoc {
    fn from(p: TrigPoly) -> Self {
        CoeffDoc { cos: p.cos, sin: p.sin }
    }
}

/// Maximal subarc of `[-π, π]` on which a polynomial keeps one sign.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SignArc {
    pub lo: f64,
    pub hi: f64,
    pub sign: f64,
}

impl TrigPoly {
    /// `cos` holds `a_0..a_n`, `sin` holds `b_1..b_n`; shorter vectors are zero-padded.
    pub fn new(mut cos: Vec<f64>, mut sin: Vec<f64>) -> Result<Self, TrigError> {
        if cos.iter().chain(&sin).any(|c| !c.is_finite()) {
            return Err(TrigError::NonFinite);
        }
        if cos.is_empty() {
            cos.push(0.0);
        }
        let n = (cos.len() - 1).max(sin.len());
        cos.resize(n + 1, 0.0);
        sin.resize(n, 0.0);
        let mut p = Self { cos, sin };
        p.trim();
        Ok(p)
    }

    pub fn zero() -> Self {
        Self::constant(0.0)
    }

    pub fn constant(c: f64) -> Self {
        Self {
            cos: vec![c],
            sin: Vec::new(),
        }
    }

    /// `cos kθ`.
    pub fn cos_k(k: usize) -> Self {
        let mut cos = vec![0.0; k + 1];
        cos[k] = 1.0;
        Self::new(cos, Vec::new()).expect("finite")
    }

    /// `sin kθ` for `k ≥ 1`.
    pub fn sin_k(k: usize) -> Self {
        let mut sin = vec![0.0; k];
        if k > 0 {
            sin[k - 1] = 1.0;
        }
        Self::new(vec![0.0], sin).expect("finite")
    }

    fn trim(&mut self) {
        while self.cos.len() > 1 {
            let k = self.cos.len() - 1;
            if self.cos[k] == 0.0 && self.sin[k - 1] == 0.0 {
                self.cos.pop();
                self.sin.pop();
            } else {
                break;
            }
        }
    }

    pub fn degree(&self) -> usize {
        self.cos.len() - 1
    }

    /// `a_0..a_n`.
    pub fn cos_coeffs(&self) -> &[f64] {
        &self.cos
    }

    /// `b_1..b_n`.
    pub fn sin_coeffs(&self) -> &[f64] {
        &self.sin
    }

    pub fn is_zero(&self) -> bool {
        self.degree() == 0 && self.cos[0] == 0.0
    }

    /// Σ|a_k| + Σ|b_k|, an upper bound on the sup norm.
    pub fn coeff_l1(&self) -> f64 {
        self.cos.iter().chain(&self.sin).map(|c| c.abs()).sum()
    }

    /// Value at θ by Clenshaw recurrence.
    pub fn eval(&self, theta: f64) -> f64 {
        let n = self.degree();
        if n == 0 {
            return self.cos[0];
        }
        let (s, c) = theta.sin_cos();
        let two_c = 2.0 * c;
        let (mut u1, mut u2) = (0.0, 0.0);
        let (mut v1, mut v2) = (0.0, 0.0);
        for k in (1..=n).rev() {
            let u = self.cos[k] + two_c * u1 - u2;
            u2 = u1;
            u1 = u;
            let v = self.sin[k - 1] + two_c * v1 - v2;
            v2 = v1;
            v1 = v;
        }
        self.cos[0] + u1 * c - u2 + v1 * s
    }

    pub fn derivative(&self) -> Self {
        let n = self.degree();
        let mut cos = vec![0.0; n + 1];
        let mut sin = vec![0.0; n];
        for k in 1..=n {
            let kf = k as f64;
            cos[k] = kf * self.sin[k - 1];
            sin[k - 1] = -kf * self.cos[k];
        }
        Self::new(cos, sin).expect("finite")
    }

    /// `θ ↦ p(θ - shift)`.
    pub fn translate(&self, shift: f64) -> Self {
        let n = self.degree();
        let mut cos = vec![self.cos[0]; n + 1];
        let mut sin = vec![0.0; n];
        for k in 1..=n {
            let (s, c) = (k as f64 * shift).sin_cos();
            let (a, b) = (self.cos[k], self.sin[k - 1]);
            // a cos k(θ-x) + b sin k(θ-x)
            cos[k] = a * c - b * s;
            sin[k - 1] = a * s + b * c;
        }
        Self::new(cos, sin).expect("finite")
    }

    pub fn scale(&self, factor: f64) -> Self {
        Self::new(
            self.cos.iter().map(|c| c * factor).collect(),
            self.sin.iter().map(|c| c * factor).collect(),
        )
        .expect("finite")
    }

    pub fn add(&self, other: &Self) -> Self {
        let n = self.degree().max(other.degree());
        let mut cos = vec![0.0; n + 1];
        let mut sin = vec![0.0; n];
        for (k, c) in self.cos.iter().enumerate() {
            cos[k] += c;
        }
        for (k, c) in other.cos.iter().enumerate() {
            cos[k] += c;
        }
        for (k, s) in self.sin.iter().enumerate() {
            sin[k] += s;
        }
        for (k, s) in other.sin.iter().enumerate() {
            sin[k] += s;
        }
        Self::new(cos, sin).expect("finite")
    }

    fn to_exponential(&self) -> Vec<Complex64> {
        // c_k for k = 0..n; c_{-k} = conj(c_k)
        let mut c = Vec::with_capacity(self.cos.len());
        c.push(Complex64::new(self.cos[0], 0.0));
        for k in 1..=self.degree() {
            c.push(Complex64::new(0.5 * self.cos[k], -0.5 * self.sin[k - 1]));
        }
        c
    }

    fn from_exponential(c: &[Complex64]) -> Self {
        let cos = c
            .iter()
            .enumerate()
            .map(|(k, z)| if k == 0 { z.re } else { 2.0 * z.re })
            .collect();
        let sin = c.iter().skip(1).map(|z| -2.0 * z.im).collect();
        Self::new(cos, sin).expect("finite")
    }

    /// Exact product via convolution of exponential coefficients.
    pub fn multiply(&self, other: &Self) -> Result<Self, TrigError> {
        let degree = self.degree() + other.degree();
        if degree > DEGREE_CAP {
            return Err(TrigError::DegreeCap { degree, cap: DEGREE_CAP });
        }
        let p = self.to_exponential();
        let q = other.to_exponential();
        let full = |v: &[Complex64], k: isize| -> Complex64 {
            let a = k.unsigned_abs();
            if a >= v.len() {
                Complex64::new(0.0, 0.0)
            } else if k >= 0 {
                v[a]
            } else {
                v[a].conj()
            }
        };
        let (np, nq) = (self.degree() as isize, other.degree() as isize);
        let mut out = vec![Complex64::new(0.0, 0.0); degree + 1];
        for (k, slot) in out.iter_mut().enumerate() {
            let k = k as isize;
            let lo = (k - nq).max(-np);
            let hi = (k + nq).min(np);
            let mut acc = Complex64::new(0.0, 0.0);
            for j in lo..=hi {
                acc += full(&p, j) * full(&q, k - j);
            }
            *slot = acc;
        }
        Ok(Self::from_exponential(&out))
    }

    /// `p^k` by square-and-multiply.
    pub fn power(&self, k: u32) -> Result<Self, TrigError> {
        let degree = self.degree().saturating_mul(k as usize);
        if degree > DEGREE_CAP {
            return Err(TrigError::DegreeCap { degree, cap: DEGREE_CAP });
        }
        let mut result = Self::constant(1.0);
        let mut base = self.clone();
        let mut e = k;
        while e > 0 {
            if e & 1 == 1 {
                result = result.multiply(&base)?;
            }
            e >>= 1;
            if e > 0 {
                base = base.multiply(&base)?;
            }
        }
        Ok(result)
    }

    /// ∫_{-π}^{π} p = 2π a_0.
    pub fn integral(&self) -> f64 {
        TWO_PI * self.cos[0]
    }

    /// Antiderivative without constant term, `a_0 θ + Σ (a_k sin kθ - b_k cos kθ)/k`.
    pub fn antiderivative_at(&self, theta: f64) -> f64 {
        let mut acc = self.cos[0] * theta;
        for k in 1..=self.degree() {
            let kf = k as f64;
            let (s, c) = (kf * theta).sin_cos();
            acc += (self.cos[k] * s - self.sin[k - 1] * c) / kf;
        }
        acc
    }

    /// Sign-constant arcs covering `[-π, π]`, ordered; zero polynomials give one arc of sign 0.
    pub fn sign_arcs(&self, tol: f64) -> Vec<SignArc> {
        if self.is_zero() {
            return vec![SignArc {
                lo: -PI,
                hi: PI,
                sign: 0.0,
            }];
        }
        let roots = self.roots(tol);
        let mut knots = Vec::with_capacity(roots.len() + 2);
        knots.push(-PI);
        knots.extend(roots.iter().copied().filter(|&r| r > -PI && r < PI));
        knots.push(PI);
        knots
            .windows(2)
            .filter(|w| w[1] > w[0])
            .map(|w| {
                // largest-magnitude interior sample: a lone midpoint may sit on a tangency
                let v = [0.5, 0.25, 0.75, 0.125, 0.875]
                    .iter()
                    .map(|s| self.eval(w[0] + s * (w[1] - w[0])))
                    .fold(0.0f64, |best, v| if v.abs() > best.abs() { v } else { best });
                SignArc {
                    lo: w[0],
                    hi: w[1],
                    sign: if v > 0.0 {
                        1.0
                    } else if v < 0.0 {
                        -1.0
                    } else {
                        0.0
                    },
                }
            })
            .collect()
    }

    /// Angles of the roots of `z^n p` near the unit circle (`z = e^{iθ}`), from companion
    /// eigenvalues. Clustered roots of high multiplicity come back spread out; callers only
    /// use these as separators.
    fn root_angle_estimates(&self) -> Vec<f64> {
        let n = self.degree();
        // c_{k} for k = -n..=n, stored at index k + n
        let mut c = vec![Complex64::new(0.0, 0.0); 2 * n + 1];
        c[n] = Complex64::new(self.cos[0], 0.0);
        for k in 1..=n {
            c[n + k] = Complex64::new(0.5 * self.cos[k], -0.5 * self.sin[k - 1]);
            c[n - k] = c[n + k].conj();
        }
        let big = c.iter().map(|z| z.norm()).fold(0.0, f64::max);
        let keep = |z: &Complex64| z.norm() > 1e-15 * big;
        let (Some(lo), Some(hi)) = (c.iter().position(keep), c.iter().rposition(keep)) else {
            return Vec::new();
        };
        let d = hi - lo;
        if d == 0 {
            return Vec::new();
        }
        let lead = c[hi];
        let companion = DMatrix::from_fn(d, d, |r, col| {
            if col == d - 1 {
                -c[lo + r] / lead
            } else if r == col + 1 {
                Complex64::new(1.0, 0.0)
            } else {
                Complex64::new(0.0, 0.0)
            }
        });
        let Some(eig) = companion.eigenvalues() else { return Vec::new() };
        eig.iter()
            .filter(|z| z.norm() > 1.0 / 1.5 && z.norm() < 1.5)
            .map(|z| z.arg().clamp(-PI, PI))
            .collect()
    }

    /// Sign changes in `(-π, π)`, each located to about `tol` in θ.
    pub fn roots(&self, tol: f64) -> Vec<f64> {
        let n = self.degree();
        if n == 0 {
            return Vec::new();
        }
        let xtol = tol.clamp(1e-15, 1e-6);
        // separators: a coarse grid plus the root estimates; every simple root then has
        // samples of opposite sign on either side
        let cells = 64.max(8 * (n + 1));
        let mut sep: Vec<f64> = (0..=cells)
            .map(|i| if i == cells { PI } else { -PI + TWO_PI * i as f64 / cells as f64 })
            .collect();
        sep.extend(self.root_angle_estimates());
        sep.sort_by(f64::total_cmp);
        sep.dedup();
        let mut pts = Vec::with_capacity(2 * sep.len());
        for w in sep.windows(2) {
            pts.push(w[0]);
            pts.push(0.5 * (w[0] + w[1]));
        }
        pts.push(PI);
        let vals: Vec<f64> = pts.iter().map(|&t| self.eval(t)).collect();
        let mut roots = Vec::new();
        for i in 0..pts.len() - 1 {
            let (fa, fb) = (vals[i], vals[i + 1]);
            if fa == 0.0 {
                roots.push(pts[i]);
            } else if fb != 0.0 && fa.signum() != fb.signum() {
                roots.push(bisect(self, pts[i], pts[i + 1], fa, xtol));
            }
        }
        roots.sort_by(f64::total_cmp);
        roots.dedup_by(|x, y| (*x - *y).abs() <= 2.0 * xtol);
        roots
    }

    /// ∫_{-π}^{π}|p| integrating exactly between located sign changes.
    pub fn l1_norm(&self, tol: f64) -> f64 {
        self.sign_arcs(tol.max(1e-15) * 1e-3)
            .iter()
            .map(|arc| arc.sign * (self.antiderivative_at(arc.hi) - self.antiderivative_at(arc.lo)))
            .sum::<f64>()
            .max(0.0)
    }

    /// ∫|p| by adaptive quadrature, reference for the root-based path.
    pub fn l1_norm_adaptive(&self, tol: f64) -> Option<f64> {
        let roots = self.roots(1e-13);
        let mut knots = vec![-PI];
        knots.extend(roots);
        knots.push(PI);
        let mut total = 0.0;
        for w in knots.windows(2) {
            total += quad::integrate_fn(|t| self.eval(t).abs(), w[0], w[1], Tolerance { rel: tol, abs: tol * 1e-3 })?.value;
        }
        Some(total)
    }

    /// sup |p| sampled on a grid of `max(64, 8(n+1))` points.
    pub fn sup_norm_estimate(&self) -> f64 {
        let cells = 64.max(8 * (self.degree() + 1));
        (0..cells)
            .map(|i| self.eval(-PI + TWO_PI * i as f64 / cells as f64).abs())
            .fold(0.0, f64::max)
    }

    /// ∫ p W over one period via adaptive quadrature.
    pub fn integrate_against(&self, weight: &WeightSpec, tol: f64) -> Result<f64, WeightError> {
        if weight.domain() != Domain::Circle {
            return Err(WeightError::WrongDomain { expected: Domain::Circle });
        }
        let scale = self.coeff_l1() * weight.total_mass()?;
        if scale == 0.0 {
            return Ok(0.0);
        }
        weight.integrate_product(
            -PI,
            PI,
            |t| self.eval(t),
            &[],
            Tolerance {
                rel: tol,
                abs: tol * scale,
            },
        )
    }

    /// `(2π/(2n+1)) Σ_j q(2πj/(2n+1))`, exact for `deg q ≤ 2n`.
    pub fn equispaced_integral(&self, n: usize) -> Result<f64, TrigError> {
        let nodes = 2 * n + 1;
        if 2 * n < self.degree() {
            return Err(TrigError::TooFewNodes {
                nodes,
                degree: self.degree(),
            });
        }
        let h = TWO_PI / nodes as f64;
        Ok(h * (0..nodes).map(|j| self.eval(h * j as f64)).sum::<f64>())
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("plain data")
    }

    pub fn from_json(text: &str) -> Result<Self, TrigError> {
        serde_json::from_str(text).map_err(|e| TrigError::Parse(e.to_string()))
    }
}

/// Cumulative `∫_{-π}^{θ} |p|`, extended to all real θ by periodicity.
#[derive(Clone, Debug)]
pub struct AbsAntiderivative {
    poly: TrigPoly,
    arcs: Vec<SignArc>,
    prefix: Vec<f64>,
}

impl AbsAntiderivative {
    pub fn new(poly: &TrigPoly, tol: f64) -> Self {
        let arcs = poly.sign_arcs(tol);
        let mut prefix = Vec::with_capacity(arcs.len() + 1);
        prefix.push(0.0);
        for arc in &arcs {
            let piece = arc.sign * (poly.antiderivative_at(arc.hi) - poly.antiderivative_at(arc.lo));
            prefix.push(prefix.last().unwrap() + piece.max(0.0));
        }
        Self {
            poly: poly.clone(),
            arcs,
            prefix,
        }
    }

    /// ∫_{-π}^{π} |p|.
    pub fn period(&self) -> f64 {
        *self.prefix.last().unwrap()
    }

    pub fn at(&self, theta: f64) -> f64 {
        let turns = ((theta + PI) / TWO_PI).floor();
        let mut t = theta - turns * TWO_PI;
        if t >= PI {
            t = PI;
        }
        let i = self.arcs.partition_point(|a| a.hi < t).min(self.arcs.len() - 1);
        let arc = self.arcs[i];
        let within = arc.sign * (self.poly.antiderivative_at(t) - self.poly.antiderivative_at(arc.lo));
        turns * self.period() + self.prefix[i] + within.max(0.0)
    }

    /// ∫_a^b |p|.
    pub fn between(&self, a: f64, b: f64) -> f64 {
        self.at(b) - self.at(a)
    }
}

fn bisect(p: &TrigPoly, mut a: f64, mut b: f64, mut fa: f64, xtol: f64) -> f64 {
    for _ in 0..200 {
        if b - a <= xtol {
            break;
        }
        let m = 0.5 * (a + b);
        if m <= a || m >= b {
            break;
        }
        let fm = p.eval(m);
        if fm == 0.0 {
            return m;
        }
        if fm.signum() == fa.signum() {
            a = m;
            fa = fm;
        } else {
            b = m;
        }
    }
    0.5 * (a + b)
}

/// Moments `∫ cos kθ W`, `∫ sin kθ W` for `k ≤ n`, so that `∫ p W` is a dot product.
#[derive(Clone, Debug)]
pub struct WeightMoments {
    pub cos: Vec<f64>,
    pub sin: Vec<f64>,
}

impl WeightMoments {
    pub fn new(weight: &WeightSpec, n: usize, tol: f64) -> Result<Self, WeightError> {
        if weight.domain() != Domain::Circle {
            return Err(WeightError::WrongDomain { expected: Domain::Circle });
        }
        let mass = weight.total_mass()?;
        let t = Tolerance {
            rel: tol,
            abs: tol * mass,
        };
        let mut cos = vec![mass];
        let mut sin = Vec::with_capacity(n);
        for k in 1..=n {
            let kf = k as f64;
            cos.push(weight.integrate_product(-PI, PI, |x| (kf * x).cos(), &[], t)?);
            sin.push(weight.integrate_product(-PI, PI, |x| (kf * x).sin(), &[], t)?);
        }
        Ok(Self { cos, sin })
    }

    pub fn degree(&self) -> usize {
        self.sin.len()
    }

    /// ∫ p W for `deg p ≤ self.degree()`.
    pub fn integrate(&self, p: &TrigPoly) -> f64 {
        assert!(p.degree() <= self.degree(), "moment table too short");
        let c: f64 = p.cos_coeffs().iter().zip(&self.cos).map(|(a, m)| a * m).sum();
        let s: f64 = p.sin_coeffs().iter().zip(&self.sin).map(|(b, m)| b * m).sum();
        c + s
    }
}

/// `F_m(θ) = (sin((2m+1)θ/2) / ((2m+1) sin(θ/2)))²`, degree `2m`, `F_m(0) = 1`.
pub fn fejer_kernel(m: usize) -> TrigPoly {
    let q = (2 * m + 1) as f64;
    let mut cos = vec![1.0 / q];
    for k in 1..=2 * m {
        cos.push(2.0 * (q - k as f64) / (q * q));
    }
    TrigPoly::new(cos, Vec::new()).expect("finite")
}

/// Pointwise `F_m(θ)`: closed form away from `θ ∈ 2πℤ`, coefficient sum near it.
pub fn fejer_value(m: usize, theta: f64) -> f64 {
    let q = (2 * m + 1) as f64;
    let half = 0.5 * theta;
    let s = half.sin();
    if s.abs() < 1e-4 {
        let q = 2 * m + 1;
        let qf = q as f64;
        let mut acc = 1.0 / qf;
        for k in 1..q {
            acc += 2.0 * (qf - k as f64) / (qf * qf) * (k as f64 * theta).cos();
        }
        return acc;
    }
    let r = (q * half).sin() / (q * s);
    r * r
}

/// `F_m(π/(2m+1)) = ((2m+1) sin(π/(2(2m+1))))^{-2}`.
pub fn fejer_at_first_zero_half(m: usize) -> f64 {
    let q = (2 * m + 1) as f64;
    let s = q * (PI / (2.0 * q)).sin();
    1.0 / (s * s)
}

/// Complex coefficients `c_0..c_n` of `p = |Σ c_k e^{ikθ}|²`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NonnegParam {
    pub coeffs: Vec<Complex64>,
}

impl NonnegParam {
    pub fn new(coeffs: Vec<Complex64>) -> Self {
        Self { coeffs }
    }

    /// Real coefficients `(re c_0, im c_0, re c_1, ...)`.
    pub fn from_real(v: &[f64]) -> Self {
        Self {
            coeffs: v.chunks(2).map(|c| Complex64::new(c[0], *c.get(1).unwrap_or(&0.0))).collect(),
        }
    }

    pub fn to_real(&self) -> Vec<f64> {
        self.coeffs.iter().flat_map(|c| [c.re, c.im]).collect()
    }

    /// Autocorrelations `r_m = Σ_k c_{k+m} conj(c_k)`.
    pub fn autocorrelation(&self) -> Vec<Complex64> {
        let n = self.coeffs.len();
        (0..n)
            .map(|m| (0..n - m).map(|k| self.coeffs[k + m] * self.coeffs[k].conj()).sum())
            .collect()
    }
}

/// Coefficients of `|Σ c_k e^{ikθ}|²`: `a_0 = r_0`, `a_m = 2 Re r_m`, `b_m = -2 Im r_m`.
pub fn realize_nonneg(c: &NonnegParam) -> Result<TrigPoly, TrigError> {
    if c.coeffs.iter().all(|z| z.norm_sqr() == 0.0) {
        return Err(TrigError::ZeroParam);
    }
    let r = c.autocorrelation();
    let cos = r.iter().enumerate().map(|(m, z)| if m == 0 { z.re } else { 2.0 * z.re }).collect();
    let sin = r.iter().skip(1).map(|z| -2.0 * z.im).collect();
    TrigPoly::new(cos, sin)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn trims_trailing_zero_pairs() {
        let p = TrigPoly::new(vec![1.0, 2.0, 0.0, 0.0], vec![0.0, 0.0, 0.0]).unwrap();
        assert_eq!(p.degree(), 1);
        assert_eq!(TrigPoly::new(vec![], vec![]).unwrap(), TrigPoly::zero());
    }

    #[test]
    fn eval_matches_direct_sum() {
        let p = TrigPoly::new(vec![0.3, -1.0, 0.5, 2.0], vec![0.7, -0.2, 0.1]).unwrap();
        for i in 0..50 {
            let t = -3.0 + 0.13 * i as f64;
            let direct = 0.3 - (t).cos() + 0.5 * (2.0 * t).cos() + 2.0 * (3.0 * t).cos()
                + 0.7 * t.sin()
                - 0.2 * (2.0 * t).sin()
                + 0.1 * (3.0 * t).sin();
            assert_relative_eq!(p.eval(t), direct, epsilon = 1e-13);
        }
    }

    #[test]
    fn translate_shifts_argument() {
        let p = TrigPoly::new(vec![0.1, 0.4, -0.3], vec![0.2, 0.9]).unwrap();
        let q = p.translate(0.8);
        for t in [-2.0, 0.0, 1.1, 2.9] {
            assert_relative_eq!(q.eval(t), p.eval(t - 0.8), epsilon = 1e-13);
        }
    }

    #[test]
    fn roots_of_cos() {
        let r = TrigPoly::cos_k(1).roots(1e-14);
        assert_eq!(r.len(), 2);
        assert_relative_eq!(r[0], -PI / 2.0, epsilon = 1e-12);
        assert_relative_eq!(r[1], PI / 2.0, epsilon = 1e-12);
    }

    #[test]
    fn power_rejects_degree_cap() {
        let f = fejer_kernel(100);
        assert!(matches!(f.power(30), Err(TrigError::DegreeCap { .. })));
    }

    #[test]
    fn closed_form_fejer_matches_coefficients() {
        for m in [0, 1, 4, 9] {
            let f = fejer_kernel(m);
            for i in 0..200 {
                let t = -PI + TWO_PI * i as f64 / 199.0;
                assert_relative_eq!(fejer_value(m, t), f.eval(t), epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn moments_reproduce_direct_integral() {
        let w = WeightSpec::constant(Domain::Interval).lift_to_circle().unwrap();
        let mom = WeightMoments::new(&w, 4, 1e-13).unwrap();
        let p = TrigPoly::new(vec![1.0, 0.5, 0.25], vec![0.1, 0.3]).unwrap();
        let direct = p.integrate_against(&w, 1e-12).unwrap();
        assert_relative_eq!(mom.integrate(&p), direct, epsilon = 1e-11);
    }
}
