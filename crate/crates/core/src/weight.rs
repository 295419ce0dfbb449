//! Weight functions on `[-1, 1]` and on the circle.
//!
//! A [`WeightSpec`] couples a [`Domain`] with an analytic [`Family`] (or a
//! user-supplied density). Interval densities are zero outside `[-1, 1]`;
//! circle densities are 2π-periodic and evaluated on the representative in
//! `[-π, π)`.
//!
//! The JSON form is a flat object tagged by `family`:
//!
//! ```json
//! {"domain": "interval", "family": "jacobi", "alpha": 1.0, "beta": 0.0}
//! {"domain": "interval", "family": "generalized_jacobi", "alpha": 0.0, "beta": 0.0,
//!  "singular_points": [{"at": 0.0, "exponent": 1.0}], "h": [1.0]}
//! {"domain": "circle", "family": "stretched_exponential", "alpha": 1.0}
//! {"domain": "circle", "family": "lifted", "base": {"family": "constant", "value": 1.0}}
//! ```
//!
//! `h` holds monomial coefficients of the bounded positive factor of a
//! generalized Jacobi weight; `lifted` is the circle weight
//! `w(cos θ)|sin θ|` built from an interval family.

use std::f64::consts::PI;
use std::fmt;
use std::sync::{Arc, OnceLock};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::quad::{self, Segment, Site, Tolerance};

pub const TWO_PI: f64 = 2.0 * PI;

/// Tolerance used to fill the total-mass cache.
pub const MASS_TOL: f64 = 1e-12;
const MAX_PANELS: usize = 20_000;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum WeightError {
    #[error("invalid weight parameters: {0}")]
    InvalidParameters(String),
    #[error("operation requires a {expected:?} weight")]
    WrongDomain { expected: Domain },
    #[error("integration did not converge (estimate {estimate:e}, error {error:e})")]
    Integration { estimate: f64, error: f64 },
    #[error("weight is not doubling at a = {a}, delta = {delta}: inner window has zero mass")]
    NotDoubling { a: f64, delta: f64 },
    #[error("weight vanishes on an interval near {at}")]
    VanishesOnInterval { at: f64 },
    #[error("custom densities cannot be serialized")]
    NotSerializable,
    #[error("malformed weight document: {0}")]
    Parse(String),
}

impl From<quad::QuadFailure> for WeightError {
    fn from(f: quad::QuadFailure) -> Self {
        WeightError::Integration {
            estimate: f.estimate,
            error: f.error,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Domain {
    Interval,
    Circle,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SingularPoint {
    pub at: f64,
    pub exponent: f64,
}

/// A density supplied by the caller together with the abscissae where it is
/// singular or non-smooth.
#[derive(Clone)]
pub struct CustomDensity {
    pub density: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
    pub singularity_hints: Vec<f64>,
}

impl fmt::Debug for CustomDensity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CustomDensity")
            .field("singularity_hints", &self.singularity_hints)
            .finish_non_exhaustive()
    }
}

fn one() -> f64 {
    1.0
}

fn unit_h() -> Vec<f64> {
    vec![1.0]
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum Family {
    Constant {
        #[serde(default = "one")]
        value: f64,
    },
    Jacobi {
        alpha: f64,
        beta: f64,
    },
    GeneralizedJacobi {
        alpha: f64,
        beta: f64,
        #[serde(default)]
        singular_points: Vec<SingularPoint>,
        #[serde(default = "unit_h")]
        h: Vec<f64>,
    },
    /// `exp(-|θ|^{-α})` on `[-π, π)`, circle only.
    StretchedExponential {
        alpha: f64,
    },
    /// `w(cos θ)|sin θ|` for an interval family `w`, circle only.
    Lifted {
        base: Box<Family>,
    },
    #[serde(skip)]
    Custom(CustomDensity),
}

impl PartialEq for Family {
    fn eq(&self, other: &Self) -> bool {
        use Family::*;
        match (self, other) {
            (Constant { value: a }, Constant { value: b }) => a == b,
            (Jacobi { alpha: a1, beta: b1 }, Jacobi { alpha: a2, beta: b2 }) => a1 == a2 && b1 == b2,
            (
                GeneralizedJacobi {
                    alpha: a1,
                    beta: b1,
                    singular_points: s1,
                    h: h1,
                },
                GeneralizedJacobi {
                    alpha: a2,
                    beta: b2,
                    singular_points: s2,
                    h: h2,
                },
            ) => a1 == a2 && b1 == b2 && s1 == s2 && h1 == h2,
            (StretchedExponential { alpha: a }, StretchedExponential { alpha: b }) => a == b,
            (Lifted { base: a }, Lifted { base: b }) => a == b,
            (Custom(a), Custom(b)) => Arc::ptr_eq(&a.density, &b.density),
            _ => false,
        }
    }
}

/// Algebraic-type interval density `h(t)(1-t)^α(1+t)^β Π|t-s_i|^{γ_i}`.
#[derive(Clone, Debug)]
struct Algebraic {
    alpha: f64,
    beta: f64,
    points: Vec<SingularPoint>,
    h: Vec<f64>,
}

impl Algebraic {
    fn h_at(&self, t: f64) -> f64 {
        self.h.iter().rev().fold(0.0, |acc, c| acc * t + c)
    }

    fn interior(&self, site: &Site) -> f64 {
        self.points
            .iter()
            .map(|p| site.distance_to(p.at).powf(p.exponent))
            .product()
    }

    fn eval(&self, site: Site) -> f64 {
        let t = site.x;
        if !(-1.0..=1.0).contains(&t) {
            return 0.0;
        }
        let right = site.distance_to(1.0).powf(self.alpha);
        let left = site.distance_to(-1.0).powf(self.beta);
        self.h_at(t) * right * left * self.interior(&site)
    }
}

fn algebraic_of(family: &Family) -> Option<Algebraic> {
    match family {
        Family::Jacobi { alpha, beta } => Some(Algebraic {
            alpha: *alpha,
            beta: *beta,
            points: Vec::new(),
            h: unit_h(),
        }),
        Family::GeneralizedJacobi {
            alpha,
            beta,
            singular_points,
            h,
        } => Some(Algebraic {
            alpha: *alpha,
            beta: *beta,
            points: singular_points.clone(),
            h: h.clone(),
        }),
        _ => None,
    }
}

/// Reduces `theta` to the representative in `[-π, π)`.
pub fn reduce_angle(theta: f64) -> f64 {
    let r = (theta + PI).rem_euclid(TWO_PI) - PI;
    if r >= PI {
        -PI
    } else {
        r
    }
}

/// Relative tolerance of window-mass integrals.
pub const WINDOW_MASS_TOL: f64 = 1e-10;

/// An immutable weight function.
#[derive(Clone, Debug)]
pub struct WeightSpec {
    domain: Domain,
    family: Family,
    known_doubling_constant: Option<f64>,
    mass: OnceLock<f64>,
}

#[derive(Serialize, Deserialize)]
struct WeightDoc {
    domain: Domain,
    #[serde(flatten)]
    family: Family,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    known_doubling_constant: Option<f64>,
}

impl Serialize for WeightSpec {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        if self.has_custom() {
            return Err(serde::ser::Error::custom(WeightError::NotSerializable));
        }
        WeightDoc {
            domain: self.domain,
            family: self.family.clone(),
            known_doubling_constant: self.known_doubling_constant,
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for WeightSpec {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let doc = WeightDoc::deserialize(d)?;
        let mut spec = WeightSpec::new(doc.domain, doc.family).map_err(serde::de::Error::custom)?;
        if let Some(l) = doc.known_doubling_constant {
            spec = spec.with_doubling_constant(l).map_err(serde::de::Error::custom)?;
        }
        Ok(spec)
    }
}

impl PartialEq for WeightSpec {
    fn eq(&self, other: &Self) -> bool {
        self.domain == other.domain
            && self.family == other.family
            && self.known_doubling_constant == other.known_doubling_constant
    }
}

fn check(cond: bool, msg: &str) -> Result<(), WeightError> {
    if cond {
        Ok(())
    } else {
        Err(WeightError::InvalidParameters(msg.to_string()))
    }
}

fn validate_interval_family(family: &Family) -> Result<(), WeightError> {
    match family {
        Family::Constant { value } => check(value.is_finite() && *value > 0.0, "constant value must be positive"),
        Family::Jacobi { alpha, beta } => check(
            *alpha > -1.0 && *beta > -1.0 && alpha.is_finite() && beta.is_finite(),
            "Jacobi exponents must exceed -1",
        ),
        Family::GeneralizedJacobi {
            alpha,
            beta,
            singular_points,
            h,
        } => {
            check(*alpha > -1.0 && *beta > -1.0, "Jacobi exponents must exceed -1")?;
            check(!h.is_empty() && h.iter().all(|c| c.is_finite()), "h needs finite coefficients")?;
            for w in singular_points.windows(2) {
                check(w[0].at < w[1].at, "singular points must be strictly increasing")?;
            }
            for p in singular_points {
                check(p.at > -1.0 && p.at < 1.0, "singular points must lie in (-1, 1)")?;
                check(p.exponent > -1.0 && p.exponent.is_finite(), "singular exponents must exceed -1")?;
            }
            let alg = algebraic_of(family).expect("algebraic family");
            let positive = (0..=1024).all(|i| {
                let t = -1.0 + 2.0 * i as f64 / 1024.0;
                alg.h_at(t) > 0.0
            });
            check(positive, "h must be positive on [-1, 1]")
        }
        Family::Custom(_) => Ok(()),
        Family::StretchedExponential { .. } | Family::Lifted { .. } => Err(WeightError::InvalidParameters(
            "family is defined on the circle only".into(),
        )),
    }
}

impl WeightSpec {
    pub fn new(domain: Domain, family: Family) -> Result<Self, WeightError> {
        match (domain, &family) {
            (Domain::Interval, f) => validate_interval_family(f)?,
            (Domain::Circle, Family::Constant { value }) => {
                check(value.is_finite() && *value > 0.0, "constant value must be positive")?
            }
            (Domain::Circle, Family::StretchedExponential { alpha }) => {
                check(*alpha > 0.0 && alpha.is_finite(), "stretched exponent must be positive")?
            }
            (Domain::Circle, Family::Lifted { base }) => validate_interval_family(base)?,
            (Domain::Circle, Family::Custom(_)) => {}
            (Domain::Circle, _) => {
                return Err(WeightError::InvalidParameters(
                    "Jacobi families live on the interval; lift them to use on the circle".into(),
                ))
            }
        }
        Ok(Self {
            domain,
            family,
            known_doubling_constant: None,
            mass: OnceLock::new(),
        })
    }

    pub fn constant(domain: Domain) -> Self {
        Self::new(domain, Family::Constant { value: 1.0 }).expect("valid")
    }

    pub fn jacobi(alpha: f64, beta: f64) -> Result<Self, WeightError> {
        Self::new(Domain::Interval, Family::Jacobi { alpha, beta })
    }

    pub fn stretched_exponential(alpha: f64) -> Result<Self, WeightError> {
        Self::new(Domain::Circle, Family::StretchedExponential { alpha })
    }

    pub fn custom<F>(domain: Domain, density: F, singularity_hints: Vec<f64>) -> Self
    where
        F: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        Self::new(
            domain,
            Family::Custom(CustomDensity {
                density: Arc::new(density),
                singularity_hints,
            }),
        )
        .expect("custom densities are unchecked")
    }

    pub fn with_doubling_constant(mut self, l: f64) -> Result<Self, WeightError> {
        check(l >= 2.0 && l.is_finite(), "doubling constants are at least 2")?;
        self.known_doubling_constant = Some(l);
        Ok(self)
    }

    pub fn from_json(text: &str) -> Result<Self, WeightError> {
        serde_json::from_str(text).map_err(|e| WeightError::Parse(e.to_string()))
    }

    pub fn to_json(&self) -> Result<String, WeightError> {
        if self.has_custom() {
            return Err(WeightError::NotSerializable);
        }
        serde_json::to_string(self).map_err(|e| WeightError::Parse(e.to_string()))
    }

    pub fn domain(&self) -> Domain {
        self.domain
    }

    pub fn family(&self) -> &Family {
        &self.family
    }

    pub fn known_doubling_constant(&self) -> Option<f64> {
        self.known_doubling_constant
    }

    fn has_custom(&self) -> bool {
        match &self.family {
            Family::Custom(_) => true,
            Family::Lifted { base } => matches!(**base, Family::Custom(_)),
            _ => false,
        }
    }

    pub(crate) fn require(&self, expected: Domain) -> Result<(), WeightError> {
        if self.domain == expected {
            Ok(())
        } else {
            Err(WeightError::WrongDomain { expected })
        }
    }

    /// Length of the fundamental domain (2 or 2π).
    pub fn domain_length(&self) -> f64 {
        match self.domain {
            Domain::Interval => 2.0,
            Domain::Circle => TWO_PI,
        }
    }

    /// Pointwise density.
    pub fn density(&self, x: f64) -> f64 {
        self.density_at(Site::plain(x))
    }

    pub(crate) fn density_at(&self, site: Site) -> f64 {
        match self.domain {
            Domain::Interval => interval_density(&self.family, site),
            Domain::Circle => self.circle_density(site),
        }
    }

    fn circle_density(&self, site: Site) -> f64 {
        let theta = reduce_angle(site.x);
        match &self.family {
            Family::Constant { value } => *value,
            Family::StretchedExponential { alpha } => {
                let t = match site.near {
                    Some(n) if n.point == 0.0 => n.offset.abs(),
                    _ => theta.abs(),
                };
                if t == 0.0 {
                    0.0
                } else {
                    (-t.powf(-alpha)).exp()
                }
            }
            Family::Lifted { base } => lifted_density(base, theta, site),
            Family::Custom(c) => (c.density)(theta),
            _ => unreachable!("validated at construction"),
        }
    }

    /// Canonical breakpoints: `[-1, 1]` endpoints and interior singularities
    /// for the interval, points in `[-π, π)` for the circle.
    pub fn singular_points(&self) -> Vec<f64> {
        let mut pts = match self.domain {
            Domain::Interval => {
                let mut v = vec![-1.0, 1.0];
                v.extend(interval_interior_points(&self.family));
                v
            }
            Domain::Circle => match &self.family {
                Family::Constant { .. } => Vec::new(),
                Family::StretchedExponential { .. } => vec![0.0],
                Family::Lifted { base } => lifted_points(base).into_iter().map(|(p, _)| p).collect(),
                Family::Custom(c) => c.singularity_hints.iter().map(|&h| reduce_angle(h)).collect(),
                _ => Vec::new(),
            },
        };
        pts.sort_by(f64::total_cmp);
        pts.dedup();
        pts
    }

    /// ∫_a^b g(x) w(x) dx with extra breakpoints where `g` is not smooth.
    pub fn integrate_product<G: Fn(f64) -> f64>(
        &self,
        a: f64,
        b: f64,
        g: G,
        extra_breaks: &[f64],
        tol: Tolerance,
    ) -> Result<f64, WeightError> {
        if !(a <= b) {
            return Err(WeightError::InvalidParameters(format!("integration bounds {a} > {b}")));
        }
        let segments = self.segments(a, b, extra_breaks);
        if segments.is_empty() {
            return Ok(0.0);
        }
        let f = |s: Site| {
            let w = self.density_at(s);
            if w == 0.0 {
                0.0
            } else {
                g(s.x) * w
            }
        };
        quad::integrate_segments(&f, &segments, tol, MAX_PANELS)
            .map(|e| e.value)
            .map_err(Into::into)
    }

    /// ∫_a^b w with relative error `tol`; interval weights vanish outside `[-1, 1]`.
    pub fn integrate(&self, a: f64, b: f64, tol: f64) -> Result<f64, WeightError> {
        if !(tol > 0.0) {
            return Err(WeightError::InvalidParameters("tolerance must be positive".into()));
        }
        self.integrate_product(a, b, |_| 1.0, &[], Tolerance::relative(tol))
    }

    fn segments(&self, a: f64, b: f64, extra: &[f64]) -> Vec<Segment> {
        let (lo, hi) = match self.domain {
            Domain::Interval => (a.max(-1.0), b.min(1.0)),
            Domain::Circle => (a, b),
        };
        if !(lo < hi) {
            return Vec::new();
        }
        let canon = self.singular_points();
        // (position, canonical singular point)
        let mut breaks: Vec<(f64, Option<f64>)> = Vec::new();
        let match_singular = |x: f64| -> Option<f64> {
            let tol = 4.0 * f64::EPSILON * x.abs().max(1.0);
            match self.domain {
                Domain::Interval => canon.iter().copied().find(|&s| (x - s).abs() <= tol),
                Domain::Circle => {
                    let r = reduce_angle(x);
                    canon.iter().copied().find(|&s| {
                        let d = (r - s).abs();
                        d <= tol || (TWO_PI - d).abs() <= tol
                    })
                }
            }
        };
        breaks.push((lo, match_singular(lo)));
        breaks.push((hi, match_singular(hi)));
        match self.domain {
            Domain::Interval => {
                for &s in &canon {
                    if s > lo && s < hi {
                        breaks.push((s, Some(s)));
                    }
                }
                for &e in extra {
                    if e > lo && e < hi {
                        breaks.push((e, match_singular(e)));
                    }
                }
            }
            Domain::Circle => {
                let k0 = ((lo + PI) / TWO_PI).floor() as i64 - 1;
                let k1 = ((hi + PI) / TWO_PI).ceil() as i64 + 1;
                for k in k0..=k1 {
                    let shift = k as f64 * TWO_PI;
                    for &s in &canon {
                        let x = s + shift;
                        if x > lo && x < hi {
                            breaks.push((x, Some(s)));
                        }
                    }
                    for &e in extra {
                        let x = reduce_angle(e) + shift;
                        if x > lo && x < hi {
                            breaks.push((x, match_singular(x)));
                        }
                    }
                }
            }
        }
        breaks.sort_by(|p, q| p.0.total_cmp(&q.0));
        breaks.dedup_by(|p, q| {
            if (p.0 - q.0).abs() <= 4.0 * f64::EPSILON * p.0.abs().max(1.0) {
                if q.1.is_none() {
                    q.1 = p.1;
                }
                true
            } else {
                false
            }
        });
        breaks
            .windows(2)
            .flat_map(|w| Segment::halves(w[0].0, w[0].1, w[1].0, w[1].1))
            .collect()
    }

    /// Total mass I, computed once at [`MASS_TOL`].
    pub fn total_mass(&self) -> Result<f64, WeightError> {
        if let Some(&m) = self.mass.get() {
            return Ok(m);
        }
        let (a, b) = match self.domain {
            Domain::Interval => (-1.0, 1.0),
            Domain::Circle => (-PI, PI),
        };
        let m = self.integrate(a, b, MASS_TOL)?;
        if !(m > 0.0 && m.is_finite()) {
            return Err(WeightError::InvalidParameters(format!("total mass {m} is not positive and finite")));
        }
        let _ = self.mass.set(m);
        Ok(*self.mass.get().expect("set above"))
    }

    /// ∫_{x-δ}^{x+δ} w; full period for circle windows with δ ≥ π.
    pub fn window_mass(&self, x: f64, delta: f64) -> Result<f64, WeightError> {
        if !(delta > 0.0) {
            return Err(WeightError::InvalidParameters("window half-width must be positive".into()));
        }
        if self.domain == Domain::Circle && delta >= PI {
            return self.total_mass();
        }
        self.integrate(x - delta, x + delta, WINDOW_MASS_TOL)
    }

    /// Natural log of [`window_mass`](Self::window_mass), still finite where
    /// the mass itself underflows (stretched exponentials near 0).
    pub fn log_window_mass(&self, x: f64, delta: f64) -> Result<f64, WeightError> {
        let m = self.window_mass(x, delta)?;
        if m > 1e-250 {
            return Ok(m.ln());
        }
        let Family::StretchedExponential { alpha } = self.family else {
            return Ok(m.ln());
        };
        if delta >= PI {
            return Ok(m.ln());
        }
        // the window lies in (-π, π) around 0 when the mass underflows
        let c = reduce_angle(x);
        let (lo, hi) = (c - delta, c + delta);
        let far = lo.abs().max(hi.abs());
        let shift = far.powf(-alpha);
        let scaled = |t: f64| {
            let a = t.abs();
            if a == 0.0 {
                0.0
            } else {
                (shift - a.powf(-alpha)).exp()
            }
        };
        let mut total = 0.0;
        let pieces: Vec<(f64, f64)> = if lo < 0.0 && hi > 0.0 { vec![(lo, 0.0), (0.0, hi)] } else { vec![(lo, hi)] };
        for (a, b) in pieces {
            let e = quad::integrate_fn(scaled, a, b, Tolerance::relative(1e-10)).ok_or(WeightError::Integration {
                estimate: f64::NAN,
                error: f64::INFINITY,
            })?;
            total += e.value;
        }
        Ok(total.ln() - shift)
    }

    /// `W_n(x) = n ∫_{x-1/n}^{x+1/n} W`.
    pub fn averaged_weight(&self, n: usize, x: f64) -> Result<f64, WeightError> {
        self.require(Domain::Circle)?;
        if n == 0 {
            return Err(WeightError::InvalidParameters("n must be positive".into()));
        }
        Ok(n as f64 * self.window_mass(x, 1.0 / n as f64)?)
    }

    /// The circle weight `w(cos θ)|sin θ|`.
    pub fn lift_to_circle(&self) -> Result<WeightSpec, WeightError> {
        self.require(Domain::Interval)?;
        WeightSpec::new(
            Domain::Circle,
            Family::Lifted {
                base: Box::new(self.family.clone()),
            },
        )
    }

    /// Grid lower estimate of the doubling constant.
    pub fn estimate_doubling_constant(
        &self,
        delta_grid: &[f64],
        a_grid: &[f64],
    ) -> Result<DoublingEstimate, WeightError> {
        if delta_grid.is_empty() || a_grid.is_empty() {
            return Err(WeightError::InvalidParameters("doubling grids must be non-empty".into()));
        }
        if delta_grid.iter().any(|&d| !(d > 0.0)) {
            return Err(WeightError::InvalidParameters("delta values must be positive".into()));
        }
        let mut per_delta = Vec::with_capacity(delta_grid.len());
        let mut best = DoublingEstimate {
            l_hat: 0.0,
            at_a: a_grid[0],
            at_delta: delta_grid[0],
            per_delta: Vec::new(),
            grows_at_small_scales: false,
        };
        for &delta in delta_grid {
            let mut row_max: f64 = 0.0;
            for &a in a_grid {
                let inner = self.log_window_mass(a, delta)?;
                if inner == f64::NEG_INFINITY {
                    return Err(WeightError::NotDoubling { a, delta });
                }
                let outer = self.log_window_mass(a, 2.0 * delta)?;
                let ratio = (outer - inner).exp();
                row_max = row_max.max(ratio);
                if ratio > best.l_hat {
                    best.l_hat = ratio;
                    best.at_a = a;
                    best.at_delta = delta;
                }
            }
            per_delta.push((delta, row_max));
        }
        let mut by_scale = per_delta.clone();
        by_scale.sort_by(|p, q| q.0.total_cmp(&p.0));
        let tail: Vec<f64> = by_scale.iter().rev().take(3).map(|p| p.1).collect();
        // tail is ordered smallest delta first
        best.grows_at_small_scales = tail.len() == 3 && tail[0] > tail[1] * 1.05 && tail[1] > tail[2] * 1.05;
        best.per_delta = per_delta;
        Ok(best)
    }

    /// Default grids: 512 uniform abscissae, half-widths `2^{-k}` (k = 1..14)
    /// scaled by the domain length over 2π.
    pub fn default_doubling_grids(&self) -> (Vec<f64>, Vec<f64>) {
        let scale = self.domain_length() / TWO_PI;
        let deltas = (1..=14).map(|k| scale * 0.5f64.powi(k)).collect();
        let a = match self.domain {
            Domain::Interval => (0..512).map(|i| -1.0 + 2.0 * i as f64 / 511.0).collect(),
            Domain::Circle => (0..512).map(|i| -PI + TWO_PI * i as f64 / 512.0).collect(),
        };
        (deltas, a)
    }

    /// Essential-infimum estimate off a set of excluded arcs.
    pub(crate) fn sampled_infimum(&self, lo: f64, hi: f64, excluded: &[(f64, f64)], samples: usize) -> f64 {
        let exact_min = match &self.family {
            Family::Constant { value } => Some(*value),
            _ => None,
        };
        if let Some(v) = exact_min {
            return v;
        }
        let inside = |x: f64| excluded.iter().any(|&(a, b)| x > a && x < b);
        let mut candidates: Vec<f64> = (0..=samples).map(|i| lo + (hi - lo) * i as f64 / samples as f64).collect();
        for &(a, b) in excluded {
            candidates.push(a);
            candidates.push(b);
        }
        for s in self.singular_points() {
            candidates.push(s);
            if self.domain == Domain::Circle {
                candidates.push(s + TWO_PI);
            }
        }
        candidates
            .into_iter()
            .filter(|&x| x >= lo && x <= hi && !inside(x))
            .map(|x| self.density(x))
            .filter(|v| !v.is_nan())
            .fold(f64::INFINITY, f64::min)
    }
}

fn interval_density(family: &Family, site: Site) -> f64 {
    let t = site.x;
    if !(-1.0..=1.0).contains(&t) {
        return 0.0;
    }
    match family {
        Family::Constant { value } => *value,
        Family::Custom(c) => (c.density)(t),
        f => algebraic_of(f).map(|a| a.eval(site)).unwrap_or(0.0),
    }
}

fn interval_interior_points(family: &Family) -> Vec<f64> {
    match family {
        Family::GeneralizedJacobi { singular_points, .. } => singular_points.iter().map(|p| p.at).collect(),
        Family::Custom(c) => c
            .singularity_hints
            .iter()
            .copied()
            .filter(|h| *h > -1.0 && *h < 1.0)
            .collect(),
        _ => Vec::new(),
    }
}

/// Circle breakpoints of a lifted weight paired with the interval abscissa
/// they come from.
fn lifted_points(base: &Family) -> Vec<(f64, f64)> {
    let mut v = vec![(-PI, -1.0), (0.0, 1.0)];
    for s in interval_interior_points(base) {
        let a = s.acos();
        v.push((a, s));
        v.push((-a, s));
    }
    v
}

fn lifted_density(base: &Family, theta: f64, site: Site) -> f64 {
    // |sin(θ/2)|, |cos(θ/2)| from the exact offset where available
    let (sh, ch) = match site.near {
        Some(n) if n.point == 0.0 => ((0.5 * n.offset).sin().abs(), (0.5 * n.offset).cos().abs()),
        Some(n) if n.point == -PI => ((0.5 * n.offset).cos().abs(), (0.5 * n.offset).sin().abs()),
        _ => ((0.5 * theta).sin().abs(), (0.5 * theta).cos().abs()),
    };
    let t = if sh < ch { 1.0 - 2.0 * sh * sh } else { 2.0 * ch * ch - 1.0 };
    // interior distances |cos θ - s| measured from the anchoring arc point
    let interval_site = match site.near {
        Some(n) if n.point != 0.0 && n.point != -PI => {
            let p = n.point;
            let s = p.cos();
            let diff = -2.0 * (p + 0.5 * n.offset).sin() * (0.5 * n.offset).sin();
            let s_exact = interval_interior_points(base)
                .into_iter()
                .min_by(|a, b| (a - s).abs().total_cmp(&(b - s).abs()))
                .unwrap_or(s);
            Site {
                x: t,
                near: Some(quad::Near {
                    point: s_exact,
                    offset: diff,
                }),
            }
        }
        _ => Site::plain(t),
    };
    match base {
        Family::Constant { value } => value * 2.0 * sh * ch,
        Family::Custom(c) => (c.density)(t) * 2.0 * sh * ch,
        f => {
            let alg = algebraic_of(f).expect("lifted bases are interval families");
            let ends = 2f64.powf(alg.alpha + alg.beta + 1.0)
                * sh.powf(2.0 * alg.alpha + 1.0)
                * ch.powf(2.0 * alg.beta + 1.0);
            alg.h_at(t) * ends * alg.interior(&interval_site)
        }
    }
}

/// Grid lower estimate of a doubling constant.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DoublingEstimate {
    /// max over the grids of `∫_{a-2δ}^{a+2δ} / ∫_{a-δ}^{a+δ}`; a lower bound on L.
    pub l_hat: f64,
    pub at_a: f64,
    pub at_delta: f64,
    /// `(δ, max_a ratio)` per grid half-width.
    pub per_delta: Vec<(f64, f64)>,
    /// Set when the per-δ maxima keep increasing over the three smallest δ.
    pub grows_at_small_scales: bool,
}

/// `Δ_n(x) = (√(1-x²) + 1/n)/n`.
pub fn delta_n(x: f64, n: usize) -> f64 {
    let n = n as f64;
    ((1.0 - x * x).max(0.0).sqrt() + 1.0 / n) / n
}

/// Tabulated cumulative mass of a circle weight, starting at -π.
#[derive(Clone, Debug)]
pub struct CumulativeMass<'a> {
    weight: &'a WeightSpec,
    knots: Vec<f64>,
    cumulative: Vec<f64>,
}

impl<'a> CumulativeMass<'a> {
    pub fn new(weight: &'a WeightSpec, panels: usize) -> Result<Self, WeightError> {
        weight.require(Domain::Circle)?;
        let panels = panels.max(8);
        let total = weight.total_mass()?;
        let knots: Vec<f64> = (0..=panels).map(|i| -PI + TWO_PI * i as f64 / panels as f64).collect();
        let mut cumulative = vec![0.0; panels + 1];
        for i in 0..panels {
            let m = weight.integrate_product(
                knots[i],
                knots[i + 1],
                |_| 1.0,
                &[],
                Tolerance {
                    rel: 1e-13,
                    abs: 1e-15 * total,
                },
            )?;
            cumulative[i + 1] = cumulative[i] + m;
        }
        Ok(Self {
            weight,
            knots,
            cumulative,
        })
    }

    pub fn total(&self) -> f64 {
        *self.cumulative.last().expect("non-empty")
    }

    /// Mass of `[-π, θ]` for θ in `[-π, π]`.
    pub fn at(&self, theta: f64) -> Result<f64, WeightError> {
        let panels = self.knots.len() - 1;
        let pos = ((theta + PI) / TWO_PI * panels as f64).floor();
        let i = (pos.max(0.0) as usize).min(panels - 1);
        let partial = self.weight.integrate_product(
            self.knots[i],
            theta.max(self.knots[i]),
            |_| 1.0,
            &[],
            Tolerance {
                rel: 1e-13,
                abs: 1e-16 * self.total(),
            },
        )?;
        Ok(self.cumulative[i] + partial)
    }

    /// Smallest θ with cumulative mass `target`.
    pub fn inverse(&self, target: f64) -> Result<f64, WeightError> {
        let total = self.total();
        let target = target.clamp(0.0, total);
        let k = self.cumulative.partition_point(|&c| c < target);
        let (mut lo, mut hi) = if k == 0 {
            (self.knots[0], self.knots[0])
        } else {
            (self.knots[k - 1], self.knots[k.min(self.knots.len() - 1)])
        };
        if lo == hi {
            return Ok(lo);
        }
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if self.at(mid)? < target {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        // flat cumulative mass around the solution means the weight vanishes there
        let probe = 1e-7;
        let around = self.at((hi + probe).min(PI))? - self.at((hi - probe).max(-PI))?;
        if around <= 0.0 {
            return Err(WeightError::VanishesOnInterval { at: hi });
        }
        Ok(hi)
    }
}
