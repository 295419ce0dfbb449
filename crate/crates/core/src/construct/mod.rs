//! Equal-weight quadrature construction and verification.
//!
//! - [`solve_quadrature`]: damped least squares on the moment residual,
//!   seeded at the mass medians of equal-mass arcs.
//! - [`kane_construct`]: the topological existence argument carried out in
//!   low dimension (hull of moment vectors, node functions, zero search).
//! - [`brute_force_min_n`]: grid-search oracle for tiny instances.
//! - [`verify`], [`transfer_nodes`]: exactness checks and the
//!   interval/circle node correspondence `t = cos θ`.

mod faithful;
mod hull;

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bounds::BoundsError;
use crate::quad::Tolerance;
use crate::trig::WeightMoments;
use crate::weight::{reduce_angle, CumulativeMass, Domain, WeightError, WeightSpec};

pub use faithful::{kane_construct, kane_construct_with, FaithfulOptions, FaithfulReport};

#[derive(Debug, Error)]
pub enum ConstructError {
    #[error(transparent)]
    Weight(#[from] WeightError),
    #[error(transparent)]
    Bounds(#[from] BoundsError),
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("quadrature on {quadrature:?} checked against a weight on {weight:?}")]
    DomainMismatch { quadrature: Domain, weight: Domain },
    #[error("no quadrature found (best residual {best_residual:e}): {diagnostic}")]
    NonConvergence { best_residual: f64, diagnostic: String },
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("convex hull: {0}")]
    Hull(String),
    #[error("malformed quadrature document: {0}")]
    Parse(String),
}

/// Equal-weight quadrature with sorted nodes (multiplicities allowed).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "QuadratureDoc")]
pub struct Quadrature {
    domain: Domain,
    #[serde(rename = "degree")]
    degree_claimed: usize,
    nodes: Vec<f64>,
    #[serde(rename = "weight")]
    equal_weight: f64,
}

#[derive(Deserialize)]
struct QuadratureDoc {
    domain: Domain,
    degree: usize,
    nodes: Vec<f64>,
    weight: f64,
}

impl TryFrom<QuadratureDoc> for Quadrature {
    type Error = ConstructError;

    fn try_from(d: QuadratureDoc) -> Result<Self, Self::Error> {
        Quadrature::new(d.domain, d.degree, d.nodes, d.weight)
    }
}

impl Quadrature {
    /// Circle nodes are reduced to `[-π, π)`; interval nodes must lie in `[-1, 1]`.
    pub fn new(domain: Domain, degree: usize, nodes: Vec<f64>, weight: f64) -> Result<Self, ConstructError> {
        if nodes.is_empty() {
            return Err(ConstructError::InvalidInput("a quadrature needs at least one node".into()));
        }
        if !(weight > 0.0) || !weight.is_finite() {
            return Err(ConstructError::InvalidInput(format!("weight must be positive, got {weight}")));
        }
        let mut nodes = match domain {
            Domain::Circle => nodes
                .into_iter()
                .map(|t| {
                    if t.is_finite() {
                        Ok(reduce_angle(t))
                    } else {
                        Err(ConstructError::InvalidInput("non-finite node".into()))
                    }
                })
                .collect::<Result<Vec<_>, _>>()?,
            Domain::Interval => {
                if let Some(t) = nodes.iter().find(|t| !(t.abs() <= 1.0)) {
                    return Err(ConstructError::InvalidInput(format!("interval node {t} outside [-1, 1]")));
                }
                nodes
            }
        };
        nodes.sort_by(f64::total_cmp);
        Ok(Self {
            domain,
            degree_claimed: degree,
            nodes,
            equal_weight: weight,
        })
    }

    /// Weight `mass / N`.
    pub fn with_mass(domain: Domain, degree: usize, nodes: Vec<f64>, mass: f64) -> Result<Self, ConstructError> {
        let n = nodes.len().max(1) as f64;
        Self::new(domain, degree, nodes, mass / n)
    }

    pub fn domain(&self) -> Domain {
        self.domain
    }

    pub fn degree(&self) -> usize {
        self.degree_claimed
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn equal_weight(&self) -> f64 {
        self.equal_weight
    }

    /// Smallest gap between consecutive nodes (cyclic on the circle); clustering diagnostic.
    pub fn min_separation(&self) -> f64 {
        let mut gap = self.nodes.windows(2).map(|w| w[1] - w[0]).fold(f64::INFINITY, f64::min);
        if self.domain == Domain::Circle && self.nodes.len() > 1 {
            gap = gap.min(self.nodes[0] + 2.0 * PI - self.nodes[self.nodes.len() - 1]);
        }
        gap
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("quadrature serializes")
    }

    pub fn from_json(text: &str) -> Result<Self, ConstructError> {
        serde_json::from_str(text).map_err(|e| ConstructError::Parse(e.to_string()))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BasisResidual {
    pub basis: String,
    pub quadrature: f64,
    pub integral: f64,
    /// `|quadrature - integral| / (1 + |integral|)`.
    pub residual: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct VerifyReport {
    pub degree: usize,
    pub max_residual: f64,
    pub tol: f64,
    pub accepted: bool,
    pub residuals: Vec<BasisResidual>,
}

/// Checks exactness on `1, cos kθ, sin kθ` (circle) or `T_0..T_n` (interval) up to the claimed degree.
pub fn verify(q: &Quadrature, weight: &WeightSpec, tol: f64) -> Result<VerifyReport, ConstructError> {
    if q.domain != weight.domain() {
        return Err(ConstructError::DomainMismatch {
            quadrature: q.domain,
            weight: weight.domain(),
        });
    }
    let mass = weight.total_mass()?;
    // zero-valued moments cancel; an absolute floor far below any acceptance tolerance
    let itol = Tolerance {
        rel: 1e-13,
        abs: 1e-13 * mass.max(1.0),
    };
    let n = q.degree_claimed;
    let mut basis: Vec<(String, Box<dyn Fn(f64) -> f64 + Sync>)> = Vec::with_capacity(2 * n + 1);
    let (lo, hi) = match q.domain {
        Domain::Circle => {
            basis.push(("1".into(), Box::new(|_| 1.0)));
            for k in 1..=n {
                let kf = k as f64;
                basis.push((format!("cos {k}"), Box::new(move |t: f64| (kf * t).cos())));
                basis.push((format!("sin {k}"), Box::new(move |t: f64| (kf * t).sin())));
            }
            (-PI, PI)
        }
        Domain::Interval => {
            for k in 0..=n {
                let kf = k as f64;
                basis.push((format!("T{k}"), Box::new(move |t: f64| (kf * t.clamp(-1.0, 1.0).acos()).cos())));
            }
            (-1.0, 1.0)
        }
    };
    let residuals = basis
        .par_iter()
        .map(|(name, f)| {
            let integral = weight.integrate_product(lo, hi, f, &[], itol)?;
            let quadrature = q.equal_weight * q.nodes.iter().map(|&t| f(t)).sum::<f64>();
            Ok(BasisResidual {
                basis: name.clone(),
                quadrature,
                integral,
                residual: (quadrature - integral).abs() / (1.0 + integral.abs()),
            })
        })
        .collect::<Result<Vec<_>, WeightError>>()?;
    let max_residual = residuals.iter().map(|r| r.residual).fold(0.0, f64::max);
    Ok(VerifyReport {
        degree: n,
        max_residual,
        tol,
        accepted: max_residual <= tol,
        residuals,
    })
}

/// `E(x)`: entry `i` is `I φ_i(x) - ∫ φ_i W` for `φ = (cos x, sin x, …, cos nx, sin nx)`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MomentVector {
    pub entries: Vec<f64>,
}

/// Moment table of a circle weight; evaluates `E` and the normalized residual `Σ_j E(θ_j) / (IN)`.
#[derive(Clone, Debug)]
pub struct MomentMap {
    mass: f64,
    /// `∫ φ_i W / I` in basis order.
    normalized: Vec<f64>,
}

impl MomentMap {
    pub fn new(weight: &WeightSpec, n: usize) -> Result<Self, ConstructError> {
        if n == 0 {
            return Err(ConstructError::InvalidInput("degree must be at least 1".into()));
        }
        weight.require(Domain::Circle)?;
        let m = WeightMoments::new(weight, n, 1e-13)?;
        let mass = m.cos[0];
        let normalized = (1..=n).flat_map(|k| [m.cos[k] / mass, m.sin[k - 1] / mass]).collect();
        Ok(Self { mass, normalized })
    }

    pub fn degree(&self) -> usize {
        self.normalized.len() / 2
    }

    pub fn dim(&self) -> usize {
        self.normalized.len()
    }

    pub fn mass(&self) -> f64 {
        self.mass
    }

    pub fn at(&self, x: f64) -> MomentVector {
        let mut entries = vec![0.0; self.dim()];
        self.add_basis(x, 1.0, &mut entries);
        for (e, m) in entries.iter_mut().zip(&self.normalized) {
            *e = self.mass * (*e - m);
        }
        MomentVector { entries }
    }

    fn add_basis(&self, x: f64, scale: f64, out: &mut [f64]) {
        for k in 1..=self.degree() {
            let (s, c) = (k as f64 * x).sin_cos();
            out[2 * k - 2] += scale * c;
            out[2 * k - 1] += scale * s;
        }
    }

    /// `(1/N) Σ φ(θ_j) - ∫φW / I`.
    pub fn residual(&self, nodes: &[f64]) -> Vec<f64> {
        let mut r = vec![0.0; self.dim()];
        let w = 1.0 / nodes.len() as f64;
        for &t in nodes {
            self.add_basis(t, w, &mut r);
        }
        for (e, m) in r.iter_mut().zip(&self.normalized) {
            *e -= m;
        }
        r
    }

    /// The verification metric `max_i I |r_i| / (1 + I |m_i|)` of a residual vector.
    pub fn score(&self, r: &[f64]) -> f64 {
        r.iter()
            .zip(&self.normalized)
            .map(|(e, m)| self.mass * e.abs() / (1.0 + self.mass * m.abs()))
            .fold(0.0, f64::max)
    }

    fn jacobian(&self, nodes: &[f64]) -> DMatrix<f64> {
        let w = 1.0 / nodes.len() as f64;
        DMatrix::from_fn(self.dim(), nodes.len(), |i, j| {
            let k = (i / 2 + 1) as f64;
            let (s, c) = (k * nodes[j]).sin_cos();
            if i % 2 == 0 {
                -k * s * w
            } else {
                k * c * w
            }
        })
    }
}

pub fn moment_map(weight: &WeightSpec, n: usize, x: f64) -> Result<MomentVector, ConstructError> {
    Ok(MomentMap::new(weight, n)?.at(x))
}

/// Mass medians of the `N` equal-mass arcs that start at `-π`.
pub fn equipartition_init(weight: &WeightSpec, nodes: usize) -> Result<Vec<f64>, ConstructError> {
    if nodes == 0 {
        return Err(ConstructError::InvalidInput("node count must be positive".into()));
    }
    let cdf = CumulativeMass::new(weight, 64.max(4 * nodes))?;
    let total = cdf.total();
    (0..nodes)
        .map(|k| Ok(cdf.inverse((k as f64 + 0.5) * total / nodes as f64)?))
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SolveOptions {
    pub restarts: usize,
    pub max_iter: usize,
    pub seed: u64,
    /// Verification tolerance the result must meet.
    pub tol: f64,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self {
            restarts: 8,
            max_iter: 200,
            seed: 0,
            tol: 1e-9,
        }
    }
}

fn canonical(nodes: &mut [f64]) {
    for t in nodes.iter_mut() {
        *t = reduce_angle(*t);
    }
    nodes.sort_by(f64::total_cmp);
}

fn norm(r: &[f64]) -> f64 {
    r.iter().map(|v| v * v).sum::<f64>().sqrt()
}

/// Levenberg–Marquardt with minimum-norm steps and step halving; returns the nodes and their score.
pub(crate) fn damped_least_squares(mm: &MomentMap, mut nodes: Vec<f64>, max_iter: usize, target: f64) -> (Vec<f64>, f64) {
    canonical(&mut nodes);
    let mut r = mm.residual(&nodes);
    let mut rn = norm(&r);
    for _ in 0..max_iter {
        if mm.score(&r) <= target {
            break;
        }
        let j = mm.jacobian(&nodes);
        let mut jjt = &j * j.transpose();
        let scale = jjt.trace() / jjt.nrows() as f64;
        let mut lambda = 1e-3 * rn.min(1.0) * scale.max(f64::MIN_POSITIVE);
        let rv = DVector::from_column_slice(&r);
        let y = loop {
            for i in 0..jjt.nrows() {
                jjt[(i, i)] += lambda;
            }
            if let Some(ch) = jjt.clone().cholesky() {
                break Some(ch.solve(&rv));
            }
            lambda *= 10.0;
            if !(lambda < 1e6 * scale.max(1.0)) {
                break None;
            }
        };
        let Some(y) = y else { break };
        let step = -(j.transpose() * y);
        let mut t = 1.0;
        let mut accepted = false;
        while t > 1e-6 {
            let mut trial: Vec<f64> = nodes.iter().zip(step.iter()).map(|(a, d)| a + t * d).collect();
            canonical(&mut trial);
            let tr = mm.residual(&trial);
            let tn = norm(&tr);
            if tn < rn {
                nodes = trial;
                r = tr;
                rn = tn;
                accepted = true;
                break;
            }
            t *= 0.5;
        }
        if !accepted {
            break;
        }
    }
    let s = mm.score(&r);
    (nodes, s)
}

/// Equal-weight quadrature of degree `n` with `N` nodes for a circle weight.
pub fn solve_quadrature(
    weight: &WeightSpec,
    n: usize,
    nodes: usize,
    init: Option<&[f64]>,
) -> Result<Quadrature, ConstructError> {
    solve_quadrature_with(weight, n, nodes, init, &SolveOptions::default())
}

pub fn solve_quadrature_with(
    weight: &WeightSpec,
    n: usize,
    nodes: usize,
    init: Option<&[f64]>,
    opts: &SolveOptions,
) -> Result<Quadrature, ConstructError> {
    if nodes == 0 {
        return Err(ConstructError::InvalidInput("node count must be positive".into()));
    }
    if let Some(i) = init {
        if i.len() != nodes {
            return Err(ConstructError::InvalidInput(format!(
                "initial guess has {} nodes, expected {nodes}",
                i.len()
            )));
        }
    }
    let mm = MomentMap::new(weight, n)?;
    let base = match init {
        Some(i) => i.to_vec(),
        None => equipartition_init(weight, nodes)?,
    };
    let target = (1e-2 * opts.tol).max(1e-13);
    let spread = 0.25 * 2.0 * PI / nodes as f64;
    let attempt = |k: usize| -> Result<(Vec<f64>, f64, bool), ConstructError> {
        let mut start = base.clone();
        if k > 0 {
            let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
            rng.set_stream(k as u64);
            for t in start.iter_mut() {
                *t += spread * rng.sample::<f64, _>(StandardNormal);
            }
        }
        let (x, score) = damped_least_squares(&mm, start, opts.max_iter, target);
        if score > 100.0 * opts.tol {
            return Ok((x, score, false));
        }
        let q = Quadrature::with_mass(Domain::Circle, n, x.clone(), mm.mass())?;
        let ok = verify(&q, weight, opts.tol)?.accepted;
        Ok((x, score, ok))
    };
    let first = attempt(0)?;
    let mut results = vec![first];
    if !results[0].2 && opts.restarts > 1 {
        let rest: Vec<_> = (1..opts.restarts).into_par_iter().map(attempt).collect::<Result<_, _>>()?;
        results.extend(rest);
    }
    if let Some((x, _, _)) = results.iter().find(|r| r.2) {
        return Quadrature::with_mass(Domain::Circle, n, x.clone(), mm.mass());
    }
    let best = results.iter().map(|r| r.1).fold(f64::INFINITY, f64::min);
    Err(ConstructError::NonConvergence {
        best_residual: best,
        diagnostic: format!(
            "{} starts with {nodes} nodes at degree {n} did not reach tolerance {:e}",
            results.len(),
            opts.tol
        ),
    })
}

fn binomial(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// Next multiset (non-decreasing index vector) over `0..grid`, in lexicographic order.
fn next_multiset(idx: &mut [usize], grid: usize) -> bool {
    let mut i = idx.len();
    while i > 0 {
        i -= 1;
        if idx[i] + 1 < grid {
            let v = idx[i] + 1;
            for e in idx[i..].iter_mut() {
                *e = v;
            }
            return true;
        }
    }
    false
}

/// Grid placements scored per node count (all multisets when fewer exist).
pub const BRUTE_CANDIDATES: usize = 4096;
const BRUTE_POLISHED: usize = 12;
/// Verification tolerance of the brute-force search.
pub const BRUTE_TOL: f64 = 1e-6;

/// Smallest `N ≤ N_max` for which a grid search plus local polish finds a quadrature
/// with residual `≤ 1e-6`; `None` when no such `N` is found.
pub fn brute_force_min_n(
    weight: &WeightSpec,
    n: usize,
    n_max: usize,
    grid: usize,
) -> Result<Option<usize>, ConstructError> {
    if n == 0 || n > 3 || n_max == 0 || n_max > 8 || grid < 2 || grid > 64 {
        return Err(ConstructError::InvalidInput(
            "brute force is limited to 1 ≤ n ≤ 3, 1 ≤ N_max ≤ 8, 2 ≤ grid ≤ 64".into(),
        ));
    }
    let mm = MomentMap::new(weight, n)?;
    let points: Vec<f64> = (0..grid).map(|i| -PI + 2.0 * PI * i as f64 / grid as f64).collect();
    for count in 1..=n_max {
        let mut candidates: Vec<Vec<f64>> = Vec::new();
        if binomial(grid + count - 1, count) <= BRUTE_CANDIDATES as f64 {
            let mut idx = vec![0; count];
            loop {
                candidates.push(idx.iter().map(|&i| points[i]).collect());
                if !next_multiset(&mut idx, grid) {
                    break;
                }
            }
        } else {
            let mut rng = ChaCha8Rng::seed_from_u64(0);
            rng.set_stream((n * 16 + count) as u64);
            for _ in 0..BRUTE_CANDIDATES {
                candidates.push((0..count).map(|_| points[rng.random_range(0..grid)]).collect());
            }
        }
        let mut scored: Vec<(f64, usize)> = candidates
            .par_iter()
            .enumerate()
            .map(|(i, c)| (norm(&mm.residual(c)), i))
            .collect();
        scored.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        let mut starts: Vec<Vec<f64>> = scored.iter().take(BRUTE_POLISHED).map(|&(_, i)| candidates[i].clone()).collect();
        starts.push(equipartition_init(weight, count)?);
        let found = starts
            .into_par_iter()
            .map(|s| damped_least_squares(&mm, s, 200, 1e-2 * BRUTE_TOL))
            .collect::<Vec<_>>();
        for (x, score) in found {
            if score <= BRUTE_TOL {
                let q = Quadrature::with_mass(Domain::Circle, n, x, mm.mass())?;
                if verify(&q, weight, BRUTE_TOL)?.accepted {
                    return Ok(Some(count));
                }
            }
        }
    }
    Ok(None)
}

/// Circle nodes map to `cos θ_j` (weight halved, since the lift doubles the mass);
/// interval nodes map to the `2N`-node multiset `{±arccos t_j}` with the same weight.
pub fn transfer_nodes(q: &Quadrature) -> Quadrature {
    let (domain, nodes, weight) = match q.domain {
        Domain::Circle => (
            Domain::Interval,
            q.nodes.iter().map(|t| t.cos().clamp(-1.0, 1.0)).collect(),
            0.5 * q.equal_weight,
        ),
        Domain::Interval => (
            Domain::Circle,
            q.nodes.iter().flat_map(|t| [t.acos(), -t.acos()]).collect(),
            q.equal_weight,
        ),
    };
    Quadrature::new(domain, q.degree_claimed, nodes, weight).expect("image of a valid quadrature is valid")
}
