//! The existence argument behind the Kane node bound, carried out in low
//! dimension:
//!
//! 1. a finite set `S` on which `2N max_S q > ∫|q'|` for zero-mean `q`;
//! 2. the polytope `Q = conv{E(x) : x ∈ S}` with the origin inside;
//! 3. node functions `f_i(v) = min{x : ρ_v(x) ≥ i}`, where
//!    `ρ_v(x) = (π + x)/(2π) + N Σ_{x_j ≤ x} α_j` and `α` are the barycentric
//!    coordinates of `v` in its simplex;
//! 4. a zero of `F(v) = Σ_i E(f_i(v))`, whose images `f_i(v)` are the nodes.
//!
//! `F` is only piecewise smooth and nearly flat on many pieces, so the zero is
//! tracked by continuation from the linear map `N (v - v₀)` rather than by
//! minimizing `|F|`.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::Serialize;

use super::hull::{convex_hull, Hull};
use super::{norm, verify, ConstructError, MomentMap, Quadrature};
use crate::bounds::{kane_sup, KaneOptions};
use crate::trig::TrigPoly;
use crate::weight::{Domain, WeightSpec};

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FaithfulOptions {
    /// Largest degree attempted; the hull lives in dimension `2n`.
    pub max_degree: usize,
    /// Random zero-mean polynomials used to test the covering inequality on `S`.
    pub lemma_samples: usize,
    /// Times `|S|` may be doubled after a failed covering test or a boundary origin.
    pub max_doublings: usize,
    /// Refuse hulls with more facets than this.
    pub max_facets: usize,
    /// Continuation starts (the origin, then random interior points).
    pub starts: usize,
    pub seed: u64,
    pub tol: f64,
    pub kane: KaneOptions,
}

impl Default for FaithfulOptions {
    fn default() -> Self {
        Self {
            max_degree: 3,
            lemma_samples: 200,
            max_doublings: 3,
            max_facets: 400_000,
            starts: 8,
            seed: 0,
            tol: 1e-8,
            kane: KaneOptions::default(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FaithfulReport {
    pub quadrature: Quadrature,
    pub kane_node_bound: u64,
    /// `|S|` used, and covering-inequality violations seen at each size tried.
    pub sample_size: usize,
    pub lemma_violations: Vec<usize>,
    pub hull_vertices: usize,
    pub hull_facets: usize,
    pub simplices: usize,
    /// The zero `v*` of `F`.
    pub point: Vec<f64>,
    pub residual: f64,
}

/// Predicted facet count of the cyclic polytope with `r` vertices in dimension `2n`.
fn cyclic_facets(r: usize, n: usize) -> f64 {
    if r <= 2 * n {
        return 0.0;
    }
    let k = r - n;
    let c = (0..n).fold(1.0, |acc, i| acc * (k - i) as f64 / (i + 1) as f64);
    r as f64 / k as f64 * c
}

fn covering_violations(mm: &MomentMap, s: &[f64], nodes: usize, samples: usize, seed: u64) -> usize {
    let n = mm.degree();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(0x5eed);
    let mut bad = 0;
    for _ in 0..samples {
        let cos: Vec<f64> = (0..=n).map(|_| rng.sample(StandardNormal)).collect();
        let sin: Vec<f64> = (0..n).map(|_| rng.sample(StandardNormal)).collect();
        // subtract the weighted mean so that ∫ q W = 0
        let mean: f64 = (1..=n)
            .map(|k| cos[k] * mm.normalized[2 * k - 2] + sin[k - 1] * mm.normalized[2 * k - 1])
            .sum::<f64>()
            + cos[0];
        let mut c = cos.clone();
        c[0] -= mean;
        let q = TrigPoly::new(c, sin).expect("finite coefficients");
        let lhs = 2.0 * nodes as f64 * s.iter().map(|&x| q.eval(x)).fold(f64::NEG_INFINITY, f64::max);
        let rhs = q.derivative().l1_norm(1e-12);
        if !(lhs > rhs) {
            bad += 1;
        }
    }
    bad
}

/// `f_1(v) ≤ … ≤ f_N(v)` from barycentric coordinates `(abscissa, α)`.
pub(crate) fn node_functions(mut coords: Vec<(f64, f64)>, count: usize) -> Vec<f64> {
    coords.sort_by(|a, b| a.0.total_cmp(&b.0));
    let nf = count as f64;
    let mut out = Vec::with_capacity(count);
    let mut acc = 0.0;
    let mut lo = -PI;
    let mut k = 0;
    for i in 1..=count {
        let target = i as f64;
        loop {
            // on [lo, next) ρ is linear: (π + x)/(2π) + N acc
            let next = coords.get(k).map_or(PI, |c| c.0);
            let x = 2.0 * PI * (target - nf * acc) - PI;
            if x < next {
                out.push(x.max(lo));
                break;
            }
            if k == coords.len() {
                out.push(next.min(PI - f64::EPSILON));
                break;
            }
            acc += coords[k].1;
            lo = next;
            k += 1;
            if (PI + next) / (2.0 * PI) + nf * acc >= target {
                out.push(next);
                break;
            }
        }
    }
    out
}

#[derive(Clone, Copy)]
struct ZeroSearch<'a> {
    hull: &'a Hull,
    abscissae: &'a [f64],
    mm: &'a MomentMap,
    nodes: usize,
}

/// Continuation budget: path steps and corrector iterations per step.
const MAX_PATH_STEPS: usize = 5000;
const PATH_CORRECTOR_ITERS: usize = 8;
const FINAL_CORRECTOR_ITERS: usize = 40;
const MIN_PATH_STEP: f64 = 1e-6;

impl ZeroSearch<'_> {
    /// Pulls `z` back into `Q` along the ray from the origin.
    fn to_polytope(&self, z: &[f64]) -> Vec<f64> {
        let g = self.hull.gauge(z);
        if g <= 1.0 {
            z.to_vec()
        } else {
            let shrink = (1.0 - 1e-12) / g;
            z.iter().map(|x| x * shrink).collect()
        }
    }

    fn nodes_at(&self, v: &[f64], cursor: &mut Option<usize>) -> Option<Vec<f64>> {
        let coords = self.hull.locate(v, cursor)?;
        Some(node_functions(
            coords.into_iter().map(|(i, a)| (self.abscissae[i], a)).collect(),
            self.nodes,
        ))
    }

    /// `H_t(v) = t F(v) + (1 - t) N (v - v₀)`; on a facet `u·v = 1` both terms have
    /// positive `u`-component, so zeros never reach the boundary.
    fn homotopy(&self, v: &[f64], start: &[f64], t: f64, cursor: &mut Option<usize>) -> Option<Vec<f64>> {
        let nf = self.nodes as f64;
        let s = self.mm.mass() * nf;
        let x = self.nodes_at(v, cursor)?;
        let r = self.mm.residual(&x);
        Some(
            r.iter()
                .zip(v.iter().zip(start))
                .map(|(f, (a, b))| t * s * f + (1.0 - t) * nf * (a - b))
                .collect(),
        )
    }

    /// Newton on `H_t` with difference Jacobians and step halving.
    fn corrector(
        &self,
        mut v: Vec<f64>,
        start: &[f64],
        t: f64,
        tol: f64,
        iters: usize,
        cursor: &mut Option<usize>,
    ) -> Option<Vec<f64>> {
        let d = v.len();
        let scale = self.mm.mass() * self.nodes as f64;
        let mut h = self.homotopy(&v, start, t, cursor)?;
        let mut hn = norm(&h);
        let eps = 1e-9 * self.hull.scale;
        for _ in 0..iters {
            if hn <= tol * scale {
                return Some(v);
            }
            let mut jac = DMatrix::zeros(d, d);
            for c in 0..d {
                let mut p = v.clone();
                p[c] += eps;
                let hp = self.homotopy(&p, start, t, cursor)?;
                for r in 0..d {
                    jac[(r, c)] = (hp[r] - h[r]) / eps;
                }
            }
            let rhs = DVector::from_column_slice(&h);
            let delta = match jac.clone().lu().solve(&rhs) {
                Some(x) => -x,
                None => {
                    // rank-deficient piece: regularized least squares
                    let jt = jac.transpose();
                    let mut a = &jt * &jac;
                    let l = 1e-10 * a.trace().max(f64::MIN_POSITIVE);
                    for i in 0..d {
                        a[(i, i)] += l;
                    }
                    -(a.cholesky()?.solve(&(&jt * rhs)))
                }
            };
            let mut step = 1.0;
            let mut moved = false;
            while step > 1e-10 {
                let trial: Vec<f64> = v.iter().zip(delta.iter()).map(|(a, b)| a + step * b).collect();
                let trial = self.to_polytope(&trial);
                if let Some(ht) = self.homotopy(&trial, start, t, cursor) {
                    let tn = norm(&ht);
                    if tn < hn {
                        v = trial;
                        h = ht;
                        hn = tn;
                        moved = true;
                        break;
                    }
                }
                step *= 0.5;
            }
            if !moved {
                break;
            }
        }
        (hn <= tol * scale).then_some(v)
    }

    /// Follows the zero of `H_t` from `v₀` at `t = 0` to a zero of `F` at `t = 1`.
    fn continuation(&self, start: &[f64], tol: f64, cursor: &mut Option<usize>) -> Option<Vec<f64>> {
        let mut v = start.to_vec();
        let mut t: f64 = 0.0;
        let mut dt: f64 = 0.05;
        for _ in 0..MAX_PATH_STEPS {
            if t >= 1.0 {
                return Some(v);
            }
            let next = (t + dt).min(1.0);
            let (step_tol, iters) = if next == 1.0 {
                (tol, FINAL_CORRECTOR_ITERS)
            } else {
                (1e-9, PATH_CORRECTOR_ITERS)
            };
            match self.corrector(v.clone(), start, next, step_tol, iters, cursor) {
                Some(w) => {
                    v = w;
                    t = next;
                    dt = (1.5 * dt).min(0.1);
                }
                None => {
                    dt *= 0.5;
                    // a fold in t: this start is abandoned for the next one
                    if dt < MIN_PATH_STEP {
                        return None;
                    }
                }
            }
        }
        (t >= 1.0).then_some(v)
    }
}

pub fn kane_construct(weight: &WeightSpec, n: usize, nodes: usize) -> Result<Quadrature, ConstructError> {
    kane_construct_with(weight, n, nodes, &FaithfulOptions::default()).map(|r| r.quadrature)
}

pub fn kane_construct_with(
    weight: &WeightSpec,
    n: usize,
    nodes: usize,
    opts: &FaithfulOptions,
) -> Result<FaithfulReport, ConstructError> {
    if n == 0 || n > opts.max_degree {
        return Err(ConstructError::InvalidInput(format!(
            "degree {n} outside 1..={} for the hull construction",
            opts.max_degree
        )));
    }
    weight.require(Domain::Circle)?;
    let kane = kane_sup(weight, n, &opts.kane)?;
    let mm = MomentMap::new(weight, n)?;
    let mass = mm.mass();
    if !(2.0 * nodes as f64 > mass * kane.sup_estimate) {
        return Err(ConstructError::Precondition(format!(
            "2N = {} does not exceed I·sup ≈ {:.6}; no existence guarantee below N = {}",
            2 * nodes,
            mass * kane.sup_estimate,
            kane.node_bound
        )));
    }

    let mut size = 8 * (2 * n + 1);
    let mut violations = Vec::new();
    let mut prepared = None;
    for attempt in 0..=opts.max_doublings {
        if attempt > 0 {
            size *= 2;
        }
        if cyclic_facets(size, n) > opts.max_facets as f64 {
            break;
        }
        let s: Vec<f64> = (0..size).map(|i| -PI + 2.0 * PI * i as f64 / size as f64).collect();
        let bad = covering_violations(&mm, &s, nodes, opts.lemma_samples, opts.seed);
        violations.push(bad);
        if bad > 0 {
            continue;
        }
        let points: Vec<Vec<f64>> = s.iter().map(|&x| mm.at(x).entries).collect();
        let hull = convex_hull(points).map_err(ConstructError::Hull)?;
        if hull.origin_depth() > 1e-9 * hull.scale {
            prepared = Some((s, hull));
            break;
        }
    }
    let Some((abscissae, hull)) = prepared else {
        return Err(ConstructError::Precondition(format!(
            "no admissible sample set: covering violations {violations:?} for sizes up to {size}"
        )));
    };

    let search = ZeroSearch {
        hull: &hull,
        abscissae: &abscissae,
        mm: &mm,
        nodes,
    };
    let d = 2 * n;
    let path_tol = (1e-3 * opts.tol).max(1e-14);
    let attempt = |k: usize| -> Result<Option<(Vec<f64>, Quadrature, f64)>, ConstructError> {
        let start: Vec<f64> = if k == 0 {
            vec![0.0; d]
        } else {
            let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
            rng.set_stream(k as u64);
            let dir: Vec<f64> = (0..d).map(|_| rng.sample(StandardNormal)).collect();
            let g = hull.gauge(&dir).max(f64::MIN_POSITIVE);
            let r: f64 = rng.random_range(0.0..0.5);
            dir.iter().map(|x| x * r / g).collect()
        };
        let mut cursor = None;
        let Some(v) = search.continuation(&start, path_tol, &mut cursor) else { return Ok(None) };
        let Some(x) = search.nodes_at(&v, &mut cursor) else { return Ok(None) };
        let q = Quadrature::with_mass(Domain::Circle, n, x, mass)?;
        let rep = verify(&q, weight, opts.tol)?;
        Ok(Some((v, q, rep.max_residual)))
    };
    let mut results = vec![attempt(0)?];
    let solved = |r: &Option<(Vec<f64>, Quadrature, f64)>| r.as_ref().is_some_and(|x| x.2 <= opts.tol);
    if !solved(&results[0]) && opts.starts > 1 {
        let rest: Vec<_> = (1..opts.starts).into_par_iter().map(attempt).collect::<Result<_, _>>()?;
        results.extend(rest);
    }
    let best = results.iter().flatten().map(|r| r.2).fold(f64::INFINITY, f64::min);
    if let Some((point, quadrature, residual)) = results.into_iter().flatten().find(|r| r.2 <= opts.tol) {
        return Ok(FaithfulReport {
            quadrature,
            kane_node_bound: kane.node_bound,
            sample_size: abscissae.len(),
            lemma_violations: violations,
            hull_vertices: hull.vertices().len(),
            hull_facets: hull.facets.len(),
            simplices: hull.simplex_count(),
            point,
            residual,
        });
    }
    Err(ConstructError::NonConvergence {
        best_residual: best,
        diagnostic: format!(
            "continuation over the hull of {} moment vectors did not reach a zero",
            abscissae.len()
        ),
    })
}
