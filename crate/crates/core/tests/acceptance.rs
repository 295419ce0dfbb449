//! Acceptance suite: one pass/fail line per criterion, non-zero exit on any failure.

use std::f64::consts::PI;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use chebquad::bounds::{
    certificate, empirical_mt_constant, kane_sup, r_interval, r_trig, stretched_exp_scaling, KaneOptions,
};
use chebquad::construct::{brute_force_min_n, kane_construct_with, solve_quadrature, verify, FaithfulOptions, Quadrature};
use chebquad::fit::power_law;
use chebquad::quad::Tolerance;
use chebquad::trig::{fejer_at_first_zero_half, fejer_value, TrigPoly};
use chebquad::weight::{Domain, Family, SingularPoint, WeightSpec};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;

fn abs_sin() -> WeightSpec {
    WeightSpec::constant(Domain::Interval).lift_to_circle().unwrap()
}

fn sin_squared() -> WeightSpec {
    WeightSpec::jacobi(0.5, 0.5).unwrap().lift_to_circle().unwrap()
}

/// Doubling circle weights with their doubling constants.
fn circle_weights() -> Vec<(&'static str, WeightSpec, f64)> {
    vec![
        ("constant", WeightSpec::constant(Domain::Circle), 2.0),
        ("abs_sin", abs_sin(), 4.0),
        ("sin_squared", sin_squared(), 8.0),
    ]
}

fn abs_t() -> WeightSpec {
    WeightSpec::new(
        Domain::Interval,
        Family::GeneralizedJacobi {
            alpha: 0.0,
            beta: 0.0,
            singular_points: vec![SingularPoint { at: 0.0, exponent: 1.0 }],
            h: vec![1.0],
        },
    )
    .unwrap()
}

fn interval_weights() -> Vec<(&'static str, WeightSpec)> {
    vec![
        ("constant", WeightSpec::constant(Domain::Interval)),
        ("jacobi(1/2,1/2)", WeightSpec::jacobi(0.5, 0.5).unwrap()),
        ("jacobi(1,0)", WeightSpec::jacobi(1.0, 0.0).unwrap()),
        ("chebyshev", WeightSpec::jacobi(-0.5, -0.5).unwrap()),
        ("abs_t", abs_t()),
    ]
}

fn err<E: std::fmt::Display>(e: E) -> String {
    e.to_string()
}

fn within(elapsed: Duration, limit_secs: u64, detail: String) -> Outcome {
    if elapsed <= Duration::from_secs(limit_secs) {
        Ok(detail)
    } else {
        Err(format!("{detail}; took {elapsed:.1?}, limit {limit_secs} s"))
    }
}

fn exactness_oracles() -> Outcome {
    let t = Instant::now();
    let constant = WeightSpec::constant(Domain::Circle);
    let mut worst_circle: f64 = 0.0;
    for n in 2..=64usize {
        let nodes = (0..n).map(|j| 2.0 * PI * j as f64 / n as f64).collect();
        let q = Quadrature::with_mass(Domain::Circle, n - 1, nodes, 2.0 * PI).map_err(err)?;
        let r = verify(&q, &constant, 1e-10).map_err(err)?;
        if !r.accepted {
            return Err(format!("equispaced N = {n}: residual {:e}", r.max_residual));
        }
        worst_circle = worst_circle.max(r.max_residual);
    }
    let arcsine = WeightSpec::jacobi(-0.5, -0.5).map_err(err)?;
    let mut worst_interval: f64 = 0.0;
    for n in 2..=32usize {
        let nodes = (1..=n).map(|j| ((2 * j - 1) as f64 * PI / (2 * n) as f64).cos()).collect();
        let q = Quadrature::new(Domain::Interval, 2 * n - 1, nodes, PI / n as f64).map_err(err)?;
        let r = verify(&q, &arcsine, 1e-8).map_err(err)?;
        if !r.accepted {
            return Err(format!("Chebyshev N = {n}: residual {:e}", r.max_residual));
        }
        worst_interval = worst_interval.max(r.max_residual);
    }
    within(
        t.elapsed(),
        10,
        format!("max residual {worst_circle:.1e} (circle), {worst_interval:.1e} (interval)"),
    )
}

fn bernstein_suite() -> Outcome {
    let t = Instant::now();
    let mut worst = f64::NEG_INFINITY;
    for n in 1..=16usize {
        let mut rng = ChaCha8Rng::seed_from_u64(n as u64);
        for i in 0..1000 {
            let cos = (0..=n).map(|_| rng.random_range(-1.0..1.0)).collect();
            let sin = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
            let p = TrigPoly::new(cos, sin).map_err(err)?;
            let lhs = p.derivative().l1_norm(1e-12);
            let rhs = p.degree() as f64 * p.l1_norm(1e-12);
            if lhs > rhs * (1.0 + 1e-8) {
                return Err(format!("n = {n}, sample {i}: {lhs} > {rhs}"));
            }
            if rhs > 0.0 {
                worst = worst.max(lhs / rhs);
            }
        }
    }
    within(t.elapsed(), 60, format!("16000 polynomials, max ratio {worst:.6}"))
}

fn fejer_suite() -> Outcome {
    let mut checks = 0usize;
    for m in 0..=40usize {
        let q = (2 * m + 1) as f64;
        for i in 0..=4000 {
            let th = -PI + 2.0 * PI * i as f64 / 4000.0;
            let v = fejer_value(m, th);
            let cap = if th == 0.0 { 1.0 } else { 1f64.min((PI / (q * th)).powi(2)) };
            if v > cap * (1.0 + 1e-12) + 1e-15 {
                return Err(format!("upper envelope fails at m = {m}, θ = {th}"));
            }
            if (v - fejer_value(m, -th)).abs() > 1e-14 {
                return Err(format!("F_{m} not even at θ = {th}"));
            }
            checks += 2;
        }
        let mut prev = f64::INFINITY;
        for i in 0..=2000 {
            let th = 2.0 * PI / q * i as f64 / 2000.0;
            let v = fejer_value(m, th);
            if v > prev + 1e-15 {
                return Err(format!("F_{m} increases at θ = {th} on the main lobe"));
            }
            prev = v;
            checks += 1;
        }
        if m >= 1 {
            let c = fejer_at_first_zero_half(m);
            let next = fejer_at_first_zero_half(m + 1);
            if !((2.0 / PI).powi(2) - 1e-15 <= c && c <= (2.0f64 / 3.0).powi(2) + 1e-15 && next < c) {
                return Err(format!("half-width value bounds fail at m = {m}: {c}"));
            }
            checks += 1;
        }
    }
    // arc masses of F_m^ℓ against doubling weights
    let tol = Tolerance { rel: 1e-8, abs: 1e-300 };
    for (name, w, l) in circle_weights() {
        let ell = (5.0 * f64::log2(l)).ceil() as i32;
        for m in [1usize, 2, 4, 8] {
            let q = (2 * m + 1) as f64;
            for center in [0.0, 0.7, -2.5, PI / 2.0] {
                let base = w
                    .integrate_product(center - PI / q, center + PI / q, |_| 1.0, &[], tol)
                    .map_err(err)?;
                for k in 1..=m as i64 {
                    for kk in [-(k as f64), k as f64] {
                        let lo = center + (2.0 * kk - 1.0) * PI / q;
                        let hi = center + (2.0 * kk + 1.0) * PI / q;
                        let arc = w
                            .integrate_product(lo, hi, |t| fejer_value(m, t - center).powi(ell), &[], tol)
                            .map_err(err)?;
                        let bound = (2.0 / (3.0 * k as f64)).powi(ell) * base;
                        if arc > bound * (1.0 + 1e-8) {
                            return Err(format!("{name}: m = {m}, k = {kk}, center {center}: {arc} > {bound}"));
                        }
                        checks += 1;
                    }
                }
            }
        }
    }
    Ok(format!("{checks} checks, zero violations"))
}

fn scaling_fits() -> Outcome {
    let t = Instant::now();
    let ns = [8usize, 16, 32, 64, 128];
    let xs: Vec<f64> = ns.iter().map(|&n| n as f64).collect();
    let fit_for = |w: &WeightSpec| -> Result<f64, String> {
        let ys = ns
            .iter()
            .map(|&n| r_interval(w, n).map(|r| r.value).map_err(err))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(power_law(&xs, &ys).map_err(err)?.slope)
    };
    let constant = fit_for(&WeightSpec::constant(Domain::Interval))?;
    if (constant - 2.0).abs() > 0.10 {
        return Err(format!("constant weight exponent {constant:.4}, expected 2 ± 0.10"));
    }
    let mut parts = vec![format!("constant {constant:.3}")];
    for (name, w, expected) in [
        ("(1,0)", WeightSpec::jacobi(1.0, 0.0).map_err(err)?, 4.0),
        ("(1/2,1/2)", WeightSpec::jacobi(0.5, 0.5).map_err(err)?, 3.0),
        ("|t|", abs_t(), 2.0),
    ] {
        let e = fit_for(&w)?;
        if (e - expected).abs() > 0.15 {
            return Err(format!("{name} exponent {e:.4}, expected {expected} ± 0.15"));
        }
        parts.push(format!("{name} {e:.3} (≈{expected})"));
    }
    within(t.elapsed(), 300, parts.join(", "))
}

fn sandwich() -> Outcome {
    let mut parts = Vec::new();
    for (name, w) in interval_weights() {
        let lifted = w.lift_to_circle().map_err(err)?;
        let mut ratios = Vec::new();
        for n in 4..=64 {
            let rw = r_interval(&w, n).map_err(err)?.value;
            let rt = r_trig(&lifted, n).map_err(err)?.value;
            if rw > rt * (1.0 + 1e-8) {
                return Err(format!("{name}, n = {n}: R_w = {rw} > R^trig = {rt}"));
            }
            ratios.push(rt / rw);
        }
        let max = ratios.iter().copied().fold(0.0, f64::max);
        let min = ratios.iter().copied().fold(f64::INFINITY, f64::min);
        if max > 2.0 * min {
            return Err(format!("{name}: ratio spread {min:.4}..{max:.4}"));
        }
        parts.push(format!("{name} {:.3}", max / min));
    }
    Ok(format!("max/min ratio per weight: {}", parts.join(", ")))
}

fn kane_scale_construction() -> Outcome {
    let t = Instant::now();
    let mut worst: f64 = 0.0;
    let mut largest = 0;
    for (name, w, _) in circle_weights() {
        for n in 2..=16 {
            let bound = kane_sup(&w, n, &KaneOptions::default()).map_err(err)?.node_bound as usize;
            let q = solve_quadrature(&w, n, bound, None).map_err(|e| format!("{name}, n = {n}, N = {bound}: {e}"))?;
            let r = verify(&q, &w, 1e-9).map_err(err)?;
            if !r.accepted {
                return Err(format!("{name}, n = {n}: residual {:e}", r.max_residual));
            }
            worst = worst.max(r.max_residual);
            largest = largest.max(bound);
        }
    }
    within(t.elapsed(), 300, format!("45 instances, max residual {worst:.1e}, largest N {largest}"))
}

fn tiny_instances() -> Outcome {
    let mut parts = Vec::new();
    for (name, w, l) in circle_weights() {
        for n in 1..=3 {
            let bound = kane_sup(&w, n, &KaneOptions::default()).map_err(err)?.node_bound as usize;
            let brute = brute_force_min_n(&w, n, 8, 64).map_err(err)?;
            match brute {
                Some(b) if b > bound => return Err(format!("{name}, n = {n}: brute force {b} > bound {bound}")),
                None if bound <= 8 => {
                    return Err(format!("{name}, n = {n}: nothing up to 8 although the bound is {bound}"))
                }
                _ => {}
            }
            parts.push(format!("{name}/{n}: {}≤{bound}", brute.map_or("-".into(), |b| b.to_string())));
        }
        for n in [4, 8, 12] {
            let bound = kane_sup(&w, n, &KaneOptions::default()).map_err(err)?.node_bound as usize;
            let q = solve_quadrature(&w, n, bound, None).map_err(err)?;
            for ell in [None, Some(1), Some(2), Some(3)] {
                let c = certificate(&w, n, l, ell, None).map_err(err)?;
                if c.excludes(q.node_count()) {
                    return Err(format!(
                        "{name}, n = {n}, ℓ = {ell:?}: certificate excludes a verified {bound}-node rule"
                    ));
                }
            }
        }
    }
    Ok(parts.join(", "))
}

fn faithful_path() -> Outcome {
    let mut parts = Vec::new();
    for (name, w) in [("constant", WeightSpec::constant(Domain::Circle)), ("sin_squared", sin_squared())] {
        for n in 1..=3 {
            let bound = kane_sup(&w, n, &KaneOptions::default()).map_err(err)?.node_bound as usize;
            let rep = kane_construct_with(&w, n, bound, &FaithfulOptions::default())
                .map_err(|e| format!("{name}, n = {n}: {e}"))?;
            if !(rep.residual <= 1e-8) {
                return Err(format!("{name}, n = {n}: residual {:e}", rep.residual));
            }
            parts.push(format!("{name}/{n} N={bound} {:.0e}", rep.residual));
        }
    }
    Ok(parts.join(", "))
}

fn stretched_exponential_law() -> Outcome {
    let t = Instant::now();
    let ns = [16, 32, 64, 128, 256];
    let mut parts = Vec::new();
    for alpha in [1.0, 2.0] {
        let rep = stretched_exp_scaling(alpha, &ns).map_err(err)?;
        let expected = alpha / (alpha + 1.0);
        if (rep.fitted_exponent - expected).abs() > 0.1 {
            return Err(format!("α = {alpha}: fitted {:.4}, expected {expected:.4} ± 0.1", rep.fitted_exponent));
        }
        parts.push(format!("α={alpha}: {:.3} (≈{expected:.3})", rep.fitted_exponent));
    }
    within(t.elapsed(), 120, parts.join(", "))
}

fn mt_stability() -> Outcome {
    let mut parts = Vec::new();
    for (name, w, _) in circle_weights() {
        let at4 = empirical_mt_constant(&w, 4, 200, 0).map_err(err)?;
        let at32 = empirical_mt_constant(&w, 32, 200, 0).map_err(err)?;
        if at32 > 2.0 * at4 {
            return Err(format!("{name}: ratio {at32:.4} at n = 32 exceeds twice {at4:.4} at n = 4"));
        }
        parts.push(format!("{name} {at4:.3}→{at32:.3}"));
    }
    Ok(parts.join(", "))
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Outcome); 10] = [
        ("exactness oracles", exactness_oracles),
        ("Bernstein L1 suite", bernstein_suite),
        ("Fejér kernel properties and arc decay", fejer_suite),
        ("R_w scaling exponents", scaling_fits),
        ("sandwich R_w ≤ R^trig", sandwich),
        ("construction at the Kane bound", kane_scale_construction),
        ("tiny-instance oracle agreement", tiny_instances),
        ("hull construction path", faithful_path),
        ("stretched-exponential law", stretched_exponential_law),
        ("averaged-weight ratio stability", mt_stability),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let t = Instant::now();
        let outcome = std::panic::catch_unwind(run).unwrap_or_else(|e| {
            let msg = e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            Err(format!("panicked: {msg}"))
        });
        let secs = t.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("criterion {:>2}: PASS  {name} [{secs:.1} s] {detail}", i + 1),
            Err(detail) => {
                failed += 1;
                println!("criterion {:>2}: FAIL  {name} [{secs:.1} s] {detail}", i + 1);
            }
        }
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
