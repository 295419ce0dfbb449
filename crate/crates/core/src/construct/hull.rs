//! Beneath-beyond convex hull for points in general position, with the
//! triangulation obtained by coning every facet from one hull vertex.

use std::collections::HashMap;

use nalgebra::{DMatrix, DVector};

#[derive(Clone, Debug)]
pub(crate) struct Facet {
    pub vertices: Vec<usize>,
    /// Unit outward normal; the hull satisfies `normal · y ≤ offset`.
    pub normal: Vec<f64>,
    pub offset: f64,
}

#[derive(Clone, Debug)]
pub(crate) struct Hull {
    pub points: Vec<Vec<f64>>,
    pub facets: Vec<Facet>,
    /// Cone vertex of the triangulation: the smallest-index hull vertex.
    pub apex: usize,
    pub scale: f64,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn sub(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

/// Hyperplane through `verts`, oriented so that `inside` lies below it.
fn plane(points: &[Vec<f64>], verts: &[usize], inside: &[f64]) -> Result<(Vec<f64>, f64), String> {
    let d = inside.len();
    let p0 = &points[verts[0]];
    let rows: Vec<Vec<f64>> = verts[1..].iter().map(|&v| sub(&points[v], p0)).collect();
    // generalized cross product: cofactors of the (d-1) × d difference matrix
    let mut normal: Vec<f64> = (0..d)
        .map(|col| {
            let minor = DMatrix::from_fn(d - 1, d - 1, |r, c| rows[r][if c < col { c } else { c + 1 }]);
            let sign = if col % 2 == 0 { 1.0 } else { -1.0 };
            sign * minor.determinant()
        })
        .collect();
    let len = dot(&normal, &normal).sqrt();
    if !(len > 0.0) || !len.is_finite() {
        return Err(format!("vertices {verts:?} are affinely dependent"));
    }
    for v in normal.iter_mut() {
        *v /= len;
    }
    let mut offset = dot(&normal, p0);
    if dot(&normal, inside) > offset {
        for v in normal.iter_mut() {
            *v = -*v;
        }
        offset = -offset;
    }
    Ok((normal, offset))
}

/// Greedy choice of `d + 1` affinely independent points.
fn initial_simplex(points: &[Vec<f64>], scale: f64) -> Result<Vec<usize>, String> {
    let d = points[0].len();
    let mut chosen = vec![0];
    let mut basis: Vec<Vec<f64>> = Vec::new();
    for _ in 0..d {
        let mut best = (0.0, usize::MAX);
        for (i, p) in points.iter().enumerate() {
            if chosen.contains(&i) {
                continue;
            }
            let mut r = sub(p, &points[0]);
            for b in &basis {
                let c = dot(&r, b);
                for (x, y) in r.iter_mut().zip(b) {
                    *x -= c * y;
                }
            }
            let dist = dot(&r, &r).sqrt();
            if dist > best.0 {
                best = (dist, i);
            }
        }
        if !(best.0 > 1e-9 * scale) {
            return Err("points do not span the ambient space".into());
        }
        let mut r = sub(&points[best.1], &points[0]);
        for b in &basis {
            let c = dot(&r, b);
            for (x, y) in r.iter_mut().zip(b) {
                *x -= c * y;
            }
        }
        let len = dot(&r, &r).sqrt();
        basis.push(r.into_iter().map(|x| x / len).collect());
        chosen.push(best.1);
    }
    Ok(chosen)
}

pub(crate) fn convex_hull(points: Vec<Vec<f64>>) -> Result<Hull, String> {
    let d = points.first().map_or(0, Vec::len);
    if d < 2 || points.len() <= d {
        return Err(format!("{} points cannot span dimension {d}", points.len()));
    }
    let scale = points
        .iter()
        .flat_map(|p| p.iter())
        .fold(0.0f64, |m, v| m.max(v.abs()))
        .max(f64::MIN_POSITIVE);
    let eps = 1e-11 * scale;
    let simplex = initial_simplex(&points, scale)?;
    let inside: Vec<f64> = (0..d)
        .map(|k| simplex.iter().map(|&i| points[i][k]).sum::<f64>() / (d + 1) as f64)
        .collect();
    let mut facets = Vec::new();
    for skip in 0..=d {
        let mut verts: Vec<usize> = simplex.iter().enumerate().filter(|&(j, _)| j != skip).map(|(_, &i)| i).collect();
        verts.sort_unstable();
        let (normal, offset) = plane(&points, &verts, &inside)?;
        facets.push(Facet {
            vertices: verts,
            normal,
            offset,
        });
    }
    for idx in 0..points.len() {
        if simplex.contains(&idx) {
            continue;
        }
        let p = &points[idx];
        let visible: Vec<bool> = facets.iter().map(|f| dot(&f.normal, p) - f.offset > eps).collect();
        if !visible.iter().any(|&v| v) {
            continue;
        }
        let mut ridges: HashMap<Vec<usize>, usize> = HashMap::new();
        for (f, _) in facets.iter().zip(&visible).filter(|(_, &v)| v) {
            for skip in 0..d {
                let ridge: Vec<usize> = f.vertices.iter().enumerate().filter(|&(j, _)| j != skip).map(|(_, &v)| v).collect();
                *ridges.entry(ridge).or_insert(0) += 1;
            }
        }
        let mut keep: Vec<Facet> = facets
            .into_iter()
            .zip(&visible)
            .filter(|(_, &v)| !v)
            .map(|(f, _)| f)
            .collect();
        let mut horizon: Vec<Vec<usize>> = ridges.into_iter().filter(|(_, c)| *c == 1).map(|(r, _)| r).collect();
        horizon.sort_unstable();
        for mut verts in horizon {
            verts.push(idx);
            verts.sort_unstable();
            let (normal, offset) = plane(&points, &verts, &inside)?;
            keep.push(Facet {
                vertices: verts,
                normal,
                offset,
            });
        }
        facets = keep;
    }
    let apex = facets.iter().flat_map(|f| f.vertices.iter().copied()).min().expect("hull has facets");
    Ok(Hull {
        points,
        facets,
        apex,
        scale,
    })
}

impl Hull {
    pub fn dim(&self) -> usize {
        self.points[0].len()
    }

    /// Indices of points that are hull vertices.
    pub fn vertices(&self) -> Vec<usize> {
        let mut v: Vec<usize> = self.facets.iter().flat_map(|f| f.vertices.iter().copied()).collect();
        v.sort_unstable();
        v.dedup();
        v
    }

    /// Smallest facet offset; positive iff the origin is interior.
    pub fn origin_depth(&self) -> f64 {
        self.facets.iter().map(|f| f.offset).fold(f64::INFINITY, f64::min)
    }

    /// Minkowski gauge `min{λ > 0 : z/λ ∈ Q}` (requires the origin to be interior).
    pub fn gauge(&self, z: &[f64]) -> f64 {
        self.facets.iter().map(|f| dot(&f.normal, z) / f.offset).fold(0.0, f64::max)
    }

    /// Cone-triangulation simplices: the apex together with each facet avoiding it.
    pub fn simplex_count(&self) -> usize {
        self.facets.iter().filter(|f| !f.vertices.contains(&self.apex)).count()
    }

    /// Barycentric coordinates of `v` in the simplex coned over facet `f`, if it contains `v`.
    fn coords_in(&self, f: usize, v: &[f64], slack: f64) -> Option<Vec<(usize, f64)>> {
        let a = &self.points[self.apex];
        let facet = &self.facets[f];
        let d = self.dim();
        let m = DMatrix::from_fn(d, d, |r, c| self.points[facet.vertices[c]][r] - a[r]);
        let beta = m.lu().solve(&DVector::from_column_slice(&sub(v, a)))?;
        let rest = 1.0 - beta.iter().sum::<f64>();
        if beta.iter().any(|&b| b < -slack) || rest < -slack {
            return None;
        }
        let mut out: Vec<(usize, f64)> = facet.vertices.iter().zip(beta.iter()).map(|(&i, &b)| (i, b.max(0.0))).collect();
        out.push((self.apex, rest.max(0.0)));
        let total: f64 = out.iter().map(|(_, w)| w).sum();
        for (_, w) in out.iter_mut() {
            *w /= total;
        }
        Some(out)
    }

    /// Barycentric coordinates of `v` in a triangulation simplex containing it, or `None` outside.
    /// `hint` holds the facet of the previous lookup and is tried first.
    pub fn locate(&self, v: &[f64], hint: &mut Option<usize>) -> Option<Vec<(usize, f64)>> {
        let a = &self.points[self.apex];
        let dir = sub(v, a);
        if dot(&dir, &dir).sqrt() <= 1e-15 * self.scale {
            return Some(vec![(self.apex, 1.0)]);
        }
        if let Some(f) = *hint {
            if let Some(c) = self.coords_in(f, v, 0.0) {
                return Some(c);
            }
        }
        // the ray from the apex through v leaves Q through the facet that cones v's simplex
        let mut best: Option<(f64, usize)> = None;
        for (i, f) in self.facets.iter().enumerate() {
            if f.vertices.contains(&self.apex) {
                continue;
            }
            let den = dot(&f.normal, &dir);
            if den <= 0.0 {
                continue;
            }
            let t = (f.offset - dot(&f.normal, a)) / den;
            if best.is_none_or(|(bt, _)| t < bt) {
                best = Some((t, i));
            }
        }
        let (t, f) = best?;
        if t < 1.0 - 1e-10 {
            return None;
        }
        *hint = Some(f);
        self.coords_in(f, v, 1e-9)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn square_in_the_plane() {
        let pts = vec![vec![0.0, 0.0], vec![1.0, 0.0], vec![0.0, 1.0], vec![1.0, 1.0], vec![0.4, 0.6]];
        let h = convex_hull(pts).unwrap();
        assert_eq!(h.facets.len(), 4);
        assert_eq!(h.vertices(), vec![0, 1, 2, 3]);
        let mut hint = None;
        let b = h.locate(&[0.25, 0.5], &mut hint).unwrap();
        let mut p = [0.0, 0.0];
        for (i, w) in &b {
            p[0] += w * h.points[*i][0];
            p[1] += w * h.points[*i][1];
        }
        assert!((p[0] - 0.25).abs() < 1e-12 && (p[1] - 0.5).abs() < 1e-12);
        assert!(h.locate(&[1.5, 0.5], &mut hint).is_none());
        // a cached simplex that misses the point falls back to the full search
        assert!(h.locate(&[0.75, 0.5], &mut hint).is_some());
    }
}
