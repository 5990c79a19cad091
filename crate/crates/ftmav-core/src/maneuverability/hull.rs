//! Convex hull facets by gift wrapping in arbitrary dimension.
//!
//! Facets are found by rotating a supporting hyperplane about each ridge of a
//! known facet. Ridges come from a recursive hull of the facet's own vertices,
//! so coplanar points always end up in a single merged facet.

use alloc::collections::VecDeque;
use alloc::vec::Vec;

use libm::{atan2, cos, sin, sqrt};

/// Supporting hyperplane `normal·x ≤ offset` with the input points it touches.
#[derive(Debug, Clone, PartialEq)]
pub struct Facet {
    pub normal: Vec<f64>,
    pub offset: f64,
    pub vertices: Vec<usize>,
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn sub(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

fn norm(a: &[f64]) -> f64 {
    sqrt(dot(a, a))
}

fn unit(d: usize, k: usize) -> Vec<f64> {
    let mut e = alloc::vec![0.0; d];
    e[k] = 1.0;
    e
}

/// Removes the components of `v` along the orthonormal `basis`.
fn reject(v: &mut [f64], basis: &[Vec<f64>]) {
    for b in basis {
        let c = dot(v, b);
        v.iter_mut().zip(b).for_each(|(x, y)| *x -= c * y);
    }
}

/// Orthonormal basis of the directions spanned by `idx` around its first point.
pub(crate) fn affine_basis(points: &[Vec<f64>], idx: &[usize], eps: f64) -> Vec<Vec<f64>> {
    let mut basis: Vec<Vec<f64>> = Vec::new();
    if idx.is_empty() {
        return basis;
    }
    let d = points[idx[0]].len();
    let p0 = &points[idx[0]];
    // two passes of Gram-Schmidt keep the basis orthogonal under round-off
    loop {
        let mut best: Option<(f64, Vec<f64>)> = None;
        for &i in &idx[1..] {
            let mut v = sub(&points[i], p0);
            reject(&mut v, &basis);
            reject(&mut v, &basis);
            let n = norm(&v);
            if n > eps && best.as_ref().is_none_or(|(bn, _)| n > *bn) {
                best = Some((n, v));
            }
        }
        match best {
            Some((n, mut v)) if basis.len() < d => {
                v.iter_mut().for_each(|x| *x /= n);
                basis.push(v);
            }
            _ => break,
        }
    }
    basis
}

/// Orthonormal basis of the complement of `span`.
pub(crate) fn complement(d: usize, span: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let mut all: Vec<Vec<f64>> = span.to_vec();
    let mut out = Vec::new();
    while all.len() < d {
        let mut best: Option<(f64, Vec<f64>)> = None;
        for k in 0..d {
            let mut v = unit(d, k);
            reject(&mut v, &all);
            reject(&mut v, &all);
            let n = norm(&v);
            if best.as_ref().is_none_or(|(bn, _)| n > *bn) {
                best = Some((n, v));
            }
        }
        let (n, mut v) = best.expect("d > 0");
        v.iter_mut().for_each(|x| *x /= n);
        all.push(v.clone());
        out.push(v);
    }
    out
}

fn support(points: &[Vec<f64>], n: &[f64], eps: f64) -> (f64, Vec<usize>) {
    let offset = points.iter().map(|p| dot(n, p)).fold(f64::NEG_INFINITY, f64::max);
    let verts = (0..points.len())
        .filter(|&i| dot(n, &points[i]) >= offset - eps)
        .collect();
    (offset, verts)
}

fn normalized(mut v: Vec<f64>) -> Vec<f64> {
    let n = norm(&v);
    v.iter_mut().for_each(|x| *x /= n);
    v
}

/// Rotates the supporting hyperplane with normal `n` through `pivot` toward `v`
/// until it meets another point. Points with `b ≥ −eps` are treated as lying on
/// the current hyperplane and ignored.
fn wrap(points: &[Vec<f64>], pivot: &[f64], n: &[f64], v: &[f64], eps: f64) -> Option<Vec<f64>> {
    let mut best: Option<f64> = None;
    for p in points {
        let w = sub(p, pivot);
        let a = dot(&w, v);
        let b = dot(&w, n);
        if b >= -eps {
            continue;
        }
        let phi = atan2(-b, a);
        if best.is_none_or(|bp| phi < bp) {
            best = Some(phi);
        }
    }
    let phi = best?;
    let (s, c) = (sin(phi), cos(phi));
    Some(normalized(n.iter().zip(v).map(|(x, y)| c * x + s * y).collect()))
}

fn initial_facet(points: &[Vec<f64>], eps: f64) -> Option<Facet> {
    let d = points[0].len();
    let mut n = unit(d, 0);
    let (mut offset, mut verts) = support(points, &n, eps);
    loop {
        let basis = affine_basis(points, &verts, eps);
        if basis.len() + 1 >= d {
            return Some(Facet {
                normal: n,
                offset,
                vertices: verts,
            });
        }
        let mut span = basis.clone();
        span.push(n.clone());
        let v = complement(d, &span).swap_remove(0);
        n = wrap(points, &points[verts[0]], &n, &v, eps)?;
        let (o, vs) = support(points, &n, eps);
        if vs.len() <= verts.len() {
            return None;
        }
        offset = o;
        verts = vs;
    }
}

fn same_facet(a: &Facet, b: &Facet, eps: f64) -> bool {
    a.vertices == b.vertices || (dot(&a.normal, &b.normal) > 1.0 - 1e-9 && (a.offset - b.offset).abs() <= eps)
}

/// Facets of the hull of `points`, which must affinely span their ambient space.
///
/// `eps` is an absolute distance tolerance in the coordinates of `points`.
/// Returns `None` when the points are not full-dimensional.
pub fn facets(points: &[Vec<f64>], eps: f64) -> Option<Vec<Facet>> {
    if points.is_empty() {
        return None;
    }
    let d = points[0].len();
    if d == 0 {
        return None;
    }
    if d == 1 {
        let lo = points.iter().map(|p| p[0]).fold(f64::INFINITY, f64::min);
        let hi = points.iter().map(|p| p[0]).fold(f64::NEG_INFINITY, f64::max);
        if hi - lo <= eps {
            return None;
        }
        let low: Vec<usize> = (0..points.len()).filter(|&i| points[i][0] <= lo + eps).collect();
        let high: Vec<usize> = (0..points.len()).filter(|&i| points[i][0] >= hi - eps).collect();
        return Some(alloc::vec![
            Facet {
                normal: alloc::vec![-1.0],
                offset: -lo,
                vertices: low,
            },
            Facet {
                normal: alloc::vec![1.0],
                offset: hi,
                vertices: high,
            },
        ]);
    }

    let all: Vec<usize> = (0..points.len()).collect();
    if affine_basis(points, &all, eps).len() < d {
        return None;
    }
    let first = initial_facet(points, eps)?;
    let mut found: Vec<Facet> = Vec::new();
    let mut queue = VecDeque::new();
    queue.push_back(first.clone());
    found.push(first);

    while let Some(f) = queue.pop_front() {
        let frame = complement(d, core::slice::from_ref(&f.normal));
        let origin = &points[f.vertices[0]];
        let local: Vec<Vec<f64>> = f
            .vertices
            .iter()
            .map(|&i| {
                let w = sub(&points[i], origin);
                frame.iter().map(|e| dot(&w, e)).collect()
            })
            .collect();
        let ridges = facets(&local, eps)?;
        for r in ridges {
            let mut v = alloc::vec![0.0; d];
            for (k, e) in frame.iter().enumerate() {
                v.iter_mut().zip(e).for_each(|(x, y)| *x += r.normal[k] * y);
            }
            let pivot = &points[f.vertices[r.vertices[0]]];
            let Some(n) = wrap(points, pivot, &f.normal, &v, eps) else {
                continue;
            };
            let (offset, vertices) = support(points, &n, eps);
            let cand = Facet {
                normal: n,
                offset,
                vertices,
            };
            if !found.iter().any(|g| same_facet(g, &cand, eps)) {
                found.push(cand.clone());
                queue.push_back(cand);
            }
        }
    }
    Some(found)
}
