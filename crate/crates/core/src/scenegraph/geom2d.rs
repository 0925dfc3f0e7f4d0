//! Planar polygon helpers used by floorplan validation and room labelling.

use alloc::vec::Vec;

use crate::math::sqrt;

pub type P2 = [f64; 2];

pub(crate) const EPS: f64 = 1e-9;

#[inline]
pub(crate) fn sub(a: P2, b: P2) -> P2 {
    [a[0] - b[0], a[1] - b[1]]
}

#[inline]
pub(crate) fn cross(a: P2, b: P2) -> f64 {
    a[0] * b[1] - a[1] * b[0]
}

#[inline]
pub(crate) fn dot(a: P2, b: P2) -> f64 {
    a[0] * b[0] + a[1] * b[1]
}

#[inline]
pub(crate) fn dist(a: P2, b: P2) -> f64 {
    let d = sub(a, b);
    sqrt(dot(d, d))
}

/// Orientation of `c` relative to the directed line `a -> b`.
#[inline]
pub(crate) fn orient(a: P2, b: P2, c: P2) -> f64 {
    cross(sub(b, a), sub(c, a))
}

pub(crate) fn signed_area(poly: &[P2]) -> f64 {
    let n = poly.len();
    (0..n).map(|i| cross(poly[i], poly[(i + 1) % n])).sum::<f64>() * 0.5
}

pub(crate) fn point_segment_distance(p: P2, a: P2, b: P2) -> f64 {
    let ab = sub(b, a);
    let len2 = dot(ab, ab);
    if len2 == 0.0 {
        return dist(p, a);
    }
    let t = (dot(sub(p, a), ab) / len2).clamp(0.0, 1.0);
    dist(p, [a[0] + ab[0] * t, a[1] + ab[1] * t])
}

pub(crate) fn on_boundary(poly: &[P2], p: P2) -> bool {
    let n = poly.len();
    (0..n).any(|i| point_segment_distance(p, poly[i], poly[(i + 1) % n]) <= EPS)
}

/// Crossing-number containment; boundary points give an unspecified answer,
/// callers test [`on_boundary`] first.
pub(crate) fn crossing_inside(poly: &[P2], p: P2) -> bool {
    let n = poly.len();
    let mut inside = false;
    let mut j = n - 1;
    for i in 0..n {
        let (a, b) = (poly[i], poly[j]);
        if (a[1] > p[1]) != (b[1] > p[1]) {
            let x = a[0] + (p[1] - a[1]) * (b[0] - a[0]) / (b[1] - a[1]);
            if p[0] < x {
                inside = !inside;
            }
        }
        j = i;
    }
    inside
}

pub(crate) fn contains_closed(poly: &[P2], p: P2) -> bool {
    on_boundary(poly, p) || crossing_inside(poly, p)
}

pub(crate) fn contains_strict(poly: &[P2], p: P2) -> bool {
    !on_boundary(poly, p) && crossing_inside(poly, p)
}

/// True when the open segments cross at a single interior point.
pub(crate) fn segments_cross(a: P2, b: P2, c: P2, d: P2) -> bool {
    let o1 = orient(a, b, c);
    let o2 = orient(a, b, d);
    let o3 = orient(c, d, a);
    let o4 = orient(c, d, b);
    o1 * o2 < -EPS * EPS && o3 * o4 < -EPS * EPS && o1.abs() > EPS && o2.abs() > EPS && o3.abs() > EPS && o4.abs() > EPS
}

/// Any contact between two closed segments.
pub(crate) fn segments_touch(a: P2, b: P2, c: P2, d: P2) -> bool {
    segments_cross(a, b, c, d)
        || point_segment_distance(a, c, d) <= EPS
        || point_segment_distance(b, c, d) <= EPS
        || point_segment_distance(c, a, b) <= EPS
        || point_segment_distance(d, a, b) <= EPS
}

pub(crate) fn is_simple(poly: &[P2]) -> bool {
    let n = poly.len();
    for i in 0..n {
        let (a, b) = (poly[i], poly[(i + 1) % n]);
        if dist(a, b) <= EPS {
            return false;
        }
        for j in (i + 1)..n {
            let adjacent = j == i + 1 || (i == 0 && j == n - 1);
            if adjacent {
                continue;
            }
            if segments_touch(a, b, poly[j], poly[(j + 1) % n]) {
                return false;
            }
        }
    }
    true
}

/// Ear-clipping triangulation of a counter-clockwise simple polygon.
/// Returns index triples into `poly`.
pub(crate) fn triangulate(poly: &[P2]) -> Vec<[usize; 3]> {
    let mut idx: Vec<usize> = (0..poly.len()).collect();
    let mut out = Vec::with_capacity(poly.len().saturating_sub(2));
    let mut guard = 0;
    while idx.len() > 3 && guard < 10 * poly.len() * poly.len() {
        guard += 1;
        let m = idx.len();
        let mut clipped = false;
        for k in 0..m {
            let (ia, ib, ic) = (idx[(k + m - 1) % m], idx[k], idx[(k + 1) % m]);
            let (a, b, c) = (poly[ia], poly[ib], poly[ic]);
            if orient(a, b, c) <= EPS {
                continue;
            }
            let blocked = idx.iter().any(|&j| {
                if j == ia || j == ib || j == ic {
                    return false;
                }
                let p = poly[j];
                orient(a, b, p) >= 0.0 && orient(b, c, p) >= 0.0 && orient(c, a, p) >= 0.0
            });
            if !blocked {
                out.push([ia, ib, ic]);
                idx.remove(k);
                clipped = true;
                break;
            }
        }
        if !clipped {
            break;
        }
    }
    if idx.len() == 3 {
        out.push([idx[0], idx[1], idx[2]]);
    }
    out
}

/// Offsets every edge of a counter-clockwise polygon inward by `d` and
/// intersects consecutive offset lines.
pub(crate) fn inset(poly: &[P2], d: f64) -> Vec<P2> {
    if d == 0.0 {
        return poly.to_vec();
    }
    let n = poly.len();
    let inward = |i: usize| {
        let e = sub(poly[(i + 1) % n], poly[i]);
        let l = sqrt(dot(e, e));
        ([e[0] / l, e[1] / l], [-e[1] / l, e[0] / l])
    };
    (0..n)
        .map(|i| {
            let prev = (i + n - 1) % n;
            let (e0, n0) = inward(prev);
            let (e1, n1) = inward(i);
            let a = [poly[prev][0] + n0[0] * d, poly[prev][1] + n0[1] * d];
            let b = [poly[i][0] + n1[0] * d, poly[i][1] + n1[1] * d];
            let den = cross(e0, e1);
            if den.abs() < 1e-12 {
                b
            } else {
                let t = cross(sub(b, a), e1) / den;
                [a[0] + e0[0] * t, a[1] + e0[1] * t]
            }
        })
        .collect()
}
