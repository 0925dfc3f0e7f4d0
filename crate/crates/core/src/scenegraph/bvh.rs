//! Bounding-volume hierarchy over shell triangles with a Möller–Trumbore
//! intersector.

use alloc::vec::Vec;

use crate::math::Vec3;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Aabb {
    pub min: Vec3,
    pub max: Vec3,
}

impl Aabb {
    pub const EMPTY: Aabb = Aabb {
        min: Vec3::new(f64::INFINITY, f64::INFINITY, f64::INFINITY),
        max: Vec3::new(f64::NEG_INFINITY, f64::NEG_INFINITY, f64::NEG_INFINITY),
    };

    pub fn grow(&mut self, p: Vec3) {
        self.min = Vec3::new(self.min.x.min(p.x), self.min.y.min(p.y), self.min.z.min(p.z));
        self.max = Vec3::new(self.max.x.max(p.x), self.max.y.max(p.y), self.max.z.max(p.z));
    }

    pub fn union(&self, o: &Aabb) -> Aabb {
        let mut r = *self;
        r.grow(o.min);
        r.grow(o.max);
        r
    }

    pub fn contains(&self, p: Vec3) -> bool {
        p.x >= self.min.x
            && p.y >= self.min.y
            && p.z >= self.min.z
            && p.x <= self.max.x
            && p.y <= self.max.y
            && p.z <= self.max.z
    }

    /// Slab test; returns the entry distance when the ray hits before `t_max`.
    fn hit(&self, o: Vec3, inv: Vec3, t_max: f64) -> bool {
        let mut t0: f64 = 0.0;
        let mut t1 = t_max;
        for k in 0..3 {
            let (lo, hi) = ((self.min[k] - o[k]) * inv[k], (self.max[k] - o[k]) * inv[k]);
            let (lo, hi) = if lo <= hi { (lo, hi) } else { (hi, lo) };
            // NaN from 0 * inf means the ray runs inside the slab plane.
            if !lo.is_nan() {
                t0 = t0.max(lo);
            }
            if !hi.is_nan() {
                t1 = t1.min(hi);
            }
            if t0 > t1 {
                return false;
            }
        }
        true
    }
}

/// Ray/triangle distance along a unit or non-unit direction, `None` on miss
/// or when the hit is behind the origin.
pub fn intersect_triangle(o: Vec3, d: Vec3, v: &[Vec3; 3]) -> Option<f64> {
    const EPS: f64 = 1e-12;
    let e1 = v[1] - v[0];
    let e2 = v[2] - v[0];
    let p = d.cross(e2);
    let det = e1.dot(p);
    if det.abs() < EPS {
        return None;
    }
    let inv = 1.0 / det;
    let s = o - v[0];
    let u = s.dot(p) * inv;
    if !(-1e-12..=1.0 + 1e-12).contains(&u) {
        return None;
    }
    let q = s.cross(e1);
    let w = d.dot(q) * inv;
    if w < -1e-12 || u + w > 1.0 + 1e-12 {
        return None;
    }
    let t = e2.dot(q) * inv;
    (t > 1e-9).then_some(t)
}

#[derive(Clone, Debug)]
enum Node {
    Leaf { bounds: Aabb, start: usize, end: usize },
    Inner { bounds: Aabb, left: usize, right: usize },
}

impl Node {
    fn bounds(&self) -> &Aabb {
        match self {
            Node::Leaf { bounds, .. } | Node::Inner { bounds, .. } => bounds,
        }
    }
}

#[derive(Clone, Debug, Default)]
pub struct Bvh {
    nodes: Vec<Node>,
    order: Vec<usize>,
}

const LEAF_SIZE: usize = 4;

impl Bvh {
    pub fn build(tris: &[[Vec3; 3]]) -> Self {
        let mut bvh = Bvh { nodes: Vec::new(), order: (0..tris.len()).collect() };
        if !tris.is_empty() {
            let centroids: Vec<Vec3> =
                tris.iter().map(|t| (t[0] + t[1] + t[2]) / 3.0).collect();
            bvh.build_node(tris, &centroids, 0, tris.len());
        }
        bvh
    }

    fn build_node(&mut self, tris: &[[Vec3; 3]], cent: &[Vec3], start: usize, end: usize) -> usize {
        let mut bounds = Aabb::EMPTY;
        let mut cb = Aabb::EMPTY;
        for &i in &self.order[start..end] {
            for v in &tris[i] {
                bounds.grow(*v);
            }
            cb.grow(cent[i]);
        }
        let id = self.nodes.len();
        self.nodes.push(Node::Leaf { bounds, start, end });
        if end - start <= LEAF_SIZE {
            return id;
        }
        let ext = cb.max - cb.min;
        let axis = if ext.x >= ext.y && ext.x >= ext.z {
            0
        } else if ext.y >= ext.z {
            1
        } else {
            2
        };
        self.order[start..end].sort_by(|&a, &b| {
            cent[a][axis].total_cmp(&cent[b][axis]).then(a.cmp(&b))
        });
        let mid = (start + end) / 2;
        let left = self.build_node(tris, cent, start, mid);
        let right = self.build_node(tris, cent, mid, end);
        self.nodes[id] = Node::Inner { bounds, left, right };
        id
    }

    /// Nearest triangle accepted by `filter`, as `(t, triangle index)`.
    /// Equal distances resolve to the lowest triangle index.
    pub fn closest<F: Fn(usize) -> bool>(
        &self,
        tris: &[[Vec3; 3]],
        o: Vec3,
        d: Vec3,
        filter: F,
    ) -> Option<(f64, usize)> {
        if self.nodes.is_empty() {
            return None;
        }
        let inv = Vec3::new(1.0 / d.x, 1.0 / d.y, 1.0 / d.z);
        let mut best: Option<(f64, usize)> = None;
        let mut stack = Vec::with_capacity(32);
        stack.push(0usize);
        while let Some(n) = stack.pop() {
            let node = &self.nodes[n];
            let t_max = best.map_or(f64::INFINITY, |b| b.0);
            if !node.bounds().hit(o, inv, t_max) {
                continue;
            }
            match *node {
                Node::Leaf { start, end, .. } => {
                    for &i in &self.order[start..end] {
                        if !filter(i) {
                            continue;
                        }
                        if let Some(t) = intersect_triangle(o, d, &tris[i]) {
                            let better = match best {
                                None => true,
                                Some((bt, bi)) => t < bt || (t == bt && i < bi),
                            };
                            if better {
                                best = Some((t, i));
                            }
                        }
                    }
                }
                Node::Inner { left, right, .. } => {
                    stack.push(right);
                    stack.push(left);
                }
            }
        }
        best
    }
}
