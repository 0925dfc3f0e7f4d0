//! Progressive Gaussian cache: merge compatibility, pairwise fusion, local
//! pruning, and the shell-depth gate that hides memory from other rooms.

use alloc::sync::Arc;
use alloc::vec::Vec;

use hashbrown::{HashMap, HashSet};

use crate::error::{Error, Result};
use crate::gaussians::{GaussianPrimitive, PanoImage, INVALID_COLOR};
use crate::math::{floor, Quat, Vec3};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CacheParams {
    /// Center distance threshold as a multiple of the smaller mean scale.
    pub tau_mu: f64,
    /// Minimum cosine between supporting view directions.
    pub tau_v: f64,
    /// Depth slack of the shell gate, meters.
    pub tau_d: f64,
    pub alpha_min: f64,
    /// Spatial hash cell edge, meters.
    pub cell: f64,
}

impl Default for CacheParams {
    fn default() -> Self {
        CacheParams { tau_mu: 1.0, tau_v: 0.5, tau_d: 0.10, alpha_min: 0.05, cell: 0.25 }
    }
}

impl CacheParams {
    pub fn validate(&self) -> Result<()> {
        let ok = self.tau_mu > 0.0
            && self.tau_v > -1.0
            && self.tau_v < 1.0
            && self.tau_d > 0.0
            && self.alpha_min > 0.0
            && self.alpha_min <= 1.0
            && self.cell > 0.0
            && self.cell.is_finite();
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidArgument("cache thresholds out of range".into()))
        }
    }
}

/// Same room, centers closer than `tau_mu` times the smaller mean scale,
/// and supporting directions within the `tau_v` cosine.
pub fn compatible(a: &GaussianPrimitive, b: &GaussianPrimitive, tau_mu: f64, tau_v: f64) -> bool {
    a.room == b.room
        && a.mu.distance(b.mu) < tau_mu * a.mean_scale().min(b.mean_scale())
        && a.src_dir.dot(b.src_dir) > tau_v
}

/// Opacity-weighted merge of two primitives. Geometry and base color are
/// blended; the view-dependent band and provenance come from the more opaque
/// one, `a` on ties.
pub fn fuse_pair(a: &GaussianPrimitive, b: &GaussianPrimitive, tau_mu: f64, tau_v: f64) -> Result<GaussianPrimitive> {
    if !compatible(a, b, tau_mu, tau_v) {
        return Err(Error::IncompatiblePair);
    }
    Ok(fuse_unchecked(a, b))
}

fn fuse_unchecked(a: &GaussianPrimitive, b: &GaussianPrimitive) -> GaussianPrimitive {
    let (wa, wb) = (a.alpha, b.alpha);
    let total = wa + wb;
    let (wa, wb) = if total > 0.0 { (wa / total, wb / total) } else { (0.5, 0.5) };
    let qb = if a.q.dot(b.q) < 0.0 { b.q.scaled(-1.0) } else { b.q };
    let q = a.q.scaled(wa).add(qb.scaled(wb));
    let q = if q.norm() > 1e-12 { q.normalized() } else { a.q };
    let dom = if b.alpha > a.alpha { b } else { a };
    let mut sh = dom.sh;
    for c in 0..3 {
        sh.dc[c] = wa * a.sh.dc[c] + wb * b.sh.dc[c];
    }
    GaussianPrimitive {
        mu: a.mu * wa + b.mu * wb,
        q,
        sigma: a.sigma * wa + b.sigma * wb,
        alpha: a.alpha.max(b.alpha),
        sh,
        src_node: dom.src_node,
        src_dir: dom.src_dir,
        room: dom.room,
    }
}

/// Counters for one [`GaussianCache::update`].
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct UpdateStats {
    pub added: usize,
    pub merged: usize,
    pub pruned: usize,
    /// Pairwise compatibility evaluations performed.
    pub candidate_tests: usize,
    pub total: usize,
}

type Cell = [i64; 3];

#[derive(Clone, Debug, Default)]
pub struct GaussianCache {
    primitives: Arc<Vec<GaussianPrimitive>>,
    grid: HashMap<Cell, Vec<u32>>,
    cell: f64,
}

impl GaussianCache {
    pub fn new(cell: f64) -> Self {
        GaussianCache { primitives: Arc::new(Vec::new()), grid: HashMap::new(), cell }
    }

    pub fn from_primitives(primitives: Vec<GaussianPrimitive>, cell: f64) -> Self {
        let mut c = GaussianCache { primitives: Arc::new(primitives), grid: HashMap::new(), cell };
        c.rebuild_grid();
        c
    }

    pub fn len(&self) -> usize {
        self.primitives.len()
    }

    pub fn is_empty(&self) -> bool {
        self.primitives.is_empty()
    }

    pub fn primitives(&self) -> &[GaussianPrimitive] {
        &self.primitives
    }

    /// Immutable view that stays valid across later updates.
    pub fn snapshot(&self) -> Arc<Vec<GaussianPrimitive>> {
        Arc::clone(&self.primitives)
    }

    pub fn cell_size(&self) -> f64 {
        self.cell
    }

    /// Number of grid entries; equals `len()` when the index is consistent.
    pub fn indexed_count(&self) -> usize {
        self.grid.values().map(Vec::len).sum()
    }

    fn cell_of(&self, p: Vec3) -> Cell {
        [floor(p.x / self.cell) as i64, floor(p.y / self.cell) as i64, floor(p.z / self.cell) as i64]
    }

    fn rebuild_grid(&mut self) {
        let mut grid: HashMap<Cell, Vec<u32>> = HashMap::new();
        for (i, g) in self.primitives.iter().enumerate() {
            grid.entry(self.cell_of(g.mu)).or_default().push(i as u32);
        }
        self.grid = grid;
    }

    fn unindex(&mut self, cell: Cell, idx: u32) {
        if let Some(v) = self.grid.get_mut(&cell) {
            v.retain(|&i| i != idx);
            if v.is_empty() {
                self.grid.remove(&cell);
            }
        }
    }

    /// Fuses `delta` into the cache and prunes transparent primitives in the
    /// cells it touched. Each delta primitive is matched only against
    /// primitives that existed before this call.
    pub fn update(&mut self, delta: &[GaussianPrimitive], params: &CacheParams) -> UpdateStats {
        let mut stats = UpdateStats::default();
        let before = self.primitives.len() as u32;
        let mut touched: HashSet<Cell> = HashSet::new();
        let mut prims = core::mem::take(Arc::make_mut(&mut self.primitives));

        for d in delta {
            let reach = params.tau_mu * d.mean_scale();
            let lo = self.cell_of(d.mu - Vec3::splat(reach));
            let hi = self.cell_of(d.mu + Vec3::splat(reach));
            let mut best: Option<(f64, u32)> = None;
            for cx in lo[0]..=hi[0] {
                for cy in lo[1]..=hi[1] {
                    for cz in lo[2]..=hi[2] {
                        let Some(list) = self.grid.get(&[cx, cy, cz]) else { continue };
                        for &i in list {
                            if i >= before {
                                continue;
                            }
                            stats.candidate_tests += 1;
                            let p = &prims[i as usize];
                            if !compatible(p, d, params.tau_mu, params.tau_v) {
                                continue;
                            }
                            let dist = p.mu.distance(d.mu);
                            if best.is_none_or(|(bd, bi)| dist < bd || (dist == bd && i < bi)) {
                                best = Some((dist, i));
                            }
                        }
                    }
                }
            }
            match best {
                Some((_, i)) => {
                    let old_cell = self.cell_of(prims[i as usize].mu);
                    let fused = fuse_unchecked(&prims[i as usize], d);
                    let new_cell = self.cell_of(fused.mu);
                    if new_cell != old_cell {
                        self.unindex(old_cell, i);
                        self.grid.entry(new_cell).or_default().push(i);
                    }
                    prims[i as usize] = fused;
                    touched.insert(new_cell);
                    stats.merged += 1;
                }
                None => {
                    let c = self.cell_of(d.mu);
                    self.grid.entry(c).or_default().push(prims.len() as u32);
                    prims.push(d.clone());
                    touched.insert(c);
                    stats.added += 1;
                }
            }
        }

        let keep_len = prims.len();
        let mut doomed = alloc::vec![false; keep_len];
        for c in &touched {
            if let Some(list) = self.grid.get(c) {
                for &i in list {
                    if prims[i as usize].alpha < params.alpha_min {
                        doomed[i as usize] = true;
                    }
                }
            }
        }
        stats.pruned = doomed.iter().filter(|&&d| d).count();
        if stats.pruned > 0 {
            let mut k = 0;
            prims.retain(|_| {
                k += 1;
                !doomed[k - 1]
            });
        }
        self.primitives = Arc::new(prims);
        if stats.pruned > 0 {
            self.rebuild_grid();
        }
        stats.total = self.primitives.len();
        stats
    }
}

/// Hides memory pixels whose cache depth lies behind the first shell surface
/// by more than `tau_d`, and normalizes all invalid pixels to the marker
/// color. Shell depth of zero means no surface and never gates.
pub fn filter_memory(memory: &PanoImage, shell_depth: &[f64], tau_d: f64) -> Result<PanoImage> {
    let n = memory.width * memory.height;
    if shell_depth.len() != n {
        return Err(Error::ShapeMismatch("shell depth does not match memory resolution".into()));
    }
    let depth = memory.depth.as_ref().ok_or(Error::MissingDepth)?;
    let mut out = memory.clone();
    for i in 0..n {
        let ds = shell_depth[i];
        let behind = ds > 0.0 && f64::from(depth[i]) > ds + tau_d;
        if !memory.valid[i] || behind {
            out.valid[i] = false;
            out.color[i] = INVALID_COLOR;
        }
    }
    Ok(out)
}

/// Rigid transform applied to a whole delta before fusion.
pub fn align(delta: &[GaussianPrimitive], rot: Quat, trans: Vec3) -> Vec<GaussianPrimitive> {
    delta.iter().map(|g| g.transformed(rot, trans)).collect()
}
