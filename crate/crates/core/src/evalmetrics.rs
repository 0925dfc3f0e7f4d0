//! Depth losses with analytic gradients, weighted total loss, image
//! PSNR/SSIM, and cross-view overlap PSNR over surface patches.

use alloc::format;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::gaussians::{GaussianPrimitive, PanoImage};
use crate::math::{exp, ln, log10, round, sqrt, Vec3};
use crate::panocam::project_point;
use crate::par;
use crate::scenegraph::{PanoPose, ShellScene};

/// Stabilizer inside the scale-invariant term.
pub const DEPTH_EPS: f64 = 1e-6;
/// Reported PSNR when two images agree exactly.
pub const PSNR_CAP: f64 = 99.0;
const SI_LAMBDA: f64 = 0.85;
const SI_SCALE: f64 = 0.1;

#[derive(Clone, Debug, PartialEq)]
pub struct DepthLoss {
    pub log_l1: f64,
    pub scale_invariant: f64,
    /// Gradient of `log_l1` with respect to each predicted depth.
    pub grad_log_l1: Vec<f64>,
    /// Gradient of `scale_invariant` with respect to each predicted depth.
    pub grad_scale_invariant: Vec<f64>,
}

/// Log-depth L1 and scale-invariant log losses between a predicted and a
/// reference depth map.
pub fn depth_loss(pred: &[f64], target: &[f64]) -> Result<DepthLoss> {
    if pred.len() != target.len() {
        return Err(Error::ShapeMismatch(format!("{} predicted vs {} reference depths", pred.len(), target.len())));
    }
    if pred.is_empty() {
        return Err(Error::InvalidArgument("depth maps are empty".into()));
    }
    if let Some(bad) = pred.iter().chain(target).find(|&&d| !(d > 0.0) || !d.is_finite()) {
        return Err(Error::InvalidArgument(format!("depth {bad} is not positive")));
    }
    let n = pred.len() as f64;

    let mut log_l1 = 0.0;
    let mut grad_log_l1 = Vec::with_capacity(pred.len());
    let mut delta = Vec::with_capacity(pred.len());
    for (&p, &t) in pred.iter().zip(target) {
        let r = ln(p + 1.0) - ln(t + 1.0);
        log_l1 += r.abs();
        let s = if r > 0.0 {
            1.0
        } else if r < 0.0 {
            -1.0
        } else {
            0.0
        };
        grad_log_l1.push(s / (n * (p + 1.0)));
        delta.push(ln(p + DEPTH_EPS) - ln(t + DEPTH_EPS));
    }
    log_l1 /= n;

    let mean = delta.iter().sum::<f64>() / n;
    let mean_sq = delta.iter().map(|d| d * d).sum::<f64>() / n;
    let inner = mean_sq - SI_LAMBDA * mean * mean + DEPTH_EPS;
    let root = sqrt(inner);
    let scale_invariant = SI_SCALE * root;
    let outer = SI_SCALE / (2.0 * root);
    let grad_scale_invariant = delta
        .iter()
        .zip(pred)
        .map(|(&d, &p)| outer * (2.0 * d - 2.0 * SI_LAMBDA * mean) / (n * (p + DEPTH_EPS)))
        .collect();

    Ok(DepthLoss { log_l1, scale_invariant, grad_log_l1, grad_scale_invariant })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LossWeights {
    pub l2: f64,
    pub perceptual: f64,
    pub opacity: f64,
    pub depth: f64,
}

impl Default for LossWeights {
    fn default() -> Self {
        LossWeights { l2: 1.0, perceptual: 0.1, opacity: 0.05, depth: 0.5 }
    }
}

/// Weighted training objective with the default weights.
pub fn total_loss(l2: f64, perceptual: f64, opacity: f64, depth: f64) -> f64 {
    total_loss_weighted(l2, perceptual, opacity, depth, &LossWeights::default())
}

/// Terms are summed from the smallest default weight up, so unit inputs give
/// the weight sum rounded once.
pub fn total_loss_weighted(l2: f64, perceptual: f64, opacity: f64, depth: f64, w: &LossWeights) -> f64 {
    w.opacity * opacity + w.perceptual * perceptual + w.depth * depth + w.l2 * l2
}

/// Mean opacity of a Gaussian set; zero for an empty set.
pub fn opacity_regularizer(gaussians: &[GaussianPrimitive]) -> f64 {
    if gaussians.is_empty() {
        return 0.0;
    }
    gaussians.iter().map(|g| g.alpha).sum::<f64>() / gaussians.len() as f64
}

/// PSNR for 8-bit data given a per-channel mean squared error.
pub fn psnr_from_mse(mse: f64) -> f64 {
    if mse <= 0.0 {
        PSNR_CAP
    } else {
        (10.0 * log10(255.0 * 255.0 / mse)).min(PSNR_CAP)
    }
}

fn same_shape(a: &PanoImage, b: &PanoImage) -> Result<()> {
    if a.width != b.width || a.height != b.height {
        return Err(Error::ShapeMismatch(format!(
            "{}x{} vs {}x{}",
            a.width, a.height, b.width, b.height
        )));
    }
    Ok(())
}

pub fn psnr(a: &PanoImage, b: &PanoImage) -> Result<f64> {
    same_shape(a, b)?;
    let mut sum = 0.0;
    for (x, y) in a.color.iter().zip(&b.color) {
        for k in 0..3 {
            let d = f64::from(x[k]) - f64::from(y[k]);
            sum += d * d;
        }
    }
    Ok(psnr_from_mse(sum / (3 * a.color.len()) as f64))
}

const SSIM_WINDOW: usize = 11;
const SSIM_SIGMA: f64 = 1.5;

fn gaussian_kernel() -> [f64; SSIM_WINDOW] {
    let mut k = [0.0; SSIM_WINDOW];
    let c = (SSIM_WINDOW / 2) as f64;
    for (i, v) in k.iter_mut().enumerate() {
        let d = i as f64 - c;
        *v = exp(-d * d / (2.0 * SSIM_SIGMA * SSIM_SIGMA));
    }
    let s: f64 = k.iter().sum();
    k.map(|v| v / s)
}

/// Separable valid-region filter.
fn filter(src: &[f64], w: usize, h: usize, k: &[f64; SSIM_WINDOW]) -> (Vec<f64>, usize, usize) {
    let (ow, oh) = (w + 1 - SSIM_WINDOW, h + 1 - SSIM_WINDOW);
    let mut tmp = alloc::vec![0.0; ow * h];
    for y in 0..h {
        for x in 0..ow {
            tmp[y * ow + x] = (0..SSIM_WINDOW).map(|i| k[i] * src[y * w + x + i]).sum();
        }
    }
    let mut out = alloc::vec![0.0; ow * oh];
    for y in 0..oh {
        for x in 0..ow {
            out[y * ow + x] = (0..SSIM_WINDOW).map(|i| k[i] * tmp[(y + i) * ow + x]).sum();
        }
    }
    (out, ow, oh)
}

/// Mean structural similarity with an 11×11 Gaussian window (σ = 1.5),
/// averaged over the three channels.
pub fn ssim(a: &PanoImage, b: &PanoImage) -> Result<f64> {
    same_shape(a, b)?;
    let (w, h) = (a.width, a.height);
    if w < SSIM_WINDOW || h < SSIM_WINDOW {
        return Err(Error::InvalidArgument(format!("SSIM needs at least {SSIM_WINDOW}x{SSIM_WINDOW} pixels")));
    }
    let k = gaussian_kernel();
    let c1 = (0.01 * 255.0) * (0.01 * 255.0);
    let c2 = (0.03 * 255.0) * (0.03 * 255.0);
    let mut total = 0.0;
    for ch in 0..3 {
        let x: Vec<f64> = a.color.iter().map(|c| f64::from(c[ch])).collect();
        let y: Vec<f64> = b.color.iter().map(|c| f64::from(c[ch])).collect();
        let xx: Vec<f64> = x.iter().map(|v| v * v).collect();
        let yy: Vec<f64> = y.iter().map(|v| v * v).collect();
        let xy: Vec<f64> = x.iter().zip(&y).map(|(p, q)| p * q).collect();
        let (mx, ..) = filter(&x, w, h, &k);
        let (my, ..) = filter(&y, w, h, &k);
        let (sxx, ..) = filter(&xx, w, h, &k);
        let (syy, ..) = filter(&yy, w, h, &k);
        let (sxy, ..) = filter(&xy, w, h, &k);
        let mut acc = 0.0;
        for i in 0..mx.len() {
            let (ux, uy) = (mx[i], my[i]);
            let vx = sxx[i] - ux * ux;
            let vy = syy[i] - uy * uy;
            let cov = sxy[i] - ux * uy;
            acc += ((2.0 * ux * uy + c1) * (2.0 * cov + c2)) / ((ux * ux + uy * uy + c1) * (vx + vy + c2));
        }
        total += acc / mx.len() as f64;
    }
    Ok(total / 3.0)
}

pub fn psnr_ssim(a: &PanoImage, b: &PanoImage) -> Result<(f64, f64)> {
    Ok((psnr(a, b)?, ssim(a, b)?))
}

/// Samples per region side.
pub const REGION_SAMPLES: usize = 100;
pub const REGION_STEP: f64 = 0.01;
/// Maximum distance between a sample and the shell hit toward it.
pub const COVISIBILITY_EPS: f64 = 0.02;

/// Square surface patch sampled on a regular grid.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EvalRegion {
    pub corner: Vec3,
    pub e_u: Vec3,
    pub e_v: Vec3,
}

impl EvalRegion {
    pub fn new(corner: Vec3, e_u: Vec3, e_v: Vec3) -> Result<Self> {
        let unit = |v: Vec3| (v.norm() - 1.0).abs() <= 1e-9;
        if !unit(e_u) || !unit(e_v) || e_u.dot(e_v).abs() > 1e-9 {
            return Err(Error::InvalidArgument("region axes must be orthonormal".into()));
        }
        Ok(EvalRegion { corner, e_u, e_v })
    }

    pub fn extent(&self) -> f64 {
        REGION_SAMPLES as f64 * REGION_STEP
    }

    /// Sample points at cell centers, `REGION_SAMPLES²` of them.
    pub fn samples(&self) -> Vec<Vec3> {
        let mut out = Vec::with_capacity(REGION_SAMPLES * REGION_SAMPLES);
        for j in 0..REGION_SAMPLES {
            for i in 0..REGION_SAMPLES {
                let (u, v) = ((i as f64 + 0.5) * REGION_STEP, (j as f64 + 0.5) * REGION_STEP);
                out.push(self.corner + self.e_u * u + self.e_v * v);
            }
        }
        out
    }

    /// Whether the patch lies in the plane of some shell triangle.
    pub fn on_shell(&self, shell: &ShellScene) -> bool {
        let s = self.extent();
        let corners = [self.corner, self.corner + self.e_u * s, self.corner + self.e_v * s];
        shell.triangles.iter().any(|t| {
            let p0 = t.vertices[0];
            corners.iter().all(|&c| (c - p0).dot(t.normal).abs() <= 1e-6)
        })
    }
}

/// One patch per room on the longest solid stretch of wall, centered at
/// half the wall height, with axes along the wall and up.
pub fn auto_regions(shell: &ShellScene) -> Vec<EvalRegion> {
    let size = REGION_SAMPLES as f64 * REGION_STEP;
    let mut out = Vec::new();
    for room in &shell.rooms {
        let poly = &room.interior;
        let n = poly.len();
        let mut best: Option<(f64, Vec3, Vec3)> = None;
        for i in 0..n {
            let (a, b) = (poly[i], poly[(i + 1) % n]);
            let (ca, cb) = (room.polygon[i], room.polygon[(i + 1) % n]);
            let len = crate::scenegraph::geom2d::dist(a, b);
            if len <= size {
                continue;
            }
            let t = [(b[0] - a[0]) / len, (b[1] - a[1]) / len];
            // doorway spans on this edge, in edge coordinates with jamb margin
            let mut blocked: Vec<(f64, f64)> = shell
                .doorways
                .iter()
                .filter(|d| d.touches(room.id))
                .filter(|d| {
                    d.segment.iter().all(|p| crate::scenegraph::geom2d::point_segment_distance(*p, ca, cb) <= 1e-6)
                })
                .map(|d| {
                    let s = d.segment.map(|p| (p[0] - a[0]) * t[0] + (p[1] - a[1]) * t[1]);
                    let m = shell.wall_thickness;
                    (s[0].min(s[1]) - m, s[0].max(s[1]) + m)
                })
                .collect();
            blocked.sort_by(|x, y| x.0.total_cmp(&y.0));
            let mut free = Vec::new();
            let mut cursor = 0.0;
            for (lo, hi) in blocked {
                if lo > cursor {
                    free.push((cursor, lo));
                }
                cursor = cursor.max(hi);
            }
            if cursor < len {
                free.push((cursor, len));
            }
            for (lo, hi) in free {
                let span = hi - lo;
                if span > size && best.is_none_or(|b| span > b.0 + 1e-9) {
                    let mid = (lo + hi) / 2.0;
                    let center = Vec3::new(a[0] + t[0] * mid, a[1] + t[1] * mid, shell.wall_height / 2.0);
                    best = Some((span, center, Vec3::new(t[0], t[1], 0.0)));
                }
            }
        }
        if let Some((_, center, e_u)) = best {
            let corner = center - e_u * (size / 2.0) - Vec3::Z * (size / 2.0);
            out.push(EvalRegion { corner, e_u, e_v: Vec3::Z });
        }
    }
    out
}

#[derive(Clone, Debug, PartialEq)]
pub struct OverlapEntry {
    /// Index into the evaluated panorama list.
    pub node: usize,
    pub region: usize,
    pub valid_samples: usize,
    pub mse: f64,
    pub psnr: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct OverlapReport {
    pub base: usize,
    pub entries: Vec<OverlapEntry>,
    /// `(node, region)` pairs dropped for lack of co-visible samples.
    pub excluded: Vec<(usize, usize)>,
    /// Unweighted mean PSNR over `entries`.
    pub mean_psnr: f64,
}

struct Projected {
    x: f64,
    y: f64,
    visible: bool,
}

fn project_samples(shell: &ShellScene, img: &PanoImage, pose: &PanoPose, pts: &[Vec3]) -> Vec<Projected> {
    pts.iter()
        .map(|&p| {
            let Ok((x, y, depth)) = project_point(pose, p, img.width, img.height) else {
                return Projected { x: 0.0, y: 0.0, visible: false };
            };
            let dir = (p - pose.position) * (1.0 / depth);
            let hit_ok = shell
                .cast(pose.position, dir)
                .is_some_and(|h| (pose.position + dir * h.distance).distance(p) <= COVISIBILITY_EPS);
            let xi = (round(x) as i64).rem_euclid(img.width as i64) as usize;
            let yi = (round(y) as i64).clamp(0, img.height as i64 - 1) as usize;
            let visible = hit_ok && img.valid[yi * img.width + xi];
            Projected { x, y, visible }
        })
        .collect()
}

/// Cross-view color agreement on surface patches: every panorama other than
/// `base` is compared against `base` at the samples both see.
pub fn overlap_psnr(
    shell: &ShellScene,
    panos: &[(&PanoImage, PanoPose)],
    regions: &[EvalRegion],
    base: usize,
) -> Result<OverlapReport> {
    if panos.len() < 2 {
        return Err(Error::InvalidArgument("overlap PSNR needs at least two panoramas".into()));
    }
    if base >= panos.len() {
        return Err(Error::InvalidArgument(format!("base index {base} out of range")));
    }
    let per_region: Vec<Vec<(usize, usize, f64)>> = par::map(regions, |region| {
        let pts = region.samples();
        let (bimg, bpose) = panos[base];
        let bproj = project_samples(shell, bimg, &bpose, &pts);
        panos
            .iter()
            .enumerate()
            .filter(|(t, _)| *t != base)
            .map(|(t, (img, pose))| {
                let proj = project_samples(shell, img, pose, &pts);
                let mut sum = 0.0;
                let mut count = 0;
                for (pb, pt) in bproj.iter().zip(&proj) {
                    if !(pb.visible && pt.visible) {
                        continue;
                    }
                    let cb = bimg.sample_bilinear(pb.x, pb.y);
                    let ct = img.sample_bilinear(pt.x, pt.y);
                    for k in 0..3 {
                        sum += (cb[k] - ct[k]) * (cb[k] - ct[k]);
                    }
                    count += 1;
                }
                (t, count, if count > 0 { sum / (3 * count) as f64 } else { 0.0 })
            })
            .collect()
    });
    let mut entries = Vec::new();
    let mut excluded = Vec::new();
    for (r, rows) in per_region.into_iter().enumerate() {
        for (t, count, mse) in rows {
            if count == 0 {
                excluded.push((t, r));
            } else {
                entries.push(OverlapEntry { node: t, region: r, valid_samples: count, mse, psnr: psnr_from_mse(mse) });
            }
        }
    }
    if entries.is_empty() {
        return Err(Error::NoCovisibleSamples);
    }
    entries.sort_by_key(|e| (e.node, e.region));
    excluded.sort_unstable();
    let mean_psnr = entries.iter().map(|e| e.psnr).sum::<f64>() / entries.len() as f64;
    Ok(OverlapReport { base, entries, excluded, mean_psnr })
}
