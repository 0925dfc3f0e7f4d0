//! Gaussian primitives, a CPU equirectangular splat renderer and the
//! deterministic depth-unprojection lifter.
//!
//! Each Gaussian is evaluated at the point of a pixel ray where its density
//! peaks (the Mahalanobis-closest point) and is ignored beyond three standard
//! deviations. Splats are binned into screen tiles by their angular bounding
//! cap, which is exact under that cutoff.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::math::{asin, cos, exp, floor, round, sin, Mat3, Quat, Vec3, PI, TAU};
use crate::panocam::{check_resolution, direction_to_pixel, direction_unchecked};
use crate::par;
use crate::scenegraph::{NodeId, PanoPose, RoomId};

/// Pixel footprint multiplier for lifted splat scales.
pub const K_SIGMA: f64 = 0.7;
/// Opacity given to lifted splats.
pub const LIFT_ALPHA: f64 = 0.9;
/// Accumulated opacity at which a rendered pixel counts as memory.
pub const VALID_ALPHA: f64 = 0.5;
/// Squared Mahalanobis radius beyond which a splat contributes nothing.
pub const CUTOFF_SQ: f64 = 9.0;
const TRANSMITTANCE_EPS: f64 = 1e-4;
const TILE: usize = 16;

const SH_C0: f64 = 0.282_094_791_773_878_14;
const SH_C1: f64 = 0.488_602_511_902_919_9;

/// Which code path produced a raster.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Provenance {
    Shell,
    CacheRender,
    Generated,
    External,
}

/// Degree-1 real spherical harmonics per RGB channel.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Sh1 {
    pub dc: [f64; 3],
    /// Linear band, basis order `(Y₁₋₁, Y₁₀, Y₁₁)`, each an RGB triple.
    pub linear: [[f64; 3]; 3],
}

impl Sh1 {
    /// Coefficients whose evaluation is `rgb` from every direction.
    pub fn from_rgb(rgb: [f64; 3]) -> Self {
        Sh1 { dc: rgb.map(|c| (c - 0.5) / SH_C0), linear: [[0.0; 3]; 3] }
    }

    pub fn base_color(&self) -> [f64; 3] {
        self.dc.map(|c| 0.5 + SH_C0 * c)
    }

    /// Rotates the view-dependent band with the scene.
    pub fn rotated(&self, rot: &Mat3) -> Self {
        let mut out = *self;
        for c in 0..3 {
            // −y·l₀ + z·l₁ − x·l₂ = a·v with a = (−l₂, −l₀, l₁)
            let a = Vec3::new(-self.linear[2][c], -self.linear[0][c], self.linear[1][c]);
            let r = rot.mul_vec(a);
            out.linear[0][c] = -r.y;
            out.linear[1][c] = r.z;
            out.linear[2][c] = -r.x;
        }
        out
    }
}

/// Evaluates the SH color seen along `view_dir`, clamped to `[0, 1]`.
pub fn sh_eval(sh: &Sh1, view_dir: Vec3) -> [f64; 3] {
    let (x, y, z) = (view_dir.x, view_dir.y, view_dir.z);
    let mut out = [0.0; 3];
    for (c, o) in out.iter_mut().enumerate() {
        let v = 0.5
            + SH_C0 * sh.dc[c]
            + SH_C1 * (-y * sh.linear[0][c] + z * sh.linear[1][c] - x * sh.linear[2][c]);
        *o = v.clamp(0.0, 1.0);
    }
    out
}

#[derive(Clone, Debug, PartialEq)]
pub struct GaussianPrimitive {
    pub mu: Vec3,
    pub q: Quat,
    /// Per-axis standard deviations in meters.
    pub sigma: Vec3,
    pub alpha: f64,
    pub sh: Sh1,
    pub src_node: NodeId,
    /// Unit direction from the source camera to `mu`.
    pub src_dir: Vec3,
    pub room: RoomId,
}

impl GaussianPrimitive {
    /// Mean of the three axis scales.
    pub fn mean_scale(&self) -> f64 {
        self.sigma.mean()
    }

    pub fn is_valid(&self) -> bool {
        self.sigma.min_element() > 0.0
            && (0.0..=1.0).contains(&self.alpha)
            && (self.q.norm() - 1.0).abs() <= 1e-9
            && (self.src_dir.norm() - 1.0).abs() <= 1e-9
    }

    /// Inverse covariance `R S⁻² Rᵀ`.
    pub fn precision(&self) -> Mat3 {
        let r = self.q.to_mat3();
        let s = self.sigma;
        let inv = Mat3::diagonal(Vec3::new(1.0 / (s.x * s.x), 1.0 / (s.y * s.y), 1.0 / (s.z * s.z)));
        r.mul_mat(&inv).mul_mat(&r.transpose())
    }

    /// Applies the rigid motion `p ↦ rot·p + trans`.
    pub fn transformed(&self, rot: Quat, trans: Vec3) -> Self {
        let m = rot.to_mat3();
        GaussianPrimitive {
            mu: m.mul_vec(self.mu) + trans,
            q: rot.mul(self.q).normalized(),
            sigma: self.sigma,
            alpha: self.alpha,
            sh: self.sh.rotated(&m),
            src_node: self.src_node,
            src_dir: m.mul_vec(self.src_dir),
            room: self.room,
        }
    }
}

/// Equirectangular raster with optional depth and opacity channels.
#[derive(Clone, Debug, PartialEq)]
pub struct PanoImage {
    pub width: usize,
    pub height: usize,
    pub color: Vec<[u8; 3]>,
    pub depth: Option<Vec<f32>>,
    pub alpha: Option<Vec<f32>>,
    pub valid: Vec<bool>,
    pub provenance: Provenance,
}

/// Marker color for missing memory.
pub const INVALID_COLOR: [u8; 3] = [255, 255, 255];

impl PanoImage {
    pub fn new(width: usize, height: usize, fill: [u8; 3], provenance: Provenance) -> Result<Self> {
        check_resolution(width, height)?;
        Ok(PanoImage {
            width,
            height,
            color: vec![fill; width * height],
            depth: None,
            alpha: None,
            valid: vec![true; width * height],
            provenance,
        })
    }

    #[inline]
    pub fn index(&self, x: usize, y: usize) -> usize {
        y * self.width + x
    }

    /// Valid and not carrying the all-255 invalid marker.
    pub fn is_memory(&self, i: usize) -> bool {
        self.valid[i] && self.color[i] != INVALID_COLOR
    }

    /// Bilinear color lookup at continuous pixel coordinates (pixel centers
    /// at integers). Columns wrap around the seam; rows clamp.
    pub fn sample_bilinear(&self, x: f64, y: f64) -> [f64; 3] {
        let (w, h) = (self.width as i64, self.height as i64);
        let y = y.clamp(0.0, (h - 1) as f64);
        let (x0, y0) = (floor(x), floor(y));
        let (fx, fy) = (x - x0, y - y0);
        let col = |i: i64| i.rem_euclid(w) as usize;
        let row = |j: i64| j.clamp(0, h - 1) as usize;
        let (xa, xb) = (col(x0 as i64), col(x0 as i64 + 1));
        let (ya, yb) = (row(y0 as i64), row(y0 as i64 + 1));
        let px = |xx: usize, yy: usize| self.color[yy * self.width + xx].map(f64::from);
        let (a, b, c, d) = (px(xa, ya), px(xb, ya), px(xa, yb), px(xb, yb));
        let mut out = [0.0; 3];
        for k in 0..3 {
            let top = a[k] + (b[k] - a[k]) * fx;
            let bot = c[k] + (d[k] - c[k]) * fx;
            out[k] = top + (bot - top) * fy;
        }
        out
    }
}

/// Floating-point render result before quantization.
#[derive(Clone, Debug, PartialEq)]
pub struct RenderBuffers {
    pub width: usize,
    pub height: usize,
    /// Composited color in `[0, 1]`, background included.
    pub color: Vec<[f64; 3]>,
    /// Opacity-weighted expected depth; zero where nothing contributed.
    pub depth: Vec<f64>,
    /// Accumulated opacity (sum of compositing weights).
    pub alpha: Vec<f64>,
}

struct Prepared {
    mu: Vec3,
    precision: Mat3,
    alpha: f64,
    color: [f64; 3],
}

/// Screen tiles holding the indices of splats whose cutoff cap reaches them.
struct Tiles {
    cols: usize,
    lists: Vec<Vec<u32>>,
}

fn bin_tiles(gaussians: &[GaussianPrimitive], pose: &PanoPose, w: usize, h: usize) -> Tiles {
    let cols = w.div_ceil(TILE);
    let rows = h.div_ceil(TILE);
    let mut lists = vec![Vec::new(); cols * rows];
    let inv_rot = pose.rotation.to_mat3().transpose();
    let px_angle = TAU / w as f64;
    for (i, g) in gaussians.iter().enumerate() {
        let local = inv_rot.mul_vec(g.mu - pose.position);
        let dist = local.norm();
        let radius = 3.0 * g.sigma.max_element();
        let (mut y0, mut y1, mut x_span) = (0usize, h - 1, None);
        if dist > radius {
            let cap = asin(radius / dist);
            let el = asin((local.z / dist).clamp(-1.0, 1.0));
            let (top, bottom) = (el + cap, el - cap);
            let to_row = |e: f64| (0.5 - e / PI) * h as f64 - 0.5;
            y0 = floor(to_row(top) - 1.0).max(0.0) as usize;
            y1 = (floor(to_row(bottom) + 2.0).max(0.0) as usize).min(h - 1);
            if top < PI / 2.0 && bottom > -PI / 2.0 {
                let s = sin(cap) / cos(el.abs() + cap);
                if s < 1.0 {
                    let half = asin(s) / px_angle + 2.0;
                    let (xc, _) = direction_to_pixel(local, w, h);
                    x_span = Some((floor(xc - half) as i64, floor(xc + half) as i64 + 1));
                }
            }
        }
        if y0 > y1 {
            continue;
        }
        let (ty0, ty1) = (y0 / TILE, y1 / TILE);
        let tx: Vec<usize> = match x_span {
            Some((a, b)) if (b - a) < w as i64 => {
                let mut v: Vec<usize> = (a.div_euclid(TILE as i64)..=b.div_euclid(TILE as i64))
                    .map(|t| {
                        // wrap tiles through pixel space so partial last tiles work
                        let px = (t * TILE as i64).rem_euclid(w as i64) as usize;
                        px / TILE
                    })
                    .collect();
                v.sort_unstable();
                v.dedup();
                v
            }
            _ => (0..cols).collect(),
        };
        for ty in ty0..=ty1 {
            for &t in &tx {
                lists[ty * cols + t].push(i as u32);
            }
        }
    }
    Tiles { cols, lists }
}

/// Renders splats into the floating-point buffers at `pose`.
pub fn render_buffers(
    gaussians: &[GaussianPrimitive],
    pose: &PanoPose,
    width: usize,
    height: usize,
    background: [f64; 3],
) -> Result<RenderBuffers> {
    check_resolution(width, height)?;
    let o = pose.position;
    let prepared: Vec<Prepared> = par::map(gaussians, |g| Prepared {
        mu: g.mu,
        precision: g.precision(),
        alpha: g.alpha,
        color: sh_eval(&g.sh, (g.mu - o).normalized()),
    });
    let tiles = bin_tiles(gaussians, pose, width, height);
    let rot = pose.rotation.to_mat3();

    let px: Vec<([f64; 3], f64, f64)> = par::flat_map_rows(height, |y| {
        let mut hits: Vec<(f64, f64, u32)> = Vec::new();
        (0..width)
            .map(|x| {
                let d = rot.mul_vec(direction_unchecked(x as f64, y as f64, width, height));
                hits.clear();
                for &gi in &tiles.lists[(y / TILE) * tiles.cols + x / TILE] {
                    let g = &prepared[gi as usize];
                    let ad = g.precision.mul_vec(d);
                    let denom = d.dot(ad);
                    let t = ad.dot(g.mu - o) / denom;
                    if !(t > 0.0) {
                        continue;
                    }
                    let delta = o + d * t - g.mu;
                    let m2 = delta.dot(g.precision.mul_vec(delta));
                    if m2 > CUTOFF_SQ {
                        continue;
                    }
                    let resp = g.alpha * exp(-0.5 * m2);
                    if resp > 0.0 {
                        hits.push((t, resp, gi));
                    }
                }
                hits.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.2.cmp(&b.2)));
                let mut trans = 1.0;
                let mut color = [0.0; 3];
                let mut depth = 0.0;
                let mut acc = 0.0;
                for &(t, resp, gi) in hits.iter() {
                    let w = trans * resp;
                    let c = prepared[gi as usize].color;
                    for k in 0..3 {
                        color[k] += w * c[k];
                    }
                    depth += w * t;
                    acc += w;
                    trans *= 1.0 - resp;
                    if trans < TRANSMITTANCE_EPS {
                        break;
                    }
                }
                for k in 0..3 {
                    color[k] += trans * background[k];
                }
                let depth = if acc > 0.0 { depth / acc } else { 0.0 };
                (color, depth, acc)
            })
            .collect()
    });

    let mut out = RenderBuffers {
        width,
        height,
        color: Vec::with_capacity(px.len()),
        depth: Vec::with_capacity(px.len()),
        alpha: Vec::with_capacity(px.len()),
    };
    for (c, d, a) in px {
        out.color.push(c);
        out.depth.push(d);
        out.alpha.push(a);
    }
    Ok(out)
}

#[inline]
pub(crate) fn quantize(c: f64) -> u8 {
    round(c.clamp(0.0, 1.0) * 255.0) as u8
}

/// Renders the splats as a memory image: pixels with accumulated opacity
/// below [`VALID_ALPHA`] are invalid and take the background color.
pub fn render_pano(
    gaussians: &[GaussianPrimitive],
    pose: &PanoPose,
    width: usize,
    height: usize,
    background: [u8; 3],
) -> Result<PanoImage> {
    let bg = background.map(|c| f64::from(c) / 255.0);
    let buf = render_buffers(gaussians, pose, width, height, bg)?;
    let n = width * height;
    let mut img = PanoImage {
        width,
        height,
        color: Vec::with_capacity(n),
        depth: Some(buf.depth.iter().map(|&d| d as f32).collect()),
        alpha: Some(buf.alpha.iter().map(|&a| a as f32).collect()),
        valid: Vec::with_capacity(n),
        provenance: Provenance::CacheRender,
    };
    for (c, &a) in buf.color.iter().zip(&buf.alpha) {
        let valid = a >= VALID_ALPHA;
        img.valid.push(valid);
        img.color.push(if valid { c.map(quantize) } else { background });
    }
    Ok(img)
}

/// Unprojects every `stride`-th valid pixel of a panorama with depth into an
/// isotropic splat.
pub fn lift_pano(
    pano: &PanoImage,
    pose: &PanoPose,
    stride: usize,
    src_node: NodeId,
    room: RoomId,
) -> Result<Vec<GaussianPrimitive>> {
    let depth = pano.depth.as_ref().ok_or(Error::MissingDepth)?;
    if stride == 0 {
        return Err(Error::InvalidArgument("lift stride must be at least 1".into()));
    }
    let (w, h) = (pano.width, pano.height);
    let rot = pose.rotation.to_mat3();
    let footprint = TAU / w as f64 * stride as f64 * K_SIGMA;
    let rows = h.div_ceil(stride);
    Ok(par::flat_map_rows(rows, |r| {
        let y = r * stride;
        (0..w)
            .step_by(stride)
            .filter_map(|x| {
                let i = y * w + x;
                let d = f64::from(depth[i]);
                if !pano.is_memory(i) || !(d > 0.0) {
                    return None;
                }
                let dir = rot.mul_vec(direction_unchecked(x as f64, y as f64, w, h));
                let rgb = pano.color[i].map(|c| f64::from(c) / 255.0);
                Some(GaussianPrimitive {
                    mu: pose.position + dir * d,
                    q: Quat::IDENTITY,
                    sigma: Vec3::splat(d * footprint),
                    alpha: LIFT_ALPHA,
                    sh: Sh1::from_rgb(rgb),
                    src_node,
                    src_dir: dir,
                    room,
                })
            })
            .collect()
    }))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn splat(mu: Vec3, sigma: f64, alpha: f64, rgb: [f64; 3]) -> GaussianPrimitive {
        GaussianPrimitive {
            mu,
            q: Quat::IDENTITY,
            sigma: Vec3::splat(sigma),
            alpha,
            sh: Sh1::from_rgb(rgb),
            src_node: 0,
            src_dir: mu.normalized(),
            room: 0,
        }
    }

    #[test]
    fn empty_render_is_background() {
        let img = render_pano(&[], &PanoPose::at(Vec3::ZERO), 32, 16, [10, 20, 30]).unwrap();
        assert!(img.valid.iter().all(|v| !v));
        assert!(img.color.iter().all(|c| *c == [10, 20, 30]));
        assert!(img.alpha.unwrap().iter().all(|a| *a == 0.0));
    }

    #[test]
    fn single_splat_depth_and_color() {
        let (w, h) = (64, 32);
        let pose = PanoPose::at(Vec3::ZERO);
        // place the splat exactly on the ray through pixel (32, 16)
        let d = direction_unchecked(32.0, 16.0, w, h);
        let g = splat(d * 2.0, 0.05, 0.99, [0.2, 0.6, 0.8]);
        let buf = render_buffers(&[g], &pose, w, h, [0.0; 3]).unwrap();
        let i = 16 * w + 32;
        assert!((buf.depth[i] - 2.0).abs() < 1e-9);
        assert!((buf.alpha[i] - 0.99).abs() < 1e-12);
        for (k, c) in [0.2, 0.6, 0.8].iter().enumerate() {
            assert!((buf.color[i][k] - 0.99 * c).abs() < 1e-12);
        }
        let img = render_pano(&[splat(d * 2.0, 0.05, 0.99, [0.2, 0.6, 0.8])], &pose, w, h, [0; 3]).unwrap();
        assert!(img.valid[i]);
        let dd = img.depth.unwrap()[i];
        assert!((1.95..=2.05).contains(&dd));
    }

    #[test]
    fn two_splats_composite_front_to_back() {
        let (w, h) = (64, 32);
        let pose = PanoPose::at(Vec3::ZERO);
        let d = direction_unchecked(10.0, 12.0, w, h);
        let (c1, c2) = ([0.9, 0.1, 0.1], [0.1, 0.2, 0.9]);
        let far = splat(d * 2.0, 0.04, 0.7, c2);
        let near = splat(d * 1.0, 0.02, 0.9, c1);
        let buf = render_buffers(&[far, near], &pose, w, h, [0.0; 3]).unwrap();
        let i = 12 * w + 10;
        let (w1, w2) = (0.9, 0.7 * (1.0 - 0.9));
        for k in 0..3 {
            assert!((buf.color[i][k] - (c1[k] * w1 + c2[k] * w2)).abs() < 1e-12);
        }
        assert!((buf.alpha[i] - (w1 + w2)).abs() < 1e-12);
        assert!((buf.depth[i] - (w1 * 1.0 + w2 * 2.0) / (w1 + w2)).abs() < 1e-9);
    }

    #[test]
    fn sh_dc_only_is_isotropic() {
        let sh = Sh1::from_rgb([0.25, 0.5, 0.75]);
        for v in [Vec3::X, -Vec3::Y, Vec3::new(0.6, 0.0, 0.8)] {
            let c = sh_eval(&sh, v);
            assert!((c[0] - 0.25).abs() < 1e-12 && (c[1] - 0.5).abs() < 1e-12 && (c[2] - 0.75).abs() < 1e-12);
        }
    }

    #[test]
    fn sh_linear_band_is_odd() {
        let mut sh = Sh1::from_rgb([0.5; 3]);
        sh.linear = [[0.1, -0.2, 0.05], [0.3, 0.1, -0.1], [-0.05, 0.2, 0.15]];
        let v = Vec3::new(0.48, -0.6, 0.64);
        let (a, b) = (sh_eval(&sh, v), sh_eval(&sh, -v));
        for k in 0..3 {
            assert!(((a[k] - 0.5) + (b[k] - 0.5)).abs() < 1e-12);
        }
    }

    #[test]
    fn lift_counts_and_positions() {
        let mut pano = PanoImage::new(64, 32, [100, 150, 200], Provenance::Generated).unwrap();
        pano.depth = Some(vec![2.0; 64 * 32]);
        let pose = PanoPose::at(Vec3::new(1.0, 1.0, 1.5));
        assert_eq!(lift_pano(&pano, &pose, 4, 3, 1).unwrap().len(), 128);

        let mut one = pano.clone();
        one.valid = vec![false; 64 * 32];
        assert!(lift_pano(&one, &pose, 1, 0, 0).unwrap().is_empty());
        let i = one.index(32, 16);
        one.valid[i] = true;
        let g = lift_pano(&one, &pose, 1, 0, 0).unwrap();
        assert_eq!(g.len(), 1);
        let expect = pose.position + direction_unchecked(32.0, 16.0, 64, 32) * 2.0;
        assert!((g[0].mu - expect).norm() < 1e-12);
        assert!(g[0].is_valid());

        let mut marked = pano.clone();
        marked.color[0] = INVALID_COLOR;
        assert_eq!(lift_pano(&marked, &pose, 1, 0, 0).unwrap().len(), 64 * 32 - 1);
        let mut no_depth = pano;
        no_depth.depth = None;
        assert_eq!(lift_pano(&no_depth, &pose, 1, 0, 0), Err(Error::MissingDepth));
    }

    #[test]
    fn bilinear_wraps_columns() {
        let mut img = PanoImage::new(4, 2, [0; 3], Provenance::External).unwrap();
        img.color[3] = [200, 0, 0];
        let c = img.sample_bilinear(3.5, 0.0);
        assert!((c[0] - 100.0).abs() < 1e-12);
        let c = img.sample_bilinear(-0.5, 0.0);
        assert!((c[0] - 100.0).abs() < 1e-12);
    }
}
