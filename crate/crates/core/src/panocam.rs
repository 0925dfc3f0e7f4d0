//! Equirectangular camera model, extrinsics-only Plücker rays and circular
//! rotary phase tables.
//!
//! Pixel geometry uses pixel centers: column `x` has azimuth
//! `2π(x + 0.5)/W − π` and row `y` has elevation `π(0.5 − (y + 0.5)/H)`.
//! Camera forward is +x, +z is up. Token phases for the rotary tables use
//! the integer token index with no half-pixel shift.

use alloc::format;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::math::{asin, atan2, cos, pow, sin, sqrt, wrap, Vec3, PI, TAU};
use crate::scenegraph::PanoPose;

pub(crate) fn check_resolution(width: usize, height: usize) -> Result<()> {
    if height == 0 || width != 2 * height {
        return Err(Error::InvalidArgument(format!(
            "panorama resolution {width}x{height} must be 2:1 and non-empty"
        )));
    }
    Ok(())
}

/// Direction for continuous pixel coordinates (pixel centers at integers).
#[inline]
pub(crate) fn direction_unchecked(x: f64, y: f64, width: usize, height: usize) -> Vec3 {
    let az = TAU * (x + 0.5) / width as f64 - PI;
    let el = PI * (0.5 - (y + 0.5) / height as f64);
    let ce = cos(el);
    Vec3::new(ce * cos(az), ce * sin(az), sin(el))
}

/// Camera-frame unit direction through the center of pixel `(x, y)`.
pub fn pixel_direction(x: usize, y: usize, width: usize, height: usize) -> Result<Vec3> {
    check_resolution(width, height)?;
    if x >= width || y >= height {
        return Err(Error::PixelOutOfRange { x, y, width, height });
    }
    Ok(direction_unchecked(x as f64, y as f64, width, height))
}

/// Continuous pixel coordinates of a camera-frame direction. `x` wraps into
/// `[0, width)`; at the poles `x = 0`.
pub fn direction_to_pixel(d: Vec3, width: usize, height: usize) -> (f64, f64) {
    let n = d.norm();
    let horiz = sqrt(d.x * d.x + d.y * d.y);
    let el = asin((d.z / n).clamp(-1.0, 1.0));
    let y = (0.5 - el / PI) * height as f64 - 0.5;
    if horiz <= 1e-12 * n {
        return (0.0, y);
    }
    let az = atan2(d.y, d.x);
    let x = wrap((az + PI) * width as f64 / TAU - 0.5, width as f64);
    (x, y)
}

/// Projects a world point into the panorama at `pose`, returning continuous
/// pixel coordinates and the Euclidean depth.
pub fn project_point(pose: &PanoPose, p: Vec3, width: usize, height: usize) -> Result<(f64, f64, f64)> {
    check_resolution(width, height)?;
    let offset = p - pose.position;
    let depth = offset.norm();
    if !(depth > 0.0) {
        return Err(Error::DegenerateProjection);
    }
    let local = pose.rotation.to_mat3().transpose().mul_vec(offset);
    let (x, y) = direction_to_pixel(local, width, height);
    Ok((x, y, depth))
}

/// Per-pixel Plücker coordinates `(d, o × d)` in the world frame.
#[derive(Clone, Debug, PartialEq)]
pub struct RayMap {
    pub width: usize,
    pub height: usize,
    pub directions: Vec<Vec3>,
    pub moments: Vec<Vec3>,
}

pub fn plucker_rays(pose: &PanoPose, width: usize, height: usize) -> Result<RayMap> {
    check_resolution(width, height)?;
    let rot = pose.rotation.to_mat3();
    let o = pose.position;
    let mut directions = Vec::with_capacity(width * height);
    let mut moments = Vec::with_capacity(width * height);
    for y in 0..height {
        for x in 0..width {
            let d = rot.mul_vec(direction_unchecked(x as f64, y as f64, width, height));
            directions.push(d);
            moments.push(o.cross(d));
        }
    }
    Ok(RayMap { width, height, directions, moments })
}

/// Standard rotary base for the vertical (non-circular) branch.
pub const VERTICAL_BASE: f64 = 10000.0;

/// Precomputed `(cos, sin)` coefficients for circular horizontal phases and
/// geometric-schedule vertical phases.
#[derive(Clone, Debug, PartialEq)]
pub struct CpropeTable {
    pub width_tokens: usize,
    pub pairs: usize,
    pub height_tokens: usize,
    pub v_pairs: usize,
    /// `[(m - 1) * W + x]` for `m` in `1..=pairs`.
    horizontal: Vec<[f64; 2]>,
    /// `[k * H + y]` for `k` in `0..v_pairs`.
    vertical: Vec<[f64; 2]>,
}

impl CpropeTable {
    /// Unreduced horizontal phase `m · 2πx / W`; accepts virtual positions
    /// outside `0..W`.
    pub fn phase(&self, m: usize, x: i64) -> f64 {
        m as f64 * TAU * x as f64 / self.width_tokens as f64
    }

    /// Horizontal coefficients for pair `m` (1-based) at token `x`; any `x`
    /// is reduced modulo `W` so position `W` reads the row of position 0.
    pub fn horizontal(&self, m: usize, x: usize) -> [f64; 2] {
        assert!((1..=self.pairs).contains(&m), "horizontal pair {m} out of 1..={}", self.pairs);
        self.horizontal[(m - 1) * self.width_tokens + x % self.width_tokens]
    }

    /// Angular frequency of vertical pair `k`: `base^(-2k / d_v)`.
    pub fn frequency(&self, k: usize) -> f64 {
        pow(VERTICAL_BASE, -2.0 * k as f64 / (2 * self.v_pairs) as f64)
    }

    pub fn vertical(&self, k: usize, y: usize) -> [f64; 2] {
        assert!(k < self.v_pairs && y < self.height_tokens, "vertical entry ({k}, {y}) out of range");
        self.vertical[k * self.height_tokens + y]
    }

    /// Horizontal rows `m = 1..=pairs` as a flat row-major `pairs x W` slice.
    pub fn horizontal_rows(&self) -> &[[f64; 2]] {
        &self.horizontal
    }
}

pub fn cprope_table(
    width_tokens: usize,
    pairs: usize,
    height_tokens: usize,
    v_pairs: usize,
) -> Result<CpropeTable> {
    if pairs < 1 || width_tokens < 2 {
        return Err(Error::InvalidArgument(format!(
            "circular table needs pairs >= 1 and W >= 2, got pairs={pairs} W={width_tokens}"
        )));
    }
    let w = width_tokens;
    let mut horizontal = Vec::with_capacity(pairs * w);
    for m in 1..=pairs {
        for x in 0..w {
            // Reduce m·x modulo W in integers so the phase lands in [0, 2π).
            let r = (m * x) % w;
            let theta = TAU * r as f64 / w as f64;
            horizontal.push([cos(theta), sin(theta)]);
        }
    }
    let mut table = CpropeTable { width_tokens, pairs, height_tokens, v_pairs, horizontal, vertical: Vec::new() };
    let mut vertical = Vec::with_capacity(v_pairs * height_tokens);
    for k in 0..v_pairs {
        let omega = table.frequency(k);
        for y in 0..height_tokens {
            let theta = y as f64 * omega;
            vertical.push([cos(theta), sin(theta)]);
        }
    }
    table.vertical = vertical;
    Ok(table)
}
