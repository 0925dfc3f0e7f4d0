//! Deterministic stand-ins for the learned parts of the system: a procedural
//! multi-room floorplan generator and a texture generator whose output is a
//! pure function of the world-space surface point.

use alloc::format;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::gaussians::{quantize, PanoImage, Provenance};
use crate::math::{floor, round, Vec3};
use crate::panocam::direction_unchecked;
use crate::par;
use crate::scenegraph::{
    DoorwaySpec, FloorplanSpec, GeometricProxy, PanoPose, RoomId, RoomSpec, ShellScene, P2,
};

/// SplitMix64 finalizer; the hash behind every seeded choice in this module.
pub fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn hash_words(words: &[u64]) -> u64 {
    words.iter().fold(0x51_7CC1_B727_220A_u64, |h, &w| mix64(h ^ w))
}

fn unit(h: u64) -> f64 {
    (h >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

/// Sequential draws from a seed.
struct Draws(u64);

impl Draws {
    fn next(&mut self) -> f64 {
        self.0 = mix64(self.0);
        unit(self.0)
    }

    fn range(&mut self, lo: f64, hi: f64, step: f64) -> f64 {
        let n = round((hi - lo) / step) as u64;
        let k = ((self.next() * (n + 1) as f64) as u64).min(n);
        lo + k as f64 * step
    }

    fn index(&mut self, n: usize) -> usize {
        ((self.next() * n as f64) as usize).min(n - 1)
    }
}

/// Snaps to whole centimeters so scene files stay readable; also clears `-0.0`.
fn cm(v: f64) -> f64 {
    round(v * 100.0) / 100.0 + 0.0
}

pub const MAX_ROOMS: usize = 8;
pub const MIN_DOOR_WIDTH: f64 = 0.9;
const WALL_HEIGHT: f64 = 2.8;
const DOOR_HEIGHT: f64 = 2.1;
const WALL_THICKNESS: f64 = 0.2;
const DOOR_MARGIN: f64 = 0.6;

/// Axis-aligned rectangular rooms on a jittered grid, joined along a random
/// spanning tree by doorways at least [`MIN_DOOR_WIDTH`] wide. One target at
/// each room center.
pub fn gen_scene(seed: u64, n_rooms: usize) -> Result<FloorplanSpec> {
    if !(1..=MAX_ROOMS).contains(&n_rooms) {
        return Err(Error::InvalidArgument(format!("room count {n_rooms} outside 1..={MAX_ROOMS}")));
    }
    let mut rng = Draws(hash_words(&[seed, 0x5CE_E0E]));
    let cols = (1..).find(|c| c * c >= n_rooms).unwrap_or(1);
    let rows = n_rooms.div_ceil(cols);
    let widths: Vec<f64> = (0..cols).map(|_| rng.range(3.5, 5.5, 0.1)).collect();
    let depths: Vec<f64> = (0..rows).map(|_| rng.range(3.5, 5.5, 0.1)).collect();
    let edge_x = |c: usize| cm(widths[..c].iter().sum::<f64>());
    let edge_y = |r: usize| cm(depths[..r].iter().sum::<f64>());

    // grow a connected cell set from the corner; each new cell hangs off one
    // already placed neighbor, which gives the doorway tree
    let mut cells: Vec<(usize, usize)> = alloc::vec![(0, 0)];
    let mut links: Vec<(usize, usize)> = Vec::new();
    while cells.len() < n_rooms {
        let mut frontier: Vec<((usize, usize), usize)> = Vec::new();
        for (pi, &(c, r)) in cells.iter().enumerate() {
            let around = [
                (c.wrapping_sub(1), r),
                (c + 1, r),
                (c, r.wrapping_sub(1)),
                (c, r + 1),
            ];
            for cell in around {
                if cell.0 < cols && cell.1 < rows && !cells.contains(&cell) {
                    frontier.push((cell, pi));
                }
            }
        }
        let (cell, parent) = frontier[rng.index(frontier.len())];
        links.push((parent, cells.len()));
        cells.push(cell);
    }

    let rooms: Vec<RoomSpec> = cells
        .iter()
        .enumerate()
        .map(|(i, &(c, r))| {
            let (x0, x1, y0, y1) = (edge_x(c), edge_x(c + 1), edge_y(r), edge_y(r + 1));
            RoomSpec {
                id: i as RoomId,
                polygon: alloc::vec![[x0, y0], [x1, y0], [x1, y1], [x0, y1]],
                label: format!("room_{i}"),
            }
        })
        .collect();

    let doorways = links
        .iter()
        .map(|&(a, b)| {
            let ((ca, ra), (cb, rb)) = (cells[a], cells[b]);
            let width = rng.range(MIN_DOOR_WIDTH, 1.2, 0.05);
            let segment: [P2; 2] = if ra == rb {
                let x = edge_x(ca.max(cb));
                let (lo, hi) = (edge_y(ra), edge_y(ra + 1));
                let c = rng.range(lo + DOOR_MARGIN + width / 2.0, hi - DOOR_MARGIN - width / 2.0, 0.05);
                [[x, cm(c - width / 2.0)], [x, cm(c + width / 2.0)]]
            } else {
                let y = edge_y(ra.max(rb));
                let (lo, hi) = (edge_x(ca), edge_x(ca + 1));
                let c = rng.range(lo + DOOR_MARGIN + width / 2.0, hi - DOOR_MARGIN - width / 2.0, 0.05);
                [[cm(c - width / 2.0), y], [cm(c + width / 2.0), y]]
            };
            let ids = (a.min(b) as RoomId, a.max(b) as RoomId);
            DoorwaySpec { rooms: ids, segment, height: DOOR_HEIGHT }
        })
        .collect();

    let targets = rooms
        .iter()
        .map(|r| [cm((r.polygon[0][0] + r.polygon[2][0]) / 2.0), cm((r.polygon[0][1] + r.polygon[2][1]) / 2.0)])
        .collect();

    Ok(FloorplanSpec {
        rooms,
        doorways,
        wall_height: WALL_HEIGHT,
        wall_thickness: WALL_THICKNESS,
        camera_height: crate::scenegraph::DEFAULT_CAMERA_HEIGHT,
        targets,
    })
}

/// Parameters of the procedural texture.
#[derive(Clone, Debug, PartialEq)]
pub struct TextureSeed {
    pub seed: u64,
    /// Base color per room, indexed by room id; rooms past the end get a
    /// seeded color.
    pub palette: Vec<[u8; 3]>,
    /// Noise lattice spacing in meters.
    pub pattern_scale: f64,
    /// Peak-to-peak noise amplitude in 8-bit levels.
    pub amplitude: f64,
    /// Per-pose color offset in 8-bit levels, applied to generated (not
    /// remembered) pixels. Models a generator that does not reproduce a
    /// surface identically from different viewpoints without memory.
    pub drift: f64,
}

impl TextureSeed {
    pub fn new(seed: u64) -> Self {
        TextureSeed { seed, palette: Vec::new(), pattern_scale: 1.0, amplitude: 48.0, drift: 0.0 }
    }

    pub fn room_color(&self, room: RoomId) -> [f64; 3] {
        if let Some(c) = self.palette.get(room as usize) {
            return c.map(f64::from);
        }
        let mut rng = Draws(hash_words(&[self.seed, 0xC0_10B, u64::from(room)]));
        [0; 3].map(|_| rng.range(80.0, 180.0, 1.0))
    }

    fn lattice(&self, room: RoomId, channel: u64, c: [i64; 3]) -> f64 {
        unit(hash_words(&[self.seed, u64::from(room), channel, c[0] as u64, c[1] as u64, c[2] as u64]))
    }

    /// Smooth value noise in `[0, 1]` with C2 interpolation.
    fn noise(&self, room: RoomId, channel: u64, p: Vec3) -> f64 {
        let s = p * (1.0 / self.pattern_scale);
        let base = [floor(s.x), floor(s.y), floor(s.z)];
        let f = [s.x - base[0], s.y - base[1], s.z - base[2]];
        let fade = |t: f64| t * t * t * (t * (t * 6.0 - 15.0) + 10.0);
        let w = f.map(fade);
        let b = base.map(|v| v as i64);
        let mut acc = 0.0;
        for corner in 0..8u8 {
            let o = [(corner & 1) as i64, ((corner >> 1) & 1) as i64, ((corner >> 2) & 1) as i64];
            let mut weight = 1.0;
            for k in 0..3 {
                weight *= if o[k] == 1 { w[k] } else { 1.0 - w[k] };
            }
            acc += weight * self.lattice(room, channel, [b[0] + o[0], b[1] + o[1], b[2] + o[2]]);
        }
        acc
    }

    /// Surface color in 8-bit units (unquantized) at world point `p`.
    pub fn surface_color(&self, p: Vec3, room: RoomId, normal: Vec3) -> [f64; 3] {
        let base = self.room_color(room);
        let tint = if normal.z > 0.5 {
            -25.0
        } else if normal.z < -0.5 {
            30.0
        } else {
            0.0
        };
        let mut out = [0.0; 3];
        for (k, o) in out.iter_mut().enumerate() {
            *o = base[k] + tint + self.amplitude * (self.noise(room, k as u64, p) - 0.5);
        }
        out
    }

    /// Color offset of a pose; zero when `drift` is zero.
    pub fn pose_offset(&self, pose: &PanoPose) -> [f64; 3] {
        if self.drift == 0.0 {
            return [0.0; 3];
        }
        let q = |v: f64| round(v * 1000.0) as i64 as u64;
        let key = [self.seed, 0xD81F7, q(pose.position.x), q(pose.position.y), q(pose.position.z)];
        let mut rng = Draws(hash_words(&key));
        [0; 3].map(|_| self.drift * (2.0 * rng.next() - 1.0))
    }
}

/// Generated panorama for `pose`: remembered pixels pass through unchanged,
/// everything else is textured from the shell surface it sees. Depth is the
/// proxy depth. `nearby` is accepted for interface parity and not read.
pub fn oracle_generate(
    shell: &ShellScene,
    tex: &TextureSeed,
    proxy: &GeometricProxy,
    memory: Option<&PanoImage>,
    nearby: Option<&PanoImage>,
    pose: &PanoPose,
) -> Result<PanoImage> {
    let _ = (shell, nearby);
    if proxy.provenance != Provenance::Shell {
        return Err(Error::GuidanceMismatch("proxy was not rendered from the shell".into()));
    }
    if proxy.pose != *pose {
        return Err(Error::GuidanceMismatch("proxy was rendered at a different pose".into()));
    }
    let (w, h) = (proxy.width, proxy.height);
    if let Some(m) = memory {
        if m.provenance != Provenance::CacheRender {
            return Err(Error::GuidanceMismatch("memory was not rendered from the cache".into()));
        }
        if m.width != w || m.height != h {
            return Err(Error::ShapeMismatch(format!(
                "memory {}x{} vs proxy {w}x{h}",
                m.width, m.height
            )));
        }
    }
    let rot = pose.rotation.to_mat3();
    let offset = tex.pose_offset(pose);
    let px: Vec<([u8; 3], bool)> = par::flat_map_rows(h, |y| {
        (0..w)
            .map(|x| {
                let i = y * w + x;
                if let Some(m) = memory {
                    if m.is_memory(i) {
                        return (m.color[i], proxy.depth[i] > 0.0);
                    }
                }
                match proxy.semantics[i] {
                    Some(sem) if proxy.depth[i] > 0.0 => {
                        let d = rot.mul_vec(direction_unchecked(x as f64, y as f64, w, h));
                        let p = pose.position + d * proxy.depth[i];
                        let c = tex.surface_color(p, sem.room, proxy.normals[i]);
                        let mut rgb = [0u8; 3];
                        for k in 0..3 {
                            rgb[k] = quantize((c[k] + offset[k]) / 255.0);
                        }
                        (rgb, true)
                    }
                    _ => ([0; 3], false),
                }
            })
            .collect()
    });
    let (color, valid): (Vec<_>, Vec<_>) = px.into_iter().unzip();
    Ok(PanoImage {
        width: w,
        height: h,
        color,
        depth: Some(proxy.depth.iter().map(|&d| d as f32).collect()),
        alpha: None,
        valid,
        provenance: Provenance::Generated,
    })
}
