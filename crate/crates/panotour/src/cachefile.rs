//! Binary Gaussian list.
//!
//! Header (16 bytes): magic `PTGS`, format version `u32`, record count
//! `u64`. Each 112-byte record holds, little-endian: `mu` 3×f32, `q`
//! (w, x, y, z) 4×f32, `sigma` 3×f32, `alpha` f32, SH 12×f32 (three DC
//! values, then the linear band in basis order, each an RGB triple),
//! `src_node` u32, `src_dir` 3×f32, `room` u32.
//!
//! Quaternions and directions are renormalized on load to undo `f32`
//! rounding.

use std::path::Path;

use panotour_core::gaussians::{GaussianPrimitive, Sh1};
use panotour_core::{Quat, Vec3};

use crate::error::{io_err, Error, Result};

pub const MAGIC: [u8; 4] = *b"PTGS";
pub const VERSION: u32 = 1;
pub const HEADER_LEN: usize = 16;
pub const RECORD_LEN: usize = 112;

pub fn encode(gaussians: &[GaussianPrimitive]) -> Vec<u8> {
    let mut out = Vec::with_capacity(HEADER_LEN + RECORD_LEN * gaussians.len());
    out.extend_from_slice(&MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.extend_from_slice(&(gaussians.len() as u64).to_le_bytes());
    let f = |v: f64, out: &mut Vec<u8>| out.extend_from_slice(&(v as f32).to_le_bytes());
    for g in gaussians {
        for v in [g.mu.x, g.mu.y, g.mu.z, g.q.w, g.q.x, g.q.y, g.q.z, g.sigma.x, g.sigma.y, g.sigma.z, g.alpha] {
            f(v, &mut out);
        }
        for v in g.sh.dc {
            f(v, &mut out);
        }
        for band in g.sh.linear {
            for v in band {
                f(v, &mut out);
            }
        }
        out.extend_from_slice(&g.src_node.to_le_bytes());
        for v in [g.src_dir.x, g.src_dir.y, g.src_dir.z] {
            f(v, &mut out);
        }
        out.extend_from_slice(&g.room.to_le_bytes());
    }
    out
}

pub fn decode(bytes: &[u8]) -> Result<Vec<GaussianPrimitive>, String> {
    if bytes.len() < HEADER_LEN || bytes[..4] != MAGIC {
        return Err("not a Gaussian cache file".into());
    }
    let version = u32::from_le_bytes(bytes[4..8].try_into().unwrap());
    if version != VERSION {
        return Err(format!("unsupported cache version {version}"));
    }
    let count = u64::from_le_bytes(bytes[8..16].try_into().unwrap()) as usize;
    let body = &bytes[HEADER_LEN..];
    if body.len() != count.checked_mul(RECORD_LEN).ok_or("record count overflows")? {
        return Err(format!("expected {count} records, found {} bytes", body.len()));
    }
    Ok(body
        .chunks_exact(RECORD_LEN)
        .map(|r| {
            let w = |i: usize| <[u8; 4]>::try_from(&r[4 * i..4 * i + 4]).unwrap();
            let f = |i: usize| f64::from(f32::from_le_bytes(w(i)));
            let mut sh = Sh1 { dc: [f(11), f(12), f(13)], linear: [[0.0; 3]; 3] };
            for (b, band) in sh.linear.iter_mut().enumerate() {
                for (c, v) in band.iter_mut().enumerate() {
                    *v = f(14 + 3 * b + c);
                }
            }
            GaussianPrimitive {
                mu: Vec3::new(f(0), f(1), f(2)),
                q: Quat::new(f(3), f(4), f(5), f(6)).normalized(),
                sigma: Vec3::new(f(7), f(8), f(9)),
                alpha: f(10),
                sh,
                src_node: u32::from_le_bytes(w(23)),
                src_dir: Vec3::new(f(24), f(25), f(26)).normalized(),
                room: u32::from_le_bytes(w(27)),
            }
        })
        .collect())
}

pub fn write_cache(path: &Path, gaussians: &[GaussianPrimitive]) -> Result<()> {
    std::fs::write(path, encode(gaussians)).map_err(io_err(path))
}

pub fn read_cache(path: &Path) -> Result<Vec<GaussianPrimitive>> {
    let bytes = std::fs::read(path).map_err(io_err(path))?;
    decode(&bytes).map_err(|message| Error::Parse { path: path.to_path_buf(), message })
}
