use alloc::vec::Vec;

use super::{PanoPose, RoomId, ShellScene, SurfaceClass};
use crate::error::{Error, Result};
use crate::gaussians::Provenance;
use crate::math::Vec3;
use crate::panocam::{check_resolution, direction_unchecked};
use crate::par;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Semantic {
    /// `Opening` when a doorway opening is the nearest surface; the room is
    /// always that of the occluding surface behind it.
    pub class: SurfaceClass,
    pub room: RoomId,
}

/// Shell observation rendered at one pose: depth, normals and semantics.
#[derive(Clone, Debug, PartialEq)]
pub struct GeometricProxy {
    pub width: usize,
    pub height: usize,
    /// Unit normals facing the camera; zero where nothing was hit.
    pub normals: Vec<Vec3>,
    pub semantics: Vec<Option<Semantic>>,
    /// Euclidean camera-to-surface distance; zero where nothing was hit.
    pub depth: Vec<f64>,
    pub pose: PanoPose,
    pub provenance: Provenance,
}

impl GeometricProxy {
    pub fn index(&self, x: usize, y: usize) -> usize {
        y * self.width + x
    }
}

/// Ray-casts the shell from `pose` into an equirectangular proxy.
pub fn shell_render(
    shell: &ShellScene,
    pose: &PanoPose,
    width: usize,
    height: usize,
) -> Result<GeometricProxy> {
    check_resolution(width, height)?;
    if !shell.contains(pose.position) {
        return Err(Error::PoseOutsideShell);
    }
    let rot = pose.rotation.to_mat3();
    let px: Vec<(f64, Vec3, Option<Semantic>)> = par::flat_map_rows(height, |y| {
        (0..width)
            .map(|x| {
                let d = rot.mul_vec(direction_unchecked(x as f64, y as f64, width, height));
                match shell.cast(pose.position, d) {
                    Some(hit) => {
                        let tri = &shell.triangles[hit.triangle];
                        let n = if tri.normal.dot(d) > 0.0 { -tri.normal } else { tri.normal };
                        let class = if hit.through_opening { SurfaceClass::Opening } else { tri.class };
                        (hit.distance, n, Some(Semantic { class, room: tri.room }))
                    }
                    None => (0.0, Vec3::ZERO, None),
                }
            })
            .collect()
    });
    let mut proxy = GeometricProxy {
        width,
        height,
        normals: Vec::with_capacity(px.len()),
        semantics: Vec::with_capacity(px.len()),
        depth: Vec::with_capacity(px.len()),
        pose: *pose,
        provenance: Provenance::Shell,
    };
    for (d, n, s) in px {
        proxy.depth.push(d);
        proxy.normals.push(n);
        proxy.semantics.push(s);
    }
    Ok(proxy)
}
