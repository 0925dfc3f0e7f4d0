#![allow(dead_code)]

use panotour_core::gaussians::{GaussianPrimitive, Sh1};
use panotour_core::scenegraph::{DoorwaySpec, FloorplanSpec, RoomSpec, DEFAULT_CAMERA_HEIGHT};
use panotour_core::{Quat, Vec3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn room(id: u32, x0: f64, y0: f64, x1: f64, y1: f64) -> RoomSpec {
    RoomSpec { id, polygon: vec![[x0, y0], [x1, y0], [x1, y1], [x0, y1]], label: format!("r{id}") }
}

/// Rooms 0 = [0,4]², 1 = [4,8]×[0,4]; a doorway on x = 4 centered at y = 2.
pub fn two_rooms(door_width: f64, door_height: f64, thickness: f64) -> FloorplanSpec {
    FloorplanSpec {
        rooms: vec![room(0, 0.0, 0.0, 4.0, 4.0), room(1, 4.0, 0.0, 8.0, 4.0)],
        doorways: vec![DoorwaySpec {
            rooms: (0, 1),
            segment: [[4.0, 2.0 - door_width / 2.0], [4.0, 2.0 + door_width / 2.0]],
            height: door_height,
        }],
        wall_height: 3.0,
        wall_thickness: thickness,
        camera_height: DEFAULT_CAMERA_HEIGHT,
        targets: vec![[2.0, 2.0], [6.0, 2.0]],
    }
}

/// L-shaped three-room layout with two doorways and an L-shaped room.
pub fn l_house(thickness: f64) -> FloorplanSpec {
    FloorplanSpec {
        rooms: vec![
            room(0, 0.0, 0.0, 4.0, 3.0),
            room(1, 4.0, 0.0, 7.0, 3.0),
            RoomSpec {
                id: 2,
                polygon: vec![[0.0, 3.0], [4.0, 3.0], [4.0, 5.0], [2.5, 5.0], [2.5, 7.0], [0.0, 7.0]],
                label: "hall".into(),
            },
        ],
        doorways: vec![
            DoorwaySpec { rooms: (0, 1), segment: [[4.0, 1.0], [4.0, 2.0]], height: 2.1 },
            DoorwaySpec { rooms: (0, 2), segment: [[1.0, 3.0], [2.0, 3.0]], height: 2.1 },
        ],
        wall_height: 2.8,
        wall_thickness: thickness,
        camera_height: DEFAULT_CAMERA_HEIGHT,
        targets: vec![[2.0, 1.5], [5.5, 1.5], [1.2, 6.0]],
    }
}

pub fn unit_vec(r: &mut impl Rng) -> Vec3 {
    loop {
        let v = Vec3::new(r.random_range(-1.0..1.0), r.random_range(-1.0..1.0), r.random_range(-1.0..1.0));
        let n = v.norm();
        if n > 0.1 && n <= 1.0 {
            return v * (1.0 / n);
        }
    }
}

pub fn unit_quat(r: &mut impl Rng) -> Quat {
    loop {
        let q = Quat::new(
            r.random_range(-1.0..1.0),
            r.random_range(-1.0..1.0),
            r.random_range(-1.0..1.0),
            r.random_range(-1.0..1.0),
        );
        if q.norm() > 0.1 {
            return q.normalized();
        }
    }
}

/// Random primitive near `center` with random anisotropy, band and room.
pub fn random_prim(r: &mut impl Rng, center: Vec3, spread: f64, rooms: u32) -> GaussianPrimitive {
    let mut sh = Sh1::from_rgb([r.random(), r.random(), r.random()]);
    for band in &mut sh.linear {
        for v in band.iter_mut() {
            *v = r.random_range(-0.3..0.3);
        }
    }
    GaussianPrimitive {
        mu: center + unit_vec(r) * (spread * r.random::<f64>()),
        q: unit_quat(r),
        sigma: Vec3::new(r.random_range(0.02..0.2), r.random_range(0.02..0.2), r.random_range(0.02..0.2)),
        alpha: r.random_range(0.05..1.0),
        sh,
        src_node: r.random_range(0..100),
        src_dir: unit_vec(r),
        room: r.random_range(0..rooms),
    }
}

/// Splats covering the solid part of room 0's shared wall face in
/// `two_rooms(1.0, 2.1, 0.2)`, on the plane `x = 3.9`.
pub fn room_a_wall(step: f64) -> Vec<GaussianPrimitive> {
    let mut out = Vec::new();
    let ny = (3.8 / step) as usize;
    let nz = (3.0 / step) as usize;
    for iy in 0..=ny {
        let y = 0.1 + iy as f64 * step;
        if (y - 2.0).abs() < 0.5 + step {
            continue;
        }
        for iz in 0..=nz {
            let z = iz as f64 * step;
            out.push(GaussianPrimitive {
                mu: Vec3::new(3.9, y, z),
                q: Quat::IDENTITY,
                sigma: Vec3::splat(step),
                alpha: 0.9,
                sh: Sh1::from_rgb([0.8, 0.3, 0.2]),
                src_node: 0,
                src_dir: Vec3::X,
                room: 0,
            });
        }
    }
    out
}
