mod common;

use common::{l_house, rng};
use panotour_core::gaussians::{render_pano, PanoImage, Provenance, INVALID_COLOR};
use panotour_core::oracle::*;
use panotour_core::scenegraph::*;
use panotour_core::{Error, Quat, Vec3};
use rand::Rng;
use std::collections::BTreeSet;

#[test]
fn generated_scenes_are_connected_and_deterministic() {
    for n in 1..=MAX_ROOMS {
        for seed in 0..8 {
            let spec = gen_scene(seed, n).unwrap();
            assert_eq!(spec, gen_scene(seed, n).unwrap());
            assert_eq!(spec.rooms.len(), n);
            assert_eq!(spec.doorways.len(), n - 1);
            // union-find over doorway pairs
            let mut parent: Vec<usize> = (0..n).collect();
            fn find(p: &mut [usize], x: usize) -> usize {
                if p[x] != x {
                    let r = find(p, p[x]);
                    p[x] = r;
                }
                p[x]
            }
            for d in &spec.doorways {
                let (a, b) = (find(&mut parent, d.rooms.0 as usize), find(&mut parent, d.rooms.1 as usize));
                parent[a] = b;
            }
            let roots: BTreeSet<usize> = (0..n).map(|i| find(&mut parent, i)).collect();
            assert_eq!(roots.len(), 1, "seed {seed} n {n}");
        }
    }
}

#[test]
fn same_surface_point_same_color() {
    let spec = l_house(0.2);
    let shell = build_shell(&spec).unwrap();
    let tex = TextureSeed::new(99);
    let (w, h) = (512, 256);
    let p0 = PanoPose::at(Vec3::new(2.0, 1.5, 1.5));
    let p1 = PanoPose { position: Vec3::new(3.1, 2.2, 1.2), rotation: Quat::from_yaw(1.1) };
    let render = |p: &PanoPose| {
        let proxy = shell_render(&shell, p, w, h).unwrap();
        oracle_generate(&shell, &tex, &proxy, None, None, p).unwrap()
    };
    let (a, _b) = (render(&p0), render(&p1));
    let mut r = rng(61);
    let mut compared = 0;
    while compared < 200 {
        let (x, y) = (r.random_range(0..w), r.random_range(0..h));
        let i = a.index(x, y);
        let d = panotour_core::panocam::pixel_direction(x, y, w, h).unwrap();
        let p = p0.position + d * f64::from(a.depth.as_ref().unwrap()[i]);
        let n = shell.cast(p0.position, d).unwrap();
        let tri = &shell.triangles[n.triangle];
        let facing = |view: Vec3| if tri.normal.dot(view) > 0.0 { -tri.normal } else { tri.normal };
        // a second view of p sees the same triangle when nothing is in between
        let dir = (p - p1.position).normalized();
        let Some(hit) = shell.cast(p1.position, dir) else { continue };
        if (p1.position + dir * hit.distance).distance(p) > 1e-6 || hit.triangle != n.triangle {
            continue;
        }
        let c0 = tex.surface_color(p, tri.room, facing(d));
        let c1 = tex.surface_color(p1.position + dir * hit.distance, tri.room, facing(dir));
        for k in 0..3 {
            assert!((c0[k] - c1[k]).abs() < 1e-4);
        }
        let expect = c0.map(|c| (c.clamp(0.0, 255.0)).round() as u8);
        assert_eq!(a.color[i], expect);
        compared += 1;
    }
}

#[test]
fn memory_passes_through() {
    let shell = build_shell(&FloorplanSpec::single_room(4.0, 4.0, 3.0)).unwrap();
    let pose = PanoPose::at(Vec3::new(2.0, 2.0, 1.5));
    let proxy = shell_render(&shell, &pose, 64, 32).unwrap();
    let tex = TextureSeed::new(5);
    let plain = oracle_generate(&shell, &tex, &proxy, None, None, &pose).unwrap();
    assert_eq!(plain.provenance, Provenance::Generated);
    assert!(plain.valid.iter().all(|&v| v));

    let mut mem = render_pano(&[], &pose, 64, 32, [0; 3]).unwrap();
    mem.valid[5] = true;
    mem.color[5] = [1, 2, 3];
    mem.valid[6] = true;
    mem.color[6] = INVALID_COLOR;
    let out = oracle_generate(&shell, &tex, &proxy, Some(&mem), Some(&plain), &pose).unwrap();
    assert_eq!(out.color[5], [1, 2, 3]);
    assert_eq!(out.color[6], plain.color[6]);
    for i in 7..64 * 32 {
        assert_eq!(out.color[i], plain.color[i]);
    }
    assert_eq!(out.depth, plain.depth);
}

#[test]
fn guidance_mismatches_are_rejected() {
    let shell = build_shell(&FloorplanSpec::single_room(4.0, 4.0, 3.0)).unwrap();
    let pose = PanoPose::at(Vec3::new(2.0, 2.0, 1.5));
    let proxy = shell_render(&shell, &pose, 64, 32).unwrap();
    let tex = TextureSeed::new(5);
    let other = PanoPose::at(Vec3::new(1.0, 2.0, 1.5));
    assert!(matches!(oracle_generate(&shell, &tex, &proxy, None, None, &other), Err(Error::GuidanceMismatch(_))));
    let fake = PanoImage::new(64, 32, [0; 3], Provenance::Generated).unwrap();
    assert!(matches!(oracle_generate(&shell, &tex, &proxy, Some(&fake), None, &pose), Err(Error::GuidanceMismatch(_))));
    let small = render_pano(&[], &pose, 32, 16, [0; 3]).unwrap();
    assert!(oracle_generate(&shell, &tex, &proxy, Some(&small), None, &pose).is_err());
}

#[test]
fn drift_is_a_pure_function_of_pose() {
    let mut tex = TextureSeed::new(5);
    let pose = PanoPose::at(Vec3::new(2.0, 2.0, 1.5));
    assert_eq!(tex.pose_offset(&pose), [0.0; 3]);
    tex.drift = 8.0;
    let a = tex.pose_offset(&pose);
    assert_eq!(a, tex.pose_offset(&pose));
    assert!(a.iter().all(|v| v.abs() <= 8.0));
    assert_ne!(a, tex.pose_offset(&PanoPose::at(Vec3::new(2.5, 2.0, 1.5))));
}
