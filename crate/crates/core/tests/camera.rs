mod common;

use common::{rng, unit_quat};
use panotour_core::panocam::*;
use panotour_core::scenegraph::PanoPose;
use panotour_core::Vec3;
use rand::Rng;
use std::f64::consts::TAU;

#[test]
fn project_inverts_pixel_direction() {
    let mut r = rng(11);
    let (w, h) = (512, 256);
    for _ in 0..500 {
        let pose = PanoPose {
            position: Vec3::new(r.random_range(-3.0..3.0), r.random_range(-3.0..3.0), r.random_range(0.5..2.5)),
            rotation: unit_quat(&mut r),
        };
        // stay off the two pole rows where azimuth is undefined
        let (x, y) = (r.random_range(0..w), r.random_range(1..h - 1));
        let t = r.random_range(0.2..20.0);
        let d = pose.rotation.to_mat3().mul_vec(pixel_direction(x, y, w, h).unwrap());
        let (px, py, depth) = project_point(&pose, pose.position + d * t, w, h).unwrap();
        let dx = (px - x as f64).abs();
        assert!(dx.min(w as f64 - dx) < 1e-6 && (py - y as f64).abs() < 1e-6, "({x},{y}) -> ({px},{py})");
        assert!((depth - t).abs() < 1e-9 * t.max(1.0));
    }
}

#[test]
fn plucker_moment_is_invariant_along_ray() {
    let mut r = rng(12);
    for _ in 0..20 {
        let pose = PanoPose {
            position: Vec3::new(r.random_range(-5.0..5.0), r.random_range(-5.0..5.0), r.random_range(-5.0..5.0)),
            rotation: unit_quat(&mut r),
        };
        let rays = plucker_rays(&pose, 32, 16).unwrap();
        for (d, m) in rays.directions.iter().zip(&rays.moments) {
            assert!((d.norm() - 1.0).abs() < 1e-9);
            assert!(d.dot(*m).abs() < 1e-9);
            let t = r.random_range(-10.0..10.0);
            let slid = (pose.position + *d * t).cross(*d);
            assert!((slid - *m).norm() < 1e-9);
        }
    }
}

#[test]
fn plucker_moment_example() {
    // with yaw 0 the top-center pixel is close to +z
    let rays = plucker_rays(&PanoPose::at(Vec3::X), 2048, 1024).unwrap();
    let i = 1024;
    let d = rays.directions[i];
    assert!(d.z > 0.99999);
    assert!((rays.moments[i] - Vec3::X.cross(d)).norm() < 1e-15);
    assert!((rays.moments[i] - Vec3::new(0.0, -1.0, 0.0)).norm() < 2e-3);
}

#[test]
fn cprope_seam_step_is_uniform() {
    for w in [64usize, 1024] {
        let t = cprope_table(w, 32, 4, 2).unwrap();
        for m in 1..=32 {
            assert_eq!(t.horizontal(m, w), t.horizontal(m, 0));
            let step = t.phase(m, 0) + TAU * m as f64 - t.phase(m, w as i64 - 1);
            assert!((step - TAU * m as f64 / w as f64).abs() < 1e-12);
            for x in 0..w {
                let [c, s] = t.horizontal(m, x);
                assert!((c * c + s * s - 1.0).abs() < 1e-12);
                // consecutive coefficients differ by the same rotation, seam included
                let [c1, s1] = t.horizontal(m, (x + 1) % w);
                let d = (s1 * c - c1 * s).atan2(c1 * c + s1 * s);
                let expect = TAU * m as f64 / w as f64;
                let diff = (d - expect).rem_euclid(TAU);
                assert!(diff.min(TAU - diff) < 1e-12, "W={w} m={m} x={x}");
            }
        }
        for k in 0..2 {
            for y in 0..4 {
                let [c, s] = t.vertical(k, y);
                assert!((c * c + s * s - 1.0).abs() < 1e-12);
            }
        }
    }
}

#[test]
fn cprope_table_examples() {
    let t = cprope_table(1024, 4, 8, 2).unwrap();
    let [c, s] = t.horizontal(3, 256);
    assert!(c.abs() < 1e-12 && (s + 1.0).abs() < 1e-12);
    assert!((t.frequency(1) - 0.01).abs() < 1e-15);
    assert!(cprope_table(1, 1, 1, 0).is_err());
    assert!(cprope_table(8, 0, 1, 0).is_err());
}

fn rotated_dot(t: &CpropeTable, q: &[f64], k: &[f64], x1: usize, x2: usize) -> f64 {
    let rot = |v: &[f64], x: usize| -> Vec<f64> {
        let mut out = v.to_vec();
        for m in 1..=t.pairs {
            let [c, s] = t.horizontal(m, x);
            let (a, b) = (v[2 * m - 2], v[2 * m - 1]);
            out[2 * m - 2] = a * c - b * s;
            out[2 * m - 1] = a * s + b * c;
        }
        out
    };
    rot(q, x1).iter().zip(rot(k, x2)).map(|(a, b)| a * b).sum()
}

#[test]
fn rotary_dot_depends_only_on_offset() {
    let mut r = rng(13);
    let w = 48;
    let t = cprope_table(w, 6, 1, 0).unwrap();
    for _ in 0..50 {
        let q: Vec<f64> = (0..12).map(|_| r.random_range(-1.0..1.0)).collect();
        let k: Vec<f64> = (0..12).map(|_| r.random_range(-1.0..1.0)).collect();
        let (x1, x2) = (r.random_range(0..w), r.random_range(0..w));
        let base = rotated_dot(&t, &q, &k, (x1 + w - x2) % w, 0);
        let got = rotated_dot(&t, &q, &k, x1, x2);
        assert!((got - base).abs() < 1e-10);
        let s = r.random_range(0..w);
        assert!((rotated_dot(&t, &q, &k, (x1 + s) % w, (x2 + s) % w) - got).abs() < 1e-10);
    }
}
