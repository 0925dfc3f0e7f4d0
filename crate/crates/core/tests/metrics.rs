mod common;

use common::rng;
use panotour_core::evalmetrics::*;
use panotour_core::gaussians::{PanoImage, Provenance};
use panotour_core::oracle::{oracle_generate, TextureSeed};
use panotour_core::scenegraph::{build_shell, shell_render, FloorplanSpec, PanoPose, ShellScene};
use panotour_core::{Error, Vec3};
use rand::Rng;

fn random_depths(r: &mut impl Rng, n: usize) -> (Vec<f64>, Vec<f64>) {
    let pred = (0..n).map(|_| r.random_range(0.3..8.0)).collect();
    let target = (0..n).map(|_| r.random_range(0.3..8.0)).collect();
    (pred, target)
}

#[test]
fn analytic_gradients_match_finite_differences() {
    let mut r = rng(51);
    for _ in 0..20 {
        let (pred, target) = random_depths(&mut r, 100);
        let l = depth_loss(&pred, &target).unwrap();
        for i in 0..pred.len() {
            let h = 1e-6 * pred[i];
            let (mut up, mut down) = (pred.clone(), pred.clone());
            up[i] += h;
            down[i] -= h;
            let (lu, ld) = (depth_loss(&up, &target).unwrap(), depth_loss(&down, &target).unwrap());
            let check = |analytic: f64, numeric: f64| {
                let rel = (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(1e-12);
                assert!(rel < 1e-4, "analytic {analytic} vs numeric {numeric}");
            };
            check(l.grad_log_l1[i], (lu.log_l1 - ld.log_l1) / (2.0 * h));
            check(l.grad_scale_invariant[i], (lu.scale_invariant - ld.scale_invariant) / (2.0 * h));
        }
    }
}

#[test]
fn scale_invariant_term_ignores_global_scale() {
    let mut r = rng(52);
    for _ in 0..20 {
        let (pred, target) = random_depths(&mut r, 64);
        let base = depth_loss(&pred, &target).unwrap();
        assert!(base.log_l1 > 0.0);
        for s in [0.5, 2.0, 10.0] {
            let p: Vec<f64> = pred.iter().map(|d| d * s).collect();
            let t: Vec<f64> = target.iter().map(|d| d * s).collect();
            let l = depth_loss(&p, &t).unwrap();
            assert!((l.scale_invariant - base.scale_invariant).abs() < 1e-6);
            assert!(l.log_l1 >= 0.0);
        }
    }
}

#[test]
fn loss_closed_forms() {
    let d = vec![0.5, 1.0, 4.0, 9.0];
    let l = depth_loss(&d, &d).unwrap();
    assert_eq!(l.log_l1, 0.0);
    assert!((l.scale_invariant - 0.1 * DEPTH_EPS.sqrt()).abs() < 1e-15);
    let pred: Vec<f64> = d.iter().map(|v| (v + DEPTH_EPS) * std::f64::consts::E - DEPTH_EPS).collect();
    let l = depth_loss(&pred, &d).unwrap();
    assert!((l.scale_invariant - 0.1 * (0.15 + DEPTH_EPS).sqrt()).abs() < 1e-9);
    assert!(matches!(depth_loss(&[1.0, -1.0], &[1.0, 1.0]), Err(Error::InvalidArgument(_))));
    assert!(matches!(depth_loss(&[1.0], &[1.0, 1.0]), Err(Error::ShapeMismatch(_))));
    assert_eq!(total_loss(1.0, 1.0, 1.0, 1.0), 1.65);
    assert_eq!(total_loss(0.0, 0.0, 0.0, 2.0), 1.0);
    assert_eq!(LossWeights::default(), LossWeights { l2: 1.0, perceptual: 0.1, opacity: 0.05, depth: 0.5 });
}

#[test]
fn ssim_of_inverted_checkerboard_is_low() {
    let mut a = PanoImage::new(64, 32, [0; 3], Provenance::External).unwrap();
    for y in 0..32 {
        for x in 0..64 {
            a.color[y * 64 + x] = if (x / 3 + y / 3) % 2 == 0 { [30, 60, 90] } else { [220, 190, 160] };
        }
    }
    let mut b = a.clone();
    b.color.iter_mut().for_each(|c| *c = c.map(|v| 255 - v));
    let (p, s) = psnr_ssim(&a, &b).unwrap();
    assert!(s < 0.5);
    assert!(p < 20.0);
    assert_eq!(psnr_ssim(&a, &a).unwrap(), (PSNR_CAP, 1.0));
}

fn room_scene() -> (ShellScene, Vec<EvalRegion>) {
    let shell = build_shell(&FloorplanSpec::single_room(4.0, 4.0, 3.0)).unwrap();
    let regions = auto_regions(&shell);
    (shell, regions)
}

fn oracle_pano(shell: &ShellScene, pose: &PanoPose, w: usize) -> PanoImage {
    let proxy = shell_render(shell, pose, w, w / 2).unwrap();
    oracle_generate(shell, &TextureSeed::new(3), &proxy, None, None, pose).unwrap()
}

#[test]
fn region_helpers() {
    let (shell, regions) = room_scene();
    assert_eq!(regions.len(), 1);
    let r = regions[0];
    assert!(r.on_shell(&shell));
    assert!(r.e_u.dot(r.e_v).abs() < 1e-9);
    assert_eq!(r.samples().len(), 10_000);
    assert!((r.extent() - 1.0).abs() < 1e-12);
    assert!(!EvalRegion::new(r.corner + Vec3::new(0.3, 0.3, 0.0), Vec3::X, Vec3::Y).unwrap().on_shell(&shell));
}

#[test]
fn duplicate_views_hit_the_cap() {
    let (shell, regions) = room_scene();
    let pose = PanoPose::at(Vec3::new(2.0, 2.0, 1.5));
    let a = oracle_pano(&shell, &pose, 256);
    let rep = overlap_psnr(&shell, &[(&a, pose), (&a, pose)], &regions, 0).unwrap();
    assert_eq!(rep.mean_psnr, PSNR_CAP);
    assert_eq!(rep.entries[0].mse, 0.0);
}

#[test]
fn uniform_offset_gives_closed_form_psnr() {
    let (shell, regions) = room_scene();
    let pose = PanoPose::at(Vec3::new(2.0, 2.0, 1.5));
    let mut a = oracle_pano(&shell, &pose, 512);
    a.color.iter_mut().for_each(|c| *c = c.map(|v| v.min(240)));
    let mut b = a.clone();
    b.color.iter_mut().for_each(|c| *c = c.map(|v| v + 8));
    let rep = overlap_psnr(&shell, &[(&a, pose), (&b, pose)], &regions, 0).unwrap();
    let expect = 10.0 * (255.0f64 * 255.0 / 64.0).log10();
    assert!((rep.mean_psnr - expect).abs() < 0.01, "{}", rep.mean_psnr);
    assert!((expect - 30.07).abs() < 0.01);
}

#[test]
fn swapping_region_axes_keeps_the_score() {
    let (shell, regions) = room_scene();
    let p0 = PanoPose::at(Vec3::new(2.0, 2.0, 1.5));
    let p1 = PanoPose::at(Vec3::new(1.3, 2.6, 1.5));
    let (a, b) = (oracle_pano(&shell, &p0, 512), oracle_pano(&shell, &p1, 512));
    let swapped: Vec<EvalRegion> = regions.iter().map(|r| EvalRegion::new(r.corner, r.e_v, r.e_u).unwrap()).collect();
    let x = overlap_psnr(&shell, &[(&a, p0), (&b, p1)], &regions, 0).unwrap();
    let y = overlap_psnr(&shell, &[(&a, p0), (&b, p1)], &swapped, 0).unwrap();
    assert!((x.mean_psnr - y.mean_psnr).abs() < 1e-9);
    assert_eq!(x.entries[0].valid_samples, y.entries[0].valid_samples);
}

#[test]
fn oracle_views_agree_on_shared_walls() {
    let (shell, regions) = room_scene();
    let p0 = PanoPose::at(Vec3::new(2.0, 2.0, 1.5));
    let p1 = PanoPose::at(Vec3::new(1.2, 2.7, 1.5));
    let (a, b) = (oracle_pano(&shell, &p0, 512), oracle_pano(&shell, &p1, 512));
    let rep = overlap_psnr(&shell, &[(&a, p0), (&b, p1)], &regions, 0).unwrap();
    assert!(rep.mean_psnr >= 45.0, "{}", rep.mean_psnr);
    assert!(rep.entries.iter().all(|e| e.valid_samples > 9000));
}

#[test]
fn overlap_errors() {
    let (shell, regions) = room_scene();
    let pose = PanoPose::at(Vec3::new(2.0, 2.0, 1.5));
    let a = oracle_pano(&shell, &pose, 64);
    assert!(overlap_psnr(&shell, &[(&a, pose)], &regions, 0).is_err());
    assert!(overlap_psnr(&shell, &[(&a, pose), (&a, pose)], &regions, 2).is_err());
    let hidden = EvalRegion::new(Vec3::new(10.0, 10.0, 0.0), Vec3::X, Vec3::Y).unwrap();
    assert_eq!(overlap_psnr(&shell, &[(&a, pose), (&a, pose)], &[hidden], 0), Err(Error::NoCovisibleSamples));
}
