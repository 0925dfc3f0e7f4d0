use panotour::cachefile::{decode, encode, read_cache, write_cache};
use panotour::raster::{read_color, read_float, write_color, write_float, FloatRaster};
use panotour::scene::{from_toml, read_scene, to_toml, write_scene};
use panotour::text::{parse_mean_psnr, parse_stats_line, stats_line};
use panotour::TourConfig;
use panotour_core::cache::UpdateStats;
use panotour_core::gaussians::{GaussianPrimitive, PanoImage, Provenance, Sh1, INVALID_COLOR};
use panotour_core::oracle::gen_scene;
use panotour_core::{Quat, Vec3};
use proptest::prelude::*;

#[test]
fn scene_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    for seed in 0..5 {
        let spec = gen_scene(seed, 5).unwrap();
        assert_eq!(from_toml(&to_toml(&spec)).unwrap(), spec);
        let path = dir.path().join(format!("s{seed}.toml"));
        write_scene(&path, &spec).unwrap();
        assert_eq!(read_scene(&path).unwrap(), spec);
    }
}

#[test]
fn hand_written_scene_parses() {
    let text = r#"
targets = [[2, 2], [6, 2]]
wall_height = 3.0
wall_thickness = 0.0

[[rooms]]
id = 0
label = "kitchen"
polygon = [[0, 0], [4, 0], [4, 4], [0, 4]]

[[rooms]]
id = 1
polygon = [[4, 0], [8, 0], [8, 4], [4, 4]]

[[doorways]]
rooms = [0, 1]
segment = [[4, 1.5], [4, 2.5]]
height = 2.1
"#;
    let spec = from_toml(text).unwrap();
    assert_eq!(spec.rooms.len(), 2);
    assert_eq!(spec.rooms[0].label, "kitchen");
    assert_eq!(spec.targets, vec![[2.0, 2.0], [6.0, 2.0]]);
    assert_eq!(spec.camera_height, 1.5);
    assert!(from_toml("rooms = 3").is_err());
    assert!(from_toml(&text.replace("[4, 2.5]", "[4, 2.5], [4, 3]")).is_err());
}

fn prim_strategy() -> impl Strategy<Value = GaussianPrimitive> {
    (
        prop::array::uniform3(-50.0f64..50.0),
        prop::array::uniform4(-1.0f64..1.0),
        prop::array::uniform3(0.001f64..1.0),
        0.0f64..=1.0,
        prop::array::uniform3(-2.0f64..2.0),
        prop::array::uniform3(prop::array::uniform3(-1.0f64..1.0)),
        any::<u32>(),
        prop::array::uniform3(-1.0f64..1.0),
        any::<u32>(),
    )
        .prop_filter("non-degenerate", |(_, q, _, _, _, _, _, d, _)| {
            q.iter().map(|v| v * v).sum::<f64>() > 0.01 && d.iter().map(|v| v * v).sum::<f64>() > 0.01
        })
        .prop_map(|(mu, q, sigma, alpha, dc, linear, src_node, d, room)| GaussianPrimitive {
            mu: Vec3::from_array(mu),
            q: Quat::new(q[0], q[1], q[2], q[3]).normalized(),
            sigma: Vec3::from_array(sigma),
            alpha,
            sh: Sh1 { dc, linear },
            src_node,
            src_dir: Vec3::from_array(d).normalized(),
            room,
        })
}

proptest! {
    #[test]
    fn cache_records_survive_encoding(gs in prop::collection::vec(prim_strategy(), 0..40)) {
        let back = decode(&encode(&gs)).unwrap();
        prop_assert_eq!(back.len(), gs.len());
        for (a, b) in gs.iter().zip(&back) {
            prop_assert!((a.mu - b.mu).norm() < 1e-5 * (1.0 + a.mu.norm()));
            prop_assert!((a.sigma - b.sigma).norm() < 1e-6);
            prop_assert!((a.alpha - b.alpha).abs() < 1e-7);
            prop_assert_eq!((a.src_node, a.room), (b.src_node, b.room));
            prop_assert!(b.is_valid());
        }
    }

    #[test]
    fn float_rasters_round_trip(w in 1u32..20, h in 1u32..20, seed in any::<u32>()) {
        let data: Vec<f32> = (0..w * h).map(|i| (i ^ seed) as f32 * 0.37).collect();
        let r = FloatRaster { width: w, height: h, data };
        prop_assert_eq!(FloatRaster::from_bytes(&r.to_bytes()).unwrap(), r);
    }
}

#[test]
fn corrupt_files_are_rejected() {
    let bytes = encode(&[]);
    assert!(decode(&bytes).unwrap().is_empty());
    assert!(decode(b"NOPE").is_err());
    let mut wrong_count = bytes.clone();
    wrong_count[8] = 3;
    assert!(decode(&wrong_count).is_err());
    let mut wrong_version = bytes;
    wrong_version[4] = 9;
    assert!(decode(&wrong_version).is_err());
    assert!(FloatRaster::from_bytes(&[1, 0, 0, 0, 1, 0, 0, 0]).is_err());
}

#[test]
fn files_on_disk_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let mut pano = PanoImage::new(8, 4, [12, 34, 56], Provenance::Generated).unwrap();
    pano.color[3] = INVALID_COLOR;
    let path = dir.path().join("p.png");
    write_color(&path, &pano).unwrap();
    let back = read_color(&path).unwrap();
    assert_eq!(back.color, pano.color);
    assert!(!back.valid[3] && back.valid[2]);

    let r = FloatRaster { width: 2, height: 1, data: vec![1.5, -2.25] };
    let fpath = dir.path().join("d.f32");
    write_float(&fpath, &r).unwrap();
    assert_eq!(read_float(&fpath).unwrap(), r);
    assert_eq!(std::fs::metadata(&fpath).unwrap().len(), 16);

    let g = GaussianPrimitive {
        mu: Vec3::new(1.0, 2.0, 3.0),
        q: Quat::IDENTITY,
        sigma: Vec3::splat(0.25),
        alpha: 0.5,
        sh: Sh1::from_rgb([0.25, 0.5, 0.75]),
        src_node: 4,
        src_dir: Vec3::Z,
        room: 2,
    };
    let cpath = dir.path().join("c.bin");
    write_cache(&cpath, std::slice::from_ref(&g)).unwrap();
    assert_eq!(std::fs::metadata(&cpath).unwrap().len(), 16 + 112);
    let back = read_cache(&cpath).unwrap();
    assert_eq!(back[0].mu, g.mu);
    assert_eq!(back[0].src_dir, g.src_dir);
    assert!(read_cache(&dir.path().join("missing.bin")).is_err());
}

#[test]
fn text_lines_round_trip() {
    let s = UpdateStats { added: 5, merged: 7, pruned: 1, candidate_tests: 99, total: 11 };
    assert_eq!(parse_stats_line(&stats_line(3, &s)), Some((3, s)));
    assert_eq!(parse_stats_line("node=1 bogus=2"), None);
    assert_eq!(parse_mean_psnr("base node=0\nmean psnr=41.5000 pairs=3\n"), Some(41.5));
}

#[test]
fn config_defaults_and_overrides() {
    let c = TourConfig::from_toml("seed = 3\nwidth = 256\nheight = 128\n").unwrap();
    assert_eq!((c.seed, c.width, c.height, c.k_same, c.k_door), (3, 256, 128, 3, 1));
    assert!(TourConfig::from_toml("no_such_field = 1").is_err());
    let mut bad = c.clone();
    bad.height = 100;
    assert!(bad.validate().is_err());
    let mut bad = c;
    bad.tau_d = 0.0;
    assert!(bad.validate().is_err());
}
