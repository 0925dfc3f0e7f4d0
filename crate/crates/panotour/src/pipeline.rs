//! Node-by-node tour generation: proxy, memory, generation, lifting and
//! cache update for each node in breadth-first order from the start node.

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use log::{info, warn};
use panotour_core::cache::{filter_memory, CacheParams, GaussianCache, UpdateStats};
use panotour_core::evalmetrics::{auto_regions, overlap_psnr, OverlapReport};
use panotour_core::gaussians::{lift_pano, render_pano, PanoImage};
use panotour_core::oracle::{oracle_generate, TextureSeed};
use panotour_core::scenegraph::{
    build_node_graph, build_shell, insert_auxiliary_nodes, select_context, select_start_node, shell_render,
    FloorplanSpec, NodeGraph, NodeId, NodeKind, PanoPose, ShellScene,
};
use serde::{Deserialize, Serialize};

use crate::error::{io_err, Error, Result};
use crate::{cachefile, raster, scene, text};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TourConfig {
    pub scene: PathBuf,
    pub output: PathBuf,
    /// Texture seed.
    pub seed: u64,
    pub width: usize,
    pub height: usize,
    /// Longest allowed navigation edge before auxiliary nodes are inserted.
    pub max_spacing: f64,
    pub k_same: usize,
    pub k_door: usize,
    pub tau_mu: f64,
    pub tau_v: f64,
    pub tau_d: f64,
    pub alpha_min: f64,
    pub cell: f64,
    pub lift_stride: usize,
    /// Stop after this many nodes; 0 visits the whole graph.
    pub max_nodes: usize,
    /// When false, no memory image is rendered and every node is generated
    /// from the shell alone.
    pub use_cache: bool,
    pub eval_overlap: bool,
    /// Write `cache_<id>.bin` after every node.
    pub snapshots: bool,
    pub texture_scale: f64,
    pub texture_amplitude: f64,
    /// Per-node color offset of freshly generated pixels, 8-bit levels.
    pub drift: f64,
    /// Render background for memory images.
    pub background: [u8; 3],
}

impl Default for TourConfig {
    fn default() -> Self {
        let c = CacheParams::default();
        let t = TextureSeed::new(0);
        TourConfig {
            scene: PathBuf::from("scene.toml"),
            output: PathBuf::from("out"),
            seed: 0,
            width: 512,
            height: 256,
            max_spacing: 1.0,
            k_same: 3,
            k_door: 1,
            tau_mu: c.tau_mu,
            tau_v: c.tau_v,
            tau_d: c.tau_d,
            alpha_min: c.alpha_min,
            cell: c.cell,
            lift_stride: 1,
            max_nodes: 0,
            use_cache: true,
            eval_overlap: true,
            snapshots: false,
            texture_scale: t.pattern_scale,
            texture_amplitude: t.amplitude,
            drift: 8.0,
            background: [128, 128, 128],
        }
    }
}

impl TourConfig {
    pub fn from_toml(text: &str) -> Result<Self, String> {
        toml::from_str(text).map_err(|e| e.message().to_string())
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(io_err(path))?;
        Self::from_toml(&text).map_err(|message| Error::Parse { path: path.to_path_buf(), message })
    }

    pub fn cache_params(&self) -> CacheParams {
        CacheParams { tau_mu: self.tau_mu, tau_v: self.tau_v, tau_d: self.tau_d, alpha_min: self.alpha_min, cell: self.cell }
    }

    pub fn texture(&self) -> TextureSeed {
        let mut t = TextureSeed::new(self.seed);
        t.pattern_scale = self.texture_scale;
        t.amplitude = self.texture_amplitude;
        t.drift = self.drift;
        t
    }

    pub fn validate(&self) -> Result<()> {
        if self.height == 0 || self.width != 2 * self.height {
            return Err(Error::Config(format!("resolution {}x{} must be 2:1", self.width, self.height)));
        }
        if self.lift_stride == 0 {
            return Err(Error::Config("lift_stride must be at least 1".into()));
        }
        if !(self.texture_scale > 0.0) || self.texture_amplitude < 0.0 || self.drift < 0.0 {
            return Err(Error::Config("texture parameters must be positive".into()));
        }
        self.cache_params().validate().map_err(|e| Error::Config(e.to_string()))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct NodeRecord {
    pub id: NodeId,
    pub room: u32,
    pub position: [f64; 3],
    pub context: Vec<NodeId>,
    pub nearby: Option<NodeId>,
    pub memory_pixels: usize,
    pub added: usize,
    pub merged: usize,
    pub pruned: usize,
    pub total: usize,
}

#[derive(Clone, Debug)]
pub struct TourReport {
    pub start: NodeId,
    pub nodes: Vec<NodeRecord>,
    pub stats: Vec<UpdateStats>,
    pub cache_size: usize,
    pub overlap: Option<OverlapReport>,
}

#[derive(Serialize)]
struct Manifest<'a> {
    start: NodeId,
    width: usize,
    height: usize,
    cache_size: usize,
    overlap_mean_psnr: Option<f64>,
    nodes: &'a [NodeRecord],
}

/// Shell and navigation graph for a floorplan, with auxiliary nodes.
pub fn plan(spec: &FloorplanSpec, max_spacing: f64) -> Result<(ShellScene, NodeGraph)> {
    let shell = build_shell(spec)?;
    let graph = build_node_graph(&shell, max_spacing)?;
    let graph = insert_auxiliary_nodes(&graph, &shell, max_spacing, false)?;
    Ok((shell, graph))
}

/// Nearest generated node in the same room, else the nearest generated
/// boundary node; ties by id.
fn nearby_node(graph: &NodeGraph, node: NodeId, generated: &BTreeSet<NodeId>) -> Option<NodeId> {
    let me = graph.node(node).ok()?;
    let nearest = |pred: &dyn Fn(&panotour_core::scenegraph::Node) -> bool| {
        graph
            .nodes
            .iter()
            .filter(|n| n.id != node && generated.contains(&n.id) && pred(n))
            .map(|n| (n.pose.position.distance(me.pose.position), n.id))
            .min_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)))
            .map(|e| e.1)
    };
    nearest(&|n| n.room == me.room).or_else(|| nearest(&|n| n.is_boundary()))
}

pub fn run_tour(config: &TourConfig) -> Result<TourReport> {
    let spec = scene::read_scene(&config.scene)?;
    run_tour_with_scene(&spec, config)
}

pub fn run_tour_with_scene(spec: &FloorplanSpec, config: &TourConfig) -> Result<TourReport> {
    config.validate()?;
    let (w, h) = (config.width, config.height);
    let params = config.cache_params();
    let tex = config.texture();
    let out = config.output.as_path();
    std::fs::create_dir_all(out).map_err(io_err(out))?;

    let (shell, graph) = plan(spec, config.max_spacing)?;
    let targets: Vec<NodeId> = graph.nodes.iter().filter(|n| n.kind == NodeKind::Target).map(|n| n.id).collect();
    let start = select_start_node(&graph, &targets)?;
    let mut order = graph.bfs_order(start)?;
    if config.max_nodes > 0 {
        order.truncate(config.max_nodes);
    }
    info!("{} nodes planned, visiting {} from node {start}", graph.nodes.len(), order.len());

    let mut cache = GaussianCache::new(params.cell);
    let mut generated: BTreeSet<NodeId> = BTreeSet::new();
    let mut panos: Vec<(PanoImage, PanoPose)> = Vec::new();
    let mut records = Vec::new();
    let mut all_stats = Vec::new();
    let mut stats_log = String::new();

    for &id in &order {
        let node = graph.node(id)?;
        let pose = node.pose;
        let stage = |stage: &'static str| move |source| Error::Stage { node: id, stage, source };

        let proxy = shell_render(&shell, &pose, w, h).map_err(stage("shell render"))?;
        let memory = if config.use_cache && !generated.is_empty() {
            let raw = render_pano(&cache.snapshot(), &pose, w, h, config.background).map_err(stage("memory render"))?;
            Some(filter_memory(&raw, &proxy.depth, params.tau_d).map_err(stage("memory filter"))?)
        } else {
            None
        };
        let nearby = nearby_node(&graph, id, &generated);
        let nearby_img = nearby.and_then(|n| order.iter().position(|&o| o == n)).map(|i| &panos[i].0);
        let pano = oracle_generate(&shell, &tex, &proxy, memory.as_ref(), nearby_img, &pose)
            .map_err(stage("generation"))?;
        let context = select_context(&graph, id, &generated, config.k_same, config.k_door)
            .map_err(stage("context selection"))?;

        let mut delta = lift_pano(&pano, &pose, config.lift_stride, id, node.room).map_err(stage("lift"))?;
        for g in &mut delta {
            g.room = shell.label_point([g.mu.x, g.mu.y]).unwrap_or(node.room);
        }
        let stats = cache.update(&delta, &params);

        let stem = format!("{id:04}");
        raster::write_color(&out.join(format!("pano_{stem}.png")), &pano)?;
        raster::write_float(
            &out.join(format!("pano_{stem}_depth.f32")),
            &raster::depth_raster(w, h, pano.depth.iter().flatten().copied()),
        )?;
        raster::write_proxy(out, &format!("proxy_{stem}"), &proxy)?;
        if let Some(m) = &memory {
            raster::write_color(&out.join(format!("memory_{stem}.png")), m)?;
        }
        if config.snapshots {
            cachefile::write_cache(&out.join(format!("cache_{stem}.bin")), cache.primitives())?;
        }

        let memory_pixels = memory.as_ref().map_or(0, |m| (0..m.valid.len()).filter(|&i| m.is_memory(i)).count());
        info!(
            "node {id}: memory {memory_pixels} px, +{} merged {} pruned {} -> {}",
            stats.added, stats.merged, stats.pruned, stats.total
        );
        stats_log.push_str(&text::stats_line(id, &stats));
        stats_log.push('\n');
        let p = pose.position;
        records.push(NodeRecord {
            id,
            room: node.room,
            position: [p.x, p.y, p.z],
            context,
            nearby,
            memory_pixels,
            added: stats.added,
            merged: stats.merged,
            pruned: stats.pruned,
            total: stats.total,
        });
        all_stats.push(stats);
        generated.insert(id);
        panos.push((pano, pose));
    }

    cachefile::write_cache(&out.join("cache_final.bin"), cache.primitives())?;
    let stats_path = out.join("stats.log");
    std::fs::write(&stats_path, &stats_log).map_err(io_err(&stats_path))?;

    let overlap = if config.eval_overlap && panos.len() >= 2 {
        let regions = auto_regions(&shell);
        let refs: Vec<(&PanoImage, PanoPose)> = panos.iter().map(|(p, q)| (p, *q)).collect();
        match overlap_psnr(&shell, &refs, &regions, 0) {
            Ok(report) => {
                for (n, r) in &report.excluded {
                    warn!("region {r} has no co-visible samples for node {}", order[*n]);
                }
                let path = out.join("overlap.txt");
                std::fs::write(&path, text::overlap_report(&report, &order)).map_err(io_err(&path))?;
                Some(report)
            }
            Err(e) => {
                warn!("overlap evaluation skipped: {e}");
                None
            }
        }
    } else {
        None
    };

    let manifest = Manifest {
        start,
        width: w,
        height: h,
        cache_size: cache.len(),
        overlap_mean_psnr: overlap.as_ref().map(|o| o.mean_psnr),
        nodes: &records,
    };
    let path = out.join("tour.toml");
    let text = toml::to_string(&manifest).map_err(|e| Error::Config(e.to_string()))?;
    std::fs::write(&path, text).map_err(io_err(&path))?;

    Ok(TourReport { start, nodes: records, stats: all_stats, cache_size: cache.len(), overlap })
}
