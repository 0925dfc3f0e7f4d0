//! Command-line front end. Exit codes: 0 on success, 1 on a runtime error
//! (reported as a single `error: ...` line on stderr), 2 on a usage error.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use panotour_core::evalmetrics::{auto_regions, depth_loss, overlap_psnr};
use panotour_core::gaussians::{render_pano, PanoImage};
use panotour_core::oracle::gen_scene;
use panotour_core::panocam::cprope_table;
use panotour_core::scenegraph::{build_shell, NodeId, PanoPose};
use panotour_core::{Quat, Vec3};
use serde::Deserialize;

use crate::error::{io_err, Error, Result};
use crate::pipeline::{plan, run_tour, TourConfig};
use crate::{cachefile, raster, scene, text};

#[derive(Debug, Parser)]
#[command(name = "panotour", version, about = "Panoramic whole-house tour generation with a progressive Gaussian cache")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a procedural multi-room scene file.
    GenScene {
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Number of rooms (1 to 8).
        #[arg(long, default_value_t = 3)]
        rooms: usize,
        /// Output scene file.
        #[arg(short, long)]
        output: PathBuf,
    },
    /// Build the shell and navigation graph and dump the nodes and edges.
    Plan {
        #[arg(long)]
        scene: PathBuf,
        /// Longest edge before auxiliary nodes are inserted, meters.
        #[arg(long, default_value_t = 1.0)]
        max_spacing: f64,
        /// Graph dump path; stdout when omitted.
        #[arg(short, long)]
        output: Option<PathBuf>,
        /// Also write the circular rotary table as a raw float raster.
        #[arg(long)]
        cprope_out: Option<PathBuf>,
        /// Token columns of the rotary table.
        #[arg(long, default_value_t = 64)]
        cprope_width: usize,
        /// Harmonic pairs of the rotary table.
        #[arg(long, default_value_t = 8)]
        cprope_pairs: usize,
    },
    /// Generate a full tour.
    Run(RunArgs),
    /// Render a cache file at a pose.
    RenderCache {
        #[arg(long)]
        cache: PathBuf,
        /// Camera position as `x,y,z` in meters.
        #[arg(long, value_parser = parse_vec3, allow_hyphen_values = true)]
        position: Vec3,
        /// Camera yaw in degrees about +z.
        #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
        yaw: f64,
        #[arg(long, default_value_t = 512)]
        width: usize,
        #[arg(long, default_value_t = 256)]
        height: usize,
        /// Output color PNG.
        #[arg(short, long)]
        output: PathBuf,
        /// Optional raw float depth output.
        #[arg(long)]
        depth_out: Option<PathBuf>,
    },
    /// Overlap PSNR between panoramas of one scene.
    EvalOverlap {
        #[arg(long)]
        scene: PathBuf,
        /// Tour output directory; reads `tour.toml` and `pano_*.png`.
        #[arg(long)]
        run: Option<PathBuf>,
        /// Panorama PNG; repeat together with `--pose`.
        #[arg(long)]
        pano: Vec<PathBuf>,
        /// Camera position `x,y,z` of the matching `--pano`.
        #[arg(long, value_parser = parse_vec3, allow_hyphen_values = true)]
        pose: Vec<Vec3>,
        /// Index of the reference panorama.
        #[arg(long, default_value_t = 0)]
        base: usize,
        /// Report path; stdout when omitted.
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Depth losses between two raw float depth rasters.
    Losses {
        #[arg(long)]
        pred: PathBuf,
        #[arg(long)]
        target: PathBuf,
    },
}

#[derive(Debug, Args)]
pub struct RunArgs {
    /// Scene file; overrides the config file.
    #[arg(long)]
    pub scene: Option<PathBuf>,
    /// TOML file with `TourConfig` fields; flags override it.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Output directory.
    #[arg(short, long)]
    pub output: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub width: Option<usize>,
    #[arg(long)]
    pub height: Option<usize>,
    #[arg(long)]
    pub max_spacing: Option<f64>,
    /// Stop after this many nodes (0 = all).
    #[arg(long)]
    pub max_nodes: Option<usize>,
    #[arg(long)]
    pub lift_stride: Option<usize>,
    /// Generate without memory images.
    #[arg(long)]
    pub no_cache: bool,
    /// Skip the overlap evaluation.
    #[arg(long)]
    pub no_eval: bool,
    /// Write a cache snapshot after every node.
    #[arg(long)]
    pub snapshots: bool,
}

fn parse_vec3(s: &str) -> Result<Vec3, String> {
    let v: Vec<f64> = s.split(',').map(|p| p.trim().parse::<f64>().map_err(|e| e.to_string())).collect::<Result<_, _>>()?;
    match v[..] {
        [x, y, z] => Ok(Vec3::new(x, y, z)),
        _ => Err(format!("expected x,y,z, got {s:?}")),
    }
}

impl RunArgs {
    pub fn to_config(&self) -> Result<TourConfig> {
        let mut c = match &self.config {
            Some(p) => TourConfig::read(p)?,
            None => TourConfig::default(),
        };
        if let Some(v) = &self.scene {
            c.scene = v.clone();
        }
        if let Some(v) = &self.output {
            c.output = v.clone();
        }
        if let Some(v) = self.seed {
            c.seed = v;
        }
        if let Some(v) = self.width {
            c.width = v;
        }
        if let Some(v) = self.height {
            c.height = v;
        }
        if let Some(v) = self.max_spacing {
            c.max_spacing = v;
        }
        if let Some(v) = self.max_nodes {
            c.max_nodes = v;
        }
        if let Some(v) = self.lift_stride {
            c.lift_stride = v;
        }
        c.use_cache &= !self.no_cache;
        c.eval_overlap &= !self.no_eval;
        c.snapshots |= self.snapshots;
        Ok(c)
    }
}

fn write_or_print(path: Option<&Path>, body: &str) -> Result<()> {
    match path {
        Some(p) => std::fs::write(p, body).map_err(io_err(p)),
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(body.as_bytes()).map_err(io_err(Path::new("<stdout>")))
        }
    }
}

#[derive(Deserialize)]
struct ManifestNode {
    id: NodeId,
    position: [f64; 3],
}

#[derive(Deserialize)]
struct ManifestFile {
    nodes: Vec<ManifestNode>,
}

fn load_run(dir: &Path) -> Result<(Vec<NodeId>, Vec<(PanoImage, PanoPose)>)> {
    let path = dir.join("tour.toml");
    let body = std::fs::read_to_string(&path).map_err(io_err(&path))?;
    let manifest: ManifestFile =
        toml::from_str(&body).map_err(|e| Error::Parse { path: path.clone(), message: e.message().to_string() })?;
    let mut ids = Vec::new();
    let mut panos = Vec::new();
    for n in manifest.nodes {
        let img = raster::read_color(&dir.join(format!("pano_{:04}.png", n.id)))?;
        panos.push((img, PanoPose::at(Vec3::from_array(n.position))));
        ids.push(n.id);
    }
    Ok((ids, panos))
}

pub fn execute(command: Command) -> Result<()> {
    match command {
        Command::GenScene { seed, rooms, output } => scene::write_scene(&output, &gen_scene(seed, rooms)?),
        Command::Plan { scene: path, max_spacing, output, cprope_out, cprope_width, cprope_pairs } => {
            let spec = scene::read_scene(&path)?;
            let (_, graph) = plan(&spec, max_spacing)?;
            if let Some(p) = cprope_out {
                let table = cprope_table(cprope_width, cprope_pairs, 1, 0)?;
                raster::write_float(&p, &raster::cprope_raster(&table))?;
            }
            write_or_print(output.as_deref(), &text::graph_dump(&graph))
        }
        Command::Run(args) => {
            let config = args.to_config()?;
            let report = run_tour(&config)?;
            let mut line = format!("nodes={} cache={}", report.nodes.len(), report.cache_size);
            if let Some(o) = &report.overlap {
                line.push_str(&format!(" overlap_psnr={:.4}", o.mean_psnr));
            }
            println!("{line}");
            Ok(())
        }
        Command::RenderCache { cache, position, yaw, width, height, output, depth_out } => {
            let gaussians = cachefile::read_cache(&cache)?;
            let pose = PanoPose::new(position, Quat::from_yaw(yaw.to_radians()))?;
            let img = render_pano(&gaussians, &pose, width, height, [255, 255, 255])?;
            raster::write_color(&output, &img)?;
            if let Some(p) = depth_out {
                raster::write_float(&p, &raster::depth_raster(width, height, img.depth.iter().flatten().copied()))?;
            }
            Ok(())
        }
        Command::EvalOverlap { scene: path, run, pano, pose, base, output } => {
            let shell = build_shell(&scene::read_scene(&path)?)?;
            let (labels, panos) = match run {
                Some(dir) => load_run(&dir)?,
                None => {
                    if pano.len() != pose.len() {
                        return Err(Error::Config("each --pano needs a matching --pose".into()));
                    }
                    let mut v = Vec::new();
                    for (p, q) in pano.iter().zip(&pose) {
                        v.push((raster::read_color(p)?, PanoPose::at(*q)));
                    }
                    ((0..v.len() as NodeId).collect(), v)
                }
            };
            let refs: Vec<(&PanoImage, PanoPose)> = panos.iter().map(|(a, b)| (a, *b)).collect();
            let report = overlap_psnr(&shell, &refs, &auto_regions(&shell), base)?;
            write_or_print(output.as_deref(), &text::overlap_report(&report, &labels))
        }
        Command::Losses { pred, target } => {
            let (p, t) = (raster::read_float(&pred)?, raster::read_float(&target)?);
            let to64 = |r: &raster::FloatRaster| r.data.iter().map(|&v| f64::from(v)).collect::<Vec<_>>();
            let l = depth_loss(&to64(&p), &to64(&t))?;
            println!("log_l1={:.9} scale_invariant={:.9}", l.log_l1, l.scale_invariant);
            Ok(())
        }
    }
}

/// Parses `args` and runs the command, returning the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    match execute(cli.command) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {}", e.to_string().replace('\n', " "));
            1
        }
    }
}
