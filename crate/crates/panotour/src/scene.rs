//! TOML scene files.
//!
//! ```toml
//! wall_height = 2.8        # meters
//! wall_thickness = 0.2     # full thickness, optional (default 0)
//! camera_height = 1.5      # optional (default 1.5)
//! targets = [[2.0, 2.0]]   # target node positions on the floor plane
//!
//! [[rooms]]
//! id = 0
//! label = "kitchen"        # optional
//! polygon = [[0.0, 0.0], [4.0, 0.0], [4.0, 4.0], [0.0, 4.0]]  # counter-clockwise
//!
//! [[doorways]]
//! rooms = [0, 1]
//! segment = [[4.0, 1.5], [4.0, 2.5]]
//! height = 2.1
//! ```

use std::path::Path;

use panotour_core::scenegraph::{DoorwaySpec, FloorplanSpec, RoomSpec, DEFAULT_CAMERA_HEIGHT};
use serde::{Deserialize, Serialize};

use crate::error::{io_err, Error, Result};

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SceneFile {
    wall_height: f64,
    #[serde(default)]
    wall_thickness: f64,
    #[serde(default = "default_camera_height")]
    camera_height: f64,
    #[serde(default, alias = "nodes")]
    targets: Vec<[f64; 2]>,
    rooms: Vec<RoomEntry>,
    #[serde(default)]
    doorways: Vec<DoorwayEntry>,
}

fn default_camera_height() -> f64 {
    DEFAULT_CAMERA_HEIGHT
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RoomEntry {
    id: u32,
    #[serde(default)]
    label: String,
    polygon: Vec<[f64; 2]>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct DoorwayEntry {
    rooms: [u32; 2],
    segment: Vec<[f64; 2]>,
    height: f64,
}

pub fn to_toml(spec: &FloorplanSpec) -> String {
    let file = SceneFile {
        wall_height: spec.wall_height,
        wall_thickness: spec.wall_thickness,
        camera_height: spec.camera_height,
        targets: spec.targets.clone(),
        rooms: spec
            .rooms
            .iter()
            .map(|r| RoomEntry { id: r.id, label: r.label.clone(), polygon: r.polygon.clone() })
            .collect(),
        doorways: spec
            .doorways
            .iter()
            .map(|d| DoorwayEntry { rooms: [d.rooms.0, d.rooms.1], segment: d.segment.to_vec(), height: d.height })
            .collect(),
    };
    toml::to_string(&file).expect("scene values are always representable")
}

pub fn from_toml(text: &str) -> Result<FloorplanSpec, String> {
    let file: SceneFile = toml::from_str(text).map_err(|e| e.message().to_string())?;
    Ok(FloorplanSpec {
        rooms: file
            .rooms
            .into_iter()
            .map(|r| RoomSpec { id: r.id, polygon: r.polygon, label: r.label })
            .collect(),
        doorways: file
            .doorways
            .into_iter()
            .map(|d| match d.segment[..] {
                [a, b] => Ok(DoorwaySpec { rooms: (d.rooms[0], d.rooms[1]), segment: [a, b], height: d.height }),
                _ => Err(format!("doorway segment needs 2 endpoints, found {}", d.segment.len())),
            })
            .collect::<Result<_, _>>()?,
        wall_height: file.wall_height,
        wall_thickness: file.wall_thickness,
        camera_height: file.camera_height,
        targets: file.targets,
    })
}

pub fn read_scene(path: &Path) -> Result<FloorplanSpec> {
    let text = std::fs::read_to_string(path).map_err(io_err(path))?;
    from_toml(&text).map_err(|message| Error::Parse { path: path.to_path_buf(), message })
}

pub fn write_scene(path: &Path, spec: &FloorplanSpec) -> Result<()> {
    std::fs::write(path, to_toml(spec)).map_err(io_err(path))
}
