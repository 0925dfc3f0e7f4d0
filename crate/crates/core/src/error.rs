use alloc::string::String;
use core::fmt;

use crate::scenegraph::{NodeId, RoomId};

/// Errors raised by the core kernels.
#[derive(Clone, Debug, PartialEq)]
pub enum Error {
    /// The floorplan failed validation.
    InvalidFloorplan(String),
    /// A point is not inside any room polygon.
    OutsideRooms { x: f64, y: f64 },
    /// A camera pose is outside the shell.
    PoseOutsideShell,
    UnknownNode(NodeId),
    UnknownRoom(RoomId),
    DisconnectedGraph,
    InvalidArgument(String),
    PixelOutOfRange { x: usize, y: usize, width: usize, height: usize },
    /// Projection of a point that coincides with the camera center.
    DegenerateProjection,
    ShapeMismatch(String),
    MissingDepth,
    IncompatiblePair,
    /// A raster was produced at a different pose or by the wrong code path.
    GuidanceMismatch(String),
    /// Every evaluation region was rejected for lack of co-visible samples.
    NoCovisibleSamples,
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::InvalidFloorplan(m) => write!(f, "invalid floorplan: {m}"),
            Error::OutsideRooms { x, y } => write!(f, "point ({x}, {y}) is not inside any room"),
            Error::PoseOutsideShell => f.write_str("pose lies outside the shell"),
            Error::UnknownNode(id) => write!(f, "unknown node {id}"),
            Error::UnknownRoom(id) => write!(f, "unknown room {id}"),
            Error::DisconnectedGraph => f.write_str("node graph is not connected"),
            Error::InvalidArgument(m) => write!(f, "invalid argument: {m}"),
            Error::PixelOutOfRange { x, y, width, height } => {
                write!(f, "pixel ({x}, {y}) outside {width}x{height}")
            }
            Error::DegenerateProjection => f.write_str("point coincides with the camera center"),
            Error::ShapeMismatch(m) => write!(f, "shape mismatch: {m}"),
            Error::MissingDepth => f.write_str("panorama has no depth channel"),
            Error::IncompatiblePair => f.write_str("primitives are not merge-compatible"),
            Error::GuidanceMismatch(m) => write!(f, "guidance mismatch: {m}"),
            Error::NoCovisibleSamples => {
                f.write_str("no region has co-visible samples in any evaluated node")
            }
        }
    }
}

impl core::error::Error for Error {}

pub type Result<T, E = Error> = core::result::Result<T, E>;
