//! Floorplan ingestion, shell extrusion, navigation graph and shell proxy
//! rendering.
//!
//! World frame is right-handed, z-up, in meters. Room polygons describe wall
//! centerlines; the extruded shell insets every room by half the wall
//! thickness so the two faces of a shared wall are `wall_thickness` apart.

mod bvh;
pub(crate) mod geom2d;
mod graph;
mod render;

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

pub use bvh::{intersect_triangle, Aabb, Bvh};
pub use geom2d::P2;
pub use graph::{
    build_node_graph, insert_auxiliary_nodes, select_context, select_start_node, Node, NodeGraph,
    NodeKind, BOUNDARY_RADIUS, DOORWAY_NODE_OFFSET,
};
pub use render::{shell_render, GeometricProxy, Semantic};

use crate::error::{Error, Result};
use crate::math::{Quat, Vec3};
use geom2d::{contains_closed, contains_strict, dist, dot, sub, EPS};

pub type RoomId = u32;
pub type NodeId = u32;

pub const DEFAULT_CAMERA_HEIGHT: f64 = 1.5;
pub const MAX_WALL_THICKNESS: f64 = 0.3;

#[derive(Clone, Debug, PartialEq)]
pub struct RoomSpec {
    pub id: RoomId,
    pub polygon: Vec<P2>,
    pub label: String,
}

#[derive(Clone, Debug, PartialEq)]
pub struct DoorwaySpec {
    pub rooms: (RoomId, RoomId),
    pub segment: [P2; 2],
    /// Opening height in meters, measured from the floor.
    pub height: f64,
}

/// Raw floorplan as read from a scene file.
#[derive(Clone, Debug, PartialEq)]
pub struct FloorplanSpec {
    pub rooms: Vec<RoomSpec>,
    pub doorways: Vec<DoorwaySpec>,
    pub wall_height: f64,
    /// Full wall thickness; zero gives infinitely thin walls.
    pub wall_thickness: f64,
    pub camera_height: f64,
    /// Target panorama positions in the floor plane.
    pub targets: Vec<P2>,
}

impl FloorplanSpec {
    /// One axis-aligned `width x depth` room with its corner at the origin.
    pub fn single_room(width: f64, depth: f64, wall_height: f64) -> Self {
        FloorplanSpec {
            rooms: alloc::vec![RoomSpec {
                id: 0,
                polygon: alloc::vec![[0.0, 0.0], [width, 0.0], [width, depth], [0.0, depth]],
                label: String::from("room"),
            }],
            doorways: Vec::new(),
            wall_height,
            wall_thickness: 0.0,
            camera_height: DEFAULT_CAMERA_HEIGHT,
            targets: Vec::new(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum SurfaceClass {
    Wall,
    Floor,
    Ceiling,
    Opening,
}

impl SurfaceClass {
    pub fn code(self) -> u8 {
        match self {
            SurfaceClass::Wall => 0,
            SurfaceClass::Floor => 1,
            SurfaceClass::Ceiling => 2,
            SurfaceClass::Opening => 3,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Triangle {
    pub vertices: [Vec3; 3],
    pub class: SurfaceClass,
    pub room: RoomId,
    /// Unit normal pointing out of the room volume.
    pub normal: Vec3,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Room {
    pub id: RoomId,
    /// Counter-clockwise centerline polygon.
    pub polygon: Vec<P2>,
    /// Counter-clockwise interior polygon after wall inset.
    pub interior: Vec<P2>,
    pub label: String,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Doorway {
    pub rooms: (RoomId, RoomId),
    pub segment: [P2; 2],
    pub height: f64,
}

impl Doorway {
    pub fn width(&self) -> f64 {
        dist(self.segment[0], self.segment[1])
    }

    pub fn midpoint(&self) -> P2 {
        let [a, b] = self.segment;
        [(a[0] + b[0]) * 0.5, (a[1] + b[1]) * 0.5]
    }

    pub fn connects(&self, a: RoomId, b: RoomId) -> bool {
        self.rooms == (a, b) || self.rooms == (b, a)
    }

    pub fn touches(&self, room: RoomId) -> bool {
        self.rooms.0 == room || self.rooms.1 == room
    }

    pub fn distance_to(&self, p: P2) -> f64 {
        geom2d::point_segment_distance(p, self.segment[0], self.segment[1])
    }
}

/// The extruded, untextured house shell.
#[derive(Clone, Debug)]
pub struct ShellScene {
    pub rooms: Vec<Room>,
    pub doorways: Vec<Doorway>,
    pub wall_height: f64,
    pub wall_thickness: f64,
    pub camera_height: f64,
    pub targets: Vec<P2>,
    pub triangles: Vec<Triangle>,
    pub bounds: Aabb,
    verts: Vec<[Vec3; 3]>,
    bvh: Bvh,
}

/// Nearest shell surface along a ray.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ShellHit {
    pub distance: f64,
    pub triangle: usize,
    /// An opening lies in front of the hit surface.
    pub through_opening: bool,
}

impl ShellScene {
    pub fn room(&self, id: RoomId) -> Option<&Room> {
        self.rooms.iter().find(|r| r.id == id)
    }

    /// Nearest occluding triangle; openings are transparent.
    pub fn cast(&self, origin: Vec3, dir: Vec3) -> Option<ShellHit> {
        let tris = &self.triangles;
        let (t, i) =
            self.bvh.closest(&self.verts, origin, dir, |i| tris[i].class != SurfaceClass::Opening)?;
        let through_opening = self
            .bvh
            .closest(&self.verts, origin, dir, |i| tris[i].class == SurfaceClass::Opening)
            .is_some_and(|(to, _)| to < t);
        Some(ShellHit { distance: t, triangle: i, through_opening })
    }

    /// Room whose centerline polygon contains `p`; boundary points resolve to
    /// the lowest room id.
    pub fn label_point(&self, p: P2) -> Result<RoomId> {
        self.rooms
            .iter()
            .filter(|r| contains_closed(&r.polygon, p))
            .map(|r| r.id)
            .min()
            .ok_or(Error::OutsideRooms { x: p[0], y: p[1] })
    }

    /// True when a camera at `p` sits in free space: inside the floorplan and
    /// strictly between floor and ceiling.
    pub fn contains(&self, p: Vec3) -> bool {
        p.z > 0.0 && p.z < self.wall_height && self.label_point([p.x, p.y]).is_ok()
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PanoPose {
    pub position: Vec3,
    /// World-from-camera rotation.
    pub rotation: Quat,
}

impl PanoPose {
    pub fn new(position: Vec3, rotation: Quat) -> Result<Self> {
        if (rotation.norm() - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidArgument(format!(
                "pose quaternion norm {} is not 1",
                rotation.norm()
            )));
        }
        Ok(Self { position, rotation })
    }

    pub fn at(position: Vec3) -> Self {
        Self { position, rotation: Quat::IDENTITY }
    }

    pub fn forward(&self) -> Vec3 {
        self.rotation.rotate(Vec3::X)
    }
}

/// Returns the room containing the horizontal projection of the pose.
pub fn label_pose_room(shell: &ShellScene, pose: &PanoPose) -> Result<RoomId> {
    shell.label_point([pose.position.x, pose.position.y])
}

fn invalid(msg: String) -> Error {
    Error::InvalidFloorplan(msg)
}

fn edge_holding(poly: &[P2], seg: [P2; 2]) -> Option<usize> {
    let n = poly.len();
    (0..n).find(|&i| {
        let (a, b) = (poly[i], poly[(i + 1) % n]);
        seg.iter().all(|&p| geom2d::point_segment_distance(p, a, b) <= 1e-6)
    })
}

fn validate(spec: &FloorplanSpec) -> Result<(Vec<Room>, Vec<Doorway>)> {
    if spec.rooms.is_empty() {
        return Err(invalid("no rooms".into()));
    }
    if !(spec.wall_height > 0.0) {
        return Err(invalid(format!("wall height {} must be positive", spec.wall_height)));
    }
    if !(0.0..=MAX_WALL_THICKNESS).contains(&spec.wall_thickness) {
        return Err(invalid(format!(
            "wall thickness {} outside [0, {MAX_WALL_THICKNESS}]",
            spec.wall_thickness
        )));
    }
    if !(spec.camera_height > 0.0 && spec.camera_height < spec.wall_height) {
        return Err(invalid(format!("camera height {} outside the room", spec.camera_height)));
    }
    let mut rooms: Vec<Room> = Vec::with_capacity(spec.rooms.len());
    for r in &spec.rooms {
        if rooms.iter().any(|o| o.id == r.id) {
            return Err(invalid(format!("duplicate room id {}", r.id)));
        }
        if r.polygon.len() < 3 || r.polygon.iter().flatten().any(|c| !c.is_finite()) {
            return Err(invalid(format!("room {} needs at least 3 finite vertices", r.id)));
        }
        let mut poly = r.polygon.clone();
        let area = geom2d::signed_area(&poly);
        if area.abs() <= EPS {
            return Err(invalid(format!("room {} has zero area", r.id)));
        }
        if area < 0.0 {
            poly.reverse();
        }
        if !geom2d::is_simple(&poly) {
            return Err(invalid(format!("room {} polygon is self-intersecting", r.id)));
        }
        let interior = geom2d::inset(&poly, spec.wall_thickness * 0.5);
        if geom2d::signed_area(&interior) <= EPS || !geom2d::is_simple(&interior) {
            return Err(invalid(format!("room {} is too small for the wall thickness", r.id)));
        }
        rooms.push(Room { id: r.id, polygon: poly, interior, label: r.label.clone() });
    }
    rooms.sort_by_key(|r| r.id);

    for (i, a) in rooms.iter().enumerate() {
        for b in &rooms[i + 1..] {
            if polygons_overlap(&a.polygon, &b.polygon) {
                return Err(invalid(format!("rooms {} and {} overlap", a.id, b.id)));
            }
        }
    }

    let mut doorways = Vec::with_capacity(spec.doorways.len());
    for d in &spec.doorways {
        let (ra, rb) = d.rooms;
        if ra == rb {
            return Err(invalid(format!("doorway joins room {ra} to itself")));
        }
        let find = |id| rooms.iter().find(|r| r.id == id).ok_or(Error::UnknownRoom(id));
        let (a, b) = (find(ra)?, find(rb)?);
        let width = dist(d.segment[0], d.segment[1]);
        if !(width > EPS) {
            return Err(invalid(format!("doorway {ra}-{rb} has zero width")));
        }
        if !(d.height > 0.0 && d.height <= spec.wall_height) {
            return Err(invalid(format!("doorway {ra}-{rb} height {} out of range", d.height)));
        }
        if edge_holding(&a.polygon, d.segment).is_none()
            || edge_holding(&b.polygon, d.segment).is_none()
        {
            return Err(invalid(format!("doorway {ra}-{rb} is not on a shared wall")));
        }
        doorways.push(Doorway { rooms: d.rooms, segment: d.segment, height: d.height });
    }
    Ok((rooms, doorways))
}

fn polygons_overlap(a: &[P2], b: &[P2]) -> bool {
    let (na, nb) = (a.len(), b.len());
    for i in 0..na {
        for j in 0..nb {
            if geom2d::segments_cross(a[i], a[(i + 1) % na], b[j], b[(j + 1) % nb]) {
                return true;
            }
        }
    }
    let probes = |p: &[P2], q: &[P2]| {
        let n = p.len();
        let interior = geom2d::triangulate(p)
            .first()
            .map(|t| {
                let (x, y, z) = (p[t[0]], p[t[1]], p[t[2]]);
                [(x[0] + y[0] + z[0]) / 3.0, (x[1] + y[1] + z[1]) / 3.0]
            });
        (0..n).any(|i| {
            let m = [(p[i][0] + p[(i + 1) % n][0]) * 0.5, (p[i][1] + p[(i + 1) % n][1]) * 0.5];
            contains_strict(q, p[i]) || contains_strict(q, m)
        }) || interior.is_some_and(|c| contains_strict(q, c))
    };
    probes(a, b) || probes(b, a)
}

struct ShellBuilder {
    tris: Vec<Triangle>,
}

impl ShellBuilder {
    fn tri(&mut self, v: [Vec3; 3], class: SurfaceClass, room: RoomId, normal: Vec3) {
        self.tris.push(Triangle { vertices: v, class, room, normal });
    }

    fn quad(&mut self, q: [Vec3; 4], class: SurfaceClass, room: RoomId, normal: Vec3) {
        self.tri([q[0], q[1], q[2]], class, room, normal);
        self.tri([q[0], q[2], q[3]], class, room, normal);
    }
}

/// Extrudes a validated floorplan into floor, ceiling, wall, jamb and
/// opening triangles.
pub fn build_shell(spec: &FloorplanSpec) -> Result<ShellScene> {
    let (rooms, doorways) = validate(spec)?;
    let h = spec.wall_height;
    let half = spec.wall_thickness * 0.5;
    let mut b = ShellBuilder { tris: Vec::new() };

    for room in &rooms {
        let poly = &room.interior;
        for t in geom2d::triangulate(poly) {
            let at = |i: usize, z: f64| Vec3::new(poly[i][0], poly[i][1], z);
            b.tri([at(t[0], 0.0), at(t[2], 0.0), at(t[1], 0.0)], SurfaceClass::Floor, room.id, -Vec3::Z);
            b.tri([at(t[0], h), at(t[1], h), at(t[2], h)], SurfaceClass::Ceiling, room.id, Vec3::Z);
        }

        let n = poly.len();
        for i in 0..n {
            let (q0, q1) = (poly[i], poly[(i + 1) % n]);
            let e = sub(q1, q0);
            let len = dist(q0, q1);
            let u = [e[0] / len, e[1] / len];
            let out = Vec3::new(u[1], -u[0], 0.0);
            let uv = Vec3::new(u[0], u[1], 0.0);
            let base = Vec3::new(q0[0], q0[1], 0.0);
            let at = |s: f64, z: f64| base + uv * s + Vec3::new(0.0, 0.0, z);

            // Doorway intervals along this interior edge.
            let (c0, c1) = (room.polygon[i], room.polygon[(i + 1) % n]);
            let mut spans: Vec<(f64, f64, f64)> = doorways
                .iter()
                .filter(|d| d.touches(room.id))
                .filter(|d| {
                    d.segment.iter().all(|&p| geom2d::point_segment_distance(p, c0, c1) <= 1e-6)
                })
                .map(|d| {
                    let s0 = dot(sub(d.segment[0], q0), u).clamp(0.0, len);
                    let s1 = dot(sub(d.segment[1], q0), u).clamp(0.0, len);
                    (s0.min(s1), s0.max(s1), d.height)
                })
                .collect();
            spans.sort_by(|a, b| a.0.total_cmp(&b.0));

            let mut cursor = 0.0;
            for &(s0, s1, dh) in &spans {
                if s0 > cursor + EPS {
                    b.quad([at(cursor, 0.0), at(s0, 0.0), at(s0, h), at(cursor, h)], SurfaceClass::Wall, room.id, out);
                }
                b.quad([at(s0, 0.0), at(s1, 0.0), at(s1, dh), at(s0, dh)], SurfaceClass::Opening, room.id, out);
                if dh < h - EPS {
                    b.quad([at(s0, dh), at(s1, dh), at(s1, h), at(s0, h)], SurfaceClass::Wall, room.id, out);
                }
                if half > 0.0 {
                    // Jambs and lintel soffit reaching back to the wall centerline.
                    let deep = out * half;
                    b.quad([at(s0, 0.0), at(s0, 0.0) + deep, at(s0, dh) + deep, at(s0, dh)], SurfaceClass::Wall, room.id, -uv);
                    b.quad([at(s1, 0.0), at(s1, dh), at(s1, dh) + deep, at(s1, 0.0) + deep], SurfaceClass::Wall, room.id, uv);
                    if dh < h - EPS {
                        b.quad([at(s0, dh), at(s1, dh), at(s1, dh) + deep, at(s0, dh) + deep], SurfaceClass::Wall, room.id, Vec3::Z);
                    } else {
                        b.quad([at(s0, h), at(s1, h), at(s1, h) + deep, at(s0, h) + deep], SurfaceClass::Ceiling, room.id, Vec3::Z);
                    }
                    // threshold under the passage
                    b.quad([at(s0, 0.0), at(s0, 0.0) + deep, at(s1, 0.0) + deep, at(s1, 0.0)], SurfaceClass::Floor, room.id, -Vec3::Z);
                }
                cursor = s1;
            }
            if len > cursor + EPS {
                b.quad([at(cursor, 0.0), at(len, 0.0), at(len, h), at(cursor, h)], SurfaceClass::Wall, room.id, out);
            }
        }
    }

    let mut bounds = Aabb::EMPTY;
    for t in &b.tris {
        for v in &t.vertices {
            bounds.grow(*v);
        }
    }
    let verts: Vec<[Vec3; 3]> = b.tris.iter().map(|t| t.vertices).collect();
    let bvh = Bvh::build(&verts);
    Ok(ShellScene {
        rooms,
        doorways,
        wall_height: h,
        wall_thickness: spec.wall_thickness,
        camera_height: spec.camera_height,
        targets: spec.targets.clone(),
        triangles: b.tris,
        bounds,
        verts,
        bvh,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    pub(crate) fn two_rooms(door_width: f64, thickness: f64) -> FloorplanSpec {
        let c = 2.0;
        FloorplanSpec {
            rooms: vec![
                RoomSpec { id: 0, polygon: vec![[0.0, 0.0], [4.0, 0.0], [4.0, 4.0], [0.0, 4.0]], label: "a".into() },
                RoomSpec { id: 1, polygon: vec![[4.0, 0.0], [8.0, 0.0], [8.0, 4.0], [4.0, 4.0]], label: "b".into() },
            ],
            doorways: vec![DoorwaySpec {
                rooms: (0, 1),
                segment: [[4.0, c - door_width / 2.0], [4.0, c + door_width / 2.0]],
                height: 3.0,
            }],
            wall_height: 3.0,
            wall_thickness: thickness,
            camera_height: DEFAULT_CAMERA_HEIGHT,
            targets: vec![],
        }
    }

    fn count(shell: &ShellScene, class: SurfaceClass) -> usize {
        shell.triangles.iter().filter(|t| t.class == class).count()
    }

    #[test]
    fn single_room_triangle_counts() {
        let shell = build_shell(&FloorplanSpec::single_room(4.0, 4.0, 3.0)).unwrap();
        assert_eq!(count(&shell, SurfaceClass::Floor), 2);
        assert_eq!(count(&shell, SurfaceClass::Ceiling), 2);
        assert_eq!(count(&shell, SurfaceClass::Wall), 8);
        assert_eq!(count(&shell, SurfaceClass::Opening), 0);
        for t in &shell.triangles {
            assert!((t.normal.norm() - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn shared_wall_is_split_around_doorway() {
        let shell = build_shell(&two_rooms(1.0, 0.0)).unwrap();
        // Each room: 3 plain walls (6 tris) + shared wall split in two (4 tris).
        assert_eq!(count(&shell, SurfaceClass::Wall), 20);
        assert_eq!(count(&shell, SurfaceClass::Opening), 4);
        for t in shell.triangles.iter().filter(|t| t.class == SurfaceClass::Wall) {
            let on_shared = t.vertices.iter().all(|v| (v.x - 4.0).abs() < 1e-12);
            if on_shared {
                let (lo, hi) = t.vertices.iter().fold((f64::MAX, f64::MIN), |(lo, hi), v| (lo.min(v.y), hi.max(v.y)));
                assert!(hi <= 1.5 + 1e-12 || lo >= 2.5 - 1e-12, "wall triangle inside opening");
            }
        }
    }

    #[test]
    fn rejects_degenerate_doorway() {
        let err = build_shell(&two_rooms(0.0, 0.0)).unwrap_err();
        assert!(matches!(err, Error::InvalidFloorplan(_)));
    }

    #[test]
    fn rejects_overlapping_rooms() {
        let mut spec = two_rooms(1.0, 0.0);
        spec.rooms[1].polygon = vec![[3.0, 1.0], [7.0, 1.0], [7.0, 5.0], [3.0, 5.0]];
        spec.doorways.clear();
        assert!(matches!(build_shell(&spec), Err(Error::InvalidFloorplan(_))));
        let mut dup = two_rooms(1.0, 0.0);
        dup.rooms[1].polygon = dup.rooms[0].polygon.clone();
        dup.doorways.clear();
        assert!(matches!(build_shell(&dup), Err(Error::InvalidFloorplan(_))));
    }

    #[test]
    fn rejects_doorway_off_shared_wall() {
        let mut spec = two_rooms(1.0, 0.0);
        spec.doorways[0].segment = [[1.0, 0.0], [2.0, 0.0]];
        assert!(matches!(build_shell(&spec), Err(Error::InvalidFloorplan(_))));
    }

    #[test]
    fn labels_rooms_with_tie_break() {
        let shell = build_shell(&two_rooms(1.0, 0.0)).unwrap();
        let pose = |x, y| PanoPose::at(Vec3::new(x, y, 1.5));
        assert_eq!(label_pose_room(&shell, &pose(2.0, 2.0)).unwrap(), 0);
        assert_eq!(label_pose_room(&shell, &pose(6.0, 2.0)).unwrap(), 1);
        assert_eq!(label_pose_room(&shell, &pose(4.0, 3.0)).unwrap(), 0);
        assert!(label_pose_room(&shell, &pose(9.0, 2.0)).is_err());
    }

    #[test]
    fn thick_walls_are_inset() {
        let shell = build_shell(&two_rooms(1.0, 0.2)).unwrap();
        let hit = shell.cast(Vec3::new(2.0, 0.5, 1.5), Vec3::X).unwrap();
        assert!((hit.distance - 1.9).abs() < 1e-9);
        let back = shell.cast(Vec3::new(6.0, 0.5, 1.5), -Vec3::X).unwrap();
        assert!((back.distance - 1.9).abs() < 1e-9);
        assert_eq!(shell.triangles[back.triangle].room, 1);
    }
}
