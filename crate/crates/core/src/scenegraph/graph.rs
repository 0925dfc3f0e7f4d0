//! Navigation graph over panorama nodes.

use alloc::collections::{BTreeMap, BTreeSet, BinaryHeap};
use alloc::format;
use alloc::vec::Vec;
use core::cmp::{Ordering, Reverse};

use super::geom2d::{self, P2};
use super::{NodeId, PanoPose, RoomId, ShellScene};
use crate::error::{Error, Result};
use crate::math::{ceil, Vec3};

/// Nodes within this horizontal distance of a doorway segment are boundary nodes.
pub const BOUNDARY_RADIUS: f64 = 0.3;
/// Distance from the doorway centerline at which the two crossing nodes sit.
pub const DOORWAY_NODE_OFFSET: f64 = 0.25;

const SPACING_RANGE: (f64, f64) = (0.5, 1.5);
const SPACING_TOL: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum NodeKind {
    Target,
    Auxiliary,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Node {
    pub id: NodeId,
    pub pose: PanoPose,
    pub room: RoomId,
    pub kind: NodeKind,
    /// Index of the doorway this node sits in or beside.
    pub doorway: Option<usize>,
}

impl Node {
    pub fn is_boundary(&self) -> bool {
        self.doorway.is_some()
    }

    fn xy(&self) -> P2 {
        [self.pose.position.x, self.pose.position.y]
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct NodeGraph {
    pub nodes: Vec<Node>,
    /// Undirected edges stored as `(low id, high id)`, sorted.
    pub edges: Vec<(NodeId, NodeId)>,
    /// Room pairs joined by each doorway, indexed like `ShellScene::doorways`.
    pub doorways: Vec<(RoomId, RoomId)>,
}

impl NodeGraph {
    pub fn new(nodes: Vec<Node>, edges: Vec<(NodeId, NodeId)>, doorways: Vec<(RoomId, RoomId)>) -> Self {
        let mut edges: Vec<_> =
            edges.into_iter().filter(|(a, b)| a != b).map(|(a, b)| (a.min(b), a.max(b))).collect();
        edges.sort_unstable();
        edges.dedup();
        let mut nodes = nodes;
        nodes.sort_by_key(|n| n.id);
        NodeGraph { nodes, edges, doorways }
    }

    pub fn node(&self, id: NodeId) -> Result<&Node> {
        self.nodes
            .binary_search_by_key(&id, |n| n.id)
            .map(|i| &self.nodes[i])
            .map_err(|_| Error::UnknownNode(id))
    }

    pub fn edge_length(&self, a: NodeId, b: NodeId) -> Result<f64> {
        Ok(self.node(a)?.pose.position.distance(self.node(b)?.pose.position))
    }

    /// Neighbor ids in ascending order.
    pub fn neighbors(&self, id: NodeId) -> Vec<NodeId> {
        let mut out: Vec<NodeId> = self
            .edges
            .iter()
            .filter_map(|&(a, b)| {
                if a == id {
                    Some(b)
                } else if b == id {
                    Some(a)
                } else {
                    None
                }
            })
            .collect();
        out.sort_unstable();
        out
    }

    fn adjacency(&self) -> BTreeMap<NodeId, Vec<(NodeId, f64)>> {
        let mut adj: BTreeMap<NodeId, Vec<(NodeId, f64)>> =
            self.nodes.iter().map(|n| (n.id, Vec::new())).collect();
        for &(a, b) in &self.edges {
            let w = self.edge_length(a, b).unwrap_or(f64::INFINITY);
            if let Some(v) = adj.get_mut(&a) {
                v.push((b, w));
            }
            if let Some(v) = adj.get_mut(&b) {
                v.push((a, w));
            }
        }
        adj
    }

    pub fn is_connected(&self) -> bool {
        let Some(first) = self.nodes.first() else {
            return true;
        };
        let adj = self.adjacency();
        let mut seen = BTreeSet::new();
        let mut stack = alloc::vec![first.id];
        while let Some(n) = stack.pop() {
            if !seen.insert(n) {
                continue;
            }
            stack.extend(adj[&n].iter().map(|e| e.0).filter(|m| !seen.contains(m)));
        }
        seen.len() == self.nodes.len()
    }

    /// Single-source shortest path lengths (edge length weighted).
    pub fn distances_from(&self, src: NodeId) -> Result<BTreeMap<NodeId, f64>> {
        self.node(src)?;
        let adj = self.adjacency();
        let mut dist: BTreeMap<NodeId, f64> = BTreeMap::new();
        let mut heap = BinaryHeap::new();
        heap.push(Reverse(Entry(0.0, src)));
        while let Some(Reverse(Entry(d, n))) = heap.pop() {
            if dist.contains_key(&n) {
                continue;
            }
            dist.insert(n, d);
            for &(m, w) in &adj[&n] {
                if !dist.contains_key(&m) {
                    heap.push(Reverse(Entry(d + w, m)));
                }
            }
        }
        Ok(dist)
    }

    /// Breadth-first order from `start`, visiting neighbors by ascending id.
    pub fn bfs_order(&self, start: NodeId) -> Result<Vec<NodeId>> {
        self.node(start)?;
        let mut seen = BTreeSet::from([start]);
        let mut queue = alloc::collections::VecDeque::from([start]);
        let mut order = Vec::with_capacity(self.nodes.len());
        while let Some(n) = queue.pop_front() {
            order.push(n);
            for m in self.neighbors(n) {
                if seen.insert(m) {
                    queue.push_back(m);
                }
            }
        }
        Ok(order)
    }

    pub fn boundary_ids(&self) -> Vec<NodeId> {
        self.nodes.iter().filter(|n| n.is_boundary()).map(|n| n.id).collect()
    }

    fn next_id(&self) -> NodeId {
        self.nodes.iter().map(|n| n.id + 1).max().unwrap_or(0)
    }
}

#[derive(PartialEq)]
struct Entry(f64, NodeId);

impl Eq for Entry {}

impl PartialOrd for Entry {
    fn partial_cmp(&self, o: &Self) -> Option<Ordering> {
        Some(self.cmp(o))
    }
}

impl Ord for Entry {
    fn cmp(&self, o: &Self) -> Ordering {
        self.0.total_cmp(&o.0).then(self.1.cmp(&o.1))
    }
}

fn doorway_of(shell: &ShellScene, p: P2) -> Option<usize> {
    shell.doorways.iter().position(|d| d.distance_to(p) <= BOUNDARY_RADIUS)
}

fn line_of_sight(shell: &ShellScene, room: RoomId, a: P2, b: P2) -> bool {
    let Some(r) = shell.room(room) else {
        return false;
    };
    let poly = &r.polygon;
    let n = poly.len();
    let mid = [(a[0] + b[0]) * 0.5, (a[1] + b[1]) * 0.5];
    geom2d::contains_closed(poly, a)
        && geom2d::contains_closed(poly, b)
        && geom2d::contains_closed(poly, mid)
        && (0..n).all(|i| !geom2d::segments_cross(a, b, poly[i], poly[(i + 1) % n]))
}

fn check_spacing(max_spacing: f64, allow_any_spacing: bool) -> Result<()> {
    let ok = if allow_any_spacing {
        max_spacing > 0.0 && max_spacing.is_finite()
    } else {
        (SPACING_RANGE.0..=SPACING_RANGE.1).contains(&max_spacing)
    };
    if ok {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!(
            "max spacing {max_spacing} outside [{}, {}]",
            SPACING_RANGE.0, SPACING_RANGE.1
        )))
    }
}

/// Builds the navigation graph: target nodes from the shell, two boundary
/// nodes per doorway, same-room edges between nodes in line of sight that
/// are at most `2 * max_spacing` apart (plus a per-room spanning tree so each
/// room stays connected) and one crossing edge per doorway.
pub fn build_node_graph(shell: &ShellScene, max_spacing: f64) -> Result<NodeGraph> {
    let z = shell.camera_height;
    let mut nodes: Vec<Node> = Vec::new();
    for (i, &t) in shell.targets.iter().enumerate() {
        let room = shell.label_point(t)?;
        nodes.push(Node {
            id: i as NodeId,
            pose: PanoPose::at(Vec3::new(t[0], t[1], z)),
            room,
            kind: NodeKind::Target,
            doorway: doorway_of(shell, t),
        });
    }

    let mut edges = Vec::new();
    for (di, d) in shell.doorways.iter().enumerate() {
        let m = d.midpoint();
        let [p0, p1] = d.segment;
        let w = d.width();
        let normal = [-(p1[1] - p0[1]) / w, (p1[0] - p0[0]) / w];
        let side = |s: f64| [m[0] + normal[0] * s * DOORWAY_NODE_OFFSET, m[1] + normal[1] * s * DOORWAY_NODE_OFFSET];
        let room_a = shell.room(d.rooms.0).ok_or(Error::UnknownRoom(d.rooms.0))?;
        let sign = if geom2d::contains_strict(&room_a.polygon, side(1.0)) { 1.0 } else { -1.0 };
        let mut pair = [0; 2];
        for (k, (room, s)) in [(d.rooms.0, sign), (d.rooms.1, -sign)].into_iter().enumerate() {
            let id = nodes.len() as NodeId;
            let p = side(s);
            nodes.push(Node {
                id,
                pose: PanoPose::at(Vec3::new(p[0], p[1], z)),
                room,
                kind: NodeKind::Auxiliary,
                doorway: Some(di),
            });
            pair[k] = id;
        }
        edges.push((pair[0], pair[1]));
    }

    for room in &shell.rooms {
        let members: Vec<&Node> = nodes.iter().filter(|n| n.room == room.id).collect();
        let mut candidates = Vec::new();
        for (i, a) in members.iter().enumerate() {
            for b in &members[i + 1..] {
                if line_of_sight(shell, room.id, a.xy(), b.xy()) {
                    let d = geom2d::dist(a.xy(), b.xy());
                    if d <= 2.0 * max_spacing {
                        edges.push((a.id, b.id));
                    }
                    candidates.push((d, a.id, b.id));
                }
            }
        }
        // Kruskal spanning tree for rooms whose nodes are spread out.
        candidates.sort_by(|x, y| x.0.total_cmp(&y.0).then((x.1, x.2).cmp(&(y.1, y.2))));
        let mut parent: BTreeMap<NodeId, NodeId> = members.iter().map(|n| (n.id, n.id)).collect();
        fn find(p: &mut BTreeMap<NodeId, NodeId>, x: NodeId) -> NodeId {
            let mut r = x;
            while p[&r] != r {
                r = p[&r];
            }
            p.insert(x, r);
            r
        }
        for (_, a, b) in candidates {
            let (ra, rb) = (find(&mut parent, a), find(&mut parent, b));
            if ra != rb {
                parent.insert(ra.max(rb), ra.min(rb));
                edges.push((a, b));
            }
        }
    }

    let doorways = shell.doorways.iter().map(|d| d.rooms).collect();
    Ok(NodeGraph::new(nodes, edges, doorways))
}

/// Subdivides every edge longer than `max_spacing` with
/// `ceil(len / max_spacing) - 1` equally spaced auxiliary nodes.
///
/// The length test is a strict `>` (with a 1e-9 relative tolerance so the
/// operation is idempotent under rounding).
pub fn insert_auxiliary_nodes(
    graph: &NodeGraph,
    shell: &ShellScene,
    max_spacing: f64,
    allow_any_spacing: bool,
) -> Result<NodeGraph> {
    check_spacing(max_spacing, allow_any_spacing)?;
    let mut nodes = graph.nodes.clone();
    let mut edges = Vec::with_capacity(graph.edges.len());
    let mut next = graph.next_id();
    for &(a, b) in &graph.edges {
        let (na, nb) = (graph.node(a)?, graph.node(b)?);
        let (pa, pb) = (na.pose.position, nb.pose.position);
        let len = pa.distance(pb);
        if len <= max_spacing * (1.0 + SPACING_TOL) {
            edges.push((a, b));
            continue;
        }
        let count = ceil(len / max_spacing - SPACING_TOL) as usize - 1;
        let mut prev = a;
        for k in 1..=count {
            let p = pa.lerp(pb, k as f64 / (count + 1) as f64);
            let xy = [p.x, p.y];
            let room = shell.label_point(xy)?;
            nodes.push(Node {
                id: next,
                pose: PanoPose { position: p, rotation: na.pose.rotation },
                room,
                kind: NodeKind::Auxiliary,
                doorway: doorway_of(shell, xy),
            });
            edges.push((prev, next));
            prev = next;
            next += 1;
        }
        edges.push((prev, b));
    }
    Ok(NodeGraph::new(nodes, edges, graph.doorways.clone()))
}

/// Node with the lowest mean shortest-path distance to `targets`.
pub fn select_start_node(graph: &NodeGraph, targets: &[NodeId]) -> Result<NodeId> {
    if targets.is_empty() {
        return Err(Error::InvalidArgument("no target nodes".into()));
    }
    for &t in targets {
        graph.node(t)?;
    }
    if !graph.is_connected() {
        return Err(Error::DisconnectedGraph);
    }
    let tables: Vec<BTreeMap<NodeId, f64>> =
        targets.iter().map(|&t| graph.distances_from(t)).collect::<Result<_>>()?;
    let means: Vec<(NodeId, f64)> = graph
        .nodes
        .iter()
        .map(|n| (n.id, tables.iter().map(|d| d[&n.id]).sum::<f64>() / targets.len() as f64))
        .collect();
    let best = means.iter().map(|m| m.1).fold(f64::INFINITY, f64::min);
    let tol = 1e-9 * best.max(1.0);
    // nodes are sorted by id, so the first within tolerance has the lowest id
    Ok(means.iter().find(|m| m.1 <= best + tol).map(|m| m.0).unwrap_or(targets[0]))
}

/// Bounded context for `node`: the node itself, then up to `k_same` nearest
/// generated nodes of its room, then up to `k_door` generated boundary nodes
/// of doorways touching its room. Each group is ordered by distance, ties
/// by id.
pub fn select_context(
    graph: &NodeGraph,
    node: NodeId,
    generated: &BTreeSet<NodeId>,
    k_same: usize,
    k_door: usize,
) -> Result<Vec<NodeId>> {
    let me = graph.node(node)?;
    let by_distance = |pred: &dyn Fn(&Node) -> bool| {
        let mut v: Vec<(f64, NodeId)> = graph
            .nodes
            .iter()
            .filter(|n| n.id != node && generated.contains(&n.id) && pred(n))
            .map(|n| (n.pose.position.distance(me.pose.position), n.id))
            .collect();
        v.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        v
    };
    let mut out = alloc::vec![node];
    out.extend(by_distance(&|n| n.room == me.room).into_iter().take(k_same).map(|e| e.1));
    let door_picks: Vec<NodeId> = by_distance(&|n| {
        n.doorway
            .and_then(|d| graph.doorways.get(d))
            .is_some_and(|&(a, b)| a == me.room || b == me.room)
    })
    .into_iter()
    .map(|e| e.1)
    .filter(|id| !out.contains(id))
    .take(k_door)
    .collect();
    out.extend(door_picks);
    Ok(out)
}
