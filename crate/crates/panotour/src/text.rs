//! Line-oriented text outputs: per-update stats, overlap reports and graph
//! dumps. Each line is `key=value` pairs separated by spaces.

use std::fmt::Write;

use panotour_core::cache::UpdateStats;
use panotour_core::evalmetrics::OverlapReport;
use panotour_core::scenegraph::{NodeGraph, NodeId, NodeKind};

pub fn stats_line(node: NodeId, s: &UpdateStats) -> String {
    format!(
        "node={node} added={} merged={} pruned={} total={} candidate_tests={}",
        s.added, s.merged, s.pruned, s.total, s.candidate_tests
    )
}

/// Parses a stats line back into `(node, stats)`.
pub fn parse_stats_line(line: &str) -> Option<(NodeId, UpdateStats)> {
    let mut node = None;
    let mut s = UpdateStats::default();
    for field in line.split_whitespace() {
        let (k, v) = field.split_once('=')?;
        match k {
            "node" => node = Some(v.parse().ok()?),
            "added" => s.added = v.parse().ok()?,
            "merged" => s.merged = v.parse().ok()?,
            "pruned" => s.pruned = v.parse().ok()?,
            "total" => s.total = v.parse().ok()?,
            "candidate_tests" => s.candidate_tests = v.parse().ok()?,
            _ => return None,
        }
    }
    Some((node?, s))
}

/// `labels[i]` names panorama `i` (normally its node id).
pub fn overlap_report(report: &OverlapReport, labels: &[NodeId]) -> String {
    let mut out = String::new();
    let label = |i: usize| labels.get(i).copied().unwrap_or(i as NodeId);
    writeln!(out, "base node={}", label(report.base)).unwrap();
    for e in &report.entries {
        writeln!(
            out,
            "pair node={} region={} samples={} mse={:.6} psnr={:.4}",
            label(e.node),
            e.region,
            e.valid_samples,
            e.mse,
            e.psnr
        )
        .unwrap();
    }
    for &(n, r) in &report.excluded {
        writeln!(out, "excluded node={} region={} reason=no_covisible_samples", label(n), r).unwrap();
    }
    writeln!(out, "mean psnr={:.4} pairs={}", report.mean_psnr, report.entries.len()).unwrap();
    out
}

/// Reads the `mean psnr=` line of an overlap report.
pub fn parse_mean_psnr(text: &str) -> Option<f64> {
    text.lines().find_map(|l| l.strip_prefix("mean psnr=")?.split_whitespace().next()?.parse().ok())
}

pub fn graph_dump(graph: &NodeGraph) -> String {
    let mut out = String::new();
    for n in &graph.nodes {
        let p = n.pose.position;
        let kind = match n.kind {
            NodeKind::Target => "target",
            NodeKind::Auxiliary => "auxiliary",
        };
        let door = n.doorway.map_or_else(|| "-".to_string(), |d| d.to_string());
        writeln!(
            out,
            "node id={} room={} kind={kind} doorway={door} x={:.4} y={:.4} z={:.4}",
            n.id, n.room, p.x, p.y, p.z
        )
        .unwrap();
    }
    for (a, b) in &graph.edges {
        writeln!(out, "edge a={a} b={b}").unwrap();
    }
    out
}
