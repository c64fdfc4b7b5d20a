//! Graphviz export of a flooding trace.
//!
//! Each tick with activity becomes its own `digraph`, followed by one graph
//! for the route reply. Render with `dot -Tpng -O trace.dot`.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write;

use crate::routing::{FloodEvent, FloodTrace};
use crate::sim::Tick;
use crate::topology::NodeId;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
enum NodeMark {
    Suppressed,
    Collided,
    Accepted,
    Recorded,
    Forwarded,
}

impl NodeMark {
    fn attrs(self) -> &'static str {
        match self {
            NodeMark::Forwarded => "style=filled, fillcolor=lightblue, xlabel=\"forwarded\"",
            NodeMark::Accepted => "style=filled, fillcolor=lightyellow, xlabel=\"received\"",
            NodeMark::Recorded => "style=filled, fillcolor=palegreen, xlabel=\"recorded\"",
            NodeMark::Suppressed => "style=dashed, xlabel=\"suppressed\"",
            NodeMark::Collided => "color=red, xlabel=\"collision\"",
        }
    }
}

fn quote(id: &NodeId) -> String {
    format!(
        "\"{}\"",
        id.as_str().replace('\\', "\\\\").replace('"', "\\\"")
    )
}

/// Renders `trace` over the node set `nodes` (kept in the given order so
/// every tick lays out the same way).
pub fn flood_to_dot(trace: &FloodTrace, nodes: &[NodeId]) -> String {
    let mut by_tick: BTreeMap<Tick, Vec<&FloodEvent>> = BTreeMap::new();
    for ev in &trace.events {
        by_tick.entry(ev.tick()).or_default().push(ev);
    }
    let mut out = String::new();
    for (tick, events) in &by_tick {
        let mut marks: BTreeMap<&NodeId, NodeMark> = BTreeMap::new();
        let mut edges: BTreeSet<(String, String, &'static str)> = BTreeSet::new();
        for ev in events {
            let (mark, style) = match ev {
                FloodEvent::Broadcast { .. } => (NodeMark::Forwarded, None),
                FloodEvent::Accepted { .. } => (NodeMark::Accepted, Some("solid")),
                FloodEvent::Recorded { .. } => (NodeMark::Recorded, Some("bold")),
                FloodEvent::Suppressed { .. } => (NodeMark::Suppressed, Some("dashed")),
                FloodEvent::Collided { .. } => (NodeMark::Collided, Some("dotted")),
            };
            let slot = marks.entry(ev.node()).or_insert(mark);
            *slot = (*slot).max(mark);
            if let (
                Some(style),
                FloodEvent::Accepted { from, node, .. }
                | FloodEvent::Recorded { from, node, .. }
                | FloodEvent::Suppressed { from, node, .. }
                | FloodEvent::Collided { from, node, .. },
            ) = (style, ev)
            {
                edges.insert((quote(from), quote(node), style));
            }
        }
        writeln!(out, "digraph tick_{tick} {{").unwrap();
        writeln!(
            out,
            "  label=\"request {} at tick {tick}\";",
            trace.request_id
        )
        .unwrap();
        for node in nodes {
            match marks.get(node) {
                Some(mark) => writeln!(out, "  {} [{}];", quote(node), mark.attrs()).unwrap(),
                None => writeln!(out, "  {};", quote(node)).unwrap(),
            }
        }
        for (from, to, style) in &edges {
            writeln!(out, "  {from} -> {to} [style={style}];").unwrap();
        }
        out.push_str("}\n");
    }
    if !trace.reply.is_empty() {
        out.push_str("digraph reply {\n");
        writeln!(
            out,
            "  label=\"route reply {} -> {}\";",
            trace.dest, trace.source
        )
        .unwrap();
        for node in nodes {
            writeln!(out, "  {};", quote(node)).unwrap();
        }
        for hop in &trace.reply {
            writeln!(
                out,
                "  {} -> {} [label=\"t={}\", color=darkgreen];",
                quote(&hop.from),
                quote(&hop.to),
                hop.tick
            )
            .unwrap();
        }
        out.push_str("}\n");
    }
    out
}
