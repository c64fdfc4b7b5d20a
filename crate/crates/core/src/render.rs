//! Plain-text tables for terminal output.
//!
//! Matrices print tab-separated with a header row, nodes in scenario order,
//! so output lines up with hand-written range tables. Both the matrix and
//! the connection table can be parsed back.

use std::fmt::Write;

use crate::fault_tolerance::{ConnectionEntry, ConnectionTable};
use crate::routing::Route;
use crate::sim::{Report, RunOutcome};
use crate::topology::{NodeId, TopologyError, Weight, WeightedAdjacency};

pub fn render_matrix(adj: &WeightedAdjacency) -> String {
    let mut out = String::new();
    for label in adj.labels() {
        write!(out, "\t{label}").unwrap();
    }
    out.push('\n');
    for (label, row) in adj.labels().iter().zip(adj.rows()) {
        out.push_str(label.as_str());
        for w in row {
            write!(out, "\t{w}").unwrap();
        }
        out.push('\n');
    }
    out
}

pub fn parse_matrix(text: &str) -> Result<WeightedAdjacency, TopologyError> {
    let malformed = |m: String| TopologyError::MalformedMatrix(m);
    let mut lines = text.lines().filter(|l| !l.trim().is_empty());
    let header = lines
        .next()
        .ok_or_else(|| malformed("empty input".into()))?;
    let labels: Vec<NodeId> = header.split_whitespace().map(NodeId::from).collect();
    let mut rows = Vec::with_capacity(labels.len());
    for (i, line) in lines.enumerate() {
        let mut cells = line.split_whitespace();
        let label = cells.next().unwrap_or_default();
        if labels.get(i).map(NodeId::as_str) != Some(label) {
            return Err(malformed(format!("row {} is labelled `{label}`", i + 1)));
        }
        let row = cells
            .map(|c| {
                c.parse::<Weight>()
                    .map_err(|e| malformed(format!("row `{label}`: {e}")))
            })
            .collect::<Result<Vec<_>, _>>()?;
        rows.push(row);
    }
    WeightedAdjacency::from_rows(labels, rows)
}

const TABLE_HEADERS: [&str; 3] = ["Node", "Communication Links", "Priority"];

/// Connection table with rows in `order`, columns padded to line up.
pub fn render_connection_table(table: &ConnectionTable, order: &[NodeId]) -> String {
    let rows: Vec<[String; 3]> = table
        .in_order(order)
        .map(|e| {
            [
                e.node.to_string(),
                e.links.to_string(),
                e.priority.to_string(),
            ]
        })
        .collect();
    let mut widths = TABLE_HEADERS.map(str::len);
    for row in &rows {
        for (w, cell) in widths.iter_mut().zip(row) {
            *w = (*w).max(cell.len());
        }
    }
    let mut out = String::new();
    let mut line = |cells: [&str; 3]| {
        let text = format!(
            "{:<w0$}  {:<w1$}  {:<w2$}",
            cells[0],
            cells[1],
            cells[2],
            w0 = widths[0],
            w1 = widths[1],
            w2 = widths[2]
        );
        out.push_str(text.trim_end());
        out.push('\n');
    };
    line(TABLE_HEADERS);
    for row in &rows {
        line([&row[0], &row[1], &row[2]]);
    }
    out
}

pub fn parse_connection_table(text: &str) -> Result<Vec<ConnectionEntry>, String> {
    text.lines()
        .skip(1)
        .filter(|l| !l.trim().is_empty())
        .map(|line| {
            let cells: Vec<&str> = line.split_whitespace().collect();
            let [node, links, priority] = cells[..] else {
                return Err(format!("expected three columns in `{line}`"));
            };
            Ok(ConnectionEntry {
                node: node.into(),
                links: links.parse().map_err(|e| format!("`{line}`: {e}"))?,
                priority: priority.parse().map_err(|e| format!("`{line}`: {e}"))?,
            })
        })
        .collect()
}

pub fn format_route(route: &[NodeId]) -> String {
    let names: Vec<&str> = route.iter().map(NodeId::as_str).collect();
    format!("[{}]", names.join(", "))
}

pub fn render_routes(primary: &Route, recorded: &[Route]) -> String {
    let mut out = format!(
        "primary: {} (delay {})\nrecorded:\n",
        format_route(&primary.hops),
        primary.total_delay
    );
    for (i, r) in recorded.iter().enumerate() {
        writeln!(
            out,
            "  {}. {} (delay {})",
            i + 1,
            format_route(&r.hops),
            r.total_delay
        )
        .unwrap();
    }
    out
}

pub fn render_summary(report: &Report) -> String {
    let mut out = String::new();
    let outcome = match report.outcome {
        RunOutcome::Completed => "completed",
        RunOutcome::NoRoute => "no route",
        RunOutcome::NoSafeRoute => "no safe route",
    };
    writeln!(out, "outcome: {outcome}").unwrap();
    match &report.primary_route {
        Some(r) => writeln!(
            out,
            "primary route: {} (delay {})",
            format_route(r),
            report.primary_delay.unwrap_or(0)
        )
        .unwrap(),
        None => writeln!(out, "primary route: none").unwrap(),
    }
    for e in &report.repaired_edges {
        writeln!(
            out,
            "repaired: {}-{} weight {} (around {})",
            e.from, e.to, e.weight, e.failed
        )
        .unwrap();
    }
    for ev in &report.detection_events {
        writeln!(
            out,
            "detected: {:?} {} at hop {} (tick {})",
            ev.kind, ev.node, ev.evidence.hop_index, ev.evidence.observed_tick
        )
        .unwrap();
    }
    for p in &report.packets {
        let route = p
            .route
            .as_deref()
            .map_or("undelivered".to_string(), format_route);
        writeln!(
            out,
            "packet {}: {} after {} transmission(s)",
            p.sequence,
            route,
            p.attempts.len()
        )
        .unwrap();
    }
    let m = &report.metrics;
    let opt = |v: Option<f64>| v.map_or("n/a".to_string(), |x| format!("{x:.3}"));
    writeln!(out, "end-to-end delay: {}", opt(m.end_to_end_delay)).unwrap();
    writeln!(out, "packet delivery rate: {}", opt(m.packet_delivery_rate)).unwrap();
    writeln!(out, "throughput: {} bytes/tick", opt(m.throughput)).unwrap();
    writeln!(out, "transmissions: {}", m.transmissions_attempted).unwrap();
    out
}
