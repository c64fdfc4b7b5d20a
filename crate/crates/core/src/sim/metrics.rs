//! Delivery metrics: end-to-end delay, packet delivery rate, throughput.
//!
//! Rates count unique payloads. A payload that needed three transmissions
//! and got through counts as one delivery; the extra transmissions show up
//! in `transmissions_attempted`. Throughput is measured against data-phase
//! ticks, the only clock the model has.

use serde::Serialize;

use super::runner::PacketReport;
use super::scheduler::Tick;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Metrics {
    pub packets_sent: u64,
    pub packets_delivered: u64,
    pub transmissions_attempted: u64,
    /// Mean ticks from the successful transmission to arrival.
    pub end_to_end_delay: Option<f64>,
    pub packet_delivery_rate: Option<f64>,
    /// Delivered payload bytes per tick.
    pub throughput: Option<f64>,
    pub clock_ticks: Tick,
}

pub fn compute_metrics(outcomes: &[PacketReport], clock: Tick) -> Metrics {
    let sent = outcomes.len() as u64;
    let delays: Vec<u64> = outcomes.iter().filter_map(|p| p.end_to_end_delay).collect();
    let delivered = delays.len() as u64;
    let bytes: u64 = outcomes
        .iter()
        .filter(|p| p.end_to_end_delay.is_some())
        .map(|p| p.payload_size)
        .sum();
    let transmissions = outcomes.iter().map(|p| p.attempts.len() as u64).sum();

    let throughput = match (sent, bytes) {
        (0, _) => None,
        (_, 0) => Some(0.0),
        _ => Some(bytes as f64 / clock.max(1) as f64),
    };
    Metrics {
        packets_sent: sent,
        packets_delivered: delivered,
        transmissions_attempted: transmissions,
        end_to_end_delay: (delivered > 0)
            .then(|| delays.iter().sum::<u64>() as f64 / delivered as f64),
        packet_delivery_rate: (sent > 0).then(|| delivered as f64 / sent as f64),
        throughput,
        clock_ticks: clock,
    }
}
