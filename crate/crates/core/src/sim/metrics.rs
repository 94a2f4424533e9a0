//! Time series, run summary and their on-disk formats.

use std::collections::BTreeMap;
use std::io;

use serde::Serialize;

use crate::bus::{TopicCounters, Transport};
use crate::model::NodeId;

pub const CSV_HEADER: [&str; 4] = ["time_s", "node_id", "metric", "value"];

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    LocErrorM,
    Localized,
    Routes,
    RangingSuccess,
}

impl Metric {
    pub fn as_str(self) -> &'static str {
        match self {
            Metric::LocErrorM => "loc_error_m",
            Metric::Localized => "localized",
            Metric::Routes => "routes",
            Metric::RangingSuccess => "ranging_success",
        }
    }
}

/// One row of the time series. `value` is `None` when the quantity is
/// undefined (an unlocalized node has no error, not zero error).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SeriesPoint {
    pub time_ns: u64,
    pub node: NodeId,
    pub metric: Metric,
    pub value: Option<f64>,
}

impl SeriesPoint {
    pub fn time_s(&self) -> f64 {
        self.time_ns as f64 / 1e9
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TopicSummary {
    pub name: String,
    pub id: u16,
    pub transport: Transport,
    pub counters: TopicCounters,
    /// Copies that would reach every configured subscriber other than the
    /// publisher, summed over publish attempts.
    pub expected_copies: u64,
    pub pdr: Option<f64>,
    pub delivered_by_subscriber: BTreeMap<u16, u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Summary {
    pub seed: u64,
    pub duration_s: f64,
    pub samples: usize,
    /// Over non-anchor nodes, last quarter of the run.
    pub rmse_m: Option<f64>,
    pub final_loc_error_m: BTreeMap<u16, Option<f64>>,
    pub ranging_sessions_started: u64,
    pub ranging_sessions_completed: u64,
    pub mean_ranging_latency_s: Option<f64>,
    pub topics: Vec<TopicSummary>,
    pub events_processed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MetricsReport {
    pub series: Vec<SeriesPoint>,
    pub summary: Summary,
}

pub fn rmse(values: &[f64]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    let ss: f64 = values.iter().map(|v| v * v).sum();
    Some((ss / values.len() as f64).sqrt())
}

/// RMSE of `loc_error_m` points at or after `from_ns`, skipping `exclude`
/// nodes and missing values.
pub fn windowed_rmse(series: &[SeriesPoint], from_ns: u64, exclude: &[NodeId]) -> Option<f64> {
    let vals: Vec<f64> = series
        .iter()
        .filter(|p| p.metric == Metric::LocErrorM && p.time_ns >= from_ns && !exclude.contains(&p.node))
        .filter_map(|p| p.value)
        .collect();
    rmse(&vals)
}

fn fmt_value(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

impl MetricsReport {
    pub fn write_csv<W: io::Write>(&self, w: W) -> csv::Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(CSV_HEADER)?;
        for p in &self.series {
            out.write_record([
                p.time_s().to_string(),
                p.node.0.to_string(),
                p.metric.as_str().to_string(),
                fmt_value(p.value),
            ])?;
        }
        out.flush()?;
        Ok(())
    }

    pub fn csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("in-memory write");
        String::from_utf8(buf).expect("utf-8")
    }

    /// Series as a JSON array of `{time_s, node_id, metric, value}`.
    pub fn series_json(&self) -> String {
        #[derive(Serialize)]
        struct Row {
            time_s: f64,
            node_id: u16,
            metric: &'static str,
            value: Option<f64>,
        }
        let rows: Vec<Row> = self
            .series
            .iter()
            .map(|p| Row {
                time_s: p.time_s(),
                node_id: p.node.0,
                metric: p.metric.as_str(),
                value: p.value,
            })
            .collect();
        serde_json::to_string_pretty(&rows).expect("series serializes")
    }

    pub fn summary_json(&self) -> String {
        serde_json::to_string_pretty(&self.summary).expect("summary serializes")
    }

    pub fn topic(&self, name: &str) -> Option<&TopicSummary> {
        self.summary.topics.iter().find(|t| t.name == name)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn point(t: u64, node: u16, v: Option<f64>) -> SeriesPoint {
        SeriesPoint {
            time_ns: t,
            node: NodeId(node),
            metric: Metric::LocErrorM,
            value: v,
        }
    }

    #[test]
    fn rmse_examples() {
        assert!((rmse(&[3.0, 4.0]).unwrap() - 3.5355).abs() < 1e-4);
        assert_eq!(rmse(&[0.0]), Some(0.0));
        assert_eq!(rmse(&[]), None);
    }

    #[test]
    fn missing_values_excluded() {
        let s = vec![
            point(10, 4, Some(3.0)),
            point(10, 5, None),
            point(20, 4, Some(4.0)),
            point(5, 4, Some(100.0)),
        ];
        let r = windowed_rmse(&s, 10, &[]).unwrap();
        assert!((r - 3.5355).abs() < 1e-4);
        assert_eq!(windowed_rmse(&s, 10, &[NodeId(4)]), None);
    }

    #[test]
    fn csv_layout() {
        let report = MetricsReport {
            series: vec![
                point(100_000_000, 4, Some(0.25)),
                point(100_000_000, 5, None),
                SeriesPoint {
                    time_ns: 1_500_000_000,
                    node: NodeId(4),
                    metric: Metric::Routes,
                    value: Some(3.0),
                },
            ],
            summary: Summary {
                seed: 0,
                duration_s: 0.0,
                samples: 0,
                rmse_m: None,
                final_loc_error_m: BTreeMap::new(),
                ranging_sessions_started: 0,
                ranging_sessions_completed: 0,
                mean_ranging_latency_s: None,
                topics: vec![],
                events_processed: 0,
            },
        };
        assert_eq!(
            report.csv_string(),
            "time_s,node_id,metric,value\n0.1,4,loc_error_m,0.25\n0.1,5,loc_error_m,\n1.5,4,routes,3\n"
        );
    }
}
