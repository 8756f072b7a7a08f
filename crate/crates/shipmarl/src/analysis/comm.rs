//! Communication-vector analysis over episode logs.
//!
//! Produces (a) per-step message norms labelled pre/post closest
//! approach, (b) an OLS regression of pre-meeting norm against the
//! ship's distance to the projected meeting point, (c) a 31x31 spatial
//! grid of mean pre-meeting norms and (d) a histogram of raw message
//! element values.

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::stats::{linear_regression, Regression, StatsError};
use super::AnalysisError;
use crate::scenarios::log::EpisodeLog;

pub const GRID_SIZE: usize = 31;
pub const HISTOGRAM_BINS: usize = 41;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NormRow {
    pub episode: usize,
    pub t: usize,
    pub ship: usize,
    pub norm: f64,
    /// True until the ships reach their closest approach.
    pub pre_meeting: bool,
    /// Distance from this ship to the episode's initial meeting point.
    pub distance_to_meeting: Option<f64>,
    pub x: f64,
    pub y: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NormGrid {
    pub x_min: f64,
    pub x_max: f64,
    pub y_min: f64,
    pub y_max: f64,
    /// Row-major `GRID_SIZE x GRID_SIZE`; `None` marks unvisited cells.
    pub mean_norm: Vec<Option<f64>>,
    pub counts: Vec<usize>,
}

impl NormGrid {
    pub fn cell(&self, ix: usize, iy: usize) -> (Option<f64>, usize) {
        let idx = iy * GRID_SIZE + ix;
        (self.mean_norm[idx], self.counts[idx])
    }
}

#[derive(Clone, Debug)]
pub struct CommAnalysis {
    pub norm_rows: Vec<NormRow>,
    /// Pre-meeting norm vs distance-to-meeting-point, when enough data.
    pub regression: Option<Regression>,
    pub grid: Option<NormGrid>,
    /// `(bin_lo, bin_hi, count)` over raw message elements.
    pub histogram: Vec<(f64, f64, usize)>,
    pub mean_norm_pre: f64,
    pub mean_norm_post: f64,
}

/// Runs the full analysis. Logs must carry per-step messages.
pub fn analyze_comm(episodes: &[EpisodeLog]) -> Result<CommAnalysis, AnalysisError> {
    let any_messages = episodes
        .iter()
        .flat_map(|e| &e.steps)
        .any(|s| s.messages_sent.iter().any(Option::is_some));
    if !any_messages {
        return Err(AnalysisError::MissingMessages);
    }

    let mut norm_rows = Vec::new();
    let mut elements = Vec::new();
    for episode in episodes {
        // Closest-approach step (global minimum of inter-ship distance).
        let closest = episode
            .steps
            .iter()
            .enumerate()
            .filter_map(|(i, s)| s.ship_distance.map(|d| (i, d)))
            .min_by(|a, b| a.1.partial_cmp(&b.1).expect("finite distances"))
            .map(|(i, _)| i);
        let meeting = episode.summary.initial_meeting;

        for (t, step) in episode.steps.iter().enumerate() {
            for (agent, msg) in step.messages_sent.iter().enumerate() {
                let Some(msg) = msg else { continue };
                elements.extend(msg.iter().copied());
                // Norm rows only make sense for embodied ships.
                if agent >= step.ships.len() {
                    continue;
                }
                let ship = &step.ships[agent];
                let norm = msg.iter().map(|v| v * v).sum::<f64>().sqrt();
                let distance_to_meeting = meeting.map(|m| {
                    (ship.x0 - m.point[0]).hypot(ship.y0 - m.point[1])
                });
                norm_rows.push(NormRow {
                    episode: episode.summary.episode,
                    t,
                    ship: agent,
                    norm,
                    pre_meeting: closest.map_or(true, |c| t <= c),
                    distance_to_meeting,
                    x: ship.x0,
                    y: ship.y0,
                });
            }
        }
    }

    let pre: Vec<&NormRow> = norm_rows.iter().filter(|r| r.pre_meeting).collect();
    let post: Vec<&NormRow> = norm_rows.iter().filter(|r| !r.pre_meeting).collect();
    let mean = |rows: &[&NormRow]| {
        rows.iter().map(|r| r.norm).sum::<f64>() / rows.len().max(1) as f64
    };
    let mean_norm_pre = mean(&pre);
    let mean_norm_post = mean(&post);

    let paired: Vec<(f64, f64)> = pre
        .iter()
        .filter_map(|r| r.distance_to_meeting.map(|d| (d, r.norm)))
        .collect();
    let regression = if paired.len() >= 3 {
        let x: Vec<f64> = paired.iter().map(|p| p.0).collect();
        let y: Vec<f64> = paired.iter().map(|p| p.1).collect();
        match linear_regression(&x, &y) {
            Ok(r) => Some(r),
            Err(StatsError::ConstantX) => None,
            Err(e) => return Err(e.into()),
        }
    } else {
        None
    };

    let grid = build_grid(&pre);
    let histogram = build_histogram(&elements);

    Ok(CommAnalysis {
        norm_rows,
        regression,
        grid,
        histogram,
        mean_norm_pre,
        mean_norm_post,
    })
}

fn build_grid(pre: &[&NormRow]) -> Option<NormGrid> {
    if pre.is_empty() {
        return None;
    }
    let xs: Vec<f64> = pre.iter().map(|r| r.x).collect();
    let ys: Vec<f64> = pre.iter().map(|r| r.y).collect();
    let (x_min, x_max) = bounds(&xs);
    let (y_min, y_max) = bounds(&ys);
    if x_max <= x_min || y_max <= y_min {
        return None;
    }
    let mut sums = vec![0.0; GRID_SIZE * GRID_SIZE];
    let mut counts = vec![0usize; GRID_SIZE * GRID_SIZE];
    for r in pre {
        let ix = to_bin(r.x, x_min, x_max, GRID_SIZE);
        let iy = to_bin(r.y, y_min, y_max, GRID_SIZE);
        let idx = iy * GRID_SIZE + ix;
        sums[idx] += r.norm;
        counts[idx] += 1;
    }
    let mean_norm = sums
        .iter()
        .zip(&counts)
        .map(|(s, &c)| if c > 0 { Some(s / c as f64) } else { None })
        .collect();
    Some(NormGrid {
        x_min,
        x_max,
        y_min,
        y_max,
        mean_norm,
        counts,
    })
}

fn bounds(v: &[f64]) -> (f64, f64) {
    v.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &x| {
        (lo.min(x), hi.max(x))
    })
}

fn to_bin(v: f64, lo: f64, hi: f64, bins: usize) -> usize {
    let f = (v - lo) / (hi - lo);
    ((f * bins as f64) as usize).min(bins - 1)
}

fn build_histogram(elements: &[f64]) -> Vec<(f64, f64, usize)> {
    if elements.is_empty() {
        return Vec::new();
    }
    let (lo, hi) = bounds(elements);
    let (lo, hi) = if hi > lo { (lo, hi) } else { (lo - 0.5, hi + 0.5) };
    let mut counts = vec![0usize; HISTOGRAM_BINS];
    for &e in elements {
        counts[to_bin(e, lo, hi, HISTOGRAM_BINS)] += 1;
    }
    let width = (hi - lo) / HISTOGRAM_BINS as f64;
    counts
        .into_iter()
        .enumerate()
        .map(|(i, c)| (lo + i as f64 * width, lo + (i + 1) as f64 * width, c))
        .collect()
}

/// Writes `norms.csv`, `regression.csv`, `grid.csv` and `histogram.csv`.
pub fn write_comm_csvs(analysis: &CommAnalysis, out_dir: &Path) -> Result<(), AnalysisError> {
    std::fs::create_dir_all(out_dir)?;

    let mut w = csv::Writer::from_path(out_dir.join("norms.csv"))?;
    w.write_record([
        "episode",
        "t",
        "ship",
        "norm",
        "phase",
        "distance_to_meeting",
        "x",
        "y",
    ])?;
    for r in &analysis.norm_rows {
        w.write_record([
            r.episode.to_string(),
            r.t.to_string(),
            r.ship.to_string(),
            format!("{:.9}", r.norm),
            if r.pre_meeting { "pre" } else { "post" }.to_string(),
            r.distance_to_meeting
                .map(|d| format!("{d:.9}"))
                .unwrap_or_default(),
            format!("{:.9}", r.x),
            format!("{:.9}", r.y),
        ])?;
    }
    w.flush()?;

    let mut w = csv::Writer::from_path(out_dir.join("regression.csv"))?;
    w.write_record(["slope", "intercept", "r_squared", "slope_se", "p_slope", "n"])?;
    if let Some(r) = &analysis.regression {
        w.write_record([
            format!("{:.12}", r.slope),
            format!("{:.12}", r.intercept),
            format!("{:.12}", r.r_squared),
            format!("{:.12}", r.slope_se),
            format!("{:.12e}", r.p_slope),
            r.n.to_string(),
        ])?;
    }
    w.flush()?;

    let mut w = csv::Writer::from_path(out_dir.join("grid.csv"))?;
    w.write_record(["ix", "iy", "x_center", "y_center", "mean_norm", "count"])?;
    if let Some(grid) = &analysis.grid {
        let dx = (grid.x_max - grid.x_min) / GRID_SIZE as f64;
        let dy = (grid.y_max - grid.y_min) / GRID_SIZE as f64;
        for iy in 0..GRID_SIZE {
            for ix in 0..GRID_SIZE {
                let (mean, count) = grid.cell(ix, iy);
                w.write_record([
                    ix.to_string(),
                    iy.to_string(),
                    format!("{:.6}", grid.x_min + (ix as f64 + 0.5) * dx),
                    format!("{:.6}", grid.y_min + (iy as f64 + 0.5) * dy),
                    // Unvisited cells stay empty rather than zero.
                    mean.map(|m| format!("{m:.9}")).unwrap_or_default(),
                    count.to_string(),
                ])?;
            }
        }
    }
    w.flush()?;

    let mut w = csv::Writer::from_path(out_dir.join("histogram.csv"))?;
    w.write_record(["bin_lo", "bin_hi", "count"])?;
    for (lo, hi, count) in &analysis.histogram {
        w.write_record([format!("{lo:.6}"), format!("{hi:.6}"), count.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

/// Reads back `norms.csv`; used for round-trip checks and downstream
/// tooling.
pub fn read_norm_rows_csv(path: &Path) -> Result<Vec<NormRow>, AnalysisError> {
    let mut out = Vec::new();
    let mut reader = csv::Reader::from_path(path)?;
    for record in reader.records() {
        let record = record?;
        let get = |i: usize| record.get(i).unwrap_or_default().to_string();
        out.push(NormRow {
            episode: get(0).parse().map_err(|_| AnalysisError::BadField("episode"))?,
            t: get(1).parse().map_err(|_| AnalysisError::BadField("t"))?,
            ship: get(2).parse().map_err(|_| AnalysisError::BadField("ship"))?,
            norm: get(3).parse().map_err(|_| AnalysisError::BadField("norm"))?,
            pre_meeting: get(4) == "pre",
            distance_to_meeting: if get(5).is_empty() {
                None
            } else {
                Some(get(5).parse().map_err(|_| AnalysisError::BadField("distance"))?)
            },
            x: get(6).parse().map_err(|_| AnalysisError::BadField("x"))?,
            y: get(7).parse().map_err(|_| AnalysisError::BadField("y"))?,
        });
    }
    Ok(out)
}
