//! Episode logs as JSON lines: one record per step plus one summary per
//! episode. The analysis commands re-read these files.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::colregs::{EncounterType, GiveWay, MeetingPoint};
use super::{RewardTerms, StepOutcome, WorldState};
use crate::dynamics::ShipState;

#[derive(Debug, Error)]
pub enum LogError {
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("bad log line {line}: {source}")]
    Parse {
        line: usize,
        source: serde_json::Error,
    },
    #[error("log ended mid-episode ({0} dangling step records)")]
    Truncated(usize),
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct StepRecord {
    pub t: usize,
    pub ships: Vec<ShipState>,
    pub actions: Vec<Vec<f64>>,
    pub messages_sent: Vec<Option<Vec<f64>>>,
    pub messages_delivered: Vec<Option<Vec<f64>>>,
    pub rewards: Vec<f64>,
    pub terms: Vec<RewardTerms>,
    pub meeting: Option<MeetingPoint>,
    pub risk_active: bool,
    pub collision: bool,
    pub ship_distance: Option<f64>,
}

impl StepRecord {
    pub fn from_outcome(t: usize, actions: &[super::Action], out: &StepOutcome) -> Self {
        Self {
            t,
            ships: out.world.ships.clone(),
            actions: actions.iter().map(|a| a.0.clone()).collect(),
            messages_sent: out
                .events
                .messages_sent
                .iter()
                .map(|m| m.as_ref().map(|m| m.0.clone()))
                .collect(),
            messages_delivered: out
                .events
                .messages_delivered
                .iter()
                .map(|m| m.as_ref().map(|m| m.0.clone()))
                .collect(),
            rewards: out.rewards.clone(),
            terms: out.terms.clone(),
            meeting: out.events.meeting,
            risk_active: out.events.risk_active,
            collision: out.events.collision,
            ship_distance: out.events.ship_distance,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct EpisodeSummary {
    pub episode: usize,
    pub steps: usize,
    pub success: bool,
    pub collision: bool,
    pub failure: Option<String>,
    pub encounter: Option<EncounterType>,
    pub give_way: Option<GiveWay>,
    pub initial_meeting: Option<MeetingPoint>,
    pub target_color: Option<usize>,
    pub path_lengths: Vec<f64>,
    pub closest_approach: Option<f64>,
    pub total_return: f64,
}

impl EpisodeSummary {
    pub fn begin(episode: usize, ws: &WorldState) -> Self {
        Self {
            episode,
            steps: 0,
            success: false,
            collision: false,
            failure: None,
            encounter: ws.encounter.map(|(e, _)| e),
            give_way: ws.encounter.map(|(_, g)| g),
            initial_meeting: ws.initial_meeting,
            target_color: if ws.landmarks.is_empty() {
                None
            } else {
                Some(ws.target_color)
            },
            path_lengths: vec![0.0; ws.ships.len()],
            closest_approach: None,
            total_return: 0.0,
        }
    }

    /// Accumulates per-step statistics (path length, closest approach,
    /// collision flag, summed return over all agents).
    pub fn absorb(&mut self, prev: &WorldState, out: &StepOutcome) {
        self.steps += 1;
        for (i, (before, after)) in prev.ships.iter().zip(&out.world.ships).enumerate() {
            self.path_lengths[i] +=
                (after.x0 - before.x0).hypot(after.y0 - before.y0);
        }
        if let Some(d) = out.events.ship_distance {
            self.closest_approach = Some(self.closest_approach.map_or(d, |c: f64| c.min(d)));
        }
        self.collision |= out.events.collision;
        self.total_return += out.rewards.iter().sum::<f64>();
        if let Some(f) = &out.failure {
            self.failure = Some(f.clone());
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum LogRecord {
    Step(StepRecord),
    Summary(EpisodeSummary),
}

pub struct EpisodeLogWriter {
    out: BufWriter<File>,
}

impl EpisodeLogWriter {
    pub fn create<P: AsRef<Path>>(path: P) -> Result<Self, LogError> {
        Ok(Self {
            out: BufWriter::new(File::create(path)?),
        })
    }

    pub fn write(&mut self, record: &LogRecord) -> Result<(), LogError> {
        serde_json::to_writer(&mut self.out, record)
            .map_err(|e| LogError::Parse { line: 0, source: e })?;
        self.out.write_all(b"\n")?;
        Ok(())
    }

    pub fn finish(mut self) -> Result<(), LogError> {
        self.out.flush()?;
        Ok(())
    }
}

/// One fully logged episode.
#[derive(Clone, Debug)]
pub struct EpisodeLog {
    pub steps: Vec<StepRecord>,
    pub summary: EpisodeSummary,
}

pub fn read_episode_logs<P: AsRef<Path>>(path: P) -> Result<Vec<EpisodeLog>, LogError> {
    let reader = BufReader::new(File::open(path)?);
    let mut episodes = Vec::new();
    let mut pending: Vec<StepRecord> = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let record: LogRecord = serde_json::from_str(&line).map_err(|e| LogError::Parse {
            line: idx + 1,
            source: e,
        })?;
        match record {
            LogRecord::Step(s) => pending.push(s),
            LogRecord::Summary(summary) => episodes.push(EpisodeLog {
                steps: std::mem::take(&mut pending),
                summary,
            }),
        }
    }
    if !pending.is_empty() {
        return Err(LogError::Truncated(pending.len()));
    }
    Ok(episodes)
}
