use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matcore::Matrix;

/// A fully observed trajectory on `[0, horizon]`: the process enters
/// `states[l]` at `times[l]`. `times[0]` is 0 and times strictly increase.
#[derive(Debug, Clone, PartialEq)]
pub struct PathRecord {
    times: Vec<f64>,
    states: Vec<usize>,
    horizon: f64,
}

impl PathRecord {
    pub fn new(times: Vec<f64>, states: Vec<usize>, horizon: f64) -> Result<Self> {
        if times.is_empty() || times.len() != states.len() {
            return Err(Error::InvalidPath(
                "need one entry state per entry time and at least one".into(),
            ));
        }
        if times[0] != 0.0 {
            return Err(Error::InvalidPath(format!(
                "path must start at time 0, starts at {}",
                times[0]
            )));
        }
        if !horizon.is_finite() || times.iter().any(|t| !t.is_finite()) {
            return Err(Error::InvalidPath("non-finite time".into()));
        }
        if times.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidPath(
                "entry times must strictly increase".into(),
            ));
        }
        if *times.last().unwrap() > horizon {
            return Err(Error::InvalidPath(format!(
                "last entry time {} is after the horizon {horizon}",
                times.last().unwrap()
            )));
        }
        if let Some(w) = states.windows(2).find(|w| w[0] == w[1]) {
            return Err(Error::InvalidPath(format!(
                "self-transition in state {}",
                w[0] + 1
            )));
        }
        Ok(Self {
            times,
            states,
            horizon,
        })
    }

    /// Builds a record from checkpoints `(time, state)` sorted by time,
    /// dropping checkpoints that repeat the current state.
    pub fn from_checkpoints(points: &[(f64, usize)], horizon: f64) -> Result<Self> {
        let mut times = Vec::new();
        let mut states: Vec<usize> = Vec::new();
        for &(t, s) in points {
            if states.last() != Some(&s) {
                times.push(t);
                states.push(s);
            }
        }
        Self::new(times, states, horizon)
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn states(&self) -> &[usize] {
        &self.states
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn initial(&self) -> usize {
        self.states[0]
    }

    pub fn last(&self) -> usize {
        *self.states.last().unwrap()
    }

    pub fn check_states(&self, size: usize) -> Result<()> {
        match self.states.iter().find(|&&s| s >= size) {
            Some(&s) => Err(Error::InvalidPath(format!(
                "state {} outside 1..={size}",
                s + 1
            ))),
            None => Ok(()),
        }
    }
}

/// Occupation times and jump counts of a path.
#[derive(Debug, Clone, PartialEq)]
pub struct PathStats {
    pub occupation: Vec<f64>,
    pub jumps: Vec<Vec<u32>>,
}

pub fn path_stats(record: &PathRecord, size: usize) -> Result<PathStats> {
    record.check_states(size)?;
    let mut occupation = vec![0.0; size];
    let mut jumps = vec![vec![0u32; size]; size];
    let n = record.states.len();
    for l in 0..n {
        let end = if l + 1 < n {
            record.times[l + 1]
        } else {
            record.horizon
        };
        occupation[record.states[l]] += end - record.times[l];
        if l + 1 < n {
            jumps[record.states[l]][record.states[l + 1]] += 1;
        }
    }
    Ok(PathStats { occupation, jumps })
}

/// Log-likelihood of the path under one intensity matrix, ending with a
/// jump into `current` at the horizon when `current` differs from the last
/// state. `None` when the path is impossible.
pub fn log_likelihood(record: &PathRecord, q: &Matrix, current: usize) -> Result<Option<f64>> {
    let stats = path_stats(record, q.rows())?;
    let mut ll = 0.0;
    for (l, &time) in stats.occupation.iter().enumerate() {
        ll += q[(l, l)] * time;
    }
    let mut add_jump = |from: usize, to: usize, count: u32| -> bool {
        let rate = q[(from, to)];
        if rate <= 0.0 {
            return false;
        }
        ll += f64::from(count) * rate.ln();
        true
    };
    for (from, row) in stats.jumps.iter().enumerate() {
        for (to, &count) in row.iter().enumerate() {
            if count > 0 && !add_jump(from, to, count) {
                return Ok(None);
            }
        }
    }
    if current >= q.rows() {
        return Err(Error::InvalidInput(format!(
            "state {} out of range",
            current + 1
        )));
    }
    if current != record.last() && !add_jump(record.last(), current, 1) {
        return Ok(None);
    }
    Ok(Some(ll))
}

/// Path likelihood `∏ e^{q_ll T_l} ∏ q_lj^{N_lj}` under `q`.
pub fn likelihood(record: &PathRecord, q: &Matrix) -> Result<f64> {
    Ok(log_likelihood(record, q, record.last())?.map_or(0.0, f64::exp))
}

/// JSON form: 1-based states.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PathFile {
    /// `[time, state]` pairs.
    pub events: Vec<(f64, usize)>,
    pub horizon: f64,
}

impl PathFile {
    pub fn build(&self) -> Result<PathRecord> {
        let mut times = Vec::with_capacity(self.events.len());
        let mut states = Vec::with_capacity(self.events.len());
        for &(t, s) in &self.events {
            if s == 0 {
                return Err(Error::InvalidPath("states are numbered from 1".into()));
            }
            times.push(t);
            states.push(s - 1);
        }
        PathRecord::new(times, states, self.horizon)
    }

    pub fn from_record(record: &PathRecord) -> Self {
        Self {
            events: record
                .times
                .iter()
                .zip(&record.states)
                .map(|(&t, &s)| (t, s + 1))
                .collect(),
            horizon: record.horizon,
        }
    }
}
