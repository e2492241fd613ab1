use serde::{Deserialize, Serialize};

use super::path::{PathFile, PathRecord};
use crate::error::{Error, Result};

/// What has been seen on `[0, t)`.
#[derive(Debug, Clone, PartialEq)]
pub enum Past {
    Nothing,
    Initial(usize),
    Path(PathRecord),
}

/// What is known about the state at `t`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Current {
    State(usize),
    /// Only that the process has not been absorbed.
    Alive,
    Unknown,
}

/// The conditioning information at time `t`.
#[derive(Debug, Clone, PartialEq)]
pub struct InformationScenario {
    pub t: f64,
    pub past: Past,
    pub current: Current,
}

fn check_time(t: f64) -> Result<()> {
    if t.is_finite() && t >= 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidTime(format!(
            "conditioning time {t} must be finite and non-negative"
        )))
    }
}

impl InformationScenario {
    pub fn new(t: f64, past: Past, current: Current) -> Result<Self> {
        check_time(t)?;
        if let Past::Path(rec) = &past {
            if rec.horizon() != t {
                return Err(Error::InvalidTime(format!(
                    "path horizon {} differs from conditioning time {t}",
                    rec.horizon()
                )));
            }
        }
        Ok(Self { t, past, current })
    }

    /// Full path on `[0, t)` and `X_t = j`.
    pub fn full_path(record: PathRecord, j: usize) -> Self {
        Self {
            t: record.horizon(),
            past: Past::Path(record),
            current: Current::State(j),
        }
    }

    pub fn current_only(j: usize, t: f64) -> Result<Self> {
        Self::new(t, Past::Nothing, Current::State(j))
    }

    pub fn initial_and_current(i0: usize, j: usize, t: f64) -> Result<Self> {
        Self::new(t, Past::Initial(i0), Current::State(j))
    }

    /// Full path, current state left to the filter (it equals the last
    /// observed state).
    pub fn past_only_full(record: PathRecord) -> Self {
        Self {
            t: record.horizon(),
            past: Past::Path(record),
            current: Current::Unknown,
        }
    }

    pub fn alive_full(record: PathRecord) -> Self {
        Self {
            t: record.horizon(),
            past: Past::Path(record),
            current: Current::Alive,
        }
    }

    pub fn alive_current_only(t: f64) -> Result<Self> {
        Self::new(t, Past::Nothing, Current::Alive)
    }

    pub fn alive_initial(i0: usize, t: f64) -> Result<Self> {
        Self::new(t, Past::Initial(i0), Current::Alive)
    }

    pub fn no_information(t: f64) -> Result<Self> {
        Self::new(t, Past::Nothing, Current::Unknown)
    }

    pub fn initial_only(i0: usize, t: f64) -> Result<Self> {
        Self::new(t, Past::Initial(i0), Current::Unknown)
    }

    /// Rejects states outside `0..size`.
    pub fn check_states(&self, size: usize) -> Result<()> {
        let bad = |s: usize| {
            Err(Error::InvalidInput(format!(
                "state {} outside 1..={size}",
                s + 1
            )))
        };
        match &self.past {
            Past::Initial(i) if *i >= size => return bad(*i),
            Past::Path(rec) => rec.check_states(size)?,
            _ => {}
        }
        match self.current {
            Current::State(j) if j >= size => bad(j),
            _ => Ok(()),
        }
    }
}

/// JSON form of a scenario, 1-based states.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ScenarioFile {
    FullPath {
        path: PathFile,
        /// Defaults to the last observed state.
        #[serde(default)]
        state: Option<usize>,
    },
    CurrentOnly {
        t: f64,
        state: usize,
    },
    InitialAndCurrent {
        t: f64,
        initial: usize,
        state: usize,
    },
    PastOnlyFull {
        path: PathFile,
    },
    AliveFull {
        path: PathFile,
    },
    AliveCurrentOnly {
        t: f64,
    },
    AliveInitial {
        t: f64,
        initial: usize,
    },
    NoInformation {
        t: f64,
    },
    InitialOnly {
        t: f64,
        initial: usize,
    },
}

fn zero_based(s: usize) -> Result<usize> {
    s.checked_sub(1)
        .ok_or_else(|| Error::InvalidInput("states are numbered from 1".into()))
}

impl ScenarioFile {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::InvalidInput(format!("scenario JSON: {e}")))
    }

    pub fn build(&self) -> Result<InformationScenario> {
        use ScenarioFile::*;
        match self {
            FullPath { path, state } => {
                let rec = path.build()?;
                let j = match state {
                    Some(s) => zero_based(*s)?,
                    None => rec.last(),
                };
                Ok(InformationScenario::full_path(rec, j))
            }
            CurrentOnly { t, state } => InformationScenario::current_only(zero_based(*state)?, *t),
            InitialAndCurrent { t, initial, state } => InformationScenario::initial_and_current(
                zero_based(*initial)?,
                zero_based(*state)?,
                *t,
            ),
            PastOnlyFull { path } => Ok(InformationScenario::past_only_full(path.build()?)),
            AliveFull { path } => Ok(InformationScenario::alive_full(path.build()?)),
            AliveCurrentOnly { t } => InformationScenario::alive_current_only(*t),
            AliveInitial { t, initial } => {
                InformationScenario::alive_initial(zero_based(*initial)?, *t)
            }
            NoInformation { t } => InformationScenario::no_information(*t),
            InitialOnly { t, initial } => {
                InformationScenario::initial_only(zero_based(*initial)?, *t)
            }
        }
    }
}
