//! Bayesian updating of the regime probabilities and of the state
//! distribution, their long-run limits and the conditional transition
//! matrix.

mod limits;
mod path;
mod scenario;

pub use limits::{state_limit, state_limit_with, switching_limit, switching_limit_with};
pub use path::{likelihood, log_likelihood, path_stats, PathFile, PathRecord, PathStats};
pub use scenario::{Current, InformationScenario, Past, ScenarioFile};

use crate::error::{Error, Result};
use crate::matcore::{expm, Matrix};
use crate::model::MixtureModel;

/// `weights[k][j]` is proportional to the probability of the observed past,
/// `X_t = j` and regime `k`. For path observations each column is rescaled
/// separately and the state at `t` is the last observed state.
struct Evidence {
    weights: Vec<Vec<f64>>,
    point: Option<usize>,
}

fn evidence(model: &MixtureModel, scenario: &InformationScenario) -> Result<Evidence> {
    let size = model.n() + 1;
    scenario.check_states(size)?;
    let t = scenario.t;
    match &scenario.past {
        Past::Nothing | Past::Initial(_) => {
            let mut weights = Vec::with_capacity(model.m());
            for k in 0..model.m() {
                let s = model.s0(k);
                let start: Vec<f64> = match &scenario.past {
                    Past::Initial(i0) => (0..size)
                        .map(|i| if i == *i0 { s[i] } else { 0.0 })
                        .collect(),
                    _ => model.pi0().iter().zip(s).map(|(p, s)| p * s).collect(),
                };
                weights.push(expm(model.q(k), t)?.vec_mul(&start));
            }
            Ok(Evidence {
                weights,
                point: None,
            })
        }
        Past::Path(rec) => {
            let i0 = rec.initial();
            let mut logs = vec![vec![None; size]; model.m()];
            for (k, row) in logs.iter_mut().enumerate() {
                let prior = model.s0(k)[i0];
                if prior <= 0.0 {
                    continue;
                }
                for (j, slot) in row.iter_mut().enumerate() {
                    *slot = log_likelihood(rec, model.q(k), j)?.map(|ll| ll + prior.ln());
                }
            }
            let mut weights = vec![vec![0.0; size]; model.m()];
            for j in 0..size {
                let top = logs
                    .iter()
                    .filter_map(|row| row[j])
                    .fold(f64::NEG_INFINITY, f64::max);
                if top == f64::NEG_INFINITY {
                    continue;
                }
                for k in 0..model.m() {
                    if let Some(l) = logs[k][j] {
                        weights[k][j] = (l - top).exp();
                    }
                }
            }
            Ok(Evidence {
                weights,
                point: Some(rec.last()),
            })
        }
    }
}

fn column_posterior(ev: &Evidence, j: usize) -> Option<Vec<f64>> {
    let total: f64 = ev.weights.iter().map(|w| w[j]).sum();
    (total > 0.0 && total.is_finite()).then(|| ev.weights.iter().map(|w| w[j] / total).collect())
}

/// Posterior regime probabilities given the scenario, which must fix the
/// current state.
pub fn switching_update(model: &MixtureModel, scenario: &InformationScenario) -> Result<Vec<f64>> {
    let Current::State(j) = scenario.current else {
        return Err(Error::UnsupportedScenario(
            "switching probabilities need the current state".into(),
        ));
    };
    let ev = evidence(model, scenario)?;
    column_posterior(&ev, j).ok_or(Error::ImpossibleObservation)
}

/// Diagonals of `S^(k)(t)` over the whole state space, using the past of
/// the scenario. States that cannot be occupied at `t` keep the prior.
pub fn switching_diagonals(
    model: &MixtureModel,
    scenario: &InformationScenario,
) -> Result<Vec<Vec<f64>>> {
    let ev = evidence(model, scenario)?;
    let size = model.n() + 1;
    let mut out: Vec<Vec<f64>> = (0..model.m()).map(|k| model.s0(k).to_vec()).collect();
    for j in 0..size {
        if let Some(col) = column_posterior(&ev, j) {
            for (k, x) in col.into_iter().enumerate() {
                out[k][j] = x;
            }
        }
    }
    Ok(out)
}

fn filter(ev: &Evidence, size: usize) -> Result<Vec<f64>> {
    if let Some(last) = ev.point {
        let mut v = vec![0.0; size];
        v[last] = 1.0;
        return Ok(v);
    }
    let v: Vec<f64> = (0..size)
        .map(|j| ev.weights.iter().map(|w| w[j]).sum())
        .collect();
    let total: f64 = v.iter().sum();
    if !(total > 0.0) {
        return Err(Error::ImpossibleObservation);
    }
    Ok(v.into_iter().map(|x| x / total).collect())
}

/// Distribution of `X_t` over the whole state space given the past of the
/// scenario (its current-state part is ignored).
pub fn state_update(model: &MixtureModel, scenario: &InformationScenario) -> Result<Vec<f64>> {
    filter(&evidence(model, scenario)?, model.n() + 1)
}

/// Distribution of `X_t` over the transient states given the past and
/// survival up to `t`.
pub fn state_update_alive(
    model: &MixtureModel,
    scenario: &InformationScenario,
) -> Result<Vec<f64>> {
    let mut v = state_update(model, scenario)?;
    v.pop();
    let total: f64 = v.iter().sum();
    if !(total > 0.0) {
        return Err(Error::ImpossibleObservation);
    }
    Ok(v.into_iter().map(|x| x / total).collect())
}

/// `P(t, s) = Σ_k S^(k)(t) e^{Q^(k)(s−t)}`.
pub fn transition_matrix(
    model: &MixtureModel,
    scenario: &InformationScenario,
    s: f64,
) -> Result<Matrix> {
    let t = scenario.t;
    if !(s >= t) || !s.is_finite() {
        return Err(Error::InvalidTime(format!("target time {s} precedes {t}")));
    }
    let diags = switching_diagonals(model, scenario)?;
    let size = model.n() + 1;
    let mut p = Matrix::zeros(size, size);
    for (k, d) in diags.iter().enumerate() {
        p = &p + &Matrix::diag_mul(d, &expm(model.q(k), s - t)?);
    }
    Ok(p)
}

/// Starting weights for the exit-time laws: `regimes[k]` is
/// `w ∘ diag S^(k)(t)` over the transient states, where `w` is the
/// conditional law of `X_t` on the transient states; `atom` is the
/// remaining mass, already absorbed at `t`.
#[derive(Debug, Clone, PartialEq)]
pub struct ExitWeights {
    pub t: f64,
    pub regimes: Vec<Vec<f64>>,
    pub atom: f64,
}

impl ExitWeights {
    /// `w`, the conditional law of `X_t` restricted to transient states.
    pub fn state_weights(&self) -> Vec<f64> {
        let n = self.regimes[0].len();
        (0..n)
            .map(|i| self.regimes.iter().map(|r| r[i]).sum())
            .collect()
    }
}

pub fn exit_weights(model: &MixtureModel, scenario: &InformationScenario) -> Result<ExitWeights> {
    let n = model.n();
    let w: Vec<f64> = match scenario.current {
        Current::State(j) => {
            // surfaces impossible observations
            switching_update(model, scenario)?;
            (0..n).map(|i| if i == j { 1.0 } else { 0.0 }).collect()
        }
        Current::Alive => state_update_alive(model, scenario)?,
        Current::Unknown => {
            let mut v = state_update(model, scenario)?;
            v.pop();
            v
        }
    };
    let diags = switching_diagonals(model, scenario)?;
    let regimes = diags
        .iter()
        .map(|d| w.iter().zip(d).map(|(a, b)| a * b).collect())
        .collect();
    Ok(ExitWeights {
        t: scenario.t,
        regimes,
        atom: 1.0 - w.iter().sum::<f64>(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::presets::{birth_death, exponential, BirthDeathParams, ExponentialParams};

    #[test]
    fn switching_at_zero_is_prior() {
        let (model, _) = exponential(&ExponentialParams::default()).unwrap();
        let s = InformationScenario::current_only(0, 0.0).unwrap();
        let post = switching_update(&model, &s).unwrap();
        assert!((post[1] - 0.4).abs() < 1e-15);
    }

    #[test]
    fn exponential_switching_closed_form() {
        // regime 2 leaves state 1 at rate b1 + b2, regime 1 at a1 + a2
        let p = ExponentialParams::default();
        let (model, _) = exponential(&p).unwrap();
        let t = 1.3;
        let s = InformationScenario::current_only(0, t).unwrap();
        let post = switching_update(&model, &s).unwrap();
        let w2 = p.p[0] * (-(p.b1 + p.b2) * t).exp();
        let w1 = (1.0 - p.p[0]) * (-(p.a1 + p.a2) * t).exp();
        assert!((post[1] - w2 / (w1 + w2)).abs() < 1e-13);
    }

    #[test]
    fn filter_sums_to_one() {
        let (model, _) = birth_death(&BirthDeathParams::default()).unwrap();
        let s = InformationScenario::no_information(3.0).unwrap();
        let v = state_update(&model, &s).unwrap();
        assert!((v.iter().sum::<f64>() - 1.0).abs() < 1e-13);
        let a = state_update_alive(&model, &s).unwrap();
        assert_eq!(a.len(), 5);
        assert!((a.iter().sum::<f64>() - 1.0).abs() < 1e-13);
    }

    #[test]
    fn transition_rows_sum_to_one() {
        let (model, _) = birth_death(&BirthDeathParams::default()).unwrap();
        let s = InformationScenario::no_information(1.0).unwrap();
        let p = transition_matrix(&model, &s, 2.5).unwrap();
        for r in p.row_sums() {
            assert!((r - 1.0).abs() < 1e-12);
        }
        assert!(transition_matrix(&model, &s, 0.5).is_err());
    }

    #[test]
    fn path_filter_is_last_state() {
        let (model, _) = birth_death(&BirthDeathParams::default()).unwrap();
        let rec = PathRecord::new(vec![0.0, 0.4], vec![0, 1], 1.0).unwrap();
        let v = state_update(&model, &InformationScenario::past_only_full(rec)).unwrap();
        assert_eq!(v[1], 1.0);
    }

    #[test]
    fn impossible_current_state() {
        let (model, _) = exponential(&ExponentialParams::default()).unwrap();
        // state 1 is never re-entered once left
        let rec = PathRecord::new(vec![0.0, 0.4], vec![0, 1], 1.0).unwrap();
        let s = InformationScenario::full_path(rec, 0);
        assert_eq!(
            switching_update(&model, &s),
            Err(Error::ImpossibleObservation)
        );
    }

    #[test]
    fn switching_needs_current_state() {
        let (model, _) = exponential(&ExponentialParams::default()).unwrap();
        let s = InformationScenario::alive_current_only(1.0).unwrap();
        assert!(matches!(
            switching_update(&model, &s),
            Err(Error::UnsupportedScenario(_))
        ));
    }
}
