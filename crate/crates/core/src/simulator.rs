//! Monte Carlo sampler of mixture paths and exit times, used as an
//! independent check of the closed-form laws.
//!
//! Path `i` draws from its own ChaCha stream `(seed, i)`, so results do not
//! depend on the number of worker threads.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::inference::{Current, InformationScenario, Past, PathRecord};
use crate::model::{ClosedSetFamily, MixtureModel};

/// Smallest acceptance rate tolerated by rejection conditioning.
pub const MIN_ACCEPTANCE: f64 = 1e-4;

const CHUNK: u64 = 4096;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimConfig {
    pub n_paths: u64,
    pub seed: u64,
    /// Paths are censored here; `None` picks 50 mean holding times of the
    /// slowest transient state.
    pub horizon: Option<f64>,
    /// Pairs path `2i+1` with path `2i` by reflecting every uniform.
    pub antithetic: bool,
}

impl SimConfig {
    pub fn new(n_paths: u64, seed: u64) -> Self {
        Self {
            n_paths,
            seed,
            horizon: None,
            antithetic: false,
        }
    }

    fn check(&self) -> Result<()> {
        if self.n_paths == 0 {
            return Err(Error::InvalidInput("n_paths must be at least 1".into()));
        }
        if let Some(h) = self.horizon {
            if !(h > 0.0 && h.is_finite()) {
                return Err(Error::InvalidInput(format!("horizon {h} must be positive")));
            }
        }
        if self.antithetic && self.n_paths % 2 == 1 {
            return Err(Error::InvalidInput(
                "antithetic sampling needs an even n_paths".into(),
            ));
        }
        Ok(())
    }
}

pub fn default_horizon(model: &MixtureModel) -> f64 {
    let slowest = model
        .intensities()
        .iter()
        .flat_map(|q| (0..model.n()).map(move |i| -q[(i, i)]))
        .filter(|&r| r > 0.0)
        .fold(f64::INFINITY, f64::min);
    50.0 / slowest
}

/// Uniforms on `[0, 1)`, reflected for the antithetic partner.
struct Uniforms {
    rng: ChaCha8Rng,
    reflect: bool,
}

impl Uniforms {
    fn for_path(seed: u64, index: u64, antithetic: bool) -> Self {
        let (stream, reflect) = if antithetic {
            (index / 2, index % 2 == 1)
        } else {
            (index, false)
        };
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(stream);
        Self { rng, reflect }
    }

    fn next(&mut self) -> f64 {
        let u: f64 = self.rng.gen();
        if self.reflect {
            // stays in (0, 1]; callers only take logs of 1 − u or compare
            1.0 - u
        } else {
            u
        }
    }

    fn exponential(&mut self, rate: f64) -> f64 {
        let u = self.next();
        -(1.0 - u).max(f64::MIN_POSITIVE).ln() / rate
    }
}

fn categorical(weights: &[f64], u: f64) -> Option<usize> {
    let total: f64 = weights.iter().sum();
    if !(total > 0.0) {
        return None;
    }
    let target = u * total;
    let mut acc = 0.0;
    let mut last = None;
    for (i, &w) in weights.iter().enumerate() {
        if w <= 0.0 {
            continue;
        }
        acc += w;
        last = Some(i);
        if target < acc {
            return last;
        }
    }
    last
}

/// One sampled trajectory with its regime.
#[derive(Debug, Clone, PartialEq)]
pub struct SampledPath {
    pub regime: usize,
    pub times: Vec<f64>,
    pub states: Vec<usize>,
    /// End of observation: absorption time or the horizon.
    pub end: f64,
    pub absorbed: bool,
}

impl SampledPath {
    pub fn state_at(&self, t: f64) -> usize {
        let idx = self.times.partition_point(|&x| x <= t);
        self.states[idx.max(1) - 1]
    }

    /// The path seen on `[0, t]`.
    pub fn record_until(&self, t: f64) -> Result<PathRecord> {
        let k = self.times.partition_point(|&x| x <= t).max(1);
        PathRecord::new(self.times[..k].to_vec(), self.states[..k].to_vec(), t)
    }

    /// Whole observed path, ending at absorption or the horizon.
    pub fn record(&self) -> Result<PathRecord> {
        PathRecord::new(self.times.clone(), self.states.clone(), self.end)
    }

    /// First entry time into each set; `None` when censored.
    pub fn exit_times(&self, family: &ClosedSetFamily) -> Vec<Option<f64>> {
        (0..family.p())
            .map(|l| {
                self.states
                    .iter()
                    .position(|&s| family.contains(l, s))
                    .map(|i| self.times[i])
            })
            .collect()
    }

    /// Absorption time, `None` when censored.
    pub fn absorption(&self) -> Option<f64> {
        self.absorbed.then_some(self.end)
    }
}

fn sample_with(model: &MixtureModel, u: &mut Uniforms, horizon: f64) -> SampledPath {
    let absorbing = model.absorbing();
    let i0 = categorical(model.pi0(), u.next()).expect("initial law has mass");
    let prior: Vec<f64> = (0..model.m()).map(|k| model.s0(k)[i0]).collect();
    let regime = categorical(&prior, u.next()).expect("switching probabilities have mass");
    let q = model.q(regime);
    let mut times = vec![0.0];
    let mut states = vec![i0];
    let mut now = 0.0;
    let mut state = i0;
    loop {
        if state == absorbing {
            return SampledPath {
                regime,
                times,
                states,
                end: now,
                absorbed: true,
            };
        }
        let rate = -q[(state, state)];
        if rate <= 0.0 {
            return SampledPath {
                regime,
                times,
                states,
                end: horizon,
                absorbed: false,
            };
        }
        now += u.exponential(rate);
        if now > horizon {
            return SampledPath {
                regime,
                times,
                states,
                end: horizon,
                absorbed: false,
            };
        }
        let mut row = q.row(state).to_vec();
        row[state] = 0.0;
        state = categorical(&row, u.next()).expect("positive exit rate");
        times.push(now);
        states.push(state);
    }
}

/// Draws one path: initial state from `π0`, regime from the switching
/// probabilities at that state, then the regime's chain until absorption
/// or `horizon`.
pub fn sample_path<R: Rng>(model: &MixtureModel, rng: &mut R, horizon: f64) -> SampledPath {
    let seed = rng.gen();
    let mut u = Uniforms {
        rng: ChaCha8Rng::seed_from_u64(seed),
        reflect: false,
    };
    sample_with(model, &mut u, horizon)
}

/// Deterministic path `index` of a run.
pub fn sample_indexed(model: &MixtureModel, config: &SimConfig, index: u64) -> SampledPath {
    let horizon = config.horizon.unwrap_or_else(|| default_horizon(model));
    sample_at(model, config, horizon, index)
}

fn sample_at(model: &MixtureModel, config: &SimConfig, horizon: f64, index: u64) -> SampledPath {
    let mut u = Uniforms::for_path(config.seed, index, config.antithetic);
    sample_with(model, &mut u, horizon)
}

/// Whether a path agrees with the scenario. Scenarios with a full path
/// cannot be reproduced by rejection.
fn accepts(scenario: &InformationScenario, path: &SampledPath, absorbing: usize) -> bool {
    let t = scenario.t;
    let initial_ok = match scenario.past {
        Past::Nothing => true,
        Past::Initial(i0) => path.states[0] == i0,
        Past::Path(_) => false,
    };
    let at_t = path.state_at(t);
    initial_ok
        && match scenario.current {
            Current::State(j) => at_t == j,
            Current::Alive => at_t != absorbing,
            Current::Unknown => true,
        }
}

/// Mean of a per-path statistic with its standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Estimate {
    pub estimate: f64,
    pub stderr: f64,
    /// Paths that entered the estimate.
    pub n_paths: u64,
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
struct Moments {
    count: u64,
    censored: u64,
    sum: f64,
    sum_sq: f64,
}

impl Moments {
    fn merge(mut self, o: Moments) -> Moments {
        self.count += o.count;
        self.censored += o.censored;
        self.sum += o.sum;
        self.sum_sq += o.sum_sq;
        self
    }

    fn push(&mut self, x: f64) {
        self.count += 1;
        self.sum += x;
        self.sum_sq += x * x;
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
struct Accumulator {
    drawn: u64,
    accepted: u64,
    stats: Vec<Moments>,
}

impl Accumulator {
    fn new(n: usize) -> Self {
        Self {
            drawn: 0,
            accepted: 0,
            stats: vec![Moments::default(); n],
        }
    }

    fn merge(mut self, o: Accumulator) -> Accumulator {
        self.drawn += o.drawn;
        self.accepted += o.accepted;
        for (a, b) in self.stats.iter_mut().zip(o.stats) {
            *a = a.merge(b);
        }
        self
    }
}

/// A per-path statistic; `None` for paths it cannot score (censoring).
pub type Statistic<'a> = Box<dyn Fn(&SampledPath) -> Option<f64> + Sync + 'a>;

/// Runs `config.n_paths` paths, keeps those that agree with the scenario
/// and averages `stat` over them. With antithetic sampling each pair is
/// scored by the mean of its two members.
pub fn estimate<F>(
    model: &MixtureModel,
    scenario: &InformationScenario,
    config: &SimConfig,
    stat: F,
) -> Result<Estimate>
where
    F: Fn(&SampledPath) -> Option<f64> + Sync,
{
    let stats: Vec<Statistic> = vec![Box::new(stat)];
    Ok(estimate_all(model, scenario, config, &stats)?[0])
}

/// Several statistics over one shared set of paths.
pub fn estimate_all(
    model: &MixtureModel,
    scenario: &InformationScenario,
    config: &SimConfig,
    stats: &[Statistic],
) -> Result<Vec<Estimate>> {
    config.check()?;
    scenario.check_states(model.n() + 1)?;
    if matches!(scenario.past, Past::Path(_)) {
        return Err(Error::UnsupportedScenario(
            "full-path scenarios cannot be reproduced by rejection".into(),
        ));
    }
    let conditioned = !matches!(
        (&scenario.past, scenario.current),
        (Past::Nothing, Current::Unknown)
    );
    if config.antithetic && conditioned {
        return Err(Error::UnsupportedScenario(
            "antithetic sampling is only available without conditioning".into(),
        ));
    }
    let absorbing = model.absorbing();
    let horizon = config.horizon.unwrap_or_else(|| default_horizon(model));
    let step = if config.antithetic { 2 } else { 1 };
    let units = config.n_paths / step;
    let chunks = units.div_ceil(CHUNK);
    let parts: Vec<Accumulator> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut acc = Accumulator::new(stats.len());
            let mut values = vec![Vec::with_capacity(2); stats.len()];
            for unit in c * CHUNK..((c + 1) * CHUNK).min(units) {
                values.iter_mut().for_each(Vec::clear);
                for member in 0..step {
                    let path = sample_at(model, config, horizon, unit * step + member);
                    acc.drawn += 1;
                    if !accepts(scenario, &path, absorbing) {
                        continue;
                    }
                    acc.accepted += 1;
                    for (i, stat) in stats.iter().enumerate() {
                        match stat(&path) {
                            Some(x) => values[i].push(x),
                            None => acc.stats[i].censored += 1,
                        }
                    }
                }
                for (m, v) in acc.stats.iter_mut().zip(&values) {
                    if v.len() == step as usize {
                        m.push(v.iter().sum::<f64>() / step as f64);
                    }
                }
            }
            acc
        })
        .collect();
    let total = parts
        .into_iter()
        .fold(Accumulator::new(stats.len()), Accumulator::merge);
    let rate = total.accepted as f64 / total.drawn as f64;
    if rate < MIN_ACCEPTANCE {
        return Err(Error::InfeasibleConditioning {
            rate,
            min: MIN_ACCEPTANCE,
        });
    }
    total
        .stats
        .iter()
        .map(|m| {
            if m.count == 0 {
                return Err(Error::InfeasibleConditioning {
                    rate: 0.0,
                    min: MIN_ACCEPTANCE,
                });
            }
            if m.censored as f64 > 1e-3 * total.accepted as f64 {
                log::warn!(
                    "{} of {} accepted paths censored at the horizon; estimate is biased",
                    m.censored,
                    total.accepted
                );
            }
            let n = m.count as f64;
            let mean = m.sum / n;
            let var = if m.count > 1 {
                ((m.sum_sq - n * mean * mean) / (n - 1.0)).max(0.0)
            } else {
                0.0
            };
            Ok(Estimate {
                estimate: mean,
                stderr: (var / n).sqrt(),
                n_paths: m.count,
                seed: config.seed,
            })
        })
        .collect()
}

fn horizon_covers(model: &MixtureModel, config: &SimConfig, times: &[f64]) -> Result<()> {
    let horizon = config.horizon.unwrap_or_else(|| default_horizon(model));
    match times.iter().find(|&&s| s > horizon) {
        Some(s) => Err(Error::InvalidInput(format!(
            "time {s} lies beyond the simulation horizon {horizon}"
        ))),
        None => Ok(()),
    }
}

/// `P(τ_1 > s_1, …, τ_p > s_p | scenario)`.
pub fn estimate_surv(
    model: &MixtureModel,
    family: &ClosedSetFamily,
    scenario: &InformationScenario,
    times: &[f64],
    config: &SimConfig,
) -> Result<Estimate> {
    if times.len() != family.p() {
        return Err(Error::DimensionMismatch(format!(
            "{} times for {} closed sets",
            times.len(),
            family.p()
        )));
    }
    horizon_covers(model, config, times)?;
    estimate(model, scenario, config, |path| {
        let exits = path.exit_times(family);
        let survived = exits
            .iter()
            .zip(times)
            .all(|(e, &s)| e.is_none_or(|e| e > s));
        Some(if survived { 1.0 } else { 0.0 })
    })
}

/// `P(τ > s | scenario)` for the absorption time.
pub fn estimate_surv_uni(
    model: &MixtureModel,
    scenario: &InformationScenario,
    s: f64,
    config: &SimConfig,
) -> Result<Estimate> {
    horizon_covers(model, config, &[s])?;
    estimate(model, scenario, config, |path| {
        Some(if path.absorption().is_none_or(|a| a > s) {
            1.0
        } else {
            0.0
        })
    })
}

/// `E[((τ − t)^+)^order | scenario]`, censored paths dropped.
pub fn estimate_moment(
    model: &MixtureModel,
    scenario: &InformationScenario,
    order: u32,
    config: &SimConfig,
) -> Result<Estimate> {
    let t = scenario.t;
    estimate(model, scenario, config, |path| {
        path.absorption()
            .map(|a| (a - t).max(0.0).powi(order as i32))
    })
}

/// `E[(τ_1 − t)^+ (τ_2 − t)^+ | scenario]`, censored paths dropped.
pub fn estimate_cross_moment(
    model: &MixtureModel,
    family: &ClosedSetFamily,
    scenario: &InformationScenario,
    config: &SimConfig,
) -> Result<Estimate> {
    if family.p() != 2 {
        return Err(Error::InvalidInput(
            "cross moment needs two closed sets".into(),
        ));
    }
    let t = scenario.t;
    estimate(model, scenario, config, |path| {
        let e = path.exit_times(family);
        Some((e[0]? - t).max(0.0) * (e[1]? - t).max(0.0))
    })
}

/// `P(τ_1 = τ_2 < ∞)` without conditioning: both sets entered by the same
/// jump.
pub fn estimate_diag_mass(
    model: &MixtureModel,
    family: &ClosedSetFamily,
    config: &SimConfig,
) -> Result<Estimate> {
    if family.p() != 2 {
        return Err(Error::InvalidInput(
            "diagonal mass needs two closed sets".into(),
        ));
    }
    let scenario = InformationScenario::no_information(0.0)?;
    estimate(model, &scenario, config, |path| {
        let e = path.exit_times(family);
        match (e[0], e[1]) {
            (Some(a), Some(b)) => Some(if a == b { 1.0 } else { 0.0 }),
            // a censored coordinate cannot tie with an observed one
            (Some(_), None) | (None, Some(_)) => Some(0.0),
            (None, None) => None,
        }
    })
}

/// The first `n` paths of a run, for dumping.
pub fn sample_paths(model: &MixtureModel, config: &SimConfig, n: u64) -> Vec<SampledPath> {
    (0..n.min(config.n_paths))
        .into_par_iter()
        .map(|i| sample_indexed(model, config, i))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matcore::Matrix;
    use crate::presets::{birth_death, BirthDeathParams};

    fn single_exit(a: f64) -> MixtureModel {
        let q = Matrix::from_rows(&[vec![-a, a], vec![0.0, 0.0]]).unwrap();
        MixtureModel::new(vec![q], vec![1.0, 0.0], vec![vec![1.0, 1.0]]).unwrap()
    }

    #[test]
    fn same_seed_same_paths() {
        let (model, _) = birth_death(&BirthDeathParams::default()).unwrap();
        let cfg = SimConfig::new(10, 7);
        assert_eq!(
            sample_indexed(&model, &cfg, 3),
            sample_indexed(&model, &cfg, 3)
        );
        assert_ne!(
            sample_indexed(&model, &cfg, 3),
            sample_indexed(&model, &cfg, 4)
        );
    }

    #[test]
    fn exponential_mean() {
        let model = single_exit(2.0);
        let cfg = SimConfig::new(100_000, 1);
        let s = InformationScenario::no_information(0.0).unwrap();
        let e = estimate_moment(&model, &s, 1, &cfg).unwrap();
        assert!((e.estimate - 0.5).abs() < 3.0 * e.stderr, "{e:?}");
    }

    #[test]
    fn antithetic_lowers_variance() {
        let model = single_exit(1.0);
        let s = InformationScenario::no_information(0.0).unwrap();
        let plain = estimate_surv_uni(&model, &s, 0.7, &SimConfig::new(20_000, 3)).unwrap();
        let cfg = SimConfig {
            antithetic: true,
            ..SimConfig::new(20_000, 3)
        };
        let anti = estimate_surv_uni(&model, &s, 0.7, &cfg).unwrap();
        assert!(anti.stderr < plain.stderr);
        assert!((anti.estimate - (-0.7f64).exp()).abs() < 3.0 * anti.stderr.max(1e-3));
    }

    #[test]
    fn impossible_conditioning_is_reported() {
        let model = single_exit(1.0);
        // alive at t = 30 has probability e^{-30}
        let s = InformationScenario::alive_current_only(30.0).unwrap();
        let cfg = SimConfig {
            horizon: Some(40.0),
            ..SimConfig::new(1000, 1)
        };
        assert!(matches!(
            estimate_moment(&model, &s, 1, &cfg),
            Err(Error::InfeasibleConditioning { .. })
        ));
    }

    #[test]
    fn paths_are_legal() {
        let (model, _) = birth_death(&BirthDeathParams::default()).unwrap();
        let cfg = SimConfig::new(500, 11);
        for path in sample_paths(&model, &cfg, 500) {
            let q = model.q(path.regime);
            for w in path.states.windows(2) {
                assert!(q[(w[0], w[1])] > 0.0);
            }
        }
    }
}
