//! Built-in example models: a two-regime mixture of exponentials, a
//! two-regime Marshall–Olkin mixture and a five-state birth–death mixture.
//!
//! In the two-regime examples regime 2 carries the `b` rates and the
//! switching probabilities `p`; regime 1 carries the `a` rates.

use crate::error::{Error, Result};
use crate::matcore::Matrix;
use crate::model::{ClosedSetFamily, MixtureModel};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExponentialParams {
    pub a1: f64,
    pub a2: f64,
    pub b1: f64,
    pub b2: f64,
    /// Probabilities of regime 2 at states 1, 2, 3.
    pub p: [f64; 3],
}

impl Default for ExponentialParams {
    fn default() -> Self {
        Self {
            a1: 1.0,
            a2: 2.0,
            b1: 0.5,
            b2: 0.75,
            p: [0.4, 0.5, 0.5],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MarshallOlkinParams {
    pub a: [f64; 3],
    pub b: [f64; 3],
    pub p: [f64; 3],
}

impl Default for MarshallOlkinParams {
    fn default() -> Self {
        Self {
            a: [1.0, 2.0, 0.5],
            b: [0.5, 0.75, 0.25],
            p: [0.4, 0.5, 0.5],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BirthDeathParams {
    pub beta: [f64; 2],
    pub alpha: [f64; 2],
    pub gamma: [f64; 2],
    pub delta: [f64; 3],
    /// Regime 2 runs at `psi` times the speed of regime 1.
    pub psi: f64,
    /// Regime 2 probability at every state.
    pub s: f64,
    pub pi: [f64; 5],
}

impl Default for BirthDeathParams {
    fn default() -> Self {
        Self {
            beta: [2.0, 2.0],
            alpha: [0.5, 0.5],
            gamma: [1.0, 1.0],
            delta: [1.0, 1.0, 1.0],
            psi: 0.5,
            s: 0.5,
            pi: [0.6, 0.3, 0.1, 0.0, 0.0],
        }
    }
}

fn positive(name: &str, x: f64) -> Result<()> {
    if x.is_finite() && x > 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidInput(format!(
            "{name} must be positive, got {x}"
        )))
    }
}

fn probability(name: &str, x: f64) -> Result<()> {
    if (0.0..=1.0).contains(&x) {
        Ok(())
    } else {
        Err(Error::InvalidInput(format!(
            "{name} must lie in [0,1], got {x}"
        )))
    }
}

/// Switching diagonals `(1 − p, p)` over states 1..3 and the absorbing
/// state (which takes `p[0]`; it never carries initial mass).
fn two_regime_switching(p: [f64; 3]) -> Vec<Vec<f64>> {
    let s2 = vec![p[0], p[1], p[2], p[0]];
    let s1 = s2.iter().map(|x| 1.0 - x).collect();
    vec![s1, s2]
}

fn three_state_generator(rows: [[f64; 3]; 3]) -> Matrix {
    let mut q = Matrix::zeros(4, 4);
    for i in 0..3 {
        let mut sum = 0.0;
        for j in 0..3 {
            q[(i, j)] = rows[i][j];
            sum += rows[i][j];
        }
        q[(i, 3)] = -sum;
    }
    q
}

fn two_set_family_of_three() -> ClosedSetFamily {
    ClosedSetFamily::new(3, vec![vec![1, 3], vec![2, 3]]).expect("valid sets")
}

/// Regime `k` exits to `Γ_1 = {2, Δ}` at rate `r1` and to `Γ_2 = {3, Δ}` at
/// rate `r2`; the remaining exposure is a common shock of rate `r3`.
fn shock_generator(r1: f64, r2: f64, r3: f64) -> Matrix {
    three_state_generator([
        [-(r1 + r2 + r3), r1, r2],
        [0.0, -(r2 + r3), 0.0],
        [0.0, 0.0, -(r1 + r3)],
    ])
}

pub fn exponential(p: &ExponentialParams) -> Result<(MixtureModel, ClosedSetFamily)> {
    for (name, x) in [("a1", p.a1), ("a2", p.a2), ("b1", p.b1), ("b2", p.b2)] {
        positive(name, x)?;
    }
    for (i, &x) in p.p.iter().enumerate() {
        probability(&format!("p{}", i + 1), x)?;
    }
    let q1 = shock_generator(p.a1, p.a2, 0.0);
    let q2 = shock_generator(p.b1, p.b2, 0.0);
    let model = MixtureModel::new(
        vec![q1, q2],
        vec![1.0, 0.0, 0.0, 0.0],
        two_regime_switching(p.p),
    )?;
    Ok((model, two_set_family_of_three()))
}

pub fn marshall_olkin(p: &MarshallOlkinParams) -> Result<(MixtureModel, ClosedSetFamily)> {
    for (i, (&a, &b)) in p.a.iter().zip(&p.b).enumerate() {
        positive(&format!("a{}", i + 1), a)?;
        positive(&format!("b{}", i + 1), b)?;
    }
    for (i, &x) in p.p.iter().enumerate() {
        probability(&format!("p{}", i + 1), x)?;
    }
    let q1 = shock_generator(p.a[0], p.a[1], p.a[2]);
    let q2 = shock_generator(p.b[0], p.b[1], p.b[2]);
    let model = MixtureModel::new(
        vec![q1, q2],
        vec![1.0, 0.0, 0.0, 0.0],
        two_regime_switching(p.p),
    )?;
    Ok((model, two_set_family_of_three()))
}

/// Five transient states: a birth–death chain on 1..3 feeding the two
/// terminal states 4 and 5, with `Γ_1 = {4, Δ}` and `Γ_2 = {5, Δ}`.
pub fn birth_death(p: &BirthDeathParams) -> Result<(MixtureModel, ClosedSetFamily)> {
    let rates = p
        .beta
        .iter()
        .chain(&p.alpha)
        .chain(&p.gamma)
        .chain(&p.delta);
    for &x in rates {
        positive("rate", x)?;
    }
    if !(p.psi.is_finite() && p.psi > 0.0) {
        return Err(Error::InvalidInput(format!(
            "psi must be positive, got {}",
            p.psi
        )));
    }
    probability("s", p.s)?;
    let [b1, b2] = p.beta;
    let [a1, a2] = p.alpha;
    let [g1, g2] = p.gamma;
    let [d1, d2, d3] = p.delta;
    let q1 = Matrix::from_rows(&[
        vec![-b1, b1, 0.0, 0.0, 0.0, 0.0],
        vec![a1, -(b2 + a1), b2, 0.0, 0.0, 0.0],
        vec![0.0, a2, -(a2 + g1 + g2 + d3), g1, g2, d3],
        vec![0.0, 0.0, 0.0, -d1, 0.0, d1],
        vec![0.0, 0.0, 0.0, 0.0, -d2, d2],
        vec![0.0; 6],
    ])?;
    let q2 = q1.scale(p.psi);
    let mut pi0 = p.pi.to_vec();
    pi0.push(0.0);
    let model = MixtureModel::new(vec![q1, q2], pi0, vec![vec![1.0 - p.s; 6], vec![p.s; 6]])?;
    let family = ClosedSetFamily::new(5, vec![vec![3, 5], vec![4, 5]])?;
    Ok((model, family))
}
