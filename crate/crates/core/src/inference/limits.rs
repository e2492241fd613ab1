use crate::error::{Error, Result};
use crate::matcore::{dot, eigen_with, spectral_projectors, Matrix, Tolerances};
use crate::model::MixtureModel;

/// Spectral expansion `Σ_l e^{λ_l t} c_l` of one regime's contribution,
/// with `c_l` a coefficient vector.
struct Expansion {
    terms: Vec<(f64, Vec<f64>)>,
}

fn expand(a: &Matrix, start: &[f64], tol: &Tolerances) -> Result<Expansion> {
    let spectrum = eigen_with(a, tol)?;
    if !spectrum.all_real_and_simple {
        return Err(Error::UnsupportedSpectrum(
            "limits need intensity matrices with real, simple spectra".into(),
        ));
    }
    let projectors = spectral_projectors(a, &spectrum)?;
    // unreachable states get exact zeros instead of rounding noise
    let live = reachable(a, start);
    let terms = spectrum
        .real_parts()
        .into_iter()
        .zip(projectors)
        .map(|(lambda, p)| {
            let mut c = p.vec_mul(start);
            for (x, &ok) in c.iter_mut().zip(&live) {
                if !ok {
                    *x = 0.0;
                }
            }
            (lambda, c)
        })
        .collect();
    Ok(Expansion { terms })
}

/// States reachable under `a`'s positive off-diagonal rates from the
/// support of `start`.
fn reachable(a: &Matrix, start: &[f64]) -> Vec<bool> {
    let n = a.rows();
    let mut seen: Vec<bool> = start.iter().map(|&x| x != 0.0).collect();
    let mut stack: Vec<usize> = (0..n).filter(|&i| seen[i]).collect();
    while let Some(i) = stack.pop() {
        for j in 0..n {
            if i != j && a[(i, j)] > 0.0 && !seen[j] {
                seen[j] = true;
                stack.push(j);
            }
        }
    }
    seen
}

fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

/// For each regime the leading term whose coefficient (read through
/// `measure`) does not vanish, then the coefficients of the regimes tied at
/// the overall leading exponent. Regimes behind the leader get `None`.
fn leading_coefficients(
    expansions: &[Expansion],
    measure: impl Fn(&[f64]) -> f64,
    tol: &Tolerances,
) -> Result<Vec<Option<Vec<f64>>>> {
    let scale = expansions
        .iter()
        .flat_map(|e| e.terms.iter().map(|(_, c)| measure(c)))
        .fold(0.0, f64::max);
    if scale == 0.0 {
        return Err(Error::ImpossibleObservation);
    }
    let threshold = tol.coefficient_zero * scale;
    let leads: Vec<Option<(f64, &Vec<f64>)>> = expansions
        .iter()
        .map(|e| {
            e.terms
                .iter()
                .filter(|(_, c)| measure(c) > threshold)
                .max_by(|a, b| a.0.total_cmp(&b.0))
                .map(|(l, c)| (*l, c))
        })
        .collect();
    let top = leads
        .iter()
        .flatten()
        .map(|(l, _)| *l)
        .fold(f64::NEG_INFINITY, f64::max);
    let gap = tol.eigen_gap * top.abs().max(1.0);
    Ok(leads
        .into_iter()
        .map(|lead| match lead {
            Some((l, c)) if top - l <= gap => Some(c.clone()),
            _ => None,
        })
        .collect())
}

/// `lim_{t→∞}` of the regime probabilities given `X_t = j` and nothing
/// else. Each regime contributes through its slowest non-vanishing mode;
/// regimes tied at the slowest mode share the limit.
pub fn switching_limit(model: &MixtureModel, j: usize) -> Result<Vec<f64>> {
    switching_limit_with(model, j, &Tolerances::default())
}

pub fn switching_limit_with(model: &MixtureModel, j: usize, tol: &Tolerances) -> Result<Vec<f64>> {
    let size = model.n() + 1;
    if j >= size {
        return Err(Error::InvalidInput(format!(
            "state {} outside 1..={size}",
            j + 1
        )));
    }
    let expansions = (0..model.m())
        .map(|k| {
            let start: Vec<f64> = model
                .pi0()
                .iter()
                .zip(model.s0(k))
                .map(|(p, s)| p * s)
                .collect();
            expand(model.q(k), &start, tol)
        })
        .collect::<Result<Vec<_>>>()?;
    let leads = leading_coefficients(&expansions, |c| c[j].abs(), tol)?;
    let values: Vec<f64> = leads
        .iter()
        .map(|c| c.as_ref().map_or(0.0, |c| c[j]))
        .collect();
    normalise(values)
}

/// `lim_{t→∞}` of the law of `X_t` given survival to `t` and no other
/// information.
pub fn state_limit(model: &MixtureModel) -> Result<Vec<f64>> {
    state_limit_with(model, &Tolerances::default())
}

pub fn state_limit_with(model: &MixtureModel, tol: &Tolerances) -> Result<Vec<f64>> {
    let n = model.n();
    let expansions = (0..model.m())
        .map(|k| {
            let b = model.q(k).block(0, n, 0, n);
            let start: Vec<f64> = (0..n).map(|i| model.pi0()[i] * model.s0(k)[i]).collect();
            expand(&b, &start, tol)
        })
        .collect::<Result<Vec<_>>>()?;
    let leads = leading_coefficients(&expansions, max_abs, tol)?;
    let mut sum = vec![0.0; n];
    for c in leads.iter().flatten() {
        for (s, x) in sum.iter_mut().zip(c) {
            *s += x;
        }
    }
    normalise(sum)
}

fn normalise(v: Vec<f64>) -> Result<Vec<f64>> {
    let total = dot(&v, &vec![1.0; v.len()]);
    if !(total > 0.0) || !total.is_finite() {
        return Err(Error::NoConvergence);
    }
    Ok(v.into_iter().map(|x| x / total).collect())
}
