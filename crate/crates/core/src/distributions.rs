//! Conditional laws of the exit times into the closed sets and of the
//! absorption time.
//!
//! Every quantity is a law of the residual times `τ − t` given the
//! information at `t`, written as `Σ_k u_kᵀ M_k 𝟙` with `u_k` the weights of
//! [`ExitWeights`] and `M_k` built from regime `k`'s phase generator.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::inference::{exit_weights, ExitWeights, InformationScenario};
use crate::matcore::{eigen_with, expm, Lu, Matrix, Tolerances};
use crate::model::{block_partition, ClosedSetFamily, MixtureModel, PhaseBlocks, StructuredBlocks};

/// Part of the bivariate law a density value belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Region {
    /// `t1 > t2`: set 2 reached first.
    AbsCont1,
    /// `t2 > t1`: set 1 reached first.
    AbsCont2,
    /// `t1 = t2 > t`: both sets entered by one jump into their intersection.
    Singular,
    /// `t1 = t2 = t`: mass already inside a set at `t`.
    Atom,
}

impl Region {
    pub fn label(self) -> &'static str {
        match self {
            Region::AbsCont1 => "ac1",
            Region::AbsCont2 => "ac2",
            Region::Singular => "singular",
            Region::Atom => "atom",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BivariateDensity {
    pub region: Region,
    pub value: f64,
}

/// Everything needed to evaluate the exit-time laws under one scenario.
#[derive(Debug, Clone)]
pub struct ExitLaw {
    blocks: PhaseBlocks,
    family: ClosedSetFamily,
    weights: ExitWeights,
    tol: Tolerances,
}

fn ones(n: usize) -> Vec<f64> {
    vec![1.0; n]
}

fn hadamard(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x * y).collect()
}

fn sum(v: &[f64]) -> f64 {
    v.iter().sum()
}

/// `uᵀ e^{B dt}`.
fn advance(u: &[f64], b: &Matrix, dt: f64) -> Result<Vec<f64>> {
    if dt == 0.0 {
        return Ok(u.to_vec());
    }
    Ok(expm(b, dt)?.vec_mul(u))
}

fn shift(b: &Matrix, lambda: f64) -> Matrix {
    let mut m = b.scale(-1.0);
    for i in 0..m.rows() {
        m[(i, i)] += lambda;
    }
    m
}

/// `[B,H2]H1 + [B,H1]H2 − BH2H1`, applied to `𝟙`, for diagonal 0/1 masks.
fn singular_vector(b: &Matrix, h1: &[f64], h2: &[f64]) -> Vec<f64> {
    let h12 = hadamard(h1, h2);
    // [B,H2]H1𝟙 = B(h1h2) − h2∘(Bh1)
    let b_h12 = b.mul_vec(&h12);
    let b_h1 = b.mul_vec(h1);
    let b_h2 = b.mul_vec(h2);
    (0..h1.len())
        .map(|i| b_h12[i] - h2[i] * b_h1[i] + b_h12[i] - h1[i] * b_h2[i] - b_h12[i])
        .collect()
}

/// `[B,H] v = B(h∘v) − h∘(Bv)`.
fn commutator_apply(b: &Matrix, h: &[f64], v: &[f64]) -> Vec<f64> {
    let bhv = b.mul_vec(&hadamard(h, v));
    let bv = b.mul_vec(v);
    (0..v.len()).map(|i| bhv[i] - h[i] * bv[i]).collect()
}

/// `uᵀ [B,H] = (uᵀB)∘h − (u∘h)ᵀB`.
fn commutator_left(u: &[f64], b: &Matrix, h: &[f64]) -> Vec<f64> {
    let ub = b.vec_mul(u);
    let uhb = b.vec_mul(&hadamard(u, h));
    (0..u.len()).map(|i| ub[i] * h[i] - uhb[i]).collect()
}

impl ExitLaw {
    pub fn new(
        model: &MixtureModel,
        family: &ClosedSetFamily,
        scenario: &InformationScenario,
    ) -> Result<Self> {
        Self::with_tolerances(model, family, scenario, Tolerances::default())
    }

    pub fn with_tolerances(
        model: &MixtureModel,
        family: &ClosedSetFamily,
        scenario: &InformationScenario,
        tol: Tolerances,
    ) -> Result<Self> {
        if family.n() != model.n() {
            return Err(Error::DimensionMismatch(format!(
                "closed-set family on {} states, model on {}",
                family.n(),
                model.n()
            )));
        }
        Ok(Self {
            blocks: block_partition(model)?,
            family: family.clone(),
            weights: exit_weights(model, scenario)?,
            tol,
        })
    }

    pub fn t(&self) -> f64 {
        self.weights.t
    }

    pub fn weights(&self) -> &ExitWeights {
        &self.weights
    }

    pub fn family(&self) -> &ClosedSetFamily {
        &self.family
    }

    fn regimes(&self) -> impl Iterator<Item = (&Vec<f64>, &Matrix)> {
        self.weights.regimes.iter().zip(&self.blocks.b)
    }

    fn check_after(&self, s: f64) -> Result<()> {
        if s.is_finite() && s >= self.t() {
            Ok(())
        } else {
            Err(Error::InvalidTime(format!(
                "evaluation time {s} precedes the conditioning time {}",
                self.t()
            )))
        }
    }

    fn check_bivariate(&self) -> Result<()> {
        if self.family.p() == 2 {
            Ok(())
        } else {
            Err(Error::InvalidInput(format!(
                "bivariate laws need two closed sets, family has {}",
                self.family.p()
            )))
        }
    }

    /// Mass absorbed by `t`.
    pub fn atom_uni(&self) -> f64 {
        self.weights.atom
    }

    /// `P(τ > s | F_t) = Σ_k u_kᵀ e^{B(s−t)} 𝟙`.
    pub fn surv_uni(&self, s: f64) -> Result<f64> {
        self.check_after(s)?;
        let mut total = 0.0;
        for (u, b) in self.regimes() {
            total += sum(&advance(u, b, s - self.t())?);
        }
        Ok(total)
    }

    /// Density of `τ` at `s > t`; at `s = t` the atom mass.
    pub fn dens_uni(&self, s: f64) -> Result<f64> {
        self.check_after(s)?;
        if s == self.t() {
            return Ok(self.atom_uni());
        }
        let mut total = 0.0;
        for ((u, b), exit) in self.regimes().zip(&self.blocks.exit) {
            let v = advance(u, b, s - self.t())?;
            total += crate::matcore::dot(&v, exit);
        }
        Ok(total)
    }

    /// Laplace arguments must exceed the largest real part of every phase
    /// generator's spectrum; any `λ ≥ 0` does.
    fn check_laplace(&self, lambda: f64) -> Result<()> {
        if !lambda.is_finite() {
            return Err(Error::NonFinite("Laplace argument"));
        }
        if lambda >= 0.0 {
            return Ok(());
        }
        for b in &self.blocks.b {
            let abscissa = eigen_with(b, &self.tol)?.dominant().re;
            if lambda <= abscissa {
                return Err(Error::InvalidInput(format!(
                    "Laplace argument {lambda} must exceed the spectral abscissa {abscissa}"
                )));
            }
        }
        Ok(())
    }

    /// `E[e^{−λ(τ−t)} | F_t]`, atom included.
    pub fn laplace_uni(&self, lambda: f64) -> Result<f64> {
        self.check_laplace(lambda)?;
        let mut total = self.atom_uni();
        for ((u, b), exit) in self.regimes().zip(&self.blocks.exit) {
            // −(λI−B)^{-1}B𝟙 = (λI−B)^{-1} exit
            let x = Lu::factor(&shift(b, lambda), &self.tol)?.solve_vec(exit);
            total += crate::matcore::dot(u, &x);
        }
        Ok(total)
    }

    /// `E[(τ−t)^n | F_t] = (−1)^n n! Σ_k u_kᵀ B^{−n} 𝟙`; order 0 is 1.
    pub fn moment_uni(&self, order: u32) -> Result<f64> {
        let mut total = 0.0;
        for (u, b) in self.regimes() {
            let lu = Lu::factor(b, &self.tol)?;
            let mut x = ones(b.rows());
            for _ in 0..order {
                x = lu.solve_vec(&x);
            }
            total += crate::matcore::dot(u, &x);
        }
        let mut factor = 1.0;
        for i in 1..=order {
            factor *= -f64::from(i);
        }
        let atom = if order == 0 { self.atom_uni() } else { 0.0 };
        Ok(factor * total + atom)
    }

    fn check_times(&self, times: &[f64]) -> Result<Vec<usize>> {
        if times.len() != self.family.p() {
            return Err(Error::DimensionMismatch(format!(
                "{} times for {} closed sets",
                times.len(),
                self.family.p()
            )));
        }
        for &s in times {
            self.check_after(s)?;
        }
        let mut order: Vec<usize> = (0..times.len()).collect();
        order.sort_by(|&a, &b| times[a].total_cmp(&times[b]));
        Ok(order)
    }

    /// `P(τ_1 > s_1, …, τ_p > s_p | F_t)`.
    pub fn surv_multi(&self, times: &[f64]) -> Result<f64> {
        let order = self.check_times(times)?;
        let mut total = 0.0;
        for (u, b) in self.regimes() {
            let mut r = u.clone();
            let mut prev = self.t();
            for &i in &order {
                r = advance(&r, b, times[i] - prev)?;
                r = hadamard(&r, self.family.h_diag(i));
                prev = times[i];
            }
            total += sum(&r);
        }
        Ok(total)
    }

    /// Joint density at pairwise distinct times `> t`.
    pub fn dens_multi(&self, times: &[f64]) -> Result<f64> {
        let order = self.check_times(times)?;
        if times.iter().any(|&s| s == self.t()) {
            return Err(Error::InvalidTime(
                "joint density is only defined after the conditioning time".into(),
            ));
        }
        if order.windows(2).any(|w| times[w[0]] == times[w[1]]) {
            return Err(Error::InvalidTime(
                "joint density is only defined at distinct times".into(),
            ));
        }
        let p = order.len();
        let mut total = 0.0;
        for (u, b) in self.regimes() {
            let mut r = u.clone();
            let mut prev = self.t();
            for &i in &order[..p - 1] {
                r = advance(&r, b, times[i] - prev)?;
                r = commutator_left(&r, b, self.family.h_diag(i));
                prev = times[i];
            }
            let last = order[p - 1];
            r = advance(&r, b, times[last] - prev)?;
            let bh = b.mul_vec(self.family.h_diag(last));
            total += crate::matcore::dot(&r, &bh);
        }
        Ok(if p % 2 == 0 { total } else { -total })
    }

    /// Value of the bivariate law at `(t1, t2)`, tagged with its region.
    pub fn dens_biv(&self, t1: f64, t2: f64) -> Result<BivariateDensity> {
        self.check_bivariate()?;
        self.check_after(t1)?;
        self.check_after(t2)?;
        let t = self.t();
        let (h1, h2) = (self.family.h_diag(0), self.family.h_diag(1));
        if t1 == t && t2 == t {
            return Ok(BivariateDensity {
                region: Region::Atom,
                value: self.atom_biv(),
            });
        }
        if t1 == t2 {
            let mut total = 0.0;
            for (u, b) in self.regimes() {
                let r = advance(u, b, t1 - t)?;
                total += crate::matcore::dot(&r, &singular_vector(b, h1, h2));
            }
            return Ok(BivariateDensity {
                region: Region::Singular,
                value: total,
            });
        }
        self.abs_cont_biv(t1, t2)
    }

    /// Absolutely continuous part at any `t1, t2 >= t`, closed on the
    /// diagonal from the `t1 >= t2` side (region `AbsCont1` there).
    pub fn abs_cont_biv(&self, t1: f64, t2: f64) -> Result<BivariateDensity> {
        self.check_bivariate()?;
        self.check_after(t1)?;
        self.check_after(t2)?;
        let (h1, h2) = (self.family.h_diag(0), self.family.h_diag(1));
        let (early, late, h_early, h_late, region) = if t1 >= t2 {
            (t2, t1, h2, h1, Region::AbsCont1)
        } else {
            (t1, t2, h1, h2, Region::AbsCont2)
        };
        let mut total = 0.0;
        for (u, b) in self.regimes() {
            let r = advance(u, b, early - self.t())?;
            let r = commutator_left(&r, b, h_early);
            let r = advance(&r, b, late - early)?;
            total += crate::matcore::dot(&r, &b.mul_vec(h_late));
        }
        Ok(BivariateDensity {
            region,
            value: total,
        })
    }

    /// Mass at `(t, t)`: `1 − wᵀH2H1𝟙`.
    pub fn atom_biv(&self) -> f64 {
        let h12 = hadamard(self.family.h_diag(0), self.family.h_diag(1));
        let inside: f64 = self
            .weights
            .regimes
            .iter()
            .map(|u| crate::matcore::dot(u, &h12))
            .sum();
        1.0 - inside
    }

    /// `P(τ_1 = τ_2 > s | F_t)`.
    pub fn singular_surv_biv(&self, s: f64) -> Result<f64> {
        self.check_bivariate()?;
        self.check_after(s)?;
        let (h1, h2) = (self.family.h_diag(0), self.family.h_diag(1));
        let mut total = 0.0;
        for (u, b) in self.regimes() {
            let r = advance(u, b, s - self.t())?;
            let x = Lu::factor(b, &self.tol)?.solve_vec(&singular_vector(b, h1, h2));
            total -= crate::matcore::dot(&r, &x);
        }
        Ok(total)
    }

    /// `E[e^{−λ1(τ_1−t) − λ2(τ_2−t)} | F_t]`, atom included.
    pub fn laplace_biv(&self, lambda1: f64, lambda2: f64) -> Result<f64> {
        self.check_bivariate()?;
        for l in [lambda1, lambda2, lambda1 + lambda2] {
            self.check_laplace(l)?;
        }
        let (h1, h2) = (self.family.h_diag(0), self.family.h_diag(1));
        let mut total = self.atom_biv();
        for (u, b) in self.regimes() {
            let solve = |l: f64, v: &[f64]| -> Result<Vec<f64>> {
                Ok(Lu::factor(&shift(b, l), &self.tol)?.solve_vec(v))
            };
            let a1 = solve(lambda1, &b.mul_vec(h1))?;
            let a2 = solve(lambda2, &b.mul_vec(h2))?;
            let c1 = commutator_apply(b, h2, &a1);
            let c2 = commutator_apply(b, h1, &a2);
            let x = singular_vector(b, h1, h2);
            let inner: Vec<f64> = (0..x.len()).map(|i| c1[i] + c2[i] + x[i]).collect();
            total += crate::matcore::dot(u, &solve(lambda1 + lambda2, &inner)?);
        }
        Ok(total)
    }

    /// `E[(τ_1−t)(τ_2−t) | F_t] = Σ_k u_kᵀ(B⁻¹H1B⁻¹H2 + B⁻¹H2B⁻¹H1)𝟙`.
    pub fn cross_moment(&self) -> Result<f64> {
        self.check_bivariate()?;
        let (h1, h2) = (self.family.h_diag(0), self.family.h_diag(1));
        let mut total = 0.0;
        for (u, b) in self.regimes() {
            let lu = Lu::factor(b, &self.tol)?;
            let x1 = lu.solve_vec(h2);
            let x1 = lu.solve_vec(&hadamard(h1, &x1));
            let x2 = lu.solve_vec(h1);
            let x2 = lu.solve_vec(&hadamard(h2, &x2));
            total += crate::matcore::dot(u, &x1) + crate::matcore::dot(u, &x2);
        }
        Ok(total)
    }

    /// `τ_1 = τ_2 > t` has positive probability only when the singular
    /// vector of some regime is nonzero.
    pub fn has_singular_part(&self) -> Result<bool> {
        self.check_bivariate()?;
        Ok(singular_flags(&self.blocks, &self.family, &self.tol)
            .iter()
            .any(|&zero| !zero))
    }

    /// Law of the exit time into set `which` (1 or 2) from the block form:
    /// density at `s > t`.
    pub fn structured_marginal(&self, sb: &StructuredBlocks, which: usize, s: f64) -> Result<f64> {
        structured_marginal(sb, self, which, s)
    }
}

fn singular_flags(blocks: &PhaseBlocks, family: &ClosedSetFamily, tol: &Tolerances) -> Vec<bool> {
    let (h1, h2) = (family.h_diag(0), family.h_diag(1));
    blocks
        .b
        .iter()
        .map(|b| {
            let x = singular_vector(b, h1, h2);
            let scale = b.norm_inf().max(1.0);
            x.iter().all(|v| v.abs() <= tol.structure * scale)
        })
        .collect()
}

/// Per regime, whether `([B,H2]H1 + [B,H1]H2 − BH2H1)𝟙 = 0`, in which case
/// that regime puts no mass on `τ_1 = τ_2 > t`.
pub fn singular_condition(model: &MixtureModel, family: &ClosedSetFamily) -> Result<Vec<bool>> {
    if family.p() != 2 {
        return Err(Error::InvalidInput(format!(
            "singular condition needs two closed sets, family has {}",
            family.p()
        )));
    }
    if family.n() != model.n() {
        return Err(Error::DimensionMismatch(
            "family and model sizes differ".into(),
        ));
    }
    let blocks = block_partition(model)?;
    Ok(singular_flags(&blocks, family, &Tolerances::default()))
}

fn core_weights(sb: &StructuredBlocks, law: &ExitLaw) -> Result<Vec<Vec<f64>>> {
    if sb.regimes.len() != law.weights.regimes.len()
        || sb.sizes.iter().sum::<usize>() != law.family.n()
    {
        return Err(Error::StructureMismatch(
            "block decomposition does not match the model".into(),
        ));
    }
    Ok(law.weights.regimes.clone())
}

/// Bivariate law evaluated from the block decomposition: only states
/// outside both sets contribute to the parts away from `(t, t)`.
pub fn structured_dens_biv(
    sb: &StructuredBlocks,
    law: &ExitLaw,
    t1: f64,
    t2: f64,
) -> Result<BivariateDensity> {
    let weights = core_weights(sb, law)?;
    law.check_after(t1)?;
    law.check_after(t2)?;
    let t = law.t();
    let n1 = sb.sizes[0];
    if t1 == t && t2 == t {
        let alpha: f64 = weights.iter().map(|u| sum(&u[..n1])).sum();
        return Ok(BivariateDensity {
            region: Region::Atom,
            value: 1.0 - alpha,
        });
    }
    let region = if t1 == t2 {
        Region::Singular
    } else if t1 > t2 {
        Region::AbsCont1
    } else {
        Region::AbsCont2
    };
    let mut total = 0.0;
    for (u, rb) in weights.iter().zip(&sb.regimes) {
        let alpha = &u[..n1];
        let r = advance(alpha, &rb.b11, t1.min(t2) - t)?;
        if region == Region::Singular {
            total -= crate::matcore::dot(&r, &rb.core_row_sums());
            continue;
        }
        // block 3 lies in set 2, block 2 in set 1
        let (off, tail) = if region == Region::AbsCont1 {
            (&rb.b13, &rb.b33)
        } else {
            (&rb.b12, &rb.b22)
        };
        let r = advance(&off.vec_mul(&r), tail, (t1 - t2).abs())?;
        total -= sum(&tail.vec_mul(&r));
    }
    Ok(BivariateDensity {
        region,
        value: total,
    })
}

/// Density at `s > t` of the exit time into set `which` (1 or 2), from the
/// generator `[[B11, B13], [0, B33]]` (set 1) or `[[B11, B12], [0, B22]]`
/// (set 2). At `s = t` the mass already inside the set.
pub fn structured_marginal(
    sb: &StructuredBlocks,
    law: &ExitLaw,
    which: usize,
    s: f64,
) -> Result<f64> {
    if which != 1 && which != 2 {
        return Err(Error::InvalidInput(format!(
            "set index {which} must be 1 or 2"
        )));
    }
    let weights = core_weights(sb, law)?;
    law.check_after(s)?;
    let outside = sb.outside_states(which);
    if s == law.t() {
        let mass: f64 = weights
            .iter()
            .map(|u| outside.iter().map(|&i| u[i]).sum::<f64>())
            .sum();
        return Ok(1.0 - mass);
    }
    let mut total = 0.0;
    for (u, rb) in weights.iter().zip(&sb.regimes) {
        let g = rb.marginal_generator(which);
        let start: Vec<f64> = outside.iter().map(|&i| u[i]).collect();
        let r = advance(&start, &g, s - law.t())?;
        total -= sum(&g.vec_mul(&r));
    }
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::presets::{exponential, ExponentialParams};

    fn ex1() -> (MixtureModel, ClosedSetFamily, ExponentialParams) {
        let p = ExponentialParams::default();
        let (m, f) = exponential(&p).unwrap();
        (m, f, p)
    }

    #[test]
    fn exponential_mixture_density_closed_form() {
        let (model, family, p) = ex1();
        let law = ExitLaw::new(
            &model,
            &family,
            &InformationScenario::current_only(0, 0.0).unwrap(),
        )
        .unwrap();
        let (t1, t2) = (1.7, 0.6);
        let f = law.dens_biv(t1, t2).unwrap();
        assert_eq!(f.region, Region::AbsCont1);
        let want = p.p[0] * p.b1 * p.b2 * (-p.b1 * t1 - p.b2 * t2).exp()
            + (1.0 - p.p[0]) * p.a1 * p.a2 * (-p.a1 * t1 - p.a2 * t2).exp();
        assert!((f.value - want).abs() < 1e-13, "{} vs {want}", f.value);
    }

    #[test]
    fn continuous_part_is_closed_from_below_the_diagonal() {
        let (model, family, _) = ex1();
        let law = ExitLaw::new(
            &model,
            &family,
            &InformationScenario::no_information(0.0).unwrap(),
        )
        .unwrap();
        let on = law.abs_cont_biv(1.2, 1.2).unwrap();
        assert_eq!(on.region, Region::AbsCont1);
        let near = law.dens_biv(1.2 + 1e-9, 1.2).unwrap().value;
        assert!((on.value - near).abs() < 1e-8);
        assert_eq!(law.dens_biv(1.2, 1.2).unwrap().region, Region::Singular);
    }

    #[test]
    fn exponential_mixture_has_no_singular_part() {
        let (model, family, _) = ex1();
        assert_eq!(
            singular_condition(&model, &family).unwrap(),
            vec![true, true]
        );
        let law = ExitLaw::new(
            &model,
            &family,
            &InformationScenario::current_only(0, 0.0).unwrap(),
        )
        .unwrap();
        assert!(law.dens_biv(1.0, 1.0).unwrap().value.abs() < 1e-15);
        assert!(law.singular_surv_biv(0.0).unwrap().abs() < 1e-15);
    }

    #[test]
    fn marginal_survival_is_exponential_mixture() {
        let (model, family, p) = ex1();
        let law = ExitLaw::new(
            &model,
            &family,
            &InformationScenario::current_only(0, 0.0).unwrap(),
        )
        .unwrap();
        let s = 0.9;
        let got = law.surv_multi(&[s, 0.0]).unwrap();
        let want = p.p[0] * (-p.b1 * s).exp() + (1.0 - p.p[0]) * (-p.a1 * s).exp();
        assert!((got - want).abs() < 1e-13);
    }

    #[test]
    fn moment_zero_is_one() {
        let (model, family, _) = ex1();
        let law = ExitLaw::new(
            &model,
            &family,
            &InformationScenario::no_information(0.5).unwrap(),
        )
        .unwrap();
        assert!((law.moment_uni(0).unwrap() - 1.0).abs() < 1e-14);
        assert!((law.laplace_uni(0.0).unwrap() - 1.0).abs() < 1e-13);
        assert!((law.laplace_biv(0.0, 0.0).unwrap() - 1.0).abs() < 1e-13);
    }

    #[test]
    fn times_before_conditioning_are_rejected() {
        let (model, family, _) = ex1();
        let law = ExitLaw::new(
            &model,
            &family,
            &InformationScenario::no_information(1.0).unwrap(),
        )
        .unwrap();
        assert!(matches!(law.surv_uni(0.5), Err(Error::InvalidTime(_))));
        assert!(matches!(law.dens_biv(0.5, 2.0), Err(Error::InvalidTime(_))));
    }
}
