//! Mixture model definition, closed-set families, validation and block
//! partitions of the intensity matrices.
//!
//! States are 0-based internally; the absorbing state is always the last
//! index `n`. The JSON format uses 1-based state numbers with `n + 1` for
//! the absorbing state.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matcore::{expm, Lu, Matrix, Tolerances};

/// `m` Markov jump processes on the shared state space `{0..n-1} ∪ {Δ = n}`
/// together with the initial law and the initial regime probabilities.
#[derive(Debug, Clone, PartialEq)]
pub struct MixtureModel {
    n: usize,
    q: Vec<Matrix>,
    pi0: Vec<f64>,
    /// `s0[k][i]`: probability of regime `k` given the process starts in `i`.
    s0: Vec<Vec<f64>>,
}

impl MixtureModel {
    /// Checks shapes and finiteness only; see [`validate`] for the
    /// probabilistic invariants.
    pub fn new(q: Vec<Matrix>, pi0: Vec<f64>, s0: Vec<Vec<f64>>) -> Result<Self> {
        let m = q.len();
        if m == 0 {
            return Err(Error::InvalidModel(
                "at least one regime is required".into(),
            ));
        }
        let size = q[0].rows();
        if size < 2 {
            return Err(Error::InvalidModel(
                "state space needs a transient state and the absorbing state".into(),
            ));
        }
        for (k, qk) in q.iter().enumerate() {
            if qk.rows() != size || qk.cols() != size {
                return Err(Error::InvalidModel(format!(
                    "regime {} intensity matrix is {}x{}, expected {size}x{size}",
                    k + 1,
                    qk.rows(),
                    qk.cols()
                )));
            }
            if !qk.is_finite() {
                return Err(Error::NonFinite("intensity matrix"));
            }
        }
        if pi0.len() != size {
            return Err(Error::InvalidModel(format!(
                "initial distribution has length {}, expected {size}",
                pi0.len()
            )));
        }
        if s0.len() != m {
            return Err(Error::InvalidModel(format!(
                "{} switching diagonals for {m} regimes",
                s0.len()
            )));
        }
        if s0.iter().any(|d| d.len() != size) {
            return Err(Error::InvalidModel(format!(
                "switching diagonals must have length {size}"
            )));
        }
        if pi0
            .iter()
            .chain(s0.iter().flatten())
            .any(|x| !x.is_finite())
        {
            return Err(Error::NonFinite("initial probabilities"));
        }
        Ok(Self {
            n: size - 1,
            q,
            pi0,
            s0,
        })
    }

    /// Number of transient states.
    pub fn n(&self) -> usize {
        self.n
    }

    /// Number of regimes.
    pub fn m(&self) -> usize {
        self.q.len()
    }

    /// Index of the absorbing state.
    pub fn absorbing(&self) -> usize {
        self.n
    }

    pub fn q(&self, k: usize) -> &Matrix {
        &self.q[k]
    }

    pub fn intensities(&self) -> &[Matrix] {
        &self.q
    }

    pub fn pi0(&self) -> &[f64] {
        &self.pi0
    }

    /// Diagonal of the initial switching matrix of regime `k` (length n+1).
    pub fn s0(&self, k: usize) -> &[f64] {
        &self.s0[k]
    }

    /// Same model with every regime's transient states reordered:
    /// new state `i` is old state `perm[i]`. `perm` covers `0..n`.
    pub fn permuted(&self, perm: &[usize]) -> Result<Self> {
        let full = full_permutation(perm, self.n)?;
        let q = self.q.iter().map(|qk| qk.permuted(&full)).collect();
        let pi0 = full.iter().map(|&i| self.pi0[i]).collect();
        let s0 = self
            .s0
            .iter()
            .map(|d| full.iter().map(|&i| d[i]).collect())
            .collect();
        Self::new(q, pi0, s0)
    }
}

fn full_permutation(perm: &[usize], n: usize) -> Result<Vec<usize>> {
    let mut seen = vec![false; n];
    if perm.len() != n {
        return Err(Error::InvalidInput(format!(
            "permutation has length {}, expected {n}",
            perm.len()
        )));
    }
    for &p in perm {
        if p >= n || seen[p] {
            return Err(Error::InvalidInput(
                "not a permutation of the transient states".into(),
            ));
        }
        seen[p] = true;
    }
    let mut full = perm.to_vec();
    full.push(n);
    Ok(full)
}

/// Stochastically closed sets `Γ_1..Γ_p` and their transient masks `H_k`.
#[derive(Debug, Clone, PartialEq)]
pub struct ClosedSetFamily {
    n: usize,
    gamma: Vec<Vec<usize>>,
    /// `h[k][i] = 1` iff transient state `i` lies outside `Γ_k`.
    h: Vec<Vec<f64>>,
}

impl ClosedSetFamily {
    /// `gamma` holds 0-based states in `0..=n`. Membership of the absorbing
    /// state and closedness are checked by [`validate`].
    pub fn new(n: usize, gamma: Vec<Vec<usize>>) -> Result<Self> {
        if gamma.is_empty() {
            return Err(Error::InvalidModel("closed-set family is empty".into()));
        }
        let mut sets = Vec::with_capacity(gamma.len());
        let mut h = Vec::with_capacity(gamma.len());
        for (k, g) in gamma.into_iter().enumerate() {
            let mut g = g;
            g.sort_unstable();
            g.dedup();
            if let Some(&bad) = g.iter().find(|&&s| s > n) {
                return Err(Error::InvalidModel(format!(
                    "set {} contains state {} outside the state space",
                    k + 1,
                    bad + 1
                )));
            }
            let mut mask = vec![1.0; n];
            for &s in &g {
                if s < n {
                    mask[s] = 0.0;
                }
            }
            sets.push(g);
            h.push(mask);
        }
        Ok(Self { n, gamma: sets, h })
    }

    /// Single set `{Δ}`: the exit time is the absorption time.
    pub fn absorption_only(n: usize) -> Self {
        Self::new(n, vec![vec![n]]).expect("absorbing state is in range")
    }

    pub fn p(&self) -> usize {
        self.gamma.len()
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn gamma(&self, k: usize) -> &[usize] {
        &self.gamma[k]
    }

    pub fn sets(&self) -> &[Vec<usize>] {
        &self.gamma
    }

    pub fn contains(&self, k: usize, state: usize) -> bool {
        self.gamma[k].binary_search(&state).is_ok()
    }

    /// Diagonal of `H_k` over the transient states.
    pub fn h_diag(&self, k: usize) -> &[f64] {
        &self.h[k]
    }

    pub fn h(&self, k: usize) -> Matrix {
        Matrix::from_diag(&self.h[k])
    }

    /// Transient states outside every set.
    pub fn core_states(&self) -> Vec<usize> {
        (0..self.n)
            .filter(|&i| self.h.iter().all(|h| h[i] == 1.0))
            .collect()
    }

    /// Family over reordered transient states: new state `i` is old state
    /// `perm[i]`.
    pub fn permuted(&self, perm: &[usize]) -> Result<Self> {
        let full = full_permutation(perm, self.n)?;
        let mut inverse = vec![0; full.len()];
        for (new, &old) in full.iter().enumerate() {
            inverse[old] = new;
        }
        let gamma = self
            .gamma
            .iter()
            .map(|g| g.iter().map(|&s| inverse[s]).collect())
            .collect();
        Self::new(self.n, gamma)
    }
}

/// One violated invariant. State and regime numbers are 0-based; the
/// `Display` form is 1-based.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Violation {
    PositiveDiagonal {
        regime: usize,
        state: usize,
        value: f64,
    },
    NegativeRate {
        regime: usize,
        from: usize,
        to: usize,
        value: f64,
    },
    RowSum {
        regime: usize,
        state: usize,
        sum: f64,
    },
    AbsorbingRow {
        regime: usize,
        to: usize,
        value: f64,
    },
    SwitchingRange {
        regime: usize,
        state: usize,
        value: f64,
    },
    SwitchingSum {
        state: usize,
        sum: f64,
    },
    InitialNegative {
        state: usize,
        value: f64,
    },
    InitialSum {
        sum: f64,
    },
    InitialAbsorbing {
        mass: f64,
    },
    SetMissingAbsorbing {
        set: usize,
    },
    IntersectionTooLarge {
        states: Vec<usize>,
    },
    NotClosed {
        regime: usize,
        set: usize,
        from: usize,
        to: usize,
        rate: f64,
    },
    FamilySize {
        expected: usize,
        found: usize,
    },
    SingularGenerator {
        regime: usize,
    },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        use Violation::*;
        match self {
            PositiveDiagonal {
                regime,
                state,
                value,
            } => write!(
                f,
                "regime {}: diagonal entry ({s},{s}) = {value} is positive",
                regime + 1,
                s = state + 1
            ),
            NegativeRate {
                regime,
                from,
                to,
                value,
            } => write!(
                f,
                "regime {}: off-diagonal entry ({},{}) = {value} is negative",
                regime + 1,
                from + 1,
                to + 1
            ),
            RowSum { regime, state, sum } => write!(
                f,
                "regime {}: row {} sums to {sum:e}",
                regime + 1,
                state + 1
            ),
            AbsorbingRow { regime, to, value } => write!(
                f,
                "regime {}: absorbing row has entry {value} in column {}",
                regime + 1,
                to + 1
            ),
            SwitchingRange {
                regime,
                state,
                value,
            } => write!(
                f,
                "regime {}: switching probability {value} at state {} outside [0,1]",
                regime + 1,
                state + 1
            ),
            SwitchingSum { state, sum } => write!(
                f,
                "switching probabilities at state {} sum to {sum}",
                state + 1
            ),
            InitialNegative { state, value } => {
                write!(
                    f,
                    "initial probability {value} at state {} is negative",
                    state + 1
                )
            }
            InitialSum { sum } => write!(f, "initial distribution sums to {sum}"),
            InitialAbsorbing { mass } => {
                write!(
                    f,
                    "initial distribution puts mass {mass} on the absorbing state"
                )
            }
            SetMissingAbsorbing { set } => {
                write!(
                    f,
                    "closed set {} does not contain the absorbing state",
                    set + 1
                )
            }
            IntersectionTooLarge { states } => {
                let list: Vec<String> = states.iter().map(|s| (s + 1).to_string()).collect();
                write!(
                    f,
                    "intersection of the closed sets contains transient states {}",
                    list.join(",")
                )
            }
            NotClosed {
                regime,
                set,
                from,
                to,
                rate,
            } => write!(
                f,
                "regime {}: closed set {} is left by the jump {} -> {} at rate {rate}",
                regime + 1,
                set + 1,
                from + 1,
                to + 1
            ),
            FamilySize { expected, found } => write!(
                f,
                "closed-set family is defined on {found} transient states, model has {expected}"
            ),
            SingularGenerator { regime } => write!(
                f,
                "regime {}: phase generator is singular, absorption is not certain",
                regime + 1
            ),
        }
    }
}

/// Outcome of [`validate`]. Notes are informational and do not make the
/// model inadmissible.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
    pub notes: Vec<String>,
}

impl ValidationReport {
    pub fn is_admissible(&self) -> bool {
        self.violations.is_empty()
    }
}

pub fn validate(model: &MixtureModel, family: &ClosedSetFamily) -> ValidationReport {
    validate_with(model, family, &Tolerances::default())
}

pub fn validate_with(
    model: &MixtureModel,
    family: &ClosedSetFamily,
    tol: &Tolerances,
) -> ValidationReport {
    let mut v = Vec::new();
    let mut notes = Vec::new();
    let n = model.n();
    let size = n + 1;
    let eps = tol.stochastic;

    for (k, q) in model.intensities().iter().enumerate() {
        for i in 0..n {
            let mut sum = 0.0;
            let mut scale = 0.0f64;
            for j in 0..size {
                let x = q[(i, j)];
                sum += x;
                scale = scale.max(x.abs());
                if i == j {
                    if x > 0.0 {
                        v.push(Violation::PositiveDiagonal {
                            regime: k,
                            state: i,
                            value: x,
                        });
                    }
                } else if x < 0.0 {
                    v.push(Violation::NegativeRate {
                        regime: k,
                        from: i,
                        to: j,
                        value: x,
                    });
                }
            }
            if sum.abs() > eps * scale.max(1.0) {
                v.push(Violation::RowSum {
                    regime: k,
                    state: i,
                    sum,
                });
            }
        }
        for j in 0..size {
            let x = q[(n, j)];
            if x != 0.0 {
                v.push(Violation::AbsorbingRow {
                    regime: k,
                    to: j,
                    value: x,
                });
            }
        }
    }

    for i in 0..size {
        let mut sum = 0.0;
        for k in 0..model.m() {
            let s = model.s0(k)[i];
            sum += s;
            if !(-eps..=1.0 + eps).contains(&s) {
                v.push(Violation::SwitchingRange {
                    regime: k,
                    state: i,
                    value: s,
                });
            }
        }
        if (sum - 1.0).abs() > eps {
            v.push(Violation::SwitchingSum { state: i, sum });
        }
    }

    let pi0 = model.pi0();
    for (i, &p) in pi0.iter().enumerate() {
        if p < 0.0 {
            v.push(Violation::InitialNegative { state: i, value: p });
        }
    }
    let total: f64 = pi0.iter().sum();
    if (total - 1.0).abs() > eps {
        v.push(Violation::InitialSum { sum: total });
    }
    if pi0[n] > eps {
        v.push(Violation::InitialAbsorbing { mass: pi0[n] });
    }

    if family.n() != n {
        v.push(Violation::FamilySize {
            expected: n,
            found: family.n(),
        });
    } else {
        for (l, g) in family.sets().iter().enumerate() {
            if !family.contains(l, n) {
                v.push(Violation::SetMissingAbsorbing { set: l });
            }
            for (k, q) in model.intensities().iter().enumerate() {
                for &from in g {
                    for to in 0..size {
                        if family.contains(l, to) {
                            continue;
                        }
                        let rate = q[(from, to)];
                        if rate.abs() > tol.structure {
                            v.push(Violation::NotClosed {
                                regime: k,
                                set: l,
                                from,
                                to,
                                rate,
                            });
                        }
                    }
                }
            }
        }
        let common: Vec<usize> = (0..n)
            .filter(|&i| (0..family.p()).all(|l| family.contains(l, i)))
            .collect();
        if !common.is_empty() {
            v.push(Violation::IntersectionTooLarge { states: common });
        }
        let core = family.core_states();
        let outside: f64 = (0..n).filter(|i| !core.contains(i)).map(|i| pi0[i]).sum();
        if outside > 0.0 {
            notes.push(format!(
                "initial distribution puts mass {outside} inside some closed set; \
                 the joint laws then carry an atom at the conditioning time"
            ));
        }
    }

    let lu_tol = *tol;
    for k in 0..model.m() {
        let b = model.q(k).block(0, n, 0, n);
        if Lu::factor(&b, &lu_tol).is_err() {
            v.push(Violation::SingularGenerator { regime: k });
        }
    }

    ValidationReport {
        violations: v,
        notes,
    }
}

/// Phase generators `B^(k)` and exit vectors `−B^(k)𝟙`.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseBlocks {
    pub b: Vec<Matrix>,
    pub exit: Vec<Vec<f64>>,
}

impl PhaseBlocks {
    pub fn m(&self) -> usize {
        self.b.len()
    }

    pub fn n(&self) -> usize {
        self.b[0].rows()
    }
}

pub fn block_partition(model: &MixtureModel) -> Result<PhaseBlocks> {
    block_partition_with(model, &Tolerances::default())
}

pub fn block_partition_with(model: &MixtureModel, tol: &Tolerances) -> Result<PhaseBlocks> {
    let n = model.n();
    let mut b = Vec::with_capacity(model.m());
    let mut exit = Vec::with_capacity(model.m());
    for k in 0..model.m() {
        let bk = model.q(k).block(0, n, 0, n);
        Lu::factor(&bk, tol).map_err(|_| {
            Error::InvalidModel(format!(
                "regime {}: phase generator is singular, absorption is not certain",
                k + 1
            ))
        })?;
        let e: Vec<f64> = bk.row_sums().into_iter().map(|s| -s).collect();
        if let Some(i) = e.iter().position(|&x| x < -tol.stochastic) {
            return Err(Error::InvalidModel(format!(
                "regime {}: negative exit rate {} at state {}",
                k + 1,
                e[i],
                i + 1
            )));
        }
        b.push(bk);
        exit.push(e);
    }
    Ok(PhaseBlocks { b, exit })
}

/// `[[e^{Bt}, 𝟙 − e^{Bt}𝟙], [0, 1]]` for regime `k`.
pub fn phase_expm(blocks: &PhaseBlocks, k: usize, t: f64) -> Result<Matrix> {
    let b = &blocks.b[k];
    let n = b.rows();
    let e = expm(b, t)?;
    let mut out = Matrix::zeros(n + 1, n + 1);
    for i in 0..n {
        let mut row = 0.0;
        for j in 0..n {
            out[(i, j)] = e[(i, j)];
            row += e[(i, j)];
        }
        out[(i, n)] = 1.0 - row;
    }
    out[(n, n)] = 1.0;
    Ok(out)
}

/// Sub-blocks of one regime's phase generator under the ordering
/// (outside both sets, inside `Γ_1`, inside `Γ_2`).
#[derive(Debug, Clone, PartialEq)]
pub struct RegimeBlocks {
    pub b11: Matrix,
    pub b12: Matrix,
    pub b13: Matrix,
    pub b22: Matrix,
    pub b33: Matrix,
}

impl RegimeBlocks {
    /// Generator of the chain watched until it enters `Γ_which`:
    /// `[[B11, B13], [0, B33]]` for set 1 and `[[B11, B12], [0, B22]]` for set 2.
    pub fn marginal_generator(&self, which: usize) -> Matrix {
        let (off, tail) = if which == 1 {
            (&self.b13, &self.b33)
        } else {
            (&self.b12, &self.b22)
        };
        let n1 = self.b11.rows();
        let n2 = tail.rows();
        let mut g = Matrix::zeros(n1 + n2, n1 + n2);
        for i in 0..n1 {
            for j in 0..n1 {
                g[(i, j)] = self.b11[(i, j)];
            }
            for j in 0..n2 {
                g[(i, n1 + j)] = off[(i, j)];
            }
        }
        for i in 0..n2 {
            for j in 0..n2 {
                g[(n1 + i, n1 + j)] = tail[(i, j)];
            }
        }
        g
    }

    /// `B11𝟙 + B12𝟙 + B13𝟙`: minus the exit rates from the core block
    /// straight into the absorbing state.
    pub fn core_row_sums(&self) -> Vec<f64> {
        let a = self.b11.row_sums();
        let b = self.b12.row_sums();
        let c = self.b13.row_sums();
        (0..a.len()).map(|i| a[i] + b[i] + c[i]).collect()
    }
}

/// Per-regime block decomposition for a two-set family with contiguous
/// state ordering.
#[derive(Debug, Clone, PartialEq)]
pub struct StructuredBlocks {
    /// Sizes of the three state blocks.
    pub sizes: [usize; 3],
    pub regimes: Vec<RegimeBlocks>,
}

impl StructuredBlocks {
    pub fn core_range(&self) -> std::ops::Range<usize> {
        0..self.sizes[0]
    }

    /// Transient states outside `Γ_which`, in generator order.
    pub fn outside_states(&self, which: usize) -> Vec<usize> {
        let [n1, n2, n3] = self.sizes;
        let mut v: Vec<usize> = (0..n1).collect();
        if which == 1 {
            v.extend(n1 + n2..n1 + n2 + n3);
        } else {
            v.extend(n1..n1 + n2);
        }
        v
    }
}

/// Ordering of the transient states that makes the block pattern
/// contiguous: states outside both sets, then `Γ_1`, then `Γ_2`.
pub fn structured_order(family: &ClosedSetFamily) -> Result<Vec<usize>> {
    if family.p() != 2 {
        return Err(Error::StructureMismatch(format!(
            "block structure needs two closed sets, found {}",
            family.p()
        )));
    }
    let n = family.n();
    let mut order = family.core_states();
    for l in 0..2 {
        order.extend((0..n).filter(|&i| family.contains(l, i)));
    }
    if order.len() != n {
        return Err(Error::StructureMismatch(
            "closed sets overlap in transient states".into(),
        ));
    }
    Ok(order)
}

pub fn structured_blocks(
    blocks: &PhaseBlocks,
    family: &ClosedSetFamily,
) -> Result<StructuredBlocks> {
    structured_blocks_with(blocks, family, &Tolerances::default())
}

pub fn structured_blocks_with(
    blocks: &PhaseBlocks,
    family: &ClosedSetFamily,
    tol: &Tolerances,
) -> Result<StructuredBlocks> {
    let order = structured_order(family)?;
    if order.iter().enumerate().any(|(i, &s)| i != s) {
        return Err(Error::StructureMismatch(
            "states are not ordered as (outside both sets, Γ1, Γ2); reorder with structured_order"
                .into(),
        ));
    }
    let n = family.n();
    let n1 = family.core_states().len();
    let n2 = (0..n).filter(|&i| family.contains(0, i)).count();
    let n3 = n - n1 - n2;
    let (r1, r2, r3) = (0..n1, n1..n1 + n2, n1 + n2..n);
    let mut regimes = Vec::with_capacity(blocks.m());
    for (k, b) in blocks.b.iter().enumerate() {
        for (rows, cols, name) in [
            (&r2, &r1, "B21"),
            (&r2, &r3, "B23"),
            (&r3, &r1, "B31"),
            (&r3, &r2, "B32"),
        ] {
            for i in rows.clone() {
                for j in cols.clone() {
                    if b[(i, j)].abs() > tol.structure {
                        return Err(Error::StructureMismatch(format!(
                            "regime {}: block {name} has entry {} at ({},{})",
                            k + 1,
                            b[(i, j)],
                            i + 1,
                            j + 1
                        )));
                    }
                }
            }
        }
        regimes.push(RegimeBlocks {
            b11: b.block(r1.start, r1.end, r1.start, r1.end),
            b12: b.block(r1.start, r1.end, r2.start, r2.end),
            b13: b.block(r1.start, r1.end, r3.start, r3.end),
            b22: b.block(r2.start, r2.end, r2.start, r2.end),
            b33: b.block(r3.start, r3.end, r3.start, r3.end),
        });
    }
    Ok(StructuredBlocks {
        sizes: [n1, n2, n3],
        regimes,
    })
}

/// Serialized model: 1-based states, `n + 1` is the absorbing state.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelFile {
    pub n: usize,
    pub m: usize,
    #[serde(rename = "Q")]
    pub q: Vec<Vec<Vec<f64>>>,
    pub pi0: Vec<f64>,
    #[serde(rename = "S0")]
    pub s0: Vec<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub gamma: Vec<Vec<usize>>,
}

impl ModelFile {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::InvalidInput(format!("model JSON: {e}")))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("model serializes")
    }

    /// Builds the model and family. Without `gamma` the family is `{Δ}`.
    pub fn build(&self) -> Result<(MixtureModel, ClosedSetFamily)> {
        if self.q.len() != self.m {
            return Err(Error::InvalidModel(format!(
                "m = {} but {} intensity matrices given",
                self.m,
                self.q.len()
            )));
        }
        let size = self.n + 1;
        let q = self
            .q
            .iter()
            .map(|rows| {
                if rows.len() != size {
                    return Err(Error::InvalidModel(format!(
                        "intensity matrix has {} rows, expected {size}",
                        rows.len()
                    )));
                }
                Matrix::from_rows(rows)
            })
            .collect::<Result<Vec<_>>>()?;
        let model = MixtureModel::new(q, self.pi0.clone(), self.s0.clone())?;
        let family = if self.gamma.is_empty() {
            ClosedSetFamily::absorption_only(self.n)
        } else {
            let sets = self
                .gamma
                .iter()
                .map(|g| {
                    g.iter()
                        .map(|&s| {
                            if s == 0 || s > size {
                                Err(Error::InvalidModel(format!(
                                    "closed-set state {s} outside 1..={size}"
                                )))
                            } else {
                                Ok(s - 1)
                            }
                        })
                        .collect::<Result<Vec<_>>>()
                })
                .collect::<Result<Vec<_>>>()?;
            ClosedSetFamily::new(self.n, sets)?
        };
        Ok((model, family))
    }

    pub fn from_model(model: &MixtureModel, family: &ClosedSetFamily) -> Self {
        Self {
            n: model.n(),
            m: model.m(),
            q: model.intensities().iter().map(Matrix::to_rows).collect(),
            pi0: model.pi0().to_vec(),
            s0: (0..model.m()).map(|k| model.s0(k).to_vec()).collect(),
            gamma: family
                .sets()
                .iter()
                .map(|g| g.iter().map(|s| s + 1).collect())
                .collect(),
        }
    }
}
