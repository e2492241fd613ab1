#![allow(dead_code)]

use nalgebra::DMatrix;
use phasemix::distributions::{ExitLaw, Region};
use phasemix::model::{ClosedSetFamily, MixtureModel};
use phasemix::quadrature::integrate_to_infinity;
use phasemix::Matrix;
use rand::Rng;

/// Random admissible model. Every transient state gets a membership mask
/// over the `p` sets (never all of them) and may only jump to states whose
/// mask contains its own, which keeps each set closed. States with mask 0
/// come first. Every transient state has a positive rate into the
/// absorbing state.
pub fn random_model<R: Rng>(
    rng: &mut R,
    n_max: usize,
    p: usize,
    m: usize,
    core_start: bool,
) -> (MixtureModel, ClosedSetFamily) {
    let n = rng.gen_range(p.max(2)..=n_max.max(p.max(2)));
    let full = (1usize << p) - 1;
    let cores = rng.gen_range(1..=n.clamp(1, 3));
    let mut masks: Vec<usize> = (0..n)
        .map(|i| {
            if i < cores || p == 1 {
                0
            } else {
                rng.gen_range(1..full.max(2))
            }
        })
        .collect();
    masks.sort_unstable();
    let size = n + 1;
    let mut q = Vec::with_capacity(m);
    for _ in 0..m {
        let mut qk = Matrix::zeros(size, size);
        for i in 0..n {
            let mut total = 0.0;
            for j in 0..n {
                if i != j && masks[i] & masks[j] == masks[i] && rng.gen_bool(0.5) {
                    let r = rng.gen_range(0.1..1.5);
                    qk[(i, j)] = r;
                    total += r;
                }
            }
            let exit = rng.gen_range(0.1..1.0);
            qk[(i, n)] = exit;
            qk[(i, i)] = -(total + exit);
        }
        q.push(qk);
    }
    let mut pi0 = vec![0.0; size];
    let support = if core_start { cores } else { n };
    for x in pi0.iter_mut().take(support) {
        *x = rng.gen_range(0.05..1.0);
    }
    let total: f64 = pi0.iter().sum();
    pi0.iter_mut().for_each(|x| *x /= total);
    let mut s0 = vec![vec![0.0; size]; m];
    for i in 0..size {
        let w: Vec<f64> = (0..m).map(|_| rng.gen_range(0.05..1.0)).collect();
        let total: f64 = w.iter().sum();
        for (row, x) in s0.iter_mut().zip(&w) {
            row[i] = x / total;
        }
    }
    let gamma = (0..p)
        .map(|l| {
            let mut g: Vec<usize> = (0..n).filter(|&i| masks[i] >> l & 1 == 1).collect();
            g.push(n);
            g
        })
        .collect();
    (
        MixtureModel::new(q, pi0, s0).unwrap(),
        ClosedSetFamily::new(n, gamma).unwrap(),
    )
}

pub fn to_nalgebra(a: &Matrix) -> DMatrix<f64> {
    DMatrix::from_fn(a.rows(), a.cols(), |i, j| a[(i, j)])
}

/// `e^{A t}` through nalgebra.
pub fn reference_expm(a: &Matrix, t: f64) -> DMatrix<f64> {
    (to_nalgebra(a) * t).exp()
}

pub fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * b.abs().max(1.0)
}

/// `∬ g f` over one absolutely continuous region of the bivariate law:
/// `t1 > t2` when `first`, else `t2 > t1`.
pub fn ac_integral(law: &ExitLaw, first: bool, g: &dyn Fn(f64, f64) -> f64) -> f64 {
    let t = law.t();
    let want = if first {
        Region::AbsCont1
    } else {
        Region::AbsCont2
    };
    integrate_to_infinity(
        |a| {
            integrate_to_infinity(
                |v| {
                    let (t1, t2) = if first {
                        (t + a + v, t + a)
                    } else {
                        (t + a, t + a + v)
                    };
                    let f = law.dens_biv(t1, t2).unwrap();
                    if f.region != want {
                        return 0.0;
                    }
                    g(t1, t2) * f.value
                },
                0.0,
                1e-13,
                1e-11,
            )
            .unwrap()
            .value
        },
        0.0,
        1e-11,
        1e-10,
    )
    .unwrap()
    .value
}

/// `∫ g f^(0)` along the diagonal.
pub fn diag_integral(law: &ExitLaw, g: &dyn Fn(f64) -> f64) -> f64 {
    let t = law.t();
    integrate_to_infinity(
        |a| {
            let f = law.dens_biv(t + a, t + a).unwrap();
            if f.region != Region::Singular {
                return 0.0;
            }
            g(t + a) * f.value
        },
        0.0,
        1e-13,
        1e-11,
    )
    .unwrap()
    .value
}
