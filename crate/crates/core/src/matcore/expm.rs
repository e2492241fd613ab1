//! Matrix exponential by scaling and squaring with a degree-13 Padé
//! approximant.

use super::{Lu, Matrix, Tolerances};
use crate::error::{Error, Result};

/// Largest ‖A‖₁ for which the [13/13] approximant is accurate to unit
/// roundoff without scaling.
pub const THETA_13: f64 = 5.371_920_351_148_152;

const PADE_13: [f64; 14] = [
    64_764_752_532_480_000.0,
    32_382_376_266_240_000.0,
    7_771_770_303_897_600.0,
    1_187_353_796_428_800.0,
    129_060_195_264_000.0,
    10_559_470_521_600.0,
    670_442_572_800.0,
    33_522_128_640.0,
    1_323_241_920.0,
    40_840_800.0,
    960_960.0,
    16_380.0,
    182.0,
    1.0,
];

/// Returns `e^{A t}`.
pub fn expm(a: &Matrix, t: f64) -> Result<Matrix> {
    let n = a.require_square()?;
    if !a.is_finite() {
        return Err(Error::NonFinite("matrix exponential input"));
    }
    if !(t.is_finite() && t >= 0.0) {
        return Err(Error::InvalidTime(format!(
            "expm time must be >= 0, got {t}"
        )));
    }
    if t == 0.0 || a.max_abs() == 0.0 {
        return Ok(Matrix::identity(n));
    }
    let at = a.scale(t);
    let norm = at.norm1();
    let squarings = if norm > THETA_13 {
        (norm / THETA_13).log2().ceil().max(0.0) as i32
    } else {
        0
    };
    let scaled = at.scale(0.5f64.powi(squarings));
    let mut x = pade13(&scaled)?;
    for _ in 0..squarings {
        x = &x * &x;
    }
    Ok(x)
}

fn pade13(a: &Matrix) -> Result<Matrix> {
    let n = a.rows();
    let b = &PADE_13;
    let ident = Matrix::identity(n);
    let a2 = a * a;
    let a4 = &a2 * &a2;
    let a6 = &a4 * &a2;

    let lin = |c6: f64, c4: f64, c2: f64, c0: f64| -> Matrix {
        let mut m = a6.scale(c6);
        m = &m + &a4.scale(c4);
        m = &m + &a2.scale(c2);
        if c0 != 0.0 {
            m = &m + &ident.scale(c0);
        }
        m
    };

    let u_inner = &(&a6 * &lin(b[13], b[11], b[9], 0.0)) + &lin(b[7], b[5], b[3], b[1]);
    let u = a * &u_inner;
    let v = &(&a6 * &lin(b[12], b[10], b[8], 0.0)) + &lin(b[6], b[4], b[2], b[0]);

    let p = &v + &u;
    let q = &v - &u;
    // The denominator is well conditioned for ‖A‖₁ ≤ θ₁₃, so an absolute
    // singularity test is enough here.
    let lu = Lu::factor(
        &q,
        &Tolerances {
            singular_pivot: 0.0,
            ..Tolerances::default()
        },
    )?;
    lu.solve(&p)
}
