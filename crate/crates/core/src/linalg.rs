//! Dense linear algebra helpers: the matrix exponential, induced 2-norms and
//! a guarded linear solve.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

pub type Matrix = DMatrix<f64>;
pub type Vector = DVector<f64>;

/// Backward-error thresholds for the Padé approximants of degree 3, 5, 7, 9 and 13
/// in the 1-norm (Higham, 2005).
const THETA: [(usize, f64); 5] = [
    (3, 1.495_585_217_958_292e-2),
    (5, 2.539_398_330_063_23e-1),
    (7, 9.504_178_996_162_932e-1),
    (9, 2.097_847_961_257_068e0),
    (13, 5.371_920_351_148_152e0),
];

const PADE_3: [f64; 4] = [120.0, 60.0, 12.0, 1.0];
const PADE_5: [f64; 6] = [30240.0, 15120.0, 3360.0, 420.0, 30.0, 1.0];
const PADE_7: [f64; 8] = [
    17_297_280.0,
    8_648_640.0,
    1_995_840.0,
    277_200.0,
    25_200.0,
    1_512.0,
    56.0,
    1.0,
];
const PADE_9: [f64; 10] = [
    17_643_225_600.0,
    8_821_612_800.0,
    2_075_673_600.0,
    302_702_400.0,
    30_270_240.0,
    2_162_160.0,
    110_880.0,
    3_960.0,
    90.0,
    1.0,
];
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

pub fn all_finite(m: &Matrix) -> bool {
    m.iter().all(|v| v.is_finite())
}

/// Maximum absolute column sum.
pub fn norm_1(m: &Matrix) -> f64 {
    m.column_iter()
        .map(|c| c.iter().map(|v| v.abs()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// Operator norm induced by the Euclidean vector norm (largest singular value).
pub fn spectral_norm(m: &Matrix) -> f64 {
    if m.nrows() == 0 || m.ncols() == 0 {
        return 0.0;
    }
    m.clone()
        .singular_values()
        .iter()
        .copied()
        .fold(0.0, f64::max)
}

/// Matrix exponential by scaling and squaring with diagonal Padé approximants.
///
/// The degree is picked from the 1-norm of the input so that the backward error
/// stays at unit roundoff; large inputs are scaled by a power of two into the
/// degree-13 region and squared back.
pub fn matrix_exponential(m: &Matrix) -> Result<Matrix> {
    let n = m.nrows();
    if n != m.ncols() {
        return Err(Error::InvalidInput(format!(
            "matrix exponential needs a square matrix, got {}x{}",
            n,
            m.ncols()
        )));
    }
    if !all_finite(m) {
        return Err(Error::InvalidInput(
            "matrix exponential of a matrix with non-finite entries".into(),
        ));
    }
    if n == 0 {
        return Ok(Matrix::zeros(0, 0));
    }

    let norm = norm_1(m);
    let ident = Matrix::identity(n, n);
    for &(degree, theta) in &THETA[..4] {
        if norm <= theta {
            let coeffs: &[f64] = match degree {
                3 => &PADE_3,
                5 => &PADE_5,
                7 => &PADE_7,
                _ => &PADE_9,
            };
            return pade_low(m, coeffs, &ident);
        }
    }

    let theta13 = THETA[4].1;
    let squarings = if norm > theta13 {
        (norm / theta13).log2().ceil().max(0.0) as i32
    } else {
        0
    };
    let scaled = m / 2f64.powi(squarings);
    let mut result = pade_13(&scaled, &ident)?;
    for _ in 0..squarings {
        result = &result * &result;
    }
    if !all_finite(&result) {
        return Err(Error::NonFinite("matrix exponential"));
    }
    Ok(result)
}

fn pade_low(m: &Matrix, b: &[f64], ident: &Matrix) -> Result<Matrix> {
    // u = m * sum_k b[2k+1] m^{2k}, v = sum_k b[2k] m^{2k}
    let m2 = m * m;
    let mut power = ident.clone();
    let mut odd = Matrix::zeros(m.nrows(), m.ncols());
    let mut even = Matrix::zeros(m.nrows(), m.ncols());
    for k in 0..b.len() / 2 {
        even += &power * b[2 * k];
        odd += &power * b[2 * k + 1];
        power = &power * &m2;
    }
    let u = m * odd;
    solve_pade(&u, &even)
}

fn pade_13(m: &Matrix, ident: &Matrix) -> Result<Matrix> {
    let b = &PADE_13;
    let m2 = m * m;
    let m4 = &m2 * &m2;
    let m6 = &m4 * &m2;
    let u_inner = &m6 * (&m6 * b[13] + &m4 * b[11] + &m2 * b[9])
        + &m6 * b[7]
        + &m4 * b[5]
        + &m2 * b[3]
        + ident * b[1];
    let u = m * u_inner;
    let v = &m6 * (&m6 * b[12] + &m4 * b[10] + &m2 * b[8])
        + &m6 * b[6]
        + &m4 * b[4]
        + &m2 * b[2]
        + ident * b[0];
    solve_pade(&u, &v)
}

// r = (v - u)^{-1} (v + u)
fn solve_pade(u: &Matrix, v: &Matrix) -> Result<Matrix> {
    let p = v + u;
    let q = v - u;
    q.lu()
        .solve(&p)
        .ok_or(Error::NonFinite("Padé denominator solve"))
}

/// Solves `a * x = b` when `a` is comfortably non-singular.
///
/// Returns `None` when LU fails or the 1-norm condition estimate
/// `‖a‖₁‖a⁻¹‖₁` reaches `max_condition`.
pub fn solve_well_conditioned(a: &Matrix, b: &Matrix, max_condition: f64) -> Option<Matrix> {
    let lu = a.clone().lu();
    let inv = lu.try_inverse()?;
    if !all_finite(&inv) {
        return None;
    }
    let cond = norm_1(a) * norm_1(&inv);
    if !cond.is_finite() || cond >= max_condition {
        return None;
    }
    Some(inv * b)
}
