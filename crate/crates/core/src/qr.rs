// SPDX-License-Identifier: MIT OR Apache-2.0

//! Economy-size QR factorization of tall matrices.
//!
//! Three kernels are provided, all producing `Q` (`N × Np`, orthonormal
//! columns) and `R` (`Np × Np`, upper triangular with a non-negative
//! diagonal):
//!
//! * [`givens_qr`]: adjacent-row plane rotations. Each rotation is encoded as
//!   a single scalar in the entry it annihilates, and `Q` is rebuilt from those
//!   scalars afterwards by applying the transposed rotations backwards.
//! * [`gram_schmidt_qr`]: modified Gram-Schmidt. Detects columns whose
//!   projection residual collapses and reports rank deficiency.
//! * [`householder_qr`]: reflectors stored in the subdiagonal of the working
//!   matrix. The full `N × N` orthogonal factor is formed by backward
//!   accumulation and its leading `Np` columns are returned.
//!
//! Column updates within one elimination step are independent and run on the
//! [`ExecContext`]; column norms go through its deterministic reduction.

use std::fmt;

use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::parallel::{split_by_parts, ExecContext};
use crate::real::{axpy_neg, dot, Precision, Real};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum QrMethod {
    Givens,
    GramSchmidt,
    Householder,
}

impl QrMethod {
    pub const ALL: [QrMethod; 3] = [
        QrMethod::Givens,
        QrMethod::GramSchmidt,
        QrMethod::Householder,
    ];

    /// Short name used on the command line and in output records.
    pub fn as_str(self) -> &'static str {
        match self {
            QrMethod::Givens => "givens",
            QrMethod::GramSchmidt => "gs",
            QrMethod::Householder => "hh",
        }
    }
}

impl fmt::Display for QrMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for QrMethod {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "givens" | "gr" => Ok(QrMethod::Givens),
            "gs" | "gram-schmidt" | "gramschmidt" => Ok(QrMethod::GramSchmidt),
            "hh" | "householder" => Ok(QrMethod::Householder),
            other => Err(format!(
                "unknown QR method '{other}' (expected givens, gs or hh)"
            )),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct QrFactors<T> {
    pub q_mat: Matrix<T>,
    pub r_mat: Matrix<T>,
    pub method: QrMethod,
    pub precision: Precision,
    /// Floating-point operations executed by the kernel.
    pub flops: u64,
}

impl<T: Real> QrFactors<T> {
    /// `max |QᵀQ - I|`.
    pub fn orthogonality_error(&self) -> f64 {
        let q = self.q_mat.cast::<f64>();
        let np = q.cols();
        let mut worst = 0.0f64;
        for i in 0..np {
            for j in i..np {
                let g = dot(q.col(i), q.col(j));
                let target = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((g - target).abs());
            }
        }
        worst
    }

    /// `max |A - QR|`.
    pub fn reconstruction_error(&self, a: &Matrix<T>) -> f64 {
        let qr = self.q_mat.cast::<f64>().matmul(&self.r_mat.cast::<f64>());
        qr.max_abs_diff(&a.cast::<f64>())
    }

    /// Largest magnitude below the diagonal of `R` (zero by construction).
    pub fn lower_triangle_max(&self) -> f64 {
        let np = self.r_mat.cols();
        let mut worst = 0.0f64;
        for j in 0..np {
            for i in j + 1..np {
                worst = worst.max(self.r_mat[(i, j)].as_f64().abs());
            }
        }
        worst
    }

    /// Checks the factor invariants against `tol` (see
    /// [`Precision::qr_tolerance`] for the defaults).
    pub fn satisfies_invariants(&self, a: &Matrix<T>, tol: f64) -> bool {
        let scale = a.max_abs().as_f64() * a.cols() as f64;
        self.lower_triangle_max() == 0.0
            && self.orthogonality_error() <= tol
            && self.reconstruction_error(a) <= tol * scale
    }
}

pub fn factorize<T: Real>(
    a: &Matrix<T>,
    method: QrMethod,
    ctx: &ExecContext,
) -> Result<QrFactors<T>> {
    match method {
        QrMethod::Givens => givens_qr(a, ctx),
        QrMethod::GramSchmidt => gram_schmidt_qr(a, ctx),
        QrMethod::Householder => householder_qr(a, ctx),
    }
}

fn check_input<T: Real>(a: &Matrix<T>) -> Result<()> {
    if a.cols() == 0 || a.rows() < a.cols() {
        return Err(Error::Dimension(format!(
            "QR needs N >= Np >= 1, got {}x{}",
            a.rows(),
            a.cols()
        )));
    }
    if let Some(index) = a.as_slice().iter().position(|x| !x.is_finite()) {
        return Err(Error::NonFinite { index });
    }
    Ok(())
}

/// Runs `body(column_index, column, slot)` over consecutive columns of
/// `cols` (each `n` long), pairing column `k` with `out[k]`.
fn par_columns<T, U, F>(ctx: &ExecContext, cols: &mut [T], n: usize, out: &mut [U], body: F)
where
    T: Send,
    U: Send,
    F: Fn(usize, &mut [T], &mut U) + Sync,
{
    let m = out.len();
    debug_assert_eq!(cols.len(), m * n);
    let parts = ctx.logical_ranges(m);
    let col_chunks = split_by_parts(cols, n, &parts);
    let out_chunks = split_by_parts(out, 1, &parts);
    let payloads: Vec<_> = parts
        .into_iter()
        .zip(col_chunks.into_iter().zip(out_chunks))
        .collect();
    ctx.run_parts(payloads, |_, ((start, _), (chunk, slots))| {
        for (k, (col, slot)) in chunk.chunks_mut(n).zip(slots.iter_mut()).enumerate() {
            body(start + k, col, slot);
        }
    });
}

fn upper_triangle<T: Real>(w: &Matrix<T>, np: usize) -> Matrix<T> {
    Matrix::from_fn(np, np, |i, j| if i <= j { w[(i, j)] } else { T::zero() })
}

/// Flips signs so every diagonal entry of `R` is non-negative.
fn normalize_signs<T: Real>(q: &mut Matrix<T>, r: &mut Matrix<T>) {
    let np = r.cols();
    for k in 0..np {
        if r[(k, k)] < T::zero() {
            for j in k..np {
                r[(k, j)] = -r[(k, j)];
            }
            for x in q.col_mut(k) {
                *x = -*x;
            }
        }
    }
}

// Single-scalar rotation encoding: the annihilated entry keeps enough to
// rebuild (c, s) up to a common sign.
fn encode_rotation<T: Real>(c: T, s: T) -> T {
    let two = T::of(2.0);
    if c == T::zero() {
        T::one()
    } else if s.abs() < c.abs() {
        c.signum() * s / two
    } else {
        two * s.signum() / c
    }
}

fn decode_rotation<T: Real>(rho: T) -> (T, T) {
    let two = T::of(2.0);
    if rho == T::one() {
        (T::zero(), T::one())
    } else if rho.abs() < T::one() {
        let s = two * rho;
        ((T::one() - s * s).sqrt(), s)
    } else {
        let c = two / rho;
        (c, (T::one() - c * c).sqrt())
    }
}

/// Economy QR by Givens rotations on adjacent rows, bottom-up per column.
pub fn givens_qr<T: Real>(a: &Matrix<T>, ctx: &ExecContext) -> Result<QrFactors<T>> {
    check_input(a)?;
    let (n, np) = (a.rows(), a.cols());
    let mut w = a.clone();
    let mut cos = vec![T::zero(); n];
    let mut sin = vec![T::zero(); n];
    let mut flops = 0u64;

    for j in 0..np {
        let (head, tail) = w.as_mut_slice().split_at_mut((j + 1) * n);
        let col = &mut head[j * n..];
        for i in (j + 1..n).rev() {
            let (x, y) = (col[i - 1], col[i]);
            let (c, s) = if y == T::zero() {
                (T::one(), T::zero())
            } else {
                let r = x.hypot(y);
                (x / r, y / r)
            };
            let rho = encode_rotation(c, s);
            let (c, s) = decode_rotation(rho);
            col[i - 1] = c * x + s * y;
            col[i] = rho;
            cos[i] = c;
            sin[i] = s;
        }
        let rotations = (n - 1 - j) as u64;
        flops += rotations * 9;

        let trailing = np - 1 - j;
        if trailing > 0 {
            let (cos, sin) = (&cos, &sin);
            par_columns(ctx, tail, n, &mut vec![(); trailing], |_, col, _| {
                for i in (j + 1..n).rev() {
                    let (x, y) = (col[i - 1], col[i]);
                    col[i - 1] = cos[i] * x + sin[i] * y;
                    col[i] = cos[i] * y - sin[i] * x;
                }
            });
            flops += rotations * trailing as u64 * 6;
        }
    }

    let mut q = Matrix::eye(n, np);
    for j in (0..np).rev() {
        if j + 1 >= n {
            continue;
        }
        for i in j + 1..n {
            let (c, s) = decode_rotation(w[(i, j)]);
            cos[i] = c;
            sin[i] = s;
        }
        let (cos, sin) = (&cos, &sin);
        let active = np - j;
        par_columns(
            ctx,
            &mut q.as_mut_slice()[j * n..],
            n,
            &mut vec![(); active],
            |_, col, _| {
                for i in j + 1..n {
                    let (x, y) = (col[i - 1], col[i]);
                    col[i - 1] = cos[i] * x - sin[i] * y;
                    col[i] = sin[i] * x + cos[i] * y;
                }
            },
        );
        flops += (n - 1 - j) as u64 * active as u64 * 6;
    }

    let mut r = upper_triangle(&w, np);
    normalize_signs(&mut q, &mut r);
    Ok(QrFactors {
        q_mat: q,
        r_mat: r,
        method: QrMethod::Givens,
        precision: T::PRECISION,
        flops,
    })
}

/// Economy QR by modified Gram-Schmidt.
///
/// Fails with [`Error::RankDeficient`] when a column keeps less than
/// `sqrt(eps)` of its original norm after projection.
pub fn gram_schmidt_qr<T: Real>(a: &Matrix<T>, ctx: &ExecContext) -> Result<QrFactors<T>> {
    check_input(a)?;
    let (n, np) = (a.rows(), a.cols());
    let mut q = a.clone();
    let mut r = Matrix::<T>::zeros(np, np);
    let mut flops = 0u64;

    let mut col_norms = vec![T::zero(); np];
    par_columns(ctx, q.as_mut_slice(), n, &mut col_norms, |_, col, norm| {
        *norm = dot(col, col).sqrt();
    });
    flops += (2 * n * np) as u64;

    let mut r_row = vec![T::zero(); np];
    for k in 0..np {
        let norm = ctx.dot(q.col(k), q.col(k)).sqrt();
        flops += 2 * n as u64;
        if !(norm > T::rank_eps() * col_norms[k]) {
            return Err(Error::RankDeficient { column: k });
        }
        r[(k, k)] = norm;
        let inv = T::one() / norm;
        for x in q.col_mut(k) {
            *x = *x * inv;
        }
        flops += n as u64;

        let trailing = np - 1 - k;
        if trailing == 0 {
            continue;
        }
        let (head, tail) = q.as_mut_slice().split_at_mut((k + 1) * n);
        let qk = &head[k * n..];
        let slots = &mut r_row[..trailing];
        par_columns(ctx, tail, n, slots, |_, col, rkj| {
            let proj = dot(qk, col);
            axpy_neg(proj, qk, col);
            *rkj = proj;
        });
        for (t, &v) in r_row[..trailing].iter().enumerate() {
            r[(k, k + 1 + t)] = v;
        }
        flops += (4 * n * trailing) as u64;
    }

    Ok(QrFactors {
        q_mat: q,
        r_mat: r,
        method: QrMethod::GramSchmidt,
        precision: T::PRECISION,
        flops,
    })
}

/// Applies `I - tau v vᵀ` to `y`, where `v = [1, tail...]`. Returns flops.
#[inline]
fn apply_reflector<T: Real>(tau: T, v_tail: &[T], y: &mut [T]) -> u64 {
    let (y0, y_tail) = y.split_first_mut().expect("non-empty reflector target");
    let wv = tau * (*y0 + dot(v_tail, y_tail));
    *y0 = *y0 - wv;
    axpy_neg(wv, v_tail, y_tail);
    4 * (v_tail.len() as u64 + 1)
}

/// Economy QR by Householder reflections with compact reflector storage.
pub fn householder_qr<T: Real>(a: &Matrix<T>, ctx: &ExecContext) -> Result<QrFactors<T>> {
    check_input(a)?;
    let (n, np) = (a.rows(), a.cols());
    let mut w = a.clone();
    let mut tau = vec![T::zero(); np];
    let mut flops = 0u64;

    for j in 0..np {
        let m = n - j;
        let (head, tail) = w.as_mut_slice().split_at_mut((j + 1) * n);
        let x = &mut head[j * n + j..];
        let x0 = x[0];
        let tail_sq = ctx.dot(&x[1..], &x[1..]);
        flops += 2 * (m as u64 - 1);
        if tail_sq == T::zero() {
            // Already triangular in this column.
            continue;
        }
        let norm = (x0 * x0 + tail_sq).sqrt();
        let beta = if x0 >= T::zero() { -norm } else { norm };
        let v0 = x0 - beta;
        let inv = T::one() / v0;
        for xi in &mut x[1..] {
            *xi = *xi * inv;
        }
        x[0] = beta;
        tau[j] = (beta - x0) / beta;
        flops += m as u64 + 6;

        let trailing = np - 1 - j;
        if trailing > 0 {
            let (v_tail, t) = (&x[1..], tau[j]);
            par_columns(ctx, tail, n, &mut vec![(); trailing], |_, col, _| {
                apply_reflector(t, v_tail, &mut col[j..]);
            });
            flops += 4 * m as u64 * trailing as u64;
        }
    }

    // Backward accumulation of the full N x N factor
    // Q = H_0 (H_1 (... H_{np-1})). H_j only touches the block Q[j.., j..];
    // earlier columns are still unit vectors there. The economy factor is
    // the leading np columns.
    let mut full = Matrix::identity(n);
    for j in (0..np).rev() {
        if tau[j] == T::zero() {
            continue;
        }
        let m = n - j;
        let v_tail = &w.col(j)[j + 1..];
        let t = tau[j];
        par_columns(
            ctx,
            &mut full.as_mut_slice()[j * n..],
            n,
            &mut vec![(); m],
            |_, col, _| {
                apply_reflector(t, v_tail, &mut col[j..]);
            },
        );
        flops += 4 * m as u64 * m as u64;
    }
    let mut data = full.into_vec();
    data.truncate(n * np);
    data.shrink_to_fit();
    let mut q = Matrix::from_col_major(n, np, data);

    let mut r = upper_triangle(&w, np);
    normalize_signs(&mut q, &mut r);
    Ok(QrFactors {
        q_mat: q,
        r_mat: r,
        method: QrMethod::Householder,
        precision: T::PRECISION,
        flops,
    })
}

/// Solves `R x = rhs` for upper-triangular `R`.
///
/// A diagonal entry is treated as zero when `|r_ii| <= sqrt(eps) * ||R[:, i]||`.
pub fn back_substitution<T: Real>(r: &Matrix<T>, rhs: &[T]) -> Result<Vec<T>> {
    let np = r.cols();
    if r.rows() != np || rhs.len() != np {
        return Err(Error::Dimension(format!(
            "back substitution needs a square R matching rhs, got {}x{} and {}",
            r.rows(),
            np,
            rhs.len()
        )));
    }
    let mut x = vec![T::zero(); np];
    for i in (0..np).rev() {
        let col_norm = dot(&r.col(i)[..=i], &r.col(i)[..=i]).sqrt();
        let d = r[(i, i)];
        if !(d.abs() > T::rank_eps() * col_norm) {
            return Err(Error::Singular { index: i });
        }
        let mut acc = rhs[i];
        for k in i + 1..np {
            acc = acc - r[(i, k)] * x[k];
        }
        x[i] = acc / d;
    }
    Ok(x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, StandardNormal};

    fn random_matrix(n: usize, np: usize, seed: u64) -> Matrix<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Matrix::from_fn(n, np, |_, _| StandardNormal.sample(&mut rng))
    }

    fn all_methods<T: Real>(a: &Matrix<T>) -> Vec<QrFactors<T>> {
        let ctx = ExecContext::sequential();
        QrMethod::ALL
            .iter()
            .map(|&m| factorize(a, m, &ctx).unwrap())
            .collect()
    }

    #[test]
    fn identity_factors_trivially() {
        let a = Matrix::<f64>::identity(3);
        for f in all_methods(&a) {
            assert_eq!(f.q_mat.max_abs_diff(&a), 0.0, "{}", f.method);
            assert_eq!(f.r_mat.max_abs_diff(&a), 0.0, "{}", f.method);
        }
    }

    #[test]
    fn permutation_matrix() {
        let a = Matrix::<f64>::from_rows(&[[0.0, 1.0], [1.0, 0.0]]);
        for f in all_methods(&a) {
            assert!(
                f.q_mat.max_abs_diff(&a) < 1e-15,
                "{} Q = {:?}",
                f.method,
                f.q_mat
            );
            assert!(
                f.r_mat.max_abs_diff(&Matrix::identity(2)) < 1e-15,
                "{}",
                f.method
            );
        }
    }

    #[test]
    fn hand_computed_three_by_two() {
        // Column 1 normalized: [1, 0, 1] / sqrt(2). Projection of column 2
        // onto it: 1/sqrt(2). Remainder [1/2, 1, -1/2] has norm sqrt(1.5).
        let a = Matrix::<f64>::from_rows(&[[1.0, 1.0], [0.0, 1.0], [1.0, 0.0]]);
        let s2 = 2f64.sqrt();
        let expected_r = Matrix::from_rows(&[[s2, 1.0 / s2], [0.0, 1.5f64.sqrt()]]);
        for f in all_methods(&a) {
            assert!(
                f.r_mat.max_abs_diff(&expected_r) < 1e-10,
                "{} R = {:?}",
                f.method,
                f.r_mat
            );
            let q0 = f.q_mat.col(0);
            assert!((q0[0] - 1.0 / s2).abs() < 1e-12);
            assert!(q0[1].abs() < 1e-12);
            assert!((q0[2] - 1.0 / s2).abs() < 1e-12);
        }
    }

    #[test]
    fn gram_schmidt_duplicate_columns() {
        let a = Matrix::<f64>::from_rows(&[[1.0, 1.0], [2.0, 2.0], [3.0, 3.0]]);
        assert_eq!(
            gram_schmidt_qr(&a, &ExecContext::sequential()).unwrap_err(),
            Error::RankDeficient { column: 1 }
        );
    }

    #[test]
    fn rejects_wide_and_non_finite() {
        let ctx = ExecContext::sequential();
        let wide = Matrix::<f64>::zeros(2, 3);
        let mut bad = Matrix::<f64>::identity(3);
        bad[(1, 2)] = f64::INFINITY;
        for m in QrMethod::ALL {
            assert!(matches!(
                factorize(&wide, m, &ctx),
                Err(Error::Dimension(_))
            ));
            assert!(matches!(
                factorize(&bad, m, &ctx),
                Err(Error::NonFinite { .. })
            ));
        }
    }

    #[test]
    fn zero_column_is_singular_for_rotations_and_reflectors() {
        let mut a = random_matrix(20, 4, 3);
        for x in a.col_mut(2) {
            *x = 0.0;
        }
        let ctx = ExecContext::sequential();
        for m in [QrMethod::Givens, QrMethod::Householder] {
            let f = factorize(&a, m, &ctx).unwrap();
            assert_eq!(f.r_mat[(2, 2)], 0.0);
            assert_eq!(
                back_substitution(&f.r_mat, &[1.0; 4]).unwrap_err(),
                Error::Singular { index: 2 }
            );
        }
        assert_eq!(
            gram_schmidt_qr(&a, &ctx).unwrap_err(),
            Error::RankDeficient { column: 2 }
        );
    }

    #[test]
    fn gram_schmidt_random_480x16() {
        let a = random_matrix(480, 16, 11);
        let f = gram_schmidt_qr(&a, &ExecContext::sequential()).unwrap();
        assert!(f.orthogonality_error() <= 1e-10);
        assert!(f.reconstruction_error(&a) <= 1e-10 * a.max_abs() * 16.0);
    }

    #[test]
    fn back_substitution_examples() {
        let r = Matrix::<f64>::from_rows(&[[2.0, 1.0], [0.0, 3.0]]);
        assert_eq!(back_substitution(&r, &[5.0, 9.0]).unwrap(), vec![1.0, 3.0]);
        let v = [0.5, -2.0, 7.0];
        assert_eq!(
            back_substitution(&Matrix::identity(3), &v).unwrap(),
            v.to_vec()
        );
        let singular = Matrix::<f64>::from_rows(&[[2.0, 1.0], [0.0, 0.0]]);
        assert_eq!(
            back_substitution(&singular, &[1.0, 1.0]).unwrap_err(),
            Error::Singular { index: 1 }
        );
    }

    #[test]
    fn rotation_encoding_roundtrip_up_to_sign() {
        for k in 0..64 {
            let theta = k as f64 * std::f64::consts::TAU / 64.0 + 0.01;
            let (c, s) = (theta.cos(), theta.sin());
            let (dc, ds) = decode_rotation(encode_rotation(c, s));
            let same = (dc - c).abs() < 1e-14 && (ds - s).abs() < 1e-14;
            let flipped = (dc + c).abs() < 1e-14 && (ds + s).abs() < 1e-14;
            assert!(same || flipped, "theta = {theta}");
        }
        assert_eq!(decode_rotation(encode_rotation(0.0f64, -1.0)), (0.0, 1.0));
    }

    #[test]
    fn flop_counters_match_closed_forms() {
        let (n, np) = (48usize, 5usize);
        let a = random_matrix(n, np, 5);
        let ctx = ExecContext::sequential();
        let sum = |f: &dyn Fn(usize) -> usize| (0..np).map(f).sum::<usize>() as u64;

        let gs = gram_schmidt_qr(&a, &ctx).unwrap();
        let expected = (2 * n * np) as u64 + sum(&|k| 3 * n + 4 * n * (np - 1 - k));
        assert_eq!(gs.flops, expected);

        let gr = givens_qr(&a, &ctx).unwrap();
        let expected = sum(&|j| (n - 1 - j) * (9 + 6 * (np - 1 - j) + 6 * (np - j)));
        assert_eq!(gr.flops, expected);

        let hh = householder_qr(&a, &ctx).unwrap();
        let expected = sum(&|j| {
            let m = n - j;
            2 * (m - 1) + m + 6 + 4 * m * (np - 1 - j) + 4 * m * m
        });
        assert_eq!(hh.flops, expected);
    }

    #[test]
    fn parallel_factors_are_bitwise_identical() {
        let a = random_matrix(200, 8, 21);
        let seq = all_methods(&a);
        for w in [2, 3, 8] {
            let ctx = ExecContext::new(w).unwrap();
            for (m, s) in QrMethod::ALL.iter().zip(&seq) {
                let p = factorize(&a, *m, &ctx).unwrap();
                assert_eq!(p, *s, "{m} with {w} workers");
            }
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn invariants_hold_for_random_tall_matrices(np in 1usize..12, extra in 0usize..40, seed in any::<u64>()) {
            let n = 2 * np + extra;
            let a = random_matrix(n, np, seed);
            let a32 = a.cast::<f32>();
            let f64s = all_methods(&a);
            let f32s = all_methods(&a32);
            for f in &f64s {
                prop_assert!(f.satisfies_invariants(&a, 1e-10), "{} f64", f.method);
            }
            for f in &f32s {
                prop_assert!(f.satisfies_invariants(&a32, 1e-4), "{} f32", f.method);
            }
            for f in &f64s[1..] {
                prop_assert!(f.r_mat.max_abs_diff(&f64s[0].r_mat) <= 1e-8);
            }
        }

        #[test]
        fn back_substitution_residual(np in 1usize..20, seed in any::<u64>()) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let r = Matrix::<f64>::from_fn(np, np, |i, j| {
                let g: f64 = StandardNormal.sample(&mut rng);
                match i.cmp(&j) {
                    std::cmp::Ordering::Greater => 0.0,
                    std::cmp::Ordering::Equal => 2.0 * np as f64 + g.abs(),
                    std::cmp::Ordering::Less => g,
                }
            });
            let rhs: Vec<f64> = (0..np).map(|_| StandardNormal.sample(&mut rng)).collect();
            let x = back_substitution(&r, &rhs).unwrap();
            let rx = r.matvec(&x);
            let inf = rhs.iter().fold(0.0f64, |m, v| m.max(v.abs()));
            let resid = rx.iter().zip(&rhs).fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
            prop_assert!(resid <= np as f64 * f64::EPSILON * inf * 10.0);
        }
    }
}
