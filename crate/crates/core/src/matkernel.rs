//! Dense complex matrix kernel.
//!
//! Matrix exponentials (Padé-13 with scaling and squaring), eigendecomposition
//! with a defectiveness metric, Lyapunov solves by Kronecker vectorization and
//! Hilbert-Schmidt geometry. Every other module builds on these primitives.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;
use thiserror::Error;

pub type CMatrix = DMatrix<Complex64>;
pub type CVector = DVector<Complex64>;

/// Reciprocal condition number of the eigenvector matrix below which a
/// matrix is reported as defective.
pub const DEFECTIVE_RCOND: f64 = 1e-8;

/// Relative eigenvalue separation below which two Schur diagonal entries are
/// treated as one coalesced eigenvalue during eigenvector back-substitution.
const COALESCE_TOL: f64 = 1e-6;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum KernelError {
    #[error("matrix entry ({row}, {col}) is not finite")]
    NonFinite { row: usize, col: usize },
    #[error("expected a square matrix, got {rows}x{cols}")]
    NotSquare { rows: usize, cols: usize },
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("Schur iteration did not converge")]
    NoConvergence,
    #[error("matrix is not stable: largest real part of the spectrum is {0:e}")]
    NotStable(f64),
    #[error("linear system is singular")]
    Singular,
}

pub type KernelResult<T> = Result<T, KernelError>;

pub fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

/// Builds a matrix from row slices, rejecting ragged or non-finite input.
pub fn from_rows(rows: &[Vec<Complex64>]) -> KernelResult<CMatrix> {
    let n = rows.len();
    let m = rows.first().map_or(0, Vec::len);
    if let Some(bad) = rows.iter().find(|r| r.len() != m) {
        return Err(KernelError::DimensionMismatch(format!(
            "ragged rows: expected {m} columns, found {}",
            bad.len()
        )));
    }
    let a = CMatrix::from_fn(n, m, |i, j| rows[i][j]);
    check_finite(&a)?;
    Ok(a)
}

pub fn check_finite(a: &CMatrix) -> KernelResult<()> {
    for j in 0..a.ncols() {
        for i in 0..a.nrows() {
            let z = a[(i, j)];
            if !(z.re.is_finite() && z.im.is_finite()) {
                return Err(KernelError::NonFinite { row: i, col: j });
            }
        }
    }
    Ok(())
}

pub fn check_square(a: &CMatrix) -> KernelResult<usize> {
    if a.nrows() != a.ncols() {
        return Err(KernelError::NotSquare {
            rows: a.nrows(),
            cols: a.ncols(),
        });
    }
    Ok(a.nrows())
}

pub fn commutator(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a * b - b * a
}

pub fn anticommutator(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a * b + b * a
}

pub fn identity(n: usize) -> CMatrix {
    CMatrix::identity(n, n)
}

pub fn one_norm(a: &CMatrix) -> f64 {
    (0..a.ncols())
        .map(|j| a.column(j).iter().map(|z| z.norm()).sum::<f64>())
        .fold(0.0, f64::max)
}

pub fn max_abs(a: &CMatrix) -> f64 {
    a.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

pub fn is_hermitian(a: &CMatrix, tol: f64) -> bool {
    a.nrows() == a.ncols() && max_abs(&(a - a.adjoint())) <= tol
}

/// Hilbert-Schmidt inner product `Tr(A† B)`.
pub fn hs_inner(a: &CMatrix, b: &CMatrix) -> Complex64 {
    a.iter().zip(b.iter()).map(|(x, y)| x.conj() * y).sum()
}

pub fn hs_norm(a: &CMatrix) -> f64 {
    a.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// Row-stacking vectorization: entry `(i, j)` lands at `i * ncols + j`.
pub fn vec_rows(a: &CMatrix) -> CVector {
    let (n, m) = a.shape();
    CVector::from_fn(n * m, |k, _| a[(k / m, k % m)])
}

pub fn unvec_rows(v: &CVector, nrows: usize, ncols: usize) -> CMatrix {
    CMatrix::from_fn(nrows, ncols, |i, j| v[i * ncols + j])
}

pub fn inverse(a: &CMatrix) -> KernelResult<CMatrix> {
    let n = check_square(a)?;
    a.clone()
        .lu()
        .solve(&identity(n))
        .filter(|x| x.iter().all(|z| z.re.is_finite() && z.im.is_finite()))
        .ok_or(KernelError::Singular)
}

/// Applies a real function to a Hermitian matrix through its spectral
/// decomposition.
pub fn hermitian_function(a: &CMatrix, f: impl Fn(f64) -> f64) -> KernelResult<CMatrix> {
    check_square(a)?;
    check_finite(a)?;
    let herm = (a + a.adjoint()) * c(0.5, 0.0);
    let se = SymmetricEigen::new(herm);
    let u = &se.eigenvectors;
    let d = CMatrix::from_diagonal(&DVector::from_iterator(
        se.eigenvalues.len(),
        se.eigenvalues.iter().map(|&x| c(f(x), 0.0)),
    ));
    Ok(u * d * u.adjoint())
}

const PADE3: [f64; 4] = [120.0, 60.0, 12.0, 1.0];
const PADE5: [f64; 6] = [30240.0, 15120.0, 3360.0, 420.0, 30.0, 1.0];
const PADE7: [f64; 8] = [
    17297280.0, 8648640.0, 1995840.0, 277200.0, 25200.0, 1512.0, 56.0, 1.0,
];
const PADE9: [f64; 10] = [
    17643225600.0,
    8821612800.0,
    2075673600.0,
    302702400.0,
    30270240.0,
    2162160.0,
    110880.0,
    3960.0,
    90.0,
    1.0,
];
const PADE13: [f64; 14] = [
    64764752532480000.0,
    32382376266240000.0,
    7771770303897600.0,
    1187353796428800.0,
    129060195264000.0,
    10559470521600.0,
    670442572800.0,
    33522128640.0,
    1323241920.0,
    40840800.0,
    960960.0,
    16380.0,
    182.0,
    1.0,
];
const THETA: [f64; 5] = [
    1.495585217958292e-2,
    2.53939833006323e-1,
    9.504178996162932e-1,
    2.097847961257068e0,
    5.371920351148152e0,
];

fn scaled(a: &CMatrix, s: f64) -> CMatrix {
    a * c(s, 0.0)
}

/// Padé approximant of low order `m ∈ {3, 5, 7, 9}` evaluated directly.
fn pade_low(a: &CMatrix, b: &[f64]) -> KernelResult<CMatrix> {
    let n = a.nrows();
    let a2 = a * a;
    let mut even_pows = vec![identity(n)];
    for k in 1..b.len() / 2 {
        let next = &even_pows[k - 1] * &a2;
        even_pows.push(next);
    }
    let mut u_inner = CMatrix::zeros(n, n);
    let mut v = CMatrix::zeros(n, n);
    for (k, p) in even_pows.iter().enumerate() {
        u_inner += scaled(p, b[2 * k + 1]);
        v += scaled(p, b[2 * k]);
    }
    let u = a * u_inner;
    solve_pade(&u, &v)
}

fn pade13(a: &CMatrix) -> KernelResult<CMatrix> {
    let n = a.nrows();
    let b = &PADE13;
    let eye = identity(n);
    let a2 = a * a;
    let a4 = &a2 * &a2;
    let a6 = &a4 * &a2;
    let u_hi = scaled(&a6, b[13]) + scaled(&a4, b[11]) + scaled(&a2, b[9]);
    let u_inner = &a6 * u_hi
        + scaled(&a6, b[7])
        + scaled(&a4, b[5])
        + scaled(&a2, b[3])
        + scaled(&eye, b[1]);
    let u = a * u_inner;
    let v_hi = scaled(&a6, b[12]) + scaled(&a4, b[10]) + scaled(&a2, b[8]);
    let v = &a6 * v_hi + scaled(&a6, b[6]) + scaled(&a4, b[4]) + scaled(&a2, b[2]) + scaled(&eye, b[0]);
    solve_pade(&u, &v)
}

fn solve_pade(u: &CMatrix, v: &CMatrix) -> KernelResult<CMatrix> {
    let p = v + u;
    let q = v - u;
    q.lu()
        .solve(&p)
        .filter(|x| x.iter().all(|z| z.re.is_finite() && z.im.is_finite()))
        .ok_or(KernelError::Singular)
}

/// Matrix exponential by Padé-13 scaling and squaring.
pub fn expm(a: &CMatrix) -> KernelResult<CMatrix> {
    let n = check_square(a)?;
    check_finite(a)?;
    if n == 0 {
        return Ok(a.clone());
    }
    let norm = one_norm(a);
    let low: [&[f64]; 4] = [&PADE3, &PADE5, &PADE7, &PADE9];
    for (b, &theta) in low.iter().zip(THETA.iter()) {
        if norm <= theta {
            return pade_low(a, b);
        }
    }
    let s = (norm / THETA[4]).log2().ceil().max(0.0) as i32;
    let mut r = pade13(&scaled(a, 2f64.powi(-s)))?;
    for _ in 0..s {
        r = &r * &r;
    }
    check_finite(&r)?;
    Ok(r)
}

/// Groups indices into blocks that the sparsity pattern of `a` never couples.
pub fn decoupled_blocks(a: &CMatrix) -> Vec<Vec<usize>> {
    let n = a.nrows();
    let links = (0..n)
        .flat_map(|j| (0..n).map(move |i| (i, j)))
        .filter(|&(i, j)| a[(i, j)] != Complex64::new(0.0, 0.0));
    blocks_from_pattern(n, links)
}

/// Connected components of the graph on `0..n` with the given edges.
pub fn blocks_from_pattern(n: usize, links: impl IntoIterator<Item = (usize, usize)>) -> Vec<Vec<usize>> {
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(p: &mut [usize], mut x: usize) -> usize {
        while p[x] != x {
            p[x] = p[p[x]];
            x = p[x];
        }
        x
    }
    for (i, j) in links {
        if i != j {
            let (ri, rj) = (find(&mut parent, i), find(&mut parent, j));
            if ri != rj {
                parent[ri] = rj;
            }
        }
    }
    let mut groups: std::collections::BTreeMap<usize, Vec<usize>> = Default::default();
    for i in 0..n {
        let r = find(&mut parent, i);
        groups.entry(r).or_default().push(i);
    }
    groups.into_values().collect()
}

/// Computes `expm(a) * x` by exponentiating only the decoupled blocks of `a`
/// that intersect the support of `x`.
pub fn expm_apply(a: &CMatrix, x: &CVector) -> KernelResult<CVector> {
    let n = check_square(a)?;
    if x.len() != n {
        return Err(KernelError::DimensionMismatch(format!(
            "vector of length {} for a {n}x{n} matrix",
            x.len()
        )));
    }
    let mut out = CVector::zeros(n);
    for block in decoupled_blocks(a) {
        if block.iter().all(|&i| x[i] == Complex64::new(0.0, 0.0)) {
            continue;
        }
        let sub = a.select_rows(&block).select_columns(&block);
        let e = expm(&sub)?;
        let xs = CVector::from_iterator(block.len(), block.iter().map(|&i| x[i]));
        let ys = e * xs;
        for (k, &i) in block.iter().enumerate() {
            out[i] = ys[k];
        }
    }
    Ok(out)
}

/// Eigenvalues and right eigenvectors with a defectiveness metric.
#[derive(Debug, Clone)]
pub struct EigDecomposition {
    pub eigenvalues: Vec<Complex64>,
    /// Columns are unit-norm right eigenvectors.
    pub right_vectors: CMatrix,
    /// Reciprocal 2-norm condition number of `right_vectors`, in `[0, 1]`.
    pub defectiveness: f64,
}

impl EigDecomposition {
    pub fn is_defective(&self) -> bool {
        self.defectiveness < DEFECTIVE_RCOND
    }
}

/// Complex Schur form `(Q, T)`. Upper-triangular input (the zero matrix
/// included) is returned as is, since the iteration can stall on it.
fn schur(a: &CMatrix) -> KernelResult<(CMatrix, CMatrix)> {
    let n = a.nrows();
    let triangular = (0..n).all(|j| (j + 1..n).all(|i| a[(i, j)] == c(0.0, 0.0)));
    if triangular {
        return Ok((identity(n), a.clone()));
    }
    let schur = nalgebra::linalg::Schur::try_new(a.clone(), f64::EPSILON, 100 * n.max(10))
        .ok_or(KernelError::NoConvergence)?;
    Ok(schur.unpack())
}

pub fn eigenvalues(a: &CMatrix) -> KernelResult<Vec<Complex64>> {
    let n = check_square(a)?;
    check_finite(a)?;
    if n == 0 {
        return Ok(Vec::new());
    }
    let (_, t) = schur(a)?;
    Ok((0..n).map(|i| t[(i, i)]).collect())
}

/// Full eigendecomposition via complex Schur form and triangular
/// back-substitution.
pub fn eig(a: &CMatrix) -> KernelResult<EigDecomposition> {
    let n = check_square(a)?;
    check_finite(a)?;
    if n == 0 {
        return Ok(EigDecomposition {
            eigenvalues: Vec::new(),
            right_vectors: a.clone(),
            defectiveness: 1.0,
        });
    }
    let (q, t) = schur(a)?;
    let scale = max_abs(&t).max(f64::MIN_POSITIVE);
    let tiny = f64::EPSILON * scale;
    let coalesce = COALESCE_TOL * scale.max(1.0);
    let values: Vec<Complex64> = (0..n).map(|i| t[(i, i)]).collect();

    let mut x = CMatrix::zeros(n, n);
    for k in 0..n {
        let lambda = values[k];
        x[(k, k)] = c(1.0, 0.0);
        for i in (0..k).rev() {
            let mut s = c(0.0, 0.0);
            for j in i + 1..=k {
                s += t[(i, j)] * x[(j, k)];
            }
            let mut d = t[(i, i)] - lambda;
            if d.norm() < coalesce {
                d = c(tiny, 0.0);
            }
            x[(i, k)] = -s / d;
        }
        let col_norm = x.column(k).norm();
        if col_norm.is_finite() && col_norm > 0.0 {
            let inv = c(1.0 / col_norm, 0.0);
            x.column_mut(k).scale_mut(inv.re);
        } else {
            return Err(KernelError::Singular);
        }
    }
    let vectors = q * x;
    let sv = vectors.clone().svd(false, false).singular_values;
    let smax = sv.iter().cloned().fold(0.0, f64::max);
    let smin = sv.iter().cloned().fold(f64::INFINITY, f64::min);
    let defectiveness = if smax > 0.0 { (smin / smax).clamp(0.0, 1.0) } else { 0.0 };
    Ok(EigDecomposition {
        eigenvalues: values,
        right_vectors: vectors,
        defectiveness,
    })
}

/// Solves `L W + W L† + 2 C = 0` for a stable `L`.
pub fn solve_lyapunov(l: &CMatrix, c_mat: &CMatrix) -> KernelResult<CMatrix> {
    let n = check_square(l)?;
    if c_mat.shape() != (n, n) {
        return Err(KernelError::DimensionMismatch(format!(
            "L is {n}x{n} but the source term is {}x{}",
            c_mat.nrows(),
            c_mat.ncols()
        )));
    }
    check_finite(c_mat)?;
    let max_re = eigenvalues(l)?
        .iter()
        .map(|z| z.re)
        .fold(f64::NEG_INFINITY, f64::max);
    if max_re >= 0.0 {
        return Err(KernelError::NotStable(max_re));
    }
    let eye = identity(n);
    let conj_l = l.map(|z| z.conj());
    let k = l.kronecker(&eye) + eye.kronecker(&conj_l);
    let rhs = vec_rows(c_mat) * c(-2.0, 0.0);
    let w = k.lu().solve(&rhs).ok_or(KernelError::Singular)?;
    let w = unvec_rows(&w, n, n);
    if is_hermitian(c_mat, 0.0) {
        Ok((&w + w.adjoint()) * c(0.5, 0.0))
    } else {
        Ok(w)
    }
}

/// Solves `A X + X B = C`. Fails when `A` and `-B` share an eigenvalue.
pub fn solve_sylvester(a: &CMatrix, b: &CMatrix, c_mat: &CMatrix) -> KernelResult<CMatrix> {
    let n = check_square(a)?;
    let m = check_square(b)?;
    if c_mat.shape() != (n, m) {
        return Err(KernelError::DimensionMismatch(format!(
            "expected a {n}x{m} right-hand side, got {}x{}",
            c_mat.nrows(),
            c_mat.ncols()
        )));
    }
    check_finite(a)?;
    check_finite(b)?;
    check_finite(c_mat)?;
    let k = a.kronecker(&identity(m)) + identity(n).kronecker(&b.transpose());
    let x = k.lu().solve(&vec_rows(c_mat)).ok_or(KernelError::Singular)?;
    if x.iter().any(|z| !(z.re.is_finite() && z.im.is_finite())) {
        return Err(KernelError::Singular);
    }
    Ok(unvec_rows(&x, n, m))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_matrix(rng: &mut impl Rng, n: usize, scale: f64) -> CMatrix {
        CMatrix::from_fn(n, n, |_, _| {
            c(rng.gen_range(-1.0..1.0) * scale, rng.gen_range(-1.0..1.0) * scale)
        })
    }

    fn taylor_expm(a: &CMatrix, terms: usize) -> CMatrix {
        let n = a.nrows();
        let mut sum = identity(n);
        let mut term = identity(n);
        for k in 1..terms {
            term = &term * a * c(1.0 / k as f64, 0.0);
            sum += &term;
        }
        sum
    }

    #[test]
    fn sylvester_residual() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let a = random_matrix(&mut rng, 3, 1.0) - identity(3) * c(3.0, 0.0);
        let b = random_matrix(&mut rng, 3, 1.0) - identity(3) * c(3.0, 0.0);
        let rhs = random_matrix(&mut rng, 3, 1.0);
        let x = solve_sylvester(&a, &b, &rhs).unwrap();
        assert!(max_abs(&(&a * &x + &x * &b - &rhs)) < 1e-12);
    }

    #[test]
    fn expm_of_zero_is_identity() {
        let z = CMatrix::zeros(4, 4);
        assert_abs_diff_eq!(max_abs(&(expm(&z).unwrap() - identity(4))), 0.0);
    }

    #[test]
    fn expm_of_diagonal() {
        let a = CMatrix::from_diagonal(&CVector::from_vec(vec![c(1.0, 0.0), c(2.0, 0.0)]));
        let e = expm(&a).unwrap();
        assert!((e[(0, 0)].re - 1f64.exp()).abs() < 1e-13);
        assert!((e[(1, 1)].re - 2f64.exp()).abs() < 1e-12);
        assert!(e[(0, 1)].norm() < 1e-15);
    }

    #[test]
    fn expm_of_jordan_block() {
        let a = from_rows(&[vec![c(0.0, 0.0), c(1.0, 0.0)], vec![c(0.0, 0.0), c(0.0, 0.0)]]).unwrap();
        let e = expm(&a).unwrap();
        let want = from_rows(&[vec![c(1.0, 0.0), c(1.0, 0.0)], vec![c(0.0, 0.0), c(1.0, 0.0)]]).unwrap();
        assert!(max_abs(&(e - want)) < 1e-15);
    }

    #[test]
    fn expm_matches_taylor_for_every_pade_order() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for &scale in &[1e-3, 0.05, 0.2, 0.4, 1.0] {
            let a = random_matrix(&mut rng, 5, scale);
            let err = max_abs(&(expm(&a).unwrap() - taylor_expm(&a, 60)));
            assert!(err < 1e-13, "scale {scale}: {err}");
        }
    }

    #[test]
    fn expm_of_hermitian_matches_spectral_route() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let h = random_matrix(&mut rng, 6, 3.0);
        let h = (&h + h.adjoint()) * c(0.5, 0.0);
        let via_eig = hermitian_function(&h, f64::exp).unwrap();
        let e = expm(&h).unwrap();
        assert!(max_abs(&(e - &via_eig)) / max_abs(&via_eig) < 1e-12);
    }

    #[test]
    fn expm_rejects_nan() {
        let mut a = CMatrix::zeros(2, 2);
        a[(1, 0)] = c(f64::NAN, 0.0);
        assert_eq!(expm(&a), Err(KernelError::NonFinite { row: 1, col: 0 }));
    }

    #[test]
    fn expm_apply_matches_full_exponential() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut a = CMatrix::zeros(6, 6);
        for &(i, j) in &[(0, 2), (2, 0), (2, 4), (1, 3), (3, 5), (5, 5), (4, 4)] {
            a[(i, j)] = c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
        }
        assert_eq!(decoupled_blocks(&a), vec![vec![0, 2, 4], vec![1, 3, 5]]);
        let mut x = CVector::zeros(6);
        x[2] = c(1.0, 0.5);
        let got = expm_apply(&a, &x).unwrap();
        let want = expm(&a).unwrap() * &x;
        assert!((got - want).norm() < 1e-14);
    }

    #[test]
    fn eig_of_diagonal() {
        let a = CMatrix::from_diagonal(&CVector::from_vec(vec![c(1.0, 0.0), c(2.0, 0.0), c(3.0, 0.0)]));
        let e = eig(&a).unwrap();
        let mut re: Vec<f64> = e.eigenvalues.iter().map(|z| z.re).collect();
        re.sort_by(f64::total_cmp);
        assert_eq!(re, vec![1.0, 2.0, 3.0]);
        assert!((e.defectiveness - 1.0).abs() < 1e-12);
        assert!(!e.is_defective());
    }

    #[test]
    fn eig_flags_jordan_block() {
        let a = from_rows(&[vec![c(0.0, 0.0), c(1.0, 0.0)], vec![c(0.0, 0.0), c(0.0, 0.0)]]).unwrap();
        let e = eig(&a).unwrap();
        assert!(e.eigenvalues.iter().all(|z| z.norm() < 1e-15));
        assert!(e.is_defective());
    }

    #[test]
    fn eig_degenerate_but_diagonalizable() {
        let e = eig(&identity(3)).unwrap();
        assert!((e.defectiveness - 1.0).abs() < 1e-12);
    }

    #[test]
    fn lyapunov_scalar() {
        let l = from_rows(&[vec![c(-0.5, -2.0)]]).unwrap();
        let g = from_rows(&[vec![c(0.5, 0.0)]]).unwrap();
        let w = solve_lyapunov(&l, &g).unwrap();
        assert!((w[(0, 0)] - c(1.0, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn lyapunov_rejects_unstable() {
        let l = identity(2);
        assert!(matches!(solve_lyapunov(&l, &identity(2)), Err(KernelError::NotStable(_))));
    }

    #[test]
    fn lyapunov_residual_random() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..10 {
            let mut l = random_matrix(&mut rng, 4, 1.0);
            l -= identity(4) * c(3.0, 0.0);
            let x = random_matrix(&mut rng, 4, 1.0);
            let src = &x * x.adjoint();
            let w = solve_lyapunov(&l, &src).unwrap();
            let res = &l * &w + &w * l.adjoint() + &src * c(2.0, 0.0);
            assert!(max_abs(&res) < 1e-12);
            assert!(is_hermitian(&w, 0.0));
        }
    }

    #[test]
    fn hs_geometry() {
        let a = from_rows(&[vec![c(1.0, 1.0), c(0.0, 0.0)], vec![c(0.0, 2.0), c(3.0, 0.0)]]).unwrap();
        assert_abs_diff_eq!(hs_norm(&a), (2.0f64 + 4.0 + 9.0).sqrt(), epsilon = 1e-15);
        assert_abs_diff_eq!(hs_inner(&a, &a).re, 15.0, epsilon = 1e-14);
        assert_eq!(unvec_rows(&vec_rows(&a), 2, 2), a);
        assert_eq!(vec_rows(&a)[1], a[(0, 1)]);
    }

    fn arb_matrix(n: usize, scale: f64) -> impl Strategy<Value = CMatrix> {
        proptest::collection::vec((-scale..scale, -scale..scale), n * n)
            .prop_map(move |v| CMatrix::from_fn(n, n, |i, j| c(v[i * n + j].0, v[i * n + j].1)))
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn expm_inverse_pair(a in arb_matrix(4, 2.0)) {
            let p = expm(&a).unwrap() * expm(&(-&a)).unwrap();
            prop_assert!(max_abs(&(p - identity(4))) < 1e-10);
        }

        #[test]
        fn eig_reconstructs(a in arb_matrix(5, 1.0)) {
            let e = eig(&a).unwrap();
            prop_assume!(e.defectiveness > 1e-6);
            let d = CMatrix::from_diagonal(&CVector::from_vec(e.eigenvalues.clone()));
            let res = &a * &e.right_vectors - &e.right_vectors * d;
            prop_assert!(max_abs(&res) < 1e-9 / e.defectiveness);
        }

        #[test]
        fn hs_cauchy_schwarz(a in arb_matrix(3, 1.0), b in arb_matrix(3, 1.0)) {
            prop_assert!(hs_inner(&a, &b).norm() <= hs_norm(&a) * hs_norm(&b) * (1.0 + 1e-12));
        }
    }
}
