//! Truncated multimode Fock representation.
//!
//! Operators on the truncated space are dense matrices; superoperators act on
//! row-stacked vectorizations, so `rho -> A rho B` is `kron(A, B^T)`. Products
//! such as `a_m a_n^dagger` that would otherwise pick up boundary errors are
//! assembled through the commutation relation, which makes every quadratic
//! superoperator here the exact compression of its infinite-space counterpart.

use std::collections::HashMap;
use std::ops::{Add, Mul, Sub};

use num_complex::Complex64;
use thiserror::Error;

use crate::matkernel::{self, c, CMatrix, CVector, KernelError};
use crate::model::{SystemSpec, ThermalRates};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FockError {
    #[error("mode {mode} is out of range for {n_modes} modes")]
    ModeOutOfRange { mode: usize, n_modes: usize },
    #[error("coefficient matrix is {rows}x{cols}, expected {n}x{n}")]
    CoefficientShape { rows: usize, cols: usize, n: usize },
    #[error("spec has {spec} modes but the Fock space has {space}")]
    ModeMismatch { spec: usize, space: usize },
    #[error("invalid truncation: {0}")]
    InvalidTruncation(String),
    #[error("operator is {rows}x{cols}, expected {dim}x{dim}")]
    OperatorShape { rows: usize, cols: usize, dim: usize },
    #[error("the two Liouvillian constructions differ by {0:e}")]
    ConstructionMismatch(f64),
    #[error("invalid initial state: {0}")]
    InvalidState(String),
    #[error("initial state carries weight {0:e} on the cutoff boundary")]
    BoundarySupport(f64),
    #[error("cutoff {cutoff} leaves no truncation-safe operators")]
    InsufficientMargin { cutoff: usize },
    #[error("superoperator is not nilpotent on the truncated space")]
    NotNilpotent,
    #[error("evolution time must be nonnegative, got {0}")]
    NegativeTime(f64),
    #[error(transparent)]
    Kernel(#[from] KernelError),
}

pub type FockResult<T> = Result<T, FockError>;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Truncation {
    /// Levels `0..cutoff` in every mode.
    PerMode,
    /// All states with at most `max_total` photons in total.
    TotalPhotons(usize),
}

/// Basis of a truncated multimode Fock space.
#[derive(Debug, Clone)]
pub struct FockSpace {
    n_modes: usize,
    cutoff: usize,
    truncation: Truncation,
    states: Vec<Vec<usize>>,
    lookup: HashMap<Vec<usize>, usize>,
}

impl FockSpace {
    /// Box truncation with `cutoff` levels per mode. Flat indices are mixed
    /// radix with mode 0 most significant.
    pub fn new(n_modes: usize, cutoff: usize) -> FockResult<Self> {
        if n_modes == 0 || cutoff == 0 {
            return Err(FockError::InvalidTruncation(format!(
                "need at least one mode and one level, got {n_modes} modes with cutoff {cutoff}"
            )));
        }
        let dim = cutoff
            .checked_pow(n_modes as u32)
            .filter(|&d| d <= 1 << 16)
            .ok_or_else(|| FockError::InvalidTruncation(format!("{cutoff}^{n_modes} states is too large")))?;
        let states: Vec<Vec<usize>> = (0..dim)
            .map(|mut k| {
                let mut m = vec![0; n_modes];
                for slot in m.iter_mut().rev() {
                    *slot = k % cutoff;
                    k /= cutoff;
                }
                m
            })
            .collect();
        Ok(Self::from_states(n_modes, cutoff, Truncation::PerMode, states))
    }

    /// Truncation by total photon number, ordered by total and then by
    /// descending occupation of the leading modes.
    pub fn photon_capped(n_modes: usize, max_total: usize) -> FockResult<Self> {
        if n_modes == 0 {
            return Err(FockError::InvalidTruncation("need at least one mode".into()));
        }
        let mut states = Vec::new();
        for total in 0..=max_total {
            compositions(total, n_modes, &mut Vec::new(), &mut states);
        }
        Ok(Self::from_states(
            n_modes,
            max_total + 1,
            Truncation::TotalPhotons(max_total),
            states,
        ))
    }

    fn from_states(n_modes: usize, cutoff: usize, truncation: Truncation, states: Vec<Vec<usize>>) -> Self {
        let lookup = states.iter().cloned().enumerate().map(|(i, m)| (m, i)).collect();
        Self {
            n_modes,
            cutoff,
            truncation,
            states,
            lookup,
        }
    }

    pub fn n_modes(&self) -> usize {
        self.n_modes
    }

    pub fn cutoff(&self) -> usize {
        self.cutoff
    }

    pub fn truncation(&self) -> Truncation {
        self.truncation
    }

    pub fn dim(&self) -> usize {
        self.states.len()
    }

    pub fn index_of(&self, occupation: &[usize]) -> Option<usize> {
        self.lookup.get(occupation).copied()
    }

    pub fn occupation(&self, index: usize) -> &[usize] {
        &self.states[index]
    }

    pub fn total_photons(&self, index: usize) -> usize {
        self.states[index].iter().sum()
    }

    /// Largest total photon number whose whole sector lies inside the space.
    pub fn complete_sectors(&self) -> usize {
        match self.truncation {
            Truncation::PerMode => self.cutoff - 1,
            Truncation::TotalPhotons(max) => max,
        }
    }

    /// Basis indices with at most `max_total` photons.
    pub fn states_up_to(&self, max_total: usize) -> Vec<usize> {
        (0..self.dim()).filter(|&i| self.total_photons(i) <= max_total).collect()
    }

    /// Liouville-space indices `i * dim + j` whose ket and bra both carry at
    /// most `max_total` photons.
    pub fn liouville_up_to(&self, max_total: usize) -> Vec<usize> {
        let s = self.states_up_to(max_total);
        let d = self.dim();
        s.iter().flat_map(|&i| s.iter().map(move |&j| i * d + j)).collect()
    }

    /// Zeroes every matrix element whose ket or bra exceeds `max_total` photons.
    pub fn project_up_to(&self, op: &CMatrix, max_total: usize) -> CMatrix {
        CMatrix::from_fn(op.nrows(), op.ncols(), |i, j| {
            if self.total_photons(i) <= max_total && self.total_photons(j) <= max_total {
                op[(i, j)]
            } else {
                c(0.0, 0.0)
            }
        })
    }

    pub fn ket(&self, occupation: &[usize]) -> FockResult<CVector> {
        let i = self.checked_index(occupation)?;
        let mut v = CVector::zeros(self.dim());
        v[i] = c(1.0, 0.0);
        Ok(v)
    }

    /// `|m><n|`.
    pub fn projector(&self, ket: &[usize], bra: &[usize]) -> FockResult<CMatrix> {
        let (i, j) = (self.checked_index(ket)?, self.checked_index(bra)?);
        let mut p = CMatrix::zeros(self.dim(), self.dim());
        p[(i, j)] = c(1.0, 0.0);
        Ok(p)
    }

    fn checked_index(&self, occupation: &[usize]) -> FockResult<usize> {
        self.index_of(occupation).ok_or_else(|| {
            FockError::InvalidState(format!("occupation {occupation:?} is outside the truncated space"))
        })
    }

    fn check_operator(&self, op: &CMatrix) -> FockResult<()> {
        let d = self.dim();
        if op.shape() != (d, d) {
            return Err(FockError::OperatorShape {
                rows: op.nrows(),
                cols: op.ncols(),
                dim: d,
            });
        }
        Ok(())
    }

    fn check_coefficients(&self, a: &CMatrix) -> FockResult<()> {
        let n = self.n_modes;
        if a.shape() != (n, n) {
            return Err(FockError::CoefficientShape {
                rows: a.nrows(),
                cols: a.ncols(),
                n,
            });
        }
        Ok(())
    }

    /// Weight of `op` on states that touch the truncation edge.
    pub fn boundary_weight(&self, op: &CMatrix) -> f64 {
        let edge: Vec<bool> = (0..self.dim())
            .map(|i| match self.truncation {
                Truncation::PerMode => self.states[i].iter().any(|&m| m + 1 == self.cutoff),
                Truncation::TotalPhotons(max) => self.total_photons(i) == max,
            })
            .collect();
        let mut w = 0.0;
        for j in 0..op.ncols() {
            for i in 0..op.nrows() {
                if edge[i] || edge[j] {
                    w += op[(i, j)].norm();
                }
            }
        }
        w
    }
}

fn compositions(total: usize, slots: usize, prefix: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
    if slots == 1 {
        let mut m = prefix.clone();
        m.push(total);
        out.push(m);
        return;
    }
    for first in (0..=total).rev() {
        prefix.push(first);
        compositions(total - first, slots - 1, prefix, out);
        prefix.pop();
    }
}

/// Annihilation and creation matrices of one mode.
pub fn ladder(fs: &FockSpace, mode: usize) -> FockResult<(CMatrix, CMatrix)> {
    if mode >= fs.n_modes {
        return Err(FockError::ModeOutOfRange {
            mode,
            n_modes: fs.n_modes,
        });
    }
    let d = fs.dim();
    let mut a = CMatrix::zeros(d, d);
    for j in 0..d {
        let m = &fs.states[j];
        if m[mode] == 0 {
            continue;
        }
        let mut lowered = m.clone();
        lowered[mode] -= 1;
        if let Some(i) = fs.index_of(&lowered) {
            a[(i, j)] = c((m[mode] as f64).sqrt(), 0.0);
        }
    }
    let ad = a.adjoint();
    Ok((a, ad))
}

fn all_ladders(fs: &FockSpace) -> Vec<(CMatrix, CMatrix)> {
    (0..fs.n_modes).map(|k| ladder(fs, k).expect("mode in range")).collect()
}

pub fn number_operator(fs: &FockSpace, mode: usize) -> FockResult<CMatrix> {
    let (a, ad) = ladder(fs, mode)?;
    Ok(ad * a)
}

/// `sum_nm A_nm a_n^dagger a_m`.
pub fn jordan_operator(fs: &FockSpace, a: &CMatrix) -> FockResult<CMatrix> {
    fs.check_coefficients(a)?;
    let lad = all_ladders(fs);
    let d = fs.dim();
    let mut out = CMatrix::zeros(d, d);
    for n in 0..fs.n_modes {
        for m in 0..fs.n_modes {
            let coef = a[(n, m)];
            if coef != c(0.0, 0.0) {
                out += (&lad[n].1 * &lad[m].0) * coef;
            }
        }
    }
    Ok(out)
}

/// `sum_nm A_nm a_m a_n^dagger`, assembled as `J_A + Tr(A)`.
fn antinormal_jordan(fs: &FockSpace, a: &CMatrix) -> FockResult<CMatrix> {
    Ok(jordan_operator(fs, a)? + matkernel::identity(fs.dim()) * a.trace())
}

/// Permanent by Ryser's formula with Gray-code updates.
pub fn permanent(a: &CMatrix) -> Complex64 {
    let n = a.nrows();
    if n == 0 {
        return c(1.0, 0.0);
    }
    let mut row_sums = vec![c(0.0, 0.0); n];
    let mut total = c(0.0, 0.0);
    let mut gray_prev: u64 = 0;
    for k in 1u64..(1u64 << n) {
        let gray = k ^ (k >> 1);
        let changed = (gray ^ gray_prev).trailing_zeros() as usize;
        let sign = if gray & (1 << changed) != 0 { 1.0 } else { -1.0 };
        for (i, s) in row_sums.iter_mut().enumerate() {
            *s += a[(i, changed)] * sign;
        }
        gray_prev = gray;
        let prod: Complex64 = row_sums.iter().product();
        let parity = if gray.count_ones() % 2 == 1 { -1.0 } else { 1.0 };
        total += prod * parity;
    }
    if n % 2 == 1 {
        -total
    } else {
        total
    }
}

/// Matrix of the second-quantized map `Gamma(M)`, which sends
/// `a_i^dagger` to `sum_j M_ji a_j^dagger` and fixes the vacuum. For
/// `M = e^V` this is `e^{J_V}`. Every entry is exact, including entries in
/// partially truncated sectors.
pub fn second_quantize(fs: &FockSpace, m: &CMatrix) -> FockResult<CMatrix> {
    fs.check_coefficients(m)?;
    let d = fs.dim();
    let lad = all_ladders(fs);
    // Image of a_s^dagger: sum_r M_rs a_r^dagger.
    let raised: Vec<CMatrix> = (0..fs.n_modes)
        .map(|s| {
            (0..fs.n_modes).fold(CMatrix::zeros(d, d), |acc, r| acc + &lad[r].1 * m[(r, s)])
        })
        .collect();
    // Columns are built from the state with one photon fewer in the last
    // occupied mode. Creation never lowers an occupation, so components
    // dropped by the truncation cannot feed back into the box.
    let mut order: Vec<usize> = (0..d).collect();
    order.sort_by_key(|&i| fs.total_photons(i));
    let mut out = CMatrix::zeros(d, d);
    for j in order {
        let occ = &fs.states[j];
        match occ.iter().rposition(|&k| k > 0) {
            None => out[(j, j)] = c(1.0, 0.0),
            Some(s) => {
                let mut parent = occ.clone();
                parent[s] -= 1;
                let pj = fs.lookup[&parent];
                let col = &raised[s] * out.column(pj) * c(1.0 / (occ[s] as f64).sqrt(), 0.0);
                out.set_column(j, &col);
            }
        }
    }
    Ok(out)
}

/// The four elementary quadratic superoperators associated with a matrix.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SuperOpKind {
    /// `rho -> 1/2 sum A_nm (a_n^dagger a_m rho + rho a_m a_n^dagger)`
    K0,
    /// `rho -> sum A_nm a_n^dagger rho a_m`
    KPlus,
    /// `rho -> sum A_nm a_m rho a_n^dagger`
    KMinus,
    /// `rho -> J_A rho - rho J_A`
    NMinus,
}

impl std::str::FromStr for SuperOpKind {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "K0" => Ok(Self::K0),
            "K+" | "KPlus" => Ok(Self::KPlus),
            "K-" | "KMinus" => Ok(Self::KMinus),
            "N-" | "NMinus" => Ok(Self::NMinus),
            other => Err(format!("unknown superoperator kind `{other}`")),
        }
    }
}

/// Sparse superoperator on row-stacked operators, stored as row-major
/// triplets without duplicates or explicit zeros.
#[derive(Debug, Clone, PartialEq)]
pub struct SuperOpMatrix {
    hilbert_dim: usize,
    nonzeros: Vec<(usize, usize, Complex64)>,
}

impl SuperOpMatrix {
    /// Sums duplicate positions and drops zeros.
    pub fn from_triplets(hilbert_dim: usize, mut triplets: Vec<(usize, usize, Complex64)>) -> Self {
        let n = hilbert_dim * hilbert_dim;
        assert!(triplets.iter().all(|&(i, j, _)| i < n && j < n), "triplet outside dim^2 x dim^2");
        triplets.sort_unstable_by_key(|&(i, j, _)| (i, j));
        let mut nonzeros: Vec<(usize, usize, Complex64)> = Vec::with_capacity(triplets.len());
        for (i, j, z) in triplets {
            match nonzeros.last_mut() {
                Some(last) if last.0 == i && last.1 == j => last.2 += z,
                _ => nonzeros.push((i, j, z)),
            }
        }
        nonzeros.retain(|&(_, _, z)| z != c(0.0, 0.0));
        Self { hilbert_dim, nonzeros }
    }

    pub fn from_dense(hilbert_dim: usize, entries: &CMatrix) -> Self {
        let n = hilbert_dim * hilbert_dim;
        assert_eq!(entries.shape(), (n, n), "superoperator shape must be dim^2 x dim^2");
        let triplets = (0..n)
            .flat_map(|i| (0..n).map(move |j| (i, j)))
            .map(|(i, j)| (i, j, entries[(i, j)]))
            .collect();
        Self::from_triplets(hilbert_dim, triplets)
    }

    pub fn zeros(hilbert_dim: usize) -> Self {
        Self {
            hilbert_dim,
            nonzeros: Vec::new(),
        }
    }

    pub fn identity(hilbert_dim: usize) -> Self {
        let n = hilbert_dim * hilbert_dim;
        Self {
            hilbert_dim,
            nonzeros: (0..n).map(|i| (i, i, c(1.0, 0.0))).collect(),
        }
    }

    /// `rho -> A rho B`.
    pub fn sandwich(left: &CMatrix, right: &CMatrix) -> Self {
        let d = left.nrows();
        let nz = |m: &CMatrix| -> Vec<(usize, usize, Complex64)> {
            (0..d)
                .flat_map(|i| (0..d).map(move |j| (i, j)))
                .map(|(i, j)| (i, j, m[(i, j)]))
                .filter(|t| t.2 != c(0.0, 0.0))
                .collect()
        };
        let (l, r) = (nz(left), nz(right));
        // (A rho B)_{ik} = sum_{jl} A_ij rho_jl B_lk
        let triplets = l
            .iter()
            .flat_map(|&(i, j, a)| r.iter().map(move |&(ll, k, b)| (i * d + k, j * d + ll, a * b)))
            .collect();
        Self::from_triplets(d, triplets)
    }

    pub fn hilbert_dim(&self) -> usize {
        self.hilbert_dim
    }

    pub fn liouville_dim(&self) -> usize {
        self.hilbert_dim * self.hilbert_dim
    }

    pub fn nonzeros(&self) -> &[(usize, usize, Complex64)] {
        &self.nonzeros
    }

    pub fn nnz(&self) -> usize {
        self.nonzeros.len()
    }

    pub fn to_dense(&self) -> CMatrix {
        let n = self.liouville_dim();
        let mut out = CMatrix::zeros(n, n);
        for &(i, j, z) in &self.nonzeros {
            out[(i, j)] = z;
        }
        out
    }

    pub fn max_abs(&self) -> f64 {
        self.nonzeros.iter().map(|t| t.2.norm()).fold(0.0, f64::max)
    }

    /// `S * X` for a block of vectorized operators stored as columns.
    pub fn mul_columns(&self, x: &CMatrix) -> CMatrix {
        assert_eq!(x.nrows(), self.liouville_dim());
        let mut out = CMatrix::zeros(x.nrows(), x.ncols());
        for k in 0..x.ncols() {
            let src = x.column(k);
            let mut dst = out.column_mut(k);
            for &(i, j, z) in &self.nonzeros {
                dst[i] += z * src[j];
            }
        }
        out
    }

    pub fn apply(&self, rho: &CMatrix) -> CMatrix {
        let v = CMatrix::from_column_slice(self.liouville_dim(), 1, matkernel::vec_rows(rho).as_slice());
        let out = self.mul_columns(&v);
        matkernel::unvec_rows(&out.column(0).into_owned(), self.hilbert_dim, self.hilbert_dim)
    }

    /// `self ∘ other`.
    pub fn compose(&self, other: &SuperOpMatrix) -> SuperOpMatrix {
        assert_eq!(self.hilbert_dim, other.hilbert_dim);
        let n = self.liouville_dim();
        let mut row_start = vec![0usize; n + 1];
        for &(j, _, _) in &other.nonzeros {
            row_start[j + 1] += 1;
        }
        for j in 0..n {
            row_start[j + 1] += row_start[j];
        }
        let mut triplets = Vec::new();
        for &(i, j, z) in &self.nonzeros {
            for &(_, k, w) in &other.nonzeros[row_start[j]..row_start[j + 1]] {
                triplets.push((i, k, z * w));
            }
        }
        SuperOpMatrix::from_triplets(self.hilbert_dim, triplets)
    }

    pub fn commutator(&self, other: &SuperOpMatrix) -> SuperOpMatrix {
        &self.compose(other) - &other.compose(self)
    }

    /// `exp(alpha S)` for a superoperator that is nilpotent on the truncated
    /// space; the series is summed until it terminates.
    pub fn exp_nilpotent(&self, alpha: Complex64) -> FockResult<SuperOpMatrix> {
        let n = self.liouville_dim();
        let mut sum = SuperOpMatrix::identity(self.hilbert_dim);
        let mut term = SuperOpMatrix::identity(self.hilbert_dim);
        for k in 1..=n + 1 {
            term = &self.compose(&term) * (alpha / k as f64);
            if term.nnz() == 0 {
                return Ok(sum);
            }
            sum = &sum + &term;
        }
        Err(FockError::NotNilpotent)
    }

    /// `exp(alpha S) * X` for nilpotent `S`, without forming the exponential.
    pub fn exp_nilpotent_columns(&self, alpha: Complex64, x: &CMatrix) -> FockResult<CMatrix> {
        let mut sum = x.clone();
        let mut term = x.clone();
        for k in 1..=self.liouville_dim() + 1 {
            term = self.mul_columns(&term) * (alpha / k as f64);
            if term.iter().all(|z| *z == c(0.0, 0.0)) {
                return Ok(sum);
            }
            sum += &term;
        }
        Err(FockError::NotNilpotent)
    }

    /// Dense sub-block with the given output rows and input columns.
    pub fn restrict(&self, rows: &[usize], cols: &[usize]) -> CMatrix {
        let n = self.liouville_dim();
        let mut row_pos = vec![usize::MAX; n];
        let mut col_pos = vec![usize::MAX; n];
        for (k, &r) in rows.iter().enumerate() {
            row_pos[r] = k;
        }
        for (k, &cc) in cols.iter().enumerate() {
            col_pos[cc] = k;
        }
        let mut out = CMatrix::zeros(rows.len(), cols.len());
        for &(i, j, z) in &self.nonzeros {
            if row_pos[i] != usize::MAX && col_pos[j] != usize::MAX {
                out[(row_pos[i], col_pos[j])] = z;
            }
        }
        out
    }

    /// Columns of the identity selecting Liouville basis vectors.
    pub fn selector(&self, cols: &[usize]) -> CMatrix {
        let mut e = CMatrix::zeros(self.liouville_dim(), cols.len());
        for (k, &j) in cols.iter().enumerate() {
            e[(j, k)] = c(1.0, 0.0);
        }
        e
    }

    /// Index blocks that the superoperator never couples.
    pub fn decoupled_blocks(&self) -> Vec<Vec<usize>> {
        matkernel::blocks_from_pattern(self.liouville_dim(), self.nonzeros.iter().map(|&(i, j, _)| (i, j)))
    }

    /// Full spectrum, assembled from the spectra of the decoupled blocks.
    pub fn eigenvalues(&self) -> FockResult<Vec<Complex64>> {
        let mut out = Vec::with_capacity(self.liouville_dim());
        for block in self.decoupled_blocks() {
            out.extend(matkernel::eigenvalues(&self.restrict(&block, &block))?);
        }
        Ok(out)
    }

    fn combine(&self, rhs: &SuperOpMatrix, sign: f64) -> SuperOpMatrix {
        assert_eq!(self.hilbert_dim, rhs.hilbert_dim);
        let triplets = self
            .nonzeros
            .iter()
            .cloned()
            .chain(rhs.nonzeros.iter().map(|&(i, j, z)| (i, j, z * sign)))
            .collect();
        SuperOpMatrix::from_triplets(self.hilbert_dim, triplets)
    }
}

impl Add for &SuperOpMatrix {
    type Output = SuperOpMatrix;
    fn add(self, rhs: &SuperOpMatrix) -> SuperOpMatrix {
        self.combine(rhs, 1.0)
    }
}

impl Sub for &SuperOpMatrix {
    type Output = SuperOpMatrix;
    fn sub(self, rhs: &SuperOpMatrix) -> SuperOpMatrix {
        self.combine(rhs, -1.0)
    }
}

impl Mul<Complex64> for &SuperOpMatrix {
    type Output = SuperOpMatrix;
    fn mul(self, rhs: Complex64) -> SuperOpMatrix {
        let triplets = self.nonzeros.iter().map(|&(i, j, z)| (i, j, z * rhs)).collect();
        SuperOpMatrix::from_triplets(self.hilbert_dim, triplets)
    }
}

impl Mul<f64> for &SuperOpMatrix {
    type Output = SuperOpMatrix;
    fn mul(self, rhs: f64) -> SuperOpMatrix {
        self * c(rhs, 0.0)
    }
}

/// Superoperator associated with an `n_modes x n_modes` matrix.
pub fn superop_assoc(fs: &FockSpace, kind: SuperOpKind, a: &CMatrix) -> FockResult<SuperOpMatrix> {
    fs.check_coefficients(a)?;
    let d = fs.dim();
    let eye = matkernel::identity(d);
    Ok(match kind {
        SuperOpKind::K0 => {
            let left = SuperOpMatrix::sandwich(&jordan_operator(fs, a)?, &eye);
            let right = SuperOpMatrix::sandwich(&eye, &antinormal_jordan(fs, a)?);
            &(&left + &right) * 0.5
        }
        SuperOpKind::NMinus => {
            let j = jordan_operator(fs, a)?;
            &SuperOpMatrix::sandwich(&j, &eye) - &SuperOpMatrix::sandwich(&eye, &j)
        }
        SuperOpKind::KPlus | SuperOpKind::KMinus => {
            let lad = all_ladders(fs);
            let mut acc = SuperOpMatrix::zeros(d);
            for p in 0..fs.n_modes {
                for q in 0..fs.n_modes {
                    let coef = a[(p, q)];
                    if coef == c(0.0, 0.0) {
                        continue;
                    }
                    let (left, right) = if kind == SuperOpKind::KPlus {
                        (&lad[p].1, &lad[q].0)
                    } else {
                        (&lad[q].0, &lad[p].1)
                    };
                    acc = &acc + &(&SuperOpMatrix::sandwich(left, right) * coef);
                }
            }
            acc
        }
    })
}

fn check_modes(fs: &FockSpace, spec: &SystemSpec) -> FockResult<()> {
    if spec.n_modes() != fs.n_modes {
        return Err(FockError::ModeMismatch {
            spec: spec.n_modes(),
            space: fs.n_modes,
        });
    }
    Ok(())
}

fn associated_form(
    fs: &FockSpace,
    omega: &CMatrix,
    k0: &CMatrix,
    kplus: &CMatrix,
    kminus: &CMatrix,
    shift: Complex64,
) -> FockResult<SuperOpMatrix> {
    let n_part = &superop_assoc(fs, SuperOpKind::NMinus, omega)? * c(0.0, -1.0);
    let jumps = &(&superop_assoc(fs, SuperOpKind::K0, k0)? + &superop_assoc(fs, SuperOpKind::KPlus, kplus)?)
        + &superop_assoc(fs, SuperOpKind::KMinus, kminus)?;
    let shift = &SuperOpMatrix::identity(fs.dim()) * shift;
    Ok(&(&n_part + &(&jumps * 2.0)) + &shift)
}

/// Liouvillian from the associated-matrix form.
pub fn liouvillian_associated(fs: &FockSpace, spec: &SystemSpec) -> FockResult<SuperOpMatrix> {
    check_modes(fs, spec)?;
    associated_form(
        fs,
        spec.omega(),
        &spec.gamma_zero(),
        spec.gamma_plus(),
        spec.gamma_minus(),
        spec.gamma().trace(),
    )
}

/// Liouvillian from the mode-by-mode dissipator sum.
pub fn liouvillian_direct(fs: &FockSpace, spec: &SystemSpec) -> FockResult<SuperOpMatrix> {
    check_modes(fs, spec)?;
    let lad = all_ladders(fs);
    let d = fs.dim();
    let eye = matkernel::identity(d);
    let mut acc = SuperOpMatrix::zeros(d);
    let left = |x: &CMatrix| SuperOpMatrix::sandwich(x, &eye);
    let right = |x: &CMatrix| SuperOpMatrix::sandwich(&eye, x);
    let jump = |x: &CMatrix, y: &CMatrix| &SuperOpMatrix::sandwich(x, y) * 2.0;
    for p in 0..fs.n_modes {
        for q in 0..fs.n_modes {
            let (a_q, ad_p) = (&lad[q].0, &lad[p].1);
            let hop = ad_p * a_q;
            let back_hop = if p == q { &hop + &eye } else { hop.clone() };
            let w = spec.omega()[(p, q)];
            if w != c(0.0, 0.0) {
                acc = &acc + &(&(&left(&hop) - &right(&hop)) * (w * c(0.0, -1.0)));
            }
            let gm = spec.gamma_minus()[(p, q)];
            if gm != c(0.0, 0.0) {
                let dissipator = &(&left(&hop) + &right(&hop)) - &jump(a_q, ad_p);
                acc = &acc - &(&dissipator * gm);
            }
            let gp = spec.gamma_plus()[(p, q)];
            if gp != c(0.0, 0.0) {
                let dissipator = &(&left(&back_hop) + &right(&back_hop)) - &jump(ad_p, a_q);
                acc = &acc - &(&dissipator * gp);
            }
        }
    }
    Ok(acc)
}

/// Liouvillian, assembled both ways and cross-checked entrywise.
pub fn build_liouvillian(fs: &FockSpace, spec: &SystemSpec) -> FockResult<SuperOpMatrix> {
    let assoc = liouvillian_associated(fs, spec)?;
    let direct = liouvillian_direct(fs, spec)?;
    let scale = assoc.max_abs().max(1.0);
    let diff = (&assoc - &direct).max_abs();
    if diff > 1e-12 * scale {
        return Err(FockError::ConstructionMismatch(diff));
    }
    Ok(assoc)
}

/// Heisenberg-picture generator: `Omega -> -Omega` and the two jump
/// matrices exchanged.
pub fn build_adjoint(fs: &FockSpace, spec: &SystemSpec) -> FockResult<SuperOpMatrix> {
    check_modes(fs, spec)?;
    associated_form(
        fs,
        &(-spec.omega()),
        &spec.gamma_zero(),
        spec.gamma_minus(),
        spec.gamma_plus(),
        spec.gamma().trace(),
    )
}

/// Jump-free generator `rho -> -i H rho + i rho H^dagger` with
/// `H = Omega - i Gamma`.
pub fn build_diagonal_liouvillian(fs: &FockSpace, spec: &SystemSpec) -> FockResult<SuperOpMatrix> {
    check_modes(fs, spec)?;
    let zero = CMatrix::zeros(fs.n_modes, fs.n_modes);
    let gamma = spec.gamma();
    associated_form(fs, spec.omega(), &(-&gamma), &zero, &zero, gamma.trace())
}

/// Result of a brute-force propagation.
#[derive(Debug, Clone)]
pub struct OracleEvolution {
    pub rho: CMatrix,
    /// `|1 - Tr rho(t)|`, the trace lost through the cutoff.
    pub trace_leakage: f64,
}

/// Reusable `expm(L t) vec(rho0)` evaluator restricted to the decoupled
/// blocks of `L` that the initial operator touches.
#[derive(Debug, Clone)]
pub struct Oracle {
    hilbert_dim: usize,
    blocks: Vec<(Vec<usize>, CMatrix, CVector)>,
    initial_trace: Complex64,
}

impl Oracle {
    pub fn new(lsup: &SuperOpMatrix, rho0: &CMatrix) -> FockResult<Self> {
        let d = lsup.hilbert_dim();
        if rho0.shape() != (d, d) {
            return Err(FockError::OperatorShape {
                rows: rho0.nrows(),
                cols: rho0.ncols(),
                dim: d,
            });
        }
        matkernel::check_finite(rho0)?;
        let x = matkernel::vec_rows(rho0);
        let blocks = lsup
            .decoupled_blocks()
            .into_iter()
            .filter(|b| b.iter().any(|&i| x[i] != c(0.0, 0.0)))
            .map(|b| {
                let sub = lsup.restrict(&b, &b);
                let x0 = CVector::from_iterator(b.len(), b.iter().map(|&i| x[i]));
                (b, sub, x0)
            })
            .collect();
        Ok(Self {
            hilbert_dim: d,
            blocks,
            initial_trace: rho0.trace(),
        })
    }

    pub fn at(&self, t: f64) -> FockResult<OracleEvolution> {
        if t.is_nan() || t < 0.0 {
            return Err(FockError::NegativeTime(t));
        }
        let d = self.hilbert_dim;
        let mut out = CVector::zeros(d * d);
        for (idx, sub, x0) in &self.blocks {
            let y = matkernel::expm(&(sub * c(t, 0.0)))? * x0;
            for (k, &i) in idx.iter().enumerate() {
                out[i] = y[k];
            }
        }
        let rho = matkernel::unvec_rows(&out, d, d);
        let trace_leakage = (rho.trace() - self.initial_trace).norm();
        Ok(OracleEvolution { rho, trace_leakage })
    }
}

/// Propagates a density matrix with the dense superoperator exponential.
pub fn oracle_propagate(fs: &FockSpace, lsup: &SuperOpMatrix, rho0: &CMatrix, t: f64) -> FockResult<OracleEvolution> {
    fs.check_operator(rho0)?;
    if !matkernel::is_hermitian(rho0, 1e-10) {
        return Err(FockError::InvalidState("initial operator is not Hermitian".into()));
    }
    if (rho0.trace() - c(1.0, 0.0)).norm() > 1e-10 {
        return Err(FockError::InvalidState(format!("trace is {}, expected 1", rho0.trace())));
    }
    let edge = fs.boundary_weight(rho0);
    if edge > 1e-14 {
        return Err(FockError::BoundarySupport(edge));
    }
    Oracle::new(lsup, rho0)?.at(t)
}

/// The two orderings of the jump-eliminating similarity transformation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum JumpOrdering {
    /// `exp(-n_T K+_I) exp(K-_I)`
    PlusMinus,
    /// `exp(Z K-_I) exp(-e^{-z_T} K+_I)`
    MinusPlus,
}

#[derive(Debug, Clone)]
pub struct JumpTransform {
    pub ordering: JumpOrdering,
    pub forward: SuperOpMatrix,
    pub inverse: SuperOpMatrix,
}

impl JumpTransform {
    /// The member of the pair that applies the lowering factor first. Its
    /// truncated matrix is the exact compression of the untruncated map.
    pub fn normally_ordered(&self) -> &SuperOpMatrix {
        match self.ordering {
            JumpOrdering::PlusMinus => &self.forward,
            JumpOrdering::MinusPlus => &self.inverse,
        }
    }
}

/// `exp(alpha K+_I) exp(beta K-_I)`.
fn raise_after_lower(kp: &SuperOpMatrix, km: &SuperOpMatrix, alpha: f64, beta: f64) -> FockResult<SuperOpMatrix> {
    Ok(kp.exp_nilpotent(c(alpha, 0.0))?.compose(&km.exp_nilpotent(c(beta, 0.0))?))
}

/// `exp(beta K-_I) exp(alpha K+_I)`.
fn lower_after_raise(kp: &SuperOpMatrix, km: &SuperOpMatrix, beta: f64, alpha: f64) -> FockResult<SuperOpMatrix> {
    Ok(km.exp_nilpotent(c(beta, 0.0))?.compose(&kp.exp_nilpotent(c(alpha, 0.0))?))
}

/// Builds a jump-eliminating transformation and its inverse, using
/// `T_{+-}(a, b)^{-1} = T_{-+}(-b, -a)` and its mirror.
pub fn jump_transform(fs: &FockSpace, rates: &ThermalRates, ordering: JumpOrdering) -> FockResult<JumpTransform> {
    if fs.complete_sectors() < 2 {
        return Err(FockError::InsufficientMargin { cutoff: fs.cutoff });
    }
    let eye = matkernel::identity(fs.n_modes);
    let kp = superop_assoc(fs, SuperOpKind::KPlus, &eye)?;
    let km = superop_assoc(fs, SuperOpKind::KMinus, &eye)?;
    let (forward, inverse) = match ordering {
        JumpOrdering::PlusMinus => {
            let (a_plus, a_minus) = (-rates.n_thermal, 1.0);
            (
                raise_after_lower(&kp, &km, a_plus, a_minus)?,
                lower_after_raise(&kp, &km, -a_minus, -a_plus)?,
            )
        }
        JumpOrdering::MinusPlus => {
            let (b_minus, b_plus) = (rates.partition, -rates.boltzmann);
            (
                lower_after_raise(&kp, &km, b_minus, b_plus)?,
                raise_after_lower(&kp, &km, -b_plus, -b_minus)?,
            )
        }
    };
    Ok(JumpTransform {
        ordering,
        forward,
        inverse,
    })
}

/// Residuals of the jump-elimination identity on a photon-limited subspace.
#[derive(Debug, Clone, Copy)]
pub struct JumpCheck {
    /// Max residual of the intertwining form, `T L = L_d T` for the
    /// plus-minus ordering and `L T^{-1} = T^{-1} L_d` for the minus-plus one.
    pub intertwining_residual: f64,
    /// Max residual of `T L T^{-1} - L_d` evaluated literally with truncated
    /// matrices. Exact only when the inverse does not raise photon number.
    pub conjugation_residual: f64,
    pub input_photons: usize,
    pub output_photons: usize,
}

/// Checks that the transformation removes the jump terms of a thermal
/// Liouvillian, on inputs with at most `input_photons` photons per side and
/// outputs compared up to one level below the last complete sector.
pub fn verify_jump_elimination(
    fs: &FockSpace,
    spec: &SystemSpec,
    ordering: JumpOrdering,
    input_photons: usize,
) -> FockResult<JumpCheck> {
    let rates = spec
        .thermal_rates()
        .ok_or_else(|| FockError::InvalidState("jump elimination needs a thermal spec".into()))?;
    let output_photons = fs.complete_sectors().saturating_sub(1);
    if input_photons > output_photons || fs.complete_sectors() < 2 {
        return Err(FockError::InsufficientMargin { cutoff: fs.cutoff });
    }
    let tr = jump_transform(fs, &rates, ordering)?;
    let l = build_liouvillian(fs, spec)?;
    let ld = build_diagonal_liouvillian(fs, spec)?;
    let inputs = fs.liouville_up_to(input_photons);
    let outputs = fs.liouville_up_to(output_photons);
    let x = l.selector(&inputs);
    let residual_on = |m: CMatrix| -> f64 {
        outputs
            .iter()
            .flat_map(|&i| (0..m.ncols()).map(move |k| (i, k)))
            .map(|(i, k)| m[(i, k)].norm())
            .fold(0.0, f64::max)
    };
    let intertwining = match ordering {
        JumpOrdering::PlusMinus => {
            tr.forward.mul_columns(&l.mul_columns(&x)) - ld.mul_columns(&tr.forward.mul_columns(&x))
        }
        JumpOrdering::MinusPlus => {
            l.mul_columns(&tr.inverse.mul_columns(&x)) - tr.inverse.mul_columns(&ld.mul_columns(&x))
        }
    };
    let conjugated = tr.forward.mul_columns(&l.mul_columns(&tr.inverse.mul_columns(&x))) - ld.mul_columns(&x);
    Ok(JumpCheck {
        intertwining_residual: residual_on(intertwining),
        conjugation_residual: residual_on(conjugated),
        input_photons,
        output_photons,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::thermal_rates;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_matrix(rng: &mut impl Rng, n: usize) -> CMatrix {
        CMatrix::from_fn(n, n, |_, _| c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
    }

    fn random_hermitian(rng: &mut impl Rng, n: usize) -> CMatrix {
        let a = random_matrix(rng, n);
        (&a + a.adjoint()) * c(0.5, 0.0)
    }

    fn random_thermal(rng: &mut impl Rng, n: usize, n_t: f64) -> SystemSpec {
        let x = random_matrix(rng, n);
        let gamma = &x * x.adjoint() + matkernel::identity(n) * c(0.2, 0.0);
        SystemSpec::thermal(random_hermitian(rng, n), gamma, n_t).unwrap()
    }

    fn max_on(fs: &FockSpace, op: &CMatrix, photons: usize) -> f64 {
        matkernel::max_abs(&fs.project_up_to(op, photons))
    }

    #[test]
    fn single_mode_ladder() {
        let fs = FockSpace::new(1, 2).unwrap();
        let (a, ad) = ladder(&fs, 0).unwrap();
        let want = CMatrix::from_row_slice(2, 2, &[c(0.0, 0.0), c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0)]);
        assert_eq!(a, want);
        assert_eq!(ad, want.adjoint());
        assert!(matches!(ladder(&fs, 1), Err(FockError::ModeOutOfRange { .. })));
    }

    #[test]
    fn canonical_commutator_away_from_boundary() {
        let fs = FockSpace::new(2, 5).unwrap();
        for k in 0..2 {
            let (a, ad) = ladder(&fs, k).unwrap();
            let ccr = &a * &ad - &ad * &a - matkernel::identity(fs.dim());
            for i in 0..fs.dim() {
                if fs.occupation(i)[k] <= 3 {
                    assert!(ccr.row(i).iter().all(|z| z.norm() < 1e-14));
                }
            }
        }
        let (a1, ad1) = ladder(&fs, 0).unwrap();
        let (a2, ad2) = ladder(&fs, 1).unwrap();
        assert!(matkernel::max_abs(&matkernel::commutator(&a1, &a2)) < 1e-15);
        assert!(matkernel::max_abs(&matkernel::commutator(&a1, &ad2)) < 1e-15);
        assert!(matkernel::max_abs(&matkernel::commutator(&ad1, &a2)) < 1e-15);
    }

    #[test]
    fn indexing_and_number_operator() {
        let fs = FockSpace::new(3, 4).unwrap();
        for i in 0..fs.dim() {
            assert_eq!(fs.index_of(fs.occupation(i)), Some(i));
        }
        assert_eq!(fs.index_of(&[1, 2, 3]), Some(16 + 2 * 4 + 3));
        let n1 = number_operator(&fs, 1).unwrap();
        for i in 0..fs.dim() {
            assert!((n1[(i, i)].re - fs.occupation(i)[1] as f64).abs() < 1e-14);
        }
        let capped = FockSpace::photon_capped(2, 2).unwrap();
        let order: Vec<&[usize]> = (0..capped.dim()).map(|i| capped.occupation(i)).collect();
        assert_eq!(order, vec![&[0, 0][..], &[1, 0], &[0, 1], &[2, 0], &[1, 1], &[0, 2]]);
    }

    #[test]
    fn jordan_map_properties() {
        let fs = FockSpace::new(2, 5).unwrap();
        let total = number_operator(&fs, 0).unwrap() + number_operator(&fs, 1).unwrap();
        let j = jordan_operator(&fs, &matkernel::identity(2)).unwrap();
        assert!(matkernel::max_abs(&(j - total)) < 1e-14);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let (a, b) = (random_matrix(&mut rng, 2), random_matrix(&mut rng, 2));
        let ja = jordan_operator(&fs, &a).unwrap();
        let jb = jordan_operator(&fs, &b).unwrap();
        let jab = jordan_operator(&fs, &matkernel::commutator(&a, &b)).unwrap();
        let diff = matkernel::commutator(&ja, &jb) - jab;
        assert!(max_on(&fs, &diff, 4) < 1e-13);
        assert!(matches!(
            jordan_operator(&fs, &matkernel::identity(3)),
            Err(FockError::CoefficientShape { .. })
        ));
    }

    #[test]
    fn jordan_exponential_transforms_creation_operators() {
        let fs = FockSpace::new(2, 5).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let v = random_matrix(&mut rng, 2) * c(0.4, 0.0);
        let jv = jordan_operator(&fs, &v).unwrap();
        let ev = matkernel::expm(&jv).unwrap();
        let ev_inv = matkernel::expm(&(-&jv)).unwrap();
        let small = matkernel::expm(&v).unwrap();
        let lad = all_ladders(&fs);
        let keep = fs.states_up_to(2);
        for i in 0..2 {
            let lhs = &ev * &lad[i].1 * &ev_inv;
            let mut rhs = CMatrix::zeros(fs.dim(), fs.dim());
            for j in 0..2 {
                rhs += &lad[j].1 * small[(j, i)];
            }
            let diff = lhs - rhs;
            for &col in &keep {
                assert!(diff.column(col).iter().all(|z| z.norm() < 1e-12));
            }
        }
        let gamma = second_quantize(&fs, &small).unwrap();
        assert!(max_on(&fs, &(gamma - ev), 4) < 1e-12);
    }

    #[test]
    fn second_quantize_matches_permanent_formula() {
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        let m = random_matrix(&mut rng, 3);
        for fs in [FockSpace::new(3, 3).unwrap(), FockSpace::photon_capped(3, 4).unwrap()] {
            let gamma = second_quantize(&fs, &m).unwrap();
            let fact = |occ: &[usize]| -> f64 {
                occ.iter().map(|&k| (1..=k).map(|x| x as f64).product::<f64>()).product::<f64>().sqrt()
            };
            let expand = |occ: &[usize]| -> Vec<usize> {
                occ.iter().enumerate().flat_map(|(mode, &k)| std::iter::repeat_n(mode, k)).collect()
            };
            for i in 0..fs.dim() {
                for j in 0..fs.dim() {
                    let want = if fs.total_photons(i) == fs.total_photons(j) {
                        let (rows, cols) = (expand(fs.occupation(i)), expand(fs.occupation(j)));
                        let sub = CMatrix::from_fn(rows.len(), cols.len(), |r, s| m[(rows[r], cols[s])]);
                        permanent(&sub) / (fact(fs.occupation(i)) * fact(fs.occupation(j)))
                    } else {
                        c(0.0, 0.0)
                    };
                    assert!((gamma[(i, j)] - want).norm() < 1e-12, "entry ({i},{j})");
                }
            }
        }
    }

    #[test]
    fn permanent_values() {
        let m = CMatrix::from_row_slice(2, 2, &[c(1.0, 0.0), c(2.0, 0.0), c(3.0, 0.0), c(4.0, 0.0)]);
        assert!((permanent(&m) - c(10.0, 0.0)).norm() < 1e-14);
        let ones = CMatrix::from_element(3, 3, c(1.0, 0.0));
        assert!((permanent(&ones) - c(6.0, 0.0)).norm() < 1e-14);
        let ones = CMatrix::from_element(5, 5, c(1.0, 0.0));
        assert!((permanent(&ones) - c(120.0, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn elementary_superoperator_examples() {
        let fs = FockSpace::new(1, 4).unwrap();
        let km = superop_assoc(&fs, SuperOpKind::KMinus, &matkernel::identity(1)).unwrap();
        let out = km.apply(&fs.projector(&[1], &[1]).unwrap());
        assert!(matkernel::max_abs(&(out - fs.projector(&[0], &[0]).unwrap())) < 1e-15);

        let fs = FockSpace::new(2, 4).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let a = random_matrix(&mut rng, 2);
        let vac = fs.projector(&[0, 0], &[0, 0]).unwrap();
        let out = superop_assoc(&fs, SuperOpKind::K0, &a).unwrap().apply(&vac) * c(2.0, 0.0);
        assert!(matkernel::max_abs(&(out - &vac * a.trace())) < 1e-14);
        assert_eq!("K+".parse::<SuperOpKind>(), Ok(SuperOpKind::KPlus));
        assert!("K7".parse::<SuperOpKind>().is_err());
    }

    #[test]
    fn superoperators_match_left_right_action() {
        let fs = FockSpace::new(2, 3).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let a = random_matrix(&mut rng, 2);
        let lad = all_ladders(&fs);
        let j = jordan_operator(&fs, &a).unwrap();
        let ops: Vec<_> = [SuperOpKind::K0, SuperOpKind::KPlus, SuperOpKind::KMinus, SuperOpKind::NMinus]
            .into_iter()
            .map(|k| (k, superop_assoc(&fs, k, &a).unwrap()))
            .collect();
        for _ in 0..20 {
            let rho = random_matrix(&mut rng, fs.dim());
            for (kind, s) in &ops {
                let mut want = CMatrix::zeros(fs.dim(), fs.dim());
                for p in 0..2 {
                    for q in 0..2 {
                        let coef = a[(p, q)];
                        let (adp, aq) = (&lad[p].1, &lad[q].0);
                        want += match kind {
                            SuperOpKind::KPlus => adp * &rho * aq * coef,
                            SuperOpKind::KMinus => aq * &rho * adp * coef,
                            _ => CMatrix::zeros(fs.dim(), fs.dim()),
                        };
                    }
                }
                if *kind == SuperOpKind::NMinus {
                    want = &j * &rho - &rho * &j;
                }
                if *kind == SuperOpKind::K0 {
                    let back = &j + matkernel::identity(fs.dim()) * a.trace();
                    want = (&j * &rho + &rho * back) * c(0.5, 0.0);
                }
                assert!(matkernel::max_abs(&(s.apply(&rho) - want)) < 1e-12, "{kind:?}");
            }
        }
    }

    #[test]
    fn lowering_raising_relation_on_safe_subspace() {
        let fs = FockSpace::new(2, 5).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let (a, b) = (random_matrix(&mut rng, 2), random_matrix(&mut rng, 2));
        let km = superop_assoc(&fs, SuperOpKind::KMinus, &a).unwrap();
        let kp = superop_assoc(&fs, SuperOpKind::KPlus, &b).unwrap();
        let rhs = &superop_assoc(&fs, SuperOpKind::K0, &matkernel::anticommutator(&a, &b)).unwrap()
            - &superop_assoc(&fs, SuperOpKind::NMinus, &(matkernel::commutator(&a, &b) * c(0.5, 0.0))).unwrap();
        let lhs = km.commutator(&kp);
        let safe = fs.liouville_up_to(2);
        let diff = lhs.restrict(&safe, &safe) - rhs.restrict(&safe, &safe);
        assert!(matkernel::max_abs(&diff) < 1e-12);
    }

    #[test]
    fn single_mode_decay_example() {
        let fs = FockSpace::new(1, 4).unwrap();
        let one = matkernel::identity(1);
        let spec = SystemSpec::thermal(CMatrix::zeros(1, 1), one, 0.0).unwrap();
        let l = build_liouvillian(&fs, &spec).unwrap();
        let out = l.apply(&fs.projector(&[1], &[1]).unwrap());
        let want = fs.projector(&[0], &[0]).unwrap() * c(2.0, 0.0) - fs.projector(&[1], &[1]).unwrap() * c(2.0, 0.0);
        assert!(matkernel::max_abs(&(out - want)) < 1e-15);
    }

    #[test]
    fn construction_paths_agree_and_adjoint_is_conjugate_transpose() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let fs = FockSpace::new(2, 4).unwrap();
        for &n_t in &[0.0, 0.2, 1.3] {
            let spec = random_thermal(&mut rng, 2, n_t);
            let a = liouvillian_associated(&fs, &spec).unwrap();
            let d = liouvillian_direct(&fs, &spec).unwrap();
            assert!(matkernel::max_abs(&(a.to_dense() - d.to_dense())) < 1e-12);
            let adj = build_adjoint(&fs, &spec).unwrap();
            assert!(matkernel::max_abs(&(adj.to_dense() - a.to_dense().adjoint())) < 1e-13);
        }
        let wrong = random_thermal(&mut rng, 3, 0.1);
        assert!(matches!(build_liouvillian(&fs, &wrong), Err(FockError::ModeMismatch { .. })));
    }

    #[test]
    fn trace_preservation_and_hermiticity() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let fs = FockSpace::new(2, 5).unwrap();
        let spec = random_thermal(&mut rng, 2, 0.4);
        let adj = build_adjoint(&fs, &spec).unwrap();
        let on_identity = adj.apply(&matkernel::identity(fs.dim()));
        assert!(max_on(&fs, &on_identity, 3) < 1e-12);
        let l = build_liouvillian(&fs, &spec).unwrap();
        let x = random_matrix(&mut rng, fs.dim());
        let x = fs.project_up_to(&(&x + x.adjoint()), 3);
        let y = l.apply(&x);
        assert!(matkernel::is_hermitian(&y, 1e-12));
        assert!(y.trace().norm() < 1e-12);
    }

    #[test]
    fn zero_temperature_generator_never_raises_photon_number() {
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        let fs = FockSpace::new(2, 4).unwrap();
        let spec = random_thermal(&mut rng, 2, 0.0);
        let l = build_liouvillian(&fs, &spec).unwrap();
        for k in 0..=3 {
            let x = fs.project_up_to(&random_matrix(&mut rng, fs.dim()), k);
            let y = l.apply(&x);
            assert_eq!(matkernel::max_abs(&(&y - fs.project_up_to(&y, k))), 0.0);
        }
    }

    #[test]
    fn oracle_initial_time_and_thermalization() {
        let fs = FockSpace::new(1, 14).unwrap();
        let spec = SystemSpec::thermal(CMatrix::from_element(1, 1, c(0.7, 0.0)), matkernel::identity(1), 0.1).unwrap();
        let l = build_liouvillian(&fs, &spec).unwrap();
        let rho0 = fs.projector(&[1], &[1]).unwrap();
        let same = oracle_propagate(&fs, &l, &rho0, 0.0).unwrap();
        assert_eq!(same.rho, rho0);
        let late = oracle_propagate(&fs, &l, &rho0, 25.0).unwrap();
        let p: f64 = 0.1 / 1.1;
        for k in 0..6 {
            assert!((late.rho[(k, k)].re - (1.0 - p) * p.powi(k as i32)).abs() < 1e-10);
        }
        assert!(late.trace_leakage < 1e-10);
        let edge = fs.projector(&[13], &[13]).unwrap();
        assert!(matches!(oracle_propagate(&fs, &l, &edge, 1.0), Err(FockError::BoundarySupport(_))));
        assert!(matches!(oracle_propagate(&fs, &l, &rho0, -1.0), Err(FockError::NegativeTime(_))));
    }

    #[test]
    fn oracle_single_photon_follows_drift_matrix() {
        let ch = crate::model::TwoModeChannel::new(0.0, [0.0, 0.0, 0.9], 1.0, [0.0, 0.0, 0.9]).unwrap();
        let spec = crate::model::assemble_two_mode(&ch, 0.0).unwrap();
        let fs = FockSpace::new(2, 3).unwrap();
        let l = build_liouvillian(&fs, &spec).unwrap();
        let amp = [c(0.6, 0.0), c(0.0, 0.8)];
        let mut psi = CVector::zeros(fs.dim());
        psi[fs.index_of(&[1, 0]).unwrap()] = amp[0];
        psi[fs.index_of(&[0, 1]).unwrap()] = amp[1];
        let rho0 = &psi * psi.adjoint();
        for &t in &[0.3, 1.0, 2.5] {
            let rho = oracle_propagate(&fs, &l, &rho0, t).unwrap().rho;
            let p = matkernel::expm(&(spec.l_matrix() * c(t, 0.0))).unwrap();
            let out = &p * CVector::from_vec(amp.to_vec());
            for (k, occ) in [[1usize, 0], [0, 1]].iter().enumerate() {
                let i = fs.index_of(occ).unwrap();
                assert!((rho[(i, i)].re - out[k].norm_sqr()).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn lowering_exponential_binomial_expansion() {
        let fs = FockSpace::new(1, 6).unwrap();
        let km = superop_assoc(&fs, SuperOpKind::KMinus, &matkernel::identity(1)).unwrap();
        let alpha = 0.7;
        let (m, n) = (4usize, 2usize);
        let out = km.exp_nilpotent(c(alpha, 0.0)).unwrap().apply(&fs.projector(&[m], &[n]).unwrap());
        let binom = |a: usize, b: usize| -> f64 { (0..b).map(|i| (a - i) as f64 / (i + 1) as f64).product() };
        let mut want = CMatrix::zeros(6, 6);
        for k in 0..=n {
            want[(m - k, n - k)] = c(alpha.powi(k as i32) * (binom(m, k) * binom(n, k)).sqrt(), 0.0);
        }
        assert!(matkernel::max_abs(&(out - want)) < 1e-14);
    }

    #[test]
    fn jump_transform_inverse_and_zero_temperature_form() {
        let fs = FockSpace::new(2, 4).unwrap();
        let eye = SuperOpMatrix::identity(fs.dim());
        for &n_t in &[0.0, 0.3] {
            for ord in [JumpOrdering::PlusMinus, JumpOrdering::MinusPlus] {
                let t = jump_transform(&fs, &thermal_rates(n_t).unwrap(), ord).unwrap();
                let prod = t.forward.compose(&t.inverse);
                assert!(matkernel::max_abs(&(prod.to_dense() - eye.to_dense())) < 1e-12);
            }
        }
        let t = jump_transform(&fs, &thermal_rates(0.0).unwrap(), JumpOrdering::MinusPlus).unwrap();
        let km = superop_assoc(&fs, SuperOpKind::KMinus, &matkernel::identity(2)).unwrap();
        let want = km.exp_nilpotent(c(-1.0, 0.0)).unwrap();
        assert!(matkernel::max_abs(&(t.inverse.to_dense() - want.to_dense())) < 1e-14);
        let small = FockSpace::new(2, 2).unwrap();
        assert!(matches!(
            jump_transform(&small, &thermal_rates(0.1).unwrap(), JumpOrdering::PlusMinus),
            Err(FockError::InsufficientMargin { .. })
        ));
    }

    #[test]
    fn jump_elimination_intertwines() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let fs = FockSpace::new(2, 5).unwrap();
        for &n_t in &[0.0, 0.25] {
            let spec = random_thermal(&mut rng, 2, n_t);
            for ord in [JumpOrdering::PlusMinus, JumpOrdering::MinusPlus] {
                let chk = verify_jump_elimination(&fs, &spec, ord, 2).unwrap();
                assert!(chk.intertwining_residual < 1e-11, "{ord:?} {n_t}: {chk:?}");
                if n_t == 0.0 {
                    assert!(chk.conjugation_residual < 1e-11);
                }
            }
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn associated_superoperators_are_linear(seed in 0u64..10_000, s in -2.0..2.0f64) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let fs = FockSpace::new(2, 3).unwrap();
            let (a, b) = (random_matrix(&mut rng, 2), random_matrix(&mut rng, 2));
            for kind in [SuperOpKind::K0, SuperOpKind::KPlus, SuperOpKind::KMinus, SuperOpKind::NMinus] {
                let lhs = superop_assoc(&fs, kind, &(&a + &b * c(s, 0.0))).unwrap();
                let rhs = &superop_assoc(&fs, kind, &a).unwrap() + &(&superop_assoc(&fs, kind, &b).unwrap() * s);
                prop_assert!(matkernel::max_abs(&(lhs.to_dense() - rhs.to_dense())) < 1e-12);
            }
        }

        #[test]
        fn generator_preserves_trace_of_low_photon_states(seed in 0u64..10_000, n_t in 0.0..1.0f64) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let fs = FockSpace::new(2, 4).unwrap();
            let spec = random_thermal(&mut rng, 2, n_t);
            let l = build_liouvillian(&fs, &spec).unwrap();
            let x = fs.project_up_to(&random_matrix(&mut rng, fs.dim()), 2);
            prop_assert!(l.apply(&x).trace().norm() < 1e-12);
        }
    }
}
