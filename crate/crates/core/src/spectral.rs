//! Analytic spectral engine.
//!
//! Everything here is driven by the N x N matrix `L = -i Omega - Gamma`: the
//! closed-form two-mode propagator and its exceptional points, the Liouvillian
//! spectrum, the Lyapunov solutions behind the jump-eliminating
//! transformations, Gaussian steady states, and eigenmode propagation of
//! density matrices in a truncated Fock space.

use num_complex::Complex64;
use rayon::prelude::*;
use thiserror::Error;

use crate::fockspace::{self, FockError, FockSpace, SuperOpKind, SuperOpMatrix};
use crate::matkernel::{self, c, CMatrix, KernelError};
use crate::model::{SpecError, SystemSpec, ThermalRates, TwoModeChannel};

/// Below this `|q t|` the removable singularity of `sinh(qt)/q` is handled by
/// its Taylor series.
const SERIES_RADIUS: f64 = 1e-4;

/// `|q^2|` below this fraction of the squared channel scale is an EP.
const EP_TOL: f64 = 1e-12;

/// Largest admissible relative trace loss of a truncated steady state.
pub const LEAKAGE_TOL: f64 = 1e-6;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SpectralError {
    #[error(
        "effective matrix is defective (eigenvector rcond {0:e}); \
         use the propagator path or the Fock-space oracle at exceptional points"
    )]
    ExceptionalPoint(f64),
    #[error("operation needs a thermal-bath spec")]
    NotThermal,
    #[error("truncated steady state loses a fraction {0:e} of its trace through the cutoff")]
    TruncationLeakage(f64),
    #[error("index {index} exceeds the truncation-safe limit {limit}")]
    UnsafeIndex { index: usize, limit: usize },
    #[error("initial state: {0}")]
    Support(String),
    #[error(transparent)]
    Spec(#[from] SpecError),
    #[error(transparent)]
    Kernel(#[from] KernelError),
    #[error(transparent)]
    Fock(#[from] FockError),
}

pub type SpectralResult<T> = Result<T, SpectralError>;

/// `H = Omega - i Gamma` and `L = -i H`, together with the semiclassical
/// effective Hamiltonian of the full Liouvillian.
#[derive(Debug, Clone)]
pub struct EffectiveMatrices {
    pub h: CMatrix,
    pub l: CMatrix,
    pub n_modes: usize,
    semiclassical: CMatrix,
    semiclassical_shift: Complex64,
}

impl EffectiveMatrices {
    /// Matrix `Omega + i Gamma_0` and constant `-i Tr Gamma_+` of the
    /// temperature-dependent semiclassical Hamiltonian. At zero temperature
    /// they reduce to `(H, 0)`.
    pub fn semiclassical(&self) -> (&CMatrix, Complex64) {
        (&self.semiclassical, self.semiclassical_shift)
    }
}

pub fn effective(spec: &SystemSpec) -> EffectiveMatrices {
    let i = c(0.0, 1.0);
    EffectiveMatrices {
        h: spec.h_matrix(),
        l: spec.l_matrix(),
        n_modes: spec.n_modes(),
        semiclassical: spec.omega() + spec.gamma_zero() * i,
        semiclassical_shift: -i * spec.gamma_plus().trace(),
    }
}

/// `sinh(z) / z`, smooth through `z = 0`.
pub fn sinhc(z: Complex64) -> Complex64 {
    if z.norm() < SERIES_RADIUS {
        let z2 = z * z;
        // 1 + z^2/3! + z^4/5! + ... + z^10/11!
        let coefs = [1.0, 1.0 / 6.0, 1.0 / 120.0, 1.0 / 5040.0, 1.0 / 362880.0, 1.0 / 39916800.0];
        coefs.iter().rev().fold(c(0.0, 0.0), |acc, &k| acc * z2 + k)
    } else {
        z.sinh() / z
    }
}

/// Closed-form `P(t) = e^{Lt}` of a two-mode channel.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TwoModePropagator {
    channel: TwoModeChannel,
    q_squared: Complex64,
    q: Complex64,
    ep: bool,
}

fn channel_scale_sq(ch: &TwoModeChannel) -> f64 {
    let s: f64 = ch.omega_vec.iter().chain(ch.gamma_vec.iter()).map(|x| x * x).sum();
    ch.gamma0 * ch.gamma0 + s
}

impl TwoModePropagator {
    pub fn new(ch: &TwoModeChannel) -> Self {
        let q_squared: Complex64 = (0..3)
            .map(|k| {
                let z = c(ch.gamma_vec[k], ch.omega_vec[k]);
                z * z
            })
            .sum();
        Self {
            channel: *ch,
            q_squared,
            q: q_squared.sqrt(),
            ep: q_squared.norm() <= EP_TOL * channel_scale_sq(ch),
        }
    }

    /// Principal square root of `q^2 = sum_k (gamma_k + i omega_k)^2`.
    pub fn q(&self) -> Complex64 {
        self.q
    }

    pub fn q_squared(&self) -> Complex64 {
        self.q_squared
    }

    pub fn is_exceptional_point(&self) -> bool {
        self.ep
    }

    pub fn at(&self, t: f64) -> CMatrix {
        let ch = &self.channel;
        let [s0, s1, s2, s3] = crate::model::pauli();
        let prefactor = (c(-ch.gamma0, -ch.omega0) * t).exp();
        let qt = self.q * t;
        let mixing = sinhc(qt) * t;
        let generator = [s1, s2, s3]
            .iter()
            .enumerate()
            .fold(CMatrix::zeros(2, 2), |acc, (k, s)| acc + s * c(ch.gamma_vec[k], ch.omega_vec[k]));
        (s0 * qt.cosh() - generator * mixing) * prefactor
    }
}

pub fn two_mode_propagator(ch: &TwoModeChannel) -> TwoModePropagator {
    TwoModePropagator::new(ch)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Regime {
    /// Real `q`: purely exponential relaxation.
    Exponential,
    /// `q = 0`: `H` is defective.
    ExceptionalPoint,
    /// Imaginary `q`: damped oscillations.
    Oscillatory,
    /// Generic complex `q`.
    Mixed,
}

impl std::fmt::Display for Regime {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Self::Exponential => "exponential",
            Self::ExceptionalPoint => "ep",
            Self::Oscillatory => "oscillatory",
            Self::Mixed => "mixed",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpClassification {
    pub regime: Regime,
    pub q: Complex64,
    pub q_squared: Complex64,
    /// `|q|^2`, the distance to the EP manifold.
    pub distance: f64,
    /// Eigenvector rcond of `H`.
    pub defectiveness: f64,
    pub defective: bool,
}

pub fn ep_classify(ch: &TwoModeChannel) -> SpectralResult<EpClassification> {
    let prop = TwoModePropagator::new(ch);
    let tol = EP_TOL * channel_scale_sq(ch);
    let q2 = prop.q_squared;
    let regime = if prop.ep {
        Regime::ExceptionalPoint
    } else if q2.im.abs() <= tol {
        if q2.re > 0.0 {
            Regime::Exponential
        } else {
            Regime::Oscillatory
        }
    } else {
        Regime::Mixed
    };
    let eig = matkernel::eig(&ch.h_matrix())?;
    Ok(EpClassification {
        regime,
        q: prop.q,
        q_squared: q2,
        distance: q2.norm(),
        defectiveness: eig.defectiveness,
        defective: eig.is_defective(),
    })
}

/// Eigenbasis of `L`: `L_d = e^V L e^{-V} = diag(rates)`.
#[derive(Debug, Clone)]
pub struct Diagonalizer {
    /// `L_k^{(d)}`, ordered by damping and then by frequency.
    pub rates: Vec<Complex64>,
    /// `e^{-V}`: right eigenvectors as unit-norm columns whose first
    /// significant component is real positive.
    pub exp_minus_v: CMatrix,
    /// `e^{V}`; its rows are the dual left eigenvectors.
    pub exp_v: CMatrix,
    pub defectiveness: f64,
}

impl Diagonalizer {
    /// `Omega_k^{(d)} = -Im L_k^{(d)}`.
    pub fn frequencies(&self) -> Vec<f64> {
        self.rates.iter().map(|z| -z.im).collect()
    }

    /// `Gamma_k^{(d)} = -Re L_k^{(d)}`.
    pub fn dampings(&self) -> Vec<f64> {
        self.rates.iter().map(|z| -z.re).collect()
    }

    pub fn l_diagonal(&self) -> CMatrix {
        CMatrix::from_diagonal(&matkernel::CVector::from_vec(self.rates.clone()))
    }

    /// `lambda_{mn} = sum_k L_k m_k + conj(L_k) n_k`.
    pub fn eigenvalue(&self, ket: &[usize], bra: &[usize]) -> Complex64 {
        self.rates
            .iter()
            .zip(ket.iter().zip(bra))
            .map(|(l, (&m, &n))| l * m as f64 + l.conj() * n as f64)
            .sum()
    }

    fn identity(n: usize) -> Self {
        Self {
            rates: vec![c(0.0, 0.0); n],
            exp_minus_v: matkernel::identity(n),
            exp_v: matkernel::identity(n),
            defectiveness: 1.0,
        }
    }
}

/// Diagonalizes `L`, refusing defective matrices.
pub fn diagonalize(spec: &SystemSpec) -> SpectralResult<Diagonalizer> {
    diagonalize_matrix(&spec.l_matrix())
}

fn diagonalize_matrix(l: &CMatrix) -> SpectralResult<Diagonalizer> {
    let eig = matkernel::eig(l)?;
    if eig.is_defective() {
        return Err(SpectralError::ExceptionalPoint(eig.defectiveness));
    }
    let n = l.nrows();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| {
        let (za, zb) = (eig.eigenvalues[a], eig.eigenvalues[b]);
        (-za.re)
            .partial_cmp(&-zb.re)
            .unwrap()
            .then((-za.im).partial_cmp(&-zb.im).unwrap())
    });
    let mut s = CMatrix::zeros(n, n);
    for (k, &j) in order.iter().enumerate() {
        let mut col = eig.right_vectors.column(j).into_owned();
        col /= c(col.norm(), 0.0);
        if let Some(lead) = col.iter().find(|z| z.norm() > 1e-10) {
            col *= lead.conj() / lead.norm();
        }
        s.set_column(k, &col);
    }
    let s_inv = matkernel::inverse(&s)?;
    Ok(Diagonalizer {
        rates: order.iter().map(|&j| eig.eigenvalues[j]).collect(),
        exp_minus_v: s,
        exp_v: s_inv,
        defectiveness: eig.defectiveness,
    })
}

/// One Liouvillian eigenvalue labeled by its ket and bra multi-indices in the
/// diagonal mode basis.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralLine {
    pub ket: Vec<usize>,
    pub bra: Vec<usize>,
    pub lambda: Complex64,
}

#[derive(Debug, Clone)]
pub struct SpectrumResult {
    /// Sorted by real part, slowest first.
    pub lines: Vec<SpectralLine>,
    pub diagonalizer: Diagonalizer,
}

impl SpectrumResult {
    pub fn eigenvalues(&self) -> Vec<Complex64> {
        self.lines.iter().map(|l| l.lambda).collect()
    }

    pub fn find(&self, ket: &[usize], bra: &[usize]) -> Option<Complex64> {
        self.lines.iter().find(|l| l.ket == ket && l.bra == bra).map(|l| l.lambda)
    }
}

/// Multi-indices with at most `max_total` quanta, in a fixed order.
pub fn multi_indices(n_modes: usize, max_total: usize) -> Vec<Vec<usize>> {
    let fs = FockSpace::photon_capped(n_modes, max_total).expect("n_modes >= 1");
    (0..fs.dim()).map(|i| fs.occupation(i).to_vec()).collect()
}

/// All `lambda_{mn}` with at most `max_photons` quanta on each side.
pub fn liouvillian_spectrum(spec: &SystemSpec, max_photons: usize) -> SpectralResult<SpectrumResult> {
    let diagonalizer = diagonalize(spec)?;
    let idx = multi_indices(spec.n_modes(), max_photons);
    let pairs: Vec<(usize, usize)> = (0..idx.len()).flat_map(|i| (0..idx.len()).map(move |j| (i, j))).collect();
    let mut lines: Vec<SpectralLine> = pairs
        .par_iter()
        .map(|&(i, j)| SpectralLine {
            ket: idx[i].clone(),
            bra: idx[j].clone(),
            lambda: diagonalizer.eigenvalue(&idx[i], &idx[j]),
        })
        .collect();
    lines.sort_by(|a, b| b.lambda.re.partial_cmp(&a.lambda.re).unwrap());
    Ok(SpectrumResult { lines, diagonalizer })
}

/// Outcome of pairing two eigenvalue lists.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SetMatch {
    /// Largest distance between a value and its partner.
    pub max_distance: f64,
    /// Values whose partner lies outside `tol * max(1, |lambda|)`.
    pub unmatched: usize,
}

/// Greedy nearest-neighbor pairing of every `values` entry with a distinct
/// `reference` entry.
pub fn set_match(values: &[Complex64], reference: &[Complex64], tol: f64) -> SetMatch {
    let mut used = vec![false; reference.len()];
    let mut max_distance: f64 = 0.0;
    let mut unmatched = 0;
    for v in values {
        let best = reference
            .iter()
            .enumerate()
            .filter(|(k, _)| !used[*k])
            .map(|(k, r)| (k, (r - v).norm()))
            .min_by(|a, b| a.1.partial_cmp(&b.1).unwrap());
        match best {
            Some((k, d)) => {
                used[k] = true;
                max_distance = max_distance.max(d);
                if d > tol * v.norm().max(1.0) {
                    unmatched += 1;
                }
            }
            None => {
                unmatched += 1;
                max_distance = f64::INFINITY;
            }
        }
    }
    SetMatch {
        max_distance,
        unmatched,
    }
}

/// Branch label `nu = +/-1` of the Riccati family.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Branch {
    Plus,
    Minus,
}

impl Branch {
    pub fn sign(self) -> f64 {
        match self {
            Self::Plus => 1.0,
            Self::Minus => -1.0,
        }
    }

    pub fn flip(self) -> Self {
        match self {
            Self::Plus => Self::Minus,
            Self::Minus => Self::Plus,
        }
    }
}

fn gamma_branch(spec: &SystemSpec, nu: Branch) -> &CMatrix {
    match nu {
        Branch::Plus => spec.gamma_plus(),
        Branch::Minus => spec.gamma_minus(),
    }
}

/// Residuals that [`solve_riccati`] checks on its own output.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RiccatiChecks {
    /// `L W_nu + W_nu L^dagger + 2 Gamma_nu`, both branches.
    pub lyapunov: f64,
    /// `W_- - W_+ - I`.
    pub unit_gap: f64,
    /// Quadratic equation with `A_+ = W_-^{-1} - I`, and with `A_-` when it exists.
    pub riccati: f64,
    /// `A_- A_+ + I`; zero at zero temperature where `A_-` does not exist.
    pub inverse_pair: f64,
    /// Transformed coefficients `Gamma_0' = Gamma_0 - {Gamma_-, A_+}` and
    /// `Omega' = Omega + i [Gamma_-, A_+]` against the pair
    /// `Gamma_0' - i Omega' = W_-^{-1} L W_-`, `Gamma_0' + i Omega' = W_- L^dagger W_-^{-1}`.
    pub transformed_pair: f64,
    /// `Gamma_0'` against the closed form `-W_-^{-1} Gamma W_-`. Vanishes
    /// when `W_-` commutes with `Omega` and `Gamma` (thermal baths, commuting
    /// rates); not part of [`RiccatiChecks::max`].
    pub gamma0_prime: f64,
    /// `Omega'` against the closed form `W_-^{-1} Omega W_-`; same caveat.
    pub omega_prime: f64,
    /// Eigenvalue pairing distance between `L` and `W_-^{-1} L W_-`.
    pub similarity: f64,
    /// Linear equation solved by `B_-`.
    pub b_minus: f64,
}

impl RiccatiChecks {
    pub fn max(&self) -> f64 {
        [
            self.lyapunov,
            self.unit_gap,
            self.riccati,
            self.inverse_pair,
            self.transformed_pair,
            self.similarity,
            self.b_minus,
        ]
        .into_iter()
        .fold(0.0, f64::max)
    }
}

#[derive(Debug, Clone)]
pub struct RiccatiSolution {
    pub w_plus: CMatrix,
    pub w_minus: CMatrix,
    /// `T_{+-}(A_+, A_-) = e^{K+_{A_+}} e^{K-_{A_-}}` with `A_+ = -W_+`, `A_- = I`.
    pub a_plus: CMatrix,
    pub a_minus: CMatrix,
    /// `T_{-+}(B_-, B_+) = e^{K-_{B_-}} e^{K+_{B_+}}` with `B_+ = W_-^{-1} - I`.
    pub b_plus: CMatrix,
    pub b_minus: CMatrix,
    /// `X_+ = W_-^{-1}`.
    pub x_plus: CMatrix,
    /// `X_- = W_+^{-1}`, absent when `W_+` is singular.
    pub x_minus: Option<CMatrix>,
    /// `V_ss = log(W_+^{-1} + I)`, absent when `W_+` is singular.
    pub v_ss: Option<CMatrix>,
    /// `e^{-V_ss} = W_+ (W_+ + I)^{-1}`, finite at every temperature.
    pub exp_minus_v_ss: CMatrix,
    pub checks: RiccatiChecks,
}

impl RiccatiSolution {
    /// Riccati solution `A_nu = W_{-nu}^{-1} - nu I`.
    pub fn riccati_a(&self, nu: Branch) -> Option<CMatrix> {
        let x = match nu {
            Branch::Plus => Some(&self.x_plus),
            Branch::Minus => self.x_minus.as_ref(),
        }?;
        Some(x - matkernel::identity(x.nrows()) * c(nu.sign(), 0.0))
    }
}

/// `Gamma_nu + (i/2)[Omega, A] - (nu/2){Gamma_0, A} + A Gamma_{-nu} A`.
pub fn riccati_residual(spec: &SystemSpec, nu: Branch, a: &CMatrix) -> f64 {
    let i_half = c(0.0, 0.5);
    let r = gamma_branch(spec, nu) + matkernel::commutator(spec.omega(), a) * i_half
        - matkernel::anticommutator(&spec.gamma_zero(), a) * c(nu.sign() / 2.0, 0.0)
        + a * gamma_branch(spec, nu.flip()) * a;
    matkernel::max_abs(&r)
}

fn lyapunov_residual(l: &CMatrix, w: &CMatrix, src: &CMatrix) -> f64 {
    matkernel::max_abs(&(l * w + w * l.adjoint() + src * c(2.0, 0.0)))
}

fn relative(residual: f64, scale: f64) -> f64 {
    residual / scale.max(1.0)
}

/// Lyapunov solutions `W_+/-` and the matrices of both jump-eliminating
/// transformations built from them.
pub fn solve_riccati(spec: &SystemSpec) -> SpectralResult<RiccatiSolution> {
    let n = spec.n_modes();
    let eye = matkernel::identity(n);
    let l = spec.l_matrix();
    let w_plus = matkernel::solve_lyapunov(&l, spec.gamma_plus())?;
    let w_minus = matkernel::solve_lyapunov(&l, spec.gamma_minus())?;
    let x_plus = matkernel::inverse(&w_minus)?;
    let wp_min = matkernel::eigenvalues(&w_plus)?.iter().map(|z| z.re).fold(f64::INFINITY, f64::min);
    let x_minus = if wp_min > 1e-12 * matkernel::max_abs(&w_minus) {
        Some(matkernel::inverse(&w_plus)?)
    } else {
        None
    };
    let b_plus = &x_plus - &eye;
    let a_plus_riccati = b_plus.clone();

    // Coefficients of the nu = +1 transformed Liouvillian.
    let gamma0_p = spec.gamma_zero() - matkernel::anticommutator(spec.gamma_minus(), &a_plus_riccati);
    let omega_p = spec.omega() + matkernel::commutator(spec.gamma_minus(), &a_plus_riccati) * c(0.0, 1.0);
    let left = &omega_p * c(0.0, 1.0) + &gamma0_p;
    let l_tilde = &gamma0_p - &omega_p * c(0.0, 1.0);
    let b_minus = matkernel::solve_sylvester(&left, &l_tilde, &(spec.gamma_minus() * c(-2.0, 0.0)))?;

    let exp_minus_v_ss = &w_plus * matkernel::inverse(&(&w_plus + &eye))?;
    let v_ss = match &x_minus {
        Some(_) => Some(matkernel::hermitian_function(&w_plus, |w| (1.0 / w + 1.0).ln())?),
        None => None,
    };

    let scale = matkernel::max_abs(&w_minus).max(matkernel::max_abs(spec.gamma_minus()));
    let lyapunov = lyapunov_residual(&l, &w_plus, spec.gamma_plus())
        .max(lyapunov_residual(&l, &w_minus, spec.gamma_minus()));
    let unit_gap = matkernel::max_abs(&(&w_minus - &w_plus - &eye));
    let mut riccati = riccati_residual(spec, Branch::Plus, &a_plus_riccati);
    let mut inverse_pair = 0.0;
    if let Some(xm) = &x_minus {
        let a_minus_riccati = xm + &eye;
        riccati = riccati.max(riccati_residual(spec, Branch::Minus, &a_minus_riccati));
        inverse_pair = matkernel::max_abs(&(&a_minus_riccati * &a_plus_riccati + &eye));
    }
    let l_similar = &x_plus * &l * &w_minus;
    let transformed_pair = matkernel::max_abs(&(&l_tilde - &l_similar))
        .max(matkernel::max_abs(&(&left - &w_minus * l.adjoint() * &x_plus)));
    let gamma0_closed = -(&x_plus * spec.gamma() * &w_minus);
    let omega_closed = &x_plus * spec.omega() * &w_minus;
    let spectrum_l = matkernel::eigenvalues(&l)?;
    let spectrum_lt = matkernel::eigenvalues(&l_similar)?;
    let b_check = spec.gamma_minus() + matkernel::commutator(&omega_p, &b_minus) * c(0.0, 0.5)
        + matkernel::anticommutator(&gamma0_p, &b_minus) * c(0.5, 0.0);
    let checks = RiccatiChecks {
        lyapunov: relative(lyapunov, scale),
        unit_gap,
        riccati: relative(riccati, scale),
        inverse_pair,
        transformed_pair: relative(transformed_pair, scale),
        gamma0_prime: relative(matkernel::max_abs(&(&gamma0_closed - &gamma0_p)), scale),
        omega_prime: relative(matkernel::max_abs(&(&omega_closed - &omega_p)), scale),
        similarity: set_match(&spectrum_lt, &spectrum_l, 0.0).max_distance,
        b_minus: relative(matkernel::max_abs(&b_check), scale),
    };

    Ok(RiccatiSolution {
        a_plus: -&w_plus,
        a_minus: eye.clone(),
        w_plus,
        w_minus,
        b_plus,
        b_minus,
        x_plus,
        x_minus,
        v_ss,
        exp_minus_v_ss,
        checks,
    })
}

#[derive(Debug, Clone)]
pub struct SteadyState {
    /// Unit-trace density matrix on the truncated space.
    pub rho: CMatrix,
    /// `1 - Tr_box / Tr_exact` of the unnormalized Gaussian operator.
    pub leakage: f64,
}

/// Gaussian steady state `e^{-J_{V_ss}} / Tr`, built as the second
/// quantization of `e^{-V_ss}` so that zero temperature gives the vacuum.
pub fn steady_state(spec: &SystemSpec, fs: &FockSpace) -> SpectralResult<SteadyState> {
    let ric = solve_riccati(spec)?;
    let unnormalized = fockspace::second_quantize(fs, &ric.exp_minus_v_ss)?;
    let exact_trace: f64 = matkernel::eigenvalues(&ric.w_plus)?.iter().map(|w| 1.0 + w.re).product();
    let box_trace = unnormalized.trace().re;
    let leakage = 1.0 - box_trace / exact_trace;
    if leakage > LEAKAGE_TOL {
        return Err(SpectralError::TruncationLeakage(leakage));
    }
    let rho = unnormalized / c(box_trace, 0.0);
    Ok(SteadyState {
        rho: (&rho + rho.adjoint()) * c(0.5, 0.0),
        leakage,
    })
}

/// `max |L rho|` over matrix elements whose ket and bra lie one sector below
/// the last complete one, where the truncated Liouvillian is exact.
pub fn liouvillian_residual(fs: &FockSpace, spec: &SystemSpec, rho: &CMatrix) -> SpectralResult<f64> {
    let l = fockspace::build_liouvillian(fs, spec)?;
    let out = fs.project_up_to(&l.apply(rho), fs.complete_sectors().saturating_sub(1));
    Ok(matkernel::max_abs(&out))
}

/// Explicit single-mode eigenoperators of the thermal Liouvillian.
#[derive(Debug, Clone)]
pub struct SingleModeEigenoperators {
    /// Right eigenoperator `rho_{mn}`.
    pub rho: CMatrix,
    /// Eigenoperator `sigma_{nm}` of the adjoint.
    pub sigma: CMatrix,
    /// `Tr(sigma_{nm} rho_{mn})` summed over the truncated space.
    pub q: Complex64,
    pub lambda: Complex64,
}

fn factorial(k: usize) -> f64 {
    (1..=k).map(|x| x as f64).product()
}

fn thermal_rates_of(spec: &SystemSpec) -> SpectralResult<ThermalRates> {
    spec.thermal_rates().ok_or(SpectralError::NotThermal)
}

pub fn eigenoperators_single_mode(
    fs: &FockSpace,
    spec: &SystemSpec,
    m: usize,
    n: usize,
) -> SpectralResult<SingleModeEigenoperators> {
    if fs.n_modes() != 1 || spec.n_modes() != 1 {
        return Err(FockError::ModeMismatch {
            spec: spec.n_modes(),
            space: fs.n_modes(),
        }
        .into());
    }
    let rates = thermal_rates_of(spec)?;
    let limit = fs.complete_sectors().saturating_sub(1);
    for index in [m, n] {
        if index > limit {
            return Err(SpectralError::UnsafeIndex { index, limit });
        }
    }
    let (a, ad) = fockspace::ladder(fs, 0)?;
    let d = fs.dim();
    let rho0 = CMatrix::from_fn(d, d, |i, j| {
        if i == j {
            c(rates.boltzmann.powi(i as i32), 0.0)
        } else {
            c(0.0, 0.0)
        }
    });
    let pow = |x: &CMatrix, k: usize| (0..k).fold(matkernel::identity(d), |acc, _| acc * x);
    let norm = (factorial(m) * factorial(n)).sqrt();
    let mut rho = CMatrix::zeros(d, d);
    let mut sigma = CMatrix::zeros(d, d);
    for k in 0..=m.min(n) {
        let binom = norm / (factorial(k) * factorial(m - k) * factorial(n - k));
        let rc = (-rates.partition).powi(k as i32) * binom;
        let sc = (-rates.n_thermal).powi(k as i32) * binom;
        rho += pow(&ad, m - k) * &rho0 * pow(&a, n - k) * c(rc, 0.0);
        sigma += pow(&ad, n - k) * pow(&a, m - k) * c(sc, 0.0);
    }
    let q = (&sigma * &rho).trace();
    let l = spec.l_matrix()[(0, 0)];
    Ok(SingleModeEigenoperators {
        rho,
        sigma,
        q,
        lambda: l * m as f64 + l.conj() * n as f64,
    })
}

/// Eigenoperators and eigenmode propagation of a thermal Liouvillian on a
/// truncated Fock space.
///
/// Right eigenoperators are `T_{-+}^{-1} e^{-J_V} |m><n| e^{-J_V^dagger}` and
/// adjoint ones `T_{+-}^sharp e^{J_V^dagger} |n><m| e^{J_V}`. Both
/// transformations are applied in their normally ordered form, so every
/// matrix element they produce is exact; only traces over the box are
/// truncated.
pub struct EigenmodeBasis<'a> {
    fs: &'a FockSpace,
    rates: ThermalRates,
    modes: Diagonalizer,
    /// `e^{-J_V}`.
    lift: CMatrix,
    /// `e^{J_V}`.
    lower: CMatrix,
    k_plus: SuperOpMatrix,
    k_minus: SuperOpMatrix,
}

impl<'a> EigenmodeBasis<'a> {
    pub fn new(fs: &'a FockSpace, spec: &SystemSpec) -> SpectralResult<Self> {
        let modes = diagonalize(spec)?;
        Self::with_modes(fs, spec, modes)
    }

    /// Basis built on the Fock modes themselves, used by the propagator
    /// route where `L` need not be diagonalizable.
    fn fock_modes(fs: &'a FockSpace, spec: &SystemSpec) -> SpectralResult<Self> {
        Self::with_modes(fs, spec, Diagonalizer::identity(spec.n_modes()))
    }

    fn with_modes(fs: &'a FockSpace, spec: &SystemSpec, modes: Diagonalizer) -> SpectralResult<Self> {
        let rates = thermal_rates_of(spec)?;
        if fs.n_modes() != spec.n_modes() {
            return Err(FockError::ModeMismatch {
                spec: spec.n_modes(),
                space: fs.n_modes(),
            }
            .into());
        }
        if fs.complete_sectors() < 2 {
            return Err(FockError::InsufficientMargin { cutoff: fs.cutoff() }.into());
        }
        let eye = matkernel::identity(fs.n_modes());
        Ok(Self {
            fs,
            rates,
            lift: fockspace::second_quantize(fs, &modes.exp_minus_v)?,
            lower: fockspace::second_quantize(fs, &modes.exp_v)?,
            modes,
            k_plus: fockspace::superop_assoc(fs, SuperOpKind::KPlus, &eye)?,
            k_minus: fockspace::superop_assoc(fs, SuperOpKind::KMinus, &eye)?,
        })
    }

    pub fn diagonalizer(&self) -> &Diagonalizer {
        &self.modes
    }

    /// `e^{beta K+_I} e^{alpha K-_I}` applied to each column.
    fn raise_after_lower(&self, beta: f64, alpha: f64, x: &CMatrix) -> SpectralResult<CMatrix> {
        let lowered = self.k_minus.exp_nilpotent_columns(c(alpha, 0.0), x)?;
        Ok(self.k_plus.exp_nilpotent_columns(c(beta, 0.0), &lowered)?)
    }

    fn map_operators(&self, ops: &[CMatrix], f: impl Fn(&CMatrix) -> SpectralResult<CMatrix>) -> SpectralResult<Vec<CMatrix>> {
        let d = self.fs.dim();
        let mut cols = CMatrix::zeros(d * d, ops.len());
        for (k, op) in ops.iter().enumerate() {
            cols.set_column(k, &matkernel::vec_rows(op));
        }
        let out = f(&cols)?;
        Ok((0..ops.len())
            .map(|k| matkernel::unvec_rows(&out.column(k).into_owned(), d, d))
            .collect())
    }

    /// `T_{-+}^{-1} = e^{p K+_I} e^{-Z K-_I}`.
    fn undo_minus_plus(&self, x: &CMatrix) -> SpectralResult<CMatrix> {
        self.raise_after_lower(self.rates.boltzmann, -self.rates.partition, x)
    }

    /// `T_{+-} = e^{-n_T K+_I} e^{K-_I}`.
    fn plus_minus(&self, x: &CMatrix) -> SpectralResult<CMatrix> {
        self.raise_after_lower(-self.rates.n_thermal, 1.0, x)
    }

    /// `e^{K+_I} e^{-n_T K-_I}`, the trace dual of `T_{+-}`.
    fn plus_minus_dual(&self, x: &CMatrix) -> SpectralResult<CMatrix> {
        self.raise_after_lower(1.0, -self.rates.n_thermal, x)
    }

    fn diagonal_rho(&self, ket: usize, bra: usize) -> CMatrix {
        self.lift.column(ket) * self.lift.column(bra).adjoint()
    }

    fn diagonal_sigma(&self, ket: usize, bra: usize) -> CMatrix {
        // e^{J_V^dagger} |n><m| e^{J_V} with (m, n) = (ket, bra).
        self.lower.row(bra).adjoint() * self.lower.row(ket)
    }

    /// `rho_{mn}` for basis indices `m = ket`, `n = bra` of the Fock space.
    pub fn rho(&self, ket: usize, bra: usize) -> SpectralResult<CMatrix> {
        let x = self.map_operators(&[self.diagonal_rho(ket, bra)], |cols| self.undo_minus_plus(cols))?;
        Ok(x.into_iter().next().unwrap())
    }

    /// `sigma_{nm}` paired with `rho_{mn}`.
    pub fn sigma(&self, ket: usize, bra: usize) -> SpectralResult<CMatrix> {
        let x = self.map_operators(&[self.diagonal_sigma(ket, bra)], |cols| self.plus_minus_dual(cols))?;
        Ok(x.into_iter().next().unwrap())
    }

    pub fn lambda(&self, ket: usize, bra: usize) -> Complex64 {
        self.modes.eigenvalue(self.fs.occupation(ket), self.fs.occupation(bra))
    }

    /// `q_{mn} = Tr(sigma_{nm} rho_{mn})` for each pair, summed over the
    /// truncated space.
    pub fn biorthogonality(&self, pairs: &[(usize, usize)]) -> SpectralResult<Vec<Complex64>> {
        pairs
            .par_chunks(32)
            .map(|chunk| {
                let rhos: Vec<CMatrix> = chunk.iter().map(|&(m, n)| self.diagonal_rho(m, n)).collect();
                let sigmas: Vec<CMatrix> = chunk.iter().map(|&(m, n)| self.diagonal_sigma(m, n)).collect();
                let rhos = self.map_operators(&rhos, |x| self.undo_minus_plus(x))?;
                let sigmas = self.map_operators(&sigmas, |x| self.plus_minus_dual(x))?;
                Ok(rhos
                    .iter()
                    .zip(&sigmas)
                    .map(|(r, s)| s.iter().zip(r.transpose().iter()).map(|(a, b)| a * b).sum())
                    .collect::<Vec<Complex64>>())
            })
            .collect::<SpectralResult<Vec<_>>>()
            .map(|v| v.into_iter().flatten().collect())
    }

    /// Coefficients `Tr(sigma_{nm} rho0)` as a matrix indexed by `(m, n)`,
    /// through the duality `Tr((K+ X) Y) = Tr(X K- Y)`.
    fn coefficients(&self, rho0: &CMatrix) -> SpectralResult<CMatrix> {
        let g = self.fs.complete_sectors();
        let c_mat = self.map_operators(std::slice::from_ref(rho0), |x| self.plus_minus(x))?.remove(0);
        let c_mat = self.fs.project_up_to(&c_mat, g);
        Ok(self.fs.project_up_to(&(&self.lower * c_mat * self.lower.adjoint()), g))
    }

    /// Divides every nonzero entry of `e` by its `q_{mn}`.
    fn divide_by_q(&self, e: &mut CMatrix) -> SpectralResult<()> {
        let pairs: Vec<(usize, usize)> = (0..e.nrows())
            .flat_map(|i| (0..e.ncols()).map(move |j| (i, j)))
            .filter(|&(i, j)| e[(i, j)] != c(0.0, 0.0))
            .collect();
        let q = self.biorthogonality(&pairs)?;
        for (&(i, j), qij) in pairs.iter().zip(q) {
            e[(i, j)] /= qij;
        }
        Ok(())
    }

    fn resynthesize(&self, e: &CMatrix) -> SpectralResult<CMatrix> {
        let f = &self.lift * e * self.lift.adjoint();
        Ok(self.map_operators(&[f], |x| self.undo_minus_plus(x))?.remove(0))
    }

    fn check_initial(&self, rho0: &CMatrix, max_photons: usize) -> SpectralResult<()> {
        let d = self.fs.dim();
        if rho0.shape() != (d, d) {
            return Err(FockError::OperatorShape {
                rows: rho0.nrows(),
                cols: rho0.ncols(),
                dim: d,
            }
            .into());
        }
        matkernel::check_finite(rho0)?;
        if max_photons > self.fs.complete_sectors() {
            return Err(SpectralError::UnsafeIndex {
                index: max_photons,
                limit: self.fs.complete_sectors(),
            });
        }
        let outside = matkernel::max_abs(&(rho0 - self.fs.project_up_to(rho0, max_photons)));
        if outside > 0.0 {
            return Err(SpectralError::Support(format!(
                "weight {outside:e} beyond {max_photons} photons"
            )));
        }
        Ok(())
    }

    /// `sum_{mn} e^{lambda_{mn} t} / q_{mn} rho_{mn} Tr(sigma_{nm} rho0)`,
    /// summed over every pair within the complete sectors of the space.
    pub fn evolve(&self, rho0: &CMatrix, t: f64, max_photons: usize) -> SpectralResult<CMatrix> {
        if t.is_nan() || t < 0.0 {
            return Err(FockError::NegativeTime(t).into());
        }
        self.check_initial(rho0, max_photons)?;
        let mut e = self.coefficients(rho0)?;
        for i in 0..e.nrows() {
            for j in 0..e.ncols() {
                if e[(i, j)] != c(0.0, 0.0) {
                    e[(i, j)] *= (self.lambda(i, j) * t).exp();
                }
            }
        }
        self.divide_by_q(&mut e)?;
        self.resynthesize(&e)
    }
}

/// Eigenmode expansion of `e^{L t} rho0` for a thermal spec. `rho0` must be
/// supported on at most `max_photons` photons.
pub fn eigenmode_evolution(
    fs: &FockSpace,
    spec: &SystemSpec,
    rho0: &CMatrix,
    t: f64,
    max_photons: usize,
) -> SpectralResult<CMatrix> {
    EigenmodeBasis::new(fs, spec)?.evolve(rho0, t, max_photons)
}

/// Propagator route: the diagonal-mode exponentials are replaced by the
/// second quantization of `P(t) = e^{Lt}`, which stays valid at exceptional
/// points.
pub fn propagator_evolution(
    fs: &FockSpace,
    spec: &SystemSpec,
    rho0: &CMatrix,
    t: f64,
    max_photons: usize,
) -> SpectralResult<CMatrix> {
    if t.is_nan() || t < 0.0 {
        return Err(FockError::NegativeTime(t).into());
    }
    let basis = EigenmodeBasis::fock_modes(fs, spec)?;
    basis.check_initial(rho0, max_photons)?;
    let u = fockspace::second_quantize(fs, &matkernel::expm(&(spec.l_matrix() * c(t, 0.0)))?)?;
    let c_mat = basis.coefficients(rho0)?;
    let mut e = fs.project_up_to(&(&u * c_mat * u.adjoint()), fs.complete_sectors());
    basis.divide_by_q(&mut e)?;
    basis.resynthesize(&e)
}
