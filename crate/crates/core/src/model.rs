//! System specifications.
//!
//! A [`SystemSpec`] holds the frequency matrix and the two relaxation
//! matrices of an N-mode quadratic Lindbladian; [`ThermalRates`] derives the
//! thermal coefficients from a mean photon number; [`TwoModeChannel`] is the
//! Pauli-basis parameterization of a two-mode system.

use nalgebra::SymmetricEigen;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::matkernel::{self, c, CMatrix};

#[derive(Debug, Clone, PartialEq)]
pub enum Violation {
    NotSquare { name: &'static str, rows: usize, cols: usize },
    DimensionMismatch { name: &'static str, dim: usize, expected: usize },
    NonFinite { name: &'static str },
    NotHermitian { name: &'static str, deviation: f64 },
    NotPositiveDefinite { name: &'static str, min_eigenvalue: f64 },
}

impl std::fmt::Display for Violation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Self::NotSquare { name, rows, cols } => write!(f, "{name} is {rows}x{cols}, not square"),
            Self::DimensionMismatch { name, dim, expected } => {
                write!(f, "{name} has dimension {dim}, expected {expected}")
            }
            Self::NonFinite { name } => write!(f, "{name} has non-finite entries"),
            Self::NotHermitian { name, deviation } => {
                write!(f, "{name} is not Hermitian (max deviation {deviation:e})")
            }
            Self::NotPositiveDefinite { name, min_eigenvalue } => {
                write!(f, "{name} is not positive definite (smallest eigenvalue {min_eigenvalue:e})")
            }
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SpecError {
    #[error("invalid system spec: {}", .0.iter().map(ToString::to_string).collect::<Vec<_>>().join("; "))]
    Invalid(Vec<Violation>),
    #[error("mean thermal photon number must be finite and nonnegative, got {0}")]
    NegativeTemperature(f64),
    #[error("two-mode channel needs gamma0 > |gamma_vec|, got gamma0 = {gamma0}, |gamma_vec| = {gamma_norm}")]
    NotDissipative { gamma0: f64, gamma_norm: f64 },
    #[error("two-mode channel parameters must be finite")]
    NonFiniteChannel,
}

pub type SpecResult<T> = Result<T, SpecError>;

const HERMITIAN_TOL: f64 = 1e-12;

/// Validated N-mode system. Use [`validate_spec`] or [`SystemSpec::thermal`].
#[derive(Debug, Clone, PartialEq)]
pub struct SystemSpec {
    n_modes: usize,
    omega: CMatrix,
    gamma_plus: CMatrix,
    gamma_minus: CMatrix,
    n_thermal: Option<f64>,
}

impl SystemSpec {
    /// Thermal bath: `Gamma_+ = n_T Gamma`, `Gamma_- = (n_T + 1) Gamma`.
    /// `n_T = 0` is admitted here even though it makes `Gamma_+` vanish.
    pub fn thermal(omega: CMatrix, gamma: CMatrix, n_thermal: f64) -> SpecResult<Self> {
        let rates = thermal_rates(n_thermal)?;
        let mut violations = Vec::new();
        let n = shape_checks(&[("omega", &omega), ("gamma", &gamma)], &mut violations);
        if violations.is_empty() {
            hermitian_check("omega", &omega, &mut violations);
            hermitian_check("gamma", &gamma, &mut violations);
            positive_check("gamma", &gamma, &mut violations);
        }
        if !violations.is_empty() {
            return Err(SpecError::Invalid(violations));
        }
        let gamma = hermitize(&gamma);
        Ok(Self {
            n_modes: n,
            omega: hermitize(&omega),
            gamma_plus: &gamma * c(rates.gamma_plus_coef, 0.0),
            gamma_minus: &gamma * c(rates.gamma_minus_coef, 0.0),
            n_thermal: Some(n_thermal),
        })
    }

    pub fn n_modes(&self) -> usize {
        self.n_modes
    }

    pub fn omega(&self) -> &CMatrix {
        &self.omega
    }

    pub fn gamma_plus(&self) -> &CMatrix {
        &self.gamma_plus
    }

    pub fn gamma_minus(&self) -> &CMatrix {
        &self.gamma_minus
    }

    /// Net relaxation matrix `Gamma_- - Gamma_+`.
    pub fn gamma(&self) -> CMatrix {
        &self.gamma_minus - &self.gamma_plus
    }

    /// `-(Gamma_+ + Gamma_-)`.
    pub fn gamma_zero(&self) -> CMatrix {
        -(&self.gamma_plus + &self.gamma_minus)
    }

    /// Mean thermal photon number when the system was built as a thermal bath.
    pub fn n_thermal(&self) -> Option<f64> {
        self.n_thermal
    }

    pub fn thermal_rates(&self) -> Option<ThermalRates> {
        self.n_thermal.map(|n| thermal_rates(n).expect("validated at construction"))
    }

    /// Effective non-Hermitian matrix `Omega - i Gamma`.
    pub fn h_matrix(&self) -> CMatrix {
        &self.omega - self.gamma() * c(0.0, 1.0)
    }

    /// Drift matrix `-i Omega - Gamma`.
    pub fn l_matrix(&self) -> CMatrix {
        self.omega.map(|z| z * c(0.0, -1.0)) - self.gamma()
    }
}

fn shape_checks(mats: &[(&'static str, &CMatrix)], out: &mut Vec<Violation>) -> usize {
    let n = mats[0].1.nrows();
    for &(name, m) in mats {
        if m.nrows() != m.ncols() {
            out.push(Violation::NotSquare {
                name,
                rows: m.nrows(),
                cols: m.ncols(),
            });
        } else if m.nrows() != n {
            out.push(Violation::DimensionMismatch {
                name,
                dim: m.nrows(),
                expected: n,
            });
        }
        if matkernel::check_finite(m).is_err() {
            out.push(Violation::NonFinite { name });
        }
    }
    if n == 0 {
        out.push(Violation::DimensionMismatch {
            name: mats[0].0,
            dim: 0,
            expected: 1,
        });
    }
    n
}

fn hermitian_check(name: &'static str, m: &CMatrix, out: &mut Vec<Violation>) {
    let deviation = matkernel::max_abs(&(m - m.adjoint()));
    if deviation > HERMITIAN_TOL * matkernel::max_abs(m).max(1.0) {
        out.push(Violation::NotHermitian { name, deviation });
    }
}

fn min_eigenvalue(m: &CMatrix) -> f64 {
    SymmetricEigen::new(hermitize(m))
        .eigenvalues
        .iter()
        .cloned()
        .fold(f64::INFINITY, f64::min)
}

fn positive_check(name: &'static str, m: &CMatrix, out: &mut Vec<Violation>) {
    let min = min_eigenvalue(m);
    if min <= HERMITIAN_TOL * matkernel::max_abs(m).max(1.0) {
        out.push(Violation::NotPositiveDefinite {
            name,
            min_eigenvalue: min,
        });
    }
}

fn hermitize(m: &CMatrix) -> CMatrix {
    (m + m.adjoint()) * c(0.5, 0.0)
}

/// Validates a general spec. Every violated invariant is reported.
pub fn validate_spec(omega: CMatrix, gamma_plus: CMatrix, gamma_minus: CMatrix) -> SpecResult<SystemSpec> {
    let mut violations = Vec::new();
    let n = shape_checks(
        &[
            ("omega", &omega),
            ("gamma_plus", &gamma_plus),
            ("gamma_minus", &gamma_minus),
        ],
        &mut violations,
    );
    if violations.is_empty() {
        hermitian_check("omega", &omega, &mut violations);
        hermitian_check("gamma_plus", &gamma_plus, &mut violations);
        hermitian_check("gamma_minus", &gamma_minus, &mut violations);
        positive_check("gamma_plus", &gamma_plus, &mut violations);
        positive_check("gamma_minus", &gamma_minus, &mut violations);
        positive_check("gamma_minus - gamma_plus", &(&gamma_minus - &gamma_plus), &mut violations);
    }
    if !violations.is_empty() {
        return Err(SpecError::Invalid(violations));
    }
    Ok(SystemSpec {
        n_modes: n,
        omega: hermitize(&omega),
        gamma_plus: hermitize(&gamma_plus),
        gamma_minus: hermitize(&gamma_minus),
        n_thermal: None,
    })
}

/// Coefficients of a thermal bath with mean photon number `n_thermal`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThermalRates {
    pub n_thermal: f64,
    pub gamma_plus_coef: f64,
    pub gamma_minus_coef: f64,
    pub gamma_zero_coef: f64,
    /// `e^{-z_T} = n_T / (n_T + 1)`.
    pub boltzmann: f64,
    /// `z_T`, infinite at zero temperature.
    pub z_thermal: f64,
    /// `Z = n_T + 1`.
    pub partition: f64,
}

pub fn thermal_rates(n_thermal: f64) -> SpecResult<ThermalRates> {
    if !(n_thermal.is_finite() && n_thermal >= 0.0) {
        return Err(SpecError::NegativeTemperature(n_thermal));
    }
    let boltzmann = n_thermal / (n_thermal + 1.0);
    Ok(ThermalRates {
        n_thermal,
        gamma_plus_coef: n_thermal,
        gamma_minus_coef: n_thermal + 1.0,
        gamma_zero_coef: -2.0 * n_thermal - 1.0,
        boltzmann,
        z_thermal: -boltzmann.ln(),
        partition: n_thermal + 1.0,
    })
}

/// `[sigma_0, sigma_1, sigma_2, sigma_3]`.
pub fn pauli() -> [CMatrix; 4] {
    let z = c(0.0, 0.0);
    let one = c(1.0, 0.0);
    let i = c(0.0, 1.0);
    [
        CMatrix::from_row_slice(2, 2, &[one, z, z, one]),
        CMatrix::from_row_slice(2, 2, &[z, one, one, z]),
        CMatrix::from_row_slice(2, 2, &[z, -i, i, z]),
        CMatrix::from_row_slice(2, 2, &[one, z, z, -one]),
    ]
}

/// Coefficients `x_k = Tr(sigma_k A) / 2`, so `A = sum_k x_k sigma_k`.
pub fn pauli_decompose(a: &CMatrix) -> [num_complex::Complex64; 4] {
    let s = pauli();
    [0, 1, 2, 3].map(|k| (&s[k] * a).trace() * 0.5)
}

pub fn pauli_combination(scalar: f64, vector: [f64; 3]) -> CMatrix {
    let s = pauli();
    &s[0] * c(scalar, 0.0) + &s[1] * c(vector[0], 0.0) + &s[2] * c(vector[1], 0.0) + &s[3] * c(vector[2], 0.0)
}

pub fn norm3(v: [f64; 3]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

pub fn dot3(a: [f64; 3], b: [f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

pub fn cross3(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

pub fn unit_vector(theta: f64, phi: f64) -> [f64; 3] {
    [theta.sin() * phi.cos(), theta.sin() * phi.sin(), theta.cos()]
}

/// Two-mode channel in the Pauli basis:
/// `Omega = omega0 + omega_vec . sigma`, `Gamma = gamma0 + gamma_vec . sigma`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TwoModeChannel {
    pub omega0: f64,
    pub omega_vec: [f64; 3],
    pub gamma0: f64,
    pub gamma_vec: [f64; 3],
}

/// Magnitudes and polar angles of the channel vectors.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AngularChannel {
    pub omega0: f64,
    pub omega: f64,
    pub theta_omega: f64,
    pub phi_omega: f64,
    pub gamma0: f64,
    pub gamma: f64,
    pub theta_gamma: f64,
    pub phi_gamma: f64,
}

impl TwoModeChannel {
    pub fn new(omega0: f64, omega_vec: [f64; 3], gamma0: f64, gamma_vec: [f64; 3]) -> SpecResult<Self> {
        let all = [omega0, gamma0]
            .into_iter()
            .chain(omega_vec)
            .chain(gamma_vec);
        if !all.into_iter().all(f64::is_finite) {
            return Err(SpecError::NonFiniteChannel);
        }
        let gamma_norm = norm3(gamma_vec);
        if gamma0 <= gamma_norm {
            return Err(SpecError::NotDissipative { gamma0, gamma_norm });
        }
        Ok(Self {
            omega0,
            omega_vec,
            gamma0,
            gamma_vec,
        })
    }

    pub fn from_angular(a: AngularChannel) -> SpecResult<Self> {
        let w = unit_vector(a.theta_omega, a.phi_omega).map(|x| x * a.omega);
        let g = unit_vector(a.theta_gamma, a.phi_gamma).map(|x| x * a.gamma);
        Self::new(a.omega0, w, a.gamma0, g)
    }

    pub fn to_angular(&self) -> AngularChannel {
        let (omega, theta_omega, phi_omega) = polar(self.omega_vec);
        let (gamma, theta_gamma, phi_gamma) = polar(self.gamma_vec);
        AngularChannel {
            omega0: self.omega0,
            omega,
            theta_omega,
            phi_omega,
            gamma0: self.gamma0,
            gamma,
            theta_gamma,
            phi_gamma,
        }
    }

    pub fn omega_matrix(&self) -> CMatrix {
        pauli_combination(self.omega0, self.omega_vec)
    }

    pub fn gamma_matrix(&self) -> CMatrix {
        pauli_combination(self.gamma0, self.gamma_vec)
    }

    /// `H = Omega - i Gamma`.
    pub fn h_matrix(&self) -> CMatrix {
        self.omega_matrix() - self.gamma_matrix() * c(0.0, 1.0)
    }

    /// `L = -i H`.
    pub fn l_matrix(&self) -> CMatrix {
        self.h_matrix() * c(0.0, -1.0)
    }

    /// Recovers a channel from 2x2 Hermitian `Omega` and `Gamma`.
    pub fn from_matrices(omega: &CMatrix, gamma: &CMatrix) -> SpecResult<Self> {
        let w = pauli_decompose(omega);
        let g = pauli_decompose(gamma);
        Self::new(w[0].re, [w[1].re, w[2].re, w[3].re], g[0].re, [g[1].re, g[2].re, g[3].re])
    }
}

fn polar(v: [f64; 3]) -> (f64, f64, f64) {
    let r = norm3(v);
    if r == 0.0 {
        return (0.0, 0.0, 0.0);
    }
    ((r), (v[2] / r).clamp(-1.0, 1.0).acos(), v[1].atan2(v[0]))
}

/// Thermal spec of a two-mode channel at mean photon number `n_thermal`.
pub fn assemble_two_mode(ch: &TwoModeChannel, n_thermal: f64) -> SpecResult<SystemSpec> {
    SystemSpec::thermal(ch.omega_matrix(), ch.gamma_matrix(), n_thermal)
}

/// Complex matrix as rows of `[re, im]` pairs.
pub type JsonMatrix = Vec<Vec<[f64; 2]>>;

fn matrix_from_json(m: &JsonMatrix) -> CMatrix {
    let rows = m.len();
    let cols = m.first().map_or(0, Vec::len);
    CMatrix::from_fn(rows, cols, |i, j| {
        m[i].get(j).map_or(c(f64::NAN, f64::NAN), |p| c(p[0], p[1]))
    })
}

pub fn matrix_to_json(m: &CMatrix) -> JsonMatrix {
    (0..m.nrows())
        .map(|i| (0..m.ncols()).map(|j| [m[(i, j)].re, m[(i, j)].im]).collect())
        .collect()
}

/// Serialized system description accepted by the command-line tool.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum SpecConfig {
    Thermal {
        omega: JsonMatrix,
        gamma: JsonMatrix,
        #[serde(rename = "n_T")]
        n_thermal: f64,
    },
    General {
        omega: JsonMatrix,
        gamma_plus: JsonMatrix,
        gamma_minus: JsonMatrix,
    },
    TwoMode {
        omega0: f64,
        omega: [f64; 3],
        gamma0: f64,
        gamma: [f64; 3],
        #[serde(rename = "n_T", default)]
        n_thermal: f64,
    },
}

impl SpecConfig {
    pub fn to_spec(&self) -> SpecResult<SystemSpec> {
        match self {
            Self::Thermal { omega, gamma, n_thermal } => {
                SystemSpec::thermal(matrix_from_json(omega), matrix_from_json(gamma), *n_thermal)
            }
            Self::General {
                omega,
                gamma_plus,
                gamma_minus,
            } => validate_spec(
                matrix_from_json(omega),
                matrix_from_json(gamma_plus),
                matrix_from_json(gamma_minus),
            ),
            Self::TwoMode { n_thermal, .. } => assemble_two_mode(&self.channel().expect("two-mode variant")?, *n_thermal),
        }
    }

    /// The channel, when the config uses the two-mode form.
    pub fn channel(&self) -> Option<SpecResult<TwoModeChannel>> {
        match *self {
            Self::TwoMode {
                omega0,
                omega,
                gamma0,
                gamma,
                ..
            } => Some(TwoModeChannel::new(omega0, omega, gamma0, gamma)),
            _ => None,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::f64::consts::PI;

    fn diag(a: f64, b: f64) -> CMatrix {
        CMatrix::from_row_slice(2, 2, &[c(a, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(b, 0.0)])
    }

    #[test]
    fn thermal_spec_is_valid_general_spec() {
        let s = validate_spec(diag(1.0, -1.0), diag(0.1, 0.1), diag(1.1, 1.1)).unwrap();
        assert!(matkernel::max_abs(&(s.gamma() - diag(1.0, 1.0))) < 1e-15);
        assert_eq!(s.n_modes(), 2);
    }

    #[test]
    fn equal_rates_rejected() {
        let err = validate_spec(diag(1.0, -1.0), diag(0.5, 0.5), diag(0.5, 0.5)).unwrap_err();
        let SpecError::Invalid(v) = err else { panic!() };
        assert!(v
            .iter()
            .any(|x| matches!(x, Violation::NotPositiveDefinite { name: "gamma_minus - gamma_plus", .. })));
    }

    #[test]
    fn non_hermitian_omega_rejected() {
        let mut w = diag(1.0, -1.0);
        w[(0, 1)] = c(0.3, 0.0);
        w[(1, 0)] = c(0.2, 0.0);
        let SpecError::Invalid(v) = validate_spec(w, diag(0.1, 0.1), diag(1.1, 1.1)).unwrap_err() else {
            panic!()
        };
        assert!(matches!(v[0], Violation::NotHermitian { name: "omega", .. }));
    }

    #[test]
    fn zero_plus_rate_only_through_thermal_path() {
        assert!(validate_spec(diag(0.0, 0.0), diag(0.0, 0.0), diag(1.0, 1.0)).is_err());
        let s = SystemSpec::thermal(diag(0.0, 0.0), diag(1.0, 1.0), 0.0).unwrap();
        assert_eq!(s.gamma_plus(), &CMatrix::zeros(2, 2));
    }

    #[test]
    fn thermal_rate_values() {
        let r = thermal_rates(0.0).unwrap();
        assert_eq!((r.gamma_plus_coef, r.gamma_minus_coef, r.gamma_zero_coef), (0.0, 1.0, -1.0));
        assert_eq!((r.partition, r.boltzmann), (1.0, 0.0));
        assert!(r.z_thermal.is_infinite());
        let r = thermal_rates(1.0).unwrap();
        assert_eq!((r.gamma_plus_coef, r.gamma_minus_coef, r.gamma_zero_coef), (1.0, 2.0, -3.0));
        assert_eq!((r.partition, r.boltzmann), (2.0, 0.5));
        let r = thermal_rates(0.3).unwrap();
        assert!((r.gamma_zero_coef + 1.6).abs() < 1e-15);
        assert!((r.partition - 1.3).abs() < 1e-15);
        assert!((1.0 / (1.0 - (-r.z_thermal).exp()) - r.partition).abs() < 1e-14);
        assert!(thermal_rates(-0.1).is_err());
    }

    #[test]
    fn tilt_channel_matrices() {
        let ch = TwoModeChannel::new(0.0, [0.0, 0.0, 0.9], 1.0, [0.9, 0.0, 0.0]).unwrap();
        assert!(matkernel::max_abs(&(ch.omega_matrix() - diag(0.9, -0.9))) < 1e-15);
        let g = CMatrix::from_row_slice(2, 2, &[c(1.0, 0.0), c(0.9, 0.0), c(0.9, 0.0), c(1.0, 0.0)]);
        assert!(matkernel::max_abs(&(ch.gamma_matrix() - g)) < 1e-15);
        let spec = assemble_two_mode(&ch, 0.2).unwrap();
        assert!(matkernel::max_abs(&(spec.h_matrix() - ch.h_matrix())) < 1e-15);
    }

    #[test]
    fn isotropic_channel() {
        let ch = TwoModeChannel::new(0.4, [0.0; 3], 1.0, [0.0; 3]).unwrap();
        let want = pauli()[0].clone() * c(0.4, -1.0);
        assert!(matkernel::max_abs(&(ch.h_matrix() - want)) < 1e-15);
    }

    #[test]
    fn angular_formula() {
        let a = AngularChannel {
            omega0: 0.0,
            omega: 0.0,
            theta_omega: 0.0,
            phi_omega: 0.0,
            gamma0: 1.0,
            gamma: 0.9,
            theta_gamma: PI / 4.0,
            phi_gamma: 0.0,
        };
        let ch = TwoModeChannel::from_angular(a).unwrap();
        let h = 0.9 * std::f64::consts::FRAC_1_SQRT_2;
        assert!((ch.gamma_vec[0] - h).abs() < 1e-15 && ch.gamma_vec[1].abs() < 1e-15);
        assert!((ch.gamma_vec[2] - h).abs() < 1e-15);
    }

    #[test]
    fn boundary_channel_rejected() {
        assert!(matches!(
            TwoModeChannel::new(0.0, [0.0; 3], 1.0, [1.0, 0.0, 0.0]),
            Err(SpecError::NotDissipative { .. })
        ));
    }

    #[test]
    fn json_round_trip() {
        let text = r#"{"two_mode": {"omega0": 0.0, "omega": [0,0,0.9], "gamma0": 1.0, "gamma": [0.9,0,0], "n_T": 0.1}}"#;
        let cfg: SpecConfig = serde_json::from_str(text).unwrap();
        let spec = cfg.to_spec().unwrap();
        assert_eq!(spec.n_thermal(), Some(0.1));
        let text = r#"{"thermal": {"omega": [[[1,0],[0,0]],[[0,0],[-1,0]]], "gamma": [[[1,0],[0,0]],[[0,0],[1,0]]], "n_T": 0.0}}"#;
        let cfg: SpecConfig = serde_json::from_str(text).unwrap();
        assert!(cfg.to_spec().is_ok());
        let back: SpecConfig = serde_json::from_str(&serde_json::to_string(&cfg).unwrap()).unwrap();
        assert_eq!(back, cfg);
        let ragged = r#"{"general": {"omega": [[[1,0]],[[0,0],[1,0]]], "gamma_plus": [[[1,0]]], "gamma_minus": [[[1,0]]]}}"#;
        let cfg: SpecConfig = serde_json::from_str(ragged).unwrap();
        assert!(cfg.to_spec().is_err());
    }

    proptest! {
        #[test]
        fn drift_matrix_identity(
            w in proptest::array::uniform3(-2.0..2.0f64),
            g in proptest::array::uniform3(-0.5..0.5f64),
            w0 in -1.0..1.0f64,
            n in 0.0..2.0f64,
        ) {
            let ch = TwoModeChannel::new(w0, w, 1.0, g).unwrap();
            let s = assemble_two_mode(&ch, n).unwrap();
            let l = s.l_matrix();
            let res = &l + l.adjoint() + s.gamma() * c(2.0, 0.0);
            prop_assert!(matkernel::max_abs(&res) < 1e-14);
            let back = TwoModeChannel::from_matrices(&ch.omega_matrix(), &ch.gamma_matrix()).unwrap();
            prop_assert!((back.omega0 - w0).abs() < 1e-12);
            for k in 0..3 {
                prop_assert!((back.omega_vec[k] - w[k]).abs() < 1e-12);
                prop_assert!((back.gamma_vec[k] - g[k]).abs() < 1e-12);
            }
        }

        #[test]
        fn angular_round_trip(
            w in proptest::array::uniform3(-2.0..2.0f64),
            g in proptest::array::uniform3(-0.5..0.5f64),
        ) {
            let ch = TwoModeChannel::new(0.3, w, 1.0, g).unwrap();
            let back = TwoModeChannel::from_angular(ch.to_angular()).unwrap();
            for k in 0..3 {
                prop_assert!((back.omega_vec[k] - w[k]).abs() < 1e-12);
                prop_assert!((back.gamma_vec[k] - g[k]).abs() < 1e-12);
            }
        }
    }
}
