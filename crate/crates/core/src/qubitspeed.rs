//! Polarization-qubit dynamics: zero-temperature state and speed, the
//! first-order thermal correction, fidelity and the fidelity-based speed
//! limit time.
//!
//! Every operator lives in the six-state sector of two modes with at most
//! two photons. A single-photon initial state never leaves that sector under
//! `rho_0 + n_T rho_1`, so the traces below carry no truncation error.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::fockspace::{self, FockSpace};
use crate::matkernel::{self, c, CMatrix, CVector};
use crate::model::{cross3, dot3, pauli_combination, unit_vector, SpecResult, TwoModeChannel};
use crate::spectral::TwoModePropagator;

/// Pure single-photon polarization state
/// `cos(theta/2)|1_H,0_V> + e^{i phi} sin(theta/2)|0_H,1_V>`.
#[derive(Debug, Clone, PartialEq)]
pub struct QubitState {
    pub theta: f64,
    pub phi: f64,
    /// Bloch vector `(sin theta cos phi, sin theta sin phi, cos theta)`.
    pub n_vec: [f64; 3],
    /// `(sigma_0 + n . sigma) / 2`.
    pub r0: CMatrix,
}

impl QubitState {
    /// Mode amplitudes of the photon.
    pub fn amplitudes(&self) -> [Complex64; 2] {
        let (h, v) = ((self.theta / 2.0).cos(), (self.theta / 2.0).sin());
        [c(h, 0.0), Complex64::from_polar(v, self.phi)]
    }
}

pub fn initial_qubit(theta: f64, phi: f64) -> QubitState {
    let n_vec = unit_vector(theta, phi);
    QubitState {
        theta,
        phi,
        n_vec,
        r0: pauli_combination(0.5, n_vec.map(|x| 0.5 * x)),
    }
}

/// `R_1 = L R_0 + R_0 L^dagger` from the channel vectors.
pub fn r1_closed_form(ch: &TwoModeChannel, qubit: &QubitState) -> CMatrix {
    let n = qubit.n_vec;
    let w_x_n = cross3(ch.omega_vec, n);
    let vector = [0, 1, 2].map(|k| w_x_n[k] - ch.gamma_vec[k] - ch.gamma0 * n[k]);
    pauli_combination(-(ch.gamma0 + dot3(ch.gamma_vec, n)), vector)
}

/// The two-mode sector with at most two photons, with `K+_A X` and the vacuum.
struct Sector {
    fs: FockSpace,
    ladders: Vec<(CMatrix, CMatrix)>,
    vacuum: CMatrix,
}

impl Sector {
    fn new() -> Self {
        let fs = FockSpace::photon_capped(2, 2).expect("valid truncation");
        let ladders = (0..2).map(|k| fockspace::ladder(&fs, k).expect("mode in range")).collect();
        let vacuum = fs.projector(&[0, 0], &[0, 0]).expect("vacuum is in the sector");
        Self { fs, ladders, vacuum }
    }

    /// `K+_A X = sum A_nm a_n^dagger X a_m`.
    fn raise(&self, a: &CMatrix, x: &CMatrix) -> CMatrix {
        let mut out = CMatrix::zeros(x.nrows(), x.ncols());
        for n in 0..2 {
            for m in 0..2 {
                if a[(n, m)] != c(0.0, 0.0) {
                    out += &self.ladders[n].1 * x * &self.ladders[m].0 * a[(n, m)];
                }
            }
        }
        out
    }

    /// `(K+_A + s)|0><0|`.
    fn one_photon(&self, a: &CMatrix, s: f64) -> CMatrix {
        self.raise(a, &self.vacuum) + &self.vacuum * c(s, 0.0)
    }

    /// `K+_A K+_B |0><0|`.
    fn two_photon(&self, a: &CMatrix, b: &CMatrix) -> CMatrix {
        self.raise(a, &self.raise(b, &self.vacuum))
    }
}

fn real_trace(a: &CMatrix) -> f64 {
    a.trace().re
}

/// `R`, `r`, and the zero-temperature density matrix at one time.
#[derive(Debug, Clone)]
pub struct ZeroTempState {
    /// `P R_0 P^dagger`.
    pub r_mat: CMatrix,
    /// `1 - Tr R`, the vacuum population.
    pub r: f64,
    /// `(K+_R + r)|0><0|` in the two-photon sector basis.
    pub rho: CMatrix,
}

/// First-order thermal correction at one time.
#[derive(Debug, Clone)]
pub struct FirstOrderState {
    pub q_mat: CMatrix,
    /// `Q - Q Tr R - R Tr Q - {R, Q}`.
    pub v_mat: CMatrix,
    /// `Tr(RQ) + Tr R Tr Q - Tr Q`.
    pub v: f64,
    /// `(K+_Q K+_R + K+_V + v)|0><0|`.
    pub rho1: CMatrix,
    /// `d rho_1 / dt`.
    pub v1_op: CMatrix,
}

/// Matrices and their time derivatives at one instant.
struct Kinematics {
    r: CMatrix,
    r_dot: CMatrix,
    q: CMatrix,
    q_dot: CMatrix,
}

/// Evaluator for one channel and one initial qubit.
pub struct QubitDynamics {
    channel: TwoModeChannel,
    qubit: QubitState,
    propagator: TwoModePropagator,
    r1: CMatrix,
    gamma: CMatrix,
    sector: Sector,
    psi: CVector,
}

impl QubitDynamics {
    pub fn new(channel: &TwoModeChannel, qubit: &QubitState) -> Self {
        let sector = Sector::new();
        let [h, v] = qubit.amplitudes();
        let psi = sector.fs.ket(&[1, 0]).expect("in sector") * h + sector.fs.ket(&[0, 1]).expect("in sector") * v;
        Self {
            channel: *channel,
            qubit: qubit.clone(),
            propagator: TwoModePropagator::new(channel),
            r1: r1_closed_form(channel, qubit),
            gamma: channel.gamma_matrix(),
            sector,
            psi,
        }
    }

    pub fn channel(&self) -> &TwoModeChannel {
        &self.channel
    }

    pub fn qubit(&self) -> &QubitState {
        &self.qubit
    }

    /// Basis of the six-state sector the operators are expressed in.
    pub fn fock_space(&self) -> &FockSpace {
        &self.sector.fs
    }

    /// `|psi_0><psi_0|` in the sector basis.
    pub fn initial_density(&self) -> CMatrix {
        &self.psi * self.psi.adjoint()
    }

    fn kinematics(&self, t: f64) -> Kinematics {
        let p = self.propagator.at(t);
        let pd = p.adjoint();
        let q = matkernel::identity(2) - &p * &pd;
        Kinematics {
            r: &p * &self.qubit.r0 * &pd,
            r_dot: &p * &self.r1 * &pd,
            q: (&q + q.adjoint()) * c(0.5, 0.0),
            q_dot: &p * &self.gamma * &pd * c(2.0, 0.0),
        }
    }

    pub fn zero_temp_state(&self, t: f64) -> ZeroTempState {
        let k = self.kinematics(t);
        let r = 1.0 - real_trace(&k.r);
        ZeroTempState {
            rho: self.sector.one_photon(&k.r, r),
            r_mat: k.r,
            r,
        }
    }

    /// `v_0 = d rho_0 / dt = (K+_{R'} + r')|0><0|` with `r' = -Tr R'`.
    pub fn v0_operator(&self, t: f64) -> CMatrix {
        let k = self.kinematics(t);
        self.sector.one_photon(&k.r_dot, -real_trace(&k.r_dot))
    }

    /// `sqrt(Tr R'^2 + r'^2)`.
    pub fn v0_speed(&self, t: f64) -> f64 {
        let rd = self.kinematics(t).r_dot;
        let tr = real_trace(&rd);
        ((&rd * &rd).trace().re + tr * tr).max(0.0).sqrt()
    }

    pub fn first_order_state(&self, t: f64) -> FirstOrderState {
        let Kinematics { r, r_dot, q, q_dot } = self.kinematics(t);
        let (tr_r, tr_q) = (real_trace(&r), real_trace(&q));
        let (tr_rd, tr_qd) = (real_trace(&r_dot), real_trace(&q_dot));
        let v_mat = &q * c(1.0 - tr_r, 0.0) - &r * c(tr_q, 0.0) - matkernel::anticommutator(&r, &q);
        let v = (&r * &q).trace().re + tr_r * tr_q - tr_q;
        let v_dot_mat = &q_dot * c(1.0 - tr_r, 0.0) - &q * c(tr_rd, 0.0) - &r_dot * c(tr_q, 0.0) - &r * c(tr_qd, 0.0)
            - matkernel::anticommutator(&r_dot, &q)
            - matkernel::anticommutator(&r, &q_dot);
        let v_dot = (&r_dot * &q + &r * &q_dot).trace().re + tr_rd * tr_q + tr_r * tr_qd - tr_qd;
        let s = &self.sector;
        FirstOrderState {
            rho1: s.two_photon(&q, &r) + s.one_photon(&v_mat, v),
            v1_op: s.two_photon(&q_dot, &r) + s.two_photon(&q, &r_dot) + s.one_photon(&v_dot_mat, v_dot),
            q_mat: q,
            v_mat,
            v,
        }
    }

    /// `rho_0(t) + n_T rho_1(t)`.
    pub fn density(&self, n_thermal: f64, t: f64) -> CMatrix {
        let rho0 = self.zero_temp_state(t).rho;
        if n_thermal == 0.0 {
            return rho0;
        }
        rho0 + self.first_order_state(t).rho1 * c(n_thermal, 0.0)
    }

    /// `|| v_0 + n_T v_1 ||_2`.
    pub fn total_speed(&self, n_thermal: f64, t: f64) -> f64 {
        let v0 = self.v0_operator(t);
        if n_thermal == 0.0 {
            return matkernel::hs_norm(&v0);
        }
        matkernel::hs_norm(&(v0 + self.first_order_state(t).v1_op * c(n_thermal, 0.0)))
    }

    /// `<psi_0| rho(t) |psi_0>`.
    pub fn fidelity(&self, n_thermal: f64, t: f64) -> f64 {
        let rho = self.density(n_thermal, t);
        (self.psi.adjoint() * rho * &self.psi)[(0, 0)].re
    }

    /// Speed, fidelity and speed limit time on a time grid.
    pub fn trace(&self, n_thermal: f64, times: &[f64]) -> Result<SpeedTrace, GridError> {
        check_grid(times)?;
        let v0: Vec<f64> = times.iter().map(|&t| self.v0_speed(t)).collect();
        let v: Vec<f64> = times.iter().map(|&t| self.total_speed(n_thermal, t)).collect();
        let fidelity: Vec<f64> = times.iter().map(|&t| self.fidelity(n_thermal, t)).collect();
        let mut t_f = Vec::with_capacity(times.len());
        let mut area = 0.0;
        for k in 0..times.len() {
            if k > 0 {
                area += 0.5 * (v[k] + v[k - 1]) * (times[k] - times[k - 1]);
            }
            // t_F = (1 - F) / <v>_t = t (1 - F) / int_0^t v.
            let loss = 1.0 - fidelity[k];
            t_f.push(if times[k] == 0.0 || loss == 0.0 { 0.0 } else { times[k] * loss / area });
        }
        Ok(SpeedTrace {
            times: times.to_vec(),
            v0,
            v,
            fidelity,
            t_f,
            channel: self.channel,
            n_thermal,
            theta: self.qubit.theta,
            phi: self.qubit.phi,
        })
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum GridError {
    #[error("time grid is empty")]
    Empty,
    #[error("time grid must start at 0, got {0}")]
    Start(f64),
    #[error("time grid must be strictly increasing and finite")]
    NotMonotone,
}

fn check_grid(times: &[f64]) -> Result<(), GridError> {
    let first = *times.first().ok_or(GridError::Empty)?;
    if first != 0.0 {
        return Err(GridError::Start(first));
    }
    if !times.windows(2).all(|w| w[1] > w[0]) || !times.iter().all(|t| t.is_finite()) {
        return Err(GridError::NotMonotone);
    }
    Ok(())
}

/// Time series of the evolution speed and the fidelity-based limit.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpeedTrace {
    /// In units of `1 / gamma0` when `gamma0 = 1`.
    pub times: Vec<f64>,
    pub v0: Vec<f64>,
    pub v: Vec<f64>,
    pub fidelity: Vec<f64>,
    pub t_f: Vec<f64>,
    pub channel: TwoModeChannel,
    pub n_thermal: f64,
    pub theta: f64,
    pub phi: f64,
}

pub fn zero_temp_state(ch: &TwoModeChannel, qubit: &QubitState, t: f64) -> ZeroTempState {
    QubitDynamics::new(ch, qubit).zero_temp_state(t)
}

pub fn v0_speed(ch: &TwoModeChannel, qubit: &QubitState, t: f64) -> f64 {
    QubitDynamics::new(ch, qubit).v0_speed(t)
}

pub fn first_order_state(ch: &TwoModeChannel, qubit: &QubitState, t: f64) -> FirstOrderState {
    QubitDynamics::new(ch, qubit).first_order_state(t)
}

pub fn total_speed(ch: &TwoModeChannel, qubit: &QubitState, n_thermal: f64, t: f64) -> f64 {
    QubitDynamics::new(ch, qubit).total_speed(n_thermal, t)
}

pub fn fidelity_qsl(ch: &TwoModeChannel, qubit: &QubitState, n_thermal: f64, times: &[f64]) -> Result<SpeedTrace, GridError> {
    QubitDynamics::new(ch, qubit).trace(n_thermal, times)
}

/// Traces for every channel and every `n_T`, channel-major, computed in
/// parallel and returned in input order.
pub fn sweep(
    channels: &[TwoModeChannel],
    qubit: &QubitState,
    n_thermal: &[f64],
    times: &[f64],
) -> Result<Vec<SpeedTrace>, GridError> {
    check_grid(times)?;
    let jobs: Vec<(TwoModeChannel, f64)> = channels
        .iter()
        .flat_map(|ch| n_thermal.iter().map(move |&n| (*ch, n)))
        .collect();
    jobs.par_iter()
        .map(|(ch, n)| fidelity_qsl(ch, qubit, *n, times))
        .collect()
}

/// Temperatures drawn as solid, dashed and dot-dashed curves.
pub const REFERENCE_TEMPERATURES: [f64; 3] = [0.0, 0.1, 0.3];

/// `omega = 0.9 gamma0 (0, 0, 1)`, `gamma = 0.9 gamma0 (sin t, 0, cos t)`.
pub fn relaxation_tilt_channel(gamma0: f64, theta_gamma: f64) -> SpecResult<TwoModeChannel> {
    let g = 0.9 * gamma0;
    TwoModeChannel::new(0.0, [0.0, 0.0, g], gamma0, [g * theta_gamma.sin(), 0.0, g * theta_gamma.cos()])
}

/// Tilts `theta_Gamma` of the reference channels: pi/2, pi/4, 0.
pub const TILT_ANGLES: [f64; 3] = [std::f64::consts::FRAC_PI_2, std::f64::consts::FRAC_PI_4, 0.0];

pub fn tilt_family(gamma0: f64) -> Vec<TwoModeChannel> {
    TILT_ANGLES
        .iter()
        .map(|&th| relaxation_tilt_channel(gamma0, th).expect("|gamma| = 0.9 gamma0"))
        .collect()
}

/// `omega = (0, 0, w)`, `gamma = (0.9 gamma0, 0, 0)`.
pub fn ep_slice_channel(gamma0: f64, omega: f64) -> SpecResult<TwoModeChannel> {
    TwoModeChannel::new(0.0, [0.0, 0.0, omega], gamma0, [0.9 * gamma0, 0.0, 0.0])
}

/// `omega` in `{0, gamma, 3 gamma}`: below, at and above the exceptional point.
pub fn ep_family(gamma0: f64) -> Vec<TwoModeChannel> {
    let g = 0.9 * gamma0;
    [0.0, g, 3.0 * g]
        .iter()
        .map(|&w| ep_slice_channel(gamma0, w).expect("|gamma| = 0.9 gamma0"))
        .collect()
}

/// Reference polarization qubit: `theta = pi/4`, `phi = 0`.
pub fn reference_qubit() -> QubitState {
    initial_qubit(std::f64::consts::FRAC_PI_4, 0.0)
}

/// One point of a speed surface over time and polarization azimuth.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SurfacePoint {
    pub t: f64,
    pub theta: f64,
    pub v: f64,
}

/// Speed over the `(t, theta)` plane at `phi = 0`, theta-major.
pub fn speed_surface(ch: &TwoModeChannel, n_thermal: f64, times: &[f64], thetas: &[f64]) -> Vec<SurfacePoint> {
    thetas
        .par_iter()
        .map(|&theta| {
            let dynamics = QubitDynamics::new(ch, &initial_qubit(theta, 0.0));
            times
                .iter()
                .map(|&t| SurfacePoint {
                    t,
                    theta,
                    v: dynamics.total_speed(n_thermal, t),
                })
                .collect::<Vec<_>>()
        })
        .collect::<Vec<_>>()
        .into_iter()
        .flatten()
        .collect()
}
