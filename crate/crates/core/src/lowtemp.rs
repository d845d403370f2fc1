//! First-order low-temperature propagation of thermal Liouvillians.
//!
//! A thermal Liouvillian splits as `L = L_0 + n_T Delta_{2 Gamma}` with
//! `Delta_A = K+_A - 2 K0_A + K-_A`. Up to `O(n_T^2)`,
//! `e^{L t} = (1 + n_T U_1(t)) e^{L_0 t}` with `U_1(t) = Delta_{Q(t)}` and
//! `Q(t) = I - P(t) P(t)^dagger`, `P(t) = e^{L t}` on the mode space.
//!
//! The zero-temperature propagator is applied as
//! `e^{-K-_I} (G . G^dagger) e^{K-_I}` with `G` the second quantization of
//! `P(t)`. Lowering and the photon-number preserving `G` are exact on every
//! complete photon sector, so `rho_0(t)` carries no truncation error and
//! `rho_1(t)` only needs one photon of margin above the initial support.

use thiserror::Error;

use crate::fockspace::{self, FockError, FockSpace, SuperOpKind, SuperOpMatrix};
use crate::matkernel::{self, c, CMatrix, KernelError};
use crate::model::SystemSpec;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LowTempError {
    #[error("low-temperature expansion needs a thermal-bath spec")]
    NotThermal,
    #[error("evolution time must be nonnegative, got {0}")]
    NegativeTime(f64),
    #[error("initial operator reaches {support} photons; this cutoff allows at most {limit}")]
    Margin { support: usize, limit: usize },
    #[error(transparent)]
    Kernel(#[from] KernelError),
    #[error(transparent)]
    Fock(#[from] FockError),
}

pub type LowTempResult<T> = Result<T, LowTempError>;

fn check_time(t: f64) -> LowTempResult<()> {
    if t >= 0.0 && t.is_finite() {
        Ok(())
    } else {
        Err(LowTempError::NegativeTime(t))
    }
}

/// `Q(t) = I - e^{L t} e^{L^dagger t}`.
pub fn q_matrix(spec: &SystemSpec, t: f64) -> LowTempResult<CMatrix> {
    check_time(t)?;
    let p = matkernel::expm(&(spec.l_matrix() * c(t, 0.0)))?;
    let q = matkernel::identity(spec.n_modes()) - &p * p.adjoint();
    Ok((&q + q.adjoint()) * c(0.5, 0.0))
}

/// `dQ/dt = 2 P(t) Gamma P(t)^dagger`.
pub fn q_matrix_rate(spec: &SystemSpec, t: f64) -> LowTempResult<CMatrix> {
    check_time(t)?;
    let p = matkernel::expm(&(spec.l_matrix() * c(t, 0.0)))?;
    Ok(&p * spec.gamma() * p.adjoint() * c(2.0, 0.0))
}

/// `Delta_A = K+_A - 2 K0_A + K-_A`.
pub fn thermal_difference(fs: &FockSpace, a: &CMatrix) -> LowTempResult<SuperOpMatrix> {
    let kp = fockspace::superop_assoc(fs, SuperOpKind::KPlus, a)?;
    let k0 = fockspace::superop_assoc(fs, SuperOpKind::K0, a)?;
    let km = fockspace::superop_assoc(fs, SuperOpKind::KMinus, a)?;
    Ok(&(&kp + &km) - &(&k0 * 2.0))
}

/// `U_1(t) = Delta_{Q(t)}`.
pub fn u1_superop(fs: &FockSpace, spec: &SystemSpec, t: f64) -> LowTempResult<SuperOpMatrix> {
    thermal_difference(fs, &q_matrix(spec, t)?)
}

/// Zero-temperature propagator of a spec, in either time direction.
pub struct ZeroTemperature<'a> {
    fs: &'a FockSpace,
    k_minus: SuperOpMatrix,
    l: CMatrix,
}

impl<'a> ZeroTemperature<'a> {
    pub fn new(fs: &'a FockSpace, spec: &SystemSpec) -> LowTempResult<Self> {
        if spec.n_modes() != fs.n_modes() {
            return Err(FockError::ModeMismatch {
                spec: spec.n_modes(),
                space: fs.n_modes(),
            }
            .into());
        }
        Ok(Self {
            fs,
            k_minus: fockspace::superop_assoc(fs, SuperOpKind::KMinus, &matkernel::identity(fs.n_modes()))?,
            l: spec.l_matrix(),
        })
    }

    /// `e^{L_0 t} rho`; negative `t` runs the similarity backwards, which is
    /// only meaningful on operators inside the complete sectors.
    pub fn apply(&self, rho: &CMatrix, t: f64) -> LowTempResult<CMatrix> {
        let d = self.fs.dim();
        let lift = |x: &CMatrix, sign: f64| -> LowTempResult<CMatrix> {
            let v = CMatrix::from_column_slice(d * d, 1, matkernel::vec_rows(x).as_slice());
            let out = self.k_minus.exp_nilpotent_columns(c(sign, 0.0), &v)?;
            Ok(matkernel::unvec_rows(&out.column(0).into_owned(), d, d))
        };
        let g = fockspace::second_quantize(self.fs, &matkernel::expm(&(&self.l * c(t, 0.0)))?)?;
        let raised = lift(rho, 1.0)?;
        lift(&(&g * raised * g.adjoint()), -1.0)
    }
}

/// Largest total photon number carried by a nonzero matrix element.
fn photon_support(fs: &FockSpace, rho: &CMatrix) -> usize {
    let mut top = 0;
    for j in 0..rho.ncols() {
        for i in 0..rho.nrows() {
            if rho[(i, j)] != c(0.0, 0.0) {
                top = top.max(fs.total_photons(i)).max(fs.total_photons(j));
            }
        }
    }
    top
}

fn check_margin(fs: &FockSpace, rho: &CMatrix) -> LowTempResult<()> {
    let d = fs.dim();
    if rho.shape() != (d, d) {
        return Err(FockError::OperatorShape {
            rows: rho.nrows(),
            cols: rho.ncols(),
            dim: d,
        }
        .into());
    }
    matkernel::check_finite(rho)?;
    let support = photon_support(fs, rho);
    let limit = fs.complete_sectors().saturating_sub(1);
    if support > limit {
        return Err(LowTempError::Margin { support, limit });
    }
    Ok(())
}

/// `U_1(t)` through its commutator form
/// `C - e^{L_0 t} C e^{-L_0 t}` with `C = K+_I - K-_I`, applied to `rho`.
pub fn u1_commutator_apply(fs: &FockSpace, spec: &SystemSpec, t: f64, rho: &CMatrix) -> LowTempResult<CMatrix> {
    check_time(t)?;
    check_margin(fs, rho)?;
    let zt = ZeroTemperature::new(fs, spec)?;
    let eye = matkernel::identity(fs.n_modes());
    let comm = &fockspace::superop_assoc(fs, SuperOpKind::KPlus, &eye)?
        - &fockspace::superop_assoc(fs, SuperOpKind::KMinus, &eye)?;
    let back = zt.apply(rho, -t)?;
    Ok(comm.apply(rho) - zt.apply(&comm.apply(&back), t)?)
}

/// Max difference between the two constructions of `U_1(t)` over the
/// Liouville basis operators that leave one photon of margin.
pub fn u1_construction_gap(fs: &FockSpace, spec: &SystemSpec, t: f64) -> LowTempResult<f64> {
    let limit = fs.complete_sectors().saturating_sub(1);
    let u1 = u1_superop(fs, spec, t)?;
    let d = fs.dim();
    let states = fs.states_up_to(limit);
    let mut gap: f64 = 0.0;
    for &i in &states {
        for &j in &states {
            let mut e = CMatrix::zeros(d, d);
            e[(i, j)] = c(1.0, 0.0);
            let diff = u1.apply(&e) - u1_commutator_apply(fs, spec, t, &e)?;
            gap = gap.max(matkernel::max_abs(&diff));
        }
    }
    Ok(gap)
}

/// Zero-temperature evolution and its first-order thermal correction.
#[derive(Debug, Clone)]
pub struct FirstOrder {
    pub rho0_t: CMatrix,
    pub rho1_t: CMatrix,
}

impl FirstOrder {
    /// `rho_0(t) + n_T rho_1(t)`.
    pub fn combine(&self, n_thermal: f64) -> CMatrix {
        &self.rho0_t + &self.rho1_t * c(n_thermal, 0.0)
    }
}

/// `rho_0(t) = e^{L_0 t} rho0` and `rho_1(t) = U_1(t) rho_0(t)`.
pub fn approx_propagate(fs: &FockSpace, spec: &SystemSpec, rho0: &CMatrix, t: f64) -> LowTempResult<FirstOrder> {
    if spec.n_thermal().is_none() {
        return Err(LowTempError::NotThermal);
    }
    check_time(t)?;
    check_margin(fs, rho0)?;
    let rho0_t = ZeroTemperature::new(fs, spec)?.apply(rho0, t)?;
    let rho1_t = u1_superop(fs, spec, t)?.apply(&rho0_t);
    Ok(FirstOrder { rho0_t, rho1_t })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{assemble_two_mode, TwoModeChannel};
    use crate::sampling;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn tilt_a(n_thermal: f64) -> SystemSpec {
        let ch = TwoModeChannel::new(0.0, [0.0, 0.0, 0.9], 1.0, [0.9, 0.0, 0.0]).unwrap();
        assemble_two_mode(&ch, n_thermal).unwrap()
    }

    fn qubit_state(fs: &FockSpace) -> CMatrix {
        let s = std::f64::consts::FRAC_PI_8;
        let psi = fs.ket(&[1, 0]).unwrap() * c(s.cos(), 0.0) + fs.ket(&[0, 1]).unwrap() * c(s.sin(), 0.0);
        &psi * psi.adjoint()
    }

    #[test]
    fn q_matrix_limits_and_rate() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let spec = sampling::thermal_spec(&mut rng, 3, 0.1);
        assert!(matkernel::max_abs(&q_matrix(&spec, 0.0).unwrap()) < 1e-15);
        let late = q_matrix(&spec, 80.0).unwrap();
        assert!(matkernel::max_abs(&(late - matkernel::identity(3))) < 1e-12);
        for t in [0.0, 0.3, 1.7] {
            let q = q_matrix(&spec, t).unwrap();
            for w in matkernel::eigenvalues(&q).unwrap() {
                assert!(w.re > -1e-12 && w.re < 1.0 + 1e-12 && w.im.abs() < 1e-12);
            }
            let h = 1e-5;
            let at = |x: f64| q_matrix(&spec, x).unwrap();
            // Second-order one-sided difference at the origin, central elsewhere.
            let fd = if t == 0.0 {
                (at(h) * c(4.0, 0.0) - at(2.0 * h) - &q * c(3.0, 0.0)) * c(0.5 / h, 0.0)
            } else {
                (at(t + h) - at(t - h)) * c(0.5 / h, 0.0)
            };
            let gap = matkernel::max_abs(&(fd - q_matrix_rate(&spec, t).unwrap()));
            assert!(gap < 1e-7, "t = {t}: {gap:e}");
        }
        assert!(matches!(q_matrix(&spec, -1.0), Err(LowTempError::NegativeTime(_))));
    }

    #[test]
    fn single_mode_q_is_scalar_decay() {
        let spec = SystemSpec::thermal(CMatrix::from_element(1, 1, c(0.4, 0.0)), CMatrix::from_element(1, 1, c(0.7, 0.0)), 0.2)
            .unwrap();
        let q = q_matrix(&spec, 1.3).unwrap();
        assert!((q[(0, 0)] - c(1.0 - (-2.0 * 0.7 * 1.3f64).exp(), 0.0)).norm() < 1e-14);
    }

    #[test]
    fn zero_temperature_propagator_matches_oracle() {
        let fs = FockSpace::new(2, 5).unwrap();
        let spec = tilt_a(0.0);
        let rho0 = qubit_state(&fs);
        let l = fockspace::build_liouvillian(&fs, &spec).unwrap();
        let zt = ZeroTemperature::new(&fs, &spec).unwrap();
        for t in [0.0, 0.5, 2.0] {
            let oracle = fockspace::oracle_propagate(&fs, &l, &rho0, t).unwrap().rho;
            assert!(matkernel::max_abs(&(zt.apply(&rho0, t).unwrap() - oracle)) < 1e-12);
        }
        let back = zt.apply(&zt.apply(&rho0, 1.0).unwrap(), -1.0).unwrap();
        assert!(matkernel::max_abs(&(back - rho0)) < 1e-12);
    }

    #[test]
    fn u1_vanishes_at_zero_time() {
        let fs = FockSpace::new(2, 4).unwrap();
        assert_eq!(u1_superop(&fs, &tilt_a(0.1), 0.0).unwrap().nnz(), 0);
    }

    #[test]
    fn u1_constructions_agree() {
        let fs = FockSpace::new(2, 4).unwrap();
        for t in [0.3, 1.0] {
            assert!(u1_construction_gap(&fs, &tilt_a(0.1), t).unwrap() < 1e-9);
        }
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let spec = sampling::thermal_spec(&mut rng, 2, 0.2);
        assert!(u1_construction_gap(&fs, &spec, 0.8).unwrap() < 1e-9);
    }

    #[test]
    fn vacuum_correction_pattern() {
        let fs = FockSpace::new(1, 4).unwrap();
        let spec = SystemSpec::thermal(CMatrix::from_element(1, 1, c(0.3, 0.0)), CMatrix::from_element(1, 1, c(0.5, 0.0)), 0.1)
            .unwrap();
        let vac = fs.projector(&[0], &[0]).unwrap();
        let t = 0.9;
        let out = approx_propagate(&fs, &spec, &vac, t).unwrap();
        let q = 1.0 - (-2.0 * 0.5 * t).exp();
        let want = (fs.projector(&[1], &[1]).unwrap() - &vac) * c(q, 0.0);
        assert!(matkernel::max_abs(&(out.rho0_t - &vac)) < 1e-15);
        assert!(matkernel::max_abs(&(out.rho1_t - want)) < 1e-14);
    }

    #[test]
    fn correction_is_traceless_and_hermitian() {
        let fs = FockSpace::new(2, 4).unwrap();
        let rho0 = qubit_state(&fs);
        for t in [0.2, 1.0, 3.0] {
            let out = approx_propagate(&fs, &tilt_a(0.05), &rho0, t).unwrap();
            assert!(out.rho1_t.trace().norm() < 1e-13);
            assert!(matkernel::is_hermitian(&out.rho1_t, 1e-13));
            assert!((out.rho0_t.trace() - c(1.0, 0.0)).norm() < 1e-13);
        }
    }

    #[test]
    fn zero_temperature_is_the_oracle() {
        let fs = FockSpace::new(2, 4).unwrap();
        let spec = tilt_a(0.0);
        let rho0 = qubit_state(&fs);
        let l = fockspace::build_liouvillian(&fs, &spec).unwrap();
        let out = approx_propagate(&fs, &spec, &rho0, 1.0).unwrap();
        let oracle = fockspace::oracle_propagate(&fs, &l, &rho0, 1.0).unwrap().rho;
        assert!(matkernel::max_abs(&(out.combine(0.0) - oracle)) < 1e-12);
    }

    #[test]
    fn second_order_error_scaling() {
        let fs = FockSpace::new(2, 6).unwrap();
        let rho0 = qubit_state(&fs);
        for t in [0.5, 1.0, 2.0] {
            let err = |n: f64| {
                let spec = tilt_a(n);
                let l = fockspace::build_liouvillian(&fs, &spec).unwrap();
                let oracle = fockspace::oracle_propagate(&fs, &l, &rho0, t).unwrap().rho;
                let approx = approx_propagate(&fs, &spec, &rho0, t).unwrap().combine(n);
                matkernel::hs_norm(&(oracle - approx))
            };
            let ratio = err(0.02) / err(0.01);
            assert!((3.5..=4.5).contains(&ratio), "t = {t}: ratio {ratio}");
        }
    }

    #[test]
    fn margin_is_enforced() {
        let fs = FockSpace::new(2, 3).unwrap();
        let rho0 = fs.projector(&[1, 1], &[1, 1]).unwrap();
        assert!(matches!(
            approx_propagate(&fs, &tilt_a(0.1), &rho0, 1.0),
            Err(LowTempError::Margin { support: 2, limit: 1 })
        ));
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let general = sampling::general_spec(&mut rng, 2);
        assert!(matches!(
            approx_propagate(&fs, &general, &fs.projector(&[0, 0], &[0, 0]).unwrap(), 1.0),
            Err(LowTempError::NotThermal)
        ));
    }
}
