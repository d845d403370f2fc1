//! Seeded random specs and channels for property suites.

use rand::Rng;

use crate::matkernel::{self, c, CMatrix};
use crate::model::{validate_spec, SystemSpec, TwoModeChannel};

/// Entries uniform in the unit square.
pub fn matrix(rng: &mut impl Rng, n: usize) -> CMatrix {
    CMatrix::from_fn(n, n, |_, _| c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
}

pub fn hermitian(rng: &mut impl Rng, n: usize) -> CMatrix {
    let a = matrix(rng, n);
    (&a + a.adjoint()) * c(0.5, 0.0)
}

/// `X X^dagger + floor I`.
pub fn positive(rng: &mut impl Rng, n: usize, floor: f64) -> CMatrix {
    let x = matrix(rng, n);
    &x * x.adjoint() + matkernel::identity(n) * c(floor, 0.0)
}

pub fn thermal_spec(rng: &mut impl Rng, n: usize, n_thermal: f64) -> SystemSpec {
    SystemSpec::thermal(hermitian(rng, n), positive(rng, n, 0.2), n_thermal).expect("positive by construction")
}

/// Non-thermal spec with `Gamma_+` and `Gamma_- - Gamma_+` independent.
pub fn general_spec(rng: &mut impl Rng, n: usize) -> SystemSpec {
    let gp = positive(rng, n, 0.1) * c(0.3, 0.0);
    let gm = &gp + positive(rng, n, 0.2);
    validate_spec(hermitian(rng, n), gp, gm).expect("positive by construction")
}

fn vector(rng: &mut impl Rng, scale: f64) -> [f64; 3] {
    [0; 3].map(|_| rng.gen_range(-scale..scale))
}

/// Random two-mode channel with `gamma0` in `[0.5, 1.5]`.
pub fn channel(rng: &mut impl Rng) -> TwoModeChannel {
    let gamma0 = rng.gen_range(0.5..1.5);
    let g = vector(rng, 1.0);
    let shrink = rng.gen_range(0.1..0.9) * gamma0 / crate::model::norm3(g).max(1e-12);
    TwoModeChannel::new(rng.gen_range(-1.0..1.0), vector(rng, 1.0), gamma0, g.map(|x| x * shrink))
        .expect("dissipative by construction")
}

/// Random channel with `|q^2| = |eps|` offset from the EP manifold:
/// `omega_vec` orthogonal to `gamma_vec` with `|omega|^2 = |gamma|^2 - eps`.
pub fn near_ep_channel(rng: &mut impl Rng, eps: f64) -> TwoModeChannel {
    let gamma0 = rng.gen_range(0.5..1.5);
    let g = vector(rng, 1.0);
    let gn = crate::model::norm3(g).max(1e-12);
    let g = g.map(|x| x * rng.gen_range(0.2..0.9) * gamma0 / gn);
    let gn = crate::model::norm3(g);
    let trial = vector(rng, 1.0);
    let mut w = crate::model::cross3(g, trial);
    let wn = crate::model::norm3(w).max(1e-12);
    let target = (gn * gn - eps).max(0.0).sqrt();
    w = w.map(|x| x * target / wn);
    TwoModeChannel::new(rng.gen_range(-1.0..1.0), w, gamma0, g).expect("dissipative by construction")
}
