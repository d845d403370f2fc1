pub mod fockspace;
pub mod lowtemp;
pub mod matkernel;
pub mod model;
pub mod qubitspeed;
pub mod sampling;
pub mod spectral;
pub mod validation;
