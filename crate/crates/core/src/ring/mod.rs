//! Exact negacyclic polynomial arithmetic over a product of NTT-friendly
//! primes.

pub mod modulus;
pub mod ntt;
pub mod poly;
pub mod rns;
pub mod sample;

pub use modulus::Modulus;
pub use poly::{crt_reduce, BigPoly, Domain, RingElem};
pub use rns::{CrtComposer, RnsContext};
pub use sample::{sample_binary, sample_noise, sample_uniform, DiscreteGaussian, NOISE_SIGMA};
