//! Levelled BFV over an RNS ciphertext modulus.

mod keys;
mod ops;
mod params;
mod scale;

pub use keys::{keygen, PublicKey, RelinKey, SecretKey};
pub use ops::{
    decrypt, encrypt, hadd, hadd_plain, hmult, hmult_no_relin, hmult_plain, hmult_scalar, hsquare,
    hsquare_no_relin, hsub, noise_budget, noise_log2, relinearize, Ciphertext, Plaintext,
};
pub use params::{BfvParams, DEFAULT_RELIN_BITS};
