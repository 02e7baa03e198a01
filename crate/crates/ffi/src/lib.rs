//! C ABI over the `hefir` BFV scheme.
//!
//! Every object is an opaque heap handle released by its `_free` function.
//! Fallible calls return a [`HefirStatus`]; on failure the message is
//! available from [`hefir_last_error`] on the same thread. Output handles
//! are written only on success.

#![allow(clippy::missing_safety_doc)]

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::sync::Arc;

use hefir::batching::SlotEncoder;
use hefir::bfv::{
    self, BfvParams, Ciphertext, Plaintext, PublicKey, RelinKey, SecretKey, DEFAULT_RELIN_BITS,
};
use hefir::io::Hfir;
use hefir::presets::load_preset;
use hefir::Error;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;

/// Status codes. The positive values match the command-line exit codes.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum HefirStatus {
    Ok = 0,
    Error = 1,
    Format = 2,
    Mismatch = 3,
    Capacity = 4,
    NullPointer = 5,
    InvalidArgument = 6,
    Panic = 7,
}

pub struct HefirParams(Arc<BfvParams>);
pub struct HefirSecretKey(SecretKey);
pub struct HefirPublicKey(PublicKey);
pub struct HefirRelinKey(RelinKey);
pub struct HefirCiphertext(Ciphertext);

/// Bytes owned by the library; release with [`hefir_buffer_free`].
#[repr(C)]
pub struct HefirBuffer {
    pub data: *mut u8,
    pub len: usize,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

enum Failure {
    Lib(Error),
    Null(&'static str),
    Invalid(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Lib(e)
    }
}

fn set_error(msg: String) {
    let msg = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = msg);
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> HefirStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => HefirStatus::Ok,
        Ok(Err(Failure::Null(arg))) => {
            set_error(format!("null pointer passed for {arg}"));
            HefirStatus::NullPointer
        }
        Ok(Err(Failure::Invalid(msg))) => {
            set_error(msg);
            HefirStatus::InvalidArgument
        }
        Ok(Err(Failure::Lib(e))) => {
            set_error(e.to_string());
            match e.exit_code() {
                2 => HefirStatus::Format,
                3 => HefirStatus::Mismatch,
                4 => HefirStatus::Capacity,
                _ => HefirStatus::Error,
            }
        }
        Err(_) => {
            set_error("internal panic".into());
            HefirStatus::Panic
        }
    }
}

unsafe fn get<'a, T>(p: *const T, name: &'static str) -> Result<&'a T, Failure> {
    p.as_ref().ok_or(Failure::Null(name))
}

unsafe fn put<T>(out: *mut *mut T, value: T, name: &'static str) -> Result<(), Failure> {
    if out.is_null() {
        return Err(Failure::Null(name));
    }
    *out = Box::into_raw(Box::new(value));
    Ok(())
}

unsafe fn slice<'a, T>(p: *const T, len: usize, name: &'static str) -> Result<&'a [T], Failure> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(Failure::Null(name));
    }
    Ok(std::slice::from_raw_parts(p, len))
}

unsafe fn rng_from(seed: *const u64) -> ChaCha20Rng {
    match seed.as_ref() {
        Some(&s) => ChaCha20Rng::seed_from_u64(s),
        None => ChaCha20Rng::from_entropy(),
    }
}

fn encoder(params: &BfvParams) -> Result<SlotEncoder, Failure> {
    if !params.supports_batching() {
        return Err(Failure::Invalid(format!(
            "t = {} does not support slot encoding",
            params.plain_modulus()
        )));
    }
    Ok(SlotEncoder::new(params.degree(), params.plain_modulus())?)
}

fn encode(params: &BfvParams, slots: &[u64]) -> Result<Plaintext, Failure> {
    let enc = encoder(params)?;
    let t = params.plain_modulus();
    if slots.len() > params.degree() {
        return Err(Failure::Invalid(format!(
            "{} slots exceed N = {}",
            slots.len(),
            params.degree()
        )));
    }
    if let Some(v) = slots.iter().find(|&&v| v >= t) {
        return Err(Failure::Invalid(format!(
            "slot value {v} not below t = {t}"
        )));
    }
    let mut full = slots.to_vec();
    full.resize(params.degree(), 0);
    Ok(enc.encode_slots(&full)?)
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn hefir_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Message of the last failed call on this thread; valid until the next
/// failing call on the same thread.
#[no_mangle]
pub extern "C" fn hefir_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Parameters of channel `channel` of a named preset (`"toy"`, `"1"`, ...).
#[no_mangle]
pub unsafe extern "C" fn hefir_params_from_preset(
    id: *const c_char,
    channel: usize,
    out: *mut *mut HefirParams,
) -> HefirStatus {
    guard(|| {
        let id = get(id, "id")?;
        let id = CStr::from_ptr(id)
            .to_str()
            .map_err(|_| Failure::Invalid("preset id is not UTF-8".into()))?;
        let params = load_preset(id)?.build_context(channel)?;
        put(out, HefirParams(params), "out")
    })
}

/// Parameters from explicit NTT-friendly primes and plaintext modulus.
#[no_mangle]
pub unsafe extern "C" fn hefir_params_new(
    degree: usize,
    primes: *const u64,
    prime_count: usize,
    plain_modulus: u64,
    out: *mut *mut HefirParams,
) -> HefirStatus {
    guard(|| {
        let primes = slice(primes, prime_count, "primes")?;
        let params = BfvParams::new(degree, primes, plain_modulus, DEFAULT_RELIN_BITS)?;
        put(out, HefirParams(params), "out")
    })
}

#[no_mangle]
pub unsafe extern "C" fn hefir_params_degree(params: *const HefirParams) -> usize {
    params.as_ref().map_or(0, |p| p.0.degree())
}

#[no_mangle]
pub unsafe extern "C" fn hefir_params_plain_modulus(params: *const HefirParams) -> u64 {
    params.as_ref().map_or(0, |p| p.0.plain_modulus())
}

/// Number of SIMD slots, or 0 when `t` does not support slot encoding.
#[no_mangle]
pub unsafe extern "C" fn hefir_params_slot_count(params: *const HefirParams) -> usize {
    params.as_ref().map_or(0, |p| {
        if p.0.supports_batching() {
            p.0.degree()
        } else {
            0
        }
    })
}

/// Generates a key triple. `seed` may be null for OS entropy.
#[no_mangle]
pub unsafe extern "C" fn hefir_keygen(
    params: *const HefirParams,
    seed: *const u64,
    sk_out: *mut *mut HefirSecretKey,
    pk_out: *mut *mut HefirPublicKey,
    rlk_out: *mut *mut HefirRelinKey,
) -> HefirStatus {
    guard(|| {
        let params = get(params, "params")?;
        if sk_out.is_null() || pk_out.is_null() || rlk_out.is_null() {
            return Err(Failure::Null("key output"));
        }
        let mut rng = rng_from(seed);
        let (sk, pk, rlk) = bfv::keygen(&params.0, &mut rng);
        put(sk_out, HefirSecretKey(sk), "sk_out")?;
        put(pk_out, HefirPublicKey(pk), "pk_out")?;
        put(rlk_out, HefirRelinKey(rlk), "rlk_out")
    })
}

/// Encrypts up to N slot values (missing slots are 0). `seed` may be null.
#[no_mangle]
pub unsafe extern "C" fn hefir_encrypt(
    pk: *const HefirPublicKey,
    slots: *const u64,
    len: usize,
    seed: *const u64,
    out: *mut *mut HefirCiphertext,
) -> HefirStatus {
    guard(|| {
        let pk = get(pk, "pk")?;
        let pt = encode(pk.0.params(), slot_input(slots, len)?)?;
        let ct = bfv::encrypt(&pk.0, &pt, &mut rng_from(seed))?;
        put(out, HefirCiphertext(ct), "out")
    })
}

unsafe fn slot_input<'a>(slots: *const u64, len: usize) -> Result<&'a [u64], Failure> {
    slice(slots, len, "slots")
}

/// Encrypts `value` in the constant coefficient; works for any `t`.
#[no_mangle]
pub unsafe extern "C" fn hefir_encrypt_scalar(
    pk: *const HefirPublicKey,
    value: u64,
    seed: *const u64,
    out: *mut *mut HefirCiphertext,
) -> HefirStatus {
    guard(|| {
        let pk = get(pk, "pk")?;
        let params = pk.0.params();
        let t = params.plain_modulus();
        if value >= t {
            return Err(Failure::Invalid(format!("value {value} not below t = {t}")));
        }
        let pt = Plaintext::constant(value, params.degree(), t);
        let ct = bfv::encrypt(&pk.0, &pt, &mut rng_from(seed))?;
        put(out, HefirCiphertext(ct), "out")
    })
}

/// Decrypts and writes the first `len` slots to `out`.
#[no_mangle]
pub unsafe extern "C" fn hefir_decrypt(
    sk: *const HefirSecretKey,
    ct: *const HefirCiphertext,
    out: *mut u64,
    len: usize,
) -> HefirStatus {
    guard(|| {
        let sk = get(sk, "sk")?;
        let ct = get(ct, "ct")?;
        let params = sk.0.params();
        if len > params.degree() {
            return Err(Failure::Invalid(format!(
                "{len} slots exceed N = {}",
                params.degree()
            )));
        }
        if out.is_null() && len > 0 {
            return Err(Failure::Null("out"));
        }
        let slots = encoder(params)?.decode_slots(&bfv::decrypt(&sk.0, &ct.0)?)?;
        if len > 0 {
            std::slice::from_raw_parts_mut(out, len).copy_from_slice(&slots[..len]);
        }
        Ok(())
    })
}

/// Decrypts the constant coefficient.
#[no_mangle]
pub unsafe extern "C" fn hefir_decrypt_scalar(
    sk: *const HefirSecretKey,
    ct: *const HefirCiphertext,
    out: *mut u64,
) -> HefirStatus {
    guard(|| {
        let sk = get(sk, "sk")?;
        let ct = get(ct, "ct")?;
        if out.is_null() {
            return Err(Failure::Null("out"));
        }
        *out = bfv::decrypt(&sk.0, &ct.0)?.coeffs()[0];
        Ok(())
    })
}

/// Remaining noise budget in bits.
#[no_mangle]
pub unsafe extern "C" fn hefir_noise_budget(
    sk: *const HefirSecretKey,
    ct: *const HefirCiphertext,
    out: *mut u32,
) -> HefirStatus {
    guard(|| {
        let sk = get(sk, "sk")?;
        let ct = get(ct, "ct")?;
        if out.is_null() {
            return Err(Failure::Null("out"));
        }
        *out = bfv::noise_budget(&sk.0, &ct.0)?;
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn hefir_add(
    a: *const HefirCiphertext,
    b: *const HefirCiphertext,
    out: *mut *mut HefirCiphertext,
) -> HefirStatus {
    guard(|| {
        let c = bfv::hadd(&get(a, "a")?.0, &get(b, "b")?.0)?;
        put(out, HefirCiphertext(c), "out")
    })
}

#[no_mangle]
pub unsafe extern "C" fn hefir_sub(
    a: *const HefirCiphertext,
    b: *const HefirCiphertext,
    out: *mut *mut HefirCiphertext,
) -> HefirStatus {
    guard(|| {
        let c = bfv::hsub(&get(a, "a")?.0, &get(b, "b")?.0)?;
        put(out, HefirCiphertext(c), "out")
    })
}

/// Product with relinearization.
#[no_mangle]
pub unsafe extern "C" fn hefir_multiply(
    a: *const HefirCiphertext,
    b: *const HefirCiphertext,
    rlk: *const HefirRelinKey,
    out: *mut *mut HefirCiphertext,
) -> HefirStatus {
    guard(|| {
        let c = bfv::hmult(&get(a, "a")?.0, &get(b, "b")?.0, &get(rlk, "rlk")?.0)?;
        put(out, HefirCiphertext(c), "out")
    })
}

#[no_mangle]
pub unsafe extern "C" fn hefir_square(
    a: *const HefirCiphertext,
    rlk: *const HefirRelinKey,
    out: *mut *mut HefirCiphertext,
) -> HefirStatus {
    guard(|| {
        let c = bfv::hsquare(&get(a, "a")?.0, &get(rlk, "rlk")?.0)?;
        put(out, HefirCiphertext(c), "out")
    })
}

/// Slot-wise product with plaintext slot values.
#[no_mangle]
pub unsafe extern "C" fn hefir_multiply_plain(
    a: *const HefirCiphertext,
    slots: *const u64,
    len: usize,
    out: *mut *mut HefirCiphertext,
) -> HefirStatus {
    guard(|| {
        let a = get(a, "a")?;
        let pt = encode(a.0.params(), slot_input(slots, len)?)?;
        put(out, HefirCiphertext(bfv::hmult_plain(&a.0, &pt)?), "out")
    })
}

/// Product with a signed integer scalar.
#[no_mangle]
pub unsafe extern "C" fn hefir_multiply_scalar(
    a: *const HefirCiphertext,
    scalar: i64,
    out: *mut *mut HefirCiphertext,
) -> HefirStatus {
    guard(|| {
        let a = get(a, "a")?;
        put(out, HefirCiphertext(bfv::hmult_scalar(&a.0, scalar)), "out")
    })
}

fn into_buffer(bytes: Vec<u8>) -> HefirBuffer {
    let mut b = bytes.into_boxed_slice();
    let buf = HefirBuffer {
        data: b.as_mut_ptr(),
        len: b.len(),
    };
    std::mem::forget(b);
    buf
}

#[no_mangle]
pub unsafe extern "C" fn hefir_buffer_free(buffer: HefirBuffer) {
    if !buffer.data.is_null() {
        drop(Box::from_raw(std::ptr::slice_from_raw_parts_mut(
            buffer.data,
            buffer.len,
        )));
    }
}

unsafe fn free_handle<T>(p: *mut T) {
    if !p.is_null() {
        drop(Box::from_raw(p));
    }
}

unsafe fn serialize<T: Hfir>(p: Option<&T>, out: *mut HefirBuffer) -> HefirStatus {
    guard(|| {
        let p = p.ok_or(Failure::Null("object"))?;
        if out.is_null() {
            return Err(Failure::Null("out"));
        }
        *out = into_buffer(p.to_bytes()?);
        Ok(())
    })
}

unsafe fn deserialize<T: Hfir, H>(
    data: *const u8,
    len: usize,
    wrap: fn(T) -> H,
    out: *mut *mut H,
) -> HefirStatus {
    guard(|| {
        let bytes = slice(data, len, "data")?;
        put(out, wrap(T::from_bytes(bytes)?), "out")
    })
}

#[no_mangle]
pub unsafe extern "C" fn hefir_secret_key_free(p: *mut HefirSecretKey) {
    free_handle(p)
}

/// HFIR encoding; release the buffer with `hefir_buffer_free`.
#[no_mangle]
pub unsafe extern "C" fn hefir_secret_key_serialize(
    p: *const HefirSecretKey,
    out: *mut HefirBuffer,
) -> HefirStatus {
    serialize(p.as_ref().map(|p| &p.0), out)
}

#[no_mangle]
pub unsafe extern "C" fn hefir_secret_key_deserialize(
    data: *const u8,
    len: usize,
    out: *mut *mut HefirSecretKey,
) -> HefirStatus {
    deserialize(data, len, HefirSecretKey, out)
}

#[no_mangle]
pub unsafe extern "C" fn hefir_public_key_free(p: *mut HefirPublicKey) {
    free_handle(p)
}

/// HFIR encoding; release the buffer with `hefir_buffer_free`.
#[no_mangle]
pub unsafe extern "C" fn hefir_public_key_serialize(
    p: *const HefirPublicKey,
    out: *mut HefirBuffer,
) -> HefirStatus {
    serialize(p.as_ref().map(|p| &p.0), out)
}

#[no_mangle]
pub unsafe extern "C" fn hefir_public_key_deserialize(
    data: *const u8,
    len: usize,
    out: *mut *mut HefirPublicKey,
) -> HefirStatus {
    deserialize(data, len, HefirPublicKey, out)
}

#[no_mangle]
pub unsafe extern "C" fn hefir_relin_key_free(p: *mut HefirRelinKey) {
    free_handle(p)
}

/// HFIR encoding; release the buffer with `hefir_buffer_free`.
#[no_mangle]
pub unsafe extern "C" fn hefir_relin_key_serialize(
    p: *const HefirRelinKey,
    out: *mut HefirBuffer,
) -> HefirStatus {
    serialize(p.as_ref().map(|p| &p.0), out)
}

#[no_mangle]
pub unsafe extern "C" fn hefir_relin_key_deserialize(
    data: *const u8,
    len: usize,
    out: *mut *mut HefirRelinKey,
) -> HefirStatus {
    deserialize(data, len, HefirRelinKey, out)
}

#[no_mangle]
pub unsafe extern "C" fn hefir_ciphertext_free(p: *mut HefirCiphertext) {
    free_handle(p)
}

/// HFIR encoding; release the buffer with `hefir_buffer_free`.
#[no_mangle]
pub unsafe extern "C" fn hefir_ciphertext_serialize(
    p: *const HefirCiphertext,
    out: *mut HefirBuffer,
) -> HefirStatus {
    serialize(p.as_ref().map(|p| &p.0), out)
}

#[no_mangle]
pub unsafe extern "C" fn hefir_ciphertext_deserialize(
    data: *const u8,
    len: usize,
    out: *mut *mut HefirCiphertext,
) -> HefirStatus {
    deserialize(data, len, HefirCiphertext, out)
}

#[no_mangle]
pub unsafe extern "C" fn hefir_params_free(p: *mut HefirParams) {
    free_handle(p)
}
