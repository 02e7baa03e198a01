use std::ffi::{CStr, CString};
use std::ptr;

use hefir_ffi::*;

fn last_error() -> String {
    unsafe { CStr::from_ptr(hefir_last_error()) }
        .to_string_lossy()
        .into_owned()
}

struct Keys {
    params: *mut HefirParams,
    sk: *mut HefirSecretKey,
    pk: *mut HefirPublicKey,
    rlk: *mut HefirRelinKey,
}

impl Keys {
    fn new(preset: &str, seed: u64) -> Keys {
        let id = CString::new(preset).unwrap();
        let mut k = Keys {
            params: ptr::null_mut(),
            sk: ptr::null_mut(),
            pk: ptr::null_mut(),
            rlk: ptr::null_mut(),
        };
        unsafe {
            assert_eq!(
                hefir_params_from_preset(id.as_ptr(), 0, &mut k.params),
                HefirStatus::Ok
            );
            assert_eq!(
                hefir_keygen(k.params, &seed, &mut k.sk, &mut k.pk, &mut k.rlk),
                HefirStatus::Ok
            );
        }
        k
    }

    fn encrypt(&self, slots: &[u64], seed: u64) -> *mut HefirCiphertext {
        let mut ct = ptr::null_mut();
        let st = unsafe { hefir_encrypt(self.pk, slots.as_ptr(), slots.len(), &seed, &mut ct) };
        assert_eq!(st, HefirStatus::Ok, "{}", last_error());
        ct
    }

    fn decrypt(&self, ct: *const HefirCiphertext, len: usize) -> Vec<u64> {
        let mut out = vec![0u64; len];
        let st = unsafe { hefir_decrypt(self.sk, ct, out.as_mut_ptr(), len) };
        assert_eq!(st, HefirStatus::Ok, "{}", last_error());
        out
    }
}

impl Drop for Keys {
    fn drop(&mut self) {
        unsafe {
            hefir_secret_key_free(self.sk);
            hefir_public_key_free(self.pk);
            hefir_relin_key_free(self.rlk);
            hefir_params_free(self.params);
        }
    }
}

#[test]
fn version_is_a_c_string() {
    let v = unsafe { CStr::from_ptr(hefir_version()) };
    assert_eq!(v.to_str().unwrap(), env!("CARGO_PKG_VERSION"));
}

#[test]
fn slot_arithmetic_through_the_c_abi() {
    let k = Keys::new("toy", 7);
    let t = unsafe { hefir_params_plain_modulus(k.params) };
    let n = unsafe { hefir_params_slot_count(k.params) };
    assert_eq!(n, unsafe { hefir_params_degree(k.params) });
    let a: Vec<u64> = (0..16).map(|i| (i * 1_000_003 + 5) % t).collect();
    let b: Vec<u64> = (0..16).map(|i| t - 1 - i).collect();
    let ca = k.encrypt(&a, 1);
    let cb = k.encrypt(&b, 2);
    assert_eq!(k.decrypt(ca, 16), a);

    let mut sum = ptr::null_mut();
    let mut prod = ptr::null_mut();
    let mut sq = ptr::null_mut();
    let mut scaled = ptr::null_mut();
    let mut plain = ptr::null_mut();
    unsafe {
        assert_eq!(hefir_add(ca, cb, &mut sum), HefirStatus::Ok);
        assert_eq!(hefir_multiply(ca, cb, k.rlk, &mut prod), HefirStatus::Ok);
        assert_eq!(hefir_square(ca, k.rlk, &mut sq), HefirStatus::Ok);
        assert_eq!(hefir_multiply_scalar(ca, -3, &mut scaled), HefirStatus::Ok);
        assert_eq!(
            hefir_multiply_plain(ca, b.as_ptr(), b.len(), &mut plain),
            HefirStatus::Ok
        );
    }
    let m = |x: u64, y: u64| ((x as u128 * y as u128) % t as u128) as u64;
    let expect_sum: Vec<u64> = a.iter().zip(&b).map(|(&x, &y)| (x + y) % t).collect();
    let expect_prod: Vec<u64> = a.iter().zip(&b).map(|(&x, &y)| m(x, y)).collect();
    let expect_sq: Vec<u64> = a.iter().map(|&x| m(x, x)).collect();
    let expect_scaled: Vec<u64> = a.iter().map(|&x| m(x, t - 3)).collect();
    assert_eq!(k.decrypt(sum, 16), expect_sum);
    assert_eq!(k.decrypt(prod, 16), expect_prod);
    assert_eq!(k.decrypt(sq, 16), expect_sq);
    assert_eq!(k.decrypt(scaled, 16), expect_scaled);
    assert_eq!(k.decrypt(plain, 16), expect_prod);

    let mut budget = 0u32;
    unsafe {
        assert_eq!(hefir_noise_budget(k.sk, prod, &mut budget), HefirStatus::Ok);
    }
    assert!(budget > 0);
    for c in [ca, cb, sum, prod, sq, scaled, plain] {
        unsafe { hefir_ciphertext_free(c) };
    }
}

#[test]
fn scalar_encryption_works_without_batching() {
    let primes = hefir::ring::modulus::ntt_primes(50, 16, 2, &[]);
    unsafe {
        let mut params = ptr::null_mut();
        assert_eq!(
            hefir_params_new(16, primes.as_ptr(), primes.len(), 3, &mut params),
            HefirStatus::Ok
        );
        assert_eq!(hefir_params_slot_count(params), 0);
        let (mut sk, mut pk, mut rlk) = (ptr::null_mut(), ptr::null_mut(), ptr::null_mut());
        assert_eq!(
            hefir_keygen(params, ptr::null(), &mut sk, &mut pk, &mut rlk),
            HefirStatus::Ok
        );
        let mut ct = ptr::null_mut();
        assert_eq!(
            hefir_encrypt_scalar(pk, 2, ptr::null(), &mut ct),
            HefirStatus::Ok
        );
        let mut sq = ptr::null_mut();
        assert_eq!(hefir_square(ct, rlk, &mut sq), HefirStatus::Ok);
        let mut out = 0u64;
        assert_eq!(hefir_decrypt_scalar(sk, sq, &mut out), HefirStatus::Ok);
        assert_eq!(out, 1);
        let mut slots = [0u64; 1];
        assert_eq!(
            hefir_decrypt(sk, sq, slots.as_mut_ptr(), 1),
            HefirStatus::InvalidArgument
        );
        hefir_ciphertext_free(sq);
        hefir_ciphertext_free(ct);
        hefir_secret_key_free(sk);
        hefir_public_key_free(pk);
        hefir_relin_key_free(rlk);
        hefir_params_free(params);
    }
}

#[test]
fn serialization_roundtrips_byte_exactly() {
    let k = Keys::new("toy", 9);
    let ct = k.encrypt(&[1, 2, 3], 4);
    unsafe {
        let mut buf = HefirBuffer {
            data: ptr::null_mut(),
            len: 0,
        };
        assert_eq!(hefir_ciphertext_serialize(ct, &mut buf), HefirStatus::Ok);
        let first = std::slice::from_raw_parts(buf.data, buf.len).to_vec();
        let mut back = ptr::null_mut();
        assert_eq!(
            hefir_ciphertext_deserialize(buf.data, buf.len, &mut back),
            HefirStatus::Ok
        );
        hefir_buffer_free(buf);
        assert_eq!(k.decrypt(back, 3), [1, 2, 3]);
        let mut again = HefirBuffer {
            data: ptr::null_mut(),
            len: 0,
        };
        assert_eq!(
            hefir_ciphertext_serialize(back, &mut again),
            HefirStatus::Ok
        );
        assert_eq!(
            std::slice::from_raw_parts(again.data, again.len),
            &first[..]
        );
        hefir_buffer_free(again);
        hefir_ciphertext_free(back);
        hefir_ciphertext_free(ct);

        let mut buf = HefirBuffer {
            data: ptr::null_mut(),
            len: 0,
        };
        assert_eq!(hefir_secret_key_serialize(k.sk, &mut buf), HefirStatus::Ok);
        let mut sk = ptr::null_mut();
        assert_eq!(
            hefir_secret_key_deserialize(buf.data, buf.len, &mut sk),
            HefirStatus::Ok
        );
        hefir_buffer_free(buf);
        hefir_secret_key_free(sk);

        let mut buf = HefirBuffer {
            data: ptr::null_mut(),
            len: 0,
        };
        assert_eq!(hefir_public_key_serialize(k.pk, &mut buf), HefirStatus::Ok);
        let mut pk = ptr::null_mut();
        assert_eq!(
            hefir_public_key_deserialize(buf.data, buf.len, &mut pk),
            HefirStatus::Ok
        );
        hefir_buffer_free(buf);
        hefir_public_key_free(pk);

        let mut buf = HefirBuffer {
            data: ptr::null_mut(),
            len: 0,
        };
        assert_eq!(hefir_relin_key_serialize(k.rlk, &mut buf), HefirStatus::Ok);
        let mut rlk = ptr::null_mut();
        assert_eq!(
            hefir_relin_key_deserialize(buf.data, buf.len, &mut rlk),
            HefirStatus::Ok
        );
        hefir_buffer_free(buf);
        hefir_relin_key_free(rlk);
    }
}

#[test]
fn errors_map_to_status_codes() {
    let k = Keys::new("toy", 1);
    let other = Keys::new("toy-crt", 1);
    let a = k.encrypt(&[1], 1);
    let b = other.encrypt(&[1], 1);
    unsafe {
        let mut out = ptr::null_mut();
        assert_eq!(hefir_add(a, b, &mut out), HefirStatus::Mismatch);
        assert!(out.is_null());
        assert!(last_error().contains("mismatch"), "{}", last_error());

        assert_eq!(
            hefir_add(ptr::null(), b, &mut out),
            HefirStatus::NullPointer
        );
        assert!(last_error().contains('a'));

        let junk = [0u8; 12];
        let mut ct = ptr::null_mut();
        assert_eq!(
            hefir_ciphertext_deserialize(junk.as_ptr(), junk.len(), &mut ct),
            HefirStatus::Format
        );
        assert!(last_error().contains("byte"), "{}", last_error());

        let t = hefir_params_plain_modulus(k.params);
        let bad = [t];
        assert_eq!(
            hefir_encrypt(k.pk, bad.as_ptr(), 1, ptr::null(), &mut ct),
            HefirStatus::InvalidArgument
        );

        let id = CString::new("nope").unwrap();
        let mut p = ptr::null_mut();
        assert_eq!(
            hefir_params_from_preset(id.as_ptr(), 0, &mut p),
            HefirStatus::Mismatch
        );
        assert!(p.is_null());

        hefir_ciphertext_free(a);
        hefir_ciphertext_free(b);
        hefir_ciphertext_free(ptr::null_mut());
    }
}

#[test]
fn header_declares_every_exported_function() {
    let dir = env!("CARGO_MANIFEST_DIR");
    let header = std::fs::read_to_string(format!("{dir}/include/hefir.h")).unwrap();
    let source = std::fs::read_to_string(format!("{dir}/src/lib.rs")).unwrap();
    let mut exported = 0;
    for line in source.lines() {
        if let Some(rest) = line.split("extern \"C\" fn ").nth(1) {
            let name = rest.split('(').next().unwrap();
            assert!(
                header.contains(&format!("{name}(")),
                "{name} missing from header"
            );
            exported += 1;
        }
    }
    assert!(exported >= 30);
    for ty in [
        "HefirParams",
        "HefirSecretKey",
        "HefirPublicKey",
        "HefirRelinKey",
        "HefirCiphertext",
    ] {
        assert!(
            header.contains(&format!("typedef struct {ty} {ty};")),
            "{ty} is not opaque"
        );
    }
}
