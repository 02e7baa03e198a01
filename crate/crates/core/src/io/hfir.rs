//! The HFIR container: a self-describing little-endian header followed by
//! coefficient residues.
//!
//! ```text
//! "HFIR" | version u16 | kind u8 | N u32 | k u16 | q_0..q_{k-1} u64
//!        | t u64                      (kinds 1..=5)
//!        | m u16 | t_0..t_{m-1} u64   (manifest)
//!        | kind-specific fields | payload
//! ```
//!
//! Residues are written position-major, then part, then prime, then
//! coefficient, so a ciphertext occupies `parts · k · N · 8` bytes.

use std::collections::HashMap;
use std::path::Path;
use std::sync::{Arc, Mutex, OnceLock};

use num_bigint::BigUint;

use crate::bfv::{BfvParams, Ciphertext, PublicKey, RelinKey, SecretKey, DEFAULT_RELIN_BITS};
use crate::engine::CipherTensor;
use crate::error::{Error, Result};
use crate::nn::Shape;
use crate::ring::{Domain, RingElem};

pub const MAGIC: [u8; 4] = *b"HFIR";
pub const VERSION: u16 = 1;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
#[repr(u8)]
pub enum Kind {
    SecretKey = 1,
    PublicKey = 2,
    RelinKey = 3,
    Ciphertext = 4,
    Tensor = 5,
    Manifest = 6,
}

impl Kind {
    fn from_u8(v: u8) -> Option<Kind> {
        Some(match v {
            1 => Kind::SecretKey,
            2 => Kind::PublicKey,
            3 => Kind::RelinKey,
            4 => Kind::Ciphertext,
            5 => Kind::Tensor,
            6 => Kind::Manifest,
            _ => return None,
        })
    }

    pub fn name(self) -> &'static str {
        match self {
            Kind::SecretKey => "secret key",
            Kind::PublicKey => "public key",
            Kind::RelinKey => "relinearization key",
            Kind::Ciphertext => "ciphertext",
            Kind::Tensor => "ciphertext tensor",
            Kind::Manifest => "manifest",
        }
    }
}

/// Common header fields.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Header {
    pub kind: Kind,
    pub degree: usize,
    pub primes: Vec<u64>,
    /// A single `t` for keys and ciphertexts, the channel list for manifests.
    pub plain_moduli: Vec<u64>,
}

/// Reads only the header of an HFIR buffer.
pub fn peek_header(bytes: &[u8]) -> Result<Header> {
    Reader::new(bytes).header()
}

/// An encrypted image batch: one ciphertext per input position.
#[derive(Clone, Debug, PartialEq)]
pub struct EncryptedBatch {
    pub tensor: CipherTensor,
    /// Number of images packed into the slots.
    pub images: usize,
}

/// Channel list of a CRT bundle. Entry `i` is the file holding channel `i`,
/// relative to the manifest's directory; reconstruction follows this order.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Manifest {
    pub degree: usize,
    pub primes: Vec<u64>,
    pub plain_moduli: Vec<u64>,
    pub files: Vec<String>,
}

/// Objects with an HFIR encoding.
pub trait Hfir: Sized {
    const KIND: Kind;

    fn to_bytes(&self) -> Result<Vec<u8>>;

    fn from_bytes(bytes: &[u8]) -> Result<Self>;

    fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_bytes()?)?;
        Ok(())
    }

    fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_bytes(&std::fs::read(path)?)
    }
}

type ParamsKey = (usize, Vec<u64>, u64, u32);

/// Parameters for a header, shared between objects read in one process.
pub fn params_for(
    degree: usize,
    primes: &[u64],
    t: u64,
    relin_bits: u32,
) -> Result<Arc<BfvParams>> {
    static CACHE: OnceLock<Mutex<HashMap<ParamsKey, Arc<BfvParams>>>> = OnceLock::new();
    let key = (degree, primes.to_vec(), t, relin_bits);
    let cache = CACHE.get_or_init(Default::default);
    if let Some(p) = cache.lock().unwrap().get(&key) {
        return Ok(p.clone());
    }
    let p = BfvParams::new(degree, primes, t, relin_bits)?;
    cache.lock().unwrap().insert(key, p.clone());
    Ok(p)
}

struct Writer {
    buf: Vec<u8>,
}

impl Writer {
    fn new(kind: Kind, degree: usize, primes: &[u64]) -> Self {
        let mut w = Writer { buf: Vec::new() };
        w.buf.extend_from_slice(&MAGIC);
        w.u16(VERSION);
        w.u8(kind as u8);
        w.u32(degree as u32);
        w.u16(primes.len() as u16);
        for &p in primes {
            w.u64(p);
        }
        w
    }

    fn for_params(kind: Kind, params: &BfvParams) -> Self {
        let mut w = Writer::new(kind, params.degree(), &params.ring().primes());
        w.u64(params.plain_modulus());
        w
    }

    fn u8(&mut self, v: u8) {
        self.buf.push(v);
    }

    fn u16(&mut self, v: u16) {
        self.buf.extend_from_slice(&v.to_le_bytes());
    }

    fn u32(&mut self, v: u32) {
        self.buf.extend_from_slice(&v.to_le_bytes());
    }

    fn u64(&mut self, v: u64) {
        self.buf.extend_from_slice(&v.to_le_bytes());
    }

    fn bytes16(&mut self, b: &[u8]) -> Result<()> {
        let len = u16::try_from(b.len())
            .map_err(|_| Error::Encoding(format!("field of {} bytes is too long", b.len())))?;
        self.u16(len);
        self.buf.extend_from_slice(b);
        Ok(())
    }

    fn poly(&mut self, e: &RingElem) {
        if e.domain() == Domain::Coefficient {
            self.residues(e.residues());
        } else {
            let mut c = e.clone();
            c.to_domain(Domain::Coefficient);
            self.residues(c.residues());
        }
    }

    fn residues(&mut self, r: &[u64]) {
        self.buf.reserve(r.len() * 8);
        for &x in r {
            self.u64(x);
        }
    }
}

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn new(buf: &'a [u8]) -> Self {
        Reader { buf, pos: 0 }
    }

    fn take(&mut self, n: usize, what: &str) -> Result<&'a [u8]> {
        if self.buf.len() - self.pos < n {
            return Err(Error::format(
                self.buf.len() as u64,
                format!("truncated {what}: need {n} bytes at offset {}", self.pos),
            ));
        }
        let s = &self.buf[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    fn u8(&mut self, what: &str) -> Result<u8> {
        Ok(self.take(1, what)?[0])
    }

    fn u16(&mut self, what: &str) -> Result<u16> {
        Ok(u16::from_le_bytes(self.take(2, what)?.try_into().unwrap()))
    }

    fn u32(&mut self, what: &str) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4, what)?.try_into().unwrap()))
    }

    fn u64(&mut self, what: &str) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8, what)?.try_into().unwrap()))
    }

    fn bytes16(&mut self, what: &str) -> Result<&'a [u8]> {
        let n = self.u16(what)? as usize;
        self.take(n, what)
    }

    fn header(&mut self) -> Result<Header> {
        if self.take(4, "magic")? != MAGIC {
            return Err(Error::format(0, "not an HFIR file"));
        }
        let version = self.u16("version")?;
        if version != VERSION {
            return Err(Error::format(4, format!("unsupported version {version}")));
        }
        let at = self.pos as u64;
        let kind = self.u8("kind")?;
        let kind = Kind::from_u8(kind)
            .ok_or_else(|| Error::format(at, format!("unknown object kind {kind}")))?;
        let degree = self.u32("ring degree")? as usize;
        let count = self.u16("prime count")? as usize;
        let mut primes = Vec::with_capacity(count);
        for _ in 0..count {
            primes.push(self.u64("prime")?);
        }
        let plain_moduli = if kind == Kind::Manifest {
            let m = self.u16("channel count")? as usize;
            (0..m)
                .map(|_| self.u64("plaintext modulus"))
                .collect::<Result<_>>()?
        } else {
            vec![self.u64("plaintext modulus")?]
        };
        Ok(Header {
            kind,
            degree,
            primes,
            plain_moduli,
        })
    }

    fn expect(&mut self, kind: Kind) -> Result<Header> {
        let h = self.header()?;
        if h.kind != kind {
            return Err(Error::format(
                6,
                format!("expected a {}, found a {}", kind.name(), h.kind.name()),
            ));
        }
        Ok(h)
    }

    fn params(&self, h: &Header, relin_bits: u32) -> Result<Arc<BfvParams>> {
        params_for(h.degree, &h.primes, h.plain_moduli[0], relin_bits).map_err(|e| match e {
            Error::Format { .. } => e,
            other => Error::format(6, format!("header describes unusable parameters: {other}")),
        })
    }

    fn poly(&mut self, params: &BfvParams) -> Result<RingElem> {
        let ctx = params.ring();
        let n = ctx.degree();
        let start = self.pos;
        let raw = self.take(n * ctx.len() * 8, "polynomial")?;
        let mut data = Vec::with_capacity(n * ctx.len());
        for (i, m) in ctx.moduli().iter().enumerate() {
            for j in 0..n {
                let k = i * n + j;
                let v = u64::from_le_bytes(raw[k * 8..k * 8 + 8].try_into().unwrap());
                if v >= m.value() {
                    return Err(Error::format(
                        (start + k * 8) as u64,
                        format!("residue {v} not below prime {}", m.value()),
                    ));
                }
                data.push(v);
            }
        }
        RingElem::from_residues(ctx, data, Domain::Coefficient)
    }

    fn finish(&self) -> Result<()> {
        if self.pos != self.buf.len() {
            return Err(Error::format(
                self.pos as u64,
                format!("{} trailing bytes", self.buf.len() - self.pos),
            ));
        }
        Ok(())
    }
}

impl Hfir for SecretKey {
    const KIND: Kind = Kind::SecretKey;

    fn to_bytes(&self) -> Result<Vec<u8>> {
        let mut w = Writer::for_params(Self::KIND, self.params());
        w.poly(self.poly());
        Ok(w.buf)
    }

    fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let mut r = Reader::new(bytes);
        let h = r.expect(Self::KIND)?;
        let params = r.params(&h, DEFAULT_RELIN_BITS)?;
        let s = r.poly(&params)?;
        r.finish()?;
        SecretKey::from_poly(&params, s)
    }
}

impl Hfir for PublicKey {
    const KIND: Kind = Kind::PublicKey;

    fn to_bytes(&self) -> Result<Vec<u8>> {
        let mut w = Writer::for_params(Self::KIND, self.params());
        let (b, a) = self.parts();
        w.poly(&b);
        w.poly(&a);
        Ok(w.buf)
    }

    fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let mut r = Reader::new(bytes);
        let h = r.expect(Self::KIND)?;
        let params = r.params(&h, DEFAULT_RELIN_BITS)?;
        let b = r.poly(&params)?;
        let a = r.poly(&params)?;
        r.finish()?;
        PublicKey::from_parts(&params, b, a)
    }
}

impl Hfir for RelinKey {
    const KIND: Kind = Kind::RelinKey;

    fn to_bytes(&self) -> Result<Vec<u8>> {
        let params = self.params();
        let mut w = Writer::for_params(Self::KIND, params);
        w.u32(params.relin_bits());
        w.u32(self.len() as u32);
        for i in 0..self.len() {
            let (k0, k1) = self.component(i);
            w.poly(&k0);
            w.poly(&k1);
        }
        Ok(w.buf)
    }

    fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let mut r = Reader::new(bytes);
        let h = r.expect(Self::KIND)?;
        let at = r.pos as u64;
        let bits = r.u32("relinearization base")?;
        let params = r.params(&h, bits)?;
        let count = r.u32("component count")? as usize;
        if count != params.relin_len() {
            return Err(Error::format(
                at + 4,
                format!("{count} components, parameters need {}", params.relin_len()),
            ));
        }
        let mut parts = Vec::with_capacity(count);
        for _ in 0..count {
            let k0 = r.poly(&params)?;
            let k1 = r.poly(&params)?;
            parts.push((k0, k1));
        }
        r.finish()?;
        RelinKey::from_parts(&params, parts)
    }
}

fn read_parts(r: &mut Reader) -> Result<usize> {
    let at = r.pos as u64;
    let parts = r.u8("part count")? as usize;
    if !(2..=3).contains(&parts) {
        return Err(Error::format(at, format!("ciphertext with {parts} parts")));
    }
    Ok(parts)
}

impl Hfir for Ciphertext {
    const KIND: Kind = Kind::Ciphertext;

    fn to_bytes(&self) -> Result<Vec<u8>> {
        let mut w = Writer::for_params(Self::KIND, self.params());
        w.u8(self.len() as u8);
        for p in self.parts() {
            w.poly(p);
        }
        Ok(w.buf)
    }

    fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let mut r = Reader::new(bytes);
        let h = r.expect(Self::KIND)?;
        let params = r.params(&h, DEFAULT_RELIN_BITS)?;
        let parts = read_parts(&mut r)?;
        let polys = (0..parts)
            .map(|_| r.poly(&params))
            .collect::<Result<Vec<_>>>()?;
        r.finish()?;
        Ciphertext::from_parts(&params, polys)
    }
}

impl Hfir for EncryptedBatch {
    const KIND: Kind = Kind::Tensor;

    fn to_bytes(&self) -> Result<Vec<u8>> {
        let t = &self.tensor;
        let params = t
            .params()
            .ok_or_else(|| Error::Shape("cannot serialize an empty tensor".into()))?;
        let parts = t.cts[0].len();
        if t.cts.iter().any(|c| c.len() != parts) {
            return Err(Error::Shape("tensor mixes ciphertext sizes".into()));
        }
        let mut w = Writer::for_params(Self::KIND, params);
        w.u32(t.shape.height as u32);
        w.u32(t.shape.width as u32);
        w.u32(t.shape.channels as u32);
        w.u32(t.channel as u32);
        w.u32(self.images as u32);
        w.bytes16(&t.scale.to_bytes_le())?;
        w.u32(t.cts.len() as u32);
        w.u8(parts as u8);
        for c in &t.cts {
            for p in c.parts() {
                w.poly(p);
            }
        }
        Ok(w.buf)
    }

    fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let mut r = Reader::new(bytes);
        let h = r.expect(Self::KIND)?;
        let params = r.params(&h, DEFAULT_RELIN_BITS)?;
        let shape = Shape::new(
            r.u32("height")? as usize,
            r.u32("width")? as usize,
            r.u32("channels")? as usize,
        );
        let channel = r.u32("channel index")? as usize;
        let images = r.u32("image count")? as usize;
        let scale = BigUint::from_bytes_le(r.bytes16("scale")?);
        let at = r.pos as u64;
        let count = r.u32("ciphertext count")? as usize;
        if count != shape.len() || count == 0 {
            return Err(Error::format(
                at,
                format!(
                    "{count} ciphertexts for a {}x{}x{} map",
                    shape.height, shape.width, shape.channels
                ),
            ));
        }
        let parts = read_parts(&mut r)?;
        let need = count * parts * params.ring().len() * params.degree() * 8;
        if bytes.len() - r.pos < need {
            return Err(Error::format(
                bytes.len() as u64,
                format!("truncated payload: need {need} bytes at offset {}", r.pos),
            ));
        }
        let mut cts = Vec::with_capacity(count);
        for _ in 0..count {
            let polys = (0..parts)
                .map(|_| r.poly(&params))
                .collect::<Result<Vec<_>>>()?;
            cts.push(Ciphertext::from_parts(&params, polys)?);
        }
        r.finish()?;
        Ok(EncryptedBatch {
            tensor: CipherTensor::new(shape, cts, scale, channel)?,
            images,
        })
    }
}

impl Hfir for Manifest {
    const KIND: Kind = Kind::Manifest;

    fn to_bytes(&self) -> Result<Vec<u8>> {
        if self.files.len() != self.plain_moduli.len() {
            return Err(Error::Shape(format!(
                "{} files for {} channels",
                self.files.len(),
                self.plain_moduli.len()
            )));
        }
        let mut w = Writer::new(Self::KIND, self.degree, &self.primes);
        w.u16(self.plain_moduli.len() as u16);
        for &t in &self.plain_moduli {
            w.u64(t);
        }
        for f in &self.files {
            w.bytes16(f.as_bytes())?;
        }
        Ok(w.buf)
    }

    fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let mut r = Reader::new(bytes);
        let h = r.expect(Self::KIND)?;
        let mut files = Vec::with_capacity(h.plain_moduli.len());
        for _ in 0..h.plain_moduli.len() {
            let at = r.pos as u64;
            let name = std::str::from_utf8(r.bytes16("file name")?)
                .map_err(|_| Error::format(at, "file name is not UTF-8"))?;
            files.push(name.to_string());
        }
        r.finish()?;
        Ok(Manifest {
            degree: h.degree,
            primes: h.primes,
            plain_moduli: h.plain_moduli,
            files,
        })
    }
}
