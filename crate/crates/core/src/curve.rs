//! Short-Weierstrass curve arithmetic `y^2 = x^3 + c·x + d (mod p)` over a
//! configurable prime field.
//!
//! Points cross the public API in affine form. Scalar multiplication runs in
//! Jacobian coordinates internally and is not constant time.

use std::collections::BTreeMap;
use std::fmt;

use num_bigint::BigUint;
use num_traits::{One, Zero};
use rand_core::RngCore;
use serde::{Deserialize, Serialize};

use crate::bytes::{encode_be, Bytes32, HashAlg, IDENTITY_TAG};
use crate::cost::{self, Op};
use crate::error::{Error, Result};

#[derive(Clone, PartialEq, Eq, Hash)]
pub enum Point {
    Identity,
    Affine { x: BigUint, y: BigUint },
}

impl Point {
    pub fn new(x: BigUint, y: BigUint) -> Self {
        Point::Affine { x, y }
    }

    pub fn is_identity(&self) -> bool {
        matches!(self, Point::Identity)
    }

    pub fn coords(&self) -> Option<(&BigUint, &BigUint)> {
        match self {
            Point::Identity => None,
            Point::Affine { x, y } => Some((x, y)),
        }
    }
}

impl fmt::Debug for Point {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Point::Identity => f.write_str("Identity"),
            Point::Affine { x, y } => write!(f, "({:x}, {:x})", x, y),
        }
    }
}

/// Element of `Z_q^*`: an integer in `[1, q-1]`.
#[derive(Clone, PartialEq, Eq)]
pub struct Scalar(BigUint);

impl Scalar {
    pub fn new(value: BigUint, curve: &CurveParams) -> Result<Self> {
        if value.is_zero() || value >= curve.q {
            return Err(Error::Malformed("scalar outside [1, q-1]".into()));
        }
        Ok(Scalar(value))
    }

    pub fn value(&self) -> &BigUint {
        &self.0
    }

    /// Big-endian, zero-padded to 32 octets.
    pub fn encode(&self) -> Bytes32 {
        encode_be(&self.0.to_bytes_be()).expect("scalar fits in 256 bits")
    }

    pub fn to_hex(&self) -> String {
        self.0.to_str_radix(16)
    }
}

impl fmt::Debug for Scalar {
    // Scalars are secrets more often than not.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("Scalar(..)")
    }
}

#[derive(Clone, PartialEq, Eq)]
pub struct CurveParams {
    pub name: String,
    pub p: BigUint,
    pub c: BigUint,
    pub d: BigUint,
    /// Prime order of the subgroup generated by `g`.
    pub q: BigUint,
    pub g: Point,
}

impl fmt::Debug for CurveParams {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "CurveParams({})", self.name)
    }
}

/// Jacobian coordinates `(X, Y, Z)` standing for `(X/Z^2, Y/Z^3)`; `Z = 0` is infinity.
#[derive(Clone)]
struct Jacobian {
    x: BigUint,
    y: BigUint,
    z: BigUint,
}

impl CurveParams {
    /// Octets needed for one field element.
    pub fn field_len(&self) -> usize {
        (self.p.bits() as usize).div_ceil(8)
    }

    /// Octets of a point on the wire: identity flag, x, y.
    pub fn point_wire_len(&self) -> usize {
        1 + 2 * self.field_len()
    }

    pub fn is_on_curve(&self, pt: &Point) -> bool {
        match pt {
            Point::Identity => true,
            Point::Affine { x, y } => {
                if x >= &self.p || y >= &self.p {
                    return false;
                }
                let lhs = (y * y) % &self.p;
                let rhs = (x * x * x + &self.c * x + &self.d) % &self.p;
                lhs == rhs
            }
        }
    }

    /// Checks nonsingularity, primality of p and q, generator membership and `q·G = O`.
    pub fn validate(&self) -> Result<()> {
        if self.p <= BigUint::from(3u32) || !is_probable_prime(&self.p) {
            return Err(Error::BadOrder("field modulus p must be a prime > 3"));
        }
        let four_c3 = BigUint::from(4u32) * &self.c * &self.c * &self.c;
        let twenty_seven_d2 = BigUint::from(27u32) * &self.d * &self.d;
        if ((four_c3 + twenty_seven_d2) % &self.p).is_zero() {
            return Err(Error::SingularCurve);
        }
        if self.g.is_identity() || !self.is_on_curve(&self.g) {
            return Err(Error::GeneratorOffCurve);
        }
        if !is_probable_prime(&self.q) {
            return Err(Error::BadOrder("subgroup order q must be prime"));
        }
        if !self.mul_unchecked(&self.q, &self.g).is_identity() {
            return Err(Error::BadOrder("q·G is not the identity"));
        }
        Ok(())
    }

    pub fn negate(&self, pt: &Point) -> Point {
        match pt {
            Point::Identity => Point::Identity,
            Point::Affine { x, y } => Point::Affine {
                x: x.clone(),
                y: (&self.p - y) % &self.p,
            },
        }
    }

    /// Group sum of two curve points.
    pub fn point_add(&self, a: &Point, b: &Point) -> Result<Point> {
        if !self.is_on_curve(a) || !self.is_on_curve(b) {
            return Err(Error::PointOffCurve);
        }
        cost::record(Op::PointAdd);
        let sum = self.jac_add(&self.to_jacobian(a), &self.to_jacobian(b));
        Ok(self.to_affine(&sum))
    }

    /// `k·pt` for any non-negative integer `k`; callers reduce mod q where needed.
    pub fn scalar_mul(&self, k: &BigUint, pt: &Point) -> Result<Point> {
        if !self.is_on_curve(pt) {
            return Err(Error::PointOffCurve);
        }
        cost::record(Op::ScalarMul);
        Ok(self.mul_unchecked(k, pt))
    }

    /// `k·G`.
    pub fn mul_base(&self, k: &Scalar) -> Point {
        cost::record(Op::ScalarMul);
        self.mul_unchecked(k.value(), &self.g)
    }

    fn mul_unchecked(&self, k: &BigUint, pt: &Point) -> Point {
        let base = self.to_jacobian(pt);
        let mut acc = Jacobian::infinity();
        for i in (0..k.bits()).rev() {
            acc = self.jac_double(&acc);
            if k.bit(i) {
                acc = self.jac_add(&acc, &base);
            }
        }
        self.to_affine(&acc)
    }

    /// Uniform element of `[1, q-1]` by rejection sampling.
    pub fn random_scalar(&self, rng: &mut impl RngCore) -> Scalar {
        cost::record(Op::RandomDraw);
        let bits = self.q.bits() as usize;
        let mut buf = vec![0u8; bits.div_ceil(8)];
        let excess = buf.len() * 8 - bits;
        loop {
            rng.fill_bytes(&mut buf);
            buf[0] &= 0xff >> excess;
            let v = BigUint::from_bytes_be(&buf);
            if !v.is_zero() && v < self.q {
                return Scalar(v);
            }
        }
    }

    /// Interpret 32 octets as a big-endian integer reduced mod q.
    pub fn reduce(&self, bytes: &Bytes32) -> BigUint {
        BigUint::from_bytes_be(bytes.as_bytes()) % &self.q
    }

    /// `hash(x ∥ y)` over fixed-width big-endian coordinates; identity hashes a tag.
    pub fn encode_point(&self, pt: &Point, hash: HashAlg) -> Bytes32 {
        match pt {
            Point::Identity => hash.encode_raw(&[IDENTITY_TAG]),
            Point::Affine { x, y } => {
                let (xb, yb) = (self.fe_bytes(x), self.fe_bytes(y));
                hash.encode_raw(&[&xb, &yb])
            }
        }
    }

    fn fe_bytes(&self, v: &BigUint) -> Vec<u8> {
        let raw = v.to_bytes_be();
        let len = self.field_len();
        let mut out = vec![0u8; len];
        out[len - raw.len()..].copy_from_slice(&raw);
        out
    }

    /// Wire form: one flag octet (0 = affine, 1 = identity) then x and y.
    pub fn point_to_wire(&self, pt: &Point) -> Vec<u8> {
        let len = self.field_len();
        let mut out = Vec::with_capacity(self.point_wire_len());
        match pt {
            Point::Identity => {
                out.push(1);
                out.resize(1 + 2 * len, 0);
            }
            Point::Affine { x, y } => {
                out.push(0);
                out.extend(self.fe_bytes(x));
                out.extend(self.fe_bytes(y));
            }
        }
        out
    }

    /// Parses a wire point; anything non-canonical or off the curve is [`Error::InvalidPoint`].
    pub fn point_from_wire(&self, bytes: &[u8]) -> Result<Point> {
        let len = self.field_len();
        if bytes.len() != 1 + 2 * len {
            return Err(Error::InvalidPoint);
        }
        let (xb, yb) = bytes[1..].split_at(len);
        match bytes[0] {
            1 if bytes[1..].iter().all(|&b| b == 0) => Ok(Point::Identity),
            0 => {
                let pt = Point::new(BigUint::from_bytes_be(xb), BigUint::from_bytes_be(yb));
                if self.is_on_curve(&pt) {
                    Ok(pt)
                } else {
                    Err(Error::InvalidPoint)
                }
            }
            _ => Err(Error::InvalidPoint),
        }
    }

    fn fmul(&self, a: &BigUint, b: &BigUint) -> BigUint {
        (a * b) % &self.p
    }

    // Operands of fadd/fsub are already reduced mod p.
    fn fsub(&self, a: &BigUint, b: &BigUint) -> BigUint {
        if a >= b {
            a - b
        } else {
            (a + &self.p) - b
        }
    }

    fn fadd(&self, a: &BigUint, b: &BigUint) -> BigUint {
        let s = a + b;
        if s >= self.p {
            s - &self.p
        } else {
            s
        }
    }

    fn to_jacobian(&self, pt: &Point) -> Jacobian {
        match pt {
            Point::Identity => Jacobian::infinity(),
            Point::Affine { x, y } => Jacobian {
                x: x.clone(),
                y: y.clone(),
                z: BigUint::one(),
            },
        }
    }

    fn to_affine(&self, j: &Jacobian) -> Point {
        if j.z.is_zero() {
            return Point::Identity;
        }
        let z_inv = j.z.modpow(&(&self.p - 2u32), &self.p);
        let z_inv2 = self.fmul(&z_inv, &z_inv);
        let z_inv3 = self.fmul(&z_inv2, &z_inv);
        Point::Affine {
            x: self.fmul(&j.x, &z_inv2),
            y: self.fmul(&j.y, &z_inv3),
        }
    }

    // dbl-2007-bl, valid for any c.
    fn jac_double(&self, a: &Jacobian) -> Jacobian {
        if a.z.is_zero() || a.y.is_zero() {
            return Jacobian::infinity();
        }
        let xx = self.fmul(&a.x, &a.x);
        let yy = self.fmul(&a.y, &a.y);
        let yyyy = self.fmul(&yy, &yy);
        let zz = self.fmul(&a.z, &a.z);
        let x_plus_yy = self.fadd(&a.x, &yy);
        let t = self.fsub(&self.fsub(&self.fmul(&x_plus_yy, &x_plus_yy), &xx), &yyyy);
        let s = self.fadd(&t, &t);
        let m = self.fadd(
            &self.fadd(&self.fadd(&xx, &xx), &xx),
            &self.fmul(&self.c, &self.fmul(&zz, &zz)),
        );
        let x3 = self.fsub(&self.fmul(&m, &m), &self.fadd(&s, &s));
        let yyyy2 = self.fadd(&yyyy, &yyyy);
        let yyyy4 = self.fadd(&yyyy2, &yyyy2);
        let y3 = self.fsub(
            &self.fmul(&m, &self.fsub(&s, &x3)),
            &self.fadd(&yyyy4, &yyyy4),
        );
        let y_plus_z = self.fadd(&a.y, &a.z);
        let z3 = self.fsub(&self.fsub(&self.fmul(&y_plus_z, &y_plus_z), &yy), &zz);
        Jacobian {
            x: x3,
            y: y3,
            z: z3,
        }
    }

    // add-2007-bl.
    fn jac_add(&self, a: &Jacobian, b: &Jacobian) -> Jacobian {
        if a.z.is_zero() {
            return b.clone();
        }
        if b.z.is_zero() {
            return a.clone();
        }
        let z1z1 = self.fmul(&a.z, &a.z);
        let z2z2 = self.fmul(&b.z, &b.z);
        let u1 = self.fmul(&a.x, &z2z2);
        let u2 = self.fmul(&b.x, &z1z1);
        let s1 = self.fmul(&self.fmul(&a.y, &b.z), &z2z2);
        let s2 = self.fmul(&self.fmul(&b.y, &a.z), &z1z1);
        let h = self.fsub(&u2, &u1);
        let s2_s1 = self.fsub(&s2, &s1);
        let r = self.fadd(&s2_s1, &s2_s1);
        if h.is_zero() {
            return if r.is_zero() {
                self.jac_double(a)
            } else {
                Jacobian::infinity()
            };
        }
        let two_h = self.fadd(&h, &h);
        let i = self.fmul(&two_h, &two_h);
        let j = self.fmul(&h, &i);
        let v = self.fmul(&u1, &i);
        let x3 = self.fsub(&self.fsub(&self.fmul(&r, &r), &j), &self.fadd(&v, &v));
        let s1j = self.fmul(&s1, &j);
        let y3 = self.fsub(&self.fmul(&r, &self.fsub(&v, &x3)), &self.fadd(&s1j, &s1j));
        let z_sum = self.fadd(&a.z, &b.z);
        let z3 = self.fmul(
            &self.fsub(&self.fsub(&self.fmul(&z_sum, &z_sum), &z1z1), &z2z2),
            &h,
        );
        Jacobian {
            x: x3,
            y: y3,
            z: z3,
        }
    }
}

impl Jacobian {
    fn infinity() -> Self {
        Jacobian {
            x: BigUint::one(),
            y: BigUint::one(),
            z: BigUint::zero(),
        }
    }
}

/// Miller-Rabin with the first twelve prime bases.
fn is_probable_prime(n: &BigUint) -> bool {
    const BASES: [u32; 12] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37];
    let two = BigUint::from(2u32);
    if *n < two {
        return false;
    }
    for b in BASES {
        let b = BigUint::from(b);
        if *n == b {
            return true;
        }
        if (n % &b).is_zero() {
            return false;
        }
    }
    let n_minus_1 = n - 1u32;
    let s = n_minus_1.trailing_zeros().unwrap_or(0);
    let d = &n_minus_1 >> s;
    'bases: for b in BASES {
        let mut x = BigUint::from(b).modpow(&d, n);
        if x.is_one() || x == n_minus_1 {
            continue;
        }
        for _ in 1..s {
            x = x.modpow(&two, n);
            if x == n_minus_1 {
                continue 'bases;
            }
        }
        return false;
    }
    true
}

/// Hex description of a curve profile as it appears in a profile file.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProfileSpec {
    pub p: String,
    pub c: String,
    pub d: String,
    pub q: String,
    pub gx: String,
    pub gy: String,
}

#[derive(Debug, Default, Serialize, Deserialize)]
pub struct ProfileFile {
    pub profiles: BTreeMap<String, ProfileSpec>,
}

fn parse_hex(field: &str, s: &str) -> Result<BigUint> {
    let s = s.trim();
    if s.is_empty() || s.starts_with("0x") || s.chars().any(|c| c.is_ascii_uppercase()) {
        return Err(Error::Malformed(format!(
            "{field}: expected lowercase hex without prefix"
        )));
    }
    BigUint::parse_bytes(s.as_bytes(), 16)
        .ok_or_else(|| Error::Malformed(format!("{field}: invalid hex {s:?}")))
}

impl ProfileSpec {
    pub fn to_params(&self, name: &str) -> Result<CurveParams> {
        Ok(CurveParams {
            name: name.to_string(),
            p: parse_hex("p", &self.p)?,
            c: parse_hex("c", &self.c)?,
            d: parse_hex("d", &self.d)?,
            q: parse_hex("q", &self.q)?,
            g: Point::new(parse_hex("gx", &self.gx)?, parse_hex("gy", &self.gy)?),
        })
    }

    pub fn from_params(curve: &CurveParams) -> Self {
        let (gx, gy) = curve.g.coords().expect("generator is affine");
        ProfileSpec {
            p: curve.p.to_str_radix(16),
            c: curve.c.to_str_radix(16),
            d: curve.d.to_str_radix(16),
            q: curve.q.to_str_radix(16),
            gx: gx.to_str_radix(16),
            gy: gy.to_str_radix(16),
        }
    }
}

impl ProfileFile {
    pub fn parse(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Malformed(e.to_string()))
    }

    /// Look up and validate a named profile.
    pub fn load(&self, name: &str) -> Result<CurveParams> {
        let spec = self
            .profiles
            .get(name)
            .ok_or_else(|| Error::UnknownProfile(name.to_string()))?;
        let curve = spec.to_params(name)?;
        curve.validate()?;
        Ok(curve)
    }
}

const BUILTIN_PROFILES: &str = r#"
# y^2 = x^3 + x + 1 over F_23: 28 points, generator 4·(3,10) of prime order 7.
[profiles.toy23]
p = "17"
c = "1"
d = "1"
q = "7"
gx = "11"
gy = "3"

[profiles.p256]
p = "ffffffff00000001000000000000000000000000ffffffffffffffffffffffff"
c = "ffffffff00000001000000000000000000000000fffffffffffffffffffffffc"
d = "5ac635d8aa3a93e7b3ebbd55769886bc651d06b0cc53b0f63bce3c3e27d2604b"
q = "ffffffff00000000ffffffffffffffffbce6faada7179e84f3b9cac2fc632551"
gx = "6b17d1f2e12c4247f8bce6e563a440f277037d812deb33a0f4a13945d898c296"
gy = "4fe342e2fe1a7f9b8ee7eb4a7c0f9e162bce33576b315ececbb6406837bf51f5"

[profiles.secp256k1]
p = "fffffffffffffffffffffffffffffffffffffffffffffffffffffffefffffc2f"
c = "0"
d = "7"
q = "fffffffffffffffffffffffffffffffebaaedce6af48a03bbfd25e8cd0364141"
gx = "79be667ef9dcbbac55a06295ce870b07029bfcdb2dce28d959f2815b16f81798"
gy = "483ada7726a3c4655da4fbfc0e1108a8fd17b448a68554199c47d08ffb10d4b8"
"#;

/// The profiles shipped with the crate: `toy23`, `p256`, `secp256k1`.
pub fn builtin_profiles() -> ProfileFile {
    ProfileFile::parse(BUILTIN_PROFILES).expect("builtin profiles parse")
}

/// Resolve one of the built-in profiles by name.
pub fn profile(name: &str) -> Result<CurveParams> {
    builtin_profiles().load(name)
}
