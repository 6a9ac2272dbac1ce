//! Code-offset fuzzy extractor over a repetition code.
//!
//! `gen` draws a uniform k-bit secret `w`, spreads every bit over a block of
//! `rho` template bits and publishes `sketch = B ⊕ C(w)`. `rep` undoes the
//! offset with a fresh reading and majority-decodes each block. The key is
//! `hash(w)`, so any block with more than `(rho - 1) / 2` flipped bits yields
//! an unrelated key rather than an error.

use std::fmt;
use std::str::FromStr;

use rand_core::RngCore;
use serde::{Deserialize, Serialize};

use crate::bytes::{Bytes32, HashAlg};
use crate::cost::{self, Op};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct FuzzyParams {
    /// Template length in bits.
    pub n: usize,
    /// Secret length in bits.
    pub k: usize,
    /// Repetition factor.
    pub rho: usize,
}

impl Default for FuzzyParams {
    fn default() -> Self {
        FuzzyParams {
            n: 640,
            k: 128,
            rho: 5,
        }
    }
}

impl FuzzyParams {
    pub fn new(k: usize, rho: usize) -> Result<Self> {
        let p = FuzzyParams { n: k * rho, k, rho };
        p.check()?;
        Ok(p)
    }

    pub fn check(&self) -> Result<()> {
        if self.k == 0 || self.rho == 0 {
            return Err(Error::BadFuzzyParams("k and rho must be positive".into()));
        }
        if self.rho.is_multiple_of(2) {
            return Err(Error::BadFuzzyParams(
                "rho must be odd for majority decoding".into(),
            ));
        }
        if self.n != self.k * self.rho {
            return Err(Error::BadFuzzyParams(format!(
                "n = {} but rho·k = {}",
                self.n,
                self.rho * self.k
            )));
        }
        if !self.n.is_multiple_of(4) {
            return Err(Error::BadFuzzyParams("n must be a multiple of 4".into()));
        }
        Ok(())
    }

    /// Flips per block that decoding always corrects.
    pub fn tolerance(&self) -> usize {
        (self.rho - 1) / 2
    }
}

/// An n-bit biometric reading.
#[derive(Clone, PartialEq, Eq)]
pub struct BiometricTemplate {
    bits: Vec<bool>,
}

impl BiometricTemplate {
    pub fn from_bits(bits: Vec<bool>) -> Self {
        BiometricTemplate { bits }
    }

    pub fn zeros(n: usize) -> Self {
        Self::from_bits(vec![false; n])
    }

    pub fn random(n: usize, rng: &mut impl RngCore) -> Self {
        Self::from_bits(random_bits(n, rng))
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }

    pub fn flip(&mut self, i: usize) {
        self.bits[i] = !self.bits[i];
    }

    /// XOR with an error pattern of the same length.
    pub fn with_errors(&self, errors: &[bool]) -> Self {
        Self::from_bits(xor_bits(&self.bits, errors))
    }

    pub fn hamming(&self, other: &Self) -> usize {
        self.bits
            .iter()
            .zip(&other.bits)
            .filter(|(a, b)| a != b)
            .count()
    }

    /// `n/4` lowercase hex digits, most significant bit first.
    pub fn to_hex(&self) -> String {
        bits_to_hex(&self.bits)
    }

    pub fn from_hex(s: &str) -> Result<Self> {
        Ok(Self::from_bits(hex_to_bits(s)?))
    }
}

impl fmt::Debug for BiometricTemplate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "BiometricTemplate({} bits)", self.bits.len())
    }
}

/// Public helper data (the code offset) plus the parameters used to make it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HelperData {
    pub params: FuzzyParams,
    pub sketch: Vec<bool>,
}

impl fmt::Display for HelperData {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}:{}:{}:{}",
            self.params.n,
            self.params.k,
            self.params.rho,
            bits_to_hex(&self.sketch)
        )
    }
}

impl FromStr for HelperData {
    type Err = Error;

    /// Parses `n:k:rho:sketch-hex`.
    fn from_str(s: &str) -> Result<Self> {
        let parts: Vec<&str> = s.trim().split(':').collect();
        let [n, k, rho, sketch] = parts[..] else {
            return Err(Error::Malformed("helper data must be n:k:rho:hex".into()));
        };
        let num = |v: &str| {
            v.parse::<usize>()
                .map_err(|e| Error::Malformed(format!("helper data: {e}")))
        };
        let params = FuzzyParams {
            n: num(n)?,
            k: num(k)?,
            rho: num(rho)?,
        };
        params.check()?;
        let sketch = hex_to_bits(sketch)?;
        if sketch.len() != params.n {
            return Err(Error::Malformed("sketch length differs from n".into()));
        }
        Ok(HelperData { params, sketch })
    }
}

impl Serialize for HelperData {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for HelperData {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        String::deserialize(d)?
            .parse()
            .map_err(serde::de::Error::custom)
    }
}

/// Gen/Rep pair bound to one parameter set and hash.
#[derive(Debug, Clone, Copy)]
pub struct FuzzyExtractor {
    pub params: FuzzyParams,
    pub hash: HashAlg,
}

impl FuzzyExtractor {
    pub fn new(params: FuzzyParams, hash: HashAlg) -> Result<Self> {
        params.check()?;
        Ok(FuzzyExtractor { params, hash })
    }

    /// Enrollment: returns the key σ and the public helper θ.
    pub fn gen(
        &self,
        template: &BiometricTemplate,
        rng: &mut impl RngCore,
    ) -> Result<(Bytes32, HelperData)> {
        self.check_len(template)?;
        cost::record(Op::RandomDraw);
        let secret = random_bits(self.params.k, rng);
        Ok(self.gen_with_secret(template, &secret))
    }

    /// Deterministic core of [`gen`](Self::gen) for a given secret `w`.
    pub fn gen_with_secret(
        &self,
        template: &BiometricTemplate,
        secret: &[bool],
    ) -> (Bytes32, HelperData) {
        let codeword = self.encode(secret);
        let helper = HelperData {
            params: self.params,
            sketch: xor_bits(template.bits(), &codeword),
        };
        (self.extract(secret), helper)
    }

    /// Reproduction from a noisy reading.
    pub fn rep(&self, template: &BiometricTemplate, helper: &HelperData) -> Result<Bytes32> {
        if helper.params != self.params {
            return Err(Error::BadFuzzyParams(
                "helper data was made with different parameters".into(),
            ));
        }
        self.check_len(template)?;
        if helper.sketch.len() != self.params.n {
            return Err(Error::Malformed("sketch length differs from n".into()));
        }
        let noisy_codeword = xor_bits(template.bits(), &helper.sketch);
        let secret = self.decode(&noisy_codeword);
        Ok(self.extract(&secret))
    }

    fn check_len(&self, template: &BiometricTemplate) -> Result<()> {
        if template.len() != self.params.n {
            return Err(Error::BadTemplateLength {
                expected: self.params.n,
                got: template.len(),
            });
        }
        Ok(())
    }

    fn encode(&self, secret: &[bool]) -> Vec<bool> {
        secret
            .iter()
            .flat_map(|&b| std::iter::repeat_n(b, self.params.rho))
            .collect()
    }

    fn decode(&self, codeword: &[bool]) -> Vec<bool> {
        codeword
            .chunks(self.params.rho)
            .map(|block| block.iter().filter(|&&b| b).count() * 2 > self.params.rho)
            .collect()
    }

    fn extract(&self, secret: &[bool]) -> Bytes32 {
        self.hash.hash(&pack_bits(secret))
    }
}

fn random_bits(n: usize, rng: &mut impl RngCore) -> Vec<bool> {
    let mut buf = vec![0u8; n.div_ceil(8)];
    rng.fill_bytes(&mut buf);
    (0..n)
        .map(|i| buf[i / 8] & (0x80 >> (i % 8)) != 0)
        .collect()
}

fn xor_bits(a: &[bool], b: &[bool]) -> Vec<bool> {
    a.iter().zip(b).map(|(x, y)| x ^ y).collect()
}

/// MSB-first packing; a trailing partial octet is zero-filled.
pub fn pack_bits(bits: &[bool]) -> Vec<u8> {
    let mut out = vec![0u8; bits.len().div_ceil(8)];
    for (i, &b) in bits.iter().enumerate() {
        if b {
            out[i / 8] |= 0x80 >> (i % 8);
        }
    }
    out
}

fn bits_to_hex(bits: &[bool]) -> String {
    bits.chunks(4)
        .map(|nib| {
            let v = nib.iter().fold(0u32, |acc, &b| (acc << 1) | b as u32) << (4 - nib.len());
            char::from_digit(v, 16).expect("nibble")
        })
        .collect()
}

fn hex_to_bits(s: &str) -> Result<Vec<bool>> {
    let mut bits = Vec::with_capacity(s.len() * 4);
    for ch in s.trim().chars() {
        let v = ch
            .to_digit(16)
            .ok_or_else(|| Error::Malformed(format!("invalid hex digit {ch:?}")))?;
        for shift in (0..4).rev() {
            bits.push(v >> shift & 1 == 1);
        }
    }
    Ok(bits)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand_chacha::rand_core::SeedableRng;
    use rand_chacha::ChaCha20Rng;

    fn fe(k: usize, rho: usize) -> FuzzyExtractor {
        FuzzyExtractor::new(FuzzyParams::new(k, rho).unwrap(), HashAlg::Sha256).unwrap()
    }

    #[test]
    fn params_validation() {
        assert!(FuzzyParams::default().check().is_ok());
        assert_eq!(FuzzyParams::default().tolerance(), 2);
        assert!(FuzzyParams::new(4, 2).is_err());
        assert!(FuzzyParams {
            n: 10,
            k: 4,
            rho: 3
        }
        .check()
        .is_err());
    }

    #[test]
    fn exact_template_reproduces_key() {
        let fx = fe(128, 5);
        let mut rng = ChaCha20Rng::seed_from_u64(7);
        let b = BiometricTemplate::random(640, &mut rng);
        let (sigma, helper) = fx.gen(&b, &mut rng).unwrap();
        assert_eq!(fx.rep(&b, &helper).unwrap(), sigma);
    }

    #[test]
    fn fresh_secret_changes_helper() {
        let fx = fe(128, 5);
        let mut rng = ChaCha20Rng::seed_from_u64(8);
        let b = BiometricTemplate::random(640, &mut rng);
        let (s1, h1) = fx.gen(&b, &mut rng).unwrap();
        let (s2, h2) = fx.gen(&b, &mut rng).unwrap();
        assert_ne!(h1, h2);
        assert_ne!(s1, s2);
    }

    #[test]
    fn zero_template_sketch_is_codeword() {
        let fx = fe(4, 3);
        let w = [true, false, true, true];
        let (_, helper) = fx.gen_with_secret(&BiometricTemplate::zeros(12), &w);
        let expected: Vec<bool> = [1, 1, 1, 0, 0, 0, 1, 1, 1, 1, 1, 1]
            .iter()
            .map(|&b| b == 1)
            .collect();
        assert_eq!(helper.sketch, expected);
    }

    #[test]
    fn two_flips_in_a_block_break_the_key() {
        let fx = fe(4, 3);
        let mut rng = ChaCha20Rng::seed_from_u64(11);
        let b = BiometricTemplate::random(12, &mut rng);
        let (sigma, helper) = fx.gen(&b, &mut rng).unwrap();
        let mut noisy = b.clone();
        noisy.flip(3);
        noisy.flip(5);
        assert_ne!(fx.rep(&noisy, &helper).unwrap(), sigma);
    }

    #[test]
    fn wrong_length_is_rejected() {
        let fx = fe(4, 3);
        let mut rng = ChaCha20Rng::seed_from_u64(1);
        let err = fx.gen(&BiometricTemplate::zeros(11), &mut rng).unwrap_err();
        assert_eq!(
            err,
            Error::BadTemplateLength {
                expected: 12,
                got: 11
            }
        );
        let (_, helper) = fx.gen(&BiometricTemplate::zeros(12), &mut rng).unwrap();
        assert!(matches!(
            fx.rep(&BiometricTemplate::zeros(16), &helper),
            Err(Error::BadTemplateLength { .. })
        ));
    }

    #[test]
    fn hex_forms() {
        let t = BiometricTemplate::from_hex("a5f").unwrap();
        assert_eq!(t.len(), 12);
        assert_eq!(t.to_hex(), "a5f");
        let fx = fe(4, 3);
        let (_, helper) = fx.gen_with_secret(&t, &[true, false, false, true]);
        let text = helper.to_string();
        assert!(text.starts_with("12:4:3:"));
        assert_eq!(text.parse::<HelperData>().unwrap(), helper);
        assert!("12:4:3".parse::<HelperData>().is_err());
        assert!("12:4:3:zz0".parse::<HelperData>().is_err());
    }

    #[test]
    fn sketch_bits_look_uniform() {
        // Chi-square over per-position ones counts for a fixed template.
        let fx = fe(16, 3);
        let mut rng = ChaCha20Rng::seed_from_u64(99);
        let b = BiometricTemplate::random(48, &mut rng);
        let trials = 4000usize;
        let mut ones = vec![0usize; 48];
        for _ in 0..trials {
            let (_, h) = fx.gen(&b, &mut rng).unwrap();
            for (c, &bit) in ones.iter_mut().zip(&h.sketch) {
                *c += bit as usize;
            }
        }
        // Bits inside one block move together, so only one per block is independent.
        let expected = trials as f64 / 2.0;
        let chi2: f64 = ones
            .iter()
            .step_by(3)
            .map(|&o| {
                let dev = o as f64 - expected;
                2.0 * dev * dev / expected
            })
            .sum();
        // 16 degrees of freedom; the 0.999 quantile is about 39.25.
        assert!(chi2 < 39.25, "chi2 = {chi2}");
    }
}
