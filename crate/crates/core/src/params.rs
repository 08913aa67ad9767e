//! Problem parameters, critical exponents and the explicit bubble family.

use std::fmt;
use std::str::FromStr;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

/// A real parameter that is kept exact whenever its input was rational.
#[derive(Debug, Clone, PartialEq)]
pub enum Scalar {
    Exact(BigRational),
    Float(f64),
}

impl Scalar {
    pub fn integer(k: i64) -> Self {
        Scalar::Exact(BigRational::from_integer(BigInt::from(k)))
    }

    pub fn ratio(num: i64, den: i64) -> Self {
        Scalar::Exact(BigRational::new(BigInt::from(num), BigInt::from(den)))
    }

    pub fn to_f64(&self) -> f64 {
        match self {
            Scalar::Exact(q) => rational_to_f64(q),
            Scalar::Float(x) => *x,
        }
    }

    pub fn as_rational(&self) -> Option<&BigRational> {
        match self {
            Scalar::Exact(q) => Some(q),
            Scalar::Float(_) => None,
        }
    }

    /// Exact value when available; a float input is converted to the dyadic
    /// rational it represents, which is exact as well.
    pub fn to_rational(&self) -> Option<BigRational> {
        match self {
            Scalar::Exact(q) => Some(q.clone()),
            Scalar::Float(x) => BigRational::from_float(*x),
        }
    }

    pub fn is_exact(&self) -> bool {
        matches!(self, Scalar::Exact(_))
    }
}

pub(crate) fn rational_to_f64(q: &BigRational) -> f64 {
    // to_f64 on BigRational loses nothing relevant at the magnitudes we meet
    q.to_f64().unwrap_or_else(|| {
        let n = q.numer().to_f64().unwrap_or(f64::NAN);
        let d = q.denom().to_f64().unwrap_or(f64::NAN);
        n / d
    })
}

pub(crate) fn format_rational(q: &BigRational) -> String {
    if q.denom().is_one() {
        q.numer().to_string()
    } else {
        format!("{}/{}", q.numer(), q.denom())
    }
}

impl fmt::Display for Scalar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Scalar::Exact(q) => f.write_str(&format_rational(q)),
            Scalar::Float(x) => write!(f, "{x}"),
        }
    }
}

impl From<f64> for Scalar {
    fn from(x: f64) -> Self {
        Scalar::Float(x)
    }
}

impl From<i64> for Scalar {
    fn from(k: i64) -> Self {
        Scalar::integer(k)
    }
}

/// Parses `"3"`, `"7/30"`, `"0.25"` exactly; anything with an exponent
/// marker (`"1e-3"`) falls back to floating point.
impl FromStr for Scalar {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let t = s.trim();
        let bad = || Error::InvalidParams(format!("cannot parse number `{s}`"));
        if t.is_empty() {
            return Err(bad());
        }
        if let Some((a, b)) = t.split_once('/') {
            let num: BigInt = a.trim().parse().map_err(|_| bad())?;
            let den: BigInt = b.trim().parse().map_err(|_| bad())?;
            if den.is_zero() {
                return Err(bad());
            }
            return Ok(Scalar::Exact(BigRational::new(num, den)));
        }
        if t.contains(['e', 'E']) || t.contains("inf") || t.contains("nan") {
            let x: f64 = t.parse().map_err(|_| bad())?;
            return Ok(Scalar::Float(x));
        }
        let (neg, body) = match t.strip_prefix('-') {
            Some(rest) => (true, rest),
            None => (false, t.strip_prefix('+').unwrap_or(t)),
        };
        let (int_part, frac_part) = body.split_once('.').unwrap_or((body, ""));
        if int_part.is_empty() && frac_part.is_empty() {
            return Err(bad());
        }
        if !int_part.chars().chain(frac_part.chars()).all(|c| c.is_ascii_digit()) {
            return Err(bad());
        }
        let digits = format!("{int_part}{frac_part}");
        let mut num: BigInt = if digits.is_empty() { BigInt::zero() } else { digits.parse().map_err(|_| bad())? };
        if neg {
            num = -num;
        }
        let den = num_traits::pow(BigInt::from(10), frac_part.len());
        Ok(Scalar::Exact(BigRational::new(num, den)))
    }
}

impl Serialize for Scalar {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            Scalar::Exact(q) => serializer.serialize_str(&format_rational(q)),
            Scalar::Float(x) => serializer.serialize_f64(*x),
        }
    }
}

impl<'de> Deserialize<'de> for Scalar {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Text(String),
            Number(f64),
        }
        match Raw::deserialize(deserializer)? {
            Raw::Text(s) => s.parse().map_err(serde::de::Error::custom),
            Raw::Number(x) => Ok(Scalar::Float(x)),
        }
    }
}

/// Dimension `n`, nonlocality `mu` and the derived critical exponents.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProblemParams {
    n: u32,
    mu: Scalar,
    two_star_mu: Scalar,
    two_star: Scalar,
}

#[derive(Deserialize)]
struct RawParams {
    n: u32,
    mu: Scalar,
}

impl<'de> Deserialize<'de> for ProblemParams {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let raw = RawParams::deserialize(deserializer)?;
        make_params(raw.n, raw.mu).map_err(serde::de::Error::custom)
    }
}

/// Validates `(n, mu)` and populates `2*_mu = (2n - mu)/(n - 2)` and `2* = 2n/(n - 2)`.
///
/// Bounds are strict and checked without tolerance: `n >= 3`, `0 < mu < n`.
pub fn make_params(n: u32, mu: impl Into<Scalar>) -> Result<ProblemParams> {
    let mu = mu.into();
    if n < 3 {
        return Err(Error::InvalidParams(format!("dimension n = {n} must be at least 3")));
    }
    let nn = n as i64;
    let two_star = Scalar::ratio(2 * nn, nn - 2);
    let two_star_mu = match &mu {
        Scalar::Exact(q) => {
            let upper = BigRational::from_integer(BigInt::from(nn));
            if !q.is_positive() || *q >= upper {
                return Err(Error::InvalidParams(format!("mu = {} must lie in (0, {n})", format_rational(q))));
            }
            let num = BigRational::from_integer(BigInt::from(2 * nn)) - q;
            Scalar::Exact(num / BigRational::from_integer(BigInt::from(nn - 2)))
        }
        Scalar::Float(x) => {
            if !x.is_finite() || *x <= 0.0 || *x >= n as f64 {
                return Err(Error::InvalidParams(format!("mu = {x} must lie in (0, {n})")));
            }
            Scalar::Float((2.0 * n as f64 - x) / (n as f64 - 2.0))
        }
    };
    Ok(ProblemParams { n, mu, two_star_mu, two_star })
}

impl ProblemParams {
    pub fn new(n: u32, mu: f64) -> Result<Self> {
        make_params(n, Scalar::Float(mu))
    }

    pub fn n(&self) -> u32 {
        self.n
    }

    pub fn mu(&self) -> &Scalar {
        &self.mu
    }

    pub fn two_star_mu(&self) -> &Scalar {
        &self.two_star_mu
    }

    pub fn two_star(&self) -> &Scalar {
        &self.two_star
    }

    pub fn mu_f64(&self) -> f64 {
        self.mu.to_f64()
    }

    /// `2*_mu` as a float; the power in the nonlocal term.
    pub fn p(&self) -> f64 {
        self.two_star_mu.to_f64()
    }

    pub fn two_star_f64(&self) -> f64 {
        self.two_star.to_f64()
    }

    /// Mass term `n(n-2)/4` of the conformal Laplacian on the sphere.
    pub fn mass(&self) -> f64 {
        let n = self.n as f64;
        n * (n - 2.0) / 4.0
    }
}

/// Normalising constant `c_n = (n(n-2))^{(n-2)/4}` of the bubble.
pub fn bubble_constant(n: u32) -> f64 {
    let n = n as f64;
    (n * (n - 2.0)).powf((n - 2.0) / 4.0)
}

/// `U_{x0, lambda}(x) = lambda^{-(n-2)/2} c_n (1 + |x - x0|^2 / lambda^2)^{-(n-2)/2}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Bubble {
    pub center: Vec<f64>,
    pub scale: f64,
}

impl Bubble {
    pub fn new(center: Vec<f64>, scale: f64) -> Result<Self> {
        if !(scale > 0.0 && scale.is_finite()) {
            return Err(Error::InvalidParams(format!("bubble scale {scale} must be positive")));
        }
        Ok(Bubble { center, scale })
    }

    pub fn standard(n: u32) -> Self {
        Bubble { center: vec![0.0; n as usize], scale: 1.0 }
    }

    pub fn c_n(&self) -> f64 {
        bubble_constant(self.center.len() as u32)
    }
}

pub fn bubble_eval(b: &Bubble, params: &ProblemParams, x: &[f64]) -> f64 {
    let n = params.n() as f64;
    let dist2: f64 = x.iter().zip(&b.center).map(|(a, c)| (a - c) * (a - c)).sum();
    let h = -(n - 2.0) / 2.0;
    b.scale.powf(h) * bubble_constant(params.n()) * (1.0 + dist2 / (b.scale * b.scale)).powf(h)
}
