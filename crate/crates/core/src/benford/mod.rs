//! First-digit statistics: standard and generalized Benford laws, empirical
//! digit distributions, chi-square divergence, and parameter fitting.

mod fit;
mod params;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::jpeg::CoefficientStream;

pub use fit::{fit_gbl_params, sse, FitConfig, FitResult};
pub use params::{
    builtin_params, default_param_table, format_param_table, parse_param_table, ParamTable,
    BUILTIN_PARAMS,
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BenfordError {
    #[error("zero has no first significant digit")]
    ZeroHasNoFirstDigit,
    #[error("non-finite input {0}")]
    NonFiniteInput(f64),
    #[error("invalid generalized Benford parameters N={n}, q={q}, s={s}")]
    InvalidParams { n: f64, q: f64, s: f64 },
    #[error("empty coefficient stream, no digits to count")]
    EmptyStream,
    #[error("model probability for digit {0} is not positive")]
    ModelHasZeroBin(usize),
    #[error("no start point in the search box satisfies the parameter constraints")]
    NoValidStart,
    #[error("invalid digit distribution: {0}")]
    InvalidDistribution(String),
    #[error("parameter file line {line}: {msg}")]
    ParamFile { line: usize, msg: String },
}

/// Leading decimal digit of `|v|`.
pub fn first_digit(v: f64) -> Result<u8, BenfordError> {
    if !v.is_finite() {
        return Err(BenfordError::NonFiniteInput(v));
    }
    if v == 0.0 {
        return Err(BenfordError::ZeroHasNoFirstDigit);
    }
    // Scientific formatting is exact about the decimal exponent, which
    // log10/powi arithmetic is not near powers of ten.
    let s = format!("{:e}", v.abs());
    Ok(s.as_bytes()[0] - b'0')
}

/// Leading decimal digit of a nonzero integer.
#[inline]
pub fn first_digit_int(v: i64) -> Option<u8> {
    let mut m = v.unsigned_abs();
    if m == 0 {
        return None;
    }
    while m >= 10 {
        m /= 10;
    }
    Some(m as u8)
}

/// Tallies of first digits 1..=9 (index 0 is digit 1).
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct DigitHistogram {
    pub counts: [u64; 9],
    pub total: u64,
}

impl DigitHistogram {
    pub fn add_digit(&mut self, d: u8) {
        debug_assert!((1..=9).contains(&d));
        self.counts[usize::from(d - 1)] += 1;
        self.total += 1;
    }

    /// Tallies nonzero integers; zeros are skipped.
    pub fn from_ints(values: impl IntoIterator<Item = i64>) -> Self {
        let mut h = Self::default();
        for d in values.into_iter().filter_map(first_digit_int) {
            h.add_digit(d);
        }
        h
    }

    /// Tallies finite nonzero reals; zeros and non-finite values are skipped.
    pub fn from_reals(values: impl IntoIterator<Item = f64>) -> Self {
        let mut h = Self::default();
        for d in values.into_iter().filter_map(|v| first_digit(v).ok()) {
            h.add_digit(d);
        }
        h
    }

    pub fn count(&self, digit: usize) -> u64 {
        self.counts[digit - 1]
    }

    pub fn distribution(&self) -> Result<DigitDistribution, BenfordError> {
        if self.total == 0 {
            return Err(BenfordError::EmptyStream);
        }
        let n = self.total as f64;
        Ok(DigitDistribution(self.counts.map(|c| c as f64 / n)))
    }
}

/// Probabilities over first digits 1..=9 (index 0 is digit 1).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DigitDistribution(pub [f64; 9]);

impl DigitDistribution {
    /// Probability of `digit` in 1..=9.
    pub fn p(&self, digit: usize) -> f64 {
        self.0[digit - 1]
    }

    pub fn sum(&self) -> f64 {
        self.0.iter().sum()
    }

    /// Accepts nine nonnegative finite values summing to 1 within `tol`.
    pub fn from_probabilities(p: &[f64], tol: f64) -> Result<Self, BenfordError> {
        let arr: [f64; 9] = p.try_into().map_err(|_| {
            BenfordError::InvalidDistribution(format!("expected 9 probabilities, got {}", p.len()))
        })?;
        if arr.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(BenfordError::InvalidDistribution(
                "probabilities must be finite and nonnegative".into(),
            ));
        }
        let total: f64 = arr.iter().sum();
        if (total - 1.0).abs() > tol {
            return Err(BenfordError::InvalidDistribution(format!(
                "probabilities sum to {total}, not 1"
            )));
        }
        Ok(Self(arr))
    }

    /// Scaled copy summing to exactly one (up to rounding).
    pub fn normalized(&self) -> Self {
        let s = self.sum();
        Self(self.0.map(|p| p / s))
    }
}

/// `p(x) = log10(1 + 1/x)`.
pub fn standard_benford() -> DigitDistribution {
    let mut p = [0.0; 9];
    for (i, v) in p.iter_mut().enumerate() {
        *v = (1.0 + 1.0 / (i + 1) as f64).log10();
    }
    DigitDistribution(p)
}

/// Parameters of `p(x) = N log10(1 + 1/(s + x^q))`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GblParams {
    pub n_factor: f64,
    pub q_exp: f64,
    pub s_shift: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub qf: Option<u32>,
}

impl GblParams {
    pub const fn new(n_factor: f64, q_exp: f64, s_shift: f64) -> Self {
        Self {
            n_factor,
            q_exp,
            s_shift,
            qf: None,
        }
    }

    pub const fn for_qf(mut self, qf: u32) -> Self {
        self.qf = Some(qf);
        self
    }

    /// `N > 0` and `s + x^q > 0` for every digit.
    pub fn is_valid(&self) -> bool {
        self.n_factor.is_finite()
            && self.q_exp.is_finite()
            && self.s_shift.is_finite()
            && self.n_factor > 0.0
            && (1..=9).all(|x| self.s_shift + (x as f64).powf(self.q_exp) > 0.0)
    }

    /// Model probability of a digit, without validity checks.
    #[inline]
    pub fn eval(&self, digit: usize) -> f64 {
        let denom = self.s_shift + (digit as f64).powf(self.q_exp);
        self.n_factor * (1.0 + 1.0 / denom).log10()
    }
}

/// Generalized Benford distribution as given by the parameters, not renormalized.
pub fn generalized_benford(params: &GblParams) -> Result<DigitDistribution, BenfordError> {
    if !params.is_valid() {
        return Err(BenfordError::InvalidParams {
            n: params.n_factor,
            q: params.q_exp,
            s: params.s_shift,
        });
    }
    let mut p = [0.0; 9];
    for (i, v) in p.iter_mut().enumerate() {
        *v = params.eval(i + 1);
    }
    Ok(DigitDistribution(p))
}

/// First-digit histogram and distribution of a coefficient stream.
pub fn digit_distribution(
    stream: &CoefficientStream,
) -> Result<(DigitHistogram, DigitDistribution), BenfordError> {
    let hist = DigitHistogram::from_ints(stream.values.iter().map(|&v| i64::from(v)));
    let dist = hist.distribution()?;
    Ok((hist, dist))
}

/// `Σ (actual(x) − model(x))² / model(x)` over the nine digits.
///
/// Not symmetric: the model supplies the denominator.
pub fn chi_square_divergence(
    actual: &DigitDistribution,
    model: &DigitDistribution,
) -> Result<f64, BenfordError> {
    let mut chi = 0.0;
    for (i, (&a, &m)) in actual.0.iter().zip(model.0.iter()).enumerate() {
        if m.is_nan() || m <= 0.0 {
            return Err(BenfordError::ModelHasZeroBin(i + 1));
        }
        let d = a - m;
        chi += d * d / m;
    }
    Ok(chi)
}
