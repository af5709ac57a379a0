//! Truncated graded sequence space: elements, the seminorm family, and the
//! sharp-cutoff smoothing operators.
//!
//! An element is a finite sequence of complex amplitudes indexed by integer
//! frequencies `-N..=N`. The grading is a weighted sup over modes,
//!
//! ```text
//! |x|_n = max_k (1 + |k|)^n |c_k|,
//! ```
//!
//! and the smoothing operator `S_theta` is the sharp frequency cutoff keeping
//! the modes with `1 + |k| <= theta`. With this pairing the smoothing,
//! rough-part, and interpolation inequalities all hold with constant exactly
//! one, so the verification suite needs no fudge factors. An l2-Sobolev
//! grading would serve equally well but drags lattice constants into every
//! bound; the weighted sup keeps them sharp.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Errors from element construction and space operations.
#[derive(Debug, Error)]
pub enum SpaceError {
    #[error("expected {expected} coefficients for truncation order {truncation}, got {got}")]
    CoefficientCount {
        truncation: usize,
        expected: usize,
        got: usize,
    },
    #[error("non-finite coefficient at frequency {frequency}")]
    NonFinite { frequency: i64 },
    #[error("seminorm index must be finite and >= 0, got {0}")]
    InvalidIndex(f64),
    #[error("smoothing parameter must be finite and >= 1, got {0}")]
    InvalidTheta(f64),
    #[error("index triple must satisfy k <= l <= n, got ({k}, {l}, {n})")]
    IndexOrder { k: f64, l: f64, n: f64 },
    #[error("degenerate input")]
    DegenerateInput,
}

/// Grading index `n >= 0` of a seminorm. Real-valued: derived indices such as
/// the solver's `s` and `s0` are generically non-integer.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(transparent)]
pub struct SeminormIndex(f64);

impl SeminormIndex {
    /// Panics on negative or non-finite values; use [`SeminormIndex::try_new`]
    /// for unvalidated input.
    pub fn new(value: f64) -> Self {
        Self::try_new(value).expect("seminorm index")
    }

    pub fn try_new(value: f64) -> Result<Self, SpaceError> {
        if !value.is_finite() || value < 0.0 {
            return Err(SpaceError::InvalidIndex(value));
        }
        Ok(Self(value))
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

impl std::fmt::Display for SeminormIndex {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Smoothing strength `theta >= 1`. The cutoff keeps frequencies with
/// `1 + |k| <= theta`; real values are used as-is, never rounded.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(transparent)]
pub struct SmoothingParam(f64);

impl SmoothingParam {
    pub fn new(theta: f64) -> Self {
        Self::try_new(theta).expect("smoothing parameter")
    }

    pub fn try_new(theta: f64) -> Result<Self, SpaceError> {
        if !theta.is_finite() || theta < 1.0 {
            return Err(SpaceError::InvalidTheta(theta));
        }
        Ok(Self(theta))
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

/// `(1 + |k|)^n`, the grading weight of frequency `k` at index `n`.
pub fn weight(frequency: i64, index: f64) -> f64 {
    (1.0 + frequency.unsigned_abs() as f64).powf(index)
}

/// Precomputed weight row for one seminorm index. Seminorm evaluation inside
/// sampling or fitting loops should go through a table; `powf` per mode per
/// call dominates otherwise.
#[derive(Debug, Clone)]
pub struct WeightTable {
    index: f64,
    weights: Vec<f64>,
}

impl WeightTable {
    pub fn new(truncation: usize, index: SeminormIndex) -> Self {
        Self::with_skew(truncation, index, 1.0)
    }

    /// Table with exponents scaled by `skew`. Only `skew = 1` grades the
    /// space correctly; other values exist as a negative control for the
    /// verification suite.
    pub fn with_skew(truncation: usize, index: SeminormIndex, skew: f64) -> Self {
        let n = truncation as i64;
        let weights = (-n..=n)
            .map(|k| weight(k, index.value() * skew))
            .collect();
        Self {
            index: index.value(),
            weights,
        }
    }

    pub fn index(&self) -> f64 {
        self.index
    }

    pub fn seminorm(&self, x: &GradedElement) -> f64 {
        assert_eq!(
            self.weights.len(),
            x.coeffs.len(),
            "weight table truncation mismatch"
        );
        x.coeffs
            .iter()
            .zip(&self.weights)
            .fold(0.0, |acc, (c, w)| acc.max(w * c.norm()))
    }
}

/// Serialized form: truncation order plus a frequency-ordered flat list of
/// `(frequency, re, im)` triples.
#[derive(Serialize, Deserialize)]
struct ElementRepr {
    truncation_order: usize,
    modes: Vec<(i64, f64, f64)>,
}

impl From<GradedElement> for ElementRepr {
    fn from(x: GradedElement) -> Self {
        let modes = x
            .iter_modes()
            .map(|(k, c)| (k, c.re, c.im))
            .collect();
        ElementRepr {
            truncation_order: x.truncation,
            modes,
        }
    }
}

impl TryFrom<ElementRepr> for GradedElement {
    type Error = SpaceError;

    fn try_from(repr: ElementRepr) -> Result<Self, SpaceError> {
        let mut x = GradedElement::zero(repr.truncation_order);
        for (k, re, im) in repr.modes {
            if k.unsigned_abs() as usize > repr.truncation_order {
                return Err(SpaceError::NonFinite { frequency: k });
            }
            x.coeffs[(k + repr.truncation_order as i64) as usize] = Complex64::new(re, im);
        }
        x.validate()?;
        Ok(x)
    }
}

/// One element of the truncated space: `2N + 1` complex amplitudes for
/// frequencies `-N..=N`. Immutable after construction; all operations return
/// fresh values, and elements with different truncation orders never combine.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(into = "ElementRepr", try_from = "ElementRepr")]
pub struct GradedElement {
    truncation: usize,
    coeffs: Vec<Complex64>,
}

impl GradedElement {
    pub fn new(truncation: usize, coeffs: Vec<Complex64>) -> Result<Self, SpaceError> {
        let expected = 2 * truncation + 1;
        if coeffs.len() != expected {
            return Err(SpaceError::CoefficientCount {
                truncation,
                expected,
                got: coeffs.len(),
            });
        }
        let x = Self { truncation, coeffs };
        x.validate()?;
        Ok(x)
    }

    fn validate(&self) -> Result<(), SpaceError> {
        for (k, c) in self.iter_modes() {
            if !c.re.is_finite() || !c.im.is_finite() {
                return Err(SpaceError::NonFinite { frequency: k });
            }
        }
        Ok(())
    }

    pub fn zero(truncation: usize) -> Self {
        Self {
            truncation,
            coeffs: vec![Complex64::new(0.0, 0.0); 2 * truncation + 1],
        }
    }

    /// Element with the given `(frequency, amplitude)` modes, zero elsewhere.
    pub fn from_modes(truncation: usize, modes: &[(i64, Complex64)]) -> Result<Self, SpaceError> {
        let mut x = Self::zero(truncation);
        for &(k, c) in modes {
            assert!(
                k.unsigned_abs() as usize <= truncation,
                "frequency {k} outside truncation order {truncation}"
            );
            x.coeffs[(k + truncation as i64) as usize] = c;
        }
        x.validate()?;
        Ok(x)
    }

    pub fn truncation_order(&self) -> usize {
        self.truncation
    }

    /// Amplitude at frequency `k`. Panics outside the truncation band.
    pub fn coeff(&self, k: i64) -> Complex64 {
        assert!(
            k.unsigned_abs() as usize <= self.truncation,
            "frequency {k} outside truncation order {}",
            self.truncation
        );
        self.coeffs[(k + self.truncation as i64) as usize]
    }

    pub fn iter_modes(&self) -> impl Iterator<Item = (i64, Complex64)> + '_ {
        let n = self.truncation as i64;
        self.coeffs.iter().enumerate().map(move |(i, &c)| (i as i64 - n, c))
    }

    pub(crate) fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub(crate) fn from_raw(truncation: usize, coeffs: Vec<Complex64>) -> Self {
        debug_assert_eq!(coeffs.len(), 2 * truncation + 1);
        Self { truncation, coeffs }
    }

    fn assert_same_space(&self, other: &Self) {
        assert_eq!(
            self.truncation, other.truncation,
            "truncation orders differ: {} vs {}",
            self.truncation, other.truncation
        );
    }

    pub fn add(&self, other: &Self) -> Self {
        self.assert_same_space(other);
        let coeffs = self
            .coeffs
            .iter()
            .zip(&other.coeffs)
            .map(|(a, b)| a + b)
            .collect();
        Self::from_raw(self.truncation, coeffs)
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.assert_same_space(other);
        let coeffs = self
            .coeffs
            .iter()
            .zip(&other.coeffs)
            .map(|(a, b)| a - b)
            .collect();
        Self::from_raw(self.truncation, coeffs)
    }

    pub fn scaled(&self, factor: f64) -> Self {
        let coeffs = self.coeffs.iter().map(|c| c * factor).collect();
        Self::from_raw(self.truncation, coeffs)
    }

    pub fn scaled_complex(&self, factor: Complex64) -> Self {
        let coeffs = self.coeffs.iter().map(|c| c * factor).collect();
        Self::from_raw(self.truncation, coeffs)
    }

    /// The graded seminorm `|x|_n = max_k (1 + |k|)^n |c_k|`. Monotone
    /// nondecreasing in `n`, absolutely homogeneous, subadditive.
    pub fn seminorm(&self, n: SeminormIndex) -> f64 {
        self.iter_modes()
            .fold(0.0, |acc, (k, c)| acc.max(weight(k, n.value()) * c.norm()))
    }

    /// Sharp-cutoff smoothing: keeps the amplitudes with `1 + |k| <= theta`,
    /// zeroes the rest. Linear, idempotent for fixed `theta`.
    pub fn smooth(&self, theta: SmoothingParam) -> Self {
        let coeffs = self
            .iter_modes()
            .map(|(k, c)| {
                if 1.0 + k.unsigned_abs() as f64 <= theta.value() {
                    c
                } else {
                    Complex64::new(0.0, 0.0)
                }
            })
            .collect();
        Self::from_raw(self.truncation, coeffs)
    }

    /// Rough part `x - smooth(x, theta)`. The splitting is exact:
    /// `smooth(x, theta) + rough(x, theta) == x` bitwise.
    pub fn rough(&self, theta: SmoothingParam) -> Self {
        self.sub(&self.smooth(theta))
    }

    /// Zero the mean mode `k = 0`.
    pub fn project_mean_zero(&self) -> Self {
        let mut coeffs = self.coeffs.clone();
        coeffs[self.truncation] = Complex64::new(0.0, 0.0);
        Self::from_raw(self.truncation, coeffs)
    }

    pub fn mean_mode(&self) -> Complex64 {
        self.coeffs[self.truncation]
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(|c| c.re == 0.0 && c.im == 0.0)
    }

    pub fn max_abs(&self) -> f64 {
        self.coeffs.iter().fold(0.0, |acc: f64, c| acc.max(c.norm()))
    }
}

/// `|x|_l / (|x|_k^{1-a} |x|_n^a)` with `a = (l - k)/(n - k)` (`a = 0` when
/// `n = k`). For the weighted-sup grading the ratio is at most one.
pub fn check_interpolation(
    x: &GradedElement,
    k: SeminormIndex,
    l: SeminormIndex,
    n: SeminormIndex,
) -> Result<f64, SpaceError> {
    let (kv, lv, nv) = (k.value(), l.value(), n.value());
    if !(kv <= lv && lv <= nv) {
        return Err(SpaceError::IndexOrder { k: kv, l: lv, n: nv });
    }
    if x.is_zero() {
        return Err(SpaceError::DegenerateInput);
    }
    let alpha = if nv == kv { 0.0 } else { (lv - kv) / (nv - kv) };
    let mid = x.seminorm(l);
    let low = x.seminorm(k);
    let high = x.seminorm(n);
    Ok(mid / (low.powf(1.0 - alpha) * high.powf(alpha)))
}
