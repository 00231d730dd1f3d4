//! Truncated q-expansions with weight, level and character metadata.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive};
use thiserror::Error;

use crate::characters::{CharError, DirichletCharacter};
use crate::cyclotomic::{CycError, CyclotomicNumber};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum QError {
    #[error("precision {have} is below the required {need}")]
    Precision { have: usize, need: usize },
    #[error("precondition failed: {0}")]
    Precondition(String),
    #[error("square-free level hypothesis violated: {0}")]
    LevelHypothesis(String),
    #[error("bound violated: {0}")]
    Bound(String),
    #[error("bad q-expansion data: {0}")]
    Parse(String),
    #[error(transparent)]
    Character(#[from] CharError),
    #[error(transparent)]
    Cyclotomic(#[from] CycError),
}

/// sum a(n) q^n for 0 <= n <= precision.
#[derive(Debug, Clone, PartialEq)]
pub struct QExpansion {
    weight: i64,
    level: u64,
    character: DirichletCharacter,
    coeffs: Vec<CyclotomicNumber>,
}

impl QExpansion {
    /// `coeffs[n]` is a(n); the vector must hold at least a(0).
    pub fn new(
        weight: i64,
        level: u64,
        character: DirichletCharacter,
        coeffs: Vec<CyclotomicNumber>,
    ) -> Self {
        assert!(!coeffs.is_empty(), "a q-expansion holds at least a(0)");
        QExpansion {
            weight,
            level: level.max(1),
            character,
            coeffs,
        }
    }

    pub fn from_integers(
        weight: i64,
        level: u64,
        character: DirichletCharacter,
        coeffs: impl IntoIterator<Item = BigInt>,
    ) -> Self {
        Self::new(
            weight,
            level,
            character,
            coeffs.into_iter().map(CyclotomicNumber::from_bigint).collect(),
        )
    }

    pub fn zero(weight: i64, level: u64, character: DirichletCharacter, precision: usize) -> Self {
        Self::new(weight, level, character, vec![CyclotomicNumber::zero(); precision + 1])
    }

    pub fn weight(&self) -> i64 {
        self.weight
    }

    pub fn level(&self) -> u64 {
        self.level
    }

    pub fn character(&self) -> &DirichletCharacter {
        &self.character
    }

    pub fn precision(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn coeffs(&self) -> &[CyclotomicNumber] {
        &self.coeffs
    }

    pub fn coeff(&self, n: usize) -> &CyclotomicNumber {
        &self.coeffs[n]
    }

    pub fn set_coeff(&mut self, n: usize, v: CyclotomicNumber) {
        self.coeffs[n] = v;
    }

    /// a(n) as an integer, if it is one.
    pub fn coeff_integer(&self, n: usize) -> Option<BigInt> {
        let q = self.coeffs[n].as_rational()?;
        q.is_integer().then(|| q.to_integer())
    }

    pub fn with_metadata(mut self, weight: i64, level: u64, character: DirichletCharacter) -> Self {
        self.weight = weight;
        self.level = level.max(1);
        self.character = character;
        self
    }

    pub fn truncate(&self, precision: usize) -> Self {
        let mut out = self.clone();
        out.coeffs.truncate(precision.min(self.precision()) + 1);
        out
    }

    pub fn require_precision(&self, need: usize) -> Result<(), QError> {
        if self.precision() < need {
            return Err(QError::Precision {
                have: self.precision(),
                need,
            });
        }
        Ok(())
    }

    /// True when a(n) = 0 for every n >= 1 in the window.
    pub fn is_cusp_zero(&self) -> bool {
        self.coeffs[1..].iter().all(|c| c.is_zero())
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(|c| c.is_zero())
    }

    /// |a(n)|^2 / n^(k-1), the squared Deligne-normalized coefficient.
    pub fn normalized_abs_sq(&self, n: usize) -> f64 {
        let c = &self.coeffs[n];
        if c.is_zero() {
            return 0.0;
        }
        let a2 = match c.as_rational() {
            Some(q) => rational_sq_f64(&q),
            None => c.abs_sq_f64(),
        };
        a2 / (n as f64).powf((self.weight - 1) as f64)
    }

    /// a'(n) = a(n) / n^((k-1)/2) for real coefficients.
    pub fn normalized(&self, n: usize) -> Option<f64> {
        let q = self.coeffs[n].as_rational()?;
        Some(rational_to_f64(&q) / (n as f64).powf((self.weight - 1) as f64 / 2.0))
    }

    /// max |a'(n)| n^-eps over 1 <= n <= precision.
    pub fn deligne_diagnostic(&self, eps: f64) -> f64 {
        (1..=self.precision())
            .map(|n| self.normalized_abs_sq(n).sqrt() / (n as f64).powf(eps))
            .fold(0.0, f64::max)
    }

    fn check_compatible(&self, other: &Self) -> Result<(), QError> {
        if self.weight != other.weight {
            return Err(QError::Precondition(format!(
                "weights differ ({} vs {})",
                self.weight, other.weight
            )));
        }
        Ok(())
    }

    /// Coefficient-wise sum on the common window; level becomes the lcm.
    pub fn try_add(&self, other: &Self) -> Result<Self, QError> {
        self.check_compatible(other)?;
        let p = self.precision().min(other.precision());
        let coeffs = (0..=p).map(|n| &self.coeffs[n] + &other.coeffs[n]).collect();
        Ok(QExpansion {
            weight: self.weight,
            level: crate::arith::lcm_u64(self.level, other.level),
            character: self.character.clone(),
            coeffs,
        })
    }

    pub fn try_sub(&self, other: &Self) -> Result<Self, QError> {
        self.try_add(&other.scale(&CyclotomicNumber::from_integer(-1)))
    }

    pub fn scale(&self, c: &CyclotomicNumber) -> Self {
        let mut out = self.clone();
        for a in &mut out.coeffs {
            *a = &*a * c;
        }
        out
    }

    pub fn scale_rational(&self, q: &BigRational) -> Self {
        let mut out = self.clone();
        for a in &mut out.coeffs {
            *a = a.scale(q);
        }
        out
    }

    /// Smallest square-free n >= 1 with a(n) != 0.
    pub fn first_squarefree_nonzero(&self) -> Option<usize> {
        (1..=self.precision())
            .find(|&n| !self.coeffs[n].is_zero() && crate::arith::is_squarefree(n as u64))
    }

    /// Coefficients agree on 0..=min precision.
    pub fn agrees_with(&self, other: &Self) -> bool {
        let p = self.precision().min(other.precision());
        (0..=p).all(|n| self.coeffs[n] == other.coeffs[n])
    }
}

pub(crate) fn rational_to_f64(q: &BigRational) -> f64 {
    if q.denom().is_one() {
        return q.numer().to_f64().unwrap_or(f64::NAN);
    }
    let n = q.numer().to_f64().unwrap_or(f64::NAN);
    let d = q.denom().to_f64().unwrap_or(f64::NAN);
    if n.is_finite() && d.is_finite() {
        n / d
    } else {
        q.to_f64().unwrap_or(f64::NAN)
    }
}

fn rational_sq_f64(q: &BigRational) -> f64 {
    let x = rational_to_f64(q);
    x * x
}

impl Default for QExpansion {
    fn default() -> Self {
        QExpansion::zero(0, 1, DirichletCharacter::principal(1), 0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> QExpansion {
        QExpansion::from_integers(
            12,
            1,
            DirichletCharacter::principal(1),
            [0, 1, -24, 252, -1472].map(BigInt::from),
        )
    }

    #[test]
    fn accessors_and_normalization() {
        let f = sample();
        assert_eq!(f.precision(), 4);
        assert_eq!(f.coeff_integer(2), Some(BigInt::from(-24)));
        let a2 = f.normalized(2).unwrap();
        assert!((a2 - (-24.0 / 2f64.powf(5.5))).abs() < 1e-12);
        assert!((f.normalized_abs_sq(3) - 252.0f64.powi(2) / 3f64.powi(11)).abs() < 1e-9);
        assert_eq!(f.first_squarefree_nonzero(), Some(1));
        assert!(f.require_precision(5).is_err());
    }

    #[test]
    fn linear_combinations() {
        let f = sample();
        let g = f.try_add(&f).unwrap();
        assert_eq!(g.coeff_integer(3), Some(BigInt::from(504)));
        assert!(f.try_sub(&f).unwrap().is_zero());
        let t = f.truncate(2);
        assert_eq!(t.precision(), 2);
        assert!(t.agrees_with(&f));
    }
}
