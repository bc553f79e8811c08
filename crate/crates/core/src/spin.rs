//! Single-spin angular momentum operators (ħ = 1).
//!
//! Every local level is addressed by the integer `2m`, running over
//! `-2s, -2s + 2, ..., 2s`. Local matrices are ordered by ascending `2m`, so
//! the lowest projection `|-s⟩` is always index 0.

use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;

use crate::error::{DsapError, Result};

/// Spin magnitude stored as the integer `2s`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SpinMagnitude {
    twice_s: u32,
}

impl SpinMagnitude {
    pub const HALF: SpinMagnitude = SpinMagnitude { twice_s: 1 };
    pub const ONE: SpinMagnitude = SpinMagnitude { twice_s: 2 };
    pub const THREE_HALVES: SpinMagnitude = SpinMagnitude { twice_s: 3 };

    pub fn new(twice_s: u32) -> Result<Self> {
        if twice_s == 0 {
            return Err(DsapError::InvalidSpin(twice_s));
        }
        Ok(SpinMagnitude { twice_s })
    }

    pub fn twice_s(self) -> u32 {
        self.twice_s
    }

    pub fn s(self) -> f64 {
        self.twice_s as f64 / 2.0
    }

    /// Local Hilbert-space dimension `2s + 1`.
    pub fn dim(self) -> usize {
        self.twice_s as usize + 1
    }

    pub fn is_integer(self) -> bool {
        self.twice_s.is_multiple_of(2)
    }

    pub fn lowest(self) -> i32 {
        -(self.twice_s as i32)
    }

    pub fn highest(self) -> i32 {
        self.twice_s as i32
    }

    /// Allowed `2m` values in ascending order.
    pub fn projections(self) -> impl Iterator<Item = i32> + Clone {
        let top = self.twice_s as i32;
        (0..=self.twice_s as i32).map(move |k| -top + 2 * k)
    }

    pub fn contains(self, two_m: i32) -> bool {
        let top = self.twice_s as i32;
        (-top..=top).contains(&two_m) && (two_m + top) % 2 == 0
    }

    /// Position of `2m` in the ascending local basis.
    pub fn level(self, two_m: i32) -> Result<usize> {
        if !self.contains(two_m) {
            return Err(DsapError::InvalidProjection {
                two_m,
                twice_s: self.twice_s,
            });
        }
        Ok(((two_m + self.twice_s as i32) / 2) as usize)
    }

    /// Quanta above the lowest level, `m + s`.
    pub fn quanta(self, two_m: i32) -> usize {
        ((two_m + self.twice_s as i32) / 2) as usize
    }

    /// `⟨m+1|J⁺|m⟩ = sqrt(s(s+1) - m(m+1))`, or `None` at the top level.
    pub fn raising_element(self, two_m: i32) -> Option<f64> {
        if !self.contains(two_m) || two_m == self.highest() {
            return None;
        }
        let big_s = self.twice_s as i64;
        let big_m = two_m as i64;
        // s(s+1) - m(m+1) = (2s - 2m)(2s + 2m + 2) / 4
        let numerator = (big_s - big_m) * (big_s + big_m + 2);
        Some((numerator as f64 / 4.0).sqrt())
    }

    /// `⟨m-1|J⁻|m⟩`, or `None` at the bottom level.
    pub fn lowering_element(self, two_m: i32) -> Option<f64> {
        if !self.contains(two_m) || two_m == self.lowest() {
            return None;
        }
        self.raising_element(two_m - 2)
    }

    /// Label used in kets: `m` for integer spin, `2m` for half-integer spin.
    pub fn label_value(self, two_m: i32) -> i32 {
        if self.is_integer() {
            two_m / 2
        } else {
            two_m
        }
    }

    /// Inverse of [`label_value`](Self::label_value).
    pub fn from_label_value(self, label: i32) -> Result<i32> {
        let two_m = if self.is_integer() { 2 * label } else { label };
        self.level(two_m)?;
        Ok(two_m)
    }
}

impl fmt::Display for SpinMagnitude {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_integer() {
            write!(f, "{}", self.twice_s / 2)
        } else {
            write!(f, "{}/2", self.twice_s)
        }
    }
}

impl FromStr for SpinMagnitude {
    type Err = DsapError;

    /// Accepts `1/2`, `3/2`, `1`, `0.5`, `1.5`.
    fn from_str(text: &str) -> Result<Self> {
        let text = text.trim();
        let bad = || DsapError::SpinLabel(text.to_string());
        let twice = if let Some((num, den)) = text.split_once('/') {
            let num: u32 = num.trim().parse().map_err(|_| bad())?;
            match den.trim() {
                "2" => num,
                "1" => 2 * num,
                _ => return Err(bad()),
            }
        } else {
            let value: f64 = text.parse().map_err(|_| bad())?;
            let twice = 2.0 * value;
            if !twice.is_finite() || twice < 0.0 || (twice - twice.round()).abs() > 1e-12 {
                return Err(bad());
            }
            twice.round() as u32
        };
        SpinMagnitude::new(twice)
    }
}

/// Dense `d × d` operator on one spin, rows and columns ordered by ascending `2m`.
///
/// All entries are real under the Condon-Shortley convention.
#[derive(Clone, Debug, PartialEq)]
pub struct LocalOperator(pub DMatrix<f64>);

impl LocalOperator {
    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.0
    }

    pub fn adjoint(&self) -> LocalOperator {
        LocalOperator(self.0.transpose())
    }
}

pub fn jz(spin: SpinMagnitude) -> LocalOperator {
    let diag: Vec<f64> = spin.projections().map(|two_m| two_m as f64 / 2.0).collect();
    LocalOperator(DMatrix::from_diagonal(&nalgebra::DVector::from_vec(diag)))
}

pub fn jplus(spin: SpinMagnitude) -> LocalOperator {
    let d = spin.dim();
    let mut m = DMatrix::zeros(d, d);
    for (col, two_m) in spin.projections().enumerate() {
        if let Some(element) = spin.raising_element(two_m) {
            m[(col + 1, col)] = element;
        }
    }
    LocalOperator(m)
}

pub fn jminus(spin: SpinMagnitude) -> LocalOperator {
    jplus(spin).adjoint()
}
