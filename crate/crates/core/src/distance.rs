use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Rotated surface-code distance: odd and at least 3.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "u32", into = "u32")]
pub struct CodeDistance(u32);

impl CodeDistance {
    pub const MIN: CodeDistance = CodeDistance(3);

    pub fn new(d: u32) -> Result<Self> {
        if d < 3 || d.is_multiple_of(2) {
            return Err(Error::domain(format!(
                "code distance must be odd and at least 3, got {d}"
            )));
        }
        Ok(Self(d))
    }

    pub fn get(self) -> u32 {
        self.0
    }

    /// Exponent `(d + 1) / 2` of the logical error suppression.
    pub fn half_plus(self) -> u32 {
        self.0.div_ceil(2)
    }

    /// Smallest valid distance not below `d`.
    pub fn at_least(d: u32) -> Self {
        let d = d.max(3);
        Self(if d.is_multiple_of(2) { d + 1 } else { d })
    }

    pub fn next(self) -> Self {
        Self(self.0 + 2)
    }

    /// Data plus ancilla atoms of one patch, `2 d^2 - 1`.
    pub fn qubits_per_patch(self) -> u64 {
        let d = self.0 as u64;
        2 * d * d - 1
    }
}

impl TryFrom<u32> for CodeDistance {
    type Error = Error;
    fn try_from(d: u32) -> Result<Self> {
        Self::new(d)
    }
}

impl From<CodeDistance> for u32 {
    fn from(d: CodeDistance) -> u32 {
        d.0
    }
}

impl fmt::Display for CodeDistance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}
