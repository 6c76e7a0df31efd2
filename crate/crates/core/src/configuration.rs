use crate::error::{domain, Error, Result};

/// Label γ:k of a particle, zero-based in both components.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ParticleId {
    pub gamma: usize,
    pub k: usize,
}

impl ParticleId {
    pub fn new(gamma: usize, k: usize) -> Self {
        ParticleId { gamma, k }
    }
}

impl std::fmt::Display for ParticleId {
    /// One-based `γ:k`, matching the usual particle notation.
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}:{}", self.gamma + 1, self.k + 1)
    }
}

/// A point of Dₙ^d: for each type, n nondecreasing positions.
#[derive(Clone, Debug, PartialEq)]
pub struct Configuration {
    positions: Vec<Vec<f64>>,
}

impl Configuration {
    pub fn new(positions: Vec<Vec<f64>>) -> Result<Self> {
        let Some(first) = positions.first() else {
            return Err(domain("a configuration needs at least one type"));
        };
        let n = first.len();
        if n == 0 {
            return Err(domain("a configuration needs at least one particle per type"));
        }
        for row in &positions {
            if row.len() != n {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    found: row.len(),
                });
            }
            if let Some(bad) = row.iter().position(|x| !x.is_finite()) {
                return Err(domain(format!("non-finite position at index {bad}")));
            }
            if let Some(index) = row.windows(2).position(|w| w[0] > w[1]) {
                return Err(Error::UnsortedInput { index: index + 1 });
            }
        }
        Ok(Configuration { positions })
    }

    /// Skips validation; callers guarantee the Dₙ^d invariants.
    pub(crate) fn from_sorted(positions: Vec<Vec<f64>>) -> Self {
        debug_assert!(positions.iter().all(|r| r.windows(2).all(|w| w[0] <= w[1])));
        Configuration { positions }
    }

    pub fn d(&self) -> usize {
        self.positions.len()
    }

    pub fn n(&self) -> usize {
        self.positions[0].len()
    }

    pub fn positions(&self, gamma: usize) -> &[f64] {
        &self.positions[gamma]
    }

    pub fn position(&self, id: ParticleId) -> f64 {
        self.positions[id.gamma][id.k]
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.positions
    }

    pub fn into_rows(self) -> Vec<Vec<f64>> {
        self.positions
    }

    /// Largest absolute position.
    pub fn scale(&self) -> f64 {
        self.positions
            .iter()
            .flatten()
            .fold(0.0, |m: f64, x| m.max(x.abs()))
    }

    pub(crate) fn same_shape(&self, other: &Configuration) -> Result<()> {
        if self.d() != other.d() {
            return Err(Error::DimensionMismatch {
                expected: self.d(),
                found: other.d(),
            });
        }
        if self.n() != other.n() {
            return Err(Error::DimensionMismatch {
                expected: self.n(),
                found: other.n(),
            });
        }
        Ok(())
    }
}
