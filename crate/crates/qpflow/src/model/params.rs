//! Flat parameter storage with a named-range index map.
//!
//! Every network stores its parameters as one `Vec<f64>`; the layout names
//! contiguous ranges ("pre.w", "quantum", "layer0.b", …) that partition
//! `0..d`. Optimizers and the variational posterior treat the vector as
//! opaque; anything that needs a specific block goes through the layout.

use super::ModelError;
use serde::{Deserialize, Serialize};
use std::ops::Range;

/// One named contiguous block of the flat vector.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NamedRange {
    pub name: String,
    pub start: usize,
    pub end: usize,
}

/// Ordered named ranges partitioning `0..len()`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParamLayout {
    pub ranges: Vec<NamedRange>,
}

impl ParamLayout {
    /// Builds consecutive ranges from `(name, width)` parts.
    pub fn from_parts(parts: &[(&str, usize)]) -> Self {
        let mut ranges = Vec::with_capacity(parts.len());
        let mut start = 0;
        for &(name, width) in parts {
            ranges.push(NamedRange {
                name: name.to_string(),
                start,
                end: start + width,
            });
            start += width;
        }
        ParamLayout { ranges }
    }

    /// Total parameter count.
    pub fn len(&self) -> usize {
        self.ranges.last().map_or(0, |r| r.end)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn range(&self, name: &str) -> Result<Range<usize>, ModelError> {
        self.ranges
            .iter()
            .find(|r| r.name == name)
            .map(|r| r.start..r.end)
            .ok_or_else(|| ModelError::UnknownRange {
                name: name.to_string(),
            })
    }

    /// Copies one named block out of the flat vector.
    pub fn gather(&self, params: &FlatParams, name: &str) -> Result<Vec<f64>, ModelError> {
        self.check(params)?;
        Ok(params.values[self.range(name)?].to_vec())
    }

    /// Writes one named block back into the flat vector.
    pub fn scatter(
        &self,
        params: &mut FlatParams,
        name: &str,
        values: &[f64],
    ) -> Result<(), ModelError> {
        self.check(params)?;
        let range = self.range(name)?;
        if values.len() != range.len() {
            return Err(ModelError::RangeLength {
                name: name.to_string(),
                got: values.len(),
                expected: range.len(),
            });
        }
        params.values[range].copy_from_slice(values);
        Ok(())
    }

    fn check(&self, params: &FlatParams) -> Result<(), ModelError> {
        if params.len() != self.len() {
            return Err(ModelError::ParamLength {
                got: params.len(),
                expected: self.len(),
            });
        }
        Ok(())
    }
}

/// The flat parameter vector itself.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FlatParams {
    pub values: Vec<f64>,
}

impl FlatParams {
    pub fn zeros(d: usize) -> Self {
        FlatParams {
            values: vec![0.0; d],
        }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}
