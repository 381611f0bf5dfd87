use std::sync::Arc;

use crate::error::{CoreError, Result};

/// Tensor-product structure: ordered subsystem dimensions plus unique labels.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HilbertSpace {
    dims: Vec<usize>,
    labels: Vec<String>,
    /// Row-major strides: stride[k] = product of dims after k.
    strides: Vec<usize>,
}

impl HilbertSpace {
    pub fn new(subsystems: &[(&str, usize)]) -> Result<Arc<HilbertSpace>> {
        if subsystems.is_empty() {
            return Err(CoreError::InvalidDimension {
                dim: 0,
                reason: "space needs at least one subsystem".into(),
            });
        }
        let mut labels = Vec::with_capacity(subsystems.len());
        let mut dims = Vec::with_capacity(subsystems.len());
        for &(label, dim) in subsystems {
            if dim < 2 {
                return Err(CoreError::InvalidDimension {
                    dim,
                    reason: format!("subsystem `{label}` must have dimension >= 2"),
                });
            }
            if labels.iter().any(|l: &String| l == label) {
                return Err(CoreError::Parameter(format!(
                    "duplicate subsystem label `{label}`"
                )));
            }
            labels.push(label.to_string());
            dims.push(dim);
        }
        let mut strides = vec![1usize; dims.len()];
        for k in (0..dims.len().saturating_sub(1)).rev() {
            strides[k] = strides[k + 1] * dims[k + 1];
        }
        Ok(Arc::new(HilbertSpace {
            dims,
            labels,
            strides,
        }))
    }

    /// Single-subsystem space, used for unembedded local operators/states.
    pub fn single(label: &str, dim: usize) -> Result<Arc<HilbertSpace>> {
        HilbertSpace::new(&[(label, dim)])
    }

    pub fn total_dim(&self) -> usize {
        self.dims.iter().product()
    }

    pub fn n_subsystems(&self) -> usize {
        self.dims.len()
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn strides(&self) -> &[usize] {
        &self.strides
    }

    pub fn position(&self, label: &str) -> Result<usize> {
        self.labels
            .iter()
            .position(|l| l == label)
            .ok_or_else(|| CoreError::UnknownLabel(label.to_string()))
    }

    pub fn dim_of(&self, label: &str) -> Result<usize> {
        Ok(self.dims[self.position(label)?])
    }

    /// Flat index of a full multi-index (one entry per subsystem).
    pub fn flat_index(&self, multi: &[usize]) -> usize {
        debug_assert_eq!(multi.len(), self.dims.len());
        multi
            .iter()
            .zip(&self.strides)
            .map(|(&i, &s)| i * s)
            .sum()
    }

    /// Decompose a flat index into the per-subsystem multi-index.
    pub fn unpack(&self, mut flat: usize) -> Vec<usize> {
        let mut out = Vec::with_capacity(self.dims.len());
        for &s in &self.strides {
            out.push(flat / s);
            flat %= s;
        }
        out
    }

    /// Sub-space keeping only the named subsystems, in their original order.
    pub fn subspace(&self, keep: &[&str]) -> Result<Arc<HilbertSpace>> {
        let mut positions: Vec<usize> = keep
            .iter()
            .map(|l| self.position(l))
            .collect::<Result<_>>()?;
        positions.sort_unstable();
        positions.dedup();
        let subs: Vec<(&str, usize)> = positions
            .iter()
            .map(|&p| (self.labels[p].as_str(), self.dims[p]))
            .collect();
        HilbertSpace::new(&subs)
    }
}

/// Human-readable header like `qutrit:3 c1:3 c1p:18`.
pub fn space_header(space: &HilbertSpace) -> String {
    space
        .labels()
        .iter()
        .zip(space.dims())
        .map(|(l, d)| format!("{l}:{d}"))
        .collect::<Vec<_>>()
        .join(" ")
}
