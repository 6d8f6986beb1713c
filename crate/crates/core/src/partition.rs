//! The m two-way partitions of the standard basis of F_q^(2^m) and their
//! intersections.
//!
//! Axis i splits the basis by bit i of the m-bit binary expansion of the
//! index, with axis 1 on the most significant bit: index j lies in V_{i,t}
//! iff that bit equals t. Any l distinct axes intersect in exactly 2^(m-l)
//! indices.

use std::sync::Arc;

use thiserror::Error;

use crate::gf::{FieldElement, FieldSpec};
use crate::linalg::Matrix;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum PartitionError {
    #[error("m = {0} out of supported range 1..=6")]
    MOutOfRange(usize),
    #[error("axis {0} out of range 1..={1}")]
    AxisOutOfRange(usize, usize),
    #[error("quad split requires two distinct axes, got {0} twice")]
    EqualAxes(usize),
}

/// The m binary partitions V_{i,0} / V_{i,1} of {0, ..., 2^m - 1}.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Partition {
    m: usize,
    /// sets[i - 1][t] is the ascending index list of V_{i,t}.
    sets: Vec<[Vec<usize>; 2]>,
}

impl Partition {
    pub fn m(&self) -> usize {
        self.m
    }

    pub fn alpha(&self) -> usize {
        1 << self.m
    }

    /// The ascending index list of V_{axis,t}; axis in 1..=m, t in {0, 1}.
    pub fn set(&self, axis: usize, t: usize) -> &[usize] {
        assert!(axis >= 1 && axis <= self.m, "axis out of range");
        assert!(t <= 1);
        &self.sets[axis - 1][t]
    }

    /// V_{axis,t} for the extended axis numbering V_{i+sm,t} = V_{i,t}.
    pub fn set_extended(&self, axis: usize, t: usize) -> &[usize] {
        self.set(reduce_axis(axis, self.m), t)
    }

    /// The four pairwise intersections V_{a,b,s,t} = V_{a,s} n V_{b,t},
    /// ordered (0,0), (0,1), (1,0), (1,1), each ascending and of size
    /// 2^(m-2). Axes reduce mod m and must differ after reduction.
    pub fn quad_split(
        &self,
        axis_a: usize,
        axis_b: usize,
    ) -> Result<[Vec<usize>; 4], PartitionError> {
        let a = reduce_axis(axis_a, self.m);
        let b = reduce_axis(axis_b, self.m);
        if a == b {
            return Err(PartitionError::EqualAxes(a));
        }
        let mut out: [Vec<usize>; 4] = Default::default();
        for s in 0..2 {
            for t in 0..2 {
                out[s * 2 + t] = self
                    .set(a, s)
                    .iter()
                    .copied()
                    .filter(|j| self.set(b, t).contains(j))
                    .collect();
            }
        }
        Ok(out)
    }
}

/// Reduce an extended axis index i >= 1 to its base axis ((i - 1) mod m) + 1.
pub fn reduce_axis(axis: usize, m: usize) -> usize {
    assert!(axis >= 1, "axes are 1-based");
    (axis - 1) % m + 1
}

/// The partition axis used by node i: ((i - 1) mod m) + 1.
pub fn axis_of(node_index: usize, m: usize) -> usize {
    reduce_axis(node_index, m)
}

/// Build the standard partition for 1 <= m <= 6.
pub fn standard_partition(m: usize) -> Result<Partition, PartitionError> {
    if m == 0 || m > 6 {
        return Err(PartitionError::MOutOfRange(m));
    }
    let alpha = 1usize << m;
    let mut sets = Vec::with_capacity(m);
    for axis in 1..=m {
        let bit = m - axis; // axis 1 = most significant bit
        let mut v0 = Vec::with_capacity(alpha / 2);
        let mut v1 = Vec::with_capacity(alpha / 2);
        for j in 0..alpha {
            if (j >> bit) & 1 == 0 {
                v0.push(j);
            } else {
                v1.push(j);
            }
        }
        sets.push([v0, v1]);
    }
    Ok(Partition { m, sets })
}

/// Matrix whose rows are the standard basis rows e_j for the given indices,
/// optionally scaled per row. Materializes V_{i,t} and combinations like
/// V_{i,0} + t * V_{i,1}.
pub fn selector_matrix(
    field: &Arc<FieldSpec>,
    alpha: usize,
    indices: &[usize],
    coeffs: Option<&[FieldElement]>,
) -> Matrix {
    if let Some(cs) = coeffs {
        assert_eq!(cs.len(), indices.len(), "one coefficient per row");
    }
    let mut m = Matrix::zeros(field, indices.len(), alpha);
    for (r, &j) in indices.iter().enumerate() {
        assert!(j < alpha, "basis index out of range");
        let v = match coeffs {
            Some(cs) => cs[r].clone(),
            None => field.one(),
        };
        m.set(r, j, v);
    }
    m
}
