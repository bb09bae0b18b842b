//! Discrete candidate-adjustment grids. Each action component indexes a
//! fixed symmetric ladder of pose offsets.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::PlanarPose;
use crate::scalar::Real;

/// Index triple into the x/y/yaw adjustment grids.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ActionIndex {
    pub x: usize,
    pub y: usize,
    pub yaw: usize,
}

impl ActionIndex {
    pub fn new(x: usize, y: usize, yaw: usize) -> Self {
        Self { x, y, yaw }
    }

    pub fn as_array(self) -> [usize; 3] {
        [self.x, self.y, self.yaw]
    }
}

/// One axis of candidate offsets, symmetric about zero.
#[derive(Debug, Clone, PartialEq)]
pub struct AxisGrid<T> {
    values: Vec<T>,
}

impl<T: Real> AxisGrid<T> {
    /// Grid {-k*step, ..., -step, 0, step, ..., k*step} with k = round(half_range / step).
    pub fn symmetric(half_range: T, step: T) -> Result<Self> {
        if !half_range.is_finite() || half_range < T::zero() {
            return Err(Error::InvalidConfig("grid half-range must be finite and >= 0".into()));
        }
        if !step.is_finite() || step <= T::zero() {
            return Err(Error::InvalidConfig("grid step must be finite and > 0".into()));
        }
        let k = (half_range / step).to_f64_lossy().round() as i64;
        let values = (-k..=k).map(|i| T::of(i as f64) * step).collect();
        Ok(Self { values })
    }

    /// Restores a grid from explicit values (e.g. a file header).
    pub fn from_values(values: Vec<T>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::InvalidConfig("grid must be nonempty".into()));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("grid value"));
        }
        if values.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidConfig("grid values must be strictly increasing".into()));
        }
        Ok(Self { values })
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn get(&self, index: usize) -> Option<T> {
        self.values.get(index).copied()
    }

    /// Largest representable offset magnitude.
    pub fn half_range(&self) -> T {
        self.values
            .iter()
            .fold(T::zero(), |acc, v| acc.max(v.abs()))
    }

    /// Index of the value closest to `target`; earliest index on ties.
    pub fn nearest_index(&self, target: T) -> usize {
        let mut best = 0;
        let mut best_dist = (self.values[0] - target).abs();
        for (i, &v) in self.values.iter().enumerate().skip(1) {
            let d = (v - target).abs();
            if d < best_dist {
                best = i;
                best_dist = d;
            }
        }
        best
    }
}

/// The full three-axis adjustment grid.
#[derive(Debug, Clone, PartialEq)]
pub struct GridSpec<T> {
    pub x: AxisGrid<T>,
    pub y: AxisGrid<T>,
    pub yaw: AxisGrid<T>,
}

impl<T: Real> GridSpec<T> {
    pub fn new(x: AxisGrid<T>, y: AxisGrid<T>, yaw: AxisGrid<T>) -> Self {
        Self { x, y, yaw }
    }

    /// Head cardinalities [n_x, n_y, n_yaw].
    pub fn head_sizes(&self) -> [usize; 3] {
        [self.x.len(), self.y.len(), self.yaw.len()]
    }

    pub fn contains(&self, index: ActionIndex) -> bool {
        index.x < self.x.len() && index.y < self.y.len() && index.yaw < self.yaw.len()
    }

    /// Pose offset for an index triple; rejects out-of-range indices.
    pub fn value(&self, index: ActionIndex) -> Result<PlanarPose<T>> {
        let x = self.x.get(index.x).ok_or(Error::IndexOutOfRange {
            axis: "x",
            index: index.x,
            len: self.x.len(),
        })?;
        let y = self.y.get(index.y).ok_or(Error::IndexOutOfRange {
            axis: "y",
            index: index.y,
            len: self.y.len(),
        })?;
        let yaw = self.yaw.get(index.yaw).ok_or(Error::IndexOutOfRange {
            axis: "yaw",
            index: index.yaw,
            len: self.yaw.len(),
        })?;
        Ok(PlanarPose::new(x, y, yaw))
    }

    /// Iterates every index triple in lexicographic order.
    pub fn iter_indices(&self) -> impl Iterator<Item = ActionIndex> + '_ {
        let (nx, ny, nyaw) = (self.x.len(), self.y.len(), self.yaw.len());
        (0..nx).flat_map(move |ix| {
            (0..ny).flat_map(move |iy| (0..nyaw).map(move |iyaw| ActionIndex::new(ix, iy, iyaw)))
        })
    }
}
