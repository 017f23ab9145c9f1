//! Fixed-size padding with masking.
//!
//! Fitting many same-shaped problems back to back is cheapest when every
//! problem occupies an identical buffer: pick a fixed size `s`, copy the `v`
//! real points in front, and fill the tail with duplicates of the last real
//! point. The duplicates keep evaluation finite everywhere; the mask then
//! zeroes their residual and Jacobian rows, so they contribute exactly
//! nothing to cost, gradient, or any column norm. Appending zeros changes no
//! partial sum, which is why a padded fit reproduces the unpadded fit to the
//! last bit, iteration for iteration.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::model::{Dataset, FitData};

/// A dataset expanded to a fixed number of rows with a validity mask.
///
/// Real rows always form the prefix: `mask[i]` is true exactly for
/// `i < real_points()`.
#[derive(Debug, Clone, PartialEq)]
pub struct MaskedDataset {
    ydim: usize,
    y: Vec<f64>,
    z: Vec<f64>,
    mask: Vec<bool>,
    real: usize,
}

impl MaskedDataset {
    pub fn mask(&self) -> &[bool] {
        &self.mask
    }
}

/// Expands `data` to exactly `size` rows, duplicating the last real point
/// into the dummy slots.
///
/// `size < len` is an error; `size == len` yields an all-true mask and
/// behaves identically to the raw dataset.
pub fn pad_and_mask(data: &Dataset, size: usize) -> Result<MaskedDataset> {
    let v = data.len();
    if size < v {
        return Err(Error::FixedSizeExceeded {
            fixed: size,
            actual: v,
        });
    }
    if v == 0 {
        return Err(Error::DimensionMismatch {
            context: "cannot pad an empty dataset",
        });
    }
    let ydim = data.ydim();
    let mut y = Vec::with_capacity(size * ydim);
    let mut z = Vec::with_capacity(size);
    y.extend_from_slice(data.y_flat());
    z.extend_from_slice(data.z_values());

    let last_y = data.point(v - 1).to_vec();
    let last_z = data.observed(v - 1);
    for _ in v..size {
        y.extend_from_slice(&last_y);
        z.push(last_z);
    }

    let mut mask = vec![true; size];
    for m in mask.iter_mut().skip(v) {
        *m = false;
    }

    Ok(MaskedDataset {
        ydim,
        y,
        z,
        mask,
        real: v,
    })
}

/// Zeroes the masked-out entries of a padded vector.
pub fn apply_mask(values: &mut [f64], mask: &[bool]) {
    debug_assert_eq!(values.len(), mask.len());
    for (v, &keep) in values.iter_mut().zip(mask) {
        if !keep {
            *v = 0.0;
        }
    }
}

/// Zeroes the masked-out rows of a padded matrix.
pub fn apply_mask_rows(m: &mut Matrix, mask: &[bool]) {
    debug_assert_eq!(m.rows(), mask.len());
    for (i, &keep) in mask.iter().enumerate() {
        if !keep {
            for v in m.row_mut(i) {
                *v = 0.0;
            }
        }
    }
}

impl FitData for MaskedDataset {
    fn point_dim(&self) -> usize {
        self.ydim
    }
    fn rows(&self) -> usize {
        self.z.len()
    }
    fn real_points(&self) -> usize {
        self.real
    }
    fn point(&self, i: usize) -> &[f64] {
        &self.y[i * self.ydim..(i + 1) * self.ydim]
    }
    fn observed(&self, i: usize) -> f64 {
        self.z[i]
    }
    fn is_real(&self, i: usize) -> bool {
        self.mask[i]
    }
}
