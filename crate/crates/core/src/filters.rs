//! Mode-selective reconstruction.

use crate::emd::Decomposition;
use crate::error::{HhtError, Result};
use crate::Real;

fn check_cutoff<T: Real>(decomp: &Decomposition<T>, m: usize) -> Result<()> {
    let n = decomp.n_modes();
    if m < 1 || m > n {
        return Err(HhtError::Range(format!("mode cutoff {m} outside 1..={n}")));
    }
    Ok(())
}

fn sum_modes<T: Real>(
    decomp: &Decomposition<T>,
    modes: std::ops::RangeInclusive<usize>,
    with_residue: bool,
) -> Vec<T> {
    let mut out = if with_residue {
        decomp.residue().to_vec()
    } else {
        vec![T::zero(); decomp.source_length()]
    };
    for j in modes {
        let c = decomp.imf(j).expect("cutoff validated");
        for (o, &v) in out.iter_mut().zip(c) {
            *o = *o + v;
        }
    }
    out
}

/// `x_L = sum_{j=m}^{n} c_j + r_n`: drops the `m - 1` fastest modes.
pub fn low_pass<T: Real>(decomp: &Decomposition<T>, m: usize) -> Result<Vec<T>> {
    check_cutoff(decomp, m)?;
    Ok(sum_modes(decomp, m..=decomp.n_modes(), true))
}

/// `x_H = sum_{j=1}^{m} c_j`.
pub fn high_pass<T: Real>(decomp: &Decomposition<T>, m: usize) -> Result<Vec<T>> {
    check_cutoff(decomp, m)?;
    Ok(sum_modes(decomp, 1..=m, false))
}
