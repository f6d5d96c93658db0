//! N-dimensional real FFT plumbing shared by the spectral operators and the
//! Riesz convolution. Transforms are unnormalized on the way forward; the
//! inverse applies the 1/len factor once at the end.
//!
//! Real arrays are transformed along the last (contiguous) axis with a
//! real-to-complex step, producing a half spectrum of shape
//! `[d0, .., d_{n-2}, d_{n-1}/2 + 1]`, followed by complex passes along the
//! leading axes.

use realfft::RealFftPlanner;
use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftDirection, FftPlanner};
use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use rayon::prelude::*;

type C2cKey = (usize, bool);

fn c2c_plan(len: usize, inverse: bool) -> Arc<dyn Fft<f64>> {
    static PLANS: OnceLock<Mutex<HashMap<C2cKey, Arc<dyn Fft<f64>>>>> = OnceLock::new();
    let cache = PLANS.get_or_init(|| Mutex::new(HashMap::new()));
    let mut map = cache.lock().unwrap();
    map.entry((len, inverse))
        .or_insert_with(|| {
            let dir = if inverse {
                FftDirection::Inverse
            } else {
                FftDirection::Forward
            };
            FftPlanner::new().plan_fft(len, dir)
        })
        .clone()
}

fn r2c_plan(len: usize) -> Arc<dyn realfft::RealToComplex<f64>> {
    static PLANS: OnceLock<Mutex<HashMap<usize, Arc<dyn realfft::RealToComplex<f64>>>>> =
        OnceLock::new();
    let cache = PLANS.get_or_init(|| Mutex::new(HashMap::new()));
    let mut map = cache.lock().unwrap();
    map.entry(len)
        .or_insert_with(|| RealFftPlanner::new().plan_fft_forward(len))
        .clone()
}

fn c2r_plan(len: usize) -> Arc<dyn realfft::ComplexToReal<f64>> {
    static PLANS: OnceLock<Mutex<HashMap<usize, Arc<dyn realfft::ComplexToReal<f64>>>>> =
        OnceLock::new();
    let cache = PLANS.get_or_init(|| Mutex::new(HashMap::new()));
    let mut map = cache.lock().unwrap();
    map.entry(len)
        .or_insert_with(|| RealFftPlanner::new().plan_fft_inverse(len))
        .clone()
}

/// Shape of the half spectrum produced by [`forward_real`].
pub(crate) fn hat_dims(dims: &[usize]) -> Vec<usize> {
    let mut out = dims.to_vec();
    let last = out.last_mut().expect("empty dims");
    *last = *last / 2 + 1;
    out
}

/// Signed wavenumber index for bin `k` of an axis of length `d`:
/// `0, 1, .., d/2, -(d/2-1), .., -1`.
pub(crate) fn signed_index(k: usize, d: usize) -> i64 {
    if k <= d / 2 {
        k as i64
    } else {
        k as i64 - d as i64
    }
}

/// Parseval multiplicity of a half-spectrum bin along the last axis.
pub(crate) fn bin_multiplicity(k_last: usize, d_last: usize) -> f64 {
    if k_last == 0 || (d_last % 2 == 0 && k_last == d_last / 2) {
        1.0
    } else {
        2.0
    }
}

/// Complex FFT along `axis` of a row-major array of shape `dims`, in place.
fn c2c_axis(data: &mut [Complex64], dims: &[usize], axis: usize, inverse: bool) {
    let len = dims[axis];
    let inner: usize = dims[axis + 1..].iter().product();
    let outer: usize = dims[..axis].iter().product();
    let plan = c2c_plan(len, inverse);

    if inner == 1 {
        // contiguous lines
        data.par_chunks_exact_mut(len).for_each_init(
            || vec![Complex64::default(); plan.get_inplace_scratch_len()],
            |scratch, row| plan.process_with_scratch(row, scratch),
        );
        return;
    }

    if outer > 1 {
        // disjoint chunks of shape [len, inner]; strided lines inside each
        data.par_chunks_exact_mut(len * inner).for_each_init(
            || {
                (
                    vec![Complex64::default(); len],
                    vec![Complex64::default(); plan.get_inplace_scratch_len()],
                )
            },
            |(line, scratch), chunk| {
                for j in 0..inner {
                    for k in 0..len {
                        line[k] = chunk[k * inner + j];
                    }
                    plan.process_with_scratch(line, scratch);
                    for k in 0..len {
                        chunk[k * inner + j] = line[k];
                    }
                }
            },
        );
        return;
    }

    // axis 0 of the whole array: transpose to [inner, len], transform
    // contiguous rows, transpose back
    let mut scratch_arr = vec![Complex64::default(); data.len()];
    scratch_arr
        .par_chunks_exact_mut(len)
        .enumerate()
        .for_each(|(j, row)| {
            for k in 0..len {
                row[k] = data[k * inner + j];
            }
        });
    scratch_arr.par_chunks_exact_mut(len).for_each_init(
        || vec![Complex64::default(); plan.get_inplace_scratch_len()],
        |scratch, row| plan.process_with_scratch(row, scratch),
    );
    data.par_chunks_exact_mut(inner)
        .enumerate()
        .for_each(|(k, row)| {
            for j in 0..inner {
                row[j] = scratch_arr[j * len + k];
            }
        });
}

/// Forward real transform: half spectrum of shape [`hat_dims`], unnormalized.
pub(crate) fn forward_real(values: &[f64], dims: &[usize]) -> Vec<Complex64> {
    let n = dims.len();
    let d_last = dims[n - 1];
    let hdims = hat_dims(dims);
    let h_last = hdims[n - 1];
    let total_hat: usize = hdims.iter().product();
    debug_assert_eq!(values.len(), dims.iter().product::<usize>());

    let plan = r2c_plan(d_last);
    let mut hat = vec![Complex64::default(); total_hat];
    values
        .par_chunks_exact(d_last)
        .zip(hat.par_chunks_exact_mut(h_last))
        .for_each_init(
            || {
                (
                    vec![0.0f64; d_last],
                    vec![Complex64::default(); plan.get_scratch_len()],
                )
            },
            |(in_buf, scratch), (row, out_row)| {
                in_buf.copy_from_slice(row);
                plan.process_with_scratch(in_buf, out_row, scratch)
                    .expect("r2c");
            },
        );

    for axis in (0..n - 1).rev() {
        c2c_axis(&mut hat, &hdims, axis, false);
    }
    hat
}

/// Inverse of [`forward_real`]; consumes the spectrum and applies the
/// 1/len normalization.
pub(crate) fn inverse_real(mut hat: Vec<Complex64>, dims: &[usize]) -> Vec<f64> {
    let n = dims.len();
    let d_last = dims[n - 1];
    let hdims = hat_dims(dims);
    let h_last = hdims[n - 1];
    let total: usize = dims.iter().product();

    for axis in 0..n - 1 {
        c2c_axis(&mut hat, &hdims, axis, true);
    }

    let plan = c2r_plan(d_last);
    let mut out = vec![0.0f64; total];
    hat.par_chunks_exact_mut(h_last)
        .zip(out.par_chunks_exact_mut(d_last))
        .for_each_init(
            || vec![Complex64::default(); plan.get_scratch_len()],
            |scratch, (spec_row, out_row)| {
                // the inverse passes along the leading axes leave roundoff in
                // the imaginary parts of the DC and Nyquist bins, which the
                // real inverse transform requires to be exactly zero
                spec_row[0].im = 0.0;
                if d_last % 2 == 0 {
                    spec_row[h_last - 1].im = 0.0;
                }
                plan.process_with_scratch(spec_row, out_row, scratch)
                    .expect("c2r");
            },
        );

    let scale = 1.0 / total as f64;
    out.par_iter_mut().for_each(|v| *v *= scale);
    out
}

/// Multiplies the half spectrum in place by a real symbol evaluated on the
/// signed wavenumber multi-index scaled by `freq_unit` (so the physical
/// wavenumber along axis i is `freq_unit * signed_index`).
pub(crate) fn apply_symbol(
    hat: &mut [Complex64],
    dims: &[usize],
    freq_unit: f64,
    symbol: impl Fn(f64) -> f64 + Sync,
) {
    let n = dims.len();
    let hdims = hat_dims(dims);
    let h_last = hdims[n - 1];
    let lead: usize = hdims[..n - 1].iter().product();
    hat.par_chunks_exact_mut(h_last)
        .enumerate()
        .for_each(|(row, chunk)| {
            // decode leading indices of this row
            let mut rem = row;
            let mut k2_lead = 0.0;
            for axis in (0..n - 1).rev() {
                let idx = rem % hdims[axis];
                rem /= hdims[axis];
                let s = signed_index(idx, dims[axis]) as f64 * freq_unit;
                k2_lead += s * s;
            }
            debug_assert!(rem == 0 || lead > 0);
            for (k, v) in chunk.iter_mut().enumerate() {
                let s = k as f64 * freq_unit;
                *v *= symbol(k2_lead + s * s);
            }
        });
}

#[cfg(test)]
mod tests {
    use super::*;

    fn naive_dft(values: &[f64], dims: &[usize]) -> Vec<Complex64> {
        let total: usize = dims.iter().product();
        let n = dims.len();
        let mut out = vec![Complex64::default(); total];
        let decode = |mut flat: usize| {
            let mut idx = vec![0usize; n];
            for axis in (0..n).rev() {
                idx[axis] = flat % dims[axis];
                flat /= dims[axis];
            }
            idx
        };
        for kf in 0..total {
            let k = decode(kf);
            let mut acc = Complex64::default();
            for jf in 0..total {
                let j = decode(jf);
                let mut phase = 0.0;
                for axis in 0..n {
                    phase += (k[axis] * j[axis]) as f64 / dims[axis] as f64;
                }
                let arg = -2.0 * std::f64::consts::PI * phase;
                acc += values[jf] * Complex64::new(arg.cos(), arg.sin());
            }
            out[kf] = acc;
        }
        out
    }

    #[test]
    fn forward_matches_naive_dft_3d() {
        let dims = [4usize, 8, 8];
        let total: usize = dims.iter().product();
        let values: Vec<f64> = (0..total)
            .map(|i| ((i * 2654435761) % 1000) as f64 / 1000.0 - 0.5)
            .collect();
        let hat = forward_real(&values, &dims);
        let full = naive_dft(&values, &dims);
        let hdims = hat_dims(&dims);
        for k0 in 0..dims[0] {
            for k1 in 0..dims[1] {
                for k2 in 0..hdims[2] {
                    let got = hat[(k0 * hdims[1] + k1) * hdims[2] + k2];
                    let want = full[(k0 * dims[1] + k1) * dims[2] + k2];
                    assert!(
                        (got - want).norm() < 1e-9,
                        "bin ({k0},{k1},{k2}): {got} vs {want}"
                    );
                }
            }
        }
    }

    #[test]
    fn round_trip_is_identity() {
        for dims in [vec![8usize, 8], vec![4, 8, 16], vec![4, 4, 4, 8]] {
            let total: usize = dims.iter().product();
            let values: Vec<f64> = (0..total).map(|i| (i as f64 * 0.7).sin()).collect();
            let hat = forward_real(&values, &dims);
            let back = inverse_real(hat, &dims);
            let err = values
                .iter()
                .zip(&back)
                .map(|(a, b)| (a - b).abs())
                .fold(0.0, f64::max);
            assert!(err < 1e-12, "round trip error {err} for dims {dims:?}");
        }
    }
}
