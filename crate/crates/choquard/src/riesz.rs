//! Fast evaluation of the nonlocal term `(|x|^{-alpha} * |u|^p)` and the
//! double-integral energy D(u).
//!
//! The kernel is sampled on a grid zero-padded by exactly a factor of two per
//! axis, which makes the circular FFT convolution equal to the linear one for
//! any field supported in the original box. The singular cell at x = 0 is
//! replaced by the cell average of `|x|^{-alpha}`, computed with tensor
//! Gauss-Legendre quadrature (integrable since alpha < N).

use crate::error::{Error, Result};
use crate::fft;
use crate::grid::{stable_sum, Field, Grid, MAX_DIM};
use rayon::prelude::*;

/// Gauss-Legendre nodes and weights on [-1, 1] via Newton iteration on the
/// Legendre polynomial.
pub(crate) fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n {
        // Chebyshev-like initial guess
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        for _ in 0..100 {
            // evaluate P_n and P_n' by recurrence
            let mut p0 = 1.0;
            let mut p1 = x;
            for k in 2..=n {
                let kf = k as f64;
                let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
                p0 = p1;
                p1 = p2;
            }
            let dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-15 {
                break;
            }
        }
        nodes[i] = x;
        // recompute derivative at the converged node for the weight
        let mut p0 = 1.0;
        let mut p1 = x;
        for k in 2..=n {
            let kf = k as f64;
            let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
            p0 = p1;
            p1 = p2;
        }
        let dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
        weights[i] = 2.0 / ((1.0 - x * x) * dp * dp);
    }
    (nodes, weights)
}

/// Average of `|x|^{-alpha}` over the cell `[-h/2, h/2)^N`.
///
/// By symmetry this is 2^N times the integral over the corner quadrant
/// `Q = [0, h/2]^N`. The corner singularity is removed exactly by the
/// self-similarity `int_{Q/2} = 2^{alpha - N} int_Q`: the remaining dyadic
/// children of Q keep `|x| >= h/4`, where tensor Gauss-Legendre converges to
/// machine precision.
fn singular_cell_average(n_dim: usize, h: f64, alpha: f64) -> f64 {
    let q = 16usize;
    let (nodes, weights) = gauss_legendre(q);
    let a = 0.5 * h; // quadrant side
    let child = 0.5 * a;
    let total = q.pow(n_dim as u32);

    // sum GL integrals over the 2^N - 1 dyadic children away from the corner
    let mut smooth_part = 0.0;
    for mask in 1..(1usize << n_dim) {
        let part: f64 = (0..total)
            .into_par_iter()
            .map(|mut flat| {
                let mut w = 1.0;
                let mut r2 = 0.0;
                for axis in 0..n_dim {
                    let i = flat % q;
                    flat /= q;
                    let lo = if (mask >> axis) & 1 == 1 { child } else { 0.0 };
                    let x = lo + 0.5 * child * (nodes[i] + 1.0);
                    w *= 0.5 * child * weights[i];
                    r2 += x * x;
                }
                w * r2.sqrt().powf(-alpha)
            })
            .sum();
        smooth_part += part;
    }
    let quadrant = smooth_part / (1.0 - 2.0f64.powf(alpha - n_dim as f64));
    (2.0f64).powi(n_dim as i32) * quadrant / h.powi(n_dim as i32)
}

/// Riesz kernel `|x|^{-alpha}` sampled on the double-size padded grid, with
/// its real Fourier transform cached.
pub struct RieszKernel {
    grid: Grid,
    alpha: f64,
    k0: f64,
    khat: Vec<f64>,
    padded_dims: Vec<usize>,
}

impl RieszKernel {
    pub fn new(grid: Grid, alpha: f64) -> Result<RieszKernel> {
        let n = grid.dim();
        if !(alpha > 0.0 && alpha < n as f64) {
            return Err(Error::InvalidParameter(format!(
                "alpha must lie in (0, N) = (0, {n}), got {alpha}"
            )));
        }
        let m = grid.points_per_axis();
        let p = 2 * m;
        let h = grid.spacing();
        let padded_dims = vec![p; n];
        let total: usize = padded_dims.iter().product();
        let k0 = singular_cell_average(n, h, alpha);

        let mut kernel = vec![0.0f64; total];
        kernel.par_iter_mut().enumerate().for_each(|(flat, v)| {
            let mut rem = flat;
            let mut r2 = 0.0;
            for _ in 0..n {
                let i = rem % p;
                rem /= p;
                let s = if i <= m { i as i64 } else { i as i64 - p as i64 };
                let d = s as f64 * h;
                r2 += d * d;
            }
            *v = if r2 == 0.0 { k0 } else { r2.sqrt().powf(-alpha) };
        });

        let hat = fft::forward_real(&kernel, &padded_dims);
        // the kernel is even under the periodic reflection, so its transform
        // is real; taking the real part symmetrizes away roundoff
        let khat: Vec<f64> = hat.par_iter().map(|c| c.re).collect();

        Ok(RieszKernel {
            grid,
            alpha,
            k0,
            khat,
            padded_dims,
        })
    }

    pub fn grid(&self) -> Grid {
        self.grid
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    /// The cell-averaged value standing in for K(0).
    pub fn singular_cell_value(&self) -> f64 {
        self.k0
    }

    /// Kernel sample at a whole-cell displacement (for the brute-force
    /// double-sum oracle; offsets up to M-1 cells per axis).
    pub fn kernel_sample(&self, offset_cells: &[i64]) -> f64 {
        let h = self.grid.spacing();
        let r2: f64 = offset_cells
            .iter()
            .map(|&c| {
                let d = c as f64 * h;
                d * d
            })
            .sum();
        if r2 == 0.0 {
            self.k0
        } else {
            r2.sqrt().powf(-self.alpha)
        }
    }

    /// Linear convolution `h^N (K * w)` cropped back to the original grid.
    pub fn convolve(&self, w: &Field) -> Result<Field> {
        if w.grid() != self.grid {
            return Err(Error::GridMismatch(
                "field grid does not match the kernel grid".into(),
            ));
        }
        let n = self.grid.dim();
        let m = self.grid.points_per_axis();
        let p = 2 * m;
        let total: usize = self.padded_dims.iter().product();

        // zero-pad into the double box
        let mut padded = vec![0.0f64; total];
        {
            let src = w.values();
            padded
                .par_chunks_mut(p)
                .enumerate()
                .for_each(|(row, chunk)| {
                    // row indexes the leading n-1 padded axes
                    let mut rem = row;
                    let mut digits = [0usize; MAX_DIM];
                    for axis in (0..n - 1).rev() {
                        digits[axis] = rem % p;
                        rem /= p;
                    }
                    if digits[..n - 1].iter().any(|&d| d >= m) {
                        return;
                    }
                    let mut base = 0usize;
                    for axis in 0..n - 1 {
                        base = base * m + digits[axis];
                    }
                    chunk[..m].copy_from_slice(&src[base * m..base * m + m]);
                });
        }

        let mut hat = fft::forward_real(&padded, &self.padded_dims);
        hat.par_iter_mut()
            .zip(self.khat.par_iter())
            .for_each(|(c, &k)| *c *= k);
        let conv = fft::inverse_real(hat, &self.padded_dims);

        // crop to the original box and scale by the quadrature weight
        let hn = self.grid.cell_volume();
        let mut out = Field::zeros(self.grid);
        out.values_mut()
            .par_chunks_mut(m)
            .enumerate()
            .for_each(|(row, chunk)| {
                let mut rem = row;
                let mut digits = [0usize; MAX_DIM];
                for axis in (0..n - 1).rev() {
                    digits[axis] = rem % m;
                    rem /= m;
                }
                let mut base = 0usize;
                for axis in 0..n - 1 {
                    base = base * p + digits[axis];
                }
                for (j, v) in chunk.iter_mut().enumerate() {
                    *v = hn * conv[base * p + j];
                }
            });
        Ok(out)
    }

    /// `D(u) = \int (K * |u|^p) |u|^p`, strictly positive for u != 0.
    pub fn d_energy(&self, u: &Field, p: f64) -> Result<f64> {
        if p < 2.0 {
            return Err(Error::InvalidParameter(format!("p must be >= 2, got {p}")));
        }
        let w = u.abs_pow(p);
        let conv = self.convolve(&w)?;
        Ok(conv.dot_l2(&w))
    }

    /// Bilinear form `\iint a(x) K(x-y) b(y)`.
    pub fn d_bilinear(&self, a: &Field, b: &Field) -> Result<f64> {
        let conv = self.convolve(a)?;
        Ok(conv.dot_l2(b))
    }

    /// Returns `(D(u), |u|_{pr}^{2p})` for the empirical
    /// Hardy-Littlewood-Sobolev ratio, with `r = 2N / (2N - alpha)`.
    pub fn hls_check(&self, u: &Field, p: f64) -> Result<(f64, f64)> {
        let n = self.grid.dim() as f64;
        let r = 2.0 * n / (2.0 * n - self.alpha);
        let pr = p * r;
        let upper = if n > 2.0 { 2.0 * n / (n - 2.0) } else { f64::INFINITY };
        if !(pr > 2.0 && pr < upper) {
            return Err(Error::InvalidParameter(format!(
                "pr = {pr} outside (2, {upper})"
            )));
        }
        let d = self.d_energy(u, p)?;
        let norm_pr = {
            let powed: Vec<f64> = u
                .values()
                .par_iter()
                .map(|v| v.abs().powf(pr))
                .collect();
            (self.grid.cell_volume() * stable_sum(&powed)).powf(1.0 / pr)
        };
        Ok((d, norm_pr.powf(2.0 * p)))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gauss_legendre_is_exact_for_low_degrees() {
        let (x, w) = gauss_legendre(16);
        let total: f64 = w.iter().sum();
        assert!((total - 2.0).abs() < 1e-14);
        let m2: f64 = x.iter().zip(&w).map(|(x, w)| w * x * x).sum();
        assert!((m2 - 2.0 / 3.0).abs() < 1e-14);
        let m6: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(6)).sum();
        assert!((m6 - 2.0 / 7.0).abs() < 1e-13);
    }

    #[test]
    fn singular_cell_average_matches_analytic_value() {
        // N = 2, alpha = 1: int_{[0,a]^2} dx/|x| = 2a asinh(1), so the cell
        // average over [-h/2, h/2)^2 is 4 asinh(1) / h
        let h = 0.25;
        let avg = singular_cell_average(2, h, 1.0);
        let want = 4.0 * 1.0f64.asinh() / h;
        assert!(
            (avg - want).abs() < 1e-12 * want,
            "avg {avg} vs analytic {want}"
        );
    }

    #[test]
    fn convolve_zero_gives_zero() {
        let g = Grid::new(2, 8, 1.0).unwrap();
        let k = RieszKernel::new(g, 1.0).unwrap();
        let out = k.convolve(&Field::zeros(g)).unwrap();
        assert_eq!(out, Field::zeros(g));
    }

    #[test]
    fn convolve_impulse_reproduces_kernel_samples() {
        let g = Grid::new(2, 8, 1.0).unwrap();
        let kern = RieszKernel::new(g, 0.5).unwrap();
        let m = 8usize;
        let mut u = Field::zeros(g);
        let center = g.encode(&[4, 4]);
        u.values_mut()[center] = 1.0;
        let out = kern.convolve(&u).unwrap();
        let hn = g.cell_volume();
        for i in 0..m {
            for j in 0..m {
                let off = [i as i64 - 4, j as i64 - 4];
                let want = hn * kern.kernel_sample(&off);
                let got = out.values()[g.encode(&[i, j])];
                assert!(
                    (got - want).abs() <= 1e-12 * want.abs().max(1.0),
                    "offset {off:?}: {got} vs {want}"
                );
            }
        }
    }

    #[test]
    fn d_energy_examples() {
        let g = Grid::new(2, 8, 1.0).unwrap();
        let k = RieszKernel::new(g, 1.0).unwrap();
        assert_eq!(k.d_energy(&Field::zeros(g), 2.0).unwrap(), 0.0);
        assert!(k.d_energy(&Field::zeros(g), 1.5).is_err());

        // homogeneity: D(t u) = t^{2p} D(u)
        let u = Field::from_fn(g, |x| (x[0] * 2.1).sin() + 0.3 * x[1]);
        for p in [2.0, 2.5] {
            let d1 = k.d_energy(&u, p).unwrap();
            let d2 = k.d_energy(&u.scale(2.0), p).unwrap();
            let want = 2.0f64.powf(2.0 * p) * d1;
            assert!((d2 - want).abs() <= 1e-12 * want.abs());
        }
        // positivity
        assert!(k.d_energy(&u, 2.0).unwrap() > 0.0);
    }

    #[test]
    fn d_symmetry_under_factor_exchange() {
        let g = Grid::new(2, 16, 2.0).unwrap();
        let k = RieszKernel::new(g, 1.2).unwrap();
        let a = Field::from_fn(g, |x| (-(x[0] * x[0] + 2.0 * x[1] * x[1])).exp());
        let b = Field::from_fn(g, |x| (-(x[0] - 0.5).powi(2) - x[1] * x[1]).exp());
        let ab = k.d_bilinear(&a, &b).unwrap();
        let ba = k.d_bilinear(&b, &a).unwrap();
        assert!((ab - ba).abs() <= 1e-12 * ab.abs());
    }

    #[test]
    fn translation_covariance_on_interior_support() {
        let g = Grid::new(2, 32, 4.0).unwrap();
        let k = RieszKernel::new(g, 1.0).unwrap();
        // compact bump well inside the box
        let u = Field::from_fn(g, |x| {
            let r2 = x[0] * x[0] + x[1] * x[1];
            if r2 < 1.0 {
                (1.0 - r2).powi(2)
            } else {
                0.0
            }
        });
        let shifted = u.shift_cells(&[3, -2]);
        let d0 = k.d_energy(&u, 2.0).unwrap();
        let d1 = k.d_energy(&shifted, 2.0).unwrap();
        assert!((d0 - d1).abs() <= 1e-12 * d0);
    }

    #[test]
    fn hls_ratio_is_scale_invariant() {
        let g = Grid::new(2, 16, 2.0).unwrap();
        let k = RieszKernel::new(g, 1.0).unwrap();
        let u = Field::from_fn(g, |x| (-(x[0] * x[0] + x[1] * x[1])).exp());
        let (d0, b0) = k.hls_check(&u, 2.0).unwrap();
        let (d1, b1) = k.hls_check(&u.scale(3.0), 2.0).unwrap();
        let r0 = d0 / b0;
        let r1 = d1 / b1;
        assert!((r0 - r1).abs() <= 1e-10 * r0.abs());

        let (dz, bz) = k.hls_check(&Field::zeros(g), 2.0).unwrap();
        assert_eq!((dz, bz), (0.0, 0.0));
    }

    #[test]
    fn hls_gaussian_width_sweep_stays_bounded() {
        let g = Grid::new(3, 32, 6.0).unwrap();
        let k = RieszKernel::new(g, 1.0).unwrap();
        let mut ratios = Vec::new();
        for w in [0.5, 0.8, 1.2, 2.0] {
            let u = Field::from_radial(g, |r| (-(r / w) * (r / w)).exp());
            let (d, b) = k.hls_check(&u, 2.0).unwrap();
            ratios.push(d / b);
        }
        let max = ratios.iter().cloned().fold(0.0, f64::max);
        let min = ratios.iter().cloned().fold(f64::INFINITY, f64::min);
        assert!(max.is_finite() && min > 0.0);
        assert!(max / min < 10.0, "ratios vary too much: {ratios:?}");
    }

    #[test]
    fn kernel_rejects_bad_alpha() {
        let g = Grid::new(2, 8, 1.0).unwrap();
        assert!(RieszKernel::new(g, 0.0).is_err());
        assert!(RieszKernel::new(g, 2.0).is_err());
        assert!(RieszKernel::new(g, 1.999).is_ok());
    }
}
