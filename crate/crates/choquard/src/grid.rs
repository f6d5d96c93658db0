//! Uniform periodic box discretization of R^N and real scalar fields on it.
//!
//! The box is `[-L, L)^N` with `M` points per axis (M a power of two), spacing
//! `h = 2L/M`, and the origin at the box center (index `M/2` on every axis).
//! Values are stored row-major with the last axis fastest; that layout is
//! normative for the on-disk field format.

use crate::error::{Error, Result};
use crate::fft;
use rayon::prelude::*;
use rustfft::num_complex::Complex64;

pub const MAX_DIM: usize = 4;

/// Uniform grid on the periodic box `[-L, L)^N`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Grid {
    n_dim: usize,
    points: usize,
    half_width: f64,
}

impl Grid {
    pub fn new(n_dim: usize, points_per_axis: usize, half_width: f64) -> Result<Grid> {
        if !(2..=MAX_DIM).contains(&n_dim) {
            return Err(Error::InvalidParameter(format!(
                "grid dimension must be 2..={MAX_DIM}, got {n_dim}"
            )));
        }
        if points_per_axis < 8 || !points_per_axis.is_power_of_two() {
            return Err(Error::InvalidParameter(format!(
                "points per axis must be a power of two >= 8, got {points_per_axis}"
            )));
        }
        if !(half_width > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "half-width must be positive, got {half_width}"
            )));
        }
        Ok(Grid {
            n_dim,
            points: points_per_axis,
            half_width,
        })
    }

    pub fn dim(&self) -> usize {
        self.n_dim
    }

    pub fn points_per_axis(&self) -> usize {
        self.points
    }

    pub fn half_width(&self) -> f64 {
        self.half_width
    }

    pub fn spacing(&self) -> f64 {
        2.0 * self.half_width / self.points as f64
    }

    /// Total number of grid points, `M^N`.
    pub fn len(&self) -> usize {
        self.points.pow(self.n_dim as u32)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn dims(&self) -> Vec<usize> {
        vec![self.points; self.n_dim]
    }

    /// Cell volume `h^N`.
    pub fn cell_volume(&self) -> f64 {
        self.spacing().powi(self.n_dim as i32)
    }

    /// Physical wavenumber unit `pi / L` of the discrete Fourier modes.
    pub fn freq_unit(&self) -> f64 {
        std::f64::consts::PI / self.half_width
    }

    /// Decomposes a flat index into per-axis indices (last axis fastest).
    #[inline]
    pub fn decode(&self, mut flat: usize, idx: &mut [usize; MAX_DIM]) {
        for axis in (0..self.n_dim).rev() {
            idx[axis] = flat % self.points;
            flat /= self.points;
        }
    }

    #[inline]
    pub fn encode(&self, idx: &[usize]) -> usize {
        let mut flat = 0;
        for axis in 0..self.n_dim {
            flat = flat * self.points + (idx[axis] % self.points);
        }
        flat
    }

    /// Coordinate of axis index `i`: `-L + i h`.
    #[inline]
    pub fn axis_coord(&self, i: usize) -> f64 {
        -self.half_width + i as f64 * self.spacing()
    }

    /// Fills `out[..dim]` with the coordinates of the point at `flat`.
    #[inline]
    pub fn coord_into(&self, flat: usize, out: &mut [f64; MAX_DIM]) {
        let mut idx = [0usize; MAX_DIM];
        self.decode(flat, &mut idx);
        for axis in 0..self.n_dim {
            out[axis] = self.axis_coord(idx[axis]);
        }
    }

    /// Integer squared radius of a point in index units: sum of (i - M/2)^2.
    /// Grid points share a shell exactly when these agree.
    #[inline]
    pub fn radius_sq_index(&self, flat: usize) -> u64 {
        let mut idx = [0usize; MAX_DIM];
        self.decode(flat, &mut idx);
        let c = (self.points / 2) as i64;
        let mut s = 0u64;
        for axis in 0..self.n_dim {
            let d = idx[axis] as i64 - c;
            s += (d * d) as u64;
        }
        s
    }

    /// |x|^2 of the point at `flat`.
    #[inline]
    pub fn radius_sq(&self, flat: usize) -> f64 {
        let h = self.spacing();
        self.radius_sq_index(flat) as f64 * h * h
    }
}

/// Chunked Kahan summation; deterministic for any thread count.
pub(crate) fn stable_sum(values: &[f64]) -> f64 {
    const CHUNK: usize = 8192;
    let partials: Vec<f64> = values
        .par_chunks(CHUNK)
        .map(|chunk| {
            let mut s = 0.0;
            let mut c = 0.0;
            for &v in chunk {
                let y = v - c;
                let t = s + y;
                c = (t - s) - y;
                s = t;
            }
            s
        })
        .collect();
    let mut s = 0.0;
    let mut c = 0.0;
    for v in partials {
        let y = v - c;
        let t = s + y;
        c = (t - s) - y;
        s = t;
    }
    s
}

/// Real scalar field sampled on a [`Grid`].
#[derive(Clone, Debug, PartialEq)]
pub struct Field {
    grid: Grid,
    values: Vec<f64>,
}

impl Field {
    pub fn zeros(grid: Grid) -> Field {
        Field {
            grid,
            values: vec![0.0; grid.len()],
        }
    }

    pub fn constant(grid: Grid, value: f64) -> Field {
        Field {
            grid,
            values: vec![value; grid.len()],
        }
    }

    pub fn from_values(grid: Grid, values: Vec<f64>) -> Result<Field> {
        if values.len() != grid.len() {
            return Err(Error::GridMismatch(format!(
                "expected {} values, got {}",
                grid.len(),
                values.len()
            )));
        }
        Ok(Field { grid, values })
    }

    /// Samples `f(x)` at every grid point (parallel).
    pub fn from_fn(grid: Grid, f: impl Fn(&[f64]) -> f64 + Sync) -> Field {
        let mut values = vec![0.0; grid.len()];
        values.par_iter_mut().enumerate().for_each(|(flat, v)| {
            let mut x = [0.0f64; MAX_DIM];
            grid.coord_into(flat, &mut x);
            *v = f(&x[..grid.dim()]);
        });
        Field { grid, values }
    }

    /// Radial field `f(|x|)`.
    pub fn from_radial(grid: Grid, f: impl Fn(f64) -> f64 + Sync) -> Field {
        let mut values = vec![0.0; grid.len()];
        values.par_iter_mut().enumerate().for_each(|(flat, v)| {
            *v = f(grid.radius_sq(flat).sqrt());
        });
        Field { grid, values }
    }

    pub fn grid(&self) -> Grid {
        self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub(crate) fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub(crate) fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn is_finite(&self) -> bool {
        self.values.par_iter().all(|v| v.is_finite())
    }

    pub fn check_same_grid(&self, other: &Field) -> Result<()> {
        if self.grid != other.grid {
            return Err(Error::GridMismatch(format!(
                "{:?} vs {:?}",
                self.grid, other.grid
            )));
        }
        Ok(())
    }

    /// Midpoint-rule integral `h^N * sum(values)`.
    pub fn integrate(&self) -> f64 {
        self.grid.cell_volume() * stable_sum(&self.values)
    }

    /// `\int u v` on the box.
    pub fn dot_l2(&self, other: &Field) -> f64 {
        debug_assert_eq!(self.grid, other.grid);
        const CHUNK: usize = 8192;
        let partials: Vec<f64> = self
            .values
            .par_chunks(CHUNK)
            .zip(other.values.par_chunks(CHUNK))
            .map(|(a, b)| {
                let mut s = 0.0;
                let mut c = 0.0;
                for (x, y) in a.iter().zip(b) {
                    let v = x * y;
                    let t0 = v - c;
                    let t = s + t0;
                    c = (t - s) - t0;
                    s = t;
                }
                s
            })
            .collect();
        self.grid.cell_volume() * stable_sum(&partials)
    }

    pub fn norm_l2_sq(&self) -> f64 {
        self.dot_l2(self)
    }

    pub fn linf(&self) -> f64 {
        self.values
            .par_iter()
            .map(|v| v.abs())
            .reduce(|| 0.0, f64::max)
    }

    pub fn min_value(&self) -> f64 {
        self.values
            .par_iter()
            .copied()
            .reduce(|| f64::INFINITY, f64::min)
    }

    pub fn max_value(&self) -> f64 {
        self.values
            .par_iter()
            .copied()
            .reduce(|| f64::NEG_INFINITY, f64::max)
    }

    pub fn map(&self, f: impl Fn(f64) -> f64 + Sync) -> Field {
        let values = self.values.par_iter().map(|&v| f(v)).collect();
        Field {
            grid: self.grid,
            values,
        }
    }

    pub fn zip_with(&self, other: &Field, f: impl Fn(f64, f64) -> f64 + Sync) -> Field {
        debug_assert_eq!(self.grid, other.grid);
        let values = self
            .values
            .par_iter()
            .zip(other.values.par_iter())
            .map(|(&a, &b)| f(a, b))
            .collect();
        Field {
            grid: self.grid,
            values,
        }
    }

    pub fn scale(&self, s: f64) -> Field {
        self.map(|v| s * v)
    }

    pub fn add(&self, other: &Field) -> Field {
        self.zip_with(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &Field) -> Field {
        self.zip_with(other, |a, b| a - b)
    }

    pub fn mul(&self, other: &Field) -> Field {
        self.zip_with(other, |a, b| a * b)
    }

    /// `u - s*d` without an intermediate allocation pass.
    pub fn axpy(&self, s: f64, d: &Field) -> Field {
        self.zip_with(d, |a, b| a + s * b)
    }

    /// Pointwise `|u|^p` (specialized for p = 2).
    pub fn abs_pow(&self, p: f64) -> Field {
        if p == 2.0 {
            self.map(|v| v * v)
        } else {
            self.map(|v| v.abs().powf(p))
        }
    }

    /// Pointwise `|u|^{p-2} u` (the Nemytskii factor of the nonlinearity).
    pub fn abs_pow_signed(&self, p: f64) -> Field {
        if p == 2.0 {
            self.clone()
        } else {
            self.map(|v| v.signum() * v.abs().powf(p - 1.0))
        }
    }

    /// `\int |grad u|^2` by Parseval on the discrete Fourier transform.
    pub fn gradient_sq_integral(&self) -> f64 {
        let dims = self.grid.dims();
        let hat = fft::forward_real(&self.values, &dims);
        let hdims = fft::hat_dims(&dims);
        let n = dims.len();
        let h_last = hdims[n - 1];
        let fu = self.grid.freq_unit();
        let partials: Vec<f64> = hat
            .par_chunks_exact(h_last)
            .enumerate()
            .map(|(row, chunk)| {
                let mut rem = row;
                let mut k2_lead = 0.0;
                for axis in (0..n - 1).rev() {
                    let idx = rem % hdims[axis];
                    rem /= hdims[axis];
                    let s = fft::signed_index(idx, dims[axis]) as f64 * fu;
                    k2_lead += s * s;
                }
                let mut acc = 0.0;
                for (k, v) in chunk.iter().enumerate() {
                    let s = k as f64 * fu;
                    let mult = fft::bin_multiplicity(k, dims[n - 1]);
                    acc += mult * (k2_lead + s * s) * v.norm_sqr();
                }
                acc
            })
            .collect();
        let total = self.grid.len() as f64;
        self.grid.cell_volume() / total * stable_sum(&partials)
    }

    /// Bilinear gradient pairing `\int grad a . grad b` (spectral).
    pub fn gradient_inner(&self, other: &Field) -> f64 {
        debug_assert_eq!(self.grid, other.grid);
        let dims = self.grid.dims();
        let ha = fft::forward_real(&self.values, &dims);
        let hb = fft::forward_real(&other.values, &dims);
        let hdims = fft::hat_dims(&dims);
        let n = dims.len();
        let h_last = hdims[n - 1];
        let fu = self.grid.freq_unit();
        let partials: Vec<f64> = ha
            .par_chunks_exact(h_last)
            .zip(hb.par_chunks_exact(h_last))
            .enumerate()
            .map(|(row, (ca, cb))| {
                let mut rem = row;
                let mut k2_lead = 0.0;
                for axis in (0..n - 1).rev() {
                    let idx = rem % hdims[axis];
                    rem /= hdims[axis];
                    let s = fft::signed_index(idx, dims[axis]) as f64 * fu;
                    k2_lead += s * s;
                }
                let mut acc = 0.0;
                for k in 0..h_last {
                    let s = k as f64 * fu;
                    let mult = fft::bin_multiplicity(k, dims[n - 1]);
                    acc += mult * (k2_lead + s * s) * (ca[k] * cb[k].conj()).re;
                }
                acc
            })
            .collect();
        let total = self.grid.len() as f64;
        self.grid.cell_volume() / total * stable_sum(&partials)
    }

    /// Applies a real Fourier multiplier `sym(|xi|^2)`.
    pub fn apply_spectral(&self, sym: impl Fn(f64) -> f64 + Sync) -> Field {
        let dims = self.grid.dims();
        let mut hat = fft::forward_real(&self.values, &dims);
        fft::apply_symbol(&mut hat, &dims, self.grid.freq_unit(), sym);
        let values = fft::inverse_real(hat, &dims);
        Field {
            grid: self.grid,
            values,
        }
    }

    /// `(-Delta + 1) u` spectrally.
    pub fn helmholtz_apply(&self) -> Field {
        self.apply_spectral(|k2| 1.0 + k2)
    }

    /// `(-Delta + 1)^{-1} u` spectrally.
    pub fn helmholtz_solve(&self) -> Field {
        self.apply_spectral(|k2| 1.0 / (1.0 + k2))
    }

    /// `Delta u` spectrally.
    pub fn laplacian(&self) -> Field {
        self.apply_spectral(|k2| -k2)
    }

    /// Returns `u` with values zeroed outside the mask's domain.
    pub fn apply_mask(&self, mask: &DomainMask) -> Field {
        debug_assert_eq!(self.grid, mask.grid);
        let values = self
            .values
            .par_iter()
            .zip(mask.inside.par_iter())
            .map(|(&v, &inside)| if inside { v } else { 0.0 })
            .collect();
        Field {
            grid: self.grid,
            values,
        }
    }

    /// Multilinear interpolation at `x`, wrapping periodically.
    pub fn interpolate(&self, x: &[f64]) -> f64 {
        let n = self.grid.dim();
        debug_assert_eq!(x.len(), n);
        let m = self.grid.points_per_axis();
        let h = self.grid.spacing();
        let l = self.grid.half_width();
        let mut base = [0usize; MAX_DIM];
        let mut frac = [0.0f64; MAX_DIM];
        for axis in 0..n {
            let t = (x[axis] + l) / h;
            let f = t.floor();
            let mut i = (f as i64).rem_euclid(m as i64) as usize;
            let mut fr = t - f;
            // guard against fr == 1.0 from floating point at cell boundaries
            if fr >= 1.0 {
                i = (i + 1) % m;
                fr -= 1.0;
            }
            base[axis] = i;
            frac[axis] = fr;
        }
        let mut acc = 0.0;
        for corner in 0..(1usize << n) {
            let mut w = 1.0;
            let mut flat = 0;
            for axis in 0..n {
                let up = (corner >> axis) & 1 == 1;
                let i = if up {
                    (base[axis] + 1) % m
                } else {
                    base[axis]
                };
                w *= if up { frac[axis] } else { 1.0 - frac[axis] };
                flat = flat * m + i;
            }
            // note: flat above multiplies in axis order 0..n which matches encode
            acc += w * self.values[flat];
        }
        acc
    }

    /// Whole-cell periodic shift: output(x) = input(x - shift) with shift a
    /// lattice vector given in cells.
    pub fn shift_cells(&self, cells: &[i64]) -> Field {
        let n = self.grid.dim();
        debug_assert_eq!(cells.len(), n);
        let m = self.grid.points_per_axis() as i64;
        let mut values = vec![0.0; self.values.len()];
        let grid = self.grid;
        values.par_iter_mut().enumerate().for_each(|(flat, v)| {
            let mut idx = [0usize; MAX_DIM];
            grid.decode(flat, &mut idx);
            let mut src = 0usize;
            for axis in 0..n {
                let j = (idx[axis] as i64 - cells[axis]).rem_euclid(m) as usize;
                src = src * m as usize + j;
            }
            *v = self.values[src];
        });
        Field { grid, values }
    }

    /// Interpolated periodic shift: output(x) = input(x - shift).
    pub fn shift_interpolated(&self, shift: &[f64]) -> Field {
        let n = self.grid.dim();
        let grid = self.grid;
        let mut values = vec![0.0; self.values.len()];
        values.par_iter_mut().enumerate().for_each(|(flat, v)| {
            let mut x = [0.0f64; MAX_DIM];
            grid.coord_into(flat, &mut x);
            for axis in 0..n {
                x[axis] -= shift[axis];
            }
            *v = self.interpolate(&x[..n]);
        });
        Field { grid, values }
    }

    /// Lattice shift when `shift` is within 1e-9 cells of the lattice,
    /// interpolated otherwise.
    pub fn shift(&self, shift: &[f64]) -> Field {
        let h = self.grid.spacing();
        let mut cells = Vec::with_capacity(shift.len());
        for &s in shift {
            let c = s / h;
            if (c - c.round()).abs() <= 1e-9 {
                cells.push(c.round() as i64);
            } else {
                return self.shift_interpolated(shift);
            }
        }
        self.shift_cells(&cells)
    }

    pub(crate) fn forward_hat(&self) -> (Vec<Complex64>, Vec<usize>) {
        let dims = self.grid.dims();
        let hat = fft::forward_real(&self.values, &dims);
        (hat, dims)
    }
}

/// Shape of the obstacle carved out of the box.
#[derive(Clone, Debug, PartialEq)]
pub enum MaskShape {
    /// Omega = R^N (no obstacle).
    Whole,
    /// Omega = R^N minus the closed ball of radius r0.
    BallComplement { r0: f64 },
    /// Omega = R^N minus the closed sup-norm box of half-side a.
    BoxComplement { a: f64 },
    Custom,
}

/// Boolean indicator of an exterior domain Omega on a grid
/// (true = point lies in Omega).
#[derive(Clone, Debug, PartialEq)]
pub struct DomainMask {
    grid: Grid,
    shape: MaskShape,
    inside: Vec<bool>,
}

impl DomainMask {
    pub fn whole(grid: Grid) -> DomainMask {
        DomainMask {
            grid,
            shape: MaskShape::Whole,
            inside: vec![true; grid.len()],
        }
    }

    /// Exterior of the closed ball of radius `r0` (points with `|x| > r0`).
    pub fn ball_complement(grid: Grid, r0: f64) -> Result<DomainMask> {
        if !(r0 > 0.0) || r0 >= grid.half_width() {
            return Err(Error::InvalidParameter(format!(
                "obstacle radius {r0} must lie strictly inside the box (L = {})",
                grid.half_width()
            )));
        }
        let r0sq = r0 * r0;
        let inside = (0..grid.len())
            .into_par_iter()
            .map(|flat| grid.radius_sq(flat) > r0sq)
            .collect();
        Ok(DomainMask {
            grid,
            shape: MaskShape::BallComplement { r0 },
            inside,
        })
    }

    /// Exterior of the closed box `{ |x|_inf <= a }`.
    pub fn box_complement(grid: Grid, a: f64) -> Result<DomainMask> {
        if !(a > 0.0) || a >= grid.half_width() {
            return Err(Error::InvalidParameter(format!(
                "obstacle half-side {a} must lie strictly inside the box (L = {})",
                grid.half_width()
            )));
        }
        let n = grid.dim();
        let inside = (0..grid.len())
            .into_par_iter()
            .map(|flat| {
                let mut x = [0.0f64; MAX_DIM];
                grid.coord_into(flat, &mut x);
                x[..n].iter().any(|v| v.abs() > a)
            })
            .collect();
        Ok(DomainMask {
            grid,
            shape: MaskShape::BoxComplement { a },
            inside,
        })
    }

    pub fn from_indicator(grid: Grid, inside: Vec<bool>) -> Result<DomainMask> {
        if inside.len() != grid.len() {
            return Err(Error::GridMismatch("indicator length".into()));
        }
        Ok(DomainMask {
            grid,
            shape: MaskShape::Custom,
            inside,
        })
    }

    pub fn grid(&self) -> Grid {
        self.grid
    }

    pub fn shape(&self) -> &MaskShape {
        &self.shape
    }

    /// Radius of a ball containing the complement, if there is an obstacle.
    pub fn obstacle_radius(&self) -> Option<f64> {
        match self.shape {
            MaskShape::Whole => None,
            MaskShape::BallComplement { r0 } => Some(r0),
            MaskShape::BoxComplement { a } => Some(a * (self.grid.dim() as f64).sqrt()),
            MaskShape::Custom => {
                let mut worst: f64 = 0.0;
                for (flat, &inside) in self.inside.iter().enumerate() {
                    if !inside {
                        worst = worst.max(self.grid.radius_sq(flat).sqrt());
                    }
                }
                if worst > 0.0 {
                    Some(worst)
                } else {
                    None
                }
            }
        }
    }

    pub fn is_whole(&self) -> bool {
        matches!(self.shape, MaskShape::Whole)
    }

    pub fn inside(&self) -> &[bool] {
        &self.inside
    }

    /// Indicator as a 0/1 field.
    pub fn indicator(&self) -> Field {
        let values = self
            .inside
            .par_iter()
            .map(|&b| if b { 1.0 } else { 0.0 })
            .collect();
        Field {
            grid: self.grid,
            values,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid2(m: usize, l: f64) -> Grid {
        Grid::new(2, m, l).unwrap()
    }

    #[test]
    fn grid_invariants_enforced() {
        assert!(Grid::new(2, 7, 1.0).is_err());
        assert!(Grid::new(2, 12, 1.0).is_err());
        assert!(Grid::new(5, 8, 1.0).is_err());
        assert!(Grid::new(3, 8, 0.0).is_err());
        assert!(Grid::new(4, 16, 8.0).is_ok());
    }

    #[test]
    fn integrate_constant_is_box_volume() {
        let g = grid2(8, 1.0);
        let f = Field::constant(g, 1.0);
        assert!((f.integrate() - 4.0).abs() < 1e-14);
        assert_eq!(Field::zeros(g).integrate(), 0.0);
    }

    #[test]
    fn integrate_gaussian_matches_analytic() {
        let g = Grid::new(3, 128, 12.0).unwrap();
        let f = Field::from_radial(g, |r| (-r * r).exp());
        let want = std::f64::consts::PI.powf(1.5);
        assert!(
            (f.integrate() - want).abs() < 1e-10,
            "got {}, want {want}",
            f.integrate()
        );
    }

    #[test]
    fn integrate_is_linear() {
        let g = grid2(16, 2.0);
        let u = Field::from_fn(g, |x| (x[0] * 1.3).sin() + x[1]);
        let v = Field::from_fn(g, |x| (x[1] * 0.7).cos());
        let a = 2.5;
        let b = -1.25;
        let lhs = u.scale(a).add(&v.scale(b)).integrate();
        let rhs = a * u.integrate() + b * v.integrate();
        let scale = u.integrate().abs() + v.integrate().abs() + 1.0;
        assert!((lhs - rhs).abs() <= 1e-12 * scale);
    }

    #[test]
    fn gradient_of_constant_vanishes() {
        let g = grid2(16, 1.5);
        let f = Field::constant(g, 3.25);
        assert!(f.gradient_sq_integral().abs() < 1e-12);
        let nonconst = Field::from_fn(g, |x| x[0].sin());
        assert!(nonconst.gradient_sq_integral() > 1e-3);
    }

    #[test]
    fn gradient_of_sine_mode_matches_analytic() {
        for (n, m, l) in [(2usize, 32usize, 3.0f64), (3, 16, 2.0)] {
            let g = Grid::new(n, m, l).unwrap();
            let k = std::f64::consts::PI / l;
            let f = Field::from_fn(g, |x| (k * x[0]).sin());
            let want = k * k * (2.0 * l).powi(n as i32) / 2.0;
            let got = f.gradient_sq_integral();
            assert!((got - want).abs() <= 1e-10 * want, "{got} vs {want}");
        }
    }

    #[test]
    fn gradient_agrees_with_central_differences_on_smooth_field() {
        // band-limited random field so the second-order stencil is accurate
        let m = 64usize;
        let g = grid2(m, 4.0);
        let modes: Vec<(f64, f64, f64)> = (1..=2)
            .flat_map(|a| (1..=2).map(move |b| (a as f64, b as f64, ((a * 7 + b) as f64).sin())))
            .collect();
        let k = std::f64::consts::PI / 4.0;
        let f = Field::from_fn(g, |x| {
            modes
                .iter()
                .map(|(a, b, c)| c * (k * a * x[0]).sin() * (k * b * x[1]).cos())
                .sum()
        });
        let spectral = f.gradient_sq_integral();
        // central differences on the periodic lattice
        let h = g.spacing();
        let mut acc = 0.0;
        for i in 0..m {
            for j in 0..m {
                let v = |a: usize, b: usize| f.values()[(a % m) * m + (b % m)];
                let dx = (v(i + 1, j) - v(i + m - 1, j)) / (2.0 * h);
                let dy = (v(i, j + 1) - v(i, j + m - 1)) / (2.0 * h);
                acc += dx * dx + dy * dy;
            }
        }
        let fd = acc * g.cell_volume();
        let rel = (spectral - fd).abs() / spectral;
        assert!(rel < 0.02, "relative gap {rel}");
    }

    #[test]
    fn mask_examples() {
        let g = Grid::new(3, 16, 4.0).unwrap();
        let u = Field::from_fn(g, |x| 1.0 + x[0] + x[1] * x[2]);

        let whole = DomainMask::whole(g);
        assert_eq!(u.apply_mask(&whole), u);

        let none = DomainMask::from_indicator(g, vec![false; g.len()]).unwrap();
        assert_eq!(u.apply_mask(&none), Field::zeros(g));

        let ball = DomainMask::ball_complement(g, 1.0).unwrap();
        let masked = u.apply_mask(&ball);
        for (flat, &v) in masked.values().iter().enumerate() {
            if g.radius_sq(flat).sqrt() <= 1.0 {
                assert_eq!(v, 0.0);
            }
        }
        // idempotent
        assert_eq!(masked.apply_mask(&ball), masked);
    }

    #[test]
    fn interpolate_nodes_and_midpoints() {
        let g = grid2(8, 1.0);
        let u = Field::from_fn(g, |x| 1.0 + 2.0 * x[0] - 0.5 * x[1]);
        // exactly on a node
        let x = [g.axis_coord(3), g.axis_coord(5)];
        assert!((u.interpolate(&x) - u.values()[3 * 8 + 5]).abs() < 1e-14);
        // midpoint of an edge
        let h = g.spacing();
        let xm = [g.axis_coord(3) + 0.5 * h, g.axis_coord(5)];
        let want = 0.5 * (u.values()[3 * 8 + 5] + u.values()[4 * 8 + 5]);
        assert!((u.interpolate(&xm) - want).abs() < 1e-14);
    }

    #[test]
    fn interpolate_reproduces_multilinear_exactly() {
        let g = grid2(8, 1.0);
        // multilinear in each cell: a + b x + c y + d x y
        let u = Field::from_fn(g, |x| 0.3 + 1.7 * x[0] - 0.9 * x[1] + 0.4 * x[0] * x[1]);
        let h = g.spacing();
        for (fx, fy) in [(0.25, 0.75), (0.5, 0.5), (0.1, 0.9)] {
            let x = [g.axis_coord(2) + fx * h, g.axis_coord(4) + fy * h];
            let want = 0.3 + 1.7 * x[0] - 0.9 * x[1] + 0.4 * x[0] * x[1];
            assert!((u.interpolate(&x) - want).abs() < 1e-12);
        }
    }

    #[test]
    fn interpolate_second_order_on_smooth_field() {
        // RMS over fixed probes; a single point is too sensitive to where it
        // falls within the cell
        let probes: Vec<[f64; 2]> = (0..40)
            .map(|i| {
                let t = i as f64 * 0.37;
                [0.9 * (t.sin() * 1.1), 0.9 * ((t * 1.7).cos())]
            })
            .collect();
        let mut errs = Vec::new();
        for m in [64usize, 128] {
            let g = grid2(m, 2.0);
            let u = Field::from_radial(g, |r| (-r * r).exp());
            let mse: f64 = probes
                .iter()
                .map(|p| {
                    let exact = (-(p[0] * p[0] + p[1] * p[1])).exp();
                    (u.interpolate(p) - exact).powi(2)
                })
                .sum::<f64>()
                / probes.len() as f64;
            errs.push(mse.sqrt());
        }
        let ratio = errs[0] / errs[1];
        assert!(
            (3.0..5.5).contains(&ratio),
            "h^2 convergence ratio {ratio}, errors {errs:?}"
        );
    }

    #[test]
    fn shift_cells_round_trips() {
        let g = grid2(16, 2.0);
        let u = Field::from_fn(g, |x| (x[0] + 0.3).sin() * (x[1] - 0.1).cos());
        let shifted = u.shift_cells(&[3, -5]).shift_cells(&[-3, 5]);
        assert_eq!(shifted, u);
    }

    #[test]
    fn lattice_shift_detection() {
        let g = grid2(16, 2.0);
        let h = g.spacing();
        let u = Field::from_fn(g, |x| (-x[0] * x[0] - x[1] * x[1]).exp());
        let a = u.shift(&[2.0 * h, -h]);
        let b = u.shift_cells(&[2, -1]);
        assert_eq!(a, b);
    }
}
