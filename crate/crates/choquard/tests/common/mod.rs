//! Independent oracles shared by the integration and acceptance tests.
//! Everything here stays off the implementation paths it checks.

#![allow(dead_code)]

use choquard::grid::{Field, Grid, MAX_DIM};
use choquard::riesz::RieszKernel;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Brute-force O(M^{2N}) evaluation of D(u) = sum_{x,y} K(x-y)|u|^p(x)|u|^p(y) h^{2N},
/// using the same kernel samples (including the singular-cell average) as the
/// FFT path but none of its machinery.
pub fn brute_force_d(kernel: &RieszKernel, u: &Field, p: f64) -> f64 {
    let grid = u.grid();
    let n = grid.dim();
    let m = grid.points_per_axis();
    let w: Vec<f64> = u.values().iter().map(|v| v.abs().powf(p)).collect();
    let len = grid.len();
    let mut acc = 0.0;
    let mut xi = [0usize; MAX_DIM];
    let mut yi = [0usize; MAX_DIM];
    for x in 0..len {
        if w[x] == 0.0 {
            continue;
        }
        grid.decode(x, &mut xi);
        for y in 0..len {
            if w[y] == 0.0 {
                continue;
            }
            grid.decode(y, &mut yi);
            let mut off = [0i64; MAX_DIM];
            for axis in 0..n {
                off[axis] = xi[axis] as i64 - yi[axis] as i64;
            }
            acc += w[x] * w[y] * kernel.kernel_sample(&off[..n]);
        }
    }
    acc * grid.cell_volume() * grid.cell_volume() * {
        debug_assert!(m >= 8);
        1.0
    }
}

/// Band-limited pseudo-random field, deterministic in the seed.
pub fn random_smooth_field(grid: Grid, seed: u64, modes: usize) -> Field {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = grid.dim();
    let l = grid.half_width();
    let k0 = std::f64::consts::PI / l;
    let mut waves = Vec::new();
    for _ in 0..modes {
        let k: Vec<f64> = (0..n)
            .map(|_| k0 * rng.gen_range(-3i32..=3) as f64)
            .collect();
        let amp: f64 = rng.gen_range(-1.0..1.0);
        let phase: f64 = rng.gen_range(0.0..std::f64::consts::TAU);
        waves.push((k, amp, phase));
    }
    Field::from_fn(grid, move |x| {
        waves
            .iter()
            .map(|(k, a, ph)| {
                let dot: f64 = k.iter().zip(x).map(|(ki, xi)| ki * xi).sum();
                a * (dot + ph).cos()
            })
            .sum()
    })
}

/// Pointwise-random field (white noise on the lattice), deterministic.
pub fn random_rough_field(grid: Grid, seed: u64) -> Field {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let values: Vec<f64> = (0..grid.len()).map(|_| rng.gen_range(-1.0..1.0)).collect();
    Field::from_values(grid, values).unwrap()
}

/// Result of the radial shooting oracle for the limit problem at
/// N = 3, alpha = 1, p = 2 (the Choquard / Schroedinger-Newton case).
pub struct ShootingResult {
    pub c_inf: f64,
    pub omega_at_origin: f64,
    /// rescaled radial profile (r, omega(r))
    pub profile: Vec<(f64, f64)>,
}

#[derive(PartialEq, Debug, Clone, Copy)]
enum Outcome {
    Node,
    Grow,
}

/// Integrates w'' + (2/r) w' = U w, U'' + (2/r) U' = 4 pi w^2 from series
/// initial data w(0) = a, U(0) = -1 and classifies the trajectory.
fn integrate(a: f64, record: bool) -> (Outcome, Vec<[f64; 5]>, f64) {
    let four_pi = 4.0 * std::f64::consts::PI;
    let r0 = 1e-6;
    let dr = 1e-3;
    let u0 = -1.0;
    // series start: w ~ a(1 + u0 r^2/6), U ~ u0 + (4 pi a^2/6) r^2
    let mut r = r0;
    let mut y = [
        a * (1.0 + u0 * r0 * r0 / 6.0),
        a * u0 * r0 / 3.0,
        u0 + four_pi * a * a * r0 * r0 / 6.0,
        four_pi * a * a * r0 / 3.0,
    ];
    let deriv = |r: f64, y: &[f64; 4]| {
        [
            y[1],
            y[2] * y[0] - 2.0 / r * y[1],
            y[3],
            four_pi * y[0] * y[0] - 2.0 / r * y[3],
        ]
    };
    let mut trace = Vec::new();
    let mut outcome = Outcome::Grow;
    let mut r_stop = r0;
    while r < 60.0 {
        if record {
            trace.push([r, y[0], y[1], y[2], y[3]]);
        }
        // classical RK4 step
        let k1 = deriv(r, &y);
        let mid1 = [
            y[0] + 0.5 * dr * k1[0],
            y[1] + 0.5 * dr * k1[1],
            y[2] + 0.5 * dr * k1[2],
            y[3] + 0.5 * dr * k1[3],
        ];
        let k2 = deriv(r + 0.5 * dr, &mid1);
        let mid2 = [
            y[0] + 0.5 * dr * k2[0],
            y[1] + 0.5 * dr * k2[1],
            y[2] + 0.5 * dr * k2[2],
            y[3] + 0.5 * dr * k2[3],
        ];
        let k3 = deriv(r + 0.5 * dr, &mid2);
        let end = [
            y[0] + dr * k3[0],
            y[1] + dr * k3[1],
            y[2] + dr * k3[2],
            y[3] + dr * k3[3],
        ];
        let k4 = deriv(r + dr, &end);
        for i in 0..4 {
            y[i] += dr / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
        r += dr;
        r_stop = r;
        if y[0] < 0.0 {
            outcome = Outcome::Node;
            break;
        }
        if y[0] > 3.0 * a && y[2] > 0.0 {
            outcome = Outcome::Grow;
            break;
        }
        if y[0] < 1e-14 * a && y[1] > 0.0 {
            // decayed to the floor and turned around: growing branch
            outcome = Outcome::Grow;
            break;
        }
    }
    (outcome, trace, r_stop)
}

/// Ground-state energy of the limit problem by shooting + bisection, with
/// the scale freedom fixed by U(0) = -1 and restored from U(infinity).
pub fn schroedinger_newton_shooting() -> ShootingResult {
    // bracket the critical amplitude
    let grid: Vec<f64> = (0..40).map(|i| 0.25 * 1.3f64.powi(i)).collect();
    let mut lo = None;
    let mut hi = None;
    let mut prev: Option<(f64, Outcome)> = None;
    for &a in &grid {
        let (out, _, _) = integrate(a, false);
        if let Some((pa, pout)) = prev {
            if pout != out {
                if pout == Outcome::Node {
                    lo = Some(pa);
                    hi = Some(a);
                } else {
                    lo = Some(a);
                    hi = Some(pa);
                }
                break;
            }
        }
        prev = Some((a, out));
    }
    let (mut lo, mut hi) = (lo.expect("bracket low"), hi.expect("bracket high"));
    // invariant: Node at lo, Grow at hi (or the swapped labels found above)
    for _ in 0..80 {
        let mid = 0.5 * (lo + hi);
        let (out, _, _) = integrate(mid, false);
        match out {
            Outcome::Node => lo = mid,
            Outcome::Grow => hi = mid,
        }
        if (hi - lo) / lo < 1e-14 {
            break;
        }
    }
    let a_crit = 0.5 * (lo + hi);
    let (_, trace, _) = integrate(a_crit, true);

    // truncate where w falls below the trust floor or where the unstable
    // mode turns the tail around (w' > 0 while w is already tiny)
    let floor = 1e-11 * a_crit;
    let mut cut = trace.len();
    for (i, row) in trace.iter().enumerate() {
        if row[1] < floor || (row[1] < 1e-6 * a_crit && row[2] > 0.0) {
            cut = i;
            break;
        }
    }
    let trace = &trace[..cut];
    let last = trace.last().expect("nonempty trace");
    // far field: U = gamma - m/r, so gamma = U + r U'
    let gamma = last[3] + last[0] * last[4];
    assert!(gamma > 0.0, "non-binding trajectory, gamma = {gamma}");
    let lambda = gamma.powf(-0.5);

    // rescaled solution: omega(r) = lambda^2 w(lambda r)
    // trapezoid for |omega|_{H^1}^2 = int (omega'^2 + omega^2) 4 pi r^2 dr
    let mut norm_sq = 0.0;
    let mut prev_point: Option<(f64, f64)> = None;
    let mut profile = Vec::with_capacity(trace.len() / 16 + 1);
    for (i, row) in trace.iter().enumerate() {
        let r = row[0] / lambda;
        let w = lambda * lambda * row[1];
        let dw = lambda * lambda * lambda * row[2];
        let integrand = (dw * dw + w * w) * 4.0 * std::f64::consts::PI * r * r;
        if let Some((pr, pv)) = prev_point {
            norm_sq += 0.5 * (pv + integrand) * (r - pr);
        }
        prev_point = Some((r, integrand));
        if i % 16 == 0 {
            profile.push((r, w));
        }
    }
    ShootingResult {
        c_inf: 0.25 * norm_sq,
        omega_at_origin: lambda * lambda * a_crit,
        profile,
    }
}
