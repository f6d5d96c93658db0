//! Named property suites: the algebraic-lemma table, the asymptotic trend
//! checks on a computed ground state, the orbit-sum interaction trends, and
//! the quick energy consistency battery.
//!
//! Asymptotic limits cannot be taken on a finite grid; every check is the
//! finite-window monotone-trend or positivity form of the corresponding
//! statement, over windows declared by the caller.

use crate::energy::ProblemParams;
use crate::error::Result;
use crate::grid::Field;
use crate::groundstate::{fit_decay, GroundState};
use crate::lemmas::{self, RandomTrialSpec, SmallTerm};
use crate::testfn::{self, CutoffSpec};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// One pass/fail line of a verification table.
#[derive(Clone, Debug)]
pub struct CheckResult {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl CheckResult {
    fn new(name: &str, passed: bool, detail: String) -> CheckResult {
        CheckResult {
            name: name.to_string(),
            passed,
            detail,
        }
    }
}

pub fn all_passed(results: &[CheckResult]) -> bool {
    results.iter().all(|r| r.passed)
}

fn strictly_decreasing(values: &[f64]) -> bool {
    values
        .windows(2)
        .all(|w| w[1] <= w[0] * (1.0 + 1e-6) && w[1] < w[0].max(1e-300))
}

fn strictly_increasing(values: &[f64]) -> bool {
    values
        .windows(2)
        .all(|w| w[1] >= w[0] * (1.0 - 1e-6) && w[1] > w[0])
}

/// The randomized algebraic-inequality table.
pub fn lemma_suite(trials: usize, seed: u64) -> Result<Vec<CheckResult>> {
    let mut out = Vec::new();
    for p in [2.0, 2.5, 3.0] {
        for n in [2usize, 3, 5] {
            let spec = RandomTrialSpec {
                trials,
                tuple_size: n,
                exponent: p,
                seed,
                slack_tol: 1e-12,
            };
            let r = lemmas::check_l0(&spec)?;
            out.push(CheckResult::new(
                &format!("signed-sum bounds p={p} n={n}"),
                r.passed,
                format!("{} trials, worst slack {:.3e}", r.trials, r.worst_slack),
            ));
            let r = lemmas::check_l1(&spec)?;
            out.push(CheckResult::new(
                &format!("product-sum bounds p={p} n={n}"),
                r.passed,
                format!("{} trials, worst slack {:.3e}", r.trials, r.worst_slack),
            ));
        }
    }
    for (a, beta, b, expect_applicable) in
        [(1.0, 0.5, 4.0, true), (1.0, 0.5, 2.0, false), (4.0, 0.5, 3.0, true)]
    {
        let r = lemmas::check_razon(a, beta, b, SmallTerm::PlusTSquared, SmallTerm::MinusTSquared, 400)?;
        let ok = if expect_applicable {
            r.applicable && r.passed
        } else {
            !r.applicable
        };
        out.push(CheckResult::new(
            &format!("ratio bound a={a} beta={beta} b={b}"),
            ok,
            format!(
                "applicable {}, slope {:.4}, c0 {:.4}, t0 {:.3}",
                r.applicable, r.slope_at_zero, r.c0, r.t0
            ),
        ));
    }
    Ok(out)
}

/// Asymptotic trend checks on a computed ground state over
/// `window = (r_lo, r_hi)` (defaults honoring 0.8 L are the caller's job).
/// `coarse` enables the grid-refinement stability check.
pub fn asymptotics_suite(
    gs: &GroundState,
    coarse: Option<&GroundState>,
    window: (f64, f64),
) -> Result<Vec<CheckResult>> {
    let mut out = Vec::new();
    let n_dim = gs.grid().dim();
    let b = (n_dim as f64 - 1.0) / 2.0;
    let l = gs.grid().half_width();
    let h = gs.grid().spacing();

    // profile dichotomy: w(r) r^b e^{ar} decreasing for a = 0.5,
    // increasing for a = 1.5
    for (a, want_down) in [(0.5, true), (1.5, false)] {
        let vals: Vec<f64> = gs
            .profile
            .iter()
            .filter(|pt| pt.r >= window.0 && pt.r <= window.1 && pt.mean > 0.0)
            .map(|pt| pt.mean * pt.r.powf(b) * (a * pt.r).exp())
            .collect();
        let ok = if want_down {
            strictly_decreasing(&vals)
        } else {
            strictly_increasing(&vals)
        };
        out.push(CheckResult::new(
            &format!("profile dichotomy a={a}"),
            ok && vals.len() > 10,
            format!("{} shells in [{}, {}]", vals.len(), window.0, window.1),
        ));
    }

    // translate overlap trend: int omega^{p-1} omega_zeta weighted by
    // |zeta|^b e^{a|zeta|} decreases toward 0 for a = 0.5
    let p = gs.p();
    let dists: Vec<f64> = (4..=(l / 2.0) as usize).map(|d| d as f64).collect();
    {
        let a = 0.5;
        let mut vals = Vec::new();
        for &d in &dists {
            let cells = (d / h).round() as i64;
            let mut shift = vec![0i64; n_dim];
            shift[0] = cells;
            let trans = gs.field.shift_cells(&shift);
            let overlap = gs.field.abs_pow_signed(p).dot_l2(&trans);
            vals.push(overlap * d.powf(b) * (a * d).exp());
        }
        let ok = strictly_decreasing(&vals) && vals.last().unwrap() < &(0.5 * vals[0]);
        out.push(CheckResult::new(
            "overlap decay a=0.5",
            ok,
            format!("values {:?}", vals),
        ));
    }

    // interaction lower bound: I(zeta)|zeta|^b e^{a|zeta|} stays positive
    // over [1, L/2] for a = 1.2, stable under grid refinement
    {
        let a = 1.2;
        let min_weighted = |g: &GroundState| -> f64 {
            let mut best = f64::INFINITY;
            let mut d = 1.0;
            while d <= g.grid().half_width() / 2.0 {
                let v = g.interaction_i_radial(d) * d.powf(b) * (a * d).exp();
                best = best.min(v);
                d += 0.5;
            }
            best
        };
        let fine = min_weighted(gs);
        let mut ok = fine > 0.0;
        let mut detail = format!("min weighted I {fine:.6e}");
        if let Some(c) = coarse {
            let rough = min_weighted(c);
            let ratio = fine / rough;
            ok = ok && rough > 0.0 && (0.5..=2.0).contains(&ratio);
            detail.push_str(&format!(", refinement ratio {ratio:.3}"));
        }
        out.push(CheckResult::new("interaction lower bound a=1.2", ok, detail));
    }

    // compact-support pairing trend: (int f omega_zeta^q) |zeta|^b e^{qa|zeta|}
    // decreases toward 0 for q = p, a = 0.5
    {
        let a = 0.5;
        let q = p;
        let bump = Field::from_radial(gs.grid(), |r| CutoffSpec::escape_ball().profile(r));
        let mut vals = Vec::new();
        for &d in &dists {
            let cells = (d / h).round() as i64;
            let mut shift = vec![0i64; n_dim];
            shift[0] = cells;
            let trans = gs.field.shift_cells(&shift).abs_pow(q);
            let v = bump.dot_l2(&trans) * d.powf(b) * (q * a * d).exp();
            vals.push(v);
        }
        let ok = strictly_decreasing(&vals) && vals.last().unwrap() < &(0.5 * vals[0]);
        out.push(CheckResult::new(
            "compact-support pairing decay",
            ok,
            format!("values {:?}", vals),
        ));
    }

    // decay-law fit: slope 1 within 5 percent against the p-model
    {
        let fit = fit_decay(gs, window)?;
        let ok = (fit.slope - 1.0).abs() <= 0.05;
        out.push(CheckResult::new(
            "decay-law slope",
            ok,
            format!(
                "slope {:.4}, misfit {:.2e}, {} samples, model {}",
                fit.slope,
                fit.misfit,
                fit.samples,
                if fit.delta.is_some() { "-Q(r)" } else { "-r" }
            ),
        ));
    }

    Ok(out)
}

/// Orbit-sum interaction trends along growing R for a group where the
/// cross-coset separation holds.
pub fn sigma_trend_suite(
    params: &ProblemParams,
    gs: &GroundState,
    z: &[f64],
    r_values: &[f64],
) -> Result<Vec<CheckResult>> {
    let mut out = Vec::new();
    let p = params.p();

    let mut eps = Vec::new();
    let mut hat_over_eps = Vec::new();
    let mut cross_over_eps = Vec::new();
    let mut vplus_over_eps = Vec::new();
    let mut fq_over_eps = Vec::new();
    let bump = Field::from_radial(params.grid(), |r| CutoffSpec::escape_ball().profile(r));
    let vfield = params.v_field().clone();

    for &r in r_values {
        let c = testfn::sigma(params, gs, z, r)?;
        let e = c.eps_rz.unwrap_or(0.0);
        let ehat = c.eps_hat_rz.unwrap_or(0.0);
        eps.push(e);
        hat_over_eps.push(ehat / e);
        let cross = testfn::cross_coset_interaction(params, gs, z, r)?;
        cross_over_eps.push(cross / e);
        let vplus = vfield.map(|v| v.max(0.0));
        let vq = vplus.mul(&c.field).dot_l2(&c.field);
        vplus_over_eps.push(vq / e);
        let fq = bump.dot_l2(&c.field.abs_pow(p));
        fq_over_eps.push(fq / e);
    }

    out.push(CheckResult::new(
        "cross-sign interactions are lower order",
        strictly_decreasing(&hat_over_eps),
        format!("eps-hat/eps along R: {:?}", hat_over_eps),
    ));
    out.push(CheckResult::new(
        "cross-coset D term is lower order",
        strictly_decreasing(&cross_over_eps),
        format!("values {:?}", cross_over_eps),
    ));
    out.push(CheckResult::new(
        "potential perturbation is lower order",
        strictly_decreasing(&vplus_over_eps),
        format!("int V+ sigma^2 / eps: {:?}", vplus_over_eps),
    ));
    out.push(CheckResult::new(
        "compact pairing is lower order",
        strictly_decreasing(&fq_over_eps),
        format!("int f |sigma|^p / eps: {:?}", fq_over_eps),
    ));
    Ok(out)
}

/// Quick energy consistency battery on a small grid.
pub fn energy_suite(params: &ProblemParams, trials: usize, seed: u64) -> Result<Vec<CheckResult>> {
    let grid = params.grid();
    let p = params.p();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::new();

    let mut random_field = |rng: &mut ChaCha8Rng| -> Field {
        let k0 = std::f64::consts::PI / grid.half_width();
        let modes: Vec<(Vec<f64>, f64, f64)> = (0..6)
            .map(|_| {
                (
                    (0..grid.dim())
                        .map(|_| k0 * rng.gen_range(-3i32..=3) as f64)
                        .collect(),
                    rng.gen_range(-1.0..1.0),
                    rng.gen_range(0.0..std::f64::consts::TAU),
                )
            })
            .collect();
        Field::from_fn(grid, move |x| {
            let r2: f64 = x.iter().map(|v| v * v).sum();
            let env = (-0.15 * r2).exp();
            env * modes
                .iter()
                .map(|(k, a, ph)| {
                    let dot: f64 = k.iter().zip(x).map(|(ki, xi)| ki * xi).sum();
                    a * (dot + ph).cos()
                })
                .sum::<f64>()
        })
    };

    // Nehari closure
    let mut worst_defect: f64 = 0.0;
    let mut worst_energy: f64 = 0.0;
    for _ in 0..trials {
        let u = random_field(&mut rng);
        let pu = params.nehari_project(&u)?;
        let bd = params.j_v(&pu)?;
        worst_defect = worst_defect.max(bd.nehari_defect.abs() / bd.norm_v_sq);
        let closed = params.energy_on_nehari(&u)?;
        worst_energy = worst_energy.max((closed - bd.j_value).abs() / closed.abs());
    }
    out.push(CheckResult::new(
        "Nehari projection closure",
        worst_defect <= 1e-12 && worst_energy <= 1e-12,
        format!("worst defect {worst_defect:.3e}, worst energy gap {worst_energy:.3e}"),
    ));

    // finite-difference derivative check
    let fd_trials = trials.min(20).max(5);
    let mut worst_fd: f64 = 0.0;
    for _ in 0..fd_trials {
        let u = random_field(&mut rng).apply_mask(params.mask());
        let v = random_field(&mut rng).apply_mask(params.mask());
        let r = params.residual(&u)?;
        let pairing = r.dot_l2(&v);
        let eps = 1e-6 * u.norm_l2_sq().sqrt() / v.norm_l2_sq().sqrt().max(1e-12);
        let jp = params.j_v(&u.axpy(eps, &v))?.j_value;
        let jm = params.j_v(&u.axpy(-eps, &v))?.j_value;
        let fd = (jp - jm) / (2.0 * eps);
        worst_fd = worst_fd.max((pairing - fd).abs() / fd.abs().max(1e-12));
    }
    out.push(CheckResult::new(
        "residual matches finite differences",
        worst_fd <= 1e-5,
        format!("worst relative gap {worst_fd:.3e} over {fd_trials} pairs"),
    ));

    // cutoff inequalities on random fields, both variants
    let chi_ann = CutoffSpec::annulus(1.0)?.field(grid);
    let ball = CutoffSpec::ball(0.25)?;
    let scale = 0.5 * grid.half_width();
    let chi_ball = Field::from_radial(grid, move |r| ball.profile(r / scale));
    let mut worst_norm: f64 = f64::INFINITY;
    let mut worst_d: f64 = f64::INFINITY;
    for i in 0..trials.min(25) {
        let u = random_field(&mut rng);
        let chi = if i % 2 == 0 { &chi_ann } else { &chi_ball };
        let s = testfn::cutoff_inequalities(params, &u, chi)?;
        worst_norm = worst_norm.min(s.norm_slack / s.scale_norm);
        worst_d = worst_d.min(s.d_slack / s.scale_d);
    }
    out.push(CheckResult::new(
        "cutoff estimates",
        worst_norm >= -1e-10 && worst_d >= -1e-10,
        format!("worst norm slack {worst_norm:.3e}, worst D slack {worst_d:.3e}"),
    ));

    // HLS ratio stays bounded over a Gaussian width sweep
    let mut ratios = Vec::new();
    for w in [0.5, 0.8, 1.2, 2.0] {
        let u = Field::from_radial(grid, move |r| (-(r / w) * (r / w)).exp());
        let (d, bound) = params.kernel().hls_check(&u, p)?;
        ratios.push(d / bound);
    }
    let max = ratios.iter().cloned().fold(0.0, f64::max);
    let min = ratios.iter().cloned().fold(f64::INFINITY, f64::min);
    out.push(CheckResult::new(
        "empirical HLS constant bounded",
        max.is_finite() && min > 0.0 && max / min < 10.0,
        format!("ratios {:?}", ratios),
    ));

    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Grid;

    #[test]
    fn lemma_suite_all_pass() {
        let results = lemma_suite(2_000, 7).unwrap();
        assert!(all_passed(&results), "{results:?}");
        assert_eq!(results.len(), 21);
    }

    #[test]
    fn energy_suite_all_pass_on_small_grid() {
        let grid = Grid::new(2, 16, 4.0).unwrap();
        let params = ProblemParams::limit(grid, 1.0, 2.0).unwrap();
        let results = energy_suite(&params, 50, 11).unwrap();
        assert!(all_passed(&results), "{results:?}");
    }
}
