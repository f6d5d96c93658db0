//! Projected-gradient minimization of J_V on the Nehari manifold intersected
//! with the phi-equivariant subspace of H^1_0(Omega):
//!
//!   u <- pi( P_mask( P_phi( u - s * (-Delta+1)^{-1} residual(u) ) ) )
//!
//! with Armijo backtracking on J_V(pi(.)). Fixed points are the constrained
//! critical points. One Riesz convolution is spent per line-search trial; the
//! accepted iterate inherits its convolution by homogeneity.

use crate::energy::{EnergyBreakdown, ProblemParams};
use crate::error::{Error, Result};
use crate::grid::Field;
use crate::groundstate::GroundState;

/// Step-size and stopping policy.
#[derive(Clone, Debug)]
pub struct SolveConfig {
    pub initial_step: f64,
    pub armijo_factor: f64,
    pub armijo_c: f64,
    /// stop when |tangent gradient|_V <= tol_rel * |u|_V
    pub tol_rel: f64,
    pub max_iter: usize,
    /// re-apply the constraint projections every k accepted steps
    pub reproject_every: usize,
    pub record_trace: bool,
}

impl Default for SolveConfig {
    fn default() -> Self {
        SolveConfig {
            initial_step: 1.0,
            armijo_factor: 0.5,
            armijo_c: 1e-4,
            tol_rel: 1e-7,
            max_iter: 20_000,
            reproject_every: 25,
            record_trace: true,
        }
    }
}

#[derive(Clone, Copy, Debug)]
pub struct TracePoint {
    pub iteration: usize,
    pub j_value: f64,
    pub grad_rel: f64,
}

/// Converged (or capped) minimization outcome with its certificates' raw data.
#[derive(Clone, Debug)]
pub struct SolveReport {
    pub field: Field,
    pub breakdown: EnergyBreakdown,
    pub j_value: f64,
    pub tangent_grad_rel: f64,
    pub residual_l2_rel: f64,
    /// |normal part of the descent direction|_V / |u|_V at the last iterate
    pub normal_residual_rel: f64,
    pub equivariance_error: f64,
    pub commute_error: f64,
    pub min_value: f64,
    pub max_value: f64,
    /// ((p-1)/2p) D(u), the left side of the small-energy condition
    pub d_small_energy: f64,
    pub iterations: usize,
    pub converged: bool,
    pub trace: Vec<TracePoint>,
}

/// Boolean certificates extracted from a converged report.
#[derive(Clone, Copy, Debug)]
pub struct Certificates {
    pub equivariant: bool,
    pub sign_changing: bool,
    pub positive: bool,
    pub below_threshold: bool,
    /// ell(Gamma) c_inf - ((p-1)/2p) D(u)
    pub threshold_margin: f64,
    pub small_residual: bool,
}

/// Checks that the mask and equivariant projections commute on a probe field.
pub fn commute_error(params: &ProblemParams) -> f64 {
    let grid = params.grid();
    let probe = Field::from_fn(grid, |x| {
        let r2: f64 = x.iter().map(|v| v * v).sum();
        (-0.3 * r2).exp() * (1.0 + x[0] * 0.7 - 0.2 * x[x.len() - 1])
    });
    let a = params.group().equivariant_project(&probe.apply_mask(params.mask()));
    let b = params.group().equivariant_project(&probe).apply_mask(params.mask());
    a.sub(&b).linf() / probe.linf()
}

pub fn minimize(params: &ProblemParams, initial: &Field, config: &SolveConfig) -> Result<SolveReport> {
    let p = params.p();
    let commute = commute_error(params);
    if params.group().is_grid_exact() && commute > 1e-12 {
        return Err(Error::Degenerate(format!(
            "mask and equivariant projections do not commute (error {commute:.3e})"
        )));
    }

    let projected = params.project_constraints(initial);
    let mut u = params.nehari_project(&projected).map_err(|e| match e {
        Error::ZeroField | Error::Collapse => Error::Degenerate(
            "initializer vanishes after masking and equivariant projection".into(),
        ),
        other => other,
    })?;
    let mut conv = params.kernel().convolve(&u.abs_pow(p))?;

    let mut step = config.initial_step;
    let mut trace = Vec::new();
    let mut converged = false;
    let mut iterations = 0;
    let mut tangent_rel = f64::INFINITY;
    let mut normal_rel = f64::INFINITY;

    for iter in 0..config.max_iter {
        iterations = iter;
        let norm_v = params.norm_v_sq(&u);
        let d_val = conv.dot_l2(&u.abs_pow(p));
        if !(norm_v > 1e-280) || !(d_val > 1e-280) {
            return Err(Error::Collapse);
        }
        let j_cur = 0.5 * norm_v - d_val / (2.0 * p);

        let r = params.residual_with_conv(&u, &conv);
        let r = params.group().equivariant_project(&r).apply_mask(params.mask());
        let dir = params
            .group()
            .equivariant_project(&params.precondition(&r))
            .apply_mask(params.mask());

        let dt = params.tangent_project_with_conv(&u, &dir, &conv)?;
        let dt_norm = params.inner_v(&dt, &dt).sqrt();
        let norm_u = norm_v.sqrt();
        tangent_rel = dt_norm / norm_u;
        let normal = dir.sub(&dt);
        normal_rel = params.inner_v(&normal, &normal).sqrt() / norm_u;

        if config.record_trace {
            trace.push(TracePoint {
                iteration: iter,
                j_value: j_cur,
                grad_rel: tangent_rel,
            });
        }
        if tangent_rel <= config.tol_rel {
            converged = true;
            break;
        }

        // Armijo backtracking on J_V(pi(u - s dir))
        let slope = r.dot_l2(&dir).max(0.0);
        let mut accepted = false;
        let mut backtracks = 0usize;
        while backtracks < 80 {
            let mut v = u.axpy(-step, &dir);
            if config.reproject_every > 0 && iter % config.reproject_every == 0 {
                v = params.project_constraints(&v);
            }
            let norm_trial = params.norm_v_sq(&v);
            let w_trial = v.abs_pow(p);
            let conv_trial = params.kernel().convolve(&w_trial)?;
            let d_trial = conv_trial.dot_l2(&w_trial);
            if norm_trial > 1e-280 && d_trial > 1e-280 {
                let j_trial = params.energy_on_nehari_from(norm_trial, d_trial);
                if j_trial.is_finite()
                    && j_trial
                        <= j_cur - config.armijo_c * step * slope + 1e-14 * j_cur.abs()
                {
                    let t = (norm_trial / d_trial).powf(1.0 / (2.0 * (p - 1.0)));
                    u = v.scale(t);
                    conv = conv_trial.scale(t.powf(p));
                    accepted = true;
                    break;
                }
            }
            step *= config.armijo_factor;
            backtracks += 1;
        }
        if !accepted {
            // gradient too small to certify decrease in f64; stop here
            break;
        }
        if backtracks == 0 {
            step = (step * 1.8).min(1e3);
        }
    }

    finalize_report(
        params,
        u,
        iterations,
        converged,
        trace,
        tangent_rel,
        normal_rel,
        commute,
    )
}

#[allow(clippy::too_many_arguments)]
fn finalize_report(
    params: &ProblemParams,
    u: Field,
    iterations: usize,
    converged: bool,
    trace: Vec<TracePoint>,
    tangent_rel: f64,
    normal_rel: f64,
    commute: f64,
) -> Result<SolveReport> {
    let breakdown = params.j_v(&u)?;
    let residual = params.residual(&u)?;
    let res_rel = residual.norm_l2_sq().sqrt() / u.norm_l2_sq().sqrt();
    let equiv_err = params.group().equivariance_error(&u);
    let p = params.p();
    Ok(SolveReport {
        min_value: u.min_value(),
        max_value: u.max_value(),
        d_small_energy: (p - 1.0) / (2.0 * p) * breakdown.d_value,
        j_value: breakdown.j_value,
        breakdown,
        tangent_grad_rel: tangent_rel,
        residual_l2_rel: res_rel,
        normal_residual_rel: normal_rel,
        equivariance_error: equiv_err,
        commute_error: commute,
        field: u,
        iterations,
        converged,
        trace,
    })
}

/// Rebuilds the report data for an arbitrary field (used to compare u and -u
/// and to re-certify loaded solutions).
pub fn evaluate_report(params: &ProblemParams, u: &Field) -> Result<SolveReport> {
    let commute = commute_error(params);
    finalize_report(
        params,
        u.clone(),
        0,
        true,
        Vec::new(),
        f64::NAN,
        f64::NAN,
        commute,
    )
}

/// Certificate thresholds from the report and the reference ground state.
pub fn certify(params: &ProblemParams, report: &SolveReport, gs: &GroundState) -> Certificates {
    let sup = report.max_value.abs().max(report.min_value.abs());
    let sign_changing = report.min_value < -1e-6 * sup && report.max_value > 1e-6 * sup;
    // sign normalization: a solution with negative maximum counts as
    // positive after flipping
    let (lo, hi) = if report.max_value.abs() >= report.min_value.abs() {
        (report.min_value, report.max_value)
    } else {
        (-report.max_value, -report.min_value)
    };
    let positive = lo >= -1e-8 * hi.abs();
    let ell = params.group().ell().value as f64;
    let threshold = ell * gs.c_inf;
    let margin = threshold - report.d_small_energy;
    Certificates {
        equivariant: report.equivariance_error <= 1e-8,
        sign_changing,
        positive,
        below_threshold: margin > 0.0,
        threshold_margin: margin,
        small_residual: report.residual_l2_rel <= 1e-6,
    }
}
