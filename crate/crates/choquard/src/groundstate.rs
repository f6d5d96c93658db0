//! The limit problem `-Delta u + u = (|x|^{-alpha} * |u|^p)|u|^{p-2} u` on
//! R^N: ground-state computation, radial profile extraction, decay-law fits,
//! and the interaction / perturbation integrals I(zeta), A(zeta).

use crate::energy::ProblemParams;
use crate::error::{Error, Result};
use crate::grid::{Field, Grid, MAX_DIM};
use crate::solver::{self, SolveConfig, TracePoint};
use std::collections::BTreeMap;
use std::sync::{Arc, OnceLock};

/// Initial iterate for the limit solve.
#[derive(Clone, Debug)]
pub enum Seed {
    /// positive Gaussian `exp(-(r/width)^2)`
    Gaussian { width: f64 },
    Field(Field),
}

#[derive(Clone, Debug)]
pub struct SolveLimitOptions {
    pub seed: Seed,
    pub tol_rel: f64,
    pub max_iter: usize,
    pub record_trace: bool,
}

impl Default for SolveLimitOptions {
    fn default() -> Self {
        SolveLimitOptions {
            seed: Seed::Gaussian { width: 2.0 },
            tol_rel: 1e-8,
            max_iter: 10_000,
            record_trace: true,
        }
    }
}

/// One radial shell of grid points at exactly equal |x|.
#[derive(Clone, Copy, Debug)]
pub struct ProfilePoint {
    pub r: f64,
    pub mean: f64,
    pub min: f64,
    pub max: f64,
    pub count: usize,
}

/// Decay-law fit of the radial profile.
#[derive(Clone, Debug)]
pub struct DecayFit {
    pub window: (f64, f64),
    /// slope against the model abscissa (-r for p > 2, -Q(r) for p = 2);
    /// the decay laws predict 1
    pub slope: f64,
    pub intercept: f64,
    /// rms fit residual over the rms spread of the data
    pub misfit: f64,
    pub samples: usize,
    /// delta entering Q for the p = 2 model
    pub delta: Option<f64>,
}

/// Computed ground state of the limit problem together with its
/// certificates and radial profile.
pub struct GroundState {
    pub field: Field,
    pub c_inf: f64,
    pub profile: Vec<ProfilePoint>,
    pub residual_l2_rel: f64,
    pub nehari_defect_rel: f64,
    pub tangent_grad_rel: f64,
    pub iterations: usize,
    pub trace: Vec<TracePoint>,
    params: Arc<ProblemParams>,
    /// log-linear tail extrapolation coefficients (log w = c0 - c1 r - b log r)
    tail: (f64, f64),
    conv_cache: OnceLock<Field>,
}

impl GroundState {
    pub fn grid(&self) -> Grid {
        self.field.grid()
    }
    pub fn alpha(&self) -> f64 {
        self.params.alpha()
    }
    pub fn p(&self) -> f64 {
        self.params.p()
    }
    pub fn params(&self) -> &Arc<ProblemParams> {
        &self.params
    }

    /// `K * omega^p`, cached (shared by every I(zeta) evaluation).
    pub fn interaction_weight(&self) -> &Field {
        self.conv_cache.get_or_init(|| {
            self.params
                .kernel()
                .convolve(&self.field.abs_pow(self.params.p()))
                .expect("kernel and field share a grid")
        })
    }

    /// omega translated by zeta (exact roll on lattice shifts).
    pub fn translate(&self, zeta: &[f64]) -> Result<Field> {
        let l = self.grid().half_width();
        let r: f64 = zeta.iter().map(|v| v * v).sum::<f64>().sqrt();
        if r > 0.5 * l + 1e-12 {
            return Err(Error::RangeViolation(format!(
                "shift |zeta| = {r} exceeds the safe range L/2 = {}",
                0.5 * l
            )));
        }
        Ok(self.field.shift(zeta))
    }

    /// Radial profile value with exponential tail extrapolation.
    pub fn profile_value(&self, r: f64) -> f64 {
        let prof = &self.profile;
        let last = prof.last().expect("nonempty profile");
        if r >= last.r {
            let (c0, c1) = self.tail;
            let b = (self.grid().dim() as f64 - 1.0) / 2.0;
            return (c0 - c1 * r - b * r.max(1e-9).ln()).exp();
        }
        match prof.binary_search_by(|p| p.r.partial_cmp(&r).unwrap()) {
            Ok(i) => prof[i].mean,
            Err(0) => prof[0].mean,
            Err(i) => {
                let (a, b) = (&prof[i - 1], &prof[i]);
                let t = (r - a.r) / (b.r - a.r);
                a.mean + t * (b.mean - a.mean)
            }
        }
    }

    /// Field `omega(|x - center|)` built from the radial profile; valid for
    /// centers beyond the lattice and beyond the safe roll range.
    pub fn translate_from_profile(&self, grid: Grid, center: &[f64]) -> Field {
        Field::from_fn(grid, |x| {
            let r: f64 = x
                .iter()
                .zip(center)
                .map(|(a, b)| (a - b) * (a - b))
                .sum::<f64>()
                .sqrt();
            self.profile_value(r)
        })
    }

    /// The interaction integral
    /// `I(zeta) = \int (K * omega^p) omega^{p-1} omega_zeta`.
    pub fn interaction_i(&self, zeta: &[f64]) -> Result<f64> {
        let shifted = self.translate(zeta)?;
        Ok(self.interaction_pairing(&shifted))
    }

    /// I at distance `d` via the radial profile (radially symmetric omega
    /// makes I a function of |zeta| only); valid beyond the roll range.
    pub fn interaction_i_radial(&self, d: f64) -> f64 {
        let mut center = vec![0.0; self.grid().dim()];
        center[0] = d;
        let shifted = self.translate_from_profile(self.grid(), &center);
        self.interaction_pairing(&shifted)
    }

    fn interaction_pairing(&self, omega_zeta: &Field) -> f64 {
        let p = self.params.p();
        self.interaction_weight()
            .mul(&self.field.abs_pow_signed(p))
            .dot_l2(omega_zeta)
    }

    /// `A(zeta) = \int V^+(x) omega^2(x - zeta) dx`.
    pub fn a_perturbation(&self, v: &Field, zeta: &[f64]) -> Result<f64> {
        let shifted = self.translate(zeta)?;
        let vplus = v.map(|x| x.max(0.0));
        Ok(vplus.mul(&shifted).dot_l2(&shifted))
    }

    /// Largest relative shell spread (max-min)/mean over shells whose mean
    /// exceeds `floor` times the peak; certifies radial symmetry.
    pub fn radial_spread(&self, floor: f64) -> f64 {
        let peak = self.profile.iter().map(|p| p.mean).fold(0.0, f64::max);
        self.profile
            .iter()
            .filter(|p| p.mean > floor * peak && p.count > 1)
            .map(|p| (p.max - p.min) / p.mean)
            .fold(0.0, f64::max)
    }

    /// Rebuilds the ground state on another grid from the radial profile,
    /// re-projected onto that grid's Nehari manifold. Residual and defect
    /// certificates are recomputed there.
    pub fn resample(&self, grid: Grid) -> Result<GroundState> {
        let params = Arc::new(ProblemParams::limit(grid, self.alpha(), self.p())?);
        let raw = Field::from_radial(grid, |r| self.profile_value(r));
        let field = params.nehari_project(&raw)?;
        build_ground_state(params, field, 0, f64::NAN, Vec::new())
    }

    /// Wraps a previously computed (e.g. loaded) field as a ground state,
    /// re-projecting it onto the Nehari manifold and recomputing every
    /// certificate on this grid.
    pub fn from_field(alpha: f64, p: f64, field: Field) -> Result<GroundState> {
        let params = Arc::new(ProblemParams::limit(field.grid(), alpha, p)?);
        let projected = params.nehari_project(&field)?;
        build_ground_state(params, projected, 0, f64::NAN, Vec::new())
    }
}

/// Shell statistics keyed by the exact integer radius class.
fn radial_profile(field: &Field) -> Vec<ProfilePoint> {
    let grid = field.grid();
    let h = grid.spacing();
    let mut shells: BTreeMap<u64, (f64, f64, f64, usize)> = BTreeMap::new();
    for (flat, &v) in field.values().iter().enumerate() {
        let key = grid.radius_sq_index(flat);
        let e = shells.entry(key).or_insert((0.0, f64::INFINITY, f64::NEG_INFINITY, 0));
        e.0 += v;
        e.1 = e.1.min(v);
        e.2 = e.2.max(v);
        e.3 += 1;
    }
    shells
        .into_iter()
        .map(|(key, (sum, min, max, count))| ProfilePoint {
            r: h * (key as f64).sqrt(),
            mean: sum / count as f64,
            min,
            max,
            count,
        })
        .collect()
}

fn fit_tail(profile: &[ProfilePoint], n_dim: usize, half_width: f64) -> (f64, f64) {
    let b = (n_dim as f64 - 1.0) / 2.0;
    let (lo, hi) = (0.45 * half_width, 0.7 * half_width);
    let pts: Vec<(f64, f64)> = profile
        .iter()
        .filter(|p| p.r >= lo && p.r <= hi && p.mean > 1e-300)
        .map(|p| (p.r, p.mean.ln() + b * p.r.ln()))
        .collect();
    if pts.len() < 4 {
        return (f64::NEG_INFINITY, 0.0); // extrapolates to zero
    }
    let (slope, intercept, _) = least_squares(&pts.iter().map(|&(r, y)| (-r, y)).collect::<Vec<_>>());
    (intercept, slope)
}

fn least_squares(xy: &[(f64, f64)]) -> (f64, f64, f64) {
    let n = xy.len() as f64;
    let sx: f64 = xy.iter().map(|p| p.0).sum();
    let sy: f64 = xy.iter().map(|p| p.1).sum();
    let sxx: f64 = xy.iter().map(|p| p.0 * p.0).sum();
    let sxy: f64 = xy.iter().map(|p| p.0 * p.1).sum();
    let denom = n * sxx - sx * sx;
    let slope = (n * sxy - sx * sy) / denom;
    let intercept = (sy - slope * sx) / n;
    let mean_y = sy / n;
    let ss_res: f64 = xy
        .iter()
        .map(|&(x, y)| {
            let e = y - slope * x - intercept;
            e * e
        })
        .sum();
    let ss_tot: f64 = xy.iter().map(|&(_, y)| (y - mean_y) * (y - mean_y)).sum();
    let misfit = if ss_tot > 0.0 {
        (ss_res / ss_tot).sqrt()
    } else {
        0.0
    };
    (slope, intercept, misfit)
}

fn build_ground_state(
    params: Arc<ProblemParams>,
    field: Field,
    iterations: usize,
    tangent_grad_rel: f64,
    trace: Vec<TracePoint>,
) -> Result<GroundState> {
    // sign normalization and re-centering of the maximum onto the origin
    let mut u = field;
    let (mut argmax, mut best) = (0usize, f64::NEG_INFINITY);
    for (i, &v) in u.values().iter().enumerate() {
        if v.abs() > best {
            best = v.abs();
            argmax = i;
        }
    }
    if u.values()[argmax] < 0.0 {
        u = u.scale(-1.0);
    }
    let grid = u.grid();
    let m = grid.points_per_axis() as i64;
    let mut idx = [0usize; MAX_DIM];
    grid.decode(argmax, &mut idx);
    let shift: Vec<i64> = (0..grid.dim()).map(|a| m / 2 - idx[a] as i64).collect();
    if shift.iter().any(|&s| s != 0) {
        u = u.shift_cells(&shift);
    }

    let breakdown = params.j_v(&u)?;
    let residual = params.residual(&u)?;
    let res_rel = residual.norm_l2_sq().sqrt() / u.norm_l2_sq().sqrt();
    let profile = radial_profile(&u);
    let tail = fit_tail(&profile, grid.dim(), grid.half_width());
    Ok(GroundState {
        c_inf: breakdown.j_value,
        nehari_defect_rel: breakdown.nehari_defect.abs() / breakdown.norm_v_sq,
        residual_l2_rel: res_rel,
        tangent_grad_rel,
        iterations,
        trace,
        field: u,
        profile,
        params,
        tail,
        conv_cache: OnceLock::new(),
    })
}

/// Solves the limit problem on the given grid by Nehari projected gradient
/// from a positive Gaussian seed (or a supplied field).
///
/// The iteration runs in the subspace of fields even in every axis: the
/// radial minimizer lives there, while the flat translation modes of the
/// limit problem (which stall the tangent gradient near 1e-7) do not.
pub fn solve_limit(
    grid: Grid,
    alpha: f64,
    p: f64,
    opts: &SolveLimitOptions,
) -> Result<GroundState> {
    let params = Arc::new(ProblemParams::new(
        grid,
        alpha,
        p,
        crate::potential::Potential::Zero,
        crate::grid::DomainMask::whole(grid),
        Arc::new(crate::symmetry::SymmetryGroup::axis_reflections(grid.dim())),
    )?);
    let seed = match &opts.seed {
        Seed::Gaussian { width } => {
            let w = *width;
            Field::from_radial(grid, move |r| (-(r / w) * (r / w)).exp())
        }
        Seed::Field(f) => {
            if f.grid() == grid {
                f.clone()
            } else {
                // interpolate a coarser iterate onto this grid
                let src = f.clone();
                Field::from_fn(grid, move |x| src.interpolate(x))
            }
        }
    };
    let config = SolveConfig {
        tol_rel: opts.tol_rel,
        max_iter: opts.max_iter,
        record_trace: opts.record_trace,
        ..SolveConfig::default()
    };
    let report = solver::minimize(&params, &seed, &config)?;
    if !report.converged {
        return Err(Error::NonConvergence {
            iterations: report.iterations,
            gradient: report.tangent_grad_rel,
        });
    }
    build_ground_state(
        params,
        report.field,
        report.iterations,
        report.tangent_grad_rel,
        report.trace,
    )
}

/// Coarse-to-fine variant: the Gaussian seed is solved on a coarse grid and
/// interpolated upward, which cuts the expensive fine-grid iterations.
pub struct CascadeResult {
    pub ground_state: GroundState,
    /// intermediate-stage ground states, coarsest first
    pub stages: Vec<GroundState>,
}

pub fn solve_limit_cascade(
    grid: Grid,
    alpha: f64,
    p: f64,
    opts: &SolveLimitOptions,
) -> Result<CascadeResult> {
    let m = grid.points_per_axis();
    let mut ms = vec![m];
    let mut cur = m;
    while cur > 32 && ms.len() < 3 {
        cur /= 2;
        ms.push(cur);
    }
    ms.reverse();

    let mut stages = Vec::new();
    let mut seed = opts.seed.clone();
    for (k, &mk) in ms.iter().enumerate() {
        let is_last = k + 1 == ms.len();
        let gk = Grid::new(grid.dim(), mk, grid.half_width())?;
        let stage_opts = SolveLimitOptions {
            seed: seed.clone(),
            tol_rel: if is_last { opts.tol_rel } else { opts.tol_rel.max(1e-9) },
            max_iter: opts.max_iter,
            record_trace: opts.record_trace && is_last,
        };
        let gs = solve_limit(gk, alpha, p, &stage_opts)?;
        seed = Seed::Field(gs.field.clone());
        if is_last {
            return Ok(CascadeResult {
                ground_state: gs,
                stages,
            });
        }
        stages.push(gs);
    }
    unreachable!("cascade always ends on the target grid")
}

/// `Q(t) = \int_delta^t sqrt(1 - (delta/s)^alpha) ds` by adaptive Simpson
/// quadrature to absolute tolerance 1e-10.
pub fn q_integral(t: f64, delta: f64, alpha: f64) -> Result<f64> {
    if !(delta > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "delta must be positive, got {delta}"
        )));
    }
    if t < delta {
        return Err(Error::RangeViolation(format!("t = {t} below delta = {delta}")));
    }
    if t == delta {
        return Ok(0.0);
    }
    let f = |s: f64| {
        let ratio = (delta / s).powf(alpha);
        (1.0 - ratio).max(0.0).sqrt()
    };
    fn simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64) -> f64 {
        (b - a) / 6.0 * (f(a) + 4.0 * f(0.5 * (a + b)) + f(b))
    }
    fn adaptive(
        f: &dyn Fn(f64) -> f64,
        a: f64,
        b: f64,
        whole: f64,
        tol: f64,
        depth: usize,
    ) -> f64 {
        let mid = 0.5 * (a + b);
        let left = simpson(f, a, mid);
        let right = simpson(f, mid, b);
        if depth == 0 || (left + right - whole).abs() <= 15.0 * tol {
            left + right + (left + right - whole) / 15.0
        } else {
            adaptive(f, a, mid, left, 0.5 * tol, depth - 1)
                + adaptive(f, mid, b, right, 0.5 * tol, depth - 1)
        }
    }
    let whole = simpson(&f, delta, t);
    Ok(adaptive(&f, delta, t, whole, 1e-10, 52))
}

/// Least-squares decay fit of `log w(r) + (N-1)/2 log r` against the model
/// abscissa over the window; the asymptotic laws predict slope 1.
pub fn fit_decay(gs: &GroundState, window: (f64, f64)) -> Result<DecayFit> {
    let n_dim = gs.grid().dim();
    let l = gs.grid().half_width();
    let p = gs.p();
    let delta = if p == 2.0 {
        Some(((4.0 - gs.alpha()) * gs.c_inf).powf(1.0 / gs.alpha()))
    } else {
        None
    };
    fit_decay_profile(
        &gs.profile,
        n_dim,
        l,
        window,
        delta,
        gs.alpha(),
    )
}

/// Profile-level fit shared with synthetic-data tests. `delta = Some(..)`
/// selects the p = 2 model (abscissa -Q(r)); `None` the p > 2 model (-r).
pub fn fit_decay_profile(
    profile: &[ProfilePoint],
    n_dim: usize,
    half_width: f64,
    window: (f64, f64),
    delta: Option<f64>,
    alpha: f64,
) -> Result<DecayFit> {
    let (r1, r2) = window;
    if !(r1 < r2) || r2 > 0.8 * half_width {
        return Err(Error::RangeViolation(format!(
            "window [{r1}, {r2}] must be increasing with r2 <= 0.8 L = {}",
            0.8 * half_width
        )));
    }
    if let Some(d) = delta {
        if r1 < d {
            return Err(Error::RangeViolation(format!(
                "p = 2 window must start at or above delta = {d}"
            )));
        }
    }
    let b = (n_dim as f64 - 1.0) / 2.0;
    let mut pts = Vec::new();
    for pt in profile {
        if pt.r < r1 || pt.r > r2 {
            continue;
        }
        if pt.mean < 1e-14 {
            continue; // noise floor
        }
        let y = pt.mean.ln() + b * pt.r.ln();
        let x = match delta {
            Some(d) => -q_integral(pt.r, d, alpha)?,
            None => -pt.r,
        };
        pts.push((x, y));
    }
    if pts.len() < 20 {
        return Err(Error::Degenerate(format!(
            "only {} usable profile samples in the fit window",
            pts.len()
        )));
    }
    let (slope, intercept, misfit) = least_squares(&pts);
    Ok(DecayFit {
        window,
        slope,
        intercept,
        misfit,
        samples: pts.len(),
        delta,
    })
}
