//! Explicit test-function constructions: the escape sequence, the cutoff
//! ground state omega^S, the cutoff translates v_{R,z}, the signed orbit sums
//! theta(z) and sigma_{Rz}, and the annular-cutoff ratio of the
//! nonnegative-potential route, together with their energy diagnostics.

use crate::energy::ProblemParams;
use crate::error::{Error, Result};
use crate::grid::{Field, MAX_DIM};
use crate::groundstate::GroundState;
use crate::symmetry::norm;
use rayon::prelude::*;

/// Radial cutoff profiles. `Ball` and `EscapeBall` take a normalized radius,
/// `Annulus` an absolute one.
#[derive(Clone, Copy, Debug)]
pub enum CutoffVariant {
    /// 1 on t <= 1 - eps, 0 on t >= 1
    Ball { eps: f64 },
    /// 0 on r <= r0, 1 on r >= 2 r0
    Annulus { r0: f64 },
    /// 1 on t <= 1, 0 on t >= 2
    EscapeBall,
}

/// Radially symmetric cutoff with a cubic Hermite (C^1) transition.
#[derive(Clone, Copy, Debug)]
pub struct CutoffSpec {
    pub variant: CutoffVariant,
}

fn smooth_down(tau: f64) -> f64 {
    // 1 -> 0 as tau: 0 -> 1
    if tau <= 0.0 {
        1.0
    } else if tau >= 1.0 {
        0.0
    } else {
        1.0 - tau * tau * (3.0 - 2.0 * tau)
    }
}

impl CutoffSpec {
    pub fn ball(eps: f64) -> Result<CutoffSpec> {
        if !(eps > 0.0 && eps < 1.0) {
            return Err(Error::InvalidParameter(format!(
                "ball cutoff needs eps in (0,1), got {eps}"
            )));
        }
        Ok(CutoffSpec {
            variant: CutoffVariant::Ball { eps },
        })
    }

    pub fn annulus(r0: f64) -> Result<CutoffSpec> {
        if !(r0 > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "annulus cutoff needs r0 > 0, got {r0}"
            )));
        }
        Ok(CutoffSpec {
            variant: CutoffVariant::Annulus { r0 },
        })
    }

    pub fn escape_ball() -> CutoffSpec {
        CutoffSpec {
            variant: CutoffVariant::EscapeBall,
        }
    }

    /// Profile value; exact 0 and 1 outside the transition band.
    pub fn profile(&self, t: f64) -> f64 {
        match self.variant {
            CutoffVariant::Ball { eps } => smooth_down((t - (1.0 - eps)) / eps),
            CutoffVariant::EscapeBall => smooth_down(t - 1.0),
            CutoffVariant::Annulus { r0 } => 1.0 - smooth_down((t - r0) / r0),
        }
    }

    /// Samples the profile of |x| (Annulus) on a grid.
    pub fn field(&self, grid: crate::grid::Grid) -> Field {
        Field::from_radial(grid, |r| self.profile(r))
    }
}

/// Which construction produced a [`Construction`].
#[derive(Clone, Debug)]
pub enum ConstructionKind {
    EscapeSeq { x_n: Vec<f64>, r_n: f64 },
    Theta { z: Vec<f64>, r_scale: f64 },
    Sigma { z: Vec<f64>, r_scale: f64 },
    ChiSigma { z: Vec<f64>, r_scale: f64 },
}

/// The free parameters of the cutoff-translate construction, resolved from
/// (mu, lambda) when not supplied: nu is the midpoint of (lambda/mu, 1),
/// eps half its admissible bound (mu nu - lambda)/(mu nu + lambda), and
/// rho = (mu nu + lambda)/(4 nu).
#[derive(Clone, Copy, Debug)]
pub struct CutoffParams {
    pub lambda: f64,
    pub nu: f64,
    pub eps: f64,
    pub rho: f64,
}

impl CutoffParams {
    pub fn resolve(mu: f64, lambda: f64, nu: Option<f64>, eps: Option<f64>) -> Result<CutoffParams> {
        if !(lambda > 0.0 && lambda < mu) {
            return Err(Error::InvalidParameter(format!(
                "lambda = {lambda} must lie in (0, mu = {mu})"
            )));
        }
        let nu = nu.unwrap_or(0.5 * (lambda / mu + 1.0));
        if !(nu > lambda / mu && nu < 1.0) {
            return Err(Error::InvalidParameter(format!(
                "nu = {nu} outside (lambda/mu, 1) = ({}, 1)",
                lambda / mu
            )));
        }
        let eps_max = (mu * nu - lambda) / (mu * nu + lambda);
        let eps = eps.unwrap_or(0.5 * eps_max);
        if !(eps > 0.0 && eps < eps_max) {
            return Err(Error::InvalidParameter(format!(
                "eps = {eps} outside (0, {eps_max})"
            )));
        }
        let rho = (mu * nu + lambda) / (4.0 * nu);
        Ok(CutoffParams {
            lambda,
            nu,
            eps,
            rho,
        })
    }
}

/// Exactness diagnostics of the orbit-sum norm split.
#[derive(Clone, Copy, Debug)]
pub struct NormSplit {
    pub total: f64,
    pub ell_times_base: f64,
    /// the L^2 + potential part splits exactly over disjoint supports
    pub mass_pot_total: f64,
    pub mass_pot_ell_base: f64,
    /// the spectral gradient part splits only up to interpolation tails
    pub grad_total: f64,
    pub grad_ell_base: f64,
}

/// A built test function with its diagnostics.
#[derive(Clone, Debug)]
pub struct Construction {
    pub kind: ConstructionKind,
    pub field: Field,
    pub centers: Vec<Vec<f64>>,
    pub signs: Vec<i8>,
    pub support_radius: Option<f64>,
    pub support_disjoint: Option<bool>,
    pub cutoff: Option<CutoffParams>,
    pub norm_v_sq: f64,
    pub d_value: f64,
    /// J_V(pi(field))
    pub j_pi: f64,
    pub equivariance_error: f64,
    pub norm_split: Option<NormSplit>,
    /// (D(theta), ell * D(v_{R,z})) for the strict-inequality check
    pub d_split: Option<(f64, f64)>,
    pub eps_rz: Option<f64>,
    pub eps_hat_rz: Option<f64>,
    /// minimal-distance orbit pair difference and its length
    pub xi_z: Option<(Vec<f64>, f64)>,
}

fn mass_pot_part(params: &ProblemParams, u: &Field) -> f64 {
    params.norm_v_sq(u) - u.gradient_sq_integral()
}

/// `u_n(x) = chi((x - x_n)/r_n) omega(x - x_n)` with the escape cutoff
/// (1 inside the unit ball, 0 outside radius 2); `obstacle = None` caps
/// r_n so the cutoff never bites and the translate is returned whole.
pub fn escape_sequence(
    params: &ProblemParams,
    gs: &GroundState,
    x_n: &[f64],
    obstacle: Option<f64>,
) -> Result<Construction> {
    check_same_grid(params, gs)?;
    let grid = params.grid();
    let l = grid.half_width();
    let r_n = match obstacle {
        Some(rr) => {
            let dist = norm(x_n);
            if dist <= rr {
                return Err(Error::RangeViolation(format!(
                    "|x_n| = {dist} must exceed the obstacle radius {rr}"
                )));
            }
            let r_n = 0.5 * (dist - rr);
            if dist + r_n > 0.8 * l {
                return Err(Error::RangeViolation(format!(
                    "|x_n| + r_n = {} beyond 0.8 L = {}",
                    dist + r_n,
                    0.8 * l
                )));
            }
            r_n
        }
        None => 10.0 * grid.dim() as f64 * l, // cutoff saturated at 1
    };
    let chi = CutoffSpec::escape_ball();
    let n = grid.dim();
    let omega = &gs.field;
    let mut field = Field::zeros(grid);
    field
        .values_mut()
        .par_iter_mut()
        .enumerate()
        .for_each(|(flat, v)| {
            let mut x = [0.0; MAX_DIM];
            grid.coord_into(flat, &mut x);
            let mut d2 = 0.0;
            let mut y = [0.0; MAX_DIM];
            for a in 0..n {
                y[a] = x[a] - x_n[a];
                d2 += y[a] * y[a];
            }
            let t = d2.sqrt() / r_n;
            if t >= 2.0 {
                *v = 0.0;
            } else {
                *v = chi.profile(t) * omega.interpolate(&y[..n]);
            }
        });
    let field = field.apply_mask(params.mask());
    let b = params.j_v(&field)?;
    let j_pi = params.energy_on_nehari(&field)?;
    Ok(Construction {
        kind: ConstructionKind::EscapeSeq {
            x_n: x_n.to_vec(),
            r_n,
        },
        centers: vec![x_n.to_vec()],
        signs: vec![1],
        support_radius: Some(2.0 * r_n),
        support_disjoint: None,
        cutoff: None,
        norm_v_sq: b.norm_v_sq,
        d_value: b.d_value,
        j_pi,
        equivariance_error: f64::NAN,
        norm_split: None,
        d_split: None,
        eps_rz: None,
        eps_hat_rz: None,
        xi_z: None,
        field,
    })
}

/// Norm and D gaps of the cutoff ground state `omega^S = chi(x/S) omega`.
#[derive(Clone, Debug)]
pub struct OmegaSDiag {
    pub field: Field,
    pub norm_gap: f64,
    pub d_gap: f64,
}

pub fn omega_s(gs: &GroundState, s: f64, eps: f64) -> Result<OmegaSDiag> {
    let grid = gs.grid();
    // the gap diagnostics are meaningful for S <= 0.8 L; larger S (up to full
    // saturation of the cutoff over the box corners) is still admitted
    if !(s > 0.0) || s > 3.0 * (grid.dim() as f64).sqrt() * grid.half_width() {
        return Err(Error::RangeViolation(format!("cutoff radius S = {s}")));
    }
    let chi = CutoffSpec::ball(eps)?;
    let omega = &gs.field;
    let mut field = Field::zeros(grid);
    field
        .values_mut()
        .par_iter_mut()
        .enumerate()
        .for_each(|(flat, v)| {
            let r = grid.radius_sq(flat).sqrt();
            *v = chi.profile(r / s) * omega.values()[flat];
        });
    let h1 = |u: &Field| u.gradient_sq_integral() + u.norm_l2_sq();
    let norm_gap = (h1(omega) - h1(&field)).abs();
    let p = gs.p();
    let kernel = gs.params().kernel();
    let d_gap = (kernel.d_energy(omega, p)? - kernel.d_energy(&field, p)?).abs();
    Ok(OmegaSDiag {
        field,
        norm_gap,
        d_gap,
    })
}

/// The cutoff translate `v_{R,z}(x) = chi(|x - Rz| / (rho R)) omega(x - Rz)`,
/// supported exactly in the closed ball of radius rho R about Rz.
pub fn v_rz(gs: &GroundState, z: &[f64], r_scale: f64, cp: &CutoffParams) -> Field {
    let grid = gs.grid();
    let n = grid.dim();
    let chi = CutoffSpec {
        variant: CutoffVariant::Ball { eps: cp.eps },
    };
    let support = cp.rho * r_scale;
    let omega = &gs.field;
    let mut field = Field::zeros(grid);
    field
        .values_mut()
        .par_iter_mut()
        .enumerate()
        .for_each(|(flat, v)| {
            let mut x = [0.0; MAX_DIM];
            grid.coord_into(flat, &mut x);
            let mut d2 = 0.0;
            let mut y = [0.0; MAX_DIM];
            for a in 0..n {
                y[a] = x[a] - r_scale * z[a];
                d2 += y[a] * y[a];
            }
            let d = d2.sqrt();
            if d >= support {
                *v = 0.0;
            } else {
                *v = chi.profile(d / support) * omega.interpolate(&y[..n]);
            }
        });
    field
}

struct SignedCenters {
    points: Vec<Vec<f64>>,
    signs: Vec<i8>,
    mu_orbit: f64,
}

fn signed_orbit(params: &ProblemParams, z: &[f64]) -> Result<SignedCenters> {
    let nz = norm(z);
    if (nz - 1.0).abs() > 1e-9 {
        return Err(Error::InvalidParameter(format!(
            "orbit base point must be a unit vector, |z| = {nz}"
        )));
    }
    let orbit = params.group().orbit_signed(z)?;
    if !orbit.signs_consistent {
        return Err(Error::ThetaUndefined(
            "two group elements carry this point to the same orbit point with \
             opposite phi-signs (z lies in Sigma_0)"
                .into(),
        ));
    }
    let mu_orbit = params.group().mu(z)?;
    Ok(SignedCenters {
        points: orbit.points,
        signs: orbit.signs,
        mu_orbit,
    })
}

/// `theta(z) = sum_{gz in Gamma z} phi(g) v_{R, gz}` with pairwise disjoint
/// supports.
pub fn theta(
    params: &ProblemParams,
    gs: &GroundState,
    z: &[f64],
    r_scale: f64,
    lambda: f64,
    nu: Option<f64>,
    eps: Option<f64>,
) -> Result<Construction> {
    check_same_grid(params, gs)?;
    let sc = signed_orbit(params, z)?;
    let cp = CutoffParams::resolve(sc.mu_orbit, lambda, nu, eps)?;
    let l = params.grid().half_width();
    if r_scale * sc.mu_orbit <= 2.0 * cp.rho * r_scale {
        return Err(Error::RangeViolation(
            "orbit translates would overlap: R mu <= 2 rho R".into(),
        ));
    }
    if r_scale * (1.0 + cp.rho) > 0.8 * l {
        return Err(Error::RangeViolation(format!(
            "R (1 + rho) = {} beyond 0.8 L = {}",
            r_scale * (1.0 + cp.rho),
            0.8 * l
        )));
    }
    if let Some(r0) = params.mask().obstacle_radius() {
        if r_scale * (1.0 - cp.rho) < r0 - 1e-9 {
            return Err(Error::RangeViolation(format!(
                "translate support reaches into the obstacle: R(1 - rho) = {} < {r0}",
                r_scale * (1.0 - cp.rho)
            )));
        }
    }

    let base = v_rz(gs, z, r_scale, &cp);
    let mut field = Field::zeros(params.grid());
    let mut overlap_count = vec![0u8; params.grid().len()];
    for (pt, &sign) in sc.points.iter().zip(&sc.signs) {
        let v = v_rz(gs, pt, r_scale, &cp);
        overlap_count
            .iter_mut()
            .zip(v.values())
            .for_each(|(c, &val)| {
                if val != 0.0 {
                    *c += 1;
                }
            });
        field = field.add(&v.scale(sign as f64));
    }
    let support_disjoint = overlap_count.iter().all(|&c| c <= 1);

    let ell = sc.points.len() as f64;
    let norm_total = params.norm_v_sq(&field);
    let norm_base = params.norm_v_sq(&base);
    let mass_pot_total = mass_pot_part(params, &field);
    let mass_pot_base = mass_pot_part(params, &base);
    let d_total = params.d_energy(&field)?;
    let d_base = params.d_energy(&base)?;
    let j_pi = params.energy_on_nehari(&field)?;
    let equivariance_error = params.group().equivariance_error(&field);

    Ok(Construction {
        kind: ConstructionKind::Theta {
            z: z.to_vec(),
            r_scale,
        },
        centers: sc.points,
        signs: sc.signs,
        support_radius: Some(cp.rho * r_scale),
        support_disjoint: Some(support_disjoint),
        cutoff: Some(cp),
        norm_v_sq: norm_total,
        d_value: d_total,
        j_pi,
        equivariance_error,
        norm_split: Some(NormSplit {
            total: norm_total,
            ell_times_base: ell * norm_base,
            mass_pot_total,
            mass_pot_ell_base: ell * mass_pot_base,
            grad_total: norm_total - mass_pot_total,
            grad_ell_base: ell * (norm_base - mass_pot_base),
        }),
        d_split: Some((d_total, ell * d_base)),
        eps_rz: None,
        eps_hat_rz: None,
        xi_z: None,
        field,
    })
}

/// `sigma_{Rz} = sum_{gz in Gamma z} phi(g) omega_{R gz}` (full translates)
/// with the interaction sums eps_{Rz} and eps-hat_{Rz}.
pub fn sigma(
    params: &ProblemParams,
    gs: &GroundState,
    z: &[f64],
    r_scale: f64,
) -> Result<Construction> {
    check_same_grid(params, gs)?;
    let l = params.grid().half_width();
    if !(r_scale > 0.0) || r_scale > 0.6 * l {
        return Err(Error::RangeViolation(format!(
            "R = {r_scale} outside (0, 0.6 L = {}]",
            0.6 * l
        )));
    }
    let sc = signed_orbit(params, z)?;
    let n = params.grid().dim();

    let mut field = Field::zeros(params.grid());
    for (pt, &sign) in sc.points.iter().zip(&sc.signs) {
        let shift: Vec<f64> = pt[..n].iter().map(|v| v * r_scale).collect();
        field = field.add(&gs.field.shift(&shift).scale(sign as f64));
    }

    // interaction sums over ordered pairs of distinct orbit points; I is a
    // function of the distance only (omega is radial), evaluated through the
    // radial profile so distances beyond the roll range are admissible
    let mut eps_rz = 0.0;
    let mut eps_hat = 0.0;
    let mut cache: Vec<(f64, f64)> = Vec::new();
    let mut xi: Option<(Vec<f64>, f64)> = None;
    for i in 0..sc.points.len() {
        for j in 0..sc.points.len() {
            if i == j {
                continue;
            }
            let d = crate::symmetry::dist(&sc.points[i], &sc.points[j]) * r_scale;
            let val = match cache.iter().find(|(dd, _)| (dd - d).abs() < 1e-9) {
                Some((_, v)) => *v,
                None => {
                    let v = gs.interaction_i_radial(d);
                    cache.push((d, v));
                    v
                }
            };
            if sc.signs[i] == sc.signs[j] {
                eps_rz += val;
            } else {
                eps_hat += val;
            }
            if xi.as_ref().map_or(true, |(_, best)| d < *best) {
                let diff: Vec<f64> = sc.points[i]
                    .iter()
                    .zip(&sc.points[j])
                    .map(|(a, b)| (a - b) * r_scale)
                    .collect();
                xi = Some((diff, d));
            }
        }
    }
    if params.group().is_trivial_phi() {
        eps_hat = 0.0;
    }

    let b = params.j_v(&field)?;
    let j_pi = params.energy_on_nehari(&field)?;
    let equivariance_error = params.group().equivariance_error(&field);
    Ok(Construction {
        kind: ConstructionKind::Sigma {
            z: z.to_vec(),
            r_scale,
        },
        centers: sc.points,
        signs: sc.signs,
        support_radius: None,
        support_disjoint: None,
        cutoff: None,
        norm_v_sq: b.norm_v_sq,
        d_value: b.d_value,
        j_pi,
        equivariance_error,
        norm_split: None,
        d_split: None,
        eps_rz: Some(eps_rz),
        eps_hat_rz: Some(eps_hat),
        xi_z: xi,
        field,
    })
}

/// Left-hand side, bound and margin of the annular-cutoff ratio test.
#[derive(Clone, Debug)]
pub struct RatioReport {
    pub construction: Construction,
    /// `|chi sigma|_V^2 / D(chi sigma)^{1/p}`
    pub ratio: f64,
    /// `(ell(Gamma) |omega|^2)^{(p-1)/p}`
    pub bound: f64,
    pub margin: f64,
    /// `J_V(pi(chi sigma))`
    pub j_pi: f64,
    /// `ell(Gamma) c_inf` on the same grid
    pub ell_c_inf: f64,
}

pub fn chi_sigma_ratio(
    params: &ProblemParams,
    gs: &GroundState,
    z: &[f64],
    r_scale: f64,
) -> Result<RatioReport> {
    let sig = sigma(params, gs, z, r_scale)?;
    let grid = params.grid();
    let field = match params.mask().obstacle_radius() {
        Some(r0) => {
            let chi = CutoffSpec::annulus(r0)?;
            let mut out = sig.field.clone();
            out.values_mut()
                .par_iter_mut()
                .enumerate()
                .for_each(|(flat, v)| {
                    *v *= chi.profile(grid.radius_sq(flat).sqrt());
                });
            out.apply_mask(params.mask())
        }
        None => sig.field.clone(),
    };
    let norm = params.norm_v_sq(&field);
    let d = params.d_energy(&field)?;
    if !(d > 0.0) {
        return Err(Error::Collapse);
    }
    let p = params.p();
    let ratio = norm / d.powf(1.0 / p);
    let ell = params.group().ell().value as f64;
    let omega_h1 = gs.field.gradient_sq_integral() + gs.field.norm_l2_sq();
    let bound = (ell * omega_h1).powf((p - 1.0) / p);
    let j_pi = (p - 1.0) / (2.0 * p) * ratio.powf(p / (p - 1.0));
    let mut construction = sig;
    construction.kind = ConstructionKind::ChiSigma {
        z: z.to_vec(),
        r_scale,
    };
    construction.field = field;
    Ok(RatioReport {
        ratio,
        bound,
        margin: bound - ratio,
        j_pi,
        ell_c_inf: ell * gs.c_inf,
        construction,
    })
}

/// Both cutoff inequalities of the norm/D comparison for `chi u`:
/// returns the slacks of
///   `|chi u|_V^2 <= |u|_V^2 - \int (chi Laplace chi) u^2` and
///   `D(chi u) >= D(u) - 2 \iint (1 - chi^p(x)) |u(x)|^p |u(y)|^p K`.
pub struct CutoffSlacks {
    pub norm_slack: f64,
    pub d_slack: f64,
    pub scale_norm: f64,
    pub scale_d: f64,
}

pub fn cutoff_inequalities(
    params: &ProblemParams,
    u: &Field,
    chi: &Field,
) -> Result<CutoffSlacks> {
    let p = params.p();
    let chi_u = chi.mul(u);
    let lhs1 = params.norm_v_sq(&chi_u);
    let chi_lap = chi.mul(&chi.laplacian());
    let corr1 = chi_lap.mul(u).dot_l2(u);
    let rhs1 = params.norm_v_sq(u) - corr1;

    let w = u.abs_pow(p);
    let conv = params.kernel().convolve(&w)?;
    let d_u = conv.dot_l2(&w);
    let one_minus_chip = chi.map(|c| 1.0 - c.abs().powf(p));
    let corr2 = 2.0 * one_minus_chip.mul(&w).dot_l2(&conv);
    let d_chi_u = params.d_energy(&chi_u)?;

    Ok(CutoffSlacks {
        norm_slack: rhs1 - lhs1,
        d_slack: d_chi_u - (d_u - corr2),
        scale_norm: rhs1.abs().max(lhs1.abs()),
        scale_d: d_u.abs().max(1e-300),
    })
}

/// sigma split into the two phi-cosets: (sum over Gz, sum over the gamma coset).
pub fn sigma_coset_split(
    params: &ProblemParams,
    gs: &GroundState,
    z: &[f64],
    r_scale: f64,
) -> Result<(Field, Field)> {
    let sc = signed_orbit(params, z)?;
    let n = params.grid().dim();
    let mut plus = Field::zeros(params.grid());
    let mut minus = Field::zeros(params.grid());
    for (pt, &sign) in sc.points.iter().zip(&sc.signs) {
        let shift: Vec<f64> = pt[..n].iter().map(|v| v * r_scale).collect();
        let t = gs.field.shift(&shift);
        if sign == 1 {
            plus = plus.add(&t);
        } else {
            minus = minus.add(&t);
        }
    }
    Ok((plus, minus))
}

/// The cross-coset interaction of the D expansion:
/// `\int (K * (|sigma^1|^p + |sigma^2|^p)) omega_{Rgz}^{p-1} omega_{Rhz}`
/// for a pair gz, hz with phi(g) != phi(h).
pub fn cross_coset_interaction(
    params: &ProblemParams,
    gs: &GroundState,
    z: &[f64],
    r_scale: f64,
) -> Result<f64> {
    let sc = signed_orbit(params, z)?;
    let (plus, minus) = sigma_coset_split(params, gs, z, r_scale)?;
    let p = params.p();
    let pow_sum = plus.abs_pow(p).add(&minus.abs_pow(p));
    let conv = params.kernel().convolve(&pow_sum)?;
    let n = params.grid().dim();
    let g_pt = sc
        .points
        .iter()
        .zip(&sc.signs)
        .find(|(_, &s)| s == 1)
        .map(|(pt, _)| pt.clone())
        .ok_or_else(|| Error::Degenerate("no +1 coset point".into()))?;
    let h_pt = sc
        .points
        .iter()
        .zip(&sc.signs)
        .find(|(_, &s)| s == -1)
        .map(|(pt, _)| pt.clone())
        .ok_or_else(|| Error::Degenerate("phi is trivial: no cross-coset pair".into()))?;
    let sg: Vec<f64> = g_pt[..n].iter().map(|v| v * r_scale).collect();
    let sh: Vec<f64> = h_pt[..n].iter().map(|v| v * r_scale).collect();
    let og = gs.field.shift(&sg);
    let oh = gs.field.shift(&sh);
    Ok(conv.mul(&og.abs_pow_signed(p)).dot_l2(&oh))
}

fn check_same_grid(params: &ProblemParams, gs: &GroundState) -> Result<()> {
    if params.grid() != gs.grid() {
        return Err(Error::GridMismatch(
            "ground state must live on the problem grid (resample it first)".into(),
        ));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{DomainMask, Grid};
    use crate::groundstate::{solve_limit, SolveLimitOptions};
    use crate::potential::Potential;
    use crate::symmetry::SymmetryGroup;
    use std::sync::Arc;
    use std::sync::OnceLock;

    fn gs_2d() -> &'static GroundState {
        static GS: OnceLock<GroundState> = OnceLock::new();
        GS.get_or_init(|| {
            let grid = Grid::new(2, 64, 16.0).unwrap();
            solve_limit(grid, 1.0, 2.0, &SolveLimitOptions::default()).unwrap()
        })
    }

    fn limit_params() -> Arc<ProblemParams> {
        let gs = gs_2d();
        Arc::new(ProblemParams::limit(gs.grid(), 1.0, 2.0).unwrap())
    }

    #[test]
    fn cutoff_profiles() {
        let ball = CutoffSpec::ball(0.25).unwrap();
        assert_eq!(ball.profile(0.6), 1.0);
        assert_eq!(ball.profile(0.75), 1.0);
        assert_eq!(ball.profile(1.0), 0.0);
        assert_eq!(ball.profile(1.4), 0.0);
        let mid = ball.profile(0.875);
        assert!((mid - 0.5).abs() < 1e-12);
        // monotone in the transition
        let mut prev = 1.0;
        for i in 0..=40 {
            let t = 0.75 + 0.25 * i as f64 / 40.0;
            let v = ball.profile(t);
            assert!(v <= prev + 1e-15 && (0.0..=1.0).contains(&v));
            prev = v;
        }

        let ann = CutoffSpec::annulus(1.0).unwrap();
        assert_eq!(ann.profile(0.5), 0.0);
        assert_eq!(ann.profile(1.0), 0.0);
        assert_eq!(ann.profile(2.0), 1.0);
        assert_eq!(ann.profile(3.0), 1.0);

        let esc = CutoffSpec::escape_ball();
        assert_eq!(esc.profile(0.3), 1.0);
        assert_eq!(esc.profile(1.0), 1.0);
        assert_eq!(esc.profile(2.0), 0.0);
    }

    #[test]
    fn escape_sequence_without_obstacle_returns_omega() {
        let gs = gs_2d();
        let params = limit_params();
        let c = escape_sequence(&params, gs, &[0.0, 0.0], None).unwrap();
        let diff = c.field.sub(&gs.field).linf() / gs.field.linf();
        assert!(diff <= 1e-12, "diff {diff}");
        let rel = (c.j_pi - gs.c_inf).abs() / gs.c_inf;
        assert!(rel <= 1e-10, "J vs c_inf: {rel}");
    }

    #[test]
    fn escape_sequence_vanishes_on_obstacle() {
        let gs = gs_2d();
        let grid = gs.grid();
        let mask = DomainMask::ball_complement(grid, 1.0).unwrap();
        let params = Arc::new(
            ProblemParams::new(
                grid,
                1.0,
                2.0,
                Potential::Zero,
                mask,
                Arc::new(SymmetryGroup::trivial(2)),
            )
            .unwrap(),
        );
        let c = escape_sequence(&params, gs, &[6.0, 0.0], Some(1.0)).unwrap();
        for (flat, &v) in c.field.values().iter().enumerate() {
            if grid.radius_sq(flat).sqrt() <= 1.0 {
                assert_eq!(v, 0.0);
            }
        }
        // range violations
        assert!(escape_sequence(&params, gs, &[0.5, 0.0], Some(1.0)).is_err());
        assert!(escape_sequence(&params, gs, &[14.0, 0.0], Some(1.0)).is_err());
    }

    #[test]
    fn omega_s_saturates() {
        let gs = gs_2d();
        let grid = gs.grid();
        let eps = 0.25;
        // (1 - eps) S beyond the farthest grid point: chi = 1 everywhere
        let s_full = 1.01 * (grid.dim() as f64).sqrt() * grid.half_width() / (1.0 - eps);
        let full = omega_s(gs, s_full, eps).unwrap();
        assert_eq!(full.field, gs.field);
        assert_eq!(full.norm_gap, 0.0);

        // at S = L the field only differs in the exponentially small corners
        let at_l = omega_s(gs, grid.half_width(), eps).unwrap();
        let diff = at_l.field.sub(&gs.field).linf() / gs.field.linf();
        assert!(diff < 1e-4, "diff {diff}");
    }

    #[test]
    fn omega_s_gaps_shrink_with_s() {
        let gs = gs_2d();
        let mut prev_norm = f64::INFINITY;
        let mut prev_d = f64::INFINITY;
        for s in [4.0, 6.0, 8.0] {
            let d = omega_s(gs, s, 0.25).unwrap();
            assert!(d.norm_gap < prev_norm, "norm gap not shrinking at S = {s}");
            assert!(d.d_gap < prev_d, "D gap not shrinking at S = {s}");
            prev_norm = d.norm_gap;
            prev_d = d.d_gap;
        }
    }

    #[test]
    fn theta_two_term_antipodal() {
        let gs = gs_2d();
        let grid = gs.grid();
        let params = Arc::new(
            ProblemParams::new(
                grid,
                1.0,
                2.0,
                Potential::ExpWell {
                    c0: 0.5,
                    lambda: 1.0,
                    r0: 0.0,
                },
                DomainMask::whole(grid),
                Arc::new(SymmetryGroup::antipodal(2, -1).unwrap()),
            )
            .unwrap(),
        );
        let c = theta(&params, gs, &[1.0, 0.0], 6.0, 1.0, None, None).unwrap();
        assert_eq!(c.centers.len(), 2);
        assert_eq!(c.support_disjoint, Some(true));
        // odd field: theta(-x) = -theta(x) on the grid
        assert!(c.equivariance_error <= 1e-10, "equiv {}", c.equivariance_error);

        let split = c.norm_split.unwrap();
        // the L^2 + potential part splits exactly over disjoint supports
        let mass_rel = (split.mass_pot_total - split.mass_pot_ell_base).abs()
            / split.mass_pot_total;
        assert!(mass_rel <= 1e-12, "mass/pot split off by {mass_rel}");
        // the spectral gradient part splits only up to the Gibbs tails of the
        // truncated supports (measured ~1e-4 at this resolution)
        let grad_rel =
            (split.grad_total - split.grad_ell_base).abs() / split.grad_total;
        assert!(grad_rel <= 5e-4, "gradient split off by {grad_rel}");

        // D(theta) > ell D(v) strictly (positive cross interactions)
        let (d_total, d_ell) = c.d_split.unwrap();
        assert!(d_total > d_ell, "D split {d_total} vs {d_ell}");

        // theta is a fixed point of the equivariant projection
        let proj = params.group().equivariant_project(&c.field);
        assert!(proj.sub(&c.field).linf() <= 1e-10 * c.field.linf());
    }

    #[test]
    fn theta_rejects_sigma0_points() {
        let gs = gs_2d();
        let grid = gs.grid();
        // reflection through W = span(e1) fixes z = e1; phi(gamma) = -1 makes
        // the signed sum ill-defined there
        let params = Arc::new(
            ProblemParams::new(
                grid,
                1.0,
                2.0,
                Potential::Zero,
                DomainMask::whole(grid),
                Arc::new(SymmetryGroup::reflection(2, 1, -1).unwrap()),
            )
            .unwrap(),
        );
        let err = theta(&params, gs, &[1.0, 0.0], 6.0, 1.0, None, None);
        assert!(matches!(err, Err(Error::ThetaUndefined(_))));
    }

    #[test]
    fn sigma_antipodal_diagnostics() {
        let gs = gs_2d();
        let grid = gs.grid();
        let params = Arc::new(
            ProblemParams::new(
                grid,
                1.0,
                2.0,
                Potential::Zero,
                DomainMask::whole(grid),
                Arc::new(SymmetryGroup::antipodal(2, -1).unwrap()),
            )
            .unwrap(),
        );
        let c = sigma(&params, gs, &[1.0, 0.0], 6.0).unwrap();
        assert_eq!(c.centers.len(), 2);
        assert!(c.equivariance_error <= 1e-10);
        // xi_z is the antipodal difference, length 2R
        let (_, xid) = c.xi_z.clone().unwrap();
        assert!((xid - 12.0).abs() < 1e-9);
        // both ordered cross pairs at distance 2R
        let eps_hat = c.eps_hat_rz.unwrap();
        let want = 2.0 * gs.interaction_i_radial(12.0);
        assert!((eps_hat - want).abs() <= 1e-12 * want.abs());
        // same-sign pairs absent for the antipodal epimorphism
        assert_eq!(c.eps_rz.unwrap(), 0.0);

        // range violation
        assert!(sigma(&params, gs, &[1.0, 0.0], 11.0).is_err());
    }

    #[test]
    fn sigma_with_trivial_phi_has_zero_eps_hat() {
        let gs = gs_2d();
        let grid = gs.grid();
        let params = Arc::new(
            ProblemParams::new(
                grid,
                1.0,
                2.0,
                Potential::Zero,
                DomainMask::whole(grid),
                Arc::new(SymmetryGroup::antipodal(2, 1).unwrap()),
            )
            .unwrap(),
        );
        let c = sigma(&params, gs, &[1.0, 0.0], 6.0).unwrap();
        assert_eq!(c.eps_hat_rz, Some(0.0));
        assert!(c.eps_rz.unwrap() > 0.0);
    }

    #[test]
    fn chi_sigma_trivial_case_reduces_to_omega_nehari_identity() {
        let gs = gs_2d();
        let params = limit_params();
        let rep = chi_sigma_ratio(&params, gs, &[1.0, 0.0], 0.0001).unwrap();
        // sigma with the trivial group is a single (tiny) shift of omega;
        // chi = 1; on the Nehari manifold the ratio is |omega|^{2(p-1)/p}
        let h1 = gs.field.gradient_sq_integral() + gs.field.norm_l2_sq();
        let want = h1.powf(0.5); // (p-1)/p = 1/2 at p = 2
        let rel = (rep.ratio - want).abs() / want;
        assert!(rel < 1e-6, "ratio {} vs {want}", rep.ratio);
        assert!((rep.bound - want).abs() / want < 1e-12);
    }

    #[test]
    fn cutoff_inequalities_hold_on_smooth_fields() {
        let gs = gs_2d();
        let grid = gs.grid();
        let params = limit_params();
        let chi_ann = CutoffSpec::annulus(1.0).unwrap().field(grid);
        let chi_ball = Field::from_radial(grid, |r| {
            CutoffSpec::ball(0.25).unwrap().profile(r / 8.0)
        });
        for (seed, chi) in [(1u64, &chi_ann), (2, &chi_ball), (3, &chi_ann)] {
            let u = Field::from_fn(grid, move |x| {
                let r2: f64 = x.iter().map(|v| v * v).sum();
                (-0.2 * r2).exp() * (1.0 + 0.3 * (seed as f64 + x[0]).sin())
            });
            let s = cutoff_inequalities(&params, &u, chi).unwrap();
            assert!(
                s.norm_slack >= -1e-10 * s.scale_norm,
                "norm slack {} (scale {})",
                s.norm_slack,
                s.scale_norm
            );
            assert!(
                s.d_slack >= -1e-10 * s.scale_d,
                "D slack {} (scale {})",
                s.d_slack,
                s.scale_d
            );
        }
    }
}
