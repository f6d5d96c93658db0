//! The functional `J_V(u) = 1/2 |u|_V^2 - 1/(2p) D(u)`, its strong-form
//! residual, the Nehari manifold, and the radial projection onto it.

use crate::error::{Error, Result};
use crate::grid::{DomainMask, Field, Grid};
use crate::potential::Potential;
use crate::riesz::RieszKernel;
use crate::symmetry::SymmetryGroup;
use std::sync::Arc;

/// Problem data `(N, alpha, p, V, Omega, Gamma, phi)` with `V_infty = 1`.
pub struct ProblemParams {
    grid: Grid,
    alpha: f64,
    p: f64,
    potential: Potential,
    v_field: Field,
    one_plus_v: Field,
    mask: DomainMask,
    group: Arc<SymmetryGroup>,
    kernel: Arc<RieszKernel>,
}

/// The additive pieces of one energy evaluation.
#[derive(Clone, Debug)]
pub struct EnergyBreakdown {
    /// `\int |grad u|^2`
    pub grad_part: f64,
    /// `\int (1 + V) u^2`
    pub pot_part: f64,
    /// `|u|_V^2 = grad_part + pot_part`
    pub norm_v_sq: f64,
    /// `D(u)`
    pub d_value: f64,
    /// `J_V(u)`
    pub j_value: f64,
    /// `|u|_V^2 - D(u)`
    pub nehari_defect: f64,
}

impl ProblemParams {
    pub fn new(
        grid: Grid,
        alpha: f64,
        p: f64,
        potential: Potential,
        mask: DomainMask,
        group: Arc<SymmetryGroup>,
    ) -> Result<ProblemParams> {
        let n = grid.dim() as f64;
        if !(alpha > 0.0 && alpha < n) {
            return Err(Error::InvalidParameter(format!(
                "alpha = {alpha} outside (0, {n})"
            )));
        }
        let p_upper = if n > 2.0 {
            (2.0 * n - alpha) / (n - 2.0)
        } else {
            f64::INFINITY
        };
        if !(p >= 2.0 && p < p_upper) {
            return Err(Error::InvalidParameter(format!(
                "p = {p} outside [2, {p_upper})"
            )));
        }
        if mask.grid() != grid {
            return Err(Error::GridMismatch("mask grid".into()));
        }
        if group.dim() != grid.dim() {
            return Err(Error::InvalidParameter(
                "group dimension does not match the grid".into(),
            ));
        }
        let v_field = potential.evaluate(grid)?;
        let one_plus_v = v_field.map(|v| 1.0 + v);
        if one_plus_v.min_value() <= 0.0 {
            return Err(Error::InvalidParameter(
                "condition (V0) fails: inf(1 + V) <= 0 on the grid".into(),
            ));
        }
        if !group.mask_invariant(&mask) {
            return Err(Error::InvalidParameter(
                "domain mask is not invariant under the symmetry group".into(),
            ));
        }
        if !potential.is_radial() {
            // sampled potentials must be group-invariant; radial ones are
            let proj = group.kernel_subgroup().equivariant_project(&v_field);
            if v_field.sub(&proj).linf() > 1e-8 * v_field.linf().max(1.0) {
                return Err(Error::InvalidParameter(
                    "sampled potential is not invariant under the group".into(),
                ));
            }
        }
        let kernel = Arc::new(RieszKernel::new(grid, alpha)?);
        Ok(ProblemParams {
            grid,
            alpha,
            p,
            potential,
            v_field,
            one_plus_v,
            mask,
            group,
            kernel,
        })
    }

    /// The limit problem: V = 0, Omega = R^N, trivial symmetry.
    pub fn limit(grid: Grid, alpha: f64, p: f64) -> Result<ProblemParams> {
        ProblemParams::new(
            grid,
            alpha,
            p,
            Potential::Zero,
            DomainMask::whole(grid),
            Arc::new(SymmetryGroup::trivial(grid.dim())),
        )
    }

    pub fn grid(&self) -> Grid {
        self.grid
    }
    pub fn alpha(&self) -> f64 {
        self.alpha
    }
    pub fn p(&self) -> f64 {
        self.p
    }
    pub fn potential(&self) -> &Potential {
        &self.potential
    }
    pub fn v_field(&self) -> &Field {
        &self.v_field
    }
    pub fn mask(&self) -> &DomainMask {
        &self.mask
    }
    pub fn group(&self) -> &Arc<SymmetryGroup> {
        &self.group
    }
    pub fn kernel(&self) -> &Arc<RieszKernel> {
        &self.kernel
    }

    /// `|u|_V^2 = \int |grad u|^2 + \int (1 + V) u^2`.
    pub fn norm_v_sq(&self, u: &Field) -> f64 {
        u.gradient_sq_integral() + self.pot_part(u)
    }

    fn pot_part(&self, u: &Field) -> f64 {
        u.mul(&self.one_plus_v).dot_l2(u)
    }

    /// V-scalar product `<a, b>_V`.
    pub fn inner_v(&self, a: &Field, b: &Field) -> f64 {
        a.gradient_inner(b) + a.mul(&self.one_plus_v).dot_l2(b)
    }

    /// `D(u)` through the shared kernel.
    pub fn d_energy(&self, u: &Field) -> Result<f64> {
        self.kernel.d_energy(u, self.p)
    }

    /// Full energy breakdown at `u`.
    pub fn j_v(&self, u: &Field) -> Result<EnergyBreakdown> {
        let grad_part = u.gradient_sq_integral();
        let pot_part = self.pot_part(u);
        let norm_v_sq = grad_part + pot_part;
        let d_value = self.d_energy(u)?;
        Ok(self.breakdown_from(grad_part, pot_part, norm_v_sq, d_value))
    }

    fn breakdown_from(
        &self,
        grad_part: f64,
        pot_part: f64,
        norm_v_sq: f64,
        d_value: f64,
    ) -> EnergyBreakdown {
        EnergyBreakdown {
            grad_part,
            pot_part,
            norm_v_sq,
            d_value,
            j_value: 0.5 * norm_v_sq - d_value / (2.0 * self.p),
            nehari_defect: norm_v_sq - d_value,
        }
    }

    /// Strong-form residual `(-Delta + 1 + V) u - (K * |u|^p)|u|^{p-2} u`,
    /// masked to Omega; pairs with v in L^2 as J_V'(u) v.
    pub fn residual(&self, u: &Field) -> Result<Field> {
        let conv = self.kernel.convolve(&u.abs_pow(self.p))?;
        Ok(self.residual_with_conv(u, &conv))
    }

    /// Residual reusing a precomputed `K * |u|^p`.
    pub fn residual_with_conv(&self, u: &Field, conv: &Field) -> Field {
        let linear = u.helmholtz_apply().add(&u.mul(&self.v_field));
        let nonlinear = conv.mul(&u.abs_pow_signed(self.p));
        linear.sub(&nonlinear).apply_mask(&self.mask)
    }

    /// `(-Delta + 1)^{-1} r`: the V-gradient direction up to the bounded
    /// perturbation V (exact for V = 0).
    pub fn precondition(&self, r: &Field) -> Field {
        r.helmholtz_solve()
    }

    /// Nehari scaling factor `t(u) = (|u|_V^2 / D(u))^{1/(2(p-1))}`.
    pub fn nehari_scale(&self, u: &Field) -> Result<f64> {
        let norm = self.norm_v_sq(u);
        if norm <= 0.0 || !norm.is_finite() {
            return Err(Error::ZeroField);
        }
        let d = self.d_energy(u)?;
        if d <= 0.0 || !d.is_finite() {
            return Err(Error::Collapse);
        }
        Ok((norm / d).powf(1.0 / (2.0 * (self.p - 1.0))))
    }

    /// Radial projection `pi(u) = t(u) u` onto the Nehari manifold.
    pub fn nehari_project(&self, u: &Field) -> Result<Field> {
        Ok(u.scale(self.nehari_scale(u)?))
    }

    /// `J_V(pi(u))` in closed form:
    /// `((p-1)/2p) (|u|_V^2 / D(u)^{1/p})^{p/(p-1)}`.
    pub fn energy_on_nehari(&self, u: &Field) -> Result<f64> {
        let norm = self.norm_v_sq(u);
        if norm <= 0.0 || !norm.is_finite() {
            return Err(Error::ZeroField);
        }
        let d = self.d_energy(u)?;
        if d <= 0.0 || !d.is_finite() {
            return Err(Error::Collapse);
        }
        Ok(self.energy_on_nehari_from(norm, d))
    }

    pub fn energy_on_nehari_from(&self, norm_v_sq: f64, d_value: f64) -> f64 {
        let p = self.p;
        (p - 1.0) / (2.0 * p) * (norm_v_sq / d_value.powf(1.0 / p)).powf(p / (p - 1.0))
    }

    /// Relative Nehari defect `| |u|_V^2 - D(u) | / |u|_V^2`.
    pub fn nehari_defect_rel(&self, u: &Field) -> Result<f64> {
        let b = self.j_v(u)?;
        Ok(b.nehari_defect.abs() / b.norm_v_sq)
    }

    /// Direction of the constraint gradient of `Phi(u) = |u|_V^2 - D(u)`
    /// in the (approximate) V-metric: `u - p (-Delta+1)^{-1} (K*|u|^p)|u|^{p-2}u`.
    pub fn constraint_normal(&self, u: &Field, conv: &Field) -> Field {
        let h = conv.mul(&u.abs_pow_signed(self.p)).apply_mask(&self.mask);
        u.sub(&self.precondition(&h).scale(self.p))
    }

    /// Removes from `g` its V-inner-product component along the Nehari
    /// constraint normal at `u` (which must lie on the manifold).
    pub fn tangent_project(&self, u: &Field, g: &Field) -> Result<Field> {
        let defect = self.nehari_defect_rel(u)?;
        if defect > 1e-8 {
            return Err(Error::RangeViolation(format!(
                "tangent projection needs a point on the Nehari manifold \
                 (relative defect {defect:.3e} > 1e-8)"
            )));
        }
        let conv = self.kernel.convolve(&u.abs_pow(self.p))?;
        self.tangent_project_with_conv(u, g, &conv)
    }

    pub fn tangent_project_with_conv(
        &self,
        u: &Field,
        g: &Field,
        conv: &Field,
    ) -> Result<Field> {
        let normal = self.constraint_normal(u, conv);
        let nn = self.inner_v(&normal, &normal);
        if !(nn > 0.0) || !nn.is_finite() {
            return Err(Error::Degenerate(
                "vanishing Nehari constraint gradient (cannot happen on the \
                 manifold for p >= 2)"
                    .into(),
            ));
        }
        let coef = self.inner_v(g, &normal) / nn;
        Ok(g.sub(&normal.scale(coef)))
    }

    /// Applies the equivariant projection and the domain mask.
    pub fn project_constraints(&self, u: &Field) -> Field {
        self.group.equivariant_project(u).apply_mask(&self.mask)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small_params() -> ProblemParams {
        let grid = Grid::new(2, 16, 4.0).unwrap();
        ProblemParams::limit(grid, 1.0, 2.0).unwrap()
    }

    fn gaussian(grid: Grid, w: f64) -> Field {
        Field::from_radial(grid, move |r| (-(r / w) * (r / w)).exp())
    }

    #[test]
    fn params_validation() {
        let grid = Grid::new(3, 16, 4.0).unwrap();
        assert!(ProblemParams::limit(grid, 0.0, 2.0).is_err());
        assert!(ProblemParams::limit(grid, 3.0, 2.0).is_err());
        assert!(ProblemParams::limit(grid, 1.0, 1.5).is_err());
        // p upper bound (2N - alpha)/(N - 2) = 5 for N=3, alpha=1
        assert!(ProblemParams::limit(grid, 1.0, 5.0).is_err());
        assert!(ProblemParams::limit(grid, 1.0, 4.9).is_ok());
        // (V0) violation rejected at construction
        let bad = ProblemParams::new(
            grid,
            1.0,
            2.0,
            Potential::ExpWell {
                c0: 1.5,
                lambda: 1.0,
                r0: 0.0,
            },
            DomainMask::whole(grid),
            Arc::new(SymmetryGroup::trivial(3)),
        );
        assert!(bad.is_err());
    }

    #[test]
    fn norm_examples() {
        let params = small_params();
        let grid = params.grid();
        assert_eq!(params.norm_v_sq(&Field::zeros(grid)), 0.0);

        // V = 0: equals the plain H^1 norm
        let u = gaussian(grid, 1.0);
        let h1 = u.gradient_sq_integral() + u.dot_l2(&u);
        let got = params.norm_v_sq(&u);
        assert!((got - h1).abs() <= 1e-12 * h1);

        // quadratic homogeneity
        let n1 = params.norm_v_sq(&u);
        let n2 = params.norm_v_sq(&u.scale(2.0));
        assert!((n2 - 4.0 * n1).abs() <= 1e-12 * n2);
    }

    #[test]
    fn breakdown_reconstructs_j() {
        let params = small_params();
        let u = gaussian(params.grid(), 1.3);
        let b = params.j_v(&u).unwrap();
        let j = 0.5 * b.norm_v_sq - b.d_value / (2.0 * params.p());
        assert!((b.j_value - j).abs() <= 1e-12 * j.abs().max(1.0));
        assert_eq!(params.j_v(&Field::zeros(params.grid())).unwrap().j_value, 0.0);
    }

    #[test]
    fn j_agrees_with_component_recomputation() {
        // random u, p = 2, alpha = 1, N = 3
        let grid = Grid::new(3, 16, 3.0).unwrap();
        let params = ProblemParams::limit(grid, 1.0, 2.0).unwrap();
        let u = Field::from_fn(grid, |x| {
            (x[0] * 1.1).sin() * (-(x[1] * x[1] + x[2] * x[2])).exp() + 0.1
        });
        let b = params.j_v(&u).unwrap();
        let indep = 0.5 * (u.gradient_sq_integral() + u.norm_l2_sq())
            - params.kernel().d_energy(&u, 2.0).unwrap() / 4.0;
        assert!((b.j_value - indep).abs() <= 1e-12 * indep.abs().max(1.0));
    }

    #[test]
    fn precondition_eigenmode_and_roundtrip() {
        let params = small_params();
        let grid = params.grid();
        let l = grid.half_width();
        let k = std::f64::consts::PI / l;
        let mode = Field::from_fn(grid, |x| (k * x[0]).sin());
        let pre = params.precondition(&mode);
        let want = 1.0 / (k * k + 1.0);
        let ratio = pre.values()[37] / mode.values()[37];
        assert!((ratio - want).abs() < 1e-12);

        assert_eq!(params.precondition(&Field::zeros(grid)), Field::zeros(grid));

        let r = gaussian(grid, 0.8);
        let round = params.precondition(&r).helmholtz_apply();
        assert!(round.sub(&r).linf() <= 1e-10 * r.linf());
    }

    #[test]
    fn nehari_projection_examples() {
        let params = small_params();
        let u = gaussian(params.grid(), 1.0);

        // pi(u) lands on the manifold
        let pu = params.nehari_project(&u).unwrap();
        let defect = params.nehari_defect_rel(&pu).unwrap();
        assert!(defect <= 1e-12, "defect {defect}");

        // projecting a manifold point changes nothing
        let t = params.nehari_scale(&pu).unwrap();
        assert!((t - 1.0).abs() <= 1e-12);

        // scale invariance pi(s u) = pi(u)
        let psu = params.nehari_project(&u.scale(5.0)).unwrap();
        assert!(psu.sub(&pu).linf() <= 1e-12 * pu.linf());

        // p = 2 arithmetic: |u|_V^2 = 4, D = 16 -> t = 1/2
        let norm = params.norm_v_sq(&u);
        let d = params.d_energy(&u).unwrap();
        let scaled = u.scale((4.0 / norm).sqrt());
        // now |scaled|_V^2 = 4; rescale D to 16 by scaling the whole field:
        // D(su) = s^4 D(u), |su|^2 = s^2 |u|^2; instead check the formula directly
        let t = params.nehari_scale(&scaled).unwrap();
        let d_scaled = d * (4.0 / norm) * (4.0 / norm);
        let want = (4.0 / d_scaled).powf(0.5);
        assert!((t - want).abs() <= 1e-12 * want);

        // errors
        assert!(params.nehari_project(&Field::zeros(params.grid())).is_err());
    }

    #[test]
    fn energy_on_nehari_matches_composition() {
        let params = small_params();
        let u = Field::from_fn(params.grid(), |x| {
            (-(x[0] * x[0] + 0.5 * x[1] * x[1])).exp() * (1.0 + 0.3 * x[0])
        });
        let closed = params.energy_on_nehari(&u).unwrap();
        let composed = params.j_v(&params.nehari_project(&u).unwrap()).unwrap();
        assert!((closed - composed.j_value).abs() <= 1e-12 * closed.abs());

        // scale invariance
        let scaled = params.energy_on_nehari(&u.scale(5.0)).unwrap();
        assert!((closed - scaled).abs() <= 1e-12 * closed.abs());

        // on the manifold the formula reduces to ((p-1)/2p)|u|_V^2
        let pu = params.nehari_project(&u).unwrap();
        let want = 0.25 * params.norm_v_sq(&pu); // (p-1)/2p = 1/4 at p = 2
        let got = params.energy_on_nehari(&pu).unwrap();
        assert!((got - want).abs() <= 1e-11 * want);
    }

    #[test]
    fn tangent_projection_examples() {
        let params = small_params();
        let u = params
            .nehari_project(&gaussian(params.grid(), 1.0))
            .unwrap();
        let conv = params.kernel().convolve(&u.abs_pow(2.0)).unwrap();
        let normal = params.constraint_normal(&u, &conv);

        // the normal direction is annihilated
        let pn = params.tangent_project(&u, &normal).unwrap();
        let nn = params.inner_v(&normal, &normal).sqrt();
        assert!(params.inner_v(&pn, &pn).sqrt() <= 1e-10 * nn);

        // a tangent vector is fixed, and the projector is idempotent
        let g = Field::from_fn(params.grid(), |x| {
            (-(x[0] - 0.4).powi(2) - x[1] * x[1]).exp()
        });
        let tg = params.tangent_project(&u, &g).unwrap();
        let tg2 = params.tangent_project(&u, &tg).unwrap();
        assert!(tg2.sub(&tg).linf() <= 1e-12 * tg.linf().max(1e-300));
        // orthogonality of the output to the normal
        let ip = params.inner_v(&tg, &normal).abs();
        let bound = 1e-10 * params.inner_v(&g, &g).sqrt() * nn;
        assert!(ip <= bound, "ip {ip} vs bound {bound}");

        // off-manifold points are rejected
        let off = u.scale(1.5);
        assert!(params.tangent_project(&off, &g).is_err());
    }

    #[test]
    fn j_is_gamma_invariant_for_grid_exact_groups() {
        let grid = Grid::new(2, 16, 4.0).unwrap();
        let group = Arc::new(SymmetryGroup::antipodal(2, -1).unwrap());
        let params = ProblemParams::new(
            grid,
            1.0,
            2.0,
            Potential::ExpBump { c0: 0.3, kappa: 1.5 },
            DomainMask::whole(grid),
            group.clone(),
        )
        .unwrap();
        let u = Field::from_fn(grid, |x| {
            (-(x[0] - 0.7).powi(2) - (x[1] + 0.2).powi(2)).exp()
        });
        let gu = group.element_field_action(1, &u); // the -I action
        let ju = params.j_v(&u).unwrap();
        let jgu = params.j_v(&gu).unwrap();
        assert!((ju.j_value - jgu.j_value).abs() <= 1e-10 * ju.j_value.abs().max(1.0));
        assert!((ju.d_value - jgu.d_value).abs() <= 1e-10 * ju.d_value.abs());
    }
}
