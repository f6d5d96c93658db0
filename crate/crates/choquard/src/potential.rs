//! Potential families and the decay-hypothesis checkers.
//!
//! V_infty is normalized to 1 throughout; the hypotheses compare decay rates
//! against the orbit metrics mu^G, mu_Gamma(Z), mu_G, mu^Gamma(Z).

use crate::error::{Error, Result};
use crate::grid::{Field, Grid};
use crate::symmetry::SymmetryGroup;

/// The potential V in `-Delta u + (1 + V(x)) u = ...`.
#[derive(Clone, Debug)]
pub enum Potential {
    Zero,
    /// `V(x) = -c0 e^{-lambda |x|}` for `|x| >= r0`, continued by the
    /// constant `-c0 e^{-lambda r0}` inside.
    ExpWell { c0: f64, lambda: f64, r0: f64 },
    /// `V(x) = c0 e^{-kappa |x|}`.
    ExpBump { c0: f64, kappa: f64 },
    Sampled(Field),
}

/// Outcome of one decay-hypothesis check.
#[derive(Clone, Debug)]
pub struct HypCheck {
    pub satisfied: bool,
    /// the orbit-metric bound the rate is compared against
    pub bound: f64,
    /// the potential's decay rate entering the comparison, when meaningful
    pub rate: Option<f64>,
    pub note: &'static str,
}

/// Per-hypothesis report for (V0)-(V4).
#[derive(Clone, Debug)]
pub struct HypothesesReport {
    pub v0: HypCheck,
    pub v1: HypCheck,
    pub v2: HypCheck,
    pub v3: HypCheck,
    pub v4: HypCheck,
}

impl Potential {
    pub fn validate(&self) -> Result<()> {
        match self {
            Potential::Zero | Potential::Sampled(_) => Ok(()),
            Potential::ExpWell { c0, lambda, r0 } => {
                if !(*c0 > 0.0 && *lambda > 0.0 && *r0 >= 0.0) {
                    return Err(Error::InvalidParameter(format!(
                        "exp_well needs c0 > 0, lambda > 0, r0 >= 0 (got {c0}, {lambda}, {r0})"
                    )));
                }
                Ok(())
            }
            Potential::ExpBump { c0, kappa } => {
                if !(*c0 > 0.0 && *kappa > 0.0) {
                    return Err(Error::InvalidParameter(format!(
                        "exp_bump needs c0 > 0, kappa > 0 (got {c0}, {kappa})"
                    )));
                }
                Ok(())
            }
        }
    }

    pub fn value_at_radius(&self, r: f64) -> f64 {
        match self {
            Potential::Zero => 0.0,
            Potential::ExpWell { c0, lambda, r0 } => -c0 * (-lambda * r.max(*r0)).exp(),
            Potential::ExpBump { c0, kappa } => c0 * (-kappa * r).exp(),
            Potential::Sampled(_) => f64::NAN,
        }
    }

    /// Pointwise samples of V on the grid.
    pub fn evaluate(&self, grid: Grid) -> Result<Field> {
        self.validate()?;
        match self {
            Potential::Zero => Ok(Field::zeros(grid)),
            Potential::ExpWell { .. } | Potential::ExpBump { .. } => {
                Ok(Field::from_radial(grid, |r| self.value_at_radius(r)))
            }
            Potential::Sampled(f) => {
                if f.grid() != grid {
                    return Err(Error::GridMismatch(
                        "sampled potential lives on a different grid".into(),
                    ));
                }
                Ok(f.clone())
            }
        }
    }

    pub fn is_radial(&self) -> bool {
        !matches!(self, Potential::Sampled(_))
    }

    /// Condition (V0): inf over the grid of 1 + V must be positive.
    pub fn check_v0(&self, grid: Grid) -> Result<HypCheck> {
        let field = self.evaluate(grid)?;
        let min = 1.0 + field.min_value();
        Ok(HypCheck {
            satisfied: min > 0.0,
            bound: min,
            rate: None,
            note: "inf(1+V) > 0",
        })
    }

    /// Checks the decay hypotheses against the group's orbit metrics.
    /// `zs` is the point sample standing in for Z in (V2)/(V4).
    pub fn check_hypotheses(
        &self,
        grid: Grid,
        group: &SymmetryGroup,
        zs: &[Vec<f64>],
    ) -> Result<HypothesesReport> {
        let v0 = self.check_v0(grid)?;
        let (_, mu_sup_g_sigma) = group.mu_bounds_on_sigma()?;
        let (mu_inf_g_sigma, _) = group.mu_bounds_on_sigma()?;
        let (mu_gamma_z, mu_sup_gamma_z) = group.mu_bounds_over(zs)?;

        let unsupported = |bound: f64| HypCheck {
            satisfied: false,
            bound,
            rate: None,
            note: "not derivable for this potential variant",
        };

        let (v1, v2, v3, v4) = match self {
            Potential::Zero => (
                HypCheck {
                    satisfied: false,
                    bound: mu_sup_g_sigma,
                    rate: None,
                    note: "V = 0 admits no strict negative envelope",
                },
                HypCheck {
                    satisfied: false,
                    bound: mu_gamma_z,
                    rate: None,
                    note: "V = 0 admits no strict negative envelope",
                },
                HypCheck {
                    satisfied: true,
                    bound: mu_inf_g_sigma,
                    rate: None,
                    note: "V = 0 is below any positive envelope",
                },
                HypCheck {
                    satisfied: true,
                    bound: mu_sup_gamma_z,
                    rate: None,
                    note: "V = 0 is below any positive envelope",
                },
            ),
            Potential::ExpWell { lambda, .. } => (
                HypCheck {
                    satisfied: *lambda > 0.0 && *lambda < mu_sup_g_sigma,
                    bound: mu_sup_g_sigma,
                    rate: Some(*lambda),
                    note: "lambda in (0, mu^G)",
                },
                HypCheck {
                    satisfied: *lambda > 0.0 && *lambda < mu_gamma_z,
                    bound: mu_gamma_z,
                    rate: Some(*lambda),
                    note: "lambda in (0, mu_Gamma(Z))",
                },
                HypCheck {
                    satisfied: true,
                    bound: mu_inf_g_sigma,
                    rate: None,
                    note: "V <= 0 is below any positive envelope",
                },
                HypCheck {
                    satisfied: true,
                    bound: mu_sup_gamma_z,
                    rate: None,
                    note: "V <= 0 is below any positive envelope",
                },
            ),
            Potential::ExpBump { kappa, .. } => (
                HypCheck {
                    satisfied: false,
                    bound: mu_sup_g_sigma,
                    rate: None,
                    note: "V > 0 admits no negative envelope",
                },
                HypCheck {
                    satisfied: false,
                    bound: mu_gamma_z,
                    rate: None,
                    note: "V > 0 admits no negative envelope",
                },
                HypCheck {
                    satisfied: *kappa > mu_inf_g_sigma,
                    bound: mu_inf_g_sigma,
                    rate: Some(*kappa),
                    note: "kappa > mu_G",
                },
                HypCheck {
                    satisfied: *kappa > mu_sup_gamma_z,
                    bound: mu_sup_gamma_z,
                    rate: Some(*kappa),
                    note: "kappa > mu^Gamma(Z)",
                },
            ),
            Potential::Sampled(_) => (
                unsupported(mu_sup_g_sigma),
                unsupported(mu_gamma_z),
                unsupported(mu_inf_g_sigma),
                unsupported(mu_sup_gamma_z),
            ),
        };
        Ok(HypothesesReport { v0, v1, v2, v3, v4 })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::symmetry::SymmetryGroup;

    fn grid3() -> Grid {
        Grid::new(3, 16, 4.0).unwrap()
    }

    #[test]
    fn evaluate_examples() {
        let g = grid3();
        assert_eq!(Potential::Zero.evaluate(g).unwrap(), Field::zeros(g));

        let bump = Potential::ExpBump { c0: 1.0, kappa: 2.0 };
        let f = bump.evaluate(g).unwrap();
        let idx = g.encode(&[8, 8, 8]); // the origin
        assert!((f.values()[idx] - 1.0).abs() < 1e-14);

        let well = Potential::ExpWell {
            c0: 0.5,
            lambda: 1.0,
            r0: 0.0,
        };
        let r = std::f64::consts::LN_2;
        assert!((well.value_at_radius(r) + 0.25).abs() < 1e-14);
    }

    #[test]
    fn well_fields_nonpositive_bump_fields_positive() {
        let g = grid3();
        let well = Potential::ExpWell {
            c0: 0.5,
            lambda: 1.0,
            r0: 0.5,
        };
        let f = well.evaluate(g).unwrap();
        assert!(f.max_value() <= 0.0);
        let bump = Potential::ExpBump { c0: 0.3, kappa: 1.5 };
        let f = bump.evaluate(g).unwrap();
        assert!(f.min_value() > 0.0);
    }

    #[test]
    fn v0_fails_exactly_when_well_too_deep() {
        let g = grid3();
        let ok = Potential::ExpWell {
            c0: 0.9,
            lambda: 1.0,
            r0: 0.0,
        };
        assert!(ok.check_v0(g).unwrap().satisfied);
        let bad = Potential::ExpWell {
            c0: 1.0,
            lambda: 1.0,
            r0: 0.0,
        };
        assert!(!bad.check_v0(g).unwrap().satisfied);
    }

    #[test]
    fn hypothesis_examples() {
        let g = grid3();
        // (V1): lambda = 1 < mu^G = 2 for Gamma = {+-I}, phi = 1
        let anti = SymmetryGroup::antipodal(3, 1).unwrap();
        let zs: Vec<Vec<f64>> = vec![vec![1.0, 0.0, 0.0]];
        let well = Potential::ExpWell {
            c0: 0.5,
            lambda: 1.0,
            r0: 0.0,
        };
        let rep = well.check_hypotheses(g, &anti, &zs).unwrap();
        assert!(rep.v1.satisfied);
        assert!((rep.v1.bound - 2.0).abs() < 1e-9);

        // (V3): kappa = 1.9 < mu_G = 2 violates it
        let bump = Potential::ExpBump { c0: 1.0, kappa: 1.9 };
        let rep = bump.check_hypotheses(g, &anti, &zs).unwrap();
        assert!(!rep.v3.satisfied);

        // (V4): kappa = 1.3 > mu^Gamma(S^3) = |e^{i pi/3} - 1| = 1
        let g4 = Grid::new(4, 16, 4.0).unwrap();
        let ex3 = SymmetryGroup::example3(3, 1).unwrap();
        let sphere: Vec<Vec<f64>> = ex3.sphere_sample().into_iter().take(300).collect();
        let bump = Potential::ExpBump { c0: 1.0, kappa: 1.3 };
        let rep = bump.check_hypotheses(g4, &ex3, &sphere).unwrap();
        assert!(rep.v4.satisfied, "bound {}", rep.v4.bound);
        assert!((rep.v4.bound - 1.0).abs() < 1e-9);
    }

    #[test]
    fn radial_potentials_are_group_invariant() {
        let g = grid3();
        let anti = SymmetryGroup::antipodal(3, -1).unwrap();
        let bump = Potential::ExpBump { c0: 1.0, kappa: 1.0 };
        let f = bump.evaluate(g).unwrap();
        // project with |phi| = 1 via the kernel subgroup of the trivial-phi copy
        let plain = SymmetryGroup::antipodal(3, 1).unwrap();
        let proj = plain.equivariant_project(&f);
        assert!(f.sub(&proj).linf() <= 1e-10);
        let _ = anti;
    }
}
