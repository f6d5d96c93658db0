//! Standalone randomized checks of the algebraic inequalities used by the
//! energy expansions: the signed-sum power bounds, the product-of-sums
//! bounds, and the ratio bound psi(t) <= a^{1-beta} - c0 t.

use crate::error::{Error, Result};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Trial plan for the randomized inequality checks.
#[derive(Clone, Debug)]
pub struct RandomTrialSpec {
    pub trials: usize,
    pub tuple_size: usize,
    pub exponent: f64,
    pub seed: u64,
    pub slack_tol: f64,
}

impl Default for RandomTrialSpec {
    fn default() -> Self {
        RandomTrialSpec {
            trials: 10_000,
            tuple_size: 3,
            exponent: 2.0,
            seed: 0xC0FFEE,
            slack_tol: 1e-12,
        }
    }
}

impl RandomTrialSpec {
    fn validate(&self) -> Result<()> {
        if self.tuple_size < 1 {
            return Err(Error::InvalidParameter("tuple size must be >= 1".into()));
        }
        if self.exponent < 2.0 {
            return Err(Error::InvalidParameter(format!(
                "exponent p = {} must be >= 2",
                self.exponent
            )));
        }
        Ok(())
    }
}

/// Outcome of a randomized inequality suite.
#[derive(Clone, Debug)]
pub struct LemmaReport {
    pub passed: bool,
    pub violations: usize,
    /// most negative slack seen (nonnegative slack everywhere means the
    /// inequality held with room)
    pub worst_slack: f64,
    pub trials: usize,
    /// number of trials with |slack| <= 1e-14 (detected equality cases)
    pub equalities: usize,
}

fn draw(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.gen_range(0.0..10.0)).collect()
}

fn summarize(slacks: impl Iterator<Item = f64>, tol: f64) -> LemmaReport {
    let mut worst = f64::INFINITY;
    let mut violations = 0;
    let mut equalities = 0;
    let mut trials = 0;
    for s in slacks {
        trials += 1;
        worst = worst.min(s);
        if s < -tol {
            violations += 1;
        }
        if s.abs() <= 1e-14 {
            equalities += 1;
        }
    }
    LemmaReport {
        passed: violations == 0,
        violations,
        worst_slack: worst,
        trials,
        equalities,
    }
}

/// Signed-sum power bounds:
/// (i)  (sum a_i)^p >= sum a_i^p + (p-1) sum_{i != k} a_i^{p-1} a_k,
/// (ii) |a - b|^p >= a^p + b^p - p (a^{p-1} b + a b^{p-1}),
/// both for nonnegative entries and p >= 2. The slack is normalized by the
/// magnitude of the sides.
pub fn check_l0(spec: &RandomTrialSpec) -> Result<LemmaReport> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let p = spec.exponent;
    let n = spec.tuple_size;
    let mut slacks = Vec::with_capacity(2 * spec.trials);
    for _ in 0..spec.trials {
        let a = draw(&mut rng, n);
        let total: f64 = a.iter().sum();
        let lhs = total.powf(p);
        let mut rhs: f64 = a.iter().map(|&x| x.powf(p)).sum();
        for i in 0..n {
            for k in 0..n {
                if i != k {
                    rhs += (p - 1.0) * a[i].powf(p - 1.0) * a[k];
                }
            }
        }
        let scale = lhs.abs().max(rhs.abs()).max(1.0);
        slacks.push((lhs - rhs) / scale);

        let (x, y) = (a[0], a[n - 1]);
        let lhs2 = (x - y).abs().powf(p);
        let rhs2 = x.powf(p) + y.powf(p) - p * (x.powf(p - 1.0) * y + x * y.powf(p - 1.0));
        let scale2 = lhs2.abs().max(rhs2.abs()).max(1.0);
        slacks.push((lhs2 - rhs2) / scale2);
    }
    Ok(summarize(slacks.into_iter(), spec.slack_tol))
}

/// Product-of-sums bounds, with `A = sum a_i` etc.:
/// first  A^p B^p >= sum a_i^p b_i^p
///                 + (p-1)(sum_{j != m} a_j^p b_j^{p-1} b_m + sum_{i != k} b_i^p a_i^{p-1} a_k),
/// second the same at p = 2 with prefactor 2,
/// third  |A - A~|^p |B - B~|^p >= A^p B^p + A~^p B~^p
///                 - p n^{p-1} (B^p + B~^p) [ (sum a_i^{p-1}) A~ + (sum a~_i^{p-1}) A ]
///                 - p n^{p-1} (A^p + A~^p) [ (sum b_i^{p-1}) B~ + (sum b~_i^{p-1}) B ].
pub fn check_l1(spec: &RandomTrialSpec) -> Result<LemmaReport> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed.wrapping_add(1));
    let n = spec.tuple_size;
    let mut slacks = Vec::with_capacity(3 * spec.trials);

    let cross = |a: &[f64], b: &[f64], p: f64, w: f64| -> f64 {
        let mut acc = 0.0;
        for j in 0..a.len() {
            for m in 0..a.len() {
                if j != m {
                    acc += a[j].powf(p) * b[j].powf(p - 1.0) * b[m];
                }
            }
        }
        w * acc
    };

    for _ in 0..spec.trials {
        let p = spec.exponent;
        let a = draw(&mut rng, n);
        let b = draw(&mut rng, n);
        let at = draw(&mut rng, n);
        let bt = draw(&mut rng, n);
        let (sa, sb): (f64, f64) = (a.iter().sum(), b.iter().sum());
        let (sat, sbt): (f64, f64) = (at.iter().sum(), bt.iter().sum());

        // first inequality at the spec exponent
        {
            let lhs = sa.powf(p) * sb.powf(p);
            let diag: f64 = a
                .iter()
                .zip(&b)
                .map(|(&x, &y)| x.powf(p) * y.powf(p))
                .sum();
            let rhs = diag + cross(&a, &b, p, p - 1.0) + cross(&b, &a, p, p - 1.0);
            let scale = lhs.abs().max(rhs.abs()).max(1.0);
            slacks.push((lhs - rhs) / scale);
        }

        // second inequality is the p = 2 specialization
        {
            let lhs = sa * sa * sb * sb;
            let diag: f64 = a.iter().zip(&b).map(|(&x, &y)| x * x * y * y).sum();
            let rhs = diag + cross(&a, &b, 2.0, 2.0) + cross(&b, &a, 2.0, 2.0);
            let scale = lhs.abs().max(rhs.abs()).max(1.0);
            slacks.push((lhs - rhs) / scale);
        }

        // third inequality (the signed product expansion)
        {
            let lhs = (sa - sat).abs().powf(p) * (sb - sbt).abs().powf(p);
            let npow = (n as f64).powf(p - 1.0);
            let pa: f64 = a.iter().map(|&x| x.powf(p - 1.0)).sum();
            let pat: f64 = at.iter().map(|&x| x.powf(p - 1.0)).sum();
            let pb: f64 = b.iter().map(|&x| x.powf(p - 1.0)).sum();
            let pbt: f64 = bt.iter().map(|&x| x.powf(p - 1.0)).sum();
            let rhs = sa.powf(p) * sb.powf(p) + sat.powf(p) * sbt.powf(p)
                - p * npow * (sb.powf(p) + sbt.powf(p)) * (pa * sat + pat * sa)
                - p * npow * (sa.powf(p) + sat.powf(p)) * (pb * sbt + pbt * sb);
            let scale = lhs.abs().max(rhs.abs()).max(1.0);
            slacks.push((lhs - rhs) / scale);
        }
    }
    Ok(summarize(slacks.into_iter(), spec.slack_tol))
}

/// Concrete stand-ins for the o(t) slots of the ratio bound.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SmallTerm {
    Zero,
    /// +t^2
    PlusTSquared,
    /// -t^2
    MinusTSquared,
}

impl SmallTerm {
    pub fn eval(&self, t: f64) -> f64 {
        match self {
            SmallTerm::Zero => 0.0,
            SmallTerm::PlusTSquared => t * t,
            SmallTerm::MinusTSquared => -t * t,
        }
    }
}

/// Result of sampling `psi(t) = (a + t + o1(t)) / (a + b t + o2(t))^beta`.
#[derive(Clone, Debug)]
pub struct RazonReport {
    /// false when the hypothesis b beta > 1 fails to produce a negative
    /// one-sided slope at 0
    pub applicable: bool,
    pub passed: bool,
    pub slope_at_zero: f64,
    pub c0: f64,
    pub t0: f64,
    pub samples_checked: usize,
}

/// Finds c0, t0 > 0 with `psi(t) <= a^{1-beta} - c0 t` on (0, t0) by direct
/// sampling; c0 is taken as half the empirical one-sided slope.
pub fn check_razon(
    a: f64,
    beta: f64,
    b: f64,
    o1: SmallTerm,
    o2: SmallTerm,
    samples: usize,
) -> Result<RazonReport> {
    if !(a > 0.0) || !(beta > 0.0 && beta < 1.0) || samples < 8 {
        return Err(Error::InvalidParameter(format!(
            "need a > 0, beta in (0,1), samples >= 8 (got a = {a}, beta = {beta})"
        )));
    }
    let psi = |t: f64| (a + t + o1.eval(t)) / (a + b * t + o2.eval(t)).powf(beta);
    let cap = a.powf(1.0 - beta);

    // one-sided slope from a small sample
    let t_small = 1e-9 * a;
    let slope = (psi(t_small) - cap) / t_small;
    if slope >= -1e-9 {
        return Ok(RazonReport {
            applicable: false,
            passed: false,
            slope_at_zero: slope,
            c0: 0.0,
            t0: 0.0,
            samples_checked: 0,
        });
    }
    let c0 = 0.5 * slope.abs();

    // scan a log grid and take the largest prefix satisfying the bound
    let t_max = 2.0 * a;
    let t_min = 1e-8 * a;
    let ratio = (t_max / t_min).powf(1.0 / (samples as f64 - 1.0));
    let mut t0 = 0.0;
    let mut checked = 0;
    let mut t = t_min;
    for _ in 0..samples {
        if psi(t) <= cap - c0 * t + 1e-15 * cap {
            t0 = t;
            checked += 1;
        } else {
            break;
        }
        t *= ratio;
    }
    Ok(RazonReport {
        applicable: true,
        passed: t0 > 0.0 && checked >= 8,
        slope_at_zero: slope,
        c0,
        t0,
        samples_checked: checked,
    })
}
