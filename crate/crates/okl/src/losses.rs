//! The activating-loss family: convex differentiable losses whose derivative
//! is Hölder continuous with exponent α ∈ (0, 1] and constant L, and whose
//! derivative at zero is negative.
//!
//! Built-ins: `least_squares` (α=1, L=2), `logistic` (α=1, L=1/4, |φ′| ≤ 1),
//! and the `qnorm` family (1−s)₊^q for q ∈ (1, 2] (α=q−1, L=q). Custom losses
//! can be supplied as closures together with their declared constants; the
//! verification battery is the authority on whether declared constants hold.
//!
//! Beyond evaluation and differentiation, this module exposes the analytic
//! facts the algorithms rely on: four smoothness/convexity inequalities as
//! signed residuals, the norm-growth constant C_φ of 1-activating losses, the
//! sup of the one-step quadratic growth term, and a logarithm linearization
//! inequality.

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};

type ScalarFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

#[derive(Clone)]
enum LossForm {
    LeastSquares,
    Logistic,
    QNorm,
    Custom { phi: ScalarFn, dphi: ScalarFn },
}

/// A convex differentiable loss with α-Hölder-continuous derivative.
///
/// Immutable after construction; safe to share across threads.
#[derive(Clone)]
pub struct ActivatingLoss {
    name: String,
    form: LossForm,
    alpha: f64,
    holder_l: f64,
    grad_bound: Option<f64>,
    stationary_s0: Option<f64>,
    q: Option<f64>,
}

impl fmt::Debug for ActivatingLoss {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ActivatingLoss")
            .field("name", &self.name)
            .field("alpha", &self.alpha)
            .field("holder_l", &self.holder_l)
            .field("grad_bound", &self.grad_bound)
            .field("stationary_s0", &self.stationary_s0)
            .field("q", &self.q)
            .finish()
    }
}

/// Signed residuals of the four smoothness/convexity inequalities; each is
/// nonnegative (up to floating-point slack) for a valid activating loss.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SmoothnessResiduals {
    /// Slack of the Hölder descent upper bound:
    /// L/(1+α)·|s−s̃|^{1+α} − [φ(s) − φ(s̃) − φ′(s̃)(s−s̃)].
    pub descent_upper: f64,
    /// Slack of the lower bound sharpening convexity by the gradient gap:
    /// φ(s̃) − φ(s) − φ′(s)(s̃−s) − αL^{−1/α}/(1+α)·|φ′(s)−φ′(s̃)|^{(1+α)/α}.
    pub gap_lower: f64,
    /// Slack of gradient co-coercivity:
    /// (φ′(s)−φ′(s̃))(s−s̃) − 2αL^{−1/α}/(1+α)·|φ′(s)−φ′(s̃)|^{(1+α)/α}.
    pub cocoercivity: f64,
    /// Slack of the self-bounding property of nonnegative losses:
    /// (1+α)^{1+1/α}/α·L^{1/α}·φ(s) − |φ′(s)|^{(1+α)/α}.
    pub self_bounding: f64,
}

impl SmoothnessResiduals {
    pub fn min(&self) -> f64 {
        self.descent_upper
            .min(self.gap_lower)
            .min(self.cocoercivity)
            .min(self.self_bounding)
    }
}

fn check_finite(value: f64, what: &str) -> Result<()> {
    if value.is_finite() {
        Ok(())
    } else {
        Err(Error::NonFinite(format!("{what}: {value}")))
    }
}

impl ActivatingLoss {
    /// φ(s) = (1−s)², α = 1, L = 2.
    pub fn least_squares() -> Self {
        ActivatingLoss {
            name: "least_squares".into(),
            form: LossForm::LeastSquares,
            alpha: 1.0,
            holder_l: 2.0,
            grad_bound: None,
            stationary_s0: Some(1.0),
            q: None,
        }
    }

    /// φ(s) = ln(1 + e^{−s}), α = 1, L = 1/4, |φ′| ≤ 1.
    pub fn logistic() -> Self {
        ActivatingLoss {
            name: "logistic".into(),
            form: LossForm::Logistic,
            alpha: 1.0,
            holder_l: 0.25,
            grad_bound: Some(1.0),
            stationary_s0: None,
            q: None,
        }
    }

    /// φ(s) = (1−s)₊^q for q ∈ (1, 2]; α = q−1, L = q.
    pub fn qnorm(q: f64) -> Result<Self> {
        if !(q > 1.0 && q <= 2.0) {
            return Err(Error::InvalidParameter(format!("qnorm exponent must lie in (1, 2], got {q}")));
        }
        Ok(ActivatingLoss {
            name: "qnorm".into(),
            form: LossForm::QNorm,
            alpha: q - 1.0,
            holder_l: q,
            grad_bound: None,
            stationary_s0: Some(1.0),
            q: Some(q),
        })
    }

    /// Selects a built-in loss by name; `q` applies to `qnorm` only.
    pub fn by_name(name: &str, q: Option<f64>) -> Result<Self> {
        match (name, q) {
            ("least_squares", None) => Ok(Self::least_squares()),
            ("logistic", None) => Ok(Self::logistic()),
            ("qnorm", Some(q)) => Self::qnorm(q),
            ("qnorm", None) => Err(Error::InvalidParameter("qnorm requires the exponent q".into())),
            (other, Some(_)) if other == "least_squares" || other == "logistic" => Err(
                Error::InvalidParameter(format!("loss '{other}' takes no exponent parameter")),
            ),
            (other, _) => Err(Error::UnsupportedLoss(other.into())),
        }
    }

    /// A user-supplied loss. The declared constants are trusted here and
    /// certified (or refuted) by the verification battery.
    pub fn custom(
        name: &str,
        alpha: f64,
        holder_l: f64,
        grad_bound: Option<f64>,
        stationary_s0: Option<f64>,
        phi: impl Fn(f64) -> f64 + Send + Sync + 'static,
        dphi: impl Fn(f64) -> f64 + Send + Sync + 'static,
    ) -> Result<Self> {
        if !(alpha > 0.0 && alpha <= 1.0) {
            return Err(Error::InvalidParameter(format!("alpha must lie in (0, 1], got {alpha}")));
        }
        if !(holder_l > 0.0 && holder_l.is_finite()) {
            return Err(Error::InvalidParameter(format!("holder_l must be positive, got {holder_l}")));
        }
        if dphi(0.0) >= 0.0 {
            return Err(Error::InvalidParameter(
                "an activating loss must have negative derivative at 0".into(),
            ));
        }
        Ok(ActivatingLoss {
            name: name.into(),
            form: LossForm::Custom { phi: Arc::new(phi), dphi: Arc::new(dphi) },
            alpha,
            holder_l,
            grad_bound,
            stationary_s0,
            q: None,
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    /// Hölder exponent α of the derivative.
    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    /// Hölder constant L of the derivative.
    pub fn holder_l(&self) -> f64 {
        self.holder_l
    }

    /// Uniform bound B on |φ′| when one exists.
    pub fn grad_bound(&self) -> Option<f64> {
        self.grad_bound
    }

    /// A point s₀ with φ′(s₀) = 0 when one exists.
    pub fn stationary_s0(&self) -> Option<f64> {
        self.stationary_s0
    }

    pub fn q(&self) -> Option<f64> {
        self.q
    }

    /// φ(s).
    pub fn eval(&self, s: f64) -> Result<f64> {
        check_finite(s, "loss argument")?;
        Ok(self.eval_unchecked(s))
    }

    pub(crate) fn eval_unchecked(&self, s: f64) -> f64 {
        match &self.form {
            LossForm::LeastSquares => (1.0 - s) * (1.0 - s),
            // ln(1 + e^{−s}), evaluated on the side that avoids overflow.
            LossForm::Logistic => {
                if s >= 0.0 {
                    (-s).exp().ln_1p()
                } else {
                    -s + s.exp().ln_1p()
                }
            }
            LossForm::QNorm => (1.0 - s).max(0.0).powf(self.q.unwrap()),
            LossForm::Custom { phi, .. } => phi(s),
        }
    }

    /// φ′(s).
    pub fn grad(&self, s: f64) -> Result<f64> {
        check_finite(s, "loss argument")?;
        Ok(self.grad_unchecked(s))
    }

    pub(crate) fn grad_unchecked(&self, s: f64) -> f64 {
        match &self.form {
            LossForm::LeastSquares => -2.0 * (1.0 - s),
            LossForm::Logistic => -1.0 / (1.0 + s.exp()),
            // One-sided derivatives agree at s = 1 because q − 1 > 0.
            LossForm::QNorm => {
                let q = self.q.unwrap();
                -q * (1.0 - s).max(0.0).powf(q - 1.0)
            }
            LossForm::Custom { dphi, .. } => dphi(s),
        }
    }

    /// The four inequality residuals at a pair of arguments; all must be
    /// nonnegative up to floating-point slack.
    pub fn smoothness_residuals(&self, s: f64, s_tilde: f64) -> Result<SmoothnessResiduals> {
        check_finite(s, "s")?;
        check_finite(s_tilde, "s_tilde")?;
        let alpha = self.alpha;
        let l = self.holder_l;
        let phi_s = self.eval_unchecked(s);
        let phi_st = self.eval_unchecked(s_tilde);
        let dphi_s = self.grad_unchecked(s);
        let dphi_st = self.grad_unchecked(s_tilde);
        let grad_gap = (dphi_s - dphi_st).abs();
        let gap_pow = grad_gap.powf((1.0 + alpha) / alpha);
        let l_root = l.powf(-1.0 / alpha);

        let descent_upper = l / (1.0 + alpha) * (s - s_tilde).abs().powf(1.0 + alpha)
            - (phi_s - phi_st - dphi_st * (s - s_tilde));
        let gap_lower =
            phi_st - phi_s - dphi_s * (s_tilde - s) - alpha * l_root / (1.0 + alpha) * gap_pow;
        let cocoercivity =
            (dphi_s - dphi_st) * (s - s_tilde) - 2.0 * alpha * l_root / (1.0 + alpha) * gap_pow;
        let self_bounding = (1.0 + alpha).powf(1.0 + 1.0 / alpha) / alpha
            * l.powf(1.0 / alpha)
            * phi_s
            - dphi_s.abs().powf((1.0 + alpha) / alpha);

        Ok(SmoothnessResiduals { descent_upper, gap_lower, cocoercivity, self_bounding })
    }

    /// The norm-growth constant C_φ of a 1-activating loss: √L·s₀ when a
    /// stationary point s₀ exists, √(2φ(0) + 2φ′(0)²/L) otherwise.
    pub fn norm_growth_constant(&self) -> Result<f64> {
        if self.alpha != 1.0 {
            return Err(Error::UnsupportedLoss(format!(
                "the norm-growth constant is defined for 1-activating losses, got alpha = {}",
                self.alpha
            )));
        }
        Ok(match self.stationary_s0 {
            Some(s0) => self.holder_l.sqrt() * s0,
            None => {
                let phi0 = self.eval_unchecked(0.0);
                let dphi0 = self.grad_unchecked(0.0);
                (2.0 * phi0 + 2.0 * dphi0 * dphi0 / self.holder_l).sqrt()
            }
        })
    }

    /// Largest admissible step·κ̃² product for this loss, 1/(4L).
    pub fn max_step_kappa_sq(&self) -> f64 {
        1.0 / (4.0 * self.holder_l)
    }

    /// Numerical sup over s of the one-step squared-norm growth term
    /// 4·φ′(s)²·(γκ̃²) − 2·φ′(s)·s, for an admissible γκ̃² ≤ 1/(4L).
    ///
    /// Evaluated on a dense grid over [−50, 50] followed by golden-section
    /// refinement around the grid argmax; the objective falls off on both
    /// sides for admissible steps, so the bounded grid suffices at test
    /// tolerance. The result never exceeds `norm_growth_constant()²` by more
    /// than grid error.
    pub fn step_growth_sup(&self, step_kappa_sq: f64) -> Result<f64> {
        if self.alpha != 1.0 {
            return Err(Error::UnsupportedLoss(format!(
                "the step-growth sup is defined for 1-activating losses, got alpha = {}",
                self.alpha
            )));
        }
        if !step_kappa_sq.is_finite() || step_kappa_sq < 0.0 {
            return Err(Error::InvalidParameter(format!(
                "step_kappa_sq must be a nonnegative real, got {step_kappa_sq}"
            )));
        }
        if step_kappa_sq > self.max_step_kappa_sq() {
            return Err(Error::Precondition(format!(
                "step_kappa_sq = {step_kappa_sq} exceeds 1/(4L) = {}",
                self.max_step_kappa_sq()
            )));
        }

        let objective = |s: f64| {
            let d = self.grad_unchecked(s);
            4.0 * d * d * step_kappa_sq - 2.0 * d * s
        };

        const LO: f64 = -50.0;
        const HI: f64 = 50.0;
        const N: usize = 100_000;
        let step = (HI - LO) / (N - 1) as f64;
        let mut best = f64::NEG_INFINITY;
        let mut best_idx = 0usize;
        for i in 0..N {
            let v = objective(LO + i as f64 * step);
            if v > best {
                best = v;
                best_idx = i;
            }
        }

        // Golden-section refinement within one grid step of the argmax.
        let mut a = (LO + best_idx.saturating_sub(1) as f64 * step).max(LO);
        let mut b = (LO + (best_idx + 1).min(N - 1) as f64 * step).min(HI);
        let inv_phi = (5.0f64.sqrt() - 1.0) / 2.0;
        let mut x1 = b - inv_phi * (b - a);
        let mut x2 = a + inv_phi * (b - a);
        let mut f1 = objective(x1);
        let mut f2 = objective(x2);
        for _ in 0..200 {
            if b - a < 1e-14 {
                break;
            }
            if f1 < f2 {
                a = x1;
                x1 = x2;
                f1 = f2;
                x2 = a + inv_phi * (b - a);
                f2 = objective(x2);
            } else {
                b = x2;
                x2 = x1;
                f2 = f1;
                x1 = b - inv_phi * (b - a);
                f1 = objective(x1);
            }
        }
        Ok(best.max(f1).max(f2))
    }
}

/// Logarithm linearization: for x, ν, a > 0 returns the pair
/// (a·ln x, ν·x + a·ln(a/(ν·e))); the first entry never exceeds the second.
pub fn log_linearization_bound(x: f64, nu: f64, a: f64) -> Result<(f64, f64)> {
    for (v, what) in [(x, "x"), (nu, "nu"), (a, "a")] {
        if !(v > 0.0 && v.is_finite()) {
            return Err(Error::InvalidParameter(format!("{what} must be strictly positive, got {v}")));
        }
    }
    let lhs = a * x.ln();
    let rhs = nu * x + a * (a / (nu * std::f64::consts::E)).ln();
    Ok((lhs, rhs))
}

/// The verification battery behind `verify-loss`: certifies the declared
/// constants of a loss by randomized checks at the shipped tolerances.
pub mod verify {
    use super::*;
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    pub const GRAD_TOL: f64 = 1e-5;
    pub const GRAD_STEP: f64 = 1e-6;
    pub const HOLDER_SLACK: f64 = 1e-9;
    pub const RESIDUAL_SLACK: f64 = 1e-9;
    pub const CONVEXITY_SLACK: f64 = 1e-9;
    pub const STEP_SUP_SLACK: f64 = 1e-6;
    pub const LOG_LIN_SLACK: f64 = 1e-12;
    pub const SAMPLE_RANGE: f64 = 10.0;

    #[derive(Debug, Clone)]
    pub struct Check {
        pub name: String,
        pub passed: bool,
        /// Signed margin: how far inside (positive) or outside (negative)
        /// the tolerance the worst sample landed.
        pub margin: f64,
        pub detail: String,
    }

    #[derive(Debug, Clone)]
    pub struct BatteryReport {
        pub loss_name: String,
        pub checks: Vec<Check>,
    }

    impl BatteryReport {
        pub fn passed(&self) -> bool {
            self.checks.iter().all(|c| c.passed)
        }
    }

    /// Worst relative error of φ′ against a central finite difference of φ
    /// over `n` uniform samples of [−10, 10].
    pub fn gradient_consistency_worst(loss: &ActivatingLoss, n: usize, seed: u64) -> f64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut worst: f64 = 0.0;
        for _ in 0..n {
            let s: f64 = rng.random_range(-SAMPLE_RANGE..SAMPLE_RANGE);
            let g = loss.grad_unchecked(s);
            let fd = (loss.eval_unchecked(s + GRAD_STEP) - loss.eval_unchecked(s - GRAD_STEP))
                / (2.0 * GRAD_STEP);
            worst = worst.max((g - fd).abs() / g.abs().max(1.0));
        }
        worst
    }

    /// Worst violation of |φ′(s) − φ′(s̃)| ≤ L·|s−s̃|^α over `n` random pairs
    /// (positive means the certificate failed by that much).
    pub fn holder_violation_worst(loss: &ActivatingLoss, n: usize, seed: u64) -> f64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut worst = f64::NEG_INFINITY;
        for _ in 0..n {
            let s: f64 = rng.random_range(-SAMPLE_RANGE..SAMPLE_RANGE);
            let t: f64 = rng.random_range(-SAMPLE_RANGE..SAMPLE_RANGE);
            let lhs = (loss.grad_unchecked(s) - loss.grad_unchecked(t)).abs();
            let rhs = loss.holder_l() * (s - t).abs().powf(loss.alpha());
            worst = worst.max(lhs - rhs);
        }
        worst
    }

    /// Minimum over `n` random pairs of the four smoothness residuals.
    pub fn smoothness_residuals_min(loss: &ActivatingLoss, n: usize, seed: u64) -> f64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut min = f64::INFINITY;
        for _ in 0..n {
            let s: f64 = rng.random_range(-SAMPLE_RANGE..SAMPLE_RANGE);
            let t: f64 = rng.random_range(-SAMPLE_RANGE..SAMPLE_RANGE);
            let r = loss.smoothness_residuals(s, t).expect("finite samples");
            min = min.min(r.min());
        }
        min
    }

    /// Worst violation of convexity φ(λs + (1−λ)s̃) ≤ λφ(s) + (1−λ)φ(s̃)
    /// over `n` random triples.
    pub fn convexity_violation_worst(loss: &ActivatingLoss, n: usize, seed: u64) -> f64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut worst = f64::NEG_INFINITY;
        for _ in 0..n {
            let s: f64 = rng.random_range(-SAMPLE_RANGE..SAMPLE_RANGE);
            let t: f64 = rng.random_range(-SAMPLE_RANGE..SAMPLE_RANGE);
            let lam: f64 = rng.random_range(0.0..1.0);
            let lhs = loss.eval_unchecked(lam * s + (1.0 - lam) * t);
            let rhs = lam * loss.eval_unchecked(s) + (1.0 - lam) * loss.eval_unchecked(t);
            worst = worst.max(lhs - rhs);
        }
        worst
    }

    /// For 1-activating losses: worst excess of the step-growth sup over C_φ²
    /// across `n` random admissible step values (including the boundary).
    pub fn step_sup_excess_worst(loss: &ActivatingLoss, n: usize, seed: u64) -> Result<f64> {
        let cap = loss.norm_growth_constant()?;
        let cap_sq = cap * cap;
        let max_step = loss.max_step_kappa_sq();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut worst = f64::NEG_INFINITY;
        for i in 0..n {
            let step = if i == 0 { max_step } else { rng.random_range(0.0..max_step) };
            worst = worst.max(loss.step_growth_sup(step)? - cap_sq);
        }
        Ok(worst)
    }

    /// Worst violation of the logarithm linearization inequality over a
    /// log-uniform grid of (x, ν, a) ∈ [10⁻³, 10³]³ with `per_axis` points.
    pub fn log_linearization_violation_worst(per_axis: usize) -> f64 {
        let grid: Vec<f64> = (0..per_axis)
            .map(|i| 10f64.powf(-3.0 + 6.0 * i as f64 / (per_axis - 1) as f64))
            .collect();
        let mut worst = f64::NEG_INFINITY;
        for &x in &grid {
            for &nu in &grid {
                for &a in &grid {
                    let (lhs, rhs) = log_linearization_bound(x, nu, a).expect("positive grid");
                    worst = worst.max(lhs - rhs);
                }
            }
        }
        worst
    }

    /// Runs the full certification battery for one loss.
    pub fn run_battery(loss: &ActivatingLoss, n: usize, seed: u64) -> BatteryReport {
        let mut checks = Vec::new();

        let dphi0 = loss.grad_unchecked(0.0);
        checks.push(Check {
            name: "negative derivative at zero".into(),
            passed: dphi0 < 0.0,
            margin: -dphi0,
            detail: format!("phi'(0) = {dphi0}"),
        });

        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
        let mut min_phi = f64::INFINITY;
        let mut max_abs_grad = f64::NEG_INFINITY;
        let mut grid_all_negative = true;
        for _ in 0..n {
            let s: f64 = rng.random_range(-SAMPLE_RANGE..SAMPLE_RANGE);
            min_phi = min_phi.min(loss.eval_unchecked(s));
            let g = loss.grad_unchecked(s);
            max_abs_grad = max_abs_grad.max(g.abs());
            if g >= 0.0 {
                grid_all_negative = false;
            }
        }
        checks.push(Check {
            name: "nonnegativity".into(),
            passed: min_phi >= 0.0,
            margin: min_phi,
            detail: format!("min phi on samples = {min_phi}"),
        });

        // Exactly one of the two C_phi branches must apply: a declared
        // stationary point, or a derivative negative on the whole grid.
        let branch_ok = loss.stationary_s0().is_some() != grid_all_negative;
        checks.push(Check {
            name: "stationary-point branch".into(),
            passed: branch_ok,
            margin: if branch_ok { 0.0 } else { -1.0 },
            detail: format!(
                "declared s0 = {:?}, derivative negative on grid = {grid_all_negative}",
                loss.stationary_s0()
            ),
        });
        if let Some(s0) = loss.stationary_s0() {
            let at_s0 = loss.grad_unchecked(s0);
            checks.push(Check {
                name: "stationary point has zero derivative".into(),
                passed: at_s0.abs() <= 1e-12,
                margin: 1e-12 - at_s0.abs(),
                detail: format!("phi'({s0}) = {at_s0}"),
            });
        }
        if let Some(b) = loss.grad_bound() {
            checks.push(Check {
                name: "gradient bound".into(),
                passed: max_abs_grad <= b,
                margin: b - max_abs_grad,
                detail: format!("max |phi'| on samples = {max_abs_grad}, declared bound = {b}"),
            });
        }

        let grad_worst = gradient_consistency_worst(loss, n, seed);
        checks.push(Check {
            name: "gradient matches central finite difference".into(),
            passed: grad_worst <= GRAD_TOL,
            margin: GRAD_TOL - grad_worst,
            detail: format!("worst relative error = {grad_worst:.3e}"),
        });

        let holder_worst = holder_violation_worst(loss, n, seed.wrapping_add(1));
        checks.push(Check {
            name: "Hölder certificate for (alpha, L)".into(),
            passed: holder_worst <= HOLDER_SLACK,
            margin: HOLDER_SLACK - holder_worst,
            detail: format!("worst violation = {holder_worst:.3e}"),
        });

        let residual_min = smoothness_residuals_min(loss, n, seed.wrapping_add(2));
        checks.push(Check {
            name: "smoothness inequality residuals".into(),
            passed: residual_min >= -RESIDUAL_SLACK,
            margin: residual_min + RESIDUAL_SLACK,
            detail: format!("minimum residual = {residual_min:.3e}"),
        });

        let convexity_worst = convexity_violation_worst(loss, n, seed.wrapping_add(3));
        checks.push(Check {
            name: "convexity".into(),
            passed: convexity_worst <= CONVEXITY_SLACK,
            margin: CONVEXITY_SLACK - convexity_worst,
            detail: format!("worst violation = {convexity_worst:.3e}"),
        });

        if loss.alpha() == 1.0 {
            match step_sup_excess_worst(loss, 100, seed.wrapping_add(4)) {
                Ok(excess) => checks.push(Check {
                    name: "step-growth sup bounded by C_phi^2".into(),
                    passed: excess <= STEP_SUP_SLACK,
                    margin: STEP_SUP_SLACK - excess,
                    detail: format!("worst excess over C_phi^2 = {excess:.3e}"),
                }),
                Err(e) => checks.push(Check {
                    name: "step-growth sup bounded by C_phi^2".into(),
                    passed: false,
                    margin: -1.0,
                    detail: format!("bound evaluation failed: {e}"),
                }),
            }
        }

        BatteryReport { loss_name: loss.name().to_string(), checks }
    }
}
