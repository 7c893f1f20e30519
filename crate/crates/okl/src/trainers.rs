//! The two online algorithms and everything around a single run: polynomial
//! step schedules with admissibility classification, per-iteration norm
//! envelopes, trajectory logging, and the stochastic update rules themselves.
//!
//! The pointwise rule starts from the zero hypothesis and, on example
//! (x_t, y_t) with step γ_t, appends the section −γ_t·φ′(y_t·g_t(x_t))·y_t
//! at center x_t.
//!
//! The pairwise rule starts from zero, consumes the first example as pure
//! history, and from t = 2 on appends, for every past example z_j, the
//! section −(γ_t/(t−1))·φ′((y_t−y_j)·f_t(x_t,x_j))·(y_t−y_j) at center
//! (x_t, x_j). Terms with y_t = y_j are exactly zero and are skipped.
//! Evaluating f_t against the whole history through the expansion would cost
//! O(t³) per step, so the trainer keeps a Gram cache over the seen inputs and
//! contracts the coefficient table against it, which is O(t²) per step and
//! exact up to summation order; the replay tests pin it against a from-scratch
//! recomputation of the update rule.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hypothesis::DualExpansion;
use crate::kernels::{Kernel, PairKernel, Point};
use crate::losses::ActivatingLoss;

/// Slack allowed when checking the deterministic norm envelope per iteration.
pub const ENVELOPE_SLACK: f64 = 1e-8;

/// Default cap on pairwise run length; the O(T²) memory and O(T³) work make
/// longer runs a deliberate choice (`force` overrides).
pub const DEFAULT_MAX_PAIRWISE_T: u64 = 5000;

/// A labeled example with y ∈ {−1, +1}.
#[derive(Debug, Clone, PartialEq)]
pub struct Example {
    pub x: Point,
    pub y: f64,
}

impl Example {
    pub fn new(x: Point, y: f64) -> Result<Self> {
        if y != 1.0 && y != -1.0 {
            return Err(Error::Label(y));
        }
        Ok(Example { x, y })
    }
}

// ---------------------------------------------------------------------------
// Step schedules and admissibility
// ---------------------------------------------------------------------------

/// Polynomial step sizes γ_t = c·t^{−θ} with c > 0 and θ ∈ (0, 1).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StepSchedule {
    c: f64,
    theta: f64,
}

impl StepSchedule {
    pub fn new(c: f64, theta: f64) -> Result<Self> {
        if !(c > 0.0 && c.is_finite()) {
            return Err(Error::InvalidParameter(format!("step constant c must be positive, got {c}")));
        }
        if !(theta > 0.0 && theta < 1.0) {
            return Err(Error::InvalidParameter(format!("theta must lie in (0, 1), got {theta}")));
        }
        Ok(StepSchedule { c, theta })
    }

    pub fn c(&self) -> f64 {
        self.c
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    /// γ_t for t ≥ 1.
    pub fn gamma(&self, t: u64) -> f64 {
        debug_assert!(t >= 1);
        self.c * (t as f64).powf(-self.theta)
    }

    /// Σ_{j=from}^{to} γ_j, zero when the range is empty.
    pub fn gamma_sum(&self, from: u64, to: u64) -> f64 {
        (from.max(1)..=to).map(|t| self.gamma(t)).sum()
    }

    /// Σ_{j=1}^{t} γ_j^{1+α}.
    pub fn power_partial_sum(&self, alpha: f64, t: u64) -> f64 {
        let p = 1.0 + alpha;
        (1..=t).map(|j| self.gamma(j).powf(p)).sum()
    }

    /// Closed-form cap 2c^{1+α}/(θ(1+α)−1) dominating every partial sum
    /// Σγ_j^{1+α}; requires θ(1+α) > 1.
    pub fn power_sum_bound(&self, alpha: f64) -> Result<f64> {
        let p = 1.0 + alpha;
        if self.theta * p <= 1.0 {
            return Err(Error::Precondition(format!(
                "theta*(1+alpha) = {} must exceed 1 for the power sum to converge",
                self.theta * p
            )));
        }
        Ok(2.0 * self.c.powf(p) / (self.theta * p - 1.0))
    }
}

/// Classification of a (schedule, loss, kernel) triple against the step-size
/// conditions under which the convergence guarantees hold.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdmissibilityReport {
    pub alpha: f64,
    pub c: f64,
    pub theta: f64,
    /// Σγ_t^{1+α} < ∞, i.e. θ(1+α) > 1.
    pub power_sum_finite: bool,
    /// Σγ_t = ∞, i.e. θ ≤ 1 (always true for polynomial schedules here).
    pub step_sum_diverges: bool,
    /// θ ∈ (1/(1+α), 1): the regime with an explicit pointwise rate.
    pub pointwise_rate_valid: bool,
    /// θ ∈ (1/2, 1): the regime with an explicit pairwise rate.
    pub pairwise_rate_valid: bool,
    /// c·κ̃² ≤ 1/(4L), the pairwise step-size cap; None without a pair kernel.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pairwise_step_ok: Option<bool>,
    /// min(αθ/2, 1−θ), the pointwise rate exponent.
    pub pointwise_exponent: f64,
    /// The pairwise guarantees are proven for 1-activating losses only; a
    /// configuration with α < 1 runs, but outside the proven regime.
    pub pairwise_proven_regime: bool,
}

impl AdmissibilityReport {
    /// min(θ/2 − 1/4 − δ/2, 1−θ−δ): the pairwise rate exponent, defined for
    /// θ ∈ (1/2, 1) and δ ∈ (0, min(θ − 1/2, 1 − θ)).
    pub fn pairwise_exponent(&self, delta: f64) -> Result<f64> {
        pairwise_exponent(self.theta, delta)
    }

    /// min(θ/4 − δ/2, 1−θ−δ): the improved pairwise exponent under a
    /// uniformly bounded gradient, for δ ∈ (0, min(θ/4, 1 − θ)).
    pub fn pairwise_exponent_bounded_grad(&self, delta: f64) -> Result<f64> {
        pairwise_exponent_bounded_grad(self.theta, delta)
    }
}

pub(crate) fn pairwise_exponent(theta: f64, delta: f64) -> Result<f64> {
    if !(theta > 0.5 && theta < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "pairwise exponent requires theta in (1/2, 1), got {theta}"
        )));
    }
    let cap = (theta - 0.5).min(1.0 - theta);
    if !(delta > 0.0 && delta < cap) {
        return Err(Error::InvalidParameter(format!(
            "delta must lie in (0, {cap}), got {delta}"
        )));
    }
    Ok((theta / 2.0 - 0.25 - delta / 2.0).min(1.0 - theta - delta))
}

pub(crate) fn pairwise_exponent_bounded_grad(theta: f64, delta: f64) -> Result<f64> {
    if !(theta > 0.5 && theta < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "pairwise exponent requires theta in (1/2, 1), got {theta}"
        )));
    }
    let cap = (theta / 4.0).min(1.0 - theta);
    if !(delta > 0.0 && delta < cap) {
        return Err(Error::InvalidParameter(format!(
            "delta must lie in (0, {cap}), got {delta}"
        )));
    }
    Ok((theta / 4.0 - delta / 2.0).min(1.0 - theta - delta))
}

/// Classifies a schedule against the admissibility conditions for `loss`,
/// and against the pairwise step cap when a pair kernel is given.
pub fn validate_schedule(
    schedule: &StepSchedule,
    loss: &ActivatingLoss,
    pair_kernel: Option<&PairKernel>,
) -> AdmissibilityReport {
    let alpha = loss.alpha();
    let theta = schedule.theta();
    let c = schedule.c();
    AdmissibilityReport {
        alpha,
        c,
        theta,
        power_sum_finite: theta * (1.0 + alpha) > 1.0,
        step_sum_diverges: theta <= 1.0,
        pointwise_rate_valid: theta > 1.0 / (1.0 + alpha) && theta < 1.0,
        pairwise_rate_valid: theta > 0.5 && theta < 1.0,
        pairwise_step_ok: pair_kernel.map(|pk| {
            let kt = pk.kappa();
            c * kt * kt <= 1.0 / (4.0 * loss.holder_l())
        }),
        pointwise_exponent: (alpha * theta / 2.0).min(1.0 - theta),
        pairwise_proven_regime: alpha == 1.0,
    }
}

// ---------------------------------------------------------------------------
// Norm envelopes
// ---------------------------------------------------------------------------

/// The deterministic envelope C_φ·√(Σ_{j=2}^t γ_j) bounding the pairwise
/// iterate norm ‖f_{t+1}‖ whenever γ_t·κ̃² ≤ 1/(4L) throughout. Zero for
/// t < 2 (empty-sum convention). Requires a 1-activating loss.
pub fn norm_envelope(schedule: &StepSchedule, loss: &ActivatingLoss, t: u64) -> Result<f64> {
    let c_phi = loss.norm_growth_constant()?;
    Ok(c_phi * schedule.gamma_sum(2, t).sqrt())
}

/// Closed-form relaxation (√c·C_φ/√(1−θ))·t^{(1−θ)/2} dominating the exact
/// envelope for all t ≥ 2.
pub fn norm_envelope_closed_form(
    schedule: &StepSchedule,
    loss: &ActivatingLoss,
    t: u64,
) -> Result<f64> {
    let c_phi = loss.norm_growth_constant()?;
    let theta = schedule.theta();
    Ok(schedule.c().sqrt() * c_phi / (1.0 - theta).sqrt()
        * (t as f64).powf((1.0 - theta) / 2.0))
}

// ---------------------------------------------------------------------------
// Trainer states
// ---------------------------------------------------------------------------

/// State of the pointwise algorithm: the hypothesis g (zero at start) and the
/// number of completed steps.
#[derive(Debug, Clone)]
pub struct PointwiseState {
    hypothesis: DualExpansion<Kernel>,
    steps: u64,
}

impl PointwiseState {
    pub fn new(kernel: Kernel) -> Self {
        PointwiseState { hypothesis: DualExpansion::zero(kernel), steps: 0 }
    }

    pub fn hypothesis(&self) -> &DualExpansion<Kernel> {
        &self.hypothesis
    }

    pub fn into_hypothesis(self) -> DualExpansion<Kernel> {
        self.hypothesis
    }

    /// Completed steps; the next step consumes example z_{steps+1}.
    pub fn steps(&self) -> u64 {
        self.steps
    }

    /// One update: appends −γ·φ′(y·g(x))·y at center x.
    pub fn step(&mut self, z: &Example, gamma: f64, loss: &ActivatingLoss) -> Result<()> {
        if z.y != 1.0 && z.y != -1.0 {
            return Err(Error::Label(z.y));
        }
        if !(gamma > 0.0 && gamma.is_finite()) {
            return Err(Error::InvalidParameter(format!("step size must be positive, got {gamma}")));
        }
        let gx = self.hypothesis.evaluate(&z.x)?;
        let weight = -gamma * loss.grad(z.y * gx)? * z.y;
        self.hypothesis.add_scaled_section_with_value(z.x.clone(), weight, gx)?;
        self.steps += 1;
        Ok(())
    }
}

/// Incrementally grown symmetric kernel cache over the seen inputs.
#[derive(Debug, Clone)]
struct SquareCache {
    stride: usize,
    n: usize,
    data: Vec<f64>,
}

impl SquareCache {
    fn with_capacity(cap: usize) -> Self {
        let stride = cap.max(16);
        SquareCache { stride, n: 0, data: vec![0.0; stride * stride] }
    }

    #[inline]
    fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.stride + j]
    }

    #[inline]
    fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.stride..i * self.stride + self.n]
    }

    /// Installs row/column `n` from `values` (length n+1, diagonal last).
    fn push_row(&mut self, values: &[f64]) {
        debug_assert_eq!(values.len(), self.n + 1);
        if self.n == self.stride {
            let new_stride = self.stride * 2;
            let mut data = vec![0.0; new_stride * new_stride];
            for i in 0..self.n {
                data[i * new_stride..i * new_stride + self.n]
                    .copy_from_slice(&self.data[i * self.stride..i * self.stride + self.n]);
            }
            self.stride = new_stride;
            self.data = data;
        }
        let n = self.n;
        for (j, &v) in values.iter().enumerate() {
            self.data[n * self.stride + j] = v;
            self.data[j * self.stride + n] = v;
        }
        self.n += 1;
    }
}

/// State of the pairwise algorithm: the hypothesis f (zero at start), the
/// full history of seen examples, and the caches that make the per-step sum
/// over history affordable.
#[derive(Debug, Clone)]
pub struct PairwiseState {
    hypothesis: DualExpansion<PairKernel>,
    history: Vec<Example>,
    gram: SquareCache,
    /// Per history index i: the sections appended with first component x_i,
    /// as (second-component index, weight).
    coeff_rows: Vec<Vec<(u32, f64)>>,
}

impl PairwiseState {
    pub fn new(kernel: PairKernel) -> Self {
        Self::with_capacity(kernel, 64, false)
    }

    pub fn with_capacity(kernel: PairKernel, capacity: usize, merge_duplicates: bool) -> Self {
        let hypothesis = if merge_duplicates {
            DualExpansion::zero_with_merging(kernel)
        } else {
            DualExpansion::zero(kernel)
        };
        PairwiseState {
            hypothesis,
            history: Vec::with_capacity(capacity),
            gram: SquareCache::with_capacity(capacity),
            coeff_rows: Vec::with_capacity(capacity),
        }
    }

    pub fn hypothesis(&self) -> &DualExpansion<PairKernel> {
        &self.hypothesis
    }

    pub fn into_hypothesis(self) -> DualExpansion<PairKernel> {
        self.hypothesis
    }

    pub fn history(&self) -> &[Example] {
        &self.history
    }

    /// Time index of the NEXT update: 2 once the first example is absorbed.
    pub fn next_t(&self) -> u64 {
        self.history.len() as u64 + 1
    }

    /// Sections appended by the most recent step, as (second index, weight).
    pub fn last_step_sections(&self) -> &[(u32, f64)] {
        self.coeff_rows.last().map(|r| r.as_slice()).unwrap_or(&[])
    }

    fn absorb(&mut self, z: Example) -> Result<()> {
        let base = self.hypothesis.kernel().base().clone();
        let n = self.history.len();
        let mut row = Vec::with_capacity(n + 1);
        for past in &self.history {
            row.push(base.eval(&z.x, &past.x)?);
        }
        row.push(base.eval(&z.x, &z.x)?);
        self.gram.push_row(&row);
        self.history.push(z);
        Ok(())
    }

    /// Absorbs the first example into history without an update (the update
    /// rule only begins once one past example exists).
    pub fn push_first(&mut self, z: &Example) -> Result<()> {
        if !self.history.is_empty() {
            return Err(Error::State("push_first is only valid on an empty history".into()));
        }
        if z.y != 1.0 && z.y != -1.0 {
            return Err(Error::Label(z.y));
        }
        self.absorb(z.clone())?;
        self.coeff_rows.push(Vec::new());
        Ok(())
    }

    /// One update at time t = history.len() + 1 ≥ 2: for every past example
    /// z_j, appends −(γ/(t−1))·φ′((y_t−y_j)·f_t(x_t,x_j))·(y_t−y_j) at center
    /// (x_t, x_j), skipping the exactly-zero terms with y_t = y_j. Then
    /// absorbs z_t into history.
    pub fn step(&mut self, z: &Example, gamma: f64, loss: &ActivatingLoss) -> Result<()> {
        if self.history.is_empty() {
            return Err(Error::State(
                "pairwise update requires a nonempty history; absorb the first example first"
                    .into(),
            ));
        }
        if z.y != 1.0 && z.y != -1.0 {
            return Err(Error::Label(z.y));
        }
        if !(gamma > 0.0 && gamma.is_finite()) {
            return Err(Error::InvalidParameter(format!("step size must be positive, got {gamma}")));
        }
        let base = self.hypothesis.kernel().base().clone();
        let n = self.history.len();

        // Kernel row of the incoming point against history (plus diagonal).
        let mut row = Vec::with_capacity(n + 1);
        for past in &self.history {
            row.push(base.eval(&z.x, &past.x)?);
        }
        row.push(base.eval(&z.x, &z.x)?);
        let diag_t = row[n];

        // f_t(x_t, x_j) for all j: contract the coefficient table against the
        // kernel row on the first component, then against the Gram cache on
        // the second. v[jj] = Σ_r C[r][jj]·G(x_r, x_t).
        let mut v = vec![0.0; n];
        for (r, sections) in self.coeff_rows.iter().enumerate() {
            if sections.is_empty() {
                continue;
            }
            let gr = row[r];
            for &(jj, w) in sections {
                v[jj as usize] += w * gr;
            }
        }
        let mut vals = vec![0.0; n];
        for (j, val) in vals.iter_mut().enumerate() {
            let gram_row = self.gram.row(j);
            *val = v.iter().zip(gram_row).map(|(a, b)| a * b).sum();
        }

        let scale = gamma / n as f64;
        let mut appended: Vec<(u32, f64)> = Vec::new();
        for j in 0..n {
            let ydiff = z.y - self.history[j].y;
            if ydiff == 0.0 {
                continue;
            }
            let weight = -scale * loss.grad(ydiff * vals[j])? * ydiff;
            if weight == 0.0 {
                continue;
            }
            // Current expansion value at the new center, including the
            // sections already appended within this step.
            let mut value = vals[j];
            for &(jp, wp) in &appended {
                value += wp * diag_t * self.gram.get(jp as usize, j);
            }
            self.hypothesis.add_scaled_section_with_value(
                (z.x.clone(), self.history[j].x.clone()),
                weight,
                value,
            )?;
            appended.push((j as u32, weight));
        }

        self.gram.push_row(&row);
        self.history.push(z.clone());
        self.coeff_rows.push(appended);
        Ok(())
    }
}

// ---------------------------------------------------------------------------
// Run driver
// ---------------------------------------------------------------------------

/// Which iterations get a trajectory row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "policy", rename_all = "snake_case")]
pub enum CheckpointPolicy {
    /// start, 2·start, 4·start, … plus the final iteration.
    Geometric {
        #[serde(default = "default_start")]
        start: u64,
    },
    /// Exactly the listed iterations (filtered to the run length).
    Explicit { points: Vec<u64> },
    /// Only the final iteration.
    FinalOnly,
}

fn default_start() -> u64 {
    1
}

impl Default for CheckpointPolicy {
    fn default() -> Self {
        CheckpointPolicy::Geometric { start: 1 }
    }
}

impl CheckpointPolicy {
    /// Sorted, deduplicated checkpoint iterations for a run of length t_max.
    pub fn checkpoints(&self, t_max: u64) -> Vec<u64> {
        let mut points = match self {
            CheckpointPolicy::Geometric { start } => {
                let mut pts = Vec::new();
                let mut t = (*start).max(1);
                while t <= t_max {
                    pts.push(t);
                    match t.checked_mul(2) {
                        Some(next) => t = next,
                        None => break,
                    }
                }
                pts.push(t_max);
                pts
            }
            CheckpointPolicy::Explicit { points } => {
                points.iter().copied().filter(|&t| t >= 1 && t <= t_max).collect()
            }
            CheckpointPolicy::FinalOnly => vec![t_max],
        };
        points.sort_unstable();
        points.dedup();
        points
    }
}

/// Options for a single run.
#[derive(Debug, Clone)]
pub struct RunOptions {
    pub checkpoints: CheckpointPolicy,
    /// Check the deterministic norm envelope at every pairwise iteration
    /// (active only for 1-activating losses).
    pub check_norm_envelope: bool,
    /// Merge duplicate centers in the pairwise expansion.
    pub merge_duplicates: bool,
    /// Run even if the pairwise step cap or the length cap is violated.
    pub force: bool,
    pub max_pairwise_t: u64,
}

impl Default for RunOptions {
    fn default() -> Self {
        RunOptions {
            checkpoints: CheckpointPolicy::default(),
            check_norm_envelope: false,
            merge_duplicates: false,
            force: false,
            max_pairwise_t: DEFAULT_MAX_PAIRWISE_T,
        }
    }
}

/// Risk probe wired into a pointwise run; sees every appended section so it
/// can track held-out evaluations incrementally.
pub trait PointwiseObserver {
    fn on_append(&mut self, center: &Point, weight: f64);
    /// Called at checkpoints: (held-out risk, excess risk) when available.
    fn checkpoint_risks(&mut self) -> (Option<f64>, Option<f64>);
}

/// Risk probe wired into a pairwise run. Points are reported once with their
/// history index; sections then refer to indices.
pub trait PairwiseObserver {
    fn on_new_point(&mut self, index: usize, x: &Point);
    fn on_append(&mut self, first_index: usize, second_index: usize, weight: f64);
    fn checkpoint_risks(&mut self) -> (Option<f64>, Option<f64>);
}

/// One trajectory row per checkpoint.
#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryRow {
    pub t: u64,
    pub gamma: f64,
    pub rkhs_norm: f64,
    pub norm_envelope: Option<f64>,
    pub heldout_risk: Option<f64>,
    pub excess_risk: Option<f64>,
}

/// A norm-envelope violation observed during a run.
#[derive(Debug, Clone, PartialEq)]
pub struct EnvelopeViolation {
    pub t: u64,
    pub rkhs_norm: f64,
    pub envelope: f64,
}

/// Per-run record: checkpoint rows plus the outcome of the per-iteration
/// envelope check when one was active.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct TrajectoryRecord {
    pub rows: Vec<TrajectoryRow>,
    /// Whether the per-iteration envelope check ran.
    pub envelope_checked: bool,
    /// Whether γ_t·κ̃² ≤ 1/(4L) held, i.e. whether the envelope is a proven
    /// bound rather than informational output.
    pub envelope_precondition_met: bool,
    pub envelope_violations: Vec<EnvelopeViolation>,
}

impl TrajectoryRecord {
    const HEADER: &'static str = "t,gamma,rkhs_norm,norm_envelope,heldout_risk,excess_risk";

    fn opt(v: Option<f64>) -> String {
        v.map(|x| format!("{x}")).unwrap_or_default()
    }

    /// Comma-separated rows with header, full-precision floats; optional
    /// columns are left empty.
    pub fn write_csv<W: std::io::Write>(&self, out: &mut W) -> Result<()> {
        writeln!(out, "{}", Self::HEADER)?;
        for r in &self.rows {
            writeln!(
                out,
                "{},{},{},{},{},{}",
                r.t,
                r.gamma,
                r.rkhs_norm,
                Self::opt(r.norm_envelope),
                Self::opt(r.heldout_risk),
                Self::opt(r.excess_risk)
            )?;
        }
        Ok(())
    }

    pub fn read_csv<R: std::io::BufRead>(input: R) -> Result<Self> {
        let mut lines = input.lines();
        match lines.next() {
            Some(Ok(h)) if h.trim() == Self::HEADER => {}
            other => {
                return Err(Error::Data(format!("missing trajectory header, got {other:?}")));
            }
        }
        let mut rows = Vec::new();
        for line in lines {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let f: Vec<&str> = line.split(',').collect();
            if f.len() != 6 {
                return Err(Error::Data(format!("trajectory row has {} fields: '{line}'", f.len())));
            }
            let parse = |s: &str| -> Result<f64> {
                s.parse::<f64>().map_err(|e| Error::Data(format!("bad float '{s}': {e}")))
            };
            let opt = |s: &str| -> Result<Option<f64>> {
                if s.is_empty() {
                    Ok(None)
                } else {
                    parse(s).map(Some)
                }
            };
            rows.push(TrajectoryRow {
                t: f[0].parse().map_err(|e| Error::Data(format!("bad t '{}': {e}", f[0])))?,
                gamma: parse(f[1])?,
                rkhs_norm: parse(f[2])?,
                norm_envelope: opt(f[3])?,
                heldout_risk: opt(f[4])?,
                excess_risk: opt(f[5])?,
            });
        }
        Ok(TrajectoryRecord { rows, ..Default::default() })
    }
}

/// Runs the pointwise algorithm for `t_max` steps over `stream` (in order),
/// recording trajectory rows at the configured checkpoints.
pub fn run_pointwise(
    stream: &[Example],
    t_max: u64,
    schedule: &StepSchedule,
    loss: &ActivatingLoss,
    kernel: &Kernel,
    options: &RunOptions,
    mut observer: Option<&mut dyn PointwiseObserver>,
) -> Result<(DualExpansion<Kernel>, TrajectoryRecord)> {
    if t_max < 1 {
        return Err(Error::InvalidParameter("pointwise runs need t_max >= 1".into()));
    }
    if (stream.len() as u64) < t_max {
        return Err(Error::Data(format!(
            "stream exhausted: {} examples for t_max = {t_max}",
            stream.len()
        )));
    }
    let checkpoints = options.checkpoints.checkpoints(t_max);
    let mut next_checkpoint = 0usize;
    let mut state = PointwiseState::new(kernel.clone());
    let mut record = TrajectoryRecord::default();

    for t in 1..=t_max {
        let gamma = schedule.gamma(t);
        let len_before = state.hypothesis.len();
        state.step(&stream[(t - 1) as usize], gamma, loss)?;
        if let Some(obs) = observer.as_deref_mut() {
            if state.hypothesis.len() > len_before {
                let idx = state.hypothesis.len() - 1;
                obs.on_append(&state.hypothesis.centers()[idx], state.hypothesis.coefficients()[idx]);
            }
        }
        if next_checkpoint < checkpoints.len() && checkpoints[next_checkpoint] == t {
            next_checkpoint += 1;
            let (heldout, excess) = match observer.as_deref_mut() {
                Some(obs) => obs.checkpoint_risks(),
                None => (None, None),
            };
            record.rows.push(TrajectoryRow {
                t,
                gamma,
                rkhs_norm: state.hypothesis.rkhs_norm()?,
                norm_envelope: None,
                heldout_risk: heldout,
                excess_risk: excess,
            });
        }
    }
    Ok((state.into_hypothesis(), record))
}

/// Runs the pairwise algorithm up to time `t_max` ≥ 2 over `stream`,
/// recording trajectory rows at checkpoints and (optionally) checking the
/// deterministic norm envelope at every iteration.
///
/// Unless `force` is set, the step cap c·κ̃² ≤ 1/(4L) and the run-length cap
/// are enforced; the envelope is only a proven bound under the step cap.
pub fn run_pairwise(
    stream: &[Example],
    t_max: u64,
    schedule: &StepSchedule,
    loss: &ActivatingLoss,
    kernel: &PairKernel,
    options: &RunOptions,
    mut observer: Option<&mut dyn PairwiseObserver>,
) -> Result<(DualExpansion<PairKernel>, TrajectoryRecord)> {
    if t_max < 2 {
        return Err(Error::InvalidParameter("pairwise runs need t_max >= 2".into()));
    }
    if (stream.len() as u64) < t_max {
        return Err(Error::Data(format!(
            "stream exhausted: {} examples for t_max = {t_max}",
            stream.len()
        )));
    }
    let kt = kernel.kappa();
    let step_cap_met = schedule.c() * kt * kt <= 1.0 / (4.0 * loss.holder_l());
    if !step_cap_met && !options.force {
        return Err(Error::Config(format!(
            "pairwise step cap violated: c*kappa_tilde^2 = {} exceeds 1/(4L) = {}; pass force to run anyway",
            schedule.c() * kt * kt,
            1.0 / (4.0 * loss.holder_l())
        )));
    }
    if t_max > options.max_pairwise_t && !options.force {
        return Err(Error::Config(format!(
            "pairwise run length {t_max} exceeds the cap {}; pass force to run anyway",
            options.max_pairwise_t
        )));
    }

    let envelope_active = options.check_norm_envelope && loss.alpha() == 1.0;
    let c_phi = if envelope_active { loss.norm_growth_constant()? } else { 0.0 };

    let checkpoints = options.checkpoints.checkpoints(t_max);
    let mut next_checkpoint = 0usize;
    let mut state =
        PairwiseState::with_capacity(kernel.clone(), t_max as usize, options.merge_duplicates);
    let mut record = TrajectoryRecord {
        envelope_checked: envelope_active,
        envelope_precondition_met: step_cap_met,
        ..Default::default()
    };

    state.push_first(&stream[0])?;
    if let Some(obs) = observer.as_deref_mut() {
        obs.on_new_point(0, &stream[0].x);
    }

    // Skip a possible checkpoint at t = 1 (no update has happened; f_2 = 0).
    while next_checkpoint < checkpoints.len() && checkpoints[next_checkpoint] < 2 {
        let (heldout, excess) = match observer.as_deref_mut() {
            Some(obs) => obs.checkpoint_risks(),
            None => (None, None),
        };
        record.rows.push(TrajectoryRow {
            t: checkpoints[next_checkpoint],
            gamma: schedule.gamma(checkpoints[next_checkpoint]),
            rkhs_norm: 0.0,
            norm_envelope: if envelope_active { Some(0.0) } else { None },
            heldout_risk: heldout,
            excess_risk: excess,
        });
        next_checkpoint += 1;
    }

    let mut gamma_sum = 0.0;
    for t in 2..=t_max {
        let gamma = schedule.gamma(t);
        gamma_sum += gamma;
        state.step(&stream[(t - 1) as usize], gamma, loss)?;
        if let Some(obs) = observer.as_deref_mut() {
            let new_index = state.history.len() - 1;
            obs.on_new_point(new_index, &state.history[new_index].x);
            for &(j, w) in state.last_step_sections() {
                obs.on_append(new_index, j as usize, w);
            }
        }

        let envelope = if envelope_active {
            let envelope = c_phi * gamma_sum.sqrt();
            let norm = state.hypothesis.rkhs_norm()?;
            if norm > envelope + ENVELOPE_SLACK {
                record.envelope_violations.push(EnvelopeViolation {
                    t,
                    rkhs_norm: norm,
                    envelope,
                });
            }
            Some(envelope)
        } else {
            None
        };

        if next_checkpoint < checkpoints.len() && checkpoints[next_checkpoint] == t {
            next_checkpoint += 1;
            let (heldout, excess) = match observer.as_deref_mut() {
                Some(obs) => obs.checkpoint_risks(),
                None => (None, None),
            };
            record.rows.push(TrajectoryRow {
                t,
                gamma,
                rkhs_norm: state.hypothesis.rkhs_norm()?,
                norm_envelope: envelope,
                heldout_risk: heldout,
                excess_risk: excess,
            });
        }
    }
    Ok((state.into_hypothesis(), record))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn pt(coords: &[f64]) -> Point {
        Point::new(coords.to_vec()).unwrap()
    }

    fn gauss() -> Kernel {
        Kernel::gaussian(1.0, 1.0).unwrap()
    }

    fn random_stream(n: usize, dim: usize, seed: u64) -> Vec<Example> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n)
            .map(|_| {
                let coords: Vec<f64> = (0..dim).map(|_| rng.random_range(-1.0..1.0)).collect();
                let y = if rng.random_range(0.0..1.0) < 0.5 { -1.0 } else { 1.0 };
                Example::new(Point::new(coords).unwrap(), y).unwrap()
            })
            .collect()
    }

    // From-scratch reimplementations of both update rules, recomputing every
    // kernel evaluation; the oracle for the fast paths.
    fn naive_pointwise(
        stream: &[Example],
        t_max: usize,
        schedule: &StepSchedule,
        loss: &ActivatingLoss,
        kernel: &Kernel,
    ) -> Vec<(Point, f64)> {
        let mut sections: Vec<(Point, f64)> = Vec::new();
        for t in 1..=t_max {
            let z = &stream[t - 1];
            let gx: f64 = sections
                .iter()
                .map(|(c, w)| w * kernel.eval(c, &z.x).unwrap())
                .sum();
            let w = -schedule.gamma(t as u64) * loss.grad(z.y * gx).unwrap() * z.y;
            if w != 0.0 {
                sections.push((z.x.clone(), w));
            }
        }
        sections
    }

    fn naive_pairwise(
        stream: &[Example],
        t_max: usize,
        schedule: &StepSchedule,
        loss: &ActivatingLoss,
        kernel: &PairKernel,
    ) -> Vec<((Point, Point), f64)> {
        let mut sections: Vec<((Point, Point), f64)> = Vec::new();
        for t in 2..=t_max {
            let z = &stream[t - 1];
            let gamma = schedule.gamma(t as u64);
            let mut new_sections = Vec::new();
            for j in 0..(t - 1) {
                let zj = &stream[j];
                let ydiff = z.y - zj.y;
                if ydiff == 0.0 {
                    continue;
                }
                let center = (z.x.clone(), zj.x.clone());
                let ftx: f64 = sections
                    .iter()
                    .map(|(c, w)| w * kernel.eval(c, &center).unwrap())
                    .sum();
                let w = -(gamma / (t - 1) as f64) * loss.grad(ydiff * ftx).unwrap() * ydiff;
                if w != 0.0 {
                    new_sections.push((center, w));
                }
            }
            sections.extend(new_sections);
        }
        sections
    }

    #[test]
    fn schedule_validation_and_monotonicity() {
        assert!(StepSchedule::new(0.0, 0.5).is_err());
        assert!(StepSchedule::new(1.0, 0.0).is_err());
        assert!(StepSchedule::new(1.0, 1.0).is_err());
        let s = StepSchedule::new(0.3, 0.7).unwrap();
        for t in 1..2000u64 {
            assert!(s.gamma(t + 1) < s.gamma(t));
            assert!(s.gamma(t) > 0.0);
        }
    }

    #[test]
    fn admissibility_spec_cases() {
        // alpha = 1, theta = 2/3: valid regime with exponent 1/3.
        let report = validate_schedule(
            &StepSchedule::new(0.5, 2.0 / 3.0).unwrap(),
            &ActivatingLoss::logistic(),
            None,
        );
        assert!(report.pointwise_rate_valid);
        assert!((report.pointwise_exponent - 1.0 / 3.0).abs() < 1e-12);

        // The maximal-rate recipe theta = 2/(alpha+2) gives alpha/(alpha+2).
        for alpha_q in [1.5f64, 2.0] {
            let loss = ActivatingLoss::qnorm(alpha_q).unwrap();
            let alpha = loss.alpha();
            let theta = 2.0 / (alpha + 2.0);
            let report =
                validate_schedule(&StepSchedule::new(1.0, theta).unwrap(), &loss, None);
            assert!((report.pointwise_exponent - alpha / (alpha + 2.0)).abs() < 1e-12);
        }

        // alpha = 0.5 (q = 1.5) requires theta > 2/3, so 0.6 is invalid.
        let report = validate_schedule(
            &StepSchedule::new(1.0, 0.6).unwrap(),
            &ActivatingLoss::qnorm(1.5).unwrap(),
            None,
        );
        assert!(!report.pointwise_rate_valid);
        assert!(!report.pairwise_proven_regime);
    }

    #[test]
    fn pairwise_step_cap_classification() {
        let pk = PairKernel::new(gauss());
        let logistic = ActivatingLoss::logistic();
        let ok = validate_schedule(&StepSchedule::new(1.0, 0.75).unwrap(), &logistic, Some(&pk));
        assert_eq!(ok.pairwise_step_ok, Some(true));
        let too_big =
            validate_schedule(&StepSchedule::new(1.0001, 0.75).unwrap(), &logistic, Some(&pk));
        assert_eq!(too_big.pairwise_step_ok, Some(false));
    }

    #[test]
    fn pairwise_exponent_domains() {
        // theta = 0.75, delta = 0.02: min(0.1775, 0.23) under a bounded
        // gradient, by direct substitution.
        let r = pairwise_exponent_bounded_grad(0.75, 0.02).unwrap();
        assert!((r - 0.1775).abs() < 1e-12);
        let r = pairwise_exponent(0.75, 0.02).unwrap();
        assert!((r - (0.75 / 2.0 - 0.25 - 0.01)).abs() < 1e-12);
        assert!(pairwise_exponent(0.75, 0.3).is_err());
        assert!(pairwise_exponent(0.4, 0.01).is_err());
        assert!(pairwise_exponent_bounded_grad(0.75, 0.2).is_err());
    }

    #[test]
    fn pointwise_first_step_closed_forms() {
        // Least squares, y = +1: phi'(0) = -2 forces coefficient 2*gamma.
        let mut state = PointwiseState::new(gauss());
        let z = Example::new(pt(&[0.3, -0.2]), 1.0).unwrap();
        state.step(&z, 0.7, &ActivatingLoss::least_squares()).unwrap();
        assert_eq!(state.hypothesis().coefficients(), &[1.4]);

        // Logistic, y = -1: phi'(0) = -1/2, so the coefficient is -gamma/2.
        let mut state = PointwiseState::new(gauss());
        let z = Example::new(pt(&[0.3]), -1.0).unwrap();
        state.step(&z, 0.4, &ActivatingLoss::logistic()).unwrap();
        assert_eq!(state.hypothesis().coefficients(), &[-0.2]);
    }

    #[test]
    fn zero_gradient_step_is_a_fixed_point() {
        // With a linear kernel, one least-squares step from zero on x = (1, 0)
        // with gamma = 1/2 gives g = G_x; the margin at the same point is then
        // exactly 1, where the least-squares derivative vanishes.
        let kernel = Kernel::linear(1.0).unwrap();
        let loss = ActivatingLoss::least_squares();
        let mut state = PointwiseState::new(kernel.clone());
        let z = Example::new(pt(&[1.0, 0.0]), 1.0).unwrap();
        state.step(&z, 0.5, &loss).unwrap();
        assert_eq!(state.hypothesis().len(), 1);
        let probe = pt(&[0.4, 0.9]);
        let before = state.hypothesis().evaluate(&probe).unwrap();
        state.step(&z, 0.25, &loss).unwrap();
        assert_eq!(state.hypothesis().len(), 1);
        assert_eq!(state.hypothesis().evaluate(&probe).unwrap(), before);
    }

    #[test]
    fn label_and_state_errors() {
        let mut state = PointwiseState::new(gauss());
        let bad = Example { x: pt(&[0.0]), y: 0.5 };
        assert!(matches!(
            state.step(&bad, 0.1, &ActivatingLoss::logistic()),
            Err(Error::Label(_))
        ));

        let mut pair = PairwiseState::new(PairKernel::new(gauss()));
        let z = Example::new(pt(&[0.0]), 1.0).unwrap();
        assert!(matches!(
            pair.step(&z, 0.1, &ActivatingLoss::logistic()),
            Err(Error::State(_))
        ));
    }

    #[test]
    fn pairwise_equal_labels_make_no_update() {
        let pk = PairKernel::new(gauss());
        let mut state = PairwiseState::new(pk);
        let z1 = Example::new(pt(&[0.1]), 1.0).unwrap();
        let z2 = Example::new(pt(&[0.5]), 1.0).unwrap();
        state.push_first(&z1).unwrap();
        state.step(&z2, 0.3, &ActivatingLoss::least_squares()).unwrap();
        assert!(state.hypothesis().is_empty());
    }

    #[test]
    fn pairwise_first_update_closed_form() {
        // t = 2 with y_2 = +1, y_1 = -1 and least squares: f_2 = 0 forces the
        // derivative argument to 0, so the single coefficient is 4*gamma_2.
        let pk = PairKernel::new(gauss());
        let mut state = PairwiseState::new(pk);
        state.push_first(&Example::new(pt(&[0.2]), -1.0).unwrap()).unwrap();
        let z2 = Example::new(pt(&[-0.4]), 1.0).unwrap();
        state.step(&z2, 0.3, &ActivatingLoss::least_squares()).unwrap();
        assert_eq!(state.hypothesis().len(), 1);
        assert!((state.hypothesis().coefficients()[0] - 1.2).abs() < 1e-15);
    }

    #[test]
    fn fast_paths_match_naive_recomputation() {
        let schedule = StepSchedule::new(0.5, 0.7).unwrap();
        for seed in 0..8u64 {
            let stream = random_stream(30, 2, seed);
            for loss in
                [ActivatingLoss::logistic(), ActivatingLoss::least_squares(), ActivatingLoss::qnorm(1.5).unwrap()]
            {
                let (h, _) = run_pointwise(
                    &stream,
                    30,
                    &schedule,
                    &loss,
                    &gauss(),
                    &RunOptions::default(),
                    None,
                )
                .unwrap();
                let naive = naive_pointwise(&stream, 30, &schedule, &loss, &gauss());
                assert_eq!(h.len(), naive.len());
                for ((c, w), (nc, nw)) in
                    h.centers().iter().zip(h.coefficients()).zip(naive.iter().map(|(c, w)| (c, w)))
                {
                    assert_eq!(c, nc);
                    assert!((w - nw).abs() <= 1e-12 * nw.abs().max(1.0));
                }
            }

            let pk = PairKernel::new(gauss());
            let pair_schedule = StepSchedule::new(0.2, 0.75).unwrap();
            let stream = random_stream(12, 2, seed ^ 0xff);
            for loss in [ActivatingLoss::logistic(), ActivatingLoss::least_squares()] {
                let (f, _) = run_pairwise(
                    &stream,
                    12,
                    &pair_schedule,
                    &loss,
                    &pk,
                    &RunOptions { force: true, ..Default::default() },
                    None,
                )
                .unwrap();
                let naive = naive_pairwise(&stream, 12, &pair_schedule, &loss, &pk);
                assert_eq!(f.len(), naive.len());
                for (i, (c, w)) in naive.iter().enumerate() {
                    assert_eq!(&f.centers()[i], c);
                    assert!(
                        (f.coefficients()[i] - w).abs() <= 1e-12 * w.abs().max(1.0),
                        "coefficient {i}: {} vs {w}",
                        f.coefficients()[i]
                    );
                }
            }
        }
    }

    #[test]
    fn runs_are_deterministic() {
        let stream = random_stream(64, 3, 9);
        let schedule = StepSchedule::new(0.5, 2.0 / 3.0).unwrap();
        let loss = ActivatingLoss::logistic();
        let opts = RunOptions::default();
        let (h1, r1) = run_pointwise(&stream, 64, &schedule, &loss, &gauss(), &opts, None).unwrap();
        let (h2, r2) = run_pointwise(&stream, 64, &schedule, &loss, &gauss(), &opts, None).unwrap();
        assert_eq!(h1.coefficients(), h2.coefficients());
        assert_eq!(r1, r2);

        let pk = PairKernel::new(gauss());
        let pair_schedule = StepSchedule::new(1.0, 0.75).unwrap();
        let (f1, p1) =
            run_pairwise(&stream, 40, &pair_schedule, &loss, &pk, &opts, None).unwrap();
        let (f2, p2) =
            run_pairwise(&stream, 40, &pair_schedule, &loss, &pk, &opts, None).unwrap();
        assert_eq!(f1.coefficients(), f2.coefficients());
        assert_eq!(p1, p2);
    }

    #[test]
    fn pairwise_norm_envelope_holds_under_step_cap() {
        let pk = PairKernel::new(gauss());
        let stream = random_stream(300, 2, 17);
        for (loss, c) in
            [(ActivatingLoss::logistic(), 1.0), (ActivatingLoss::least_squares(), 0.125)]
        {
            let schedule = StepSchedule::new(c, 0.75).unwrap();
            let opts = RunOptions { check_norm_envelope: true, ..Default::default() };
            let (_, record) =
                run_pairwise(&stream, 300, &schedule, &loss, &pk, &opts, None).unwrap();
            assert!(record.envelope_checked);
            assert!(record.envelope_precondition_met);
            assert!(
                record.envelope_violations.is_empty(),
                "{}: {:?}",
                loss.name(),
                record.envelope_violations.first()
            );
        }
    }

    #[test]
    fn envelope_exact_sum_below_closed_form() {
        let loss = ActivatingLoss::logistic();
        for &(c, theta) in &[(0.5, 0.6), (1.0, 0.75), (0.1, 0.9), (2.0, 0.51)] {
            let schedule = StepSchedule::new(c, theta).unwrap();
            let mut gamma_sum = 0.0;
            let c_phi = loss.norm_growth_constant().unwrap();
            for t in 2..=10_000u64 {
                gamma_sum += schedule.gamma(t);
                let exact = c_phi * gamma_sum.sqrt();
                let closed = norm_envelope_closed_form(&schedule, &loss, t).unwrap();
                assert!(exact <= closed + 1e-12, "t={t}: {exact} vs {closed}");
            }
            // Spot-check the O(t) helper against the incremental sum.
            let direct = norm_envelope(&schedule, &loss, 10_000).unwrap();
            assert!((direct - c_phi * gamma_sum.sqrt()).abs() < 1e-9);
        }
    }

    #[test]
    fn envelope_examples() {
        let loss = ActivatingLoss::least_squares();
        let schedule = StepSchedule::new(0.1, 0.75).unwrap();
        assert_eq!(norm_envelope(&schedule, &loss, 1).unwrap(), 0.0);
        let expected = 2.0f64.sqrt() * (0.1 * 2.0f64.powf(-0.75)).sqrt();
        assert!((norm_envelope(&schedule, &loss, 2).unwrap() - expected).abs() < 1e-15);
        assert!(norm_envelope(&schedule, &ActivatingLoss::qnorm(1.5).unwrap(), 5).is_err());
    }

    #[test]
    fn power_partial_sums_respect_bound() {
        for &(c, theta, alpha) in
            &[(0.5f64, 0.75, 1.0), (1.0, 0.6, 1.0), (0.3, 0.8, 0.5), (2.0, 0.9, 0.25)]
        {
            let schedule = StepSchedule::new(c, theta).unwrap();
            if theta * (1.0 + alpha) <= 1.0 {
                assert!(schedule.power_sum_bound(alpha).is_err());
                continue;
            }
            let bound = schedule.power_sum_bound(alpha).unwrap();
            let sum = schedule.power_partial_sum(alpha, 100_000);
            assert!(sum <= bound * (1.0 + 1e-6), "{sum} vs {bound}");
        }
    }

    #[test]
    fn pairwise_run_gates() {
        let pk = PairKernel::new(gauss());
        let stream = random_stream(10, 2, 3);
        let loss = ActivatingLoss::logistic();
        // c above the cap is rejected without force.
        let schedule = StepSchedule::new(1.5, 0.75).unwrap();
        let err = run_pairwise(&stream, 10, &schedule, &loss, &pk, &RunOptions::default(), None);
        assert!(matches!(err, Err(Error::Config(_))));
        let ok = run_pairwise(
            &stream,
            10,
            &schedule,
            &loss,
            &pk,
            &RunOptions { force: true, ..Default::default() },
            None,
        );
        assert!(ok.is_ok());

        // Length cap.
        let schedule = StepSchedule::new(1.0, 0.75).unwrap();
        let opts = RunOptions { max_pairwise_t: 5, ..Default::default() };
        assert!(matches!(
            run_pairwise(&stream, 10, &schedule, &loss, &pk, &opts, None),
            Err(Error::Config(_))
        ));
    }

    #[test]
    fn run_length_and_stream_errors() {
        let stream = random_stream(5, 1, 1);
        let schedule = StepSchedule::new(0.5, 0.75).unwrap();
        let loss = ActivatingLoss::logistic();
        assert!(matches!(
            run_pointwise(&stream, 9, &schedule, &loss, &gauss(), &RunOptions::default(), None),
            Err(Error::Data(_))
        ));
        let pk = PairKernel::new(gauss());
        assert!(run_pairwise(&stream, 1, &schedule, &loss, &pk, &RunOptions::default(), None)
            .is_err());
    }

    #[test]
    fn pairwise_all_equal_labels_stays_zero() {
        let pk = PairKernel::new(gauss());
        let mut stream = random_stream(20, 2, 5);
        for z in &mut stream {
            z.y = 1.0;
        }
        let schedule = StepSchedule::new(1.0, 0.75).unwrap();
        let (f, record) = run_pairwise(
            &stream,
            20,
            &schedule,
            &ActivatingLoss::logistic(),
            &pk,
            &RunOptions::default(),
            None,
        )
        .unwrap();
        assert!(f.is_empty());
        assert!(record.rows.iter().all(|r| r.rkhs_norm == 0.0));
    }

    #[test]
    fn pointwise_single_step_run_matches_step() {
        let stream = random_stream(1, 2, 21);
        let schedule = StepSchedule::new(0.5, 0.75).unwrap();
        let loss = ActivatingLoss::logistic();
        let (h, record) = run_pointwise(
            &stream,
            1,
            &schedule,
            &loss,
            &gauss(),
            &RunOptions::default(),
            None,
        )
        .unwrap();
        let mut state = PointwiseState::new(gauss());
        state.step(&stream[0], schedule.gamma(1), &loss).unwrap();
        assert_eq!(h.coefficients(), state.hypothesis().coefficients());
        assert_eq!(record.rows.len(), 1);
    }

    #[test]
    fn pairwise_incremental_norm_matches_expansion_recompute() {
        let pk = PairKernel::new(gauss());
        let stream = random_stream(25, 2, 33);
        let schedule = StepSchedule::new(1.0, 0.75).unwrap();
        let (f, _) = run_pairwise(
            &stream,
            25,
            &schedule,
            &ActivatingLoss::logistic(),
            &pk,
            &RunOptions::default(),
            None,
        )
        .unwrap();
        let inc = f.rkhs_norm().unwrap();
        let full = f.rkhs_norm_recomputed().unwrap();
        assert!((inc - full).abs() <= 1e-10 * full.max(1.0), "{inc} vs {full}");
    }

    #[test]
    fn checkpoint_policies() {
        assert_eq!(
            CheckpointPolicy::Geometric { start: 1 }.checkpoints(10),
            vec![1, 2, 4, 8, 10]
        );
        assert_eq!(
            CheckpointPolicy::Geometric { start: 4 }.checkpoints(16),
            vec![4, 8, 16]
        );
        assert_eq!(
            CheckpointPolicy::Explicit { points: vec![64, 8, 8, 99] }.checkpoints(64),
            vec![8, 64]
        );
        assert_eq!(CheckpointPolicy::FinalOnly.checkpoints(7), vec![7]);
    }

    #[test]
    fn trajectory_csv_round_trip() {
        let record = TrajectoryRecord {
            rows: vec![
                TrajectoryRow {
                    t: 2,
                    gamma: 0.1234567890123,
                    rkhs_norm: 1.5e-3,
                    norm_envelope: Some(0.25),
                    heldout_risk: None,
                    excess_risk: Some(-1.0e-9),
                },
                TrajectoryRow {
                    t: 4,
                    gamma: 0.3,
                    rkhs_norm: 0.0,
                    norm_envelope: None,
                    heldout_risk: Some(0.693),
                    excess_risk: None,
                },
            ],
            ..Default::default()
        };
        let mut buf = Vec::new();
        record.write_csv(&mut buf).unwrap();
        let back = TrajectoryRecord::read_csv(buf.as_slice()).unwrap();
        assert_eq!(back.rows, record.rows);
    }
}
