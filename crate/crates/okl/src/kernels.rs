//! Mercer kernels on the input space and the induced product kernel on pairs.
//!
//! A kernel here is a symmetric positive semi-definite function together with
//! a declared `domain_radius` (the sup of ‖x‖ over the experiment's domain),
//! which makes the sup-diagonal bound κ = sup_x √G(x,x) computable up front.
//! The pairwise kernel is the tensor product of the base kernel with itself,
//! so its sup-diagonal bound is exactly κ².

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A point of the input space: a finite vector of fixed dimension.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Point(Vec<f64>);

impl Point {
    /// Builds a point, rejecting empty or non-finite coordinate vectors.
    pub fn new(coords: Vec<f64>) -> Result<Self> {
        if coords.is_empty() {
            return Err(Error::InvalidParameter("point must have dimension >= 1".into()));
        }
        if let Some(bad) = coords.iter().find(|c| !c.is_finite()) {
            return Err(Error::NonFinite(format!("point coordinate {bad}")));
        }
        Ok(Point(coords))
    }

    pub fn coords(&self) -> &[f64] {
        &self.0
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }
}

fn squared_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// The kernel families shipped with the experiment harness.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum KernelFamily {
    /// exp(−‖x−x′‖² / (2σ²)) with bandwidth σ.
    Gaussian { bandwidth: f64 },
    /// ⟨x, x′⟩.
    Linear,
    /// (⟨x, x′⟩ + offset)^degree.
    Polynomial { degree: u32, offset: f64 },
}

/// A Mercer kernel on the input space, with the experiment's domain radius.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Kernel {
    #[serde(flatten)]
    family: KernelFamily,
    domain_radius: f64,
}

impl Kernel {
    pub fn new(family: KernelFamily, domain_radius: f64) -> Result<Self> {
        if !(domain_radius > 0.0 && domain_radius.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "domain_radius must be a positive finite real, got {domain_radius}"
            )));
        }
        match family {
            KernelFamily::Gaussian { bandwidth } if !(bandwidth > 0.0 && bandwidth.is_finite()) => {
                return Err(Error::InvalidParameter(format!(
                    "gaussian bandwidth must be positive, got {bandwidth}"
                )));
            }
            KernelFamily::Polynomial { degree, offset } => {
                if degree == 0 {
                    return Err(Error::InvalidParameter("polynomial degree must be >= 1".into()));
                }
                if !(offset >= 0.0 && offset.is_finite()) {
                    return Err(Error::InvalidParameter(format!(
                        "polynomial offset must be nonnegative, got {offset}"
                    )));
                }
            }
            _ => {}
        }
        Ok(Kernel { family, domain_radius })
    }

    pub fn gaussian(bandwidth: f64, domain_radius: f64) -> Result<Self> {
        Self::new(KernelFamily::Gaussian { bandwidth }, domain_radius)
    }

    pub fn linear(domain_radius: f64) -> Result<Self> {
        Self::new(KernelFamily::Linear, domain_radius)
    }

    pub fn polynomial(degree: u32, offset: f64, domain_radius: f64) -> Result<Self> {
        Self::new(KernelFamily::Polynomial { degree, offset }, domain_radius)
    }

    pub fn family(&self) -> &KernelFamily {
        &self.family
    }

    pub fn domain_radius(&self) -> f64 {
        self.domain_radius
    }

    /// Evaluates G(x, x2). Errors on dimension mismatch.
    pub fn eval(&self, x: &Point, x2: &Point) -> Result<f64> {
        if x.dim() != x2.dim() {
            return Err(Error::DimensionMismatch { left: x.dim(), right: x2.dim() });
        }
        Ok(self.eval_unchecked(x, x2))
    }

    /// Evaluation without the dimension check; callers must have validated shapes.
    pub(crate) fn eval_unchecked(&self, x: &Point, x2: &Point) -> f64 {
        match &self.family {
            KernelFamily::Gaussian { bandwidth } => {
                (-squared_distance(x.coords(), x2.coords()) / (2.0 * bandwidth * bandwidth)).exp()
            }
            KernelFamily::Linear => dot(x.coords(), x2.coords()),
            KernelFamily::Polynomial { degree, offset } => {
                (dot(x.coords(), x2.coords()) + offset).powi(*degree as i32)
            }
        }
    }

    /// Upper bound κ on √G(x,x) over the declared domain.
    pub fn kappa(&self) -> f64 {
        match &self.family {
            KernelFamily::Gaussian { .. } => 1.0,
            KernelFamily::Linear => self.domain_radius,
            KernelFamily::Polynomial { degree, offset } => {
                (self.domain_radius * self.domain_radius + offset).powf(*degree as f64 / 2.0)
            }
        }
    }

    /// Gram matrix (row-major, n×n) on a list of points.
    pub fn gram(&self, points: &[Point]) -> Result<Vec<Vec<f64>>> {
        if points.is_empty() {
            return Err(Error::Data("gram requires a nonempty point list".into()));
        }
        let d = points[0].dim();
        for p in points {
            if p.dim() != d {
                return Err(Error::DimensionMismatch { left: d, right: p.dim() });
            }
        }
        let n = points.len();
        let mut g = vec![vec![0.0; n]; n];
        for i in 0..n {
            for j in i..n {
                let v = self.eval_unchecked(&points[i], &points[j]);
                g[i][j] = v;
                g[j][i] = v;
            }
        }
        Ok(g)
    }
}

/// The product kernel on pairs: K((x,x̃),(x′,x̃′)) = G(x,x′)·G(x̃,x̃′).
///
/// A product of Mercer kernels is Mercer (Schur product theorem), and the
/// sup-diagonal bound κ̃ equals κ² exactly.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairKernel {
    base: Kernel,
}

impl PairKernel {
    pub fn new(base: Kernel) -> Self {
        PairKernel { base }
    }

    pub fn base(&self) -> &Kernel {
        &self.base
    }

    pub fn eval(&self, a: &(Point, Point), b: &(Point, Point)) -> Result<f64> {
        Ok(self.base.eval(&a.0, &b.0)? * self.base.eval(&a.1, &b.1)?)
    }

    pub(crate) fn eval_unchecked(&self, a: &(Point, Point), b: &(Point, Point)) -> f64 {
        self.base.eval_unchecked(&a.0, &b.0) * self.base.eval_unchecked(&a.1, &b.1)
    }

    /// Upper bound κ̃ on √K((x,x̃),(x,x̃)); equals κ² for the product construction.
    pub fn kappa(&self) -> f64 {
        let k = self.base.kappa();
        k * k
    }
}

/// Common interface over [`Kernel`] and [`PairKernel`] used by dual expansions.
pub trait KernelSpace: Clone {
    type Input: Clone + PartialEq;

    fn eval_input(&self, a: &Self::Input, b: &Self::Input) -> Result<f64>;
    fn eval_input_unchecked(&self, a: &Self::Input, b: &Self::Input) -> f64;
    /// Sup of the square-root diagonal over the declared domain (κ resp. κ̃).
    fn sup_diag(&self) -> f64;
}

impl KernelSpace for Kernel {
    type Input = Point;

    fn eval_input(&self, a: &Point, b: &Point) -> Result<f64> {
        self.eval(a, b)
    }

    fn eval_input_unchecked(&self, a: &Point, b: &Point) -> f64 {
        self.eval_unchecked(a, b)
    }

    fn sup_diag(&self) -> f64 {
        self.kappa()
    }
}

impl KernelSpace for PairKernel {
    type Input = (Point, Point);

    fn eval_input(&self, a: &(Point, Point), b: &(Point, Point)) -> Result<f64> {
        self.eval(a, b)
    }

    fn eval_input_unchecked(&self, a: &(Point, Point), b: &(Point, Point)) -> f64 {
        self.eval_unchecked(a, b)
    }

    fn sup_diag(&self) -> f64 {
        self.kappa()
    }
}
