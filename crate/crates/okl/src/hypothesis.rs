//! RKHS elements represented as finite dual expansions: a list of centers and
//! coefficients against a kernel. This is the state type mutated by both
//! online trainers.
//!
//! The squared RKHS norm cᵀGc is maintained incrementally under appends in
//! O(m) (given the expansion's value at the new center), and can always be
//! recomputed from scratch in O(m²) as a cross-check.

use std::io::{BufRead, Write};

use crate::error::{Error, Result};
use crate::kernels::{Kernel, KernelSpace, PairKernel, Point};

/// Relative tolerance below which a negative quadratic form is a hard error
/// rather than roundoff to clamp.
const PSD_REL_TOL: f64 = 1e-6;

/// A finite kernel expansion Σᵢ cᵢ·k(centerᵢ, ·).
#[derive(Debug, Clone)]
pub struct DualExpansion<K: KernelSpace> {
    kernel: K,
    centers: Vec<K::Input>,
    coefficients: Vec<f64>,
    merge_duplicates: bool,
    sq_norm: f64,
    coeff_sq_sum: f64,
}

impl<K: KernelSpace> DualExpansion<K> {
    /// The zero element: evaluates to 0 everywhere, norm 0.
    pub fn zero(kernel: K) -> Self {
        DualExpansion {
            kernel,
            centers: Vec::new(),
            coefficients: Vec::new(),
            merge_duplicates: false,
            sq_norm: 0.0,
            coeff_sq_sum: 0.0,
        }
    }

    /// Like [`zero`](Self::zero), but appends onto an existing center add its
    /// weight instead of growing the expansion. Changes nothing mathematically
    /// (bilinearity) and caps memory when centers repeat.
    pub fn zero_with_merging(kernel: K) -> Self {
        let mut e = Self::zero(kernel);
        e.merge_duplicates = true;
        e
    }

    /// Builds an expansion from explicit parts; the squared norm is computed
    /// by the full quadratic form.
    pub fn from_parts(kernel: K, centers: Vec<K::Input>, coefficients: Vec<f64>) -> Result<Self> {
        if centers.len() != coefficients.len() {
            return Err(Error::DimensionMismatch {
                left: centers.len(),
                right: coefficients.len(),
            });
        }
        if let Some(bad) = coefficients.iter().find(|c| !c.is_finite()) {
            return Err(Error::NonFinite(format!("coefficient {bad}")));
        }
        let mut sq_norm = 0.0;
        for (i, ci) in centers.iter().enumerate() {
            for (j, cj) in centers.iter().enumerate() {
                sq_norm += coefficients[i] * coefficients[j] * kernel.eval_input(ci, cj)?;
            }
        }
        let coeff_sq_sum = coefficients.iter().map(|c| c * c).sum();
        Ok(DualExpansion {
            kernel,
            centers,
            coefficients,
            merge_duplicates: false,
            sq_norm,
            coeff_sq_sum,
        })
    }

    pub fn kernel(&self) -> &K {
        &self.kernel
    }

    pub fn len(&self) -> usize {
        self.centers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.centers.is_empty()
    }

    pub fn centers(&self) -> &[K::Input] {
        &self.centers
    }

    pub fn coefficients(&self) -> &[f64] {
        &self.coefficients
    }

    /// Σᵢ cᵢ·k(centerᵢ, x).
    pub fn evaluate(&self, x: &K::Input) -> Result<f64> {
        let mut acc = 0.0;
        for (c, w) in self.centers.iter().zip(&self.coefficients) {
            acc += w * self.kernel.eval_input(c, x)?;
        }
        Ok(acc)
    }

    /// √(cᵀGc) from the incrementally maintained quadratic form, clamped at 0
    /// within roundoff. A quadratic form below −10⁻⁶ relative to the scale
    /// ‖c‖²·(sup diagonal)² is reported as a numerical-PSD error.
    pub fn rkhs_norm(&self) -> Result<f64> {
        Self::norm_from_sq(self.sq_norm, self.coeff_sq_sum, self.kernel.sup_diag())
    }

    /// √(cᵀGc) recomputed from scratch in O(m²); use to cross-check the
    /// incremental value.
    pub fn rkhs_norm_recomputed(&self) -> Result<f64> {
        let mut sq = 0.0;
        for (i, ci) in self.centers.iter().enumerate() {
            sq += self.coefficients[i]
                * self.coefficients[i]
                * self.kernel.eval_input(ci, ci)?;
            for j in 0..i {
                sq += 2.0
                    * self.coefficients[i]
                    * self.coefficients[j]
                    * self.kernel.eval_input(ci, &self.centers[j])?;
            }
        }
        Self::norm_from_sq(sq, self.coeff_sq_sum, self.kernel.sup_diag())
    }

    fn norm_from_sq(sq: f64, coeff_sq_sum: f64, sup_diag: f64) -> Result<f64> {
        if sq >= 0.0 {
            return Ok(sq.sqrt());
        }
        let scale = coeff_sq_sum * sup_diag * sup_diag;
        if sq < -PSD_REL_TOL * scale.max(f64::MIN_POSITIVE) {
            return Err(Error::NumericalPsd { form: sq, tolerance: -PSD_REL_TOL * scale });
        }
        Ok(0.0)
    }

    /// Appends `weight·k(center, ·)`. Zero weights leave the expansion
    /// untouched; with merging on, a duplicate center absorbs the weight.
    pub fn add_scaled_section(&mut self, center: K::Input, weight: f64) -> Result<()> {
        if weight == 0.0 {
            return Ok(());
        }
        let value = self.evaluate(&center)?;
        self.add_scaled_section_with_value(center, weight, value)
    }

    /// Same as [`add_scaled_section`](Self::add_scaled_section), but the
    /// caller supplies the expansion's current value at `center` (as produced
    /// by an equivalent external evaluation path), avoiding the O(m) internal
    /// evaluation. The squared norm picks up 2·w·value + w²·k(center, center).
    pub fn add_scaled_section_with_value(
        &mut self,
        center: K::Input,
        weight: f64,
        value_at_center: f64,
    ) -> Result<()> {
        if !weight.is_finite() {
            return Err(Error::NonFinite(format!("section weight {weight}")));
        }
        if !value_at_center.is_finite() {
            return Err(Error::NonFinite(format!("expansion value {value_at_center}")));
        }
        if weight == 0.0 {
            return Ok(());
        }
        let diag = self.kernel.eval_input(&center, &center)?;
        self.sq_norm += 2.0 * weight * value_at_center + weight * weight * diag;
        if self.merge_duplicates {
            if let Some(idx) = self.centers.iter().position(|c| *c == center) {
                let old = self.coefficients[idx];
                let new = old + weight;
                self.coeff_sq_sum += new * new - old * old;
                self.coefficients[idx] = new;
                return Ok(());
            }
        }
        self.coeff_sq_sum += weight * weight;
        self.centers.push(center);
        self.coefficients.push(weight);
        Ok(())
    }
}

fn parse_field(field: &str) -> Result<f64> {
    field
        .trim()
        .parse::<f64>()
        .map_err(|e| Error::Data(format!("bad float field '{field}': {e}")))
}

impl DualExpansion<Kernel> {
    /// Writes one comma-separated row per section: center coordinates, then
    /// the coefficient, all in round-trip-exact decimal form.
    pub fn write_records<W: Write>(&self, out: &mut W) -> Result<()> {
        for (c, w) in self.centers.iter().zip(&self.coefficients) {
            let mut fields: Vec<String> = c.coords().iter().map(|v| format!("{v}")).collect();
            fields.push(format!("{w}"));
            writeln!(out, "{}", fields.join(","))?;
        }
        Ok(())
    }

    pub fn read_records<R: BufRead>(kernel: Kernel, input: R) -> Result<Self> {
        let mut centers = Vec::new();
        let mut coefficients = Vec::new();
        for line in input.lines() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split(',').collect();
            if fields.len() < 2 {
                return Err(Error::Data(format!("record needs coords and coefficient: '{line}'")));
            }
            let coords = fields[..fields.len() - 1]
                .iter()
                .map(|f| parse_field(f))
                .collect::<Result<Vec<f64>>>()?;
            centers.push(Point::new(coords)?);
            coefficients.push(parse_field(fields[fields.len() - 1])?);
        }
        Self::from_parts(kernel, centers, coefficients)
    }
}

impl DualExpansion<PairKernel> {
    /// Writes one row per section: first-center coordinates, second-center
    /// coordinates, then the coefficient.
    pub fn write_records<W: Write>(&self, out: &mut W) -> Result<()> {
        for ((a, b), w) in self.centers.iter().zip(&self.coefficients) {
            let mut fields: Vec<String> = a.coords().iter().map(|v| format!("{v}")).collect();
            fields.extend(b.coords().iter().map(|v| format!("{v}")));
            fields.push(format!("{w}"));
            writeln!(out, "{}", fields.join(","))?;
        }
        Ok(())
    }

    pub fn read_records<R: BufRead>(kernel: PairKernel, input: R) -> Result<Self> {
        let mut centers = Vec::new();
        let mut coefficients = Vec::new();
        for line in input.lines() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split(',').collect();
            if fields.len() < 3 || (fields.len() - 1) % 2 != 0 {
                return Err(Error::Data(format!("pair record has {} fields: '{line}'", fields.len())));
            }
            let d = (fields.len() - 1) / 2;
            let first = fields[..d].iter().map(|f| parse_field(f)).collect::<Result<Vec<f64>>>()?;
            let second =
                fields[d..2 * d].iter().map(|f| parse_field(f)).collect::<Result<Vec<f64>>>()?;
            centers.push((Point::new(first)?, Point::new(second)?));
            coefficients.push(parse_field(fields[fields.len() - 1])?);
        }
        Self::from_parts(kernel, centers, coefficients)
    }
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
        Kernel::gaussian(1.0, 2.0).unwrap()
    }

    fn random_point(rng: &mut ChaCha8Rng, dim: usize) -> Point {
        pt(&(0..dim).map(|_| rng.random_range(-1.0..1.0)).collect::<Vec<_>>())
    }

    #[test]
    fn zero_expansion() {
        let h = DualExpansion::zero(gauss());
        assert_eq!(h.evaluate(&pt(&[0.3])).unwrap(), 0.0);
        assert_eq!(h.rkhs_norm().unwrap(), 0.0);
        assert!(h.is_empty());
    }

    #[test]
    fn single_center_diagonal() {
        let mut h = DualExpansion::zero(gauss());
        let x = pt(&[0.5, -0.5]);
        h.add_scaled_section(x.clone(), 1.0).unwrap();
        assert_eq!(h.evaluate(&x).unwrap(), 1.0);
        assert!((h.rkhs_norm().unwrap() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn orthogonal_linear_norm() {
        let k = Kernel::linear(2.0).unwrap();
        let h = DualExpansion::from_parts(
            k,
            vec![pt(&[1.0, 0.0]), pt(&[0.0, 1.0])],
            vec![3.0, 4.0],
        )
        .unwrap();
        // Identity Gram: sqrt(9 + 16) = 5.
        assert!((h.rkhs_norm().unwrap() - 5.0).abs() < 1e-12);
    }

    #[test]
    fn zero_weight_is_a_no_op() {
        let mut h = DualExpansion::zero(gauss());
        h.add_scaled_section(pt(&[0.1]), 0.7).unwrap();
        let before = h.evaluate(&pt(&[0.4])).unwrap();
        h.add_scaled_section(pt(&[0.9]), 0.0).unwrap();
        assert_eq!(h.len(), 1);
        assert_eq!(h.evaluate(&pt(&[0.4])).unwrap(), before);
    }

    #[test]
    fn append_linearity() {
        let mut h = DualExpansion::zero(gauss());
        let x1 = pt(&[0.2]);
        let x2 = pt(&[-0.8]);
        h.add_scaled_section(x1.clone(), 0.6).unwrap();
        let v = h.evaluate(&x2).unwrap();
        assert!((v - 0.6 * gauss().eval(&x1, &x2).unwrap()).abs() < 1e-15);
    }

    #[test]
    fn merging_accumulates_weights() {
        let mut merged = DualExpansion::zero_with_merging(gauss());
        let mut plain = DualExpansion::zero(gauss());
        let x = pt(&[0.3, 0.1]);
        for h in [&mut merged, &mut plain] {
            h.add_scaled_section(x.clone(), 0.4).unwrap();
            h.add_scaled_section(x.clone(), -0.1).unwrap();
        }
        assert_eq!(merged.len(), 1);
        assert_eq!(plain.len(), 2);
        assert!((merged.coefficients()[0] - 0.3).abs() < 1e-15);
        let probe = pt(&[-0.2, 0.9]);
        assert!(
            (merged.evaluate(&probe).unwrap() - plain.evaluate(&probe).unwrap()).abs() < 1e-15
        );
        assert!(
            (merged.rkhs_norm().unwrap() - plain.rkhs_norm().unwrap()).abs() < 1e-14
        );
    }

    #[test]
    fn evaluation_is_linear_in_parts() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let k = gauss();
        for _ in 0..50 {
            let n1 = rng.random_range(0..6);
            let n2 = rng.random_range(0..6);
            let mk = |rng: &mut ChaCha8Rng, n: usize| {
                let centers: Vec<Point> = (0..n).map(|_| random_point(rng, 2)).collect();
                let coeffs: Vec<f64> = (0..n).map(|_| rng.random_range(-2.0..2.0)).collect();
                DualExpansion::from_parts(k.clone(), centers, coeffs).unwrap()
            };
            let h1 = mk(&mut rng, n1);
            let h2 = mk(&mut rng, n2);
            let mut sum_centers = h1.centers().to_vec();
            sum_centers.extend_from_slice(h2.centers());
            let mut sum_coeffs = h1.coefficients().to_vec();
            sum_coeffs.extend_from_slice(h2.coefficients());
            let sum = DualExpansion::from_parts(k.clone(), sum_centers, sum_coeffs).unwrap();
            let x = random_point(&mut rng, 2);
            let lhs = sum.evaluate(&x).unwrap();
            let rhs = h1.evaluate(&x).unwrap() + h2.evaluate(&x).unwrap();
            assert!((lhs - rhs).abs() <= 1e-12 * rhs.abs().max(1.0));
        }
    }

    #[test]
    fn reproducing_consistency_single_center() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let kernels =
            [gauss(), Kernel::linear(2.0).unwrap(), Kernel::polynomial(2, 0.5, 2.0).unwrap()];
        for k in kernels {
            for _ in 0..200 {
                let x = random_point(&mut rng, 3);
                let c: f64 = rng.random_range(-3.0..3.0);
                let h =
                    DualExpansion::from_parts(k.clone(), vec![x.clone()], vec![c]).unwrap();
                let expected = c.abs() * k.eval(&x, &x).unwrap().sqrt();
                let got = h.rkhs_norm().unwrap();
                assert!((got - expected).abs() <= 1e-12 * expected.max(1.0));
            }
        }
    }

    #[test]
    fn cauchy_schwarz_evaluation_bound() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let k = gauss();
        for _ in 0..100 {
            let n = rng.random_range(1..8);
            let centers: Vec<Point> = (0..n).map(|_| random_point(&mut rng, 2)).collect();
            let coeffs: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
            let h = DualExpansion::from_parts(k.clone(), centers, coeffs).unwrap();
            let bound = h.rkhs_norm().unwrap() * k.kappa() + 1e-9;
            for _ in 0..20 {
                let x = random_point(&mut rng, 2);
                assert!(h.evaluate(&x).unwrap().abs() <= bound);
            }
        }
    }

    #[test]
    fn incremental_norm_matches_recomputed() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mut h = DualExpansion::zero(gauss());
        for _ in 0..60 {
            h.add_scaled_section(random_point(&mut rng, 2), rng.random_range(-0.5..0.5)).unwrap();
        }
        let inc = h.rkhs_norm().unwrap();
        let full = h.rkhs_norm_recomputed().unwrap();
        assert!((inc - full).abs() <= 1e-10 * full.max(1.0), "{inc} vs {full}");
    }

    #[test]
    fn non_finite_weight_rejected() {
        let mut h = DualExpansion::zero(gauss());
        assert!(h.add_scaled_section(pt(&[0.0]), f64::NAN).is_err());
        assert!(h.add_scaled_section(pt(&[0.0]), f64::INFINITY).is_err());
    }

    #[test]
    fn flat_records_round_trip_pointwise() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let centers: Vec<Point> = (0..7).map(|_| random_point(&mut rng, 3)).collect();
        let coeffs: Vec<f64> = (0..7).map(|_| rng.random_range(-1.0..1.0)).collect();
        let h = DualExpansion::from_parts(gauss(), centers, coeffs).unwrap();
        let mut buf = Vec::new();
        h.write_records(&mut buf).unwrap();
        let back = DualExpansion::<Kernel>::read_records(gauss(), buf.as_slice()).unwrap();
        assert_eq!(h.coefficients(), back.coefficients());
        assert_eq!(h.centers(), back.centers());
    }

    #[test]
    fn flat_records_round_trip_pairwise() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let pk = PairKernel::new(gauss());
        let centers: Vec<(Point, Point)> =
            (0..5).map(|_| (random_point(&mut rng, 2), random_point(&mut rng, 2))).collect();
        let coeffs: Vec<f64> = (0..5).map(|_| rng.random_range(-1.0..1.0)).collect();
        let f = DualExpansion::from_parts(pk.clone(), centers, coeffs).unwrap();
        let mut buf = Vec::new();
        f.write_records(&mut buf).unwrap();
        let back = DualExpansion::<PairKernel>::read_records(pk, buf.as_slice()).unwrap();
        assert_eq!(f.coefficients(), back.coefficients());
        assert_eq!(f.centers(), back.centers());
    }
}
