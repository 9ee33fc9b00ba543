//! Predictive-distribution families: density, CDF, seeded sampling, NLL.
//!
//! Four families cover the models evaluated by this crate: Gaussian, Poisson,
//! Negative Binomial (number-of-failures convention, real-valued `r`), and the
//! Double Poisson. The Double Poisson mass is Efron's form
//! `phi^(1/2) e^(-phi*mu) (e^-y y^y / y!) (e*mu/y)^(phi*y)`, normalized
//! exactly by summation over a truncated support rather than the usual
//! `c ~ 1` approximation, so at `phi = 1` it collapses to the Poisson pmf.
//!
//! All discrete mass evaluation happens in log space through `ln_gamma`;
//! factorials of desk-scale counts would overflow long before the mass
//! underflows.

use crate::error::{Error, Result};
use rand::Rng;
use rand_distr::StandardNormal;
use statrs::distribution::{Continuous, ContinuousCDF, Discrete, NegativeBinomial, Normal, Poisson};
use statrs::function::gamma::ln_gamma;

/// Largest count value treated as representable; beyond this the mass is zero.
const MAX_COUNT: f64 = 9.0e18;

/// Truncation bound for normalizing and sampling unbounded discrete families.
///
/// Construction extends `upper` until the mass at the bound is both decaying
/// and at least ~50 orders of magnitude below the peak, which bounds the
/// discarded tail far under 1e-12.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DiscreteSupport {
    pub lower: u64,
    pub upper: u64,
}

/// A single predictive distribution over the output space.
#[derive(Debug, Clone, PartialEq)]
pub enum PredictiveDistribution {
    Gaussian { mu: f64, sigma2: f64 },
    Poisson { rate: f64 },
    NegativeBinomial { r: f64, p: f64 },
    DoublePoisson { mu: f64, phi: f64 },
}

use PredictiveDistribution as Dist;

impl PredictiveDistribution {
    pub fn gaussian(mu: f64, sigma2: f64) -> Result<Self> {
        if !mu.is_finite() || !sigma2.is_finite() || sigma2 <= 0.0 {
            return Err(Error::InvalidParameter(format!(
                "gaussian requires finite mu and sigma2 > 0, got ({mu}, {sigma2})"
            )));
        }
        Ok(Dist::Gaussian { mu, sigma2 })
    }

    pub fn poisson(rate: f64) -> Result<Self> {
        if !rate.is_finite() || rate <= 0.0 {
            return Err(Error::InvalidParameter(format!(
                "poisson requires rate > 0, got {rate}"
            )));
        }
        Ok(Dist::Poisson { rate })
    }

    /// Mass at `y` failures before the `r`-th success: `C(y+r-1, y) p^r (1-p)^y`,
    /// mean `r(1-p)/p`, variance `r(1-p)/p^2`.
    pub fn negative_binomial(r: f64, p: f64) -> Result<Self> {
        if !r.is_finite() || r <= 0.0 || p.is_nan() || p <= 0.0 || p >= 1.0 {
            return Err(Error::InvalidParameter(format!(
                "negative binomial requires r > 0 and p in (0,1), got ({r}, {p})"
            )));
        }
        Ok(Dist::NegativeBinomial { r, p })
    }

    pub fn double_poisson(mu: f64, phi: f64) -> Result<Self> {
        if !mu.is_finite() || mu <= 0.0 || !phi.is_finite() || phi <= 0.0 {
            return Err(Error::InvalidParameter(format!(
                "double poisson requires mu > 0 and phi > 0, got ({mu}, {phi})"
            )));
        }
        Ok(Dist::DoublePoisson { mu, phi })
    }

    /// Negative Binomial with the requested mean and variance:
    /// `r = mean^2 / (variance - mean)`, `p = mean / variance`.
    pub fn nb_from_moments(mean: f64, variance: f64) -> Result<Self> {
        if !mean.is_finite() || mean <= 0.0 {
            return Err(Error::InvalidParameter(format!(
                "nb_from_moments requires mean > 0, got {mean}"
            )));
        }
        if variance.is_nan() || variance <= mean {
            return Err(Error::InvalidParameter(format!(
                "negative binomial needs variance > mean, got variance {variance} vs mean {mean}"
            )));
        }
        Self::negative_binomial(mean * mean / (variance - mean), mean / variance)
    }

    pub fn is_discrete(&self) -> bool {
        !matches!(self, Dist::Gaussian { .. })
    }

    /// Canonical family tag, also used in the serialized prediction format.
    pub fn family_name(&self) -> &'static str {
        match self {
            Dist::Gaussian { .. } => "gaussian",
            Dist::Poisson { .. } => "poisson",
            Dist::NegativeBinomial { .. } => "negbinom",
            Dist::DoublePoisson { .. } => "doublepoisson",
        }
    }

    /// Parameters in the family's canonical order.
    pub fn params(&self) -> Vec<f64> {
        match *self {
            Dist::Gaussian { mu, sigma2 } => vec![mu, sigma2],
            Dist::Poisson { rate } => vec![rate],
            Dist::NegativeBinomial { r, p } => vec![r, p],
            Dist::DoublePoisson { mu, phi } => vec![mu, phi],
        }
    }

    /// Inverse of [`family_name`](Self::family_name) / [`params`](Self::params).
    pub fn from_params(family: &str, params: &[f64]) -> Result<Self> {
        let want = |k: usize| -> Result<()> {
            if params.len() == k {
                Ok(())
            } else {
                Err(Error::InvalidParameter(format!(
                    "family {family} takes {k} parameters, got {}",
                    params.len()
                )))
            }
        };
        match family {
            "gaussian" => {
                want(2)?;
                Self::gaussian(params[0], params[1])
            }
            "poisson" => {
                want(1)?;
                Self::poisson(params[0])
            }
            "negbinom" => {
                want(2)?;
                Self::negative_binomial(params[0], params[1])
            }
            "doublepoisson" => {
                want(2)?;
                Self::double_poisson(params[0], params[1])
            }
            other => Err(Error::InvalidParameter(format!(
                "unknown distribution family: {other}"
            ))),
        }
    }

    /// Analytic mean (the Double Poisson uses its nominal mean `mu`).
    pub fn mean(&self) -> f64 {
        match *self {
            Dist::Gaussian { mu, .. } => mu,
            Dist::Poisson { rate } => rate,
            Dist::NegativeBinomial { r, p } => r * (1.0 - p) / p,
            Dist::DoublePoisson { mu, .. } => mu,
        }
    }

    /// Analytic variance (the Double Poisson uses its nominal `mu/phi`).
    pub fn variance(&self) -> f64 {
        match *self {
            Dist::Gaussian { sigma2, .. } => sigma2,
            Dist::Poisson { rate } => rate,
            Dist::NegativeBinomial { r, p } => r * (1.0 - p) / (p * p),
            Dist::DoublePoisson { mu, phi } => mu / phi,
        }
    }

    /// Truncation support for discrete families; `None` for the Gaussian.
    pub fn support(&self) -> Option<DiscreteSupport> {
        if !self.is_discrete() {
            return None;
        }
        let mean = self.mean();
        let sd = self.variance().max(1.0).sqrt();
        let mut upper = (mean + 30.0 * sd).ceil() as u64 + 10;
        let peak = self.raw_log_mass(mean.floor() as u64);
        loop {
            let at_bound = self.raw_log_mass(upper);
            if at_bound < self.raw_log_mass(upper - 1) && at_bound - peak < -120.0 {
                break;
            }
            upper += upper / 2 + 16;
            if upper >= 1 << 40 {
                debug_assert!(false, "support truncation failed to converge");
                break;
            }
        }
        Some(DiscreteSupport { lower: 0, upper })
    }

    /// Log mass up to the family's normalization constant.
    fn raw_log_mass(&self, k: u64) -> f64 {
        match *self {
            Dist::Gaussian { .. } => unreachable!("no discrete mass for gaussian"),
            Dist::Poisson { rate } => {
                let kf = k as f64;
                kf * rate.ln() - rate - ln_gamma(kf + 1.0)
            }
            Dist::NegativeBinomial { r, p } => {
                let kf = k as f64;
                ln_gamma(kf + r) - ln_gamma(r) - ln_gamma(kf + 1.0)
                    + r * p.ln()
                    + kf * (1.0 - p).ln()
            }
            Dist::DoublePoisson { mu, phi } => dp_log_unnorm(mu, phi, k),
        }
    }

    fn log_density(&self, y: f64) -> Result<f64> {
        match *self {
            Dist::Gaussian { mu, sigma2 } => {
                let normal = Normal::new(mu, sigma2.sqrt()).expect("validated parameters");
                Ok(normal.ln_pdf(y))
            }
            _ => {
                let k = check_count(y)?;
                if y > MAX_COUNT {
                    return Ok(f64::NEG_INFINITY);
                }
                match *self {
                    Dist::DoublePoisson { mu, phi } => {
                        let sup = self.support().expect("discrete support");
                        Ok(dp_log_unnorm(mu, phi, k) - dp_log_norm(mu, phi, sup.upper))
                    }
                    _ => Ok(self.raw_log_mass(k)),
                }
            }
        }
    }

    /// Probability density (Gaussian) or exactly normalized mass (discrete).
    pub fn density(&self, y: f64) -> Result<f64> {
        Ok(self.log_density(y)?.exp())
    }

    /// Negative log likelihood, `-log(density)`. Where the density underflows
    /// to zero this returns `f64::INFINITY` as a flagged value, not an error.
    pub fn nll(&self, y: f64) -> Result<f64> {
        let ld = self.log_density(y)?;
        if ld.exp() == 0.0 {
            Ok(f64::INFINITY)
        } else {
            Ok(-ld)
        }
    }

    /// Cumulative distribution function. For discrete families this is the
    /// right-continuous step function evaluated at `floor(y)`.
    pub fn cdf(&self, y: f64) -> f64 {
        match *self {
            Dist::Gaussian { mu, sigma2 } => {
                let normal = Normal::new(mu, sigma2.sqrt()).expect("validated parameters");
                normal.cdf(y)
            }
            _ => {
                if y < 0.0 {
                    return 0.0;
                }
                let table = self.pmf_table().expect("discrete table");
                let k = y.floor().min(table.len() as f64 - 1.0) as usize;
                table[..=k].iter().sum::<f64>().min(1.0)
            }
        }
    }

    /// Normalized mass over `0..=upper` for a discrete family.
    fn pmf_table(&self) -> Option<Vec<f64>> {
        let sup = self.support()?;
        let upper = sup.upper as usize;
        match *self {
            Dist::DoublePoisson { mu, phi } => {
                let logs: Vec<f64> = (0..=upper as u64).map(|k| dp_log_unnorm(mu, phi, k)).collect();
                let z = log_sum_exp(&logs);
                Some(logs.iter().map(|&l| (l - z).exp()).collect())
            }
            Dist::Poisson { rate } => {
                let d = Poisson::new(rate).expect("validated parameters");
                Some((0..=upper as u64).map(|k| d.pmf(k)).collect())
            }
            Dist::NegativeBinomial { r, p } => {
                let d = NegativeBinomial::new(r, p).expect("validated parameters");
                Some((0..=upper as u64).map(|k| d.pmf(k)).collect())
            }
            Dist::Gaussian { .. } => None,
        }
    }

    /// `count` draws, deterministic for a fixed seed.
    pub fn sample(&self, count: usize, seed: u64) -> Vec<f64> {
        let mut rng = crate::seeding::seeded_stream(seed, "distributions/sample");
        self.sample_with_rng(count, &mut rng)
    }

    /// `count` draws from a caller-provided generator. Discrete families are
    /// sampled by inverse CDF over the truncated support; the Gaussian by a
    /// standard-normal transform.
    pub fn sample_with_rng<R: Rng + ?Sized>(&self, count: usize, rng: &mut R) -> Vec<f64> {
        match *self {
            Dist::Gaussian { mu, sigma2 } => {
                let sd = sigma2.sqrt();
                (0..count)
                    .map(|_| mu + sd * rng.sample::<f64, _>(StandardNormal))
                    .collect()
            }
            _ => {
                let table = self.pmf_table().expect("discrete table");
                let mut cum = Vec::with_capacity(table.len());
                let mut acc = 0.0;
                for &p in &table {
                    acc += p;
                    cum.push(acc);
                }
                let top = cum.len() - 1;
                (0..count)
                    .map(|_| {
                        let u: f64 = rng.gen();
                        cum.partition_point(|&c| c < u).min(top) as f64
                    })
                    .collect()
            }
        }
    }
}

fn check_count(y: f64) -> Result<u64> {
    if y < 0.0 || y.fract() != 0.0 || !y.is_finite() {
        return Err(Error::NonIntegerCount(y));
    }
    Ok(if y > MAX_COUNT { 0 } else { y as u64 })
}

/// Efron's unnormalized Double Poisson log mass; the `y = 0` term is
/// `0.5 ln(phi) - phi*mu`.
fn dp_log_unnorm(mu: f64, phi: f64, y: u64) -> f64 {
    let base = 0.5 * phi.ln() - phi * mu;
    if y == 0 {
        return base;
    }
    let yf = y as f64;
    base - yf + yf * yf.ln() - ln_gamma(yf + 1.0) + phi * yf * (1.0 + mu.ln() - yf.ln())
}

fn dp_log_norm(mu: f64, phi: f64, upper: u64) -> f64 {
    let logs: Vec<f64> = (0..=upper).map(|k| dp_log_unnorm(mu, phi, k)).collect();
    log_sum_exp(&logs)
}

fn log_sum_exp(vals: &[f64]) -> f64 {
    let m = vals.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY {
        return m;
    }
    m + vals.iter().map(|&v| (v - m).exp()).sum::<f64>().ln()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn poisson_density_hand_value() {
        let d = Dist::poisson(1.0).unwrap();
        assert!((d.density(0.0).unwrap() - (-1.0f64).exp()).abs() < 1e-15);
    }

    #[test]
    fn gaussian_density_hand_value() {
        let d = Dist::gaussian(0.0, 1.0).unwrap();
        let want = 1.0 / (2.0 * std::f64::consts::PI).sqrt();
        assert!((d.density(0.0).unwrap() - want).abs() < 1e-15);
    }

    #[test]
    fn double_poisson_at_phi_one_is_poisson() {
        for &mu in &[0.5, 3.0, 17.0] {
            let dp = Dist::double_poisson(mu, 1.0).unwrap();
            let po = Dist::poisson(mu).unwrap();
            let upper = po.support().unwrap().upper;
            for k in 0..=upper.min(200) {
                let a = dp.density(k as f64).unwrap();
                let b = po.density(k as f64).unwrap();
                assert!((a - b).abs() < 1e-12, "mu={mu} k={k}: {a} vs {b}");
            }
        }
    }

    #[test]
    fn discrete_pmf_sums_to_one() {
        let dists = [
            Dist::poisson(0.5).unwrap(),
            Dist::poisson(7.0).unwrap(),
            Dist::negative_binomial(2.0, 0.5).unwrap(),
            Dist::nb_from_moments(4.0, 9.0).unwrap(),
            Dist::double_poisson(3.0, 0.5).unwrap(),
            Dist::double_poisson(12.0, 6.0).unwrap(),
        ];
        for d in &dists {
            let total: f64 = d.pmf_table().unwrap().iter().sum();
            assert!((total - 1.0).abs() < 1e-9, "{}: total {total}", d.family_name());
        }
    }

    #[test]
    fn truncated_tail_mass_is_negligible() {
        // analytic pmfs summed over the support leave less than 1e-12 outside
        for d in [
            Dist::poisson(3.0).unwrap(),
            Dist::poisson(40.0).unwrap(),
            Dist::negative_binomial(2.0, 0.5).unwrap(),
            Dist::negative_binomial(0.5, 0.1).unwrap(),
        ] {
            let upper = d.support().unwrap().upper;
            let total: f64 = (0..=upper).map(|k| d.density(k as f64).unwrap()).sum();
            assert!(1.0 - total < 1e-12, "{} tail {}", d.family_name(), 1.0 - total);
        }
    }

    #[test]
    fn cdf_matches_prefix_sums() {
        let d = Dist::poisson(2.0).unwrap();
        assert_eq!(d.cdf(-1.0), 0.0);
        let want = (-2.0f64).exp() * 3.0;
        assert!((d.cdf(1.0) - want).abs() < 1e-12);
        assert!((d.cdf(1.9) - want).abs() < 1e-12, "step function uses floor");

        let nb = Dist::negative_binomial(1.5, 0.4).unwrap();
        let mut acc = 0.0;
        for k in 0..40 {
            acc += nb.density(k as f64).unwrap();
            assert!((nb.cdf(k as f64) - acc).abs() < 1e-10);
        }
        let upper = nb.support().unwrap().upper as f64;
        assert!((nb.cdf(upper + 5.0) - 1.0).abs() < 1e-9);
    }

    #[test]
    fn gaussian_cdf_median() {
        let d = Dist::gaussian(3.0, 4.0).unwrap();
        assert!((d.cdf(3.0) - 0.5).abs() < 1e-12);
    }

    #[test]
    fn nll_hand_values() {
        let g = Dist::gaussian(0.0, 1.0).unwrap();
        let want = 0.5 * (2.0 * std::f64::consts::PI).ln();
        assert!((g.nll(0.0).unwrap() - want).abs() < 1e-12);
        let p = Dist::poisson(1.0).unwrap();
        assert!((p.nll(0.0).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn nll_far_tail_without_overflow() {
        let d = Dist::poisson(3.0).unwrap();
        let got = d.nll(200.0).unwrap();
        let want = -(200.0 * 3.0f64.ln() - 3.0 - ln_gamma(201.0));
        assert!(got.is_finite());
        assert!((got - want).abs() < 1e-9, "{got} vs {want}");
    }

    #[test]
    fn nll_flags_underflowed_density() {
        let d = Dist::poisson(3.0).unwrap();
        assert_eq!(d.density(2000.0).unwrap(), 0.0);
        assert_eq!(d.nll(2000.0).unwrap(), f64::INFINITY);
    }

    #[test]
    fn nll_equals_minus_log_density() {
        let cases = [
            (Dist::poisson(4.0).unwrap(), 7.0),
            (Dist::negative_binomial(2.0, 0.3).unwrap(), 11.0),
            (Dist::double_poisson(6.0, 2.0).unwrap(), 4.0),
            (Dist::gaussian(1.0, 0.25).unwrap(), 0.2),
        ];
        for (d, y) in cases {
            let density = d.density(y).unwrap();
            assert!(density > 1e-300);
            assert!((d.nll(y).unwrap() - (-density.ln())).abs() < 1e-12);
        }
    }

    #[test]
    fn discrete_rejects_invalid_targets() {
        let d = Dist::poisson(2.0).unwrap();
        assert!(matches!(d.density(0.5), Err(Error::NonIntegerCount(_))));
        assert!(matches!(d.density(-1.0), Err(Error::NonIntegerCount(_))));
        assert!(d.density(3.0).is_ok());
    }

    #[test]
    fn nb_from_moments_hand_value() {
        let d = Dist::nb_from_moments(2.0, 4.0).unwrap();
        match d {
            Dist::NegativeBinomial { r, p } => {
                assert!((r - 2.0).abs() < 1e-15);
                assert!((p - 0.5).abs() < 1e-15);
            }
            _ => panic!("wrong family"),
        }
        assert!(Dist::nb_from_moments(2.0, 2.0).is_err());
        for (mean, var) in [(0.7, 1.9), (5.0, 5.5), (12.0, 40.0)] {
            let d = Dist::nb_from_moments(mean, var).unwrap();
            assert!((d.mean() - mean).abs() < 1e-12);
            assert!((d.variance() - var).abs() < 1e-12);
        }
    }

    #[test]
    fn sampling_is_deterministic() {
        let d = Dist::double_poisson(5.0, 0.8).unwrap();
        assert_eq!(d.sample(100, 7), d.sample(100, 7));
        assert_ne!(d.sample(100, 7), d.sample(100, 8));
    }

    #[test]
    fn sample_moments_match() {
        let g = Dist::gaussian(3.0, 4.0).unwrap();
        let draws = g.sample(50_000, 0);
        let mean = draws.iter().sum::<f64>() / draws.len() as f64;
        let var = draws.iter().map(|d| (d - mean) * (d - mean)).sum::<f64>()
            / (draws.len() - 1) as f64;
        assert!((mean - 3.0).abs() < 0.05, "mean {mean}");
        assert!((var - 4.0).abs() < 0.15, "var {var}");

        let p = Dist::poisson(5.0).unwrap();
        let draws = p.sample(50_000, 1);
        let mean = draws.iter().sum::<f64>() / draws.len() as f64;
        let var = draws.iter().map(|d| (d - mean) * (d - mean)).sum::<f64>()
            / (draws.len() - 1) as f64;
        assert!((mean / var - 1.0).abs() < 0.05, "mean {mean} vs var {var}");
    }

    #[test]
    fn params_round_trip() {
        let dists = [
            Dist::gaussian(1.5, 2.0).unwrap(),
            Dist::poisson(3.0).unwrap(),
            Dist::negative_binomial(2.5, 0.4).unwrap(),
            Dist::double_poisson(8.0, 1.5).unwrap(),
        ];
        for d in dists {
            let back = Dist::from_params(d.family_name(), &d.params()).unwrap();
            assert_eq!(back, d);
        }
        assert!(Dist::from_params("cauchy", &[0.0, 1.0]).is_err());
        assert!(Dist::from_params("poisson", &[1.0, 2.0]).is_err());
    }
}
