//! Candidate traffic-volume models: log-normal, Gaussian, Weibull,
//! exponential and the continuous power law.
//!
//! Densities follow the usual parameterizations:
//!
//! ```text
//! log-normal   ln X ~ N(mu, sigma^2)
//! Weibull      f(x) = (k/lambda) (x/lambda)^(k-1) exp(-(x/lambda)^k),  x >= 0
//! exponential  f(x) = rate exp(-rate x),                              x >= 0
//! power law    f(x) = ((alpha-1)/xmin) (x/xmin)^(-alpha),             x >= xmin
//! ```
//!
//! All five have closed-form CDFs. Normal quantiles go through the inverse
//! complementary error function so both tails keep full relative precision.

pub(crate) mod fit;
mod sample;

use std::f64::consts::SQRT_2;
use std::fmt;
use std::str::FromStr;

use libm::erfc;
use serde::{Deserialize, Serialize};
use statrs::function::erf::erfc_inv;

use crate::error::{Result, VolumaError};

pub use fit::{
    fit, fit_mle, fit_mle_with, fit_powerlaw, fit_powerlaw_at, fit_powerlaw_sorted,
    fit_powerlaw_with, FitOptions, PowerLawFit,
};
pub use sample::{sample, sample_with};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DistKind {
    LogNormal,
    Gaussian,
    Weibull,
    Exponential,
    PowerLaw,
}

impl DistKind {
    pub const ALL: [DistKind; 5] = [
        DistKind::LogNormal,
        DistKind::Gaussian,
        DistKind::Weibull,
        DistKind::Exponential,
        DistKind::PowerLaw,
    ];

    pub fn name(self) -> &'static str {
        match self {
            DistKind::LogNormal => "lognormal",
            DistKind::Gaussian => "gaussian",
            DistKind::Weibull => "weibull",
            DistKind::Exponential => "exponential",
            DistKind::PowerLaw => "powerlaw",
        }
    }
}

impl fmt::Display for DistKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for DistKind {
    type Err = VolumaError;

    fn from_str(s: &str) -> Result<Self> {
        match s
            .trim()
            .to_ascii_lowercase()
            .replace(['-', '_'], "")
            .as_str()
        {
            "lognormal" | "ln" => Ok(DistKind::LogNormal),
            "gaussian" | "normal" => Ok(DistKind::Gaussian),
            "weibull" => Ok(DistKind::Weibull),
            "exponential" | "exp" => Ok(DistKind::Exponential),
            "powerlaw" | "pl" => Ok(DistKind::PowerLaw),
            _ => Err(VolumaError::DomainError(format!(
                "unknown distribution {s:?}"
            ))),
        }
    }
}

/// A fully parameterized model. Serializes as `{"kind": ..., <params>}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum DistributionModel {
    LogNormal { mu: f64, sigma: f64 },
    Gaussian { mean: f64, sd: f64 },
    Weibull { shape: f64, scale: f64 },
    Exponential { rate: f64 },
    PowerLaw { alpha: f64, xmin: f64 },
}

const LN_SQRT_2PI: f64 = 0.918_938_533_204_672_8;

pub(crate) fn std_normal_cdf(z: f64) -> f64 {
    0.5 * erfc(-z / SQRT_2)
}

/// Lower-tail solve with two Newton polishing steps, mirrored for p > 0.5.
pub(crate) fn std_normal_quantile(p: f64) -> f64 {
    let q = p.min(1.0 - p);
    let mut z = -SQRT_2 * erfc_inv(2.0 * q);
    for _ in 0..2 {
        let density = (-0.5 * z * z - LN_SQRT_2PI).exp();
        if !(density > 0.0) {
            break;
        }
        z -= (std_normal_cdf(z) - q) / density;
    }
    if p < 0.5 {
        z
    } else {
        -z
    }
}

fn positive(name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(VolumaError::DomainError(format!(
            "{name} must be positive and finite, got {v}"
        )))
    }
}

fn finite(name: &str, v: f64) -> Result<()> {
    if v.is_finite() {
        Ok(())
    } else {
        Err(VolumaError::DomainError(format!(
            "{name} must be finite, got {v}"
        )))
    }
}

impl DistributionModel {
    pub fn log_normal(mu: f64, sigma: f64) -> Result<Self> {
        Self::LogNormal { mu, sigma }.validated()
    }

    pub fn gaussian(mean: f64, sd: f64) -> Result<Self> {
        Self::Gaussian { mean, sd }.validated()
    }

    pub fn weibull(shape: f64, scale: f64) -> Result<Self> {
        Self::Weibull { shape, scale }.validated()
    }

    pub fn exponential(rate: f64) -> Result<Self> {
        Self::Exponential { rate }.validated()
    }

    pub fn power_law(alpha: f64, xmin: f64) -> Result<Self> {
        Self::PowerLaw { alpha, xmin }.validated()
    }

    pub fn validated(self) -> Result<Self> {
        match self {
            Self::LogNormal { mu, sigma } => {
                finite("mu", mu)?;
                positive("sigma", sigma)?;
            }
            Self::Gaussian { mean, sd } => {
                finite("mean", mean)?;
                positive("sd", sd)?;
            }
            Self::Weibull { shape, scale } => {
                positive("shape", shape)?;
                positive("scale", scale)?;
            }
            Self::Exponential { rate } => positive("rate", rate)?,
            Self::PowerLaw { alpha, xmin } => {
                if !(alpha > 1.0 && alpha.is_finite()) {
                    return Err(VolumaError::DomainError(format!(
                        "alpha must exceed 1, got {alpha}"
                    )));
                }
                positive("xmin", xmin)?;
            }
        }
        Ok(self)
    }

    pub fn kind(&self) -> DistKind {
        match self {
            Self::LogNormal { .. } => DistKind::LogNormal,
            Self::Gaussian { .. } => DistKind::Gaussian,
            Self::Weibull { .. } => DistKind::Weibull,
            Self::Exponential { .. } => DistKind::Exponential,
            Self::PowerLaw { .. } => DistKind::PowerLaw,
        }
    }

    /// Lower end of the support.
    pub fn support_min(&self) -> f64 {
        match *self {
            Self::Gaussian { .. } => f64::NEG_INFINITY,
            Self::PowerLaw { xmin, .. } => xmin,
            _ => 0.0,
        }
    }

    pub fn ln_pdf(&self, x: f64) -> f64 {
        match *self {
            Self::LogNormal { mu, sigma } => {
                if x <= 0.0 {
                    return f64::NEG_INFINITY;
                }
                let lx = x.ln();
                let z = (lx - mu) / sigma;
                -lx - sigma.ln() - LN_SQRT_2PI - 0.5 * z * z
            }
            Self::Gaussian { mean, sd } => {
                let z = (x - mean) / sd;
                -sd.ln() - LN_SQRT_2PI - 0.5 * z * z
            }
            Self::Weibull { shape, scale } => {
                if x < 0.0 {
                    return f64::NEG_INFINITY;
                }
                if x == 0.0 {
                    return match shape.partial_cmp(&1.0) {
                        Some(std::cmp::Ordering::Less) => f64::INFINITY,
                        Some(std::cmp::Ordering::Equal) => -scale.ln(),
                        _ => f64::NEG_INFINITY,
                    };
                }
                let lr = x.ln() - scale.ln();
                shape.ln() - scale.ln() + (shape - 1.0) * lr - (shape * lr).exp()
            }
            Self::Exponential { rate } => {
                if x < 0.0 {
                    f64::NEG_INFINITY
                } else {
                    rate.ln() - rate * x
                }
            }
            Self::PowerLaw { alpha, xmin } => {
                if x < xmin {
                    f64::NEG_INFINITY
                } else {
                    (alpha - 1.0).ln() - xmin.ln() - alpha * (x.ln() - xmin.ln())
                }
            }
        }
    }

    pub fn pdf(&self, x: f64) -> f64 {
        self.ln_pdf(x).exp()
    }

    pub fn cdf(&self, x: f64) -> f64 {
        match *self {
            Self::LogNormal { mu, sigma } => {
                if x <= 0.0 {
                    0.0
                } else {
                    std_normal_cdf((x.ln() - mu) / sigma)
                }
            }
            Self::Gaussian { mean, sd } => std_normal_cdf((x - mean) / sd),
            Self::Weibull { shape, scale } => {
                if x <= 0.0 {
                    0.0
                } else {
                    -(-(x / scale).powf(shape)).exp_m1()
                }
            }
            Self::Exponential { rate } => {
                if x <= 0.0 {
                    0.0
                } else {
                    -(-rate * x).exp_m1()
                }
            }
            Self::PowerLaw { alpha, xmin } => {
                if x < xmin {
                    0.0
                } else {
                    -((1.0 - alpha) * (x.ln() - xmin.ln())).exp_m1()
                }
            }
        }
    }

    /// Inverse CDF on the open interval (0, 1).
    pub fn quantile(&self, p: f64) -> Result<f64> {
        if !(p > 0.0 && p < 1.0) {
            return Err(VolumaError::DomainError(format!(
                "quantile level must lie in (0, 1), got {p}"
            )));
        }
        Ok(self.quantile_unchecked(p))
    }

    pub(crate) fn quantile_unchecked(&self, p: f64) -> f64 {
        match *self {
            Self::LogNormal { mu, sigma } => (mu + sigma * std_normal_quantile(p)).exp(),
            Self::Gaussian { mean, sd } => mean + sd * std_normal_quantile(p),
            Self::Weibull { shape, scale } => scale * (-(-p).ln_1p()).powf(1.0 / shape),
            Self::Exponential { rate } => -(-p).ln_1p() / rate,
            Self::PowerLaw { alpha, xmin } => xmin * (1.0 - p).powf(-1.0 / (alpha - 1.0)),
        }
    }

    /// Mean of the distribution, when finite.
    pub fn mean(&self) -> Option<f64> {
        match *self {
            Self::LogNormal { mu, sigma } => Some((mu + 0.5 * sigma * sigma).exp()),
            Self::Gaussian { mean, .. } => Some(mean),
            Self::Weibull { shape, scale } => Some(scale * libm::tgamma(1.0 + 1.0 / shape)),
            Self::Exponential { rate } => Some(1.0 / rate),
            Self::PowerLaw { alpha, xmin } => {
                (alpha > 2.0).then(|| xmin * (alpha - 1.0) / (alpha - 2.0))
            }
        }
    }
}

impl fmt::Display for DistributionModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::LogNormal { mu, sigma } => write!(f, "lognormal(mu={mu}, sigma={sigma})"),
            Self::Gaussian { mean, sd } => write!(f, "gaussian(mean={mean}, sd={sd})"),
            Self::Weibull { shape, scale } => write!(f, "weibull(shape={shape}, scale={scale})"),
            Self::Exponential { rate } => write!(f, "exponential(rate={rate})"),
            Self::PowerLaw { alpha, xmin } => write!(f, "powerlaw(alpha={alpha}, xmin={xmin})"),
        }
    }
}

/// Parses `kind:a,b` or `kind:name=a,name=b`, e.g. `lognormal:mu=2,sigma=0.5`
/// or `weibull:1.5,2`. Positional parameters follow the field order above.
impl FromStr for DistributionModel {
    type Err = VolumaError;

    fn from_str(s: &str) -> Result<Self> {
        let (kind, rest) = s.split_once(':').ok_or_else(|| {
            VolumaError::DomainError(format!("model spec {s:?} needs the form kind:params"))
        })?;
        let kind: DistKind = kind.parse()?;
        let names: &[&str] = match kind {
            DistKind::LogNormal => &["mu", "sigma"],
            DistKind::Gaussian => &["mean", "sd"],
            DistKind::Weibull => &["shape", "scale"],
            DistKind::Exponential => &["rate"],
            DistKind::PowerLaw => &["alpha", "xmin"],
        };
        let mut values = vec![None; names.len()];
        for (pos, part) in rest.split(',').enumerate() {
            let (slot, text) = match part.split_once('=') {
                Some((name, v)) => {
                    let name = name.trim();
                    let slot = names.iter().position(|n| *n == name).ok_or_else(|| {
                        VolumaError::DomainError(format!("{kind} has no parameter {name:?}"))
                    })?;
                    (slot, v)
                }
                None => (pos, part),
            };
            if slot >= names.len() {
                return Err(VolumaError::DomainError(format!(
                    "{kind} takes {} parameters",
                    names.len()
                )));
            }
            let v: f64 = text.trim().parse().map_err(|_| {
                VolumaError::DomainError(format!("bad value {text:?} for {}", names[slot]))
            })?;
            values[slot] = Some(v);
        }
        let get = |i: usize| {
            values[i]
                .ok_or_else(|| VolumaError::DomainError(format!("{kind} is missing {}", names[i])))
        };
        match kind {
            DistKind::LogNormal => Self::log_normal(get(0)?, get(1)?),
            DistKind::Gaussian => Self::gaussian(get(0)?, get(1)?),
            DistKind::Weibull => Self::weibull(get(0)?, get(1)?),
            DistKind::Exponential => Self::exponential(get(0)?),
            DistKind::PowerLaw => Self::power_law(get(0)?, get(1)?),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn quantile_examples() {
        let ln = DistributionModel::log_normal(0.0, 1.0).unwrap();
        assert!(close(ln.quantile(0.5).unwrap(), 1.0, 1e-15));

        let w = DistributionModel::weibull(1.0, 1.0).unwrap();
        let p = 1.0 - (-1.0f64).exp();
        assert!(close(w.quantile(p).unwrap(), 1.0, 1e-12));

        // reference value of the standard normal 95% point
        let g = DistributionModel::gaussian(0.0, 1.0).unwrap();
        assert!(close(
            g.quantile(0.95).unwrap(),
            1.644_853_626_951_472_7,
            1e-12
        ));
        assert!(close(
            g.quantile(0.05).unwrap(),
            -1.644_853_626_951_472_7,
            1e-12
        ));
    }

    #[test]
    fn cdf_examples() {
        let e = DistributionModel::exponential(1.0).unwrap();
        assert!(close(e.cdf(2f64.ln()), 0.5, 1e-15));
        let pl = DistributionModel::power_law(2.5, 1.0).unwrap();
        assert_eq!(pl.cdf(0.5), 0.0);
        assert_eq!(pl.cdf(1.0), 0.0);
        assert!(close(pl.cdf(4.0), 1.0 - 4f64.powf(-1.5), 1e-15));
    }

    #[test]
    fn quantile_domain() {
        let g = DistributionModel::gaussian(0.0, 1.0).unwrap();
        for p in [0.0, 1.0, -0.1, 1.5, f64::NAN] {
            assert!(matches!(g.quantile(p), Err(VolumaError::DomainError(_))));
        }
    }

    #[test]
    fn normal_tails_keep_precision() {
        // cdf(quantile(p)) recovers p in both tails
        for p in [1e-300, 1e-100, 1e-15, 1e-6, 0.3, 0.5, 0.9, 1.0 - 1e-9] {
            let z = std_normal_quantile(p);
            let back = std_normal_cdf(z);
            assert!((back - p).abs() <= 1e-12 * p.max(1e-3), "p={p} back={back}");
        }
    }

    #[test]
    fn parameter_validation() {
        assert!(DistributionModel::log_normal(0.0, 0.0).is_err());
        assert!(DistributionModel::gaussian(f64::NAN, 1.0).is_err());
        assert!(DistributionModel::weibull(-1.0, 1.0).is_err());
        assert!(DistributionModel::exponential(0.0).is_err());
        assert!(DistributionModel::power_law(1.0, 1.0).is_err());
        assert!(DistributionModel::power_law(2.0, 0.0).is_err());
    }

    #[test]
    fn json_shape() {
        let m = DistributionModel::log_normal(2.0, 0.5).unwrap();
        let v = serde_json::to_value(m).unwrap();
        assert_eq!(
            v,
            serde_json::json!({"kind": "lognormal", "mu": 2.0, "sigma": 0.5})
        );
        let back: DistributionModel = serde_json::from_value(v).unwrap();
        assert_eq!(back, m);
        let v = serde_json::to_value(DistributionModel::power_law(2.5, 1.0).unwrap()).unwrap();
        assert_eq!(v["kind"], "powerlaw");
    }

    #[test]
    fn spec_strings() {
        let m: DistributionModel = "lognormal:mu=2,sigma=0.5".parse().unwrap();
        assert_eq!(
            m,
            DistributionModel::LogNormal {
                mu: 2.0,
                sigma: 0.5
            }
        );
        let m: DistributionModel = "weibull:1.5,2".parse().unwrap();
        assert_eq!(
            m,
            DistributionModel::Weibull {
                shape: 1.5,
                scale: 2.0
            }
        );
        assert!("weibull:1.5".parse::<DistributionModel>().is_err());
        assert!("lognormal:mu=2,tau=1".parse::<DistributionModel>().is_err());
        assert_eq!("Power-Law".parse::<DistKind>().unwrap(), DistKind::PowerLaw);
    }

    #[test]
    fn weibull_density_matches_closed_form() {
        let (k, l) = (1.5, 2.0);
        let w = DistributionModel::weibull(k, l).unwrap();
        for x in [0.1, 1.0, 2.0, 5.0] {
            let expected: f64 = k / l * (x / l).powf(k - 1.0) * (-(x / l).powf(k)).exp();
            assert!(close(w.pdf(x), expected, 1e-14));
        }
    }
}
