use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Least-squares fit of `log(error) = slope * log(abscissa) + intercept`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateReport {
    pub label: String,
    pub abscissae: Vec<f64>,
    pub errors: Vec<f64>,
    pub slope: f64,
    pub intercept: f64,
    /// Root-mean-square residual of the fit in log space.
    pub residual: f64,
    /// 95% confidence half-width of the slope (Student t).
    pub half_width: f64,
}

impl RateReport {
    /// Abscissae must be at least three, strictly decreasing, with power-of-two ratios.
    pub fn fit(label: impl Into<String>, abscissae: &[f64], errors: &[f64]) -> Result<Self> {
        let label = label.into();
        if abscissae.len() != errors.len() {
            return Err(Error::InvalidArgument(format!(
                "{label}: {} abscissae but {} errors",
                abscissae.len(),
                errors.len()
            )));
        }
        if abscissae.len() < 3 {
            return Err(Error::InvalidArgument(format!(
                "{label}: a rate fit needs at least 3 abscissae, got {}",
                abscissae.len()
            )));
        }
        for w in abscissae.windows(2) {
            let ratio = w[0] / w[1];
            let log2 = ratio.log2();
            if !(ratio > 1.0) || (log2 - log2.round()).abs() > 1e-9 {
                return Err(Error::InvalidArgument(format!(
                    "{label}: abscissae must decrease by powers of two ({} -> {})",
                    w[0], w[1]
                )));
            }
        }
        if errors.iter().any(|e| !(*e > 0.0 && e.is_finite())) {
            return Err(Error::InvalidArgument(format!(
                "{label}: errors must be positive and finite for a log-log fit: {errors:?}"
            )));
        }
        let xs: Vec<f64> = abscissae.iter().map(|v| v.ln()).collect();
        let ys: Vec<f64> = errors.iter().map(|v| v.ln()).collect();
        let n = xs.len() as f64;
        let mx = xs.iter().sum::<f64>() / n;
        let my = ys.iter().sum::<f64>() / n;
        let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
        let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
        let slope = sxy / sxx;
        let intercept = my - slope * mx;
        let ss: f64 = xs
            .iter()
            .zip(&ys)
            .map(|(x, y)| (y - slope * x - intercept).powi(2))
            .sum();
        let dof = xs.len() - 2;
        let residual = (ss / n).sqrt();
        let half_width = if dof == 0 {
            0.0
        } else {
            t975(dof) * (ss / dof as f64 / sxx).sqrt()
        };
        Ok(Self {
            label,
            abscissae: abscissae.to_vec(),
            errors: errors.to_vec(),
            slope,
            intercept,
            residual,
            half_width,
        })
    }
}

/// Two-sided 95% Student t quantile.
fn t975(dof: usize) -> f64 {
    const TABLE: [f64; 10] = [
        12.706, 4.303, 3.182, 2.776, 2.571, 2.447, 2.365, 2.306, 2.262, 2.228,
    ];
    match dof {
        0 => f64::INFINITY,
        1..=10 => TABLE[dof - 1],
        11..=20 => 2.12,
        21..=40 => 2.04,
        _ => 1.96,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_power_law_recovered() {
        let ks = [0.1, 0.05, 0.025, 0.0125];
        let es: Vec<f64> = ks.iter().map(|k: &f64| 3.0 * k.powf(0.5)).collect();
        let r = RateReport::fit("t", &ks, &es).unwrap();
        assert!((r.slope - 0.5).abs() < 1e-12);
        assert!((r.intercept - 3f64.ln()).abs() < 1e-12);
        assert!(r.residual < 1e-12 && r.half_width < 1e-10);
    }

    #[test]
    fn preconditions() {
        assert!(RateReport::fit("t", &[0.1], &[1.0]).is_err());
        assert!(RateReport::fit("t", &[0.1, 0.05], &[1.0, 0.5]).is_err());
        assert!(RateReport::fit("t", &[0.1, 0.06, 0.03], &[1.0, 0.5, 0.2]).is_err());
        assert!(RateReport::fit("t", &[0.1, 0.05, 0.025], &[1.0, 0.0, 0.2]).is_err());
        assert!(RateReport::fit("t", &[0.1, 0.05, 0.0125], &[1.0, 0.5, 0.2]).is_ok());
    }
}
