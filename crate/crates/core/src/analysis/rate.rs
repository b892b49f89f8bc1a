use crate::error::{Error, Result};
use std::io::Write;

/// Least-squares line through `(log n, log error)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RateFit {
    pub slope: f64,
    pub intercept: f64,
    pub residual_rms: f64,
}

impl RateFit {
    /// Placeholder when the errors vanish and no line can be fitted.
    pub fn undefined() -> Self {
        Self {
            slope: f64::NAN,
            intercept: f64::NAN,
            residual_rms: f64::NAN,
        }
    }
}

pub fn fit_rate(points: &[(f64, f64)]) -> Result<RateFit> {
    if points.len() < 2 {
        return Err(Error::domain("rate fit needs at least two points"));
    }
    if let Some(&(n, e)) = points.iter().find(|&&(n, e)| !(e > 0.0) || !(n > 0.0)) {
        return Err(Error::domain(format!(
            "rate fit needs positive n and error, got ({n}, {e})"
        )));
    }
    let xs: Vec<f64> = points.iter().map(|p| p.0.ln()).collect();
    let ys: Vec<f64> = points.iter().map(|p| p.1.ln()).collect();
    let k = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / k;
    let my = ys.iter().sum::<f64>() / k;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::domain("rate fit needs at least two distinct n"));
    }
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let rss: f64 = xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| (y - intercept - slope * x).powi(2))
        .sum();
    Ok(RateFit {
        slope,
        intercept,
        residual_rms: (rss / k).sqrt(),
    })
}

/// Per-`n` error estimates with a fitted log-log slope.
#[derive(Debug, Clone, PartialEq)]
pub struct RateReport {
    pub model: String,
    pub scheme: String,
    pub hurst: f64,
    pub seed: u64,
    /// Paths requested.
    pub paths: usize,
    /// Paths excluded after divergence.
    pub diverged: usize,
    pub n_values: Vec<usize>,
    pub errors: Vec<f64>,
    pub std_errors: Vec<f64>,
    /// Paths that entered each estimate.
    pub used_paths: Vec<usize>,
    pub fit: RateFit,
    pub expected_slope: f64,
    /// Hypotheses of the rate result the model does not satisfy.
    pub warnings: Vec<String>,
}

impl RateReport {
    /// Footer-style summary `slope=<v> expected=<v> |Δ|=<v>`.
    pub fn summary(&self) -> String {
        format!(
            "slope={:.4} expected={:.4} |Δ|={:.4}",
            self.fit.slope,
            self.expected_slope,
            (self.fit.slope - self.expected_slope).abs()
        )
    }

    /// CSV with header `n,error,stderr,paths` and a `# slope=...` footer.
    pub fn write_csv<W: Write>(&self, out: &mut W) -> std::io::Result<()> {
        writeln!(out, "n,error,stderr,paths")?;
        for i in 0..self.n_values.len() {
            writeln!(
                out,
                "{},{:.16e},{:.16e},{}",
                self.n_values[i], self.errors[i], self.std_errors[i], self.used_paths[i]
            )?;
        }
        writeln!(
            out,
            "# slope={:.16e} intercept={:.16e} residual={:.16e}",
            self.fit.slope, self.fit.intercept, self.fit.residual_rms
        )
    }
}
