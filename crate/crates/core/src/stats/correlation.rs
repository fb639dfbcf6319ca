use statrs::function::beta::beta_reg;

use crate::error::{Error, Result};

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

fn check_lengths(x: &[f64], y: &[f64], min: usize) -> Result<()> {
    if x.len() != y.len() {
        return Err(Error::LengthMismatch(x.len(), y.len()));
    }
    if x.len() < min {
        return Err(Error::TooFewSamples(x.len()));
    }
    Ok(())
}

/// Sum of squared deviations, or `None` when the vector is constant up to
/// roundoff.
fn spread(v: &[f64], centre: f64) -> Option<f64> {
    let ss: f64 = v.iter().map(|x| (x - centre).powi(2)).sum();
    let scale: f64 = v.iter().map(|x| x * x).sum();
    (ss > 1e-28 * scale && ss > 0.0).then_some(ss)
}

/// Pearson correlation coefficient.
pub fn pearson(x: &[f64], y: &[f64]) -> Result<f64> {
    check_lengths(x, y, 3)?;
    let (mx, my) = (mean(x), mean(y));
    let sxx = spread(x, mx).ok_or(Error::ConstantInput)?;
    let syy = spread(y, my).ok_or(Error::ConstantInput)?;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    Ok((sxy / (sxx.sqrt() * syy.sqrt())).clamp(-1.0, 1.0))
}

/// Two-sided p-value of a correlation `r` with `df` residual degrees of
/// freedom, from the t-distribution.
///
/// With `t = r sqrt(df / (1 - r^2))`, the two-sided tail mass is
/// `I_x(df/2, 1/2)` at `x = df / (df + t^2) = 1 - r^2`.
pub fn correlation_pvalue(r: f64, df: f64) -> Result<f64> {
    if df.is_nan() || df <= 0.0 {
        return Err(Error::TooFewSamples(df as usize));
    }
    if r.is_nan() || r.abs() > 1.0 {
        return Err(Error::InvalidArgument(format!("correlation {r} outside [-1, 1]")));
    }
    let x = 1.0 - r * r;
    if x <= 0.0 {
        return Ok(0.0);
    }
    if x >= 1.0 {
        return Ok(1.0);
    }
    Ok(beta_reg(df / 2.0, 0.5, x).clamp(0.0, 1.0))
}

/// Two-sided p-value for a Pearson `r` over `n` pairs (`n - 2` degrees of
/// freedom).
pub fn pearson_pvalue(r: f64, n: usize) -> Result<f64> {
    if n < 3 {
        return Err(Error::TooFewSamples(n));
    }
    correlation_pvalue(r, (n - 2) as f64)
}

/// Least-squares fit `y = intercept + slope * x`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinearFit {
    pub intercept: f64,
    pub slope: f64,
}

pub fn ols_fit(y: &[f64], x: &[f64]) -> Result<LinearFit> {
    check_lengths(y, x, 3)?;
    let (mx, my) = (mean(x), mean(y));
    let sxx = spread(x, mx).ok_or(Error::ConstantRegressor)?;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let slope = sxy / sxx;
    Ok(LinearFit { intercept: my - slope * mx, slope })
}

/// Residuals of `y` after regressing on `x` with an intercept.
pub fn ols_residuals(y: &[f64], x: &[f64]) -> Result<Vec<f64>> {
    let fit = ols_fit(y, x)?;
    let (mx, my) = (mean(x), mean(y));
    // Centered form keeps the residual sum at roundoff level.
    Ok(x.iter().zip(y).map(|(a, b)| (b - my) - fit.slope * (a - mx)).collect())
}

/// Correlation of `g` and `a` after removing the linear effect of `p` from
/// both.
pub fn partial_correlation(g: &[f64], a: &[f64], p: &[f64]) -> Result<f64> {
    check_lengths(g, a, 4)?;
    check_lengths(g, p, 4)?;
    let rg = ols_residuals(g, p)?;
    let ra = ols_residuals(a, p)?;
    // A variable that is affine in p leaves only roundoff behind.
    for (res, orig) in [(&rg, g), (&ra, a)] {
        let before = spread(orig, mean(orig)).ok_or(Error::ConstantInput)?;
        let after: f64 = res.iter().map(|v| v * v).sum();
        if after <= 1e-24 * before {
            return Err(Error::ConstantInput);
        }
    }
    pearson(&rg, &ra)
}

/// First-order partial correlation from the three pairwise correlations.
pub fn partial_from_pairwise(r_ga: f64, r_gp: f64, r_ap: f64) -> Result<f64> {
    let denom = ((1.0 - r_gp * r_gp) * (1.0 - r_ap * r_ap)).sqrt();
    if denom.is_nan() || denom <= 0.0 {
        return Err(Error::ConstantInput);
    }
    Ok(((r_ga - r_gp * r_ap) / denom).clamp(-1.0, 1.0))
}
