use serde::{Deserialize, Serialize};
use statrs::distribution::{ChiSquared, ContinuousCDF, StudentsT};

use crate::error::{Error, Result};

/// Paired t-test over per-example differences `a - b`, with McNemar's test
/// on the same pairs as a secondary statistic for binary outcomes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SignificanceResult {
    /// t statistic of the mean difference; 0 when degenerate.
    pub statistic: f64,
    /// Two-sided p-value.
    pub p_value: f64,
    /// One-sided p-value for the alternative "a scores higher than b".
    pub p_value_one_sided: f64,
    pub n: usize,
    pub mean_difference: f64,
    /// The differences have zero variance, so no t statistic exists.
    pub degenerate: bool,
    pub mcnemar: McNemarResult,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct McNemarResult {
    /// Pairs where only `a` is correct.
    pub a_only: usize,
    /// Pairs where only `b` is correct.
    pub b_only: usize,
    /// Continuity-corrected chi-square statistic.
    pub statistic: f64,
    pub p_value: f64,
}

pub fn paired_significance(a: &[bool], b: &[bool]) -> Result<SignificanceResult> {
    if a.len() != b.len() {
        return Err(Error::LengthMismatch {
            what: "paired correctness vectors",
            left: a.len(),
            right: b.len(),
        });
    }
    let diffs: Vec<f64> = a
        .iter()
        .zip(b)
        .map(|(&x, &y)| f64::from(u8::from(x)) - f64::from(u8::from(y)))
        .collect();
    let mut result = paired_t_test(&diffs)?;
    result.mcnemar = mcnemar(a, b)?;
    Ok(result)
}

/// One-sample t-test of `diffs` against zero.
pub fn paired_t_test(diffs: &[f64]) -> Result<SignificanceResult> {
    let n = diffs.len();
    if n < 2 {
        return Err(Error::Precondition(format!(
            "paired t-test needs at least 2 pairs, got {n}"
        )));
    }
    let nf = n as f64;
    let mean = diffs.iter().sum::<f64>() / nf;
    let var = diffs.iter().map(|d| (d - mean).powi(2)).sum::<f64>() / (nf - 1.0);
    let empty_mcnemar = McNemarResult {
        a_only: 0,
        b_only: 0,
        statistic: 0.0,
        p_value: 1.0,
    };
    if var <= 0.0 || !var.is_finite() {
        return Ok(SignificanceResult {
            statistic: 0.0,
            p_value: 1.0,
            p_value_one_sided: 1.0,
            n,
            mean_difference: mean,
            degenerate: true,
            mcnemar: empty_mcnemar,
        });
    }
    let t = mean / (var.sqrt() / nf.sqrt());
    let dist = StudentsT::new(0.0, 1.0, nf - 1.0)
        .map_err(|e| Error::Precondition(format!("t distribution: {e}")))?;
    let p_two = (2.0 * dist.sf(t.abs())).clamp(0.0, 1.0);
    let p_one = dist.sf(t).clamp(0.0, 1.0);
    Ok(SignificanceResult {
        statistic: t,
        p_value: p_two,
        p_value_one_sided: p_one,
        n,
        mean_difference: mean,
        degenerate: false,
        mcnemar: empty_mcnemar,
    })
}

/// McNemar's test with continuity correction on paired binary outcomes.
pub fn mcnemar(a: &[bool], b: &[bool]) -> Result<McNemarResult> {
    if a.len() != b.len() {
        return Err(Error::LengthMismatch {
            what: "paired correctness vectors",
            left: a.len(),
            right: b.len(),
        });
    }
    let a_only = a.iter().zip(b).filter(|(x, y)| **x && !**y).count();
    let b_only = a.iter().zip(b).filter(|(x, y)| !**x && **y).count();
    let discordant = a_only + b_only;
    if discordant == 0 {
        return Ok(McNemarResult {
            a_only,
            b_only,
            statistic: 0.0,
            p_value: 1.0,
        });
    }
    let diff = (a_only as f64 - b_only as f64).abs();
    let statistic = (diff - 1.0).max(0.0).powi(2) / discordant as f64;
    let chi = ChiSquared::new(1.0).map_err(|e| Error::Precondition(format!("chi-square: {e}")))?;
    Ok(McNemarResult {
        a_only,
        b_only,
        statistic,
        p_value: chi.sf(statistic).clamp(0.0, 1.0),
    })
}
