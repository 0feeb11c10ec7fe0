use super::BendersError;
use crate::model::Rational;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CvarConfig {
    /// Weight of the risk term; zero gives back the risk-neutral problem.
    pub lambda: f64,
    pub alpha: f64,
}

impl CvarConfig {
    pub fn new(lambda: f64, alpha: f64) -> Result<CvarConfig, BendersError> {
        let c = CvarConfig { lambda, alpha };
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<(), BendersError> {
        if !(self.lambda >= 0.0 && self.lambda.is_finite()) {
            return Err(BendersError::Parameter(format!("lambda {} must be >= 0", self.lambda)));
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(BendersError::Parameter(format!("alpha {} must lie in (0, 1)", self.alpha)));
        }
        Ok(())
    }
}

/// Smallest value whose cumulative probability reaches `alpha`; with `n` equally
/// likely values this is the `ceil(alpha * n)`-th smallest.
pub fn value_at_risk(values: &[f64], probs: &[f64], alpha: f64) -> f64 {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut cum = 0.0;
    for &i in &order {
        cum += probs[i];
        if cum >= alpha - 1e-12 {
            return values[i];
        }
    }
    order.last().map_or(0.0, |&i| values[i])
}

/// Exact `inf_z { z + E[(V - z)+] / (1 - alpha) }`, attained at the value at risk.
pub fn cvar_sorted(
    values: &[Rational],
    probs: &[Rational],
    alpha: Rational,
) -> Result<Rational, BendersError> {
    let zero = Rational::from(0);
    let one = Rational::from(1);
    if alpha <= zero || alpha >= one {
        return Err(BendersError::Parameter(format!("alpha {alpha} must lie in (0, 1)")));
    }
    if values.len() != probs.len() || values.is_empty() {
        return Err(BendersError::Parameter("one probability per value".into()));
    }
    if probs.iter().any(|p| *p < zero) || probs.iter().sum::<Rational>() != one {
        return Err(BendersError::Parameter("probabilities must sum to 1".into()));
    }
    let mut pairs: Vec<(Rational, Rational)> =
        values.iter().copied().zip(probs.iter().copied()).collect();
    pairs.sort();
    let mut cum = zero;
    let mut zeta = pairs[pairs.len() - 1].0;
    for &(v, p) in &pairs {
        cum += p;
        if cum >= alpha {
            zeta = v;
            break;
        }
    }
    let tail: Rational = pairs
        .iter()
        .filter(|(v, _)| *v > zeta)
        .map(|&(v, p)| p * (v - zeta))
        .sum();
    Ok(zeta + tail / (one - alpha))
}
