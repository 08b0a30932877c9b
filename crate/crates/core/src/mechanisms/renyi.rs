//! Rényi divergence between finite probability mass functions.
//!
//! Used to certify zCDP bounds numerically; nothing on the release path calls it.

use super::MechanismError;

/// `D_α(P‖Q) = 1/(α-1) · ln Σ_x P(x)^α Q(x)^(1-α)` over a shared grid.
pub fn renyi_divergence(p: &[f64], q: &[f64], alpha: f64) -> Result<f64, MechanismError> {
    if p.len() != q.len() {
        return Err(MechanismError::LengthMismatch(p.len(), q.len()));
    }
    for (i, (&pi, &qi)) in p.iter().zip(q).enumerate() {
        if !(pi >= 0.0 && qi >= 0.0) {
            return Err(MechanismError::InvalidMass(i));
        }
        if pi > 0.0 && qi == 0.0 {
            return Err(MechanismError::SupportMismatch(i));
        }
    }
    let ln_p: Vec<f64> = p.iter().map(|x| x.ln()).collect();
    let ln_q: Vec<f64> = q.iter().map(|x| x.ln()).collect();
    renyi_divergence_ln(&ln_p, &ln_q, alpha)
}

/// Same as [`renyi_divergence`], taking natural-log masses so that tails far
/// below `f64::MIN_POSITIVE` still contribute.
pub fn renyi_divergence_ln(ln_p: &[f64], ln_q: &[f64], alpha: f64) -> Result<f64, MechanismError> {
    if ln_p.len() != ln_q.len() {
        return Err(MechanismError::LengthMismatch(ln_p.len(), ln_q.len()));
    }
    if !(alpha.is_finite() && alpha > 1.0) {
        return Err(MechanismError::InvalidOrder(alpha));
    }
    let mut terms = Vec::with_capacity(ln_p.len());
    for (i, (&lp, &lq)) in ln_p.iter().zip(ln_q).enumerate() {
        if lp == f64::NEG_INFINITY {
            continue;
        }
        if lq == f64::NEG_INFINITY {
            return Err(MechanismError::SupportMismatch(i));
        }
        terms.push(alpha * lp + (1.0 - alpha) * lq);
    }
    Ok(log_sum_exp(&terms) / (alpha - 1.0))
}

fn log_sum_exp(xs: &[f64]) -> f64 {
    let max = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return max;
    }
    // Neumaier summation; the terms span hundreds of orders of magnitude
    let (mut sum, mut c) = (0.0f64, 0.0f64);
    for &x in xs {
        let v = (x - max).exp();
        let t = sum + v;
        if sum.abs() >= v.abs() {
            c += (sum - t) + v;
        } else {
            c += (v - t) + sum;
        }
        sum = t;
    }
    max + (sum + c).ln()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_is_zero() {
        let p = [0.1, 0.2, 0.3, 0.4];
        for alpha in [1.5, 2.0, 10.0] {
            assert!(renyi_divergence(&p, &p, alpha).unwrap().abs() < 1e-15);
        }
    }

    #[test]
    fn approaches_kl_near_one() {
        let (a, b) = (0.3f64, 0.6f64);
        let kl = a * (a / b).ln() + (1.0 - a) * ((1.0 - a) / (1.0 - b)).ln();
        let d = renyi_divergence(&[a, 1.0 - a], &[b, 1.0 - b], 1.0 + 1e-6).unwrap();
        assert!((d - kl).abs() < 1e-5, "{d} vs {kl}");
    }

    #[test]
    fn closed_form_two_point() {
        // D_2 = ln Σ p²/q
        let p = [0.5, 0.5];
        let q = [0.25, 0.75];
        let want = (0.25 / 0.25 + 0.25 / 0.75f64).ln();
        assert!((renyi_divergence(&p, &q, 2.0).unwrap() - want).abs() < 1e-15);
    }

    #[test]
    fn errors() {
        assert!(matches!(
            renyi_divergence(&[0.5, 0.5], &[1.0], 2.0),
            Err(MechanismError::LengthMismatch(2, 1))
        ));
        assert!(matches!(
            renyi_divergence(&[0.5, 0.5], &[1.0, 0.0], 2.0),
            Err(MechanismError::SupportMismatch(1))
        ));
        assert!(matches!(
            renyi_divergence(&[1.0], &[1.0], 1.0),
            Err(MechanismError::InvalidOrder(_))
        ));
        // zero mass in P is fine wherever Q is
        assert!(renyi_divergence(&[1.0, 0.0], &[0.5, 0.5], 2.0).is_ok());
    }
}
