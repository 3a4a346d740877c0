use serde::Serialize;

use crate::error::{Error, Result};
use crate::scalar::ParamSet;

pub const FD_STEP: f64 = 1e-5;

/// `|a - n| / max(|a|, |n|, 1e-12)`.
pub fn relative_error(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(1e-12)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GradCheckReport {
    pub max_rel_error: f64,
    /// Parameter tensor and element index with the largest error.
    pub worst: (String, usize),
    pub worst_analytic: f64,
    pub worst_numeric: f64,
    pub checked: usize,
}

impl GradCheckReport {
    pub fn passes(&self, tolerance: f64) -> bool {
        self.max_rel_error < tolerance
    }
}

/// Compares `analytic` against central differences of `loss` around
/// `params`, one parameter at a time with step [`FD_STEP`].
pub fn grad_check<P, F>(params: &P, analytic: &P, loss: F) -> Result<GradCheckReport>
where
    P: ParamSet<f64> + Clone,
    F: FnMut(&P) -> Result<f64>,
{
    grad_check_with_step(params, analytic, loss, FD_STEP)
}

/// [`grad_check`] with an explicit finite-difference step.
pub fn grad_check_with_step<P, F>(params: &P, analytic: &P, mut loss: F, step: f64) -> Result<GradCheckReport>
where
    P: ParamSet<f64> + Clone,
    F: FnMut(&P) -> Result<f64>,
{
    if !(step > 0.0) {
        return Err(Error::InvalidInput(format!("finite-difference step {step} must be positive")));
    }
    let base = params.flatten();
    let grads = analytic.flatten();
    if base.len() != grads.len() {
        return Err(Error::DimensionMismatch(format!(
            "{} parameters but {} gradients",
            base.len(),
            grads.len()
        )));
    }
    let names: Vec<(String, usize)> = params.shapes();
    let mut probe = params.clone();
    let mut flat = base.clone();
    let mut report = GradCheckReport {
        max_rel_error: 0.0,
        worst: (String::new(), 0),
        worst_analytic: 0.0,
        worst_numeric: 0.0,
        checked: 0,
    };
    let mut eval = |flat: &[f64], probe: &mut P| -> Result<f64> {
        probe.load_flat(flat)?;
        let l = loss(probe)?;
        if !l.is_finite() {
            return Err(Error::NonFiniteLoss);
        }
        Ok(l)
    };
    let mut idx = 0;
    for (name, len) in &names {
        for k in 0..*len {
            let theta = base[idx];
            flat[idx] = theta + step;
            let up = eval(&flat, &mut probe)?;
            flat[idx] = theta - step;
            let down = eval(&flat, &mut probe)?;
            flat[idx] = theta;
            let numeric = (up - down) / (2.0 * step);
            let err = relative_error(grads[idx], numeric);
            if err > report.max_rel_error || report.checked == 0 {
                report.max_rel_error = err;
                report.worst = (name.clone(), k);
                report.worst_analytic = grads[idx];
                report.worst_numeric = numeric;
            }
            report.checked += 1;
            idx += 1;
        }
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[derive(Debug, Clone)]
    struct Flat(Vec<f64>);

    impl ParamSet<f64> for Flat {
        fn visit(&self, f: &mut dyn FnMut(&str, &[f64])) {
            f("p", &self.0);
        }
        fn visit_mut(&mut self, f: &mut dyn FnMut(&str, &mut [f64])) {
            f("p", &mut self.0);
        }
    }

    #[test]
    fn quadratic_passes_and_corruption_fails() {
        // L = sum(p_i^3), dL/dp_i = 3 p_i^2
        let p = Flat(vec![0.5, -1.5, 2.0]);
        let g = Flat(p.0.iter().map(|v| 3.0 * v * v).collect());
        let loss = |q: &Flat| Ok(q.0.iter().map(|v| v * v * v).sum());
        let r = grad_check(&p, &g, loss).unwrap();
        assert!(r.passes(1e-6), "{r:?}");
        let mut bad = g.clone();
        bad.0[1] *= 1.01;
        let r = grad_check(&p, &bad, loss).unwrap();
        assert!(r.max_rel_error > 1e-3);
        assert_eq!(r.worst, ("p".to_string(), 1));
    }

    #[test]
    fn non_finite_loss_is_an_error() {
        let p = Flat(vec![1.0]);
        let r = grad_check(&p, &p.clone(), |_| Ok(f64::NAN));
        assert!(matches!(r, Err(Error::NonFiniteLoss)));
    }
}
