use super::params::ParameterSet;
use super::tape::{Tape, Var};
use crate::error::Result;

/// `|a - n| / max(1, |a|, |n|)`
pub fn relative_error(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / 1f64.max(analytic.abs()).max(numeric.abs())
}

#[derive(Debug, Clone, PartialEq)]
pub struct GradCheck {
    pub max_rel_error: f64,
    pub worst: Option<(String, usize)>,
    pub checked: usize,
}

/// Compare backprop gradients with central differences over every scalar
/// of every parameter. `f` rebuilds the loss on a fresh tape.
pub fn grad_check<F>(params: &mut ParameterSet, eps: f64, f: F) -> Result<GradCheck>
where
    F: Fn(&mut Tape, &ParameterSet) -> Result<Var>,
{
    grad_check_scaled(params, eps, 1.0, f)
}

/// As [`grad_check`], but analytic gradients are multiplied by `scale`
/// first. Used to confirm the check notices wrong gradients.
pub fn grad_check_scaled<F>(params: &mut ParameterSet, eps: f64, scale: f64, f: F) -> Result<GradCheck>
where
    F: Fn(&mut Tape, &ParameterSet) -> Result<Var>,
{
    params.zero_grads();
    let mut tape = Tape::new();
    let loss = f(&mut tape, params)?;
    tape.backward(loss, params)?;

    let eval = |ps: &ParameterSet| -> Result<f64> {
        let mut t = Tape::new();
        let l = f(&mut t, ps)?;
        Ok(t.value(l).item())
    };

    let mut out = GradCheck {
        max_rel_error: 0.0,
        worst: None,
        checked: 0,
    };
    let ids: Vec<_> = params.ids().collect();
    for id in ids {
        for k in 0..params.value(id).len() {
            let orig = params.value(id).data()[k];
            params.value_mut(id).data_mut()[k] = orig + eps;
            let up = eval(params)?;
            params.value_mut(id).data_mut()[k] = orig - eps;
            let down = eval(params)?;
            params.value_mut(id).data_mut()[k] = orig;
            let numeric = (up - down) / (2.0 * eps);
            let analytic = scale * params.grad(id).data()[k];
            let e = relative_error(analytic, numeric);
            out.checked += 1;
            if out.worst.is_none() || e > out.max_rel_error {
                out.max_rel_error = e;
                out.worst = Some((params.name(id).to_string(), k));
            }
        }
    }
    params.zero_grads();
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::autodiff::Tensor;

    fn quadratic() -> ParameterSet {
        let mut ps = ParameterSet::new();
        ps.add("x", Tensor::row(&[1.5, -0.7, 2.0])).unwrap();
        ps
    }

    fn sum_sq(t: &mut Tape, ps: &ParameterSet) -> Result<Var> {
        let x = t.param(ps, ps.id("x").unwrap());
        let y = t.mul(x, x)?;
        Ok(t.sum(y))
    }

    #[test]
    fn quadratic_passes() {
        let r = grad_check(&mut quadratic(), 1e-5, sum_sq).unwrap();
        assert!(r.max_rel_error < 1e-8, "{r:?}");
        assert_eq!(r.checked, 3);
    }

    #[test]
    fn doubled_gradient_is_caught() {
        // x = 1.5: analytic 6, numeric 3, error 3/6
        let r = grad_check_scaled(&mut quadratic(), 1e-5, 2.0, sum_sq).unwrap();
        assert!((r.max_rel_error - 0.5).abs() < 1e-6, "{r:?}");
    }
}
