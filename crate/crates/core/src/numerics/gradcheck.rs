//! Central finite-difference verification of tape gradients.

use super::params::{BoundParams, ParamSet};
use super::tape::{Tape, Var};
use crate::error::Result;

/// Gradients smaller than this are compared absolutely rather than relatively.
pub const REL_ERR_FLOOR: f64 = 1e-4;

#[derive(Clone, Debug, PartialEq)]
pub struct GradCheckReport {
    pub max_rel_err: f64,
    /// Parameter name and flat index of the worst entry.
    pub worst: Option<(String, usize)>,
    pub checked: usize,
}

pub fn relative_error(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(REL_ERR_FLOOR)
}

/// Compares `backward` against central differences with half-width `step`
/// for every entry of every parameter.
///
/// `loss` builds a scalar on a fresh tape from the bound parameters.
pub fn check_gradients<F>(params: &ParamSet, step: f64, loss: F) -> Result<GradCheckReport>
where
    F: Fn(&mut Tape, &BoundParams) -> Result<Var>,
{
    let eval = |p: &ParamSet| -> Result<f64> {
        let mut tape = Tape::new();
        let bound = p.bind(&mut tape);
        let out = loss(&mut tape, &bound)?;
        tape.value(out).item()
    };

    let mut tape = Tape::new();
    let bound = params.bind(&mut tape);
    let out = loss(&mut tape, &bound)?;
    tape.backward(out)?;
    let grads = bound.grads(&tape);

    let mut report = GradCheckReport {
        max_rel_err: 0.0,
        worst: None,
        checked: 0,
    };
    let mut probe = params.clone();
    let names: Vec<String> = params.iter().map(|(n, _)| n.to_string()).collect();
    for (pi, name) in names.iter().enumerate() {
        for k in 0..grads[pi].numel() {
            let original = tensor_at(&probe, pi, k);
            set_at(&mut probe, pi, k, original + step);
            let plus = eval(&probe)?;
            set_at(&mut probe, pi, k, original - step);
            let minus = eval(&probe)?;
            set_at(&mut probe, pi, k, original);

            let numeric = (plus - minus) / (2.0 * step);
            let err = relative_error(grads[pi].data()[k], numeric);
            report.checked += 1;
            if err > report.max_rel_err {
                report.max_rel_err = err;
                report.worst = Some((name.clone(), k));
            }
        }
    }
    Ok(report)
}

fn tensor_at(p: &ParamSet, pi: usize, k: usize) -> f64 {
    p.tensors().nth(pi).expect("param index").data()[k]
}

fn set_at(p: &mut ParamSet, pi: usize, k: usize, v: f64) {
    p.tensors_mut().nth(pi).expect("param index").data_mut()[k] = v;
}
