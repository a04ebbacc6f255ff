use std::fmt;

use super::{NodeId, Tape};
use crate::error::{Error, Result};
use crate::tensor::Tensor;

/// Central differences `(f(x + h·e_i) − f(x − h·e_i)) / 2h` for every element.
pub fn finite_diff(mut f: impl FnMut(&Tensor) -> f64, x: &Tensor, step: f64) -> Tensor {
    assert!(step > 0.0, "finite difference step must be positive");
    let mut probe = x.clone();
    let mut out = Tensor::zeros(x.shape());
    for i in 0..x.len() {
        let orig = probe.data()[i];
        probe.data_mut()[i] = orig + step;
        let plus = f(&probe);
        probe.data_mut()[i] = orig - step;
        let minus = f(&probe);
        probe.data_mut()[i] = orig;
        out.data_mut()[i] = (plus - minus) / (2.0 * step);
    }
    out
}

/// Analytic-vs-numeric agreement for one parameter.
///
/// `max_rel_err` is normwise: `max|a − n| / max(max|a|, max|n|)`, which stays
/// meaningful when individual gradient entries are near zero.
#[derive(Clone, Debug, PartialEq)]
pub struct GradReport {
    pub name: String,
    pub max_abs_err: f64,
    pub max_rel_err: f64,
}

impl GradReport {
    pub fn compare(name: impl Into<String>, analytic: &Tensor, numeric: &Tensor) -> Result<Self> {
        let max_abs_err = analytic.max_abs_diff(numeric)?;
        let scale = analytic.max_abs().max(numeric.max_abs());
        let max_rel_err = if scale == 0.0 { 0.0 } else { max_abs_err / scale };
        Ok(Self {
            name: name.into(),
            max_abs_err,
            max_rel_err,
        })
    }

    pub const CSV_HEADER: &'static str = "name,max_abs_err,max_rel_err";
}

impl fmt::Display for GradReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{},{:.3e},{:.3e}", self.name, self.max_abs_err, self.max_rel_err)
    }
}

/// Checks `backward` against central differences for every named input.
///
/// `build` records a scalar-valued computation on a fresh tape given one leaf
/// per input and returns the root.
pub fn grad_check<F>(build: F, inputs: &[(&str, Tensor)], step: f64) -> Result<Vec<GradReport>>
where
    F: Fn(&mut Tape, &[NodeId]) -> Result<NodeId>,
{
    let eval = |values: &[Tensor]| -> Result<f64> {
        let mut tape = Tape::new();
        let ids: Vec<NodeId> = values.iter().map(|v| tape.leaf(v.clone())).collect();
        let root = build(&mut tape, &ids)?;
        let v = tape.value(root);
        if !v.is_scalar() {
            return Err(Error::invalid("grad_check", "root must be scalar"));
        }
        Ok(v.item())
    };

    let mut tape = Tape::new();
    let ids: Vec<NodeId> = inputs.iter().map(|(_, v)| tape.leaf(v.clone())).collect();
    let root = build(&mut tape, &ids)?;
    let grads = tape.backward(root)?;

    let mut values: Vec<Tensor> = inputs.iter().map(|(_, v)| v.clone()).collect();
    let mut reports = Vec::with_capacity(inputs.len());
    for (k, (name, value)) in inputs.iter().enumerate() {
        let analytic = grads.wrt(ids[k], value);
        let mut failure = None;
        let numeric = finite_diff(
            |probe| {
                values[k] = probe.clone();
                eval(&values).unwrap_or_else(|e| {
                    failure.get_or_insert(e.to_string());
                    f64::NAN
                })
            },
            value,
            step,
        );
        values[k] = value.clone();
        if let Some(msg) = failure {
            return Err(Error::invalid("grad_check", msg));
        }
        if !numeric.all_finite() {
            return Err(Error::NonFinite(format!("finite differences of {name}")));
        }
        reports.push(GradReport::compare(*name, &analytic, &numeric)?);
    }
    Ok(reports)
}
