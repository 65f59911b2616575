//! Central finite-difference verification of reverse-mode gradients.

use crate::error::{Error, Result};

use super::graph::{Graph, NodeId};
use super::tensor::Tensor;

pub const FD_STEP: f64 = 1e-5;

#[derive(Clone, Debug)]
pub struct GradCheckReport {
    /// Worst `|a - n| / max(1, |a|, |n|)` over all coordinates.
    pub max_rel_error: f64,
    pub worst_input: usize,
    pub worst_index: usize,
    pub analytic: f64,
    pub numeric: f64,
    pub coordinates: usize,
    pub tolerance: f64,
}

impl GradCheckReport {
    pub fn passed(&self) -> bool {
        self.max_rel_error < self.tolerance
    }
}

pub fn relative_error(a: f64, n: f64) -> f64 {
    (a - n).abs() / 1f64.max(a.abs()).max(n.abs())
}

fn evaluate<F>(f: &F, inputs: &[Tensor]) -> Result<f64>
where
    F: Fn(&mut Graph, &[NodeId]) -> Result<NodeId>,
{
    let mut g = Graph::new();
    let ids: Vec<NodeId> = inputs.iter().map(|t| g.param(t.clone())).collect();
    let out = f(&mut g, &ids)?;
    let v = g.value(out);
    if v.len() != 1 {
        return Err(Error::GradCheck(format!(
            "function must be scalar-valued, got shape {:?}",
            v.shape()
        )));
    }
    let v = v.item();
    if !v.is_finite() {
        return Err(Error::GradCheck(format!("non-finite output {v}")));
    }
    Ok(v)
}

/// Compares the reverse-mode gradient of `f` at `inputs` against central
/// differences with step [`FD_STEP`], coordinate by coordinate.
pub fn check_gradients<F>(f: F, inputs: &[Tensor], tolerance: f64) -> Result<GradCheckReport>
where
    F: Fn(&mut Graph, &[NodeId]) -> Result<NodeId>,
{
    let mut g = Graph::new();
    let ids: Vec<NodeId> = inputs.iter().map(|t| g.param(t.clone())).collect();
    let out = f(&mut g, &ids)?;
    if !g.value(out).all_finite() {
        return Err(Error::GradCheck("non-finite output at the base point".into()));
    }
    g.backward(out)?;
    let analytic: Vec<Tensor> = ids.iter().map(|&id| g.grad(id)).collect();
    if analytic.iter().any(|t| !t.all_finite()) {
        return Err(Error::GradCheck("non-finite analytic gradient".into()));
    }

    let mut report = GradCheckReport {
        max_rel_error: 0.0,
        worst_input: 0,
        worst_index: 0,
        analytic: 0.0,
        numeric: 0.0,
        coordinates: 0,
        tolerance,
    };
    let mut point: Vec<Tensor> = inputs.to_vec();
    for (which, grad) in analytic.iter().enumerate() {
        for j in 0..grad.len() {
            let orig = point[which].data()[j];
            point[which].data_mut()[j] = orig + FD_STEP;
            let plus = evaluate(&f, &point)?;
            point[which].data_mut()[j] = orig - FD_STEP;
            let minus = evaluate(&f, &point)?;
            point[which].data_mut()[j] = orig;

            let numeric = (plus - minus) / (2.0 * FD_STEP);
            let a = grad.data()[j];
            let err = relative_error(a, numeric);
            report.coordinates += 1;
            if err > report.max_rel_error || report.coordinates == 1 {
                report.max_rel_error = err;
                report.worst_input = which;
                report.worst_index = j;
                report.analytic = a;
                report.numeric = numeric;
            }
        }
    }
    Ok(report)
}
