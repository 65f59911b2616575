use serde::{Deserialize, Serialize};

use crate::diffcore::{cross_entropy, kl_divergence, softmax_with_temperature, Graph, NodeId, Tensor};
use crate::error::{Error, Result};

/// Argument order of the KL term.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum KlDirection {
    /// `KL(p_student || p_teacher)`.
    #[default]
    StudentFirst,
    /// `KL(p_teacher || p_student)`, the classical distillation form.
    TeacherFirst,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DistillConfig {
    pub tau: f64,
    pub alpha: f64,
    /// Multiply the KL term by `tau²`.
    pub tau_squared: bool,
    pub direction: KlDirection,
}

impl Default for DistillConfig {
    fn default() -> Self {
        Self {
            tau: 2.0,
            alpha: 0.5,
            tau_squared: false,
            direction: KlDirection::StudentFirst,
        }
    }
}

impl DistillConfig {
    pub fn new(tau: f64, alpha: f64) -> Result<Self> {
        let cfg = Self {
            tau,
            alpha,
            ..Self::default()
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.tau.is_finite() && self.tau > 0.0) {
            return Err(Error::Parameter(format!("tau must be > 0, got {}", self.tau)));
        }
        if !(0.0..=1.0).contains(&self.alpha) {
            return Err(Error::Parameter(format!("alpha must be in [0, 1], got {}", self.alpha)));
        }
        Ok(())
    }

    fn kd_scale(&self) -> f64 {
        if self.tau_squared {
            self.tau * self.tau
        } else {
            1.0
        }
    }
}

fn check_lengths(student: usize, teacher: usize) -> Result<()> {
    if student != teacher {
        return Err(Error::dim(
            "distill_loss",
            format!("student has {student} logits, teacher {teacher}"),
        ));
    }
    Ok(())
}

/// KL divergence between the temperature-softened student and teacher
/// distributions.
pub fn distill_loss(student: &[f64], teacher: &[f64], cfg: &DistillConfig) -> Result<f64> {
    cfg.validate()?;
    check_lengths(student.len(), teacher.len())?;
    let ps = softmax_with_temperature(student, cfg.tau)?;
    let pt = softmax_with_temperature(teacher, cfg.tau)?;
    let kl = match cfg.direction {
        KlDirection::StudentFirst => kl_divergence(&ps, &pt)?,
        KlDirection::TeacherFirst => kl_divergence(&pt, &ps)?,
    };
    Ok(kl * cfg.kd_scale())
}

/// `(1 - alpha) * CE(student, label) + alpha * distill_loss`.
pub fn combined_loss(student: &[f64], teacher: &[f64], label: usize, cfg: &DistillConfig) -> Result<f64> {
    let ce = cross_entropy(student, label)?;
    let kd = distill_loss(student, teacher, cfg)?;
    Ok((1.0 - cfg.alpha) * ce + cfg.alpha * kd)
}

/// Graph form of [`distill_loss`]; the teacher enters as a constant.
pub fn distill_loss_node(g: &mut Graph, student: NodeId, teacher: &[f64], cfg: &DistillConfig) -> Result<NodeId> {
    cfg.validate()?;
    check_lengths(g.value(student).len(), teacher.len())?;
    let t = g.constant(Tensor::vector(teacher.to_vec()));
    let ps = g.softmax_with_temperature(student, cfg.tau)?;
    let pt = g.softmax_with_temperature(t, cfg.tau)?;
    let kl = match cfg.direction {
        KlDirection::StudentFirst => g.kl_divergence(ps, pt)?,
        KlDirection::TeacherFirst => g.kl_divergence(pt, ps)?,
    };
    Ok(if cfg.tau_squared { g.scale(kl, cfg.kd_scale()) } else { kl })
}

/// Graph form of [`combined_loss`].
pub fn combined_loss_node(
    g: &mut Graph,
    student: NodeId,
    teacher: &[f64],
    label: usize,
    cfg: &DistillConfig,
) -> Result<NodeId> {
    let ce = g.cross_entropy(student, label)?;
    let kd = distill_loss_node(g, student, teacher, cfg)?;
    let ce = g.scale(ce, 1.0 - cfg.alpha);
    let kd = g.scale(kd, cfg.alpha);
    g.add(ce, kd)
}
