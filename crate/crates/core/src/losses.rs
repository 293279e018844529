//! Training objectives with hand-derived gradients, all in f64.
//!
//! Softmax-family values are computed through log-softmax with max
//! subtraction, so any finite input produces a finite loss.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One query's aligned score lists: student scores and teacher norms, the
/// positive at index 0 followed by K negatives.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoredList {
    student_scores: Vec<f64>,
    teacher_norms: Vec<f64>,
    temperature: f64,
}

impl ScoredList {
    pub fn new(student_scores: Vec<f64>, teacher_norms: Vec<f64>, temperature: f64) -> Result<Self> {
        if student_scores.len() != teacher_norms.len() {
            return Err(Error::InvalidScoredList {
                message: format!(
                    "student list has {} entries, teacher list has {}",
                    student_scores.len(),
                    teacher_norms.len()
                ),
            });
        }
        if student_scores.len() < 2 {
            return Err(Error::InvalidScoredList {
                message: "need the positive plus at least one negative".into(),
            });
        }
        if student_scores.iter().any(|s| !s.is_finite()) {
            return Err(Error::NonFiniteInput);
        }
        if teacher_norms.iter().any(|t| !t.is_finite()) {
            return Err(Error::NonFiniteInput);
        }
        if teacher_norms.iter().any(|&t| !(0.0..=1.0).contains(&t)) {
            return Err(Error::InvalidScoredList {
                message: "teacher norms must lie in [0, 1]".into(),
            });
        }
        check_temperature(temperature)?;
        Ok(ScoredList {
            student_scores,
            teacher_norms,
            temperature,
        })
    }

    pub fn student_scores(&self) -> &[f64] {
        &self.student_scores
    }

    pub fn teacher_norms(&self) -> &[f64] {
        &self.teacher_norms
    }

    pub fn temperature(&self) -> f64 {
        self.temperature
    }

    /// Number of negatives (list length minus the positive).
    pub fn k(&self) -> usize {
        self.student_scores.len() - 1
    }

    /// Same list with the student score at `idx` replaced.
    fn with_student_score(&self, idx: usize, value: f64) -> ScoredList {
        let mut scores = self.student_scores.clone();
        scores[idx] = value;
        ScoredList {
            student_scores: scores,
            teacher_norms: self.teacher_norms.clone(),
            temperature: self.temperature,
        }
    }
}

/// Loss value plus the gradient with respect to each student score.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LossResult {
    pub value: f64,
    pub grad_student: Vec<f64>,
}

fn check_temperature(temperature: f64) -> Result<()> {
    if !temperature.is_finite() || temperature <= 0.0 {
        return Err(Error::InvalidTemperature { tau: temperature });
    }
    Ok(())
}

fn check_finite(scores: &[f64]) -> Result<()> {
    if scores.is_empty() {
        return Err(Error::EmptyInput);
    }
    if scores.iter().any(|s| !s.is_finite()) {
        return Err(Error::NonFiniteInput);
    }
    Ok(())
}

/// Log-probabilities of softmax(scores / temperature), via max subtraction.
fn log_softmax(scores: &[f64], temperature: f64) -> Vec<f64> {
    let scaled: Vec<f64> = scores.iter().map(|s| s / temperature).collect();
    let max = scaled.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let log_norm = scaled.iter().map(|z| (z - max).exp()).sum::<f64>().ln() + max;
    scaled.iter().map(|z| z - log_norm).collect()
}

/// Temperature-scaled softmax; probabilities sum to 1 within 1e-12.
pub fn softmax_with_temperature(scores: &[f64], temperature: f64) -> Result<Vec<f64>> {
    check_finite(scores)?;
    check_temperature(temperature)?;
    Ok(log_softmax(scores, temperature)
        .into_iter()
        .map(f64::exp)
        .collect())
}

/// Listwise KL divergence from the teacher's softmax distribution to the
/// student's, both at the list's temperature.
///
/// L = sum_i p_t(i) * ln(p_t(i) / p_s(i)), dL/ds_i = (p_s(i) - p_t(i)) / tau.
pub fn kl_listwise(list: &ScoredList) -> Result<LossResult> {
    let tau = list.temperature;
    let log_ps = log_softmax(&list.student_scores, tau);
    let log_pt = log_softmax(&list.teacher_norms, tau);
    let mut value = 0.0;
    let mut grad = Vec::with_capacity(log_ps.len());
    for (&ls, &lt) in log_ps.iter().zip(&log_pt) {
        let pt = lt.exp();
        if pt > 0.0 {
            value += pt * (lt - ls);
        }
        grad.push((ls.exp() - pt) / tau);
    }
    Ok(LossResult {
        value,
        grad_student: grad,
    })
}

/// Mean squared error between student and teacher positive-minus-negative
/// margins.
///
/// With D_k = (s+ - s_k) - (t+ - t_k): L = (1/K) sum_k D_k^2,
/// dL/ds+ = (2/K) sum_k D_k, dL/ds_k = -(2/K) D_k.
pub fn margin_mse(list: &ScoredList) -> Result<LossResult> {
    let k = list.k();
    let s = &list.student_scores;
    let t = &list.teacher_norms;
    let deltas: Vec<f64> = (1..=k)
        .map(|i| (s[0] - s[i]) - (t[0] - t[i]))
        .collect();
    let kf = k as f64;
    let value = deltas.iter().map(|d| d * d).sum::<f64>() / kf;
    let mut grad = Vec::with_capacity(k + 1);
    grad.push(2.0 / kf * deltas.iter().sum::<f64>());
    grad.extend(deltas.iter().map(|d| -2.0 / kf * d));
    Ok(LossResult {
        value,
        grad_student: grad,
    })
}

/// Contrastive loss of the positive similarity against the negatives.
///
/// L = -ln(e^{p/tau} / (e^{p/tau} + sum_j e^{n_j/tau})). The gradient list
/// is [dL/dsim_pos, dL/dsims_neg...]: (prob_i - 1_{i=0}) / tau.
pub fn infonce(sim_pos: f64, sims_neg: &[f64], temperature: f64) -> Result<LossResult> {
    if sims_neg.is_empty() {
        return Err(Error::EmptyInput);
    }
    let mut scores = Vec::with_capacity(sims_neg.len() + 1);
    scores.push(sim_pos);
    scores.extend_from_slice(sims_neg);
    check_finite(&scores)?;
    check_temperature(temperature)?;
    let log_p = log_softmax(&scores, temperature);
    let value = -log_p[0];
    let grad = log_p
        .iter()
        .enumerate()
        .map(|(i, lp)| (lp.exp() - if i == 0 { 1.0 } else { 0.0 }) / temperature)
        .collect();
    Ok(LossResult {
        value,
        grad_student: grad,
    })
}

/// InfoNCE viewed as a function of a ScoredList's student scores (positive
/// first); teacher norms are ignored. Lets the finite-difference checker
/// treat all three objectives uniformly.
pub fn infonce_on_list(list: &ScoredList) -> Result<LossResult> {
    infonce(
        list.student_scores[0],
        &list.student_scores[1..],
        list.temperature,
    )
}

/// Cosine similarity of two equal-dimension non-zero vectors, clamped into
/// [-1, 1] against rounding spill.
pub fn cosine_similarity(u: &[f64], v: &[f64]) -> Result<f64> {
    let (value, _, _) = cosine_with_grad(u, v)?;
    Ok(value)
}

/// Cosine similarity plus its gradients with respect to both inputs.
///
/// With c = u.v / (|u||v|): dc/du = v / (|u||v|) - c u / |u|^2 and
/// symmetrically for v. The returned value is clamped, the gradients are not.
pub fn cosine_with_grad(u: &[f64], v: &[f64]) -> Result<(f64, Vec<f64>, Vec<f64>)> {
    if u.len() != v.len() {
        return Err(Error::DimensionMismatch {
            left: u.len(),
            right: v.len(),
        });
    }
    check_finite(u)?;
    check_finite(v)?;
    let nu = u.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nv = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if nu == 0.0 || nv == 0.0 {
        return Err(Error::ZeroVector);
    }
    let dot = u.iter().zip(v).map(|(a, b)| a * b).sum::<f64>();
    let c = dot / (nu * nv);
    let grad_u = u
        .iter()
        .zip(v)
        .map(|(&ui, &vi)| vi / (nu * nv) - c * ui / (nu * nu))
        .collect();
    let grad_v = u
        .iter()
        .zip(v)
        .map(|(&ui, &vi)| ui / (nu * nv) - c * vi / (nv * nv))
        .collect();
    Ok((c.clamp(-1.0, 1.0), grad_u, grad_v))
}

/// Compare a loss's analytic gradient against central finite differences at
/// `point`; returns the max relative error with denominator
/// max(|analytic|, 1e-8).
pub fn finite_diff_check<F>(loss: F, point: &ScoredList, eps: f64) -> Result<f64>
where
    F: Fn(&ScoredList) -> Result<LossResult>,
{
    if eps.is_nan() || eps <= 0.0 {
        return Err(Error::InvalidConfig {
            message: format!("finite-difference step must be positive, got {eps}"),
        });
    }
    let analytic = loss(point)?;
    let mut max_rel = 0.0f64;
    for i in 0..point.student_scores.len() {
        let base = point.student_scores[i];
        let plus = loss(&point.with_student_score(i, base + eps))?.value;
        let minus = loss(&point.with_student_score(i, base - eps))?.value;
        let fd = (plus - minus) / (2.0 * eps);
        let g = analytic.grad_student[i];
        let rel = (fd - g).abs() / g.abs().max(1e-8);
        max_rel = max_rel.max(rel);
    }
    Ok(max_rel)
}

/// Distillation objective selector for stage-2 training.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Objective {
    Kl,
    MarginMse,
}

impl Objective {
    pub const ALL: [Objective; 2] = [Objective::Kl, Objective::MarginMse];

    pub fn as_str(self) -> &'static str {
        match self {
            Objective::Kl => "kl",
            Objective::MarginMse => "margin_mse",
        }
    }

    pub fn evaluate(self, list: &ScoredList) -> Result<LossResult> {
        match self {
            Objective::Kl => kl_listwise(list),
            Objective::MarginMse => margin_mse(list),
        }
    }
}

impl std::fmt::Display for Objective {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for Objective {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "kl" => Ok(Objective::Kl),
            "margin_mse" => Ok(Objective::MarginMse),
            other => Err(Error::UnknownObjective { name: other.into() }),
        }
    }
}
