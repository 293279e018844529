//! Two-stage student training: contrastive warm-up with in-batch negatives,
//! then distillation on sampled negatives. Plain SGD; gradients flow from
//! the losses through the cosine scorer into the two linear maps by hand.

use crate::error::{Error, Result};
use crate::harness::world::{Matrix, SyntheticWorld, WorldConfig};
use crate::losses::{cosine_with_grad, infonce, Objective, ScoredList};
use crate::rng::{derive_seed, fnv1a64, SplitMix64};
use crate::sampling::TrainingSample;

/// Bi-encoder student: one linear map per side, scoring by cosine of the
/// mapped features.
#[derive(Debug, Clone, PartialEq)]
pub struct StudentModel {
    pub query_map: Matrix,
    pub doc_map: Matrix,
}

impl StudentModel {
    /// Gaussian init scaled to keep embeddings O(1) for O(1) features.
    pub fn init(config: &WorldConfig, seed: u64) -> StudentModel {
        let scale = 1.0 / (config.feature_dim as f64).sqrt();
        let mut rng = SplitMix64::new(seed);
        StudentModel {
            query_map: Matrix::gaussian(config.student_dim, config.feature_dim, &mut rng, scale),
            doc_map: Matrix::gaussian(config.student_dim, config.feature_dim, &mut rng, scale),
        }
    }

    pub fn embed_query(&self, features: &[f64]) -> Vec<f64> {
        self.query_map.matvec(features)
    }

    pub fn embed_doc(&self, features: &[f64]) -> Vec<f64> {
        self.doc_map.matvec(features)
    }

    /// Cosine score of a (query features, doc features) pair.
    pub fn score(&self, query_features: &[f64], doc_features: &[f64]) -> Result<f64> {
        let (c, _, _) = cosine_with_grad(&self.embed_query(query_features), &self.embed_doc(doc_features))?;
        Ok(c)
    }

    pub fn is_finite(&self) -> bool {
        self.query_map.is_finite() && self.doc_map.is_finite()
    }
}

/// Hyperparameters for both stages plus the training RNG seed.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub stage1_epochs: usize,
    pub stage1_batch: usize,
    pub stage1_lr: f64,
    pub stage1_tau: f64,
    pub stage2_epochs: usize,
    pub stage2_lr: f64,
    pub kl_tau: f64,
    pub train_seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            stage1_epochs: 4,
            stage1_batch: 32,
            stage1_lr: 0.05,
            stage1_tau: 0.05,
            stage2_epochs: 8,
            stage2_lr: 0.5,
            kl_tau: 1.0,
            train_seed: 7,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.stage1_batch < 2 {
            return Err(Error::BatchTooSmall {
                batch_size: self.stage1_batch,
            });
        }
        for (name, lr) in [("stage1_lr", self.stage1_lr), ("stage2_lr", self.stage2_lr)] {
            if !lr.is_finite() || lr < 0.0 {
                return Err(Error::InvalidConfig {
                    message: format!("{name} must be finite and >= 0, got {lr}"),
                });
            }
        }
        for (name, tau) in [("stage1_tau", self.stage1_tau), ("kl_tau", self.kl_tau)] {
            if !tau.is_finite() || tau <= 0.0 {
                return Err(Error::InvalidConfig {
                    message: format!("{name} must be finite and > 0, got {tau}"),
                });
            }
        }
        Ok(())
    }
}

fn stream(name: &str) -> u64 {
    fnv1a64(name.as_bytes())
}

/// Deterministic permutation of `items` for one epoch.
fn shuffled(items: &[usize], seed: u64) -> Vec<usize> {
    let mut rng = SplitMix64::new(seed);
    rng.choose_indices(items.len(), items.len())
        .into_iter()
        .map(|i| items[i])
        .collect()
}

/// Loss and parameter gradients of one quantity over the two maps.
#[derive(Debug, Clone)]
pub(crate) struct Grads {
    pub loss: f64,
    pub query_map: Matrix,
    pub doc_map: Matrix,
}

/// Mean in-batch InfoNCE over the batch queries, with gradients.
///
/// Each query's positive doc serves as a negative for every other query in
/// the batch.
pub(crate) fn infonce_batch_grads(
    world: &SyntheticWorld,
    model: &StudentModel,
    batch: &[usize],
    tau: f64,
) -> Result<Grads> {
    let b = batch.len();
    if b < 2 {
        return Err(Error::BatchTooSmall { batch_size: b });
    }
    let query_feats: Vec<&[f64]> = batch.iter().map(|&q| world.query_features[q].as_slice()).collect();
    let doc_feats: Vec<&[f64]> = batch
        .iter()
        .map(|&q| world.doc_features[world.positives[q]].as_slice())
        .collect();
    let u: Vec<Vec<f64>> = query_feats.iter().map(|f| model.embed_query(f)).collect();
    let v: Vec<Vec<f64>> = doc_feats.iter().map(|f| model.embed_doc(f)).collect();

    let dim = u[0].len();
    let mut du = vec![vec![0.0; dim]; b];
    let mut dv = vec![vec![0.0; dim]; b];
    let mut total_loss = 0.0;
    for i in 0..b {
        let mut sims = Vec::with_capacity(b - 1);
        let mut partners = Vec::with_capacity(b - 1);
        let (sim_pos, gu_pos, gv_pos) = cosine_with_grad(&u[i], &v[i])?;
        for j in (0..b).filter(|&j| j != i) {
            let (s, gu, gv) = cosine_with_grad(&u[i], &v[j])?;
            sims.push(s);
            partners.push((j, gu, gv));
        }
        let r = infonce(sim_pos, &sims, tau)?;
        total_loss += r.value;
        let g_pos = r.grad_student[0];
        for (x, a) in du[i].iter_mut().zip(&gu_pos) {
            *x += g_pos * a;
        }
        for (x, c) in dv[i].iter_mut().zip(&gv_pos) {
            *x += g_pos * c;
        }
        for (m, (j, gu, gv)) in partners.into_iter().enumerate() {
            let g = r.grad_student[m + 1];
            for (x, a) in du[i].iter_mut().zip(&gu) {
                *x += g * a;
            }
            for (x, c) in dv[j].iter_mut().zip(&gv) {
                *x += g * c;
            }
        }
    }

    let scale = 1.0 / b as f64;
    let mut grad_q = Matrix::zeros(model.query_map.rows(), model.query_map.cols());
    let mut grad_d = Matrix::zeros(model.doc_map.rows(), model.doc_map.cols());
    for i in 0..b {
        grad_q.add_outer(&du[i], query_feats[i], scale);
        grad_d.add_outer(&dv[i], doc_feats[i], scale);
    }
    Ok(Grads {
        loss: total_loss * scale,
        query_map: grad_q,
        doc_map: grad_d,
    })
}

/// One sample's distillation loss and parameter gradients.
pub(crate) fn distill_sample_grads(
    world: &SyntheticWorld,
    model: &StudentModel,
    sample: &TrainingSample,
    objective: Objective,
    tau: f64,
) -> Result<Grads> {
    let q = world.query_idx(&sample.query_id).ok_or_else(|| Error::UnknownId {
        query_id: sample.query_id.clone(),
        kind: "query",
        id: sample.query_id.clone(),
    })?;
    let doc_of = |id: &str| {
        world.doc_idx(id).ok_or_else(|| Error::UnknownId {
            query_id: sample.query_id.clone(),
            kind: "doc",
            id: id.to_string(),
        })
    };
    let mut doc_idxs = Vec::with_capacity(sample.selected.len() + 1);
    doc_idxs.push(doc_of(&sample.positive_doc_id)?);
    for n in &sample.selected {
        doc_idxs.push(doc_of(&n.doc_id)?);
    }

    let query_feat = world.query_features[q].as_slice();
    let u = model.embed_query(query_feat);
    let doc_feats: Vec<&[f64]> = doc_idxs.iter().map(|&d| world.doc_features[d].as_slice()).collect();
    let embeds: Vec<Vec<f64>> = doc_feats.iter().map(|f| model.embed_doc(f)).collect();

    let mut student = Vec::with_capacity(embeds.len());
    let mut grads_uv = Vec::with_capacity(embeds.len());
    for e in &embeds {
        let (c, gu, gv) = cosine_with_grad(&u, e)?;
        student.push(c);
        grads_uv.push((gu, gv));
    }
    let mut teacher = Vec::with_capacity(embeds.len());
    teacher.push(sample.positive_norm);
    teacher.extend(sample.selected.iter().map(|n| n.norm));

    let list = ScoredList::new(student, teacher, tau)?;
    let r = objective.evaluate(&list)?;

    let dim = u.len();
    let mut du = vec![0.0; dim];
    let mut grad_q = Matrix::zeros(model.query_map.rows(), model.query_map.cols());
    let mut grad_d = Matrix::zeros(model.doc_map.rows(), model.doc_map.cols());
    for (i, (gu, gv)) in grads_uv.iter().enumerate() {
        let g = r.grad_student[i];
        for (x, a) in du.iter_mut().zip(gu) {
            *x += g * a;
        }
        let dv: Vec<f64> = gv.iter().map(|c| g * c).collect();
        grad_d.add_outer(&dv, doc_feats[i], 1.0);
    }
    grad_q.add_outer(&du, query_feat, 1.0);
    Ok(Grads {
        loss: r.value,
        query_map: grad_q,
        doc_map: grad_d,
    })
}

/// Mean in-batch InfoNCE over the train split without updating anything;
/// batches are taken in sorted query order.
pub fn mean_stage1_loss(
    world: &SyntheticWorld,
    model: &StudentModel,
    batch_size: usize,
    tau: f64,
) -> Result<f64> {
    if batch_size < 2 {
        return Err(Error::BatchTooSmall { batch_size });
    }
    let mut total = 0.0;
    let mut n = 0usize;
    for batch in world.train_queries.chunks(batch_size) {
        if batch.len() < 2 {
            continue;
        }
        let g = infonce_batch_grads(world, model, batch, tau)?;
        total += g.loss * batch.len() as f64;
        n += batch.len();
    }
    if n == 0 {
        return Err(Error::NoEvalQueries);
    }
    Ok(total / n as f64)
}

/// Stage 1: minibatch SGD on in-batch-negative InfoNCE over the train
/// queries. Trailing batches of size one are skipped (no negatives).
pub fn stage1_contrastive(
    world: &SyntheticWorld,
    model: &StudentModel,
    cfg: &TrainConfig,
) -> Result<StudentModel> {
    cfg.validate()?;
    let mut model = model.clone();
    for epoch in 0..cfg.stage1_epochs {
        let order = shuffled(
            &world.train_queries,
            derive_seed(&[cfg.train_seed, stream("stage1-epoch"), epoch as u64]),
        );
        let mut epoch_loss = 0.0;
        let mut n_batches = 0usize;
        for batch in order.chunks(cfg.stage1_batch) {
            if batch.len() < 2 {
                continue;
            }
            let g = infonce_batch_grads(world, &model, batch, cfg.stage1_tau)?;
            if !g.loss.is_finite() {
                return Err(Error::NonFiniteLoss {
                    context: format!("stage 1, epoch {epoch}"),
                });
            }
            model.query_map.add_scaled(&g.query_map, -cfg.stage1_lr);
            model.doc_map.add_scaled(&g.doc_map, -cfg.stage1_lr);
            epoch_loss += g.loss;
            n_batches += 1;
        }
        if n_batches > 0 {
            log::debug!(
                "stage1 epoch {epoch}: mean batch loss {:.6}",
                epoch_loss / n_batches as f64
            );
        }
    }
    if !model.is_finite() {
        return Err(Error::NonFiniteLoss {
            context: "stage 1 parameters".into(),
        });
    }
    Ok(model)
}

/// Mean distillation loss over the samples without updating anything.
pub fn mean_distill_loss(
    world: &SyntheticWorld,
    model: &StudentModel,
    samples: &[TrainingSample],
    objective: Objective,
    tau: f64,
) -> Result<f64> {
    if samples.is_empty() {
        return Err(Error::NoSamples);
    }
    let mut total = 0.0;
    for s in samples {
        total += distill_sample_grads(world, model, s, objective, tau)?.loss;
    }
    Ok(total / samples.len() as f64)
}

/// Stage-2 result: the distilled model plus the mean loss before and after.
#[derive(Debug, Clone)]
pub struct DistillOutcome {
    pub model: StudentModel,
    pub initial_loss: f64,
    pub final_loss: f64,
}

/// Stage 2: per-sample SGD on the chosen distillation objective, starting
/// from the stage-1 checkpoint.
pub fn stage2_distill(
    world: &SyntheticWorld,
    checkpoint: &StudentModel,
    samples: &[TrainingSample],
    objective: Objective,
    cfg: &TrainConfig,
) -> Result<DistillOutcome> {
    cfg.validate()?;
    if samples.is_empty() {
        return Err(Error::NoSamples);
    }
    let tau = match objective {
        Objective::Kl => cfg.kl_tau,
        Objective::MarginMse => 1.0,
    };
    let mut model = checkpoint.clone();
    let initial_loss = mean_distill_loss(world, &model, samples, objective, tau)?;
    let sample_order: Vec<usize> = (0..samples.len()).collect();
    for epoch in 0..cfg.stage2_epochs {
        let order = shuffled(
            &sample_order,
            derive_seed(&[cfg.train_seed, stream("stage2-epoch"), epoch as u64]),
        );
        let mut epoch_loss = 0.0;
        for &i in &order {
            let g = distill_sample_grads(world, &model, &samples[i], objective, tau)?;
            if !g.loss.is_finite() {
                return Err(Error::NonFiniteLoss {
                    context: format!("stage 2 ({objective}), epoch {epoch}"),
                });
            }
            model.query_map.add_scaled(&g.query_map, -cfg.stage2_lr);
            model.doc_map.add_scaled(&g.doc_map, -cfg.stage2_lr);
            epoch_loss += g.loss;
        }
        log::debug!(
            "stage2 {objective} epoch {epoch}: mean loss {:.6}",
            epoch_loss / order.len() as f64
        );
    }
    if !model.is_finite() {
        return Err(Error::NonFiniteLoss {
            context: format!("stage 2 ({objective}) parameters"),
        });
    }
    let final_loss = mean_distill_loss(world, &model, samples, objective, tau)?;
    Ok(DistillOutcome {
        model,
        initial_loss,
        final_loss,
    })
}
