//! Adam and the two backpropagation regimes: cumulative (losses from every
//! snapshot are summed, normalized by T and backpropagated once per epoch)
//! and incremental (backpropagation and a weight update after every
//! snapshot). The loss normalization asymmetry is deliberate: the cumulative
//! regime divides the accumulated cost by T, the incremental regime uses the
//! raw per-snapshot mean squared error.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::time::Instant;

use crate::autodiff::{Parameter, Tape, Tensor};
use crate::nn::{CellState, RecurrentGcn};
use crate::signal::{Snapshot, TemporalSignal};
use crate::{Error, Result};

/// Adam with bias correction. Moment buffers mirror parameter shapes and the
/// step counter advances by exactly one per [`Adam::step`].
pub struct Adam {
    lr: f64,
    beta1: f64,
    beta2: f64,
    eps: f64,
    step: u64,
    moments: Vec<(Vec<f64>, Vec<f64>)>,
}

impl Adam {
    /// Standard defaults: beta1 = 0.9, beta2 = 0.999, eps = 1e-8.
    pub fn new(lr: f64) -> Self {
        Adam::with_betas(lr, 0.9, 0.999, 1e-8)
    }

    pub fn with_betas(lr: f64, beta1: f64, beta2: f64, eps: f64) -> Self {
        Adam {
            lr,
            beta1,
            beta2,
            eps,
            step: 0,
            moments: Vec::new(),
        }
    }

    pub fn step_count(&self) -> u64 {
        self.step
    }

    pub fn learning_rate(&self) -> f64 {
        self.lr
    }

    /// One update over the accumulated gradients of `params`.
    pub fn step(&mut self, params: &[&Parameter]) {
        if self.moments.is_empty() {
            self.moments = params.iter().map(|p| {
                (vec![0.0; p.len()], vec![0.0; p.len()])
            }).collect();
        }
        self.step += 1;
        let (lr, b1, b2, eps) = (self.lr, self.beta1, self.beta2, self.eps);
        let bc1 = 1.0 - b1.powi(self.step as i32);
        let bc2 = 1.0 - b2.powi(self.step as i32);
        for (param, (m, v)) in params.iter().zip(self.moments.iter_mut()) {
            let mut idx = 0;
            param.update(|value, g| {
                m[idx] = b1 * m[idx] + (1.0 - b1) * g;
                v[idx] = b2 * v[idx] + (1.0 - b2) * g * g;
                let m_hat = m[idx] / bc1;
                let v_hat = v[idx] / bc2;
                idx += 1;
                value - lr * m_hat / (v_hat.sqrt() + eps)
            });
        }
    }
}

/// Which backpropagation regime a run uses.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Regime {
    Incremental,
    Cumulative,
}

impl std::fmt::Display for Regime {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Regime::Incremental => f.write_str("incremental"),
            Regime::Cumulative => f.write_str("cumulative"),
        }
    }
}

impl std::str::FromStr for Regime {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "incremental" => Ok(Regime::Incremental),
            "cumulative" => Ok(Regime::Cumulative),
            other => Err(Error::InvalidParameter(format!(
                "unknown regime {other:?} (expected incremental or cumulative)"
            ))),
        }
    }
}

/// Outcome of one training run. `epoch_seconds` is wall-clock and therefore
/// the only non-deterministic field; everything else is reproducible from
/// the seed.
#[derive(Serialize, Deserialize)]
pub struct TrainReport {
    pub regime: Regime,
    pub epochs: usize,
    pub seed: u64,
    pub losses: Vec<f64>,
    pub epoch_seconds: Vec<f64>,
    pub optimizer_steps: u64,
}

fn snapshot_loss(
    model: &RecurrentGcn,
    tape: &Tape,
    snapshot: &Snapshot,
    state: Option<&CellState>,
    training: bool,
    rng: &mut ChaCha8Rng,
) -> Result<(Tensor, CellState)> {
    let (y_hat, new_state) = model.forward(tape, snapshot, state, training, rng)?;
    let loss = match &snapshot.mask {
        Some(mask) => y_hat.mse_loss_masked(&snapshot.y, mask)?,
        None => y_hat.mse_loss(&snapshot.y)?,
    };
    Ok((loss, new_state))
}

fn check_finite(loss: f64, epoch: usize) -> Result<f64> {
    if !loss.is_finite() {
        return Err(Error::Numeric(format!(
            "loss became non-finite at epoch {epoch}"
        )));
    }
    Ok(loss)
}

/// Cumulative regime: per epoch, accumulate the mean squared error over all
/// `T` snapshots, divide by `T`, backpropagate once and take one optimizer
/// step. Hidden state carries across snapshots within an epoch and resets at
/// epoch start.
pub fn train_cumulative(
    model: &RecurrentGcn,
    train: &TemporalSignal,
    epochs: usize,
    opt: &mut Adam,
    dropout_seed: u64,
) -> Result<TrainReport> {
    if train.is_empty() {
        return Err(Error::InvalidParameter("empty training signal".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(dropout_seed);
    let mut losses = Vec::with_capacity(epochs);
    let mut epoch_seconds = Vec::with_capacity(epochs);
    for epoch in 0..epochs {
        let started = Instant::now();
        let tape = Tape::new();
        let mut state: Option<CellState> = None;
        let mut cost: Option<Tensor> = None;
        for snapshot in train.iter() {
            let (loss, new_state) =
                snapshot_loss(model, &tape, &snapshot, state.as_ref(), true, &mut rng)?;
            state = Some(new_state);
            cost = Some(match cost {
                None => loss,
                Some(acc) => acc.add(&loss)?,
            });
        }
        let cost = cost
            .expect("non-empty signal")
            .scale(1.0 / train.len() as f64)?;
        let grads = tape.backward_consuming(&cost)?;
        model.harvest(&grads);
        opt.step(&model.parameters());
        model.zero_grad();
        losses.push(check_finite(cost.item()?, epoch)?);
        epoch_seconds.push(started.elapsed().as_secs_f64());
    }
    Ok(TrainReport {
        regime: Regime::Cumulative,
        epochs,
        seed: dropout_seed,
        losses,
        epoch_seconds,
        optimizer_steps: opt.step_count(),
    })
}

/// Incremental regime: forward, backward, optimizer step and gradient zeroing
/// after every snapshot — `epochs * T` optimizer steps in total. The recorded
/// per-epoch loss is the mean of the per-snapshot losses. Hidden state is
/// detached between snapshots (each snapshot gets a fresh tape) and reset at
/// epoch start.
pub fn train_incremental(
    model: &RecurrentGcn,
    train: &TemporalSignal,
    epochs: usize,
    opt: &mut Adam,
    dropout_seed: u64,
) -> Result<TrainReport> {
    if train.is_empty() {
        return Err(Error::InvalidParameter("empty training signal".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(dropout_seed);
    let mut losses = Vec::with_capacity(epochs);
    let mut epoch_seconds = Vec::with_capacity(epochs);
    for epoch in 0..epochs {
        let started = Instant::now();
        let mut state: Option<CellState> = None;
        let mut epoch_loss = 0.0;
        for snapshot in train.iter() {
            let tape = Tape::new();
            let (loss, new_state) =
                snapshot_loss(model, &tape, &snapshot, state.as_ref(), true, &mut rng)?;
            state = Some(new_state.detach());
            let grads = tape.backward_consuming(&loss)?;
            model.harvest(&grads);
            opt.step(&model.parameters());
            model.zero_grad();
            epoch_loss += check_finite(loss.item()?, epoch)?;
        }
        losses.push(epoch_loss / train.len() as f64);
        epoch_seconds.push(started.elapsed().as_secs_f64());
    }
    Ok(TrainReport {
        regime: Regime::Incremental,
        epochs,
        seed: dropout_seed,
        losses,
        epoch_seconds,
        optimizer_steps: opt.step_count(),
    })
}

pub fn train(
    model: &RecurrentGcn,
    train_sig: &TemporalSignal,
    regime: Regime,
    epochs: usize,
    opt: &mut Adam,
    dropout_seed: u64,
) -> Result<TrainReport> {
    match regime {
        Regime::Cumulative => train_cumulative(model, train_sig, epochs, opt, dropout_seed),
        Regime::Incremental => train_incremental(model, train_sig, epochs, opt, dropout_seed),
    }
}

/// Time-unit averaged mean squared error on a signal with dropout disabled.
/// Deterministic and side-effect free: model parameters are not touched.
pub fn evaluate_mse(model: &RecurrentGcn, test: &TemporalSignal) -> Result<f64> {
    if test.is_empty() {
        return Err(Error::InvalidParameter("empty evaluation signal".into()));
    }
    // Dropout is the identity in eval mode, so this generator is never used.
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let tape = Tape::new();
    let mut state: Option<CellState> = None;
    let mut cost = 0.0;
    for snapshot in test.iter() {
        let (loss, new_state) =
            snapshot_loss(model, &tape, &snapshot, state.as_ref(), false, &mut rng)?;
        state = Some(new_state);
        cost += loss.item()?;
    }
    Ok(cost / test.len() as f64)
}
