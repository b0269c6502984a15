use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::autodiff::{Gradients, Parameter, Tape, Tensor};
use crate::graph::{LambdaMax, OperatorCache, OperatorSpec};
use crate::nn::cells::{DcrnnCell, GConvGruCell, GConvLstmCell};
use crate::nn::layers::Linear;
use crate::signal::Snapshot;
use crate::{Error, Result};

/// Implemented recurrent cell kinds.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum ModelKind {
    #[serde(rename = "gconv-gru")]
    GConvGru,
    #[serde(rename = "gconv-lstm")]
    GConvLstm,
    #[serde(rename = "dcrnn")]
    Dcrnn,
}

impl std::fmt::Display for ModelKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            ModelKind::GConvGru => "gconv-gru",
            ModelKind::GConvLstm => "gconv-lstm",
            ModelKind::Dcrnn => "dcrnn",
        };
        f.write_str(s)
    }
}

impl std::str::FromStr for ModelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "gconv-gru" => Ok(ModelKind::GConvGru),
            "gconv-lstm" => Ok(ModelKind::GConvLstm),
            "dcrnn" => Ok(ModelKind::Dcrnn),
            other => Err(Error::InvalidParameter(format!(
                "unknown model kind {other:?} (expected gconv-gru, gconv-lstm or dcrnn)"
            ))),
        }
    }
}

/// Inspectable hyperparameters of a recurrent GCN. Every field is explicit;
/// there are no construction-time defaults.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelConfig {
    pub model: ModelKind,
    pub in_channels: usize,
    pub filters: usize,
    /// Chebyshev order for GConvGRU/GConvLSTM, diffusion order for DCRNN.
    pub k: usize,
    pub lambda_max: LambdaMaxPolicy,
    pub dropout: f64,
}

/// Serializable form of the Laplacian rescaling policy.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LambdaMaxPolicy {
    Fixed(f64),
    Exact,
}

impl From<LambdaMaxPolicy> for LambdaMax {
    fn from(p: LambdaMaxPolicy) -> LambdaMax {
        match p {
            LambdaMaxPolicy::Fixed(v) => LambdaMax::Fixed(v),
            LambdaMaxPolicy::Exact => LambdaMax::Exact,
        }
    }
}

impl ModelConfig {
    pub fn new(
        model: ModelKind,
        in_channels: usize,
        filters: usize,
        k: usize,
        lambda_max: LambdaMaxPolicy,
        dropout: f64,
    ) -> Result<Self> {
        if in_channels == 0 || filters == 0 {
            return Err(Error::InvalidParameter(
                "channel counts must be positive".into(),
            ));
        }
        if !(0.0..1.0).contains(&dropout) {
            return Err(Error::InvalidParameter(format!(
                "dropout must be in [0, 1), got {dropout}"
            )));
        }
        match model {
            ModelKind::GConvGru | ModelKind::GConvLstm if k < 1 => {
                return Err(Error::InvalidParameter(
                    "Chebyshev order K must be at least 1".into(),
                ));
            }
            _ => {}
        }
        Ok(ModelConfig {
            model,
            in_channels,
            filters,
            k,
            lambda_max,
            dropout,
        })
    }

    /// Complete hyperparameter map in a stable order.
    pub fn to_map(&self) -> Vec<(String, serde_json::Value)> {
        vec![
            ("model".into(), json!(self.model)),
            ("in_channels".into(), json!(self.in_channels)),
            ("filters".into(), json!(self.filters)),
            ("k".into(), json!(self.k)),
            ("lambda_max".into(), json!(self.lambda_max)),
            ("dropout".into(), json!(self.dropout)),
        ]
    }

    /// Reconstructs a config from the map produced by [`ModelConfig::to_map`].
    pub fn from_map(map: &[(String, serde_json::Value)]) -> Result<Self> {
        let get = |key: &str| {
            map.iter()
                .find(|(k, _)| k == key)
                .map(|(_, v)| v.clone())
                .ok_or_else(|| Error::InvalidParameter(format!("missing hyperparameter {key}")))
        };
        ModelConfig::new(
            serde_json::from_value(get("model")?)?,
            serde_json::from_value(get("in_channels")?)?,
            serde_json::from_value(get("filters")?)?,
            serde_json::from_value(get("k")?)?,
            serde_json::from_value(get("lambda_max")?)?,
            serde_json::from_value(get("dropout")?)?,
        )
    }
}

/// Recurrent state carried between snapshots.
#[derive(Clone)]
pub enum CellState {
    Hidden(Tensor),
    HiddenCell(Tensor, Tensor),
}

impl CellState {
    /// Untracked copy, used when carrying state across tape boundaries.
    pub fn detach(&self) -> CellState {
        match self {
            CellState::Hidden(h) => CellState::Hidden(h.detach()),
            CellState::HiddenCell(h, c) => CellState::HiddenCell(h.detach(), c.detach()),
        }
    }

    pub fn hidden(&self) -> &Tensor {
        match self {
            CellState::Hidden(h) => h,
            CellState::HiddenCell(h, _) => h,
        }
    }
}

enum Cell {
    Gru(GConvGruCell),
    Lstm(GConvLstmCell),
    Dcrnn(DcrnnCell),
}

/// The reference model: a recurrent graph convolutional cell followed by
/// ReLU, dropout and a single-neuron feedforward layer.
pub struct RecurrentGcn {
    config: ModelConfig,
    seed: u64,
    cell: Cell,
    linear: Linear,
    cache: OperatorCache,
}

impl RecurrentGcn {
    /// Builds a model with Glorot-uniform weights and zero biases drawn from
    /// a generator seeded with `seed`.
    pub fn new(config: ModelConfig, seed: u64) -> Result<Self> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let cell = match config.model {
            ModelKind::GConvGru => Cell::Gru(GConvGruCell::new(
                "cell",
                config.k,
                config.in_channels,
                config.filters,
                &mut rng,
            )?),
            ModelKind::GConvLstm => Cell::Lstm(GConvLstmCell::new(
                "cell",
                config.k,
                config.in_channels,
                config.filters,
                &mut rng,
            )?),
            ModelKind::Dcrnn => Cell::Dcrnn(DcrnnCell::new(
                "cell",
                config.k,
                config.in_channels,
                config.filters,
                &mut rng,
            )?),
        };
        let linear = Linear::new("linear", config.filters, 1, &mut rng);
        Ok(RecurrentGcn {
            config,
            seed,
            cell,
            linear,
            cache: OperatorCache::new(),
        })
    }

    pub fn config(&self) -> &ModelConfig {
        &self.config
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Complete name -> value map of every hyperparameter, in stable order.
    pub fn inspect_hyperparameters(&self) -> Vec<(String, serde_json::Value)> {
        self.config.to_map()
    }

    /// One step over a snapshot: returns the per-node prediction and the new
    /// recurrent state. Operators are built once per graph and cached.
    pub fn forward<R: Rng>(
        &self,
        tape: &Tape,
        snapshot: &Snapshot,
        state: Option<&CellState>,
        training: bool,
        rng: &mut R,
    ) -> Result<(Tensor, CellState)> {
        if snapshot.x.cols() != self.config.in_channels {
            return Err(Error::ShapeMismatch {
                op: "recurrent_gcn",
                lhs: format!("{} input channels", self.config.in_channels),
                rhs: format!("{}x{}", snapshot.x.rows(), snapshot.x.cols()),
            });
        }
        let (h, new_state) = match &self.cell {
            Cell::Gru(cell) => {
                let l_hat = self.cache.get_or_build(
                    &snapshot.graph,
                    OperatorSpec::scaled_laplacian(self.config.lambda_max.into()),
                )?;
                let h_prev = state.map(|s| s.hidden());
                let h = cell.forward(tape, &snapshot.x, h_prev, &l_hat)?;
                (h.clone(), CellState::Hidden(h))
            }
            Cell::Lstm(cell) => {
                let l_hat = self.cache.get_or_build(
                    &snapshot.graph,
                    OperatorSpec::scaled_laplacian(self.config.lambda_max.into()),
                )?;
                let prev = match state {
                    None => None,
                    Some(CellState::HiddenCell(h, c)) => Some((h, c)),
                    Some(CellState::Hidden(_)) => {
                        return Err(Error::InvalidParameter(
                            "LSTM state requires hidden and cell tensors".into(),
                        ))
                    }
                };
                let (h, c) = cell.forward(tape, &snapshot.x, prev, &l_hat)?;
                (h.clone(), CellState::HiddenCell(h, c))
            }
            Cell::Dcrnn(cell) => {
                let rw_out = self
                    .cache
                    .get_or_build(&snapshot.graph, OperatorSpec::RwOut)?;
                let rw_in = self
                    .cache
                    .get_or_build(&snapshot.graph, OperatorSpec::RwIn)?;
                let h_prev = state.map(|s| s.hidden());
                let h = cell.forward(tape, &snapshot.x, h_prev, &rw_out, &rw_in)?;
                (h.clone(), CellState::Hidden(h))
            }
        };
        let activated = h.relu()?.dropout(self.config.dropout, training, rng)?;
        let y_hat = self.linear.forward(tape, &activated)?;
        Ok((y_hat, new_state))
    }

    /// Trainable parameters in a stable order.
    pub fn parameters(&self) -> Vec<&Parameter> {
        let mut params = match &self.cell {
            Cell::Gru(c) => c.parameters(),
            Cell::Lstm(c) => c.parameters(),
            Cell::Dcrnn(c) => c.parameters(),
        };
        params.extend(self.linear.parameters());
        params
    }

    /// Adds the gradients of one backward sweep into every parameter buffer.
    pub fn harvest(&self, grads: &Gradients) {
        for p in self.parameters() {
            p.harvest(grads);
        }
    }

    pub fn zero_grad(&self) {
        for p in self.parameters() {
            p.zero_grad();
        }
    }
}
