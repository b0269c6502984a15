use serde::{Deserialize, Serialize};
use std::path::Path;
use std::sync::Arc;

use crate::autodiff::Tensor;
use crate::graph::Graph;
use crate::signal::{SignalVariant, TemporalSignal};
use crate::{Error, Result};

pub const DATASET_SCHEMA_VERSION: u32 = 1;

/// On-disk dataset document, schema version 1.
///
/// - `variant` declares one of the three signal storage layouts.
/// - `targets` is always per-time: `T` vectors of `nodes` floats.
/// - `features` is one matrix (static-signal variant) or `T` matrices;
///   it may be omitted when `metadata.lag` asks the loader to build lagged
///   features from the target history.
/// - `edges` is one edge block (static-graph variant) or `T` blocks.
#[derive(Serialize, Deserialize, Debug)]
pub struct DatasetDocument {
    pub schema_version: u32,
    pub variant: SignalVariant,
    pub nodes: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub features: Option<Features>,
    pub targets: Vec<Vec<f64>>,
    pub edges: Edges,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub metadata: Option<Metadata>,
}

#[derive(Serialize, Deserialize, Debug)]
#[serde(untagged)]
pub enum Features {
    /// `T` matrices of `nodes x d`.
    Temporal(Vec<Vec<Vec<f64>>>),
    /// One `nodes x d` matrix shared by every snapshot.
    Static(Vec<Vec<f64>>),
}

#[derive(Serialize, Deserialize, Debug)]
#[serde(untagged)]
pub enum Edges {
    Static(EdgeBlock),
    Temporal(Vec<EdgeBlock>),
}

#[derive(Serialize, Deserialize, Debug)]
pub struct EdgeBlock {
    pub edge_index: Vec<(usize, usize)>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub weights: Option<Vec<f64>>,
}

#[derive(Serialize, Deserialize, Debug, Default)]
pub struct Metadata {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub time_span: Option<String>,
    /// Build node features at time `t` from the targets of `t-lag .. t-1`,
    /// shrinking `T` by `lag`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lag: Option<usize>,
}

impl EdgeBlock {
    fn to_graph(&self, nodes: usize, t: usize) -> Result<Arc<Graph>> {
        Graph::new(nodes, self.edge_index.clone(), self.weights.clone())
            .map(Arc::new)
            .map_err(|e| Error::Schema(format!("edges at t={t}: {e}")))
    }
}

fn target_tensor(doc_targets: &[Vec<f64>], nodes: usize, t: usize) -> Result<Tensor> {
    let y = &doc_targets[t];
    if y.len() != nodes {
        return Err(Error::Schema(format!(
            "targets at t={t} have {} entries for {nodes} nodes",
            y.len()
        )));
    }
    Tensor::from_vec(nodes, 1, y.clone()).map_err(|e| Error::Schema(format!("targets at t={t}: {e}")))
}

fn feature_tensor(matrix: &[Vec<f64>], nodes: usize, t: usize) -> Result<Tensor> {
    if matrix.len() != nodes {
        return Err(Error::Schema(format!(
            "features at t={t} have {} rows for {nodes} nodes",
            matrix.len()
        )));
    }
    Tensor::from_rows(matrix).map_err(|e| Error::Schema(format!("features at t={t}: {e}")))
}

/// Validates a document and builds the declared signal variant, applying
/// lag-window feature construction when requested by the metadata.
pub fn build_signal(doc: &DatasetDocument) -> Result<TemporalSignal> {
    if doc.schema_version != DATASET_SCHEMA_VERSION {
        return Err(Error::Schema(format!(
            "unknown schema_version {} (supported: {DATASET_SCHEMA_VERSION})",
            doc.schema_version
        )));
    }
    let t_count = doc.targets.len();
    if t_count == 0 {
        return Err(Error::Schema("dataset declares zero time periods".into()));
    }
    let nodes = doc.nodes;
    let lag = doc.metadata.as_ref().and_then(|m| m.lag);

    let targets: Vec<Tensor> = (0..t_count)
        .map(|t| target_tensor(&doc.targets, nodes, t))
        .collect::<Result<_>>()?;

    if let Some(lag) = lag {
        if doc.features.is_some() {
            return Err(Error::Schema(
                "document declares both explicit features and a lag window".into(),
            ));
        }
        if lag == 0 || lag >= t_count {
            return Err(Error::Schema(format!(
                "lag {lag} incompatible with {t_count} time periods"
            )));
        }
        if doc.variant == SignalVariant::DynamicGraphStaticSignal {
            return Err(Error::Schema(
                "lag-window features contradict the static-signal variant".into(),
            ));
        }
        // Feature row of node i at output time t: its targets at t..t+lag.
        let features: Vec<Tensor> = (0..t_count - lag)
            .map(|t| {
                let mut data = vec![0.0; nodes * lag];
                for node in 0..nodes {
                    for l in 0..lag {
                        data[node * lag + l] = doc.targets[t + l][node];
                    }
                }
                Tensor::from_vec(nodes, lag, data)
                    .map_err(|e| Error::Schema(format!("lagged features at t={t}: {e}")))
            })
            .collect::<Result<_>>()?;
        let targets = targets[lag..].to_vec();
        return match (&doc.edges, doc.variant) {
            (Edges::Static(block), SignalVariant::StaticGraphTemporalSignal) => {
                TemporalSignal::static_graph(block.to_graph(nodes, 0)?, features, targets)
            }
            (Edges::Temporal(blocks), SignalVariant::DynamicGraphTemporalSignal) => {
                if blocks.len() != t_count {
                    return Err(Error::Schema(format!(
                        "{} edge blocks for {t_count} time periods",
                        blocks.len()
                    )));
                }
                let graphs = blocks[lag..]
                    .iter()
                    .enumerate()
                    .map(|(i, b)| b.to_graph(nodes, lag + i))
                    .collect::<Result<_>>()?;
                TemporalSignal::dynamic_graph(graphs, features, targets)
            }
            _ => Err(Error::Schema(format!(
                "edge layout does not match variant {}",
                doc.variant
            ))),
        };
    }

    match (doc.variant, &doc.features, &doc.edges) {
        (SignalVariant::StaticGraphTemporalSignal, Some(Features::Temporal(xs)), Edges::Static(block)) => {
            if xs.len() != t_count {
                return Err(Error::Schema(format!(
                    "{} feature matrices for {t_count} time periods",
                    xs.len()
                )));
            }
            let features = xs
                .iter()
                .enumerate()
                .map(|(t, m)| feature_tensor(m, nodes, t))
                .collect::<Result<_>>()?;
            TemporalSignal::static_graph(block.to_graph(nodes, 0)?, features, targets)
        }
        (SignalVariant::DynamicGraphTemporalSignal, Some(Features::Temporal(xs)), Edges::Temporal(blocks)) => {
            if xs.len() != t_count || blocks.len() != t_count {
                return Err(Error::Schema(format!(
                    "{} feature matrices and {} edge blocks for {t_count} time periods",
                    xs.len(),
                    blocks.len()
                )));
            }
            let features = xs
                .iter()
                .enumerate()
                .map(|(t, m)| feature_tensor(m, nodes, t))
                .collect::<Result<_>>()?;
            let graphs = blocks
                .iter()
                .enumerate()
                .map(|(t, b)| b.to_graph(nodes, t))
                .collect::<Result<_>>()?;
            TemporalSignal::dynamic_graph(graphs, features, targets)
        }
        (SignalVariant::DynamicGraphStaticSignal, Some(Features::Static(x)), Edges::Temporal(blocks)) => {
            if blocks.len() != t_count {
                return Err(Error::Schema(format!(
                    "{} edge blocks for {t_count} time periods",
                    blocks.len()
                )));
            }
            let graphs = blocks
                .iter()
                .enumerate()
                .map(|(t, b)| b.to_graph(nodes, t))
                .collect::<Result<_>>()?;
            TemporalSignal::dynamic_graph_static_signal(
                graphs,
                feature_tensor(x, nodes, 0)?,
                targets,
            )
        }
        (variant, None, _) => Err(Error::Schema(format!(
            "variant {variant} requires a features field (or a lag window)"
        ))),
        (variant, _, _) => Err(Error::Schema(format!(
            "feature/edge layout does not match variant {variant}"
        ))),
    }
}

/// Parses and validates a dataset document from a JSON string.
pub fn load_dataset_str(text: &str) -> Result<TemporalSignal> {
    let doc: DatasetDocument = serde_json::from_str(text).map_err(|e| {
        Error::Parse(format!(
            "line {}, column {}: {e}",
            e.line(),
            e.column()
        ))
    })?;
    build_signal(&doc)
}

/// Loads a dataset JSON file into a validated [`TemporalSignal`].
pub fn load_dataset(path: &Path) -> Result<TemporalSignal> {
    let text = std::fs::read_to_string(path)?;
    load_dataset_str(&text)
}

/// Converts a signal back into a schema-1 document. Lag-constructed features
/// are materialized, so the produced document is a serialization fixed point.
pub fn to_document(sig: &TemporalSignal, metadata: Option<Metadata>) -> DatasetDocument {
    let t_count = sig.len();
    let nodes = sig.num_nodes();
    let matrix = |t: &Tensor| -> Vec<Vec<f64>> {
        (0..t.rows())
            .map(|r| t.data()[r * t.cols()..(r + 1) * t.cols()].to_vec())
            .collect()
    };
    let targets = (0..t_count)
        .map(|t| sig.targets_at(t).data().to_vec())
        .collect();
    let edge_block = |g: &Graph| EdgeBlock {
        edge_index: g.edge_index().to_vec(),
        weights: Some(g.edge_weight().to_vec()),
    };
    let (features, edges) = match sig.variant() {
        SignalVariant::StaticGraphTemporalSignal => (
            Features::Temporal(
                (0..t_count)
                    .map(|t| matrix(&sig.index(t).expect("in range").x))
                    .collect(),
            ),
            Edges::Static(edge_block(sig.static_graph_handle().expect("static variant"))),
        ),
        SignalVariant::DynamicGraphTemporalSignal => (
            Features::Temporal(
                (0..t_count)
                    .map(|t| matrix(&sig.index(t).expect("in range").x))
                    .collect(),
            ),
            Edges::Temporal(
                (0..t_count)
                    .map(|t| edge_block(&sig.index(t).expect("in range").graph))
                    .collect(),
            ),
        ),
        SignalVariant::DynamicGraphStaticSignal => (
            Features::Static(matrix(&sig.index(0).expect("in range").x)),
            Edges::Temporal(
                (0..t_count)
                    .map(|t| edge_block(&sig.index(t).expect("in range").graph))
                    .collect(),
            ),
        ),
    };
    DatasetDocument {
        schema_version: DATASET_SCHEMA_VERSION,
        variant: sig.variant(),
        nodes,
        features: Some(features),
        targets,
        edges,
        metadata,
    }
}

/// JSON text of a signal; stable field order, exact float round-trip.
pub fn serialize_dataset(sig: &TemporalSignal, metadata: Option<Metadata>) -> Result<String> {
    Ok(serde_json::to_string(&to_document(sig, metadata))?)
}

pub fn save_dataset(sig: &TemporalSignal, metadata: Option<Metadata>, path: &Path) -> Result<()> {
    std::fs::write(path, serialize_dataset(sig, metadata)?)?;
    Ok(())
}
