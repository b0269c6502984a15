//! Spatiotemporal signal containers: ordered snapshot sequences in one of
//! three redundancy-free storage variants (dynamic graph + temporal signal,
//! dynamic graph + static signal, static graph + temporal signal).

use std::sync::Arc;

use crate::autodiff::Tensor;
use crate::graph::Graph;
use crate::{Error, Result};

/// Storage variant of a [`TemporalSignal`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum SignalVariant {
    #[serde(rename = "dynamic_graph_temporal_signal")]
    DynamicGraphTemporalSignal,
    #[serde(rename = "dynamic_graph_static_signal")]
    DynamicGraphStaticSignal,
    #[serde(rename = "static_graph_temporal_signal")]
    StaticGraphTemporalSignal,
}

impl std::fmt::Display for SignalVariant {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            SignalVariant::DynamicGraphTemporalSignal => "dynamic_graph_temporal_signal",
            SignalVariant::DynamicGraphStaticSignal => "dynamic_graph_static_signal",
            SignalVariant::StaticGraphTemporalSignal => "static_graph_temporal_signal",
        };
        f.write_str(s)
    }
}

enum GraphStore {
    Static(Arc<Graph>),
    Dynamic(Vec<Arc<Graph>>),
}

enum FeatureStore {
    Static(Tensor),
    Temporal(Vec<Tensor>),
}

/// One time period of a signal: the graph, node features, targets and an
/// optional node mask consumed by the loss. Snapshots are lightweight views
/// over the stored arrays, not copies.
#[derive(Clone)]
pub struct Snapshot {
    pub graph: Arc<Graph>,
    pub x: Tensor,
    pub y: Tensor,
    pub t: usize,
    pub mask: Option<Arc<Vec<bool>>>,
}

/// Ordered, immutable snapshot container. Iteration yields snapshots with
/// strictly increasing `t` from `0` to `T-1`; direct indexing via
/// [`TemporalSignal::index`] returns the same views.
pub struct TemporalSignal {
    variant: SignalVariant,
    graphs: GraphStore,
    features: FeatureStore,
    targets: Vec<Tensor>,
    masks: Option<Vec<Arc<Vec<bool>>>>,
    len: usize,
}

impl TemporalSignal {
    /// Static graph with a temporal signal: one graph, `T` feature matrices,
    /// `T` target matrices.
    pub fn static_graph(
        graph: Arc<Graph>,
        features: Vec<Tensor>,
        targets: Vec<Tensor>,
    ) -> Result<Self> {
        let len = features.len();
        if targets.len() != len {
            return Err(Error::InvalidSignal {
                t: targets.len().min(len),
                message: format!("{} feature matrices but {} target matrices", len, targets.len()),
            });
        }
        if len == 0 {
            return Err(Error::InvalidSignal {
                t: 0,
                message: "empty signal".into(),
            });
        }
        let signal = TemporalSignal {
            variant: SignalVariant::StaticGraphTemporalSignal,
            graphs: GraphStore::Static(graph),
            features: FeatureStore::Temporal(features),
            targets,
            masks: None,
            len,
        };
        signal.validate()?;
        Ok(signal)
    }

    /// Dynamic graph with a temporal signal: `T` graphs, `T` feature
    /// matrices, `T` target matrices.
    pub fn dynamic_graph(
        graphs: Vec<Arc<Graph>>,
        features: Vec<Tensor>,
        targets: Vec<Tensor>,
    ) -> Result<Self> {
        let len = graphs.len();
        if features.len() != len || targets.len() != len {
            return Err(Error::InvalidSignal {
                t: features.len().min(targets.len()).min(len),
                message: format!(
                    "{} graphs, {} feature matrices, {} target matrices",
                    len,
                    features.len(),
                    targets.len()
                ),
            });
        }
        if len == 0 {
            return Err(Error::InvalidSignal {
                t: 0,
                message: "empty signal".into(),
            });
        }
        let signal = TemporalSignal {
            variant: SignalVariant::DynamicGraphTemporalSignal,
            graphs: GraphStore::Dynamic(graphs),
            features: FeatureStore::Temporal(features),
            targets,
            masks: None,
            len,
        };
        signal.validate()?;
        Ok(signal)
    }

    /// Dynamic graph with a static signal: `T` graphs, one feature matrix,
    /// `T` target matrices.
    pub fn dynamic_graph_static_signal(
        graphs: Vec<Arc<Graph>>,
        features: Tensor,
        targets: Vec<Tensor>,
    ) -> Result<Self> {
        let len = graphs.len();
        if targets.len() != len {
            return Err(Error::InvalidSignal {
                t: targets.len().min(len),
                message: format!("{} graphs but {} target matrices", len, targets.len()),
            });
        }
        if len == 0 {
            return Err(Error::InvalidSignal {
                t: 0,
                message: "empty signal".into(),
            });
        }
        let signal = TemporalSignal {
            variant: SignalVariant::DynamicGraphStaticSignal,
            graphs: GraphStore::Dynamic(graphs),
            features: FeatureStore::Static(features),
            targets,
            masks: None,
            len,
        };
        signal.validate()?;
        Ok(signal)
    }

    /// Attaches per-snapshot node masks consumed by the loss (all-true when
    /// absent).
    pub fn with_masks(mut self, masks: Vec<Vec<bool>>) -> Result<Self> {
        if masks.len() != self.len {
            return Err(Error::InvalidSignal {
                t: masks.len().min(self.len),
                message: format!("{} masks for {} snapshots", masks.len(), self.len),
            });
        }
        for (t, m) in masks.iter().enumerate() {
            if m.len() != self.num_nodes() {
                return Err(Error::InvalidSignal {
                    t,
                    message: format!(
                        "mask has {} entries for {} nodes",
                        m.len(),
                        self.num_nodes()
                    ),
                });
            }
        }
        self.masks = Some(masks.into_iter().map(Arc::new).collect());
        Ok(self)
    }

    fn validate(&self) -> Result<()> {
        let n = self.num_nodes();
        for t in 0..self.len {
            let g = self.graph_at(t);
            if g.num_nodes() != n {
                return Err(Error::InvalidSignal {
                    t,
                    message: format!(
                        "graph has {} nodes, expected constant {}",
                        g.num_nodes(),
                        n
                    ),
                });
            }
            let x = self.features_at(t);
            if x.rows() != n {
                return Err(Error::InvalidSignal {
                    t,
                    message: format!("feature matrix has {} rows for {} nodes", x.rows(), n),
                });
            }
            let y = &self.targets[t];
            if y.rows() != n {
                return Err(Error::InvalidSignal {
                    t,
                    message: format!("target matrix has {} rows for {} nodes", y.rows(), n),
                });
            }
        }
        Ok(())
    }

    pub fn variant(&self) -> SignalVariant {
        self.variant
    }

    /// Snapshot count `T`.
    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn num_nodes(&self) -> usize {
        self.graph_at(0).num_nodes()
    }

    /// Feature width `d`.
    pub fn num_features(&self) -> usize {
        self.features_at(0).cols()
    }

    fn graph_at(&self, t: usize) -> &Arc<Graph> {
        match &self.graphs {
            GraphStore::Static(g) => g,
            GraphStore::Dynamic(gs) => &gs[t],
        }
    }

    fn features_at(&self, t: usize) -> &Tensor {
        match &self.features {
            FeatureStore::Static(x) => x,
            FeatureStore::Temporal(xs) => &xs[t],
        }
    }

    pub fn targets_at(&self, t: usize) -> &Tensor {
        &self.targets[t]
    }

    /// Direct access to the `t`-th snapshot of iteration order.
    pub fn index(&self, t: usize) -> Result<Snapshot> {
        if t >= self.len {
            return Err(Error::InvalidParameter(format!(
                "snapshot index {t} out of range for T={}",
                self.len
            )));
        }
        Ok(Snapshot {
            graph: Arc::clone(self.graph_at(t)),
            x: self.features_at(t).clone(),
            y: self.targets[t].clone(),
            t,
            mask: self.masks.as_ref().map(|m| Arc::clone(&m[t])),
        })
    }

    pub fn iter(&self) -> SignalIter<'_> {
        SignalIter { signal: self, t: 0 }
    }

    /// Temporal train/test split: the first `floor(train_ratio * T)`
    /// snapshots become the train side, the remainder the test side. Both
    /// sides preserve the variant and share the underlying storage.
    pub fn split(&self, train_ratio: f64) -> Result<(TemporalSignal, TemporalSignal)> {
        if !(0.0..1.0).contains(&train_ratio) || train_ratio <= 0.0 {
            return Err(Error::InvalidParameter(format!(
                "train_ratio must be in (0, 1), got {train_ratio}"
            )));
        }
        let train_len = (train_ratio * self.len as f64).floor() as usize;
        if train_len == 0 || train_len == self.len {
            return Err(Error::InvalidParameter(format!(
                "split of T={} at ratio {train_ratio} leaves one side empty",
                self.len
            )));
        }
        Ok((self.slice(0, train_len), self.slice(train_len, self.len)))
    }

    fn slice(&self, start: usize, end: usize) -> TemporalSignal {
        let graphs = match &self.graphs {
            GraphStore::Static(g) => GraphStore::Static(Arc::clone(g)),
            GraphStore::Dynamic(gs) => {
                GraphStore::Dynamic(gs[start..end].iter().map(Arc::clone).collect())
            }
        };
        let features = match &self.features {
            FeatureStore::Static(x) => FeatureStore::Static(x.clone()),
            FeatureStore::Temporal(xs) => {
                FeatureStore::Temporal(xs[start..end].to_vec())
            }
        };
        TemporalSignal {
            variant: self.variant,
            graphs,
            features,
            targets: self.targets[start..end].to_vec(),
            masks: self
                .masks
                .as_ref()
                .map(|m| m[start..end].iter().map(Arc::clone).collect()),
            len: end - start,
        }
    }

    /// Shared-graph handle for the static-graph variant.
    pub fn static_graph_handle(&self) -> Option<&Arc<Graph>> {
        match &self.graphs {
            GraphStore::Static(g) => Some(g),
            GraphStore::Dynamic(_) => None,
        }
    }
}

impl std::fmt::Debug for TemporalSignal {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("TemporalSignal")
            .field("variant", &self.variant)
            .field("len", &self.len)
            .field("num_nodes", &self.num_nodes())
            .field("num_features", &self.num_features())
            .finish()
    }
}

/// Borrowed iterator over snapshots in temporal order.
pub struct SignalIter<'a> {
    signal: &'a TemporalSignal,
    t: usize,
}

impl Iterator for SignalIter<'_> {
    type Item = Snapshot;

    fn next(&mut self) -> Option<Snapshot> {
        if self.t >= self.signal.len() {
            return None;
        }
        let snap = self.signal.index(self.t).expect("in-range index");
        self.t += 1;
        Some(snap)
    }
}

impl<'a> IntoIterator for &'a TemporalSignal {
    type Item = Snapshot;
    type IntoIter = SignalIter<'a>;

    fn into_iter(self) -> SignalIter<'a> {
        self.iter()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn constant_tensor(n: usize, d: usize, fill: f64) -> Tensor {
        Tensor::from_vec(n, d, vec![fill; n * d]).unwrap()
    }

    fn static_signal(t_count: usize, n: usize) -> TemporalSignal {
        let graph = Arc::new(Graph::new(n, vec![(0, 1), (1, 0)], None).unwrap());
        let features = (0..t_count)
            .map(|t| constant_tensor(n, 3, t as f64))
            .collect();
        let targets = (0..t_count)
            .map(|t| constant_tensor(n, 1, -(t as f64)))
            .collect();
        TemporalSignal::static_graph(graph, features, targets).unwrap()
    }

    #[test]
    fn iteration_yields_increasing_t_and_matching_views() {
        let sig = static_signal(5, 4);
        assert_eq!(sig.len(), 5);
        assert_eq!(sig.num_nodes(), 4);
        assert_eq!(sig.num_features(), 3);
        for (i, snap) in sig.iter().enumerate() {
            assert_eq!(snap.t, i);
            let direct = sig.index(i).unwrap();
            assert_eq!(snap.x.data(), direct.x.data());
            assert_eq!(snap.y.data(), direct.y.data());
        }
        assert!(sig.index(5).is_err());
    }

    #[test]
    fn split_arithmetic() {
        let (train, test) = static_signal(100, 2).split(0.9).unwrap();
        assert_eq!((train.len(), test.len()), (90, 10));
        let (train, test) = static_signal(10, 2).split(0.9).unwrap();
        assert_eq!((train.len(), test.len()), (9, 1));
    }

    #[test]
    fn split_concat_identity() {
        let sig = static_signal(10, 3);
        let (train, test) = sig.split(0.7).unwrap();
        let rejoined: Vec<Snapshot> = train.iter().chain(test.iter()).collect();
        assert_eq!(rejoined.len(), sig.len());
        for (snap, orig) in rejoined.iter().zip(sig.iter()) {
            assert_eq!(snap.x.data(), orig.x.data());
            assert_eq!(snap.y.data(), orig.y.data());
            assert!(Arc::ptr_eq(&snap.graph, &orig.graph));
        }
    }

    #[test]
    fn split_shares_storage() {
        let sig = static_signal(10, 3);
        let (train, test) = sig.split(0.5).unwrap();
        let g = sig.static_graph_handle().unwrap();
        assert!(Arc::ptr_eq(g, train.static_graph_handle().unwrap()));
        assert!(Arc::ptr_eq(g, test.static_graph_handle().unwrap()));
        // Feature matrices are views on the same buffers, not copies.
        assert!(test.index(0).unwrap().x.shares_storage(&sig.index(5).unwrap().x));
        assert!(test.index(0).unwrap().y.shares_storage(&sig.index(5).unwrap().y));
    }

    #[test]
    fn split_rejects_degenerate_ratios() {
        let sig = static_signal(10, 2);
        assert!(sig.split(0.0).is_err());
        assert!(sig.split(1.0).is_err());
        assert!(sig.split(0.05).is_err()); // empty train side
        let two = static_signal(2, 2);
        assert!(two.split(0.5).is_ok());
    }

    #[test]
    fn variant_is_preserved_by_split() {
        let graphs: Vec<Arc<Graph>> = (0..6)
            .map(|_| Arc::new(Graph::new(2, vec![(0, 1), (1, 0)], None).unwrap()))
            .collect();
        let features = constant_tensor(2, 4, 1.0);
        let targets = (0..6).map(|_| constant_tensor(2, 1, 0.0)).collect();
        let sig =
            TemporalSignal::dynamic_graph_static_signal(graphs, features, targets).unwrap();
        assert_eq!(sig.variant(), SignalVariant::DynamicGraphStaticSignal);
        let (train, test) = sig.split(0.5).unwrap();
        assert_eq!(train.variant(), sig.variant());
        assert_eq!(test.variant(), sig.variant());
        // The single feature matrix is shared by every snapshot on both sides.
        assert!(train.index(0).unwrap().x.shares_storage(&test.index(2).unwrap().x));
    }

    #[test]
    fn dynamic_graph_variant_keeps_per_step_graphs() {
        let graphs: Vec<Arc<Graph>> = (0..4)
            .map(|_| Arc::new(Graph::new(3, vec![(0, 1), (1, 0)], None).unwrap()))
            .collect();
        let features = (0..4).map(|_| constant_tensor(3, 2, 1.0)).collect();
        let targets = (0..4).map(|_| constant_tensor(3, 1, 0.0)).collect();
        let sig = TemporalSignal::dynamic_graph(graphs.clone(), features, targets).unwrap();
        assert_eq!(sig.variant(), SignalVariant::DynamicGraphTemporalSignal);
        assert!(sig.static_graph_handle().is_none());
        for (t, snap) in sig.iter().enumerate() {
            assert!(Arc::ptr_eq(&snap.graph, &graphs[t]));
        }
    }

    #[test]
    fn construction_errors_name_the_offending_snapshot() {
        let graph = Arc::new(Graph::new(2, vec![(0, 1), (1, 0)], None).unwrap());
        let features = vec![constant_tensor(2, 3, 0.0), constant_tensor(5, 3, 0.0)];
        let targets = vec![constant_tensor(2, 1, 0.0), constant_tensor(2, 1, 0.0)];
        let err = match TemporalSignal::static_graph(graph.clone(), features, targets) {
            Err(e) => e,
            Ok(_) => panic!("mismatched rows must be rejected"),
        };
        assert!(err.to_string().contains("t=1"), "{err}");
        assert!(
            TemporalSignal::static_graph(graph, vec![], vec![]).is_err(),
            "empty signal must be rejected"
        );
    }

    #[test]
    fn masks_are_validated_and_carried_through_split() {
        let sig = static_signal(4, 3);
        assert!(static_signal(4, 3).with_masks(vec![vec![true; 3]; 3]).is_err());
        assert!(static_signal(4, 3).with_masks(vec![vec![true; 2]; 4]).is_err());
        let masked = sig
            .with_masks(vec![
                vec![true, false, true],
                vec![true, true, true],
                vec![false, false, true],
                vec![true, true, false],
            ])
            .unwrap();
        let (train, test) = masked.split(0.5).unwrap();
        assert_eq!(
            train.index(0).unwrap().mask.as_deref(),
            Some(&vec![true, false, true])
        );
        assert_eq!(
            test.index(1).unwrap().mask.as_deref(),
            Some(&vec![true, true, false])
        );
    }
}
