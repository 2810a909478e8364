use serde::{Deserialize, Serialize};

use crate::data::WindowSet;
use crate::error::{Error, Result};
use crate::rng::{derive_indexed, Rng};
use crate::score::{AnomalyScoreSeries, ScoreRow};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct IsoForestConfig {
    pub tree_count: usize,
    /// Per-tree subsample size; capped at the number of windows.
    pub subsample_size: usize,
    pub seed: u64,
}

impl Default for IsoForestConfig {
    fn default() -> Self {
        IsoForestConfig {
            tree_count: 100,
            subsample_size: 256,
            seed: 42,
        }
    }
}

impl IsoForestConfig {
    pub fn validate(&self) -> Result<()> {
        if self.tree_count == 0 {
            return Err(Error::Argument("tree_count must be >= 1".into()));
        }
        if self.subsample_size < 2 {
            return Err(Error::Argument("subsample_size must be >= 2".into()));
        }
        Ok(())
    }
}

/// Average unsuccessful-search path length in a binary search tree of n
/// nodes: c(n) = 2 H(n-1) - 2 (n-1)/n with H the exact harmonic number;
/// c(0) = c(1) = 0.
pub fn avg_path_length(n: usize) -> f64 {
    if n <= 1 {
        return 0.0;
    }
    let harmonic: f64 = (1..n).map(|i| 1.0 / i as f64).sum();
    2.0 * harmonic - 2.0 * (n as f64 - 1.0) / n as f64
}

enum Node {
    Internal {
        feature: usize,
        split: f64,
        left: usize,
        right: usize,
    },
    Leaf {
        size: usize,
    },
}

struct Tree {
    nodes: Vec<Node>,
}

impl Tree {
    fn build(points: &[&[f64]], sample: &mut [usize], height_limit: usize, rng: &mut Rng) -> Tree {
        let mut tree = Tree { nodes: Vec::new() };
        tree.build_node(points, sample, 0, height_limit, rng);
        tree
    }

    fn build_node(
        &mut self,
        points: &[&[f64]],
        sample: &mut [usize],
        depth: usize,
        height_limit: usize,
        rng: &mut Rng,
    ) -> usize {
        if sample.len() <= 1 || depth >= height_limit {
            self.nodes.push(Node::Leaf { size: sample.len() });
            return self.nodes.len() - 1;
        }
        let dims = points[sample[0]].len();
        // Features where the sample actually varies; identical points cannot
        // be split further.
        let splittable: Vec<(usize, f64, f64)> = (0..dims)
            .filter_map(|d| {
                let mut min = f64::INFINITY;
                let mut max = f64::NEG_INFINITY;
                for &i in sample.iter() {
                    let v = points[i][d];
                    min = min.min(v);
                    max = max.max(v);
                }
                (max > min).then_some((d, min, max))
            })
            .collect();
        if splittable.is_empty() {
            self.nodes.push(Node::Leaf { size: sample.len() });
            return self.nodes.len() - 1;
        }
        let (feature, min, max) = splittable[rng.index(splittable.len())];
        let split = rng.uniform_in(min, max);

        // Partition in place: left gets values < split.
        let mut mid = 0;
        for i in 0..sample.len() {
            if points[sample[i]][feature] < split {
                sample.swap(i, mid);
                mid += 1;
            }
        }
        // A degenerate cut (all points on one side) still terminates because
        // the recursion is capped by the height limit.
        let node_id = self.nodes.len();
        self.nodes.push(Node::Leaf { size: 0 }); // placeholder
        let (left_sample, right_sample) = sample.split_at_mut(mid);
        let left = self.build_node(points, left_sample, depth + 1, height_limit, rng);
        let right = self.build_node(points, right_sample, depth + 1, height_limit, rng);
        self.nodes[node_id] = Node::Internal {
            feature,
            split,
            left,
            right,
        };
        node_id
    }

    fn path_length(&self, x: &[f64]) -> f64 {
        let mut id = 0;
        let mut depth = 0.0;
        loop {
            match &self.nodes[id] {
                Node::Leaf { size } => return depth + avg_path_length(*size),
                Node::Internal {
                    feature,
                    split,
                    left,
                    right,
                } => {
                    id = if x[*feature] < *split { *left } else { *right };
                    depth += 1.0;
                }
            }
        }
    }
}

/// Isolation-forest scores: 2^(-E[h(x)] / c(subsample)), in (0, 1], higher =
/// more anomalous. Each window is one feature vector of length `window_len`.
pub fn iso_forest_score(windows: &WindowSet, cfg: &IsoForestConfig) -> Result<AnomalyScoreSeries> {
    cfg.validate()?;
    if windows.len() < 2 {
        return Err(Error::Argument(format!(
            "isolation forest needs at least 2 windows, got {}",
            windows.len()
        )));
    }
    let points: Vec<&[f64]> = windows.windows.iter().map(|w| w.values.as_slice()).collect();
    let n = points.len();
    let sample_size = cfg.subsample_size.min(n);
    let height_limit = (sample_size as f64).log2().ceil() as usize;
    let normalizer = avg_path_length(sample_size);

    let trees: Vec<Tree> = (0..cfg.tree_count)
        .map(|t| {
            let mut rng = Rng::new(derive_indexed(cfg.seed, t as u64));
            let mut sample = rng.sample_indices(n, sample_size);
            Tree::build(&points, &mut sample, height_limit, &mut rng)
        })
        .collect();

    let rows = windows
        .windows
        .iter()
        .map(|w| {
            let x = w.values.as_slice();
            let mean_path: f64 =
                trees.iter().map(|t| t.path_length(x)).sum::<f64>() / trees.len() as f64;
            ScoreRow {
                start_index: w.start_index,
                start_time: w.start_time,
                end_time: w.end_time,
                residual: None,
                discrimination: None,
                score: 2f64.powf(-mean_path / normalizer),
            }
        })
        .collect();

    Ok(AnomalyScoreSeries {
        detector: "isoforest".into(),
        rows,
    })
}
