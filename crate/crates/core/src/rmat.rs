//! Recursive-matrix (R-MAT) graph generator with Graph500 defaults.

use std::collections::HashSet;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::graph::VertexId;
use crate::stream::EdgeRecord;

#[derive(Debug, Clone, PartialEq)]
pub struct RmatConfig {
    pub scale: u32,
    pub edge_factor: u32,
    pub a: f64,
    pub b: f64,
    pub c: f64,
    /// Weights are drawn uniformly from `(0, max_weight)`; `None` gives unit
    /// weights.
    pub max_weight: Option<f64>,
    pub seed: u64,
}

impl Default for RmatConfig {
    fn default() -> Self {
        RmatConfig {
            scale: 10,
            edge_factor: 16,
            a: 0.57,
            b: 0.19,
            c: 0.19,
            max_weight: Some(4.0),
            seed: 1,
        }
    }
}

impl RmatConfig {
    pub fn validate(&self) -> Result<()> {
        if self.scale == 0 || self.scale > 31 {
            return Err(Error::Config(format!("scale {} outside 1..=31", self.scale)));
        }
        let d = 1.0 - self.a - self.b - self.c;
        if [self.a, self.b, self.c].iter().any(|&p| p < 0.0) || d < 0.0 {
            return Err(Error::Config("quadrant probabilities must be non-negative".into()));
        }
        if matches!(self.max_weight, Some(w) if !(w > 0.0 && w.is_finite())) {
            return Err(Error::Config("maximum weight must be positive".into()));
        }
        Ok(())
    }
}

/// Generates `edge_factor * 2^scale` edge samples, drops self-loops and
/// duplicates, and relabels vertices with a random permutation. Records are
/// stamped 1..n in generation order.
pub fn generate(config: &RmatConfig) -> Result<Vec<EdgeRecord>> {
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let n = 1u64 << config.scale;
    let samples = config.edge_factor as u64 * n;

    let mut labels: Vec<u32> = (0..n as u32).collect();
    labels.shuffle(&mut rng);

    let ab = config.a + config.b;
    let abc = ab + config.c;
    let mut seen = HashSet::with_capacity(samples as usize);
    let mut records = Vec::with_capacity(samples as usize);
    for _ in 0..samples {
        let (mut u, mut v) = (0u64, 0u64);
        for bit in (0..config.scale).rev() {
            let r: f64 = rng.gen();
            let (du, dv) = if r < config.a {
                (0, 0)
            } else if r < ab {
                (0, 1)
            } else if r < abc {
                (1, 0)
            } else {
                (1, 1)
            };
            u |= du << bit;
            v |= dv << bit;
        }
        let weight = match config.max_weight {
            Some(max) => loop {
                let w = rng.gen::<f64>() * max;
                if w > 0.0 {
                    break w;
                }
            },
            None => 1.0,
        };
        if u == v {
            continue;
        }
        let (src, dst) = (VertexId(labels[u as usize]), VertexId(labels[v as usize]));
        if seen.insert((src, dst)) {
            records.push(EdgeRecord {
                src,
                dst,
                weight,
                timestamp: records.len() as u64 + 1,
            });
        }
    }
    Ok(records)
}
