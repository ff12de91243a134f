// SPDX-License-Identifier: Apache-2.0

//! Skip-gram with negative sampling (SGNS) over a walk corpus.
//!
//! For a center node `u` with input vector `f`, an observed context with
//! output vector `c`, and `k` noise nodes with output vectors `n_j`:
//!
//! ```text
//! loss = -ln s(c.f) - sum_j ln s(-n_j.f)        s = logistic sigmoid
//! ```

use rand::Rng;

use super::{AliasTable, EmbedError, EmbeddingMatrix, WalkParams};
use crate::seed;

const MIN_LR_FRACTION: f64 = 1e-4;

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// ln(sigmoid(z)), stable for large |z|.
fn log_sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        -(-z).exp().ln_1p()
    } else {
        z - z.exp().ln_1p()
    }
}

/// Negative-sampling loss for one (center, context, negatives) triple.
pub fn sgns_loss(center: &[f64], context: &[f64], negatives: &[&[f64]]) -> f64 {
    -log_sigmoid(dot(context, center))
        - negatives.iter().map(|n| log_sigmoid(-dot(n, center))).sum::<f64>()
}

#[derive(Debug, Clone, PartialEq)]
pub struct SgnsGradients {
    pub center: Vec<f64>,
    pub context: Vec<f64>,
    pub negatives: Vec<Vec<f64>>,
}

/// Analytic gradient of [`sgns_loss`] with respect to every vector.
pub fn sgns_gradients(center: &[f64], context: &[f64], negatives: &[&[f64]]) -> SgnsGradients {
    let pos = sigmoid(dot(context, center)) - 1.0;
    let mut g_center: Vec<f64> = context.iter().map(|c| pos * c).collect();
    let g_context: Vec<f64> = center.iter().map(|f| pos * f).collect();
    let mut g_negs = Vec::with_capacity(negatives.len());
    for n in negatives {
        let s = sigmoid(dot(n, center));
        for (g, x) in g_center.iter_mut().zip(n.iter()) {
            *g += s * x;
        }
        g_negs.push(center.iter().map(|f| s * f).collect());
    }
    SgnsGradients { center: g_center, context: g_context, negatives: g_negs }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct TrainSummary {
    /// Mean per-pair loss of each epoch, measured before each update.
    pub epoch_losses: Vec<f64>,
    pub pairs_per_epoch: usize,
}

fn pair_count(corpus: &[Vec<u32>], window: usize) -> usize {
    corpus
        .iter()
        .map(|w| {
            let len = w.len();
            (0..len).map(|i| i.min(window) + (len - 1 - i).min(window)).sum::<usize>()
        })
        .sum()
}

/// Train with noise distribution proportional to corpus frequency^0.75.
pub fn train_skipgram(
    corpus: &[Vec<u32>],
    n_nodes: usize,
    params: &WalkParams,
) -> Result<(EmbeddingMatrix, TrainSummary), EmbedError> {
    let mut counts = vec![0.0f64; n_nodes];
    for &id in corpus.iter().flatten() {
        if let Some(c) = counts.get_mut(id as usize) {
            *c += 1.0;
        }
    }
    let noise: Vec<f64> = counts.iter().map(|c| c.powf(0.75)).collect();
    train_skipgram_with_noise(corpus, n_nodes, params, &noise)
}

/// Train with an explicit (unnormalized) noise distribution over nodes.
pub fn train_skipgram_with_noise(
    corpus: &[Vec<u32>],
    n_nodes: usize,
    params: &WalkParams,
    noise: &[f64],
) -> Result<(EmbeddingMatrix, TrainSummary), EmbedError> {
    let params = params.clone().validated()?;
    if let Some(&id) = corpus.iter().flatten().find(|&&id| id as usize >= n_nodes) {
        return Err(EmbedError::NodeOutOfRange { id: id as usize, nodes: n_nodes });
    }
    let pairs = pair_count(corpus, params.window);
    if pairs == 0 {
        return Err(EmbedError::EmptyCorpus);
    }
    let noise_table = AliasTable::new(noise);
    if noise_table.is_empty() {
        return Err(EmbedError::InvalidParam("noise distribution has no mass".into()));
    }

    let d = params.dimensions;
    let mut init_rng = seed::rng(params.seed, &[0x696e_6974]);
    let bound = 0.5 / d as f64;
    let mut input: Vec<f64> = (0..n_nodes * d).map(|_| init_rng.gen_range(-bound..=bound)).collect();
    let mut output = vec![0.0f64; n_nodes * d];

    let mut rng = seed::rng(params.seed, &[0x7367_6e73]);
    let total = (pairs * params.epochs) as f64;
    let mut processed = 0usize;
    let mut grad_center = vec![0.0f64; d];
    let mut negs: Vec<usize> = Vec::with_capacity(params.negatives);
    let mut epoch_losses = Vec::with_capacity(params.epochs);

    for epoch in 0..params.epochs {
        let mut loss_sum = 0.0;
        for walk in corpus {
            let len = walk.len();
            for i in 0..len {
                let center = walk[i] as usize;
                let lo = i.saturating_sub(params.window);
                let hi = (i + params.window).min(len - 1);
                for j in lo..=hi {
                    if j == i {
                        continue;
                    }
                    let context = walk[j] as usize;
                    let lr = params.learning_rate
                        * (1.0 - (1.0 - MIN_LR_FRACTION) * processed as f64 / total);
                    processed += 1;

                    negs.clear();
                    for _ in 0..params.negatives {
                        let n = noise_table.sample(&mut rng).unwrap();
                        if n != context {
                            negs.push(n);
                        }
                    }

                    let f = &input[center * d..(center + 1) * d];
                    grad_center.iter_mut().for_each(|g| *g = 0.0);
                    let mut pair_loss = 0.0;
                    for (target, label) in
                        std::iter::once((context, true)).chain(negs.iter().map(|&n| (n, false)))
                    {
                        let out = &mut output[target * d..(target + 1) * d];
                        let z = dot(out, f);
                        // d loss / d z
                        let g = if label {
                            pair_loss -= log_sigmoid(z);
                            sigmoid(z) - 1.0
                        } else {
                            pair_loss -= log_sigmoid(-z);
                            sigmoid(z)
                        };
                        for k in 0..d {
                            grad_center[k] += g * out[k];
                            out[k] -= lr * g * f[k];
                        }
                    }
                    let f = &mut input[center * d..(center + 1) * d];
                    for k in 0..d {
                        f[k] -= lr * grad_center[k];
                    }
                    loss_sum += pair_loss;
                }
            }
        }
        let mean = loss_sum / pairs as f64;
        if !mean.is_finite() {
            return Err(EmbedError::NonFiniteLoss(epoch + 1));
        }
        epoch_losses.push(mean);
    }

    let matrix = EmbeddingMatrix {
        node_labels: (0..n_nodes).map(|i| i.to_string()).collect(),
        dim: d,
        vectors: input,
        context_vectors: output,
    };
    Ok((matrix, TrainSummary { epoch_losses, pairs_per_epoch: pairs }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn central_difference(
        f: impl Fn(&[f64]) -> f64,
        x: &[f64],
        h: f64,
    ) -> Vec<f64> {
        (0..x.len())
            .map(|i| {
                let mut plus = x.to_vec();
                let mut minus = x.to_vec();
                plus[i] += h;
                minus[i] -= h;
                (f(&plus) - f(&minus)) / (2.0 * h)
            })
            .collect()
    }

    fn rel_err(a: &[f64], b: &[f64]) -> f64 {
        let num: f64 = a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt();
        let den: f64 = a.iter().map(|x| x * x).sum::<f64>().sqrt() + b.iter().map(|x| x * x).sum::<f64>().sqrt();
        if den == 0.0 { 0.0 } else { num / den }
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        let d = 6;
        for _ in 0..10 {
            let mut v = || (0..d).map(|_| rng.gen_range(-1.0..1.0)).collect::<Vec<f64>>();
            let (f, c, n1, n2) = (v(), v(), v(), v());
            let g = sgns_gradients(&f, &c, &[&n1, &n2]);
            let h = 1e-6;
            assert!(rel_err(&g.center, &central_difference(|x| sgns_loss(x, &c, &[&n1, &n2]), &f, h)) < 1e-4);
            assert!(rel_err(&g.context, &central_difference(|x| sgns_loss(&f, x, &[&n1, &n2]), &c, h)) < 1e-4);
            assert!(rel_err(&g.negatives[0], &central_difference(|x| sgns_loss(&f, &c, &[x, &n2]), &n1, h)) < 1e-4);
            assert!(rel_err(&g.negatives[1], &central_difference(|x| sgns_loss(&f, &c, &[&n1, x]), &n2, h)) < 1e-4);
        }
    }

    #[test]
    fn stable_log_sigmoid() {
        assert!(log_sigmoid(-800.0).is_finite());
        assert!((log_sigmoid(0.0) - 0.5f64.ln()).abs() < 1e-15);
        assert_eq!(log_sigmoid(800.0), 0.0);
    }

    #[test]
    fn empty_corpus() {
        let corpus = vec![vec![0u32], vec![1u32]];
        let r = train_skipgram(&corpus, 2, &WalkParams::default());
        assert!(matches!(r, Err(EmbedError::EmptyCorpus)));
    }

    #[test]
    fn out_of_range_ids() {
        let corpus = vec![vec![0u32, 5]];
        assert!(matches!(
            train_skipgram(&corpus, 2, &WalkParams::default()),
            Err(EmbedError::NodeOutOfRange { id: 5, .. })
        ));
    }

    #[test]
    fn loss_decreases() {
        let corpus: Vec<Vec<u32>> = (0..200)
            .map(|i| (0..10).map(|j| ((i + j) % 4 + 4 * (i % 2)) as u32).collect())
            .collect();
        let params = WalkParams { epochs: 4, window: 2, ..WalkParams::default() };
        let (m, s) = train_skipgram(&corpus, 8, &params).unwrap();
        assert_eq!(s.epoch_losses.len(), 4);
        assert!(s.epoch_losses.last().unwrap() < &s.epoch_losses[0]);
        assert!(m.vectors.iter().all(|x| x.is_finite()));
        assert_eq!(m.vectors.len(), 8 * params.dimensions);
    }

    #[test]
    fn pair_counting() {
        assert_eq!(pair_count(&[vec![0, 1, 2]], 1), 4);
        assert_eq!(pair_count(&[vec![0, 1, 2]], 5), 6);
        assert_eq!(pair_count(&[vec![0]], 5), 0);
    }
}
