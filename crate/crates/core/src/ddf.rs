//! The dynamical distance function: a classifier over geometric step-count
//! bins, trained on state pairs cut from stored trajectories.

use std::io::{Read, Write};

use rand::seq::SliceRandom;
use rand::Rng;

use crate::domain::{concat, Episode};
use crate::error::{Error, Result};
use crate::nn::{self, Adam, Mlp};
use crate::rng::RngHandle;

/// Geometric discretization of step counts `0..=horizon` into bins `1..=B`.
///
/// Bin `k` covers `(u_{k-1}, u_k]` with `u_k = round(T^(k/B))`, `u_B = T`,
/// and `u_0 = -1` so that zero-step pairs land in bin 1.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BinSpec {
    horizon: usize,
    upper: Vec<usize>,
}

impl BinSpec {
    pub fn new(horizon: usize, num_bins: usize) -> Result<Self> {
        let infeasible = Error::InfeasibleBinning {
            horizon,
            bins: num_bins,
        };
        if num_bins == 0 || horizon < num_bins {
            return Err(infeasible);
        }
        let mut upper: Vec<usize> = (1..=num_bins)
            .map(|k| (horizon as f64).powf(k as f64 / num_bins as f64).round() as usize)
            .collect();
        upper[num_bins - 1] = horizon;
        if upper.windows(2).any(|w| w[0] >= w[1]) {
            return Err(infeasible);
        }
        Ok(Self { horizon, upper })
    }

    pub fn num_bins(&self) -> usize {
        self.upper.len()
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    pub fn upper_bounds(&self) -> &[usize] {
        &self.upper
    }

    /// 1-indexed bin holding `steps`.
    pub fn bin_of(&self, steps: usize) -> Result<usize> {
        if steps > self.horizon {
            return Err(Error::OutOfRange {
                steps,
                horizon: self.horizon,
            });
        }
        Ok(self.upper.partition_point(|&u| u < steps) + 1)
    }

    /// Inclusive step range covered by a 1-indexed bin.
    pub fn range(&self, bin: usize) -> (usize, usize) {
        let lo = if bin == 1 { 0 } else { self.upper[bin - 2] + 1 };
        (lo, self.upper[bin - 1])
    }
}

/// Two states from one episode, `steps` apart in time.
#[derive(Clone, Debug, PartialEq)]
pub struct DistancePair {
    pub first: Vec<f64>,
    pub second: Vec<f64>,
    pub steps: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct LabeledPair {
    pub pair: DistancePair,
    /// 1-indexed bin of `pair.steps`.
    pub bin: usize,
}

/// Class-balanced pair extraction.
///
/// For every episode: pick a bin uniformly among those reachable within the
/// episode's length, then an index pair `(i, j)`, `i <= j`, uniformly among
/// those whose gap falls in that bin.
pub fn build_pair_dataset<'a>(
    episodes: impl IntoIterator<Item = &'a Episode>,
    pairs_per_episode: usize,
    spec: &BinSpec,
    rng: &mut RngHandle,
) -> Result<Vec<LabeledPair>> {
    let mut out = Vec::new();
    let mut seen = false;
    for ep in episodes {
        seen = true;
        let len = ep.len();
        let states: Vec<&[f64]> = ep.states().collect();
        // bins with at least one feasible gap, with their pair counts
        let feasible: Vec<(usize, usize, usize)> = (1..=spec.num_bins())
            .filter_map(|b| {
                let (lo, hi) = spec.range(b);
                (lo <= len).then_some((b, lo, hi.min(len)))
            })
            .collect();
        for _ in 0..pairs_per_episode {
            let &(bin, lo, hi) = feasible.choose(rng).expect("bin 1 is always feasible");
            let total: usize = (lo..=hi).map(|d| len + 1 - d).sum();
            let mut r = rng.gen_range(0..total);
            let mut gap = lo;
            while r >= len + 1 - gap {
                r -= len + 1 - gap;
                gap += 1;
            }
            let i = r;
            out.push(LabeledPair {
                pair: DistancePair {
                    first: states[i].to_vec(),
                    second: states[i + gap].to_vec(),
                    steps: gap,
                },
                bin,
            });
        }
    }
    if !seen {
        return Err(Error::EmptyDataset);
    }
    Ok(out)
}

/// Anything that can place a state pair into a distance bin.
pub trait BinPredictor {
    fn num_bins(&self) -> usize;

    /// Predicted 1-indexed bin from `origin` to each state.
    fn predict_bins(&self, origin: &[f64], states: &[Vec<f64>]) -> Result<Vec<usize>>;
}

#[derive(Clone, Debug, PartialEq)]
pub struct DdfModel {
    net: Mlp,
    bins: BinSpec,
    state_dim: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct DdfTrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
}

impl Default for DdfTrainConfig {
    fn default() -> Self {
        Self {
            epochs: 5,
            batch_size: 64,
            learning_rate: 1e-3,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TrainReport {
    /// Mean loss over the last epoch.
    pub final_loss: f64,
    pub gradient_steps: usize,
}

fn argmax_lowest(xs: &[f64]) -> usize {
    let mut best = 0;
    for (i, x) in xs.iter().enumerate() {
        if *x > xs[best] {
            best = i;
        }
    }
    best
}

impl DdfModel {
    pub fn new(
        state_dim: usize,
        hidden: &[usize],
        bins: BinSpec,
        rng: &mut RngHandle,
    ) -> Result<Self> {
        let mut sizes = vec![2 * state_dim];
        sizes.extend_from_slice(hidden);
        sizes.push(bins.num_bins());
        let net = Mlp::new(&sizes, rng)?;
        Ok(Self {
            net,
            bins,
            state_dim,
        })
    }

    pub fn from_net(net: Mlp, bins: BinSpec) -> Result<Self> {
        if net.output_dim() != bins.num_bins() || !net.input_dim().is_multiple_of(2) {
            return Err(Error::Spec(format!(
                "network {:?} does not fit {} bins over state pairs",
                net.sizes(),
                bins.num_bins()
            )));
        }
        Ok(Self {
            state_dim: net.input_dim() / 2,
            net,
            bins,
        })
    }

    pub fn net(&self) -> &Mlp {
        &self.net
    }

    pub fn bins(&self) -> &BinSpec {
        &self.bins
    }

    pub fn state_dim(&self) -> usize {
        self.state_dim
    }

    fn input(&self, a: &[f64], b: &[f64]) -> Result<Vec<f64>> {
        for v in [a, b] {
            if v.len() != self.state_dim {
                return Err(Error::Dimension {
                    expected: self.state_dim,
                    got: v.len(),
                });
            }
        }
        Ok(concat(&[a, b]))
    }

    /// Argmax bin (ties toward the lower bin) and the raw logits.
    pub fn predict_bin(&self, origin: &[f64], state: &[f64]) -> Result<(usize, Vec<f64>)> {
        let logits = self.net.forward(&self.input(origin, state)?)?;
        Ok((argmax_lowest(&logits) + 1, logits))
    }

    /// Minibatch cross-entropy training. The caller decides whether `self`
    /// is freshly initialized or warm.
    pub fn train(
        &mut self,
        dataset: &[LabeledPair],
        config: &DdfTrainConfig,
        rng: &mut RngHandle,
    ) -> Result<TrainReport> {
        if dataset.is_empty() {
            return Err(Error::EmptyDataset);
        }
        let b = self.bins.num_bins();
        if let Some(p) = dataset.iter().find(|p| p.bin == 0 || p.bin > b) {
            return Err(Error::Label {
                label: p.bin,
                classes: b,
            });
        }
        let inputs: Vec<Vec<f64>> = dataset
            .iter()
            .map(|p| self.input(&p.pair.first, &p.pair.second))
            .collect::<Result<_>>()?;
        let dim = self.net.input_dim();
        let mut adam = Adam::new(self.net.num_params(), config.learning_rate);
        let mut order: Vec<usize> = (0..dataset.len()).collect();
        let batch_size = config.batch_size.max(1);
        let mut final_loss = f64::NAN;
        let mut steps = 0;
        let mut flat = Vec::with_capacity(batch_size * dim);
        let mut labels = Vec::with_capacity(batch_size);
        for _ in 0..config.epochs.max(1) {
            order.shuffle(rng);
            let mut total = 0.0;
            for chunk in order.chunks(batch_size) {
                flat.clear();
                labels.clear();
                for &i in chunk {
                    flat.extend_from_slice(&inputs[i]);
                    labels.push(dataset[i].bin - 1);
                }
                let (loss, grads) = nn::cross_entropy_flat(&self.net, &flat, &labels)?;
                adam.step(self.net.params_mut(), &grads)?;
                total += loss * chunk.len() as f64;
                steps += 1;
            }
            final_loss = total / dataset.len() as f64;
        }
        Ok(TrainReport {
            final_loss,
            gradient_steps: steps,
        })
    }

    /// Fraction of pairs whose predicted bin is within `tolerance` of the label.
    pub fn accuracy(&self, dataset: &[LabeledPair], tolerance: usize) -> Result<f64> {
        if dataset.is_empty() {
            return Err(Error::EmptyDataset);
        }
        let mut hits = 0;
        for p in dataset {
            let (bin, _) = self.predict_bin(&p.pair.first, &p.pair.second)?;
            if bin.abs_diff(p.bin) <= tolerance {
                hits += 1;
            }
        }
        Ok(hits as f64 / dataset.len() as f64)
    }

    /// Checkpoint: `b"DDF1"`, u32 LE bins, u32 LE horizon, u32 LE upper bound
    /// per bin, then the network in [`Mlp::write_to`] format.
    pub fn write_to(&self, w: &mut impl Write) -> Result<()> {
        w.write_all(b"DDF1")?;
        w.write_all(&(self.bins.num_bins() as u32).to_le_bytes())?;
        w.write_all(&(self.bins.horizon as u32).to_le_bytes())?;
        for u in &self.bins.upper {
            w.write_all(&(*u as u32).to_le_bytes())?;
        }
        self.net.write_to(w)
    }

    pub fn read_from(r: &mut impl Read) -> Result<Self> {
        let mut magic = [0u8; 4];
        r.read_exact(&mut magic)?;
        if &magic != b"DDF1" {
            return Err(Error::Format("bad distance-model magic".into()));
        }
        let b = crate::nn::read_u32(r)? as usize;
        let t = crate::nn::read_u32(r)? as usize;
        let bins = BinSpec::new(t, b).map_err(|e| Error::Format(e.to_string()))?;
        for expected in bins.upper.clone() {
            if crate::nn::read_u32(r)? as usize != expected {
                return Err(Error::Format("bin bounds disagree with (B, T)".into()));
            }
        }
        Self::from_net(Mlp::read_from(r)?, bins)
    }
}

impl BinPredictor for DdfModel {
    fn num_bins(&self) -> usize {
        self.bins.num_bins()
    }

    fn predict_bins(&self, origin: &[f64], states: &[Vec<f64>]) -> Result<Vec<usize>> {
        let mut flat = Vec::with_capacity(states.len() * 2 * self.state_dim);
        for s in states {
            flat.extend(self.input(origin, s)?);
        }
        if flat.iter().any(|x| !x.is_finite()) {
            return Err(Error::NonFinite("distance-model input"));
        }
        let out = self.net.forward_batch(&flat, states.len());
        Ok(out
            .chunks_exact(self.bins.num_bins())
            .map(|z| argmax_lowest(z) + 1)
            .collect())
    }
}

/// Fresh initialization followed by [`DdfModel::train`].
pub fn train_ddf(
    state_dim: usize,
    hidden: &[usize],
    bins: BinSpec,
    dataset: &[LabeledPair],
    config: &DdfTrainConfig,
    rng: &mut RngHandle,
) -> Result<(DdfModel, TrainReport)> {
    let mut model = DdfModel::new(state_dim, hidden, bins, rng)?;
    let report = model.train(dataset, config, rng)?;
    Ok((model, report))
}

/// Whether at least `interval` environment steps have passed since the last
/// retrain.
pub fn retrain_due(total_env_steps: u64, interval: u64, last_trained_at: u64) -> bool {
    total_env_steps.saturating_sub(last_trained_at) >= interval
}
