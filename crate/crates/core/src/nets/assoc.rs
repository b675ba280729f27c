//! One interface over the three backends: train on (input, label, target)
//! items, then map an input pattern to a target-space pattern plus a fuzzy
//! ranking of labels.
//!
//! Targets are short balanced keys rather than raw phoneme encodings. Raw
//! one-hot encodings of related utterances overlap heavily, which Hebbian
//! storage cannot separate.

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::boltzmann::{AnnealSchedule, BoltzmannMachine, Estimator};
use super::fuzzy::{fuzzy_readout, FuzzyReadout, ReadoutScore};
use super::hopfield::HopfieldNet;
use super::perceptron::Perceptron;
use super::{check_dim, BipolarPattern, NetworkFile};
use crate::error::{Error, Result};
use crate::seed;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Backend {
    Hopfield,
    Perceptron,
    Boltzmann,
}

impl Backend {
    /// Table row order.
    pub const ALL: [Backend; 3] = [Backend::Hopfield, Backend::Perceptron, Backend::Boltzmann];

    pub fn name(self) -> &'static str {
        match self {
            Backend::Hopfield => "hopfield",
            Backend::Perceptron => "perceptron",
            Backend::Boltzmann => "boltzmann",
        }
    }

    pub fn title(self) -> &'static str {
        match self {
            Backend::Hopfield => "Hopfield",
            Backend::Perceptron => "Perceptron",
            Backend::Boltzmann => "Boltzmann",
        }
    }
}

impl fmt::Display for Backend {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Backend {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "hopfield" => Ok(Backend::Hopfield),
            "perceptron" => Ok(Backend::Perceptron),
            "boltzmann" => Ok(Backend::Boltzmann),
            other => Err(Error::Config(format!("unknown backend `{other}`"))),
        }
    }
}

/// Seeded key with exactly `bits / 2` positive entries.
pub fn balanced_key(bits: usize, rng_seed: u64) -> BipolarPattern {
    let mut v: Vec<i8> = (0..bits).map(|i| if i < bits / 2 { 1 } else { -1 }).collect();
    v.shuffle(&mut seed::rng(rng_seed));
    BipolarPattern::new(v).expect("±1")
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrainingItem {
    pub input: BipolarPattern,
    pub label: String,
    pub target: BipolarPattern,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AssociatorConfig {
    pub readout_tau: f64,
    pub hopfield_projection: usize,
    pub hopfield_max_sweeps: usize,
    pub boltzmann_hidden: usize,
    pub boltzmann_epochs: usize,
    pub boltzmann_learning_rate: f64,
    pub boltzmann_burn_in: usize,
    pub boltzmann_samples: usize,
    pub boltzmann_t_initial: f64,
    pub boltzmann_decay: f64,
    pub boltzmann_t_final: f64,
    /// None means 50 steps per free unit.
    pub boltzmann_steps_per_temp: Option<usize>,
    pub perceptron_epochs: usize,
    pub perceptron_learning_rate: f64,
    pub rng_seed: u64,
}

impl Default for AssociatorConfig {
    fn default() -> Self {
        Self {
            readout_tau: 1.0,
            hopfield_projection: 384,
            hopfield_max_sweeps: 20,
            boltzmann_hidden: 4,
            boltzmann_epochs: 200,
            boltzmann_learning_rate: 0.002,
            boltzmann_burn_in: 5,
            boltzmann_samples: 10,
            boltzmann_t_initial: 10.0,
            boltzmann_decay: 0.9,
            boltzmann_t_final: 0.1,
            boltzmann_steps_per_temp: None,
            perceptron_epochs: 200,
            perceptron_learning_rate: 1.0,
            rng_seed: 0,
        }
    }
}

impl AssociatorConfig {
    fn schedule(&self, free_units: usize, rng_seed: u64) -> AnnealSchedule {
        AnnealSchedule {
            t_initial: self.boltzmann_t_initial,
            decay: self.boltzmann_decay,
            steps_per_temp: self.boltzmann_steps_per_temp.unwrap_or(50 * free_units.max(1)),
            t_final: self.boltzmann_t_final,
            rng_seed,
        }
    }
}

#[derive(Clone, Debug)]
pub struct Associator {
    backend: Backend,
    config: AssociatorConfig,
}

/// Result of presenting one input.
#[derive(Clone, Debug, PartialEq)]
pub struct Association {
    /// Pattern in target space: recalled key, settled output, or the
    /// predicted label's key.
    pub output: BipolarPattern,
    pub readout: FuzzyReadout,
}

#[derive(Clone, Debug)]
enum Inner {
    Hopfield {
        net: HopfieldNet,
        projection: Projection,
        /// (label index, stored joint pattern)
        stored: Vec<(usize, BipolarPattern)>,
    },
    Boltzmann(BoltzmannMachine),
    Perceptron(Perceptron),
}

#[derive(Clone, Debug)]
pub struct TrainedAssociator {
    backend: Backend,
    config: AssociatorConfig,
    input_dim: usize,
    labels: Vec<String>,
    targets: Vec<BipolarPattern>,
    inner: Inner,
}

impl Associator {
    pub fn new(backend: Backend, config: AssociatorConfig) -> Self {
        Self { backend, config }
    }

    pub fn backend(&self) -> Backend {
        self.backend
    }

    pub fn train(&self, items: &[TrainingItem]) -> Result<TrainedAssociator> {
        let first = items
            .first()
            .ok_or_else(|| Error::Training("no training items".into()))?;
        let input_dim = first.input.dimension();
        let key_dim = first.target.dimension();
        let mut labels: Vec<String> = Vec::new();
        let mut targets: Vec<BipolarPattern> = Vec::new();
        let mut index: HashMap<&str, usize> = HashMap::new();
        let mut class_of = Vec::with_capacity(items.len());
        for item in items {
            check_dim(input_dim, item.input.dimension())?;
            check_dim(key_dim, item.target.dimension())?;
            let c = match index.get(item.label.as_str()) {
                Some(&c) => {
                    if targets[c] != item.target {
                        return Err(Error::Training(format!(
                            "label `{}` has conflicting targets",
                            item.label
                        )));
                    }
                    c
                }
                None => {
                    index.insert(&item.label, labels.len());
                    labels.push(item.label.clone());
                    targets.push(item.target.clone());
                    labels.len() - 1
                }
            };
            class_of.push(c);
        }
        let cfg = &self.config;
        let inner = match self.backend {
            Backend::Hopfield => {
                let inputs: Vec<&BipolarPattern> = items.iter().map(|i| &i.input).collect();
                let projection = Projection::fit(cfg.hopfield_projection, &inputs, seed::derive(cfg.rng_seed, 0x70));
                let stored: Vec<(usize, BipolarPattern)> = items
                    .iter()
                    .zip(&class_of)
                    .map(|(item, &c)| (c, projection.apply(&item.input).concat(&item.target)))
                    .collect();
                let joint: Vec<BipolarPattern> = stored.iter().map(|(_, p)| p.clone()).collect();
                Inner::Hopfield {
                    net: HopfieldNet::store(&joint)?,
                    projection,
                    stored,
                }
            }
            Backend::Boltzmann => {
                let free = key_dim + cfg.boltzmann_hidden;
                let schedule = cfg.schedule(free, seed::derive(cfg.rng_seed, 0xb0));
                let machine = BoltzmannMachine::new(input_dim, key_dim, cfg.boltzmann_hidden, schedule)?
                    .randomized(0.01, seed::derive(cfg.rng_seed, 0xb1));
                let pairs: Vec<(BipolarPattern, BipolarPattern)> =
                    items.iter().map(|i| (i.input.clone(), i.target.clone())).collect();
                Inner::Boltzmann(machine.train(
                    &pairs,
                    cfg.boltzmann_epochs,
                    cfg.boltzmann_learning_rate,
                    Estimator::Sampled {
                        burn_in: cfg.boltzmann_burn_in,
                        samples: cfg.boltzmann_samples,
                    },
                )?)
            }
            Backend::Perceptron => {
                let data: Vec<(BipolarPattern, usize)> =
                    items.iter().zip(&class_of).map(|(i, &c)| (i.input.clone(), c)).collect();
                let fit = Perceptron::train(&data, cfg.perceptron_epochs, cfg.perceptron_learning_rate)?;
                Inner::Perceptron(fit.model)
            }
        };
        Ok(TrainedAssociator {
            backend: self.backend,
            config: self.config.clone(),
            input_dim,
            labels,
            targets,
            inner,
        })
    }
}

/// Seeded Gaussian sign projection of the input's active features. Each
/// feature is weighted by its inverse training frequency and the result is
/// centred on the training mean, so features shared by most inputs (padding)
/// carry little weight.
#[derive(Clone, Debug)]
struct Projection {
    rows: usize,
    cols: usize,
    matrix: Vec<f64>,
    weight: Vec<f64>,
    /// P·μ per row.
    offset: Vec<f64>,
}

impl Projection {
    fn fit(rows: usize, inputs: &[&BipolarPattern], rng_seed: u64) -> Self {
        let cols = inputs[0].dimension();
        let n = inputs.len() as f64;
        let mut rng = seed::rng(rng_seed);
        let matrix: Vec<f64> = (0..rows * cols).map(|_| StandardNormal.sample(&mut rng)).collect();
        let mut count = vec![0.0; cols];
        for x in inputs {
            for (c, &v) in count.iter_mut().zip(x.values()) {
                if v > 0 {
                    *c += 1.0;
                }
            }
        }
        let weight: Vec<f64> = count.iter().map(|&c| ((n + 1.0) / (c + 0.5)).ln()).collect();
        let mean: Vec<f64> = count.iter().zip(&weight).map(|(c, w)| c / n * w).collect();
        let offset = (0..rows)
            .map(|r| matrix[r * cols..(r + 1) * cols].iter().zip(&mean).map(|(a, b)| a * b).sum())
            .collect();
        Self {
            rows,
            cols,
            matrix,
            weight,
            offset,
        }
    }

    fn apply(&self, input: &BipolarPattern) -> BipolarPattern {
        let hot: Vec<usize> = input
            .values()
            .iter()
            .enumerate()
            .filter(|(_, v)| **v > 0)
            .map(|(i, _)| i)
            .collect();
        let sums: Vec<f64> = (0..self.rows)
            .map(|r| {
                let row = &self.matrix[r * self.cols..(r + 1) * self.cols];
                hot.iter().map(|&i| row[i] * self.weight[i]).sum::<f64>() - self.offset[r]
            })
            .collect();
        BipolarPattern::from_signs(&sums)
    }
}

impl TrainedAssociator {
    pub fn backend(&self) -> Backend {
        self.backend
    }

    pub fn input_dimension(&self) -> usize {
        self.input_dim
    }

    pub fn output_dimension(&self) -> usize {
        self.targets[0].dimension()
    }

    /// Distinct labels in first-seen order.
    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn target(&self, label: &str) -> Option<&BipolarPattern> {
        self.labels.iter().position(|l| l == label).map(|i| &self.targets[i])
    }

    /// The underlying network in its on-disk form.
    pub fn network_file(&self) -> NetworkFile {
        match &self.inner {
            Inner::Hopfield { net, .. } => net.to_file(),
            Inner::Boltzmann(machine) => machine.to_file(),
            Inner::Perceptron(model) => model.to_file(),
        }
    }

    /// Deterministic for a fixed `rng_seed`.
    pub fn associate(&self, input: &BipolarPattern, rng_seed: u64) -> Result<Association> {
        check_dim(self.input_dim, input.dimension())?;
        let key_dim = self.output_dimension();
        let (output, scores) = match &self.inner {
            Inner::Hopfield {
                net,
                projection,
                stored,
            } => {
                let probe = projection.apply(input).concat(&balanced_key(
                    key_dim,
                    seed::derive(rng_seed, 0x71),
                ));
                let recall = net.recall(&probe, self.config.hopfield_max_sweeps, seed::derive(rng_seed, 0x72))?;
                let mut best = vec![usize::MAX; self.labels.len()];
                for (c, p) in stored {
                    best[*c] = best[*c].min(recall.state.hamming(p)?);
                }
                let scores = best.iter().map(|&h| ReadoutScore::Energy(h as f64)).collect();
                (recall.state.slice(projection.rows..projection.rows + key_dim), scores)
            }
            Inner::Boltzmann(machine) => {
                let settled = machine.settle(input, &machine.schedule().with_seed(seed::derive(rng_seed, 0xb2)))?;
                let energies = machine.clamped_min_energies(input, &self.targets)?;
                (settled.output, energies.into_iter().map(ReadoutScore::Energy).collect())
            }
            Inner::Perceptron(model) => {
                let margins = model.margins(input)?;
                let predicted = model.predict(input)?;
                (
                    self.targets[predicted].clone(),
                    margins.into_iter().map(ReadoutScore::Margin).collect::<Vec<_>>(),
                )
            }
        };
        let named: Vec<(String, ReadoutScore)> = self.labels.iter().cloned().zip(scores).collect();
        Ok(Association {
            output,
            readout: fuzzy_readout(&named, self.config.readout_tau)?,
        })
    }
}
