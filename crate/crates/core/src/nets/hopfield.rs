//! Binary Hopfield network with Hebbian storage and seeded asynchronous
//! recall.

use rand::seq::SliceRandom;

use super::{check_dim, BipolarPattern, NetworkFile};
use crate::error::{Error, Result};
use crate::seed;

#[derive(Clone, Debug, PartialEq)]
pub struct HopfieldNet {
    dimension: usize,
    stored_count: usize,
    /// Row-major D×D, symmetric with zero diagonal.
    weights: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Recall {
    pub state: BipolarPattern,
    pub sweeps: usize,
    pub flips: usize,
}

/// One accepted flip during recall.
#[derive(Clone, Copy, Debug)]
pub struct FlipEvent {
    pub unit: usize,
    pub field: f64,
    /// Energy change of the flip, `2 * s_old * field`; never positive.
    pub delta_energy: f64,
}

impl HopfieldNet {
    pub fn zeros(dimension: usize) -> Self {
        Self {
            dimension,
            stored_count: 0,
            weights: vec![0.0; dimension * dimension],
        }
    }

    /// w[i][j] = (1/D) Σ_p p[i] p[j] for i ≠ j.
    pub fn store(patterns: &[BipolarPattern]) -> Result<Self> {
        let first = patterns
            .first()
            .ok_or_else(|| Error::Training("no patterns to store".into()))?;
        let d = first.dimension();
        for p in patterns {
            check_dim(d, p.dimension())?;
        }
        let mut net = Self::zeros(d);
        let scale = 1.0 / d as f64;
        for i in 0..d {
            for j in (i + 1)..d {
                let sum: i64 = patterns
                    .iter()
                    .map(|p| i64::from(p.values()[i]) * i64::from(p.values()[j]))
                    .sum();
                let w = sum as f64 * scale;
                net.weights[i * d + j] = w;
                net.weights[j * d + i] = w;
            }
        }
        net.stored_count = patterns.len();
        Ok(net)
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn stored_count(&self) -> usize {
        self.stored_count
    }

    pub fn weight(&self, i: usize, j: usize) -> f64 {
        self.weights[i * self.dimension + j]
    }

    fn row(&self, i: usize) -> &[f64] {
        &self.weights[i * self.dimension..(i + 1) * self.dimension]
    }

    fn field(&self, i: usize, state: &[i8]) -> f64 {
        self.row(i)
            .iter()
            .zip(state)
            .map(|(w, &s)| w * f64::from(s))
            .sum()
    }

    /// E = -½ Σ_{i≠j} w[i][j] s[i] s[j]
    pub fn energy(&self, state: &BipolarPattern) -> Result<f64> {
        check_dim(self.dimension, state.dimension())?;
        let s = state.values();
        let mut e = 0.0;
        for i in 0..self.dimension {
            e += f64::from(s[i]) * self.field(i, s);
        }
        Ok(-0.5 * e)
    }

    pub fn recall(&self, probe: &BipolarPattern, max_sweeps: usize, rng_seed: u64) -> Result<Recall> {
        self.recall_observed(probe, max_sweeps, rng_seed, |_| {})
    }

    /// Asynchronous recall: each sweep visits every unit once in a seeded
    /// random order and sets it to the sign of its field, keeping the current
    /// value when the field is exactly zero. Stops after the first sweep with
    /// no flips or after `max_sweeps`.
    pub fn recall_observed(
        &self,
        probe: &BipolarPattern,
        max_sweeps: usize,
        rng_seed: u64,
        mut on_flip: impl FnMut(&FlipEvent),
    ) -> Result<Recall> {
        check_dim(self.dimension, probe.dimension())?;
        if max_sweeps == 0 {
            return Err(Error::Usage("max_sweeps must be at least 1".into()));
        }
        let mut rng = seed::rng(rng_seed);
        let mut state = probe.values().to_vec();
        let mut order: Vec<usize> = (0..self.dimension).collect();
        let mut sweeps = 0;
        let mut flips = 0;
        while sweeps < max_sweeps {
            sweeps += 1;
            order.shuffle(&mut rng);
            let mut changed = false;
            for &i in &order {
                let h = self.field(i, &state);
                let target = if h > 0.0 {
                    1
                } else if h < 0.0 {
                    -1
                } else {
                    state[i]
                };
                if target != state[i] {
                    let delta_energy = 2.0 * f64::from(state[i]) * h;
                    debug_assert!(delta_energy <= 0.0, "flip raised the energy");
                    state[i] = target;
                    flips += 1;
                    changed = true;
                    on_flip(&FlipEvent {
                        unit: i,
                        field: h,
                        delta_energy,
                    });
                }
            }
            if !changed {
                break;
            }
        }
        Ok(Recall {
            state: BipolarPattern::new(state).expect("updates keep ±1"),
            sweeps,
            flips,
        })
    }

    pub fn to_file(&self) -> NetworkFile {
        NetworkFile::Hopfield {
            dimension: self.dimension,
            stored_count: self.stored_count,
            weights: self.weights.clone(),
        }
    }

    pub fn from_file(file: &NetworkFile) -> Result<Self> {
        let NetworkFile::Hopfield {
            dimension,
            stored_count,
            weights,
        } = file
        else {
            return Err(Error::Usage("not a hopfield network file".into()));
        };
        let d = *dimension;
        check_dim(d * d, weights.len())?;
        for i in 0..d {
            if weights[i * d + i] != 0.0 {
                return Err(Error::Usage("non-zero diagonal".into()));
            }
            for j in (i + 1)..d {
                if weights[i * d + j] != weights[j * d + i] {
                    return Err(Error::Usage("asymmetric weights".into()));
                }
            }
        }
        Ok(Self {
            dimension: d,
            stored_count: *stored_count,
            weights: weights.clone(),
        })
    }
}
