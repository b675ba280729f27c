//! Boltzmann machine translator: visible input units (always clamped), visible
//! output units and hidden units, with annealed settling and the two-phase
//! correlation learning rule.
//!
//! Units are laid out `[input | output | hidden]`. Energy of a full state is
//! `E(s) = -Σ_{i<j} w[i][j] s[i] s[j] - Σ_i b[i] s[i]`.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{check_dim, BipolarPattern, NetworkFile};
use crate::error::{Error, Result};
use crate::seed;

/// Exhaustive enumeration is refused above this many free units.
pub const MAX_ENUMERATED_UNITS: usize = 24;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AnnealSchedule {
    pub t_initial: f64,
    pub decay: f64,
    pub steps_per_temp: usize,
    pub t_final: f64,
    pub rng_seed: u64,
}

impl AnnealSchedule {
    /// t 10 → 0.1, decay 0.9, 50 steps per free unit at each level.
    pub fn standard(free_units: usize, rng_seed: u64) -> Self {
        Self {
            t_initial: 10.0,
            decay: 0.9,
            steps_per_temp: 50 * free_units.max(1),
            t_final: 0.1,
            rng_seed,
        }
    }

    pub fn with_seed(self, rng_seed: u64) -> Self {
        Self { rng_seed, ..self }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.t_final > 0.0 && self.t_initial > self.t_final && self.t_initial.is_finite()) {
            return Err(Error::Schedule(format!(
                "need t_initial > t_final > 0, got {} and {}",
                self.t_initial, self.t_final
            )));
        }
        if !(self.decay > 0.0 && self.decay < 1.0) {
            return Err(Error::Schedule(format!("decay {} outside (0,1)", self.decay)));
        }
        if self.steps_per_temp == 0 {
            return Err(Error::Schedule("steps_per_temp must be at least 1".into()));
        }
        Ok(())
    }

    /// Geometric levels from t_initial down to exactly t_final.
    pub fn temperatures(&self) -> Vec<f64> {
        let mut temps = vec![self.t_initial];
        let mut t = self.t_initial;
        while t > self.t_final {
            t = (t * self.decay).max(self.t_final);
            temps.push(t);
        }
        temps
    }
}

/// Logistic acceptance for a flip that lowers the energy by `energy_decrease`.
pub fn flip_probability(energy_decrease: f64, temperature: f64) -> f64 {
    1.0 / (1.0 + (-energy_decrease / temperature).exp())
}

#[derive(Clone, Debug, PartialEq)]
pub struct BoltzmannMachine {
    visible_in: usize,
    visible_out: usize,
    hidden: usize,
    weights: Vec<f64>,
    biases: Vec<f64>,
    schedule: AnnealSchedule,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Settled {
    pub output: BipolarPattern,
    pub state: Vec<i8>,
    pub energy: f64,
}

/// How the training rule estimates ⟨s_i s_j⟩.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "method", rename_all = "lowercase")]
pub enum Estimator {
    /// Boltzmann-weighted sum over every free configuration.
    Exact,
    /// Glauber sampling at t_final after `burn_in` sweeps.
    Sampled { burn_in: usize, samples: usize },
}

/// Expectations over the non-input units (output then hidden) in one phase.
#[derive(Clone, Debug, PartialEq)]
pub struct PhaseStats {
    pub mean: Vec<f64>,
    /// Row-major m×m, m = visible_out + hidden.
    pub pair: Vec<f64>,
}

/// Averaged learning signal over a set of training pairs. Only rows of
/// non-input units are stored; input-input pairs have no edge.
#[derive(Clone, Debug, PartialEq)]
pub struct Gradient {
    units: usize,
    offset: usize,
    /// (non-input unit, any unit), row-major m×n.
    rows: Vec<f64>,
    biases: Vec<f64>,
}

impl Gradient {
    /// ⟨s_i s_j⟩_clamped − ⟨s_i s_j⟩_free, zero where there is no edge.
    pub fn weight(&self, i: usize, j: usize) -> f64 {
        let (a, other) = if i >= self.offset { (i, j) } else { (j, i) };
        if a < self.offset || i == j {
            return 0.0;
        }
        self.rows[(a - self.offset) * self.units + other]
    }

    pub fn bias(&self, i: usize) -> f64 {
        self.biases[i]
    }
}

impl BoltzmannMachine {
    pub fn new(visible_in: usize, visible_out: usize, hidden: usize, schedule: AnnealSchedule) -> Result<Self> {
        schedule.validate()?;
        let n = visible_in + visible_out + hidden;
        Ok(Self {
            visible_in,
            visible_out,
            hidden,
            weights: vec![0.0; n * n],
            biases: vec![0.0; n],
            schedule,
        })
    }

    /// Uniform weights in [-scale, scale] on every permitted edge.
    pub fn randomized(mut self, scale: f64, rng_seed: u64) -> Self {
        let mut rng = seed::rng(rng_seed);
        let n = self.units();
        for i in 0..n {
            for j in (i + 1)..n {
                if self.connectable(i, j) {
                    let w = rng.random_range(-scale..=scale);
                    self.weights[i * n + j] = w;
                    self.weights[j * n + i] = w;
                }
            }
        }
        self
    }

    pub fn units(&self) -> usize {
        self.visible_in + self.visible_out + self.hidden
    }

    pub fn visible_in(&self) -> usize {
        self.visible_in
    }

    pub fn visible_out(&self) -> usize {
        self.visible_out
    }

    pub fn hidden(&self) -> usize {
        self.hidden
    }

    pub fn schedule(&self) -> &AnnealSchedule {
        &self.schedule
    }

    pub fn set_schedule(&mut self, schedule: AnnealSchedule) -> Result<()> {
        schedule.validate()?;
        self.schedule = schedule;
        Ok(())
    }

    pub fn is_input(&self, i: usize) -> bool {
        i < self.visible_in
    }

    pub fn connectable(&self, i: usize, j: usize) -> bool {
        i != j && !(self.is_input(i) && self.is_input(j))
    }

    pub fn weight(&self, i: usize, j: usize) -> f64 {
        self.weights[i * self.units() + j]
    }

    pub fn bias(&self, i: usize) -> f64 {
        self.biases[i]
    }

    pub fn set_weight(&mut self, i: usize, j: usize, w: f64) -> Result<()> {
        if !self.connectable(i, j) {
            return Err(Error::Usage(format!("units {i} and {j} cannot be connected")));
        }
        let n = self.units();
        self.weights[i * n + j] = w;
        self.weights[j * n + i] = w;
        Ok(())
    }

    pub fn set_bias(&mut self, i: usize, b: f64) {
        self.biases[i] = b;
    }

    pub fn energy(&self, state: &[i8]) -> f64 {
        let n = self.units();
        let mut e: f64 = -self.biases.iter().zip(state).map(|(b, &s)| b * f64::from(s)).sum::<f64>();
        // every edge has a non-input endpoint; count each from its higher index
        for u in self.visible_in..n {
            let row = &self.weights[u * n..u * n + u];
            let h: f64 = row.iter().zip(state).map(|(w, &s)| w * f64::from(s)).sum();
            e -= f64::from(state[u]) * h;
        }
        e
    }

    fn field(&self, u: usize, state: &[i8]) -> f64 {
        let n = self.units();
        self.biases[u]
            + self.weights[u * n..(u + 1) * n]
                .iter()
                .zip(state)
                .map(|(w, &s)| w * f64::from(s))
                .sum::<f64>()
    }

    fn output_range(&self) -> std::ops::Range<usize> {
        self.visible_in..self.visible_in + self.visible_out
    }

    fn template(&self, input: &BipolarPattern, output: Option<&BipolarPattern>) -> Result<(Vec<i8>, Vec<usize>)> {
        check_dim(self.visible_in, input.dimension())?;
        let mut state = vec![1i8; self.units()];
        state[..self.visible_in].copy_from_slice(input.values());
        let free_start = match output {
            Some(out) => {
                check_dim(self.visible_out, out.dimension())?;
                state[self.output_range()].copy_from_slice(out.values());
                self.visible_in + self.visible_out
            }
            None => self.visible_in,
        };
        Ok((state, (free_start..self.units()).collect()))
    }

    /// Anneal the output and hidden units with the input clamped and return
    /// the output slice of the lowest-energy state visited.
    pub fn settle(&self, clamped_in: &BipolarPattern, schedule: &AnnealSchedule) -> Result<Settled> {
        schedule.validate()?;
        let (template, free) = self.template(clamped_in, None)?;
        let mut rng = seed::rng(schedule.rng_seed);
        let mut chain = Chain::start(self, template, free, &mut rng);
        let mut best_state = chain.state.clone();
        let mut best_energy = chain.energy;
        for t in schedule.temperatures() {
            for _ in 0..schedule.steps_per_temp {
                if chain.step(self, t, &mut rng) && chain.energy < best_energy {
                    best_energy = chain.energy;
                    best_state.clone_from(&chain.state);
                }
            }
        }
        Ok(self.settled(best_state))
    }

    fn settled(&self, state: Vec<i8>) -> Settled {
        let energy = self.energy(&state);
        let output = BipolarPattern::new(state[self.output_range()].to_vec()).expect("±1 state");
        Settled { output, state, energy }
    }

    /// Lowest-energy completion of the clamped input by exhaustive search.
    pub fn ground_state(&self, clamped_in: &BipolarPattern) -> Result<Settled> {
        let (mut state, free) = self.template(clamped_in, None)?;
        let mut best: Option<(f64, Vec<i8>)> = None;
        for_each_assignment(&mut state, &free, |s| {
            let e = self.energy(s);
            if best.as_ref().is_none_or(|(be, _)| e < *be) {
                best = Some((e, s.to_vec()));
            }
        })?;
        Ok(self.settled(best.expect("at least one assignment").1))
    }

    /// min over hidden states of E(input, output, hidden).
    pub fn clamped_min_energy(&self, input: &BipolarPattern, output: &BipolarPattern) -> Result<f64> {
        Ok(self.clamped_min_energies(input, std::slice::from_ref(output))?[0])
    }

    /// [`Self::clamped_min_energy`] for several outputs sharing one input.
    /// Input contributions are folded into per-unit fields once.
    pub fn clamped_min_energies(&self, input: &BipolarPattern, outputs: &[BipolarPattern]) -> Result<Vec<f64>> {
        check_dim(self.visible_in, input.dimension())?;
        if self.hidden > MAX_ENUMERATED_UNITS {
            return Err(Error::Usage(format!("{} hidden units is too many to enumerate", self.hidden)));
        }
        let n = self.units();
        let off = self.visible_in;
        let m = n - off;
        let x = input.values();
        let constant: f64 = -x.iter().zip(&self.biases).map(|(&v, b)| b * f64::from(v)).sum::<f64>();
        let g: Vec<f64> = (off..n)
            .map(|a| {
                self.biases[a]
                    + self.weights[a * n..a * n + off]
                        .iter()
                        .zip(x)
                        .map(|(w, &v)| w * f64::from(v))
                        .sum::<f64>()
            })
            .collect();
        let mut s = vec![0i8; m];
        outputs
            .iter()
            .map(|out| {
                check_dim(self.visible_out, out.dimension())?;
                s[..self.visible_out].copy_from_slice(out.values());
                let mut best = f64::INFINITY;
                for code in 0u64..(1u64 << self.hidden) {
                    for b in 0..self.hidden {
                        s[self.visible_out + b] = if code >> b & 1 == 1 { 1 } else { -1 };
                    }
                    let mut e = constant;
                    for a in 0..m {
                        let sa = f64::from(s[a]);
                        e -= g[a] * sa;
                        let row = &self.weights[(off + a) * n + off..(off + a + 1) * n];
                        for b in (a + 1)..m {
                            e -= row[b] * sa * f64::from(s[b]);
                        }
                    }
                    best = best.min(e);
                }
                Ok(best)
            })
            .collect()
    }

    fn stats_from_states<'s>(&self, states: impl Iterator<Item = (&'s [i8], f64)>) -> PhaseStats {
        let off = self.visible_in;
        let m = self.visible_out + self.hidden;
        let mut mean = vec![0.0; m];
        let mut pair = vec![0.0; m * m];
        let mut total = 0.0;
        for (s, w) in states {
            total += w;
            for a in 0..m {
                let sa = f64::from(s[off + a]);
                mean[a] += w * sa;
                for b in 0..m {
                    pair[a * m + b] += w * sa * f64::from(s[off + b]);
                }
            }
        }
        mean.iter_mut().for_each(|v| *v /= total);
        pair.iter_mut().for_each(|v| *v /= total);
        PhaseStats { mean, pair }
    }

    /// Exact equilibrium statistics at `temperature` with the given units clamped.
    pub fn exact_stats(
        &self,
        input: &BipolarPattern,
        output: Option<&BipolarPattern>,
        temperature: f64,
    ) -> Result<PhaseStats> {
        let (mut state, free) = self.template(input, output)?;
        let mut configs: Vec<(Vec<i8>, f64)> = Vec::new();
        for_each_assignment(&mut state, &free, |s| configs.push((s.to_vec(), self.energy(s))))?;
        let min_e = configs.iter().map(|c| c.1).fold(f64::INFINITY, f64::min);
        Ok(self.stats_from_states(
            configs
                .iter()
                .map(|(s, e)| (s.as_slice(), (-(e - min_e) / temperature).exp())),
        ))
    }

    /// Glauber-sampled statistics: `burn_in` sweeps, then one sample after
    /// each of `samples` sweeps. A sweep is one flip attempt per free unit.
    pub fn sampled_stats(
        &self,
        input: &BipolarPattern,
        output: Option<&BipolarPattern>,
        temperature: f64,
        burn_in: usize,
        samples: usize,
        rng_seed: u64,
    ) -> Result<PhaseStats> {
        if samples == 0 {
            return Err(Error::Usage("need at least one sample".into()));
        }
        let (template, free) = self.template(input, output)?;
        let sweep = free.len();
        let mut rng = seed::rng(rng_seed);
        let mut chain = Chain::start(self, template, free, &mut rng);
        for _ in 0..burn_in * sweep {
            chain.step(self, temperature, &mut rng);
        }
        let mut kept: Vec<Vec<i8>> = Vec::with_capacity(samples);
        for _ in 0..samples {
            for _ in 0..sweep {
                chain.step(self, temperature, &mut rng);
            }
            kept.push(chain.state.clone());
        }
        Ok(self.stats_from_states(kept.iter().map(|s| (s.as_slice(), 1.0))))
    }

    fn phase_stats(
        &self,
        input: &BipolarPattern,
        output: Option<&BipolarPattern>,
        estimator: Estimator,
        rng_seed: u64,
    ) -> Result<PhaseStats> {
        let t = self.schedule.t_final;
        match estimator {
            Estimator::Exact => self.exact_stats(input, output, t),
            Estimator::Sampled { burn_in, samples } => {
                self.sampled_stats(input, output, t, burn_in, samples, rng_seed)
            }
        }
    }

    /// Clamped-minus-free correlations averaged over the training pairs.
    pub fn gradient(
        &self,
        pairs: &[(BipolarPattern, BipolarPattern)],
        estimator: Estimator,
        rng_seed: u64,
    ) -> Result<Gradient> {
        if pairs.is_empty() {
            return Err(Error::Training("no training pairs".into()));
        }
        let n = self.units();
        let m = self.visible_out + self.hidden;
        let off = self.visible_in;
        let mut rows = vec![0.0; m * n];
        let mut db = vec![0.0; n];
        for (p, (input, output)) in pairs.iter().enumerate() {
            let clamped = self.phase_stats(input, Some(output), estimator, seed::derive(rng_seed, 2 * p as u64))?;
            let free = self.phase_stats(input, None, estimator, seed::derive(rng_seed, 2 * p as u64 + 1))?;
            for a in 0..m {
                let diff_mean = clamped.mean[a] - free.mean[a];
                db[off + a] += diff_mean;
                let row = &mut rows[a * n..(a + 1) * n];
                for (r, &x) in row[..off].iter_mut().zip(input.values()) {
                    *r += f64::from(x) * diff_mean;
                }
                for b in 0..m {
                    if a != b {
                        row[off + b] += clamped.pair[a * m + b] - free.pair[a * m + b];
                    }
                }
            }
        }
        let scale = 1.0 / pairs.len() as f64;
        rows.iter_mut().for_each(|v| *v *= scale);
        db.iter_mut().for_each(|v| *v *= scale);
        Ok(Gradient {
            units: n,
            offset: off,
            rows,
            biases: db,
        })
    }

    /// Two-phase learning: w += rate·(⟨s_i s_j⟩_clamped − ⟨s_i s_j⟩_free)
    /// once per epoch, biases likewise with ⟨s_i⟩.
    pub fn train(
        &self,
        pairs: &[(BipolarPattern, BipolarPattern)],
        epochs: usize,
        learning_rate: f64,
        estimator: Estimator,
    ) -> Result<BoltzmannMachine> {
        if pairs.is_empty() {
            return Err(Error::Training("no training pairs".into()));
        }
        for (i, o) in pairs {
            check_dim(self.visible_in, i.dimension())?;
            check_dim(self.visible_out, o.dimension())?;
        }
        let mut machine = self.clone();
        if learning_rate == 0.0 {
            return Ok(machine);
        }
        for epoch in 0..epochs {
            let g = machine.gradient(pairs, estimator, seed::derive(self.schedule.rng_seed, epoch as u64))?;
            let n = machine.units();
            let off = machine.visible_in;
            for (a, row) in g.rows.chunks(n).enumerate() {
                let u = off + a;
                for (j, d) in row.iter().enumerate() {
                    if *d != 0.0 {
                        machine.weights[u * n + j] += learning_rate * d;
                        if j < off {
                            machine.weights[j * n + u] += learning_rate * d;
                        }
                    }
                }
            }
            for (b, d) in machine.biases.iter_mut().zip(&g.biases) {
                *b += learning_rate * d;
            }
            let free_rows = &machine.weights[off * n..];
            if free_rows.iter().chain(&machine.biases).any(|v| !v.is_finite()) {
                return Err(Error::Divergence(format!("non-finite parameter after epoch {epoch}")));
            }
        }
        Ok(machine)
    }

    pub fn to_file(&self) -> NetworkFile {
        NetworkFile::Boltzmann {
            visible_in: self.visible_in,
            visible_out: self.visible_out,
            hidden: self.hidden,
            weights: self.weights.clone(),
            biases: self.biases.clone(),
            schedule: self.schedule,
        }
    }

    pub fn from_file(file: &NetworkFile) -> Result<Self> {
        let NetworkFile::Boltzmann {
            visible_in,
            visible_out,
            hidden,
            weights,
            biases,
            schedule,
        } = file
        else {
            return Err(Error::Usage("not a boltzmann network file".into()));
        };
        let mut m = BoltzmannMachine::new(*visible_in, *visible_out, *hidden, *schedule)?;
        let n = m.units();
        check_dim(n * n, weights.len())?;
        check_dim(n, biases.len())?;
        for i in 0..n {
            for j in 0..n {
                let w = weights[i * n + j];
                if w != weights[j * n + i] || (!m.connectable(i, j) && w != 0.0) {
                    return Err(Error::Usage(format!("invalid weight at ({i},{j})")));
                }
            }
        }
        m.weights = weights.clone();
        m.biases = biases.clone();
        Ok(m)
    }
}

fn for_each_assignment(state: &mut [i8], free: &[usize], mut f: impl FnMut(&[i8])) -> Result<()> {
    if free.len() > MAX_ENUMERATED_UNITS {
        return Err(Error::Usage(format!(
            "{} free units is too many to enumerate",
            free.len()
        )));
    }
    for code in 0u64..(1u64 << free.len()) {
        for (b, &u) in free.iter().enumerate() {
            state[u] = if code >> b & 1 == 1 { 1 } else { -1 };
        }
        f(state);
    }
    Ok(())
}

/// Markov chain over the free units with incrementally maintained fields.
struct Chain {
    state: Vec<i8>,
    free: Vec<usize>,
    fields: Vec<f64>,
    energy: f64,
}

impl Chain {
    fn start(m: &BoltzmannMachine, mut state: Vec<i8>, free: Vec<usize>, rng: &mut ChaCha8Rng) -> Self {
        for &u in &free {
            state[u] = if rng.random::<bool>() { 1 } else { -1 };
        }
        let fields = free.iter().map(|&u| m.field(u, &state)).collect();
        let energy = m.energy(&state);
        Self {
            state,
            free,
            fields,
            energy,
        }
    }

    /// One Glauber step; returns whether the chosen unit flipped.
    fn step(&mut self, m: &BoltzmannMachine, t: f64, rng: &mut ChaCha8Rng) -> bool {
        if self.free.is_empty() {
            return false;
        }
        let k = rng.random_range(0..self.free.len());
        let u = self.free[k];
        let s = f64::from(self.state[u]);
        let decrease = -2.0 * s * self.fields[k];
        if rng.random::<f64>() >= flip_probability(decrease, t) {
            return false;
        }
        self.state[u] = -self.state[u];
        self.energy -= decrease;
        let n = m.units();
        let delta = -2.0 * s;
        for (f, &v) in self.fields.iter_mut().zip(&self.free) {
            *f += m.weights[v * n + u] * delta;
        }
        true
    }
}
