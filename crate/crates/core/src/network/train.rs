use std::f64::consts::PI;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{batch_loss_and_grad, evaluate, AdamState, LrSchedule, Network};
use crate::data::Sample;
use crate::error::{config, QdnnError, Result};
use crate::grad::GradientEngine;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub iterations: usize,
    pub batch_size: usize,
    pub schedule: LrSchedule,
    pub seed: u64,
    pub engine: GradientEngine,
    /// Test-set evaluation cadence in iterations (0 disables periodic
    /// evaluation; the final iteration is always evaluated).
    pub eval_every: usize,
}

impl TrainConfig {
    /// 400 iterations of 240 samples, η = 0.01 switching to 0.001 at 200.
    pub fn mnist(seed: u64) -> Self {
        Self {
            iterations: 400,
            batch_size: 240,
            schedule: LrSchedule::two_phase(0.01, 0.001, 200).expect("valid schedule"),
            seed,
            engine: GradientEngine::Adjoint,
            eval_every: 10,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogRow {
    pub iteration: usize,
    /// Mean loss of the batch used at this iteration, before the update.
    pub train_loss: Option<f64>,
    pub test_loss: Option<f64>,
    pub test_accuracy: Option<f64>,
    pub eta: f64,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct TrainingLog {
    pub rows: Vec<LogRow>,
}

impl TrainingLog {
    pub fn last(&self) -> Option<&LogRow> {
        self.rows.last()
    }

    pub fn train_loss_at(&self, iteration: usize) -> Option<f64> {
        self.rows
            .iter()
            .find(|r| r.iteration == iteration)
            .and_then(|r| r.train_loss)
    }
}

/// Mini-batch Adam training with seeded initialization and epoch-wise
/// reshuffling.
pub struct Trainer {
    net: Network,
    adam: AdamState,
    config: TrainConfig,
    step: usize,
    sampler: ChaCha8Rng,
    order: Vec<usize>,
    cursor: usize,
}

impl Trainer {
    /// Draws every weight and bias uniformly from `(−π, π)` using `config.seed`.
    pub fn new(mut net: Network, config: TrainConfig, train_len: usize) -> Result<Self> {
        check_setup(&config, train_len)?;
        let mut init = ChaCha8Rng::seed_from_u64(config.seed);
        let params: Vec<f64> = (0..net.num_params())
            .map(|_| init.gen_range(-PI..PI))
            .collect();
        net.set_parameters(&params)?;
        Self::with_parameters(net, config, train_len)
    }

    /// Keeps the network's current parameters.
    pub fn with_parameters(net: Network, config: TrainConfig, train_len: usize) -> Result<Self> {
        check_setup(&config, train_len)?;
        let mut sampler = ChaCha8Rng::seed_from_u64(config.seed);
        sampler.set_stream(1);
        let mut order: Vec<usize> = (0..train_len).collect();
        order.shuffle(&mut sampler);
        Ok(Self {
            adam: AdamState::new(net.num_params()),
            net,
            config,
            step: 0,
            sampler,
            order,
            cursor: 0,
        })
    }

    pub fn network(&self) -> &Network {
        &self.net
    }

    pub fn into_network(self) -> Network {
        self.net
    }

    pub fn optimizer(&self) -> &AdamState {
        &self.adam
    }

    pub fn config(&self) -> &TrainConfig {
        &self.config
    }

    /// Completed iterations.
    pub fn step(&self) -> usize {
        self.step
    }

    /// Indices of the next batch. A batch that runs past the end of the
    /// epoch continues into a freshly shuffled one.
    fn next_batch(&mut self) -> Vec<usize> {
        let mut batch = Vec::with_capacity(self.config.batch_size);
        while batch.len() < self.config.batch_size {
            if self.cursor == self.order.len() {
                self.order.shuffle(&mut self.sampler);
                self.cursor = 0;
            }
            batch.push(self.order[self.cursor]);
            self.cursor += 1;
        }
        batch
    }

    /// One Adam update; returns the batch loss measured before it.
    pub fn train_step(&mut self, train: &[Sample]) -> Result<f64> {
        if train.len() != self.order.len() {
            return Err(QdnnError::Usage(format!(
                "trainer was set up for {} samples, got {}",
                self.order.len(),
                train.len()
            )));
        }
        let eta = self.config.schedule.eta_at(self.step);
        let batch: Vec<&Sample> = self.next_batch().into_iter().map(|i| &train[i]).collect();
        let (loss, grad) = batch_loss_and_grad(&self.net, &batch, self.config.engine)?;
        let mut params = self.net.parameters();
        self.adam.step(&mut params, &grad, eta)?;
        self.net.set_parameters(&params)?;
        self.step += 1;
        Ok(loss)
    }

    fn test_metrics(&self, test: &[Sample]) -> Result<(Option<f64>, Option<f64>)> {
        if test.is_empty() {
            return Ok((None, None));
        }
        let (loss, acc) = evaluate(&self.net, test)?;
        Ok((Some(loss), Some(acc)))
    }

    /// Runs the configured iterations. `hook` sees the trainer after each
    /// logged row, including the initial row for iteration 0.
    pub fn run<E: From<QdnnError>>(
        &mut self,
        train: &[Sample],
        test: &[Sample],
        mut hook: impl FnMut(&Self, &LogRow) -> std::result::Result<(), E>,
    ) -> std::result::Result<TrainingLog, E> {
        let mut log = TrainingLog::default();
        let (test_loss, test_accuracy) = self.test_metrics(test)?;
        let first = LogRow {
            iteration: self.step,
            train_loss: None,
            test_loss,
            test_accuracy,
            eta: self.config.schedule.eta_at(self.step),
        };
        hook(self, &first)?;
        log.rows.push(first);
        let end = self.config.iterations;
        while self.step < end {
            let eta = self.config.schedule.eta_at(self.step);
            let loss = self.train_step(train)?;
            let it = self.step;
            let due = it == end || (self.config.eval_every > 0 && it % self.config.eval_every == 0);
            let (test_loss, test_accuracy) = if due { self.test_metrics(test)? } else { (None, None) };
            let row = LogRow {
                iteration: it,
                train_loss: Some(loss),
                test_loss,
                test_accuracy,
                eta,
            };
            log::debug!("iteration {it}: train loss {loss:.6}");
            hook(self, &row)?;
            log.rows.push(row);
        }
        Ok(log)
    }
}

fn check_setup(config_: &TrainConfig, train_len: usize) -> Result<()> {
    if train_len == 0 {
        return config("training set is empty");
    }
    if config_.batch_size == 0 {
        return config("batch size must be at least 1");
    }
    Ok(())
}

/// Initializes, then trains `net` with `config`.
pub fn train(net: Network, train: &[Sample], test: &[Sample], config: TrainConfig) -> Result<(Network, TrainingLog)> {
    let mut trainer = Trainer::new(net, config, train.len())?;
    let log = trainer.run(train, test, |_, _| Ok::<(), QdnnError>(()))?;
    Ok((trainer.into_network(), log))
}
