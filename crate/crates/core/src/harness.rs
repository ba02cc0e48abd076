//! Seeded encode, break, decode trials for round-trip campaigns.
//!
//! Trials run in parallel; results are collected in trial order so every
//! summary is a deterministic function of the configuration.

use std::time::{Duration, Instant};

use rand::RngCore;
use rayon::prelude::*;

use crate::bits::BitString;
use crate::channel::{break_at, drop_short, AttackContext, BreakPattern, StrategyRegistry};
use crate::encoder::Codec;
use crate::legit::sample_legit;
use crate::params::Params;
use crate::seeded_rng;

#[derive(Debug, Clone)]
pub struct TrialConfig {
    pub params: Params,
    /// Strategy names, used round-robin by trial index.
    pub strategies: Vec<String>,
    pub trials: usize,
    pub seed: u64,
    /// Drop fragments shorter than this many bits before decoding.
    pub drop_short: Option<usize>,
}

/// Per-trial seed, independent across trial indices.
pub fn trial_seed(seed: u64, trial: usize) -> u64 {
    seeded_rng(seed ^ (trial as u64).wrapping_mul(0x9e37_79b9_7f4a_7c15)).next_u64()
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct StageTimes {
    pub sample: Duration,
    pub encode: Duration,
    pub channel: Duration,
    pub decode: Duration,
}

impl std::ops::AddAssign for StageTimes {
    fn add_assign(&mut self, o: Self) {
        self.sample += o.sample;
        self.encode += o.encode;
        self.channel += o.channel;
        self.decode += o.decode;
    }
}

#[derive(Debug, Clone)]
pub struct TrialOutcome {
    pub trial: usize,
    pub strategy: String,
    pub pattern: BreakPattern,
    pub attempts: u32,
    /// `None` on exact recovery.
    pub failure: Option<String>,
    pub times: StageTimes,
}

#[derive(Debug, Clone)]
pub struct TrialSummary {
    pub outcomes: Vec<TrialOutcome>,
    pub times: StageTimes,
}

impl TrialSummary {
    pub fn trials(&self) -> usize {
        self.outcomes.len()
    }

    pub fn successes(&self) -> usize {
        self.outcomes.iter().filter(|o| o.failure.is_none()).count()
    }

    pub fn failures(&self) -> impl Iterator<Item = &TrialOutcome> {
        self.outcomes.iter().filter(|o| o.failure.is_some())
    }

    pub fn total_attempts(&self) -> u64 {
        self.outcomes.iter().map(|o| o.attempts as u64).sum()
    }

    pub fn mean_attempts(&self) -> f64 {
        self.total_attempts() as f64 / self.trials().max(1) as f64
    }

    /// Fraction of legit-sampling draws that were rejected.
    pub fn rejection_rate(&self) -> f64 {
        let draws = self.total_attempts();
        if draws == 0 {
            return 0.0;
        }
        (draws - self.trials() as u64) as f64 / draws as f64
    }
}

pub fn run_trials(config: &TrialConfig) -> Result<TrialSummary, crate::channel::ChannelError> {
    let registry = StrategyRegistry::builtins();
    for name in &config.strategies {
        registry.get(name)?;
    }
    let codec = Codec::new(config.params);
    let outcomes: Vec<TrialOutcome> = (0..config.trials)
        .into_par_iter()
        .map(|trial| run_one(&codec, registry, config, trial))
        .collect();
    let mut times = StageTimes::default();
    for o in &outcomes {
        times += o.times;
    }
    Ok(TrialSummary { outcomes, times })
}

fn run_one(codec: &Codec, registry: &StrategyRegistry, config: &TrialConfig, trial: usize) -> TrialOutcome {
    let seed = trial_seed(config.seed, trial);
    let strategy = config.strategies[trial % config.strategies.len()].clone();
    let mut times = StageTimes::default();
    let outcome = |pattern, attempts, failure: Option<String>, times| TrialOutcome {
        trial,
        strategy: strategy.clone(),
        pattern,
        attempts,
        failure,
        times,
    };

    let clock = Instant::now();
    let (z, attempts) = match sample_legit(codec.params(), codec.mu(), seed) {
        Ok(s) => s,
        Err(e) => return outcome(BreakPattern::empty(), 0, Some(e.to_string()), times),
    };
    times.sample = clock.elapsed();

    let clock = Instant::now();
    let enc = match codec.encode_detailed(&z) {
        Ok(e) => e,
        Err(e) => return outcome(BreakPattern::empty(), attempts, Some(e.to_string()), times),
    };
    times.encode = clock.elapsed();

    let clock = Instant::now();
    let ctx = AttackContext::new(&enc.codeword, codec);
    let broken = registry.attack(&strategy, &ctx, seed).and_then(|pattern| {
        let frags = break_at(&enc.codeword, &pattern)?;
        let frags = match config.drop_short {
            Some(threshold) => drop_short(&frags, threshold, codec.params().l())?,
            None => frags,
        };
        Ok((pattern, frags))
    });
    times.channel = clock.elapsed();
    let (pattern, frags) = match broken {
        Ok(b) => b,
        Err(e) => return outcome(BreakPattern::empty(), attempts, Some(e.to_string()), times),
    };

    let clock = Instant::now();
    let decoded = codec.decode_detailed(&frags, Some(&enc.y));
    times.decode = clock.elapsed();
    let failure = match decoded {
        Ok((out, _)) if out == z => None,
        Ok(_) => Some(wrong_output(&z)),
        Err(e) => Some(e.to_string()),
    };
    outcome(pattern, attempts, failure, times)
}

fn wrong_output(z: &BitString) -> String {
    format!("decoder returned a string other than the {}-bit input", z.len())
}
