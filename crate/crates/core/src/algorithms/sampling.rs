use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::CounterRng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SamplingMode {
    Full,
    TauNice,
}

/// Which clients take part in each round.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SamplingPlan {
    n: usize,
    tau: usize,
    seed: u64,
    mode: SamplingMode,
}

impl SamplingPlan {
    pub fn full(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::contract("sampling plan needs n >= 1"));
        }
        Ok(Self {
            n,
            tau: n,
            seed: 0,
            mode: SamplingMode::Full,
        })
    }

    /// τ-nice sampling; `tau = n` collapses to full participation.
    pub fn tau_nice(n: usize, tau: usize, seed: u64) -> Result<Self> {
        if n == 0 || tau == 0 || tau > n {
            return Err(Error::contract(format!(
                "tau must lie in [1, n]; got tau = {tau}, n = {n}"
            )));
        }
        if tau == n {
            return Ok(Self {
                seed,
                ..Self::full(n)?
            });
        }
        Ok(Self {
            n,
            tau,
            seed,
            mode: SamplingMode::TauNice,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn tau(&self) -> usize {
        self.tau
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn mode(&self) -> SamplingMode {
        self.mode
    }

    pub fn is_full(&self) -> bool {
        self.mode == SamplingMode::Full
    }

    /// The client set of round `k`, ascending.
    pub fn sample(&self, k: u64) -> Vec<usize> {
        match self.mode {
            SamplingMode::Full => (0..self.n).collect(),
            SamplingMode::TauNice => sample_tau_nice(self.n, self.tau, self.seed, k),
        }
    }
}

/// A uniformly random `tau`-subset of `0..n` for round `k`, returned ascending.
///
/// Partial Fisher–Yates over `0..n` driven by the round's counter stream: for
/// `j = 0..tau`, swap position `j` with `j + U{0, n − j − 1}`.
pub fn sample_tau_nice(n: usize, tau: usize, seed: u64, k: u64) -> Vec<usize> {
    assert!(tau >= 1 && tau <= n, "tau must lie in [1, n]");
    let mut rng = CounterRng::for_round(seed, k);
    let mut perm: Vec<usize> = (0..n).collect();
    for j in 0..tau {
        let r = j + rng.next_below((n - j) as u64) as usize;
        perm.swap(j, r);
    }
    perm.truncate(tau);
    perm.sort_unstable();
    perm
}
