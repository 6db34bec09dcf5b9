use alloc::vec;
use alloc::vec::Vec;

/// One player's running estimates over all arms.
///
/// The confidence radius is `sqrt(6 ln T / n)` with `T` the horizon and `n`
/// the arm's sample count; unsampled arms have `UCB = +inf`, `LCB = -inf`.
#[derive(Debug, Clone, PartialEq)]
pub struct LearnerStats {
    log_horizon: f64,
    counts: Vec<u64>,
    means: Vec<f64>,
}

impl LearnerStats {
    pub fn new(n_arms: usize, horizon: u64) -> Self {
        LearnerStats {
            log_horizon: libm::log(horizon as f64),
            counts: vec![0; n_arms],
            means: vec![0.0; n_arms],
        }
    }

    pub fn n_arms(&self) -> usize {
        self.counts.len()
    }

    /// Running-mean update with one observed reward.
    pub fn record(&mut self, arm: usize, reward: f64) {
        let n = self.counts[arm] as f64;
        self.means[arm] = (self.means[arm] * n + reward) / (n + 1.0);
        self.counts[arm] += 1;
    }

    pub fn count(&self, arm: usize) -> u64 {
        self.counts[arm]
    }

    /// Empirical mean, undefined before the first sample.
    pub fn mean(&self, arm: usize) -> Option<f64> {
        (self.counts[arm] > 0).then(|| self.means[arm])
    }

    pub fn radius(&self, arm: usize) -> f64 {
        match self.counts[arm] {
            0 => f64::INFINITY,
            n => libm::sqrt(6.0 * self.log_horizon / n as f64),
        }
    }

    pub fn ucb(&self, arm: usize) -> f64 {
        match self.counts[arm] {
            0 => f64::INFINITY,
            _ => self.means[arm] + self.radius(arm),
        }
    }

    pub fn lcb(&self, arm: usize) -> f64 {
        match self.counts[arm] {
            0 => f64::NEG_INFINITY,
            _ => self.means[arm] - self.radius(arm),
        }
    }

    /// Whether the confidence interval of `arm` contains `mu`.
    pub fn covers(&self, arm: usize, mu: f64) -> bool {
        match self.counts[arm] {
            0 => true,
            _ => libm::fabs(self.means[arm] - mu) <= self.radius(arm),
        }
    }

    /// Arms ordered by decreasing empirical mean, if every pair of
    /// consecutive confidence intervals is strictly separated.
    pub fn separated_ranking(&self) -> Option<Vec<usize>> {
        if self.counts.iter().any(|&c| c == 0) && self.n_arms() > 1 {
            return None;
        }
        let mut order: Vec<usize> = (0..self.n_arms()).collect();
        order.sort_by(|&a, &b| self.means[b].total_cmp(&self.means[a]));
        order
            .windows(2)
            .all(|w| self.lcb(w[0]) > self.ucb(w[1]))
            .then_some(order)
    }
}
