//! Running statistics for sampler output.
//!
//! Accumulators use compensated summation so that merging partial results
//! from concurrent chains is associative and order-independent up to
//! float rounding.

use alloc::vec;
use alloc::vec::Vec;

/// Kahan–Babuska compensated sum.
#[derive(Clone, Copy, Debug, Default)]
pub struct KahanSum {
    sum: f64,
    carry: f64,
}

impl KahanSum {
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.carry += (self.sum - t) + x;
        } else {
            self.carry += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.carry
    }

    pub fn merge(&mut self, other: &KahanSum) {
        self.add(other.carry);
        self.add(other.sum);
    }
}

/// Per-component first and second moments.
#[derive(Clone, Debug)]
pub struct ComponentMoments {
    count: u64,
    sums: Vec<KahanSum>,
    sq_sums: Vec<KahanSum>,
}

impl ComponentMoments {
    pub fn new(dim: usize) -> Self {
        ComponentMoments {
            count: 0,
            sums: vec![KahanSum::default(); dim],
            sq_sums: vec![KahanSum::default(); dim],
        }
    }

    pub fn push(&mut self, x: &[f64]) {
        self.count += 1;
        for (i, &v) in x.iter().enumerate() {
            self.sums[i].add(v);
            self.sq_sums[i].add(v * v);
        }
    }

    pub fn count(&self) -> u64 {
        self.count
    }

    pub fn dim(&self) -> usize {
        self.sums.len()
    }

    pub fn mean(&self, i: usize) -> f64 {
        self.sums[i].value() / self.count as f64
    }

    /// Population variance of component `i`.
    pub fn variance(&self, i: usize) -> f64 {
        let m = self.mean(i);
        (self.sq_sums[i].value() / self.count as f64 - m * m).max(0.0)
    }

    pub fn merge(&mut self, other: &ComponentMoments) {
        assert_eq!(self.dim(), other.dim());
        self.count += other.count;
        for i in 0..self.sums.len() {
            self.sums[i].merge(&other.sums[i]);
            self.sq_sums[i].merge(&other.sq_sums[i]);
        }
    }
}

/// Lag-k autocovariance sums for a scalar observable.
///
/// Cross products never bridge a merge boundary, so pooling chains keeps
/// each chain's internal correlation structure.
#[derive(Clone, Debug)]
pub struct AutoCorr {
    max_lag: usize,
    history: Vec<f64>,
    filled: usize,
    cross: Vec<KahanSum>,
    cross_count: Vec<u64>,
    moments: ComponentMoments,
}

impl AutoCorr {
    pub fn new(max_lag: usize) -> Self {
        AutoCorr {
            max_lag,
            history: vec![0.0; max_lag.max(1)],
            filled: 0,
            cross: vec![KahanSum::default(); max_lag],
            cross_count: vec![0; max_lag],
            moments: ComponentMoments::new(1),
        }
    }

    pub fn push(&mut self, x: f64) {
        self.moments.push(&[x]);
        let len = self.history.len();
        for lag in 1..=self.max_lag {
            if self.filled >= lag {
                let prev = self.history[(self.filled - lag) % len];
                self.cross[lag - 1].add(x * prev);
                self.cross_count[lag - 1] += 1;
            }
        }
        if self.max_lag > 0 {
            self.history[self.filled % len] = x;
        }
        self.filled += 1;
    }

    /// Lag-k autocorrelation estimate; `None` when not enough data.
    pub fn correlation(&self, lag: usize) -> Option<f64> {
        if lag == 0 {
            return Some(1.0);
        }
        if lag > self.max_lag || self.cross_count[lag - 1] < 2 {
            return None;
        }
        let mean = self.moments.mean(0);
        let var = self.moments.variance(0);
        if var <= 0.0 {
            return None;
        }
        let n = self.cross_count[lag - 1] as f64;
        Some((self.cross[lag - 1].value() / n - mean * mean) / var)
    }

    pub fn merge(&mut self, other: &AutoCorr) {
        assert_eq!(self.max_lag, other.max_lag);
        self.moments.merge(&other.moments);
        for i in 0..self.max_lag {
            self.cross[i].merge(&other.cross[i]);
            self.cross_count[i] += other.cross_count[i];
        }
        // History is chain-local; after a merge new pushes would conflate
        // chains, so merged accumulators are read-only by convention.
    }
}

/// Summary statistics of a chain run.
#[derive(Clone, Debug)]
pub struct RunStats {
    n_transitions: u64,
    n_accepted: u64,
    n_diverged: u64,
    delta_h_sum: KahanSum,
    delta_h_count: u64,
    components: ComponentMoments,
    observable: AutoCorr,
    observable_index: usize,
}

impl RunStats {
    /// `observable_index` selects the coordinate whose autocorrelation is
    /// tracked (defaults to the first coordinate in the samplers).
    pub fn new(dim: usize, observable_index: usize, max_lag: usize) -> Self {
        RunStats {
            n_transitions: 0,
            n_accepted: 0,
            n_diverged: 0,
            delta_h_sum: KahanSum::default(),
            delta_h_count: 0,
            components: ComponentMoments::new(dim),
            observable: AutoCorr::new(max_lag),
            observable_index,
        }
    }

    pub fn record(&mut self, accepted: bool, delta_h: f64, q: &[f64]) {
        self.n_transitions += 1;
        if accepted {
            self.n_accepted += 1;
        }
        if delta_h.is_finite() {
            self.delta_h_sum.add(delta_h);
            self.delta_h_count += 1;
        } else {
            self.n_diverged += 1;
        }
        self.components.push(q);
        self.observable.push(q[self.observable_index]);
    }

    pub fn n_transitions(&self) -> u64 {
        self.n_transitions
    }

    pub fn n_diverged(&self) -> u64 {
        self.n_diverged
    }

    pub fn acceptance_rate(&self) -> f64 {
        if self.n_transitions == 0 {
            return 0.0;
        }
        self.n_accepted as f64 / self.n_transitions as f64
    }

    /// Mean energy error over non-diverged transitions.
    pub fn mean_delta_h(&self) -> f64 {
        if self.delta_h_count == 0 {
            return f64::NAN;
        }
        self.delta_h_sum.value() / self.delta_h_count as f64
    }

    pub fn component_mean(&self, i: usize) -> f64 {
        self.components.mean(i)
    }

    pub fn component_variance(&self, i: usize) -> f64 {
        self.components.variance(i)
    }

    pub fn dim(&self) -> usize {
        self.components.dim()
    }

    pub fn autocorrelation(&self, lag: usize) -> Option<f64> {
        self.observable.correlation(lag)
    }

    pub fn merge(&mut self, other: &RunStats) {
        assert_eq!(self.observable_index, other.observable_index);
        self.n_transitions += other.n_transitions;
        self.n_accepted += other.n_accepted;
        self.n_diverged += other.n_diverged;
        self.delta_h_sum.merge(&other.delta_h_sum);
        self.delta_h_count += other.delta_h_count;
        self.components.merge(&other.components);
        self.observable.merge(&other.observable);
    }
}
