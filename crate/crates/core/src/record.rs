use crate::hilbert::PureState;

/// Per-round trace of a sequential measurement protocol.
///
/// `S` is whatever final state the protocol can report: a [`PureState`] for
/// closed-system runs, mode populations for open-system runs.
#[derive(Debug, Clone, PartialEq)]
pub struct RunRecord<S = PureState> {
    fidelity_per_round: Vec<f64>,
    success_prob_per_round: Vec<f64>,
    cumulative_per_round: Vec<f64>,
    duration_per_round: Vec<f64>,
    cumulative_success: f64,
    total_time: f64,
    final_state: S,
}

impl<S> RunRecord<S> {
    /// Empty record starting from `initial`.
    pub fn new(initial: S) -> Self {
        Self {
            fidelity_per_round: Vec::new(),
            success_prob_per_round: Vec::new(),
            cumulative_per_round: Vec::new(),
            duration_per_round: Vec::new(),
            cumulative_success: 1.0,
            total_time: 0.0,
            final_state: initial,
        }
    }

    pub fn push_round(&mut self, fidelity: f64, success_prob: f64, duration: f64, state: S) {
        self.cumulative_success *= success_prob;
        self.total_time += duration;
        self.fidelity_per_round.push(fidelity);
        self.success_prob_per_round.push(success_prob);
        self.cumulative_per_round.push(self.cumulative_success);
        self.duration_per_round.push(duration);
        self.final_state = state;
    }

    pub fn rounds(&self) -> usize {
        self.fidelity_per_round.len()
    }

    pub fn fidelity_per_round(&self) -> &[f64] {
        &self.fidelity_per_round
    }

    pub fn success_prob_per_round(&self) -> &[f64] {
        &self.success_prob_per_round
    }

    /// Cumulative success probability after each round.
    pub fn cumulative_per_round(&self) -> &[f64] {
        &self.cumulative_per_round
    }

    pub fn duration_per_round(&self) -> &[f64] {
        &self.duration_per_round
    }

    /// Protocol time elapsed at the end of each round, seconds.
    pub fn elapsed_per_round(&self) -> Vec<f64> {
        self.duration_per_round
            .iter()
            .scan(0.0, |t, d| {
                *t += d;
                Some(*t)
            })
            .collect()
    }

    pub fn cumulative_success(&self) -> f64 {
        self.cumulative_success
    }

    pub fn total_time(&self) -> f64 {
        self.total_time
    }

    pub fn final_state(&self) -> &S {
        &self.final_state
    }

    pub fn into_final_state(self) -> S {
        self.final_state
    }

    /// Fidelity after the last round (1 for an empty record is not assumed).
    pub fn final_fidelity(&self) -> Option<f64> {
        self.fidelity_per_round.last().copied()
    }

    /// First 1-based round whose fidelity reaches `threshold`.
    pub fn first_round_reaching(&self, threshold: f64) -> Option<usize> {
        self.fidelity_per_round
            .iter()
            .position(|&f| f >= threshold)
            .map(|i| i + 1)
    }
}
