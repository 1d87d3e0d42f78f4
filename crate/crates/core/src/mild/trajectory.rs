use crate::error::{Error, Result};
use crate::spectral::SpectralState;

/// States on the nodes of a time grid; linear in `t` between nodes.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    times: Vec<f64>,
    states: Vec<SpectralState>,
}

impl Trajectory {
    pub fn new(times: Vec<f64>, states: Vec<SpectralState>) -> Result<Self> {
        if times.len() != states.len() || times.len() < 2 {
            return Err(Error::Shape(format!(
                "trajectory needs matching times and states (at least 2), got {} and {}",
                times.len(),
                states.len()
            )));
        }
        let modes = states[0].modes();
        if states.iter().any(|s| s.modes() != modes) {
            return Err(Error::Shape("trajectory states have differing mode counts".into()));
        }
        if times.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::Domain("trajectory times must be strictly increasing".into()));
        }
        Ok(Self { times, states })
    }

    /// The same state at every node.
    pub fn constant(times: Vec<f64>, state: SpectralState) -> Result<Self> {
        let states = vec![state; times.len()];
        Self::new(times, states)
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn states(&self) -> &[SpectralState] {
        &self.states
    }

    pub fn modes(&self) -> usize {
        self.states[0].modes()
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn initial_state(&self) -> &SpectralState {
        &self.states[0]
    }

    pub fn final_state(&self) -> &SpectralState {
        &self.states[self.states.len() - 1]
    }

    pub fn span(&self) -> (f64, f64) {
        (self.times[0], self.times[self.times.len() - 1])
    }

    /// State at `t`, linearly interpolated in `t`.
    pub fn at(&self, t: f64) -> Result<SpectralState> {
        let (lo, hi) = self.span();
        if !(t >= lo && t <= hi) {
            return Err(Error::Range(format!("t = {t} outside trajectory span [{lo}, {hi}]")));
        }
        let k = self.times.partition_point(|&x| x <= t).clamp(1, self.times.len() - 1);
        let (t0, t1) = (self.times[k - 1], self.times[k]);
        if t == t1 {
            return Ok(self.states[k].clone());
        }
        let w = (t - t0) / (t1 - t0);
        Ok(self.states[k - 1].scaled(1.0 - w).axpy(w, &self.states[k]))
    }

    /// `sup_t ‖self(t) − other(t)‖` over the shared nodes.
    pub fn sup_distance(&self, other: &Self) -> Result<f64> {
        if self.times != other.times || self.modes() != other.modes() {
            return Err(Error::Shape("trajectories live on different grids".into()));
        }
        Ok(self
            .states
            .iter()
            .zip(&other.states)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max))
    }

    /// `sup_t ‖x(t)‖`.
    pub fn sup_norm(&self) -> f64 {
        self.states.iter().map(SpectralState::norm).fold(0.0, f64::max)
    }

    /// `(1 − ω) self + ω other`.
    pub fn blend(&self, other: &Self, omega: f64) -> Result<Self> {
        if self.times != other.times {
            return Err(Error::Shape("trajectories live on different grids".into()));
        }
        let states = self
            .states
            .iter()
            .zip(&other.states)
            .map(|(a, b)| a.scaled(1.0 - omega).axpy(omega, b))
            .collect();
        Ok(Self {
            times: self.times.clone(),
            states,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn linear_interpolation_between_nodes() {
        let tr = Trajectory::new(
            vec![0.0, 1.0, 3.0],
            vec![
                SpectralState::new(vec![0.0]),
                SpectralState::new(vec![2.0]),
                SpectralState::new(vec![6.0]),
            ],
        )
        .unwrap();
        assert_eq!(tr.at(0.5).unwrap()[0], 1.0);
        assert_eq!(tr.at(2.0).unwrap()[0], 4.0);
        assert_eq!(tr.at(3.0).unwrap()[0], 6.0);
        assert!(matches!(tr.at(3.5), Err(Error::Range(_))));
    }
}
