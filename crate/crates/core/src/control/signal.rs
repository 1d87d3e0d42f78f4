use serde::Serialize;

use crate::error::{Error, Result};
use crate::spectral::SpectralState;

/// Per-mode time signal sampled on the nodes of a horizon grid,
/// stored as an `N × K` row-major matrix.
///
/// Controls (with `B = I`) and forcing terms share this representation.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ControlSignal {
    modes: usize,
    nodes: usize,
    values: Vec<f64>,
}

impl ControlSignal {
    pub fn zeros(modes: usize, nodes: usize) -> Self {
        Self {
            modes,
            nodes,
            values: vec![0.0; modes * nodes],
        }
    }

    pub fn from_values(modes: usize, nodes: usize, values: Vec<f64>) -> Result<Self> {
        if values.len() != modes * nodes {
            return Err(Error::Shape(format!(
                "signal of {modes} modes x {nodes} nodes needs {} values, got {}",
                modes * nodes,
                values.len()
            )));
        }
        Ok(Self { modes, nodes, values })
    }

    /// `f(mode, node)` with a 1-based mode and 0-based node index.
    pub fn from_fn<F: FnMut(usize, usize) -> f64>(modes: usize, nodes: usize, mut f: F) -> Self {
        let mut values = Vec::with_capacity(modes * nodes);
        for n in 1..=modes {
            for k in 0..nodes {
                values.push(f(n, k));
            }
        }
        Self { modes, nodes, values }
    }

    /// One state per node.
    pub fn from_states(states: &[SpectralState]) -> Result<Self> {
        let modes = states.first().map_or(0, SpectralState::modes);
        if states.iter().any(|s| s.modes() != modes) {
            return Err(Error::Shape("states have differing mode counts".into()));
        }
        Ok(Self::from_fn(modes, states.len(), |n, k| states[k][n - 1]))
    }

    pub fn modes(&self) -> usize {
        self.modes
    }

    pub fn nodes(&self) -> usize {
        self.nodes
    }

    /// Samples of a single mode (1-based).
    pub fn mode(&self, mode: usize) -> &[f64] {
        &self.values[(mode - 1) * self.nodes..mode * self.nodes]
    }

    pub fn mode_mut(&mut self, mode: usize) -> &mut [f64] {
        let nodes = self.nodes;
        &mut self.values[(mode - 1) * nodes..mode * nodes]
    }

    pub fn get(&self, mode: usize, node: usize) -> f64 {
        self.values[(mode - 1) * self.nodes + node]
    }

    /// All modes at one node.
    pub fn at_node(&self, node: usize) -> SpectralState {
        SpectralState::new((1..=self.modes).map(|n| self.get(n, node)).collect())
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            modes: self.modes,
            nodes: self.nodes,
            values: self.values.iter().map(|v| v * factor).collect(),
        }
    }

    /// `self + factor * other`.
    pub fn axpy(&self, factor: f64, other: &Self) -> Result<Self> {
        self.check_same_shape(other)?;
        Ok(Self {
            modes: self.modes,
            nodes: self.nodes,
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(a, b)| a + factor * b)
                .collect(),
        })
    }

    pub fn check_same_shape(&self, other: &Self) -> Result<()> {
        if self.modes != other.modes || self.nodes != other.nodes {
            return Err(Error::Shape(format!(
                "signal shapes differ: {}x{} vs {}x{}",
                self.modes, self.nodes, other.modes, other.nodes
            )));
        }
        Ok(())
    }
}
