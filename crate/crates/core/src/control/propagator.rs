//! Panel-wise exact propagation of the variation-of-constants formula.
//!
//! On every grid panel `[τ_k, τ_{k+1}]` (transformed time) a sampled signal is
//! interpolated by an exponentially fitted rule
//!
//! `v(σ) = v_k + (v_{k+1} − v_k) · expm1(E_n(σ)) / expm1(E_n(τ_{k+1}))`,
//! `E_n(σ) = n²(σ − τ_k) + ∫_{τ_k}^σ p`,
//!
//! which reproduces constants and the adjoint profile `σ ↦ Ψ_α(t, σ)e_n`
//! exactly. The state recursion
//!
//! `x_{k+1} = Ψ(τ_{k+1}, τ_k) x_k + a_k v_k + b_k v_{k+1}`
//!
//! then evaluates `∫ Ψ(t, s) v(s) d(s, α)` with the panel weights `a_k`, `b_k`
//! integrated once by Gauss–Legendre quadrature.

use crate::calculus::quadrature::GaussLegendre;
use crate::calculus::{AlphaGrid, Differentiable, FractionalOrder, ScalarFunction};
use crate::error::{Error, Result};
use crate::spectral::{EvolutionSystem, SpectralState};

use super::ControlSignal;

/// Gauss–Legendre nodes per grid panel.
pub const PANEL_QUADRATURE_ORDER: usize = 12;
/// Minimum number of time nodes on a control horizon.
pub const MIN_TIME_NODES: usize = 64;
/// Default number of time nodes on a control horizon.
pub const DEFAULT_TIME_NODES: usize = 256;

/// The control interval `[ζ, t₂]` and its time grid (uniform in `t^α/α`).
#[derive(Debug, Clone, PartialEq)]
pub struct ControlHorizon {
    grid: AlphaGrid,
}

impl ControlHorizon {
    pub fn new(order: FractionalOrder, zeta: f64, t_end: f64, nodes: usize) -> Result<Self> {
        if nodes < MIN_TIME_NODES {
            return Err(Error::Domain(format!(
                "a control horizon needs at least {MIN_TIME_NODES} time nodes, got {nodes}"
            )));
        }
        if !(zeta > 0.0) || !(t_end > zeta) {
            return Err(Error::Domain(format!(
                "horizon needs 0 < zeta < tEnd, got zeta = {zeta}, tEnd = {t_end}"
            )));
        }
        Ok(Self {
            grid: AlphaGrid::uniform_in_transformed_time(order, zeta, t_end, nodes)?,
        })
    }

    /// The full horizon of `sys`.
    pub fn for_system(sys: &EvolutionSystem, nodes: usize) -> Result<Self> {
        Self::new(sys.order(), sys.zeta(), sys.t_end(), nodes)
    }

    pub fn zeta(&self) -> f64 {
        self.grid.start()
    }

    pub fn t_end(&self) -> f64 {
        self.grid.end()
    }

    pub fn length(&self) -> f64 {
        self.t_end() - self.zeta()
    }

    pub fn grid(&self) -> &AlphaGrid {
        &self.grid
    }

    pub fn nodes(&self) -> usize {
        self.grid.len()
    }
}

/// Precomputed panel data for one system on one horizon.
#[derive(Debug, Clone)]
pub struct Propagator {
    sys: EvolutionSystem,
    horizon: ControlHorizon,
    modes: usize,
    nodes: usize,
    /// `E_n(τ_{k+1})` per mode and panel.
    panel_exponent: Vec<f64>,
    step: Vec<f64>,
    left: Vec<f64>,
    right: Vec<f64>,
    quad_ll: Vec<f64>,
    quad_lr: Vec<f64>,
    quad_rr: Vec<f64>,
    /// Exponent of `Ψ(t₂, τ_k)` per mode and node.
    end_exponent: Vec<f64>,
    gramian: Vec<f64>,
}

impl Propagator {
    pub fn new(sys: &EvolutionSystem, horizon: &ControlHorizon) -> Result<Self> {
        if horizon.grid().order() != sys.order() {
            return Err(Error::Shape("horizon grid and system use different orders".into()));
        }
        let slack = 1e-12 * sys.t_end();
        if horizon.zeta() < sys.zeta() - slack || horizon.t_end() > sys.t_end() + slack {
            return Err(Error::Domain(format!(
                "horizon [{}, {}] leaves the system horizon [{}, {}]",
                horizon.zeta(),
                horizon.t_end(),
                sys.zeta(),
                sys.t_end()
            )));
        }
        let modes = sys.modes();
        let nodes = horizon.nodes();
        let panels = nodes - 1;
        let tau = horizon.grid().transformed();
        let rule = GaussLegendre::new(PANEL_QUADRATURE_ORDER);
        let inner = GaussLegendre::new(8);
        let order = sys.order();
        let potential = sys.potential();

        // Mode-independent panel geometry: GL points, weights and ∫_{τ_k}^{σ} p.
        let mut offsets = Vec::with_capacity(panels * PANEL_QUADRATURE_ORDER);
        let mut weights = Vec::with_capacity(panels * PANEL_QUADRATURE_ORDER);
        let mut partial_potential = Vec::with_capacity(panels * PANEL_QUADRATURE_ORDER);
        let mut panel_potential = Vec::with_capacity(panels);
        for k in 0..panels {
            let (t0, t1) = (tau[k], tau[k + 1]);
            for (sigma, w) in rule.mapped(t0, t1) {
                offsets.push(sigma - t0);
                weights.push(w);
                partial_potential.push(transformed_potential_integral(potential, order, &inner, t0, sigma)?);
            }
            panel_potential.push(transformed_potential_integral(potential, order, &inner, t0, t1)?);
        }
        let mut cumulative = Vec::with_capacity(nodes);
        cumulative.push(0.0);
        for k in 0..panels {
            cumulative.push(cumulative[k] + panel_potential[k]);
        }
        let total_potential = cumulative[panels];
        let tau_end = tau[panels];

        let per_mode = modes * panels;
        let mut out = Self {
            sys: sys.clone(),
            horizon: horizon.clone(),
            modes,
            nodes,
            panel_exponent: Vec::with_capacity(per_mode),
            step: Vec::with_capacity(per_mode),
            left: Vec::with_capacity(per_mode),
            right: Vec::with_capacity(per_mode),
            quad_ll: Vec::with_capacity(per_mode),
            quad_lr: Vec::with_capacity(per_mode),
            quad_rr: Vec::with_capacity(per_mode),
            end_exponent: Vec::with_capacity(modes * nodes),
            gramian: Vec::with_capacity(modes),
        };

        for n in 1..=modes {
            let n2 = (n * n) as f64;
            for k in 0..nodes {
                out.end_exponent
                    .push(-(n2 * (tau_end - tau[k]) + (total_potential - cumulative[k])));
            }
            let mut gram = 0.0;
            for k in 0..panels {
                let h = tau[k + 1] - tau[k];
                let e_end = n2 * h + panel_potential[k];
                let fitted = e_end.abs() > 1e-12 * (1.0 + n2 * h);
                let denom = e_end.exp_m1();
                let (mut left, mut right) = (0.0, 0.0);
                let (mut ll, mut lr, mut rr) = (0.0, 0.0, 0.0);
                let mut decay_sq = 0.0;
                for q in 0..PANEL_QUADRATURE_ORDER {
                    let i = k * PANEL_QUADRATURE_ORDER + q;
                    let e = n2 * offsets[i] + partial_potential[i];
                    let w = if fitted { e.exp_m1() / denom } else { offsets[i] / h };
                    let decay = (e - e_end).exp();
                    let gw = weights[i];
                    left += gw * decay * (1.0 - w);
                    right += gw * decay * w;
                    ll += gw * (1.0 - w) * (1.0 - w);
                    lr += gw * (1.0 - w) * w;
                    rr += gw * w * w;
                    decay_sq += gw * decay * decay;
                }
                let to_end = out.end_exponent[(n - 1) * nodes + k + 1];
                gram += (2.0 * to_end).exp() * decay_sq;
                out.panel_exponent.push(e_end);
                out.step.push((-e_end).exp());
                out.left.push(left);
                out.right.push(right);
                out.quad_ll.push(ll);
                out.quad_lr.push(lr);
                out.quad_rr.push(rr);
            }
            out.gramian.push(gram);
        }
        Ok(out)
    }

    pub fn system(&self) -> &EvolutionSystem {
        &self.sys
    }

    pub fn horizon(&self) -> &ControlHorizon {
        &self.horizon
    }

    pub fn modes(&self) -> usize {
        self.modes
    }

    pub fn nodes(&self) -> usize {
        self.nodes
    }

    fn panel_index(&self, mode: usize, panel: usize) -> usize {
        (mode - 1) * (self.nodes - 1) + panel
    }

    /// `∫_ζ^{t₂} Ψ_α(t₂, s)² d(s, α)` per mode.
    pub fn gramian_diagonal(&self) -> &[f64] {
        &self.gramian
    }

    /// `Ψ_α(t₂, t_k)` for mode `n` at every grid node: the profile of `B*Ψ*(t₂, ·)e_n`.
    pub fn adjoint_profile(&self, mode: usize) -> impl Iterator<Item = f64> + '_ {
        self.end_exponent[(mode - 1) * self.nodes..mode * self.nodes]
            .iter()
            .map(|e| e.exp())
    }

    /// `Ψ_α(t₂, ζ)` for mode `n`.
    pub fn free_decay(&self, mode: usize) -> f64 {
        self.end_exponent[(mode - 1) * self.nodes].exp()
    }

    pub fn check_state(&self, z: &SpectralState) -> Result<()> {
        if z.modes() != self.modes {
            return Err(Error::Shape(format!("state has {} modes, expected {}", z.modes(), self.modes)));
        }
        Ok(())
    }

    pub fn check_signal(&self, v: &ControlSignal) -> Result<()> {
        if v.modes() != self.modes || v.nodes() != self.nodes {
            return Err(Error::Shape(format!(
                "signal is {}x{}, horizon grid expects {}x{}",
                v.modes(),
                v.nodes(),
                self.modes,
                self.nodes
            )));
        }
        Ok(())
    }

    /// States at every grid node of `x(t) = Ψ(t, ζ)x₀ + ∫_ζ^t Ψ(t, s) v(s) d(s, α)`.
    pub fn propagate(&self, x0: &SpectralState, forcing: &ControlSignal) -> Result<Vec<SpectralState>> {
        self.check_state(x0)?;
        self.check_signal(forcing)?;
        let mut states = vec![SpectralState::zeros(self.modes); self.nodes];
        for n in 1..=self.modes {
            let v = forcing.mode(n);
            let mut x = x0[n - 1];
            states[0].coeffs_mut()[n - 1] = x;
            for k in 0..self.nodes - 1 {
                let i = self.panel_index(n, k);
                x = self.step[i] * x + self.left[i] * v[k] + self.right[i] * v[k + 1];
                states[k + 1].coeffs_mut()[n - 1] = x;
            }
        }
        Ok(states)
    }

    /// State at `t₂` only.
    pub fn final_state(&self, x0: &SpectralState, forcing: &ControlSignal) -> Result<SpectralState> {
        self.check_state(x0)?;
        self.check_signal(forcing)?;
        let coeffs = (1..=self.modes)
            .map(|n| {
                let v = forcing.mode(n);
                (0..self.nodes - 1).fold(x0[n - 1], |x, k| {
                    let i = self.panel_index(n, k);
                    self.step[i] * x + self.left[i] * v[k] + self.right[i] * v[k + 1]
                })
            })
            .collect();
        Ok(SpectralState::new(coeffs))
    }

    /// `⟨u, v⟩_{L², α} = Σ_n ∫ u_n(s) v_n(s) d(s, α)` under the fitted interpolation.
    pub fn inner_product(&self, u: &ControlSignal, v: &ControlSignal) -> Result<f64> {
        self.check_signal(u)?;
        self.check_signal(v)?;
        let mut total = 0.0;
        for n in 1..=self.modes {
            let (a, b) = (u.mode(n), v.mode(n));
            for k in 0..self.nodes - 1 {
                let i = self.panel_index(n, k);
                total += self.quad_ll[i] * a[k] * b[k]
                    + self.quad_lr[i] * (a[k] * b[k + 1] + a[k + 1] * b[k])
                    + self.quad_rr[i] * a[k + 1] * b[k + 1];
            }
        }
        Ok(total)
    }

    /// `‖u‖_{L², α}`.
    pub fn signal_norm(&self, u: &ControlSignal) -> Result<f64> {
        Ok(self.inner_product(u, u)?.max(0.0).sqrt())
    }

    /// Value of mode `n` of a sampled signal at an arbitrary time `t`
    /// under the fitted interpolation. The potential integral inside the
    /// panel is recomputed from the system rather than taken from the tables.
    pub fn interpolate(&self, signal: &ControlSignal, mode: usize, t: f64) -> Result<f64> {
        self.check_signal(signal)?;
        let grid = self.horizon.grid();
        let nodes = grid.nodes();
        if t < nodes[0] || t > nodes[nodes.len() - 1] {
            return Err(Error::Range(format!(
                "t = {t} outside horizon [{}, {}]",
                nodes[0],
                nodes[nodes.len() - 1]
            )));
        }
        let k = nodes.partition_point(|&x| x <= t).clamp(1, nodes.len() - 1) - 1;
        let v = signal.mode(mode);
        let tau = grid.transformed();
        let sigma = grid.order().transform(t);
        let n2 = (mode * mode) as f64;
        let h = tau[k + 1] - tau[k];
        let e_end = self.panel_exponent[self.panel_index(mode, k)];
        let w = if e_end.abs() > 1e-12 * (1.0 + n2 * h) {
            let e = n2 * (sigma - tau[k]) + self.sys.potential_integral(t, nodes[k])?;
            e.exp_m1() / e_end.exp_m1()
        } else {
            (sigma - tau[k]) / h
        };
        Ok(v[k] + (v[k + 1] - v[k]) * w)
    }
}

/// `∫_{τ0}^{τ1} p(t(r)) dr`, i.e. the α-integral of `p` between the original times.
fn transformed_potential_integral(
    potential: &ScalarFunction,
    order: FractionalOrder,
    rule: &GaussLegendre,
    tau0: f64,
    tau1: f64,
) -> Result<f64> {
    if let ScalarFunction::Constant { value } = potential {
        return Ok(value * (tau1 - tau0));
    }
    let mut total = 0.0;
    for (r, w) in rule.mapped(tau0, tau1) {
        total += w * potential.value(order.inverse_transform(r))?;
    }
    Ok(total)
}
