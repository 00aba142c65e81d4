//! The multi-round-communication seeking algorithm for the malicious-free
//! game: players repeatedly average their aggregate and weight estimates over
//! trusted neighbors (`S` rounds per iteration), then take one projected
//! gradient step, with a correction that keeps the weighted average of the
//! aggregate estimates conserved.

use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use crate::game::{GameError, GameSpec};
use crate::linalg::powi;
use crate::metrics::{PlayerSnapshot, Trace, TraceRow};
use crate::network::{build_weights, Digraph, NetworkError, SpectralDiagnostics, WeightMatrix};
use crate::{solve_ne_oracle, squared_error, GameConstants};

/// Guard threshold for divisions by the own weight-estimate coordinate.
pub const EPS_V: f64 = 1e-12;

/// Per-player state: strategy, weight estimate (one coordinate per player)
/// and aggregate estimate.
#[derive(Debug, Clone, PartialEq)]
pub struct FastPlayerState {
    pub x: Vec<f64>,
    pub v: Vec<f64>,
    pub sigma: Vec<f64>,
}

/// Step-size rule; `Power` is `scale / (k+1)^r` with `1/2 < r < 1`.
#[derive(Debug, Clone, PartialEq)]
pub enum StepRule {
    Constant(f64),
    Power { scale: f64, r: f64 },
}

/// Communication rounds per iteration.
#[derive(Debug, Clone, PartialEq)]
pub enum RoundsRule {
    Constant(u32),
    PerIteration(Vec<u32>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Schedule {
    pub step: StepRule,
    pub rounds: RoundsRule,
}

#[derive(Debug, Clone, PartialEq)]
pub enum ScheduleError {
    NonPositiveAlpha,
    ExponentOutOfRange { r: f64 },
    ZeroRounds,
    EmptyRoundsList,
    RoundsListTooShort { have: usize, need: usize },
}

impl fmt::Display for ScheduleError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ScheduleError::NonPositiveAlpha => write!(f, "step size must be positive"),
            ScheduleError::ExponentOutOfRange { r } => {
                write!(f, "diminishing-step exponent must satisfy 1/2 < r < 1, got {r}")
            }
            ScheduleError::ZeroRounds => write!(f, "round count must be at least 1"),
            ScheduleError::EmptyRoundsList => write!(f, "per-iteration round list is empty"),
            ScheduleError::RoundsListTooShort { have, need } => {
                write!(f, "round list covers {have} iterations, run needs {need}")
            }
        }
    }
}

impl core::error::Error for ScheduleError {}

impl Schedule {
    pub fn constant(alpha: f64, s: u32) -> Self {
        Schedule { step: StepRule::Constant(alpha), rounds: RoundsRule::Constant(s) }
    }

    pub fn validate(&self, horizon: usize) -> Result<(), ScheduleError> {
        match self.step {
            StepRule::Constant(a) => {
                if a <= 0.0 {
                    return Err(ScheduleError::NonPositiveAlpha);
                }
            }
            StepRule::Power { scale, r } => {
                if scale <= 0.0 {
                    return Err(ScheduleError::NonPositiveAlpha);
                }
                if !(r > 0.5 && r < 1.0) {
                    return Err(ScheduleError::ExponentOutOfRange { r });
                }
            }
        }
        match &self.rounds {
            RoundsRule::Constant(s) => {
                if *s == 0 {
                    return Err(ScheduleError::ZeroRounds);
                }
            }
            RoundsRule::PerIteration(list) => {
                if list.is_empty() {
                    return Err(ScheduleError::EmptyRoundsList);
                }
                if list.iter().any(|&s| s == 0) {
                    return Err(ScheduleError::ZeroRounds);
                }
                if list.len() < horizon {
                    return Err(ScheduleError::RoundsListTooShort {
                        have: list.len(),
                        need: horizon,
                    });
                }
            }
        }
        Ok(())
    }

    /// Step size at 1-based iteration `k`.
    pub fn alpha(&self, k: u32) -> f64 {
        match self.step {
            StepRule::Constant(a) => a,
            StepRule::Power { scale, r } => scale / libm::pow(k as f64 + 1.0, r),
        }
    }

    /// Rounds at 1-based iteration `k`.
    pub fn rounds(&self, k: u32) -> u32 {
        match &self.rounds {
            RoundsRule::Constant(s) => *s,
            RoundsRule::PerIteration(list) => list[(k as usize - 1).min(list.len() - 1)],
        }
    }
}

/// Which aggregate estimate feeds the gradient step. The update rule uses
/// the estimate held before the communication rounds; the alternative is an
/// ablation and not the default.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SigmaMode {
    #[default]
    PreMrc,
    PostMrc,
}

#[derive(Debug, Clone, PartialEq)]
pub enum FastError {
    Game(GameError),
    Network(NetworkError),
    Schedule(ScheduleError),
    /// The own weight-estimate coordinate fell to or below the guard; the
    /// protocol cannot divide by it.
    WeightEstimateGuard { player: usize, iteration: u32, value: f64 },
    BadInit { player: usize },
}

impl fmt::Display for FastError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FastError::Game(e) => write!(f, "game error: {e}"),
            FastError::Network(e) => write!(f, "network error: {e}"),
            FastError::Schedule(e) => write!(f, "schedule error: {e}"),
            FastError::WeightEstimateGuard { player, iteration, value } => write!(
                f,
                "weight-estimate guard tripped for player {player} at iteration {iteration} (value {value:e})"
            ),
            FastError::BadInit { player } => write!(f, "initial strategy of player {player} is outside its box"),
        }
    }
}

impl core::error::Error for FastError {}

impl From<GameError> for FastError {
    fn from(e: GameError) -> Self {
        FastError::Game(e)
    }
}

impl From<NetworkError> for FastError {
    fn from(e: NetworkError) -> Self {
        FastError::Network(e)
    }
}

impl From<ScheduleError> for FastError {
    fn from(e: ScheduleError) -> Self {
        FastError::Schedule(e)
    }
}

/// One weighted averaging round for every row: `out[i] = Σ_j a_ij vals[j]`,
/// summing over the positive entries in ascending neighbor order.
pub fn mix_round(values: &[Vec<f64>], weights: &WeightMatrix) -> Vec<Vec<f64>> {
    (0..weights.n()).map(|i| weighted_row_sum(i, values, weights)).collect()
}

/// The per-row kernel shared by every simulator so that trajectories that
/// must coincide do so bit for bit.
pub fn weighted_row_sum(i: usize, values: &[Vec<f64>], weights: &WeightMatrix) -> Vec<f64> {
    let dim = values[i].len();
    let mut acc = vec![0.0; dim];
    let row = weights.row(i);
    for (j, &w) in row.iter().enumerate() {
        if w > 0.0 {
            let vj = &values[j];
            for d in 0..dim {
                acc[d] += w * vj[d];
            }
        }
    }
    acc
}

/// `S` communication rounds applied to the stacked aggregate and weight
/// estimates; equivalent to multiplying the stacked matrices by the `S`-th
/// power of the weight matrix.
pub fn mrc(
    sigmas: &[Vec<f64>],
    vs: &[Vec<f64>],
    weights: &WeightMatrix,
    s: u32,
) -> (Vec<Vec<f64>>, Vec<Vec<f64>>) {
    let mut sig = sigmas.to_vec();
    let mut v = vs.to_vec();
    for _ in 0..s {
        sig = mix_round(&sig, weights);
        v = mix_round(&v, weights);
    }
    (sig, v)
}

/// One gradient-based update for a single player.
///
/// The strategy moves along the projected gradient evaluated at the chosen
/// aggregate estimate; the new aggregate estimate is the communicated one
/// plus the correction `phi(x⁺)/v⁺[rank] − phi(x)/v[rank]`, which keeps the
/// network-wide weighted aggregate conserved.
#[allow(clippy::too_many_arguments)]
pub fn gradient_update(
    state: &FastPlayerState,
    sigma_mrc: &[f64],
    v_mrc: &[f64],
    alpha: f64,
    rank: usize,
    game: &GameSpec,
    player: usize,
    mode: SigmaMode,
    iteration: u32,
) -> Result<FastPlayerState, FastError> {
    let v_own_old = state.v[rank];
    let v_own_new = v_mrc[rank];
    if v_own_old <= EPS_V {
        return Err(FastError::WeightEstimateGuard { player, iteration, value: v_own_old });
    }
    if v_own_new <= EPS_V {
        return Err(FastError::WeightEstimateGuard { player, iteration, value: v_own_new });
    }
    let grad_sigma = match mode {
        SigmaMode::PreMrc => &state.sigma,
        SigmaMode::PostMrc => sigma_mrc,
    };
    let g = game.gradient(player, &state.x, grad_sigma);
    let stepped: Vec<f64> = state.x.iter().zip(&g).map(|(xi, gi)| xi - alpha * gi).collect();
    let x_new = crate::game::project_box(&stepped, &game.boxes[player])?;
    let phi_new = game.phi(player, &x_new);
    let phi_old = game.phi(player, &state.x);
    let sigma_new: Vec<f64> = sigma_mrc
        .iter()
        .enumerate()
        .map(|(d, &s)| s + phi_new[d] / v_own_new - phi_old[d] / v_own_old)
        .collect();
    Ok(FastPlayerState { x: x_new, v: v_mrc.to_vec(), sigma: sigma_new })
}

/// Options for a simulation run.
#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    /// Reference profile for error reporting; computed from the oracle when
    /// absent.
    pub x_star: Option<Vec<f64>>,
    pub sigma_mode: SigmaMode,
    pub oracle_tol: f64,
}

impl RunOptions {
    pub fn oracle_tol_or_default(&self) -> f64 {
        if self.oracle_tol > 0.0 {
            self.oracle_tol
        } else {
            1e-10
        }
    }
}

/// Run the seeking algorithm on an all-legitimate graph for `k_iters`
/// iterations from the stacked initial profile. The trace holds one row per
/// iteration plus a final row with the terminal state.
pub fn run_fast(
    game: &GameSpec,
    graph: &Digraph,
    schedule: &Schedule,
    x_init: &[Vec<f64>],
    k_iters: u32,
    opts: &RunOptions,
) -> Result<Trace, FastError> {
    let n = game.n;
    assert_eq!(graph.n_total(), n, "graph and game disagree on player count");
    schedule.validate(k_iters as usize)?;
    for (i, xi) in x_init.iter().enumerate() {
        let proj = crate::game::project_box(xi, &game.boxes[i])?;
        if proj != *xi {
            return Err(FastError::BadInit { player: i });
        }
    }
    let weights = build_weights(graph.all_in_neighbors())?;
    let x_star = match &opts.x_star {
        Some(v) => v.clone(),
        None => solve_ne_oracle(game, opts.oracle_tol_or_default())?,
    };

    let mut states: Vec<FastPlayerState> = (0..n)
        .map(|i| {
            let mut e = vec![0.0; n];
            e[i] = 1.0;
            FastPlayerState { x: x_init[i].clone(), v: e, sigma: game.phi(i, &x_init[i]) }
        })
        .collect();

    let mut trace = Trace::default();
    let mut comms: u64 = 0;
    let mut grads: u64 = 0;
    let record = |states: &[FastPlayerState], k: u32, comms: u64, grads: u64| TraceRow {
        k,
        players: states
            .iter()
            .enumerate()
            .map(|(i, s)| PlayerSnapshot {
                player: i,
                x: s.x.clone(),
                sigma_est: s.sigma.clone(),
                v_self: s.v[i],
            })
            .collect(),
        err_sq: {
            let flat: Vec<f64> = states.iter().flat_map(|s| s.x.iter().copied()).collect();
            squared_error(&flat, &x_star).expect("profile dimensions")
        },
        grad_evals_cum: grads,
        comms_cum: comms,
        resets_cum: 0,
    };

    for k in 1..=k_iters {
        trace.rows.push(record(&states, k, comms, grads));
        let s_k = schedule.rounds(k);
        let sigmas: Vec<Vec<f64>> = states.iter().map(|s| s.sigma.clone()).collect();
        let vs: Vec<Vec<f64>> = states.iter().map(|s| s.v.clone()).collect();
        let (sig_m, v_m) = mrc(&sigmas, &vs, &weights, s_k);
        let alpha = schedule.alpha(k);
        for i in 0..n {
            states[i] = gradient_update(
                &states[i],
                &sig_m[i],
                &v_m[i],
                alpha,
                i,
                game,
                i,
                opts.sigma_mode,
                k,
            )?;
        }
        comms += s_k as u64;
        grads += 1;
    }
    trace.rows.push(record(&states, k_iters + 1, comms, grads));
    Ok(trace)
}

/// The 2x2 coupling matrix of the constant-step analysis and its spectral
/// radius; the precondition for linear convergence is a radius below one.
#[derive(Debug, Clone, PartialEq)]
pub struct GammaMatrix {
    pub entries: [[f64; 2]; 2],
    pub spectral_radius: f64,
}

/// Build the coupling matrix for step `alpha` and round count `s`:
/// `[[1 − 2αμ, αL₂/√v_min], [αL₂/√v_min, ρ₁^{2S}]]`.
pub fn gamma_matrix(
    alpha: f64,
    s: u32,
    constants: &GameConstants,
    diag: &SpectralDiagnostics,
) -> GammaMatrix {
    let off = alpha * constants.l2 / libm::sqrt(diag.v_min);
    let a = 1.0 - 2.0 * alpha * constants.mu;
    let d = powi(diag.rho1, 2 * s);
    // symmetric 2x2: eigenvalues (a+d)/2 ± sqrt(((a−d)/2)² + off²)
    let mid = 0.5 * (a + d);
    let rad = libm::sqrt(0.25 * (a - d) * (a - d) + off * off);
    let radius = libm::fabs(mid + rad).max(libm::fabs(mid - rad));
    GammaMatrix { entries: [[a, off], [off, d]], spectral_radius: radius }
}
