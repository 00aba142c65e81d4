//! Aggregative-game model: strategy boxes, costs, pseudo-gradients, the
//! aggregate map, game constants, and a centralized equilibrium oracle.
//!
//! The oracle is deliberately independent of every distributed module: it
//! iterates the projected pseudo-gradient map with the true aggregate and is
//! used as ground truth by the simulators and the test suites.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use crate::linalg::{spectral_norm, Matrix};

/// Box constraint set for one player, one bound pair per coordinate.
#[derive(Debug, Clone, PartialEq)]
pub struct StrategyBox {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
}

impl StrategyBox {
    pub fn new(lo: Vec<f64>, hi: Vec<f64>) -> Result<Self, GameError> {
        if lo.len() != hi.len() {
            return Err(GameError::DimensionMismatch {
                expected: lo.len(),
                got: hi.len(),
            });
        }
        if lo.iter().zip(&hi).any(|(l, h)| l > h || !l.is_finite() || !h.is_finite()) {
            return Err(GameError::InvalidBox);
        }
        Ok(StrategyBox { lo, hi })
    }

    pub fn dim(&self) -> usize {
        self.lo.len()
    }

    pub fn scalar(lo: f64, hi: f64) -> Result<Self, GameError> {
        StrategyBox::new(vec![lo], vec![hi])
    }
}

/// Per-vehicle parameters of the electricity-consumption benchmark.
///
/// The cost of a vehicle is
/// `x·(a·σ + b) + p0·(κ·(1 − x/x_max)² + d)`,
/// electricity bought at a demand-dependent price plus the fuel bill for the
/// remaining demand.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhevParams {
    pub x_min: f64,
    pub x_max: f64,
    pub p0: f64,
    pub a: f64,
    pub b: f64,
    pub kappa: f64,
    pub d: f64,
}

impl PhevParams {
    pub fn validate(&self) -> Result<(), GameError> {
        let ok = self.x_max > self.x_min
            && self.x_min >= 0.0
            && self.p0 >= 0.0
            && self.kappa >= 0.0
            && self.a > 0.0;
        if ok {
            Ok(())
        } else {
            Err(GameError::InvalidParams)
        }
    }
}

/// Cost family of the game.
#[derive(Debug, Clone, PartialEq)]
pub enum CostKind {
    /// The electric-vehicle benchmark; strategies are scalars.
    Phev(Vec<PhevParams>),
    /// `‖x_i − t_i‖² + w·⟨x_i, σ⟩`, a strongly monotone test family that
    /// supports vector strategies.
    Quadratic { targets: Vec<Vec<f64>>, agg_weight: f64 },
}

/// Aggregation map applied to each strategy before summing.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PhiKind {
    Identity,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GameSpec {
    pub n: usize,
    pub dim: usize,
    pub boxes: Vec<StrategyBox>,
    pub cost: CostKind,
    pub phi: PhiKind,
}

/// Constants instantiating the monotonicity and Lipschitz assumptions.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GameConstants {
    /// Strong-monotonicity modulus of the pseudo-gradient.
    pub mu: f64,
    /// Lipschitz constant of the stacked gradient in the aggregate argument.
    pub l2: f64,
    /// Lipschitz constant of the aggregation map.
    pub l3: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum GameError {
    DimensionMismatch { expected: usize, got: usize },
    InvalidBox,
    InvalidParams,
    UnsupportedCost(String),
    OracleDiverged { residual: f64, iterations: u64 },
}

impl fmt::Display for GameError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GameError::DimensionMismatch { expected, got } => {
                write!(f, "dimension mismatch: expected {expected}, got {got}")
            }
            GameError::InvalidBox => write!(f, "strategy box needs finite lo <= hi"),
            GameError::InvalidParams => write!(f, "invalid vehicle parameters"),
            GameError::UnsupportedCost(s) => write!(f, "unsupported cost kind: {s}"),
            GameError::OracleDiverged { residual, iterations } => write!(
                f,
                "oracle did not converge after {iterations} iterations (residual {residual:e})"
            ),
        }
    }
}

impl core::error::Error for GameError {}

/// Cost of one vehicle at consumption `x` when the aggregate consumption
/// estimate is `sigma`. Total on reals, also outside the box (used for
/// diagnostics; projection is enforced only inside algorithm updates).
pub fn phev_cost(x: f64, sigma: f64, p: &PhevParams) -> f64 {
    let fuel = p.kappa * {
        let r = 1.0 - x / p.x_max;
        r * r
    } + p.d;
    x * (p.a * sigma + p.b) + p.p0 * fuel
}

/// Partial cost derivative of one vehicle in its own consumption, with the
/// aggregate's own-term dependence included:
/// `a·(σ + x) + b − (2·p0·κ/x_max)·(1 − x/x_max)`.
pub fn phev_gradient(x: f64, sigma: f64, p: &PhevParams) -> f64 {
    p.a * (sigma + x) + p.b - (2.0 * p.p0 * p.kappa / p.x_max) * (1.0 - x / p.x_max)
}

impl GameSpec {
    pub fn phev(params: Vec<PhevParams>) -> Result<Self, GameError> {
        let n = params.len();
        let mut boxes = Vec::with_capacity(n);
        for p in &params {
            p.validate()?;
            boxes.push(StrategyBox::scalar(p.x_min, p.x_max)?);
        }
        Ok(GameSpec {
            n,
            dim: 1,
            boxes,
            cost: CostKind::Phev(params),
            phi: PhiKind::Identity,
        })
    }

    pub fn quadratic(
        targets: Vec<Vec<f64>>,
        agg_weight: f64,
        boxes: Vec<StrategyBox>,
    ) -> Result<Self, GameError> {
        let n = targets.len();
        if boxes.len() != n {
            return Err(GameError::DimensionMismatch { expected: n, got: boxes.len() });
        }
        let dim = targets.first().map(|t| t.len()).unwrap_or(1);
        if targets.iter().any(|t| t.len() != dim) || boxes.iter().any(|b| b.dim() != dim) {
            return Err(GameError::InvalidBox);
        }
        if agg_weight < 0.0 {
            return Err(GameError::InvalidParams);
        }
        Ok(GameSpec {
            n,
            dim,
            boxes,
            cost: CostKind::Quadratic { targets, agg_weight },
            phi: PhiKind::Identity,
        })
    }

    /// Cost of player `i` given its strategy and an aggregate estimate.
    pub fn cost(&self, i: usize, x_i: &[f64], sigma: &[f64]) -> f64 {
        match &self.cost {
            CostKind::Phev(ps) => phev_cost(x_i[0], sigma[0], &ps[i]),
            CostKind::Quadratic { targets, agg_weight } => {
                let t = &targets[i];
                let mut sq = 0.0;
                let mut cross = 0.0;
                for d in 0..self.dim {
                    let e = x_i[d] - t[d];
                    sq += e * e;
                    cross += x_i[d] * sigma[d];
                }
                sq + agg_weight * cross
            }
        }
    }

    /// Pseudo-gradient block of player `i` at its strategy, holding the
    /// aggregate estimate `sigma` (the own-term chain contribution through
    /// the aggregate is included).
    pub fn gradient(&self, i: usize, x_i: &[f64], sigma: &[f64]) -> Vec<f64> {
        match &self.cost {
            CostKind::Phev(ps) => vec![phev_gradient(x_i[0], sigma[0], &ps[i])],
            CostKind::Quadratic { targets, agg_weight } => {
                let t = &targets[i];
                (0..self.dim)
                    .map(|d| 2.0 * (x_i[d] - t[d]) + agg_weight * (sigma[d] + x_i[d]))
                    .collect()
            }
        }
    }

    /// Full pseudo-gradient of the stacked profile using the true aggregate.
    pub fn full_gradient(&self, x: &[f64]) -> Vec<f64> {
        let sigma = self.aggregate_flat(x);
        let mut g = Vec::with_capacity(self.n * self.dim);
        for i in 0..self.n {
            let xi = &x[i * self.dim..(i + 1) * self.dim];
            g.extend(self.gradient(i, xi, &sigma));
        }
        g
    }

    fn aggregate_flat(&self, x: &[f64]) -> Vec<f64> {
        let mut s = vec![0.0; self.dim];
        for i in 0..self.n {
            for d in 0..self.dim {
                s[d] += x[i * self.dim + d];
            }
        }
        s
    }

    /// Apply the aggregation map of player `i` to a strategy.
    pub fn phi(&self, _i: usize, x_i: &[f64]) -> Vec<f64> {
        match self.phi {
            PhiKind::Identity => x_i.to_vec(),
        }
    }

    /// Project a stacked profile onto the product of boxes.
    pub fn project_all(&self, x: &[f64]) -> Vec<f64> {
        let mut out = Vec::with_capacity(x.len());
        for i in 0..self.n {
            let xi = &x[i * self.dim..(i + 1) * self.dim];
            for d in 0..self.dim {
                out.push(xi[d].clamp(self.boxes[i].lo[d], self.boxes[i].hi[d]));
            }
        }
        out
    }
}

/// Sum of the per-player aggregation maps over a strategy profile.
pub fn aggregate(spec: &GameSpec, x: &[Vec<f64>]) -> Vec<f64> {
    let mut s = vec![0.0; spec.dim];
    for (i, xi) in x.iter().enumerate() {
        let p = spec.phi(i, xi);
        for d in 0..spec.dim {
            s[d] += p[d];
        }
    }
    s
}

/// Euclidean projection onto a box: a componentwise clamp.
pub fn project_box(x: &[f64], b: &StrategyBox) -> Result<Vec<f64>, GameError> {
    if x.len() != b.dim() {
        return Err(GameError::DimensionMismatch { expected: b.dim(), got: x.len() });
    }
    Ok(x.iter()
        .zip(b.lo.iter().zip(&b.hi))
        .map(|(&v, (&l, &h))| v.clamp(l, h))
        .collect())
}

/// Instantiate the monotonicity and Lipschitz constants for a game.
///
/// For the vehicle benchmark the gradient map is affine with Jacobian
/// `a·11ᵀ + a·I + diag(2·p0·κ_i/x_max_i²)`; the modulus is `a` plus the
/// smallest diagonal curvature (the rank-one price term is positive
/// semidefinite), the aggregate Lipschitz constant is `a·√N` and the
/// aggregation map is the identity.
pub fn derive_game_constants(spec: &GameSpec) -> Result<GameConstants, GameError> {
    match &spec.cost {
        CostKind::Phev(ps) => {
            let min_curv = ps
                .iter()
                .map(|p| 2.0 * p.p0 * p.kappa / (p.x_max * p.x_max))
                .fold(f64::INFINITY, f64::min);
            let a = ps.first().ok_or(GameError::InvalidParams)?.a;
            Ok(GameConstants {
                mu: a + min_curv,
                l2: a * libm::sqrt(spec.n as f64),
                l3: 1.0,
            })
        }
        CostKind::Quadratic { agg_weight, .. } => Ok(GameConstants {
            mu: 2.0 + agg_weight,
            l2: agg_weight * libm::sqrt(spec.n as f64),
            l3: 1.0,
        }),
    }
}

/// Jacobian of the full pseudo-gradient by central differences.
pub fn numeric_jacobian(spec: &GameSpec, x: &[f64]) -> Matrix {
    let n = spec.n * spec.dim;
    let h = 1e-5;
    let mut j = Matrix::zeros(n, n);
    let mut xp = x.to_vec();
    for c in 0..n {
        let keep = xp[c];
        xp[c] = keep + h;
        let gp = spec.full_gradient(&xp);
        xp[c] = keep - h;
        let gm = spec.full_gradient(&xp);
        xp[c] = keep;
        for r in 0..n {
            j.set(r, c, (gp[r] - gm[r]) / (2.0 * h));
        }
    }
    j
}

/// Centralized equilibrium oracle: projected pseudo-gradient iteration with
/// the true aggregate, step `mu / L_G²` where `L_G` bounds the gradient map
/// numerically. Returns the stacked equilibrium profile.
pub fn solve_ne_oracle(spec: &GameSpec, tol: f64) -> Result<Vec<f64>, GameError> {
    let consts = derive_game_constants(spec)?;
    if consts.mu <= 0.0 {
        return Err(GameError::InvalidParams);
    }
    // midpoint of the feasible set; the gradient maps here are affine, so a
    // single probe point bounds the map globally
    let mid: Vec<f64> = (0..spec.n)
        .flat_map(|i| {
            (0..spec.dim).map(move |d| 0.5 * (self_lo(spec, i, d) + self_hi(spec, i, d)))
        })
        .collect();
    let l_g = spectral_norm(&numeric_jacobian(spec, &mid)).max(consts.mu);
    let alpha = consts.mu / (l_g * l_g);
    let mut x = mid;
    let cap: u64 = 5_000_000;
    let mut residual = f64::INFINITY;
    for it in 0..cap {
        let g = spec.full_gradient(&x);
        let stepped: Vec<f64> = x.iter().zip(&g).map(|(xi, gi)| xi - alpha * gi).collect();
        let next = spec.project_all(&stepped);
        residual = x
            .iter()
            .zip(&next)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>();
        residual = libm::sqrt(residual);
        x = next;
        if residual < tol {
            return Ok(x);
        }
        let _ = it;
    }
    Err(GameError::OracleDiverged { residual, iterations: cap })
}

fn self_lo(spec: &GameSpec, i: usize, d: usize) -> f64 {
    spec.boxes[i].lo[d]
}

fn self_hi(spec: &GameSpec, i: usize, d: usize) -> f64 {
    spec.boxes[i].hi[d]
}

/// The eight-vehicle benchmark parameters.
///
/// Players 3 and 4 share the same vehicle type; the capacity of player 4 is
/// the type value 34.2 (the equilibrium check below pins the published
/// profile, which forces equal capacities for the pair).
pub fn phev8_params() -> Vec<PhevParams> {
    let row = |x_max: f64, kappa: f64, d: f64| PhevParams {
        x_min: 0.0,
        x_max,
        p0: 5.6,
        a: 0.004,
        b: 0.1,
        kappa,
        d,
    };
    vec![
        row(27.5, 4.6, 0.7),
        row(27.5, 4.6, 0.7),
        row(34.2, 3.7, 0.8),
        row(34.2, 3.7, 0.8),
        row(40.6, 3.4, 0.6),
        row(40.6, 3.4, 0.6),
        row(28.8, 4.0, 0.7),
        row(35.7, 3.9, 0.8),
    ]
}
