//! Hybrid opinion dynamics: consensus flow between campaigns and the
//! campaign jump map, plus the per-node influence power derived from them.

use std::fmt;

use ndarray::{Array1, Array2, ArrayView1};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::expm::matrix_exponential;
use crate::graph::Laplacian;

/// Clip margin for opinions that drift onto the boundary in floating point.
pub const OPINION_EPS: f64 = 1e-12;
/// Negative propagator entries up to this magnitude are rounding artifacts.
pub const PROPAGATOR_CLAMP: f64 = 1e-12;
const EXPM_TOLERANCE: f64 = 1e-14;

/// Network state with every component strictly inside (0, 1).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct OpinionVector(Vec<f64>);

impl OpinionVector {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::Parameter("opinion vector is empty".into()));
        }
        if let Some((n, v)) = values
            .iter()
            .enumerate()
            .find(|(_, &v)| !(v > 0.0 && v < 1.0))
        {
            return Err(Error::Parameter(format!(
                "opinion of node {} is {}, outside (0, 1)",
                n + 1,
                v
            )));
        }
        Ok(OpinionVector(values))
    }

    /// Constant state `gamma * 1`.
    pub fn uniform(n: usize, gamma: f64) -> Result<Self> {
        Self::new(vec![gamma; n])
    }

    /// Clips into `[OPINION_EPS, 1 - OPINION_EPS]`; used only on model outputs
    /// that are inside (0, 1) analytically.
    fn clipped(values: impl IntoIterator<Item = f64>) -> Self {
        OpinionVector(
            values
                .into_iter()
                .map(|v| v.clamp(OPINION_EPS, 1.0 - OPINION_EPS))
                .collect(),
        )
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn view(&self) -> ArrayView1<'_, f64> {
        ArrayView1::from(&self.0[..])
    }

    /// `max_n |x_n - target|`.
    pub fn sup_distance(&self, target: f64) -> f64 {
        self.0.iter().map(|v| (v - target).abs()).fold(0.0, f64::max)
    }

    /// `sqrt(mean_n (x_n - target)^2)`.
    pub fn rms_distance(&self, target: f64) -> f64 {
        let ss: f64 = self.0.iter().map(|v| (v - target).powi(2)).sum();
        (ss / self.0.len() as f64).sqrt()
    }

    /// Largest minus smallest opinion.
    pub fn spread(&self) -> f64 {
        let max = self.0.iter().cloned().fold(f64::MIN, f64::max);
        let min = self.0.iter().cloned().fold(f64::MAX, f64::min);
        max - min
    }
}

impl TryFrom<Vec<f64>> for OpinionVector {
    type Error = Error;
    fn try_from(v: Vec<f64>) -> Result<Self> {
        OpinionVector::new(v)
    }
}

impl From<OpinionVector> for Vec<f64> {
    fn from(v: OpinionVector) -> Self {
        v.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Player {
    One,
    Two,
}

impl Player {
    pub fn index(self) -> u8 {
        match self {
            Player::One => 1,
            Player::Two => 2,
        }
    }

    pub fn other(self) -> Player {
        match self {
            Player::One => Player::Two,
            Player::Two => Player::One,
        }
    }
}

impl fmt::Display for Player {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.index())
    }
}

/// One marketer's per-node spend for a campaign.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ActionVector {
    pub owner: Player,
    spends: Vec<f64>,
}

impl ActionVector {
    pub fn new(owner: Player, spends: Vec<f64>) -> Result<Self> {
        if let Some((n, v)) = spends
            .iter()
            .enumerate()
            .find(|(_, &v)| !(v.is_finite() && v >= 0.0))
        {
            return Err(Error::Parameter(format!(
                "player {owner} spend on node {} is {v}; spends must be finite and non-negative",
                n + 1
            )));
        }
        Ok(ActionVector { owner, spends })
    }

    pub fn zeros(owner: Player, n: usize) -> Self {
        ActionVector {
            owner,
            spends: vec![0.0; n],
        }
    }

    pub fn spends(&self) -> &[f64] {
        &self.spends
    }

    pub fn len(&self) -> usize {
        self.spends.len()
    }

    pub fn is_empty(&self) -> bool {
        self.spends.is_empty()
    }

    pub fn total(&self) -> f64 {
        self.spends.iter().sum()
    }

    pub fn is_zero(&self) -> bool {
        self.spends.iter().all(|&v| v == 0.0)
    }
}

/// How the stage payoff weights each node's opinion.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RhoMode {
    /// `rho^T = 1^T exp(-L T)`: total opinion at the end of the campaign.
    #[default]
    Final,
    /// `rho^T = 1^T int_0^T exp(-L s) ds`: opinion integrated over the campaign.
    Integral,
}

impl std::str::FromStr for RhoMode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "final" | "final-opinion" => Ok(RhoMode::Final),
            "integral" => Ok(RhoMode::Integral),
            other => Err(Error::Parameter(format!(
                "unknown rho mode {other:?}, expected final or integral"
            ))),
        }
    }
}

/// Per-node influence power `rho` for a campaign of a given duration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InfluencePower {
    pub values: Vec<f64>,
    pub duration: f64,
    pub mode: RhoMode,
}

impl InfluencePower {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn total(&self) -> f64 {
        self.values.iter().sum()
    }

    pub fn max(&self) -> f64 {
        self.values.iter().cloned().fold(f64::MIN, f64::max)
    }
}

/// `exp(-L t)` with rounding-level negative entries clamped to zero.
#[derive(Debug, Clone)]
pub struct Propagator {
    matrix: Array2<f64>,
    duration: f64,
}

impl Propagator {
    pub fn new(laplacian: &Laplacian, duration: f64) -> Result<Self> {
        if !(duration.is_finite() && duration >= 0.0) {
            return Err(Error::Parameter(format!(
                "flow duration must be finite and non-negative, got {duration}"
            )));
        }
        let n = laplacian.n_nodes();
        if duration == 0.0 {
            return Ok(Propagator {
                matrix: Array2::eye(n),
                duration,
            });
        }
        let mut matrix = matrix_exponential(&(laplacian.matrix() * -duration), EXPM_TOLERANCE)?;
        for ((i, j), v) in matrix.indexed_iter_mut() {
            if *v < 0.0 {
                if *v < -PROPAGATOR_CLAMP {
                    return Err(Error::Numerical(format!(
                        "exp(-L t) entry ({}, {}) = {:e} is negative beyond rounding",
                        i + 1,
                        j + 1,
                        v
                    )));
                }
                *v = 0.0;
            }
        }
        Ok(Propagator { matrix, duration })
    }

    pub fn matrix(&self) -> &Array2<f64> {
        &self.matrix
    }

    pub fn duration(&self) -> f64 {
        self.duration
    }

    pub fn apply(&self, x: &OpinionVector) -> Result<OpinionVector> {
        check_len(self.matrix.nrows(), x.len())?;
        if self.duration == 0.0 {
            return Ok(x.clone());
        }
        Ok(OpinionVector::clipped(self.matrix.dot(&x.view())))
    }

    /// Column sums, i.e. `1^T exp(-L t)`.
    pub fn column_sums(&self) -> Vec<f64> {
        self.matrix.sum_axis(ndarray::Axis(0)).to_vec()
    }
}

fn check_len(expected: usize, actual: usize) -> Result<()> {
    if expected != actual {
        return Err(Error::Dimension { expected, actual });
    }
    Ok(())
}

/// State after flowing `duration` time units along `dx/dt = -L x`.
pub fn flow(x: &OpinionVector, laplacian: &Laplacian, duration: f64) -> Result<OpinionVector> {
    check_len(laplacian.n_nodes(), x.len())?;
    Propagator::new(laplacian, duration)?.apply(x)
}

/// Campaign jump: `x_n+ = (x_n + a1_n) / (1 + a1_n + a2_n)` for every node.
pub fn jump(x: &OpinionVector, a1: &ActionVector, a2: &ActionVector) -> Result<OpinionVector> {
    check_len(x.len(), a1.len())?;
    check_len(x.len(), a2.len())?;
    if a1.owner != Player::One || a2.owner != Player::Two {
        return Err(Error::Parameter(
            "jump expects player one's actions first and player two's second".into(),
        ));
    }
    Ok(OpinionVector::clipped(
        x.as_slice()
            .iter()
            .zip(a1.spends())
            .zip(a2.spends())
            .map(|((&x, &p), &q)| jump_node(x, p, q)),
    ))
}

/// Scalar jump map for a single node.
pub fn jump_node(x: f64, a1: f64, a2: f64) -> f64 {
    (x + a1) / (1.0 + a1 + a2)
}

/// Influence power of every node for a campaign lasting `duration`.
pub fn influence_power(laplacian: &Laplacian, duration: f64, mode: RhoMode) -> Result<InfluencePower> {
    if !(duration.is_finite() && duration > 0.0) {
        return Err(Error::Parameter(format!(
            "campaign duration must be positive, got {duration}"
        )));
    }
    let values = match mode {
        RhoMode::Final => Propagator::new(laplacian, duration)?.column_sums(),
        RhoMode::Integral => integral_column_sums(laplacian, duration)?,
    };
    Ok(InfluencePower {
        values,
        duration,
        mode,
    })
}

const SIMPSON_START_PANELS: usize = 16;
const SIMPSON_MAX_PANELS: usize = 1 << 16;
const SIMPSON_AGREEMENT: f64 = 1e-8;

/// `1^T int_0^T exp(-L s) ds` by composite Simpson, doubling the panel count
/// until two successive refinements agree.
fn integral_column_sums(laplacian: &Laplacian, duration: f64) -> Result<Vec<f64>> {
    let mut panels = SIMPSON_START_PANELS;
    let mut previous = simpson(laplacian, duration, panels)?;
    while panels < SIMPSON_MAX_PANELS {
        panels *= 2;
        let next = simpson(laplacian, duration, panels)?;
        let scale = next.iter().map(|v| v.abs()).fold(1.0, f64::max);
        let diff = next
            .iter()
            .zip(&previous)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        if diff <= SIMPSON_AGREEMENT * scale {
            return Ok(next.to_vec());
        }
        previous = next;
    }
    Err(Error::Numerical(format!(
        "integral influence power did not settle within {SIMPSON_MAX_PANELS} panels"
    )))
}

fn simpson(laplacian: &Laplacian, duration: f64, panels: usize) -> Result<Array1<f64>> {
    let h = duration / panels as f64;
    let step = Propagator::new(laplacian, h)?;
    let step_t = step.matrix().t();
    // Row vector 1^T exp(-L s_j), advanced one panel at a time.
    let mut row = Array1::<f64>::ones(laplacian.n_nodes());
    let mut acc = row.clone();
    for j in 1..=panels {
        row = step_t.dot(&row);
        let w = if j == panels {
            1.0
        } else if j % 2 == 1 {
            4.0
        } else {
            2.0
        };
        acc.scaled_add(w, &row);
    }
    Ok(acc * (h / 3.0))
}
