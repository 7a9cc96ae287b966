//! Masked sinusoidal virtual-node dynamics.
//!
//! Each virtual node evolves as
//!
//! ```text
//! s_i(n) = sin(alpha * s_j(n-1) + beta * drive_i(n) + phi)
//! ```
//!
//! where `j = i` for the self-coupled delay line and `j = i - 1` (wrapping
//! inside the node block) when neighbor coupling is enabled. `drive_i(n)` is
//! the held input multiplied by the node's mask coefficient.

use std::ops::Range;

use ndarray::{Array2, ArrayView1, ArrayView2, Axis};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::exec::{self, Execution};

/// Rows narrower than this are updated sequentially even under a parallel
/// policy; the per-row fork/join cost dominates below it.
pub const PARALLEL_MIN_NODES: usize = 2048;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ReservoirError {
    #[error("non-finite {what}")]
    NonFinite { what: &'static str },
    #[error("non-finite drive at step {step}, node {node}")]
    NonFiniteDrive { step: usize, node: usize },
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("invalid argument: {0}")]
    Argument(String),
}

pub type Result<T> = std::result::Result<T, ReservoirError>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Nonlinearity {
    #[default]
    Sine,
}

impl Nonlinearity {
    #[inline]
    pub fn apply(self, x: f64) -> f64 {
        match self {
            Nonlinearity::Sine => x.sin(),
        }
    }
}

/// Which previous-step state feeds a node.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Coupling {
    /// Node `i` reads its own previous state.
    #[default]
    #[serde(rename = "self")]
    SelfOnly,
    /// Node `i` reads node `i - 1`'s previous state; the first node of a
    /// block reads the last node of the same block.
    Neighbor,
}

/// Gains and bias of the node nonlinearity.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReservoirParams {
    /// Feedback gain on the delayed state.
    pub alpha: f64,
    /// Input gain on the masked drive.
    pub beta: f64,
    /// Bias in radians.
    pub phi: f64,
    #[serde(default)]
    pub nonlinearity: Nonlinearity,
    #[serde(default)]
    pub coupling: Coupling,
}

impl ReservoirParams {
    pub fn new(alpha: f64, beta: f64, phi: f64) -> Self {
        Self {
            alpha,
            beta,
            phi,
            nonlinearity: Nonlinearity::Sine,
            coupling: Coupling::SelfOnly,
        }
    }

    pub fn with_coupling(mut self, coupling: Coupling) -> Self {
        self.coupling = coupling;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !self.alpha.is_finite() {
            return Err(ReservoirError::NonFinite { what: "alpha" });
        }
        if !self.beta.is_finite() {
            return Err(ReservoirError::NonFinite { what: "beta" });
        }
        if !self.phi.is_finite() {
            return Err(ReservoirError::NonFinite { what: "phi" });
        }
        Ok(())
    }

    #[inline]
    fn step(&self, prev: f64, drive: f64) -> f64 {
        self.nonlinearity
            .apply(self.alpha * prev + self.beta * drive + self.phi)
    }
}

/// One node update.
pub fn node_update(prev_state: f64, drive: f64, params: &ReservoirParams) -> Result<f64> {
    params.validate()?;
    if !prev_state.is_finite() {
        return Err(ReservoirError::NonFinite { what: "previous state" });
    }
    if !drive.is_finite() {
        return Err(ReservoirError::NonFinite { what: "drive" });
    }
    Ok(params.step(prev_state, drive))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MaskMode {
    /// Entries in {-1, +1}.
    #[default]
    Binary,
    /// Entries uniform on [-1, 1].
    Continuous,
}

/// Per-node input coefficients, `node_count x input_dim`.
///
/// The same coefficients apply at every macro step.
#[derive(Debug, Clone, PartialEq)]
pub struct Mask {
    values: Array2<f64>,
    mode: MaskMode,
}

impl Mask {
    pub fn new(values: Array2<f64>, mode: MaskMode) -> Result<Self> {
        if values.nrows() == 0 || values.ncols() == 0 {
            return Err(ReservoirError::Argument("mask must be non-empty".into()));
        }
        let ok = match mode {
            MaskMode::Binary => values.iter().all(|&v| v == 1.0 || v == -1.0),
            MaskMode::Continuous => values.iter().all(|&v| (-1.0..=1.0).contains(&v)),
        };
        if !ok {
            return Err(ReservoirError::Argument(format!("mask entries violate {mode:?} mode")));
        }
        Ok(Self { values, mode })
    }

    /// Single-input mask from per-node coefficients.
    pub fn from_column(values: &[f64], mode: MaskMode) -> Result<Self> {
        let col = Array2::from_shape_vec((values.len(), 1), values.to_vec())
            .map_err(|e| ReservoirError::Shape(e.to_string()))?;
        Self::new(col, mode)
    }

    pub fn node_count(&self) -> usize {
        self.values.nrows()
    }

    pub fn input_dim(&self) -> usize {
        self.values.ncols()
    }

    pub fn mode(&self) -> MaskMode {
        self.mode
    }

    pub fn values(&self) -> ArrayView2<'_, f64> {
        self.values.view()
    }
}

/// Draws a deterministic mask for `seed`.
pub fn make_mask(seed: u64, node_count: usize, input_dim: usize, mode: MaskMode) -> Result<Mask> {
    if node_count == 0 {
        return Err(ReservoirError::Argument("node_count must be >= 1".into()));
    }
    if input_dim == 0 {
        return Err(ReservoirError::Argument("input_dim must be >= 1".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let values = Array2::from_shape_simple_fn((node_count, input_dim), || match mode {
        MaskMode::Binary => {
            if rng.random_bool(0.5) {
                1.0
            } else {
                -1.0
            }
        }
        MaskMode::Continuous => rng.random_range(-1.0..=1.0),
    });
    Mask::new(values, mode)
}

/// Turns inputs (`steps x input_dim`) into per-node drives (`steps x nodes`).
///
/// `drive_i(n) = sum_j m_ij * p_j(n)`; for scalar inputs this is `m_i * p(n)`.
pub fn apply_mask(inputs: ArrayView2<'_, f64>, mask: &Mask) -> Result<Array2<f64>> {
    if inputs.ncols() != mask.input_dim() {
        return Err(ReservoirError::Shape(format!(
            "input dimension {} does not match mask width {}",
            inputs.ncols(),
            mask.input_dim()
        )));
    }
    Ok(inputs.dot(&mask.values.t()))
}

/// [`apply_mask`] for a scalar input sequence.
pub fn apply_mask_scalar(inputs: &[f64], mask: &Mask) -> Result<Array2<f64>> {
    let view = ArrayView2::from_shape((inputs.len(), 1), inputs).map_err(|e| ReservoirError::Shape(e.to_string()))?;
    apply_mask(view, mask)
}

/// Reservoir states, `macro_steps x node_count`. Entries lie in [-1, 1].
#[derive(Debug, Clone, PartialEq)]
pub struct StateMatrix(Array2<f64>);

impl StateMatrix {
    pub fn from_array(states: Array2<f64>) -> Result<Self> {
        if states.ncols() == 0 {
            return Err(ReservoirError::Shape("state matrix needs >= 1 node".into()));
        }
        if let Some(v) = states.iter().find(|v| !(-1.0..=1.0).contains(*v)) {
            return Err(ReservoirError::Argument(format!("state {v} outside [-1, 1]")));
        }
        Ok(Self(states))
    }

    pub fn node_count(&self) -> usize {
        self.0.ncols()
    }

    pub fn macro_steps(&self) -> usize {
        self.0.nrows()
    }

    pub fn view(&self) -> ArrayView2<'_, f64> {
        self.0.view()
    }

    pub fn row(&self, step: usize) -> ArrayView1<'_, f64> {
        self.0.row(step)
    }

    pub fn into_inner(self) -> Array2<f64> {
        self.0
    }

    /// Copy of the given columns, in order.
    pub fn select_columns(&self, columns: &[usize]) -> StateMatrix {
        StateMatrix(self.0.select(Axis(1), columns))
    }

    /// Copy of a row range.
    pub fn slice_rows(&self, rows: Range<usize>) -> StateMatrix {
        StateMatrix(self.0.slice(ndarray::s![rows, ..]).to_owned())
    }
}

/// Previous-step source column for every node of a slot timeline.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Topology {
    predecessor: Vec<usize>,
}

impl Topology {
    /// Every node in one block.
    pub fn uniform(node_count: usize, coupling: Coupling) -> Self {
        Self::from_blocks(node_count, std::slice::from_ref(&(0..node_count)), coupling)
    }

    /// Neighbor coupling wraps inside each block; columns outside every
    /// block (guard gaps) are self-coupled.
    pub fn from_blocks(width: usize, blocks: &[Range<usize>], coupling: Coupling) -> Self {
        let mut predecessor: Vec<usize> = (0..width).collect();
        if coupling == Coupling::Neighbor {
            for block in blocks.iter().filter(|b| !b.is_empty()) {
                for i in block.clone() {
                    predecessor[i] = if i == block.start { block.end - 1 } else { i - 1 };
                }
            }
        }
        Self { predecessor }
    }

    pub fn width(&self) -> usize {
        self.predecessor.len()
    }

    pub fn predecessor(&self, node: usize) -> usize {
        self.predecessor[node]
    }
}

/// Iterates the node update over every macro step.
///
/// Row `n` is computed from row `n - 1`; row `-1` is `initial_state`, or all
/// zeros when `None`.
pub fn run_reservoir(
    drives: ArrayView2<'_, f64>,
    params: &ReservoirParams,
    initial_state: Option<&[f64]>,
) -> Result<StateMatrix> {
    let topology = Topology::uniform(drives.ncols(), params.coupling);
    let exec = if drives.ncols() >= PARALLEL_MIN_NODES {
        Execution::Parallel
    } else {
        Execution::Sequential
    };
    run_with_topology(drives, params, initial_state, &topology, exec)
}

/// [`run_reservoir`] with an explicit node topology and row-update policy.
pub fn run_with_topology(
    drives: ArrayView2<'_, f64>,
    params: &ReservoirParams,
    initial_state: Option<&[f64]>,
    topology: &Topology,
    exec: Execution,
) -> Result<StateMatrix> {
    params.validate()?;
    let (steps, nodes) = drives.dim();
    if nodes == 0 {
        return Err(ReservoirError::Shape("drives need >= 1 node column".into()));
    }
    if topology.width() != nodes {
        return Err(ReservoirError::Shape(format!(
            "topology width {} does not match {nodes} drive columns",
            topology.width()
        )));
    }
    let mut prev = match initial_state {
        Some(init) if init.len() != nodes => {
            return Err(ReservoirError::Shape(format!(
                "initial state has {} entries, expected {nodes}",
                init.len()
            )))
        }
        Some(init) => {
            if init.iter().any(|v| !v.is_finite()) {
                return Err(ReservoirError::NonFinite { what: "initial state" });
            }
            init.to_vec()
        }
        None => vec![0.0; nodes],
    };

    let mut states = Array2::<f64>::zeros((steps, nodes));
    for (step, (drive_row, mut out_row)) in drives.rows().into_iter().zip(states.rows_mut()).enumerate() {
        if let Some(node) = drive_row.iter().position(|d| !d.is_finite()) {
            return Err(ReservoirError::NonFiniteDrive { step, node });
        }
        let out = out_row.as_slice_mut().expect("freshly allocated rows are contiguous");
        let prev_ref = &prev;
        exec::fill_indexed(out, exec, |i| {
            params.step(prev_ref[topology.predecessor[i]], drive_row[i])
        });
        prev.copy_from_slice(out);
    }
    Ok(StateMatrix(states))
}
