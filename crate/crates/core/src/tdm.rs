//! Time-division multiplexed slot layout for k tasks sharing one delay loop.
//!
//! One delay period holds the tasks' virtual-node blocks in input order,
//! separated by two guard slots:
//!
//! ```text
//! [task 1: N_1 slots][G G][task 2: N_2 slots][G G] ... [task k: N_k slots]
//! ```
//!
//! The layout must fit in `floor(tau / h)` slots, i.e.
//! `sum(N_p) + 2(k - 1) <= floor(tau / h)`.

use std::collections::{BTreeMap, HashSet};
use std::fmt;
use std::ops::Range;
use std::str::FromStr;

use ndarray::{s, Array2, ArrayView2};
use num_rational::Ratio;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::exec::Execution;
use crate::reservoir::{self, ReservoirError, ReservoirParams, StateMatrix, Topology};

/// Guard slots between consecutive task blocks.
pub const GAP_SLOTS: usize = 2;

// Slot counts derived from durations are floored after adding this, so that
// tau = 20h computed in floating point still yields 20 slots.
const SLOT_EPS: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TdmError {
    #[error("capacity exceeded: layout needs {needed} slots but the delay holds {available} (deficit {deficit})")]
    Capacity {
        needed: usize,
        available: usize,
        deficit: usize,
    },
    #[error("invalid argument: {0}")]
    Argument(String),
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("no drive sequence for scheduled task `{0}`")]
    MissingTask(TaskId),
    #[error(transparent)]
    Reservoir(#[from] ReservoirError),
}

pub type Result<T> = std::result::Result<T, TdmError>;

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct TaskId(String);

impl TaskId {
    pub fn new(id: impl Into<String>) -> Self {
        Self(id.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for TaskId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for TaskId {
    fn from(s: &str) -> Self {
        Self(s.to_owned())
    }
}

/// Fraction of the macro-step duration assigned to one task, e.g. `5/8`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct Share(Ratio<u64>);

impl Share {
    pub fn new(numer: u64, denom: u64) -> Result<Self> {
        if denom == 0 {
            return Err(TdmError::Argument("share denominator is zero".into()));
        }
        let r = Ratio::new(numer, denom);
        if r == Ratio::from_integer(0) || r > Ratio::from_integer(1) {
            return Err(TdmError::Argument(format!("share {r} outside (0, 1]")));
        }
        Ok(Self(r))
    }

    pub fn one() -> Self {
        Self(Ratio::from_integer(1))
    }

    pub fn ratio(self) -> Ratio<u64> {
        self.0
    }

    pub fn as_f64(self) -> f64 {
        *self.0.numer() as f64 / *self.0.denom() as f64
    }

    /// `share * total` when it is a whole number.
    pub fn whole_part_of(self, total: u64) -> Option<u64> {
        let v = self.0 * Ratio::from_integer(total);
        v.is_integer().then(|| v.to_integer())
    }
}

impl fmt::Display for Share {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl FromStr for Share {
    type Err = TdmError;

    fn from_str(s: &str) -> Result<Self> {
        let r: Ratio<u64> = s
            .trim()
            .parse()
            .map_err(|_| TdmError::Argument(format!("cannot parse share `{s}`")))?;
        Self::new(*r.numer(), *r.denom())
    }
}

impl TryFrom<String> for Share {
    type Error = TdmError;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<Share> for String {
    fn from(s: Share) -> String {
        s.to_string()
    }
}

/// One task's claim on the delay period.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TaskSlotSpec {
    pub task_id: TaskId,
    pub share: Share,
    pub node_count: usize,
}

impl TaskSlotSpec {
    /// Derives `node_count = share * t_sample / h`, which must be a positive
    /// whole number.
    pub fn from_share(task_id: TaskId, share: Share, t_sample: f64, h: f64) -> Result<Self> {
        if !(h > 0.0 && t_sample > 0.0) {
            return Err(TdmError::Argument("t_sample and h must be positive".into()));
        }
        let exact = share.as_f64() * t_sample / h;
        let rounded = exact.round();
        if (exact - rounded).abs() > SLOT_EPS * exact.max(1.0) || rounded < 1.0 {
            return Err(TdmError::Argument(format!(
                "task `{task_id}`: share {share} of T_sample gives {exact} nodes, not a positive integer"
            )));
        }
        Ok(Self {
            task_id,
            share,
            node_count: rounded as usize,
        })
    }

    /// Pairs an explicit node count with a share, e.g. when a phase keeps the
    /// node count but re-times the slots.
    pub fn with_nodes(task_id: TaskId, share: Share, node_count: usize) -> Result<Self> {
        if node_count == 0 {
            return Err(TdmError::Argument(format!("task `{task_id}` has zero nodes")));
        }
        Ok(Self {
            task_id,
            share,
            node_count,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Slot {
    /// Virtual node `node` of the task at position `task` in the schedule.
    Task {
        task: usize,
        node: usize,
    },
    Gap,
}

/// Slot layout of one delay period.
#[derive(Debug, Clone, PartialEq)]
pub struct TdmSchedule {
    tasks: Vec<TaskSlotSpec>,
    slots: Vec<Slot>,
    blocks: Vec<Range<usize>>,
    h: f64,
    tau: f64,
    t_sample: f64,
}

fn slot_capacity(tau: f64, h: f64) -> Result<usize> {
    if !(tau > 0.0 && h > 0.0 && tau.is_finite() && h.is_finite()) {
        return Err(TdmError::Argument("tau and h must be positive and finite".into()));
    }
    Ok((tau / h + SLOT_EPS).floor() as usize)
}

/// Largest per-task node count when k equal blocks share the delay:
/// `floor((tau/h - 2(k-1)) / k)`.
pub fn max_nodes(tau: f64, h: f64, k: usize) -> Result<usize> {
    if k == 0 {
        return Err(TdmError::Argument("task count must be >= 1".into()));
    }
    let available = slot_capacity(tau, h)?;
    let gaps = GAP_SLOTS * (k - 1);
    let capacity_error = TdmError::Capacity {
        needed: gaps + k,
        available,
        deficit: (gaps + k).saturating_sub(available),
    };
    if available <= gaps {
        return Err(capacity_error);
    }
    match (available - gaps) / k {
        0 => Err(capacity_error),
        n => Ok(n),
    }
}

/// Lays out the tasks' blocks in input order with guard gaps between them.
pub fn build_schedule(tasks: &[TaskSlotSpec], tau: f64, h: f64) -> Result<TdmSchedule> {
    if tasks.is_empty() {
        return Err(TdmError::Argument("schedule needs at least one task".into()));
    }
    let mut seen = HashSet::new();
    for t in tasks {
        if t.node_count == 0 {
            return Err(TdmError::Argument(format!("task `{}` has zero nodes", t.task_id)));
        }
        if !seen.insert(&t.task_id) {
            return Err(TdmError::Argument(format!("duplicate task id `{}`", t.task_id)));
        }
    }
    let total_share: Ratio<u64> = tasks.iter().map(|t| t.share.ratio()).sum();
    if total_share > Ratio::from_integer(1) {
        return Err(TdmError::Argument(format!("task shares sum to {total_share} > 1")));
    }

    let available = slot_capacity(tau, h)?;
    let needed = tasks.iter().map(|t| t.node_count).sum::<usize>() + GAP_SLOTS * (tasks.len() - 1);
    if needed > available {
        return Err(TdmError::Capacity {
            needed,
            available,
            deficit: needed - available,
        });
    }

    let mut slots = Vec::with_capacity(needed);
    let mut blocks = Vec::with_capacity(tasks.len());
    for (task, spec) in tasks.iter().enumerate() {
        if task > 0 {
            slots.extend(std::iter::repeat_n(Slot::Gap, GAP_SLOTS));
        }
        let start = slots.len();
        slots.extend((0..spec.node_count).map(|node| Slot::Task { task, node }));
        blocks.push(start..slots.len());
    }
    let t_sample = tasks
        .iter()
        .map(|t| h * t.node_count as f64 / t.share.as_f64())
        .fold(0.0, f64::max);

    Ok(TdmSchedule {
        tasks: tasks.to_vec(),
        slots,
        blocks,
        h,
        tau,
        t_sample,
    })
}

impl TdmSchedule {
    pub fn tasks(&self) -> &[TaskSlotSpec] {
        &self.tasks
    }

    pub fn slots(&self) -> &[Slot] {
        &self.slots
    }

    /// Number of occupied slots (task nodes plus gaps) per period.
    pub fn period_len(&self) -> usize {
        self.slots.len()
    }

    /// Task count `k`.
    pub fn k(&self) -> usize {
        self.tasks.len()
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    pub fn t_sample(&self) -> f64 {
        self.t_sample
    }

    /// Slot range holding the task's nodes.
    pub fn block(&self, task: usize) -> Range<usize> {
        self.blocks[task].clone()
    }

    pub fn blocks(&self) -> &[Range<usize>] {
        &self.blocks
    }

    pub fn task_index(&self, id: &TaskId) -> Option<usize> {
        self.tasks.iter().position(|t| &t.task_id == id)
    }

    /// Duration each of the task's node slots lasts under its share.
    pub fn slot_duration(&self, task: usize) -> f64 {
        let t = &self.tasks[task];
        t.share.as_f64() * self.t_sample / t.node_count as f64
    }

    /// Same layout with new per-task shares; node counts are unchanged.
    pub fn retimed(&self, shares: &[Share]) -> Result<TdmSchedule> {
        if shares.len() != self.tasks.len() {
            return Err(TdmError::Argument(format!(
                "{} shares for {} tasks",
                shares.len(),
                self.tasks.len()
            )));
        }
        let total: Ratio<u64> = shares.iter().map(|s| s.ratio()).sum();
        if total > Ratio::from_integer(1) {
            return Err(TdmError::Argument(format!("task shares sum to {total} > 1")));
        }
        let mut out = self.clone();
        for (t, &s) in out.tasks.iter_mut().zip(shares) {
            t.share = s;
        }
        Ok(out)
    }

    /// Node topology for the whole slot timeline; neighbor coupling wraps
    /// inside each task block and never crosses a gap.
    pub fn topology(&self, params: &ReservoirParams) -> Topology {
        Topology::from_blocks(self.slots.len(), &self.blocks, params.coupling)
    }

    /// One line per slot: `slot_index<TAB>task_id|GAP<TAB>node_index`.
    /// Gap slots print `-` as node index.
    pub fn describe(&self) -> String {
        let mut out = String::new();
        for (i, slot) in self.slots.iter().enumerate() {
            match slot {
                Slot::Task { task, node } => out.push_str(&format!("{i}\t{}\t{node}\n", self.tasks[*task].task_id)),
                Slot::Gap => out.push_str(&format!("{i}\tGAP\t-\n")),
            }
        }
        out
    }
}

/// Zero-order hold of a time-stamped series onto a grid of spacing `t_s`
/// starting at the first sample time: `p(n)` is the latest sample at or
/// before `t_0 + n t_s`.
pub fn sample_and_hold(series: &[(f64, f64)], t_s: f64) -> Result<Vec<f64>> {
    let Some(&(t0, _)) = series.first() else {
        return Err(TdmError::Argument("empty series".into()));
    };
    if !(t_s > 0.0 && t_s.is_finite()) {
        return Err(TdmError::Argument("hold duration must be positive".into()));
    }
    if series.windows(2).any(|w| w[1].0 < w[0].0) {
        return Err(TdmError::Argument("series is not time-sorted".into()));
    }
    let t_last = series[series.len() - 1].0;
    let steps = ((t_last - t0) / t_s + SLOT_EPS).floor() as usize + 1;
    let mut out = Vec::with_capacity(steps);
    let mut idx = 0;
    for n in 0..steps {
        let t = t0 + n as f64 * t_s;
        while idx + 1 < series.len() && series[idx + 1].0 <= t + SLOT_EPS * t_s {
            idx += 1;
        }
        out.push(series[idx].1);
    }
    Ok(out)
}

/// How a task whose drive sequence is shorter than the longest one is
/// extended.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PadPolicy {
    #[default]
    Zero,
    HoldLast,
}

/// Slot stream for all macro steps plus each task's unpadded length.
#[derive(Debug, Clone, PartialEq)]
pub struct Interleaved {
    pub stream: Array2<f64>,
    /// Original step count per task, in schedule order.
    pub lengths: Vec<usize>,
}

impl Interleaved {
    /// `true` for steps carrying the task's real input, `false` for padding.
    pub fn valid_steps(&self, task: usize) -> Vec<bool> {
        (0..self.stream.nrows()).map(|n| n < self.lengths[task]).collect()
    }
}

/// Places every task's per-node drives into its slots; gap slots get 0.
pub fn interleave(
    per_task: &BTreeMap<TaskId, Array2<f64>>,
    schedule: &TdmSchedule,
    pad: PadPolicy,
) -> Result<Interleaved> {
    let mut drives = Vec::with_capacity(schedule.k());
    for spec in schedule.tasks() {
        let d = per_task
            .get(&spec.task_id)
            .ok_or_else(|| TdmError::MissingTask(spec.task_id.clone()))?;
        if d.ncols() != spec.node_count {
            return Err(TdmError::Shape(format!(
                "task `{}` drives have {} columns, schedule has {} nodes",
                spec.task_id,
                d.ncols(),
                spec.node_count
            )));
        }
        drives.push(d);
    }
    let steps = drives.iter().map(|d| d.nrows()).max().unwrap_or(0);
    let mut stream = Array2::<f64>::zeros((steps, schedule.period_len()));
    for (task, d) in drives.iter().enumerate() {
        let block = schedule.block(task);
        let len = d.nrows();
        stream.slice_mut(s![..len, block.clone()]).assign(d);
        if pad == PadPolicy::HoldLast && len > 0 && len < steps {
            let last = d.row(len - 1);
            for n in len..steps {
                stream.slice_mut(s![n, block.clone()]).assign(&last);
            }
        }
    }
    Ok(Interleaved {
        stream,
        lengths: drives.iter().map(|d| d.nrows()).collect(),
    })
}

/// Splits a slot-indexed matrix into per-task column blocks; gap columns are
/// dropped.
pub fn deinterleave_array(
    global: ArrayView2<'_, f64>,
    schedule: &TdmSchedule,
) -> Result<BTreeMap<TaskId, Array2<f64>>> {
    if global.ncols() != schedule.period_len() {
        return Err(TdmError::Shape(format!(
            "{} columns but the schedule period has {} slots",
            global.ncols(),
            schedule.period_len()
        )));
    }
    Ok(schedule
        .tasks()
        .iter()
        .enumerate()
        .map(|(task, spec)| {
            (
                spec.task_id.clone(),
                global.slice(s![.., schedule.block(task)]).to_owned(),
            )
        })
        .collect())
}

/// Per-task state matrices from a run over the whole slot timeline.
pub fn deinterleave(global: &StateMatrix, schedule: &TdmSchedule) -> Result<BTreeMap<TaskId, StateMatrix>> {
    deinterleave_array(global.view(), schedule)?
        .into_iter()
        .map(|(id, a)| Ok((id, StateMatrix::from_array(a)?)))
        .collect()
}

/// Runs the shared node over an interleaved slot stream.
pub fn run_scheduled(
    stream: ArrayView2<'_, f64>,
    schedule: &TdmSchedule,
    params: &ReservoirParams,
    initial_state: Option<&[f64]>,
    exec: Execution,
) -> Result<StateMatrix> {
    if stream.ncols() != schedule.period_len() {
        return Err(TdmError::Shape(format!(
            "stream has {} slots, schedule period has {}",
            stream.ncols(),
            schedule.period_len()
        )));
    }
    let topology = schedule.topology(params);
    Ok(reservoir::run_with_topology(
        stream,
        params,
        initial_state,
        &topology,
        exec,
    )?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    fn spec(id: &str, n: usize) -> TaskSlotSpec {
        TaskSlotSpec::with_nodes(id.into(), Share::new(1, 8).unwrap(), n).unwrap()
    }

    #[test]
    fn max_nodes_examples() {
        assert_eq!(max_nodes(20.0, 1.0, 1).unwrap(), 20);
        assert_eq!(max_nodes(20.0, 1.0, 2).unwrap(), 9);
        assert_eq!(max_nodes(20.0, 1.0, 4).unwrap(), 3);
        assert_eq!(max_nodes(2.0e-9, 1.0e-10, 2).unwrap(), 9);
        assert!(matches!(max_nodes(6.0, 1.0, 4), Err(TdmError::Capacity { .. })));
        assert!(matches!(max_nodes(8.0, 1.0, 4), Err(TdmError::Capacity { .. })));
        assert!(max_nodes(20.0, 1.0, 0).is_err());
    }

    #[test]
    fn single_task_has_no_gaps() {
        let s = build_schedule(&[spec("a", 4)], 4.0, 1.0).unwrap();
        assert_eq!(
            s.slots(),
            &(0..4).map(|node| Slot::Task { task: 0, node }).collect::<Vec<_>>()[..]
        );
    }

    #[test]
    fn two_task_layout() {
        let s = build_schedule(&[spec("t1", 3), spec("t2", 2)], 10.0, 1.0).unwrap();
        use Slot::*;
        assert_eq!(
            s.slots(),
            &[
                Task { task: 0, node: 0 },
                Task { task: 0, node: 1 },
                Task { task: 0, node: 2 },
                Gap,
                Gap,
                Task { task: 1, node: 0 },
                Task { task: 1, node: 1 },
            ]
        );
        assert_eq!(s.describe().lines().nth(3), Some("3\tGAP\t-"));
        assert_eq!(s.describe().lines().nth(5), Some("5\tt2\t0"));
    }

    #[test]
    fn capacity_error_names_deficit() {
        let err = build_schedule(&[spec("a", 5), spec("b", 5)], 10.0, 1.0).unwrap_err();
        assert_eq!(
            err,
            TdmError::Capacity {
                needed: 12,
                available: 10,
                deficit: 2
            }
        );
    }

    #[test]
    fn schedule_rejects_bad_task_lists() {
        assert!(build_schedule(&[], 10.0, 1.0).is_err());
        assert!(build_schedule(&[spec("a", 2), spec("a", 2)], 10.0, 1.0).is_err());
        let full = TaskSlotSpec::with_nodes("x".into(), Share::one(), 2).unwrap();
        assert!(build_schedule(&[full.clone(), spec("y", 1)], 10.0, 1.0).is_err());
    }

    #[test]
    fn node_count_from_share() {
        let s = TaskSlotSpec::from_share("sf".into(), "5/8".parse().unwrap(), 320.0, 1.0).unwrap();
        assert_eq!(s.node_count, 200);
        let err = TaskSlotSpec::from_share("sf".into(), "1/3".parse().unwrap(), 10.0, 1.0);
        assert!(matches!(err, Err(TdmError::Argument(_))));
        assert!("0/4".parse::<Share>().is_err());
        assert!("9/8".parse::<Share>().is_err());
        assert_eq!("10/16".parse::<Share>().unwrap().to_string(), "5/8");
    }

    #[test]
    fn retimed_keeps_layout() {
        let tasks = [
            TaskSlotSpec::from_share("a".into(), "5/8".parse().unwrap(), 16.0, 1.0).unwrap(),
            TaskSlotSpec::from_share("b".into(), "3/8".parse().unwrap(), 16.0, 1.0).unwrap(),
        ];
        let train = build_schedule(&tasks, 18.0, 1.0).unwrap();
        assert_eq!(train.t_sample(), 16.0);
        let test = train
            .retimed(&["5/6".parse().unwrap(), "1/6".parse().unwrap()])
            .unwrap();
        assert_eq!(test.slots(), train.slots());
        assert_eq!(test.tasks()[0].share.to_string(), "5/6");
        assert!((train.slot_duration(0) - 1.0).abs() < 1e-12);
        assert!((test.slot_duration(1) - 16.0 / 6.0 / 6.0).abs() < 1e-12);
        assert!(train
            .retimed(&["5/6".parse().unwrap(), "1/3".parse().unwrap()])
            .is_err());
    }

    #[test]
    fn sample_and_hold_examples() {
        let series = [(0.0, 1.0), (1.0, 2.0), (2.0, 3.0)];
        assert_eq!(sample_and_hold(&series, 0.5).unwrap(), vec![1.0, 1.0, 2.0, 2.0, 3.0]);
        assert_eq!(sample_and_hold(&series, 1.0).unwrap(), vec![1.0, 2.0, 3.0]);
        let flat: Vec<(f64, f64)> = (0..7).map(|i| (i as f64 * 0.3, 4.0)).collect();
        assert!(sample_and_hold(&flat, 0.1).unwrap().iter().all(|&v| v == 4.0));
        assert!(sample_and_hold(&[], 1.0).is_err());
        assert!(sample_and_hold(&[(1.0, 0.0), (0.0, 1.0)], 1.0).is_err());
    }

    #[test]
    fn interleave_layout_order() {
        let sched = build_schedule(&[spec("p", 3), spec("q", 2)], 10.0, 1.0).unwrap();
        let mut m = BTreeMap::new();
        m.insert(TaskId::from("p"), array![[1.0, 2.0, 3.0]]);
        m.insert(TaskId::from("q"), array![[4.0, 5.0]]);
        let out = interleave(&m, &sched, PadPolicy::Zero).unwrap();
        assert_eq!(out.stream, array![[1.0, 2.0, 3.0, 0.0, 0.0, 4.0, 5.0]]);

        let back = deinterleave_array(out.stream.view(), &sched).unwrap();
        assert_eq!(back, m);
    }

    #[test]
    fn interleave_padding() {
        let sched = build_schedule(&[spec("p", 1), spec("q", 1)], 10.0, 1.0).unwrap();
        let mut m = BTreeMap::new();
        m.insert(TaskId::from("p"), array![[1.0], [2.0], [3.0]]);
        m.insert(TaskId::from("q"), array![[7.0]]);
        let zero = interleave(&m, &sched, PadPolicy::Zero).unwrap();
        assert_eq!(zero.stream.column(3).to_vec(), vec![7.0, 0.0, 0.0]);
        assert_eq!(zero.valid_steps(1), vec![true, false, false]);
        let hold = interleave(&m, &sched, PadPolicy::HoldLast).unwrap();
        assert_eq!(hold.stream.column(3).to_vec(), vec![7.0, 7.0, 7.0]);
        assert_eq!(hold.lengths, vec![3, 1]);
    }

    #[test]
    fn interleave_errors() {
        let sched = build_schedule(&[spec("p", 2)], 10.0, 1.0).unwrap();
        let m = BTreeMap::new();
        assert_eq!(
            interleave(&m, &sched, PadPolicy::Zero),
            Err(TdmError::MissingTask("p".into()))
        );
        let mut m = BTreeMap::new();
        m.insert(TaskId::from("p"), array![[1.0, 2.0, 3.0]]);
        assert!(matches!(
            interleave(&m, &sched, PadPolicy::Zero),
            Err(TdmError::Shape(_))
        ));
    }

    #[test]
    fn deinterleave_columns() {
        let sched = build_schedule(&[spec("t1", 3), spec("t2", 2)], 10.0, 1.0).unwrap();
        let cols: Vec<f64> = (1..=7).map(|c| c as f64 / 10.0).collect();
        let global = StateMatrix::from_array(Array2::from_shape_vec((1, 7), cols).unwrap()).unwrap();
        let parts = deinterleave(&global, &sched).unwrap();
        assert_eq!(parts[&TaskId::from("t1")].view(), array![[0.1, 0.2, 0.3]]);
        assert_eq!(parts[&TaskId::from("t2")].view(), array![[0.6, 0.7]]);

        let narrow = StateMatrix::from_array(Array2::zeros((1, 6))).unwrap();
        assert!(matches!(deinterleave(&narrow, &sched), Err(TdmError::Shape(_))));
    }

    #[test]
    fn single_task_round_trip_is_identity() {
        let sched = build_schedule(&[spec("only", 3)], 3.0, 1.0).unwrap();
        let d = array![[0.1, 0.2, 0.3], [0.4, 0.5, 0.6]];
        let mut m = BTreeMap::new();
        m.insert(TaskId::from("only"), d.clone());
        let out = interleave(&m, &sched, PadPolicy::Zero).unwrap();
        assert_eq!(out.stream, d);
    }
}
