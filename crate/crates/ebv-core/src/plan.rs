//! Bi-vectorization of the LU triangles and the equal-length pairing.
//!
//! Each strict triangle of an `n`x`n` factorization splits into `n - 1`
//! per-step vectors: the L vector of step `k` holds the sub-diagonal entries
//! of column `k`, the U vector holds the right-of-diagonal entries of row
//! `k`, both with length `n - k`. On their own these vectors are badly
//! skewed (lengths `n - 1` down to `1`), so within each triangle the vector
//! of step `k` is paired with the vector of step `n - k`, giving units of
//! total length exactly `n`. For even `n` the two unpaired middle vectors
//! (length `n / 2` each) are merged across the triangles into one unit.
//! This yields `n - 1` units of length `n` covering every off-diagonal
//! position exactly once, which a round-robin assignment spreads evenly
//! over the worker pool.

use std::fmt;

use thiserror::Error;

/// Error type for plan construction.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum PlanError {
    /// Bi-vectorization needs at least a 2x2 matrix.
    #[error("bi-vectorization requires n >= 2, got {0}")]
    DimensionTooSmall(usize),
    /// Worker count below 1.
    #[error("worker count must be at least 1")]
    InvalidWorkerCount,
    /// Descriptor list does not match the bi-vectorization of `n`.
    #[error("descriptor list does not match bivectorize({n})")]
    InconsistentDescriptors { n: usize },
    /// Paired units do not form a valid plan.
    #[error("inconsistent paired units: {0}")]
    InconsistentUnits(String),
}

/// Which factor a descriptor belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Triangle {
    Lower,
    Upper,
}

impl fmt::Display for Triangle {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Triangle::Lower => f.write_str("L"),
            Triangle::Upper => f.write_str("U"),
        }
    }
}

/// One per-step vector of a triangle.
///
/// `step` is the 1-based elimination step `k` in `[1, n-1]`. A Lower
/// descriptor denotes the sub-diagonal entries of column `k` (rows
/// `k+1..=n`), an Upper descriptor the right-of-diagonal entries of row `k`
/// (columns `k+1..=n`); both have length `n - k`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct VectorDescriptor {
    triangle: Triangle,
    step: usize,
    len: usize,
}

impl VectorDescriptor {
    fn new(triangle: Triangle, step: usize, n: usize) -> Self {
        debug_assert!((1..n).contains(&step));
        VectorDescriptor {
            triangle,
            step,
            len: n - step,
        }
    }

    pub fn triangle(&self) -> Triangle {
        self.triangle
    }

    /// 1-based step index `k`.
    pub fn step(&self) -> usize {
        self.step
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    /// 0-based `(row, col)` matrix positions this descriptor covers.
    pub fn positions(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        let fixed = self.step - 1;
        let triangle = self.triangle;
        (self.step..self.step + self.len).map(move |t| match triangle {
            Triangle::Lower => (t, fixed),
            Triangle::Upper => (fixed, t),
        })
    }
}

impl fmt::Display for VectorDescriptor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}{}[{}]", self.triangle, self.step, self.len)
    }
}

/// One or two descriptors grouped into an equal-length work unit.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PairedUnit {
    members: Vec<VectorDescriptor>,
    total_length: usize,
}

impl PairedUnit {
    fn pair(a: VectorDescriptor, b: VectorDescriptor) -> Self {
        PairedUnit {
            total_length: a.len() + b.len(),
            members: vec![a, b],
        }
    }

    pub fn members(&self) -> &[VectorDescriptor] {
        &self.members
    }

    pub fn total_length(&self) -> usize {
        self.total_length
    }
}

/// Splits both strict triangles into their per-step vectors, L descriptors
/// for `k = 1..n-1` in ascending order followed by the U descriptors.
pub fn bivectorize(n: usize) -> Result<Vec<VectorDescriptor>, PlanError> {
    if n < 2 {
        return Err(PlanError::DimensionTooSmall(n));
    }
    let mut descriptors = Vec::with_capacity(2 * (n - 1));
    for triangle in [Triangle::Lower, Triangle::Upper] {
        for step in 1..n {
            descriptors.push(VectorDescriptor::new(triangle, step, n));
        }
    }
    Ok(descriptors)
}

/// Pairs step `k` with step `n - k` inside each triangle; for even `n` the
/// two middle vectors are merged across triangles. Every returned unit has
/// total length exactly `n`, and there are exactly `n - 1` of them.
pub fn equalize(descriptors: &[VectorDescriptor], n: usize) -> Result<Vec<PairedUnit>, PlanError> {
    let expected = bivectorize(n)?;
    if descriptors != expected {
        return Err(PlanError::InconsistentDescriptors { n });
    }
    let desc = |triangle, step| VectorDescriptor::new(triangle, step, n);
    let mut units = Vec::with_capacity(n - 1);
    for triangle in [Triangle::Lower, Triangle::Upper] {
        for k in 1..=(n - 1) / 2 {
            units.push(PairedUnit::pair(desc(triangle, k), desc(triangle, n - k)));
        }
    }
    if n % 2 == 0 {
        units.push(PairedUnit::pair(
            desc(Triangle::Lower, n / 2),
            desc(Triangle::Upper, n / 2),
        ));
    }
    debug_assert_eq!(units.len(), n - 1);
    Ok(units)
}

/// Equal-length units with their round-robin worker assignment.
#[derive(Debug, Clone, PartialEq)]
pub struct EbvPlan {
    n: usize,
    units: Vec<PairedUnit>,
    owners: Vec<usize>,
    workers: usize,
    lower_unit: Vec<usize>,
    upper_unit: Vec<usize>,
}

impl EbvPlan {
    /// Convenience path `bivectorize -> equalize -> assign`.
    pub fn build(n: usize, workers: usize) -> Result<Self, PlanError> {
        let descriptors = bivectorize(n)?;
        let units = equalize(&descriptors, n)?;
        assign(units, workers)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn workers(&self) -> usize {
        self.workers
    }

    pub fn units(&self) -> &[PairedUnit] {
        &self.units
    }

    /// Worker that owns the given unit.
    pub fn owner_of(&self, unit: usize) -> usize {
        self.owners[unit]
    }

    /// Unit containing the L descriptor of 0-based column `col`
    /// (`col < n - 1`).
    pub(crate) fn unit_of_lower(&self, col: usize) -> usize {
        self.lower_unit[col]
    }

    /// Unit containing the U descriptor of 0-based row `row`
    /// (`row < n - 1`).
    pub(crate) fn unit_of_upper(&self, row: usize) -> usize {
        self.upper_unit[row]
    }

    /// One line per unit, stable order:
    /// `unit <id>: <triangle><k>[len] + <triangle><k>[len] -> worker <w>`.
    pub fn dump(&self) -> String {
        let mut out = String::new();
        for (id, unit) in self.units.iter().enumerate() {
            let members = unit
                .members()
                .iter()
                .map(|d| d.to_string())
                .collect::<Vec<_>>()
                .join(" + ");
            out.push_str(&format!(
                "unit {id}: {members} -> worker {}\n",
                self.owners[id]
            ));
        }
        out
    }
}

/// Assigns units to `workers` round-robin in unit order.
pub fn assign(units: Vec<PairedUnit>, workers: usize) -> Result<EbvPlan, PlanError> {
    if workers < 1 {
        return Err(PlanError::InvalidWorkerCount);
    }
    let Some(first) = units.first() else {
        return Err(PlanError::InconsistentUnits("no units".into()));
    };
    let n = first.total_length();
    if units.len() != n - 1 {
        return Err(PlanError::InconsistentUnits(format!(
            "{} units for n = {n}, expected {}",
            units.len(),
            n - 1
        )));
    }
    // rebuild the descriptor-to-unit map; this also re-checks the disjoint
    // cover of both triangles
    let mut lower_unit = vec![usize::MAX; n - 1];
    let mut upper_unit = vec![usize::MAX; n - 1];
    for (id, unit) in units.iter().enumerate() {
        if unit.total_length() != n {
            return Err(PlanError::InconsistentUnits(format!(
                "unit {id} has total length {}, expected {n}",
                unit.total_length()
            )));
        }
        for member in unit.members() {
            let table = match member.triangle() {
                Triangle::Lower => &mut lower_unit,
                Triangle::Upper => &mut upper_unit,
            };
            let slot = member.step() - 1;
            if slot >= n - 1 || table[slot] != usize::MAX {
                return Err(PlanError::InconsistentUnits(format!(
                    "descriptor {member} repeated or out of range"
                )));
            }
            table[slot] = id;
        }
    }
    if lower_unit.contains(&usize::MAX) || upper_unit.contains(&usize::MAX) {
        return Err(PlanError::InconsistentUnits(
            "some descriptors are missing".into(),
        ));
    }
    let owners = (0..units.len()).map(|u| u % workers).collect();
    Ok(EbvPlan {
        n,
        units,
        owners,
        workers,
        lower_unit,
        upper_unit,
    })
}

/// Per-worker totals over owned units.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WorkSummary {
    per_worker_length: Vec<usize>,
    per_worker_units: Vec<usize>,
}

impl WorkSummary {
    /// Total entry count owned by each worker.
    pub fn per_worker_length(&self) -> &[usize] {
        &self.per_worker_length
    }

    /// Unit count owned by each worker.
    pub fn per_worker_units(&self) -> &[usize] {
        &self.per_worker_units
    }

    /// Spread between the most and least loaded worker, in owned entries.
    pub fn length_gap(&self) -> usize {
        let max = self.per_worker_length.iter().max().copied().unwrap_or(0);
        let min = self.per_worker_length.iter().min().copied().unwrap_or(0);
        max - min
    }
}

/// Sums owned lengths and unit counts per worker.
pub fn plan_stats(plan: &EbvPlan) -> WorkSummary {
    let mut per_worker_length = vec![0; plan.workers()];
    let mut per_worker_units = vec![0; plan.workers()];
    for (id, unit) in plan.units().iter().enumerate() {
        let owner = plan.owner_of(id);
        per_worker_length[owner] += unit.total_length();
        per_worker_units[owner] += 1;
    }
    WorkSummary {
        per_worker_length,
        per_worker_units,
    }
}
