//! Step-synchronous parallel factorization and triangular solves.
//!
//! A pool of `W` workers executes the elimination steps in order with a
//! barrier after each phase. The plan's units give every off-diagonal
//! position a single owner: a strict-lower position belongs to the unit of
//! its column's L vector, a strict-upper position to the unit of its row's
//! U vector. Trailing diagonal entries go with their column; the last
//! column and row, which have no descriptor of their own, inherit the
//! owner of step `n - 1`.
//!
//! Because each entry is written by exactly one worker and its sequence of
//! floating-point updates is the ascending-step order of the sequential
//! reference, results are bitwise identical to [`factorize_seq`] and the
//! sequential substitutions for every worker count.
//!
//! [`factorize_seq`]: crate::lu::factorize_seq

use std::sync::atomic::{AtomicUsize, Ordering};
use std::thread;

use thiserror::Error;

use crate::lu::{LuError, LUFactors, PivotPolicy};
use crate::matrix::{DenseMatrix, Vector};
use crate::plan::EbvPlan;

/// Error type for the parallel executors.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum ExecError {
    #[error(transparent)]
    Lu(#[from] LuError),
    /// Plan does not fit the matrix or the configured pool.
    #[error("plan mismatch: {0}")]
    PlanMismatch(String),
}

/// Execution knobs for the worker pool.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExecConfig {
    /// Pool size; must match the plan's worker count.
    pub workers: usize,
    pub pivot: PivotPolicy,
    /// Skip rank-1 update rows whose multiplier is exactly zero, so sparse
    /// inputs perform fewer elementary operations.
    pub zero_skip: bool,
}

impl ExecConfig {
    pub fn new(workers: usize, pivot: PivotPolicy) -> Self {
        ExecConfig {
            workers,
            pivot,
            zero_skip: false,
        }
    }

    pub fn with_zero_skip(mut self, on: bool) -> Self {
        self.zero_skip = on;
        self
    }
}

/// Clamps a requested worker count to the usable range for dimension `n`:
/// at least 1, at most `n - 1` (more workers than units can do no work).
pub fn effective_workers(n: usize, requested: usize) -> usize {
    requested.max(1).min((n - 1).max(1))
}

/// Per-worker operation counts for one factorization or solve.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WorkCounters {
    madds: Vec<u64>,
    divs: Vec<u64>,
    barriers: u64,
}

impl WorkCounters {
    pub fn workers(&self) -> usize {
        self.madds.len()
    }

    /// Multiply-add count per worker.
    pub fn madds(&self) -> &[u64] {
        &self.madds
    }

    /// Division count per worker.
    pub fn divs(&self) -> &[u64] {
        &self.divs
    }

    /// Number of barrier synchronization points passed.
    pub fn barriers(&self) -> u64 {
        self.barriers
    }

    pub fn total_madds(&self) -> u64 {
        self.madds.iter().sum()
    }

    pub fn total_divs(&self) -> u64 {
        self.divs.iter().sum()
    }

    /// CSV dump, one line per worker: `worker,madds,divs`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("worker,madds,divs\n");
        for w in 0..self.workers() {
            out.push_str(&format!("{w},{},{}\n", self.madds[w], self.divs[w]));
        }
        out
    }
}

#[derive(Debug, Default, Clone)]
struct WorkerTally {
    madds: u64,
    divs: u64,
    barriers: u64,
}

fn collect(tallies: Vec<WorkerTally>) -> WorkCounters {
    debug_assert!(tallies.windows(2).all(|t| t[0].barriers == t[1].barriers));
    let barriers = tallies.first().map_or(0, |t| t.barriers);
    WorkCounters {
        madds: tallies.iter().map(|t| t.madds).collect(),
        divs: tallies.iter().map(|t| t.divs).collect(),
        barriers,
    }
}

/// Sense-reversing barrier that spins briefly before yielding.
///
/// The executors synchronize thousands of times per factorization with
/// little work between barriers, so a blocking barrier (a futex round trip
/// per wait) would dominate small problem sizes. Spinning keeps the common
/// case at a few loads; the yield fallback keeps oversubscribed pools
/// moving.
struct SpinBarrier {
    arrived: AtomicUsize,
    generation: AtomicUsize,
    total: usize,
}

impl SpinBarrier {
    fn new(total: usize) -> Self {
        SpinBarrier {
            arrived: AtomicUsize::new(0),
            generation: AtomicUsize::new(0),
            total,
        }
    }

    fn wait(&self) {
        if self.total == 1 {
            return;
        }
        let generation = self.generation.load(Ordering::Acquire);
        if self.arrived.fetch_add(1, Ordering::AcqRel) + 1 == self.total {
            // last arrival: reset, then release the others. The release
            // store publishes every earlier arrival's writes to every
            // waiter that acquires the new generation.
            self.arrived.store(0, Ordering::Relaxed);
            self.generation.fetch_add(1, Ordering::Release);
        } else {
            let mut spins = 0u32;
            while self.generation.load(Ordering::Acquire) == generation {
                spins += 1;
                if spins < 128 {
                    std::hint::spin_loop();
                } else {
                    thread::yield_now();
                }
            }
        }
    }
}

/// Raw shared view of a mutable f64 buffer.
///
/// Safety protocol: within one phase every index is written by at most one
/// worker (the plan's ownership tables are a partition), and any value read
/// in a phase was last written before the barrier that opened the phase.
#[derive(Clone, Copy)]
struct SharedBuf {
    ptr: *mut f64,
    len: usize,
}

unsafe impl Send for SharedBuf {}
unsafe impl Sync for SharedBuf {}

impl SharedBuf {
    fn new(buf: &mut [f64]) -> Self {
        SharedBuf {
            ptr: buf.as_mut_ptr(),
            len: buf.len(),
        }
    }

    #[inline]
    unsafe fn get(self, idx: usize) -> f64 {
        debug_assert!(idx < self.len);
        *self.ptr.add(idx)
    }

    #[inline]
    unsafe fn set(self, idx: usize, v: f64) {
        debug_assert!(idx < self.len);
        *self.ptr.add(idx) = v;
    }

    /// Shared view of a range no worker writes during the current phase.
    #[inline]
    unsafe fn slice<'a>(self, start: usize, len: usize) -> &'a [f64] {
        debug_assert!(start + len <= self.len);
        std::slice::from_raw_parts(self.ptr.add(start), len)
    }

    /// Exclusive view of a range owned by the calling worker.
    #[inline]
    #[allow(clippy::mut_from_ref)]
    unsafe fn slice_mut<'a>(self, start: usize, len: usize) -> &'a mut [f64] {
        debug_assert!(start + len <= self.len);
        std::slice::from_raw_parts_mut(self.ptr.add(start), len)
    }
}

/// Disjoint per-worker result slots.
#[derive(Clone, Copy)]
struct TallySlots {
    ptr: *mut WorkerTally,
    len: usize,
}

unsafe impl Send for TallySlots {}
unsafe impl Sync for TallySlots {}

impl TallySlots {
    unsafe fn write(self, wid: usize, tally: WorkerTally) {
        debug_assert!(wid < self.len);
        *self.ptr.add(wid) = tally;
    }
}

/// Runs the worker body on every member of the pool. A single worker runs
/// inline on the calling thread, which keeps W = 1 timings comparable to
/// the sequential path.
fn run_pool<F>(workers: usize, run_worker: F) -> Vec<WorkerTally>
where
    F: Fn(usize) -> WorkerTally + Sync,
{
    if workers == 1 {
        return vec![run_worker(0)];
    }
    let mut tallies = vec![WorkerTally::default(); workers];
    let slots = TallySlots {
        ptr: tallies.as_mut_ptr(),
        len: workers,
    };
    pool::execute(workers, &|wid| {
        // each worker writes only its own slot
        unsafe { slots.write(wid, run_worker(wid)) };
    });
    tallies
}

/// Process-wide pool of parked worker threads.
///
/// Spawning OS threads per call costs hundreds of microseconds under
/// sandboxed kernels, which would swamp small factorizations, so the pool
/// keeps its threads alive between jobs. The calling thread doubles as
/// worker 0. One job runs at a time; the pool lock serializes concurrent
/// callers.
mod pool {
    use std::panic::{catch_unwind, resume_unwind, AssertUnwindSafe};
    use std::sync::atomic::{AtomicBool, AtomicUsize, Ordering};
    use std::sync::mpsc::{channel, Sender};
    use std::sync::{Mutex, OnceLock};

    struct Job {
        body: &'static (dyn Fn(usize) + Sync),
        wid: usize,
        latch: *const Latch,
    }

    // the pointers stay valid because `execute` blocks on the latch before
    // its borrows end
    unsafe impl Send for Job {}

    struct Latch {
        remaining: AtomicUsize,
        panicked: AtomicBool,
    }

    impl Latch {
        fn wait(&self) {
            let mut spins = 0u32;
            while self.remaining.load(Ordering::Acquire) != 0 {
                spins += 1;
                if spins < 128 {
                    std::hint::spin_loop();
                } else {
                    std::thread::yield_now();
                }
            }
        }
    }

    static POOL: OnceLock<Mutex<Vec<Sender<Job>>>> = OnceLock::new();

    pub(super) fn execute(workers: usize, body: &(dyn Fn(usize) + Sync)) {
        debug_assert!(workers >= 2);
        let pool = POOL.get_or_init(|| Mutex::new(Vec::new()));
        let mut senders = pool.lock().unwrap_or_else(|e| e.into_inner());
        while senders.len() < workers - 1 {
            let (tx, rx) = channel::<Job>();
            std::thread::Builder::new()
                .name(format!("ebv-worker-{}", senders.len() + 1))
                .spawn(move || {
                    for job in rx {
                        let latch = unsafe { &*job.latch };
                        if catch_unwind(AssertUnwindSafe(|| (job.body)(job.wid))).is_err() {
                            latch.panicked.store(true, Ordering::Relaxed);
                        }
                        latch.remaining.fetch_sub(1, Ordering::Release);
                    }
                })
                .expect("failed to spawn pool worker");
            senders.push(tx);
        }

        let latch = Latch {
            remaining: AtomicUsize::new(workers - 1),
            panicked: AtomicBool::new(false),
        };
        // SAFETY: the job body outlives the latch wait below, which is the
        // last point any pool thread can touch it
        let body: &'static (dyn Fn(usize) + Sync) = unsafe { std::mem::transmute(body) };
        for wid in 1..workers {
            senders[wid - 1]
                .send(Job {
                    body,
                    wid,
                    latch: &latch,
                })
                .expect("pool worker exited");
        }
        let caller = catch_unwind(AssertUnwindSafe(|| body(0)));
        latch.wait();
        match caller {
            Err(payload) => resume_unwind(payload),
            Ok(()) if latch.panicked.load(Ordering::Relaxed) => {
                panic!("a pool worker panicked during parallel execution")
            }
            Ok(()) => {}
        }
    }
}

/// Owner of the unit covering column `col` (its sub-diagonal L vector plus
/// the diagonal entry); the last column inherits step `n - 1`.
fn column_owners(plan: &EbvPlan) -> Vec<usize> {
    let n = plan.n();
    (0..n)
        .map(|col| plan.owner_of(plan.unit_of_lower(col.min(n - 2))))
        .collect()
}

/// Owner of the unit covering row `row`'s U vector; the last row inherits
/// step `n - 1`.
fn row_owners(plan: &EbvPlan) -> Vec<usize> {
    let n = plan.n();
    (0..n)
        .map(|row| plan.owner_of(plan.unit_of_upper(row.min(n - 2))))
        .collect()
}

fn check_plan(plan: &EbvPlan, n: usize, cfg: &ExecConfig) -> Result<(), ExecError> {
    if plan.n() != n {
        return Err(ExecError::PlanMismatch(format!(
            "plan is for dimension {}, operand has dimension {n}",
            plan.n()
        )));
    }
    if plan.workers() != cfg.workers {
        return Err(ExecError::PlanMismatch(format!(
            "plan was assigned to {} workers, config requests {}",
            plan.workers(),
            cfg.workers
        )));
    }
    Ok(())
}

/// Parallel right-looking factorization following the plan's ownership.
///
/// Each step runs two barrier-separated phases: the owner of the step's L
/// vector forms the column of multipliers, then every worker applies the
/// rank-1 update to exactly the trailing entries it owns. Output is bitwise
/// identical to the sequential factorization for every worker count.
pub fn factorize_par(
    a: &DenseMatrix,
    plan: &EbvPlan,
    cfg: &ExecConfig,
) -> Result<(LUFactors, WorkCounters), ExecError> {
    let n = a.n();
    check_plan(plan, n, cfg)?;
    let workers = plan.workers();
    let threshold = cfg.pivot.threshold();
    let zero_skip = cfg.zero_skip;

    let col_owner = column_owners(plan);
    let row_owner = row_owners(plan);
    let mut owned_cols: Vec<Vec<usize>> = vec![Vec::new(); workers];
    for (col, &owner) in col_owner.iter().enumerate() {
        owned_cols[owner].push(col);
    }
    let mut owned_rows: Vec<Vec<usize>> = vec![Vec::new(); workers];
    for row in 0..n - 1 {
        owned_rows[row_owner[row]].push(row);
    }

    let mut packed = a.values().to_vec();
    let shared = SharedBuf::new(&mut packed);
    let barrier = SpinBarrier::new(workers);
    // 1-based step of the first singular pivot; 0 while healthy. The
    // barriers order all accesses, so relaxed atomics suffice.
    let failed = AtomicUsize::new(0);

    let run_worker = |wid: usize| -> WorkerTally {
        let cols = &owned_cols[wid];
        let rows = &owned_rows[wid];
        let mut local = WorkerTally::default();
        for r in 0..n - 1 {
            // phase 1: multipliers l_ir = a_ir / a_rr
            if wid == col_owner[r] {
                let pivot = unsafe { shared.get(r * n + r) };
                if pivot.abs() <= threshold {
                    failed.store(r + 1, Ordering::Relaxed);
                } else {
                    for i in r + 1..n {
                        let idx = i * n + r;
                        let l = unsafe { shared.get(idx) } / pivot;
                        unsafe { shared.set(idx, l) };
                    }
                    local.divs += (n - r - 1) as u64;
                }
            }
            barrier.wait();
            local.barriers += 1;
            if failed.load(Ordering::Relaxed) != 0 {
                break;
            }

            // phase 2: a_ij -= l_ir * a_rj over owned trailing entries.
            // Nobody writes pivot row r in this phase.
            let pivot_row = unsafe { shared.slice(r * n, n) };
            // strict-upper segments are contiguous per owned row
            let first = rows.partition_point(|&i| i <= r);
            for &i in &rows[first..] {
                let l = unsafe { shared.get(i * n + r) };
                if zero_skip && l == 0.0 {
                    continue;
                }
                let seg = unsafe { shared.slice_mut(i * n + i + 1, n - i - 1) };
                for (dst, &u) in seg.iter_mut().zip(&pivot_row[i + 1..]) {
                    *dst -= l * u;
                }
                local.madds += (n - i - 1) as u64;
            }
            // lower-and-diagonal part, walked row-major over owned columns
            // in (r, i]
            let lo = cols.partition_point(|&j| j <= r);
            let mut hi = lo;
            for i in r + 1..n {
                while hi < cols.len() && cols[hi] <= i {
                    hi += 1;
                }
                if lo == hi {
                    continue;
                }
                let l = unsafe { shared.get(i * n + r) };
                if zero_skip && l == 0.0 {
                    continue;
                }
                for &j in &cols[lo..hi] {
                    let v = unsafe { shared.get(i * n + j) } - l * pivot_row[j];
                    unsafe { shared.set(i * n + j, v) };
                }
                local.madds += (hi - lo) as u64;
            }
            barrier.wait();
            local.barriers += 1;
        }
        local
    };
    let tallies = run_pool(workers, run_worker);

    let step = failed.load(Ordering::Relaxed);
    if step != 0 {
        return Err(LuError::SingularPivot { step }.into());
    }
    if packed[(n - 1) * n + (n - 1)].abs() <= threshold {
        return Err(LuError::SingularPivot { step: n }.into());
    }
    let factors = LUFactors::from_packed(n, packed).expect("packed buffer has n*n entries");
    Ok((factors, collect(tallies)))
}

/// Parallel substitutions over the plan's vectors.
///
/// Forward pass: once `y_k` is final, the owner of L vector `k` scatters its
/// column updates; one barrier per step. Backward pass: the owner of U
/// vector `k` gathers row `k` against the already-final tail of `x` and
/// divides by the pivot. Counters attribute exactly one multiply-add per
/// owned vector entry, and results are bitwise identical to the sequential
/// substitutions.
pub fn solve_par(
    f: &LUFactors,
    b: &Vector,
    plan: &EbvPlan,
    cfg: &ExecConfig,
) -> Result<(Vector, WorkCounters), ExecError> {
    let n = f.n();
    check_plan(plan, n, cfg)?;
    if b.n() != n {
        return Err(ExecError::Lu(LuError::DimensionMismatch(format!(
            "factors are {}x{} but b has length {}",
            n,
            n,
            b.n()
        ))));
    }
    let workers = plan.workers();
    let col_owner = column_owners(plan);
    let row_owner = row_owners(plan);
    let packed = f.packed();

    let mut y = b.values().to_vec();
    let mut x = vec![0.0; n];
    let shared_y = SharedBuf::new(&mut y);
    let shared_x = SharedBuf::new(&mut x);
    let barrier = SpinBarrier::new(workers);
    let failed = AtomicUsize::new(0);

    let run_worker = |wid: usize| -> WorkerTally {
        let mut local = WorkerTally::default();
        // forward: y_i -= l_ik * y_k for the entries of L vector k
        for k in 0..n {
            if wid == col_owner[k] {
                let yk = unsafe { shared_y.get(k) };
                for i in k + 1..n {
                    let v = unsafe { shared_y.get(i) } - packed[i * n + k] * yk;
                    unsafe { shared_y.set(i, v) };
                }
                local.madds += (n - k - 1) as u64;
            }
            barrier.wait();
            local.barriers += 1;
        }
        // backward: x_k = (y_k - sum_{j>k} u_kj x_j) / u_kk
        for k in (0..n).rev() {
            if wid == row_owner[k] {
                let pivot = packed[k * n + k];
                if pivot == 0.0 {
                    failed.store(k + 1, Ordering::Relaxed);
                } else {
                    let mut s = unsafe { shared_y.get(k) };
                    for j in k + 1..n {
                        s -= packed[k * n + j] * unsafe { shared_x.get(j) };
                    }
                    local.madds += (n - k - 1) as u64;
                    unsafe { shared_x.set(k, s / pivot) };
                    local.divs += 1;
                }
            }
            barrier.wait();
            local.barriers += 1;
            if failed.load(Ordering::Relaxed) != 0 {
                break;
            }
        }
        local
    };
    let tallies = run_pool(workers, run_worker);

    let step = failed.load(Ordering::Relaxed);
    if step != 0 {
        return Err(LuError::SingularPivot { step }.into());
    }
    Ok((Vector::from_raw(x), collect(tallies)))
}
