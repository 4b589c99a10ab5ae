// SPDX-License-Identifier: MIT OR Apache-2.0

//! Static loop partitioning with deterministic reductions.
//!
//! Every parallel region splits its iteration space into a fixed number of
//! *logical* partitions (8 by default), independent of how many physical
//! workers exist. Logical partitions are then dealt to workers in contiguous
//! blocks. Reductions compute one partial per logical partition and combine
//! them sequentially in ascending order, so floating-point results are
//! bitwise identical for any worker count.
//!
//! Bodies must only write through the disjoint slices they are handed; the
//! slice-splitting helpers here make that the only thing they *can* do.

use std::ops::Range;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;

use crate::error::{Error, Result};

/// Logical partition count used unless overridden.
pub const DEFAULT_LOGICAL_PARTS: usize = 8;

/// Environment variable consulted by front-ends for the worker count.
pub const THREADS_ENV: &str = "VIBSYSID_THREADS";

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PartitionMode {
    Static,
}

/// Balanced contiguous split of `0..range_len` into `workers` sub-ranges.
///
/// The first `range_len % workers` ranges get one extra element. Ranges are
/// empty when there are more workers than iterations.
pub fn partition(range_len: usize, workers: usize) -> Vec<(usize, usize)> {
    assert!(workers >= 1, "partition needs at least one worker");
    let base = range_len / workers;
    let extra = range_len % workers;
    let mut out = Vec::with_capacity(workers);
    let mut start = 0;
    for w in 0..workers {
        let len = base + usize::from(w < extra);
        out.push((start, start + len));
        start += len;
    }
    out
}

/// Splits `data` into the mutable sub-slices covering `parts`, where each part
/// is measured in items of `unit` elements. `parts` must be ascending and
/// contiguous from zero, as produced by [`partition`].
pub fn split_by_parts<'a, T>(
    mut data: &'a mut [T],
    unit: usize,
    parts: &[(usize, usize)],
) -> Vec<&'a mut [T]> {
    let mut out = Vec::with_capacity(parts.len());
    let mut cursor = 0;
    for &(start, end) in parts {
        debug_assert_eq!(start, cursor, "partitions must be contiguous");
        debug_assert!(end >= start, "partition end before start");
        let (head, tail) = data.split_at_mut((end - start) * unit);
        out.push(head);
        data = tail;
        cursor = end;
    }
    out
}

/// Execution context handed to every parallel kernel.
#[derive(Clone)]
pub struct ExecContext {
    workers: usize,
    logical_parts: usize,
    pool: Option<Arc<rayon::ThreadPool>>,
    barriers: Arc<AtomicU64>,
}

impl std::fmt::Debug for ExecContext {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ExecContext")
            .field("workers", &self.workers)
            .field("logical_parts", &self.logical_parts)
            .field("barriers", &self.barrier_count())
            .finish()
    }
}

impl Default for ExecContext {
    fn default() -> Self {
        Self::sequential()
    }
}

impl ExecContext {
    pub fn sequential() -> Self {
        Self {
            workers: 1,
            logical_parts: DEFAULT_LOGICAL_PARTS,
            pool: None,
            barriers: Arc::new(AtomicU64::new(0)),
        }
    }

    pub fn new(workers: usize) -> Result<Self> {
        Self::with_logical_parts(workers, DEFAULT_LOGICAL_PARTS)
    }

    pub fn with_logical_parts(workers: usize, logical_parts: usize) -> Result<Self> {
        if workers == 0 {
            return Err(Error::InvalidSpec("worker count must be at least 1".into()));
        }
        if logical_parts == 0 {
            return Err(Error::InvalidSpec(
                "logical partition count must be at least 1".into(),
            ));
        }
        let pool = if workers > 1 {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(workers)
                .thread_name(|i| format!("vibsysid-worker-{i}"))
                .build()
                .map_err(|e| Error::InvalidSpec(format!("cannot start worker pool: {e}")))?;
            Some(Arc::new(pool))
        } else {
            None
        };
        Ok(Self {
            workers,
            logical_parts,
            pool,
            barriers: Arc::new(AtomicU64::new(0)),
        })
    }

    pub fn worker_count(&self) -> usize {
        self.workers
    }

    pub fn logical_parts(&self) -> usize {
        self.logical_parts
    }

    pub fn partition_mode(&self) -> PartitionMode {
        PartitionMode::Static
    }

    pub fn is_deterministic(&self) -> bool {
        true
    }

    /// Number of synchronization points executed so far. Single-worker
    /// contexts never synchronize and always report zero.
    pub fn barrier_count(&self) -> u64 {
        self.barriers.load(Ordering::Relaxed)
    }

    pub fn reset_barriers(&self) {
        self.barriers.store(0, Ordering::Relaxed);
    }

    fn barrier(&self) {
        if self.workers > 1 {
            self.barriers.fetch_add(1, Ordering::Relaxed);
        }
    }

    /// Logical partitioning of `0..len` used by every region of this context.
    pub fn logical_ranges(&self, len: usize) -> Vec<(usize, usize)> {
        partition(len, self.logical_parts)
    }

    /// Runs `body(index, payload)` for every payload, dealing payloads to
    /// workers in static contiguous blocks. Returns after all payloads are
    /// processed (barrier on exit).
    pub fn run_parts<P, F>(&self, payloads: Vec<P>, body: F)
    where
        P: Send,
        F: Fn(usize, P) + Sync,
    {
        match &self.pool {
            None => {
                for (i, p) in payloads.into_iter().enumerate() {
                    body(i, p);
                }
            }
            Some(pool) => {
                let blocks = partition(payloads.len(), self.workers);
                let mut groups: Vec<Vec<(usize, P)>> = blocks
                    .iter()
                    .map(|&(s, e)| Vec::with_capacity(e - s))
                    .collect();
                let mut w = 0;
                for (i, p) in payloads.into_iter().enumerate() {
                    while i >= blocks[w].1 {
                        w += 1;
                    }
                    groups[w].push((i, p));
                }
                let body = &body;
                pool.scope(move |s| {
                    let mut groups = groups.into_iter();
                    let first = groups.next();
                    for group in groups {
                        if group.is_empty() {
                            continue;
                        }
                        s.spawn(move |_| {
                            for (i, p) in group {
                                body(i, p);
                            }
                        });
                    }
                    if let Some(group) = first {
                        for (i, p) in group {
                            body(i, p);
                        }
                    }
                });
            }
        }
        self.barrier();
    }

    /// Calls `body` once per logical sub-range of `0..len`. The body gets no
    /// mutable state from the context; use [`ExecContext::for_each_chunk_mut`]
    /// for writes.
    pub fn parallel_for<F>(&self, len: usize, body: F)
    where
        F: Fn(Range<usize>) + Sync,
    {
        let parts = self.logical_ranges(len);
        self.run_parts(parts, |_, (s, e)| body(s..e));
    }

    /// Partitions `data` (viewed as `data.len() / unit` items of `unit`
    /// elements) and hands each worker its items as a disjoint mutable slice
    /// together with the item range it covers.
    pub fn for_each_chunk_mut<T, F>(&self, data: &mut [T], unit: usize, body: F)
    where
        T: Send,
        F: Fn(Range<usize>, &mut [T]) + Sync,
    {
        assert!(
            unit > 0 && data.len() % unit == 0,
            "data is not a whole number of items"
        );
        let parts = self.logical_ranges(data.len() / unit);
        let slices = split_by_parts(data, unit, &parts);
        let payloads: Vec<_> = parts.into_iter().zip(slices).collect();
        self.run_parts(payloads, |_, ((s, e), chunk)| body(s..e, chunk));
    }

    /// Maps every logical sub-range of `0..len` in parallel, then folds the
    /// partials on the calling thread in ascending range order.
    pub fn map_reduce<A, M, C>(&self, len: usize, map: M, combine: C) -> A
    where
        A: Send,
        M: Fn(Range<usize>) -> A + Sync,
        C: Fn(A, A) -> A,
    {
        let parts = self.logical_ranges(len);
        let mut partials: Vec<Option<A>> = (0..parts.len()).map(|_| None).collect();
        let payloads: Vec<_> = parts.into_iter().zip(partials.iter_mut()).collect();
        self.run_parts(payloads, |_, ((s, e), slot)| *slot = Some(map(s..e)));
        let mut it = partials
            .into_iter()
            .map(|p| p.expect("partial not computed"));
        let first = it.next().expect("at least one logical partition");
        let out = it.fold(first, combine);
        self.barrier();
        out
    }

    /// Deterministic parallel dot product over the logical partitions.
    pub fn dot<T: crate::Real>(&self, a: &[T], b: &[T]) -> T {
        assert_eq!(a.len(), b.len(), "dot length mismatch");
        self.map_reduce(
            a.len(),
            |r| crate::real::dot(&a[r.clone()], &b[r]),
            |x, y| x + y,
        )
    }
}

/// Worker count from [`THREADS_ENV`], if set to a positive integer.
pub fn threads_from_env() -> Option<usize> {
    std::env::var(THREADS_ENV)
        .ok()
        .and_then(|v| v.trim().parse::<usize>().ok())
        .filter(|&n| n >= 1)
}
