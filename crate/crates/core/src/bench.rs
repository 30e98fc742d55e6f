//! Wall-time scaling benchmark for the losses in this crate.

use std::alloc::{GlobalAlloc, Layout, System};
use std::fmt;
use std::hint::black_box;
use std::sync::atomic::{AtomicBool, AtomicUsize, Ordering};
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::dsl::{dsl_loss, exact_sign_mismatch_count, DslConfig};
use crate::error::{Error, Result};
use crate::tensor::Tensor;
use crate::topo::{pairwise_correlation_distance, persistence_wasserstein, InfiniteDeathPolicy};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum LossKind {
    Dsl,
    Mse,
    ExactSign,
    PersistenceWasserstein,
    CorrelationDistance,
}

impl LossKind {
    pub const ALL: [LossKind; 5] = [
        LossKind::Dsl,
        LossKind::Mse,
        LossKind::ExactSign,
        LossKind::PersistenceWasserstein,
        LossKind::CorrelationDistance,
    ];

    pub fn name(self) -> &'static str {
        match self {
            LossKind::Dsl => "dsl",
            LossKind::Mse => "mse",
            LossKind::ExactSign => "exact-sign",
            LossKind::PersistenceWasserstein => "persistence-wasserstein",
            LossKind::CorrelationDistance => "correlation-distance",
        }
    }

    fn evaluate(self, x: &Tensor, y: &Tensor) -> Result<f64> {
        match self {
            LossKind::Dsl => dsl_loss(x, y, &DslConfig::default()),
            LossKind::Mse => Ok(x
                .data()
                .iter()
                .zip(y.data())
                .map(|(a, b)| (a - b) * (a - b))
                .sum::<f64>()
                / x.len() as f64),
            LossKind::ExactSign => exact_sign_mismatch_count(x, y, None, false),
            LossKind::PersistenceWasserstein => {
                persistence_wasserstein(x, y, 2.0, InfiniteDeathPolicy::CapAtGlobalMax)
            }
            LossKind::CorrelationDistance => pairwise_correlation_distance(x, y, None),
        }
    }
}

impl fmt::Display for LossKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for LossKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "dsl" => Ok(LossKind::Dsl),
            "mse" => Ok(LossKind::Mse),
            "exact-sign" | "exactsign" | "exact" => Ok(LossKind::ExactSign),
            "persistence-wasserstein" | "persistencewasserstein" | "persistence" | "pw" => {
                Ok(LossKind::PersistenceWasserstein)
            }
            "correlation-distance" | "correlationdistance" | "corrdist" => {
                Ok(LossKind::CorrelationDistance)
            }
            other => Err(Error::Config(format!("unknown loss kind {other:?}"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct BenchRecord {
    pub loss_kind: LossKind,
    pub rank: usize,
    pub elements: usize,
    /// Median over repetitions.
    pub wall_time_seconds: f64,
    pub repetitions: usize,
    /// Peak bytes allocated during one evaluation, when a
    /// [`CountingAllocator`] is installed.
    pub peak_alloc_bytes: Option<usize>,
}

pub const DEFAULT_TIME_BUDGET: f64 = 1.0;

/// Extents of the benchmark tensor for a target element count: every side
/// gets `round(size^(1/rank))`, at least 2.
pub fn bench_shape(rank: usize, size: usize) -> Vec<usize> {
    let side = (size as f64).powf(1.0 / rank as f64).round().max(2.0) as usize;
    vec![side; rank]
}

/// Deterministic pair of uniform random tensors for `(seed, rank, size)`.
pub fn bench_inputs(rank: usize, size: usize, seed: u64) -> Result<(Tensor, Tensor)> {
    let shape = bench_shape(rank, size);
    let n: usize = shape.iter().product();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(((rank as u64) << 40) | size as u64);
    let mut draw = || (0..n).map(|_| rng.random::<f64>()).collect::<Vec<_>>();
    let x = Tensor::new(shape.clone(), draw())?;
    let y = Tensor::new(shape, draw())?;
    Ok((x, y))
}

/// Times every `(kind, rank, size)` combination in that order.
///
/// `sizes` are target element counts and must be ascending. Once a kind's
/// median exceeds `time_budget_seconds` at some rank, its larger sizes at
/// that rank are skipped. Repetitions also stop early once more than half
/// of the requested ones are over budget, since the median is then decided.
pub fn benchmark_losses(
    kinds: &[LossKind],
    ranks: &[usize],
    sizes: &[usize],
    repetitions: usize,
    time_budget_seconds: f64,
    seed: u64,
) -> Result<Vec<BenchRecord>> {
    if repetitions < 3 {
        return Err(Error::Config("at least 3 repetitions are required".into()));
    }
    if sizes.is_empty() || sizes.contains(&0) || sizes.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::Config("sizes must be positive and strictly ascending".into()));
    }
    if ranks.iter().any(|&r| r == 0 || r > 3) {
        return Err(Error::Config("benchmark ranks must be 1, 2 or 3".into()));
    }
    if !(time_budget_seconds > 0.0) {
        return Err(Error::Config("time budget must be positive".into()));
    }
    let mut records = Vec::new();
    for &kind in kinds {
        for &rank in ranks {
            for &size in sizes {
                let (x, y) = bench_inputs(rank, size, seed)?;
                let record = time_one(kind, &x, &y, repetitions, time_budget_seconds)?;
                let over = record.wall_time_seconds > time_budget_seconds;
                records.push(record);
                if over {
                    break;
                }
            }
        }
    }
    Ok(records)
}

fn time_one(kind: LossKind, x: &Tensor, y: &Tensor, reps: usize, budget: f64) -> Result<BenchRecord> {
    let mut times = Vec::with_capacity(reps);
    let mut peak = None;
    let mut over = 0;
    for _ in 0..reps {
        let before = CountingAllocator::reset_peak();
        let start = Instant::now();
        black_box(kind.evaluate(black_box(x), black_box(y))?);
        let t = start.elapsed().as_secs_f64();
        if let Some(base) = before {
            let p = CountingAllocator::peak().saturating_sub(base);
            peak = Some(peak.map_or(p, |q: usize| q.max(p)));
        }
        times.push(t);
        if t > budget {
            over += 1;
            if over * 2 > reps {
                break;
            }
        }
    }
    times.sort_by(f64::total_cmp);
    // With early stopping the upper half is all over budget, so the median
    // of the full run would be over budget as well.
    let median = if times.len() < reps {
        times[times.len() - 1]
    } else {
        times[times.len() / 2]
    };
    Ok(BenchRecord {
        loss_kind: kind,
        rank: x.rank(),
        elements: x.len(),
        wall_time_seconds: median,
        repetitions: times.len(),
        peak_alloc_bytes: peak,
    })
}

/// CSV with header
/// `loss_kind,rank,elements,wall_time_seconds,repetitions,peak_alloc_bytes`;
/// the last field is empty when unknown.
pub fn bench_csv(records: &[BenchRecord]) -> String {
    let mut out =
        String::from("loss_kind,rank,elements,wall_time_seconds,repetitions,peak_alloc_bytes\n");
    for r in records {
        let peak = r.peak_alloc_bytes.map(|p| p.to_string()).unwrap_or_default();
        out.push_str(&format!(
            "{},{},{},{:e},{},{}\n",
            r.loss_kind, r.rank, r.elements, r.wall_time_seconds, r.repetitions, peak
        ));
    }
    out
}

static CURRENT: AtomicUsize = AtomicUsize::new(0);
static PEAK: AtomicUsize = AtomicUsize::new(0);
static ACTIVE: AtomicBool = AtomicBool::new(false);

/// System allocator wrapper that tracks live and peak heap bytes.
/// Install it with `#[global_allocator]` in a binary to get
/// `peak_alloc_bytes` in benchmark records.
pub struct CountingAllocator;

impl CountingAllocator {
    /// Sets the peak to the current live size and returns that size, or
    /// `None` if the allocator is not installed.
    fn reset_peak() -> Option<usize> {
        if !ACTIVE.load(Ordering::Relaxed) {
            return None;
        }
        let now = CURRENT.load(Ordering::Relaxed);
        PEAK.store(now, Ordering::Relaxed);
        Some(now)
    }

    fn peak() -> usize {
        PEAK.load(Ordering::Relaxed)
    }
}

unsafe impl GlobalAlloc for CountingAllocator {
    unsafe fn alloc(&self, layout: Layout) -> *mut u8 {
        let p = unsafe { System.alloc(layout) };
        if !p.is_null() {
            ACTIVE.store(true, Ordering::Relaxed);
            let now = CURRENT.fetch_add(layout.size(), Ordering::Relaxed) + layout.size();
            PEAK.fetch_max(now, Ordering::Relaxed);
        }
        p
    }

    unsafe fn dealloc(&self, ptr: *mut u8, layout: Layout) {
        unsafe { System.dealloc(ptr, layout) };
        CURRENT.fetch_sub(layout.size(), Ordering::Relaxed);
    }
}
