//! Deterministic parallel replication.
//!
//! Replications are split into contiguous blocks, one per worker, and the
//! results are gathered in replication order, so the output does not depend
//! on the worker count.

use std::io::Write;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::thread;

use toplr_core::experiments::{
    prepare, prepare_power, ExperimentDesign, McSummary, PowerReplicate, PowerRow, Replicate,
};

pub fn default_workers() -> usize {
    thread::available_parallelism().map(|n| n.get()).unwrap_or(1)
}

/// Evaluate `f(0), ..., f(count - 1)` on `workers` threads. On failure the
/// error of the lowest failing index is returned.
pub fn gather<T, F>(count: usize, workers: usize, progress: bool, f: F) -> toplr_core::Result<Vec<T>>
where
    T: Send,
    F: Fn(u64) -> toplr_core::Result<T> + Sync,
{
    let workers = workers.clamp(1, count.max(1));
    let block = count.div_ceil(workers);
    let done = AtomicUsize::new(0);
    let step = (count / 20).max(1);
    let tick = || {
        let d = done.fetch_add(1, Ordering::Relaxed) + 1;
        if progress && (d % step == 0 || d == count) {
            eprint!("\rreplications: {d}/{count}");
            if d == count {
                eprintln!();
            }
            let _ = std::io::stderr().flush();
        }
    };
    let blocks: Vec<Result<Vec<T>, (usize, toplr_core::Error)>> = thread::scope(|s| {
        let handles: Vec<_> = (0..workers)
            .map(|w| {
                let (f, tick) = (&f, &tick);
                s.spawn(move || {
                    let lo = w * block;
                    let hi = ((w + 1) * block).min(count);
                    let mut out = Vec::with_capacity(hi.saturating_sub(lo));
                    for r in lo..hi {
                        out.push(f(r as u64).map_err(|e| (r, e))?);
                        tick();
                    }
                    Ok(out)
                })
            })
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("replication worker panicked"))
            .collect()
    });
    let mut out = Vec::with_capacity(count);
    let mut first_err: Option<(usize, toplr_core::Error)> = None;
    for b in blocks {
        match b {
            Ok(v) => out.extend(v),
            Err((r, e)) => {
                if first_err.as_ref().map_or(true, |(r0, _)| r < *r0) {
                    first_err = Some((r, e));
                }
            }
        }
    }
    match first_err {
        Some((_, e)) => Err(e),
        None => Ok(out),
    }
}

/// Run the design's theorem check on `workers` threads.
pub fn run_experiment(
    design: &ExperimentDesign,
    workers: usize,
    progress: bool,
) -> toplr_core::Result<(McSummary, Vec<Replicate>)> {
    let prepared = prepare(design)?;
    let reps = gather(prepared.replications(), workers, progress, |r| prepared.replicate(r))?;
    Ok((prepared.summarize(&reps), reps))
}

pub fn run_size_power(
    design: &ExperimentDesign,
    u_grid: &[f64],
    workers: usize,
    progress: bool,
) -> toplr_core::Result<Vec<PowerRow>> {
    let prepared = prepare_power(design, u_grid)?;
    let reps: Vec<PowerReplicate> = gather(prepared.replications(), workers, progress, |r| prepared.replicate(r))?;
    Ok(prepared.summarize(&reps))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn order_is_independent_of_workers() {
        let one = gather(37, 1, false, |r| Ok(r * r)).unwrap();
        for w in [2, 5, 8, 64] {
            assert_eq!(gather(37, w, false, |r| Ok(r * r)).unwrap(), one);
        }
        assert!(gather(0, 4, false, Ok).unwrap().is_empty());
    }

    #[test]
    fn lowest_failing_index_wins() {
        let f = |r: u64| {
            if r == 5 || r == 30 {
                Err(toplr_core::Error::DegenerateStep(format!("{r}")))
            } else {
                Ok(r)
            }
        };
        for w in [1, 3, 8] {
            assert_eq!(gather(40, w, false, f).unwrap_err(), toplr_core::Error::DegenerateStep("5".into()));
        }
    }
}
