//! In-process batch executor with per-worker deques and job stealing.
//!
//! Jobs are split across workers up front (proportionally to their cost
//! hints when every job has one), each worker drains its own deque from the
//! front, and an idle worker steals from the back of the fullest deque.
//! Results always come back in job-index order, so the worker count and the
//! steal schedule only show up in [`ExecutorStats`].

use std::collections::VecDeque;
use std::panic::{self, AssertUnwindSafe};
use std::sync::Mutex;
use std::time::{Duration, Instant};

use thiserror::Error;

#[derive(Clone, Debug)]
pub struct Job<T> {
    pub index: usize,
    pub payload: T,
    pub cost_hint: Option<f64>,
}

impl<T> Job<T> {
    pub fn new(index: usize, payload: T) -> Self {
        Job {
            index,
            payload,
            cost_hint: None,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct ExecutorStats {
    /// Jobs finished (successfully or not) by each worker.
    pub completed: Vec<usize>,
    pub steals: usize,
    pub retries: usize,
    pub wall_time: Duration,
}

#[derive(Clone, Debug, PartialEq, Eq, Error)]
#[error("job {index} failed after {attempts} attempts: {message}")]
pub struct JobFailure {
    pub index: usize,
    pub attempts: u32,
    pub message: String,
}

/// Attempts per job before it is reported as failed.
pub const MAX_ATTEMPTS: u32 = 2;

pub fn default_workers() -> usize {
    std::thread::available_parallelism().map_or(1, |n| n.get())
}

/// Runs every job and returns results sorted by job index.
pub fn submit_batch<T, R, F>(
    jobs: &[Job<T>],
    workers: usize,
    run: F,
) -> (Vec<Result<R, JobFailure>>, ExecutorStats)
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> R + Sync,
{
    let start = Instant::now();
    let workers = workers.clamp(1, jobs.len().max(1));
    let queues: Vec<Mutex<VecDeque<usize>>> = partition(jobs, workers)
        .into_iter()
        .map(|q| Mutex::new(q.into()))
        .collect();
    let steals = Mutex::new(0usize);
    let retries = Mutex::new(0usize);

    let per_worker: Vec<Vec<(usize, Result<R, JobFailure>)>> = std::thread::scope(|scope| {
        let handles: Vec<_> = (0..workers)
            .map(|me| {
                let (queues, run, steals, retries) = (&queues, &run, &steals, &retries);
                scope.spawn(move || {
                    let mut done = Vec::new();
                    while let Some(pos) = next_job(queues, me, steals) {
                        let job = &jobs[pos];
                        let mut attempts = 0;
                        let outcome = loop {
                            attempts += 1;
                            match panic::catch_unwind(AssertUnwindSafe(|| run(&job.payload))) {
                                Ok(r) => break Ok(r),
                                Err(cause) if attempts >= MAX_ATTEMPTS => {
                                    break Err(JobFailure {
                                        index: job.index,
                                        attempts,
                                        message: panic_message(cause.as_ref()),
                                    })
                                }
                                Err(_) => *retries.lock().unwrap() += 1,
                            }
                        };
                        done.push((pos, outcome));
                    }
                    done
                })
            })
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("worker threads catch job panics"))
            .collect()
    });

    let completed = per_worker.iter().map(Vec::len).collect();
    let mut slots: Vec<Option<Result<R, JobFailure>>> = (0..jobs.len()).map(|_| None).collect();
    for (pos, r) in per_worker.into_iter().flatten() {
        slots[pos] = Some(r);
    }
    let mut ordered: Vec<(usize, Result<R, JobFailure>)> = slots
        .into_iter()
        .enumerate()
        .map(|(pos, r)| (jobs[pos].index, r.expect("every job runs exactly once")))
        .collect();
    ordered.sort_by_key(|(index, _)| *index);
    let stats = ExecutorStats {
        completed,
        steals: steals.into_inner().unwrap(),
        retries: retries.into_inner().unwrap(),
        wall_time: start.elapsed(),
    };
    (ordered.into_iter().map(|(_, r)| r).collect(), stats)
}

/// Convenience wrapper: one job per item, indexed by position.
pub fn map_batch<T, R, F>(items: &[T], workers: usize, run: F) -> (Vec<Result<R, JobFailure>>, ExecutorStats)
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> R + Sync,
{
    let jobs: Vec<Job<&T>> = items.iter().enumerate().map(|(i, t)| Job::new(i, t)).collect();
    submit_batch(&jobs, workers, |t| run(t))
}

fn next_job(queues: &[Mutex<VecDeque<usize>>], me: usize, steals: &Mutex<usize>) -> Option<usize> {
    if let Some(pos) = queues[me].lock().unwrap().pop_front() {
        return Some(pos);
    }
    loop {
        let victim = queues
            .iter()
            .enumerate()
            .filter(|(i, _)| *i != me)
            .map(|(i, q)| (i, q.lock().unwrap().len()))
            .filter(|(_, len)| *len > 0)
            .max_by(|a, b| a.1.cmp(&b.1).then(b.0.cmp(&a.0)))?;
        // The victim may have drained in the meantime; look again if so.
        if let Some(pos) = queues[victim.0].lock().unwrap().pop_back() {
            *steals.lock().unwrap() += 1;
            return Some(pos);
        }
    }
}

/// Contiguous initial split. With cost hints on every job, each worker gets
/// roughly the same total cost; otherwise the same number of jobs.
fn partition<T>(jobs: &[Job<T>], workers: usize) -> Vec<Vec<usize>> {
    let mut out = vec![Vec::new(); workers];
    let costs: Option<Vec<f64>> = jobs
        .iter()
        .map(|j| j.cost_hint.filter(|c| c.is_finite() && *c > 0.0))
        .collect();
    match costs {
        Some(costs) if !costs.is_empty() => {
            let total: f64 = costs.iter().sum();
            let mut before = 0.0;
            for (pos, c) in costs.iter().enumerate() {
                let mid = before + c / 2.0;
                let w = ((mid / total * workers as f64) as usize).min(workers - 1);
                out[w].push(pos);
                before += c;
            }
        }
        _ => {
            for pos in 0..jobs.len() {
                out[pos * workers / jobs.len().max(1)].push(pos);
            }
        }
    }
    out
}

fn panic_message(cause: &(dyn std::any::Any + Send)) -> String {
    if let Some(s) = cause.downcast_ref::<&str>() {
        s.to_string()
    } else if let Some(s) = cause.downcast_ref::<String>() {
        s.clone()
    } else {
        "job panicked".to_string()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::sync::atomic::{AtomicUsize, Ordering};

    fn jobs(n: usize) -> Vec<Job<u64>> {
        (0..n).map(|i| Job::new(i, i as u64)).collect()
    }

    #[test]
    fn results_are_independent_of_worker_count() {
        let work = |x: &u64| (0..1000u64).fold(*x, |acc, i| acc.wrapping_mul(6364136223846793005).wrapping_add(i));
        let (one, s1) = submit_batch(&jobs(10), 1, work);
        let (many, s8) = submit_batch(&jobs(10), 8, work);
        assert_eq!(one, many);
        assert_eq!(s1.completed.iter().sum::<usize>(), 10);
        assert_eq!(s8.completed.iter().sum::<usize>(), 10);
    }

    #[test]
    fn failing_job_is_retried_once_then_reported() {
        let attempts = AtomicUsize::new(0);
        let (results, stats) = submit_batch(&jobs(10), 4, |x| {
            if *x == 3 {
                attempts.fetch_add(1, Ordering::SeqCst);
                panic!("job three always fails");
            }
            *x * 2
        });
        assert_eq!(attempts.load(Ordering::SeqCst), 2);
        assert_eq!(stats.retries, 1);
        let failures: Vec<_> = results.iter().enumerate().filter(|(_, r)| r.is_err()).collect();
        assert_eq!(failures.len(), 1);
        assert_eq!(failures[0].0, 3);
        let f = results[3].as_ref().unwrap_err();
        assert_eq!(f.attempts, 2);
        assert!(f.message.contains("always fails"));
        assert_eq!(results[4], Ok(8));
    }

    #[test]
    fn flaky_job_succeeds_on_retry() {
        let seen = AtomicUsize::new(0);
        let (results, stats) = submit_batch(&jobs(3), 2, |x| {
            if *x == 1 && seen.fetch_add(1, Ordering::SeqCst) == 0 {
                panic!("first try fails");
            }
            *x
        });
        assert_eq!(results, vec![Ok(0), Ok(1), Ok(2)]);
        assert_eq!(stats.retries, 1);
    }

    #[test]
    fn stealing_balances_skewed_work() {
        // All the slow jobs start on worker 0.
        let mut js = jobs(16);
        for j in &mut js {
            j.cost_hint = Some(if j.index < 8 { 1.0 } else { 1000.0 });
        }
        let (results, stats) = submit_batch(&js, 4, |x| {
            if *x < 8 {
                std::thread::sleep(Duration::from_millis(5));
            }
            *x
        });
        assert_eq!(results.len(), 16);
        assert_eq!(stats.completed.iter().sum::<usize>(), 16);
    }

    #[test]
    fn results_follow_job_index_not_position() {
        let js = vec![Job::new(2, 20u64), Job::new(0, 0), Job::new(1, 10)];
        let (results, _) = submit_batch(&js, 2, |x| *x);
        assert_eq!(results, vec![Ok(0), Ok(10), Ok(20)]);
    }

    #[test]
    fn partition_respects_cost_hints() {
        let mut js = jobs(4);
        for (j, c) in js.iter_mut().zip([3.0, 1.0, 1.0, 1.0]) {
            j.cost_hint = Some(c);
        }
        assert_eq!(partition(&js, 2), vec![vec![0], vec![1, 2, 3]]);
        assert_eq!(partition(&jobs(5), 2), vec![vec![0, 1, 2], vec![3, 4]]);
    }

    #[test]
    fn empty_batch() {
        let (results, stats) = submit_batch(&jobs(0), 4, |x| *x);
        assert!(results.is_empty());
        assert_eq!(stats.completed, vec![0]);
    }
}
