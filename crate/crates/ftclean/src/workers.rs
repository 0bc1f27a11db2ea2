//! Bounded worker pool over an indexed batch.

use std::sync::atomic::{AtomicBool, AtomicUsize, Ordering};
use std::sync::Mutex;

/// First failure of a batch.
#[derive(Debug)]
pub struct BatchFailure<E> {
    /// Lowest failing index observed.
    pub index: usize,
    /// Items that completed successfully before the batch stopped.
    pub done: usize,
    pub error: E,
}

/// Apply `f` to every item with at most `concurrency` in flight. Results come
/// back in input order. The batch stops scheduling new items after the first
/// error.
pub fn run_batch<T, R, E, F>(
    items: &[T],
    concurrency: usize,
    f: F,
) -> Result<Vec<R>, BatchFailure<E>>
where
    T: Sync,
    R: Send,
    E: Send,
    F: Fn(usize, &T) -> Result<R, E> + Sync,
{
    let workers = concurrency.max(1).min(items.len());
    if workers <= 1 {
        let mut out = Vec::with_capacity(items.len());
        for (i, item) in items.iter().enumerate() {
            match f(i, item) {
                Ok(r) => out.push(r),
                Err(error) => return Err(BatchFailure { index: i, done: i, error }),
            }
        }
        return Ok(out);
    }

    let next = AtomicUsize::new(0);
    let done = AtomicUsize::new(0);
    let stop = AtomicBool::new(false);
    let slots: Mutex<Vec<Option<R>>> = Mutex::new((0..items.len()).map(|_| None).collect());
    let failure: Mutex<Option<(usize, E)>> = Mutex::new(None);

    std::thread::scope(|scope| {
        for _ in 0..workers {
            scope.spawn(|| loop {
                if stop.load(Ordering::SeqCst) {
                    break;
                }
                let i = next.fetch_add(1, Ordering::SeqCst);
                if i >= items.len() {
                    break;
                }
                match f(i, &items[i]) {
                    Ok(r) => {
                        slots.lock().expect("result lock")[i] = Some(r);
                        done.fetch_add(1, Ordering::SeqCst);
                    }
                    Err(e) => {
                        stop.store(true, Ordering::SeqCst);
                        let mut slot = failure.lock().expect("failure lock");
                        if slot.as_ref().is_none_or(|(j, _)| i < *j) {
                            *slot = Some((i, e));
                        }
                    }
                }
            });
        }
    });

    if let Some((index, error)) = failure.into_inner().expect("failure lock") {
        return Err(BatchFailure { index, done: done.load(Ordering::SeqCst), error });
    }
    Ok(slots
        .into_inner()
        .expect("result lock")
        .into_iter()
        .map(|r| r.expect("every item completed"))
        .collect())
}
