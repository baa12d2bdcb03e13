use std::collections::BTreeMap;
use std::sync::atomic::{AtomicBool, AtomicUsize, Ordering};
use std::sync::mpsc;

/// Runs `work` over `items` on up to `workers` threads and hands results to
/// `sink` on the calling thread in item order, as soon as every earlier item
/// has been delivered. If `sink` fails, no further items are started and the
/// error is returned once in-flight work drains.
pub fn map_ordered<T, R, E, W, S>(items: &[T], workers: usize, work: W, mut sink: S) -> Result<(), E>
where
    T: Sync,
    R: Send,
    W: Fn(&T) -> R + Sync,
    S: FnMut(usize, R) -> Result<(), E>,
{
    if items.is_empty() {
        return Ok(());
    }
    let workers = workers.clamp(1, items.len());
    let next = AtomicUsize::new(0);
    let stop = AtomicBool::new(false);
    let (tx, rx) = mpsc::channel::<(usize, R)>();

    std::thread::scope(|scope| {
        for _ in 0..workers {
            let tx = tx.clone();
            let (next, stop, work) = (&next, &stop, &work);
            scope.spawn(move || loop {
                if stop.load(Ordering::SeqCst) {
                    return;
                }
                let i = next.fetch_add(1, Ordering::SeqCst);
                if i >= items.len() {
                    return;
                }
                if tx.send((i, work(&items[i]))).is_err() {
                    return;
                }
            });
        }
        drop(tx);

        let mut pending = BTreeMap::new();
        let mut emit = 0;
        let mut failure = None;
        for (i, r) in rx {
            if failure.is_some() {
                continue;
            }
            pending.insert(i, r);
            while let Some(r) = pending.remove(&emit) {
                if let Err(e) = sink(emit, r) {
                    stop.store(true, Ordering::SeqCst);
                    failure = Some(e);
                    break;
                }
                emit += 1;
            }
        }
        failure.map_or(Ok(()), Err)
    })
}
