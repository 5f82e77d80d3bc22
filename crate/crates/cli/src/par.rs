//! Minimal deterministic parallel map. Work is split into contiguous
//! chunks over scoped threads and results land by index, so the output is
//! identical for any thread count, including 1.

/// Applies `f(index, item)` to every item, using up to `threads` workers.
pub fn par_map<T, R, F>(items: &[T], threads: usize, f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(usize, &T) -> R + Sync,
{
    if threads <= 1 || items.len() <= 1 {
        return items.iter().enumerate().map(|(i, item)| f(i, item)).collect();
    }
    let workers = threads.min(items.len());
    let mut results: Vec<Option<R>> = Vec::with_capacity(items.len());
    results.resize_with(items.len(), || None);

    // Ceiling division so every item lands in exactly one chunk.
    let chunk = items.len().div_ceil(workers);
    std::thread::scope(|scope| {
        let mut slots: &mut [Option<R>] = &mut results;
        let mut offset = 0;
        while offset < items.len() {
            let take = chunk.min(items.len() - offset);
            let (head, tail) = slots.split_at_mut(take);
            slots = tail;
            let base = offset;
            let f = &f;
            scope.spawn(move || {
                for (i, slot) in head.iter_mut().enumerate() {
                    *slot = Some(f(base + i, &items[base + i]));
                }
            });
            offset += take;
        }
    });
    results.into_iter().map(|r| r.expect("all chunks filled")).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn preserves_order() {
        let items: Vec<u64> = (0..100).collect();
        let out = par_map(&items, 4, |i, &x| (i as u64) * 1000 + x * x);
        for (i, &v) in out.iter().enumerate() {
            assert_eq!(v, (i as u64) * 1000 + (i as u64) * (i as u64));
        }
    }

    #[test]
    fn thread_count_does_not_change_output() {
        let items: Vec<f64> = (0..37).map(|i| i as f64 * 0.13).collect();
        let seq = par_map(&items, 1, |i, &x| x.sin() + i as f64);
        for threads in [2, 3, 8, 64] {
            let par = par_map(&items, threads, |i, &x| x.sin() + i as f64);
            assert_eq!(seq, par);
        }
    }

    #[test]
    fn handles_empty_and_singleton() {
        let empty: Vec<u32> = vec![];
        assert!(par_map(&empty, 8, |_, &x| x).is_empty());
        assert_eq!(par_map(&[5u32], 8, |_, &x| x + 1), vec![6]);
    }
}
