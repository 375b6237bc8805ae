//! Order-preserving parallel map with a sequential fallback.
//!
//! With the `parallel` feature (default) and more than one worker, items run
//! on a dedicated rayon pool sized to the worker count. One worker, or a
//! build without the feature, runs sequentially. Either way the output
//! order matches the input order, which keeps downstream artifacts stable.

pub fn map_items<T, R, F>(items: Vec<T>, workers: usize, f: F) -> Vec<R>
where
    T: Send,
    R: Send,
    F: Fn(T) -> R + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        if workers > 1 {
            use rayon::prelude::*;
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(workers)
                .build()
                .expect("worker pool");
            return pool.install(|| items.into_par_iter().map(f).collect());
        }
    }
    let _ = workers;
    items.into_iter().map(f).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn preserves_input_order() {
        let items: Vec<u64> = (0..100).collect();
        let seq = map_items(items.clone(), 1, |x| x * 3);
        let par = map_items(items, 4, |x| x * 3);
        assert_eq!(seq, par);
        assert_eq!(seq[10], 30);
    }

    #[test]
    fn single_worker_stays_on_caller_thread() {
        let caller = std::thread::current().id();
        let ids = map_items(vec![1, 2, 3], 1, move |_| std::thread::current().id());
        assert!(ids.iter().all(|id| *id == caller));
    }
}
