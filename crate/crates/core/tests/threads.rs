//! Results must not depend on the size of the worker pool.

use incproc::generator::{martingale_test, ExponentialFn};
use incproc::levy::{map_paths, LevyModel};

fn in_pool<R: Send>(threads: usize, job: impl FnOnce() -> R + Send) -> R {
    rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap().install(job)
}

#[test]
fn path_statistics_match_across_pool_sizes() {
    let s = LevyModel::stable(0.5).unwrap();
    let run = || map_paths(&s, 1.0, 1e-4, 11, 400, |p| p.sizes.iter().sum::<f64>()).unwrap();
    let one = in_pool(1, run);
    for threads in [2, 4] {
        let many = in_pool(threads, run);
        assert_eq!(one.iter().map(|x| x.to_bits()).collect::<Vec<_>>(), many.iter().map(|x| x.to_bits()).collect::<Vec<_>>());
    }
}

#[test]
fn martingale_report_matches_across_pool_sizes() {
    let g = LevyModel::gamma(1.0, 1.0).unwrap();
    let run = || martingale_test(&g, &ExponentialFn::one_minus_exp(), 0.0, 1.0, 2000, 1e-4, 5).unwrap().to_text();
    assert_eq!(in_pool(1, run), in_pool(3, run));
}
