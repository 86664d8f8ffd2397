//! Analytic gradients against central finite differences.

mod common;

use common::{max_rel_error, TOL};
use prisk::network::Arch;

#[test]
fn lstmca_gradients_match_finite_differences() {
    for seed in 0..20 {
        let (err, name) = max_rel_error(Arch::Lstmca, false, seed);
        assert!(err < TOL, "seed {seed}: {name} relative error {err:e}");
    }
}

#[test]
fn swapped_query_gradients_match_finite_differences() {
    for seed in 100..105 {
        let (err, name) = max_rel_error(Arch::Lstmca, true, seed);
        assert!(err < TOL, "seed {seed}: {name} relative error {err:e}");
    }
}

#[test]
fn baseline_gradients_match_finite_differences() {
    for seed in 200..210 {
        for arch in [Arch::Lstm, Arch::Fcnn] {
            let (err, name) = max_rel_error(arch, false, seed);
            assert!(err < TOL, "{arch:?} seed {seed}: {name} relative error {err:e}");
        }
    }
}
