mod support;

use ser_core::eval::{run_svm_sweep, SweepConfig};
use support::{additive_signal_features, synthetic_records};

fn sweep(points: Vec<usize>, runs: usize) -> ser_core::eval::SweepResult {
    let records = synthetic_records(20);
    let cfg = SweepConfig::new(points, runs, 5);
    run_svm_sweep(&records, |n| Ok(additive_signal_features(&records, n, 17)), &cfg).unwrap()
}

#[test]
fn raw_row_count_is_kernels_times_points_times_runs() {
    let r = sweep(vec![10, 20], 2);
    assert_eq!(r.raw.len(), 8);
    assert_eq!(r.means.len(), 4);
    for m in &r.means {
        let runs: Vec<f64> = r
            .raw
            .iter()
            .filter(|row| row.kernel == m.kernel && row.n_mfcc == m.n_mfcc)
            .map(|row| row.accuracy)
            .collect();
        assert_eq!(runs.len(), 2);
        assert!((m.mean_accuracy - runs.iter().sum::<f64>() / 2.0).abs() < 1e-12);
    }
}

#[test]
fn accuracy_grows_with_informative_coefficients() {
    let points = vec![2, 5, 10, 20, 40, 80];
    let r = sweep(points.clone(), 3);
    for kernel in ["rbf", "linear"] {
        let acc: Vec<f64> = points
            .iter()
            .map(|&n| r.means.iter().find(|m| m.kernel == kernel && m.n_mfcc == n).unwrap().mean_accuracy)
            .collect();
        for w in acc.windows(2) {
            assert!(w[1] >= w[0] - 0.05, "{kernel}: {acc:?}");
        }
        assert!(acc.last().unwrap() > &(acc[0] + 0.2), "{kernel}: {acc:?}");
    }
}

#[test]
fn sweep_csv_is_reproducible() {
    let csv = |r: &ser_core::eval::SweepResult| {
        let mut buf = Vec::new();
        r.write_raw_csv(&mut buf).unwrap();
        r.write_mean_csv(&mut buf).unwrap();
        buf
    };
    assert_eq!(csv(&sweep(vec![10, 30], 2)), csv(&sweep(vec![10, 30], 2)));
}
