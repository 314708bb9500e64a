mod support;

use ser_core::svm::{train_binary, GammaMode, KernelKind, KernelSpec, SolverConfig};
use support::{four_point_oracle, four_point_problems, linear, rbf};

const GAMMA: f64 = 0.5;

/// Largest |solver - oracle| dual objective gap over every grid problem.
pub fn worst_gap(kind: KernelKind) -> (f64, usize) {
    let spec = KernelSpec {
        kind,
        gamma: GammaMode::Fixed(GAMMA),
        c: 10.0,
    };
    let problems = four_point_problems();
    let mut worst: f64 = 0.0;
    for (pts, y) in &problems {
        let mut k = [[0.0; 4]; 4];
        for i in 0..4 {
            for j in 0..4 {
                k[i][j] = match kind {
                    KernelKind::Rbf => rbf(&pts[i], &pts[j], GAMMA),
                    KernelKind::Linear => linear(&pts[i], &pts[j]),
                };
            }
        }
        let x: Vec<Vec<f64>> = pts.iter().map(|p| p.to_vec()).collect();
        let (sol, _) = train_binary(&x, y, &spec, &SolverConfig::default()).unwrap();
        assert!(sol.converged);
        let oracle = four_point_oracle(&k, y, spec.c);
        worst = worst.max((sol.objective - oracle).abs());
    }
    (worst, problems.len())
}

#[test]
fn rbf_objective_matches_grid_oracle() {
    let (gap, n) = worst_gap(KernelKind::Rbf);
    assert_eq!(n, 126 * 7);
    assert!(gap < 1e-2, "worst gap {gap}");
}

#[test]
fn linear_objective_matches_grid_oracle() {
    let (gap, _) = worst_gap(KernelKind::Linear);
    assert!(gap < 1e-2, "worst gap {gap}");
}
