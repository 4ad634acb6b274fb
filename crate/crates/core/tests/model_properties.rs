use hpa_dyn::integrator::{integrate, IntegrationConfig, StepMode};
use hpa_dyn::sensitivity::{
    analyze, correlation_matrix, rank_parameters, si_timeseries_with, SensitivityOptions,
};
use hpa_dyn::{Execution, HormoneState, ParamName, ParameterSet};
use nalgebra::DMatrix;

fn rel_gap(a: &[HormoneState], b: &[HormoneState]) -> f64 {
    let scale = b.iter().map(|s| s.max_abs()).fold(0.0, f64::max);
    a.iter()
        .zip(b)
        .map(|(x, y)| HormoneState::new(x.r - y.r, x.a - y.a, x.c - y.c).max_abs())
        .fold(0.0, f64::max)
        / scale
}

#[test]
fn burn_in_beyond_ten_days_changes_nothing() {
    let p = ParameterSet::default();
    let run = |days: f64| {
        integrate(
            &IntegrationConfig {
                burn_in: days * 1440.0,
                ..Default::default()
            },
            &p,
        )
        .unwrap()
    };
    let gap = rel_gap(&run(10.0).states, &run(20.0).states);
    assert!(gap <= 1e-6, "gap {gap}");
}

#[test]
fn trajectories_stay_nonnegative() {
    for scale in [0.2, 1.0, 5.0] {
        let p = ParameterSet::default()
            .with(ParamName::K1, 0.5703 * scale)
            .with(ParamName::Xi, 2.0 * scale);
        let traj = integrate(&IntegrationConfig::default(), &p).unwrap();
        assert!(traj
            .states
            .iter()
            .all(|s| s.r >= 0.0 && s.a >= 0.0 && s.c >= 0.0));
    }
}

#[test]
fn fixed_step_converges_to_adaptive() {
    let p = ParameterSet::default();
    let adaptive = integrate(&IntegrationConfig::default(), &p).unwrap();
    let fixed = |dt| {
        let t = integrate(
            &IntegrationConfig {
                mode: StepMode::Fixed,
                dt,
                ..Default::default()
            },
            &p,
        )
        .unwrap();
        rel_gap(&t.sample(&adaptive.times).unwrap(), &adaptive.states)
    };
    let (coarse, fine) = (fixed(4.0), fixed(2.0));
    assert!(fine < coarse);
    assert!(fine <= 1e-5, "dt=2 gap {fine}");
}

#[test]
fn feedback_free_si_error_shrinks_fourfold() {
    // C is proportional to 1/h3 here, so the central difference error is
    // e^2/(1-e^2) and halving e divides it by ~4.
    let p = ParameterSet {
        fixed_daylight: Some(0.7),
        ..ParameterSet::default().feedback_free()
    };
    let grid = [0.0, 300.0, 900.0];
    let err = |rel_step| {
        let opts = SensitivityOptions {
            rel_step,
            ..Default::default()
        };
        let k5 = si_timeseries_with(&p, ParamName::K5, &grid, &opts).unwrap();
        assert!(k5.iter().all(|v| (v - 1.0).abs() < 1e-9), "{k5:?}");
        let h3 = si_timeseries_with(&p, ParamName::H3, &grid, &opts).unwrap();
        (h3[1] + 1.0).abs()
    };
    let ratio = err(1e-2) / err(5e-3);
    assert!((ratio - 4.0).abs() < 0.05, "ratio {ratio}");
    assert!((err(1e-2) - 1e-4 / (1.0 - 1e-4)).abs() < 1e-9);
}

#[test]
fn decoupled_construction_isolates_adrenal_parameters() {
    // ACTH production constant: no CRH drive, no cortisol brake, frozen daylight
    let p = ParameterSet {
        k4: 1e-15,
        rho: 1e-15,
        fixed_daylight: Some(0.4),
        ..ParameterSet::default()
    };
    let grid: Vec<f64> = (0..24).map(|i| i as f64 * 60.0).collect();
    // constant SI series here, so no correlation matrix
    let report = rank_parameters(
        &p,
        &grid,
        &SensitivityOptions {
            fd_check: false,
            ..Default::default()
        },
    )
    .unwrap();
    use ParamName::*;
    for name in [
        K1, K2, K4, H1, RC, RA, Alpha, Beta, Delta, Phi, Psi, Xi, Rho,
    ] {
        let worst = report.aggregate(name).unwrap();
        assert!(worst < 1e-9, "{name}: {worst}");
    }
    for name in [K3, K5, H2, H3, RD, Gamma] {
        assert!(report.aggregate(name).unwrap() > 1e-3, "{name}");
    }
    assert!((report.aggregate(K5).unwrap() - 1.0).abs() < 1e-6);
}

#[test]
fn correlation_matrix_is_positive_semidefinite() {
    let grid: Vec<f64> = (0..96).map(|i| i as f64 * 15.0).collect();
    let opts = SensitivityOptions {
        fd_check: false,
        ..Default::default()
    };
    let report = analyze(&ParameterSet::default(), &grid, &opts).unwrap();
    let m = report.correlation.unwrap();
    let n = m.len();
    let mat = DMatrix::from_fn(n, n, |i, j| m[i][j]);
    assert_eq!(mat, mat.transpose());
    let eig = mat.symmetric_eigenvalues();
    assert!(eig.iter().all(|&l| l > -1e-9), "{eig}");
    assert!((0..n).all(|i| m[i][i] == 1.0));

    // recomputing from the series gives the same matrix
    let labels: Vec<String> = report
        .parameter_names
        .iter()
        .map(|p| p.to_string())
        .collect();
    assert_eq!(correlation_matrix(&labels, &report.si_series).unwrap(), m);
}

#[test]
fn sensitivity_report_is_execution_independent() {
    let grid: Vec<f64> = (0..48).map(|i| i as f64 * 30.0).collect();
    let run = |exec| {
        let opts = SensitivityOptions {
            exec,
            integration: IntegrationConfig {
                burn_in: 2880.0,
                ..SensitivityOptions::default().integration
            },
            ..Default::default()
        };
        analyze(&ParameterSet::default(), &grid, &opts).unwrap()
    };
    assert_eq!(run(Execution::Sequential), run(Execution::Parallel));
}
