//! Harness-level properties: determinism across worker counts, replication
//! structure and agreement between the selection rules and direct fits.

use twostep::data::{sign_pattern, write_matrix_csv, SUPPORT_EPS};
use twostep::fixtures::random_dataset;
use twostep::sim::normality::{run_normality, NormalityConfig};
use twostep::sim::{
    run_experiment, run_prediction_experiment, BetaSpec, CovarianceSpec, ExperimentConfig, LambdaRule, Outcome,
    Placement, Replications,
};
use twostep::{Dataset, Procedure};

fn selection(fixed_design: bool) -> ExperimentConfig {
    ExperimentConfig {
        name: "sel".into(),
        n: 40,
        p: 10,
        s: 3,
        covariance: CovarianceSpec::Wishart { df: None },
        beta: BetaSpec::symmetric_uniform(),
        sigma2: 0.3,
        replications: Replications { outer: 4, inner: 5 },
        methods: ["Lasso", "NG-Ridge", "ALasso-Lasso", "HT-OLS", "HT-Univ"]
            .iter()
            .map(|s| s.to_string())
            .collect(),
        lambda_rule: LambdaRule::Oracle,
        fixed_design,
        scale_columns: false,
        n_test: 0,
        grid_points: 60,
        bootstrap: 50,
        seed: 77,
    }
}

#[test]
fn results_do_not_depend_on_worker_count() {
    for fixed in [false, true] {
        let cfg = selection(fixed);
        let a = serde_json::to_string(&run_experiment(&cfg, 1).unwrap()).unwrap();
        let b = serde_json::to_string(&run_experiment(&cfg, 3).unwrap()).unwrap();
        assert_eq!(a, b);
    }
}

#[test]
fn outcome_grid_follows_the_replication_counts() {
    let res = run_experiment(&selection(true), 0).unwrap();
    assert_eq!(res.outcomes.len(), 4);
    assert!(res.outcomes.iter().all(|o| o.len() == 5 && o.iter().all(|r| r.len() == 5)));
    assert_eq!(res.designs.len(), 4);
    assert!(res.designs.iter().all(|d| d.eta_inf.is_finite() && d.beta_star.len() == 10));
    let records = res.records();
    assert_eq!(records.len(), 4 * 5);
    for r in &records {
        assert_eq!(r.replications, 5);
        let rate = r.success_rate.unwrap();
        assert!((0.0..=1.0).contains(&rate));
    }
    // selection runs carry neither prediction error nor counts
    assert!(res
        .outcomes
        .iter()
        .flatten()
        .flatten()
        .all(|o| matches!(o, Outcome::Done { rpe: None, .. } | Outcome::Failed { .. })));
}

#[test]
fn seeds_and_scales_change_what_they_should() {
    let cfg = selection(false);
    let base = run_experiment(&cfg, 0).unwrap();
    let mut other = cfg.clone();
    other.seed += 1;
    let moved = run_experiment(&other, 0).unwrap();
    assert_ne!(base.designs[0].beta_star, moved.designs[0].beta_star);
    let half = run_experiment(&cfg.scaled(0.5), 0).unwrap();
    assert_eq!((half.outcomes.len(), half.outcomes[0].len()), (2, 3));
    // outer draws are keyed by index, so a smaller run shares its prefix
    assert_eq!(half.designs[0].beta_star, base.designs[0].beta_star);
}

#[test]
fn prediction_runs_report_rpe_and_counts() {
    let cfg = ExperimentConfig {
        name: "pred".into(),
        n: 40,
        p: 30,
        s: 4,
        covariance: CovarianceSpec::Ar { rho: 0.5 },
        beta: BetaSpec::Tiered {
            values: vec![2.0, 0.5],
            counts: vec![2, 2],
            placement: Placement::Random,
        },
        sigma2: 1.0,
        replications: Replications { outer: 6, inner: 1 },
        methods: vec!["Lasso".into(), "HT-Lasso".into(), "ALasso-Ridge".into(), "HT-OLS".into()],
        lambda_rule: LambdaRule::Cv { folds: 5 },
        fixed_design: false,
        scale_columns: true,
        n_test: 200,
        grid_points: 100,
        bootstrap: 40,
        seed: 3,
    };
    let summary = run_prediction_experiment(&cfg, 0).unwrap();
    assert_eq!(summary.len(), 4);
    for m in &summary[..3] {
        let rpe = m.median_rpe.unwrap();
        assert!(rpe > 0.0 && rpe.is_finite(), "{}: {rpe}", m.method);
        assert!(m.rpe_se.unwrap() >= 0.0);
        assert!(m.median_tp.unwrap() <= 4.0);
    }
    // p < n, so the OLS first stage is defined
    assert_eq!(summary[3].method, "HT-OLS");
    assert!(summary[3].median_rpe.is_some());
    let mut no_test = cfg.clone();
    no_test.n_test = 0;
    assert!(run_prediction_experiment(&no_test, 0).is_err());
}

#[test]
fn ols_methods_are_not_applicable_when_p_reaches_n() {
    let mut cfg = selection(false);
    cfg.p = 50;
    cfg.replications = Replications { outer: 2, inner: 2 };
    let res = run_experiment(&cfg, 0).unwrap();
    let m = res.methods.iter().position(|m| m == "HT-OLS").unwrap();
    assert!(res.outcomes.iter().flatten().all(|r| r[m] == Outcome::NotApplicable));
    let rec = res.records().into_iter().find(|r| r.method == "HT-OLS").unwrap();
    assert_eq!(rec.success_rate, None);
}

#[test]
fn normality_statistic_is_reproducible() {
    let cfg = NormalityConfig::standard(200, 5);
    let a = run_normality(&cfg).unwrap();
    assert_eq!(a.statistics, run_normality(&cfg).unwrap().statistics);
    assert_eq!(a.statistics.len() + a.failures, 200);
    assert!(a.mean.abs() < 0.3 && (0.6..1.5).contains(&a.variance), "{} {}", a.mean, a.variance);
}

#[test]
fn csv_round_trip_feeds_the_fitters() {
    let dir = tempfile::tempdir().unwrap();
    let d = random_dataset(30, 4, 6);
    let names: Vec<String> = ["a", "b", "c", "d"].iter().map(|s| s.to_string()).collect();
    write_matrix_csv(&dir.path().join("x.csv"), &names, d.x()).unwrap();
    let y = d.y().clone().insert_axis(ndarray::Axis(1));
    write_matrix_csv(&dir.path().join("y.csv"), &["y".to_string()], &y).unwrap();
    let (read_names, back) = Dataset::from_csv(&dir.path().join("x.csv"), &dir.path().join("y.csv")).unwrap();
    assert_eq!(read_names, names);
    assert_eq!(back, d);
    let proc: Procedure = "ALasso-Ridge".parse().unwrap();
    let std = back.standardize().unwrap();
    let (init, path) = proc.fit_path(&std, 1, 30).unwrap();
    let last = path.len() - 1;
    let point = proc.fit_at(&std, init.as_ref(), path.lambdas[last]).unwrap();
    assert_eq!(
        sign_pattern(point.beta.view(), SUPPORT_EPS),
        path.signs[last],
        "point fit and path disagree"
    );
}
