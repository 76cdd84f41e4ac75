use proptest::prelude::*;

use toric_bergman::lab::{run_convergence, ExperimentConfig};
use toric_bergman::norming::{
    build_norming_table, canonical_log_q, canonical_reference, log_binomial, omega, q_ratio, r_ratio, ratio_table,
    stirling_reference, TableCache,
};
use toric_bergman::potentials::{make_metric, GeodesicFamily, MetricPotential};
use toric_bergman::quadrature::LaplaceOptions;

fn default_family() -> GeodesicFamily {
    ExperimentConfig::default().family().unwrap()
}

#[test]
fn ratios_are_bounded_by_one() {
    // Hölder in t gives Q_t <= Q_0^{1-t} Q_1^t
    let fam = default_family();
    let cache = TableCache::new(LaplaceOptions::default());
    for n in [16, 128, 1024] {
        for t in [0.1, 0.25, 0.5, 0.75, 0.9] {
            let table = ratio_table(&cache, &fam, t, n).unwrap();
            for &r in &table.r {
                assert!((0.99..=1.0 + 1e-12).contains(&r), "N = {n}, t = {t}: R = {r}");
            }
        }
    }
}

#[test]
fn ratio_endpoints_are_one() {
    let fam = default_family();
    let cache = TableCache::new(LaplaceOptions::default());
    for k in [0, 5, 64] {
        assert!((r_ratio(&cache, &fam, 0.0, 64, k).unwrap() - 1.0).abs() < 1e-15);
        assert!((r_ratio(&cache, &fam, 1.0, 64, k).unwrap() - 1.0).abs() < 1e-15);
    }
    assert!(r_ratio(&cache, &fam, 0.5, 64, 65).is_err());
}

#[test]
fn canonical_table_is_beta() {
    let m = MetricPotential::canonical();
    for n in [1, 2, 7, 100] {
        let table = build_norming_table(&m, n).unwrap();
        for k in 0..=n {
            let want = canonical_reference(n, k).unwrap();
            assert!((table.log_qcal[k] - want).abs() < 1e-11, "N = {n}, k = {k}");
            assert!((q_ratio(&table, n, k).unwrap() - 1.0).abs() < 1e-11);
        }
    }
}

#[test]
fn q_error_is_monotone_and_interior_rate_is_first_order() {
    let report = run_convergence(&ExperimentConfig::default()).unwrap();
    assert!(report.q_err.windows(2).all(|w| w[1] <= w[0]), "{:?}", report.q_err);
    // interior error halves with every doubling of N
    for w in report.q_err_interior.windows(2) {
        let ratio = w[1] / w[0];
        assert!((0.4..=0.6).contains(&ratio), "ratio {ratio}");
    }
}

#[test]
fn omega_limits() {
    let fam = default_family();
    for t in [0.0, 0.3, 1.0] {
        assert_eq!(omega(&fam, t, 0.0).unwrap(), 1.0);
        assert_eq!(omega(&fam, t, 1.0).unwrap(), 1.0);
    }
    // f0'' = 0.5, so Omega(1/2) = (1 + 0.125)^{-1/2}
    assert!((omega(&fam, 0.0, 0.5).unwrap() - 1.125f64.powf(-0.5)).abs() < 1e-15);
    assert!(omega(&fam, 0.0, 1.5).is_err());
}

#[test]
fn stirling_tracks_binomial_in_interior() {
    for n in [100usize, 1000, 10000] {
        for k in [n / 4, n / 2, 3 * n / 4] {
            let gap = (stirling_reference(n, k).unwrap() - log_binomial(n, k)).abs();
            assert!(gap < 1.0 / n as f64, "N = {n}, k = {k}: {gap}");
        }
    }
    assert!(stirling_reference(10000, 3).is_err());
}

#[test]
fn csv_dump_has_one_row_per_lattice_point() {
    let m = make_metric(&[0.0, 0.0, 0.25], 1000).unwrap();
    let table = build_norming_table(&m, 10).unwrap();
    let mut buf = Vec::new();
    table.write_csv(&mut buf).unwrap();
    let text = String::from_utf8(buf).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert!(lines[0].starts_with('#'));
    assert_eq!(lines[1], "k,alpha,log_Qcal,log_Q,q");
    assert_eq!(lines.len(), 13);
    let row: Vec<f64> = lines[7].split(',').map(|c| c.parse().unwrap()).collect();
    assert_eq!(row[0], 5.0);
    assert_eq!(row[3].to_bits(), table.log_q[5].to_bits());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn q_dual_routes_agree(n in 2usize..300, seed in 0.0f64..1.0) {
        let m = make_metric(&[0.0, 0.0, -0.15, 0.3], 1000).unwrap();
        let table = build_norming_table(&m, n).unwrap();
        let k = ((n as f64) * seed) as usize;
        let direct = table.log_q[k] - canonical_log_q(n, k);
        // 𝒬 / 𝒬_P carries the extra weight e^{N f(alpha)}
        let alpha = k as f64 / n as f64;
        let via_qcal = table.log_qcal[k] - canonical_reference(n, k).unwrap() - n as f64 * m.f(alpha);
        prop_assert!((direct - via_qcal).abs() <= 1e-9);
    }
}
