use std::f64::consts::PI;

use proptest::prelude::*;

use toric_bergman::geodesics::{e_function, free_energy, log_szego, moments, sample, BergmanFreeEnergy};
use toric_bergman::lab::ExperimentConfig;
use toric_bergman::norming::TableCache;
use toric_bergman::potentials::{legendre_dual, GeodesicFamily, MetricPotential};
use toric_bergman::quadrature::LaplaceOptions;

fn default_family() -> GeodesicFamily {
    ExperimentConfig::default().family().unwrap()
}

fn free_energy_at(cache: &TableCache, fam: &GeodesicFamily, n: usize) -> BergmanFreeEnergy {
    BergmanFreeEnergy::new(&cache.get(&fam.m0, n).unwrap(), &cache.get(&fam.m1, n).unwrap()).unwrap()
}

#[test]
fn canonical_identities_are_exact() {
    let m = MetricPotential::canonical();
    let fam = GeodesicFamily::new(m.clone(), m.clone());
    let cache = TableCache::new(LaplaceOptions::default());
    for n in [1usize, 5, 64, 1024] {
        let fe = free_energy_at(&cache, &fam, n);
        let offset = ((n + 1) as f64 / (2.0 * PI)).ln();
        for rho in [-20.0, -1.0, 0.0, 2.5, 20.0] {
            let big_u = legendre_dual(&m, rho).unwrap().u;
            let u_n = free_energy(&fe, 0.5, rho).unwrap();
            assert!((n as f64 * (u_n - big_u) - offset).abs() < 1e-10, "N = {n}, rho = {rho}");
            let log_e = e_function(&cache, &fam, &fe, 0.5, rho, 1e-8).unwrap();
            assert!((log_e - offset).abs() < 1e-10);
        }
    }
}

#[test]
fn endpoint_e_function_is_szego_kernel() {
    let fam = default_family();
    let cache = TableCache::new(LaplaceOptions::default());
    let n = 128;
    let fe = free_energy_at(&cache, &fam, n);
    for t in [0.0, 1.0] {
        for rho in [-4.0, 0.0, 3.0] {
            let log_e = e_function(&cache, &fam, &fe, t, rho, 1e-8).unwrap();
            let log_pi = log_szego(&cache, &fam, t, n, rho).unwrap();
            assert!((log_e - log_pi).abs() < 1e-10, "t = {t}, rho = {rho}");
        }
    }
}

#[test]
fn softmax_localizes_near_moment_point() {
    let fam = default_family();
    let cache = TableCache::new(LaplaceOptions::default());
    let n = 1024;
    let fe = free_energy_at(&cache, &fam, n);
    for t in [0.0, 0.5, 1.0] {
        let mt = toric_bergman::potentials::geodesic_metric(&fam, t).unwrap();
        for rho in [-2.0, 0.0, 1.5] {
            let x = legendre_dual(&mt, rho).unwrap().x;
            let mom = moments(&fe, t, rho).unwrap();
            let far: f64 = mom
                .p
                .iter()
                .enumerate()
                .filter(|(k, _)| (*k as f64 / n as f64 - x).abs() > 0.1)
                .map(|(_, p)| p)
                .sum();
            assert!(far <= 1e-6, "t = {t}, rho = {rho}: mass {far}");
            assert!((mom.p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        }
    }
}

#[test]
fn bad_points_are_rejected() {
    let fam = default_family();
    let cache = TableCache::new(LaplaceOptions::default());
    let fe = free_energy_at(&cache, &fam, 16);
    assert!(free_energy(&fe, 1.5, 0.0).is_err());
    assert!(free_energy(&fe, 0.5, f64::NAN).is_err());
    assert!(moments(&fe, -0.1, 0.0).is_err());
    let other = free_energy_at(&cache, &fam, 32);
    assert!(BergmanFreeEnergy::new(&cache.get(&fam.m0, 16).unwrap(), &cache.get(&fam.m1, 32).unwrap()).is_err());
    assert_eq!(other.n, 32);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn free_energy_is_convex_with_moment_derivative(t in 0.0f64..1.0, rho in -30.0f64..30.0, dr in 1e-2f64..2.0) {
        let fam = default_family();
        let cache = TableCache::new(LaplaceOptions::default());
        let fe = free_energy_at(&cache, &fam, 64);
        let a = moments(&fe, t, rho).unwrap();
        let b = moments(&fe, t, rho + dr).unwrap();
        prop_assert!((0.0..=1.0).contains(&a.d_rho()));
        prop_assert!(a.d2_rho() >= 0.0 && a.d2_t() >= 0.0);
        prop_assert!(b.d_rho() >= a.d_rho());
        let ua = free_energy(&fe, t, rho).unwrap();
        let ub = free_energy(&fe, t, rho + dr).unwrap();
        prop_assert!(ub - ua >= a.d_rho() * dr - 1e-12);
    }

    #[test]
    fn moment_derivatives_match_differences(t in 0.05f64..0.95, rho in -5.0f64..5.0) {
        let fam = default_family();
        let cache = TableCache::new(LaplaceOptions::default());
        let fe = free_energy_at(&cache, &fam, 256);
        let h = 1e-4;
        let u = |s: f64, r: f64| free_energy(&fe, s, r).unwrap();
        let m = |s: f64, r: f64| moments(&fe, s, r).unwrap();
        let c = m(t, rho);
        let close = |a: f64, b: f64| (a - b).abs() <= 1e-6 * b.abs().max(1e-3);
        prop_assert!(close(c.d_rho(), (u(t, rho + h) - u(t, rho - h)) / (2.0 * h)));
        prop_assert!(close(c.d_t(), (u(t + h, rho) - u(t - h, rho)) / (2.0 * h)));
        prop_assert!(close(c.d2_rho(), (m(t, rho + h).d_rho() - m(t, rho - h).d_rho()) / (2.0 * h)));
        prop_assert!(close(c.d2_t(), (m(t + h, rho).d_t() - m(t - h, rho).d_t()) / (2.0 * h)));
        prop_assert!(close(c.d2_t_rho(), (m(t + h, rho).d_rho() - m(t - h, rho).d_rho()) / (2.0 * h)));
    }

    #[test]
    fn sample_is_consistent(t in 0.0f64..1.0, rho in -8.0f64..8.0) {
        let fam = default_family();
        let cache = TableCache::new(LaplaceOptions::default());
        let fe = free_energy_at(&cache, &fam, 64);
        let s = sample(&cache, &fam, &fe, t, rho, 1e-8).unwrap();
        let u0 = legendre_dual(&fam.m0, rho).unwrap().u;
        prop_assert_eq!(s.phi_n, s.u_n - u0);
        prop_assert!(s.log_pi.is_finite() && s.log_e.is_finite());
    }
}
