use irsim_core::channel::{build_irs_bs_channel, evolve_aggregate, sample_link, AgingModel, LinkSampler};
use irsim_core::linalg::{rel_frobenius, CMat, CVec};
use irsim_core::scenario::{array_sites, local_scattering_corr, upa_steering, LinkStatistics};
use irsim_core::special::bessel_j0;
use irsim_core::{HardwareProfile, System, SystemConfig};
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const DRAWS: usize = 100_000;

fn desk_system() -> System {
    System::build(&SystemConfig::desk(), &HardwareProfile::reference(), 5).unwrap()
}

fn sample_cov(samples: &[CVec]) -> CMat {
    let n = samples[0].len();
    let mut c = CMat::zeros(n, n);
    for s in samples {
        c += s * s.adjoint();
    }
    c / Complex64::new(samples.len() as f64, 0.0)
}

/// `J0(x) = (1/pi) int_0^pi cos(x sin t) dt`; the trapezoid rule is
/// spectrally accurate for this periodic integrand.
fn j0_integral(x: f64) -> f64 {
    let n = 2000;
    let h = std::f64::consts::PI / n as f64;
    let mut s = 0.5 * (1.0 + (x * 0.0f64.sin()).cos());
    for i in 1..n {
        s += (x * (i as f64 * h).sin()).cos();
    }
    s * h / std::f64::consts::PI
}

/// Ascending series with compensated summation; usable for small arguments.
fn j0_series(x: f64) -> f64 {
    let q = -(x * x) / 4.0;
    let (mut term, mut sum, mut comp) = (1.0f64, 1.0f64, 0.0f64);
    for m in 1..200 {
        term *= q / (m as f64 * m as f64);
        let y = term - comp;
        let t = sum + y;
        comp = (t - sum) - y;
        sum = t;
        if term.abs() < 1e-30 {
            break;
        }
    }
    sum
}

#[test]
fn bessel_matches_reference_on_zero_to_fifty() {
    for i in 0..=500 {
        let x = i as f64 * 0.1;
        let reference = j0_integral(x);
        assert!((bessel_j0(x) - reference).abs() < 1e-10, "x={x}: {} vs {reference}", bessel_j0(x));
        if x <= 8.0 {
            assert!((bessel_j0(x) - j0_series(x)).abs() < 1e-10, "series x={x}");
        }
    }
    assert!(bessel_j0(2.404_825_557_695_773).abs() < 1e-6);
}

#[test]
fn aging_correlation_examples() {
    let a = AgingModel::new(133.0, 5e-6);
    assert_eq!(a.theta(0), 1.0);
    assert_eq!(AgingModel::new(0.0, 5e-6).theta(1000), 1.0);
    for m in 0..5000 {
        assert!(a.theta(m).abs() <= 1.0);
        let (t, tb) = (a.theta(m), a.theta_bar(m));
        assert!((t * t + tb * tb - 1.0).abs() < 1e-12);
    }
}

#[test]
fn nlos_link_covariance_matches_corr() {
    let r = local_scattering_corr((4, 2), 0.4, 0.1, 0.3, 0.2, 0.5).unwrap();
    let stats = LinkStatistics::new(2.0, 0.0, &upa_steering((4, 2), 0.4, 0.1, 0.5), &r);
    assert_eq!(stats.mean_los.norm(), 0.0);
    let sampler = LinkSampler::new(stats.clone()).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let draws: Vec<CVec> = (0..DRAWS).map(|_| sampler.sample(&mut rng).0).collect();
    let err = rel_frobenius(&sample_cov(&draws), &stats.corr);
    assert!(err < 0.02, "{err}");
}

#[test]
fn random_los_phase_averages_to_zero() {
    let r = local_scattering_corr((2, 2), 0.2, 0.0, 0.2, 0.2, 0.5).unwrap();
    let stats = LinkStatistics::new(1.0, 5.0, &upa_steering((2, 2), 0.2, 0.0, 0.5), &r);
    let sampler = LinkSampler::new(stats.clone()).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let n = stats.dim();
    let mut mean = CVec::zeros(n);
    let mut second = vec![0.0; n];
    for _ in 0..DRAWS {
        let t = sampler.sample(&mut rng).0;
        for m in 0..n {
            second[m] += t[m].norm_sqr();
        }
        mean += t;
    }
    let tt = DRAWS as f64;
    for m in 0..n {
        let mu = mean[m] / tt;
        let se = (second[m] / tt / tt).sqrt();
        assert!(mu.norm() < 3.0 * se, "entry {m}: |mean| {} vs 3se {}", mu.norm(), 3.0 * se);
    }
}

#[test]
fn los_only_link_keeps_its_norm() {
    let a = upa_steering((3, 2), 0.7, 0.2, 0.5);
    let stats = LinkStatistics { mean_los: a.clone(), corr: CMat::zeros(6, 6), rician_k: f64::INFINITY, beta: 1.0 };
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..100 {
        let (t, _) = sample_link(&stats, &mut rng).unwrap();
        assert!((t.norm() - a.norm()).abs() < 1e-12);
    }
}

#[test]
fn aggregate_covariance_matches_monte_carlo() {
    let sys = desk_system();
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for (l, k) in [(0, 0), (1, 1)] {
        let draws: Vec<Vec<CVec>> = (0..DRAWS).map(|_| sys.model.sample_ue(l, k, &mut rng).aggregate).collect();
        for j in 0..2 {
            let g: Vec<CVec> = draws.iter().map(|d| d[j].clone()).collect();
            let err = rel_frobenius(&sample_cov(&g), sys.model.cov_g(l, k, j));
            assert!(err < 0.02, "ue ({l},{k}) bs {j}: {err}");
        }
    }
}

#[test]
fn stored_aggregate_equals_recomputation() {
    let sys = desk_system();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..20 {
        let state = sys.model.sample_state(3, &mut rng);
        assert!(sys.model.aggregate_defect(&state) < 1e-12);
    }
}

#[test]
fn evolved_channel_keeps_covariance_and_correlates_by_theta() {
    let sys = desk_system();
    let aging = AgingModel::new(300.0, 1e-3);
    let lag = 2;
    let t = aging.theta(lag);
    assert!(t.abs() > 0.3 && t.abs() < 0.9);
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let (l, k, j) = (0, 1, 0);
    let c = sys.model.cov_g(l, k, j).clone();
    let n = c.nrows();
    let mut auto = CMat::zeros(n, n);
    let mut cross = CMat::zeros(n, n);
    for _ in 0..DRAWS {
        let g = sys.model.sample_ue(l, k, &mut rng).aggregate[j].clone();
        let q = sys.model.sample_ue(l, k, &mut rng).aggregate[j].clone();
        let gn = evolve_aggregate(&g, &q, &aging, lag);
        auto += &gn * gn.adjoint();
        cross += &gn * g.adjoint();
    }
    let tt = Complex64::new(DRAWS as f64, 0.0);
    assert!(rel_frobenius(&(auto / tt), &c) < 0.02);
    let expect = &c * Complex64::new(t, 0.0);
    let err = (cross / tt - &expect).norm() / c.norm();
    assert!(err < 0.02, "{err}");
}

#[test]
fn full_decorrelation_leaves_no_cross_covariance() {
    let sys = desk_system();
    // first zero of J0
    let aging = AgingModel::new(2.404_825_557_695_773 / std::f64::consts::TAU, 1.0);
    assert!(aging.theta(1).abs() < 1e-9);
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let (l, k, j) = (1, 0, 1);
    let n = sys.layout.antennas;
    let mut cross = CMat::zeros(n, n);
    let mut power = vec![vec![0.0; n]; n];
    for _ in 0..DRAWS {
        let g = sys.model.sample_ue(l, k, &mut rng).aggregate[j].clone();
        let q = sys.model.sample_ue(l, k, &mut rng).aggregate[j].clone();
        let gn = evolve_aggregate(&g, &q, &aging, 1);
        cross += &gn * g.adjoint();
        for a in 0..n {
            for b in 0..n {
                power[a][b] += gn[a].norm_sqr() * g[b].norm_sqr();
            }
        }
    }
    let tt = DRAWS as f64;
    for a in 0..n {
        for b in 0..n {
            // zero-mean product: its standard error is sqrt(E|x|^2|y|^2 / T)
            let bound = 3.0 * (power[a][b] / tt / tt).sqrt();
            assert!((cross[(a, b)] / tt).norm() < bound, "({a},{b})");
        }
    }
}

#[test]
fn irs_bs_channel_rank_and_energy() {
    let mut cfg = SystemConfig::desk();
    cfg.bs_dims = (4, 2);
    cfg.irs_dims = (4, 4);
    let sys = System::build(&cfg, &HardwareProfile::ideal(), 1).unwrap();
    let (bs, irs) = array_sites(&sys.geometry, &cfg, 0);
    let (n, m) = (cfg.antennas(), cfg.elements());
    for r in 1..=n {
        let x = build_irs_bs_channel(bs, irs, &cfg, cfg.area_km, Some(r)).unwrap();
        let energy = x.matrix.norm_squared();
        assert!((energy - x.beta * (n * m) as f64).abs() < 1e-9 * energy);
        let sv = x.matrix.singular_values();
        let mut s: Vec<f64> = sv.iter().copied().collect();
        s.sort_by(|a, b| b.total_cmp(a));
        if r == 1 {
            assert!(s[1] / s[0] < 1e-10);
        }
        assert!(s[r - 1] > 1e-8 * s[0], "rank {r}: {s:?}");
    }
    let clamped = build_irs_bs_channel(bs, irs, &cfg, cfg.area_km, Some(100)).unwrap();
    assert!(clamped.clamped && clamped.rank == n);
}

#[test]
fn no_irs_means_direct_channel_only() {
    let mut cfg = SystemConfig::desk();
    cfg.irs_dims = (0, 0);
    let sys = System::build(&cfg, &HardwareProfile::ideal(), 2).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let ue = sys.model.sample_ue(0, 0, &mut rng);
    assert!(ue.irs.is_empty());
    for j in 0..2 {
        assert_eq!(ue.aggregate[j], ue.direct[j]);
        let ch = sys.model.direct_stats(0, 0, j).covariance();
        assert!(rel_frobenius(sys.model.cov_g(0, 0, j), &ch) < 1e-14);
    }
}
