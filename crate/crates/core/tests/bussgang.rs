use irsim_core::hardware::{c_matrix, d_from_channels, distortion_factor};
use irsim_core::linalg::{cn_scalar, cn_vector, cn_vector_diag, CVec};
use irsim_core::{HardwareProfile, Resolution};
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

const SAMPLES: usize = 1_000_000;

/// Lloyd iteration on an empirical Gaussian sample: sorted data plus prefix
/// sums make each sweep O(levels log n).
fn empirical_lloyd(levels: usize, samples: usize, seed: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut x: Vec<f64> = (0..samples).map(|_| StandardNormal.sample(&mut rng)).collect();
    x.sort_by(f64::total_cmp);
    let mut s1 = vec![0.0; samples + 1];
    let mut s2 = vec![0.0; samples + 1];
    for (i, v) in x.iter().enumerate() {
        s1[i + 1] = s1[i] + v;
        s2[i + 1] = s2[i] + v * v;
    }
    // uniform start over the central 99.9% of the sample
    let lo = x[samples / 2000];
    let hi = x[samples - samples / 2000];
    let mut y: Vec<f64> = (0..levels).map(|i| lo + (hi - lo) * (i as f64 + 0.5) / levels as f64).collect();
    let cells = |y: &[f64]| -> Vec<usize> {
        let mut idx = vec![0];
        for w in y.windows(2) {
            let t = 0.5 * (w[0] + w[1]);
            idx.push(x.partition_point(|&v| v < t));
        }
        idx.push(samples);
        idx
    };
    for _ in 0..5000 {
        let idx = cells(&y);
        let mut moved = 0.0f64;
        for i in 0..levels {
            let (a, b) = (idx[i], idx[i + 1]);
            if b > a {
                let c = (s1[b] - s1[a]) / (b - a) as f64;
                moved = moved.max((c - y[i]).abs());
                y[i] = c;
            }
        }
        if moved < 1e-12 {
            break;
        }
    }
    let idx = cells(&y);
    let mut mse = 0.0;
    for i in 0..levels {
        let (a, b) = (idx[i], idx[i + 1]);
        mse += (s2[b] - s2[a]) - 2.0 * y[i] * (s1[b] - s1[a]) + y[i] * y[i] * (b - a) as f64;
    }
    mse / samples as f64
}

#[test]
fn distortion_factor_matches_sample_lloyd_oracle() {
    for (bits, published) in [(1u32, 0.3634), (2, 0.1175), (4, 0.009497)] {
        let oracle = empirical_lloyd(1 << bits, 10_000_000, 100 + bits as u64);
        let rho = distortion_factor(Resolution::Bits(bits)).unwrap();
        assert!((rho - oracle).abs() < 0.01 * oracle, "b={bits}: {rho} vs sample oracle {oracle}");
        assert!((rho - published).abs() < 0.001 * published + 5e-5, "b={bits}: {rho}");
    }
}

#[test]
fn transmit_chain_moments() {
    let hw = HardwareProfile::new(0.2, 0.0, Resolution::Bits(2), Resolution::Ideal).unwrap();
    let (a, rho, k) = (hw.alpha_ue(), hw.rho_ue(), hw.kappa_ue);
    let p = 0.7;
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let (mut power, mut cross) = (0.0, Complex64::new(0.0, 0.0));
    let mut cross_sq = 0.0;
    for _ in 0..SAMPLES {
        let x = cn_scalar(&mut rng, 1.0);
        let s = hw.ue_transmit_chain(x, p, &mut rng);
        power += s.signal.norm_sqr();
        let c = s.signal * x.conj();
        cross += c;
        cross_sq += c.norm_sqr();
    }
    let t = SAMPLES as f64;
    let expect = (a * a + rho * a + k * k * a) * p;
    assert!((power / t - expect).abs() < 0.01 * expect);
    assert!((hw.ue_output_power(p) - expect).abs() < 1e-15);
    let mean = cross / t;
    let gain = a * p.sqrt();
    let se = ((cross_sq / t - mean.norm_sqr()) / t).sqrt();
    assert!((mean - gain).norm() < 3.0 * se, "{mean} vs {gain} (se {se})");
}

#[test]
fn receive_chain_moments() {
    let hw = HardwareProfile::new(0.0, 0.15, Resolution::Ideal, Resolution::Bits(2)).unwrap();
    let alpha = hw.alpha_bs(4).unwrap()[0];
    let noise = 0.05;
    let d = vec![0.2, 1.0, 2.5, 0.0];
    let c = c_matrix(&d, hw.kappa_bs, noise);
    let clean_var: Vec<f64> = d.iter().map(|x| x + noise).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let n = d.len();
    let mut out_power = vec![0.0; n];
    let mut cross = vec![Complex64::new(0.0, 0.0); n];
    let mut cross_sq = vec![0.0; n];
    let mut in_power = vec![0.0; n];
    for _ in 0..SAMPLES {
        let clean = cn_vector_diag(&mut rng, &clean_var);
        let rx = hw.bs_receive_chain(&clean, &d, noise, &mut rng).unwrap();
        let pre = &clean + &rx.eta_bs;
        for m in 0..n {
            out_power[m] += rx.y[m].norm_sqr();
            in_power[m] += pre[m].norm_sqr();
            let z = rx.y[m] * pre[m].conj();
            cross[m] += z;
            cross_sq[m] += z.norm_sqr();
        }
    }
    let t = SAMPLES as f64;
    for m in 0..n {
        // Bussgang variance identity: alpha^2 C + alpha (1 - alpha) C
        assert!((out_power[m] / t - alpha * c[m]).abs() < 0.01 * alpha * c[m], "antenna {m}");
        // the ADC noise is uncorrelated with its input
        let mean = cross[m] / t;
        let expect = alpha * in_power[m] / t;
        let se = ((cross_sq[m] / t - mean.norm_sqr()) / t).sqrt();
        assert!((mean - expect).norm() < 3.0 * se, "antenna {m}: {mean} vs {expect}");
    }
}

#[test]
fn d_matrix_matches_empirical_pre_distortion_power() {
    let hw = HardwareProfile::reference();
    let p = 0.1;
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let n = 6;
    let gs: Vec<CVec> = (0..3).map(|_| cn_vector(&mut rng, n)).collect();
    let s = hw.ue_output_power(p);
    let d = d_from_channels(gs.iter().map(|g| (g, s)), n);
    let mut emp = vec![0.0; n];
    for _ in 0..200_000 {
        let mut y = CVec::zeros(n);
        for g in &gs {
            let x = cn_scalar(&mut rng, 1.0);
            y += g * hw.ue_transmit_chain(x, p, &mut rng).signal;
        }
        for m in 0..n {
            emp[m] += y[m].norm_sqr();
        }
    }
    let total_d: f64 = d.iter().sum();
    let total_emp: f64 = emp.iter().sum::<f64>() / 200_000.0;
    assert!((total_d - total_emp).abs() < 0.02 * total_d, "{total_d} vs {total_emp}");
}

#[test]
fn single_ue_ideal_d_is_channel_power() {
    let g = CVec::from_vec(vec![Complex64::new(1.0, 1.0), Complex64::new(0.0, -3.0)]);
    let p = 0.5;
    let hw = HardwareProfile::ideal();
    let d = d_from_channels([(&g, hw.ue_output_power(p))], 2);
    let sigma2 = 0.1;
    // with the AWGN folded in, the pre-ADC power is p |g|^2 + sigma^2
    let c = c_matrix(&d, 0.0, sigma2);
    assert_eq!(c, vec![p * 2.0 + sigma2, p * 9.0 + sigma2]);
    assert_eq!(d_from_channels(std::iter::empty(), 2), vec![0.0, 0.0]);
}

#[test]
fn ideal_chains_are_exact_identities() {
    let hw = HardwareProfile::ideal();
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for _ in 0..100 {
        let x = cn_scalar(&mut rng, 1.0);
        assert_eq!(hw.ue_transmit_chain(x, 4.0, &mut rng).signal, x * 2.0);
        let clean = cn_vector(&mut rng, 5);
        let rx = hw.bs_receive_chain(&clean, &[1.0; 5], 0.3, &mut rng).unwrap();
        assert_eq!(rx.y, clean);
        assert_eq!(rx.n_adc, CVec::zeros(5));
        assert_eq!(rx.eta_bs, CVec::zeros(5));
    }
}
