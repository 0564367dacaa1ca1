//! Bussgang quantization and EVM distortion models for the UE transmit and
//! BS receive chains.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use num_complex::Complex64;
use rand::Rng;

use crate::linalg::{cn_scalar, CVec};
use crate::special::{normal_cdf, normal_pdf};
use crate::{Error, Result};

/// Converter resolution.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Resolution {
    Ideal,
    Bits(u32),
}

impl fmt::Display for Resolution {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Resolution::Ideal => f.write_str("ideal"),
            Resolution::Bits(b) => write!(f, "{b}"),
        }
    }
}

/// Levels above which the high-resolution approximation is used.
const LLOYD_MAX_BITS: u32 = 8;

/// Normalized MSE of the optimal `b`-bit scalar quantizer for a Gaussian
/// input (per real dimension, so it also applies to a circular complex input
/// quantized on I and Q separately). `Ideal` gives 0.
pub fn distortion_factor(res: Resolution) -> Result<f64> {
    match res {
        Resolution::Ideal => Ok(0.0),
        Resolution::Bits(0) => Err(Error::InvalidArgument(format!("converter resolution must be at least 1 bit"))),
        Resolution::Bits(b) if b > LLOYD_MAX_BITS => {
            Ok(core::f64::consts::PI * libm::sqrt(3.0) / 2.0 * libm::pow(4.0, -(b as f64)))
        }
        Resolution::Bits(b) => Ok(LLOYD_MAX_MSE[b as usize - 1]),
    }
}

/// Converged [`lloyd_max`] distortion for 1..=8 bits.
const LLOYD_MAX_MSE: [f64; 8] = [
    3.633_802_276_324_186e-1,
    1.174_818_478_293_292e-1,
    3.454_776_078_850_372e-2,
    9.501_008_008_191_779e-3,
    2.504_668_355_674_638e-3,
    6.442_396_653_173_919e-4,
    1.634_782_299_800_513e-4,
    4.118_509_275_223_168e-5,
];

fn inverse_normal_cdf(p: f64) -> f64 {
    let (mut lo, mut hi) = (-40.0, 40.0);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if normal_cdf(mid) < p {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Lloyd-Max iteration for a standard normal source with `levels` levels.
/// Returns `(reconstruction levels, mse)`.
pub fn lloyd_max(levels: usize) -> (Vec<f64>, f64) {
    // Start from the companding optimum: point density proportional to f^(1/3).
    let mut y: Vec<f64> = (0..levels)
        .map(|i| libm::sqrt(3.0) * inverse_normal_cdf((i as f64 + 0.5) / levels as f64))
        .collect();
    let mut t = vec![0.0; levels + 1];
    for _ in 0..20_000 {
        t[0] = f64::NEG_INFINITY;
        t[levels] = f64::INFINITY;
        for i in 1..levels {
            t[i] = 0.5 * (y[i - 1] + y[i]);
        }
        let mut shift = 0.0f64;
        for i in 0..levels {
            let (p, m1, _) = partial_moments(t[i], t[i + 1]);
            let c = if p > 0.0 { m1 / p } else { y[i] };
            shift = shift.max((c - y[i]).abs());
            y[i] = c;
        }
        if shift < 1e-13 {
            break;
        }
    }
    for i in 1..levels {
        t[i] = 0.5 * (y[i - 1] + y[i]);
    }
    let mut mse = 0.0;
    for i in 0..levels {
        let (p, m1, m2) = partial_moments(t[i], t[i + 1]);
        mse += m2 - 2.0 * y[i] * m1 + y[i] * y[i] * p;
    }
    (y, mse)
}

/// `(P, E[X 1], E[X^2 1])` of a standard normal restricted to `[a, b]`.
fn partial_moments(a: f64, b: f64) -> (f64, f64, f64) {
    let (pa, pb) = (normal_pdf(a), normal_pdf(b));
    let xa = if a.is_finite() { a * pa } else { 0.0 };
    let xb = if b.is_finite() { b * pb } else { 0.0 };
    let p = normal_cdf(b) - normal_cdf(a);
    (p, pa - pb, p + xa - xb)
}

/// One pass through the UE transmit chain.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TxOutput {
    /// `alpha_u sqrt(p) x + n_dac + eta`.
    pub signal: Complex64,
    pub n_dac: Complex64,
    pub eta: Complex64,
}

/// One pass through the BS receive chain.
#[derive(Debug, Clone, PartialEq)]
pub struct RxOutput {
    /// `A (clean + eta_bs) + n_adc`.
    pub y: CVec,
    pub eta_bs: CVec,
    pub n_adc: CVec,
}

/// EVM levels and converter resolutions, with the derived Bussgang
/// parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct HardwareProfile {
    pub kappa_ue: f64,
    pub kappa_bs: f64,
    pub bits_ue: Resolution,
    pub bits_bs: Resolution,
    rho_ue: f64,
    rho_bs: f64,
    bs_gains: Option<Vec<f64>>,
}

impl HardwareProfile {
    pub fn new(kappa_ue: f64, kappa_bs: f64, bits_ue: Resolution, bits_bs: Resolution) -> Result<Self> {
        for (name, k) in [("kappa_ue", kappa_ue), ("kappa_bs", kappa_bs)] {
            if !(k >= 0.0 && k.is_finite()) {
                return Err(Error::InvalidConfig(format!("{name} must be non-negative, got {k}")));
            }
        }
        Ok(Self {
            kappa_ue,
            kappa_bs,
            bits_ue,
            bits_bs,
            rho_ue: distortion_factor(bits_ue)?,
            rho_bs: distortion_factor(bits_bs)?,
            bs_gains: None,
        })
    }

    /// No distortion anywhere.
    pub fn ideal() -> Self {
        Self::new(0.0, 0.0, Resolution::Ideal, Resolution::Ideal).expect("ideal profile is valid")
    }

    /// `kappa_u = 0.05`, `kappa_b = 0.1`, 4-bit converters on both sides.
    pub fn reference() -> Self {
        Self::new(0.05, 0.1, Resolution::Bits(4), Resolution::Bits(4)).expect("reference profile is valid")
    }

    /// Overrides the per-antenna BS Bussgang gains.
    pub fn with_bs_gains(mut self, gains: Vec<f64>) -> Result<Self> {
        if let Some(g) = gains.iter().find(|&&g| !(g > 0.0 && g <= 1.0)) {
            return Err(Error::InvalidConfig(format!("BS Bussgang gains must lie in (0, 1], got {g}")));
        }
        self.bs_gains = Some(gains);
        Ok(self)
    }

    pub fn rho_ue(&self) -> f64 {
        self.rho_ue
    }

    pub fn rho_bs(&self) -> f64 {
        self.rho_bs
    }

    pub fn alpha_ue(&self) -> f64 {
        1.0 - self.rho_ue
    }

    /// Diagonal of `A` for an `n`-antenna BS.
    pub fn alpha_bs(&self, n: usize) -> Result<Vec<f64>> {
        match &self.bs_gains {
            None => Ok(vec![1.0 - self.rho_bs; n]),
            Some(g) if g.len() == n => Ok(g.clone()),
            Some(g) => Err(Error::DimensionMismatch(format!("{} BS gains for {n} antennas", g.len()))),
        }
    }

    pub fn is_ideal(&self) -> bool {
        self.kappa_ue == 0.0
            && self.kappa_bs == 0.0
            && self.rho_ue == 0.0
            && self.rho_bs == 0.0
            && self.bs_gains.as_ref().is_none_or(|g| g.iter().all(|&a| a == 1.0))
    }

    /// `E|s|^2 = alpha_u (1 + kappa_u^2) p` of the transmit-chain output for a
    /// unit-power symbol.
    pub fn ue_output_power(&self, p: f64) -> f64 {
        self.alpha_ue() * (1.0 + self.kappa_ue * self.kappa_ue) * p
    }

    /// `alpha_u sqrt(p) x + n_dac + eta_u` with `n_dac ~ CN(0, rho alpha p)`
    /// and `eta_u ~ CN(0, kappa_u^2 alpha p)`.
    pub fn ue_transmit_chain<R: Rng + ?Sized>(&self, x: Complex64, p: f64, rng: &mut R) -> TxOutput {
        let a = self.alpha_ue();
        let v_dac = self.rho_ue * a * p;
        let v_eta = self.kappa_ue * self.kappa_ue * a * p;
        let n_dac = if v_dac > 0.0 { cn_scalar(rng, v_dac) } else { Complex64::new(0.0, 0.0) };
        let eta = if v_eta > 0.0 { cn_scalar(rng, v_eta) } else { Complex64::new(0.0, 0.0) };
        let lin = x * (a * libm::sqrt(p));
        let signal = if v_dac > 0.0 || v_eta > 0.0 { lin + n_dac + eta } else { lin };
        TxOutput { signal, n_dac, eta }
    }

    /// `y = A (clean + eta_bs) + n_adc` with `eta_bs ~ CN(0, kappa_b^2 D)`
    /// and `n_adc ~ CN(0, T C)`, `T = A (I - A)`, `C = (1 + kappa_b^2) D +
    /// sigma^2 I`. `clean` already contains the AWGN.
    pub fn bs_receive_chain<R: Rng + ?Sized>(
        &self,
        clean: &CVec,
        d: &[f64],
        noise_power: f64,
        rng: &mut R,
    ) -> Result<RxOutput> {
        let n = clean.len();
        if d.len() != n {
            return Err(Error::DimensionMismatch(format!("D has {} entries for {n} antennas", d.len())));
        }
        let alpha = self.alpha_bs(n)?;
        let kb2 = self.kappa_bs * self.kappa_bs;
        let mut y = clean.clone();
        let mut eta_bs = CVec::zeros(n);
        let mut n_adc = CVec::zeros(n);
        for m in 0..n {
            if kb2 > 0.0 {
                eta_bs[m] = cn_scalar(rng, kb2 * d[m]);
                y[m] += eta_bs[m];
            }
            let a = alpha[m];
            if a != 1.0 {
                let c = (1.0 + kb2) * d[m] + noise_power;
                n_adc[m] = cn_scalar(rng, a * (1.0 - a) * c);
                y[m] = y[m] * a + n_adc[m];
            }
        }
        Ok(RxOutput { y, eta_bs, n_adc })
    }
}

/// Validates a per-antenna received-power vector and returns it as the
/// diagonal of `D`.
pub fn bs_d_matrix(signal_cov_diag: &[f64]) -> Result<Vec<f64>> {
    if let Some(v) = signal_cov_diag.iter().find(|&&v| !(v >= 0.0)) {
        return Err(Error::InvalidArgument(format!("received power must be non-negative, got {v}")));
    }
    Ok(signal_cov_diag.to_vec())
}

/// `D = diag(sum_u |g_u|^2 E|s_u|^2)` for channels `g_u` and transmit
/// second moments `E|s_u|^2`.
pub fn d_from_channels<'a>(channels: impl IntoIterator<Item = (&'a CVec, f64)>, n: usize) -> Vec<f64> {
    let mut d = vec![0.0; n];
    for (g, s) in channels {
        for (dm, z) in d.iter_mut().zip(g.iter()) {
            *dm += s * z.norm_sqr();
        }
    }
    d
}

/// `C = (1 + kappa_b^2) D + sigma^2 I`.
pub fn c_matrix(d: &[f64], kappa_bs: f64, noise_power: f64) -> Vec<f64> {
    d.iter().map(|&x| (1.0 + kappa_bs * kappa_bs) * x + noise_power).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;

    #[test]
    fn known_distortion_factors() {
        assert_eq!(distortion_factor(Resolution::Ideal).unwrap(), 0.0);
        assert!(distortion_factor(Resolution::Bits(0)).is_err());
        let r1 = distortion_factor(Resolution::Bits(1)).unwrap();
        assert!((r1 - (1.0 - 2.0 / core::f64::consts::PI)).abs() < 1e-9);
        let r4 = distortion_factor(Resolution::Bits(4)).unwrap();
        assert!((r4 - 0.009497).abs() < 5e-6);
        let mut prev = 1.0;
        for b in 1..=12 {
            let r = distortion_factor(Resolution::Bits(b)).unwrap();
            assert!(r < prev && r > 0.0);
            prev = r;
        }
    }

    #[test]
    fn table_matches_iteration() {
        for b in 1..=8u32 {
            let (_, mse) = lloyd_max(1 << b);
            let r = distortion_factor(Resolution::Bits(b)).unwrap();
            assert!((r - mse).abs() < 1e-12 * mse, "b={b}: {r} vs {mse}");
        }
    }

    #[test]
    fn ideal_chains_are_transparent() {
        let hw = HardwareProfile::ideal();
        assert!(hw.is_ideal());
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(1);
        let x = Complex64::new(0.3, -0.7);
        let out = hw.ue_transmit_chain(x, 0.1, &mut rng);
        assert_eq!(out.signal, x * libm::sqrt(0.1));
        let clean = crate::linalg::cn_vector(&mut rng, 4);
        let rx = hw.bs_receive_chain(&clean, &[1.0; 4], 0.5, &mut rng).unwrap();
        assert_eq!(rx.y, clean);
    }

    #[test]
    fn d_and_c_matrices() {
        let g = CVec::from_vec(vec![Complex64::new(1.0, 1.0), Complex64::new(0.0, 2.0)]);
        let d = d_from_channels([(&g, 0.5)], 2);
        assert_eq!(d, vec![1.0, 2.0]);
        assert_eq!(c_matrix(&d, 0.1, 0.25), vec![1.01 + 0.25, 2.02 + 0.25]);
        assert_eq!(d_from_channels([(&g, 0.0)], 2), vec![0.0, 0.0]);
        assert!(bs_d_matrix(&[1.0, -1.0]).is_err());
    }

    #[test]
    fn bs_gain_override() {
        let hw = HardwareProfile::reference().with_bs_gains(vec![0.9, 1.0]).unwrap();
        assert_eq!(hw.alpha_bs(2).unwrap(), vec![0.9, 1.0]);
        assert!(hw.alpha_bs(3).is_err());
        assert!(HardwareProfile::ideal().with_bs_gains(vec![0.0]).is_err());
    }
}
