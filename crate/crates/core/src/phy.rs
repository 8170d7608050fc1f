//! Channel instances, derived scalar gains, the efficient beamforming
//! parametrization and SINR evaluation.
//!
//! Channel `h_kl` runs from transmitter `k` to receiver `l`. Transmit power is
//! fixed at one and all beamformers are unit norm.

use std::fmt;

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::report::fmt_f64;
use crate::{Error, Result};

/// Relative threshold below which a projection gain counts as zero.
pub const DEGENERACY_TOL: f64 = 1e-12;

/// Slack allowed on parameter range checks to absorb rounding.
pub(crate) const RANGE_TOL: f64 = 1e-12;

/// One of the two links. Link `k` is also consumer `k` and owns good `k`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Link {
    One,
    Two,
}

impl Link {
    pub const BOTH: [Link; 2] = [Link::One, Link::Two];

    pub fn other(self) -> Link {
        match self {
            Link::One => Link::Two,
            Link::Two => Link::One,
        }
    }

    pub fn index(self) -> u8 {
        match self {
            Link::One => 1,
            Link::Two => 2,
        }
    }
}

impl fmt::Display for Link {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.index())
    }
}

pub type CVector = Vec<Complex64>;

pub(crate) fn norm_sqr(v: &[Complex64]) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum()
}

/// `a^H b`
pub(crate) fn inner(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

fn scale(v: &[Complex64], s: Complex64) -> CVector {
    v.iter().map(|z| z * s).collect()
}

fn normalize(v: &[Complex64]) -> CVector {
    let n = norm_sqr(v).sqrt();
    v.iter().map(|z| z / n).collect()
}

/// Splits `h_kk` into its component along `h_kl` and the orthogonal remainder.
fn project(hkk: &[Complex64], hkl: &[Complex64]) -> (CVector, CVector) {
    let coeff = inner(hkl, hkk) / norm_sqr(hkl);
    let along = scale(hkl, coeff);
    let ortho = hkk.iter().zip(&along).map(|(a, b)| a - b).collect();
    (along, ortho)
}

/// Projection and orthogonal-complement gains `(||P h_kk||^2, ||P_perp h_kk||^2)`.
///
/// Shared by [`derive_gains`] and the transmitter agents so both compute identical bits.
pub fn projection_gains(hkk: &[Complex64], hkl: &[Complex64]) -> (f64, f64) {
    let (along, ortho) = project(hkk, hkl);
    (norm_sqr(&along), norm_sqr(&ortho))
}

/// The ground truth of one instance: four channel vectors and the noise power.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelRealization {
    h11: CVector,
    h12: CVector,
    h21: CVector,
    h22: CVector,
    sigma2: f64,
}

impl ChannelRealization {
    pub fn new(h11: CVector, h12: CVector, h21: CVector, h22: CVector, sigma2: f64) -> Result<Self> {
        let n = h11.len();
        if n < 2 {
            return Err(Error::InvalidArgument(format!("need at least 2 antennas, got {n}")));
        }
        if [&h12, &h21, &h22].iter().any(|h| h.len() != n) {
            return Err(Error::InvalidArgument("channel vectors differ in length".into()));
        }
        if !(sigma2 > 0.0 && sigma2.is_finite()) {
            return Err(Error::InvalidArgument(format!("noise power must be positive, got {sigma2}")));
        }
        for (name, h) in [("h11", &h11), ("h12", &h12), ("h21", &h21), ("h22", &h22)] {
            if h.iter().any(|z| !z.is_finite()) {
                return Err(Error::InvalidArgument(format!("{name} has non-finite entries")));
            }
            if norm_sqr(h) == 0.0 {
                return Err(Error::DegenerateChannel(format!("{name} is the zero vector")));
            }
        }
        Ok(ChannelRealization {
            h11,
            h12,
            h21,
            h22,
            sigma2,
        })
    }

    pub fn n_antennas(&self) -> usize {
        self.h11.len()
    }

    pub fn sigma2(&self) -> f64 {
        self.sigma2
    }

    /// Channel from transmitter `from` to receiver `to`.
    pub fn h(&self, from: Link, to: Link) -> &[Complex64] {
        match (from, to) {
            (Link::One, Link::One) => &self.h11,
            (Link::One, Link::Two) => &self.h12,
            (Link::Two, Link::One) => &self.h21,
            (Link::Two, Link::Two) => &self.h22,
        }
    }

    /// The same channel vectors under a different noise power.
    pub fn with_sigma2(&self, sigma2: f64) -> Result<Self> {
        Self::new(
            self.h11.clone(),
            self.h12.clone(),
            self.h21.clone(),
            self.h22.clone(),
            sigma2,
        )
    }

    /// Fixture JSON with every number printed to 17 significant digits.
    pub fn to_json(&self) -> String {
        let vec = |h: &[Complex64]| {
            let parts: Vec<String> = h
                .iter()
                .map(|z| format!("[{},{}]", fmt_f64(z.re), fmt_f64(z.im)))
                .collect();
            format!("[{}]", parts.join(","))
        };
        format!(
            "{{\"n_antennas\":{},\"sigma2\":{},\"h11\":{},\"h12\":{},\"h21\":{},\"h22\":{}}}",
            self.n_antennas(),
            fmt_f64(self.sigma2),
            vec(&self.h11),
            vec(&self.h12),
            vec(&self.h21),
            vec(&self.h22)
        )
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let fixture: ChannelFixture =
            serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
        fixture.try_into()
    }
}

/// Wire form of a [`ChannelRealization`].
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ChannelFixture {
    pub n_antennas: usize,
    pub sigma2: f64,
    pub h11: Vec<[f64; 2]>,
    pub h12: Vec<[f64; 2]>,
    pub h21: Vec<[f64; 2]>,
    pub h22: Vec<[f64; 2]>,
}

impl TryFrom<ChannelFixture> for ChannelRealization {
    type Error = Error;

    fn try_from(f: ChannelFixture) -> Result<Self> {
        let conv = |v: Vec<[f64; 2]>| -> CVector { v.into_iter().map(|[re, im]| Complex64::new(re, im)).collect() };
        let ch = ChannelRealization::new(conv(f.h11), conv(f.h12), conv(f.h21), conv(f.h22), f.sigma2)?;
        if ch.n_antennas() != f.n_antennas {
            return Err(Error::Parse(format!(
                "n_antennas is {} but vectors have length {}",
                f.n_antennas,
                ch.n_antennas()
            )));
        }
        Ok(ch)
    }
}

/// Noise power for an SNR given in dB (`SNR = 1 / sigma^2`).
pub fn sigma2_from_snr_db(snr_db: f64) -> f64 {
    10f64.powf(-snr_db / 10.0)
}

/// Draws `count` i.i.d. Rayleigh realizations.
///
/// Entries are circularly-symmetric complex Gaussian with unit variance: real and
/// imaginary parts are independent `N(0, 1/2)`. The stream is ChaCha20 seeded from
/// `seed`; per realization the vectors are drawn in the order h11, h12, h21, h22, each
/// entry real part first. The SNR does not consume randomness, so the same seed gives
/// the same vectors at every SNR.
pub fn generate_channels(
    n_antennas: usize,
    snr_db: f64,
    seed: u64,
    count: usize,
) -> Result<Vec<ChannelRealization>> {
    if n_antennas < 2 {
        return Err(Error::InvalidArgument(format!("need at least 2 antennas, got {n_antennas}")));
    }
    if count < 1 {
        return Err(Error::InvalidArgument("count must be at least 1".into()));
    }
    if !snr_db.is_finite() {
        return Err(Error::InvalidArgument(format!("snr_db must be finite, got {snr_db}")));
    }
    let sigma2 = sigma2_from_snr_db(snr_db);
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let std = std::f64::consts::FRAC_1_SQRT_2;
    let draw = |rng: &mut ChaCha20Rng| -> CVector {
        (0..n_antennas)
            .map(|_| {
                let re: f64 = StandardNormal.sample(rng);
                let im: f64 = StandardNormal.sample(rng);
                Complex64::new(std * re, std * im)
            })
            .collect()
    };
    (0..count)
        .map(|_| {
            let h11 = draw(&mut rng);
            let h12 = draw(&mut rng);
            let h21 = draw(&mut rng);
            let h22 = draw(&mut rng);
            ChannelRealization::new(h11, h12, h21, h22, sigma2)
        })
        .collect()
}

/// The scalar gains every economy formula reads.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DerivedGains {
    g: [f64; 2],
    zfg: [f64; 2],
    cross: [f64; 2],
    lambda_mrt: [f64; 2],
    sigma2: f64,
}

fn slot(k: Link) -> usize {
    match k {
        Link::One => 0,
        Link::Two => 1,
    }
}

impl DerivedGains {
    /// Builds gains from scalars: projection gains `g_k`, orthogonal-complement gains
    /// `zfg_k` and cross gains `g_kl = ||h_kl||^2`.
    pub fn from_scalars(
        g: [f64; 2],
        zfg: [f64; 2],
        cross: [f64; 2],
        sigma2: f64,
    ) -> Result<Self> {
        let all = g.iter().chain(&zfg).chain(&cross);
        if all.clone().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(Error::InvalidArgument("gains must be finite and nonnegative".into()));
        }
        if cross.iter().any(|&c| c <= 0.0) {
            return Err(Error::DegenerateChannel("cross gain is zero".into()));
        }
        if g[0] + zfg[0] <= 0.0 || g[1] + zfg[1] <= 0.0 {
            return Err(Error::DegenerateChannel("direct channel is zero".into()));
        }
        if !(sigma2 > 0.0 && sigma2.is_finite()) {
            return Err(Error::InvalidArgument(format!("noise power must be positive, got {sigma2}")));
        }
        Ok(DerivedGains {
            g,
            zfg,
            cross,
            lambda_mrt: [g[0] / (g[0] + zfg[0]), g[1] / (g[1] + zfg[1])],
            sigma2,
        })
    }

    /// `g_k = ||P_{h_kl} h_kk||^2`
    pub fn g(&self, k: Link) -> f64 {
        self.g[slot(k)]
    }

    /// `zfg_k = ||P_perp_{h_kl} h_kk||^2`
    pub fn zfg(&self, k: Link) -> f64 {
        self.zfg[slot(k)]
    }

    /// `g_kl = ||h_kl||^2`: the gain of transmitter `k` towards the other receiver.
    pub fn cross(&self, k: Link) -> f64 {
        self.cross[slot(k)]
    }

    pub fn lambda_mrt(&self, k: Link) -> f64 {
        self.lambda_mrt[slot(k)]
    }

    pub fn sigma2(&self) -> f64 {
        self.sigma2
    }

    /// `||h_kk||^2 = g_k + zfg_k`
    pub fn direct_norm_sqr(&self, k: Link) -> f64 {
        self.g(k) + self.zfg(k)
    }

    /// Noise plus interference at receiver `k` in Nash equilibrium:
    /// `sigma^2 + lambda_l^mrt g_lk`.
    pub fn nash_noise_interference(&self, k: Link) -> f64 {
        let l = k.other();
        self.sigma2 + self.lambda_mrt(l) * self.cross(l)
    }

    pub fn degeneracy(&self) -> Option<String> {
        for k in Link::BOTH {
            let total = self.direct_norm_sqr(k);
            if self.zfg(k) < DEGENERACY_TOL * total {
                return Some(format!("h{k}{k} is parallel to the cross channel of link {k}"));
            }
            if self.g(k) < DEGENERACY_TOL * total {
                return Some(format!("h{k}{k} is orthogonal to the cross channel of link {k}"));
            }
        }
        None
    }

    pub fn is_degenerate(&self) -> bool {
        self.degeneracy().is_some()
    }

    /// Economy and market operations divide by `g_k` and `zfg_k` and refuse degenerate instances.
    pub fn ensure_nondegenerate(&self) -> Result<()> {
        match self.degeneracy() {
            Some(why) => Err(Error::DegenerateChannel(why)),
            None => Ok(()),
        }
    }

    /// The same instance with links 1 and 2 relabeled.
    pub fn swapped(&self) -> DerivedGains {
        DerivedGains {
            g: [self.g[1], self.g[0]],
            zfg: [self.zfg[1], self.zfg[0]],
            cross: [self.cross[1], self.cross[0]],
            lambda_mrt: [self.lambda_mrt[1], self.lambda_mrt[0]],
            sigma2: self.sigma2,
        }
    }

    pub(crate) fn check_lambda(&self, k: Link, lambda: f64) -> Result<f64> {
        let hi = self.lambda_mrt(k);
        if !(lambda >= -RANGE_TOL && lambda <= hi + RANGE_TOL) {
            return Err(Error::InvalidArgument(format!(
                "lambda{k} = {lambda} outside [0, {hi}]"
            )));
        }
        Ok(lambda.clamp(0.0, hi))
    }
}

pub fn derive_gains(ch: &ChannelRealization) -> Result<DerivedGains> {
    let mut g = [0.0; 2];
    let mut zfg = [0.0; 2];
    let mut cross = [0.0; 2];
    for k in Link::BOTH {
        let hkk = ch.h(k, k);
        let hkl = ch.h(k, k.other());
        let c = norm_sqr(hkl);
        if c <= f64::MIN_POSITIVE {
            return Err(Error::DegenerateChannel(format!("h{k}{} is numerically zero", k.other())));
        }
        let (gk, zk) = projection_gains(hkk, hkl);
        g[slot(k)] = gk;
        zfg[slot(k)] = zk;
        cross[slot(k)] = c;
    }
    DerivedGains::from_scalars(g, zfg, cross, ch.sigma2())
}

/// Linear SINR of both links.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SinrPair {
    pub phi1: f64,
    pub phi2: f64,
}

impl SinrPair {
    pub fn get(&self, k: Link) -> f64 {
        match k {
            Link::One => self.phi1,
            Link::Two => self.phi2,
        }
    }

    /// Componentwise `>=` with a relative slack `tol`.
    pub fn weakly_dominates(&self, other: &SinrPair, tol: f64) -> bool {
        Link::BOTH
            .iter()
            .all(|&k| self.get(k) >= other.get(k) - tol * other.get(k).abs().max(1.0))
    }
}

/// Efficient beamformer `w_k(lambda)`: a unit-norm mix of the projection of `h_kk`
/// onto `h_kl` and onto its orthogonal complement.
pub fn beam_vector(k: Link, lambda: f64, ch: &ChannelRealization) -> Result<CVector> {
    let gains = derive_gains(ch)?;
    let lambda = gains.check_lambda(k, lambda)?;
    let (along, ortho) = project(ch.h(k, k), ch.h(k, k.other()));
    let mut w = vec![Complex64::new(0.0, 0.0); ch.n_antennas()];
    for (weight, part) in [(lambda.sqrt(), &along), ((1.0 - lambda).sqrt(), &ortho)] {
        if weight == 0.0 {
            continue;
        }
        let n = norm_sqr(part).sqrt();
        if n == 0.0 {
            return Err(Error::DegenerateChannel(format!(
                "link {k} has no component needed for lambda = {lambda}"
            )));
        }
        for (wi, pi) in w.iter_mut().zip(part.iter()) {
            *wi += pi * (weight / n);
        }
    }
    Ok(w)
}

/// Direct and interference power gains `(|h_kk^H w_k|^2, |h_kl^H w_k|^2)` at parameter `lambda`.
pub fn power_gains(k: Link, lambda: f64, gains: &DerivedGains) -> Result<(f64, f64)> {
    let lambda = gains.check_lambda(k, lambda)?;
    Ok(power_gains_unchecked(k, lambda, gains))
}

pub(crate) fn power_gains_unchecked(k: Link, lambda: f64, gains: &DerivedGains) -> (f64, f64) {
    let amp = (lambda * gains.g(k)).sqrt() + ((1.0 - lambda) * gains.zfg(k)).sqrt();
    (amp * amp, lambda * gains.cross(k))
}

pub fn sinr_lambda(lambda1: f64, lambda2: f64, gains: &DerivedGains) -> Result<SinrPair> {
    let l1 = gains.check_lambda(Link::One, lambda1)?;
    let l2 = gains.check_lambda(Link::Two, lambda2)?;
    Ok(sinr_lambda_unchecked(l1, l2, gains))
}

pub(crate) fn sinr_lambda_unchecked(lambda1: f64, lambda2: f64, gains: &DerivedGains) -> SinrPair {
    let (d1, i1) = power_gains_unchecked(Link::One, lambda1, gains);
    let (d2, i2) = power_gains_unchecked(Link::Two, lambda2, gains);
    SinrPair {
        phi1: d1 / (gains.sigma2() + i2),
        phi2: d2 / (gains.sigma2() + i1),
    }
}

/// SINR of both links for arbitrary beamformers, straight from the channel vectors.
pub fn sinr_beams(w1: &[Complex64], w2: &[Complex64], ch: &ChannelRealization) -> SinrPair {
    let p = |from: Link, to: Link, w: &[Complex64]| inner(ch.h(from, to), w).norm_sqr();
    SinrPair {
        phi1: p(Link::One, Link::One, w1) / (p(Link::Two, Link::One, w2) + ch.sigma2()),
        phi2: p(Link::Two, Link::Two, w2) / (p(Link::One, Link::Two, w1) + ch.sigma2()),
    }
}

/// Transmit MMSE beamformer `normalize((sigma^2 I + h_kl h_kl^H)^-1 h_kk)`.
///
/// The inverse is applied through Sherman-Morrison:
/// `(s I + h h^H)^-1 v = (v - h (h^H v) / (s + ||h||^2)) / s`.
pub fn mmse_beam(k: Link, ch: &ChannelRealization) -> CVector {
    let hkk = ch.h(k, k);
    let hkl = ch.h(k, k.other());
    let s = ch.sigma2();
    let coeff = inner(hkl, hkk) / (s + norm_sqr(hkl));
    let v: CVector = hkk.iter().zip(hkl).map(|(a, b)| a - b * coeff).collect();
    normalize(&v)
}

/// Recovers the parameter of a unit-norm beamformer from its leakage:
/// `lambda_k = |h_kl^H w|^2 / g_kl`.
pub fn beam_to_lambda(k: Link, w: &[Complex64], ch: &ChannelRealization) -> Result<f64> {
    let n = norm_sqr(w).sqrt();
    if (n - 1.0).abs() > 1e-9 {
        return Err(Error::InvalidArgument(format!("beamformer norm is {n}, expected 1")));
    }
    let hkl = ch.h(k, k.other());
    Ok(inner(hkl, w).norm_sqr() / norm_sqr(hkl))
}

/// Achievable rate `log2(1 + phi)` in bits per channel use.
pub fn rate(phi: f64) -> f64 {
    (1.0 + phi).log2()
}
