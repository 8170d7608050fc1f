//! Brute-force oracles shared by the integration tests. None of them uses the closed-form
//! demand, contract-curve or equilibrium formulas they are compared against.

#![allow(dead_code)]

use num_complex::Complex64;
use walras_miso::market::{price_bounds, ConsumerParams};
use walras_miso::phy::{beam_vector, derive_gains, generate_channels};
use walras_miso::{ChannelRealization, DerivedGains, Link};

pub fn channels(snr_db: f64, seed: u64, count: usize) -> Vec<(ChannelRealization, DerivedGains)> {
    generate_channels(2, snr_db, seed, count)
        .unwrap()
        .into_iter()
        .map(|ch| {
            let g = derive_gains(&ch).unwrap();
            (ch, g)
        })
        .collect()
}

pub fn channel(snr_db: f64, seed: u64) -> (ChannelRealization, DerivedGains) {
    channels(snr_db, seed, 1).remove(0)
}

fn inner(h: &[Complex64], w: &[Complex64]) -> Complex64 {
    h.iter().zip(w).map(|(a, b)| a.conj() * b).sum()
}

/// SINR evaluated from inner products of the channels with the two endpoint beams
/// `w_k(1)` and `w_k(0)`. Every beam `w_k(lambda)` is `sqrt(lambda) w_k(1) +
/// sqrt(1 - lambda) w_k(0)`, so the received amplitudes are exact mixtures.
#[derive(Debug, Clone, Copy)]
pub struct SinrOracle {
    /// `(h_kk^H w_k(1), h_kk^H w_k(0))` per link.
    direct: [(Complex64, Complex64); 2],
    /// `(h_kl^H w_k(1), h_kl^H w_k(0))` per link.
    leak: [(Complex64, Complex64); 2],
    sigma2: f64,
    pub lambda_mrt: [f64; 2],
}

impl SinrOracle {
    pub fn new(ch: &ChannelRealization) -> Self {
        let g = derive_gains(ch).unwrap();
        let mut direct = [(Complex64::default(), Complex64::default()); 2];
        let mut leak = direct;
        for (i, k) in Link::BOTH.into_iter().enumerate() {
            // beams only exist up to lambda^mrt, so w_k(1) is recovered from w_k(lambda^mrt)
            let lm = g.lambda_mrt(k);
            let ortho = beam_vector(k, 0.0, ch).unwrap();
            let along: Vec<Complex64> = beam_vector(k, lm, ch)
                .unwrap()
                .iter()
                .zip(&ortho)
                .map(|(m, o)| (m - o * (1.0 - lm).sqrt()) / lm.sqrt())
                .collect();
            direct[i] = (inner(ch.h(k, k), &along), inner(ch.h(k, k), &ortho));
            leak[i] = (inner(ch.h(k, k.other()), &along), inner(ch.h(k, k.other()), &ortho));
        }
        SinrOracle {
            direct,
            leak,
            sigma2: ch.sigma2(),
            lambda_mrt: [g.lambda_mrt(Link::One), g.lambda_mrt(Link::Two)],
        }
    }

    fn power((a, b): (Complex64, Complex64), lambda: f64) -> f64 {
        // box coordinates like lambda^mrt - other can round a hair below zero
        let lambda = lambda.clamp(0.0, 1.0);
        (a * lambda.sqrt() + b * (1.0 - lambda).sqrt()).norm_sqr()
    }

    pub fn sinr(&self, lambda1: f64, lambda2: f64) -> (f64, f64) {
        let d1 = Self::power(self.direct[0], lambda1);
        let d2 = Self::power(self.direct[1], lambda2);
        let i1 = Self::power(self.leak[0], lambda1);
        let i2 = Self::power(self.leak[1], lambda2);
        (d1 / (self.sigma2 + i2), d2 / (self.sigma2 + i1))
    }

    /// Consumer `k`'s utility at holdings `(own, other)`.
    pub fn utility(&self, k: Link, own: f64, other: f64) -> f64 {
        match k {
            Link::One => self.sinr(own, self.lambda_mrt[1] - other).0,
            Link::Two => self.sinr(self.lambda_mrt[0] - other, own).1,
        }
    }

    pub fn lmrt(&self, k: Link) -> f64 {
        self.lambda_mrt[(k.index() - 1) as usize]
    }

    /// Consumer `k`'s utility with the other consumer's holding allowed past the box edge.
    /// The interference power `lambda * |h^H w(1)|^2` is linear in `lambda` (the zero-forcing
    /// beam leaks nothing), so it extends to negative parameters while the denominator
    /// stays positive; `None` once it does not.
    pub fn utility_unboxed(&self, k: Link, own: f64, other: f64) -> Option<f64> {
        let (i, l) = ((k.index() - 1) as usize, (k.other().index() - 1) as usize);
        let interference = (self.lambda_mrt[l] - other) * self.leak[l].0.norm_sqr();
        let denom = self.sigma2 + interference;
        (denom > 0.0).then(|| Self::power(self.direct[i], own) / denom)
    }

    /// Utility-maximizing bundle on consumer `k`'s budget line with relative price `rel`,
    /// scanning `n` points of the line. The budget set only asks for nonnegative
    /// holdings, so the other good may exceed the box.
    pub fn budget_demand(&self, k: Link, rel: f64, n: usize) -> (f64, f64) {
        let lk = self.lmrt(k);
        let mut best = (f64::NEG_INFINITY, 0.0, 0.0);
        for i in 0..n {
            let own = lk * i as f64 / (n - 1) as f64;
            let other = rel * (lk - own);
            if let Some(u) = self.utility_unboxed(k, own, other) {
                if u > best.0 {
                    best = (u, own, other);
                }
            }
        }
        (best.1, best.2)
    }

    /// The `lambda2` at which link 2 reaches `level` with `lambda1` fixed, or `None` if
    /// out of reach. Link 2's SINR is increasing in `lambda2` on `[0, lambda_2^mrt]`.
    fn level_crossing(&self, lambda1: f64, level: f64, n: usize) -> Option<f64> {
        let l2 = self.lambda_mrt[1];
        let phi2 = |j: usize| self.sinr(lambda1, l2 * j as f64 / (n - 1) as f64).1;
        if phi2(n - 1) < level {
            return None;
        }
        if phi2(0) >= level {
            return Some(0.0);
        }
        let (mut lo, mut hi) = (0usize, n - 1);
        while hi - lo > 1 {
            let mid = (lo + hi) / 2;
            if phi2(mid) >= level {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        let (mut a, mut b) = (l2 * lo as f64 / (n - 1) as f64, l2 * hi as f64 / (n - 1) as f64);
        for _ in 0..60 {
            let m = 0.5 * (a + b);
            if self.sinr(lambda1, m).1 >= level {
                b = m;
            } else {
                a = m;
            }
        }
        Some(b)
    }

    /// Fixed-level Pareto oracle on an `n x n` grid of the box: for each grid value of
    /// `lambda1`, locate the grid cell where link 2's SINR crosses `level` and refine the
    /// crossing inside the cell; return the grid `lambda1` maximizing link 1's SINR.
    pub fn pareto_lambda1(&self, level: f64, n: usize) -> f64 {
        let l1 = self.lambda_mrt[0];
        let mut best = (f64::NEG_INFINITY, f64::NAN);
        for i in 0..n {
            let a = l1 * i as f64 / (n - 1) as f64;
            if let Some(b) = self.level_crossing(a, level, n) {
                let phi1 = self.sinr(a, b).0;
                if phi1 > best.0 {
                    best = (phi1, a);
                }
            }
        }
        best.1
    }

    /// SINR pairs of an `n x n` grid over the box.
    pub fn grid(&self, n: usize) -> Vec<(f64, f64)> {
        let mut out = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                out.push(self.sinr(
                    self.lambda_mrt[0] * i as f64 / (n - 1) as f64,
                    self.lambda_mrt[1] * j as f64 / (n - 1) as f64,
                ));
            }
        }
        out
    }
}

/// Whether some grid pair is componentwise at least `p` and strictly better in one
/// component, with relative slack `tol`.
pub fn dominated(p: (f64, f64), grid: &[(f64, f64)], tol: f64) -> bool {
    let t1 = tol * p.0.abs().max(1.0);
    let t2 = tol * p.1.abs().max(1.0);
    grid.iter()
        .any(|&(a, b)| a >= p.0 - t1 && b >= p.1 - t2 && (a > p.0 + t1 || b > p.1 + t2))
}

/// Excess demand for good 1 from the closed-form demands, evaluated independently of
/// the agents and the quintic.
pub fn excess_good1(g: &DerivedGains, beta: f64) -> f64 {
    let c1 = ConsumerParams::from_gains(Link::One, g);
    let c2 = ConsumerParams::from_gains(Link::Two, g);
    c1.demand_at(beta).0 + c2.demand_at(1.0 / beta).1 - g.lambda_mrt(Link::One)
}

/// The market-clearing price by bisection on the sign of the excess demand for good 1.
pub fn bisection_price(g: &DerivedGains) -> f64 {
    let (mut lo, mut hi) = price_bounds(g).unwrap();
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if excess_good1(g, mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// `n` interior prices spread evenly over the open feasible interval.
pub fn interior_prices(g: &DerivedGains, n: usize) -> Vec<f64> {
    let (lo, hi) = price_bounds(g).unwrap();
    (1..=n).map(|i| lo + (hi - lo) * i as f64 / (n + 1) as f64).collect()
}
