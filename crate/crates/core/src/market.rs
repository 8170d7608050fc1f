//! Budget sets, closed-form demand, excess demand and the Walrasian price.
//!
//! Prices enter only through the ratio `beta = p1 / p2`; demand is homogeneous of
//! degree zero, so the API never takes the two prices separately.

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::economy::Allocation;
use crate::phy::{sinr_lambda_unchecked, DerivedGains, Link, SinrPair};
use crate::roots::{bracketed_newton, eval_with_derivative, polynomial_roots, real_roots};
use crate::{Error, Result};

/// Market-clearing tolerance in goods units.
pub const CLEARING_TOL: f64 = 1e-9;

const NEWTON_MAX_ITER: usize = 100;

/// A price ratio together with the interval of feasible ratios.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PriceRatio {
    pub beta: f64,
    pub beta_lo: f64,
    pub beta_hi: f64,
}

impl PriceRatio {
    pub fn new(beta: f64, beta_lo: f64, beta_hi: f64) -> Result<Self> {
        if !(beta > 0.0 && beta.is_finite()) {
            return Err(Error::InvalidArgument(format!("price ratio must be positive, got {beta}")));
        }
        if !(beta_lo > 0.0 && beta_lo < beta_hi && beta_hi.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "invalid price interval ({beta_lo}, {beta_hi})"
            )));
        }
        Ok(PriceRatio { beta, beta_lo, beta_hi })
    }

    /// `beta` with the feasible interval of `gains`.
    pub fn with_gains(beta: f64, gains: &DerivedGains) -> Result<Self> {
        let (lo, hi) = price_bounds(gains)?;
        Self::new(beta, lo, hi)
    }

    pub fn is_interior(&self) -> bool {
        self.beta_lo < self.beta && self.beta < self.beta_hi
    }

    fn ensure_interior(&self) -> Result<()> {
        if self.is_interior() {
            Ok(())
        } else {
            Err(Error::PriceInfeasible {
                beta: self.beta,
                lo: self.beta_lo,
                hi: self.beta_hi,
            })
        }
    }
}

/// Feasible price interval from the scalars the arbitrator holds in the iterative protocol.
pub fn price_bounds_from(lambda_mrt: [f64; 2], cross: [f64; 2], sigma2: f64) -> (f64, f64) {
    let [l1, l2] = lambda_mrt;
    let [g12, g21] = cross;
    let lo = l2 * g12 / (sigma2 + l1 * g12);
    let hi = (sigma2 + l2 * g21) / (l1 * g21);
    (lo, hi)
}

pub fn price_bounds(gains: &DerivedGains) -> Result<(f64, f64)> {
    gains.ensure_nondegenerate()?;
    Ok(price_bounds_from(
        [gains.lambda_mrt(Link::One), gains.lambda_mrt(Link::Two)],
        [gains.cross(Link::One), gains.cross(Link::Two)],
        gains.sigma2(),
    ))
}

/// What a consumer needs to know to compute its own demand.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConsumerParams {
    pub g: f64,
    pub zfg: f64,
    pub lambda_mrt: f64,
    /// Noise plus interference at the Nash equilibrium, `sigma2 + lambda_l^mrt ||h_lk||^2`.
    pub nash_noise: f64,
    /// Gain of the incoming interference channel, `||h_lk||^2`.
    pub cross_in: f64,
}

impl ConsumerParams {
    pub fn from_gains(k: Link, gains: &DerivedGains) -> Self {
        ConsumerParams {
            g: gains.g(k),
            zfg: gains.zfg(k),
            lambda_mrt: gains.lambda_mrt(k),
            nash_noise: gains.nash_noise_interference(k),
            cross_in: gains.cross(k.other()),
        }
    }

    /// Utility-maximizing `(own, other)` holdings when the own good costs `rel` units of
    /// the other good.
    pub fn demand_at(&self, rel: f64) -> (f64, f64) {
        let slack = self.nash_noise - self.lambda_mrt * self.cross_in * rel;
        let t = 1.0 + self.cross_in * rel / slack;
        let own = 1.0 / (1.0 + (self.zfg / self.g) * t * t);
        (own, rel * (self.lambda_mrt - own))
    }
}

/// Price of consumer `k`'s own good in units of the other good.
pub(crate) fn relative_price(k: Link, beta: f64) -> f64 {
    match k {
        Link::One => beta,
        Link::Two => 1.0 / beta,
    }
}

/// Demand `(x_own, x_other)` of consumer `k` at an interior price ratio.
pub fn demand(k: Link, price: &PriceRatio, gains: &DerivedGains) -> Result<(f64, f64)> {
    price.ensure_interior()?;
    Ok(ConsumerParams::from_gains(k, gains).demand_at(relative_price(k, price.beta)))
}

/// Aggregate excess demand for good 1, `x11 + x12 - lambda_1^mrt`.
pub fn excess_demand_good1(price: &PriceRatio, gains: &DerivedGains) -> Result<f64> {
    let (x11, _) = demand(Link::One, price, gains)?;
    let (_, x12) = demand(Link::Two, price, gains)?;
    Ok(x11 + x12 - gains.lambda_mrt(Link::One))
}

/// Aggregate excess demand for good 2, `x21 + x22 - lambda_2^mrt`.
pub fn excess_demand_good2(price: &PriceRatio, gains: &DerivedGains) -> Result<f64> {
    let (_, x21) = demand(Link::One, price, gains)?;
    let (x22, _) = demand(Link::Two, price, gains)?;
    Ok(x21 + x22 - gains.lambda_mrt(Link::Two))
}

/// Points `(own, other)` of consumer `k`'s budget line, through its endowment
/// `(lambda_k^mrt, 0)` with slope `-rel`.
pub fn budget_line(k: Link, price: &PriceRatio, gains: &DerivedGains, n: usize) -> Vec<(f64, f64)> {
    let lk = gains.lambda_mrt(k);
    let rel = relative_price(k, price.beta);
    let n = n.max(2);
    (0..n)
        .map(|i| {
            let own = lk * i as f64 / (n - 1) as f64;
            (own, rel * (lk - own))
        })
        .collect()
}

/// The quintic in `beta` whose unique root in the feasible interval is the Walrasian price.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WalrasPolynomial {
    pub t1: f64,
    pub t2: f64,
    pub t3: f64,
    pub t4: f64,
    pub s1: f64,
    pub s2: f64,
    pub s3: f64,
    pub s4: f64,
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub d: f64,
    pub e: f64,
    pub f: f64,
}

/// The four auxiliary constants of link `k`, with `cross` the gain of the channel it
/// interferes on.
fn auxiliary(g: f64, zfg: f64, lambda_mrt: f64, cross: f64, sigma2: f64) -> [f64; 4] {
    let sum = g + zfg;
    [
        (g - zfg) / sum,
        lambda_mrt + sigma2 / cross,
        (1.0 - lambda_mrt) * lambda_mrt,
        (zfg * zfg - zfg * g + g * g) / (sum * sum),
    ]
}

impl WalrasPolynomial {
    /// Coefficients from highest to lowest degree.
    pub fn coefficients(&self) -> [f64; 6] {
        [self.a, self.b, self.c, self.d, self.e, self.f]
    }

    pub fn eval(&self, beta: f64) -> f64 {
        eval_with_derivative(&self.coefficients(), beta).0
    }

    pub fn max_abs_coefficient(&self) -> f64 {
        self.coefficients().iter().fold(0.0, |m, c| m.max(c.abs()))
    }
}

pub fn walras_polynomial(gains: &DerivedGains) -> Result<WalrasPolynomial> {
    gains.ensure_nondegenerate()?;
    let s2 = gains.sigma2();
    let [t1, t2, t3, t4] = auxiliary(
        gains.g(Link::One),
        gains.zfg(Link::One),
        gains.lambda_mrt(Link::One),
        gains.cross(Link::One),
        s2,
    );
    let [q1, q2, q3, q4] = auxiliary(
        gains.g(Link::Two),
        gains.zfg(Link::Two),
        gains.lambda_mrt(Link::Two),
        gains.cross(Link::Two),
        s2,
    );
    Ok(WalrasPolynomial {
        t1,
        t2,
        t3,
        t4,
        s1: q1,
        s2: q2,
        s3: q3,
        s4: q4,
        a: t1 * t2 * t2 * t3,
        b: -2.0 * t3 * t2 * (t2 * q2 + t1 * q1),
        c: 2.0 * t4 * t2 * q3 + 4.0 * q1 * q2 * t2 * t3 + t1 * q4 * t3,
        d: -2.0 * q4 * q2 * t3 - 4.0 * t1 * t2 * q2 * q3 - q1 * t4 * q3,
        e: 2.0 * q3 * q2 * (t2 * q2 + t1 * q1),
        f: -q1 * q2 * q2 * q3,
    })
}

/// The Walrasian price ratio: the unique root of the quintic in the feasible interval,
/// verified to clear the market.
pub fn walras_price(gains: &DerivedGains) -> Result<PriceRatio> {
    let poly = walras_polynomial(gains)?;
    let (lo, hi) = price_bounds(gains)?;
    let coeffs = poly.coefficients();

    let roots = polynomial_roots(&coeffs);
    let inside = real_roots(&roots, 1e-9)
        .into_iter()
        .filter(|&r| r > lo && r < hi)
        .count();
    if inside != 1 {
        return Err(Error::solver(
            format!("{inside} quintic roots in the price interval ({lo}, {hi})"),
            roots,
        ));
    }
    let beta = bracketed_newton(|x| eval_with_derivative(&coeffs, x), lo, hi, NEWTON_MAX_ITER)
        .map_err(|e| match e {
            Error::Solver { reason, .. } => Error::Solver { reason, roots: roots.clone() },
            other => other,
        })?;

    let price = PriceRatio::new(beta, lo, hi)?;
    let z1 = excess_demand_good1(&price, gains)?;
    if z1.abs() > CLEARING_TOL {
        return Err(Error::solver(
            format!("quintic root {beta} leaves excess demand {z1}"),
            roots,
        ));
    }
    Ok(price)
}

/// The Walrasian equilibrium with its allocation and the Nash reference.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WalrasEquilibrium {
    pub price: PriceRatio,
    pub allocation: Allocation,
    pub sinr: SinrPair,
    pub nash: SinrPair,
    pub polynomial: WalrasPolynomial,
}

/// Assembles the box allocation from both consumers' demands at `price`.
pub fn allocation_at(price: &PriceRatio, gains: &DerivedGains) -> Result<Allocation> {
    let (x11, x21) = demand(Link::One, price, gains)?;
    let (x22, x12) = demand(Link::Two, price, gains)?;
    Allocation::new_box(x11, x21, x12, x22, gains).map_err(|e| {
        Error::solver(format!("demands at beta = {} leave the box: {e}", price.beta), Vec::new())
    })
}

pub fn walras_equilibrium(gains: &DerivedGains) -> Result<WalrasEquilibrium> {
    let price = walras_price(gains)?;
    let allocation = allocation_at(&price, gains)?;
    let l1 = gains.lambda_mrt(Link::One);
    let l2 = gains.lambda_mrt(Link::Two);
    Ok(WalrasEquilibrium {
        price,
        allocation,
        sinr: sinr_lambda_unchecked(allocation.x11, allocation.x22, gains),
        nash: sinr_lambda_unchecked(l1, l2, gains),
        polynomial: walras_polynomial(gains)?,
    })
}

impl WalrasEquilibrium {
    pub fn to_json_value(&self) -> Value {
        let a = &self.allocation;
        let p = &self.polynomial;
        json!({
            "beta_star": self.price.beta,
            "beta_lo": self.price.beta_lo,
            "beta_hi": self.price.beta_hi,
            "allocation": {"x11": a.x11, "x21": a.x21, "x12": a.x12, "x22": a.x22},
            "sinr": {"phi1": self.sinr.phi1, "phi2": self.sinr.phi2},
            "nash": {"phi1": self.nash.phi1, "phi2": self.nash.phi2},
            "polynomial": {"a": p.a, "b": p.b, "c": p.c, "d": p.d, "e": p.e, "f": p.f},
        })
    }
}
