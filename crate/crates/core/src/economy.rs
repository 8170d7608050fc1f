//! The Edgeworth box: goods coordinates, indifference curves, the contract
//! curve (the Pareto boundary in closed form) and the bounds of the core.
//!
//! Consumer `k` holds `x_k^k` of its own good and `x_l^k` of the other. In a box
//! allocation the beamforming parameters are `lambda_1 = x11` and `lambda_2 = x22`.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::phy::{sinr_lambda_unchecked, DerivedGains, Link, SinrPair, RANGE_TOL};
use crate::roots::{bisect, cubic_roots, golden_max, real_roots};
use crate::{Error, Result};

/// Tolerance on the goods-conservation constraint of a box allocation.
pub const BOX_SUM_TOL: f64 = 1e-9;

/// Curve endpoints are approached at this fraction of `lambda_2^mrt` from either side.
pub const ENDPOINT_EPS: f64 = 1e-6;

/// Number of contract-curve samples used for boundary searches by default.
pub const DEFAULT_CURVE_SAMPLES: usize = 1000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum AllocationKind {
    /// Both consumers' holdings, with every good fully distributed.
    Box,
    /// Only the holdings of one consumer are meaningful; the other entries are zero.
    Possession(Link),
}

/// A point of the Edgeworth box.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Allocation {
    pub x11: f64,
    pub x21: f64,
    pub x12: f64,
    pub x22: f64,
    pub kind: AllocationKind,
}

fn check_range(name: &str, v: f64, hi: f64) -> Result<()> {
    if v >= -RANGE_TOL && v <= hi + RANGE_TOL {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!("{name} = {v} outside [0, {hi}]")))
    }
}

impl Allocation {
    pub fn new_box(x11: f64, x21: f64, x12: f64, x22: f64, gains: &DerivedGains) -> Result<Self> {
        let l1 = gains.lambda_mrt(Link::One);
        let l2 = gains.lambda_mrt(Link::Two);
        check_range("x11", x11, l1)?;
        check_range("x12", x12, l1)?;
        check_range("x21", x21, l2)?;
        check_range("x22", x22, l2)?;
        if (x11 + x12 - l1).abs() > BOX_SUM_TOL || (x21 + x22 - l2).abs() > BOX_SUM_TOL {
            return Err(Error::InvalidArgument(format!(
                "allocation does not distribute the endowment: x11+x12 = {}, x21+x22 = {}",
                x11 + x12,
                x21 + x22
            )));
        }
        Ok(Allocation {
            x11,
            x21,
            x12,
            x22,
            kind: AllocationKind::Box,
        })
    }

    /// The box allocation with beamforming parameters `(lambda_1, lambda_2) = (x11, x22)`.
    pub fn from_box_coords(x11: f64, x22: f64, gains: &DerivedGains) -> Result<Self> {
        let l1 = gains.lambda_mrt(Link::One);
        let l2 = gains.lambda_mrt(Link::Two);
        Self::new_box(x11, l2 - x22, l1 - x11, x22, gains)
    }

    /// Holdings of a single consumer: `own` of its own good and `other` of the other good.
    pub fn possession(k: Link, own: f64, other: f64, gains: &DerivedGains) -> Result<Self> {
        check_range("own good", own, gains.lambda_mrt(k))?;
        check_range("other good", other, gains.lambda_mrt(k.other()))?;
        let (x11, x21, x12, x22) = match k {
            Link::One => (own, other, 0.0, 0.0),
            Link::Two => (0.0, 0.0, other, own),
        };
        Ok(Allocation {
            x11,
            x21,
            x12,
            x22,
            kind: AllocationKind::Possession(k),
        })
    }

    /// The endowment (Nash equilibrium): each consumer keeps all of its own good.
    pub fn endowment(gains: &DerivedGains) -> Self {
        Allocation {
            x11: gains.lambda_mrt(Link::One),
            x21: 0.0,
            x12: 0.0,
            x22: gains.lambda_mrt(Link::Two),
            kind: AllocationKind::Box,
        }
    }

    pub fn kind(&self) -> AllocationKind {
        self.kind
    }

    /// `(x_k^k, x_l^k)` for consumer `k`.
    pub fn holdings(&self, k: Link) -> (f64, f64) {
        match k {
            Link::One => (self.x11, self.x21),
            Link::Two => (self.x22, self.x12),
        }
    }

    /// Beamforming parameters `(lambda_1, lambda_2)` of a box allocation.
    pub fn lambdas(&self) -> (f64, f64) {
        (self.x11, self.x22)
    }

    pub fn sinr(&self, gains: &DerivedGains) -> Result<SinrPair> {
        Ok(SinrPair {
            phi1: utility_goods(Link::One, self.x11, self.x21, gains)?,
            phi2: utility_goods(Link::Two, self.x22, self.x12, gains)?,
        })
    }
}

/// `(sqrt(x g_k) + sqrt((1 - x) zfg_k))`, the amplitude of the direct signal.
fn direct_amplitude(k: Link, x: f64, gains: &DerivedGains) -> f64 {
    (x * gains.g(k)).sqrt() + ((1.0 - x) * gains.zfg(k)).sqrt()
}

/// Interference-plus-noise of consumer `k` holding `other` units of the other good.
fn denominator(k: Link, other: f64, gains: &DerivedGains) -> f64 {
    let l = k.other();
    gains.sigma2() + (gains.lambda_mrt(l) - other) * gains.cross(l)
}

/// SINR of consumer `k` as a function of its holdings.
pub fn utility_goods(k: Link, own: f64, other: f64, gains: &DerivedGains) -> Result<f64> {
    check_range("own good", own, gains.lambda_mrt(k))?;
    check_range("other good", other, gains.lambda_mrt(k.other()))?;
    let own = own.clamp(0.0, gains.lambda_mrt(k));
    let other = other.clamp(0.0, gains.lambda_mrt(k.other()));
    let amp = direct_amplitude(k, own, gains);
    Ok(amp * amp / denominator(k, other, gains))
}

/// Closed-form gradient of consumer `k`'s utility with respect to `(own, other)`.
///
/// Singular at `own = 0`, where the first component diverges.
pub fn utility_partials(k: Link, own: f64, other: f64, gains: &DerivedGains) -> Result<(f64, f64)> {
    check_range("own good", own, gains.lambda_mrt(k))?;
    check_range("other good", other, gains.lambda_mrt(k.other()))?;
    if own <= 0.0 || own >= 1.0 {
        return Err(Error::BoundaryAllocation(format!(
            "derivative singular at own holding {own}"
        )));
    }
    let amp = direct_amplitude(k, own, gains);
    let den = denominator(k, other, gains);
    let slope = (gains.g(k) / own).sqrt() - (gains.zfg(k) / (1.0 - own)).sqrt();
    let d_own = amp * slope / den;
    let d_other = gains.cross(k.other()) * amp * amp / (den * den);
    Ok((d_own, d_other))
}

/// Indifference curve `I_k`: the amount of the other good that keeps consumer `k` at
/// utility `phi` while holding `x_own` of its own good.
pub fn indifference_good2_of_good1(k: Link, x_own: f64, phi: f64, gains: &DerivedGains) -> Result<f64> {
    let lk = gains.lambda_mrt(k);
    if !(x_own > 0.0 && x_own <= lk + RANGE_TOL) {
        return Err(Error::InvalidArgument(format!("own holding {x_own} outside (0, {lk}]")));
    }
    if !(phi > 0.0 && phi.is_finite()) {
        return Err(Error::InvalidArgument(format!("utility level must be positive, got {phi}")));
    }
    let value = indifference_other_raw(k, x_own.min(lk), phi, gains);
    let hi = gains.lambda_mrt(k.other());
    if value < -RANGE_TOL || value > hi + RANGE_TOL {
        return Err(Error::OutOfBox { value, lo: 0.0, hi });
    }
    Ok(value.clamp(0.0, hi))
}

/// Unchecked form of [`indifference_good2_of_good1`], continuous outside the box.
fn indifference_other_raw(k: Link, x_own: f64, phi: f64, gains: &DerivedGains) -> f64 {
    let l = k.other();
    let amp = direct_amplitude(k, x_own, gains);
    gains.lambda_mrt(l) + gains.sigma2() / gains.cross(l) - amp * amp / (phi * gains.cross(l))
}

/// `(sqrt(ab) - sqrt((1 - a)(1 - b)))^2` for `a, b` in `[0, 1]`.
///
/// With `a = lambda^mrt`, this is the own holding at which the direct power is the
/// fraction `b` of its maximum, on the branch below `lambda^mrt`.
pub fn own_good_for_fraction(a: f64, b: f64) -> f64 {
    let s = signed_own_root(a, b);
    s * s
}

fn signed_own_root(a: f64, b: f64) -> f64 {
    (a * b).sqrt() - ((1.0 - a) * (1.0 - b)).sqrt()
}

/// Indifference curve `I~_k`: the own holding that keeps consumer `k` at utility `phi`
/// while holding `x_other` of the other good.
pub fn indifference_good1_of_good2(k: Link, x_other: f64, phi: f64, gains: &DerivedGains) -> Result<f64> {
    let l = k.other();
    check_range("other good", x_other, gains.lambda_mrt(l))?;
    if !(phi > 0.0 && phi.is_finite()) {
        return Err(Error::InvalidArgument(format!("utility level must be positive, got {phi}")));
    }
    let lk = gains.lambda_mrt(k);
    let best = sinr_at_mrt(k, x_other, gains);
    let ratio = phi / best;
    if !(ratio >= 0.0 && ratio <= 1.0 + RANGE_TOL) {
        return Err(Error::InfeasibleLevel { ratio });
    }
    let s = signed_own_root(lk, ratio.min(1.0));
    if s < 0.0 {
        // the level lies below what zero forcing already achieves
        return Err(Error::OutOfBox {
            value: -(s * s),
            lo: 0.0,
            hi: lk,
        });
    }
    Ok((s * s).min(lk))
}

/// `phi_k(lambda_k^mrt, lambda_l^mrt - x_other)`: the best consumer `k` can do for a fixed
/// holding of the other good.
fn sinr_at_mrt(k: Link, x_other: f64, gains: &DerivedGains) -> f64 {
    gains.direct_norm_sqr(k) / denominator(k, x_other, gains)
}

/// Normalized residual of the tangency condition
/// `d1phi1/dx11 * dphi2/dx22 = dphi2/dx12 * dphi1/dx21` at an interior box allocation.
pub fn tangency_residual(alloc: &Allocation, gains: &DerivedGains) -> Result<f64> {
    tangency_gap(alloc, gains).map(f64::abs)
}

/// Signed form of [`tangency_residual`].
fn tangency_gap(alloc: &Allocation, gains: &DerivedGains) -> Result<f64> {
    if alloc.kind != AllocationKind::Box {
        return Err(Error::InvalidArgument("tangency needs a box allocation".into()));
    }
    let l1 = gains.lambda_mrt(Link::One);
    let l2 = gains.lambda_mrt(Link::Two);
    if !(alloc.x11 > 0.0 && alloc.x11 < l1 && alloc.x22 > 0.0 && alloc.x22 < l2) {
        return Err(Error::BoundaryAllocation(format!(
            "x11 = {}, x22 = {} not interior",
            alloc.x11, alloc.x22
        )));
    }
    let (d1_own, d1_other) = utility_partials(Link::One, alloc.x11, alloc.x21, gains)?;
    let (d2_own, d2_other) = utility_partials(Link::Two, alloc.x22, alloc.x12, gains)?;
    let lhs = d1_own * d2_own;
    let rhs = d2_other * d1_other;
    Ok((lhs - rhs) / lhs.abs().max(rhs.abs()).max(1.0))
}

/// The cubic whose admissible root is the contract curve at `x22`, together with the
/// dimensionless coefficient `C` used by the sign test.
fn contract_cubic(x22: f64, gains: &DerivedGains) -> ([f64; 4], f64) {
    let (g1, z1, g12) = (gains.g(Link::One), gains.zfg(Link::One), gains.cross(Link::One));
    let (g2, z2, g21) = (gains.g(Link::Two), gains.zfg(Link::Two), gains.cross(Link::Two));
    let s2 = gains.sigma2();

    // x21 = lambda2_mrt - x22 in the box, so sigma2/g21 + lambda2_mrt - x21 = sigma2/g21 + x22
    let num = (x22 * g2).sqrt() + ((1.0 - x22) * z2).sqrt();
    let slope = (g2 / x22).sqrt() - (z2 / (1.0 - x22)).sqrt();
    let c_ratio = num / (slope * (s2 / g21 + x22));

    // the cubic is written in gain units: it needs C scaled by g12
    let c = g12 * c_ratio;
    let m = c - g12;
    let a = -(g1 + z1) * m * m;
    let b = m * (2.0 * z1 * (c + s2) + g1 * (2.0 * s2 + c - g12));
    let cc = -z1 * (c + s2).powi(2) + s2 * g1 * (2.0 * g12 - 2.0 * c - s2);
    let d = g1 * s2 * s2;
    ([a, b, cc, d], c_ratio)
}

/// Every cubic root at `x22` and the subset passing the range and sign filters.
pub fn contract_curve_candidates(x22: f64, gains: &DerivedGains) -> (Vec<f64>, Vec<Complex64>) {
    let ([a, b, c, d], c_ratio) = contract_cubic(x22, gains);
    let roots = cubic_roots(a, b, c, d);
    let l1 = gains.lambda_mrt(Link::One);
    let offset = gains.sigma2() / gains.cross(Link::One);
    let accepted = real_roots(&roots, 1e-9)
        .into_iter()
        .filter(|&x| x >= -1e-9 && x <= l1 + 1e-9)
        .map(|x| x.clamp(0.0, l1))
        .filter(|&x| {
            let left = offset + x - c_ratio * x;
            let right = offset + x + c_ratio * (1.0 - x);
            left.signum() == right.signum()
        })
        .collect();
    (accepted, roots)
}

/// Every Pareto-optimal `x11` with consumer 2 holding `x22` of its own good, in
/// decreasing order.
///
/// At high SNR the boundary can fold back in the `(lambda_1, lambda_2)` plane, so one
/// `x22` may carry up to three boundary points.
pub fn contract_curve_branches(x22: f64, gains: &DerivedGains) -> Result<Vec<f64>> {
    gains.ensure_nondegenerate()?;
    let l2 = gains.lambda_mrt(Link::Two);
    if !(x22 > 0.0 && x22 < l2) {
        return Err(Error::InvalidArgument(format!("x22 = {x22} not in (0, {l2})")));
    }
    let (mut accepted, roots) = contract_curve_candidates(x22, gains);
    if accepted.is_empty() {
        return Err(Error::solver(
            format!("no admissible contract-curve root at x22 = {x22}"),
            roots,
        ));
    }
    accepted.sort_by(|a, b| b.total_cmp(a));
    Ok(accepted)
}

/// The contract curve: the `x11` of the Pareto-optimal box allocation with consumer 2
/// holding `x22` of its own good.
///
/// Fails with a solver error where the boundary folds and `x22` has several
/// Pareto-optimal partners; [`contract_curve_branches`] returns all of them.
pub fn contract_curve(x22: f64, gains: &DerivedGains) -> Result<f64> {
    let branches = contract_curve_branches(x22, gains)?;
    match branches.as_slice() {
        [x] => Ok(*x),
        _ => {
            let (_, roots) = contract_curve_candidates(x22, gains);
            Err(Error::solver(
                format!("{} admissible contract-curve roots at x22 = {x22}", branches.len()),
                roots,
            ))
        }
    }
}

/// One sample of the contract curve.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub alloc: Allocation,
    pub sinr: SinrPair,
    pub residual: f64,
}

/// `n` uniformly spaced `x22` values spanning `[eps, lambda_2^mrt - eps]`.
pub fn curve_x22_grid(gains: &DerivedGains, n: usize) -> Vec<f64> {
    let l2 = gains.lambda_mrt(Link::Two);
    let eps = ENDPOINT_EPS * l2;
    if n == 1 {
        return vec![0.5 * l2];
    }
    (0..n)
        .map(|i| eps + (l2 - 2.0 * eps) * i as f64 / (n - 1) as f64)
        .collect()
}

fn curve_point_at(x11: f64, x22: f64, gains: &DerivedGains) -> Result<CurvePoint> {
    let alloc = Allocation::from_box_coords(x11, x22, gains)?;
    let sinr = sinr_lambda_unchecked(x11, x22, gains);
    let residual = match tangency_residual(&alloc, gains) {
        Ok(r) => r,
        // the root can sit exactly on an edge of the box in the endpoint limits
        Err(Error::BoundaryAllocation(_)) => f64::NAN,
        Err(e) => return Err(e),
    };
    Ok(CurvePoint { alloc, sinr, residual })
}

pub fn curve_point(x22: f64, gains: &DerivedGains) -> Result<CurvePoint> {
    curve_point_at(contract_curve(x22, gains)?, x22, gains)
}

/// Samples the contract curve at `n >= 2` uniformly spaced interior `x22` values.
///
/// Every branch is kept where the curve folds, so the result can hold more than `n`
/// points. Points are ordered along the boundary by increasing SINR of link 2.
pub fn sample_contract_curve(gains: &DerivedGains, n: usize) -> Result<Vec<CurvePoint>> {
    gains.ensure_nondegenerate()?;
    if n < 2 {
        return Err(Error::InvalidArgument(format!("need at least 2 curve samples, got {n}")));
    }
    let mut points = Vec::with_capacity(n);
    for x22 in curve_x22_grid(gains, n) {
        for x11 in contract_curve_branches(x22, gains)? {
            points.push(curve_point_at(x11, x22, gains)?);
        }
    }
    if points.len() > n {
        points.sort_by(|a, b| a.sinr.phi2.total_cmp(&b.sinr.phi2));
    }
    Ok(points)
}

/// The two ends of the core on the contract curve.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CoreBounds {
    /// Largest SINR of link 1 on the boundary while link 2 stays at its Nash SINR.
    pub phi1_core: f64,
    /// Largest SINR of link 2 on the boundary while link 1 stays at its Nash SINR.
    pub phi2_core: f64,
    pub alloc_at_phi1_core: Allocation,
    pub alloc_at_phi2_core: Allocation,
}

impl CoreBounds {
    pub fn phi_core(&self, k: Link) -> f64 {
        match k {
            Link::One => self.phi1_core,
            Link::Two => self.phi2_core,
        }
    }
}

const LEVEL_SCAN: usize = 2001;

/// Maximizes `value(t)` over `t` in `[0, hi]` by a uniform scan, then refines inside the
/// bracket around the best sample. `value` returns `None` outside its domain; `slope`
/// is a signed quantity vanishing at the maximizer.
fn scan_max<F, S>(hi: f64, value: F, slope: S) -> Option<f64>
where
    F: Fn(f64) -> Option<f64>,
    S: Fn(f64) -> Option<f64>,
{
    let step = hi / (LEVEL_SCAN - 1) as f64;
    let mut best: Option<(usize, f64)> = None;
    for i in 0..LEVEL_SCAN {
        if let Some(v) = value(i as f64 * step) {
            if best.is_none_or(|(_, b)| v > b) {
                best = Some((i, v));
            }
        }
    }
    let (i, _) = best?;
    let sample = i as f64 * step;
    let lo = i.saturating_sub(1) as f64 * step;
    let up = ((i + 1).min(LEVEL_SCAN - 1) as f64 * step).min(hi);

    let score = |t: f64| value(t).unwrap_or(f64::NEG_INFINITY);
    // the slope is undefined on the box edges; pull the bracket in to the last point
    // where it is defined
    let inner = if slope(sample).is_some() { sample } else { 0.5 * (lo + up) };
    let lo = last_defined(&slope, inner, lo);
    let up = last_defined(&slope, inner, up);
    let refined = match (slope(lo), slope(up)) {
        (Some(sa), Some(sb)) if sa.signum() != sb.signum() => {
            bisect(|t| slope(t).unwrap_or(f64::NAN), lo, up, 0.0).ok()
        }
        _ => None,
    };
    let t = refined.unwrap_or_else(|| golden_max(score, lo, up, 1e-14 * hi));
    Some(if score(t) >= score(sample) { t } else { sample })
}

/// Moves from `outer` towards `inner` until `f` is defined, to within 60 halvings.
fn last_defined<S>(f: &S, inner: f64, outer: f64) -> f64
where
    S: Fn(f64) -> Option<f64>,
{
    if f(outer).is_some() {
        return outer;
    }
    let (mut good, mut bad) = (inner, outer);
    for _ in 0..60 {
        let mid = 0.5 * (good + bad);
        if f(mid).is_some() {
            good = mid;
        } else {
            bad = mid;
        }
    }
    good
}

/// Best allocation for consumer `k` among those keeping the other consumer at utility
/// `level`, i.e. the point where the other's indifference curve meets the contract curve.
fn best_on_level_curve(k: Link, level: f64, gains: &DerivedGains) -> Result<Allocation> {
    let l = k.other();
    let lk = gains.lambda_mrt(k);
    let ll = gains.lambda_mrt(l);
    // walk the other consumer's indifference curve by its own holding
    let lambdas = |other_own: f64| -> Option<(f64, f64)> {
        let given = indifference_other_raw(l, other_own, level, gains);
        if !(-RANGE_TOL..=lk + RANGE_TOL).contains(&given) {
            return None;
        }
        let own = (lk - given).clamp(0.0, lk);
        Some(match k {
            Link::One => (own, other_own),
            Link::Two => (other_own, own),
        })
    };
    let utility = |t: f64| lambdas(t).map(|(a, b)| sinr_lambda_unchecked(a, b, gains).get(k));
    let slope = |t: f64| {
        let (a, b) = lambdas(t)?;
        let alloc = Allocation::from_box_coords(a, b, gains).ok()?;
        tangency_gap(&alloc, gains).ok()
    };
    let t = scan_max(ll, utility, slope).ok_or_else(|| {
        Error::solver(format!("indifference curve of link {l} never enters the box"), Vec::new())
    })?;
    let (l1, l2) = lambdas(t).expect("maximizer lies in the domain");
    Allocation::from_box_coords(l1, l2, gains)
}

/// Intersections of the Nash-level indifference curves with the contract curve.
///
/// Each bound is found as the maximum of one consumer's utility along the other's
/// Nash-level indifference curve, which is where the two curves are tangent.
pub fn core_bounds(gains: &DerivedGains) -> Result<CoreBounds> {
    gains.ensure_nondegenerate()?;
    let l1 = gains.lambda_mrt(Link::One);
    let l2 = gains.lambda_mrt(Link::Two);
    let nash = sinr_lambda_unchecked(l1, l2, gains);

    let alloc_a = best_on_level_curve(Link::One, nash.phi2, gains)?;
    let alloc_b = best_on_level_curve(Link::Two, nash.phi1, gains)?;
    let (a1, a2) = alloc_a.lambdas();
    let (b1, b2) = alloc_b.lambdas();
    let phi1_core = sinr_lambda_unchecked(a1, a2, gains).phi1;
    let phi2_core = sinr_lambda_unchecked(b1, b2, gains).phi2;
    if phi1_core < nash.phi1 || phi2_core < nash.phi2 {
        return Err(Error::solver("core bound below the Nash utility", Vec::new()));
    }
    Ok(CoreBounds {
        phi1_core,
        phi2_core,
        alloc_at_phi1_core: alloc_a,
        alloc_at_phi2_core: alloc_b,
    })
}

/// Points `(own, other)` of consumer `k`'s indifference curve at level `phi`, sampled at
/// `n` own holdings in `(0, lambda_k^mrt]`; holdings whose curve leaves the box are skipped.
pub fn indifference_trace(k: Link, phi: f64, gains: &DerivedGains, n: usize) -> Vec<(f64, f64)> {
    let lk = gains.lambda_mrt(k);
    (1..=n)
        .filter_map(|i| {
            let own = lk * i as f64 / n as f64;
            indifference_good2_of_good1(k, own, phi, gains).ok().map(|other| (own, other))
        })
        .collect()
}
