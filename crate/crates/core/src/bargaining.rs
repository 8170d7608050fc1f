//! Reference operating points: Nash equilibrium, Walrasian equilibrium, MMSE beamforming,
//! maximum sum SINR, the Nash bargaining solution and the Kalai-Smorodinsky solution.
//!
//! The bargaining points are grid searches over sampled boundary points. Every argmax
//! keeps the lowest sample index on ties.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::economy::{CoreBounds, CurvePoint};
use crate::market::walras_equilibrium;
use crate::phy::{
    beam_to_lambda, mmse_beam, rate, sinr_lambda, ChannelRealization, DerivedGains, Link, SinrPair, RANGE_TOL,
};
use crate::report::{Cell, Table};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum PointLabel {
    Nash,
    Walras,
    Mmse,
    MaxSum,
    Nbs,
    Ks,
    /// A sample of the Pareto boundary.
    Boundary,
}

impl PointLabel {
    pub fn as_str(&self) -> &'static str {
        match self {
            PointLabel::Nash => "nash",
            PointLabel::Walras => "walras",
            PointLabel::Mmse => "mmse",
            PointLabel::MaxSum => "max_sum",
            PointLabel::Nbs => "nbs",
            PointLabel::Ks => "ks",
            PointLabel::Boundary => "boundary",
        }
    }
}

impl fmt::Display for PointLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OperatingPoint {
    pub label: PointLabel,
    pub lambda1: f64,
    pub lambda2: f64,
    pub sinr: SinrPair,
}

impl OperatingPoint {
    pub fn new(label: PointLabel, lambda1: f64, lambda2: f64, gains: &DerivedGains) -> Result<Self> {
        Ok(OperatingPoint {
            label,
            lambda1,
            lambda2,
            sinr: sinr_lambda(lambda1, lambda2, gains)?,
        })
    }

    pub fn relabel(self, label: PointLabel) -> Self {
        OperatingPoint { label, ..self }
    }

    /// Weak componentwise dominance of the Nash SINRs.
    pub fn in_core(&self, nash: &OperatingPoint) -> bool {
        self.sinr.weakly_dominates(&nash.sinr, 0.0)
    }
}

pub fn nash_point(gains: &DerivedGains) -> Result<OperatingPoint> {
    OperatingPoint::new(
        PointLabel::Nash,
        gains.lambda_mrt(Link::One),
        gains.lambda_mrt(Link::Two),
        gains,
    )
}

pub fn walras_point(gains: &DerivedGains) -> Result<OperatingPoint> {
    let eq = walras_equilibrium(gains)?;
    let (l1, l2) = eq.allocation.lambdas();
    Ok(OperatingPoint {
        label: PointLabel::Walras,
        lambda1: l1,
        lambda2: l2,
        sinr: eq.sinr,
    })
}

/// The operating point of the MMSE beamformers. Their parameters are not clamped; one
/// outside `[0, lambda_k^mrt]` is reported as an invariant failure.
pub fn mmse_point(ch: &ChannelRealization, gains: &DerivedGains) -> Result<OperatingPoint> {
    let mut lambdas = [0.0; 2];
    for (slot, k) in Link::BOTH.into_iter().enumerate() {
        let lambda = beam_to_lambda(k, &mmse_beam(k, ch), ch)?;
        let hi = gains.lambda_mrt(k);
        if !(lambda >= -RANGE_TOL && lambda <= hi + RANGE_TOL) {
            return Err(Error::Invariant(format!(
                "MMSE parameter of link {k} is {lambda}, outside [0, {hi}]"
            )));
        }
        lambdas[slot] = lambda;
    }
    OperatingPoint::new(PointLabel::Mmse, lambdas[0], lambdas[1], gains)
}

/// Boundary samples as operating points.
pub fn boundary_points(curve: &[CurvePoint]) -> Vec<OperatingPoint> {
    curve
        .iter()
        .map(|p| {
            let (l1, l2) = p.alloc.lambdas();
            OperatingPoint {
                label: PointLabel::Boundary,
                lambda1: l1,
                lambda2: l2,
                sinr: p.sinr,
            }
        })
        .collect()
}

/// Index of the first maximum of `score` over the samples where it is defined.
fn argmax<F>(samples: &[OperatingPoint], score: F) -> Option<usize>
where
    F: Fn(&OperatingPoint) -> Option<f64>,
{
    let mut best: Option<(usize, f64)> = None;
    for (i, p) in samples.iter().enumerate() {
        if let Some(s) = score(p) {
            if best.is_none_or(|(_, b)| s > b) {
                best = Some((i, s));
            }
        }
    }
    best.map(|(i, _)| i)
}

pub fn max_sum_sinr(samples: &[OperatingPoint]) -> Result<OperatingPoint> {
    argmax(samples, |p| Some(p.sinr.phi1 + p.sinr.phi2))
        .map(|i| samples[i].relabel(PointLabel::MaxSum))
        .ok_or_else(|| Error::InvalidArgument("no boundary samples".into()))
}

/// Maximizes the product of SINR gains over the Nash point among samples dominating it.
pub fn nbs(samples: &[OperatingPoint], nash: &OperatingPoint) -> Result<OperatingPoint> {
    if samples.is_empty() {
        return Err(Error::InvalidArgument("no boundary samples".into()));
    }
    argmax(samples, |p| {
        let d1 = p.sinr.phi1 - nash.sinr.phi1;
        let d2 = p.sinr.phi2 - nash.sinr.phi2;
        (d1 >= 0.0 && d2 >= 0.0).then_some(d1 * d2)
    })
    .map(|i| samples[i].relabel(PointLabel::Nbs))
    .ok_or(Error::CoreEmpty)
}

/// Maximizes the smaller of the two SINR gains, each normalized by its span in the core.
pub fn kalai_smorodinsky(
    samples: &[OperatingPoint],
    nash: &OperatingPoint,
    bounds: &CoreBounds,
) -> Result<OperatingPoint> {
    if samples.is_empty() {
        return Err(Error::InvalidArgument("no boundary samples".into()));
    }
    let mut span = [0.0; 2];
    for (slot, k) in Link::BOTH.into_iter().enumerate() {
        span[slot] = bounds.phi_core(k) - nash.sinr.get(k);
        if !(span[slot] > 0.0) {
            return Err(Error::DegenerateBounds { link: k.index() });
        }
    }
    let i = argmax(samples, |p| Some(normalized_gains(p, nash, span).into_iter().fold(f64::INFINITY, f64::min)))
        .expect("samples are not empty");
    Ok(samples[i].relabel(PointLabel::Ks))
}

fn normalized_gains(p: &OperatingPoint, nash: &OperatingPoint, span: [f64; 2]) -> [f64; 2] {
    [
        (p.sinr.phi1 - nash.sinr.phi1) / span[0],
        (p.sinr.phi2 - nash.sinr.phi2) / span[1],
    ]
}

/// The two normalized gains of the Kalai-Smorodinsky objective at `p`.
pub fn ks_normalized_gains(p: &OperatingPoint, nash: &OperatingPoint, bounds: &CoreBounds) -> [f64; 2] {
    normalized_gains(
        p,
        nash,
        [
            bounds.phi1_core - nash.sinr.phi1,
            bounds.phi2_core - nash.sinr.phi2,
        ],
    )
}

/// All six reference points of one channel, in the order nash, walras, mmse, max_sum,
/// nbs, ks.
pub fn reference_points(
    ch: &ChannelRealization,
    gains: &DerivedGains,
    curve: &[CurvePoint],
    bounds: &CoreBounds,
) -> Result<Vec<OperatingPoint>> {
    let samples = boundary_points(curve);
    let nash = nash_point(gains)?;
    Ok(vec![
        nash,
        walras_point(gains)?,
        mmse_point(ch, gains)?,
        max_sum_sinr(&samples)?,
        nbs(&samples, &nash)?,
        kalai_smorodinsky(&samples, &nash, bounds)?,
    ])
}

pub const COMPARISON_COLUMNS: [&str; 8] = ["label", "lambda1", "lambda2", "phi1", "phi2", "rate1", "rate2", "in_core"];

/// The comparison table: one row per point, with core membership judged against `nash`.
pub fn comparison_table(points: &[OperatingPoint], nash: &OperatingPoint) -> Table {
    let mut table = Table::new(COMPARISON_COLUMNS);
    for p in points {
        table.push(comparison_row(p, nash));
    }
    table
}

pub fn comparison_row(p: &OperatingPoint, nash: &OperatingPoint) -> Vec<Cell> {
    vec![
        p.label.as_str().into(),
        p.lambda1.into(),
        p.lambda2.into(),
        p.sinr.phi1.into(),
        p.sinr.phi2.into(),
        rate(p.sinr.phi1).into(),
        rate(p.sinr.phi2).into(),
        p.in_core(nash).into(),
    ]
}
