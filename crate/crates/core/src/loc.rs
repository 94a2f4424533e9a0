//! Cooperative localization.
//!
//! Pairwise UWB ranges are median-smoothed, then positions are solved
//! outward from the seed nodes: a node with enough already-localized
//! neighbors gets a linear least-squares fix that a damped Gauss-Newton pass
//! refines. Orientation is shared by every node, so estimates in different
//! frames differ only by a translation and are tagged rather than
//! transformed.

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::model::{NodeId, Position};

pub const MAX_CONDITION: f64 = 1e8;
/// Nudge applied along +x when an iterate lands on an anchor.
pub const COINCIDENT_NUDGE: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum LocError {
    #[error("need at least {need} anchors, have {have}")]
    InsufficientAnchors { need: usize, have: usize },
    #[error("degenerate anchor geometry (condition number {condition:e})")]
    DegenerateGeometry { condition: f64 },
    #[error("{anchors} anchors but {ranges} ranges")]
    LengthMismatch { anchors: usize, ranges: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolveMode {
    /// Altitude is known per node; solve x and y only.
    Planar2D,
    Full3D,
}

impl SolveMode {
    pub fn min_anchors(self) -> usize {
        match self {
            SolveMode::Planar2D => 3,
            SolveMode::Full3D => 4,
        }
    }

    pub fn dims(self) -> usize {
        match self {
            SolveMode::Planar2D => 2,
            SolveMode::Full3D => 3,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    pub max_iters: usize,
    pub step_tolerance: f64,
    pub damping: f64,
    pub mode: SolveMode,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            max_iters: 50,
            step_tolerance: 1e-6,
            damping: 1e-3,
            mode: SolveMode::Planar2D,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CoordinateFrame {
    Global,
    Relative,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PositionEstimate {
    pub position: Position,
    pub frame: CoordinateFrame,
    pub localized: bool,
    pub hop_depth: u32,
    /// RMS range residual at the solution, meters.
    pub residual: f64,
}

impl PositionEstimate {
    pub fn unlocalized() -> Self {
        Self {
            position: Position::ORIGIN,
            frame: CoordinateFrame::Relative,
            localized: false,
            hop_depth: 0,
            residual: 0.0,
        }
    }

    pub fn seed(position: Position, frame: CoordinateFrame) -> Self {
        Self {
            position,
            frame,
            localized: true,
            hop_depth: 0,
            residual: 0.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct RangeSample {
    distance: f64,
    t: f64,
}

/// Last `window` ranges per ordered pair, newest first.
#[derive(Debug, Clone, PartialEq)]
pub struct RangeGraph {
    window: usize,
    buffers: BTreeMap<(NodeId, NodeId), VecDeque<RangeSample>>,
}

impl Default for RangeGraph {
    fn default() -> Self {
        Self::new(5)
    }
}

impl RangeGraph {
    pub fn new(window: usize) -> Self {
        Self {
            window: window.max(1),
            buffers: BTreeMap::new(),
        }
    }

    pub fn push(&mut self, from: NodeId, to: NodeId, distance: f64, t: f64) {
        let buf = self.buffers.entry((from, to)).or_default();
        buf.push_front(RangeSample {
            distance: distance.max(0.0),
            t,
        });
        buf.truncate(self.window);
    }

    pub fn samples(&self, from: NodeId, to: NodeId) -> Vec<f64> {
        self.buffers
            .get(&(from, to))
            .map(|b| b.iter().map(|s| s.distance).collect())
            .unwrap_or_default()
    }

    pub fn last_update(&self, i: NodeId, j: NodeId) -> Option<f64> {
        [(i, j), (j, i)]
            .iter()
            .filter_map(|k| self.buffers.get(k).and_then(|b| b.front()).map(|s| s.t))
            .reduce(f64::max)
    }

    pub fn smoothed_range(&self, i: NodeId, j: NodeId) -> Option<f64> {
        let mut pooled: Vec<f64> = self.samples(i, j);
        if i != j {
            pooled.extend(self.samples(j, i));
        }
        median(&mut pooled)
    }

    /// Drops every pair whose newest sample is older than `t`.
    pub fn prune_older_than(&mut self, t: f64) {
        self.buffers.retain(|_, b| b.front().is_some_and(|s| s.t >= t));
    }

    /// Nodes with at least one buffered range to or from `i`.
    pub fn neighbors(&self, i: NodeId) -> BTreeSet<NodeId> {
        self.buffers
            .iter()
            .filter(|(_, b)| !b.is_empty())
            .filter_map(|(&(a, b), _)| {
                if a == i {
                    Some(b)
                } else if b == i {
                    Some(a)
                } else {
                    None
                }
            })
            .filter(|n| *n != i)
            .collect()
    }
}

pub fn smoothed_range(graph: &RangeGraph, i: NodeId, j: NodeId) -> Option<f64> {
    graph.smoothed_range(i, j)
}

fn median(v: &mut [f64]) -> Option<f64> {
    if v.is_empty() {
        return None;
    }
    v.sort_by(f64::total_cmp);
    let n = v.len();
    Some(if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    })
}

/// Horizontal component of a slant range given the altitude difference.
/// Ranges slightly shorter than `|dz|` (within 3 sigma) clamp to zero;
/// anything shorter is inconsistent and dropped.
pub fn horizontal_projection(d: f64, dz: f64, sigma: f64) -> Option<f64> {
    let dz = dz.abs();
    if d >= dz {
        Some((d * d - dz * dz).sqrt())
    } else if d >= dz - 3.0 * sigma {
        Some(0.0)
    } else {
        None
    }
}

fn coords(p: &Position, mode: SolveMode) -> DVector<f64> {
    match mode {
        SolveMode::Planar2D => DVector::from_vec(vec![p.x, p.y]),
        SolveMode::Full3D => DVector::from_vec(vec![p.x, p.y, p.z]),
    }
}

fn check_inputs(anchors: &[Position], ranges: &[f64], mode: SolveMode) -> Result<(), LocError> {
    if anchors.len() != ranges.len() {
        return Err(LocError::LengthMismatch {
            anchors: anchors.len(),
            ranges: ranges.len(),
        });
    }
    if anchors.len() < mode.min_anchors() {
        return Err(LocError::InsufficientAnchors {
            need: mode.min_anchors(),
            have: anchors.len(),
        });
    }
    Ok(())
}

/// Linearized multilateration: subtracting the first sphere equation from
/// the others leaves `2 (a_i - a_0) . x = d_0^2 - d_i^2 + |a_i|^2 - |a_0|^2`,
/// solved in the least-squares sense. In planar mode `z` is passed through.
pub fn trilaterate_linear(anchors: &[Position], ranges: &[f64], mode: SolveMode, z: f64) -> Result<Position, LocError> {
    check_inputs(anchors, ranges, mode)?;
    let dims = mode.dims();
    let a0 = coords(&anchors[0], mode);
    let n = anchors.len() - 1;
    let mut a = DMatrix::<f64>::zeros(n, dims);
    let mut b = DVector::<f64>::zeros(n);
    for (row, (anchor, r)) in anchors.iter().zip(ranges).skip(1).enumerate() {
        let ai = coords(anchor, mode);
        for k in 0..dims {
            a[(row, k)] = 2.0 * (ai[k] - a0[k]);
        }
        b[row] = ranges[0] * ranges[0] - r * r + ai.norm_squared() - a0.norm_squared();
    }
    let sv = a.clone().svd(false, false).singular_values;
    let smax = sv.max();
    let smin = sv.min();
    let condition = if smin > 0.0 { smax / smin } else { f64::INFINITY };
    if condition.is_nan() || condition > MAX_CONDITION {
        return Err(LocError::DegenerateGeometry { condition });
    }
    let ata = a.transpose() * &a;
    let atb = a.transpose() * b;
    let x = ata
        .cholesky()
        .map(|c| c.solve(&atb))
        .ok_or(LocError::DegenerateGeometry { condition })?;
    Ok(match mode {
        SolveMode::Planar2D => Position::new(x[0], x[1], z),
        SolveMode::Full3D => Position::new(x[0], x[1], x[2]),
    })
}

/// Row of the range Jacobian: unit vector from `anchor` toward `x`. The z
/// entry is zero in planar mode. `None` when `x` sits on the anchor.
pub fn range_jacobian_row(x: &Position, anchor: &Position, mode: SolveMode) -> Option<[f64; 3]> {
    let mut d = *x - *anchor;
    if mode == SolveMode::Planar2D {
        d.z = 0.0;
    }
    let n = d.norm();
    if n < 1e-12 {
        return None;
    }
    Some([d.x / n, d.y / n, d.z / n])
}

pub fn model_range(x: &Position, anchor: &Position, mode: SolveMode) -> f64 {
    match mode {
        SolveMode::Planar2D => x.horizontal_distance(anchor),
        SolveMode::Full3D => x.distance(anchor),
    }
}

/// Sum of squared range residuals.
pub fn range_cost(x: &Position, anchors: &[Position], ranges: &[f64], mode: SolveMode) -> f64 {
    anchors
        .iter()
        .zip(ranges)
        .map(|(a, d)| {
            let r = model_range(x, a, mode) - d;
            r * r
        })
        .sum()
}

fn with_coords(base: &Position, v: &DVector<f64>, mode: SolveMode) -> Position {
    match mode {
        SolveMode::Planar2D => Position::new(v[0], v[1], base.z),
        SolveMode::Full3D => Position::new(v[0], v[1], v[2]),
    }
}

/// Levenberg-damped Gauss-Newton on the range residuals. Damping drops by
/// 10x after an accepted step and grows 10x after a rejected one; only
/// cost-decreasing steps are taken.
pub fn refine_gauss_newton(
    init: Position,
    anchors: &[Position],
    ranges: &[f64],
    cfg: &SolverConfig,
) -> Result<PositionEstimate, LocError> {
    check_inputs(anchors, ranges, cfg.mode)?;
    let mode = cfg.mode;
    let dims = mode.dims();
    let mut x = init;
    let mut cost = range_cost(&x, anchors, ranges, mode);
    let mut lambda = cfg.damping;

    for _ in 0..cfg.max_iters.max(1) {
        let mut jac = DMatrix::<f64>::zeros(anchors.len(), dims);
        let mut res = DVector::<f64>::zeros(anchors.len());
        let mut coincident = false;
        for (i, (a, d)) in anchors.iter().zip(ranges).enumerate() {
            match range_jacobian_row(&x, a, mode) {
                Some(row) => {
                    for k in 0..dims {
                        jac[(i, k)] = row[k];
                    }
                    res[i] = model_range(&x, a, mode) - d;
                }
                None => {
                    coincident = true;
                    break;
                }
            }
        }
        if coincident {
            x.x += COINCIDENT_NUDGE;
            cost = range_cost(&x, anchors, ranges, mode);
            continue;
        }
        let jt = jac.transpose();
        let grad = &jt * &res;
        let mut h = &jt * &jac;
        for k in 0..dims {
            h[(k, k)] += lambda;
        }
        let Some(step) = h.lu().solve(&(-grad)) else {
            lambda *= 10.0;
            continue;
        };
        let step_norm = step.norm();
        let candidate = with_coords(&x, &(coords(&x, mode) + &step), mode);
        let c_new = range_cost(&candidate, anchors, ranges, mode);
        if c_new < cost {
            x = candidate;
            cost = c_new;
            lambda = (lambda / 10.0).max(1e-12);
        } else {
            lambda *= 10.0;
        }
        if step_norm < cfg.step_tolerance {
            break;
        }
    }
    Ok(PositionEstimate {
        position: x,
        frame: CoordinateFrame::Relative,
        localized: true,
        hop_depth: 0,
        residual: (cost / anchors.len() as f64).sqrt(),
    })
}

/// Altitude reading for a node (from its altimeter, or exact for seeds).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Altitude {
    pub z: f64,
    pub sigma: f64,
}

/// Wavefront fixpoint over the range graph. Each round visits nodes in
/// ascending id order; a node solves as soon as enough of its neighbors are
/// localized, and nodes solved earlier in the same round already count.
///
/// In planar mode, ranges are projected onto the horizontal plane using
/// `altitudes`; a node without an altitude reading uses raw ranges and takes
/// the mean altitude of the neighbors it used.
pub fn propagate_localization(
    graph: &RangeGraph,
    estimates: &BTreeMap<NodeId, PositionEstimate>,
    seeds: &BTreeSet<NodeId>,
    altitudes: &BTreeMap<NodeId, Altitude>,
    cfg: &SolverConfig,
) -> BTreeMap<NodeId, PositionEstimate> {
    let mut out = estimates.clone();
    for s in seeds {
        if let Some(e) = out.get_mut(s) {
            e.localized = true;
            e.hop_depth = 0;
        }
    }
    let k = cfg.mode.min_anchors();
    loop {
        let mut changed = false;
        let ids: Vec<NodeId> = out.keys().copied().collect();
        for id in ids {
            if out[&id].localized {
                continue;
            }
            if let Some(est) = solve_node(graph, &out, altitudes, cfg, id, k) {
                out.insert(id, est);
                changed = true;
            }
        }
        if !changed {
            break;
        }
    }
    out
}

fn solve_node(
    graph: &RangeGraph,
    current: &BTreeMap<NodeId, PositionEstimate>,
    altitudes: &BTreeMap<NodeId, Altitude>,
    cfg: &SolverConfig,
    id: NodeId,
    k: usize,
) -> Option<PositionEstimate> {
    let own_alt = altitudes.get(&id).copied();
    let mut used: Vec<(NodeId, PositionEstimate, f64)> = Vec::new();
    for nb in graph.neighbors(id) {
        let Some(est) = current.get(&nb).filter(|e| e.localized) else {
            continue;
        };
        let Some(d) = graph.smoothed_range(id, nb) else {
            continue;
        };
        let range = match (cfg.mode, own_alt) {
            (SolveMode::Planar2D, Some(alt)) => {
                let nb_sigma = altitudes.get(&nb).map_or(0.0, |a| a.sigma);
                match horizontal_projection(d, alt.z - est.position.z, alt.sigma.hypot(nb_sigma)) {
                    Some(h) => h,
                    None => continue,
                }
            }
            _ => d,
        };
        used.push((nb, *est, range));
    }
    if used.len() < k {
        return None;
    }
    let anchors: Vec<Position> = used.iter().map(|u| u.1.position).collect();
    let ranges: Vec<f64> = used.iter().map(|u| u.2).collect();
    let z = match own_alt {
        Some(a) => a.z,
        None => anchors.iter().map(|p| p.z).sum::<f64>() / anchors.len() as f64,
    };
    let init = trilaterate_linear(&anchors, &ranges, cfg.mode, z).ok()?;
    let mut est = refine_gauss_newton(init, &anchors, &ranges, cfg).ok()?;
    if !est.position.is_finite() {
        return None;
    }
    est.hop_depth = 1 + used.iter().map(|u| u.1.hop_depth).max().unwrap_or(0);
    est.frame = if used.iter().all(|u| u.1.frame == CoordinateFrame::Global) {
        CoordinateFrame::Global
    } else {
        CoordinateFrame::Relative
    };
    Some(est)
}
