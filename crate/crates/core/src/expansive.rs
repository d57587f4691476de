//! Reparametrization-robust orbit tracking and expansiveness falsifiers.
//!
//! Tracking distance is evaluated by a dynamic program over monotone
//! lattice paths in the (p-time, q-time) square, with step slopes
//! bounded in [1/4, 4] so the discrete paths stand in for increasing
//! homeomorphisms anchored at 0.  Two one-sided DPs (forward and
//! time-reversed) are combined, since the anchored reparametrization
//! restricts independently to each half-line.
//!
//! Falsifiers sample nearby pairs and search for definitional
//! counterexamples; a NoCounterexample outcome is evidence, never proof.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::discrete::{BasePoint, DiscreteSystem};
use crate::error::{Error, Result};
use crate::measure::MeasureSampler;
use crate::suspension::{SingularSet, SingularSuspension};
use crate::FiberPoint;

/// Monotone step set; slopes span [1/4, 4].
const STEPS: [(usize, usize); 7] = [(1, 1), (1, 2), (2, 1), (1, 3), (3, 1), (1, 4), (4, 1)];

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct ReparamGrid {
    pub horizon: f64,
    pub step: f64,
}

impl Default for ReparamGrid {
    fn default() -> Self {
        ReparamGrid { horizon: 20.0, step: 0.1 }
    }
}

impl ReparamGrid {
    fn nodes(&self) -> usize {
        (self.horizon / self.step).round() as usize
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Tracking {
    pub distance: f64,
    /// a trajectory got trapped at a singularity before the horizon;
    /// the distance covers the computed prefix only
    pub truncated: bool,
    /// matched (p-time, q-time) samples of the minimizing path, both
    /// half-lines, ascending
    pub matched: Vec<(f64, f64)>,
}

/// min-max dynamic program over monotone lattice paths from (0,0) to
/// (n,n).  Returns the optimal value and one optimal path.
pub fn dp_minmax(n: usize, cost: &impl Fn(usize, usize) -> f64) -> (f64, Vec<(usize, usize)>) {
    let w = n + 1;
    let mut dp = vec![f64::INFINITY; w * w];
    let mut parent = vec![usize::MAX; w * w];
    dp[0] = cost(0, 0);
    for i in 0..=n {
        for j in 0..=n {
            if i == 0 && j == 0 {
                continue;
            }
            let mut best = f64::INFINITY;
            let mut arg = usize::MAX;
            for (k, &(di, dj)) in STEPS.iter().enumerate() {
                if i >= di && j >= dj {
                    let v = dp[(i - di) * w + (j - dj)];
                    if v < best {
                        best = v;
                        arg = k;
                    }
                }
            }
            if arg == usize::MAX {
                continue; // unreachable corner cell
            }
            dp[i * w + j] = best.max(cost(i, j));
            parent[i * w + j] = arg;
        }
    }
    let mut path = vec![(n, n)];
    let (mut i, mut j) = (n, n);
    while !(i == 0 && j == 0) {
        let (di, dj) = STEPS[parent[i * w + j]];
        i -= di;
        j -= dj;
        path.push((i, j));
    }
    path.reverse();
    (dp[n * w + n], path)
}

fn orbit_times(grid: &ReparamGrid) -> Vec<f64> {
    (0..=grid.nodes()).map(|i| i as f64 * grid.step).collect()
}

fn trapped_at_end(ss: &SingularSuspension, orbit: &[FiberPoint]) -> Result<bool> {
    if ss.brake.is_empty() {
        return Ok(false);
    }
    let last = orbit.last().expect("nonempty orbit");
    Ok(ss.dist_to_sing(&last.base, last.height)? < 1e-9)
}

pub fn reparam_tracking_distance(
    ss: &SingularSuspension,
    p: &FiberPoint,
    q: &FiberPoint,
    grid: &ReparamGrid,
) -> Result<Tracking> {
    let n = grid.nodes();
    if n < 1 || grid.step <= 0.0 {
        return Err(Error::InvalidArgument("degenerate reparametrization grid".into()));
    }
    let times = orbit_times(grid);
    let neg_times: Vec<f64> = times.iter().map(|t| -t).rev().collect();
    let fwd_p = ss.psi_orbit(p, &times)?;
    let fwd_q = ss.psi_orbit(q, &times)?;
    let mut bwd_p = ss.psi_orbit(p, &neg_times)?;
    let mut bwd_q = ss.psi_orbit(q, &neg_times)?;
    bwd_p.reverse(); // index i now holds psi_{-i*step}
    bwd_q.reverse();
    let truncated = trapped_at_end(ss, &fwd_p)?
        || trapped_at_end(ss, &fwd_q)?
        || trapped_at_end(ss, &bwd_p)?
        || trapped_at_end(ss, &bwd_q)?;
    let metric = |a: &FiberPoint, b: &FiberPoint| ss.torus.bar_metric(a, b).unwrap_or(f64::INFINITY);
    let (d_fwd, path_fwd) = dp_minmax(n, &|i, j| metric(&fwd_p[i], &fwd_q[j]));
    let (d_bwd, path_bwd) = dp_minmax(n, &|i, j| metric(&bwd_p[i], &bwd_q[j]));
    let mut matched: Vec<(f64, f64)> = path_bwd
        .iter()
        .rev()
        .map(|&(i, j)| (-(i as f64) * grid.step, -(j as f64) * grid.step))
        .collect();
    matched.extend(path_fwd.iter().skip(1).map(|&(i, j)| (i as f64 * grid.step, j as f64 * grid.step)));
    Ok(Tracking { distance: d_fwd.max(d_bwd), truncated, matched })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FlowWitness {
    pub p: FiberPoint,
    pub q: FiberPoint,
    pub tracking: f64,
    pub matched: Vec<(f64, f64)>,
    /// smallest d-bar from a matched q-point to the eps-orbit-arc of p;
    /// staying above the arc tolerance at every matched time is what
    /// makes the pair a counterexample
    pub min_arc_gap: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FlowFalsifierOutcome {
    NoCounterexample { tested: usize },
    Counterexample(FlowWitness),
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum MapFalsifierOutcome {
    NoCounterexample { tested: usize },
    Counterexample { x: BasePoint, y: BasePoint },
}

/// Perturbed companion of `x` at distance about `mag`, off the orbit of
/// `x` generically.
fn nearby(system: &DiscreteSystem, x: &BasePoint, mag: f64, rng: &mut ChaCha8Rng) -> BasePoint {
    match (system, x) {
        (DiscreteSystem::CircleRotation { .. }, BasePoint::Circle(c)) => {
            let sign = if rng.gen::<bool>() { 1.0 } else { -1.0 };
            BasePoint::circle(c + sign * mag)
        }
        (_, BasePoint::Torus([a, b])) => {
            let ang = rng.gen::<f64>() * std::f64::consts::TAU;
            BasePoint::torus(a + mag * ang.cos(), b + mag * ang.sin())
        }
        (_, BasePoint::Seq(s)) => {
            // flip one symbol at the index matching the requested scale
            let m = (-mag.log2()).ceil().max(0.0) as i64;
            let idx = if rng.gen::<bool>() { m } else { -m };
            let len = s.period_len() as i64;
            let mut period = s.window(0, len - 1);
            let at = idx.rem_euclid(len) as usize;
            period[at] ^= 1;
            BasePoint::Seq(crate::SymbolSeq::from_window(period))
        }
        (DiscreteSystem::Product(parts), BasePoint::Product(coords)) => BasePoint::Product(
            parts.iter().zip(coords).map(|(s, c)| nearby(s, c, mag, rng)).collect(),
        ),
        _ => x.clone(),
    }
}

/// d-bar from `q` to a finely sampled arc psi_[t0-eps, t0+eps](p).
fn arc_gap(
    ss: &SingularSuspension,
    p: &FiberPoint,
    t0: f64,
    eps: f64,
    q_point: &FiberPoint,
) -> Result<f64> {
    let samples = 80;
    let times: Vec<f64> = (0..=samples)
        .map(|i| t0 - eps + 2.0 * eps * i as f64 / samples as f64)
        .collect();
    let arc = ss.psi_orbit(p, &times)?;
    let mut best = f64::INFINITY;
    for a in &arc {
        best = best.min(ss.torus.bar_metric(a, q_point)?);
    }
    Ok(best)
}

pub fn flow_expansiveness_falsifier(
    ss: &SingularSuspension,
    eps: f64,
    delta: f64,
    pairs: &MeasureSampler,
    n_pairs: usize,
    grid: &ReparamGrid,
) -> Result<FlowFalsifierOutcome> {
    if delta >= eps {
        return Err(Error::InvalidArgument("need delta < eps".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(pairs.seed ^ 0x5851_f42d);
    let bases = pairs.sample_base(&ss.torus.system, n_pairs)?;
    // the arc is sampled at eps/40 spacing and flow speed is at most 1,
    // so an on-arc point sits within half a spacing of some sample
    let arc_tol = (eps / 40.0).max(2.0 * ss.quad.tol);
    let candidates: Vec<(FiberPoint, FiberPoint)> = bases
        .into_iter()
        .map(|b| {
            let h = rng.gen::<f64>();
            let mag = rng.gen_range(3.0 * arc_tol..0.9 * delta.max(3.4 * arc_tol));
            let companion = nearby(&ss.torus.system, &b, mag, &mut rng);
            (FiberPoint::new(b, h), FiberPoint::new(companion, h))
        })
        .collect();
    let mut tested = 0;
    for (p, q) in &candidates {
        tested += 1;
        // the (0,0) lattice node already contributes d-bar(p,q), so far
        // pairs can never track within delta
        if ss.torus.bar_metric(p, q)? > delta {
            continue;
        }
        let tr = reparam_tracking_distance(ss, p, q, grid)?;
        if tr.distance > delta {
            continue;
        }
        // the pair tracks; expansiveness demands some matched t0 where
        // q's point sits on the eps-orbit-window of p
        let mut min_gap = f64::INFINITY;
        let mut on_arc = false;
        for &(t0, s0) in &tr.matched {
            let qp = ss.psi_flow(s0, q)?;
            let gap = arc_gap(ss, p, t0, eps, &qp)?;
            min_gap = min_gap.min(gap);
            if gap <= arc_tol {
                on_arc = true;
                break;
            }
        }
        if !on_arc {
            return Ok(FlowFalsifierOutcome::Counterexample(FlowWitness {
                p: p.clone(),
                q: q.clone(),
                tracking: tr.distance,
                matched: tr.matched,
                min_arc_gap: min_gap,
            }));
        }
    }
    Ok(FlowFalsifierOutcome::NoCounterexample { tested })
}

pub fn map_expansiveness_falsifier(
    system: &DiscreteSystem,
    e: f64,
    pairs: &MeasureSampler,
    n_pairs: usize,
    horizon: i64,
) -> Result<MapFalsifierOutcome> {
    if horizon < 1 {
        return Err(Error::InvalidArgument("horizon must be at least 1".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(pairs.seed ^ 0x2545_f491);
    let bases = pairs.sample_base(system, n_pairs)?;
    let cands: Vec<(BasePoint, BasePoint)> = bases
        .into_iter()
        .map(|x| {
            let mag = rng.gen_range(0.1 * e..0.8 * e);
            let y = nearby(system, &x, mag, &mut rng);
            (x, y)
        })
        .collect();
    let hit = cands
        .par_iter()
        .find_map_first(|(x, y)| {
            let check = || -> Result<bool> {
                if system.distance(x, y)? == 0.0 {
                    return Ok(false);
                }
                for n in -horizon..=horizon {
                    let fx = system.iterate(x, n)?;
                    let fy = system.iterate(y, n)?;
                    if system.distance(&fx, &fy)? > e {
                        return Ok(false);
                    }
                }
                Ok(true)
            };
            match check() {
                Ok(true) => Some(Ok((x.clone(), y.clone()))),
                Ok(false) => None,
                Err(e) => Some(Err(e)),
            }
        })
        .transpose()?;
    Ok(match hit {
        Some((x, y)) => MapFalsifierOutcome::Counterexample { x, y },
        None => MapFalsifierOutcome::NoCounterexample { tested: n_pairs },
    })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SingCheck {
    FiniteOk { count: usize, min_pairwise: f64 },
    Violation { a: FiberPoint, b: FiberPoint },
    Incompatible { reason: String },
}

/// Finiteness / separation report for the singular set; expansiveness
/// analysis only makes sense for finitely many well-separated
/// singularities.
pub fn singularity_count_check(ss: &SingularSuspension) -> Result<SingCheck> {
    if let SingularSet::WholeFiber { .. } = ss.brake.singular_set {
        return Ok(SingCheck::Incompatible {
            reason: "singular set is a whole fiber: infinitely many singularities, \
                     incompatible with expansiveness testing"
                .into(),
        });
    }
    let pts = ss.singular_points();
    let mut min_pairwise = f64::INFINITY;
    for (i, a) in pts.iter().enumerate() {
        for b in &pts[i + 1..] {
            let d = ss.torus.bar_metric(a, b)?;
            if d < 1e-12 {
                return Ok(SingCheck::Violation { a: a.clone(), b: b.clone() });
            }
            min_pairwise = min_pairwise.min(d);
        }
    }
    Ok(SingCheck::FiniteOk { count: pts.len(), min_pairwise })
}
