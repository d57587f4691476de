//! Singular suspensions: a brake alpha vanishing exactly on a compact set
//! S slows the suspension flow, freezing it on S.
//!
//! The time change is kept in integral form. The psi-time spent while the
//! suspension flow moves for phi-time s is clock(p, s) = int_0^s du /
//! alpha(phi_u(p)); psi_t is recovered by inverting this monotone clock.
//! The integral diverges exactly when the phi-segment meets S (for
//! profiles with nonintegrable reciprocal), which reproduces the trapping
//! of trajectories on singular points and the divergence of the fiber
//! traversal time gamma.

use serde::{Deserialize, Serialize};

use crate::discrete::BasePoint;
use crate::error::{Error, Result};
use crate::torus::{FiberPoint, MappingTorus};

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SingularSet {
    PointList(Vec<FiberPoint>),
    OrbitClosure { seed: FiberPoint, depth: u32 },
    WholeFiber { height: f64 },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Profile {
    Power(f64),
    Exp(f64),
}

impl Profile {
    /// alpha as a function of the distance to S.
    pub fn g(&self, r: f64) -> f64 {
        match *self {
            Profile::Power(k) => {
                if r <= 0.0 {
                    0.0
                } else {
                    r.powf(k)
                }
            }
            Profile::Exp(c) => {
                if r <= 0.0 {
                    0.0
                } else {
                    (-c / r).exp()
                }
            }
        }
    }

    /// Whether int dr / g(r) diverges at 0, i.e. trajectories can never
    /// reach S in finite psi-time.
    pub fn diverges_at_zero(&self) -> bool {
        match *self {
            Profile::Power(k) => k >= 1.0,
            Profile::Exp(_) => true,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Brake {
    pub singular_set: SingularSet,
    pub profile: Profile,
}

impl Brake {
    /// The empty brake: alpha identically 1, psi = phi.
    pub fn regular() -> Self {
        Brake { singular_set: SingularSet::PointList(vec![]), profile: Profile::Power(1.0) }
    }

    pub fn is_empty(&self) -> bool {
        matches!(&self.singular_set, SingularSet::PointList(v) if v.is_empty())
    }
}

/// Knobs for the clock quadrature.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct QuadratureControls {
    /// Certify divergence once the rigorous lower bound passes this.
    pub cap: f64,
    /// Relative tolerance for adaptive refinement.
    pub tol: f64,
    /// Distance below which a trajectory point counts as on S.
    pub meet_tol: f64,
    /// Smallest phi-time interval the refinement will produce.
    pub min_step: f64,
    pub max_depth: u32,
}

impl Default for QuadratureControls {
    fn default() -> Self {
        QuadratureControls { cap: 1e6, tol: 1e-10, meet_tol: 1e-11, min_step: 1e-13, max_depth: 52 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ClockValue {
    Finite(f64),
    /// The integral provably exceeds the cap; `lower_bound` is the
    /// rigorous partial sum accumulated before giving up.
    Divergent { lower_bound: f64 },
}

impl ClockValue {
    /// Finite value or the certified lower bound.
    pub fn value_or_bound(&self) -> f64 {
        match *self {
            ClockValue::Finite(v) => v,
            ClockValue::Divergent { lower_bound } => lower_bound,
        }
    }

    pub fn is_finite(&self) -> bool {
        matches!(self, ClockValue::Finite(_))
    }
}

/// Sampled projection of the flow-saturation of S.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ASingSample {
    Points(Vec<BasePoint>),
    /// WholeFiber brakes project onto all of M.
    WholeBase,
}

#[derive(Debug, Clone)]
pub struct SingularSuspension {
    pub torus: MappingTorus,
    pub brake: Brake,
    pub quad: QuadratureControls,
    /// Materialized singular points (empty for WholeFiber).
    sing_points: Vec<FiberPoint>,
}

/// Outcome of integrating 1/alpha over one fiber segment.
enum SegmentRun {
    Done,
    /// The segment meets S at this local height; the flow is trapped.
    Trapped { height: f64 },
}

struct WalkState<'a> {
    /// psi-time accumulated so far.
    total: f64,
    /// rigorous lower bound for the accumulated integral.
    lower: f64,
    /// ascending psi-time targets not yet located.
    targets: &'a [f64],
    next: usize,
    /// located (phi-time offsets inside the current segment are translated
    /// by the caller).
    hits: Vec<f64>,
    /// certification cap; infinite for orbit walks, which rely on trap
    /// detection instead
    cap: f64,
    capped: bool,
}

impl SingularSuspension {
    pub fn new(torus: MappingTorus, brake: Brake) -> Result<Self> {
        Self::with_controls(torus, brake, QuadratureControls::default())
    }

    pub fn with_controls(
        torus: MappingTorus,
        brake: Brake,
        quad: QuadratureControls,
    ) -> Result<Self> {
        let sing_points = match &brake.singular_set {
            SingularSet::PointList(pts) => pts.clone(),
            SingularSet::OrbitClosure { seed, depth } => {
                let d = *depth as i64;
                let orbit = torus.system.orbit_segment(&seed.base, -d, d)?;
                orbit.into_iter().map(|b| FiberPoint::new(b, seed.height)).collect()
            }
            SingularSet::WholeFiber { .. } => vec![],
        };
        Ok(SingularSuspension { torus, brake, quad, sing_points })
    }

    pub fn singular_points(&self) -> &[FiberPoint] {
        &self.sing_points
    }

    /// d-bar distance to S; infinite for the empty brake.
    pub fn dist_to_sing(&self, base: &BasePoint, height: f64) -> Result<f64> {
        match &self.brake.singular_set {
            SingularSet::WholeFiber { height: s0 } => {
                let h = height;
                Ok((h - s0).abs().min((1.0 - h) + s0).min(h + (1.0 - s0)))
            }
            _ => {
                let mut d = f64::INFINITY;
                let p = FiberPoint { base: base.clone(), height };
                for sigma in &self.sing_points {
                    d = d.min(self.torus.bar_metric(&p, sigma)?);
                }
                Ok(d)
            }
        }
    }

    pub fn alpha(&self, p: &FiberPoint) -> Result<f64> {
        if self.brake.is_empty() {
            return Ok(1.0);
        }
        let d = self.dist_to_sing(&p.base, p.height)?;
        Ok(self.brake.profile.g(d))
    }

    fn inv_alpha(&self, d: f64) -> f64 {
        1.0 / self.brake.profile.g(d.max(1e-300))
    }

    /// psi-time elapsed while phi flows from p for phi-time s >= 0.
    pub fn clock(&self, p: &FiberPoint, s: f64) -> Result<ClockValue> {
        if s < 0.0 {
            return Err(Error::InvalidArgument(format!("clock needs s >= 0, got {s}")));
        }
        if self.brake.is_empty() {
            return Ok(ClockValue::Finite(s));
        }
        let mut state = WalkState {
            total: 0.0,
            lower: 0.0,
            targets: &[],
            next: 0,
            hits: vec![],
            cap: self.quad.cap,
            capped: false,
        };
        let mut base = p.base.clone();
        let mut h = p.height;
        let mut remaining = s;
        while remaining > 0.0 {
            let len = remaining.min(1.0 - h);
            match self.run_segment(&base, h, h + len, &mut state, false)? {
                SegmentRun::Trapped { .. } => {
                    return Ok(ClockValue::Divergent { lower_bound: state.lower.max(self.quad.cap) })
                }
                SegmentRun::Done => {}
            }
            if state.capped {
                return Ok(ClockValue::Divergent { lower_bound: state.lower });
            }
            remaining -= len;
            if remaining > 0.0 {
                base = self.torus.system.step(&base)?;
                h = 0.0;
            }
        }
        Ok(ClockValue::Finite(state.total))
    }

    /// Fiber traversal time of a base point: clock((x,0), 1).
    pub fn gamma(&self, x: &BasePoint) -> Result<ClockValue> {
        self.clock(&FiberPoint { base: x.clone(), height: 0.0 }, 1.0)
    }

    pub fn psi_flow(&self, t: f64, p: &FiberPoint) -> Result<FiberPoint> {
        Ok(self.psi_orbit(p, &[t])?.pop().unwrap())
    }

    /// Points psi_t(p) for ascending psi-times; negative times run the
    /// walk backward with the same quadrature.
    pub fn psi_orbit(&self, p: &FiberPoint, times: &[f64]) -> Result<Vec<FiberPoint>> {
        assert!(times.windows(2).all(|w| w[0] <= w[1]), "psi_orbit needs ascending times");
        if self.brake.is_empty() {
            return times.iter().map(|&t| self.torus.suspension_flow(t, p)).collect();
        }
        let split = times.partition_point(|&t| t < 0.0);
        let (neg, pos) = times.split_at(split);
        let mut out = self.walk(p, &neg.iter().rev().map(|t| -t).collect::<Vec<_>>(), true)?;
        out.reverse();
        out.extend(self.walk(p, pos, false)?);
        Ok(out)
    }

    /// Forward (or backward) walk locating ascending nonnegative psi-time
    /// targets; trapped walks fill the remaining targets with the limit
    /// point on S.
    fn walk(&self, p: &FiberPoint, targets: &[f64], backward: bool) -> Result<Vec<FiberPoint>> {
        let mut out = Vec::with_capacity(targets.len());
        if targets.is_empty() {
            return Ok(out);
        }
        let mut state = WalkState {
            total: 0.0,
            lower: 0.0,
            targets,
            next: 0,
            hits: vec![],
            cap: f64::INFINITY,
            capped: false,
        };
        let mut base = p.base.clone();
        let mut h = p.height;
        // alpha is bounded by g at the diameter, so each full fiber costs
        // at least 1/alpha_max of psi-time
        let alpha_max = self.brake.profile.g(1.5).max(1.0);
        let last = *targets.last().unwrap();
        let max_fibers = (last * alpha_max).ceil() as usize + 3;
        for _ in 0..max_fibers {
            state.hits.clear();
            let run = if backward {
                self.run_segment(&base, 0.0, h, &mut state, true)?
            } else {
                self.run_segment(&base, h, 1.0, &mut state, false)?
            };
            for &hit in &state.hits {
                out.push(self.normalize(&base, hit)?);
            }
            if let SegmentRun::Trapped { height } = run {
                let limit = self.normalize(&base, height)?;
                while out.len() < targets.len() {
                    out.push(limit.clone());
                }
                return Ok(out);
            }
            if out.len() == targets.len() {
                return Ok(out);
            }
            if backward {
                base = self.torus.system.step_inverse(&base)?;
                h = 1.0;
            } else {
                base = self.torus.system.step(&base)?;
                h = 0.0;
            }
        }
        Err(Error::RootFind(format!(
            "psi walk exhausted {max_fibers} fibers before reaching psi-time {last} \
             (accumulated {})",
            state.total
        )))
    }

    fn normalize(&self, base: &BasePoint, h: f64) -> Result<FiberPoint> {
        self.torus.fiber_point(base.clone(), h)
    }

    /// Integrate 1/alpha over the fiber segment [lo, hi] at fixed base,
    /// resolving any psi-time targets that fall inside. `backward` scans
    /// from hi down to lo.
    fn run_segment(
        &self,
        base: &BasePoint,
        lo: f64,
        hi: f64,
        state: &mut WalkState,
        backward: bool,
    ) -> Result<SegmentRun> {
        if hi <= lo {
            return Ok(SegmentRun::Done);
        }
        let (da, fa) = self.eval(base, lo)?;
        let (db, fb) = self.eval(base, hi)?;
        let _ = (da, db);
        self.rec(base, lo, fa, hi, fb, 0, state, backward)
    }

    fn eval(&self, base: &BasePoint, h: f64) -> Result<(f64, f64)> {
        let d = self.dist_to_sing(base, h)?;
        Ok((d, self.inv_alpha(d)))
    }

    #[allow(clippy::too_many_arguments)]
    fn rec(
        &self,
        base: &BasePoint,
        a: f64,
        fa: f64,
        b: f64,
        fb: f64,
        depth: u32,
        state: &mut WalkState,
        backward: bool,
    ) -> Result<SegmentRun> {
        if state.capped {
            return Ok(SegmentRun::Done);
        }
        let m = 0.5 * (a + b);
        let (dm, fm) = self.eval(base, m)?;
        let half = 0.5 * (b - a);
        let width = b - a;
        // the distance to S is 1-Lipschitz along the vertical flow, so a
        // midpoint clearance above half the width keeps the interval off S
        let interval_clear = dm - half > 0.0;
        if !interval_clear {
            if width < self.quad.min_step || depth >= self.quad.max_depth {
                if dm < self.quad.meet_tol && self.brake.profile.diverges_at_zero() {
                    // the segment meets S: everything past here is trapped
                    return Ok(SegmentRun::Trapped { height: m });
                }
                return self.accept(a, b, width * fm, dm + half, state, backward);
            }
            return self.split(base, a, fa, b, fb, m, fm, depth, state, backward);
        }
        // plain adaptive Simpson on a singularity-free interval
        let (_, flm) = self.eval(base, 0.5 * (a + m))?;
        let (_, frm) = self.eval(base, 0.5 * (m + b))?;
        let whole = width / 6.0 * (fa + 4.0 * fm + fb);
        let refined = half / 6.0 * (fa + 4.0 * flm + 2.0 * fm + 4.0 * frm + fb);
        let converged = (refined - whole).abs() <= self.quad.tol * refined.abs().max(1.0);
        let at_limit = depth >= self.quad.max_depth || width < self.quad.min_step;
        // leaves holding a psi-time target keep splitting so the target
        // resolves by interpolation over a tiny interval
        let needs_target = self.target_inside(state, refined * 1.01) && width >= 1e-9;
        if at_limit || (depth >= 4 && converged && !needs_target) {
            let value = if at_limit { refined } else { refined + (refined - whole) / 15.0 };
            return self.accept(a, b, value, dm + half, state, backward);
        }
        self.split(base, a, fa, b, fb, m, fm, depth, state, backward)
    }

    /// Recurse into both halves in scan order: forward walks consume
    /// psi-time targets left to right, backward walks right to left.
    #[allow(clippy::too_many_arguments)]
    fn split(
        &self,
        base: &BasePoint,
        a: f64,
        fa: f64,
        b: f64,
        fb: f64,
        m: f64,
        fm: f64,
        depth: u32,
        state: &mut WalkState,
        backward: bool,
    ) -> Result<SegmentRun> {
        let halves: [(f64, f64, f64, f64); 2] = if backward {
            [(m, fm, b, fb), (a, fa, m, fm)]
        } else {
            [(a, fa, m, fm), (m, fm, b, fb)]
        };
        for (x0, f0, x1, f1) in halves {
            if let SegmentRun::Trapped { height } =
                self.rec(base, x0, f0, x1, f1, depth + 1, state, backward)?
            {
                return Ok(SegmentRun::Trapped { height });
            }
        }
        Ok(SegmentRun::Done)
    }

    fn target_inside(&self, state: &WalkState, contribution: f64) -> bool {
        state.next < state.targets.len()
            && state.targets[state.next] <= state.total + contribution
    }

    /// Book a converged leaf: accumulate psi-time and the rigorous lower
    /// bound, and resolve targets inside by linear interpolation.
    fn accept(
        &self,
        a: f64,
        b: f64,
        value: f64,
        d_upper: f64,
        state: &mut WalkState,
        backward: bool,
    ) -> Result<SegmentRun> {
        let width = b - a;
        while state.next < state.targets.len()
            && state.targets[state.next] <= state.total + value
        {
            let frac = if value > 0.0 {
                ((state.targets[state.next] - state.total) / value).clamp(0.0, 1.0)
            } else {
                0.0
            };
            let h = if backward { b - frac * width } else { a + frac * width };
            state.hits.push(h);
            state.next += 1;
        }
        state.total += value;
        state.lower += width / self.brake.profile.g(d_upper).max(1e-300);
        if state.lower > state.cap {
            state.capped = true;
        }
        Ok(SegmentRun::Done)
    }

    /// Projected sample of the flow-saturation of S.
    pub fn a_sing_sample(&self, depth: i64) -> Result<ASingSample> {
        if let SingularSet::WholeFiber { .. } = self.brake.singular_set {
            return Ok(ASingSample::WholeBase);
        }
        let mut pts = Vec::new();
        for sigma in &self.sing_points {
            pts.extend(self.torus.system.orbit_segment(&sigma.base, -depth, depth)?);
        }
        Ok(ASingSample::Points(pts))
    }
}

/// The spec-level alpha evaluation: brake against an explicit torus.
pub fn alpha_eval(torus: &MappingTorus, brake: &Brake, p: &FiberPoint) -> Result<f64> {
    let ss = SingularSuspension::new(torus.clone(), brake.clone())?;
    ss.alpha(p)
}
