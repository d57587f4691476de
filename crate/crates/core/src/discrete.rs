//! Base discrete systems: torus maps, circle rotations, shifts, and products.
//!
//! Every system is an invertible map `f` on a compact metric space together
//! with its metric. Points are normalized on construction and after every
//! step, so torus and circle coordinates always live in `[0, 1)`.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::symbolic::Subshift;

/// Two-sided symbol sequence with a periodic generation rule.
///
/// The sequence is stored as one period plus a phase; the symbol at any
/// index `i` is `period[(i + phase) mod len]`. Shifting the sequence moves
/// the phase, so two-sided orbits are exact and need no extra storage.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SymbolSeq {
    period: Arc<Vec<u8>>,
    phase: i64,
}

impl SymbolSeq {
    pub fn from_window(window: Vec<u8>) -> Self {
        assert!(!window.is_empty(), "symbol sequence needs a nonempty window");
        SymbolSeq { period: Arc::new(window), phase: 0 }
    }

    pub fn with_phase(period: Arc<Vec<u8>>, phase: i64) -> Self {
        assert!(!period.is_empty());
        SymbolSeq { period, phase }
    }

    pub fn period_len(&self) -> usize {
        self.period.len()
    }

    pub fn symbol(&self, index: i64) -> u8 {
        let len = self.period.len() as i64;
        let i = (index + self.phase).rem_euclid(len);
        self.period[i as usize]
    }

    pub fn shifted(&self, by: i64) -> Self {
        SymbolSeq { period: Arc::clone(&self.period), phase: self.phase + by }
    }

    /// Symbols on the index window `[lo, hi]`, inclusive.
    pub fn window(&self, lo: i64, hi: i64) -> Vec<u8> {
        (lo..=hi).map(|i| self.symbol(i)).collect()
    }

    /// Index of the first disagreement by absolute value, up to `cap`.
    fn first_disagreement(&self, other: &SymbolSeq, cap: i64) -> Option<i64> {
        if self.symbol(0) != other.symbol(0) {
            return Some(0);
        }
        for m in 1..=cap {
            if self.symbol(m) != other.symbol(m) || self.symbol(-m) != other.symbol(-m) {
                return Some(m);
            }
        }
        None
    }
}

/// A point of a base system, tagged by the system's chart.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", content = "value", rename_all = "snake_case")]
pub enum BasePoint {
    Torus([f64; 2]),
    Circle(f64),
    Seq(SymbolSeq),
    Product(Vec<BasePoint>),
}

fn frac(x: f64) -> f64 {
    let r = x - x.floor();
    // floor can leave exactly 1.0 after rounding
    if r >= 1.0 {
        0.0
    } else {
        r
    }
}

/// Distance on the circle R/Z.
pub fn circle_dist(a: f64, b: f64) -> f64 {
    let d = (a - b).abs() % 1.0;
    d.min(1.0 - d)
}

impl BasePoint {
    pub fn torus(x: f64, y: f64) -> Self {
        BasePoint::Torus([frac(x), frac(y)])
    }

    pub fn circle(x: f64) -> Self {
        BasePoint::Circle(frac(x))
    }

    pub fn kind_name(&self) -> &'static str {
        match self {
            BasePoint::Torus(_) => "torus",
            BasePoint::Circle(_) => "circle",
            BasePoint::Seq(_) => "sequence",
            BasePoint::Product(_) => "product",
        }
    }
}

/// Maximum index scanned when comparing two periodic symbol sequences.
/// Disagreements beyond this contribute distance below 1e-300, far under
/// every tolerance in the library.
const SEQ_SCAN_CAP: i64 = 4096;

/// The base homeomorphism `f: M -> M` together with its metric.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", content = "params", rename_all = "snake_case")]
pub enum DiscreteSystem {
    /// Linear torus automorphism induced by [[2,1],[1,1]].
    CatMap,
    CircleRotation { angle: f64 },
    FullShift { k: u8 },
    /// `h(x, y) = (x + y, y)` on the 2-torus.
    SkewTorus,
    Product(Vec<DiscreteSystem>),
    Subshift(Subshift),
}

impl DiscreteSystem {
    fn mismatch(&self, p: &BasePoint) -> Error {
        Error::KindMismatch { expected: self.kind_name().into(), got: p.kind_name().into() }
    }

    pub fn kind_name(&self) -> &'static str {
        match self {
            DiscreteSystem::CatMap => "cat_map",
            DiscreteSystem::CircleRotation { .. } => "circle_rotation",
            DiscreteSystem::FullShift { .. } => "full_shift",
            DiscreteSystem::SkewTorus => "skew_torus",
            DiscreteSystem::Product(_) => "product",
            DiscreteSystem::Subshift(_) => "subshift",
        }
    }

    /// One application of `f`.
    pub fn step(&self, p: &BasePoint) -> Result<BasePoint> {
        match (self, p) {
            (DiscreteSystem::CatMap, BasePoint::Torus([x, y])) => {
                Ok(BasePoint::torus(2.0 * x + y, x + y))
            }
            (DiscreteSystem::SkewTorus, BasePoint::Torus([x, y])) => {
                Ok(BasePoint::torus(x + y, *y))
            }
            (DiscreteSystem::CircleRotation { angle }, BasePoint::Circle(x)) => {
                Ok(BasePoint::circle(x + angle))
            }
            (DiscreteSystem::FullShift { .. }, BasePoint::Seq(s))
            | (DiscreteSystem::Subshift(_), BasePoint::Seq(s)) => {
                Ok(BasePoint::Seq(s.shifted(1)))
            }
            (DiscreteSystem::Product(systems), BasePoint::Product(points))
                if systems.len() == points.len() =>
            {
                let stepped: Result<Vec<_>> =
                    systems.iter().zip(points).map(|(s, q)| s.step(q)).collect();
                Ok(BasePoint::Product(stepped?))
            }
            _ => Err(self.mismatch(p)),
        }
    }

    /// One application of `f^{-1}`.
    pub fn step_inverse(&self, p: &BasePoint) -> Result<BasePoint> {
        match (self, p) {
            (DiscreteSystem::CatMap, BasePoint::Torus([x, y])) => {
                // inverse of [[2,1],[1,1]] is [[1,-1],[-1,2]]
                Ok(BasePoint::torus(x - y, -x + 2.0 * y))
            }
            (DiscreteSystem::SkewTorus, BasePoint::Torus([x, y])) => {
                Ok(BasePoint::torus(x - y, *y))
            }
            (DiscreteSystem::CircleRotation { angle }, BasePoint::Circle(x)) => {
                Ok(BasePoint::circle(x - angle))
            }
            (DiscreteSystem::FullShift { .. }, BasePoint::Seq(s))
            | (DiscreteSystem::Subshift(_), BasePoint::Seq(s)) => {
                Ok(BasePoint::Seq(s.shifted(-1)))
            }
            (DiscreteSystem::Product(systems), BasePoint::Product(points))
                if systems.len() == points.len() =>
            {
                let stepped: Result<Vec<_>> =
                    systems.iter().zip(points).map(|(s, q)| s.step_inverse(q)).collect();
                Ok(BasePoint::Product(stepped?))
            }
            _ => Err(self.mismatch(p)),
        }
    }

    /// `f^n(p)` for any integer `n`.
    pub fn iterate(&self, p: &BasePoint, n: i64) -> Result<BasePoint> {
        let mut q = p.clone();
        if n >= 0 {
            for _ in 0..n {
                q = self.step(&q)?;
            }
        } else {
            for _ in 0..(-n) {
                q = self.step_inverse(&q)?;
            }
        }
        Ok(q)
    }

    /// `[f^{n_from}(p), ..., f^{n_to}(p)]`.
    pub fn orbit_segment(&self, p: &BasePoint, n_from: i64, n_to: i64) -> Result<Vec<BasePoint>> {
        if n_from > n_to {
            return Err(Error::InvalidArgument(format!(
                "orbit range is empty: {n_from} > {n_to}"
            )));
        }
        let mut out = Vec::with_capacity((n_to - n_from + 1) as usize);
        let mut q = self.iterate(p, n_from)?;
        out.push(q.clone());
        for _ in n_from..n_to {
            q = self.step(&q)?;
            out.push(q.clone());
        }
        Ok(out)
    }

    /// The metric of the base space.
    ///
    /// Torus and circle use the flat quotient metric, products the maximum
    /// of factor metrics, and symbol sequences `2^{-m}` where `m` is the
    /// smallest `|i|` with a disagreement at index `i`.
    pub fn distance(&self, p: &BasePoint, q: &BasePoint) -> Result<f64> {
        match (self, p, q) {
            (
                DiscreteSystem::CatMap | DiscreteSystem::SkewTorus,
                BasePoint::Torus(a),
                BasePoint::Torus(b),
            ) => Ok(circle_dist(a[0], b[0]).max(circle_dist(a[1], b[1]))),
            (DiscreteSystem::CircleRotation { .. }, BasePoint::Circle(a), BasePoint::Circle(b)) => {
                Ok(circle_dist(*a, *b))
            }
            (
                DiscreteSystem::FullShift { .. } | DiscreteSystem::Subshift(_),
                BasePoint::Seq(a),
                BasePoint::Seq(b),
            ) => Ok(seq_distance(a, b)),
            (DiscreteSystem::Product(systems), BasePoint::Product(ps), BasePoint::Product(qs))
                if systems.len() == ps.len() && systems.len() == qs.len() =>
            {
                let mut d: f64 = 0.0;
                for ((s, a), b) in systems.iter().zip(ps).zip(qs) {
                    d = d.max(s.distance(a, b)?);
                }
                Ok(d)
            }
            _ => Err(self.mismatch(p)),
        }
    }

    /// A Lipschitz bound for one application of `f` in the system metric.
    pub fn lipschitz(&self) -> f64 {
        match self {
            // spectral radius of [[2,1],[1,1]] in the max-metric, rounded up
            DiscreteSystem::CatMap => 3.0,
            DiscreteSystem::CircleRotation { .. } => 1.0,
            DiscreteSystem::FullShift { .. } | DiscreteSystem::Subshift(_) => 2.0,
            DiscreteSystem::SkewTorus => 2.0,
            DiscreteSystem::Product(systems) => {
                systems.iter().map(|s| s.lipschitz()).fold(1.0, f64::max)
            }
        }
    }

    /// Diameter of the base space in its metric.
    pub fn diameter(&self) -> f64 {
        match self {
            DiscreteSystem::CatMap | DiscreteSystem::SkewTorus => 0.5,
            DiscreteSystem::CircleRotation { .. } => 0.5,
            DiscreteSystem::FullShift { .. } | DiscreteSystem::Subshift(_) => 1.0,
            DiscreteSystem::Product(systems) => {
                systems.iter().map(|s| s.diameter()).fold(0.0, f64::max)
            }
        }
    }

    pub fn is_symbolic(&self) -> bool {
        matches!(self, DiscreteSystem::FullShift { .. } | DiscreteSystem::Subshift(_))
    }

    /// True when f preserves the metric, i.e. d(fx, fy) = d(x, y).
    pub fn is_isometry(&self) -> bool {
        match self {
            DiscreteSystem::CircleRotation { .. } => true,
            DiscreteSystem::Product(systems) => systems.iter().all(|s| s.is_isometry()),
            _ => false,
        }
    }
}

/// Two-sided shift metric `d(a, b) = 2^{-min{|i| : a_i != b_i}}`.
pub fn seq_distance(a: &SymbolSeq, b: &SymbolSeq) -> f64 {
    let cap = lcm_capped(a.period_len() as i64, b.period_len() as i64, SEQ_SCAN_CAP);
    match a.first_disagreement(b, cap) {
        Some(m) => (2.0f64).powi(-(m as i32).min(1000)),
        None => 0.0,
    }
}

fn lcm_capped(a: i64, b: i64, cap: i64) -> i64 {
    let g = gcd(a, b);
    let l = (a / g).saturating_mul(b);
    l.min(cap)
}

fn gcd(mut a: i64, mut b: i64) -> i64 {
    while b != 0 {
        let t = a % b;
        a = b;
        b = t;
    }
    a
}
