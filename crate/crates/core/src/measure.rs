//! Base-measure samplers and the lifted measure on the suspension space.
//!
//! `MeasureSampler` produces base points distributed according to an
//! invariant measure of the base map (or an approximation of one).  The
//! lift to the suspension is never materialized: `expected_gamma`
//! estimates the total mass of the lift and `lift_integral` estimates
//! integrals against the normalized lift by exact time-substitution
//! along vertical segments.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::sync::Arc;

use crate::discrete::{BasePoint, DiscreteSystem, SymbolSeq};
use crate::error::{Error, Result};
use crate::suspension::SingularSuspension;
use crate::symbolic::Subshift;
use crate::FiberPoint;

/// Period length used when drawing "generic" symbolic points.  Long
/// enough that the sequence metric treats distinct draws as far apart
/// out to every window the library inspects.
const SEQ_SAMPLE_PERIOD: usize = 128;

/// Subintervals for the vertical midpoint quadrature in `lift_integral`.
const LIFT_GRID: usize = 512;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", content = "params", rename_all = "snake_case")]
pub enum SamplerKind {
    /// i.i.d. uniform draws from the base space.
    LebesgueOnBase,
    /// Birkhoff sampling: consecutive orbit points after a burn-in.
    ErgodicAlongOrbit { start: BasePoint, burn_in: u64 },
    /// Uniform random concatenations of top-level blocks.
    UniformOnSubshift(Subshift),
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MeasureSampler {
    pub kind: SamplerKind,
    pub seed: u64,
}

impl MeasureSampler {
    pub fn lebesgue(seed: u64) -> Self {
        MeasureSampler { kind: SamplerKind::LebesgueOnBase, seed }
    }

    pub fn ergodic(start: BasePoint, burn_in: u64, seed: u64) -> Self {
        MeasureSampler { kind: SamplerKind::ErgodicAlongOrbit { start, burn_in }, seed }
    }

    pub fn on_subshift(sh: Subshift, seed: u64) -> Self {
        MeasureSampler { kind: SamplerKind::UniformOnSubshift(sh), seed }
    }

    /// Draws `n` base points.  Deterministic in `(self, system, n)`.
    pub fn sample_base(&self, system: &DiscreteSystem, n: usize) -> Result<Vec<BasePoint>> {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        match &self.kind {
            SamplerKind::LebesgueOnBase => {
                (0..n).map(|_| uniform_point(system, &mut rng)).collect()
            }
            SamplerKind::ErgodicAlongOrbit { start, burn_in } => {
                let p0 = system.iterate(start, *burn_in as i64)?;
                system.orbit_segment(&p0, 0, n as i64 - 1)
            }
            SamplerKind::UniformOnSubshift(sh) => {
                // enough blocks that every window the metric can resolve
                // sits inside the sampled period
                let blocks = (SEQ_SAMPLE_PERIOD / sh.top_block_len().max(1)).max(2);
                Ok((0..n).map(|_| BasePoint::Seq(sh.random_point(&mut rng, blocks))).collect())
            }
        }
    }
}

fn uniform_point<R: Rng>(system: &DiscreteSystem, rng: &mut R) -> Result<BasePoint> {
    match system {
        DiscreteSystem::CatMap | DiscreteSystem::SkewTorus => {
            Ok(BasePoint::torus(rng.gen::<f64>(), rng.gen::<f64>()))
        }
        DiscreteSystem::CircleRotation { .. } => Ok(BasePoint::circle(rng.gen::<f64>())),
        DiscreteSystem::FullShift { k } => {
            let period: Vec<u8> =
                (0..SEQ_SAMPLE_PERIOD).map(|_| rng.gen_range(0..*k)).collect();
            Ok(BasePoint::Seq(SymbolSeq::with_phase(Arc::new(period), 0)))
        }
        DiscreteSystem::Subshift(sh) => {
            let blocks = (SEQ_SAMPLE_PERIOD / sh.top_block_len().max(1)).max(2);
            Ok(BasePoint::Seq(sh.random_point(rng, blocks)))
        }
        DiscreteSystem::Product(parts) => {
            let coords = parts.iter().map(|s| uniform_point(s, rng)).collect::<Result<_>>()?;
            Ok(BasePoint::Product(coords))
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum GammaExpectation {
    Finite { estimate: f64, stderr: f64 },
    DivergenceSuspected { lower_bound: f64 },
}

impl GammaExpectation {
    pub fn is_finite(&self) -> bool {
        matches!(self, GammaExpectation::Finite { .. })
    }

    pub fn value_or_bound(&self) -> f64 {
        match self {
            GammaExpectation::Finite { estimate, .. } => *estimate,
            GammaExpectation::DivergenceSuspected { lower_bound } => *lower_bound,
        }
    }
}

/// Monte-Carlo estimate of the mean traversal time over the base
/// measure.  Divergence is *suspected*, never proved: censored samples
/// (gamma past `cap` or past the quadrature's own certificate) or
/// prefix means that keep growing under sample doubling both trip the
/// diagnostic.
pub fn expected_gamma(
    ss: &SingularSuspension,
    mu: &MeasureSampler,
    n_samples: usize,
    cap: f64,
) -> Result<GammaExpectation> {
    if n_samples < 100 {
        return Err(Error::InvalidArgument(format!(
            "expected_gamma needs at least 100 samples, got {n_samples}"
        )));
    }
    let points = mu.sample_base(&ss.torus.system, n_samples)?;
    let mut vals = Vec::with_capacity(n_samples);
    let mut censored = false;
    for x in &points {
        let g = ss.gamma(x)?;
        let v = g.value_or_bound();
        if !g.is_finite() || v > cap {
            censored = true;
            vals.push(v.min(cap));
        } else {
            vals.push(v);
        }
    }
    let mean = |xs: &[f64]| xs.iter().sum::<f64>() / xs.len() as f64;
    let m_quarter = mean(&vals[..n_samples / 4]);
    let m_half = mean(&vals[..n_samples / 2]);
    let m_full = mean(&vals);
    let growing = m_full > 1.1 * m_half.max(1e-12) || m_half > 1.1 * m_quarter.max(1e-12);
    if censored || growing {
        return Ok(GammaExpectation::DivergenceSuspected {
            lower_bound: m_full.max(m_half).max(m_quarter),
        });
    }
    let var = vals.iter().map(|v| (v - m_full).powi(2)).sum::<f64>() / (vals.len() - 1) as f64;
    Ok(GammaExpectation::Finite { estimate: m_full, stderr: (var / vals.len() as f64).sqrt() })
}

/// Integral of `observable` against the normalized lift of `mu`.
///
/// The inner integral over a vertical psi-segment is rewritten by the
/// exact time substitution into an integral over phi-time `[0,1)`
/// weighted by `1/alpha`, so the numerator and the gamma normalizer are
/// computed on the same quadrature grid and the constant observable
/// integrates to exactly 1.
pub fn lift_integral(
    ss: &SingularSuspension,
    mu: &MeasureSampler,
    observable: impl Fn(&FiberPoint) -> f64,
    n_samples: usize,
) -> Result<f64> {
    let pre = expected_gamma(ss, mu, n_samples.max(100), ss.quad.cap)?;
    if !pre.is_finite() {
        return Err(Error::DivergentExpectation(format!(
            "lift_integral requires a finite mean traversal time; \
             divergence suspected with lower bound {:.3e}",
            pre.value_or_bound()
        )));
    }
    let points = mu.sample_base(&ss.torus.system, n_samples)?;
    let mut num = 0.0;
    let mut den = 0.0;
    let w = 1.0 / LIFT_GRID as f64;
    for x in &points {
        for j in 0..LIFT_GRID {
            let h = (j as f64 + 0.5) * w;
            let p = FiberPoint::new(x.clone(), h);
            let inv_a = 1.0 / ss.alpha(&p)?.max(1e-12);
            num += w * observable(&p) * inv_a;
            den += w * inv_a;
        }
    }
    Ok(num / den)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::suspension::{Brake, Profile, SingularSet};
    use crate::MappingTorus;

    fn regular(system: DiscreteSystem) -> SingularSuspension {
        SingularSuspension::new(MappingTorus::new(system), Brake::regular()).unwrap()
    }

    #[test]
    fn lebesgue_expected_gamma_is_one_for_regular_flow() {
        let ss = regular(DiscreteSystem::CatMap);
        let mu = MeasureSampler::lebesgue(7);
        match expected_gamma(&ss, &mu, 200, 1e6).unwrap() {
            GammaExpectation::Finite { estimate, stderr } => {
                assert!((estimate - 1.0).abs() < 1e-9, "estimate {estimate}");
                assert!(stderr < 1e-9);
            }
            other => panic!("expected finite, got {other:?}"),
        }
    }

    #[test]
    fn ergodic_sampler_walks_the_orbit() {
        let sys = DiscreteSystem::CircleRotation { angle: 0.25 };
        let mu = MeasureSampler::ergodic(BasePoint::circle(0.0), 2, 1);
        let pts = mu.sample_base(&sys, 4).unwrap();
        let want = [0.5, 0.75, 0.0, 0.25];
        for (p, w) in pts.iter().zip(want) {
            assert!(sys.distance(p, &BasePoint::circle(w)).unwrap() < 1e-12);
        }
    }

    #[test]
    fn subshift_sampler_points_live_in_the_language() {
        let sh = Subshift::full(2).unwrap();
        let mu = MeasureSampler::on_subshift(sh, 3);
        let sys = DiscreteSystem::FullShift { k: 2 };
        let pts = mu.sample_base(&sys, 8).unwrap();
        for p in &pts {
            match p {
                BasePoint::Seq(s) => assert!(s.period_len() >= 2),
                other => panic!("unexpected point {other:?}"),
            }
        }
        // deterministic given the seed
        let again = MeasureSampler::on_subshift(Subshift::full(2).unwrap(), 3)
            .sample_base(&sys, 8)
            .unwrap();
        for (a, b) in pts.iter().zip(&again) {
            assert!(sys.distance(a, b).unwrap() == 0.0);
        }
    }

    #[test]
    fn lift_of_constant_is_exactly_one() {
        let ss = regular(DiscreteSystem::FullShift { k: 2 });
        let mu = MeasureSampler::lebesgue(11);
        let v = lift_integral(&ss, &mu, |_| 1.0, 100).unwrap();
        assert!((v - 1.0).abs() < 1e-12, "{v}");
    }

    #[test]
    fn regular_lift_splits_heights_evenly() {
        let ss = regular(DiscreteSystem::CatMap);
        let mu = MeasureSampler::lebesgue(13);
        let v = lift_integral(&ss, &mu, |p| if p.height < 0.5 { 1.0 } else { 0.0 }, 100).unwrap();
        assert!((v - 0.5).abs() < 1e-9, "{v}");
    }

    #[test]
    fn lift_integral_is_psi_invariant_within_noise() {
        // a braked (but everywhere-finite-gamma) flow over the cat map
        let brake = Brake {
            singular_set: SingularSet::PointList(vec![FiberPoint::new(
                BasePoint::torus(0.31, 0.71),
                0.4,
            )]),
            profile: Profile::Power(0.5),
        };
        let ss = SingularSuspension::new(MappingTorus::new(DiscreteSystem::CatMap), brake).unwrap();
        let mu = MeasureSampler::lebesgue(17);
        let xi = |p: &FiberPoint| (std::f64::consts::TAU * p.height).sin() + 1.0;
        let direct = lift_integral(&ss, &mu, xi, 120).unwrap();
        let s = 0.37;
        let shifted = lift_integral(
            &ss,
            &mu,
            |p| match ss.psi_flow(s, p) {
                Ok(q) => xi(&q),
                Err(_) => 0.0,
            },
            120,
        )
        .unwrap();
        // same sample cloud, so the gap is quadrature + flow error only;
        // allow a loose band
        assert!(
            (direct - shifted).abs() < 0.05,
            "direct {direct} vs shifted {shifted}"
        );
    }

    #[test]
    fn heavy_brake_trips_the_divergence_diagnostic() {
        let sing = FiberPoint::new(BasePoint::torus(0.5, 0.5), 0.5);
        let mild = Brake {
            singular_set: SingularSet::PointList(vec![sing.clone()]),
            profile: Profile::Power(0.5),
        };
        let heavy = Brake {
            singular_set: SingularSet::PointList(vec![sing]),
            profile: Profile::Power(4.0),
        };
        let torus = MappingTorus::new(DiscreteSystem::CatMap);
        let mu = MeasureSampler::lebesgue(23);
        let ss_mild = SingularSuspension::new(torus.clone(), mild).unwrap();
        let ss_heavy = SingularSuspension::new(torus, heavy).unwrap();
        let got_mild = expected_gamma(&ss_mild, &mu, 2000, 1e6).unwrap();
        let got_heavy = expected_gamma(&ss_heavy, &mu, 2000, 1e6).unwrap();
        assert!(got_mild.is_finite(), "mild profile should stabilize: {got_mild:?}");
        assert!(!got_heavy.is_finite(), "heavy profile should be flagged: {got_heavy:?}");
    }
}
