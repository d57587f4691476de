//! Scenario runner: bundles a base system, a brake, a measure, and a
//! list of analyses into a reproducible experiment with an expected
//! verdict.
//!
//! Everything is deterministic given the scenario (seeds live inside
//! the samplers), so replaying a scenario yields byte-identical
//! reports.

use serde::{Deserialize, Serialize};

use crate::discrete::DiscreteSystem;
use crate::entropy::{self, EntropyEstimate};
use crate::error::Result;
use crate::expansive::{
    flow_expansiveness_falsifier, map_expansiveness_falsifier, FlowFalsifierOutcome,
    MapFalsifierOutcome, ReparamGrid,
};
use crate::measure::{expected_gamma, GammaExpectation, MeasureSampler};
use crate::suspension::{Brake, Profile, QuadratureControls, SingularSet, SingularSuspension};
use crate::symbolic::{choose_subshift_avoiding_points, Subshift};
use crate::{BasePoint, FiberPoint, SymbolSeq};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    EntropyPositive,
    EntropyZero,
    ExpansiveEvidence,
    NonExpansive,
    GammaDiverges,
    GammaFinite,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Analysis {
    EntropyMap,
    EntropyFlow,
    ExpectedGamma,
    FlowExpansiveness,
    MapExpansiveness,
    /// build a minimal subshift avoiding windows of the singular orbit
    /// points, then analyse entropy and gamma on it
    SubshiftAvoidance { targets: Vec<f64> },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ScenarioGrids {
    pub n_grid: Vec<usize>,
    /// flow times for the suspension entropy estimate; braked flows run
    /// slow, so their grids use steps matched to the slowdown
    pub t_grid: Vec<f64>,
    pub eps_grid: Vec<f64>,
    pub n_samples: usize,
    pub reparam: ReparamGrid,
    pub exp_eps: f64,
    pub exp_delta: f64,
    pub n_pairs: usize,
    pub gamma_samples: usize,
    pub gamma_cap: f64,
}

impl Default for ScenarioGrids {
    fn default() -> Self {
        ScenarioGrids {
            n_grid: (2..=8).collect(),
            t_grid: (2..=8).map(|n| n as f64).collect(),
            eps_grid: vec![0.25, 0.125],
            n_samples: 2048,
            reparam: ReparamGrid::default(),
            exp_eps: 0.25,
            exp_delta: 0.05,
            n_pairs: 256,
            gamma_samples: 1000,
            gamma_cap: 1e6,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Scenario {
    pub name: String,
    pub system: DiscreteSystem,
    pub brake: Brake,
    pub measure: MeasureSampler,
    pub analyses: Vec<Analysis>,
    #[serde(default)]
    pub grids: Option<ScenarioGrids>,
    /// quadrature override; scanning analyses tolerate a looser clock
    /// tolerance than the default certification-grade one
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub quad: Option<QuadratureControls>,
    pub seed: u64,
    pub expected: Verdict,
    /// plain-language statement of the fact the scenario demonstrates
    pub claim: String,
}

#[derive(Debug, Clone, Serialize, Deserialize, Default)]
pub struct AnalysisResults {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub entropy_map: Option<EntropyEstimate>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub entropy_flow: Option<EntropyEstimate>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub expected_gamma: Option<GammaExpectation>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub flow_expansiveness: Option<FlowFalsifierOutcome>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub map_expansiveness: Option<MapFalsifierOutcome>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub avoiding_subshift: Option<Subshift>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Report {
    pub scenario: String,
    pub seed: u64,
    pub claim: String,
    pub expected: Verdict,
    pub observed: Vec<Verdict>,
    pub pass: bool,
    pub results: AnalysisResults,
    /// per-analysis failures; never fatal for the report as a whole
    pub errors: Vec<String>,
}

/// headline above this counts as positive entropy
const ENTROPY_POSITIVE: f64 = 0.1;
/// headline at or below this counts as zero entropy
const ENTROPY_ZERO: f64 = 0.05;

fn record<T>(out: Result<T>, slot: &mut Option<T>, errors: &mut Vec<String>, what: &str) {
    match out {
        Ok(v) => *slot = Some(v),
        Err(e) => errors.push(format!("{what}: {e}")),
    }
}

/// the singular points' base sequences, for point avoidance
fn singular_seqs(ss: &SingularSuspension) -> Vec<SymbolSeq> {
    ss.singular_points()
        .iter()
        .filter_map(|p| match &p.base {
            BasePoint::Seq(s) => Some(s.clone()),
            _ => None,
        })
        .collect()
}

/// mean grid spacing: slopes are per unit time, verdicts are thresholds
/// on per-step growth (the entropy of the time-step map)
fn grid_step(xs: &[f64]) -> f64 {
    if xs.len() >= 2 {
        (xs[xs.len() - 1] - xs[0]) / (xs.len() - 1) as f64
    } else {
        1.0
    }
}

pub fn run_scenario(sc: &Scenario) -> Report {
    let grids = sc.grids.clone().unwrap_or_default();
    let mut results = AnalysisResults::default();
    let mut errors = Vec::new();
    let torus = crate::MappingTorus::new(sc.system.clone());
    let quad = sc.quad.clone().unwrap_or_default();
    let ss = match SingularSuspension::with_controls(torus, sc.brake.clone(), quad) {
        Ok(ss) => Some(ss),
        Err(e) => {
            errors.push(format!("suspension: {e}"));
            None
        }
    };
    for analysis in &sc.analyses {
        match analysis {
            Analysis::EntropyMap => record(
                entropy::entropy_estimate_map(
                    &sc.system,
                    &sc.measure,
                    &grids.n_grid,
                    &grids.eps_grid,
                    grids.n_samples,
                ),
                &mut results.entropy_map,
                &mut errors,
                "entropy_map",
            ),
            Analysis::EntropyFlow => {
                if let Some(ss) = &ss {
                    record(
                        entropy::entropy_estimate_flow(
                            ss,
                            &sc.measure,
                            &grids.t_grid,
                            &grids.eps_grid,
                            grids.n_samples,
                        ),
                        &mut results.entropy_flow,
                        &mut errors,
                        "entropy_flow",
                    );
                }
            }
            Analysis::ExpectedGamma => {
                if let Some(ss) = &ss {
                    record(
                        expected_gamma(ss, &sc.measure, grids.gamma_samples, grids.gamma_cap),
                        &mut results.expected_gamma,
                        &mut errors,
                        "expected_gamma",
                    );
                }
            }
            Analysis::FlowExpansiveness => {
                if let Some(ss) = &ss {
                    record(
                        flow_expansiveness_falsifier(
                            ss,
                            grids.exp_eps,
                            grids.exp_delta,
                            &sc.measure,
                            grids.n_pairs,
                            &grids.reparam,
                        ),
                        &mut results.flow_expansiveness,
                        &mut errors,
                        "flow_expansiveness",
                    );
                }
            }
            Analysis::MapExpansiveness => record(
                map_expansiveness_falsifier(
                    &sc.system,
                    grids.exp_eps,
                    &sc.measure,
                    grids.n_pairs,
                    10,
                ),
                &mut results.map_expansiveness,
                &mut errors,
                "map_expansiveness",
            ),
            Analysis::SubshiftAvoidance { targets } => {
                if let Some(ss) = &ss {
                    let points = singular_seqs(ss);
                    match choose_subshift_avoiding_points(&points, targets) {
                        Ok(sh) => {
                            // entropy and gamma are evaluated on the
                            // chosen subshift's own shift space
                            let sub_sys = DiscreteSystem::Subshift(sh.clone());
                            record(
                                entropy::entropy_estimate_map(
                                    &sub_sys,
                                    &sc.measure,
                                    &grids.n_grid,
                                    &grids.eps_grid,
                                    grids.n_samples,
                                ),
                                &mut results.entropy_map,
                                &mut errors,
                                "avoidance entropy",
                            );
                            let mu = MeasureSampler::on_subshift(sh.clone(), sc.seed);
                            record(
                                expected_gamma(ss, &mu, grids.gamma_samples, grids.gamma_cap),
                                &mut results.expected_gamma,
                                &mut errors,
                                "avoidance expected_gamma",
                            );
                            results.avoiding_subshift = Some(sh);
                        }
                        Err(e) => errors.push(format!("avoidance: {e}")),
                    }
                }
            }
        }
    }
    let mut observed = Vec::new();
    let n_grid_f: Vec<f64> = grids.n_grid.iter().map(|&n| n as f64).collect();
    let headline = match (&results.entropy_flow, &results.entropy_map) {
        (Some(e), _) if !e.inconclusive => Some(e.headline * grid_step(&grids.t_grid)),
        (None, Some(e)) if !e.inconclusive => Some(e.headline * grid_step(&n_grid_f)),
        _ => None,
    };
    if let Some(h) = headline {
        if h > ENTROPY_POSITIVE {
            observed.push(Verdict::EntropyPositive);
        } else if h <= ENTROPY_ZERO {
            observed.push(Verdict::EntropyZero);
        }
    }
    match &results.flow_expansiveness {
        Some(FlowFalsifierOutcome::NoCounterexample { .. }) => {
            observed.push(Verdict::ExpansiveEvidence)
        }
        Some(FlowFalsifierOutcome::Counterexample(_)) => observed.push(Verdict::NonExpansive),
        None => {}
    }
    match &results.map_expansiveness {
        Some(MapFalsifierOutcome::NoCounterexample { .. })
            if results.flow_expansiveness.is_none() =>
        {
            observed.push(Verdict::ExpansiveEvidence)
        }
        Some(MapFalsifierOutcome::Counterexample { .. })
            if results.flow_expansiveness.is_none() =>
        {
            observed.push(Verdict::NonExpansive)
        }
        _ => {}
    }
    match &results.expected_gamma {
        Some(GammaExpectation::Finite { .. }) => observed.push(Verdict::GammaFinite),
        Some(GammaExpectation::DivergenceSuspected { .. }) => {
            observed.push(Verdict::GammaDiverges)
        }
        None => {}
    }
    let pass = observed.contains(&sc.expected) && errors.is_empty();
    Report {
        scenario: sc.name.clone(),
        seed: sc.seed,
        claim: sc.claim.clone(),
        expected: sc.expected,
        observed,
        pass,
        results,
        errors,
    }
}

fn seq(word: &[u8]) -> BasePoint {
    BasePoint::Seq(SymbolSeq::from_window(word.to_vec()))
}

fn point_brake(points: Vec<FiberPoint>, profile: Profile) -> Brake {
    Brake { singular_set: SingularSet::PointList(points), profile }
}

/// deterministic point cloud on the torus for the bigger brake families
fn torus_cloud(n: usize, salt: u64) -> Vec<FiberPoint> {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(salt);
    (0..n)
        .map(|_| {
            FiberPoint::new(
                BasePoint::torus(rng.gen::<f64>(), rng.gen::<f64>()),
                rng.gen_range(0.0..1.0),
            )
        })
        .collect()
}

pub fn bundled_suite() -> Vec<Scenario> {
    let mut out = Vec::new();
    out.push(Scenario {
        name: "roof1-shift".into(),
        system: DiscreteSystem::FullShift { k: 2 },
        brake: Brake::regular(),
        measure: MeasureSampler::lebesgue(101),
        analyses: vec![Analysis::EntropyFlow],
        grids: None,
        quad: None,
        seed: 101,
        expected: Verdict::EntropyPositive,
        claim: "a unit-roof suspension of the full 2-shift inherits the shift's entropy log 2"
            .into(),
    });
    out.push(Scenario {
        name: "roof1-catmap".into(),
        system: DiscreteSystem::CatMap,
        brake: Brake::regular(),
        measure: MeasureSampler::lebesgue(102),
        analyses: vec![Analysis::EntropyFlow],
        grids: Some(ScenarioGrids {
            t_grid: (2..=5).map(|n| n as f64).collect(),
            eps_grid: vec![0.25],
            n_samples: 16384,
            ..Default::default()
        }),
        quad: None,
        seed: 102,
        expected: Verdict::EntropyPositive,
        claim: "a unit-roof suspension of a hyperbolic torus automorphism keeps positive entropy"
            .into(),
    });
    out.push(Scenario {
        name: "rotation-zero".into(),
        system: DiscreteSystem::CircleRotation { angle: 0.3817 },
        brake: Brake::regular(),
        measure: MeasureSampler::lebesgue(103),
        analyses: vec![Analysis::EntropyMap],
        grids: None,
        quad: None,
        seed: 103,
        expected: Verdict::EntropyZero,
        claim: "suspending an isometry cannot create entropy: zero in the base, zero in the flow"
            .into(),
    });
    out.push(Scenario {
        name: "fiber-kill".into(),
        system: DiscreteSystem::FullShift { k: 2 },
        brake: Brake {
            singular_set: SingularSet::WholeFiber { height: 0.5 },
            profile: Profile::Power(2.0),
        },
        measure: MeasureSampler::lebesgue(104),
        analyses: vec![Analysis::EntropyFlow],
        grids: Some(ScenarioGrids {
            t_grid: (1..=6).map(|k| k as f64 * 2.0).collect(),
            eps_grid: vec![0.25],
            n_samples: 384,
            ..Default::default()
        }),
        quad: None,
        seed: 104,
        expected: Verdict::EntropyZero,
        claim: "braking a whole fiber to a stop traps every orbit, so the singular flow's \
                non-wandering dynamics collapse and entropy drops to zero"
            .into(),
    });
    out.push(Scenario {
        name: "gamma-divergence".into(),
        system: DiscreteSystem::CatMap,
        brake: point_brake(
            vec![FiberPoint::new(BasePoint::torus(0.5, 0.5), 0.5)],
            Profile::Power(4.0),
        ),
        measure: MeasureSampler::lebesgue(105),
        analyses: vec![Analysis::ExpectedGamma],
        grids: Some(ScenarioGrids { gamma_samples: 2000, ..Default::default() }),
        quad: None,
        seed: 105,
        expected: Verdict::GammaDiverges,
        claim: "a steep enough brake at a single point makes the mean fiber-traversal time \
                diverge under the area measure"
            .into(),
    });
    out.push(Scenario {
        name: "avoid-asing".into(),
        system: DiscreteSystem::FullShift { k: 2 },
        brake: point_brake(
            vec![
                FiberPoint::new(seq(&[0, 0, 1, 1]), 0.5),
                FiberPoint::new(seq(&[0, 1, 1, 0]), 0.5),
                FiberPoint::new(seq(&[1, 1, 0, 0]), 0.5),
                FiberPoint::new(seq(&[1, 0, 0, 1]), 0.5),
            ],
            Profile::Power(1.0),
        ),
        measure: MeasureSampler::lebesgue(106),
        analyses: vec![Analysis::SubshiftAvoidance { targets: vec![0.3, 0.25, 0.2] }],
        grids: Some(ScenarioGrids { gamma_samples: 400, ..Default::default() }),
        quad: None,
        seed: 106,
        expected: Verdict::EntropyPositive,
        claim: "a minimal subshift with prescribed entropy can dodge the singular orbit \
                entirely, so the flow keeps an invariant set with positive entropy and finite \
                traversal times"
            .into(),
    });
    out.push(Scenario {
        name: "expansive-shift".into(),
        system: DiscreteSystem::FullShift { k: 2 },
        brake: point_brake(vec![FiberPoint::new(seq(&[0, 1]), 0.5)], Profile::Power(1.0)),
        measure: MeasureSampler::lebesgue(107),
        analyses: vec![Analysis::FlowExpansiveness, Analysis::MapExpansiveness],
        grids: None,
        quad: None,
        seed: 107,
        expected: Verdict::ExpansiveEvidence,
        claim: "a brake with finitely many zeros over an expansive base leaves the singular \
                suspension expansive"
            .into(),
    });
    out.push(Scenario {
        name: "nonexpansive-rotation".into(),
        system: DiscreteSystem::CircleRotation { angle: 0.739 },
        brake: Brake::regular(),
        measure: MeasureSampler::lebesgue(108),
        analyses: vec![Analysis::FlowExpansiveness],
        grids: Some(ScenarioGrids { n_pairs: 64, ..Default::default() }),
        quad: None,
        seed: 108,
        expected: Verdict::NonExpansive,
        claim: "parallel orbits of an isometric suspension track each other forever, defeating \
                expansiveness"
            .into(),
    });
    // the time grids scale with the brake: with more singular points the
    // profile is small over more of the space, so orbits need longer
    // flow times to cross the same number of fibers
    for (n, profile, step, pts, samples, tol, tag) in [
        (1, Profile::Power(2.0), 2.5, 6, 8192, 1e-6, "anosov-1-power"),
        (8, Profile::Exp(0.3), 3.0, 6, 8192, 1e-5, "anosov-8-exp"),
        (64, Profile::Power(2.0), 25.0, 6, 4096, 1e-4, "anosov-64-power"),
    ] {
        out.push(Scenario {
            name: tag.into(),
            system: DiscreteSystem::CatMap,
            brake: point_brake(torus_cloud(n, 1000 + n as u64), profile),
            measure: MeasureSampler::lebesgue(109 + n as u64),
            analyses: vec![Analysis::EntropyFlow],
            grids: Some(ScenarioGrids {
                t_grid: (1..=pts).map(|k| k as f64 * step).collect(),
                eps_grid: vec![0.25],
                n_samples: samples,
                ..Default::default()
            }),
            quad: Some(QuadratureControls { tol, ..Default::default() }),
            seed: 109 + n as u64,
            expected: Verdict::EntropyPositive,
            claim: format!(
                "braking {n} isolated points cannot cover the non-wandering set of a \
                 transitive hyperbolic base, so entropy survives"
            ),
        });
    }
    out.push(Scenario {
        name: "anosov-wholefiber".into(),
        system: DiscreteSystem::CatMap,
        brake: Brake {
            singular_set: SingularSet::WholeFiber { height: 0.5 },
            profile: Profile::Power(2.0),
        },
        measure: MeasureSampler::lebesgue(110),
        analyses: vec![Analysis::EntropyFlow],
        grids: Some(ScenarioGrids {
            // long enough for the transient growth to flatten out: every
            // orbit is trapped within one fiber crossing
            t_grid: (1..=8).map(|k| k as f64 * 4.0).collect(),
            eps_grid: vec![0.25],
            n_samples: 384,
            ..Default::default()
        }),
        quad: None,
        seed: 110,
        expected: Verdict::EntropyZero,
        claim: "the converse face: a singular set projecting onto the whole base traps every \
                orbit of the hyperbolic suspension, killing entropy (a whole fiber stands in \
                for a countable set, which could never cover a transitive base)"
            .into(),
    });
    // two disjoint minimal pieces: the brake lives on one generated
    // subshift, entropy is recovered on a disjoint one
    let lam1 = crate::symbolic::minimal_subshift_with_entropy(0.15, 3, 0.05)
        .expect("bundled target 0.15 is achievable");
    let lam2 = crate::symbolic::minimal_subshift_with_entropy(0.45, 3, 0.05)
        .expect("bundled target 0.45 is achievable");
    let lam1_pt = lam1.canonical_point();
    let sing: Vec<FiberPoint> = (0..4)
        .map(|i| FiberPoint::new(BasePoint::Seq(lam1_pt.shifted(i * 3)), 0.5))
        .collect();
    out.push(Scenario {
        name: "horseshoe-over-horseshoe".into(),
        system: DiscreteSystem::FullShift { k: 2 },
        brake: point_brake(sing, Profile::Power(1.0)),
        measure: MeasureSampler::on_subshift(lam2, 111),
        analyses: vec![
            Analysis::EntropyMap,
            Analysis::ExpectedGamma,
        ],
        grids: Some(ScenarioGrids { gamma_samples: 400, ..Default::default() }),
        quad: None,
        seed: 111,
        expected: Verdict::GammaFinite,
        claim: "with the brake pinned to one minimal subshift, a disjoint minimal subshift of \
                the same shift space flows past it with finite traversal times and positive \
                entropy of its own"
            .into(),
    });
    out
}
