use singsusp_core::entropy::{entropy_estimate_flow, entropy_estimate_map, default_eps_grid};
use singsusp_core::measure::expected_gamma;
use singsusp_core::symbolic::minimal_subshift_with_entropy;
use singsusp_core::*;

fn suspend(system: DiscreteSystem, brake: Brake) -> SingularSuspension {
    SingularSuspension::new(MappingTorus::new(system), brake).unwrap()
}

fn main() {
    let which = std::env::args().nth(1).unwrap_or_default();
    match which.as_str() {
        "c7" => c7(),
        "c5" => c5(),
        "c12" => c12(),
        _ => eprintln!("unknown probe"),
    }
}

fn c7() {
    let lam1 = minimal_subshift_with_entropy(0.15, 3, 0.05).unwrap();
    let lam2 = minimal_subshift_with_entropy(0.45, 3, 0.05).unwrap();
    let p = lam1.canonical_point();
    let sing: Vec<FiberPoint> = (0..4)
        .map(|i| FiberPoint::new(BasePoint::Seq(p.shifted(i * 3)), 0.5))
        .collect();
    let ss = suspend(
        DiscreteSystem::FullShift { k: 2 },
        Brake { singular_set: SingularSet::PointList(sing), profile: Profile::Power(1.0) },
    );
    let mu = MeasureSampler::on_subshift(lam2.clone(), 7);
    let eg = expected_gamma(&ss, &mu, 400, 1e6).unwrap();
    let step = eg.value_or_bound();
    println!("E(gamma) = {step}");
    let base = entropy_estimate_map(
        &DiscreteSystem::Subshift(lam2),
        &mu,
        &(2..=14).collect::<Vec<_>>(),
        &default_eps_grid(),
        0,
    )
    .unwrap();
    println!("base headline {}", base.headline);
    let t_grid: Vec<f64> = (1..=6).map(|k| k as f64 * step).collect();
    let flow = entropy_estimate_flow(&ss, &mu, &t_grid, &[0.25, 0.125], 4096).unwrap();
    println!("flow headline {} inconclusive {}", flow.headline, flow.inconclusive);
    print!("{}", flow.to_tsv());
}

fn c5() {
    let rot = DiscreteSystem::CircleRotation { angle: 0.3817 };
    for (tag, brake, scale, pts) in [
        (
            "point",
            Brake {
                singular_set: SingularSet::PointList(vec![FiberPoint::new(
                    BasePoint::circle(0.3),
                    0.5,
                )]),
                profile: Profile::Power(2.0),
            },
            16.0,
            8,
        ),
        (
            "whole fiber",
            Brake {
                singular_set: SingularSet::WholeFiber { height: 0.5 },
                profile: Profile::Power(2.0),
            },
            4.0,
            8,
        ),
    ] {
        let ss = suspend(rot.clone(), brake);
        let t_grid: Vec<f64> = (1..=pts).map(|k| k as f64 * scale).collect();
        let est = entropy_estimate_flow(&ss, &MeasureSampler::lebesgue(5), &t_grid, &[0.25, 0.125], 2048)
            .unwrap();
        println!("{tag}: headline {} inconclusive {}", est.headline, est.inconclusive);
        print!("{}", est.to_tsv());
    }
}

#[allow(dead_code)]
fn c12() {
    use rand::{Rng, SeedableRng};
    use singsusp_core::suspension::QuadratureControls;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(1000 + 64);
    let sing: Vec<FiberPoint> = (0..64)
        .map(|_| FiberPoint::new(BasePoint::torus(rng.gen(), rng.gen()), rng.gen_range(0.0..1.0)))
        .collect();
    let ss = SingularSuspension::with_controls(
        MappingTorus::new(DiscreteSystem::CatMap),
        Brake { singular_set: SingularSet::PointList(sing), profile: Profile::Exp(0.3) },
        QuadratureControls { tol: 1e-4, ..Default::default() },
    )
    .unwrap();
    let step: f64 = std::env::args().nth(2).map(|s| s.parse().unwrap()).unwrap_or(12.0);
    let t_grid: Vec<f64> = (1..=5).map(|k| k as f64 * step).collect();
    let t0 = std::time::Instant::now();
    let est = entropy_estimate_flow(&ss, &MeasureSampler::lebesgue(12), &t_grid, &[0.25], 3072).unwrap();
    println!(
        "step {step}: headline {} effective {} inconclusive {} ({:.0}s)",
        est.headline,
        est.headline * step,
        est.inconclusive,
        t0.elapsed().as_secs_f64()
    );
    print!("{}", est.to_tsv());
}
