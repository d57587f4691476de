use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use singsusp_core::*;

fn rand_base(sys: &DiscreteSystem, rng: &mut ChaCha8Rng) -> BasePoint {
    match sys {
        DiscreteSystem::CatMap | DiscreteSystem::SkewTorus => {
            BasePoint::torus(rng.gen(), rng.gen())
        }
        DiscreteSystem::CircleRotation { .. } => BasePoint::circle(rng.gen()),
        DiscreteSystem::FullShift { k } => {
            let w: Vec<u8> = (0..31).map(|_| rng.gen_range(0..*k)).collect();
            BasePoint::Seq(SymbolSeq::from_window(w))
        }
        _ => unimplemented!(),
    }
}

fn main() {
    let n_triples: usize =
        std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(10000);
    for (name, sys) in [
        ("rot", DiscreteSystem::CircleRotation { angle: 0.61803398875 }),
        ("shift", DiscreteSystem::FullShift { k: 2 }),
        ("skew", DiscreteSystem::SkewTorus),
        ("catmap", DiscreteSystem::CatMap),
    ] {
        let mt = MappingTorus::new(sys.clone());
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let mut worst = 0.0f64;
        let mut asym = 0.0f64;
        let t0 = std::time::Instant::now();
        for _ in 0..n_triples {
            let mut pt = |rng: &mut ChaCha8Rng| {
                FiberPoint::new(rand_base(&sys, rng), rng.gen_range(0.0..1.0))
            };
            let (p, q, r) = (pt(&mut rng), pt(&mut rng), pt(&mut rng));
            let dpq = mt.bar_metric(&p, &q).unwrap();
            let dqr = mt.bar_metric(&q, &r).unwrap();
            let dpr = mt.bar_metric(&p, &r).unwrap();
            asym = asym.max((dpq - mt.bar_metric(&q, &p).unwrap()).abs());
            worst = worst.min(dpq + dqr - dpr);
        }
        let dt = t0.elapsed().as_secs_f64();
        println!(
            "{name}: {n_triples} triples, slack {worst:.3e}, asym {asym:.1e}, {:.2} us/call",
            dt / (n_triples as f64 * 4.0) * 1e6
        );
    }
}
