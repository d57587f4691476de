use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use singsusp_core::*;

fn chain_dist(sys: &DiscreteSystem, p: &FiberPoint, q: &FiberPoint, span: i64) -> f64 {
    let mut nodes: Vec<(BasePoint, f64)> = Vec::new();
    for base in [&p.base, &q.base] {
        let orbit = sys.orbit_segment(base, -span, span).unwrap();
        for z in &orbit {
            for h in [0.0, p.height, q.height, 1.0] {
                nodes.push((z.clone(), h));
            }
        }
    }
    let nh = 4usize;
    let per = (2 * span + 1) as usize * nh;
    let src = (span as usize) * nh + 1;
    let dst = per + (span as usize) * nh + 2;
    let n = nodes.len();
    let steps: Vec<BasePoint> = nodes.iter().map(|(z, _)| sys.step(z).unwrap()).collect();
    let d = |a: &BasePoint, b: &BasePoint| sys.distance(a, b).unwrap();
    let mut dist = vec![f64::INFINITY; n];
    let mut done = vec![false; n];
    dist[src] = 0.0;
    for _ in 0..n {
        let u = (0..n)
            .filter(|&i| !done[i])
            .min_by(|&a, &b| dist[a].partial_cmp(&dist[b]).unwrap())
            .unwrap();
        if dist[u].is_infinite() {
            break;
        }
        done[u] = true;
        for v in 0..n {
            if done[v] {
                continue;
            }
            let (s, t) = (nodes[u].1, nodes[v].1);
            let d0 = d(&nodes[u].0, &nodes[v].0);
            let d1 = d(&steps[u], &steps[v]);
            let mut w = [0.0f64, s, t, 1.0]
                .into_iter()
                .map(|h| (s - h).abs() + (t - h).abs() + (1.0 - h) * d0 + h * d1)
                .fold(f64::INFINITY, f64::min);
            if s == 1.0 && t == 0.0 && d(&nodes[v].0, &steps[u]) == 0.0 {
                w = 0.0;
            }
            if s == 0.0 && t == 1.0 && d(&nodes[u].0, &steps[v]) == 0.0 {
                w = 0.0;
            }
            if dist[u] + w < dist[v] {
                dist[v] = dist[u] + w;
            }
        }
    }
    dist[dst]
}

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
    let sys_name = std::env::args().nth(1).unwrap_or_else(|| "catmap".into());
    let n_triples: usize =
        std::env::args().nth(2).and_then(|s| s.parse().ok()).unwrap_or(2000);
    let sys = match sys_name.as_str() {
        "catmap" => DiscreteSystem::CatMap,
        "skew" => DiscreteSystem::SkewTorus,
        "rot" => DiscreteSystem::CircleRotation { angle: 0.61803398875 },
        "shift" => DiscreteSystem::FullShift { k: 2 },
        _ => panic!("unknown system"),
    };
    let mt = MappingTorus::new(sys.clone());
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut worst = [0.0f64; 3]; // slack for span 1,2,4
    let mut worst_pair_gap = [0.0f64; 2]; // |span1-span4|, |span2-span4|
    let mut closed_gap = 0.0f64;
    let t0 = std::time::Instant::now();
    for _ in 0..n_triples {
        let mut pt = |rng: &mut ChaCha8Rng| {
            FiberPoint::new(rand_base(&sys, rng), rng.gen_range(0.0..1.0))
        };
        let (p, q, r) = (pt(&mut rng), pt(&mut rng), pt(&mut rng));
        for (si, span) in [1i64, 2, 4].into_iter().enumerate() {
            let dpq = chain_dist(&sys, &p, &q, span);
            let dqr = chain_dist(&sys, &q, &r, span);
            let dpr = chain_dist(&sys, &p, &r, span);
            worst[si] = worst[si].min(dpq + dqr - dpr);
            if span == 4 {
                worst_pair_gap[0] =
                    worst_pair_gap[0].max((chain_dist(&sys, &p, &r, 1) - dpr).abs());
                worst_pair_gap[1] =
                    worst_pair_gap[1].max((chain_dist(&sys, &p, &r, 2) - dpr).abs());
                closed_gap = closed_gap.max((mt.bar_metric(&p, &r).unwrap() - dpr).abs());
            }
        }
    }
    println!(
        "{sys_name} {n_triples} triples: slack span1 {:.3e} span2 {:.3e} span4 {:.3e} | pair gap 1v4 {:.3e} 2v4 {:.3e} | closed-vs-4 {:.4} | {:.1}s",
        worst[0], worst[1], worst[2], worst_pair_gap[0], worst_pair_gap[1], closed_gap,
        t0.elapsed().as_secs_f64()
    );
}
