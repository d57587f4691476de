use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use singsusp_core::*;

fn main() {
    let mt = MappingTorus::new(DiscreteSystem::CatMap);
    let sys = mt.system.clone();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut rand_pt = |rng: &mut ChaCha8Rng| {
        FiberPoint::new(BasePoint::torus(rng.gen(), rng.gen()), rng.gen_range(0.0..1.0))
    };
    // burn the triple stream to mimic the acceptance test, then pairs
    for _ in 0..30_000 {
        rand_pt(&mut rng);
    }
    let hop = |z: &BasePoint, s: f64, w: &BasePoint, t: f64| -> f64 {
        let d0 = sys.distance(z, w).unwrap();
        let d1 = sys.distance(&sys.step(z).unwrap(), &sys.step(w).unwrap()).unwrap();
        [0.0f64, s, t, 1.0]
            .into_iter()
            .map(|h| (s - h).abs() + (t - h).abs() + (1.0 - h) * d0 + h * d1)
            .fold(f64::INFINITY, f64::min)
    };
    let mut worst = (0.0f64, None);
    for _ in 0..100 {
        let p = rand_pt(&mut rng);
        let q = rand_pt(&mut rng);
        let mut nodes: Vec<(BasePoint, f64, i64, usize)> = Vec::new();
        for (bi, base) in [&p.base, &q.base].into_iter().enumerate() {
            let orbit = sys.orbit_segment(base, -4, 5).unwrap();
            for (ji, z) in orbit[..9].iter().enumerate() {
                for h in [0.0, p.height, q.height, 1.0] {
                    nodes.push((z.clone(), h, ji as i64 - 4, bi));
                }
            }
        }
        let same = |a: &BasePoint, b: &BasePoint| sys.distance(a, b).unwrap() == 0.0;
        let src = 4 * 4 + 1;
        let dst = 36 + 4 * 4 + 2;
        let n = nodes.len();
        let mut dist = vec![f64::INFINITY; n];
        let mut prev = vec![usize::MAX; n];
        let mut done = vec![false; n];
        dist[src] = 0.0;
        for _ in 0..n {
            let u = (0..n)
                .filter(|&i| !done[i])
                .min_by(|&a, &b| dist[a].partial_cmp(&dist[b]).unwrap())
                .unwrap();
            done[u] = true;
            let fz = sys.step(&nodes[u].0).unwrap();
            for v in 0..n {
                if done[v] {
                    continue;
                }
                let mut w = hop(&nodes[u].0, nodes[u].1, &nodes[v].0, nodes[v].1);
                if nodes[u].1 == 1.0 && nodes[v].1 == 0.0 && same(&nodes[v].0, &fz) {
                    w = 0.0;
                }
                if nodes[u].1 == 0.0
                    && nodes[v].1 == 1.0
                    && same(&nodes[u].0, &sys.step(&nodes[v].0).unwrap())
                {
                    w = 0.0;
                }
                if dist[u] + w < dist[v] {
                    dist[v] = dist[u] + w;
                    prev[v] = u;
                }
            }
        }
        let bar = mt.bar_metric(&p, &q).unwrap();
        let gap = (dist[dst] - bar).abs();
        if gap > worst.0 {
            worst = (gap, Some((p.clone(), q.clone(), bar, dist[dst], {
                let mut path = vec![dst];
                let mut c = dst;
                while prev[c] != usize::MAX {
                    c = prev[c];
                    path.push(c);
                }
                path.reverse();
                path.iter().map(|&i| (nodes[i].2, nodes[i].3, nodes[i].1)).collect::<Vec<_>>()
            })));
        }
    }
    let (gap, Some((p, q, bar, oracle, path))) = worst else { return };
    println!("worst gap {gap:.5}: bar {bar:.5} oracle {oracle:.5}");
    println!("p height {:.4}, q height {:.4}", p.height, q.height);
    println!("path as (fiber offset j, endpoint 0=p/1=q, height):");
    for step in path {
        println!("  {:?}", step);
    }
}
