use singsusp_core::symbolic::minimal_subshift_with_entropy;
use singsusp_core::*;

fn main() {
    let lam1 = minimal_subshift_with_entropy(0.15, 3, 0.05).unwrap();
    let lam2 = minimal_subshift_with_entropy(0.45, 3, 0.05).unwrap();
    let p = lam1.canonical_point();
    let sing: Vec<FiberPoint> = (0..4)
        .map(|i| FiberPoint::new(BasePoint::Seq(p.shifted(i * 3)), 0.5))
        .collect();
    let ss = SingularSuspension::new(
        MappingTorus::new(DiscreteSystem::FullShift { k: 2 }),
        Brake { singular_set: SingularSet::PointList(sing), profile: Profile::Power(1.0) },
    )
    .unwrap();
    let sys = DiscreteSystem::FullShift { k: 2 };
    let mu = MeasureSampler::on_subshift(lam2, 7);
    let pts = mu.sample_base(&sys, 40).unwrap();

    // how fast does each point cross fibers?
    let ts: Vec<f64> = (0..=12).map(|k| k as f64).collect();
    let mut crossings = Vec::new();
    for pt in pts.iter().take(10) {
        let orb = ss.psi_orbit(&FiberPoint::new(pt.clone(), 0.0), &ts).unwrap();
        // recover crossing count from base distance to shifted originals
        let mut n_cross = 0;
        for k in 1..=40 {
            if sys.distance(&orb[12].base, &sys.iterate(pt, k).unwrap()).unwrap() == 0.0 {
                n_cross = k;
                break;
            }
        }
        println!("crossings by t=12: {n_cross}  final height {:.3}", orb[12].height);
        crossings.push(n_cross);
    }

    // when do close pairs separate?
    let mut shown = 0;
    'pairs: for i in 0..pts.len() {
        for j in i + 1..pts.len() {
            let d = sys.distance(&pts[i], &pts[j]).unwrap();
            if d <= 0.25 && d > 0.0 {
                let oa = ss.psi_orbit(&FiberPoint::new(pts[i].clone(), 0.0), &ts).unwrap();
                let ob = ss.psi_orbit(&FiberPoint::new(pts[j].clone(), 0.0), &ts).unwrap();
                let row: Vec<String> = (0..=12)
                    .map(|k| format!("{:.3}", ss.torus.bar_metric(&oa[k], &ob[k]).unwrap()))
                    .collect();
                println!("pair d0={d:.4}: {}", row.join(" "));
                shown += 1;
                if shown >= 8 {
                    break 'pairs;
                }
            }
        }
    }
}
