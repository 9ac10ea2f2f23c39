use isoperm::estimators::{mirsky_partition_estimate, perm_projection_lse};
use isoperm::harness::{adaptivity_ratio, monte_carlo_risk, rate_fit, ExperimentConfig, Method, TruthFamily};
use isoperm::iso::{block_average, block_isotonic_project, BoxBound};
use isoperm::oracle::random_partition;
use isoperm::order::{faithful_permutation, OrderedPartition, Thresholds};
use isoperm::rng::stream;
use isoperm::synth::{base_indifference_tensor, make_instance, make_seeded_instance, IndifferenceSpec, Instance, PermSource};
use isoperm::tensor::{linf_distance, LatticeShape, PermutationTuple, Tensor};
use rand::Rng;

fn random_sizes<R: Rng>(n1: usize, rng: &mut R) -> Vec<usize> {
    let mut sizes = Vec::new();
    let mut left = n1;
    while left > 0 {
        let k = rng.random_range(1..=left);
        sizes.push(k);
        left -= k;
    }
    sizes
}

#[test]
fn noiseless_block_structure_is_recovered() {
    let mut rng = stream(40, 0);
    for _ in 0..40 {
        let d = rng.random_range(2..=3);
        let n1 = rng.random_range(3..=8);
        let shape = LatticeShape::new(d, n1).unwrap();
        let sizes: Vec<Vec<usize>> = (0..d).map(|_| random_sizes(n1, &mut rng)).collect();
        let spec = IndifferenceSpec::new(shape, sizes).unwrap();
        let th = Thresholds::for_lattice(d, shape.n());
        // Adjacent blocks differ by `scale` per entry and by at least
        // `scale * n / n1` in score.
        let scale = 2.0 * th.max.max(th.sum * n1 as f64 / shape.n() as f64);
        let truth = base_indifference_tensor(&spec, None).unwrap().map(|v| v * scale).unwrap();
        let inst = make_instance(&truth, PermSource::Random, 0.0, &mut rng).unwrap();
        let est = mirsky_partition_estimate(&inst.y, BoxBound::NONE).unwrap();
        let parts = est.partitions.unwrap();
        for j in 0..d {
            assert_eq!(parts[j].card(), spec.block_counts()[j], "axis {j} of {:?}", spec.sizes());
            assert!(parts[j].max_block() >= spec.k_max(j));
        }
        assert!(linf_distance(&est.theta_hat, &inst.theta_star).unwrap() < 1e-6);
    }
}

#[test]
fn block_projection_ignores_tie_order_within_blocks() {
    let mut rng = stream(41, 0);
    for trial in 0..60 {
        let (d, n1) = if trial % 2 == 0 { (2, 5) } else { (3, 3) };
        let shape = LatticeShape::new(d, n1).unwrap();
        let t = Tensor::new(shape, (0..shape.n()).map(|_| rng.random_range(-1.0..1.0)).collect()).unwrap();
        let parts: Vec<OrderedPartition> = (0..d).map(|_| random_partition(n1, &mut rng)).collect();
        // Faithful permutations with within-block ties broken by descending index.
        let reversed = PermutationTuple::new(
            parts
                .iter()
                .map(|b| {
                    let mut order: Vec<usize> = (0..n1).collect();
                    order.sort_by_key(|&i| (b.rank()[i], std::cmp::Reverse(i)));
                    let mut pos = vec![0; n1];
                    order.iter().enumerate().for_each(|(p, &i)| pos[i] = p);
                    pos
                })
                .collect(),
        )
        .unwrap();
        let canonical = PermutationTuple::new(parts.iter().map(faithful_permutation).collect()).unwrap();
        let avg = block_average(&t, &parts).unwrap();
        let a = perm_projection_lse(&avg, &canonical, BoxBound::NONE).unwrap();
        let b = perm_projection_lse(&avg, &reversed, BoxBound::NONE).unwrap();
        let direct = block_isotonic_project(&t, &parts, BoxBound::NONE).unwrap();
        assert!(linf_distance(&a, &b).unwrap() <= 1e-8);
        assert!(linf_distance(&a, &direct).unwrap() <= 1e-8);
    }
}

#[test]
fn mp_adaptivity_ratio_on_constant_truth_has_no_trend() {
    let mut cfg = ExperimentConfig::new(Method::Mp, vec![(2, 8), (2, 16), (2, 32)], TruthFamily::Constant { value: 0.0 });
    cfg.reps = 200;
    cfg.seed = 42;
    let report = monte_carlo_risk(&cfg).unwrap();
    let structure: Vec<(usize, usize)> = cfg
        .grid
        .iter()
        .map(|&(d, n1)| cfg.truth.structure(LatticeShape::new(d, n1).unwrap()).unwrap())
        .collect();
    let ratios = adaptivity_ratio(&report, &structure).unwrap();
    let pts: Vec<(f64, f64)> = report.points.iter().zip(&ratios.per_point).map(|(p, &r)| (p.n as f64, r)).collect();
    let slope = rate_fit(&pts).unwrap().slope;
    assert!(slope.abs() <= 0.3, "ratios {:?}, slope {slope}", ratios.per_point);
}

#[test]
fn instance_file_round_trip() {
    let shape = LatticeShape::new(3, 3).unwrap();
    let spec = IndifferenceSpec::uniform(shape, &[1, 2]).unwrap();
    let truth = base_indifference_tensor(&spec, None).unwrap();
    let mut inst = make_seeded_instance(&truth, PermSource::Random, 0.7, 99).unwrap();
    inst.spec = Some(spec);
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("inst.txt");
    std::fs::write(&path, inst.to_text()).unwrap();
    let back = Instance::from_text(&std::fs::read_to_string(&path).unwrap()).unwrap();
    assert_eq!(back, inst);
    assert_eq!(make_seeded_instance(&truth, PermSource::Random, 0.7, 99).unwrap().y, inst.y);
}
