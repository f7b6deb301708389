use rand::Rng;
use rand_distr::{Distribution, Normal};
use veriscope_core::cluster::{choose_k, kmeans, kmeanspp_init, lloyd, KMeansConfig};
use veriscope_core::seed;

fn gaussian_blobs(centers: &[Vec<f64>], per: usize, sd: f64, seed: u64) -> Vec<Vec<f64>> {
    let mut rng = seed::rng(seed);
    let noise = Normal::new(0.0, sd).unwrap();
    centers
        .iter()
        .flat_map(|c| (0..per).map(|_| c.iter().map(|v| v + noise.sample(&mut rng)).collect::<Vec<f64>>()).collect::<Vec<_>>())
        .collect()
}

/// Eight blob centres on the coordinate axes of a 10-dimensional space.
fn eight_blob_centres() -> Vec<Vec<f64>> {
    (0..8)
        .map(|i| {
            let mut c = vec![0.0; 10];
            c[i] = 10.0;
            c
        })
        .collect()
}

#[test]
fn lloyd_inertia_never_increases() {
    for inst in 0..100u64 {
        let mut rng = seed::rng(inst);
        let n = rng.gen_range(20..80);
        let d = rng.gen_range(1..5);
        let pts: Vec<Vec<f64>> = (0..n).map(|_| (0..d).map(|_| rng.gen_range(-5.0..5.0)).collect()).collect();
        let k = rng.gen_range(2..8);
        let init = kmeanspp_init(&pts, k, inst).unwrap();
        let r = lloyd(&pts, init, 0.0, 300);
        for w in r.inertia_trace.windows(2) {
            assert!(w[1] <= w[0] * (1.0 + 1e-12), "instance {inst}: {:?}", r.inertia_trace);
        }
        assert_eq!(r.populations.iter().sum::<usize>(), n);
    }
}

#[test]
fn knee_recommends_eight_blobs() {
    let ks: Vec<usize> = (2..=12).collect();
    let mut hits = 0;
    for s in 0..10 {
        let pts = gaussian_blobs(&eight_blob_centres(), 60, 1.0, 100 + s);
        let rep = choose_k(&pts, &ks, 10, s).unwrap();
        if rep.recommended == 8 {
            hits += 1;
        }
        assert!(rep.clear_knee, "{rep:?}");
    }
    assert!(hits >= 9, "{hits}/10");
}

#[test]
fn single_blob_has_no_clear_knee() {
    let pts = gaussian_blobs(&[vec![0.0; 4]], 400, 1.0, 9);
    let ks: Vec<usize> = (2..=12).collect();
    let rep = choose_k(&pts, &ks, 10, 0).unwrap();
    assert!(!rep.clear_knee, "{rep:?}");
}

#[test]
fn best_of_seeds_inertia_is_nested() {
    let pts = gaussian_blobs(&eight_blob_centres(), 30, 2.0, 4);
    let mut last = f64::INFINITY;
    for k in 1..=10 {
        let r = kmeans(&pts, &KMeansConfig { k, ..Default::default() }, 3).unwrap();
        assert!(r.inertia <= last * (1.0 + 1e-9), "k={k}");
        last = r.inertia;
    }
}
