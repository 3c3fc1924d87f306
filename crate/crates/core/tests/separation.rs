use marginlab::linalg;
use marginlab::oracle::{hull_distance, max_margin};
use marginlab::planted::random_unit_vector;
use marginlab::separation::*;
use marginlab::LabeledDataset;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn blob(rng: &mut ChaCha8Rng, center: &[f64], spread: f64, n: usize) -> Vec<Vec<f64>> {
    (0..n)
        .map(|_| {
            let u = random_unit_vector(center.len(), rng);
            let r = spread * rng.random::<f64>();
            center.iter().zip(&u).map(|(c, v)| c + r * v).collect()
        })
        .collect()
}

#[test]
fn dichotomy_agrees_with_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    let mut hyperplanes = 0;
    for _ in 0..100 {
        let d = rng.random_range(2..5);
        let gap = rng.random_range(0.0..3.0);
        let mut ck = vec![0.0; d];
        ck[0] = gap / 2.0;
        let cl: Vec<f64> = ck.iter().map(|v| -v).collect();
        let (nk, nl) = (rng.random_range(1..8), rng.random_range(1..8));
        let k = blob(&mut rng, &ck, 1.0, nk);
        let l = blob(&mut rng, &cl, 1.0, nl);
        let eps = rng.random_range(0.05..0.6);
        let out = sparse_separate(&k, &l, eps).unwrap();
        for c in verify_outcome(&out, &k, &l, eps) {
            assert!(c.pass, "{c:?}");
        }
        let frame = Frame::fit(&k, &l);
        let kf: Vec<Vec<f64>> = k.iter().map(|x| frame.to_frame(x)).collect();
        let lf: Vec<Vec<f64>> = l.iter().map(|x| frame.to_frame(x)).collect();
        let hd = hull_distance(&kf, &lf, 1e-10).unwrap();
        match &out {
            SeparationOutcome::Hyperplane(h) => {
                hyperplanes += 1;
                assert!(h.peak_norm_ratio <= 1.0 + 1e-12);
            }
            SeparationOutcome::Proximity(p) => {
                assert!(hd.distance < eps, "proximity reported at hull distance {}", hd.distance);
                assert!(p.peak_norm_ratio <= 1.0 + 1e-12);
            }
        }
        if hd.distance >= eps {
            assert!(out.is_hyperplane());
        }
    }
    assert!(hyperplanes > 10);
}

#[test]
fn separator_is_sparse_signed_sum() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let k = blob(&mut rng, &[2.0, 0.0, 0.0], 0.5, 30);
    let l = blob(&mut rng, &[-2.0, 0.0, 0.0], 0.5, 30);
    let SeparationOutcome::Hyperplane(h) = sparse_separate(&k, &l, 0.2).unwrap() else {
        panic!("well separated blobs must give a hyperplane");
    };
    let total: usize = h.contributors.iter().map(|c| c.multiplicity).sum();
    assert_eq!(total, h.sparsity);
    assert!(h.sparsity <= sparsity_bound(0.2));
    let hp = h.hyperplane();
    assert!(k.iter().all(|x| hp.score(x) > 0.0));
    assert!(l.iter().all(|x| hp.score(x) < 0.0));
}

#[test]
fn scaling_the_input_does_not_change_the_outcome_kind() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let k = blob(&mut rng, &[0.6, 0.0], 0.5, 10);
    let l = blob(&mut rng, &[-0.6, 0.0], 0.5, 10);
    let a = sparse_separate(&k, &l, 0.1).unwrap();
    let scale = |s: &[Vec<f64>]| s.iter().map(|x| linalg::scaled(x, 1024.0)).collect::<Vec<_>>();
    let b = sparse_separate(&scale(&k), &scale(&l), 0.1).unwrap();
    assert_eq!(a.is_hyperplane(), b.is_hyperplane());
}

#[test]
fn game_transcripts_obey_value_chain() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut terminated = 0;
    for trial in 0..60 {
        let d = rng.random_range(2..6);
        let n = rng.random_range(1..15);
        let bias = if trial % 2 == 0 { random_unit_vector(d, &mut rng) } else { vec![0.0; d] };
        let mut v: Vec<Vec<f64>> = (0..n)
            .map(|_| {
                let u = random_unit_vector(d, &mut rng);
                u.iter().zip(&bias).map(|(a, b)| a + 1.5 * b).collect()
            })
            .collect();
        let r = v.iter().map(|x| linalg::norm(x)).fold(0.0, f64::max);
        for x in &mut v {
            *x = linalg::scaled(x, 1.0 / r);
        }
        let g = game_strategies(&v, 20_000).unwrap();
        for (t, val) in g.values.iter().enumerate() {
            assert!(*val <= (3.0 / (t + 1) as f64).sqrt() + 1e-12);
        }
        for t in [1, g.steps() / 2, g.steps()] {
            if t >= 1 {
                assert!(g.strategy(t).len() <= t);
            }
        }
        if g.terminated {
            terminated += 1;
            let wt = g.hyperplane_strategy.clone().unwrap();
            let t = g.steps() as f64;
            let min_payoff = v.iter().map(|x| linalg::dot(x, &wt)).fold(f64::INFINITY, f64::min);
            assert!(min_payoff >= 1.0 / (3.0 * t).sqrt() - 1e-9);
            let ds = LabeledDataset::all_positive(v.clone()).unwrap();
            let cert = max_margin(&ds, 1e-10).unwrap();
            assert!(t >= 1.0 / (3.0 * cert.upper_bound.powi(2)) - 1.0);
            assert!(g.eps_star_game <= cert.upper_bound + 1e-9);
        }
    }
    assert!(terminated > 10);
}
