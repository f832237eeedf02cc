//! Acceptance suite: one test per criterion, each printing a PASS line with
//! the measured numbers (run with `-- --nocapture` to see them). Every
//! tolerance is pinned in the assertions.

mod common;

use std::time::Instant;

use common::*;
use rand::Rng;
use sddchol::classify::{sign_flip_reduction, SignFlip};
use sddchol::factor::{factor_laplacian, schur_edge_count, Elimination};
use sddchol::krylov::{pcg, solve_laplacian, PcgOptions};
use sddchol::ordering::{build_nd_tree, OrderingKind, OrderingSpec};
use sddchol::parallel::{par_factor_sddm, ParOptions};
use sddchol::problems::{poisson7, poisson_var, GridSpec};
use sddchol::sampling::{exact_clique, sample_clique, Star};
use sddchol::{solve_sdd, solve_sddm, Perm, RngStream, SolveOptions, SparseSym};

fn path_laplacian(n: usize) -> SparseSym {
    let mut t = Vec::new();
    for i in 0..n - 1 {
        t.push((i, i + 1, -1.0));
    }
    for i in 0..n {
        t.push((i, i, if i == 0 || i == n - 1 { 1.0 } else { 2.0 }));
    }
    SparseSym::from_coo(n, &t).unwrap()
}

#[test]
fn criterion_01_spanning_tree() {
    let started = Instant::now();
    let mut rng = seeded_rng(10);
    for n in [2usize, 5, 10, 25, 50] {
        for trial in 0..1000 {
            let neighbors: Vec<(usize, f64)> = (0..n).map(|k| (k * 2 + 1, 1.0 - rng.random::<f64>())).collect();
            let deg = neighbors.iter().map(|&(_, w)| w).sum();
            let star = Star { center: 0, neighbors: neighbors.clone(), deg };
            let mut stream = RngStream::new(trial);
            let edges = sample_clique(&star, &mut stream).unwrap();
            assert_eq!(edges.len(), n - 1, "n={n} trial={trial}: draw count");
            let ids: Vec<usize> = neighbors.iter().map(|&(id, _)| id).collect();
            assert!(edges_connect(&ids, &edges.edges), "n={n} trial={trial}: not spanning");
        }
    }
    let elapsed = started.elapsed().as_secs_f64();
    assert!(elapsed < 5.0, "runtime {elapsed:.2}s exceeds 5s");
    println!("acceptance 1 PASS: spanning tree on 5000 stars, {elapsed:.2}s");
}

#[test]
fn criterion_02_unbiasedness() {
    let started = Instant::now();
    let weights = [1.0, 1.0, 2.0, 3.0, 5.0, 8.0];
    let neighbors: Vec<(usize, f64)> = weights.iter().copied().enumerate().collect();
    let deg: f64 = weights.iter().sum();
    let star = Star { center: 99, neighbors, deg };
    let exact = exact_clique(&star).unwrap();

    let trials = 200_000u64;
    let mut sum = std::collections::HashMap::new();
    let mut sumsq = std::collections::HashMap::new();
    for seed in 0..trials {
        let mut stream = RngStream::new(seed);
        for (i, j, w) in sample_clique(&star, &mut stream).unwrap().edges {
            *sum.entry((i, j)).or_insert(0.0) += w;
            *sumsq.entry((i, j)).or_insert(0.0) += w * w;
        }
    }
    let nf = trials as f64;
    let mut worst = 0.0f64;
    for &(i, j, want) in &exact.edges {
        let s = sum.get(&(i, j)).copied().unwrap_or(0.0);
        let sq = sumsq.get(&(i, j)).copied().unwrap_or(0.0);
        let mean = s / nf;
        let var = (sq / nf - mean * mean).max(0.0);
        let se = (var / nf).sqrt();
        let diff = (mean - want).abs();
        assert!(
            diff <= 4.0 * se + 1e-9 * want,
            "edge ({i},{j}): mean {mean} vs {want}, 4se = {}",
            4.0 * se
        );
        if se > 0.0 {
            worst = worst.max(diff / se);
        }
    }
    let elapsed = started.elapsed().as_secs_f64();
    assert!(elapsed < 30.0, "runtime {elapsed:.2}s exceeds 30s");
    println!("acceptance 2 PASS: unbiased within 4 s.e. (worst {worst:.2} s.e.), {elapsed:.2}s");
}

#[test]
fn criterion_03_breakdown_free() {
    let mut rng = seeded_rng(30);
    for trial in 0..100 {
        let n = rng.random_range(2..=500usize);
        let extra = rng.random_range(0..2 * n);
        let l = random_connected_laplacian(&mut rng, n, extra);
        let maxdiag = l.diagonal().iter().cloned().fold(0.0f64, f64::max);
        // factor_laplacian fails on any nonpositive pivot before step n-1
        let f = factor_laplacian(&l, &Perm::identity(n), &mut RngStream::new(trial as u64))
            .unwrap_or_else(|e| panic!("trial {trial} (n={n}) broke down: {e}"));
        assert!(
            f.meta.final_diag.abs() <= 1e-8 * maxdiag,
            "trial {trial}: final diagonal {} vs maxdiag {maxdiag}",
            f.meta.final_diag
        );
    }
    println!("acceptance 3 PASS: 100 random connected graphs factor with positive pivots");
}

#[test]
fn criterion_04_edge_decrement() {
    let mut rng = seeded_rng(40);
    for trial in 0..20 {
        let n = rng.random_range(5..=120usize);
        let extra = rng.random_range(0..3 * n);
        let l = random_connected_laplacian(&mut rng, n, extra);
        let m = (l.nnz() - n) / 2;
        for seed in 0..3u64 {
            let mut elim = Elimination::new(&l, &Perm::identity(n)).unwrap();
            let mut stream = RngStream::new(1000 * trial as u64 + seed);
            for k in 1..n {
                elim.step(&mut stream).unwrap();
                assert_eq!(
                    schur_edge_count(elim.graph()),
                    m - k,
                    "trial {trial} seed {seed}: count after step {k}"
                );
                assert!(elim.graph().live_pairs() <= m - k);
            }
        }
    }
    println!("acceptance 4 PASS: edge count equals M-k at every step on 20 graphs x 3 seeds");
}

#[test]
fn criterion_05_path_exactness() {
    let n = 100;
    let l = path_laplacian(n);
    let f = factor_laplacian(&l, &Perm::identity(n), &mut RngStream::new(0)).unwrap();
    let m = ggt_dense(&f.g);
    let mut dense_l = vec![vec![0.0; n]; n];
    for (i, j, v) in l.entries() {
        dense_l[f.perm.new_of(i)][f.perm.new_of(j)] = v;
    }
    let mut diff = 0.0;
    let mut norm = 0.0;
    for i in 0..n {
        for j in 0..n {
            diff += (m[i][j] - dense_l[i][j]).powi(2);
            norm += dense_l[i][j].powi(2);
        }
    }
    let (diff, norm) = (diff.sqrt(), norm.sqrt());
    assert!(diff <= 1e-12 * norm, "|GG' - L|_F = {diff} vs 1e-12 |L|_F = {:e}", 1e-12 * norm);

    let mut b: Vec<f64> = (0..n).map(|i| ((i * 31 % 17) as f64) - 8.0).collect();
    let mean = b.iter().sum::<f64>() / n as f64;
    for v in b.iter_mut() {
        *v -= mean;
    }
    let r = pcg(&l, &b, &f, &PcgOptions { project_ones: true, ..Default::default() }).unwrap();
    assert!(r.converged);
    assert!(r.iterations <= 2, "PCG iterations {} > 2", r.iterations);
    println!(
        "acceptance 5 PASS: path(100) exact (|GG'-L|_F/|L|_F = {:.2e}), PCG in {} iteration(s)",
        diff / norm,
        r.iterations
    );
}

#[test]
fn criterion_06_poisson_desk_scale() {
    let started = Instant::now();
    let a = poisson7(64);
    assert_eq!(a.n(), 262_144);
    let mut rhs_rng = RngStream::substream(99, 7);
    let b: Vec<f64> = (0..a.n()).map(|_| rhs_rng.uniform()).collect();
    let opts = SolveOptions {
        tol: 1e-10,
        ordering: OrderingSpec::new(OrderingKind::MinDegree),
        seed: 0,
        ..Default::default()
    };
    let (_, stats) = solve_sddm(&a, &b, &opts).unwrap();
    let elapsed = started.elapsed().as_secs_f64();
    assert!(stats.converged, "res {}", stats.res);
    assert!(
        (2.5..=4.5).contains(&stats.fill_ratio),
        "fill/nnz {} outside [2.5, 4.5]",
        stats.fill_ratio
    );
    assert!(stats.iterations <= 70, "n_it {} > 70", stats.iterations);
    assert!(elapsed < 120.0, "runtime {elapsed:.1}s exceeds 2 minutes");
    println!(
        "acceptance 6 PASS: 64^3 mindeg fill/nnz {:.3}, n_it {}, res {:.2e}, {elapsed:.1}s",
        stats.fill_ratio, stats.iterations, stats.res
    );
}

#[test]
fn criterion_07_contrast_robustness() {
    let mut iters = Vec::new();
    for rho in [1.0, 100.0] {
        let a = if rho == 1.0 {
            poisson7(64)
        } else {
            poisson_var(&GridSpec::new(64, rho, 0))
        };
        let mut rhs_rng = RngStream::substream(99, 7);
        let b: Vec<f64> = (0..a.n()).map(|_| rhs_rng.uniform()).collect();
        let (_, stats) = solve_sddm(&a, &b, &SolveOptions::default()).unwrap();
        assert!(stats.converged, "rho={rho}: res {}", stats.res);
        iters.push(stats.iterations as f64);
    }
    let ratio = iters[1] / iters[0];
    assert!(ratio <= 2.5, "iteration growth {ratio:.2} exceeds 2.5x");
    println!(
        "acceptance 7 PASS: 64^3 n_it {} (rho=1) vs {} (rho=1e2), ratio {ratio:.2} <= 2.5",
        iters[0], iters[1]
    );
}

/// Random irreducible SDD matrix with signs chosen so the doubled graph stays
/// connected (a positive triangle forces an odd-signed cycle).
fn random_odd_cycle_sdd(rng: &mut rand_chacha::ChaCha8Rng, n: usize) -> SparseSym {
    let mut triples = Vec::new();
    let mut off = vec![0.0; n];
    let mut present = std::collections::HashSet::new();
    let add = |triples: &mut Vec<(usize, usize, f64)>, off: &mut Vec<f64>, present: &mut std::collections::HashSet<(usize, usize)>, i: usize, j: usize, w: f64| {
        let key = (i.min(j), i.max(j));
        if present.insert(key) {
            triples.push((key.0, key.1, w));
            off[i] += w.abs();
            off[j] += w.abs();
        }
    };
    // positive triangle: odd positive cycle
    add(&mut triples, &mut off, &mut present, 0, 1, 0.8);
    add(&mut triples, &mut off, &mut present, 1, 2, 0.8);
    add(&mut triples, &mut off, &mut present, 0, 2, 0.8);
    for i in 3..n {
        let j = rng.random_range(0..i);
        let w: f64 = 1.0 - rng.random::<f64>();
        let sign = if rng.random_bool(0.5) { 1.0 } else { -1.0 };
        add(&mut triples, &mut off, &mut present, i, j, sign * w);
    }
    for _ in 0..n {
        let i = rng.random_range(0..n);
        let j = rng.random_range(0..n);
        if i != j {
            let w: f64 = 1.0 - rng.random::<f64>();
            let sign = if rng.random_bool(0.5) { 1.0 } else { -1.0 };
            add(&mut triples, &mut off, &mut present, i, j, sign * w);
        }
    }
    for i in 0..n {
        let slack = if i == 0 || rng.random_bool(0.2) { 0.5 * (1.0 - rng.random::<f64>()) } else { 0.0 };
        triples.push((i, i, off[i] + slack));
    }
    SparseSym::from_coo(n, &triples).unwrap()
}

#[test]
fn criterion_08_sdd_doubling() {
    let mut rng = seeded_rng(80);
    for trial in 0..20 {
        let a = random_odd_cycle_sdd(&mut rng, 500);
        assert!(matches!(sign_flip_reduction(&a).unwrap(), SignFlip::NotReducible), "trial {trial}: doubled path must fire");
        let b: Vec<f64> = (0..500).map(|_| rng.random::<f64>() - 0.5).collect();
        let opts = SolveOptions { seed: trial as u64, ..Default::default() };
        let (x, stats) = solve_sdd(&a, &b, &opts).unwrap();
        assert!(stats.converged, "trial {trial}: doubled solve failed, res {}", stats.res);
        assert!(stats.res < 1e-10, "trial {trial}: recovered residual {}", stats.res);
        let ax = a.matvec(&x).unwrap();
        let r: Vec<f64> = ax.iter().zip(&b).map(|(p, q)| p - q).collect();
        assert!(norm2(&r) / norm2(&b) < 1e-10);
    }
    println!("acceptance 8 PASS: 20 doubled solves recover residual < 1e-10");
}

/// Bipartite-signable SDD matrix: entry signs follow -s_i s_j.
fn random_signable_sdd(rng: &mut rand_chacha::ChaCha8Rng, n: usize) -> SparseSym {
    let signs: Vec<f64> = (0..n)
        .map(|i| if i == 0 { 1.0 } else if i == 1 { -1.0 } else if rng.random_bool(0.5) { 1.0 } else { -1.0 })
        .collect();
    let mut triples = Vec::new();
    let mut off = vec![0.0; n];
    let mut present = std::collections::HashSet::new();
    let add = |triples: &mut Vec<(usize, usize, f64)>, off: &mut Vec<f64>, present: &mut std::collections::HashSet<(usize, usize)>, i: usize, j: usize, w: f64, s: f64| {
        let key = (i.min(j), i.max(j));
        if present.insert(key) {
            triples.push((key.0, key.1, -s * w));
            off[i] += w;
            off[j] += w;
        }
    };
    add(&mut triples, &mut off, &mut present, 0, 1, 0.9, signs[0] * signs[1]);
    for i in 1..n {
        let j = rng.random_range(0..i);
        let w = 1.0 - rng.random::<f64>();
        add(&mut triples, &mut off, &mut present, i, j, w, signs[i] * signs[j]);
    }
    for _ in 0..2 * n {
        let i = rng.random_range(0..n);
        let j = rng.random_range(0..n);
        if i != j {
            let w = 1.0 - rng.random::<f64>();
            add(&mut triples, &mut off, &mut present, i, j, w, signs[i] * signs[j]);
        }
    }
    for i in 0..n {
        let slack = if i == 0 || rng.random_bool(0.3) { 0.5 * (1.0 - rng.random::<f64>()) } else { 0.0 };
        triples.push((i, i, off[i] + slack));
    }
    SparseSym::from_coo(n, &triples).unwrap()
}

#[test]
fn criterion_09_reducible_shortcut() {
    let mut rng = seeded_rng(90);
    for trial in 0..20 {
        let a = random_signable_sdd(&mut rng, 500);
        assert!(
            matches!(sign_flip_reduction(&a).unwrap(), SignFlip::Reduced { .. }),
            "trial {trial}: shortcut must fire"
        );
        let b: Vec<f64> = (0..500).map(|_| rng.random::<f64>() - 0.5).collect();
        let opts = SolveOptions { seed: trial as u64, tol: 1e-12, ..Default::default() };
        let (x, stats) = solve_sdd(&a, &b, &opts).unwrap();
        assert!(stats.converged, "trial {trial}: res {}", stats.res);
        let oracle = dense_solve(&a, &b);
        let diff: Vec<f64> = x.iter().zip(&oracle).map(|(p, q)| p - q).collect();
        let rel = norm2(&diff) / norm2(&oracle);
        assert!(rel <= 1e-8, "trial {trial}: relative error vs direct solve {rel}");
    }
    println!("acceptance 9 PASS: 20 sign-flip shortcut solves match the dense oracle to 1e-8");
}

#[test]
fn criterion_10_parallel_consistency() {
    let a = poisson7(32);
    let tree = build_nd_tree(&a, 2).unwrap();
    let mut rhs_rng = RngStream::substream(99, 7);
    let b: Vec<f64> = (0..a.n()).map(|_| rhs_rng.uniform()).collect();

    let mut fills = Vec::new();
    let mut iters = Vec::new();
    for workers in [1usize, 2, 4] {
        let opts = ParOptions { workers, pin_cores: false };
        let f1 = par_factor_sddm(&a, &tree, 11, &opts).unwrap();
        let f2 = par_factor_sddm(&a, &tree, 11, &opts).unwrap();
        assert_eq!(f1.g, f2.g, "workers={workers}: repeated runs must be byte-identical");
        assert!(
            f1.g.values().iter().zip(f2.g.values()).all(|(x, y)| x.to_bits() == y.to_bits()),
            "workers={workers}: value bits differ"
        );
        assert_eq!(f1.ext_row, f2.ext_row);

        let r = pcg(&a, &b, &f1, &PcgOptions::default()).unwrap();
        assert!(r.converged);
        fills.push(f1.fill_nnz() as f64 / a.nnz() as f64);
        iters.push(r.iterations as f64);
    }
    let it_spread = (iters.iter().cloned().fold(0.0f64, f64::max)
        - iters.iter().cloned().fold(f64::INFINITY, f64::min))
        / iters.iter().cloned().fold(f64::INFINITY, f64::min);
    let fill_spread = (fills.iter().cloned().fold(0.0f64, f64::max)
        - fills.iter().cloned().fold(f64::INFINITY, f64::min))
        / fills.iter().cloned().fold(f64::INFINITY, f64::min);
    assert!(it_spread <= 0.20, "n_it spread {it_spread:.3} > 20%");
    assert!(fill_spread <= 0.05, "fill spread {fill_spread:.3} > 5%");
    println!(
        "acceptance 10 PASS: byte-identical repeats; n_it {:?} (spread {:.1}%), fill {:.4?} (spread {:.1}%)",
        iters,
        100.0 * it_spread,
        fills,
        100.0 * fill_spread
    );
}

#[test]
fn criterion_11_martingale_mean() {
    let l = SparseSym::from_coo(
        5,
        &[
            (0, 1, -1.0),
            (0, 2, -2.0),
            (1, 2, -1.0),
            (1, 3, -0.5),
            (2, 4, -1.5),
            (3, 4, -1.0),
            (0, 0, 3.0),
            (1, 1, 2.5),
            (2, 2, 4.5),
            (3, 3, 1.5),
            (4, 4, 2.5),
        ],
    )
    .unwrap();
    let trials = 100_000u64;
    let mut sum = vec![vec![0.0f64; 5]; 5];
    let mut sumsq = vec![vec![0.0f64; 5]; 5];
    for seed in 0..trials {
        let f = factor_laplacian(&l, &Perm::identity(5), &mut RngStream::new(seed)).unwrap();
        let m = ggt_dense(&f.g);
        for i in 0..5 {
            for j in 0..5 {
                sum[i][j] += m[i][j];
                sumsq[i][j] += m[i][j] * m[i][j];
            }
        }
    }
    let mut dense_l = vec![vec![0.0; 5]; 5];
    for (i, j, v) in l.entries() {
        dense_l[i][j] = v;
    }
    let nf = trials as f64;
    let mut worst = 0.0f64;
    for i in 0..5 {
        for j in 0..5 {
            let mean = sum[i][j] / nf;
            let var = (sumsq[i][j] / nf - mean * mean).max(0.0);
            let se = (var / nf).sqrt();
            let diff = (mean - dense_l[i][j]).abs();
            assert!(
                diff <= 4.0 * se + 1e-9 * dense_l[i][j].abs().max(1.0),
                "entry ({i},{j}): mean {mean} vs {}, 4se = {}",
                dense_l[i][j],
                4.0 * se
            );
            if se > 0.0 {
                worst = worst.max(diff / se);
            }
        }
    }
    println!("acceptance 11 PASS: mean of GG' over 1e5 seeds matches L within 4 s.e. (worst {worst:.2})");
}

#[test]
fn laplacian_projection_pairs_with_parallel_factor() {
    // the end-to-end Laplacian route driven through build_nd_tree + solve
    let l = {
        let a = poisson7(8);
        sddchol::classify::extend_sddm(&a).unwrap()
    };
    let mut b: Vec<f64> = (0..l.n()).map(|i| ((i % 13) as f64) - 6.0).collect();
    let mean = b.iter().sum::<f64>() / l.n() as f64;
    for v in b.iter_mut() {
        *v -= mean;
    }
    let opts = SolveOptions {
        ordering: OrderingSpec::nd(2),
        workers: 2,
        ..Default::default()
    };
    let (x, stats) = solve_laplacian(&l, &b, &opts).unwrap();
    assert!(stats.converged, "res {}", stats.res);
    let ones: f64 = x.iter().sum();
    assert!(ones.abs() <= 1e-10 * x.iter().map(|v| v.abs()).sum::<f64>().max(1e-300));
}
