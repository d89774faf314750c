mod common;

use nalgebra::DMatrix;
use rand::Rng;
use sampled_eigen::experiments::{
    pagerank, power_law_graph, read_edge_list, spearman_rho, speedup_harness, sweep_alignment,
    sweep_pagerank, sweep_samples, synth_symmetric, write_edge_list_path, GoogleMatrix,
    PagerankSweepConfig, PowerLawSpec, SweepConfig, SyntheticSpec, WebGraph,
};
use sampled_eigen::incoherence::fit_alpha;
use sampled_eigen::matrix::{solve, DenseMatrix};
use sampled_eigen::subsample::median;

fn small_graph(n: usize, seed: u64) -> WebGraph {
    let mut rng = common::rng(seed);
    let mut edges = Vec::new();
    for i in 0..n {
        // Node n-1 stays dangling.
        if i + 1 == n {
            continue;
        }
        for j in 0..n {
            if i != j && rng.random_bool(0.4) {
                edges.push((i, j));
            }
        }
        edges.push((i, (i + 1) % n));
    }
    WebGraph::from_edges(n, edges).unwrap()
}

#[test]
fn pagerank_matches_direct_solve() {
    let c = 0.85;
    let g = small_graph(5, 3);
    assert!(g.dangling()[4]);
    // With c = 1 the dense matrix is B, dangling rows already uniform.
    let b = GoogleMatrix::new(&g, 1.0).unwrap().to_dense();
    let n = 5;
    let a = DenseMatrix::from_fn(n, n, |i, j| (i == j) as u8 as f64 - c * b.get(j, i));
    let x = solve(&a, &vec![(1.0 - c) / n as f64; n]).unwrap();
    let got = pagerank(&GoogleMatrix::new(&g, c).unwrap(), 1e-14, 100_000).unwrap();
    for (a, b) in got.iter().zip(&x) {
        assert!((a - b).abs() <= 1e-8, "{a} vs {b}");
    }
    assert!((x.iter().sum::<f64>() - 1.0).abs() <= 1e-12);
}

#[test]
fn google_rows_and_second_eigenvalue() {
    for (n, seed) in [(5, 1), (12, 2), (30, 3)] {
        let g = small_graph(n, seed);
        for c in [0.5, 0.85, 0.95] {
            let p = GoogleMatrix::new(&g, c).unwrap().to_dense();
            for i in 0..n {
                assert!((p.row(i).iter().sum::<f64>() - 1.0).abs() <= 1e-12);
            }
            let mut moduli: Vec<f64> = DMatrix::from_row_slice(n, n, p.as_slice())
                .complex_eigenvalues()
                .iter()
                .map(|z| z.norm())
                .collect();
            moduli.sort_by(|a, b| b.total_cmp(a));
            assert!((moduli[0] - 1.0).abs() <= 1e-9);
            assert!(moduli[1] <= c + 1e-8, "n {n} c {c}: {}", moduli[1]);
        }
    }
}

fn brute_ranks(x: &[f64]) -> Vec<f64> {
    x.iter()
        .map(|&v| {
            let below = x.iter().filter(|&&w| w < v).count() as f64;
            let equal = x.iter().filter(|&&w| w == v).count() as f64;
            below + (equal + 1.0) / 2.0
        })
        .collect()
}

fn brute_pearson(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len() as f64;
    let ma = a.iter().sum::<f64>() / n;
    let mb = b.iter().sum::<f64>() / n;
    let mut num = 0.0;
    let mut da = 0.0;
    let mut db = 0.0;
    for i in 0..a.len() {
        num += (a[i] - ma) * (b[i] - mb);
        da += (a[i] - ma).powi(2);
        db += (b[i] - mb).powi(2);
    }
    num / (da * db).sqrt()
}

#[test]
fn spearman_ties_match_brute_force() {
    let x = [3.0, 1.0, 4.0, 1.0, 5.0, 9.0];
    let y = [2.0, 7.0, 1.0, 8.0, 2.0, 8.0];
    let oracle = brute_pearson(&brute_ranks(&x), &brute_ranks(&y));
    assert!((spearman_rho(&x, &y).unwrap() - oracle).abs() <= 1e-12);
    assert_eq!(spearman_rho(&x, &x).unwrap(), 1.0);
    let rev: Vec<f64> = x.iter().map(|v| -v).collect();
    assert!((spearman_rho(&x, &rev).unwrap() + 1.0).abs() <= 1e-12);
}

#[test]
fn edge_list_round_trip() {
    let mut rng = common::rng(77);
    let edges: Vec<(usize, usize)> = (0..100)
        .map(|_| (rng.random_range(0..40), rng.random_range(0..40)))
        .collect();
    let g = WebGraph::from_edges(45, edges).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("g.txt");
    write_edge_list_path(&path, &g).unwrap();
    let back = sampled_eigen::experiments::load_edge_list(&path).unwrap();
    assert_eq!(back, g);
    assert_eq!(back.n(), 45);

    let one_based = read_edge_list("# base 1\n1 2\n3 1\n".as_bytes()).unwrap();
    assert_eq!(one_based.n(), 3);
    assert_eq!(one_based.edges().collect::<Vec<_>>(), vec![(0, 1), (2, 0)]);
}

#[test]
fn synthetic_supports_and_gap() {
    let spec = SyntheticSpec {
        support_sizes: Some(vec![16, 64, 256]),
        ..SyntheticSpec::dense(256, vec![1.0, 0.6, 0.2], 5)
    };
    let (_, model) = synth_symmetric(&spec).unwrap();
    for (a, size) in fit_alpha(&model).iter().zip([16.0f64, 64.0, 256.0]) {
        assert!((a - size.ln() / 256f64.ln()).abs() <= 1e-12);
    }

    let gap = SyntheticSpec {
        gap_ratio: Some(0.75),
        ..SyntheticSpec::dense(50, vec![1.0, 0.5, 0.25], 6)
    };
    let (_, model) = synth_symmetric(&gap).unwrap();
    assert_eq!(model.eigenvalue(0), 1.0);
    assert!((model.eigenvalue(1) - 0.75).abs() <= 1e-15);
    assert!((model.eigenvalue(2) / model.eigenvalue(1) - 0.5).abs() <= 1e-12);
}

#[test]
fn alignment_sweep_end_points() {
    let (m, model) = synth_symmetric(&SyntheticSpec::dense(60, vec![1.0, 0.5], 2)).unwrap();
    let cfg = SweepConfig {
        pert: true,
        ..SweepConfig::new(vec![1.0], 4, 11)
    };
    let row = sweep_alignment(&m, &model, &cfg).unwrap().remove(0);
    assert!(row.alignment >= 1.0 - 1e-10);
    assert!(row.median_single >= 1.0 - 1e-10);
    assert_eq!(row.pert_fraction, Some(1.0));
}

#[test]
fn alignment_grows_with_p() {
    let (m, model) = synth_symmetric(&SyntheticSpec::dense(80, vec![1.0, 0.5, 0.25], 3)).unwrap();
    let grid = vec![0.1, 0.2, 0.4, 0.8];
    let reps = 20;
    let mut ok = 0;
    for r in 0..reps {
        let rows = sweep_alignment(&m, &model, &SweepConfig::new(grid.clone(), 20, 500 + r)).unwrap();
        if rows.windows(2).all(|w| w[1].median_single >= w[0].median_single) {
            ok += 1;
        }
    }
    assert!(ok as f64 >= 0.95 * reps as f64, "{ok}/{reps}");
}

#[test]
fn sample_count_sweep_at_low_rate() {
    let (m, model) = synth_symmetric(&SyntheticSpec::dense(1000, vec![1.0], 4)).unwrap();
    let counts = [1, 4, 16, 64];
    let reps = 9;
    let mut per_count = vec![Vec::new(); counts.len()];
    for r in 0..reps {
        let rows = sweep_samples(&m, &model, 0.01, &counts, &SweepConfig::new(vec![], 1, 900 + r)).unwrap();
        for (bucket, row) in per_count.iter_mut().zip(&rows) {
            bucket.push(row.alignment);
        }
    }
    let medians: Vec<f64> = per_count.iter().map(|v| median(v)).collect();
    assert!(medians.windows(2).all(|w| w[1] >= w[0]), "{medians:?}");
}

#[test]
fn pagerank_sweep_rows() {
    let g = power_law_graph(&PowerLawSpec {
        n: 200,
        out_degree: 4,
        dangling_fraction: 0.1,
        seed: 12,
    })
    .unwrap();
    let cfg = PagerankSweepConfig {
        pert: true,
        ..PagerankSweepConfig::new(vec![0.3, 1.0], 20, 4)
    };
    let report = sweep_pagerank(&g, &cfg).unwrap();
    let (low, one) = (&report.rows[0], &report.rows[1]);
    assert_eq!(one.rho, 1.0);
    assert_eq!(one.pert_fraction, Some(1.0));
    assert_eq!(low.pert_fraction, Some(0.0));
    assert!(low.rho > 0.8, "rho {}", low.rho);
    assert!(low.rho >= low.median_single_rho);
}

#[test]
fn speedup_rows() {
    let (m, _) = synth_symmetric(&SyntheticSpec::dense(600, vec![1.0, 0.5], 1)).unwrap();
    let reps = 5;
    let rows = speedup_harness(&m, &[1.0, 0.2, 0.05], reps, 3).unwrap();
    assert!(rows[0].ratio >= 1.0, "ratio at p = 1: {}", rows[0].ratio);
    assert_eq!(rows[0].nnz_fraction, 1.0);
    let cells = (600 * 600) as f64;
    for row in &rows[1..] {
        // nnz = kept diagonal + 2 × kept strict upper.
        let var = (600.0 + 2.0 * 600.0 * 599.0) * row.p * (1.0 - row.p);
        let sd = (var / reps as f64).sqrt() / cells;
        assert!((row.nnz_fraction - row.p).abs() <= 4.0 * sd, "{row:?}");
    }
    assert!(speedup_harness(&m, &[0.5], 4, 0).is_err());
}
