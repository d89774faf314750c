//! One test per acceptance criterion. Each prints a single PASS/FAIL line
//! with the measured quantities, then asserts the same verdict.

mod common;

use common::{dist, jacobi_eigen, jacobi_spectral_norm, loglog_slope, mean_var, rows};
use sampled_eigen::blowup::{
    blowup_experiment, bollobas_lower_bound, summarize, threshold_k, BlowupConfig, RateSchedule,
    ThresholdVariant,
};
use sampled_eigen::estimator::{
    average_vectors, draw_eigenvectors, e_tail_bound, entrywise_max, orient, orient_to, var_ueu,
    variance_bound, xi, AverageGauge, AveragingPlan,
};
use sampled_eigen::experiments::{
    pagerank, power_law_graph, sweep_pagerank, synth_symmetric, GoogleMatrix, PagerankSweepConfig,
    PowerLawSpec, SyntheticSpec, WebGraph,
};
use sampled_eigen::incoherence::{mu, SpectralModel};
use sampled_eigen::matrix::{
    dense_spectral_norm, dense_symmetric_eigen, norm2, numerical_rank, solve, spectral_norm,
    sub, top_k_eigen, DenseMatrix, DenseSymmetric, EigenConfig,
};
use sampled_eigen::perturbation::{
    exact_gauged_eigenvector, expand, reduced_resolvent, EigenvalueShift,
};
use sampled_eigen::subsample::{
    draw_paired, draw_sample, median, residual_symmetric, two_point_values, SampleConfig,
};

const SUITE_SEED: u64 = 20_261_016;

fn verdict(id: &str, pass: bool, detail: String) {
    println!("{} {id}: {detail}", if pass { "PASS" } else { "FAIL" });
    assert!(pass, "{id} failed: {detail}");
}

fn exact_top(m: &DenseSymmetric) -> f64 {
    dense_symmetric_eigen(m).0[0]
}

#[test]
fn ac01_unbiased_sampling_and_residual_identity() {
    let (n, p, draws) = (8, 0.3, 10_000);
    let m = common::random_symmetric(n, SUITE_SEED);
    let base = SampleConfig::new(p, SUITE_SEED).unwrap();
    let (a, _) = two_point_values(p);
    let mut sum = vec![0.0; n * n];
    let mut worst_identity = 0.0f64;
    for i in 0..draws {
        let (draw, c) = draw_paired(&m, &base.with_stream(i)).unwrap();
        let s = draw.s.to_dense();
        let rebuilt = m.as_dense().add(&m.as_dense().hadamard(&c.to_dense()).unwrap().scale(a)).unwrap();
        for (k, (x, y)) in s.as_slice().iter().zip(rebuilt.as_slice()).enumerate() {
            worst_identity = worst_identity.max((x - y).abs());
            sum[k] += x;
        }
    }
    let mut worst_z = 0.0f64;
    for i in 0..n {
        for j in 0..n {
            let sd = m.get(i, j).abs() * ((1.0 - p) / p).sqrt() / (draws as f64).sqrt();
            let dev = (sum[i * n + j] / draws as f64 - m.get(i, j)).abs();
            worst_z = worst_z.max(dev / sd);
        }
    }
    verdict(
        "AC1",
        worst_z <= 4.0 && worst_identity <= 1e-12,
        format!("max |z| = {worst_z:.3} (≤ 4), identity error = {worst_identity:.2e} (≤ 1e-12)"),
    );
}

#[test]
fn ac02_residual_moments() {
    let (n, p, draws) = (8, 0.3, 100_000usize);
    let model = common::random_model(n, &[2.0, 1.0, 0.5], SUITE_SEED);
    let m = model.to_dense();
    let u = model.vector(0);
    let base = SampleConfig::new(p, SUITE_SEED ^ 2).unwrap();
    let mut sum = vec![0.0; n * n];
    let mut sq = vec![0.0; n * n];
    let mut forms = Vec::with_capacity(draws);
    for i in 0..draws {
        let e = residual_symmetric(&m, &draw_sample(&m, &base.with_stream(i as u64)).unwrap()).unwrap();
        let e2 = e.as_dense().matmul(e.as_dense()).unwrap();
        for (k, v) in e2.as_slice().iter().enumerate() {
            sum[k] += v;
            sq[k] += v * v;
        }
        forms.push(e.quadratic_form(u));
    }
    let nd = draws as f64;
    let mut worst_diag = 0.0f64;
    let mut worst_off = 0.0f64;
    for i in 0..n {
        for j in 0..n {
            let k = i * n + j;
            let mean = sum[k] / nd;
            if i == j {
                let col: f64 = (0..n).map(|r| m.get(r, i).powi(2)).sum();
                let closed = (1.0 - p) * col / p;
                worst_diag = worst_diag.max((mean / closed - 1.0).abs());
            } else {
                let sd = ((sq[k] / nd - mean * mean) / nd).sqrt();
                worst_off = worst_off.max(mean.abs() / sd);
            }
        }
    }
    let (_, var) = mean_var(&forms);
    let var_err = (var / var_ueu(&model, p) - 1.0).abs();
    verdict(
        "AC2",
        worst_diag <= 0.05 && worst_off <= 4.0 && var_err <= 0.05,
        format!(
            "diag rel err = {worst_diag:.4} (≤ 0.05), off-diag max |z| = {worst_off:.3} (≤ 4), var(uᵀEu) rel err = {var_err:.4} (≤ 0.05)"
        ),
    );
}

fn ac3_model() -> SpectralModel {
    synth_symmetric(&SyntheticSpec::dense(30, vec![4.0, 1.0, 0.5, 0.25], SUITE_SEED)).unwrap().1
}

#[test]
fn ac03_expansion_error_within_budget() {
    let model = ac3_model();
    let m = model.to_dense();
    let d = model.separation(0).unwrap();
    let base = SampleConfig::new(0.8, SUITE_SEED ^ 3).unwrap();
    let (mut kept, mut attempts, mut violations) = (0, 0u64, 0);
    let (mut worst, mut largest_ratio) = (0.0f64, 0.0f64);
    while kept < 200 && attempts < 5000 {
        let e = residual_symmetric(&m, &draw_sample(&m, &base.with_stream(attempts)).unwrap()).unwrap();
        attempts += 1;
        let ratio = 2.0 * dense_spectral_norm(&e) / d;
        if ratio >= 0.8 {
            continue;
        }
        kept += 1;
        largest_ratio = largest_ratio.max(ratio);
        let (_, v) = exact_gauged_eigenvector(&model, 0, &e).unwrap();
        let shift = EigenvalueShift::Given(exact_top(&m.add(&e).unwrap()));
        for j in 0..=2 {
            let x = expand(&model, 0, &e, shift, j).unwrap();
            let err = dist(&v, &x.corrected);
            worst = worst.max(err / x.error_budget);
            if err > x.error_budget {
                violations += 1;
            }
        }
    }
    verdict(
        "AC3",
        kept == 200 && violations == 0,
        format!(
            "{kept} in-regime draws of {attempts} (largest 2‖E‖/d = {largest_ratio:.3}), {violations} violations, worst error/budget = {worst:.3}"
        ),
    );
}

#[test]
fn ac04_expansion_order() {
    let model = ac3_model();
    let m = model.to_dense();
    let d = model.separation(0).unwrap();
    let e0 = residual_symmetric(&m, &draw_sample(&m, &SampleConfig::new(0.6, SUITE_SEED ^ 4).unwrap()).unwrap()).unwrap();
    // 2‖E‖/d = 0.5 at t = 1.
    let e0 = e0.scale(0.25 * d / dense_spectral_norm(&e0));
    let ts = [1.0, 0.5, 0.25, 0.125];
    let mut slopes = Vec::new();
    for j in 0..=1 {
        let errs: Vec<f64> = ts
            .iter()
            .map(|&t| {
                let e = e0.scale(t);
                let (_, v) = exact_gauged_eigenvector(&model, 0, &e).unwrap();
                let shift = EigenvalueShift::Given(exact_top(&m.add(&e).unwrap()));
                dist(&v, &expand(&model, 0, &e, shift, j).unwrap().corrected)
            })
            .collect();
        slopes.push(loglog_slope(&ts, &errs));
    }
    let pass = (slopes[0] - 2.0).abs() <= 0.3 && (slopes[1] - 3.0).abs() <= 0.3;
    verdict(
        "AC4",
        pass,
        format!("slope j=0 = {:.3} (2 ± 0.3), j=1 = {:.3} (3 ± 0.3)", slopes[0], slopes[1]),
    );
}

#[test]
fn ac05_second_order_averaging_gain() {
    let spec = SyntheticSpec::dense(300, vec![1.0, 0.5, 0.3, 0.2, 0.1], SUITE_SEED);
    let (m, model) = synth_symmetric(&spec).unwrap();
    let d = model.separation(0).unwrap();
    assert!(d >= 0.5);
    let ps = [0.5, 0.25, 0.125];
    let xis: Vec<f64> = ps.iter().map(|&p| xi(&model, p)).collect();
    let diag: Vec<f64> = ps.iter().zip(&xis).map(|(p, x)| x * (1.0 - p).sqrt()).collect();
    let (mut avg_err, mut single_err) = ([Vec::new(), Vec::new()], [Vec::new(), Vec::new()]);
    let gauges = [AverageGauge::AvgNorm, AverageGauge::NormAvg];
    for (cell, &p) in ps.iter().enumerate() {
        let plan = AveragingPlan::new(p, 2000, SUITE_SEED + cell as u64);
        let mut vectors: Vec<Vec<f64>> = draw_eigenvectors(&m, &plan).unwrap().into_iter().map(|d| d.1).collect();
        orient(&mut vectors);
        for (g, gauge) in gauges.iter().enumerate() {
            let (nu, est) = average_vectors(&vectors, *gauge);
            let mut u = model.vector(0).to_vec();
            orient_to(&mut u, &nu);
            avg_err[g].push(norm2(&sub(&est, &u)));
            let singles: Vec<f64> = vectors.iter().map(|v| norm2(&sub(v, &u))).collect();
            single_err[g].push(median(&singles));
        }
    }
    let mut pass = true;
    let mut lines = Vec::new();
    for (g, gauge) in gauges.iter().enumerate() {
        let sa = loglog_slope(&xis, &avg_err[g]);
        let ss = loglog_slope(&xis, &single_err[g]);
        let da = loglog_slope(&diag, &avg_err[g]);
        let ds = loglog_slope(&diag, &single_err[g]);
        pass &= (sa - 2.0).abs() <= 0.4 && (ss - 1.0).abs() <= 0.3;
        lines.push(format!(
            "{gauge:?}: averaged slope vs ξ = {sa:.3} (2 ± 0.4), single median slope vs ξ = {ss:.3} (1 ± 0.3); vs ξ√(1−p): {da:.3}, {ds:.3}; errors {:?} / {:?}",
            avg_err[g], single_err[g]
        ));
    }
    verdict("AC5", pass, format!("ξ = {xis:?}, d = {d}; {}", lines.join("; ")));
}

#[test]
fn ac06_variance_bound_covers_monte_carlo() {
    let (n, p, suites, draws) = (20, 0.3, 50, 5000);
    let (m, model) = synth_symmetric(&SyntheticSpec::dense(n, vec![2.0, 1.0, 0.5, 0.25], SUITE_SEED)).unwrap();
    let bound = variance_bound(&model, p).unwrap().exact_bound;
    let r = reduced_resolvent(&model, 0).unwrap();
    let u = model.vector(0);
    let mut covered = 0;
    let mut means = Vec::new();
    for s in 0..suites {
        let base = SampleConfig::new(p, SUITE_SEED + 1000 + s).unwrap();
        let mut total = 0.0;
        for i in 0..draws {
            let e = residual_symmetric(&m, &draw_sample(&m, &base.with_stream(i)).unwrap()).unwrap();
            total += norm2(&r.apply_vec(&e.matvec(u))).powi(2);
        }
        let mean = total / draws as f64;
        means.push(mean);
        if mean <= bound {
            covered += 1;
        }
    }
    let worst = means.iter().copied().fold(0.0f64, f64::max);
    verdict(
        "AC6",
        covered as f64 >= 0.99 * suites as f64,
        format!("{covered}/{suites} suites under exact_bound = {bound:.5}; largest Monte Carlo mean = {worst:.5}"),
    );
}

#[test]
fn ac07_norm_concentration() {
    let (n, p, draws) = (50, 0.3, 2000);
    let m = common::random_symmetric(n, SUITE_SEED);
    let base = SampleConfig::new(p, SUITE_SEED ^ 7).unwrap();
    let norms: Vec<f64> = (0..draws)
        .map(|i| dense_spectral_norm(&residual_symmetric(&m, &draw_sample(&m, &base.with_stream(i)).unwrap()).unwrap()))
        .collect();
    let m_e = median(&norms);
    let mx = entrywise_max(&m);
    let mut pass = true;
    let mut parts = Vec::new();
    for factor in [0.5, 1.0] {
        let t = factor * m_e;
        let tail = norms.iter().filter(|v| (*v - m_e).abs() > t).count() as f64 / draws as f64;
        let bound = e_tail_bound(mx, p, t);
        let b = bound.min(1.0);
        let slack = 4.0 * (b * (1.0 - b) / draws as f64).sqrt();
        pass &= tail <= bound + slack;
        parts.push(format!("t = {factor}·m_E: tail = {tail:.4}, bound = {bound:.4}"));
    }
    verdict("AC7", pass, format!("m_E = {m_e:.4}; {}", parts.join("; ")));
}

#[test]
fn ac08_blowup_regime() {
    let grid = vec![1 << 10, 1 << 11, 1 << 12, 1 << 13];
    let traces = blowup_experiment(&BlowupConfig::new(0.5, grid.clone(), 5, SUITE_SEED)).unwrap();
    let summary = summarize(&traces);
    let medians: Vec<f64> = summary.iter().map(|s| s.median_max_t_over_n).collect();
    let increasing = medians.windows(2).all(|w| w[1] > w[0]);
    let dominated = traces.iter().all(|t| t.opnorm_estimate >= t.max_t_over_n.sqrt() * (1.0 - 1e-12));
    let contrast_cfg = BlowupConfig {
        schedule: RateSchedule::LogSquared,
        ..BlowupConfig::new(0.5, grid, 5, SUITE_SEED)
    };
    let contrast = summarize(&blowup_experiment(&contrast_cfg).unwrap());
    let contrast_norms: Vec<f64> = contrast.iter().map(|s| s.median_opnorm).collect();
    let bounded = contrast_norms.iter().all(|&v| v <= 3.0);
    verdict(
        "AC8",
        increasing && dominated && bounded,
        format!(
            "median max T/n = {medians:?} (strictly increasing: {increasing}); opnorm ≥ √(max T/n) on every draw: {dominated}; contrast median ‖C/√n‖ = {contrast_norms:?} (≤ 3: {bounded})"
        ),
    );
}

#[test]
fn ac09_bollobas_witness() {
    let mut last = f64::NEG_INFINITY;
    let mut increasing = true;
    let mut worst = 0.0f64;
    let mut witnesses = Vec::new();
    for e in 10..=18 {
        let n = 1usize << e;
        let nf = n as f64;
        let p = nf.ln().sqrt() / nf;
        let k = threshold_k(n, p, 0.5, ThresholdVariant::LogShift).unwrap();
        let b = bollobas_lower_bound(n, p, k).unwrap();
        let log_witness = b.log_bound + nf.ln();
        increasing &= log_witness > last;
        last = log_witness;
        witnesses.push(log_witness.exp());

        let q = 1.0 - p;
        let h = k - nf * p;
        let beta = 1.0 / (12.0 * k) + 1.0 / (12.0 * (nf - k));
        let naive = (2.0 * std::f64::consts::PI * p * q * nf).powf(-0.5)
            * (-h * h / (2.0 * p * q * nf)
                - h.powi(3) / (2.0 * q * q * nf * nf)
                - h.powi(4) / (3.0 * (p * nf).powi(3))
                - h / (p * nf)
                - beta)
                .exp();
        if naive > 1e-300 {
            worst = worst.max((b.bound() - naive).abs() / naive);
        }
    }
    verdict(
        "AC9",
        increasing && worst <= 1e-9,
        format!("n·bound = {witnesses:?} (strictly increasing: {increasing}); log vs naive rel err = {worst:.2e}"),
    );
}

#[test]
fn ac10_pagerank_robustness() {
    let g = power_law_graph(&PowerLawSpec {
        n: 500,
        out_degree: 5,
        dangling_fraction: 0.1,
        seed: SUITE_SEED,
    })
    .unwrap();
    let grid = vec![0.05, 0.1, 0.2, 0.3, 0.5, 0.75, 1.0];
    let reseeds = 20;
    let mut passes = 0;
    let mut exact_at_one = true;
    for r in 0..reseeds {
        let cfg = PagerankSweepConfig::new(grid.clone(), 30, SUITE_SEED + r);
        let report = sweep_pagerank(&g, &cfg).unwrap();
        if report.rows.iter().all(|row| row.rho >= row.median_single_rho) {
            passes += 1;
        }
        exact_at_one &= report.rows.last().unwrap().rho == 1.0;
    }
    verdict(
        "AC10",
        passes as f64 >= 0.95 * reseeds as f64 && exact_at_one,
        format!("{passes}/{reseeds} reseeds with averaged ρ ≥ median single ρ at every p; ρ(1) = 1: {exact_at_one}"),
    );
}

fn fixture_graph(n: usize, seed: u64) -> WebGraph {
    use rand::Rng;
    let mut rng = common::rng(seed);
    let edges: Vec<(usize, usize)> = (0..3 * n)
        .map(|_| (rng.random_range(0..n - 1), rng.random_range(0..n)))
        .collect();
    WebGraph::from_edges(n, edges).unwrap()
}

#[test]
fn ac11_oracle_equivalence() {
    const FIXTURES: [u64; 5] = [11, 23, 37, 41, 59];
    let mut worst = [0.0f64; 6];
    for &seed in &FIXTURES {
        // Leading eigenpairs against cyclic Jacobi.
        let a = common::random_symmetric(12, seed);
        let (vals, vecs) = jacobi_eigen(&rows(a.as_dense()));
        let pairs = top_k_eigen(&a, 3, &EigenConfig::with_seed(seed)).unwrap();
        for (i, pair) in pairs.iter().enumerate() {
            worst[0] = worst[0].max((pair.value - vals[i]).abs());
            let d = dist(&pair.vector, &vecs[i]).min(dist(&pair.vector, &vecs[i].iter().map(|v| -v).collect::<Vec<_>>()));
            worst[1] = worst[1].max(d);
        }

        // Spectral norm and numerical rank against Jacobi singular values.
        let b = common::random_matrix(9, 7, seed);
        let s = jacobi_spectral_norm(&b);
        worst[2] = worst[2].max((spectral_norm(&b).unwrap() / s - 1.0).abs());
        let fro2: f64 = b.as_slice().iter().map(|v| v * v).sum();
        worst[2] = worst[2].max((numerical_rank(&b).unwrap() / (fro2 / (s * s)) - 1.0).abs());

        // PageRank against a direct solve of (I − cBᵀ)x = (1−c)/n 𝟙.
        let (n, c) = (15, 0.85);
        let g = fixture_graph(n, seed);
        let bm = GoogleMatrix::new(&g, 1.0).unwrap().to_dense();
        let lhs = DenseMatrix::from_fn(n, n, |i, j| (i == j) as u8 as f64 - c * bm.get(j, i));
        let x = solve(&lhs, &vec![(1.0 - c) / n as f64; n]).unwrap();
        let pr = pagerank(&GoogleMatrix::new(&g, c).unwrap(), 1e-14, 100_000).unwrap();
        worst[3] = worst[3].max(dist(&pr, &x));

        // μ and var(uᵀEu) against naive summation.
        let model = common::random_model(10, &[3.0, 1.0, -0.5], seed);
        let nf = 10f64;
        let mut naive_mu = 0.0;
        for i in 0..model.rank() {
            let inf = model.vector(i).iter().fold(0.0f64, |acc, v| acc.max(v.abs()));
            naive_mu += model.eigenvalue(i).abs() * nf.powf(model.alpha()[i]) * inf * inf;
        }
        worst[4] = worst[4].max((mu(&model) - naive_mu).abs() / naive_mu);
        let p = 0.4;
        let m = model.to_dense();
        let u = model.vector(0);
        let mut naive_var = 0.0;
        for i in 0..10 {
            naive_var += u[i].powi(4) * m.get(i, i).powi(2);
            for j in i + 1..10 {
                naive_var += 4.0 * (u[i] * u[j] * m.get(i, j)).powi(2);
            }
        }
        naive_var *= (1.0 - p) / p;
        worst[5] = worst[5].max((var_ueu(&model, p) - naive_var).abs() / naive_var);
    }
    let tol = [1e-8, 1e-8, 1e-8, 1e-8, 1e-12, 1e-12];
    let pass = worst.iter().zip(&tol).all(|(w, t)| w <= t);
    verdict(
        "AC11",
        pass,
        format!(
            "eigenvalues {:.1e}, eigenvectors {:.1e} (≤ 1e-8); spectral norm/rank rel {:.1e} (≤ 1e-8); PageRank {:.1e} (≤ 1e-8); μ rel {:.1e}, var(uᵀEu) rel {:.1e} (≤ 1e-12)",
            worst[0], worst[1], worst[2], worst[3], worst[4], worst[5]
        ),
    );
}
