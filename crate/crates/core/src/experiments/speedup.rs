//! Wall-clock cost of subsample-then-eigensolve against a full eigensolve.
//!
//! Every measurement runs on the calling thread; nothing here uses the pool.

use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::{top_k_eigen, DenseSymmetric, EigenConfig};
use crate::subsample::{draw_sample, median, SampleConfig};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpeedupRow {
    pub p: f64,
    /// Median seconds to draw `S`.
    pub t_sample: f64,
    /// Median seconds for the leading eigenpair of `S`.
    pub t_eig_sub: f64,
    /// Median seconds for the leading eigenpair of `M`.
    pub t_eig_full: f64,
    /// `(t_sample + t_eig_sub) / t_eig_full`
    pub ratio: f64,
    /// Mean `nnz(S)/n²` over repetitions.
    pub nnz_fraction: f64,
    /// `eigen` when the eigensolve dominates, `sampling` otherwise.
    pub regime: String,
}

pub fn speedup_harness(
    m: &DenseSymmetric,
    p_grid: &[f64],
    reps: usize,
    seed: u64,
) -> Result<Vec<SpeedupRow>> {
    if reps < 5 {
        return Err(Error::InvalidConfig("at least 5 repetitions are required".into()));
    }
    let n = m.n();
    let cfg = EigenConfig::with_seed(seed);
    let mut full = Vec::with_capacity(reps);
    for _ in 0..reps {
        let t = Instant::now();
        top_k_eigen(m, 1, &cfg)?;
        full.push(t.elapsed().as_secs_f64());
    }
    let t_eig_full = median(&full);
    let mut rows = Vec::with_capacity(p_grid.len());
    for &p in p_grid {
        let base = SampleConfig::new(p, seed)?;
        let (mut ts, mut te, mut nnz) = (Vec::new(), Vec::new(), 0.0);
        for r in 0..reps {
            let t0 = Instant::now();
            let draw = draw_sample(m, &base.with_stream(r as u64))?;
            let t1 = Instant::now();
            top_k_eigen(&draw.s, 1, &cfg)?;
            let t2 = Instant::now();
            ts.push((t1 - t0).as_secs_f64());
            te.push((t2 - t1).as_secs_f64());
            nnz += draw.s.nnz() as f64 / (n * n) as f64;
        }
        let (t_sample, t_eig_sub) = (median(&ts), median(&te));
        rows.push(SpeedupRow {
            p,
            t_sample,
            t_eig_sub,
            t_eig_full,
            ratio: (t_sample + t_eig_sub) / t_eig_full,
            nnz_fraction: nnz / reps as f64,
            regime: if t_eig_sub >= t_sample { "eigen" } else { "sampling" }.into(),
        });
    }
    Ok(rows)
}
