//! Synthetic ground truth, web graphs and ranking, sweeps and timing.

pub mod graph;
pub mod pagerank;
pub mod speedup;
pub mod sweep;
pub mod synth;

pub use graph::{
    load_edge_list, power_law_graph, read_edge_list, write_edge_list, write_edge_list_path,
    PowerLawSpec, WebGraph,
};
pub use pagerank::{
    average_ranks, average_ranks_within, pagerank, perron_left, spearman_rho, spearman_rho_within,
    GoogleMatrix, DEFAULT_DAMPING,
};
pub use speedup::{speedup_harness, SpeedupRow};
pub use sweep::{
    sweep_alignment, sweep_pagerank, sweep_samples, AlignmentRow, PagerankSweepConfig,
    RankReport, RankRow, RankSubsample, SampleCountRow, SweepConfig,
};
pub use synth::{
    orthonormal_with_supports, synth_rect, synth_symmetric, RectSyntheticSpec, SyntheticSpec,
};
