//! Shared instance fixtures for the solver benchmarks.

use metric_nearness::{build_instance, gen_random_instance, ingest::gen_random_graph, InstanceOptions, Norm, ProblemInstance};

/// Dense random instance with the usual seed.
pub fn dense(n: usize, norm: Norm) -> ProblemInstance {
    gen_random_instance(n, 0, norm).expect("valid size")
}

/// Sparse graph instance with 0/1 dissimilarities.
pub fn graph(n: usize, avg_degree: f64, norm: Norm) -> ProblemInstance {
    let g = gen_random_graph(n, avg_degree, 0).expect("valid size");
    build_instance(&g, norm, &InstanceOptions::default()).expect("valid graph")
}
