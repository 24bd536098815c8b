pub mod catalog;
pub mod classifier;
pub mod embeddings;
pub mod kg;
pub mod query_graph;
pub mod text;
pub mod linker;
pub mod executor;
pub mod builder;
pub mod harness;
