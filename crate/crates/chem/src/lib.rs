//! Chemical-space diagnostics: SMILES, circular fingerprints, Tanimoto
//! similarity, correlation distances, PCA, planar filtered graphs and
//! shortest-path distributions.

pub mod elements;
pub mod fingerprint;
pub mod matrix;
pub mod paths;
pub mod planarity;
pub mod pmfg;
pub mod smiles;

pub use fingerprint::{morgan_fingerprint, tanimoto, tanimoto_matrix, Fingerprint};
pub use matrix::{correlation_distance_matrix, pca_embed, standardize};
pub use paths::all_pairs_shortest_paths;
pub use planarity::is_planar;
pub use pmfg::{pmfg_construct, WeightedGraph};
pub use smiles::{canonical_smiles, parse_smiles, write_smiles, Molecule};
