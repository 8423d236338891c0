//! Dataset ingestion, synthetic generation, reference solving and CSV output.

pub mod libsvm;
pub mod records;
pub mod reference;
pub mod synthetic;

pub use libsvm::{parse_libsvm, parse_libsvm_str, to_libsvm_string, write_libsvm, SparseDataset};
pub use records::{read_records, write_records, ExperimentRecord};
pub use reference::{solve_reference, DEFAULT_REFERENCE_TOL};
pub use synthetic::{gen_synthetic, gen_synthetic_data, SyntheticSpec};
