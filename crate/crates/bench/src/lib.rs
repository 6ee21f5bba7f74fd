//! Instance generation, instance files, benchmarks and oracle checks for
//! the `rmdp` command-line tool.

pub mod bench;
pub mod error;
pub mod instance_file;
pub mod synthetic;
pub mod textbook;
pub mod verify;

pub use error::{BenchError, Result};
pub use instance_file::{load_instance, save_instance};
pub use synthetic::{generate_synthetic, SyntheticParams};
pub use textbook::{generate_textbook, textbook_by_name};
