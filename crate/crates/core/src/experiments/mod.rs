//! Dataset generators, MNIST ingestion, kernel menus and the Monte-Carlo
//! harness.

pub mod datasets;
pub mod io;
pub mod menu;
pub mod mnist;
pub mod monte_carlo;

pub use datasets::{gen_blobs, gen_diff_var, gen_symmetric_matched, DatasetKind, DatasetSpec};
pub use io::{load_points_csv, read_points_csv, write_reports_csv};
pub use menu::{KernelMenuSpec, MenuItem};
pub use mnist::{gen_mnist_pair, load_mnist_downsampled, MnistPool};
pub use monte_carlo::{run_monte_carlo, run_trial, MCReport, MonteCarloConfig};
