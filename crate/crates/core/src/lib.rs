//! Maximum Cluster Test for detecting objects of unknown shape in noisy
//! grayscale images.
//!
//! An image on the triangular lattice is thresholded into black and white
//! sites; the test rejects "no object" when the largest black cluster reaches
//! a critical size `c0`. Critical sizes and error probabilities come from a
//! Newman–Ziff sweep over site percolation.
//!
//! ```
//! use percodetect::{run_test, GrayField, TriangularLattice};
//!
//! let lattice = TriangularLattice::new(16).unwrap();
//! let field = GrayField::constant(16, 0.9);
//! let report = run_test(&field, 0.5, 100, &lattice).unwrap();
//! assert!(report.decision.is_reject());
//! ```

pub mod bounds;
pub mod cli;
pub mod clusters;
pub mod error;
pub mod lattice;
pub mod mctest;
pub mod newman_ziff;
pub mod noise;
pub mod pgm;
pub mod rng;
pub mod union_find;

pub use clusters::{find_cluster_at_least, has_left_right_crossing, label_clusters, max_cluster_size, Color};
pub use error::{Error, Result};
pub use lattice::{SiteId, SiteMask, TriangularLattice};
pub use mctest::{calibrate, run_test, Calibrator, Decision, DetectionReport};
pub use newman_ziff::{critical_value, sweep, MaxClusterDistribution, MicroCanonicalTable, SweepOptions};
pub use noise::{synthesize, threshold, BinaryField, GrayField, NoiseModel, SignalSpec};
pub use pgm::PgmImage;
