//! Minimum-storage-regenerating codes with two parity nodes over small
//! finite fields, with node capacity alpha = 2^m.
//!
//! The crate provides:
//!
//! * [`gf`]: exact GF(p^e) arithmetic (q <= 256);
//! * [`linalg`]: dense matrices over a field: rank, inversion, solving;
//! * [`partition`]: the m binary partitions of the standard basis of
//!   F_q^(2^m) that drive the coding and repair matrix layout;
//! * [`codes`]: the generic construction engine plus the concrete code
//!   families `c1`..`c4`, the modified zigzag code and the long MDS code;
//! * [`checker`]: structural verification (MDS, repair, access, update),
//!   coefficient-level theorem checks, and brute-force coefficient search;
//! * [`codec`]: file encode/reconstruct/repair with bandwidth and access
//!   accounting, plus the on-disk shard format.

pub mod checker;
pub mod codec;
pub mod codes;
pub mod gf;
pub mod linalg;
pub mod partition;

pub use gf::{FieldElement, FieldSpec};
pub use linalg::{ColumnVector, Matrix};
