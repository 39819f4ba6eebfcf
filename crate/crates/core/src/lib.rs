//! Lorentz sequence spaces `ℓ_{p,q}` made executable.
//!
//! * [`seqspace`]: finitely supported sequences, rearrangements, projections.
//! * [`lorentz`]: quasi-norms and the constants relating them.
//! * [`stepfun`]: dyadic step functions and the sequence/function transfer.
//! * [`rademacher`]: Rademacher systems and empirical Khintchine constants.
//! * [`widths`]: Bernstein-width lower bounds over explicit subspaces.
//! * [`singular`]: the gliding-hump construction behind strict singularity
//!   of `ℓ_{p,q} ↪ ℓ_{p,r}`.

pub mod error;
pub mod lorentz;
pub mod numeric;
pub mod optim;
pub mod rademacher;
pub mod stepfun;
pub mod widths;
pub mod seqspace;
pub mod singular;

pub use error::{Error, Result};
pub use seqspace::{Exponent, Exponents, Seq};
