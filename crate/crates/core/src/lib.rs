//! Sum-product networks over binary variables, trained by maximum likelihood
//! under probabilistic equality constraints.
//!
//! * [`circuit`]: structure, validation, inference, weight gradients and the
//!   model text format.
//! * [`constraints`]: conditional, interventional and independence
//!   constraints compiled into polynomial residuals of the weights.
//! * [`optimizer`]: projected gradient training, unconstrained, with squared
//!   penalties, or by augmented Lagrangian.
//! * [`oracle`]: brute-force joint tables for checking all of the above.
//! * [`dataio`]: CSV datasets and log-likelihood.
//! * [`cli`]: the `spnc` command-line tool.

pub mod circuit;
pub mod cli;
pub mod constraints;
pub mod dataio;
pub mod optimizer;
pub mod oracle;
