//! Discovery of impure measurement models — latent common causes and their
//! observed indicators — from a covariance matrix of observed variables,
//! using vanishing tetrad constraints. Supports an exact population oracle
//! and a finite-sample statistical mode, plus Gaussian maximum-likelihood
//! fitting of the recovered patterns.

pub mod cli;
pub mod dot;
pub mod error;
pub mod fit;
pub mod fixtures;
pub mod graph;
pub mod search;
pub mod sem;
pub mod tetrad;
pub mod textio;
