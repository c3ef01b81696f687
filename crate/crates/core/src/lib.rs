//! Rank aggregation built on the empirical copula form of multivariate
//! Spearman's rho.
//!
//! The crate covers the full pipeline: fractional ranks ([`rank`]), rank
//! correlation ([`correlation`]), completion of top-k and bottom-k lists
//! ([`imputation`]), geometric-mean consensus ([`aggregation`]), log-rank
//! least squares for expert weights ([`learning`]), NDCG evaluation with
//! cross validation ([`evaluation`]) and LETOR / CSV readers ([`ingest`]).

pub mod aggregation;
pub mod correlation;
pub mod error;
pub mod evaluation;
pub mod imputation;
pub mod ingest;
pub mod learning;
pub mod par;
pub mod rank;

pub use error::{Error, Result};
pub use rank::{Direction, ObjectId, Order, PartialRanking, RankMatrix, Ranking};
