//! Readers and writers for external data: LETOR aggregation files, ranking
//! tables in CSV and learned weights.

pub mod letor;
pub mod table;
pub mod weights;

pub use letor::{
    parse_letor_agg, parse_letor_file, parse_letor_str, write_letor, Dataset, Fold, LetorOptions,
    QueryInstance,
};
pub use table::{parse_ranking_csv, read_ranking_csv, RankingTable};
pub use weights::{load_weights, save_weights, weights_from_json, weights_to_json};
