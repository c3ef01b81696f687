//! Multi-source ranking tables in CSV.
//!
//! The header is `item,source1,source2,...`; each cell holds the integer rank
//! that source gave the item, or is blank when the source did not rank it.

use std::io::Read;
use std::path::Path;

use crate::error::{Error, Result};
use crate::imputation::{extend_columns, ObservedRanks};
use crate::rank::{Direction, ObjectId, PartialRanking, RankMatrix};

#[derive(Debug, Clone, PartialEq)]
pub struct RankingTable {
    pub items: Vec<ObjectId>,
    pub sources: Vec<String>,
    /// `cells[i][j]`: rank of item `i` by source `j`.
    pub cells: Vec<Vec<Option<u32>>>,
}

impl RankingTable {
    pub fn n(&self) -> usize {
        self.items.len()
    }

    pub fn d(&self) -> usize {
        self.sources.len()
    }

    /// Number of blank cells, i.e. ranks an imputation has to fill.
    pub fn missing_count(&self) -> usize {
        self.cells.iter().flatten().filter(|c| c.is_none()).count()
    }

    /// One partial list per source, all tagged with `direction`.
    pub fn partials(&self, direction: Direction) -> Result<Vec<PartialRanking>> {
        (0..self.d())
            .map(|j| {
                let entries = self
                    .items
                    .iter()
                    .zip(&self.cells)
                    .filter_map(|(id, row)| row[j].map(|r| (id.clone(), f64::from(r))));
                PartialRanking::from_positions(entries, direction).map(|p| p.with_domain_size(self.n()))
            })
            .collect()
    }

    /// Non-informative extension of every source, columns named after the
    /// sources. A source that ranked nothing becomes the constant 1/2.
    pub fn extended(&self, direction: Direction) -> Result<RankMatrix> {
        extend_columns(&self.partials(direction)?, &self.items)?.with_expert_names(self.sources.clone())
    }

    /// Known ranks placed on the `1..=n` scale of the full item set.
    pub fn observed(&self, direction: Direction) -> Result<ObservedRanks> {
        ObservedRanks::from_partials(&self.partials(direction)?, self.sources.clone(), &self.items)
    }
}

pub fn read_ranking_csv<R: Read>(reader: R, origin: &str) -> Result<RankingTable> {
    let err = |line: usize, msg: String| Error::Parse {
        path: origin.to_string(),
        line,
        msg,
    };
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let header = rdr.headers().map_err(|e| err(1, e.to_string()))?.clone();
    if header.len() < 2 {
        return Err(Error::Schema(format!(
            "{origin}: header needs an item column and at least one source"
        )));
    }
    let sources: Vec<String> = header.iter().skip(1).map(str::to_string).collect();
    let mut items = Vec::new();
    let mut cells = Vec::new();
    let mut seen = std::collections::HashSet::new();
    for (i, record) in rdr.records().enumerate() {
        let line = i + 2;
        let record = record.map_err(|e| err(line, e.to_string()))?;
        if record.len() != header.len() {
            return Err(err(
                line,
                format!("{} fields, header has {}", record.len(), header.len()),
            ));
        }
        let item = record[0].to_string();
        if item.is_empty() {
            return Err(err(line, "empty item name".into()));
        }
        if !seen.insert(item.clone()) {
            return Err(err(line, format!("item `{item}` listed twice")));
        }
        let row = record
            .iter()
            .skip(1)
            .map(|c| {
                if c.is_empty() {
                    return Ok(None);
                }
                match c.parse::<u32>() {
                    Ok(r) if r >= 1 => Ok(Some(r)),
                    _ => Err(err(line, format!("rank `{c}` is not a positive integer"))),
                }
            })
            .collect::<Result<Vec<_>>>()?;
        items.push(ObjectId::new(item));
        cells.push(row);
    }
    Ok(RankingTable {
        items,
        sources,
        cells,
    })
}

pub fn parse_ranking_csv(path: &Path) -> Result<RankingTable> {
    let file = std::fs::File::open(path)?;
    read_ranking_csv(file, &path.display().to_string())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn table(text: &str) -> Result<RankingTable> {
        read_ranking_csv(text.as_bytes(), "t.csv")
    }

    #[test]
    fn single_full_source() {
        let t = table("item,a\nx,2\ny,1\nz,3\n").unwrap();
        let p = &t.partials(Direction::Top).unwrap()[0];
        assert_eq!(p.len(), 3);
        assert_eq!(p.ranking().get(&"y".into()), Some(0.25));
        assert_eq!(t.missing_count(), 0);
    }

    #[test]
    fn blanks_are_missing() {
        let t = table("item,A,B\nx,1,\ny,2,1\n").unwrap();
        let ps = t.partials(Direction::Top).unwrap();
        assert!(ps[0].ranking().contains(&"x".into()));
        assert!(!ps[1].ranking().contains(&"x".into()));
        assert_eq!(t.missing_count(), 1);
        let obs = t.observed(Direction::Top).unwrap();
        assert_eq!(obs.missing_count(), 1);
        assert_eq!(obs.get(1, 1), Some(1));
    }

    #[test]
    fn rejects_bad_rows() {
        assert!(matches!(
            table("item,A\nx,1\nx,2\n"),
            Err(Error::Parse { line: 3, .. })
        ));
        assert!(matches!(
            table("item,A\nx,1.5\n"),
            Err(Error::Parse { line: 2, .. })
        ));
        assert!(matches!(table("item,A\nx,0\n"), Err(Error::Parse { .. })));
        assert!(table("item\nx\n").is_err());
    }
}
