//! Player records and the arcsine variance-stabilizing transform.

use std::fs::File;
use std::io::Read;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// At-bats behind the first-period average.
pub const DEFAULT_AT_BATS: u32 = 45;

/// The 1970 data set (18 players) in the canonical CSV layout.
pub const CANONICAL_CSV: &str = include_str!("../data/table1.csv");

const HEADER: [&str; 4] = ["name", "y45", "remainder_avg", "remainder_ab"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlayerRecord {
    pub name: String,
    /// Batting average over the first 45 at-bats, as printed (3 decimals).
    pub y45: f64,
    /// Batting average over the rest of the season.
    pub remainder_avg: f64,
    /// At-bats over the rest of the season.
    pub remainder_ab: u32,
}

impl PlayerRecord {
    pub fn validate(&self) -> Result<()> {
        for (label, v) in [("y45", self.y45), ("remainder_avg", self.remainder_avg)] {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::Validation(format!(
                    "{}: {label} = {v} is outside [0, 1]",
                    self.name
                )));
            }
        }
        if self.remainder_ab == 0 {
            return Err(Error::Validation(format!(
                "{}: remainder_ab must be at least 1",
                self.name
            )));
        }
        Ok(())
    }

    /// The first-period average as an exact hits / at-bats fraction.
    ///
    /// A printed 3-decimal average is replaced by `round(y * n) / n` when it is
    /// the rounding of that fraction (|y*n - round(y*n)| <= n * 0.0005) and the
    /// fraction is unique (n < 1000). Otherwise the printed value is returned.
    pub fn first_period_average(&self, at_bats: u32) -> f64 {
        exact_fraction(self.y45, at_bats)
    }

    /// Transformed score `X_i` for this player.
    pub fn transformed(&self, at_bats: u32) -> f64 {
        arcsine_transform_n(self.first_period_average(at_bats), at_bats)
            .expect("validated records lie in [0, 1]")
    }
}

fn exact_fraction(y: f64, at_bats: u32) -> f64 {
    let n = f64::from(at_bats);
    if at_bats == 0 || at_bats >= 1000 {
        return y;
    }
    let hits = (y * n).round();
    if (y * n - hits).abs() <= n * 0.0005 + 1e-12 {
        hits / n
    } else {
        y
    }
}

/// The bundled 18-player data set.
pub fn canonical_players() -> Vec<PlayerRecord> {
    load_players_from_reader(CANONICAL_CSV.as_bytes()).expect("bundled data set is valid")
}

pub fn load_players(path: impl AsRef<Path>) -> Result<Vec<PlayerRecord>> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    load_players_from_reader(file)
}

/// Parse `name,y45,remainder_avg,remainder_ab` CSV. Row numbers in errors
/// count data rows from 1 (the header is row 0).
pub fn load_players_from_reader<R: Read>(reader: R) -> Result<Vec<PlayerRecord>> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(reader);

    let headers = rdr
        .headers()
        .map_err(|e| Error::Parse {
            row: 0,
            message: e.to_string(),
        })?
        .clone();
    if headers.is_empty() || (headers.len() == 1 && headers[0].is_empty()) {
        return Err(Error::Parse {
            row: 0,
            message: "empty input, no records".into(),
        });
    }
    if headers.iter().collect::<Vec<_>>() != HEADER {
        return Err(Error::Parse {
            row: 0,
            message: format!(
                "expected header `{}`, found `{}`",
                HEADER.join(","),
                headers.iter().collect::<Vec<_>>().join(",")
            ),
        });
    }

    let mut players = Vec::new();
    for (idx, record) in rdr.records().enumerate() {
        let row = idx + 1;
        let record = record.map_err(|e| Error::Parse {
            row,
            message: e.to_string(),
        })?;
        if record.len() != 4 {
            return Err(Error::Parse {
                row,
                message: format!("expected 4 fields, found {}", record.len()),
            });
        }
        let num = |i: usize| -> Result<f64> {
            record[i].parse::<f64>().map_err(|e| Error::Parse {
                row,
                message: format!("{}: {e}", HEADER[i]),
            })
        };
        let player = PlayerRecord {
            name: record[0].to_string(),
            y45: num(1)?,
            remainder_avg: num(2)?,
            remainder_ab: record[3].parse::<u32>().map_err(|e| Error::Parse {
                row,
                message: format!("remainder_ab: {e}"),
            })?,
        };
        player.validate()?;
        players.push(player);
    }
    if players.is_empty() {
        return Err(Error::Parse {
            row: 1,
            message: "no records".into(),
        });
    }
    Ok(players)
}

/// `sqrt(45) * asin(2y - 1)`.
pub fn arcsine_transform(y: f64) -> Result<f64> {
    arcsine_transform_n(y, DEFAULT_AT_BATS)
}

pub fn arcsine_transform_n(y: f64, at_bats: u32) -> Result<f64> {
    if !(0.0..=1.0).contains(&y) {
        return Err(Error::Domain(format!("average {y} is outside [0, 1]")));
    }
    Ok(f64::from(at_bats).sqrt() * (2.0 * y - 1.0).asin())
}

/// Inverse of [`arcsine_transform`], clamped to `[0, 1]`.
pub fn inverse_transform(x: f64) -> f64 {
    inverse_transform_n(x, DEFAULT_AT_BATS)
}

pub fn inverse_transform_n(x: f64, at_bats: u32) -> f64 {
    (((x / f64::from(at_bats).sqrt()).sin() + 1.0) / 2.0).clamp(0.0, 1.0)
}

/// Transformed scores for every player, in order.
pub fn transformed_scores(players: &[PlayerRecord], at_bats: u32) -> Vec<f64> {
    players.iter().map(|p| p.transformed(at_bats)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn canonical_first_row() {
        let players = canonical_players();
        assert_eq!(players.len(), 18);
        let c = &players[0];
        assert_eq!(c.name, "Clemente");
        assert_eq!(c.y45, 0.400);
        assert_eq!(c.remainder_avg, 0.346);
        assert_eq!(c.remainder_ab, 367);
    }

    #[test]
    fn canonical_column_sums() {
        // Sums of the printed Table 1 columns.
        let players = canonical_players();
        let y: f64 = players.iter().map(|p| p.y45).sum();
        let r: f64 = players.iter().map(|p| p.remainder_avg).sum();
        let ab: u32 = players.iter().map(|p| p.remainder_ab).sum();
        assert!((y - 4.777).abs() < 1e-9);
        assert!((r - 4.771).abs() < 1e-9);
        assert_eq!(ab, 6649);
    }

    #[test]
    fn printed_averages_are_hits_over_45() {
        let hits: Vec<f64> = canonical_players()
            .iter()
            .map(|p| p.first_period_average(45) * 45.0)
            .collect();
        let expected = [
            18., 17., 16., 15., 14., 14., 13., 12., 11., 11., 10., 10., 10., 10., 10., 9., 8., 7.,
        ];
        for (h, e) in hits.iter().zip(expected) {
            assert!((h - e).abs() < 1e-12);
        }
    }

    #[test]
    fn non_fraction_values_pass_through() {
        assert_eq!(exact_fraction(0.3000, 45), 0.3);
        assert_eq!(exact_fraction(0.5, 45), 0.5);
        assert_eq!(exact_fraction(0.4, 2000), 0.4);
    }

    #[test]
    fn transform_examples() {
        assert_eq!(arcsine_transform(0.5).unwrap(), 0.0);
        // sqrt(45) * asin(-0.2) = -1.350749996085593...
        let x = arcsine_transform(0.400).unwrap();
        assert!((x - -1.350_749_996_085_593).abs() < 1e-12);
        assert!(arcsine_transform(1.2).is_err());
        assert!(arcsine_transform(-0.01).is_err());
        assert!(arcsine_transform(f64::NAN).is_err());
    }

    #[test]
    fn mean_transformed_score() {
        let xs = transformed_scores(&canonical_players(), 45);
        let mean = xs.iter().sum::<f64>() / xs.len() as f64;
        assert!((mean - -3.3166).abs() < 5e-4, "{mean}");
    }

    #[test]
    fn inverse_examples() {
        assert_eq!(inverse_transform(0.0), 0.5);
        assert!((inverse_transform(-2.906) - 0.290).abs() < 1e-3);
        let y = 0.156;
        assert!((inverse_transform(arcsine_transform(y).unwrap()) - y).abs() < 1e-12);
        assert_eq!(inverse_transform(1e3), inverse_transform(1e3).clamp(0.0, 1.0));
    }

    #[test]
    fn empty_input_is_parse_error() {
        assert!(matches!(
            load_players_from_reader("".as_bytes()),
            Err(Error::Parse { .. })
        ));
        assert!(matches!(
            load_players_from_reader("name,y45,remainder_avg,remainder_ab\n".as_bytes()),
            Err(Error::Parse { .. })
        ));
    }

    #[test]
    fn malformed_row_names_row() {
        let src = "name,y45,remainder_avg,remainder_ab\nA,0.3,0.2,10\nB,abc,0.2,10\n";
        match load_players_from_reader(src.as_bytes()) {
            Err(Error::Parse { row, .. }) => assert_eq!(row, 2),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn out_of_range_is_validation_error() {
        let src = "name,y45,remainder_avg,remainder_ab\nA,1.3,0.2,10\n";
        assert!(matches!(
            load_players_from_reader(src.as_bytes()),
            Err(Error::Validation(_))
        ));
    }

    #[test]
    fn wrong_header_rejected() {
        let src = "player,y,r,n\nA,0.3,0.2,10\n";
        assert!(matches!(
            load_players_from_reader(src.as_bytes()),
            Err(Error::Parse { row: 0, .. })
        ));
    }

    proptest! {
        #[test]
        fn round_trip(y in 0.0f64..=1.0) {
            let back = inverse_transform(arcsine_transform(y).unwrap());
            prop_assert!((back - y).abs() < 1e-12);
        }

        #[test]
        fn strictly_increasing(a in 0.0f64..=1.0, b in 0.0f64..=1.0) {
            prop_assume!(a < b);
            prop_assert!(arcsine_transform(a).unwrap() < arcsine_transform(b).unwrap());
        }
    }
}
