//! Published yearly values bundled with the crate: the yearly index summary
//! with the HPI/HDI reference indicators, and yearly component values in
//! index-CSV format.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::index::{read_index_csv, IndexSeries};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Country {
    Italy,
    Japan,
}

impl Country {
    pub const ALL: [Country; 2] = [Country::Italy, Country::Japan];

    /// Name of the composite index for this country.
    pub fn index_name(self) -> &'static str {
        match self {
            Country::Italy => "SWB-I",
            Country::Japan => "SWB-J",
        }
    }
}

impl fmt::Display for Country {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Country::Italy => "italy",
            Country::Japan => "japan",
        })
    }
}

impl FromStr for Country {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "italy" | "it" => Ok(Country::Italy),
            "japan" | "jp" => Ok(Country::Japan),
            other => Err(format!("unknown country {other:?}")),
        }
    }
}

/// One year of the published summary; index values on the 0–100 scale.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct YearlyRow {
    pub year: i32,
    pub swb: f64,
    pub swb_sd: f64,
    pub tweets_millions: f64,
    pub hpi: Option<f64>,
    pub hdi: Option<f64>,
}

pub fn yearly_csv(country: Country) -> &'static str {
    match country {
        Country::Italy => include_str!("../data/fixtures/yearly_italy.csv"),
        Country::Japan => include_str!("../data/fixtures/yearly_japan.csv"),
    }
}

pub fn components_csv(country: Country) -> &'static str {
    match country {
        Country::Italy => include_str!("../data/fixtures/components_italy.csv"),
        Country::Japan => include_str!("../data/fixtures/components_japan.csv"),
    }
}

/// Parses a yearly table (`year,swb,swb_sd,tweets_millions,hpi,hdi`).
pub fn parse_yearly(text: &str) -> Result<Vec<YearlyRow>, csv::Error> {
    csv::Reader::from_reader(text.as_bytes()).deserialize().collect()
}

pub fn yearly(country: Country) -> Vec<YearlyRow> {
    parse_yearly(yearly_csv(country)).expect("bundled yearly fixture parses")
}

/// Yearly component values as an index series, one row per year dated
/// July 1st.
pub fn components(country: Country) -> IndexSeries {
    read_index_csv(components_csv(country).as_bytes()).expect("bundled component fixture parses")
}
