//! `key=v1,v2;key2=w1` grid specifications and their cartesian expansion.

use std::collections::BTreeMap;
use std::str::FromStr;

use crate::error::{Error, Result};

pub type GridAxes = Vec<(String, Vec<String>)>;

pub fn parse_grid(spec: &str) -> Result<GridAxes> {
    let mut axes: GridAxes = Vec::new();
    for part in spec.split(';').map(str::trim).filter(|p| !p.is_empty()) {
        let (key, values) = part
            .split_once('=')
            .ok_or_else(|| Error::Format(format!("grid axis {part:?} lacks '='")))?;
        let key = key.trim();
        let values: Vec<String> = values
            .split(',')
            .map(|v| v.trim().to_string())
            .filter(|v| !v.is_empty())
            .collect();
        if key.is_empty() || values.is_empty() {
            return Err(Error::Format(format!("grid axis {part:?} is empty")));
        }
        if axes.iter().any(|(k, _)| k == key) {
            return Err(Error::Format(format!("grid axis {key} given twice")));
        }
        axes.push((key.to_string(), values));
    }
    Ok(axes)
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct GridPoint(pub BTreeMap<String, String>);

impl GridPoint {
    /// The value of `key`, or `default` when the grid leaves it unset.
    pub fn get<T: FromStr>(&self, key: &str, default: T) -> Result<T> {
        match self.0.get(key) {
            None => Ok(default),
            Some(v) => v
                .parse()
                .map_err(|_| Error::Format(format!("grid value {key}={v} does not parse"))),
        }
    }
}

/// Cartesian product; the last axis varies fastest.
pub fn expand_grid(axes: &GridAxes) -> Vec<GridPoint> {
    let mut points = vec![GridPoint::default()];
    for (key, values) in axes {
        points = points
            .into_iter()
            .flat_map(|p| {
                values.iter().map(move |v| {
                    let mut q = p.clone();
                    q.0.insert(key.clone(), v.clone());
                    q
                })
            })
            .collect();
    }
    points
}
