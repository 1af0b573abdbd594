use std::collections::HashSet;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::DatasetError;

const DEFAULT_LAYOUT: &str = include_str!("../../data/default_layout.json");

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Beacon {
    pub id: String,
    /// Grid column, real-valued.
    pub x: f64,
    /// Grid row, real-valued.
    pub y: f64,
}

/// Floor grid plus the ordered beacon set. Beacon order defines the order
/// of entries in every [`RssiVector`](super::RssiVector).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BeaconLayout {
    /// `[columns, rows]`.
    pub grid: [usize; 2],
    #[serde(default = "default_cell_feet")]
    pub cell_feet: f64,
    pub beacons: Vec<Beacon>,
}

fn default_cell_feet() -> f64 {
    10.0
}

impl BeaconLayout {
    pub fn new(grid: [usize; 2], cell_feet: f64, beacons: Vec<Beacon>) -> Result<Self, DatasetError> {
        let layout = Self { grid, cell_feet, beacons };
        layout.validate()?;
        Ok(layout)
    }

    /// The 13-beacon library floor the public corpus was surveyed on.
    pub fn library() -> Self {
        Self::from_json(DEFAULT_LAYOUT).expect("bundled layout is valid")
    }

    pub fn from_json(text: &str) -> Result<Self, DatasetError> {
        let layout: Self = serde_json::from_str(text)?;
        layout.validate()?;
        Ok(layout)
    }

    pub fn load(path: &Path) -> Result<Self, DatasetError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| DatasetError::Layout(format!("cannot read layout {}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("layout serializes")
    }

    pub fn validate(&self) -> Result<(), DatasetError> {
        let [cols, rows] = self.grid;
        if cols == 0 || rows == 0 || cols > super::GRID_COLUMNS || rows > super::GRID_ROWS {
            return Err(DatasetError::Layout(format!("grid {cols}x{rows} must be between 1x1 and 25x25")));
        }
        if !(self.cell_feet > 0.0 && self.cell_feet.is_finite()) {
            return Err(DatasetError::Layout("cell_feet must be positive".into()));
        }
        if self.beacons.is_empty() {
            return Err(DatasetError::Layout("layout has no beacons".into()));
        }
        let mut seen = HashSet::new();
        for b in &self.beacons {
            if !seen.insert(b.id.as_str()) {
                return Err(DatasetError::Layout(format!("duplicate beacon id {:?}", b.id)));
            }
            let inside = |v: f64, n: usize| v >= 0.0 && v < n as f64;
            if !inside(b.x, cols) || !inside(b.y, rows) {
                return Err(DatasetError::Layout(format!(
                    "beacon {} at ({}, {}) lies outside the {cols}x{rows} grid",
                    b.id, b.x, b.y
                )));
            }
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.beacons.len()
    }

    pub fn is_empty(&self) -> bool {
        self.beacons.is_empty()
    }

    pub fn ids(&self) -> impl Iterator<Item = &str> {
        self.beacons.iter().map(|b| b.id.as_str())
    }

    pub fn index_of(&self, id: &str) -> Option<usize> {
        self.beacons.iter().position(|b| b.id == id)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bundled_layout_has_thirteen_beacons() {
        let layout = BeaconLayout::library();
        assert_eq!(layout.len(), 13);
        assert_eq!(layout.grid, [25, 25]);
        assert_eq!(layout.cell_feet, 10.0);
        assert_eq!(layout.index_of("b3001"), Some(0));
        assert_eq!(layout.index_of("b3013"), Some(12));
    }

    #[test]
    fn rejects_duplicates_and_off_grid() {
        let b = |id: &str, x, y| Beacon { id: id.into(), x, y };
        assert!(BeaconLayout::new([25, 25], 10.0, vec![b("a", 1.0, 1.0), b("a", 2.0, 2.0)]).is_err());
        assert!(BeaconLayout::new([25, 25], 10.0, vec![b("a", 25.0, 1.0)]).is_err());
        assert!(BeaconLayout::new([25, 25], 10.0, vec![b("a", -0.5, 1.0)]).is_err());
        assert!(BeaconLayout::new([25, 25], 10.0, vec![b("a", 24.9, 0.0)]).is_ok());
    }

    #[test]
    fn json_round_trip_and_default_cell_feet() {
        let layout = BeaconLayout::library();
        assert_eq!(BeaconLayout::from_json(&layout.to_json()).unwrap(), layout);
        let l = BeaconLayout::from_json(r#"{"grid":[25,25],"beacons":[{"id":"x","x":1,"y":2}]}"#).unwrap();
        assert_eq!(l.cell_feet, 10.0);
    }
}
