//! Location label codec: a column letter `A..Y` followed by a decimal row
//! number, e.g. `"O02"` is column 14, row 2.

use super::{Cell, DatasetError, GridPoint};

pub const GRID_COLUMNS: usize = 25;
pub const GRID_ROWS: usize = 25;

pub fn decode_location_label(label: &str) -> Result<GridPoint, DatasetError> {
    let malformed = |reason| DatasetError::MalformedLabel { label: label.to_string(), reason };
    let mut chars = label.chars();
    let letter = chars.next().ok_or_else(|| malformed("empty label"))?;
    if !letter.is_ascii_uppercase() {
        return Err(malformed("column must be a letter A..Y"));
    }
    let column = (letter as u8 - b'A') as usize;
    if column >= GRID_COLUMNS {
        return Err(malformed("column must be a letter A..Y"));
    }
    let digits = chars.as_str();
    if digits.is_empty() || !digits.bytes().all(|b| b.is_ascii_digit()) {
        return Err(malformed("row must be decimal digits"));
    }
    let row: usize = digits.parse().map_err(|_| malformed("row must be decimal digits"))?;
    if row >= GRID_ROWS {
        return Err(malformed("row must be below 25"));
    }
    Ok(GridPoint::new(column as f64, row as f64))
}

/// Canonical label for a cell: letter plus two-digit row.
pub fn encode_location_label(cell: Cell) -> String {
    assert!(cell.x < GRID_COLUMNS && cell.y < GRID_ROWS, "cell {cell} off grid");
    format!("{}{:02}", (b'A' + cell.x as u8) as char, cell.y)
}
