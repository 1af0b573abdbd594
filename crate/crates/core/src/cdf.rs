use std::io::Write;

use serde::{Deserialize, Serialize};

/// Empirical CDF of localization errors. Equal errors share one point, so
/// the error column is strictly increasing.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorCdf {
    /// `(error, fraction of samples with error <= it)`
    pub points: Vec<(f64, f64)>,
}

impl ErrorCdf {
    /// Non-finite errors are rejected with `None`.
    pub fn from_errors(errors: &[f64]) -> Option<Self> {
        if errors.iter().any(|e| !e.is_finite()) {
            return None;
        }
        let mut sorted = errors.to_vec();
        sorted.sort_by(f64::total_cmp);
        let n = sorted.len() as f64;
        let mut points: Vec<(f64, f64)> = Vec::new();
        for (i, &e) in sorted.iter().enumerate() {
            let fraction = (i + 1) as f64 / n;
            match points.last_mut() {
                Some(last) if last.0 == e => last.1 = fraction,
                _ => points.push((e, fraction)),
            }
        }
        if let Some(last) = points.last_mut() {
            last.1 = 1.0;
        }
        Some(Self { points })
    }

    /// `error_ft,fraction`
    pub fn write_csv<W: Write>(&self, w: W) -> Result<(), csv::Error> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(["error_ft", "fraction"])?;
        for (e, f) in &self.points {
            out.write_record([e.to_string(), f.to_string()])?;
        }
        out.flush()?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn ties_collapse() {
        let cdf = ErrorCdf::from_errors(&[3.0, 1.0, 3.0, 2.0]).unwrap();
        assert_eq!(cdf.points, vec![(1.0, 0.25), (2.0, 0.5), (3.0, 1.0)]);
        assert!(ErrorCdf::from_errors(&[]).unwrap().points.is_empty());
        assert!(ErrorCdf::from_errors(&[f64::NAN]).is_none());
    }

    #[test]
    fn csv_output() {
        let mut buf = Vec::new();
        ErrorCdf::from_errors(&[5.0, 10.0]).unwrap().write_csv(&mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "error_ft,fraction\n5,0.5\n10,1\n");
    }

    proptest! {
        #[test]
        fn monotone_and_complete(errors in prop::collection::vec(0.0f64..100.0, 1..200)) {
            let cdf = ErrorCdf::from_errors(&errors).unwrap();
            for w in cdf.points.windows(2) {
                prop_assert!(w[0].0 < w[1].0);
                prop_assert!(w[0].1 < w[1].1);
            }
            prop_assert_eq!(cdf.points.last().unwrap().1, 1.0);
        }
    }
}
