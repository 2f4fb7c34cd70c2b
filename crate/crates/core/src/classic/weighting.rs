use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::error::Error;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ClassWeighting {
    #[default]
    None,
    /// `w_c = N / (K * n_c)` over the K classes present.
    Balanced,
}

impl fmt::Display for ClassWeighting {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ClassWeighting::None => "none",
            ClassWeighting::Balanced => "balanced",
        })
    }
}

impl FromStr for ClassWeighting {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Error> {
        match s {
            "none" => Ok(ClassWeighting::None),
            "balanced" => Ok(ClassWeighting::Balanced),
            other => Err(Error::invalid(format!("unknown weighting mode {other:?}"))),
        }
    }
}

/// Per-sample weights for the requested mode; `None` means unit weights.
pub fn class_weights(ds: &Dataset, mode: ClassWeighting) -> Option<Vec<f64>> {
    match mode {
        ClassWeighting::None => None,
        ClassWeighting::Balanced => {
            let counts = ds.class_counts();
            let present = counts.iter().filter(|&&c| c > 0).count().max(1);
            let per_class: Vec<f64> = counts
                .iter()
                .map(|&c| {
                    if c == 0 {
                        0.0
                    } else {
                        ds.n() as f64 / (present * c) as f64
                    }
                })
                .collect();
            Some(ds.labels().iter().map(|&y| per_class[y]).collect())
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn balanced_weights_equalise_class_mass() {
        let labels = vec![0, 0, 0, 0, 0, 0, 1, 1, 2];
        let ds = Dataset::new(
            vec![0.0; 9],
            1,
            labels,
            vec!["a".into(), "b".into(), "c".into()],
        )
        .unwrap();
        let w = class_weights(&ds, ClassWeighting::Balanced).unwrap();
        assert!((w[0] - 9.0 / 18.0).abs() < 1e-15);
        let mut mass = [0.0; 3];
        for (&y, &wi) in ds.labels().iter().zip(&w) {
            mass[y] += wi;
        }
        assert!(mass.iter().all(|m| (m - 3.0).abs() < 1e-12));
        assert!(w.iter().all(|&v| v > 0.0));
        assert!(class_weights(&ds, ClassWeighting::None).is_none());
    }
}
