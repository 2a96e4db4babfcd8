//! Real K×K channel gains.

use crate::error::{invalid, Result};

/// Channel gains `h[m][k]` from transmitter `k` to receiver `m`, stored row-major.
///
/// Entries may be marked as structurally equal to one. Such entries are not
/// independent gains: multiplying a monomial by them leaves its exponent
/// matrix unchanged. This is how parameterized channels like
/// `[[1, h2], [h1, 1]]` are expressed.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelMatrix {
    k: usize,
    entries: Vec<f64>,
    unit: Vec<bool>,
}

impl ChannelMatrix {
    pub fn new(k: usize, entries: Vec<f64>) -> Result<Self> {
        if k == 0 {
            return Err(invalid("channel dimension must be positive"));
        }
        if entries.len() != k * k {
            return Err(invalid(format!(
                "expected {} channel entries, got {}",
                k * k,
                entries.len()
            )));
        }
        if let Some(i) = entries.iter().position(|v| !v.is_finite()) {
            return Err(invalid(format!("channel entry {i} is not finite")));
        }
        Ok(Self {
            k,
            unit: vec![false; k * k],
            entries,
        })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let k = rows.len();
        if rows.iter().any(|r| r.len() != k) {
            return Err(invalid("channel matrix must be square"));
        }
        Self::new(k, rows.concat())
    }

    pub fn identity(k: usize) -> Self {
        let mut entries = vec![0.0; k * k];
        for i in 0..k {
            entries[i * k + i] = 1.0;
        }
        Self::new(k, entries).expect("identity is valid")
    }

    /// The two-user channel `[[1, h2], [h1, 1]]` with unit direct links.
    pub fn two_user_example(h1: f64, h2: f64) -> Result<Self> {
        let mut h = Self::new(2, vec![1.0, h2, h1, 1.0])?;
        h.unit[0] = true;
        h.unit[3] = true;
        Ok(h)
    }

    #[inline]
    pub fn k(&self) -> usize {
        self.k
    }

    #[inline]
    pub fn get(&self, m: usize, k: usize) -> f64 {
        self.entries[m * self.k + k]
    }

    pub fn entries(&self) -> &[f64] {
        &self.entries
    }

    pub fn row(&self, m: usize) -> &[f64] {
        &self.entries[m * self.k..(m + 1) * self.k]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.entries.chunks(self.k)
    }

    /// True when entry `(m, k)` is a structural one rather than a free gain.
    #[inline]
    pub fn is_unit(&self, m: usize, k: usize) -> bool {
        self.unit[m * self.k + k]
    }

    pub fn max_abs(&self) -> f64 {
        self.entries.iter().fold(0.0, |acc, v| acc.max(v.abs()))
    }

    pub fn has_zero_entry(&self) -> bool {
        self.entries.iter().any(|&v| v == 0.0)
    }

    /// `H x` for a transmit vector `x`.
    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        self.rows()
            .map(|row| row.iter().zip(x).map(|(h, x)| h * x).sum())
            .collect()
    }

    /// Genericity as used by the alignment scheme: no zero gain, and all
    /// monomials of degree below `l` evaluate to distinct values.
    pub fn is_generic(&self, l: usize, rel_tol: f64) -> bool {
        !self.has_zero_entry()
            && crate::diophantine::build_monomial_set(self, l)
                .map(|set| crate::diophantine::check_unique_factorization(&set, rel_tol))
                .unwrap_or(false)
    }
}

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_bad_shapes() {
        assert!(ChannelMatrix::new(2, vec![1.0; 3]).is_err());
        assert!(ChannelMatrix::new(0, vec![]).is_err());
        assert!(ChannelMatrix::new(1, vec![f64::NAN]).is_err());
        assert!(ChannelMatrix::from_rows(&[vec![1.0, 2.0], vec![3.0]]).is_err());
    }

    #[test]
    fn apply_and_rows() {
        let h = ChannelMatrix::from_rows(&[vec![1.0, 2.0], vec![3.0, 4.0]]).unwrap();
        assert_eq!(h.apply(&[1.0, -1.0]), vec![-1.0, -1.0]);
        assert_eq!(h.row(1), &[3.0, 4.0]);
        assert_eq!(h.max_abs(), 4.0);
    }

    #[test]
    fn example_channel_marks_direct_links() {
        let h = ChannelMatrix::two_user_example(0.3, 0.7).unwrap();
        assert!(h.is_unit(0, 0) && h.is_unit(1, 1));
        assert!(!h.is_unit(0, 1) && !h.is_unit(1, 0));
        assert_eq!(h.get(0, 1), 0.7);
        assert_eq!(h.get(1, 0), 0.3);
    }

    #[test]
    fn db_convention() {
        assert!((db_to_linear(20.0) - 100.0).abs() < 1e-9);
        assert_eq!(db_to_linear(0.0), 1.0);
    }
}
