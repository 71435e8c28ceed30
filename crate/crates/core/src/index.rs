//! Index-set helpers for alternating supports and support-shape classification.

use serde::Serialize;

/// `{a, a + 2, a + 4, ...}` capped at `b` (inclusive). Empty when `a > b`.
pub fn alternating_set(a: usize, b: usize) -> Vec<usize> {
    if a > b {
        return Vec::new();
    }
    (a..=b).step_by(2).collect()
}

/// Contiguous times `a..=b`.
pub fn interval(a: usize, b: usize) -> Vec<usize> {
    if a > b {
        Vec::new()
    } else {
        (a..=b).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Mover {
    Row,
    Col,
}

/// The three support shapes an equilibrium of a symmetric stingy race can take.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum SupportShape {
    /// Both players mix over `start..=K`.
    Coinciding { start: usize },
    /// The first mover plays `start, start + 2, ..., K - 1`, the other `start + 1, ..., K`.
    Alternating { start: usize, first: Mover },
    /// Alternating up to `change - 1`, then both mix over `change..=K`.
    AltCoinciding {
        start: usize,
        change: usize,
        first: Mover,
    },
}

impl SupportShape {
    pub fn start(&self) -> usize {
        match *self {
            SupportShape::Coinciding { start }
            | SupportShape::Alternating { start, .. }
            | SupportShape::AltCoinciding { start, .. } => start,
        }
    }
}

/// Classify a pair of supports (sorted 1-based times) of a race with `k` times.
pub fn classify_supports(row: &[usize], col: &[usize], k: usize) -> Option<SupportShape> {
    if row.is_empty() || col.is_empty() {
        return None;
    }
    if row == col {
        let t = row[0];
        return (row == interval(t, k).as_slice()).then_some(SupportShape::Coinciding { start: t });
    }
    let (first, a, b) = if row[0] < col[0] {
        (Mover::Row, row, col)
    } else if col[0] < row[0] {
        (Mover::Col, col, row)
    } else {
        return None;
    };
    let t = a[0];
    if (k - t) % 2 == 1 && a == alternating_set(t, k - 1).as_slice() && b == alternating_set(t + 1, k).as_slice() {
        return Some(SupportShape::Alternating { start: t, first });
    }
    let mut c = t + 2;
    while c <= k {
        let mut ea = alternating_set(t, c - 2);
        ea.extend(interval(c, k));
        let mut eb = alternating_set(t + 1, c - 1);
        eb.extend(interval(c, k));
        if a == ea.as_slice() && b == eb.as_slice() {
            return Some(SupportShape::AltCoinciding {
                start: t,
                change: c,
                first,
            });
        }
        c += 2;
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn alternating_sets() {
        assert_eq!(alternating_set(2, 7), vec![2, 4, 6]);
        assert_eq!(alternating_set(3, 7), vec![3, 5, 7]);
        assert!(alternating_set(5, 4).is_empty());
    }

    #[test]
    fn classification() {
        assert_eq!(
            classify_supports(&[2, 3, 4], &[2, 3, 4], 4),
            Some(SupportShape::Coinciding { start: 2 })
        );
        assert_eq!(
            classify_supports(&[1, 3], &[2, 4], 4),
            Some(SupportShape::Alternating { start: 1, first: Mover::Row })
        );
        assert_eq!(
            classify_supports(&[2], &[1], 2),
            Some(SupportShape::Alternating { start: 1, first: Mover::Col })
        );
        assert_eq!(
            classify_supports(&[1, 3, 4, 5], &[2, 3, 4, 5], 5),
            Some(SupportShape::AltCoinciding { start: 1, change: 3, first: Mover::Row })
        );
        assert_eq!(classify_supports(&[1, 2], &[2], 2), None);
        assert_eq!(classify_supports(&[1], &[1], 2), None);
    }
}
