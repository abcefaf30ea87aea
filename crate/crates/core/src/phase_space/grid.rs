use crate::error::{Error, Result};

/// Smallest cell count accepted along either axis.
pub const MIN_CELLS: usize = 8;

/// Uniform periodic discretization of a rectangle in (q, p).
///
/// Nodes sit at cell centres, `q_i = q_min + (i + 1/2) dq`, and fields are
/// stored row-major with `q` as the slow index: `index(i, j) = i * n_p + j`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhaseGrid {
    q_min: f64,
    q_max: f64,
    p_min: f64,
    p_max: f64,
    n_q: usize,
    n_p: usize,
}

impl PhaseGrid {
    pub fn new(q_min: f64, q_max: f64, p_min: f64, p_max: f64, n_q: usize, n_p: usize) -> Result<Self> {
        if ![q_min, q_max, p_min, p_max].iter().all(|b| b.is_finite()) {
            return Err(Error::InvalidGrid("bounds must be finite".into()));
        }
        if n_q < MIN_CELLS || n_p < MIN_CELLS {
            return Err(Error::InvalidGrid(format!(
                "cell count below minimum {MIN_CELLS} (n_q = {n_q}, n_p = {n_p})"
            )));
        }
        if q_max <= q_min || p_max <= p_min {
            return Err(Error::InvalidGrid(format!(
                "bounds not ordered: q in [{q_min}, {q_max}], p in [{p_min}, {p_max}]"
            )));
        }
        Ok(Self {
            q_min,
            q_max,
            p_min,
            p_max,
            n_q,
            n_p,
        })
    }

    pub fn q_min(&self) -> f64 {
        self.q_min
    }
    pub fn q_max(&self) -> f64 {
        self.q_max
    }
    pub fn p_min(&self) -> f64 {
        self.p_min
    }
    pub fn p_max(&self) -> f64 {
        self.p_max
    }
    pub fn n_q(&self) -> usize {
        self.n_q
    }
    pub fn n_p(&self) -> usize {
        self.n_p
    }

    pub fn dq(&self) -> f64 {
        (self.q_max - self.q_min) / self.n_q as f64
    }

    pub fn dp(&self) -> f64 {
        (self.p_max - self.p_min) / self.n_p as f64
    }

    pub fn cell_area(&self) -> f64 {
        self.dq() * self.dp()
    }

    pub fn area(&self) -> f64 {
        (self.q_max - self.q_min) * (self.p_max - self.p_min)
    }

    /// Number of nodes.
    pub fn len(&self) -> usize {
        self.n_q * self.n_p
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    #[inline]
    pub fn q(&self, i: usize) -> f64 {
        self.q_min + (i as f64 + 0.5) * self.dq()
    }

    #[inline]
    pub fn p(&self, j: usize) -> f64 {
        self.p_min + (j as f64 + 0.5) * self.dp()
    }

    #[inline]
    pub fn index(&self, i: usize, j: usize) -> usize {
        i * self.n_p + j
    }

    /// Inverse of [`index`](Self::index).
    #[inline]
    pub fn coords(&self, k: usize) -> (usize, usize) {
        (k / self.n_p, k % self.n_p)
    }

    /// Phase-space position of flat node `k`.
    #[inline]
    pub fn node(&self, k: usize) -> (f64, f64) {
        let (i, j) = self.coords(k);
        (self.q(i), self.p(j))
    }

    pub fn contains(&self, q: f64, p: f64) -> bool {
        q >= self.q_min && q <= self.q_max && p >= self.p_min && p <= self.p_max
    }

    /// Midpoint-rule integral of a nodal field, summed in storage order.
    pub fn quadrature(&self, values: &[f64]) -> f64 {
        debug_assert_eq!(values.len(), self.len());
        values.iter().sum::<f64>() * self.cell_area()
    }

    /// Samples `f` at every node in storage order.
    pub fn sample(&self, f: impl Fn(f64, f64) -> f64) -> Vec<f64> {
        (0..self.len())
            .map(|k| {
                let (q, p) = self.node(k);
                f(q, p)
            })
            .collect()
    }

    /// Fraction of the total of a non-negative field held by nodes at least
    /// `margin_q` / `margin_p` away from the domain edges.
    pub fn interior_fraction(&self, values: &[f64], margin_q: f64, margin_p: f64) -> f64 {
        let mut inner = 0.0;
        let mut total = 0.0;
        for (k, &v) in values.iter().enumerate() {
            let (q, p) = self.node(k);
            total += v;
            if q - self.q_min >= margin_q
                && self.q_max - q >= margin_q
                && p - self.p_min >= margin_p
                && self.p_max - p >= margin_p
            {
                inner += v;
            }
        }
        if total > 0.0 {
            inner / total
        } else {
            1.0
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cell_geometry() {
        let g = PhaseGrid::new(-5.0, 5.0, -5.0, 5.0, 64, 64).unwrap();
        assert_eq!(g.dq(), 10.0 / 64.0);
        assert_eq!(g.dp(), 10.0 / 64.0);

        let unit = PhaseGrid::new(0.0, 1.0, 0.0, 1.0, 8, 8).unwrap();
        assert_eq!(unit.cell_area(), 1.0 / 64.0);
    }

    #[test]
    fn rejects_small_counts_and_bad_bounds() {
        assert!(matches!(
            PhaseGrid::new(-5.0, 5.0, -5.0, 5.0, 7, 64),
            Err(Error::InvalidGrid(_))
        ));
        assert!(PhaseGrid::new(1.0, 0.0, 0.0, 1.0, 8, 8).is_err());
        assert!(PhaseGrid::new(f64::NAN, 1.0, 0.0, 1.0, 8, 8).is_err());
        assert!(PhaseGrid::new(0.0, f64::INFINITY, 0.0, 1.0, 8, 8).is_err());
    }

    #[test]
    fn constant_field_integrates_to_area() {
        for (n_q, n_p) in [(8, 8), (64, 64), (256, 128)] {
            let g = PhaseGrid::new(-5.0, 5.0, -2.5, 2.5, n_q, n_p).unwrap();
            let ones = vec![1.0; g.len()];
            assert_eq!(g.quadrature(&ones), g.area());
        }
    }

    #[test]
    fn nodes_are_symmetric_cell_centres() {
        let g = PhaseGrid::new(-1.0, 1.0, -1.0, 1.0, 8, 8).unwrap();
        assert_eq!(g.q(0), -g.q(7));
        assert_eq!(g.p(3), -g.p(4));
        let (i, j) = g.coords(g.index(5, 2));
        assert_eq!((i, j), (5, 2));
    }
}
