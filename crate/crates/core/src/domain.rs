//! Search domains and observation sets.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Axis-aligned box `[lower_i, upper_i]` in `d` dimensions.
///
/// All optimizers and samplers in this crate work over a `BoxDomain`; it is
/// also the unit used to normalize inputs before model fitting.
#[derive(Debug, Clone, PartialEq)]
pub struct BoxDomain {
    lower: DVector<f64>,
    upper: DVector<f64>,
}

impl BoxDomain {
    /// Builds a box from per-dimension bounds. Every interval must be finite
    /// with strictly positive width.
    pub fn new(lower: Vec<f64>, upper: Vec<f64>) -> Result<Self> {
        if lower.is_empty() || lower.len() != upper.len() {
            return Err(Error::input(format!(
                "box bounds must be non-empty and of equal length (got {} and {})",
                lower.len(),
                upper.len()
            )));
        }
        for (i, (&lo, &hi)) in lower.iter().zip(upper.iter()).enumerate() {
            if !lo.is_finite() || !hi.is_finite() {
                return Err(Error::input(format!("non-finite bound in dimension {i}")));
            }
            if lo >= hi {
                return Err(Error::input(format!(
                    "dimension {i} has empty interval [{lo}, {hi}]"
                )));
            }
        }
        Ok(BoxDomain {
            lower: DVector::from_vec(lower),
            upper: DVector::from_vec(upper),
        })
    }

    /// The unit cube `[0, 1]^d`.
    pub fn unit(dim: usize) -> Self {
        BoxDomain::new(vec![0.0; dim], vec![1.0; dim]).expect("unit cube is a valid box")
    }

    /// Same interval `[lo, hi]` in every dimension.
    pub fn cube(dim: usize, lo: f64, hi: f64) -> Result<Self> {
        BoxDomain::new(vec![lo; dim], vec![hi; dim])
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn lower(&self) -> &DVector<f64> {
        &self.lower
    }

    pub fn upper(&self) -> &DVector<f64> {
        &self.upper
    }

    pub fn width(&self, i: usize) -> f64 {
        self.upper[i] - self.lower[i]
    }

    pub fn center(&self) -> DVector<f64> {
        (&self.lower + &self.upper) * 0.5
    }

    /// Euclidean length of the diagonal.
    pub fn diameter(&self) -> f64 {
        (0..self.dim()).map(|i| self.width(i).powi(2)).sum::<f64>().sqrt()
    }

    pub fn volume(&self) -> f64 {
        (0..self.dim()).map(|i| self.width(i)).product()
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.len() == self.dim()
            && x.iter()
                .enumerate()
                .all(|(i, &v)| v >= self.lower[i] && v <= self.upper[i])
    }

    /// Componentwise projection onto the box.
    pub fn clamp(&self, x: &[f64]) -> DVector<f64> {
        DVector::from_fn(self.dim(), |i, _| x[i].clamp(self.lower[i], self.upper[i]))
    }

    /// Maps a point of this box to the unit cube.
    pub fn to_unit(&self, x: &[f64]) -> DVector<f64> {
        DVector::from_fn(self.dim(), |i, _| (x[i] - self.lower[i]) / self.width(i))
    }

    /// Maps a unit-cube point back into this box.
    pub fn from_unit(&self, u: &[f64]) -> DVector<f64> {
        DVector::from_fn(self.dim(), |i, _| self.lower[i] + u[i] * self.width(i))
    }

    /// The `q`-fold product box over flattened `q × d` batches.
    pub fn product(&self, q: usize) -> BoxDomain {
        let mut lower = Vec::with_capacity(q * self.dim());
        let mut upper = Vec::with_capacity(q * self.dim());
        for _ in 0..q {
            lower.extend(self.lower.iter());
            upper.extend(self.upper.iter());
        }
        BoxDomain::new(lower, upper).expect("product of a valid box is valid")
    }
}

/// A set of observed input/response pairs.
#[derive(Debug, Clone)]
pub struct Dataset {
    points: DMatrix<f64>,
    values: DVector<f64>,
}

impl Dataset {
    /// `points` is `n × d` (one row per observation), `values` has length `n`.
    /// Every entry must be finite and `n ≥ 1`.
    pub fn new(points: DMatrix<f64>, values: DVector<f64>) -> Result<Self> {
        if points.nrows() == 0 || points.ncols() == 0 {
            return Err(Error::input("dataset needs at least one row and one column"));
        }
        if points.nrows() != values.len() {
            return Err(Error::input(format!(
                "{} rows of inputs but {} responses",
                points.nrows(),
                values.len()
            )));
        }
        if points.iter().any(|v| !v.is_finite()) || values.iter().any(|v| !v.is_finite()) {
            return Err(Error::input("dataset contains a non-finite entry"));
        }
        Ok(Dataset { points, values })
    }

    pub fn from_rows(rows: &[Vec<f64>], values: &[f64]) -> Result<Self> {
        if rows.is_empty() {
            return Err(Error::input("dataset needs at least one row"));
        }
        let d = rows[0].len();
        if rows.iter().any(|r| r.len() != d) {
            return Err(Error::input("rows have inconsistent dimension"));
        }
        let points = DMatrix::from_fn(rows.len(), d, |i, j| rows[i][j]);
        Dataset::new(points, DVector::from_column_slice(values))
    }

    pub fn len(&self) -> usize {
        self.points.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.points.nrows() == 0
    }

    pub fn dim(&self) -> usize {
        self.points.ncols()
    }

    pub fn points(&self) -> &DMatrix<f64> {
        &self.points
    }

    pub fn values(&self) -> &DVector<f64> {
        &self.values
    }

    pub fn row(&self, i: usize) -> Vec<f64> {
        self.points.row(i).iter().copied().collect()
    }

    /// Returns a copy with `(x, y)` appended.
    pub fn with_observation(&self, x: &[f64], y: f64) -> Result<Dataset> {
        if x.len() != self.dim() {
            return Err(Error::input(format!(
                "appended point has dimension {} but dataset has {}",
                x.len(),
                self.dim()
            )));
        }
        if x.iter().any(|v| !v.is_finite()) || !y.is_finite() {
            return Err(Error::input("appended observation is non-finite"));
        }
        let n = self.len();
        let mut points = DMatrix::zeros(n + 1, self.dim());
        points.view_mut((0, 0), (n, self.dim())).copy_from(&self.points);
        for (j, &v) in x.iter().enumerate() {
            points[(n, j)] = v;
        }
        let mut values = DVector::zeros(n + 1);
        values.rows_mut(0, n).copy_from(&self.values);
        values[n] = y;
        Ok(Dataset { points, values })
    }
}
