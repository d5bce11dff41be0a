//! Piecewise-linear paths over a time interval.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A scalar piecewise-linear function of time given by its knots.
///
/// Knots are strictly increasing and values finite. Evaluation outside the
/// knot range clamps to the nearest end value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Polyline {
    knots: Vec<f64>,
    values: Vec<f64>,
}

impl Polyline {
    pub fn new(knots: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        let p = Polyline { knots, values };
        p.validate()?;
        Ok(p)
    }

    /// A constant function on `[0, horizon]`.
    pub fn constant(horizon: f64, value: f64) -> Result<Self> {
        Self::new(vec![0.0, horizon], vec![value, value])
    }

    /// The line `intercept + slope * t` on `[0, horizon]`.
    pub fn line(horizon: f64, intercept: f64, slope: f64) -> Result<Self> {
        Self::new(vec![0.0, horizon], vec![intercept, intercept + slope * horizon])
    }

    pub fn validate(&self) -> Result<()> {
        if self.knots.is_empty() {
            return Err(Error::InvalidPath("polyline needs at least one knot".into()));
        }
        if self.knots.len() != self.values.len() {
            return Err(Error::InvalidPath(format!(
                "{} knots but {} values",
                self.knots.len(),
                self.values.len()
            )));
        }
        if let Some(i) = self.knots.iter().position(|t| !t.is_finite()) {
            return Err(Error::InvalidPath(format!("knots[{i}] is not finite")));
        }
        if let Some(i) = self.values.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidPath(format!("values[{i}] is not finite")));
        }
        if let Some(i) = self.knots.windows(2).position(|w| w[0] >= w[1]) {
            return Err(Error::InvalidPath(format!(
                "knots must be strictly increasing (knots[{}] >= knots[{}])",
                i,
                i + 1
            )));
        }
        Ok(())
    }

    pub fn knots(&self) -> &[f64] {
        &self.knots
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn start(&self) -> f64 {
        self.knots[0]
    }

    pub fn end(&self) -> f64 {
        self.knots[self.knots.len() - 1]
    }

    pub fn eval(&self, t: f64) -> f64 {
        let (i, w) = locate(&self.knots, t);
        match w {
            None => self.values[i],
            Some(w) => self.values[i] + w * (self.values[i + 1] - self.values[i]),
        }
    }

    pub fn min_value(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max_value(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    /// Largest absolute slope over the linear pieces.
    pub fn max_abs_slope(&self) -> f64 {
        self.knots
            .windows(2)
            .zip(self.values.windows(2))
            .map(|(t, v)| ((v[1] - v[0]) / (t[1] - t[0])).abs())
            .fold(0.0, f64::max)
    }

    /// Same function re-expressed on the time axis `t / time_scale` with
    /// values multiplied by `value_scale`.
    pub fn rescaled(&self, time_scale: f64, value_scale: f64) -> Polyline {
        Polyline {
            knots: self.knots.iter().map(|t| t / time_scale).collect(),
            values: self.values.iter().map(|v| v * value_scale).collect(),
        }
    }

    /// The same function with every linear piece split into `2^levels`
    /// equal sub-pieces.
    pub fn refined(&self, levels: u32) -> Polyline {
        let parts = 1usize << levels;
        let mut knots = Vec::with_capacity((self.knots.len() - 1) * parts + 1);
        let mut values = Vec::with_capacity(knots.capacity());
        for i in 0..self.knots.len().saturating_sub(1) {
            for j in 0..parts {
                let w = j as f64 / parts as f64;
                knots.push(self.knots[i] + w * (self.knots[i + 1] - self.knots[i]));
                values.push(self.values[i] + w * (self.values[i + 1] - self.values[i]));
            }
        }
        knots.push(self.end());
        values.push(self.values[self.values.len() - 1]);
        Polyline { knots, values }
    }
}

/// A piecewise-linear path in ℝ^m.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointPath {
    knots: Vec<f64>,
    points: Vec<Vec<f64>>,
}

impl PointPath {
    pub fn new(knots: Vec<f64>, points: Vec<Vec<f64>>) -> Result<Self> {
        let p = PointPath { knots, points };
        p.validate()?;
        Ok(p)
    }

    pub fn stationary(horizon: f64, point: Vec<f64>) -> Result<Self> {
        Self::new(vec![0.0, horizon], vec![point.clone(), point])
    }

    pub fn validate(&self) -> Result<()> {
        let scalar = Polyline {
            knots: self.knots.clone(),
            values: vec![0.0; self.knots.len()],
        };
        scalar.validate()?;
        if self.points.len() != self.knots.len() {
            return Err(Error::InvalidPath(format!(
                "{} knots but {} points",
                self.knots.len(),
                self.points.len()
            )));
        }
        let dim = self.points[0].len();
        if dim == 0 {
            return Err(Error::InvalidPath("points must have dimension >= 1".into()));
        }
        for (i, p) in self.points.iter().enumerate() {
            if p.len() != dim {
                return Err(Error::InvalidPath(format!(
                    "points[{i}] has dimension {}, expected {dim}",
                    p.len()
                )));
            }
            if p.iter().any(|x| !x.is_finite()) {
                return Err(Error::InvalidPath(format!("points[{i}] is not finite")));
            }
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.points[0].len()
    }

    pub fn knots(&self) -> &[f64] {
        &self.knots
    }

    pub fn points(&self) -> &[Vec<f64>] {
        &self.points
    }

    pub fn eval(&self, t: f64) -> Vec<f64> {
        let (i, w) = locate(&self.knots, t);
        match w {
            None => self.points[i].clone(),
            Some(w) => self.points[i]
                .iter()
                .zip(&self.points[i + 1])
                .map(|(a, b)| a + w * (b - a))
                .collect(),
        }
    }

    /// Largest speed ‖ċ‖ over the linear pieces.
    pub fn max_speed(&self) -> f64 {
        self.knots
            .windows(2)
            .zip(self.points.windows(2))
            .map(|(t, p)| crate::geometry::distance(&p[0], &p[1]) / (t[1] - t[0]))
            .fold(0.0, f64::max)
    }

    pub fn rescaled(&self, time_scale: f64, value_scale: f64) -> PointPath {
        PointPath {
            knots: self.knots.iter().map(|t| t / time_scale).collect(),
            points: self
                .points
                .iter()
                .map(|p| p.iter().map(|x| x * value_scale).collect())
                .collect(),
        }
    }
}

/// Index of the piece containing `t` and the interpolation weight inside
/// it; `None` weight means `t` is clamped to knot `i`.
fn locate(knots: &[f64], t: f64) -> (usize, Option<f64>) {
    let n = knots.len();
    if n == 1 || t <= knots[0] {
        return (0, None);
    }
    if t >= knots[n - 1] {
        return (n - 1, None);
    }
    // First knot strictly greater than t.
    let hi = knots.partition_point(|&k| k <= t);
    let lo = hi - 1;
    let w = (t - knots[lo]) / (knots[hi] - knots[lo]);
    (lo, Some(w))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn eval_interpolates_and_clamps() {
        let p = Polyline::new(vec![0.0, 1.0, 3.0], vec![1.0, 2.0, 0.0]).unwrap();
        assert_eq!(p.eval(-1.0), 1.0);
        assert_eq!(p.eval(0.5), 1.5);
        assert_eq!(p.eval(2.0), 1.0);
        assert_eq!(p.eval(5.0), 0.0);
        assert_eq!(p.max_abs_slope(), 1.0);
    }

    #[test]
    fn rejects_bad_knots() {
        assert!(Polyline::new(vec![0.0, 0.0], vec![1.0, 1.0]).is_err());
        assert!(Polyline::new(vec![0.0, 1.0], vec![1.0]).is_err());
        assert!(Polyline::new(vec![0.0, 1.0], vec![1.0, f64::NAN]).is_err());
        assert!(PointPath::new(vec![0.0, 1.0], vec![vec![0.0], vec![0.0, 1.0]]).is_err());
    }

    #[test]
    fn refinement_preserves_the_function() {
        let p = Polyline::new(vec![0.0, 0.4, 1.0], vec![0.0, 2.0, -1.0]).unwrap();
        let r = p.refined(3);
        assert_eq!(r.knots().len(), 17);
        for i in 0..=100 {
            let t = i as f64 / 100.0;
            assert!((p.eval(t) - r.eval(t)).abs() < 1e-12);
        }
    }

    #[test]
    fn point_path_speed() {
        let p = PointPath::new(vec![0.0, 2.0], vec![vec![0.0, 0.0], vec![3.0, 4.0]]).unwrap();
        assert_eq!(p.max_speed(), 2.5);
        assert_eq!(p.eval(1.0), vec![1.5, 2.0]);
    }
}
