//! Finite parameter grids: intervals, Cartesian products and explicit point lists.

use crate::error::{invalid, Result};

/// One axis of a product grid.
#[derive(Clone, Debug, PartialEq)]
pub struct Axis {
    pub label: String,
    pub values: Vec<f64>,
}

impl Axis {
    /// `points` equally spaced values from `lo` to `hi`, endpoints included.
    pub fn linspace(label: impl Into<String>, lo: f64, hi: f64, points: usize) -> Result<Self> {
        Ok(Axis { label: label.into(), values: linspace(lo, hi, points)? })
    }
}

/// Ordered, duplicate-free set of parameter vectors.
///
/// Points are strictly increasing in lexicographic order, and `spacing` is the
/// smallest distance between two distinct points (`f64::INFINITY` for one point).
#[derive(Clone, Debug, PartialEq)]
pub struct ParameterGrid {
    points: Vec<Vec<f64>>,
    spacing: f64,
    bounds: Vec<(f64, f64)>,
    labels: Vec<String>,
    axes: Option<Vec<Vec<f64>>>,
}

impl ParameterGrid {
    /// One-dimensional equally spaced grid on `[lo, hi]`.
    pub fn interval(lo: f64, hi: f64, points: usize) -> Result<Self> {
        Self::product(vec![Axis::linspace("theta", lo, hi, points)?])
    }

    /// Cartesian product of axes in lexicographic order (first axis varies slowest).
    pub fn product(axes: Vec<Axis>) -> Result<Self> {
        if axes.is_empty() {
            return Err(invalid("product grid needs at least one axis"));
        }
        let mut spacing = f64::INFINITY;
        for axis in &axes {
            check_increasing(&axis.values, &axis.label)?;
            for w in axis.values.windows(2) {
                spacing = spacing.min(w[1] - w[0]);
            }
        }
        let mut points: Vec<Vec<f64>> = vec![Vec::new()];
        for axis in &axes {
            points = points
                .into_iter()
                .flat_map(|prefix| {
                    axis.values.iter().map(move |&v| {
                        let mut p = prefix.clone();
                        p.push(v);
                        p
                    })
                })
                .collect();
        }
        let bounds = axes.iter().map(|a| (a.values[0], *a.values.last().unwrap())).collect();
        Ok(ParameterGrid {
            points,
            spacing,
            bounds,
            labels: axes.iter().map(|a| a.label.clone()).collect(),
            axes: Some(axes.into_iter().map(|a| a.values).collect()),
        })
    }

    /// Grid from explicit points, which must be strictly increasing lexicographically.
    pub fn from_points(points: Vec<Vec<f64>>, labels: Vec<String>) -> Result<Self> {
        let dim = points.first().map(Vec::len).ok_or_else(|| invalid("grid has no points"))?;
        if dim == 0 || points.iter().any(|p| p.len() != dim) {
            return Err(invalid("grid points must share a positive dimension"));
        }
        if points.iter().flatten().any(|v| !v.is_finite()) {
            return Err(invalid("grid points must be finite"));
        }
        for w in points.windows(2) {
            if lex_cmp(&w[0], &w[1]) != std::cmp::Ordering::Less {
                return Err(invalid("grid points must be strictly increasing in lexicographic order"));
            }
        }
        let labels = if labels.is_empty() { (0..dim).map(|k| format!("theta{k}")).collect() } else { labels };
        if labels.len() != dim {
            return Err(invalid("one label per coordinate is required"));
        }
        let mut spacing = f64::INFINITY;
        for i in 0..points.len() {
            for j in i + 1..points.len() {
                spacing = spacing.min(distance(&points[i], &points[j]));
            }
        }
        let bounds = (0..dim)
            .map(|k| {
                points.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), p| (lo.min(p[k]), hi.max(p[k])))
            })
            .collect();
        Ok(ParameterGrid { points, spacing, bounds, labels, axes: None })
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.points[0].len()
    }

    pub fn point(&self, j: usize) -> &[f64] {
        &self.points[j]
    }

    pub fn points(&self) -> &[Vec<f64>] {
        &self.points
    }

    /// Minimum pairwise distance between distinct points.
    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    /// Closed box `[lo_k, hi_k]` per coordinate.
    pub fn bounds(&self) -> &[(f64, f64)] {
        &self.bounds
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    /// Axis values if the grid was built as a Cartesian product.
    pub fn axes(&self) -> Option<&[Vec<f64>]> {
        self.axes.as_deref()
    }

    /// Whether `theta` lies in the bounding box (with a relative slack of 1e-12).
    pub fn contains(&self, theta: &[f64]) -> bool {
        theta.len() == self.dim()
            && theta.iter().zip(&self.bounds).all(|(&t, &(lo, hi))| {
                let slack = 1e-12 * (1.0 + lo.abs().max(hi.abs()));
                t >= lo - slack && t <= hi + slack
            })
    }

    /// Index of the grid point closest to `theta`; ties go to the lower index.
    pub fn nearest_index(&self, theta: &[f64]) -> usize {
        let mut best = 0;
        let mut best_d = f64::INFINITY;
        for (j, p) in self.points.iter().enumerate() {
            let d = p.iter().zip(theta).map(|(a, b)| (a - b) * (a - b)).sum::<f64>();
            if d < best_d {
                best_d = d;
                best = j;
            }
        }
        best
    }
}

pub(crate) fn linspace(lo: f64, hi: f64, points: usize) -> Result<Vec<f64>> {
    if points == 0 {
        return Err(invalid("an axis needs at least one point"));
    }
    if !(lo.is_finite() && hi.is_finite()) {
        return Err(invalid("axis bounds must be finite"));
    }
    if points == 1 {
        return Ok(vec![lo]);
    }
    if lo >= hi {
        return Err(invalid(format!("axis needs lo < hi, got [{lo}, {hi}]")));
    }
    let step = (hi - lo) / (points - 1) as f64;
    Ok((0..points).map(|k| if k == points - 1 { hi } else { lo + step * k as f64 }).collect())
}

fn check_increasing(values: &[f64], label: &str) -> Result<()> {
    if values.is_empty() {
        return Err(invalid(format!("axis `{label}` is empty")));
    }
    if values.iter().any(|v| !v.is_finite()) || values.windows(2).any(|w| w[0] >= w[1]) {
        return Err(invalid(format!("axis `{label}` must be finite and strictly increasing")));
    }
    Ok(())
}

fn lex_cmp(a: &[f64], b: &[f64]) -> std::cmp::Ordering {
    for (x, y) in a.iter().zip(b) {
        match x.partial_cmp(y).unwrap_or(std::cmp::Ordering::Equal) {
            std::cmp::Ordering::Equal => continue,
            other => return other,
        }
    }
    std::cmp::Ordering::Equal
}

fn distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn interval_grid_has_endpoints_and_spacing() {
        let g = ParameterGrid::interval(0.0, 1.0, 5).unwrap();
        assert_eq!(g.len(), 5);
        assert_eq!(g.point(0), &[0.0]);
        assert_eq!(g.point(4), &[1.0]);
        assert_eq!(g.spacing(), 0.25);
    }

    #[test]
    fn single_point_grid() {
        let g = ParameterGrid::interval(0.3, 0.3, 1).unwrap();
        assert_eq!(g.len(), 1);
        assert!(g.spacing().is_infinite());
    }

    #[test]
    fn product_is_lexicographic() {
        let g = ParameterGrid::product(vec![
            Axis::linspace("a", 0.0, 1.0, 2).unwrap(),
            Axis::linspace("b", 0.0, 2.0, 3).unwrap(),
        ])
        .unwrap();
        assert_eq!(g.len(), 6);
        assert_eq!(g.point(1), &[0.0, 1.0]);
        assert_eq!(g.point(3), &[1.0, 0.0]);
        assert_eq!(g.spacing(), 1.0);
    }

    #[test]
    fn rejects_unsorted_points() {
        assert!(ParameterGrid::from_points(vec![vec![1.0], vec![0.0]], vec![]).is_err());
        assert!(ParameterGrid::from_points(vec![vec![0.0], vec![0.0]], vec![]).is_err());
        assert!(ParameterGrid::interval(1.0, 0.0, 3).is_err());
        assert!(ParameterGrid::interval(0.0, 1.0, 0).is_err());
    }

    #[test]
    fn nearest_ties_to_lower_index() {
        let g = ParameterGrid::interval(0.0, 1.0, 3).unwrap();
        assert_eq!(g.nearest_index(&[0.25]), 0);
        assert_eq!(g.nearest_index(&[0.26]), 1);
        assert_eq!(g.nearest_index(&[7.0]), 2);
    }
}
