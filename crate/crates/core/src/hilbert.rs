//! Discretized L² space: grids with quadrature weights, curves on those grids,
//! and the weighted inner product `⟨f, g⟩ = Σ_i w_i f_i g_i`.
//!
//! Every curve holds an `Arc<Grid>`. Operations on two curves require the grids
//! to be the same object or numerically identical; nothing is ever resampled.

use std::io::{Read, Write};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{validation, Error, Result};

/// Relative tolerance used when two separately built grids are compared.
const GRID_MATCH_RTOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    points: Vec<f64>,
    weights: Vec<f64>,
}

impl Grid {
    /// Build a grid from explicit abscissae and quadrature weights.
    pub fn new(points: Vec<f64>, weights: Vec<f64>) -> Result<Self> {
        if points.len() != weights.len() {
            return validation(format!(
                "grid has {} points but {} weights",
                points.len(),
                weights.len()
            ));
        }
        if points.len() < 2 {
            return validation("grid needs at least 2 points");
        }
        if points.iter().chain(&weights).any(|v| !v.is_finite()) {
            return validation("grid contains non-finite values");
        }
        if points.windows(2).any(|w| w[1] <= w[0]) {
            return validation("grid points must be strictly increasing");
        }
        if weights.iter().any(|&w| w <= 0.0) {
            return validation("quadrature weights must be strictly positive");
        }
        Ok(Grid { points, weights })
    }

    /// Trapezoid weights for arbitrary (possibly non-uniform) increasing points.
    pub fn trapezoid(points: Vec<f64>) -> Result<Self> {
        if points.len() < 2 {
            return validation("grid needs at least 2 points");
        }
        let p = points.len();
        let mut weights = vec![0.0; p];
        for i in 0..p - 1 {
            let h = points[i + 1] - points[i];
            weights[i] += 0.5 * h;
            weights[i + 1] += 0.5 * h;
        }
        Grid::new(points, weights)
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Length of the domain, `b - a`.
    pub fn span(&self) -> f64 {
        self.points[self.points.len() - 1] - self.points[0]
    }

    /// Same abscissae exactly and weights within a relative 1e-12.
    pub fn matches(&self, other: &Grid) -> bool {
        self.points == other.points
            && self
                .weights
                .iter()
                .zip(&other.weights)
                .all(|(a, b)| (a - b).abs() <= GRID_MATCH_RTOL * a.abs().max(b.abs()))
    }
}

/// Uniform grid on `[a, b]` with `p` points and trapezoid weights
/// (`h/2` at the ends, `h` inside, `h = (b - a)/(p - 1)`).
pub fn make_trapezoid_grid(a: f64, b: f64, p: usize) -> Result<Grid> {
    if p < 2 {
        return validation(format!("need p >= 2 grid points, got {p}"));
    }
    if !(a.is_finite() && b.is_finite()) || a >= b {
        return validation(format!("need finite a < b, got a = {a}, b = {b}"));
    }
    let h = (b - a) / (p - 1) as f64;
    let points = (0..p)
        .map(|i| if i == p - 1 { b } else { a + h * i as f64 })
        .collect();
    let mut weights = vec![h; p];
    weights[0] = 0.5 * h;
    weights[p - 1] = 0.5 * h;
    Grid::new(points, weights)
}

/// A function sampled on a shared grid.
#[derive(Debug, Clone)]
pub struct Curve {
    grid: Arc<Grid>,
    values: Vec<f64>,
}

impl Curve {
    pub fn new(grid: Arc<Grid>, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return validation(format!(
                "curve has {} values but grid has {} points",
                values.len(),
                grid.len()
            ));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return validation("curve contains non-finite values");
        }
        Ok(Curve { grid, values })
    }

    pub fn zeros(grid: Arc<Grid>) -> Self {
        let values = vec![0.0; grid.len()];
        Curve { grid, values }
    }

    /// Sample `f` at every grid point.
    pub fn from_fn(grid: Arc<Grid>, f: impl Fn(f64) -> f64) -> Result<Self> {
        let values = grid.points().iter().map(|&t| f(t)).collect();
        Curve::new(grid, values)
    }

    pub(crate) fn from_parts_unchecked(grid: Arc<Grid>, values: Vec<f64>) -> Self {
        debug_assert_eq!(grid.len(), values.len());
        Curve { grid, values }
    }

    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn scale(&self, c: f64) -> Curve {
        let values = self.values.iter().map(|v| c * v).collect();
        Curve::from_parts_unchecked(self.grid.clone(), values)
    }

    /// `a·self + b·other`.
    pub fn axpby(&self, a: f64, other: &Curve, b: f64) -> Result<Curve> {
        check_same_grid(&self.grid, &other.grid)?;
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(x, y)| a * x + b * y)
            .collect();
        Ok(Curve::from_parts_unchecked(self.grid.clone(), values))
    }

    pub fn sub(&self, other: &Curve) -> Result<Curve> {
        self.axpby(1.0, other, -1.0)
    }
}

pub(crate) fn check_same_grid(a: &Arc<Grid>, b: &Arc<Grid>) -> Result<()> {
    if Arc::ptr_eq(a, b) || a.matches(b) {
        Ok(())
    } else {
        Err(Error::GridMismatch(format!(
            "grids differ ({} vs {} points)",
            a.len(),
            b.len()
        )))
    }
}

/// The space H realized on one grid.
#[derive(Debug, Clone)]
pub struct InnerProductSpace {
    grid: Arc<Grid>,
}

impl InnerProductSpace {
    pub fn new(grid: Arc<Grid>) -> Self {
        InnerProductSpace { grid }
    }

    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    pub fn inner_product(&self, f: &Curve, g: &Curve) -> Result<f64> {
        check_same_grid(&self.grid, f.grid())?;
        inner_product(f, g)
    }

    pub fn norm(&self, f: &Curve) -> Result<f64> {
        check_same_grid(&self.grid, f.grid())?;
        norm(f)
    }
}

/// `Σ_i w_i (f_i g_i)`, accumulated left to right. The product `f_i g_i` is formed
/// first so the result is bitwise symmetric in its arguments.
pub fn inner_product(f: &Curve, g: &Curve) -> Result<f64> {
    check_same_grid(f.grid(), g.grid())?;
    Ok(weighted_dot(f.grid().weights(), f.values(), g.values()))
}

pub fn norm(f: &Curve) -> Result<f64> {
    Ok(inner_product(f, f)?.sqrt())
}

pub(crate) fn weighted_dot(w: &[f64], f: &[f64], g: &[f64]) -> f64 {
    w.iter()
        .zip(f.iter().zip(g))
        .fold(0.0, |acc, (wi, (fi, gi))| acc + wi * (fi * gi))
}

/// Parse the curve-matrix CSV: first row holds grid points, each further row one
/// curve. Weights are trapezoid weights over the points.
pub fn read_curve_matrix<R: Read>(reader: R) -> Result<(Arc<Grid>, Vec<Curve>)> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let mut rows = Vec::new();
    for (lineno, record) in rdr.records().enumerate() {
        let record = record?;
        let row = record
            .iter()
            .map(|field| {
                field.parse::<f64>().map_err(|_| {
                    Error::Validation(format!("row {}: cannot parse {field:?}", lineno + 1))
                })
            })
            .collect::<Result<Vec<f64>>>()?;
        rows.push(row);
    }
    let mut rows = rows.into_iter();
    let points = rows
        .next()
        .ok_or_else(|| Error::Validation("curve file is empty".into()))?;
    let grid = Arc::new(Grid::trapezoid(points)?);
    let curves = rows
        .map(|values| Curve::new(grid.clone(), values))
        .collect::<Result<Vec<_>>>()?;
    Ok((grid, curves))
}

pub fn read_curve_matrix_path(path: &std::path::Path) -> Result<(Arc<Grid>, Vec<Curve>)> {
    read_curve_matrix(std::fs::File::open(path)?)
}

pub fn write_curve_matrix<W: Write>(writer: W, grid: &Grid, curves: &[Curve]) -> Result<()> {
    let mut wtr = csv::WriterBuilder::new().has_headers(false).from_writer(writer);
    wtr.write_record(grid.points().iter().map(|v| v.to_string()))?;
    for c in curves {
        wtr.write_record(c.values().iter().map(|v| v.to_string()))?;
    }
    wtr.flush()?;
    Ok(())
}
