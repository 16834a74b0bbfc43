//! Problem definitions: parameter spaces, black boxes, and initialization.
//!
//! All optimization-facing code works in the normalized unit cube; a
//! [`ParameterSpace`] provides the affine maps between original units and
//! `[0, 1]^d`. Black boxes evaluate in original units. Candidate sets are
//! finite: either the lattice induced by the space's per-dimension resolution
//! or, for table-backed problems, the exact grid loaded from disk.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::fs;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ProblemError {
    #[error("expected {expected} coordinates, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("coordinate {axis} = {value} lies outside [{lower}, {upper})")]
    OutOfDomain {
        axis: usize,
        value: f64,
        lower: f64,
        upper: f64,
    },
    #[error("location is not a point of the loaded grid")]
    OffGrid,
    #[error("{path}:{line}: {message}")]
    Parse {
        path: String,
        line: usize,
        message: String,
    },
    #[error("invalid parameter space: {0}")]
    InvalidSpace(String),
    #[error("invalid noise specification: {0}")]
    InvalidNoise(String),
}

/// Whether larger or smaller raw outputs are better.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Direction {
    Maximize,
    Minimize,
}

/// A black-box objective evaluated in original units.
pub trait BlackBox {
    fn dim(&self) -> usize;

    /// The problem's natural optimization direction.
    fn direction(&self) -> Direction;

    fn eval(&self, x: &[f64]) -> Result<f64, ProblemError>;

    /// Exact candidate set in original units for table-backed problems.
    /// `None` means any point inside the bounds is evaluable.
    fn candidates(&self) -> Option<&[Vec<f64>]> {
        None
    }
}

impl<B: BlackBox + ?Sized> BlackBox for Box<B> {
    fn dim(&self) -> usize {
        (**self).dim()
    }

    fn direction(&self) -> Direction {
        (**self).direction()
    }

    fn eval(&self, x: &[f64]) -> Result<f64, ProblemError> {
        (**self).eval(x)
    }

    fn candidates(&self) -> Option<&[Vec<f64>]> {
        (**self).candidates()
    }
}

// ---- Parameter space ----

/// Axis-aligned box domain with a per-dimension lattice resolution.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParameterSpace {
    bounds: Vec<(f64, f64)>,
    resolution: Vec<usize>,
}

impl ParameterSpace {
    pub fn new(bounds: Vec<(f64, f64)>, resolution: Vec<usize>) -> Result<Self, ProblemError> {
        if bounds.is_empty() {
            return Err(ProblemError::InvalidSpace("no dimensions".into()));
        }
        if bounds.len() != resolution.len() {
            return Err(ProblemError::InvalidSpace(format!(
                "{} bounds but {} resolutions",
                bounds.len(),
                resolution.len()
            )));
        }
        for (m, &(lo, hi)) in bounds.iter().enumerate() {
            if !lo.is_finite() || !hi.is_finite() || lo >= hi {
                return Err(ProblemError::InvalidSpace(format!(
                    "axis {m} bounds [{lo}, {hi}] must be finite with lower < upper"
                )));
            }
        }
        if let Some(m) = resolution.iter().position(|&r| r == 0) {
            return Err(ProblemError::InvalidSpace(format!(
                "axis {m} resolution must be at least 1"
            )));
        }
        Ok(Self { bounds, resolution })
    }

    /// Same bounds on every axis is common enough to deserve a shorthand.
    pub fn uniform(dim: usize, lo: f64, hi: f64, resolution: usize) -> Result<Self, ProblemError> {
        Self::new(vec![(lo, hi); dim], vec![resolution; dim])
    }

    pub fn dim(&self) -> usize {
        self.bounds.len()
    }

    pub fn bounds(&self) -> &[(f64, f64)] {
        &self.bounds
    }

    pub fn resolution(&self) -> &[usize] {
        &self.resolution
    }

    fn check_dim(&self, x: &[f64]) -> Result<(), ProblemError> {
        if x.len() != self.dim() {
            return Err(ProblemError::DimensionMismatch {
                expected: self.dim(),
                got: x.len(),
            });
        }
        Ok(())
    }

    /// Original units to the unit cube.
    pub fn to_norm(&self, x: &[f64]) -> Result<Vec<f64>, ProblemError> {
        self.check_dim(x)?;
        Ok(x.iter()
            .zip(&self.bounds)
            .map(|(&v, &(lo, hi))| (v - lo) / (hi - lo))
            .collect())
    }

    /// Unit cube back to original units.
    pub fn from_norm(&self, u: &[f64]) -> Result<Vec<f64>, ProblemError> {
        self.check_dim(u)?;
        Ok(u.iter()
            .zip(&self.bounds)
            .map(|(&v, &(lo, hi))| lo + v * (hi - lo))
            .collect())
    }

    /// Normalized candidate lattice: cell centers, row-major with the last
    /// axis fastest. Centers keep candidates strictly inside half-open
    /// domains. Exactly `prod(resolution)` points.
    pub fn grid_norm(&self) -> Vec<Vec<f64>> {
        let total: usize = self.resolution.iter().product();
        let mut out = Vec::with_capacity(total);
        let mut idx = vec![0usize; self.dim()];
        for _ in 0..total {
            out.push(
                idx.iter()
                    .zip(&self.resolution)
                    .map(|(&i, &r)| (i as f64 + 0.5) / r as f64)
                    .collect(),
            );
            for m in (0..self.dim()).rev() {
                idx[m] += 1;
                if idx[m] < self.resolution[m] {
                    break;
                }
                idx[m] = 0;
            }
        }
        out
    }
}

// ---- Branin benchmark ----

pub const BRANIN_LOWER: f64 = -5.0;
pub const BRANIN_UPPER: f64 = 15.0;

/// The three global minimizers of [`branin`], original units.
pub const BRANIN_OPTIMA: [[f64; 2]; 3] = [
    [-PI, 12.275],
    [PI, 2.275],
    [9.42478, 2.475],
];

/// Branin function on `[-5, 15) x [-5, 15)`; three global minima of value
/// ~0.397887.
pub fn branin(x1: f64, x2: f64) -> Result<f64, ProblemError> {
    for (axis, v) in [x1, x2].into_iter().enumerate() {
        if !(BRANIN_LOWER..BRANIN_UPPER).contains(&v) {
            return Err(ProblemError::OutOfDomain {
                axis,
                value: v,
                lower: BRANIN_LOWER,
                upper: BRANIN_UPPER,
            });
        }
    }
    let a = 1.0;
    let b = 5.1 / (4.0 * PI * PI);
    let c = 5.0 / PI;
    let r = 6.0;
    let s = 10.0;
    let t = 1.0 / (8.0 * PI);
    Ok(a * (x2 - b * x1 * x1 + c * x1 - r).powi(2) + s * (1.0 - t) * x1.cos() + s)
}

/// Branin as a black box, optionally negated so the engine's maximization
/// benchmark hunts the three minima as peaks.
#[derive(Debug, Clone)]
pub struct BraninBox {
    negate: bool,
}

impl BraninBox {
    pub fn minimize() -> Self {
        Self { negate: false }
    }

    pub fn maximize_negated() -> Self {
        Self { negate: true }
    }

    pub fn space(resolution: usize) -> Result<ParameterSpace, ProblemError> {
        ParameterSpace::uniform(2, BRANIN_LOWER, BRANIN_UPPER, resolution)
    }
}

impl BlackBox for BraninBox {
    fn dim(&self) -> usize {
        2
    }

    fn direction(&self) -> Direction {
        if self.negate {
            Direction::Maximize
        } else {
            Direction::Minimize
        }
    }

    fn eval(&self, x: &[f64]) -> Result<f64, ProblemError> {
        if x.len() != 2 {
            return Err(ProblemError::DimensionMismatch {
                expected: 2,
                got: x.len(),
            });
        }
        let v = branin(x[0], x[1])?;
        Ok(if self.negate { -v } else { v })
    }
}

// ---- Closure-backed black box ----

/// Adapter for analytic test problems.
pub struct FnBlackBox<F> {
    dim: usize,
    direction: Direction,
    f: F,
}

impl<F: Fn(&[f64]) -> f64> FnBlackBox<F> {
    pub fn new(dim: usize, direction: Direction, f: F) -> Self {
        Self { dim, direction, f }
    }
}

impl<F: Fn(&[f64]) -> f64> BlackBox for FnBlackBox<F> {
    fn dim(&self) -> usize {
        self.dim
    }

    fn direction(&self) -> Direction {
        self.direction
    }

    fn eval(&self, x: &[f64]) -> Result<f64, ProblemError> {
        if x.len() != self.dim {
            return Err(ProblemError::DimensionMismatch {
                expected: self.dim,
                got: x.len(),
            });
        }
        Ok((self.f)(x))
    }
}

// ---- Grid-backed black box ----

/// Lookup table over a complete rectangular grid loaded from CSV.
#[derive(Debug, Clone)]
pub struct GridBlackBox {
    axes: Vec<Vec<f64>>,
    points: Vec<Vec<f64>>,
    values: Vec<f64>,
    index: HashMap<Vec<u64>, usize>,
    direction: Direction,
}

fn bits_key(x: &[f64]) -> Vec<u64> {
    x.iter().map(|v| v.to_bits()).collect()
}

/// Loads `x1,...,xd,y` CSV rows into a [`GridBlackBox`]. The rows must form a
/// complete rectangular grid (every combination of the per-axis values, each
/// exactly once); order on disk does not matter.
pub fn load_grid_blackbox<P: AsRef<Path>>(path: P) -> Result<GridBlackBox, ProblemError> {
    let path_str = path.as_ref().display().to_string();
    let parse_err = |line: usize, message: String| ProblemError::Parse {
        path: path_str.clone(),
        line,
        message,
    };
    let text = fs::read_to_string(path.as_ref())
        .map_err(|e| parse_err(0, format!("cannot read file: {e}")))?;

    let mut lines = text.lines().enumerate();
    let (_, header) = lines
        .next()
        .ok_or_else(|| parse_err(1, "empty file".into()))?;
    let fields: Vec<&str> = header.split(',').map(str::trim).collect();
    if fields.len() < 2 || fields.last() != Some(&"y") {
        return Err(parse_err(1, "header must be x1,...,xd,y".into()));
    }
    let dim = fields.len() - 1;
    for (m, f) in fields[..dim].iter().enumerate() {
        if *f != format!("x{}", m + 1) {
            return Err(parse_err(1, format!("header column {} must be x{}", m + 1, m + 1)));
        }
    }

    let mut rows: Vec<(usize, Vec<f64>, f64)> = Vec::new();
    let mut seen: HashMap<Vec<u64>, usize> = HashMap::new();
    for (i, line) in lines {
        let lineno = i + 1;
        if line.trim().is_empty() {
            continue;
        }
        let cells: Vec<&str> = line.split(',').map(str::trim).collect();
        if cells.len() != dim + 1 {
            return Err(parse_err(
                lineno,
                format!("expected {} fields, got {}", dim + 1, cells.len()),
            ));
        }
        let mut nums = Vec::with_capacity(dim + 1);
        for cell in &cells {
            let v: f64 = cell
                .parse()
                .map_err(|_| parse_err(lineno, format!("not a number: {cell:?}")))?;
            if !v.is_finite() {
                return Err(parse_err(lineno, format!("non-finite value: {cell:?}")));
            }
            nums.push(v);
        }
        let y = nums.pop().expect("dim + 1 fields parsed");
        if let Some(&first) = seen.get(&bits_key(&nums)) {
            return Err(parse_err(
                lineno,
                format!("duplicate grid point, first seen on line {first}"),
            ));
        }
        seen.insert(bits_key(&nums), lineno);
        rows.push((lineno, nums, y));
    }
    if rows.is_empty() {
        return Err(parse_err(1, "no data rows".into()));
    }

    let mut axes: Vec<Vec<f64>> = vec![Vec::new(); dim];
    for (_, coords, _) in &rows {
        for (m, &v) in coords.iter().enumerate() {
            if !axes[m].contains(&v) {
                axes[m].push(v);
            }
        }
    }
    for axis in &mut axes {
        axis.sort_by(|a, b| a.partial_cmp(b).expect("finite coordinates"));
    }
    let total: usize = axes.iter().map(Vec::len).product();
    if rows.len() != total {
        return Err(parse_err(
            0,
            format!(
                "grid is incomplete: {} rows but the per-axis values imply {}",
                rows.len(),
                total
            ),
        ));
    }

    // Distinct rows drawn from the axis products, with the counts matching,
    // means every lattice point is present exactly once. Reorder into
    // row-major lattice order (last axis fastest).
    let mut strides = vec![1usize; dim];
    for m in (0..dim.saturating_sub(1)).rev() {
        strides[m] = strides[m + 1] * axes[m + 1].len();
    }
    let mut points = vec![Vec::new(); total];
    let mut values = vec![0.0; total];
    for (_, coords, y) in rows {
        let mut flat = 0;
        for (m, &v) in coords.iter().enumerate() {
            let pos = axes[m]
                .iter()
                .position(|&a| a == v)
                .expect("coordinate collected into axis values");
            flat += pos * strides[m];
        }
        points[flat] = coords;
        values[flat] = y;
    }
    let index = points
        .iter()
        .enumerate()
        .map(|(i, p)| (bits_key(p), i))
        .collect();

    Ok(GridBlackBox {
        axes,
        points,
        values,
        index,
        direction: Direction::Minimize,
    })
}

impl GridBlackBox {
    pub fn with_direction(mut self, direction: Direction) -> Self {
        self.direction = direction;
        self
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Space spanned by the grid; resolution mirrors the per-axis value
    /// counts. Fails on an axis with a single value (no extent to normalize).
    pub fn space(&self) -> Result<ParameterSpace, ProblemError> {
        let bounds = self
            .axes
            .iter()
            .map(|a| (*a.first().expect("non-empty axis"), *a.last().expect("non-empty axis")))
            .collect();
        let resolution = self.axes.iter().map(Vec::len).collect();
        ParameterSpace::new(bounds, resolution)
    }
}

impl BlackBox for GridBlackBox {
    fn dim(&self) -> usize {
        self.axes.len()
    }

    fn direction(&self) -> Direction {
        self.direction
    }

    fn eval(&self, x: &[f64]) -> Result<f64, ProblemError> {
        if x.len() != self.dim() {
            return Err(ProblemError::DimensionMismatch {
                expected: self.dim(),
                got: x.len(),
            });
        }
        self.index
            .get(&bits_key(x))
            .map(|&i| self.values[i])
            .ok_or(ProblemError::OffGrid)
    }

    fn candidates(&self) -> Option<&[Vec<f64>]> {
        Some(&self.points)
    }
}

// ---- Deterministic noise wrapper ----

/// Axis-aligned box in normalized space where noise behaves differently:
/// a constant bias (for planting fake optima) plus its own gaussian sigma.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseRegion {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
    pub sigma: f64,
    pub bias: f64,
}

impl NoiseRegion {
    fn contains(&self, u: &[f64]) -> bool {
        u.iter()
            .enumerate()
            .all(|(m, &v)| v >= self.lo[m] && v <= self.hi[m])
    }
}

/// Synthetic noise layered over a base box. Draws are keyed by
/// `(seed, location)`, so re-evaluating a location reproduces the same value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseSpec {
    #[serde(default)]
    pub global_sigma: f64,
    #[serde(default)]
    pub regions: Vec<NoiseRegion>,
    #[serde(default)]
    pub seed: u64,
}

pub struct NoisyBlackBox<B> {
    base: B,
    spec: NoiseSpec,
    space: ParameterSpace,
}

/// Wraps `base` with the noise model in `spec`. Regions live in normalized
/// space, so the wrapper needs the space that defines the normalization.
pub fn with_noise<B: BlackBox>(
    base: B,
    spec: NoiseSpec,
    space: ParameterSpace,
) -> Result<NoisyBlackBox<B>, ProblemError> {
    if space.dim() != base.dim() {
        return Err(ProblemError::InvalidNoise(format!(
            "space has {} dimensions, base box has {}",
            space.dim(),
            base.dim()
        )));
    }
    if !(spec.global_sigma.is_finite() && spec.global_sigma >= 0.0) {
        return Err(ProblemError::InvalidNoise(format!(
            "global_sigma = {} must be finite and non-negative",
            spec.global_sigma
        )));
    }
    for (i, region) in spec.regions.iter().enumerate() {
        if region.lo.len() != base.dim() || region.hi.len() != base.dim() {
            return Err(ProblemError::InvalidNoise(format!(
                "region {i} bounds must have {} coordinates",
                base.dim()
            )));
        }
        if !(region.sigma.is_finite() && region.sigma >= 0.0 && region.bias.is_finite()) {
            return Err(ProblemError::InvalidNoise(format!(
                "region {i} sigma/bias must be finite with sigma >= 0"
            )));
        }
        if region.lo.iter().zip(&region.hi).any(|(lo, hi)| lo > hi) {
            return Err(ProblemError::InvalidNoise(format!(
                "region {i} has lo > hi"
            )));
        }
    }
    Ok(NoisyBlackBox { base, spec, space })
}

pub(crate) fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

fn location_key(seed: u64, x: &[f64]) -> u64 {
    let mut h = splitmix64(seed);
    for &v in x {
        h = splitmix64(h ^ v.to_bits());
    }
    h
}

impl<B: BlackBox> BlackBox for NoisyBlackBox<B> {
    fn dim(&self) -> usize {
        self.base.dim()
    }

    fn direction(&self) -> Direction {
        self.base.direction()
    }

    fn eval(&self, x: &[f64]) -> Result<f64, ProblemError> {
        let base = self.base.eval(x)?;
        let u = self.space.to_norm(x)?;
        let (sigma, bias) = self
            .spec
            .regions
            .iter()
            .find(|r| r.contains(&u))
            .map_or((self.spec.global_sigma, 0.0), |r| (r.sigma, r.bias));
        let noise = if sigma > 0.0 {
            let mut rng = ChaCha8Rng::seed_from_u64(location_key(self.spec.seed, x));
            let z: f64 = StandardNormal.sample(&mut rng);
            sigma * z
        } else {
            0.0
        };
        Ok(base + bias + noise)
    }

    fn candidates(&self) -> Option<&[Vec<f64>]> {
        self.base.candidates()
    }
}

// ---- Initialization sampling ----

/// Latin hypercube sample in the unit cube: per dimension, exactly one point
/// in each of the `count` equal-width strata, with seeded stratum pairing and
/// a seeded uniform position inside each stratum.
pub fn lhs_sample(count: usize, space: &ParameterSpace, seed: u64) -> Vec<Vec<f64>> {
    let dim = space.dim();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = vec![vec![0.0; dim]; count];
    for m in 0..dim {
        let mut strata: Vec<usize> = (0..count).collect();
        strata.shuffle(&mut rng);
        for (row, &stratum) in out.iter_mut().zip(&strata) {
            let u: f64 = rng.random();
            row[m] = (stratum as f64 + u) / count as f64;
        }
    }
    out
}

/// Plain seeded uniform sample in the unit cube.
pub fn uniform_sample(count: usize, space: &ParameterSpace, seed: u64) -> Vec<Vec<f64>> {
    let dim = space.dim();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| (0..dim).map(|_| rng.random()).collect())
        .collect()
}
