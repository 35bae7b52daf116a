//! Lattice indices on Z^d, rectangles, dense grids and d-dimensional prefix sums.
//!
//! Indices are ordered coordinatewise for filtration purposes (`precedes`), while the
//! derived `Ord` is lexicographic and only used for deterministic storage order.
//! Dense arrays are row-major with the last axis varying fastest.

use std::fmt;
use std::ops::{Add, Index, Neg, Sub};

use crate::error::{Error, Result};

/// Largest supported ambient dimension.
pub const MAX_DIM: usize = 6;

/// Largest number of entries a dense grid may hold.
pub const MAX_ENTRIES: u64 = 1 << 31;

/// A point of Z^d with 1 <= d <= [`MAX_DIM`].
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct LatticeIndex {
    dim: u8,
    coords: [i32; MAX_DIM],
}

impl LatticeIndex {
    pub fn new(coords: &[i32]) -> Result<Self> {
        let d = coords.len();
        if d == 0 || d > MAX_DIM {
            return Err(Error::UnsupportedDimension(d));
        }
        let mut c = [0; MAX_DIM];
        c[..d].copy_from_slice(coords);
        Ok(Self { dim: d as u8, coords: c })
    }

    /// Constant index `(v, ..., v)`.
    pub fn splat(dim: usize, v: i32) -> Self {
        assert!((1..=MAX_DIM).contains(&dim), "unsupported dimension {dim}");
        let mut c = [0; MAX_DIM];
        c[..dim].iter_mut().for_each(|x| *x = v);
        Self { dim: dim as u8, coords: c }
    }

    pub fn zero(dim: usize) -> Self {
        Self::splat(dim, 0)
    }

    pub fn ones(dim: usize) -> Self {
        Self::splat(dim, 1)
    }

    /// Unit vector along `axis` (0-based).
    pub fn unit(dim: usize, axis: usize) -> Self {
        Self::zero(dim).with_coord(axis, 1)
    }

    pub fn dim(&self) -> usize {
        self.dim as usize
    }

    pub fn coords(&self) -> &[i32] {
        &self.coords[..self.dim as usize]
    }

    pub fn with_coord(mut self, axis: usize, v: i32) -> Self {
        assert!(axis < self.dim(), "axis {axis} out of range");
        self.coords[axis] = v;
        self
    }

    /// Coordinatewise order `self <= other`. Panics on dimension mismatch.
    pub fn precedes(&self, other: &Self) -> bool {
        assert_eq!(self.dim, other.dim, "dimension mismatch");
        self.coords().iter().zip(other.coords()).all(|(a, b)| a <= b)
    }

    /// Coordinatewise minimum.
    pub fn meet(&self, other: &Self) -> Self {
        self.zip_with(other, i32::min)
    }

    /// Coordinatewise maximum.
    pub fn join(&self, other: &Self) -> Self {
        self.zip_with(other, i32::max)
    }

    pub fn scale(&self, k: i32) -> Self {
        let mut out = *self;
        out.coords[..self.dim()].iter_mut().for_each(|x| *x *= k);
        out
    }

    /// `|n| = prod n_q`, as a float.
    pub fn volume(&self) -> f64 {
        self.coords().iter().map(|&x| x as f64).product()
    }

    fn zip_with(&self, other: &Self, op: impl Fn(i32, i32) -> i32) -> Self {
        assert_eq!(self.dim, other.dim, "dimension mismatch");
        let mut out = *self;
        for q in 0..self.dim() {
            out.coords[q] = op(self.coords[q], other.coords[q]);
        }
        out
    }
}

impl Index<usize> for LatticeIndex {
    type Output = i32;
    fn index(&self, q: usize) -> &i32 {
        &self.coords()[q]
    }
}

impl Add for LatticeIndex {
    type Output = LatticeIndex;
    fn add(self, rhs: Self) -> Self {
        self.zip_with(&rhs, |a, b| a + b)
    }
}

impl Sub for LatticeIndex {
    type Output = LatticeIndex;
    fn sub(self, rhs: Self) -> Self {
        self.zip_with(&rhs, |a, b| a - b)
    }
}

impl Neg for LatticeIndex {
    type Output = LatticeIndex;
    fn neg(self) -> Self {
        self.scale(-1)
    }
}

impl fmt::Debug for LatticeIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

impl fmt::Display for LatticeIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (k, c) in self.coords().iter().enumerate() {
            if k > 0 {
                write!(f, ",")?;
            }
            write!(f, "{c}")?;
        }
        write!(f, ")")
    }
}

/// Coordinatewise comparison `i <= j`.
pub fn leq(i: &LatticeIndex, j: &LatticeIndex) -> Result<bool> {
    if i.dim() != j.dim() {
        return Err(Error::DimensionMismatch { expected: i.dim(), found: j.dim() });
    }
    Ok(i.precedes(j))
}

/// The box `[lo, hi] = { i : lo <= i <= hi }`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Rectangle {
    lo: LatticeIndex,
    hi: LatticeIndex,
}

impl Rectangle {
    pub fn new(lo: LatticeIndex, hi: LatticeIndex) -> Result<Self> {
        if lo.dim() != hi.dim() {
            return Err(Error::DimensionMismatch { expected: lo.dim(), found: hi.dim() });
        }
        if !lo.precedes(&hi) {
            return Err(Error::EmptyRectangle);
        }
        let rect = Self { lo, hi };
        rect.checked_cardinality()?;
        Ok(rect)
    }

    /// `[1, n]`.
    pub fn from_extent(n: LatticeIndex) -> Result<Self> {
        Self::new(LatticeIndex::ones(n.dim()), n)
    }

    pub fn lo(&self) -> LatticeIndex {
        self.lo
    }

    pub fn hi(&self) -> LatticeIndex {
        self.hi
    }

    pub fn dim(&self) -> usize {
        self.lo.dim()
    }

    pub fn shape(&self) -> Vec<usize> {
        (0..self.dim()).map(|q| (self.hi[q] - self.lo[q] + 1) as usize).collect()
    }

    fn checked_cardinality(&self) -> Result<u64> {
        let mut n: u64 = 1;
        for q in 0..self.dim() {
            let side = (self.hi[q] as i64 - self.lo[q] as i64 + 1) as u64;
            n = n.checked_mul(side).filter(|&v| v <= MAX_ENTRIES).ok_or(Error::ExtentOverflow { cap: MAX_ENTRIES })?;
        }
        Ok(n)
    }

    pub fn cardinality(&self) -> usize {
        self.shape().iter().product()
    }

    pub fn contains(&self, i: &LatticeIndex) -> bool {
        i.dim() == self.dim() && self.lo.precedes(i) && i.precedes(&self.hi)
    }

    pub fn contains_rect(&self, other: &Rectangle) -> bool {
        self.contains(&other.lo) && self.contains(&other.hi)
    }

    /// Row-major strides (last axis fastest).
    pub fn strides(&self) -> Vec<usize> {
        let shape = self.shape();
        let mut strides = vec![1; shape.len()];
        for q in (0..shape.len().saturating_sub(1)).rev() {
            strides[q] = strides[q + 1] * shape[q + 1];
        }
        strides
    }

    pub fn flat_index(&self, i: &LatticeIndex) -> Option<usize> {
        if !self.contains(i) {
            return None;
        }
        let strides = self.strides();
        Some((0..self.dim()).map(|q| (i[q] - self.lo[q]) as usize * strides[q]).sum())
    }

    /// All points in row-major order.
    pub fn points(&self) -> RectPoints {
        RectPoints { rect: *self, next: Some(self.lo) }
    }
}

/// Row-major iterator over the points of a rectangle.
pub struct RectPoints {
    rect: Rectangle,
    next: Option<LatticeIndex>,
}

impl Iterator for RectPoints {
    type Item = LatticeIndex;

    fn next(&mut self) -> Option<LatticeIndex> {
        let cur = self.next?;
        let mut nxt = cur;
        let mut q = self.rect.dim();
        loop {
            if q == 0 {
                self.next = None;
                break;
            }
            q -= 1;
            if nxt[q] < self.rect.hi[q] {
                nxt.coords[q] += 1;
                self.next = Some(nxt);
                break;
            }
            nxt.coords[q] = self.rect.lo[q];
        }
        Some(cur)
    }
}

/// A dense real array over a rectangle.
#[derive(Clone, Debug, PartialEq)]
pub struct Grid {
    rect: Rectangle,
    values: Vec<f64>,
}

impl Grid {
    pub fn zeros(rect: Rectangle) -> Self {
        Self { rect, values: vec![0.0; rect.cardinality()] }
    }

    pub fn from_values(rect: Rectangle, values: Vec<f64>) -> Result<Self> {
        if values.len() != rect.cardinality() {
            return Err(Error::InvalidArgument(format!(
                "grid over {} points given {} values",
                rect.cardinality(),
                values.len()
            )));
        }
        Ok(Self { rect, values })
    }

    pub fn from_fn(rect: Rectangle, f: impl FnMut(LatticeIndex) -> f64) -> Self {
        Self { rect, values: rect.points().map(f).collect() }
    }

    pub fn rect(&self) -> &Rectangle {
        &self.rect
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn get(&self, i: &LatticeIndex) -> Option<f64> {
        self.rect.flat_index(i).map(|k| self.values[k])
    }
}

/// Accumulated sums: the entry at `m` is the sum of the source over `[lo, m]`.
#[derive(Clone, Debug, PartialEq)]
pub struct SummedAreaTable {
    grid: Grid,
}

/// Builds the summed-area table of `src` with one running-sum pass per axis.
pub fn prefix_sum(src: &Grid) -> SummedAreaTable {
    let mut grid = src.clone();
    let shape = grid.rect.shape();
    let strides = grid.rect.strides();
    let total = grid.values.len();
    for q in 0..shape.len() {
        let stride = strides[q];
        let span = shape[q] * stride;
        for block in (0..total).step_by(span) {
            for k in block + stride..block + span {
                grid.values[k] += grid.values[k - stride];
            }
        }
    }
    SummedAreaTable { grid }
}

impl SummedAreaTable {
    pub fn rect(&self) -> &Rectangle {
        &self.grid.rect
    }

    /// Accumulated values in row-major order.
    pub fn values(&self) -> &[f64] {
        &self.grid.values
    }

    /// Sum of the source over `[lo, m]`.
    pub fn at(&self, m: &LatticeIndex) -> Option<f64> {
        self.grid.get(m)
    }

    /// Sum over `rect` by 2^d-term inclusion-exclusion.
    pub fn rect_sum(&self, rect: &Rectangle) -> Result<f64> {
        let table = self.rect();
        if rect.dim() != table.dim() {
            return Err(Error::DimensionMismatch { expected: table.dim(), found: rect.dim() });
        }
        if !table.contains_rect(rect) {
            return Err(Error::OutOfBounds(format!("[{}, {}]", rect.lo(), rect.hi())));
        }
        let d = table.dim();
        let mut sum = 0.0;
        'corners: for mask in 0u32..(1 << d) {
            let mut corner = rect.hi();
            for q in 0..d {
                if mask & (1 << q) != 0 {
                    let c = rect.lo()[q] - 1;
                    if c < table.lo()[q] {
                        continue 'corners;
                    }
                    corner.coords[q] = c;
                }
            }
            let v = self.grid.get(&corner).expect("corner inside table");
            if mask.count_ones() % 2 == 0 {
                sum += v;
            } else {
                sum -= v;
            }
        }
        Ok(sum)
    }

    /// `max |entry|` over the whole table.
    pub fn max_abs(&self) -> f64 {
        self.grid.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn idx(c: &[i32]) -> LatticeIndex {
        LatticeIndex::new(c).unwrap()
    }

    #[test]
    fn coordinatewise_order() {
        assert!(leq(&idx(&[1, 2]), &idx(&[2, 2])).unwrap());
        assert!(!leq(&idx(&[1, 3]), &idx(&[2, 2])).unwrap());
        assert!(leq(&idx(&[0, 0]), &idx(&[0, 0])).unwrap());
        assert!(matches!(leq(&idx(&[0]), &idx(&[0, 0])), Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn rejects_bad_dimensions_and_empty_boxes() {
        assert!(LatticeIndex::new(&[]).is_err());
        assert!(LatticeIndex::new(&[0; 7]).is_err());
        assert_eq!(Rectangle::new(idx(&[2]), idx(&[1])), Err(Error::EmptyRectangle));
        let huge = Rectangle::new(idx(&[1, 1, 1]), idx(&[2000, 2000, 2000]));
        assert!(matches!(huge, Err(Error::ExtentOverflow { .. })));
    }

    #[test]
    fn points_are_row_major() {
        let r = Rectangle::new(idx(&[0, 1]), idx(&[1, 2])).unwrap();
        let pts: Vec<_> = r.points().collect();
        assert_eq!(pts, vec![idx(&[0, 1]), idx(&[0, 2]), idx(&[1, 1]), idx(&[1, 2])]);
        for (k, p) in pts.iter().enumerate() {
            assert_eq!(r.flat_index(p), Some(k));
        }
    }

    #[test]
    fn prefix_of_ones() {
        let rect = Rectangle::from_extent(idx(&[2, 2])).unwrap();
        let sat = prefix_sum(&Grid::from_fn(rect, |_| 1.0));
        assert_eq!(sat.values(), &[1.0, 2.0, 2.0, 4.0]);
        assert_eq!(sat.rect_sum(&rect).unwrap(), 4.0);
        let corner = Rectangle::new(idx(&[2, 2]), idx(&[2, 2])).unwrap();
        assert_eq!(sat.rect_sum(&corner).unwrap(), 1.0);
    }

    #[test]
    fn running_sum_in_one_dimension() {
        let rect = Rectangle::from_extent(idx(&[3])).unwrap();
        let sat = prefix_sum(&Grid::from_values(rect, vec![3.0, -1.0, 2.0]).unwrap());
        assert_eq!(sat.values(), &[3.0, 2.0, 4.0]);
    }

    #[test]
    fn single_spike() {
        let rect = Rectangle::from_extent(idx(&[2, 2])).unwrap();
        let src = Grid::from_fn(rect, |i| if i == idx(&[2, 1]) { 1.0 } else { 0.0 });
        // direct summation over [1, m]
        let expected: Vec<f64> = rect
            .points()
            .map(|m| rect.points().filter(|i| i.precedes(&m)).map(|i| src.get(&i).unwrap()).sum())
            .collect();
        assert_eq!(expected, vec![0.0, 0.0, 1.0, 1.0]);
        assert_eq!(prefix_sum(&src).values(), expected.as_slice());
    }

    #[test]
    fn rect_sum_out_of_bounds() {
        let rect = Rectangle::from_extent(idx(&[2, 2])).unwrap();
        let sat = prefix_sum(&Grid::zeros(rect));
        let outside = Rectangle::new(idx(&[0, 1]), idx(&[1, 1])).unwrap();
        assert!(matches!(sat.rect_sum(&outside), Err(Error::OutOfBounds(_))));
    }
}
