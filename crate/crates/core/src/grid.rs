//! Row-major raster containers.

use std::fmt;

/// A dense row-major grid. `GrayImage`, `BinaryMask` and the real-valued maps
/// (probabilities, distances) are all instances of this one type.
#[derive(Clone, PartialEq)]
pub struct Grid<T> {
    width: usize,
    height: usize,
    data: Vec<T>,
}

/// 8-bit intensity raster.
pub type GrayImage = Grid<u8>;

/// Single-class mask. `true` is foreground.
pub type BinaryMask = Grid<bool>;

/// 4-class artery/vein/disc label raster (0 background, 1 artery, 2 vein, 3 disc).
pub type LabelMask = Grid<u8>;

/// Offsets of the eight neighbours, clockwise starting north.
pub(crate) const NEIGHBOURS_8: [(isize, isize); 8] = [
    (0, -1),
    (1, -1),
    (1, 0),
    (1, 1),
    (0, 1),
    (-1, 1),
    (-1, 0),
    (-1, -1),
];

impl<T: Clone> Grid<T> {
    pub fn filled(width: usize, height: usize, value: T) -> Self {
        Grid { width, height, data: vec![value; width * height] }
    }
}

impl<T: Clone + Default> Grid<T> {
    pub fn new(width: usize, height: usize) -> Self {
        Self::filled(width, height, T::default())
    }
}

impl<T> Grid<T> {
    /// Wraps an existing buffer. Returns `None` if the length is not `width * height`.
    pub fn from_vec(width: usize, height: usize, data: Vec<T>) -> Option<Self> {
        (data.len() == width * height).then_some(Grid { width, height, data })
    }

    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> T) -> Self {
        let mut data = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                data.push(f(x, y));
            }
        }
        Grid { width, height, data }
    }

    #[inline]
    pub fn width(&self) -> usize {
        self.width
    }

    #[inline]
    pub fn height(&self) -> usize {
        self.height
    }

    #[inline]
    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.data.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    #[inline]
    pub fn as_slice(&self) -> &[T] {
        &self.data
    }

    #[inline]
    pub fn as_mut_slice(&mut self) -> &mut [T] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<T> {
        self.data
    }

    #[inline]
    pub fn index(&self, x: usize, y: usize) -> usize {
        debug_assert!(x < self.width && y < self.height);
        y * self.width + x
    }

    #[inline]
    pub fn in_bounds(&self, x: isize, y: isize) -> bool {
        x >= 0 && y >= 0 && (x as usize) < self.width && (y as usize) < self.height
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> &T {
        &self.data[y * self.width + x]
    }

    #[inline]
    pub fn get_mut(&mut self, x: usize, y: usize) -> &mut T {
        &mut self.data[y * self.width + x]
    }

    /// Bounds-checked access with signed coordinates.
    #[inline]
    pub fn get_signed(&self, x: isize, y: isize) -> Option<&T> {
        self.in_bounds(x, y).then(|| &self.data[y as usize * self.width + x as usize])
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, value: T) {
        let i = self.index(x, y);
        self.data[i] = value;
    }

    pub fn map<U>(&self, f: impl Fn(&T) -> U) -> Grid<U> {
        Grid { width: self.width, height: self.height, data: self.data.iter().map(f).collect() }
    }

    pub fn rows(&self) -> std::slice::ChunksExact<'_, T> {
        self.data.chunks_exact(self.width.max(1))
    }

    pub fn same_dims<U>(&self, other: &Grid<U>) -> bool {
        self.width == other.width && self.height == other.height
    }
}

impl<T: Copy> Grid<T> {
    #[inline]
    pub fn at(&self, x: usize, y: usize) -> T {
        self.data[y * self.width + x]
    }

    /// Mirror about the vertical axis.
    pub fn flip_horizontal(&self) -> Self {
        Grid::from_fn(self.width, self.height, |x, y| self.at(self.width - 1 - x, y))
    }

    /// Rotate 90 degrees clockwise: pixel (x, y) moves to (h - 1 - y, x).
    pub fn rotate90(&self) -> Self {
        let (w, h) = (self.width, self.height);
        Grid::from_fn(h, w, |nx, ny| self.at(ny, h - 1 - nx))
    }
}

impl Grid<bool> {
    pub fn count(&self) -> usize {
        self.data.iter().filter(|&&b| b).count()
    }

    pub fn any(&self) -> bool {
        self.data.iter().any(|&b| b)
    }

    /// Foreground pixel coordinates in raster order.
    pub fn foreground(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        let w = self.width;
        self.data.iter().enumerate().filter(|(_, &b)| b).map(move |(i, _)| (i % w, i / w))
    }

    pub fn union(&self, other: &BinaryMask) -> BinaryMask {
        assert!(self.same_dims(other), "mask dimensions differ");
        self.zip_with(other, |a, b| a || b)
    }

    pub fn intersection(&self, other: &BinaryMask) -> BinaryMask {
        assert!(self.same_dims(other), "mask dimensions differ");
        self.zip_with(other, |a, b| a && b)
    }

    pub fn difference(&self, other: &BinaryMask) -> BinaryMask {
        assert!(self.same_dims(other), "mask dimensions differ");
        self.zip_with(other, |a, b| a && !b)
    }

    /// `|self ∩ other|` without allocating.
    pub fn count_and(&self, other: &BinaryMask) -> usize {
        assert!(self.same_dims(other), "mask dimensions differ");
        self.data.iter().zip(&other.data).filter(|(&a, &b)| a && b).count()
    }

    /// `self ⊆ other`.
    pub fn is_subset_of(&self, other: &BinaryMask) -> bool {
        self.same_dims(other) && self.data.iter().zip(&other.data).all(|(&a, &b)| !a || b)
    }

    fn zip_with(&self, other: &BinaryMask, f: impl Fn(bool, bool) -> bool) -> BinaryMask {
        Grid {
            width: self.width,
            height: self.height,
            data: self.data.iter().zip(&other.data).map(|(&a, &b)| f(a, b)).collect(),
        }
    }

    /// Number of 8-neighbours set, treating out-of-bounds as background.
    #[inline]
    pub(crate) fn neighbour_count(&self, x: usize, y: usize) -> usize {
        NEIGHBOURS_8
            .iter()
            .filter(|(dx, dy)| {
                matches!(self.get_signed(x as isize + dx, y as isize + dy), Some(true))
            })
            .count()
    }

    /// Inclusive bounding box `(x0, y0, x1, y1)` of the foreground.
    pub fn bounding_box(&self) -> Option<(usize, usize, usize, usize)> {
        let mut bb: Option<(usize, usize, usize, usize)> = None;
        for (x, y) in self.foreground() {
            bb = Some(match bb {
                None => (x, y, x, y),
                Some((x0, y0, x1, y1)) => (x0.min(x), y0.min(y), x1.max(x), y1.max(y)),
            });
        }
        bb
    }
}

impl<T: fmt::Debug> fmt::Debug for Grid<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Grid")
            .field("width", &self.width)
            .field("height", &self.height)
            .finish_non_exhaustive()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rotate_and_flip() {
        let g = Grid::from_fn(3, 2, |x, y| (x + 10 * y) as u8);
        let r = g.rotate90();
        assert_eq!(r.dims(), (2, 3));
        // top-left of rotated is bottom-left of source
        assert_eq!(r.at(0, 0), 10);
        assert_eq!(r.at(1, 0), 0);
        assert_eq!(r.rotate90().rotate90().rotate90(), g);
        assert_eq!(g.flip_horizontal().at(0, 0), 2);
    }

    #[test]
    fn set_ops() {
        let a = Grid::from_fn(4, 4, |x, _| x < 2);
        let b = Grid::from_fn(4, 4, |_, y| y < 2);
        assert_eq!(a.count_and(&b), 4);
        assert_eq!(a.union(&b).count(), 12);
        assert_eq!(a.difference(&b).count(), 4);
        assert!(a.intersection(&b).is_subset_of(&a));
        assert_eq!(a.bounding_box(), Some((0, 0, 1, 3)));
        assert_eq!(Grid::<bool>::new(3, 3).bounding_box(), None);
    }
}
