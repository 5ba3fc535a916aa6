use std::collections::VecDeque;

use crate::error::{Error, Result};
use crate::maskio::BinaryMask;

/// Offsets of the 8-neighborhood as (d_row, d_col).
pub(crate) const NEIGHBORS_8: [(i64, i64); 8] = [(-1, -1), (-1, 0), (-1, 1), (0, -1), (0, 1), (1, -1), (1, 0), (1, 1)];

/// A maximal 8-connected set of foreground pixels.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Component {
    /// (row, col) in row-major order.
    pixels: Vec<(usize, usize)>,
    row_min: usize,
    col_min: usize,
    row_max: usize,
    col_max: usize,
}

impl Component {
    /// Wraps a nonempty pixel set. Connectivity is not checked.
    ///
    /// Panics if `pixels` is empty.
    pub fn from_pixels(mut pixels: Vec<(usize, usize)>) -> Self {
        assert!(!pixels.is_empty(), "component must have at least one pixel");
        pixels.sort_unstable();
        pixels.dedup();
        let row_min = pixels[0].0;
        let row_max = pixels[pixels.len() - 1].0;
        let col_min = pixels.iter().map(|p| p.1).min().unwrap();
        let col_max = pixels.iter().map(|p| p.1).max().unwrap();
        Self {
            pixels,
            row_min,
            col_min,
            row_max,
            col_max,
        }
    }

    pub fn pixels(&self) -> &[(usize, usize)] {
        &self.pixels
    }

    pub fn area(&self) -> usize {
        self.pixels.len()
    }

    /// Inclusive (row_min, col_min, row_max, col_max).
    pub fn bounds(&self) -> (usize, usize, usize, usize) {
        (self.row_min, self.col_min, self.row_max, self.col_max)
    }

    pub fn contains(&self, row: usize, col: usize) -> bool {
        self.pixels.binary_search(&(row, col)).is_ok()
    }

    /// Ordering key: (min row, min col, first pixel).
    fn order_key(&self) -> (usize, usize, (usize, usize)) {
        (self.row_min, self.col_min, self.pixels[0])
    }

    /// The component alone on a raster of its bounding box grown by `pad`
    /// pixels per side. Local (r, c) is global (r + row_min - pad, c + col_min - pad).
    pub(crate) fn local_mask(&self, pad: usize) -> BinaryMask {
        let w = self.col_max - self.col_min + 1 + 2 * pad;
        let h = self.row_max - self.row_min + 1 + 2 * pad;
        let local: Vec<_> = self
            .pixels
            .iter()
            .map(|&(r, c)| (r - self.row_min + pad, c - self.col_min + pad))
            .collect();
        BinaryMask::from_pixels(w, h, &local)
    }
}

/// Partitions the foreground into maximal 8-connected components, ordered
/// by (min row, min col).
pub fn connected_components(mask: &BinaryMask) -> Vec<Component> {
    let (w, h) = (mask.width(), mask.height());
    let mut visited = vec![false; w * h];
    let mut queue = VecDeque::new();
    let mut components = Vec::new();

    for start in 0..w * h {
        if visited[start] || !mask.bits()[start] {
            continue;
        }
        visited[start] = true;
        queue.push_back(start);
        let mut pixels = Vec::new();
        while let Some(i) = queue.pop_front() {
            let (r, c) = ((i / w) as i64, (i % w) as i64);
            pixels.push((r as usize, c as usize));
            for (dr, dc) in NEIGHBORS_8 {
                let (nr, nc) = (r + dr, c + dc);
                if mask.get_signed(nr, nc) {
                    let j = nr as usize * w + nc as usize;
                    if !visited[j] {
                        visited[j] = true;
                        queue.push_back(j);
                    }
                }
            }
        }
        components.push(Component::from_pixels(pixels));
    }
    components.sort_by_key(Component::order_key);
    components
}

/// Index of the component with the most pixels; ties go to the earlier one.
pub(crate) fn largest_index(comps: &[Component]) -> Option<usize> {
    let mut best: Option<usize> = None;
    for (i, c) in comps.iter().enumerate() {
        if best.is_none_or(|b| c.area() > comps[b].area()) {
            best = Some(i);
        }
    }
    best
}

/// The component with the most pixels; ties go to the earlier one in
/// (min row, min col) order.
pub fn largest_component(mask: &BinaryMask) -> Result<Component> {
    let mut comps = connected_components(mask);
    let best = largest_index(&comps).ok_or(Error::EmptyMask)?;
    Ok(comps.swap_remove(best))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn diagonal_pixels_join() {
        let m = BinaryMask::from_pixels(3, 3, &[(0, 0), (1, 1)]);
        assert_eq!(connected_components(&m).len(), 1);
    }

    #[test]
    fn gap_column_separates() {
        let m = BinaryMask::from_pixels(3, 1, &[(0, 0), (0, 2)]);
        assert_eq!(connected_components(&m).len(), 2);
    }

    #[test]
    fn checkerboard_corners_and_center() {
        let m = BinaryMask::from_pixels(3, 3, &[(0, 0), (0, 2), (1, 1), (2, 0), (2, 2)]);
        let cs = connected_components(&m);
        assert_eq!(cs.len(), 1);
        assert_eq!(cs[0].area(), 5);
    }

    #[test]
    fn empty_mask() {
        let m = BinaryMask::new(4, 4).unwrap();
        assert!(connected_components(&m).is_empty());
        assert!(matches!(largest_component(&m), Err(Error::EmptyMask)));
    }

    #[test]
    fn largest_and_tie_break() {
        let single = BinaryMask::from_fn(5, 5, |r, c| (1..4).contains(&r) && (1..4).contains(&c));
        assert_eq!(largest_component(&single).unwrap().area(), 9);

        let mut px: Vec<_> = (0..5).map(|c| (0, c)).collect();
        px.extend((0..3).map(|c| (4, c)));
        let m = BinaryMask::from_pixels(6, 6, &px);
        assert_eq!(largest_component(&m).unwrap().area(), 5);

        // Two 2x2 blobs, rows 0-1 and rows 6-7; the lower one is listed
        // first in the pixel array to make sure order comes from geometry.
        let m = BinaryMask::from_pixels(4, 8, &[(6, 0), (6, 1), (7, 0), (7, 1), (0, 2), (0, 3), (1, 2), (1, 3)]);
        let best = largest_component(&m).unwrap();
        assert_eq!(best.bounds().0, 0);
    }

    #[test]
    fn components_partition_foreground() {
        let m = BinaryMask::from_fn(17, 13, |r, c| (r * 31 + c * 17) % 7 < 3);
        let cs = connected_components(&m);
        let total: usize = cs.iter().map(Component::area).sum();
        assert_eq!(total, m.count());
        let keys: Vec<_> = cs.iter().map(|c| c.order_key()).collect();
        let mut sorted = keys.clone();
        sorted.sort();
        assert_eq!(keys, sorted);
    }
}
