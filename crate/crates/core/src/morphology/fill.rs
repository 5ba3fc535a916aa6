use std::collections::VecDeque;

use super::components::Component;
use crate::maskio::BinaryMask;

/// Fills background regions that are not 4-connected to the raster border
/// through background.
pub fn fill_holes(mask: &BinaryMask) -> BinaryMask {
    let (w, h) = (mask.width(), mask.height());
    let mut outside = vec![false; w * h];
    let mut queue = VecDeque::new();
    let seed = |r: usize, c: usize, outside: &mut Vec<bool>, queue: &mut VecDeque<(usize, usize)>| {
        let i = r * w + c;
        if !mask.bits()[i] && !outside[i] {
            outside[i] = true;
            queue.push_back((r, c));
        }
    };
    for c in 0..w {
        seed(0, c, &mut outside, &mut queue);
        seed(h - 1, c, &mut outside, &mut queue);
    }
    for r in 0..h {
        seed(r, 0, &mut outside, &mut queue);
        seed(r, w - 1, &mut outside, &mut queue);
    }
    while let Some((r, c)) = queue.pop_front() {
        let (r, c) = (r as i64, c as i64);
        for (dr, dc) in [(-1, 0), (1, 0), (0, -1), (0, 1)] {
            let (nr, nc) = (r + dr, c + dc);
            if nr < 0 || nc < 0 || nr >= h as i64 || nc >= w as i64 {
                continue;
            }
            seed(nr as usize, nc as usize, &mut outside, &mut queue);
        }
    }
    let bits = outside.into_iter().map(|o| !o).collect();
    BinaryMask::from_bits(w, h, bits).expect("same dimensions")
}

/// Pixel count of the component with its holes filled.
pub fn filled_area(component: &Component) -> usize {
    fill_holes(&component.local_mask(1)).count()
}
