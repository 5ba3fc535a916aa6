use super::components::Component;

/// Clockwise Moore ring around a pixel, as (d_row, d_col), starting west.
const RING: [(i64, i64); 8] = [(0, -1), (-1, -1), (-1, 0), (-1, 1), (0, 1), (1, 1), (1, 0), (1, -1)];

fn ring_index(d: (i64, i64)) -> usize {
    RING.iter().position(|&r| r == d).expect("neighbor offset")
}

/// Closed boundary path of a component; consecutive points are 8-neighbors
/// and the last point is adjacent to the first.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Contour {
    points: Vec<(usize, usize)>,
}

impl Contour {
    pub fn points(&self) -> &[(usize, usize)] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

/// Moore-neighbor boundary trace, clockwise from the lexicographically
/// smallest pixel. Stops when the walk is about to repeat its first move.
pub fn trace_contour(component: &Component) -> Contour {
    let pixels = component.pixels();
    let start = pixels[0];
    let (row0, col0, _, _) = component.bounds();
    // Local raster with a one-pixel background frame so every probe is in range.
    let local = component.local_mask(1);
    let is_fg = |p: (i64, i64)| local.get_signed(p.0, p.1);
    let to_local = |(r, c): (usize, usize)| ((r - row0 + 1) as i64, (c - col0 + 1) as i64);
    let to_global = |(r, c): (i64, i64)| ((r - 1) as usize + row0, (c - 1) as usize + col0);

    // From `p`, having arrived with background cell `back` behind us, sweep
    // clockwise starting after `back`; return the next boundary pixel and
    // the background cell examined just before it.
    let step = |p: (i64, i64), back: (i64, i64)| -> Option<((i64, i64), (i64, i64))> {
        let d0 = ring_index((back.0 - p.0, back.1 - p.1));
        (1..8).find_map(|i| {
            let d = (d0 + i) % 8;
            let q = (p.0 + RING[d].0, p.1 + RING[d].1);
            is_fg(q).then(|| {
                let prev = RING[(d + 7) % 8];
                (q, (p.0 + prev.0, p.1 + prev.1))
            })
        })
    };

    let s = to_local(start);
    // Nothing precedes the start pixel in raster order, so its west cell is background.
    let Some((first, mut back)) = step(s, (s.0, s.1 - 1)) else {
        return Contour { points: vec![start] };
    };

    let mut points = vec![start];
    let mut p = first;
    let limit = 4 * pixels.len() + 8;
    while points.len() <= limit {
        let (q, b) = step(p, back).expect("a traced pixel has a foreground neighbor");
        if p == s && q == first {
            break;
        }
        points.push(to_global(p));
        p = q;
        back = b;
    }
    Contour { points }
}

/// Chain length of the closed contour: 1 per axial step, sqrt(2) per
/// diagonal step, including the closing step. A lone pixel counts 4.
pub fn perimeter(contour: &Contour) -> f64 {
    let pts = contour.points();
    if pts.len() <= 1 {
        return 4.0;
    }
    let mut axial = 0usize;
    let mut diagonal = 0usize;
    for (i, &a) in pts.iter().enumerate() {
        let b = pts[(i + 1) % pts.len()];
        if a.0 != b.0 && a.1 != b.1 {
            diagonal += 1;
        } else {
            axial += 1;
        }
    }
    axial as f64 + diagonal as f64 * std::f64::consts::SQRT_2
}
