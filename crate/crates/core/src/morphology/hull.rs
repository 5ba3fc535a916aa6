//! Convex hull of pixel centers and its lattice-point rasterization.

use super::components::Component;

/// Point as (x, y) = (col, row).
pub type Point = (i64, i64);

fn cross(o: Point, a: Point, b: Point) -> i64 {
    (a.0 - o.0) * (b.1 - o.1) - (a.1 - o.1) * (b.0 - o.0)
}

/// Andrew's monotone chain. Returns hull vertices counter-clockwise (in x-right,
/// y-up terms) without collinear points; degenerate inputs give 1 or 2 vertices.
pub fn convex_hull(points: &[Point]) -> Vec<Point> {
    let mut pts = points.to_vec();
    pts.sort_unstable();
    pts.dedup();
    if pts.len() < 3 {
        return pts;
    }
    let mut hull: Vec<Point> = Vec::with_capacity(2 * pts.len());
    for &p in &pts {
        while hull.len() >= 2 && cross(hull[hull.len() - 2], hull[hull.len() - 1], p) <= 0 {
            hull.pop();
        }
        hull.push(p);
    }
    let lower_len = hull.len() + 1;
    for &p in pts.iter().rev().skip(1) {
        while hull.len() >= lower_len && cross(hull[hull.len() - 2], hull[hull.len() - 1], p) <= 0 {
            hull.pop();
        }
        hull.push(p);
    }
    hull.pop();
    hull
}

/// Number of lattice points inside or on the polygon `hull` (convex, any
/// orientation, possibly degenerate).
pub fn lattice_points_in_hull(hull: &[Point]) -> usize {
    match hull {
        [] => return 0,
        [_] => return 1,
        _ => {}
    }
    let y_min = hull.iter().map(|p| p.1).min().unwrap();
    let y_max = hull.iter().map(|p| p.1).max().unwrap();
    let n = hull.len();
    let mut count = 0usize;
    for y in y_min..=y_max {
        let mut lo = i64::MAX;
        let mut hi = i64::MIN;
        for i in 0..n {
            let (a, b) = (hull[i], hull[(i + 1) % n]);
            if y < a.1.min(b.1) || y > a.1.max(b.1) {
                continue;
            }
            if a.1 == b.1 {
                lo = lo.min(a.0.min(b.0));
                hi = hi.max(a.0.max(b.0));
                continue;
            }
            // x on the edge at this row, as num/den with den > 0.
            let (mut num, mut den) = (a.0 * (b.1 - a.1) + (y - a.1) * (b.0 - a.0), b.1 - a.1);
            if den < 0 {
                num = -num;
                den = -den;
            }
            lo = lo.min(-((-num).div_euclid(den)));
            hi = hi.max(num.div_euclid(den));
        }
        if hi >= lo {
            count += (hi - lo + 1) as usize;
        }
    }
    count
}

/// Pixel centers of the component that can bound its hull: the leftmost and
/// rightmost pixel of every row.
fn row_extremes(component: &Component) -> Vec<Point> {
    let mut out = Vec::new();
    let px = component.pixels();
    let mut i = 0;
    while i < px.len() {
        let row = px[i].0;
        let mut j = i;
        while j + 1 < px.len() && px[j + 1].0 == row {
            j += 1;
        }
        out.push((px[i].1 as i64, row as i64));
        if j != i {
            out.push((px[j].1 as i64, row as i64));
        }
        i = j + 1;
    }
    out
}

/// Convex area as the number of pixel centers inside or on the hull of the
/// component's pixel centers. Equals the area for digitally convex shapes.
pub fn convex_hull_area(component: &Component) -> usize {
    lattice_points_in_hull(&convex_hull(&row_extremes(component)))
}
