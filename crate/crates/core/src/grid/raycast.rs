use super::GridSpec;
use crate::math::Vec2;

const T_EPS: f64 = 1e-12;

/// Cells whose interior the segment `a -> b` passes through, ordered from `a`
/// to `b`. The segment is clipped to the grid. A degenerate segment yields its
/// containing cell (or nothing outside the grid). When the segment crosses a
/// cell corner exactly, the two side cells are not reported.
pub fn trace_ray(grid: &GridSpec, a: Vec2, b: Vec2) -> Vec<usize> {
    let mut out = Vec::new();
    trace_ray_into(grid, a, b, &mut out);
    out
}

/// Appends the traversal of `a -> b` to `out`.
pub(crate) fn trace_ray_into(grid: &GridSpec, a: Vec2, b: Vec2, out: &mut Vec<usize>) {
    let inv = 1.0 / grid.cell_size;
    let x0 = (a.x - grid.origin.x) * inv;
    let y0 = (a.y - grid.origin.y) * inv;
    let dx = (b.x - a.x) * inv;
    let dy = (b.y - a.y) * inv;
    let (nx, ny) = (grid.nx as f64, grid.ny as f64);

    if dx == 0.0 && dy == 0.0 {
        if let Some(i) = grid.cell_of(a) {
            out.push(i);
        }
        return;
    }

    // Liang–Barsky clip against [0, nx] x [0, ny].
    let mut t0 = 0.0f64;
    let mut t1 = 1.0f64;
    for (p, q) in [(-dx, x0), (dx, nx - x0), (-dy, y0), (dy, ny - y0)] {
        if p == 0.0 {
            if q < 0.0 {
                return;
            }
        } else {
            let t = q / p;
            if p < 0.0 {
                t0 = t0.max(t);
            } else {
                t1 = t1.min(t);
            }
        }
    }
    if t0 >= t1 {
        return;
    }

    let sx = x0 + t0 * dx;
    let sy = y0 + t0 * dy;
    let start = |s: f64, d: f64, n: usize| -> i64 {
        let c = if d < 0.0 { s.ceil() - 1.0 } else { s.floor() };
        (c as i64).clamp(0, n as i64 - 1)
    };
    let mut col = start(sx, dx, grid.nx);
    let mut row = start(sy, dy, grid.ny);

    let step_x: i64 = if dx > 0.0 { 1 } else { -1 };
    let step_y: i64 = if dy > 0.0 { 1 } else { -1 };
    let t_delta_x = if dx != 0.0 { (1.0 / dx).abs() } else { f64::INFINITY };
    let t_delta_y = if dy != 0.0 { (1.0 / dy).abs() } else { f64::INFINITY };
    let mut t_max_x = if dx > 0.0 {
        (col as f64 + 1.0 - x0) / dx
    } else if dx < 0.0 {
        (col as f64 - x0) / dx
    } else {
        f64::INFINITY
    };
    let mut t_max_y = if dy > 0.0 {
        (row as f64 + 1.0 - y0) / dy
    } else if dy < 0.0 {
        (row as f64 - y0) / dy
    } else {
        f64::INFINITY
    };

    loop {
        out.push(grid.index(row as usize, col as usize));
        let t_next = t_max_x.min(t_max_y);
        if t_next >= t1 - T_EPS {
            break;
        }
        if (t_max_x - t_max_y).abs() <= T_EPS {
            col += step_x;
            row += step_y;
            t_max_x += t_delta_x;
            t_max_y += t_delta_y;
        } else if t_max_x < t_max_y {
            col += step_x;
            t_max_x += t_delta_x;
        } else {
            row += step_y;
            t_max_y += t_delta_y;
        }
        if col < 0 || row < 0 || col >= grid.nx as i64 || row >= grid.ny as i64 {
            break;
        }
    }
}
