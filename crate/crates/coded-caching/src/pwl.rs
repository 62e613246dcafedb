//! Piecewise-linear functions on `[0, inf)`.
//!
//! Rate curves in this crate are continuous piecewise-linear: finitely many
//! breakpoints plus a final slope that extends the last segment to infinity.
//! The optimizer consumes them as (slope, width) segments; the pointwise `min`
//! of two curves inserts crossing points so the result is again exact.

const X_EPS: f64 = 1e-12;

#[derive(Debug, Clone)]
pub struct Pwl {
    /// Breakpoints with strictly increasing x, first at x = 0.
    pts: Vec<(f64, f64)>,
    /// Slope beyond the last breakpoint.
    tail_slope: f64,
}

impl Pwl {
    pub fn new(mut pts: Vec<(f64, f64)>, tail_slope: f64) -> Self {
        assert!(!pts.is_empty(), "pwl needs at least one point");
        pts.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
        assert!(pts[0].0.abs() <= X_EPS, "pwl must start at x=0");
        let mut dedup: Vec<(f64, f64)> = Vec::with_capacity(pts.len());
        for p in pts {
            match dedup.last() {
                Some(last) if (p.0 - last.0).abs() <= X_EPS => {} // keep first
                _ => dedup.push(p),
            }
        }
        dedup[0].0 = 0.0;
        Pwl { pts: dedup, tail_slope }
    }

    /// The line `y = slope * x`.
    pub fn line(intercept: f64, slope: f64) -> Self {
        Pwl { pts: vec![(0.0, intercept)], tail_slope: slope }
    }

    pub fn points(&self) -> &[(f64, f64)] {
        &self.pts
    }

    pub fn tail_slope(&self) -> f64 {
        self.tail_slope
    }

    pub fn eval(&self, x: f64) -> f64 {
        assert!(x >= -X_EPS, "pwl evaluated at negative x = {x}");
        let x = x.max(0.0);
        let last = self.pts.len() - 1;
        if x >= self.pts[last].0 {
            let (xl, yl) = self.pts[last];
            return yl + self.tail_slope * (x - xl);
        }
        // index of first point with x_i > x
        let hi = self.pts.partition_point(|p| p.0 <= x);
        let (x0, y0) = self.pts[hi - 1];
        let (x1, y1) = self.pts[hi];
        y0 + (y1 - y0) / (x1 - x0) * (x - x0)
    }

    /// Segment slopes in order, including the tail.
    pub fn slopes(&self) -> Vec<f64> {
        let mut s: Vec<f64> = self
            .pts
            .windows(2)
            .map(|w| (w[1].1 - w[0].1) / (w[1].0 - w[0].0))
            .collect();
        s.push(self.tail_slope);
        s
    }

    /// Segments as (width, slope), with the tail truncated at `xmax`.
    pub fn segments_up_to(&self, xmax: f64) -> Vec<(f64, f64)> {
        let mut out = Vec::new();
        for w in self.pts.windows(2) {
            let (x0, y0) = w[0];
            let (x1, y1) = w[1];
            if x0 >= xmax {
                return out;
            }
            let width = (x1.min(xmax)) - x0;
            out.push((width, (y1 - y0) / (x1 - x0)));
        }
        let xl = self.pts.last().unwrap().0;
        if xmax > xl {
            out.push((xmax - xl, self.tail_slope));
        }
        out
    }

    /// True when segment slopes are nondecreasing within `tol`.
    pub fn is_convex(&self, tol: f64) -> bool {
        self.slopes().windows(2).all(|w| w[1] >= w[0] - tol)
    }

    /// Exact pointwise minimum of two curves.
    pub fn min(a: &Pwl, b: &Pwl) -> Pwl {
        let mut xs: Vec<f64> = a.pts.iter().chain(b.pts.iter()).map(|p| p.0).collect();
        xs.sort_by(|p, q| p.partial_cmp(q).unwrap());
        xs.dedup_by(|p, q| (*p - *q).abs() <= X_EPS);

        let mut grid = vec![xs[0]];
        for w in xs.windows(2) {
            let (x0, x1) = (w[0], w[1]);
            let d0 = a.eval(x0) - b.eval(x0);
            let d1 = a.eval(x1) - b.eval(x1);
            if (d0 > X_EPS && d1 < -X_EPS) || (d0 < -X_EPS && d1 > X_EPS) {
                let xc = x0 + (x1 - x0) * d0 / (d0 - d1);
                if xc > x0 + X_EPS && xc < x1 - X_EPS {
                    grid.push(xc);
                }
            }
            grid.push(x1);
        }

        let xmax = *grid.last().unwrap();
        let mut pts: Vec<(f64, f64)> = grid.iter().map(|&x| (x, a.eval(x).min(b.eval(x)))).collect();

        // Tail: the two extensions may cross once more beyond xmax.
        let (ya, yb) = (a.eval(xmax), b.eval(xmax));
        let (sa, sb) = (a.tail_slope, b.tail_slope);
        let tail = if (sa - sb).abs() <= X_EPS {
            sa.min(sb)
        } else {
            let d = (yb - ya) / (sa - sb);
            if d > X_EPS {
                // lines cross at xmax + d
                pts.push((xmax + d, ya + sa * d));
                sa.min(sb)
            } else if (ya - yb).abs() <= X_EPS {
                sa.min(sb)
            } else if ya < yb {
                sa
            } else {
                sb
            }
        };
        Pwl::new(pts, tail)
    }

    /// Lower boundary of the convex hull of `points`, as a Pwl with the given
    /// tail slope. Points must include one at x = 0.
    pub fn lower_convex_envelope(points: &[(f64, f64)], tail_slope: f64) -> Pwl {
        let mut pts = points.to_vec();
        pts.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap().then(a.1.partial_cmp(&b.1).unwrap()));
        let mut hull: Vec<(f64, f64)> = Vec::new();
        for p in pts {
            if let Some(last) = hull.last() {
                if (p.0 - last.0).abs() <= X_EPS {
                    continue; // same x, keep the lower y (sorted first)
                }
            }
            while hull.len() >= 2 {
                let a = hull[hull.len() - 2];
                let b = hull[hull.len() - 1];
                let cross = (b.0 - a.0) * (p.1 - a.1) - (b.1 - a.1) * (p.0 - a.0);
                if cross <= 0.0 {
                    hull.pop();
                } else {
                    break;
                }
            }
            hull.push(p);
        }
        Pwl::new(hull, tail_slope)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn eval_interpolates_and_extends() {
        let f = Pwl::new(vec![(0.0, 0.0), (1.0, 2.0), (3.0, 3.0)], 5.0);
        assert_eq!(f.eval(0.5), 1.0);
        assert_eq!(f.eval(2.0), 2.5);
        assert_eq!(f.eval(4.0), 8.0);
    }

    #[test]
    fn min_inserts_crossing() {
        let a = Pwl::line(0.0, 1.0);
        let b = Pwl::new(vec![(0.0, 2.0)], 0.0);
        let m = Pwl::min(&a, &b);
        assert_eq!(m.eval(1.0), 1.0);
        assert_eq!(m.eval(2.0), 2.0);
        assert_eq!(m.eval(5.0), 2.0);
        // crossing point at x=2 must be a breakpoint
        assert!(m.points().iter().any(|p| (p.0 - 2.0).abs() < 1e-9));
    }

    #[test]
    fn min_of_segment_curves() {
        let a = Pwl::new(vec![(0.0, 0.0), (2.0, 1.0)], 3.0);
        let b = Pwl::new(vec![(0.0, 0.5), (1.0, 0.5)], 1.0);
        let m = Pwl::min(&a, &b);
        for i in 0..=60 {
            let x = i as f64 * 0.1;
            let want = a.eval(x).min(b.eval(x));
            assert!((m.eval(x) - want).abs() < 1e-9, "x={x}");
        }
    }

    #[test]
    fn envelope_drops_interior_points() {
        let e = Pwl::lower_convex_envelope(&[(0.0, 0.0), (1.0, 2.0), (2.0, 2.0)], 4.0);
        assert_eq!(e.eval(1.0), 1.0);
        assert_eq!(e.eval(2.0), 2.0);
        assert!(e.is_convex(1e-12));
    }

    #[test]
    fn convexity_check() {
        assert!(Pwl::new(vec![(0.0, 0.0), (1.0, 0.0), (2.0, 1.0)], 2.0).is_convex(1e-12));
        assert!(!Pwl::new(vec![(0.0, 0.0), (1.0, 2.0), (2.0, 3.0)], 0.5).is_convex(1e-12));
    }
}
