//! Max-plus and min-plus convolution and deconvolution.
//!
//! Concave (max-plus) and convex (min-plus) convolutions use the slope-merge
//! closed form. Everything else is an exhaustive search over grid splits. When
//! breakpoints lie on the grid, that search is exact at the grid points.

use super::{Curve, Ext, GridSpec, Rounding};

/// Result of [`max_plus_deconv`].
#[derive(Clone, Debug, PartialEq)]
pub struct MaxPlusDeconv {
    pub curve: Curve,
    /// The infimum ran off to minus infinity along the tail (slope(g1) < slope(g2)).
    pub diverged: bool,
    /// Some grid value was negative and was clamped to zero.
    pub clamped: bool,
}

/// `(g1 ⊗̄ g2)(x) = sup_{0<=y<=x} g1(y) + g2(x - y)`.
pub fn max_plus_conv(g1: &Curve, g2: &Curve, grid: &GridSpec, rounding: Rounding) -> Curve {
    let tail = g1.tail_slope().max(g2.tail_slope());
    if g1.is_concave() && g2.is_concave() {
        return slope_merge(g1, g2, tail, true);
    }
    let a = g1.sample(grid);
    let b = g2.sample(grid);
    let r: Vec<f64> = (0..a.len())
        .map(|i| (0..=i).map(|j| a[j] + b[i - j]).fold(f64::NEG_INFINITY, f64::max))
        .collect();
    Curve::from_samples(grid, &r, tail, rounding).expect("max-plus convolution stays in G")
}

/// `(g1 ⊗ g2)(x) = inf_{0<=y<=x} g1(y) + g2(x - y)`.
pub fn min_plus_conv(g1: &Curve, g2: &Curve, grid: &GridSpec, rounding: Rounding) -> Curve {
    let tail = g1.tail_slope().min(g2.tail_slope());
    if g1.is_convex() && g2.is_convex() {
        return slope_merge(g1, g2, tail, false);
    }
    let a = g1.sample(grid);
    let b = g2.sample(grid);
    let r: Vec<f64> = (0..a.len())
        .map(|i| (0..=i).map(|j| a[j] + b[i - j]).fold(f64::INFINITY, f64::min))
        .collect();
    Curve::from_samples(grid, &r, tail, rounding).expect("min-plus convolution stays in G")
}

/// Concatenates the finite segments of both curves ordered by slope. Segments
/// beyond the dominant tail are unreachable and dropped.
fn slope_merge(g1: &Curve, g2: &Curve, tail: f64, descending: bool) -> Curve {
    let mut segs: Vec<(f64, f64)> = g1
        .segments()
        .into_iter()
        .chain(g2.segments())
        .filter(|&(_, s)| if descending { s > tail } else { s < tail })
        .collect();
    if descending {
        segs.sort_by(|a, b| b.1.total_cmp(&a.1));
    } else {
        segs.sort_by(|a, b| a.1.total_cmp(&b.1));
    }
    let mut x = 0.0;
    let mut v = g1.at(0.0) + g2.at(0.0);
    let mut pts = vec![(x, v)];
    for (dx, s) in segs {
        x += dx;
        v += s * dx;
        pts.push((x, v));
    }
    Curve::new(pts, tail).expect("slope merge of G curves").simplified()
}

/// Grid extent for deconvolution shifts: the whole grid, widened so that every
/// breakpoint of either curve is reached.
fn shift_range(g1: &Curve, g2: &Curve, grid: &GridSpec) -> usize {
    let last = g1.last_x().max(g2.last_x());
    grid.len().max(grid.ceil_index(last))
}

/// `(g1 ⊘̄ g2)(x) = inf_{y>=0} g1(x + y) - g2(y)`, clamped at zero.
pub fn max_plus_deconv(g1: &Curve, g2: &Curve, grid: &GridSpec, rounding: Rounding) -> MaxPlusDeconv {
    if g1.tail_slope() < g2.tail_slope() {
        return MaxPlusDeconv { curve: Curve::zero(), diverged: true, clamped: true };
    }
    let m = shift_range(g1, g2, grid);
    let n = grid.len();
    let a: Vec<f64> = (0..=n + m).map(|k| g1.at(grid.point(k))).collect();
    let b: Vec<f64> = (0..=m).map(|k| g2.at(grid.point(k))).collect();
    let raw: Vec<f64> = (0..=n)
        .map(|i| (0..=m).map(|j| a[i + j] - b[j]).fold(f64::INFINITY, f64::min))
        .collect();
    let clamped = raw.iter().any(|&v| v < 0.0);
    let curve = Curve::from_samples(grid, &raw, g1.tail_slope(), rounding)
        .expect("max-plus deconvolution stays in G");
    MaxPlusDeconv { curve, diverged: false, clamped }
}

/// `(g1 ⊘ g2)(x) = sup_{y>=0} g1(x + y) - g2(y)` at a single point, unclamped.
pub fn min_plus_deconv_at(g1: &Curve, g2: &Curve, x: f64, grid: &GridSpec) -> Ext<f64> {
    if g1.tail_slope() > g2.tail_slope() {
        return Ext::Unbounded;
    }
    let m = shift_range(g1, g2, grid);
    Ext::Finite(
        (0..=m)
            .map(|j| {
                let y = grid.point(j);
                g1.at(x + y) - g2.at(y)
            })
            .fold(f64::NEG_INFINITY, f64::max),
    )
}

/// Min-plus deconvolution on the grid, negative values clamped to zero.
pub fn min_plus_deconv(g1: &Curve, g2: &Curve, grid: &GridSpec, rounding: Rounding) -> Ext<Curve> {
    if g1.tail_slope() > g2.tail_slope() {
        return Ext::Unbounded;
    }
    let m = shift_range(g1, g2, grid);
    let n = grid.len();
    let a: Vec<f64> = (0..=n + m).map(|k| g1.at(grid.point(k))).collect();
    let b: Vec<f64> = (0..=m).map(|k| g2.at(grid.point(k))).collect();
    let raw: Vec<f64> = (0..=n)
        .map(|i| (0..=m).map(|j| a[i + j] - b[j]).fold(f64::NEG_INFINITY, f64::max))
        .collect();
    Ext::Finite(
        Curve::from_samples(grid, &raw, g1.tail_slope(), rounding)
            .expect("min-plus deconvolution stays in G"),
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid(h: f64) -> GridSpec {
        GridSpec::new(1.0, h).unwrap()
    }

    fn lin(r: f64, b: f64) -> Curve {
        Curve::affine(r, b).unwrap()
    }

    #[test]
    fn max_plus_conv_of_linear_curves() {
        let g = grid(32.0);
        let c = max_plus_conv(&lin(0.5, 0.0), &lin(0.5, 0.0), &g, Rounding::Nearest);
        for n in 0..=32 {
            assert_eq!(c.at(n as f64), 0.5 * n as f64);
        }
        let c = max_plus_conv(&lin(2.0, 0.0), &lin(1.0, 0.0), &g, Rounding::Nearest);
        for n in 0..=32 {
            assert_eq!(c.at(n as f64), 2.0 * n as f64);
        }
        assert_eq!(c.tail_slope(), 2.0);
    }

    #[test]
    fn max_plus_conv_of_gcra_curves_matches_split_search() {
        let g = grid(24.0);
        let c = Curve::rate_latency(2.0, 1.5).unwrap();
        let r = max_plus_conv(&c, &c, &g, Rounding::Nearest);
        for n in 0..=24usize {
            let brute = (0..=n)
                .map(|m| c.at(m as f64) + c.at((n - m) as f64))
                .fold(f64::NEG_INFINITY, f64::max);
            assert_eq!(r.at(n as f64), brute);
        }
        assert_eq!(r.at(6.0), 9.0);
    }

    #[test]
    fn min_plus_conv_examples() {
        let g = grid(32.0);
        let r = min_plus_conv(&lin(2.0, 0.0), &lin(1.0, 3.0), &g, Rounding::Nearest);
        for n in 0..=32 {
            assert_eq!(r.at(n as f64), n as f64 + 3.0);
        }
        let inc = Curve::new(vec![(0.0, 1.0), (2.0, 1.0), (4.0, 5.0)], 1.0).unwrap();
        let r = min_plus_conv(&inc, &Curve::zero(), &g, Rounding::Nearest);
        for n in 0..=32 {
            assert_eq!(r.at(n as f64), 1.0);
        }
    }

    #[test]
    fn convex_closed_form_agrees_with_grid_search() {
        let g = grid(40.0);
        let a = Curve::rate_latency(1.0, 3.0).unwrap();
        let b = Curve::new(vec![(0.0, 0.0), (2.0, 1.0)], 2.0).unwrap();
        assert!(a.is_convex() && b.is_convex());
        let closed = min_plus_conv(&a, &b, &g, Rounding::Nearest);
        for n in 0..=40usize {
            let brute = (0..=n)
                .map(|m| a.at(m as f64) + b.at((n - m) as f64))
                .fold(f64::INFINITY, f64::min);
            assert!((closed.at(n as f64) - brute).abs() < 1e-12);
        }
    }

    #[test]
    fn deconvolution_examples() {
        let g = grid(32.0);
        let c = Curve::rate_latency(1.5, 2.0).unwrap();
        let d = max_plus_deconv(&c, &c, &g, Rounding::Nearest);
        assert_eq!(d.curve.at(0.0), 0.0);
        assert!(!d.diverged);
        let d = max_plus_deconv(&lin(1.0, 2.0), &lin(1.0, 0.0), &g, Rounding::Nearest);
        assert_eq!(d.curve.at(0.0), 2.0);
        let d = max_plus_deconv(&lin(1.0, 0.0), &lin(2.0, 0.0), &g, Rounding::Nearest);
        assert!(d.diverged);

        assert_eq!(min_plus_deconv_at(&lin(1.0, 3.0), &lin(1.0, 1.0), 0.0, &g), Ext::Finite(2.0));
        assert_eq!(min_plus_deconv_at(&lin(1.0, 0.0), &lin(1.0, 0.0), 0.0, &g), Ext::Finite(0.0));
        assert_eq!(min_plus_deconv_at(&lin(1.2, 0.0), &lin(1.0, 0.0), 0.0, &g), Ext::Unbounded);
        assert!(min_plus_deconv(&lin(1.2, 0.0), &lin(1.0, 0.0), &g, Rounding::Up).is_unbounded());
    }
}
