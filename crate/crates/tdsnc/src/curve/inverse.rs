//! Pseudo-inverses, gap suprema and horizontal deviation.

use super::{Continuity, Curve, CurveError, Ext, GridSpec};

/// `λ(n) = inf{τ : α(τ) >= n}`; flat pieces become jumps and jumps become flats.
///
/// The result is left-continuous. A curve whose tail is flat has no finite
/// inverse beyond its supremum, which is reported as an error.
pub fn lower_pseudo_inverse(alpha: &Curve) -> Result<Curve, CurveError> {
    swap_axes(alpha, Continuity::Left)
}

/// `α(t) = sup{k : λ(k) <= t}`; right-continuous.
pub fn upper_pseudo_inverse(lambda: &Curve) -> Result<Curve, CurveError> {
    swap_axes(lambda, Continuity::Right)
}

fn swap_axes(c: &Curve, continuity: Continuity) -> Result<Curve, CurveError> {
    if c.tail_slope() == 0.0 {
        return Err(CurveError::UnboundedInverse(c.breakpoints().last().unwrap().1));
    }
    let mut pts: Vec<(f64, f64)> = Vec::with_capacity(c.breakpoints().len() + 1);
    if c.at(0.0) > 0.0 || c.breakpoints()[0].1 > 0.0 {
        pts.push((0.0, 0.0));
    }
    pts.extend(c.breakpoints().iter().map(|&(x, v)| (v, x)));
    Curve::with_continuity(pts, 1.0 / c.tail_slope(), continuity)
}

/// Supremum over `k >= 0` of a piecewise-linear `f`, given the points where
/// it may bend or jump and its constant value far out along the tail.
fn sup_over_candidates(
    mut candidates: Vec<f64>,
    tail_value: f64,
    f_at: impl Fn(f64) -> f64,
    f_left: impl Fn(f64) -> f64,
    f_right: impl Fn(f64) -> f64,
) -> f64 {
    candidates.retain(|&k| k >= 0.0);
    candidates.push(0.0);
    candidates.sort_by(f64::total_cmp);
    candidates.dedup();
    let mut best = tail_value;
    for &k in &candidates {
        best = best.max(f_at(k)).max(f_right(k));
        if k > 0.0 {
            best = best.max(f_left(k));
        }
    }
    best
}

/// `sup_{k>=0} λ(k) - λ(k - x)` with `λ = 0` on negative arguments.
///
/// Computed exactly from the breakpoints; the tail contributes `slope * x`.
pub fn sup_forward_gap(lambda: &Curve, x: f64) -> Ext<f64> {
    assert!(x >= 0.0, "gap width must be nonnegative");
    if x == 0.0 {
        return Ext::Finite(0.0);
    }
    let bx: Vec<f64> = lambda.breakpoints().iter().map(|p| p.0).collect();
    let mut cand: Vec<f64> = bx.iter().flat_map(|&b| [b, b + x]).collect();
    cand.push(x);
    let tail = lambda.tail_slope() * x;
    let shifted = |k: f64| if k - x < 0.0 { 0.0 } else { lambda.at(k - x) };
    let shifted_left = |k: f64| if k - x <= 0.0 { 0.0 } else { lambda.left_limit(k - x) };
    let shifted_right = |k: f64| if k - x < 0.0 { 0.0 } else { lambda.right_limit(k - x) };
    Ext::Finite(sup_over_candidates(
        cand,
        tail,
        |k| lambda.at(k) - shifted(k),
        |k| lambda.left_limit(k) - shifted_left(k),
        |k| lambda.right_limit(k) - shifted_right(k),
    ))
}

/// `sup_{τ>=0} α(τ + y) - α(τ) + 1`.
pub fn sup_growth_gap(alpha: &Curve, y: f64) -> Ext<f64> {
    assert!(y >= 0.0, "gap width must be nonnegative");
    let bx: Vec<f64> = alpha.breakpoints().iter().map(|p| p.0).collect();
    let cand: Vec<f64> = bx.iter().flat_map(|&b| [b, b - y]).collect();
    let tail = alpha.tail_slope() * y;
    let best = sup_over_candidates(
        cand,
        tail,
        |t| alpha.at(t + y) - alpha.at(t),
        |t| alpha.left_limit(t + y) - alpha.left_limit(t),
        |t| alpha.right_limit(t + y) - alpha.right_limit(t),
    );
    Ext::Finite(best + 1.0)
}

/// `H(λ, γ + x) = sup_n inf{k >= 0 : γ(n - k) + x <= λ(n)}` on the grid.
///
/// The shift at `n` never exceeds `n` itself: at most `n` packets can be
/// waiting after the `n`-th arrival. The tail regime is solved analytically.
pub fn horizontal_deviation(lambda: &Curve, gamma: &Curve, x: f64, grid: &GridSpec) -> Ext<f64> {
    let (sl, sg) = (lambda.tail_slope(), gamma.tail_slope());
    if sg > sl {
        return Ext::Unbounded;
    }
    let lx = lambda.last_x();
    let gx = gamma.last_x();
    let tail_shift = if sl > 0.0 {
        // Both curves affine: γ(n-k) + x <= λ(n)  <=>  s k >= excess.
        let excess = gamma.at(gx) - sg * gx + x - (lambda.at(lx) - sl * lx);
        if sg < sl {
            0.0
        } else {
            (excess / sl).max(0.0)
        }
    } else {
        let far = lx.max(gx) + 1.0;
        if gamma.at(far) + x <= lambda.at(far) {
            0.0
        } else {
            return Ext::Unbounded;
        }
    };
    let tail_k = grid.ceil_index(tail_shift);
    // Past this index every n sits in the affine regime of both curves.
    let reach = if sg < sl && sl > 0.0 {
        // λ - γ grows without bound; find where it clears x.
        let gap0 = lambda.at(lx.max(gx)) - gamma.at(lx.max(gx));
        let need = ((x - gap0) / (sl - sg)).max(0.0);
        lx.max(gx) + need + grid.step()
    } else {
        lx.max(gx) + tail_shift + grid.step()
    };
    let m = grid.len().max(grid.ceil_index(reach));
    let lam: Vec<f64> = (0..=m).map(|i| lambda.at(grid.point(i))).collect();
    let gam: Vec<f64> = (0..=m).map(|i| gamma.at(grid.point(i))).collect();
    let mut worst = 0usize;
    for n in 0..=m {
        // γ(n-k) decreases in k; find the first k that satisfies the inequality.
        let (mut lo, mut hi) = (0usize, n);
        if gam[0] + x > lam[n] {
            worst = worst.max(n);
            continue;
        }
        while lo < hi {
            let mid = (lo + hi) / 2;
            if gam[n - mid] + x <= lam[n] {
                hi = mid;
            } else {
                lo = mid + 1;
            }
        }
        worst = worst.max(lo);
    }
    Ext::Finite(grid.point(worst.max(if sg == sl { tail_k } else { 0 })))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn staircase(jumps: &[u32], tail: f64) -> Curve {
        // right-continuous α with α jumping by jumps[i] at t = i + 1
        let mut pts = vec![(0.0, 0.0)];
        let mut v = 0.0;
        for (i, &j) in jumps.iter().enumerate() {
            let t = (i + 1) as f64;
            pts.push((t, v));
            v += j as f64;
            pts.push((t, v));
        }
        Curve::new(pts, tail).unwrap()
    }

    #[test]
    fn inverse_of_affine_is_clipped_affine() {
        let a = Curve::affine(1.0, 2.0).unwrap();
        let l = lower_pseudo_inverse(&a).unwrap();
        for n in 0..20 {
            assert_eq!(l.at(n as f64), (n as f64 - 2.0).max(0.0));
        }
        let back = upper_pseudo_inverse(&l).unwrap();
        for t in 0..20 {
            assert_eq!(back.at(t as f64), t as f64 + 2.0);
        }
        let id = Curve::affine(1.0, 0.0).unwrap();
        assert_eq!(lower_pseudo_inverse(&id).unwrap().at(7.0), 7.0);
        let half = upper_pseudo_inverse(&Curve::affine(2.0, 0.0).unwrap()).unwrap();
        assert_eq!(half.at(5.0), 2.5);
    }

    #[test]
    fn flat_tail_has_no_inverse() {
        let c = Curve::new(vec![(0.0, 0.0), (1.0, 3.0)], 0.0).unwrap();
        assert!(matches!(lower_pseudo_inverse(&c), Err(CurveError::UnboundedInverse(_))));
    }

    #[test]
    fn floor_staircase_matches_scan() {
        let a = staircase(&[1; 10], 1.0);
        let l = lower_pseudo_inverse(&a).unwrap();
        for n in 0..=10 {
            // scan a fine grid for the first τ with α(τ) >= n
            let scan = (0..=2000).map(|i| i as f64 / 100.0).find(|&t| a.at(t) >= n as f64).unwrap();
            assert_eq!(l.at(n as f64), scan, "n = {n}");
        }
    }

    #[test]
    fn forward_gap_examples() {
        let l = Curve::rate_latency(1.0, 2.0).unwrap();
        assert_eq!(sup_forward_gap(&l, 3.0), Ext::Finite(3.0));
        assert_eq!(sup_forward_gap(&l, 0.0), Ext::Finite(0.0));
        let l = Curve::new(vec![(0.0, 0.0), (4.0, 0.0)], 2.0).unwrap();
        assert_eq!(sup_forward_gap(&l, 1.5), Ext::Finite(3.0));
    }

    #[test]
    fn growth_gap_examples() {
        let a = Curve::affine(1.0, 5.0).unwrap();
        assert_eq!(sup_growth_gap(&a, 2.0), Ext::Finite(3.0));
        assert_eq!(sup_growth_gap(&a, 0.0), Ext::Finite(1.0));
        // a staircase jumping by 3 at t=1 then flat: any window straddling the jump sees 3
        let s = staircase(&[3, 0, 0], 0.5);
        assert_eq!(sup_growth_gap(&s, 0.5), Ext::Finite(4.0));
    }

    #[test]
    fn horizontal_deviation_examples() {
        let g = GridSpec::new(1.0, 32.0).unwrap();
        let lam = Curve::affine(1.0, 0.0).unwrap();
        let gam = Curve::affine(1.0, 2.0).unwrap();
        assert_eq!(horizontal_deviation(&lam, &gam, 0.0, &g), Ext::Finite(2.0));
        for i in 0..12 {
            let x = i as f64 * 0.5;
            assert_eq!(horizontal_deviation(&lam, &lam, x, &g), Ext::Finite(x.ceil()));
        }
        let low = Curve::affine(0.5, 0.0).unwrap();
        assert_eq!(horizontal_deviation(&lam, &low, 0.0, &g), Ext::Finite(0.0));
        let steep = Curve::affine(1.1, 0.0).unwrap();
        assert_eq!(horizontal_deviation(&lam, &steep, 1.0, &g), Ext::Unbounded);
    }
}
