//! Piecewise quadratic value functions with point spikes.
//!
//! The segment solver's dynamic-programming states live in the family of
//! functions expressible as a continuous piecewise quadratic plus finitely
//! many strictly positive spikes (point masses). The family is closed under
//! the two recursion steps used by the solver: adding a per-element data term
//! (a concave quadratic plus an optional spike at zero) and clipping from
//! below at a constant.

use crate::error::{Error, Result};

/// `a x^2 + b x + c` on one interval.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadCoeffs {
    pub a: f64,
    pub b: f64,
    pub c: f64,
}

impl QuadCoeffs {
    #[inline]
    pub fn eval(&self, x: f64) -> f64 {
        (self.a * x + self.b) * x + self.c
    }
}

/// Discriminants smaller than this are treated as tangency when solving for
/// clip crossings.
const TANGENCY_EPS: f64 = 1e-14;

/// A continuous piecewise quadratic plus a finite set of positive spikes.
///
/// Piece `i` covers the half-open interval `(breaks[i-1], breaks[i]]`, with
/// the leftmost piece extending to negative infinity and the rightmost to
/// positive infinity. Breakpoints are strictly increasing and all finite.
#[derive(Debug, Clone, PartialEq)]
pub struct PiecewiseValueFn {
    breaks: Vec<f64>,
    pieces: Vec<QuadCoeffs>,
    /// `(location, height)` with `height > 0`, sorted by location.
    spikes: Vec<(f64, f64)>,
}

impl PiecewiseValueFn {
    pub fn constant(c: f64) -> Self {
        Self {
            breaks: Vec::new(),
            pieces: vec![QuadCoeffs { a: 0.0, b: 0.0, c }],
            spikes: Vec::new(),
        }
    }

    /// A single quadratic over the whole line.
    pub fn quadratic(a: f64, b: f64, c: f64) -> Self {
        Self {
            breaks: Vec::new(),
            pieces: vec![QuadCoeffs { a, b, c }],
            spikes: Vec::new(),
        }
    }

    pub fn pieces(&self) -> &[QuadCoeffs] {
        &self.pieces
    }

    pub fn breaks(&self) -> &[f64] {
        &self.breaks
    }

    pub fn spikes(&self) -> &[(f64, f64)] {
        &self.spikes
    }

    /// Structural membership check: strictly increasing finite breakpoints
    /// and strictly positive spike heights.
    pub fn validate(&self) -> Result<()> {
        if self.pieces.len() != self.breaks.len() + 1 {
            return Err(Error::InvalidParameter(
                "piece/breakpoint count mismatch".into(),
            ));
        }
        for w in self.breaks.windows(2) {
            if !(w[0] < w[1]) {
                return Err(Error::InvalidParameter(
                    "breakpoints not strictly increasing".into(),
                ));
            }
        }
        if self.breaks.iter().any(|b| !b.is_finite()) {
            return Err(Error::InvalidParameter("non-finite breakpoint".into()));
        }
        if self.spikes.iter().any(|&(_, s)| !(s > 0.0)) {
            return Err(Error::InvalidParameter("non-positive spike height".into()));
        }
        Ok(())
    }

    fn piece_index(&self, x: f64) -> usize {
        self.breaks.partition_point(|&b| b < x)
    }

    /// Quadratic part only.
    pub fn quad_eval(&self, x: f64) -> f64 {
        self.pieces[self.piece_index(x)].eval(x)
    }

    /// Quadratic part plus the spike height when `x` is a spike location.
    pub fn eval(&self, x: f64) -> f64 {
        let mut v = self.quad_eval(x);
        for &(loc, s) in &self.spikes {
            if loc == x {
                v += s;
            }
        }
        v
    }

    /// Interval of piece `i` as `(lo, hi)` with infinities at the ends.
    fn interval(&self, i: usize) -> (f64, f64) {
        let lo = if i == 0 {
            f64::NEG_INFINITY
        } else {
            self.breaks[i - 1]
        };
        let hi = if i == self.breaks.len() {
            f64::INFINITY
        } else {
            self.breaks[i]
        };
        (lo, hi)
    }

    /// Exact global maximum and its location.
    ///
    /// Candidates are the per-piece quadratic suprema (interior vertex or
    /// finite endpoints; the function is continuous, so an endpoint value is
    /// attained regardless of which piece owns it) and the spike locations.
    /// Exact ties prefer the location `0`, then the smallest location.
    ///
    /// Errors when the quadratic part is unbounded above.
    pub fn max_point(&self) -> Result<(f64, f64)> {
        let mut best: Option<(f64, f64)> = None;
        let mut consider = |x: f64, v: f64| {
            let replace = match best {
                None => true,
                // Ties prefer 0, then the smallest location.
                Some((bx, bv)) => v > bv || (v == bv && bx != 0.0 && (x == 0.0 || x < bx)),
            };
            if replace {
                best = Some((x, v));
            }
        };
        for (i, q) in self.pieces.iter().enumerate() {
            let (lo, hi) = self.interval(i);
            if q.a > 0.0 {
                if lo == f64::NEG_INFINITY || hi == f64::INFINITY {
                    return Err(Error::Unbounded("convex piece on an unbounded interval".into()));
                }
                consider(lo, q.eval(lo));
                consider(hi, q.eval(hi));
            } else if q.a == 0.0 {
                if q.b > 0.0 {
                    if hi == f64::INFINITY {
                        return Err(Error::Unbounded("positive slope at +inf".into()));
                    }
                    consider(hi, q.eval(hi));
                } else if q.b < 0.0 {
                    if lo == f64::NEG_INFINITY {
                        return Err(Error::Unbounded("negative slope at -inf".into()));
                    }
                    consider(lo, q.eval(lo));
                } else {
                    // Constant piece: every point attains the value; pick a
                    // deterministic representative, preferring 0.
                    let x = if lo <= 0.0 && 0.0 <= hi {
                        0.0
                    } else if lo.is_finite() {
                        lo
                    } else {
                        hi
                    };
                    consider(x, q.c);
                }
            } else {
                let xv = -q.b / (2.0 * q.a);
                if lo < xv && xv <= hi {
                    consider(xv, q.eval(xv));
                } else if xv <= lo {
                    // Decreasing on the piece; the supremum sits at lo and is
                    // attained there by continuity.
                    consider(lo, q.eval(lo));
                } else {
                    consider(hi, q.eval(hi));
                }
            }
        }
        for &(loc, s) in &self.spikes {
            consider(loc, self.quad_eval(loc) + s);
        }
        best.ok_or_else(|| Error::Unbounded("empty value function".into()))
    }

    /// Pointwise maximum of the quadratic part with the constant `floor`,
    /// with spikes re-expressed relative to the clipped quadratic: a spike at
    /// `x` keeps the surplus `max(Q(x) + s, floor) - max(Q(x), floor)` and is
    /// dropped when that is no longer positive.
    pub fn clip_below(&self, floor: f64) -> Self {
        let mut out_breaks: Vec<f64> = Vec::with_capacity(self.breaks.len() + 4);
        let mut out_pieces: Vec<QuadCoeffs> = Vec::with_capacity(self.pieces.len() + 4);
        let floor_piece = QuadCoeffs { a: 0.0, b: 0.0, c: floor };

        let push = |brk: Option<f64>, piece: QuadCoeffs, breaks: &mut Vec<f64>, pieces: &mut Vec<QuadCoeffs>| {
            // `brk` is the left edge of `piece` (None for the first piece).
            if let Some(b) = brk {
                if let Some(last) = pieces.last() {
                    if *last == piece {
                        return; // merge identical neighbours
                    }
                }
                breaks.push(b);
            }
            pieces.push(piece);
        };

        for (i, q) in self.pieces.iter().enumerate() {
            let (lo, hi) = self.interval(i);
            let left_edge = if i == 0 { None } else { Some(lo) };
            // Points interior to (lo, hi) where q crosses the floor, ordered.
            let crossings = crossing_points(q, floor, lo, hi);
            if crossings.is_empty() {
                let above = above_floor(q, floor, lo, hi);
                let piece = if above { *q } else { floor_piece };
                push(left_edge, piece, &mut out_breaks, &mut out_pieces);
                continue;
            }
            let mut edges = Vec::with_capacity(crossings.len() + 2);
            edges.push(lo);
            edges.extend_from_slice(&crossings);
            edges.push(hi);
            for w in 0..edges.len() - 1 {
                let (slo, shi) = (edges[w], edges[w + 1]);
                let above = above_floor(q, floor, slo, shi);
                let piece = if above { *q } else { floor_piece };
                let brk = if w == 0 { left_edge } else { Some(slo) };
                push(brk, piece, &mut out_breaks, &mut out_pieces);
            }
        }

        let clipped = Self {
            breaks: out_breaks,
            pieces: out_pieces,
            spikes: Vec::new(),
        };
        let spikes = self
            .spikes
            .iter()
            .filter_map(|&(loc, s)| {
                let old_q = self.quad_eval(loc);
                let surplus = (old_q + s).max(floor) - old_q.max(floor);
                (surplus > 0.0).then_some((loc, surplus))
            })
            .collect();
        Self { spikes, ..clipped }
    }

    /// Adds a constant to the quadratic part everywhere.
    pub fn add_constant(&self, delta: f64) -> Self {
        let pieces = self
            .pieces
            .iter()
            .map(|q| QuadCoeffs {
                c: q.c + delta,
                ..*q
            })
            .collect();
        Self {
            breaks: self.breaks.clone(),
            pieces,
            spikes: self.spikes.clone(),
        }
    }

    /// Pointwise maximum of two spike-free functions. Breakpoints are
    /// synchronized and each common interval is split at the crossings of
    /// the difference quadratic.
    pub fn pointwise_max(&self, other: &Self) -> Self {
        debug_assert!(self.spikes.is_empty() && other.spikes.is_empty());
        let mut edges: Vec<f64> = self
            .breaks
            .iter()
            .chain(other.breaks.iter())
            .copied()
            .collect();
        edges.sort_by(f64::total_cmp);
        edges.dedup();

        let mut out_breaks: Vec<f64> = Vec::new();
        let mut out_pieces: Vec<QuadCoeffs> = Vec::new();
        let mut push = |brk: Option<f64>, piece: QuadCoeffs| {
            if let Some(b) = brk {
                if let Some(last) = out_pieces.last() {
                    if *last == piece {
                        return;
                    }
                }
                out_breaks.push(b);
            }
            out_pieces.push(piece);
        };

        let n_intervals = edges.len() + 1;
        for w in 0..n_intervals {
            let lo = if w == 0 { f64::NEG_INFINITY } else { edges[w - 1] };
            let hi = if w == edges.len() { f64::INFINITY } else { edges[w] };
            let probe = if lo.is_finite() && hi.is_finite() {
                0.5 * (lo + hi)
            } else if lo.is_finite() {
                lo + 1.0
            } else if hi.is_finite() {
                hi - 1.0
            } else {
                0.0
            };
            let qa = self.pieces[self.piece_index(probe)];
            let qb = other.pieces[other.piece_index(probe)];
            let diff = QuadCoeffs {
                a: qa.a - qb.a,
                b: qa.b - qb.b,
                c: qa.c,
            };
            // Crossings of qa - qb = 0 inside (lo, hi).
            let crossings = crossing_points(&diff, qb.c, lo, hi);
            let mut sub = Vec::with_capacity(crossings.len() + 2);
            sub.push(lo);
            sub.extend_from_slice(&crossings);
            sub.push(hi);
            for s in 0..sub.len() - 1 {
                let (slo, shi) = (sub[s], sub[s + 1]);
                let piece = if above_floor_diff(&qa, &qb, slo, shi) { qa } else { qb };
                let brk = if w == 0 && s == 0 { None } else { Some(slo) };
                push(brk, piece);
            }
        }
        Self {
            breaks: out_breaks,
            pieces: out_pieces,
            spikes: Vec::new(),
        }
    }

    /// Adds the per-element data term: the concave quadratic
    /// `-(w/2)(x - center)^2` on every piece, and a spike of `zero_bonus` at
    /// `x = 0` (heights at the same location add).
    pub fn add_data_term(&self, weight: f64, center: f64, zero_bonus: f64) -> Self {
        debug_assert!(weight > 0.0 && zero_bonus >= 0.0);
        let pieces = self
            .pieces
            .iter()
            .map(|q| QuadCoeffs {
                a: q.a - 0.5 * weight,
                b: q.b + weight * center,
                c: q.c - 0.5 * weight * center * center,
            })
            .collect();
        let mut spikes = self.spikes.clone();
        if zero_bonus > 0.0 {
            match spikes.binary_search_by(|&(loc, _)| loc.partial_cmp(&0.0).unwrap()) {
                Ok(i) => spikes[i].1 += zero_bonus,
                Err(i) => spikes.insert(i, (0.0, zero_bonus)),
            }
        }
        spikes.retain(|&(_, s)| s > 0.0);
        Self {
            breaks: self.breaks.clone(),
            pieces,
            spikes,
        }
    }

    /// One recursion step of the jump penalty: clips the function from below
    /// at its maximum minus `jump_penalty`. Returns the clipped function and
    /// the `(argmax, max)` pair of the input.
    pub fn clip_with_jump_penalty(&self, jump_penalty: f64) -> Result<(Self, f64, f64)> {
        let (argmax, max) = self.max_point()?;
        Ok((self.clip_below(max - jump_penalty), argmax, max))
    }
}

/// Whether `qa >= qb` holds on a subinterval with no interior crossing of
/// their difference.
fn above_floor_diff(qa: &QuadCoeffs, qb: &QuadCoeffs, lo: f64, hi: f64) -> bool {
    let diff = QuadCoeffs {
        a: qa.a - qb.a,
        b: qa.b - qb.b,
        c: qa.c - qb.c,
    };
    above_floor(&diff, 0.0, lo, hi)
}

/// Whether `q >= floor` holds on `(lo, hi)`. Only called on subintervals
/// with no interior sign crossing, so the sign is constant apart from
/// tangency points; the decision uses the point farthest from the floor.
fn above_floor(q: &QuadCoeffs, floor: f64, lo: f64, hi: f64) -> bool {
    if lo == f64::NEG_INFINITY || hi == f64::INFINITY {
        // Leading behavior dominates on an unbounded side.
        if q.a != 0.0 {
            return q.a > 0.0;
        }
        if q.b != 0.0 {
            return (hi == f64::INFINITY && q.b > 0.0) || (lo == f64::NEG_INFINITY && q.b < 0.0);
        }
        return q.c >= floor;
    }
    let mut best = q.eval(lo) - floor;
    let d_hi = q.eval(hi) - floor;
    if d_hi.abs() > best.abs() {
        best = d_hi;
    }
    if q.a != 0.0 {
        let xv = -q.b / (2.0 * q.a);
        if lo <= xv && xv <= hi {
            let d_v = q.eval(xv) - floor;
            if d_v.abs() > best.abs() {
                best = d_v;
            }
        }
    }
    best >= 0.0
}

/// Solutions of `q(x) = floor` strictly inside `(lo, hi)`, ascending.
fn crossing_points(q: &QuadCoeffs, floor: f64, lo: f64, hi: f64) -> Vec<f64> {
    let c = q.c - floor;
    let mut roots = Vec::with_capacity(2);
    if q.a == 0.0 {
        if q.b != 0.0 {
            roots.push(-c / q.b);
        }
    } else {
        let disc = q.b * q.b - 4.0 * q.a * c;
        if disc >= TANGENCY_EPS {
            // Stable quadratic roots.
            let sq = disc.sqrt();
            let qq = -0.5 * (q.b + q.b.signum() * sq);
            let (r1, r2) = if q.b == 0.0 {
                let r = sq / (2.0 * q.a);
                (-r.abs(), r.abs())
            } else {
                let ra = qq / q.a;
                let rb = c / qq;
                (ra.min(rb), ra.max(rb))
            };
            roots.push(r1);
            if r2 > r1 {
                roots.push(r2);
            }
        }
        // disc < TANGENCY_EPS: tangency or no crossing; no sign change.
    }
    roots.retain(|&r| r.is_finite() && lo < r && r < hi);
    roots
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn max_of_shifted_parabola_is_vertex() {
        // -(x - 2)^2 = -x^2 + 4x - 4
        let f = PiecewiseValueFn::quadratic(-1.0, 4.0, -4.0);
        let (x, v) = f.max_point().unwrap();
        assert_abs_diff_eq!(x, 2.0, epsilon = 1e-15);
        assert_abs_diff_eq!(v, 0.0, epsilon = 1e-15);
    }

    #[test]
    fn spike_beats_smooth_max() {
        let mut f = PiecewiseValueFn::quadratic(-1.0, 0.0, 0.0);
        f.spikes.push((0.0, 1.0));
        let (x, v) = f.max_point().unwrap();
        assert_eq!(x, 0.0);
        assert_eq!(v, 1.0);
    }

    #[test]
    fn weak_spike_loses_to_vertex() {
        // -(x - 3)^2 with a +1 spike at 0: spike value is -9 + 1 = -8.
        let mut f = PiecewiseValueFn::quadratic(-1.0, 6.0, -9.0);
        f.spikes.push((0.0, 1.0));
        let (x, v) = f.max_point().unwrap();
        assert_abs_diff_eq!(x, 3.0, epsilon = 1e-12);
        assert_abs_diff_eq!(v, 0.0, epsilon = 1e-12);
    }

    #[test]
    fn unbounded_is_an_error() {
        assert!(PiecewiseValueFn::quadratic(1.0, 0.0, 0.0).max_point().is_err());
        assert!(PiecewiseValueFn::quadratic(0.0, 1.0, 0.0).max_point().is_err());
    }

    #[test]
    fn clip_introduces_plateaus() {
        // max{-x^2, -1}: plateau outside [-1, 1].
        let f = PiecewiseValueFn::quadratic(-1.0, 0.0, 0.0);
        let g = f.clip_below(-1.0);
        assert_eq!(g.pieces().len(), 3);
        assert_abs_diff_eq!(g.breaks()[0], -1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(g.breaks()[1], 1.0, epsilon = 1e-12);
        assert_eq!(g.quad_eval(-5.0), -1.0);
        assert_eq!(g.quad_eval(0.0), 0.0);
        assert_eq!(g.quad_eval(7.0), -1.0);
        g.validate().unwrap();
    }

    #[test]
    fn clip_at_max_yields_constant() {
        let f = PiecewiseValueFn::quadratic(-1.0, 0.0, 0.0);
        let (g, argmax, max) = f.clip_with_jump_penalty(0.0).unwrap();
        assert_eq!((argmax, max), (0.0, 0.0));
        assert_eq!(g.pieces().len(), 1);
        assert_eq!(g.quad_eval(123.0), 0.0);
    }

    #[test]
    fn clip_keeps_spike_surplus() {
        // -x^2 with spike(0 -> 0.5); max = 0.5 at 0; clip at 0.3.
        let mut f = PiecewiseValueFn::quadratic(-1.0, 0.0, 0.0);
        f.spikes.push((0.0, 0.5));
        let (g, argmax, max) = f.clip_with_jump_penalty(0.2).unwrap();
        assert_eq!((argmax, max), (0.0, 0.5));
        // The whole quadratic sits below 0.3, so the clipped quadratic is the
        // constant plateau; the spike keeps the surplus 0.5 - 0.3 = 0.2 and
        // the total at 0 stays max{0.5, 0.3} = 0.5.
        assert_eq!(g.quad_eval(0.0), 0.3);
        assert_eq!(g.eval(0.0), 0.5);
        assert_eq!(g.spikes(), &[(0.0, 0.2)]);
        assert_eq!(g.quad_eval(10.0), 0.3);
        g.validate().unwrap();
    }

    #[test]
    fn clip_drops_dominated_spike() {
        // Spike total -9 + 1 = -8 is far below a floor of -0.5.
        let mut f = PiecewiseValueFn::quadratic(-1.0, 6.0, -9.0);
        f.spikes.push((0.0, 1.0));
        let g = f.clip_below(-0.5);
        assert!(g.spikes().is_empty());
        assert_eq!(g.eval(0.0), -0.5);
    }

    #[test]
    fn data_term_builds_expected_quadratic() {
        // weight 2, center 1 on the zero function: -(x-1)^2.
        let f = PiecewiseValueFn::constant(0.0).add_data_term(2.0, 1.0, 0.0);
        assert_abs_diff_eq!(f.quad_eval(1.0), 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(f.quad_eval(0.0), -1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(f.quad_eval(3.0), -4.0, epsilon = 1e-15);
    }

    #[test]
    fn zero_bonus_becomes_spike() {
        let f = PiecewiseValueFn::constant(0.0).add_data_term(2.0, 0.0, 0.7);
        assert_eq!(f.spikes(), &[(0.0, 0.7)]);
        assert_abs_diff_eq!(f.eval(0.0), 0.7, epsilon = 1e-15);
    }

    #[test]
    fn spike_heights_add() {
        let f = PiecewiseValueFn::constant(0.0)
            .add_data_term(1.0, 0.0, 0.3)
            .add_data_term(1.0, 0.0, 0.7);
        assert_eq!(f.spikes(), &[(0.0, 1.0)]);
    }

    #[test]
    fn pointwise_max_of_two_parabolas() {
        // max{-(x+1)^2, -(x-1)^2} crosses at 0.
        let f = PiecewiseValueFn::quadratic(-1.0, -2.0, -1.0);
        let g = PiecewiseValueFn::quadratic(-1.0, 2.0, -1.0);
        let h = f.pointwise_max(&g);
        h.validate().unwrap();
        assert_eq!(h.breaks().len(), 1);
        assert_abs_diff_eq!(h.breaks()[0], 0.0, epsilon = 1e-12);
        for x in [-3.0, -1.0, -0.5, 0.5, 1.0, 2.5] {
            let expect = f.quad_eval(x).max(g.quad_eval(x));
            assert_abs_diff_eq!(h.quad_eval(x), expect, epsilon = 1e-12);
        }
    }

    #[test]
    fn pointwise_max_with_constant_function() {
        let f = PiecewiseValueFn::quadratic(-1.0, 0.0, 0.0);
        let g = PiecewiseValueFn::constant(-1.0);
        let h = f.pointwise_max(&g);
        for x in [-5.0, -1.0, 0.0, 0.7, 1.0, 9.0] {
            assert_abs_diff_eq!(h.quad_eval(x), (-x * x).max(-1.0), epsilon = 1e-12);
        }
        // Agrees with the clip operation that special-cases constants.
        let clipped = f.clip_below(-1.0);
        for x in [-3.0, -0.2, 0.0, 2.0] {
            assert_abs_diff_eq!(h.quad_eval(x), clipped.quad_eval(x), epsilon = 1e-12);
        }
    }

    #[test]
    fn add_constant_shifts_values() {
        let f = PiecewiseValueFn::quadratic(-1.0, 0.0, 0.0).add_constant(2.5);
        assert_eq!(f.quad_eval(0.0), 2.5);
        assert_eq!(f.quad_eval(1.0), 1.5);
    }

    #[test]
    fn eval_respects_half_open_intervals() {
        let f = PiecewiseValueFn::quadratic(-1.0, 0.0, 0.0).clip_below(-1.0);
        // Boundary x = 1 belongs to the middle piece; the function is
        // continuous so both sides agree there anyway.
        assert_abs_diff_eq!(f.quad_eval(1.0), -1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(f.quad_eval(1.0 + 1e-9), -1.0, epsilon = 1e-8);
    }
}
