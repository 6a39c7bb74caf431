//! Exact solver for the weighted univariate fused-and-sparse problem
//!
//! ```text
//! minimize  (1/2) sum_i n_i (beta_i - ybar_i)^2
//!           + lambda0t * ||beta||_0
//!           + lambdat  * #{i : beta_i != beta_{i+1}}
//! ```
//!
//! over a sequence sorted nonincreasing in `ybar`. The solver runs a forward
//! dynamic program over piecewise-quadratic-plus-spike value functions and a
//! backward trace. Zero coefficients are decided structurally: the sparsity
//! bonus enters only as a spike at zero, so a zero in the output is an exact
//! `0.0`, never a thresholded small value.

use crate::error::{Error, Result};
use crate::pwq::PiecewiseValueFn;

/// A sorted weighted sequence: targets nonincreasing, weights positive.
#[derive(Debug, Clone)]
pub struct WeightedSequence {
    ybar: Vec<f64>,
    weights: Vec<f64>,
}

impl WeightedSequence {
    pub fn new(ybar: Vec<f64>, weights: Vec<f64>) -> Result<Self> {
        if ybar.is_empty() || ybar.len() != weights.len() {
            return Err(Error::DimensionMismatch(
                "sequence targets and weights must be non-empty and equal length".into(),
            ));
        }
        if ybar.iter().any(|v| !v.is_finite()) || weights.iter().any(|w| !(w.is_finite() && *w > 0.0))
        {
            return Err(Error::InvalidData(
                "sequence values must be finite with positive weights".into(),
            ));
        }
        if ybar.windows(2).any(|w| w[0] < w[1]) {
            return Err(Error::InvalidData("targets must be nonincreasing".into()));
        }
        Ok(Self { ybar, weights })
    }

    pub fn len(&self) -> usize {
        self.ybar.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ybar.is_empty()
    }

    pub fn ybar(&self) -> &[f64] {
        &self.ybar
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }
}

/// Solution of the univariate problem.
#[derive(Debug, Clone)]
pub struct SegmentSolution {
    pub beta: Vec<f64>,
    pub objective: f64,
    pub jump_count: usize,
    pub nonzero_count: usize,
}

fn check_penalties(lambda0t: f64, lambdat: f64) -> Result<()> {
    if !(lambda0t.is_finite() && lambdat.is_finite() && lambda0t >= 0.0 && lambdat >= 0.0) {
        return Err(Error::InvalidParameter(
            "segment penalties must be finite and non-negative".into(),
        ));
    }
    Ok(())
}

/// Direct evaluation of the univariate objective for a candidate `beta`.
pub fn segment_objective(seq: &WeightedSequence, beta: &[f64], lambda0t: f64, lambdat: f64) -> f64 {
    let loss: f64 = beta
        .iter()
        .zip(seq.ybar())
        .zip(seq.weights())
        .map(|((&b, &y), &w)| 0.5 * w * (b - y) * (b - y))
        .sum();
    let nonzero = beta.iter().filter(|&&b| b != 0.0).count();
    let jumps = beta.windows(2).filter(|w| w[0] != w[1]).count();
    loss + lambda0t * nonzero as f64 + lambdat * jumps as f64
}

fn solution_from_beta(
    seq: &WeightedSequence,
    beta: Vec<f64>,
    lambda0t: f64,
    lambdat: f64,
) -> SegmentSolution {
    let objective = segment_objective(seq, &beta, lambda0t, lambdat);
    let jump_count = beta.windows(2).filter(|w| w[0] != w[1]).count();
    let nonzero_count = beta.iter().filter(|&&b| b != 0.0).count();
    SegmentSolution {
        beta,
        objective,
        jump_count,
        nonzero_count,
    }
}

/// Exact dynamic program for the sorted problem.
pub fn dp_seg_pen_l0(seq: &WeightedSequence, lambda0t: f64, lambdat: f64) -> Result<SegmentSolution> {
    check_penalties(lambda0t, lambdat)?;
    let m = seq.len();
    let (ybar, w) = (seq.ybar(), seq.weights());

    // Forward pass. delta_k is the best achievable prefix value as a function
    // of the k-th coefficient; jump_info[k-2] records (argmax, max) of
    // delta_{k-1} for the backward trace.
    let mut deltas: Vec<PiecewiseValueFn> = Vec::with_capacity(m);
    let mut jump_info: Vec<(f64, f64)> = Vec::with_capacity(m.saturating_sub(1));
    let first = PiecewiseValueFn::constant(0.0).add_data_term(w[0], ybar[0], lambda0t);
    first.validate()?;
    deltas.push(first);
    for k in 1..m {
        let (clipped, argmax, max) = deltas[k - 1].clip_with_jump_penalty(lambdat)?;
        jump_info.push((argmax, max));
        let next = clipped.add_data_term(w[k], ybar[k], lambda0t);
        next.validate()?;
        deltas.push(next);
    }

    // Backward trace. At each step the candidates are "stay" (keep the value
    // chosen to the right, no jump) and "jump" (the stored argmax, paying the
    // jump penalty); ties prefer zero, then the smaller value.
    let mut beta = vec![0.0; m];
    let (last_arg, _last_max) = deltas[m - 1].max_point()?;
    beta[m - 1] = last_arg;
    for k in (0..m - 1).rev() {
        let stay_b = beta[k + 1];
        let stay_v = deltas[k].eval(stay_b);
        let (jump_b, prev_max) = jump_info[k];
        let jump_v = prev_max - lambdat;
        beta[k] = if stay_v > jump_v {
            stay_b
        } else if jump_v > stay_v {
            jump_b
        } else if stay_b == 0.0 {
            stay_b
        } else if jump_b == 0.0 {
            jump_b
        } else if jump_b < stay_b {
            jump_b
        } else {
            stay_b
        };
    }

    Ok(solution_from_beta(seq, beta, lambda0t, lambdat))
}

/// Wrapper for unsorted inputs: stable-sorts by target descending (ties by
/// original index), solves, and un-permutes the solution. The reported jump
/// and objective bookkeeping refers to the sorted order.
pub fn dp_seg_pen_l0_unsorted(
    values: &[f64],
    weights: &[f64],
    lambda0t: f64,
    lambdat: f64,
) -> Result<SegmentSolution> {
    let m = values.len();
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&a, &b| values[b].total_cmp(&values[a]).then(a.cmp(&b)));
    let seq = WeightedSequence::new(
        order.iter().map(|&i| values[i]).collect(),
        order.iter().map(|&i| weights[i]).collect(),
    )?;
    let sorted = dp_seg_pen_l0(&seq, lambda0t, lambdat)?;
    let mut beta = vec![0.0; m];
    for (pos, &i) in order.iter().enumerate() {
        beta[i] = sorted.beta[pos];
    }
    Ok(SegmentSolution { beta, ..sorted })
}

/// Practical size limit for the exhaustive oracle.
pub const BRUTE_FORCE_MAX_LEN: usize = 18;

/// Independent exhaustive solver: enumerates every subset of the `m - 1`
/// breakpoints; within each segment the level is the better of 0 and the
/// weighted mean. Exact for the same problem as [`dp_seg_pen_l0`], by a
/// completely different route.
pub fn brute_force_univariate(
    seq: &WeightedSequence,
    lambda0t: f64,
    lambdat: f64,
) -> Result<SegmentSolution> {
    check_penalties(lambda0t, lambdat)?;
    let m = seq.len();
    if m > BRUTE_FORCE_MAX_LEN {
        return Err(Error::GuardExceeded(format!(
            "brute-force univariate solver is limited to {BRUTE_FORCE_MAX_LEN} elements, got {m}"
        )));
    }
    let (ybar, w) = (seq.ybar(), seq.weights());
    let mut best: Option<(f64, Vec<f64>)> = None;
    for mask in 0u64..(1u64 << (m - 1)) {
        let mut total = 0.0;
        let mut beta = vec![0.0; m];
        let mut start = 0usize;
        let mut segments = 0usize;
        for end in 0..m {
            let boundary = end + 1 == m || (mask >> end) & 1 == 1;
            if !boundary {
                continue;
            }
            segments += 1;
            let (mut sw, mut swy, mut swyy) = (0.0, 0.0, 0.0);
            for i in start..=end {
                sw += w[i];
                swy += w[i] * ybar[i];
                swyy += w[i] * ybar[i] * ybar[i];
            }
            let zero_cost = 0.5 * swyy;
            let mean = swy / sw;
            let mean_cost = 0.5 * (swyy - swy * swy / sw) + lambda0t * (end - start + 1) as f64;
            // Ties go to the zero level.
            let (cost, level) = if mean_cost < zero_cost {
                (mean_cost, mean)
            } else {
                (zero_cost, 0.0)
            };
            total += cost;
            for b in beta.iter_mut().take(end + 1).skip(start) {
                *b = level;
            }
            start = end + 1;
        }
        total += lambdat * (segments - 1) as f64;
        if best.as_ref().map_or(true, |(bv, _)| total < *bv) {
            best = Some((total, beta));
        }
    }
    let (_, beta) = best.expect("at least one segmentation");
    Ok(solution_from_beta(seq, beta, lambda0t, lambdat))
}

/// Solution of the distinct-count form of the univariate problem:
///
/// ```text
/// minimize  (1/2) sum_i n_i (beta_i - ybar_i)^2
///           + lambda0t * ||beta||_0
///           + lambdat  * |{beta_1, ..., beta_m}|        (zero counts once)
/// ```
///
/// This differs from the jump-count form exactly when zero appears in
/// non-adjacent runs: the jump form pays for every boundary, the distinct
/// form pays for the zero value once. With a positive sparsity bonus and
/// unequal weights the two optima can genuinely differ.
#[derive(Debug, Clone)]
pub struct DistinctSolution {
    pub beta: Vec<f64>,
    pub objective: f64,
    /// Distinct values in `beta`, including a pre-existing zero cluster when
    /// the solve started in the zero-used state.
    pub distinct_count: usize,
    pub nonzero_count: usize,
}

/// Direct evaluation of the distinct-form objective.
pub fn distinct_objective(
    seq: &WeightedSequence,
    beta: &[f64],
    lambda0t: f64,
    lambdat: f64,
    zero_pre_used: bool,
) -> f64 {
    let loss: f64 = beta
        .iter()
        .zip(seq.ybar())
        .zip(seq.weights())
        .map(|((&b, &y), &w)| 0.5 * w * (b - y) * (b - y))
        .sum();
    let nonzero = beta.iter().filter(|&&b| b != 0.0).count();
    let mut sorted: Vec<f64> = beta.iter().map(|&b| if b == 0.0 { 0.0 } else { b }).collect();
    if zero_pre_used {
        sorted.push(0.0);
    }
    sorted.sort_by(f64::total_cmp);
    sorted.dedup();
    loss + lambda0t * nonzero as f64 + lambdat * sorted.len() as f64
}

/// Per-step state of the three-track recursion.
struct DistinctStep {
    /// No zero used; the argument is the open nonzero cluster value.
    a: Option<PiecewiseValueFn>,
    /// Zero used; the argument is the open nonzero cluster value.
    b: Option<PiecewiseValueFn>,
    /// Zero used, no nonzero cluster yet.
    c: Option<f64>,
    a_max: Option<(f64, f64)>,
    b_max: Option<(f64, f64)>,
}

/// Exact solver for the distinct-count form over a sorted sequence.
///
/// Tracks three value functions in the maximization form: prefix payoffs
/// with no zero assignment yet, with zero used while a nonzero cluster is
/// open (zeroed elements may interrupt a cluster without closing it), and
/// with only zeros so far. Opening a nonzero cluster or first using zero
/// charges the fusion weight; every nonzero element charges the sparsity
/// weight. `zero_pre_used` starts the recursion with the zero cluster
/// already present and charged, which models a block whose remaining levels
/// are pinned to zero.
pub fn dp_seg_distinct(
    seq: &WeightedSequence,
    lambda0t: f64,
    lambdat: f64,
    zero_pre_used: bool,
) -> Result<DistinctSolution> {
    check_penalties(lambda0t, lambdat)?;
    let m = seq.len();
    let (ybar, w) = (seq.ybar(), seq.weights());
    // Max-form element payoffs: nonzero at x costs loss plus the sparsity
    // bonus as a constant; zero costs the full squared target.
    let nz = |k: usize, f: &PiecewiseValueFn| -> PiecewiseValueFn {
        f.add_data_term(w[k], ybar[k], 0.0).add_constant(-lambda0t)
    };
    let ez = |k: usize| -> f64 { -0.5 * w[k] * ybar[k] * ybar[k] };

    let mut steps: Vec<DistinctStep> = Vec::with_capacity(m);
    for k in 0..m {
        let prev = steps.last();
        let (pa, pb, pc) = match prev {
            None => {
                if zero_pre_used {
                    (None, None, Some(-lambdat))
                } else {
                    (Some(PiecewiseValueFn::constant(-lambdat)), None, None)
                }
            }
            Some(s) => (s.a.clone(), s.b.clone(), s.c),
        };
        // A: join the open cluster or open a new one.
        let a = match (&pa, prev) {
            (Some(f), Some(_)) => {
                let (_, mx) = f.max_point()?;
                Some(nz(k, &f.clip_below(mx - lambdat)))
            }
            (Some(f), None) => Some(nz(k, f)), // k = 0: the base already charges the opening
            (None, _) => None,
        };
        // B: nonzero branches (join/new within B, first cluster from C) and
        // zero branches (stay zero in B, first zero from A).
        let b_nz = match &pb {
            None => None,
            Some(f) => {
                let (_, mx) = f.max_point()?;
                Some(f.clip_below(mx - lambdat))
            }
        };
        let b_nz = match (b_nz, pc) {
            (Some(f), Some(c)) => Some(f.clip_below(c - lambdat)),
            (Some(f), None) => Some(f),
            (None, Some(c)) => Some(PiecewiseValueFn::constant(c - lambdat)),
            (None, None) => None,
        }
        .map(|f| nz(k, &f));
        // The zero branch needs a processed element behind it: at k = 0 the
        // `pa` placeholder is the pre-element base state and an open cluster
        // cannot exist yet, so the branch is unreachable.
        let b_zero = if prev.is_none() {
            None
        } else {
            match (&pb, &pa) {
                (Some(fb), Some(fa)) => Some(fb.pointwise_max(&fa.add_constant(-lambdat))),
                (Some(fb), None) => Some(fb.clone()),
                (None, Some(fa)) => Some(fa.add_constant(-lambdat)),
                (None, None) => None,
            }
            .map(|f| f.add_constant(ez(k)))
        };
        let b = match (b_nz, b_zero) {
            (Some(x), Some(y)) => Some(x.pointwise_max(&y)),
            (Some(x), None) => Some(x),
            (None, Some(y)) => Some(y),
            (None, None) => None,
        };
        // C: all zeros so far.
        let c = match (pc, prev) {
            (Some(cv), Some(_)) => Some(cv + ez(k)),
            (Some(cv), None) => Some(cv + ez(k)),
            (None, Some(_)) => None,
            (None, None) => Some(-lambdat + ez(k)), // first element zeroed
        };
        let a_max = a.as_ref().map(|f| f.max_point()).transpose()?;
        let b_max = b.as_ref().map(|f| f.max_point()).transpose()?;
        if let Some(f) = &a {
            f.validate()?;
        }
        if let Some(f) = &b {
            f.validate()?;
        }
        steps.push(DistinctStep { a, b, c, a_max, b_max });
    }

    // Terminal state: the best of the three tracks.
    #[derive(Clone, Copy, PartialEq)]
    enum Track {
        A,
        B,
        C,
    }
    let last = steps.last().expect("non-empty sequence");
    let mut best: Option<(f64, Track, f64)> = None; // (value, track, open b)
    let mut consider = |v: f64, t: Track, x: f64| {
        if best.map_or(true, |(bv, _, _)| v > bv) {
            best = Some((v, t, x));
        }
    };
    if let Some((x, v)) = last.a_max {
        consider(v, Track::A, x);
    }
    if let Some((x, v)) = last.b_max {
        consider(v, Track::B, x);
    }
    if let Some(cv) = last.c {
        consider(cv, Track::C, 0.0);
    }
    let (value, mut track, mut open) = best.expect("at least one reachable track");

    // Backtrace: replay each step's candidate transitions at the known open
    // cluster value and pick the branch that attains the stored maximum.
    let mut beta = vec![0.0; m];
    for k in (0..m).rev() {
        let prev = if k == 0 { None } else { Some(&steps[k - 1]) };
        let nz_payoff = |b: f64| -0.5 * w[k] * (b - ybar[k]) * (b - ybar[k]) - lambda0t;
        let ez_k = ez(k);
        match track {
            Track::C => {
                beta[k] = 0.0;
                // stays in C
            }
            Track::A => {
                beta[k] = open;
                match prev {
                    None => {}
                    Some(p) => {
                        let f = p.a.as_ref().expect("A reachable");
                        let join = f.eval(open) + nz_payoff(open);
                        let (amx_x, amx_v) = p.a_max.expect("max stored with the track");
                        let fresh = amx_v - lambdat + nz_payoff(open);
                        if join >= fresh {
                            // keep open value
                        } else {
                            open = amx_x;
                        }
                    }
                }
            }
            Track::B => {
                let p = match prev {
                    Some(p) => p,
                    None => {
                        // Only reachable at k = 0 with a pre-used zero: the
                        // element opened the first nonzero cluster from C.
                        beta[k] = open;
                        continue;
                    }
                };
                // Candidate transitions into B_k evaluated at `open`.
                let mut cands: Vec<(f64, Track, f64, f64)> = Vec::new(); // (value, prev track, prev open, beta_k)
                if let Some(fb) = &p.b {
                    cands.push((fb.eval(open) + nz_payoff(open), Track::B, open, open));
                    let (bmx_x, bmx_v) = p.b_max.expect("max stored with the track");
                    cands.push((bmx_v - lambdat + nz_payoff(open), Track::B, bmx_x, open));
                    cands.push((fb.eval(open) + ez_k, Track::B, open, 0.0));
                }
                if let Some(cv) = p.c {
                    cands.push((cv - lambdat + nz_payoff(open), Track::C, 0.0, open));
                }
                if let Some(fa) = &p.a {
                    cands.push((fa.eval(open) - lambdat + ez_k, Track::A, open, 0.0));
                }
                let bestc = cands
                    .iter()
                    .cloned()
                    .max_by(|x, y| x.0.total_cmp(&y.0).then_with(|| {
                        // Prefer assigning zero on exact ties.
                        let xz = x.3 == 0.0;
                        let yz = y.3 == 0.0;
                        xz.cmp(&yz)
                    }))
                    .expect("B has a predecessor");
                beta[k] = bestc.3;
                track = bestc.1;
                open = bestc.2;
            }
        }
    }

    let nonzero_count = beta.iter().filter(|&&b| b != 0.0).count();
    let objective = distinct_objective(seq, &beta, lambda0t, lambdat, zero_pre_used);
    debug_assert!(
        (objective - (-value)).abs() <= 1e-7 * (1.0 + objective.abs()),
        "objective {objective} vs recursion value {}",
        -value
    );
    let mut distinct: Vec<f64> = beta.iter().map(|&b| if b == 0.0 { 0.0 } else { b }).collect();
    if zero_pre_used {
        distinct.push(0.0);
    }
    distinct.sort_by(f64::total_cmp);
    distinct.dedup();
    Ok(DistinctSolution {
        beta,
        objective,
        distinct_count: distinct.len(),
        nonzero_count,
    })
}

/// Unsorted-input wrapper for [`dp_seg_distinct`].
pub fn dp_seg_distinct_unsorted(
    values: &[f64],
    weights: &[f64],
    lambda0t: f64,
    lambdat: f64,
    zero_pre_used: bool,
) -> Result<DistinctSolution> {
    let m = values.len();
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&a, &b| values[b].total_cmp(&values[a]).then(a.cmp(&b)));
    let seq = WeightedSequence::new(
        order.iter().map(|&i| values[i]).collect(),
        order.iter().map(|&i| weights[i]).collect(),
    )?;
    let sorted = dp_seg_distinct(&seq, lambda0t, lambdat, zero_pre_used)?;
    let mut beta = vec![0.0; m];
    for (pos, &i) in order.iter().enumerate() {
        beta[i] = sorted.beta[pos];
    }
    Ok(DistinctSolution { beta, ..sorted })
}

/// Independent oracle for [`dp_seg_distinct`]: enumerates every set
/// partition of the elements (clusters need not be contiguous) with one
/// optional zero cluster, scoring each with per-cluster weighted means.
pub fn brute_force_distinct(
    seq: &WeightedSequence,
    lambda0t: f64,
    lambdat: f64,
    zero_pre_used: bool,
) -> Result<DistinctSolution> {
    check_penalties(lambda0t, lambdat)?;
    let m = seq.len();
    if m > 10 {
        return Err(Error::GuardExceeded(format!(
            "distinct-form oracle is limited to 10 elements, got {m}"
        )));
    }
    let (ybar, w) = (seq.ybar(), seq.weights());
    let mut best: Option<(f64, Vec<f64>)> = None;
    for assignment in crate::mip::set_partitions(m) {
        let n_clusters = assignment.iter().copied().max().map_or(0, |x| x + 1);
        // Any one cluster may be the zero cluster, or none.
        for zero in std::iter::once(None).chain((0..n_clusters).map(Some)) {
            let mut beta = vec![0.0; m];
            let mut loss = 0.0;
            let mut nonzero = 0usize;
            for cluster in 0..n_clusters {
                let members: Vec<usize> =
                    (0..m).filter(|&i| assignment[i] == cluster).collect();
                let level = if zero == Some(cluster) {
                    0.0
                } else {
                    let sw: f64 = members.iter().map(|&i| w[i]).sum();
                    let swy: f64 = members.iter().map(|&i| w[i] * ybar[i]).sum();
                    nonzero += members.len();
                    swy / sw
                };
                for &i in &members {
                    beta[i] = level;
                    loss += 0.5 * w[i] * (ybar[i] - level) * (ybar[i] - level);
                }
            }
            let has_zero = zero.is_some() || zero_pre_used;
            let distinct = n_clusters - usize::from(zero.is_some()) + usize::from(has_zero);
            let total = loss + lambda0t * nonzero as f64 + lambdat * distinct as f64;
            if best.as_ref().map_or(true, |(bv, _)| total < *bv) {
                best = Some((total, beta));
            }
        }
    }
    let (_, beta) = best.expect("at least one partition");
    let objective = distinct_objective(seq, &beta, lambda0t, lambdat, zero_pre_used);
    let nonzero_count = beta.iter().filter(|&&b| b != 0.0).count();
    let mut distinct: Vec<f64> = beta.iter().map(|&b| if b == 0.0 { 0.0 } else { b }).collect();
    if zero_pre_used {
        distinct.push(0.0);
    }
    distinct.sort_by(f64::total_cmp);
    distinct.dedup();
    Ok(DistinctSolution {
        beta,
        objective,
        distinct_count: distinct.len(),
        nonzero_count,
    })
}
