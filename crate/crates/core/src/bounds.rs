//! Closed-form rate and round-count bounds with validity domains.
//!
//! Rates are in bits per node per source symbol (`log2`); the handful of
//! expressions stated with natural logarithms keep them, factor for factor.
//! Outside its stated domain an evaluator returns `valid = false` but still
//! computes the expression where finite; negative values are clamped to 0
//! (rates and round counts are nonnegative) with `clamped` set.

use serde::Serialize;

/// Evaluation of a named closed-form bound.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundValue {
    pub name: &'static str,
    /// Bits per node per symbol, or rounds for round-count bounds.
    pub value: f64,
    /// Input lies inside the bound's stated domain.
    pub valid: bool,
    /// The raw expression was negative (or undefined) and was clamped to 0.
    pub clamped: bool,
    /// The bound is proven only for sufficiently large `m`.
    pub asymptotic: bool,
    pub domain_note: &'static str,
}

impl BoundValue {
    fn new(name: &'static str, value: f64, valid: bool, domain_note: &'static str) -> Self {
        Self {
            name,
            value,
            valid,
            clamped: false,
            asymptotic: false,
            domain_note,
        }
    }

    fn clamped(mut self) -> Self {
        self.clamped = true;
        self
    }

    fn asymptotic(mut self) -> Self {
        self.asymptotic = true;
        self
    }
}

/// Distortion of the zero-rate protocol (every node keeps `X_i / m`):
/// `(m - 1) / m^2`.
pub fn zero_rate_distortion(m: usize) -> f64 {
    let mf = m as f64;
    (mf - 1.0) / (mf * mf)
}

/// Cutset lower bound on the network rate distortion function:
/// `log2((m-1) / (m^2 D)) / 2` for `D < (m-1)/m^2`, else exactly 0.
pub fn cutset_lower(m: usize, d: f64) -> BoundValue {
    const NAME: &str = "cutset_lower";
    if m < 2 || d <= 0.0 {
        return BoundValue::new(NAME, 0.0, false, "requires m >= 2 and D > 0");
    }
    let threshold = zero_rate_distortion(m);
    if d >= threshold {
        return BoundValue::new(NAME, 0.0, true, "zero-rate regime: D >= (m-1)/m^2");
    }
    let mf = m as f64;
    let value = 0.5 * ((mf - 1.0) / (mf * mf * d)).log2();
    BoundValue::new(NAME, value, true, "0 < D < (m-1)/m^2")
}

/// Exact rate distortion function of the 2-node network with correlated
/// sources of powers `P1`, `P2`, correlation `rho`, computing
/// `a1 X1 + a2 X2`:
/// `log2(a1 a2 (1 - rho^2) sqrt(P1 P2) / D) / 2`
/// for `D < min(a1^2 (1-rho^2) P1, a2^2 (1-rho^2) P2)`.
pub fn two_node_exact(a1: f64, a2: f64, rho: f64, p1: f64, p2: f64, d: f64) -> BoundValue {
    const NAME: &str = "two_node_exact";
    const NOTE: &str = "0 < D < min(a1^2 (1-rho^2) P1, a2^2 (1-rho^2) P2)";
    if a1 <= 0.0 || a2 <= 0.0 || p1 <= 0.0 || p2 <= 0.0 || rho.abs() > 1.0 || d <= 0.0 {
        return BoundValue::new(NAME, 0.0, false, NOTE).clamped();
    }
    let corr = 1.0 - rho * rho;
    let domain = d < (a1 * a1 * corr * p1).min(a2 * a2 * corr * p2);
    let arg = a1 * a2 * corr * (p1 * p2).sqrt() / d;
    if arg <= 1.0 {
        // Includes rho -> 1, where the expression dives to -infinity.
        return BoundValue::new(NAME, 0.0, domain, NOTE).clamped();
    }
    BoundValue::new(NAME, 0.5 * arg.log2(), domain, NOTE)
}

/// Minimum number of rounds of any averaging protocol reaching `D < 1/m^3`:
/// `2m - 3`. No claim is made for larger distortions.
pub fn min_rounds(m: usize, d: f64) -> BoundValue {
    const NAME: &str = "min_rounds";
    if m < 2 || d <= 0.0 {
        return BoundValue::new(NAME, 0.0, false, "requires m >= 2 and D > 0");
    }
    let mf = m as f64;
    if d < 1.0 / (mf * mf * mf) {
        BoundValue::new(NAME, (2 * m - 3) as f64, true, "D < 1/m^3")
    } else {
        BoundValue::new(NAME, 0.0, false, "no claim for D >= 1/m^3")
    }
}

/// Upper bound achieved by the centralized star protocol:
/// `((m-1)/m) log2(2 (m-1)^2 / (m^3 D))` for `D < (m-1)/m^2`.
pub fn star_upper(m: usize, d: f64) -> BoundValue {
    const NAME: &str = "star_upper";
    const NOTE: &str = "0 < D < (m-1)/m^2";
    if m < 2 || d <= 0.0 {
        return BoundValue::new(NAME, 0.0, false, "requires m >= 2 and D > 0");
    }
    let mf = m as f64;
    let valid = d < zero_rate_distortion(m);
    let raw = (mf - 1.0) / mf * (2.0 * (mf - 1.0) * (mf - 1.0) / (mf * mf * mf * d)).log2();
    if raw < 0.0 {
        BoundValue::new(NAME, 0.0, valid, NOTE).clamped()
    } else {
        BoundValue::new(NAME, raw, valid, NOTE)
    }
}

/// Tightened cutset bound for tree networks:
/// `((m-1)/(2m)) log2(1 / (2 m^3 D^2))` for `D < 1/m^2`.
pub fn tree_cutset_lower(m: usize, d: f64) -> BoundValue {
    const NAME: &str = "tree_cutset_lower";
    const NOTE: &str = "tree networks, 0 < D < 1/m^2";
    if m < 2 || d <= 0.0 {
        return BoundValue::new(NAME, 0.0, false, "requires m >= 2 and D > 0");
    }
    let mf = m as f64;
    let valid = d < 1.0 / (mf * mf);
    let raw = (mf - 1.0) / (2.0 * mf) * (1.0 / (2.0 * mf * mf * mf * d * d)).log2();
    if raw < 0.0 {
        BoundValue::new(NAME, 0.0, valid, NOTE).clamped()
    } else {
        BoundValue::new(NAME, raw, valid, NOTE)
    }
}

/// Minimum rounds of any distributed weighted-sum protocol:
/// `(m/2) log2(1 / (sqrt(D) + 1/m))` for `0 < D < (m-1)/m^2`.
pub fn ws_min_rounds(m: usize, d: f64) -> BoundValue {
    const NAME: &str = "ws_min_rounds";
    const NOTE: &str = "0 < D < (m-1)/m^2";
    if m < 2 || d <= 0.0 {
        return BoundValue::new(NAME, 0.0, false, "requires m >= 2 and D > 0");
    }
    let mf = m as f64;
    let valid = d < zero_rate_distortion(m);
    let raw = mf / 2.0 * (1.0 / (d.sqrt() + 1.0 / mf)).log2();
    if raw < 0.0 {
        BoundValue::new(NAME, 0.0, valid, NOTE).clamped()
    } else {
        BoundValue::new(NAME, raw, valid, NOTE)
    }
}

/// Lower bound on the weighted-sum network rate distortion function:
/// `(1/2) log2(1/(sqrt(D) + 1/m)) log2(1/(4mD))` for `0 < D < (m-1)/m^2`.
/// Zero when either factor is nonpositive.
pub fn ws_lower(m: usize, d: f64) -> BoundValue {
    const NAME: &str = "ws_lower";
    const NOTE: &str = "0 < D < (m-1)/m^2";
    if m < 2 || d <= 0.0 {
        return BoundValue::new(NAME, 0.0, false, "requires m >= 2 and D > 0");
    }
    let mf = m as f64;
    let valid = d < zero_rate_distortion(m);
    let a = (1.0 / (d.sqrt() + 1.0 / mf)).log2();
    let b = (1.0 / (4.0 * mf * d)).log2();
    if a > 0.0 && b > 0.0 {
        BoundValue::new(NAME, 0.5 * a * b, valid, NOTE)
    } else {
        BoundValue::new(NAME, 0.0, valid, NOTE).clamped()
    }
}

/// Minimum rounds of any gossip-based weighted-sum protocol:
/// `((m-1)/2) ln((m-1)/(mD))`.
pub fn gws_min_rounds(m: usize, d: f64) -> BoundValue {
    const NAME: &str = "gws_min_rounds";
    const NOTE: &str = "D > 0";
    if m < 2 || d <= 0.0 {
        return BoundValue::new(NAME, 0.0, false, "requires m >= 2 and D > 0");
    }
    let mf = m as f64;
    let raw = (mf - 1.0) / 2.0 * ((mf - 1.0) / (mf * d)).ln();
    if raw < 0.0 {
        BoundValue::new(NAME, 0.0, true, NOTE).clamped()
    } else {
        BoundValue::new(NAME, raw, true, NOTE)
    }
}

/// Lower bound on the gossip-based network rate distortion function:
/// `((m-1)/(2m)) ln((m-1)/(mD)) log2(1/(4mD))` for `0 < D < 1/(4m)`.
pub fn gws_lower(m: usize, d: f64) -> BoundValue {
    const NAME: &str = "gws_lower";
    const NOTE: &str = "0 < D < 1/(4m)";
    if m < 2 || d <= 0.0 {
        return BoundValue::new(NAME, 0.0, false, "requires m >= 2 and D > 0");
    }
    let mf = m as f64;
    let valid = d < 1.0 / (4.0 * mf);
    let a = ((mf - 1.0) / (mf * d)).ln();
    let b = (1.0 / (4.0 * mf * d)).log2();
    if a > 0.0 && b > 0.0 {
        BoundValue::new(NAME, (mf - 1.0) / (2.0 * mf) * a * b, valid, NOTE)
    } else {
        BoundValue::new(NAME, 0.0, valid, NOTE).clamped()
    }
}

/// Upper bound achieved by gossip-based weighted-sum protocols for large
/// `m`, with spectral gap `1 - lambda2`:
/// `(1/(m (1-lambda2))) ln(2/D) log2(ln(2/D) / (m^2 (1-lambda2) D))`.
/// Proven for `m >= m(D)` (unquantified), so always flagged asymptotic.
pub fn gws_upper(m: usize, d: f64, lambda2: f64) -> BoundValue {
    const NAME: &str = "gws_upper";
    const NOTE: &str = "holds for m >= m(D); gap must be positive";
    if m < 2 || d <= 0.0 || d >= 2.0 {
        return BoundValue::new(NAME, 0.0, false, "requires m >= 2 and 0 < D < 2").asymptotic();
    }
    let gap = 1.0 - lambda2;
    if gap <= 0.0 {
        return BoundValue::new(NAME, f64::INFINITY, false, "vanishing spectral gap").asymptotic();
    }
    let mf = m as f64;
    let ln_term = (2.0 / d).ln();
    let arg = ln_term / (mf * mf * gap * d);
    if arg <= 1.0 {
        return BoundValue::new(NAME, 0.0, false, "log argument <= 1").clamped().asymptotic();
    }
    let value = ln_term * arg.log2() / (mf * gap);
    BoundValue::new(NAME, value, true, NOTE).asymptotic()
}

/// Tighter two-regime upper bound for gossip-based weighted-sum protocols.
/// For `D >= 1/(m log2 m)`:
/// `(1/(m gap)) ln(3/D) log2(ln(m) / (2 m^2 gap D))`;
/// otherwise `(1/(m gap)) ln(8/D) log2(4 / (m^2 gap D))`. Asymptotic in `m`.
pub fn gws_upper_tight(m: usize, d: f64, lambda2: f64) -> BoundValue {
    const NAME: &str = "gws_upper_tight";
    const NOTE: &str = "two-regime refinement; holds for large m";
    if m < 2 || d <= 0.0 {
        return BoundValue::new(NAME, 0.0, false, "requires m >= 2 and D > 0").asymptotic();
    }
    let gap = 1.0 - lambda2;
    if gap <= 0.0 {
        return BoundValue::new(NAME, f64::INFINITY, false, "vanishing spectral gap").asymptotic();
    }
    let mf = m as f64;
    let slow_regime = d >= 1.0 / (mf * mf.log2());
    let (ln_term, arg) = if slow_regime {
        ((3.0 / d).ln(), mf.ln() / (2.0 * mf * mf * gap * d))
    } else {
        ((8.0 / d).ln(), 4.0 / (mf * mf * gap * d))
    };
    if ln_term <= 0.0 || arg <= 1.0 {
        return BoundValue::new(NAME, 0.0, false, "expression degenerates").clamped().asymptotic();
    }
    let value = ln_term * arg.log2() / (mf * gap);
    BoundValue::new(NAME, value, true, NOTE).asymptotic()
}

/// Closed-form upper bound on the average distortion of a gossip-based
/// weighted-sum protocol after `t_rounds` rounds, with
/// `u = d / (2m (1-d))`:
///
/// `(1/m^2)((1+u)^T - 1) + (u/(m(1-l2+u)))(1+u)^T + u/(m(1-l2-u)) + (l2+u)^T`
///
/// Returns infinity when `u >= 1 - lambda2` (the third term's pole).
pub fn lemma7_distortion_upper(m: usize, t_rounds: usize, d: f64, lambda2: f64) -> f64 {
    let mf = m as f64;
    let u = d / (2.0 * mf * (1.0 - d));
    let gap = 1.0 - lambda2;
    if u >= gap {
        return f64::INFINITY;
    }
    let t = t_rounds as i32;
    let growth = (1.0 + u).powi(t);
    (growth - 1.0) / (mf * mf)
        + u / (mf * (gap + u)) * growth
        + u / (mf * (gap - u))
        + (lambda2 + u).powi(t)
}

/// Lower convex envelope of an upper-bound curve against the zero-rate
/// point `(D0, 0)` with `D0 = (m-1)/m^2` (time-sharing with the degenerate
/// protocol). Input and output are `(D, R)` pairs; the output keeps the
/// input grid, with `R = 0` for `D >= D0`.
pub fn time_share(m: usize, curve: &[(f64, f64)]) -> Vec<(f64, f64)> {
    let d0 = zero_rate_distortion(m);
    let mut pts: Vec<(f64, f64)> = curve
        .iter()
        .copied()
        .filter(|&(d, r)| d > 0.0 && d < d0 && r.is_finite())
        .collect();
    pts.push((d0, 0.0));
    pts.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));
    pts.dedup_by(|next, prev| {
        if next.0 == prev.0 {
            prev.1 = prev.1.min(next.1);
            true
        } else {
            false
        }
    });

    // Andrew monotone chain, lower hull.
    let cross = |o: (f64, f64), a: (f64, f64), b: (f64, f64)| -> f64 {
        (a.0 - o.0) * (b.1 - o.1) - (a.1 - o.1) * (b.0 - o.0)
    };
    let mut hull: Vec<(f64, f64)> = Vec::with_capacity(pts.len());
    for &p in &pts {
        while hull.len() >= 2 && cross(hull[hull.len() - 2], hull[hull.len() - 1], p) <= 0.0 {
            hull.pop();
        }
        hull.push(p);
    }

    let eval = |d: f64| -> f64 {
        if d >= d0 {
            return 0.0;
        }
        if hull.len() == 1 || d <= hull[0].0 {
            return hull[0].1;
        }
        for w in hull.windows(2) {
            let (x0, y0) = w[0];
            let (x1, y1) = w[1];
            if d <= x1 {
                return y0 + (y1 - y0) * (d - x0) / (x1 - x0);
            }
        }
        hull.last().unwrap().1
    };

    curve
        .iter()
        .map(|&(d, r)| {
            let env = eval(d);
            (d, if env.is_finite() { env.min(r) } else { r })
        })
        .collect()
}
