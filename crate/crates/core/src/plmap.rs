//! 1-periodic piecewise-linear homeomorphisms of the real line.
//!
//! A [`PLMap1P`] stores one period of breakpoints and extends by
//! f(x + m) = f(x) + m. Every segment slope is a power of 2: a PL map
//! with dyadic breakpoints that preserves the dyadics in both directions
//! has dyadic slopes with dyadic reciprocals, so each slope is 2^s for an
//! integer s. Slopes are therefore handled through their base-2 logs and
//! all arithmetic stays exact.

use std::fmt;
use std::str::FromStr;

use num_bigint::BigInt;

use crate::dyadic::Dyadic;
use crate::error::{MathError, ParseError};

/// One period of an orientation-preserving PL homeomorphism commuting
/// with x -> x + 1. Canonical form: node x-coordinates lie in [0, 1),
/// strictly increase, and no node is collinear with its neighbours,
/// except that an affine map (a translation) keeps a single anchor node
/// at x = 0.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct PLMap1P {
    nodes: Vec<(Dyadic, Dyadic)>,
    /// slope_logs[i] is log2 of the slope between node i and node i+1
    /// (the last entry belongs to the wrap segment back to node 0 + 1).
    slope_logs: Vec<i64>,
}

/// log2 of dy/dx when that ratio is a power of 2, for positive dx, dy.
/// With canonical forms dy = a/2^p and dx = b/2^q (a, b odd), the ratio
/// is a power of 2 exactly when a = b, and then equals 2^(q-p).
pub fn slope_log2(dx: &Dyadic, dy: &Dyadic) -> Option<i64> {
    if !dx.is_positive() || !dy.is_positive() {
        return None;
    }
    if dx.mantissa() != dy.mantissa() {
        return None;
    }
    Some(dx.exponent() as i64 - dy.exponent() as i64)
}

impl PLMap1P {
    /// Builds the canonical map through the given nodes (one period).
    /// Nodes may be given in any order and any integer translates; they
    /// are reduced to the window [0, 1), validated and pruned.
    pub fn from_nodes(nodes: Vec<(Dyadic, Dyadic)>) -> Result<Self, MathError> {
        if nodes.is_empty() {
            return Err(MathError::NotHomeomorphism("empty node list".into()));
        }
        let mut reduced: Vec<(Dyadic, Dyadic)> = nodes
            .into_iter()
            .map(|(x, y)| {
                let m = Dyadic::from_int(x.floor());
                (&x - &m, &y - &m)
            })
            .collect();
        reduced.sort();
        reduced.dedup();
        for w in reduced.windows(2) {
            if w[0].0 == w[1].0 {
                return Err(MathError::NotHomeomorphism(format!(
                    "two images for breakpoint {}",
                    w[0].0
                )));
            }
            if w[0].1 >= w[1].1 {
                return Err(MathError::NotHomeomorphism(format!(
                    "values not increasing at breakpoint {}",
                    w[1].0
                )));
            }
        }
        let k = reduced.len();
        let wrap = (
            &reduced[0].0 + &Dyadic::one(),
            &reduced[0].1 + &Dyadic::one(),
        );
        if k > 1 && reduced[k - 1].1 >= wrap.1 {
            return Err(MathError::NotHomeomorphism(
                "values not increasing across the period wrap".into(),
            ));
        }
        let mut slope_logs = Vec::with_capacity(k);
        for i in 0..k {
            let (x0, y0) = &reduced[i];
            let (x1, y1) = if i + 1 < k { &reduced[i + 1] } else { &wrap };
            let dx = x1 - x0;
            let dy = y1 - y0;
            let s = slope_log2(&dx, &dy).ok_or(MathError::SlopeNotPowerOfTwo {
                dx: dx.to_string(),
                dy: dy.to_string(),
            })?;
            slope_logs.push(s);
        }
        // prune nodes whose left and right slopes agree
        let mut kept_nodes = Vec::with_capacity(k);
        let mut kept_slopes = Vec::with_capacity(k);
        for i in 0..k {
            let left = slope_logs[(i + k - 1) % k];
            if left != slope_logs[i] {
                kept_nodes.push(reduced[i].clone());
                kept_slopes.push(slope_logs[i]);
            }
        }
        if kept_nodes.is_empty() {
            // affine: slope is forced to 1 by periodicity; keep an anchor at 0
            let c = &reduced[0].1 - &reduced[0].0;
            return Ok(PLMap1P {
                nodes: vec![(Dyadic::zero(), c)],
                slope_logs: vec![0],
            });
        }
        Ok(PLMap1P {
            nodes: kept_nodes,
            slope_logs: kept_slopes,
        })
    }

    pub fn identity() -> Self {
        PLMap1P {
            nodes: vec![(Dyadic::zero(), Dyadic::zero())],
            slope_logs: vec![0],
        }
    }

    /// x -> x + c.
    pub fn translation(c: Dyadic) -> Self {
        PLMap1P {
            nodes: vec![(Dyadic::zero(), c)],
            slope_logs: vec![0],
        }
    }

    pub fn is_identity(&self) -> bool {
        self.nodes.len() == 1 && self.nodes[0].0.is_zero() && self.nodes[0].1.is_zero()
    }

    pub fn nodes(&self) -> &[(Dyadic, Dyadic)] {
        &self.nodes
    }

    pub fn slope_logs(&self) -> &[i64] {
        &self.slope_logs
    }

    fn window_start(&self) -> &Dyadic {
        &self.nodes[0].0
    }

    /// Reduces x into [x0, x0 + 1) and returns (reduced x, the integer
    /// translate that was subtracted).
    fn reduce(&self, x: &Dyadic) -> (Dyadic, Dyadic) {
        let t = Dyadic::from_int((x - self.window_start()).floor());
        (x - &t, t)
    }

    /// Index of the segment containing the reduced coordinate.
    fn segment_of(&self, xr: &Dyadic) -> usize {
        // last i with nodes[i].0 <= xr
        match self.nodes.binary_search_by(|(x, _)| x.cmp(xr)) {
            Ok(i) => i,
            Err(i) => i - 1,
        }
    }

    /// Exact image of x under the periodic extension.
    pub fn evaluate(&self, x: &Dyadic) -> Dyadic {
        let (xr, t) = self.reduce(x);
        let i = self.segment_of(&xr);
        let (xi, yi) = &self.nodes[i];
        let y = yi + &(&xr - xi).mul_pow2(self.slope_logs[i]);
        &y + &t
    }

    /// Exact preimage of y.
    pub fn evaluate_inverse(&self, y: &Dyadic) -> Dyadic {
        let y0 = &self.nodes[0].1;
        let t = Dyadic::from_int((y - y0).floor());
        let yr = y - &t;
        // last i with nodes[i].1 <= yr
        let i = match self.nodes.binary_search_by(|(_, yv)| yv.cmp(&yr)) {
            Ok(i) => i,
            Err(i) => i - 1,
        };
        let (xi, yi) = &self.nodes[i];
        let x = xi + &(&yr - yi).mul_pow2(-self.slope_logs[i]);
        &x + &t
    }

    /// Base-2 logs of the one-sided slopes at x, as (left, right).
    pub fn slopes_at(&self, x: &Dyadic) -> (i64, i64) {
        let (xr, _) = self.reduce(x);
        let i = self.segment_of(&xr);
        if self.nodes[i].0 == xr {
            let k = self.nodes.len();
            (self.slope_logs[(i + k - 1) % k], self.slope_logs[i])
        } else {
            (self.slope_logs[i], self.slope_logs[i])
        }
    }

    /// Composition as a right action: x -> (x . f) . g, f applied first.
    pub fn compose(&self, g: &PLMap1P) -> PLMap1P {
        let f = self;
        let mut xs: Vec<Dyadic> = f.nodes.iter().map(|(x, _)| x.clone()).collect();
        let y0 = &f.nodes[0].1;
        for (u, _) in &g.nodes {
            // unique integer m with y0 <= u + m < y0 + 1
            let m = Dyadic::from_int((y0 - u).ceil());
            xs.push(f.evaluate_inverse(&(u + &m)));
        }
        let mut nodes = Vec::with_capacity(xs.len());
        for x in xs {
            let y = g.evaluate(&f.evaluate(&x));
            nodes.push((x, y));
        }
        PLMap1P::from_nodes(nodes).expect("composition of homeomorphisms is a homeomorphism")
    }

    pub fn invert(&self) -> PLMap1P {
        let nodes = self.nodes.iter().map(|(x, y)| (y.clone(), x.clone())).collect();
        PLMap1P::from_nodes(nodes).expect("inverse of a homeomorphism is a homeomorphism")
    }

    /// f^k for any integer k, by repeated composition.
    pub fn power(&self, k: i64) -> PLMap1P {
        let base = if k < 0 { self.invert() } else { self.clone() };
        let mut acc = PLMap1P::identity();
        for _ in 0..k.unsigned_abs() {
            acc = acc.compose(&base);
        }
        acc
    }

    /// Conjugate h^-1 . self . h as a right action.
    pub fn conjugate_by(&self, h: &PLMap1P) -> PLMap1P {
        h.invert().compose(self).compose(h)
    }

    /// Commutator [self, g] = self^-1 g^-1 self g.
    pub fn commutator(&self, g: &PLMap1P) -> PLMap1P {
        self.invert().compose(&g.invert()).compose(self).compose(g)
    }

    /// Max over one period of |x . f - x|; attained at a node since the
    /// displacement is PL with the same breakpoints.
    pub fn max_displacement(&self) -> Dyadic {
        self.nodes
            .iter()
            .map(|(x, y)| (y - x).abs())
            .max()
            .expect("at least one node")
    }

    /// True iff x . f = x for some real x, decided from node displacements.
    pub fn has_fixed_point(&self) -> bool {
        let zero = Dyadic::zero();
        let mut has_nonneg = false;
        let mut has_nonpos = false;
        for (x, y) in &self.nodes {
            let d = y - x;
            if d >= zero {
                has_nonneg = true;
            }
            if d <= zero {
                has_nonpos = true;
            }
        }
        has_nonneg && has_nonpos
    }

    /// True iff the map is the identity outside (lo, hi) + Z; requires
    /// hi - lo <= 1.
    pub fn supported_in(&self, lo: &Dyadic, hi: &Dyadic) -> bool {
        if self.is_identity() {
            return true;
        }
        for (x, y) in &self.nodes {
            // translate x into [lo, lo + 1)
            let t = Dyadic::from_int((x - lo).floor());
            let xt = x - &t;
            if &xt > hi {
                return false;
            }
            if (&xt == lo || &xt == hi) && y != x {
                return false;
            }
        }
        true
    }

    /// The image of self under the orientation-preserving affine change
    /// of coordinates u = x * 2^log_scale + shift, glued with the
    /// identity outside. Requires the support of self to lie in (0, 1)
    /// and the rescaled support to fit inside a unit interval.
    pub fn rescale_into(&self, log_scale: i64, shift: &Dyadic) -> PLMap1P {
        let mut nodes: Vec<(Dyadic, Dyadic)> = self
            .nodes
            .iter()
            .map(|(x, y)| (&x.mul_pow2(log_scale) + shift, &y.mul_pow2(log_scale) + shift))
            .collect();
        // pin the endpoints of the rescaled unit interval so the glued
        // map is the identity outside
        nodes.push((shift.clone(), shift.clone()));
        let end = &Dyadic::one().mul_pow2(log_scale) + shift;
        nodes.push((end.clone(), end));
        PLMap1P::from_nodes(nodes).expect("affine image of a homeomorphism")
    }
}

impl fmt::Display for PLMap1P {
    /// Serialization: header "plmap1p v1 k=<count>", then one "<x> <y>"
    /// line per node.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "plmap1p v1 k={}", self.nodes.len())?;
        for (x, y) in &self.nodes {
            writeln!(f, "{} {}", x, y)?;
        }
        Ok(())
    }
}

impl fmt::Debug for PLMap1P {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self)
    }
}

impl FromStr for PLMap1P {
    type Err = ParseError;

    fn from_str(s: &str) -> Result<Self, ParseError> {
        let mut lines = s.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
        let (_, header) = lines.next().ok_or(ParseError::PlMap {
            line: 1,
            msg: "missing header".into(),
        })?;
        let header = header.trim();
        let count: usize = header
            .strip_prefix("plmap1p v1 k=")
            .and_then(|c| c.parse().ok())
            .ok_or(ParseError::PlMap {
                line: 1,
                msg: format!("bad header {:?}", header),
            })?;
        let mut nodes = Vec::with_capacity(count);
        for _ in 0..count {
            let (idx, line) = lines.next().ok_or(ParseError::PlMap {
                line: count + 1,
                msg: "fewer node lines than the header announces".into(),
            })?;
            let mut parts = line.split_whitespace();
            let parse_part = |p: Option<&str>| -> Result<Dyadic, ParseError> {
                p.ok_or(ParseError::PlMap {
                    line: idx + 1,
                    msg: "expected \"<x> <y>\"".into(),
                })?
                .parse()
                .map_err(|e: ParseError| ParseError::PlMap {
                    line: idx + 1,
                    msg: e.to_string(),
                })
            };
            let x = parse_part(parts.next())?;
            let y = parse_part(parts.next())?;
            if parts.next().is_some() {
                return Err(ParseError::PlMap {
                    line: idx + 1,
                    msg: "trailing tokens after \"<x> <y>\"".into(),
                });
            }
            nodes.push((x, y));
        }
        if let Some((idx, _)) = lines.next() {
            return Err(ParseError::PlMap {
                line: idx + 1,
                msg: "more node lines than the header announces".into(),
            });
        }
        PLMap1P::from_nodes(nodes).map_err(|e| ParseError::PlMap {
            line: 1,
            msg: e.to_string(),
        })
    }
}

/// Signed integer count of the interval (x, x.f); used by the level
/// congruence check.
pub fn displacement_count(f: &PLMap1P, x: &Dyadic) -> BigInt {
    crate::dyadic::int_count(x, &f.evaluate(x))
}
