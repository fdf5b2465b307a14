//! The level-n groups: membership certification, the named elements
//! tau_n, zeta_k and the translation t_n, canonical representatives for
//! the circle quotient, and the degree of a pair.
//!
//! Membership at level n means: 1-periodic PL with dyadic data (already
//! structural for [`PLMap1P`]) and, on every maximal open segment where
//! both the slope and the signed integer count (x, x.f)_Z are constant,
//! log2(slope) is congruent to that count mod n. The count is constant
//! on segments refined at the breakpoints of f, at x in Z and at the
//! f-preimages of Z, because it can only jump where x or x.f crosses an
//! integer; checking the congruence at one interior sample per refined
//! segment is therefore exact.

use std::fmt;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::Zero;

use crate::dyadic::{int_count, Dyadic};
use crate::error::MathError;
use crate::plmap::PLMap1P;

#[derive(Clone, Debug)]
pub struct SegmentCheck {
    pub a: Dyadic,
    pub b: Dyadic,
    pub count: BigInt,
    pub slope_log2: i64,
    pub ok: bool,
}

/// Per-segment congruence evidence for level-n membership; failure is
/// a value carrying the first violating segment.
#[derive(Clone, Debug)]
pub struct OmegaCertificate {
    pub level: u32,
    pub segments: Vec<SegmentCheck>,
    pub first_violation: Option<usize>,
}

impl OmegaCertificate {
    pub fn pass(&self) -> bool {
        self.first_violation.is_none()
    }

    pub fn into_result(self, f: &PLMap1P) -> Result<(), MathError> {
        match self.first_violation {
            None => Ok(()),
            Some(i) => {
                let _ = f;
                let seg = &self.segments[i];
                Err(MathError::NotOmega {
                    n: self.level,
                    a: seg.a.to_string(),
                    b: seg.b.to_string(),
                    count: seg.count.to_string(),
                    slope: seg.slope_log2,
                })
            }
        }
    }
}

impl fmt::Display for OmegaCertificate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for seg in &self.segments {
            writeln!(
                f,
                "seg [{},{}): count={} slope_log2={} verdict={}",
                seg.a,
                seg.b,
                seg.count,
                seg.slope_log2,
                if seg.ok { "ok" } else { "FAIL" }
            )?;
        }
        Ok(())
    }
}

/// Checks the level-n slope/count congruence on one refined period.
pub fn check_omega(f: &PLMap1P, n: u32) -> OmegaCertificate {
    assert!(n >= 2, "level must be at least 2");
    let x0 = f.nodes()[0].0.clone();
    let end = &x0 + &Dyadic::one();
    let mut cuts: Vec<Dyadic> = f.nodes().iter().map(|(x, _)| x.clone()).collect();
    // the integer point of the window [x0, x0 + 1)
    let z = Dyadic::from_int(x0.ceil());
    if z >= x0 && z < end {
        cuts.push(z);
    }
    // the preimage of the integer point of the value window
    let w = Dyadic::from_int(f.nodes()[0].1.ceil());
    let pre = f.evaluate_inverse(&w);
    if pre >= x0 && pre < end {
        cuts.push(pre);
    }
    cuts.sort();
    cuts.dedup();
    let modulus = BigInt::from(n);
    let mut segments = Vec::with_capacity(cuts.len());
    let mut first_violation = None;
    for i in 0..cuts.len() {
        let a = cuts[i].clone();
        let b = if i + 1 < cuts.len() {
            cuts[i + 1].clone()
        } else {
            end.clone()
        };
        let mid = a.midpoint(&b);
        let count = int_count(&mid, &f.evaluate(&mid));
        let (sl, sr) = f.slopes_at(&mid);
        debug_assert_eq!(sl, sr);
        let ok = (BigInt::from(sl) - &count).mod_floor(&modulus).is_zero();
        if !ok && first_violation.is_none() {
            first_violation = Some(segments.len());
        }
        segments.push(SegmentCheck {
            a,
            b,
            count,
            slope_log2: sl,
            ok,
        });
    }
    OmegaCertificate {
        level: n,
        segments,
        first_violation,
    }
}

pub fn is_member(f: &PLMap1P, n: u32) -> bool {
    check_omega(f, n).pass()
}

pub fn require_member(f: &PLMap1P, n: u32) -> Result<(), MathError> {
    check_omega(f, n).into_result(f)
}

/// x -> x + c.
pub fn make_translation(c: Dyadic) -> PLMap1P {
    PLMap1P::translation(c)
}

/// The support interval [-1/2^n, 1/2^(n-1)] of tau_n.
pub fn tau_support(n: u32) -> (Dyadic, Dyadic) {
    (
        -Dyadic::pow2_inv(n as u64),
        Dyadic::pow2_inv(n as u64 - 1),
    )
}

/// The special element tau_n: 1-periodic, supported on the interior of
/// [-1/2^n, 1/2^(n-1)] + Z, with slopes 2^n, 2, 2^-n on its three
/// pieces.
pub fn make_tau(n: u32) -> PLMap1P {
    assert!(n >= 2, "level must be at least 2");
    let e = n as u64;
    let (lo, hi) = tau_support(n);
    let nodes = vec![
        (lo.clone(), lo),
        // (1 - 2^n)/2^(2n) -> 0
        (Dyadic::new(1 - (1i64 << e), 2 * e), Dyadic::zero()),
        // 0 -> (2^n - 1)/2^(2n - 1)
        (Dyadic::zero(), Dyadic::new((1i64 << e) - 1, 2 * e - 1)),
        (hi.clone(), hi),
    ];
    PLMap1P::from_nodes(nodes).expect("tau node table")
}

/// zeta_k for 1 <= k <= 2^n - 2: supported in (2/2^(4n), (2 + 2^(n+1) k)/2^(4n)),
/// with slopes 2^n, 1, 2^-n.
pub fn make_zeta(n: u32, k: u64) -> Result<PLMap1P, MathError> {
    assert!(n >= 2, "level must be at least 2");
    let nn = 1u64 << n; // 2^n
    if k < 1 || k > nn - 2 {
        return Err(MathError::OutOfRange(format!(
            "zeta index k={} outside 1..={}",
            k,
            nn - 2
        )));
    }
    let e = 4 * n as u64;
    let at = |num: u64| Dyadic::new(BigInt::from(num), e);
    let nodes = vec![
        (at(2), at(2)),
        (at(2 + k), at(2 + nn * k)),
        (at(2 + nn * k), at(2 + 2 * nn * k - k)),
        (at(2 + 2 * nn * k), at(2 + 2 * nn * k)),
    ];
    PLMap1P::from_nodes(nodes).map_err(|e| {
        MathError::Precondition(format!("zeta node table rejected: {}", e))
    })
}

/// The closed interval [2/2^(4n), (2 + 2^(2n+1))/2^(4n)] containing the
/// supports of all zeta_k.
pub fn zeta_envelope(n: u32) -> (Dyadic, Dyadic) {
    let e = 4 * n as u64;
    (
        Dyadic::new(2, e),
        Dyadic::new(BigInt::from(2u64) + (BigInt::from(1u64) << (2 * n as u64 + 1)), e),
    )
}

/// An element of the circle quotient at level n, held as its canonical
/// lift: the unique lift with 0.rep in [0, n).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GammaElement {
    rep: PLMap1P,
    level: u32,
}

impl GammaElement {
    pub fn rep(&self) -> &PLMap1P {
        &self.rep
    }

    pub fn level(&self) -> u32 {
        self.level
    }
}

/// Canonical representative: composes with the unique power of t_n so
/// that 0 maps into [0, n). Requires level-n membership.
pub fn gamma_canonical(f: &PLMap1P, n: u32) -> Result<GammaElement, MathError> {
    require_member(f, n)?;
    let v = f.evaluate(&Dyadic::zero());
    let j = v.floor().div_floor(&BigInt::from(n));
    let shift = Dyadic::from_int(-j * BigInt::from(n));
    let rep = f.compose(&PLMap1P::translation(shift));
    Ok(GammaElement { rep, level: n })
}

/// True iff f is certified at level n and moves 0 into (0, 1).
pub fn is_special(f: &PLMap1P, n: u32) -> Result<bool, MathError> {
    require_member(f, n)?;
    let v = f.evaluate(&Dyadic::zero());
    Ok(v > Dyadic::zero() && v < Dyadic::one())
}

/// Degree of the pair (g, [a, b]): the residue mod n of the integer m
/// with [a, b] . rep contained in (m, m+1). The interval may be a single
/// point. Requires [a, b] in (0, 1) and images off the integers.
pub fn degree(g: &GammaElement, a: &Dyadic, b: &Dyadic, n: u32) -> Result<u64, MathError> {
    if a > b {
        return Err(MathError::Precondition("interval endpoints out of order".into()));
    }
    let zero = Dyadic::zero();
    let one = Dyadic::one();
    if a <= &zero || b >= &one {
        return Err(MathError::Precondition(
            "interval must lie strictly inside (0, 1)".into(),
        ));
    }
    let ia = g.rep.evaluate(a);
    let ib = g.rep.evaluate(b);
    if ia.is_integer() || ib.is_integer() {
        return Err(MathError::DegreeStraddles);
    }
    let ma = ia.floor();
    let mb = ib.floor();
    if ma != mb {
        return Err(MathError::DegreeStraddles);
    }
    Ok(u64::try_from(ma.mod_floor(&BigInt::from(n))).expect("reduced residue"))
}
