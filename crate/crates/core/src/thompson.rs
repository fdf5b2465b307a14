//! The stabilizer-of-Z subgroup at level n: 1-periodic maps fixing the
//! integers with slopes powers of N = 2^n. Provides classification of
//! such elements, the orbit invariant machinery (theta grid searches),
//! and the constructive transporter realizing any order-preserving
//! theta-matched correspondence of finitely many points.

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::One;

use crate::cocycle::xi;
use crate::dyadic::{theta, Dyadic};
use crate::error::MathError;
use crate::plmap::PLMap1P;

/// Membership flags for the nested subgroups
/// F' <= F^c <= F (derived subgroup, trivial germs at Z, stabilizer).
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ThompsonClass {
    /// fixes Z pointwise with all slopes powers of 2^n
    pub in_f: bool,
    /// additionally the germs at Z are trivial
    pub in_fc: bool,
    /// additionally the xi vector vanishes (kernel of the abelianization)
    pub in_fprime: bool,
}

pub fn classify_thompson(f: &PLMap1P, n: u32) -> ThompsonClass {
    let zero = Dyadic::zero();
    let in_f = f.evaluate(&zero).is_zero()
        && f.slope_logs().iter().all(|s| s.rem_euclid(n as i64) == 0);
    let in_fc = in_f && f.slopes_at(&zero) == (0, 0);
    let in_fprime = in_fc && xi(f, n).map(|v| v.is_zero()).unwrap_or(false);
    ThompsonClass {
        in_f,
        in_fc,
        in_fprime,
    }
}

/// Leftmost point of the open interval (lo, hi) whose theta residue at
/// level n equals `residue`: scans the 2^n-adic grids at increasing
/// depth; a grid fine enough to drop 2^n - 1 points into the interval
/// always contains every residue.
pub fn grid_point_with_theta(
    n: u32,
    lo: &Dyadic,
    hi: &Dyadic,
    residue: u64,
) -> Result<Dyadic, MathError> {
    if lo >= hi {
        return Err(MathError::Precondition("empty search interval".into()));
    }
    let modulus = BigInt::from((1u64 << n) - 1);
    let target = BigInt::from(residue % ((1u64 << n) - 1));
    for m in 1..=(64 * n as u64) {
        let shift = n as u64 * m;
        // candidates k/2^(nm) with lo < k/2^(nm) < hi, scanned left to
        // right; at most 2^n - 1 consecutive k are needed to see every
        // residue, so a fine enough grid always succeeds
        let mut k = lo.mul_pow2(shift as i64).floor() + BigInt::one();
        for _ in 0..(1u64 << n) {
            let cand = Dyadic::new(k.clone(), shift);
            if cand >= *hi {
                break;
            }
            if k.mod_floor(&modulus) == target {
                return Ok(cand);
            }
            k += BigInt::one();
        }
    }
    Err(MathError::BudgetExceeded(
        "no grid point with the requested residue found".into(),
    ))
}

/// A standard interval [start, start + 2^(-n m)] of the level-n grid.
#[derive(Clone, Debug)]
struct StdInterval {
    start: Dyadic,
    depth: u64,
}

impl StdInterval {
    fn len(&self, n: u32) -> Dyadic {
        Dyadic::pow2_inv(n as u64 * self.depth)
    }
}

/// Greedy decomposition of [a, b] into standard level-n intervals:
/// repeatedly take the largest standard interval flush with the left
/// endpoint.
fn standard_decomposition(n: u32, a: &Dyadic, b: &Dyadic) -> Result<Vec<StdInterval>, MathError> {
    let mut out = Vec::new();
    let mut p = a.clone();
    let cap = 4_000_000usize;
    while &p < b {
        // minimal depth with p on the grid and p + len <= b
        let mut depth = p.exponent().div_ceil(n as u64);
        loop {
            let next = &p + &Dyadic::pow2_inv(n as u64 * depth);
            if &next <= b {
                out.push(StdInterval {
                    start: p.clone(),
                    depth,
                });
                p = next;
                break;
            }
            depth += 1;
        }
        if out.len() > cap {
            return Err(MathError::BudgetExceeded(
                "standard interval decomposition too large".into(),
            ));
        }
    }
    Ok(out)
}

/// Splits the first interval of the list into its 2^n children
/// (adding 2^n - 1 intervals); ties in which interval to refine always
/// resolve to the leftmost.
fn subdivide_first(n: u32, list: &mut Vec<StdInterval>) {
    let first = list.remove(0);
    let child_len = Dyadic::pow2_inv(n as u64 * (first.depth + 1));
    let mut start = first.start;
    let mut children = Vec::with_capacity(1usize << n);
    for _ in 0..(1u64 << n) {
        children.push(StdInterval {
            start: start.clone(),
            depth: first.depth + 1,
        });
        start = &start + &child_len;
    }
    list.splice(0..0, children);
}

/// The transporter: an element fixing Z with slopes powers of 2^n
/// mapping xs[i] to ys[i] for all i. Exists iff the tuples are
/// componentwise theta-equal; otherwise the mismatch is refused with
/// the offending position.
pub fn transporter(n: u32, xs: &[Dyadic], ys: &[Dyadic]) -> Result<PLMap1P, MathError> {
    if xs.len() != ys.len() {
        return Err(MathError::Precondition(
            "point tuples have different lengths".into(),
        ));
    }
    let zero = Dyadic::zero();
    let one = Dyadic::one();
    for t in [xs, ys] {
        for w in t.windows(2) {
            if w[0] >= w[1] {
                return Err(MathError::Precondition("tuple not strictly increasing".into()));
            }
        }
        if let (Some(first), Some(last)) = (t.first(), t.last()) {
            if first <= &zero || last >= &one {
                return Err(MathError::Precondition(
                    "tuple points must lie in (0, 1)".into(),
                ));
            }
        }
    }
    for (i, (x, y)) in xs.iter().zip(ys).enumerate() {
        let rx = theta(x, n);
        let ry = theta(y, n);
        if rx != ry {
            return Err(MathError::ThetaMismatch {
                index: i,
                x: x.to_string(),
                y: y.to_string(),
                rx: rx.value(),
                ry: ry.value(),
            });
        }
    }
    let mut dom_pts = vec![zero.clone()];
    dom_pts.extend_from_slice(xs);
    dom_pts.push(one.clone());
    let mut img_pts = vec![zero.clone()];
    img_pts.extend_from_slice(ys);
    img_pts.push(one.clone());

    let mut nodes = Vec::new();
    for i in 0..dom_pts.len() - 1 {
        let mut dom = standard_decomposition(n, &dom_pts[i], &dom_pts[i + 1])?;
        let mut img = standard_decomposition(n, &img_pts[i], &img_pts[i + 1])?;
        let m = (1i64 << n) - 1;
        let diff = dom.len() as i64 - img.len() as i64;
        assert_eq!(
            diff.rem_euclid(m),
            0,
            "theta-matched gaps have interval counts congruent mod 2^n - 1"
        );
        while dom.len() < img.len() {
            subdivide_first(n, &mut dom);
        }
        while img.len() < dom.len() {
            subdivide_first(n, &mut img);
        }
        for (d, im) in dom.iter().zip(img.iter()) {
            let _ = (d.len(n), im.len(n));
            nodes.push((d.start.clone(), im.start.clone()));
        }
    }
    PLMap1P::from_nodes(nodes)
}

/// Two-piece element supported in [a, b]: slope 2^(n alpha) on [a, c],
/// then the complementary power of 2^n on [c', b] where
/// c' = a + 2^(n alpha) (c - a). Requires the complementary slope to be
/// a power of 2^n; the valid triples live on a common 2^n-adic grid.
pub fn bump(
    n: u32,
    a: &Dyadic,
    c: &Dyadic,
    b: &Dyadic,
    alpha: i64,
) -> Result<PLMap1P, MathError> {
    let zero = Dyadic::zero();
    let one = Dyadic::one();
    if !(&zero < a && a < c && c < b && b < &one) {
        return Err(MathError::Precondition(
            "need 0 < a < c < b < 1".into(),
        ));
    }
    let cp = a + &(c - a).mul_pow2(n as i64 * alpha);
    if !(&cp > a && &cp < b) {
        return Err(MathError::Precondition(format!(
            "image breakpoint {} escapes ({}, {})",
            cp, a, b
        )));
    }
    let tail = crate::plmap::slope_log2(&(b - c), &(b - &cp)).ok_or_else(|| {
        MathError::Precondition("complementary slope is not a power of 2".into())
    })?;
    if tail.rem_euclid(n as i64) != 0 {
        return Err(MathError::Precondition(
            "complementary slope is not a power of 2^n".into(),
        ));
    }
    PLMap1P::from_nodes(vec![
        (a.clone(), a.clone()),
        (c.clone(), cp),
        (b.clone(), b.clone()),
    ])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::omega::{check_omega, make_zeta};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn dy(m: i64, e: u64) -> Dyadic {
        Dyadic::new(m, e)
    }

    #[test]
    fn classify_basics() {
        let id = PLMap1P::identity();
        let c = classify_thompson(&id, 2);
        assert!(c.in_f && c.in_fc && c.in_fprime);
        let z = make_zeta(2, 1).unwrap();
        let c = classify_thompson(&z, 2);
        assert!(c.in_f && c.in_fc && !c.in_fprime);
        let z2 = make_zeta(2, 2).unwrap();
        let comm = z.commutator(&z2);
        let c = classify_thompson(&comm, 2);
        assert!(c.in_f && c.in_fc && c.in_fprime);
        let tau = crate::omega::make_tau(2);
        let c = classify_thompson(&tau, 2);
        assert!(!c.in_f);
    }

    #[test]
    fn transporter_examples() {
        // xs = ys gives the identity
        let pts = vec![dy(1, 2), dy(1, 1)];
        let f = transporter(2, &pts, &pts).unwrap();
        assert!(f.is_identity());
        // 1/4 -> 1/16 at n = 2
        let f = transporter(2, &[dy(1, 2)], &[dy(1, 4)]).unwrap();
        assert_eq!(f.evaluate(&dy(1, 2)), dy(1, 4));
        assert!(classify_thompson(&f, 2).in_f);
        // 1/4 -> 1/2 refused: residues 1 and 2
        let r = transporter(2, &[dy(1, 2)], &[dy(1, 1)]);
        assert!(matches!(r, Err(MathError::ThetaMismatch { .. })));
    }

    #[test]
    fn transporter_random() {
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        for trial in 0..200 {
            let n = if trial % 2 == 0 { 2 } else { 3 };
            let len: i64 = rng.gen_range(1..=5);
            // xs[i] in the slot (i/8, (i+1)/8), ys[i] theta-matched in
            // the same slot, so both tuples increase inside (0, 1)
            let mut xs: Vec<Dyadic> = Vec::new();
            let mut ys: Vec<Dyadic> = Vec::new();
            for i in 0..len {
                let k = rng.gen_range(1..32);
                xs.push(Dyadic::new(32 * i + k, 8));
            }
            for (i, x) in xs.iter().enumerate() {
                let lo = Dyadic::new(i as i64, 3);
                let hi = Dyadic::new(i as i64 + 1, 3);
                let y = grid_point_with_theta(n, &lo, &hi, theta(x, n).value()).unwrap();
                ys.push(y);
            }
            let f = transporter(n, &xs, &ys).unwrap();
            for (x, y) in xs.iter().zip(&ys) {
                assert_eq!(&f.evaluate(x), y);
            }
            assert!(classify_thompson(&f, n).in_f);
            assert!(check_omega(&f, n).pass());
        }
    }

    #[test]
    fn transporter_orbit_soundness() {
        let n = 2;
        let f = transporter(n, &[dy(1, 2)], &[dy(1, 4)]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..100 {
            let x = Dyadic::new(rng.gen_range(1..255), 8);
            assert_eq!(theta(&x, n), theta(&f.evaluate(&x), n));
        }
    }

    #[test]
    fn bump_examples() {
        // alpha = 0 keeps c in place: identity after canonicalization
        let f = bump(2, &dy(1, 2), &dy(5, 4), &dy(1, 1), 0).unwrap();
        assert!(f.is_identity());
        // c' collides with b
        assert!(bump(2, &dy(1, 2), &dy(5, 4), &dy(1, 1), 1).is_err());
        // complementary slope 1/4 / (7/16) is not a power of 4
        assert!(bump(2, &dy(1, 2), &dy(5, 4), &dy(3, 2), 1).is_err());
        // a valid grid-aligned instance: [1/4, 5/16, 1/2+1/16]
        let a = dy(1, 2);
        let c = dy(5, 4);
        let b = dy(9, 4);
        let f = bump(2, &a, &c, &b, 1).unwrap();
        assert!(classify_thompson(&f, 2).in_fc);
        assert_eq!(f.slopes_at(&a).1, 2);
    }

    #[test]
    fn grid_search_hits_every_residue() {
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        for _ in 0..100 {
            let n = rng.gen_range(2..=4);
            let r = rng.gen_range(0..(1u64 << n) - 1);
            let lo = Dyadic::new(rng.gen_range(0..200), 8);
            let hi = &lo + &Dyadic::pow2_inv(rng.gen_range(1..6));
            let p = grid_point_with_theta(n, &lo, &hi, r).unwrap();
            assert!(p > lo && p < hi);
            assert_eq!(theta(&p, n).value(), r);
        }
    }
}
