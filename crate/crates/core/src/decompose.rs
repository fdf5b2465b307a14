//! Constructive factorization machinery at level n: special elements
//! conjugate to derived-kernel members, germ correction at the
//! integers, bounded-length normal forms, interval transport with a
//! prescribed crossing count, the weak generating family of the
//! commutator lattice, and disjoint commutator extraction.

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::Zero;

use crate::cocycle::{xi, zeta_data, LatticeBasis, XiVector};
use crate::dyadic::{theta, Dyadic};
use crate::error::MathError;
use crate::omega::{is_special, make_tau, make_zeta, require_member, zeta_envelope};
use crate::plmap::PLMap1P;
use crate::thompson::{classify_thompson, grid_point_with_theta, transporter};

/// Role of one factor in a factorization.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FactorTag {
    /// fixes the integers with trivial germs there
    Head,
    /// w^-1 . p . w with p in the derived kernel subgroup F'
    ConjugatedFprime,
    /// x -> x + c with c a multiple of n
    TranslationPower,
}

/// A single factor, optionally carrying a conjugation witness (w, p)
/// with element = w^-1 . p . w and p in F'.
#[derive(Clone, Debug, PartialEq)]
pub struct Factor {
    pub element: PLMap1P,
    pub tag: FactorTag,
    pub witness: Option<(PLMap1P, PLMap1P)>,
}

impl Factor {
    pub fn inverse(&self) -> Factor {
        Factor {
            element: self.element.invert(),
            tag: self.tag,
            witness: self
                .witness
                .as_ref()
                .map(|(w, p)| (w.clone(), p.invert())),
        }
    }
}

/// An ordered factor list whose right-action product is the target.
#[derive(Clone, Debug, PartialEq)]
pub struct Factorization {
    target: PLMap1P,
    factors: Vec<Factor>,
}

impl Factorization {
    pub fn new(target: PLMap1P, factors: Vec<Factor>) -> Self {
        Factorization { target, factors }
    }

    pub fn target(&self) -> &PLMap1P {
        &self.target
    }

    pub fn factors(&self) -> &[Factor] {
        &self.factors
    }

    pub fn conjugated_count(&self) -> usize {
        self.factors
            .iter()
            .filter(|f| f.tag == FactorTag::ConjugatedFprime)
            .count()
    }

    /// Re-checks every structural claim: per-factor membership, the
    /// tag-specific shape, witness identities, and that the ordered
    /// product equals the target.
    pub fn verify(&self, n: u32) -> Result<(), MathError> {
        let zero = Dyadic::zero();
        let mut acc = PLMap1P::identity();
        for fac in &self.factors {
            require_member(&fac.element, n)?;
            match fac.tag {
                FactorTag::Head => {
                    if !fac.element.evaluate(&zero).is_zero()
                        || fac.element.slopes_at(&zero) != (0, 0)
                    {
                        return Err(MathError::Precondition(
                            "head factor must fix 0 with trivial germs".into(),
                        ));
                    }
                }
                FactorTag::ConjugatedFprime => {
                    let (w, p) = fac.witness.as_ref().ok_or_else(|| {
                        MathError::Precondition("conjugated factor is missing its witness".into())
                    })?;
                    require_member(w, n)?;
                    if !classify_thompson(p, n).in_fprime {
                        return Err(MathError::Precondition(
                            "witness core is not in the derived kernel".into(),
                        ));
                    }
                    if p.conjugate_by(w) != fac.element {
                        return Err(MathError::Precondition(
                            "witness conjugation does not reproduce the factor".into(),
                        ));
                    }
                }
                FactorTag::TranslationPower => {
                    let c = fac.element.evaluate(&zero);
                    if fac.element != PLMap1P::translation(c.clone())
                        || !c.is_integer()
                        || !c.floor().mod_floor(&BigInt::from(n)).is_zero()
                    {
                        return Err(MathError::Precondition(
                            "translation factor must shift by a multiple of n".into(),
                        ));
                    }
                }
            }
            acc = acc.compose(&fac.element);
        }
        if acc != self.target {
            return Err(MathError::Precondition(
                "product of factors differs from target".into(),
            ));
        }
        Ok(())
    }
}

/// Largest power of two 2^k (k possibly negative) with 2^k <= bound.
/// Requires bound > 0.
fn pow2_le(bound: &Dyadic) -> Dyadic {
    assert!(bound.is_positive(), "pow2_le needs a positive bound");
    let bits = bound.mantissa().bits() as i64;
    Dyadic::one().mul_pow2(bits - 1 - bound.exponent() as i64)
}

/// One-sided bump anchored on the left at x: slope 2^(n a) on
/// [x, x + u], a translation plateau of length s, then the
/// compensating slope 2^(-n a). Supported in [x, x + u + s + u 2^(n a)].
fn zeta_like(n: u32, alpha: i64, u: &Dyadic, s: &Dyadic, x: &Dyadic) -> PLMap1P {
    assert!(alpha != 0 && u.is_positive() && !s.is_negative());
    let au = u.mul_pow2(n as i64 * alpha);
    let nodes = vec![
        (x.clone(), x.clone()),
        (x + u, x + &au),
        (&(x + u) + s, &(x + &au) + s),
        (
            &(&(x + u) + &au) + s,
            &(&(x + u) + &au) + s,
        ),
    ];
    PLMap1P::from_nodes(nodes).expect("bump node table")
}

/// Mirror image of `zeta_like` anchored on the right at y: the germ on
/// the left of y has slope 2^(n a).
fn zeta_like_left(n: u32, alpha: i64, u: &Dyadic, s: &Dyadic, y: &Dyadic) -> PLMap1P {
    assert!(alpha != 0 && u.is_positive() && !s.is_negative());
    let au = u.mul_pow2(n as i64 * alpha);
    let nodes = vec![
        (
            &(y - s) - &(u + &au),
            &(y - s) - &(u + &au),
        ),
        (&(y - s) - u, &(y - s) - &au),
        (y - u, y - &au),
        (y.clone(), y.clone()),
    ];
    PLMap1P::from_nodes(nodes).expect("bump node table")
}

/// A nonidentity element of F' supported in (lo, hi): a scaled copy of
/// zeta_1 composed with the inverse of a second copy placed at a
/// residue-0 shift, so the cocycle contributions cancel. The window
/// must avoid the integers modulo 1.
fn fprime_pair_in(n: u32, lo: &Dyadic, hi: &Dyadic) -> Result<PLMap1P, MathError> {
    let width = hi - lo;
    if !width.is_positive() {
        return Err(MathError::Precondition("empty support window".into()));
    }
    let quarter = width.mul_pow2(-2);
    let mut m = 1u64;
    while Dyadic::pow2_inv(n as u64 * m) >= quarter {
        m += 1;
        if m > 4096 {
            return Err(MathError::BudgetExceeded("support window too small".into()));
        }
    }
    let len = Dyadic::pow2_inv(n as u64 * m);
    let t1 = grid_point_with_theta(n, lo, &(&(lo + &quarter) - &len), 0)?;
    let t2 = grid_point_with_theta(n, &(lo + &width.mul_pow2(-1)), &(hi - &len), 0)?;
    let z = make_zeta(n, 1)?;
    let scale = -(n as i64) * m as i64;
    let c1 = z.rescale_into(scale, &t1);
    let c2 = z.rescale_into(scale, &t2);
    Ok(c1.compose(&c2.invert()))
}

/// The standard contraction: acts as x -> x / 2^n on [-1/4, 1/4] + Z,
/// identity away from the quarter-neighborhoods of the integers.
fn contraction(n: u32) -> PLMap1P {
    let u = Dyadic::pow2_inv(n as u64 + 2);
    let s = Dyadic::zero();
    let e1 = zeta_like(n, 1, &u, &s, &Dyadic::zero()).invert();
    let e2 = zeta_like_left(n, 1, &u, &s, &Dyadic::one()).invert();
    e1.compose(&e2)
}

/// The attracting endpoint of the tau support region: tau maps it to 0.
fn tau_entry(n: u32) -> Dyadic {
    Dyadic::new(1 - (1i64 << n), 2 * n as u64)
}

/// A special element supported in (w_lo, w_hi) together with a
/// verified single-factor witness that it is a conjugate of an F'
/// element. Requires w_lo < 0 < w_hi with the window inside
/// (-1/4, 1/4).
pub fn special_in_derived(
    n: u32,
    w_lo: &Dyadic,
    w_hi: &Dyadic,
) -> Result<(PLMap1P, Factorization), MathError> {
    let quarter = Dyadic::pow2_inv(2);
    if !w_lo.is_negative() || !w_hi.is_positive() || *w_lo <= -quarter.clone() || *w_hi >= quarter {
        return Err(MathError::Precondition(
            "window must contain 0 inside (-1/4, 1/4)".into(),
        ));
    }
    let d = contraction(n);
    let v_lo = tau_entry(n);
    let v_hi = Dyadic::pow2_inv(n as u64 - 1);
    let mut lo = w_lo.clone();
    let mut hi = w_hi.clone();
    let mut j: i64 = 0;
    while !(lo > v_lo && hi < v_hi) {
        lo = d.evaluate(&lo);
        hi = d.evaluate(&hi);
        j += 1;
        if j > 64 * n as i64 {
            return Err(MathError::BudgetExceeded("contraction did not settle".into()));
        }
    }
    let tau = make_tau(n);
    let g1 = d.power(j).compose(&tau);
    let p = tau.evaluate(&Dyadic::zero());
    let j_lo = tau.evaluate(&lo);
    let j_hi = tau.evaluate(&hi);
    let room_low = &p - &j_lo;
    let room_high = &j_hi - &p;
    let cap1 = room_low.mul_pow2(-2);
    let cap2 = room_high.mul_pow2(-(n as i64) - 3);
    let u = pow2_le(if cap1 < cap2 { &cap1 } else { &cap2 });
    let a = &p - &u.mul_pow2(-1);
    let b1 = zeta_like(n, 1, &u, &Dyadic::zero(), &a);
    let supp = &u + &u.mul_pow2(n as i64);
    let t = grid_point_with_theta(
        n,
        &supp,
        &(&(&room_high + &u.mul_pow2(-1)) - &supp),
        0,
    )?;
    let copy = b1.conjugate_by(&PLMap1P::translation(t));
    let g2 = b1.compose(&copy.invert());
    assert!(classify_thompson(&g2, n).in_fprime);
    assert!(g2.evaluate(&p) > p);
    let w = g1.invert();
    let f = g2.conjugate_by(&w);
    assert!(is_special(&f, n)?);
    assert!(f.supported_in(w_lo, w_hi));
    let fz = Factorization::new(
        f.clone(),
        vec![Factor {
            element: f.clone(),
            tag: FactorTag::ConjugatedFprime,
            witness: Some((w, g2)),
        }],
    );
    fz.verify(n)?;
    Ok((f, fz))
}

/// Cached special element with support window (-1/8, 1/8).
pub fn special_standard(n: u32) -> Arc<(PLMap1P, Factorization)> {
    static CACHE: OnceLock<Mutex<HashMap<u32, Arc<(PLMap1P, Factorization)>>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    let mut guard = cache.lock().expect("special element cache");
    guard
        .entry(n)
        .or_insert_with(|| {
            let eighth = Dyadic::pow2_inv(3);
            Arc::new(
                special_in_derived(n, &-eighth.clone(), &eighth)
                    .expect("standard special element"),
            )
        })
        .clone()
}

/// An F' element moving x to z, for x, z in (0, 1) with equal theta
/// residues: a transporter moving x to z, corrected by a conjugated
/// inverse copy whose support is pushed below both points.
pub fn fprime_mover(n: u32, x: &Dyadic, z: &Dyadic) -> Result<PLMap1P, MathError> {
    let zero = Dyadic::zero();
    let one = Dyadic::one();
    if *x <= zero || *x >= one || *z <= zero || *z >= one {
        return Err(MathError::Precondition(
            "mover endpoints must lie in (0, 1)".into(),
        ));
    }
    if x == z {
        return Ok(PLMap1P::identity());
    }
    let (min, max) = if x < z { (x, z) } else { (z, x) };
    let lo = min.mul_pow2(-1);
    let hi = max.midpoint(&one);
    let b = transporter(
        n,
        &[lo.clone(), x.clone(), hi.clone()],
        &[lo.clone(), z.clone(), hi.clone()],
    )?;
    let yh = grid_point_with_theta(n, &lo.mul_pow2(-1), &lo, theta(&hi, n).value())?;
    let h = transporter(n, &[hi], &[yh])?;
    let lambda = b.compose(&b.invert().conjugate_by(&h));
    assert_eq!(&lambda.evaluate(x), z);
    assert!(classify_thompson(&lambda, n).in_fprime);
    Ok(lambda)
}

/// Correcting factors for an element r fixing the integers: two
/// conjugated-F' factors g1, g2 such that r . g1 . g2 has trivial
/// germs at the integers. Returns between zero and two factors.
fn zerofix_correctors(r: &PLMap1P, n: u32) -> Result<Vec<Factor>, MathError> {
    let zero = Dyadic::zero();
    if !r.evaluate(&zero).is_zero() {
        return Err(MathError::Precondition(
            "germ correction requires a fixed point at 0".into(),
        ));
    }
    let (sl, sr) = r.slopes_at(&zero);
    assert!(sl % n as i64 == 0 && sr % n as i64 == 0);
    let s_l = sl / n as i64;
    let s_r = sr / n as i64;
    if s_l == 0 && s_r == 0 {
        return Ok(Vec::new());
    }
    let special = special_standard(n);
    let h = &special.0;
    let x = h.evaluate(&zero);
    let y = h.evaluate_inverse(&Dyadic::one());
    let span = &y - &x;
    let mut out = Vec::new();
    let mut push_corrector = |k: PLMap1P, w: PLMap1P| {
        let core = k.invert();
        out.push(Factor {
            element: core.conjugate_by(&w),
            tag: FactorTag::ConjugatedFprime,
            witness: Some((w, core)),
        });
    };
    // an F' bump with prescribed right germ at x, paired with a
    // residue-0 translate of its inverse
    if s_r != 0 {
        let bound = span.mul_pow2(-4 - (n as i64) * s_r.max(0));
        let u = pow2_le(&bound);
        let z1 = zeta_like(n, s_r, &u, &Dyadic::zero(), &x);
        let t1 = grid_point_with_theta(n, &span.mul_pow2(-3), &span.mul_pow2(-2), 0)?;
        let copy = z1.conjugate_by(&PLMap1P::translation(t1));
        let k1 = z1.compose(&copy.invert());
        assert!(classify_thompson(&k1, n).in_fprime);
        push_corrector(k1, h.invert());
    }
    if s_l != 0 {
        let bound = span.mul_pow2(-4 - (n as i64) * s_l.max(0));
        let u = pow2_le(&bound);
        let z2 = zeta_like_left(n, s_l, &u, &Dyadic::zero(), &y);
        let t2 = grid_point_with_theta(n, &span.mul_pow2(-3), &span.mul_pow2(-2), 0)?;
        let copy = z2.conjugate_by(&PLMap1P::translation(-t2));
        let k2 = z2.compose(&copy.invert());
        assert!(classify_thompson(&k2, n).in_fprime);
        push_corrector(k2, h.clone());
    }
    Ok(out)
}

/// Normal form of a certified element g at level n: an ordered
/// factorization g = head . (conjugated F' factors) . t_n^l with at
/// most 2n + 4 factors in total, every claim re-checkable offline.
pub fn normal_form(g: &PLMap1P, n: u32) -> Result<Factorization, MathError> {
    require_member(g, n)?;
    let zero = Dyadic::zero();
    let v = g.evaluate(&zero);
    let n_big = BigInt::from(n);
    let floor_vn = v.mantissa().div_floor(&(&n_big << v.exponent()));
    let in_nz = v.is_integer() && v.floor().mod_floor(&n_big).is_zero();
    let l: BigInt = if in_nz {
        -floor_vn.clone()
    } else {
        -(&floor_vn + BigInt::from(1))
    };
    let shift = Dyadic::from_int(&l * &n_big);
    let x = &v + &shift;

    let special = special_standard(n);
    let alpha = &special.0;
    let alpha_factor = || Factor {
        element: alpha.clone(),
        tag: FactorTag::ConjugatedFprime,
        witness: special.1.factors()[0].witness.clone(),
    };
    let y_a = alpha.evaluate_inverse(&zero);
    let low_gate = &Dyadic::one() + &y_a;

    // walk the image of 0 up to 0 with alternating F' movers and
    // copies of the special element, one integer crossing each
    let mut walk: Vec<Factor> = Vec::new();
    let mut cur = x.clone();
    if !cur.is_zero() {
        if cur.is_integer() {
            cur = alpha.evaluate(&cur);
            walk.push(alpha_factor());
        }
        loop {
            let m = cur.floor();
            let m_dy = Dyadic::from_int(m.clone());
            let red = &cur - &m_dy;
            let last = m == BigInt::from(-1);
            let target = if last {
                low_gate.clone()
            } else if red > low_gate {
                red.clone()
            } else {
                grid_point_with_theta(n, &low_gate, &Dyadic::one(), theta(&red, n).value())?
            };
            if target != red {
                let lambda = fprime_mover(n, &red, &target)?;
                cur = &m_dy + &target;
                walk.push(Factor {
                    element: lambda.clone(),
                    tag: FactorTag::ConjugatedFprime,
                    witness: Some((PLMap1P::identity(), lambda)),
                });
            }
            cur = alpha.evaluate(&cur);
            walk.push(alpha_factor());
            if last {
                assert!(cur.is_zero(), "walk must land exactly on 0");
                break;
            }
        }
    }

    let mut r = g.compose(&PLMap1P::translation(shift.clone()));
    for fac in &walk {
        r = r.compose(&fac.element);
    }
    assert!(r.evaluate(&zero).is_zero());
    let correctors = zerofix_correctors(&r, n)?;
    let mut head = r.clone();
    for fac in &correctors {
        head = head.compose(&fac.element);
    }
    assert_eq!(head.slopes_at(&zero), (0, 0));

    let mut factors = Vec::new();
    if !head.is_identity() {
        factors.push(Factor {
            element: head,
            tag: FactorTag::Head,
            witness: None,
        });
    }
    for fac in correctors.iter().rev() {
        factors.push(fac.inverse());
    }
    for fac in walk.iter().rev() {
        if !fac.element.is_identity() {
            factors.push(fac.inverse());
        }
    }
    if !l.is_zero() {
        factors.push(Factor {
            element: PLMap1P::translation(-shift),
            tag: FactorTag::TranslationPower,
            witness: None,
        });
    }
    assert!(factors.len() <= 2 * n as usize + 4, "factor budget exceeded");
    let fz = Factorization::new(g.clone(), factors);
    fz.verify(n)?;
    Ok(fz)
}

/// Pushes a reduced point cur in (0, hi_t) upward past lo_t using F'
/// bumps, each paired with a rescaled inverse copy near 0. Returns the
/// bump list (applied in order) and the final position.
fn bump_walk(
    n: u32,
    start: &Dyadic,
    lo_t: &Dyadic,
    hi_t: &Dyadic,
) -> Result<(Vec<PLMap1P>, Dyadic), MathError> {
    assert!(start.is_positive() && start < hi_t && *hi_t <= Dyadic::one());
    let mut cur = start.clone();
    let mut out = Vec::new();
    let mut steps = 0u32;
    while cur <= *lo_t {
        steps += 1;
        if steps > 4096 {
            return Err(MathError::BudgetExceeded("bump walk stalled".into()));
        }
        let cap1 = cur.mul_pow2(-2);
        let cap2 = (hi_t - &cur).mul_pow2(-(n as i64) - 1);
        let u = pow2_le(if cap1 < cap2 { &cap1 } else { &cap2 });
        let b = zeta_like(n, 1, &u, &Dyadic::zero(), &(&cur - &u));
        let room = (&cur - &u).mul_pow2(-1);
        let mut m = 1u64;
        while Dyadic::pow2_inv(n as u64 * m) > room {
            m += 1;
            if m > 4096 {
                return Err(MathError::BudgetExceeded("no room for the paired copy".into()));
            }
        }
        let len = Dyadic::pow2_inv(n as u64 * m);
        let t = grid_point_with_theta(n, &len.mul_pow2(-(n as i64)), &(&(&cur - &u) - &len), 0)?;
        let copy = b.rescale_into(-(n as i64) * m as i64, &t);
        let lambda = b.compose(&copy.invert());
        cur = lambda.evaluate(&cur);
        out.push(lambda);
    }
    Ok((out, cur))
}

/// An element of the derived group moving 0 up past m integers,
/// witnessed by a factorization into conjugated-F' factors only.
pub fn raise_zero(n: u32, m: u64) -> Result<(PLMap1P, Factorization), MathError> {
    let special = special_standard(n);
    let alpha = &special.0;
    let alpha_factor = || Factor {
        element: alpha.clone(),
        tag: FactorTag::ConjugatedFprime,
        witness: special.1.factors()[0].witness.clone(),
    };
    let zero = Dyadic::zero();
    let y_a = alpha.evaluate_inverse(&zero);
    let low_gate = &Dyadic::one() + &y_a;
    let mut factors = vec![alpha_factor()];
    let mut cur = alpha.evaluate(&zero);
    for i in 0..m {
        let base = Dyadic::from_int(BigInt::from(i));
        let red = &cur - &base;
        let (bumps, red_new) = bump_walk(n, &red, &low_gate, &Dyadic::one())?;
        for lambda in bumps {
            factors.push(Factor {
                element: lambda.clone(),
                tag: FactorTag::ConjugatedFprime,
                witness: Some((PLMap1P::identity(), lambda)),
            });
        }
        cur = alpha.evaluate(&(&base + &red_new));
        factors.push(alpha_factor());
    }
    assert_eq!(cur.floor(), BigInt::from(m));
    let mut target = PLMap1P::identity();
    for fac in &factors {
        target = target.compose(&fac.element);
    }
    assert_eq!(target.evaluate(&zero), cur);
    let fz = Factorization::new(target.clone(), factors);
    fz.verify(n)?;
    Ok((target, fz))
}

/// A certified element mapping the closed interval [i_lo, i_hi] into
/// M + (u_lo, u_hi) for some integer M congruent to `target` mod n.
/// Requires i_hi - i_lo < 1 and 0 <= u_lo < u_hi <= 1.
pub fn transport(
    n: u32,
    i_lo: &Dyadic,
    i_hi: &Dyadic,
    u_lo: &Dyadic,
    u_hi: &Dyadic,
    target: u64,
) -> Result<PLMap1P, MathError> {
    let zero = Dyadic::zero();
    let one = Dyadic::one();
    if i_lo > i_hi || &(i_hi - i_lo) >= &one {
        return Err(MathError::Precondition(
            "source interval must have length below 1".into(),
        ));
    }
    if u_lo < &zero || u_lo >= u_hi || u_hi > &one {
        return Err(MathError::Precondition(
            "landing window must satisfy 0 <= u_lo < u_hi <= 1".into(),
        ));
    }
    if target >= n as u64 {
        return Err(MathError::OutOfRange(format!(
            "crossing class {} outside 0..{}",
            target, n
        )));
    }
    let mut acc = PLMap1P::identity();
    let mut jl = i_lo.clone();
    let mut jh = i_hi.clone();
    let apply = |step: &PLMap1P, jl: &mut Dyadic, jh: &mut Dyadic, acc: &mut PLMap1P| {
        *jl = step.evaluate(jl);
        *jh = step.evaluate(jh);
        *acc = acc.compose(step);
    };
    let tau = make_tau(n);
    let v_lo = tau_entry(n);
    let v_hi = Dyadic::pow2_inv(n as u64 - 1);

    // resolve a straddled integer: squeeze the interval against it
    // from both sides, contract into the tau entry region, then push
    // across with tau
    let z_int = jl.ceil();
    if Dyadic::from_int(z_int.clone()) <= jh {
        let z = Dyadic::from_int(z_int.clone());
        let mut xs = Vec::new();
        let mut ys = Vec::new();
        let eighth = Dyadic::pow2_inv(3);
        if jh > z {
            let r2 = &jh - &z;
            let q2 = grid_point_with_theta(n, &zero, &eighth, theta(&r2, n).value())?;
            xs.push(r2);
            ys.push(q2);
        }
        if jl < z {
            let r1 = &(&jl - &z) + &one;
            let q1 = grid_point_with_theta(n, &(&one - &eighth), &one, theta(&r1, n).value())?;
            xs.push(r1);
            ys.push(q1);
        }
        if !xs.is_empty() {
            let lam = transporter(n, &xs, &ys)?;
            apply(&lam, &mut jl, &mut jh, &mut acc);
        }
        let d = contraction(n);
        let mut steps = 0;
        while !(&jl - &z > v_lo && &jh - &z < v_hi) {
            apply(&d, &mut jl, &mut jh, &mut acc);
            steps += 1;
            if steps > 64 * n {
                return Err(MathError::BudgetExceeded("contraction did not settle".into()));
            }
        }
        apply(&tau, &mut jl, &mut jh, &mut acc);
        assert!(jl >= z && jh < &z + &one);
    }

    // cross integers one at a time until the floor matches the target
    // class: move the interval just below the next integer with a
    // theta-matched transporter, then push across with tau
    let m0 = jl.floor();
    let crossings = (BigInt::from(target) - &m0)
        .mod_floor(&BigInt::from(n))
        .to_string()
        .parse::<u64>()
        .expect("reduced crossing count");
    let gate_lo = &one + &v_lo;
    let gate_mid = gate_lo.midpoint(&one);
    for _ in 0..crossings {
        let m = Dyadic::from_int(jl.floor());
        let r_lo = &jl - &m;
        let r_hi = &jh - &m;
        let (mut xs, mut ys) = (Vec::new(), Vec::new());
        if r_lo < r_hi {
            let q_hi = grid_point_with_theta(n, &gate_mid, &one, theta(&r_hi, n).value())?;
            let q_lo = grid_point_with_theta(n, &gate_lo, &q_hi, theta(&r_lo, n).value())?;
            xs.extend([r_lo, r_hi]);
            ys.extend([q_lo, q_hi]);
        } else {
            let q = grid_point_with_theta(n, &gate_lo, &one, theta(&r_lo, n).value())?;
            xs.push(r_lo);
            ys.push(q);
        }
        let lam = transporter(n, &xs, &ys)?;
        apply(&lam, &mut jl, &mut jh, &mut acc);
        apply(&tau, &mut jl, &mut jh, &mut acc);
    }

    // land inside the requested window
    let m = Dyadic::from_int(jl.floor());
    let r_lo = &jl - &m;
    let r_hi = &jh - &m;
    if !(&r_lo > u_lo && &r_hi < u_hi) {
        let (mut xs, mut ys) = (Vec::new(), Vec::new());
        if r_lo < r_hi {
            let q_hi = grid_point_with_theta(n, &u_lo.midpoint(u_hi), u_hi, theta(&r_hi, n).value())?;
            let q_lo = grid_point_with_theta(n, u_lo, &q_hi, theta(&r_lo, n).value())?;
            xs.extend([r_lo, r_hi]);
            ys.extend([q_lo, q_hi]);
        } else {
            let q = grid_point_with_theta(n, u_lo, u_hi, theta(&r_lo, n).value())?;
            xs.push(r_lo);
            ys.push(q);
        }
        let lam = transporter(n, &xs, &ys)?;
        apply(&lam, &mut jl, &mut jh, &mut acc);
    }
    require_member(&acc, n)?;
    assert!(&(&jl - &m) > u_lo && &(&jh - &m) < u_hi);
    assert!(
        m.floor().mod_floor(&BigInt::from(n)) == BigInt::from(target),
        "crossing class mismatch"
    );
    Ok(acc)
}

/// Checks whether the open interval (a, b) contains an integer.
fn contains_integer(a: &Dyadic, b: &Dyadic) -> bool {
    Dyadic::from_int(a.floor() + BigInt::from(1)) < *b
}

/// True iff (a, b) and (c, d) are disjoint after reducing modulo 1.
/// Both intervals must be shorter than 1/2.
fn disjoint_mod1(a: &Dyadic, b: &Dyadic, c: &Dyadic, d: &Dyadic) -> bool {
    let k0 = (c - a).floor();
    for off in [-1i64, 0, 1] {
        let k = Dyadic::from_int(&k0 + BigInt::from(off));
        let (cs, ds) = (c - &k, d - &k);
        let lo = if *a > cs { a.clone() } else { cs };
        let hi = if *b < ds { b.clone() } else { ds };
        if lo < hi {
            return false;
        }
    }
    true
}

/// A small interval (lo, hi) on which f is linear, whose images under
/// f and f^-1 are disjoint from it modulo 1, with all three intervals
/// avoiding the integers. Fails on powers of the central translation.
fn moved_window(f: &PLMap1P) -> Result<(Dyadic, Dyadic), MathError> {
    use rand::Rng;
    use rand::SeedableRng;
    let nodes = f.nodes();
    let k = nodes.len();
    let mut seg = None;
    for i in 0..k {
        if f.slope_logs()[i] != 0 {
            let x0 = nodes[i].0.clone();
            let x1 = if i + 1 < k {
                nodes[i + 1].0.clone()
            } else {
                &nodes[0].0 + &Dyadic::one()
            };
            seg = Some((x0, x1));
            break;
        }
    }
    let (x0, x1) = seg.ok_or_else(|| {
        MathError::Precondition("element is a translation; no displaced interval exists".into())
    })?;
    let width = &x1 - &x0;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(0x6d6f7665);
    for attempt in 0..10_000u64 {
        let e = 4 + (attempt / 64);
        let j = rng.gen_range(1..(1u64 << e.min(48)));
        let p = &x0 + &(&width * &Dyadic::new(BigInt::from(j), e.min(48)));
        if p <= x0 || p >= x1 {
            continue;
        }
        let fp = f.evaluate(&p);
        let gp = f.evaluate_inverse(&p);
        if p.is_integer()
            || fp.is_integer()
            || gp.is_integer()
            || (&fp - &p).is_integer()
            || (&p - &gp).is_integer()
        {
            continue;
        }
        let cap = Dyadic::pow2_inv(4);
        let mut eps = {
            let r1 = &p - &x0;
            let r2 = &x1 - &p;
            let mut m = if r1 < r2 { r1 } else { r2 };
            if cap < m {
                m = cap;
            }
            pow2_le(&m).mul_pow2(-1)
        };
        for _ in 0..200 {
            let lo = &p - &eps;
            let hi = &p + &eps;
            let flo = f.evaluate(&lo);
            let fhi = f.evaluate(&hi);
            let glo = f.evaluate_inverse(&lo);
            let ghi = f.evaluate_inverse(&hi);
            if !contains_integer(&lo, &hi)
                && !contains_integer(&flo, &fhi)
                && !contains_integer(&glo, &ghi)
                && disjoint_mod1(&lo, &hi, &flo, &fhi)
                && disjoint_mod1(&lo, &hi, &glo, &ghi)
            {
                return Ok((lo, hi));
            }
            eps = eps.mul_pow2(-1);
        }
    }
    Err(MathError::BudgetExceeded(
        "no displaced interval found".into(),
    ))
}

/// For f certified at level n and not a power of the central
/// translation: two F' elements a1, a2 with
/// h2 = [[f, a1], a2] a nonidentity element of F'.
pub fn find_disjoint_commutator(
    f: &PLMap1P,
    n: u32,
) -> Result<(PLMap1P, PLMap1P, PLMap1P), MathError> {
    require_member(f, n)?;
    let (lo1, hi1) = moved_window(f)?;
    let a1 = fprime_pair_in(n, &lo1, &hi1)?;
    let h1 = f.commutator(&a1);
    assert!(!h1.is_identity());
    let (lo2, hi2) = moved_window(&h1)?;
    let a2 = fprime_pair_in(n, &lo2, &hi2)?;
    let h2 = h1.commutator(&a2);
    assert!(classify_thompson(&a1, n).in_fprime);
    assert!(classify_thompson(&a2, n).in_fprime);
    assert!(!h2.is_identity());
    assert!(classify_thompson(&h2, n).in_fprime);
    Ok((a1, a2, h2))
}

/// Verdicts for the weak generating family of the commutator lattice:
/// the transported conjugates of the basic bumps, their cocycle
/// identities, kernel membership, conjugation into F', and the lattice
/// comparison against the independently built kernel basis.
#[derive(Clone, Debug)]
pub struct WeakGeneratorsReport {
    pub level: u32,
    pub commutator_xi_identity: bool,
    pub commutators_in_kernel: bool,
    pub conjugates_in_fprime: bool,
    pub lattice_matches_kernel: bool,
    pub details: Vec<String>,
}

impl WeakGeneratorsReport {
    pub fn pass(&self) -> bool {
        self.commutator_xi_identity
            && self.commutators_in_kernel
            && self.conjugates_in_fprime
            && self.lattice_matches_kernel
    }
}

/// Builds the weak generating family at level n: commutators
/// P_i = [f, zeta_i] of a degree-1 transport with the basic bumps,
/// each conjugated into F' by a special element whose support avoids
/// the bump envelope. Returns the pairs (P_i, conjugated P_i) and a
/// four-item report.
pub fn weak_generators_delta(
    n: u32,
) -> Result<(Vec<(PLMap1P, PLMap1P)>, WeakGeneratorsReport), MathError> {
    use crate::cocycle::{classify_subgroup, orbit_partition};
    let (e_lo, e_hi) = zeta_envelope(n);
    let eighth = Dyadic::pow2_inv(3);
    let (g_w, _wit) = special_in_derived(n, &-eighth, &e_lo)?;
    let u_hi = g_w.evaluate(&Dyadic::zero());
    let f = transport(n, &e_lo, &e_hi, &Dyadic::zero(), &u_hi, 1)?;
    let data = zeta_data(n);
    let modulus = (1u64 << n) - 1;
    let mut pairs = Vec::new();
    let mut report = WeakGeneratorsReport {
        level: n,
        commutator_xi_identity: true,
        commutators_in_kernel: true,
        conjugates_in_fprime: true,
        lattice_matches_kernel: true,
        details: Vec::new(),
    };
    let mut p_vectors = Vec::new();
    for k in 1..=modulus - 1 {
        let zeta = make_zeta(n, k)?;
        let p = f.commutator(&zeta);
        let conj = p.conjugate_by(&g_w.invert());
        let v = xi(&p, n)?;
        let doubled = 2 * k % modulus;
        let expected = &xi(&zeta, n)? - &xi(&make_zeta(n, doubled)?, n)?;
        if v != expected {
            report.commutator_xi_identity = false;
            report
                .details
                .push(format!("bump {}: cocycle of the commutator is {}", k, v));
        }
        let cls = classify_subgroup(&p, n)?;
        if !(cls.in_theta && cls.in_delta) {
            report.commutators_in_kernel = false;
            report
                .details
                .push(format!("bump {}: commutator escapes the kernel", k));
        }
        if !classify_thompson(&conj, n).in_fprime {
            report.conjugates_in_fprime = false;
            report
                .details
                .push(format!("bump {}: conjugate escapes F'", k));
        }
        p_vectors.push(v);
        pairs.push((p, conj));
    }
    // independent kernel basis: within each doubling class, consecutive
    // differences of the bump cocycle vectors
    let partition = orbit_partition(n);
    let mut groups: HashMap<usize, Vec<u64>> = HashMap::new();
    for k in 1..=modulus - 1 {
        let idx = (2 + k) % modulus;
        let idx = if idx == 0 { modulus } else { idx };
        groups.entry(partition.class_of(idx)).or_default().push(k);
    }
    let mut kernel: Vec<XiVector> = Vec::new();
    let mut keys: Vec<usize> = groups.keys().copied().collect();
    keys.sort_unstable();
    for key in keys {
        let members = &groups[&key];
        for w in members.windows(2) {
            kernel.push(&xi(&data.zetas[w[1] as usize - 1], n)? - &xi(&data.zetas[w[0] as usize - 1], n)?);
        }
    }
    let basis_p = LatticeBasis::new(n, p_vectors.clone());
    let basis_k = LatticeBasis::new(n, kernel.clone());
    let mut matches = basis_p.hermite_rows() == basis_k.hermite_rows();
    for v in &p_vectors {
        if basis_k.solve(v).is_none() {
            matches = false;
        }
    }
    for v in &kernel {
        if basis_p.solve(v).is_none() {
            matches = false;
        }
    }
    if !matches {
        report.lattice_matches_kernel = false;
        report
            .details
            .push("commutator lattice differs from the kernel lattice".into());
    }
    Ok((pairs, report))
}
