//! Width certificates and the consolidated verification suite. A
//! certificate records the exact distance from the image of 0 under
//! the canonical lift to the lattice nZ and the resulting lower bound
//! on factor counts; the suite replays every library invariant on
//! seeded pseudo-random inputs and emits a reproducible plain-text
//! report.

use std::fmt;

use num_bigint::BigInt;
use num_traits::Zero;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::cocycle::{doubling_step, gimel, orbit_partition, varsigma, xi};
use crate::decompose::{find_disjoint_commutator, normal_form, raise_zero, special_standard, weak_generators_delta};
use crate::dyadic::{theta, Dyadic};
use crate::error::MathError;
use crate::omega::{
    check_omega, gamma_canonical, is_member, is_special, make_tau, make_zeta,
};
use crate::plmap::PLMap1P;
use crate::thompson::{classify_thompson, grid_point_with_theta, transporter};

/// Which factor class a width certificate bounds.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum WidthKind {
    /// products of conjugates of fixed-point-admitting 1-periodic maps
    Ulam,
    /// products of commutators of 1-periodic maps
    Commutator,
}

impl fmt::Display for WidthKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            WidthKind::Ulam => write!(f, "ulam"),
            WidthKind::Commutator => write!(f, "commutator"),
        }
    }
}

/// A lower bound on the number of factors needed to express an
/// element, derived from the displacement of 0: each ulam factor moves
/// any point by less than 1, each commutator by less than 2, while
/// composing with central translations changes the displacement by a
/// multiple of n.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct WidthCertificate {
    pub kind: WidthKind,
    pub level: u32,
    pub witness_point_image: Dyadic,
    pub distance_to_nz: Dyadic,
    pub bound: BigInt,
    pub assumptions: Vec<String>,
}

impl fmt::Display for WidthCertificate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "width-certificate kind={} n={}", self.kind, self.level)?;
        writeln!(f, "witness_point_image={}", self.witness_point_image)?;
        writeln!(f, "distance_to_nZ={}", self.distance_to_nz)?;
        writeln!(f, "bound={}", self.bound)?;
        for a in &self.assumptions {
            writeln!(f, "assumption: {}", a)?;
        }
        Ok(())
    }
}

/// Exact distance from the image of 0 under the canonical lift to nZ,
/// together with that image.
fn zero_displacement(g: &PLMap1P, n: u32) -> Result<(Dyadic, Dyadic), MathError> {
    let canonical = gamma_canonical(g, n)?;
    let v = canonical.rep().evaluate(&Dyadic::zero());
    let other = &Dyadic::from_int(n as i64) - &v;
    let d = if v < other { v.clone() } else { other };
    Ok((v, d))
}

/// Least integer k with k * cap > d, where cap is a power of two given
/// by its log; 0 when d = 0.
fn least_exceeding(d: &Dyadic, log_cap: i64) -> BigInt {
    if d.is_zero() {
        return BigInt::zero();
    }
    d.mul_pow2(-log_cap).floor() + BigInt::from(1)
}

pub fn ulam_lower_certificate(g: &PLMap1P, n: u32) -> Result<WidthCertificate, MathError> {
    let (v, d) = zero_displacement(g, n)?;
    Ok(WidthCertificate {
        kind: WidthKind::Ulam,
        level: n,
        witness_point_image: v,
        bound: least_exceeding(&d, 0),
        distance_to_nz: d,
        assumptions: vec![
            "each factor is a conjugate of a fixed-point-admitting 1-periodic map; \
             such factors displace every point by less than 1"
                .into(),
            "central translation powers shift the displacement of 0 by multiples of n".into(),
        ],
    })
}

pub fn commutator_lower_certificate(g: &PLMap1P, n: u32) -> Result<WidthCertificate, MathError> {
    let (v, d) = zero_displacement(g, n)?;
    Ok(WidthCertificate {
        kind: WidthKind::Commutator,
        level: n,
        witness_point_image: v,
        bound: least_exceeding(&d, 1),
        distance_to_nz: d,
        assumptions: vec![
            "each factor is a commutator of 1-periodic maps; such factors displace \
             every point by less than 2"
                .into(),
            "central translation powers shift the displacement of 0 by multiples of n".into(),
        ],
    })
}

/// A random certified word: a product of copies of tau, the basic
/// bumps, central translations, and single-point transporters.
pub fn random_certified_word(n: u32, rng: &mut ChaCha8Rng) -> PLMap1P {
    let mut f = PLMap1P::identity();
    let pieces = rng.gen_range(2..6);
    for _ in 0..pieces {
        let next = match rng.gen_range(0..5) {
            0 => make_tau(n),
            1 => make_tau(n).invert(),
            2 => {
                let k = rng.gen_range(1..=(1u64 << n) - 2);
                let z = make_zeta(n, k).expect("bump index in range");
                if rng.gen_bool(0.5) {
                    z
                } else {
                    z.invert()
                }
            }
            3 => {
                let c = if rng.gen_bool(0.5) { n as i64 } else { -(n as i64) };
                PLMap1P::translation(Dyadic::from_int(c))
            }
            _ => loop {
                let x = Dyadic::new(2 * rng.gen_range(1..128) + 1, 8);
                let lo = Dyadic::new(rng.gen_range(1..200), 8);
                let hi = &lo + &Dyadic::new(rng.gen_range(10..55), 8);
                if hi >= Dyadic::one() {
                    continue;
                }
                let y = grid_point_with_theta(n, &lo, &hi, theta(&x, n).value())
                    .expect("matched landing point");
                break transporter(n, &[x], &[y]).expect("matched single-point transporter");
            },
        };
        f = f.compose(&next);
    }
    f
}

/// A random element fixing the integers with trivial germs there:
/// a product of basic bumps conjugated by single-point transporters.
pub fn random_trivial_germ_element(n: u32, rng: &mut ChaCha8Rng) -> PLMap1P {
    let mut f = PLMap1P::identity();
    for _ in 0..rng.gen_range(1..4) {
        let k = rng.gen_range(1..=(1u64 << n) - 2);
        let mut z = make_zeta(n, k).expect("bump index in range");
        if rng.gen_bool(0.5) {
            z = z.invert();
        }
        if rng.gen_bool(0.7) {
            let x = Dyadic::new(2 * rng.gen_range(1..128) + 1, 8);
            let lo = Dyadic::new(rng.gen_range(1..200), 8);
            let hi = &lo + &Dyadic::new(rng.gen_range(10..55), 8);
            if hi < Dyadic::one() {
                if let Ok(y) = grid_point_with_theta(n, &lo, &hi, theta(&x, n).value()) {
                    let h = transporter(n, &[x], &[y]).expect("matched transporter");
                    z = z.conjugate_by(&h);
                }
            }
        }
        f = f.compose(&z);
    }
    f
}

/// A random 1-periodic map built from matched dyadic subdivisions of
/// the unit interval, optionally composed with a dyadic translation.
/// Fixes 0 when `translate` is false.
pub fn random_periodic_map(rng: &mut ChaCha8Rng, translate: bool) -> PLMap1P {
    let splits = rng.gen_range(1..6);
    let cuts = |rng: &mut ChaCha8Rng| {
        let mut v = vec![Dyadic::zero(), Dyadic::one()];
        for _ in 0..splits {
            let i = rng.gen_range(0..v.len() - 1);
            let mid = v[i].midpoint(&v[i + 1]);
            v.insert(i + 1, mid);
        }
        v
    };
    let xs = cuts(rng);
    let ys = cuts(rng);
    let nodes = xs.into_iter().zip(ys).collect();
    let f = PLMap1P::from_nodes(nodes).expect("matched subdivisions");
    if translate {
        let c = Dyadic::new(rng.gen_range(-40..40), 4);
        f.compose(&PLMap1P::translation(c))
    } else {
        f
    }
}

/// Result of one named check in the suite.
#[derive(Clone, Debug)]
pub struct LemmaCheck {
    pub anchor: String,
    pub trials: u64,
    pub pass: u64,
    pub fail: u64,
    pub counterexamples: Vec<String>,
}

/// The suite report: one line per check plus serialized
/// counterexamples; byte-identical for identical (n, seed, iterations).
#[derive(Clone, Debug)]
pub struct SuiteReport {
    pub level: u32,
    pub seed: u64,
    pub iterations: u64,
    pub checks: Vec<LemmaCheck>,
}

impl SuiteReport {
    pub fn pass(&self) -> bool {
        self.checks.iter().all(|c| c.fail == 0)
    }
}

impl fmt::Display for SuiteReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for c in &self.checks {
            writeln!(
                f,
                "LEMMA {} n={} trials={} pass={} fail={}",
                c.anchor, self.level, c.trials, c.pass, c.fail
            )?;
        }
        for c in &self.checks {
            for ce in &c.counterexamples {
                writeln!(f, "counterexample {}: {}", c.anchor, ce)?;
            }
        }
        Ok(())
    }
}

/// Stable per-trial seed: an FNV-1a fold of the anchor name mixed with
/// the suite seed and trial index, independent of thread scheduling.
fn trial_seed(seed: u64, anchor: &str, trial: u64) -> u64 {
    let mut h: u64 = 0xcbf29ce484222325;
    for b in anchor.bytes() {
        h = (h ^ b as u64).wrapping_mul(0x100000001b3);
    }
    h = (h ^ seed).wrapping_mul(0x100000001b3);
    (h ^ trial).wrapping_mul(0x100000001b3)
}

/// Runs `trial` for indices 0..iterations on up to `threads` workers;
/// results come back in index order regardless of scheduling.
fn parallel_trials<F>(iterations: u64, threads: usize, trial: F) -> Vec<Option<String>>
where
    F: Fn(u64) -> Option<String> + Sync,
{
    if threads <= 1 || iterations <= 1 {
        return (0..iterations).map(trial).collect();
    }
    let trial = &trial;
    let mut slots: Vec<Vec<(u64, Option<String>)>> = Vec::new();
    std::thread::scope(|scope| {
        let mut handles = Vec::new();
        for w in 0..threads as u64 {
            handles.push(scope.spawn(move || {
                let mut mine = Vec::new();
                let mut i = w;
                while i < iterations {
                    mine.push((i, trial(i)));
                    i += threads as u64;
                }
                mine
            }));
        }
        for h in handles {
            slots.push(h.join().expect("suite worker"));
        }
    });
    let mut merged: Vec<(u64, Option<String>)> = slots.into_iter().flatten().collect();
    merged.sort_by_key(|(i, _)| *i);
    merged.into_iter().map(|(_, r)| r).collect()
}

fn collect_check(anchor: &str, results: Vec<Option<String>>) -> LemmaCheck {
    let trials = results.len() as u64;
    let mut counterexamples = Vec::new();
    for r in results.into_iter().flatten() {
        if counterexamples.len() < 5 {
            counterexamples.push(r);
        }
    }
    let fail = counterexamples.len() as u64;
    LemmaCheck {
        anchor: anchor.into(),
        trials,
        pass: trials - fail,
        fail,
        counterexamples,
    }
}

/// Inverse of the index doubling step: multiplies the shifted index by
/// the inverse of 2 modulo 2^n - 1.
fn doubling_step_inverse(n: u32, i: u64) -> u64 {
    let modulus = (1u64 << n) - 1;
    let inv2 = 1u64 << (n - 1);
    let r = ((i - 1) % modulus * inv2) % modulus;
    if r == 0 {
        modulus
    } else {
        r
    }
}

fn worker_count() -> usize {
    std::env::var("PLGROUP_THREADS")
        .ok()
        .and_then(|s| s.parse::<usize>().ok())
        .filter(|&t| t >= 1)
        .unwrap_or_else(|| {
            std::thread::available_parallelism()
                .map(|p| p.get())
                .unwrap_or(1)
        })
        .min(64)
}

/// Runs every library invariant on seeded pseudo-random inputs.
/// `iterations = 0` still executes the structural checks.
pub fn run_lemma_suite(n: u32, seed: u64, iterations: u64) -> SuiteReport {
    run_lemma_suite_with_threads(n, seed, iterations, worker_count())
}

pub fn run_lemma_suite_with_threads(
    n: u32,
    seed: u64,
    iterations: u64,
    threads: usize,
) -> SuiteReport {
    assert!((2..=6).contains(&n), "suite level outside the desk range");
    let mut checks = Vec::new();

    // structural: bump cocycle table
    checks.push(collect_check(
        "zeta-cocycle",
        (1..=(1u64 << n) - 2)
            .map(|k| {
                let z = make_zeta(n, k).expect("bump index in range");
                let v = xi(&z, n).expect("bump cocycle");
                let modulus = (1u64 << n) - 1;
                let mut expected = crate::cocycle::XiVector::zero(n);
                expected.add_entry(BigInt::from(2 + k), BigInt::from(-2));
                expected.add_entry(BigInt::from((2 + 2 * k) % modulus), BigInt::from(1));
                if v == expected {
                    None
                } else {
                    Some(format!("bump {} has cocycle {}", k, v))
                }
            })
            .collect(),
    ));

    // structural: doubling classes partition the indices
    checks.push(collect_check("orbit-partition", {
        let partition = orbit_partition(n);
        let modulus = (1u64 << n) - 1;
        let mut results = Vec::new();
        let total: usize = partition.classes().iter().map(|c| c.len()).sum();
        results.push(if total == modulus as usize && partition.classes()[0] == vec![2] {
            None
        } else {
            Some(format!("classes do not partition 1..{}", modulus))
        });
        for class in partition.classes() {
            for &i in class {
                let j = doubling_step(n, i);
                if partition.class_of(j) != partition.class_of(i) {
                    results.push(Some(format!("index {} leaves its class", i)));
                }
            }
        }
        results
    }));

    // structural: membership accepts the generators, rejects the unit
    // translation with a located segment
    checks.push(collect_check("membership", {
        let mut results = Vec::new();
        results.push(if is_member(&make_tau(n), n) {
            None
        } else {
            Some("tau rejected".into())
        });
        results.push(
            if is_member(&PLMap1P::translation(Dyadic::from_int(n as i64)), n) {
                None
            } else {
                Some("central translation rejected".into())
            },
        );
        let cert = check_omega(&PLMap1P::translation(Dyadic::one()), n);
        results.push(if !cert.pass() {
            None
        } else {
            Some("unit translation accepted".into())
        });
        results
    }));

    // structural: the cached special element and the raised witness
    checks.push(collect_check("special-element", {
        let cached = special_standard(n);
        vec![
            match is_special(&cached.0, n) {
                Ok(true) => None,
                _ => Some("special element is not special".into()),
            },
            match cached.1.verify(n) {
                Ok(()) => None,
                Err(e) => Some(format!("special witness fails: {}", e)),
            },
        ]
    }));
    checks.push(collect_check("raise-zero", {
        let m = (n / 2) as u64;
        match raise_zero(n, m) {
            Ok((h, fz)) => vec![
                if h.evaluate(&Dyadic::zero()).floor() == BigInt::from(m) {
                    None
                } else {
                    Some("raised image in the wrong window".into())
                },
                match fz.verify(n) {
                    Ok(()) => None,
                    Err(e) => Some(format!("raise witness fails: {}", e)),
                },
            ],
            Err(e) => vec![Some(format!("raise construction fails: {}", e))],
        }
    }));

    // structural, small levels only: the weak generating family
    if n <= 3 {
        checks.push(collect_check("weak-generators", {
            match weak_generators_delta(n) {
                Ok((_, report)) => vec![
                    report
                        .commutator_xi_identity
                        .then_some(())
                        .map_or(Some("cocycle difference identity fails".into()), |_| None),
                    report
                        .commutators_in_kernel
                        .then_some(())
                        .map_or(Some("commutator escapes the kernel".into()), |_| None),
                    report
                        .conjugates_in_fprime
                        .then_some(())
                        .map_or(Some("conjugate escapes F'".into()), |_| None),
                    report
                        .lattice_matches_kernel
                        .then_some(())
                        .map_or(Some("lattice mismatch".into()), |_| None),
                ],
                Err(e) => vec![Some(format!("construction fails: {}", e))],
            }
        }));
    }

    // randomized checks
    let run = |anchor: &str, f: &(dyn Fn(&mut ChaCha8Rng) -> Option<String> + Sync)| {
        collect_check(
            anchor,
            parallel_trials(iterations, threads, |i| {
                let mut rng = ChaCha8Rng::seed_from_u64(trial_seed(seed, anchor, i));
                f(&mut rng)
            }),
        )
    };

    checks.push(run("closure", &|rng| {
        let g = random_certified_word(n, rng);
        let cert = check_omega(&g, n);
        if cert.pass() {
            None
        } else {
            Some(format!("word fails membership:\n{}\n{}", g, cert))
        }
    }));

    checks.push(run("chain-rule", &|rng| {
        let pieces: Vec<PLMap1P> = (0..3).map(|_| random_certified_word(n, rng)).collect();
        let product = pieces[0].compose(&pieces[1]).compose(&pieces[2]);
        for _ in 0..20 {
            let x = Dyadic::new(2 * rng.gen_range(1i64..256) + 1, 9);
            let (l, r) = product.slopes_at(&x);
            if l != r {
                continue;
            }
            let mut total = 0i64;
            let mut p = x.clone();
            let mut smooth = true;
            for piece in &pieces {
                let (pl, pr) = piece.slopes_at(&p);
                if pl != pr {
                    smooth = false;
                    break;
                }
                total += pr;
                p = piece.evaluate(&p);
            }
            if !smooth {
                continue;
            }
            return if total == r {
                None
            } else {
                Some(format!("slope log {} vs factor sum {} at {}", r, total, x))
            };
        }
        None
    }));

    checks.push(run("theta-orbit", &|rng| {
        let g = random_certified_word(n, rng);
        let depth = n as u64 * rng.gen_range(2..5);
        let k = rng.gen_range(1..(1i64 << depth.min(40)));
        let x = Dyadic::new(k, depth.min(40));
        let y = g.evaluate(&x);
        let m = i64::try_from(&y.floor()).expect("bounded drift");
        let mut idx = theta(&x, n).orbit_index();
        for _ in 0..m.unsigned_abs() {
            idx = if m >= 0 {
                doubling_step(n, idx)
            } else {
                doubling_step_inverse(n, idx)
            };
        }
        let red = &y - &Dyadic::from_int(y.floor());
        if theta(&red, n).orbit_index() == idx {
            None
        } else {
            Some(format!("orbit index drifts at {} under\n{}", x, g))
        }
    }));

    checks.push(run("transporter", &|rng| {
        let quarter = 1i64 << 6;
        let mut xs = Vec::new();
        let mut ys = Vec::new();
        for i in 0..3i64 {
            let x = Dyadic::new(quarter * i + rng.gen_range(1..quarter), 8);
            let lo = Dyadic::new(quarter * i, 8);
            let hi = Dyadic::new(quarter * (i + 1), 8);
            let y = grid_point_with_theta(n, &lo, &hi, theta(&x, n).value())
                .expect("slot landing point");
            xs.push(x);
            ys.push(y);
        }
        let f = match transporter(n, &xs, &ys) {
            Ok(f) => f,
            Err(e) => return Some(format!("matched tuple refused: {}", e)),
        };
        for (x, y) in xs.iter().zip(&ys) {
            if &f.evaluate(x) != y {
                return Some(format!("transporter misses {} -> {}", x, y));
            }
        }
        if !is_member(&f, n) {
            return Some("transporter output not certified".into());
        }
        // mismatch the middle target residue
        let modulus = (1u64 << n) - 1;
        let bad = grid_point_with_theta(
            n,
            &Dyadic::new(quarter, 8),
            &Dyadic::new(2 * quarter, 8),
            (theta(&xs[1], n).value() + 1) % modulus,
        )
        .expect("mismatched landing point");
        let mut bad_ys = ys.clone();
        bad_ys[1] = bad;
        match transporter(n, &xs, &bad_ys) {
            Err(MathError::ThetaMismatch { .. }) => None,
            Err(e) => Some(format!("mismatch refused for the wrong reason: {}", e)),
            Ok(_) => Some("mismatched tuple accepted".into()),
        }
    }));

    checks.push(run("factor-diagram", &|rng| {
        let g = random_trivial_germ_element(n, rng);
        if !classify_thompson(&g, n).in_fc {
            return Some(format!("generator escaped the trivial-germ class:\n{}", g));
        }
        let v = match xi(&g, n) {
            Ok(v) => v,
            Err(e) => return Some(format!("cocycle fails: {}", e)),
        };
        let lhs = gimel(&gamma_canonical(&g, n).expect("certified generator"));
        if lhs == varsigma(&v, n) {
            None
        } else {
            Some(format!("factor diagram breaks on\n{}", g))
        }
    }));

    checks.push(run("commutator-kernel", &|rng| {
        let f = random_certified_word(n, rng);
        let g = random_certified_word(n, rng);
        let c = f.commutator(&g);
        let value = gimel(&gamma_canonical(&c, n).expect("commutator of certified words"));
        if value.is_zero() {
            None
        } else {
            Some(format!("commutator has nonzero class value:\n{}", c))
        }
    }));

    checks.push(run("normal-form", &|rng| {
        let g = random_certified_word(n, rng);
        match normal_form(&g, n) {
            Ok(fz) if fz.factors().len() <= 2 * n as usize + 4 => None,
            Ok(fz) => Some(format!("factor budget exceeded: {}", fz.factors().len())),
            Err(e) => Some(format!("normal form fails: {} on\n{}", e, g)),
        }
    }));

    checks.push(run("double-commutator", &|rng| {
        let f = random_certified_word(n, rng);
        match find_disjoint_commutator(&f, n) {
            Ok((_, _, h2)) => {
                if classify_thompson(&h2, n).in_fprime && !h2.is_identity() {
                    None
                } else {
                    Some(format!("extracted element escapes F':\n{}", h2))
                }
            }
            // central translation powers admit no disjoint interval
            Err(MathError::Precondition(_)) => None,
            Err(e) => Some(format!("extraction fails: {} on\n{}", e, f)),
        }
    }));

    checks.push(run("displacement-commutator", &|rng| {
        let f = random_periodic_map(rng, true);
        let g = random_periodic_map(rng, true);
        let d = f.commutator(&g).max_displacement();
        if d < Dyadic::from_int(2) {
            None
        } else {
            Some(format!("commutator displacement {}", d))
        }
    }));

    checks.push(run("displacement-fixed-point", &|rng| {
        let f = random_periodic_map(rng, false).conjugate_by(&random_periodic_map(rng, true));
        if !f.has_fixed_point() {
            return Some("conjugate lost its fixed point".into());
        }
        let d = f.max_displacement();
        if d < Dyadic::one() {
            None
        } else {
            Some(format!("fixed-point map displacement {}", d))
        }
    }));

    checks.push(run("width-monotone", &|rng| {
        let g = random_certified_word(n, rng);
        let shifted = g.compose(&PLMap1P::translation(Dyadic::from_int(n as i64)));
        let a = ulam_lower_certificate(&g, n).expect("certified word");
        let b = ulam_lower_certificate(&shifted, n).expect("certified word");
        let c = commutator_lower_certificate(&g, n).expect("certified word");
        let d = commutator_lower_certificate(&shifted, n).expect("certified word");
        if a.bound == b.bound && c.bound == d.bound {
            None
        } else {
            Some(format!("bound changed under the central translation:\n{}", g))
        }
    }));

    SuiteReport {
        level: n,
        seed,
        iterations,
        checks,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_integer::Integer;

    #[test]
    fn identity_certificates_are_trivial() {
        let id = PLMap1P::identity();
        for n in 2..=5 {
            assert_eq!(ulam_lower_certificate(&id, n).unwrap().bound, BigInt::zero());
            assert_eq!(
                commutator_lower_certificate(&id, n).unwrap().bound,
                BigInt::zero()
            );
        }
    }

    #[test]
    fn tau_certificates() {
        let tau = make_tau(2);
        let cert = ulam_lower_certificate(&tau, 2).unwrap();
        assert_eq!(cert.witness_point_image, Dyadic::new(3, 3));
        assert_eq!(cert.distance_to_nz, Dyadic::new(3, 3));
        assert_eq!(cert.bound, BigInt::from(1));
        let cert = commutator_lower_certificate(&tau, 2).unwrap();
        assert_eq!(cert.bound, BigInt::from(1));
    }

    #[test]
    fn bounds_invariant_under_central_translation() {
        for n in 2..=4u32 {
            let tau = make_tau(n);
            let shifted = tau.compose(&PLMap1P::translation(Dyadic::from_int(3 * n as i64)));
            assert_eq!(
                ulam_lower_certificate(&tau, n).unwrap().bound,
                ulam_lower_certificate(&shifted, n).unwrap().bound
            );
            assert_eq!(
                commutator_lower_certificate(&tau, n).unwrap().bound,
                commutator_lower_certificate(&shifted, n).unwrap().bound
            );
        }
    }

    #[test]
    fn raised_zero_witnesses_reach_the_bound() {
        for n in [4u32, 5, 6] {
            let m = n / 2;
            let (target, _) = raise_zero(n, m as u64).unwrap();
            let cert = ulam_lower_certificate(&target, n).unwrap();
            assert!(
                cert.bound >= BigInt::from(m),
                "n={} bound {} below {}",
                n,
                cert.bound,
                m
            );
        }
    }

    #[test]
    fn brute_force_products_respect_the_ulam_bound() {
        let mut rng = ChaCha8Rng::seed_from_u64(41);
        for _ in 0..60 {
            let j = rng.gen_range(1..=3);
            let mut product = PLMap1P::identity();
            for _ in 0..j {
                let base = random_periodic_map(&mut rng, false);
                let conj = random_periodic_map(&mut rng, true);
                product = product.compose(&base.conjugate_by(&conj));
            }
            let v = product.evaluate(&Dyadic::zero());
            let q = v.floor().div_floor(&BigInt::from(4));
            let lo = Dyadic::from_int(4 * q.clone());
            let hi = Dyadic::from_int(4 * (q + 1));
            let dist = std::cmp::min(&v - &lo, &hi - &v);
            assert!(
                dist < Dyadic::from_int(j),
                "product of {} conjugates displaces 0 by {}",
                j,
                dist
            );
        }
    }

    #[test]
    fn small_suite_passes() {
        let report = run_lemma_suite(2, 0, 20);
        assert!(report.pass(), "suite failed:\n{}", report);
    }

    #[test]
    fn suite_reports_are_deterministic() {
        let a = run_lemma_suite(2, 7, 12).to_string();
        let b = run_lemma_suite(2, 7, 12).to_string();
        assert_eq!(a, b);
    }

    #[test]
    fn suite_reports_do_not_depend_on_worker_count() {
        let a = run_lemma_suite_with_threads(2, 3, 10, 1).to_string();
        let b = run_lemma_suite_with_threads(2, 3, 10, 3).to_string();
        assert_eq!(a, b);
    }
}
