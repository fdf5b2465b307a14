//! Exact arithmetic for a family of piecewise-linear circle
//! homeomorphism groups: 1-periodic PL maps with dyadic breakpoints and
//! power-of-two slopes, filtered by a level-n congruence between slopes
//! and integer displacement counts. The library certifies membership,
//! computes the orbit and cocycle invariants, constructs factorizations
//! witnessing uniform simplicity properties, and emits machine-checkable
//! width certificates.

pub mod certify;
pub mod cocycle;
pub mod decompose;
pub mod dyadic;
pub mod error;
pub mod omega;
pub mod plmap;
pub mod thompson;

pub use certify::{
    commutator_lower_certificate, random_certified_word, random_periodic_map,
    random_trivial_germ_element, run_lemma_suite, run_lemma_suite_with_threads,
    ulam_lower_certificate, LemmaCheck, SuiteReport, WidthCertificate, WidthKind,
};
pub use cocycle::{
    classify_subgroup, full_xi_sum_check, gimel, orbit_partition, realize_xi, varsigma, xi,
    GimelVector, LatticeBasis, OrbitPartition, Realization, SubgroupClass, XiVector,
};
pub use decompose::{
    find_disjoint_commutator, fprime_mover, normal_form, raise_zero, special_in_derived,
    special_standard, transport, weak_generators_delta, Factor, FactorTag, Factorization,
    WeakGeneratorsReport,
};
pub use dyadic::{int_count, theta, Dyadic, Residue};
pub use error::{MathError, ParseError};
pub use omega::{
    check_omega, degree, gamma_canonical, is_member, is_special, make_tau, make_translation,
    make_zeta, require_member, tau_support, zeta_envelope, GammaElement, OmegaCertificate,
};
pub use plmap::PLMap1P;
pub use thompson::{bump, classify_thompson, grid_point_with_theta, transporter, ThompsonClass};
