//! Invariant-region properties on random states, for gamma in {0, 1, 2}.

mod support;

use arz_core::SBound;
use support::properties::*;

#[test]
fn regions_are_convex() {
    for g in GAMMAS {
        convexity(g, 10_000).unwrap();
    }
}

#[test]
fn gap_function_is_nonnegative() {
    for g in GAMMAS {
        gap_nonnegative(g, 10_000).unwrap();
    }
}

#[test]
fn certificate_separates_velocity_region() {
    for g in GAMMAS {
        certificate(g, 10_000).unwrap();
    }
}

#[test]
fn box_updates_are_nested() {
    for g in GAMMAS {
        nesting(g, 10_000).unwrap();
    }
}

#[test]
fn lf_split_stays_in_marker_region() {
    for g in GAMMAS {
        lf_splitting(g, 100_000).unwrap();
    }
}

#[test]
fn generalized_lf_state_is_admissible() {
    for g in GAMMAS {
        for b in [SBound::Loose, SBound::Tight] {
            generalized_lf(g, b, 100_000).unwrap();
        }
    }
}
