//! Damping step on random piecewise quadratics.

mod support;

use support::properties::*;

#[test]
fn averages_are_untouched() {
    oe_preserves_averages(2000).unwrap();
}

#[test]
fn indicator_is_scale_invariant() {
    oe_scale_invariance(2000).unwrap();
}

#[test]
fn damping_composes() {
    oe_semigroup(2000).unwrap();
}
