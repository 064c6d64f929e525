//! Seeded generators for test fixtures.
//!
//! Everything is produced in exact rationals with small denominators and then
//! converted to the requested backend, so both backends see the same objects.
//! Each trial gets its own ChaCha stream derived from `(seed, stream)`; there
//! is no shared generator.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::bct::state::{BctEffect, BctState};
use crate::bct::tensor::{AtomicTerm, Instrument, ReversibleSpec, TransformationTensor};
use crate::scalar::Rational;
use crate::systems::SystemShape;

const DENOMINATORS: [i128; 6] = [2, 3, 4, 6, 8, 12];

/// Generator for trial `stream` of a run seeded with `seed`.
pub fn trial_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// A random shape with at most `max_parts` factors, factor dims in
/// `[2, max_dim]`, and ontic dimension at most `max_ontic`.
pub fn shape(rng: &mut impl Rng, max_dim: usize, max_parts: usize, max_ontic: usize) -> SystemShape {
    let max_dim = max_dim.max(2);
    loop {
        let parts = rng.gen_range(1..=max_parts.max(1));
        let elems: Vec<usize> = (0..parts).map(|_| rng.gen_range(2..=max_dim)).collect();
        let s = SystemShape::new(elems).expect("dims >= 2");
        if s.ontic_dim() <= max_ontic {
            return s;
        }
    }
}

/// Splits `units` into `parts` nonnegative integers.
fn partition(rng: &mut impl Rng, units: i128, parts: usize) -> Vec<i128> {
    let mut cuts: Vec<i128> = (0..parts.saturating_sub(1)).map(|_| rng.gen_range(0..=units)).collect();
    cuts.sort_unstable();
    let mut out = Vec::with_capacity(parts);
    let mut prev = 0;
    for c in cuts {
        out.push(c - prev);
        prev = c;
    }
    out.push(units - prev);
    out
}

fn denominator(rng: &mut impl Rng) -> i128 {
    *DENOMINATORS.choose(rng).expect("non-empty")
}

/// A distribution over `len` entries, normalised or not.
pub fn weights(rng: &mut impl Rng, len: usize, normalised: bool) -> Vec<Rational> {
    let d = denominator(rng);
    let units = if normalised { d } else { rng.gen_range(0..=d) };
    let support = rng.gen_range(1..=len.min(4));
    let mut idx: Vec<usize> = (0..len).collect();
    idx.shuffle(rng);
    let mut w = vec![Rational::from(0); len];
    for (&i, u) in idx[..support].iter().zip(partition(rng, units, support)) {
        w[i] = Rational::new(u, d);
    }
    w
}

pub fn state(rng: &mut impl Rng, shape: &SystemShape, normalised: bool) -> BctState {
    BctState::new(shape.clone(), weights(rng, shape.bct_dim(), normalised)).expect("valid by construction")
}

pub fn effect(rng: &mut impl Rng, shape: &SystemShape) -> BctEffect {
    let d = denominator(rng);
    let w = (0..shape.bct_dim()).map(|_| Rational::new(rng.gen_range(0..=d), d)).collect();
    BctEffect::new(shape.clone(), w).expect("valid by construction")
}

/// A random transformation with up to three atomic terms per input label.
pub fn tensor(rng: &mut impl Rng, input: &SystemShape, output: &SystemShape, channel: bool) -> TransformationTensor {
    let n_out = output.bct_dim();
    let mut terms = Vec::new();
    for i in 1..=input.bct_dim() {
        let d = denominator(rng);
        let units = if channel { d } else { rng.gen_range(0..=d) };
        let k = rng.gen_range(1..=3);
        for u in partition(rng, units, k) {
            if u > 0 {
                terms.push(AtomicTerm::new(i, rng.gen_range(1..=n_out), rng.gen_range(0..2), Rational::new(u, d)));
            }
        }
    }
    TransformationTensor::new(input.clone(), output.clone(), terms).expect("valid by construction")
}

/// A single atomic term with random labels and shift.
pub fn atomic(rng: &mut impl Rng, input: &SystemShape, output: &SystemShape) -> AtomicTerm {
    let d = denominator(rng);
    AtomicTerm::new(
        rng.gen_range(1..=input.bct_dim()),
        rng.gen_range(1..=output.bct_dim()),
        rng.gen_range(0..2),
        Rational::new(rng.gen_range(1..=d), d),
    )
}

/// Splits a random channel into `outcomes` members.
pub fn instrument(rng: &mut impl Rng, input: &SystemShape, output: &SystemShape, outcomes: usize) -> Instrument {
    let channel = tensor(rng, input, output, true);
    let mut members = vec![Vec::new(); outcomes];
    for term in channel.terms() {
        let d = denominator(rng);
        for (k, u) in partition(rng, d, outcomes).into_iter().enumerate() {
            if u > 0 {
                members[k].push(AtomicTerm::new(term.input, term.output, term.tau, term.weight * Rational::new(u, d)));
            }
        }
    }
    let members = members
        .into_iter()
        .map(|m| TransformationTensor::new(input.clone(), output.clone(), m).expect("valid by construction"))
        .collect();
    Instrument::new((0..outcomes).map(|k| format!("y{k}")).collect(), members).expect("sums to a channel")
}

pub fn reversible_spec(rng: &mut impl Rng, n: usize) -> ReversibleSpec {
    let mut perm: Vec<usize> = (1..=n).collect();
    perm.shuffle(rng);
    let bits = (0..n).map(|_| rng.gen_range(0..2)).collect();
    ReversibleSpec::new(perm, bits).expect("valid by construction")
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_traits::{One, Zero};

    #[test]
    fn streams_are_reproducible_and_distinct() {
        let a: Vec<u32> = (0..4).map(|_| trial_rng(7, 3).gen()).collect();
        let b: Vec<u32> = (0..4).map(|_| trial_rng(7, 3).gen()).collect();
        assert_eq!(a, b);
        assert_ne!(trial_rng(7, 3).gen::<u64>(), trial_rng(7, 4).gen::<u64>());
    }

    #[test]
    fn generated_objects_are_valid() {
        let mut rng = trial_rng(1, 0);
        for _ in 0..200 {
            let a = shape(&mut rng, 3, 2, 64);
            let b = shape(&mut rng, 3, 2, 64);
            assert!(a.ontic_dim() <= 64);
            let t = tensor(&mut rng, &a, &b, true);
            assert!(t.is_channel(0.0));
            let rho = state(&mut rng, &a, true);
            assert!(rho.norm().is_one());
            let w = weights(&mut rng, 5, false);
            assert!(w.iter().all(|x| *x >= Rational::zero()));
            let ins = instrument(&mut rng, &a, &b, 3);
            assert_eq!(ins.members().len(), 3);
        }
    }
}
