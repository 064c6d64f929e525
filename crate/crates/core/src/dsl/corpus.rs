//! Seeded random closed circuits, emitted as source text.

use std::collections::BTreeSet;
use std::fmt::Write;

use rand::seq::SliceRandom;
use rand::Rng;

use crate::random::trial_rng;
use crate::systems::SystemShape;

struct Builder {
    lines: Vec<String>,
    systems: BTreeSet<String>,
    fresh: usize,
}

impl Builder {
    fn system(&mut self, dims: &[usize]) -> String {
        let name = format!("s{}", dims.iter().map(ToString::to_string).collect::<Vec<_>>().join("_"));
        if self.systems.insert(name.clone()) {
            let line = match dims {
                [n] => format!("system {name} = elem {n}"),
                _ => {
                    let parts: Vec<String> = dims.iter().map(|&n| self.system(&[n])).collect();
                    format!("system {name} = {}", parts.join(" * "))
                }
            };
            self.lines.push(line);
        }
        name
    }

    fn name(&mut self, prefix: &str) -> String {
        self.fresh += 1;
        format!("{prefix}{}", self.fresh)
    }
}

fn bct_dim(dims: &[usize]) -> usize {
    SystemShape::new(dims.to_vec()).expect("dims >= 2").bct_dim()
}

/// `parts` nonnegative integers summing to `total`.
fn split(rng: &mut impl Rng, total: u32, parts: usize) -> Vec<u32> {
    let mut cuts: Vec<u32> = (1..parts).map(|_| rng.gen_range(0..=total)).collect();
    cuts.sort_unstable();
    cuts.push(total);
    let mut last = 0;
    cuts.into_iter().map(|c| c - std::mem::replace(&mut last, c)).collect()
}

fn weight(num: u32, den: u32) -> String {
    crate::scalar::Rational::new(num.into(), den.into()).to_string()
}

fn state_body(rng: &mut impl Rng, n: usize) -> String {
    match rng.gen_range(0..4) {
        0 => format!("pure {}", rng.gen_range(1..=n)),
        1 => "uniform".into(),
        _ => {
            let den = *[2u32, 3, 4, 6].choose(rng).expect("non-empty");
            let mut labels: Vec<usize> = (1..=n).collect();
            labels.shuffle(rng);
            let k = rng.gen_range(1..=n.min(3));
            let parts: Vec<String> = split(rng, den, k)
                .into_iter()
                .zip(&labels)
                .filter(|(u, _)| *u > 0)
                .map(|(u, l)| format!("{} {l}", weight(u, den)))
                .collect();
            format!("mix {}", parts.join(" + "))
        }
    }
}

fn effect_body(rng: &mut impl Rng, n: usize) -> String {
    match rng.gen_range(0..4) {
        0 => format!("pure {}", rng.gen_range(1..=n)),
        1 => "discard".into(),
        _ => {
            let den = *[2u32, 3, 4].choose(rng).expect("non-empty");
            let mut labels: Vec<usize> = (1..=n).collect();
            labels.shuffle(rng);
            let k = rng.gen_range(1..=n.min(3));
            let parts: Vec<String> =
                labels[..k].iter().map(|l| format!("{} {l}", weight(rng.gen_range(1..=den), den))).collect();
            format!("mix {}", parts.join(" + "))
        }
    }
}

fn gate_body(rng: &mut impl Rng, n_in: usize, n_out: usize) -> String {
    let mut terms = Vec::new();
    for i in 1..=n_in {
        let den = *[1u32, 2, 3, 4].choose(rng).expect("non-empty");
        let k = rng.gen_range(1..=2);
        for u in split(rng, den, k) {
            if u > 0 {
                terms.push(format!("{i} -> {} tau {} w {}", rng.gen_range(1..=n_out), rng.gen_range(0..2), weight(u, den)));
            }
        }
    }
    format!("atomic {}", terms.join(" + "))
}

/// A closed circuit named `main` on factors of dimension at most `max_dim`,
/// followed by `eval main`.
pub fn random_closed_circuit(rng: &mut impl Rng, max_dim: usize) -> String {
    let max_dim = max_dim.clamp(2, 3);
    let mut b = Builder { lines: Vec::new(), systems: BTreeSet::new(), fresh: 0 };
    let mut wires: Vec<usize> = (0..rng.gen_range(1..=2)).map(|_| rng.gen_range(2..=max_dim)).collect();
    let mut stages: Vec<Vec<String>> = Vec::new();

    // Preparation: a joint state on the first two wires or one per wire.
    let mut prep = Vec::new();
    let mut k = 0;
    while k < wires.len() {
        let joint = k + 1 < wires.len() && rng.gen_bool(0.5);
        let dims = if joint { wires[k..k + 2].to_vec() } else { vec![wires[k]] };
        let sys = b.system(&dims);
        let name = b.name("r");
        let body = state_body(rng, bct_dim(&dims));
        b.lines.push(format!("state {name} : {sys} = {body}"));
        prep.push(name);
        k += dims.len();
    }
    stages.push(prep);

    for _ in 0..rng.gen_range(1..=3) {
        let mut row = Vec::new();
        if wires.len() == 2 && rng.gen_bool(0.25) {
            let (x, y) = (b.system(&[wires[0]]), b.system(&[wires[1]]));
            let (xy, yx) = (b.system(&wires), b.system(&[wires[1], wires[0]]));
            let name = b.name("g");
            b.lines.push(format!("gate {name} : {xy} -> {yx} = swap {x} {y}"));
            wires.swap(0, 1);
            stages.push(vec![name]);
            continue;
        }
        let mut next = Vec::new();
        let mut k = 0;
        while k < wires.len() {
            let joint = k + 1 < wires.len() && rng.gen_bool(0.3);
            let dims = if joint { wires[k..k + 2].to_vec() } else { vec![wires[k]] };
            let sys = b.system(&dims);
            if !joint && rng.gen_bool(0.3) {
                row.push(sys);
                next.push(wires[k]);
            } else {
                let out: Vec<usize> = if joint { dims.clone() } else { vec![rng.gen_range(2..=max_dim)] };
                let out_sys = b.system(&out);
                let name = b.name("g");
                let body = gate_body(rng, bct_dim(&dims), bct_dim(&out));
                b.lines.push(format!("gate {name} : {sys} -> {out_sys} = {body}"));
                row.push(name);
                next.extend(out);
            }
            k += dims.len();
        }
        wires = next;
        stages.push(row);
    }

    let mut meas = Vec::new();
    let mut k = 0;
    while k < wires.len() {
        let joint = k + 1 < wires.len() && rng.gen_bool(0.5);
        let dims = if joint { wires[k..k + 2].to_vec() } else { vec![wires[k]] };
        let sys = b.system(&dims);
        let name = b.name("e");
        let body = effect_body(rng, bct_dim(&dims));
        b.lines.push(format!("effect {name} : {sys} = {body}"));
        meas.push(name);
        k += dims.len();
    }
    stages.push(meas);

    let mut text = String::new();
    for l in &b.lines {
        let _ = writeln!(text, "{l}");
    }
    let stages: Vec<String> = stages.iter().map(|r| r.join(" | ")).collect();
    let _ = writeln!(text, "circuit main = {}", stages.join(" ; "));
    let _ = writeln!(text, "eval main");
    text
}

/// `count` circuits from independent streams of `seed`.
pub fn random_corpus(seed: u64, count: usize, max_dim: usize) -> Vec<String> {
    (0..count).map(|k| random_closed_circuit(&mut trial_rng(seed, k as u64), max_dim)).collect()
}
