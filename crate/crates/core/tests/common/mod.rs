#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use claimcheck_core::msan::{MemoryError, MsanFactSet, VarSite};
use rand::seq::SliceRandom;
use rand::Rng;

const VARS: [&str; 4] = ["x", "y", "buf", "data_"];
const FILES: [&str; 3] = ["a.c", "lib/b.cc", "c.h"];

pub fn random_site(rng: &mut impl Rng) -> VarSite {
    VarSite::new(
        *VARS.choose(rng).unwrap(),
        *FILES.choose(rng).unwrap(),
        rng.gen_range(1..=12),
    )
}

/// A random trace: a few planted flow chains of length at most 6 plus
/// noise facts. About half the sets carry memoryError facts.
pub fn random_msan_set(rng: &mut impl Rng) -> MsanFactSet {
    let mut fs = MsanFactSet::default();
    for _ in 0..rng.gen_range(0..3) {
        let len = rng.gen_range(1..=6);
        let chain: Vec<VarSite> = (0..len).map(|_| random_site(rng)).collect();
        if rng.gen_bool(0.7) {
            fs.uninitialized.insert(chain[0].clone());
        }
        for w in chain.windows(2) {
            if rng.gen_bool(0.9) {
                fs.flow.insert((w[0].clone(), w[1].clone()));
            }
        }
        if rng.gen_bool(0.7) {
            fs.uses.insert(chain[len - 1].clone());
        }
    }
    for _ in 0..rng.gen_range(0..6) {
        match rng.gen_range(0..5) {
            0 => {
                fs.uses.insert(random_site(rng));
            }
            1 => {
                fs.uninitialized.insert(random_site(rng));
            }
            2 => {
                fs.flow.insert((random_site(rng), random_site(rng)));
            }
            3 => {
                fs.declared.insert(random_site(rng));
            }
            _ => {
                fs.allocated.insert(random_site(rng));
            }
        }
    }
    if rng.gen_bool(0.5) {
        let at = match fs.uses.iter().collect::<Vec<_>>().choose(rng) {
            Some(u) if rng.gen_bool(0.7) => (*u).clone(),
            _ => random_site(rng),
        };
        fs.memory_error.insert(MemoryError {
            var: at.var.clone(),
            kind: "uninitialized_data".into(),
            file: at.file,
            line: at.line,
        });
    }
    fs
}

/// Plain breadth-first reachability from every uninitialized site. Returns
/// the length in hops of the shortest qualifying chain.
pub fn bfs_oracle(fs: &MsanFactSet) -> Option<usize> {
    let mut succ: BTreeMap<&VarSite, Vec<&VarSite>> = BTreeMap::new();
    for (a, b) in &fs.flow {
        succ.entry(a).or_default().push(b);
    }
    let error_sites: BTreeSet<(&str, u32)> =
        fs.memory_error.iter().map(|e| (e.file.as_str(), e.line)).collect();
    let ok = |s: &VarSite| {
        fs.uses.contains(s) && (error_sites.is_empty() || error_sites.contains(&(s.file.as_str(), s.line)))
    };
    let mut dist: BTreeMap<&VarSite, usize> = BTreeMap::new();
    let mut queue = VecDeque::new();
    for s in &fs.uninitialized {
        dist.insert(s, 0);
        queue.push_back(s);
    }
    let mut best = None;
    while let Some(s) = queue.pop_front() {
        let d = dist[s];
        if ok(s) {
            best = Some(best.map_or(d, |b: usize| b.min(d)));
        }
        for &t in succ.get(s).into_iter().flatten() {
            if !dist.contains_key(t) {
                dist.insert(t, d + 1);
                queue.push_back(t);
            }
        }
    }
    best
}
