use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::Serialize;

use crate::lint::LintReport;
use crate::msan::{lint_msan, MemoryError, MsanFactSet, VarSite};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum MsanOutcome {
    Verified,
    DontKnow,
}

impl fmt::Display for MsanOutcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            MsanOutcome::Verified => "Verified",
            MsanOutcome::DontKnow => "DontKnow",
        })
    }
}

/// A flow chain from an uninitialized site to a use. `chain[0]` carries
/// the uninitialized fact, consecutive entries are joined by flow facts,
/// and the last entry carries the uses fact.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct MsanWitness {
    pub chain: Vec<VarSite>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub memory_error: Option<MemoryError>,
}

impl MsanWitness {
    pub fn source(&self) -> &VarSite {
        &self.chain[0]
    }

    pub fn use_site(&self) -> &VarSite {
        self.chain.last().expect("witness chains are nonempty")
    }

    /// The facts the witness relies on, as fact text.
    pub fn facts(&self) -> Vec<String> {
        let s = self.source();
        let mut out = vec![format!("uninitialized(\"{}\", \"{}\", {})", s.var, s.file, s.line)];
        for w in self.chain.windows(2) {
            out.push(format!(
                "flow(\"{}\", \"{}\", {}, \"{}\", \"{}\", {})",
                w[0].var, w[0].file, w[0].line, w[1].var, w[1].file, w[1].line
            ));
        }
        let u = self.use_site();
        out.push(format!("uses(\"{}\", \"{}\", {})", u.var, u.file, u.line));
        if let Some(e) = &self.memory_error {
            out.push(format!(
                "memoryError(\"{}\", \"{}\", \"{}\", {})",
                e.var, e.kind, e.file, e.line
            ));
        }
        out
    }

    /// Checks the witness against `fs`: every hop is a fact and the
    /// endpoints satisfy the verification condition.
    pub fn replays(&self, fs: &MsanFactSet) -> bool {
        if self.chain.is_empty() || !fs.uninitialized.contains(self.source()) {
            return false;
        }
        if !fs.uses.contains(self.use_site()) {
            return false;
        }
        if !self
            .chain
            .windows(2)
            .all(|w| fs.flow.contains(&(w[0].clone(), w[1].clone())))
        {
            return false;
        }
        match &self.memory_error {
            Some(e) => {
                fs.memory_error.contains(e)
                    && e.file == self.use_site().file
                    && e.line == self.use_site().line
            }
            None => fs.memory_error.is_empty(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct MsanVerdict {
    pub outcome: MsanOutcome,
    pub witness: Option<MsanWitness>,
    pub lint: LintReport,
}

/// Decides whether some uninitialized site reaches a use through the
/// reflexive-transitive closure of flow. When the set names any
/// memoryError, the use must sit on one of those sites.
pub fn verify_msan(fs: &MsanFactSet) -> MsanVerdict {
    let lint = lint_msan(fs);
    let witness = shortest_chain(fs);
    MsanVerdict {
        outcome: if witness.is_some() {
            MsanOutcome::Verified
        } else {
            MsanOutcome::DontKnow
        },
        witness,
        lint,
    }
}

fn error_at<'a>(fs: &'a MsanFactSet, site: &VarSite) -> Option<&'a MemoryError> {
    fs.memory_error
        .iter()
        .find(|e| e.file == site.file && e.line == site.line)
}

/// Layered breadth-first search keeping, per node, the lexicographically
/// least path among the shortest ones.
fn shortest_chain(fs: &MsanFactSet) -> Option<MsanWitness> {
    let mut succ: BTreeMap<&VarSite, Vec<&VarSite>> = BTreeMap::new();
    for (a, b) in &fs.flow {
        succ.entry(a).or_default().push(b);
    }
    let qualifies = |s: &VarSite| {
        fs.uses.contains(s) && (fs.memory_error.is_empty() || error_at(fs, s).is_some())
    };
    let mut seen: BTreeSet<&VarSite> = BTreeSet::new();
    let mut layer: BTreeMap<&VarSite, Vec<&VarSite>> = BTreeMap::new();
    for s in &fs.uninitialized {
        seen.insert(s);
        layer.insert(s, vec![s]);
    }
    while !layer.is_empty() {
        let best = layer
            .iter()
            .filter(|(node, _)| qualifies(node))
            .map(|(_, path)| path)
            .min();
        if let Some(path) = best {
            let chain: Vec<VarSite> = path.iter().map(|s| (*s).clone()).collect();
            let memory_error = error_at(fs, chain.last().unwrap()).cloned();
            return Some(MsanWitness {
                chain,
                memory_error,
            });
        }
        let mut next: BTreeMap<&VarSite, Vec<&VarSite>> = BTreeMap::new();
        for (node, path) in &layer {
            for &to in succ.get(node).map(Vec::as_slice).unwrap_or_default() {
                if seen.contains(to) {
                    continue;
                }
                let mut p = path.clone();
                p.push(to);
                match next.get(to) {
                    Some(q) if *q <= p => {}
                    _ => {
                        next.insert(to, p);
                    }
                }
            }
        }
        seen.extend(next.keys().copied());
        layer = next;
    }
    None
}
