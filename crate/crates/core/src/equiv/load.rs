use claimcheck_datalog::Value;

use crate::equiv::model::{BinaryFun, ControlDep, Correspondence, Entry, EquivBundle, MapEnd, UnaryFun};
use crate::error::{LoadError, SchemaIssue};
use crate::facts::{read_facts, ArgReader, Loc, RawFact, Side, VarSite};

/// File name assumed when a fact omits it.
pub const DEFAULT_FILE: &str = "main.cpp";

/// Where a fact was written.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Section {
    Code(Side),
    Correspondence,
}

const PROGRAM_PREDICATES: [(&str, &str); 13] = [
    ("use", "3 or 2"),
    ("def", "3 or 2"),
    ("flow", "6 or 4"),
    ("controldep", "7 or 5"),
    ("defWithExpr", "3 or 2"),
    ("condWithExpr", "2 or 1"),
    ("unaryFun", "4 or 3"),
    ("binaryFun", "5 or 4"),
    ("entry", "3, 2 or 1"),
    ("exit", "2 or 1"),
    ("isConstantValue", "1"),
    ("watchVar", "3 or 2"),
    ("outputVar", "3 or 2"),
];

const MAP_PREDICATES: [(&str, &str); 3] = [
    ("varMap", "6, 5 or 4"),
    ("entryMap", "4 or 2"),
    ("exitMap", "4 or 2"),
];

pub(crate) fn is_map_predicate(p: &str) -> bool {
    MAP_PREDICATES.iter().any(|(n, _)| *n == p)
}

pub(crate) fn is_program_predicate(p: &str) -> bool {
    PROGRAM_PREDICATES.iter().any(|(n, _)| *n == p)
}

/// Recognizes a section marker line.
pub(crate) fn section_marker(line: &str) -> Option<Option<Section>> {
    let t = line.trim();
    let lower = t.to_ascii_lowercase();
    let compact: String = lower.chars().filter(|c| !c.is_whitespace()).collect();
    match compact.as_str() {
        "===code1===" | "<code1predicates>" => Some(Some(Section::Code(Side::Code1))),
        "===code2===" | "<code2predicates>" => Some(Some(Section::Code(Side::Code2))),
        "===correspondence===" | "<commonpredicates>" => Some(Some(Section::Correspondence)),
        "</code1predicates>" | "</code2predicates>" | "</commonpredicates>" => Some(None),
        _ => None,
    }
}

/// Splits a single-file bundle into per-section texts that keep the
/// original line numbering. Lines before any marker go to the first slot.
pub(crate) fn split_sections(text: &str) -> [String; 4] {
    let mut parts: [String; 4] = Default::default();
    let mut current: Option<Section> = None;
    for line in text.lines() {
        let slot_of = |s: Option<Section>| match s {
            None => 0,
            Some(Section::Code(Side::Code1)) => 1,
            Some(Section::Code(Side::Code2)) => 2,
            Some(Section::Correspondence) => 3,
        };
        let marker = section_marker(line);
        if let Some(next) = marker {
            current = next;
        }
        for (i, p) in parts.iter_mut().enumerate() {
            if marker.is_none() && i == slot_of(current) {
                p.push_str(line);
            }
            p.push('\n');
        }
    }
    parts
}

#[derive(Default)]
pub(crate) struct Loader {
    pub bundle: EquivBundle,
    pub issues: Vec<SchemaIssue>,
}

fn is_tag(v: &Value) -> Option<Side> {
    v.as_sym().and_then(Side::from_tag)
}

impl Loader {
    fn bad(&mut self, f: &RawFact, position: usize, message: impl Into<String>) {
        self.issues.push(SchemaIssue::BadArgument {
            predicate: f.predicate.clone(),
            position,
            message: message.into(),
            line: f.line,
        });
    }

    /// Adds one fact read inside `section` (or outside any section).
    pub fn add(&mut self, mut f: RawFact, section: Option<Section>) {
        if f.predicate == "outputVar" {
            f.predicate = "watchVar".into();
        }
        if is_map_predicate(&f.predicate) {
            f.args.retain(|v| is_tag(v).is_none());
            self.add_map(&f);
            return;
        }
        if !is_program_predicate(&f.predicate) {
            self.issues.push(SchemaIssue::UnknownPredicate {
                name: f.predicate.clone(),
                line: f.line,
            });
            return;
        }
        let tag = match f.args.last().and_then(is_tag) {
            Some(t) => {
                f.args.pop();
                Some(t)
            }
            None => None,
        };
        let side = match (section, tag) {
            (Some(Section::Code(s)), Some(t)) if s != t => {
                let n = f.args.len() + 1;
                self.bad(&f, n, format!("tag \"{t}\" inside the {s} section"));
                return;
            }
            (Some(Section::Code(s)), _) => s,
            (_, Some(t)) => t,
            (_, None) => {
                let n = f.args.len() + 1;
                self.bad(&f, n, "program fact without a Code1/Code2 tag outside a program section");
                return;
            }
        };
        self.add_program(&f, side);
    }

    fn arity(&mut self, f: &RawFact, expected: &str) {
        self.issues.push(SchemaIssue::ArityMismatch {
            predicate: f.predicate.clone(),
            expected: expected.to_string(),
            found: f.args.len(),
            line: f.line,
        });
    }

    fn add_program(&mut self, f: &RawFact, side: Side) {
        let expected = PROGRAM_PREDICATES
            .iter()
            .find(|(n, _)| *n == f.predicate)
            .map(|(_, e)| *e)
            .unwrap();
        let n = f.args.len();
        let mut issues = std::mem::take(&mut self.issues);
        let mut r = ArgReader {
            fact: f,
            issues: &mut issues,
        };
        let site = |r: &mut ArgReader, at: usize, short: bool| {
            if short {
                let var = r.sym(at);
                VarSite::new(var, DEFAULT_FILE, r.line(at + 1))
            } else {
                let var = r.sym(at);
                let file = r.path(at + 1);
                VarSite::new(var, file, r.line(at + 2))
            }
        };
        let loc = |r: &mut ArgReader, at: usize, short: bool| {
            if short {
                Loc::new(DEFAULT_FILE, r.line(at))
            } else {
                let file = r.path(at);
                Loc::new(file, r.line(at + 1))
            }
        };
        let p = match side {
            Side::Code1 => &mut self.bundle.code1,
            Side::Code2 => &mut self.bundle.code2,
        };
        let mut ok = true;
        match (f.predicate.as_str(), n) {
            ("use", 3 | 2) => {
                p.uses.insert(site(&mut r, 0, n == 2));
            }
            ("def", 3 | 2) => {
                p.defs.insert(site(&mut r, 0, n == 2));
            }
            ("defWithExpr", 3 | 2) => {
                p.def_with_expr.insert(site(&mut r, 0, n == 2));
            }
            ("watchVar", 3 | 2) => {
                p.watch_var.insert(site(&mut r, 0, n == 2));
            }
            ("flow", 6) => {
                let a = site(&mut r, 0, false);
                let b = site(&mut r, 3, false);
                p.flow.insert((a, b));
            }
            ("flow", 4) => {
                let a = site(&mut r, 0, true);
                let b = site(&mut r, 2, true);
                p.flow.insert((a, b));
            }
            ("controldep", 7) => {
                let at = site(&mut r, 0, false);
                let cond = r.sym(3);
                let branch = r.branch(4);
                let s = loc(&mut r, 5, false);
                p.controldep.insert(ControlDep {
                    at,
                    cond,
                    branch,
                    site: s,
                });
            }
            ("controldep", 5) => {
                let at = site(&mut r, 0, true);
                let cond = r.sym(2);
                let branch = r.branch(3);
                let s = loc(&mut r, 4, true);
                p.controldep.insert(ControlDep {
                    at,
                    cond,
                    branch,
                    site: s,
                });
            }
            ("condWithExpr", 2 | 1) => {
                p.cond_with_expr.insert(loc(&mut r, 0, n == 1));
            }
            ("unaryFun", 4 | 3) => {
                let op = r.sym(0);
                let arg = r.sym(1);
                let at = loc(&mut r, 2, n == 3);
                p.unary_fun.insert(UnaryFun { op, arg, at });
            }
            ("binaryFun", 5 | 4) => {
                let op = r.sym(0);
                let lhs = r.sym(1);
                let rhs = r.sym(2);
                let at = loc(&mut r, 3, n == 4);
                p.binary_fun.insert(BinaryFun { op, lhs, rhs, at });
            }
            ("entry", 3) => {
                let fun = r.sym(0);
                let at = loc(&mut r, 1, false);
                p.entry.insert(Entry { fun, at });
            }
            ("entry", 2) => {
                let fun = r.sym(0);
                let at = loc(&mut r, 1, true);
                p.entry.insert(Entry { fun, at });
            }
            ("entry", 1) => {
                let at = loc(&mut r, 0, true);
                p.entry.insert(Entry {
                    fun: "main".into(),
                    at,
                });
            }
            ("exit", 2 | 1) => {
                p.exit.insert(loc(&mut r, 0, n == 1));
            }
            ("isConstantValue", 1) => {
                p.is_constant.insert(r.sym(0));
            }
            _ => ok = false,
        }
        self.issues = issues;
        if !ok {
            self.arity(f, expected);
        }
    }

    fn add_map(&mut self, f: &RawFact) {
        let n = f.args.len();
        let mut issues = std::mem::take(&mut self.issues);
        let mut r = ArgReader {
            fact: f,
            issues: &mut issues,
        };
        let c = &mut self.bundle.correspondence;
        let mut ok = true;
        match (f.predicate.as_str(), n) {
            ("varMap", 6) => {
                let (x, f1, l1) = (r.sym(0), r.path(1), r.line(2));
                let (y, f2, l2) = (r.sym(3), r.path(4), r.line(5));
                c.var_map.insert((VarSite::new(x, f1, l1), VarSite::new(y, f2, l2)));
            }
            ("varMap", 5) => {
                let (x, f1, l1) = (r.sym(0), r.path(1), r.line(2));
                let (y, l2) = (r.sym(3), r.line(4));
                c.var_map
                    .insert((VarSite::new(x, f1.clone(), l1), VarSite::new(y, f1, l2)));
            }
            ("varMap", 4) => {
                let (x, l1, y, l2) = (r.sym(0), r.line(1), r.sym(2), r.line(3));
                c.var_map.insert((
                    VarSite::new(x, DEFAULT_FILE, l1),
                    VarSite::new(y, DEFAULT_FILE, l2),
                ));
            }
            ("entryMap" | "exitMap", 4 | 2) => {
                let (a, b) = if n == 4 {
                    let a = MapEnd {
                        name: r.path(0),
                        line: r.line(1),
                    };
                    let b = MapEnd {
                        name: r.path(2),
                        line: r.line(3),
                    };
                    (a, b)
                } else {
                    let end = |line| MapEnd {
                        name: DEFAULT_FILE.into(),
                        line,
                    };
                    (end(r.line(0)), end(r.line(1)))
                };
                if f.predicate == "entryMap" {
                    c.entry_map.insert((a, b));
                } else {
                    c.exit_map.insert((a, b));
                }
            }
            _ => ok = false,
        }
        self.issues = issues;
        if !ok {
            let expected = MAP_PREDICATES
                .iter()
                .find(|(p, _)| *p == f.predicate)
                .map(|(_, e)| *e)
                .unwrap();
            self.arity(f, expected);
        }
    }

    pub fn read(&mut self, text: &str, section: Option<Section>) -> Result<(), LoadError> {
        for f in read_facts(text)? {
            self.add(f, section);
        }
        Ok(())
    }

    pub fn finish(self) -> Result<EquivBundle, LoadError> {
        if !self.issues.is_empty() {
            return Err(LoadError::Schema(self.issues));
        }
        check_map_references(&self.bundle)?;
        Ok(self.bundle)
    }
}

fn check_map_references(b: &EquivBundle) -> Result<(), LoadError> {
    let c: &Correspondence = &b.correspondence;
    for (a, z) in &c.entry_map {
        for (side, end) in [(Side::Code1, a), (Side::Code2, z)] {
            let p = b.side(side);
            if !p.entry.is_empty() && !p.entry.iter().any(|e| end.matches_entry(e)) {
                return Err(LoadError::DanglingMapReference {
                    predicate: format!("entryMap(\"{}\", {}, \"{}\", {})", a.name, a.line, z.name, z.line),
                    side,
                    line: end.line as usize,
                });
            }
        }
    }
    for (a, z) in &c.exit_map {
        for (side, end) in [(Side::Code1, a), (Side::Code2, z)] {
            let p = b.side(side);
            if !p.exit.is_empty() && !p.exit.iter().any(|e| end.matches_exit(e)) {
                return Err(LoadError::DanglingMapReference {
                    predicate: format!("exitMap(\"{}\", {}, \"{}\", {})", a.name, a.line, z.name, z.line),
                    side,
                    line: end.line as usize,
                });
            }
        }
    }
    Ok(())
}

/// Loads a bundle from its three parts. Program facts may omit the file
/// name (`"main.cpp"` is assumed) and may carry a trailing Code1/Code2
/// tag that must agree with the part they appear in.
pub fn load_equiv_bundle(code1: &str, code2: &str, correspondence: &str) -> Result<EquivBundle, LoadError> {
    let mut l = Loader::default();
    l.read(code1, Some(Section::Code(Side::Code1)))?;
    l.read(code2, Some(Section::Code(Side::Code2)))?;
    l.read(correspondence, Some(Section::Correspondence))?;
    l.finish()
}

/// Loads a single-file bundle framed by `=== code1 ===`, `=== code2 ===`
/// and `=== correspondence ===` lines (or the `<Code1 Predicates>` style
/// blocks). Facts outside any section are routed by their tag.
pub fn load_equiv_text(text: &str) -> Result<EquivBundle, LoadError> {
    let [loose, c1, c2, corr] = split_sections(text);
    let mut l = Loader::default();
    l.read(&loose, None)?;
    l.read(&c1, Some(Section::Code(Side::Code1)))?;
    l.read(&c2, Some(Section::Code(Side::Code2)))?;
    l.read(&corr, Some(Section::Correspondence))?;
    l.finish()
}
