mod corpus;
mod report;

use std::collections::BTreeSet;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand, ValueEnum};
use claimcheck_core::equiv::{equiv_rules, build_pairing, lint_equiv, load_equiv_bundle, load_equiv_text, verify_equiv, EquivBundle};
use claimcheck_core::formalize::{http_source, mock_source, run_loop, FactSource, HttpConfig, LoopConfig, Task};
use claimcheck_core::msan::{lint_msan, load_msan_facts, msan_program, verify_msan};
use claimcheck_core::toy::{extract_equiv_facts, extract_msan_facts, parse_toy, ToyProgram};
use claimcheck_datalog::export_external;

use report::{to_value, Failure, Report};

#[derive(Parser)]
#[command(name = "claimcheck", version, about = "Check formalized claims about code with Datalog")]
struct Cli {
    /// Indent the JSON report.
    #[arg(long, global = true)]
    pretty: bool,

    /// Compact JSON report (the default).
    #[arg(long, global = true, conflicts_with = "pretty")]
    json: bool,

    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum TaskArg {
    Msan,
    Equiv,
}

impl TaskArg {
    fn task(self) -> Task {
        match self {
            TaskArg::Msan => Task::Msan,
            TaskArg::Equiv => Task::Equiv,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum SourceArg {
    Mock,
    Http,
}

#[derive(Subcommand)]
enum Command {
    /// Verify an MSAN fact file.
    VerifyMsan { facts: PathBuf },

    /// Verify an equivalence bundle, or three files: code1, code2, correspondence.
    VerifyEquiv {
        #[arg(required = true, num_args = 1..=3)]
        paths: Vec<PathBuf>,
    },

    /// Extract facts from toy programs.
    Extract {
        #[arg(long, value_enum)]
        task: TaskArg,
        /// Variables treated as uninitialized (msan).
        #[arg(long, value_delimiter = ',')]
        uninit: Vec<String>,
        /// Renamed variable pair `old=new` (equiv).
        #[arg(long = "var-map")]
        var_map: Vec<String>,
        /// Write to this file instead of stdout.
        #[arg(short, long)]
        out: Option<PathBuf>,
        /// One program for msan; one (self-pair) or two for equiv.
        #[arg(required = true, num_args = 1..=2)]
        programs: Vec<PathBuf>,
    },

    /// Run the iterative formalizer loop and verify the collected facts.
    Formalize {
        snippets: PathBuf,
        #[arg(long, value_enum)]
        task: TaskArg,
        #[arg(long, value_enum, default_value = "mock")]
        source: SourceArg,
        /// Ground-truth facts the mock source answers from.
        #[arg(long)]
        truth: Option<PathBuf>,
        #[arg(long, default_value_t = 0.0)]
        withhold: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 5)]
        iters: usize,
        /// Endpoint for the http source; defaults to the environment.
        #[arg(long)]
        url: Option<String>,
        /// Leave wall-clock times out of the log.
        #[arg(long)]
        no_timing: bool,
        /// Write the collected facts here.
        #[arg(short, long)]
        out: Option<PathBuf>,
        /// Write the iteration log here.
        #[arg(long)]
        log: Option<PathBuf>,
    },

    /// Run a manifest of fixtures against their expected verdicts.
    Corpus { manifest: PathBuf },

    /// Lint a fact file or bundle.
    Lint {
        #[arg(long, value_enum)]
        task: TaskArg,
        path: PathBuf,
    },

    /// Write the rules and facts of a verification as Souffle-style files.
    Export {
        #[arg(long, value_enum)]
        task: TaskArg,
        #[arg(long)]
        dir: PathBuf,
        #[arg(required = true, num_args = 1..=3)]
        paths: Vec<PathBuf>,
    },
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let report = match cli.command {
        Command::VerifyMsan { facts } => cmd_verify_msan(&facts),
        Command::VerifyEquiv { paths } => cmd_verify_equiv(&paths),
        Command::Extract {
            task,
            uninit,
            var_map,
            out,
            programs,
        } => match cmd_extract(task, &uninit, &var_map, out.as_deref(), &programs) {
            Ok(text) => {
                if out.is_none() {
                    print!("{text}");
                }
                return ExitCode::SUCCESS;
            }
            Err(f) => Report::new("extract").fail(f),
        },
        Command::Formalize {
            snippets,
            task,
            source,
            truth,
            withhold,
            seed,
            iters,
            url,
            no_timing,
            out,
            log,
        } => {
            let opts = FormalizeOpts {
                task: task.task(),
                source,
                truth,
                withhold,
                seed,
                iters,
                url,
                timing: !no_timing,
                out,
                log,
            };
            cmd_formalize(&snippets, &opts)
        }
        Command::Corpus { manifest } => corpus::run(&manifest),
        Command::Lint { task, path } => cmd_lint(task, &path),
        Command::Export { task, dir, paths } => match cmd_export(task, &dir, &paths) {
            Ok(()) => return ExitCode::SUCCESS,
            Err(f) => Report::new("export").fail(f),
        },
    };
    emit(&report, cli.pretty)
}

fn emit(report: &Report, pretty: bool) -> ExitCode {
    let text = if pretty {
        serde_json::to_string_pretty(report)
    } else {
        serde_json::to_string(report)
    }
    .expect("reports serialize");
    println!("{text}");
    if let Some(e) = &report.error {
        eprintln!("error: {}", e.message);
    }
    ExitCode::from(report.exit_code() as u8)
}

pub(crate) fn cmd_verify_msan(path: &Path) -> Report {
    let mut r = Report::new("msan");
    let text = match r.read(path) {
        Ok(t) => t,
        Err(f) => return r.fail(f),
    };
    let fs = match load_msan_facts(&text) {
        Ok(fs) => fs,
        Err(e) => return r.fail(e.into()),
    };
    let start = Instant::now();
    let v = verify_msan(&fs);
    r.timing_ms = Some(start.elapsed().as_secs_f64() * 1e3);
    r.verdict = Some(v.outcome.to_string());
    r.witness = to_value(&v.witness);
    r.lint = v.lint;
    r
}

fn read_bundle(r: &mut Report, paths: &[PathBuf]) -> Result<EquivBundle, Failure> {
    match paths {
        [one] => Ok(load_equiv_text(&r.read(one)?)?),
        [c1, c2, corr] => {
            let (a, b, c) = (r.read(c1)?, r.read(c2)?, r.read(corr)?);
            Ok(load_equiv_bundle(&a, &b, &c)?)
        }
        _ => Err(Failure::usage("expected a bundle or code1 code2 correspondence")),
    }
}

pub(crate) fn cmd_verify_equiv(paths: &[PathBuf]) -> Report {
    let mut r = Report::new("equiv");
    let b = match read_bundle(&mut r, paths) {
        Ok(b) => b,
        Err(f) => return r.fail(f),
    };
    let start = Instant::now();
    let v = verify_equiv(&b);
    r.timing_ms = Some(start.elapsed().as_secs_f64() * 1e3);
    r.verdict = Some(v.outcome.to_string());
    r.witness = to_value(&v.witness);
    r.details = serde_json::json!({ "mismatch_count": v.mismatch_count, "note": v.note });
    r.lint = v.lint;
    r
}

fn read_toy(path: &Path) -> Result<ToyProgram, Failure> {
    let text = fs::read_to_string(path).map_err(|e| Failure::io(path, e))?;
    Ok(parse_toy(&text)?)
}

fn cmd_extract(
    task: TaskArg,
    uninit: &[String],
    var_map: &[String],
    out: Option<&Path>,
    programs: &[PathBuf],
) -> Result<String, Failure> {
    let progs = programs.iter().map(|p| read_toy(p)).collect::<Result<Vec<_>, _>>()?;
    let text = match task {
        TaskArg::Msan => {
            let [p] = progs.as_slice() else {
                return Err(Failure::usage("msan extraction takes one program"));
            };
            let marked: BTreeSet<String> = uninit.iter().cloned().collect();
            let known = p.variables();
            if let Some(v) = marked.iter().find(|v| !known.contains(*v)) {
                return Err(Failure::usage(format!("`{v}` is not a variable of the program")));
            }
            extract_msan_facts(p, &marked).to_string()
        }
        TaskArg::Equiv => {
            let pairs = var_map
                .iter()
                .map(|s| {
                    s.split_once('=')
                        .map(|(a, b)| (a.trim().to_string(), b.trim().to_string()))
                        .ok_or_else(|| Failure::usage(format!("--var-map `{s}` is not old=new")))
                })
                .collect::<Result<Vec<_>, _>>()?;
            let (p1, p2) = match progs.as_slice() {
                [p] => (p, p),
                [p, q] => (p, q),
                _ => unreachable!("clap limits the count"),
            };
            extract_equiv_facts(p1, p2, &pairs).to_string()
        }
    };
    if let Some(out) = out {
        fs::write(out, &text).map_err(|e| Failure::io(out, e))?;
    }
    Ok(text)
}

struct FormalizeOpts {
    task: Task,
    source: SourceArg,
    truth: Option<PathBuf>,
    withhold: f64,
    seed: u64,
    iters: usize,
    url: Option<String>,
    timing: bool,
    out: Option<PathBuf>,
    log: Option<PathBuf>,
}

fn cmd_formalize(snippets: &Path, o: &FormalizeOpts) -> Report {
    let mut r = Report::new(o.task.name());
    match formalize(&mut r, snippets, o) {
        Ok(()) => r,
        Err(f) => r.fail(f),
    }
}

fn formalize(r: &mut Report, snippets: &Path, o: &FormalizeOpts) -> Result<(), Failure> {
    let text = r.read(snippets)?;
    let source: Box<dyn FactSource> = match o.source {
        SourceArg::Mock => {
            let Some(truth) = &o.truth else {
                return Err(Failure::usage("--source mock needs --truth"));
            };
            if !(0.0..1.0).contains(&o.withhold) {
                return Err(Failure::usage("--withhold must be in [0, 1)"));
            }
            Box::new(mock_source(&r.read(truth)?, o.withhold, o.seed))
        }
        SourceArg::Http => {
            let cfg = match &o.url {
                Some(u) => HttpConfig::new(u.clone()),
                None => HttpConfig::from_env().map_err(|e| Failure::usage(e.to_string()))?,
            };
            Box::new(http_source(cfg).map_err(|e| Failure::usage(e.to_string()))?)
        }
    };
    if o.iters == 0 {
        return Err(Failure::usage("--iters must be at least 1"));
    }
    let cfg = LoopConfig {
        max_iters: o.iters,
        record_timing: o.timing,
    };
    let outcome = run_loop(source.as_ref(), o.task, &text, &cfg);
    let facts = outcome.facts.to_text();
    if let Some(out) = &o.out {
        fs::write(out, &facts).map_err(|e| Failure::io(out, e))?;
    }
    if let Some(log) = &o.log {
        let body = serde_json::to_string_pretty(&outcome.log).expect("logs serialize");
        fs::write(log, body).map_err(|e| Failure::io(log, e))?;
    }
    r.iterations = outcome.log.iterations;
    match o.task {
        Task::Msan => {
            let v = verify_msan(&outcome.facts.to_msan()?);
            r.verdict = Some(v.outcome.to_string());
            r.witness = to_value(&v.witness);
            r.lint = v.lint;
        }
        Task::Equiv => {
            let v = verify_equiv(&outcome.facts.to_equiv()?);
            r.verdict = Some(v.outcome.to_string());
            r.witness = to_value(&v.witness);
            r.lint = v.lint;
        }
    }
    r.details = serde_json::json!({ "facts": outcome.facts.len() });
    Ok(())
}

fn cmd_lint(task: TaskArg, path: &Path) -> Report {
    let mut r = Report::new(task.task().name());
    let lint = match task {
        TaskArg::Msan => r
            .read(path)
            .and_then(|t| load_msan_facts(&t).map_err(Failure::from))
            .map(|fs| lint_msan(&fs)),
        TaskArg::Equiv => read_bundle(&mut r, &[path.to_path_buf()]).map(|b| lint_equiv(&b)),
    };
    match lint {
        Ok(l) => {
            r.verdict = Some(if l.is_clean() { "Clean" } else { "HasErrors" }.into());
            r.lint = l;
            r
        }
        Err(f) => r.fail(f),
    }
}

fn cmd_export(task: TaskArg, dir: &Path, paths: &[PathBuf]) -> Result<(), Failure> {
    let mut r = Report::new("export");
    let program = match task {
        TaskArg::Msan => {
            let [p] = paths else {
                return Err(Failure::usage("msan export takes one fact file"));
            };
            msan_program(&load_msan_facts(&r.read(p)?)?)
        }
        TaskArg::Equiv => {
            let b = read_bundle(&mut r, paths)?;
            let pairing = build_pairing(&b).map_err(|e| Failure {
                kind: "PairingError",
                line: None,
                message: e.to_string(),
            })?;
            equiv_rules(&b, &pairing)
        }
    }
    .map_err(|e| Failure {
        kind: "DatalogError",
        line: None,
        message: e.to_string(),
    })?;
    fs::create_dir_all(dir).map_err(|e| Failure::io(dir, e))?;
    export_external(&program, dir).map_err(|e| Failure {
        kind: "DatalogError",
        line: None,
        message: e.to_string(),
    })
}
