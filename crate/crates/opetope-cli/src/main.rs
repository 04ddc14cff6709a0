use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use opetope::calculus::{fill, glue};
use opetope::enumerate::{enumerate, MAX_DOTS_VAR};
use opetope::io::{parse, serialize, to_dot, Document};
use opetope::opetope::Opetope;

#[derive(Parser)]
#[command(name = "opetope", version, about = "Faces, gluing and enumeration of opetopes stored as XML trees")]
struct Cli {
    /// Write results into this directory instead of standard output
    #[arg(long, global = true, value_name = "DIR")]
    out: Option<PathBuf>,
    /// Print nothing on success
    #[arg(long, global = true)]
    quiet: bool,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Check that a file describes an opetope
    Validate { file: PathBuf },
    /// Print the target facet
    Target { file: PathBuf },
    /// Write the target and every source next to FILE (or into --out)
    Faces { file: PathBuf },
    /// Print the source facet at sphere NAME
    Source { file: PathBuf, name: String },
    /// Glue TOP onto BOTTOM along the source facet LOCUS
    Glue { bottom: PathBuf, locus: String, top: PathBuf },
    /// The filler whose sources are BOTTOM and TOP and whose target is their gluing
    Fill { bottom: PathBuf, locus: String, top: PathBuf },
    /// Print the suspension
    Suspend { file: PathBuf },
    /// All DIM-opetopes whose nestings have at most BOUND dots at every level
    Enumerate { dim: usize, bound: usize },
    /// DOT graphs of the constellations
    Render {
        file: PathBuf,
        #[arg(long, value_name = "K")]
        level: Option<usize>,
    },
}

/// A failure with its exit status.
struct Fail(u8, String);

impl Fail {
    fn domain(e: impl ToString) -> Fail {
        Fail(1, e.to_string())
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Fail(code, msg)) => {
            eprintln!("opetope: {}", msg.lines().next().unwrap_or(""));
            ExitCode::from(code)
        }
    }
}

fn load(path: &Path) -> Result<Document, Fail> {
    let text = fs::read_to_string(path).map_err(|e| Fail(2, format!("{}: {e}", path.display())))?;
    parse(&text).map_err(|e| Fail(e.exit_code() as u8, format!("{}: {e}", path.display())))
}

/// File name without a trailing `.xml`.
fn stem(path: &Path) -> String {
    let p = if path.extension().is_some_and(|e| e == "xml") { path.with_extension("") } else { path.to_path_buf() };
    p.file_name().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| "opetope".into())
}

/// Write `text` as `name` into `--out`, or print it.
fn emit(cli: &Cli, name: &str, text: &str) -> Result<(), Fail> {
    match &cli.out {
        Some(dir) => {
            fs::create_dir_all(dir).map_err(|e| Fail(2, format!("{}: {e}", dir.display())))?;
            let p = dir.join(name);
            fs::write(&p, text).map_err(|e| Fail(2, format!("{}: {e}", p.display())))?;
            if !cli.quiet {
                println!("{}", p.display());
            }
        }
        None => print!("{text}"),
    }
    Ok(())
}

fn emit_doc(cli: &Cli, name: &str, x: &Opetope) -> Result<(), Fail> {
    emit(cli, &format!("{name}.xml"), &serialize(name, x))
}

fn run(cli: &Cli) -> Result<(), Fail> {
    match &cli.cmd {
        Cmd::Validate { file } => {
            let d = load(file)?;
            if !cli.quiet {
                println!("{}: valid {}-opetope with {} source(s)", file.display(), d.opetope.dim(), d.opetope.sources().len());
            }
        }
        Cmd::Target { file } => {
            let d = load(file)?;
            let t = d.opetope.target().map_err(Fail::domain)?;
            emit_doc(cli, &format!("{}.target", d.name), &t)?;
        }
        Cmd::Source { file, name } => {
            let d = load(file)?;
            let s = d.opetope.source(name).map_err(Fail::domain)?;
            emit_doc(cli, &format!("{}.src-{name}", d.name), &s)?;
        }
        Cmd::Faces { file } => {
            let d = load(file)?;
            let dir = match &cli.out {
                Some(dir) => dir.clone(),
                None => file.parent().map(Path::to_path_buf).unwrap_or_default(),
            };
            fs::create_dir_all(&dir).map_err(|e| Fail(2, format!("{}: {e}", dir.display())))?;
            let base = stem(file);
            let mut faces = vec![("target".to_string(), d.opetope.target().map_err(Fail::domain)?)];
            for (s, f) in d.opetope.sources() {
                faces.push((format!("src-{s}"), f));
            }
            for (suffix, f) in faces {
                let p = dir.join(format!("{base}.{suffix}.xml"));
                fs::write(&p, serialize(&format!("{}.{suffix}", d.name), &f)).map_err(|e| Fail(2, format!("{}: {e}", p.display())))?;
                if !cli.quiet {
                    println!("{}", p.display());
                }
            }
        }
        Cmd::Glue { bottom, locus, top } => {
            let (r, s) = (load(bottom)?, load(top)?);
            let g = glue(&r.opetope, locus, &s.opetope).map_err(Fail::domain)?;
            emit_doc(cli, &format!("{}.glue-{locus}", r.name), &g)?;
        }
        Cmd::Fill { bottom, locus, top } => {
            let (r, s) = (load(bottom)?, load(top)?);
            let f = fill(&r.opetope, locus, &s.opetope).map_err(Fail::domain)?;
            emit_doc(cli, &format!("{}.fill-{locus}", r.name), &f)?;
        }
        Cmd::Suspend { file } => {
            let d = load(file)?;
            emit_doc(cli, &format!("{}.susp", d.name), &d.opetope.suspend())?;
        }
        Cmd::Enumerate { dim, bound } => {
            if let Ok(v) = std::env::var(MAX_DOTS_VAR) {
                let cap: usize = v.trim().parse().map_err(|_| Fail(2, format!("{MAX_DOTS_VAR}={v} is not a number")))?;
                if *bound > cap {
                    return Err(Fail(2, format!("bound {bound} exceeds {MAX_DOTS_VAR}={cap}")));
                }
            }
            for (i, x) in enumerate(*dim, *bound).iter().enumerate() {
                emit_doc(cli, &format!("o{dim}-{i}"), x)?;
            }
        }
        Cmd::Render { file, level } => {
            let d = load(file)?;
            if let Some(k) = level {
                if *k > d.opetope.dim() {
                    return Err(Fail(2, format!("level {k} exceeds dimension {}", d.opetope.dim())));
                }
            }
            let name = match level {
                Some(k) => format!("{}.X{k}.dot", d.name),
                None => format!("{}.dot", d.name),
            };
            emit(cli, &name, &to_dot(&d.opetope, *level))?;
        }
    }
    Ok(())
}
