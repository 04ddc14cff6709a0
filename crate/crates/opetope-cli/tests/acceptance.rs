//! One pass/fail line per acceptance criterion. Time limits are wall clock
//! and include process start-up where a criterion drives the binary.

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};
use std::process::{Command, ExitCode};
use std::time::{Duration, Instant};

use opetope::calculus::{fill_named, glue};
use opetope::checks::{facet_parity, is_rigid, sphere_op_is_sound, sphere_ops, suspension_commutes, suspension_commutes_with_gluing};
use opetope::enumerate::{enumerate, planar_code, tower};
use opetope::fixtures;
use opetope::io::{parse, serialize};
use opetope::opetope::Opetope;
use opetope::polyfun::{cross_check_sources_targets, slice_twice_check, FreeMonoid, IdentityMonad};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const FACES_LIMIT: Duration = Duration::from_secs(1);
const GLUE_LIMIT: Duration = Duration::from_secs(1);
const COUNT_LIMIT: Duration = Duration::from_secs(10);
const SLICE_LIMIT: Duration = Duration::from_secs(60);
const TOWER_LIMIT: Duration = Duration::from_secs(120);
const PROPERTY_LIMIT: Duration = Duration::from_secs(120);
const FORMAT_LIMIT: Duration = Duration::from_secs(10);

const RANDOM_OPS: usize = 1000;
const SEED: u64 = 20_261_017;

fn fixture_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fixtures")
}

fn load(name: &str) -> Result<Opetope, String> {
    let p = fixture_dir().join(name);
    let text = std::fs::read_to_string(&p).map_err(|e| format!("{}: {e}", p.display()))?;
    Ok(parse(&text).map_err(|e| format!("{name}: {e}"))?.opetope)
}

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

fn cli(args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_opetope")).args(args).env_remove("OPETOPE_MAX_DOTS").output().expect("binary runs")
}

/// Canonical text of an opetope, so that two encodings compare as strings.
fn canon(x: &Opetope) -> String {
    serialize("c", &x.canonical())
}

fn faces_of_x() -> Result<String, String> {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let x_path = fixture_dir().join("X.xml");
    let o = cli(&["faces", x_path.to_str().unwrap(), "--out", dir.path().to_str().unwrap(), "--quiet"]);
    ensure(o.status.success(), || String::from_utf8_lossy(&o.stderr).into_owned())?;
    let x = load("X.xml")?;
    let read = |f: &str| -> Result<Opetope, String> {
        let text = std::fs::read_to_string(dir.path().join(f)).map_err(|e| format!("{f}: {e}"))?;
        Ok(parse(&text).map_err(|e| format!("{f}: {e}"))?.opetope)
    };
    let target = read("X.target.xml")?;
    ensure(canon(&target) == canon(&Opetope::new(x.complex().truncate(4)).unwrap()), || "target is not X truncated to level 4".into())?;
    for s in ["13", "14", "15", "16"] {
        let got = read(&format!("X.src-{s}.xml"))?;
        let want = load(&format!("S{s}.xml"))?;
        ensure(canon(&got) == canon(&want), || format!("source {s} differs from S{s}.xml"))?;
    }
    let written = std::fs::read_dir(dir.path()).map_err(|e| e.to_string())?.count();
    ensure(written == 5, || format!("{written} files written"))?;
    Ok("target and sources 13..16 match".into())
}

fn gluing() -> Result<String, String> {
    let (r, s) = (load("R.xml")?, load("S.xml")?);
    let t = glue(&r, "f", &s).map_err(|e| e.to_string())?;
    let want = fixtures::glued_composition_tree();
    ensure(t.composition_tree().canonical_code() == want.canonical_code(), || format!("ct(T) is {}", t.composition_tree()))?;
    let h = fill_named(&r, "f", &s, "R", "S").map_err(|e| e.to_string())?;
    let top = h.composition_tree();
    ensure(top.dot_count() == 2, || format!("filler has {} top spheres", top.dot_count()))?;
    let names: BTreeSet<String> = h.sources().into_iter().map(|(n, _)| n).collect();
    ensure(names == BTreeSet::from(["R".to_string(), "S".to_string()]), || format!("filler sources {names:?}"))?;
    ensure(h.source("R").unwrap().equals(&r) && h.source("S").unwrap().equals(&s), || "filler sources are not R and S".into())?;
    ensure(h.target().map_err(|e| e.to_string())?.equals(&t), || "filler target is not the gluing".into())?;
    Ok("ct(T) reproduced, filler has sources {R, S} and target T".into())
}

/// Planar trees with at most `bound` dots, leaves and inputs per dot, by
/// brute force over words in `(`, `)`, `l`.
fn planar_words(bound: usize) -> BTreeSet<String> {
    fn tree(w: &[u8], i: usize, bound: usize) -> Option<usize> {
        match w.get(i)? {
            b'l' => Some(i + 1),
            b'(' => {
                let (mut j, mut kids) = (i + 1, 0);
                while w.get(j)? != &b')' {
                    j = tree(w, j, bound)?;
                    kids += 1;
                }
                (kids <= bound).then_some(j + 1)
            }
            _ => None,
        }
    }
    fn go(word: &mut Vec<u8>, bound: usize, out: &mut BTreeSet<String>) {
        let count = |c| word.iter().filter(|&&x| x == c).count();
        if count(b'(') > bound || count(b'l') > bound {
            return;
        }
        if tree(word, 0, bound) == Some(word.len()) {
            out.insert(String::from_utf8(word.clone()).unwrap());
        }
        if word.len() == 3 * bound {
            return;
        }
        for c in *b"()l" {
            word.push(c);
            go(word, bound, out);
            word.pop();
        }
    }
    let mut out = BTreeSet::new();
    go(&mut Vec::new(), bound, &mut out);
    out
}

fn counting() -> Result<String, String> {
    for n in [0, 1] {
        let c = enumerate(n, 4).len();
        ensure(c == 1, || format!("|O{n}| = {c}"))?;
    }
    for m in 0..=6 {
        let c = enumerate(2, m).len();
        ensure(c == m + 1, || format!("{c} 2-opetopes with at most {m} dots"))?;
    }
    let ops = enumerate(3, 4);
    let codes: BTreeSet<String> = ops.iter().filter_map(planar_code).collect();
    ensure(codes.len() == ops.len(), || "planar code is not injective".into())?;
    let oracle = planar_words(4);
    ensure(codes == oracle, || format!("{} 3-opetopes, {} planar trees", codes.len(), oracle.len()))?;
    Ok(format!("|O0| = |O1| = 1, 2-opetopes m+1 for m <= 6, {} 3-opetopes = planar trees", ops.len()))
}

fn slicing() -> Result<String, String> {
    let id = slice_twice_check(&IdentityMonad::default(), 4).map_err(|e| format!("Id: {e:?}"))?;
    let fm = slice_twice_check(&FreeMonoid::new(2), 4).map_err(|e| format!("free monoid: {e:?}"))?;
    Ok(format!("Id {} and free monoid (arity <= 2) {} constellations at 4 dots", id.constellations, fm.constellations))
}

fn tower_agreement() -> Result<String, String> {
    cross_check_sources_targets(4, 3).map_err(|e| format!("{e:?}"))?;
    Ok("Z^n and enumerate agree with sources and targets for n <= 4, bound 3".into())
}

fn properties() -> Result<String, String> {
    // (a) random sphere operations
    let pool: Vec<Opetope> = tower(5, 2).into_iter().flat_map(|l| l.into_values()).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let mut applied = 0;
    for _ in 0..RANDOM_OPS {
        let x = &pool[rng.gen_range(0..pool.len())];
        let i = rng.gen_range(0..=x.dim());
        let ops = sphere_ops(x.complex(), i);
        let op = &ops[rng.gen_range(0..ops.len())];
        applied += sphere_op_is_sound(x.complex(), i, op)? as usize;
    }
    // (b) facet parity
    let small = tower(4, 3);
    let mut checked = 0;
    for x in small.iter().flat_map(|l| l.values()) {
        facet_parity(x).map_err(|e| format!("parity: {e}"))?;
        checked += 1;
    }
    // (c) suspension
    let (r, f, s) = fixtures::gluing_pair();
    for name in ["X.xml", "R.xml", "S.xml", "Z.xml", "S13.xml", "S14.xml", "S15.xml", "S16.xml"] {
        suspension_commutes(&load(name)?).map_err(|e| format!("{name}: {e}"))?;
    }
    suspension_commutes_with_gluing(&r, f, &s)?;
    // (d) rigidity
    for x in pool.iter().chain(small.iter().flat_map(|l| l.values())) {
        ensure(is_rigid(x.complex()), || format!("nontrivial automorphism of\n{x}"))?;
    }
    ensure(!is_rigid(&fixtures::two_branch()), || "two-branch complex came out rigid".into())?;
    Ok(format!("{RANDOM_OPS} random ops sound ({} refused on outer spheres), parity on {checked} opetopes, suspension, rigidity on {}", RANDOM_OPS - applied, pool.len() + checked))
}

fn format() -> Result<String, String> {
    let mut files = 0;
    for e in std::fs::read_dir(fixture_dir()).map_err(|e| e.to_string())? {
        let p = e.map_err(|e| e.to_string())?.path();
        if p.extension().is_some_and(|e| e == "xml") {
            let text = std::fs::read_to_string(&p).map_err(|e| e.to_string())?;
            let d = parse(&text).map_err(|e| format!("{}: {e}", p.display()))?;
            ensure(serialize(&d.name, &d.opetope) == text, || format!("{} does not round-trip", p.display()))?;
            files += 1;
        }
    }
    let x = std::fs::read_to_string(fixture_dir().join("X.xml")).map_err(|e| e.to_string())?;
    let swap = |t: &str| t.replacen("<leaf name=\"3\"/>", "@", 1).replacen("<leaf name=\"4\"/>", "<leaf name=\"3\"/>", 1).replacen("@", "<leaf name=\"4\"/>", 1);
    let cases = [
        ("missing ref", x.replacen("<dot name=\"10\" ref=\"4\"/>", "<dot name=\"10\"/>", 1), "null-dot without ref"),
        ("broken bijection", x.replacen("<leaf name=\"7\"/>", "<leaf name=\"ghost\"/>", 1), "ghost"),
        ("kernel violation", swap(&x), "kernel rule violated"),
    ];
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    for (what, text, needle) in cases {
        ensure(text != x, || format!("{what}: corruption did not apply"))?;
        let p = dir.path().join("bad.xml");
        std::fs::write(&p, text).map_err(|e| e.to_string())?;
        let o = cli(&["validate", p.to_str().unwrap()]);
        let err = String::from_utf8_lossy(&o.stderr);
        ensure(!o.status.success() && err.lines().count() == 1 && err.contains(needle), || format!("{what}: exit {:?}, {err}", o.status.code()))?;
    }
    Ok(format!("{files} fixture files round-trip, 3 corruptions diagnosed"))
}

fn main() -> ExitCode {
    type Check = fn() -> Result<String, String>;
    let criteria: [(usize, Duration, Check); 7] = [
        (1, FACES_LIMIT, faces_of_x),
        (2, GLUE_LIMIT, gluing),
        (3, COUNT_LIMIT, counting),
        (4, SLICE_LIMIT, slicing),
        (5, TOWER_LIMIT, tower_agreement),
        (6, PROPERTY_LIMIT, properties),
        (7, FORMAT_LIMIT, format),
    ];
    let mut failed = 0;
    for (n, limit, check) in criteria {
        let start = Instant::now();
        let result = check();
        let took = start.elapsed();
        let verdict = match result {
            Ok(note) if took <= limit => format!("PASS ({:.2}s, limit {}s) {note}", took.as_secs_f64(), limit.as_secs()),
            Ok(note) => format!("FAIL ({:.2}s exceeds {}s) {note}", took.as_secs_f64(), limit.as_secs()),
            Err(e) => format!("FAIL ({:.2}s) {}", took.as_secs_f64(), e.lines().next().unwrap_or("")),
        };
        failed += verdict.starts_with("FAIL") as usize;
        println!("criterion {n}: {verdict}");
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
