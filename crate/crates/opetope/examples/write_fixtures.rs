//! Regenerate the XML fixtures: `cargo run --example write_fixtures -- DIR`.

use std::path::PathBuf;

use opetope::fixtures;
use opetope::io::serialize;

fn main() -> std::io::Result<()> {
    let dir = PathBuf::from(std::env::args().nth(1).unwrap_or_else(|| "fixtures".into()));
    std::fs::create_dir_all(&dir)?;
    let (r, _, s) = fixtures::gluing_pair();
    let mut docs = vec![("X", fixtures::five_cell()), ("R", r), ("S", s), ("Z", fixtures::z_example())];
    for (name, x) in fixtures::five_cell_sources() {
        docs.push((["S", name].concat().leak(), x));
    }
    for (name, x) in docs {
        let p = dir.join(format!("{name}.xml"));
        std::fs::write(&p, serialize(name, &x))?;
        println!("{}", p.display());
    }
    Ok(())
}
