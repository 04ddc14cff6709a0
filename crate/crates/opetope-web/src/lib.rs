//! WebAssembly bindings for the demo page in `www/`. Each export takes and
//! returns XML or DOT text; the plain functions underneath are what the
//! tests call, since `JsError` needs a JavaScript host.

use opetope::fixtures;
use opetope::io::{parse, serialize, to_dot};
use opetope::opetope::Opetope;
use wasm_bindgen::prelude::*;

/// Names accepted by [`example`].
pub const EXAMPLES: [&str; 4] = ["X", "R", "S", "Z"];

pub fn example_xml(name: &str) -> Option<String> {
    let (r, _, s) = fixtures::gluing_pair();
    let x = match name {
        "X" => fixtures::five_cell(),
        "R" => r,
        "S" => s,
        "Z" => fixtures::z_example(),
        _ => return None,
    };
    Some(serialize(name, &x))
}

pub fn describe_xml(xml: &str) -> Result<String, String> {
    let d = parse(xml).map_err(|e| e.to_string())?;
    let x = &d.opetope;
    let spheres: Vec<String> = x.sources().into_iter().map(|(s, _)| s).collect();
    Ok(format!("{}: {}-opetope, sources at {}", d.name, x.dim(), if spheres.is_empty() { "none".into() } else { spheres.join(", ") }))
}

/// The target followed by every source, as separate documents.
pub fn faces_xml(xml: &str) -> Result<Vec<String>, String> {
    let d = parse(xml).map_err(|e| e.to_string())?;
    let mut out = vec![serialize(&format!("{}.target", d.name), &d.opetope.target().map_err(|e| e.to_string())?)];
    for (s, f) in d.opetope.sources() {
        out.push(serialize(&format!("{}.src-{s}", d.name), &f));
    }
    Ok(out)
}

pub fn suspend_xml(xml: &str) -> Result<String, String> {
    let d = parse(xml).map_err(|e| e.to_string())?;
    Ok(serialize(&format!("{}.susp", d.name), &d.opetope.suspend()))
}

pub fn render_xml(xml: &str, level: Option<usize>) -> Result<String, String> {
    let x: Opetope = parse(xml).map_err(|e| e.to_string())?.opetope;
    match level {
        Some(k) if k > x.dim() => Err(format!("level {k} exceeds dimension {}", x.dim())),
        _ => Ok(to_dot(&x, level)),
    }
}

fn js(e: String) -> JsError {
    JsError::new(&e)
}

#[wasm_bindgen]
pub fn example(name: &str) -> Option<String> {
    example_xml(name)
}

#[wasm_bindgen]
pub fn describe(xml: &str) -> Result<String, JsError> {
    describe_xml(xml).map_err(js)
}

#[wasm_bindgen]
pub fn faces(xml: &str) -> Result<Vec<String>, JsError> {
    faces_xml(xml).map_err(js)
}

#[wasm_bindgen]
pub fn suspend(xml: &str) -> Result<String, JsError> {
    suspend_xml(xml).map_err(js)
}

#[wasm_bindgen]
pub fn render(xml: &str, level: Option<usize>) -> Result<String, JsError> {
    render_xml(xml, level).map_err(js)
}
