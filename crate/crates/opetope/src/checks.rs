//! Structural laws that every opetope satisfies, as reusable checks.

use crate::calculus::{apply, fill, glue, CalcError, SphereOp};
use crate::opetope::{Opetope, ZoomComplex};

/// Every legal sphere operation on `X(i)`, in a fixed order.
pub fn sphere_ops(z: &ZoomComplex, i: usize) -> Vec<SphereOp> {
    let nest = z.nesting(i);
    let mut out = Vec::new();
    for s in nest.dots() {
        if s != nest.root() {
            out.push(SphereOp::Erase(s.clone()));
        }
        out.push(SphereOp::Contract(s.clone()));
        out.push(SphereOp::Restrict(s.clone()));
    }
    for x in nest.names() {
        out.push(SphereOp::Draw(x.clone()));
    }
    out
}

/// Apply and re-validate. `Ok(false)` when the operation is refused for a
/// documented reason; an error when it produced an invalid complex.
pub fn sphere_op_is_sound(z: &ZoomComplex, i: usize, op: &SphereOp) -> Result<bool, String> {
    match apply(z, i, op) {
        Ok(out) => {
            let v = out.validate();
            if !v.is_empty() || out.degree() != i {
                return Err(format!("{op:?} at level {i} gave an invalid complex: {v:?}"));
            }
            Ok(true)
        }
        Err(CalcError::OuterSphere(_)) => Ok(false),
        Err(e) => Err(format!("{op:?} at level {i} failed: {e}")),
    }
}

fn same(a: &Opetope, b: &Opetope, what: &str) -> Result<(), String> {
    if a.equals(b) {
        Ok(())
    } else {
        Err(format!("{what} differ:\n{a}\n{b}"))
    }
}

fn calc(e: CalcError) -> String {
    e.to_string()
}

/// Each face of codimension two is shared by exactly two facets. Faces are
/// matched by name: a carrier dot `d` of the top constellation is a source of
/// the target and of the innermost sphere around `d`; a sphere `c` inside `j`
/// is the target of facet `c` and a source of facet `j`; the target of the
/// target is the target of the outer facet. A drop has a glob as its only
/// facet, whose single source and target coincide.
pub fn facet_parity(x: &Opetope) -> Result<usize, String> {
    if x.dim() < 2 {
        return Ok(0);
    }
    let t = x.target().map_err(calc)?;
    let nest = x.composition_tree();
    if x.is_drop() {
        let d = nest.root();
        same(&t.source(d).map_err(calc)?, &t.target().map_err(calc)?, "glob faces")?;
        return Ok(1);
    }
    let mut pairs = 0;
    let n = x.dim();
    for d in x.complex().carrier(n).dots() {
        let around = nest.parent(d).ok_or_else(|| format!("carrier dot `{d}` outside every sphere"))?;
        let a = t.source(d).map_err(calc)?;
        let b = x.source(around).map_err(calc)?.source(d).map_err(calc)?;
        same(&a, &b, &format!("faces at carrier dot `{d}`"))?;
        pairs += 1;
    }
    for c in nest.dots() {
        match nest.parent(c) {
            Some(j) => {
                let a = x.source(c).map_err(calc)?.target().map_err(calc)?;
                let b = x.source(j).map_err(calc)?.source(c).map_err(calc)?;
                same(&a, &b, &format!("faces at sphere `{c}`"))?;
            }
            None => {
                let a = t.target().map_err(calc)?;
                let b = x.source(c).map_err(calc)?.target().map_err(calc)?;
                same(&a, &b, "targets of the target and the outer facet")?;
            }
        }
        pairs += 1;
    }
    Ok(pairs)
}

/// Suspension commutes with target and every source.
pub fn suspension_commutes(x: &Opetope) -> Result<(), String> {
    let sx = x.suspend();
    if x.dim() >= 1 {
        same(&x.target().map_err(calc)?.suspend(), &sx.target().map_err(calc)?, "suspended targets")?;
    }
    for (s, f) in x.sources() {
        same(&f.suspend(), &sx.source(&s).map_err(calc)?, &format!("suspended sources at `{s}`"))?;
    }
    Ok(())
}

/// Suspension commutes with gluing and filling.
pub fn suspension_commutes_with_gluing(r: &Opetope, f: &str, s: &Opetope) -> Result<(), String> {
    let (sr, ss) = (r.suspend(), s.suspend());
    same(&glue(r, f, s).map_err(calc)?.suspend(), &glue(&sr, f, &ss).map_err(calc)?, "suspended gluings")?;
    same(&fill(r, f, s).map_err(calc)?.suspend(), &fill(&sr, f, &ss).map_err(calc)?, "suspended fillers")
}

/// Only the identity automorphism.
pub fn is_rigid(z: &ZoomComplex) -> bool {
    z.automorphisms().len() == 1
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;

    #[test]
    fn parity_on_fixtures() {
        let (r, _, s) = fixtures::gluing_pair();
        for x in [fixtures::five_cell(), r, s, fixtures::z_example(), Opetope::linear(3), Opetope::linear(0)] {
            facet_parity(&x).unwrap();
        }
    }

    #[test]
    fn suspension_on_fixtures() {
        let (r, f, s) = fixtures::gluing_pair();
        for x in [fixtures::five_cell(), r.clone(), s.clone(), fixtures::z_example()] {
            suspension_commutes(&x).unwrap();
        }
        suspension_commutes_with_gluing(&r, f, &s).unwrap();
    }

    #[test]
    fn every_operation_on_the_five_cell() {
        let x = fixtures::five_cell();
        let mut applied = 0;
        for i in 0..=x.dim() {
            for op in sphere_ops(x.complex(), i) {
                applied += sphere_op_is_sound(x.complex(), i, &op).unwrap() as usize;
            }
        }
        assert!(applied > 50);
    }

    #[test]
    fn rigidity() {
        assert!(is_rigid(fixtures::five_cell().complex()));
        assert!(!is_rigid(&fixtures::two_branch()));
    }
}
