//! Worked examples used by tests, the command line and the demo page.

use crate::opetope::{Opetope, ZoomComplex};
use crate::tree::{Tree, Whites};

fn t(s: &str) -> Tree {
    Tree::from_term(s).expect("fixture term")
}

fn w(v: &[(&str, &[&str])]) -> Whites {
    v.iter().map(|(e, ws)| (e.to_string(), ws.iter().map(|x| x.to_string()).collect())).collect()
}

/// A 5-opetope with null spheres at its two top levels.
pub fn five_cell() -> Opetope {
    Opetope::from_nestings(
        vec![
            t("x0(p)"),
            t("1(x0)"),
            t("2(3(4(1)))"),
            t("5(6(7(3) 2) 4)"),
            t("8(9(11(5) 12(6 7)) 10())"),
            t("13(14(8 10) 15(9 11) 16() 12)"),
        ],
        vec![Whites::new(), Whites::new(), Whites::new(), w(&[("4", &["10"])]), w(&[("12", &["16"])])],
    )
    .expect("valid fixture")
}

/// A 5-opetope `R` with a facet `f`, and a 5-opetope whose target is that facet.
pub fn gluing_pair() -> (Opetope, &'static str, Opetope) {
    let r = Opetope::from_nestings(
        vec![
            t("v0(p)"),
            t("v1(v0)"),
            t("u1(u2(u3(u4(v1))))"),
            t("d1(k(m(u3 d4(u4))) e(u1 u2))"),
            t("op(x(a(m d4) y(d1 k)) e)"),
            t("o(f(a b() c(x y)) op z())"),
        ],
        vec![Whites::new(), Whites::new(), Whites::new(), Whites::new(), w(&[("k", &["b"]), ("e", &["z"])])],
    )
    .expect("valid fixture");
    let facet = r.source("f").expect("facet");
    let mut z = facet.into_complex();
    z.trees.push(t("s(sN2() a b sE(sC(c) sN1()))"));
    z.whites.push(w(&[("d1", &["sN1"]), ("d4", &["sN2"])]));
    let s = Opetope::new(z).expect("valid fixture");
    (r, "f", s)
}

/// Composition tree expected from gluing [`gluing_pair`].
pub fn glued_composition_tree() -> Tree {
    t("o(s(sN2() a b() sE(sC(c(x y)) sN1())) op z())")
}

/// A zoom complex with a nontrivial automorphism swapping two branches.
/// Its bottom tree has three leaves, so it is no opetope.
pub fn two_branch() -> ZoomComplex {
    ZoomComplex::from_parts(
        vec![t("r(lu lm lv)"), t("O0(r u() v())"), t("O1(O0 u v)"), t("O2(O1 u2() v2())")],
        vec![w(&[("lu", &["u"]), ("lv", &["v"])]), Whites::new(), w(&[("u", &["u2"]), ("v", &["v2"])])],
    )
    .expect("valid fixture")
}

/// A 5-opetope given by its last zoom: a null-sphere on the root edge of a
/// planar tree below, and one on an input edge above.
pub fn z_example() -> Opetope {
    Opetope::from_nestings(
        vec![
            t("o0(pt)"),
            t("o1(o0)"),
            t("d3(d2(d1(o1)))"),
            t("b(a(d3) c(d2 d1))"),
            t("p(x() y(a b c))"),
            t("z(p x y w())"),
        ],
        vec![Whites::new(), Whites::new(), Whites::new(), w(&[("b", &["x"])]), w(&[("a", &["w"])])],
    )
    .expect("valid fixture")
}

/// The four sources of [`five_cell`], encoded by hand, keyed by sphere.
pub fn five_cell_sources() -> Vec<(&'static str, Opetope)> {
    let none = || vec![Whites::new(); 4];
    let mk = |g: [&str; 5], ws: Vec<Whites>| Opetope::from_nestings(g.iter().map(|s| t(s)).collect(), ws).expect("valid fixture");
    vec![
        ("13", mk(["x0(p)", "1(x0)", "2(3(4(1)))", "5(6(7(3) 2) 4)", "14(15(5 16(12(6 7))))"], none())),
        (
            "14",
            mk(
                ["x0(p)", "1(x0)", "2(3(4(1)))", "9(2 3 4)", "8(9 10())"],
                vec![Whites::new(), Whites::new(), Whites::new(), w(&[("4", &["10"])])],
            ),
        ),
        ("15", mk(["x0(p)", "1(x0)", "2(3(4(1)))", "5(12(2 3) 4)", "9(11(5) 12)"], none())),
        ("16", mk(["x0(p)", "4(x0)", "2(3(4))", "12(2 3)", "12"], none())),
    ]
}
