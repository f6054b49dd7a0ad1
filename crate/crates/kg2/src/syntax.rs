//! Formula syntax for the language of KG2±.
//!
//! The surface syntax is plain ASCII: `!` (De Morgan negation), `~` (Gödel
//! negation), `^` (Delta), `[]` (box), `<>` (diamond), `&`, `|`, `->`
//! (right-associative), `-<` (co-implication, left-associative), and the
//! constants `0`, `1`. Unary operators bind tightest, then `&`, `|`, `-<`,
//! and `->` loosest.
//!
//! [`Formula`] keeps the defined connectives as their own nodes; [`desugar`]
//! expands them into the primitive fragment [`CoreFormula`]. The two are kept
//! as separate types so the tableau machinery cannot receive sugar by
//! accident.

use std::collections::HashSet;
use std::fmt;

/// A formula with the defined connectives kept as explicit nodes.
#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub enum Formula {
    Atom(String),
    Top,
    Bot,
    /// De Morgan negation `!`.
    Neg(Box<Formula>),
    /// Gödel negation `~`.
    GNeg(Box<Formula>),
    /// Baaz Delta `^`.
    Delta(Box<Formula>),
    And(Box<Formula>, Box<Formula>),
    Or(Box<Formula>, Box<Formula>),
    /// `->`
    Impl(Box<Formula>, Box<Formula>),
    /// `-<`
    Coimpl(Box<Formula>, Box<Formula>),
    Box_(Box<Formula>),
    Dia(Box<Formula>),
}

/// The primitive fragment: no `Or`, `Coimpl`, `GNeg`, `Delta` nodes.
#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub enum CoreFormula {
    Atom(String),
    Top,
    Bot,
    Neg(Box<CoreFormula>),
    And(Box<CoreFormula>, Box<CoreFormula>),
    Impl(Box<CoreFormula>, Box<CoreFormula>),
    Box_(Box<CoreFormula>),
    Dia(Box<CoreFormula>),
}

/// Modality count and maximal modal nesting depth.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub struct ModalMetrics {
    pub count: usize,
    pub depth: usize,
}

impl Formula {
    pub fn atom(name: &str) -> Formula {
        Formula::Atom(name.to_string())
    }

    #[allow(clippy::should_implement_trait)]
    pub fn neg(f: Formula) -> Formula {
        Formula::Neg(Box::new(f))
    }

    pub fn gneg(f: Formula) -> Formula {
        Formula::GNeg(Box::new(f))
    }

    pub fn delta(f: Formula) -> Formula {
        Formula::Delta(Box::new(f))
    }

    pub fn and(l: Formula, r: Formula) -> Formula {
        Formula::And(Box::new(l), Box::new(r))
    }

    pub fn or(l: Formula, r: Formula) -> Formula {
        Formula::Or(Box::new(l), Box::new(r))
    }

    pub fn impl_(l: Formula, r: Formula) -> Formula {
        Formula::Impl(Box::new(l), Box::new(r))
    }

    pub fn coimpl(l: Formula, r: Formula) -> Formula {
        Formula::Coimpl(Box::new(l), Box::new(r))
    }

    pub fn box_(f: Formula) -> Formula {
        Formula::Box_(Box::new(f))
    }

    pub fn dia(f: Formula) -> Formula {
        Formula::Dia(Box::new(f))
    }

    /// Expands the defined connectives:
    /// `~a = a -> 0`, `^a = 1 -< (1 -< a)`, `a | b = !(!a & !b)`,
    /// `a -< b = !(!b -> !a)`. `0` and `1` stay native constants.
    pub fn desugar(&self) -> CoreFormula {
        use CoreFormula as C;
        match self {
            Formula::Atom(p) => C::Atom(p.clone()),
            Formula::Top => C::Top,
            Formula::Bot => C::Bot,
            Formula::Neg(f) => C::Neg(Box::new(f.desugar())),
            Formula::GNeg(f) => C::Impl(Box::new(f.desugar()), Box::new(C::Bot)),
            Formula::Delta(f) => {
                // 1 -< (1 -< f), with -< expanded underneath.
                Formula::coimpl(Formula::Top, Formula::coimpl(Formula::Top, (**f).clone()))
                    .desugar()
            }
            Formula::And(l, r) => C::And(Box::new(l.desugar()), Box::new(r.desugar())),
            Formula::Or(l, r) => C::Neg(Box::new(C::And(
                Box::new(C::Neg(Box::new(l.desugar()))),
                Box::new(C::Neg(Box::new(r.desugar()))),
            ))),
            Formula::Impl(l, r) => C::Impl(Box::new(l.desugar()), Box::new(r.desugar())),
            Formula::Coimpl(l, r) => C::Neg(Box::new(C::Impl(
                Box::new(C::Neg(Box::new(r.desugar()))),
                Box::new(C::Neg(Box::new(l.desugar()))),
            ))),
            Formula::Box_(f) => C::Box_(Box::new(f.desugar())),
            Formula::Dia(f) => C::Dia(Box::new(f.desugar())),
        }
    }

    /// All subtrees in post-order, deduplicated at first occurrence.
    pub fn subformulas(&self) -> Vec<&Formula> {
        let mut seen = HashSet::new();
        let mut out = Vec::new();
        fn walk<'a>(f: &'a Formula, seen: &mut HashSet<&'a Formula>, out: &mut Vec<&'a Formula>) {
            match f {
                Formula::Atom(_) | Formula::Top | Formula::Bot => {}
                Formula::Neg(a)
                | Formula::GNeg(a)
                | Formula::Delta(a)
                | Formula::Box_(a)
                | Formula::Dia(a) => walk(a, seen, out),
                Formula::And(l, r)
                | Formula::Or(l, r)
                | Formula::Impl(l, r)
                | Formula::Coimpl(l, r) => {
                    walk(l, seen, out);
                    walk(r, seen, out);
                }
            }
            if seen.insert(f) {
                out.push(f);
            }
        }
        walk(self, &mut seen, &mut out);
        out
    }

    /// Atom names occurring in the formula, sorted.
    pub fn atoms(&self) -> Vec<String> {
        let mut names: Vec<String> = self
            .subformulas()
            .into_iter()
            .filter_map(|f| match f {
                Formula::Atom(p) => Some(p.clone()),
                _ => None,
            })
            .collect();
        names.sort();
        names.dedup();
        names
    }

    /// Number of modalities and maximal modal nesting of the desugared formula.
    pub fn modal_metrics(&self) -> ModalMetrics {
        self.desugar().modal_metrics()
    }

    /// Node count of this tree (sugar included).
    pub fn size(&self) -> usize {
        match self {
            Formula::Atom(_) | Formula::Top | Formula::Bot => 1,
            Formula::Neg(a)
            | Formula::GNeg(a)
            | Formula::Delta(a)
            | Formula::Box_(a)
            | Formula::Dia(a) => 1 + a.size(),
            Formula::And(l, r)
            | Formula::Or(l, r)
            | Formula::Impl(l, r)
            | Formula::Coimpl(l, r) => 1 + l.size() + r.size(),
        }
    }
}

impl CoreFormula {
    /// Re-embeds into [`Formula`]; the image contains no sugar nodes.
    pub fn to_formula(&self) -> Formula {
        match self {
            CoreFormula::Atom(p) => Formula::Atom(p.clone()),
            CoreFormula::Top => Formula::Top,
            CoreFormula::Bot => Formula::Bot,
            CoreFormula::Neg(a) => Formula::neg(a.to_formula()),
            CoreFormula::And(l, r) => Formula::and(l.to_formula(), r.to_formula()),
            CoreFormula::Impl(l, r) => Formula::impl_(l.to_formula(), r.to_formula()),
            CoreFormula::Box_(a) => Formula::box_(a.to_formula()),
            CoreFormula::Dia(a) => Formula::dia(a.to_formula()),
        }
    }

    pub fn subformulas(&self) -> Vec<&CoreFormula> {
        let mut seen = HashSet::new();
        let mut out = Vec::new();
        fn walk<'a>(
            f: &'a CoreFormula,
            seen: &mut HashSet<&'a CoreFormula>,
            out: &mut Vec<&'a CoreFormula>,
        ) {
            match f {
                CoreFormula::Atom(_) | CoreFormula::Top | CoreFormula::Bot => {}
                CoreFormula::Neg(a) | CoreFormula::Box_(a) | CoreFormula::Dia(a) => {
                    walk(a, seen, out)
                }
                CoreFormula::And(l, r) | CoreFormula::Impl(l, r) => {
                    walk(l, seen, out);
                    walk(r, seen, out);
                }
            }
            if seen.insert(f) {
                out.push(f);
            }
        }
        walk(self, &mut seen, &mut out);
        out
    }

    pub fn modal_metrics(&self) -> ModalMetrics {
        fn walk(f: &CoreFormula, count: &mut usize) -> usize {
            match f {
                CoreFormula::Atom(_) | CoreFormula::Top | CoreFormula::Bot => 0,
                CoreFormula::Neg(a) => walk(a, count),
                CoreFormula::And(l, r) | CoreFormula::Impl(l, r) => {
                    walk(l, count).max(walk(r, count))
                }
                CoreFormula::Box_(a) | CoreFormula::Dia(a) => {
                    *count += 1;
                    1 + walk(a, count)
                }
            }
        }
        let mut count = 0;
        let depth = walk(self, &mut count);
        ModalMetrics { count, depth }
    }

    pub fn size(&self) -> usize {
        match self {
            CoreFormula::Atom(_) | CoreFormula::Top | CoreFormula::Bot => 1,
            CoreFormula::Neg(a) | CoreFormula::Box_(a) | CoreFormula::Dia(a) => 1 + a.size(),
            CoreFormula::And(l, r) | CoreFormula::Impl(l, r) => 1 + l.size() + r.size(),
        }
    }
}

// Printing. Precedence levels, loosest first: `->` (1, right-assoc),
// `-<` (2, left-assoc), `|` (3, left-assoc), `&` (4, left-assoc),
// unary (5), atoms and constants (6). `fmt_prec` parenthesizes exactly
// when the node's level is below the context's minimum, which makes
// `parse(print(f)) == f` hold structurally.
fn fmt_prec(f: &Formula, min: u8, out: &mut fmt::Formatter<'_>) -> fmt::Result {
    let prec = match f {
        Formula::Impl(..) => 1,
        Formula::Coimpl(..) => 2,
        Formula::Or(..) => 3,
        Formula::And(..) => 4,
        Formula::Neg(_) | Formula::GNeg(_) | Formula::Delta(_) | Formula::Box_(_) | Formula::Dia(_) => 5,
        Formula::Atom(_) | Formula::Top | Formula::Bot => 6,
    };
    if prec < min {
        write!(out, "(")?;
        fmt_prec(f, 0, out)?;
        return write!(out, ")");
    }
    match f {
        Formula::Atom(p) => write!(out, "{p}"),
        Formula::Top => write!(out, "1"),
        Formula::Bot => write!(out, "0"),
        Formula::Neg(a) => {
            write!(out, "!")?;
            fmt_prec(a, 5, out)
        }
        Formula::GNeg(a) => {
            write!(out, "~")?;
            fmt_prec(a, 5, out)
        }
        Formula::Delta(a) => {
            write!(out, "^")?;
            fmt_prec(a, 5, out)
        }
        Formula::Box_(a) => {
            write!(out, "[]")?;
            fmt_prec(a, 5, out)
        }
        Formula::Dia(a) => {
            write!(out, "<>")?;
            fmt_prec(a, 5, out)
        }
        Formula::And(l, r) => {
            fmt_prec(l, 4, out)?;
            write!(out, " & ")?;
            fmt_prec(r, 5, out)
        }
        Formula::Or(l, r) => {
            fmt_prec(l, 3, out)?;
            write!(out, " | ")?;
            fmt_prec(r, 4, out)
        }
        Formula::Coimpl(l, r) => {
            fmt_prec(l, 2, out)?;
            write!(out, " -< ")?;
            fmt_prec(r, 3, out)
        }
        Formula::Impl(l, r) => {
            fmt_prec(l, 2, out)?;
            write!(out, " -> ")?;
            fmt_prec(r, 1, out)
        }
    }
}

impl fmt::Display for Formula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt_prec(self, 0, f)
    }
}

impl fmt::Display for CoreFormula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.to_formula())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parse::parse;

    #[test]
    fn print_examples() {
        assert_eq!(
            Formula::impl_(Formula::atom("p"), Formula::atom("p")).to_string(),
            "p -> p"
        );
        assert_eq!(
            Formula::coimpl(Formula::Top, Formula::atom("p")).to_string(),
            "1 -< p"
        );
        assert_eq!(
            Formula::box_(Formula::neg(Formula::dia(Formula::atom("p")))).to_string(),
            "[]!<>p"
        );
    }

    #[test]
    fn desugar_examples() {
        let p = || Formula::atom("p");
        let q = || Formula::atom("q");
        use CoreFormula as C;
        assert_eq!(
            Formula::or(p(), q()).desugar(),
            C::Neg(Box::new(C::And(
                Box::new(C::Neg(Box::new(C::Atom("p".into())))),
                Box::new(C::Neg(Box::new(C::Atom("q".into()))))
            )))
        );
        assert_eq!(
            Formula::gneg(p()).desugar(),
            C::Impl(Box::new(C::Atom("p".into())), Box::new(C::Bot))
        );
    }

    #[test]
    fn desugar_is_idempotent() {
        for text in ["p | ~q", "^(p -< q)", "[]p -> <>!q", "1 -< (p | 0)"] {
            let f = parse(text).unwrap();
            let once = f.desugar();
            assert_eq!(once.to_formula().desugar(), once, "{text}");
        }
    }

    #[test]
    fn subformula_examples() {
        let p = Formula::atom("p");
        assert_eq!(p.subformulas(), vec![&Formula::atom("p")]);

        let imp = Formula::impl_(Formula::atom("p"), Formula::atom("q"));
        let subs: Vec<String> = imp.subformulas().iter().map(|f| f.to_string()).collect();
        assert_eq!(subs, vec!["p", "q", "p -> q"]);

        let bx = Formula::box_(Formula::neg(Formula::atom("p")));
        let subs: Vec<String> = bx.subformulas().iter().map(|f| f.to_string()).collect();
        assert_eq!(subs, vec!["p", "!p", "[]!p"]);
    }

    #[test]
    fn subformulas_of_core_closed_under_subterms() {
        for text in ["p | ~q", "^([]p -< <>q)", "[]p -> []!<>p"] {
            let core = parse(text).unwrap().desugar();
            let subs = core.subformulas();
            let present: HashSet<&CoreFormula> = subs.iter().copied().collect();
            for s in &subs {
                let children: Vec<&CoreFormula> = match s {
                    CoreFormula::Atom(_) | CoreFormula::Top | CoreFormula::Bot => vec![],
                    CoreFormula::Neg(a) | CoreFormula::Box_(a) | CoreFormula::Dia(a) => vec![a],
                    CoreFormula::And(l, r) | CoreFormula::Impl(l, r) => vec![l, r],
                };
                for c in children {
                    assert!(present.contains(c), "missing child of {s} in {text}");
                }
            }
        }
    }

    #[test]
    fn modal_metric_examples() {
        let m = parse("p -> p").unwrap().modal_metrics();
        assert_eq!((m.count, m.depth), (0, 0));
        let m = parse("[]p -> []!<>p").unwrap().modal_metrics();
        assert_eq!((m.count, m.depth), (3, 2));
        let m = parse("<>p").unwrap().modal_metrics();
        assert_eq!((m.count, m.depth), (1, 1));
    }
}
