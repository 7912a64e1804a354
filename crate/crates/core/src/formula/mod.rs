//! Formulas of the language with De Morgan negation, Gödel implication and the
//! black modalities ■/♦, plus the box/diamond source language used by the
//! translations.

mod parser;

use std::collections::BTreeSet;
use std::fmt;

pub use parser::{parse, ParseError};

/// Name of the hidden atom used to expand the constant 𝟏 as `u → u`. It does
/// not match the atom grammar, so user input can never collide with it.
pub const RESERVED_ATOM: &str = "_u";

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Formula {
    Atom(String),
    /// De Morgan negation ¬: swaps positive and negative support.
    Neg(Box<Formula>),
    And(Box<Formula>, Box<Formula>),
    Impl(Box<Formula>, Box<Formula>),
    /// Sceptical aggregation ■.
    Square(Box<Formula>),
    /// Credulous aggregation ♦.
    Diamond(Box<Formula>),
    // Sugar, expanded by `desugar`.
    Top,
    Bot,
    Or(Box<Formula>, Box<Formula>),
    /// Coimplication ⤙.
    Coimpl(Box<Formula>, Box<Formula>),
    /// Gödel negation ∼.
    GNeg(Box<Formula>),
    Iff(Box<Formula>, Box<Formula>),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Metrics {
    pub modal_count: usize,
    pub modal_depth: usize,
    pub size: usize,
    pub atoms: BTreeSet<String>,
}

impl Formula {
    pub fn atom(name: impl Into<String>) -> Self {
        Formula::Atom(name.into())
    }
    pub fn neg(a: Formula) -> Self {
        Formula::Neg(Box::new(a))
    }
    pub fn gneg(a: Formula) -> Self {
        Formula::GNeg(Box::new(a))
    }
    pub fn square(a: Formula) -> Self {
        Formula::Square(Box::new(a))
    }
    pub fn diamond(a: Formula) -> Self {
        Formula::Diamond(Box::new(a))
    }
    pub fn and(a: Formula, b: Formula) -> Self {
        Formula::And(Box::new(a), Box::new(b))
    }
    pub fn or(a: Formula, b: Formula) -> Self {
        Formula::Or(Box::new(a), Box::new(b))
    }
    pub fn implies(a: Formula, b: Formula) -> Self {
        Formula::Impl(Box::new(a), Box::new(b))
    }
    pub fn coimpl(a: Formula, b: Formula) -> Self {
        Formula::Coimpl(Box::new(a), Box::new(b))
    }
    pub fn iff(a: Formula, b: Formula) -> Self {
        Formula::Iff(Box::new(a), Box::new(b))
    }

    /// The expansion of 𝟏 over the reserved atom.
    pub fn top_expansion() -> Self {
        let u = Formula::atom(RESERVED_ATOM);
        Formula::implies(u.clone(), u)
    }

    pub fn is_core(&self) -> bool {
        match self {
            Formula::Atom(_) => true,
            Formula::Neg(a) | Formula::Square(a) | Formula::Diamond(a) => a.is_core(),
            Formula::And(a, b) | Formula::Impl(a, b) => a.is_core() && b.is_core(),
            _ => false,
        }
    }

    /// Rewrites every sugar case into Atom/Neg/And/Impl/Square/Diamond.
    pub fn desugar(&self) -> Formula {
        use Formula::*;
        match self {
            Atom(p) => Atom(p.clone()),
            Neg(a) => Formula::neg(a.desugar()),
            And(a, b) => Formula::and(a.desugar(), b.desugar()),
            Impl(a, b) => Formula::implies(a.desugar(), b.desugar()),
            Square(a) => Formula::square(a.desugar()),
            Diamond(a) => Formula::diamond(a.desugar()),
            Top => Formula::top_expansion(),
            Bot => Formula::neg(Formula::top_expansion()),
            Or(a, b) => Formula::neg(Formula::and(
                Formula::neg(a.desugar()),
                Formula::neg(b.desugar()),
            )),
            Coimpl(a, b) => Formula::neg(Formula::implies(
                Formula::neg(b.desugar()),
                Formula::neg(a.desugar()),
            )),
            GNeg(a) => Formula::implies(a.desugar(), Bot.desugar()),
            Iff(a, b) => {
                let (a, b) = (a.desugar(), b.desugar());
                Formula::and(Formula::implies(a.clone(), b.clone()), Formula::implies(b, a))
            }
        }
    }

    pub fn metrics(&self) -> Metrics {
        let mut atoms = BTreeSet::new();
        self.collect_atoms(&mut atoms);
        Metrics {
            modal_count: self.modal_count(),
            modal_depth: self.modal_depth(),
            size: self.size(),
            atoms,
        }
    }

    pub fn size(&self) -> usize {
        self.children().iter().map(|c| c.size()).sum::<usize>() + 1
    }

    /// Modalities in the desugared formula; ↔ copies both sides.
    pub fn modal_count(&self) -> usize {
        let here = matches!(self, Formula::Square(_) | Formula::Diamond(_)) as usize;
        let below = self.children().iter().map(|c| c.modal_count()).sum::<usize>();
        match self {
            Formula::Iff(..) => 2 * below,
            _ => here + below,
        }
    }

    pub fn modal_depth(&self) -> usize {
        let below = self.children().iter().map(|c| c.modal_depth()).max().unwrap_or(0);
        match self {
            Formula::Square(_) | Formula::Diamond(_) => below + 1,
            _ => below,
        }
    }

    /// Atoms occurring in the formula, without the reserved atom.
    pub fn atoms(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.collect_atoms(&mut out);
        out
    }

    fn collect_atoms(&self, out: &mut BTreeSet<String>) {
        match self {
            Formula::Atom(p) if p != RESERVED_ATOM => {
                out.insert(p.clone());
            }
            _ => self.children().iter().for_each(|c| c.collect_atoms(out)),
        }
    }

    pub fn children(&self) -> Vec<&Formula> {
        use Formula::*;
        match self {
            Atom(_) | Top | Bot => vec![],
            Neg(a) | Square(a) | Diamond(a) | GNeg(a) => vec![a],
            And(a, b) | Impl(a, b) | Or(a, b) | Coimpl(a, b) | Iff(a, b) => vec![a, b],
        }
    }
}

/// Formulas over {𝟎, ∧, ∨, →, ⤙, □, ◇}: no De Morgan negation and no black
/// modalities.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum SourceFormula {
    Atom(String),
    Bot,
    And(Box<SourceFormula>, Box<SourceFormula>),
    Or(Box<SourceFormula>, Box<SourceFormula>),
    Impl(Box<SourceFormula>, Box<SourceFormula>),
    Coimpl(Box<SourceFormula>, Box<SourceFormula>),
    Box(Box<SourceFormula>),
    Dia(Box<SourceFormula>),
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("`{0}` is not expressible in the box/diamond source language")]
pub struct NotSourceFormula(pub String);

impl SourceFormula {
    pub fn atom(name: impl Into<String>) -> Self {
        SourceFormula::Atom(name.into())
    }

    pub fn size(&self) -> usize {
        use SourceFormula::*;
        match self {
            Atom(_) | Bot => 1,
            Box(a) | Dia(a) => 1 + a.size(),
            And(a, b) | Or(a, b) | Impl(a, b) | Coimpl(a, b) => 1 + a.size() + b.size(),
        }
    }

    pub fn has_coimpl(&self) -> bool {
        use SourceFormula::*;
        match self {
            Atom(_) | Bot => false,
            Coimpl(..) => true,
            Box(a) | Dia(a) => a.has_coimpl(),
            And(a, b) | Or(a, b) | Impl(a, b) => a.has_coimpl() || b.has_coimpl(),
        }
    }

    /// Reading of the source formula in the concrete syntax, with `box`/`dia`
    /// standing for □/◇.
    pub fn to_syntax(&self) -> Formula {
        use SourceFormula as S;
        match self {
            S::Atom(p) => Formula::atom(p.clone()),
            S::Bot => Formula::Bot,
            S::And(a, b) => Formula::and(a.to_syntax(), b.to_syntax()),
            S::Or(a, b) => Formula::or(a.to_syntax(), b.to_syntax()),
            S::Impl(a, b) => Formula::implies(a.to_syntax(), b.to_syntax()),
            S::Coimpl(a, b) => Formula::coimpl(a.to_syntax(), b.to_syntax()),
            S::Box(a) => Formula::square(a.to_syntax()),
            S::Dia(a) => Formula::diamond(a.to_syntax()),
        }
    }
}

impl TryFrom<&Formula> for SourceFormula {
    type Error = NotSourceFormula;

    /// `box`/`dia` are read as □/◇. 𝟏, ∼ and ↔ are rewritten through →, 𝟎
    /// and ∧; De Morgan negation is rejected.
    fn try_from(f: &Formula) -> Result<Self, Self::Error> {
        use SourceFormula as S;
        let bx = |a: &Formula| S::try_from(a).map(Box::new);
        Ok(match f {
            Formula::Atom(p) if p == RESERVED_ATOM => return Err(NotSourceFormula(f.to_string())),
            Formula::Atom(p) => S::Atom(p.clone()),
            Formula::Bot => S::Bot,
            Formula::Top => S::Impl(Box::new(S::Bot), Box::new(S::Bot)),
            Formula::And(a, b) => S::And(bx(a)?, bx(b)?),
            Formula::Or(a, b) => S::Or(bx(a)?, bx(b)?),
            Formula::Impl(a, b) => S::Impl(bx(a)?, bx(b)?),
            Formula::Coimpl(a, b) => S::Coimpl(bx(a)?, bx(b)?),
            Formula::Square(a) => S::Box(bx(a)?),
            Formula::Diamond(a) => S::Dia(bx(a)?),
            Formula::GNeg(a) => S::Impl(bx(a)?, Box::new(S::Bot)),
            Formula::Iff(a, b) => {
                let (a, b) = (bx(a)?, bx(b)?);
                S::And(Box::new(S::Impl(a.clone(), b.clone())), Box::new(S::Impl(b, a)))
            }
            Formula::Neg(_) => return Err(NotSourceFormula(f.to_string())),
        })
    }
}

impl fmt::Display for SourceFormula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(&self.to_syntax(), f)
    }
}

// Binding strength, loosest first.
const PREC_IFF: u8 = 1;
const PREC_IMPL: u8 = 2;
const PREC_COIMPL: u8 = 3;
const PREC_OR: u8 = 4;
const PREC_AND: u8 = 5;

fn binary_parts(f: &Formula) -> Option<(u8, &'static str, &Formula, &Formula)> {
    match f {
        Formula::Impl(a, b) if !is_top_expansion(f) => Some((PREC_IMPL, "->", a, b)),
        Formula::And(a, b) => Some((PREC_AND, "&", a, b)),
        Formula::Or(a, b) => Some((PREC_OR, "|", a, b)),
        Formula::Coimpl(a, b) => Some((PREC_COIMPL, "-<", a, b)),
        Formula::Iff(a, b) => Some((PREC_IFF, "<->", a, b)),
        _ => None,
    }
}

fn is_top_expansion(f: &Formula) -> bool {
    matches!(f, Formula::Impl(a, b)
        if matches!((&**a, &**b), (Formula::Atom(x), Formula::Atom(y)) if x == RESERVED_ATOM && y == RESERVED_ATOM))
}

fn write_operand(out: &mut fmt::Formatter<'_>, f: &Formula, parent: u8) -> fmt::Result {
    match binary_parts(f) {
        Some((p, ..)) if p <= parent => write!(out, "({f})"),
        _ => write!(out, "{f}"),
    }
}

/// Canonical ASCII rendering. Binary operands are parenthesised unless they
/// bind strictly tighter than their parent, so the output never depends on
/// associativity. The expansion of 𝟏 prints back as `1`.
impl fmt::Display for Formula {
    fn fmt(&self, out: &mut fmt::Formatter<'_>) -> fmt::Result {
        if is_top_expansion(self) {
            return write!(out, "1");
        }
        if let Some((p, op, a, b)) = binary_parts(self) {
            write_operand(out, a, p)?;
            write!(out, " {op} ")?;
            return write_operand(out, b, p);
        }
        let unary = |out: &mut fmt::Formatter<'_>, prefix: &str, a: &Formula| {
            write!(out, "{prefix}")?;
            write_operand(out, a, PREC_AND)
        };
        match self {
            Formula::Atom(p) => write!(out, "{p}"),
            Formula::Top => write!(out, "1"),
            Formula::Bot => write!(out, "0"),
            Formula::Neg(a) => unary(out, "neg ", a),
            Formula::GNeg(a) => unary(out, "~", a),
            Formula::Square(a) => unary(out, "box ", a),
            Formula::Diamond(a) => unary(out, "dia ", a),
            _ => unreachable!("binary cases handled above"),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(s: &str) -> Formula {
        parse(s).unwrap()
    }

    #[test]
    fn desugar_follows_definitions() {
        assert_eq!(Formula::Top.desugar(), Formula::top_expansion());
        let (a, b) = (Formula::atom("a"), Formula::atom("b"));
        assert_eq!(
            Formula::or(a.clone(), b.clone()).desugar(),
            Formula::neg(Formula::and(Formula::neg(a.clone()), Formula::neg(b.clone())))
        );
        assert_eq!(
            Formula::coimpl(a.clone(), b.clone()).desugar(),
            Formula::neg(Formula::implies(Formula::neg(b.clone()), Formula::neg(a.clone())))
        );
        assert_eq!(
            Formula::gneg(a.clone()).desugar(),
            Formula::implies(a.clone(), Formula::neg(Formula::top_expansion()))
        );
        assert_eq!(
            Formula::iff(a.clone(), b.clone()).desugar(),
            Formula::and(Formula::implies(a.clone(), b.clone()), Formula::implies(b, a))
        );
    }

    #[test]
    fn metrics_examples() {
        let m = p("box p").metrics();
        assert_eq!((m.modal_count, m.modal_depth), (1, 1));
        let m = p("box p -> dia box q").metrics();
        assert_eq!((m.modal_count, m.modal_depth), (3, 2));
        assert_eq!(m.atoms.iter().cloned().collect::<Vec<_>>(), vec!["p", "q"]);
        let m = p("p").metrics();
        assert_eq!((m.modal_count, m.modal_depth, m.size), (0, 0, 1));
        assert_eq!(p("box p <-> dia q").metrics().modal_count, 4);
        let m = p("1 & 0").metrics();
        assert!(m.atoms.is_empty());
        assert_eq!(p("1 & 0").desugar().metrics().atoms.len(), 0);
    }

    #[test]
    fn printing_is_canonical() {
        assert_eq!(p("box p->box q").to_string(), "box p -> box q");
        assert_eq!(p("box (1 -< (1 -< p))").to_string(), "box (1 -< (1 -< p))");
        assert_eq!(p("~ box (p | ~p)").to_string(), "~box (p | ~p)");
        assert_eq!(p("(p & q) & r").to_string(), "(p & q) & r");
        assert_eq!(p("p & q -> r").to_string(), "p & q -> r");
        assert_eq!(Formula::Bot.desugar().to_string(), "neg 1");
    }

    #[test]
    fn source_conversion() {
        let s = SourceFormula::try_from(&p("box (p -> q) -> (box p -> box q)")).unwrap();
        assert_eq!(s.to_string(), "box (p -> q) -> (box p -> box q)");
        assert!(SourceFormula::try_from(&p("neg p")).is_err());
        assert_eq!(
            SourceFormula::try_from(&p("~p")).unwrap(),
            SourceFormula::Impl(Box::new(SourceFormula::atom("p")), Box::new(SourceFormula::Bot))
        );
    }
}
