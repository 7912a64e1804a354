//! Translations from the box/diamond source language into the ■/♦ language,
//! and the two reference semantics they are checked against: single-relation
//! bi-Gödel models and classical Kripke models.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use crate::algebra::Rational01;
use crate::formula::{Formula, SourceFormula};
use crate::model::{FuzzyFrame, KripkeModel, ModelError, Sign};

/// □ ↦ ■ and ◇ ↦ ♦, homomorphic elsewhere.
pub fn plus_bullet(phi: &SourceFormula) -> Formula {
    homomorphic(phi, &|a| Formula::square(a), &|a| Formula::diamond(a))
}

/// □ ↦ ¬■¬ and ◇ ↦ ¬♦¬, homomorphic elsewhere.
pub fn minus_bullet(phi: &SourceFormula) -> Formula {
    homomorphic(
        phi,
        &|a| Formula::neg(Formula::square(Formula::neg(a))),
        &|a| Formula::neg(Formula::diamond(Formula::neg(a))),
    )
}

fn homomorphic(phi: &SourceFormula, bx: &dyn Fn(Formula) -> Formula, dia: &dyn Fn(Formula) -> Formula) -> Formula {
    use SourceFormula as S;
    let go = |a: &SourceFormula| homomorphic(a, bx, dia);
    match phi {
        S::Atom(p) => Formula::atom(p.clone()),
        S::Bot => Formula::Bot,
        S::And(a, b) => Formula::and(go(a), go(b)),
        S::Or(a, b) => Formula::or(go(a), go(b)),
        S::Impl(a, b) => Formula::implies(go(a), go(b)),
        S::Coimpl(a, b) => Formula::coimpl(go(a), go(b)),
        S::Box(a) => bx(go(a)),
        S::Dia(a) => dia(go(a)),
    }
}

fn gg(f: Formula) -> Formula {
    Formula::gneg(Formula::gneg(f))
}

/// Prefixes every subformula with ∼∼, reading □/◇ as ■/♦. A formula is
/// valid in classical K iff its image is positively valid.
pub fn nabla(phi: &SourceFormula) -> Formula {
    use SourceFormula as S;
    let inner = match phi {
        S::Atom(p) => Formula::atom(p.clone()),
        S::Bot => Formula::Bot,
        S::And(a, b) => Formula::and(nabla(a), nabla(b)),
        S::Or(a, b) => Formula::or(nabla(a), nabla(b)),
        S::Impl(a, b) => Formula::implies(nabla(a), nabla(b)),
        S::Coimpl(a, b) => Formula::coimpl(nabla(a), nabla(b)),
        S::Box(a) => Formula::square(nabla(a)),
        S::Dia(a) => Formula::diamond(nabla(a)),
    };
    gg(inner)
}

/// Dual translation for the second coordinate: on crisp models whose
/// denials are classical, `φ` holds classically at `w` iff
/// `v2(1 -< φ^∂, w) = 0`.
pub fn partial(phi: &SourceFormula) -> Formula {
    use SourceFormula as S;
    let co_one = |f: Formula| Formula::coimpl(Formula::Top, f);
    match phi {
        S::Atom(p) => co_one(co_one(Formula::atom(p.clone()))),
        // 𝟎 never holds, so its image must have no denial.
        S::Bot => Formula::Top,
        S::And(a, b) => Formula::or(partial(a), partial(b)),
        S::Or(a, b) => Formula::and(partial(a), partial(b)),
        S::Impl(a, b) => Formula::coimpl(partial(b), partial(a)),
        S::Coimpl(a, b) => Formula::implies(partial(b), partial(a)),
        S::Box(a) => Formula::square(partial(a)),
        S::Dia(a) => Formula::diamond(partial(a)),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TranslationKind {
    PlusBullet,
    MinusBullet,
    Nabla,
    Partial,
}

impl TranslationKind {
    pub fn apply(self, phi: &SourceFormula) -> Formula {
        match self {
            TranslationKind::PlusBullet => plus_bullet(phi),
            TranslationKind::MinusBullet => minus_bullet(phi),
            TranslationKind::Nabla => nabla(phi),
            TranslationKind::Partial => partial(phi),
        }
    }
}

impl FromStr for TranslationKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "plusbullet" => Ok(TranslationKind::PlusBullet),
            "minusbullet" => Ok(TranslationKind::MinusBullet),
            "nabla" => Ok(TranslationKind::Nabla),
            "partial" => Ok(TranslationKind::Partial),
            _ => Err(format!("unknown translation `{s}` (expected plusbullet, minusbullet, nabla or partial)")),
        }
    }
}

impl fmt::Display for TranslationKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            TranslationKind::PlusBullet => "plusbullet",
            TranslationKind::MinusBullet => "minusbullet",
            TranslationKind::Nabla => "nabla",
            TranslationKind::Partial => "partial",
        })
    }
}

fn index_of(worlds: &[String], name: &str) -> Result<usize, ModelError> {
    worlds.iter().position(|w| w == name).ok_or_else(|| ModelError::UnknownWorld(name.to_string()))
}

/// A classical Kripke model with one crisp relation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ClassicalModel {
    pub worlds: Vec<String>,
    pub edges: BTreeSet<(String, String)>,
    /// `(world, atom)` pairs where the atom is true.
    pub truths: BTreeSet<(String, String)>,
}

impl ClassicalModel {
    pub fn holds(&self, world: &str, phi: &SourceFormula) -> Result<bool, ModelError> {
        let w = index_of(&self.worlds, world)?;
        Ok(self.holds_all(phi)[w])
    }

    fn holds_all(&self, phi: &SourceFormula) -> Vec<bool> {
        use SourceFormula as S;
        let n = self.worlds.len();
        let succ = |w: usize| {
            (0..n).filter(move |&u| self.edges.contains(&(self.worlds[w].clone(), self.worlds[u].clone())))
        };
        match phi {
            S::Atom(p) => self.worlds.iter().map(|w| self.truths.contains(&(w.clone(), p.clone()))).collect(),
            S::Bot => vec![false; n],
            S::And(a, b) => zip(self.holds_all(a), self.holds_all(b), |x, y| x && y),
            S::Or(a, b) => zip(self.holds_all(a), self.holds_all(b), |x, y| x || y),
            S::Impl(a, b) => zip(self.holds_all(a), self.holds_all(b), |x, y| !x || y),
            S::Coimpl(a, b) => zip(self.holds_all(a), self.holds_all(b), |x, y| x && !y),
            S::Box(a) => {
                let va = self.holds_all(a);
                (0..n).map(|w| succ(w).all(|u| va[u])).collect()
            }
            S::Dia(a) => {
                let va = self.holds_all(a);
                (0..n).map(|w| succ(w).any(|u| va[u])).collect()
            }
        }
    }
}

fn zip<T: Copy>(a: Vec<T>, b: Vec<T>, f: impl Fn(T, T) -> T) -> Vec<T> {
    a.into_iter().zip(b).map(|(x, y)| f(x, y)).collect()
}

/// The crisp shadow of a model: an edge wherever R⁻ is 1, and an atom true
/// wherever its denial is 1.
pub fn shadow_model(m: &KripkeModel) -> ClassicalModel {
    let worlds = m.worlds().to_vec();
    let edges = m
        .relation_entries(Sign::Minus)
        .filter(|(_, _, v)| v.is_one())
        .map(|(i, j, _)| (worlds[i].clone(), worlds[j].clone()))
        .collect();
    let truths = m
        .valuation_entries()
        .filter(|(_, _, v)| v.neg.is_one())
        .map(|(w, p, _)| (worlds[w].clone(), p.to_string()))
        .collect();
    ClassicalModel { worlds, edges, truths }
}

/// A model over a single fuzzy relation with one truth degree per atom.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SingleRelationModel {
    pub frame: FuzzyFrame,
    /// `(world, atom)` to degree; missing entries are 0.
    pub val: BTreeMap<(String, String), Rational01>,
}

impl SingleRelationModel {
    pub fn new(frame: FuzzyFrame) -> Self {
        SingleRelationModel { frame, val: BTreeMap::new() }
    }

    pub fn eval(&self, world: &str, phi: &SourceFormula) -> Result<Rational01, ModelError> {
        let w = index_of(&self.frame.worlds, world)?;
        Ok(self.eval_all(phi).swap_remove(w))
    }

    fn rel(&self, w: usize, u: usize) -> Rational01 {
        let key = (self.frame.worlds[w].clone(), self.frame.worlds[u].clone());
        self.frame.edges.get(&key).cloned().unwrap_or_else(Rational01::zero)
    }

    fn eval_all(&self, phi: &SourceFormula) -> Vec<Rational01> {
        use SourceFormula as S;
        let n = self.frame.worlds.len();
        let pair = |a: &SourceFormula, b: &SourceFormula, f: fn(&Rational01, &Rational01) -> Rational01| {
            self.eval_all(a).iter().zip(&self.eval_all(b)).map(|(x, y)| f(x, y)).collect()
        };
        match phi {
            S::Atom(p) => self
                .frame
                .worlds
                .iter()
                .map(|w| self.val.get(&(w.clone(), p.clone())).cloned().unwrap_or_else(Rational01::zero))
                .collect(),
            S::Bot => vec![Rational01::zero(); n],
            S::And(a, b) => pair(a, b, |x, y| x.meet(y)),
            S::Or(a, b) => pair(a, b, |x, y| x.join(y)),
            S::Impl(a, b) => pair(a, b, |x, y| x.gimpl(y)),
            S::Coimpl(a, b) => pair(a, b, |x, y| x.gcoimpl(y)),
            S::Box(a) => {
                let va = self.eval_all(a);
                (0..n)
                    .map(|w| va.iter().enumerate().fold(Rational01::one(), |acc, (u, x)| acc.meet(&self.rel(w, u).gimpl(x))))
                    .collect()
            }
            S::Dia(a) => {
                let va = self.eval_all(a);
                (0..n)
                    .map(|w| va.iter().enumerate().fold(Rational01::zero(), |acc, (u, x)| acc.join(&self.rel(w, u).meet(x))))
                    .collect()
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::formula::parse;
    use crate::model::Coord;
    use crate::tableau::prove;
    use crate::Mode;

    fn src(s: &str) -> SourceFormula {
        SourceFormula::try_from(&parse(s).unwrap()).unwrap()
    }

    fn r(a: i64, b: i64) -> Rational01 {
        Rational01::new(a, b).unwrap()
    }

    #[test]
    fn bullets() {
        assert_eq!(plus_bullet(&src("box p")), parse("box p").unwrap());
        assert_eq!(
            plus_bullet(&src("box (p -> q) -> (box p -> box q)")),
            parse("box (p -> q) -> (box p -> box q)").unwrap()
        );
        assert_eq!(plus_bullet(&src("dia (p | q)")), parse("dia (p | q)").unwrap());
        assert_eq!(minus_bullet(&src("box p")), parse("neg box neg p").unwrap());
        assert_eq!(minus_bullet(&src("dia q")), parse("neg dia neg q").unwrap());
        assert_eq!(minus_bullet(&src("box (p | q)")), parse("neg box neg (p | q)").unwrap());
    }

    #[test]
    fn nabla_examples() {
        assert_eq!(nabla(&src("p")), parse("~~p").unwrap());
        assert_eq!(nabla(&src("p -> q")), parse("~~(~~p -> ~~q)").unwrap());
        assert_eq!(nabla(&src("box p")), parse("~~box ~~p").unwrap());
    }

    #[test]
    fn partial_examples() {
        assert_eq!(partial(&src("p")), parse("1 -< (1 -< p)").unwrap());
        assert_eq!(partial(&src("p & q")), parse("(1 -< (1 -< p)) | (1 -< (1 -< q))").unwrap());
        assert_eq!(partial(&src("box p")).to_string(), "box (1 -< (1 -< p))");
    }

    #[test]
    fn translations_are_linear() {
        for s in ["box (p -> q) -> (box p -> box q)", "dia (p & q) | box 0", "p -< dia q"] {
            let phi = src(s);
            for k in [TranslationKind::PlusBullet, TranslationKind::MinusBullet, TranslationKind::Nabla, TranslationKind::Partial] {
                assert!(k.apply(&phi).size() <= 5 * phi.size(), "{k} {s}");
            }
        }
    }

    #[test]
    fn nabla_of_k_theorem_is_proved() {
        let phi = src("box (p -> q) -> (box p -> box q)");
        assert!(prove(&nabla(&phi), Mode::Pos).unwrap().is_proved());
    }

    #[test]
    fn shadow_examples() {
        let mut m = KripkeModel::new(["t", "f1", "f2"]).unwrap();
        m.set_rel(Sign::Minus, "t", "f1", Rational01::one()).unwrap();
        m.set_rel(Sign::Minus, "t", "f2", r(1, 2)).unwrap();
        m.set_rel(Sign::Plus, "t", "f2", Rational01::one()).unwrap();
        m.set_val("f1", "p", r(1, 2), Rational01::one()).unwrap();
        m.set_val("f2", "p", Rational01::one(), r(1, 2)).unwrap();
        let s = shadow_model(&m);
        assert!(s.edges.contains(&("t".into(), "f1".into())));
        assert!(!s.edges.contains(&("t".into(), "f2".into())));
        assert!(s.truths.contains(&("f1".into(), "p".into())));
        assert!(!s.truths.contains(&("f2".into(), "p".into())));
        assert!(s.holds("t", &src("box p")).unwrap());
        assert!(!s.holds("t", &src("box ~p")).unwrap());
    }

    #[test]
    fn partial_tracks_shadow_truth() {
        let mut m = KripkeModel::new(["a", "b"]).unwrap();
        m.set_rel(Sign::Minus, "a", "b", Rational01::one()).unwrap();
        m.set_rel(Sign::Minus, "b", "b", Rational01::one()).unwrap();
        m.set_val("b", "p", r(1, 3), Rational01::one()).unwrap();
        let s = shadow_model(&m);
        for text in ["box p", "dia ~p", "box (p -> q) -> (box p -> box q)", "p -< q", "box 0 | dia p"] {
            let phi = src(text);
            let wrapped = Formula::coimpl(Formula::Top, partial(&phi));
            for w in ["a", "b"] {
                let v2 = m.eval(w, &wrapped).unwrap();
                assert_eq!(s.holds(w, &phi).unwrap(), v2.get(Coord::Two).is_zero(), "{text} at {w}");
            }
        }
    }

    #[test]
    fn single_relation_semantics() {
        let frame = FuzzyFrame::new(["t", "f"]).with_edge("t", "f", r(1, 2));
        let mut m = SingleRelationModel::new(frame);
        m.val.insert(("f".into(), "p".into()), r(1, 3));
        assert_eq!(m.eval("t", &src("box p")).unwrap(), r(1, 3));
        assert_eq!(m.eval("t", &src("dia p")).unwrap(), r(1, 3));
        m.val.insert(("f".into(), "p".into()), r(2, 3));
        assert_eq!(m.eval("t", &src("box p")).unwrap(), Rational01::one());
        assert_eq!(m.eval("t", &src("dia p")).unwrap(), r(1, 2));
        assert_eq!(m.eval("f", &src("box 0")).unwrap(), Rational01::one());
        assert!(m.eval("x", &src("p")).is_err());
    }
}
