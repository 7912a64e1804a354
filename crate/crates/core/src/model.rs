//! Finite fuzzy bi-relational Kripke models and the paired-valuation evaluator.

use std::collections::{BTreeMap, HashMap};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::algebra::{Rational01, ValueError};
use crate::formula::Formula;

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("model has no worlds")]
    NoWorlds,
    #[error("duplicate world `{0}`")]
    DuplicateWorld(String),
    #[error("unknown world `{0}`")]
    UnknownWorld(String),
    #[error("bad value for {context}: {source}")]
    Value {
        context: String,
        #[source]
        source: ValueError,
    },
    #[error("malformed model file: {0}")]
    Json(#[from] serde_json::Error),
    #[error("world sets differ between frame and counterpart relation")]
    WorldSetMismatch,
}

/// Which accessibility relation: R⁺ (trust in affirmations) or R⁻ (trust in
/// denials).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Sign {
    Plus,
    Minus,
}

/// Support coordinate: 1 is positive support (v1), 2 negative support (v2).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Coord {
    One,
    Two,
}

impl Coord {
    pub fn other(self) -> Coord {
        match self {
            Coord::One => Coord::Two,
            Coord::Two => Coord::One,
        }
    }

    /// The relation a modality reads along for this coordinate.
    pub fn relation(self) -> Sign {
        match self {
            Coord::One => Sign::Plus,
            Coord::Two => Sign::Minus,
        }
    }

    pub fn number(self) -> u8 {
        match self {
            Coord::One => 1,
            Coord::Two => 2,
        }
    }
}

impl fmt::Display for Coord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.number())
    }
}

/// Validity notion: v1 = 1 everywhere, v2 = 0 everywhere, or both.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Mode {
    Pos,
    Neg,
    Strong,
}

impl Mode {
    /// Whether a value pair violates this validity notion.
    pub fn violated_by(self, v: &ValuePair) -> bool {
        let pos_bad = !v.pos.is_one();
        let neg_bad = !v.neg.is_zero();
        match self {
            Mode::Pos => pos_bad,
            Mode::Neg => neg_bad,
            Mode::Strong => pos_bad || neg_bad,
        }
    }
}

impl std::str::FromStr for Mode {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "pos" => Ok(Mode::Pos),
            "neg" => Ok(Mode::Neg),
            "strong" => Ok(Mode::Strong),
            _ => Err(format!("unknown mode `{s}` (expected pos, neg or strong)")),
        }
    }
}

/// Positive and negative support of a formula at a world. The two
/// coordinates are independent.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ValuePair {
    pub pos: Rational01,
    pub neg: Rational01,
}

impl ValuePair {
    pub fn new(pos: Rational01, neg: Rational01) -> Self {
        ValuePair { pos, neg }
    }

    pub fn zero() -> Self {
        ValuePair::new(Rational01::zero(), Rational01::zero())
    }

    pub fn swap(&self) -> Self {
        ValuePair::new(self.neg.clone(), self.pos.clone())
    }

    pub fn get(&self, c: Coord) -> &Rational01 {
        match c {
            Coord::One => &self.pos,
            Coord::Two => &self.neg,
        }
    }
}

impl fmt::Display for ValuePair {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.pos, self.neg)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FramePredicates {
    pub crisp_plus: bool,
    pub crisp_minus: bool,
    pub mono_relational: bool,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ValidityReport {
    pub holds: bool,
    /// First falsifying world (in world order) and its value pair.
    pub witness: Option<(String, ValuePair)>,
}

/// A finite model. Absent relation pairs are 0 and absent atoms are (0, 0).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct KripkeModel {
    worlds: Vec<String>,
    index: HashMap<String, usize>,
    rplus: BTreeMap<(usize, usize), Rational01>,
    rminus: BTreeMap<(usize, usize), Rational01>,
    val: BTreeMap<(usize, String), ValuePair>,
}

impl KripkeModel {
    pub fn new<I, S>(worlds: I) -> Result<Self, ModelError>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let worlds: Vec<String> = worlds.into_iter().map(Into::into).collect();
        if worlds.is_empty() {
            return Err(ModelError::NoWorlds);
        }
        let mut index = HashMap::new();
        for (i, w) in worlds.iter().enumerate() {
            if index.insert(w.clone(), i).is_some() {
                return Err(ModelError::DuplicateWorld(w.clone()));
            }
        }
        Ok(KripkeModel {
            worlds,
            index,
            rplus: BTreeMap::new(),
            rminus: BTreeMap::new(),
            val: BTreeMap::new(),
        })
    }

    pub fn worlds(&self) -> &[String] {
        &self.worlds
    }

    pub fn world_count(&self) -> usize {
        self.worlds.len()
    }

    pub fn world_index(&self, name: &str) -> Result<usize, ModelError> {
        self.index
            .get(name)
            .copied()
            .ok_or_else(|| ModelError::UnknownWorld(name.to_string()))
    }

    fn relation_map(&self, sign: Sign) -> &BTreeMap<(usize, usize), Rational01> {
        match sign {
            Sign::Plus => &self.rplus,
            Sign::Minus => &self.rminus,
        }
    }

    pub fn set_rel_idx(&mut self, sign: Sign, from: usize, to: usize, v: Rational01) {
        let map = match sign {
            Sign::Plus => &mut self.rplus,
            Sign::Minus => &mut self.rminus,
        };
        map.insert((from, to), v);
    }

    pub fn set_rel(&mut self, sign: Sign, from: &str, to: &str, v: Rational01) -> Result<(), ModelError> {
        let (i, j) = (self.world_index(from)?, self.world_index(to)?);
        self.set_rel_idx(sign, i, j, v);
        Ok(())
    }

    pub fn set_val_idx(&mut self, world: usize, atom: &str, v: ValuePair) {
        self.val.insert((world, atom.to_string()), v);
    }

    pub fn set_val(&mut self, world: &str, atom: &str, pos: Rational01, neg: Rational01) -> Result<(), ModelError> {
        let w = self.world_index(world)?;
        self.set_val_idx(w, atom, ValuePair::new(pos, neg));
        Ok(())
    }

    pub fn remove_atom(&mut self, atom: &str) {
        self.val.retain(|(_, a), _| a != atom);
    }

    pub fn rel(&self, sign: Sign, from: usize, to: usize) -> Rational01 {
        self.relation_map(sign)
            .get(&(from, to))
            .cloned()
            .unwrap_or_else(Rational01::zero)
    }

    pub fn val(&self, world: usize, atom: &str) -> ValuePair {
        self.val
            .get(&(world, atom.to_string()))
            .cloned()
            .unwrap_or_else(ValuePair::zero)
    }

    /// Stored relation entries, sorted by (from, to).
    pub fn relation_entries(&self, sign: Sign) -> impl Iterator<Item = (usize, usize, &Rational01)> {
        self.relation_map(sign).iter().map(|(&(i, j), v)| (i, j, v))
    }

    pub fn valuation_entries(&self) -> impl Iterator<Item = (usize, &str, &ValuePair)> {
        self.val.iter().map(|((w, a), v)| (*w, a.as_str(), v))
    }

    /// Values of `phi` at every world, in world order.
    pub fn eval_all(&self, phi: &Formula) -> Vec<ValuePair> {
        if phi.is_core() {
            self.eval_core(phi)
        } else {
            self.eval_core(&phi.desugar())
        }
    }

    pub fn eval(&self, world: &str, phi: &Formula) -> Result<ValuePair, ModelError> {
        let w = self.world_index(world)?;
        Ok(self.eval_at(w, phi))
    }

    pub fn eval_at(&self, world: usize, phi: &Formula) -> ValuePair {
        self.eval_all(phi).swap_remove(world)
    }

    fn eval_core(&self, phi: &Formula) -> Vec<ValuePair> {
        let n = self.worlds.len();
        match phi {
            Formula::Atom(p) => (0..n).map(|w| self.val(w, p)).collect(),
            Formula::Neg(a) => self.eval_core(a).iter().map(ValuePair::swap).collect(),
            Formula::And(a, b) => {
                let (va, vb) = (self.eval_core(a), self.eval_core(b));
                va.iter()
                    .zip(&vb)
                    .map(|(x, y)| ValuePair::new(x.pos.meet(&y.pos), x.neg.join(&y.neg)))
                    .collect()
            }
            Formula::Impl(a, b) => {
                let (va, vb) = (self.eval_core(a), self.eval_core(b));
                va.iter()
                    .zip(&vb)
                    .map(|(x, y)| ValuePair::new(x.pos.gimpl(&y.pos), y.neg.gcoimpl(&x.neg)))
                    .collect()
            }
            Formula::Square(a) => {
                let va = self.eval_core(a);
                (0..n)
                    .map(|w| {
                        let mut pos = Rational01::one();
                        let mut neg = Rational01::one();
                        for (u, x) in va.iter().enumerate() {
                            pos = pos.meet(&self.rel(Sign::Plus, w, u).gimpl(&x.pos));
                            neg = neg.meet(&self.rel(Sign::Minus, w, u).gimpl(&x.neg));
                        }
                        ValuePair::new(pos, neg)
                    })
                    .collect()
            }
            Formula::Diamond(a) => {
                let va = self.eval_core(a);
                (0..n)
                    .map(|w| {
                        let mut pos = Rational01::zero();
                        let mut neg = Rational01::zero();
                        for (u, x) in va.iter().enumerate() {
                            pos = pos.join(&self.rel(Sign::Plus, w, u).meet(&x.pos));
                            neg = neg.join(&self.rel(Sign::Minus, w, u).meet(&x.neg));
                        }
                        ValuePair::new(pos, neg)
                    })
                    .collect()
            }
            _ => unreachable!("eval_core called on sugared formula"),
        }
    }

    pub fn check_validity(&self, phi: &Formula, mode: Mode) -> ValidityReport {
        let values = self.eval_all(phi);
        let witness = values
            .into_iter()
            .enumerate()
            .find(|(_, v)| mode.violated_by(v))
            .map(|(w, v)| (self.worlds[w].clone(), v));
        ValidityReport { holds: witness.is_none(), witness }
    }

    pub fn frame_predicates(&self) -> FramePredicates {
        let crisp = |m: &BTreeMap<_, Rational01>| m.values().all(Rational01::is_crisp);
        let n = self.worlds.len();
        let mono = (0..n).all(|i| (0..n).all(|j| self.rel(Sign::Plus, i, j) == self.rel(Sign::Minus, i, j)));
        FramePredicates {
            crisp_plus: crisp(&self.rplus),
            crisp_minus: crisp(&self.rminus),
            mono_relational: mono,
        }
    }

    pub fn from_json(text: &str) -> Result<Self, ModelError> {
        let file: ModelFile = serde_json::from_str(text)?;
        file.into_model()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&ModelFile::from_model(self)).expect("model serialises")
    }
}

pub fn eval(m: &KripkeModel, world: &str, phi: &Formula) -> Result<ValuePair, ModelError> {
    m.eval(world, phi)
}

pub fn check_validity_on_model(m: &KripkeModel, phi: &Formula, mode: Mode) -> ValidityReport {
    m.check_validity(phi, mode)
}

pub fn frame_predicates(m: &KripkeModel) -> FramePredicates {
    m.frame_predicates()
}

/// A frame with a single fuzzy accessibility relation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FuzzyFrame {
    pub worlds: Vec<String>,
    pub edges: BTreeMap<(String, String), Rational01>,
}

impl FuzzyFrame {
    pub fn new<I, S>(worlds: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        FuzzyFrame { worlds: worlds.into_iter().map(Into::into).collect(), edges: BTreeMap::new() }
    }

    pub fn with_edge(mut self, from: &str, to: &str, v: Rational01) -> Self {
        self.edges.insert((from.to_string(), to.to_string()), v);
        self
    }
}

/// Embeds a single-relation frame into a bi-relational one. `Sign::Plus`
/// makes the frame's relation R⁺ and `other` R⁻; `Sign::Minus` the reverse.
pub fn attach_counterpart(frame: &FuzzyFrame, other: &FuzzyFrame, side: Sign) -> Result<KripkeModel, ModelError> {
    let mut a = frame.worlds.clone();
    let mut b = other.worlds.clone();
    a.sort();
    b.sort();
    if a != b {
        return Err(ModelError::WorldSetMismatch);
    }
    let mut m = KripkeModel::new(frame.worlds.iter().cloned())?;
    let (given, rest) = match side {
        Sign::Plus => (Sign::Plus, Sign::Minus),
        Sign::Minus => (Sign::Minus, Sign::Plus),
    };
    for ((u, v), x) in &frame.edges {
        m.set_rel(given, u, v, x.clone())?;
    }
    for ((u, v), x) in &other.edges {
        m.set_rel(rest, u, v, x.clone())?;
    }
    Ok(m)
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(untagged)]
enum JsonValue {
    Text(String),
    Number(serde_json::Number),
}

impl JsonValue {
    fn parse(&self, context: impl Fn() -> String) -> Result<Rational01, ModelError> {
        let text = match self {
            JsonValue::Text(s) => s.clone(),
            JsonValue::Number(n) => n.to_string(),
        };
        text.parse().map_err(|source| ModelError::Value { context: context(), source })
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct ModelFile {
    worlds: Vec<String>,
    #[serde(default)]
    rplus: Vec<(String, String, JsonValue)>,
    #[serde(default)]
    rminus: Vec<(String, String, JsonValue)>,
    #[serde(default)]
    val: Vec<(String, String, JsonValue, JsonValue)>,
}

impl ModelFile {
    fn into_model(self) -> Result<KripkeModel, ModelError> {
        let mut m = KripkeModel::new(self.worlds)?;
        for (sign, entries) in [(Sign::Plus, &self.rplus), (Sign::Minus, &self.rminus)] {
            for (u, v, x) in entries {
                let x = x.parse(|| format!("relation {u}->{v}"))?;
                m.set_rel(sign, u, v, x)?;
            }
        }
        for (w, atom, x, y) in &self.val {
            let pos = x.parse(|| format!("v1({atom}, {w})"))?;
            let neg = y.parse(|| format!("v2({atom}, {w})"))?;
            m.set_val(w, atom, pos, neg)?;
        }
        Ok(m)
    }

    fn from_model(m: &KripkeModel) -> Self {
        let name = |i: usize| m.worlds[i].clone();
        let rel = |sign| {
            m.relation_entries(sign)
                .map(|(i, j, v)| (name(i), name(j), JsonValue::Text(v.to_string())))
                .collect()
        };
        ModelFile {
            worlds: m.worlds.clone(),
            rplus: rel(Sign::Plus),
            rminus: rel(Sign::Minus),
            val: m
                .valuation_entries()
                .map(|(w, a, v)| {
                    (name(w), a.to_string(), JsonValue::Text(v.pos.to_string()), JsonValue::Text(v.neg.to_string()))
                })
                .collect(),
        }
    }
}
