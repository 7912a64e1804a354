//! Constraint tableaux over finitely branching bi-relational frames.
//!
//! A branch is a set of order constraints `X <= Y` / `X < Y` between
//! structures: a formula's support at a labelled world and coordinate, a
//! relation term, or one of the constants 0 and 1. Rules decompose formula
//! structures until only atomic ones remain; a branch closes when its
//! constraint graph contains a strict cycle (the constants come with the
//! implicit edges `0 <= s <= 1` and `0 < 1`). Complete open branches are
//! turned into countermodels and re-checked against the evaluator.

use std::collections::{HashMap, HashSet};
use std::fmt;
use std::sync::Arc;

use petgraph::algo::tarjan_scc;
use petgraph::graph::{DiGraph, NodeIndex};
use thiserror::Error;

use crate::algebra::Rational01;
use crate::formula::{Formula, RESERVED_ATOM};
use crate::model::{Coord, KripkeModel, Mode, Sign, ValuePair};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TableauError {
    #[error("resource limit exceeded: {0}")]
    ResourceLimit(String),
    /// The extracted model violates a constraint of its branch. This is an
    /// engine defect, not a legal outcome.
    #[error("realisation failure: {0}")]
    RealisationFailure(String),
}

#[derive(Debug, Clone)]
pub struct TableauConfig {
    pub max_worlds: usize,
    pub max_constraints: usize,
    pub max_branches: usize,
    pub record_transcript: bool,
}

impl Default for TableauConfig {
    fn default() -> Self {
        TableauConfig { max_worlds: 64, max_constraints: 20_000, max_branches: 200_000, record_transcript: false }
    }
}

/// A tableau structure with named worlds.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Structure {
    Zero,
    One,
    At { world: String, coord: Coord, formula: Formula },
    Rel { from: String, sign: Sign, to: String },
}

impl Structure {
    pub fn at(world: impl Into<String>, coord: Coord, formula: Formula) -> Self {
        Structure::At { world: world.into(), coord, formula }
    }

    pub fn rel(from: impl Into<String>, sign: Sign, to: impl Into<String>) -> Self {
        Structure::Rel { from: from.into(), sign, to: to.into() }
    }

    pub fn is_atomic(&self) -> bool {
        matches!(self, Structure::Rel { .. } | Structure::At { formula: Formula::Atom(_), .. })
    }

    /// The value of the structure in a model, if its worlds exist there.
    pub fn value_in(&self, m: &KripkeModel) -> Option<Rational01> {
        Some(match self {
            Structure::Zero => Rational01::zero(),
            Structure::One => Rational01::one(),
            Structure::At { world, coord, formula } => {
                let w = m.world_index(world).ok()?;
                m.eval_at(w, formula).get(*coord).clone()
            }
            Structure::Rel { from, sign, to } => m.rel(*sign, m.world_index(from).ok()?, m.world_index(to).ok()?),
        })
    }
}

impl fmt::Display for Structure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Structure::Zero => write!(f, "0"),
            Structure::One => write!(f, "1"),
            Structure::At { world, coord, formula } => write_at(f, world, *coord, formula),
            Structure::Rel { from, sign, to } => write!(f, "{from}{}{to}", sign_tag(*sign)),
        }
    }
}

fn sign_tag(s: Sign) -> &'static str {
    match s {
        Sign::Plus => "R+",
        Sign::Minus => "R-",
    }
}

fn write_at(f: &mut fmt::Formatter<'_>, world: &str, coord: Coord, formula: &Formula) -> fmt::Result {
    let compound = matches!(formula, Formula::And(..) | Formula::Impl(..)) && formula.to_string() != "1";
    if compound {
        write!(f, "{world}:{coord}:({formula})")
    } else {
        write!(f, "{world}:{coord}:{formula}")
    }
}

/// `left <= right`, or `left < right` when strict.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Constraint {
    pub left: Structure,
    pub right: Structure,
    pub strict: bool,
}

impl Constraint {
    pub fn le(left: Structure, right: Structure) -> Self {
        Constraint { left, right, strict: false }
    }
    pub fn lt(left: Structure, right: Structure) -> Self {
        Constraint { left, right, strict: true }
    }
    pub fn ge(left: Structure, right: Structure) -> Self {
        Constraint::le(right, left)
    }
    pub fn gt(left: Structure, right: Structure) -> Self {
        Constraint::lt(right, left)
    }

    /// Whether the model realises the constraint; `None` if a world is
    /// missing from the model.
    pub fn holds_in(&self, m: &KripkeModel) -> Option<bool> {
        let (a, b) = (self.left.value_in(m)?, self.right.value_in(m)?);
        Some(if self.strict { a < b } else { a <= b })
    }
}

impl fmt::Display for Constraint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {} {}", self.left, if self.strict { "<" } else { "<=" }, self.right)
    }
}

/// Which side of a constraint a rule decomposes: the left structure of
/// `X <= Y` is bounded above, the right one below.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Side {
    Left,
    Right,
}

type FId = u32;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
enum Node {
    Atom,
    Neg(FId),
    And(FId, FId),
    Impl(FId, FId),
    Square(FId),
    Diamond(FId),
}

/// Hash-consed subformulas of the input; immutable once a run starts since
/// rules only ever produce subformulas.
#[derive(Debug, Default)]
struct Arena {
    nodes: Vec<Node>,
    formulas: Vec<Formula>,
    index: HashMap<Formula, FId>,
}

impl Arena {
    fn intern(&mut self, f: &Formula) -> FId {
        if let Some(&id) = self.index.get(f) {
            return id;
        }
        let node = match f {
            Formula::Atom(_) => Node::Atom,
            Formula::Neg(a) => Node::Neg(self.intern(a)),
            Formula::And(a, b) => Node::And(self.intern(a), self.intern(b)),
            Formula::Impl(a, b) => Node::Impl(self.intern(a), self.intern(b)),
            Formula::Square(a) => Node::Square(self.intern(a)),
            Formula::Diamond(a) => Node::Diamond(self.intern(a)),
            _ => return self.intern(&f.desugar()),
        };
        let id = self.nodes.len() as FId;
        self.nodes.push(node);
        self.formulas.push(f.clone());
        self.index.insert(f.clone(), id);
        id
    }
}

const FRESH: u32 = u32::MAX;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
enum Term {
    Zero,
    One,
    At(u32, Coord, FId),
    Rel(u32, Sign, u32),
}

impl Term {
    fn is_atomic(self, arena: &Arena) -> bool {
        match self {
            Term::Rel(..) => true,
            Term::At(_, _, f) => arena.nodes[f as usize] == Node::Atom,
            _ => false,
        }
    }

    fn with_fresh(self, w: u32) -> Term {
        let sub = |x: u32| if x == FRESH { w } else { x };
        match self {
            Term::At(x, c, f) => Term::At(sub(x), c, f),
            Term::Rel(x, s, y) => Term::Rel(sub(x), s, sub(y)),
            t => t,
        }
    }

    fn mentions_fresh(self) -> bool {
        match self {
            Term::At(x, ..) => x == FRESH,
            Term::Rel(x, _, y) => x == FRESH || y == FRESH,
            _ => false,
        }
    }
}

type Edge = (Term, Term, bool);

/// One rule application: every alternative is a set of constraints; rules
/// with one alternative do not branch.
#[derive(Debug, Clone)]
struct Application {
    name: String,
    alternatives: Vec<Vec<Edge>>,
}

const ZERO: usize = 0;
const ONE: usize = 1;
const NO_TARGET: usize = usize::MAX;

/// A tableau branch: interned structures, the constraint graph, and the rule
/// bookkeeping needed for saturation.
#[derive(Debug, Clone)]
pub struct Branch {
    arena: Arc<Arena>,
    worlds: Vec<String>,
    terms: Vec<Term>,
    term_ids: HashMap<Term, usize>,
    out: Vec<Vec<(usize, bool)>>,
    inc: Vec<Vec<(usize, bool)>>,
    constraints: Vec<(usize, usize, bool)>,
    strength: HashMap<(usize, usize), bool>,
    rels: Vec<usize>,
    applied: HashSet<(usize, Side, usize)>,
    /// Witness world of each modal structure that needed one.
    witnesses: HashMap<usize, u32>,
    closed: bool,
    id: String,
}

impl Branch {
    fn empty(arena: Arc<Arena>, worlds: Vec<String>) -> Self {
        let mut b = Branch {
            arena,
            worlds,
            terms: Vec::new(),
            term_ids: HashMap::new(),
            out: Vec::new(),
            inc: Vec::new(),
            constraints: Vec::new(),
            strength: HashMap::new(),
            rels: Vec::new(),
            applied: HashSet::new(),
            witnesses: HashMap::new(),
            closed: false,
            id: "b0".to_string(),
        };
        b.intern(Term::Zero);
        b.intern(Term::One);
        b
    }

    /// Builds a branch holding exactly the given constraints.
    pub fn from_constraints(constraints: &[Constraint]) -> Branch {
        let mut arena = Arena::default();
        let mut worlds: Vec<String> = Vec::new();
        let world_id = |name: &str, worlds: &mut Vec<String>| -> u32 {
            match worlds.iter().position(|w| w == name) {
                Some(i) => i as u32,
                None => {
                    worlds.push(name.to_string());
                    (worlds.len() - 1) as u32
                }
            }
        };
        let mut edges = Vec::new();
        for c in constraints {
            let mut term = |s: &Structure| match s {
                Structure::Zero => Term::Zero,
                Structure::One => Term::One,
                Structure::At { world, coord, formula } => {
                    Term::At(world_id(world, &mut worlds), *coord, arena.intern(formula))
                }
                Structure::Rel { from, sign, to } => {
                    Term::Rel(world_id(from, &mut worlds), *sign, world_id(to, &mut worlds))
                }
            };
            let (l, r) = (term(&c.left), term(&c.right));
            edges.push((l, r, c.strict));
        }
        let mut b = Branch::empty(Arc::new(arena), worlds);
        for (l, r, s) in edges {
            b.add(l, r, s);
        }
        b
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn is_closed(&self) -> bool {
        self.closed
    }

    pub fn world_names(&self) -> &[String] {
        &self.worlds
    }

    /// The constraints on the branch, in insertion order.
    pub fn constraints(&self) -> Vec<Constraint> {
        self.constraints
            .iter()
            .map(|&(a, b, s)| Constraint { left: self.structure(self.terms[a]), right: self.structure(self.terms[b]), strict: s })
            .collect()
    }

    fn structure(&self, t: Term) -> Structure {
        match t {
            Term::Zero => Structure::Zero,
            Term::One => Structure::One,
            Term::At(w, c, f) => Structure::at(self.world_name(w), c, self.arena.formulas[f as usize].clone()),
            Term::Rel(x, s, y) => Structure::rel(self.world_name(x), s, self.world_name(y)),
        }
    }

    fn world_name(&self, w: u32) -> String {
        if w == FRESH {
            "w*".to_string()
        } else {
            self.worlds[w as usize].clone()
        }
    }

    fn show(&self, t: Term) -> String {
        self.structure(t).to_string()
    }

    fn show_edge(&self, &(a, b, s): &Edge) -> String {
        format!("{} {} {}", self.show(a), if s { "<" } else { "<=" }, self.show(b))
    }

    fn intern(&mut self, t: Term) -> usize {
        if let Some(&id) = self.term_ids.get(&t) {
            return id;
        }
        let id = self.terms.len();
        self.terms.push(t);
        self.term_ids.insert(t, id);
        self.out.push(Vec::new());
        self.inc.push(Vec::new());
        if matches!(t, Term::Rel(..)) {
            self.rels.push(id);
        }
        id
    }

    fn is_trivial(a: Term, b: Term, strict: bool) -> bool {
        !strict && (a == Term::Zero || b == Term::One || a == b)
    }

    fn present(&self, a: Term, b: Term, strict: bool) -> bool {
        if Self::is_trivial(a, b, strict) {
            return true;
        }
        match (self.term_ids.get(&a), self.term_ids.get(&b)) {
            (Some(&x), Some(&y)) => matches!(self.strength.get(&(x, y)), Some(&s) if s || !strict),
            _ => false,
        }
    }

    /// Adds a constraint; returns false if it was trivial or already
    /// subsumed. Updates the closure flag incrementally.
    fn add(&mut self, a: Term, b: Term, strict: bool) -> bool {
        if self.present(a, b, strict) {
            return false;
        }
        let (x, y) = (self.intern(a), self.intern(b));
        self.strength.insert((x, y), strict);
        self.constraints.push((x, y, strict));
        self.out[x].push((y, strict));
        self.inc[y].push((x, strict));
        if self.path_closes(y, x, strict) {
            self.closed = true;
        }
        true
    }

    /// Whether there is a path `from ->* to` that is strict, or any path when
    /// `strict` is already set by the new edge `to -> from`.
    fn path_closes(&self, from: usize, to: usize, strict: bool) -> bool {
        let n = self.terms.len();
        let mut seen = vec![[false; 2]; n];
        let mut stack = vec![(from, strict)];
        while let Some((v, s)) = stack.pop() {
            if v == to && s {
                return true;
            }
            if seen[v][s as usize] || (!s && seen[v][1]) {
                continue;
            }
            seen[v][s as usize] = true;
            for &(u, e) in &self.out[v] {
                stack.push((u, s || e));
            }
            if v == ZERO {
                for u in 1..n {
                    stack.push((u, s || u == ONE));
                }
            } else if v != ONE {
                stack.push((ONE, s));
            }
        }
        false
    }

    /// Full closure test on the constraint graph with the constant axioms:
    /// closed iff some strongly connected component contains a strict edge.
    pub fn close_check(&self) -> bool {
        let (g, _) = self.graph(&[]);
        let sccs = tarjan_scc(&g);
        let mut comp = vec![0usize; g.node_count()];
        for (i, c) in sccs.iter().enumerate() {
            for n in c {
                comp[n.index()] = i;
            }
        }
        g.edge_indices().any(|e| {
            let (a, b) = g.edge_endpoints(e).unwrap();
            g[e] && comp[a.index()] == comp[b.index()]
        })
    }

    /// Constraint graph over all terms including implicit constant edges,
    /// plus `extra` edges.
    fn graph(&self, extra: &[(usize, usize, bool)]) -> (DiGraph<usize, bool>, Vec<NodeIndex>) {
        let mut g = DiGraph::new();
        let ids: Vec<NodeIndex> = (0..self.terms.len()).map(|i| g.add_node(i)).collect();
        for &(a, b, s) in self.constraints.iter().chain(extra) {
            g.add_edge(ids[a], ids[b], s);
        }
        g.add_edge(ids[ZERO], ids[ONE], true);
        for t in 2..self.terms.len() {
            g.add_edge(ids[ZERO], ids[t], false);
            g.add_edge(ids[t], ids[ONE], false);
        }
        (g, ids)
    }

    /// Whether a strict edge is reachable from `start` along explicit edges.
    fn reaches_strict(&self, start: usize) -> bool {
        let mut seen = vec![false; self.terms.len()];
        let mut stack = vec![start];
        while let Some(v) = stack.pop() {
            if std::mem::replace(&mut seen[v], true) {
                continue;
            }
            for &(u, s) in &self.out[v] {
                if s {
                    return true;
                }
                stack.push(u);
            }
        }
        false
    }

    fn skip_as_redundant(&self, cid: usize, side: Side) -> bool {
        let (x, y, strict) = self.constraints[cid];
        if !strict {
            // A strict version of the same pair subsumes this one.
            return self.strength.get(&(x, y)) == Some(&true);
        }
        match side {
            Side::Left if y == ONE => self.out[x].iter().any(|&(z, s)| s && z != ONE),
            Side::Right if x == ZERO => self.inc[y].iter().any(|&(z, s)| s && z != ZERO),
            _ => false,
        }
    }

    /// The rule that would fire on `(cid, side)`, with its priority:
    /// 0 plain propositional, 1 branching propositional, 2 fresh-world
    /// modal, 3 modal rules reusing worlds on the branch.
    fn candidate(&self, cid: usize, side: Side) -> Option<(u8, usize)> {
        let (x, y, strict) = self.constraints[cid];
        let premise = match side {
            Side::Left => self.terms[x],
            Side::Right => self.terms[y],
        };
        let Term::At(w, coord, f) = premise else { return None };
        let node = self.arena.nodes[f as usize];
        let one = coord == Coord::One;
        let left = side == Side::Left;
        let priority = match node {
            Node::Atom => return None,
            Node::Neg(_) => 0,
            Node::And(..) => {
                if one != left {
                    0
                } else {
                    1
                }
            }
            Node::Impl(..) => {
                if strict && ((one && left) || (!one && !left)) {
                    0
                } else {
                    1
                }
            }
            Node::Square(_) if left => 2,
            Node::Diamond(_) if !left => 2,
            Node::Square(_) | Node::Diamond(_) => {
                let sign = coord.relation();
                let target = self.rels.iter().copied().find(|&r| {
                    matches!(self.terms[r], Term::Rel(a, s, _) if a == w && s == sign)
                        && !self.applied.contains(&(cid, side, r))
                })?;
                return (!self.skip_as_redundant(cid, side)).then_some((3, target));
            }
        };
        if self.applied.contains(&(cid, side, NO_TARGET)) || self.skip_as_redundant(cid, side) {
            return None;
        }
        Some((priority, NO_TARGET))
    }

    fn next_rule(&self) -> Option<(usize, Side, usize)> {
        let mut best: Option<(u8, usize, Side, usize)> = None;
        for cid in 0..self.constraints.len() {
            for side in [Side::Left, Side::Right] {
                if let Some((p, target)) = self.candidate(cid, side) {
                    if best.is_none_or(|(bp, ..)| p < bp) {
                        best = Some((p, cid, side, target));
                        if p == 0 {
                            return Some((cid, side, target));
                        }
                    }
                }
            }
        }
        best.map(|(_, c, s, t)| (c, s, t))
    }

    /// Conclusions of the rule for `(cid, side)`; fresh worlds appear as
    /// `FRESH` and state-reusing rules use the relation term `target`.
    fn application(&self, cid: usize, side: Side, target: usize) -> Application {
        let (x, y, strict) = self.constraints[cid];
        let bound = match side {
            Side::Left => self.terms[y],
            Side::Right => self.terms[x],
        };
        let premise = match side {
            Side::Left => self.terms[x],
            Side::Right => self.terms[y],
        };
        let Term::At(w, coord, f) = premise else { unreachable!("rules fire on formula structures") };
        let target = (target != NO_TARGET).then(|| self.terms[target]);
        conclusions(&self.arena, w, coord, f, bound, strict, side, target)
    }

    /// Fresh label for a new world, never colliding with existing names.
    fn fresh_world(&mut self) -> u32 {
        let mut k = self.worlds.len();
        let name = loop {
            let candidate = format!("w{k}");
            if !self.worlds.contains(&candidate) {
                break candidate;
            }
            k += 1;
        };
        self.worlds.push(name);
        (self.worlds.len() - 1) as u32
    }

    fn satisfied(&self, alt: &[Edge]) -> bool {
        alt.iter().all(|&(a, b, s)| !a.mentions_fresh() && !b.mentions_fresh() && self.present(a, b, s))
    }

    /// Adds one alternative of a rule fired on the structure `premise`. A
    /// modal structure gets one witness world, shared by all its bounds: in
    /// a finitely branching model the successor attaining the minimum (for
    /// ■) or maximum (for ♦) witnesses every bound at once.
    fn add_alternative(&mut self, alt: &[Edge], premise: usize, config: &TableauConfig) -> Result<Vec<Edge>, TableauError> {
        let fresh = if alt.iter().any(|&(a, b, _)| a.mentions_fresh() || b.mentions_fresh()) {
            match self.witnesses.get(&premise) {
                Some(&w) => Some(w),
                None => {
                    if self.worlds.len() >= config.max_worlds {
                        return Err(TableauError::ResourceLimit(format!(
                            "more than {} worlds on a branch",
                            config.max_worlds
                        )));
                    }
                    let w = self.fresh_world();
                    self.witnesses.insert(premise, w);
                    Some(w)
                }
            }
        } else {
            None
        };
        let mut added = Vec::new();
        for &(a, b, s) in alt {
            let (a, b) = match fresh {
                Some(w) => (a.with_fresh(w), b.with_fresh(w)),
                None => (a, b),
            };
            added.push((a, b, s));
            self.add(a, b, s);
            if self.closed {
                break;
            }
        }
        if self.constraints.len() > config.max_constraints {
            return Err(TableauError::ResourceLimit(format!(
                "more than {} constraints on a branch",
                config.max_constraints
            )));
        }
        Ok(added)
    }
}

/// The rule schemata. `bound` is the other side of the premise constraint;
/// for `Side::Left` the premise reads `P <= bound` (or `<`), for
/// `Side::Right` it reads `P >= bound` (or `>`).
#[allow(clippy::too_many_arguments)]
fn conclusions(
    arena: &Arena,
    w: u32,
    coord: Coord,
    f: FId,
    bound: Term,
    strict: bool,
    side: Side,
    target: Option<Term>,
) -> Application {
    let at = |g: FId| Term::At(w, coord, g);
    // Same comparison as the premise, with `t` in the premise's place.
    let same = |t: Term| -> Edge {
        match side {
            Side::Left => (t, bound, strict),
            Side::Right => (bound, t, strict),
        }
    };
    let le = |a: Term, b: Term| -> Edge { (a, b, false) };
    let lt = |a: Term, b: Term| -> Edge { (a, b, true) };
    let cmp = match (side, strict) {
        (Side::Left, false) => "<=",
        (Side::Left, true) => "<",
        (Side::Right, false) => ">=",
        (Side::Right, true) => ">",
    };
    let i = coord.number();
    let left = side == Side::Left;
    let sign = coord.relation();
    let (conn, alternatives): (&str, Vec<Vec<Edge>>) = match arena.nodes[f as usize] {
        Node::Atom => unreachable!("atomic structures have no rules"),
        Node::Neg(g) => ("neg", vec![vec![same(Term::At(w, coord.other(), g))]]),
        Node::And(g, h) => {
            let conjunctive = (coord == Coord::One) != left;
            if conjunctive {
                ("and", vec![vec![same(at(g)), same(at(h))]])
            } else {
                ("and", vec![vec![same(at(g))], vec![same(at(h))]])
            }
        }
        Node::Impl(g, h) => {
            let (g, h) = (at(g), at(h));
            let alts = match (coord, side, strict) {
                (Coord::One, Side::Left, false) => vec![vec![le(Term::One, bound)], vec![lt(bound, Term::One), le(h, bound), lt(h, g)]],
                (Coord::One, Side::Left, true) => vec![vec![lt(h, bound), lt(h, g)]],
                (Coord::One, Side::Right, _) => vec![vec![le(g, h)], vec![same(h)]],
                (Coord::Two, Side::Right, false) => vec![vec![le(bound, Term::Zero)], vec![lt(Term::Zero, bound), le(bound, h), lt(g, h)]],
                (Coord::Two, Side::Right, true) => vec![vec![lt(bound, h), lt(g, h)]],
                (Coord::Two, Side::Left, _) => vec![vec![le(h, g)], vec![same(h)]],
            };
            ("imp", alts)
        }
        Node::Square(g) => {
            let alts = if left {
                let rel = Term::Rel(w, sign, FRESH);
                let sub = Term::At(FRESH, coord, g);
                if strict {
                    vec![vec![lt(sub, rel), lt(sub, bound)]]
                } else {
                    vec![vec![le(Term::One, bound)], vec![lt(bound, Term::One), lt(sub, rel), le(sub, bound)]]
                }
            } else {
                let rel = target.expect("state-reusing rule needs a relation term");
                let Term::Rel(_, _, v) = rel else { unreachable!() };
                let sub = Term::At(v, coord, g);
                vec![vec![same(sub)], vec![le(rel, sub)]]
            };
            ("box", alts)
        }
        Node::Diamond(g) => {
            let alts = if left {
                let rel = target.expect("state-reusing rule needs a relation term");
                let Term::Rel(_, _, v) = rel else { unreachable!() };
                vec![vec![same(Term::At(v, coord, g))], vec![same(rel)]]
            } else {
                let rel = Term::Rel(w, sign, FRESH);
                vec![vec![same(rel), same(Term::At(FRESH, coord, g))]]
            };
            ("dia", alts)
        }
    };
    Application { name: format!("{conn}{i}{cmp}"), alternatives }
}

/// A rule instance on named structures, for inspection and testing.
#[derive(Debug, Clone)]
pub struct RuleInstance {
    pub name: String,
    /// Alternatives of the rule; one entry for non-branching rules.
    pub alternatives: Vec<Vec<Constraint>>,
}

/// Applies the rule matching `premise` on `side`. Fresh worlds are named
/// `fresh`; rules that reuse worlds read along the relation to `target`.
/// Returns `None` for atomic premises or when a reused-world rule has no
/// target.
pub fn apply_rule(premise: &Constraint, side: Side, fresh: &str, target: Option<&str>) -> Option<RuleInstance> {
    let b = Branch::from_constraints(std::slice::from_ref(premise));
    if b.constraints.is_empty() {
        return None;
    }
    let mut b = b;
    let (x, y, strict) = b.constraints[0];
    let premise_term = match side {
        Side::Left => b.terms[x],
        Side::Right => b.terms[y],
    };
    let Term::At(w, coord, f) = premise_term else { return None };
    let node = b.arena.nodes[f as usize];
    if node == Node::Atom {
        return None;
    }
    let reuses = matches!((node, side), (Node::Square(_), Side::Right) | (Node::Diamond(_), Side::Left));
    let target_term = if reuses {
        let name = target?;
        let v = match b.worlds.iter().position(|n| n == name) {
            Some(i) => i as u32,
            None => {
                b.worlds.push(name.to_string());
                (b.worlds.len() - 1) as u32
            }
        };
        Some(Term::Rel(w, coord.relation(), v))
    } else {
        None
    };
    let bound = match side {
        Side::Left => b.terms[y],
        Side::Right => b.terms[x],
    };
    let app = conclusions(&b.arena, w, coord, f, bound, strict, side, target_term);
    let fresh_id = match b.worlds.iter().position(|n| n == fresh) {
        Some(i) => i as u32,
        None => {
            b.worlds.push(fresh.to_string());
            (b.worlds.len() - 1) as u32
        }
    };
    let alternatives = app
        .alternatives
        .iter()
        .map(|alt| {
            alt.iter()
                .map(|&(l, r, s)| Constraint {
                    left: b.structure(l.with_fresh(fresh_id)),
                    right: b.structure(r.with_fresh(fresh_id)),
                    strict: s,
                })
                .collect()
        })
        .collect();
    Some(RuleInstance { name: app.name, alternatives })
}

/// Result of checking an extracted model against its branch.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RealisationReport {
    pub constraints_checked: usize,
    pub violations: Vec<String>,
    /// Number of value classes among atomic structures.
    pub class_count: usize,
    /// `2 * |atomic structures| * |worlds|`.
    pub class_bound: usize,
}

impl RealisationReport {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }
}

#[derive(Debug, Clone)]
pub struct Extraction {
    /// The realising model, without the reserved atom behind the constant 1.
    pub model: KripkeModel,
    pub report: RealisationReport,
    pub branch_id: String,
}

/// Builds a model from a complete open branch and re-checks every
/// constraint on it.
///
/// Relation terms with no strict upper bound are pinned to 1. All other
/// values come from the longest strict-edge path from 0 in the condensed
/// constraint graph, scaled by that of 1. This keeps 0- and 1-pinned
/// structures at 0 and 1 and orders every other class consistently with
/// the transitive closure of the branch.
pub fn extract_model(b: &Branch) -> Result<Extraction, TableauError> {
    if b.closed {
        return Err(TableauError::RealisationFailure(format!("branch {} is closed", b.id)));
    }
    let pins: Vec<(usize, usize, bool)> = b
        .rels
        .iter()
        .filter(|&&r| !b.reaches_strict(r))
        .map(|&r| (ONE, r, false))
        .collect();
    let (g, ids) = b.graph(&pins);
    let sccs = tarjan_scc(&g);
    let mut comp = vec![0usize; g.node_count()];
    // tarjan_scc yields components in reverse topological order.
    let order: Vec<usize> = (0..sccs.len()).rev().collect();
    for (i, c) in sccs.iter().enumerate() {
        for n in c {
            comp[n.index()] = i;
        }
    }
    let mut rank = vec![0u64; sccs.len()];
    for &c in &order {
        for n in &sccs[c] {
            for e in g.edges(*n) {
                use petgraph::visit::EdgeRef;
                let d = comp[e.target().index()];
                if d == c {
                    if *e.weight() {
                        return Err(TableauError::RealisationFailure(format!("strict cycle on open branch {}", b.id)));
                    }
                    continue;
                }
                rank[d] = rank[d].max(rank[c] + *e.weight() as u64);
            }
        }
    }
    let top = rank[comp[ids[ONE].index()]];
    debug_assert!(top >= 1);
    let value = |t: usize| Rational01::grid(rank[comp[ids[t].index()]] as u32, top as u32);

    let mut used: Vec<bool> = vec![false; b.worlds.len()];
    used[0] = true;
    for t in &b.terms {
        match *t {
            Term::At(w, ..) => used[w as usize] = true,
            Term::Rel(x, _, y) => {
                used[x as usize] = true;
                used[y as usize] = true;
            }
            _ => {}
        }
    }
    let names: Vec<String> = b.worlds.iter().zip(&used).filter(|(_, &u)| u).map(|(n, _)| n.clone()).collect();
    let mut model = KripkeModel::new(names).expect("branch worlds are distinct and nonempty");
    let positions: Vec<usize> = used
        .iter()
        .scan(0, |next, &u| {
            let here = *next;
            *next += u as usize;
            Some(here)
        })
        .collect();
    let idx = |w: u32| positions[w as usize];
    let mut vals: HashMap<(usize, String), ValuePair> = HashMap::new();
    let mut rels = Vec::new();
    let mut atomic_classes = HashSet::new();
    let mut atomic_count = 0;
    for (t, term) in b.terms.iter().enumerate() {
        if !term.is_atomic(&b.arena) {
            continue;
        }
        atomic_count += 1;
        atomic_classes.insert(comp[ids[t].index()]);
        match *term {
            Term::At(w, coord, f) => {
                let Formula::Atom(p) = &b.arena.formulas[f as usize] else { unreachable!() };
                let entry = vals.entry((idx(w), p.clone())).or_insert_with(ValuePair::zero);
                match coord {
                    Coord::One => entry.pos = value(t),
                    Coord::Two => entry.neg = value(t),
                }
            }
            Term::Rel(x, s, y) => rels.push((s, idx(x), idx(y), value(t))),
            _ => {}
        }
    }
    for (s, x, y, v) in rels {
        if !v.is_zero() {
            model.set_rel_idx(s, x, y, v);
        }
    }
    let mut vals: Vec<_> = vals.into_iter().collect();
    vals.sort_by(|a, b| a.0.cmp(&b.0));
    for ((w, p), v) in vals {
        if v != ValuePair::zero() {
            model.set_val_idx(w, &p, v);
        }
    }

    let mut cache: HashMap<FId, Vec<ValuePair>> = HashMap::new();
    let mut eval_term = |t: Term| -> Rational01 {
        match t {
            Term::Zero => Rational01::zero(),
            Term::One => Rational01::one(),
            Term::Rel(x, s, y) => model.rel(s, idx(x), idx(y)),
            Term::At(w, c, f) => {
                let vs = cache.entry(f).or_insert_with(|| model.eval_all(&b.arena.formulas[f as usize]));
                vs[idx(w)].get(c).clone()
            }
        }
    };
    let mut violations = Vec::new();
    for &(x, y, s) in &b.constraints {
        let (vx, vy) = (eval_term(b.terms[x]), eval_term(b.terms[y]));
        let ok = if s { vx < vy } else { vx <= vy };
        if !ok {
            violations.push(format!(
                "{} (values {vx} and {vy})",
                b.show_edge(&(b.terms[x], b.terms[y], s))
            ));
        }
    }
    let report = RealisationReport {
        constraints_checked: b.constraints.len(),
        violations,
        class_count: atomic_classes.len(),
        class_bound: 2 * atomic_count * model.world_count(),
    };
    if !report.passed() {
        return Err(TableauError::RealisationFailure(report.violations.join("; ")));
    }
    model.remove_atom(RESERVED_ATOM);
    Ok(Extraction { model, report, branch_id: b.id.clone() })
}

#[derive(Debug, Clone)]
pub struct Expansion {
    /// Extraction from the first complete open branch, or `None` when every
    /// branch closed.
    pub open: Option<Extraction>,
    pub transcript: Vec<String>,
    pub branches: usize,
}

impl Expansion {
    pub fn is_closed(&self) -> bool {
        self.open.is_none()
    }
}

/// Depth-first saturation of the tableau rooted at `initial`.
pub fn expand(initial: &[Constraint], config: &TableauConfig) -> Result<Expansion, TableauError> {
    let root = Branch::from_constraints(initial);
    let mut transcript = Vec::new();
    let mut log = |line: String| {
        if config.record_transcript {
            transcript.push(line);
        }
    };
    let mut stack = vec![root];
    let mut branches = 0;
    while let Some(mut b) = stack.pop() {
        branches += 1;
        if branches > config.max_branches {
            return Err(TableauError::ResourceLimit(format!("more than {} branches", config.max_branches)));
        }
        loop {
            if b.closed {
                log(format!("close | {} | closed | {}", b.id, b.id));
                break;
            }
            let Some((cid, side, target)) = b.next_rule() else {
                let ex = extract_model(&b)?;
                log(format!("open | {} | complete | {}", b.id, b.id));
                return Ok(Expansion { open: Some(ex), transcript, branches });
            };
            let app = b.application(cid, side, target);
            b.applied.insert((cid, side, target));
            let (x, y, s) = b.constraints[cid];
            let premise = b.show_edge(&(b.terms[x], b.terms[y], s));
            let premise_term = if side == Side::Left { x } else { y };
            if app.alternatives.iter().any(|alt| b.satisfied(alt)) {
                continue;
            }
            if app.alternatives.len() == 1 {
                let added = b.add_alternative(&app.alternatives[0], premise_term, config)?;
                let shown: Vec<String> = added.iter().map(|e| b.show_edge(e)).collect();
                log(format!("{} | {} | {} | {}", app.name, premise, shown.join(", "), b.id));
                continue;
            }
            let mut children = Vec::new();
            let mut shown_alts = Vec::new();
            for (k, alt) in app.alternatives.iter().enumerate() {
                let mut child = b.clone();
                child.id = format!("{}.{}", b.id, k + 1);
                let added = child.add_alternative(alt, premise_term, config)?;
                let shown: Vec<String> = added.iter().map(|e| child.show_edge(e)).collect();
                shown_alts.push(format!("[{}]", shown.join(", ")));
                children.push(child);
            }
            log(format!("{} | {} | {} | {}", app.name, premise, shown_alts.join(" / "), b.id));
            let mut children = children.into_iter();
            b = children.next().expect("branching rules have alternatives");
            let rest: Vec<Branch> = children.collect();
            stack.extend(rest.into_iter().rev());
        }
    }
    Ok(Expansion { open: None, transcript, branches })
}

/// A falsifying model with the world and coordinate at which the formula
/// fails, and the formula's value there.
#[derive(Debug, Clone)]
pub struct Countermodel {
    pub model: KripkeModel,
    pub world: String,
    pub coord: Coord,
    pub value: ValuePair,
    pub report: RealisationReport,
}

#[derive(Debug, Clone)]
pub enum Verdict {
    Proved,
    Countermodel(Box<Countermodel>),
}

impl Verdict {
    pub fn is_proved(&self) -> bool {
        matches!(self, Verdict::Proved)
    }

    pub fn countermodel(&self) -> Option<&Countermodel> {
        match self {
            Verdict::Proved => None,
            Verdict::Countermodel(c) => Some(c),
        }
    }
}

#[derive(Debug, Clone)]
pub struct Proof {
    pub verdict: Verdict,
    pub transcript: Vec<String>,
    pub branches: usize,
}

pub const ROOT_WORLD: &str = "w0";

fn refute(phi: &Formula, coord: Coord, config: &TableauConfig) -> Result<(Expansion, Option<Countermodel>), TableauError> {
    let s = Structure::at(ROOT_WORLD, coord, phi.desugar());
    let initial = match coord {
        Coord::One => Constraint::lt(s, Structure::One),
        Coord::Two => Constraint::gt(s, Structure::Zero),
    };
    let ex = expand(&[initial], config)?;
    let cm = ex.open.as_ref().map(|o| {
        let value = o.model.eval(ROOT_WORLD, phi).expect("root world is in the model");
        Countermodel { model: o.model.clone(), world: ROOT_WORLD.to_string(), coord, value, report: o.report.clone() }
    });
    Ok((ex, cm))
}

/// Decides validity: `pos` refutes `w0:1:φ < 1`, `neg` refutes
/// `w0:2:φ > 0`, and `strong` requires both.
pub fn prove_with(phi: &Formula, mode: Mode, config: &TableauConfig) -> Result<Proof, TableauError> {
    let coords: &[Coord] = match mode {
        Mode::Pos => &[Coord::One],
        Mode::Neg => &[Coord::Two],
        Mode::Strong => &[Coord::One, Coord::Two],
    };
    let mut transcript = Vec::new();
    let mut branches = 0;
    for &c in coords {
        let (ex, cm) = refute(phi, c, config)?;
        transcript.extend(ex.transcript);
        branches += ex.branches;
        if let Some(cm) = cm {
            return Ok(Proof { verdict: Verdict::Countermodel(Box::new(cm)), transcript, branches });
        }
    }
    Ok(Proof { verdict: Verdict::Proved, transcript, branches })
}

pub fn prove(phi: &Formula, mode: Mode) -> Result<Verdict, TableauError> {
    prove_with(phi, mode, &TableauConfig::default()).map(|p| p.verdict)
}

/// Satisfiability notions: some world with `v1 = 1`, or with `v1 = 1` and
/// `v2 = 0`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SatMode {
    Pos1,
    Strong,
}

impl std::str::FromStr for SatMode {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "pos1" => Ok(SatMode::Pos1),
            "strong" => Ok(SatMode::Strong),
            _ => Err(format!("unknown satisfiability mode `{s}` (expected pos1 or strong)")),
        }
    }
}

#[derive(Debug, Clone)]
pub struct SatResult {
    pub satisfiable: bool,
    /// A satisfying model and world.
    pub model: Option<(KripkeModel, String)>,
}

pub fn decide_sat_with(phi: &Formula, mode: SatMode, config: &TableauConfig) -> Result<SatResult, TableauError> {
    let d = phi.desugar();
    let s = |c| Structure::at(ROOT_WORLD, c, d.clone());
    let mut initial = vec![Constraint::ge(s(Coord::One), Structure::One)];
    if mode == SatMode::Strong {
        initial.push(Constraint::le(s(Coord::Two), Structure::Zero));
    }
    let ex = expand(&initial, config)?;
    Ok(SatResult { satisfiable: ex.open.is_some(), model: ex.open.map(|o| (o.model, ROOT_WORLD.to_string())) })
}

pub fn decide_sat(phi: &Formula, mode: SatMode) -> Result<SatResult, TableauError> {
    decide_sat_with(phi, mode, &TableauConfig::default())
}

/// The formula whose positive falsifiability at a world is equivalent to
/// satisfiability of `phi` there: `1 -< φ` for `pos1`, and
/// `(1 -< φ) | ~~neg φ` for `strong`.
pub fn sat_reduction(phi: &Formula, mode: SatMode) -> Formula {
    let not_one = Formula::coimpl(Formula::Top, phi.clone());
    match mode {
        SatMode::Pos1 => not_one,
        SatMode::Strong => Formula::or(not_one, Formula::gneg(Formula::gneg(Formula::neg(phi.clone())))),
    }
}

/// Decides satisfiability by refuting [`sat_reduction`] in `pos` mode.
pub fn decide_sat_by_reduction(phi: &Formula, mode: SatMode, config: &TableauConfig) -> Result<SatResult, TableauError> {
    let proof = prove_with(&sat_reduction(phi, mode), Mode::Pos, config)?;
    Ok(match proof.verdict {
        Verdict::Proved => SatResult { satisfiable: false, model: None },
        Verdict::Countermodel(c) => SatResult { satisfiable: true, model: Some((c.model, c.world)) },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::formula::parse;

    fn f(s: &str) -> Formula {
        parse(s).unwrap().desugar()
    }

    fn at(w: &str, c: Coord, s: &str) -> Structure {
        Structure::at(w, c, f(s))
    }

    #[test]
    fn closure_examples() {
        let (a, b, c) = (at("w", Coord::One, "a"), at("w", Coord::One, "b"), at("w", Coord::One, "c"));
        let br = Branch::from_constraints(&[Constraint::le(a.clone(), b.clone()), Constraint::lt(b.clone(), a.clone())]);
        assert!(br.is_closed() && br.close_check());
        let br = Branch::from_constraints(&[Constraint::lt(a.clone(), b.clone()), Constraint::lt(b.clone(), c.clone())]);
        assert!(!br.is_closed() && !br.close_check());
        let br = Branch::from_constraints(&[Constraint::gt(a.clone(), a.clone())]);
        assert!(br.is_closed() && br.close_check());
        let br = Branch::from_constraints(&[Constraint::gt(a.clone(), Structure::One)]);
        assert!(br.is_closed() && br.close_check());
        let br = Branch::from_constraints(&[Constraint::lt(a.clone(), Structure::Zero)]);
        assert!(br.is_closed() && br.close_check());
        let br = Branch::from_constraints(&[Constraint::le(Structure::One, Structure::Zero)]);
        assert!(br.is_closed() && br.close_check());
        let br = Branch::from_constraints(&[Constraint::le(Structure::One, a.clone()), Constraint::le(a, c)]);
        assert!(!br.is_closed() && !br.close_check());
    }

    #[test]
    fn identity_is_proved() {
        let init = [Constraint::lt(at("w", Coord::One, "p -> p"), Structure::One)];
        assert!(expand(&init, &TableauConfig::default()).unwrap().is_closed());
        assert!(prove(&f("p -> p"), Mode::Strong).unwrap().is_proved());
    }

    #[test]
    fn worked_example_is_refuted() {
        let phi = parse("neg box p -> box neg p").unwrap();
        let cfg = TableauConfig { record_transcript: true, ..Default::default() };
        let proof = prove_with(&phi, Mode::Neg, &cfg).unwrap();
        let cm = proof.verdict.countermodel().expect("not negatively valid").clone();
        assert_eq!(cm.coord, Coord::Two);
        assert!(cm.value.neg > Rational01::zero());
        assert_eq!(cm.model.world_count(), 2);
        assert!(cm.report.passed());
        assert!(proof.transcript.iter().all(|l| l.split(" | ").count() == 4));
    }

    #[test]
    fn pinning_single_atom() {
        let init = [Constraint::ge(at("w", Coord::One, "p"), Structure::One)];
        let ex = expand(&init, &TableauConfig::default()).unwrap().open.unwrap();
        assert_eq!(ex.model.val(0, "p"), ValuePair::new(Rational01::one(), Rational01::zero()));
    }

    #[test]
    fn diamond_witness() {
        let init = [Constraint::gt(at("w0", Coord::One, "dia p"), Structure::Zero)];
        let ex = expand(&init, &TableauConfig::default()).unwrap().open.unwrap();
        let v = ex.model.eval("w0", &f("dia p")).unwrap();
        assert!(v.pos > Rational01::zero());
        assert!(ex.report.class_count <= ex.report.class_bound);
    }

    #[test]
    fn fb_unsatisfiable() {
        let phi = parse("~ box (p | ~p)").unwrap();
        assert!(!decide_sat(&phi, SatMode::Pos1).unwrap().satisfiable);
        let init = [Constraint::ge(at("w", Coord::One, "~ box (p | ~p)"), Structure::One)];
        assert!(expand(&init, &TableauConfig::default()).unwrap().is_closed());
    }

    #[test]
    fn non_theorems() {
        for s in ["(p & neg p) -> q", "box (p & neg p) -> box q", "box 1", "dia 0 <-> 0"] {
            let v = prove(&parse(s).unwrap(), Mode::Strong).unwrap();
            let cm = v.countermodel().unwrap_or_else(|| panic!("{s} should be refuted"));
            let val = cm.model.eval(&cm.world, &parse(s).unwrap()).unwrap();
            assert!(!val.pos.is_one() || !val.neg.is_zero(), "{s}");
        }
    }

    #[test]
    fn satisfiability_paths_agree() {
        for s in ["p & neg p", "0", "1", "~ box (p | ~p)", "box p & dia neg p", "p -< q"] {
            let phi = parse(s).unwrap();
            for mode in [SatMode::Pos1, SatMode::Strong] {
                let direct = decide_sat(&phi, mode).unwrap();
                let reduced = decide_sat_by_reduction(&phi, mode, &TableauConfig::default()).unwrap();
                assert_eq!(direct.satisfiable, reduced.satisfiable, "{s} {mode:?}");
                if let Some((m, w)) = direct.model {
                    let v = m.eval(&w, &phi).unwrap();
                    assert!(v.pos.is_one());
                    if mode == SatMode::Strong {
                        assert!(v.neg.is_zero());
                    }
                }
            }
        }
        assert!(decide_sat(&parse("p & neg p").unwrap(), SatMode::Pos1).unwrap().satisfiable);
        assert!(!decide_sat(&parse("0").unwrap(), SatMode::Pos1).unwrap().satisfiable);
    }

    #[test]
    fn resource_limits_are_reported() {
        let cfg = TableauConfig { max_worlds: 1, ..Default::default() };
        let r = prove_with(&parse("box p -> box q").unwrap(), Mode::Pos, &cfg);
        assert!(matches!(r, Err(TableauError::ResourceLimit(_))));
    }

    #[test]
    fn rule_instances() {
        let premise = Constraint::lt(at("w", Coord::One, "p -> q"), Structure::One);
        let r = apply_rule(&premise, Side::Left, "v", None).unwrap();
        assert_eq!(r.name, "imp1<");
        assert_eq!(r.alternatives.len(), 1);
        let premise = Constraint::gt(at("w", Coord::Two, "box p"), Structure::Zero);
        assert!(apply_rule(&premise, Side::Right, "v", None).is_none());
        let r = apply_rule(&premise, Side::Right, "v", Some("u")).unwrap();
        assert_eq!(r.name, "box2>");
        assert_eq!(r.alternatives[1][0].to_string(), "wR-u <= u:2:p");
    }
}
