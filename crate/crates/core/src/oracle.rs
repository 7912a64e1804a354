//! Bounded brute-force semantic search, used as ground truth for the
//! tableau.
//!
//! Models are enumerated up to a world bound with relation and atom values
//! on the grid `{0, 1/N, ..., 1}`. Evaluation is bit-sliced: a value at
//! level `l` is stored as the `N` threshold bits `l >= 1, ..., l >= N`, and
//! each machine word carries the same threshold for 64 models that share a
//! frame and differ in the valuation. On threshold vectors min and max are
//! bitwise, and `a <= b` holds iff `!a_k | b_k` for every `k`.

use std::collections::HashMap;

use thiserror::Error;

use crate::algebra::Rational01;
use crate::formula::{Formula, RESERVED_ATOM};
use crate::model::{Coord, KripkeModel, Mode, Sign, ValuePair};
use crate::tableau::{SatMode, Verdict};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum OracleError {
    #[error("invalid search bounds: {0}")]
    InvalidBounds(String),
    /// A model found by the search does not reproduce its verdict under the
    /// reference evaluator.
    #[error("oracle and evaluator disagree: {0}")]
    Inconsistent(String),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SearchBounds {
    pub max_worlds: usize,
    pub grid_denominator: u32,
    /// Both relations take only the values 0 and 1.
    pub crisp_only: bool,
    /// R⁻ takes only the values 0 and 1; R⁺ is unrestricted.
    pub crisp_minus_only: bool,
    pub mono_relational_only: bool,
    /// Largest number of models the search may enumerate.
    pub budget: u64,
}

pub const DEFAULT_WORLD_CAP: usize = 2;
pub const DEFAULT_BUDGET: u64 = 200_000_000;

impl Default for SearchBounds {
    fn default() -> Self {
        SearchBounds {
            max_worlds: DEFAULT_WORLD_CAP,
            grid_denominator: 2,
            crisp_only: false,
            crisp_minus_only: false,
            mono_relational_only: false,
            budget: DEFAULT_BUDGET,
        }
    }
}

impl SearchBounds {
    pub fn new(max_worlds: usize, grid_denominator: u32) -> Self {
        SearchBounds { max_worlds, grid_denominator, ..Default::default() }
    }

    /// Bounds derived from the formula: `min(cap, k^(k+1))` worlds (at least
    /// one) for `k` modalities, and denominator 2.
    pub fn for_formula(phi: &Formula) -> Self {
        let k = phi.modal_count() as u32;
        let size_bound = (k as u64).checked_pow(k + 1).unwrap_or(u64::MAX);
        let max_worlds = (DEFAULT_WORLD_CAP as u64).min(size_bound).max(1) as usize;
        SearchBounds { max_worlds, ..Default::default() }
    }

    fn validate(&self) -> Result<(), OracleError> {
        if self.max_worlds == 0 {
            return Err(OracleError::InvalidBounds("max_worlds must be at least 1".into()));
        }
        if self.grid_denominator == 0 {
            return Err(OracleError::InvalidBounds("grid denominator must be at least 1".into()));
        }
        Ok(())
    }
}

/// What the search looks for at a world.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Target {
    /// A world violating the validity notion.
    Violation(Mode),
    /// A world satisfying the formula.
    Satisfaction(SatMode),
}

#[derive(Debug, Clone)]
pub struct Hit {
    pub model: KripkeModel,
    pub world: String,
    pub value: ValuePair,
    /// Position of the model in the enumeration order.
    pub index: u64,
}

#[derive(Debug, Clone)]
pub enum SearchOutcome {
    Found(Hit),
    NotFound { models: u64 },
    BudgetExceeded { required: u64, budget: u64 },
}

impl SearchOutcome {
    pub fn hit(&self) -> Option<&Hit> {
        match self {
            SearchOutcome::Found(h) => Some(h),
            _ => None,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Search {
    pub outcome: SearchOutcome,
    /// `index | model-hash | verdict` per enumerated model, when requested.
    pub transcript: Vec<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum ONode {
    Atom(usize),
    Constant,
    Neg(usize),
    And(usize, usize),
    Impl(usize, usize),
    Square(usize),
    Diamond(usize),
}

struct Compiled {
    nodes: Vec<ONode>,
    atoms: Vec<String>,
    root: usize,
}

fn compile(phi: &Formula) -> Compiled {
    fn go(f: &Formula, c: &mut Compiled, memo: &mut HashMap<Formula, usize>) -> usize {
        if let Some(&i) = memo.get(f) {
            return i;
        }
        let node = match f {
            Formula::Atom(p) if p == RESERVED_ATOM => ONode::Constant,
            Formula::Atom(p) => {
                let slot = c.atoms.iter().position(|a| a == p).unwrap_or_else(|| {
                    c.atoms.push(p.clone());
                    c.atoms.len() - 1
                });
                ONode::Atom(slot)
            }
            Formula::Neg(a) => ONode::Neg(go(a, c, memo)),
            Formula::And(a, b) => ONode::And(go(a, c, memo), go(b, c, memo)),
            Formula::Impl(a, b) => ONode::Impl(go(a, c, memo), go(b, c, memo)),
            Formula::Square(a) => ONode::Square(go(a, c, memo)),
            Formula::Diamond(a) => ONode::Diamond(go(a, c, memo)),
            _ => unreachable!("compiled formulas are desugared"),
        };
        c.nodes.push(node);
        memo.insert(f.clone(), c.nodes.len() - 1);
        c.nodes.len() - 1
    }
    let mut c = Compiled { nodes: Vec::new(), atoms: Vec::new(), root: 0 };
    let mut memo = HashMap::new();
    c.root = go(&phi.desugar(), &mut c, &mut memo);
    // Atom slots follow the sorted atom names, so enumeration order does not
    // depend on where atoms occur in the formula.
    let mut order: Vec<usize> = (0..c.atoms.len()).collect();
    order.sort_by(|&a, &b| c.atoms[a].cmp(&c.atoms[b]));
    let mut rank = vec![0; order.len()];
    for (r, &s) in order.iter().enumerate() {
        rank[s] = r;
    }
    for n in &mut c.nodes {
        if let ONode::Atom(s) = n {
            *s = rank[*s];
        }
    }
    c.atoms.sort();
    c
}

/// Relation levels of one frame, row-major over (from, to).
#[derive(Debug, Clone)]
struct Frame {
    plus: Vec<u32>,
    minus: Vec<u32>,
}

struct FrameSpace {
    n: usize,
    plus_levels: Vec<u32>,
    minus_levels: Vec<u32>,
    mono: bool,
    relevant: bool,
}

impl FrameSpace {
    fn entries(&self) -> usize {
        if !self.relevant {
            0
        } else if self.mono {
            self.n * self.n
        } else {
            2 * self.n * self.n
        }
    }

    fn count(&self) -> u64 {
        if !self.relevant {
            return 1;
        }
        let e = (self.n * self.n) as u32;
        let p = (self.plus_levels.len() as u64).checked_pow(e).unwrap_or(u64::MAX);
        if self.mono {
            p
        } else {
            p.saturating_mul((self.minus_levels.len() as u64).checked_pow(e).unwrap_or(u64::MAX))
        }
    }

    fn frame(&self, digits: &[usize]) -> Frame {
        let nn = self.n * self.n;
        if !self.relevant {
            return Frame { plus: vec![0; nn], minus: vec![0; nn] };
        }
        let plus: Vec<u32> = digits[..nn].iter().map(|&d| self.plus_levels[d]).collect();
        let minus = if self.mono {
            plus.clone()
        } else {
            digits[nn..].iter().map(|&d| self.minus_levels[d]).collect()
        };
        Frame { plus, minus }
    }

    fn radix(&self, e: usize) -> usize {
        if e < self.n * self.n {
            self.plus_levels.len()
        } else {
            self.minus_levels.len()
        }
    }
}

/// Lexicographic successor; false once the odometer wraps.
fn next_digits(digits: &mut [usize], radix: impl Fn(usize) -> usize) -> bool {
    for e in (0..digits.len()).rev() {
        digits[e] += 1;
        if digits[e] < radix(e) {
            return true;
        }
        digits[e] = 0;
    }
    false
}

fn permutations(n: usize) -> Vec<Vec<usize>> {
    fn go(prefix: &mut Vec<usize>, n: usize, out: &mut Vec<Vec<usize>>) {
        if prefix.len() == n {
            out.push(prefix.clone());
            return;
        }
        for i in 0..n {
            if !prefix.contains(&i) {
                prefix.push(i);
                go(prefix, n, out);
                prefix.pop();
            }
        }
    }
    let mut out = Vec::new();
    go(&mut Vec::new(), n, &mut out);
    out
}

/// A frame is canonical when no relabelling of its worlds gives a
/// lexicographically smaller level vector.
fn is_canonical(f: &Frame, n: usize, perms: &[Vec<usize>]) -> bool {
    let key = |pi: &[usize]| -> Vec<u32> {
        let mut plus = vec![0; n * n];
        let mut minus = vec![0; n * n];
        for i in 0..n {
            for j in 0..n {
                plus[pi[i] * n + pi[j]] = f.plus[i * n + j];
                minus[pi[i] * n + pi[j]] = f.minus[i * n + j];
            }
        }
        plus.extend(minus);
        plus
    };
    let mine: Vec<u32> = f.plus.iter().chain(&f.minus).copied().collect();
    perms.iter().all(|pi| mine <= key(pi))
}

/// Machine words evaluated per pass; each pass covers `64 * WORDS` models.
const WORDS: usize = 16;
const CHUNK: u64 = 64 * WORDS as u64;

/// Bit-sliced valuations in chunks of `CHUNK` consecutive valuations. Word
/// `(e * t + k) * WORDS + j` of a chunk holds the lanes whose valuation puts
/// entry `e` at a level above `k`.
struct ValuationChunks {
    entries: usize,
    count: u64,
    chunks: Vec<Vec<u64>>,
    valid: Vec<[u64; WORDS]>,
}

fn valuation_chunks(entries: usize, levels: u32) -> ValuationChunks {
    let radix = (levels + 1) as u64;
    let count = radix.pow(entries as u32);
    let nchunks = count.div_ceil(CHUNK) as usize;
    let t = levels as usize;
    let mut chunks = vec![vec![0u64; entries * t * WORDS]; nchunks];
    let mut valid = vec![[0u64; WORDS]; nchunks];
    let mut digits = vec![0u32; entries];
    for v in 0..count {
        let (c, j, lane) = ((v / CHUNK) as usize, ((v % CHUNK) / 64) as usize, v % 64);
        valid[c][j] |= 1 << lane;
        for (e, &d) in digits.iter().enumerate() {
            for k in 0..d as usize {
                chunks[c][(e * t + k) * WORDS + j] |= 1 << lane;
            }
        }
        for e in (0..entries).rev() {
            digits[e] += 1;
            if digits[e] <= levels {
                break;
            }
            digits[e] = 0;
        }
    }
    ValuationChunks { entries, count, chunks, valid }
}

fn valuation_digits(mut v: u64, entries: usize, levels: u32) -> Vec<u32> {
    let radix = (levels + 1) as u64;
    let mut out = vec![0u32; entries];
    for e in (0..entries).rev() {
        out[e] = (v % radix) as u32;
        v /= radix;
    }
    out
}

/// Node values laid out as `[node][world][coord][threshold][word]`.
struct Evaluator<'a> {
    c: &'a Compiled,
    n: usize,
    t: usize,
    buf: Vec<u64>,
}

impl<'a> Evaluator<'a> {
    fn new(c: &'a Compiled, n: usize, t: usize) -> Self {
        Evaluator { c, n, t, buf: vec![0; c.nodes.len() * n * 2 * t * WORDS] }
    }

    /// Evaluates all nodes for one frame and one valuation chunk.
    fn run(&mut self, frame: &Frame, vals: &[u64]) {
        let (n, t) = (self.n, self.t);
        let slot = t * WORDS;
        let nb = n * 2 * slot;
        let atoms = self.c.atoms.len();
        for (i, node) in self.c.nodes.iter().enumerate() {
            // Operands precede their parent, so they all lie in `lo`.
            let (lo, hi) = self.buf.split_at_mut(i * nb);
            let out = &mut hi[..nb];
            let operand = |a: usize, w: usize, coord: usize| {
                let s = a * nb + (w * 2 + coord) * slot;
                &lo[s..s + slot]
            };
            for w in 0..n {
                for coord in 0..2 {
                    let o = (w * 2 + coord) * slot;
                    let dst = &mut out[o..o + slot];
                    match *node {
                        ONode::Atom(a) => {
                            let e = ((w * atoms + a) * 2 + coord) * slot;
                            dst.copy_from_slice(&vals[e..e + slot]);
                        }
                        ONode::Constant => dst.fill(0),
                        ONode::Neg(a) => dst.copy_from_slice(operand(a, w, 1 - coord)),
                        ONode::And(a, b) => {
                            let (x, y) = (operand(a, w, coord), operand(b, w, coord));
                            if coord == 0 {
                                for q in 0..slot {
                                    dst[q] = x[q] & y[q];
                                }
                            } else {
                                for q in 0..slot {
                                    dst[q] = x[q] | y[q];
                                }
                            }
                        }
                        ONode::Impl(a, b) => {
                            let (x, y) = (operand(a, w, coord), operand(b, w, coord));
                            let mut le = [!0u64; WORDS];
                            if coord == 0 {
                                // v1: a -> b is 1 where a <= b, else b.
                                for k in 0..t {
                                    for j in 0..WORDS {
                                        le[j] &= !x[k * WORDS + j] | y[k * WORDS + j];
                                    }
                                }
                                for k in 0..t {
                                    for j in 0..WORDS {
                                        dst[k * WORDS + j] = y[k * WORDS + j] | le[j];
                                    }
                                }
                            } else {
                                // v2: b -< a is 0 where b <= a, else b.
                                for k in 0..t {
                                    for j in 0..WORDS {
                                        le[j] &= !y[k * WORDS + j] | x[k * WORDS + j];
                                    }
                                }
                                for k in 0..t {
                                    for j in 0..WORDS {
                                        dst[k * WORDS + j] = y[k * WORDS + j] & !le[j];
                                    }
                                }
                            }
                        }
                        ONode::Square(a) => {
                            let rel = if coord == 0 { &frame.plus } else { &frame.minus };
                            dst.fill(!0);
                            for u in 0..n {
                                // An edge at level 0 imposes no bound.
                                let level = rel[w * n + u] as usize;
                                if level == 0 {
                                    continue;
                                }
                                let x = operand(a, u, coord);
                                let le = &x[(level - 1) * WORDS..level * WORDS];
                                for k in 0..t {
                                    for j in 0..WORDS {
                                        dst[k * WORDS + j] &= x[k * WORDS + j] | le[j];
                                    }
                                }
                            }
                        }
                        ONode::Diamond(a) => {
                            let rel = if coord == 0 { &frame.plus } else { &frame.minus };
                            dst.fill(0);
                            for u in 0..n {
                                let level = (rel[w * n + u] as usize).min(t);
                                let x = operand(a, u, coord);
                                for q in 0..level * WORDS {
                                    dst[q] |= x[q];
                                }
                            }
                        }
                    }
                }
            }
        }
    }

    /// Lanes where the root meets the target at world `w`.
    fn target_mask(&self, target: Target, w: usize) -> [u64; WORDS] {
        let slot = self.t * WORDS;
        let base = (self.c.root * self.n + w) * 2 * slot;
        let mut out = [0u64; WORDS];
        for (j, o) in out.iter_mut().enumerate() {
            let pos_one = self.buf[base + (self.t - 1) * WORDS + j];
            let neg_pos = self.buf[base + slot + j];
            *o = match target {
                Target::Violation(Mode::Pos) => !pos_one,
                Target::Violation(Mode::Neg) => neg_pos,
                Target::Violation(Mode::Strong) => !pos_one | neg_pos,
                Target::Satisfaction(SatMode::Pos1) => pos_one,
                Target::Satisfaction(SatMode::Strong) => pos_one & !neg_pos,
            };
        }
        out
    }
}

fn fnv1a(bytes: impl IntoIterator<Item = u8>) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in bytes {
        h ^= b as u64;
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

fn build_model(n: usize, frame: &Frame, atoms: &[String], digits: &[u32], levels: u32) -> KripkeModel {
    let mut m = KripkeModel::new((0..n).map(|i| format!("w{i}"))).expect("at least one world");
    for i in 0..n {
        for j in 0..n {
            for (sign, rel) in [(Sign::Plus, &frame.plus), (Sign::Minus, &frame.minus)] {
                let l = rel[i * n + j];
                if l > 0 {
                    m.set_rel_idx(sign, i, j, Rational01::grid(l, levels));
                }
            }
        }
    }
    for w in 0..n {
        for (a, name) in atoms.iter().enumerate() {
            let e = (w * atoms.len() + a) * 2;
            let (x, y) = (digits[e], digits[e + 1]);
            if x > 0 || y > 0 {
                m.set_val_idx(w, name, ValuePair::new(Rational01::grid(x, levels), Rational01::grid(y, levels)));
            }
        }
    }
    m
}

fn meets(target: Target, v: &ValuePair) -> bool {
    match target {
        Target::Violation(mode) => mode.violated_by(v),
        Target::Satisfaction(SatMode::Pos1) => v.pos.is_one(),
        Target::Satisfaction(SatMode::Strong) => v.pos.is_one() && v.neg.is_zero(),
    }
}

/// Exhaustive search in deterministic order: world count ascending, then
/// canonical frames in lexicographic order, then valuations in
/// lexicographic order, then worlds. Formulas without modalities are
/// searched on one world with the empty frame, which loses nothing since
/// their value at a world depends only on that world's valuation.
pub fn search(phi: &Formula, target: Target, b: &SearchBounds, transcript: bool) -> Result<Search, OracleError> {
    b.validate()?;
    let c = compile(phi);
    let levels = b.grid_denominator;
    let t = levels as usize;
    let modal = phi.modal_depth() > 0 || phi.desugar().modal_depth() > 0;
    let max_worlds = if modal { b.max_worlds } else { 1 };
    let fuzzy: Vec<u32> = (0..=levels).collect();
    let crisp: Vec<u32> = vec![0, levels];
    let spaces: Vec<FrameSpace> = (1..=max_worlds)
        .map(|n| FrameSpace {
            n,
            plus_levels: if b.crisp_only { crisp.clone() } else { fuzzy.clone() },
            minus_levels: if b.crisp_only || b.crisp_minus_only {
                crisp.clone()
            } else {
                fuzzy.clone()
            },
            mono: b.mono_relational_only,
            relevant: modal,
        })
        .map(|mut s| {
            if s.mono {
                // R⁻ = R⁺ pointwise, so both range over the common levels.
                let common: Vec<u32> = s.plus_levels.iter().copied().filter(|l| s.minus_levels.contains(l)).collect();
                s.plus_levels = common.clone();
                s.minus_levels = common;
            }
            s
        })
        .collect();
    let radix = (levels as u64) + 1;
    let mut required: u64 = 0;
    for s in &spaces {
        let vals = radix.checked_pow((s.n * c.atoms.len() * 2) as u32).unwrap_or(u64::MAX);
        required = required.saturating_add(s.count().saturating_mul(vals));
    }
    if required > b.budget {
        return Ok(Search {
            outcome: SearchOutcome::BudgetExceeded { required, budget: b.budget },
            transcript: Vec::new(),
        });
    }

    let mut lines = Vec::new();
    let mut offset: u64 = 0;
    for s in &spaces {
        let n = s.n;
        let vc = valuation_chunks(n * c.atoms.len() * 2, levels);
        let perms = permutations(n);
        let mut ev = Evaluator::new(&c, n, t);
        let mut digits = vec![0usize; s.entries()];
        let mut ordinal: u64 = 0;
        loop {
            let frame = s.frame(&digits);
            if !s.relevant || is_canonical(&frame, n, &perms) {
                for (ci, chunk) in vc.chunks.iter().enumerate() {
                    ev.run(&frame, chunk);
                    let mut any = vc.valid[ci];
                    let mut hit_any = [0u64; WORDS];
                    for w in 0..n {
                        let m = ev.target_mask(target, w);
                        for j in 0..WORDS {
                            hit_any[j] |= m[j];
                        }
                    }
                    for j in 0..WORDS {
                        any[j] &= hit_any[j];
                    }
                    let base = offset + ordinal * vc.count + ci as u64 * CHUNK;
                    if transcript {
                        for j in 0..WORDS {
                            for lane in 0..64u64 {
                                if vc.valid[ci][j] >> lane & 1 == 0 {
                                    continue;
                                }
                                let v = ci as u64 * CHUNK + j as u64 * 64 + lane;
                                let vd = valuation_digits(v, vc.entries, levels);
                                let hash = fnv1a(
                                    [n as u8]
                                        .into_iter()
                                        .chain(frame.plus.iter().chain(&frame.minus).map(|&l| l as u8))
                                        .chain(vd.iter().map(|&d| d as u8)),
                                );
                                let verdict = if any[j] >> lane & 1 == 1 { "hit" } else { "miss" };
                                lines.push(format!("{} | {hash:016x} | {verdict}", base + j as u64 * 64 + lane));
                            }
                        }
                    }
                    if let Some(j) = (0..WORDS).find(|&j| any[j] != 0) {
                        let lane = any[j].trailing_zeros() as u64;
                        let world = (0..n).find(|&w| ev.target_mask(target, w)[j] >> lane & 1 == 1).unwrap();
                        let v = ci as u64 * CHUNK + j as u64 * 64 + lane;
                        let vd = valuation_digits(v, vc.entries, levels);
                        let model = build_model(n, &frame, &c.atoms, &vd, levels);
                        let value = model.eval_at(world, phi);
                        if !meets(target, &value) {
                            return Err(OracleError::Inconsistent(format!(
                                "model {} at w{world} gives {value} for {phi}",
                                model.to_json()
                            )));
                        }
                        return Ok(Search {
                            outcome: SearchOutcome::Found(Hit {
                                model,
                                world: format!("w{world}"),
                                value,
                                index: base + j as u64 * 64 + lane,
                            }),
                            transcript: lines,
                        });
                    }
                }
            }
            ordinal += 1;
            if !next_digits(&mut digits, |e| s.radix(e)) {
                break;
            }
        }
        offset += s.count() * vc.count;
    }
    Ok(Search { outcome: SearchOutcome::NotFound { models: required }, transcript: lines })
}

pub fn search_countermodel(phi: &Formula, mode: Mode, b: &SearchBounds) -> Result<SearchOutcome, OracleError> {
    search(phi, Target::Violation(mode), b, false).map(|s| s.outcome)
}

pub fn search_satisfying(phi: &Formula, mode: SatMode, b: &SearchBounds) -> Result<SearchOutcome, OracleError> {
    search(phi, Target::Satisfaction(mode), b, false).map(|s| s.outcome)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verification {
    Confirmed,
    Discrepancy,
    /// The search exceeded its budget, so a proof could not be corroborated.
    Inconclusive,
}

/// Cross-checks a verdict: countermodels by re-evaluation at the witness,
/// proofs by searching for a countermodel within `b`.
pub fn check_verdict(phi: &Formula, mode: Mode, v: &Verdict, b: &SearchBounds) -> Result<Verification, OracleError> {
    match v {
        Verdict::Countermodel(cm) => {
            let coord_ok = match mode {
                Mode::Pos => cm.coord == Coord::One,
                Mode::Neg => cm.coord == Coord::Two,
                Mode::Strong => true,
            };
            let ok = coord_ok
                && match cm.model.eval(&cm.world, phi) {
                    Ok(value) => {
                        let falsified = match cm.coord {
                            Coord::One => !value.pos.is_one(),
                            Coord::Two => !value.neg.is_zero(),
                        };
                        falsified && value == cm.value
                    }
                    Err(_) => false,
                };
            Ok(if ok { Verification::Confirmed } else { Verification::Discrepancy })
        }
        Verdict::Proved => Ok(match search_countermodel(phi, mode, b)? {
            SearchOutcome::Found(_) => Verification::Discrepancy,
            SearchOutcome::NotFound { .. } => Verification::Confirmed,
            SearchOutcome::BudgetExceeded { .. } => Verification::Inconclusive,
        }),
    }
}

/// True unless the verdict is contradicted; an exhausted budget counts as
/// inconclusive rather than as a failure.
pub fn verify_verdict(phi: &Formula, mode: Mode, v: &Verdict) -> Result<bool, OracleError> {
    let b = SearchBounds::for_formula(phi);
    Ok(check_verdict(phi, mode, v, &b)? != Verification::Discrepancy)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RuleCheck {
    /// The premise survived the search and so did both conclusions.
    Sound,
    /// The premise has a countermodel within bounds.
    Vacuous,
    /// The premise survived but a conclusion has a countermodel.
    Violated,
    Inconclusive,
}

/// Checks the monotonicity rules: from `φ → χ` infer `■φ → ■χ` and
/// `♦φ → ♦χ`, with strong validity within the search bounds.
pub fn monotonicity_rule_report(phi: &Formula, chi: &Formula, b: &SearchBounds) -> Result<RuleCheck, OracleError> {
    let premise = Formula::implies(phi.clone(), chi.clone());
    match search_countermodel(&premise, Mode::Strong, b)? {
        SearchOutcome::Found(_) => return Ok(RuleCheck::Vacuous),
        SearchOutcome::BudgetExceeded { .. } => return Ok(RuleCheck::Inconclusive),
        SearchOutcome::NotFound { .. } => {}
    }
    let conclusions = [
        Formula::implies(Formula::square(phi.clone()), Formula::square(chi.clone())),
        Formula::implies(Formula::diamond(phi.clone()), Formula::diamond(chi.clone())),
    ];
    for c in &conclusions {
        match search_countermodel(c, Mode::Strong, b)? {
            SearchOutcome::Found(_) => return Ok(RuleCheck::Violated),
            SearchOutcome::BudgetExceeded { .. } => return Ok(RuleCheck::Inconclusive),
            SearchOutcome::NotFound { .. } => {}
        }
    }
    Ok(RuleCheck::Sound)
}

/// False only when a conclusion is refuted while the premise survives.
pub fn monotonicity_rule_check(phi: &Formula, chi: &Formula, b: &SearchBounds) -> Result<bool, OracleError> {
    Ok(monotonicity_rule_report(phi, chi, b)? != RuleCheck::Violated)
}

/// Every formula over the core connectives (¬, ∧, →, ■, ♦) and the given
/// atoms, up to `max_size` nodes and modal depth `max_depth`, smallest
/// first.
pub fn enumerate_formulas(atoms: &[&str], max_size: usize, max_depth: usize) -> Vec<Formula> {
    // by_size[s] holds formulas of exactly s nodes, tagged with modal depth.
    let mut by_size: Vec<Vec<(Formula, usize)>> = vec![Vec::new(); max_size + 1];
    for s in 1..=max_size {
        let mut out = Vec::new();
        if s == 1 {
            out.extend(atoms.iter().map(|a| (Formula::atom(*a), 0)));
        } else {
            for (f, d) in &by_size[s - 1] {
                out.push((Formula::neg(f.clone()), *d));
                if *d < max_depth {
                    out.push((Formula::square(f.clone()), d + 1));
                    out.push((Formula::diamond(f.clone()), d + 1));
                }
            }
            for left in 1..s - 1 {
                let right = s - 1 - left;
                for (a, da) in &by_size[left] {
                    for (b, db) in &by_size[right] {
                        let d = (*da).max(*db);
                        out.push((Formula::and(a.clone(), b.clone()), d));
                        out.push((Formula::implies(a.clone(), b.clone()), d));
                    }
                }
            }
        }
        by_size[s] = out;
    }
    by_size.into_iter().flatten().map(|(f, _)| f).collect()
}

/// A random core formula with exactly `size` nodes.
pub fn random_formula<R: rand::Rng>(rng: &mut R, size: usize, atoms: &[&str]) -> Formula {
    if size <= 1 {
        return Formula::atom(atoms[rng.random_range(0..atoms.len())]);
    }
    if size == 2 || rng.random_bool(0.4) {
        let a = random_formula(rng, size - 1, atoms);
        return match rng.random_range(0..3) {
            0 => Formula::neg(a),
            1 => Formula::square(a),
            _ => Formula::diamond(a),
        };
    }
    let left = rng.random_range(1..size - 1);
    let (a, b) = (random_formula(rng, left, atoms), random_formula(rng, size - 1 - left, atoms));
    if rng.random_bool(0.5) {
        Formula::and(a, b)
    } else {
        Formula::implies(a, b)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::formula::parse;
    use crate::tableau::prove;

    fn f(s: &str) -> Formula {
        parse(s).unwrap()
    }

    fn found(s: &str, mode: Mode, b: &SearchBounds) -> bool {
        search_countermodel(&f(s), mode, b).unwrap().hit().is_some()
    }

    #[test]
    fn valid_formula_has_no_countermodel() {
        assert!(!found("p -> p", Mode::Strong, &SearchBounds::new(2, 2)));
        assert!(!found("box (p & q) -> box p", Mode::Strong, &SearchBounds::new(2, 2)));
    }

    #[test]
    fn non_normal_diamond() {
        let b = SearchBounds::new(2, 2);
        let out = search_countermodel(&f("dia (p | q) <-> (dia p | dia q)"), Mode::Strong, &b).unwrap();
        let hit = out.hit().expect("countermodel within two worlds");
        let v = hit.model.eval(&hit.world, &f("dia (p | q) <-> (dia p | dia q)")).unwrap();
        assert!(Mode::Strong.violated_by(&v));
    }

    #[test]
    fn bit_sliced_agrees_with_evaluator() {
        // Every lane of every block against the reference evaluator.
        for (text, n, levels) in [
            ("box (p -> neg q) -< dia (q & neg p)", 2, 1),
            ("neg box neg p -> dia (p -< neg p)", 2, 2),
            ("box dia p & neg dia box neg p", 2, 3),
        ] {
            let phi = f(text);
            let c = compile(&phi);
            let fuzzy: Vec<u32> = (0..=levels).collect();
            let s = FrameSpace { n, plus_levels: fuzzy.clone(), minus_levels: fuzzy, mono: false, relevant: true };
            let vc = valuation_chunks(n * c.atoms.len() * 2, levels);
            let mut ev = Evaluator::new(&c, n, levels as usize);
            let mut digits = vec![0usize; s.entries()];
            let mut frames = 0;
            loop {
                frames += 1;
                let frame = s.frame(&digits);
                // A sample of frames keeps the test fast while covering all levels.
                if frames % 37 == 1 {
                    for (ci, chunk) in vc.chunks.iter().enumerate() {
                        ev.run(&frame, chunk);
                        for lane in 0..CHUNK {
                            let v = ci as u64 * CHUNK + lane;
                            if v >= vc.count {
                                break;
                            }
                            let (j, bit) = ((lane / 64) as usize, lane % 64);
                            let vd = valuation_digits(v, vc.entries, levels);
                            let m = build_model(n, &frame, &c.atoms, &vd, levels);
                            for w in 0..n {
                                let value = m.eval_at(w, &phi);
                                for mode in [Mode::Pos, Mode::Neg] {
                                    let hit = ev.target_mask(Target::Violation(mode), w)[j] >> bit & 1 == 1;
                                    assert_eq!(hit, mode.violated_by(&value), "{text} {}", m.to_json());
                                }
                            }
                        }
                    }
                }
                if !next_digits(&mut digits, |e| s.radix(e)) {
                    break;
                }
            }
        }
    }

    #[test]
    fn crisp_minus_frames_define_the_formula() {
        let phi = f("neg box neg (p | q) -> (neg box neg p | neg dia neg q)");
        let crisp = SearchBounds { crisp_minus_only: true, ..SearchBounds::new(2, 2) };
        assert!(search_countermodel(&phi, Mode::Pos, &crisp).unwrap().hit().is_none());
        assert!(search_countermodel(&phi, Mode::Pos, &SearchBounds::new(2, 2)).unwrap().hit().is_some());
    }

    #[test]
    fn budget_is_reported() {
        let b = SearchBounds { budget: 10, ..SearchBounds::new(2, 2) };
        assert!(matches!(
            search_countermodel(&f("box p -> p"), Mode::Pos, &b).unwrap(),
            SearchOutcome::BudgetExceeded { .. }
        ));
    }

    #[test]
    fn transcripts_are_deterministic() {
        let b = SearchBounds::new(1, 1);
        let a = search(&f("box p"), Target::Violation(Mode::Strong), &b, true).unwrap();
        let c = search(&f("box p"), Target::Violation(Mode::Strong), &b, true).unwrap();
        assert_eq!(a.transcript, c.transcript);
        assert!(!a.transcript.is_empty());
        assert!(a.transcript.iter().all(|l| l.split(" | ").count() == 3));
    }

    #[test]
    fn enumeration_counts() {
        // Sizes 1..=3 over one atom: p; ¬p ■p ♦p; six unary chains of two
        // plus p∧p and p→p.
        assert_eq!(enumerate_formulas(&["p"], 3, 2).len(), 1 + 3 + 9 + 2);
        assert_eq!(enumerate_formulas(&["p"], 3, 1).len(), 1 + 3 + 5 + 2);
        let all = enumerate_formulas(&["p", "q"], 5, 2);
        assert!(all.iter().all(|f| f.size() <= 5 && f.modal_depth() <= 2));
        let set: std::collections::HashSet<_> = all.iter().collect();
        assert_eq!(set.len(), all.len());
    }

    #[test]
    fn random_formulas_have_requested_size() {
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        for size in 1..12 {
            assert_eq!(random_formula(&mut rng, size, &["p", "q"]).size(), size);
        }
    }

    #[test]
    fn default_bounds() {
        assert_eq!(SearchBounds::for_formula(&f("p")).max_worlds, 1);
        assert_eq!(SearchBounds::for_formula(&f("box p")).max_worlds, 1);
        assert_eq!(SearchBounds::for_formula(&f("box p -> dia p")).max_worlds, 2);
    }

    #[test]
    fn verdict_checks() {
        let phi = f("(p & neg p) -> q");
        let v = prove(&phi, Mode::Strong).unwrap();
        assert!(verify_verdict(&phi, Mode::Strong, &v).unwrap());
        let Verdict::Countermodel(mut cm) = v else { panic!("explosion fails") };
        cm.value = ValuePair::new(Rational01::one(), Rational01::zero());
        assert!(!verify_verdict(&phi, Mode::Strong, &Verdict::Countermodel(cm)).unwrap());
        let id = f("p -> p");
        assert!(verify_verdict(&id, Mode::Strong, &prove(&id, Mode::Strong).unwrap()).unwrap());
    }

    #[test]
    fn monotonicity_examples() {
        let b = SearchBounds::new(2, 2);
        assert_eq!(monotonicity_rule_report(&f("p & q"), &f("p"), &b).unwrap(), RuleCheck::Sound);
        assert_eq!(monotonicity_rule_report(&f("p"), &f("q"), &b).unwrap(), RuleCheck::Vacuous);
        assert_eq!(monotonicity_rule_report(&f("p"), &f("p | q"), &b).unwrap(), RuleCheck::Sound);
        assert!(monotonicity_rule_check(&f("p"), &f("q"), &b).unwrap());
    }

    #[test]
    fn fb_unsatisfiable_has_no_finite_model() {
        for b in [SearchBounds::new(1, 2), SearchBounds::new(2, 2), SearchBounds::new(2, 3)] {
            assert!(search_satisfying(&f("~ box (p | ~p)"), SatMode::Pos1, &b).unwrap().hit().is_none());
        }
    }
}
