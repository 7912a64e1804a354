use paragodel::algebra::{gcoimpl, gimpl, meet, join};
use paragodel::formula::SourceFormula;
use paragodel::model::{attach_counterpart, FuzzyFrame};
use paragodel::oracle::{search, Target};
use paragodel::tableau::{apply_rule, expand, prove_with, Constraint, Side, Structure};
use paragodel::translate::SingleRelationModel;
use paragodel::*;
use proptest::prelude::*;

const ATOMS: [&str; 3] = ["p", "q", "r"];
const GRID: u32 = 4;

fn grid_value() -> impl Strategy<Value = Rational01> {
    (0..=GRID).prop_map(|k| Rational01::grid(k, GRID))
}

fn atom() -> impl Strategy<Value = Formula> {
    prop::sample::select(ATOMS.to_vec()).prop_map(Formula::atom)
}

/// Formulas over Atom/Neg/And/Impl/Square/Diamond.
fn core_formula(depth: u32, size: u32) -> impl Strategy<Value = Formula> {
    atom().prop_recursive(depth, size, 2, |inner| {
        prop_oneof![
            inner.clone().prop_map(Formula::neg),
            inner.clone().prop_map(Formula::square),
            inner.clone().prop_map(Formula::diamond),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| Formula::and(a, b)),
            (inner.clone(), inner).prop_map(|(a, b)| Formula::implies(a, b)),
        ]
    })
}

/// Formulas using every connective of the concrete syntax.
fn sugared_formula() -> impl Strategy<Value = Formula> {
    let leaf = prop_oneof![4 => atom(), 1 => Just(Formula::Top), 1 => Just(Formula::Bot)];
    leaf.prop_recursive(4, 24, 2, |inner| {
        prop_oneof![
            inner.clone().prop_map(Formula::neg),
            inner.clone().prop_map(Formula::gneg),
            inner.clone().prop_map(Formula::square),
            inner.clone().prop_map(Formula::diamond),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| Formula::and(a, b)),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| Formula::or(a, b)),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| Formula::implies(a, b)),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| Formula::coimpl(a, b)),
            (inner.clone(), inner).prop_map(|(a, b)| Formula::iff(a, b)),
        ]
    })
}

fn source_formula() -> impl Strategy<Value = SourceFormula> {
    use SourceFormula as S;
    let leaf = prop_oneof![4 => prop::sample::select(vec!["p", "q"]).prop_map(S::atom), 1 => Just(S::Bot)];
    leaf.prop_recursive(4, 16, 2, |inner| {
        let bin = |f: fn(Box<S>, Box<S>) -> S, i: BoxedStrategy<S>| {
            (i.clone(), i).prop_map(move |(a, b)| f(Box::new(a), Box::new(b)))
        };
        let i = inner.boxed();
        prop_oneof![
            i.clone().prop_map(|a| S::Box(Box::new(a))),
            i.clone().prop_map(|a| S::Dia(Box::new(a))),
            bin(S::And, i.clone()),
            bin(S::Or, i.clone()),
            bin(S::Impl, i.clone()),
            bin(S::Coimpl, i),
        ]
    })
}

fn world(i: usize) -> String {
    format!("w{i}")
}

/// Bi-relational models with 1 to 3 worlds on the quarter grid.
fn model() -> impl Strategy<Value = KripkeModel> {
    (1usize..=3).prop_flat_map(|n| {
        let rels = prop::collection::vec(grid_value(), 2 * n * n);
        let vals = prop::collection::vec((grid_value(), grid_value()), n * ATOMS.len());
        (rels, vals).prop_map(move |(rels, vals)| {
            let mut m = KripkeModel::new((0..n).map(world)).unwrap();
            for (k, v) in rels.into_iter().enumerate() {
                let sign = if k < n * n { Sign::Plus } else { Sign::Minus };
                let k = k % (n * n);
                m.set_rel_idx(sign, k / n, k % n, v);
            }
            for (k, (a, b)) in vals.into_iter().enumerate() {
                m.set_val_idx(k / ATOMS.len(), ATOMS[k % ATOMS.len()], ValuePair::new(a, b));
            }
            m
        })
    })
}

fn fuzzy_frame(n: usize) -> impl Strategy<Value = FuzzyFrame> {
    prop::collection::vec(grid_value(), n * n).prop_map(move |vs| {
        vs.into_iter().enumerate().fold(FuzzyFrame::new((0..n).map(world)), |f, (k, v)| {
            f.with_edge(&world(k / n), &world(k % n), v)
        })
    })
}

fn coord() -> impl Strategy<Value = Coord> {
    prop_oneof![Just(Coord::One), Just(Coord::Two)]
}

fn mode() -> impl Strategy<Value = Mode> {
    prop_oneof![Just(Mode::Pos), Just(Mode::Neg), Just(Mode::Strong)]
}

fn small_config() -> TableauConfig {
    TableauConfig { max_worlds: 400, max_constraints: 20_000, max_branches: 50_000, record_transcript: false }
}

/// Largest tree of witnesses: each world spawns at most one witness per
/// modal subformula and coordinate, to modal depth `d`.
fn witness_bound(phi: &Formula) -> usize {
    let d = phi.desugar();
    let k = 2 * d.modal_count();
    (0..=d.modal_depth() as u32).map(|i| k.pow(i)).sum()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn printing_round_trips(phi in sugared_formula()) {
        prop_assert_eq!(parse(&phi.to_string()).unwrap(), phi);
    }

    #[test]
    fn desugaring_yields_core_syntax(phi in sugared_formula()) {
        let d = phi.desugar();
        prop_assert!(d.is_core());
        prop_assert_eq!(d.modal_count(), phi.modal_count());
        prop_assert_eq!(d.modal_depth(), phi.modal_depth());
        prop_assert_eq!(d.atoms(), phi.atoms());
    }

    #[test]
    fn desugaring_preserves_values(phi in sugared_formula(), m in model()) {
        prop_assert_eq!(m.eval_all(&phi), m.eval_all(&phi.desugar()));
    }

    #[test]
    fn residuation(a in grid_value(), b in grid_value(), c in grid_value()) {
        prop_assert_eq!(meet(&a, &b) <= c, a <= gimpl(&b, &c));
        prop_assert_eq!(gcoimpl(&a, &b) <= c, a <= join(&b, &c));
    }

    #[test]
    fn implication_extremes(a in grid_value(), b in grid_value()) {
        prop_assert_eq!(gimpl(&a, &b).is_one(), a <= b);
        prop_assert_eq!(gcoimpl(&a, &b).is_zero(), a <= b);
    }

    #[test]
    fn negation_swaps_coordinates(phi in core_formula(4, 16), m in model()) {
        let plain = m.eval_all(&phi);
        let negated = m.eval_all(&Formula::neg(phi.clone()));
        let double = m.eval_all(&Formula::neg(Formula::neg(phi)));
        for ((v, n), d) in plain.iter().zip(&negated).zip(&double) {
            prop_assert_eq!(&v.swap(), n);
            prop_assert_eq!(v, d);
        }
    }

    #[test]
    fn values_stay_in_unit_interval(phi in sugared_formula(), m in model()) {
        for v in m.eval_all(&phi) {
            for c in [Coord::One, Coord::Two] {
                prop_assert!(*v.get(c) >= Rational01::zero() && *v.get(c) <= Rational01::one());
            }
        }
    }

    #[test]
    fn mono_relational_square_commutes_with_negation(m in model(), phi in core_formula(3, 8)) {
        let mut m = m;
        let n = m.world_count();
        for u in 0..n {
            for v in 0..n {
                let r = m.rel(Sign::Plus, u, v);
                m.set_rel_idx(Sign::Minus, u, v, r);
            }
        }
        let boxed_neg = m.eval_all(&Formula::square(Formula::neg(phi.clone())));
        let boxed = m.eval_all(&Formula::square(phi));
        for (a, b) in boxed_neg.iter().zip(&boxed) {
            prop_assert_eq!(a, &b.swap());
        }
    }
}

/// Every rule instance whose premise holds in a model has an alternative
/// that holds too: some choice of witness world works for all targets.
fn rule_is_sound(premise: &Constraint, side: Side, m: &KripkeModel) -> Result<(), TestCaseError> {
    if premise.holds_in(m) != Some(true) {
        return Ok(());
    }
    let names = m.worlds().to_vec();
    let Some(probe) = apply_rule(premise, side, &names[0], Some(&names[0])) else { return Ok(()) };
    let witnessed = names.iter().any(|fresh| {
        names.iter().all(|target| {
            let inst = apply_rule(premise, side, fresh, Some(target)).expect("rule applies");
            inst.alternatives.iter().any(|alt| alt.iter().all(|c| c.holds_in(m) == Some(true)))
        })
    });
    prop_assert!(witnessed, "rule {} unsound for {premise} on {:?} in {}", probe.name, side, m.to_json());
    Ok(())
}

fn bound() -> impl Strategy<Value = Structure> {
    prop_oneof![
        Just(Structure::Zero),
        Just(Structure::One),
        (0usize..3, coord(), atom()).prop_map(|(w, c, a)| Structure::at(world(w), c, a)),
        (0usize..3, 0usize..3, prop_oneof![Just(Sign::Plus), Just(Sign::Minus)])
            .prop_map(|(u, v, s)| Structure::rel(world(u), s, world(v))),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(2048))]

    #[test]
    fn rules_preserve_realisability(
        m in model(),
        phi in core_formula(2, 6),
        c in coord(),
        b in bound(),
        strict in any::<bool>(),
        left in any::<bool>(),
    ) {
        // Bounds mentioning worlds outside the model never hold, so they are skipped.
        let s = Structure::at("w0", c, phi);
        let (premise, side) = if left {
            (Constraint { left: s, right: b, strict }, Side::Left)
        } else {
            (Constraint { left: b, right: s, strict }, Side::Right)
        };
        rule_is_sound(&premise, side, &m)?;
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn extracted_models_realise_their_branch(phi in core_formula(4, 12), c in coord()) {
        let s = Structure::at("w0", c, phi.clone());
        let initial = match c {
            Coord::One => Constraint::lt(s, Structure::One),
            Coord::Two => Constraint::gt(s, Structure::Zero),
        };
        let ex = expand(std::slice::from_ref(&initial), &small_config()).unwrap();
        if let Some(o) = ex.open {
            prop_assert!(o.report.passed(), "{:?}", o.report.violations);
            prop_assert!(o.report.class_count <= o.report.class_bound);
            prop_assert_eq!(initial.holds_in(&o.model), Some(true));
        }
    }

    #[test]
    fn expansion_terminates_within_witness_bound(phi in core_formula(4, 12), m in mode()) {
        let proof = prove_with(&phi, m, &small_config()).unwrap();
        if let Some(cm) = proof.verdict.countermodel() {
            prop_assert!(cm.model.world_count() <= witness_bound(&phi));
            prop_assert!(m.violated_by(&cm.value));
            prop_assert_eq!(&cm.model.eval(&cm.world, &phi).unwrap(), &cm.value);
        }
    }

    #[test]
    fn tableau_and_oracle_agree_on_three_atoms(
        phi in core_formula(5, 8).prop_filter("size at most 8", |f| f.size() <= 8),
    ) {
        match prove(&phi, Mode::Strong).unwrap() {
            Verdict::Countermodel(cm) => {
                prop_assert!(Mode::Strong.violated_by(&cm.value));
                prop_assert_eq!(&cm.model.eval(&cm.world, &phi).unwrap(), &cm.value);
            }
            Verdict::Proved => {
                let fine = SearchBounds::new(2, 2);
                let outcome = match search_countermodel(&phi, Mode::Strong, &fine).unwrap() {
                    SearchOutcome::BudgetExceeded { .. } => {
                        search_countermodel(&phi, Mode::Strong, &SearchBounds::new(2, 1)).unwrap()
                    }
                    o => o,
                };
                prop_assert!(matches!(outcome, SearchOutcome::NotFound { .. }), "{phi}: {outcome:?}");
            }
        }
    }

    #[test]
    fn oracle_hits_replay(phi in core_formula(3, 7), m in mode()) {
        let b = SearchBounds::new(2, 2);
        let s = search(&phi, Target::Violation(m), &b, false).unwrap();
        if let Some(h) = s.outcome.hit() {
            let v = h.model.eval(&h.world, &phi).unwrap();
            prop_assert_eq!(&v, &h.value);
            prop_assert!(m.violated_by(&v));
        }
    }

    #[test]
    fn oracle_transcripts_are_deterministic(phi in core_formula(2, 5)) {
        let b = SearchBounds::new(2, 1);
        let t = Target::Violation(Mode::Strong);
        let first = search(&phi, t, &b, true).unwrap().transcript;
        let second = search(&phi, t, &b, true).unwrap().transcript;
        prop_assert_eq!(first, second);
    }

    #[test]
    fn bullet_translations_match_single_relation_semantics(
        phi in source_formula(),
        (n, frame, other, vals) in (1usize..=3).prop_flat_map(|n| {
            (Just(n), fuzzy_frame(n), fuzzy_frame(n), prop::collection::vec((grid_value(), grid_value()), 2 * n))
        }),
    ) {
        let mut single = SingleRelationModel::new(frame.clone());
        for (sign, image) in [(Sign::Plus, plus_bullet(&phi)), (Sign::Minus, minus_bullet(&phi))] {
            let mut m = attach_counterpart(&frame, &other, sign).unwrap();
            for (k, (a, b)) in vals.iter().enumerate() {
                let (w, p) = (world(k / 2), ["p", "q"][k % 2]);
                m.set_val(&w, p, a.clone(), b.clone()).unwrap();
                single.val.insert((w, p.to_string()), a.clone());
            }
            for i in 0..n {
                let w = world(i);
                prop_assert_eq!(m.eval(&w, &image).unwrap().pos, single.eval(&w, &phi).unwrap());
            }
        }
    }

    #[test]
    fn translations_are_size_linear(phi in source_formula()) {
        let n = phi.size();
        prop_assert_eq!(plus_bullet(&phi).size(), n);
        prop_assert!(minus_bullet(&phi).size() <= 3 * n);
        prop_assert_eq!(nabla(&phi).size(), 3 * n);
        // Atoms become 1 -< (1 -< p), five nodes each.
        prop_assert!(partial(&phi).size() <= 5 * n);
    }
}

/// Validity over crisp single-relation frames with up to three worlds agrees
/// with positive validity of the bullet images on any counterpart frame.
#[test]
fn crisp_frame_validity_transfers_to_bullet_images() {
    let suite = ["box p -> p", "box p -> box box p", "p -> box dia p", "box (p -> q) -> (box p -> box q)", "dia p -> box p", "dia 1"];
    let grid = [Rational01::zero(), Rational01::grid(1, 2), Rational01::one()];
    for n in 1..=3usize {
        for bits in 0u32..(1 << (n * n)) {
            let edge = |k: usize| if bits >> k & 1 == 1 { Rational01::one() } else { Rational01::zero() };
            let frame = (0..n * n).fold(FuzzyFrame::new((0..n).map(world)), |f, k| f.with_edge(&world(k / n), &world(k % n), edge(k)));
            let other = (0..n * n).fold(FuzzyFrame::new((0..n).map(world)), |f, k| f.with_edge(&world(k / n), &world(k % n), edge(n * n - 1 - k)));
            for text in suite {
                let phi = SourceFormula::try_from(&parse(text).unwrap()).unwrap();
                let atoms: Vec<String> = phi.to_syntax().atoms().into_iter().collect();
                let slots = n * atoms.len();
                let mut single_valid = true;
                let mut plus_valid = true;
                let mut minus_valid = true;
                let plus_m = attach_counterpart(&frame, &other, Sign::Plus).unwrap();
                let minus_m = attach_counterpart(&frame, &other, Sign::Minus).unwrap();
                let (pi, mi) = (plus_bullet(&phi), minus_bullet(&phi));
                for code in 0..3usize.pow(slots as u32) {
                    let mut single = SingleRelationModel::new(frame.clone());
                    let (mut pm, mut mm) = (plus_m.clone(), minus_m.clone());
                    let mut c = code;
                    for k in 0..slots {
                        let v = grid[c % 3].clone();
                        c /= 3;
                        let (w, a) = (world(k / atoms.len()), &atoms[k % atoms.len()]);
                        single.val.insert((w.clone(), a.clone()), v.clone());
                        pm.set_val(&w, a, v.clone(), Rational01::zero()).unwrap();
                        mm.set_val(&w, a, v, Rational01::one()).unwrap();
                    }
                    for i in 0..n {
                        let w = world(i);
                        single_valid &= single.eval(&w, &phi).unwrap().is_one();
                        plus_valid &= pm.eval(&w, &pi).unwrap().pos.is_one();
                        minus_valid &= mm.eval(&w, &mi).unwrap().pos.is_one();
                    }
                }
                assert_eq!(single_valid, plus_valid, "{text} on {n} worlds, edges {bits:b}");
                assert_eq!(single_valid, minus_valid, "{text} on {n} worlds, edges {bits:b}");
            }
        }
    }
}
