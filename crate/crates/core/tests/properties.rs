use proptest::prelude::*;

use verbum_core::argument::{
    evaluate, pool, replay, ArgumentGraph, Claim, EngineConfig, Ground, Outcome, QuantifierLexicon, QuantifierSpec,
    Rebuttal, Resolutions, Warrant, CLAIM,
};
use verbum_core::bayes::{bayes_posterior, BenchConfig, Draw};
use verbum_core::fuzzy::UnitFuzzyNumber;
use verbum_core::lexicon::Lexicon;
use verbum_core::rasch::{fit, rasch_probability, ResponseMatrix};

fn ufn() -> impl Strategy<Value = UnitFuzzyNumber> {
    prop::array::uniform4(0.0..=1.0f64).prop_map(|mut c| {
        c.sort_by(f64::total_cmp);
        UnitFuzzyNumber::new(c[0], c[1], c[2], c[3]).unwrap()
    })
}

fn well_formed(f: &UnitFuzzyNumber) -> bool {
    let [a, b, c, d] = f.corners();
    0.0 <= a && a <= b && b <= c && c <= d && d <= 1.0
}

proptest! {
    #[test]
    fn operations_stay_in_unit_interval(f in ufn(), g in ufn()) {
        for r in [f.mul(&g), f.add(&g), f.sub_bounded(&g), f.complement(), f.fuzzy_min(&g), f.fuzzy_max(&g)] {
            prop_assert!(well_formed(&r), "{r:?}");
        }
    }

    #[test]
    fn mul_add_commute(f in ufn(), g in ufn()) {
        prop_assert_eq!(f.mul(&g), g.mul(&f));
        prop_assert_eq!(f.add(&g), g.add(&f));
    }

    #[test]
    fn complement_is_involution(f in ufn()) {
        let back = f.complement().complement();
        for (x, y) in f.corners().iter().zip(back.corners()) {
            prop_assert!((x - y).abs() < 1e-12);
        }
    }

    #[test]
    fn distance_is_a_metric(f in ufn(), g in ufn(), h in ufn()) {
        prop_assert_eq!(f.distance(&f), 0.0);
        prop_assert!((f.distance(&g) - g.distance(&f)).abs() < 1e-12);
        prop_assert!(f.distance(&h) <= f.distance(&g) + g.distance(&h) + 1e-9);
    }

    #[test]
    fn alpha_cuts_are_nested(f in ufn(), a1 in 0.0..=1.0f64, a2 in 0.0..=1.0f64) {
        let (lo, hi) = if a1 <= a2 { (a1, a2) } else { (a2, a1) };
        prop_assert!(f.alpha_cut(hi).unwrap().is_subset_of(&f.alpha_cut(lo).unwrap()));
    }

    #[test]
    fn default_lexicon_is_valid_and_self_nearest(k in 2usize..=9) {
        let lex = Lexicon::default_lexicon(k).unwrap();
        prop_assert_eq!(lex.len(), k);
        prop_assert!(lex.validate().iter().all(|v| v.is_warning()));
        for (i, l) in lex.labels().iter().enumerate() {
            prop_assert_eq!(lex.nearest_index(&l.meaning), i);
            prop_assert!((l.meaning.median() - (2 * i + 1) as f64 / (2 * k) as f64).abs() < 1e-12);
        }
    }

    #[test]
    fn rasch_probability_is_monotone(x in -30.0..30.0f64, d in -30.0..30.0f64, step in 0.001..5.0f64) {
        let p = rasch_probability(x, d);
        prop_assert!((0.0..=1.0).contains(&p));
        prop_assert!(rasch_probability(x + step, d) >= p);
        prop_assert!(rasch_probability(x, d + step) <= p);
    }

    #[test]
    fn cml_orders_items_by_total(cells in prop::collection::vec(prop::collection::vec(0u8..=1, 5), 30..60)) {
        let items: Vec<String> = (0..5).map(|j| format!("i{j}")).collect();
        let m = ResponseMatrix::from_rows(items, cells.clone()).unwrap();
        let Ok(f) = fit(&m) else { return Ok(()) };
        prop_assume!(f.converged && f.dropped_items.is_empty());
        prop_assert!(f.difficulties.iter().sum::<f64>().abs() < 1e-8);
        let totals: Vec<usize> = (0..5).map(|j| cells.iter().map(|r| r[j] as usize).sum()).collect();
        for i in 0..5 {
            for j in 0..5 {
                if totals[i] > totals[j] {
                    prop_assert!(f.difficulties[i] < f.difficulties[j], "{totals:?} {:?}", f.difficulties);
                }
            }
        }
    }

    #[test]
    fn posterior_depends_on_net_count_only(draws in prop::collection::vec(any::<bool>(), 0..40), r in 0.55..0.95f64) {
        let config = BenchConfig { success_ratio: r, ..BenchConfig::default() };
        let seq: Vec<Draw> = draws.iter().map(|&a| if a { Draw::A } else { Draw::B }).collect();
        let mut sorted = seq.clone();
        sorted.sort_by_key(|d| *d == Draw::B);
        let flipped: Vec<Draw> = seq.iter().map(|d| if *d == Draw::A { Draw::B } else { Draw::A }).collect();
        let p = bayes_posterior(&config, &seq);
        prop_assert!((0.0..=1.0).contains(&p));
        prop_assert!((p - bayes_posterior(&config, &sorted)).abs() < 1e-12);
        prop_assert!((p + bayes_posterior(&config, &flipped) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn evaluation_replays(g1 in ufn(), g2 in ufn(), q1 in ufn(), q2 in ufn(), r in ufn()) {
        let ground = |id: &str, credibility| Ground { id: id.into(), statement: String::new(), credibility, support: vec![] };
        let warrant = |id: &str, premises: Vec<&str>, q| Warrant {
            id: id.into(),
            statement: String::new(),
            premises: premises.into_iter().map(String::from).collect(),
            quantifier: QuantifierSpec::Explicit(q),
            supports_claim: true,
        };
        let graph = ArgumentGraph {
            claim: Claim { statement: "c".into(), qualifier: None },
            grounds: vec![ground("g1", g1), ground("g2", g2)],
            warrants: vec![warrant("w1", vec!["g1", "g2"], q1), warrant("w2", vec!["g2"], q2)],
            backings: vec![],
            rebuttals: vec![Rebuttal { target: CLAIM.into(), statement: String::new(), strength: r }],
        };
        let out = evaluate(&graph, &QuantifierLexicon::new(), &Resolutions::new(), &Lexicon::default_lexicon(5).unwrap(), EngineConfig::default()).unwrap();
        let Outcome::Evaluated(e) = out else { panic!("pending") };
        prop_assert!(well_formed(&e.claim));
        prop_assert_eq!(replay(&e).unwrap(), e.claim);
    }

    #[test]
    fn pool_lies_between_inputs(fs in prop::collection::vec(ufn(), 2..6)) {
        let p = pool(&fs).unwrap();
        for i in 0..4 {
            let lo = fs.iter().map(|f| f.corners()[i]).fold(1.0, f64::min);
            let hi = fs.iter().map(|f| f.corners()[i]).fold(0.0, f64::max);
            prop_assert!(p.corners()[i] >= lo - 1e-12 && p.corners()[i] <= hi + 1e-12);
        }
    }
}
