//! Properties of the explanation pipeline on small random builtin instances,
//! checked against direct evaluation of the closed-form classifiers and
//! against the exhaustive oracle.

use causex_core::explain::{self, round_units, ExplainConfig, Predicate};
use causex_core::oracle::{OracleTable, TinyInstance};
use causex_core::responsibility::{pixel_ranking, ResponsibilityConfig};
use causex_core::{validate_baseline, Baseline, BuiltinModel, Classifier, ClassifierSpec, Error, Execution, ImageTensor, PixelMask, Shape};
use proptest::prelude::*;

#[derive(Debug, Clone)]
struct Case {
    h: usize,
    w: usize,
    pixels: Vec<f32>,
    model: String,
}

fn subset(n: usize) -> impl Strategy<Value = Vec<usize>> {
    proptest::sample::subsequence((0..n).collect::<Vec<_>>(), 1..=n.min(4))
}

fn join(v: &[usize]) -> String {
    v.iter().map(|p| p.to_string()).collect::<Vec<_>>().join(",")
}

fn case() -> impl Strategy<Value = Case> {
    (1usize..=4, 1usize..=4)
        .prop_filter("at least two pixels", |(h, w)| h * w >= 2)
        .prop_flat_map(|(h, w)| {
            let n = h * w;
            let model = prop_oneof![
                subset(n).prop_map(|s| format!("and:{}", join(&s))),
                subset(n).prop_map(|s| format!("or:{}", join(&s))),
                (0..n).prop_map(|k| format!("count-conf:{k}")),
                subset(n).prop_flat_map(|s| (1..=s.len()).prop_map(move |m| format!("threshold:{m}:{}", join(&s)))),
            ];
            let pixels = proptest::collection::vec(prop_oneof![Just(0.0f32), Just(1.0f32), 0.0f32..=1.0], n);
            (Just(h), Just(w), pixels, model)
        })
        .prop_map(|(h, w, pixels, model)| Case { h, w, pixels, model })
}

fn delta() -> impl Strategy<Value = f64> {
    prop_oneof![Just(0.0), Just(0.25), Just(0.5), Just(1.0)]
}

impl Case {
    fn builtin(&self) -> BuiltinModel {
        self.model.parse().unwrap()
    }
    fn spec(&self) -> ClassifierSpec {
        ClassifierSpec::builtin(self.builtin(), Shape::new(self.h, self.w, 1).unwrap())
    }
    fn image(&self) -> ImageTensor {
        ImageTensor::from_gray(self.h, self.w, (0.0, 1.0), &self.pixels).unwrap()
    }
    fn classifier(&self) -> Classifier {
        Classifier::load_with(self.spec(), Execution::Sequential).unwrap()
    }
    /// Confidences straight from the closed form, with `keep` pixels at
    /// their image value and the rest at 0.
    fn direct(&self, keep: &PixelMask) -> Vec<f64> {
        let on: Vec<bool> = (0..self.pixels.len()).map(|i| keep.contains(i) && self.pixels[i] > 0.5).collect();
        self.builtin().evaluate(&on)
    }
}

fn argmax(v: &[f64]) -> usize {
    let mut best = 0;
    for (i, x) in v.iter().enumerate() {
        if *x > v[best] {
            best = i;
        }
    }
    best
}

fn exhaustive() -> ResponsibilityConfig {
    ResponsibilityConfig { execution: Execution::Sequential, ..ResponsibilityConfig::exhaustive() }
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 256, ..ProptestConfig::default() })]

    #[test]
    fn returned_records_satisfy_their_postconditions(c in case(), d in delta()) {
        let cls = c.classifier();
        let img = c.image();
        let b = Baseline::Constant(0.0);
        let land = match pixel_ranking(&cls, &img, &b, &ResponsibilityConfig { execution: Execution::Sequential, ..Default::default() }) {
            Err(Error::Config(_)) => {
                prop_assert!(!validate_baseline(&cls, &img, &b).unwrap());
                return Ok(());
            }
            other => other.unwrap(),
        };
        let r = explain::sufficient_contrastive(&cls, &img, &b, d, &land, &ExplainConfig::default()).unwrap();
        let full = c.direct(&PixelMask::full(c.h, c.w));
        let l = argmax(&full);
        prop_assert_eq!(r.original_label, l);
        let s = c.direct(&r.sufficient);
        prop_assert_eq!(argmax(&s), l);
        prop_assert!(s[l] >= d * full[l]);
        let occluded = c.direct(&r.contrastive.complement());
        prop_assert_ne!(argmax(&occluded), l);
        prop_assert!(r.flags.sufficient_valid && r.flags.contrastive_valid);
        prop_assert_eq!(&r.sufficient, &r.contrastive);
    }

    #[test]
    fn singleton_responsibility_equals_exact(c in case()) {
        let cls = c.classifier();
        let img = c.image();
        let b = Baseline::Constant(0.0);
        prop_assume!(validate_baseline(&cls, &img, &b).unwrap());
        let inst = TinyInstance::new(img.clone(), c.spec(), b.clone()).unwrap();
        let table = OracleTable::build(&inst, Execution::Sequential).unwrap();
        let land = pixel_ranking(&cls, &img, &b, &exhaustive()).unwrap();
        for p in 0..c.pixels.len() {
            prop_assert!((land.score(p) - table.responsibility(p)).abs() <= 1e-12);
        }
    }

    #[test]
    fn greedy_contains_a_minimal_set_and_shrink_is_not_below_minimum(c in case(), d in delta()) {
        let cls = c.classifier();
        let img = c.image();
        let b = Baseline::Constant(0.0);
        prop_assume!(validate_baseline(&cls, &img, &b).unwrap());
        let inst = TinyInstance::new(img.clone(), c.spec(), b.clone()).unwrap();
        let minimal = OracleTable::build(&inst, Execution::Sequential).unwrap().minimal_sufficient(d);
        let land = pixel_ranking(&cls, &img, &b, &exhaustive()).unwrap();
        let r = explain::sufficient_contrastive(&cls, &img, &b, d, &land, &ExplainConfig::default()).unwrap();
        prop_assert!(minimal.iter().any(|m| m.is_subset(&r.sufficient)));
        let shrunk = explain::shrink_minimal(&cls, &img, &b, &r.sufficient, Predicate::Sufficient(d), &land).unwrap();
        let min = minimal.iter().map(|m| m.len()).min().unwrap();
        prop_assert!(shrunk.len() >= min);
        // a fixpoint of single removals is one of the oracle's minimal sets
        prop_assert!(minimal.contains(&shrunk));
    }

    #[test]
    fn adjustment_restores_confidence_to_four_places(c in case(), d in delta()) {
        let cls = c.classifier();
        let img = c.image();
        let b = Baseline::Constant(0.0);
        prop_assume!(validate_baseline(&cls, &img, &b).unwrap());
        let land = pixel_ranking(&cls, &img, &b, &ResponsibilityConfig { execution: Execution::Sequential, ..Default::default() }).unwrap();
        let cfg = ExplainConfig::default();
        let mut r = explain::sufficient_contrastive(&cls, &img, &b, d, &land, &cfg).unwrap();
        let a = explain::adjustment_discovery(&cls, &img, &b, &land, &mut r, &cfg).unwrap();
        prop_assert!(a.is_disjoint(&r.contrastive));
        prop_assert!(r.flags.complete_valid);
        let full = c.direct(&PixelMask::full(c.h, c.w));
        let l = argmax(&full);
        let complete = c.direct(&r.complete());
        prop_assert_eq!(round_units(complete[l], 4), round_units(full[l], 4));
    }

    #[test]
    fn mean_shift_leaves_explanations_unchanged(c in case(), d in delta(), shift in prop_oneof![Just(0.25f32), Just(-0.5f32), -2.0f32..2.0]) {
        let b = Baseline::Constant(0.0);
        let img = c.image();
        let cls = c.classifier();
        prop_assume!(validate_baseline(&cls, &img, &b).unwrap());
        // f32 rounding of (x + s) - s may cross the on/off threshold
        prop_assume!(c.pixels.iter().all(|v| (v - 0.5).abs() > 1e-4));
        let mut spec = c.spec();
        spec.preprocessing.mean = vec![shift];
        spec.preprocessing.value_range = (shift, 1.0 + shift);
        let shifted = Classifier::load_with(spec, Execution::Sequential).unwrap();
        let img2 = img.shifted(&[shift]).unwrap();
        let b2 = b.shifted(&[shift]);
        let run = |cls: &Classifier, img: &ImageTensor, b: &Baseline| {
            let land = pixel_ranking(cls, img, b, &ResponsibilityConfig { execution: Execution::Sequential, ..Default::default() }).unwrap();
            let cfg = ExplainConfig::default();
            let mut r = explain::sufficient_contrastive(cls, img, b, d, &land, &cfg).unwrap();
            explain::adjustment_discovery(cls, img, b, &land, &mut r, &cfg).unwrap();
            (r.sufficient, r.contrastive, r.adjustment)
        };
        prop_assert_eq!(run(&cls, &img, &b), run(&shifted, &img2, &b2));
    }

    #[test]
    fn zero_delta_always_finds_an_explanation(c in case()) {
        let cls = c.classifier();
        let img = c.image();
        let b = Baseline::Constant(0.0);
        prop_assume!(validate_baseline(&cls, &img, &b).unwrap());
        let land = pixel_ranking(&cls, &img, &b, &ResponsibilityConfig { execution: Execution::Sequential, ..Default::default() }).unwrap();
        let cfg = ExplainConfig::default();
        let mut r = explain::sufficient_contrastive(&cls, &img, &b, 0.0, &land, &cfg);
        prop_assert!(r.is_ok());
        prop_assert!(explain::adjustment_discovery(&cls, &img, &b, &land, r.as_mut().unwrap(), &cfg).is_ok());
    }
}

#[test]
fn same_label_baseline_is_refused() {
    let spec = ClassifierSpec::builtin("or2".parse().unwrap(), Shape::new(2, 2, 1).unwrap());
    let cls = Classifier::load(spec).unwrap();
    let img = ImageTensor::from_gray(2, 2, (0.0, 1.0), &[0.0; 4]).unwrap();
    let err = pixel_ranking(&cls, &img, &Baseline::Constant(0.0), &ResponsibilityConfig::default()).unwrap_err();
    assert!(matches!(err, Error::Config(_)));
}
