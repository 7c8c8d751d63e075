//! Acceptance checks. Prints one PASS/FAIL/SKIP line per criterion and exits
//! nonzero if any criterion fails.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::{Duration, Instant};

use causex::config::RunConfig;
use causex::{explain_tensor, run_tensor};
use causex_core::explain::{self, round_units, ExplainConfig, ExplanationRecord, Predicate};
use causex_core::imagery::{ContextMode, ContextSweep};
use causex_core::oracle::{OracleTable, TinyInstance};
use causex_core::responsibility::{pixel_ranking, ResponsibilityConfig, ResponsibilityLandscape};
use causex_core::{
    validate_baseline, Baseline, BuiltinModel, Classifier, ClassifierSpec, Error, Execution, ImageTensor, PixelMask,
    Shape,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const RANDOM_INSTANCES: usize = 200;
const RUNTIME_LIMIT: Duration = Duration::from_secs(30);
const RESPONSIBILITY_TOL: f64 = 1e-12;
const PRECISION_DP: u32 = 4;
const TAXONOMY_PAIRS: usize = 10_000;
const IMAGENET_MAX_DISTANCE: usize = 24;
const CONTEXTS_224: usize = 50_176;
const LADYBUG_CLASS: usize = 301;

type Check = fn() -> Outcome;

enum Verdict {
    Pass,
    Fail,
    Skip,
}

struct Outcome {
    verdict: Verdict,
    detail: String,
}

fn pass(detail: impl Into<String>) -> Outcome {
    Outcome { verdict: Verdict::Pass, detail: detail.into() }
}

fn fail(detail: impl Into<String>) -> Outcome {
    Outcome { verdict: Verdict::Fail, detail: detail.into() }
}

fn judge(ok: bool, detail: String) -> Outcome {
    if ok {
        pass(detail)
    } else {
        fail(detail)
    }
}

#[derive(Debug, Clone)]
struct Instance {
    h: usize,
    w: usize,
    pixels: Vec<f32>,
    model: BuiltinModel,
    delta: f64,
}

impl Instance {
    fn spec(&self) -> ClassifierSpec {
        ClassifierSpec::builtin(self.model.clone(), Shape::new(self.h, self.w, 1).unwrap())
    }
    fn image(&self) -> ImageTensor {
        ImageTensor::from_gray(self.h, self.w, (0.0, 1.0), &self.pixels).unwrap()
    }
    fn classifier(&self) -> Classifier {
        Classifier::load_with(self.spec(), Execution::Sequential).unwrap()
    }
    fn baseline_valid(&self) -> bool {
        validate_baseline(&self.classifier(), &self.image(), &Baseline::Constant(0.0)).unwrap()
    }
    /// Closed-form confidences with `keep` at image values, the rest at 0.
    fn direct(&self, keep: &PixelMask) -> Vec<f64> {
        let on: Vec<bool> = (0..self.pixels.len()).map(|i| keep.contains(i) && self.pixels[i] > 0.5).collect();
        self.model.evaluate(&on)
    }
    fn describe(&self) -> String {
        format!("{} on {}x{} {:?} delta {}", self.model, self.h, self.w, self.pixels, self.delta)
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

fn random_instance(rng: &mut ChaCha8Rng) -> Instance {
    let (h, w) = loop {
        let (h, w) = (rng.random_range(1..=4), rng.random_range(1..=4));
        if h * w >= 2 {
            break (h, w);
        }
    };
    let n = h * w;
    let subset = |rng: &mut ChaCha8Rng| {
        let size = rng.random_range(1..=n.min(4));
        let mut all: Vec<usize> = (0..n).collect();
        let mut out = Vec::new();
        for _ in 0..size {
            out.push(all.swap_remove(rng.random_range(0..all.len())));
        }
        out.sort_unstable();
        out
    };
    let model = match rng.random_range(0..4) {
        0 => BuiltinModel::And(subset(rng)),
        1 => BuiltinModel::Or(subset(rng)),
        2 => BuiltinModel::CountConf(rng.random_range(0..n)),
        _ => {
            let pixels = subset(rng);
            let min_on = rng.random_range(1..=pixels.len());
            BuiltinModel::Threshold { pixels, min_on }
        }
    };
    let pixels = (0..n)
        .map(|_| match rng.random_range(0..10) {
            0..=5 => 1.0,
            6..=7 => 0.0,
            8 => rng.random_range(0.0..0.45),
            _ => rng.random_range(0.55..=1.0),
        })
        .collect();
    let delta = [0.0, 0.25, 0.5, 1.0][rng.random_range(0..4)];
    Instance { h, w, pixels, model, delta }
}

/// Random instances whose baseline is valid, plus the invalid ones met on the way.
fn sample(seed: u64, wanted: usize) -> (Vec<Instance>, Vec<Instance>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut valid, mut invalid) = (Vec::new(), Vec::new());
    while valid.len() < wanted {
        let inst = random_instance(&mut rng);
        if inst.baseline_valid() {
            valid.push(inst);
        } else {
            invalid.push(inst);
        }
    }
    (valid, invalid)
}

/// Every named builtin on all-on grids up to 16 pixels.
fn named_suite() -> Vec<Instance> {
    let mut out = Vec::new();
    for (h, w) in [(1, 2), (2, 2), (1, 4), (2, 3), (3, 3), (2, 4), (3, 4), (4, 4)] {
        for name in ["and2", "or2", "count-conf", "p0-only", "any-on", "threshold:2:0,1,2"] {
            let model: BuiltinModel = name.parse().unwrap();
            if model.check_fits(h * w).is_err() {
                continue;
            }
            for delta in [0.0, 0.5, 1.0] {
                out.push(Instance { h, w, pixels: vec![1.0; h * w], model: model.clone(), delta });
            }
        }
    }
    out
}

fn landscape(inst: &Instance, cfg: &ResponsibilityConfig) -> ResponsibilityLandscape {
    pixel_ranking(&inst.classifier(), &inst.image(), &Baseline::Constant(0.0), cfg).unwrap()
}

fn seq_cfg(seed: u64) -> ResponsibilityConfig {
    ResponsibilityConfig { seed, execution: Execution::Sequential, ..Default::default() }
}

fn explain_record(inst: &Instance, land: &ResponsibilityLandscape, delta: f64) -> causex_core::Result<ExplanationRecord> {
    explain::sufficient_contrastive(
        &inst.classifier(),
        &inst.image(),
        &Baseline::Constant(0.0),
        delta,
        land,
        &ExplainConfig { precision_dp: PRECISION_DP, ..Default::default() },
    )
}

fn criterion_1() -> Outcome {
    let start = Instant::now();
    let (valid, _) = sample(1, RANDOM_INSTANCES);
    let mut violations = Vec::new();
    for (i, inst) in valid.iter().enumerate() {
        let land = landscape(inst, &seq_cfg(i as u64));
        let r = explain_record(inst, &land, inst.delta).unwrap();
        let full = inst.direct(&PixelMask::full(inst.h, inst.w));
        let l = argmax(&full);
        let s = inst.direct(&r.sufficient);
        let occluded = inst.direct(&r.contrastive.complement());
        let tau = inst.delta * full[l];
        let ok = r.original_label == l
            && argmax(&s) == l
            && s[l] >= tau
            && (r.sufficient_confidence - s[l]).abs() <= 1e-12
            && (r.tau - tau).abs() <= 1e-12
            && argmax(&occluded) != l;
        if !ok {
            violations.push(inst.describe());
        }
    }
    let elapsed = start.elapsed();
    judge(
        violations.is_empty() && elapsed < RUNTIME_LIMIT,
        format!(
            "{} instances, {} violations, {:.2}s (limit {}s){}",
            valid.len(),
            violations.len(),
            elapsed.as_secs_f64(),
            RUNTIME_LIMIT.as_secs(),
            violations.first().map(|v| format!("; first: {v}")).unwrap_or_default()
        ),
    )
}

fn criterion_2() -> Outcome {
    let (random, _) = sample(2, RANDOM_INSTANCES);
    let suite: Vec<Instance> = named_suite().into_iter().filter(Instance::baseline_valid).chain(random).collect();
    let exhaustive = ResponsibilityConfig { execution: Execution::Sequential, ..ResponsibilityConfig::exhaustive() };
    let (mut worst, mut bad_contain, mut bad_shrink) = (0.0f64, 0, 0);
    for inst in &suite {
        let tiny = TinyInstance::new(inst.image(), inst.spec(), Baseline::Constant(0.0)).unwrap();
        let table = OracleTable::build(&tiny, Execution::Sequential).unwrap();
        let land = landscape(inst, &exhaustive);
        for p in 0..inst.pixels.len() {
            worst = worst.max((land.score(p) - table.responsibility(p)).abs());
        }
        let minimal = table.minimal_sufficient(inst.delta);
        let r = explain_record(inst, &land, inst.delta).unwrap();
        if !minimal.iter().any(|m| m.is_subset(&r.sufficient)) {
            bad_contain += 1;
        }
        let shrunk = explain::shrink_minimal(
            &inst.classifier(),
            &inst.image(),
            &Baseline::Constant(0.0),
            &r.sufficient,
            Predicate::Sufficient(inst.delta),
            &land,
        )
        .unwrap();
        if shrunk.len() < minimal.iter().map(|m| m.len()).min().unwrap() {
            bad_shrink += 1;
        }
    }
    judge(
        worst <= RESPONSIBILITY_TOL && bad_contain == 0 && bad_shrink == 0,
        format!(
            "{} instances; max |exact - singleton| = {worst:e} (tol {RESPONSIBILITY_TOL:e}); \
             greedy misses a minimal set: {bad_contain}; shrink below minimum: {bad_shrink}",
            suite.len()
        ),
    )
}

fn criterion_3() -> Outcome {
    let (random, _) = sample(3, RANDOM_INSTANCES);
    let suite: Vec<Instance> = named_suite().into_iter().filter(Instance::baseline_valid).chain(random).collect();
    let mut mismatches = 0;
    for (i, inst) in suite.iter().enumerate() {
        let land = landscape(inst, &seq_cfg(i as u64));
        let mut r = explain_record(inst, &land, inst.delta).unwrap();
        let cfg = ExplainConfig { precision_dp: PRECISION_DP, ..Default::default() };
        explain::adjustment_discovery(&inst.classifier(), &inst.image(), &Baseline::Constant(0.0), &land, &mut r, &cfg)
            .unwrap();
        let full = inst.direct(&PixelMask::full(inst.h, inst.w));
        let l = argmax(&full);
        let complete = inst.direct(&r.complete());
        if round_units(complete[l], PRECISION_DP) != round_units(full[l], PRECISION_DP) || !r.flags.complete_valid {
            mismatches += 1;
        }
    }
    let fixture = Instance { h: 2, w: 2, pixels: vec![1.0; 4], model: "count-conf".parse().unwrap(), delta: 0.5 };
    let e = explain_tensor(&fixture.classifier(), &fixture.image(), &RunConfig { delta: 0.5, ..Default::default() }).unwrap();
    let adjustment: Vec<usize> = e.record.adjustment.iter().collect();
    judge(
        mismatches == 0 && adjustment == [1, 2, 3],
        format!(
            "{} instances, {mismatches} not reproducing the original confidence at {PRECISION_DP} dp; \
             count-conf fixture adjustment {adjustment:?} (expected [1, 2, 3])",
            suite.len()
        ),
    )
}

fn criterion_4() -> Outcome {
    let (valid, mut invalid) = sample(4, RANDOM_INSTANCES);
    invalid.push(Instance { h: 2, w: 2, pixels: vec![0.0; 4], model: "or2".parse().unwrap(), delta: 0.0 });
    let (mut alg1, mut alg2) = (0, 0);
    for (i, inst) in valid.iter().enumerate() {
        let land = landscape(inst, &seq_cfg(i as u64));
        if let Ok(mut r) = explain_record(inst, &land, 0.0) {
            alg1 += 1;
            let cfg = ExplainConfig { precision_dp: PRECISION_DP, ..Default::default() };
            let b = Baseline::Constant(0.0);
            if explain::adjustment_discovery(&inst.classifier(), &inst.image(), &b, &land, &mut r, &cfg).is_ok() {
                alg2 += 1;
            }
        }
    }
    let mut refused = 0;
    for inst in &invalid {
        let flat = ResponsibilityLandscape::from_scores(inst.h, inst.w, vec![0.0; inst.pixels.len()]).unwrap();
        let ranking = pixel_ranking(&inst.classifier(), &inst.image(), &Baseline::Constant(0.0), &seq_cfg(0));
        let scan = explain_record(inst, &flat, 0.0);
        if matches!(ranking, Err(Error::Config(_))) && matches!(scan, Err(Error::Config(_))) {
            refused += 1;
        }
    }
    let n = valid.len();
    judge(
        alg1 == n && alg2 == n && refused == invalid.len(),
        format!(
            "delta 0: sufficient-contrastive {alg1}/{n}, adjustment {alg2}/{n}; \
             invalid baseline refused with a configuration error {refused}/{}",
            invalid.len()
        ),
    )
}

fn masks(inst: &Instance, classifier: &Classifier, image: &ImageTensor, b: &Baseline, seed: u64) -> (PixelMask, PixelMask, PixelMask) {
    let land = pixel_ranking(classifier, image, b, &seq_cfg(seed)).unwrap();
    let cfg = ExplainConfig { precision_dp: PRECISION_DP, ..Default::default() };
    let mut r = explain::sufficient_contrastive(classifier, image, b, inst.delta, &land, &cfg).unwrap();
    explain::adjustment_discovery(classifier, image, b, &land, &mut r, &cfg).unwrap();
    (r.sufficient, r.contrastive, r.adjustment)
}

fn criterion_5() -> Outcome {
    let (random, _) = sample(5, RANDOM_INSTANCES);
    let suite: Vec<Instance> = named_suite().into_iter().filter(Instance::baseline_valid).chain(random).collect();
    let b = Baseline::Constant(0.0);
    let mut differences = 0;
    let mut runs = 0;
    for (i, inst) in suite.iter().enumerate() {
        let reference = masks(inst, &inst.classifier(), &inst.image(), &b, i as u64);
        for shift in [0.25f32, -0.5, 1.75] {
            let mut spec = inst.spec();
            spec.preprocessing.mean = vec![shift];
            spec.preprocessing.value_range = (shift, 1.0 + shift);
            let shifted = Classifier::load_with(spec, Execution::Sequential).unwrap();
            let image = inst.image().shifted(&[shift]).unwrap();
            runs += 1;
            if masks(inst, &shifted, &image, &b.shifted(&[shift]), i as u64) != reference {
                differences += 1;
            }
        }
    }
    judge(differences == 0, format!("{runs} shifted runs over {} instances, {differences} mask differences", suite.len()))
}

fn criterion_6() -> Outcome {
    let tree = causex::imagenet::taxonomy().unwrap();
    let classes: Vec<usize> = tree.classes().collect();
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let pick = |rng: &mut ChaCha8Rng| classes[rng.random_range(0..classes.len())];
    let (mut asym, mut ident, mut zero_mismatch, mut triangle) = (0, 0, 0, 0);
    for _ in 0..TAXONOMY_PAIRS {
        let (a, b, c) = (pick(&mut rng), pick(&mut rng), pick(&mut rng));
        let d = |x, y| tree.shortest_path(x, y).unwrap();
        if d(a, b) != d(b, a) {
            asym += 1;
        }
        if d(a, a) != 0 {
            ident += 1;
        }
        if (d(a, b) == 0) != (tree.node_of(a).unwrap() == tree.node_of(b).unwrap()) {
            zero_mismatch += 1;
        }
        if d(a, c) > d(a, b) + d(b, c) {
            triangle += 1;
        }
    }
    let (diameter, x, y) = tree.diameter(Execution::default());
    let props_ok = asym + ident + zero_mismatch + triangle == 0;
    judge(
        props_ok && diameter <= IMAGENET_MAX_DISTANCE,
        format!(
            "{TAXONOMY_PAIRS} random pairs: asymmetric {asym}, d(a,a) != 0 {ident}, zero-iff-same-node violations \
             {zero_mismatch}, triangle violations {triangle}; bundled ImageNet-1K diameter {diameter} \
             (classes {x} and {y}; bound {IMAGENET_MAX_DISTANCE}; {} classes, max depth {})",
            tree.class_count(),
            tree.max_depth()
        ),
    )
}

fn dir_bytes(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files: Vec<(String, Vec<u8>)> = std::fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let p = e.unwrap().path();
            (p.file_name().unwrap().to_string_lossy().into_owned(), std::fs::read(&p).unwrap())
        })
        .collect();
    files.sort();
    files
}

fn criterion_7() -> Outcome {
    let side = 16;
    let key: Vec<String> = (0..side).map(|i| (i * side + (i * 5) % side).to_string()).collect();
    let model: BuiltinModel = format!("threshold:6:{}", key.join(",")).parse().unwrap();
    let image = ImageTensor::from_gray(side, side, (0.0, 1.0), &vec![1.0; side * side]).unwrap();
    let spec = ClassifierSpec::builtin(model, Shape::new(side, side, 1).unwrap());
    let tmp = tempfile::tempdir().unwrap();
    let cfg = RunConfig { seed: 11, ..Default::default() };
    let mut runs = Vec::new();
    for (name, execution, sequential) in
        [("par1", Execution::Parallel, false), ("par2", Execution::Parallel, false), ("seq", Execution::Sequential, true)]
    {
        let classifier = Classifier::load_with(spec.clone(), execution).unwrap();
        let cfg = RunConfig { sequential, ..cfg.clone() };
        let dir = tmp.path().join(name);
        run_tensor("det", &image, &classifier, &cfg, &dir).unwrap();
        runs.push(dir_bytes(&dir));
    }
    let rerun_identical = runs[0] == runs[1];
    // the sequential run records `sequential = true` in its config, so compare everything but record.json
    let strip = |r: &Vec<(String, Vec<u8>)>| r.iter().filter(|(n, _)| n != "record.json").cloned().collect::<Vec<_>>();
    let modes_identical = strip(&runs[0]) == strip(&runs[2]);

    let shape = Shape::new(224, 224, 3).unwrap();
    let img = ImageTensor::filled(shape, (0.0, 1.0), 0.5).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut ranking: Vec<usize> = (0..shape.pixels()).collect();
    for i in (1..ranking.len()).rev() {
        ranking.swap(i, rng.random_range(0..=i));
    }
    let mut sweep = ContextSweep::new(&img, &Baseline::Constant(0.0), ranking, ContextMode::Insertion).unwrap();
    let mut contexts = 0;
    while sweep.advance().is_some() {
        contexts += 1;
    }
    let ends_at_image = sweep.current() == &img;
    judge(
        rerun_identical && modes_identical && contexts == CONTEXTS_224 && ends_at_image,
        format!(
            "rerun byte-identical: {rerun_identical} ({} files); sequential matches parallel: {modes_identical}; \
             224x224 insertion contexts: {contexts} (expected {CONTEXTS_224})",
            runs[0].len()
        ),
    )
}

fn workspace_root() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../..")
}

fn criterion_8() -> Outcome {
    let manifest = std::env::var_os("CAUSEX_RESNET50_MANIFEST")
        .map(PathBuf::from)
        .unwrap_or_else(|| workspace_root().join("models/resnet50.manifest.json"));
    let image = std::env::var_os("CAUSEX_LADYBUG_IMAGE")
        .map(PathBuf::from)
        .unwrap_or_else(|| workspace_root().join("models/ladybug.jpg"));
    if !manifest.exists() || !image.exists() {
        return Outcome {
            verdict: Verdict::Skip,
            detail: format!("no model at {} or no image at {}", manifest.display(), image.display()),
        };
    }
    let spec = ClassifierSpec::from_onnx_manifest(&manifest).unwrap();
    let classifier = Classifier::load(spec).unwrap();
    let s = classifier.spec();
    let tensor = causex::imageio::load_image(&image, s.input_shape, s.preprocessing.value_range).unwrap();
    let e = explain_tensor(&classifier, &tensor, &RunConfig::default()).unwrap();
    let r = &e.record;
    judge(
        r.original_label == LADYBUG_CLASS,
        format!(
            "label {} (expected {LADYBUG_CLASS}); original confidence {:.4}, sufficient confidence {:.4}, \
             sufficient set {:.2}% of pixels",
            r.original_label,
            r.original_confidence,
            r.sufficient_confidence,
            r.sufficient.coverage_pct()
        ),
    )
}

fn main() -> ExitCode {
    let criteria: [(u8, &str, Check); 8] = [
        (1, "sufficient-contrastive postconditions", criterion_1),
        (2, "oracle equivalence", criterion_2),
        (3, "completeness", criterion_3),
        (4, "existence and baseline refusal", criterion_4),
        (5, "input invariance", criterion_5),
        (6, "taxonomy", criterion_6),
        (7, "determinism and context sizing", criterion_7),
        (8, "real model (optional)", criterion_8),
    ];
    let mut failed = 0;
    for (id, name, check) in criteria {
        let outcome = catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|e| {
            let msg = e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            fail(format!("panicked: {msg}"))
        });
        let tag = match outcome.verdict {
            Verdict::Pass => "PASS",
            Verdict::Fail => {
                failed += 1;
                "FAIL"
            }
            Verdict::Skip => "SKIP",
        };
        println!("{tag} criterion {id} ({name}): {}", outcome.detail);
    }
    if failed > 0 {
        println!("{failed} criterion(s) failed");
        ExitCode::FAILURE
    } else {
        ExitCode::SUCCESS
    }
}
