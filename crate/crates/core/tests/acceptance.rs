//! Acceptance gate. Runs every criterion at its pinned tolerance and prints
//! one PASS/FAIL line each; exits non-zero if any fails.
//!
//! Pass criterion numbers as arguments to run a subset:
//! `cargo test --test acceptance -- 1 2 9`.

#[global_allocator]
static GLOBAL: mimalloc::MiMalloc = mimalloc::MiMalloc;

use std::collections::BTreeMap;
use std::time::{Duration, Instant};

use crashcast::bev::{decode_instances, encode_motion, DecodeParams, Horizon, InstanceMap};
use crashcast::dataset::{generate_dataset, generate_one, load_dataset, map_for_log, save_dataset, GenerateOptions};
use crashcast::eval::{eval_windows, evaluate_batch, relabel_to_ground_truth, EvalSettings, MetricsReport, PreparedScenario};
use crashcast::geometry::{GridSpec, Vec2};
use crashcast::metrics::{
    apa, apa_with, declare_any, detect_accident, detection_map, match_accident, miou, tp_metrics, vpq, AccidentReport,
    Counts, Detection, DetectionSample, EmptyThreshold, GroundTruthBox, MatchCounts, DANGER_DISTANCE,
};
use crashcast::scenario::{split_dataset, AgentClass, ScenarioType, DEFAULT_RATIOS};
use crashcast::sim::{frame_time, ScenarioLog};
use crashcast::v2x::V2xConfig;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const FIXTURE_TOL: f64 = 1e-9;
const BATCH_SEED: u64 = 2024;
const BATCH_SIZE: usize = 200;
const SWEEP_SCENARIOS: usize = 60;
const NOISE_TRIALS: u64 = 3;
const SWEEP_VALUES: [f64; 6] = [0.0, 0.1, 0.2, 0.3, 0.4, 0.5];
/// One inversion of at most half an APA point (APA on a 0-100 scale).
const MAX_INVERSION: f64 = 0.005;

struct Outcome {
    pass: bool,
    detail: String,
}

impl Outcome {
    fn new(pass: bool, detail: impl Into<String>) -> Self {
        Self { pass, detail: detail.into() }
    }
}

/// Shared scenario batches and reports, built on first use.
#[derive(Default)]
struct Ctx {
    occluded: Option<Vec<PreparedScenario>>,
    reports: BTreeMap<(V2xConfig, Horizon), MetricsReport>,
}

impl Ctx {
    fn occluded(&mut self) -> &[PreparedScenario] {
        self.occluded.get_or_insert_with(|| {
            let opts = GenerateOptions::new(usize::MAX, ScenarioType::all_accident().collect(), BATCH_SEED);
            let mut out = Vec::new();
            let mut i = 0;
            while out.len() < BATCH_SIZE {
                let log = generate_one(&opts, i).expect("scenario generates");
                if !map_for_log(&log).expect("map").buildings.is_empty() {
                    out.push(PreparedScenario::new(format!("occ-{i}"), log).expect("prepared"));
                }
                i += 1;
            }
            out
        })
    }

    fn report(&mut self, config: V2xConfig, horizon: Horizon) -> MetricsReport {
        if let Some(r) = self.reports.get(&(config, horizon)) {
            return r.clone();
        }
        let r = evaluate_batch(self.occluded(), &EvalSettings::new(config, horizon)).expect("evaluation");
        self.reports.insert((config, horizon), r.clone());
        r
    }
}

fn main() {
    let selected: Vec<u32> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let criteria: [(u32, &str, Option<Duration>, fn(&mut Ctx) -> Outcome); 10] = [
        (1, "metric arithmetic fixtures", Some(Duration::from_secs(1)), metric_fixtures),
        (2, "accident detection matches brute-force oracle", Some(Duration::from_secs(60)), oracle_equivalence),
        (3, "ground-truth collision closure", Some(Duration::from_secs(300)), ground_truth_closure),
        (4, "encode/decode roundtrip fidelity", Some(Duration::from_secs(120)), roundtrip_fidelity),
        (5, "configuration ordering", None, config_ordering),
        (6, "visibility gap", None, visibility_gap),
        (7, "degradation monotonicity", None, degradation_monotonicity),
        (8, "horizon trade-off", None, horizon_tradeoff),
        (9, "split exactness", None, split_exactness),
        (10, "end-to-end determinism", None, determinism),
    ];
    let mut ctx = Ctx::default();
    let mut failed = 0;
    for (n, name, limit, run) in criteria {
        if !selected.is_empty() && !selected.contains(&n) {
            continue;
        }
        let t = Instant::now();
        let mut o = run(&mut ctx);
        let elapsed = t.elapsed();
        if let Some(l) = limit.filter(|l| elapsed > *l) {
            o.pass = false;
            o.detail.push_str(&format!("; runtime over {l:?}"));
        }
        failed += usize::from(!o.pass);
        println!(
            "{} criterion {n:>2} {name}: {} [{:.1}s]",
            if o.pass { "PASS" } else { "FAIL" },
            o.detail,
            elapsed.as_secs_f64()
        );
    }
    if failed > 0 {
        println!("{failed} criteria failed");
        std::process::exit(1);
    }
}

// ---------------------------------------------------------------- 1

fn collision(ids: [u32; 2], a: (f64, f64), b: (f64, f64), t: f64) -> AccidentReport {
    AccidentReport::collision(ids, [Vec2::new(a.0, a.1), Vec2::new(b.0, b.1)], t, 0.0)
}

fn counts_all(tp: u64, fp: u64, fn_: u64) -> MatchCounts {
    MatchCounts { per_threshold: [Counts { tp, fp, fn_ }; 3] }
}

fn mask(len: usize, on: &[usize]) -> Vec<bool> {
    (0..len).map(|i| on.contains(&i)).collect()
}

fn imap(steps: &[&[u32]]) -> InstanceMap {
    let n = steps[0].len();
    let g = GridSpec { x_min: 0.0, x_max: n as f64 * 0.5, y_min: 0.0, y_max: 0.5, cell: 0.5 };
    let mut m = InstanceMap::empty(g, steps.len());
    for (s, ids) in steps.iter().enumerate() {
        m.ids_mut(s).copy_from_slice(ids);
    }
    m
}

fn det(class: AgentClass, x: f64, score: f64) -> Detection {
    Detection { class, center: Vec2::new(x, 0.0), score }
}

fn gt_box(class: AgentClass, x: f64) -> GroundTruthBox {
    GroundTruthBox { class, center: Vec2::new(x, 0.0) }
}

fn metric_fixtures(_: &mut Ctx) -> Outcome {
    use AgentClass::{Car, Pedestrian};
    // Pred/gt pair whose matched positions differ by 3 m + 4 m.
    let pred7 = collision([1, 2], (0.0, 0.0), (10.0, 0.0), 1.0);
    let gt7 = collision([1, 2], (3.0, 0.0), (14.0, 0.0), 1.0);
    let mut c7 = MatchCounts::default();
    c7.record(&pred7, &gt7);
    let mut fp_only = MatchCounts::default();
    fp_only.record(&pred7, &AccidentReport::none());
    let mut empty = MatchCounts::default();
    empty.record(&AccidentReport::none(), &AccidentReport::none());
    let near = AccidentReport::collision([1, 2], [Vec2::ZERO, Vec2::ZERO], 1.5, 0.4);
    let far = AccidentReport::collision([3, 4], [Vec2::ZERO, Vec2::ZERO], 0.5, 0.9);
    let late = collision([1, 2], (0.0, 0.0), (2.0, 0.0), 3.0);
    let early = collision([1, 2], (0.0, 0.0), (2.0, 0.0), 2.5);
    let off2 = collision([1, 2], (2.0, 0.0), (2.0, 0.0), 1.0);
    let off4 = collision([1, 2], (4.0, 0.0), (2.0, 0.0), 1.0);
    let base = collision([1, 2], (0.0, 0.0), (2.0, 0.0), 1.0);
    let other_pair = collision([1, 3], (0.0, 0.0), (2.0, 0.0), 1.0);

    let mc = |pred: &AccidentReport, gt: &AccidentReport, d: f64| {
        let c = match_accident(pred, gt, d);
        [c.tp as f64, c.fp as f64, c.fn_ as f64]
    };
    let tp = |pairs: &[(AccidentReport, AccidentReport)]| {
        let s = tp_metrics(pairs);
        [s.id_error.unwrap(), s.position_error.unwrap(), s.time_error.unwrap()]
    };
    let m = |p: &[Vec<bool>], g: &[Vec<bool>]| miou(p, g).unwrap();
    let v = |p: &InstanceMap, g: &InstanceMap| vpq(p, g).unwrap();
    let one = |preds: Vec<Detection>, gts: Vec<GroundTruthBox>| {
        detection_map(&[DetectionSample { predictions: preds, ground_truth: gts }])
    };

    let fixtures: Vec<(&str, Vec<f64>, Vec<f64>)> = vec![
        ("apa all-TP", vec![apa(&counts_all(1, 0, 0))], vec![1.0]),
        ("apa 7 m error", vec![apa(&c7)], vec![2.0 / 3.0]),
        ("apa TP3 FP1 FN2", vec![apa(&counts_all(3, 1, 2))], vec![3.0 / 4.5]),
        ("apa false positive only", vec![apa(&fp_only)], vec![0.0]),
        ("apa empty, perfect convention", vec![apa_with(&empty, EmptyThreshold::Perfect)], vec![1.0]),
        ("apa empty, zero convention", vec![apa_with(&empty, EmptyThreshold::Zero)], vec![0.0]),
        ("match 7 m at d=5", mc(&pred7, &gt7, 5.0).to_vec(), vec![0.0, 1.0, 1.0]),
        ("match 7 m at d=10", mc(&pred7, &gt7, 10.0).to_vec(), vec![1.0, 0.0, 0.0]),
        ("match missed accident", mc(&AccidentReport::none(), &gt7, 10.0).to_vec(), vec![0.0, 0.0, 1.0]),
        ("declare_any closest", vec![declare_any(&[far.clone(), near.clone()]).min_distance.unwrap()], vec![0.4]),
        ("tp identical", tp(&[(base.clone(), base.clone())]).to_vec(), vec![0.0, 0.0, 0.0]),
        ("tp time error", tp(&[(late, early)]).to_vec(), vec![0.0, 0.0, 0.5]),
        ("tp position mean", tp(&[(off2, base.clone()), (off4, base.clone())]).to_vec(), vec![0.0, 3.0, 0.0]),
        ("tp id error", tp(&[(other_pair, base.clone()), (base.clone(), base)]).to_vec(), vec![0.5, 0.0, 0.0]),
        ("miou identical", vec![m(&[mask(8, &[1, 2])], &[mask(8, &[1, 2])])], vec![1.0]),
        ("miou disjoint", vec![m(&[mask(8, &[0, 1])], &[mask(8, &[4, 5])])], vec![0.0]),
        ("miou half overlap", vec![m(&[mask(8, &[0, 1, 2, 3])], &[mask(8, &[2, 3, 4, 5])])], vec![1.0 / 3.0]),
        (
            "miou mean skips empty steps",
            vec![m(
                &[mask(8, &[0, 1, 2, 3]), mask(8, &[]), mask(8, &[6])],
                &[mask(8, &[2, 3, 4, 5]), mask(8, &[]), mask(8, &[6])],
            )],
            vec![2.0 / 3.0],
        ),
        ("vpq perfect", vec![v(&imap(&[&[1, 1, 0, 2]]), &imap(&[&[1, 1, 0, 2]]))], vec![1.0]),
        ("vpq one extra prediction", vec![v(&imap(&[&[1, 1, 0, 2]]), &imap(&[&[1, 1, 0, 0]]))], vec![2.0 / 3.0]),
        ("vpq empty prediction", vec![v(&imap(&[&[0, 0, 0, 0]]), &imap(&[&[1, 1, 0, 2]]))], vec![0.0]),
        ("vpq partial overlap", vec![v(&imap(&[&[1, 1, 1, 0]]), &imap(&[&[1, 1, 1, 1]]))], vec![0.75]),
        ("vpq id switch", vec![v(&imap(&[&[7, 7, 0, 0], &[8, 8, 0, 0]]), &imap(&[&[1, 1, 0, 0], &[1, 1, 0, 0]]))], vec![0.5]),
        ("map perfect", vec![one(vec![det(Car, 3.0, 0.9)], vec![gt_box(Car, 3.0)])], vec![1.0]),
        ("map 1.5 m off", vec![one(vec![det(Car, 4.5, 0.9)], vec![gt_box(Car, 3.0)])], vec![2.0 / 3.0]),
        ("map no predictions", vec![one(vec![], vec![gt_box(Car, 3.0)])], vec![0.0]),
        (
            "map two classes, one missed",
            vec![one(vec![det(Car, 3.0, 0.9)], vec![gt_box(Car, 3.0), gt_box(Pedestrian, 9.0)])],
            vec![0.5],
        ),
        (
            "map low-score false positive",
            vec![one(vec![det(Car, 3.0, 0.9), det(Car, 20.0, 0.3)], vec![gt_box(Car, 3.0)])],
            vec![1.0],
        ),
        (
            "map high-score false positive",
            vec![one(vec![det(Car, 3.0, 0.3), det(Car, 20.0, 0.9)], vec![gt_box(Car, 3.0)])],
            vec![0.5],
        ),
        (
            "map half recall",
            vec![one(vec![det(Car, 3.0, 0.9)], vec![gt_box(Car, 3.0), gt_box(Car, 30.0)])],
            vec![6.0 / 11.0],
        ),
    ];
    let bad: Vec<String> = fixtures
        .iter()
        .filter(|(_, got, want)| got.len() != want.len() || got.iter().zip(want).any(|(g, w)| (g - w).abs() > FIXTURE_TOL))
        .map(|(name, got, want)| format!("{name}: got {got:?} want {want:?}"))
        .collect();
    Outcome::new(
        bad.is_empty() && fixtures.len() >= 20,
        if bad.is_empty() { format!("{} fixtures within {FIXTURE_TOL:e}", fixtures.len()) } else { bad.join("; ") },
    )
}

// ---------------------------------------------------------------- 2

/// Half-side of the stand-in square for instances under three cells.
const ORACLE_SQUARE_HALF: f64 = 0.25;

fn cross(o: Vec2, a: Vec2, b: Vec2) -> f64 {
    (a.x - o.x) * (b.y - o.y) - (a.y - o.y) * (b.x - o.x)
}

/// Gift-wrapping hull, counter-clockwise, collinear points dropped.
fn jarvis(points: &[Vec2]) -> Vec<Vec2> {
    let start = *points.iter().min_by(|a, b| a.x.total_cmp(&b.x).then(a.y.total_cmp(&b.y))).unwrap();
    let mut hull = vec![start];
    let mut cur = start;
    loop {
        let mut next = if points[0] == cur { points[1] } else { points[0] };
        for &p in points {
            if p == cur {
                continue;
            }
            let c = cross(cur, next, p);
            if c < 0.0 || (c == 0.0 && cur.distance(p) > cur.distance(next)) {
                next = p;
            }
        }
        if next == start {
            break;
        }
        hull.push(next);
        cur = next;
    }
    hull
}

fn oracle_polygon(g: &GridSpec, cells: &[usize]) -> Vec<Vec2> {
    let h = g.cell / 2.0;
    if cells.len() < 3 {
        let c = cells.iter().fold(Vec2::ZERO, |a, &i| a + g.center_of(i)) / cells.len() as f64;
        let s = ORACLE_SQUARE_HALF;
        return vec![
            Vec2::new(c.x - s, c.y - s),
            Vec2::new(c.x + s, c.y - s),
            Vec2::new(c.x + s, c.y + s),
            Vec2::new(c.x - s, c.y + s),
        ];
    }
    let mut pts = Vec::new();
    for &i in cells {
        let c = g.center_of(i);
        for (dx, dy) in [(-h, -h), (h, -h), (h, h), (-h, h)] {
            pts.push(Vec2::new(c.x + dx, c.y + dy));
        }
    }
    jarvis(&pts)
}

fn point_segment(p: Vec2, a: Vec2, b: Vec2) -> f64 {
    let ab = b - a;
    let t = ((p - a).dot(ab) / ab.dot(ab)).clamp(0.0, 1.0);
    p.distance(a + ab * t)
}

fn inside_convex(p: Vec2, poly: &[Vec2]) -> bool {
    (0..poly.len()).all(|i| cross(poly[i], poly[(i + 1) % poly.len()], p) >= -1e-12)
}

fn segments_cross(a: Vec2, b: Vec2, c: Vec2, d: Vec2) -> bool {
    let d1 = cross(c, d, a);
    let d2 = cross(c, d, b);
    let d3 = cross(a, b, c);
    let d4 = cross(a, b, d);
    d1 * d2 < 0.0 && d3 * d4 < 0.0
}

/// Brute force: zero if the polygons touch, else the least vertex-edge gap.
fn oracle_distance(p: &[Vec2], q: &[Vec2]) -> f64 {
    if p.iter().any(|&v| inside_convex(v, q)) || q.iter().any(|&v| inside_convex(v, p)) {
        return 0.0;
    }
    let edges = |poly: &[Vec2]| (0..poly.len()).map(|i| (poly[i], poly[(i + 1) % poly.len()])).collect::<Vec<_>>();
    let (ep, eq) = (edges(p), edges(q));
    if ep.iter().any(|&(a, b)| eq.iter().any(|&(c, d)| segments_cross(a, b, c, d))) {
        return 0.0;
    }
    let mut best = f64::INFINITY;
    for &v in p {
        for &(a, b) in &eq {
            best = best.min(point_segment(v, a, b));
        }
    }
    for &v in q {
        for &(a, b) in &ep {
            best = best.min(point_segment(v, a, b));
        }
    }
    best
}

/// All pairs at all steps; global minimum, ties to the earliest step and
/// then the lowest id pair.
fn oracle_detect(m: &InstanceMap) -> (bool, Option<[u32; 2]>) {
    let mut best: Option<(f64, [u32; 2])> = None;
    for step in 0..m.steps() {
        let mut cells: BTreeMap<u32, Vec<usize>> = BTreeMap::new();
        for (i, &id) in m.ids(step).iter().enumerate() {
            if id != 0 {
                cells.entry(id).or_default().push(i);
            }
        }
        let polys: Vec<(u32, Vec<Vec2>)> = cells.iter().map(|(&id, c)| (id, oracle_polygon(&m.grid, c))).collect();
        for i in 0..polys.len() {
            for j in i + 1..polys.len() {
                let d = oracle_distance(&polys[i].1, &polys[j].1);
                if best.is_none_or(|(b, _)| d < b - 1e-9) {
                    best = Some((d, [polys[i].0, polys[j].0]));
                }
            }
        }
    }
    match best {
        Some((d, ids)) if d <= DANGER_DISTANCE => (true, Some(ids)),
        _ => (false, None),
    }
}

fn random_sequence(r: &mut ChaCha8Rng) -> InstanceMap {
    let n = 16;
    let g = GridSpec { x_min: -4.0, x_max: 4.0, y_min: -4.0, y_max: 4.0, cell: 0.5 };
    let steps = r.random_range(1..=9);
    let mut m = InstanceMap::empty(g, steps);
    let agents = r.random_range(1..=4);
    let mut state: Vec<(u32, f64, f64, f64, f64, i32, i32)> = (0..agents)
        .map(|_| {
            (
                r.random_range(1..=50),
                r.random_range(0.0..n as f64),
                r.random_range(0.0..n as f64),
                r.random_range(-2.0..2.0),
                r.random_range(-2.0..2.0),
                r.random_range(1..=5),
                r.random_range(1..=3),
            )
        })
        .collect();
    for step in 0..steps {
        let ids = m.ids_mut(step);
        for a in &mut state {
            if r.random_bool(0.1) {
                continue;
            }
            let (x0, y0) = (a.1 as i32, a.2 as i32);
            for dx in 0..a.5 {
                for dy in 0..a.6 {
                    let (x, y) = (x0 + dx, y0 + dy);
                    if (0..n).contains(&x) && (0..n).contains(&y) {
                        ids[(y * n + x) as usize] = a.0;
                    }
                }
            }
            a.1 += a.3;
            a.2 += a.4;
        }
    }
    m
}

fn oracle_equivalence(_: &mut Ctx) -> Outcome {
    let mut r = ChaCha8Rng::seed_from_u64(0xacc1);
    let (mut agree, mut occurred) = (0, 0);
    let mut first_bad = None;
    for i in 0..500 {
        let m = random_sequence(&mut r);
        let got = detect_accident(&m, DANGER_DISTANCE);
        let want = oracle_detect(&m);
        occurred += usize::from(want.0);
        if got.occurred == want.0 && got.ids == want.1 {
            agree += 1;
        } else if first_bad.is_none() {
            first_bad = Some(format!("sequence {i}: got {:?} {:?}, oracle {want:?}", got.occurred, got.ids));
        }
    }
    Outcome::new(
        agree == 500,
        format!("{agree}/500 agree ({occurred} with accidents){}", first_bad.map_or(String::new(), |b| format!("; {b}"))),
    )
}

// ---------------------------------------------------------------- 3

fn ground_truth_closure(_: &mut Ctx) -> Outcome {
    let opts = GenerateOptions::new(usize::MAX, ScenarioType::all_accident().collect(), 31);
    let grid = GridSpec::motion();
    let (mut n, mut ok, mut i) = (0, 0, 0);
    let mut worst_dt: f64 = 0.0;
    while n < BATCH_SIZE {
        let log = generate_one(&opts, i).expect("scenario generates");
        i += 1;
        let Some(c) = log.collision else { continue };
        n += 1;
        let w = *eval_windows(&log, Horizon::S2).last().expect("window");
        let t0 = frame_time(w.k0);
        let (_, gt) = encode_motion(&log, t0, log.v2x.ego, &grid, Horizon::S2).expect("encode");
        let rep = detect_accident(&gt, DANGER_DISTANCE);
        if let (true, Some(ids), Some(t)) = (rep.occurred, rep.ids, rep.time) {
            let dt = (t0 + t - c.t).abs();
            if ids == c.ids && dt <= 0.5 + 1e-9 {
                ok += 1;
                worst_dt = worst_dt.max(dt);
            }
        }
    }
    let rate = ok as f64 / n as f64;
    Outcome::new(
        rate >= 0.95,
        format!("{ok}/{n} recovered ({:.1}%, need 95%), worst |dt| {worst_dt:.2} s, {i} scenarios simulated", rate * 100.0),
    )
}

// ---------------------------------------------------------------- 4

fn roundtrip_fidelity(_: &mut Ctx) -> Outcome {
    let opts = GenerateOptions::new(usize::MAX, ScenarioType::all_accident().collect(), 47);
    let grid = GridSpec::motion();
    let mut iou_sum = 0.0;
    let mut iou_n = 0usize;
    let (mut kept, mut links) = (0usize, 0usize);
    for i in 0..100 {
        let log = generate_one(&opts, i).expect("scenario generates");
        let ws = eval_windows(&log, Horizon::S2);
        let w = ws[i % ws.len()];
        let (field, gt) = encode_motion(&log, frame_time(w.k0), log.v2x.ego, &grid, Horizon::S2).expect("encode");
        let raw = decode_instances(&field, &DecodeParams::default());
        let mut matched = raw.clone();
        relabel_to_ground_truth(&mut matched, &gt);
        let mut prev_owner: BTreeMap<u32, u32> = BTreeMap::new();
        for step in 0..gt.steps() {
            let gcells = gt.cells_by_instance(step);
            let pcells = matched.cells_by_instance(step);
            let mut owner = BTreeMap::new();
            for (id, cells) in &gcells {
                let pred: &[usize] = pcells.get(id).map_or(&[], |v| v.as_slice());
                let inter = cells.iter().filter(|c| pred.contains(c)).count();
                iou_sum += inter as f64 / (cells.len() + pred.len() - inter) as f64;
                iou_n += 1;
                // Dominant raw decoder id under this instance.
                let mut votes: BTreeMap<u32, usize> = BTreeMap::new();
                for &c in cells {
                    let r = raw.ids(step)[c];
                    if r != 0 {
                        *votes.entry(r).or_default() += 1;
                    }
                }
                let top = votes.iter().max_by(|a, b| a.1.cmp(b.1).then(b.0.cmp(a.0))).map(|(&r, _)| r);
                if let Some(top) = top {
                    if let Some(&p) = prev_owner.get(id) {
                        links += 1;
                        kept += usize::from(p == top);
                    }
                    owner.insert(*id, top);
                }
            }
            prev_owner = owner;
        }
    }
    let mean_iou = iou_sum / iou_n as f64;
    let persistence = kept as f64 / links as f64;
    Outcome::new(
        mean_iou >= 0.7 && persistence >= 0.95,
        format!(
            "mean instance IoU {mean_iou:.3} over {iou_n} instance-steps (need 0.7), id persistence {:.1}% over {links} links (need 95%)",
            persistence * 100.0
        ),
    )
}

// ---------------------------------------------------------------- 5, 6

fn config_ordering(ctx: &mut Ctx) -> Outcome {
    let [s, e, f] = [V2xConfig::Single, V2xConfig::EgoInfra, V2xConfig::FourVehiclesInfra].map(|c| ctx.report(c, Horizon::S2));
    let apa_ok = s.accident.apa < e.accident.apa && e.accident.apa <= f.accident.apa;
    let miou_ok = s.motion.miou < e.motion.miou && e.motion.miou <= f.motion.miou;
    Outcome::new(
        apa_ok && miou_ok,
        format!(
            "{} scenarios, {} windows; APA {:.3} < {:.3} <= {:.3}; mIOU {:.3} < {:.3} <= {:.3}",
            s.scenarios, s.windows, s.accident.apa, e.accident.apa, f.accident.apa, s.motion.miou, e.motion.miou, f.motion.miou
        ),
    )
}

fn visibility_gap(ctx: &mut Ctx) -> Outcome {
    let s = ctx.report(V2xConfig::Single, Horizon::S2);
    let f = ctx.report(V2xConfig::FourVehiclesInfra, Horizon::S2);
    let (Some(sv), Some(fv), Some(si), Some(fi)) = (s.visible.apa, f.visible.apa, s.invisible.apa, f.invisible.apa) else {
        return Outcome::new(false, "a visibility stratum has no ground-truth accidents");
    };
    let (gap_v, gap_i) = (fv - sv, fi - si);
    Outcome::new(
        gap_i - gap_v > 0.0,
        format!(
            "invisible gap {gap_i:.3} ({} windows) vs visible gap {gap_v:.3} ({} windows)",
            s.invisible.windows, s.visible.windows
        ),
    )
}

// ---------------------------------------------------------------- 7

/// Inversions (increases) along a sweep: passes with at most one, of at
/// most [`MAX_INVERSION`].
fn sweep_ok(values: &[f64]) -> bool {
    let ups: Vec<f64> = values.windows(2).map(|w| w[1] - w[0]).filter(|&d| d > 0.0).collect();
    ups.is_empty() || (ups.len() == 1 && ups[0] <= MAX_INVERSION)
}

fn degradation_monotonicity(ctx: &mut Ctx) -> Outcome {
    let batch: Vec<PreparedScenario> = ctx.occluded()[..SWEEP_SCENARIOS].to_vec();
    let mut all_ok = true;
    let mut lines = Vec::new();
    for config in [V2xConfig::EgoInfra, V2xConfig::FourVehiclesInfra] {
        for (param, trials) in [("noise", NOISE_TRIALS), ("latency", 1)] {
            let curve: Vec<f64> = SWEEP_VALUES
                .iter()
                .map(|&x| {
                    let total: f64 = (0..trials)
                        .map(|seed| {
                            let mut s = EvalSettings::new(config, Horizon::S2);
                            s.seed = seed;
                            if param == "noise" {
                                s.noise = x;
                            } else {
                                s.latency = x;
                            }
                            evaluate_batch(&batch, &s).expect("evaluation").accident.apa
                        })
                        .sum();
                    total / trials as f64
                })
                .collect();
            let ok = sweep_ok(&curve);
            all_ok &= ok;
            let shown: Vec<String> = curve.iter().map(|v| format!("{v:.3}")).collect();
            lines.push(format!("{config} {param} [{}]{}", shown.join(" "), if ok { "" } else { " (inverted)" }));
        }
    }
    Outcome::new(all_ok, lines.join("; "))
}

// ---------------------------------------------------------------- 8

fn horizon_tradeoff(ctx: &mut Ctx) -> Outcome {
    let reports: Vec<MetricsReport> = Horizon::ALL.iter().map(|&h| ctx.report(V2xConfig::Single, h)).collect();
    let ttc4 = |r: &MetricsReport| r.ttc.iter().find(|t| t.ttc == 4).and_then(|t| t.stratum.apa);
    let apa2 = reports[0].accident.apa;
    let apa4 = reports[2].accident.apa;
    let nonzero = |r: &MetricsReport| ttc4(r).is_some_and(|a| a > 0.0);
    let structure = !nonzero(&reports[0]) && !nonzero(&reports[1]) && nonzero(&reports[2]);
    let shown: Vec<String> = reports
        .iter()
        .map(|r| format!("{}: all {:.3}, TTC4 {}", r.horizon, r.accident.apa, ttc4(r).map_or("none".into(), |a| format!("{a:.3}"))))
        .collect();
    Outcome::new(apa4 < apa2 && structure, format!("single config; {}", shown.join("; ")))
}

// ---------------------------------------------------------------- 9

fn split_exactness(_: &mut Ctx) -> Outcome {
    let types: Vec<ScenarioType> = ScenarioType::all_accident().chain([ScenarioType::Normal]).collect();
    let items: Vec<(String, ScenarioType)> =
        (0..691).map(|i| (format!("s{i:05}"), types[i % types.len()])).collect();
    let split = split_dataset(&items, DEFAULT_RATIOS, 7).expect("split");
    let sizes = [split.train.len(), split.val.len(), split.test.len()];
    let assign = split.assignment();
    let mut worst: f64 = 0.0;
    for ty in &types {
        let members: Vec<&String> = items.iter().filter(|(_, t)| t == ty).map(|(id, _)| id).collect();
        for (k, s) in crashcast::scenario::Split::ALL.iter().enumerate() {
            let got = members.iter().filter(|id| assign[id.as_str()] == *s).count() as f64;
            worst = worst.max((got - DEFAULT_RATIOS[k] * members.len() as f64).abs());
        }
    }
    Outcome::new(
        sizes == [483, 104, 104] && worst < 1.0,
        format!("691 -> {}/{}/{}, worst per-type deviation {worst:.2} scenarios", sizes[0], sizes[1], sizes[2]),
    )
}

// ---------------------------------------------------------------- 10

fn end_to_end(dir: &std::path::Path) -> (Vec<Vec<u8>>, String) {
    let types = ScenarioType::all_accident().chain([ScenarioType::Normal]).collect();
    let (manifest, scenarios) = generate_dataset(&GenerateOptions::new(8, types, 99)).expect("generate");
    save_dataset(dir, &manifest, &scenarios).expect("save");
    let mut files: Vec<Vec<u8>> = vec![std::fs::read(dir.join("manifest.json")).unwrap()];
    files.extend(manifest.entries.iter().map(|e| std::fs::read(dir.join(&e.path)).unwrap()));
    let loaded: Vec<PreparedScenario> = load_dataset(dir, None)
        .expect("load")
        .into_iter()
        .map(|(e, log): (_, ScenarioLog)| PreparedScenario::new(e.id, log).expect("prepared"))
        .collect();
    let mut s = EvalSettings::new(V2xConfig::FourVehiclesInfra, Horizon::S2);
    s.noise = 0.3;
    s.latency = 0.1;
    s.seed = 5;
    let r = evaluate_batch(&loaded, &s).expect("evaluate");
    (files, serde_json::to_string_pretty(&r).unwrap())
}

fn determinism(_: &mut Ctx) -> Outcome {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let (fa, ra) = end_to_end(a.path());
    let (fb, rb) = end_to_end(b.path());
    Outcome::new(fa == fb && ra == rb, format!("{} files and a {}-byte report compared", fa.len(), ra.len()))
}
