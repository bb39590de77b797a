use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::{ScenarioError, ScenarioType};
use crate::rng;

pub const DEFAULT_RATIOS: [f64; 3] = [0.7, 0.15, 0.15];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Val,
    Test,
}

impl Split {
    pub const ALL: [Split; 3] = [Split::Train, Split::Val, Split::Test];

    pub fn as_str(self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Val => "val",
            Split::Test => "test",
        }
    }
}

impl std::str::FromStr for Split {
    type Err = ScenarioError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "train" => Ok(Split::Train),
            "val" => Ok(Split::Val),
            "test" => Ok(Split::Test),
            _ => Err(ScenarioError::InvalidConfig(format!("unknown split {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct SplitResult {
    pub train: Vec<String>,
    pub val: Vec<String>,
    pub test: Vec<String>,
    /// Scenario types too small to stratify.
    pub warnings: Vec<String>,
}

impl SplitResult {
    pub fn sizes(&self) -> (usize, usize, usize) {
        (self.train.len(), self.val.len(), self.test.len())
    }

    pub fn assignment(&self) -> BTreeMap<String, Split> {
        let mut m = BTreeMap::new();
        for (split, ids) in [(Split::Train, &self.train), (Split::Val, &self.val), (Split::Test, &self.test)] {
            for id in ids {
                m.insert(id.clone(), split);
            }
        }
        m
    }
}

/// Global split sizes: training is floored, the remainder is shared between
/// validation and test by largest remainder (ties favour validation).
pub fn split_sizes(n: usize, ratios: [f64; 3]) -> [usize; 3] {
    let train = (ratios[0] * n as f64 + 1e-9).floor() as usize;
    let rest = n - train.min(n);
    let ideal = [ratios[1] * n as f64, ratios[2] * n as f64];
    let mut base = [ideal[0].floor() as usize, ideal[1].floor() as usize];
    if base[0] + base[1] > rest {
        // Only possible through rounding noise; trim the larger share.
        let over = base[0] + base[1] - rest;
        let k = usize::from(base[1] > base[0]);
        base[k] -= over.min(base[k]);
    }
    let mut left = rest - base[0] - base[1];
    let frac = [ideal[0] - ideal[0].floor(), ideal[1] - ideal[1].floor()];
    let order: [usize; 2] = if frac[1] > frac[0] + 1e-12 { [1, 0] } else { [0, 1] };
    while left > 0 {
        for &k in &order {
            if left > 0 {
                base[k] += 1;
                left -= 1;
            }
        }
    }
    [train.min(n), base[0], base[1]]
}

/// Stratified, seeded partition. Each type with at least three scenarios puts
/// at least one scenario in every split; smaller types are pooled.
pub fn split_dataset(
    items: &[(String, ScenarioType)],
    ratios: [f64; 3],
    seed: u64,
) -> Result<SplitResult, ScenarioError> {
    if ratios.iter().any(|r| !(r.is_finite() && *r >= 0.0)) || (ratios.iter().sum::<f64>() - 1.0).abs() > 1e-6 {
        return Err(ScenarioError::InvalidConfig("split ratios must be non-negative and sum to 1".into()));
    }
    let mut seen = std::collections::BTreeSet::new();
    for (id, _) in items {
        if !seen.insert(id) {
            return Err(ScenarioError::InvalidConfig(format!("duplicate scenario id {id:?}")));
        }
    }
    let targets = split_sizes(items.len(), ratios);

    let mut by_type: BTreeMap<ScenarioType, Vec<usize>> = BTreeMap::new();
    for (i, (_, t)) in items.iter().enumerate() {
        by_type.entry(*t).or_default().push(i);
    }

    let mut warnings = Vec::new();
    let mut alloc: BTreeMap<ScenarioType, [usize; 3]> = BTreeMap::new();
    let mut pooled: Vec<usize> = Vec::new();
    for (t, idx) in &by_type {
        let n = idx.len();
        if n < 3 {
            let msg = format!("scenario type {t} has only {n} scenario(s); assigned without stratification");
            log::warn!("{msg}");
            warnings.push(msg);
            pooled.extend(idx);
            continue;
        }
        let val = ((ratios[1] * n as f64).floor() as usize).max(1);
        let test = ((ratios[2] * n as f64).floor() as usize).max(1);
        alloc.insert(*t, [n - val - test, val, test]);
    }

    let mut totals = [0usize; 3];
    for a in alloc.values() {
        for k in 0..3 {
            totals[k] += a[k];
        }
    }
    let mut pool_rng = rng::stream(seed, "split-pool", 0);
    pooled.shuffle(&mut pool_rng);
    let mut pool_assign = Vec::with_capacity(pooled.len());
    for &i in &pooled {
        let k = (0..3).find(|&k| totals[k] < targets[k]).unwrap_or(0);
        totals[k] += 1;
        pool_assign.push((i, k));
    }

    // Move single units between types' allocations until every split hits its target.
    while let Some(over) = (0..3).find(|&k| totals[k] > targets[k]) {
        let under = (0..3).find(|&k| totals[k] < targets[k]).expect("totals and targets sum to the same count");
        let donor = alloc
            .iter()
            .filter(|(_, a)| a[over] > 1)
            .max_by(|x, y| x.1[over].cmp(&y.1[over]).then(y.0.cmp(x.0)))
            .map(|(t, _)| *t)
            .or_else(|| alloc.iter().find(|(_, a)| a[over] > 0).map(|(t, _)| *t))
            .expect("an over-allocated split holds at least one unit");
        let a = alloc.get_mut(&donor).expect("donor exists");
        a[over] -= 1;
        a[under] += 1;
        totals[over] -= 1;
        totals[under] += 1;
    }

    let mut out: [Vec<usize>; 3] = Default::default();
    for (t, idx) in &by_type {
        let Some(a) = alloc.get(t) else { continue };
        let mut ids = idx.clone();
        let mut r = rng::stream(seed, &format!("split-{t}"), 0);
        ids.shuffle(&mut r);
        out[0].extend(&ids[..a[0]]);
        out[1].extend(&ids[a[0]..a[0] + a[1]]);
        out[2].extend(&ids[a[0] + a[1]..]);
    }
    for (i, k) in pool_assign {
        out[k].push(i);
    }
    let names = |v: &mut Vec<usize>| {
        v.sort_unstable();
        v.iter().map(|&i| items[i].0.clone()).collect::<Vec<_>>()
    };
    let [mut a, mut b, mut c] = out;
    Ok(SplitResult { train: names(&mut a), val: names(&mut b), test: names(&mut c), warnings })
}
