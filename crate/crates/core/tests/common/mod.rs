//! Independent reference implementations shared by the integration and
//! acceptance tests.
#![allow(dead_code)]

use std::collections::VecDeque;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use signloss::dsl::{dsl_gradient, dsl_loss, DslConfig};
use signloss::Tensor;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Random shape of rank 1 to 3 with every extent at least 2 and at most
/// `max_elements` elements.
pub fn random_shape(rng: &mut ChaCha8Rng, max_elements: usize) -> Vec<usize> {
    let rank = rng.random_range(1..=3);
    let side_cap = ((max_elements as f64).powf(1.0 / rank as f64)).floor() as usize;
    (0..rank).map(|_| rng.random_range(2..=side_cap.max(2))).collect()
}

pub fn random_tensor(rng: &mut ChaCha8Rng, shape: &[usize], f: impl Fn(&mut ChaCha8Rng) -> f64) -> Tensor {
    let n = shape.iter().product();
    let data = (0..n).map(|_| f(rng)).collect();
    Tensor::new(shape.to_vec(), data).unwrap()
}

fn unravel(mut i: usize, shape: &[usize]) -> Vec<usize> {
    let mut out = vec![0; shape.len()];
    for a in (0..shape.len()).rev() {
        out[a] = i % shape[a];
        i /= shape[a];
    }
    out
}

fn ravel(c: &[usize], shape: &[usize]) -> usize {
    c.iter().zip(shape).fold(0, |acc, (&x, &n)| acc * n + x)
}

/// Neighbours under full (king-move) connectivity.
fn neighbours(i: usize, shape: &[usize]) -> Vec<usize> {
    let c = unravel(i, shape);
    let d = shape.len();
    let mut out = Vec::new();
    for code in 0..3usize.pow(d as u32) {
        let mut n = c.clone();
        let mut k = code;
        let mut ok = true;
        let mut moved = false;
        for a in 0..d {
            let step = (k % 3) as i64 - 1;
            k /= 3;
            moved |= step != 0;
            let v = n[a] as i64 + step;
            if v < 0 || v >= shape[a] as i64 {
                ok = false;
                break;
            }
            n[a] = v as usize;
        }
        if ok && moved {
            out.push(ravel(&n, shape));
        }
    }
    out
}

/// Labels the connected components of `{v <= level}` by breadth-first
/// search; unlabelled cells get `usize::MAX`.
fn label(t: &Tensor, level: f64) -> Vec<usize> {
    let n = t.len();
    let mut labels = vec![usize::MAX; n];
    let mut next = 0;
    for start in 0..n {
        if t.data()[start] > level || labels[start] != usize::MAX {
            continue;
        }
        labels[start] = next;
        let mut queue = VecDeque::from([start]);
        while let Some(i) = queue.pop_front() {
            for j in neighbours(i, t.shape()) {
                if t.data()[j] <= level && labels[j] == usize::MAX {
                    labels[j] = next;
                    queue.push_back(j);
                }
            }
        }
        next += 1;
    }
    labels
}

/// Order-0 sublevel persistence by relabelling at every distinct value:
/// when components merge, all but the one with the oldest birth die.
/// Zero-persistence pairs are omitted; the survivor is `(min, inf)`.
pub fn persistence_oracle(t: &Tensor) -> Vec<(f64, f64)> {
    let mut levels: Vec<f64> = t.data().to_vec();
    levels.sort_by(f64::total_cmp);
    levels.dedup();
    let mut pairs = Vec::new();
    // Births of the components at the previous level, keyed by a member cell.
    let mut previous: Vec<(usize, f64)> = Vec::new();
    for &level in &levels {
        let labels = label(t, level);
        let count = labels.iter().filter(|&&l| l != usize::MAX).max().map_or(0, |m| m + 1);
        let mut groups: Vec<Vec<f64>> = vec![Vec::new(); count];
        for &(cell, birth) in &previous {
            groups[labels[cell]].push(birth);
        }
        let mut current = Vec::new();
        for (l, mut births) in groups.into_iter().enumerate() {
            let cell = labels.iter().position(|&x| x == l).unwrap();
            if births.is_empty() {
                current.push((cell, level));
                continue;
            }
            births.sort_by(f64::total_cmp);
            for &b in &births[1..] {
                if b < level {
                    pairs.push((b, level));
                }
            }
            current.push((cell, births[0]));
        }
        previous = current;
    }
    for (_, b) in previous {
        pairs.push((b, f64::INFINITY));
    }
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));
    pairs
}

fn diag_dist(p: (f64, f64)) -> f64 {
    (p.1 - p.0) / std::f64::consts::SQRT_2
}

fn all_permutations(n: usize) -> Vec<Vec<usize>> {
    if n == 0 {
        return vec![Vec::new()];
    }
    let mut out = Vec::new();
    for rest in all_permutations(n - 1) {
        for pos in 0..=rest.len() {
            let mut p = rest.clone();
            p.insert(pos, n - 1);
            out.push(p);
        }
    }
    out
}

/// Order-`p` Wasserstein distance between finite diagrams by enumerating
/// every bijection of the diagonal-augmented point sets.
pub fn brute_force_wasserstein(a: &[(f64, f64)], b: &[(f64, f64)], p: f64) -> f64 {
    let (n, m) = (a.len(), b.len());
    // Rows: points of a, then one diagonal slot per point of b.
    // Columns: points of b, then one diagonal slot per point of a.
    let size = n + m;
    let cost = |r: usize, c: usize| -> f64 {
        match (r < n, c < m) {
            (true, true) => {
                let (x, y) = (a[r], b[c]);
                ((x.0 - y.0).powi(2) + (x.1 - y.1).powi(2)).sqrt().powf(p)
            }
            (true, false) => diag_dist(a[r]).powf(p),
            (false, true) => diag_dist(b[c]).powf(p),
            (false, false) => 0.0,
        }
    };
    let best = all_permutations(size)
        .into_iter()
        .map(|perm| perm.iter().enumerate().map(|(r, &c)| cost(r, c)).sum::<f64>())
        .fold(f64::INFINITY, f64::min);
    if size == 0 {
        0.0
    } else {
        best.powf(1.0 / p)
    }
}

/// Largest violation of `|analytic - numeric| <= rtol * max(|a|, |n|) + atol`
/// over every partial, by central differences with step `h`. Entries whose
/// comparisons have a squashed gap smaller than `kink` are skipped.
#[derive(Debug)]
pub struct GradientCheck {
    pub checked: usize,
    pub skipped: usize,
    pub worst: f64,
    pub worst_at: String,
}

pub fn check_gradient(x: &Tensor, y: &Tensor, cfg: &DslConfig, h: f64, rtol: f64, atol: f64, kink: f64) -> GradientCheck {
    let g = dsl_gradient(x, y, cfg).unwrap();
    let near_kink = near_kink_elements(x, y, cfg, kink);
    let mut check = GradientCheck {
        checked: 0,
        skipped: 0,
        worst: 0.0,
        worst_at: String::new(),
    };
    let mut record = |name: String, analytic: f64, numeric: f64| {
        let bound = rtol * analytic.abs().max(numeric.abs()) + atol;
        let ratio = (analytic - numeric).abs() / bound;
        check.checked += 1;
        if ratio > check.worst {
            check.worst = ratio;
            check.worst_at = format!("{name}: analytic {analytic:e}, numeric {numeric:e}");
        }
    };
    let loss = |x: &Tensor, y: &Tensor, cfg: &DslConfig| dsl_loss(x, y, cfg).unwrap();
    for i in 0..x.len() {
        if near_kink[i] {
            check.skipped += 2;
            continue;
        }
        let nudge = |t: &Tensor, d: f64| {
            let mut v = t.data().to_vec();
            v[i] += d;
            Tensor::new(t.shape().to_vec(), v).unwrap()
        };
        let nx = (loss(&nudge(x, h), y, cfg) - loss(&nudge(x, -h), y, cfg)) / (2.0 * h);
        record(format!("dx[{i}]"), g.d_x.data()[i], nx);
        let ny = (loss(x, &nudge(y, h), cfg) - loss(x, &nudge(y, -h), cfg)) / (2.0 * h);
        record(format!("dy[{i}]"), g.d_y.data()[i], ny);
    }
    if near_kink.iter().any(|&k| k) {
        check.skipped += 1;
    } else {
        let s = cfg.sharpness;
        let at = |s: f64| loss(x, y, &DslConfig { sharpness: s, ..cfg.clone() });
        let ns = (at(s + h) - at(s - h)) / (2.0 * h);
        record("ds".into(), g.d_sharpness, ns);
    }
    check
}

/// Marks elements taking part in a comparison whose squashed values differ
/// by less than `kink`.
fn near_kink_elements(x: &Tensor, y: &Tensor, cfg: &DslConfig, kink: f64) -> Vec<bool> {
    let mut out = vec![false; x.len()];
    let first = usize::from(cfg.skip_batch_axis);
    let strides = x.strides();
    for axis in first..x.rank() {
        let dx = x.finite_difference(axis).unwrap();
        let dy = y.finite_difference(axis).unwrap();
        for j in 0..dx.len() {
            let fx = signloss::dsl::sign_like(dx.data()[j], cfg.sign_kind, cfg.sharpness);
            let fy = signloss::dsl::sign_like(dy.data()[j], cfg.sign_kind, cfg.sharpness);
            if (fx - fy).abs() < kink {
                let c = unravel(j, dx.shape());
                let lo = ravel(&c, x.shape());
                out[lo] = true;
                out[lo + strides[axis]] = true;
            }
        }
    }
    out
}
