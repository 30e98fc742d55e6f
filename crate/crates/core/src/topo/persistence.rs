//! 0-dimensional sublevel-set persistence on regular grids.
//!
//! Grid points are added in ascending `(value, flat index)` order. Each point
//! joins the components of its already-added neighbours (all `3^d - 1`
//! orthogonal and diagonal neighbours); when it touches several, the elder
//! rule keeps the component with the smallest birth key and the others die
//! at the current value. Pairs with `birth == death` sit on the diagonal and
//! are not reported, so the diagram depends only on the values, not on how
//! ties are ordered.

use crate::error::{Error, Result};
use crate::tensor::Tensor;

use super::diagram::{PersistenceDiagram, PersistencePoint};

/// Disjoint-set forest with path halving and union by size.
#[derive(Clone, Debug)]
pub(crate) struct UnionFind {
    parent: Vec<usize>,
    size: Vec<usize>,
}

impl UnionFind {
    pub fn new(n: usize) -> Self {
        Self {
            parent: (0..n).collect(),
            size: vec![1; n],
        }
    }

    pub fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    /// Merges the sets of `a` and `b`, returning the new root.
    pub fn union(&mut self, a: usize, b: usize) -> usize {
        let (mut a, mut b) = (self.find(a), self.find(b));
        if a == b {
            return a;
        }
        if self.size[a] < self.size[b] {
            std::mem::swap(&mut a, &mut b);
        }
        self.parent[b] = a;
        self.size[a] += self.size[b];
        a
    }
}

/// Flat-index offsets of the `3^d - 1` neighbours, with per-axis steps so
/// that bounds can be checked.
pub(crate) struct Neighbourhood {
    shape: Vec<usize>,
    steps: Vec<Vec<isize>>,
}

impl Neighbourhood {
    pub fn new(shape: &[usize]) -> Self {
        let d = shape.len();
        let mut steps = Vec::with_capacity(3usize.pow(d as u32) - 1);
        for code in 0..3usize.pow(d as u32) {
            let mut c = code;
            let step: Vec<isize> = (0..d)
                .map(|_| {
                    let s = (c % 3) as isize - 1;
                    c /= 3;
                    s
                })
                .collect();
            if step.iter().any(|&s| s != 0) {
                steps.push(step);
            }
        }
        Self {
            shape: shape.to_vec(),
            steps,
        }
    }

    /// Calls `f` with the flat index of every in-bounds neighbour of `flat`.
    pub fn for_each(&self, flat: usize, mut f: impl FnMut(usize)) {
        let d = self.shape.len();
        let mut coords = [0usize; 3];
        let mut rem = flat;
        for axis in (0..d).rev() {
            coords[axis] = rem % self.shape[axis];
            rem /= self.shape[axis];
        }
        'steps: for step in &self.steps {
            let mut n = 0usize;
            for axis in 0..d {
                let c = coords[axis] as isize + step[axis];
                if c < 0 || c >= self.shape[axis] as isize {
                    continue 'steps;
                }
                n = n * self.shape[axis] + c as usize;
            }
            f(n);
        }
    }
}

fn check_input(t: &Tensor) -> Result<()> {
    if t.rank() > 3 {
        return Err(Error::UnsupportedRank(t.rank()));
    }
    if t.is_empty() {
        return Err(Error::Shape("empty tensor".into()));
    }
    t.ensure_finite()
}

/// Order-0 persistence diagram of the sublevel-set filtration of `t`.
pub fn sublevel_persistence_0d(t: &Tensor) -> Result<PersistenceDiagram> {
    check_input(t)?;
    let values = t.data();
    let n = values.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_unstable_by(|&a, &b| values[a].total_cmp(&values[b]).then(a.cmp(&b)));

    let hood = Neighbourhood::new(t.shape());
    let mut uf = UnionFind::new(n);
    let mut added = vec![false; n];
    // Birth point (earliest-added member) of the component rooted at each root.
    let mut birth_of = vec![usize::MAX; n];
    let mut rank_of = vec![0usize; n];
    for (r, &i) in order.iter().enumerate() {
        rank_of[i] = r;
    }

    let mut points = Vec::new();
    let mut roots: Vec<usize> = Vec::with_capacity(26);
    for &p in &order {
        roots.clear();
        hood.for_each(p, |q| {
            if added[q] {
                let r = uf.find(q);
                if !roots.contains(&r) {
                    roots.push(r);
                }
            }
        });
        added[p] = true;
        if roots.is_empty() {
            birth_of[p] = p;
            continue;
        }
        // The elder has the earliest birth point in the processing order.
        let elder = *roots
            .iter()
            .min_by_key(|&&r| rank_of[birth_of[r]])
            .expect("non-empty");
        let level = values[p];
        let elder_birth = birth_of[elder];
        for &r in &roots {
            if r != elder {
                let birth = values[birth_of[r]];
                if birth < level {
                    points.push(PersistencePoint::new(birth, level));
                }
            }
        }
        let mut root = uf.union(p, elder);
        for &r in &roots {
            root = uf.union(root, r);
        }
        birth_of[root] = elder_birth;
    }
    points.push(PersistencePoint::new(values[order[0]], f64::INFINITY));

    let mut diagram = PersistenceDiagram::new(points)?;
    diagram.filtration_max = Some(values[order[n - 1]]);
    Ok(diagram)
}

/// Number of local minima: maximal connected sets of equal value whose
/// outside neighbours are all strictly higher.
pub fn count_local_minima(t: &Tensor) -> Result<usize> {
    check_input(t)?;
    let values = t.data();
    let hood = Neighbourhood::new(t.shape());
    let mut seen = vec![false; values.len()];
    let mut count = 0;
    let mut stack = Vec::new();
    for start in 0..values.len() {
        if seen[start] {
            continue;
        }
        let v = values[start];
        let mut minimal = true;
        seen[start] = true;
        stack.push(start);
        while let Some(p) = stack.pop() {
            hood.for_each(p, |q| {
                if values[q] < v {
                    minimal = false;
                } else if values[q] == v && !seen[q] {
                    seen[q] = true;
                    stack.push(q);
                }
            });
        }
        if minimal {
            count += 1;
        }
    }
    Ok(count)
}
