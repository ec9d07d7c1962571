//! Deleted-interpolation conditional probability tables.
//!
//! A component model owns one count table per back-off level plus a final
//! implicit uniform level. Conditioning contexts are tuples truncated to a
//! per-level prefix arity; interpolation weights are bucketed by the count
//! of the full context and estimated on held-out events with EM over the
//! mixture weights.

use std::collections::HashMap;

use crate::error::{Result, SlmError};

/// Count buckets for interpolation weights: unseen, 1, 2-4, 5-15, 16+.
pub const N_BUCKETS: usize = 5;

pub const BUCKET_NAMES: [&str; N_BUCKETS] = ["unseen", "c1", "c2_4", "c5_15", "c16p"];

pub fn bucket_of(count: f64) -> usize {
    if count <= 0.0 {
        0
    } else if count < 2.0 {
        1
    } else if count < 5.0 {
        2
    } else if count < 16.0 {
        3
    } else {
        4
    }
}

/// Packs a context prefix into a single key, 16 bits per field.
pub fn pack_ctx(fields: &[u32]) -> u64 {
    debug_assert!(fields.len() <= 4);
    let mut key = 0u64;
    for (i, &f) in fields.iter().enumerate() {
        debug_assert!(f < (1 << 16));
        key |= (f as u64) << (16 * i);
    }
    key
}

#[derive(Debug, Clone, Default, PartialEq)]
struct LevelTable {
    events: HashMap<(u64, u32), f64>,
    totals: HashMap<u64, f64>,
}

impl LevelTable {
    fn add(&mut self, ctx: u64, outcome: u32, mass: f64) {
        *self.events.entry((ctx, outcome)).or_insert(0.0) += mass;
        *self.totals.entry(ctx).or_insert(0.0) += mass;
    }

    fn relf(&self, ctx: u64, outcome: u32) -> Option<f64> {
        let total = *self.totals.get(&ctx)?;
        Some(self.events.get(&(ctx, outcome)).copied().unwrap_or(0.0) / total)
    }
}

/// Per-level event counts for one component.
#[derive(Debug, Clone, PartialEq)]
pub struct CountTables {
    schema: Vec<usize>,
    outcomes: usize,
    levels: Vec<LevelTable>,
}

impl CountTables {
    /// `schema` lists the context prefix arity of each level, strictly
    /// decreasing; a uniform level over `outcomes` is always appended
    /// implicitly.
    pub fn new(schema: Vec<usize>, outcomes: usize) -> CountTables {
        assert!(!schema.is_empty() && outcomes > 0);
        assert!(
            schema.windows(2).all(|w| w[0] > w[1]),
            "schema arities must strictly decrease"
        );
        assert!(schema[0] <= 4);
        let levels = vec![LevelTable::default(); schema.len()];
        CountTables {
            schema,
            outcomes,
            levels,
        }
    }

    pub fn schema(&self) -> &[usize] {
        &self.schema
    }

    pub fn n_levels(&self) -> usize {
        self.schema.len()
    }

    pub fn outcomes(&self) -> usize {
        self.outcomes
    }

    /// Adds one event with the given mass at every back-off level.
    pub fn add(&mut self, ctx: &[u32], outcome: u32, mass: f64) {
        debug_assert_eq!(ctx.len(), self.schema[0]);
        debug_assert!((outcome as usize) < self.outcomes);
        for (level, &arity) in self.schema.iter().enumerate() {
            self.levels[level].add(pack_ctx(&ctx[..arity]), outcome, mass);
        }
    }

    pub fn merge(&mut self, other: &CountTables) {
        assert_eq!(self.schema, other.schema);
        for (mine, theirs) in self.levels.iter_mut().zip(&other.levels) {
            for (&key, &mass) in &theirs.events {
                *mine.events.entry(key).or_insert(0.0) += mass;
            }
            for (&key, &mass) in &theirs.totals {
                *mine.totals.entry(key).or_insert(0.0) += mass;
            }
        }
    }

    pub fn is_empty(&self) -> bool {
        self.levels[0].events.is_empty()
    }

    /// Count of the full context at the top level.
    pub fn context_count(&self, ctx: &[u32]) -> f64 {
        self.levels[0]
            .totals
            .get(&pack_ctx(&ctx[..self.schema[0]]))
            .copied()
            .unwrap_or(0.0)
    }

    /// Relative frequency at one level; unseen contexts fall back to the
    /// uniform distribution so every level stays normalized.
    pub fn level_prob(&self, level: usize, ctx: &[u32], outcome: u32) -> f64 {
        let arity = self.schema[level];
        match self.levels[level].relf(pack_ctx(&ctx[..arity]), outcome) {
            Some(p) => p,
            None => 1.0 / self.outcomes as f64,
        }
    }

    /// Distinct (context, outcome) pairs with nonzero count at the top level.
    pub fn distinct_events(&self) -> usize {
        self.levels[0].events.len()
    }

    /// Top-level (packed context, outcome, count) rows in sorted order.
    pub fn sorted_top_events(&self) -> Vec<(u64, u32, f64)> {
        let mut rows: Vec<(u64, u32, f64)> = self.levels[0]
            .events
            .iter()
            .map(|(&(c, o), &m)| (c, o, m))
            .collect();
        rows.sort_by_key(|a| (a.0, a.1));
        rows
    }

    /// Rebuilds all levels from top-level rows (packed full contexts).
    pub fn from_top_events(
        schema: Vec<usize>,
        outcomes: usize,
        rows: &[(u64, u32, f64)],
    ) -> CountTables {
        let mut t = CountTables::new(schema, outcomes);
        let top = t.schema[0];
        for &(packed, outcome, mass) in rows {
            let mut fields = [0u32; 4];
            for (i, f) in fields.iter_mut().enumerate().take(top) {
                *f = ((packed >> (16 * i)) & 0xFFFF) as u32;
            }
            t.add(&fields[..top], outcome, mass);
        }
        t
    }
}

/// Weight-EM stopping rule.
#[derive(Debug, Clone, Copy)]
pub struct WeightEmOptions {
    pub max_iters: usize,
    pub tol: f64,
}

impl Default for WeightEmOptions {
    fn default() -> Self {
        WeightEmOptions {
            max_iters: 100,
            tol: 1e-7,
        }
    }
}

impl WeightEmOptions {
    /// Tight settings for tests that compare interpolated models across
    /// different level structures.
    pub fn converged() -> Self {
        WeightEmOptions {
            max_iters: 5000,
            tol: 1e-13,
        }
    }
}

/// One held-out event: full context tuple, outcome, fractional mass.
#[derive(Debug, Clone)]
pub struct CheckEvent {
    pub ctx: Vec<u32>,
    pub outcome: u32,
    pub mass: f64,
}

#[derive(Debug, Clone)]
pub struct WeightEstimate {
    pub weights: Vec<Vec<f64>>,
    /// Per-bucket log-likelihood trace, one entry per EM iteration.
    pub traces: Vec<Vec<f64>>,
    /// True when the check set was empty and uniform weights were used.
    pub fallback_uniform: bool,
}

/// Estimates bucketed interpolation weights on check events against main
/// count tables. Events are bucketed by the main-data count of their full
/// context; each bucket maximizes its own mixture likelihood.
pub fn estimate_weights(
    main: &CountTables,
    check: &[CheckEvent],
    opts: WeightEmOptions,
) -> WeightEstimate {
    let n_comp = main.n_levels() + 1;
    let uniform = vec![1.0 / n_comp as f64; n_comp];
    let mut weights = vec![uniform.clone(); N_BUCKETS];
    let mut traces = vec![Vec::new(); N_BUCKETS];
    if check.is_empty() {
        return WeightEstimate {
            weights,
            traces,
            fallback_uniform: true,
        };
    }

    // Component probabilities are fixed during weight EM; precompute them.
    let mut bucket_events: Vec<Vec<(Vec<f64>, f64)>> = vec![Vec::new(); N_BUCKETS];
    for ev in check {
        let bucket = bucket_of(main.context_count(&ev.ctx));
        let mut probs = Vec::with_capacity(n_comp);
        for level in 0..main.n_levels() {
            probs.push(main.level_prob(level, &ev.ctx, ev.outcome));
        }
        probs.push(1.0 / main.outcomes() as f64);
        bucket_events[bucket].push((probs, ev.mass));
    }

    for b in 0..N_BUCKETS {
        if bucket_events[b].is_empty() {
            continue;
        }
        let (w, trace) = em_simplex(&bucket_events[b], n_comp, opts);
        weights[b] = w;
        traces[b] = trace;
    }
    WeightEstimate {
        weights,
        traces,
        fallback_uniform: false,
    }
}

fn em_simplex(
    events: &[(Vec<f64>, f64)],
    n_comp: usize,
    opts: WeightEmOptions,
) -> (Vec<f64>, Vec<f64>) {
    let mut w = vec![1.0 / n_comp as f64; n_comp];
    let total_mass: f64 = events.iter().map(|(_, m)| m).sum();
    let mut trace = Vec::new();
    let mut prev_ll = f64::NEG_INFINITY;
    for _ in 0..opts.max_iters {
        let mut resp = vec![0.0; n_comp];
        let mut ll = 0.0;
        for (probs, mass) in events {
            let mix: f64 = w.iter().zip(probs).map(|(wi, pi)| wi * pi).sum();
            ll += mass * mix.ln();
            for i in 0..n_comp {
                resp[i] += mass * w[i] * probs[i] / mix;
            }
        }
        trace.push(ll);
        if (ll - prev_ll).abs() < opts.tol {
            break;
        }
        prev_ll = ll;
        for i in 0..n_comp {
            w[i] = resp[i] / total_mass;
        }
    }
    (w, trace)
}

/// A trained deleted-interpolation component: count tables plus bucketed
/// weights.
#[derive(Debug, Clone, PartialEq)]
pub struct ComponentModel {
    counts: CountTables,
    weights: Vec<Vec<f64>>,
}

impl ComponentModel {
    pub fn new(counts: CountTables, weights: Vec<Vec<f64>>) -> ComponentModel {
        assert_eq!(weights.len(), N_BUCKETS);
        for w in &weights {
            assert_eq!(w.len(), counts.n_levels() + 1);
            let sum: f64 = w.iter().sum();
            assert!((sum - 1.0).abs() < 1e-6, "bucket weights must sum to 1");
            assert!(w.iter().all(|&x| x >= 0.0));
        }
        ComponentModel { counts, weights }
    }

    /// An untrained model: empty tables, uniform weights.
    pub fn uniform(schema: Vec<usize>, outcomes: usize) -> ComponentModel {
        let counts = CountTables::new(schema, outcomes);
        let n = counts.n_levels() + 1;
        ComponentModel::new(counts, vec![vec![1.0 / n as f64; n]; N_BUCKETS])
    }

    pub fn counts(&self) -> &CountTables {
        &self.counts
    }

    pub fn weights(&self) -> &[Vec<f64>] {
        &self.weights
    }

    pub fn outcomes(&self) -> usize {
        self.counts.outcomes()
    }

    pub fn schema(&self) -> &[usize] {
        self.counts.schema()
    }

    /// Interpolated conditional probability of `outcome` given the full
    /// context tuple. Always in (0, 1]; sums to 1 over the outcome space.
    pub fn prob(&self, ctx: &[u32], outcome: u32) -> f64 {
        let bucket = bucket_of(self.counts.context_count(ctx));
        let w = &self.weights[bucket];
        let mut p = 0.0;
        for level in 0..self.counts.n_levels() {
            if w[level] > 0.0 {
                p += w[level] * self.counts.level_prob(level, ctx, outcome);
            }
        }
        p + w[self.counts.n_levels()] / self.counts.outcomes() as f64
    }

    pub fn log_prob(&self, ctx: &[u32], outcome: u32) -> f64 {
        self.prob(ctx, outcome).ln()
    }

    /// Number of distinct top-level (context, outcome) types.
    pub fn count_parameters(&self) -> usize {
        self.counts.distinct_events()
    }

    /// Checks that the conditional sums to one for a given context.
    pub fn check_normalization(&self, ctx: &[u32], tol: f64) -> Result<()> {
        let sum: f64 = (0..self.counts.outcomes() as u32)
            .map(|o| self.prob(ctx, o))
            .sum();
        if (sum - 1.0).abs() > tol {
            return Err(SlmError::Format(format!(
                "conditional sums to {sum}, expected 1"
            )));
        }
        Ok(())
    }
}
