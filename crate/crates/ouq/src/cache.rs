//! Memoization of model evaluations keyed by the exact bit patterns of the
//! input coordinates.

use std::num::NonZeroUsize;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Mutex;

use lru::LruCache;
use ouq_core::{EvalCost, Model, ModelError};

pub const DEFAULT_CAPACITY: usize = 1 << 20;

type Key = Box<[u64]>;

fn key(x: &[f64]) -> Key {
    x.iter().map(|v| v.to_bits()).collect()
}

/// A bounded LRU memo in front of another model. Safe to share across
/// threads; the lock is released while the inner model runs.
pub struct CachedModel<M> {
    inner: M,
    memo: Mutex<LruCache<Key, f64>>,
    hits: AtomicU64,
    misses: AtomicU64,
}

impl<M: Model> CachedModel<M> {
    pub fn new(inner: M, capacity: usize) -> Self {
        let capacity = NonZeroUsize::new(capacity).unwrap_or(NonZeroUsize::MIN);
        Self {
            inner,
            memo: Mutex::new(LruCache::new(capacity)),
            hits: AtomicU64::new(0),
            misses: AtomicU64::new(0),
        }
    }

    pub fn inner(&self) -> &M {
        &self.inner
    }

    pub fn hits(&self) -> u64 {
        self.hits.load(Ordering::Relaxed)
    }

    /// Points actually forwarded to the inner model.
    pub fn misses(&self) -> u64 {
        self.misses.load(Ordering::Relaxed)
    }

    pub fn len(&self) -> usize {
        self.memo.lock().unwrap_or_else(|e| e.into_inner()).len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

impl<M: Model> Model for CachedModel<M> {
    fn input_dim(&self) -> usize {
        self.inner.input_dim()
    }

    fn evaluate(&self, x: &[f64]) -> Result<f64, ModelError> {
        let mut out = Vec::with_capacity(1);
        self.evaluate_batch(x, &mut out)?;
        Ok(out[0])
    }

    fn evaluate_batch(&self, points: &[f64], out: &mut Vec<f64>) -> Result<(), ModelError> {
        let dim = self.inner.input_dim().max(1);
        let start = out.len();
        let mut missing: Vec<usize> = Vec::new();
        {
            let mut memo = self.memo.lock().unwrap_or_else(|e| e.into_inner());
            for (i, x) in points.chunks_exact(dim).enumerate() {
                match memo.get(&key(x)) {
                    Some(&v) => out.push(v),
                    None => {
                        out.push(f64::NAN);
                        missing.push(i);
                    }
                }
            }
        }
        self.hits
            .fetch_add((out.len() - start - missing.len()) as u64, Ordering::Relaxed);
        if missing.is_empty() {
            return Ok(());
        }
        self.misses.fetch_add(missing.len() as u64, Ordering::Relaxed);
        let mut request = Vec::with_capacity(missing.len() * dim);
        for &i in &missing {
            request.extend_from_slice(&points[i * dim..(i + 1) * dim]);
        }
        let mut values = Vec::with_capacity(missing.len());
        self.inner.evaluate_batch(&request, &mut values)?;
        if values.len() != missing.len() {
            return Err(ModelError::new(
                &request[..dim],
                format!("model returned {} values for {} points", values.len(), missing.len()),
            ));
        }
        let mut memo = self.memo.lock().unwrap_or_else(|e| e.into_inner());
        for (&i, &v) in missing.iter().zip(&values) {
            out[start + i] = v;
            memo.put(key(&points[i * dim..(i + 1) * dim]), v);
        }
        Ok(())
    }

    fn cost(&self) -> EvalCost {
        self.inner.cost()
    }

    fn is_concurrent(&self) -> bool {
        self.inner.is_concurrent()
    }
}
