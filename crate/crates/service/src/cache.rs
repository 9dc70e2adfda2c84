//! Byte-budgeted LRU cache for derived structures (loaded volumes,
//! spectra, RLE encodings, pyramids).
//!
//! Each key owns a slot guarded by its own mutex, so concurrent misses on
//! the same key build once while the others wait; misses on different keys
//! build in parallel.

use std::any::Any;
use std::collections::HashMap;
use std::sync::{Arc, Mutex};

type Value = Arc<dyn Any + Send + Sync>;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct CacheKey {
    pub kind: &'static str,
    pub volume: u64,
    pub tf: u64,
    pub extra: u64,
}

impl CacheKey {
    pub fn new(kind: &'static str, volume: u64, tf: u64, extra: u64) -> Self {
        CacheKey {
            kind,
            volume,
            tf,
            extra,
        }
    }
}

#[derive(Default)]
struct Slot {
    value: Mutex<Option<(Value, usize)>>,
}

struct Entry {
    slot: Arc<Slot>,
    last_used: u64,
    bytes: usize,
}

#[derive(Default)]
struct Inner {
    entries: HashMap<CacheKey, Entry>,
    clock: u64,
    bytes: usize,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct CacheStats {
    pub entries: usize,
    pub bytes: usize,
    pub hits: u64,
    pub misses: u64,
    pub evictions: u64,
}

pub struct DerivedCache {
    budget: usize,
    inner: Mutex<Inner>,
    stats: Mutex<CacheStats>,
}

impl DerivedCache {
    pub fn new(budget_bytes: usize) -> Self {
        DerivedCache {
            budget: budget_bytes,
            inner: Mutex::default(),
            stats: Mutex::default(),
        }
    }

    pub fn budget(&self) -> usize {
        self.budget
    }

    pub fn stats(&self) -> CacheStats {
        let inner = self.inner.lock().unwrap();
        CacheStats {
            entries: inner.entries.len(),
            bytes: inner.bytes,
            ..*self.stats.lock().unwrap()
        }
    }

    /// Returns the cached value for `key`, building it with `build` on a
    /// miss. `build` reports the value's approximate size in bytes. The
    /// flag is true on a hit. Failed builds are not cached.
    pub fn get_or_build<T, E>(
        &self,
        key: CacheKey,
        build: impl FnOnce() -> Result<(T, usize), E>,
    ) -> Result<(Arc<T>, bool), E>
    where
        T: Any + Send + Sync,
    {
        let slot = {
            let mut inner = self.inner.lock().unwrap();
            inner.clock += 1;
            let now = inner.clock;
            let entry = inner.entries.entry(key).or_insert_with(|| Entry {
                slot: Arc::default(),
                last_used: now,
                bytes: 0,
            });
            entry.last_used = now;
            entry.slot.clone()
        };

        let mut guard = slot.value.lock().unwrap();
        if let Some((v, _)) = guard.as_ref() {
            if let Ok(v) = v.clone().downcast::<T>() {
                self.stats.lock().unwrap().hits += 1;
                return Ok((v, true));
            }
        }
        self.stats.lock().unwrap().misses += 1;
        let (value, bytes) = match build() {
            Ok(v) => v,
            Err(e) => {
                drop(guard);
                self.forget_empty(key, &slot);
                return Err(e);
            }
        };
        let value = Arc::new(value);
        *guard = Some((value.clone() as Value, bytes));
        drop(guard);
        self.account(key, &slot, bytes);
        Ok((value, false))
    }

    fn forget_empty(&self, key: CacheKey, slot: &Arc<Slot>) {
        let mut inner = self.inner.lock().unwrap();
        if let Some(e) = inner.entries.get(&key) {
            if Arc::ptr_eq(&e.slot, slot) && e.slot.value.lock().unwrap().is_none() {
                inner.entries.remove(&key);
            }
        }
    }

    fn account(&self, key: CacheKey, slot: &Arc<Slot>, bytes: usize) {
        let mut inner = self.inner.lock().unwrap();
        match inner.entries.get_mut(&key) {
            Some(e) if Arc::ptr_eq(&e.slot, slot) => e.bytes = bytes,
            // evicted while building; the caller still gets its value
            _ => return,
        }
        inner.bytes += bytes;
        let mut evicted = 0;
        while inner.bytes > self.budget {
            let victim = inner
                .entries
                .iter()
                .filter(|(k, e)| **k != key && e.bytes > 0)
                .min_by_key(|(_, e)| e.last_used)
                .map(|(k, _)| *k);
            let Some(victim) = victim else { break };
            let e = inner.entries.remove(&victim).unwrap();
            inner.bytes -= e.bytes;
            evicted += 1;
        }
        // a single entry larger than the whole budget is not kept
        if inner.bytes > self.budget {
            let e = inner.entries.remove(&key).unwrap();
            inner.bytes -= e.bytes;
            evicted += 1;
        }
        self.stats.lock().unwrap().evictions += evicted;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::sync::atomic::{AtomicUsize, Ordering};

    fn key(n: u64) -> CacheKey {
        CacheKey::new("test", n, 0, 0)
    }

    fn ok(v: u64, bytes: usize) -> impl FnOnce() -> Result<(u64, usize), ()> {
        move || Ok((v, bytes))
    }

    #[test]
    fn second_lookup_hits() {
        let c = DerivedCache::new(1000);
        let (a, hit) = c.get_or_build(key(1), ok(7, 10)).unwrap();
        assert!(!hit);
        let (b, hit) = c.get_or_build(key(1), ok(8, 10)).unwrap();
        assert!(hit);
        assert_eq!((*a, *b), (7, 7));
        assert_eq!(c.stats().bytes, 10);
    }

    #[test]
    fn evicts_least_recently_used_by_bytes() {
        let c = DerivedCache::new(100);
        c.get_or_build(key(1), ok(1, 40)).unwrap();
        c.get_or_build(key(2), ok(2, 40)).unwrap();
        c.get_or_build(key(1), ok(1, 40)).unwrap();
        c.get_or_build(key(3), ok(3, 40)).unwrap();
        let s = c.stats();
        assert_eq!((s.entries, s.bytes, s.evictions), (2, 80, 1));
        assert!(c.get_or_build(key(1), ok(9, 40)).unwrap().1);
        assert!(!c.get_or_build(key(2), ok(2, 40)).unwrap().1);
    }

    #[test]
    fn oversize_values_are_returned_but_not_kept() {
        let c = DerivedCache::new(10);
        let (v, hit) = c.get_or_build(key(1), ok(5, 11)).unwrap();
        assert_eq!((*v, hit), (5, false));
        assert_eq!(c.stats().entries, 0);
    }

    #[test]
    fn failures_are_not_cached() {
        let c = DerivedCache::new(100);
        let r: Result<(Arc<u64>, bool), &str> = c.get_or_build(key(1), || Err("boom"));
        assert!(r.is_err());
        assert_eq!(c.stats().entries, 0);
        assert!(!c.get_or_build(key(1), ok(1, 1)).unwrap().1);
    }

    #[test]
    fn concurrent_misses_build_once() {
        let c = Arc::new(DerivedCache::new(1 << 20));
        let builds = Arc::new(AtomicUsize::new(0));
        let handles: Vec<_> = (0..8)
            .map(|_| {
                let c = c.clone();
                let builds = builds.clone();
                std::thread::spawn(move || {
                    c.get_or_build(key(42), || {
                        builds.fetch_add(1, Ordering::SeqCst);
                        std::thread::sleep(std::time::Duration::from_millis(50));
                        Ok::<_, ()>((42u64, 8))
                    })
                    .unwrap()
                    .0
                })
            })
            .collect();
        for h in handles {
            assert_eq!(*h.join().unwrap(), 42);
        }
        assert_eq!(builds.load(Ordering::SeqCst), 1);
    }
}
