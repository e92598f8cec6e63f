use std::num::NonZeroUsize;
use std::sync::Arc;

use lru::LruCache;
use parking_lot::Mutex;

/// Rendered response bodies keyed by endpoint and decoded query. A capacity
/// of 0 disables caching.
pub struct ResponseCache {
    inner: Option<Mutex<LruCache<String, Arc<Vec<u8>>>>>,
}

impl ResponseCache {
    pub fn new(capacity: usize) -> Self {
        ResponseCache {
            inner: NonZeroUsize::new(capacity).map(|c| Mutex::new(LruCache::new(c))),
        }
    }

    pub fn get(&self, key: &str) -> Option<Arc<Vec<u8>>> {
        self.inner.as_ref()?.lock().get(key).cloned()
    }

    pub fn insert(&self, key: String, body: Arc<Vec<u8>>) {
        if let Some(c) = &self.inner {
            c.lock().put(key, body);
        }
    }

    pub fn len(&self) -> usize {
        self.inner.as_ref().map_or(0, |c| c.lock().len())
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}
