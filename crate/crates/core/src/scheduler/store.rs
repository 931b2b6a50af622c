use std::collections::HashMap;
use std::fmt;
use std::sync::Arc;

use parking_lot::RwLock;

use crate::dsp::AudioBuffer;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum StoreKey {
    /// Conformed stem `input` of project `project`.
    Stem { project: usize, input: usize },
    /// Output port of a chain; port `b` of a splitter-terminal chain is band `b`.
    Chain {
        project: usize,
        chain: usize,
        port: usize,
    },
}

impl fmt::Display for StoreKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            StoreKey::Stem { project, input } => write!(f, "p{project}/stem{input}"),
            StoreKey::Chain {
                project,
                chain,
                port,
            } => write!(f, "p{project}/chain{chain}/port{port}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("buffer `{0}` was already written")]
pub struct AlreadyWritten(pub StoreKey);

/// Write-once, read-many buffer map shared by all workers.
#[derive(Debug, Default)]
pub struct BufferStore {
    map: RwLock<HashMap<StoreKey, Arc<AudioBuffer>>>,
}

impl BufferStore {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(
        &self,
        key: StoreKey,
        buf: AudioBuffer,
    ) -> Result<Arc<AudioBuffer>, AlreadyWritten> {
        let mut map = self.map.write();
        if map.contains_key(&key) {
            return Err(AlreadyWritten(key));
        }
        let buf = Arc::new(buf);
        map.insert(key, Arc::clone(&buf));
        Ok(buf)
    }

    pub fn get(&self, key: &StoreKey) -> Option<Arc<AudioBuffer>> {
        self.map.read().get(key).cloned()
    }

    pub fn contains(&self, key: &StoreKey) -> bool {
        self.map.read().contains_key(key)
    }

    pub fn len(&self) -> usize {
        self.map.read().len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// All keys, sorted.
    pub fn keys(&self) -> Vec<StoreKey> {
        let mut keys: Vec<StoreKey> = self.map.read().keys().copied().collect();
        keys.sort_unstable();
        keys
    }

    /// Ports of a chain, in port order.
    pub fn chain_ports(&self, project: usize, chain: usize) -> Vec<Arc<AudioBuffer>> {
        let map = self.map.read();
        (0..)
            .map_while(|port| {
                map.get(&StoreKey::Chain {
                    project,
                    chain,
                    port,
                })
                .cloned()
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn write_once() {
        let store = BufferStore::new();
        let key = StoreKey::Chain {
            project: 0,
            chain: 1,
            port: 0,
        };
        store
            .insert(key, AudioBuffer::mono(vec![1.0], 8000))
            .unwrap();
        assert_eq!(
            store.insert(key, AudioBuffer::mono(vec![2.0], 8000)),
            Err(AlreadyWritten(key))
        );
        assert_eq!(store.get(&key).unwrap().channel(0), &[1.0]);
        assert_eq!(store.chain_ports(0, 1).len(), 1);
    }
}
