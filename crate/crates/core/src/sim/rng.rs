use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::model::NodeId;

/// What a stream is used for. Each (node, purpose) pair gets its own
/// keystream so draws never couple across nodes or subsystems.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
#[repr(u8)]
pub enum Purpose {
    MeshLink = 1,
    MeshJitter = 2,
    UwbChannel = 3,
    Turnaround = 4,
    Altimeter = 5,
    Bus = 6,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RandomStreams {
    master: u64,
}

impl RandomStreams {
    pub fn new(master: u64) -> Self {
        Self { master }
    }

    pub fn master(&self) -> u64 {
        self.master
    }

    /// ChaCha keyed by `(master, node, purpose)`; the cipher counter is the
    /// draw index, so a stream never depends on any other stream's usage.
    pub fn stream(&self, node: NodeId, purpose: Purpose) -> ChaCha8Rng {
        let mut key = [0u8; 32];
        key[..8].copy_from_slice(&self.master.to_le_bytes());
        key[8..10].copy_from_slice(&node.0.to_le_bytes());
        key[10] = purpose as u8;
        // domain tag
        key[24..32].copy_from_slice(b"meshloc\0");
        ChaCha8Rng::from_seed(key)
    }
}
