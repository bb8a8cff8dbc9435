//! Control packet riding with each distributed EPR qubit.

use serde::{Deserialize, Serialize};

use crate::topology::Coordinate;

/// A Pauli frame as two bits: bit 0 is X, bit 1 is Z.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub struct PauliFrame(u8);

impl PauliFrame {
    pub const I: PauliFrame = PauliFrame(0);
    pub const X: PauliFrame = PauliFrame(1);
    pub const Z: PauliFrame = PauliFrame(2);
    pub const Y: PauliFrame = PauliFrame(3);

    pub fn from_bits(x: bool, z: bool) -> Self {
        PauliFrame(x as u8 | (z as u8) << 1)
    }

    pub fn bits(self) -> u8 {
        self.0
    }

    /// Composition up to global phase.
    pub fn fold(self, other: PauliFrame) -> PauliFrame {
        PauliFrame(self.0 ^ other.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct QubitIdPacket {
    pub id: u64,
    pub dest: Coordinate,
    pub partner_dest: Coordinate,
    pub correction: PauliFrame,
    pub hops: u32,
}

impl QubitIdPacket {
    pub fn new(id: u64, dest: Coordinate, partner_dest: Coordinate) -> Self {
        Self { id, dest, partner_dest, correction: PauliFrame::I, hops: 0 }
    }

    /// Records the two measurement bits of one completed teleport.
    pub fn record_teleport(&mut self, x: bool, z: bool) {
        self.correction = self.correction.fold(PauliFrame::from_bits(x, z));
        self.hops += 1;
    }
}
