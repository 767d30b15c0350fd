//! Device organization and the physical address mapping.

use crate::ConfigError;
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Level {
    Channel,
    Rank,
    Bank,
    Row,
    Column,
}

impl Level {
    pub fn name(self) -> &'static str {
        match self {
            Level::Channel => "channel",
            Level::Rank => "rank",
            Level::Bank => "bank",
            Level::Row => "row",
            Level::Column => "column",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "channel" | "ch" => Some(Level::Channel),
            "rank" | "ra" => Some(Level::Rank),
            "bank" | "ba" => Some(Level::Bank),
            "row" | "ro" => Some(Level::Row),
            "column" | "col" | "co" => Some(Level::Column),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum AddressError {
    #[error("address {address:#x} outside capacity {capacity:#x}")]
    OutOfRange { address: u64, capacity: u64 },
}

/// Decoded request coordinates. `row` is the row index within the bank;
/// `subarray` is always `row / rows_per_subarray`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct DramAddress {
    pub channel: u32,
    pub rank: u32,
    pub bank: u32,
    pub subarray: u32,
    pub row: u32,
    pub column: u32,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Geometry {
    pub channels: u32,
    pub ranks_per_channel: u32,
    pub banks_per_rank: u32,
    pub subarrays_per_bank: u32,
    pub rows_per_subarray: u32,
    pub columns_per_row: u32,
    /// Bytes moved by one column access (one cache line).
    pub column_bytes: u32,
    /// Address fields from least to most significant, above the column
    /// byte offset. Each entry is `(level, bit width)`.
    pub address_map: Vec<(Level, u32)>,
}

impl Default for Geometry {
    /// One channel, one rank, eight banks of 64K rows split into eight
    /// subarrays; 8 KiB rows of 64-byte columns.
    fn default() -> Self {
        Geometry::new(1, 1, 8, 8, 8192, 128, 64)
    }
}

impl Geometry {
    /// Builds a geometry with the default `column, bank, rank, channel, row`
    /// mapping (consecutive lines share a row).
    pub fn new(
        channels: u32,
        ranks_per_channel: u32,
        banks_per_rank: u32,
        subarrays_per_bank: u32,
        rows_per_subarray: u32,
        columns_per_row: u32,
        column_bytes: u32,
    ) -> Self {
        let mut geometry = Geometry {
            channels,
            ranks_per_channel,
            banks_per_rank,
            subarrays_per_bank,
            rows_per_subarray,
            columns_per_row,
            column_bytes,
            address_map: Vec::new(),
        };
        geometry.address_map = geometry.map_for(&[
            Level::Column,
            Level::Bank,
            Level::Rank,
            Level::Channel,
            Level::Row,
        ]);
        geometry
    }

    /// Address map over `order` with bit widths taken from this geometry.
    pub fn map_for(&self, order: &[Level]) -> Vec<(Level, u32)> {
        order.iter().map(|&level| (level, log2(self.level_size(level)))).collect()
    }

    pub fn level_size(&self, level: Level) -> u32 {
        match level {
            Level::Channel => self.channels,
            Level::Rank => self.ranks_per_channel,
            Level::Bank => self.banks_per_rank,
            Level::Row => self.rows_per_bank(),
            Level::Column => self.columns_per_row,
        }
    }

    pub fn rows_per_bank(&self) -> u32 {
        self.subarrays_per_bank * self.rows_per_subarray
    }

    pub fn banks_total(&self) -> usize {
        (self.channels * self.ranks_per_channel * self.banks_per_rank) as usize
    }

    pub fn banks_per_channel(&self) -> usize {
        (self.ranks_per_channel * self.banks_per_rank) as usize
    }

    pub fn capacity(&self) -> u64 {
        self.channels as u64
            * self.ranks_per_channel as u64
            * self.banks_per_rank as u64
            * self.rows_per_bank() as u64
            * self.columns_per_row as u64
            * self.column_bytes as u64
    }

    pub fn subarray_of(&self, row: u32) -> u32 {
        row / self.rows_per_subarray
    }

    /// Builds an address with a consistent subarray index.
    pub fn address(&self, channel: u32, rank: u32, bank: u32, row: u32, column: u32) -> DramAddress {
        DramAddress {
            channel,
            rank,
            bank,
            subarray: self.subarray_of(row),
            row,
            column,
        }
    }

    /// Dense index of the bank inside its channel.
    pub fn bank_slot(&self, addr: &DramAddress) -> usize {
        (addr.rank * self.banks_per_rank + addr.bank) as usize
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let counts = [
            ("channels", self.channels),
            ("ranks_per_channel", self.ranks_per_channel),
            ("banks_per_rank", self.banks_per_rank),
            ("subarrays_per_bank", self.subarrays_per_bank),
            ("rows_per_subarray", self.rows_per_subarray),
            ("columns_per_row", self.columns_per_row),
            ("column_bytes", self.column_bytes),
        ];
        for (field, value) in counts {
            if value == 0 || !value.is_power_of_two() {
                return Err(ConfigError::invalid(field, "must be a nonzero power of two"));
            }
        }
        if self.subarrays_per_bank > 64 {
            return Err(ConfigError::invalid("subarrays_per_bank", "at most 64 supported"));
        }
        let mut seen = Vec::new();
        for &(level, width) in &self.address_map {
            if seen.contains(&level) {
                return Err(ConfigError::invalid(
                    "address_map",
                    format!("level {} appears twice", level.name()),
                ));
            }
            if width != log2(self.level_size(level)) {
                return Err(ConfigError::invalid(
                    "address_map",
                    format!("width of {} does not match its size", level.name()),
                ));
            }
            seen.push(level);
        }
        if seen.len() != 5 {
            return Err(ConfigError::invalid("address_map", "must cover every level exactly once"));
        }
        let bits: u32 = self.address_map.iter().map(|&(_, w)| w).sum::<u32>() + log2(self.column_bytes);
        if bits > 63 {
            return Err(ConfigError::invalid("address_map", "capacity exceeds 63 address bits"));
        }
        Ok(())
    }

    pub fn decode(&self, flat_address: u64) -> Result<DramAddress, AddressError> {
        let capacity = self.capacity();
        if flat_address >= capacity {
            return Err(AddressError::OutOfRange {
                address: flat_address,
                capacity,
            });
        }
        let mut rest = flat_address >> log2(self.column_bytes);
        let mut addr = DramAddress::default();
        for &(level, width) in &self.address_map {
            let value = (rest & ((1u64 << width) - 1)) as u32;
            rest >>= width;
            match level {
                Level::Channel => addr.channel = value,
                Level::Rank => addr.rank = value,
                Level::Bank => addr.bank = value,
                Level::Row => addr.row = value,
                Level::Column => addr.column = value,
            }
        }
        addr.subarray = self.subarray_of(addr.row);
        Ok(addr)
    }

    /// Inverse of [`Geometry::decode`]; the byte offset within the column is zero.
    pub fn encode(&self, addr: &DramAddress) -> u64 {
        let mut flat = 0u64;
        let mut shift = log2(self.column_bytes);
        for &(level, width) in &self.address_map {
            let value = match level {
                Level::Channel => addr.channel,
                Level::Rank => addr.rank,
                Level::Bank => addr.bank,
                Level::Row => addr.row,
                Level::Column => addr.column,
            } as u64;
            flat |= value << shift;
            shift += width;
        }
        flat
    }
}

fn log2(value: u32) -> u32 {
    value.max(1).trailing_zeros()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn small() -> Geometry {
        let mut g = Geometry::new(1, 1, 8, 4, 16, 128, 64);
        g.address_map = g.map_for(&[Level::Column, Level::Bank, Level::Row, Level::Rank, Level::Channel]);
        g
    }

    #[test]
    fn zero_decodes_to_origin() {
        let g = Geometry::default();
        assert_eq!(g.decode(0).unwrap(), DramAddress::default());
    }

    #[test]
    fn bank_bits_follow_column_bits() {
        // 64-byte columns: 6 offset bits, 128 columns: 7 bits, so bit 13 is bank bit 0.
        let g = small();
        let addr = g.decode(0x2000).unwrap();
        assert_eq!((addr.bank, addr.row, addr.column), (1, 0, 0));
        assert_eq!(g.encode(&addr), 0x2000);
        let addr = g.decode(0x2000 + 3 * 64).unwrap();
        assert_eq!((addr.bank, addr.column), (1, 3));
        let addr = g.decode(8 * 0x2000).unwrap();
        assert_eq!((addr.bank, addr.row), (0, 1));
    }

    #[test]
    fn subarray_is_derived_from_row() {
        let g = small();
        let addr = g.decode(17 * 8 * 0x2000).unwrap();
        assert_eq!(addr.row, 17);
        assert_eq!(addr.subarray, 1);
    }

    #[test]
    fn out_of_range_is_rejected() {
        let g = small();
        let cap = g.capacity();
        assert_eq!(
            g.decode(cap),
            Err(AddressError::OutOfRange { address: cap, capacity: cap })
        );
    }

    #[test]
    fn duplicate_levels_are_rejected() {
        let mut g = small();
        g.address_map[1] = g.address_map[0];
        assert!(g.validate().is_err());
    }

    #[test]
    fn capacity_matches_bit_count() {
        let g = Geometry::default();
        g.validate().unwrap();
        let bits: u32 = g.address_map.iter().map(|&(_, w)| w).sum::<u32>() + 6;
        assert_eq!(g.capacity(), 1u64 << bits);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(10_000))]
        #[test]
        fn encode_inverts_decode(line in 0u64..(Geometry::default().capacity() / 64)) {
            let g = Geometry::default();
            let flat = line * 64;
            let addr = g.decode(flat).unwrap();
            prop_assert_eq!(g.encode(&addr), flat);
            prop_assert_eq!(addr.subarray, addr.row / g.rows_per_subarray);
        }
    }
}
