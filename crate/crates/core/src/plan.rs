//! Chunking arithmetic.

use std::ops::Range;

/// How a file of `file_size` bytes splits into chunks `1..=n_chunks`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TransferPlan {
    pub file_size: u64,
    pub chunk_size: u32,
    pub n_chunks: u32,
    pub last_chunk_size: u32,
}

impl TransferPlan {
    /// # Panics
    /// If `chunk_size` is zero or the file needs more than `u32::MAX` chunks.
    pub fn new(file_size: u64, chunk_size: u32) -> Self {
        assert!(chunk_size >= 1, "chunk_size must be positive");
        let n = file_size.div_ceil(chunk_size as u64);
        let n_chunks = u32::try_from(n).expect("chunk count exceeds u32");
        let last_chunk_size = match n_chunks {
            0 => 0,
            _ => (file_size - (n - 1) * chunk_size as u64) as u32,
        };
        Self {
            file_size,
            chunk_size,
            n_chunks,
            last_chunk_size,
        }
    }

    /// Like [`TransferPlan::new`] but returns `None` instead of panicking.
    pub fn checked(file_size: u64, chunk_size: u32) -> Option<Self> {
        if chunk_size == 0 || file_size.div_ceil(chunk_size as u64) > u32::MAX as u64 {
            return None;
        }
        Some(Self::new(file_size, chunk_size))
    }

    /// Length of the 1-based chunk `index`, or `None` when out of range.
    pub fn chunk_len(&self, index: u32) -> Option<u32> {
        if index == 0 || index > self.n_chunks {
            None
        } else if index == self.n_chunks {
            Some(self.last_chunk_size)
        } else {
            Some(self.chunk_size)
        }
    }

    /// Byte range of the 1-based chunk `index` within the file.
    pub fn chunk_range(&self, index: u32) -> Option<Range<u64>> {
        let len = self.chunk_len(index)? as u64;
        let start = (index as u64 - 1) * self.chunk_size as u64;
        Some(start..start + len)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn one_megabyte_with_expert_chunks() {
        let p = TransferPlan::new(1_000_000, 25_600);
        assert_eq!(p.n_chunks, 40);
        assert_eq!(p.last_chunk_size, 1_600);
        assert_eq!(p.chunk_range(40), Some(998_400..1_000_000));
    }

    #[test]
    fn hundred_kilobytes_with_pso_chunks() {
        let p = TransferPlan::new(100_000, 41_358);
        assert_eq!(p.n_chunks, 3);
        assert_eq!(p.last_chunk_size, 17_284);
    }

    #[test]
    fn exact_fit_and_empty() {
        let p = TransferPlan::new(25_600, 25_600);
        assert_eq!((p.n_chunks, p.last_chunk_size), (1, 25_600));
        let z = TransferPlan::new(0, 25_600);
        assert_eq!((z.n_chunks, z.last_chunk_size), (0, 0));
        assert_eq!(z.chunk_len(1), None);
        assert_eq!(p.chunk_len(0), None);
        assert_eq!(p.chunk_len(2), None);
    }

    #[test]
    fn checked_rejects_degenerate_inputs() {
        assert!(TransferPlan::checked(10, 0).is_none());
        assert!(TransferPlan::checked(u64::MAX, 1).is_none());
        assert!(TransferPlan::checked(10, 3).is_some());
    }

    proptest! {
        #[test]
        fn chunks_tile_the_file(file_size in 0u64..5_000_000, chunk in 1u32..70_000) {
            let p = TransferPlan::new(file_size, chunk);
            prop_assert_eq!(p.n_chunks as u64, file_size.div_ceil(chunk as u64));
            let mut next = 0u64;
            for i in 1..=p.n_chunks {
                let r = p.chunk_range(i).unwrap();
                prop_assert_eq!(r.start, next);
                if i < p.n_chunks {
                    prop_assert_eq!(r.end - r.start, chunk as u64);
                }
                prop_assert!(r.end > r.start);
                next = r.end;
            }
            prop_assert_eq!(next, file_size);
        }
    }
}
