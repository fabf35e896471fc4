//! Fixed-width bit vectors used for bipartite adjacency rows and DFS
//! candidate sets. Bits at positions >= `len` are kept zero so popcounts
//! and emptiness checks never need masking on the read side.

#[derive(Clone, PartialEq, Eq, Debug)]
pub struct Bitset {
    words: Vec<u64>,
    len: usize,
}

impl Bitset {
    pub fn empty(len: usize) -> Self {
        Bitset {
            words: vec![0; len.div_ceil(64)],
            len,
        }
    }

    pub fn full(len: usize) -> Self {
        let mut b = Bitset {
            words: vec![!0u64; len.div_ceil(64)],
            len,
        };
        b.mask_tail();
        b
    }

    fn mask_tail(&mut self) {
        let rem = self.len % 64;
        if rem != 0 {
            if let Some(last) = self.words.last_mut() {
                *last &= (1u64 << rem) - 1;
            }
        }
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.words.iter().all(|&w| w == 0)
    }

    pub fn set(&mut self, i: usize) {
        debug_assert!(i < self.len);
        self.words[i / 64] |= 1u64 << (i % 64);
    }

    pub fn clear(&mut self, i: usize) {
        debug_assert!(i < self.len);
        self.words[i / 64] &= !(1u64 << (i % 64));
    }

    pub fn test(&self, i: usize) -> bool {
        debug_assert!(i < self.len);
        self.words[i / 64] >> (i % 64) & 1 == 1
    }

    pub fn count_ones(&self) -> u32 {
        self.words.iter().map(|w| w.count_ones()).sum()
    }

    /// self := a & b. All three must share a width.
    pub fn assign_and(&mut self, a: &Bitset, b: &Bitset) {
        debug_assert!(a.len == b.len && a.len == self.len);
        for (w, (&x, &y)) in self.words.iter_mut().zip(a.words.iter().zip(&b.words)) {
            *w = x & y;
        }
    }

    /// self := a & !b. Complementation stays inside the width, so the tail
    /// never leaks set bits.
    pub fn assign_and_not(&mut self, a: &Bitset, b: &Bitset) {
        debug_assert!(a.len == b.len && a.len == self.len);
        for (w, (&x, &y)) in self.words.iter_mut().zip(a.words.iter().zip(&b.words)) {
            *w = x & !y;
        }
        self.mask_tail();
    }

    /// self &= b.
    pub fn and_in_place(&mut self, b: &Bitset) {
        debug_assert!(b.len == self.len);
        for (w, &y) in self.words.iter_mut().zip(&b.words) {
            *w &= y;
        }
    }

    /// self &= !b. Never sets bits, so the tail stays clean.
    pub fn and_not_in_place(&mut self, b: &Bitset) {
        debug_assert!(b.len == self.len);
        for (w, &y) in self.words.iter_mut().zip(&b.words) {
            *w &= !y;
        }
    }

    pub fn iter_ones(&self) -> impl Iterator<Item = usize> + '_ {
        self.words.iter().enumerate().flat_map(|(wi, &w)| {
            let mut rest = w;
            std::iter::from_fn(move || {
                if rest == 0 {
                    None
                } else {
                    let bit = rest.trailing_zeros() as usize;
                    rest &= rest - 1;
                    Some(wi * 64 + bit)
                }
            })
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn full_masks_tail() {
        for len in [0, 1, 63, 64, 65, 130, 256] {
            let b = Bitset::full(len);
            assert_eq!(b.count_ones() as usize, len);
            assert_eq!(b.iter_ones().count(), len);
        }
    }

    #[test]
    fn set_test_clear() {
        let mut b = Bitset::empty(100);
        b.set(0);
        b.set(63);
        b.set(64);
        b.set(99);
        assert!(b.test(0) && b.test(63) && b.test(64) && b.test(99));
        assert!(!b.test(1) && !b.test(65));
        assert_eq!(b.count_ones(), 4);
        b.clear(63);
        assert!(!b.test(63));
        assert_eq!(b.iter_ones().collect::<Vec<_>>(), vec![0, 64, 99]);
    }

    #[test]
    fn and_not_never_leaks_past_len() {
        let a = Bitset::full(70);
        let b = Bitset::empty(70);
        let mut out = Bitset::empty(70);
        out.assign_and_not(&a, &b);
        assert_eq!(out.count_ones(), 70);
        assert!(out.iter_ones().all(|i| i < 70));
        out.assign_and(&a, &b);
        assert!(out.is_empty());
    }
}
