//! Flat inference layout for shallow ensembles.
//!
//! Every tree is padded to a complete binary tree of the ensemble depth over
//! binned features. Node `i` has children `2i+1` and `2i+2` and packs
//! `feature << 8 | bin`; `bin(x) <= bin` goes left, which matches
//! `x <= threshold` because thresholds are bin edges. A shallower branch is
//! continued by pass-through nodes with bin 255, which send everything left.

use super::Tree;
use crate::dataset::{Features, N_FEATURES};
use crate::gbm::Node;

/// Deepest tree compiled to the flat layout.
pub(super) const MAX_DEPTH: usize = 8;
/// Leaf accumulators; tree `t` adds into accumulator `t % LANES`.
pub(super) const LANES: usize = 16;

const PASS: u32 = u8::MAX as u32;

/// Folds the accumulators pairwise (`j += j + w` for halving `w`) and adds
/// `base` last. Every prediction path sums leaves in this order, so they
/// agree to the bit.
pub(super) fn finish(base: f64, mut acc: [f64; LANES]) -> f64 {
    let mut w = LANES;
    while w > 1 {
        w /= 2;
        for j in 0..w {
            acc[j] += acc[j + w];
        }
    }
    base + acc[0]
}

/// Sum of per-tree leaf values in the canonical order.
pub(super) fn ordered_sum(base: f64, leaves: impl IntoIterator<Item = f64>) -> f64 {
    let mut acc = [0.0; LANES];
    for (t, v) in leaves.into_iter().enumerate() {
        acc[t % LANES] += v;
    }
    finish(base, acc)
}

/// Nodes and leaves are stored in blocks of `LANES` trees. Within a block,
/// slot `p` of every tree is contiguous, so slot `p` of tree `t` lives at
/// `(t / LANES) * stride * LANES + p * LANES + t % LANES`.
#[derive(Debug)]
pub(super) struct Forest {
    depth: usize,
    /// `2^depth`: node and leaf slots per tree.
    stride: usize,
    trees: usize,
    edges: Vec<Vec<f64>>,
    nodes: Vec<u32>,
    leaves: Vec<f64>,
    simd: bool,
}

impl Forest {
    pub(super) fn compile(trees: &[Tree], edges: &[Vec<f64>]) -> Option<Self> {
        let depth = trees.iter().map(Tree::depth).max().unwrap_or(0);
        if depth > MAX_DEPTH || edges.len() != N_FEATURES || edges.iter().any(|e| e.len() > PASS as usize) {
            return None;
        }
        let stride = 1usize << depth;
        let slots = trees.len().div_ceil(LANES).checked_mul(stride * LANES)?;
        if slots > i32::MAX as usize / 2 {
            return None;
        }
        let mut f = Self {
            depth,
            stride,
            trees: trees.len(),
            edges: edges.to_vec(),
            nodes: vec![PASS; slots],
            leaves: vec![0.0; slots],
            simd: simd_available(),
        };
        for (t, tree) in trees.iter().enumerate() {
            f.fill(t, tree, 0, 0, 0)?;
        }
        Some(f)
    }

    fn slot(&self, t: usize, pos: usize) -> usize {
        (t / LANES) * self.stride * LANES + pos * LANES + t % LANES
    }

    fn fill(&mut self, t: usize, tree: &Tree, node: usize, pos: usize, level: usize) -> Option<()> {
        if level == self.depth {
            let Node::Leaf { value } = tree.nodes[node] else {
                unreachable!("depth bounded by Tree::depth")
            };
            let s = self.slot(t, pos + 1 - self.stride);
            self.leaves[s] = value;
            return Some(());
        }
        match tree.nodes[node] {
            Node::Split {
                feature,
                threshold,
                left,
                right,
                ..
            } => {
                let bin = self.edges[feature].binary_search_by(|e| e.total_cmp(&threshold)).ok()?;
                let s = self.slot(t, pos);
                self.nodes[s] = (feature as u32) << 8 | bin as u32;
                self.fill(t, tree, left, 2 * pos + 1, level + 1)?;
                self.fill(t, tree, right, 2 * pos + 2, level + 1)
            }
            Node::Leaf { .. } => {
                self.fill(t, tree, node, 2 * pos + 1, level + 1)?;
                self.fill(t, tree, node, 2 * pos + 2, level + 1)
            }
        }
    }

    fn bins(&self, x: &Features) -> [u32; 32] {
        let mut xb = [0u32; 32];
        for (f, b) in xb.iter_mut().take(N_FEATURES).enumerate() {
            *b = self.edges[f].partition_point(|&e| e < x[f]) as u32;
        }
        xb
    }

    pub(super) fn predict(&self, base: f64, x: &Features) -> f64 {
        let xb = self.bins(x);
        #[cfg(target_arch = "x86_64")]
        if self.simd {
            // SAFETY: `simd` is set only when the CPU reports AVX-512F.
            return finish(base, unsafe { avx512::accumulate(self, &xb) });
        }
        finish(base, self.accumulate_scalar(&xb, 0, [0.0; LANES]))
    }

    /// Adds the leaves of trees `from..` to `acc`.
    fn accumulate_scalar(&self, xb: &[u32; 32], from: usize, mut acc: [f64; LANES]) -> [f64; LANES] {
        for t in from..self.trees {
            let base = self.slot(t, 0);
            let mut i = 0;
            for _ in 0..self.depth {
                let n = self.nodes[base + i * LANES];
                i = 2 * i + 1 + usize::from(xb[(n >> 8) as usize & 31] > n & 0xff);
            }
            acc[t % LANES] += self.leaves[base + (i + 1 - self.stride) * LANES];
        }
        acc
    }
}

fn simd_available() -> bool {
    #[cfg(target_arch = "x86_64")]
    {
        std::arch::is_x86_feature_detected!("avx512f")
    }
    #[cfg(not(target_arch = "x86_64"))]
    {
        false
    }
}

/// Sixteen trees per step, one per lane. The top levels select each lane's
/// node from contiguous loads with mask blends; deeper levels and leaves are
/// gathers. The per-feature bin lookup is a two-register permute over the
/// 32-entry bin vector.
#[cfg(target_arch = "x86_64")]
mod avx512 {
    use std::arch::x86_64::*;

    use super::{Forest, LANES};

    /// Blocks traversed together so their gather chains overlap.
    const GROUP: usize = 4;
    /// Levels resolved by loads and blends instead of gathers.
    const BLEND_LEVELS: usize = 4;

    struct Consts {
        x_lo: __m512i,
        x_hi: __m512i,
        lanes: __m512i,
        low_byte: __m512i,
        block_slots: usize,
    }

    #[target_feature(enable = "avx512f")]
    pub(super) unsafe fn accumulate(f: &Forest, xb: &[u32; 32]) -> [f64; LANES] {
        let c = Consts {
            x_lo: _mm512_loadu_si512(xb.as_ptr().cast()),
            x_hi: _mm512_loadu_si512(xb.as_ptr().add(16).cast()),
            lanes: _mm512_setr_epi32(0, 1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11, 12, 13, 14, 15),
            low_byte: _mm512_set1_epi32(0xff),
            block_slots: f.stride * LANES,
        };
        let mut acc = [_mm512_setzero_pd(); 2];
        let blocks = f.trees / LANES;
        let grouped = blocks - blocks % GROUP;
        for b in (0..grouped).step_by(GROUP) {
            blocks_from::<GROUP>(f, &c, b, &mut acc);
        }
        for b in grouped..blocks {
            blocks_from::<1>(f, &c, b, &mut acc);
        }
        let mut out = [0.0; LANES];
        _mm512_storeu_pd(out.as_mut_ptr(), acc[0]);
        _mm512_storeu_pd(out.as_mut_ptr().add(8), acc[1]);
        f.accumulate_scalar(xb, blocks * LANES, out)
    }

    /// Node vector of level `k` from the `2^k` contiguous candidates, picking
    /// candidate `local` per lane.
    #[inline]
    #[target_feature(enable = "avx512f")]
    unsafe fn select(block: *const u32, k: usize, local: __m512i) -> __m512i {
        let first = (1 << k) - 1;
        let mut c = [_mm512_setzero_si512(); 1 << (BLEND_LEVELS - 1)];
        let mut width = 1 << k;
        for (j, v) in c.iter_mut().take(width).enumerate() {
            *v = _mm512_loadu_si512(block.add((first + j) * LANES).cast());
        }
        let mut bit = 1;
        while width > 1 {
            let m = _mm512_test_epi32_mask(local, _mm512_set1_epi32(bit));
            for j in 0..width / 2 {
                c[j] = _mm512_mask_blend_epi32(m, c[2 * j], c[2 * j + 1]);
            }
            width /= 2;
            bit <<= 1;
        }
        c[0]
    }

    /// Traverses blocks `first..first + G` level by level, then adds their
    /// leaves in block order. `local[g]` is each lane's offset within the
    /// current level.
    #[inline]
    #[target_feature(enable = "avx512f")]
    unsafe fn blocks_from<const G: usize>(f: &Forest, c: &Consts, first: usize, acc: &mut [__m512d; 2]) {
        let nodes: [*const u32; G] = std::array::from_fn(|g| f.nodes.as_ptr().add((first + g) * c.block_slots));
        let leaves: [*const f64; G] = std::array::from_fn(|g| f.leaves.as_ptr().add((first + g) * c.block_slots));
        let mut local = [_mm512_setzero_si512(); G];
        for k in 0..f.depth {
            for g in 0..G {
                let node = if k < BLEND_LEVELS {
                    select(nodes[g], k, local[g])
                } else {
                    let level_first = _mm512_set1_epi32((1 << k) - 1);
                    let offs = _mm512_add_epi32(_mm512_slli_epi32::<4>(_mm512_add_epi32(local[g], level_first)), c.lanes);
                    _mm512_i32gather_epi32::<4>(offs, nodes[g].cast())
                };
                let feature = _mm512_srli_epi32::<8>(node);
                let bin = _mm512_and_si512(node, c.low_byte);
                let x = _mm512_permutex2var_epi32(c.x_lo, feature, c.x_hi);
                let right = _mm512_cmpgt_epu32_mask(x, bin);
                let twice = _mm512_add_epi32(local[g], local[g]);
                local[g] = _mm512_mask_sub_epi32(twice, right, twice, _mm512_set1_epi32(-1));
            }
        }
        for g in 0..G {
            let pos = _mm512_add_epi32(_mm512_slli_epi32::<4>(local[g]), c.lanes);
            let pos_lo = _mm512_castsi512_si256(pos);
            let pos_hi = _mm512_castsi512_si256(_mm512_shuffle_i64x2::<0b11_10>(pos, pos));
            acc[0] = _mm512_add_pd(acc[0], _mm512_i32gather_pd::<8>(pos_lo, leaves[g]));
            acc[1] = _mm512_add_pd(acc[1], _mm512_i32gather_pd::<8>(pos_hi, leaves[g]));
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn finish_folds_pairwise() {
        let mut acc = [0.0; LANES];
        for (j, a) in acc.iter_mut().enumerate() {
            *a = j as f64;
        }
        assert_eq!(finish(0.5, acc), 0.5 + 120.0);
        assert_eq!(ordered_sum(2.0, []), 2.0);
    }

    #[test]
    fn simd_and_scalar_agree_bitwise() {
        use crate::gbm::{train_matrix, GbmParams};
        use rand::{Rng, SeedableRng};

        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        let x: Vec<Features> = (0..600)
            .map(|_| std::array::from_fn(|_| rng.gen_range(-3.0..3.0)))
            .collect();
        let y: Vec<f64> = x.iter().map(|r| r[0] * r[3] + (r[9]).cos() + r[24]).collect();
        for (depth, n_trees) in [(2, 5), (5, 47), (7, 64)] {
            let p = GbmParams {
                n_trees,
                max_depth: depth,
                min_samples_leaf: 4,
                ..Default::default()
            };
            let m = train_matrix(&x, &y, &[], &[], &p).unwrap();
            let f = Forest::compile(&m.trees, &m.bin_edges).unwrap();
            for r in x.iter().take(100) {
                let xb = f.bins(r);
                let scalar = finish(m.base_score, f.accumulate_scalar(&xb, 0, [0.0; LANES]));
                assert_eq!(f.predict(m.base_score, r).to_bits(), scalar.to_bits());
            }
        }
    }
}
