//! Duplicate filtering for generated corpora: a Weisfeiler-Lehman digest
//! catches structural duplicates, a DCT perceptual hash catches visual
//! near-duplicates.

use std::collections::BTreeSet;

use image::GrayImage;
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::model::ProcessGraph;

pub const DEFAULT_WL_ITERATIONS: u32 = 3;
pub const DEFAULT_PHASH_THRESHOLD: u32 = 10;
/// Cell size (px) for the layout-aware label quantization.
pub const DEFAULT_LAYOUT_CELL: f64 = 250.0;

/// Initial node labeling for the WL refinement.
///
/// `ClassOnly` is the textbook scheme: two graphs hash equal iff their
/// class-labeled structures are indistinguishable by WL refinement. Because
/// the generator preserves adjacency, every plan derived from one seed is
/// `ClassOnly`-identical, which would cap a corpus at one plan per seed.
/// `LayoutAware` therefore folds the node's template id and its position
/// (quantized to `cell`-sized bins) into the initial label, making the hash
/// sensitive to layout while staying id-independent.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum WlLabeling {
    ClassOnly,
    LayoutAware { cell: f64 },
}

impl Default for WlLabeling {
    fn default() -> Self {
        WlLabeling::LayoutAware {
            cell: DEFAULT_LAYOUT_CELL,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct WlHash {
    pub digest: u64,
    pub iterations: u32,
}

impl WlHash {
    pub fn to_hex(self) -> String {
        format!("{:016x}", self.digest)
    }
}

fn digest64(parts: &[&[u8]]) -> u64 {
    let mut h = Sha256::new();
    for p in parts {
        h.update(p);
    }
    let out = h.finalize();
    u64::from_le_bytes(out[..8].try_into().unwrap())
}

/// `h` rounds of neighborhood label refinement, then an order-independent
/// digest of the final label multiset together with |V| and |E|. Node ids
/// never enter the computation.
pub fn wl_hash(g: &ProcessGraph, h: u32, labeling: WlLabeling) -> WlHash {
    let idx = g.node_index();
    let mut labels: Vec<u64> = g
        .nodes
        .iter()
        .map(|n| match labeling {
            WlLabeling::ClassOnly => digest64(&[b"cls:", n.cls.as_str().as_bytes()]),
            WlLabeling::LayoutAware { cell } => {
                let (cx, cy) = n.bbox.center();
                let qx = (cx / cell).floor() as i64;
                let qy = (cy / cell).floor() as i64;
                let tpl = n.template.as_deref().unwrap_or("");
                digest64(&[
                    b"cls:",
                    n.cls.as_str().as_bytes(),
                    b"|tpl:",
                    tpl.as_bytes(),
                    b"|at:",
                    &qx.to_le_bytes(),
                    &qy.to_le_bytes(),
                ])
            }
        })
        .collect();

    // adjacency as (edge class tag, neighbor index)
    let mut adj: Vec<Vec<(u8, usize)>> = vec![Vec::new(); g.nodes.len()];
    for e in &g.edges {
        let (ai, bi) = (idx[e.a.as_str()], idx[e.b.as_str()]);
        let tag = e.cls as u8;
        adj[ai].push((tag, bi));
        adj[bi].push((tag, ai));
    }

    for _ in 0..h {
        let mut next = Vec::with_capacity(labels.len());
        for (i, &own) in labels.iter().enumerate() {
            let mut neigh: Vec<(u8, u64)> =
                adj[i].iter().map(|&(tag, j)| (tag, labels[j])).collect();
            neigh.sort_unstable();
            let mut hasher = Sha256::new();
            hasher.update(own.to_le_bytes());
            for (tag, lbl) in neigh {
                hasher.update([tag]);
                hasher.update(lbl.to_le_bytes());
            }
            let out = hasher.finalize();
            next.push(u64::from_le_bytes(out[..8].try_into().unwrap()));
        }
        labels = next;
    }

    labels.sort_unstable();
    let mut hasher = Sha256::new();
    hasher.update((g.nodes.len() as u64).to_le_bytes());
    hasher.update((g.edges.len() as u64).to_le_bytes());
    hasher.update(h.to_le_bytes());
    for l in labels {
        hasher.update(l.to_le_bytes());
    }
    let out = hasher.finalize();
    WlHash {
        digest: u64::from_le_bytes(out[..8].try_into().unwrap()),
        iterations: h,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PHash(pub u64);

impl PHash {
    pub fn hamming(self, other: PHash) -> u32 {
        (self.0 ^ other.0).count_ones()
    }

    pub fn to_hex(self) -> String {
        format!("{:016x}", self.0)
    }
}

#[derive(Debug, Error)]
pub enum PhashError {
    #[error("image {0}x{1} is smaller than the 32x32 hash grid")]
    TooSmall(u32, u32),
}

const GRID: usize = 32;
const BLOCK: usize = 8;

/// DCT perceptual hash: box-average downscale to 32x32, 2-D DCT-II, take the
/// 8x8 low-frequency block minus DC, threshold each coefficient against the
/// median of the 63.
pub fn phash(img: &GrayImage) -> Result<PHash, PhashError> {
    let (w, h) = img.dimensions();
    if (w as usize) < GRID || (h as usize) < GRID {
        return Err(PhashError::TooSmall(w, h));
    }

    // box-average downscale
    let mut small = [[0.0f64; GRID]; GRID];
    for ty in 0..GRID {
        let y0 = ty * h as usize / GRID;
        let y1 = ((ty + 1) * h as usize / GRID).max(y0 + 1);
        for tx in 0..GRID {
            let x0 = tx * w as usize / GRID;
            let x1 = ((tx + 1) * w as usize / GRID).max(x0 + 1);
            let mut sum = 0.0;
            for y in y0..y1 {
                for x in x0..x1 {
                    sum += img.get_pixel(x as u32, y as u32).0[0] as f64;
                }
            }
            small[ty][tx] = sum / ((y1 - y0) * (x1 - x0)) as f64;
        }
    }

    // separable DCT-II, rows then columns
    let mut cos_table = [[0.0f64; GRID]; GRID];
    for (u, row) in cos_table.iter_mut().enumerate() {
        for (x, v) in row.iter_mut().enumerate() {
            *v = (std::f64::consts::PI * (2.0 * x as f64 + 1.0) * u as f64 / (2.0 * GRID as f64))
                .cos();
        }
    }
    let mut rows = [[0.0f64; GRID]; GRID];
    for y in 0..GRID {
        for u in 0..GRID {
            rows[y][u] = (0..GRID).map(|x| small[y][x] * cos_table[u][x]).sum();
        }
    }
    let mut freq = [[0.0f64; BLOCK]; BLOCK];
    for v in 0..BLOCK {
        for u in 0..BLOCK {
            freq[v][u] = (0..GRID).map(|y| rows[y][u] * cos_table[v][y]).sum();
        }
    }

    let mut coefs = Vec::with_capacity(BLOCK * BLOCK - 1);
    for v in 0..BLOCK {
        for u in 0..BLOCK {
            if u == 0 && v == 0 {
                continue;
            }
            // snap accumulation dust to zero so constant images hash to 0
            let c = freq[v][u];
            coefs.push(if c.abs() < 1e-8 { 0.0 } else { c });
        }
    }
    let mut sorted = coefs.clone();
    sorted.sort_by(f64::total_cmp);
    let median = sorted[coefs.len() / 2];

    let mut bits = 0u64;
    for (i, c) in coefs.iter().enumerate() {
        if *c > median {
            bits |= 1 << i;
        }
    }
    Ok(PHash(bits))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RejectReason {
    /// WL digest already accepted.
    Structural,
    /// Perceptual hash within `tau` of an accepted image.
    Visual { distance: u32 },
}

impl std::fmt::Display for RejectReason {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            RejectReason::Structural => write!(f, "structural duplicate"),
            RejectReason::Visual { distance } => {
                write!(f, "visual near-duplicate (hamming {distance})")
            }
        }
    }
}

/// Order-dependent acceptance filter over a generation run.
#[derive(Debug, Clone)]
pub struct DedupRegistry {
    wl_seen: BTreeSet<u64>,
    phashes: Vec<u64>,
    pub tau: u32,
    pub wl_iterations: u32,
    pub labeling: WlLabeling,
}

impl Default for DedupRegistry {
    fn default() -> Self {
        DedupRegistry::new(
            DEFAULT_PHASH_THRESHOLD,
            DEFAULT_WL_ITERATIONS,
            WlLabeling::default(),
        )
    }
}

impl DedupRegistry {
    pub fn new(tau: u32, wl_iterations: u32, labeling: WlLabeling) -> DedupRegistry {
        DedupRegistry {
            wl_seen: BTreeSet::new(),
            phashes: Vec::new(),
            tau,
            wl_iterations,
            labeling,
        }
    }

    pub fn len(&self) -> usize {
        self.phashes.len().max(self.wl_seen.len())
    }

    pub fn is_empty(&self) -> bool {
        self.wl_seen.is_empty() && self.phashes.is_empty()
    }

    /// Re-registers hashes from a previous run so generation can resume.
    pub fn register(&mut self, wl_digest: u64, ph: u64) {
        self.wl_seen.insert(wl_digest);
        self.phashes.push(ph);
    }

    /// Structural check, then visual check, then record both hashes.
    pub fn try_accept(
        &mut self,
        g: &ProcessGraph,
        img: &GrayImage,
    ) -> Result<(WlHash, PHash), RejectReason> {
        let wl = wl_hash(g, self.wl_iterations, self.labeling);
        if self.wl_seen.contains(&wl.digest) {
            return Err(RejectReason::Structural);
        }
        let ph = phash(img).expect("generated canvases exceed the hash grid");
        if let Some(d) = self.phashes.iter().map(|&p| PHash(p).hamming(ph)).min() {
            if d < self.tau {
                return Err(RejectReason::Visual { distance: d });
            }
        }
        self.register(wl.digest, ph.0);
        Ok((wl, ph))
    }
}
