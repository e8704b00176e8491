//! Circular (Morgan) fingerprints folded into a fixed-length bit vector.

use std::collections::BTreeSet;

use rayon::prelude::*;
use thiserror::Error;

use crate::smiles::Molecule;

pub const DEFAULT_RADIUS: usize = 2;
pub const DEFAULT_BITS: usize = 2048;

const FNV_OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
const FNV_PRIME: u64 = 0x0000_0100_0000_01b3;

struct Fnv(u64);

impl Fnv {
    fn new() -> Self {
        Fnv(FNV_OFFSET)
    }

    fn bytes(&mut self, bytes: &[u8]) -> &mut Self {
        for &b in bytes {
            self.0 ^= u64::from(b);
            self.0 = self.0.wrapping_mul(FNV_PRIME);
        }
        self
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Fingerprint {
    n_bits: usize,
    words: Vec<u64>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("fingerprint lengths differ: {0} and {1}")]
pub struct LengthMismatch(pub usize, pub usize);

impl Fingerprint {
    pub fn empty(n_bits: usize) -> Self {
        assert!(n_bits > 0, "fingerprint needs at least one bit");
        Fingerprint {
            n_bits,
            words: vec![0; n_bits.div_ceil(64)],
        }
    }

    pub fn from_bits(n_bits: usize, bits: impl IntoIterator<Item = usize>) -> Self {
        let mut fp = Fingerprint::empty(n_bits);
        for b in bits {
            fp.set(b);
        }
        fp
    }

    pub fn n_bits(&self) -> usize {
        self.n_bits
    }

    pub fn set(&mut self, bit: usize) {
        assert!(bit < self.n_bits, "bit {bit} out of range");
        self.words[bit / 64] |= 1 << (bit % 64);
    }

    pub fn contains(&self, bit: usize) -> bool {
        bit < self.n_bits && self.words[bit / 64] >> (bit % 64) & 1 == 1
    }

    pub fn count(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn bits(&self) -> Vec<usize> {
        (0..self.n_bits).filter(|&b| self.contains(b)).collect()
    }
}

/// Hashes of every distinct atom environment up to `radius` bonds.
///
/// The radius-0 hash encodes (element, heavy degree, charge, hydrogens, ring
/// flag, aromatic flag). Each iteration hashes an atom's previous value with
/// its sorted (bond order, neighbour hash) pairs. An atom whose environment
/// covers no new bonds keeps its hash and contributes nothing new.
pub fn environment_hashes(m: &Molecule, radius: usize) -> BTreeSet<u64> {
    let adj = m.adjacency();
    let n_bonds = m.bonds.len();
    let mut hashes: Vec<u64> = m
        .atoms
        .iter()
        .enumerate()
        .map(|(i, a)| {
            let degree = adj[i].len().min(255) as u8;
            Fnv::new()
                .bytes(a.element.as_bytes())
                .bytes(&[0, degree, a.charge as u8, a.hydrogens, u8::from(a.in_ring), u8::from(a.aromatic)])
                .0
        })
        .collect();
    let mut out: BTreeSet<u64> = hashes.iter().copied().collect();
    let mut cover: Vec<Vec<bool>> = vec![vec![false; n_bonds]; m.atoms.len()];
    let mut grown = vec![true; m.atoms.len()];
    for _ in 0..radius {
        let mut next_hashes = hashes.clone();
        let mut next_cover = cover.clone();
        for v in 0..m.atoms.len() {
            if !grown[v] {
                continue;
            }
            let nc = &mut next_cover[v];
            for &(w, e) in &adj[v] {
                nc[e] = true;
                for (k, &c) in cover[w].iter().enumerate() {
                    nc[k] |= c;
                }
            }
            if *nc == cover[v] {
                grown[v] = false;
                continue;
            }
            let mut pairs: Vec<(u8, u64)> = adj[v]
                .iter()
                .map(|&(w, e)| (m.bonds[e].order.code(), hashes[w]))
                .collect();
            pairs.sort_unstable();
            let mut h = Fnv::new();
            h.bytes(&hashes[v].to_le_bytes());
            for (code, nh) in pairs {
                h.bytes(&[code]).bytes(&nh.to_le_bytes());
            }
            next_hashes[v] = h.0;
            out.insert(h.0);
        }
        hashes = next_hashes;
        cover = next_cover;
    }
    out
}

pub fn morgan_fingerprint(m: &Molecule, radius: usize, n_bits: usize) -> Fingerprint {
    Fingerprint::from_bits(
        n_bits,
        environment_hashes(m, radius)
            .into_iter()
            .map(|h| (h % n_bits as u64) as usize),
    )
}

/// `|A ∩ B| / |A ∪ B|`, with two empty fingerprints scoring 0.
pub fn tanimoto(a: &Fingerprint, b: &Fingerprint) -> Result<f64, LengthMismatch> {
    if a.n_bits != b.n_bits {
        return Err(LengthMismatch(a.n_bits, b.n_bits));
    }
    let (mut inter, mut union) = (0u32, 0u32);
    for (x, y) in a.words.iter().zip(&b.words) {
        inter += (x & y).count_ones();
        union += (x | y).count_ones();
    }
    Ok(if union == 0 {
        0.0
    } else {
        f64::from(inter) / f64::from(union)
    })
}

/// Symmetric all-pairs similarity; the diagonal is `tanimoto(a, a)`.
pub fn tanimoto_matrix(fps: &[Fingerprint]) -> Result<ndarray::Array2<f64>, LengthMismatch> {
    let n = fps.len();
    if let Some(f) = fps.iter().find(|f| f.n_bits != fps[0].n_bits) {
        return Err(LengthMismatch(fps[0].n_bits, f.n_bits));
    }
    let rows: Vec<Vec<f64>> = (0..n)
        .into_par_iter()
        .map(|i| (0..n).map(|j| tanimoto(&fps[i], &fps[j]).expect("lengths checked")).collect())
        .collect();
    Ok(ndarray::Array2::from_shape_fn((n, n), |(i, j)| rows[i][j]))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::smiles::parse_smiles;

    fn fp(s: &str) -> Fingerprint {
        morgan_fingerprint(&parse_smiles(s).unwrap(), DEFAULT_RADIUS, DEFAULT_BITS)
    }

    #[test]
    fn order_free() {
        assert_eq!(fp("CCO"), fp("OCC"));
        assert_eq!(fp("c1ccccc1O"), fp("Oc1ccccc1"));
        assert_ne!(fp("CCO"), fp("CCN"));
    }

    #[test]
    fn benzene_and_single_atom() {
        assert!(fp("c1ccccc1").count() <= 3);
        assert_eq!(environment_hashes(&parse_smiles("C").unwrap(), 2).len(), 1);
        assert_eq!(fp("C").count(), 1);
    }

    #[test]
    fn tanimoto_examples() {
        let a = Fingerprint::from_bits(16, [1, 2, 3]);
        let b = Fingerprint::from_bits(16, [2, 3, 4]);
        assert_eq!(tanimoto(&a, &b).unwrap(), 0.5);
        assert_eq!(tanimoto(&a, &a).unwrap(), 1.0);
        assert_eq!(tanimoto(&a, &Fingerprint::from_bits(16, [7])).unwrap(), 0.0);
        assert_eq!(tanimoto(&Fingerprint::empty(16), &Fingerprint::empty(16)).unwrap(), 0.0);
        assert!(tanimoto(&a, &Fingerprint::empty(8)).is_err());
        let m = tanimoto_matrix(&[a.clone(), b.clone()]).unwrap();
        assert_eq!(m[[0, 1]], m[[1, 0]]);
    }
}
