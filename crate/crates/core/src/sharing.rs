//! 2-out-of-3 replicated secret sharing over `Z_{2^64}`.
//!
//! A secret `x = x1 + x2 + x3` is held as pairs: `S1` has `(x1, x2)`, `S2`
//! has `(x2, x3)`, `S3` has `(x3, x1)`. With 0-based indices, party `i`
//! holds `(x_i, x_{i+1})`. Addition, public constants and public scalars are
//! local; everything else lives in [`crate::primitives`].

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha12Rng;

use crate::error::{Error, Result};
use crate::ring::{RingValue, RING_BITS};
use crate::transport::PartyId;

/// One party's view of a single shared value.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ReplicatedShare {
    pub party: PartyId,
    /// `(x_i, x_{i+1})` for party `i`.
    pub pair: (RingValue, RingValue),
}

impl ReplicatedShare {
    pub fn new(party: PartyId, pair: (RingValue, RingValue)) -> Self {
        ReplicatedShare { party, pair }
    }

    pub fn add(&self, other: &ReplicatedShare) -> ReplicatedShare {
        debug_assert_eq!(self.party, other.party);
        ReplicatedShare::new(
            self.party,
            (self.pair.0 + other.pair.0, self.pair.1 + other.pair.1),
        )
    }

    pub fn sub(&self, other: &ReplicatedShare) -> ReplicatedShare {
        self.add(&other.neg())
    }

    pub fn neg(&self) -> ReplicatedShare {
        ReplicatedShare::new(self.party, (-self.pair.0, -self.pair.1))
    }

    /// Adds a public constant; it is folded into `x1`.
    pub fn add_const(&self, c: RingValue) -> ReplicatedShare {
        let (mut a, mut b) = self.pair;
        match self.party.index() {
            0 => a += c,
            2 => b += c,
            _ => {}
        }
        ReplicatedShare::new(self.party, (a, b))
    }

    pub fn mul_const(&self, c: RingValue) -> ReplicatedShare {
        ReplicatedShare::new(self.party, (self.pair.0 * c, self.pair.1 * c))
    }
}

/// One party's shares of a vector, stored as contiguous pairs.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SharedVector {
    party: PartyId,
    pairs: Vec<[u64; 2]>,
}

impl SharedVector {
    pub fn from_pairs(party: PartyId, pairs: Vec<[u64; 2]>) -> Self {
        SharedVector { party, pairs }
    }

    pub fn zeros(party: PartyId, len: usize) -> Self {
        SharedVector {
            party,
            pairs: vec![[0, 0]; len],
        }
    }

    /// Sharing of a public vector, with no randomness: the value sits in `x1`.
    pub fn public(party: PartyId, values: &[RingValue]) -> Self {
        let mut v = SharedVector::zeros(party, values.len());
        v.add_public_assign(values);
        v
    }

    /// Sharing where the secret is entirely the additive share `x_j`, known
    /// to the two parties holding index `j`. Party `i` passes its own view
    /// of `x_j` (zero if it does not hold index `j`).
    pub fn from_known_share(party: PartyId, share_index: usize, values: &[u64]) -> Self {
        let i = party.index();
        let pairs = values
            .iter()
            .map(|&v| {
                let mut p = [0u64; 2];
                if share_index == i {
                    p[0] = v;
                } else if share_index == (i + 1) % 3 {
                    p[1] = v;
                }
                p
            })
            .collect();
        SharedVector { party, pairs }
    }

    #[inline]
    pub fn party(&self) -> PartyId {
        self.party
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    #[inline]
    pub fn pairs(&self) -> &[[u64; 2]] {
        &self.pairs
    }

    #[inline]
    pub fn pairs_mut(&mut self) -> &mut [[u64; 2]] {
        &mut self.pairs
    }

    pub fn into_pairs(self) -> Vec<[u64; 2]> {
        self.pairs
    }

    pub fn get(&self, i: usize) -> ReplicatedShare {
        let [a, b] = self.pairs[i];
        ReplicatedShare::new(self.party, (RingValue(a), RingValue(b)))
    }

    pub fn push(&mut self, s: ReplicatedShare) {
        debug_assert_eq!(s.party, self.party);
        self.pairs.push([s.pair.0 .0, s.pair.1 .0]);
    }

    /// Element-wise gather.
    pub fn select(&self, indices: &[usize]) -> SharedVector {
        SharedVector {
            party: self.party,
            pairs: indices.iter().map(|&i| self.pairs[i]).collect(),
        }
    }

    pub fn slice(&self, start: usize, len: usize) -> SharedVector {
        SharedVector {
            party: self.party,
            pairs: self.pairs[start..start + len].to_vec(),
        }
    }

    pub fn concat<'a, I: IntoIterator<Item = &'a SharedVector>>(party: PartyId, parts: I) -> Self {
        let mut pairs = Vec::new();
        for p in parts {
            debug_assert_eq!(p.party, party);
            pairs.extend_from_slice(&p.pairs);
        }
        SharedVector { party, pairs }
    }

    pub fn extend(&mut self, other: &SharedVector) {
        self.pairs.extend_from_slice(&other.pairs);
    }

    /// Each element repeated `times` times.
    pub fn repeat_each(&self, times: usize) -> SharedVector {
        let mut pairs = Vec::with_capacity(self.len() * times);
        for p in &self.pairs {
            pairs.extend(std::iter::repeat_n(*p, times));
        }
        SharedVector {
            party: self.party,
            pairs,
        }
    }

    pub fn add(&self, other: &SharedVector) -> SharedVector {
        let mut out = self.clone();
        out.add_assign(other);
        out
    }

    pub fn add_assign(&mut self, other: &SharedVector) {
        assert_eq!(self.len(), other.len(), "length mismatch in add");
        for (a, b) in self.pairs.iter_mut().zip(&other.pairs) {
            a[0] = a[0].wrapping_add(b[0]);
            a[1] = a[1].wrapping_add(b[1]);
        }
    }

    pub fn sub(&self, other: &SharedVector) -> SharedVector {
        assert_eq!(self.len(), other.len(), "length mismatch in sub");
        let pairs = self
            .pairs
            .iter()
            .zip(&other.pairs)
            .map(|(a, b)| [a[0].wrapping_sub(b[0]), a[1].wrapping_sub(b[1])])
            .collect();
        SharedVector {
            party: self.party,
            pairs,
        }
    }

    pub fn neg(&self) -> SharedVector {
        SharedVector {
            party: self.party,
            pairs: self
                .pairs
                .iter()
                .map(|p| [p[0].wrapping_neg(), p[1].wrapping_neg()])
                .collect(),
        }
    }

    /// Adds the same public constant to every element.
    pub fn add_const(&self, c: RingValue) -> SharedVector {
        let mut out = self.clone();
        out.add_const_assign(c);
        out
    }

    pub fn add_const_assign(&mut self, c: RingValue) {
        let slot = match self.party.index() {
            0 => 0,
            2 => 1,
            _ => return,
        };
        for p in &mut self.pairs {
            p[slot] = p[slot].wrapping_add(c.0);
        }
    }

    /// Adds a public vector element-wise.
    pub fn add_public_assign(&mut self, values: &[RingValue]) {
        assert_eq!(self.len(), values.len(), "length mismatch in add_public");
        let slot = match self.party.index() {
            0 => 0,
            2 => 1,
            _ => return,
        };
        for (p, v) in self.pairs.iter_mut().zip(values) {
            p[slot] = p[slot].wrapping_add(v.0);
        }
    }

    /// `c - x` for a public constant `c`.
    pub fn rsub_const(&self, c: RingValue) -> SharedVector {
        self.neg().add_const(c)
    }

    pub fn mul_const(&self, c: RingValue) -> SharedVector {
        SharedVector {
            party: self.party,
            pairs: self
                .pairs
                .iter()
                .map(|p| [p[0].wrapping_mul(c.0), p[1].wrapping_mul(c.0)])
                .collect(),
        }
    }

    /// Element-wise product with a public vector.
    pub fn mul_public(&self, values: &[RingValue]) -> SharedVector {
        assert_eq!(self.len(), values.len(), "length mismatch in mul_public");
        SharedVector {
            party: self.party,
            pairs: self
                .pairs
                .iter()
                .zip(values)
                .map(|(p, v)| [p[0].wrapping_mul(v.0), p[1].wrapping_mul(v.0)])
                .collect(),
        }
    }

    /// Sum of all elements, i.e. the dot product with a public all-ones vector.
    pub fn sum(&self) -> ReplicatedShare {
        let mut acc = [0u64; 2];
        for p in &self.pairs {
            acc[0] = acc[0].wrapping_add(p[0]);
            acc[1] = acc[1].wrapping_add(p[1]);
        }
        ReplicatedShare::new(self.party, (RingValue(acc[0]), RingValue(acc[1])))
    }

    /// Sums of consecutive chunks of `chunk` elements.
    pub fn chunk_sums(&self, chunk: usize) -> SharedVector {
        assert!(chunk > 0 && self.len().is_multiple_of(chunk));
        let pairs = self
            .pairs
            .chunks_exact(chunk)
            .map(|c| {
                c.iter().fold([0u64; 2], |acc, p| {
                    [acc[0].wrapping_add(p[0]), acc[1].wrapping_add(p[1])]
                })
            })
            .collect();
        SharedVector {
            party: self.party,
            pairs,
        }
    }
}

/// Splits `x` into a replicated sharing with caller-chosen `x1, x2`.
pub fn share_with(x: RingValue, x1: RingValue, x2: RingValue) -> [ReplicatedShare; 3] {
    let x3 = x - x1 - x2;
    [
        ReplicatedShare::new(PartyId::S1, (x1, x2)),
        ReplicatedShare::new(PartyId::S2, (x2, x3)),
        ReplicatedShare::new(PartyId::S3, (x3, x1)),
    ]
}

/// Splits `x` into a fresh replicated sharing with uniform `x1, x2`.
pub fn share<R: Rng + ?Sized>(x: RingValue, rng: &mut R) -> [ReplicatedShare; 3] {
    let x1 = RingValue(rng.next_u64());
    let x2 = RingValue(rng.next_u64());
    share_with(x, x1, x2)
}

/// Additive 3-of-3 split: `x = x1 + x2 + x3`.
pub fn share_additive<R: Rng + ?Sized>(x: RingValue, rng: &mut R) -> [RingValue; 3] {
    let x1 = RingValue(rng.next_u64());
    let x2 = RingValue(rng.next_u64());
    [x1, x2, x - x1 - x2]
}

/// Recombines three shares, checking that the overlapping components agree.
pub fn reconstruct(shares: &[ReplicatedShare; 3]) -> Result<RingValue> {
    for (i, s) in shares.iter().enumerate() {
        if s.party.index() != i {
            return Err(Error::Integrity(format!(
                "share at position {i} belongs to {}",
                s.party
            )));
        }
    }
    for i in 0..3 {
        let next = (i + 1) % 3;
        if shares[i].pair.1 != shares[next].pair.0 {
            return Err(Error::Integrity(format!(
                "{} and {} disagree on x{}",
                shares[i].party,
                shares[next].party,
                next + 1
            )));
        }
    }
    Ok(shares[0].pair.0 + shares[1].pair.0 + shares[2].pair.0)
}

pub fn share_vector<R: Rng + ?Sized>(xs: &[RingValue], rng: &mut R) -> [SharedVector; 3] {
    let mut out = PartyId::ALL.map(|p| SharedVector::zeros(p, 0));
    for &x in xs {
        for (v, s) in out.iter_mut().zip(share(x, rng)) {
            v.push(s);
        }
    }
    out
}

pub fn reconstruct_vector(views: &[SharedVector; 3]) -> Result<Vec<RingValue>> {
    let n = views[0].len();
    if views.iter().any(|v| v.len() != n) {
        return Err(Error::Integrity("views have different lengths".into()));
    }
    (0..n)
        .map(|i| reconstruct(&[views[0].get(i), views[1].get(i), views[2].get(i)]))
        .collect()
}

/// A keyed pseudorandom function, expanded in counter mode: each counter
/// value selects an independent ChaCha stream.
#[derive(Clone)]
pub struct Prf {
    seed: [u8; 32],
}

impl Prf {
    pub fn new(seed: [u8; 32]) -> Self {
        Prf { seed }
    }

    pub fn words(&self, counter: u64, n: usize) -> Vec<u64> {
        let mut rng = ChaCha12Rng::from_seed(self.seed);
        rng.set_stream(counter);
        (0..n).map(|_| rng.next_u64()).collect()
    }
}

/// Which of a party's two pairwise keys to use.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum KeySlot {
    /// Key `k_i`, shared with the previous party.
    Own,
    /// Key `k_{i+1}`, shared with the next party.
    Next,
}

/// Party `i`'s pairwise PRF keys `k_i` (shared with party `i-1`) and
/// `k_{i+1}` (shared with party `i+1`), plus a counter that all parties
/// advance in lockstep.
#[derive(Clone)]
pub struct PartyRandomness {
    party: PartyId,
    own: Prf,
    next: Prf,
    counter: u64,
}

impl PartyRandomness {
    pub fn new(party: PartyId, own_seed: [u8; 32], next_seed: [u8; 32]) -> Self {
        PartyRandomness {
            party,
            own: Prf::new(own_seed),
            next: Prf::new(next_seed),
            counter: 0,
        }
    }

    pub fn party(&self) -> PartyId {
        self.party
    }

    pub fn counter(&self) -> u64 {
        self.counter
    }

    /// Reserves a fresh counter value; every party must call this at the
    /// same protocol step.
    pub fn tick(&mut self) -> u64 {
        let c = self.counter;
        self.counter += 1;
        c
    }

    pub fn words(&self, slot: KeySlot, counter: u64, n: usize) -> Vec<u64> {
        match slot {
            KeySlot::Own => self.own.words(counter, n),
            KeySlot::Next => self.next.words(counter, n),
        }
    }

    /// This party's `n` additive shares of zero: `u_i = F(k_i) - F(k_{i+1})`.
    pub fn zero_shares(&mut self, n: usize) -> Vec<u64> {
        let c = self.tick();
        let a = self.own.words(c, n);
        let b = self.next.words(c, n);
        a.iter().zip(&b).map(|(x, y)| x.wrapping_sub(*y)).collect()
    }

    /// This party's `n` XOR shares of zero.
    pub fn zero_xor_shares(&mut self, n: usize) -> Vec<u64> {
        let c = self.tick();
        let a = self.own.words(c, n);
        let b = self.next.words(c, n);
        a.iter().zip(&b).map(|(x, y)| x ^ y).collect()
    }
}

/// The three pairwise keys of a session, as seen by a trusted observer.
/// Used for tests and for deriving the per-party views.
pub struct ZeroShareSource {
    keys: [Prf; 3],
    counter: u64,
}

impl ZeroShareSource {
    pub fn new(seeds: [[u8; 32]; 3]) -> Self {
        ZeroShareSource {
            keys: seeds.map(Prf::new),
            counter: 0,
        }
    }

    pub fn from_master_seed(seed: u64) -> Self {
        let mut rng = ChaCha12Rng::seed_from_u64(seed);
        let mut seeds = [[0u8; 32]; 3];
        for s in &mut seeds {
            rng.fill_bytes(s);
        }
        ZeroShareSource::new(seeds)
    }

    /// Party `i`'s keyed view: keys `k_i` and `k_{i+1}`.
    pub fn party_view(&self, party: PartyId) -> PartyRandomness {
        let i = party.index();
        PartyRandomness {
            party,
            own: self.keys[i].clone(),
            next: self.keys[(i + 1) % 3].clone(),
            counter: self.counter,
        }
    }

    /// `(u1, u2, u3)` for a given counter; they sum to zero.
    pub fn zero_share_at(&self, counter: u64) -> [RingValue; 3] {
        let f: Vec<u64> = self.keys.iter().map(|k| k.words(counter, 1)[0]).collect();
        [0, 1, 2].map(|i| RingValue(f[i].wrapping_sub(f[(i + 1) % 3])))
    }

    pub fn next_zero_share(&mut self) -> [RingValue; 3] {
        let out = self.zero_share_at(self.counter);
        self.counter += 1;
        out
    }
}

/// Magic bytes of the offline share file format.
pub const SHARE_FILE_MAGIC: &[u8; 4] = b"SGS1";

/// One receiving party's additive shares of a data holder's table.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ShareFile {
    pub frac_bits: u32,
    pub rows: usize,
    pub cols: usize,
    /// Row-major additive shares.
    pub values: Vec<u64>,
}

impl ShareFile {
    pub fn write_to<W: Write>(&self, w: &mut W) -> Result<()> {
        if self.values.len() != self.rows * self.cols {
            return Err(Error::ShareFormat(format!(
                "{} values for a {}x{} table",
                self.values.len(),
                self.rows,
                self.cols
            )));
        }
        w.write_all(SHARE_FILE_MAGIC)?;
        for v in [RING_BITS, self.frac_bits, self.rows as u32, self.cols as u32] {
            w.write_all(&v.to_le_bytes())?;
        }
        for v in &self.values {
            w.write_all(&v.to_le_bytes())?;
        }
        Ok(())
    }

    pub fn read_from<R: Read>(r: &mut R) -> Result<Self> {
        let mut magic = [0u8; 4];
        r.read_exact(&mut magic)
            .map_err(|_| Error::ShareFormat("file too short for magic".into()))?;
        if &magic != SHARE_FILE_MAGIC {
            return Err(Error::ShareFormat(format!("bad magic {magic:?}")));
        }
        let mut header = [0u8; 16];
        r.read_exact(&mut header)
            .map_err(|_| Error::ShareFormat("truncated header".into()))?;
        let field = |i: usize| u32::from_le_bytes(header[4 * i..4 * i + 4].try_into().unwrap());
        let (k, f, rows, cols) = (field(0), field(1), field(2) as usize, field(3) as usize);
        if k != RING_BITS {
            return Err(Error::ShareFormat(format!(
                "ring width {k} unsupported (expected {RING_BITS})"
            )));
        }
        let mut body = Vec::new();
        r.read_to_end(&mut body)?;
        if body.len() != rows * cols * 8 {
            return Err(Error::ShareFormat(format!(
                "expected {} value bytes for {rows}x{cols}, found {}",
                rows * cols * 8,
                body.len()
            )));
        }
        let values = body
            .chunks_exact(8)
            .map(|c| u64::from_le_bytes(c.try_into().unwrap()))
            .collect();
        Ok(ShareFile {
            frac_bits: f,
            rows,
            cols,
            values,
        })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let mut w = BufWriter::new(File::create(path)?);
        self.write_to(&mut w)?;
        w.flush()?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let mut r = BufReader::new(File::open(path)?);
        ShareFile::read_from(&mut r)
    }
}

/// Splits a row-major table into three additive share files, one per server.
pub fn share_table<R: Rng + ?Sized>(
    values: &[RingValue],
    rows: usize,
    cols: usize,
    frac_bits: u32,
    rng: &mut R,
) -> Result<[ShareFile; 3]> {
    if values.len() != rows * cols {
        return Err(Error::ShareFormat(format!(
            "{} values for a {rows}x{cols} table",
            values.len()
        )));
    }
    let mut out = [0, 1, 2].map(|_| ShareFile {
        frac_bits,
        rows,
        cols,
        values: Vec::with_capacity(values.len()),
    });
    for &v in values {
        for (file, s) in out.iter_mut().zip(share_additive(v, rng)) {
            file.values.push(s.0);
        }
    }
    Ok(out)
}
