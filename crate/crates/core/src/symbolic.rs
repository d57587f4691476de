//! Full shifts and hierarchical block subshifts with prescribed entropy.
//!
//! A subshift is generated by a schedule of block levels. Level 1 is a set
//! of short words over the alphabet; each later level concatenates blocks
//! of the previous level according to a periodic slot pattern. Fixed slots
//! carry a signature and a covering run that embeds every lower block in
//! every higher block (the syndetic-occurrence mechanism); free slots are
//! the entropy source. The top level is kept implicit: its block set is the
//! product of the free-slot choices and is never enumerated.
//!
//! Word counts are exact. Language membership is decided by a small
//! nondeterministic automaton over the slot pattern, and p(n) is obtained
//! by counting length-n paths in the lazily determinized automaton.

use std::collections::{BTreeSet, HashMap};
use std::sync::{Arc, Mutex, OnceLock};

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::discrete::SymbolSeq;
use crate::error::{Error, Result};

/// Level-1 block length used by the generator.
const L1: usize = 4;
/// Largest word length for exact counting; p(n) <= 2^n must fit in u128.
const MAX_COUNT_LEN: usize = 126;

/// One slot of a level pattern: either a fixed block or a free choice.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Slot {
    Fixed(usize),
    Free(Vec<usize>),
}

impl Slot {
    pub fn options(&self) -> &[usize] {
        match self {
            Slot::Fixed(i) => std::slice::from_ref(i),
            Slot::Free(v) => v,
        }
    }
}

/// A fully enumerated block level.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LevelSpec {
    pub block_len: usize,
    #[serde(with = "packed")]
    pub blocks: Vec<Vec<u8>>,
}

/// The implicit top level: a periodic slot pattern over unit blocks.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TopLevel {
    pub unit_len: usize,
    #[serde(with = "packed")]
    pub units: Vec<Vec<u8>>,
    pub slots: Vec<Slot>,
}

/// Entropy target the schedule was steered toward.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TargetBand {
    pub c: f64,
    pub tol: f64,
    /// log(top block count) / top block length; a rigorous lower bound for
    /// the entropy of the language by supermultiplicativity.
    pub aligned_density: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Subshift {
    pub alphabet: u8,
    pub levels: Vec<LevelSpec>,
    pub top: TopLevel,
    pub target: Option<TargetBand>,
}

/// Outcome of the finite-scale minimality check.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Certificate {
    Certified { max_gap: usize },
    Refuted { word: Vec<u8>, position: usize },
}

mod packed {
    //! Blocks serialize as strings with one base-16 digit per symbol.

    use serde::de::Error as DeError;
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<S: Serializer>(blocks: &[Vec<u8>], s: S) -> Result<S::Ok, S::Error> {
        let strings: Vec<String> = blocks
            .iter()
            .map(|b| b.iter().map(|&x| char::from_digit(x as u32, 16).unwrap()).collect())
            .collect();
        strings.serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<Vec<u8>>, D::Error> {
        let strings = Vec::<String>::deserialize(d)?;
        strings
            .iter()
            .map(|t| {
                t.chars()
                    .map(|ch| {
                        ch.to_digit(16).map(|x| x as u8).ok_or_else(|| {
                            D::Error::custom(format!("bad symbol digit {ch:?}"))
                        })
                    })
                    .collect()
            })
            .collect()
    }
}

/// Matcher state: slot index, offset inside the current unit, and the unit
/// choices still compatible with the symbols consumed so far in this slot.
type Config = (u16, u16, Vec<u16>);

struct Automaton<'a> {
    top: &'a TopLevel,
}

impl Automaton<'_> {
    fn options_vec(&self, slot: usize) -> Vec<u16> {
        let mut v: Vec<u16> = self.top.slots[slot].options().iter().map(|&i| i as u16).collect();
        v.sort_unstable();
        v
    }

    /// All states a word may start in. Aligned starts sit on unit
    /// boundaries; unrestricted starts may begin mid-unit, with the
    /// preceding symbols of the unit unconstrained.
    fn start_configs(&self, aligned: bool) -> Vec<Config> {
        let mut set = BTreeSet::new();
        for s in 0..self.top.slots.len() {
            let opts = self.options_vec(s);
            let offsets = if aligned { 0..1 } else { 0..self.top.unit_len };
            for o in offsets {
                set.insert((s as u16, o as u16, opts.clone()));
            }
        }
        set.into_iter().collect()
    }

    fn step_config(&self, cfg: &Config, a: u8) -> Option<Config> {
        let (s, o, compat) = cfg;
        let keep: Vec<u16> = compat
            .iter()
            .copied()
            .filter(|&u| self.top.units[u as usize][*o as usize] == a)
            .collect();
        if keep.is_empty() {
            return None;
        }
        if (*o as usize) + 1 < self.top.unit_len {
            Some((*s, o + 1, keep))
        } else {
            // the finished slot no longer constrains the future: the next
            // slot instance chooses its block independently
            let ns = (*s as usize + 1) % self.top.slots.len();
            Some((ns as u16, 0, self.options_vec(ns)))
        }
    }

    fn step_set(&self, set: &[Config], a: u8) -> Vec<Config> {
        let mut out = BTreeSet::new();
        for cfg in set {
            if let Some(next) = self.step_config(cfg, a) {
                out.insert(next);
            }
        }
        out.into_iter().collect()
    }
}

impl Subshift {
    /// The full shift on k symbols.
    pub fn full(k: u8) -> Result<Self> {
        if k < 2 {
            return Err(Error::InvalidArgument(format!("full shift needs k >= 2, got {k}")));
        }
        Ok(Subshift {
            alphabet: k,
            levels: vec![],
            top: TopLevel {
                unit_len: 1,
                units: (0..k).map(|s| vec![s]).collect(),
                slots: vec![Slot::Free((0..k as usize).collect())],
            },
            target: None,
        })
    }

    /// The one-point subshift of a constant sequence.
    pub fn constant(k: u8, symbol: u8) -> Self {
        assert!(symbol < k);
        Subshift {
            alphabet: k,
            levels: vec![],
            top: TopLevel { unit_len: 1, units: vec![vec![symbol]], slots: vec![Slot::Fixed(0)] },
            target: None,
        }
    }

    pub fn top_block_len(&self) -> usize {
        self.top.unit_len * self.top.slots.len()
    }

    /// Exact count of distinct length-n words in the language.
    pub fn word_count(&self, n: usize) -> Result<u128> {
        if n == 0 {
            return Ok(1);
        }
        if (self.alphabet as f64).ln() * n as f64 > MAX_COUNT_LEN as f64 * 2f64.ln() {
            return Err(Error::InvalidArgument(format!(
                "exact word count overflows u128 at length {n}"
            )));
        }
        let aut = Automaton { top: &self.top };
        let start = aut.start_configs(false);
        let mut index: HashMap<Vec<Config>, usize> = HashMap::new();
        let mut states: Vec<Vec<Config>> = vec![start.clone()];
        index.insert(start, 0);
        let mut trans: Vec<Vec<Option<usize>>> = vec![];
        let mut counts: HashMap<usize, u128> = HashMap::from([(0, 1u128)]);
        for _ in 0..n {
            let mut next: HashMap<usize, u128> = HashMap::new();
            for (&st, &c) in &counts {
                while trans.len() <= st {
                    trans.push(vec![]);
                }
                if trans[st].is_empty() {
                    let row: Vec<Option<usize>> = (0..self.alphabet)
                        .map(|a| {
                            let succ = aut.step_set(&states[st], a);
                            if succ.is_empty() {
                                None
                            } else if let Some(&i) = index.get(&succ) {
                                Some(i)
                            } else {
                                let i = states.len();
                                states.push(succ.clone());
                                index.insert(succ, i);
                                Some(i)
                            }
                        })
                        .collect();
                    trans[st] = row;
                }
                for t in trans[st].iter().flatten() {
                    *next.entry(*t).or_insert(0) += c;
                }
            }
            counts = next;
            if counts.is_empty() {
                return Ok(0);
            }
        }
        Ok(counts.values().sum())
    }

    /// Exact language membership for a finite window.
    pub fn contains_word(&self, w: &[u8]) -> bool {
        if w.is_empty() {
            return true;
        }
        if w.iter().any(|&a| a >= self.alphabet) {
            return false;
        }
        let aut = Automaton { top: &self.top };
        let mut set = aut.start_configs(false);
        for &a in w {
            set = aut.step_set(&set, a);
            if set.is_empty() {
                return false;
            }
        }
        true
    }

    /// All length-`len` words occurring at unit-aligned positions, in
    /// lexicographic order.
    pub fn aligned_words(&self, len: usize, cap: usize) -> Result<Vec<Vec<u8>>> {
        let aut = Automaton { top: &self.top };
        let mut frontier = vec![(Vec::new(), aut.start_configs(true))];
        for _ in 0..len {
            let mut next = Vec::new();
            for (w, set) in &frontier {
                for a in 0..self.alphabet {
                    let succ = aut.step_set(set, a);
                    if !succ.is_empty() {
                        let mut nw = w.clone();
                        nw.push(a);
                        next.push((nw, succ));
                    }
                }
            }
            if next.len() > cap {
                return Err(Error::InvalidArgument(format!(
                    "aligned word enumeration exceeds cap {cap}"
                )));
            }
            frontier = next;
        }
        Ok(frontier.into_iter().map(|(w, _)| w).collect())
    }

    /// log p(L) / L at the top block length L.
    pub fn measured_entropy(&self) -> Result<f64> {
        let l = self.top_block_len();
        let p = self.word_count(l)?;
        Ok((p as f64).ln() / l as f64)
    }

    /// A distinguished point of the subshift: periodic, with every free
    /// slot cycling through all of its options. Every admissible unit block
    /// therefore occurs syndetically.
    pub fn canonical_point(&self) -> SymbolSeq {
        let mut cyc = 1usize;
        for slot in &self.top.slots {
            cyc = lcm(cyc, slot.options().len());
        }
        let mut period = Vec::with_capacity(cyc * self.top_block_len());
        for rep in 0..cyc {
            for (si, slot) in self.top.slots.iter().enumerate() {
                let opts = slot.options();
                let pick = opts[(rep + si) % opts.len()];
                period.extend_from_slice(&self.top.units[pick]);
            }
        }
        SymbolSeq::from_window(period)
    }

    /// A random periodic point built from `blocks` top blocks.
    pub fn random_point<R: Rng>(&self, rng: &mut R, blocks: usize) -> SymbolSeq {
        let blocks = blocks.max(1);
        let mut period = Vec::with_capacity(blocks * self.top_block_len());
        for _ in 0..blocks {
            for slot in &self.top.slots {
                let opts = slot.options();
                let pick = opts[rng.gen_range(0..opts.len())];
                period.extend_from_slice(&self.top.units[pick]);
            }
        }
        // random phase: block-aligned samples all begin with the fixed
        // minimality prefix, so their futures agree for a whole block
        // length and forward orbits never separate
        let phase = rng.gen_range(0..period.len() as i64);
        SymbolSeq::with_phase(Arc::new(period), phase)
    }

    /// Up to `max` top blocks, enumerated as a mixed-radix counter over the
    /// free slots.
    pub fn sample_top_blocks(&self, max: usize) -> Vec<Vec<u8>> {
        let radices: Vec<usize> = self.top.slots.iter().map(|s| s.options().len()).collect();
        let total = radices.iter().fold(1usize, |acc, &r| acc.saturating_mul(r));
        let mut out = Vec::new();
        for t in 0..total.min(max) {
            let mut rest = t;
            let mut block = Vec::with_capacity(self.top_block_len());
            for (slot, &r) in self.top.slots.iter().zip(&radices) {
                block.extend_from_slice(&self.top.units[slot.options()[rest % r]]);
                rest /= r;
            }
            out.push(block);
        }
        out
    }

    /// Whether `w` occurs inside a single block of the generated block
    /// sets, scanned at the smallest level whose blocks can contain it.
    ///
    /// This is a block-set scan, not full language membership: words that
    /// arise only across the boundary of two adjacent blocks do not count.
    /// Avoidance works at this scale because excluding a window from the
    /// block sets excludes every point whose local pattern is that window.
    pub fn occurs_in_block_sets(&self, w: &[u8]) -> bool {
        if w.is_empty() {
            return true;
        }
        if w.iter().any(|&a| a >= self.alphabet) {
            return false;
        }
        for level in &self.levels {
            if level.block_len >= w.len() {
                return level.blocks.iter().any(|b| contains_sub(b, w));
            }
        }
        if self.top_block_len() >= w.len() {
            return (0..=self.top_block_len() - w.len())
                .any(|offset| self.top_block_scan(offset, w));
        }
        false
    }

    /// Whether `w` is exactly one of the (implicit) top blocks.
    pub fn is_top_block(&self, w: &[u8]) -> bool {
        w.len() == self.top_block_len()
            && !w.iter().any(|&a| a >= self.alphabet)
            && self.top_block_scan(0, w)
    }

    /// Matches `w` against a single top block starting at `offset`,
    /// without wrapping into the next block.
    fn top_block_scan(&self, offset: usize, w: &[u8]) -> bool {
        let mut slot = offset / self.top.unit_len;
        let mut off = offset % self.top.unit_len;
        let mut compat: Vec<usize> = self.top.slots[slot].options().to_vec();
        for (i, &a) in w.iter().enumerate() {
            compat.retain(|&u| self.top.units[u][off] == a);
            if compat.is_empty() {
                return false;
            }
            off += 1;
            if off == self.top.unit_len {
                slot += 1;
                off = 0;
                if slot == self.top.slots.len() {
                    // anything further would spill into the next block
                    return i + 1 == w.len();
                }
                compat = self.top.slots[slot].options().to_vec();
            }
        }
        true
    }

    /// Whether the top block sets of two subshifts are provably disjoint.
    ///
    /// Blocks of different lengths are disjoint as word sets. At equal
    /// lengths, a position whose possible symbols never intersect (the
    /// signature slots of schedules with different entropy bins) separates
    /// the sets.
    pub fn top_blocks_disjoint(&self, other: &Subshift) -> bool {
        let l = self.top_block_len();
        if l != other.top_block_len() {
            return true;
        }
        let cols_a = self.position_symbol_sets();
        let cols_b = other.position_symbol_sets();
        cols_a.iter().zip(&cols_b).any(|(a, b)| a & b == 0)
    }

    /// For each position of a top block, the bitmask of symbols that can
    /// appear there.
    fn position_symbol_sets(&self) -> Vec<u32> {
        let mut cols = vec![0u32; self.top_block_len()];
        for (si, slot) in self.top.slots.iter().enumerate() {
            for &u in slot.options() {
                for (o, &sym) in self.top.units[u].iter().enumerate() {
                    cols[si * self.top.unit_len + o] |= 1 << sym;
                }
            }
        }
        cols
    }
}

fn gcd(a: usize, b: usize) -> usize {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

fn lcm(a: usize, b: usize) -> usize {
    a / gcd(a, b) * b
}

fn contains_sub(hay: &[u8], needle: &[u8]) -> bool {
    hay.windows(needle.len()).any(|w| w == needle)
}

/// Greedy sequence of block indices whose concatenation contains every
/// block as a (not necessarily aligned) substring.
fn covering_sequence(blocks: &[Vec<u8>]) -> Vec<usize> {
    let mut chosen = vec![0usize];
    loop {
        let text: Vec<u8> = chosen.iter().flat_map(|&i| blocks[i].iter().copied()).collect();
        let uncovered: Vec<usize> =
            (0..blocks.len()).filter(|&i| !contains_sub(&text, &blocks[i])).collect();
        if uncovered.is_empty() {
            return chosen;
        }
        let mut best = (0usize, uncovered[0]);
        for &cand in &uncovered {
            let mut ext = text.clone();
            ext.extend_from_slice(&blocks[cand]);
            let gain = uncovered.iter().filter(|&&i| contains_sub(&ext, &blocks[i])).count();
            if gain > best.0 {
                best = (gain, cand);
            }
        }
        chosen.push(best.1);
    }
}

/// Signature digits for the entropy bin, base N.
fn sig_digits(bin: usize, n: usize) -> (usize, usize) {
    (bin % n, (bin / n) % n)
}

fn resolve_block(units: &[Vec<u8>], slots: &[Slot], mut choice: impl FnMut(usize, &[usize]) -> usize) -> Vec<u8> {
    let mut out = Vec::new();
    for (si, slot) in slots.iter().enumerate() {
        let opts = slot.options();
        out.extend_from_slice(&units[opts[choice(si, opts)]]);
    }
    out
}

/// Build the pattern for one level: signature, covering run for syndetic
/// occurrence of every lower block, `free` unrestricted slots, and one
/// slot restricted to the first `r` blocks.
fn level_slots(n_units: usize, cover: &[usize], bin: usize, free: usize, r: usize) -> Vec<Slot> {
    let (s0, s1) = sig_digits(bin, n_units);
    let all: Vec<usize> = (0..n_units).collect();
    let mut slots = vec![Slot::Fixed(s0), Slot::Fixed(s1)];
    slots.extend(cover.iter().map(|&i| Slot::Fixed(i)));
    slots.extend(std::iter::repeat_with(|| Slot::Free(all.clone())).take(free));
    slots.push(if r <= 1 { Slot::Fixed(0) } else { Slot::Free((0..r).collect()) });
    slots
}

/// A concrete middle level: one free and one two-way slot keep the block
/// set small enough to enumerate.
fn mid_level(units: &[Vec<u8>], bin: usize) -> (Vec<Slot>, Vec<Vec<u8>>) {
    let cover = covering_sequence(units);
    let r = 2.min(units.len());
    let slots = level_slots(units.len(), &cover, bin, 1, r);
    let mut blocks = Vec::with_capacity(units.len() * r);
    for a in 0..units.len() {
        for b in 0..r {
            blocks.push(resolve_block(units, &slots, |si, opts| {
                if opts.len() == units.len() {
                    a
                } else if si + 1 == slots.len() {
                    b
                } else {
                    0
                }
            }));
        }
    }
    blocks.sort();
    blocks.dedup();
    (slots, blocks)
}

/// All length-L1 binary words using both symbols.
fn level_one_blocks() -> Vec<Vec<u8>> {
    (1u8..(1 << L1) - 1)
        .map(|w| (0..L1).rev().map(|i| (w >> i) & 1).collect())
        .collect()
}

fn subshift_cache() -> &'static Mutex<HashMap<(u64, usize, u64), Subshift>> {
    static CACHE: OnceLock<Mutex<HashMap<(u64, usize, u64), Subshift>>> = OnceLock::new();
    CACHE.get_or_init(|| Mutex::new(HashMap::new()))
}

/// Entropy of the full shift on k symbols, cross-checked against exact
/// word counts p(n) = k^n.
pub fn full_shift_entropy(k: u8) -> Result<f64> {
    let sh = Subshift::full(k)?;
    for n in 1..=8usize {
        let expect = (k as u128).pow(n as u32);
        let got = sh.word_count(n)?;
        if got != expect {
            return Err(Error::InvalidArgument(format!(
                "full shift word count self-check failed: p({n}) = {got}, expected {expect}"
            )));
        }
    }
    Ok((k as f64).ln())
}

/// A subshift whose language has measured entropy log p(L)/L within `tol`
/// of `c` at the top block length L, built so that every admissible block
/// occurs syndetically.
///
/// `levels` counts the alphabet as level 0, so the minimum 3 means one
/// concrete block level plus the implicit top pattern. The schedule search
/// steers the number of free slots and the size of the final restricted
/// slot; if no schedule lands in the band, the error names the band this
/// construction can reach.
pub fn minimal_subshift_with_entropy(c: f64, levels: usize, tol: f64) -> Result<Subshift> {
    if !(tol > 0.0 && tol.is_finite()) {
        return Err(Error::InvalidArgument(format!("tolerance must be positive, got {tol}")));
    }
    if levels < 3 {
        return Err(Error::InvalidArgument(format!("need at least 3 levels, got {levels}")));
    }
    let max_c = 2f64.ln() - tol;
    if !(c > 0.0 && c < max_c) {
        return Err(Error::InvalidArgument(format!(
            "target entropy must lie in (0, {max_c:.4}), got {c}"
        )));
    }
    let key = (c.to_bits(), levels, tol.to_bits());
    if let Some(sh) = subshift_cache().lock().unwrap().get(&key) {
        return Ok(sh.clone());
    }

    let bin = (c / (2.0 * tol)).floor() as usize;
    let mut units = level_one_blocks();
    let mut level_specs = vec![LevelSpec { block_len: L1, blocks: units.clone() }];
    let mut unit_len = L1;
    for _ in 0..levels - 3 {
        let (slots, blocks) = mid_level(&units, bin);
        unit_len *= slots.len();
        level_specs.push(LevelSpec { block_len: unit_len, blocks: blocks.clone() });
        units = blocks;
    }

    let cover = covering_sequence(&units);
    let n_u = units.len();
    let fixed = 2 + cover.len();
    // predicted log p(L)/L: aligned choices plus one offset factor
    let mut cands: Vec<(f64, usize, usize, usize)> = Vec::new();
    for f in 1..=48usize {
        for r in 1..=n_u {
            let l = (fixed + f + 1) * unit_len;
            let pred = (f as f64 * (n_u as f64).ln() + (r as f64).ln() + (l as f64).ln()) / l as f64;
            cands.push((pred, f, r, l));
        }
    }
    let band_lo = cands.iter().map(|c| c.0).fold(f64::INFINITY, f64::min);
    let band_hi = cands.iter().map(|c| c.0).fold(0.0, f64::max);
    cands.sort_by(|a, b| (a.0 - c).abs().total_cmp(&(b.0 - c).abs()));

    let mut seen: Vec<f64> = Vec::new();
    for &(pred, f, r, l) in &cands {
        if (pred - c).abs() > tol + 0.08 {
            break; // sorted: everything after is further off
        }
        if l > MAX_COUNT_LEN {
            continue;
        }
        let slots = level_slots(n_u, &cover, bin, f, r);
        let aligned = (f as f64 * (n_u as f64).ln() + (r as f64).ln()) / l as f64;
        let sh = Subshift {
            alphabet: 2,
            levels: level_specs.clone(),
            top: TopLevel { unit_len, units: units.clone(), slots },
            target: Some(TargetBand { c, tol, aligned_density: aligned }),
        };
        let measured = sh.measured_entropy()?;
        seen.push(measured);
        if (measured - c).abs() <= tol {
            subshift_cache().lock().unwrap().insert(key, sh.clone());
            return Ok(sh);
        }
        if seen.len() >= 40 {
            break;
        }
    }
    let (lo, hi) = if seen.is_empty() {
        (band_lo, band_hi)
    } else {
        (seen.iter().copied().fold(f64::INFINITY, f64::min),
         seen.iter().copied().fold(0.0, f64::max))
    };
    Err(Error::SubshiftInfeasible {
        reason: format!("no {levels}-level schedule reaches entropy {c:.4} within {tol:.4}"),
        lo,
        hi,
    })
}

/// Check that every unit-aligned word of length `word_len` occurs in every
/// window of length `window` of the canonical point.
pub fn minimality_certificate(sh: &Subshift, word_len: usize, window: usize) -> Result<Certificate> {
    let limit = sh.canonical_point().period_len();
    if word_len == 0 || word_len > limit {
        return Err(Error::InvalidArgument(format!(
            "word length {word_len} outside 1..={limit}"
        )));
    }
    if window < word_len {
        return Err(Error::InvalidArgument(format!(
            "window {window} shorter than word length {word_len}"
        )));
    }
    let words = sh.aligned_words(word_len, 1_000_000)?;
    let point = sh.canonical_point();
    let period = point.period_len();
    let text = point.window(0, (period + word_len) as i64 - 2);
    let mut max_gap = 0usize;
    for w in &words {
        let occ: Vec<usize> =
            (0..period).filter(|&i| &text[i..i + word_len] == w.as_slice()).collect();
        if occ.is_empty() {
            return Ok(Certificate::Refuted { word: w.clone(), position: 0 });
        }
        // gaps between consecutive occurrence starts, periodically
        let mut worst = occ[0] + period - occ[occ.len() - 1];
        let mut worst_at = occ[occ.len() - 1];
        for pair in occ.windows(2) {
            if pair[1] - pair[0] > worst {
                worst = pair[1] - pair[0];
                worst_at = pair[0];
            }
        }
        if worst > window - word_len + 1 {
            return Ok(Certificate::Refuted { word: w.clone(), position: worst_at + 1 });
        }
        max_gap = max_gap.max(worst);
    }
    Ok(Certificate::Certified { max_gap })
}

/// First subshift over `targets` whose block sets exclude every forbidden
/// window. Membership is the exact scale-matched block-set scan of
/// [`Subshift::occurs_in_block_sets`]. Targets build with the default
/// 3-level schedule at tolerance 0.05.
pub fn choose_subshift_avoiding(forbidden: &[Vec<u8>], targets: &[f64]) -> Result<Subshift> {
    let mut report = Vec::new();
    for &c in targets {
        match minimal_subshift_with_entropy(c, 3, 0.05) {
            Ok(sh) => {
                if let Some(w) = forbidden.iter().find(|w| sh.occurs_in_block_sets(w)) {
                    report.push(format!(
                        "target {c}: block sets contain a forbidden window ({} symbols)",
                        w.len()
                    ));
                } else {
                    return Ok(sh);
                }
            }
            Err(e) => report.push(format!("target {c}: {e}")),
        }
    }
    Err(Error::AvoidanceExhausted(report.join("; ")))
}

impl Subshift {
    /// True when the periodic point `p` lies outside this subshift.
    ///
    /// If `p` were in the shift space, every finite window of it would
    /// be an admissible word, so a single inadmissible window certifies
    /// avoidance exactly (and covers every shift of `p`, since the shift
    /// space is shift-invariant).  The window is long enough to force a
    /// complete top-level block at some alignment; a generated block
    /// carries more distinct aligned subwords than a short-period point
    /// can produce, so the check resolves at this length in practice.
    /// A `false` only means avoidance was not certified at this depth.
    pub fn avoids_point(&self, p: &SymbolSeq) -> bool {
        let w = 2 * self.top_block_len() + p.period_len().max(8);
        !self.contains_word(&p.window(0, w as i64 - 1))
    }
}

/// First subshift over `targets` that provably contains none of the
/// given periodic points (nor any of their shifts).
pub fn choose_subshift_avoiding_points(points: &[SymbolSeq], targets: &[f64]) -> Result<Subshift> {
    let mut report = Vec::new();
    for &c in targets {
        match minimal_subshift_with_entropy(c, 3, 0.05) {
            Ok(sh) => {
                if let Some(i) = (0..points.len()).find(|&i| !sh.avoids_point(&points[i])) {
                    report.push(format!(
                        "target {c}: avoidance of point {i} (period {}) not certified",
                        points[i].period_len()
                    ));
                } else {
                    return Ok(sh);
                }
            }
            Err(e) => report.push(format!("target {c}: {e}")),
        }
    }
    Err(Error::AvoidanceExhausted(report.join("; ")))
}

const ENVELOPE_FORMAT: &str = "subshift.v1";

#[derive(Serialize, Deserialize)]
struct Envelope {
    format: String,
    subshift: Subshift,
}

pub fn to_envelope_json(sh: &Subshift) -> Result<String> {
    Ok(serde_json::to_string_pretty(&Envelope {
        format: ENVELOPE_FORMAT.into(),
        subshift: sh.clone(),
    })?)
}

pub fn from_envelope_json(s: &str) -> Result<Subshift> {
    let env: Envelope = serde_json::from_str(s)?;
    if env.format != ENVELOPE_FORMAT {
        return Err(Error::InvalidArgument(format!(
            "unsupported subshift format {:?}",
            env.format
        )));
    }
    Ok(env.subshift)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn full_shift_entropy_values() {
        assert!((full_shift_entropy(2).unwrap() - 2f64.ln()).abs() < 1e-12);
        assert!((full_shift_entropy(3).unwrap() - 3f64.ln()).abs() < 1e-12);
        assert!(Subshift::full(1).is_err());
    }

    #[test]
    fn full_shift_word_counts_are_powers() {
        let sh = Subshift::full(2).unwrap();
        for n in 0..12usize {
            assert_eq!(sh.word_count(n).unwrap(), 1u128 << n);
        }
    }

    #[test]
    fn constant_subshift_certificate() {
        let sh = Subshift::constant(2, 1);
        let cert = minimality_certificate(&sh, 1, 64).unwrap();
        assert_eq!(cert, Certificate::Certified { max_gap: 1 });
    }

    #[test]
    fn full_shift_certificate_refutes_double_zero() {
        let sh = Subshift::full(2).unwrap();
        match minimality_certificate(&sh, 2, 1000).unwrap() {
            Certificate::Refuted { word, .. } => assert_eq!(word, vec![0, 0]),
            other => panic!("expected refutation, got {other:?}"),
        }
    }

    #[test]
    fn generated_subshift_hits_band_and_certifies() {
        for &c in &[0.15f64, 0.30, 0.45] {
            let sh = minimal_subshift_with_entropy(c, 3, 0.05).unwrap();
            let measured = sh.measured_entropy().unwrap();
            assert!(
                (measured - c).abs() <= 0.05,
                "target {c}: measured {measured}"
            );
            let l_top = sh.top_block_len();
            let cert = minimality_certificate(&sh, L1, 3 * l_top).unwrap();
            match cert {
                Certificate::Certified { max_gap } => assert!(max_gap <= 2 * l_top),
                other => panic!("target {c}: {other:?}"),
            }
        }
    }

    #[test]
    fn boundary_targets_rejected() {
        assert!(minimal_subshift_with_entropy(0.0, 3, 0.05).is_err());
        assert!(minimal_subshift_with_entropy(0.7, 3, 0.05).is_err());
        assert!(minimal_subshift_with_entropy(0.2, 2, 0.05).is_err());
    }

    #[test]
    fn distinct_targets_have_disjoint_top_blocks() {
        let a = minimal_subshift_with_entropy(0.15, 3, 0.05).unwrap();
        let b = minimal_subshift_with_entropy(0.45, 3, 0.05).unwrap();
        assert!(a.top_blocks_disjoint(&b));
        // sampled blocks of one are never blocks of the other
        for blk in a.sample_top_blocks(16) {
            assert!(a.is_top_block(&blk));
            assert!(!b.is_top_block(&blk));
        }
        for blk in b.sample_top_blocks(16) {
            assert!(!a.is_top_block(&blk));
        }
    }

    #[test]
    fn level_one_excludes_constant_blocks() {
        let sh = minimal_subshift_with_entropy(0.3, 3, 0.05).unwrap();
        let b1 = &sh.levels[0].blocks;
        assert!(!b1.contains(&vec![0; L1]));
        assert!(!b1.contains(&vec![1; L1]));
    }

    #[test]
    fn avoidance_empty_forbidden_returns_first_target() {
        let sh = choose_subshift_avoiding(&[], &[0.3, 0.15]).unwrap();
        assert!((sh.target.as_ref().unwrap().c - 0.3).abs() < 1e-12);
    }

    #[test]
    fn avoidance_rejects_all_zero_window() {
        let sh = choose_subshift_avoiding(&[vec![0; L1]], &[0.3]).unwrap();
        assert!(!sh.occurs_in_block_sets(&[0; L1]));
        assert!(!sh.levels[0].blocks.contains(&vec![0; L1]));
    }

    #[test]
    fn avoidance_falls_through_to_third_target() {
        let a = minimal_subshift_with_entropy(0.15, 3, 0.05).unwrap();
        let b = minimal_subshift_with_entropy(0.45, 3, 0.05).unwrap();
        let mut forbidden = a.sample_top_blocks(2);
        forbidden.extend(b.sample_top_blocks(2));
        let sh = choose_subshift_avoiding(&forbidden, &[0.15, 0.45, 0.30]).unwrap();
        assert!((sh.target.as_ref().unwrap().c - 0.30).abs() < 1e-12);
    }

    #[test]
    fn canonical_point_windows_are_in_language() {
        let sh = minimal_subshift_with_entropy(0.3, 3, 0.05).unwrap();
        let p = sh.canonical_point();
        let l = sh.top_block_len() as i64;
        for start in [0i64, 7, 31, 101] {
            let w = p.window(start, start + l - 1);
            assert!(sh.contains_word(&w));
        }
    }

    #[test]
    fn certificate_gap_stable_under_window_doubling() {
        let sh = minimal_subshift_with_entropy(0.3, 3, 0.05).unwrap();
        let l = sh.top_block_len();
        let g1 = match minimality_certificate(&sh, L1, 3 * l).unwrap() {
            Certificate::Certified { max_gap } => max_gap,
            other => panic!("{other:?}"),
        };
        let g2 = match minimality_certificate(&sh, L1, 6 * l).unwrap() {
            Certificate::Certified { max_gap } => max_gap,
            other => panic!("{other:?}"),
        };
        assert_eq!(g1, g2);
    }

    #[test]
    fn word_counts_submultiplicative() {
        let sh = minimal_subshift_with_entropy(0.3, 3, 0.05).unwrap();
        let p: Vec<u128> = (0..=16).map(|n| sh.word_count(n).unwrap()).collect();
        for m in 1..=8usize {
            for n in 1..=8usize {
                assert!(p[m + n] <= p[m] * p[n], "p({})={} > p({})*p({})", m + n, p[m + n], m, n);
            }
        }
    }

    #[test]
    fn mid_level_measure_dominates_aligned_density() {
        // Fekete: log p(n)/n decreases to the entropy, which is at least
        // the aligned density of the top pattern
        let sh = minimal_subshift_with_entropy(0.3, 3, 0.05).unwrap();
        let aligned = sh.target.as_ref().unwrap().aligned_density;
        for &n in &[L1, 2 * L1, 4 * L1] {
            let m = (sh.word_count(n).unwrap() as f64).ln() / n as f64;
            assert!(m >= aligned - 1e-9);
            assert!(m <= 2f64.ln() + 1e-9);
        }
    }

    #[test]
    fn four_level_low_target_is_honest() {
        // deep schedules pay heavy fixed overhead; either the build lands
        // in the band or it reports the band it can reach
        match minimal_subshift_with_entropy(0.2, 4, 0.02) {
            Ok(sh) => {
                let m = sh.measured_entropy().unwrap();
                assert!((m - 0.2).abs() <= 0.02);
            }
            Err(Error::SubshiftInfeasible { lo, hi, .. }) => {
                assert!(hi < 0.18 || lo > 0.22, "band [{lo}, {hi}] should exclude the target");
            }
            Err(e) => panic!("unexpected error {e}"),
        }
    }

    #[test]
    fn envelope_round_trip() {
        let sh = minimal_subshift_with_entropy(0.15, 3, 0.05).unwrap();
        let json = to_envelope_json(&sh).unwrap();
        let back = from_envelope_json(&json).unwrap();
        assert_eq!(sh, back);
        assert!(from_envelope_json("{\"format\":\"other\",\"subshift\":null}").is_err());
    }

    #[test]
    fn random_points_are_in_language() {
        use rand::SeedableRng;
        let sh = minimal_subshift_with_entropy(0.3, 3, 0.05).unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        for _ in 0..5 {
            let p = sh.random_point(&mut rng, 3);
            let w = p.window(-20, 60);
            assert!(sh.contains_word(&w));
        }
    }

    #[test]
    fn point_avoidance_certifies_short_periods_only() {
        use rand::SeedableRng;
        let sh = minimal_subshift_with_entropy(0.3, 3, 0.05).unwrap();
        let p = SymbolSeq::from_window(vec![0, 0, 1, 1]);
        assert!(sh.avoids_point(&p));
        assert!(sh.avoids_point(&p.shifted(2)));
        // a point assembled from the subshift's own blocks is never avoided
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(4);
        let own = sh.random_point(&mut rng, 3);
        assert!(!sh.avoids_point(&own));
    }

    #[test]
    fn choose_avoiding_points_skips_contained_points() {
        use rand::SeedableRng;
        let sh = minimal_subshift_with_entropy(0.3, 3, 0.05).unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(9);
        let own = sh.random_point(&mut rng, 3);
        // first target regenerates the same subshift, which contains its
        // own point; a different target must be found or the call errors
        let got = choose_subshift_avoiding_points(&[own.clone()], &[0.3]);
        assert!(got.is_err());
        let chosen =
            choose_subshift_avoiding_points(&[SymbolSeq::from_window(vec![0, 1])], &[0.3]).unwrap();
        assert!(chosen.avoids_point(&SymbolSeq::from_window(vec![0, 1])));
    }
}
