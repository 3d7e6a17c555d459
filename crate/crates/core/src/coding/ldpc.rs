//! Quasi-cyclic LDPC codes on the two NR base graphs: table loading, lifting,
//! systematic encoding and layered normalized min-sum decoding.

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use crate::error::{domain, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum BaseGraphId {
    Bg1,
    Bg2,
}

impl BaseGraphId {
    pub fn rows(self) -> usize {
        match self {
            BaseGraphId::Bg1 => 46,
            BaseGraphId::Bg2 => 42,
        }
    }

    pub fn cols(self) -> usize {
        match self {
            BaseGraphId::Bg1 => 68,
            BaseGraphId::Bg2 => 52,
        }
    }

    /// Systematic columns of the lifted code (K = info_cols * Z).
    pub fn info_cols(self) -> usize {
        self.cols() - self.rows()
    }

    /// Largest code block (payload plus CRC) accepted without segmentation.
    pub fn max_code_block(self) -> usize {
        match self {
            BaseGraphId::Bg1 => 8448,
            BaseGraphId::Bg2 => 3840,
        }
    }
}

/// Lifting sizes `Z = a * 2^j`: (a, largest j) for set indices 0..8.
pub const LIFTING_SETS: [(usize, u32); 8] = [(2, 7), (3, 7), (5, 6), (7, 5), (9, 5), (11, 5), (13, 4), (15, 4)];

pub const MAX_LIFTING_SIZE: usize = 384;

pub fn lifting_set_index(z: usize) -> Option<usize> {
    LIFTING_SETS
        .iter()
        .position(|&(a, jmax)| (0..=jmax).any(|j| a << j == z))
}

/// All 51 lifting sizes in increasing order.
pub fn lifting_sizes() -> Vec<usize> {
    let mut z: Vec<usize> = LIFTING_SETS
        .iter()
        .flat_map(|&(a, jmax)| (0..=jmax).map(move |j| a << j))
        .collect();
    z.sort_unstable();
    z
}

/// Base matrix: for every row the non-empty columns with their eight
/// per-set shift coefficients.
#[derive(Debug, Clone)]
pub struct BaseGraph {
    pub id: BaseGraphId,
    pub rows: Vec<Vec<(usize, [u16; 8])>>,
}

impl BaseGraph {
    pub fn num_entries(&self) -> usize {
        self.rows.iter().map(Vec::len).sum()
    }
}

/// Parses the plain-text base graph format: `#` comment lines, a header
/// `rows cols entries`, then one `row col v0 .. v7` line per non-empty entry.
pub fn parse_base_graph(id: BaseGraphId, text: &str) -> Result<BaseGraph> {
    let mut lines = text
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'));
    let parse_nums = |l: &str| -> Result<Vec<usize>> {
        l.split_whitespace()
            .map(|t| {
                t.parse::<usize>()
                    .map_err(|e| domain!("bad base graph token `{t}`: {e}"))
            })
            .collect()
    };
    let header = parse_nums(lines.next().ok_or_else(|| domain!("empty base graph file"))?)?;
    let [rows, cols, entries] = header[..] else {
        return Err(domain!("base graph header must be `rows cols entries`"));
    };
    if rows != id.rows() || cols != id.cols() {
        return Err(domain!("base graph {id:?} must be {}x{}", id.rows(), id.cols()));
    }
    let mut out = vec![Vec::new(); rows];
    let mut count = 0;
    for line in lines {
        let v = parse_nums(line)?;
        if v.len() != 10 || v[0] >= rows || v[1] >= cols {
            return Err(domain!("malformed base graph entry `{line}`"));
        }
        let mut shifts = [0u16; 8];
        for (s, &x) in shifts.iter_mut().zip(&v[2..]) {
            *s = x as u16;
        }
        out[v[0]].push((v[1], shifts));
        count += 1;
    }
    if count != entries {
        return Err(domain!("base graph lists {count} entries, header says {entries}"));
    }
    for row in &mut out {
        row.sort_by_key(|e| e.0);
    }
    Ok(BaseGraph { id, rows: out })
}

pub fn base_graph(id: BaseGraphId) -> &'static BaseGraph {
    static BG1: OnceLock<BaseGraph> = OnceLock::new();
    static BG2: OnceLock<BaseGraph> = OnceLock::new();
    match id {
        BaseGraphId::Bg1 => BG1
            .get_or_init(|| parse_base_graph(id, include_str!("../../data/ldpc_bg1.txt")).expect("bundled BG1 table")),
        BaseGraphId::Bg2 => BG2
            .get_or_init(|| parse_base_graph(id, include_str!("../../data/ldpc_bg2.txt")).expect("bundled BG2 table")),
    }
}

/// Dense GF(2) matrix with rows packed into 64-bit words.
#[derive(Debug, Clone)]
struct BitMatrix {
    n: usize,
    words: usize,
    data: Vec<u64>,
}

impl BitMatrix {
    fn zeros(n: usize) -> Self {
        let words = n.div_ceil(64);
        Self {
            n,
            words,
            data: vec![0; n * words],
        }
    }

    fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            m.flip(i, i);
        }
        m
    }

    fn row(&self, r: usize) -> &[u64] {
        &self.data[r * self.words..(r + 1) * self.words]
    }

    fn flip(&mut self, r: usize, c: usize) {
        self.data[r * self.words + c / 64] ^= 1 << (c % 64);
    }

    fn get(&self, r: usize, c: usize) -> bool {
        self.data[r * self.words + c / 64] >> (c % 64) & 1 == 1
    }

    fn swap_rows(&mut self, a: usize, b: usize) {
        if a != b {
            for w in 0..self.words {
                self.data.swap(a * self.words + w, b * self.words + w);
            }
        }
    }

    fn xor_row_into(&mut self, src: usize, dst: usize) {
        for w in 0..self.words {
            let v = self.data[src * self.words + w];
            self.data[dst * self.words + w] ^= v;
        }
    }

    fn inverse(mut self) -> Option<BitMatrix> {
        let n = self.n;
        let mut inv = BitMatrix::identity(n);
        for col in 0..n {
            let pivot = (col..n).find(|&r| self.get(r, col))?;
            self.swap_rows(pivot, col);
            inv.swap_rows(pivot, col);
            for r in 0..n {
                if r != col && self.get(r, col) {
                    self.xor_row_into(col, r);
                    inv.xor_row_into(col, r);
                }
            }
        }
        Some(inv)
    }

    fn mul_vec(&self, v: &[u64]) -> Vec<u8> {
        (0..self.n)
            .map(|r| {
                let ones: u32 = self.row(r).iter().zip(v).map(|(a, b)| (a & b).count_ones()).sum();
                (ones & 1) as u8
            })
            .collect()
    }
}

/// A base graph lifted by `z`.
#[derive(Debug)]
pub struct LdpcCode {
    pub bg: BaseGraphId,
    pub z: usize,
    /// Per base row: (column, shift mod z).
    pub rows: Vec<Vec<(usize, usize)>>,
    core_inv: BitMatrix,
}

impl LdpcCode {
    /// Shared, cached instance for `(bg, z)`.
    pub fn get(bg: BaseGraphId, z: usize) -> Result<Arc<LdpcCode>> {
        static CACHE: OnceLock<Mutex<HashMap<(BaseGraphId, usize), Arc<LdpcCode>>>> = OnceLock::new();
        let cache = CACHE.get_or_init(Default::default);
        if let Some(c) = cache.lock().expect("ldpc cache").get(&(bg, z)) {
            return Ok(c.clone());
        }
        let code = Arc::new(LdpcCode::build(bg, z)?);
        cache.lock().expect("ldpc cache").entry((bg, z)).or_insert(code.clone());
        Ok(code)
    }

    fn build(bg: BaseGraphId, z: usize) -> Result<Self> {
        let set = lifting_set_index(z).ok_or_else(|| domain!("{z} is not an LDPC lifting size"))?;
        let graph = base_graph(bg);
        let rows: Vec<Vec<(usize, usize)>> = graph
            .rows
            .iter()
            .map(|r| r.iter().map(|&(c, s)| (c, s[set] as usize % z)).collect())
            .collect();
        let kb = bg.info_cols();
        for (r, row) in rows.iter().enumerate().skip(4) {
            let ext: Vec<_> = row.iter().filter(|(c, _)| *c >= kb + 4).collect();
            if ext.len() != 1 || ext[0].0 != kb + r || ext[0].1 != 0 {
                return Err(domain!(
                    "base graph {bg:?} row {r} lacks the identity extension structure"
                ));
            }
        }
        let n = 4 * z;
        let mut core = BitMatrix::zeros(n);
        for (r, row) in rows.iter().take(4).enumerate() {
            for &(c, s) in row.iter().filter(|(c, _)| (kb..kb + 4).contains(c)) {
                for i in 0..z {
                    core.flip(r * z + i, (c - kb) * z + (i + s) % z);
                }
            }
        }
        let core_inv = core
            .inverse()
            .ok_or_else(|| domain!("core parity part of {bg:?} with Z={z} is singular"))?;
        Ok(Self { bg, z, rows, core_inv })
    }

    /// Information bits K = info_cols * Z.
    pub fn k(&self) -> usize {
        self.bg.info_cols() * self.z
    }

    /// Full codeword length including the two punctured systematic columns.
    pub fn n_full(&self) -> usize {
        self.bg.cols() * self.z
    }

    /// Transmitted codeword length N = (cols - 2) * Z.
    pub fn n(&self) -> usize {
        self.n_full() - 2 * self.z
    }

    fn row_product(&self, row: usize, word: &[u8], col_limit: usize, out: &mut [u8]) {
        let z = self.z;
        for &(c, s) in self.rows[row].iter().filter(|(c, _)| *c < col_limit) {
            let blk = &word[c * z..(c + 1) * z];
            for (i, o) in out.iter_mut().enumerate() {
                *o ^= blk[(i + s) % z];
            }
        }
    }

    /// Systematic encoding to the full `cols * Z` codeword.
    pub fn encode_full(&self, info: &[u8]) -> Result<Vec<u8>> {
        if info.len() != self.k() {
            return Err(domain!(
                "LDPC input has {} bits, {:?} with Z={} needs {}",
                info.len(),
                self.bg,
                self.z,
                self.k()
            ));
        }
        let z = self.z;
        let kb = self.bg.info_cols();
        let mut cw = vec![0u8; self.n_full()];
        for (d, &s) in cw.iter_mut().zip(info) {
            *d = s & 1;
        }
        let mut syn = vec![0u8; 4 * z];
        for r in 0..4 {
            self.row_product(r, &cw, kb, &mut syn[r * z..(r + 1) * z]);
        }
        let mut packed = vec![0u64; syn.len().div_ceil(64)];
        for (i, &b) in syn.iter().enumerate() {
            packed[i / 64] |= u64::from(b) << (i % 64);
        }
        let core = self.core_inv.mul_vec(&packed);
        cw[kb * z..(kb + 4) * z].copy_from_slice(&core);
        for r in 4..self.rows.len() {
            let mut p = vec![0u8; z];
            self.row_product(r, &cw, kb + 4, &mut p);
            cw[(kb + r) * z..(kb + r + 1) * z].copy_from_slice(&p);
        }
        Ok(cw)
    }

    /// Encoded bits with the first 2Z systematic bits punctured.
    pub fn encode(&self, info: &[u8]) -> Result<Vec<u8>> {
        let mut cw = self.encode_full(info)?;
        cw.drain(..2 * self.z);
        Ok(cw)
    }

    /// Number of unsatisfied parity checks of a full-length word.
    pub fn syndrome_weight(&self, word: &[u8]) -> usize {
        assert_eq!(word.len(), self.n_full(), "syndrome needs the full-length word");
        let mut s = vec![0u8; self.z];
        (0..self.rows.len())
            .map(|r| {
                s.fill(0);
                self.row_product(r, word, usize::MAX, &mut s);
                s.iter().filter(|&&b| b == 1).count()
            })
            .sum()
    }

    /// Layered normalized min-sum decoding of full-length channel LLRs
    /// (positive favours 0). Rows whose extension parity carries no
    /// information are skipped.
    pub fn decode_full(&self, llr: &[f32], max_iters: usize) -> LdpcOutput {
        assert_eq!(llr.len(), self.n_full(), "decoder needs full-length LLRs");
        let z = self.z;
        let kb = self.bg.info_cols();
        let active: Vec<usize> = (0..self.rows.len())
            .filter(|&r| r < 4 || llr[(kb + r) * z..(kb + r + 1) * z].iter().any(|&v| v != 0.0))
            .collect();
        let max_deg = active.iter().map(|&r| self.rows[r].len()).max().unwrap_or(0);
        let mut offsets = Vec::with_capacity(active.len());
        let mut total = 0;
        for &r in &active {
            offsets.push(total);
            total += self.rows[r].len() * z;
        }
        let mut msg = vec![0f32; total];
        let mut post = llr.to_vec();
        let mut t = vec![0f32; max_deg * z];
        let mut hard = vec![0u8; self.n_full()];
        let mut iterations = 0;
        let mut converged = false;

        for it in 0..max_iters {
            iterations = it + 1;
            for (li, &r) in active.iter().enumerate() {
                let row = &self.rows[r];
                let deg = row.len();
                let base = offsets[li];
                for (e, &(c, s)) in row.iter().enumerate() {
                    for i in 0..z {
                        let v = c * z + (i + s) % z;
                        t[e * z + i] = post[v] - msg[base + e * z + i];
                    }
                }
                for i in 0..z {
                    let mut min1 = f32::INFINITY;
                    let mut min2 = f32::INFINITY;
                    let mut arg = 0;
                    let mut sign = false;
                    for e in 0..deg {
                        let x = t[e * z + i];
                        sign ^= x < 0.0;
                        let a = x.abs();
                        if a < min1 {
                            min2 = min1;
                            min1 = a;
                            arg = e;
                        } else if a < min2 {
                            min2 = a;
                        }
                    }
                    for (e, &(c, s)) in row.iter().enumerate() {
                        let x = t[e * z + i];
                        let mag = NMS_SCALE * if e == arg { min2 } else { min1 };
                        let neg = sign ^ (x < 0.0);
                        let m = if neg { -mag } else { mag };
                        msg[base + e * z + i] = m;
                        post[c * z + (i + s) % z] = x + m;
                    }
                }
            }
            for (h, &p) in hard.iter_mut().zip(&post) {
                *h = u8::from(p < 0.0);
            }
            if self.active_syndrome_ok(&hard, &active) {
                converged = true;
                break;
            }
        }
        // a zero posterior carries no decision, so it cannot count as converged
        let decided = active
            .iter()
            .flat_map(|&r| self.rows[r].iter().map(|&(c, _)| c))
            .all(|c| post[c * z..(c + 1) * z].iter().all(|&p| p != 0.0));
        hard.truncate(self.k());
        LdpcOutput {
            bits: hard,
            converged: converged && decided,
            iterations,
        }
    }

    fn active_syndrome_ok(&self, word: &[u8], active: &[usize]) -> bool {
        let mut s = vec![0u8; self.z];
        active.iter().all(|&r| {
            s.fill(0);
            self.row_product(r, word, usize::MAX, &mut s);
            s.iter().all(|&b| b == 0)
        })
    }
}

pub const NMS_SCALE: f32 = 0.75;
pub const DEFAULT_MAX_ITERS: usize = 25;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LdpcOutput {
    /// Hard decisions on the K systematic bits.
    pub bits: Vec<u8>,
    pub converged: bool,
    pub iterations: usize,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tables_have_expected_shape() {
        assert_eq!(base_graph(BaseGraphId::Bg1).num_entries(), 316);
        assert_eq!(base_graph(BaseGraphId::Bg2).num_entries(), 197);
        assert_eq!(lifting_sizes().len(), 51);
        assert_eq!(lifting_sizes().last(), Some(&MAX_LIFTING_SIZE));
        assert_eq!(lifting_set_index(384), Some(1));
        assert_eq!(lifting_set_index(17), None);
    }

    #[test]
    fn every_lifting_size_has_invertible_core() {
        for bg in [BaseGraphId::Bg1, BaseGraphId::Bg2] {
            for z in lifting_sizes() {
                LdpcCode::get(bg, z).unwrap();
            }
        }
    }

    #[test]
    fn encoded_word_has_zero_syndrome() {
        for (bg, z) in [(BaseGraphId::Bg1, 13), (BaseGraphId::Bg2, 52), (BaseGraphId::Bg1, 384)] {
            let code = LdpcCode::get(bg, z).unwrap();
            let info: Vec<u8> = (0..code.k()).map(|i| ((i * 31 + 7) % 11 % 2) as u8).collect();
            let cw = code.encode_full(&info).unwrap();
            assert_eq!(code.syndrome_weight(&cw), 0);
            assert_eq!(&cw[..code.k()], &info[..]);
        }
    }

    #[test]
    fn zero_llrs_do_not_converge() {
        let code = LdpcCode::get(BaseGraphId::Bg2, 8).unwrap();
        let out = code.decode_full(&vec![0.0; code.n_full()], 5);
        assert!(!out.converged);
    }
}
