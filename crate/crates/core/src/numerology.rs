//! Time/frequency structure: numerologies, carriers, bandwidth parts, slot
//! formats, and the resource grid that every channel maps into.

use std::collections::BTreeSet;
use std::fmt;

use crate::error::{domain, Error, Result};
use crate::Cplx;

pub const SUBCARRIERS_PER_RB: usize = 12;
pub const SYMBOLS_PER_SLOT: usize = 14;
pub const MAX_SUBCARRIERS: usize = 3300;
pub const SUBFRAMES_PER_FRAME: usize = 10;
pub const MAX_MU: u8 = 4;

/// Basic time unit T_c = 1 / (480 kHz * 4096), in seconds.
pub const TC_SECONDS: f64 = 1.0 / (480_000.0 * 4096.0);
/// Ratio between T_s (LTE basic time unit) and T_c.
pub const KAPPA: u64 = 64;
/// One millisecond expressed in T_c.
pub const SUBFRAME_TC: u64 = 1_966_080;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Numerology {
    pub mu: u8,
    pub scs_khz: u32,
    pub slots_per_subframe: usize,
    pub symbols_per_slot: usize,
    /// Nominal cyclic prefix length (4.7 us scaled by 2^-mu).
    pub cp_us: f64,
}

/// Numerology for index `mu` (subcarrier spacing 15 kHz * 2^mu).
pub fn numerology_params(mu: u8) -> Result<Numerology> {
    if mu > MAX_MU {
        return Err(domain!("numerology index {mu} outside 0..={MAX_MU}"));
    }
    let scale = 1u32 << mu;
    Ok(Numerology {
        mu,
        scs_khz: 15 * scale,
        slots_per_subframe: scale as usize,
        symbols_per_slot: SYMBOLS_PER_SLOT,
        cp_us: 4.7 / f64::from(scale),
    })
}

impl Numerology {
    pub fn new(mu: u8) -> Result<Self> {
        numerology_params(mu)
    }

    /// Looks up the numerology with the given subcarrier spacing.
    pub fn from_scs_khz(scs_khz: u32) -> Result<Self> {
        (0..=MAX_MU)
            .map(|mu| numerology_params(mu).expect("mu in range"))
            .find(|n| n.scs_khz == scs_khz)
            .ok_or_else(|| domain!("no numerology with subcarrier spacing {scs_khz} kHz"))
    }

    pub fn scs_hz(&self) -> f64 {
        f64::from(self.scs_khz) * 1e3
    }

    pub fn symbols_per_subframe(&self) -> usize {
        self.slots_per_subframe * self.symbols_per_slot
    }

    pub fn slots_per_frame(&self) -> usize {
        self.slots_per_subframe * SUBFRAMES_PER_FRAME
    }

    /// Useful (FFT) part of an OFDM symbol in T_c: 2048 * kappa * 2^-mu.
    pub fn symbol_len_tc(&self) -> u64 {
        (2048 * KAPPA) >> self.mu
    }

    /// Cyclic prefix of symbol `l` (counted from the start of a subframe) in T_c.
    ///
    /// The first symbol of every half-subframe (every 0.5 ms) carries 16 kappa
    /// extra so that a subframe lasts exactly 1 ms.
    pub fn cp_len_tc(&self, l_in_subframe: usize) -> u64 {
        let half = 7usize << self.mu;
        let extra = if l_in_subframe.is_multiple_of(half) {
            16 * KAPPA
        } else {
            0
        };
        ((144 * KAPPA) >> self.mu) + extra
    }

    pub fn symbol_duration_tc(&self, l_in_subframe: usize) -> u64 {
        self.symbol_len_tc() + self.cp_len_tc(l_in_subframe)
    }

    /// Sum of all symbol durations of one subframe, in T_c.
    pub fn subframe_duration_tc(&self) -> u64 {
        (0..self.symbols_per_subframe())
            .map(|l| self.symbol_duration_tc(l))
            .sum()
    }

    /// Nominal symbol duration `1/scs + cp_us` in seconds.
    pub fn nominal_symbol_duration_s(&self) -> f64 {
        1.0 / self.scs_hz() + self.cp_us * 1e-6
    }

    /// Frame duration from per-symbol accounting, in seconds.
    pub fn frame_duration_s(&self) -> f64 {
        (self.subframe_duration_tc() * SUBFRAMES_PER_FRAME as u64) as f64 * TC_SECONDS
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FrequencyRange {
    Fr1,
    Fr2,
}

impl FrequencyRange {
    pub fn low_mhz(self) -> f64 {
        match self {
            FrequencyRange::Fr1 => 450.0,
            FrequencyRange::Fr2 => 24_250.0,
        }
    }

    pub fn high_mhz(self) -> f64 {
        match self {
            FrequencyRange::Fr1 => 6_000.0,
            FrequencyRange::Fr2 => 52_600.0,
        }
    }

    pub fn max_carrier_bw_mhz(self) -> f64 {
        match self {
            FrequencyRange::Fr1 => 100.0,
            FrequencyRange::Fr2 => 400.0,
        }
    }

    pub fn contains_mhz(self, f: f64) -> bool {
        (self.low_mhz()..=self.high_mhz()).contains(&f)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum CarrierViolation {
    NoResourceBlocks,
    TooManySubcarriers { subcarriers: usize },
    BandwidthExceeded { occupied_mhz: f64, limit_mhz: f64 },
}

impl fmt::Display for CarrierViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CarrierViolation::NoResourceBlocks => write!(f, "carrier has no resource blocks"),
            CarrierViolation::TooManySubcarriers { subcarriers } => {
                write!(f, "{subcarriers} subcarriers exceed the {MAX_SUBCARRIERS} limit")
            }
            CarrierViolation::BandwidthExceeded {
                occupied_mhz,
                limit_mhz,
            } => write!(f, "occupied bandwidth {occupied_mhz} MHz exceeds {limit_mhz} MHz"),
        }
    }
}

/// Checks a carrier of `num_rb` resource blocks against the subcarrier cap and
/// the frequency-range bandwidth cap. Occupied bandwidth is `12 * num_rb * scs`.
pub fn validate_carrier(num_rb: usize, numerology: &Numerology, fr: FrequencyRange) -> Vec<CarrierViolation> {
    let mut out = Vec::new();
    if num_rb == 0 {
        out.push(CarrierViolation::NoResourceBlocks);
        return out;
    }
    let subcarriers = num_rb * SUBCARRIERS_PER_RB;
    if subcarriers > MAX_SUBCARRIERS {
        out.push(CarrierViolation::TooManySubcarriers { subcarriers });
    }
    let occupied_mhz = subcarriers as f64 * f64::from(numerology.scs_khz) / 1e3;
    if occupied_mhz > fr.max_carrier_bw_mhz() {
        out.push(CarrierViolation::BandwidthExceeded {
            occupied_mhz,
            limit_mhz: fr.max_carrier_bw_mhz(),
        });
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SymbolDirection {
    Downlink,
    Uplink,
    Flexible,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum LinkDirection {
    Downlink,
    Uplink,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SlotFormat {
    directions: [SymbolDirection; SYMBOLS_PER_SLOT],
}

impl Default for SlotFormat {
    /// Unconfigured slots treat every symbol as flexible.
    fn default() -> Self {
        Self {
            directions: [SymbolDirection::Flexible; SYMBOLS_PER_SLOT],
        }
    }
}

impl SlotFormat {
    pub fn new(directions: &[SymbolDirection]) -> Result<Self> {
        let directions: [SymbolDirection; SYMBOLS_PER_SLOT] = directions
            .try_into()
            .map_err(|_| domain!("slot format needs {SYMBOLS_PER_SLOT} entries, got {}", directions.len()))?;
        Ok(Self { directions })
    }

    /// Parses a 14-character pattern of `D`, `U` and `F`.
    pub fn parse(pattern: &str) -> Result<Self> {
        let dirs = pattern
            .chars()
            .map(|c| match c.to_ascii_uppercase() {
                'D' => Ok(SymbolDirection::Downlink),
                'U' => Ok(SymbolDirection::Uplink),
                'F' => Ok(SymbolDirection::Flexible),
                other => Err(domain!("invalid slot format symbol `{other}`")),
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(&dirs)
    }

    pub fn directions(&self) -> &[SymbolDirection] {
        &self.directions
    }
}

/// Whether a transmission in `direction` may use symbol `symbol_idx`.
pub fn classify_symbol(slot_format: &SlotFormat, symbol_idx: usize, direction: LinkDirection) -> Result<bool> {
    let entry = slot_format
        .directions
        .get(symbol_idx)
        .ok_or_else(|| domain!("symbol index {symbol_idx} outside slot of {SYMBOLS_PER_SLOT}"))?;
    Ok(matches!(
        (entry, direction),
        (SymbolDirection::Flexible, _)
            | (SymbolDirection::Downlink, LinkDirection::Downlink)
            | (SymbolDirection::Uplink, LinkDirection::Uplink)
    ))
}

pub const MAX_BWP_PER_DIRECTION: usize = 4;

#[derive(Debug, Clone, PartialEq)]
pub struct BandwidthPart {
    pub id: u8,
    pub start_rb: usize,
    pub num_rb: usize,
    pub numerology: Numerology,
    pub direction: LinkDirection,
}

/// A single carrier with its configured bandwidth parts. At most one part per
/// direction is active; activating another one replaces it.
#[derive(Debug, Clone)]
pub struct Carrier {
    pub num_rb: usize,
    bwps: Vec<BandwidthPart>,
    active_dl: Option<u8>,
    active_ul: Option<u8>,
}

impl Carrier {
    pub fn new(num_rb: usize) -> Self {
        Self {
            num_rb,
            bwps: Vec::new(),
            active_dl: None,
            active_ul: None,
        }
    }

    pub fn add_bwp(&mut self, bwp: BandwidthPart) -> Result<()> {
        if bwp.id as usize >= MAX_BWP_PER_DIRECTION {
            return Err(domain!("bandwidth part id {} outside 0..=3", bwp.id));
        }
        if bwp.num_rb == 0 || bwp.start_rb + bwp.num_rb > self.num_rb {
            return Err(domain!(
                "bandwidth part [{}, {}) does not fit a {}-RB carrier",
                bwp.start_rb,
                bwp.start_rb + bwp.num_rb,
                self.num_rb
            ));
        }
        let same_dir = self.bwps.iter().filter(|b| b.direction == bwp.direction);
        if same_dir.clone().any(|b| b.id == bwp.id) {
            return Err(domain!("bandwidth part id {} already configured", bwp.id));
        }
        if same_dir.count() >= MAX_BWP_PER_DIRECTION {
            return Err(domain!("at most {MAX_BWP_PER_DIRECTION} bandwidth parts per direction"));
        }
        self.bwps.push(bwp);
        Ok(())
    }

    pub fn configured(&self, direction: LinkDirection) -> impl Iterator<Item = &BandwidthPart> {
        self.bwps.iter().filter(move |b| b.direction == direction)
    }

    pub fn activate(&mut self, direction: LinkDirection, id: u8) -> Result<()> {
        if !self.configured(direction).any(|b| b.id == id) {
            return Err(domain!("bandwidth part {id} not configured for {direction:?}"));
        }
        match direction {
            LinkDirection::Downlink => self.active_dl = Some(id),
            LinkDirection::Uplink => self.active_ul = Some(id),
        }
        Ok(())
    }

    pub fn active(&self, direction: LinkDirection) -> Option<&BandwidthPart> {
        let id = match direction {
            LinkDirection::Downlink => self.active_dl,
            LinkDirection::Uplink => self.active_ul,
        }?;
        self.configured(direction).find(|b| b.id == id)
    }
}

/// One resource element. Field order makes the derived ordering time-major,
/// so iterating a [`ReSet`] visits frequency first, then time.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Re {
    pub symbol: usize,
    pub subcarrier: usize,
}

impl Re {
    pub fn new(subcarrier: usize, symbol: usize) -> Self {
        Self { symbol, subcarrier }
    }
}

pub type ReSet = BTreeSet<Re>;

/// A contiguous time/frequency allocation. A slot-based allocation starts at
/// symbol 0; a mini-slot allocation may start anywhere inside the slot.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Allocation {
    pub start_rb: usize,
    pub num_rb: usize,
    pub start_symbol: usize,
    pub num_symbols: usize,
}

impl Allocation {
    pub fn new(start_rb: usize, num_rb: usize, start_symbol: usize, num_symbols: usize) -> Self {
        Self {
            start_rb,
            num_rb,
            start_symbol,
            num_symbols,
        }
    }

    pub fn validate(&self, grid_rb: usize, grid_symbols: usize) -> Result<()> {
        if self.num_rb == 0 || self.num_symbols == 0 {
            return Err(domain!("empty allocation {self:?}"));
        }
        if self.start_rb + self.num_rb > grid_rb || self.start_symbol + self.num_symbols > grid_symbols {
            return Err(domain!(
                "allocation {self:?} exceeds grid of {grid_rb} RBs x {grid_symbols} symbols"
            ));
        }
        Ok(())
    }

    pub fn symbols(&self) -> std::ops::Range<usize> {
        self.start_symbol..self.start_symbol + self.num_symbols
    }

    pub fn subcarriers(&self) -> std::ops::Range<usize> {
        self.start_rb * SUBCARRIERS_PER_RB..(self.start_rb + self.num_rb) * SUBCARRIERS_PER_RB
    }

    pub fn res(&self) -> ReSet {
        self.symbols()
            .flat_map(|l| self.subcarriers().map(move |k| Re::new(k, l)))
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReservedGranularity {
    RbSymbol,
    Re,
}

/// Resources that a shared channel must map around. RB/symbol entries remove
/// all 12 REs of the block; RE entries remove single elements.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ReservedPattern {
    pub rb_symbols: BTreeSet<(usize, usize)>,
    pub res: ReSet,
}

impl ReservedPattern {
    pub fn rb_symbol_level(entries: impl IntoIterator<Item = (usize, usize)>) -> Self {
        Self {
            rb_symbols: entries.into_iter().collect(),
            res: ReSet::new(),
        }
    }

    pub fn re_level(entries: impl IntoIterator<Item = Re>) -> Self {
        Self {
            rb_symbols: BTreeSet::new(),
            res: entries.into_iter().collect(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.rb_symbols.is_empty() && self.res.is_empty()
    }

    pub fn granularities(&self) -> Vec<ReservedGranularity> {
        let mut g = Vec::new();
        if !self.rb_symbols.is_empty() {
            g.push(ReservedGranularity::RbSymbol);
        }
        if !self.res.is_empty() {
            g.push(ReservedGranularity::Re);
        }
        g
    }

    pub fn merge(&mut self, other: &ReservedPattern) {
        self.rb_symbols.extend(other.rb_symbols.iter().copied());
        self.res.extend(other.res.iter().copied());
    }

    pub fn covers(&self, re: Re) -> bool {
        self.res.contains(&re)
            || self
                .rb_symbols
                .contains(&(re.subcarrier / SUBCARRIERS_PER_RB, re.symbol))
    }

    pub fn validate(&self, num_rb: usize, num_symbols: usize) -> Result<()> {
        let rb_ok = self.rb_symbols.iter().all(|&(rb, l)| rb < num_rb && l < num_symbols);
        let re_ok = self
            .res
            .iter()
            .all(|re| re.subcarrier < num_rb * SUBCARRIERS_PER_RB && re.symbol < num_symbols);
        if rb_ok && re_ok {
            Ok(())
        } else {
            Err(domain!(
                "reserved pattern exceeds grid of {num_rb} RBs x {num_symbols} symbols"
            ))
        }
    }
}

/// `alloc` minus everything covered by `pattern`.
pub fn apply_reserved(alloc: &ReSet, pattern: &ReservedPattern) -> ReSet {
    alloc.iter().copied().filter(|re| !pattern.covers(*re)).collect()
}

/// Complex resource grid for one or more antenna ports, with a per-RE record
/// of which channel wrote it.
#[derive(Debug, Clone)]
pub struct ResourceGrid {
    num_ports: usize,
    num_subcarriers: usize,
    num_symbols: usize,
    values: Vec<Cplx>,
    // 0 = free, otherwise index + 1 into `tags`
    occupancy: Vec<u16>,
    tags: Vec<String>,
}

impl ResourceGrid {
    pub fn new(num_ports: usize, num_rb: usize, num_symbols: usize) -> Result<Self> {
        let num_subcarriers = num_rb * SUBCARRIERS_PER_RB;
        if num_ports == 0 || num_rb == 0 || num_symbols == 0 {
            return Err(domain!("grid dimensions must be non-zero"));
        }
        if num_subcarriers > MAX_SUBCARRIERS {
            return Err(domain!(
                "{num_subcarriers} subcarriers exceed the {MAX_SUBCARRIERS} carrier limit"
            ));
        }
        let n = num_ports * num_subcarriers * num_symbols;
        Ok(Self {
            num_ports,
            num_subcarriers,
            num_symbols,
            values: vec![Cplx::new(0.0, 0.0); n],
            occupancy: vec![0; n],
            tags: Vec::new(),
        })
    }

    pub fn num_ports(&self) -> usize {
        self.num_ports
    }

    pub fn num_subcarriers(&self) -> usize {
        self.num_subcarriers
    }

    pub fn num_rb(&self) -> usize {
        self.num_subcarriers / SUBCARRIERS_PER_RB
    }

    pub fn num_symbols(&self) -> usize {
        self.num_symbols
    }

    fn index(&self, port: usize, subcarrier: usize, symbol: usize) -> Result<usize> {
        if port >= self.num_ports || subcarrier >= self.num_subcarriers || symbol >= self.num_symbols {
            return Err(domain!(
                "RE (port {port}, subcarrier {subcarrier}, symbol {symbol}) outside grid \
                 {}x{}x{}",
                self.num_ports,
                self.num_subcarriers,
                self.num_symbols
            ));
        }
        Ok((port * self.num_symbols + symbol) * self.num_subcarriers + subcarrier)
    }

    fn tag_id(&mut self, tag: &str) -> u16 {
        match self.tags.iter().position(|t| t == tag) {
            Some(i) => i as u16 + 1,
            None => {
                self.tags.push(tag.to_owned());
                self.tags.len() as u16
            }
        }
    }

    /// Writes `(subcarrier, symbol, value)` triples on `port` under `tag`.
    ///
    /// Nothing is written if any coordinate is out of range or any RE is
    /// already owned by a different tag.
    pub fn map_res(&mut self, port: usize, res: &[(usize, usize, Cplx)], tag: &str) -> Result<()> {
        let id = self.tag_id(tag);
        let mut idx = Vec::with_capacity(res.len());
        for &(k, l, _) in res {
            let i = self.index(port, k, l)?;
            let owner = self.occupancy[i];
            if owner != 0 && owner != id {
                return Err(Error::Collision {
                    port,
                    subcarrier: k,
                    symbol: l,
                    existing: self.tags[owner as usize - 1].clone(),
                    incoming: tag.to_owned(),
                });
            }
            idx.push(i);
        }
        for (i, &(_, _, v)) in idx.into_iter().zip(res) {
            self.values[i] = v;
            self.occupancy[i] = id;
        }
        Ok(())
    }

    pub fn get(&self, port: usize, subcarrier: usize, symbol: usize) -> Result<Cplx> {
        Ok(self.values[self.index(port, subcarrier, symbol)?])
    }

    pub fn tag_at(&self, port: usize, subcarrier: usize, symbol: usize) -> Result<Option<&str>> {
        let owner = self.occupancy[self.index(port, subcarrier, symbol)?];
        Ok((owner != 0).then(|| self.tags[owner as usize - 1].as_str()))
    }

    pub fn occupied_count(&self) -> usize {
        self.occupancy.iter().filter(|&&o| o != 0).count()
    }

    /// All subcarriers of one symbol on one port.
    pub fn symbol(&self, port: usize, symbol: usize) -> &[Cplx] {
        let start = (port * self.num_symbols + symbol) * self.num_subcarriers;
        &self.values[start..start + self.num_subcarriers]
    }

    /// Mutable access bypassing occupancy tracking, for receivers and channels.
    pub fn symbol_mut(&mut self, port: usize, symbol: usize) -> &mut [Cplx] {
        let start = (port * self.num_symbols + symbol) * self.num_subcarriers;
        &mut self.values[start..start + self.num_subcarriers]
    }

    /// Copy of one port as `[symbol][subcarrier]`.
    pub fn to_rows(&self, port: usize) -> Vec<Vec<Cplx>> {
        (0..self.num_symbols).map(|l| self.symbol(port, l).to_vec()).collect()
    }

    pub fn energy(&self) -> f64 {
        self.values.iter().map(|v| v.norm_sqr()).sum()
    }
}
