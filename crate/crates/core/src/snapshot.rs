//! Versioned binary snapshot of a [`DynamicKde`].
//!
//! Layout, all integers and floats little-endian:
//!
//! ```text
//! magic "DKDESNAP" | version u32
//! kernel tag u8 | bandwidth f64 | epsilon f64 | f_kde f64 | seed u64 | update counter u64
//! config: C f64, beta f64, gamma f64, width factor f64, max levels u32,
//!         max repetitions u64, median blocks u64, boost f64
//! n u64 | d u64 | n*d coordinates f64
//! K1 u64 | R u32
//! per group, per level: member count u64, members u32..., entry count u64,
//!                       entries (table u32, key u64, index u32)...
//! per group: tail count u64, tail u32...
//! ```
//!
//! Hash atoms are not stored; they are redrawn from the seed on load and every
//! stored bucket entry is checked against them.

use std::io::{Read, Write};

use crate::config::KdeConfig;
use crate::error::{KdeError, Result};
use crate::kde::{DynamicKde, EstimatorGroup, LevelSample};
use crate::kernel::{KernelKind, KernelSpec};
use crate::lsh::LshTable;
use crate::points::PointSet;
use crate::rng::{self, Stream};
use crate::schedule::LevelSchedule;

pub const MAGIC: &[u8; 8] = b"DKDESNAP";
pub const VERSION: u32 = 1;

pub fn to_bytes(kde: &DynamicKde) -> Vec<u8> {
    let mut w = Writer(Vec::new());
    w.bytes(MAGIC);
    w.u32(VERSION);
    w.0.push(kde.kernel.kind().tag());
    w.f64(kde.kernel.bandwidth());
    w.f64(kde.epsilon);
    w.f64(kde.f_kde);
    w.u64(kde.seed);
    w.u64(kde.update_counter);
    let c = &kde.config;
    w.f64(c.group_constant);
    w.f64(c.repetition_constant);
    w.f64(c.slack);
    w.f64(c.bucket_width_factor);
    w.u32(c.max_levels);
    w.u64(c.max_repetitions as u64);
    w.u64(c.median_blocks as u64);
    w.f64(c.boost_constant);
    w.u64(kde.n() as u64);
    w.u64(kde.dim() as u64);
    for &x in kde.dataset.as_flat() {
        w.f64(x);
    }
    w.u64(kde.groups.len() as u64);
    w.u32(kde.schedule.levels());
    for g in &kde.groups {
        for level in &g.levels {
            w.indices(&level.members);
            w.u64(level.table.len() as u64 * level.table.params().repetitions as u64);
            for (l, key, i) in level.table.entries() {
                w.u32(l);
                w.u64(key);
                w.u32(i);
            }
        }
        w.indices(&g.tail);
    }
    w.0
}

pub fn save<W: Write>(kde: &DynamicKde, mut writer: W) -> Result<()> {
    writer.write_all(&to_bytes(kde))?;
    writer.flush()?;
    Ok(())
}

pub fn load<R: Read>(mut reader: R) -> Result<DynamicKde> {
    let mut buf = Vec::new();
    reader.read_to_end(&mut buf)?;
    from_bytes(&buf)
}

pub fn from_bytes(bytes: &[u8]) -> Result<DynamicKde> {
    let mut r = Reader { buf: bytes, pos: 0 };
    if r.take(8)? != MAGIC {
        return snap_err("bad magic header");
    }
    let version = r.u32()?;
    if version != VERSION {
        return snap_err(format!("unsupported version {version}"));
    }
    let kind = KernelKind::from_tag(r.u8()?).ok_or_else(|| KdeError::Snapshot("unknown kernel tag".into()))?;
    let kernel = KernelSpec::new(kind, r.f64()?)?;
    let epsilon = r.f64()?;
    let f_kde = r.f64()?;
    let seed = r.u64()?;
    let update_counter = r.u64()?;
    let config = KdeConfig {
        group_constant: r.f64()?,
        repetition_constant: r.f64()?,
        slack: r.f64()?,
        bucket_width_factor: r.f64()?,
        max_levels: r.u32()?,
        max_repetitions: r.len()?,
        median_blocks: r.len()?,
        boost_constant: r.f64()?,
    };
    config.validate()?;
    crate::kde::validate_inputs(epsilon, f_kde)?;
    let n = r.len()?;
    let d = r.len()?;
    if n == 0 || d == 0 || n > u32::MAX as usize {
        return snap_err("bad dataset shape");
    }
    let total = n.checked_mul(d).filter(|&t| t <= r.remaining() / 8);
    let Some(total) = total else {
        return snap_err("truncated dataset");
    };
    let coords = (0..total).map(|_| r.f64()).collect::<Result<Vec<_>>>()?;
    let dataset = PointSet::from_flat(d, coords)?;
    let schedule = LevelSchedule::build(&kernel, n, f_kde, &config)?;
    let group_count = r.len()?;
    if group_count == 0 {
        return snap_err("no estimator groups");
    }
    let levels = r.u32()?;
    if levels != schedule.levels() {
        return snap_err(format!("stored level count {levels} disagrees with schedule {}", schedule.levels()));
    }
    let mut groups = Vec::with_capacity(group_count.min(r.remaining()));
    for a in 0..group_count as u64 {
        let mut samples = Vec::with_capacity(levels as usize);
        for lvl in 1..=levels {
            let members = r.indices(n)?;
            let count = r.len()?;
            if count > r.remaining() / 16 {
                return snap_err("truncated bucket entries");
            }
            let mut entries = Vec::with_capacity(count);
            for _ in 0..count {
                entries.push((r.u32()?, r.u64()?, r.u32()?));
            }
            let table = LshTable::from_entries(
                d,
                schedule.lsh_params(lvl),
                rng::derive(seed, Stream::HashAtom, &[a, lvl as u64]),
                entries,
            )?;
            if table.len() != members.len() {
                return snap_err("table size disagrees with member count");
            }
            for &i in &members {
                table.verify_stored(dataset.get(i as usize), i as usize)?;
            }
            samples.push(LevelSample { members, table });
        }
        let tail = r.indices(n)?;
        groups.push(EstimatorGroup { levels: samples, tail });
    }
    if r.remaining() != 0 {
        return snap_err("trailing bytes");
    }
    Ok(DynamicKde {
        kernel,
        epsilon,
        f_kde,
        seed,
        config,
        schedule,
        dataset,
        groups,
        update_counter,
    })
}

fn snap_err<T>(msg: impl Into<String>) -> Result<T> {
    Err(KdeError::Snapshot(msg.into()))
}

struct Writer(Vec<u8>);

impl Writer {
    fn bytes(&mut self, b: &[u8]) {
        self.0.extend_from_slice(b);
    }
    fn u32(&mut self, v: u32) {
        self.bytes(&v.to_le_bytes());
    }
    fn u64(&mut self, v: u64) {
        self.bytes(&v.to_le_bytes());
    }
    fn f64(&mut self, v: f64) {
        self.bytes(&v.to_le_bytes());
    }
    fn indices(&mut self, v: &[u32]) {
        self.u64(v.len() as u64);
        for &i in v {
            self.u32(i);
        }
    }
}

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn remaining(&self) -> usize {
        self.buf.len() - self.pos
    }

    fn take(&mut self, k: usize) -> Result<&'a [u8]> {
        if self.remaining() < k {
            return snap_err("unexpected end of snapshot");
        }
        let s = &self.buf[self.pos..self.pos + k];
        self.pos += k;
        Ok(s)
    }

    fn u8(&mut self) -> Result<u8> {
        Ok(self.take(1)?[0])
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn len(&mut self) -> Result<usize> {
        usize::try_from(self.u64()?).map_err(|_| KdeError::Snapshot("length overflows usize".into()))
    }

    /// Strictly ascending indices below `n`.
    fn indices(&mut self, n: usize) -> Result<Vec<u32>> {
        let count = self.len()?;
        if count > self.remaining() / 4 {
            return snap_err("truncated index list");
        }
        let v = (0..count).map(|_| self.u32()).collect::<Result<Vec<_>>>()?;
        if v.windows(2).any(|w| w[0] >= w[1]) || v.last().is_some_and(|&i| i as usize >= n) {
            return snap_err("index list not ascending or out of range");
        }
        Ok(v)
    }
}
