//! Binary checkpoints of learner state.
//!
//! Layout (all little-endian), version 1:
//!
//! ```text
//! magic   b"WQCK"
//! version u16
//! step    u64            global step count
//! rng     seed [u8;32], stream u64, word_pos u128
//! nclass  u32
//! per class:
//!   d        u32
//!   schedule u8 tag (0 = decreasing, 1 = constant) + two f64 gains
//!            + gate u64 (decreasing only)
//!   q        2*d*d f64   raw bits, slice-major
//!   lambda   d f64
//!   nu       2*d u64
//! ```
//!
//! Floats are stored as raw bits, so a save/load round trip reproduces the
//! learner exactly. Decoding is length-checked throughout and never panics
//! on malformed input.

use crate::learner::QwiLearner;
use crate::model::ArmModel;
use crate::schedule::StepSchedule;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha12Rng;
use std::io::{Read, Write};
use std::path::Path;
use thiserror::Error;

const MAGIC: [u8; 4] = *b"WQCK";
const VERSION: u16 = 1;
/// Upper bounds on decoded shapes; reject absurd sizes before allocating.
const MAX_D: u32 = 4096;
const MAX_CLASSES: u32 = 1024;

#[derive(Debug, Error)]
pub enum CheckpointError {
    #[error("not a checkpoint file (bad magic)")]
    BadMagic,

    #[error("unsupported checkpoint version {0}")]
    UnsupportedVersion(u16),

    #[error("truncated checkpoint: needed {needed} more bytes for {what}")]
    Truncated { what: &'static str, needed: usize },

    #[error("corrupt checkpoint: {0}")]
    Corrupt(String),

    #[error("checkpoint does not fit the model: {0}")]
    Mismatch(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Exactly reconstructible RNG position.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RngSnapshot {
    pub seed: [u8; 32],
    pub stream: u64,
    pub word_pos: u128,
}

impl RngSnapshot {
    pub fn capture(rng: &ChaCha12Rng) -> Self {
        Self {
            seed: rng.get_seed(),
            stream: rng.get_stream(),
            word_pos: rng.get_word_pos(),
        }
    }

    pub fn restore(&self) -> ChaCha12Rng {
        let mut rng = ChaCha12Rng::from_seed(self.seed);
        rng.set_stream(self.stream);
        rng.set_word_pos(self.word_pos);
        rng
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClassState {
    pub d: usize,
    pub schedule: StepSchedule,
    pub q: Vec<f64>,
    pub lambda: Vec<f64>,
    pub nu: Vec<u64>,
}

impl ClassState {
    pub fn of(learner: &QwiLearner) -> Self {
        Self {
            d: learner.d(),
            schedule: *learner.schedule(),
            q: learner.q_raw().to_vec(),
            lambda: learner.lambda().to_vec(),
            nu: learner.clocks().to_vec(),
        }
    }

    /// Rebuilds the learner against its arm model.
    pub fn into_learner(self, model: &ArmModel) -> Result<QwiLearner, CheckpointError> {
        if model.d() != self.d {
            return Err(CheckpointError::Mismatch(format!(
                "model has {} states, checkpoint class has {}",
                model.d(),
                self.d
            )));
        }
        QwiLearner::from_parts(model, self.schedule, self.q, self.lambda, self.nu)
            .map_err(|e| CheckpointError::Mismatch(e.to_string()))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub global_step: u64,
    pub rng: RngSnapshot,
    pub classes: Vec<ClassState>,
}

impl Checkpoint {
    pub fn encode(&self) -> Vec<u8> {
        let mut out = Vec::new();
        out.extend_from_slice(&MAGIC);
        out.extend_from_slice(&VERSION.to_le_bytes());
        out.extend_from_slice(&self.global_step.to_le_bytes());
        out.extend_from_slice(&self.rng.seed);
        out.extend_from_slice(&self.rng.stream.to_le_bytes());
        out.extend_from_slice(&self.rng.word_pos.to_le_bytes());
        out.extend_from_slice(&(self.classes.len() as u32).to_le_bytes());
        for c in &self.classes {
            out.extend_from_slice(&(c.d as u32).to_le_bytes());
            match c.schedule {
                StepSchedule::Decreasing {
                    fast_gain,
                    slow_gain,
                    gate,
                } => {
                    out.push(0);
                    out.extend_from_slice(&fast_gain.to_bits().to_le_bytes());
                    out.extend_from_slice(&slow_gain.to_bits().to_le_bytes());
                    out.extend_from_slice(&gate.to_le_bytes());
                }
                StepSchedule::Constant { a, b } => {
                    out.push(1);
                    out.extend_from_slice(&a.to_bits().to_le_bytes());
                    out.extend_from_slice(&b.to_bits().to_le_bytes());
                }
            }
            for &v in &c.q {
                out.extend_from_slice(&v.to_bits().to_le_bytes());
            }
            for &v in &c.lambda {
                out.extend_from_slice(&v.to_bits().to_le_bytes());
            }
            for &v in &c.nu {
                out.extend_from_slice(&v.to_le_bytes());
            }
        }
        out
    }

    pub fn decode(bytes: &[u8]) -> Result<Self, CheckpointError> {
        let mut r = Reader { buf: bytes, pos: 0 };
        if r.take(4, "magic")? != MAGIC {
            return Err(CheckpointError::BadMagic);
        }
        let version = r.u16("version")?;
        if version != VERSION {
            return Err(CheckpointError::UnsupportedVersion(version));
        }
        let global_step = r.u64("step")?;
        let mut seed = [0u8; 32];
        seed.copy_from_slice(r.take(32, "rng seed")?);
        let stream = r.u64("rng stream")?;
        let word_pos = r.u128("rng word position")?;
        let n_classes = r.u32("class count")?;
        if n_classes == 0 || n_classes > MAX_CLASSES {
            return Err(CheckpointError::Corrupt(format!(
                "class count {n_classes} outside 1..={MAX_CLASSES}"
            )));
        }
        let mut classes = Vec::with_capacity(n_classes as usize);
        for _ in 0..n_classes {
            let d32 = r.u32("class state count")?;
            if d32 == 0 || d32 > MAX_D {
                return Err(CheckpointError::Corrupt(format!(
                    "state count {d32} outside 1..={MAX_D}"
                )));
            }
            let d = d32 as usize;
            let schedule = match r.u8("schedule tag")? {
                0 => StepSchedule::Decreasing {
                    fast_gain: r.f64("fast gain")?,
                    slow_gain: r.f64("slow gain")?,
                    gate: r.u64("gate")?,
                },
                1 => StepSchedule::Constant {
                    a: r.f64("constant a")?,
                    b: r.f64("constant b")?,
                },
                t => {
                    return Err(CheckpointError::Corrupt(format!(
                        "unknown schedule tag {t}"
                    )))
                }
            };
            let q = r.f64_vec(2 * d * d, "q table")?;
            let lambda = r.f64_vec(d, "lambda")?;
            let nu = r.u64_vec(2 * d, "clocks")?;
            classes.push(ClassState {
                d,
                schedule,
                q,
                lambda,
                nu,
            });
        }
        if r.pos != bytes.len() {
            return Err(CheckpointError::Corrupt(format!(
                "{} trailing bytes",
                bytes.len() - r.pos
            )));
        }
        Ok(Self {
            global_step,
            rng: RngSnapshot {
                seed,
                stream,
                word_pos,
            },
            classes,
        })
    }

    pub fn save(&self, path: &Path) -> Result<(), CheckpointError> {
        let mut file = std::fs::File::create(path)?;
        file.write_all(&self.encode())?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self, CheckpointError> {
        let mut bytes = Vec::new();
        std::fs::File::open(path)?.read_to_end(&mut bytes)?;
        Self::decode(&bytes)
    }
}

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize, what: &'static str) -> Result<&'a [u8], CheckpointError> {
        if self.buf.len() - self.pos < n {
            return Err(CheckpointError::Truncated {
                what,
                needed: n - (self.buf.len() - self.pos),
            });
        }
        let s = &self.buf[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    fn u8(&mut self, what: &'static str) -> Result<u8, CheckpointError> {
        Ok(self.take(1, what)?[0])
    }

    fn u16(&mut self, what: &'static str) -> Result<u16, CheckpointError> {
        Ok(u16::from_le_bytes(self.take(2, what)?.try_into().unwrap()))
    }

    fn u32(&mut self, what: &'static str) -> Result<u32, CheckpointError> {
        Ok(u32::from_le_bytes(self.take(4, what)?.try_into().unwrap()))
    }

    fn u64(&mut self, what: &'static str) -> Result<u64, CheckpointError> {
        Ok(u64::from_le_bytes(self.take(8, what)?.try_into().unwrap()))
    }

    fn u128(&mut self, what: &'static str) -> Result<u128, CheckpointError> {
        Ok(u128::from_le_bytes(self.take(16, what)?.try_into().unwrap()))
    }

    fn f64(&mut self, what: &'static str) -> Result<f64, CheckpointError> {
        Ok(f64::from_bits(self.u64(what)?))
    }

    fn f64_vec(&mut self, n: usize, what: &'static str) -> Result<Vec<f64>, CheckpointError> {
        let mut v = Vec::with_capacity(n);
        for _ in 0..n {
            v.push(self.f64(what)?);
        }
        Ok(v)
    }

    fn u64_vec(&mut self, n: usize, what: &'static str) -> Result<Vec<u64>, CheckpointError> {
        let mut v = Vec::with_capacity(n);
        for _ in 0..n {
            v.push(self.u64(what)?);
        }
        Ok(v)
    }
}
