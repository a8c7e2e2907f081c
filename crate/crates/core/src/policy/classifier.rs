//! Sentence relatedness classifiers.
//!
//! Model file layout (all integers and scalars little-endian):
//!
//! ```text
//! magic      8 bytes  "MCDSMLP\0"
//! version    u32      1
//! width      u32      scalar width in bytes (4 or 8)
//! input      u32      input dimension
//! hidden     u32      hidden dimension
//! seed       u64      training seed
//! threshold  scalar
//! w1         input * hidden scalars, row-major (one row per input feature)
//! b1         hidden scalars
//! w2         hidden scalars
//! b2         scalar
//! ```

use super::{rule_related, Vocabulary};
use crate::scalar::Scalar;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::fs;
use std::io;
use std::path::Path;
use thiserror::Error;

pub const MODEL_MAGIC: &[u8; 8] = b"MCDSMLP\0";
pub const MODEL_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum ClassifierError {
    #[error("vector has length {found}, model expects {expected}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("model file: {0}")]
    Format(String),
    #[error("corpus line {line}: {message}")]
    Corpus { line: usize, message: String },
    #[error(transparent)]
    Io(#[from] io::Error),
}

pub enum Classifier<T: Scalar> {
    /// Related when the vector has a type hit and an operation hit.
    Rule,
    Mlp(Mlp<T>),
}

impl<T: Scalar> Classifier<T> {
    pub fn classify(&self, vector: &[u8], vocab: &Vocabulary) -> Result<bool, ClassifierError> {
        match self {
            Classifier::Rule => {
                if vector.len() != vocab.len() {
                    return Err(ClassifierError::DimensionMismatch {
                        expected: vocab.len(),
                        found: vector.len(),
                    });
                }
                Ok(rule_related(vector, vocab))
            }
            Classifier::Mlp(m) => m.classify(vector),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Classifier::Rule => "rule",
            Classifier::Mlp(_) => "mlp",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig<T> {
    pub hidden: usize,
    pub epochs: usize,
    pub batch: usize,
    pub learning_rate: T,
    pub threshold: T,
    pub seed: u64,
}

impl<T: Scalar> Default for TrainConfig<T> {
    fn default() -> Self {
        TrainConfig {
            hidden: 512,
            epochs: 30,
            batch: 16,
            learning_rate: T::from_f64_lossy(0.1),
            threshold: T::from_f64_lossy(0.5),
            seed: 7,
        }
    }
}

/// One hidden ReLU layer and a sigmoid output.
#[derive(Debug, Clone, PartialEq)]
pub struct Mlp<T> {
    pub input: usize,
    pub hidden: usize,
    pub seed: u64,
    pub threshold: T,
    /// `input x hidden`, row-major.
    pub w1: Vec<T>,
    pub b1: Vec<T>,
    pub w2: Vec<T>,
    pub b2: T,
}

fn sigmoid<T: Scalar>(z: T) -> T {
    T::one() / (T::one() + (-z).exp())
}

fn active(x: &[u8]) -> Vec<usize> {
    x.iter().enumerate().filter(|(_, &b)| b != 0).map(|(i, _)| i).collect()
}

impl<T: Scalar> Mlp<T> {
    fn hidden_pre(&self, act: &[usize]) -> Vec<T> {
        let mut h = self.b1.clone();
        for &i in act {
            let row = &self.w1[i * self.hidden..(i + 1) * self.hidden];
            for (hj, &w) in h.iter_mut().zip(row) {
                *hj = *hj + w;
            }
        }
        h
    }

    fn output(&self, pre: &[T]) -> T {
        let z = pre
            .iter()
            .zip(&self.w2)
            .fold(self.b2, |acc, (&p, &w)| acc + p.max(T::zero()) * w);
        sigmoid(z)
    }

    fn check(&self, x: &[u8]) -> Result<(), ClassifierError> {
        if x.len() != self.input {
            return Err(ClassifierError::DimensionMismatch {
                expected: self.input,
                found: x.len(),
            });
        }
        Ok(())
    }

    /// Sigmoid output for a binary input vector.
    pub fn predict(&self, x: &[u8]) -> Result<T, ClassifierError> {
        self.check(x)?;
        Ok(self.output(&self.hidden_pre(&active(x))))
    }

    pub fn classify(&self, x: &[u8]) -> Result<bool, ClassifierError> {
        Ok(self.predict(x)? >= self.threshold)
    }

    /// Mini-batch gradient descent on binary cross-entropy. Inputs are
    /// binary, so only the rows of active features are touched.
    pub fn train(data: &[(Vec<u8>, bool)], input: usize, cfg: &TrainConfig<T>) -> Result<Self, ClassifierError> {
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        let hidden = cfg.hidden.max(1);
        let limit = (6.0 / (input.max(1) as f64 + hidden as f64)).sqrt();
        let mut uniform = |scale: f64| T::from_f64_lossy(rng.gen_range(-scale..scale));
        let w1 = (0..input * hidden).map(|_| uniform(limit)).collect();
        let w2 = (0..hidden)
            .map(|_| uniform((6.0 / (hidden as f64 + 1.0)).sqrt()))
            .collect();
        let mut m = Mlp {
            input,
            hidden,
            seed: cfg.seed,
            threshold: cfg.threshold,
            w1,
            b1: vec![T::zero(); hidden],
            w2,
            b2: T::zero(),
        };
        let mut samples = Vec::with_capacity(data.len());
        for (x, y) in data {
            m.check(x)?;
            samples.push((active(x), if *y { T::one() } else { T::zero() }));
        }
        let mut order: Vec<usize> = (0..samples.len()).collect();
        let batch = cfg.batch.max(1);
        let mut g1: Vec<(usize, Vec<T>)> = Vec::new();
        let mut gb1 = vec![T::zero(); hidden];
        let mut gw2 = vec![T::zero(); hidden];
        for _ in 0..cfg.epochs {
            order.shuffle(&mut rng);
            for chunk in order.chunks(batch) {
                let scale = cfg.learning_rate / T::from_usize_lossy(chunk.len());
                g1.clear();
                gb1.iter_mut().for_each(|g| *g = T::zero());
                gw2.iter_mut().for_each(|g| *g = T::zero());
                let mut gb2 = T::zero();
                for &k in chunk {
                    let (act, y) = &samples[k];
                    let pre = m.hidden_pre(act);
                    let d = m.output(&pre) - *y;
                    gb2 = gb2 + d;
                    let mut dh = vec![T::zero(); hidden];
                    for j in 0..hidden {
                        if pre[j] > T::zero() {
                            gw2[j] = gw2[j] + d * pre[j];
                            dh[j] = d * m.w2[j];
                            gb1[j] = gb1[j] + dh[j];
                        }
                    }
                    for &i in act {
                        g1.push((i, dh.clone()));
                    }
                }
                for (i, dh) in &g1 {
                    let row = &mut m.w1[i * hidden..(i + 1) * hidden];
                    for (w, &g) in row.iter_mut().zip(dh) {
                        *w = *w - scale * g;
                    }
                }
                for j in 0..hidden {
                    m.b1[j] = m.b1[j] - scale * gb1[j];
                    m.w2[j] = m.w2[j] - scale * gw2[j];
                }
                m.b2 = m.b2 - scale * gb2;
            }
        }
        Ok(m)
    }

    pub fn accuracy(&self, data: &[(Vec<u8>, bool)]) -> Result<f64, ClassifierError> {
        if data.is_empty() {
            return Ok(0.0);
        }
        let mut ok = 0;
        for (x, y) in data {
            if self.classify(x)? == *y {
                ok += 1;
            }
        }
        Ok(ok as f64 / data.len() as f64)
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(40 + (self.w1.len() + 2 * self.hidden + 2) * T::WIDTH);
        out.extend_from_slice(MODEL_MAGIC);
        out.extend_from_slice(&MODEL_VERSION.to_le_bytes());
        out.extend_from_slice(&(T::WIDTH as u32).to_le_bytes());
        out.extend_from_slice(&(self.input as u32).to_le_bytes());
        out.extend_from_slice(&(self.hidden as u32).to_le_bytes());
        out.extend_from_slice(&self.seed.to_le_bytes());
        self.threshold.write_le(&mut out);
        for block in [&self.w1, &self.b1, &self.w2] {
            for &v in block {
                v.write_le(&mut out);
            }
        }
        self.b2.write_le(&mut out);
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self, ClassifierError> {
        let bad = |m: &str| ClassifierError::Format(m.to_string());
        if bytes.len() < 32 || &bytes[..8] != MODEL_MAGIC {
            return Err(bad("missing header"));
        }
        let u32_at = |o: usize| u32::from_le_bytes(bytes[o..o + 4].try_into().expect("4 bytes")) as usize;
        if u32_at(8) != MODEL_VERSION as usize {
            return Err(bad("unsupported version"));
        }
        if u32_at(12) != T::WIDTH {
            return Err(bad("scalar width differs from the requested type"));
        }
        let (input, hidden) = (u32_at(16), u32_at(20));
        let seed = u64::from_le_bytes(bytes[24..32].try_into().expect("8 bytes"));
        let count = input
            .checked_mul(hidden)
            .and_then(|n| n.checked_add(2 * hidden + 2))
            .ok_or_else(|| bad("dimensions overflow"))?;
        if bytes.len() != 32 + count * T::WIDTH {
            return Err(bad("length does not match dimensions"));
        }
        let mut vals = bytes[32..].chunks_exact(T::WIDTH).map(T::read_le);
        let mut take = |n: usize| -> Vec<T> { vals.by_ref().take(n).collect() };
        let threshold = take(1)[0];
        let w1 = take(input * hidden);
        let b1 = take(hidden);
        let w2 = take(hidden);
        let b2 = take(1)[0];
        Ok(Mlp {
            input,
            hidden,
            seed,
            threshold,
            w1,
            b1,
            w2,
            b2,
        })
    }

    pub fn save(&self, path: &Path) -> Result<(), ClassifierError> {
        fs::write(path, self.to_bytes())?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self, ClassifierError> {
        Self::from_bytes(&fs::read(path)?)
    }
}

/// Parses `label<TAB>sentence` lines; labels are `1`/`0` or `related`/`unrelated`.
pub fn read_corpus(body: &str) -> Result<Vec<(bool, String)>, ClassifierError> {
    let mut out = Vec::new();
    for (i, line) in body.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let err = |m: &str| ClassifierError::Corpus {
            line: i + 1,
            message: m.to_string(),
        };
        let (label, sentence) = line.split_once('\t').ok_or_else(|| err("missing tab"))?;
        let y = match label.trim() {
            "1" | "related" => true,
            "0" | "unrelated" => false,
            _ => return Err(err("label must be 1 or 0")),
        };
        out.push((y, sentence.to_string()));
    }
    Ok(out)
}

pub fn write_corpus(rows: &[(bool, String)]) -> String {
    let mut out = String::new();
    for (y, s) in rows {
        out.push(if *y { '1' } else { '0' });
        out.push('\t');
        out.push_str(&s.replace(['\t', '\n'], " "));
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn xor_like() -> Vec<(Vec<u8>, bool)> {
        // related iff one of {0,1} and one of {2,3} are set
        let mut out = Vec::new();
        for mask in 0u8..64 {
            let x: Vec<u8> = (0..6).map(|i| (mask >> i) & 1).collect();
            let y = (x[0] | x[1]) == 1 && (x[2] | x[3]) == 1;
            out.push((x, y));
        }
        out
    }

    #[test]
    fn learns_conjunction() {
        let data = xor_like();
        let cfg = TrainConfig::<f64> {
            hidden: 16,
            epochs: 400,
            batch: 8,
            ..TrainConfig::default()
        };
        let m = Mlp::train(&data, 6, &cfg).unwrap();
        assert_eq!(m.accuracy(&data).unwrap(), 1.0);
        let m2 = Mlp::train(&data, 6, &cfg).unwrap();
        assert_eq!(m, m2);
    }

    #[test]
    fn model_bytes_roundtrip() {
        let cfg = TrainConfig::<f32> {
            hidden: 4,
            epochs: 2,
            ..TrainConfig::default()
        };
        let m = Mlp::<f32>::train(&xor_like(), 6, &cfg).unwrap();
        let bytes = m.to_bytes();
        assert_eq!(&bytes[..8], MODEL_MAGIC);
        assert_eq!(bytes.len(), 32 + (6 * 4 + 2 * 4 + 2) * 4);
        let back = Mlp::<f32>::from_bytes(&bytes).unwrap();
        assert_eq!(back.to_bytes(), bytes);
        assert!(Mlp::<f64>::from_bytes(&bytes).is_err());
        assert!(Mlp::<f32>::from_bytes(&bytes[..bytes.len() - 1]).is_err());
    }

    #[test]
    fn dimension_mismatch() {
        let m = Mlp::<f64>::train(
            &[],
            3,
            &TrainConfig {
                hidden: 2,
                ..TrainConfig::default()
            },
        )
        .unwrap();
        assert!(matches!(
            m.classify(&[1, 0]),
            Err(ClassifierError::DimensionMismatch { expected: 3, found: 2 })
        ));
    }

    #[test]
    fn corpus_format() {
        let rows = read_corpus("1\tWe collect your location.\n0\tHello there.\n\n").unwrap();
        assert_eq!(
            rows,
            vec![
                (true, "We collect your location.".into()),
                (false, "Hello there.".into())
            ]
        );
        assert_eq!(write_corpus(&rows), "1\tWe collect your location.\n0\tHello there.\n");
        assert!(read_corpus("yes\tx").is_err());
        assert!(read_corpus("1 x").is_err());
    }
}
