use crate::scalar::Scalar;
use crate::text::{self, TokenKind};
use serde::Serialize;
use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Overlap,
    Cosine,
    Euclidean,
    Dice,
}

impl Method {
    pub const ALL: [Method; 4] = [Method::Overlap, Method::Cosine, Method::Euclidean, Method::Dice];

    pub fn as_str(self) -> &'static str {
        match self {
            Method::Overlap => "overlap",
            Method::Cosine => "cosine",
            Method::Euclidean => "euclidean",
            Method::Dice => "dice",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Method {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        Method::ALL
            .into_iter()
            .find(|m| m.as_str().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| format!("unknown similarity method {s:?}"))
    }
}

/// Comparison unit. `Auto` compares characters when either side contains
/// CJK text and word tokens otherwise.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Unit {
    #[default]
    Auto,
    Token,
    Character,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SimilarityConfig<T> {
    pub method: Method,
    pub threshold: T,
    pub unit: Unit,
}

impl<T: Scalar> Default for SimilarityConfig<T> {
    fn default() -> Self {
        SimilarityConfig {
            method: Method::Overlap,
            threshold: T::one(),
            unit: Unit::Auto,
        }
    }
}

impl<T: Scalar> SimilarityConfig<T> {
    /// Fails unless `threshold` lies in `[0, 1]`.
    pub fn new(method: Method, threshold: T, unit: Unit) -> Result<Self, SimilarityError> {
        if !(threshold >= T::zero() && threshold <= T::one()) {
            return Err(SimilarityError::Threshold(threshold.to_f64().unwrap_or(f64::NAN)));
        }
        Ok(SimilarityConfig {
            method,
            threshold,
            unit,
        })
    }

    pub fn accepts(&self, score: T) -> bool {
        score >= self.threshold
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SimilarityError {
    #[error("similarity of an empty string")]
    EmptyInput,
    #[error("threshold {0} outside [0, 1]")]
    Threshold(f64),
}

fn units(s: &str, unit: Unit) -> BTreeMap<String, usize> {
    let mut m = BTreeMap::new();
    match unit {
        Unit::Character => {
            for c in text::normalize(s).chars().filter(|c| c.is_alphanumeric()) {
                *m.entry(c.to_string()).or_insert(0) += 1;
            }
        }
        _ => {
            for t in text::tokenize(s).into_iter().filter(|t| t.kind != TokenKind::Punct) {
                *m.entry(t.text).or_insert(0) += 1;
            }
        }
    }
    m
}

/// Similarity of two words over unit multisets, in `[0, 1]`.
///
/// Overlap is `|A∩B| / min(|A|,|B|)`, Dice `2|A∩B| / (|A|+|B|)`, Cosine the
/// cosine of the count vectors and Euclidean `1 / (1 + d)` for the distance
/// `d` between the count vectors.
pub fn similarity<T: Scalar>(a: &str, b: &str, cfg: &SimilarityConfig<T>) -> Result<T, SimilarityError> {
    let unit = match cfg.unit {
        Unit::Auto if text::contains_cjk(a) || text::contains_cjk(b) => Unit::Character,
        Unit::Auto => Unit::Token,
        u => u,
    };
    let (ua, ub) = (units(a, unit), units(b, unit));
    if ua.is_empty() || ub.is_empty() {
        return Err(SimilarityError::EmptyInput);
    }
    let size = |m: &BTreeMap<String, usize>| m.values().sum::<usize>();
    let (na, nb) = (size(&ua), size(&ub));
    let inter: usize = ua.iter().filter_map(|(k, &x)| ub.get(k).map(|&y| x.min(y))).sum();
    let f = T::from_usize_lossy;
    let score = match cfg.method {
        Method::Overlap => f(inter) / f(na.min(nb)),
        Method::Dice => f(2 * inter) / f(na + nb),
        Method::Cosine => {
            let dot: usize = ua.iter().filter_map(|(k, &x)| ub.get(k).map(|&y| x * y)).sum();
            let sq = |m: &BTreeMap<String, usize>| m.values().map(|v| v * v).sum::<usize>();
            // sqrt of the product keeps identical inputs exactly at 1
            f(dot) / (f(sq(&ua)) * f(sq(&ub))).sqrt()
        }
        Method::Euclidean => {
            let mut d2 = 0usize;
            for k in ua.keys().chain(ub.keys().filter(|k| !ua.contains_key(*k))) {
                let x = ua.get(k).copied().unwrap_or(0);
                let y = ub.get(k).copied().unwrap_or(0);
                d2 += x.abs_diff(y).pow(2);
            }
            T::one() / (T::one() + f(d2).sqrt())
        }
    };
    Ok(score.min(T::one()).max(T::zero()))
}
