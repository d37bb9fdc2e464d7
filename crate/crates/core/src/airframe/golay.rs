use crate::{Error, Result};

/// A binary Golay complementary pair in {0, 1} coding (`1` ↦ +1, `0` ↦ −1).
///
/// `g` drives the trigger; `companion` only exists so the complementary
/// property can be checked.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GolaySequence {
    pub g: Vec<u8>,
    pub companion: Vec<u8>,
}

impl GolaySequence {
    pub fn len(&self) -> usize {
        self.g.len()
    }

    pub fn is_empty(&self) -> bool {
        self.g.is_empty()
    }

    /// `2g − 1`
    pub fn bipolar(&self) -> Vec<i32> {
        self.g.iter().map(|&v| 2 * v as i32 - 1).collect()
    }

    pub fn companion_bipolar(&self) -> Vec<i32> {
        self.companion.iter().map(|&v| 2 * v as i32 - 1).collect()
    }
}

/// Recursive doubling `(a, b) -> (a‖b, a‖−b)` seeded with `([+1], [+1])`.
pub fn make_golay(length: usize) -> Result<GolaySequence> {
    if length < 2 || !length.is_power_of_two() {
        return Err(Error::param(format!("Golay length {length} is not a power of two >= 2")));
    }
    let mut a = vec![1i32];
    let mut b = vec![1i32];
    while a.len() < length {
        let mut na = a.clone();
        na.extend_from_slice(&b);
        let mut nb = a;
        nb.extend(b.iter().map(|v| -v));
        a = na;
        b = nb;
    }
    let to_bits = |v: &[i32]| v.iter().map(|&x| u8::from(x > 0)).collect();
    Ok(GolaySequence {
        g: to_bits(&a),
        companion: to_bits(&b),
    })
}

/// Aperiodic autocorrelation at lags `0..len`.
pub fn aperiodic_autocorrelation(x: &[i32]) -> Vec<i64> {
    (0..x.len())
        .map(|lag| {
            x.iter()
                .zip(&x[lag..])
                .map(|(a, b)| *a as i64 * *b as i64)
                .sum()
        })
        .collect()
}
