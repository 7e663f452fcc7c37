// SPDX-License-Identifier: Apache-2.0

//! Ensemble generators. Sequence `t` draws from `stream.child(t)`.

use rand::Rng;

use super::{Ensemble, EnsembleMeta, Sequence};
use crate::{CoreError, Scalar, SeedStream};

/// Exact game values of `maj(c_1..c_r)` for uniform coins.
///
/// `value(i, ones)` is `Pr[maj = 1 | ones of the first i coins are 1]`; for even
/// `r` a tie counts as one half.
#[derive(Clone, Debug)]
pub struct MajorityDoob {
    r: usize,
    /// `tail[m][k] = Pr[Bin(m, 1/2) ≥ k]` for `k ≤ m + 1`.
    tail: Vec<Vec<f64>>,
}

impl MajorityDoob {
    pub fn new(r: usize) -> Self {
        let mut pmf = vec![1.0f64];
        let mut tail = Vec::with_capacity(r + 1);
        for m in 0..=r {
            if m > 0 {
                let mut next = vec![0.0; m + 1];
                for (k, &v) in pmf.iter().enumerate() {
                    next[k] += v / 2.0;
                    next[k + 1] += v / 2.0;
                }
                pmf = next;
            }
            let mut t = vec![0.0; m + 2];
            for k in (0..=m).rev() {
                t[k] = t[k + 1] + pmf[k];
            }
            tail.push(t);
        }
        Self { r, tail }
    }

    pub fn r(&self) -> usize {
        self.r
    }

    fn at_least(&self, m: usize, k: i64) -> f64 {
        if k <= 0 {
            1.0
        } else if k as usize > m {
            0.0
        } else {
            self.tail[m][k as usize]
        }
    }

    pub fn value(&self, i: usize, ones: usize) -> f64 {
        assert!(i <= self.r && ones <= i);
        let m = self.r - i;
        let need = (self.r / 2 + 1) as i64 - ones as i64;
        let win = self.at_least(m, need);
        if self.r % 2 == 0 {
            let tie = self.at_least(m, need - 1) - win;
            win + tie / 2.0
        } else {
            win
        }
    }
}

fn meta(generator: &str, r: usize, seed: u64) -> EnsembleMeta {
    EnsembleMeta { generator: generator.into(), r, seed }
}

/// `count` copies of the constant sequence with `r` steps.
///
/// # Panics
/// If `value` is outside `[0,1]`.
pub fn constant<T: Scalar>(r: usize, value: f64, count: usize) -> Ensemble<T> {
    let s = Sequence::new(vec![T::lit(value); r + 1]).expect("constant value must lie in [0,1]");
    Ensemble::new(vec![s; count], meta("constant", r, 0)).expect("uniform length")
}

/// Game-value sequences of majority over `r` uniform coins.
pub fn majority_doob<T: Scalar>(r: usize, count: usize, stream: &SeedStream) -> Result<Ensemble<T>, CoreError> {
    if r == 0 {
        return Err(CoreError::BadParameter("majority needs r ≥ 1".into()));
    }
    let doob = MajorityDoob::new(r);
    let seqs = (0..count)
        .map(|t| {
            let mut rng = stream.child(t as u64).rng();
            let mut ones = 0;
            let mut x = Vec::with_capacity(r + 1);
            x.push(T::lit(doob.value(0, 0)));
            for i in 1..=r {
                ones += usize::from(rng.random::<bool>());
                x.push(T::lit(doob.value(i, ones)));
            }
            Sequence::new(x)
        })
        .collect::<Result<_, _>>()?;
    Ensemble::new(seqs, meta("majority_doob", r, stream.seed()))
}

/// Steps of `drift ± noise` (fair sign), clamped to `[0,1]`, from `x0`.
pub fn drifting<T: Scalar>(
    r: usize,
    drift: f64,
    noise: f64,
    x0: f64,
    count: usize,
    stream: &SeedStream,
) -> Result<Ensemble<T>, CoreError> {
    let seqs = (0..count)
        .map(|t| {
            let mut rng = stream.child(t as u64).rng();
            let mut v = x0;
            let mut x = vec![T::lit(v)];
            for _ in 0..r {
                let sign = if rng.random::<bool>() { 1.0 } else { -1.0 };
                v = (v + drift + sign * noise).clamp(0.0, 1.0);
                x.push(T::lit(v));
            }
            Sequence::new(x)
        })
        .collect::<Result<_, _>>()?;
    Ensemble::new(seqs, meta("drifting", r, stream.seed()))
}

/// Replaces a `gamma` fraction of sequences (chosen uniformly) with linear ramps
/// from `X_0` to the same `X_r`.
///
/// Ramps have steps of at most `1/r`, so they carry neither a large jump nor a
/// large sum of squares once `r > 16`.
pub fn inject_smooth<T: Scalar>(ens: Ensemble<T>, gamma: f64, stream: &SeedStream) -> Result<Ensemble<T>, CoreError> {
    if !(0.0..=1.0).contains(&gamma) {
        return Err(CoreError::BadParameter(format!("gamma {gamma} outside [0,1]")));
    }
    let (mut seqs, mut m) = ens.into_parts();
    let r = m.r;
    let k = (gamma * seqs.len() as f64).round() as usize;
    let mut rng = stream.rng();
    for idx in rand::seq::index::sample(&mut rng, seqs.len(), k) {
        let (a, b) = (seqs[idx].first().as_f64(), seqs[idx].last().as_f64());
        let x = (0..=r).map(|i| T::lit(a + (b - a) * i as f64 / r.max(1) as f64)).collect();
        seqs[idx] = Sequence::new(x)?;
    }
    m.generator = format!("{}+smooth({gamma})", m.generator);
    Ensemble::new(seqs, m)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn brute_majority(r: usize, i: usize, ones: usize) -> f64 {
        let rest = r - i;
        let mut total = 0.0;
        for mask in 0u32..(1 << rest) {
            let c = ones + mask.count_ones() as usize;
            total += if 2 * c > r {
                1.0
            } else if 2 * c == r {
                0.5
            } else {
                0.0
            };
        }
        total / (1u64 << rest) as f64
    }

    #[test]
    fn doob_matches_enumeration() {
        for r in 1..=9 {
            let d = MajorityDoob::new(r);
            for i in 0..=r {
                for ones in 0..=i {
                    assert!((d.value(i, ones) - brute_majority(r, i, ones)).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn doob_endpoints() {
        let ens = majority_doob::<f64>(7, 200, &SeedStream::new(2)).unwrap();
        for s in ens.sequences() {
            assert_eq!(s.first(), 0.5);
            assert!(s.last() == 0.0 || s.last() == 1.0);
        }
    }

    #[test]
    fn injection_keeps_endpoints() {
        let ens = majority_doob::<f64>(25, 1000, &SeedStream::new(4)).unwrap();
        let before: Vec<_> = ens.sequences().iter().map(|s| (s.first(), s.last())).collect();
        let out = inject_smooth(ens, 0.1, &SeedStream::new(5)).unwrap();
        let after: Vec<_> = out.sequences().iter().map(|s| (s.first(), s.last())).collect();
        assert!(before.iter().zip(&after).all(|(a, b)| (a.0 - b.0).abs() < 1e-12 && (a.1 - b.1).abs() < 1e-12));
    }
}
