//! Wavelet filter banks and the periodized 2-D discrete wavelet transform.
//!
//! Taps are stored in correlation order: a decimated analysis band is
//! `band[n] = Σ_k taps[k] · x[(2n + k) mod N]`. Synthesis scatters each
//! coefficient back through the reversed synthesis taps, which for
//! orthogonal banks is exactly the adjoint of analysis.

mod selftest;
mod taps;
mod transform;

use std::fmt;
use std::str::FromStr;
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use selftest::{selftest, SelftestRow};
pub use transform::{analysis_1d, dwt2, dwt2_band, idwt2, synthesis_1d, wavedec_ll, Band, Subbands2D};

/// The registered bases.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum WaveletBasisId {
    Haar,
    Bior1_1,
    Bior1_3,
    Bior2_2,
    Bior3_3,
    Db1,
    Db4,
    Db8,
    Db16,
    Sym2,
    Sym4,
    Sym8,
    Sym20,
    Coif1,
    Coif2,
    Coif4,
    Coif8,
    Dmey,
}

impl WaveletBasisId {
    pub const ALL: [WaveletBasisId; 18] = [
        WaveletBasisId::Haar,
        WaveletBasisId::Bior1_1,
        WaveletBasisId::Bior1_3,
        WaveletBasisId::Bior2_2,
        WaveletBasisId::Bior3_3,
        WaveletBasisId::Db1,
        WaveletBasisId::Db4,
        WaveletBasisId::Db8,
        WaveletBasisId::Db16,
        WaveletBasisId::Sym2,
        WaveletBasisId::Sym4,
        WaveletBasisId::Sym8,
        WaveletBasisId::Sym20,
        WaveletBasisId::Coif1,
        WaveletBasisId::Coif2,
        WaveletBasisId::Coif4,
        WaveletBasisId::Coif8,
        WaveletBasisId::Dmey,
    ];

    pub fn name(self) -> &'static str {
        use WaveletBasisId::*;
        match self {
            Haar => "haar",
            Bior1_1 => "bior1.1",
            Bior1_3 => "bior1.3",
            Bior2_2 => "bior2.2",
            Bior3_3 => "bior3.3",
            Db1 => "db1",
            Db4 => "db4",
            Db8 => "db8",
            Db16 => "db16",
            Sym2 => "sym2",
            Sym4 => "sym4",
            Sym8 => "sym8",
            Sym20 => "sym20",
            Coif1 => "coif1",
            Coif2 => "coif2",
            Coif4 => "coif4",
            Coif8 => "coif8",
            Dmey => "dmey",
        }
    }

    pub fn is_orthogonal(self) -> bool {
        !matches!(
            self,
            WaveletBasisId::Bior1_1 | WaveletBasisId::Bior1_3 | WaveletBasisId::Bior2_2 | WaveletBasisId::Bior3_3
        )
    }

    /// Taps of the bank; registry validation has already run.
    pub fn bank(self) -> &'static FilterBank {
        &registry()[self as usize]
    }
}

impl fmt::Display for WaveletBasisId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for WaveletBasisId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let lower = s.trim().to_ascii_lowercase();
        Self::ALL
            .into_iter()
            .find(|id| id.name() == lower)
            .ok_or_else(|| Error::UnknownBasis(s.to_owned()))
    }
}

impl TryFrom<String> for WaveletBasisId {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<WaveletBasisId> for String {
    fn from(id: WaveletBasisId) -> String {
        id.name().to_owned()
    }
}

/// Analysis and synthesis taps of one basis.
#[derive(Debug, Clone, PartialEq)]
pub struct FilterBank {
    pub dec_lo: Vec<f64>,
    pub dec_hi: Vec<f64>,
    pub rec_lo: Vec<f64>,
    pub rec_hi: Vec<f64>,
    pub orthogonal: bool,
}

impl FilterBank {
    /// Orthogonal bank from its scaling filter: the wavelet filter is the
    /// alternating flip and synthesis taps are the reversed analysis taps.
    fn orthogonal(lo: &[f64]) -> Self {
        let len = lo.len();
        let hi: Vec<f64> = (0..len)
            .map(|k| if k % 2 == 0 { lo[len - 1 - k] } else { -lo[len - 1 - k] })
            .collect();
        Self {
            rec_lo: lo.iter().rev().copied().collect(),
            rec_hi: hi.iter().rev().copied().collect(),
            dec_lo: lo.to_vec(),
            dec_hi: hi,
            orthogonal: true,
        }
    }

    fn biorthogonal(dec_lo: &[f64], dec_hi: &[f64], rec_lo: &[f64], rec_hi: &[f64]) -> Self {
        Self {
            dec_lo: dec_lo.to_vec(),
            dec_hi: dec_hi.to_vec(),
            rec_lo: rec_lo.to_vec(),
            rec_hi: rec_hi.to_vec(),
            orthogonal: false,
        }
    }

    pub fn len(&self) -> usize {
        self.dec_lo.len()
    }

    pub fn is_empty(&self) -> bool {
        self.dec_lo.is_empty()
    }

    /// `Σ dec_lo`; √2 for every registered bank.
    pub fn dc_gain(&self) -> f64 {
        self.dec_lo.iter().sum()
    }

    /// Max abs error of a 1-D analysis/synthesis round trip on `signal`.
    pub fn round_trip_error(&self, signal: &[f64]) -> f64 {
        let (lo, hi) = analysis_1d(self, signal);
        let back = synthesis_1d(self, &lo, &hi);
        signal.iter().zip(&back).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max)
    }

    fn validate(&self, id: WaveletBasisId) -> std::result::Result<(), String> {
        let n = self.len();
        if n == 0 || n % 2 == 1 || [&self.dec_hi, &self.rec_lo, &self.rec_hi].iter().any(|f| f.len() != n) {
            return Err(format!("{id}: inconsistent filter lengths"));
        }
        if (self.dc_gain() - std::f64::consts::SQRT_2).abs() >= 1e-6 {
            return Err(format!("{id}: DC gain {} is not √2", self.dc_gain()));
        }
        if self.orthogonal {
            let rev = |f: &[f64]| f.iter().rev().copied().collect::<Vec<_>>();
            if self.rec_lo != rev(&self.dec_lo) || self.rec_hi != rev(&self.dec_hi) {
                return Err(format!(
                    "{id}: orthogonal synthesis taps are not reversed analysis taps"
                ));
            }
        }
        let probe: Vec<f64> = (0..64)
            .map(|i| ((i * 37 % 64) as f64 * 0.173).sin() + 0.01 * i as f64)
            .collect();
        let err = self.round_trip_error(&probe);
        if err >= 1e-8 {
            return Err(format!("{id}: perfect reconstruction error {err:e}"));
        }
        Ok(())
    }
}

fn registry() -> &'static [FilterBank] {
    static REGISTRY: OnceLock<Vec<FilterBank>> = OnceLock::new();
    REGISTRY.get_or_init(|| {
        use WaveletBasisId::*;
        WaveletBasisId::ALL
            .iter()
            .map(|&id| {
                let bank = match id {
                    Haar => FilterBank::orthogonal(&taps::HAAR),
                    Db1 => FilterBank::orthogonal(&taps::DB1),
                    Db4 => FilterBank::orthogonal(&taps::DB4),
                    Db8 => FilterBank::orthogonal(&taps::DB8),
                    Db16 => FilterBank::orthogonal(&taps::DB16),
                    Sym2 => FilterBank::orthogonal(&taps::SYM2),
                    Sym4 => FilterBank::orthogonal(&taps::SYM4),
                    Sym8 => FilterBank::orthogonal(&taps::SYM8),
                    Sym20 => FilterBank::orthogonal(&taps::SYM20),
                    Coif1 => FilterBank::orthogonal(&taps::COIF1),
                    Coif2 => FilterBank::orthogonal(&taps::COIF2),
                    Coif4 => FilterBank::orthogonal(&taps::COIF4),
                    Coif8 => FilterBank::orthogonal(&taps::COIF8),
                    Dmey => FilterBank::orthogonal(&taps::DMEY),
                    Bior1_1 => FilterBank::biorthogonal(
                        &taps::BIOR1_1_DEC_LO,
                        &taps::BIOR1_1_DEC_HI,
                        &taps::BIOR1_1_REC_LO,
                        &taps::BIOR1_1_REC_HI,
                    ),
                    Bior1_3 => FilterBank::biorthogonal(
                        &taps::BIOR1_3_DEC_LO,
                        &taps::BIOR1_3_DEC_HI,
                        &taps::BIOR1_3_REC_LO,
                        &taps::BIOR1_3_REC_HI,
                    ),
                    Bior2_2 => FilterBank::biorthogonal(
                        &taps::BIOR2_2_DEC_LO,
                        &taps::BIOR2_2_DEC_HI,
                        &taps::BIOR2_2_REC_LO,
                        &taps::BIOR2_2_REC_HI,
                    ),
                    Bior3_3 => FilterBank::biorthogonal(
                        &taps::BIOR3_3_DEC_LO,
                        &taps::BIOR3_3_DEC_HI,
                        &taps::BIOR3_3_REC_LO,
                        &taps::BIOR3_3_REC_HI,
                    ),
                };
                if let Err(msg) = bank.validate(id) {
                    panic!("wavelet registry: {msg}");
                }
                bank
            })
            .collect()
    })
}

/// Filter bank for `id`.
pub fn filter_bank(id: WaveletBasisId) -> FilterBank {
    id.bank().clone()
}

/// Parses a basis name (case-insensitive) and returns its bank.
pub fn filter_bank_by_name(name: &str) -> Result<FilterBank> {
    Ok(filter_bank(name.parse()?))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parsing_is_case_insensitive_and_strict() {
        assert_eq!("HAAR".parse::<WaveletBasisId>().unwrap(), WaveletBasisId::Haar);
        assert_eq!("Bior2.2".parse::<WaveletBasisId>().unwrap(), WaveletBasisId::Bior2_2);
        assert!(matches!("db3".parse::<WaveletBasisId>(), Err(Error::UnknownBasis(_))));
        assert!(filter_bank_by_name("morlet").is_err());
        for id in WaveletBasisId::ALL {
            assert_eq!(id.name().parse::<WaveletBasisId>().unwrap(), id);
        }
    }

    #[test]
    fn haar_taps() {
        let b = filter_bank(WaveletBasisId::Haar);
        let r = std::f64::consts::FRAC_1_SQRT_2;
        assert_eq!(b.dec_lo, vec![r, r]);
        assert_eq!(b.dec_hi, vec![r, -r]);
    }

    #[test]
    fn tap_counts() {
        let len = |id: WaveletBasisId| id.bank().len();
        assert_eq!(len(WaveletBasisId::Db16), 32);
        assert_eq!(len(WaveletBasisId::Sym20), 40);
        for (id, order) in [
            (WaveletBasisId::Coif1, 1),
            (WaveletBasisId::Coif2, 2),
            (WaveletBasisId::Coif4, 4),
            (WaveletBasisId::Coif8, 8),
        ] {
            assert_eq!(len(id), 6 * order);
        }
        assert_eq!(len(WaveletBasisId::Dmey), 62);
    }

    #[test]
    fn every_bank_satisfies_invariants() {
        for id in WaveletBasisId::ALL {
            let b = filter_bank(id);
            assert_eq!(b.orthogonal, id.is_orthogonal());
            assert!((b.dc_gain() - std::f64::consts::SQRT_2).abs() < 1e-6, "{id}");
            b.validate(id).unwrap();
        }
    }

    // Standard 62-tap FIR approximation of the discrete Meyer scaling filter
    // (correlation order), as commonly tabulated.
    const DMEY_PUBLISHED: [f64; 62] = include!("dmey_published.in");

    #[test]
    fn dmey_stays_close_to_published_taps() {
        let b = filter_bank(WaveletBasisId::Dmey);
        let max_dev = b
            .dec_lo
            .iter()
            .zip(DMEY_PUBLISHED)
            .map(|(a, p)| (a - p).abs())
            .fold(0.0, f64::max);
        assert!(max_dev < 1e-3, "max deviation {max_dev}");
        let published = FilterBank::orthogonal(&DMEY_PUBLISHED);
        let probe: Vec<f64> = (0..64).map(|i| (i as f64 * 0.7).sin()).collect();
        // the published approximation is measurably not perfectly reconstructing
        assert!(published.round_trip_error(&probe) > 1e-6);
        assert!(b.round_trip_error(&probe) < 1e-12);
    }
}
