use super::{FilterBank, WaveletBasisId};
use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::tensor::{BackwardOp, Tape, Tensor};

/// One 2-D sub-band. The first letter is the filter along the horizontal
/// (width) axis, the second along the vertical (height) axis; the vertical
/// pass runs first.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Band {
    LL,
    LH,
    HL,
    HH,
}

impl Band {
    pub const ALL: [Band; 4] = [Band::LL, Band::LH, Band::HL, Band::HH];

    fn horizontal_low(self) -> bool {
        matches!(self, Band::LL | Band::LH)
    }

    fn vertical_low(self) -> bool {
        matches!(self, Band::LL | Band::HL)
    }
}

#[derive(Debug, Clone)]
pub struct Subbands2D<T: Scalar> {
    pub ll: Tensor<T>,
    pub lh: Tensor<T>,
    pub hl: Tensor<T>,
    pub hh: Tensor<T>,
}

impl<T: Scalar> Subbands2D<T> {
    pub fn band(&self, b: Band) -> &Tensor<T> {
        match b {
            Band::LL => &self.ll,
            Band::LH => &self.lh,
            Band::HL => &self.hl,
            Band::HH => &self.hh,
        }
    }

    pub fn energy(&self) -> f64 {
        Band::ALL
            .iter()
            .flat_map(|&b| self.band(b).data().iter())
            .map(|v| v.to_f64_lossy().powi(2))
            .sum()
    }
}

// Periodized decimating correlation along the rows of an h×w plane:
// out[n, x] = Σ_k f[k] · src[(2n + k) mod h, x].
fn analyze_vertical<T: Scalar>(src: &[T], h: usize, w: usize, f: &[T], out: &mut [T]) {
    for n in 0..h / 2 {
        let dst = &mut out[n * w..][..w];
        dst.iter_mut().for_each(|v| *v = T::zero());
        for (k, &fk) in f.iter().enumerate() {
            let row = &src[((2 * n + k) % h) * w..][..w];
            dst.iter_mut().zip(row).for_each(|(d, &s)| *d += fk * s);
        }
    }
}

fn analyze_horizontal<T: Scalar>(src: &[T], h: usize, w: usize, f: &[T], out: &mut [T]) {
    let wo = w / 2;
    for y in 0..h {
        let row = &src[y * w..][..w];
        for n in 0..wo {
            let mut acc = T::zero();
            for (k, &fk) in f.iter().enumerate() {
                acc += fk * row[(2 * n + k) % w];
            }
            out[y * wo + n] = acc;
        }
    }
}

// Adjoints of the two passes above (accumulating into `dst`).
fn scatter_vertical<T: Scalar>(coef: &[T], h: usize, w: usize, f: &[T], dst: &mut [T]) {
    for n in 0..h / 2 {
        let src = &coef[n * w..][..w];
        for (k, &fk) in f.iter().enumerate() {
            let row = &mut dst[((2 * n + k) % h) * w..][..w];
            row.iter_mut().zip(src).for_each(|(d, &s)| *d += fk * s);
        }
    }
}

fn scatter_horizontal<T: Scalar>(coef: &[T], h: usize, w: usize, f: &[T], dst: &mut [T]) {
    let wo = w / 2;
    for y in 0..h {
        let row = &mut dst[y * w..][..w];
        for n in 0..wo {
            let c = coef[y * wo + n];
            for (k, &fk) in f.iter().enumerate() {
                row[(2 * n + k) % w] += fk * c;
            }
        }
    }
}

fn cast_taps<T: Scalar>(taps: &[f64]) -> Vec<T> {
    taps.iter().map(|&v| T::from_f64_lossy(v)).collect()
}

fn reversed<T: Scalar>(taps: &[f64]) -> Vec<T> {
    taps.iter().rev().map(|&v| T::from_f64_lossy(v)).collect()
}

// Banks made only of ±1/√2 taps (haar, db1, bior1.1) run both passes with
// ±1 taps and apply a single factor 1/2 afterwards. Haar LL is then the
// exact sum of each 2×2 block halved.
fn pair_scaled(bank: &FilterBank) -> bool {
    [&bank.dec_lo, &bank.dec_hi, &bank.rec_lo, &bank.rec_hi]
        .iter()
        .all(|t| t.iter().all(|v| v.abs() == std::f64::consts::FRAC_1_SQRT_2))
}

fn signs(taps: &[f64]) -> Vec<f64> {
    taps.iter().map(|v| v.signum()).collect()
}

fn scale_all<T: Scalar>(v: &mut [T], s: Option<T>) {
    if let Some(s) = s {
        v.iter_mut().for_each(|x| *x *= s);
    }
}

fn half<T: Scalar>(bank: &FilterBank) -> Option<T> {
    pair_scaled(bank).then(|| T::from_f64_lossy(0.5))
}

fn analysis_taps(bank: &FilterBank, low: bool) -> Vec<f64> {
    let t = if low { &bank.dec_lo } else { &bank.dec_hi };
    if pair_scaled(bank) {
        signs(t)
    } else {
        t.to_vec()
    }
}

fn synthesis_taps(bank: &FilterBank, low: bool) -> Vec<f64> {
    let t = if low { &bank.rec_lo } else { &bank.rec_hi };
    if pair_scaled(bank) {
        signs(t)
    } else {
        t.to_vec()
    }
}

/// 1-D periodized analysis: `(approximation, detail)`.
pub fn analysis_1d(bank: &FilterBank, x: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let n = x.len();
    let mut lo = vec![0.0; n / 2];
    let mut hi = vec![0.0; n / 2];
    analyze_horizontal(x, 1, n, &bank.dec_lo, &mut lo);
    analyze_horizontal(x, 1, n, &bank.dec_hi, &mut hi);
    (lo, hi)
}

/// 1-D periodized synthesis, inverse of [`analysis_1d`].
pub fn synthesis_1d(bank: &FilterBank, lo: &[f64], hi: &[f64]) -> Vec<f64> {
    let n = 2 * lo.len();
    let mut x = vec![0.0; n];
    scatter_horizontal(lo, 1, n, &reversed::<f64>(&bank.rec_lo), &mut x);
    scatter_horizontal(hi, 1, n, &reversed::<f64>(&bank.rec_hi), &mut x);
    x
}

fn check_even(x_dims: [usize; 4]) -> Result<()> {
    let [_, _, h, w] = x_dims;
    for (axis, len) in [("height", h), ("width", w)] {
        if len < 2 || len % 2 != 0 {
            return Err(Error::config(format!("dwt2: {axis} {len} must be even and at least 2")));
        }
    }
    Ok(())
}

struct BandBackward<T> {
    dims: [usize; 4],
    vertical: Vec<T>,
    horizontal: Vec<T>,
    scale: Option<T>,
}

impl<T: Scalar> BackwardOp<T> for BandBackward<T> {
    fn backward(&self, grad_out: &[T], _needs: &[bool]) -> Vec<Option<Vec<T>>> {
        let [n, c, h, w] = self.dims;
        let (hh, wh) = (h / 2, w / 2);
        let mut dx = vec![T::zero(); n * c * h * w];
        let mut mid = vec![T::zero(); hh * w];
        let mut g = vec![T::zero(); hh * wh];
        for (src, dst) in grad_out.chunks_exact(hh * wh).zip(dx.chunks_exact_mut(h * w)) {
            g.copy_from_slice(src);
            scale_all(&mut g, self.scale);
            mid.iter_mut().for_each(|v| *v = T::zero());
            scatter_horizontal(&g, hh, w, &self.horizontal, &mut mid);
            scatter_vertical(&mid, h, w, &self.vertical, dst);
        }
        vec![Some(dx)]
    }
}

/// One sub-band of the single-level periodized 2-D DWT of `x[N,C,H,W]`.
/// Differentiable; the backward pass is the exact adjoint of the analysis.
pub fn dwt2_band<T: Scalar>(tape: &Tape<T>, x: &Tensor<T>, basis: WaveletBasisId, band: Band) -> Result<Tensor<T>> {
    let dims @ [n, c, h, w] = x.dims4()?;
    check_even(dims)?;
    let bank = basis.bank();
    let vertical: Vec<T> = cast_taps(&analysis_taps(bank, band.vertical_low()));
    let horizontal: Vec<T> = cast_taps(&analysis_taps(bank, band.horizontal_low()));
    let scale = half(bank);
    let (hh, wh) = (h / 2, w / 2);
    let mut out = vec![T::zero(); n * c * hh * wh];
    let mut mid = vec![T::zero(); hh * w];
    for (src, dst) in x.data().chunks_exact(h * w).zip(out.chunks_exact_mut(hh * wh)) {
        analyze_vertical(src, h, w, &vertical, &mut mid);
        analyze_horizontal(&mid, hh, w, &horizontal, dst);
    }
    scale_all(&mut out, scale);
    let output = Tensor::from_parts(vec![n, c, hh, wh], out);
    tape.record(&[x], output, || {
        Box::new(BandBackward {
            dims,
            vertical,
            horizontal,
            scale,
        })
    })
}

/// Single-level periodized 2-D DWT.
pub fn dwt2<T: Scalar>(tape: &Tape<T>, x: &Tensor<T>, basis: WaveletBasisId) -> Result<Subbands2D<T>> {
    Ok(Subbands2D {
        ll: dwt2_band(tape, x, basis, Band::LL)?,
        lh: dwt2_band(tape, x, basis, Band::LH)?,
        hl: dwt2_band(tape, x, basis, Band::HL)?,
        hh: dwt2_band(tape, x, basis, Band::HH)?,
    })
}

/// Inverse of [`dwt2`] (not recorded on any tape).
pub fn idwt2<T: Scalar>(s: &Subbands2D<T>, basis: WaveletBasisId) -> Result<Tensor<T>> {
    let dims @ [n, c, hh, wh] = s.ll.dims4()?;
    for b in [Band::LH, Band::HL, Band::HH] {
        if s.band(b).shape() != dims {
            return Err(Error::config(format!(
                "idwt2: sub-band {b:?} has shape {:?}, LL has {dims:?}",
                s.band(b).shape()
            )));
        }
    }
    let bank = basis.bank();
    let (h, w) = (2 * hh, 2 * wh);
    let lo: Vec<T> = reversed(&synthesis_taps(bank, true));
    let hi: Vec<T> = reversed(&synthesis_taps(bank, false));
    let mut out = vec![T::zero(); n * c * h * w];
    let mut mid = vec![T::zero(); hh * w];
    for b in Band::ALL {
        let vertical = if b.vertical_low() { &lo } else { &hi };
        let horizontal = if b.horizontal_low() { &lo } else { &hi };
        for (coef, dst) in s.band(b).data().chunks_exact(hh * wh).zip(out.chunks_exact_mut(h * w)) {
            mid.iter_mut().for_each(|v| *v = T::zero());
            scatter_horizontal(coef, hh, w, horizontal, &mut mid);
            scatter_vertical(&mid, h, w, vertical, dst);
        }
    }
    scale_all(&mut out, half(bank));
    Ok(Tensor::from_parts(vec![n, c, h, w], out))
}

/// `levels` nested LL bands; `levels == 0` returns `x` itself.
fn wavedec_ll_levels<T: Scalar>(
    tape: &Tape<T>,
    x: &Tensor<T>,
    basis: WaveletBasisId,
    levels: usize,
) -> Result<Tensor<T>> {
    let [_, _, h, w] = x.dims4()?;
    let factor = 1usize
        .checked_shl(levels as u32)
        .ok_or_else(|| Error::config("wavedec: too many levels"))?;
    for (axis, len) in [("height", h), ("width", w)] {
        if len % factor != 0 || len / factor == 0 {
            return Err(Error::config(format!(
                "wavedec: {axis} {len} is not divisible by 2^{levels}"
            )));
        }
    }
    let mut cur = x.clone();
    for _ in 0..levels {
        cur = dwt2_band(tape, &cur, basis, Band::LL)?;
    }
    Ok(cur)
}

/// Low-frequency approximation after `levels ≥ 1` decomposition levels.
pub fn wavedec_ll<T: Scalar>(tape: &Tape<T>, x: &Tensor<T>, basis: WaveletBasisId, levels: usize) -> Result<Tensor<T>> {
    if levels == 0 {
        return Err(Error::config("wavedec: levels must be at least 1"));
    }
    wavedec_ll_levels(tape, x, basis, levels)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tensor::PoolKind;

    fn square() -> Tensor<f64> {
        Tensor::new([1, 1, 2, 2], vec![1.0, 2.0, 3.0, 4.0]).unwrap()
    }

    #[test]
    fn worked_haar_example() {
        let tape = Tape::new();
        let s = dwt2(&tape, &square(), WaveletBasisId::Haar).unwrap();
        let close = |t: &Tensor<f64>, v: f64| (t.data()[0] - v).abs() < 1e-12;
        assert!(close(&s.ll, 5.0), "{:?}", s.ll);
        assert!(close(&s.hl, -1.0), "{:?}", s.hl);
        assert!(close(&s.lh, -2.0), "{:?}", s.lh);
        assert!(close(&s.hh, 0.0), "{:?}", s.hh);
        let back = idwt2(&s, WaveletBasisId::Haar).unwrap();
        assert!(back.max_abs_diff(&square()) < 1e-12);
    }

    #[test]
    fn worked_example_matches_transform_matrix() {
        // Explicit 4×4 orthonormal Haar matrix acting on vec(x) = [x00, x01, x10, x11].
        let r = 0.5;
        let rows = [
            ("ll", [r, r, r, r]),
            ("hl", [r, -r, r, -r]),
            ("lh", [r, r, -r, -r]),
            ("hh", [r, -r, -r, r]),
        ];
        let tape = Tape::new();
        let s = dwt2(&tape, &square(), WaveletBasisId::Haar).unwrap();
        for (name, row) in rows {
            let want: f64 = row.iter().zip([1.0, 2.0, 3.0, 4.0]).map(|(a, b)| a * b).sum();
            let got = match name {
                "ll" => &s.ll,
                "hl" => &s.hl,
                "lh" => &s.lh,
                _ => &s.hh,
            }
            .data()[0];
            assert!((got - want).abs() < 1e-12, "{name}: {got} vs {want}");
        }
    }

    #[test]
    fn constant_image_haar() {
        let tape = Tape::new();
        let x = Tensor::<f64>::full([1, 2, 8, 8], 0.3);
        let s = dwt2(&tape, &x, WaveletBasisId::Haar).unwrap();
        assert!(s.ll.data().iter().all(|&v| (v - 0.6).abs() < 1e-15));
        for b in [&s.lh, &s.hl, &s.hh] {
            assert!(b.data().iter().all(|&v| v.abs() < 1e-15));
        }
        let ll2 = wavedec_ll(&tape, &x, WaveletBasisId::Haar, 2).unwrap();
        assert_eq!(ll2.shape(), &[1, 2, 2, 2]);
        assert!(ll2.data().iter().all(|&v| (v - 1.2).abs() < 1e-14));
    }

    #[test]
    fn haar_ll_is_twice_average_pool() {
        let tape = Tape::new();
        let x = Tensor::<f64>::from_fn([2, 3, 8, 6], |i| ((i * 31) % 17) as f64 * 0.125 - 1.0);
        let ll = dwt2_band(&tape, &x, WaveletBasisId::Haar, Band::LL).unwrap();
        let avg = tape.pool2d(&x, PoolKind::Avg, 2, 2).unwrap();
        for (a, b) in ll.data().iter().zip(avg.data()) {
            assert_eq!(a.to_bits(), (2.0 * b).to_bits());
        }
    }

    #[test]
    fn wavedec_levels() {
        let tape = Tape::<f32>::new();
        let x = Tensor::zeros([1, 3, 64, 64]);
        assert_eq!(
            wavedec_ll(&tape, &x, WaveletBasisId::Db4, 3).unwrap().shape(),
            &[1, 3, 8, 8]
        );
        let one = wavedec_ll(&tape, &x, WaveletBasisId::Sym4, 1).unwrap();
        let ll = dwt2(&tape, &x, WaveletBasisId::Sym4).unwrap().ll;
        assert!(one.bitwise_eq(&ll));
        assert!(wavedec_ll(&tape, &Tensor::zeros([1, 1, 12, 12]), WaveletBasisId::Haar, 3).is_err());
        assert!(wavedec_ll(&tape, &x, WaveletBasisId::Haar, 0).is_err());
    }

    #[test]
    fn errors() {
        let tape = Tape::<f64>::new();
        assert!(dwt2(&tape, &Tensor::zeros([1, 1, 5, 4]), WaveletBasisId::Haar).is_err());
        let s = dwt2(&tape, &Tensor::zeros([1, 1, 4, 4]), WaveletBasisId::Haar).unwrap();
        let bad = Subbands2D {
            hh: Tensor::zeros([1, 1, 3, 2]),
            ..s.clone()
        };
        assert!(idwt2(&bad, WaveletBasisId::Haar).is_err());
        let zero = idwt2(&s, WaveletBasisId::Coif2).unwrap();
        assert!(zero.data().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn long_filters_wrap_on_tiny_maps() {
        let tape = Tape::<f64>::new();
        let x = Tensor::from_fn([1, 1, 2, 2], |i| i as f64 + 1.0);
        for id in WaveletBasisId::ALL {
            let s = dwt2(&tape, &x, id).unwrap();
            let back = idwt2(&s, id).unwrap();
            assert!(back.max_abs_diff(&x) < 1e-8, "{id}");
        }
    }
}
