use super::linalg::gemm;
use super::{BackwardOp, Tape, Tensor};
use crate::error::{Error, Result};
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy)]
struct ConvGeom {
    n: usize,
    cin: usize,
    h: usize,
    w: usize,
    cout: usize,
    kh: usize,
    kw: usize,
    stride: usize,
    pad: usize,
    ho: usize,
    wo: usize,
}

impl ConvGeom {
    fn patch(&self) -> usize {
        self.cin * self.kh * self.kw
    }

    fn plane(&self) -> usize {
        self.ho * self.wo
    }
}

fn out_extent(axis: &str, len: usize, k: usize, stride: usize, pad: usize) -> Result<usize> {
    let padded = len + 2 * pad;
    if padded < k {
        return Err(Error::config(format!(
            "conv2d: kernel {axis} {k} exceeds padded input {axis} {padded}"
        )));
    }
    Ok((padded - k) / stride + 1)
}

/// Output positions `lo..hi` whose input index `o·stride + k − pad` falls
/// inside `0..len`.
fn valid_range(len: usize, out: usize, k: usize, stride: usize, pad: usize) -> (usize, usize) {
    let lo = pad.saturating_sub(k).div_ceil(stride).min(out);
    let hi = if len + pad <= k {
        0
    } else {
        ((len + pad - k - 1) / stride + 1).min(out)
    };
    (lo, hi.max(lo))
}

/// Unfolds the receptive fields of samples `s..s+gs` into the columns of a
/// `patch × (gs·Ho·Wo)` matrix.
fn im2col<T: Scalar>(g: &ConvGeom, x: &[T], s: usize, gs: usize, cols: &mut [T]) {
    let np = gs * g.plane();
    for i in 0..gs {
        for ci in 0..g.cin {
            let src = &x[((s + i) * g.cin + ci) * g.h * g.w..][..g.h * g.w];
            for ky in 0..g.kh {
                let (ylo, yhi) = valid_range(g.h, g.ho, ky, g.stride, g.pad);
                for kx in 0..g.kw {
                    let (xlo, xhi) = valid_range(g.w, g.wo, kx, g.stride, g.pad);
                    let row = (ci * g.kh + ky) * g.kw + kx;
                    let dst = &mut cols[row * np + i * g.plane()..][..g.plane()];
                    dst[..ylo * g.wo].fill(T::zero());
                    dst[yhi * g.wo..].fill(T::zero());
                    for oy in ylo..yhi {
                        let iy = oy * g.stride + ky - g.pad;
                        let dst_row = &mut dst[oy * g.wo..][..g.wo];
                        let src_row = &src[iy * g.w..][..g.w];
                        dst_row[..xlo].fill(T::zero());
                        dst_row[xhi..].fill(T::zero());
                        let ix0 = xlo * g.stride + kx - g.pad;
                        if g.stride == 1 {
                            dst_row[xlo..xhi].copy_from_slice(&src_row[ix0..ix0 + (xhi - xlo)]);
                        } else {
                            for (d, v) in dst_row[xlo..xhi]
                                .iter_mut()
                                .zip(src_row[ix0..].iter().step_by(g.stride))
                            {
                                *d = *v;
                            }
                        }
                    }
                }
            }
        }
    }
}

/// Adjoint of [`im2col`], accumulating into `x`.
fn col2im_add<T: Scalar>(g: &ConvGeom, cols: &[T], s: usize, gs: usize, x: &mut [T]) {
    let np = gs * g.plane();
    for i in 0..gs {
        for ci in 0..g.cin {
            let dst = &mut x[((s + i) * g.cin + ci) * g.h * g.w..][..g.h * g.w];
            for ky in 0..g.kh {
                let (ylo, yhi) = valid_range(g.h, g.ho, ky, g.stride, g.pad);
                for kx in 0..g.kw {
                    let (xlo, xhi) = valid_range(g.w, g.wo, kx, g.stride, g.pad);
                    let row = (ci * g.kh + ky) * g.kw + kx;
                    let src = &cols[row * np + i * g.plane()..][..g.plane()];
                    let ix0 = xlo * g.stride + kx;
                    for oy in ylo..yhi {
                        let iy = oy * g.stride + ky - g.pad;
                        let src_row = &src[oy * g.wo + xlo..oy * g.wo + xhi];
                        if xlo == xhi {
                            continue;
                        }
                        let dst_row = &mut dst[iy * g.w + ix0 - g.pad..];
                        for (d, v) in dst_row.iter_mut().step_by(g.stride).zip(src_row) {
                            *d += *v;
                        }
                    }
                }
            }
        }
    }
}

/// Samples are processed in groups wide enough to keep the GEMMs efficient
/// while the unfolded columns stay small.
const GROUP_COLUMNS: usize = 1024;

impl ConvGeom {
    fn group(&self) -> usize {
        GROUP_COLUMNS.div_ceil(self.plane()).clamp(1, self.n.max(1))
    }

    /// 1×1, stride 1, no padding: the columns of one sample are its input.
    fn pointwise(&self) -> bool {
        self.kh == 1 && self.kw == 1 && self.stride == 1 && self.pad == 0
    }
}

/// `[gs, C, P]` slice of a batch → `[C, gs·P]`.
fn gather_group<T: Scalar>(src: &[T], s: usize, gs: usize, c: usize, p: usize, out: &mut [T]) {
    for i in 0..gs {
        for j in 0..c {
            out[(j * gs + i) * p..][..p].copy_from_slice(&src[((s + i) * c + j) * p..][..p]);
        }
    }
}

fn scatter_group<T: Scalar>(src: &[T], s: usize, gs: usize, c: usize, p: usize, out: &mut [T]) {
    for i in 0..gs {
        for j in 0..c {
            out[((s + i) * c + j) * p..][..p].copy_from_slice(&src[(j * gs + i) * p..][..p]);
        }
    }
}

struct Conv2dBackward<T> {
    geom: ConvGeom,
    x: Tensor<T>,
    w: Tensor<T>,
}

impl<T: Scalar> BackwardOp<T> for Conv2dBackward<T> {
    fn backward(&self, grad_out: &[T], needs: &[bool]) -> Vec<Option<Vec<T>>> {
        let g = &self.geom;
        let (p, patch, cout) = (g.plane(), g.patch(), g.cout);
        let need_b = needs.len() > 2 && needs[2];
        let mut dx = needs[0].then(|| vec![T::zero(); g.n * g.cin * g.h * g.w]);
        let mut dw = needs[1].then(|| vec![T::zero(); cout * patch]);
        let mut db = need_b.then(|| vec![T::zero(); cout]);

        let gsz = g.group();
        let direct = gsz == 1;
        let mut gbuf = if direct {
            Vec::new()
        } else {
            vec![T::zero(); cout * gsz * p]
        };
        let mut cols = vec![T::zero(); if direct && g.pointwise() { 0 } else { patch * gsz * p }];
        let mut dcols = vec![
            T::zero();
            if dx.is_some() && !(direct && g.pointwise()) {
                patch * gsz * p
            } else {
                0
            }
        ];
        let x = self.x.data();
        for s in (0..g.n).step_by(gsz) {
            let gs = gsz.min(g.n - s);
            let np = gs * p;
            let gp: &[T] = if direct {
                &grad_out[s * cout * p..][..cout * p]
            } else {
                gather_group(grad_out, s, gs, cout, p, &mut gbuf);
                &gbuf[..cout * np]
            };
            if let Some(dw) = dw.as_mut() {
                let c: &[T] = if direct && g.pointwise() {
                    &x[s * g.cin * p..][..g.cin * p]
                } else {
                    im2col(g, x, s, gs, &mut cols);
                    &cols[..patch * np]
                };
                gemm(false, true, cout, patch, np, gp, c, T::one(), dw);
            }
            if let Some(dx) = dx.as_mut() {
                if direct && g.pointwise() {
                    gemm(
                        true,
                        false,
                        g.cin,
                        p,
                        cout,
                        self.w.data(),
                        gp,
                        T::zero(),
                        &mut dx[s * g.cin * p..][..g.cin * p],
                    );
                } else {
                    gemm(
                        true,
                        false,
                        patch,
                        np,
                        cout,
                        self.w.data(),
                        gp,
                        T::zero(),
                        &mut dcols[..patch * np],
                    );
                    col2im_add(g, &dcols[..patch * np], s, gs, dx);
                }
            }
            if let Some(db) = db.as_mut() {
                for (acc, row) in db.iter_mut().zip(gp.chunks_exact(np)) {
                    *acc += row.iter().fold(T::zero(), |a, &v| a + v);
                }
            }
        }
        let mut out = vec![dx, dw];
        if needs.len() > 2 {
            out.push(db);
        }
        out
    }
}

struct LinearBackward<T> {
    n: usize,
    din: usize,
    dout: usize,
    x: Tensor<T>,
    w: Tensor<T>,
}

impl<T: Scalar> BackwardOp<T> for LinearBackward<T> {
    fn backward(&self, grad_out: &[T], needs: &[bool]) -> Vec<Option<Vec<T>>> {
        let (n, din, dout) = (self.n, self.din, self.dout);
        let dx = needs[0].then(|| {
            let mut dx = vec![T::zero(); n * din];
            gemm(false, false, n, din, dout, grad_out, self.w.data(), T::zero(), &mut dx);
            dx
        });
        let dw = needs[1].then(|| {
            let mut dw = vec![T::zero(); dout * din];
            gemm(true, false, dout, din, n, grad_out, self.x.data(), T::zero(), &mut dw);
            dw
        });
        let mut out = vec![dx, dw];
        if needs.len() > 2 {
            out.push(needs[2].then(|| {
                let mut db = vec![T::zero(); dout];
                for row in grad_out.chunks_exact(dout) {
                    db.iter_mut().zip(row).for_each(|(a, &b)| *a += b);
                }
                db
            }));
        }
        out
    }
}

impl<T: Scalar> Tape<T> {
    /// 2-D cross-correlation of `x[N,Cin,H,W]` with `w[Cout,Cin,Kh,Kw]`.
    ///
    /// Output extents are `⌊(H + 2·pad − Kh)/stride⌋ + 1`.
    pub fn conv2d(
        &self,
        x: &Tensor<T>,
        w: &Tensor<T>,
        bias: Option<&Tensor<T>>,
        stride: usize,
        pad: usize,
    ) -> Result<Tensor<T>> {
        let [n, cin, h, wd] = x.dims4()?;
        let [cout, wcin, kh, kw] = w
            .dims4()
            .map_err(|_| Error::config(format!("conv2d: weight must be Cout×Cin×Kh×Kw, got {:?}", w.shape())))?;
        if stride == 0 {
            return Err(Error::config("conv2d: stride must be positive"));
        }
        if wcin != cin {
            return Err(Error::config(format!(
                "conv2d: input channels {cin} do not match weight Cin {wcin}"
            )));
        }
        if let Some(b) = bias {
            if b.shape() != [cout] {
                return Err(Error::config(format!(
                    "conv2d: bias shape {:?} does not match Cout {cout}",
                    b.shape()
                )));
            }
        }
        let geom = ConvGeom {
            n,
            cin,
            h,
            w: wd,
            cout,
            kh,
            kw,
            stride,
            pad,
            ho: out_extent("height", h, kh, stride, pad)?,
            wo: out_extent("width", wd, kw, stride, pad)?,
        };
        let (p, patch) = (geom.plane(), geom.patch());
        let gsz = geom.group();
        let direct = gsz == 1;
        let mut out = vec![T::zero(); n * cout * p];
        let mut cols = vec![T::zero(); if direct && geom.pointwise() { 0 } else { patch * gsz * p }];
        let mut tmp = vec![T::zero(); if direct { 0 } else { cout * gsz * p }];
        for s in (0..n).step_by(gsz) {
            let gs = gsz.min(n - s);
            let np = gs * p;
            let c: &[T] = if direct && geom.pointwise() {
                &x.data()[s * cin * p..][..cin * p]
            } else {
                im2col(&geom, x.data(), s, gs, &mut cols);
                &cols[..patch * np]
            };
            if direct {
                gemm(
                    false,
                    false,
                    cout,
                    p,
                    patch,
                    w.data(),
                    c,
                    T::zero(),
                    &mut out[s * cout * p..][..cout * p],
                );
            } else {
                gemm(
                    false,
                    false,
                    cout,
                    np,
                    patch,
                    w.data(),
                    c,
                    T::zero(),
                    &mut tmp[..cout * np],
                );
                scatter_group(&tmp, s, gs, cout, p, &mut out);
            }
        }
        if let Some(b) = bias {
            for (i, plane) in out.chunks_exact_mut(p).enumerate() {
                let bv = b.data()[i % cout];
                plane.iter_mut().for_each(|v| *v += bv);
            }
        }
        let output = Tensor::from_parts(vec![n, cout, geom.ho, geom.wo], out);
        let mut inputs = vec![x, w];
        inputs.extend(bias);
        self.record(&inputs, output, || {
            Box::new(Conv2dBackward {
                geom,
                x: x.detach(),
                w: w.detach(),
            })
        })
    }

    /// `y = x·wᵀ + b` for `x[N,Din]`, `w[Dout,Din]`, `b[Dout]`.
    pub fn linear(&self, x: &Tensor<T>, w: &Tensor<T>, bias: Option<&Tensor<T>>) -> Result<Tensor<T>> {
        let (n, din) = match x.shape() {
            &[n, d] => (n, d),
            other => return Err(Error::config(format!("linear: input must be N×D, got {other:?}"))),
        };
        let dout = match w.shape() {
            &[o, d] if d == din => o,
            other => {
                return Err(Error::config(format!(
                    "linear: weight {other:?} does not match input width {din}"
                )))
            }
        };
        if let Some(b) = bias {
            if b.shape() != [dout] {
                return Err(Error::config(format!("linear: bias shape {:?} != [{dout}]", b.shape())));
            }
        }
        let mut out = vec![T::zero(); n * dout];
        gemm(false, true, n, dout, din, x.data(), w.data(), T::zero(), &mut out);
        if let Some(b) = bias {
            for row in out.chunks_exact_mut(dout) {
                row.iter_mut().zip(b.data()).for_each(|(v, &bv)| *v += bv);
            }
        }
        let output = Tensor::from_parts(vec![n, dout], out);
        let mut inputs = vec![x, w];
        inputs.extend(bias);
        self.record(&inputs, output, || {
            Box::new(LinearBackward {
                n,
                din,
                dout,
                x: x.detach(),
                w: w.detach(),
            })
        })
    }
}
