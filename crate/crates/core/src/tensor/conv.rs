//! 2-D convolution (cross-correlation), its adjoint and its weight gradient.
//!
//! Weights use the `(C_out, C_in / groups, kh, kw)` layout for both
//! directions: [`transposed_conv2d`] with the same weight tensor is the exact
//! adjoint of [`conv2d`], mapping `C_out` channels back to `C_in`.
//!
//! Dense groups go through im2col and a GEMM; the depthwise case
//! (`groups == C_in == C_out`) uses a tap-by-tap loop over contiguous rows.
//! Both paths accumulate in a fixed order, so results are reproducible.

use super::Tensor;
use crate::error::{ensure_dim, Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ConvSpec {
    pub kernel_h: usize,
    pub kernel_w: usize,
    pub stride: usize,
    pub dilation: usize,
    /// Symmetric zero padding on every side.
    pub pad: usize,
    pub groups: usize,
}

impl ConvSpec {
    pub fn new(kernel_h: usize, kernel_w: usize) -> Self {
        Self {
            kernel_h,
            kernel_w,
            stride: 1,
            dilation: 1,
            pad: 0,
            groups: 1,
        }
    }

    /// Square `k×k` kernel, stride 1, padded so the spatial size is kept (odd `k`).
    pub fn same(k: usize) -> Self {
        Self::new(k, k).pad(k / 2)
    }

    pub fn stride(mut self, stride: usize) -> Self {
        self.stride = stride;
        self
    }

    pub fn dilation(mut self, dilation: usize) -> Self {
        self.dilation = dilation;
        self
    }

    pub fn pad(mut self, pad: usize) -> Self {
        self.pad = pad;
        self
    }

    pub fn groups(mut self, groups: usize) -> Self {
        self.groups = groups;
        self
    }

    fn validate(&self, op: &'static str) -> Result<()> {
        for (name, v) in [
            ("kernel_h", self.kernel_h),
            ("kernel_w", self.kernel_w),
            ("stride", self.stride),
            ("dilation", self.dilation),
            ("groups", self.groups),
        ] {
            if v == 0 {
                return Err(Error::invalid(op, format!("{name} must be positive")));
            }
        }
        Ok(())
    }

    /// Dilated kernel extent along height and width.
    pub fn span(&self) -> (usize, usize) {
        (
            self.dilation * (self.kernel_h - 1) + 1,
            self.dilation * (self.kernel_w - 1) + 1,
        )
    }

    /// `floor((H + 2·pad − dilation·(k−1) − 1) / stride) + 1` per axis.
    pub fn output_size(&self, h: usize, w: usize) -> Result<(usize, usize)> {
        self.validate("conv2d")?;
        let (sh, sw) = self.span();
        let (ph, pw) = (h + 2 * self.pad, w + 2 * self.pad);
        if ph < sh || pw < sw {
            return Err(Error::invalid(
                "conv2d",
                format!(
                    "kernel span {sh}x{sw} exceeds padded input {ph}x{pw}; output would be empty"
                ),
            ));
        }
        Ok(((ph - sh) / self.stride + 1, (pw - sw) / self.stride + 1))
    }

    /// Output size of the transposed convolution: `(H−1)·stride − 2·pad + dilation·(k−1) + 1`.
    pub fn transposed_output_size(&self, h: usize, w: usize) -> Result<(usize, usize)> {
        self.validate("transposed_conv2d")?;
        let (sh, sw) = self.span();
        let oh = ((h - 1) * self.stride + sh).checked_sub(2 * self.pad);
        let ow = ((w - 1) * self.stride + sw).checked_sub(2 * self.pad);
        match (oh, ow) {
            (Some(oh), Some(ow)) if oh > 0 && ow > 0 => Ok((oh, ow)),
            _ => Err(Error::invalid("transposed_conv2d", "padding leaves an empty output")),
        }
    }
}

struct Geometry {
    n: usize,
    c_in: usize,
    c_out: usize,
    h: usize,
    w: usize,
    oh: usize,
    ow: usize,
    spec: ConvSpec,
}

impl Geometry {
    fn cin_g(&self) -> usize {
        self.c_in / self.spec.groups
    }
    fn cout_g(&self) -> usize {
        self.c_out / self.spec.groups
    }
    fn k(&self) -> usize {
        self.cin_g() * self.spec.kernel_h * self.spec.kernel_w
    }
    fn is_depthwise(&self) -> bool {
        self.spec.groups == self.c_in && self.c_in == self.c_out
    }
}

/// Validates a forward convolution of `x` (conv input) with `w`.
fn geometry(op: &'static str, x_dims: [usize; 4], w: &Tensor, spec: ConvSpec) -> Result<Geometry> {
    spec.validate(op)?;
    let [n, c_in, h, wd] = x_dims;
    let [c_out, cin_g, kh, kw] = w.dims4();
    if w.rank() != 4 {
        return Err(Error::invalid(op, "weight must be rank 4 (C_out, C_in/groups, kh, kw)"));
    }
    ensure_dim(op, "kernel_h", spec.kernel_h, kh)?;
    ensure_dim(op, "kernel_w", spec.kernel_w, kw)?;
    if c_in % spec.groups != 0 {
        return Err(Error::invalid(op, format!("groups {} do not divide input channels {c_in}", spec.groups)));
    }
    if c_out % spec.groups != 0 {
        return Err(Error::invalid(op, format!("groups {} do not divide output channels {c_out}", spec.groups)));
    }
    ensure_dim(op, "weight input channels", c_in / spec.groups, cin_g)?;
    let (oh, ow) = spec.output_size(h, wd)?;
    Ok(Geometry {
        n,
        c_in,
        c_out,
        h,
        w: wd,
        oh,
        ow,
        spec,
    })
}

fn check_bias(op: &'static str, b: Option<&Tensor>, channels: usize) -> Result<()> {
    if let Some(b) = b {
        ensure_dim(op, "bias length", channels, b.len())?;
    }
    Ok(())
}

fn add_bias(out: &mut Tensor, b: Option<&Tensor>) {
    let Some(b) = b else { return };
    let [n, c, _, _] = out.dims4();
    for ni in 0..n {
        for ci in 0..c {
            let bv = b.data()[ci];
            for v in out.plane_mut(ni, ci) {
                *v += bv;
            }
        }
    }
}

/// Range of output indices `o` for which `o·stride − pad + tap` lies in `[0, len)`.
#[inline]
fn valid_range(out_len: usize, len: usize, stride: usize, pad: usize, tap: usize) -> (usize, usize) {
    // o·s + tap − pad >= 0  and  o·s + tap − pad < len
    let lo = if tap >= pad { 0 } else { (pad - tap).div_ceil(stride).min(out_len) };
    let hi = if len + pad > tap {
        ((len + pad - tap - 1) / stride + 1).min(out_len)
    } else {
        0
    };
    (lo, hi.max(lo))
}

/// Unfolds one group of one sample into a `(cin_g·kh·kw) × (oh·ow)` column matrix.
fn im2col(x: &[f64], g: &Geometry, col: &mut [f64]) {
    let s = g.spec;
    let p = g.oh * g.ow;
    let mut row = 0;
    for ci in 0..g.cin_g() {
        let plane = &x[ci * g.h * g.w..(ci + 1) * g.h * g.w];
        for ky in 0..s.kernel_h {
            for kx in 0..s.kernel_w {
                let dst = &mut col[row * p..(row + 1) * p];
                row += 1;
                dst.fill(0.0);
                let (ylo, yhi) = valid_range(g.oh, g.h, s.stride, s.pad, ky * s.dilation);
                let (xlo, xhi) = valid_range(g.ow, g.w, s.stride, s.pad, kx * s.dilation);
                if xlo == xhi {
                    continue;
                }
                for oy in ylo..yhi {
                    let iy = oy * s.stride + ky * s.dilation - s.pad;
                    let src = &plane[iy * g.w..(iy + 1) * g.w];
                    let drow = &mut dst[oy * g.ow..(oy + 1) * g.ow];
                    if s.stride == 1 {
                        let ix0 = xlo + kx * s.dilation - s.pad;
                        drow[xlo..xhi].copy_from_slice(&src[ix0..ix0 + (xhi - xlo)]);
                    } else {
                        for ox in xlo..xhi {
                            drow[ox] = src[ox * s.stride + kx * s.dilation - s.pad];
                        }
                    }
                }
            }
        }
    }
}

/// Scatter-adds a column matrix back onto one group of one sample (adjoint of [`im2col`]).
fn col2im(col: &[f64], g: &Geometry, x: &mut [f64]) {
    let s = g.spec;
    let p = g.oh * g.ow;
    let mut row = 0;
    for ci in 0..g.cin_g() {
        let plane = &mut x[ci * g.h * g.w..(ci + 1) * g.h * g.w];
        for ky in 0..s.kernel_h {
            for kx in 0..s.kernel_w {
                let src = &col[row * p..(row + 1) * p];
                row += 1;
                let (ylo, yhi) = valid_range(g.oh, g.h, s.stride, s.pad, ky * s.dilation);
                let (xlo, xhi) = valid_range(g.ow, g.w, s.stride, s.pad, kx * s.dilation);
                if xlo == xhi {
                    continue;
                }
                for oy in ylo..yhi {
                    let iy = oy * s.stride + ky * s.dilation - s.pad;
                    let drow = &mut plane[iy * g.w..(iy + 1) * g.w];
                    let srow = &src[oy * g.ow..(oy + 1) * g.ow];
                    if s.stride == 1 {
                        let ix0 = xlo + kx * s.dilation - s.pad;
                        for (d, v) in drow[ix0..ix0 + (xhi - xlo)].iter_mut().zip(&srow[xlo..xhi]) {
                            *d += v;
                        }
                    } else {
                        for ox in xlo..xhi {
                            drow[ox * s.stride + kx * s.dilation - s.pad] += srow[ox];
                        }
                    }
                }
            }
        }
    }
}

/// `c[m×n] (+)= a · b` with explicit strides.
#[allow(clippy::too_many_arguments)]
fn gemm(
    m: usize,
    k: usize,
    n: usize,
    a: &[f64],
    (rsa, csa): (isize, isize),
    b: &[f64],
    (rsb, csb): (isize, isize),
    c: &mut [f64],
    accumulate: bool,
) {
    debug_assert!(c.len() >= m * n);
    let beta = if accumulate { 1.0 } else { 0.0 };
    // SAFETY: the callers size a, b and c for the given dimensions and strides.
    unsafe {
        matrixmultiply::dgemm(
            m,
            k,
            n,
            1.0,
            a.as_ptr(),
            rsa,
            csa,
            b.as_ptr(),
            rsb,
            csb,
            beta,
            c.as_mut_ptr(),
            n as isize,
            1,
        );
    }
}

/// Cross-correlation with zero padding; no kernel flip.
pub fn conv2d(x: &Tensor, w: &Tensor, b: Option<&Tensor>, spec: ConvSpec) -> Result<Tensor> {
    let g = geometry("conv2d", x.dims4(), w, spec)?;
    check_bias("conv2d", b, g.c_out)?;
    let mut out = Tensor::zeros(&[g.n, g.c_out, g.oh, g.ow]);
    if g.is_depthwise() {
        depthwise_forward(x, w, &g, &mut out);
    } else {
        dense_forward(x, w, &g, &mut out);
    }
    add_bias(&mut out, b);
    Ok(out)
}

fn dense_forward(x: &Tensor, w: &Tensor, g: &Geometry, out: &mut Tensor) {
    let p = g.oh * g.ow;
    let k = g.k();
    let mut col = vec![0.0; k * p];
    let in_len = g.cin_g() * g.h * g.w;
    let out_len = g.cout_g() * p;
    for ni in 0..g.n {
        for gi in 0..g.spec.groups {
            let xs = x.offset4(ni, gi * g.cin_g(), 0, 0);
            im2col(&x.data()[xs..xs + in_len], g, &mut col);
            let wg = &w.data()[gi * g.cout_g() * k..(gi + 1) * g.cout_g() * k];
            let os = out.offset4(ni, gi * g.cout_g(), 0, 0);
            gemm(
                g.cout_g(),
                k,
                p,
                wg,
                (k as isize, 1),
                &col,
                (p as isize, 1),
                &mut out.data_mut()[os..os + out_len],
                false,
            );
        }
    }
}

fn depthwise_forward(x: &Tensor, w: &Tensor, g: &Geometry, out: &mut Tensor) {
    let s = g.spec;
    for ni in 0..g.n {
        for ci in 0..g.c_in {
            let src = x.plane(ni, ci);
            let taps = &w.data()[ci * s.kernel_h * s.kernel_w..(ci + 1) * s.kernel_h * s.kernel_w];
            let dst = out.plane_mut(ni, ci);
            for ky in 0..s.kernel_h {
                let (ylo, yhi) = valid_range(g.oh, g.h, s.stride, s.pad, ky * s.dilation);
                for kx in 0..s.kernel_w {
                    let wv = taps[ky * s.kernel_w + kx];
                    let (xlo, xhi) = valid_range(g.ow, g.w, s.stride, s.pad, kx * s.dilation);
                    if xlo == xhi {
                        continue;
                    }
                    for oy in ylo..yhi {
                        let iy = oy * s.stride + ky * s.dilation - s.pad;
                        let srow = &src[iy * g.w..(iy + 1) * g.w];
                        let drow = &mut dst[oy * g.ow..(oy + 1) * g.ow];
                        if s.stride == 1 {
                            let ix0 = xlo + kx * s.dilation - s.pad;
                            for (d, v) in drow[xlo..xhi].iter_mut().zip(&srow[ix0..ix0 + (xhi - xlo)]) {
                                *d += wv * v;
                            }
                        } else {
                            for ox in xlo..xhi {
                                drow[ox] += wv * srow[ox * s.stride + kx * s.dilation - s.pad];
                            }
                        }
                    }
                }
            }
        }
    }
}

/// Transposed convolution with the output size given by
/// [`ConvSpec::transposed_output_size`].
pub fn transposed_conv2d(x: &Tensor, w: &Tensor, b: Option<&Tensor>, spec: ConvSpec) -> Result<Tensor> {
    let [_, _, h, wd] = x.dims4();
    let (oh, ow) = spec.transposed_output_size(h, wd)?;
    transposed_conv2d_to(x, w, b, spec, (oh, ow))
}

/// Transposed convolution producing an explicit `out_size`.
///
/// `out_size` must be a size whose forward convolution yields `x`'s spatial
/// extent; this resolves the ambiguity of strided convolutions.
pub fn transposed_conv2d_to(
    x: &Tensor,
    w: &Tensor,
    b: Option<&Tensor>,
    spec: ConvSpec,
    out_size: (usize, usize),
) -> Result<Tensor> {
    let op = "transposed_conv2d";
    let [n, c_t, h, wd] = x.dims4();
    let [w_out, cin_g, _, _] = w.dims4();
    // In forward-conv terms: input = our output, output = our input.
    ensure_dim(op, "input channels", w_out, c_t)?;
    let c_out = cin_g * spec.groups;
    let g = geometry(op, [n, c_out, out_size.0, out_size.1], w, spec)?;
    ensure_dim(op, "input height", g.oh, h)?;
    ensure_dim(op, "input width", g.ow, wd)?;
    check_bias(op, b, c_out)?;
    let mut out = Tensor::zeros(&[n, c_out, out_size.0, out_size.1]);
    if g.is_depthwise() {
        depthwise_adjoint(x, w, &g, &mut out);
    } else {
        dense_adjoint(x, w, &g, &mut out);
    }
    add_bias(&mut out, b);
    Ok(out)
}

fn dense_adjoint(gy: &Tensor, w: &Tensor, g: &Geometry, out: &mut Tensor) {
    let p = g.oh * g.ow;
    let k = g.k();
    let mut col = vec![0.0; k * p];
    let in_len = g.cin_g() * g.h * g.w;
    for ni in 0..g.n {
        for gi in 0..g.spec.groups {
            let wg = &w.data()[gi * g.cout_g() * k..(gi + 1) * g.cout_g() * k];
            let ys = gy.offset4(ni, gi * g.cout_g(), 0, 0);
            let yg = &gy.data()[ys..ys + g.cout_g() * p];
            // col (k×p) = wgᵀ (k×cout_g) · yg (cout_g×p)
            gemm(k, g.cout_g(), p, wg, (1, k as isize), yg, (p as isize, 1), &mut col, false);
            let xs = out.offset4(ni, gi * g.cin_g(), 0, 0);
            col2im(&col, g, &mut out.data_mut()[xs..xs + in_len]);
        }
    }
}

fn depthwise_adjoint(gy: &Tensor, w: &Tensor, g: &Geometry, out: &mut Tensor) {
    let s = g.spec;
    for ni in 0..g.n {
        for ci in 0..g.c_in {
            let src = gy.plane(ni, ci);
            let taps = &w.data()[ci * s.kernel_h * s.kernel_w..(ci + 1) * s.kernel_h * s.kernel_w];
            let dst = out.plane_mut(ni, ci);
            for ky in 0..s.kernel_h {
                let (ylo, yhi) = valid_range(g.oh, g.h, s.stride, s.pad, ky * s.dilation);
                for kx in 0..s.kernel_w {
                    let wv = taps[ky * s.kernel_w + kx];
                    let (xlo, xhi) = valid_range(g.ow, g.w, s.stride, s.pad, kx * s.dilation);
                    if xlo == xhi {
                        continue;
                    }
                    for oy in ylo..yhi {
                        let iy = oy * s.stride + ky * s.dilation - s.pad;
                        let srow = &src[oy * g.ow..(oy + 1) * g.ow];
                        let drow = &mut dst[iy * g.w..(iy + 1) * g.w];
                        for ox in xlo..xhi {
                            drow[ox * s.stride + kx * s.dilation - s.pad] += wv * srow[ox];
                        }
                    }
                }
            }
        }
    }
}

/// Gradient of `⟨conv2d(x, w), gy⟩` with respect to `w`.
pub fn conv2d_grad_weight(x: &Tensor, gy: &Tensor, w_shape: &[usize], spec: ConvSpec) -> Result<Tensor> {
    let op = "conv2d_grad_weight";
    let w_probe = Tensor::zeros(w_shape);
    let g = geometry(op, x.dims4(), &w_probe, spec)?;
    let [gn, gc, gh, gw] = gy.dims4();
    ensure_dim(op, "batch", g.n, gn)?;
    ensure_dim(op, "output channels", g.c_out, gc)?;
    ensure_dim(op, "output height", g.oh, gh)?;
    ensure_dim(op, "output width", g.ow, gw)?;
    let mut gw_t = w_probe;
    if g.is_depthwise() {
        depthwise_grad_weight(x, gy, &g, &mut gw_t);
        return Ok(gw_t);
    }
    let p = g.oh * g.ow;
    let k = g.k();
    let mut col = vec![0.0; k * p];
    let in_len = g.cin_g() * g.h * g.w;
    for ni in 0..g.n {
        for gi in 0..g.spec.groups {
            let xs = x.offset4(ni, gi * g.cin_g(), 0, 0);
            im2col(&x.data()[xs..xs + in_len], &g, &mut col);
            let ys = gy.offset4(ni, gi * g.cout_g(), 0, 0);
            let yg = &gy.data()[ys..ys + g.cout_g() * p];
            let wg = &mut gw_t.data_mut()[gi * g.cout_g() * k..(gi + 1) * g.cout_g() * k];
            // wg (cout_g×k) += yg (cout_g×p) · colᵀ (p×k)
            gemm(g.cout_g(), p, k, yg, (p as isize, 1), &col, (1, p as isize), wg, true);
        }
    }
    Ok(gw_t)
}

fn depthwise_grad_weight(x: &Tensor, gy: &Tensor, g: &Geometry, gw: &mut Tensor) {
    let s = g.spec;
    let kk = s.kernel_h * s.kernel_w;
    for ni in 0..g.n {
        for ci in 0..g.c_in {
            let src = x.plane(ni, ci);
            let up = gy.plane(ni, ci);
            for ky in 0..s.kernel_h {
                let (ylo, yhi) = valid_range(g.oh, g.h, s.stride, s.pad, ky * s.dilation);
                for kx in 0..s.kernel_w {
                    let (xlo, xhi) = valid_range(g.ow, g.w, s.stride, s.pad, kx * s.dilation);
                    if xlo == xhi {
                        continue;
                    }
                    let mut acc = 0.0;
                    for oy in ylo..yhi {
                        let iy = oy * s.stride + ky * s.dilation - s.pad;
                        for ox in xlo..xhi {
                            acc += up[oy * g.ow + ox] * src[iy * g.w + ox * s.stride + kx * s.dilation - s.pad];
                        }
                    }
                    gw.data_mut()[ci * kk + ky * s.kernel_w + kx] += acc;
                }
            }
        }
    }
}
