//! Differentiable primitives on single-sample CHW feature maps.

use crate::scalar::Real;

/// Channel-major feature map: `data[(c * height + r) * width + col]`.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMap<T> {
    pub channels: usize,
    pub height: usize,
    pub width: usize,
    pub data: Vec<T>,
}

impl<T: Real> FeatureMap<T> {
    pub fn zeros(channels: usize, height: usize, width: usize) -> Self {
        Self {
            channels,
            height,
            width,
            data: vec![T::zero(); channels * height * width],
        }
    }

    #[inline]
    pub fn plane(&self, c: usize) -> &[T] {
        let n = self.height * self.width;
        &self.data[c * n..(c + 1) * n]
    }

    #[inline]
    pub fn plane_mut(&mut self, c: usize) -> &mut [T] {
        let n = self.height * self.width;
        &mut self.data[c * n..(c + 1) * n]
    }

    pub fn same_shape(&self, other: &Self) -> bool {
        (self.channels, self.height, self.width) == (other.channels, other.height, other.width)
    }

    pub fn zeros_like(&self) -> Self {
        Self::zeros(self.channels, self.height, self.width)
    }
}

#[inline]
pub fn conv_out_dim(n: usize, stride: usize) -> usize {
    (n - 1) / stride + 1
}

/// Unfolds 3x3 zero-padded patches: `cols[(ci*9 + ky*3 + kx), oy*ow + ox]`.
fn im2col<T: Real>(x: &FeatureMap<T>, stride: usize) -> (Vec<T>, usize, usize) {
    let (oh, ow) = (
        conv_out_dim(x.height, stride),
        conv_out_dim(x.width, stride),
    );
    let p = oh * ow;
    let mut cols = vec![T::zero(); x.channels * 9 * p];
    for ci in 0..x.channels {
        let plane = x.plane(ci);
        for ky in 0..3 {
            for kx in 0..3 {
                let row = &mut cols[(ci * 9 + ky * 3 + kx) * p..][..p];
                for oy in 0..oh {
                    let iy = (oy * stride + ky) as isize - 1;
                    if iy < 0 || iy >= x.height as isize {
                        continue;
                    }
                    let src = &plane[iy as usize * x.width..][..x.width];
                    let dst = &mut row[oy * ow..][..ow];
                    if stride == 1 {
                        // ix = ox + kx - 1
                        let (lo, hi) = (
                            if kx == 0 { 1 } else { 0 },
                            if kx == 2 { ow - 1 } else { ow },
                        );
                        let off = kx as isize - 1;
                        for ox in lo..hi {
                            dst[ox] = src[(ox as isize + off) as usize];
                        }
                    } else {
                        for (ox, d) in dst.iter_mut().enumerate() {
                            let ix = (ox * stride + kx) as isize - 1;
                            if ix >= 0 && (ix as usize) < x.width {
                                *d = src[ix as usize];
                            }
                        }
                    }
                }
            }
        }
    }
    (cols, oh, ow)
}

/// Adjoint of [`im2col`]: scatters patch gradients back onto the input grid.
fn col2im<T: Real>(
    cols: &[T],
    channels: usize,
    height: usize,
    width: usize,
    stride: usize,
) -> FeatureMap<T> {
    let (oh, ow) = (conv_out_dim(height, stride), conv_out_dim(width, stride));
    let p = oh * ow;
    let mut out = FeatureMap::zeros(channels, height, width);
    for ci in 0..channels {
        let plane = out.plane_mut(ci);
        for ky in 0..3 {
            for kx in 0..3 {
                let row = &cols[(ci * 9 + ky * 3 + kx) * p..][..p];
                for oy in 0..oh {
                    let iy = (oy * stride + ky) as isize - 1;
                    if iy < 0 || iy >= height as isize {
                        continue;
                    }
                    let dst = &mut plane[iy as usize * width..][..width];
                    let src = &row[oy * ow..][..ow];
                    for (ox, &g) in src.iter().enumerate() {
                        let ix = (ox * stride + kx) as isize - 1;
                        if ix >= 0 && (ix as usize) < width {
                            dst[ix as usize] += g;
                        }
                    }
                }
            }
        }
    }
    out
}

/// 3x3 convolution, zero padding 1. `weight` is `[cout, cin, 3, 3]`.
pub fn conv3x3<T: Real>(
    x: &FeatureMap<T>,
    weight: &[T],
    bias: &[T],
    stride: usize,
) -> FeatureMap<T> {
    let cout = bias.len();
    let k = x.channels * 9;
    debug_assert_eq!(weight.len(), cout * k);
    let (cols, oh, ow) = im2col(x, stride);
    let p = oh * ow;
    let mut out = FeatureMap::zeros(cout, oh, ow);
    for (co, &b) in bias.iter().enumerate() {
        out.plane_mut(co).iter_mut().for_each(|v| *v = b);
    }
    T::gemm(
        cout,
        k,
        p,
        T::one(),
        weight,
        (k as isize, 1),
        &cols,
        (p as isize, 1),
        T::one(),
        &mut out.data,
        (p as isize, 1),
    );
    out
}

pub struct ConvGrads<T> {
    pub input: FeatureMap<T>,
    pub weight: Vec<T>,
    pub bias: Vec<T>,
}

pub fn conv3x3_backward<T: Real>(
    x: &FeatureMap<T>,
    weight: &[T],
    grad_out: &FeatureMap<T>,
    stride: usize,
) -> ConvGrads<T> {
    let cout = grad_out.channels;
    let k = x.channels * 9;
    let (cols, oh, ow) = im2col(x, stride);
    let p = oh * ow;
    debug_assert_eq!((oh, ow), (grad_out.height, grad_out.width));

    let bias = (0..cout)
        .map(|c| grad_out.plane(c).iter().copied().sum())
        .collect();

    // dW[cout, k] = dY[cout, p] * cols^T[p, k]
    let mut dw = vec![T::zero(); cout * k];
    T::gemm(
        cout,
        p,
        k,
        T::one(),
        &grad_out.data,
        (p as isize, 1),
        &cols,
        (1, p as isize),
        T::zero(),
        &mut dw,
        (k as isize, 1),
    );

    // dCols[k, p] = W^T[k, cout] * dY[cout, p]
    let mut dcols = vec![T::zero(); k * p];
    T::gemm(
        k,
        cout,
        p,
        T::one(),
        weight,
        (1, k as isize),
        &grad_out.data,
        (p as isize, 1),
        T::zero(),
        &mut dcols,
        (p as isize, 1),
    );
    ConvGrads {
        input: col2im(&dcols, x.channels, x.height, x.width, stride),
        weight: dw,
        bias,
    }
}

pub fn relu<T: Real>(x: &FeatureMap<T>) -> FeatureMap<T> {
    FeatureMap {
        data: x
            .data
            .iter()
            .map(|&v| if v > T::zero() { v } else { T::zero() })
            .collect(),
        ..*x
    }
}

/// Passes gradient where the pre-activation was strictly positive.
pub fn relu_backward<T: Real>(pre: &FeatureMap<T>, grad: &FeatureMap<T>) -> FeatureMap<T> {
    FeatureMap {
        data: pre
            .data
            .iter()
            .zip(&grad.data)
            .map(|(&p, &g)| if p > T::zero() { g } else { T::zero() })
            .collect(),
        ..*pre
    }
}

pub fn add<T: Real>(a: &FeatureMap<T>, b: &FeatureMap<T>) -> FeatureMap<T> {
    debug_assert!(a.same_shape(b));
    FeatureMap {
        data: a.data.iter().zip(&b.data).map(|(&x, &y)| x + y).collect(),
        ..*a
    }
}

/// Nearest-neighbor 2x upsampling.
pub fn upsample2<T: Real>(x: &FeatureMap<T>) -> FeatureMap<T> {
    let (h, w) = (x.height * 2, x.width * 2);
    let mut out = FeatureMap::zeros(x.channels, h, w);
    for c in 0..x.channels {
        let src = x.plane(c);
        let dst = out.plane_mut(c);
        for r in 0..h {
            for col in 0..w {
                dst[r * w + col] = src[(r / 2) * x.width + col / 2];
            }
        }
    }
    out
}

pub fn upsample2_backward<T: Real>(grad: &FeatureMap<T>) -> FeatureMap<T> {
    let (h, w) = (grad.height / 2, grad.width / 2);
    let mut out = FeatureMap::zeros(grad.channels, h, w);
    for c in 0..grad.channels {
        let src = grad.plane(c);
        let dst = out.plane_mut(c);
        for r in 0..grad.height {
            for col in 0..grad.width {
                dst[(r / 2) * w + col / 2] += src[r * grad.width + col];
            }
        }
    }
    out
}

#[inline]
pub fn logistic<T: Real>(v: T) -> T {
    T::one() / (T::one() + (-v).exp())
}

/// Squeeze-and-excitation weights for one block.
pub struct SeWeights<'a, T> {
    /// `[hidden, channels]`
    pub w1: &'a [T],
    /// `[hidden, metadata_dim]`, present for metadata injection.
    pub w1_meta: Option<&'a [T]>,
    pub b1: &'a [T],
    /// `[channels, hidden]`
    pub w2: &'a [T],
    pub b2: &'a [T],
}

/// Intermediate values of an SE block kept for the backward pass.
#[derive(Debug, Clone, PartialEq)]
pub struct SeCache<T> {
    pub squeeze: Vec<T>,
    pub hidden_pre: Vec<T>,
    pub hidden: Vec<T>,
    pub excitation: Vec<T>,
}

pub fn se_forward<T: Real>(
    x: &FeatureMap<T>,
    meta: Option<&[T]>,
    w: &SeWeights<T>,
) -> (FeatureMap<T>, SeCache<T>) {
    let c = x.channels;
    let hidden_n = w.b1.len();
    let n = T::of((x.height * x.width) as f64);
    let squeeze: Vec<T> = (0..c)
        .map(|ch| x.plane(ch).iter().copied().sum::<T>() / n)
        .collect();
    let mut hidden_pre = Vec::with_capacity(hidden_n);
    for j in 0..hidden_n {
        let mut acc = w.b1[j];
        for (wv, s) in w.w1[j * c..(j + 1) * c].iter().zip(&squeeze) {
            acc += *wv * *s;
        }
        if let (Some(wm), Some(m)) = (w.w1_meta, meta) {
            let d = m.len();
            for (wv, mv) in wm[j * d..(j + 1) * d].iter().zip(m) {
                acc += *wv * *mv;
            }
        }
        hidden_pre.push(acc);
    }
    let hidden: Vec<T> = hidden_pre.iter().map(|&v| v.max(T::zero())).collect();
    let excitation: Vec<T> = (0..c)
        .map(|ch| {
            let mut acc = w.b2[ch];
            for (wv, h) in w.w2[ch * hidden_n..(ch + 1) * hidden_n].iter().zip(&hidden) {
                acc += *wv * *h;
            }
            logistic(acc)
        })
        .collect();
    let mut out = x.zeros_like();
    for ch in 0..c {
        let e = excitation[ch];
        for (o, &v) in out.plane_mut(ch).iter_mut().zip(x.plane(ch)) {
            *o = e * v;
        }
    }
    (
        out,
        SeCache {
            squeeze,
            hidden_pre,
            hidden,
            excitation,
        },
    )
}

pub struct SeGrads<T> {
    pub input: FeatureMap<T>,
    pub meta: Option<Vec<T>>,
    pub w1: Vec<T>,
    pub w1_meta: Option<Vec<T>>,
    pub b1: Vec<T>,
    pub w2: Vec<T>,
    pub b2: Vec<T>,
}

pub fn se_backward<T: Real>(
    x: &FeatureMap<T>,
    meta: Option<&[T]>,
    w: &SeWeights<T>,
    cache: &SeCache<T>,
    grad: &FeatureMap<T>,
) -> SeGrads<T> {
    let c = x.channels;
    let hidden_n = w.b1.len();
    let n = T::of((x.height * x.width) as f64);

    let mut dx = grad.zeros_like();
    let mut de = vec![T::zero(); c];
    for ch in 0..c {
        let e = cache.excitation[ch];
        let mut acc = T::zero();
        for ((d, &g), &v) in dx
            .plane_mut(ch)
            .iter_mut()
            .zip(grad.plane(ch))
            .zip(x.plane(ch))
        {
            *d = e * g;
            acc += g * v;
        }
        de[ch] = acc;
    }
    let dpre2: Vec<T> = de
        .iter()
        .zip(&cache.excitation)
        .map(|(&d, &e)| d * e * (T::one() - e))
        .collect();
    let b2 = dpre2.clone();
    let mut w2 = vec![T::zero(); c * hidden_n];
    let mut dhidden = vec![T::zero(); hidden_n];
    for ch in 0..c {
        for j in 0..hidden_n {
            w2[ch * hidden_n + j] = dpre2[ch] * cache.hidden[j];
            dhidden[j] += w.w2[ch * hidden_n + j] * dpre2[ch];
        }
    }
    let dpre1: Vec<T> = dhidden
        .iter()
        .zip(&cache.hidden_pre)
        .map(|(&g, &p)| if p > T::zero() { g } else { T::zero() })
        .collect();
    let b1 = dpre1.clone();
    let mut w1 = vec![T::zero(); hidden_n * c];
    let mut dsqueeze = vec![T::zero(); c];
    for j in 0..hidden_n {
        for ch in 0..c {
            w1[j * c + ch] = dpre1[j] * cache.squeeze[ch];
            dsqueeze[ch] += w.w1[j * c + ch] * dpre1[j];
        }
    }
    let (w1_meta, dmeta) = match (w.w1_meta, meta) {
        (Some(wm), Some(m)) => {
            let d = m.len();
            let mut gw = vec![T::zero(); hidden_n * d];
            let mut gm = vec![T::zero(); d];
            for j in 0..hidden_n {
                for k in 0..d {
                    gw[j * d + k] = dpre1[j] * m[k];
                    gm[k] += wm[j * d + k] * dpre1[j];
                }
            }
            (Some(gw), Some(gm))
        }
        _ => (None, None),
    };
    for ch in 0..c {
        let g = dsqueeze[ch] / n;
        for d in dx.plane_mut(ch) {
            *d += g;
        }
    }
    SeGrads {
        input: dx,
        meta: dmeta,
        w1,
        w1_meta,
        b1,
        w2,
        b2,
    }
}
