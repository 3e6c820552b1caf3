//! Layer primitives on `time x channel` matrices, with their backward
//! passes.

use super::TcnError;

/// Row-major `rows x cols` matrix; rows are time steps.
#[derive(Debug, Clone, PartialEq)]
pub struct Mat {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<f64>,
}

impl Mat {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { rows, cols, data: vec![0.0; rows * cols] }
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<f64>) -> Self {
        assert_eq!(data.len(), rows * cols, "matrix data length");
        Self { rows, cols, data }
    }

    pub fn row(&self, t: usize) -> &[f64] {
        &self.data[t * self.cols..(t + 1) * self.cols]
    }

    pub fn row_mut(&mut self, t: usize) -> &mut [f64] {
        &mut self.data[t * self.cols..(t + 1) * self.cols]
    }

    pub fn add_assign(&mut self, other: &Mat) {
        debug_assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        self.data.iter_mut().zip(&other.data).for_each(|(a, b)| *a += b);
    }
}

fn extent(rows: usize, cols: usize, rs: isize, cs: isize) -> usize {
    (rows - 1) * rs as usize + (cols - 1) * cs as usize + 1
}

/// `c += a * b` with `a` as `m x k`, `b` as `k x n` and `c` as `m x n`,
/// all described by row and column strides.
#[allow(clippy::too_many_arguments)]
fn gemm_acc(
    m: usize,
    k: usize,
    n: usize,
    a: &[f64],
    rsa: isize,
    csa: isize,
    b: &[f64],
    rsb: isize,
    csb: isize,
    c: &mut [f64],
    rsc: isize,
) {
    if m == 0 || k == 0 || n == 0 {
        return;
    }
    assert!(extent(m, k, rsa, csa) <= a.len());
    assert!(extent(k, n, rsb, csb) <= b.len());
    assert!(extent(m, n, rsc, 1) <= c.len());
    // SAFETY: the asserts above keep every strided access inside the slices.
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
            1.0,
            c.as_mut_ptr(),
            rsc,
            1,
        );
    }
}

/// Output rows `t0..t1` read input rows shifted by `offset` for one tap.
fn tap_range(t: usize, offset: isize) -> Option<(usize, usize)> {
    let t = t as isize;
    let t0 = (-offset).max(0);
    let t1 = (t - offset).min(t);
    (t1 > t0).then_some((t0 as usize, t1 as usize))
}

fn tap_offset(k: usize, width: usize, dilation: usize) -> isize {
    (k as isize - ((width - 1) / 2) as isize) * dilation as isize
}

/// Same-length temporal convolution with zero padding. `kernel` is laid
/// out `width x cin x cout`; tap `k` reads frame `t + (k - (width-1)/2) * dilation`.
pub fn conv1d(x: &Mat, kernel: &[f64], bias: &[f64], width: usize, dilation: usize) -> Result<Mat, TcnError> {
    let (cin, cout) = (x.cols, bias.len());
    if width == 0 || dilation == 0 || kernel.len() != width * cin * cout {
        return Err(TcnError::ShapeMismatch(format!(
            "kernel of {} values for width {width}, {cin} -> {cout} channels, dilation {dilation}",
            kernel.len()
        )));
    }
    let mut y = Mat::zeros(x.rows, cout);
    for t in 0..x.rows {
        y.row_mut(t).copy_from_slice(bias);
    }
    for k in 0..width {
        let o = tap_offset(k, width, dilation);
        let Some((t0, t1)) = tap_range(x.rows, o) else { continue };
        let src = (t0 as isize + o) as usize * cin;
        gemm_acc(
            t1 - t0,
            cin,
            cout,
            &x.data[src..],
            cin as isize,
            1,
            &kernel[k * cin * cout..(k + 1) * cin * cout],
            cout as isize,
            1,
            &mut y.data[t0 * cout..],
            cout as isize,
        );
    }
    Ok(y)
}

/// Accumulates kernel and bias gradients; returns the input gradient when
/// `want_dx` is set.
pub fn conv1d_backward(
    x: &Mat,
    kernel: &[f64],
    width: usize,
    dilation: usize,
    dy: &Mat,
    dkernel: &mut [f64],
    dbias: &mut [f64],
    want_dx: bool,
) -> Option<Mat> {
    let (cin, cout) = (x.cols, dy.cols);
    for t in 0..dy.rows {
        dbias.iter_mut().zip(dy.row(t)).for_each(|(b, g)| *b += g);
    }
    let mut dx = want_dx.then(|| Mat::zeros(x.rows, cin));
    for k in 0..width {
        let o = tap_offset(k, width, dilation);
        let Some((t0, t1)) = tap_range(x.rows, o) else { continue };
        let m = t1 - t0;
        let src = (t0 as isize + o) as usize * cin;
        let wk = k * cin * cout..(k + 1) * cin * cout;
        // dW_k += X_shift^T dY
        gemm_acc(
            cin,
            m,
            cout,
            &x.data[src..],
            1,
            cin as isize,
            &dy.data[t0 * cout..],
            cout as isize,
            1,
            &mut dkernel[wk.clone()],
            cout as isize,
        );
        // dX_shift += dY W_k^T
        if let Some(dx) = dx.as_mut() {
            gemm_acc(
                m,
                cout,
                cin,
                &dy.data[t0 * cout..],
                cout as isize,
                1,
                &kernel[wk],
                1,
                cout as isize,
                &mut dx.data[src..],
                cin as isize,
            );
        }
    }
    dx
}

/// Width-2 max pooling over time. Returns the pooled matrix and, per
/// output element, the source row; ties go to the earlier row.
pub fn maxpool2(x: &Mat) -> (Mat, Vec<usize>) {
    let rows = x.rows / 2;
    let mut y = Mat::zeros(rows, x.cols);
    let mut arg = vec![0; rows * x.cols];
    for t in 0..rows {
        let (a, b) = (x.row(2 * t), x.row(2 * t + 1));
        for c in 0..x.cols {
            let i = t * x.cols + c;
            if b[c] > a[c] {
                y.data[i] = b[c];
                arg[i] = 2 * t + 1;
            } else {
                y.data[i] = a[c];
                arg[i] = 2 * t;
            }
        }
    }
    (y, arg)
}

pub fn maxpool2_backward(dy: &Mat, arg: &[usize], input_rows: usize) -> Mat {
    let mut dx = Mat::zeros(input_rows, dy.cols);
    for (i, g) in dy.data.iter().enumerate() {
        dx.data[arg[i] * dy.cols + i % dy.cols] += g;
    }
    dx
}

/// Repeat every row twice.
pub fn upsample2(x: &Mat) -> Mat {
    let mut y = Mat::zeros(2 * x.rows, x.cols);
    for t in 0..x.rows {
        y.row_mut(2 * t).copy_from_slice(x.row(t));
        y.row_mut(2 * t + 1).copy_from_slice(x.row(t));
    }
    y
}

pub fn upsample2_backward(dy: &Mat) -> Mat {
    let mut dx = Mat::zeros(dy.rows / 2, dy.cols);
    for t in 0..dx.rows {
        let (a, b) = (dy.row(2 * t), dy.row(2 * t + 1));
        dx.row_mut(t).iter_mut().zip(a.iter().zip(b)).for_each(|(d, (a, b))| *d = a + b);
    }
    dx
}

pub fn relu(mut x: Mat) -> Mat {
    x.data.iter_mut().for_each(|v| *v = v.max(0.0));
    x
}

/// Gradient through ReLU given its output.
pub fn relu_backward(mut dy: Mat, out: &Mat) -> Mat {
    dy.data.iter_mut().zip(&out.data).for_each(|(g, &o)| {
        if o <= 0.0 {
            *g = 0.0
        }
    });
    dy
}

pub fn sigmoid(v: f64) -> f64 {
    1.0 / (1.0 + (-v).exp())
}

/// `tanh(a[:, :f]) * sigmoid(a[:, f:])`; also returns both halves.
pub fn gated(a: &Mat) -> (Mat, Mat, Mat) {
    let f = a.cols / 2;
    let mut th = Mat::zeros(a.rows, f);
    let mut sg = Mat::zeros(a.rows, f);
    let mut z = Mat::zeros(a.rows, f);
    for t in 0..a.rows {
        let r = a.row(t);
        for c in 0..f {
            let i = t * f + c;
            th.data[i] = r[c].tanh();
            sg.data[i] = sigmoid(r[f + c]);
            z.data[i] = th.data[i] * sg.data[i];
        }
    }
    (z, th, sg)
}

pub fn gated_backward(dz: &Mat, th: &Mat, sg: &Mat) -> Mat {
    let f = dz.cols;
    let mut da = Mat::zeros(dz.rows, 2 * f);
    for t in 0..dz.rows {
        for c in 0..f {
            let i = t * f + c;
            let (g, h, s) = (dz.data[i], th.data[i], sg.data[i]);
            da.data[t * 2 * f + c] = g * s * (1.0 - h * h);
            da.data[t * 2 * f + f + c] = g * h * s * (1.0 - s);
        }
    }
    da
}

pub fn softmax_rows(logits: &Mat) -> Mat {
    let mut p = logits.clone();
    for t in 0..p.rows {
        let r = p.row_mut(t);
        let m = r.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let mut s = 0.0;
        for v in r.iter_mut() {
            *v = (*v - m).exp();
            s += *v;
        }
        r.iter_mut().for_each(|v| *v /= s);
    }
    p
}

/// Mean cross-entropy over the first `real` rows. Returns the loss, the
/// probabilities and the gradient with respect to the logits (zero on the
/// masked rows).
pub fn softmax_cross_entropy(logits: &Mat, labels: &[usize], real: usize) -> (f64, Mat, Mat) {
    let p = softmax_rows(logits);
    let mut d = p.clone();
    let mut loss = 0.0;
    let scale = 1.0 / real as f64;
    for t in 0..logits.rows {
        let row = d.row_mut(t);
        if t >= real {
            row.iter_mut().for_each(|v| *v = 0.0);
            continue;
        }
        let l = logits.row(t);
        let m = l.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let lse = m + l.iter().map(|v| (v - m).exp()).sum::<f64>().ln();
        loss += lse - l[labels[t]];
        row[labels[t]] -= 1.0;
        row.iter_mut().for_each(|v| *v *= scale);
    }
    (loss * scale, p, d)
}

/// Index of the largest entry per row; ties go to the lowest index.
pub fn argmax_rows(p: &Mat) -> Vec<usize> {
    (0..p.rows)
        .map(|t| {
            let r = p.row(t);
            let mut best = 0;
            for (c, &v) in r.iter().enumerate() {
                if v > r[best] {
                    best = c;
                }
            }
            best
        })
        .collect()
}
