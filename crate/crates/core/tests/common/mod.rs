//! Reference implementations shared by the integration tests. They are
//! deliberately naive and share no code with the library.
#![allow(dead_code)]

use rand::Rng;

/// Plain recursive edit distance.
pub fn lev_recursive(a: &[usize], b: &[usize]) -> usize {
    match (a.split_first(), b.split_first()) {
        (None, _) => b.len(),
        (_, None) => a.len(),
        (Some((x, ra)), Some((y, rb))) => {
            let sub = lev_recursive(ra, rb) + usize::from(x != y);
            sub.min(lev_recursive(ra, b) + 1).min(lev_recursive(a, rb) + 1)
        }
    }
}

/// Full-matrix edit distance, for sequences too long for the recursion.
pub fn lev_matrix(a: &[usize], b: &[usize]) -> usize {
    let mut d = vec![vec![0usize; b.len() + 1]; a.len() + 1];
    for (i, row) in d.iter_mut().enumerate() {
        row[0] = i;
    }
    for j in 0..=b.len() {
        d[0][j] = j;
    }
    for i in 1..=a.len() {
        for j in 1..=b.len() {
            let c = if a[i - 1] == b[j - 1] { 0 } else { 1 };
            d[i][j] = (d[i - 1][j - 1] + c).min(d[i - 1][j] + 1).min(d[i][j - 1] + 1);
        }
    }
    d[a.len()][b.len()]
}

/// `(class, first_frame, last_frame)` runs, inclusive.
pub fn runs(x: &[usize]) -> Vec<(usize, usize, usize)> {
    let mut out = Vec::new();
    let mut start = 0;
    for t in 1..=x.len() {
        if t == x.len() || x[t] != x[start] {
            out.push((x[start], start, t - 1));
            start = t;
        }
    }
    out
}

pub fn accuracy(p: &[usize], g: &[usize]) -> f64 {
    let mut hit = 0.0;
    for i in 0..g.len() {
        if p[i] == g[i] {
            hit += 1.0;
        }
    }
    hit * 100.0 / g.len() as f64
}

pub fn edit(p: &[usize], g: &[usize]) -> f64 {
    let pc: Vec<usize> = runs(p).iter().map(|r| r.0).collect();
    let gc: Vec<usize> = runs(g).iter().map(|r| r.0).collect();
    let m = pc.len().max(gc.len()) as f64;
    (1.0 - lev_matrix(&pc, &gc) as f64 / m) * 100.0
}

/// IoU by counting frames one at a time.
fn iou_frames(a: (usize, usize), b: (usize, usize)) -> f64 {
    let lo = a.0.min(b.0);
    let hi = a.1.max(b.1);
    let (mut inter, mut uni) = (0usize, 0usize);
    for t in lo..=hi {
        let ia = t >= a.0 && t <= a.1;
        let ib = t >= b.0 && t <= b.1;
        inter += usize::from(ia && ib);
        uni += usize::from(ia || ib);
    }
    inter as f64 / uni as f64
}

pub fn f1(p: &[usize], g: &[usize], tau: f64) -> f64 {
    let pr = runs(p);
    let gr = runs(g);
    let mut taken = vec![false; gr.len()];
    let (mut tp, mut fp) = (0.0, 0.0);
    for &(c, s, e) in &pr {
        let mut best = -1.0;
        let mut at = usize::MAX;
        for (j, &(gc, gs, ge)) in gr.iter().enumerate() {
            if gc == c && !taken[j] {
                let v = iou_frames((s, e), (gs, ge));
                if v > best {
                    best = v;
                    at = j;
                }
            }
        }
        if at != usize::MAX && best >= tau {
            taken[at] = true;
            tp += 1.0;
        } else {
            fp += 1.0;
        }
    }
    let fn_ = taken.iter().filter(|t| !**t).count() as f64;
    if tp + fp + fn_ == 0.0 {
        return 100.0;
    }
    let precision = tp / (tp + fp);
    let recall = tp / (tp + fn_);
    if precision + recall == 0.0 {
        0.0
    } else {
        100.0 * 2.0 * precision * recall / (precision + recall)
    }
}

/// A segment-structured random sequence (plus occasional single-frame
/// flicker) so that the metrics see realistic run patterns.
pub fn random_labels(rng: &mut impl Rng, len: usize, classes: usize) -> Vec<usize> {
    let mut out = Vec::with_capacity(len);
    while out.len() < len {
        let c = rng.random_range(0..classes);
        let run = if rng.random_bool(0.2) { 1 } else { rng.random_range(1..60) };
        out.extend(std::iter::repeat_n(c, run.min(len - out.len())));
    }
    out
}

/// A prediction derived from `truth` by shifting boundaries and injecting noise.
pub fn perturb(rng: &mut impl Rng, truth: &[usize], classes: usize) -> Vec<usize> {
    let shift = rng.random_range(0..10);
    let mut p: Vec<usize> = (0..truth.len()).map(|t| truth[t.saturating_sub(shift)]).collect();
    for _ in 0..rng.random_range(0..6) {
        let s = rng.random_range(0..truth.len());
        let e = (s + rng.random_range(1..20)).min(truth.len());
        let c = rng.random_range(0..classes);
        p[s..e].iter_mut().for_each(|v| *v = c);
    }
    p
}

pub mod grad {
    use ergoseg::tcn::ops::{self, Mat};
    use ergoseg::tcn::ModelParams;
    use rand::Rng;

    pub const H: f64 = 1e-6;

    /// Relative error with a small floor so that gradients which are zero
    /// up to rounding do not divide by zero.
    pub fn rel_err(a: f64, n: f64) -> f64 {
        (a - n).abs() / a.abs().max(n.abs()).max(1e-5)
    }

    pub fn random_mat(rng: &mut impl Rng, rows: usize, cols: usize) -> Mat {
        Mat::from_vec(rows, cols, (0..rows * cols).map(|_| rng.random_range(-1.0..1.0)).collect())
    }

    fn dot(a: &Mat, b: &Mat) -> f64 {
        a.data.iter().zip(&b.data).map(|(x, y)| x * y).sum()
    }

    /// Max relative error of an analytic gradient against central
    /// differences of `loss` for every entry of `values`.
    pub fn check(values: &mut [f64], analytic: &[f64], mut loss: impl FnMut(&[f64]) -> f64) -> f64 {
        let mut worst: f64 = 0.0;
        for i in 0..values.len() {
            let v = values[i];
            values[i] = v + H;
            let up = loss(values);
            values[i] = v - H;
            let down = loss(values);
            values[i] = v;
            worst = worst.max(rel_err(analytic[i], (up - down) / (2.0 * H)));
        }
        worst
    }

    /// Worst error over every parameter of a model.
    pub fn model_error(params: &ModelParams, x: &Mat, labels: &[usize]) -> f64 {
        let (_, _, grads) = params.loss_and_gradients(x, labels).unwrap();
        let mut p = params.clone();
        let mut worst: f64 = 0.0;
        for ti in 0..p.tensors.len() {
            let mut values = p.tensors[ti].data.clone();
            let e = check(&mut values, &grads[ti], |v| {
                p.tensors[ti].data.copy_from_slice(v);
                p.loss_and_gradients(x, labels).unwrap().0
            });
            p.tensors[ti].data = params.tensors[ti].data.clone();
            worst = worst.max(e);
        }
        worst
    }

    /// Random offsets on every tensor. Freshly initialised biases are exactly
    /// zero, which can put ReLU inputs right on the kink where the central
    /// difference is one-sided.
    pub fn jitter(params: &mut ModelParams, rng: &mut impl Rng) {
        for t in &mut params.tensors {
            t.data.iter_mut().for_each(|v| *v += rng.random_range(-0.2..0.2));
        }
    }

    /// conv1d: input, kernel and bias gradients under `L = sum(r * y)`.
    pub fn conv_error(rng: &mut impl Rng, t: usize, cin: usize, cout: usize, width: usize, dilation: usize) -> f64 {
        let x = random_mat(rng, t, cin);
        let w: Vec<f64> = (0..width * cin * cout).map(|_| rng.random_range(-1.0..1.0)).collect();
        let b: Vec<f64> = (0..cout).map(|_| rng.random_range(-1.0..1.0)).collect();
        let r = random_mat(rng, t, cout);
        let (mut dw, mut db) = (vec![0.0; w.len()], vec![0.0; b.len()]);
        let dx = ops::conv1d_backward(&x, &w, width, dilation, &r, &mut dw, &mut db, true).unwrap();
        let loss = |x: &Mat, w: &[f64], b: &[f64]| dot(&ops::conv1d(x, w, b, width, dilation).unwrap(), &r);
        let mut xs = x.data.clone();
        let ex = check(&mut xs, &dx.data, |v| loss(&Mat::from_vec(t, cin, v.to_vec()), &w, &b));
        let mut ws = w.clone();
        let ew = check(&mut ws, &dw, |v| loss(&x, v, &b));
        let mut bs = b.clone();
        let eb = check(&mut bs, &db, |v| loss(&x, &w, v));
        ex.max(ew).max(eb)
    }

    /// A single-input layer `f` with backward `g(dy, x) -> dx`.
    pub fn unary_error(
        rng: &mut impl Rng,
        t: usize,
        c: usize,
        f: impl Fn(&Mat) -> Mat,
        g: impl Fn(&Mat, &Mat) -> Mat,
    ) -> f64 {
        let x = random_mat(rng, t, c);
        let y = f(&x);
        let r = random_mat(rng, y.rows, y.cols);
        let dx = g(&r, &x);
        let mut xs = x.data.clone();
        check(&mut xs, &dx.data, |v| dot(&f(&Mat::from_vec(t, c, v.to_vec())), &r))
    }

    pub fn softmax_ce_error(rng: &mut impl Rng, t: usize, c: usize) -> f64 {
        let x = random_mat(rng, t, c);
        let labels: Vec<usize> = (0..t).map(|_| rng.random_range(0..c)).collect();
        let real = t - t / 4;
        let (_, _, d) = ops::softmax_cross_entropy(&x, &labels, real);
        let mut xs = x.data.clone();
        check(&mut xs, &d.data, |v| ops::softmax_cross_entropy(&Mat::from_vec(t, c, v.to_vec()), &labels, real).0)
    }

    /// Every layer type at toy sizes; returns `(name, worst error)`.
    pub fn layer_suite(rng: &mut impl Rng) -> Vec<(&'static str, f64)> {
        vec![
            ("conv1d", conv_error(rng, 11, 3, 4, 3, 1)),
            ("conv1d dilated", conv_error(rng, 17, 2, 3, 3, 4)),
            ("conv1d wide", conv_error(rng, 9, 3, 2, 5, 2)),
            ("conv1d even width", conv_error(rng, 8, 2, 2, 4, 1)),
            ("conv1d pointwise", conv_error(rng, 6, 4, 3, 1, 1)),
            (
                "maxpool2",
                unary_error(rng, 8, 3, |x| ops::maxpool2(x).0, |dy, x| {
                    ops::maxpool2_backward(dy, &ops::maxpool2(x).1, x.rows)
                }),
            ),
            ("upsample2", unary_error(rng, 5, 3, ops::upsample2, |dy, _| ops::upsample2_backward(dy))),
            ("relu", unary_error(rng, 7, 3, |x| ops::relu(x.clone()), |dy, x| ops::relu_backward(dy.clone(), &ops::relu(x.clone())))),
            (
                "gated",
                unary_error(rng, 6, 4, |x| ops::gated(x).0, |dy, x| {
                    let (_, th, sg) = ops::gated(x);
                    ops::gated_backward(dy, &th, &sg)
                }),
            ),
            ("softmax cross-entropy", softmax_ce_error(rng, 8, 4)),
        ]
    }
}
