//! Value-level numeric kernels shared by the graph forward passes.

use crate::error::{Error, Result};

use super::tensor::Tensor;

pub const DIST_TOLERANCE: f64 = 1e-9;

pub fn matmul(a: &Tensor, b: &Tensor) -> Result<Tensor> {
    if a.shape().len() != 2 || b.shape().len() != 2 || a.shape()[1] != b.shape()[0] {
        return Err(Error::dim(
            "matmul",
            format!("cannot multiply {:?} by {:?}", a.shape(), b.shape()),
        ));
    }
    let (m, k, n) = (a.shape()[0], a.shape()[1], b.shape()[1]);
    let mut out = vec![0.0; m * n];
    let (ad, bd) = (a.data(), b.data());
    for i in 0..m {
        let row = &mut out[i * n..(i + 1) * n];
        for p in 0..k {
            let av = ad[i * k + p];
            if av == 0.0 {
                continue;
            }
            let brow = &bd[p * n..(p + 1) * n];
            for (o, bv) in row.iter_mut().zip(brow) {
                *o += av * bv;
            }
        }
    }
    Tensor::new(vec![m, n], out)
}

/// Zero-padded "same" 1-D convolution over rows of `input` (`len × d`).
///
/// `weight` is laid out as `(width·d) × filters`, row `k·d + c` holding the
/// tap at offset `k` for input channel `c`. Output row `i` reads input rows
/// `i - left .. i - left + width` where `left = (width - 1) / 2`.
pub fn conv1d_same(input: &Tensor, weight: &Tensor, bias: &Tensor, width: usize) -> Result<Tensor> {
    if input.shape().len() != 2 || input.rows() == 0 {
        return Err(Error::degenerate(
            "conv1d",
            format!("expected non-empty len×d sequence, got {:?}", input.shape()),
        ));
    }
    let (len, d) = (input.rows(), input.cols());
    if width == 0
        || weight.shape().len() != 2
        || weight.shape()[0] != width * d
        || bias.len() != weight.shape()[1]
    {
        return Err(Error::dim(
            "conv1d",
            format!(
                "input {:?}, weight {:?}, bias {:?}, width {width}",
                input.shape(),
                weight.shape(),
                bias.shape()
            ),
        ));
    }
    let filters = weight.shape()[1];
    let left = (width - 1) / 2;
    let (x, w) = (input.data(), weight.data());
    let mut out = Vec::with_capacity(len * filters);
    for _ in 0..len {
        out.extend_from_slice(bias.data());
    }
    for i in 0..len {
        let orow = &mut out[i * filters..(i + 1) * filters];
        for k in 0..width {
            let r = i + k;
            if r < left || r - left >= len {
                continue;
            }
            let xrow = &x[(r - left) * d..(r - left + 1) * d];
            for (c, &xv) in xrow.iter().enumerate() {
                if xv == 0.0 {
                    continue;
                }
                let wrow = &w[(k * d + c) * filters..(k * d + c + 1) * filters];
                for (o, wv) in orow.iter_mut().zip(wrow) {
                    *o += xv * wv;
                }
            }
        }
    }
    Tensor::new(vec![len, filters], out)
}

/// Per-column maximum over rows and the first row index attaining it.
pub fn max_pool_time(input: &Tensor) -> Result<(Tensor, Vec<usize>)> {
    if input.shape().len() != 2 || input.rows() == 0 {
        return Err(Error::degenerate(
            "max_pool_time",
            format!("expected len ≥ 1, got shape {:?}", input.shape()),
        ));
    }
    let cols = input.cols();
    let mut best = input.row(0).to_vec();
    let mut arg = vec![0; cols];
    for r in 1..input.rows() {
        for (c, &v) in input.row(r).iter().enumerate() {
            if v > best[c] {
                best[c] = v;
                arg[c] = r;
            }
        }
    }
    Ok((Tensor::vector(best), arg))
}

pub fn softmax_with_temperature(logits: &[f64], tau: f64) -> Result<Vec<f64>> {
    if !(tau > 0.0) || !tau.is_finite() {
        return Err(Error::Parameter(format!("temperature must be > 0, got {tau}")));
    }
    if logits.len() < 2 {
        return Err(Error::dim(
            "softmax",
            format!("need at least 2 classes, got {}", logits.len()),
        ));
    }
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut out: Vec<f64> = logits.iter().map(|&l| ((l - max) / tau).exp()).collect();
    let z: f64 = out.iter().sum();
    for v in &mut out {
        *v /= z;
    }
    Ok(out)
}

pub fn log_sum_exp(logits: &[f64]) -> f64 {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    max + logits.iter().map(|&l| (l - max).exp()).sum::<f64>().ln()
}

/// `-log softmax(logits)[label]`, clamped at zero against rounding.
pub fn cross_entropy(logits: &[f64], label: usize) -> Result<f64> {
    if label >= logits.len() {
        return Err(Error::Label {
            label,
            classes: logits.len(),
        });
    }
    Ok((log_sum_exp(logits) - logits[label]).max(0.0))
}

fn check_distribution(name: &str, p: &[f64]) -> Result<()> {
    if p.iter().any(|&v| !(v >= 0.0) || !v.is_finite()) {
        return Err(Error::Parameter(format!(
            "{name} has negative or non-finite entries"
        )));
    }
    let s: f64 = p.iter().sum();
    if (s - 1.0).abs() > DIST_TOLERANCE {
        return Err(Error::Parameter(format!("{name} sums to {s}, not 1")));
    }
    Ok(())
}

/// `Σ p_i ln(p_i / q_i)` with `0 · ln(0 / q) = 0`.
pub fn kl_divergence(p: &[f64], q: &[f64]) -> Result<f64> {
    if p.len() != q.len() {
        return Err(Error::dim(
            "kl_divergence",
            format!("p has {} entries, q has {}", p.len(), q.len()),
        ));
    }
    check_distribution("p", p)?;
    check_distribution("q", q)?;
    let mut total = 0.0;
    for (i, (&pi, &qi)) in p.iter().zip(q).enumerate() {
        if pi == 0.0 {
            continue;
        }
        if qi == 0.0 {
            return Err(Error::DivergenceUndefined { index: i, p: pi });
        }
        total += pi * (pi / qi).ln();
    }
    Ok(total.max(0.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random(rng: &mut ChaCha8Rng, shape: &[usize]) -> Tensor {
        let n = shape.iter().product();
        Tensor::new(shape.to_vec(), (0..n).map(|_| rng.random_range(-1.0..1.0)).collect()).unwrap()
    }

    #[test]
    fn matmul_identity_and_dot() {
        let eye = Tensor::matrix(&[&[1.0, 0.0], &[0.0, 1.0]]).unwrap();
        let col = Tensor::matrix(&[&[3.0], &[4.0]]).unwrap();
        assert_eq!(matmul(&eye, &col).unwrap().data(), &[3.0, 4.0]);
        let row = Tensor::matrix(&[&[1.0, 2.0]]).unwrap();
        assert_eq!(matmul(&row, &col).unwrap().data(), &[11.0]);
    }

    #[test]
    fn matmul_matches_triple_loop() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let a = random(&mut rng, &[3, 4]);
        let b = random(&mut rng, &[4, 2]);
        let c = matmul(&a, &b).unwrap();
        for i in 0..3 {
            for j in 0..2 {
                let mut s = 0.0;
                for p in 0..4 {
                    s += a.get(i, p) * b.get(p, j);
                }
                assert!((c.get(i, j) - s).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn matmul_shape_error_names_shapes() {
        let a = Tensor::zeros(&[2, 3]);
        let b = Tensor::zeros(&[2, 3]);
        let msg = matmul(&a, &b).unwrap_err().to_string();
        assert!(msg.contains("[2, 3]"), "{msg}");
    }

    #[test]
    fn conv_matches_sliding_window() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let x = random(&mut rng, &[6, 3]);
        let w = random(&mut rng, &[2 * 3, 4]);
        let b = random(&mut rng, &[4]);
        let out = conv1d_same(&x, &w, &b, 2).unwrap();
        // width 2 => left pad 0, right pad 1
        for i in 0..6 {
            for f in 0..4 {
                let mut s = b.data()[f];
                for k in 0..2 {
                    if i + k < 6 {
                        for c in 0..3 {
                            s += x.get(i + k, c) * w.get(k * 3 + c, f);
                        }
                    }
                }
                assert!((out.get(i, f) - s).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn conv_identity_filter_copies_channel_zero() {
        let x = Tensor::matrix(&[&[1.0, 9.0], &[2.0, 8.0], &[3.0, 7.0]]).unwrap();
        let w = Tensor::matrix(&[&[1.0], &[0.0]]).unwrap();
        let out = conv1d_same(&x, &w, &Tensor::zeros(&[1]), 1).unwrap();
        assert_eq!(out.data(), &[1.0, 2.0, 3.0]);
    }

    #[test]
    fn conv_zero_input_zero_output() {
        let out = conv1d_same(
            &Tensor::zeros(&[4, 2]),
            &Tensor::new(vec![6, 2], vec![0.5; 12]).unwrap(),
            &Tensor::zeros(&[2]),
            3,
        )
        .unwrap();
        assert!(out.data().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn conv_empty_sequence_is_degenerate() {
        let err = conv1d_same(&Tensor::zeros(&[0, 2]), &Tensor::zeros(&[2, 1]), &Tensor::zeros(&[1]), 1);
        assert!(matches!(err, Err(Error::DegenerateInput { .. })));
    }

    #[test]
    fn max_pool_examples() {
        let x = Tensor::matrix(&[&[1.0], &[5.0], &[3.0]]).unwrap();
        let (m, arg) = max_pool_time(&x).unwrap();
        assert_eq!(m.data(), &[5.0]);
        assert_eq!(arg, vec![1]);
        let c = Tensor::matrix(&[&[2.0, -1.0], &[2.0, -1.0]]).unwrap();
        let (m, arg) = max_pool_time(&c).unwrap();
        assert_eq!(m.data(), &[2.0, -1.0]);
        assert_eq!(arg, vec![0, 0]);
        assert!(max_pool_time(&Tensor::zeros(&[0, 3])).is_err());
    }

    #[test]
    fn max_pool_matches_column_scan() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let x = random(&mut rng, &[8, 4]);
        let (m, _) = max_pool_time(&x).unwrap();
        for c in 0..4 {
            let col_max = (0..8).map(|r| x.get(r, c)).fold(f64::MIN, f64::max);
            assert_eq!(m.data()[c], col_max);
        }
    }

    #[test]
    fn softmax_examples() {
        assert_eq!(softmax_with_temperature(&[0.0, 0.0], 3.0).unwrap(), vec![0.5, 0.5]);
        let p = softmax_with_temperature(&[2.0, 0.0], 2.0).unwrap();
        let e = std::f64::consts::E;
        assert!((p[0] - e / (e + 1.0)).abs() < 1e-15);
        assert!((p[1] - 1.0 / (e + 1.0)).abs() < 1e-15);
        let u = softmax_with_temperature(&[5.0, -3.0, 1.0], 1e6).unwrap();
        assert!(u.iter().all(|v| (v - 1.0 / 3.0).abs() < 1e-3));
    }

    #[test]
    fn softmax_errors() {
        assert!(matches!(softmax_with_temperature(&[1.0, 2.0], 0.0), Err(Error::Parameter(_))));
        assert!(matches!(softmax_with_temperature(&[1.0, 2.0], -1.0), Err(Error::Parameter(_))));
        assert!(matches!(softmax_with_temperature(&[1.0], 1.0), Err(Error::Dimension { .. })));
    }

    #[test]
    fn cross_entropy_examples() {
        assert!((cross_entropy(&[0.0, 0.0], 0).unwrap() - std::f64::consts::LN_2).abs() < 1e-15);
        assert!(cross_entropy(&[30.0, -30.0], 0).unwrap() < 1e-12);
        let logits = [1.0, -1.0, 0.5];
        let direct = (1f64.exp() + (-1f64).exp() + 0.5f64.exp()).ln() - 0.5;
        assert!((cross_entropy(&logits, 2).unwrap() - direct).abs() < 1e-12);
        assert!(matches!(cross_entropy(&logits, 3), Err(Error::Label { label: 3, classes: 3 })));
    }

    #[test]
    fn kl_examples() {
        assert_eq!(kl_divergence(&[0.3, 0.7], &[0.3, 0.7]).unwrap(), 0.0);
        let v = kl_divergence(&[0.5, 0.5], &[0.25, 0.75]).unwrap();
        let expected = 0.5 * 2f64.ln() + 0.5 * (2.0f64 / 3.0).ln();
        assert!((v - expected).abs() < 1e-15);
        assert!((v - 0.14384).abs() < 1e-5);
        assert!((kl_divergence(&[1.0, 0.0], &[0.5, 0.5]).unwrap() - std::f64::consts::LN_2).abs() < 1e-15);
    }

    #[test]
    fn kl_undefined_when_q_vanishes_under_p() {
        let err = kl_divergence(&[0.5, 0.5], &[1.0, 0.0]).unwrap_err();
        assert!(matches!(err, Error::DivergenceUndefined { index: 1, .. }));
        // p_i = 0 masks the zero in q
        assert!(kl_divergence(&[1.0, 0.0], &[1.0, 0.0]).is_ok());
    }

    #[test]
    fn kl_rejects_non_distributions() {
        assert!(kl_divergence(&[0.6, 0.6], &[0.5, 0.5]).is_err());
        assert!(kl_divergence(&[0.5, 0.5], &[0.5, 0.5, 0.0]).is_err());
    }
}
