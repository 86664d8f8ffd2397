use super::params::AttentionParams;
use super::tensor::{mat_vec_acc, outer_acc, softmax, vec_mat_acc};
use crate::{Error, Result};

#[derive(Debug, Clone)]
pub(crate) struct AttentionTrace {
    q_in: Vec<Vec<f64>>,
    kv_in: Vec<Vec<f64>>,
    q: Vec<Vec<f64>>,
    k: Vec<Vec<f64>>,
    v: Vec<Vec<f64>>,
    /// Row-softmax attention weights, `T × T`.
    weights: Vec<Vec<f64>>,
    pub context: Vec<Vec<f64>>,
    pub pooled: Vec<f64>,
    pub output: Vec<f64>,
}

fn project(rows: &[Vec<f64>], w: &super::tensor::Tensor) -> Vec<Vec<f64>> {
    rows.iter()
        .map(|x| {
            let mut y = vec![0.0; w.cols()];
            vec_mat_acc(x, w, &mut y);
            y
        })
        .collect()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn forward_trace(q_seq: &[Vec<f64>], kv_seq: &[Vec<f64>], p: &AttentionParams) -> AttentionTrace {
    let d = p.dim();
    let scale = 1.0 / (d as f64).sqrt();
    let q = project(q_seq, &p.w_q);
    let k = project(kv_seq, &p.w_k);
    let v = project(kv_seq, &p.w_v);
    let weights: Vec<Vec<f64>> = q
        .iter()
        .map(|qi| softmax(&k.iter().map(|kj| dot(qi, kj) * scale).collect::<Vec<_>>()))
        .collect();
    let context: Vec<Vec<f64>> = weights
        .iter()
        .map(|a| {
            let mut c = vec![0.0; d];
            for (aj, vj) in a.iter().zip(&v) {
                for (cc, vv) in c.iter_mut().zip(vj) {
                    *cc += aj * vv;
                }
            }
            c
        })
        .collect();
    let n = context.len() as f64;
    let mut pooled = vec![0.0; d];
    for c in &context {
        for (p, v) in pooled.iter_mut().zip(c) {
            *p += v / n;
        }
    }
    let mut output = p.b_o.data().to_vec();
    vec_mat_acc(&pooled, &p.w_o, &mut output);
    AttentionTrace {
        q_in: q_seq.to_vec(),
        kv_in: kv_seq.to_vec(),
        q,
        k,
        v,
        weights,
        context,
        pooled,
        output,
    }
}

/// Scaled dot-product cross-attention. Returns the `T × d_a` context rows.
pub fn cross_attention(q_seq: &[Vec<f64>], kv_seq: &[Vec<f64>], params: &AttentionParams) -> Result<Vec<Vec<f64>>> {
    let h = params.w_q.rows();
    if q_seq.len() != kv_seq.len() || q_seq.is_empty() {
        return Err(Error::Shape(format!(
            "query length {} and key/value length {} must match and be non-zero",
            q_seq.len(),
            kv_seq.len()
        )));
    }
    super::lstm::check_input(q_seq, h, "query")?;
    super::lstm::check_input(kv_seq, h, "key/value")?;
    Ok(forward_trace(q_seq, kv_seq, params).context)
}

/// Returns gradients w.r.t. the query and key/value input rows.
pub(crate) fn backward(
    tr: &AttentionTrace,
    p: &AttentionParams,
    dout: &[f64],
    grad: &mut AttentionParams,
) -> (Vec<Vec<f64>>, Vec<Vec<f64>>) {
    let d = p.dim();
    let scale = 1.0 / (d as f64).sqrt();
    let n = tr.context.len();
    let h = p.w_q.rows();

    outer_acc(&tr.pooled, dout, &mut grad.w_o);
    for (g, v) in grad.b_o.data_mut().iter_mut().zip(dout) {
        *g += v;
    }
    let mut dpooled = vec![0.0; d];
    mat_vec_acc(&p.w_o, dout, &mut dpooled);
    let dctx: Vec<f64> = dpooled.iter().map(|v| v / n as f64).collect();

    let mut dq = vec![vec![0.0; d]; n];
    let mut dk = vec![vec![0.0; d]; n];
    let mut dv = vec![vec![0.0; d]; n];
    for i in 0..n {
        let a = &tr.weights[i];
        let da: Vec<f64> = tr.v.iter().map(|vj| dot(&dctx, vj)).collect();
        for j in 0..n {
            for c in 0..d {
                dv[j][c] += a[j] * dctx[c];
            }
        }
        let inner = dot(a, &da);
        for j in 0..n {
            let ds = a[j] * (da[j] - inner) * scale;
            for c in 0..d {
                dq[i][c] += ds * tr.k[j][c];
                dk[j][c] += ds * tr.q[i][c];
            }
        }
    }

    let mut dq_in = vec![vec![0.0; h]; n];
    let mut dkv_in = vec![vec![0.0; h]; n];
    for t in 0..n {
        outer_acc(&tr.q_in[t], &dq[t], &mut grad.w_q);
        outer_acc(&tr.kv_in[t], &dk[t], &mut grad.w_k);
        outer_acc(&tr.kv_in[t], &dv[t], &mut grad.w_v);
        mat_vec_acc(&p.w_q, &dq[t], &mut dq_in[t]);
        mat_vec_acc(&p.w_k, &dk[t], &mut dkv_in[t]);
        mat_vec_acc(&p.w_v, &dv[t], &mut dkv_in[t]);
    }
    (dq_in, dkv_in)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::network::tensor::Tensor;

    fn params(h: usize, d: usize, seed: u64) -> AttentionParams {
        let mut p = AttentionParams::zeros(h, d);
        let mut s = seed;
        for t in [&mut p.w_q, &mut p.w_k, &mut p.w_v, &mut p.w_o] {
            for v in t.data_mut() {
                s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                *v = ((s >> 33) as f64 / (1u64 << 31) as f64) - 0.5;
            }
        }
        p
    }

    #[test]
    fn identical_keys_give_constant_context() {
        let p = params(3, 2, 7);
        let q = vec![vec![1.0, 0.0, -1.0], vec![0.3, 2.0, 0.1], vec![-4.0, 1.0, 1.0]];
        let kv = vec![vec![0.5, -0.2, 1.5]; 3];
        let ctx = cross_attention(&q, &kv, &p).unwrap();
        let mut expected = vec![0.0; 2];
        vec_mat_acc(&kv[0], &p.w_v, &mut expected);
        for row in ctx {
            for (a, b) in row.iter().zip(&expected) {
                assert!((a - b).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn single_step_returns_value_row() {
        let p = params(2, 3, 9);
        let ctx = cross_attention(&[vec![5.0, -3.0]], &[vec![0.2, 0.4]], &p).unwrap();
        let mut expected = vec![0.0; 3];
        vec_mat_acc(&[0.2, 0.4], &p.w_v, &mut expected);
        assert_eq!(ctx[0], expected);
    }

    #[test]
    fn two_step_hand_case() {
        // H = 2, d_a = 1: W_q = [1, 0]ᵀ, W_k = [0, 1]ᵀ, W_v = [1, 1]ᵀ.
        let mut p = AttentionParams::zeros(2, 1);
        p.w_q = Tensor::new(vec![2, 1], vec![1.0, 0.0]).unwrap();
        p.w_k = Tensor::new(vec![2, 1], vec![0.0, 1.0]).unwrap();
        p.w_v = Tensor::new(vec![2, 1], vec![1.0, 1.0]).unwrap();
        let q = vec![vec![1.0, 0.0], vec![2.0, 0.0]];
        let kv = vec![vec![0.0, 1.0], vec![1.0, 3.0]];
        // Q = (1, 2), K = (1, 3), V = (1, 4)
        let ctx = cross_attention(&q, &kv, &p).unwrap();
        let row = |qv: f64| {
            let (e1, e2) = ((qv * 1.0f64).exp(), (qv * 3.0f64).exp());
            (e1 * 1.0 + e2 * 4.0) / (e1 + e2)
        };
        assert!((ctx[0][0] - row(1.0)).abs() < 1e-14);
        assert!((ctx[1][0] - row(2.0)).abs() < 1e-14);
    }

    #[test]
    fn attention_rows_are_normalized() {
        let p = params(3, 4, 11);
        let seq: Vec<Vec<f64>> = (0..6).map(|t| vec![t as f64, -(t as f64) * 0.5, 1.0]).collect();
        let tr = forward_trace(&seq, &seq, &p);
        for a in &tr.weights {
            assert!((a.iter().sum::<f64>() - 1.0).abs() < 1e-12);
            assert!(a.iter().all(|&x| x > 0.0 && x < 1.0));
        }
    }

    #[test]
    fn pooled_context_is_invariant_to_kv_permutation() {
        let p = params(3, 3, 5);
        let q: Vec<Vec<f64>> = (0..5).map(|t| vec![t as f64 * 0.2, 1.0, -0.4]).collect();
        let kv: Vec<Vec<f64>> = (0..5).map(|t| vec![0.1 * t as f64, -0.3, t as f64 % 2.0]).collect();
        let mut perm = kv.clone();
        perm.rotate_left(2);
        perm.swap(0, 3);
        let a = forward_trace(&q, &kv, &p).pooled;
        let b = forward_trace(&q, &perm, &p).pooled;
        for (x, y) in a.iter().zip(&b) {
            assert!((x - y).abs() < 1e-12);
        }
    }

    #[test]
    fn mismatched_lengths_rejected() {
        let p = params(2, 2, 1);
        let r = cross_attention(&[vec![0.0, 0.0]], &[vec![0.0, 0.0], vec![1.0, 1.0]], &p);
        assert!(matches!(r, Err(Error::Shape(_))));
    }
}
