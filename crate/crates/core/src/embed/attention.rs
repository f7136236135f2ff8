//! Scaled dot-product multi-head attention over variable-size neighbor sets.

use std::rc::Rc;

use crate::error::{Error, Result};
use crate::numerics::{Segments, Tape, Tensor, Var};

/// Tape handles for the four projections of one attention block.
#[derive(Clone, Copy, Debug)]
pub(crate) struct AttnVars {
    pub query: Var,
    pub key: Var,
    pub value: Var,
    pub output: Var,
}

/// `[hidden x heads]` 0/1 matrix selecting each head's slice of columns.
fn head_selector(hidden: usize, heads: usize) -> Tensor {
    let width = hidden / heads;
    let mut t = Tensor::zeros(&[hidden, heads]);
    for c in 0..hidden {
        t.data_mut()[c * heads + c / width] = 1.0;
    }
    t
}

/// Attends each query row to the key/value rows of its segment.
///
/// `queries` is `[S x dq]`, `keys_in`/`values_in` are `[R x dk]` with row `r`
/// belonging to query `segments.ids()[r]`. Returns the `[S x hidden]` output
/// and the `[R x heads]` attention weights. Empty segments produce zero rows.
pub(crate) fn attend(
    tape: &mut Tape,
    w: AttnVars,
    heads: usize,
    queries: Var,
    keys_in: Var,
    values_in: Var,
    segments: Rc<Segments>,
) -> Result<(Var, Var)> {
    let hidden = tape.value(w.query).cols();
    if heads == 0 || hidden % heads != 0 {
        return Err(Error::config(format!("hidden dim {hidden} not divisible by {heads} heads")));
    }
    let q = tape.matmul(queries, w.query)?;
    let k = tape.matmul(keys_in, w.key)?;
    let v = tape.matmul(values_in, w.value)?;

    let per_row_query = tape.gather_rows(q, Rc::new(segments.ids().to_vec()))?;
    let prod = tape.mul(per_row_query, k)?;
    let selector = head_selector(hidden, heads);
    let expand = tape.constant(selector.transpose()?);
    let selector = tape.constant(selector);
    let scores = tape.matmul(prod, selector)?;
    let scores = tape.scale(scores, 1.0 / ((hidden / heads) as f64).sqrt());
    let weights = tape.segment_softmax(scores, segments.clone())?;

    let spread = tape.matmul(weights, expand)?;
    let mixed = tape.mul(spread, v)?;
    let pooled = tape.segment_sum(mixed, segments)?;
    let out = tape.matmul(pooled, w.output)?;
    Ok((out, weights))
}

/// Projection weights of a standalone attention block.
#[derive(Clone, Debug, PartialEq)]
pub struct AttentionWeights {
    /// `[dq x hidden]`
    pub query: Tensor,
    /// `[dk x hidden]`
    pub key: Tensor,
    /// `[dk x hidden]`
    pub value: Tensor,
    /// `[hidden x hidden]`
    pub output: Tensor,
    pub heads: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct AttentionOutput {
    pub output: Vec<f64>,
    /// `weights[h][r]` over the unmasked rows, in row order.
    pub weights: Vec<Vec<f64>>,
}

/// Multi-head attention of one query vector over the rows of `keys` and
/// `values` flagged valid by `mask`. No valid row gives a zero output.
pub fn multi_head_attention(
    w: &AttentionWeights,
    query: &[f64],
    keys: &Tensor,
    values: &Tensor,
    mask: &[bool],
) -> Result<AttentionOutput> {
    let (rows, _) = keys.dims2("multi_head_attention")?;
    if values.rows() != rows || mask.len() != rows {
        return Err(Error::Dimension {
            op: "multi_head_attention",
            lhs: keys.shape().to_vec(),
            rhs: vec![values.rows(), mask.len()],
        });
    }
    if query.len() != w.query.rows() || keys.cols() != w.key.rows() || values.cols() != w.value.rows() {
        return Err(Error::Dimension {
            op: "multi_head_attention",
            lhs: vec![query.len(), keys.cols(), values.cols()],
            rhs: vec![w.query.rows(), w.key.rows(), w.value.rows()],
        });
    }
    let valid: Vec<usize> = (0..rows).filter(|&r| mask[r]).collect();
    let pick = |t: &Tensor| -> Result<Tensor> {
        let mut data = Vec::with_capacity(valid.len() * t.cols());
        for &r in &valid {
            data.extend_from_slice(t.row_slice(r));
        }
        Tensor::matrix(valid.len(), t.cols(), data)
    };

    let mut tape = Tape::new();
    let vars = AttnVars {
        query: tape.constant(w.query.clone()),
        key: tape.constant(w.key.clone()),
        value: tape.constant(w.value.clone()),
        output: tape.constant(w.output.clone()),
    };
    let q = tape.constant(Tensor::row(query.to_vec()));
    let k = tape.constant(pick(keys)?);
    let v = tape.constant(pick(values)?);
    let segments = Rc::new(Segments::from_sizes(&[valid.len()]));
    let (out, weights) = attend(&mut tape, vars, w.heads, q, k, v, segments)?;

    let wt = tape.value(weights);
    let per_head = (0..w.heads)
        .map(|h| (0..valid.len()).map(|r| wt.data()[r * w.heads + h]).collect())
        .collect();
    Ok(AttentionOutput {
        output: tape.value(out).data().to_vec(),
        weights: per_head,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random(rng: &mut ChaCha8Rng, r: usize, c: usize) -> Tensor {
        Tensor::matrix(r, c, (0..r * c).map(|_| rng.gen_range(-1.0..1.0)).collect()).unwrap()
    }

    fn weights(rng: &mut ChaCha8Rng, dq: usize, dk: usize, hidden: usize, heads: usize) -> AttentionWeights {
        AttentionWeights {
            query: random(rng, dq, hidden),
            key: random(rng, dk, hidden),
            value: random(rng, dk, hidden),
            output: random(rng, hidden, hidden),
            heads,
        }
    }

    fn close(a: &[f64], b: &[f64], tol: f64) -> bool {
        a.len() == b.len() && a.iter().zip(b).all(|(x, y)| (x - y).abs() < tol)
    }

    #[test]
    fn single_valid_key_gets_all_weight() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let w = weights(&mut rng, 3, 4, 6, 2);
        let keys = random(&mut rng, 3, 4);
        let query = [0.2, -0.4, 0.9];
        let out = multi_head_attention(&w, &query, &keys, &keys, &[false, true, false]).unwrap();
        assert_eq!(out.weights, vec![vec![1.0], vec![1.0]]);
        let projected = Tensor::row(keys.row_slice(1).to_vec()).matmul(&w.value).unwrap();
        let expect = projected.matmul(&w.output).unwrap();
        assert!(close(&out.output, expect.data(), 1e-12));
    }

    #[test]
    fn identical_rows_split_weight_evenly() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let w = weights(&mut rng, 3, 4, 8, 4);
        let row = random(&mut rng, 1, 4);
        let twice = Tensor::matrix(2, 4, [row.data(), row.data()].concat()).unwrap();
        let query = [1.0, 0.0, -1.0];
        let pair = multi_head_attention(&w, &query, &twice, &twice, &[true, true]).unwrap();
        let single = multi_head_attention(&w, &query, &row, &row, &[true]).unwrap();
        for head in &pair.weights {
            assert!(close(head, &[0.5, 0.5], 1e-15));
        }
        assert!(close(&pair.output, &single.output, 1e-12));
    }

    #[test]
    fn fully_masked_gives_zero_vector() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let w = weights(&mut rng, 2, 3, 4, 2);
        let keys = random(&mut rng, 4, 3);
        let out = multi_head_attention(&w, &[1.0, 1.0], &keys, &keys, &[false; 4]).unwrap();
        assert_eq!(out.output, vec![0.0; 4]);
        let none = multi_head_attention(&w, &[1.0, 1.0], &Tensor::zeros(&[0, 3]), &Tensor::zeros(&[0, 3]), &[]).unwrap();
        assert_eq!(none.output, vec![0.0; 4]);
    }

    #[test]
    fn weights_per_head_sum_to_one() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..20 {
            let w = weights(&mut rng, 3, 5, 12, 3);
            let keys = random(&mut rng, 7, 5);
            let values = random(&mut rng, 7, 5);
            let mask: Vec<bool> = (0..7).map(|_| rng.gen_bool(0.7)).collect();
            let out = multi_head_attention(&w, &[3.0, -2.0, 1.0], &keys, &values, &mask).unwrap();
            for head in &out.weights {
                if !head.is_empty() {
                    assert!((head.iter().sum::<f64>() - 1.0).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn shape_mismatches_are_dimension_errors() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let w = weights(&mut rng, 3, 4, 6, 2);
        let keys = random(&mut rng, 3, 4);
        let values = random(&mut rng, 2, 4);
        let err = multi_head_attention(&w, &[0.0; 3], &keys, &values, &[true; 3]);
        assert!(matches!(err, Err(Error::Dimension { .. })));
        let err = multi_head_attention(&w, &[0.0; 2], &keys, &keys, &[true; 3]);
        assert!(matches!(err, Err(Error::Dimension { .. })));
    }
}
