use std::rc::Rc;

use crate::error::{Error, Result};
use crate::numerics::{Tape, Tensor, Var};

/// Probabilities are clamped to `[PROB_FLOOR, 1 - PROB_FLOOR]` before any log.
pub const PROB_FLOOR: f64 = 1e-7;

fn clamped_log(tape: &mut Tape, p: Var) -> Var {
    let p = tape.clamp(p, PROB_FLOOR, 1.0 - PROB_FLOOR);
    tape.log(p)
}

/// Mean over rows of `-[log s(z_u . z_i) + sum_k log(1 - s(z_u . z_k))]`.
///
/// `zu` and `zi` are `[B x d]`; each entry of `negatives` is a `[B x d]`
/// block holding one negative per positive.
pub fn link_loss_on_tape(tape: &mut Tape, zu: Var, zi: Var, negatives: &[Var]) -> Result<Var> {
    let pos = tape.row_dot(zu, zi)?;
    let pos = tape.sigmoid(pos);
    let mut total = clamped_log(tape, pos);
    for &zk in negatives {
        let neg = tape.row_dot(zu, zk)?;
        let neg = tape.sigmoid(neg);
        let miss = tape.affine(neg, -1.0, 1.0);
        let term = clamped_log(tape, miss);
        total = tape.add(total, term)?;
    }
    let mean = tape.mean_all(total)?;
    Ok(tape.scale(mean, -1.0))
}

/// Link loss of one positive pair `(z_u, z_i)` against one negative `z_k`.
pub fn link_loss(zu: &[f64], zi: &[f64], zk: &[f64]) -> Result<f64> {
    if zu.len() != zi.len() || zu.len() != zk.len() {
        return Err(Error::Dimension {
            op: "link_loss",
            lhs: vec![zu.len()],
            rhs: vec![zi.len(), zk.len()],
        });
    }
    let mut tape = Tape::new();
    let u = tape.constant(Tensor::row(zu.to_vec()));
    let i = tape.constant(Tensor::row(zi.to_vec()));
    let k = tape.constant(Tensor::row(zk.to_vec()));
    let loss = link_loss_on_tape(&mut tape, u, i, &[k])?;
    tape.value(loss).item()
}

pub(crate) fn check_targets(targets: &[f64]) -> Result<()> {
    match targets.iter().find(|&&y| y != 0.0 && y != 1.0) {
        Some(y) => Err(Error::contract(format!("label {y} is not 0 or 1"))),
        None => Ok(()),
    }
}

/// Mean binary cross-entropy of probabilities `preds` (`[n x 1]`) against 0/1 targets.
pub fn bce_on_tape(tape: &mut Tape, preds: Var, targets: Rc<Vec<f64>>) -> Result<Var> {
    check_targets(&targets)?;
    let n = targets.len();
    if tape.value(preds).shape() != [n, 1] {
        return Err(Error::Dimension {
            op: "bce",
            lhs: tape.value(preds).shape().to_vec(),
            rhs: vec![n, 1],
        });
    }
    let hit = clamped_log(tape, preds);
    let miss = tape.affine(preds, -1.0, 1.0);
    let miss = clamped_log(tape, miss);
    // y * log p + (1 - y) * log(1 - p), with y entering as row weights.
    let hit = tape.scale_rows(hit, targets.clone())?;
    let inverse: Vec<f64> = targets.iter().map(|y| 1.0 - y).collect();
    let miss = tape.scale_rows(miss, Rc::new(inverse))?;
    let both = tape.add(hit, miss)?;
    let mean = tape.mean_all(both)?;
    Ok(tape.scale(mean, -1.0))
}

/// Mean binary cross-entropy of probabilities against 0/1 labels.
pub fn node_loss(preds: &[f64], labels: &[f64]) -> Result<f64> {
    if preds.len() != labels.len() {
        return Err(Error::Dimension {
            op: "node_loss",
            lhs: vec![preds.len()],
            rhs: vec![labels.len()],
        });
    }
    let mut tape = Tape::new();
    let p = tape.constant(Tensor::column(preds.to_vec()));
    let loss = bce_on_tape(&mut tape, p, Rc::new(labels.to_vec()))?;
    tape.value(loss).item()
}
