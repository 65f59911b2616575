//! Composite layers built from graph primitives.

use crate::error::{Error, Result};

use super::graph::{Graph, NodeId};

/// One residual convolution bank: `tanh(conv(x) + x·residual)`.
#[derive(Clone, Copy, Debug)]
pub struct FilterBank {
    pub width: usize,
    /// `(width·d) × F`
    pub weight: NodeId,
    /// `[F]`
    pub bias: NodeId,
    /// `d × F` projection matching the input width to the bank output.
    pub residual: NodeId,
}

/// Runs every bank over `sequence` (`len × d`), returning one `len' × F`
/// activation per bank. Sequences shorter than the widest filter are
/// zero-padded at the end up to that width first.
pub fn conv1d_multi(g: &mut Graph, sequence: NodeId, banks: &[FilterBank]) -> Result<Vec<NodeId>> {
    let shape = g.value(sequence).shape().to_vec();
    if shape.len() != 2 || shape[0] == 0 {
        return Err(Error::degenerate(
            "conv1d_multi",
            format!("empty sequence {shape:?}"),
        ));
    }
    let widest = banks.iter().map(|b| b.width).max().unwrap_or(1);
    let seq = g.pad_rows(sequence, widest)?;
    banks
        .iter()
        .map(|bank| {
            let pre = g.conv1d(seq, bank.weight, bank.bias, bank.width)?;
            let skip = g.matmul(seq, bank.residual)?;
            let sum = g.add(pre, skip)?;
            Ok(g.tanh(sum))
        })
        .collect()
}

/// LSTM cell weights. Gate blocks are ordered input, forget, candidate, output.
#[derive(Clone, Copy, Debug)]
pub struct LstmCell {
    /// `d × 4H`
    pub input_weight: NodeId,
    /// `H × 4H`
    pub hidden_weight: NodeId,
    /// `[4H]`
    pub bias: NodeId,
}

impl LstmCell {
    pub fn hidden_size(&self, g: &Graph) -> usize {
        g.value(self.bias).len() / 4
    }
}

/// One LSTM update, returning `(h', c')`.
pub fn lstm_step(g: &mut Graph, x: NodeId, h: NodeId, c: NodeId, cell: &LstmCell) -> Result<(NodeId, NodeId)> {
    let hidden = cell.hidden_size(g);
    let d = g.value(x).len();
    let (wx, wh) = (g.value(cell.input_weight).shape(), g.value(cell.hidden_weight).shape());
    if wx != [d, 4 * hidden]
        || wh != [hidden, 4 * hidden]
        || g.value(h).shape() != [hidden]
        || g.value(c).shape() != [hidden]
        || g.value(x).shape().len() != 1
    {
        return Err(Error::dim(
            "lstm_step",
            format!(
                "x {:?}, h {:?}, c {:?}, Wx {wx:?}, Wh {wh:?}",
                g.value(x).shape(),
                g.value(h).shape(),
                g.value(c).shape()
            ),
        ));
    }
    let xr = g.reshape(x, vec![1, d])?;
    let hr = g.reshape(h, vec![1, hidden])?;
    let zx = g.matmul(xr, cell.input_weight)?;
    let zh = g.matmul(hr, cell.hidden_weight)?;
    let z = g.add(zx, zh)?;
    let z = g.reshape(z, vec![4 * hidden])?;
    let z = g.add(z, cell.bias)?;

    let i_pre = g.slice(z, 0, hidden)?;
    let f_pre = g.slice(z, hidden, hidden)?;
    let g_pre = g.slice(z, 2 * hidden, hidden)?;
    let o_pre = g.slice(z, 3 * hidden, hidden)?;
    let i = g.sigmoid(i_pre);
    let f = g.sigmoid(f_pre);
    let cand = g.tanh(g_pre);
    let o = g.sigmoid(o_pre);

    let keep = g.mul(f, c)?;
    let write = g.mul(i, cand)?;
    let c_next = g.add(keep, write)?;
    let squashed = g.tanh(c_next);
    let h_next = g.mul(o, squashed)?;
    Ok((h_next, c_next))
}
