use crate::error::{Error, Result};
use crate::nn::params::ParamSet;
use crate::nn::tensor::{axpy, matmul, matmul_nt, matmul_tn, mm_into, mm_nt_into, mm_tn_into, Tensor};

/// Id of a value recorded on a [`Tape`].
pub type Vid = usize;

/// Probabilities are clamped to [EPS, 1 - EPS] before any log.
pub(crate) const PROB_EPS: f64 = 1e-7;

/// Sequences live on the tape in stacked layout: a [T*m x d] tensor whose
/// row block t (rows [t*m, (t+1)*m)) holds timestep t for all m batch rows.
#[derive(Clone, Copy, Debug)]
pub struct SeqLayout {
    pub t_steps: usize,
    pub batch: usize,
}

/// Saved activations of one fused LSTM layer pass, each [T*m x h].
struct LstmSaved {
    input_gate: Tensor,
    forget_gate: Tensor,
    candidate: Tensor,
    output_gate: Tensor,
    cell: Tensor,
    cell_tanh: Tensor,
}

struct LstmNode {
    x: Vid,
    wx: Vid,
    wh: Vid,
    b: Vid,
    init: Option<(Vid, Vid)>,
    layout: SeqLayout,
    hidden: usize,
    saved: LstmSaved,
}

enum Op {
    Leaf,
    /// [m x k] * [k x n]
    MatMul(Vid, Vid),
    Add(Vid, Vid),
    /// Sum of any number of same-shaped values.
    AddN(Vec<Vid>),
    /// [m x n] + broadcast row [1 x n]
    AddRow(Vid, Vid),
    Sub(Vid, Vid),
    /// Elementwise product.
    Mul(Vid, Vid),
    Scale(Vid, f64),
    Sigmoid(Vid),
    Tanh(Vid),
    /// Columns [start, start+len) of a 2-d value.
    SliceCols(Vid, usize, usize),
    /// Rows [start, start+len) of a 2-d value.
    SliceRows(Vid, usize, usize),
    /// Mean over the T row blocks of a stacked sequence: [T*m x d] -> [m x d].
    MeanOverBlocks(Vid, usize),
    Sum(Vid),
    Mean(Vid),
    Abs(Vid),
    /// Mean binary cross-entropy of probabilities against constant 0/1 targets.
    Bce(Vid, Tensor),
    /// One whole LSTM layer over a stacked sequence.
    Lstm(Box<LstmNode>),
}

struct Node {
    op: Op,
    value: Tensor,
}

/// Records a forward computation; replayed backward for exact gradients.
///
/// Values are created eagerly: each operation computes its result when
/// recorded. Shape agreement between operands is a caller invariant (the
/// layer APIs validate shapes before touching the tape), so shape mismatches
/// here are bugs and panic via debug assertions inside the kernels.
#[derive(Default)]
pub struct Tape {
    nodes: Vec<Node>,
}

impl Tape {
    pub fn new() -> Tape {
        Tape::default()
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn value(&self, v: Vid) -> &Tensor {
        &self.nodes[v].value
    }

    fn push(&mut self, op: Op, value: Tensor) -> Vid {
        self.nodes.push(Node { op, value });
        self.nodes.len() - 1
    }

    pub fn leaf(&mut self, t: Tensor) -> Vid {
        self.push(Op::Leaf, t)
    }

    pub fn matmul(&mut self, a: Vid, b: Vid) -> Vid {
        let v = matmul(&self.nodes[a].value, &self.nodes[b].value);
        self.push(Op::MatMul(a, b), v)
    }

    pub fn add(&mut self, a: Vid, b: Vid) -> Vid {
        debug_assert_eq!(self.nodes[a].value.shape(), self.nodes[b].value.shape());
        let mut v = self.nodes[a].value.clone();
        v.add_assign(&self.nodes[b].value);
        self.push(Op::Add(a, b), v)
    }

    pub fn add_n(&mut self, inputs: &[Vid]) -> Vid {
        debug_assert!(!inputs.is_empty());
        let mut v = self.nodes[inputs[0]].value.clone();
        for &i in &inputs[1..] {
            v.add_assign(&self.nodes[i].value);
        }
        self.push(Op::AddN(inputs.to_vec()), v)
    }

    pub fn add_row(&mut self, a: Vid, row: Vid) -> Vid {
        let rt = &self.nodes[row].value;
        debug_assert_eq!(self.nodes[a].value.cols(), rt.cols());
        debug_assert_eq!(rt.rows(), 1);
        let mut v = self.nodes[a].value.clone();
        let cols = v.cols();
        let row_data: Vec<f64> = self.nodes[row].value.as_slice().to_vec();
        for r in 0..v.rows() {
            for c in 0..cols {
                v.row_mut(r)[c] += row_data[c];
            }
        }
        self.push(Op::AddRow(a, row), v)
    }

    pub fn sub(&mut self, a: Vid, b: Vid) -> Vid {
        debug_assert_eq!(self.nodes[a].value.shape(), self.nodes[b].value.shape());
        let mut v = self.nodes[a].value.clone();
        v.add_scaled(-1.0, &self.nodes[b].value);
        self.push(Op::Sub(a, b), v)
    }

    pub fn mul(&mut self, a: Vid, b: Vid) -> Vid {
        debug_assert_eq!(self.nodes[a].value.shape(), self.nodes[b].value.shape());
        let mut v = self.nodes[a].value.clone();
        for (x, y) in v.as_mut_slice().iter_mut().zip(self.nodes[b].value.as_slice()) {
            *x *= y;
        }
        self.push(Op::Mul(a, b), v)
    }

    pub fn scale(&mut self, a: Vid, c: f64) -> Vid {
        let v = self.nodes[a].value.map(|x| c * x);
        self.push(Op::Scale(a, c), v)
    }

    pub fn sigmoid(&mut self, a: Vid) -> Vid {
        let v = self.nodes[a].value.map(|x| 1.0 / (1.0 + (-x).exp()));
        self.push(Op::Sigmoid(a), v)
    }

    pub fn tanh(&mut self, a: Vid) -> Vid {
        let v = self.nodes[a].value.map(f64::tanh);
        self.push(Op::Tanh(a), v)
    }

    pub fn slice_cols(&mut self, a: Vid, start: usize, len: usize) -> Vid {
        let src = &self.nodes[a].value;
        debug_assert!(start + len <= src.cols());
        let rows = src.rows();
        let mut v = Tensor::zeros(&[rows, len]);
        for r in 0..rows {
            v.row_mut(r).copy_from_slice(&src.row(r)[start..start + len]);
        }
        self.push(Op::SliceCols(a, start, len), v)
    }

    pub fn slice_rows(&mut self, a: Vid, start: usize, len: usize) -> Vid {
        let src = &self.nodes[a].value;
        debug_assert!(start + len <= src.rows());
        let cols = src.cols();
        let mut v = Tensor::zeros(&[len, cols]);
        v.as_mut_slice()
            .copy_from_slice(&src.as_slice()[start * cols..(start + len) * cols]);
        self.push(Op::SliceRows(a, start, len), v)
    }

    /// Mean over the T row blocks of a stacked [T*m x d] sequence: [m x d].
    pub fn mean_over_blocks(&mut self, a: Vid, t_steps: usize) -> Vid {
        let src = &self.nodes[a].value;
        debug_assert_eq!(src.rows() % t_steps, 0);
        let m = src.rows() / t_steps;
        let d = src.cols();
        let mut v = Tensor::zeros(&[m, d]);
        for t in 0..t_steps {
            for r in 0..m {
                axpy(v.row_mut(r), 1.0, src.row(t * m + r));
            }
        }
        let scale = 1.0 / t_steps as f64;
        for x in v.as_mut_slice() {
            *x *= scale;
        }
        self.push(Op::MeanOverBlocks(a, t_steps), v)
    }

    /// One LSTM layer over a stacked [T*m x in] sequence: standard cell
    /// (input/forget/output gates, tanh candidate, no peepholes), gates
    /// packed [i | f | g | o]. Returns the stacked hidden states [T*m x h].
    /// `init` optionally provides [m x h] initial hidden and cell states.
    pub fn lstm_layer(
        &mut self,
        x: Vid,
        wx: Vid,
        wh: Vid,
        b: Vid,
        init: Option<(Vid, Vid)>,
        layout: SeqLayout,
    ) -> Vid {
        let (t_steps, m) = (layout.t_steps, layout.batch);
        let xv = &self.nodes[x].value;
        let in_size = xv.cols();
        debug_assert_eq!(xv.rows(), t_steps * m);
        let wxv = &self.nodes[wx].value;
        let h4 = wxv.cols();
        let h = h4 / 4;
        debug_assert_eq!(wxv.shape(), &[in_size, h4]);
        debug_assert_eq!(self.nodes[wh].value.shape(), &[h, h4]);
        debug_assert_eq!(self.nodes[b].value.shape(), &[1, h4]);

        // Input contribution for every timestep in one pass.
        let mut gates = Tensor::zeros(&[t_steps * m, h4]);
        mm_into(
            gates.as_mut_slice(),
            xv.as_slice(),
            t_steps * m,
            in_size,
            wxv.as_slice(),
            h4,
        );
        {
            let bias = self.nodes[b].value.as_slice().to_vec();
            for r in 0..t_steps * m {
                axpy(gates.row_mut(r), 1.0, &bias);
            }
        }

        let mut saved = LstmSaved {
            input_gate: Tensor::zeros(&[t_steps * m, h]),
            forget_gate: Tensor::zeros(&[t_steps * m, h]),
            candidate: Tensor::zeros(&[t_steps * m, h]),
            output_gate: Tensor::zeros(&[t_steps * m, h]),
            cell: Tensor::zeros(&[t_steps * m, h]),
            cell_tanh: Tensor::zeros(&[t_steps * m, h]),
        };
        let mut hidden = Tensor::zeros(&[t_steps * m, h]);

        let (h0, c0) = match init {
            Some((hv, cv)) => (
                self.nodes[hv].value.as_slice().to_vec(),
                self.nodes[cv].value.as_slice().to_vec(),
            ),
            None => (vec![0.0; m * h], vec![0.0; m * h]),
        };
        let whv = self.nodes[wh].value.as_slice();

        let sigmoid = |v: f64| 1.0 / (1.0 + (-v).exp());
        for t in 0..t_steps {
            let block = t * m;
            // gates[t] += h_prev * Wh
            {
                let h_prev: &[f64] = if t == 0 {
                    &h0
                } else {
                    &hidden.as_slice()[(block - m) * h..block * h]
                };
                // Borrow juggling: gates row block is disjoint from hidden.
                let gates_block = &mut gates.as_mut_slice()[block * h4..(block + m) * h4];
                mm_into(gates_block, h_prev, m, h, whv, h4);
            }
            for r in 0..m {
                let row = block + r;
                let g_row = &gates.as_slice()[row * h4..(row + 1) * h4];
                let c_prev: &[f64] = if t == 0 {
                    &c0[r * h..(r + 1) * h]
                } else {
                    &saved.cell.as_slice()[(row - m) * h..(row - m + 1) * h]
                };
                // Split the packed gate row and write all per-unit values.
                for u in 0..h {
                    let i_g = sigmoid(g_row[u]);
                    let f_g = sigmoid(g_row[h + u]);
                    let g_c = g_row[2 * h + u].tanh();
                    let o_g = sigmoid(g_row[3 * h + u]);
                    let c = f_g * c_prev[u] + i_g * g_c;
                    let ct = c.tanh();
                    let idx = row * h + u;
                    saved.input_gate.as_mut_slice()[idx] = i_g;
                    saved.forget_gate.as_mut_slice()[idx] = f_g;
                    saved.candidate.as_mut_slice()[idx] = g_c;
                    saved.output_gate.as_mut_slice()[idx] = o_g;
                    saved.cell.as_mut_slice()[idx] = c;
                    saved.cell_tanh.as_mut_slice()[idx] = ct;
                    hidden.as_mut_slice()[idx] = o_g * ct;
                }
            }
        }

        self.push(
            Op::Lstm(Box::new(LstmNode {
                x,
                wx,
                wh,
                b,
                init,
                layout,
                hidden: h,
                saved,
            })),
            hidden,
        )
    }

    pub fn sum(&mut self, a: Vid) -> Vid {
        let s: f64 = self.nodes[a].value.as_slice().iter().sum();
        self.push(Op::Sum(a), Tensor::scalar(s))
    }

    pub fn mean(&mut self, a: Vid) -> Vid {
        debug_assert!(!self.nodes[a].value.is_empty());
        let n = self.nodes[a].value.len() as f64;
        let s: f64 = self.nodes[a].value.as_slice().iter().sum();
        self.push(Op::Mean(a), Tensor::scalar(s / n))
    }

    pub fn abs(&mut self, a: Vid) -> Vid {
        let v = self.nodes[a].value.map(f64::abs);
        self.push(Op::Abs(a), v)
    }

    /// Mean of -[t ln p + (1-t) ln(1-p)] with p clamped to [1e-7, 1-1e-7].
    pub fn bce(&mut self, probs: Vid, targets: Tensor) -> Result<Vid> {
        let p = &self.nodes[probs].value;
        if p.is_empty() {
            return Err(Error::Argument("bce loss on empty input".into()));
        }
        if p.shape() != targets.shape() {
            return Err(Error::Argument(format!(
                "bce loss shape mismatch: probabilities {:?} vs targets {:?}",
                p.shape(),
                targets.shape()
            )));
        }
        let mut total = 0.0;
        for (&pi, &ti) in p.as_slice().iter().zip(targets.as_slice()) {
            let pc = pi.clamp(PROB_EPS, 1.0 - PROB_EPS);
            total -= ti * pc.ln() + (1.0 - ti) * (1.0 - pc).ln();
        }
        let v = Tensor::scalar(total / p.len() as f64);
        Ok(self.push(Op::Bce(probs, targets), v))
    }

    /// Reverse pass from a scalar loss. Returns per-value gradients.
    pub fn backward(&self, loss: Vid) -> Result<Gradients> {
        if loss >= self.nodes.len() {
            return Err(Error::Usage(format!(
                "backward target {loss} is not on the tape ({} values recorded)",
                self.nodes.len()
            )));
        }
        if !self.nodes[loss].value.is_scalar() {
            return Err(Error::Usage(format!(
                "backward target must be scalar, got shape {:?}",
                self.nodes[loss].value.shape()
            )));
        }
        let mut grads: Vec<Option<Tensor>> = (0..self.nodes.len()).map(|_| None).collect();
        grads[loss] = Some(Tensor::scalar(1.0));

        for id in (0..=loss).rev() {
            let Some(up) = grads[id].take() else { continue };
            self.push_input_grads(id, &up, &mut grads);
            grads[id] = Some(up);
        }
        Ok(Gradients { grads })
    }

    fn push_input_grads(&self, id: Vid, up: &Tensor, grads: &mut [Option<Tensor>]) {
        let acc = |grads: &mut [Option<Tensor>], v: Vid, delta: Tensor| {
            match &mut grads[v] {
                Some(g) => g.add_assign(&delta),
                slot @ None => *slot = Some(delta),
            }
        };
        match &self.nodes[id].op {
            Op::Leaf => {}
            Op::MatMul(a, b) => {
                let da = matmul_nt(up, &self.nodes[*b].value);
                let db = matmul_tn(&self.nodes[*a].value, up);
                acc(grads, *a, da);
                acc(grads, *b, db);
            }
            Op::Add(a, b) => {
                acc(grads, *a, up.clone());
                acc(grads, *b, up.clone());
            }
            Op::AddN(inputs) => {
                for &i in inputs {
                    acc(grads, i, up.clone());
                }
            }
            Op::AddRow(a, row) => {
                acc(grads, *a, up.clone());
                let cols = up.cols();
                let mut dr = Tensor::zeros(&[1, cols]);
                for r in 0..up.rows() {
                    axpy(dr.as_mut_slice(), 1.0, up.row(r));
                }
                acc(grads, *row, dr);
            }
            Op::Sub(a, b) => {
                acc(grads, *a, up.clone());
                acc(grads, *b, up.map(|x| -x));
            }
            Op::Mul(a, b) => {
                let mut da = up.clone();
                for (x, y) in da.as_mut_slice().iter_mut().zip(self.nodes[*b].value.as_slice()) {
                    *x *= y;
                }
                let mut db = up.clone();
                for (x, y) in db.as_mut_slice().iter_mut().zip(self.nodes[*a].value.as_slice()) {
                    *x *= y;
                }
                acc(grads, *a, da);
                acc(grads, *b, db);
            }
            Op::Scale(a, c) => {
                acc(grads, *a, up.map(|x| c * x));
            }
            Op::Sigmoid(a) => {
                let mut da = up.clone();
                for (x, s) in da.as_mut_slice().iter_mut().zip(self.nodes[id].value.as_slice()) {
                    *x *= s * (1.0 - s);
                }
                acc(grads, *a, da);
            }
            Op::Tanh(a) => {
                let mut da = up.clone();
                for (x, t) in da.as_mut_slice().iter_mut().zip(self.nodes[id].value.as_slice()) {
                    *x *= 1.0 - t * t;
                }
                acc(grads, *a, da);
            }
            Op::SliceCols(a, start, len) => {
                let src = &self.nodes[*a].value;
                let mut da = Tensor::zeros(src.shape());
                for r in 0..src.rows() {
                    da.row_mut(r)[*start..*start + *len].copy_from_slice(up.row(r));
                }
                acc(grads, *a, da);
            }
            Op::SliceRows(a, start, len) => {
                let src = &self.nodes[*a].value;
                let cols = src.cols();
                let mut da = Tensor::zeros(src.shape());
                da.as_mut_slice()[*start * cols..(*start + *len) * cols]
                    .copy_from_slice(up.as_slice());
                acc(grads, *a, da);
            }
            Op::MeanOverBlocks(a, t_steps) => {
                let src = &self.nodes[*a].value;
                let m = src.rows() / t_steps;
                let scale = 1.0 / *t_steps as f64;
                let mut da = Tensor::zeros(src.shape());
                for t in 0..*t_steps {
                    for r in 0..m {
                        axpy(da.row_mut(t * m + r), scale, up.row(r));
                    }
                }
                acc(grads, *a, da);
            }
            Op::Sum(a) => {
                let g = up.item();
                let da = self.nodes[*a].value.map(|_| g);
                acc(grads, *a, da);
            }
            Op::Mean(a) => {
                let g = up.item() / self.nodes[*a].value.len() as f64;
                let da = self.nodes[*a].value.map(|_| g);
                acc(grads, *a, da);
            }
            Op::Abs(a) => {
                let mut da = up.clone();
                for (x, v) in da.as_mut_slice().iter_mut().zip(self.nodes[*a].value.as_slice()) {
                    *x *= if *v > 0.0 {
                        1.0
                    } else if *v < 0.0 {
                        -1.0
                    } else {
                        0.0
                    };
                }
                acc(grads, *a, da);
            }
            Op::Lstm(node) => {
                self.lstm_backward(node, &self.nodes[id].value, up, grads, &acc);
            }
            Op::Bce(probs, targets) => {
                let g = up.item();
                let p = &self.nodes[*probs].value;
                let n = p.len() as f64;
                let mut dp = Tensor::zeros(p.shape());
                for ((d, &pi), &ti) in dp
                    .as_mut_slice()
                    .iter_mut()
                    .zip(p.as_slice())
                    .zip(targets.as_slice())
                {
                    // Flat outside the clamp region.
                    if pi < PROB_EPS || pi > 1.0 - PROB_EPS {
                        *d = 0.0;
                    } else {
                        *d = g * (pi - ti) / (pi * (1.0 - pi)) / n;
                    }
                }
                acc(grads, *probs, dp);
            }
        }
    }

    /// Reverse pass through one fused LSTM layer.
    fn lstm_backward(
        &self,
        node: &LstmNode,
        hidden: &Tensor,
        up: &Tensor,
        grads: &mut [Option<Tensor>],
        acc: &impl Fn(&mut [Option<Tensor>], Vid, Tensor),
    ) {
        let (t_steps, m) = (node.layout.t_steps, node.layout.batch);
        let h = node.hidden;
        let h4 = 4 * h;
        let xv = &self.nodes[node.x].value;
        let in_size = xv.cols();
        let whv = self.nodes[node.wh].value.as_slice();
        let s = &node.saved;

        let (h0, c0) = match node.init {
            Some((hv, cv)) => (
                self.nodes[hv].value.as_slice().to_vec(),
                self.nodes[cv].value.as_slice().to_vec(),
            ),
            None => (vec![0.0; m * h], vec![0.0; m * h]),
        };

        // Pre-activation gate gradients for every timestep, filled in the
        // reverse time loop, then turned into weight/input gradients with
        // three large matrix products.
        let mut d_gates = Tensor::zeros(&[t_steps * m, h4]);
        let mut dh_carry = vec![0.0; m * h];
        let mut dc_carry = vec![0.0; m * h];

        for t in (0..t_steps).rev() {
            let block = t * m;
            for r in 0..m {
                let row = block + r;
                let up_row = up.row(row);
                let c_prev: &[f64] = if t == 0 {
                    &c0[r * h..(r + 1) * h]
                } else {
                    &s.cell.as_slice()[(row - m) * h..(row - m + 1) * h]
                };
                let dg_row = &mut d_gates.as_mut_slice()[row * h4..(row + 1) * h4];
                for u in 0..h {
                    let idx = row * h + u;
                    let dh = up_row[u] + dh_carry[r * h + u];
                    let i_g = s.input_gate.as_slice()[idx];
                    let f_g = s.forget_gate.as_slice()[idx];
                    let g_c = s.candidate.as_slice()[idx];
                    let o_g = s.output_gate.as_slice()[idx];
                    let ct = s.cell_tanh.as_slice()[idx];

                    let d_o = dh * ct;
                    let dc = dc_carry[r * h + u] + dh * o_g * (1.0 - ct * ct);
                    let d_i = dc * g_c;
                    let d_g = dc * i_g;
                    let d_f = dc * c_prev[u];
                    dc_carry[r * h + u] = dc * f_g;

                    dg_row[u] = d_i * i_g * (1.0 - i_g);
                    dg_row[h + u] = d_f * f_g * (1.0 - f_g);
                    dg_row[2 * h + u] = d_g * (1.0 - g_c * g_c);
                    dg_row[3 * h + u] = d_o * o_g * (1.0 - o_g);
                }
            }
            // dh_prev = dGates_t * Wh^T
            dh_carry.iter_mut().for_each(|v| *v = 0.0);
            mm_nt_into(
                &mut dh_carry,
                &d_gates.as_slice()[block * h4..(block + m) * h4],
                m,
                h4,
                whv,
                h,
            );
        }

        // dX = dGates * Wx^T
        let mut dx = Tensor::zeros(&[t_steps * m, in_size]);
        mm_nt_into(
            dx.as_mut_slice(),
            d_gates.as_slice(),
            t_steps * m,
            h4,
            self.nodes[node.wx].value.as_slice(),
            in_size,
        );
        acc(grads, node.x, dx);

        // dWx = X^T * dGates
        let mut dwx = Tensor::zeros(&[in_size, h4]);
        mm_tn_into(
            dwx.as_mut_slice(),
            xv.as_slice(),
            t_steps * m,
            in_size,
            d_gates.as_slice(),
            h4,
        );
        acc(grads, node.wx, dwx);

        // dWh = Hshift^T * dGates, with Hshift the hidden states delayed one
        // step (h0 in front).
        let mut h_shift = vec![0.0; t_steps * m * h];
        h_shift[..m * h].copy_from_slice(&h0);
        h_shift[m * h..].copy_from_slice(&hidden.as_slice()[..(t_steps - 1) * m * h]);
        let mut dwh = Tensor::zeros(&[h, h4]);
        mm_tn_into(
            dwh.as_mut_slice(),
            &h_shift,
            t_steps * m,
            h,
            d_gates.as_slice(),
            h4,
        );
        acc(grads, node.wh, dwh);

        // db = column sum of dGates.
        let mut db = Tensor::zeros(&[1, h4]);
        for r in 0..t_steps * m {
            axpy(db.as_mut_slice(), 1.0, d_gates.row(r));
        }
        acc(grads, node.b, db);

        if let Some((hv, cv)) = node.init {
            acc(grads, hv, Tensor::from_vec(&[m, h], dh_carry).expect("sized"));
            acc(grads, cv, Tensor::from_vec(&[m, h], dc_carry).expect("sized"));
        }
    }

    /// Register every parameter of a set as a leaf.
    pub fn bind(&mut self, params: &ParamSet) -> Binding {
        let mut pairs = Vec::with_capacity(params.len());
        for (name, p) in params.iter() {
            let vid = self.leaf(p.value.clone());
            pairs.push((name.to_string(), vid));
        }
        Binding { pairs }
    }
}

/// Per-value gradients produced by [`Tape::backward`].
pub struct Gradients {
    grads: Vec<Option<Tensor>>,
}

impl Gradients {
    /// Gradient of the loss with respect to a recorded value, if the value
    /// influenced the loss.
    pub fn wrt(&self, v: Vid) -> Option<&Tensor> {
        self.grads.get(v).and_then(|g| g.as_ref())
    }
}

/// Maps parameter names to leaf ids for one forward pass.
pub struct Binding {
    pairs: Vec<(String, Vid)>,
}

impl Binding {
    pub fn vid(&self, name: &str) -> Result<Vid> {
        self.pairs
            .iter()
            .find(|(n, _)| n == name)
            .map(|&(_, v)| v)
            .ok_or_else(|| Error::Config(format!("parameter {name:?} not bound to tape")))
    }

    /// Accumulate tape gradients into the parameter set's gradient slots.
    pub fn accumulate_into(&self, grads: &Gradients, params: &mut ParamSet) -> Result<()> {
        for (name, vid) in &self.pairs {
            if let Some(g) = grads.wrt(*vid) {
                params.accumulate_grad(name, g)?;
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sum_gradient_is_ones() {
        let mut tape = Tape::new();
        let x = tape.leaf(Tensor::from_vec(&[2, 2], vec![1.0, -2.0, 3.0, 4.0]).unwrap());
        let loss = tape.sum(x);
        let grads = tape.backward(loss).unwrap();
        assert_eq!(grads.wrt(x).unwrap().as_slice(), &[1.0; 4]);
    }

    #[test]
    fn backward_rejects_missing_or_nonscalar() {
        let mut tape = Tape::new();
        let x = tape.leaf(Tensor::from_vec(&[2], vec![1.0, 2.0]).unwrap());
        assert!(matches!(tape.backward(99), Err(Error::Usage(_))));
        assert!(matches!(tape.backward(x), Err(Error::Usage(_))));
    }

    #[test]
    fn bce_hand_values() {
        let mut tape = Tape::new();
        let p = tape.leaf(Tensor::from_vec(&[1], vec![0.5]).unwrap());
        let loss = tape.bce(p, Tensor::from_vec(&[1], vec![1.0]).unwrap()).unwrap();
        assert!((tape.value(loss).item() - std::f64::consts::LN_2).abs() < 1e-12);

        let mut tape = Tape::new();
        let p = tape.leaf(Tensor::from_vec(&[2], vec![0.5, 0.5]).unwrap());
        let loss = tape
            .bce(p, Tensor::from_vec(&[2], vec![1.0, 0.0]).unwrap())
            .unwrap();
        assert!((tape.value(loss).item() - std::f64::consts::LN_2).abs() < 1e-12);

        let mut tape = Tape::new();
        let p = tape.leaf(Tensor::from_vec(&[1], vec![0.9]).unwrap());
        let loss = tape.bce(p, Tensor::from_vec(&[1], vec![1.0]).unwrap()).unwrap();
        assert!((tape.value(loss).item() - (-(0.9f64.ln()))).abs() < 1e-12);
    }

    #[test]
    fn bce_rejects_empty_and_mismatched() {
        let mut tape = Tape::new();
        let p = tape.leaf(Tensor::from_vec(&[0], vec![]).unwrap());
        assert!(tape.bce(p, Tensor::from_vec(&[0], vec![]).unwrap()).is_err());
        let p = tape.leaf(Tensor::from_vec(&[2], vec![0.5, 0.5]).unwrap());
        assert!(tape.bce(p, Tensor::from_vec(&[1], vec![1.0]).unwrap()).is_err());
    }

    /// Central finite differences on a scalar function of leaf values.
    fn finite_diff(f: impl Fn(&[f64]) -> f64, at: &[f64], eps: f64) -> Vec<f64> {
        let mut grad = vec![0.0; at.len()];
        let mut x = at.to_vec();
        for i in 0..at.len() {
            x[i] = at[i] + eps;
            let hi = f(&x);
            x[i] = at[i] - eps;
            let lo = f(&x);
            x[i] = at[i];
            grad[i] = (hi - lo) / (2.0 * eps);
        }
        grad
    }

    #[test]
    fn composite_gradient_matches_finite_differences() {
        // loss = bce(sigmoid(w . x), t) as a function of w.
        let x = vec![0.3, -0.7, 0.2];
        let t = 1.0;
        let w0 = vec![0.1, 0.4, -0.2];
        let eval = |w: &[f64]| {
            let mut tape = Tape::new();
            let wv = tape.leaf(Tensor::from_vec(&[1, 3], w.to_vec()).unwrap());
            let xv = tape.leaf(Tensor::from_vec(&[3, 1], x.clone()).unwrap());
            let z = tape.matmul(wv, xv);
            let p = tape.sigmoid(z);
            let loss = tape.bce(p, Tensor::from_vec(&[1, 1], vec![t]).unwrap()).unwrap();
            tape.value(loss).item()
        };
        let fd = finite_diff(eval, &w0, 1e-5);

        let mut tape = Tape::new();
        let wv = tape.leaf(Tensor::from_vec(&[1, 3], w0.clone()).unwrap());
        let xv = tape.leaf(Tensor::from_vec(&[3, 1], x.clone()).unwrap());
        let z = tape.matmul(wv, xv);
        let p = tape.sigmoid(z);
        let loss = tape.bce(p, Tensor::from_vec(&[1, 1], vec![t]).unwrap()).unwrap();
        let grads = tape.backward(loss).unwrap();
        let analytic = grads.wrt(wv).unwrap().as_slice();
        for (a, b) in analytic.iter().zip(&fd) {
            assert!((a - b).abs() < 1e-8, "{a} vs {b}");
        }
    }

    #[test]
    fn shared_operand_accumulates() {
        // loss = sum(x * x); d/dx = 2x.
        let mut tape = Tape::new();
        let x = tape.leaf(Tensor::from_vec(&[3], vec![1.0, -2.0, 0.5]).unwrap());
        let sq = tape.mul(x, x);
        let loss = tape.sum(sq);
        let grads = tape.backward(loss).unwrap();
        assert_eq!(grads.wrt(x).unwrap().as_slice(), &[2.0, -4.0, 1.0]);
    }

    #[test]
    fn slice_and_addrow_roundtrip_gradients() {
        let mut tape = Tape::new();
        let a = tape.leaf(Tensor::from_vec(&[2, 4], (1..=8).map(f64::from).collect()).unwrap());
        let row = tape.leaf(Tensor::from_vec(&[1, 4], vec![0.5; 4]).unwrap());
        let shifted = tape.add_row(a, row);
        let left = tape.slice_cols(shifted, 0, 2);
        let loss = tape.sum(left);
        let grads = tape.backward(loss).unwrap();
        assert_eq!(
            grads.wrt(a).unwrap().as_slice(),
            &[1.0, 1.0, 0.0, 0.0, 1.0, 1.0, 0.0, 0.0]
        );
        assert_eq!(grads.wrt(row).unwrap().as_slice(), &[2.0, 2.0, 0.0, 0.0]);
    }
}
