//! Sender and Receiver policies, their losses and the training steps.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::handcrafted::{Alphabet, Signal, EOS};
use crate::meanings::{decode_blocks, encode_meaning, Meaning, MeaningVector, Role, Vocabulary};
use crate::neural::{adam_step, categorical_sample, AdamConfig, Graph, GruCell, NodeId, ParamId, ParamStore, Tensor, PROB_FLOOR};

/// Rows per graph when evaluating large meaning sets.
const EVAL_CHUNK: usize = 1024;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DecodeMode {
    Sample,
    Greedy,
}

fn add_linear<R: Rng + ?Sized>(store: &mut ParamStore, name: &str, out: usize, input: usize, rng: &mut R) -> (ParamId, ParamId) {
    let k = 1.0 / (input as f64).sqrt();
    let w = store.add_uniform(&format!("{name}.w"), out, input, k, rng);
    let b = store.add_uniform(&format!("{name}.b"), 1, out, k, rng);
    (w, b)
}

fn argmax(row: &[f64]) -> usize {
    let mut best = 0;
    for (i, &x) in row.iter().enumerate() {
        if x > row[best] {
            best = i;
        }
    }
    best
}

/// Sender network: meaning → initial hidden state → GRU emitting symbols.
#[derive(Debug, Clone, PartialEq)]
pub struct SenderParams {
    pub store: ParamStore,
    meaning_w: ParamId,
    meaning_b: ParamId,
    start: ParamId,
    embedding: ParamId,
    cell: GruCell,
    out_w: ParamId,
    out_b: ParamId,
    pub vocab: Vocabulary,
    pub alphabet: Alphabet,
    pub hidden: usize,
}

impl SenderParams {
    pub fn new<R: Rng + ?Sized>(vocab: &Vocabulary, alphabet: Alphabet, hidden: usize, rng: &mut R) -> Self {
        let mut store = ParamStore::new();
        let symbols = alphabet.total();
        let (meaning_w, meaning_b) = add_linear(&mut store, "meaning", hidden, vocab.vector_len(), rng);
        let start = store.add_normal("start", 1, hidden, 1.0, rng);
        let embedding = store.add_normal("embedding", symbols, hidden, 1.0, rng);
        let cell = GruCell::register(&mut store, "gru", hidden, hidden, rng);
        let (out_w, out_b) = add_linear(&mut store, "out", symbols, hidden, rng);
        SenderParams {
            store,
            meaning_w,
            meaning_b,
            start,
            embedding,
            cell,
            out_w,
            out_b,
            vocab: vocab.clone(),
            alphabet,
            hidden,
        }
    }

    /// Output width: ordinary symbols plus EOS.
    pub fn output_dim(&self) -> usize {
        self.alphabet.total()
    }

    /// Logits of the first emission step for one meaning.
    pub fn first_step_logits(&self, m: &Meaning) -> Vec<f64> {
        let mut g = Graph::new();
        let s = &self.store;
        let x = g.constant(Tensor::row_vector(encode_meaning(m, &self.vocab).0));
        let (mw, mb) = (g.param(s, self.meaning_w), g.param(s, self.meaning_b));
        let h0 = g.linear(x, mw, mb);
        let start = g.param(s, self.start);
        let h = self.cell.step(&mut g, s, start, h0);
        let (ow, ob) = (g.param(s, self.out_w), g.param(s, self.out_b));
        let logits = g.linear(h, ow, ob);
        g.value(logits).data().to_vec()
    }

    /// Records a batched rollout on `g`.
    pub fn rollout<R: Rng + ?Sized>(
        &self,
        g: &mut Graph,
        meanings: &[Meaning],
        mode: DecodeMode,
        rng: &mut R,
        max_len: usize,
    ) -> Result<BatchRollout> {
        if max_len == 0 {
            return Err(Error::InvalidConfig("max_len must be at least 1".into()));
        }
        if meanings.is_empty() {
            return Err(Error::EmptyInput("rollout over no meanings".into()));
        }
        let b = meanings.len();
        let s = &self.store;
        let width = self.vocab.vector_len();
        let mut inputs = Tensor::zeros(b, width);
        for (i, m) in meanings.iter().enumerate() {
            m.validate(&self.vocab)?;
            inputs.row_mut(i).copy_from_slice(&encode_meaning(m, &self.vocab).0);
        }
        let x = g.constant(inputs);
        let (mw, mb) = (g.param(s, self.meaning_w), g.param(s, self.meaning_b));
        let mut h = g.linear(x, mw, mb);
        let (ow, ob) = (g.param(s, self.out_w), g.param(s, self.out_b));
        let table = g.param(s, self.embedding);

        let mut bodies: Vec<Vec<usize>> = vec![Vec::new(); b];
        let mut active = vec![true; b];
        let mut prev = vec![EOS; b];
        let mut steps = Vec::new();
        for t in 0..max_len {
            let input = if t == 0 {
                let start = g.param(s, self.start);
                g.broadcast(start, b)
            } else {
                g.embed(table, &prev)
            };
            h = self.cell.step(g, s, input, h);
            let logits = g.linear(h, ow, ob);
            let logp = g.log_softmax(logits);
            g.check_finite()?;
            let lp = g.value(logp);
            let mut picks = vec![Vec::new(); b];
            for row in 0..b {
                if !active[row] {
                    continue;
                }
                let sym = match mode {
                    DecodeMode::Greedy => argmax(lp.row(row)),
                    DecodeMode::Sample => {
                        let probs: Vec<f64> = lp.row(row).iter().map(|l| l.exp()).collect();
                        categorical_sample(&probs, rng)
                    }
                };
                picks[row] = vec![sym];
                prev[row] = sym;
                if sym != EOS {
                    bodies[row].push(sym);
                }
            }
            let was_active = active.clone();
            for row in 0..b {
                if active[row] && prev[row] == EOS {
                    active[row] = false;
                }
            }
            let log_prob = g.pick_sum(logp, picks);
            let entropy = g.entropy(logp);
            steps.push(RolloutStep { log_prob, entropy, active: was_active });
            if active.iter().all(|a| !a) {
                break;
            }
        }
        let signals = bodies.iter().map(|body| Signal::from_body(body)).collect::<Result<Vec<_>>>()?;
        Ok(BatchRollout { signals, steps })
    }

    /// Greedy signals for many meanings, chunked.
    pub fn speak<R: Rng + ?Sized>(&self, meanings: &[Meaning], max_len: usize, rng: &mut R) -> Result<Vec<Signal>> {
        let mut out = Vec::with_capacity(meanings.len());
        for chunk in meanings.chunks(EVAL_CHUNK) {
            let mut g = Graph::new();
            out.extend(self.rollout(&mut g, chunk, DecodeMode::Greedy, rng, max_len)?.signals);
        }
        Ok(out)
    }
}

#[derive(Debug, Clone)]
struct RolloutStep {
    log_prob: NodeId,
    entropy: NodeId,
    active: Vec<bool>,
}

/// Graph handles for a batched Sender rollout.
#[derive(Debug, Clone)]
pub struct BatchRollout {
    pub signals: Vec<Signal>,
    steps: Vec<RolloutStep>,
}

impl BatchRollout {
    pub fn lengths(&self) -> Vec<usize> {
        self.signals.iter().map(Signal::len).collect()
    }

    /// Per-row bookkeeping extracted from the graph values.
    pub fn rollouts(&self, g: &Graph) -> Vec<SenderRollout> {
        self.signals
            .iter()
            .enumerate()
            .map(|(row, signal)| {
                let mut log_probs = Vec::new();
                let mut entropies = Vec::new();
                for st in self.steps.iter().filter(|st| st.active[row]) {
                    log_probs.push(g.value(st.log_prob).get(row, 0));
                    entropies.push(g.value(st.entropy).get(row, 0));
                }
                SenderRollout { signal: signal.clone(), log_probs, entropies, length: signal.len() }
            })
            .collect()
    }

    /// Scalar `Σ_b coef[b] · Σ_t log p − entropy_coeff / B · Σ_b Σ_t H`, with
    /// `coef` held constant.
    pub fn objective(&self, g: &mut Graph, coef: &[f64], entropy_coeff: f64) -> NodeId {
        let b = self.signals.len() as f64;
        let mut total: Option<NodeId> = None;
        for st in &self.steps {
            let lw: Vec<f64> = st.active.iter().zip(coef).map(|(&a, &c)| if a { c } else { 0.0 }).collect();
            let ew: Vec<f64> = st.active.iter().map(|&a| if a { -entropy_coeff / b } else { 0.0 }).collect();
            let lp = g.weighted_sum(st.log_prob, lw);
            let en = g.weighted_sum(st.entropy, ew);
            let term = g.add(lp, en);
            total = Some(match total {
                Some(t) => g.add(t, term),
                None => term,
            });
        }
        total.expect("rollout has at least one step")
    }
}

/// One Sender episode.
#[derive(Debug, Clone, PartialEq)]
pub struct SenderRollout {
    pub signal: Signal,
    /// Chosen-symbol log-probabilities, one per policy step (EOS step included).
    pub log_probs: Vec<f64>,
    pub entropies: Vec<f64>,
    /// Symbols before EOS.
    pub length: usize,
}

/// Single-meaning rollout.
pub fn sender_forward<R: Rng + ?Sized>(
    mv: &MeaningVector,
    p: &SenderParams,
    mode: DecodeMode,
    rng: &mut R,
    max_len: usize,
) -> Result<SenderRollout> {
    if mv.0.len() != p.vocab.vector_len() {
        return Err(Error::InvalidMeaning(format!(
            "meaning vector has {} entries, expected {}",
            mv.0.len(),
            p.vocab.vector_len()
        )));
    }
    let m = decode_blocks(&mv.0, &p.vocab);
    let mut g = Graph::new();
    let batch = p.rollout(&mut g, &[m], mode, rng, max_len)?;
    Ok(batch.rollouts(&g).remove(0))
}

/// Receiver network: GRU over the signal, then per-role logits.
#[derive(Debug, Clone, PartialEq)]
pub struct ReceiverParams {
    pub store: ParamStore,
    embedding: ParamId,
    cell: GruCell,
    out_w: ParamId,
    out_b: ParamId,
    pub vocab: Vocabulary,
    pub alphabet: Alphabet,
    pub hidden: usize,
}

/// Five per-role distributions.
#[derive(Debug, Clone, PartialEq)]
pub struct ReceiverPrediction {
    pub roles: [Vec<f64>; 5],
}

impl ReceiverPrediction {
    pub fn argmax(&self) -> Meaning {
        Meaning(std::array::from_fn(|i| argmax(&self.roles[i])))
    }
}

impl ReceiverParams {
    pub fn new<R: Rng + ?Sized>(vocab: &Vocabulary, alphabet: Alphabet, hidden: usize, rng: &mut R) -> Self {
        let mut store = ParamStore::new();
        let embedding = store.add_normal("embedding", alphabet.total(), hidden, 1.0, rng);
        let cell = GruCell::register(&mut store, "gru", hidden, hidden, rng);
        let (out_w, out_b) = add_linear(&mut store, "out", vocab.vector_len(), hidden, rng);
        ReceiverParams { store, embedding, cell, out_w, out_b, vocab: vocab.clone(), alphabet, hidden }
    }

    /// Sets the output layer to zero (uniform predictions).
    pub fn zero_output(&mut self) {
        for id in [self.out_w, self.out_b] {
            self.store.value_mut(id).data_mut().fill(0.0);
        }
    }

    /// Records the Receiver on `g`; returns per-block log-probabilities `B×(2S+2V+1)`.
    pub fn forward(&self, g: &mut Graph, signals: &[Signal]) -> Result<NodeId> {
        if signals.is_empty() {
            return Err(Error::EmptyInput("receiver over no signals".into()));
        }
        for sig in signals {
            sig.check_alphabet(self.alphabet)?;
        }
        let s = &self.store;
        let b = signals.len();
        let steps = signals.iter().map(|x| x.symbols().len()).max().unwrap_or(1);
        let table = g.param(s, self.embedding);
        let mut h = g.constant(Tensor::zeros(b, self.hidden));
        for t in 0..steps {
            let syms: Vec<usize> = signals.iter().map(|x| x.symbols().get(t).copied().unwrap_or(EOS)).collect();
            let mask: Vec<bool> = signals.iter().map(|x| t < x.symbols().len()).collect();
            let x = g.embed(table, &syms);
            let next = self.cell.step(g, s, x, h);
            h = if mask.iter().all(|&m| m) { next } else { g.select_rows(next, h, &mask) };
        }
        let (ow, ob) = (g.param(s, self.out_w), g.param(s, self.out_b));
        let logits = g.linear(h, ow, ob);
        let lp = g.log_softmax_blocks(logits, &self.vocab.blocks());
        g.check_finite()?;
        Ok(lp)
    }

    /// Column indices of the target word in each block.
    pub fn target_columns(&self, targets: &[Meaning]) -> Vec<Vec<usize>> {
        let blocks = self.vocab.blocks();
        targets
            .iter()
            .map(|m| Role::ALL.iter().zip(blocks).map(|(r, (o, _))| o + m.get(*r)).collect())
            .collect()
    }

    /// Argmax meanings for many signals, chunked.
    pub fn predict(&self, signals: &[Signal]) -> Result<Vec<Meaning>> {
        let mut out = Vec::with_capacity(signals.len());
        for chunk in signals.chunks(EVAL_CHUNK) {
            let mut g = Graph::new();
            let lp = self.forward(&mut g, chunk)?;
            let v = g.value(lp);
            out.extend((0..chunk.len()).map(|r| decode_blocks(v.row(r), &self.vocab)));
        }
        Ok(out)
    }
}

pub fn receiver_forward(s: &Signal, p: &ReceiverParams) -> Result<ReceiverPrediction> {
    let mut g = Graph::new();
    let lp = p.forward(&mut g, std::slice::from_ref(s))?;
    let row = g.value(lp).row(0);
    let roles = std::array::from_fn(|i| {
        let (o, l) = p.vocab.blocks()[i];
        row[o..o + l].iter().map(|x| x.exp()).collect()
    });
    Ok(ReceiverPrediction { roles })
}

/// Sum over roles of `−ln p(target)`, probabilities clamped at 1e-12.
pub fn receiver_loss(pred: &ReceiverPrediction, target: &Meaning) -> f64 {
    Role::ALL
        .iter()
        .map(|r| {
            let p = pred.roles[r.index()].get(target.get(*r)).copied().unwrap_or(0.0);
            -p.max(PROB_FLOOR).ln()
        })
        .sum()
}

/// Running mean of observed costs. With `window = None` every cost weighs
/// equally; with `Some(w)` the update weight never drops below `1/w`, so
/// the mean tracks roughly the last `w` costs.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Baseline {
    pub mean: f64,
    pub count: u64,
    #[serde(default)]
    pub window: Option<u64>,
}

impl Baseline {
    pub fn with_window(window: Option<u64>) -> Self {
        Baseline { window, ..Self::default() }
    }

    pub fn value(&self) -> f64 {
        self.mean
    }

    pub fn observe(&mut self, x: f64) {
        self.count += 1;
        let n = self.window.map_or(self.count, |w| self.count.min(w.max(1)));
        self.mean += (x - self.mean) / n as f64;
    }
}

/// The scalar Sender objective for one rollout; the baseline is updated
/// with this rollout's cost after the objective is formed.
pub fn sender_loss(rollout: &SenderRollout, recv_loss: f64, baseline: &mut Baseline, alpha: f64, entropy_coeff: f64) -> f64 {
    let cost = reinforced_cost(recv_loss, rollout.length, alpha);
    let coef = cost - baseline.value();
    baseline.observe(cost);
    coef * rollout.log_probs.iter().sum::<f64>() - entropy_coeff * rollout.entropies.iter().sum::<f64>()
}

/// `recv_loss + α·|m|`.
pub fn reinforced_cost(recv_loss: f64, length: usize, alpha: f64) -> f64 {
    recv_loss + alpha * length as f64
}

/// Fraction of items whose every role matches.
pub fn exact_match_accuracy(predicted: &[Meaning], targets: &[Meaning]) -> Result<f64> {
    if predicted.len() != targets.len() {
        return Err(Error::shape("exact_match_accuracy", format!("{} predictions for {} targets", predicted.len(), targets.len())));
    }
    if targets.is_empty() {
        return Err(Error::EmptyInput("accuracy over no items".into()));
    }
    let hits = predicted.iter().zip(targets).filter(|(a, b)| a == b).count();
    Ok(hits as f64 / targets.len() as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EmergentHyper {
    pub lr: f64,
    pub alpha: f64,
    pub entropy_coeff: f64,
    pub max_len: usize,
    pub adam: AdamConfig,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EmergentStepMetrics {
    pub step: u64,
    pub loss_s: f64,
    pub loss_r: f64,
    pub acc: f64,
    pub mean_len: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SupervisedStepMetrics {
    pub loss: f64,
    pub acc: f64,
}

/// Receiver loss node (batch mean), per-row losses and argmax accuracy.
fn receiver_batch(g: &mut Graph, receiver: &ReceiverParams, signals: &[Signal], targets: &[Meaning]) -> Result<(NodeId, Vec<f64>, f64)> {
    let lp = receiver.forward(g, signals)?;
    let picked = g.pick_sum(lp, receiver.target_columns(targets));
    let n = targets.len() as f64;
    let loss = g.weighted_sum(picked, vec![-1.0 / n; targets.len()]);
    let per_row: Vec<f64> = g.value(picked).data().iter().map(|x| -x).collect();
    let v = g.value(lp);
    let predicted: Vec<Meaning> = (0..targets.len()).map(|r| decode_blocks(v.row(r), &receiver.vocab)).collect();
    let acc = exact_match_accuracy(&predicted, targets)?;
    Ok((loss, per_row, acc))
}

/// One joint update: sampled Sender rollouts, Receiver cross-entropy,
/// Adam on both agents, REINFORCE for the Sender.
pub fn train_step_emergent<R: Rng + ?Sized>(
    batch: &[Meaning],
    sender: &mut SenderParams,
    receiver: &mut ReceiverParams,
    baseline: &mut Baseline,
    cfg: &EmergentHyper,
    rng: &mut R,
) -> Result<EmergentStepMetrics> {
    let mut gs = Graph::new();
    let rollout = sender.rollout(&mut gs, batch, DecodeMode::Sample, rng, cfg.max_len)?;

    let mut gr = Graph::new();
    let (loss_r, per_row, acc) = receiver_batch(&mut gr, receiver, &rollout.signals, batch)?;
    let loss_r_value = gr.value(loss_r).get(0, 0);
    let grads_r = gr.backward(loss_r, &receiver.store)?;
    adam_step(&mut receiver.store, &grads_r, cfg.lr, &cfg.adam)?;

    let lengths = rollout.lengths();
    let n = batch.len() as f64;
    let costs: Vec<f64> = per_row.iter().zip(&lengths).map(|(&l, &len)| reinforced_cost(l, len, cfg.alpha)).collect();
    let base = baseline.value();
    let coef: Vec<f64> = costs.iter().map(|c| (c - base) / n).collect();
    let objective = rollout.objective(&mut gs, &coef, cfg.entropy_coeff);
    let loss_s_value = gs.value(objective).get(0, 0);
    let grads_s = gs.backward(objective, &sender.store)?;
    adam_step(&mut sender.store, &grads_s, cfg.lr, &cfg.adam)?;
    for c in costs {
        baseline.observe(c);
    }

    Ok(EmergentStepMetrics {
        step: sender.store.step,
        loss_s: loss_s_value,
        loss_r: loss_r_value,
        acc,
        mean_len: lengths.iter().sum::<usize>() as f64 / n,
    })
}

/// One Adam update of the Receiver on fixed (meaning, signal) pairs.
pub fn train_step_supervised(
    batch: &[(Meaning, Signal)],
    receiver: &mut ReceiverParams,
    lr: f64,
    adam: &AdamConfig,
) -> Result<SupervisedStepMetrics> {
    let (targets, signals): (Vec<Meaning>, Vec<Signal>) = batch.iter().cloned().unzip();
    let mut g = Graph::new();
    let (loss, _, acc) = receiver_batch(&mut g, receiver, &signals, &targets)?;
    let value = g.value(loss).get(0, 0);
    let grads = g.backward(loss, &receiver.store)?;
    adam_step(&mut receiver.store, &grads, lr, adam)?;
    Ok(SupervisedStepMetrics { loss: value, acc })
}

/// Greedy Sender → Receiver exact-match accuracy on `meanings`.
pub fn evaluate_game<R: Rng + ?Sized>(
    sender: &SenderParams,
    receiver: &ReceiverParams,
    meanings: &[Meaning],
    max_len: usize,
    rng: &mut R,
) -> Result<(f64, Vec<Signal>)> {
    let signals = sender.speak(meanings, max_len, rng)?;
    let predicted = receiver.predict(&signals)?;
    Ok((exact_match_accuracy(&predicted, meanings)?, signals))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn setup(hidden: usize) -> (Vocabulary, SenderParams, ReceiverParams) {
        let vocab = Vocabulary::new(3, 3).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let s = SenderParams::new(&vocab, Alphabet::new(4), hidden, &mut rng);
        let r = ReceiverParams::new(&vocab, Alphabet::new(4), hidden, &mut rng);
        (vocab, s, r)
    }

    #[test]
    fn max_len_one_boundary() {
        let (vocab, s, _) = setup(8);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for m in crate::meanings::enumerate_meanings(&vocab).iter().take(20) {
            let ro = sender_forward(&encode_meaning(m, &vocab), &s, DecodeMode::Sample, &mut rng, 1).unwrap();
            assert!(ro.length <= 1);
            assert_eq!(ro.log_probs.len(), 1);
        }
        assert!(sender_forward(&encode_meaning(&Meaning::new(0, 0, 0, 0), &vocab), &s, DecodeMode::Greedy, &mut rng, 0).is_err());
    }

    #[test]
    fn greedy_is_deterministic_and_bookkeeping_holds() {
        let (vocab, s, _) = setup(8);
        let mv = encode_meaning(&Meaning::new(1, 2, 0, 1), &vocab);
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let a = sender_forward(&mv, &s, DecodeMode::Greedy, &mut rng, 6).unwrap();
        let b = sender_forward(&mv, &s, DecodeMode::Greedy, &mut rng, 6).unwrap();
        assert_eq!(a, b);
        let steps = if a.length < 6 { a.length + 1 } else { 6 };
        assert_eq!(a.log_probs.len(), steps);
    }

    #[test]
    fn uniform_receiver_loss() {
        let vocab = Vocabulary::new(15, 15).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let mut r = ReceiverParams::new(&vocab, Alphabet::new(26), 16, &mut rng);
        r.zero_output();
        let pred = receiver_forward(&Signal::from_body(&[3, 1, 4]).unwrap(), &r).unwrap();
        for (i, dist) in pred.roles.iter().enumerate() {
            let n = vocab.blocks()[i].1;
            for p in dist {
                assert_abs_diff_eq!(*p, 1.0 / n as f64, epsilon = 1e-12);
            }
        }
        let loss = receiver_loss(&pred, &Meaning::new(3, 4, 5, 6));
        assert_abs_diff_eq!(loss, 4.0 * 15f64.ln(), epsilon = 1e-9);
        assert!((loss - 10.83).abs() < 0.01);
    }

    #[test]
    fn receiver_rejects_out_of_range_symbols() {
        let (_, _, r) = setup(4);
        assert!(receiver_forward(&Signal::from_body(&[9]).unwrap(), &r).is_err());
    }

    #[test]
    fn sender_loss_terms() {
        let ro = SenderRollout {
            signal: Signal::from_body(&[1; 10]).unwrap(),
            log_probs: vec![-0.1; 10],
            entropies: vec![0.0; 10],
            length: 10,
        };
        assert_abs_diff_eq!(reinforced_cost(2.0, 10, 0.15), 3.5, epsilon = 1e-12);
        assert_eq!(reinforced_cost(2.0, 10, 0.0), 2.0);
        let mut b = Baseline { mean: 3.5, count: 1, window: None };
        assert_eq!(sender_loss(&ro, 2.0, &mut b, 0.15, 0.0), 0.0);
        assert_eq!(b.count, 2);
    }

    #[test]
    fn baseline_is_running_mean() {
        let mut b = Baseline::default();
        let xs = [3.0, -1.0, 4.5, 10.0];
        for x in xs {
            b.observe(x);
        }
        assert_abs_diff_eq!(b.value(), xs.iter().sum::<f64>() / 4.0, epsilon = 1e-12);
    }

    #[test]
    fn windowed_baseline_forgets_old_costs() {
        let mut b = Baseline::with_window(Some(2));
        b.observe(4.0);
        b.observe(2.0);
        assert_abs_diff_eq!(b.value(), 3.0, epsilon = 1e-12);
        b.observe(0.0);
        assert_abs_diff_eq!(b.value(), 1.5, epsilon = 1e-12);
        for _ in 0..60 {
            b.observe(10.0);
        }
        assert_abs_diff_eq!(b.value(), 10.0, epsilon = 1e-9);
    }

    #[test]
    fn single_example_is_memorized() {
        let (_, _, mut r) = setup(16);
        let pair = (Meaning::new(2, 1, 0, 2), Signal::from_body(&[1, 2, 3]).unwrap());
        let mut acc = 0.0;
        for _ in 0..200 {
            acc = train_step_supervised(std::slice::from_ref(&pair), &mut r, 0.01, &AdamConfig::default()).unwrap().acc;
            if acc == 1.0 {
                break;
            }
        }
        assert_eq!(acc, 1.0);
    }
}
