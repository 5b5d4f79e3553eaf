use anaphora_core::agents::ReceiverParams;
use anaphora_core::handcrafted::{Alphabet, Signal};
use anaphora_core::meanings::{Meaning, Vocabulary};
use anaphora_core::neural::{Graph, GruCell, NodeId, ParamStore, Tensor};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const EPS: f64 = 1e-5;
pub const TOL: f64 = 1e-4;
pub const CONFIGS: u64 = 20;

pub type Build = dyn Fn(&mut Graph, &ParamStore) -> NodeId;
pub type Setup = fn(&mut ChaCha8Rng, &mut ParamStore) -> Box<Build>;

pub fn rand_tensor(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> Tensor {
    let data = (0..rows * cols).map(|_| rng.random_range(-1.5..1.5)).collect();
    Tensor::from_vec(rows, cols, data).unwrap()
}

fn loss_of(store: &ParamStore, build: &Build) -> f64 {
    let mut g = Graph::new();
    let l = build(&mut g, store);
    g.value(l).get(0, 0)
}

/// Largest relative error between analytic and numeric gradients.
pub fn check(store: &ParamStore, build: &Build) -> f64 {
    let mut g = Graph::new();
    let l = build(&mut g, store);
    let grads = g.backward(l, store).unwrap();
    let mut worst: f64 = 0.0;
    let mut s = store.clone();
    for pid in 0..store.len() {
        for i in 0..store.value(pid).len() {
            let orig = s.value(pid).data()[i];
            s.value_mut(pid).data_mut()[i] = orig + EPS;
            let up = loss_of(&s, build);
            s.value_mut(pid).data_mut()[i] = orig - EPS;
            let down = loss_of(&s, build);
            s.value_mut(pid).data_mut()[i] = orig;
            let numeric = (up - down) / (2.0 * EPS);
            let analytic = grads.get(pid).data()[i];
            let rel = (numeric - analytic).abs() / numeric.abs().max(analytic.abs()).max(1e-4);
            worst = worst.max(rel);
        }
    }
    worst
}

/// Reduces any node to a scalar with fixed random row weights.
pub fn reduce(g: &mut Graph, x: NodeId, seed: u64) -> NodeId {
    let rows = g.value(x).rows();
    let cols = g.value(x).cols();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    // Multiply by a random constant first so every column gets its own weight.
    let c = g.constant(rand_tensor(&mut rng, rows, cols));
    let m = g.mul(x, c);
    let w = (0..rows).map(|_| rng.random_range(0.5..1.5)).collect();
    g.weighted_sum(m, w)
}

/// Worst relative error of one case builder over `CONFIGS` random draws.
pub fn worst_error(setup: Setup) -> f64 {
    (0..CONFIGS)
        .map(|seed| {
            let mut rng = ChaCha8Rng::seed_from_u64(1000 + seed);
            let mut store = ParamStore::new();
            let build = setup(&mut rng, &mut store);
            check(&store, build.as_ref())
        })
        .fold(0.0, f64::max)
}

pub fn dims(rng: &mut ChaCha8Rng) -> (usize, usize) {
    (rng.random_range(1..5), rng.random_range(1..6))
}

pub fn matmul_and_bias(rng: &mut ChaCha8Rng, store: &mut ParamStore) -> Box<Build> {
    let (b, i) = dims(rng);
    let o = rng.random_range(1..5);
    let x = store.add("x", rand_tensor(rng, b, i));
    let w = store.add("w", rand_tensor(rng, o, i));
    let bias = store.add("b", rand_tensor(rng, 1, o));
    Box::new(move |g, s| {
        let (x, w, bias) = (g.param(s, x), g.param(s, w), g.param(s, bias));
        let y = g.linear(x, w, bias);
        reduce(g, y, 1)
    })}

pub fn elementwise(rng: &mut ChaCha8Rng, store: &mut ParamStore) -> Box<Build> {
    let (r, c) = dims(rng);
    let a = store.add("a", rand_tensor(rng, r, c));
    let b = store.add("b", rand_tensor(rng, r, c));
    Box::new(move |g, s| {
        let (a, b) = (g.param(s, a), g.param(s, b));
        let sum = g.add(a, b);
        let prod = g.mul(sum, a);
        let sig = g.sigmoid(prod);
        let th = g.tanh(b);
        let mixed = g.add(sig, th);
        let scaled = g.scale(mixed, -0.7);
        reduce(g, scaled, 2)
    })}

pub fn interpolate(rng: &mut ChaCha8Rng, store: &mut ParamStore) -> Box<Build> {
    let (r, c) = dims(rng);
    let z = store.add("z", rand_tensor(rng, r, c));
    let n = store.add("n", rand_tensor(rng, r, c));
    let h = store.add("h", rand_tensor(rng, r, c));
    Box::new(move |g, s| {
        let (z, n, h) = (g.param(s, z), g.param(s, n), g.param(s, h));
        let zs = g.sigmoid(z);
        let y = g.interpolate(zs, n, h);
        reduce(g, y, 3)
    })}

pub fn embed_broadcast_select(rng: &mut ChaCha8Rng, store: &mut ParamStore) -> Box<Build> {
    let (b, d) = dims(rng);
    let vocab = rng.random_range(2..6);
    let idx: Vec<usize> = (0..b).map(|_| rng.random_range(0..vocab)).collect();
    let mask: Vec<bool> = (0..b).map(|_| rng.random_bool(0.5)).collect();
    let table = store.add("table", rand_tensor(rng, vocab, d));
    let start = store.add("start", rand_tensor(rng, 1, d));
    Box::new(move |g, s| {
        let t = g.param(s, table);
        let e = g.embed(t, &idx);
        let st = g.param(s, start);
        let bc = g.broadcast(st, idx.len());
        let y = g.select_rows(e, bc, &mask);
        reduce(g, y, 4)
    })}

pub fn log_softmax_pick_entropy(rng: &mut ChaCha8Rng, store: &mut ParamStore) -> Box<Build> {
    let b = rng.random_range(1..5);
    let blocks: Vec<(usize, usize)> = {
        let mut off = 0;
        (0..rng.random_range(1..4))
            .map(|_| {
                let l = rng.random_range(1..5);
                off += l;
                (off - l, l)
            })
            .collect()
    };
    let cols = blocks.last().map(|&(o, l)| o + l).unwrap();
    let picks: Vec<Vec<usize>> = (0..b)
        .map(|_| blocks.iter().map(|&(o, l)| o + rng.random_range(0..l)).collect())
        .collect();
    let weights: Vec<f64> = (0..b).map(|_| rng.random_range(-2.0..2.0)).collect();
    let x = store.add("x", rand_tensor(rng, b, cols).map(|v| 2.0 * v));
    let y = store.add("y", rand_tensor(rng, b, 4));
    Box::new(move |g, s| {
        let x = g.param(s, x);
        let lp = g.log_softmax_blocks(x, &blocks);
        let picked = g.pick_sum(lp, picks.clone());
        let a = g.weighted_sum(picked, weights.clone());
        let y = g.param(s, y);
        let ly = g.log_softmax(y);
        let h = g.entropy(ly);
        let bsum = g.weighted_sum(h, weights.clone());
        let total = g.add(a, bsum);
        g.scale(total, 0.5)
    })}

pub fn gru_unrolled(rng: &mut ChaCha8Rng, store: &mut ParamStore) -> Box<Build> {
    let (b, i) = dims(rng);
    let hidden = rng.random_range(1..5);
    let steps = rng.random_range(1..4);
    let cell = GruCell::register(store, "cell", i, hidden, rng);
    let xs: Vec<_> = (0..steps).map(|t| store.add(format!("x{t}"), rand_tensor(rng, b, i))).collect();
    let h0 = store.add("h0", rand_tensor(rng, b, hidden));
    Box::new(move |g, s| {
        let mut h = g.param(s, h0);
        for &x in &xs {
            let x = g.param(s, x);
            h = cell.step(g, s, x, h);
        }
        reduce(g, h, 5)
    })}

/// Every op group with its case builder.
pub const OP_CASES: [(&str, Setup); 6] = [
    ("linear", matmul_and_bias),
    ("elementwise", elementwise),
    ("interpolate", interpolate),
    ("embed", embed_broadcast_select),
    ("log_softmax", log_softmax_pick_entropy),
    ("gru", gru_unrolled),
];

/// Mean negative log-likelihood of the targets under a small random Receiver,
/// differentiated with respect to every Receiver parameter.
pub fn receiver_loss_error(seed: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(5000 + seed);
    let vocab = Vocabulary::new(rng.random_range(1..4), rng.random_range(1..4)).unwrap();
    let alphabet = Alphabet::new(rng.random_range(2..5));
    let hidden = rng.random_range(2..5);
    let receiver = ReceiverParams::new(&vocab, alphabet, hidden, &mut rng);
    let batch = rng.random_range(1..5);
    let signals: Vec<Signal> = (0..batch)
        .map(|_| {
            let len = rng.random_range(0..4);
            let body: Vec<usize> = (0..len).map(|_| rng.random_range(1..=alphabet.size)).collect();
            Signal::from_body(&body).unwrap()
        })
        .collect();
    let targets: Vec<Meaning> = (0..batch)
        .map(|_| {
            let s = vocab.n_subjects();
            let v = vocab.n_verbs();
            Meaning::new(rng.random_range(0..s), rng.random_range(0..v), rng.random_range(0..s), rng.random_range(0..v))
        })
        .collect();
    let cols = receiver.target_columns(&targets);
    let inv = -1.0 / batch as f64;
    let template = receiver.clone();
    let build = move |g: &mut Graph, s: &ParamStore| {
        let mut r = template.clone();
        r.store = s.clone();
        let lp = r.forward(g, &signals).unwrap();
        let picked = g.pick_sum(lp, cols.clone());
        g.weighted_sum(picked, vec![inv; batch])
    };
    check(&receiver.store, &build)
}
