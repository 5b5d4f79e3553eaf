use anaphora_core::agents::{DecodeMode, SenderParams};
use anaphora_core::handcrafted::{Alphabet, EOS};
use anaphora_core::meanings::{Meaning, Vocabulary};
use anaphora_core::neural::{softmax, Graph};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn sender(seed: u64, hidden: usize) -> SenderParams {
    let vocab = Vocabulary::new(4, 4).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    SenderParams::new(&vocab, Alphabet::new(5), hidden, &mut rng)
}

#[test]
fn first_symbol_frequencies_follow_softmax() {
    let s = sender(3, 12);
    let m = Meaning::new(1, 3, 2, 0);
    let probs = softmax(&s.first_step_logits(&m)).unwrap();
    let mut counts = vec![0usize; probs.len()];
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let batch = vec![m; 2000];
    for _ in 0..50 {
        let mut g = Graph::new();
        let ro = s.rollout(&mut g, &batch, DecodeMode::Sample, &mut rng, 1).unwrap();
        for sig in &ro.signals {
            counts[sig.body().first().copied().unwrap_or(EOS)] += 1;
        }
    }
    let total = counts.iter().sum::<usize>() as f64;
    assert_eq!(total, 100_000.0);
    for (c, p) in counts.iter().zip(&probs) {
        assert!((*c as f64 / total - p).abs() < 0.01, "{c} vs {p}");
    }
}

#[test]
fn cost_sign_moves_log_probability() {
    let meanings: Vec<Meaning> = vec![Meaning::new(0, 1, 2, 3), Meaning::new(3, 3, 3, 3)];
    let greedy_logp = |s: &SenderParams| -> (Vec<String>, Vec<f64>) {
        let mut g = Graph::new();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let ro = s.rollout(&mut g, &meanings, DecodeMode::Greedy, &mut rng, 5).unwrap();
        let rs = ro.rollouts(&g);
        (rs.iter().map(|r| r.signal.to_string()).collect(), rs.iter().map(|r| r.log_probs.iter().sum()).collect())
    };
    for (coef, should_rise) in [(1.0, false), (-1.0, true)] {
        let mut s = sender(7, 10);
        let (sig0, lp0) = greedy_logp(&s);
        let mut g = Graph::new();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let ro = s.rollout(&mut g, &meanings, DecodeMode::Greedy, &mut rng, 5).unwrap();
        let obj = ro.objective(&mut g, &[coef; 2], 0.0);
        let grads = g.backward(obj, &s.store).unwrap();
        for pid in 0..s.store.len() {
            let step: Vec<f64> = grads.get(pid).data().iter().map(|d| 1e-3 * d).collect();
            for (v, d) in s.store.value_mut(pid).data_mut().iter_mut().zip(step) {
                *v -= d;
            }
        }
        let (sig1, lp1) = greedy_logp(&s);
        assert_eq!(sig0, sig1, "a tiny step keeps the greedy signal");
        for (a, b) in lp0.iter().zip(&lp1) {
            assert_eq!(b > a, should_rise, "coef {coef}: {a} -> {b}");
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn rollout_bookkeeping(seed in 0u64..1000, max_len in 1usize..8) {
        let s = sender(seed, 6);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let meanings: Vec<Meaning> = (0..16).map(|i| Meaning::new(i % 4, (i / 4) % 4, (i * 3) % 4, (i + seed as usize) % 4)).collect();
        let mut g = Graph::new();
        let ro = s.rollout(&mut g, &meanings, DecodeMode::Sample, &mut rng, max_len).unwrap();
        let max_entropy = (s.output_dim() as f64).ln();
        for r in ro.rollouts(&g) {
            prop_assert!(r.length <= max_len);
            prop_assert!(!r.signal.body().contains(&EOS));
            let steps = if r.length < max_len { r.length + 1 } else { max_len };
            prop_assert_eq!(r.log_probs.len(), steps);
            prop_assert_eq!(r.entropies.len(), steps);
            for (&lp, &h) in r.log_probs.iter().zip(&r.entropies) {
                prop_assert!(lp <= 0.0 && lp.is_finite());
                prop_assert!((0.0..=max_entropy + 1e-12).contains(&h));
            }
        }
    }
}
