mod common;

use common::*;
use mkpolar::codec::{sc_decode_trace, transform};
use mkpolar::construct::{build_plan_with_kernels, IndexSet};
use mkpolar::rng::{derive_seed, SplitMix64};
use mkpolar::{bsc, encode, sc_decode, BmsChannel, ConstructionPlan, Error, LlrWord, PlanConfig};

fn random_plan(ell: usize, t: usize, seed: u64) -> ConstructionPlan {
    let mut cfg = PlanConfig::new(ell, t);
    cfg.q = Some(16);
    build_plan_with_kernels(&bsc(0.11).unwrap(), ell, t, &cfg, |path| {
        let s = path.iter().fold(seed, |s, &d| derive_seed(s, d as u64));
        random_invertible(ell, &mut SplitMix64::new(s))
    })
    .unwrap()
}

fn tree_matrix(plan: &ConstructionPlan) -> Vec<Vec<u8>> {
    let n = plan.n();
    (0..n)
        .map(|i| {
            let mut u = vec![0u8; n];
            u[i] = 1;
            tree_encode(plan, 0, 0, &u)
        })
        .collect()
}

#[test]
fn layered_encoder_matches_tree() {
    let mut rng = SplitMix64::new(4);
    for (ell, t) in [(2, 3), (2, 4), (4, 2), (2, 5)] {
        for seed in 0..3 {
            let plan = random_plan(ell, t, seed);
            let dense = plan.dense_transform();
            assert_eq!(dense, tree_matrix(&plan), "l={ell} t={t}");
            for _ in 0..20 {
                let u: Vec<u8> = (0..plan.n()).map(|_| rng.next_bit()).collect();
                let want = tree_encode(&plan, 0, 0, &u);
                assert_eq!(transform(&plan, u.clone()), want);
                assert_eq!(row_times(&u, &dense), want);
            }
        }
    }
}

#[test]
fn encode_scatters_into_good_positions() {
    let mut plan = random_plan(2, 3, 9);
    plan.set_good_set(IndexSet::from_indices(8, &[3, 5, 6, 7]).unwrap()).unwrap();
    let x = encode(&plan, &[1, 0, 1, 1]).unwrap();
    let u = [0, 0, 0, 1, 0, 0, 1, 1];
    assert_eq!(x.bits(), tree_encode(&plan, 0, 0, &u).as_slice());
    assert!(matches!(encode(&plan, &[1, 0]), Err(Error::LengthMismatch { expected: 4, got: 2 })));
}

#[test]
fn noiseless_round_trip() {
    let mut rng = SplitMix64::new(5);
    for (ell, t) in [(2, 1), (2, 3), (2, 6), (4, 1), (4, 2), (8, 1)] {
        let mut plan = random_plan(ell, t, 1);
        let n = plan.n();
        plan.set_good_set(IndexSet::from_indices(n, &(0..n).collect::<Vec<_>>()).unwrap()).unwrap();
        for _ in 0..10 {
            let msg: Vec<u8> = (0..n).map(|_| rng.next_bit()).collect();
            let x = encode(&plan, &msg).unwrap();
            let (dec, _) = sc_decode(&plan, &LlrWord::<f64>::from_bits(x.bits())).unwrap();
            assert_eq!(dec, msg, "l={ell} t={t}");
        }
    }
}

/// Checks every SC bit LLR against exact marginalization along the decoder's
/// own path, and the decisions against the per-bit MAP rule. Returns ties.
fn check_against_map(plan: &ConstructionPlan, syms: &[(f64, f64)], y: &[usize], dense: &[Vec<u8>]) -> usize {
    let llr: Vec<f64> = y.iter().map(|&s| (syms[s].0 / syms[s].1).ln()).collect();
    let (u, trace) = sc_decode_trace(plan, &LlrWord::new(llr).unwrap()).unwrap();
    let mut ties = 0;
    for i in 0..plan.n() {
        let exact = exact_bit_llr(dense, syms, &u.bits()[..i], y);
        assert!((trace[i] - exact).abs() <= 1e-9 * exact.abs().max(1.0), "i={i}: {} vs {exact}", trace[i]);
        if !plan.good_set().contains(i) {
            assert_eq!(u.bits()[i], 0);
        } else if exact.abs() < 1e-9 {
            ties += 1;
        } else {
            assert_eq!(u.bits()[i], (exact < 0.0) as u8);
        }
    }
    ties
}

#[test]
fn sc_matches_map_on_every_output_at_n4() {
    let syms = [(0.55, 0.15), (0.15, 0.55), (0.3, 0.3)];
    let w = BmsChannel::from_symbols(&syms).unwrap();
    for (ell, t) in [(2, 2), (4, 1)] {
        for seed in 0..3 {
            let mut cfg = PlanConfig::new(ell, t);
            cfg.q = None;
            let mut plan = build_plan_with_kernels(&w, ell, t, &cfg, |p| {
                random_invertible(ell, &mut SplitMix64::new(derive_seed(seed, p.len() as u64 * 7 + p.iter().sum::<usize>() as u64)))
            })
            .unwrap();
            plan.set_good_set(IndexSet::from_indices(4, &[1, 3]).unwrap()).unwrap();
            let dense = tree_matrix(&plan);
            for y in 0..81usize {
                let ys: Vec<usize> = (0..4).map(|j| y / 3usize.pow(j) % 3).collect();
                check_against_map(&plan, &syms, &ys, &dense);
            }
        }
    }
}

#[test]
fn sc_matches_map_on_sampled_outputs_at_n8() {
    let mut rng = SplitMix64::new(8);
    let syms = random_symbols(&mut rng, 2, false);
    let w = BmsChannel::from_symbols(&syms).unwrap();
    for (ell, t) in [(2, 3), (8, 1)] {
        let mut cfg = PlanConfig::new(ell, t);
        cfg.q = None;
        let mut plan = build_plan_with_kernels(&w, ell, t, &cfg, |p| random_invertible(ell, &mut SplitMix64::new(p.len() as u64 + 40))).unwrap();
        plan.set_good_set(IndexSet::from_indices(8, &[2, 4, 5, 6, 7]).unwrap()).unwrap();
        let dense = tree_matrix(&plan);
        // random kernels may hide some U_i behind later rows; those LLRs are exactly 0
        for _ in 0..300 {
            let ys: Vec<usize> = (0..8).map(|_| rng.below(syms.len() as u64) as usize).collect();
            check_against_map(&plan, &syms, &ys, &dense);
        }
    }
}

#[test]
fn decoder_rejects_bad_input() {
    let plan = random_plan(2, 2, 0);
    assert!(matches!(sc_decode(&plan, &LlrWord::new(vec![0.0f64; 3]).unwrap()), Err(Error::LengthMismatch { .. })));
    assert!(matches!(LlrWord::new(vec![0.0, f64::NAN, 0.0, 0.0]), Err(Error::NanInput(1))));
}

#[test]
fn single_precision_decoding() {
    let plan = random_plan(2, 4, 3);
    let msg = vec![1u8; plan.dimension()];
    let x = encode(&plan, &msg).unwrap();
    let llr: Vec<f32> = x.bits().iter().map(|&b| if b == 0 { 2.0 } else { -2.0 }).collect();
    let (dec, _) = sc_decode(&plan, &LlrWord::new(llr).unwrap()).unwrap();
    assert_eq!(dec, msg);
}
