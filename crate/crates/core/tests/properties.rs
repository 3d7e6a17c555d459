use proptest::prelude::*;

use nrsim::coding::crc::{crc_attach, crc_check, CrcPoly};
use nrsim::coding::polar::{polar_encode, PolarSpec};
use nrsim::coding::ratematch::{bit_deinterleave, bit_interleave};
use nrsim::coding::{scramble, BaseGraphId, LdpcCode, TbChain};
use nrsim::control::coreset::{cce_to_regs, CceRegMapping, Coreset};
use nrsim::linksim::io::{decode_iq, encode_iq};
use nrsim::linksim::{ofdm_demodulate, ofdm_modulate, OfdmConfig, RawConfig};
use nrsim::modulation::{
    hard_decision, layer_demap, layer_map, modulate, soft_demod, transform_deprecode, transform_precode, LayerMapSpec,
    ModOrder,
};
use nrsim::numerology::{LinkDirection, Numerology, ResourceGrid, SYMBOLS_PER_SLOT};
use nrsim::Cplx;

fn bits(n: impl Into<proptest::collection::SizeRange>) -> impl Strategy<Value = Vec<u8>> {
    proptest::collection::vec(0u8..2, n)
}

fn xor(a: &[u8], b: &[u8]) -> Vec<u8> {
    a.iter().zip(b).map(|(x, y)| x ^ y).collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn ofdm_round_trip(mu in 0u8..=3, num_rb in 1usize..30, seed in any::<u64>()) {
        let num = Numerology::new(mu).unwrap();
        let cfg = OfdmConfig::new(&num, num_rb * 12).unwrap();
        let mut grid = ResourceGrid::new(1, num_rb, SYMBOLS_PER_SLOT).unwrap();
        let mut s = seed;
        for l in 0..SYMBOLS_PER_SLOT {
            for v in grid.symbol_mut(0, l) {
                s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                *v = Cplx::new((s >> 40) as f64 / 16777216.0 - 0.5, (s >> 16 & 0xffffff) as f64 / 16777216.0 - 0.5);
            }
        }
        let tx = ofdm_modulate(&grid, &cfg).unwrap();
        let rows = ofdm_demodulate(&tx[0], &cfg, SYMBOLS_PER_SLOT).unwrap();
        for (l, row) in rows.iter().enumerate() {
            for (a, b) in row.iter().zip(grid.symbol(0, l)) {
                prop_assert!((a - b).norm() < 1e-9);
            }
        }
    }

    #[test]
    fn scrambling_is_an_involution(b in bits(0..600), c_init in 0u32..(1 << 31)) {
        prop_assert_eq!(scramble(&scramble(&b, c_init), c_init), b);
    }

    #[test]
    fn layer_map_round_trip(layers in 1usize..=8, per_layer in 1usize..40) {
        let spec = LayerMapSpec::new(if layers > 4 { 2 } else { 1 }, layers, LinkDirection::Downlink).unwrap();
        let cws: Vec<Vec<usize>> = spec
            .layers_per_codeword()
            .iter()
            .enumerate()
            .map(|(q, &nl)| (0..nl * per_layer).map(|i| q * 10_000 + i).collect())
            .collect();
        let mapped = layer_map(&cws, &spec).unwrap();
        prop_assert!(mapped.iter().all(|l| l.len() == per_layer));
        prop_assert_eq!(layer_demap(&mapped, &spec).unwrap(), cws);
    }

    #[test]
    fn bit_interleaver_is_a_bijection(qm in prop::sample::select(vec![1usize, 2, 4, 6, 8]), rows in 1usize..50) {
        let e: Vec<usize> = (0..qm * rows).collect();
        let f = bit_interleave(&e, qm);
        let mut sorted = f.clone();
        sorted.sort_unstable();
        prop_assert_eq!(&sorted, &e);
        prop_assert_eq!(bit_deinterleave(&f, qm), e);
    }

    #[test]
    fn iq_encoding_round_trip(v in proptest::collection::vec((any::<f32>(), any::<f32>()), 0..200)) {
        let v: Vec<(f32, f32)> = v.into_iter().filter(|(a, b)| a.is_finite() && b.is_finite()).collect();
        let x: Vec<Cplx> = v.iter().map(|&(a, b)| Cplx::new(a.into(), b.into())).collect();
        let bytes = encode_iq(&x);
        prop_assert_eq!(bytes.len(), 8 * x.len());
        prop_assert_eq!(decode_iq(&bytes).unwrap(), x);
    }

    #[test]
    fn crc_detects_single_and_double_flips(b in bits(1..80), i in any::<prop::sample::Index>(), j in any::<prop::sample::Index>()) {
        for poly in CrcPoly::ALL {
            let w = crc_attach(&b, poly).unwrap();
            prop_assert!(crc_check(&w, poly));
            let (i, j) = (i.index(w.len()), j.index(w.len()));
            let mut f = w.clone();
            f[i] ^= 1;
            prop_assert!(!crc_check(&f, poly));
            if i != j && poly.len() >= 11 {
                f[j] ^= 1;
                prop_assert!(!crc_check(&f, poly));
            }
        }
    }

    #[test]
    fn modulation_hard_decisions_recover_bits(order in prop::sample::select(vec![ModOrder::Bpsk, ModOrder::Qpsk, ModOrder::Qam16, ModOrder::Qam64, ModOrder::Qam256]), n in 1usize..40, seed in any::<u64>()) {
        let qm = order.bits_per_symbol();
        let b: Vec<u8> = (0..n * qm).map(|i| ((seed >> (i % 64)) & 1) as u8 ^ (i % 3 == 0) as u8).collect();
        let x = modulate(&b, order).unwrap();
        prop_assert_eq!(hard_decision(&soft_demod(&x, order, 0.1)), b);
    }

    #[test]
    fn transform_precoding_round_trip(blocks in 1usize..6, rb in 1usize..6, seed in any::<u64>()) {
        let m = 12 * rb;
        let x: Vec<Cplx> = (0..blocks * m).map(|i| Cplx::new(((seed >> (i % 60)) & 7) as f64, i as f64 * 0.1)).collect();
        let y = transform_precode(std::slice::from_ref(&x), m).unwrap();
        let z = transform_deprecode(&y, m).unwrap();
        prop_assert!(x.iter().zip(&z).all(|(a, b)| (a - b).norm() < 1e-9));
    }

    #[test]
    fn cce_to_reg_is_a_bijection(num_cces in 1usize..16, nsym in 1usize..=3, bundle in prop::sample::select(vec![2usize, 3, 6]), rows in prop::sample::select(vec![2usize, 3, 6]), shift in 0usize..8, interleaved in any::<bool>()) {
        let mapping = if interleaved {
            CceRegMapping::Interleaved { bundle_size: bundle, rows, shift }
        } else {
            CceRegMapping::NonInterleaved
        };
        let Ok(cs) = Coreset::contiguous(3, num_cces * 6 / nsym.min(6), nsym, mapping) else {
            return Ok(());
        };
        let mut all: Vec<_> = (0..cs.num_cces()).flat_map(|c| cce_to_regs(&cs, c).unwrap()).collect();
        let n = all.len();
        all.sort();
        all.dedup();
        prop_assert_eq!(n, all.len());
        prop_assert_eq!(all.into_iter().collect::<std::collections::BTreeSet<_>>(), cs.regs());
    }

    #[test]
    fn config_overrides_win(trials in 1usize..1000, over in 1usize..1000) {
        let mut raw = RawConfig::parse(&format!("[sim]\ntrials = {trials}\n")).unwrap();
        raw.apply_override(&format!("sim.trials={over}")).unwrap();
        prop_assert_eq!(raw.get::<usize>("sim.trials").unwrap(), Some(over));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn ldpc_encoder_is_linear(bg in prop::sample::select(vec![BaseGraphId::Bg1, BaseGraphId::Bg2]), z in prop::sample::select(vec![8usize, 15, 52, 104]), seed in any::<u64>()) {
        let code = LdpcCode::get(bg, z).unwrap();
        let k = code.k();
        let a: Vec<u8> = (0..k).map(|i| ((seed.rotate_left(i as u32 % 64) ^ (i as u64 * 31)) & 1) as u8).collect();
        let b: Vec<u8> = (0..k).map(|i| ((seed >> (i % 61)) & 1) as u8).collect();
        let ca = code.encode(&a).unwrap();
        let cb = code.encode(&b).unwrap();
        prop_assert_eq!(code.encode(&xor(&a, &b)).unwrap(), xor(&ca, &cb));
        prop_assert_eq!(code.syndrome_weight(&code.encode_full(&a).unwrap()), 0);
    }

    #[test]
    fn polar_encoder_is_linear(a in bits(30), b in bits(30), e in 60usize..200) {
        let spec = PolarSpec::new(30, e, CrcPoly::Crc11);
        let ca = polar_encode(&a, &spec).unwrap();
        let cb = polar_encode(&b, &spec).unwrap();
        prop_assert_eq!(polar_encode(&xor(&a, &b), &spec).unwrap(), xor(&ca, &cb));
    }

    #[test]
    fn data_chain_round_trip(a in 24usize..5000, rv in 0u8..4, bg2 in any::<bool>(), seed in any::<u64>()) {
        let bg = if bg2 { BaseGraphId::Bg2 } else { BaseGraphId::Bg1 };
        let g = 6 * a + 1200;
        let chain = TbChain::with_base_graph(a, bg, g, 2, 1, rv).unwrap();
        let tb: Vec<u8> = (0..a).map(|i| ((seed >> (i % 64)) as u8 ^ (i / 7) as u8) & 1).collect();
        let llr: Vec<f64> = chain.encode(&tb).unwrap().iter().map(|&b| 1.0 - 2.0 * f64::from(b)).collect();
        let out = chain.decode(&llr).unwrap();
        prop_assert!(out.tb_crc_ok);
        prop_assert_eq!(out.bits, tb);
    }
}
