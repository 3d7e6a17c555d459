use nrsim::access::burst::{burst_positions, SsbConfig};
use nrsim::access::prach::PrachFormat;
use nrsim::access::ssb::build_ssb;
use nrsim::control::pucch::{PucchFormat, PucchResource};
use nrsim::control::resources::{select_pucch_resource, PucchResourceSet, PucchResourceSets};
use nrsim::linksim::{SharedChannelConfig, SharedPlan};
use nrsim::modulation::{layer_map, modulate, LayerMapSpec, ModOrder};
use nrsim::numerology::{classify_symbol, Allocation, LinkDirection, Numerology, SlotFormat};
use nrsim::refsignals::{dmrs_map, DmrsConfig};
use nrsim::sequences::CellId;
use nrsim::Error;

#[test]
fn numerology_examples() {
    let n0 = Numerology::new(0).unwrap();
    assert_eq!((n0.scs_khz, n0.slots_per_subframe, n0.symbols_per_slot), (15, 1, 14));
    assert_eq!(Numerology::new(2).unwrap().slots_per_subframe, 4);
    assert_eq!(Numerology::new(4).unwrap().slots_per_subframe, 16);
}

#[test]
fn flexible_symbols_serve_both_directions() {
    let f = SlotFormat::parse("DDDDFFFFFFUUUU").unwrap();
    assert!(classify_symbol(&f, 5, LinkDirection::Downlink).unwrap());
    assert!(classify_symbol(&f, 5, LinkDirection::Uplink).unwrap());
    assert!(!classify_symbol(&f, 0, LinkDirection::Uplink).unwrap());
    assert!(classify_symbol(&SlotFormat::default(), 0, LinkDirection::Uplink).unwrap());
}

#[test]
fn ssb_has_a_127_subcarrier_pss() {
    let b = build_ssb(CellId::new(5).unwrap(), &[1; 32], 0).unwrap();
    let pss = b.grid.symbol(0, 0).iter().filter(|v| v.norm() > 0.0).count();
    assert_eq!(pss, 127);
    assert_eq!(b.grid.num_subcarriers(), 240);
}

#[test]
fn up_to_64_blocks_inside_five_milliseconds() {
    for (scs, n) in [(15, 4), (240, 64)] {
        let cfg = SsbConfig {
            scs_khz: scs,
            num_ssb: n,
            ..SsbConfig::default()
        };
        let num = Numerology::from_scs_khz(scs).unwrap();
        let pos = burst_positions(&cfg).unwrap();
        assert_eq!(pos.len(), n);
        assert!(pos.iter().all(|p| p.end_time_s(&num) <= 5e-3 + 1e-12));
        assert_eq!(cfg.burst_periodicity_ms, 20);
    }
    let too_many = SsbConfig {
        num_ssb: 64,
        ..SsbConfig::default()
    };
    assert!(burst_positions(&too_many).is_err());
}

#[test]
fn short_preamble_matches_data_symbol() {
    for scs in [15, 30, 60, 120] {
        let f = PrachFormat::new("B4", scs).unwrap();
        let num = Numerology::from_scs_khz(scs).unwrap();
        assert!((f.symbol_duration_s() - 1.0 / num.scs_hz()).abs() < 1e-15);
        assert_eq!(f.seq_len, 139);
    }
    let long = PrachFormat::new("0", 15).unwrap();
    assert_eq!((long.seq_len, long.scs_hz), (839, 1250.0));
}

#[test]
fn first_pucch_set_carries_at_most_two_bits() {
    let f1 = |i: usize| PucchResource {
        initial_cyclic_shift: i,
        ..PucchResource::new(PucchFormat::F1, 0, 14, 0)
    };
    let sets = PucchResourceSets {
        sets: vec![
            PucchResourceSet {
                resources: (0..8).map(f1).collect(),
                max_bits: 2,
            },
            PucchResourceSet {
                resources: vec![PucchResource {
                    num_rb: 4,
                    ..PucchResource::new(PucchFormat::F3, 0, 14, 4)
                }],
                max_bits: 100,
            },
        ],
    };
    assert_eq!(select_pucch_resource(2, &sets, 3, 0, 8).unwrap(), f1(3));
    assert_eq!(
        select_pucch_resource(20, &sets, 0, 0, 8).unwrap().format,
        PucchFormat::F3
    );
    assert!(PucchResource::new(PucchFormat::F1, 0, 14, 0).check_payload(3).is_err());
    assert!(PucchResource::new(PucchFormat::F3, 0, 14, 0).check_payload(3).is_ok());
}

#[test]
fn dmrs_is_front_loaded() {
    let alloc = Allocation::new(0, 4, 0, 14);
    let m = dmrs_map(&DmrsConfig::default(), &alloc, 0, 0).unwrap();
    assert_eq!(m.symbols.len(), 1);
    assert!(m.symbols[0] <= 3);
}

#[test]
fn uplink_is_single_codeword_and_dft_s_single_layer() {
    assert!(LayerMapSpec::new(2, 2, LinkDirection::Uplink).is_err());
    let spec = LayerMapSpec::new(2, 8, LinkDirection::Downlink).unwrap();
    assert_eq!(spec.layers_per_codeword(), vec![4, 4]);
    let cws = vec![vec![0u8; 40], vec![1u8; 40]];
    assert_eq!(layer_map(&cws, &spec).unwrap().len(), 8);

    let ok = SharedChannelConfig {
        direction: LinkDirection::Uplink,
        transform_precoding: true,
        ..SharedChannelConfig::default()
    };
    assert!(SharedPlan::new(&ok).is_ok());
    let two = SharedChannelConfig {
        num_layers: 2,
        num_rx: 2,
        ..ok.clone()
    };
    assert!(matches!(SharedPlan::new(&two), Err(Error::Config(_))));
}

#[test]
fn gray_neighbours_differ_in_one_bit() {
    for order in [ModOrder::Qpsk, ModOrder::Qam16, ModOrder::Qam64, ModOrder::Qam256] {
        let qm = order.bits_per_symbol();
        let labels: Vec<Vec<u8>> = (0..1usize << qm)
            .map(|v| (0..qm).map(|i| (v >> (qm - 1 - i) & 1) as u8).collect())
            .collect();
        let points: Vec<_> = labels.iter().map(|b| modulate(b, order).unwrap()[0]).collect();
        let dmin = (0..points.len())
            .flat_map(|i| (0..points.len()).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| (points[i] - points[j]).norm())
            .fold(f64::INFINITY, f64::min);
        for i in 0..points.len() {
            for j in 0..points.len() {
                if i != j && (points[i] - points[j]).norm() < dmin * 1.0001 {
                    let d = labels[i].iter().zip(&labels[j]).filter(|(a, b)| a != b).count();
                    assert_eq!(d, 1, "{order:?} {i} {j}");
                }
            }
        }
    }
}
