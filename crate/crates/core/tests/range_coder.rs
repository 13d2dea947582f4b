use ldcodec::range_coder::{LaplaceModel, RangeDecoder, RangeEncoder, INITIAL_TELL_FRAC};
use ldcodec::Error;
use proptest::prelude::*;

#[derive(Debug, Clone)]
enum Symbol {
    Uniform(u32, u32),
    Raw(u32, u32),
    Laplace(i32, u32),
}

fn symbol() -> impl Strategy<Value = Symbol> {
    prop_oneof![
        (2..=u32::MAX).prop_flat_map(|t| (0..t, Just(t)).prop_map(|(v, t)| Symbol::Uniform(v, t))),
        (1..=32u32).prop_flat_map(|b| {
            let max = if b == 32 { u32::MAX } else { (1 << b) - 1 };
            (0..=max, Just(b)).prop_map(|(v, b)| Symbol::Raw(v, b))
        }),
        (-60..=60i32, 1_000..32_000u32).prop_map(|(v, d)| Symbol::Laplace(v, d)),
    ]
}

fn encode(script: &[Symbol]) -> (RangeEncoder, Vec<u64>) {
    let mut enc = RangeEncoder::new();
    let mut tells = Vec::new();
    for s in script {
        match *s {
            Symbol::Uniform(v, t) => enc.encode_uniform(v, t).unwrap(),
            Symbol::Raw(v, b) => enc.encode_raw_bits(v, b).unwrap(),
            Symbol::Laplace(v, d) => enc
                .encode_laplace(v, &LaplaceModel::from_decay(d).unwrap())
                .unwrap(),
        }
        tells.push(enc.tell_frac());
    }
    (enc, tells)
}

fn check_decode(bytes: &[u8], script: &[Symbol], tells: &[u64]) {
    let mut dec = RangeDecoder::new(bytes);
    assert_eq!(dec.tell_frac(), INITIAL_TELL_FRAC);
    for (s, &tell) in script.iter().zip(tells) {
        match *s {
            Symbol::Uniform(v, t) => assert_eq!(dec.decode_uniform(t).unwrap(), v),
            Symbol::Raw(v, b) => assert_eq!(dec.decode_raw_bits(b).unwrap(), v),
            Symbol::Laplace(v, d) => {
                assert_eq!(dec.decode_laplace(&LaplaceModel::from_decay(d).unwrap()), v)
            }
        }
        assert_eq!(dec.tell_frac(), tell);
    }
}

proptest! {
    #[test]
    fn scripts_round_trip(script in prop::collection::vec(symbol(), 0..300)) {
        let (enc, tells) = encode(&script);
        let bound = enc.tell_frac().div_ceil(64) as usize;
        let bytes = enc.finish();
        prop_assert!(bytes.len() <= bound);
        check_decode(&bytes, &script, &tells);
    }

    #[test]
    fn fixed_size_round_trip(
        script in prop::collection::vec(symbol(), 1..100),
        pad in 0usize..40,
    ) {
        let (enc, tells) = encode(&script);
        let minimal = enc.clone().finish().len();
        let bytes = enc.clone().finish_fixed(minimal + pad).unwrap();
        prop_assert_eq!(bytes.len(), minimal + pad);
        check_decode(&bytes, &script, &tells);
        if minimal > 0 {
            let overflow = matches!(
                enc.finish_fixed(minimal - 1),
                Err(Error::Overflow { .. })
            );
            prop_assert!(overflow);
        }
    }

    #[test]
    fn laplace_cost_matches_growth(values in prop::collection::vec(-20..=20i32, 1..200)) {
        let model = LaplaceModel::from_decay(20_000).unwrap();
        let mut enc = RangeEncoder::new();
        let mut ideal = 0.0;
        for &v in &values {
            enc.encode_laplace(v, &model).unwrap();
            ideal += model.cost_bits(v);
        }
        let used = (enc.tell_frac() - INITIAL_TELL_FRAC) as f64 / 8.0;
        prop_assert!(used <= ideal + 2.0 + 0.01 * values.len() as f64, "{used} vs {ideal}");
    }
}

#[test]
fn garbage_input_never_panics() {
    let models: Vec<LaplaceModel> = [3_000, 25_000]
        .iter()
        .map(|&d| LaplaceModel::from_decay(d).unwrap())
        .collect();
    for seed in 0..200u32 {
        let bytes: Vec<u8> = (0..(seed % 17))
            .map(|i| (seed.wrapping_mul(2_654_435_761) >> (i % 24)) as u8)
            .collect();
        let mut dec = RangeDecoder::new(&bytes);
        for i in 0..50 {
            let _ = dec.decode_uniform(1 + i * 977);
            let _ = dec.decode_raw_bits(1 + i % 32);
            let _ = dec.decode_laplace(&models[(i % 2) as usize]);
        }
    }
}
