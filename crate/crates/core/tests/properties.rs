use num_rational::BigRational;
use num_traits::Zero;
use proptest::prelude::*;
use rand::seq::SliceRandom;

use pwl_janossy::assignment::{wasserstein, wasserstein_bruteforce};
use pwl_janossy::cpwl::random::relu_net;
use pwl_janossy::cpwl::CpwlFunction;
use pwl_janossy::grid_codec::{separated_multiset, BoundingBox, GridCodec};
use pwl_janossy::io::{parse_document, to_json, CertificateDocument};
use pwl_janossy::janossy::{janossy_pool, PoolingSpec};
use pwl_janossy::numeric::{parse_rational, rational_to_string};
use pwl_janossy::rng::seeded;
use pwl_janossy::witness::{
    find_collision, null_space_vector, tuple_sums_exact, tuple_system_coeffs, CollisionOptions,
};
use pwl_janossy::{Multiset, Point};

fn multiset(dim: usize, max_n: usize) -> impl Strategy<Value = Vec<Vec<f64>>> {
    prop::collection::vec(prop::collection::vec(-10.0..10.0f64, dim), 1..=max_n)
}

fn pair(dim: usize, max_n: usize) -> impl Strategy<Value = (Multiset, Multiset)> {
    (1..=max_n).prop_flat_map(move |n| {
        let side = prop::collection::vec(prop::collection::vec(-10.0..10.0f64, dim), n);
        (side.clone(), side).prop_map(|(a, b)| {
            (Multiset::from_rows(&a).unwrap(), Multiset::from_rows(&b).unwrap())
        })
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn wasserstein_is_a_metric(rows in multiset(2, 6), seed in any::<u64>(), shift in -1.0..1.0f64) {
        let a = Multiset::from_rows(&rows).unwrap();
        let mut shuffled = rows.clone();
        shuffled.shuffle(&mut seeded(seed));
        let b = Multiset::from_rows(&shuffled).unwrap();
        prop_assert_eq!(wasserstein(&a, &b).unwrap(), 0.0);

        let moved: Vec<Vec<f64>> = rows.iter().map(|r| vec![r[0] + shift, r[1]]).collect();
        let c = Multiset::from_rows(&moved).unwrap();
        let ac = wasserstein(&a, &c).unwrap();
        prop_assert_eq!(ac, wasserstein(&c, &a).unwrap());
        prop_assert!(ac <= rows.len() as f64 * shift.abs() * (1.0 + 1e-12) + 1e-12);
    }

    #[test]
    fn wasserstein_triangle_inequality((a, b) in pair(3, 6), seed in any::<u64>()) {
        let mut rng = seeded(seed);
        let c = Multiset::from_rows(
            &(0..a.len()).map(|_| (0..3).map(|_| rand::Rng::gen_range(&mut rng, -10.0..10.0)).collect()).collect::<Vec<_>>(),
        ).unwrap();
        let ab = wasserstein(&a, &b).unwrap();
        let ac = wasserstein(&a, &c).unwrap();
        let cb = wasserstein(&c, &b).unwrap();
        prop_assert!(ab <= (ac + cb) * (1.0 + 1e-12));
    }

    #[test]
    fn assignment_matches_enumeration((a, b) in pair(2, 6)) {
        prop_assert_eq!(wasserstein(&a, &b).unwrap(), wasserstein_bruteforce(&a, &b).unwrap());
    }

    #[test]
    fn pooling_ignores_input_order(net_seed in any::<u64>(), rows in multiset(2, 6), k in 1usize..=3, seed in any::<u64>()) {
        prop_assume!(rows.len() >= k);
        let f: CpwlFunction = relu_net(&mut seeded(net_seed), 2 * k, &[6], 2).unwrap().into();
        let spec = PoolingSpec::new(f, k, rows.len()).unwrap();
        let xs: Vec<Point> = rows.iter().map(|r| Point::new(r.clone()).unwrap()).collect();
        let mut ys = xs.clone();
        ys.shuffle(&mut seeded(seed));
        let p = janossy_pool(&spec, &xs).unwrap();
        let q = janossy_pool(&spec, &ys).unwrap();
        let scale = p.iter().fold(1.0f64, |m, v| m.max(v.abs()));
        for (u, v) in p.iter().zip(&q) {
            prop_assert!((u - v).abs() <= 1e-12 * scale, "{u} vs {v}");
        }
    }

    #[test]
    fn tuple_system_null_vectors(n in 2usize..=9, k_frac in 0.0..1.0f64) {
        let k = 1 + ((n - 1) as f64 * k_frac) as usize;
        prop_assume!(k < n);
        let m = tuple_system_coeffs(n, k).unwrap();
        let v = null_space_vector(&m).expect("n > k leaves a free column");
        prop_assert!(v.iter().any(|x| !x.is_zero()));
        for row in &m {
            let dot = row
                .iter()
                .zip(&v)
                .fold(BigRational::zero(), |s, (c, x)| s + BigRational::from_integer(c.clone()) * x);
            prop_assert!(dot.is_zero());
        }
        prop_assert!(tuple_sums_exact(&v, k).unwrap().iter().all(|s| s.is_zero()));
    }

    #[test]
    fn rational_strings_round_trip(num in any::<i64>(), den in 1i64..i64::MAX) {
        let x = BigRational::new(num.into(), den.into());
        prop_assert_eq!(parse_rational(&rational_to_string(&x)), Some(x));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn codec_round_trip_and_order_free(seed in any::<u64>(), dim in 1usize..=2, n in 1usize..=12) {
        let domain = BoundingBox::unit(dim);
        let separation = 0.2;
        let mut rng = seeded(seed);
        let n = if dim == 1 { n.min(4) } else { n };
        let a = separated_multiset(&mut rng, &domain, n, separation);
        prop_assume!(a.is_ok());
        let a = a.unwrap();
        let codec = GridCodec::build(separation, &domain).unwrap();
        let e = codec.encode(&a).unwrap();

        let mut pts = a.elements().to_vec();
        pts.shuffle(&mut rng);
        let shuffled = codec.encode(&Multiset::new(pts).unwrap()).unwrap();
        prop_assert_eq!(&e.values, &shuffled.values);

        let back = codec.decode(&e).unwrap();
        prop_assert!(a.approx_eq(&back, 1e-9), "{a:?} vs {back:?}");
    }

    #[test]
    fn certificate_json_round_trip(seed in 0u64..1000, n in 2usize..=4) {
        let k = 1;
        let f: CpwlFunction = relu_net(&mut seeded(seed), k, &[5], 1).unwrap().into();
        let opts = CollisionOptions { seed, ..CollisionOptions::default() };
        let cert = find_collision(&f, k, n, &opts);
        let doc = CertificateDocument::collision(f, cert.unwrap());
        let text = to_json(&doc).unwrap();
        let back: CertificateDocument = parse_document(&text).unwrap();
        prop_assert_eq!(to_json(&back).unwrap(), text);
        prop_assert!(back.verify().unwrap().is_empty());
    }
}
