use compac::spaces::{pair_u64, unpair_u64};
use compac::weihrauch::{
    check_monotone, compose, deinterleave, interleave, is_prefix, lim_transducer, parallel_outputs,
    parallelize, stage_builder, Transducer,
};
use proptest::prelude::*;

fn running_sum() -> Transducer {
    Transducer::new("sum", |p| {
        p.iter()
            .scan(0u64, |acc, &v| {
                *acc = acc.wrapping_add(v);
                Some(*acc)
            })
            .collect()
    })
}

fn every_third() -> Transducer {
    Transducer::new("every-third", |p| p.iter().skip(2).step_by(3).copied().collect())
}

fn family() -> Vec<Transducer> {
    let id = Transducer::identity();
    vec![
        id.clone(),
        running_sum(),
        every_third(),
        compose(&running_sum(), &every_third(), &id),
        compose(&every_third(), &running_sum(), &running_sum()),
        parallelize(&running_sum()),
        parallelize(&every_third()),
        lim_transducer(|k| (k as usize) % 5),
        stage_builder((0..30).map(|i| i * i).collect()),
    ]
}

proptest! {
    #[test]
    fn transducers_are_monotone(input in prop::collection::vec(0u64..50, 0..60), cut in 0usize..60) {
        for t in family() {
            prop_assert!(check_monotone(&t, &input, cut), "{}", t.label());
        }
    }

    #[test]
    fn composition_associates(input in prop::collection::vec(0u64..50, 0..40)) {
        let (a, b, c) = (running_sum(), every_third(), running_sum());
        let id = Transducer::identity();
        let left = compose(&compose(&a, &b, &id), &c, &id);
        let right = compose(&a, &compose(&b, &c, &id), &id);
        prop_assert_eq!(left.apply(&input), right.apply(&input));
        prop_assert_eq!(compose(&id, &a, &id).apply(&input), a.apply(&input));
    }

    #[test]
    fn parallel_matches_serial(coords in prop::collection::vec(prop::collection::vec(0u64..50, 12), 1..5), len in 0usize..70) {
        // interleave the coordinates and cut to `len`
        let mut full = Vec::new();
        for n in 0u64.. {
            let (i, j) = unpair_u64(n);
            match coords.get(i as usize).and_then(|c| c.get(j as usize)) {
                Some(&v) => full.push(v),
                None => break,
            }
        }
        let input = &full[..len.min(full.len())];
        let g = running_sum();
        let outs = parallel_outputs(&g, input);
        for (i, out) in outs.iter().enumerate() {
            let own = deinterleave(input, i as u64);
            prop_assert!(is_prefix(&own, &coords[i]));
            prop_assert_eq!(out, &g.apply(&own));
        }
        prop_assert_eq!(parallelize(&g).apply(input), interleave(&outs));
    }

    #[test]
    fn interleaving_uses_shared_pairing(i in 0u64..20, j in 0u64..20) {
        let n = pair_u64(i, j).unwrap() as usize;
        let input: Vec<u64> = (0..=n as u64).collect();
        let own = deinterleave(&input, i);
        prop_assert_eq!(own.get(j as usize).copied(), Some(n as u64));
    }
}
