use proptest::prelude::*;
use sar_restore::apodization::sva;
use sar_restore::grid::{ComplexImage, Grid};
use sar_restore::io::sample_file::{decode_sample, encode_sample, SampleImages};
use sar_restore::metrics::{mae, psnr};
use sar_restore::scene::{assign_split, sample_metadata, MetadataRanges, Split, SplitSpec};
use sar_restore::train::{Dihedral, Loss};

fn grid(w: usize, h: usize) -> impl Strategy<Value = Grid<f32>> {
    prop::collection::vec(-4.0f32..4.0, w * h).prop_map(move |v| Grid::from_vec(w, h, v).unwrap())
}

fn dims() -> impl Strategy<Value = (usize, usize)> {
    (1usize..12, 1usize..12)
}

fn square() -> impl Strategy<Value = Grid<f32>> {
    (1usize..10).prop_flat_map(|n| grid(n, n))
}

proptest! {
    #[test]
    fn sample_codec_round_trips((w, h) in dims(), seed in any::<u64>()) {
        let mut k = seed;
        let mut next = move || {
            k = k.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            (k >> 40) as f32 / 1e4 - 800.0
        };
        let g = |f: &mut dyn FnMut() -> f32| Grid::from_fn(w, h, |_, _| f());
        let s = SampleImages {
            x: g(&mut next),
            z: ComplexImage::from_parts(g(&mut next), g(&mut next)).unwrap(),
            y: ComplexImage::from_parts(g(&mut next), g(&mut next)).unwrap(),
        };
        let bytes = encode_sample(&s).unwrap();
        prop_assert_eq!(decode_sample(&bytes).unwrap(), s);
        prop_assert!(decode_sample(&bytes[..bytes.len() - 1]).is_err());
    }

    #[test]
    fn dihedral_orbit_closes(g in square(), mirror in any::<bool>(), turns in 0u8..4) {
        let d = Dihedral { mirror, quarter_turns: turns };
        let mut once = d.apply_grid(&g).unwrap();
        // Mirrors are involutions, rotations have order four.
        let order = if mirror { 2 } else { 4 };
        for _ in 1..order {
            once = d.apply_grid(&once).unwrap();
        }
        prop_assert_eq!(once, g.clone());
        let mut sorted_in = g.data.clone();
        let mut sorted_out = d.apply_grid(&g).unwrap().data;
        sorted_in.sort_by(f32::total_cmp);
        sorted_out.sort_by(f32::total_cmp);
        prop_assert_eq!(sorted_in, sorted_out);
    }

    #[test]
    fn dihedral_bearing_stays_in_range(b in 0.0f64..=360.0, mirror in any::<bool>(), turns in 0u8..4) {
        let d = Dihedral { mirror, quarter_turns: turns };
        let out = d.bearing(b);
        prop_assert!((0.0..360.0).contains(&out));
        if !mirror {
            let shift = (out - b - 90.0 * turns as f64).rem_euclid(360.0);
            prop_assert!(shift.min(360.0 - shift) < 1e-9);
        }
    }

    #[test]
    fn losses_are_nonnegative_and_zero_on_match(a in grid(6, 5), b in grid(6, 5), lambda in 0.0f64..4.0) {
        for loss in [Loss::Mae, Loss::Epl { lambda }] {
            prop_assert!(loss.value(&a, &b).unwrap() >= 0.0);
            prop_assert_eq!(loss.value(&a, &a).unwrap(), 0.0);
        }
        prop_assert_eq!(Loss::Epl { lambda: 0.0 }.value(&a, &b).unwrap(), Loss::Mae.value(&a, &b).unwrap());
    }

    #[test]
    fn mae_is_symmetric_and_psnr_improves_toward_reference(a in grid(8, 8), b in grid(8, 8)) {
        prop_assert!((mae(&a, &b).unwrap() - mae(&b, &a).unwrap()).abs() < 1e-12);
        let half = Grid::from_fn(8, 8, |r, c| (a.get(r, c) + b.get(r, c)) / 2.0);
        if a.data.iter().any(|&v| v != a.data[0]) && a != b {
            prop_assert!(psnr(&a, &half).unwrap() > psnr(&a, &b).unwrap() - 1e-6);
        }
    }

    #[test]
    fn sva_never_grows_a_component(re in grid(9, 7), im in grid(9, 7)) {
        let y = ComplexImage::from_parts(re, im).unwrap();
        let out = sva(&y);
        for (o, i) in out.re.iter().zip(&y.re).chain(out.im.iter().zip(&y.im)) {
            prop_assert!(o.abs() <= i.abs() * (1.0 + 1e-6) + 1e-6, "{o} vs {i}");
        }
    }

    #[test]
    fn metadata_stays_in_range_and_split_is_a_function(seed in any::<u64>()) {
        let ranges = MetadataRanges::default();
        let m = sample_metadata(seed, &ranges).unwrap();
        prop_assert!(ranges.contains(&m));
        prop_assert_eq!(m, sample_metadata(seed, &ranges).unwrap());
        let spec = SplitSpec::default();
        let inside = spec.validation.iter().zip(m.to_array()).any(|(iv, v)| iv.lo <= v && v <= iv.hi);
        prop_assert_eq!(assign_split(&m, &spec) == Split::Validation, inside);
    }
}
