mod common;

use common::*;
use pwrap::claimed::{small_diameter_tau, SubsetExtensionConstants, TahoeConstants};
use pwrap::{lipschitz_filter, modified_tahoe, small_diameter, subset_extension, Profile, RandomStream, RangeSpec};

fn size_fn(n: usize, c: f64) -> Table {
    Table::from_fn(n, |z| c * pop(z) as f64)
}

#[test]
fn faithful_constants() {
    let k = SubsetExtensionConstants::new(3.0, 0.05, Profile::PaperFaithful);
    assert_eq!(k.q, 20);
    assert_eq!(k.eps0, 1.0);
    assert_eq!(k.delta0, 0.025);
    assert_eq!(k.tau, (40.0f64).ln().ceil() as usize);
    assert_eq!(k.noise_scale(), 200.0);
    let t = TahoeConstants::new(1.0, 0.05, Profile::PaperFaithful);
    assert_eq!(t.tau, (4.0 * (60.0f64).ln()).ceil() as usize);
    assert_eq!(t.noise_scale(), 10.0 * t.tau as f64 * 4.0);
    assert_eq!(SubsetExtensionConstants::new(3.0, 0.05, Profile::TestConstants).tau, 1);
    assert_eq!(small_diameter_tau(1.0, 2.0), 6);
    assert_eq!(small_diameter_tau(0.5, 2.0), 12);
}

#[test]
fn subset_extension_never_rejects_lipschitz_input() {
    let f = size_fn(10, 2.0);
    let mut bb = f.boxed(0x3ff);
    for t in 0..300 {
        let out = subset_extension(&mut bb, 2.0, 3.0, 0.05, Profile::TestConstants, &mut RandomStream::with_stream(31, t)).unwrap();
        assert_eq!(out.released.get("b"), Some(&0.0));
        assert!(out.result.value().is_some());
        assert_eq!(out.profile, Profile::TestConstants);
    }
}

#[test]
fn subset_extension_rejects_parity() {
    // Jumps of 1000 between every pair of neighbors: nothing is stable.
    let f = Table::from_fn(10, |z| 1000.0 * (pop(z) % 2) as f64);
    let mut bb = f.boxed(0x3ff);
    for t in 0..300 {
        let out = subset_extension(&mut bb, 1.0, 3.0, 0.05, Profile::TestConstants, &mut RandomStream::with_stream(32, t)).unwrap();
        assert!(out.result.is_bottom());
        assert_eq!(out.released.get("b"), Some(&1.0));
    }
}

#[test]
fn subset_extension_extends_past_a_cliff_at_x() {
    // Only x jumps, so the release follows the subsets below it.
    let f = Table::from_fn(10, |z| if z == 0x3ff { 1000.0 } else { 0.0 });
    let mut bb = f.boxed(0x3ff);
    let outs: Vec<f64> = (0..2000)
        .map(|t| {
            subset_extension(&mut bb, 1.0, 3.0, 0.05, Profile::TestConstants, &mut RandomStream::with_stream(32, t))
                .unwrap()
                .result
                .value()
                .unwrap()
        })
        .collect();
    let (mean, se) = mean_and_se(&outs);
    assert!(mean.abs() <= 3.0 * se, "mean {mean} se {se}");
}

#[test]
fn subset_extension_on_a_constant_is_centered() {
    let f = Table::from_fn(10, |_| 3.0);
    let mut bb = f.boxed(0x3ff);
    let outs: Vec<f64> = (0..2000)
        .map(|t| {
            subset_extension(&mut bb, 1.0, 3.0, 0.05, Profile::TestConstants, &mut RandomStream::with_stream(33, t))
                .unwrap()
                .result
                .value()
                .unwrap()
                - 3.0
        })
        .collect();
    let (mean, se) = mean_and_se(&outs);
    assert!(mean.abs() <= 3.0 * se);
}

#[test]
fn subset_extension_validates_parameters() {
    let f = size_fn(3, 1.0);
    let mut r = RandomStream::new(0);
    assert!(subset_extension(&mut f.boxed(0b111), 1.0, 0.0, 0.05, Profile::PaperFaithful, &mut r).is_err());
    assert!(subset_extension(&mut f.boxed(0b111), 1.0, 1.0, 0.0, Profile::PaperFaithful, &mut r).is_err());
    assert!(subset_extension(&mut f.boxed(0b111), -1.0, 1.0, 0.05, Profile::PaperFaithful, &mut r).is_err());
}

#[test]
fn tahoe_on_lipschitz_input_adds_laplace_noise_at_x() {
    let f = size_fn(12, 1.0);
    let mut bb = f.boxed(0xfff);
    let k = TahoeConstants::new(4.0, 0.05, Profile::TestConstants);
    let outs: Vec<f64> = (0..3000)
        .map(|t| {
            let out = modified_tahoe(&mut bb, 1.0, 4.0, 0.05, Profile::TestConstants, &mut RandomStream::with_stream(34, t)).unwrap();
            assert!(out.released.contains_key("ell"));
            out.result.value().unwrap() - 12.0
        })
        .collect();
    let (_, p) = ks_test(&outs, |x| laplace_cdf(x, k.noise_scale()));
    assert!(p > 0.01, "KS p = {p}");
}

#[test]
fn tahoe_on_a_constant_never_rejects_under_paper_constants() {
    let f = Table::from_fn(7, |_| 2.0);
    let mut bb = f.boxed(0x7f);
    for t in 0..1000 {
        let out = modified_tahoe(&mut bb, 1.0, 1.0, 0.05, Profile::PaperFaithful, &mut RandomStream::with_stream(35, t)).unwrap();
        assert!(!out.result.is_bottom());
    }
}

#[test]
fn tahoe_noise_exceeds_subset_extension_noise() {
    // Faithful constants at ε = 1, δ = 0.05: the TAHOE scale grows with ln(1/δ)/ε.
    let se = SubsetExtensionConstants::new(1.0, 0.05, Profile::PaperFaithful).noise_scale();
    let tahoe = TahoeConstants::new(1.0, 0.05, Profile::PaperFaithful).noise_scale();
    assert!(tahoe > se);
    let f = Table::from_fn(6, |_| 0.0);
    let sd = |mech: &dyn Fn(u64) -> f64| {
        let xs: Vec<f64> = (0..4000).map(mech).collect();
        let (_, se) = mean_and_se(&xs);
        se * (xs.len() as f64).sqrt()
    };
    let s_se = sd(&|t| {
        subset_extension(&mut f.boxed(0x3f), 1.0, 1.0, 0.05, Profile::PaperFaithful, &mut RandomStream::with_stream(36, t))
            .unwrap()
            .result
            .value()
            .unwrap()
    });
    let s_tahoe = sd(&|t| {
        modified_tahoe(&mut f.boxed(0x3f), 1.0, 1.0, 0.05, Profile::PaperFaithful, &mut RandomStream::with_stream(37, t))
            .unwrap()
            .result
            .value()
            .unwrap()
    });
    assert!(s_tahoe > s_se, "{s_tahoe} vs {s_se}");
}

#[test]
fn small_diameter_on_zero_is_centered_and_local() {
    let f = Table::from_fn(8, |_| 0.0);
    let mut bb = f.boxed_in(0xff, RangeSpec::interval(0.0, 1.0).unwrap());
    let outs: Vec<f64> = (0..3000)
        .map(|t| small_diameter(&mut bb, 1.0, 1.0, 1.0, &mut RandomStream::with_stream(38, t)).unwrap().result.value().unwrap())
        .collect();
    let (mean, se) = mean_and_se(&outs);
    assert!(mean.abs() <= 3.0 * se);
    let out = small_diameter(&mut f.boxed(0xff), 1.0, 1.0, 1.0, &mut RandomStream::new(0)).unwrap();
    assert!(out.realized_depth <= 2 * small_diameter_tau(1.0, 1.0));
}

#[test]
fn lipschitz_filter_is_identity_on_lipschitz_input() {
    let mut r = rng(39);
    for _ in 0..20 {
        let f = lipschitz_in(7, 3.0, &mut r);
        let y = lipschitz_filter(&mut f.boxed(0x7f), 1.0, 3.0).unwrap();
        assert!((y.result.value().unwrap() - f.at(0x7f)).abs() < TOL);
    }
    let k = Table::from_fn(5, |_| 2.5);
    assert_eq!(lipschitz_filter(&mut k.boxed(0b11111), 1.0, 3.0).unwrap().result.value(), Some(2.5));
}

#[test]
fn lipschitz_filter_respects_c() {
    let f = size_fn(6, 0.5).vals.iter().map(|v| v.min(2.0)).collect::<Vec<_>>();
    let f = Table::new(6, f);
    let y = lipschitz_filter(&mut f.boxed(0x3f), 0.5, 2.0).unwrap();
    assert!((y.result.value().unwrap() - 2.0).abs() < TOL);
}

#[test]
fn lipschitz_filter_output_is_14_lipschitz() {
    let mut r = rng(40);
    let f = arbitrary_real(6, 0.0, 4.0, &mut r);
    let y: Vec<f64> =
        (0..64u32).map(|x| lipschitz_filter(&mut f.boxed(x), 1.0, 4.0).unwrap().result.value().unwrap()).collect();
    for (v, u) in neighbor_pairs(6) {
        assert!((y[u as usize] - y[v as usize]).abs() <= 14.0 + TOL);
    }
}
