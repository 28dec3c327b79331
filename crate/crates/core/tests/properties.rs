// Copyright 2026 EDP Contributors
// SPDX-License-Identifier: Apache-2.0

mod common;

use edp_core::config::{parse_config, SolverConfig};
use edp_core::forcing::{Envelope, ForcingTerm, Profile};
use edp_core::modes::ModeCalculus;
use edp_core::periodic::NeumannMode;
use edp_core::pressure::PressureLaw;
use edp_core::snapshot::{decode, encode};
use edp_core::{Grid, State};
use num_complex::Complex64;
use proptest::prelude::*;

fn term(dim: usize) -> impl Strategy<Value = ForcingTerm> {
    let envelope = prop_oneof![
        (0.5f64..20.0).prop_map(|sigma| Envelope::Gaussian { sigma }),
        (0.5f64..6.0).prop_map(|power| Envelope::Rational { power }),
    ];
    let profile = prop_oneof![
        Just(Profile::Constant),
        (1u32..4, -3.0f64..3.0).prop_map(|(q, phase)| Profile::Cosine { q, phase }),
    ];
    (-1.0f64..1.0, proptest::collection::vec(-1.0f64..1.0, dim), envelope, profile)
        .prop_map(|(amplitude, direction, envelope, profile)| ForcingTerm { amplitude, direction, envelope, profile })
}

fn config() -> impl Strategy<Value = SolverConfig> {
    (1usize..=3, 3u32..=6, 0.1f64..0.3, 0.02f64..0.15, 1usize..=6).prop_flat_map(|(dim, log_n, r1, gap, s)| {
        let r_inf = r1 + gap;
        let min_half = 4.0 * std::f64::consts::PI / r_inf;
        (
            Just((dim, 1usize << log_n, r1, r_inf, s)),
            min_half..4.0 * min_half,
            0.1f64..3.0,
            16usize..300,
            proptest::collection::vec(term(dim), 0..3),
            prop_oneof![Just(PressureLaw::Quadratic), (1.1f64..3.0).prop_map(PressureLaw::Gamma)],
            (1e-12f64..1e-4, any::<bool>(), any::<u64>()),
        )
            .prop_map(|((dim, n, r1, r_inf, s), half_length, period, nodes, forcing, pressure, (tol, plain, seed))| {
                SolverConfig {
                    dim,
                    n,
                    half_length,
                    s,
                    period,
                    nodes,
                    r1,
                    r_inf,
                    pressure,
                    forcing,
                    tol_outer: tol,
                    tol_neumann: tol / 3.0,
                    neumann: if plain { NeumannMode::Plain } else { NeumannMode::Preconditioned },
                    seed,
                    ..SolverConfig::default()
                }
            })
    })
}

fn wavevector() -> impl Strategy<Value = [f64; 3]> {
    proptest::array::uniform3(-2.0f64..2.0)
}

fn vector4() -> impl Strategy<Value = [Complex64; 4]> {
    proptest::array::uniform4((-1.0f64..1.0, -1.0f64..1.0).prop_map(|(re, im)| Complex64::new(re, im)))
}

fn norm_sq(x: &[Complex64; 4]) -> f64 {
    x.iter().map(|z| z.norm_sqr()).sum()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn config_text_round_trips(cfg in config()) {
        prop_assert!(cfg.validate().is_ok());
        let text = cfg.to_text();
        let back = parse_config(&text).unwrap();
        prop_assert_eq!(&back, &cfg);
        prop_assert_eq!(back.to_text(), text);
    }

    #[test]
    fn snapshots_round_trip(
        (dim, n, comps) in (1usize..=3, 3u32..=4).prop_flat_map(|(dim, log_n)| {
            let n = 1usize << log_n;
            let len = n.pow(dim as u32);
            (Just(dim), Just(n), proptest::collection::vec(proptest::collection::vec(any::<f64>(), len), dim + 1))
        })
    ) {
        let grid = Grid::new(dim, n, 10.0).unwrap();
        let u = State { comps };
        let bytes = encode(&grid, &u).unwrap();
        let (header, back) = decode(&bytes).unwrap();
        prop_assert_eq!(header.n, n);
        prop_assert_eq!(header.dim, dim);
        let bits = |s: &State| s.comps.iter().flatten().map(|x| x.to_bits()).collect::<Vec<_>>();
        prop_assert_eq!(bits(&back), bits(&u));
    }

    #[test]
    fn linear_flow_dissipates(xi in wavevector(), t in 0.0f64..4.0, x in vector4()) {
        let calc = ModeCalculus::new(&xi, 1e-4);
        let y = calc.propagator(t).apply(&x);
        prop_assert!(norm_sq(&y) <= norm_sq(&x) * (1.0 + 1e-10));
    }

    #[test]
    fn linear_flow_commutes_with_conjugation(xi in wavevector(), t in 0.0f64..4.0, x in vector4()) {
        // Real fields stay real: the mode at -ξ evolves as the conjugate of the mode at ξ.
        let neg = [-xi[0], -xi[1], -xi[2]];
        let y = ModeCalculus::new(&xi, 1e-4).propagator(t).apply(&x);
        let xc = x.map(|z| z.conj());
        let yc = ModeCalculus::new(&neg, 1e-4).propagator(t).apply(&xc);
        for k in 0..4 {
            prop_assert!((y[k].conj() - yc[k]).norm() < 1e-11);
        }
    }

    #[test]
    fn low_and_high_parts_recombine(seed in 0u64..1000) {
        let domain = common::domain(2, 16, 10.0 * std::f64::consts::PI);
        let hat = common::random_hermitian(&domain, seed, 1.0, |_| true);
        let mut low = hat.clone();
        let mut high = hat.clone();
        domain.project_low_spectral(&mut low);
        domain.project_high_spectral(&mut high);
        low.add(&high);
        domain.band_limit(&mut low);
        let mut expect = hat;
        domain.band_limit(&mut expect);
        low.sub(&expect);
        prop_assert!(low.max_norm() < 1e-14);
    }
}
