use std::f64::consts::PI;

use frv_core::green::{
    cue_quaternion_blue, cue_quaternion_green, g_cue, g_gue, gue_quaternion_blue,
    hermitian_quaternion_green, unitary_quaternion_green, unitary_u_pair, CueGreens, GueGreens,
};
use frv_core::spectra::{Bounds, Histogram2D, RadialHistogram};
use frv_core::{Complex, Quaternion};
use proptest::prelude::*;

fn complex(r: f64) -> impl Strategy<Value = Complex> {
    (-r..r, -r..r).prop_map(|(re, im)| Complex::new(re, im))
}

fn quat(r: f64) -> impl Strategy<Value = Quaternion> {
    (complex(r), complex(r)).prop_map(|(a, b)| Quaternion::new(a, b))
}

type M2 = [[Complex; 2]; 2];

fn mul2(x: M2, y: M2) -> M2 {
    let mut o = [[Complex::new(0.0, 0.0); 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            o[i][j] = x[i][0] * y[0][j] + x[i][1] * y[1][j];
        }
    }
    o
}

fn dist2(x: M2, y: M2) -> f64 {
    (0..4).map(|k| (x[k / 2][k % 2] - y[k / 2][k % 2]).norm()).fold(0.0, f64::max)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(10_000))]

    #[test]
    fn u_pair_roots(q in quat(1.5).prop_filter("generic", |q| {
        q.a.norm() > 1e-6 && (q.a.norm() - 1.0).powi(2) + q.b.norm_sqr() > 1e-6
    })) {
        let r = unitary_u_pair(&q).unwrap();
        prop_assert!((r.u1.conj() * r.u2 - 1.0).norm() < 1e-12);
        prop_assert!(r.u1.norm() > 1.0);
        prop_assert!(r.g * r.g - 4.0 * q.a.norm_sqr() >= 0.0);
    }

    #[test]
    fn algebra_matches_matrices(p in quat(1.0), q in quat(1.0)) {
        let (mp, mq) = (p.to_matrix(), q.to_matrix());
        prop_assert!(dist2((p * q).to_matrix(), mul2(mp, mq)) < 1e-12);
        prop_assert!((mp[0][0] * mp[1][1] - mp[0][1] * mp[1][0] - p.det()).norm() < 1e-12);
        if p.det() > 1e-6 {
            let inv = p.inverse().unwrap().to_matrix();
            prop_assert!(dist2(mul2(inv, mp), Quaternion::IDENTITY.to_matrix()) < 1e-9);
        }
        let adj = p.adjoint().to_matrix();
        for i in 0..2 {
            for j in 0..2 {
                prop_assert_eq!(adj[i][j], mp[j][i].conj());
            }
        }
        prop_assert_eq!(Quaternion::from_matrix(mp, 0.0), Some(p));
    }

    #[test]
    fn diagonal_reduction(z in complex(3.0).prop_filter("off the spectra", |z| {
        z.im.abs() > 1e-3 && (z.norm() - 1.0).abs() > 1e-3
    })) {
        let h = hermitian_quaternion_green(&GueGreens, &Quaternion::diag(z)).unwrap();
        prop_assert!((h.a - g_gue(z)).norm() < 1e-12 * (1.0 + g_gue(z).norm()));
        prop_assert_eq!(h.b.norm(), 0.0);
        let u = unitary_quaternion_green(&CueGreens, &Quaternion::diag(z)).unwrap();
        let want = g_cue(z).unwrap();
        prop_assert!((u.a - want).norm() < 1e-12 * (1.0 + want.norm()));
        prop_assert_eq!(u.b.norm(), 0.0);
    }

    #[test]
    fn gue_round_trip(
        a in complex(0.6),
        b in 0.0..0.5f64,
        phase in 0.0..(2.0 * PI),
    ) {
        let q = Quaternion::new(a, Complex::from_polar(b, phase));
        prop_assume!(q.eigenvalues().0.norm() < 0.95 && q.det() > 1e-3);
        let back = hermitian_quaternion_green(&GueGreens, &gue_quaternion_blue(&q, 1.0).unwrap()).unwrap();
        prop_assert!(back.max_abs_diff(&q) < 1e-9);
    }

    #[test]
    fn cue_round_trip(w in quat(2.0).prop_filter("off the circle", |w| {
        (w.a.norm() - 1.0).powi(2) + w.b.norm_sqr() > 1e-3
    })) {
        let target = cue_quaternion_green(&w).unwrap();
        let back = cue_quaternion_green(&cue_quaternion_blue(&target, None).unwrap()).unwrap();
        prop_assert!(back.max_abs_diff(&target) < 1e-9);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(500))]

    #[test]
    fn histogram_mass(points in prop::collection::vec(complex(1.0), 1..400), bins in 1usize..40) {
        let h = RadialHistogram::new(&points, 1.0, bins);
        let inside: f64 = (0..bins).map(|k| h.density[k] * h.area(k)).sum();
        let beyond = h.beyond as f64 / h.total as f64;
        prop_assert!((inside + beyond - 1.0).abs() < 1e-12);

        let grid = Histogram2D::new(&points, Bounds::new(-0.8, 0.8, -0.9, 0.9).unwrap(), bins, bins + 1);
        let (dx, dy) = grid.cell_size();
        let inside: f64 = grid.density.iter().map(|d| d * dx * dy).sum();
        let beyond = grid.beyond as f64 / grid.total as f64;
        prop_assert!((inside + beyond - 1.0).abs() < 1e-12);
    }
}
