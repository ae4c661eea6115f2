//! Acceptance suite. Runs every criterion at its stated tolerance, prints one
//! PASS/FAIL line per criterion and exits non-zero if any fails.

use std::f64::consts::PI;
use std::process::ExitCode;
use std::time::Instant;

use frv_core::engine::{borderline_scan, density_from_greens, solve_grid, Ray};
use frv_core::ensembles::{realize_model, sample_cue, EnsembleConfig, GaussianStream};
use frv_core::green::{
    cue_quaternion_blue, cue_quaternion_green, g_cue, g_gue, gue_quaternion_blue,
    hermitian_quaternion_green, unitary_quaternion_green, unitary_u_pair, CueGreens, GueGreens,
};
use frv_core::models::{BorderSpec, ModelSpec};
use frv_core::spectra::{
    hull_radius, overlap_compare, overlap_correlator, planar_compare, radial_compare, sample_overlaps,
};
use frv_core::{Complex, Quaternion};

const SEED: u64 = 42;

struct Outcome {
    pass: bool,
    detail: String,
}

fn c(re: f64, im: f64) -> Complex {
    Complex::new(re, im)
}

fn cloud(model: ModelSpec, n: usize, samples: usize) -> frv_core::ensembles::EigCloud {
    realize_model(&EnsembleConfig {
        model,
        n,
        samples,
        seed: SEED,
    })
    .expect("ensemble realization")
}

fn criterion_1() -> Outcome {
    let model = ModelSpec::CUE_PLUS_CUE;
    let rep = radial_compare(&cloud(model, 200, 100), &model, 10).unwrap();
    let origin = rep.origin_bin.unwrap();
    Outcome {
        pass: rep.l1_distance <= 0.05 && rep.outside_fraction <= 0.01,
        detail: format!(
            "l1 = {:.4} (<= 0.05), outside = {:.4} (<= 0.01); origin bin r < {:.3}: {:.4} vs {:.4}",
            rep.l1_distance, rep.outside_fraction, origin.radius, origin.sampled, origin.theory
        ),
    }
}

fn criterion_2() -> Outcome {
    let mut pass = true;
    let mut parts = Vec::new();
    for m in [3usize, 5, 10] {
        let model = ModelSpec::diffusion(m);
        let cl = cloud(model, 200, 100);
        let hull = hull_radius(&cl).unwrap();
        let sum = model.blue_sum();
        let border = (0..4)
            .map(|k| borderline_scan(&sum, &Ray::polar(0.4 + k as f64 * PI / 2.0, 1.5), 1e-10).unwrap())
            .fold(0.0f64, |acc, r| acc.max((r - 1.0).abs()));
        let rep = radial_compare(&cl, &model, 5).unwrap();
        let origin = rep.origin_bin.unwrap();
        let want = (1.0 - 1.0 / m as f64) / PI;
        let rel = (origin.sampled - want).abs() / want;
        let ok = (hull - 1.0).abs() <= 0.02 && border <= 0.02 && rel <= 0.10;
        pass &= ok;
        parts.push(format!(
            "M={m}: hull {hull:.4}, |b|^2 crossing off by {border:.1e}, origin {:.4} vs {want:.5} ({:.1}%)",
            origin.sampled,
            100.0 * rel
        ));
    }
    Outcome {
        pass,
        detail: parts.join("; "),
    }
}

fn criterion_3() -> Outcome {
    let mut pass = true;
    let mut parts = Vec::new();
    for p in [0.5, 0.75, 1.0, 2.0] {
        let model = ModelSpec::CueGue { p };
        let rep = planar_compare(&cloud(model, 100, 50), &model, 20).unwrap();
        let inside = 1.0 - rep.outside_fraction;
        let mut ok = inside >= 0.99;
        let mut s = format!("p={p}: inside {:.2}%", 100.0 * inside);
        if p < 1.0 {
            let hole = rep.inside_hole_fraction.unwrap();
            ok &= hole <= 0.01;
            s += &format!(", hole {:.2}%", 100.0 * hole);
        }
        pass &= ok;
        parts.push(s);
    }
    Outcome {
        pass,
        detail: parts.join("; "),
    }
}

/// Distance from `z` to the nearest border curve, by dense polylines.
fn border_distance(border: &BorderSpec, z: Complex) -> f64 {
    border
        .curves(8192)
        .iter()
        .flat_map(|curve| curve.windows(2))
        .map(|w| {
            let (a, b) = (w[0], w[1]);
            let ab = b - a;
            let t = (((z - a) * ab.conj()).re / ab.norm_sqr()).clamp(0.0, 1.0);
            (z - (a + ab * t)).norm()
        })
        .fold(f64::INFINITY, f64::min)
}

fn criterion_4() -> Outcome {
    let mut pass = true;
    let mut parts = Vec::new();
    let cases = [
        (ModelSpec::CUE_PLUS_CUE, 1e-8),
        (ModelSpec::CueGue { p: 0.5 }, 1e-7),
        (ModelSpec::CueGue { p: 2.0 }, 1e-7),
    ];
    for (model, tol) in cases {
        let border = model.border();
        let (sx, sy) = border.semi_axes();
        let (hx, hy) = (1.4 * sx, 1.4 * sy);
        let xs: Vec<f64> = (0..41).map(|i| -hx + 2.0 * hx * i as f64 / 40.0).collect();
        let ys: Vec<f64> = (0..41).map(|i| -hy + 2.0 * hy * i as f64 / 40.0).collect();
        let grid = solve_grid(&model.blue_sum(), &xs, &ys);
        let (mut worst, mut checked, mut failed) = (0.0f64, 0, 0);
        for (iy, row) in grid.iter().enumerate() {
            for (ix, r) in row.iter().enumerate() {
                let z = c(xs[ix], ys[iy]);
                if border_distance(&border, z) <= 0.05 {
                    continue;
                }
                checked += 1;
                let want = model.solution(z).unwrap();
                match r {
                    Ok(r) => {
                        let e = (r.greens - want.greens).norm().max((r.corr - want.neg_corr).abs());
                        worst = worst.max(e);
                    }
                    Err(_) => failed += 1,
                }
            }
        }
        pass &= failed == 0 && worst <= tol;
        parts.push(format!("{model}: {checked} points, max err {worst:.1e} (<= {tol:.0e}), {failed} failures"));
    }
    Outcome {
        pass,
        detail: parts.join("; "),
    }
}

const GL_X: [f64; 5] = [
    0.0,
    -0.538_469_310_105_683,
    0.538_469_310_105_683,
    -0.906_179_845_938_664,
    0.906_179_845_938_664,
];
const GL_W: [f64; 5] = [
    0.568_888_888_888_889,
    0.478_628_670_499_366,
    0.478_628_670_499_366,
    0.236_926_885_056_189,
    0.236_926_885_056_189,
];

fn gauss<F: FnMut(f64) -> f64>(mut f: F, a: f64, b: f64, panels: usize) -> f64 {
    let h = (b - a) / panels as f64;
    let mut s = 0.0;
    for p in 0..panels {
        let mid = a + (p as f64 + 0.5) * h;
        for k in 0..5 {
            s += GL_W[k] * f(mid + 0.5 * h * GL_X[k]);
        }
    }
    0.5 * h * s
}

/// `int rho d^2 z` in polar coordinates between the hole and the outer border.
fn total_mass(model: &ModelSpec) -> f64 {
    let border = model.border();
    let inner = border.hole_radius().unwrap_or(0.0);
    gauss(
        |t| {
            let outer = border.outer_radius_at(t);
            gauss(
                |r| r * model.density(Complex::from_polar(r, t)).unwrap(),
                inner,
                outer,
                24,
            )
        },
        0.0,
        2.0 * PI,
        48,
    )
}

fn criterion_5() -> Outcome {
    let models = [
        ModelSpec::CUE_PLUS_CUE,
        ModelSpec::CueSum { m: 3, scale: 1.0 },
        ModelSpec::CueSum { m: 5, scale: 1.0 },
        ModelSpec::diffusion(10),
        ModelSpec::CueGue { p: 0.5 },
        ModelSpec::CueGue { p: 0.75 },
        ModelSpec::CueGue { p: 1.0 },
        ModelSpec::CueGue { p: 2.0 },
    ];
    let mut stream = GaussianStream::new(SEED, 0, 500);
    let mut pass = true;
    let mut parts = Vec::new();
    for model in models {
        let border = model.border();
        let (sx, sy) = border.semi_axes();
        let (mut worst, mut count) = (0.0f64, 0);
        while count < 200 {
            let z = c(sx * (2.0 * stream.uniform() - 1.0), sy * (2.0 * stream.uniform() - 1.0));
            let sol = model.solution(z).unwrap();
            if !sol.inside() || border_distance(&border, z) <= 0.05 {
                continue;
            }
            let fd = density_from_greens(|x, y| model.solution(c(x, y)).map(|s| s.greens), z.re, z.im, 1e-4).unwrap();
            worst = worst.max((fd.rho - sol.density).abs());
            count += 1;
        }
        let mass = total_mass(&model);
        let ok = worst <= 1e-6 && (mass - 1.0).abs() <= 1e-3;
        pass &= ok;
        parts.push(format!("{model}: fd err {worst:.1e}, mass {mass:.6}"));
    }
    Outcome {
        pass,
        detail: parts.join("; "),
    }
}

const INVARIANT_CASES: usize = 10_000;

struct Draw(GaussianStream);

impl Draw {
    fn u(&mut self) -> f64 {
        self.0.uniform()
    }

    /// Uniform in the square `[-1, 1]^2`.
    fn nz(&mut self) -> Complex {
        c(2.0 * self.u() - 1.0, 2.0 * self.u() - 1.0)
    }
}

fn criterion_6() -> Outcome {
    let mut rng = Draw(GaussianStream::new(SEED, 0, 600));
    let mut fails: Vec<String> = Vec::new();
    let mut check = |name: &str, bad: usize| {
        if bad > 0 {
            fails.push(format!("{name}: {bad} violations"));
        }
    };

    // unitary quadratic roots on the generic domain
    let mut bad = 0;
    let mut done = 0;
    while done < INVARIANT_CASES {
        let q = Quaternion::new(rng.nz() * 1.5, rng.nz() * 1.5);
        if (q.a.norm() - 1.0).powi(2) + q.b.norm_sqr() <= 1e-6 || q.a.norm() < 1e-6 {
            continue;
        }
        done += 1;
        let r = unitary_u_pair(&q).unwrap();
        if (r.u1.conj() * r.u2 - 1.0).norm() > 1e-12 || r.u1.norm() <= 1.0 || r.g * r.g - 4.0 * q.a.norm_sqr() < 0.0 {
            bad += 1;
        }
    }
    check("u-pair", bad);

    // quaternion algebra against explicit 2x2 matrices
    let mul2 = |x: [[Complex; 2]; 2], y: [[Complex; 2]; 2]| {
        let mut o = [[c(0.0, 0.0); 2]; 2];
        for i in 0..2 {
            for j in 0..2 {
                o[i][j] = x[i][0] * y[0][j] + x[i][1] * y[1][j];
            }
        }
        o
    };
    let diff2 = |x: [[Complex; 2]; 2], y: [[Complex; 2]; 2]| {
        (0..4).map(|k| (x[k / 2][k % 2] - y[k / 2][k % 2]).norm()).fold(0.0, f64::max)
    };
    let mut bad = 0;
    for _ in 0..INVARIANT_CASES {
        let (p, q) = (Quaternion::new(rng.nz(), rng.nz()), Quaternion::new(rng.nz(), rng.nz()));
        let (mp, mq) = (p.to_matrix(), q.to_matrix());
        let prod = diff2((p * q).to_matrix(), mul2(mp, mq));
        let det = (mp[0][0] * mp[1][1] - mp[0][1] * mp[1][0] - p.det()).norm();
        let inv = diff2(mul2(p.inverse().unwrap().to_matrix(), mp), Quaternion::IDENTITY.to_matrix());
        let adj = p.adjoint().to_matrix();
        let adj_err = (0..4)
            .map(|k| (adj[k / 2][k % 2] - mp[k % 2][k / 2].conj()).norm())
            .fold(0.0, f64::max);
        let sum = diff2((p + q).to_matrix(), [[mp[0][0] + mq[0][0], mp[0][1] + mq[0][1]], [mp[1][0] + mq[1][0], mp[1][1] + mq[1][1]]]);
        if prod > 1e-12 || det > 1e-12 || inv > 1e-10 || adj_err > 0.0 || sum > 1e-15 {
            bad += 1;
        }
    }
    check("quaternion algebra", bad);

    // Hermitization: diagonal quaternions reduce to the complex Green's functions
    let mut bad = 0;
    let mut done = 0;
    while done < INVARIANT_CASES {
        let z = rng.nz() * 3.0;
        if z.im.abs() < 1e-3 || (z.norm() - 1.0).abs() < 1e-3 {
            continue;
        }
        done += 1;
        let h = hermitian_quaternion_green(&GueGreens, &Quaternion::diag(z)).unwrap();
        let want_h = g_gue(z);
        let un = unitary_quaternion_green(&CueGreens, &Quaternion::diag(z)).unwrap();
        let want_u = g_cue(z).unwrap();
        if (h.a - want_h).norm() > 1e-12 * (1.0 + want_h.norm())
            || h.b.norm() > 0.0
            || (un.a - want_u).norm() > 1e-12 * (1.0 + want_u.norm())
            || un.b.norm() > 0.0
        {
            bad += 1;
        }
    }
    check("Hermitization", bad);

    // G(B(Q)) = Q for GUE
    let mut bad = 0;
    let mut done = 0;
    while done < INVARIANT_CASES {
        let q = Quaternion::new(rng.nz() * 0.6, Complex::from_polar(0.5 * rng.u(), 2.0 * PI * rng.u()));
        if q.eigenvalues().0.norm() >= 0.95 || q.det() <= 1e-3 {
            continue;
        }
        done += 1;
        let back = hermitian_quaternion_green(&GueGreens, &gue_quaternion_blue(&q, 1.0).unwrap()).unwrap();
        if back.max_abs_diff(&q) > 1e-9 {
            bad += 1;
        }
    }
    check("GUE round trip", bad);

    // G(B(Q)) = Q for CUE, targets drawn as Green's function values
    let mut bad = 0;
    let mut done = 0;
    while done < INVARIANT_CASES {
        let w = Quaternion::new(rng.nz() * 2.0, rng.nz() * 2.0);
        if (w.a.norm() - 1.0).powi(2) + w.b.norm_sqr() <= 1e-3 {
            continue;
        }
        done += 1;
        let target = cue_quaternion_green(&w).unwrap();
        let ok = cue_quaternion_blue(&target, None)
            .and_then(|b| cue_quaternion_green(&b))
            .is_ok_and(|back| back.max_abs_diff(&target) <= 1e-9);
        if !ok {
            bad += 1;
        }
    }
    check("CUE round trip", bad);

    Outcome {
        pass: fails.is_empty(),
        detail: if fails.is_empty() {
            format!("5 checks x {INVARIANT_CASES} inputs, no violations")
        } else {
            fails.join("; ")
        },
    }
}

fn criterion_7() -> Outcome {
    let model = ModelSpec::CUE_PLUS_CUE;
    let overlaps = sample_overlaps(&model, 200, 100, SEED).unwrap();
    let rep = overlap_compare(&overlaps, 200, &model, 10).unwrap();
    let integral_rel = (rep.total - rep.theory_total).abs() / rep.theory_total;

    let mut normal_worst = 0.0f64;
    for s in 0..10 {
        let u = sample_cue(200, &mut GaussianStream::new(SEED, s, 0));
        for (_, o) in overlap_correlator(&u).unwrap() {
            normal_worst = normal_worst.max((o - 1.0).abs());
        }
    }
    Outcome {
        pass: rep.l1_distance <= 0.1 && normal_worst <= 1e-8 && integral_rel <= 0.1,
        detail: format!(
            "l1 = {:.4} (<= 0.1), integral {:.4} vs {:.4} ({:.1}%), CUE max |O-1| = {normal_worst:.1e}",
            rep.l1_distance,
            rep.total,
            rep.theory_total,
            100.0 * integral_rel
        ),
    }
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Outcome); 7] = [
        ("1 CUE+CUE radial density", criterion_1),
        ("2 M-CUE border and origin density", criterion_2),
        ("3 CUE+pGUE ellipse and hole", criterion_3),
        ("4 Newton vs closed forms", criterion_4),
        ("5 density self-consistency", criterion_5),
        ("6 structural invariants", criterion_6),
        ("7 eigenvector overlaps", criterion_7),
    ];
    let filter: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let mut failed = 0;
    for (name, run) in criteria {
        if !filter.is_empty() && !filter.iter().any(|f| name.starts_with(f.as_str())) {
            continue;
        }
        let start = Instant::now();
        let out = run();
        if !out.pass {
            failed += 1;
        }
        println!(
            "criterion {name}: {} ({:.1}s) {}",
            if out.pass { "PASS" } else { "FAIL" },
            start.elapsed().as_secs_f64(),
            out.detail
        );
    }
    if failed > 0 {
        println!("{failed} criteria failed");
        ExitCode::FAILURE
    } else {
        ExitCode::SUCCESS
    }
}
