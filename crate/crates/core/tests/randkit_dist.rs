use covmis::gof::{ks_one_sample, ks_two_sample};
use covmis::matkit::{chol, CMatrix};
use covmis::randkit::{
    beta_cdf, cf1_survival, sample_cchi2, sample_cf, sample_cwishart, standard_cnormal, StreamKey,
};
use covmis::Complex64;
use rand::Rng;
use rand_distr::{Distribution, Gamma};

fn mean_var(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let m = xs.iter().sum::<f64>() / n;
    (
        m,
        xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0),
    )
}

#[test]
fn complex_normal_is_circular_with_unit_power() {
    let mut rng = StreamKey::new(1).stream();
    let z: Vec<Complex64> = (0..200_000).map(|_| standard_cnormal(&mut rng)).collect();
    let n = z.len() as f64;
    let power = z.iter().map(|v| v.norm_sqr()).sum::<f64>() / n;
    let pseudo: Complex64 = z.iter().map(|v| v * v).sum::<Complex64>() / n;
    assert!((power - 1.0).abs() < 0.01, "{power}");
    assert!(pseudo.norm() < 0.01, "{pseudo}");
}

#[test]
fn chi_square_moments() {
    let mut rng = StreamKey::new(2).stream();
    for (p, delta) in [(1u32, 0.0), (4, 0.0), (1, 3.0), (17, 2.5)] {
        let xs: Vec<f64> = (0..200_000)
            .map(|_| sample_cchi2(&mut rng, p, delta).unwrap())
            .collect();
        let (m, v) = mean_var(&xs);
        let (em, ev) = (p as f64 + delta, p as f64 + 2.0 * delta);
        assert!(
            (m - em).abs() < 0.02 * em.max(1.0),
            "p={p} delta={delta}: mean {m} vs {em}"
        );
        assert!(
            (v - ev).abs() < 0.05 * ev,
            "p={p} delta={delta}: var {v} vs {ev}"
        );
    }
}

#[test]
fn gamma_identity_sum_of_unit_draws() {
    let mut rng = StreamKey::new(3).stream();
    let p = 5u32;
    let a: Vec<f64> = (0..100_000)
        .map(|_| sample_cchi2(&mut rng, p, 0.0).unwrap())
        .collect();
    let b: Vec<f64> = (0..100_000)
        .map(|_| {
            (0..p)
                .map(|_| sample_cchi2(&mut rng, 1, 0.0).unwrap())
                .sum()
        })
        .collect();
    assert!(ks_two_sample(&a, &b) < 0.01);
    let g = Gamma::new(p as f64, 1.0).unwrap();
    let c: Vec<f64> = (0..100_000).map(|_| g.sample(&mut rng)).collect();
    assert!(ks_two_sample(&a, &c) < 0.01);
}

#[test]
fn cf1_survival_matches_simulation() {
    let mut rng = StreamKey::new(4).stream();
    let q = 17;
    let n = 400_000;
    let xs: Vec<f64> = (0..n)
        .map(|_| sample_cf(&mut rng, 1, q, 0.0).unwrap())
        .collect();
    for t in [0.01, 0.05, 0.1, 0.2, 0.3, 0.5] {
        let p = cf1_survival(t, q);
        let emp = xs.iter().filter(|&&x| x > t).count() as f64 / n as f64;
        let sigma = (p * (1.0 - p) / n as f64).sqrt();
        assert!((emp - p).abs() < 3.0 * sigma, "t={t}: {emp} vs {p}");
    }
    assert!(ks_one_sample(&xs, |t| 1.0 - cf1_survival(t, q)) < 0.005);
    // Mean of CF(1, q) is 1/(q − 1).
    let (m, _) = mean_var(&xs);
    assert!((m - 1.0 / 16.0).abs() < 0.002, "{m}");
}

#[test]
fn beta_from_gamma_ratio() {
    // (1 + Cχ²_b / Cχ²_a)⁻¹ ~ Beta(a, b).
    let mut rng = StreamKey::new(5).stream();
    let (a, b) = (18u32, 15u32);
    let xs: Vec<f64> = (0..100_000)
        .map(|_| {
            let u = sample_cchi2(&mut rng, b, 0.0).unwrap();
            let v = sample_cchi2(&mut rng, a, 0.0).unwrap();
            1.0 / (1.0 + u / v)
        })
        .collect();
    let d = ks_one_sample(&xs, |x| beta_cdf(a as f64, b as f64, x).unwrap());
    assert!(d < 0.006, "{d}");
}

#[test]
fn sibling_streams_are_uncorrelated() {
    let root = StreamKey::new(6);
    let (mut r0, mut r1) = (root.child(0).stream(), root.child(1).stream());
    let n = 100_000;
    let a: Vec<f64> = (0..n).map(|_| r0.random::<f64>()).collect();
    let b: Vec<f64> = (0..n).map(|_| r1.random::<f64>()).collect();
    let (ma, va) = mean_var(&a);
    let (mb, vb) = mean_var(&b);
    let cov = a
        .iter()
        .zip(&b)
        .map(|(x, y)| (x - ma) * (y - mb))
        .sum::<f64>()
        / (n as f64 - 1.0);
    assert!((cov / (va * vb).sqrt()).abs() < 0.01);
}

#[test]
fn wishart_mean_is_dof_times_scale() {
    let mut rng = StreamKey::new(7).stream();
    let s = CMatrix::from_fn(3, 3, |i, j| {
        if i == j {
            Complex64::new(2.0 + i as f64, 0.0)
        } else if i > j {
            Complex64::new(0.3, 0.2)
        } else {
            Complex64::new(0.3, -0.2)
        }
    });
    let l = chol(&s).unwrap();
    let (k, reps) = (6usize, 20_000);
    let mut acc = CMatrix::zeros(3, 3);
    for _ in 0..reps {
        acc = acc.add(&sample_cwishart(&mut rng, k, &l).unwrap());
    }
    let mean = acc.scale(1.0 / reps as f64);
    let expected = s.scale(k as f64);
    let rel = mean.sub(&expected).frobenius_norm() / expected.frobenius_norm();
    assert!(rel < 0.02, "{rel}");
}
