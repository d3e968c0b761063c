//! Independent oracles for the GP posterior and the benchmark optima.

use hubo_core::benchmarks::{hartmann3, hartmann6};
use hubo_core::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Gauss-Jordan inverse with partial pivoting.
fn dense_inverse(a: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let n = a.len();
    let mut m: Vec<Vec<f64>> = a
        .iter()
        .enumerate()
        .map(|(i, row)| {
            let mut r = row.clone();
            r.extend((0..n).map(|j| if i == j { 1.0 } else { 0.0 }));
            r
        })
        .collect();
    for col in 0..n {
        let piv = (col..n)
            .max_by(|&i, &j| m[i][col].abs().total_cmp(&m[j][col].abs()))
            .unwrap();
        m.swap(col, piv);
        let p = m[col][col];
        for v in &mut m[col] {
            *v /= p;
        }
        let pivot = m[col].clone();
        for (r, row) in m.iter_mut().enumerate() {
            let f = row[col];
            if r != col && f != 0.0 {
                row.iter_mut().zip(&pivot).for_each(|(v, p)| *v -= f * p);
            }
        }
    }
    m.into_iter().map(|r| r[n..].to_vec()).collect()
}

fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(1e-300)
}

#[test]
fn posterior_matches_dense_inverse() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut worst: f64 = 0.0;
    for _ in 0..200 {
        let d = rng.random_range(1..=6usize);
        let n = rng.random_range(1..=20usize);
        let family = if rng.random::<bool>() {
            KernelFamily::SquaredExponential
        } else {
            KernelFamily::Matern52
        };
        let ell = rng.random_range(0.3..2.0);
        let sf2 = rng.random_range(0.5..3.0);
        let sn2 = sf2 * rng.random_range(1e-2..1e-1);
        let mean0 = rng.random_range(-1.0..1.0);
        let kernel = KernelSpec::new(family, ell, sf2).unwrap();
        let model = GpModel::new(kernel, sn2, mean0).unwrap();
        let mut data = Dataset::new(d);
        for _ in 0..n {
            let x: Vec<f64> = (0..d).map(|_| rng.random_range(-2.0..2.0)).collect();
            data.push(x, rng.random_range(-3.0..3.0)).unwrap();
        }
        let k: Vec<Vec<f64>> = (0..n)
            .map(|i| {
                (0..n)
                    .map(|j| {
                        let v = kernel.eval(&data.points()[i], &data.points()[j]).unwrap();
                        if i == j {
                            v + sn2
                        } else {
                            v
                        }
                    })
                    .collect()
            })
            .collect();
        let kinv = dense_inverse(&k);
        let post = Posterior::new(model, &data).unwrap();
        for _ in 0..5 {
            let x: Vec<f64> = (0..d).map(|_| rng.random_range(-2.5..2.5)).collect();
            let ks: Vec<f64> = data
                .points()
                .iter()
                .map(|p| kernel.eval(&x, p).unwrap())
                .collect();
            let resid: Vec<f64> = data.targets().iter().map(|y| y - mean0).collect();
            let mut mean = mean0;
            let mut var = kernel.eval(&x, &x).unwrap();
            for i in 0..n {
                for j in 0..n {
                    mean += ks[i] * kinv[i][j] * resid[j];
                    var -= ks[i] * kinv[i][j] * ks[j];
                }
            }
            let (m, v) = post.predict(&x).unwrap();
            worst = worst.max(rel_err(m, mean)).max(rel_err(v, var));
        }
    }
    assert!(worst <= 1e-8, "worst relative error {worst:e}");
}

fn compass_minimise(f: fn(&[f64]) -> f64, mut x: Vec<f64>) -> (Vec<f64>, f64) {
    let mut fx = f(&x);
    let mut step = 0.1;
    while step > 1e-13 {
        let mut improved = false;
        for k in 0..x.len() {
            for dir in [-1.0, 1.0] {
                let mut y = x.clone();
                y[k] = (y[k] + dir * step).clamp(0.0, 1.0);
                let fy = f(&y);
                if fy < fx {
                    x = y;
                    fx = fy;
                    improved = true;
                }
            }
        }
        if !improved {
            step *= 0.5;
        }
    }
    (x, fx)
}

fn multistart(f: fn(&[f64]) -> f64, d: usize, seed: u64) -> (Vec<f64>, f64) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..100)
        .map(|_| compass_minimise(f, (0..d).map(|_| rng.random::<f64>()).collect()))
        .min_by(|a, b| a.1.total_cmp(&b.1))
        .unwrap()
}

#[test]
fn hartmann_optima_match_multistart_search() {
    for (name, f, d, published) in [
        ("hartmann3", hartmann3 as fn(&[f64]) -> f64, 3, 3.86278),
        ("hartmann6", hartmann6 as fn(&[f64]) -> f64, 6, 3.32237),
    ] {
        let bench = make_benchmark(name, None).unwrap();
        let (x, fmin) = multistart(f, d, 5);
        assert!(
            (-fmin - bench.optimum_value).abs() < 1e-9,
            "{name}: {} vs {}",
            -fmin,
            bench.optimum_value
        );
        assert!((bench.optimum_value - published).abs() < 1e-5, "{name}");
        let gap: f64 = x
            .iter()
            .zip(&bench.optimum_point)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        assert!(gap < 1e-4, "{name}: argmax differs by {gap}");
        assert!((bench.eval(&bench.optimum_point) - bench.optimum_value).abs() < 1e-9);
    }
}

/// The chance that 10^4 uniform draws over the canonical 2-D Ackley domain
/// land within 1.0 of the optimum follows from the area of that basin, which
/// a midpoint grid estimates independently.
#[test]
fn ackley_random_search_hit_rate_matches_basin_area() {
    let bench = make_benchmark("ackley", Some(2)).unwrap();
    let n = 1000;
    let mut inside = 0u64;
    for i in 0..n {
        for j in 0..n {
            let x = [
                -1.0 + 2.0 * (i as f64 + 0.5) / n as f64,
                -1.0 + 2.0 * (j as f64 + 0.5) / n as f64,
            ];
            if bench.eval(&x) > -1.0 {
                inside += 1;
            }
        }
    }
    let area = inside as f64 * 4.0 / (n * n) as f64;
    let p = area / (bench.upper - bench.lower).powi(2);
    let q = 1.0 - (1.0 - p).powi(10_000);

    let obj = bench.objective(0.0);
    let seeds = 200u64;
    let mut hits = 0u64;
    for seed in 0..seeds {
        let trace = random_search(&obj, &bench.domain(), 10_000, seed).unwrap();
        assert_eq!(trace.len(), 10_000);
        let best = trace.final_best_y().unwrap();
        assert!(best <= 1e-9);
        hits += u64::from(best > -1.0);
    }
    let expected = q * seeds as f64;
    let sd = (seeds as f64 * q * (1.0 - q)).sqrt();
    assert!(
        (hits as f64 - expected).abs() <= 4.0 * sd,
        "hits {hits}, expected {expected:.1} +- {sd:.1}"
    );
}
