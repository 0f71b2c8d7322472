//! Cross-checks against independent reference computations: quadrature for
//! the complete integral, Fourier series for the theta functions, descending
//! Landen transformations for `sn`, and an explicit index sum for the row
//! transfer matrix.

use std::f64::consts::PI;

use num_complex::Complex64 as C64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use vertex_sheaf::elliptic::{complementary_elliptic_k, complete_elliptic_k, ThetaParams};
use vertex_sheaf::operators::{lax_asym_even, lax_asym_odd, LaxOperator};
use vertex_sheaf::transfer::{chain_transfer, partition_enumerate, partition_trace, LatticeSpec, Model};
use vertex_sheaf::weights::{random_weights, Parity};
use vertex_sheaf::SquareMatrix;

#[allow(clippy::too_many_arguments)]
fn simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, fa: f64, fm: f64, fb: f64, whole: f64, tol: f64, depth: u32) -> f64 {
    let m = 0.5 * (a + b);
    let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
    let (flm, frm) = (f(lm), f(rm));
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    if depth == 0 || (left + right - whole).abs() <= 15.0 * tol {
        return left + right + (left + right - whole) / 15.0;
    }
    simpson(f, a, m, fa, flm, fm, left, tol / 2.0, depth - 1) + simpson(f, m, b, fm, frm, fb, right, tol / 2.0, depth - 1)
}

fn integrate(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    let (fa, fm, fb) = (f(a), f(0.5 * (a + b)), f(b));
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    simpson(f, a, b, fa, fm, fb, whole, tol, 50)
}

fn k_by_quadrature(k: f64) -> f64 {
    integrate(&|t: f64| 1.0 / (1.0 - k * k * t.sin().powi(2)).sqrt(), 0.0, PI / 2.0, 1e-14)
}

#[test]
fn complete_integral_matches_quadrature() {
    for k in [0.1, 0.3, 0.5, 0.7, 0.9] {
        let reference = k_by_quadrature(k);
        let value = complete_elliptic_k(k).unwrap();
        assert!((value - reference).abs() < 1e-12 * reference, "k={k}: {value} vs {reference}");
        let kp = (1.0 - k * k).sqrt();
        let reference = k_by_quadrature(kp);
        let value = complementary_elliptic_k(k).unwrap();
        assert!((value - reference).abs() < 1e-12 * reference, "k'={kp}");
    }
}

/// `sn(u | k)` by descending Landen / AGM recursion on real `u`.
fn sn_landen(u: f64, k: f64) -> f64 {
    let (mut a, mut b, mut c) = (1.0f64, (1.0 - k * k).sqrt(), k);
    let mut cs = vec![c];
    let mut as_ = vec![a];
    while c.abs() > 1e-16 {
        let (an, bn) = (0.5 * (a + b), (a * b).sqrt());
        c = 0.5 * (a - b);
        a = an;
        b = bn;
        cs.push(c);
        as_.push(a);
    }
    let n = cs.len() - 1;
    let mut phi = 2f64.powi(n as i32) * as_[n] * u;
    for j in (1..=n).rev() {
        phi = 0.5 * (phi + (cs[j] / as_[j] * phi.sin()).asin());
    }
    phi.sin()
}

#[test]
fn sn_matches_landen_recursion() {
    for k in [0.2, 0.5, 0.8] {
        let p = ThetaParams::new(k).unwrap();
        for frac in [0.05, 0.3, 0.61, 0.9, 1.0, 1.4] {
            let u = frac * p.quarter_period;
            let got = p.sn(C64::new(u, 0.0)).unwrap();
            let want = sn_landen(u, k);
            assert!((got.re - want).abs() < 1e-12 && got.im.abs() < 1e-14, "k={k} u={u}: {got} vs {want}");
        }
        assert!((sn_landen(p.quarter_period, k) - 1.0).abs() < 1e-12);
    }
}

fn theta_series(p: &ThetaParams, u: C64) -> (C64, C64) {
    let v = u * (PI / (2.0 * p.quarter_period));
    let q = p.nome;
    let (mut h, mut th) = (C64::new(0.0, 0.0), C64::new(1.0, 0.0));
    for n in 0..60 {
        let sign = if n % 2 == 0 { 1.0 } else { -1.0 };
        let half = n as f64 + 0.5;
        h += (v * (2.0 * half)).sin() * (2.0 * sign * q.powf(half * half));
        let m = (n + 1) as f64;
        th += (v * (2.0 * m)).cos() * (-2.0 * sign * q.powf(m * m));
    }
    (h, th)
}

#[test]
fn theta_products_match_fourier_series() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for k in [0.1, 0.5, 0.9] {
        let p = ThetaParams::new(k).unwrap();
        for _ in 0..25 {
            let u = C64::new(rng.random_range(-3.0..3.0) * p.quarter_period, rng.random_range(-0.9..0.9) * p.complementary_quarter_period);
            let (h, th) = theta_series(&p, u);
            let scale = h.norm().max(th.norm()).max(1.0);
            assert!((p.h(u).unwrap() - h).norm() < 1e-12 * scale, "H at {u}");
            assert!((p.theta(u).unwrap() - th).norm() < 1e-12 * scale, "Θ at {u}");
        }
    }
}

#[test]
fn nome_matches_quadrature_periods() {
    for k in [0.3f64, 0.5, 0.8] {
        let q = (-PI * k_by_quadrature((1.0 - k * k).sqrt()) / k_by_quadrature(k)).exp();
        assert!((ThetaParams::new(k).unwrap().nome - q).abs() < 1e-13);
    }
}

/// `T[s, s'] = Σ_a Π_j L_j[2a_j + s_j, 2a_{j+1} + s'_j]` with `a_N = a_0`.
fn transfer_by_index_sum(ops: &[LaxOperator]) -> SquareMatrix {
    let n = ops.len();
    let dim = 1usize << n;
    let bit = |x: usize, j: usize| (x >> (n - 1 - j)) & 1;
    let mut t = SquareMatrix::zeros(dim);
    for s in 0..dim {
        for sp in 0..dim {
            let mut total = C64::new(0.0, 0.0);
            for aux in 0..dim {
                let mut prod = C64::new(1.0, 0.0);
                for (j, op) in ops.iter().enumerate() {
                    let a = bit(aux, j);
                    let a_next = bit(aux, (j + 1) % n);
                    prod *= op.matrix().get(2 * a + bit(s, j), 2 * a_next + bit(sp, j));
                }
                total += prod;
            }
            t.set(s, sp, total);
        }
    }
    t
}

#[test]
fn chain_transfer_matches_index_sum() {
    for n in 1..=5 {
        let ops: Vec<LaxOperator> = (0..n)
            .map(|j| {
                let w = random_weights(100 + j as u64, Parity::Even);
                if j % 2 == 0 {
                    lax_asym_even(&w).unwrap()
                } else {
                    lax_asym_odd(&w.with_parity(Parity::Odd)).unwrap()
                }
            })
            .collect();
        let refs: Vec<&LaxOperator> = ops.iter().collect();
        let fast = chain_transfer(&refs).unwrap();
        let slow = transfer_by_index_sum(&ops);
        assert!(fast.max_abs_diff(&slow).unwrap() < 1e-13 * slow.max_abs().max(1.0), "n={n}");
    }
}

#[test]
fn trace_and_enumeration_agree_on_all_small_lattices() {
    for (rows, cols) in [(1, 1), (1, 2), (2, 1), (2, 2), (2, 3), (3, 2), (3, 3), (2, 4), (4, 2)] {
        let lattice = LatticeSpec::new(rows, cols).unwrap();
        for parity in Parity::ALL {
            for seed in 0..3 {
                let model = Model::Uniform(random_weights(seed, parity));
                let t = partition_trace(&model, &lattice).unwrap();
                let e = partition_enumerate(&model, &lattice).unwrap();
                let scale = t.norm().max(e.norm());
                if scale == 0.0 {
                    continue;
                }
                assert!((t - e).norm() < 1e-11 * scale, "{rows}x{cols} {parity:?}: {t} vs {e}");
            }
        }
    }
}
