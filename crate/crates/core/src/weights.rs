//! Vertex weights, their symmetric reduction, and the manifold invariants.
//!
//! Eight-weight vectors are indexed `1..=8` in the order of the vertex
//! pictures; in Rust storage that is `w[0..8]`.

use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Even or odd number of incoming arrows at every vertex.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Parity {
    Even,
    Odd,
}

impl Parity {
    pub fn flip(self) -> Self {
        match self {
            Parity::Even => Parity::Odd,
            Parity::Odd => Parity::Even,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Parity::Even => "even",
            Parity::Odd => "odd",
        }
    }

    pub const ALL: [Parity; 2] = [Parity::Even, Parity::Odd];
}

impl fmt::Display for Parity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Parity::Even => "ev",
            Parity::Odd => "od",
        })
    }
}

impl std::str::FromStr for Parity {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "ev" | "even" => Ok(Parity::Even),
            "od" | "odd" => Ok(Parity::Odd),
            other => Err(Error::InvalidInput(format!("unknown parity `{other}`"))),
        }
    }
}

/// Eight energy weights of one vertex family.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WeightsEight {
    #[serde(rename = "weights")]
    pub w: [f64; 8],
    pub parity: Parity,
}

impl WeightsEight {
    pub fn new(w: [f64; 8], parity: Parity) -> Result<Self> {
        if !w.iter().all(|x| x.is_finite()) {
            return Err(Error::NonFinite);
        }
        Ok(Self { w, parity })
    }

    pub fn from_slice(w: &[f64], parity: Parity) -> Result<Self> {
        let w: [f64; 8] = w
            .try_into()
            .map_err(|_| Error::DimensionMismatch { expected: 8, found: w.len() })?;
        Self::new(w, parity)
    }

    /// Weight `w_i` with the 1-based label used in the vertex pictures.
    pub fn get(&self, label: usize) -> f64 {
        self.w[label - 1]
    }

    pub fn with_parity(self, parity: Parity) -> Self {
        Self { parity, ..self }
    }

    pub fn scaled(&self, t: f64) -> Self {
        Self { w: self.w.map(|x| x * t), parity: self.parity }
    }

    pub fn max_abs(&self) -> f64 {
        self.w.iter().fold(0.0, |m, x| m.max(x.abs()))
    }

    pub fn is_symmetric(&self) -> bool {
        self.w[0] == self.w[1] && self.w[2] == self.w[3] && self.w[4] == self.w[5] && self.w[6] == self.w[7]
    }
}

/// Arrow-reversal symmetric weights `(a, b, c, d)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WeightsSym {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub d: f64,
    pub parity: Parity,
}

impl WeightsSym {
    pub fn new(a: f64, b: f64, c: f64, d: f64, parity: Parity) -> Self {
        Self { a, b, c, d, parity }
    }

    pub fn as_array(&self) -> [f64; 4] {
        [self.a, self.b, self.c, self.d]
    }

    pub fn with_parity(self, parity: Parity) -> Self {
        Self { parity, ..self }
    }

    pub fn scaled(&self, t: f64) -> Self {
        Self::new(self.a * t, self.b * t, self.c * t, self.d * t, self.parity)
    }
}

/// `(a, b, c, d) ↦ (a, a, b, b, c, c, d, d)`.
pub fn to_eight(ws: &WeightsSym) -> WeightsEight {
    WeightsEight { w: [ws.a, ws.a, ws.b, ws.b, ws.c, ws.c, ws.d, ws.d], parity: ws.parity }
}

/// Inverse of [`to_eight`]; fails unless the weights come in equal pairs.
pub fn symmetrize(w: &WeightsEight) -> Result<WeightsSym> {
    if !w.is_symmetric() {
        return Err(Error::InvalidInput("weights are not arrow-reversal symmetric".into()));
    }
    Ok(WeightsSym::new(w.w[0], w.w[2], w.w[4], w.w[6], w.parity))
}

/// `Γ = (ab − cd)/(ab + cd)` and `Δ = (a² + b² − c² − d²)/(2(ab + cd))`.
pub fn baxter_invariants(ws: &WeightsSym) -> Result<(f64, f64)> {
    let WeightsSym { a, b, c, d, .. } = *ws;
    let denom = a * b + c * d;
    if denom == 0.0 {
        return Err(Error::UndefinedInvariant("ab + cd"));
    }
    Ok(((a * b - c * d) / denom, (a * a + b * b - c * c - d * d) / (2.0 * denom)))
}

/// `w₁w₂ + w₃w₄ − w₅w₆ − w₇w₈`.
pub fn free_fermion_residual(w: &WeightsEight) -> f64 {
    let w = &w.w;
    w[0] * w[1] + w[2] * w[3] - w[4] * w[5] - w[6] * w[7]
}

/// `(Δ₁, Δ₂, Δ₃) = (w₆w₈, w₁w₄ + w₂w₃, w₁² + w₄² − w₂² − w₃²) / (w₅w₇)`.
pub fn krinsky_invariants(w: &WeightsEight) -> Result<[f64; 3]> {
    let w = &w.w;
    let denom = w[4] * w[6];
    if denom == 0.0 {
        return Err(Error::UndefinedInvariant("w5·w7"));
    }
    Ok([
        w[5] * w[7] / denom,
        (w[0] * w[3] + w[1] * w[2]) / denom,
        (w[0] * w[0] + w[3] * w[3] - w[1] * w[1] - w[2] * w[2]) / denom,
    ])
}

/// Index permutation carrying sublattice-X weights to sublattice-Y weights
/// in the staggered equivalences: `(w₃, w₄, w₁, w₂, w₈, w₇, w₆, w₅)`.
pub const COMPANION_ORDER: [usize; 8] = [2, 3, 0, 1, 7, 6, 5, 4];

/// Sublattice-Y weights of the opposite-parity staggered model.
pub fn staggered_companion(w: &WeightsEight) -> WeightsEight {
    WeightsEight { w: COMPANION_ORDER.map(|i| w.w[i]), parity: w.parity.flip() }
}

/// `(a, b, c, d) ↦ (c, d, a, b)` with the parity flipped.
pub fn ev_od_swap(ws: &WeightsSym) -> WeightsSym {
    WeightsSym::new(ws.c, ws.d, ws.a, ws.b, ws.parity.flip())
}

/// Summary of which integrable manifolds a weight point sits on.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ManifoldReport {
    pub gamma: Option<f64>,
    pub delta: Option<f64>,
    pub ff_residual: f64,
    pub krinsky: Option<[f64; 3]>,
}

impl ManifoldReport {
    pub fn from_sym(ws: &WeightsSym) -> Self {
        let (gamma, delta) = match baxter_invariants(ws) {
            Ok((g, d)) => (Some(g), Some(d)),
            Err(_) => (None, None),
        };
        let eight = to_eight(ws);
        Self {
            gamma,
            delta,
            ff_residual: free_fermion_residual(&eight),
            krinsky: krinsky_invariants(&eight).ok(),
        }
    }

    /// Γ and Δ are reported only for symmetric input.
    pub fn from_eight(w: &WeightsEight) -> Self {
        match symmetrize(w) {
            Ok(ws) => Self::from_sym(&ws),
            Err(_) => Self {
                gamma: None,
                delta: None,
                ff_residual: free_fermion_residual(w),
                krinsky: krinsky_invariants(w).ok(),
            },
        }
    }
}

const SAMPLER_RESTARTS: usize = 20;
const NEWTON_MAX_ITER: usize = 100;
const NEWTON_TOL: f64 = 1e-14;
const FREE_FERMION_TOL: f64 = 1e-10;
const KRINSKY_TOL: f64 = 1e-9;
const DISTINCT_TOL: f64 = 1e-3;

/// Eight weights drawn uniformly from `[0.5, 1.5)`, deterministic in `seed`.
pub fn random_weights(seed: u64, parity: Parity) -> WeightsEight {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut w = [0.0; 8];
    for x in w.iter_mut() {
        *x = uniform(&mut rng);
    }
    WeightsEight { w, parity }
}

/// Symmetric weights `(a, b, c, d)` drawn uniformly from `[0.5, 1.5)`.
pub fn random_symmetric(seed: u64, parity: Parity) -> WeightsSym {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut draw = || uniform(&mut rng);
    WeightsSym::new(draw(), draw(), draw(), draw(), parity)
}

fn uniform(rng: &mut ChaCha8Rng) -> f64 {
    rng.random_range(0.5..1.5)
}

fn random_free_fermion_point(rng: &mut ChaCha8Rng) -> [f64; 8] {
    loop {
        let mut w = [0.0; 8];
        for x in w.iter_mut() {
            *x = uniform(rng);
        }
        w[1] = (w[4] * w[5] + w[6] * w[7] - w[2] * w[3]) / w[0];
        if w[1] > 0.1 {
            return w;
        }
    }
}

/// Solves `J·x = rhs` for a 3×3 system by partial-pivoting elimination.
fn solve3(mut j: [[f64; 3]; 3], mut rhs: [f64; 3]) -> Option<[f64; 3]> {
    for col in 0..3 {
        let pivot = (col..3).max_by(|&a, &b| j[a][col].abs().total_cmp(&j[b][col].abs()))?;
        if j[pivot][col].abs() < 1e-300 {
            return None;
        }
        j.swap(col, pivot);
        rhs.swap(col, pivot);
        for row in col + 1..3 {
            let f = j[row][col] / j[col][col];
            let pivot_row = j[col];
            for (dst, src) in j[row][col..].iter_mut().zip(&pivot_row[col..]) {
                *dst -= f * src;
            }
            rhs[row] -= f * rhs[col];
        }
    }
    let mut x = [0.0; 3];
    for row in (0..3).rev() {
        let s: f64 = (row + 1..3).map(|k| j[row][k] * x[k]).sum();
        x[row] = (rhs[row] - s) / j[row][row];
    }
    x.iter().all(|v| v.is_finite()).then_some(x)
}

fn max_abs3(v: [f64; 3]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

/// Damped Newton with a central-difference Jacobian.
fn damped_newton(f: impl Fn([f64; 3]) -> [f64; 3], mut x: [f64; 3]) -> Option<[f64; 3]> {
    let mut fx = f(x);
    for _ in 0..NEWTON_MAX_ITER {
        if max_abs3(fx) < NEWTON_TOL {
            return Some(x);
        }
        let mut jac = [[0.0; 3]; 3];
        for k in 0..3 {
            let h = 1e-7 * x[k].abs().max(1.0);
            let (mut xp, mut xm) = (x, x);
            xp[k] += h;
            xm[k] -= h;
            let (fp, fm) = (f(xp), f(xm));
            for r in 0..3 {
                jac[r][k] = (fp[r] - fm[r]) / (2.0 * h);
            }
        }
        let step = solve3(jac, fx.map(|v| -v))?;
        let norm0 = max_abs3(fx);
        let mut t = 1.0;
        loop {
            let trial = [x[0] + t * step[0], x[1] + t * step[1], x[2] + t * step[2]];
            let ft = f(trial);
            if max_abs3(ft) < norm0 || t < 1e-6 {
                x = trial;
                fx = ft;
                break;
            }
            t *= 0.5;
        }
    }
    (max_abs3(fx) < NEWTON_TOL).then_some(x)
}

/// Two distinct real weight points sharing the free-fermion condition and the
/// same Krinsky invariants `(Δ₁, Δ₂, Δ₃)`. Deterministic in `seed`; both points
/// carry even parity.
pub fn sample_krinsky_pair(seed: u64) -> Result<(WeightsEight, WeightsEight)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let first = WeightsEight::new(random_free_fermion_point(&mut rng), Parity::Even)?;
    let [delta1, delta2, delta3] = krinsky_invariants(&first)?;

    for _ in 0..SAMPLER_RESTARTS {
        let (w5, w7) = (uniform(&mut rng), uniform(&mut rng));
        let ratio = uniform(&mut rng);
        let product = delta1 * w5 * w7;
        if product <= 0.0 {
            continue;
        }
        let w6 = (product * ratio).sqrt();
        let w8 = product / w6;
        let w4 = uniform(&mut rng);
        let denom = w5 * w7;

        let equations = |x: [f64; 3]| {
            let [w1, w2, w3] = x;
            [
                w1 * w2 + w3 * w4 - w5 * w6 - w7 * w8,
                w1 * w4 + w2 * w3 - delta2 * denom,
                w1 * w1 + w4 * w4 - w2 * w2 - w3 * w3 - delta3 * denom,
            ]
        };
        let start = [uniform(&mut rng), uniform(&mut rng), uniform(&mut rng)];
        let Some([w1, w2, w3]) = damped_newton(equations, start) else {
            continue;
        };
        let second = WeightsEight::new([w1, w2, w3, w4, w5, w6, w7, w8], Parity::Even)?;
        if accept_pair(&first, &second) {
            return Ok((first, second));
        }
    }
    Err(Error::SamplerFailed(SAMPLER_RESTARTS))
}

fn accept_pair(first: &WeightsEight, second: &WeightsEight) -> bool {
    let (Ok(k1), Ok(k2)) = (krinsky_invariants(first), krinsky_invariants(second)) else {
        return false;
    };
    let on_ff = free_fermion_residual(first).abs() < FREE_FERMION_TOL
        && free_fermion_residual(second).abs() < FREE_FERMION_TOL;
    let same_invariants = k1.iter().zip(&k2).all(|(a, b)| (a - b).abs() < KRINSKY_TOL);
    let distinct = first.w.iter().zip(&second.w).any(|(a, b)| (a - b).abs() > DISTINCT_TOL);
    on_ff && same_invariants && distinct
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sym(a: f64, b: f64, c: f64, d: f64) -> WeightsSym {
        WeightsSym::new(a, b, c, d, Parity::Even)
    }

    fn eight(w: [f64; 8]) -> WeightsEight {
        WeightsEight::new(w, Parity::Even).unwrap()
    }

    #[test]
    fn to_eight_duplicates_pairs() {
        let w = to_eight(&sym(1.0, 2.0, 3.0, 4.0));
        assert_eq!(w.w, [1.0, 1.0, 2.0, 2.0, 3.0, 3.0, 4.0, 4.0]);
        let odd = to_eight(&sym(1.0, 2.0, 3.0, 4.0).with_parity(Parity::Odd));
        assert_eq!(odd.parity, Parity::Odd);
    }

    #[test]
    fn symmetrize_round_trip_and_rejection() {
        let ws = sym(0.3, -1.2, 2.0, 0.7).with_parity(Parity::Odd);
        assert_eq!(symmetrize(&to_eight(&ws)).unwrap(), ws);
        assert!(symmetrize(&eight([1.0, 2.0, 3.0, 3.0, 4.0, 4.0, 5.0, 5.0])).is_err());
    }

    #[test]
    fn baxter_invariant_examples() {
        assert_eq!(baxter_invariants(&sym(1.0, 1.0, 1.0, 1.0)).unwrap(), (0.0, 0.0));
        let (g, d) = baxter_invariants(&sym(2.0, 1.0, 1.0, 1.0)).unwrap();
        assert!((g - 1.0 / 3.0).abs() < 1e-15 && (d - 0.5).abs() < 1e-15);
        assert_eq!(
            baxter_invariants(&sym(1.0, 1.0, 1.0, -1.0)),
            Err(Error::UndefinedInvariant("ab + cd"))
        );
    }

    #[test]
    fn invariants_respect_pair_exchange_and_scaling() {
        let ws = sym(0.4, 1.3, 0.8, 0.25);
        let base = baxter_invariants(&ws).unwrap();
        assert_eq!(baxter_invariants(&sym(ws.b, ws.a, ws.d, ws.c)).unwrap(), base);
        let (g, d) = baxter_invariants(&ws.scaled(-3.7)).unwrap();
        assert!((g - base.0).abs() < 1e-15 && (d - base.1).abs() < 1e-15);
    }

    #[test]
    fn free_fermion_examples() {
        assert_eq!(free_fermion_residual(&eight([1.0; 8])), 0.0);
        assert_eq!(free_fermion_residual(&eight([1.0, 2.0, 3.0, 6.0, 2.0, 5.0, 1.0, 2.0])), 8.0);
    }

    #[test]
    fn krinsky_examples() {
        assert_eq!(krinsky_invariants(&eight([1.0; 8])).unwrap(), [1.0, 2.0, 0.0]);
        let w = eight([0.3, 1.1, 0.7, 2.0, 0.9, 1.4, 0.6, 0.8]);
        let base = krinsky_invariants(&w).unwrap();
        let scaled = krinsky_invariants(&w.scaled(2.5)).unwrap();
        for (x, y) in base.iter().zip(&scaled) {
            assert!((x - y).abs() < 1e-14);
        }
        let degenerate = eight([1.0, 1.0, 1.0, 1.0, 0.0, 1.0, 1.0, 1.0]);
        assert_eq!(krinsky_invariants(&degenerate), Err(Error::UndefinedInvariant("w5·w7")));
    }

    #[test]
    fn companion_permutation() {
        let w = eight([1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0, 8.0]);
        let c = staggered_companion(&w);
        assert_eq!(c.w, [3.0, 4.0, 1.0, 2.0, 8.0, 7.0, 6.0, 5.0]);
        assert_eq!(c.parity, Parity::Odd);
        assert_eq!(staggered_companion(&c), w);

        let s = staggered_companion(&to_eight(&sym(1.0, 2.0, 3.0, 4.0)));
        assert_eq!(symmetrize(&s).unwrap(), sym(2.0, 1.0, 4.0, 3.0).with_parity(Parity::Odd));
    }

    #[test]
    fn companion_preserves_free_fermion_residual() {
        let w = eight([0.3, 1.1, 0.7, 2.0, 0.9, 1.4, 0.6, 0.8]);
        assert_eq!(free_fermion_residual(&staggered_companion(&w)), free_fermion_residual(&w));
    }

    #[test]
    fn ev_od_swap_properties() {
        let ws = sym(1.0, 2.0, 3.0, 4.0);
        let s = ev_od_swap(&ws);
        assert_eq!(s.as_array(), [3.0, 4.0, 1.0, 2.0]);
        assert_eq!(s.parity, Parity::Odd);
        assert_eq!(ev_od_swap(&s), ws);
        let (g, d) = baxter_invariants(&ws).unwrap();
        let (gs, ds) = baxter_invariants(&s).unwrap();
        assert!((gs + g).abs() < 1e-15 && (ds + d).abs() < 1e-15);
    }

    #[test]
    fn manifold_report_definedness() {
        let r = ManifoldReport::from_sym(&sym(1.0, 1.0, 1.0, 1.0));
        assert_eq!((r.gamma, r.delta, r.krinsky), (Some(0.0), Some(0.0), Some([1.0, 2.0, 0.0])));
        let r = ManifoldReport::from_eight(&eight([1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 0.0, 8.0]));
        assert_eq!((r.gamma, r.krinsky), (None, None));
    }

    #[test]
    fn krinsky_sampler_postconditions() {
        for seed in 0..5 {
            let (p, q) = sample_krinsky_pair(seed).unwrap();
            assert!(free_fermion_residual(&p).abs() < 1e-10);
            assert!(free_fermion_residual(&q).abs() < 1e-10);
            let (kp, kq) = (krinsky_invariants(&p).unwrap(), krinsky_invariants(&q).unwrap());
            for (a, b) in kp.iter().zip(&kq) {
                assert!((a - b).abs() < 1e-9);
            }
            assert!(p.w.iter().zip(&q.w).any(|(a, b)| (a - b).abs() > 1e-3));
            assert_eq!(sample_krinsky_pair(seed).unwrap(), (p, q));
        }
    }

    #[test]
    fn parity_parsing() {
        assert_eq!("od".parse::<Parity>().unwrap(), Parity::Odd);
        assert_eq!("even".parse::<Parity>().unwrap(), Parity::Even);
        assert!("x".parse::<Parity>().is_err());
    }

    #[test]
    fn weights_json_layout() {
        let w = to_eight(&sym(1.0, 2.0, 3.0, 4.0).with_parity(Parity::Odd));
        let json = serde_json::to_string(&w).unwrap();
        assert_eq!(json, r#"{"weights":[1.0,1.0,2.0,2.0,3.0,3.0,4.0,4.0],"parity":"odd"}"#);
        let back: WeightsEight = serde_json::from_str(&json).unwrap();
        assert_eq!(back, w);
    }
}
