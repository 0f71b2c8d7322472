//! Lax operators, the four-member R-matrix sheaf, Yang-Baxter residuals and
//! the numerical intertwiner search.
//!
//! All operators act on `C² ⊗ C²` in the basis `(↑↑, ↑↓, ↓↑, ↓↓)`, first factor
//! auxiliary (horizontal), second quantum (vertical). Matrix entries are the
//! vertex weights; the printed operator tables are the definition.

use std::fmt;

use serde::Serialize;

use crate::elliptic::{baxter_weights_with, ThetaParams};
use crate::error::{Error, Result};
use crate::linalg::{null_space_with_spectrum, RectMatrix, SquareMatrix, C64, ZERO};
use crate::weights::{Parity, WeightsEight, WeightsSym};

/// Nonzero positions of even-kind operators.
pub const EVEN_PATTERN: [(usize, usize); 8] =
    [(0, 0), (1, 1), (2, 2), (3, 3), (0, 3), (3, 0), (1, 2), (2, 1)];

/// Nonzero positions of odd-kind operators.
pub const ODD_PATTERN: [(usize, usize); 8] =
    [(0, 1), (1, 0), (2, 3), (3, 2), (0, 2), (2, 0), (1, 3), (3, 1)];

/// Which structural pattern an operator with the given labels has.
pub fn pattern_for(labels: (Parity, Parity)) -> Parity {
    if labels.0 == labels.1 { Parity::Even } else { Parity::Odd }
}

/// True when every entry outside the pattern of `kind` is exactly zero.
pub fn matches_pattern(m: &SquareMatrix, kind: Parity) -> bool {
    let allowed = match kind {
        Parity::Even => &EVEN_PATTERN,
        Parity::Odd => &ODD_PATTERN,
    };
    m.dim() == 4
        && (0..4)
            .flat_map(|i| (0..4).map(move |j| (i, j)))
            .all(|(i, j)| allowed.contains(&(i, j)) || m.get(i, j) == ZERO)
}

fn from_entries(entries: &[((usize, usize), f64)]) -> SquareMatrix {
    let mut m = SquareMatrix::zeros(4);
    for &((i, j), v) in entries {
        m.set(i, j, C64::new(v, 0.0));
    }
    m
}

/// Even-pattern operator `[[a,0,0,d],[0,b,c,0],[0,c,b,0],[d,0,0,a]]`.
fn even_operator(a: f64, b: f64, c: f64, d: f64) -> SquareMatrix {
    from_entries(&[
        ((0, 0), a), ((3, 3), a), ((1, 1), b), ((2, 2), b),
        ((1, 2), c), ((2, 1), c), ((0, 3), d), ((3, 0), d),
    ])
}

/// Odd-pattern operator `[[0,a,d,0],[b,0,0,c],[c,0,0,b],[0,d,a,0]]`.
fn odd_operator(a: f64, b: f64, c: f64, d: f64) -> SquareMatrix {
    from_entries(&[
        ((0, 1), a), ((3, 2), a), ((1, 0), b), ((2, 3), b),
        ((2, 0), c), ((1, 3), c), ((0, 2), d), ((3, 1), d),
    ])
}

/// A 4×4 local operator with its (auxiliary, quantum) parity labels.
#[derive(Debug, Clone, PartialEq)]
pub struct LaxOperator {
    matrix: SquareMatrix,
    labels: (Parity, Parity),
}

impl LaxOperator {
    /// Wraps a matrix, checking it follows the pattern its labels imply.
    pub fn new(matrix: SquareMatrix, labels: (Parity, Parity)) -> Result<Self> {
        if matrix.dim() != 4 {
            return Err(Error::DimensionMismatch { expected: 4, found: matrix.dim() });
        }
        let kind = pattern_for(labels);
        if !matches_pattern(&matrix, kind) {
            return Err(Error::InvalidInput(format!("matrix does not have the {} pattern", kind.label())));
        }
        Ok(Self { matrix, labels })
    }

    pub fn matrix(&self) -> &SquareMatrix {
        &self.matrix
    }

    pub fn labels(&self) -> (Parity, Parity) {
        self.labels
    }

    pub fn pattern(&self) -> Parity {
        pattern_for(self.labels)
    }

    /// 2×2 quantum-space block `(α, β)` of the auxiliary index.
    pub fn aux_block(&self, alpha: usize, beta: usize) -> SquareMatrix {
        self.matrix.block(alpha, beta, 2)
    }
}

/// Symmetric even Lax operator.
pub fn lax_even(ws: &WeightsSym) -> LaxOperator {
    LaxOperator { matrix: even_operator(ws.a, ws.b, ws.c, ws.d), labels: (Parity::Even, Parity::Even) }
}

/// Symmetric odd Lax operator.
pub fn lax_odd(ws: &WeightsSym) -> LaxOperator {
    LaxOperator { matrix: odd_operator(ws.a, ws.b, ws.c, ws.d), labels: (Parity::Odd, Parity::Even) }
}

/// Lax operator of the symmetric model whose family is `ws.parity`.
pub fn lax_symmetric(ws: &WeightsSym) -> LaxOperator {
    match ws.parity {
        Parity::Even => lax_even(ws),
        Parity::Odd => lax_odd(ws),
    }
}

fn require_parity(w: &WeightsEight, parity: Parity) -> Result<()> {
    if w.parity != parity {
        return Err(Error::ParityMismatch { expected: parity.label(), found: w.parity.label() });
    }
    Ok(())
}

/// Eight-weight even Lax operator
/// `[[w₁,0,0,w₇],[0,w₃,w₆,0],[0,w₅,w₄,0],[w₈,0,0,w₂]]`.
///
/// Entries follow the arrow dictionary of the vertex pictures (index 0 = arrow
/// right/up, row `2·right + top`, column `2·left + bottom`), the same
/// dictionary that reproduces the odd operators below. It reduces to
/// [`lax_even`] on symmetric weights.
pub fn lax_asym_even(w: &WeightsEight) -> Result<LaxOperator> {
    require_parity(w, Parity::Even)?;
    let v = |i| w.get(i);
    let m = from_entries(&[
        ((0, 0), v(1)), ((3, 3), v(2)), ((1, 1), v(3)), ((2, 2), v(4)),
        ((2, 1), v(5)), ((1, 2), v(6)), ((0, 3), v(7)), ((3, 0), v(8)),
    ]);
    Ok(LaxOperator { matrix: m, labels: (Parity::Even, Parity::Even) })
}

/// Odd Lax operator `[[0,v₁,v₇,0],[v₃,0,0,v₆],[v₅,0,0,v₄],[0,v₈,v₂,0]]`.
pub fn lax_asym_odd(w: &WeightsEight) -> Result<LaxOperator> {
    require_parity(w, Parity::Odd)?;
    let v = |i| w.get(i);
    let m = from_entries(&[
        ((0, 1), v(1)), ((0, 2), v(7)), ((1, 0), v(3)), ((1, 3), v(6)),
        ((2, 0), v(5)), ((2, 3), v(4)), ((3, 1), v(8)), ((3, 2), v(2)),
    ]);
    Ok(LaxOperator { matrix: m, labels: (Parity::Odd, Parity::Even) })
}

/// Sublattice-Y companion `[[0,v₃,v₆,0],[v₁,0,0,v₇],[v₈,0,0,v₂],[0,v₅,v₄,0]]`.
pub fn lax_asym_odd_bold(w: &WeightsEight) -> Result<LaxOperator> {
    require_parity(w, Parity::Odd)?;
    let v = |i| w.get(i);
    let m = from_entries(&[
        ((0, 1), v(3)), ((0, 2), v(6)), ((1, 0), v(1)), ((1, 3), v(7)),
        ((2, 0), v(8)), ((2, 3), v(2)), ((3, 1), v(5)), ((3, 2), v(4)),
    ]);
    Ok(LaxOperator { matrix: m, labels: (Parity::Odd, Parity::Even) })
}

/// Eight-weight Lax operator of the family `w.parity`.
pub fn lax_eight(w: &WeightsEight) -> LaxOperator {
    match w.parity {
        Parity::Even => lax_asym_even(w),
        Parity::Odd => lax_asym_odd(w),
    }
    .expect("parity dispatched")
}

/// Label `(α, β)` of a sheaf member.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub struct RSheafLabel(pub Parity, pub Parity);

impl RSheafLabel {
    pub const ALL: [RSheafLabel; 4] = [
        RSheafLabel(Parity::Even, Parity::Even),
        RSheafLabel(Parity::Even, Parity::Odd),
        RSheafLabel(Parity::Odd, Parity::Even),
        RSheafLabel(Parity::Odd, Parity::Odd),
    ];
}

impl fmt::Display for RSheafLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{})", self.0, self.1)
    }
}

/// `R^(α,β)` built from the weights `ws` (its parity label is ignored).
pub fn r_sheaf(label: RSheafLabel, ws: &WeightsSym) -> SquareMatrix {
    let WeightsSym { a, b, c, d, .. } = *ws;
    match label {
        RSheafLabel(Parity::Even, Parity::Even) => even_operator(a, b, c, d),
        RSheafLabel(Parity::Odd, Parity::Odd) => even_operator(c, d, a, b),
        RSheafLabel(Parity::Odd, Parity::Even) => odd_operator(a, b, c, d),
        RSheafLabel(Parity::Even, Parity::Odd) => odd_operator(c, d, a, b),
    }
}

/// Theta weights at additive spectral argument `u`.
///
/// `u` is measured from the regular point of the parameterization: the
/// weights at `u` are those at curve variable `μ = u − λ`, so `u = 0` gives
/// `b = d = 0, a = c` and `R^(ev,ev)(0)` is proportional to the permutation.
/// Spectral arguments compose additively in this variable.
pub fn sheaf_weights(params: &ThetaParams, lambda: f64, u: f64) -> Result<WeightsSym> {
    baxter_weights_with(params, lambda, u - lambda)
}

/// `R^(α,β)(u)` at additive spectral argument `u`.
pub fn sheaf_matrix(label: RSheafLabel, params: &ThetaParams, lambda: f64, u: f64) -> Result<SquareMatrix> {
    Ok(r_sheaf(label, &sheaf_weights(params, lambda, u)?))
}

/// Embeds a two-site operator acting on legs `(first, second)` of a
/// three-fold `C²` product.
pub fn embed_pair(op: &SquareMatrix, first: usize, second: usize) -> SquareMatrix {
    assert_eq!(op.dim(), 4);
    assert!(first < 3 && second < 3 && first != second);
    let bit = |idx: usize, leg: usize| (idx >> (2 - leg)) & 1;
    let spectator = 3 - first - second;
    let mut out = SquareMatrix::zeros(8);
    for row in 0..8 {
        for col in 0..8 {
            if bit(row, spectator) != bit(col, spectator) {
                continue;
            }
            let r = 2 * bit(row, first) + bit(row, second);
            let c = 2 * bit(col, first) + bit(col, second);
            out.set(row, col, op.get(r, c));
        }
    }
    out
}

fn triple_residual(x12: &SquareMatrix, y13: &SquareMatrix, z23: &SquareMatrix, norms: f64) -> f64 {
    let lhs = &(x12 * y13) * z23;
    let rhs = &(z23 * y13) * x12;
    let raw = lhs.max_abs_diff(&rhs).expect("8×8 operands");
    if norms == 0.0 { 0.0 } else { raw / norms }
}

/// `‖R₁₂L′₁₃L″₂₃ − L″₂₃L′₁₃R₁₂‖_∞ / (‖R‖‖L′‖‖L″‖)`.
pub fn ybe_residual(r: &SquareMatrix, lp: &LaxOperator, lpp: &LaxOperator) -> f64 {
    let norms = r.max_abs() * lp.matrix.max_abs() * lpp.matrix.max_abs();
    triple_residual(&embed_pair(r, 0, 1), &embed_pair(&lp.matrix, 0, 2), &embed_pair(&lpp.matrix, 1, 2), norms)
}

/// The six scalar relations obtained by inserting the even-pattern ansatz
/// `(r₁, r₂, r₃, r₄)` between two symmetric odd Lax operators. All vanish iff
/// the ansatz intertwines them.
pub fn functional_residuals(r: [f64; 4], wp: &WeightsSym, wpp: &WeightsSym) -> [f64; 6] {
    let [r1, r2, r3, r4] = r;
    let (a1, b1, c1, d1) = (wp.a, wp.b, wp.c, wp.d);
    let (a2, b2, c2, d2) = (wpp.a, wpp.b, wpp.c, wpp.d);
    [
        r4 * c1 * b2 + r1 * a1 * c2 - r2 * a1 * d2 - r3 * c1 * a2,
        r1 * d1 * a2 + r4 * b1 * d2 - r2 * c1 * a2 - r3 * a1 * d2,
        r4 * d1 * a2 + r1 * b1 * d2 - r3 * d1 * b2 - r2 * b1 * c2,
        r1 * c1 * b2 + r4 * a1 * c2 - r2 * d1 * b2 - r3 * b1 * c2,
        r1 * a1 * b2 + r4 * c1 * c2 - r1 * b1 * a2 - r4 * d1 * d2,
        r2 * a1 * a2 + r3 * c1 * d2 - r2 * b1 * b2 - r3 * d1 * c2,
    ]
}

/// Result of the unconstrained 16-parameter intertwiner search.
#[derive(Debug, Clone)]
pub struct RSolution {
    pub kernel_dim: usize,
    /// Kernel directions reshaped to 4×4 and gauge-fixed so the entry of
    /// largest magnitude equals 1.
    pub candidates: Vec<SquareMatrix>,
    /// Singular values of the 64×16 linear map, descending.
    pub singular_values: Vec<f64>,
}

/// Finds every `R` with `R₁₂L′₁₃L″₂₃ = L″₂₃L′₁₃R₁₂` by computing the kernel of
/// `vec(R) ↦ vec(R₁₂A − BR₁₂)` with `A = L′₁₃L″₂₃` and `B = L″₂₃L′₁₃`.
pub fn solve_r(lp: &LaxOperator, lpp: &LaxOperator, rel_tol: f64) -> Result<RSolution> {
    let l13 = embed_pair(&lp.matrix, 0, 2);
    let l23 = embed_pair(&lpp.matrix, 1, 2);
    let a = &l13 * &l23;
    let b = &l23 * &l13;

    let mut map = RectMatrix::zeros(64, 16);
    for idx in 0..16 {
        let mut unit = SquareMatrix::zeros(4);
        unit.set(idx / 4, idx % 4, C64::new(1.0, 0.0));
        let r12 = embed_pair(&unit, 0, 1);
        let column = &(&r12 * &a) - &(&b * &r12);
        for (row, &z) in column.entries().iter().enumerate() {
            map.set(row, idx, z);
        }
    }

    let spectrum = null_space_with_spectrum(&map, rel_tol)?;
    let candidates = spectrum
        .basis
        .into_iter()
        .filter_map(|v| SquareMatrix::new(4, v).ok()?.normalized_by_max_entry())
        .collect::<Vec<_>>();
    Ok(RSolution { kernel_dim: candidates.len(), candidates, singular_values: spectrum.singular_values })
}

/// `(r₁, r₂, r₃, r₄)` read off an even-pattern matrix: entries
/// `(0,0), (1,1), (1,2), (0,3)`.
pub fn r_parameters(m: &SquareMatrix) -> [C64; 4] {
    [m.get(0, 0), m.get(1, 1), m.get(1, 2), m.get(0, 3)]
}

/// Even pattern with the four-parameter symmetric structure, within `tol`.
pub fn has_r_structure(m: &SquareMatrix, tol: f64) -> bool {
    if m.dim() != 4 {
        return false;
    }
    let off_pattern = (0..4)
        .flat_map(|i| (0..4).map(move |j| (i, j)))
        .filter(|p| !EVEN_PATTERN.contains(p))
        .all(|(i, j)| m.get(i, j).norm() < tol);
    let close = |p: (usize, usize), q: (usize, usize)| (m.get(p.0, p.1) - m.get(q.0, q.1)).norm() < tol;
    off_pattern && close((0, 0), (3, 3)) && close((1, 1), (2, 2)) && close((1, 2), (2, 1)) && close((0, 3), (3, 0))
}

/// Sheaf Yang-Baxter residual
/// `R₁₂^(α₁α₂)(μ₁) R₁₃^(α₁α₃)(μ₁+μ₂) R₂₃^(α₂α₃)(μ₂) − (reversed)`, normalized by
/// operand norms, at additive spectral arguments (see [`sheaf_weights`]).
pub fn sheaf_ybe_residual(parities: [Parity; 3], mu1: f64, mu2: f64, k: f64, lambda: f64) -> Result<f64> {
    sheaf_ybe_residual_detuned(parities, mu1, mu2, k, lambda, 0.0)
}

/// As [`sheaf_ybe_residual`] with the middle argument moved to
/// `μ₁ + μ₂ + detune`; a nonzero detune is a negative control.
pub fn sheaf_ybe_residual_detuned(
    parities: [Parity; 3],
    mu1: f64,
    mu2: f64,
    k: f64,
    lambda: f64,
    detune: f64,
) -> Result<f64> {
    let params = ThetaParams::new(k)?;
    let [a1, a2, a3] = parities;
    let r12 = sheaf_matrix(RSheafLabel(a1, a2), &params, lambda, mu1)?;
    let r13 = sheaf_matrix(RSheafLabel(a1, a3), &params, lambda, mu1 + mu2 + detune)?;
    let r23 = sheaf_matrix(RSheafLabel(a2, a3), &params, lambda, mu2)?;
    let norms = r12.max_abs() * r13.max_abs() * r23.max_abs();
    Ok(triple_residual(&embed_pair(&r12, 0, 1), &embed_pair(&r13, 0, 2), &embed_pair(&r23, 1, 2), norms))
}

/// All eight parity triples in lexicographic order (ev < od).
pub fn all_parity_triples() -> Vec<[Parity; 3]> {
    let mut out = Vec::with_capacity(8);
    for a in Parity::ALL {
        for b in Parity::ALL {
            for c in Parity::ALL {
                out.push([a, b, c]);
            }
        }
    }
    out
}
