//! Row transfer matrices, torus partition functions and the commutation and
//! equivalence checks built on them.
//!
//! A row transfer matrix is `Tr₀[L₀₁ L₀₂ … L₀N]`. It is assembled by viewing
//! each Lax operator as a 2×2 block matrix of 2×2 quantum operators, so the
//! running product is a 2×2 block matrix whose blocks grow by a Kronecker
//! factor per site. Work is `O(N·4^N)`.
//!
//! The exhaustive-enumeration backend is independent of that construction: it
//! assigns a two-state arrow to every edge of the periodic lattice and weighs
//! each vertex through the arrow pictures of the two families.

use std::fmt;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{relative_commutator, relative_difference, SquareMatrix, C64, ZERO};
use crate::operators::{lax_asym_even, lax_asym_odd, lax_eight, LaxOperator};
use crate::weights::{staggered_companion, Parity, WeightsEight};

/// Longest chain for which a transfer matrix is built (dim 4096).
pub const MAX_SITES: usize = 12;

/// Longest staggered chain.
pub const MAX_STAGGERED_SITES: usize = 10;

/// Most edges the enumeration backend visits (2^24 configurations).
pub const MAX_ENUMERATION_EDGES: usize = 24;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum TransferKind {
    Even,
    Odd,
    #[serde(rename = "staggered-1")]
    Staggered1,
    #[serde(rename = "staggered-2")]
    Staggered2,
}

impl fmt::Display for TransferKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            TransferKind::Even => "even",
            TransferKind::Odd => "odd",
            TransferKind::Staggered1 => "staggered-1",
            TransferKind::Staggered2 => "staggered-2",
        })
    }
}

impl std::str::FromStr for TransferKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "even" | "ev" => Ok(TransferKind::Even),
            "odd" | "od" => Ok(TransferKind::Odd),
            "staggered-1" | "t1" => Ok(TransferKind::Staggered1),
            "staggered-2" | "t2" => Ok(TransferKind::Staggered2),
            other => Err(Error::InvalidInput(format!("unknown transfer kind `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TransferMatrix {
    pub matrix: SquareMatrix,
    pub sites: usize,
    pub kind: TransferKind,
}

/// Accumulates `out += a ⊗ b` for a 2×2 `b`.
fn kron2_add_into(out: &mut [C64], a: &SquareMatrix, b: &SquareMatrix) {
    let na = a.dim();
    let n = 2 * na;
    let (b00, b01, b10, b11) = (b.get(0, 0), b.get(0, 1), b.get(1, 0), b.get(1, 1));
    if b00 == ZERO && b01 == ZERO && b10 == ZERO && b11 == ZERO {
        return;
    }
    for i in 0..na {
        for j in 0..na {
            let x = a.get(i, j);
            if x == ZERO {
                continue;
            }
            let top = (2 * i) * n + 2 * j;
            let bottom = top + n;
            out[top] += x * b00;
            out[top + 1] += x * b01;
            out[bottom] += x * b10;
            out[bottom + 1] += x * b11;
        }
    }
}

/// `Tr₀[L₀₁ … L₀N]` for an arbitrary sequence of Lax operators.
pub fn chain_transfer(ops: &[&LaxOperator]) -> Result<SquareMatrix> {
    let sites = ops.len();
    if sites == 0 || sites > MAX_SITES {
        return Err(Error::SizeGuard(format!("chain length {sites} not in 1..={MAX_SITES}")));
    }
    let blocks: Vec<[[SquareMatrix; 2]; 2]> = ops
        .iter()
        .map(|l| [[l.aux_block(0, 0), l.aux_block(0, 1)], [l.aux_block(1, 0), l.aux_block(1, 1)]])
        .collect();

    // running[α][β]: product over the sites seen so far with auxiliary
    // boundary indices α (left) and β (right).
    let one = SquareMatrix::identity(1);
    let zero = SquareMatrix::zeros(1);
    let mut running = [[one.clone(), zero.clone()], [zero, one]];
    for site in &blocks[..sites - 1] {
        let dim = 2 * running[0][0].dim();
        let mut next: [[Vec<C64>; 2]; 2] = Default::default();
        for alpha in 0..2 {
            for gamma in 0..2 {
                let mut acc = vec![ZERO; dim * dim];
                for beta in 0..2 {
                    kron2_add_into(&mut acc, &running[alpha][beta], &site[beta][gamma]);
                }
                next[alpha][gamma] = acc;
            }
        }
        running = next.map(|row| row.map(|data| SquareMatrix::new(dim, data).expect("block dims")));
    }

    // Close the trace with the last site without forming its four blocks.
    let last = &blocks[sites - 1];
    let dim = 2 * running[0][0].dim();
    let mut acc = vec![ZERO; dim * dim];
    for alpha in 0..2 {
        for beta in 0..2 {
            kron2_add_into(&mut acc, &running[alpha][beta], &last[beta][alpha]);
        }
    }
    SquareMatrix::new(dim, acc)
}

/// Uniform row transfer matrix of `sites` copies of `lax`.
pub fn transfer_matrix(lax: &LaxOperator, sites: usize) -> Result<TransferMatrix> {
    if sites == 0 || sites > MAX_SITES {
        return Err(Error::SizeGuard(format!("chain length {sites} not in 1..={MAX_SITES}")));
    }
    let ops = vec![lax; sites];
    let kind = match lax.pattern() {
        Parity::Even => TransferKind::Even,
        Parity::Odd => TransferKind::Odd,
    };
    Ok(TransferMatrix { matrix: chain_transfer(&ops)?, sites, kind })
}

/// `σˣ ⊗ … ⊗ σˣ` on `sites` factors.
pub fn sigma_x_string(sites: usize) -> Result<SquareMatrix> {
    if sites == 0 || sites > MAX_SITES {
        return Err(Error::SizeGuard(format!("chain length {sites} not in 1..={MAX_SITES}")));
    }
    let dim = 1usize << sites;
    let mask = dim - 1;
    let mut m = SquareMatrix::zeros(dim);
    for i in 0..dim {
        m.set(i, i ^ mask, C64::new(1.0, 0.0));
    }
    Ok(m)
}

fn check_staggered_sites(sites: usize) -> Result<()> {
    if sites == 0 || !sites.is_multiple_of(2) || sites > MAX_STAGGERED_SITES {
        return Err(Error::SizeGuard(format!(
            "staggered chain length {sites} must be even and at most {MAX_STAGGERED_SITES}"
        )));
    }
    Ok(())
}

/// `(T₁, T₂)` for a chain alternating `x, y, x, y, …` and `y, x, y, x, …`.
pub fn staggered_pair_from(x: &LaxOperator, y: &LaxOperator, sites: usize) -> Result<(TransferMatrix, TransferMatrix)> {
    check_staggered_sites(sites)?;
    let first: Vec<&LaxOperator> = (0..sites).map(|j| if j % 2 == 0 { x } else { y }).collect();
    let second: Vec<&LaxOperator> = (0..sites).map(|j| if j % 2 == 0 { y } else { x }).collect();
    Ok((
        TransferMatrix { matrix: chain_transfer(&first)?, sites, kind: TransferKind::Staggered1 },
        TransferMatrix { matrix: chain_transfer(&second)?, sites, kind: TransferKind::Staggered2 },
    ))
}

/// Staggered odd transfer matrices `T₁ = Tr₀[L 𝐋 L 𝐋 …]`, `T₂ = Tr₀[𝐋 L 𝐋 L …]`
/// with the plain and bold odd operators of `w`. The parity label of `w` is
/// ignored; the weights are read as odd-family weights.
pub fn staggered_transfer_pair(w: &WeightsEight, sites: usize) -> Result<(TransferMatrix, TransferMatrix)> {
    let odd = w.with_parity(Parity::Odd);
    let plain = lax_asym_odd(&odd)?;
    let bold = crate::operators::lax_asym_odd_bold(&odd)?;
    staggered_pair_from(&plain, &bold, sites)
}

/// `T₁T₂` of [`staggered_transfer_pair`].
pub fn staggered_product(w: &WeightsEight, sites: usize) -> Result<SquareMatrix> {
    let (t1, t2) = staggered_transfer_pair(w, sites)?;
    Ok(&t1.matrix * &t2.matrix)
}

/// Relative commutator of the staggered products at two weight points.
pub fn staggered_product_commutator(wp: &WeightsEight, wpp: &WeightsEight, sites: usize) -> Result<f64> {
    relative_commutator(&staggered_product(wp, sites)?, &staggered_product(wpp, sites)?)
}

/// Periodic `rows × cols` square lattice.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct LatticeSpec {
    pub rows: usize,
    pub cols: usize,
}

impl LatticeSpec {
    pub fn new(rows: usize, cols: usize) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::LatticeShape(format!("{rows}×{cols} has no sites")));
        }
        Ok(Self { rows, cols })
    }

    pub fn square(n: usize) -> Result<Self> {
        Self::new(n, n)
    }

    pub fn edges(&self) -> usize {
        2 * self.rows * self.cols
    }
}

impl fmt::Display for LatticeSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}x{}", self.rows, self.cols)
    }
}

/// A vertex model on a periodic lattice: uniform weights, or sublattice X/Y
/// weights on a checkerboard with vertex `(0, 0)` in X.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum Model {
    Uniform(WeightsEight),
    Staggered { x: WeightsEight, y: WeightsEight },
}

impl Model {
    /// Staggered model of family `w.parity` with `w` on X and the
    /// [`staggered_companion`] permutation of `w` on Y.
    pub fn staggered_with_companion(w: &WeightsEight) -> Self {
        Model::Staggered { x: *w, y: staggered_companion(w).with_parity(w.parity) }
    }

    pub fn parity(&self) -> Parity {
        match self {
            Model::Uniform(w) => w.parity,
            Model::Staggered { x, .. } => x.parity,
        }
    }

    pub fn label(&self) -> String {
        match self {
            Model::Uniform(w) => w.parity.label().to_string(),
            Model::Staggered { x, .. } => format!("staggered-{}", x.parity.label()),
        }
    }

    fn validate(&self) -> Result<()> {
        if let Model::Staggered { x, y } = self {
            if x.parity != y.parity {
                return Err(Error::ParityMismatch { expected: x.parity.label(), found: y.parity.label() });
            }
        }
        Ok(())
    }
}

/// A partition function together with the magnitude it should be compared
/// against when testing for cancellation to zero.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PartitionValue {
    pub z: C64,
    /// Entrywise ℓ¹ norm of the transfer-matrix power whose trace is `z`
    /// (trace backend), or the sum of |contributions| (enumeration backend).
    pub scale: f64,
}

fn check_staggered_lattice(lattice: &LatticeSpec) -> Result<()> {
    if !lattice.rows.is_multiple_of(2) || !lattice.cols.is_multiple_of(2) {
        return Err(Error::LatticeShape(format!(
            "staggered model needs an even×even torus, got {lattice}"
        )));
    }
    Ok(())
}

pub fn partition_trace(model: &Model, lattice: &LatticeSpec) -> Result<C64> {
    Ok(partition_trace_scaled(model, lattice)?.z)
}

/// `Tr[T^rows]` (uniform) or `Tr[(T₁T₂)^{rows/2}]` (staggered).
pub fn partition_trace_scaled(model: &Model, lattice: &LatticeSpec) -> Result<PartitionValue> {
    model.validate()?;
    let power = match model {
        Model::Uniform(w) => {
            if lattice.cols > MAX_SITES {
                return Err(Error::SizeGuard(format!("{} columns exceeds {MAX_SITES}", lattice.cols)));
            }
            transfer_matrix(&lax_eight(w), lattice.cols)?.matrix.pow(lattice.rows)
        }
        Model::Staggered { x, y } => {
            check_staggered_lattice(lattice)?;
            let (t1, t2) = staggered_pair_from(&lax_eight(x), &lax_eight(y), lattice.cols)?;
            (&t1.matrix * &t2.matrix).pow(lattice.rows / 2)
        }
    };
    let scale = power.entries().iter().map(|z| z.norm()).sum();
    Ok(PartitionValue { z: power.trace(), scale })
}

/// Edge states `(left, top, right, bottom)` of the vertex pictures, indexed by
/// weight label. State 0 is an arrow pointing right or up.
const EVEN_VERTICES: [[u8; 4]; 8] = [
    [0, 0, 0, 0],
    [1, 1, 1, 1],
    [0, 1, 0, 1],
    [1, 0, 1, 0],
    [0, 0, 1, 1],
    [1, 1, 0, 0],
    [1, 0, 0, 1],
    [0, 1, 1, 0],
];

const ODD_VERTICES: [[u8; 4]; 8] = [
    [0, 0, 0, 1],
    [1, 1, 1, 0],
    [0, 1, 0, 0],
    [1, 0, 1, 1],
    [0, 0, 1, 0],
    [1, 1, 0, 1],
    [1, 0, 0, 0],
    [0, 1, 1, 1],
];

/// Vertex pictures of a family as `(left, top, right, bottom)` per label.
pub fn vertex_pictures(parity: Parity) -> &'static [[u8; 4]; 8] {
    match parity {
        Parity::Even => &EVEN_VERTICES,
        Parity::Odd => &ODD_VERTICES,
    }
}

/// Packs `(left, top, right, bottom)` into a 4-bit local state.
#[inline]
fn local_state(left: u64, top: u64, right: u64, bottom: u64) -> usize {
    (left | (top << 1) | (right << 2) | (bottom << 3)) as usize
}

/// Weight of each of the 16 local states; zero outside the family.
fn vertex_table(w: &WeightsEight) -> [f64; 16] {
    let mut table = [0.0; 16];
    for (label, p) in vertex_pictures(w.parity).iter().enumerate() {
        let s = local_state(p[0] as u64, p[1] as u64, p[2] as u64, p[3] as u64);
        table[s] = w.w[label];
    }
    table
}

/// Arrow-sum partition function over all `2^{2·rows·cols}` edge orientations.
///
/// Edge ordering is row-major over vertices; vertex `n = r·cols + c` owns bit
/// `2n` (horizontal edge to its right) and bit `2n + 1` (vertical edge below
/// it). Staggered models put X on vertices with `r + c` even.
pub fn partition_enumerate(model: &Model, lattice: &LatticeSpec) -> Result<C64> {
    Ok(partition_enumerate_scaled(model, lattice)?.z)
}

pub fn partition_enumerate_scaled(model: &Model, lattice: &LatticeSpec) -> Result<PartitionValue> {
    model.validate()?;
    let edges = lattice.edges();
    if edges > MAX_ENUMERATION_EDGES {
        return Err(Error::SizeGuard(format!("{edges} edges exceeds {MAX_ENUMERATION_EDGES}")));
    }
    if let Model::Staggered { .. } = model {
        check_staggered_lattice(lattice)?;
    }
    let (rows, cols) = (lattice.rows, lattice.cols);
    let (tx, ty) = match model {
        Model::Uniform(w) => (vertex_table(w), vertex_table(w)),
        Model::Staggered { x, y } => (vertex_table(x), vertex_table(y)),
    };

    // Per vertex: which table, and bit positions of (left, top, right, bottom).
    struct Site {
        table: [f64; 16],
        bits: [u32; 4],
    }
    let sites: Vec<Site> = (0..rows)
        .flat_map(|r| (0..cols).map(move |c| (r, c)))
        .map(|(r, c)| {
            let h = |rr: usize, cc: usize| (2 * (rr * cols + cc)) as u32;
            let v = |rr: usize, cc: usize| (2 * (rr * cols + cc) + 1) as u32;
            let left = h(r, (c + cols - 1) % cols);
            let top = v((r + rows - 1) % rows, c);
            Site {
                table: if (r + c) % 2 == 0 { tx } else { ty },
                bits: [left, top, h(r, c), v(r, c)],
            }
        })
        .collect();

    let total: u64 = 1 << edges;
    let chunk_bits = edges.min(12);
    let chunk_len: u64 = 1 << chunk_bits;
    let chunks = total / chunk_len;

    // Partial sums are reduced in chunk order, so the result does not depend
    // on how many worker threads ran.
    let partials: Vec<(f64, f64)> = (0..chunks)
        .into_par_iter()
        .map(|chunk| {
            let (mut sum, mut abs) = (0.0f64, 0.0f64);
            for config in chunk * chunk_len..(chunk + 1) * chunk_len {
                let mut product = 1.0;
                for site in &sites {
                    let bit = |k: usize| (config >> site.bits[k]) & 1;
                    let weight = site.table[local_state(bit(0), bit(1), bit(2), bit(3))];
                    if weight == 0.0 {
                        product = 0.0;
                        break;
                    }
                    product *= weight;
                }
                sum += product;
                abs += product.abs();
            }
            (sum, abs)
        })
        .collect();
    let (z, scale) = partials.iter().fold((0.0, 0.0), |(s, a), &(ps, pa)| (s + ps, a + pa));
    Ok(PartitionValue { z: C64::new(z, 0.0), scale })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Backend {
    Trace,
    Enumerate,
}

impl std::str::FromStr for Backend {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "trace" => Ok(Backend::Trace),
            "enumerate" | "enum" => Ok(Backend::Enumerate),
            other => Err(Error::InvalidInput(format!("unknown backend `{other}`"))),
        }
    }
}

pub fn partition(model: &Model, lattice: &LatticeSpec, backend: Backend) -> Result<C64> {
    match backend {
        Backend::Trace => partition_trace(model, lattice),
        Backend::Enumerate => partition_enumerate(model, lattice),
    }
}

/// Both sides of a staggered equivalence.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WuKunzReport {
    pub lhs: f64,
    pub rhs: f64,
    pub rel_diff: f64,
    pub lattice: LatticeSpec,
    pub model: String,
    pub seed: Option<u64>,
    pub backend: Backend,
}

/// Uniform model of family `w.parity` on the left, staggered model of the
/// opposite family on the right with X weights `w` and Y weights
/// `staggered_companion(w)`.
pub fn wu_kunz_check(w: &WeightsEight, lattice: &LatticeSpec, backend: Backend, seed: Option<u64>) -> Result<WuKunzReport> {
    check_staggered_lattice(lattice)?;
    let lhs_model = Model::Uniform(*w);
    let rhs_model = Model::Staggered { x: w.with_parity(w.parity.flip()), y: staggered_companion(w) };
    let lhs = partition(&lhs_model, lattice, backend)?;
    let rhs = partition(&rhs_model, lattice, backend)?;
    Ok(WuKunzReport {
        lhs: lhs.re,
        rhs: rhs.re,
        rel_diff: relative_difference(lhs, rhs),
        lattice: *lattice,
        model: format!("{} = {}", lhs_model.label(), rhs_model.label()),
        seed,
        backend,
    })
}

fn transfer_of_kind(w: &WeightsEight, kind: TransferKind, sites: usize) -> Result<SquareMatrix> {
    Ok(match kind {
        TransferKind::Even => transfer_matrix(&lax_asym_even(&w.with_parity(Parity::Even))?, sites)?.matrix,
        TransferKind::Odd => transfer_matrix(&lax_asym_odd(&w.with_parity(Parity::Odd))?, sites)?.matrix,
        TransferKind::Staggered1 => staggered_transfer_pair(w, sites)?.0.matrix,
        TransferKind::Staggered2 => staggered_transfer_pair(w, sites)?.1.matrix,
    })
}

/// `norms[i][j]` = relative commutator of `T_{kinds.0}(points[i])` with
/// `T_{kinds.1}(points[j])`. Weight parity labels are ignored; the kind
/// decides how the weights are read.
pub fn commutation_scan(points: &[WeightsEight], sites: usize, kinds: (TransferKind, TransferKind)) -> Result<Vec<Vec<f64>>> {
    let build = |kind| points.par_iter().map(|w| transfer_of_kind(w, kind, sites)).collect::<Result<Vec<_>>>();
    let left = build(kinds.0)?;
    let right = if kinds.0 == kinds.1 { left.clone() } else { build(kinds.1)? };
    left.par_iter()
        .map(|a| right.iter().map(|b| relative_commutator(a, b)).collect::<Result<Vec<_>>>())
        .collect()
}
