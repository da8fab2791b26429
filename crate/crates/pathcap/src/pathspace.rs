//! Skeleton-weight selection, basis-path enumeration, positive/negative
//! classification, and decomposition of arbitrary paths over the basis.
//!
//! Skeleton weights are the diagonal entries of the hidden (square) weight
//! matrices, plus mod-mapped hookup entries in the input and output layers.
//! A basis path contains at most one non-skeleton weight: the all-skeleton
//! paths are the negative basis paths (one per hidden unit), and each
//! non-skeleton weight owns exactly one positive basis path, completed by
//! skeleton weights.
//!
//! Every other path value factors as a product of basis-path values with
//! integer exponents: non-negative on positive basis paths, non-positive on
//! negative ones. The decomposition is purely combinatorial and never looks
//! at weight values; numeric reconstruction is a separate step that guards
//! against zero skeleton weights.
//!
//! All indices are 0-based; the 1-based mod-formulas for skeleton hookups
//! translate to `row = col mod d` in the input layer and `col = row mod K`
//! in the output layer.

use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::network::{Matrix, Network, NetworkSpec, DEFAULT_PATH_CAP};

/// A node-index sequence `(i_0, ..., i_L)` through all layers.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct PathIndex(pub Vec<usize>);

impl PathIndex {
    pub fn validate(&self, spec: &NetworkSpec) -> Result<()> {
        if self.0.len() != spec.depth + 1 {
            return Err(Error::Domain(format!(
                "path length {} does not match L+1 = {}",
                self.0.len(),
                spec.depth + 1
            )));
        }
        for (l, &i) in self.0.iter().enumerate() {
            if i >= spec.layer_size(l) {
                return Err(Error::Domain(format!("node index {} out of range in layer {}", i, l)));
            }
        }
        Ok(())
    }

    /// The L weight coordinates along the path.
    pub fn weight_coords(&self) -> impl Iterator<Item = WeightCoord> + '_ {
        self.0.windows(2).enumerate().map(|(l, w)| WeightCoord { layer: l, row: w[0], col: w[1] })
    }
}

/// Coordinate of one weight: layer index `l` in `0..L`, entry `(row, col)`
/// of the `h_l x h_{l+1}` matrix.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct WeightCoord {
    pub layer: usize,
    pub row: usize,
    pub col: usize,
}

/// True iff the weight at `coord` is a skeleton weight.
pub fn is_skeleton(spec: &NetworkSpec, coord: WeightCoord) -> bool {
    let last = spec.depth - 1;
    if coord.layer == 0 {
        coord.row == coord.col % spec.input_dim
    } else if coord.layer == last {
        coord.col == coord.row % spec.output_dim
    } else {
        coord.row == coord.col
    }
}

/// Per-layer boolean mask over the weight matrices; true = skeleton weight.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SkeletonMask {
    layers: Vec<Vec<bool>>,
    spec: NetworkSpec,
}

impl SkeletonMask {
    pub fn get(&self, coord: WeightCoord) -> bool {
        let (_, cols) = self.spec.weight_shape(coord.layer);
        self.layers[coord.layer][coord.row * cols + coord.col]
    }

    pub fn skeleton_count(&self) -> usize {
        self.layers.iter().map(|l| l.iter().filter(|&&b| b).count()).sum()
    }
}

/// Mark the skeleton weights: hidden-layer diagonals plus the mod-mapped
/// input and output hookups, H per weight layer.
pub fn select_skeleton(spec: &NetworkSpec) -> SkeletonMask {
    let layers = (0..spec.depth)
        .map(|l| {
            let (rows, cols) = spec.weight_shape(l);
            let mut mask = vec![false; rows * cols];
            for row in 0..rows {
                for col in 0..cols {
                    if is_skeleton(spec, WeightCoord { layer: l, row, col }) {
                        mask[row * cols + col] = true;
                    }
                }
            }
            mask
        })
        .collect();
    SkeletonMask { layers, spec: *spec }
}

/// The basis paths of a network topology: `m = H` negative (all-skeleton)
/// paths and one positive path per non-skeleton weight, plus the owner map
/// from non-skeleton weights to their unique positive basis path.
///
/// Basis-path ids are `0..m` for negative paths and `m..r` for positive ones.
#[derive(Debug, Clone)]
pub struct BasisPathSet {
    spec: NetworkSpec,
    negative: Vec<PathIndex>,
    positive: Vec<PathIndex>,
    owner: HashMap<WeightCoord, usize>,
}

impl BasisPathSet {
    pub fn spec(&self) -> &NetworkSpec {
        &self.spec
    }

    pub fn negative(&self) -> &[PathIndex] {
        &self.negative
    }

    pub fn positive(&self) -> &[PathIndex] {
        &self.positive
    }

    /// Count of negative basis paths (`m`).
    pub fn num_negative(&self) -> usize {
        self.negative.len()
    }

    /// Total basis path count (`r`).
    pub fn num_total(&self) -> usize {
        self.negative.len() + self.positive.len()
    }

    /// Positive-basis-path id owning a non-skeleton weight, if any.
    pub fn owner_of(&self, coord: WeightCoord) -> Option<usize> {
        self.owner.get(&coord).copied()
    }

    pub fn path_by_id(&self, id: usize) -> &PathIndex {
        let m = self.negative.len();
        if id < m {
            &self.negative[id]
        } else {
            &self.positive[id - m]
        }
    }

    /// Exhaustively classify whether `path` is a basis path (<= 1 non-skeleton
    /// weight).
    pub fn is_basis_path(&self, path: &PathIndex) -> bool {
        nonskeleton_count(&self.spec, path) <= 1
    }
}

/// Negative basis path through hidden unit `i`: input hookup, the diagonal
/// chain, output hookup.
fn negative_path(spec: &NetworkSpec, i: usize) -> PathIndex {
    let mut nodes = Vec::with_capacity(spec.depth + 1);
    nodes.push(i % spec.input_dim);
    for _ in 1..spec.depth {
        nodes.push(i);
    }
    nodes.push(i % spec.output_dim);
    PathIndex(nodes)
}

/// The unique basis path containing the non-skeleton weight at `coord`,
/// completed with skeleton weights on both sides.
fn positive_path(spec: &NetworkSpec, coord: WeightCoord) -> PathIndex {
    let last = spec.depth - 1;
    let mut nodes = Vec::with_capacity(spec.depth + 1);
    if coord.layer == 0 {
        nodes.push(coord.row);
    } else {
        nodes.push(coord.row % spec.input_dim);
    }
    for l in 1..spec.depth {
        nodes.push(if l <= coord.layer { coord.row } else { coord.col });
    }
    if coord.layer == last {
        nodes.push(coord.col);
    } else {
        nodes.push(coord.col % spec.output_dim);
    }
    PathIndex(nodes)
}

/// Construct the full basis-path set for a topology.
///
/// Equal hidden widths are guaranteed by `NetworkSpec` itself; topologies
/// with unequal hidden widths are not representable.
pub fn enumerate_basis_paths(spec: &NetworkSpec) -> BasisPathSet {
    let negative: Vec<PathIndex> = (0..spec.hidden_width).map(|i| negative_path(spec, i)).collect();
    let mut positive = Vec::new();
    let mut owner = HashMap::new();
    let m = negative.len();
    for l in 0..spec.depth {
        let (rows, cols) = spec.weight_shape(l);
        for row in 0..rows {
            for col in 0..cols {
                let coord = WeightCoord { layer: l, row, col };
                if !is_skeleton(spec, coord) {
                    owner.insert(coord, m + positive.len());
                    positive.push(positive_path(spec, coord));
                }
            }
        }
    }
    BasisPathSet { spec: *spec, negative, positive, owner }
}

/// Product of the L weights along a path.
pub fn path_value(net: &Network, path: &PathIndex) -> f64 {
    path.weight_coords().map(|c| net.weight(c.layer).get(c.row, c.col)).product()
}

/// Number of non-skeleton weights on a path.
pub fn nonskeleton_count(spec: &NetworkSpec, path: &PathIndex) -> usize {
    path.weight_coords().filter(|&c| !is_skeleton(spec, c)).count()
}

/// Integer exponent vector expressing one path over the basis.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PathDecomposition {
    /// Basis-path id -> exponent; only nonzero exponents are stored.
    pub alpha: BTreeMap<usize, i64>,
    /// Count of non-skeleton weights on the decomposed path.
    pub b: usize,
}

impl PathDecomposition {
    /// Sum of exponents over negative basis paths.
    pub fn negative_sum(&self, m: usize) -> i64 {
        self.alpha.iter().filter(|(&id, _)| id < m).map(|(_, &a)| a).sum()
    }

    /// Sum of exponents over positive basis paths.
    pub fn positive_sum(&self, m: usize) -> i64 {
        self.alpha.iter().filter(|(&id, _)| id >= m).map(|(_, &a)| a).sum()
    }
}

/// Decompose a path over the basis: `value(path) = prod_i value(basis_i)^alpha_i`
/// for any weight assignment with nonzero skeleton weights.
///
/// Purely combinatorial. Each non-skeleton weight on the path contributes +1
/// on its owning positive basis path; the remaining all-skeleton monomial is
/// resolved over the negative basis paths (each input-layer skeleton column
/// pins its hidden unit's exponent).
pub fn decompose(path: &PathIndex, basis: &BasisPathSet) -> Result<PathDecomposition> {
    let spec = basis.spec();
    path.validate(spec)?;

    let mut alpha: BTreeMap<usize, i64> = BTreeMap::new();
    let mut residual: HashMap<WeightCoord, i64> = HashMap::new();
    for c in path.weight_coords() {
        *residual.entry(c).or_insert(0) += 1;
    }

    let mut b = 0usize;
    for c in path.weight_coords() {
        if !is_skeleton(spec, c) {
            b += 1;
            let id = basis
                .owner_of(c)
                .ok_or_else(|| Error::Domain(format!("no owner for non-skeleton weight {:?}", c)))?;
            *alpha.entry(id).or_insert(0) += 1;
            for oc in basis.path_by_id(id).weight_coords() {
                *residual.entry(oc).or_insert(0) -= 1;
            }
        }
    }

    // The residual is a monomial in skeleton weights only. Negative basis
    // path i is the unique negative path using input column i, so its
    // exponent is pinned by the residual there.
    for i in 0..spec.hidden_width {
        let hook = WeightCoord { layer: 0, row: i % spec.input_dim, col: i };
        let e = residual.get(&hook).copied().unwrap_or(0);
        if e != 0 {
            *alpha.entry(i).or_insert(0) += e;
            for nc in basis.path_by_id(i).weight_coords() {
                *residual.entry(nc).or_insert(0) -= e;
            }
        }
    }
    if residual.values().any(|&e| e != 0) {
        return Err(Error::Domain("decomposition residual nonzero".into()));
    }
    alpha.retain(|_, a| *a != 0);
    Ok(PathDecomposition { alpha, b })
}

/// Evaluate `prod basis_value^alpha` for a decomposition.
///
/// Errors when a basis value raised to a negative exponent is zero.
pub fn reconstruct_value(decomp: &PathDecomposition, basis: &BasisPathSet, net: &Network) -> Result<f64> {
    let mut value = 1.0;
    for (&id, &a) in &decomp.alpha {
        let v = path_value(net, basis.path_by_id(id));
        if v == 0.0 && a < 0 {
            return Err(Error::DegenerateSkeleton { index: id });
        }
        value *= v.powi(a as i32);
    }
    Ok(value)
}

/// Count of paths with exactly `b` non-skeleton weights, from the closed-form
/// counting formula.
///
/// The formula carries no dependence on the output dimension; it matches
/// exhaustive enumeration for K = 1 topologies and should be read as
/// per-output for K > 1 (enumeration is the ground truth there).
pub fn count_paths_with_b_nonskeleton(b: usize, spec: &NetworkSpec) -> Result<u128> {
    let l = spec.depth;
    let d = spec.input_dim as u128;
    let h = spec.hidden_width as u128;
    if b > l - 1 {
        return Err(Error::Domain(format!("b = {} out of range 0..={}", b, l - 1)));
    }
    Ok(if b == 0 {
        h
    } else if b == l - 1 {
        (d - 1) * h * (h - 1).pow((l - 2) as u32)
    } else {
        (d - 1) * h * binomial(l - 2, b - 1) * (h - 1).pow((b - 1) as u32)
            + h * binomial(l - 2, b) * (h - 1).pow(b as u32)
    })
}

fn binomial(n: usize, k: usize) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc * (n - i) as u128 / (i + 1) as u128;
    }
    acc
}

/// Enumerate every path of the topology, in lexicographic node order.
///
/// Refuses above the cap (pass `None` for the default 10^6).
pub fn enumerate_all_paths(spec: &NetworkSpec, cap: Option<u128>) -> Result<Vec<PathIndex>> {
    let cap = cap.unwrap_or(DEFAULT_PATH_CAP);
    let count = spec.total_paths();
    if count > cap {
        return Err(Error::EnumerationTooLarge { count, cap });
    }
    let mut paths = Vec::with_capacity(count as usize);
    let mut nodes = vec![0usize; spec.depth + 1];
    loop {
        paths.push(PathIndex(nodes.clone()));
        // odometer increment
        let mut l = spec.depth + 1;
        loop {
            if l == 0 {
                return Ok(paths);
            }
            l -= 1;
            nodes[l] += 1;
            if nodes[l] < spec.layer_size(l) {
                break;
            }
            nodes[l] = 0;
        }
    }
}

/// Build a network with prescribed basis-path values: skeleton weights carry
/// the negative values on the input hookups (1 elsewhere), and each
/// non-skeleton weight is solved so its owning positive path takes the
/// requested value.
///
/// Errors with degenerate-skeleton when a needed negative value is zero.
pub fn network_from_basis_values(
    spec: &NetworkSpec,
    basis: &BasisPathSet,
    negative_values: &[f64],
    positive_values: &[f64],
) -> Result<Network> {
    if negative_values.len() != basis.num_negative()
        || positive_values.len() != basis.num_total() - basis.num_negative()
    {
        return Err(Error::Domain("basis value vector lengths do not match basis set".into()));
    }
    let mut weights: Vec<Matrix> = (0..spec.depth)
        .map(|l| {
            let (r, c) = spec.weight_shape(l);
            Matrix::zeros(r, c)
        })
        .collect();
    // skeleton assignment: input hookup for hidden unit i carries the whole
    // negative value, every other skeleton weight is 1
    for i in 0..spec.hidden_width {
        weights[0].set(i % spec.input_dim, i, negative_values[i]);
    }
    for l in 1..spec.depth {
        let (rows, cols) = spec.weight_shape(l);
        for row in 0..rows {
            for col in 0..cols {
                let coord = WeightCoord { layer: l, row, col };
                if is_skeleton(spec, coord) {
                    weights[l].set(row, col, 1.0);
                }
            }
        }
    }
    // non-skeleton weights: divide out the skeleton part of the owner path
    let m = basis.num_negative();
    for l in 0..spec.depth {
        let (rows, cols) = spec.weight_shape(l);
        for row in 0..rows {
            for col in 0..cols {
                let coord = WeightCoord { layer: l, row, col };
                if is_skeleton(spec, coord) {
                    continue;
                }
                let id = basis.owner_of(coord).expect("owner map covers non-skeleton weights");
                let target = positive_values[id - m];
                let w = if l == 0 {
                    target
                } else {
                    let neg = negative_values[row];
                    if neg == 0.0 {
                        return Err(Error::DegenerateSkeleton { index: row });
                    }
                    target / neg
                };
                weights[l].set(row, col, w);
            }
        }
    }
    Network::new(*spec, weights)
}
