//! Capacity measures and bound evaluation: BP norm, path norm, weight-norm
//! and spectral baselines, the BP measure `Phi(gamma; d, H, L)`, the
//! generalization-bound evaluator, and norm-axiom checkers.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::network::{Network, NetworkSpec};
use crate::pathspace::{count_paths_with_b_nonskeleton, path_value, BasisPathSet};

/// Values of the basis paths of one network: negative (all-skeleton) values
/// first, then positive values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BasisPathValues {
    pub negative: Vec<f64>,
    pub positive: Vec<f64>,
}

impl BasisPathValues {
    pub fn from_network(net: &Network, basis: &BasisPathSet) -> Self {
        BasisPathValues {
            negative: basis.negative().iter().map(|p| path_value(net, p)).collect(),
            positive: basis.positive().iter().map(|p| path_value(net, p)).collect(),
        }
    }
}

/// BP norm: sup of `|log|p_i||` over negative basis values and `|p_j|` over
/// positive basis values.
///
/// An empty positive set (d=H=K=1 topologies) simply contributes nothing to
/// the sup. Errors when a negative basis value is zero.
pub fn bp_norm(values: &BasisPathValues) -> Result<f64> {
    let mut sup = 0.0f64;
    for (i, &v) in values.negative.iter().enumerate() {
        if v == 0.0 {
            return Err(Error::DegenerateSkeleton { index: i });
        }
        sup = sup.max(v.abs().ln().abs());
    }
    for &v in &values.positive {
        sup = sup.max(v.abs());
    }
    Ok(sup)
}

/// Path norm: Euclidean norm of the vector of all M path values, computed by
/// the exact product-form identity (an all-ones pass through the network with
/// every weight squared and no activation).
pub fn path_norm(net: &Network) -> f64 {
    let spec = net.spec();
    let mut v = vec![1.0f64; spec.input_dim];
    for l in 0..spec.depth {
        let w = net.weight(l);
        let mut next = vec![0.0; w.cols];
        for i in 0..w.rows {
            let vi = v[i];
            for j in 0..w.cols {
                let wij = w.get(i, j);
                next[j] += vi * wij * wij;
            }
        }
        v = next;
    }
    v.iter().sum::<f64>().sqrt()
}

/// Square root of the sum of all squared weights.
pub fn weight_l2_norm(net: &Network) -> f64 {
    net.weights()
        .iter()
        .map(|w| w.as_slice().iter().map(|&v| v * v).sum::<f64>())
        .sum::<f64>()
        .sqrt()
}

/// Largest singular value of one weight matrix via power iteration on
/// `W^T W`.
pub fn spectral_norm(w: &crate::network::Matrix, tol: f64, max_iters: usize) -> f64 {
    let n = w.cols;
    if n == 0 || w.rows == 0 {
        return 0.0;
    }
    // deterministic start with a mild tilt so we are not orthogonal to the
    // top singular direction
    let mut v: Vec<f64> = (0..n).map(|i| 1.0 + (i as f64 + 1.0) * 1e-3).collect();
    normalize(&mut v);
    let mut sigma = 0.0f64;
    for _ in 0..max_iters {
        // u = W v; v_next = W^T u
        let mut u = vec![0.0; w.rows];
        for i in 0..w.rows {
            let mut acc = 0.0;
            for j in 0..n {
                acc += w.get(i, j) * v[j];
            }
            u[i] = acc;
        }
        let mut next = vec![0.0; n];
        for i in 0..w.rows {
            let ui = u[i];
            if ui != 0.0 {
                for j in 0..n {
                    next[j] += w.get(i, j) * ui;
                }
            }
        }
        let norm = normalize(&mut next);
        if norm == 0.0 {
            return 0.0;
        }
        let new_sigma = norm.sqrt();
        let done = (new_sigma - sigma).abs() <= tol * new_sigma.max(1.0);
        sigma = new_sigma;
        v = next;
        if done {
            break;
        }
    }
    sigma
}

fn normalize(v: &mut [f64]) -> f64 {
    let norm = v.iter().map(|&x| x * x).sum::<f64>().sqrt();
    if norm > 0.0 {
        for x in v.iter_mut() {
            *x /= norm;
        }
    }
    norm
}

/// Product of per-layer spectral norms. A proxy baseline, not a
/// margin-normalized spectral complexity.
pub fn spectral_proxy(net: &Network) -> f64 {
    net.weights().iter().map(|w| spectral_norm(w, 1e-8, 1000)).product()
}

/// BP measure `Phi(gamma; d, H, L) =
/// (H e^{2 gamma} + (d-1) H gamma^2) (1 + (H-1) gamma^2 e^{2 gamma})^{L-2}`.
pub fn bp_measure(gamma: f64, d: usize, h: usize, l: usize) -> f64 {
    let (df, hf) = (d as f64, h as f64);
    let e2g = (2.0 * gamma).exp();
    (hf * e2g + (df - 1.0) * hf * gamma * gamma)
        * (1.0 + (hf - 1.0) * gamma * gamma * e2g).powi(l as i32 - 2)
}

/// Upper bound `e^{gamma (b-1)} gamma^b` on the absolute value of a path
/// with `b` non-skeleton weights, for networks with BP norm at most gamma.
pub fn path_value_bound(gamma: f64, b: usize) -> f64 {
    (gamma * (b as f64 - 1.0)).exp() * gamma.powi(b as i32)
}

/// Diagnostics for the chain `Omega^2 <= term sum <= Phi`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OmegaBound {
    /// The closed-form bound `Phi(gamma; d, H, L)`.
    pub phi: f64,
    /// `sum_b count(b) * (gamma^b e^{gamma(b-1)})^2` with the b=0 term
    /// bounded by `H e^{2 gamma}`; always <= phi.
    pub term_sum: f64,
    /// The binomial expansion of the closed form, summed term by term;
    /// equals phi up to rounding.
    pub expansion_sum: f64,
}

/// Evaluate the bound `Omega^2 <= Phi` together with its per-b diagnostic
/// sum.
pub fn omega_upper_bound(gamma: f64, spec: &NetworkSpec) -> Result<OmegaBound> {
    let (d, h, l) = (spec.input_dim, spec.hidden_width, spec.depth);
    let phi = bp_measure(gamma, d, h, l);

    let mut term_sum = h as f64 * (2.0 * gamma).exp();
    for b in 1..l {
        let count = count_paths_with_b_nonskeleton(b, spec)? as f64;
        let bound = path_value_bound(gamma, b);
        term_sum += count * bound * bound;
    }

    let (df, hf) = (d as f64, h as f64);
    let e2g = (2.0 * gamma).exp();
    let front = hf * e2g + (df - 1.0) * hf * gamma * gamma;
    let mut expansion_sum = 0.0;
    for b in 0..=l.saturating_sub(2) {
        expansion_sum += front
            * binomial_f64(l - 2, b)
            * (hf - 1.0).powi(b as i32)
            * (gamma * gamma * e2g).powi(b as i32);
    }
    Ok(OmegaBound { phi, term_sum, expansion_sum })
}

fn binomial_f64(n: usize, k: usize) -> f64 {
    if k > n {
        return 0.0;
    }
    let k = k.min(n - k);
    let mut acc = 1.0f64;
    for i in 0..k {
        acc = acc * (n - i) as f64 / (i + 1) as f64;
    }
    acc
}

/// Parameters of the generalization-bound evaluator beyond the topology.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundParams {
    /// Training-set size.
    pub n: usize,
    /// Confidence level; the bound holds with probability 1 - delta.
    pub delta: f64,
    /// Euclidean norm of the linear operator on the network output.
    pub v_norm: f64,
    /// Largest Euclidean norm among the inputs.
    pub x_norm_max: f64,
}

impl Default for BoundParams {
    fn default() -> Self {
        BoundParams { n: 1000, delta: 0.05, v_norm: 1.0, x_norm_max: 1.0 }
    }
}

/// Generalization-error bound:
/// `4 sqrt(2 ln(4/delta) / n)
///  + 2 sqrt(2 Phi (4H)^{L-1} |v|^2 max|x|^2 / n)`.
pub fn theorem2_bound(gamma: f64, d: usize, h: usize, l: usize, params: &BoundParams) -> Result<f64> {
    if params.n == 0 {
        return Err(Error::Domain("n must be >= 1".into()));
    }
    if !(params.delta > 0.0 && params.delta < 1.0) {
        return Err(Error::Domain(format!("delta must be in (0,1), got {}", params.delta)));
    }
    let n = params.n as f64;
    let phi = bp_measure(gamma, d, h, l);
    let first = 4.0 * (2.0 * (4.0 / params.delta).ln() / n).sqrt();
    let second = 2.0
        * (2.0 * phi * (4.0 * h as f64).powi(l as i32 - 1)
            * params.v_norm
            * params.v_norm
            * params.x_norm_max
            * params.x_norm_max
            / n)
            .sqrt();
    Ok(first + second)
}

/// All computed capacity measures for one network.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CapacityReport {
    pub spec: NetworkSpec,
    /// BP norm of the network; also the gamma fed to the BP measure below.
    pub bp_norm: f64,
    pub path_norm: f64,
    pub l2_weight_norm: f64,
    pub spectral_proxy: f64,
    pub bp_measure: f64,
    pub theorem2_bound: f64,
    pub params: BoundParams,
}

impl CapacityReport {
    pub fn compute(net: &Network, basis: &BasisPathSet, params: &BoundParams) -> Result<Self> {
        let spec = *net.spec();
        let values = BasisPathValues::from_network(net, basis);
        let gamma = bp_norm(&values)?;
        let phi = bp_measure(gamma, spec.input_dim, spec.hidden_width, spec.depth);
        let bound = theorem2_bound(gamma, spec.input_dim, spec.hidden_width, spec.depth, params)?;
        Ok(CapacityReport {
            spec,
            bp_norm: gamma,
            path_norm: path_norm(net),
            l2_weight_norm: weight_l2_norm(net),
            spectral_proxy: spectral_proxy(net),
            bp_measure: phi,
            theorem2_bound: bound,
            params: *params,
        })
    }
}

/// `phi_inf` over the negative part alone: sup |log|p_i||.
pub fn phi_inf_negative(values: &[f64]) -> Result<f64> {
    let mut sup = 0.0f64;
    for (i, &v) in values.iter().enumerate() {
        if v == 0.0 {
            return Err(Error::DegenerateSkeleton { index: i });
        }
        sup = sup.max(v.abs().ln().abs());
    }
    Ok(sup)
}

/// Result of the randomized norm-axiom check.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NormAxiomReport {
    pub checks: usize,
    /// Most negative slack observed across all axiom inequalities; a norm
    /// has slack >= 0 up to rounding.
    pub min_slack: f64,
    pub identity_at_ones: bool,
}

impl NormAxiomReport {
    pub fn passed(&self, tolerance: f64) -> bool {
        self.identity_at_ones && self.min_slack >= -tolerance
    }
}

/// Verify the norm axioms on randomized inputs: positive definiteness at the
/// all-ones vector, absolute homogeneity under generalized scalar
/// multiplication `c (.) p^- = sgn(p) |p|^c`, the triangle inequality under
/// generalized addition `p^- (+) q^- = p * q` element-wise, and the standard
/// l_inf axioms on the positive part.
pub fn check_norm_axioms<R: rand::Rng>(len: usize, samples: usize, rng: &mut R) -> NormAxiomReport {
    let mut min_slack = f64::INFINITY;
    let ones = vec![1.0; len];
    let identity_at_ones = phi_inf_negative(&ones).unwrap() == 0.0;

    let draw = |rng: &mut R| -> Vec<f64> {
        (0..len)
            .map(|_| {
                let mag = rng.random_range(0.05f64..4.0);
                if rng.random_bool(0.5) {
                    mag
                } else {
                    -mag
                }
            })
            .collect()
    };

    for _ in 0..samples {
        let p = draw(rng);
        let q = draw(rng);
        let c: f64 = rng.random_range(-3.0..3.0);

        let phi_p = phi_inf_negative(&p).unwrap();
        let phi_q = phi_inf_negative(&q).unwrap();

        // positive definiteness: phi >= 0
        min_slack = min_slack.min(phi_p);

        // homogeneity: phi(c (.) p) == |c| phi(p); slack measured both ways
        let scaled: Vec<f64> = p.iter().map(|&v| v.signum() * v.abs().powf(c)).collect();
        let phi_scaled = phi_inf_negative(&scaled).unwrap();
        let hom_err = (phi_scaled - c.abs() * phi_p).abs();
        min_slack = min_slack.min(1e-9 * phi_p.max(1.0) - hom_err);

        // triangle inequality on the generalized sum
        let sum: Vec<f64> = p.iter().zip(&q).map(|(&a, &b)| a * b).collect();
        let phi_sum = phi_inf_negative(&sum).unwrap();
        min_slack = min_slack.min(phi_p + phi_q - phi_sum);

        // standard l_inf on the positive part
        let linf = |v: &[f64]| v.iter().fold(0.0f64, |acc, &x| acc.max(x.abs()));
        let tri = linf(&p) + linf(&q) - linf(&p.iter().zip(&q).map(|(a, b)| a + b).collect::<Vec<_>>());
        min_slack = min_slack.min(tri);
        let hom = (linf(&p.iter().map(|&v| c * v).collect::<Vec<_>>()) - c.abs() * linf(&p)).abs();
        min_slack = min_slack.min(1e-9 * linf(&p).max(1.0) - hom);
    }

    NormAxiomReport { checks: samples, min_slack, identity_at_ones }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::network::{forward, Matrix, Network};
    use crate::pathspace::{enumerate_all_paths, enumerate_basis_paths, network_from_basis_values};
    use crate::testutil::{random_network, random_network_in, random_vector, rel_err};
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn spec(l: usize, d: usize, h: usize, k: usize) -> NetworkSpec {
        NetworkSpec::new(l, d, h, k).unwrap()
    }

    #[test]
    fn bp_norm_all_ones() {
        let values = BasisPathValues { negative: vec![1.0, 1.0], positive: vec![1.0, 1.0, 1.0] };
        assert_eq!(bp_norm(&values).unwrap(), 1.0);
    }

    #[test]
    fn bp_norm_log_dominates() {
        let e2 = std::f64::consts::E.powi(2);
        let values = BasisPathValues { negative: vec![e2, 1.0], positive: vec![0.5] };
        assert!((bp_norm(&values).unwrap() - 2.0).abs() < 1e-12);
    }

    #[test]
    fn bp_norm_zero_negative_rejected() {
        let values = BasisPathValues { negative: vec![1.0, 0.0], positive: vec![] };
        assert!(matches!(bp_norm(&values), Err(Error::DegenerateSkeleton { index: 1 })));
    }

    #[test]
    fn bp_norm_empty_positive() {
        let values = BasisPathValues { negative: vec![1.0], positive: vec![] };
        assert_eq!(bp_norm(&values).unwrap(), 0.0);
    }

    #[test]
    fn bp_norm_rescaling_invariant() {
        let s = spec(3, 3, 4, 2);
        let basis = enumerate_basis_paths(&s);
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        let net = random_network_in(s, 0.5, 2.0, &mut rng);
        let phi0 = bp_norm(&BasisPathValues::from_network(&net, &basis)).unwrap();
        let mut rescaled = net.clone();
        rescaled.rescale_node(1, 1, 2.5).unwrap();
        rescaled.rescale_node(2, 3, 0.3).unwrap();
        let phi1 = bp_norm(&BasisPathValues::from_network(&rescaled, &basis)).unwrap();
        assert!(rel_err(phi0, phi1) < 1e-9);
    }

    #[test]
    fn path_norm_all_ones_is_sqrt_m() {
        let s = spec(3, 3, 4, 2);
        let ones = Network::new(
            s,
            (0..3)
                .map(|l| {
                    let (r, c) = s.weight_shape(l);
                    Matrix::from_vec(r, c, vec![1.0; r * c]).unwrap()
                })
                .collect(),
        )
        .unwrap();
        let m = s.total_paths() as f64;
        assert!(rel_err(path_norm(&ones), m.sqrt()) < 1e-12);
    }

    #[test]
    fn path_norm_single_path() {
        let s = spec(2, 1, 1, 1);
        let net = Network::new(
            s,
            vec![
                Matrix::from_vec(1, 1, vec![-1.5]).unwrap(),
                Matrix::from_vec(1, 1, vec![2.0]).unwrap(),
            ],
        )
        .unwrap();
        assert!((path_norm(&net) - 3.0).abs() < 1e-12);
    }

    #[test]
    fn path_norm_matches_brute_force() {
        let s = spec(3, 3, 4, 2);
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        let net = random_network(s, &mut rng);
        let brute: f64 = enumerate_all_paths(&s, None)
            .unwrap()
            .iter()
            .map(|p| path_value(&net, p).powi(2))
            .sum::<f64>()
            .sqrt();
        assert!(rel_err(path_norm(&net), brute) < 1e-9);
    }

    #[test]
    fn norms_on_identity_layers() {
        let s = spec(2, 1, 1, 1);
        let net = Network::new(
            s,
            vec![Matrix::from_vec(1, 1, vec![1.0]).unwrap(), Matrix::from_vec(1, 1, vec![1.0]).unwrap()],
        )
        .unwrap();
        assert!((weight_l2_norm(&net) - 2.0f64.sqrt()).abs() < 1e-12);
        assert!((spectral_proxy(&net) - 1.0).abs() < 1e-8);
    }

    #[test]
    fn spectral_norm_diagonal() {
        let m = Matrix::from_vec(2, 2, vec![3.0, 0.0, 0.0, 2.0]).unwrap();
        assert!((spectral_norm(&m, 1e-10, 1000) - 3.0).abs() < 1e-8);
    }

    #[test]
    fn spectral_norm_matches_svd_oracle() {
        // oracle: sigma_max^2 is the largest eigenvalue of W^T W, found by
        // dense characteristic scanning on small matrices via Jacobi sweeps
        let mut rng = ChaCha8Rng::seed_from_u64(47);
        for _ in 0..20 {
            let rows = rng.random_range(1..=8);
            let cols = rng.random_range(1..=8);
            let data: Vec<f64> = (0..rows * cols).map(|_| rng.random_range(-2.0..2.0)).collect();
            let m = Matrix::from_vec(rows, cols, data).unwrap();
            let sigma = spectral_norm(&m, 1e-10, 10_000);
            let oracle = jacobi_sigma_max(&m);
            assert!(rel_err(sigma, oracle) < 1e-6, "{} vs {}", sigma, oracle);
        }
    }

    /// Jacobi eigenvalue sweep on the Gram matrix; independent of the power
    /// iteration path.
    fn jacobi_sigma_max(w: &Matrix) -> f64 {
        let n = w.cols;
        let mut a = vec![0.0f64; n * n];
        for i in 0..n {
            for j in 0..n {
                let mut acc = 0.0;
                for k in 0..w.rows {
                    acc += w.get(k, i) * w.get(k, j);
                }
                a[i * n + j] = acc;
            }
        }
        for _ in 0..100 {
            let mut off = 0.0;
            for p in 0..n {
                for q in p + 1..n {
                    off += a[p * n + q].abs();
                }
            }
            if off < 1e-14 {
                break;
            }
            for p in 0..n {
                for q in p + 1..n {
                    let apq = a[p * n + q];
                    if apq.abs() < 1e-300 {
                        continue;
                    }
                    let theta = 0.5 * (a[q * n + q] - a[p * n + p]) / apq;
                    let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                    let c = 1.0 / (t * t + 1.0).sqrt();
                    let s = t * c;
                    for k in 0..n {
                        let akp = a[k * n + p];
                        let akq = a[k * n + q];
                        a[k * n + p] = c * akp - s * akq;
                        a[k * n + q] = s * akp + c * akq;
                    }
                    for k in 0..n {
                        let apk = a[p * n + k];
                        let aqk = a[q * n + k];
                        a[p * n + k] = c * apk - s * aqk;
                        a[q * n + k] = s * apk + c * aqk;
                    }
                }
            }
        }
        (0..n).map(|i| a[i * n + i]).fold(0.0f64, f64::max).max(0.0).sqrt()
    }

    #[test]
    fn bp_measure_at_zero_is_h() {
        for (d, h, l) in [(1, 1, 2), (3, 4, 2), (2, 8, 5), (5, 3, 3)] {
            assert_eq!(bp_measure(0.0, d, h, l), h as f64);
        }
    }

    #[test]
    fn bp_measure_monotone_in_gamma() {
        let mut prev = 0.0;
        for i in 0..50 {
            let gamma = i as f64 * 0.1;
            let phi = bp_measure(gamma, 3, 4, 3);
            assert!(phi >= prev);
            prev = phi;
        }
    }

    #[test]
    fn bp_measure_d1_closed_form() {
        let (h, l) = (4usize, 4usize);
        for i in 0..20 {
            let gamma = i as f64 * 0.17;
            let hf = h as f64;
            let expect = hf
                * (2.0 * gamma).exp()
                * (1.0 + (hf - 1.0) * gamma * gamma * (2.0 * gamma).exp()).powi(l as i32 - 2);
            assert!(rel_err(bp_measure(gamma, 1, h, l), expect) < 1e-12);
        }
    }

    #[test]
    fn omega_bound_diagnostics() {
        let s = spec(3, 2, 2, 1);
        for i in 0..20 {
            let gamma = i as f64 * 0.13;
            let ob = omega_upper_bound(gamma, &s).unwrap();
            assert!(ob.term_sum <= ob.phi * (1.0 + 1e-12));
            assert!(rel_err(ob.expansion_sum, ob.phi) < 1e-9);
        }
        // at gamma = 0 only the b=0 negative-basis term survives
        let ob = omega_upper_bound(0.0, &s).unwrap();
        assert_eq!(ob.phi, 2.0);
        assert_eq!(ob.term_sum, 2.0);
    }

    #[test]
    fn omega_squared_below_phi_for_constructed_nets() {
        // K = 1: the closed-form bound carries no output dimension and only
        // covers the single-output path population
        let mut rng = ChaCha8Rng::seed_from_u64(61);
        for _ in 0..100 {
            let s = spec(rng.random_range(2..5), rng.random_range(1..4), rng.random_range(1..5), 1);
            let basis = enumerate_basis_paths(&s);
            let gamma: f64 = rng.random_range(0.05..1.0);
            let m = basis.num_negative();
            // basis values clipped to the gamma-ball of the BP norm
            let neg: Vec<f64> =
                (0..m).map(|_| rng.random_range(-gamma..gamma).exp()).collect();
            let pos: Vec<f64> = (0..basis.num_total() - m)
                .map(|_| rng.random_range(-gamma..gamma))
                .collect();
            let net = network_from_basis_values(&s, &basis, &neg, &pos).unwrap();
            let phi_val = bp_norm(&BasisPathValues::from_network(&net, &basis)).unwrap();
            assert!(phi_val <= gamma + 1e-9);
            let omega = path_norm(&net);
            let bound = bp_measure(gamma, s.input_dim, s.hidden_width, s.depth);
            assert!(
                omega * omega <= bound * (1.0 + 1e-9),
                "Omega^2 {} > Phi {} for {:?}",
                omega * omega,
                bound,
                s
            );
        }
    }

    #[test]
    fn theorem2_bound_basics() {
        let params = BoundParams { n: 1000, delta: 0.05, v_norm: 0.0, x_norm_max: 1.0 };
        let b = theorem2_bound(0.5, 3, 4, 3, &params).unwrap();
        let expect = 4.0 * (2.0 * (4.0f64 / 0.05).ln() / 1000.0).sqrt();
        assert!(rel_err(b, expect) < 1e-12);

        // strictly decreasing in n
        let mut prev = f64::INFINITY;
        for n in [10, 100, 1000, 10_000] {
            let p = BoundParams { n, delta: 0.05, v_norm: 1.0, x_norm_max: 1.0 };
            let v = theorem2_bound(0.5, 3, 4, 3, &p).unwrap();
            assert!(v < prev);
            prev = v;
        }

        // doubling H multiplies the (4H)^(L-1) factor by 2^(L-1)
        let p = BoundParams { n: 1000, delta: 0.05, v_norm: 1.0, x_norm_max: 1.0 };
        let l = 3;
        let b1 = theorem2_bound(0.3, 3, 4, l, &p).unwrap() - theorem2_bound(0.3, 3, 4, l, &BoundParams { v_norm: 0.0, ..p }).unwrap();
        let phi1 = bp_measure(0.3, 3, 4, l);
        let phi2 = bp_measure(0.3, 3, 8, l);
        let b2 = theorem2_bound(0.3, 3, 8, l, &p).unwrap() - theorem2_bound(0.3, 3, 8, l, &BoundParams { v_norm: 0.0, ..p }).unwrap();
        let ratio = b2 / b1;
        let expect_ratio = (phi2 / phi1).sqrt() * 2.0f64.powi(l as i32 - 1).sqrt() as f64;
        assert!(rel_err(ratio, expect_ratio) < 1e-9);
    }

    #[test]
    fn theorem2_bound_domain_errors() {
        let p = BoundParams { n: 1000, delta: 1.5, v_norm: 1.0, x_norm_max: 1.0 };
        assert!(theorem2_bound(0.5, 3, 4, 3, &p).is_err());
        let p = BoundParams { n: 0, delta: 0.05, v_norm: 1.0, x_norm_max: 1.0 };
        assert!(theorem2_bound(0.5, 3, 4, 3, &p).is_err());
    }

    #[test]
    fn norm_axioms_hold() {
        let mut rng = ChaCha8Rng::seed_from_u64(77);
        let report = check_norm_axioms(6, 10_000, &mut rng);
        assert!(report.passed(1e-12), "min slack {}", report.min_slack);
    }

    #[test]
    fn phi_inf_examples() {
        assert_eq!(phi_inf_negative(&[1.0, 1.0, 1.0]).unwrap(), 0.0);
        // c = 2 applied to (e, 1/e) gives (e^2, e^-2): phi_inf = 2
        let e = std::f64::consts::E;
        let scaled = [e * e, 1.0 / (e * e)];
        assert!((phi_inf_negative(&scaled).unwrap() - 2.0).abs() < 1e-12);
    }

    #[test]
    fn rescaling_changes_l2_but_not_measures() {
        let s = spec(3, 3, 4, 2);
        let basis = enumerate_basis_paths(&s);
        let mut rng = ChaCha8Rng::seed_from_u64(83);
        let net = random_network_in(s, 0.5, 2.0, &mut rng);
        let x = random_vector(3, &mut rng);
        let phi0 = bp_norm(&BasisPathValues::from_network(&net, &basis)).unwrap();
        let omega0 = path_norm(&net);
        let l2_0 = weight_l2_norm(&net);
        let out0 = forward(&net, &x).unwrap().0;

        let mut rescaled = net.clone();
        rescaled.rescale_node(1, 0, 4.0).unwrap();
        let phi1 = bp_norm(&BasisPathValues::from_network(&rescaled, &basis)).unwrap();
        let omega1 = path_norm(&rescaled);
        let l2_1 = weight_l2_norm(&rescaled);
        let out1 = forward(&rescaled, &x).unwrap().0;

        assert!(rel_err(phi0, phi1) < 1e-9);
        assert!(rel_err(omega0, omega1) < 1e-9);
        assert!((l2_0 - l2_1).abs() > 1e-6, "l2 should change under rescaling");
        for (a, b) in out0.iter().zip(&out1) {
            assert!(rel_err(*a, *b) < 1e-9);
        }
    }
}
