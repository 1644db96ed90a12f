//! Network bodies and the flow-augmented model wrapper.
//!
//! The hybrid body computes
//!
//! ```text
//! x (2n) --pre, tanh--> t --×π--> a (2m) --circuit--> e = ⟨Z⟩ (m) --post--> ŷ (2n)
//! ```
//!
//! and the MLP body is a plain dense stack with the same endpoints. The
//! [`Model`] wrapper owns the grid case and the dataset normalization and
//! appends the from-side branch flows of the denormalized prediction, so its
//! full output is `[v̂; φ̂; p̂f; q̂f]` in normalized units.
//!
//! Gradients flow backward analytically through the dense layers and the
//! flow sensitivities, and through the circuit by the parameter-shift rule,
//! which stays exact under the noise channels.

use super::layer::{Activation, DenseSpec};
use super::params::{FlatParams, ParamLayout};
use super::ModelError;
use crate::powerflow::{branch_flow_sensitivities, branch_flows, Norms, PowerCase, Sample};
use crate::quantum::{
    evaluate_circuit, feature_shift_grad, param_shift_grad, CircuitSpec, NoiseSpec,
};
use rand::distributions::{Distribution, Uniform};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

/// The trainable body, without flow augmentation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NetKind {
    Hybrid {
        pre: DenseSpec,
        circuit: CircuitSpec,
        post: DenseSpec,
    },
    Mlp {
        layers: Vec<DenseSpec>,
    },
}

impl NetKind {
    pub fn input_dim(&self) -> usize {
        match self {
            NetKind::Hybrid { pre, .. } => pre.inputs,
            NetKind::Mlp { layers } => layers.first().map_or(0, |l| l.inputs),
        }
    }

    pub fn output_dim(&self) -> usize {
        match self {
            NetKind::Hybrid { post, .. } => post.outputs,
            NetKind::Mlp { layers } => layers.last().map_or(0, |l| l.outputs),
        }
    }

    pub fn param_count(&self) -> usize {
        match self {
            NetKind::Hybrid { pre, circuit, post } => {
                pre.param_count() + circuit.param_count() + post.param_count()
            }
            NetKind::Mlp { layers } => layers.iter().map(|l| l.param_count()).sum(),
        }
    }

    /// Named ranges in storage order.
    pub fn layout(&self) -> ParamLayout {
        match self {
            NetKind::Hybrid { pre, circuit, post } => ParamLayout::from_parts(&[
                ("pre.w", pre.weight_count()),
                ("pre.b", pre.bias_count()),
                ("quantum", circuit.param_count()),
                ("post.w", post.weight_count()),
                ("post.b", post.bias_count()),
            ]),
            NetKind::Mlp { layers } => {
                let mut parts = Vec::with_capacity(2 * layers.len());
                let names: Vec<(String, String)> = (0..layers.len())
                    .map(|i| (format!("layer{i}.w"), format!("layer{i}.b")))
                    .collect();
                for (layer, (wn, bn)) in layers.iter().zip(&names) {
                    parts.push((wn.as_str(), layer.weight_count()));
                    parts.push((bn.as_str(), layer.bias_count()));
                }
                ParamLayout::from_parts(&parts)
            }
        }
    }

    /// Checks the dimensional chain against a bus count.
    pub fn validate(&self, n_bus: usize) -> Result<(), ModelError> {
        let dim = 2 * n_bus;
        match self {
            NetKind::Hybrid { pre, circuit, post } => {
                circuit.validate()?;
                let m = circuit.m;
                if pre.inputs != dim
                    || pre.outputs != 2 * m
                    || pre.activation != Activation::Tanh
                    || post.inputs != m
                    || post.outputs != dim
                    || post.activation != Activation::Identity
                {
                    return Err(ModelError::BadShape(format!(
                        "hybrid chain must be {dim} -> {} -> {m} -> {dim} (tanh pre, identity post)",
                        2 * m
                    )));
                }
            }
            NetKind::Mlp { layers } => {
                if layers.is_empty() {
                    return Err(ModelError::BadShape("MLP needs at least one layer".into()));
                }
                let mut prev = dim;
                for (i, layer) in layers.iter().enumerate() {
                    if layer.inputs != prev {
                        return Err(ModelError::BadShape(format!(
                            "layer {i} expects {} inputs, previous width is {prev}",
                            layer.inputs
                        )));
                    }
                    let last = i + 1 == layers.len();
                    let want = if last { Activation::Identity } else { Activation::Tanh };
                    if layer.activation != want {
                        return Err(ModelError::BadShape(format!(
                            "layer {i} must use {want:?}"
                        )));
                    }
                    prev = layer.outputs;
                }
                if prev != dim {
                    return Err(ModelError::BadShape(format!(
                        "MLP ends at width {prev}, the model needs {dim}"
                    )));
                }
            }
        }
        Ok(())
    }

    fn forward(
        &self,
        values: &[f64],
        x: &[f64],
        noise: Option<&NoiseSpec>,
    ) -> Result<Vec<f64>, ModelError> {
        match self {
            NetKind::Hybrid { pre, circuit, post } => {
                let s = hybrid_slices(pre, circuit, post, values);
                let t = pre.forward(s.pre_w, s.pre_b, x);
                let a: Vec<f64> = t.iter().map(|ti| PI * ti).collect();
                let e = evaluate_circuit(&a, s.quantum, circuit, noise)?;
                Ok(post.forward(s.post_w, s.post_b, &e))
            }
            NetKind::Mlp { layers } => {
                let mut cur = x.to_vec();
                let mut off = 0;
                for layer in layers {
                    let w = &values[off..off + layer.weight_count()];
                    let b = &values[off + layer.weight_count()..off + layer.param_count()];
                    off += layer.param_count();
                    cur = layer.forward(w, b, &cur);
                }
                Ok(cur)
            }
        }
    }

    /// Gradient of `⟨g, forward(values, x)⟩` with respect to `values`.
    fn vjp(
        &self,
        values: &[f64],
        x: &[f64],
        noise: Option<&NoiseSpec>,
        g: &[f64],
    ) -> Result<Vec<f64>, ModelError> {
        match self {
            NetKind::Hybrid { pre, circuit, post } => {
                let s = hybrid_slices(pre, circuit, post, values);
                let t = pre.forward(s.pre_w, s.pre_b, x);
                let a: Vec<f64> = t.iter().map(|ti| PI * ti).collect();
                let e = evaluate_circuit(&a, s.quantum, circuit, noise)?;
                let y = post.forward(s.post_w, s.post_b, &e);

                let (g_post_w, g_post_b, ge) = post.backward(s.post_w, &e, &y, g);

                let mut g_quantum = vec![0.0; circuit.param_count()];
                for (j, gq) in g_quantum.iter_mut().enumerate() {
                    let dz = param_shift_grad(&a, s.quantum, circuit, noise, j)?;
                    *gq = dz.iter().zip(&ge).map(|(d, c)| d * c).sum();
                }
                let mut ga = vec![0.0; a.len()];
                for (i, gai) in ga.iter_mut().enumerate() {
                    let dz = feature_shift_grad(&a, s.quantum, circuit, noise, i)?;
                    *gai = PI * dz.iter().zip(&ge).map(|(d, c)| d * c).sum::<f64>();
                }
                let (g_pre_w, g_pre_b, _) = pre.backward(s.pre_w, x, &t, &ga);

                let mut grad = Vec::with_capacity(values.len());
                grad.extend(g_pre_w);
                grad.extend(g_pre_b);
                grad.extend(g_quantum);
                grad.extend(g_post_w);
                grad.extend(g_post_b);
                Ok(grad)
            }
            NetKind::Mlp { layers } => {
                // forward with per-layer caches, then straight backprop
                let mut acts: Vec<Vec<f64>> = Vec::with_capacity(layers.len() + 1);
                acts.push(x.to_vec());
                let mut offs = Vec::with_capacity(layers.len());
                let mut off = 0;
                for layer in layers {
                    offs.push(off);
                    let w = &values[off..off + layer.weight_count()];
                    let b = &values[off + layer.weight_count()..off + layer.param_count()];
                    off += layer.param_count();
                    let y = layer.forward(w, b, acts.last().unwrap());
                    acts.push(y);
                }
                let mut grad = vec![0.0; values.len()];
                let mut cot = g.to_vec();
                for (i, layer) in layers.iter().enumerate().rev() {
                    let off = offs[i];
                    let w = &values[off..off + layer.weight_count()];
                    let (gw, gb, gx) = layer.backward(w, &acts[i], &acts[i + 1], &cot);
                    grad[off..off + layer.weight_count()].copy_from_slice(&gw);
                    grad[off + layer.weight_count()..off + layer.param_count()]
                        .copy_from_slice(&gb);
                    cot = gx;
                }
                Ok(grad)
            }
        }
    }
}

struct HybridSlices<'a> {
    pre_w: &'a [f64],
    pre_b: &'a [f64],
    quantum: &'a [f64],
    post_w: &'a [f64],
    post_b: &'a [f64],
}

fn hybrid_slices<'a>(
    pre: &DenseSpec,
    circuit: &CircuitSpec,
    post: &DenseSpec,
    values: &'a [f64],
) -> HybridSlices<'a> {
    let (a, b) = (pre.weight_count(), pre.param_count());
    let c = b + circuit.param_count();
    let d = c + post.weight_count();
    HybridSlices {
        pre_w: &values[..a],
        pre_b: &values[a..b],
        quantum: &values[b..c],
        post_w: &values[c..d],
        post_b: &values[d..],
    }
}

/// Anything trainable by gradient descent or variational inference: a pure
/// map from a flat parameter vector and an input to an output vector, plus
/// the vector-Jacobian product `∇_params ⟨cotangent, f(params, x)⟩`.
pub trait Differentiable {
    fn param_count(&self) -> usize;
    fn output_dim(&self) -> usize;
    fn output(
        &self,
        params: &FlatParams,
        input: &[f64],
        noise: Option<&NoiseSpec>,
    ) -> Result<Vec<f64>, ModelError>;
    fn vjp(
        &self,
        params: &FlatParams,
        input: &[f64],
        noise: Option<&NoiseSpec>,
        cotangent: &[f64],
    ) -> Result<Vec<f64>, ModelError>;
}

/// A network body bound to a grid case and dataset normalization.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Model {
    pub net: NetKind,
    pub case: PowerCase,
    pub norms: Norms,
    /// Derived from `net`; stored so checkpoints carry the index map.
    pub layout: ParamLayout,
}

/// A split view of the model output, all in normalized units.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Prediction {
    pub v_hat: Vec<f64>,
    pub phi_hat: Vec<f64>,
    pub pf_hat: Vec<f64>,
    pub qf_hat: Vec<f64>,
}

impl Prediction {
    pub fn from_flat(out: &[f64], n_bus: usize, n_branch: usize) -> Self {
        let (n, nb) = (n_bus, n_branch);
        Prediction {
            v_hat: out[..n].to_vec(),
            phi_hat: out[n..2 * n].to_vec(),
            pf_hat: out[2 * n..2 * n + nb].to_vec(),
            qf_hat: out[2 * n + nb..].to_vec(),
        }
    }

    pub fn flat(&self) -> Vec<f64> {
        let mut out = self.v_hat.clone();
        out.extend(&self.phi_hat);
        out.extend(&self.pf_hat);
        out.extend(&self.qf_hat);
        out
    }
}

impl Model {
    pub fn new_hybrid(
        case: PowerCase,
        norms: Norms,
        m: usize,
        layers: usize,
    ) -> Result<Self, ModelError> {
        let dim = 2 * case.n_bus();
        let circuit = CircuitSpec::standard(m, layers)?;
        let net = NetKind::Hybrid {
            pre: DenseSpec::new(dim, 2 * m, Activation::Tanh),
            circuit,
            post: DenseSpec::new(m, dim, Activation::Identity),
        };
        Model::assemble(net, case, norms)
    }

    pub fn new_mlp(case: PowerCase, norms: Norms, widths: &[usize]) -> Result<Self, ModelError> {
        if widths.is_empty() {
            return Err(ModelError::BadShape("MLP widths must be nonempty".into()));
        }
        let dim = 2 * case.n_bus();
        let mut layers = Vec::with_capacity(widths.len() + 1);
        let mut prev = dim;
        for &w in widths {
            if w == 0 {
                return Err(ModelError::BadShape("MLP width 0".into()));
            }
            layers.push(DenseSpec::new(prev, w, Activation::Tanh));
            prev = w;
        }
        layers.push(DenseSpec::new(prev, dim, Activation::Identity));
        Model::assemble(NetKind::Mlp { layers }, case, norms)
    }

    /// Binds an existing body to a case, revalidating every dimension.
    pub fn assemble(net: NetKind, case: PowerCase, norms: Norms) -> Result<Self, ModelError> {
        net.validate(case.n_bus())?;
        let n = case.n_bus();
        let nb = case.n_branch();
        if norms.input_mean.len() != 2 * n
            || norms.input_scale.len() != 2 * n
            || norms.target_mean.len() != 2 * n + 2 * nb
            || norms.target_scale.len() != 2 * n + 2 * nb
        {
            return Err(ModelError::BadShape(format!(
                "normalization dims do not match a {n}-bus, {nb}-branch case"
            )));
        }
        let layout = net.layout();
        Ok(Model {
            net,
            case,
            norms,
            layout,
        })
    }

    pub fn n_bus(&self) -> usize {
        self.case.n_bus()
    }

    pub fn n_branch(&self) -> usize {
        self.case.n_branch()
    }

    pub fn input_dim(&self) -> usize {
        2 * self.n_bus()
    }

    /// Classical ranges draw uniform(±1/√fan_in), like a torch `Linear`;
    /// quantum angles draw uniform(−π, π). Order follows the layout.
    pub fn init_params(&self, seed: u64) -> FlatParams {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut values = Vec::with_capacity(self.layout.len());
        let draw_layer = |spec: &DenseSpec, rng: &mut ChaCha8Rng, out: &mut Vec<f64>| {
            let bound = 1.0 / (spec.inputs as f64).sqrt();
            let dist = Uniform::new_inclusive(-bound, bound);
            for _ in 0..spec.param_count() {
                out.push(dist.sample(rng));
            }
        };
        match &self.net {
            NetKind::Hybrid { pre, circuit, post } => {
                draw_layer(pre, &mut rng, &mut values);
                let angle = Uniform::new_inclusive(-PI, PI);
                for _ in 0..circuit.param_count() {
                    values.push(angle.sample(&mut rng));
                }
                draw_layer(post, &mut rng, &mut values);
            }
            NetKind::Mlp { layers } => {
                for layer in layers {
                    draw_layer(layer, &mut rng, &mut values);
                }
            }
        }
        FlatParams { values }
    }

    /// The structured view of [`Differentiable::output`].
    pub fn forward(
        &self,
        params: &FlatParams,
        input: &[f64],
        noise: Option<&NoiseSpec>,
    ) -> Result<Prediction, ModelError> {
        let out = self.output(params, input, noise)?;
        Ok(Prediction::from_flat(&out, self.n_bus(), self.n_branch()))
    }

    /// Normalizes raw dataset samples into (input, target) pairs.
    pub fn normalize_batch(&self, samples: &[Sample]) -> Vec<(Vec<f64>, Vec<f64>)> {
        samples
            .iter()
            .map(|s| {
                (
                    self.norms.normalize_input(&s.input),
                    self.norms.normalize_target(&s.target),
                )
            })
            .collect()
    }

    fn check_io(&self, params: &FlatParams, input: &[f64]) -> Result<(), ModelError> {
        if params.len() != self.layout.len() {
            return Err(ModelError::ParamLength {
                got: params.len(),
                expected: self.layout.len(),
            });
        }
        if input.len() != self.input_dim() {
            return Err(ModelError::InputLength {
                got: input.len(),
                expected: self.input_dim(),
            });
        }
        Ok(())
    }

    /// Denormalizes the network's `[v̂; φ̂]` against the target statistics.
    fn denorm_vphi(&self, y: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let n = self.n_bus();
        let (tm, ts) = (&self.norms.target_mean, &self.norms.target_scale);
        let v = (0..n).map(|i| y[i] * ts[i] + tm[i]).collect();
        let phi = (0..n).map(|i| y[n + i] * ts[n + i] + tm[n + i]).collect();
        (v, phi)
    }
}

impl Differentiable for Model {
    fn param_count(&self) -> usize {
        self.layout.len()
    }

    fn output_dim(&self) -> usize {
        2 * self.n_bus() + 2 * self.n_branch()
    }

    fn output(
        &self,
        params: &FlatParams,
        input: &[f64],
        noise: Option<&NoiseSpec>,
    ) -> Result<Vec<f64>, ModelError> {
        self.check_io(params, input)?;
        let mut out = self.net.forward(&params.values, input, noise)?;
        let (v, phi) = self.denorm_vphi(&out);
        let flows = branch_flows(&v, &phi, &self.case)?;
        let (n, nb) = (self.n_bus(), self.n_branch());
        let (tm, ts) = (&self.norms.target_mean, &self.norms.target_scale);
        out.reserve(2 * nb);
        for (j, f) in flows.iter().enumerate() {
            out.push((f.p_from - tm[2 * n + j]) / ts[2 * n + j]);
        }
        for (j, f) in flows.iter().enumerate() {
            out.push((f.q_from - tm[2 * n + nb + j]) / ts[2 * n + nb + j]);
        }
        Ok(out)
    }

    fn vjp(
        &self,
        params: &FlatParams,
        input: &[f64],
        noise: Option<&NoiseSpec>,
        cotangent: &[f64],
    ) -> Result<Vec<f64>, ModelError> {
        self.check_io(params, input)?;
        let (n, nb) = (self.n_bus(), self.n_branch());
        if cotangent.len() != 2 * n + 2 * nb {
            return Err(ModelError::CotangentLength {
                got: cotangent.len(),
                expected: 2 * n + 2 * nb,
            });
        }
        let y = self.net.forward(&params.values, input, noise)?;
        let (v, phi) = self.denorm_vphi(&y);
        let sens = branch_flow_sensitivities(&v, &phi, &self.case);
        let (tm, ts) = (&self.norms.target_mean, &self.norms.target_scale);
        debug_assert_eq!(tm.len(), 2 * n + 2 * nb);

        // Fold the flow cotangents back onto the network output. The flow
        // block reads the denormalized (v, phi), so each path picks up the
        // output scale of the bus it touches and loses the flow's own scale.
        let mut g = cotangent[..2 * n].to_vec();
        for (j, (br, s)) in self.case.branches.iter().zip(&sens).enumerate() {
            let cp = cotangent[2 * n + j] / ts[2 * n + j];
            let cq = cotangent[2 * n + nb + j] / ts[2 * n + nb + j];
            g[br.from] += (cp * s.dp_dvf + cq * s.dq_dvf) * ts[br.from];
            g[br.to] += (cp * s.dp_dvt + cq * s.dq_dvt) * ts[br.to];
            let gphi = cp * s.dp_dphi + cq * s.dq_dphi;
            g[n + br.from] += gphi * ts[n + br.from];
            g[n + br.to] -= gphi * ts[n + br.to];
        }
        self.net.vjp(&params.values, input, noise, &g)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::powerflow::{Branch, Bus, BusKind};
    use approx::assert_abs_diff_eq;

    fn two_bus_case() -> PowerCase {
        PowerCase {
            base_mva: 100.0,
            buses: vec![
                Bus {
                    id: 0,
                    kind: BusKind::Slack,
                    p_load: 0.0,
                    q_load: 0.0,
                    v_set: Some(1.02),
                    shunt_b: 0.0,
                },
                Bus {
                    id: 1,
                    kind: BusKind::Pq,
                    p_load: 0.4,
                    q_load: 0.15,
                    v_set: None,
                    shunt_b: 0.0,
                },
            ],
            branches: vec![Branch {
                from: 0,
                to: 1,
                r: 0.03,
                x: 0.1,
                b_charge: 0.05,
                tap: 0.97,
            }],
            gens: vec![],
        }
    }

    fn toy_norms() -> Norms {
        Norms {
            input_mean: vec![0.1, -0.2, 0.05, 0.0],
            input_scale: vec![0.8, 1.1, 0.9, 1.2],
            target_mean: vec![1.0, 1.0, 0.0, 0.0, 0.1, 0.05],
            target_scale: vec![0.05, 0.04, 0.02, 0.03, 0.2, 0.15],
        }
    }

    fn toy_model() -> Model {
        Model::new_hybrid(two_bus_case(), toy_norms(), 2, 2).unwrap()
    }

    #[test]
    fn hybrid_shapes_and_layout_match_the_chain() {
        let case: PowerCase =
            PowerCase::from_path(concat!(env!("CARGO_MANIFEST_DIR"), "/../../cases/ieee6.json"))
                .unwrap();
        let n = case.n_bus();
        let nb = case.n_branch();
        let norms = Norms {
            input_mean: vec![0.0; 2 * n],
            input_scale: vec![1.0; 2 * n],
            target_mean: vec![0.0; 2 * n + 2 * nb],
            target_scale: vec![1.0; 2 * n + 2 * nb],
        };
        let model = Model::new_hybrid(case, norms, 4, 2).unwrap();
        // 12 -> 8 -> 4 -> 12
        assert_eq!(model.input_dim(), 12);
        assert_eq!(model.param_count(), 96 + 8 + 16 + 48 + 12);
        assert_eq!(model.output_dim(), 12 + 2 * nb);
        let names: Vec<&str> = model.layout.ranges.iter().map(|r| r.name.as_str()).collect();
        assert_eq!(names, ["pre.w", "pre.b", "quantum", "post.w", "post.b"]);
        assert_eq!(model.layout.range("quantum").unwrap().len(), 16);
    }

    #[test]
    fn mlp_parameter_count_matches_hand_count() {
        let model = Model::new_mlp(two_bus_case(), toy_norms(), &[3]).unwrap();
        // 4 -> 3 tanh -> 4 identity: (4*3+3) + (3*4+4) = 31
        assert_eq!(model.param_count(), 31);
        let names: Vec<&str> = model.layout.ranges.iter().map(|r| r.name.as_str()).collect();
        assert_eq!(names, ["layer0.w", "layer0.b", "layer1.w", "layer1.b"]);
    }

    #[test]
    fn zeroed_post_net_predicts_its_biases() {
        let model = toy_model();
        let mut params = model.init_params(7);
        let d = params.len();
        let bias = vec![0.3, -0.1, 0.2, 0.05];
        model
            .layout
            .scatter(&mut params, "post.w", &vec![0.0; 8])
            .unwrap();
        model.layout.scatter(&mut params, "post.b", &bias).unwrap();
        assert_eq!(params.len(), d);
        for input in [[0.2, -0.4, 0.1, 0.9], [1.5, 0.0, -0.3, 0.2]] {
            let pred = model.forward(&params, &input, None).unwrap();
            assert_eq!(pred.v_hat, bias[..2].to_vec());
            assert_eq!(pred.phi_hat, bias[2..].to_vec());
        }
    }

    #[test]
    fn zero_parameters_push_all_expectations_to_one() {
        let model = toy_model();
        let params = FlatParams::zeros(model.param_count());
        // zero pre-net -> zero angles -> ground state -> every <Z> = 1, so
        // the network output is the post-net applied to the all-ones vector,
        // which is 0 here (zero post weights and biases).
        let pred = model.forward(&params, &[0.4, 0.3, -0.2, 0.6], None).unwrap();
        assert_eq!(pred.v_hat, vec![0.0, 0.0]);
        assert_eq!(pred.phi_hat, vec![0.0, 0.0]);
        // flow block: denormalized prediction is exactly the target mean for
        // v and phi, so the flows are those of (v, phi) = (1, 1, 0, 0).
        let flows = branch_flows(&[1.0, 1.0], &[0.0, 0.0], &model.case).unwrap();
        let want_pf = (flows[0].p_from - 0.1) / 0.2;
        let want_qf = (flows[0].q_from - 0.05) / 0.15;
        assert_abs_diff_eq!(pred.pf_hat[0], want_pf, epsilon = 1e-12);
        assert_abs_diff_eq!(pred.qf_hat[0], want_qf, epsilon = 1e-12);
    }

    #[test]
    fn forward_is_pure_and_init_is_seeded() {
        let model = toy_model();
        let params = model.init_params(42);
        assert_eq!(model.init_params(42), params);
        assert_ne!(model.init_params(43), params);
        let x = [0.3, -0.5, 0.8, 0.1];
        let a = model.output(&params, &x, None).unwrap();
        let b = model.output(&params, &x, None).unwrap();
        assert_eq!(a, b);
    }

    fn fd_check(model: &Model, noise: Option<&NoiseSpec>) {
        let params = model.init_params(3);
        let x = [0.25, -0.7, 0.4, -0.1];
        let cot: Vec<f64> = (0..model.output_dim())
            .map(|k| 0.7 - 0.13 * k as f64)
            .collect();
        let grad = model.vjp(&params, &x, noise, &cot).unwrap();
        assert_eq!(grad.len(), model.param_count());

        let scalar = |p: &FlatParams| -> f64 {
            model
                .output(p, &x, noise)
                .unwrap()
                .iter()
                .zip(&cot)
                .map(|(o, c)| o * c)
                .sum()
        };
        let h = 1e-6;
        for j in 0..params.len() {
            let mut hi = params.clone();
            let mut lo = params.clone();
            hi.values[j] += h;
            lo.values[j] -= h;
            let fd = (scalar(&hi) - scalar(&lo)) / (2.0 * h);
            let tol = 1e-5 * fd.abs().max(1.0);
            assert!(
                (grad[j] - fd).abs() < tol,
                "component {j}: vjp {} vs fd {fd}",
                grad[j]
            );
        }
    }

    #[test]
    fn vjp_matches_finite_differences_noiseless() {
        fd_check(&toy_model(), None);
    }

    #[test]
    fn vjp_matches_finite_differences_under_noise() {
        let noise = NoiseSpec {
            bit_flip: 0.03,
            phase_flip: 0.02,
            depolarizing: 0.05,
        };
        fd_check(&toy_model(), Some(&noise));
    }

    #[test]
    fn mlp_vjp_matches_finite_differences() {
        let model = Model::new_mlp(two_bus_case(), toy_norms(), &[5, 3]).unwrap();
        fd_check(&model, None);
    }

    #[test]
    fn dimension_errors_are_reported() {
        let model = toy_model();
        let params = model.init_params(0);
        assert!(matches!(
            model.output(&params, &[0.0; 3], None),
            Err(ModelError::InputLength { got: 3, expected: 4 })
        ));
        let short = FlatParams::zeros(model.param_count() - 1);
        assert!(matches!(
            model.output(&short, &[0.0; 4], None),
            Err(ModelError::ParamLength { .. })
        ));
        assert!(matches!(
            model.vjp(&params, &[0.0; 4], None, &[0.0; 5]),
            Err(ModelError::CotangentLength { .. })
        ));
    }

    #[test]
    fn bad_shapes_are_rejected_at_assembly() {
        assert!(matches!(
            Model::new_mlp(two_bus_case(), toy_norms(), &[]),
            Err(ModelError::BadShape(_))
        ));
        let mut norms = toy_norms();
        norms.target_mean.pop();
        assert!(matches!(
            Model::new_hybrid(two_bus_case(), norms, 2, 1),
            Err(ModelError::BadShape(_))
        ));
        let model = toy_model();
        let NetKind::Hybrid { pre, circuit, post } = model.net.clone() else {
            unreachable!()
        };
        let wrong = NetKind::Hybrid {
            pre: DenseSpec::new(pre.inputs, pre.outputs + 1, Activation::Tanh),
            circuit,
            post,
        };
        assert!(wrong.validate(2).is_err());
    }
}
