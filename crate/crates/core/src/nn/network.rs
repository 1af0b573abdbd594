use super::layer::{Layer, LayerSpec};
use super::loss::LossKind;
use super::{NnError, Tensor};
use crate::seed::Rng;

/// Parameter gradients, one buffer per trainable array in the order of
/// [`Network::params`] (for each parameterized layer: weights, then bias).
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub per_param: Vec<Vec<f64>>,
}

impl Gradients {
    pub fn zeros_like(network: &Network) -> Self {
        Self { per_param: network.params().iter().map(|p| vec![0.0; p.len()]).collect() }
    }

    pub fn max_abs(&self) -> f64 {
        self.per_param.iter().flatten().fold(0.0, |m, g| m.max(g.abs()))
    }
}

/// Sequential stack of layers.
#[derive(Debug, Clone, PartialEq)]
pub struct Network {
    input_shape: Vec<usize>,
    layers: Vec<Layer>,
}

impl Network {
    /// Network with no layers; its output is its input.
    pub fn empty(input_shape: Vec<usize>) -> Self {
        Self { input_shape, layers: Vec::new() }
    }

    /// Builds and Glorot-initializes a network from layer specs.
    pub fn build(input_shape: Vec<usize>, specs: &[LayerSpec], rng: &mut Rng) -> Result<Self, NnError> {
        let mut net = Self::empty(input_shape);
        for spec in specs {
            net.push(spec.clone())?;
            net.layers.last_mut().expect("just pushed").init(rng);
        }
        Ok(net)
    }

    /// Appends a zero-initialized layer after checking shape compatibility.
    pub fn push(&mut self, spec: LayerSpec) -> Result<(), NnError> {
        let index = self.layers.len();
        let name = spec.name();
        let layer = Layer::new(spec, &self.output_shape()).map_err(|m| NnError::LayerShape {
            index,
            kind: name,
            message: m,
        })?;
        self.layers.push(layer);
        Ok(())
    }

    pub fn input_shape(&self) -> &[usize] {
        &self.input_shape
    }

    pub fn output_shape(&self) -> Vec<usize> {
        self.layers.last().map_or_else(|| self.input_shape.clone(), |l| l.output_shape().to_vec())
    }

    pub fn layers(&self) -> &[Layer] {
        &self.layers
    }

    pub fn specs(&self) -> Vec<LayerSpec> {
        self.layers.iter().map(|l| l.spec().clone()).collect()
    }

    pub fn count_params(&self) -> usize {
        self.layers.iter().map(Layer::param_count).sum()
    }

    pub fn params(&self) -> Vec<&[f64]> {
        self.layers
            .iter()
            .filter(|l| l.spec().has_params())
            .flat_map(|l| [l.weights.as_slice(), l.bias.as_slice()])
            .collect()
    }

    pub fn params_mut(&mut self) -> Vec<&mut [f64]> {
        self.layers
            .iter_mut()
            .filter(|l| l.spec().has_params())
            .flat_map(|l| [l.weights.as_mut_slice(), l.bias.as_mut_slice()])
            .collect()
    }

    fn check_input(&self, input: &Tensor) -> Result<(), NnError> {
        if input.shape() != self.input_shape.as_slice() {
            let (index, kind) = self.layers.first().map_or((0, "input"), |l| (0, l.spec().name()));
            return Err(NnError::LayerShape {
                index,
                kind,
                message: format!("expects input {:?}, got {:?}", self.input_shape, input.shape()),
            });
        }
        Ok(())
    }

    pub fn forward(&self, input: &Tensor) -> Result<Tensor, NnError> {
        self.check_input(input)?;
        let out = self.layers.iter().fold(input.data().to_vec(), |x, layer| layer.forward(&x));
        Ok(Tensor::from_parts(self.output_shape(), out))
    }

    /// Activations of every layer, starting with the input.
    fn trace(&self, input: &[f64]) -> Vec<Vec<f64>> {
        let mut acts = Vec::with_capacity(self.layers.len() + 1);
        acts.push(input.to_vec());
        for layer in &self.layers {
            let next = layer.forward(acts.last().expect("non-empty"));
            acts.push(next);
        }
        acts
    }

    /// Batch loss and its gradient with respect to every parameter.
    pub fn backward(&self, inputs: &[Tensor], targets: &[Tensor], loss: LossKind) -> Result<(f64, Gradients), NnError> {
        if inputs.len() != targets.len() || inputs.is_empty() {
            return Err(NnError::Shape(format!("{} inputs for {} targets", inputs.len(), targets.len())));
        }
        let out_shape = self.output_shape();
        for (x, t) in inputs.iter().zip(targets) {
            self.check_input(x)?;
            if t.shape() != out_shape.as_slice() {
                return Err(NnError::Shape(format!(
                    "target shape {:?} does not match output {:?}",
                    t.shape(),
                    out_shape
                )));
            }
        }

        let traces: Vec<Vec<Vec<f64>>> = inputs.iter().map(|x| self.trace(x.data())).collect();
        let outputs: Vec<&[f64]> = traces.iter().map(|t| t.last().expect("non-empty").as_slice()).collect();
        let target_data: Vec<&[f64]> = targets.iter().map(Tensor::data).collect();
        let (value, output_grads) = loss.value_and_grad(&outputs, &target_data);

        let mut grads = Gradients::zeros_like(self);
        // parameter slot of each layer, if any
        let mut slots = Vec::with_capacity(self.layers.len());
        let mut next = 0;
        for l in &self.layers {
            if l.spec().has_params() {
                slots.push(Some(next));
                next += 2;
            } else {
                slots.push(None);
            }
        }
        let first_param_layer = slots.iter().position(Option::is_some);

        for (trace, gy) in traces.iter().zip(output_grads) {
            let mut g = gy;
            for (i, layer) in self.layers.iter().enumerate().rev() {
                // layers before the first parameterized one need no input grad
                let want_input = first_param_layer.is_some_and(|f| i > f);
                let (x, y) = (&trace[i], &trace[i + 1]);
                let gx = match slots[i] {
                    Some(s) => {
                        let (w, rest) = grads.per_param[s..].split_at_mut(1);
                        layer.backward(x, y, &g, &mut w[0], &mut rest[0], want_input)
                    }
                    None => layer.backward(x, y, &g, &mut [], &mut [], want_input),
                };
                match gx {
                    Some(gx) => g = gx,
                    None => break,
                }
            }
        }
        Ok((value, grads))
    }

    /// Reassembles a network from specs and raw parameter arrays.
    pub(crate) fn from_parts(
        input_shape: Vec<usize>,
        specs: Vec<LayerSpec>,
        mut params: Vec<Vec<f64>>,
    ) -> Result<Self, NnError> {
        let mut net = Self::empty(input_shape);
        params.reverse();
        for spec in specs {
            let has_params = spec.has_params();
            net.push(spec)?;
            if has_params {
                let layer = net.layers.last_mut().expect("just pushed");
                for slot in [&mut layer.weights, &mut layer.bias] {
                    let values =
                        params.pop().ok_or_else(|| NnError::Serialization("missing parameter array".into()))?;
                    if values.len() != slot.len() {
                        return Err(NnError::Serialization(format!(
                            "parameter array has {} values, layer needs {}",
                            values.len(),
                            slot.len()
                        )));
                    }
                    *slot = values;
                }
            }
        }
        if !params.is_empty() {
            return Err(NnError::Serialization("unused parameter arrays".into()));
        }
        Ok(net)
    }
}
