use std::io::{self, Read, Write};

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::RlError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Activation {
    Tanh,
    Linear,
}

impl Activation {
    fn name(self) -> &'static str {
        match self {
            Activation::Tanh => "tanh",
            Activation::Linear => "linear",
        }
    }

    fn parse(s: &str) -> Option<Self> {
        match s {
            "tanh" => Some(Activation::Tanh),
            "linear" => Some(Activation::Linear),
            _ => None,
        }
    }

    fn apply(self, z: f64) -> f64 {
        match self {
            Activation::Tanh => z.tanh(),
            Activation::Linear => z,
        }
    }

    /// Derivative expressed through the activation output `y`.
    fn slope(self, y: f64) -> f64 {
        match self {
            Activation::Tanh => 1.0 - y * y,
            Activation::Linear => 1.0,
        }
    }
}

/// Fully connected network with all parameters in one flat vector.
///
/// Layer `l` maps `sizes[l]` inputs to `sizes[l + 1]` outputs; its weights
/// are stored row-major (one row per output) followed by its biases. When
/// `out_box` is set, the last layer's output `y ∈ [-1, 1]` is mapped affinely
/// onto `[lo, hi]` per dimension.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Mlp {
    pub sizes: Vec<usize>,
    pub acts: Vec<Activation>,
    pub params: Vec<f64>,
    pub out_box: Option<Vec<[f64; 2]>>,
}

/// Intermediate outputs of one forward pass; `layers[0]` is the input.
#[derive(Debug, Clone, PartialEq)]
pub struct Trace {
    pub layers: Vec<Vec<f64>>,
    pub output: Vec<f64>,
}

fn param_count(sizes: &[usize]) -> usize {
    sizes.windows(2).map(|w| w[1] * (w[0] + 1)).sum()
}

impl Mlp {
    /// Network with every parameter zero.
    pub fn zeros(
        sizes: &[usize],
        acts: &[Activation],
        out_box: Option<Vec<[f64; 2]>>,
    ) -> Result<Self, RlError> {
        let net = Self {
            sizes: sizes.to_vec(),
            acts: acts.to_vec(),
            params: vec![0.0; param_count(sizes)],
            out_box,
        };
        net.validate()?;
        Ok(net)
    }

    /// Glorot-uniform weights, zero biases.
    pub fn random<R: Rng + ?Sized>(
        sizes: &[usize],
        acts: &[Activation],
        out_box: Option<Vec<[f64; 2]>>,
        rng: &mut R,
    ) -> Result<Self, RlError> {
        let mut net = Self::zeros(sizes, acts, out_box)?;
        let mut off = 0;
        for w in sizes.windows(2) {
            let (n_in, n_out) = (w[0], w[1]);
            let limit = (6.0 / (n_in + n_out) as f64).sqrt();
            for p in &mut net.params[off..off + n_in * n_out] {
                *p = rng.random_range(-limit..limit);
            }
            off += n_out * (n_in + 1);
        }
        Ok(net)
    }

    /// Tanh hidden layers with an action-box output.
    pub fn actor<R: Rng + ?Sized>(
        n_in: usize,
        hidden: &[usize],
        action_box: &[[f64; 2]],
        rng: &mut R,
    ) -> Result<Self, RlError> {
        let sizes: Vec<usize> = std::iter::once(n_in)
            .chain(hidden.iter().copied())
            .chain(std::iter::once(action_box.len()))
            .collect();
        let acts = vec![Activation::Tanh; sizes.len() - 1];
        Self::random(&sizes, &acts, Some(action_box.to_vec()), rng)
    }

    /// Tanh hidden layers with one linear output.
    pub fn critic<R: Rng + ?Sized>(
        n_in: usize,
        hidden: &[usize],
        rng: &mut R,
    ) -> Result<Self, RlError> {
        let sizes: Vec<usize> = std::iter::once(n_in)
            .chain(hidden.iter().copied())
            .chain(std::iter::once(1))
            .collect();
        let mut acts = vec![Activation::Tanh; sizes.len() - 1];
        *acts.last_mut().expect("at least one layer") = Activation::Linear;
        Self::random(&sizes, &acts, None, rng)
    }

    fn validate(&self) -> Result<(), RlError> {
        let bad = |m: String| Err(RlError::Shape(m));
        if self.sizes.len() < 2 || self.sizes.contains(&0) {
            return bad(format!("layer sizes {:?}", self.sizes));
        }
        if self.acts.len() != self.sizes.len() - 1 {
            return bad(format!(
                "{} activations for {} layers",
                self.acts.len(),
                self.sizes.len() - 1
            ));
        }
        if self.params.len() != param_count(&self.sizes) {
            return bad(format!(
                "{} parameters, expected {}",
                self.params.len(),
                param_count(&self.sizes)
            ));
        }
        if let Some(b) = &self.out_box {
            if b.len() != self.n_out() || b.iter().any(|[lo, hi]| !(lo < hi)) {
                return bad(format!("output box {b:?}"));
            }
        }
        if self.params.iter().any(|p| !p.is_finite()) {
            return Err(RlError::NonFinite);
        }
        Ok(())
    }

    pub fn n_in(&self) -> usize {
        self.sizes[0]
    }

    pub fn n_out(&self) -> usize {
        *self.sizes.last().expect("validated")
    }

    pub fn n_params(&self) -> usize {
        self.params.len()
    }

    pub fn forward(&self, x: &[f64]) -> Result<Vec<f64>, RlError> {
        Ok(self.trace(x)?.output)
    }

    pub fn trace(&self, x: &[f64]) -> Result<Trace, RlError> {
        if x.len() != self.n_in() {
            return Err(RlError::Shape(format!(
                "input of length {}, expected {}",
                x.len(),
                self.n_in()
            )));
        }
        let mut layers = Vec::with_capacity(self.sizes.len());
        layers.push(x.to_vec());
        let mut off = 0;
        for (l, w) in self.sizes.windows(2).enumerate() {
            let (n_in, n_out) = (w[0], w[1]);
            let input = &layers[l];
            let weights = &self.params[off..off + n_in * n_out];
            let biases = &self.params[off + n_in * n_out..off + n_out * (n_in + 1)];
            let act = self.acts[l];
            let out: Vec<f64> = weights
                .chunks_exact(n_in)
                .zip(biases)
                .map(|(row, b)| {
                    act.apply(row.iter().zip(input).map(|(w, x)| w * x).sum::<f64>() + b)
                })
                .collect();
            layers.push(out);
            off += n_out * (n_in + 1);
        }
        let last = layers.last().expect("validated");
        let output = match &self.out_box {
            Some(b) => last
                .iter()
                .zip(b)
                .map(|(y, [lo, hi])| lo + 0.5 * (y + 1.0) * (hi - lo))
                .collect(),
            None => last.clone(),
        };
        Ok(Trace { layers, output })
    }

    /// Reverse pass: given dL/d(output), returns (dL/dparams, dL/dinput).
    pub fn backward(
        &self,
        trace: &Trace,
        upstream: &[f64],
    ) -> Result<(Vec<f64>, Vec<f64>), RlError> {
        if upstream.len() != self.n_out() {
            return Err(RlError::Shape(format!(
                "upstream gradient of length {}, expected {}",
                upstream.len(),
                self.n_out()
            )));
        }
        let mut grads = vec![0.0; self.params.len()];
        let mut delta: Vec<f64> = match &self.out_box {
            Some(b) => upstream
                .iter()
                .zip(b)
                .map(|(g, [lo, hi])| g * 0.5 * (hi - lo))
                .collect(),
            None => upstream.to_vec(),
        };
        let mut off = self.params.len();
        for l in (0..self.sizes.len() - 1).rev() {
            let (n_in, n_out) = (self.sizes[l], self.sizes[l + 1]);
            off -= n_out * (n_in + 1);
            let act = self.acts[l];
            for (d, y) in delta.iter_mut().zip(&trace.layers[l + 1]) {
                *d *= act.slope(*y);
            }
            let input = &trace.layers[l];
            let (gw, gb) = grads[off..off + n_out * (n_in + 1)].split_at_mut(n_in * n_out);
            for (o, d) in delta.iter().enumerate() {
                gb[o] = *d;
                for (g, x) in gw[o * n_in..(o + 1) * n_in].iter_mut().zip(input) {
                    *g = d * x;
                }
            }
            let weights = &self.params[off..off + n_in * n_out];
            let mut next = vec![0.0; n_in];
            for (row, d) in weights.chunks_exact(n_in).zip(&delta) {
                for (n, w) in next.iter_mut().zip(row) {
                    *n += w * d;
                }
            }
            delta = next;
        }
        Ok((grads, delta))
    }

    /// `self ← τ·src + (1 − τ)·self`.
    pub fn soft_update_from(&mut self, src: &Mlp, tau: f64) {
        for (t, s) in self.params.iter_mut().zip(&src.params) {
            *t = tau * s + (1.0 - tau) * *t;
        }
    }

    /// Text header line, then every parameter as little-endian f64.
    pub fn write_to<W: Write>(&self, out: &mut W) -> io::Result<()> {
        let join = |v: Vec<String>| v.join(",");
        let boxes = match &self.out_box {
            Some(b) => join(b.iter().map(|[lo, hi]| format!("{lo}:{hi}")).collect()),
            None => "none".into(),
        };
        writeln!(
            out,
            "mlp sizes={} acts={} box={} params={}",
            join(self.sizes.iter().map(|s| s.to_string()).collect()),
            join(self.acts.iter().map(|a| a.name().to_string()).collect()),
            boxes,
            self.params.len()
        )?;
        for p in &self.params {
            out.write_all(&p.to_le_bytes())?;
        }
        Ok(())
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut buf = Vec::new();
        self.write_to(&mut buf)
            .expect("writing to a Vec cannot fail");
        buf
    }

    pub fn read_from<R: Read>(input: &mut R) -> Result<Self, RlError> {
        let mut bytes = Vec::new();
        input.read_to_end(&mut bytes)?;
        Self::from_bytes(&bytes)
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self, RlError> {
        let bad = |m: &str| RlError::Format(m.to_string());
        let nl = bytes
            .iter()
            .position(|&b| b == b'\n')
            .ok_or_else(|| bad("missing header line"))?;
        let header = std::str::from_utf8(&bytes[..nl]).map_err(|_| bad("header is not UTF-8"))?;
        let mut fields = header.split_whitespace();
        if fields.next() != Some("mlp") {
            return Err(bad("header must start with `mlp`"));
        }
        let (mut sizes, mut acts, mut out_box, mut count) = (None, None, None, None);
        for f in fields {
            let (k, v) = f
                .split_once('=')
                .ok_or_else(|| bad("malformed header field"))?;
            match k {
                "sizes" => {
                    sizes = Some(
                        v.split(',')
                            .map(|s| s.parse::<usize>().map_err(|_| bad("bad layer size")))
                            .collect::<Result<Vec<_>, _>>()?,
                    )
                }
                "acts" => {
                    acts = Some(
                        v.split(',')
                            .map(|s| Activation::parse(s).ok_or_else(|| bad("unknown activation")))
                            .collect::<Result<Vec<_>, _>>()?,
                    )
                }
                "box" if v == "none" => out_box = Some(None),
                "box" => {
                    let b = v
                        .split(',')
                        .map(|pair| {
                            let (lo, hi) =
                                pair.split_once(':').ok_or_else(|| bad("bad box bound"))?;
                            Ok([
                                lo.parse().map_err(|_| bad("bad box bound"))?,
                                hi.parse().map_err(|_| bad("bad box bound"))?,
                            ])
                        })
                        .collect::<Result<Vec<_>, RlError>>()?;
                    out_box = Some(Some(b));
                }
                "params" => {
                    count = Some(v.parse::<usize>().map_err(|_| bad("bad parameter count"))?)
                }
                _ => return Err(bad("unknown header field")),
            }
        }
        let (sizes, acts, out_box, count) = match (sizes, acts, out_box, count) {
            (Some(s), Some(a), Some(b), Some(c)) => (s, a, b, c),
            _ => return Err(bad("incomplete header")),
        };
        let body = &bytes[nl + 1..];
        if body.len() != count * 8 {
            return Err(bad("body length does not match parameter count"));
        }
        let params = body
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().expect("chunk of 8")))
            .collect();
        let net = Self {
            sizes,
            acts,
            params,
            out_box,
        };
        net.validate()?;
        Ok(net)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    const BOX: [[f64; 2]; 2] = [[0.0, 0.7], [-1.5, 1.5]];

    #[test]
    fn zero_actor_outputs_box_midpoint() {
        let net = Mlp::zeros(
            &[4, 8, 2],
            &[Activation::Tanh, Activation::Tanh],
            Some(BOX.to_vec()),
        )
        .unwrap();
        let y = net.forward(&[0.3, -1.0, 2.0, 0.5]).unwrap();
        assert_eq!(y, vec![0.35, 0.0]);
    }

    #[test]
    fn identity_linear_layer() {
        let mut net = Mlp::zeros(&[3, 3], &[Activation::Linear], None).unwrap();
        for i in 0..3 {
            net.params[i * 3 + i] = 1.0;
        }
        assert_eq!(
            net.forward(&[1.5, -2.0, 0.25]).unwrap(),
            vec![1.5, -2.0, 0.25]
        );
    }

    #[test]
    fn shape_errors() {
        let net = Mlp::zeros(&[3, 2], &[Activation::Linear], None).unwrap();
        assert!(matches!(net.forward(&[1.0]), Err(RlError::Shape(_))));
        let t = net.trace(&[1.0, 2.0, 3.0]).unwrap();
        assert!(matches!(net.backward(&t, &[1.0]), Err(RlError::Shape(_))));
        assert!(Mlp::zeros(&[3, 2], &[], None).is_err());
    }

    #[test]
    fn zero_upstream_gives_zero_gradients() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let net = Mlp::actor(5, &[7, 6], &BOX, &mut rng).unwrap();
        let t = net.trace(&[0.1, 0.2, 0.3, 0.4, 0.5]).unwrap();
        let (g, gx) = net.backward(&t, &[0.0, 0.0]).unwrap();
        assert!(g.iter().chain(&gx).all(|v| *v == 0.0));
    }

    #[test]
    fn bytes_round_trip() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let net = Mlp::actor(6, &[5], &BOX, &mut rng).unwrap();
        let back = Mlp::from_bytes(&net.to_bytes()).unwrap();
        assert_eq!(back, net);
        let critic = Mlp::critic(4, &[3, 3], &mut rng).unwrap();
        assert_eq!(Mlp::from_bytes(&critic.to_bytes()).unwrap(), critic);
        let mut truncated = net.to_bytes();
        truncated.pop();
        assert!(matches!(
            Mlp::from_bytes(&truncated),
            Err(RlError::Format(_))
        ));
    }
}
