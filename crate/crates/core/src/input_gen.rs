//! Stochastic instance generation.
//!
//! Every instance is a pure function of its arguments. Randomness comes from
//! ChaCha8 streams keyed by `(seed, purpose)`, so capacity and order draws are
//! independent of each other and of any other trial.

use std::fmt::Write as _;
use std::io::BufRead;

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};

/// Stream identifiers for [`stream_rng`].
pub mod purpose {
    pub const CAPACITY: u64 = 1;
    pub const ORDERS: u64 = 2;
    pub const BINDING_PROBE: u64 = 3;
}

/// Default bounds for the per-resource average capacity.
pub const DEFAULT_D_LO: f64 = 1.0 / 3.0;
pub const DEFAULT_D_HI: f64 = 2.0 / 3.0;

/// One arriving request: the bid and the per-resource consumption.
#[derive(Clone, Debug, PartialEq)]
pub struct Order {
    pub reward: f64,
    pub demand: Vec<f64>,
}

impl Order {
    pub fn new(reward: f64, demand: Vec<f64>) -> Self {
        Self { reward, demand }
    }

    /// Priced resource cost `demand · prices`.
    #[inline]
    pub fn cost(&self, prices: &[f64]) -> f64 {
        self.demand.iter().zip(prices).map(|(a, p)| a * p).sum()
    }
}

/// Orders stored column-major in flat buffers: `demand(j)` is a contiguous slice.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct OrderBatch {
    m: usize,
    rewards: Vec<f64>,
    demands: Vec<f64>,
}

impl OrderBatch {
    pub fn with_capacity(m: usize, n: usize) -> Self {
        Self { m, rewards: Vec::with_capacity(n), demands: Vec::with_capacity(n * m) }
    }

    pub fn from_orders(m: usize, orders: &[Order]) -> Self {
        let mut batch = Self::with_capacity(m, orders.len());
        for o in orders {
            batch.push(o);
        }
        batch
    }

    pub fn push(&mut self, order: &Order) {
        assert_eq!(order.demand.len(), self.m, "demand length");
        self.rewards.push(order.reward);
        self.demands.extend_from_slice(&order.demand);
    }

    pub fn len(&self) -> usize {
        self.rewards.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rewards.is_empty()
    }

    pub fn view(&self) -> Columns<'_> {
        Columns { m: self.m, rewards: &self.rewards, demands: &self.demands }
    }
}

/// Borrowed view of an [`OrderBatch`] (or any prefix of one).
#[derive(Clone, Copy, Debug)]
pub struct Columns<'a> {
    m: usize,
    rewards: &'a [f64],
    demands: &'a [f64],
}

impl<'a> Columns<'a> {
    pub fn resource_count(&self) -> usize {
        self.m
    }

    pub fn len(&self) -> usize {
        self.rewards.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rewards.is_empty()
    }

    #[inline]
    pub fn reward(&self, j: usize) -> f64 {
        self.rewards[j]
    }

    pub fn rewards(&self) -> &'a [f64] {
        self.rewards
    }

    #[inline]
    pub fn demand(&self, j: usize) -> &'a [f64] {
        &self.demands[j * self.m..(j + 1) * self.m]
    }

    /// The first `n` columns.
    pub fn prefix(&self, n: usize) -> Columns<'a> {
        Columns { m: self.m, rewards: &self.rewards[..n], demands: &self.demands[..n * self.m] }
    }

    pub fn iter(&self) -> impl Iterator<Item = (f64, &'a [f64])> + 'a {
        let m = self.m;
        self.rewards.iter().copied().zip(self.demands.chunks_exact(m.max(1)))
    }
}

/// A pluggable order distribution.
pub trait OrderDistribution {
    fn sample(&self, m: usize, rng: &mut dyn RngCore) -> Order;

    /// Tag stored in the instance and in its serialized header.
    fn tag(&self) -> ModelTag {
        ModelTag::Custom
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum ModelTag {
    InputI,
    InputII { clip: Option<f64> },
    Custom,
}

impl ModelTag {
    pub fn name(&self) -> &'static str {
        match self {
            ModelTag::InputI => "input1",
            ModelTag::InputII { .. } => "input2",
            ModelTag::Custom => "custom",
        }
    }
}

/// Independent uniform demands on `[0, 2]` and an independent uniform reward on `[0, 10]`.
#[derive(Clone, Copy, Debug, Default)]
pub struct InputI;

/// Normal(0.5, 1) demands with reward equal to the demand sum.
///
/// Demands are unbounded and may be negative. `clip = Some(c)` clamps every
/// demand component to `[-c, c]` before the reward is formed.
#[derive(Clone, Copy, Debug, Default)]
pub struct InputII {
    pub clip: Option<f64>,
}

pub const INPUT_I_REWARD_MAX: f64 = 10.0;
pub const INPUT_I_DEMAND_MAX: f64 = 2.0;
pub const INPUT_II_MEAN: f64 = 0.5;
pub const INPUT_II_STD: f64 = 1.0;

pub fn sample_input_i(m: usize, rng: &mut dyn RngCore) -> Order {
    let demand = (0..m).map(|_| rng.random::<f64>() * INPUT_I_DEMAND_MAX).collect();
    let reward = rng.random::<f64>() * INPUT_I_REWARD_MAX;
    Order { reward, demand }
}

pub fn sample_input_ii(m: usize, rng: &mut dyn RngCore) -> Order {
    sample_input_ii_clipped(m, None, rng)
}

pub fn sample_input_ii_clipped(m: usize, clip: Option<f64>, rng: &mut dyn RngCore) -> Order {
    let normal = Normal::new(INPUT_II_MEAN, INPUT_II_STD).expect("finite parameters");
    let demand = (0..m)
        .map(|_| {
            let a = normal.sample(rng);
            match clip {
                Some(c) => a.clamp(-c, c),
                None => a,
            }
        })
        .collect();
    input_ii_order(demand)
}

/// Builds an Input II order from its demand vector: the reward is the component sum.
pub fn input_ii_order(demand: Vec<f64>) -> Order {
    let reward = demand.iter().sum();
    Order { reward, demand }
}

impl OrderDistribution for InputI {
    fn sample(&self, m: usize, rng: &mut dyn RngCore) -> Order {
        sample_input_i(m, rng)
    }
    fn tag(&self) -> ModelTag {
        ModelTag::InputI
    }
}

impl OrderDistribution for InputII {
    fn sample(&self, m: usize, rng: &mut dyn RngCore) -> Order {
        sample_input_ii_clipped(m, self.clip, rng)
    }
    fn tag(&self) -> ModelTag {
        ModelTag::InputII { clip: self.clip }
    }
}

/// Built-in distribution selector.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum InputModel {
    InputI,
    InputII { clip: Option<f64> },
}

impl InputModel {
    pub fn distribution(&self) -> Box<dyn OrderDistribution + Send + Sync> {
        match *self {
            InputModel::InputI => Box::new(InputI),
            InputModel::InputII { clip } => Box::new(InputII { clip }),
        }
    }
}

impl std::str::FromStr for InputModel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "input1" | "i" | "1" => Ok(InputModel::InputI),
            "input2" | "ii" | "2" => Ok(InputModel::InputII { clip: None }),
            other => Err(Error::invalid(format!("unknown input model `{other}`"))),
        }
    }
}

/// Each `d_i` drawn i.i.d. uniform on `[d_lo, d_hi]`. `d_lo == d_hi` is allowed.
pub fn sample_capacity(m: usize, d_lo: f64, d_hi: f64, rng: &mut dyn RngCore) -> Result<Vec<f64>> {
    if m == 0 {
        return Err(Error::invalid("resource count must be positive"));
    }
    if !(d_lo.is_finite() && d_hi.is_finite()) || d_lo <= 0.0 || d_lo > d_hi {
        return Err(Error::invalid(format!("capacity bounds must satisfy 0 < d_lo <= d_hi, got ({d_lo}, {d_hi})")));
    }
    Ok((0..m).map(|_| d_lo + (d_hi - d_lo) * rng.random::<f64>()).collect())
}

/// A seeded ChaCha8 stream dedicated to one purpose of one seed.
pub fn stream_rng(seed: u64, purpose: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(purpose);
    rng
}

/// A full problem: horizon, capacities and the ordered arrivals.
#[derive(Clone, Debug, PartialEq)]
pub struct Instance {
    pub horizon: usize,
    pub resource_count: usize,
    /// `b = T · d`.
    pub capacity: Vec<f64>,
    /// `d`, generated first.
    pub avg_capacity: Vec<f64>,
    pub orders: Vec<Order>,
    pub seed: u64,
    pub model: ModelTag,
}

impl Instance {
    /// Assembles an instance from explicit data; `b` is derived as `T · d`.
    pub fn from_parts(avg_capacity: Vec<f64>, orders: Vec<Order>) -> Result<Self> {
        let horizon = orders.len();
        let m = avg_capacity.len();
        if horizon == 0 || m == 0 {
            return Err(Error::invalid("instance needs at least one order and one resource"));
        }
        if let Some(t) = orders.iter().position(|o| o.demand.len() != m) {
            return Err(Error::invalid(format!(
                "order {} has {} demand components, expected {m}",
                t + 1,
                orders[t].demand.len()
            )));
        }
        let capacity = avg_capacity.iter().map(|d| d * horizon as f64).collect();
        Ok(Self { horizon, resource_count: m, capacity, avg_capacity, orders, seed: 0, model: ModelTag::Custom })
    }

    /// Same as [`Instance::from_parts`] but taking `b` directly (d = b / T).
    pub fn from_capacity(capacity: Vec<f64>, orders: Vec<Order>) -> Result<Self> {
        let horizon = orders.len() as f64;
        let d = capacity.iter().map(|b| b / horizon).collect();
        let mut inst = Self::from_parts(d, orders)?;
        inst.capacity = capacity;
        Ok(inst)
    }

    /// Flat columnar text: a header (`T`, `m`, `b`, plus `d`, seed and model
    /// for exact replay) followed by one `reward,a_1,...,a_m` row per order.
    /// Floats use shortest round-trip formatting so parsing is bit-exact.
    pub fn to_columnar(&self) -> String {
        let mut out = String::new();
        let join = |v: &[f64]| v.iter().map(|x| format!("{x:?}")).collect::<Vec<_>>().join(",");
        writeln!(out, "# olp-instance v1").unwrap();
        writeln!(out, "T,{}", self.horizon).unwrap();
        writeln!(out, "m,{}", self.resource_count).unwrap();
        writeln!(out, "b,{}", join(&self.capacity)).unwrap();
        writeln!(out, "d,{}", join(&self.avg_capacity)).unwrap();
        writeln!(out, "seed,{}", self.seed).unwrap();
        let model = match self.model {
            ModelTag::InputII { clip: Some(c) } => format!("input2,{c:?}"),
            other => other.name().to_string(),
        };
        writeln!(out, "model,{model}").unwrap();
        let cols: Vec<String> = (1..=self.resource_count).map(|i| format!("a{i}")).collect();
        writeln!(out, "reward,{}", cols.join(",")).unwrap();
        for o in &self.orders {
            write!(out, "{:?}", o.reward).unwrap();
            for a in &o.demand {
                write!(out, ",{a:?}").unwrap();
            }
            out.push('\n');
        }
        out
    }

    pub fn from_columnar<R: BufRead>(reader: R) -> Result<Self> {
        let mut horizon = None;
        let mut m = None;
        let mut b: Option<Vec<f64>> = None;
        let mut d: Option<Vec<f64>> = None;
        let mut seed = 0u64;
        let mut model = ModelTag::Custom;
        let mut orders = Vec::new();
        let mut in_body = false;

        for (idx, line) in reader.lines().enumerate() {
            let line = line?;
            let lineno = idx + 1;
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let perr = |msg: String| Error::Parse { line: lineno, msg };
            let mut fields = line.split(',').map(str::trim);
            let key = fields.next().unwrap_or_default();
            if in_body {
                let vals = parse_floats(line.split(',').map(str::trim), lineno)?;
                let m = m.unwrap_or(0);
                if vals.len() != m + 1 {
                    return Err(perr(format!("expected {} columns, found {}", m + 1, vals.len())));
                }
                orders.push(Order::new(vals[0], vals[1..].to_vec()));
                continue;
            }
            match key {
                "T" => {
                    horizon = Some(fields.next().unwrap_or_default().parse::<usize>().map_err(|e| perr(e.to_string()))?)
                }
                "m" => m = Some(fields.next().unwrap_or_default().parse::<usize>().map_err(|e| perr(e.to_string()))?),
                "b" => b = Some(parse_floats(fields, lineno)?),
                "d" => d = Some(parse_floats(fields, lineno)?),
                "seed" => seed = fields.next().unwrap_or_default().parse::<u64>().map_err(|e| perr(e.to_string()))?,
                "model" => {
                    model = match fields.next().unwrap_or_default() {
                        "input1" => ModelTag::InputI,
                        "input2" => {
                            let clip = match fields.next() {
                                Some(c) => Some(c.parse::<f64>().map_err(|e| perr(e.to_string()))?),
                                None => None,
                            };
                            ModelTag::InputII { clip }
                        }
                        _ => ModelTag::Custom,
                    }
                }
                "reward" => in_body = true,
                other => return Err(perr(format!("unknown header key `{other}`"))),
            }
        }

        let horizon = horizon.ok_or_else(|| Error::Parse { line: 0, msg: "missing T".into() })?;
        let m = m.ok_or_else(|| Error::Parse { line: 0, msg: "missing m".into() })?;
        let b = b.ok_or_else(|| Error::Parse { line: 0, msg: "missing b".into() })?;
        if b.len() != m {
            return Err(Error::Parse { line: 0, msg: format!("b has {} entries, expected {m}", b.len()) });
        }
        if orders.len() != horizon {
            return Err(Error::Parse {
                line: 0,
                msg: format!("header says T={horizon} but {} orders follow", orders.len()),
            });
        }
        let d = match d {
            Some(d) if d.len() == m => d,
            Some(d) => return Err(Error::Parse { line: 0, msg: format!("d has {} entries", d.len()) }),
            None => b.iter().map(|bi| bi / horizon as f64).collect(),
        };
        Ok(Instance { horizon, resource_count: m, capacity: b, avg_capacity: d, orders, seed, model })
    }
}

fn parse_floats<'a>(fields: impl Iterator<Item = &'a str>, line: usize) -> Result<Vec<f64>> {
    fields.map(|s| s.parse::<f64>().map_err(|e| Error::Parse { line, msg: format!("`{s}`: {e}") })).collect()
}

/// Parameters of [`generate_instance`] beyond horizon, resources and seed.
#[derive(Clone, Copy, Debug)]
pub struct CapacityBounds {
    pub d_lo: f64,
    pub d_hi: f64,
}

impl Default for CapacityBounds {
    fn default() -> Self {
        Self { d_lo: DEFAULT_D_LO, d_hi: DEFAULT_D_HI }
    }
}

impl CapacityBounds {
    pub fn fixed(d: f64) -> Self {
        Self { d_lo: d, d_hi: d }
    }
}

pub fn generate_instance(
    horizon: usize,
    m: usize,
    model: InputModel,
    seed: u64,
    bounds: CapacityBounds,
) -> Result<Instance> {
    generate_instance_with(horizon, m, model.distribution().as_ref(), seed, bounds)
}

/// Generates an instance from any [`OrderDistribution`].
pub fn generate_instance_with(
    horizon: usize,
    m: usize,
    dist: &dyn OrderDistribution,
    seed: u64,
    bounds: CapacityBounds,
) -> Result<Instance> {
    if horizon == 0 {
        return Err(Error::invalid("horizon must be at least 1"));
    }
    let mut cap_rng = stream_rng(seed, purpose::CAPACITY);
    let d = sample_capacity(m, bounds.d_lo, bounds.d_hi, &mut cap_rng)?;
    let mut order_rng = stream_rng(seed, purpose::ORDERS);
    let orders = (0..horizon).map(|_| dist.sample(m, &mut order_rng)).collect();
    let capacity = d.iter().map(|di| horizon as f64 * di).collect();
    Ok(Instance { horizon, resource_count: m, capacity, avg_capacity: d, orders, seed, model: dist.tag() })
}

#[cfg(test)]
mod tests {
    use super::*;

    struct ZeroRng;

    impl RngCore for ZeroRng {
        fn next_u32(&mut self) -> u32 {
            0
        }
        fn next_u64(&mut self) -> u64 {
            0
        }
        fn fill_bytes(&mut self, dst: &mut [u8]) {
            dst.fill(0)
        }
    }

    fn mean(xs: &[f64]) -> f64 {
        xs.iter().sum::<f64>() / xs.len() as f64
    }

    fn variance(xs: &[f64]) -> f64 {
        let mu = mean(xs);
        xs.iter().map(|x| (x - mu).powi(2)).sum::<f64>() / (xs.len() - 1) as f64
    }

    #[test]
    fn input_i_ranges() {
        let mut rng = stream_rng(7, 0);
        for _ in 0..1000 {
            let o = sample_input_i(2, &mut rng);
            assert!((0.0..=10.0).contains(&o.reward));
            assert_eq!(o.demand.len(), 2);
            assert!(o.demand.iter().all(|a| (0.0..=2.0).contains(a)));
        }
    }

    #[test]
    fn input_i_zero_stream_hits_lower_endpoints() {
        let o = sample_input_i(3, &mut ZeroRng);
        assert_eq!(o, Order::new(0.0, vec![0.0; 3]));
    }

    #[test]
    fn input_i_moments() {
        let mut rng = stream_rng(11, 0);
        let orders: Vec<Order> = (0..100_000).map(|_| sample_input_i(1, &mut rng)).collect();
        let rewards: Vec<f64> = orders.iter().map(|o| o.reward).collect();
        let demands: Vec<f64> = orders.iter().map(|o| o.demand[0]).collect();
        let mr = mean(&rewards);
        assert!((4.9..=5.1).contains(&mr), "reward mean {mr}");
        let md = mean(&demands);
        assert!((md - 1.0).abs() <= 0.02, "demand mean {md}");
    }

    #[test]
    fn input_ii_reward_is_demand_sum() {
        assert_eq!(input_ii_order(vec![0.3, 0.7]).reward, 1.0);
        assert_eq!(input_ii_order(vec![0.0; 4]).reward, 0.0);
        let mut rng = stream_rng(3, 0);
        for _ in 0..100 {
            let o = sample_input_ii(4, &mut rng);
            assert_eq!(o.reward, o.demand.iter().sum::<f64>());
        }
    }

    #[test]
    fn input_ii_moments() {
        let mut rng = stream_rng(12, 0);
        let r5: Vec<f64> = (0..100_000).map(|_| sample_input_ii(5, &mut rng).reward).collect();
        let m5 = mean(&r5);
        assert!((2.4..=2.6).contains(&m5), "m=5 reward mean {m5}");

        let r1: Vec<f64> = (0..100_000).map(|_| sample_input_ii(1, &mut rng).reward).collect();
        let v1 = variance(&r1);
        assert!((v1 - 1.0).abs() <= 0.05, "m=1 reward variance {v1}");
    }

    #[test]
    fn input_ii_clip() {
        let mut rng = stream_rng(5, 0);
        for _ in 0..2000 {
            let o = sample_input_ii_clipped(3, Some(1.0), &mut rng);
            assert!(o.demand.iter().all(|a| (-1.0..=1.0).contains(a)));
        }
    }

    #[test]
    fn capacity_draws() {
        let mut rng = stream_rng(1, 0);
        let d = sample_capacity(1, 1.0 / 3.0, 2.0 / 3.0, &mut rng).unwrap();
        assert!((1.0 / 3.0..=2.0 / 3.0).contains(&d[0]));

        assert_eq!(sample_capacity(3, 0.5, 0.5, &mut rng).unwrap(), vec![0.5; 3]);

        let draws = sample_capacity(10_000, 1.0 / 3.0, 2.0 / 3.0, &mut rng).unwrap();
        let md = mean(&draws);
        assert!((0.49..=0.51).contains(&md), "capacity mean {md}");
    }

    #[test]
    fn capacity_rejects_bad_bounds() {
        let mut rng = stream_rng(1, 0);
        assert!(sample_capacity(1, 0.0, 0.5, &mut rng).is_err());
        assert!(sample_capacity(1, 0.6, 0.5, &mut rng).is_err());
        assert!(sample_capacity(1, f64::NAN, 0.5, &mut rng).is_err());
        assert!(sample_capacity(0, 0.1, 0.5, &mut rng).is_err());
    }

    #[test]
    fn generated_instance_invariants() {
        let inst = generate_instance(10, 1, InputModel::InputI, 1, CapacityBounds::default()).unwrap();
        assert_eq!(inst.orders.len(), 10);
        assert_eq!(inst.capacity[0], 10.0 * inst.avg_capacity[0]);
        assert!(generate_instance(0, 1, InputModel::InputI, 1, CapacityBounds::default()).is_err());
    }

    #[test]
    fn generation_is_deterministic() {
        let a = generate_instance(50, 3, InputModel::InputII { clip: None }, 99, CapacityBounds::default()).unwrap();
        let b = generate_instance(50, 3, InputModel::InputII { clip: None }, 99, CapacityBounds::default()).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.to_columnar(), b.to_columnar());
    }

    #[test]
    fn distinct_seeds_differ() {
        for s in 0..100u64 {
            let a = generate_instance(1, 2, InputModel::InputI, 2 * s, CapacityBounds::default()).unwrap();
            let b = generate_instance(1, 2, InputModel::InputI, 2 * s + 1, CapacityBounds::default()).unwrap();
            assert_ne!(a.orders[0], b.orders[0], "seed pair {s}");
        }
    }

    #[test]
    fn columnar_round_trip_is_exact() {
        let inst =
            generate_instance(25, 2, InputModel::InputII { clip: Some(1.5) }, 4, CapacityBounds::default()).unwrap();
        let text = inst.to_columnar();
        let back = Instance::from_columnar(text.as_bytes()).unwrap();
        assert_eq!(back, inst);
    }

    #[test]
    fn columnar_rejects_short_body() {
        let text = "T,2\nm,1\nb,1.0\nreward,a1\n1.0,0.5\n";
        assert!(matches!(Instance::from_columnar(text.as_bytes()), Err(Error::Parse { .. })));
        let text = "T,1\nm,2\nb,1.0,1.0\nreward,a1,a2\n1.0,0.5\n";
        assert!(Instance::from_columnar(text.as_bytes()).is_err());
    }
}
