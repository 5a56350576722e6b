//! Event flows: finite time-ordered sequences of monotone maps.
//!
//! `Φ_I` is the ordered composition of the event maps whose times lie in `I`,
//! so the flow property `Φ_I = Φ_{I₂} ∘ Φ_{I₁}` for `I = I₁ ⊕ I₂` holds by
//! construction. Sampled flows store rotated copies `f_θ` of one shared base
//! map; only the rotation angle is kept per event.

mod interval;
mod trajectory;

pub use interval::Interval;

use std::collections::HashMap;
use std::sync::{Arc, OnceLock};

use rand::Rng as _;
use rand_distr::{Distribution, Exp1};
use serde::{Deserialize, Serialize};

use crate::map_algebra::{compose, same_period, DisturbanceProfile, MonotoneMap, Side};
use crate::rng;
use crate::{Error, Result};

/// Stream reserved for Poisson event times and angles.
const POISSON_STREAM: u64 = 0;
/// Stream for lattice angles; the word position encodes the lattice index.
const LATTICE_STREAM: u64 = 1;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpaceTimePoint {
    pub s: f64,
    pub x: f64,
}

impl SpaceTimePoint {
    pub fn new(s: f64, x: f64) -> Self {
        SpaceTimePoint { s, x }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Embedding {
    Lattice,
    Poisson,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub embedding: Embedding,
    pub rho: f64,
    pub lambda_1: f64,
    pub eps: f64,
    pub seed: u64,
    pub horizon: Interval,
    /// Set when the flow was produced by [`EventFlow::reverse`] an odd number of times.
    #[serde(default)]
    pub reversed: bool,
}

#[derive(Debug)]
struct BaseMap {
    map: MonotoneMap,
    inverse: OnceLock<MonotoneMap>,
}

impl BaseMap {
    fn new(map: MonotoneMap) -> Arc<Self> {
        Arc::new(BaseMap { map, inverse: OnceLock::new() })
    }

    fn inverse(&self) -> &MonotoneMap {
        self.inverse.get_or_init(|| self.map.invert())
    }
}

/// The map `x ↦ base(x − shift) + shift`, i.e. a rotation of a shared base map.
#[derive(Clone, Debug)]
pub struct EventMap {
    base: Arc<BaseMap>,
    shift: f64,
}

impl EventMap {
    pub fn new(map: MonotoneMap) -> Self {
        EventMap { base: BaseMap::new(map), shift: 0.0 }
    }

    pub fn shift(&self) -> f64 {
        self.shift
    }

    pub fn base(&self) -> &MonotoneMap {
        &self.base.map
    }

    #[inline]
    pub fn eval(&self, x: f64, side: Side) -> f64 {
        self.base.map.eval(x - self.shift, side) + self.shift
    }

    #[inline]
    pub fn eval_inverse(&self, y: f64, side: Side) -> f64 {
        self.base.inverse().eval(y - self.shift, side) + self.shift
    }

    /// The event map as an explicit [`MonotoneMap`].
    pub fn materialize(&self) -> MonotoneMap {
        if self.shift == 0.0 {
            self.base.map.clone()
        } else {
            self.base.map.rotate(self.shift)
        }
    }
}

impl PartialEq for EventMap {
    fn eq(&self, other: &Self) -> bool {
        self.shift == other.shift && self.base.map == other.base.map
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Event {
    pub t: f64,
    pub map: EventMap,
}

/// A finite flow sampled on a bounded time horizon.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "FlowJson", into = "FlowJson")]
pub struct EventFlow {
    period: f64,
    horizon: Interval,
    events: Vec<Event>,
    provenance: Option<Provenance>,
}

#[derive(Serialize, Deserialize)]
struct FlowJson {
    period: Option<f64>,
    horizon: Interval,
    #[serde(default)]
    provenance: Option<Provenance>,
    events: Vec<(f64, MonotoneMap)>,
}

impl TryFrom<FlowJson> for EventFlow {
    type Error = Error;

    fn try_from(j: FlowJson) -> Result<Self> {
        let mut f = EventFlow::new(j.period.unwrap_or(f64::INFINITY), j.horizon, j.events)?;
        f.provenance = j.provenance;
        Ok(f)
    }
}

impl From<EventFlow> for FlowJson {
    fn from(f: EventFlow) -> Self {
        FlowJson {
            period: f.period.is_finite().then_some(f.period),
            horizon: f.horizon,
            events: f.events.iter().map(|e| (e.t, e.map.materialize())).collect(),
            provenance: f.provenance,
        }
    }
}

impl EventFlow {
    /// A flow from explicit `(time, map)` events; times must be strictly
    /// increasing and inside the horizon.
    pub fn new(period: f64, horizon: Interval, events: Vec<(f64, MonotoneMap)>) -> Result<Self> {
        let events = events.into_iter().map(|(t, m)| Event { t, map: EventMap::new(m) }).collect();
        EventFlow::from_events(period, horizon, events)
    }

    pub fn from_events(period: f64, horizon: Interval, events: Vec<Event>) -> Result<Self> {
        for w in events.windows(2) {
            if !(w[0].t < w[1].t) {
                return Err(Error::InvalidMap(format!("event times not increasing: {} then {}", w[0].t, w[1].t)));
            }
        }
        for e in &events {
            if !horizon.contains(e.t) {
                return Err(Error::OutsideHorizon(format!("event time {}", e.t), horizon.to_string()));
            }
            if !same_period(e.map.base.map.period(), period) {
                return Err(Error::PeriodMismatch(e.map.base.map.period(), period));
            }
        }
        Ok(EventFlow { period, horizon, events, provenance: None })
    }

    pub fn empty(period: f64, horizon: Interval) -> Self {
        EventFlow { period, horizon, events: Vec::new(), provenance: None }
    }

    pub fn period(&self) -> f64 {
        self.period
    }

    pub fn horizon(&self) -> Interval {
        self.horizon
    }

    pub fn events(&self) -> &[Event] {
        &self.events
    }

    pub fn provenance(&self) -> Option<&Provenance> {
        self.provenance.as_ref()
    }

    pub fn len(&self) -> usize {
        self.events.len()
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }

    pub fn times(&self) -> Vec<f64> {
        self.events.iter().map(|e| e.t).collect()
    }

    /// Indices of the events whose time lies in `iv`.
    pub fn index_range(&self, iv: &Interval) -> std::ops::Range<usize> {
        if iv.is_empty() {
            return 0..0;
        }
        let start = if iv.lo_closed {
            self.events.partition_point(|e| e.t < iv.lo)
        } else {
            self.events.partition_point(|e| e.t <= iv.lo)
        };
        let end = if iv.hi_closed {
            self.events.partition_point(|e| e.t <= iv.hi)
        } else {
            self.events.partition_point(|e| e.t < iv.hi)
        };
        start..end.max(start)
    }

    fn check_within(&self, iv: &Interval) -> Result<()> {
        if iv.is_subset_of(&self.horizon) {
            Ok(())
        } else {
            Err(Error::OutsideHorizon(iv.to_string(), self.horizon.to_string()))
        }
    }

    /// `Φ_I`: the ordered composition of the event maps with time in `I`.
    pub fn flow_map(&self, iv: &Interval) -> Result<MonotoneMap> {
        self.check_within(iv)?;
        let mut m = MonotoneMap::identity(self.period);
        for e in &self.events[self.index_range(iv)] {
            m = compose(&e.map.materialize(), &m)?;
        }
        Ok(m)
    }

    /// The time-reversed flow `φ̂_I = (φ_{−I})⁻¹`: negated times in reverse
    /// order, every map inverted.
    pub fn reverse(&self) -> EventFlow {
        let mut inverted: HashMap<*const BaseMap, Arc<BaseMap>> = HashMap::new();
        let events = self
            .events
            .iter()
            .rev()
            .map(|e| {
                let base = inverted
                    .entry(Arc::as_ptr(&e.map.base))
                    .or_insert_with(|| {
                        let inv = Arc::new(BaseMap {
                            map: e.map.base.inverse().clone(),
                            inverse: OnceLock::new(),
                        });
                        let _ = inv.inverse.set(e.map.base.map.clone());
                        inv
                    })
                    .clone();
                Event { t: -e.t, map: EventMap { base, shift: e.map.shift } }
            })
            .collect();
        EventFlow {
            period: self.period,
            horizon: self.horizon.neg(),
            events,
            provenance: self.provenance.clone().map(|mut p| {
                p.reversed = !p.reversed;
                p
            }),
        }
    }

    /// `Φ^ε_I = σ_ε(Φ_{ε²I})`: times divided by `ε²`, maps scaled by `σ_ε`.
    pub fn rescale(&self, eps: f64) -> Result<EventFlow> {
        if !(eps > 0.0 && eps <= 1.0) {
            return Err(Error::OutOfRange(format!("eps must lie in (0, 1], got {eps}")));
        }
        if eps == 1.0 {
            return Ok(self.clone());
        }
        let c = 1.0 / (eps * eps);
        let mut scaled: HashMap<*const BaseMap, Arc<BaseMap>> = HashMap::new();
        let mut events = Vec::with_capacity(self.events.len());
        for e in &self.events {
            let key = Arc::as_ptr(&e.map.base);
            let base = match scaled.get(&key) {
                Some(b) => b.clone(),
                None => {
                    let b = BaseMap::new(e.map.base.map.scale(eps)?);
                    scaled.insert(key, b.clone());
                    b
                }
            };
            events.push(Event { t: e.t * c, map: EventMap { base, shift: e.map.shift / eps } });
        }
        Ok(EventFlow {
            period: self.period / eps,
            horizon: self.horizon.scale(c),
            events,
            provenance: self.provenance.clone().map(|mut p| {
                p.eps *= eps;
                p.horizon = p.horizon.scale(c);
                p
            }),
        })
    }
}

fn bounded(horizon: &Interval) -> Result<()> {
    if horizon.is_bounded() {
        Ok(())
    } else {
        Err(Error::OutOfRange(format!("horizon {horizon} must be bounded")))
    }
}

fn provenance(profile: &DisturbanceProfile, embedding: Embedding, horizon: Interval, seed: u64) -> Provenance {
    Provenance {
        embedding,
        rho: profile.rho,
        lambda_1: profile.lambda_1,
        eps: 1.0,
        seed,
        horizon,
        reversed: false,
    }
}

/// Word position of the lattice angle `Θ_n`: each `f64` consumes two 32-bit words.
fn lattice_word(n: i64) -> u128 {
    2 * (n as u64 as u128)
}

/// Events `f_{Θ_n}` at the lattice times `n/ρ` inside the horizon. `Θ_n`
/// depends only on `(seed, n)`, so enlarging the horizon keeps existing angles.
pub fn sample_lattice_flow(profile: &DisturbanceProfile, horizon: Interval, seed: u64) -> Result<EventFlow> {
    let base = BaseMap::new(profile.map.clone());
    let mut flow = EventFlow::empty(1.0, horizon);
    flow.provenance = Some(provenance(profile, Embedding::Lattice, horizon, seed));
    if horizon.is_empty() {
        return Ok(flow);
    }
    bounded(&horizon)?;
    let rho = profile.rho;
    let mut r = rng::stream(seed, LATTICE_STREAM);
    let mut n = (horizon.lo * rho).floor() as i64 - 1;
    let mut positioned = false;
    while (n as f64) / rho <= horizon.hi {
        let t = n as f64 / rho;
        if horizon.contains(t) {
            if !positioned || n == 0 {
                r.set_word_pos(lattice_word(n));
                positioned = true;
            }
            let theta = rng::unit_open_closed(&mut r);
            flow.events.push(Event { t, map: EventMap { base: base.clone(), shift: theta } });
        }
        n += 1;
    }
    Ok(flow)
}

/// Events `f_Θ` at the points of a rate-`ρ` Poisson process on the horizon.
pub fn sample_poisson_flow(profile: &DisturbanceProfile, horizon: Interval, seed: u64) -> Result<EventFlow> {
    let base = BaseMap::new(profile.map.clone());
    let mut flow = EventFlow::empty(1.0, horizon);
    flow.provenance = Some(provenance(profile, Embedding::Poisson, horizon, seed));
    if horizon.is_empty() {
        return Ok(flow);
    }
    bounded(&horizon)?;
    let rho = profile.rho;
    let mut r = rng::stream(seed, POISSON_STREAM);
    let mut t = horizon.lo;
    loop {
        let gap: f64 = Exp1.sample(&mut r);
        t += gap / rho;
        if t > horizon.hi {
            break;
        }
        let theta = 1.0 - r.random::<f64>();
        if horizon.contains(t) {
            flow.events.push(Event { t, map: EventMap { base: base.clone(), shift: theta } });
        }
    }
    Ok(flow)
}

pub fn sample_flow(
    profile: &DisturbanceProfile,
    embedding: Embedding,
    horizon: Interval,
    seed: u64,
) -> Result<EventFlow> {
    match embedding {
        Embedding::Lattice => sample_lattice_flow(profile, horizon, seed),
        Embedding::Poisson => sample_poisson_flow(profile, horizon, seed),
    }
}
