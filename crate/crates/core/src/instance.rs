//! Cities, distance matrices, tours, and the event schedule that makes an
//! instance dynamic.
//!
//! Cities carry a stable [`CityId`]; everything hot (distances, pheromone,
//! tours) is indexed by *position* in [`Instance::cities`]. Positions shift
//! when a city is removed, ids never do.

use std::collections::HashSet;
use std::fmt;
use std::path::Path;

use rand::Rng as _;

use crate::error::{Error, Result};
use crate::rng;

pub type CityId = u32;

/// An instance never has fewer cities than this.
pub const MIN_CITIES: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct City {
    pub id: CityId,
    pub x: f64,
    pub y: f64,
}

impl City {
    pub fn new(id: CityId, x: f64, y: f64) -> Self {
        City { id, x, y }
    }
}

/// How coordinates turn into edge weights.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum DistanceConvention {
    /// Exact Euclidean distance in `f64`.
    #[default]
    Euclidean,
    /// TSPLIB `EUC_2D`: Euclidean distance rounded to the nearest integer.
    TsplibEuc2d,
}

impl DistanceConvention {
    fn distance(self, a: &City, b: &City) -> f64 {
        let d = (a.x - b.x).hypot(a.y - b.y);
        match self {
            DistanceConvention::Euclidean => d,
            DistanceConvention::TsplibEuc2d => (d + 0.5).floor(),
        }
    }
}

/// A set of cities plus the symmetric distance matrix over them.
#[derive(Debug, Clone, PartialEq)]
pub struct Instance {
    cities: Vec<City>,
    dist: Vec<f64>,
    convention: DistanceConvention,
}

impl Instance {
    pub fn new(cities: Vec<City>, convention: DistanceConvention) -> Result<Self> {
        if cities.len() < MIN_CITIES {
            return Err(Error::InvalidInstance(format!(
                "need at least {MIN_CITIES} cities, got {}",
                cities.len()
            )));
        }
        let mut seen = HashSet::with_capacity(cities.len());
        for c in &cities {
            if !seen.insert(c.id) {
                return Err(Error::InvalidInstance(format!(
                    "duplicate city id {}",
                    c.id
                )));
            }
            if !c.x.is_finite() || !c.y.is_finite() {
                return Err(Error::InvalidInstance(format!(
                    "city {} has non-finite coordinates",
                    c.id
                )));
            }
        }
        let n = cities.len();
        let mut dist = vec![0.0; n * n];
        for i in 0..n {
            for j in (i + 1)..n {
                let d = convention.distance(&cities[i], &cities[j]);
                if d <= 0.0 {
                    return Err(Error::InvalidInstance(format!(
                        "cities {} and {} are at zero distance",
                        cities[i].id, cities[j].id
                    )));
                }
                dist[i * n + j] = d;
                dist[j * n + i] = d;
            }
        }
        Ok(Instance {
            cities,
            dist,
            convention,
        })
    }

    pub fn len(&self) -> usize {
        self.cities.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cities.is_empty()
    }

    pub fn cities(&self) -> &[City] {
        &self.cities
    }

    pub fn convention(&self) -> DistanceConvention {
        self.convention
    }

    /// Distance between the cities at positions `i` and `j`.
    #[inline]
    pub fn dist(&self, i: usize, j: usize) -> f64 {
        self.dist[i * self.cities.len() + j]
    }

    pub fn position_of(&self, id: CityId) -> Option<usize> {
        self.cities.iter().position(|c| c.id == id)
    }

    pub fn ids(&self) -> Vec<CityId> {
        self.cities.iter().map(|c| c.id).collect()
    }

    /// Closed-cycle length of an order given as positions. The order is not
    /// validated.
    pub fn cycle_length(&self, order: &[usize]) -> f64 {
        if order.is_empty() {
            return 0.0;
        }
        let open: f64 = order.windows(2).map(|w| self.dist(w[0], w[1])).sum();
        open + self.dist(order[order.len() - 1], order[0])
    }

    /// Returns a new instance with the event applied. Distances between
    /// cities the event does not touch are copied, not recomputed.
    pub fn apply(&self, kind: &EventKind) -> Result<Instance> {
        match *kind {
            EventKind::Insert(city) => {
                if self.position_of(city.id).is_some() {
                    return Err(Error::EventApplication(format!(
                        "insert: city {} already present",
                        city.id
                    )));
                }
                if !city.x.is_finite() || !city.y.is_finite() {
                    return Err(Error::EventApplication(format!(
                        "insert: city {} has non-finite coordinates",
                        city.id
                    )));
                }
                let n = self.len();
                let m = n + 1;
                let mut dist = vec![0.0; m * m];
                for i in 0..n {
                    dist[i * m..i * m + n].copy_from_slice(&self.dist[i * n..(i + 1) * n]);
                }
                for i in 0..n {
                    let d = self.convention.distance(&self.cities[i], &city);
                    if d <= 0.0 {
                        return Err(Error::EventApplication(format!(
                            "insert: city {} coincides with city {}",
                            city.id, self.cities[i].id
                        )));
                    }
                    dist[i * m + n] = d;
                    dist[n * m + i] = d;
                }
                let mut cities = self.cities.clone();
                cities.push(city);
                Ok(Instance {
                    cities,
                    dist,
                    convention: self.convention,
                })
            }
            EventKind::Remove(id) => {
                let pos = self
                    .position_of(id)
                    .ok_or_else(|| Error::EventApplication(format!("remove: unknown city {id}")))?;
                let n = self.len();
                if n <= MIN_CITIES {
                    return Err(Error::EventApplication(format!(
                        "remove: instance would drop below {MIN_CITIES} cities"
                    )));
                }
                let m = n - 1;
                let mut dist = Vec::with_capacity(m * m);
                for i in (0..n).filter(|&i| i != pos) {
                    let row = &self.dist[i * n..(i + 1) * n];
                    dist.extend_from_slice(&row[..pos]);
                    dist.extend_from_slice(&row[pos + 1..]);
                }
                let mut cities = self.cities.clone();
                cities.remove(pos);
                Ok(Instance {
                    cities,
                    dist,
                    convention: self.convention,
                })
            }
            EventKind::Move { id, x, y } => {
                let pos = self
                    .position_of(id)
                    .ok_or_else(|| Error::EventApplication(format!("move: unknown city {id}")))?;
                if !x.is_finite() || !y.is_finite() {
                    return Err(Error::EventApplication(format!(
                        "move: non-finite target for city {id}"
                    )));
                }
                let n = self.len();
                let moved = City::new(id, x, y);
                let mut dist = self.dist.clone();
                for i in (0..n).filter(|&i| i != pos) {
                    let d = self.convention.distance(&self.cities[i], &moved);
                    if d <= 0.0 {
                        return Err(Error::EventApplication(format!(
                            "move: city {id} would coincide with city {}",
                            self.cities[i].id
                        )));
                    }
                    dist[i * n + pos] = d;
                    dist[pos * n + i] = d;
                }
                let mut cities = self.cities.clone();
                cities[pos] = moved;
                Ok(Instance {
                    cities,
                    dist,
                    convention: self.convention,
                })
            }
        }
    }
}

/// `n` cities uniform over `[0, width) x [0, height)`, ids `0..n`.
pub fn generate_random_instance(n: usize, bbox: (f64, f64), seed: u64) -> Result<Instance> {
    if n < MIN_CITIES {
        return Err(Error::InvalidInstance(format!(
            "need at least {MIN_CITIES} cities, got {n}"
        )));
    }
    let (width, height) = bbox;
    if !(width > 0.0 && height > 0.0 && width.is_finite() && height.is_finite()) {
        return Err(Error::InvalidInstance(format!(
            "bounding box must be positive, got {width}x{height}"
        )));
    }
    let mut rng = rng::stream(seed, &[0x1257]);
    let cities = (0..n)
        .map(|i| {
            let x = rng.gen::<f64>() * width;
            let y = rng.gen::<f64>() * height;
            City::new(i as CityId, x, y)
        })
        .collect();
    Instance::new(cities, DistanceConvention::Euclidean)
}

pub fn load_instance(path: impl AsRef<Path>) -> Result<Instance> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_instance(&text)
}

/// Parses either the native `N` / `id x y` format or the TSPLIB `EUC_2D`
/// subset. TSPLIB is recognised by a `KEY: value` header or a
/// `NODE_COORD_SECTION` line.
pub fn parse_instance(text: &str) -> Result<Instance> {
    let first = text
        .lines()
        .map(strip_comment)
        .find(|l| !l.is_empty())
        .unwrap_or("");
    if first.contains(':') || first.starts_with("NODE_COORD_SECTION") {
        parse_tsplib(text)
    } else {
        parse_native(text)
    }
}

fn strip_comment(line: &str) -> &str {
    match line.find('#') {
        Some(i) => line[..i].trim(),
        None => line.trim(),
    }
}

fn parse_field<T: std::str::FromStr>(tok: &str, what: &str, line: usize) -> Result<T> {
    tok.parse().map_err(|_| Error::Format {
        line,
        message: format!("cannot parse {what} from {tok:?}"),
    })
}

fn parse_native(text: &str) -> Result<Instance> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, strip_comment(l)))
        .filter(|(_, l)| !l.is_empty());

    let (count_line, count) = lines.next().ok_or(Error::Format {
        line: 1,
        message: "empty instance file".into(),
    })?;
    let n: usize = parse_field(count, "city count", count_line)?;
    let mut cities = Vec::with_capacity(n);
    for (lineno, line) in lines {
        let toks: Vec<&str> = line.split_whitespace().collect();
        if toks.len() != 3 {
            return Err(Error::Format {
                line: lineno,
                message: format!("expected `id x y`, got {} fields", toks.len()),
            });
        }
        if cities.len() == n {
            return Err(Error::Format {
                line: lineno,
                message: format!("more than the declared {n} cities"),
            });
        }
        cities.push(City::new(
            parse_field(toks[0], "city id", lineno)?,
            parse_field(toks[1], "x coordinate", lineno)?,
            parse_field(toks[2], "y coordinate", lineno)?,
        ));
    }
    if cities.len() != n {
        return Err(Error::Format {
            line: text.lines().count().max(1),
            message: format!("declared {n} cities, found {}", cities.len()),
        });
    }
    Instance::new(cities, DistanceConvention::Euclidean)
}

fn parse_tsplib(text: &str) -> Result<Instance> {
    let mut dimension: Option<usize> = None;
    let mut in_coords = false;
    let mut cities = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let lineno = idx + 1;
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        if line == "EOF" {
            break;
        }
        if in_coords {
            let toks: Vec<&str> = line.split_whitespace().collect();
            if toks.len() != 3 {
                return Err(Error::Format {
                    line: lineno,
                    message: format!("expected `id x y` in NODE_COORD_SECTION, got {line:?}"),
                });
            }
            cities.push(City::new(
                parse_field(toks[0], "node id", lineno)?,
                parse_field(toks[1], "x coordinate", lineno)?,
                parse_field(toks[2], "y coordinate", lineno)?,
            ));
            continue;
        }
        if line.starts_with("NODE_COORD_SECTION") {
            in_coords = true;
            continue;
        }
        let (key, value) = line.split_once(':').ok_or_else(|| Error::Format {
            line: lineno,
            message: format!("expected `KEY: value`, got {line:?}"),
        })?;
        let value = value.trim();
        match key.trim() {
            "TYPE" if value != "TSP" => {
                return Err(Error::Format {
                    line: lineno,
                    message: format!("unsupported TYPE {value:?}"),
                })
            }
            "EDGE_WEIGHT_TYPE" if value != "EUC_2D" => {
                return Err(Error::Format {
                    line: lineno,
                    message: format!("unsupported EDGE_WEIGHT_TYPE {value:?}"),
                })
            }
            "DIMENSION" => dimension = Some(parse_field(value, "DIMENSION", lineno)?),
            _ => {}
        }
    }
    if !in_coords {
        return Err(Error::Format {
            line: text.lines().count().max(1),
            message: "missing NODE_COORD_SECTION".into(),
        });
    }
    if let Some(d) = dimension {
        if d != cities.len() {
            return Err(Error::Format {
                line: text.lines().count().max(1),
                message: format!("DIMENSION {d} but {} nodes listed", cities.len()),
            });
        }
    }
    Instance::new(cities, DistanceConvention::TsplibEuc2d)
}

/// Validates that `ids` names every current city exactly once and returns
/// the corresponding positions.
fn positions_of(inst: &Instance, ids: &[CityId]) -> Result<Vec<usize>> {
    if ids.len() != inst.len() {
        return Err(Error::InvalidTour(format!(
            "expected {} cities, got {}",
            inst.len(),
            ids.len()
        )));
    }
    let mut seen = vec![false; inst.len()];
    ids.iter()
        .map(|&id| {
            let p = inst
                .position_of(id)
                .ok_or_else(|| Error::InvalidTour(format!("unknown city {id}")))?;
            if std::mem::replace(&mut seen[p], true) {
                return Err(Error::InvalidTour(format!("city {id} visited twice")));
            }
            Ok(p)
        })
        .collect()
}

/// Closed-tour length for an order given as city ids.
pub fn tour_length(inst: &Instance, ids: &[CityId]) -> Result<f64> {
    Ok(inst.cycle_length(&positions_of(inst, ids)?))
}

/// A Hamiltonian cycle over an instance's cities, stored as positions, with
/// its cached length.
#[derive(Debug, Clone, PartialEq)]
pub struct Tour {
    order: Vec<usize>,
    length: f64,
}

impl Tour {
    pub fn new(inst: &Instance, order: Vec<usize>) -> Result<Self> {
        check_permutation(inst.len(), &order)?;
        let length = inst.cycle_length(&order);
        Ok(Tour { order, length })
    }

    pub fn from_ids(inst: &Instance, ids: &[CityId]) -> Result<Self> {
        let order = positions_of(inst, ids)?;
        let length = inst.cycle_length(&order);
        Ok(Tour { order, length })
    }

    /// For callers that already guarantee a permutation.
    pub(crate) fn from_parts(order: Vec<usize>, length: f64) -> Self {
        debug_assert!(check_permutation(order.len(), &order).is_ok());
        Tour { order, length }
    }

    pub fn order(&self) -> &[usize] {
        &self.order
    }

    pub fn length(&self) -> f64 {
        self.length
    }

    pub fn len(&self) -> usize {
        self.order.len()
    }

    pub fn is_empty(&self) -> bool {
        self.order.is_empty()
    }

    pub fn city_ids(&self, inst: &Instance) -> Vec<CityId> {
        self.order.iter().map(|&p| inst.cities()[p].id).collect()
    }

    /// Checks the permutation and cached-length invariants against `inst`.
    pub fn validate(&self, inst: &Instance) -> Result<()> {
        check_permutation(inst.len(), &self.order)?;
        let fresh = inst.cycle_length(&self.order);
        if (fresh - self.length).abs() > 1e-9 * fresh.abs().max(1.0) {
            return Err(Error::InvalidTour(format!(
                "cached length {} disagrees with recomputed {fresh}",
                self.length
            )));
        }
        Ok(())
    }

    /// Re-evaluates the length after coordinates changed but the city set
    /// did not.
    pub fn recomputed(&self, inst: &Instance) -> Result<Tour> {
        Tour::new(inst, self.order.clone())
    }
}

pub(crate) fn check_permutation(n: usize, order: &[usize]) -> Result<()> {
    if order.len() != n {
        return Err(Error::InvalidTour(format!(
            "expected {n} cities, got {}",
            order.len()
        )));
    }
    let mut seen = vec![false; n];
    for &p in order {
        if p >= n {
            return Err(Error::InvalidTour(format!("position {p} out of range")));
        }
        if std::mem::replace(&mut seen[p], true) {
            return Err(Error::InvalidTour(format!("position {p} visited twice")));
        }
    }
    Ok(())
}

/// Greedy nearest-unvisited construction. Equal distances go to the lowest
/// city id.
pub fn nearest_neighbor_tour(inst: &Instance, start: CityId) -> Result<Tour> {
    let start = inst
        .position_of(start)
        .ok_or_else(|| Error::InvalidArgument(format!("unknown start city {start}")))?;
    let n = inst.len();
    let mut visited = vec![false; n];
    let mut order = Vec::with_capacity(n);
    let mut current = start;
    visited[current] = true;
    order.push(current);
    while order.len() < n {
        let next = (0..n)
            .filter(|&j| !visited[j])
            .min_by(|&a, &b| {
                inst.dist(current, a)
                    .total_cmp(&inst.dist(current, b))
                    .then(inst.cities[a].id.cmp(&inst.cities[b].id))
            })
            .expect("unvisited city remains");
        visited[next] = true;
        order.push(next);
        current = next;
    }
    let length = inst.cycle_length(&order);
    Ok(Tour::from_parts(order, length))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum EventKind {
    Insert(City),
    Remove(CityId),
    Move { id: CityId, x: f64, y: f64 },
}

impl EventKind {
    /// Whether the event changes which cities exist (as opposed to where).
    pub fn changes_city_set(&self) -> bool {
        !matches!(self, EventKind::Move { .. })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DynamicEvent {
    pub at_iteration: usize,
    pub kind: EventKind,
}

impl fmt::Display for DynamicEvent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.kind {
            EventKind::Insert(c) => {
                write!(f, "{} insert {} {} {}", self.at_iteration, c.id, c.x, c.y)
            }
            EventKind::Remove(id) => write!(f, "{} remove {id}", self.at_iteration),
            EventKind::Move { id, x, y } => write!(f, "{} move {id} {x} {y}", self.at_iteration),
        }
    }
}

pub fn apply_event(inst: &Instance, ev: &DynamicEvent) -> Result<Instance> {
    inst.apply(&ev.kind)
}

/// Events sorted by iteration; ties keep their list order.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct EventSchedule {
    events: Vec<DynamicEvent>,
}

impl EventSchedule {
    pub fn empty() -> Self {
        EventSchedule::default()
    }

    pub fn new(events: Vec<DynamicEvent>) -> Result<Self> {
        if let Some(ev) = events.iter().find(|e| e.at_iteration < 1) {
            return Err(Error::InvalidArgument(format!(
                "event `{ev}` must be at iteration >= 1"
            )));
        }
        if events
            .windows(2)
            .any(|w| w[0].at_iteration > w[1].at_iteration)
        {
            return Err(Error::InvalidArgument(
                "events must be sorted by iteration".into(),
            ));
        }
        Ok(EventSchedule { events })
    }

    pub fn events(&self) -> &[DynamicEvent] {
        &self.events
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }

    /// Events that fire at the start of `iteration`, in application order.
    pub fn due(&self, iteration: usize) -> &[DynamicEvent] {
        let lo = self.events.partition_point(|e| e.at_iteration < iteration);
        let hi = self.events.partition_point(|e| e.at_iteration <= iteration);
        &self.events[lo..hi]
    }

    /// Replays the whole schedule on `base`, returning the final instance.
    pub fn validate_against(&self, base: &Instance) -> Result<Instance> {
        self.events
            .iter()
            .try_fold(base.clone(), |inst, ev| apply_event(&inst, ev))
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut events = Vec::new();
        for (idx, raw) in text.lines().enumerate() {
            let lineno = idx + 1;
            let line = strip_comment(raw);
            if line.is_empty() {
                continue;
            }
            let toks: Vec<&str> = line.split_whitespace().collect();
            let bad_arity = |want: usize| Error::Format {
                line: lineno,
                message: format!("`{}` takes {want} fields, got {}", toks[1], toks.len()),
            };
            if toks.len() < 3 {
                return Err(Error::Format {
                    line: lineno,
                    message: format!("expected `iter kind id ...`, got {line:?}"),
                });
            }
            let at_iteration = parse_field(toks[0], "iteration", lineno)?;
            let id = parse_field(toks[2], "city id", lineno)?;
            let kind = match toks[1] {
                "insert" => {
                    if toks.len() != 5 {
                        return Err(bad_arity(5));
                    }
                    EventKind::Insert(City::new(
                        id,
                        parse_field(toks[3], "x coordinate", lineno)?,
                        parse_field(toks[4], "y coordinate", lineno)?,
                    ))
                }
                "remove" => {
                    if toks.len() != 3 {
                        return Err(bad_arity(3));
                    }
                    EventKind::Remove(id)
                }
                "move" => {
                    if toks.len() != 5 {
                        return Err(bad_arity(5));
                    }
                    EventKind::Move {
                        id,
                        x: parse_field(toks[3], "x coordinate", lineno)?,
                        y: parse_field(toks[4], "y coordinate", lineno)?,
                    }
                }
                other => {
                    return Err(Error::Format {
                        line: lineno,
                        message: format!("unknown event kind {other:?}"),
                    })
                }
            };
            if at_iteration < 1 {
                return Err(Error::Format {
                    line: lineno,
                    message: "event iteration must be >= 1".into(),
                });
            }
            if events
                .last()
                .is_some_and(|e: &DynamicEvent| e.at_iteration > at_iteration)
            {
                return Err(Error::Format {
                    line: lineno,
                    message: "events must be sorted by iteration".into(),
                });
            }
            events.push(DynamicEvent { at_iteration, kind });
        }
        Ok(EventSchedule { events })
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        EventSchedule::parse(&text)
    }
}
