//! Logistics: trucks move within a city, planes fly between city airports,
//! and packages ride along with whichever vehicle leaves their location.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::Error;
use crate::rng::SeededRng;
use crate::types::{Action, EnvId, InvalidReason, Param, State, StepOutcome, Tool};

pub const DEFAULT_CITIES: usize = 2;
pub const DEFAULT_LOCS_PER_CITY: usize = 3;

pub type LocationId = u32;

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct City {
    pub id: u32,
    pub locations: Vec<LocationId>,
    pub airport: LocationId,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LogState {
    pub cities: Vec<City>,
    pub trucks: BTreeMap<String, LocationId>,
    pub planes: BTreeMap<String, LocationId>,
    pub packages: BTreeMap<String, LocationId>,
}

impl LogState {
    pub fn canonical(&self) -> Self {
        let mut out = self.clone();
        for c in &mut out.cities {
            c.locations.sort_unstable();
        }
        out.cities.sort();
        out
    }

    pub fn validate(&self) -> Result<(), Error> {
        let bad = |detail: String| {
            Err(Error::MalformedState {
                env: EnvId::Log,
                detail,
            })
        };
        let mut seen = BTreeMap::new();
        for city in &self.cities {
            if !city.locations.contains(&city.airport) {
                return bad(format!("airport of city {} is not one of its locations", city.id));
            }
            for &l in &city.locations {
                if seen.insert(l, city.id).is_some() {
                    return bad(format!("location {l} belongs to two cities"));
                }
            }
        }
        let known = |l: &LocationId| seen.contains_key(l);
        if let Some((id, l)) = self
            .trucks
            .iter()
            .chain(&self.packages)
            .find(|(_, l)| !known(l))
        {
            return bad(format!("{id} at unknown location {l}"));
        }
        if let Some((id, l)) = self.planes.iter().find(|(_, &l)| !self.is_airport(l)) {
            return bad(format!("plane {id} at non-airport location {l}"));
        }
        Ok(())
    }

    pub fn city_of(&self, loc: LocationId) -> Option<&City> {
        self.cities.iter().find(|c| c.locations.contains(&loc))
    }

    pub fn is_airport(&self, loc: LocationId) -> bool {
        self.cities.iter().any(|c| c.airport == loc)
    }

    pub fn locations(&self) -> Vec<LocationId> {
        let mut all: Vec<LocationId> = self
            .cities
            .iter()
            .flat_map(|c| c.locations.iter().copied())
            .collect();
        all.sort_unstable();
        all
    }

    pub fn render(&self) -> String {
        let list = |kind: &str, m: &BTreeMap<String, LocationId>| -> Vec<String> {
            m.iter().map(|(id, l)| format!("{kind} {id} at {l}")).collect()
        };
        let mut parts = list("truck", &self.trucks);
        parts.extend(list("plane", &self.planes));
        parts.extend(list("package", &self.packages));
        parts.join(", ")
    }

    /// City layout for agent prompts; it never changes within an instance.
    pub fn render_layout(&self) -> String {
        self.canonical()
            .cities
            .iter()
            .map(|c| {
                let locs: Vec<String> = c.locations.iter().map(|l| l.to_string()).collect();
                format!(
                    "city {} has locations {} (airport {})",
                    c.id,
                    locs.join(","),
                    c.airport
                )
            })
            .collect::<Vec<_>>()
            .join("; ")
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LogGoal {
    pub package: String,
    pub target_location: LocationId,
}

impl LogGoal {
    pub fn validate_for(&self, state: &LogState) -> Result<(), Error> {
        if !state.packages.contains_key(&self.package) {
            return Err(Error::InstanceParams(format!("unknown package {}", self.package)));
        }
        if state.city_of(self.target_location).is_none() {
            return Err(Error::InstanceParams(format!(
                "unknown target location {}",
                self.target_location
            )));
        }
        Ok(())
    }

    pub fn render(&self) -> String {
        format!("package {} at location {}", self.package, self.target_location)
    }
}

fn route_params(action: &Action) -> Result<(LocationId, LocationId), InvalidReason> {
    match action.params.as_slice() {
        [Param::Loc(a), Param::Loc(b)] => Ok((*a, *b)),
        _ => Err(InvalidReason::BadParams),
    }
}

pub fn step(state: &LogState, action: &Action) -> Result<LogState, InvalidReason> {
    if !matches!(action.tool, Tool::Truck | Tool::Plane) {
        return Err(InvalidReason::UnknownTool);
    }
    let (from, to) = route_params(action)?;
    let from_city = state.city_of(from).ok_or(InvalidReason::UnknownLocation)?;
    let to_city = state.city_of(to).ok_or(InvalidReason::UnknownLocation)?;
    if from == to {
        return Err(InvalidReason::SameLocation);
    }
    let mut next = state.clone();
    let fleet = if action.tool == Tool::Truck {
        if from_city.id != to_city.id {
            return Err(InvalidReason::CrossCityTruck);
        }
        &mut next.trucks
    } else {
        if from_city.id == to_city.id {
            return Err(InvalidReason::SameCityPlane);
        }
        if from_city.airport != from || to_city.airport != to {
            return Err(InvalidReason::NotAirport);
        }
        &mut next.planes
    };
    // The lowest-id vehicle at `from` makes the trip.
    let vehicle = fleet
        .values_mut()
        .find(|l| **l == from)
        .ok_or(InvalidReason::NoVehicleAtStart)?;
    *vehicle = to;
    for loc in next.packages.values_mut() {
        if *loc == from {
            *loc = to;
        }
    }
    Ok(next)
}

/// Every ordered location pair for `Truck`, then for `Plane`.
pub fn candidates(state: &LogState) -> Vec<Action> {
    let locs = state.locations();
    let mut out = Vec::with_capacity(2 * locs.len() * locs.len());
    for ctor in [Action::truck as fn(u32, u32) -> Action, Action::plane] {
        for &a in &locs {
            for &b in &locs {
                out.push(ctor(a, b));
            }
        }
    }
    out
}

pub fn enumerate_actions(state: &LogState) -> Vec<(Action, StepOutcome)> {
    candidates(state)
        .into_iter()
        .map(|a| {
            let outcome = match step(state, &a) {
                Ok(next) => StepOutcome::Success {
                    state_after: State::Log(next),
                },
                Err(reason) => StepOutcome::Invalid { reason },
            };
            (a, outcome)
        })
        .collect()
}

pub fn successors(state: &LogState) -> Vec<(Action, LogState)> {
    candidates(state)
        .into_iter()
        .filter_map(|a| step(state, &a).ok().map(|s| (a, s)))
        .collect()
}

pub fn is_goal(state: &LogState, goal: &LogGoal) -> bool {
    state.packages.get(&goal.package) == Some(&goal.target_location)
}

/// Random instance: city `c` owns locations `(c-1)*L+1 ..= c*L` with a random
/// airport, one truck per city, one plane and one package, and a target
/// location different from the package's start.
pub fn sample_instance(
    seed: u64,
    n_cities: usize,
    locs_per_city: usize,
) -> Result<(LogState, LogGoal), Error> {
    if n_cities < 1 || locs_per_city < 2 {
        return Err(Error::InstanceParams(format!(
            "need n_cities >= 1 and locs_per_city >= 2, got {n_cities} x {locs_per_city}"
        )));
    }
    if n_cities * locs_per_city > 10_000 {
        return Err(Error::InstanceParams("instance too large".into()));
    }
    let mut rng = SeededRng::new(seed);
    let l = locs_per_city as u32;
    let cities: Vec<City> = (1..=n_cities as u32)
        .map(|id| {
            let locations: Vec<u32> = ((id - 1) * l + 1..=id * l).collect();
            let airport = *rng.choose(&locations).unwrap();
            City {
                id,
                locations,
                airport,
            }
        })
        .collect();
    let trucks = cities
        .iter()
        .map(|c| (format!("t{}", c.id), *rng.choose(&c.locations).unwrap()))
        .collect();
    let plane_city = &cities[rng.index(cities.len())];
    let planes = BTreeMap::from([("p1".to_string(), plane_city.airport)]);
    let all: Vec<u32> = (1..=n_cities as u32 * l).collect();
    let start = *rng.choose(&all).unwrap();
    let others: Vec<u32> = all.iter().copied().filter(|&x| x != start).collect();
    let target = *rng.choose(&others).unwrap();
    let state = LogState {
        cities,
        trucks,
        planes,
        packages: BTreeMap::from([("pkg1".to_string(), start)]),
    };
    let goal = LogGoal {
        package: "pkg1".into(),
        target_location: target,
    };
    Ok((state, goal))
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;

    /// Two cities: {1,2,3} with airport 2 and {4,5,6} with airport 4.
    pub(crate) fn fixture(trucks: &[(&str, u32)], planes: &[(&str, u32)], pkg: u32) -> LogState {
        let m = |xs: &[(&str, u32)]| xs.iter().map(|(k, v)| (k.to_string(), *v)).collect();
        LogState {
            cities: vec![
                City {
                    id: 1,
                    locations: vec![1, 2, 3],
                    airport: 2,
                },
                City {
                    id: 2,
                    locations: vec![4, 5, 6],
                    airport: 4,
                },
            ],
            trucks: m(trucks),
            planes: m(planes),
            packages: BTreeMap::from([("pkg1".to_string(), pkg)]),
        }
    }

    #[test]
    fn truck_carries_package() {
        let s = fixture(&[("t1", 1)], &[], 1);
        let n = step(&s, &Action::truck(1, 2)).unwrap();
        assert_eq!(n.trucks["t1"], 2);
        assert_eq!(n.packages["pkg1"], 2);
    }

    #[test]
    fn reason_codes() {
        let s = fixture(&[("t1", 1), ("t2", 5)], &[("p1", 4)], 1);
        assert_eq!(step(&s, &Action::plane(2, 4)), Err(InvalidReason::NoVehicleAtStart));
        assert_eq!(step(&s, &Action::truck(1, 1)), Err(InvalidReason::SameLocation));
        assert_eq!(step(&s, &Action::truck(1, 4)), Err(InvalidReason::CrossCityTruck));
        assert_eq!(step(&s, &Action::plane(4, 6)), Err(InvalidReason::SameCityPlane));
        assert_eq!(step(&s, &Action::plane(4, 3)), Err(InvalidReason::NotAirport));
        assert_eq!(step(&s, &Action::truck(1, 9)), Err(InvalidReason::UnknownLocation));
        assert_eq!(
            step(&s, &Action::new(Tool::Truck, vec![Param::Loc(1)])),
            Err(InvalidReason::BadParams)
        );
        assert_eq!(step(&s, &Action::add('a')), Err(InvalidReason::UnknownTool));
    }

    #[test]
    fn enumeration_examples() {
        let one_city = LogState {
            cities: vec![City {
                id: 1,
                locations: vec![1, 2, 3],
                airport: 1,
            }],
            trucks: BTreeMap::from([("t1".to_string(), 1)]),
            planes: BTreeMap::new(),
            packages: BTreeMap::from([("pkg1".to_string(), 3)]),
        };
        let exec: Vec<Action> = successors(&one_city).into_iter().map(|(a, _)| a).collect();
        assert_eq!(exec, [Action::truck(1, 2), Action::truck(1, 3)]);

        let two = LogState {
            cities: vec![
                City {
                    id: 1,
                    locations: vec![1, 2],
                    airport: 1,
                },
                City {
                    id: 2,
                    locations: vec![3, 4],
                    airport: 3,
                },
            ],
            trucks: BTreeMap::new(),
            planes: BTreeMap::from([("p1".to_string(), 1)]),
            packages: BTreeMap::from([("pkg1".to_string(), 2)]),
        };
        let exec: Vec<Action> = successors(&two).into_iter().map(|(a, _)| a).collect();
        assert_eq!(exec, [Action::plane(1, 3)]);
    }

    #[test]
    fn goal_after_route() {
        let mut s = fixture(&[("t1", 1), ("t2", 4)], &[("p1", 2)], 1);
        for a in [Action::truck(1, 2), Action::plane(2, 4), Action::truck(4, 5)] {
            s = step(&s, &a).unwrap();
        }
        let goal = LogGoal {
            package: "pkg1".into(),
            target_location: 5,
        };
        assert!(is_goal(&s, &goal));
    }

    #[test]
    fn sampled_instances() {
        assert_eq!(sample_instance(4, 2, 3).unwrap(), sample_instance(4, 2, 3).unwrap());
        assert!(sample_instance(4, 0, 3).is_err());
        assert!(sample_instance(4, 2, 1).is_err());
        for seed in 0..500 {
            let (s, g) = sample_instance(seed, 2, 3).unwrap();
            s.validate().unwrap();
            g.validate_for(&s).unwrap();
            assert!(!is_goal(&s, &g));
            assert!(s.planes.values().all(|&l| s.is_airport(l)));
            assert_eq!(s.trucks.len(), 2);
        }
    }

    #[test]
    fn state_json_shape() {
        let s = fixture(&[("t1", 1)], &[("p1", 2)], 1);
        let v = serde_json::to_value(&s).unwrap();
        assert_eq!(v["cities"][0], serde_json::json!({"id":1,"locations":[1,2,3],"airport":2}));
        assert_eq!(v["trucks"], serde_json::json!({"t1": 1}));
        assert_eq!(v["packages"], serde_json::json!({"pkg1": 1}));
    }
}
