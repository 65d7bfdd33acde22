//! Time-series scenario parsing and the 61 static/dynamic features.
//!
//! Scenario documents are JSON objects whose top-level keys are
//! `TimeStep<k>`. Every timestep carries the ego state, weather and traffic
//! background, a per-class obstacle map (`NPC`, `Pedestrian`,
//! `Static obstacle`, each either an object of participants or the literal
//! string `"None"`), and a collision flag.

use std::collections::BTreeSet;

use serde_json::Value;

use crate::error::{Error, Result};
use crate::metadata::Outcome;

use super::FeatureVector;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ObstacleKind {
    Pedestrian,
    NpcVehicle,
    Static,
}

impl ObstacleKind {
    fn code(self) -> f64 {
        match self {
            ObstacleKind::Pedestrian => 0.0,
            ObstacleKind::NpcVehicle => 1.0,
            ObstacleKind::Static => 2.0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Obstacle {
    pub key: String,
    pub kind: ObstacleKind,
    pub position: [f64; 3],
    pub volume: Option<String>,
    pub operation: Option<String>,
    pub speed: Option<String>,
    pub distance_temp: Option<f64>,
    pub velocity: Option<f64>,
    pub acceleration: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct TimeStep {
    pub index: u64,
    pub position: [f64; 3],
    pub velocity: [f64; 2],
    pub acceleration: [f64; 3],
    pub operation: String,
    pub speed_category: String,
    pub throttle: Option<f64>,
    pub brake: Option<f64>,
    pub steering_rate: Option<f64>,
    pub rain: String,
    pub fog: String,
    pub wetness: String,
    pub time_of_day: String,
    pub traffic_light: String,
    pub sidewalk: String,
    pub obstacles: Vec<Obstacle>,
    pub collision: String,
}

/// A parsed scenario: timesteps sorted by index, strictly increasing.
#[derive(Debug, Clone)]
pub struct ScenarioTimeline {
    pub steps: Vec<TimeStep>,
}

impl ScenarioTimeline {
    /// Unsafe iff any timestep reports a collision flag other than
    /// `NotOccurred`.
    pub fn outcome(&self) -> Outcome {
        if self.steps.iter().any(|s| s.collision != "NotOccurred") {
            Outcome::Unsafe
        } else {
            Outcome::Safe
        }
    }
}

fn num(v: &Value, key: &str) -> f64 {
    v.get(key).and_then(Value::as_f64).unwrap_or(0.0)
}

fn opt_num(v: &Value, key: &str) -> Option<f64> {
    v.get(key).and_then(Value::as_f64)
}

fn text(v: &Value, key: &str) -> String {
    v.get(key)
        .and_then(Value::as_str)
        .unwrap_or("None")
        .to_string()
}

fn parse_obstacles(step: &Value, key: &str, kind: ObstacleKind, out: &mut Vec<Obstacle>) -> Result<()> {
    let Some(section) = step.get(key) else {
        return Ok(());
    };
    let map = match section {
        // "None" (or any string) means no participants of this class.
        Value::String(_) | Value::Null => return Ok(()),
        Value::Object(map) => map,
        _ => return Err(Error::Data(format!("{key} is neither an object nor \"None\""))),
    };
    let mut keys: Vec<&String> = map.keys().collect();
    keys.sort();
    for k in keys {
        let obj = &map[k];
        let pos = obj
            .get("position")
            .ok_or_else(|| Error::Data(format!("obstacle {k} has no position")))?;
        out.push(Obstacle {
            key: k.clone(),
            kind,
            position: [num(pos, "x"), num(pos, "y"), num(pos, "z")],
            volume: obj.get("volume").and_then(Value::as_str).map(String::from),
            operation: obj.get("operation").and_then(Value::as_str).map(String::from),
            speed: obj.get("speed").and_then(Value::as_str).map(String::from),
            distance_temp: opt_num(obj, "distance_temp"),
            velocity: opt_num(obj, "velocity"),
            acceleration: opt_num(obj, "acceleration"),
        });
    }
    Ok(())
}

/// Parse a time-series scenario document.
pub fn parse_scenario_ts(bytes: &[u8]) -> Result<ScenarioTimeline> {
    let doc: Value = serde_json::from_slice(bytes)?;
    let Value::Object(map) = doc else {
        return Err(Error::NotAnObject);
    };
    let mut steps = Vec::with_capacity(map.len());
    for (key, step) in &map {
        let index: u64 = key
            .strip_prefix("TimeStep")
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| Error::UnsortableTimestep(key.clone()))?;
        let ego = step
            .get("Ego_Position")
            .ok_or_else(|| Error::MissingEgoPosition(key.clone()))?;
        let mut obstacles = Vec::new();
        parse_obstacles(step, "NPC", ObstacleKind::NpcVehicle, &mut obstacles)?;
        parse_obstacles(step, "Pedestrian", ObstacleKind::Pedestrian, &mut obstacles)?;
        parse_obstacles(step, "Static obstacle", ObstacleKind::Static, &mut obstacles)?;
        steps.push(TimeStep {
            index,
            position: [num(ego, "px"), num(ego, "py"), num(ego, "pz")],
            velocity: [num(ego, "vx"), num(ego, "vy")],
            acceleration: [num(ego, "ax"), num(ego, "ay"), num(ego, "az")],
            operation: text(step, "Ego_Operation"),
            speed_category: text(step, "Ego_Speed"),
            throttle: opt_num(step, "Ego_Throttle"),
            brake: opt_num(step, "Ego_Brake"),
            steering_rate: opt_num(step, "Ego_SteeringRate"),
            rain: text(step, "Weather[rain]"),
            fog: text(step, "Weather[fog]"),
            wetness: text(step, "Weather[wetness]"),
            time_of_day: text(step, "TimeofDay"),
            traffic_light: text(step, "TrafficRule[Traffic light]"),
            sidewalk: text(step, "TrafficRule[Sidewalk]"),
            obstacles,
            collision: text(step, "CollisionInfoAtTimeStep"),
        });
    }
    if steps.is_empty() {
        return Err(Error::EmptyTimeline);
    }
    steps.sort_by_key(|s| s.index);
    Ok(ScenarioTimeline { steps })
}

/// Ordinal encodings for the categorical vocabulary of the scenario format.
/// Intensity-like categories are ordered scales; operation strings are
/// enumerated alphabetically over the vocabulary observed in the suite.
/// Unknown strings are an error, never silently mapped.
#[derive(Debug, Clone)]
pub struct EncodingTables {
    operations: Vec<String>,
}

impl EncodingTables {
    pub fn with_operations(ops: impl IntoIterator<Item = String>) -> Self {
        let set: BTreeSet<String> = ops.into_iter().collect();
        EncodingTables {
            operations: set.into_iter().collect(),
        }
    }

    fn unknown(field: &str, value: &str) -> Error {
        Error::UnknownCategory {
            field: field.to_string(),
            value: value.to_string(),
        }
    }

    /// First word of a category string, e.g. `"Light rain (0<...)"` -> `light`.
    fn head(s: &str) -> String {
        s.split(|c: char| c == ' ' || c == '(')
            .next()
            .unwrap_or("")
            .to_ascii_lowercase()
    }

    pub fn traffic_light(&self, s: &str) -> Result<f64> {
        match Self::head(s).as_str() {
            "none" => Ok(0.0),
            "green" => Ok(1.0),
            "yellow" | "orange" => Ok(2.0),
            "red" => Ok(3.0),
            _ => Err(Self::unknown("traffic_light", s)),
        }
    }

    pub fn intensity(&self, field: &str, s: &str) -> Result<f64> {
        match Self::head(s).as_str() {
            "none" => Ok(0.0),
            "light" => Ok(1.0),
            "moderate" => Ok(2.0),
            "heavy" => Ok(3.0),
            _ => Err(Self::unknown(field, s)),
        }
    }

    pub fn time_of_day(&self, s: &str) -> Result<f64> {
        match Self::head(s).as_str() {
            "morning" => Ok(0.0),
            "noon" => Ok(1.0),
            "night" => Ok(2.0),
            _ => Err(Self::unknown("time_of_day", s)),
        }
    }

    pub fn speed_category(&self, s: &str) -> Result<f64> {
        match Self::head(s).as_str() {
            "stop" => Ok(0.0),
            "slow" => Ok(1.0),
            "moderate" => Ok(2.0),
            "fast" => Ok(3.0),
            _ => Err(Self::unknown("speed", s)),
        }
    }

    pub fn volume(&self, s: &str) -> Result<f64> {
        match Self::head(s).as_str() {
            "small" => Ok(0.0),
            "medium" => Ok(1.0),
            "large" => Ok(2.0),
            _ => Err(Self::unknown("volume", s)),
        }
    }

    pub fn operation(&self, s: &str) -> Result<f64> {
        self.operations
            .binary_search_by(|o| o.as_str().cmp(s))
            .map(|i| i as f64)
            .map_err(|_| Self::unknown("operation", s))
    }
}

/// Harvest every operation string (ego and obstacles) into `out`.
pub fn collect_operations(timeline: &ScenarioTimeline, out: &mut BTreeSet<String>) {
    for step in &timeline.steps {
        out.insert(step.operation.clone());
        for obs in &step.obstacles {
            if let Some(op) = &obs.operation {
                out.insert(op.clone());
            }
        }
    }
}

const DYNAMIC_FEATURES: [&str; 61] = [
    "AV_acceleration",
    "AV_throttle",
    "AV_brake",
    "AV_steeringRate",
    "AV_speed",
    "AV_velocity",
    "AV_position",
    "num_peds",
    "num_NPCs",
    "num_statObs",
    "tot_obs",
    "is_ped",
    "traffic_light",
    "Sidewalk",
    "rain",
    "fog",
    "wetness",
    "time_of_day",
    "avg_obsDist",
    "max_obsDist",
    "min_obsDist",
    "type_maxDistObs",
    "type_minDistObs",
    "op_maxDistObs",
    "op_minDistObs",
    "vol_minDistObs",
    "speed_minDistObs",
    "dist_minDistObs",
    "avg_obsSpeed",
    "max_obsSpeed",
    "min_obsSpeed",
    "type_maxSpeedObs",
    "type_minSpeedObs",
    "op_maxSpeedObs",
    "op_minSpeedObs",
    "vol_minSpeedObs",
    "speed_minSpeedObs",
    "dist_maxSpeedObs",
    "avg_obsVel",
    "max_obsVel",
    "min_obsVel",
    "type_maxVelObs",
    "type_minVelObs",
    "op_maxVelObs",
    "op_minVelObs",
    "vol_minVelObs",
    "avg_obsAcc",
    "min_obsAcc",
    "max_obsAcc",
    "type_maxAccObs",
    "type_minAccObs",
    "op_maxAccObs",
    "op_minAccObs",
    "vol_maxAccObs",
    "avg_obsVol",
    "max_obsVol",
    "min_obsVol",
    "type_maxVolObs",
    "type_minVolObs",
    "op_maxVolObs",
    "op_minVolObs",
];

/// The 61 feature names of the time-series path, in column order.
pub fn dynamic_feature_names() -> Vec<String> {
    DYNAMIC_FEATURES.iter().map(|s| s.to_string()).collect()
}

/// One (timestep, obstacle) observation in the aggregation pool. Pool order
/// is earliest timestep first, then lowest obstacle key, which is also the
/// tie-break order for arg-min/arg-max selections.
struct Observation {
    dist: f64,
    speed: Option<f64>,
    vel: Option<f64>,
    acc: Option<f64>,
    vol: Option<f64>,
    kind: f64,
    op: Option<f64>,
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Selection helpers over the pool: first strict extremum wins, so ties
/// resolve to the earliest timestep / lowest obstacle key.
fn arg_extremum<'a>(
    pool: &'a [Observation],
    attr: impl Fn(&Observation) -> Option<f64>,
    max: bool,
) -> Option<&'a Observation> {
    let mut best: Option<(&Observation, f64)> = None;
    for obs in pool {
        let Some(v) = attr(obs) else { continue };
        match &best {
            None => best = Some((obs, v)),
            Some((_, bv)) => {
                if (max && v > *bv) || (!max && v < *bv) {
                    best = Some((obs, v));
                }
            }
        }
    }
    best.map(|(o, _)| o)
}

fn stats(
    pool: &[Observation],
    attr: impl Fn(&Observation) -> Option<f64>,
) -> (Option<f64>, Option<f64>, Option<f64>) {
    let vals: Vec<f64> = pool.iter().filter_map(&attr).collect();
    if vals.is_empty() {
        return (None, None, None);
    }
    let avg = vals.iter().sum::<f64>() / vals.len() as f64;
    let max = vals.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let min = vals.iter().cloned().fold(f64::INFINITY, f64::min);
    (Some(avg), Some(max), Some(min))
}

/// Compute the full 61-feature vector for one scenario.
///
/// F1-F7 come from the first timestep's ego state (vector-valued fields
/// reduced to Euclidean magnitude); counts are the maximum simultaneous
/// number of each participant class across timesteps; obstacle statistics
/// aggregate over all (timestep, obstacle) pairs, using `distance_temp`
/// when present and the Euclidean ego-obstacle distance otherwise.
pub fn extract_dynamic_features(
    timeline: &ScenarioTimeline,
    enc: &EncodingTables,
) -> Result<FeatureVector> {
    if timeline.steps.is_empty() {
        return Err(Error::EmptyTimeline);
    }
    let first = &timeline.steps[0];

    let mut num_peds = 0usize;
    let mut num_npcs = 0usize;
    let mut num_stat = 0usize;
    let mut pool: Vec<Observation> = Vec::new();
    for step in &timeline.steps {
        let mut peds = 0;
        let mut npcs = 0;
        let mut stat = 0;
        for obs in &step.obstacles {
            match obs.kind {
                ObstacleKind::Pedestrian => peds += 1,
                ObstacleKind::NpcVehicle => npcs += 1,
                ObstacleKind::Static => stat += 1,
            }
            let dist = match obs.distance_temp {
                Some(d) => d,
                None => {
                    let d = [
                        obs.position[0] - step.position[0],
                        obs.position[1] - step.position[1],
                        obs.position[2] - step.position[2],
                    ];
                    norm(&d)
                }
            };
            pool.push(Observation {
                dist,
                speed: obs.speed.as_deref().map(|s| enc.speed_category(s)).transpose()?,
                vel: obs.velocity,
                acc: obs.acceleration,
                vol: obs.volume.as_deref().map(|s| enc.volume(s)).transpose()?,
                kind: obs.kind.code(),
                op: obs.operation.as_deref().map(|s| enc.operation(s)).transpose()?,
            });
        }
        num_peds = num_peds.max(peds);
        num_npcs = num_npcs.max(npcs);
        num_stat = num_stat.max(stat);
    }
    let tot_obs = num_peds + num_npcs + num_stat;
    let is_ped = (num_peds > 0 && tot_obs > 1) as u8 as f64;

    let (avg_dist, max_dist, min_dist) = stats(&pool, |o| Some(o.dist));
    let max_dist_obs = arg_extremum(&pool, |o| Some(o.dist), true);
    let min_dist_obs = arg_extremum(&pool, |o| Some(o.dist), false);
    let (avg_speed, max_speed, min_speed) = stats(&pool, |o| o.speed);
    let max_speed_obs = arg_extremum(&pool, |o| o.speed, true);
    let min_speed_obs = arg_extremum(&pool, |o| o.speed, false);
    let (avg_vel, max_vel, min_vel) = stats(&pool, |o| o.vel);
    let max_vel_obs = arg_extremum(&pool, |o| o.vel, true);
    let min_vel_obs = arg_extremum(&pool, |o| o.vel, false);
    let (avg_acc, max_acc, min_acc) = stats(&pool, |o| o.acc);
    let max_acc_obs = arg_extremum(&pool, |o| o.acc, true);
    let min_acc_obs = arg_extremum(&pool, |o| o.acc, false);
    let (avg_vol, max_vol, min_vol) = stats(&pool, |o| o.vol);
    let max_vol_obs = arg_extremum(&pool, |o| o.vol, true);
    let min_vol_obs = arg_extremum(&pool, |o| o.vol, false);

    let kind_of = |o: Option<&Observation>| o.map(|o| o.kind);
    let op_of = |o: Option<&Observation>| o.and_then(|o| o.op);
    let vol_of = |o: Option<&Observation>| o.and_then(|o| o.vol);
    let speed_of = |o: Option<&Observation>| o.and_then(|o| o.speed);
    let dist_of = |o: Option<&Observation>| o.map(|o| o.dist);

    let values: Vec<Option<f64>> = vec![
        Some(norm(&first.acceleration)),
        first.throttle,
        first.brake,
        first.steering_rate,
        Some(enc.speed_category(&first.speed_category)?),
        Some(norm(&first.velocity)),
        Some(norm(&first.position)),
        Some(num_peds as f64),
        Some(num_npcs as f64),
        Some(num_stat as f64),
        Some(tot_obs as f64),
        Some(is_ped),
        Some(enc.traffic_light(&first.traffic_light)?),
        Some((EncodingTables::head(&first.sidewalk) != "none") as u8 as f64),
        Some(enc.intensity("rain", &first.rain)?),
        Some(enc.intensity("fog", &first.fog)?),
        Some(enc.intensity("wetness", &first.wetness)?),
        Some(enc.time_of_day(&first.time_of_day)?),
        avg_dist,
        max_dist,
        min_dist,
        kind_of(max_dist_obs),
        kind_of(min_dist_obs),
        op_of(max_dist_obs),
        op_of(min_dist_obs),
        vol_of(min_dist_obs),
        speed_of(min_dist_obs),
        dist_of(min_dist_obs),
        avg_speed,
        max_speed,
        min_speed,
        kind_of(max_speed_obs),
        kind_of(min_speed_obs),
        op_of(max_speed_obs),
        op_of(min_speed_obs),
        vol_of(min_speed_obs),
        speed_of(min_speed_obs),
        dist_of(max_speed_obs),
        avg_vel,
        max_vel,
        min_vel,
        kind_of(max_vel_obs),
        kind_of(min_vel_obs),
        op_of(max_vel_obs),
        op_of(min_vel_obs),
        vol_of(min_vel_obs),
        avg_acc,
        min_acc,
        max_acc,
        kind_of(max_acc_obs),
        kind_of(min_acc_obs),
        op_of(max_acc_obs),
        op_of(min_acc_obs),
        vol_of(max_acc_obs),
        avg_vol,
        max_vol,
        min_vol,
        kind_of(max_vol_obs),
        kind_of(min_vol_obs),
        op_of(max_vol_obs),
        op_of(min_vol_obs),
    ];
    debug_assert_eq!(values.len(), 61);

    Ok(FeatureVector {
        names: dynamic_feature_names(),
        values,
        outcome: timeline.outcome(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    const SAMPLE: &[u8] = include_bytes!("../../tests/data/scenario_timeseries.json");

    fn sample_timeline() -> ScenarioTimeline {
        parse_scenario_ts(SAMPLE).unwrap()
    }

    fn sample_encodings(t: &ScenarioTimeline) -> EncodingTables {
        let mut ops = BTreeSet::new();
        collect_operations(t, &mut ops);
        EncodingTables::with_operations(ops)
    }

    #[test]
    fn sample_has_three_timesteps_with_one_npc() {
        let t = sample_timeline();
        assert_eq!(t.steps.len(), 3);
        assert!(t.steps[0].obstacles.is_empty());
        assert_eq!(t.steps[1].obstacles.len(), 1);
        assert_eq!(t.steps[1].obstacles[0].distance_temp, Some(18.17));
    }

    #[test]
    fn single_timestep_no_obstacles() {
        let doc = br#"{"TimeStep1": {"Ego_Position": {"px": 0, "py": 0, "pz": 0,
            "vx": 0, "vy": 0, "ax": 0, "ay": 0, "az": 0}}}"#;
        let t = parse_scenario_ts(doc).unwrap();
        assert_eq!(t.steps.len(), 1);
        assert!(t.steps[0].obstacles.is_empty());
    }

    #[test]
    fn unsortable_timestep_key_errors() {
        let doc = br#"{"TimeStepX": {"Ego_Position": {}}}"#;
        assert!(matches!(
            parse_scenario_ts(doc),
            Err(Error::UnsortableTimestep(_))
        ));
    }

    #[test]
    fn missing_ego_position_errors() {
        let doc = br#"{"TimeStep1": {"Ego_Operation": "Drive"}}"#;
        assert!(matches!(
            parse_scenario_ts(doc),
            Err(Error::MissingEgoPosition(_))
        ));
    }

    #[test]
    fn sample_counts_and_flags() {
        let t = sample_timeline();
        let fv = extract_dynamic_features(&t, &sample_encodings(&t)).unwrap();
        let get = |name: &str| fv.values[fv.names.iter().position(|n| n == name).unwrap()];
        assert_eq!(get("num_NPCs"), Some(1.0));
        assert_eq!(get("num_peds"), Some(0.0));
        assert_eq!(get("num_statObs"), Some(0.0));
        assert_eq!(get("tot_obs"), Some(1.0));
        assert_eq!(get("is_ped"), Some(0.0));
    }

    #[test]
    fn sample_min_obstacle_distance() {
        let t = sample_timeline();
        let fv = extract_dynamic_features(&t, &sample_encodings(&t)).unwrap();
        let idx = fv.names.iter().position(|n| n == "min_obsDist").unwrap();
        assert_eq!(fv.values[idx], Some(17.88));
        let idx = fv.names.iter().position(|n| n == "max_obsDist").unwrap();
        assert_eq!(fv.values[idx], Some(18.17));
    }

    #[test]
    fn sample_outcome_and_traffic_light() {
        let t = sample_timeline();
        let fv = extract_dynamic_features(&t, &sample_encodings(&t)).unwrap();
        assert_eq!(fv.outcome, Outcome::Safe);
        let idx = fv.names.iter().position(|n| n == "traffic_light").unwrap();
        assert_eq!(fv.values[idx], Some(1.0)); // green at timestep 1
    }

    #[test]
    fn feature_count_is_61() {
        let t = sample_timeline();
        let fv = extract_dynamic_features(&t, &sample_encodings(&t)).unwrap();
        assert_eq!(fv.names.len(), 61);
        assert_eq!(fv.values.len(), 61);
    }

    #[test]
    fn obstacle_distance_bounds_hold() {
        let t = sample_timeline();
        let fv = extract_dynamic_features(&t, &sample_encodings(&t)).unwrap();
        let get = |name: &str| {
            fv.values[fv.names.iter().position(|n| n == name).unwrap()].unwrap()
        };
        assert!(get("min_obsDist") <= get("avg_obsDist"));
        assert!(get("avg_obsDist") <= get("max_obsDist"));
    }

    #[test]
    fn unknown_operation_errors() {
        let t = sample_timeline();
        let enc = EncodingTables::with_operations(["SomethingElse".to_string()]);
        assert!(matches!(
            extract_dynamic_features(&t, &enc),
            Err(Error::UnknownCategory { .. })
        ));
    }

    #[test]
    fn missing_av_controls_are_masked() {
        let t = sample_timeline();
        let fv = extract_dynamic_features(&t, &sample_encodings(&t)).unwrap();
        for name in ["AV_throttle", "AV_brake", "AV_steeringRate"] {
            let idx = fv.names.iter().position(|n| n == name).unwrap();
            assert_eq!(fv.values[idx], None, "{name} should be missing");
        }
    }
}
