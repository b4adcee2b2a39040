//! Fixed-timestep closed-loop simulation of the collaborative cell.
//!
//! Each step advances, in order: the belt, the operator script, perception,
//! the safety controller, the arm. Distances are measured after the arm moves.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::geometry::{polyline_distance, Blocker, Disc, Segment};
use super::perception::{detection_probability, occlusion_fraction, CameraPose, PerceptionModel};
use super::scenario::{ControllerMode, Scenario};
use super::ssm::{protective_distance, SsmParams};
use super::trace::{Trace, TraceMetrics, TraceStep, CONTACT_EPSILON};
use crate::{Point, Real};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum ObjectState {
    Free,
    Carried,
    Binned,
    Fallen,
}

#[derive(Debug, Clone, Copy)]
struct Object {
    /// Progress along the belt at t = 0; negative while still queued.
    initial: Real,
    state: ObjectState,
    pos: Point,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum HandPhase {
    Rest,
    Approach,
    Dwell,
    Retreat,
    Done,
}

struct Belt {
    start: Point,
    dir: Point,
    length: Real,
    speed: Real,
    /// Progress of the pick station (the belt point nearest the arm base).
    station: Real,
}

impl Belt {
    fn at(&self, progress: Real) -> Point {
        self.start + self.dir * progress
    }

    fn progress(&self, o: &Object, t: Real) -> Real {
        o.initial + self.speed * t
    }
}

struct Arm {
    base: Point,
    l1: Real,
    l2: Real,
    ee: Point,
    elbow: Point,
    speed: Real,
    carrying: Option<usize>,
}

impl Arm {
    fn reach(&self) -> Real {
        self.l1 + self.l2
    }

    /// Elbow-left inverse kinematics; targets outside the annulus are clamped.
    fn solve(&self, target: Point) -> (Point, Point) {
        let r = target - self.base;
        let n = r.norm();
        let inner = (self.l1 - self.l2).abs() + 1e-9;
        let outer = self.reach() - 1e-9;
        let dir = if n > 0.0 { r * (1.0 / n) } else { Point::new(0.0, 1.0) };
        let n = n.clamp(inner, outer);
        let ee = self.base + dir * n;
        let a = (self.l1 * self.l1 - self.l2 * self.l2 + n * n) / (2.0 * n);
        let h = (self.l1 * self.l1 - a * a).max(0.0).sqrt();
        let elbow = self.base + dir * a + dir.perp() * h;
        (ee, elbow)
    }

    fn points(&self) -> [Point; 3] {
        [self.base, self.elbow, self.ee]
    }

    fn links(&self) -> [Segment<Real>; 2] {
        [
            Segment::new(self.base, self.elbow),
            Segment::new(self.elbow, self.ee),
        ]
    }
}

struct Hand {
    rest: Point,
    target: Point,
    pos: Point,
    phase: HandPhase,
    dwell_left: Real,
}

/// Run the scenario and record every step.
///
/// Identical `(scenario, seed)` pairs give bitwise identical traces.
pub fn simulate(scenario: &Scenario, seed: u64) -> Trace {
    let mut steps = Vec::with_capacity(scenario.step_count());
    let summary = run(scenario, seed, |s| steps.push(s));
    Trace { steps, summary }
}

/// Run the scenario keeping only the summary metrics.
pub fn simulate_metrics(scenario: &Scenario, seed: u64) -> TraceMetrics {
    run(scenario, seed, |_| {})
}

fn run(sc: &Scenario, seed: u64, mut record: impl FnMut(TraceStep)) -> TraceMetrics {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let dt = sc.dt;
    let n_steps = sc.step_count();

    let axis = sc.belt.end - sc.belt.start;
    let length = axis.norm();
    let dir = axis * (1.0 / length);
    let mut belt = Belt {
        start: sc.belt.start,
        dir,
        length,
        speed: sc.belt.speed,
        station: 0.0,
    };
    belt.station = (sc.arm.base - belt.start).dot(dir).clamp(0.0, length);
    let station = belt.at(belt.station);

    let mut objects: Vec<Object> = (0..sc.belt.object_count)
        .map(|k| {
            let initial = sc.belt.lead_offset - Real::from(k) * sc.belt.spacing;
            Object {
                initial,
                state: ObjectState::Free,
                pos: belt.at(initial),
            }
        })
        .collect();

    let mut arm = Arm {
        base: sc.arm.base,
        l1: sc.arm.links[0],
        l2: sc.arm.links[1],
        ee: station,
        elbow: station,
        speed: 0.0,
        carrying: None,
    };
    let (ee, elbow) = arm.solve(station);
    arm.ee = ee;
    arm.elbow = elbow;

    let torso = sc.operator.start;
    let foot = {
        let s = (torso - belt.start).dot(dir);
        belt.at(s)
    };
    let toward = (foot - torso).normalized();
    let rest = torso + toward * sc.operator.rest_offset;
    let mut hand = Hand {
        rest,
        // past the belt the reach continues towards the arm base
        target: foot + (sc.arm.base - foot).normalized() * sc.operator.hand_intrusion,
        pos: rest,
        phase: HandPhase::Rest,
        dwell_left: sc.operator.dwell,
    };

    let camera = CameraPose {
        position: sc.camera.position,
        yaw: sc.camera.yaw,
        fov_half_angle: sc.camera.fov_half_angle,
    };
    let perception = PerceptionModel {
        p_base: sc.perception.p_base,
        e_min: sc.perception.e_min,
        e_sat: sc.perception.e_sat,
        contrast_exponent: sc.perception.contrast_exponent,
    };
    let ssm = SsmParams::from(sc);
    let sp = |v: Real| protective_distance(v, &ssm).expect("validated scenario brakes");
    let memory = sc.perception.miss_memory as usize;

    let mut last_seen: Option<(Point, usize)> = None;
    let mut fallen = 0u32;
    let mut min_margin = Real::INFINITY;
    let mut min_distance = Real::INFINITY;
    let mut engaged_steps = 0usize;
    let mut missed_steps = 0usize;
    let mut collision = false;

    for k in 0..n_steps {
        let t = (k + 1) as Real * dt;

        // belt
        for o in objects.iter_mut() {
            if o.state != ObjectState::Free {
                continue;
            }
            let s = belt.progress(o, t);
            if s > belt.length {
                o.state = ObjectState::Fallen;
                fallen += 1;
            }
            o.pos = belt.at(s);
        }

        // operator
        advance_hand(&mut hand, sc.operator.approach_time, sc.operator.hand_speed, t, dt);

        // perception
        let engaged = hand.phase != HandPhase::Rest && hand.phase != HandPhase::Done;
        let occlusion = if sc.perception.ignore_occlusion {
            0.0
        } else {
            let mut blockers: Vec<Blocker<Real>> =
                arm.links().into_iter().map(Blocker::Segment).collect();
            blockers.extend(
                objects
                    .iter()
                    .filter(|o| on_belt(o, &belt, t) || o.state == ObjectState::Carried)
                    .map(|o| {
                        Blocker::Disc(Disc {
                            center: o.pos,
                            radius: sc.belt.object_radius,
                        })
                    }),
            );
            occlusion_fraction(&camera, hand.pos, sc.perception.hand_radius, &blockers)
        };
        let p_detect = detection_probability(
            sc.environment.illuminance,
            sc.environment.contrast,
            occlusion,
            &perception,
        );
        let draw: Real = rng.gen();
        let detected = draw < p_detect;
        if detected {
            last_seen = Some((hand.pos, k));
        }
        if engaged {
            engaged_steps += 1;
            if !detected {
                missed_steps += 1;
            }
        }
        // a held detection is `age` steps old; the hand may have moved since
        let perceived = last_seen
            .filter(|&(_, at)| k - at <= memory)
            .map(|(p, at)| (p, (k - at) as Real));

        // controller
        let (target, v_des) = plan(&arm, &objects, &belt, sc, t);
        let v_task = v_des.min(arm.speed + sc.arm.a_brake * dt).max(0.0);
        let stop = match (sc.controller.mode, perceived) {
            (_, None) => false,
            (ControllerMode::Ssm, Some((h, age))) => {
                let d_seen = polyline_distance(&arm.points(), h);
                let closing = sc.controller.human_speed * (age + 1.0) + v_task;
                d_seen - closing * dt < sp(v_task)
            }
            (ControllerMode::MonitoredStop, Some((h, age))) => {
                let slack = sc.controller.human_speed * (age + 1.0) * dt;
                h.dist(arm.base) <= arm.reach() + sc.controller.clearance + slack
            }
        };
        let v_cmd = if stop {
            (arm.speed - sc.arm.a_brake * dt).max(0.0)
        } else {
            v_task
        };

        // arm
        let v_actual = move_arm(&mut arm, target, v_cmd, dt);
        arm.speed = v_actual;
        if let Some(i) = arm.carrying {
            objects[i].pos = arm.ee;
            if arm.ee.dist(sc.arm.bin) <= sc.arm.pick_radius {
                objects[i].state = ObjectState::Binned;
                arm.carrying = None;
            }
        } else if let Some(i) = objects.iter().position(|o| {
            on_belt(o, &belt, t) && o.pos.dist(arm.ee) <= sc.arm.pick_radius
        }) {
            objects[i].state = ObjectState::Carried;
            objects[i].pos = arm.ee;
            arm.carrying = Some(i);
        }

        // measure
        let pts = arm.points();
        let d = polyline_distance(&pts, hand.pos).min(polyline_distance(&pts, torso));
        let s_p = sp(v_actual);
        let margin = if stop { d } else { d - s_p };
        min_margin = min_margin.min(margin);
        min_distance = min_distance.min(d);
        collision |= d < CONTACT_EPSILON;

        record(TraceStep {
            t,
            d,
            s_p,
            v_r: v_actual,
            detected,
            protective_stop: stop,
            margin,
            ee: arm.ee,
            elbow: arm.elbow,
            hand: hand.pos,
            torso,
            objects: objects
                .iter()
                .filter(|o| on_belt(o, &belt, t))
                .map(|o| o.pos)
                .collect(),
        });
    }

    TraceMetrics {
        min_margin,
        min_distance,
        objects_fallen: fallen,
        detection_miss_ratio: if engaged_steps == 0 {
            0.0
        } else {
            missed_steps as Real / engaged_steps as Real
        },
        collision: u8::from(collision),
    }
}

fn on_belt(o: &Object, belt: &Belt, t: Real) -> bool {
    o.state == ObjectState::Free && belt.progress(o, t) >= 0.0
}

fn advance_hand(hand: &mut Hand, approach_time: Real, speed: Real, t: Real, dt: Real) {
    let step = speed * dt;
    match hand.phase {
        HandPhase::Rest => {
            if t >= approach_time && speed > 0.0 {
                hand.phase = HandPhase::Approach;
                hand.pos = hand.pos.step_towards(hand.target, step);
            }
        }
        HandPhase::Approach => {
            hand.pos = hand.pos.step_towards(hand.target, step);
            if hand.pos == hand.target {
                hand.phase = HandPhase::Dwell;
            }
        }
        HandPhase::Dwell => {
            hand.dwell_left -= dt;
            if hand.dwell_left <= 0.0 {
                hand.phase = HandPhase::Retreat;
            }
        }
        HandPhase::Retreat => {
            hand.pos = hand.pos.step_towards(hand.rest, step);
            if hand.pos == hand.rest {
                hand.phase = HandPhase::Done;
            }
        }
        HandPhase::Done => {}
    }
}

/// Task target and desired end-effector speed.
///
/// The desired speed is the one needed to meet the next object at the pick
/// station (or to return from the bin in time for it), so faster belts demand
/// faster arm motion, capped at `v_max`.
fn plan(arm: &Arm, objects: &[Object], belt: &Belt, sc: &Scenario, t: Real) -> (Point, Real) {
    let v_max = sc.arm.v_max;
    let v_min = sc.arm.min_speed.min(v_max);
    let station = belt.at(belt.station);

    // next free object still upstream of the station, and whether any free
    // object has already passed it
    let upstream = objects
        .iter()
        .filter(|o| o.state == ObjectState::Free)
        .map(|o| belt.progress(o, t))
        .filter(|&s| s <= belt.station)
        .fold(None, |best: Option<Real>, s| Some(best.map_or(s, |b| b.max(s))));
    let time_to_station = |s: Real| {
        if belt.speed > 0.0 {
            (belt.station - s) / belt.speed
        } else {
            Real::INFINITY
        }
    };

    if arm.carrying.is_some() {
        let late = objects
            .iter()
            .any(|o| on_belt(o, belt, t) && belt.progress(o, t) > belt.station && catchable(arm, o, belt, sc, t).is_some());
        let v = if late {
            v_max
        } else {
            match upstream {
                None => v_min,
                Some(s) => {
                    let path = arm.ee.dist(sc.arm.bin) + sc.arm.bin.dist(station);
                    let tau = time_to_station(s);
                    if tau <= 0.0 {
                        v_max
                    } else {
                        (path / tau).clamp(v_min, v_max)
                    }
                }
            }
        };
        return (sc.arm.bin, v);
    }

    // most downstream object that can still be caught
    let mut free: Vec<&Object> = objects
        .iter()
        .filter(|o| o.state == ObjectState::Free)
        .collect();
    free.sort_by(|a, b| b.initial.total_cmp(&a.initial));
    for o in free {
        let s = belt.progress(o, t);
        if s <= belt.station {
            let tau = time_to_station(s);
            let dist = arm.ee.dist(station);
            if dist <= v_max * tau {
                let v = if dist <= 1e-12 {
                    0.0
                } else {
                    (dist / tau).clamp(v_min, v_max)
                };
                return (station, v);
            }
        }
        if s >= 0.0 {
            if let Some(p) = catchable(arm, o, belt, sc, t) {
                return (p, v_max);
            }
        }
    }
    (station, if arm.ee.dist(station) <= 1e-12 { 0.0 } else { v_min })
}

/// Earliest point at which the arm moving at `v_max` meets the object while it
/// is still on the belt and within reach.
fn catchable(arm: &Arm, o: &Object, belt: &Belt, sc: &Scenario, t: Real) -> Option<Point> {
    let s0 = belt.progress(o, t);
    let w = belt.at(s0) - arm.ee;
    let vb = belt.speed;
    let vm = sc.arm.v_max;
    // |w + dir vb tau| = vm tau
    let a = vb * vb - vm * vm;
    let b = 2.0 * vb * w.dot(belt.dir);
    let c = w.dot(w);
    let tau = if c == 0.0 {
        0.0
    } else if a.abs() < 1e-12 {
        if b >= 0.0 {
            return None;
        }
        -c / b
    } else {
        let disc = b * b - 4.0 * a * c;
        if disc < 0.0 {
            return None;
        }
        let sq = disc.sqrt();
        let r1 = (-b - sq) / (2.0 * a);
        let r2 = (-b + sq) / (2.0 * a);
        let mut best = Real::INFINITY;
        for r in [r1, r2] {
            if r >= 0.0 && r < best {
                best = r;
            }
        }
        if !best.is_finite() {
            return None;
        }
        best
    };
    let s = s0 + vb * tau;
    let p = belt.at(s);
    (s <= belt.length && p.dist(arm.base) <= 0.98 * arm.reach()).then_some(p)
}

/// Move the end effector towards `target` so that no arm point travels
/// further than `v_cmd * dt`; returns the resulting robot speed.
fn move_arm(arm: &mut Arm, target: Point, v_cmd: Real, dt: Real) -> Real {
    let budget = v_cmd * dt;
    if budget <= 0.0 {
        return 0.0;
    }
    let desired = arm.ee.step_towards(target, budget);
    let mut frac = 1.0;
    let mut best = (arm.ee, arm.elbow, 0.0);
    for _ in 0..40 {
        let (ee, elbow) = arm.solve(arm.ee.lerp(desired, frac));
        let disp = ee.dist(arm.ee).max(elbow.dist(arm.elbow));
        if disp <= budget * (1.0 + 1e-9) {
            best = (ee, elbow, disp);
            break;
        }
        frac *= budget / disp * (1.0 - 1e-6);
    }
    arm.ee = best.0;
    arm.elbow = best.1;
    best.2 / dt
}
