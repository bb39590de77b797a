use std::f64::consts::FRAC_PI_3;

use super::{AgentState, A_MAX, B_MAX, HEADWAY_S, STANDSTILL_GAP};
use crate::geometry::{normalize_angle, Vec2};
use crate::scenario::{AgentSpec, IntersectionMap, LightState};

/// Speed-tracking gain, 1/s.
const TRACK_GAIN: f64 = 1.0;
const MAX_CURVATURE: f64 = 1.0 / 3.0;
/// Deceleration above which a yellow light is run rather than obeyed.
const YELLOW_STOP_DECEL: f64 = 3.0;
/// Stop this far before the stop line.
const STOP_MARGIN: f64 = 0.5;
/// Vehicles closer than this (seconds) to the junction claim priority over a waiting vehicle.
const PRIORITY_HORIZON_S: f64 = 2.5;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Command {
    pub accel: f64,
    /// Pure-pursuit target point.
    pub steer_target: Vec2,
    pub curvature: f64,
}

/// Read-only view of the world at the current frame. `states`, `specs` and
/// `completed` are index-aligned.
pub struct WorldView<'a> {
    pub t: f64,
    pub states: &'a [AgentState],
    pub specs: &'a [AgentSpec],
    pub completed: &'a [bool],
    pub map: &'a IntersectionMap,
}

pub fn lookahead_distance(v: f64) -> f64 {
    (0.25 * v + 2.0).clamp(2.0, 5.0)
}

fn heading_diff(a: f64, b: f64) -> f64 {
    normalize_angle(a - b).abs()
}

struct Leader {
    gap: f64,
    closing: f64,
}

/// Nearest agent ahead on `i`'s own path.
fn find_leader(i: usize, w: &WorldView<'_>) -> Option<Leader> {
    let me = &w.states[i];
    let spec = &w.specs[i];
    let traj = &spec.trajectory;
    let look = (3.0 * me.speed + 15.0).max(20.0);
    let partner = spec.role.partner();
    let mut best: Option<Leader> = None;
    for (j, other) in w.states.iter().enumerate() {
        if j == i {
            continue;
        }
        let o_spec = &w.specs[j];
        if partner.is_some() && Some(o_spec.role) == partner {
            continue;
        }
        let p = other.position();
        if p.distance(me.position()) > look + 10.0 {
            continue;
        }
        let (s_o, lat) = traj.project_window(p, me.s, me.s + look);
        if s_o <= me.s || lat.abs() > 1.75 {
            continue;
        }
        let path_yaw = traj.heading_at(s_o);
        let ped = other.class.is_pedestrian();
        let dyaw = heading_diff(other.yaw, path_yaw);
        if !ped && dyaw >= FRAC_PI_3 {
            continue;
        }
        // Projection onto a short window clamps at its far end; ignore those.
        if s_o >= me.s + look - 1e-9 {
            continue;
        }
        let ext = if ped { 0.5 * other.length.max(other.width) } else { 0.5 * other.length };
        let gap = s_o - me.s - 0.5 * me.length - ext;
        let closing = me.speed - other.speed * dyaw.cos();
        if best.as_ref().is_none_or(|b| gap < b.gap) {
            best = Some(Leader { gap, closing });
        }
    }
    best
}

/// Arclength from front bumper to the stop line, if still before it.
fn distance_to_stop(me: &AgentState, spec: &AgentSpec) -> Option<f64> {
    let stop = spec.stop_s?;
    let d = stop - me.s - 0.5 * me.length;
    (d > -0.5 * me.length).then_some(d)
}

/// Whether vehicle `i` may enter the junction now.
fn junction_clear(i: usize, w: &WorldView<'_>) -> bool {
    let me = &w.states[i];
    let jh = w.map.junction_half + 0.5;
    let my_d = distance_to_stop(me, &w.specs[i]).unwrap_or(0.0).max(0.0);
    let my_t = my_d / me.speed.max(0.5);
    for (j, other) in w.states.iter().enumerate() {
        if j == i || w.completed[j] || other.class.is_pedestrian() {
            continue;
        }
        let same_direction = heading_diff(other.yaw, me.yaw) < FRAC_PI_3;
        let p = other.position();
        let inside = p.x.abs() <= jh && p.y.abs() <= jh;
        if inside {
            if same_direction {
                continue; // a leader through the junction is handled by the headway rule
            }
            return false;
        }
        if same_direction {
            continue;
        }
        let o_spec = &w.specs[j];
        let Some(d_o) = distance_to_stop(other, o_spec) else { continue };
        let stopped = other.speed < 0.5;
        if stopped {
            // Unsignalized: among vehicles waiting at their lines, the lowest id goes first.
            if w.map.light_program.is_none() && d_o < 3.0 && o_spec.id < w.specs[i].id {
                return false;
            }
            continue;
        }
        if let (Some(lp), Some(axis)) = (w.map.light_program, o_spec.axis) {
            if !o_spec.role.is_accident() && lp.state(axis, w.t) == LightState::Red {
                continue;
            }
        }
        let t_o = d_o.max(0.0) / other.speed;
        if t_o < PRIORITY_HORIZON_S && t_o <= my_t + 1.0 {
            return false;
        }
    }
    true
}

/// Deceleration command for stopping at the line, or `None` if no stop is
/// required or possible.
fn stop_line_accel(i: usize, w: &WorldView<'_>) -> Option<f64> {
    let me = &w.states[i];
    let spec = &w.specs[i];
    if spec.role.is_accident() || me.class.is_pedestrian() {
        return None;
    }
    let d = distance_to_stop(me, spec)?;
    let v = me.speed;
    if d > 3.0 * v + 10.0 {
        return None;
    }
    let room = (d - STOP_MARGIN).max(0.05);
    let a_req = v * v / (2.0 * room);
    let light = match (w.map.light_program, spec.axis) {
        (Some(lp), Some(axis)) => Some(lp.state(axis, w.t)),
        _ => None,
    };
    let must_stop = match light {
        Some(LightState::Red) => a_req <= B_MAX,
        Some(LightState::Yellow) => a_req <= YELLOW_STOP_DECEL,
        _ => false,
    } || (a_req <= B_MAX && !junction_clear(i, w));
    if !must_stop {
        return None;
    }
    if d - STOP_MARGIN <= 0.3 {
        return Some(-B_MAX);
    }
    // Below a comfortable deceleration keep rolling; otherwise brake to stop at the line.
    if a_req < 1.0 {
        let creep = (2.0 * 1.0 * (d - STOP_MARGIN)).sqrt();
        return Some((TRACK_GAIN * (creep - v)).clamp(-B_MAX, A_MAX));
    }
    Some(-a_req)
}

/// Longitudinal and steering command for agent `i`.
pub fn controller_update(i: usize, w: &WorldView<'_>) -> Command {
    let me = &w.states[i];
    let spec = &w.specs[i];
    let traj = &spec.trajectory;
    let v = me.speed;
    let v_target = traj.target_speed_at(me.s).min(spec.max_speed);
    let mut accel = (TRACK_GAIN * (v_target - v)).clamp(-B_MAX, A_MAX);

    if let Some(l) = find_leader(i, w) {
        let within = l.gap <= HEADWAY_S * v + STANDSTILL_GAP;
        if within && (l.closing > 0.0 || l.gap < STANDSTILL_GAP) {
            accel = -B_MAX;
        } else if within {
            accel = accel.min(0.0);
        }
    }
    if let Some(a) = stop_line_accel(i, w) {
        accel = accel.min(a);
    }

    let ld = lookahead_distance(v);
    let target = traj.point_at(me.s + ld);
    let rel = target - me.position();
    let alpha = normalize_angle(rel.angle() - me.yaw);
    let dist = rel.norm().max(1e-6);
    let curvature = (2.0 * alpha.sin() / dist).clamp(-MAX_CURVATURE, MAX_CURVATURE);
    Command { accel: accel.clamp(-B_MAX, A_MAX), steer_target: target, curvature }
}
